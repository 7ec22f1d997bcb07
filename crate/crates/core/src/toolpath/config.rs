use std::str::FromStr;

use super::ToolpathError;

/// Printer and slicing parameters. All lengths in mm, speeds in mm/min.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrintConfig {
    pub layer_thickness: f64,
    pub extrusion_width: f64,
    pub filament_diameter: f64,
    /// Infill density in `[0, 1]`; 0 prints a hollow shell.
    pub fill_fraction: f64,
    pub raft_layers: u32,
    pub support_overhang_deg: f64,
    pub travel_speed: f64,
    pub extrude_speed: f64,
    pub extruder_temp: f64,
    pub raft_margin: f64,
}

impl Default for PrintConfig {
    fn default() -> Self {
        Self {
            layer_thickness: 0.2,
            extrusion_width: 0.4,
            filament_diameter: 1.75,
            fill_fraction: 0.2,
            raft_layers: 0,
            support_overhang_deg: 45.0,
            travel_speed: 3000.0,
            extrude_speed: 1200.0,
            extruder_temp: 200.0,
            raft_margin: 3.0,
        }
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ToolpathError {
    ToolpathError::InvalidConfig {
        field,
        reason: reason.into(),
    }
}

impl PrintConfig {
    pub fn validate(&self) -> Result<(), ToolpathError> {
        let positive = [
            ("layer_thickness", self.layer_thickness),
            ("extrusion_width", self.extrusion_width),
            ("filament_diameter", self.filament_diameter),
            ("travel_speed", self.travel_speed),
            ("extrude_speed", self.extrude_speed),
            ("extruder_temp", self.extruder_temp),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(field, format!("must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.fill_fraction) {
            return Err(invalid(
                "fill_fraction",
                format!("must be in [0, 1], got {}", self.fill_fraction),
            ));
        }
        if !(self.support_overhang_deg > 0.0 && self.support_overhang_deg < 90.0) {
            return Err(invalid(
                "support_overhang_deg",
                format!(
                    "must be strictly between 0 and 90, got {}",
                    self.support_overhang_deg
                ),
            ));
        }
        if !(self.raft_margin.is_finite() && self.raft_margin >= 0.0) {
            return Err(invalid(
                "raft_margin",
                format!("must be non-negative, got {}", self.raft_margin),
            ));
        }
        Ok(())
    }

    /// Cross-section area of the filament in mm².
    pub fn filament_area(&self) -> f64 {
        let r = self.filament_diameter / 2.0;
        std::f64::consts::PI * r * r
    }

    /// Filament length that deposits a bead of the given path length.
    pub fn filament_for(&self, path_length: f64) -> f64 {
        path_length * self.extrusion_width * self.layer_thickness / self.filament_area()
    }

    /// Set one field by name, as used in profile files.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("invalid number {v:?}"))
        }
        match key {
            "layer_thickness" => self.layer_thickness = num(value)?,
            "extrusion_width" => self.extrusion_width = num(value)?,
            "filament_diameter" => self.filament_diameter = num(value)?,
            "fill_fraction" => self.fill_fraction = num(value)?,
            "raft_layers" => self.raft_layers = num(value)?,
            "support_overhang_deg" => self.support_overhang_deg = num(value)?,
            "travel_speed" => self.travel_speed = num(value)?,
            "extrude_speed" => self.extrude_speed = num(value)?,
            "extruder_temp" => self.extruder_temp = num(value)?,
            "raft_margin" => self.raft_margin = num(value)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Apply a `key = value` profile on top of `self`. `#` starts a comment.
    pub fn apply_profile(mut self, text: &str) -> Result<Self, ToolpathError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ToolpathError::Profile {
                line: i + 1,
                message,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, found {line:?}")))?;
            self.set(k.trim(), v.trim()).map_err(err)?;
        }
        Ok(self)
    }
}
