//! Minimal RepRap-style G-code output.
//!
//! ```text
//! M104 S<temp>    set extruder temperature
//! M109 S<temp>    wait for it
//! G28             home
//! G90             absolute positioning
//! G92 E0          reset extruder
//! ; layer <k> z=<z>
//! G0 X.. Y.. Z.. F..       travel
//! G1 X.. Y.. Z.. E.. F..   extrude, E is cumulative filament length
//! ```

use std::fmt::Write;

use super::{MoveKind, PrintConfig, ToolPath, ToolpathError};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GcodeOptions {
    /// Extra `;` comment lines written before the preamble.
    pub header: Vec<String>,
}

fn coord(v: f64) -> String {
    // fold -0.000 into 0.000
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

pub fn emit_gcode(
    tp: &ToolPath,
    cfg: &PrintConfig,
    opts: &GcodeOptions,
) -> Result<String, ToolpathError> {
    tp.check()?;
    let mut out = String::new();
    for h in &opts.header {
        writeln!(out, "; {h}").unwrap();
    }
    let temp = cfg.extruder_temp;
    writeln!(out, "M104 S{temp}").unwrap();
    writeln!(out, "M109 S{temp}").unwrap();
    out.push_str("G28\nG90\nG92 E0\n");
    let mut e = 0.0;
    for (k, layer) in tp.layers.iter().enumerate() {
        writeln!(out, "; layer {k} z={}", coord(layer.z)).unwrap();
        for m in &layer.moves {
            let (x, y, z) = (coord(m.to.x), coord(m.to.y), coord(m.z));
            match m.kind {
                MoveKind::Travel => writeln!(out, "G0 X{x} Y{y} Z{z} F{:.0}", m.feed).unwrap(),
                MoveKind::Extrude => {
                    e += m.extrusion_length;
                    writeln!(out, "G1 X{x} Y{y} Z{z} E{e:.5} F{:.0}", m.feed).unwrap();
                }
            }
        }
    }
    out.push_str("M104 S0\nM84\n");
    Ok(out)
}
