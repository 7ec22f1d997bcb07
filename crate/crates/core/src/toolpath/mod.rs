//! Extruder planning: perimeters, infill, raft, supports, island order and
//! G-code.

mod config;
pub mod gcode;
pub mod infill;
pub mod offset;
pub mod ordering;
mod plan;
pub mod raft;
pub mod support;

use thiserror::Error;

use crate::geometry::Point2;

pub use config::PrintConfig;
pub use gcode::{emit_gcode, GcodeOptions};
pub use infill::{scanline_fill, FillDirection};
pub use offset::offset_ring;
pub use ordering::{order_islands, Tour};
pub use plan::{generate_infill, generate_perimeters, plan_print, Perimeters, Plan, PlanWarning};
pub use raft::generate_raft;
pub use support::{detect_overhangs, Overhangs, SupportColumn};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ToolpathError {
    #[error("invalid {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("profile line {line}: {message}")]
    Profile { line: usize, message: String },
    #[error("path is discontinuous at layer {layer}, move {index}")]
    DiscontinuousPath { layer: usize, index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    Travel,
    Extrude,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Move {
    pub kind: MoveKind,
    pub from: Point2,
    pub to: Point2,
    /// Nozzle height.
    pub z: f64,
    /// Feed rate in mm/min.
    pub feed: f64,
    /// Filament consumed by this move in mm; zero for travel.
    pub extrusion_length: f64,
}

impl Move {
    pub fn length(&self) -> f64 {
        self.from.dist(self.to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Raft,
    /// Support pillars only, below the model's first layer.
    Support,
    /// Index into the sliced layers.
    Model(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerPath {
    pub kind: LayerKind,
    pub z: f64,
    pub moves: Vec<Move>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToolPath {
    pub layers: Vec<LayerPath>,
}

/// Positions closer than this count as the same point.
pub const CONTINUITY_TOL: f64 = 1e-9;

impl ToolPath {
    fn moves(&self) -> impl Iterator<Item = &Move> {
        self.layers.iter().flat_map(|l| &l.moves)
    }

    pub fn extrude_length(&self) -> f64 {
        self.moves()
            .filter(|m| m.kind == MoveKind::Extrude)
            .map(Move::length)
            .sum()
    }

    pub fn travel_length(&self) -> f64 {
        self.moves()
            .filter(|m| m.kind == MoveKind::Travel)
            .map(Move::length)
            .sum()
    }

    pub fn filament_length(&self) -> f64 {
        self.moves().map(|m| m.extrusion_length).sum()
    }

    /// Check the move invariants: positive extrusion on extrude moves, none
    /// on travel, and every move starting where the previous one ended.
    pub fn check(&self) -> Result<(), ToolpathError> {
        let mut prev: Option<Point2> = None;
        for (li, layer) in self.layers.iter().enumerate() {
            for (mi, m) in layer.moves.iter().enumerate() {
                let bad_extrusion = match m.kind {
                    MoveKind::Extrude => !(m.extrusion_length > 0.0),
                    MoveKind::Travel => m.extrusion_length != 0.0,
                };
                let jump = prev.is_some_and(|p| p.dist(m.from) > CONTINUITY_TOL);
                if bad_extrusion || jump {
                    return Err(ToolpathError::DiscontinuousPath {
                        layer: li,
                        index: mi,
                    });
                }
                prev = Some(m.to);
            }
        }
        Ok(())
    }
}

/// Sequential move builder that keeps the path continuous.
#[derive(Debug, Clone)]
pub struct PathBuilder<'a> {
    cfg: &'a PrintConfig,
    pos: Point2,
    z: f64,
    moves: Vec<Move>,
}

impl<'a> PathBuilder<'a> {
    pub fn new(cfg: &'a PrintConfig, pos: Point2, z: f64) -> Self {
        Self {
            cfg,
            pos,
            z,
            moves: Vec::new(),
        }
    }

    pub fn position(&self) -> Point2 {
        self.pos
    }

    pub fn travel_to(&mut self, p: Point2) {
        if self.pos.dist(p) > CONTINUITY_TOL {
            self.moves.push(Move {
                kind: MoveKind::Travel,
                from: self.pos,
                to: p,
                z: self.z,
                feed: self.cfg.travel_speed,
                extrusion_length: 0.0,
            });
        }
        self.pos = p;
    }

    pub fn extrude_to(&mut self, p: Point2) {
        let len = self.pos.dist(p);
        if len > CONTINUITY_TOL {
            self.moves.push(Move {
                kind: MoveKind::Extrude,
                from: self.pos,
                to: p,
                z: self.z,
                feed: self.cfg.extrude_speed,
                extrusion_length: self.cfg.filament_for(len),
            });
        }
        self.pos = p;
    }

    /// Extrude around a closed loop, entering at the vertex nearest the
    /// current position.
    pub fn extrude_loop(&mut self, ring: &[Point2]) {
        let Some(start) = (0..ring.len())
            .min_by(|&a, &b| self.pos.dist(ring[a]).total_cmp(&self.pos.dist(ring[b])))
        else {
            return;
        };
        self.travel_to(ring[start]);
        for k in 1..=ring.len() {
            self.extrude_to(ring[(start + k) % ring.len()]);
        }
    }

    pub fn extrude_line(&mut self, seg: [Point2; 2]) {
        self.travel_to(seg[0]);
        self.extrude_to(seg[1]);
    }

    pub fn finish(self) -> Vec<Move> {
        self.moves
    }
}
