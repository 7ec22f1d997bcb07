//! Surfaces, images and elevation data to watertight meshes, STL files,
//! sliced contours, toolpaths and G-code.

// negated float comparisons are used on purpose so that NaN takes the reject branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod expr;
pub mod geometry;
pub mod heightfield;
pub mod mesh;
pub mod preview;
pub mod slicer;
pub mod stl;
pub mod toolpath;

pub use expr::{parse_expression, ExprError, Expression};
pub use geometry::{Bounds2, Point2, Vec3};
pub use heightfield::{Domain, GridSourceSpec, HeightField, HeightFieldError, Raster};
pub use mesh::{
    tessellate_heightfield, tessellate_heightfield_with, validate_watertight, Facet, MeshError,
    TessellateOptions, TriangleMesh, WatertightReport,
};
pub use preview::{render_layer_svg, PreviewError};
pub use slicer::{
    slice_mesh, validate_contours, Contour, ContourReport, ContourRole, Layer, SliceError,
    SliceOptions,
};
pub use stl::{read_stl, StlError};
pub use toolpath::{emit_gcode, plan_print, PrintConfig, ToolPath, ToolpathError};
