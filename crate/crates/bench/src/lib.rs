//! Shared inputs for the benchmarks.

use printmesh::heightfield::{from_function, Domain};
use printmesh::{Expression, HeightField};

pub const BUMP: &str = "max(0, (15 - x^2 - y^2) * exp(-(x/5)^2 - (y/5)^2) + 5)";

/// The bump surface over [-10, 10]^2 sampled at `res` points per unit.
pub fn bump_field(res: f64) -> HeightField {
    let e = Expression::parse(BUMP).expect("bump parses");
    from_function(&e, Domain::square(10.0), res, None, 0.0).expect("bump samples")
}
