//! Site layouts for superpositions of localized states.

use crate::error::{Error, Result};

pub type Point = [f64; 3];

pub fn distance(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

pub fn translate(points: &[Point], by: Point) -> Vec<Point> {
    points
        .iter()
        .map(|p| [p[0] + by[0], p[1] + by[1], p[2] + by[2]])
        .collect()
}

/// `nx * ny * nz` sites with the given spacing, centred on the origin,
/// x varying slowest.
pub fn box_grid(dims: [usize; 3], spacing: f64) -> Result<Vec<Point>> {
    if dims.contains(&0) {
        return Err(Error::param("dims", "grid dimensions must be positive"));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::param("spacing", format!("must be positive, got {spacing:e}")));
    }
    let centre = |i: usize, n: usize| (i as f64 - (n as f64 - 1.0) / 2.0) * spacing;
    let mut out = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
    for i in 0..dims[0] {
        for j in 0..dims[1] {
            for k in 0..dims[2] {
                out.push([centre(i, dims[0]), centre(j, dims[1]), centre(k, dims[2])]);
            }
        }
    }
    Ok(out)
}

/// Cubic grid of `n = s^3` sites.
pub fn cubic_grid(n: usize, spacing: f64) -> Result<Vec<Point>> {
    let side = (n as f64).cbrt().round() as usize;
    if side.pow(3) != n {
        return Err(Error::param("sites", format!("{n} is not a perfect cube")));
    }
    box_grid([side, side, side], spacing)
}

/// `n` sites on a line along z: the elongated ("cigar") layout.
pub fn cigar(n: usize, spacing: f64) -> Result<Vec<Point>> {
    box_grid([1, 1, n], spacing)
}
