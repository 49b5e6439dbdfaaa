//! Localized mass profiles `n(x - z)`, the mutual gravitational integral
//!
//! ```text
//! I(d) = ∫∫ n(x) n(y - d) / |x - y| dx dy
//! ```
//!
//! and the phase functional built from it. Profiles are normalized to unit
//! integral; the total mass multiplies externally.
//!
//! Closed forms:
//! - Gaussian (std `sigma` per axis): `erf(d / 2 sigma) / d`, `1 / (sigma sqrt(pi))` at 0.
//! - Uniform balls of radius `R`: `1/d` for `d >= 2R` (shell theorem), and for
//!   overlapping balls, with `u = d/R`,
//!   `(6/5 - u^2/2 + 3u^3/16 - u^5/160) / R`.
//!   This polynomial is continuous with `1/d` at `u = 2` (value and slope) and
//!   is checked against [`pair_integral_mc`] in the tests.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::geometry::{distance, Point};
use crate::units::{sphere_radius, PhysConstants};

/// Separations below this are evaluated at the `d -> 0` limit.
pub const MIN_SEPARATION_M: f64 = 1e-15;

const MC_MIN_SAMPLES: usize = 1_000;
const MC_CHUNK: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileShape {
    UniformSphere { radius: f64 },
    Gaussian { sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassProfile {
    pub shape: ProfileShape,
    /// Total mass, kg.
    pub mass: f64,
}

impl MassProfile {
    pub fn uniform_sphere(mass: f64, radius: f64) -> Result<Self> {
        check_positive("mass", mass)?;
        check_positive("radius", radius)?;
        Ok(MassProfile {
            shape: ProfileShape::UniformSphere { radius },
            mass,
        })
    }

    /// Homogeneous ball of the given mass and density.
    pub fn homogeneous_body(mass: f64, density: f64) -> Result<Self> {
        check_positive("density", density)?;
        Self::uniform_sphere(mass, sphere_radius(mass, density))
    }

    pub fn gaussian(mass: f64, sigma: f64) -> Result<Self> {
        check_positive("mass", mass)?;
        check_positive("sigma", sigma)?;
        Ok(MassProfile {
            shape: ProfileShape::Gaussian { sigma },
            mass,
        })
    }

    /// Radius or standard deviation.
    pub fn size_scale(&self) -> f64 {
        match self.shape {
            ProfileShape::UniformSphere { radius } => radius,
            ProfileShape::Gaussian { sigma } => sigma,
        }
    }

    /// Mass density of the ball, or the central density of the Gaussian.
    pub fn density(&self) -> f64 {
        match self.shape {
            ProfileShape::UniformSphere { radius } => {
                3.0 * self.mass / (4.0 * PI * radius.powi(3))
            }
            ProfileShape::Gaussian { sigma } => {
                self.mass / (2.0 * PI * sigma * sigma).powf(1.5)
            }
        }
    }

    pub fn with_mass(self, mass: f64) -> Self {
        MassProfile { mass, ..self }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Point {
        match self.shape {
            ProfileShape::UniformSphere { radius } => loop {
                let p: Point = [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ];
                if p[0] * p[0] + p[1] * p[1] + p[2] * p[2] <= 1.0 {
                    return [p[0] * radius, p[1] * radius, p[2] * radius];
                }
            },
            ProfileShape::Gaussian { sigma } => {
                let mut g = || -> f64 { rng.sample::<f64, _>(StandardNormal) * sigma };
                [g(), g(), g()]
            }
        }
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive, got {v:e}")))
    }
}

/// Closed-form `I(d)` in 1/m.
pub fn pair_integral(profile: &MassProfile, d: f64) -> f64 {
    let d = d.abs();
    match profile.shape {
        ProfileShape::Gaussian { sigma } => {
            if d < MIN_SEPARATION_M {
                1.0 / (sigma * PI.sqrt())
            } else {
                erf(d / (2.0 * sigma)) / d
            }
        }
        ProfileShape::UniformSphere { radius } => {
            if d >= 2.0 * radius {
                return 1.0 / d;
            }
            let u = if d < MIN_SEPARATION_M { 0.0 } else { d / radius };
            let u2 = u * u;
            let u3 = u2 * u;
            (1.2 - 0.5 * u2 + 3.0 / 16.0 * u3 - u3 * u2 / 160.0) / radius
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Monte Carlo estimate of `I(d)`: draws `x ~ n`, `y ~ n(. - d e_z)` and
/// averages `1/|x - y|`.
///
/// Samples are drawn in fixed-size chunks, each from its own ChaCha stream of
/// `seed`, and reduced in chunk order, so the result does not depend on the
/// thread count.
pub fn pair_integral_mc(profile: &MassProfile, d: f64, samples: usize, seed: u64) -> Result<McEstimate> {
    if samples < MC_MIN_SAMPLES {
        return Err(Error::param(
            "samples",
            format!("need at least {MC_MIN_SAMPLES}, got {samples}"),
        ));
    }
    let chunks = samples.div_ceil(MC_CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let x = profile.sample(&mut rng);
                let mut y = profile.sample(&mut rng);
                y[2] += d;
                let f = 1.0 / distance(&x, &y);
                s1 += f;
                s2 += f * f;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let n = samples as f64;
    let mean = s1 / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(McEstimate {
        estimate: mean,
        std_error: (var / n).sqrt(),
    })
}

/// `I(d)` tabulated on a set of separations.
#[derive(Debug, Clone, PartialEq)]
pub struct PairEnergyTable {
    pub profile: MassProfile,
    pub distances: Vec<f64>,
    pub values: Vec<f64>,
}

impl PairEnergyTable {
    pub fn build(profile: MassProfile, distances: Vec<f64>) -> Result<Self> {
        if distances.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
            return Err(Error::param("distances", "must be finite and non-negative"));
        }
        let values = distances.par_iter().map(|&d| pair_integral(&profile, d)).collect();
        Ok(PairEnergyTable {
            profile,
            distances,
            values,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("d_m,I_per_m\n");
        for (d, v) in self.distances.iter().zip(&self.values) {
            out.push_str(&format!("{d:.14e},{v:.14e}\n"));
        }
        out
    }

    /// Reads a table written by [`PairEnergyTable::to_csv`] for `profile`.
    pub fn from_csv(profile: MassProfile, text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("d_m,I_per_m") {
            return Err(Error::param("table", "missing `d_m,I_per_m` header"));
        }
        let mut distances = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = || Error::param("table", format!("malformed row {}", i + 2));
            let (d, v) = line.split_once(',').ok_or_else(bad)?;
            distances.push(d.trim().parse::<f64>().map_err(|_| bad())?);
            values.push(v.trim().parse::<f64>().map_err(|_| bad())?);
        }
        Ok(PairEnergyTable {
            profile,
            distances,
            values,
        })
    }
}

/// Which prefactor multiplies the pair-integral bracket in the phase.
///
/// `Hamiltonian` (`m^2 G t / hbar`) is what direct evolution under the
/// cross-colour pair interaction produces, and is the convention used by
/// every computation in this crate. `HalfPrefactor` (`m^2 G t / 2 hbar`) is
/// the literal form of the phase functional; it is kept so the discrepancy
/// can be reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseConvention {
    #[default]
    Hamiltonian,
    HalfPrefactor,
}

impl PhaseConvention {
    pub const RESOLVED: PhaseConvention = PhaseConvention::Hamiltonian;

    pub fn factor(self) -> f64 {
        match self {
            PhaseConvention::Hamiltonian => 1.0,
            PhaseConvention::HalfPrefactor => 0.5,
        }
    }
}

/// `m^2 G t / hbar`, times the convention factor.
pub fn phase_prefactor(
    profile: &MassProfile,
    consts: &PhysConstants,
    t: f64,
    convention: PhaseConvention,
) -> f64 {
    convention.factor() * profile.mass * profile.mass * consts.g * t / consts.hbar
}

/// Phase of hidden configuration `z_j` between the branches `z_h` and `z_k`:
/// `prefactor * [I(|z_j - z_h|) - I(|z_j - z_k|)]`.
#[allow(non_snake_case)]
pub fn phase_A(
    profile: &MassProfile,
    consts: &PhysConstants,
    t: f64,
    z_j: &Point,
    z_h: &Point,
    z_k: &Point,
    convention: PhaseConvention,
) -> f64 {
    let bracket = pair_integral(profile, distance(z_j, z_h)) - pair_integral(profile, distance(z_j, z_k));
    phase_prefactor(profile, consts, t, convention) * bracket
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const C: PhysConstants = PhysConstants::CODATA;

    fn sphere(r: f64) -> MassProfile {
        MassProfile::uniform_sphere(1.0, r).unwrap()
    }

    fn gauss(s: f64) -> MassProfile {
        MassProfile::gaussian(1.0, s).unwrap()
    }

    #[test]
    fn disjoint_spheres_are_points() {
        let r = 0.7;
        assert!((pair_integral(&sphere(r), 3.0 * r) - 1.0 / (3.0 * r)).abs() < 1e-15);
    }

    #[test]
    fn coincident_limits() {
        assert!((pair_integral(&sphere(2.0), 0.0) - 0.6).abs() < 1e-15);
        let s = 1.3;
        assert!((pair_integral(&gauss(s), 0.0) - 1.0 / (s * PI.sqrt())).abs() < 1e-15);
        // small-argument erf expansion: erf(x)/d ~ (2/sqrt(pi)) (1/(2 sigma)) (1 - x^2/3)
        let d = 1e-4 * s;
        let x = d / (2.0 * s);
        let series = (1.0 - x * x / 3.0) / (s * PI.sqrt());
        assert!((pair_integral(&gauss(s), d) / series - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_formula_continuous_at_contact() {
        let r = 1.0;
        let inside = pair_integral(&sphere(r), 2.0 * r * (1.0 - 1e-12));
        assert!((inside - 0.5).abs() < 1e-10);
    }

    #[test]
    fn mc_sphere_at_three_radii() {
        let est = pair_integral_mc(&sphere(1.0), 3.0, 1_000_000, 11).unwrap();
        assert!((est.estimate - 1.0 / 3.0).abs() < 3.0 * est.std_error + 1e-12);
    }

    #[test]
    fn mc_sphere_at_zero() {
        let est = pair_integral_mc(&sphere(1.0), 0.0, 4_000_000, 5).unwrap();
        assert!((est.estimate - 1.2).abs() < 3.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn mc_gaussian_two_sigma() {
        let g = gauss(0.5);
        let est = pair_integral_mc(&g, 1.0, 1_000_000, 3).unwrap();
        assert!((est.estimate - pair_integral(&g, 1.0)).abs() < 3.0 * est.std_error);
    }

    #[test]
    fn mc_deterministic_and_validated() {
        let a = pair_integral_mc(&gauss(1.0), 0.3, 50_000, 9).unwrap();
        let b = pair_integral_mc(&gauss(1.0), 0.3, 50_000, 9).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert!(pair_integral_mc(&gauss(1.0), 0.3, 999, 9).is_err());
    }

    #[test]
    fn far_field() {
        for p in [sphere(1.0), gauss(1.0)] {
            let d = 100.0 * p.size_scale();
            assert!((pair_integral(&p, d) * d - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn table_round_trip_and_shape() {
        let p = sphere(1.0);
        let ds: Vec<f64> = (0..50).map(|i| i as f64 * 0.5).collect();
        let t = PairEnergyTable::build(p, ds).unwrap();
        assert!(t.values.iter().all(|&v| v > 0.0));
        assert!(t.values.windows(2).all(|w| w[1] <= w[0]));
        let back = PairEnergyTable::from_csv(p, &t.to_csv()).unwrap();
        assert_eq!(back.distances.len(), t.distances.len());
        for (a, b) in back.values.iter().zip(&t.values) {
            assert!((a / b - 1.0).abs() < 1e-14);
        }
        assert!(PairEnergyTable::from_csv(p, "d,I\n").is_err());
        assert!(PairEnergyTable::build(p, vec![-1.0]).is_err());
    }

    #[test]
    fn phase_examples() {
        let p = MassProfile::uniform_sphere(1e-15, 1e-6).unwrap();
        let (zj, zk) = ([0.0; 3], [0.0, 0.0, 1e-5]);
        let t = 0.3;
        for conv in [PhaseConvention::Hamiltonian, PhaseConvention::HalfPrefactor] {
            assert_eq!(phase_A(&p, &C, t, &zj, &zk, &zk, conv), 0.0);
            let a = phase_A(&p, &C, t, &zj, &zj, &zk, conv);
            let expect = conv.factor() * p.mass * p.mass * C.g * t / C.hbar * (1.2 / 1e-6 - 1.0 / 1e-5);
            assert!((a / expect - 1.0).abs() < 1e-12);
        }
        let half = phase_A(&p, &C, t, &zj, &zj, &zk, PhaseConvention::HalfPrefactor);
        let full = phase_A(&p, &C, t, &zj, &zj, &zk, PhaseConvention::RESOLVED);
        assert!((full - 2.0 * half).abs() <= 1e-15 * full.abs());
    }

    #[test]
    fn profile_validation() {
        assert!(MassProfile::uniform_sphere(0.0, 1.0).is_err());
        assert!(MassProfile::gaussian(1.0, -1.0).is_err());
        let b = MassProfile::homogeneous_body(1.0, 1000.0).unwrap();
        assert!((b.density() / 1000.0 - 1.0).abs() < 1e-12);
    }

    fn point() -> impl Strategy<Value = Point> {
        prop::array::uniform3(-3e-6f64..3e-6)
    }

    proptest! {
        #[test]
        fn phase_antisymmetric_and_linear(zj in point(), zh in point(), zk in point(), t in 0.0f64..10.0) {
            let p = MassProfile::homogeneous_body(1e-14, 1000.0).unwrap();
            let conv = PhaseConvention::RESOLVED;
            let a = phase_A(&p, &C, t, &zj, &zh, &zk, conv);
            let b = phase_A(&p, &C, t, &zj, &zk, &zh, conv);
            prop_assert_eq!(a, -b);
            let a2 = phase_A(&p, &C, 2.0 * t, &zj, &zh, &zk, conv);
            prop_assert!((a2 - 2.0 * a).abs() <= 1e-12 * a.abs().max(1e-300));
        }
    }
}
