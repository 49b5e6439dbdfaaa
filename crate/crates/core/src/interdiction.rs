//! EPR no-signalling analysis for a massive sphere in a superposition of two
//! positions probed by a light test mass.
//!
//! Signalling needs a measurement long enough to resolve the probe's
//! deflection, `T >= t_min(M, rho, m)`, and short compared to the reduction
//! time, `T << tau_g`. The scan shows the two never hold together.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::units::{sphere_radius, tau_g_si, PhysConstants};

/// Default "much less than" factor.
pub const DEFAULT_MARGIN: f64 = 10.0;
/// Default probe mass as a fraction of the lump mass.
pub const DEFAULT_PROBE_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EprScenario {
    /// Lump mass, kg.
    pub mass: f64,
    /// Lump density, kg/m^3.
    pub density: f64,
    /// Probe mass, kg.
    pub probe_mass: f64,
    /// Superposition half-separation; the radius when unset.
    pub separation: Option<f64>,
    /// Probe speed along x, m/s.
    pub probe_speed: Option<f64>,
    pub margin: f64,
}

impl EprScenario {
    pub fn new(mass: f64, density: f64, probe_mass: f64) -> Result<Self> {
        for (name, v) in [("M", mass), ("rho", density), ("m", probe_mass)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive, got {v:e}")));
            }
        }
        if probe_mass >= mass {
            return Err(Error::param("m", "probe must be lighter than the lump"));
        }
        Ok(EprScenario {
            mass,
            density,
            probe_mass,
            separation: None,
            probe_speed: None,
            margin: DEFAULT_MARGIN,
        })
    }

    pub fn with_probe_speed(mut self, v: f64) -> Self {
        self.probe_speed = Some(v);
        self
    }

    pub fn with_separation(mut self, z: f64) -> Self {
        self.separation = Some(z);
        self
    }

    pub fn radius(&self) -> f64 {
        sphere_radius(self.mass, self.density)
    }

    pub fn separation_or_radius(&self) -> f64 {
        self.separation.unwrap_or_else(|| self.radius())
    }
}

/// `G M T / R^2 >= hbar / (m Z)` with transit time `T = R / v_x`.
pub fn deflection_bound(consts: &PhysConstants, s: &EprScenario) -> Result<bool> {
    let v = s
        .probe_speed
        .ok_or_else(|| Error::param("v_x", "probe speed not set"))?;
    let z = s.separation_or_radius();
    if !(v > 0.0) || !(z > 0.0) {
        return Err(Error::param("v_x, Z", "must be positive"));
    }
    let r = s.radius();
    let transit = r / v;
    let deflection = consts.g * s.mass * transit / (r * r);
    let spread = consts.hbar / (s.probe_mass * z);
    Ok(deflection >= spread)
}

/// Shortest measurement time that resolves the deflection:
/// `(hbar/m)^{1/3} [ (1/2) (4 pi rho / 3)^{2/3} G M^{1/3} ]^{-2/3}`.
pub fn t_min(consts: &PhysConstants, mass: f64, density: f64, probe_mass: f64) -> Result<f64> {
    for (name, v) in [("M", mass), ("rho", density), ("m", probe_mass)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param(name, format!("must be positive, got {v:e}")));
        }
    }
    let accel = 0.5 * (4.0 * std::f64::consts::PI * density / 3.0).powf(2.0 / 3.0) * consts.g * mass.cbrt();
    Ok((consts.hbar / probe_mass).cbrt() * accel.powf(-2.0 / 3.0))
}

/// Probe mass as a function of lump mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeRule {
    Fraction(f64),
    Fixed(f64),
}

impl ProbeRule {
    pub fn probe_mass(&self, mass: f64) -> f64 {
        match *self {
            ProbeRule::Fraction(f) => f * mass,
            ProbeRule::Fixed(m) => m,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityCurve {
    pub masses: Vec<f64>,
    pub t_min: Vec<f64>,
    pub t_max: Vec<f64>,
    pub feasible: Vec<bool>,
    pub margin: f64,
}

impl FeasibilityCurve {
    pub fn any_feasible(&self) -> bool {
        self.feasible.iter().any(|&f| f)
    }

    pub fn to_csv(&self, consts: &PhysConstants) -> String {
        let mut out = String::from("M_kg,M_over_mp,t_min_s,tau_g_s,feasible\n");
        for i in 0..self.masses.len() {
            out.push_str(&format!(
                "{:.14e},{:.14e},{:.14e},{:.14e},{}\n",
                self.masses[i],
                self.masses[i] / consts.m_p,
                self.t_min[i],
                self.t_max[i],
                self.feasible[i]
            ));
        }
        out
    }
}

/// `points` log-spaced masses in `[m_lo, m_hi]` (kg).
pub fn log_masses(m_lo: f64, m_hi: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 || !(m_lo > 0.0) || !(m_hi >= m_lo) {
        return Err(Error::param("M_range", "empty or invalid mass range"));
    }
    if points == 1 {
        return Ok(vec![m_lo]);
    }
    let (a, b) = (m_lo.ln(), m_hi.ln());
    Ok((0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect())
}

/// Per mass: `t_min`, `t_max = tau_g`, feasible iff `t_min <= t_max / margin`.
pub fn interdiction_scan(
    consts: &PhysConstants,
    masses: &[f64],
    density: f64,
    rule: ProbeRule,
    margin: f64,
) -> Result<FeasibilityCurve> {
    if masses.is_empty() {
        return Err(Error::param("M_range", "empty mass range"));
    }
    if !(margin >= 1.0) {
        return Err(Error::param("margin", "must be >= 1"));
    }
    let rows: Vec<(f64, f64)> = masses
        .par_iter()
        .map(|&m| {
            let probe = rule.probe_mass(m);
            Ok((t_min(consts, m, density, probe)?, tau_g_si(consts, m, density)?))
        })
        .collect::<Result<_>>()?;
    let (t_min, t_max): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let feasible = t_min
        .iter()
        .zip(&t_max)
        .map(|(lo, hi)| *lo <= *hi / margin)
        .collect();
    Ok(FeasibilityCurve {
        masses: masses.to_vec(),
        t_min,
        t_max,
        feasible,
        margin,
    })
}
