//! Two-replica "Everett phone": a q-bit, a pointer that records it, and the
//! hidden copy of both, coupled only through the pointer masses.
//!
//! Basis ordering: `(q, a) ⊗ (q̃, b)` with `q ∈ {0 = |1⟩, 1 = |0⟩}` and
//! `a, b` running over the pointer sites of cluster 1 then cluster 2.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{box_grid, distance, translate, Point};
use crate::kernel::{pair_integral, MassProfile, PhaseConvention};
use crate::reduction::ClusterPreset;
use crate::units::{tau_g_si, PhysConstants};

/// Block shape of each pointer cluster in the preset layouts.
pub const CLUSTER_DIMS: [usize; 3] = [4, 4, 2];

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct PointerConfig {
    pub mass: f64,
    pub cluster_1: Vec<Point>,
    pub cluster_2: Vec<Point>,
    pub profile: MassProfile,
    pub consts: PhysConstants,
    pub convention: PhaseConvention,
    /// Optional q-bit precession rate about x (rad/s), applied to both colours.
    pub precession: Option<f64>,
}

impl PointerConfig {
    pub fn new(cluster_1: Vec<Point>, cluster_2: Vec<Point>, profile: MassProfile) -> Result<Self> {
        if cluster_1.is_empty() || cluster_1.len() != cluster_2.len() {
            return Err(Error::param("clusters", "need two non-empty clusters of equal size"));
        }
        let overlap = cluster_1
            .iter()
            .any(|a| cluster_2.iter().any(|b| distance(a, b) == 0.0));
        if overlap {
            return Err(Error::param("clusters", "pointer clusters must be disjoint"));
        }
        Ok(PointerConfig {
            mass: profile.mass,
            cluster_1,
            cluster_2,
            profile,
            consts: PhysConstants::CODATA,
            convention: PhaseConvention::RESOLVED,
            precession: None,
        })
    }

    /// Two `4x4x2` blocks stacked along z, one spacing apart.
    pub fn preset(preset: ClusterPreset, consts: &PhysConstants, profile: MassProfile) -> Result<Self> {
        let spacing = preset.spacing(consts, &profile)?;
        let block = box_grid(CLUSTER_DIMS, spacing)?;
        let shift = CLUSTER_DIMS[2] as f64 * spacing;
        let c1 = translate(&block, [0.0, 0.0, -0.5 * shift]);
        let c2 = translate(&block, [0.0, 0.0, 0.5 * shift]);
        Ok(PointerConfig::new(c1, c2, profile)?.with_constants(*consts))
    }

    pub fn with_constants(mut self, consts: PhysConstants) -> Self {
        self.consts = consts;
        self
    }

    pub fn with_coupling(mut self, g: f64) -> Self {
        self.consts = self.consts.with_gravity(g);
        self
    }

    pub fn with_precession(mut self, omega: Option<f64>) -> Self {
        self.precession = omega;
        self
    }

    pub fn cluster_size(&self) -> usize {
        self.cluster_1.len()
    }

    fn sites(&self) -> impl Iterator<Item = &Point> {
        self.cluster_1.iter().chain(&self.cluster_2)
    }

    /// Reference time; the physical G is used when the coupling is switched off.
    pub fn tau_g(&self) -> Result<f64> {
        let consts = if self.consts.g > 0.0 { self.consts } else { PhysConstants::CODATA };
        tau_g_si(&consts, self.mass, self.profile.density())
    }

    fn pair_matrix(&self) -> Vec<f64> {
        let sites: Vec<&Point> = self.sites().collect();
        let mut out = Vec::with_capacity(sites.len() * sites.len());
        for a in &sites {
            for b in &sites {
                out.push(pair_integral(&self.profile, distance(a, b)));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolCase {
    /// Nothing is done: the second branch holds `|0⟩`.
    A,
    /// The q-bit in the second branch is rotated into `|i⟩`.
    B,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metastate2 {
    sites: usize,
    amplitudes: Vec<Complex64>,
}

impl Metastate2 {
    /// `sites` is the number of pointer sites per colour (both clusters).
    pub fn from_amplitudes(sites: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        let side = 2 * sites;
        if sites == 0 || amplitudes.len() != side * side {
            return Err(Error::param("amplitudes", format!("expected {} entries", side * side)));
        }
        Ok(Metastate2 { sites, amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    fn idx(&self, q: usize, a: usize, qt: usize, b: usize) -> usize {
        ((q * self.sites + a) * 2 + qt) * self.sites + b
    }

    pub fn get(&self, q: usize, a: usize, qt: usize, b: usize) -> Complex64 {
        self.amplitudes[self.idx(q, a, qt, b)]
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// The state with physical and hidden colours exchanged.
    pub fn color_swapped(&self) -> Metastate2 {
        let mut out = self.clone();
        let s = self.sites;
        for q in 0..2 {
            for a in 0..s {
                for qt in 0..2 {
                    for b in 0..s {
                        let j = out.idx(qt, b, q, a);
                        out.amplitudes[j] = self.get(q, a, qt, b);
                    }
                }
            }
        }
        out
    }
}

/// Single-colour branch vectors over `(q, a)`: `|1 M1⟩` and `|x M2⟩`.
fn branch_vector(case: ProtocolCase, n_c: usize) -> Vec<Complex64> {
    let s = 2 * n_c;
    let mut v = vec![Complex64::new(0.0, 0.0); 2 * s];
    let w = 1.0 / ((2 * n_c) as f64).sqrt();
    for x in v.iter_mut().take(n_c) {
        *x = Complex64::new(w, 0.0);
    }
    for a in n_c..s {
        match case {
            ProtocolCase::A => v[s + a] = Complex64::new(w, 0.0),
            ProtocolCase::B => {
                v[a] = Complex64::new(w / 2f64.sqrt(), 0.0);
                v[s + a] = I * (w / 2f64.sqrt());
            }
        }
    }
    v
}

/// `(1/2)(|1 M1⟩ + |x M2⟩) ⊗ (|1̃ M̃1⟩ + |x̃ M̃2⟩)` with `x = 0` (A) or `i` (B).
pub fn prepare(case: ProtocolCase, cfg: &PointerConfig) -> Metastate2 {
    let n_c = cfg.cluster_size();
    let v = branch_vector(case, n_c);
    let amplitudes = v.iter().flat_map(|x| v.iter().map(move |y| x * y)).collect();
    Metastate2 { sites: 2 * n_c, amplitudes }
}

/// `exp(-i omega t sigma_x / 2)` in the `(|1⟩, |0⟩)` basis.
fn precession_matrix(omega: f64, t: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (0.5 * omega * t).sin_cos();
    let c = Complex64::new(c, 0.0);
    let m = Complex64::new(0.0, -s);
    [[c, m], [m, c]]
}

fn evolve_with(state: &Metastate2, cfg: &PointerConfig, pairs: &[f64], t: f64) -> Result<Metastate2> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("must be non-negative, got {t:e}")));
    }
    let s = state.sites;
    if s != 2 * cfg.cluster_size() {
        return Err(Error::param("state", "pointer dimension does not match the configuration"));
    }
    let pref = cfg.convention.factor() * cfg.consts.g * cfg.mass * cfg.mass * t / cfg.consts.hbar;
    let phasors: Vec<Complex64> = pairs.iter().map(|p| Complex64::from_polar(1.0, pref * p)).collect();
    let mut out = state.clone();
    for q in 0..2 {
        for a in 0..s {
            for qt in 0..2 {
                for b in 0..s {
                    let j = out.idx(q, a, qt, b);
                    out.amplitudes[j] *= phasors[a * s + b];
                }
            }
        }
    }
    if let Some(omega) = cfg.precession {
        let u = precession_matrix(omega, t);
        let src = out.clone();
        for q in 0..2 {
            for a in 0..s {
                for qt in 0..2 {
                    for b in 0..s {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for r in 0..2 {
                            for rt in 0..2 {
                                acc += u[q][r] * u[qt][rt] * src.get(r, a, rt, b);
                            }
                        }
                        let j = out.idx(q, a, qt, b);
                        out.amplitudes[j] = acc;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Diagonal cross-colour phases `exp(i G m^2 t I(d_ab) / hbar)`.
pub fn evolve(state: &Metastate2, cfg: &PointerConfig, t: f64) -> Result<Metastate2> {
    evolve_with(state, cfg, &cfg.pair_matrix(), t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitDensity {
    /// Row-major in the `(|1⟩, |0⟩)` basis.
    pub m: [[Complex64; 2]; 2],
}

impl QubitDensity {
    pub fn trace(&self) -> f64 {
        self.m[0][0].re + self.m[1][1].re
    }

    pub fn hermitian_defect(&self) -> f64 {
        let off = (self.m[0][1] - self.m[1][0].conj()).norm();
        off.max(self.m[0][0].im.abs()).max(self.m[1][1].im.abs())
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + self.m[0][1].norm_sqr()).sqrt();
        [mean - r, mean + r]
    }
}

/// Trace over the pointer and the hidden colour, normalized to trace 1.
pub fn reduced_qubit(state: &Metastate2) -> Result<QubitDensity> {
    let s = state.sites;
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (q, row) in m.iter_mut().enumerate() {
        for (qp, cell) in row.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..s {
                for qt in 0..2 {
                    for b in 0..s {
                        acc += state.get(q, a, qt, b) * state.get(qp, a, qt, b).conj();
                    }
                }
            }
            *cell = acc;
        }
    }
    let tr = m[0][0].re + m[1][1].re;
    if !(tr > 0.0) {
        return Err(Error::param("state", "zero state"));
    }
    for row in m.iter_mut() {
        for cell in row.iter_mut() {
            *cell /= tr;
        }
    }
    Ok(QubitDensity { m })
}

pub fn sigma3(rho: &QubitDensity) -> f64 {
    rho.m[0][0].re - rho.m[1][1].re
}

/// `⟨1 M1| rho_phys |i M2⟩`, with `rho_phys` the physical-colour state
/// (hidden colour traced out), normalized by the state's norm.
pub fn branch_coherence(state: &Metastate2) -> Complex64 {
    let s = state.sites;
    let n_c = s / 2;
    let w = 1.0 / (n_c as f64).sqrt();
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut acc = Complex64::new(0.0, 0.0);
    for qt in 0..2 {
        for b in 0..s {
            let u1: Complex64 = (0..n_c).map(|a| state.get(0, a, qt, b)).sum::<Complex64>() * w;
            let u2: Complex64 = (n_c..s)
                .map(|a| (state.get(0, a, qt, b) - I * state.get(1, a, qt, b)) * r2)
                .sum::<Complex64>()
                * w;
            acc += u1 * u2.conj();
        }
    }
    acc / state.norm_sq()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalRow {
    pub t: f64,
    pub sigma3_a: f64,
    pub sigma3_b: f64,
    pub coherence: f64,
}

impl SignalRow {
    pub fn signal(&self) -> f64 {
        (self.sigma3_b - self.sigma3_a).abs()
    }
}

fn signal_row(cfg: &PointerConfig, pairs: &[f64], a0: &Metastate2, b0: &Metastate2, t: f64) -> Result<SignalRow> {
    let a = evolve_with(a0, cfg, pairs, t)?;
    let b = evolve_with(b0, cfg, pairs, t)?;
    Ok(SignalRow {
        t,
        sigma3_a: sigma3(&reduced_qubit(&a)?),
        sigma3_b: sigma3(&reduced_qubit(&b)?),
        coherence: branch_coherence(&b).norm(),
    })
}

/// `|⟨σ3⟩_B(t) − ⟨σ3⟩_A(t)|`.
pub fn everett_signal(cfg: &PointerConfig, t: f64) -> Result<f64> {
    let pairs = cfg.pair_matrix();
    let row = signal_row(cfg, &pairs, &prepare(ProtocolCase::A, cfg), &prepare(ProtocolCase::B, cfg), t)?;
    Ok(row.signal())
}

/// Signal and case-B branch coherence on a time grid; parallel, in order.
pub fn signal_sweep(cfg: &PointerConfig, ts: &[f64]) -> Result<Vec<SignalRow>> {
    if ts.is_empty() {
        return Err(Error::param("t_grid", "empty time grid"));
    }
    let pairs = cfg.pair_matrix();
    let a0 = prepare(ProtocolCase::A, cfg);
    let b0 = prepare(ProtocolCase::B, cfg);
    ts.par_iter().map(|&t| signal_row(cfg, &pairs, &a0, &b0, t)).collect()
}

pub fn signal_csv(rows: &[SignalRow], tau_g: f64) -> String {
    let mut out = String::from("t_s,t_over_tau_g,sigma3_A,sigma3_B,signal\n");
    for r in rows {
        out.push_str(&format!(
            "{:.14e},{:.14e},{:.14e},{:.14e},{:.14e}\n",
            r.t,
            r.t / tau_g,
            r.sigma3_a,
            r.sigma3_b,
            r.signal()
        ));
    }
    out
}
