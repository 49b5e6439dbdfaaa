//! Gravitational decoherence of a superposition of localized states.
//!
//! The physical replica starts in `|Phi> = sum_j |z_j> / sqrt(n)` and so does
//! every hidden replica. Tracing out the `N - 1` hidden replicas gives the
//! reduced matrix element
//!
//! ```text
//! <z_h| rho(t) |z_k> = n^{-N} [ sum_j exp(i A_j / (N - 1)) ]^{N-1}
//! ```
//!
//! with `A_j` from [`kernel::phase_A`]. For `N = 2` it is checked against a
//! brute-force evolution of the two-replica state under the pair Hamiltonian
//! ([`brute_force_reduced_rho`]).

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{cubic_grid, cigar, distance, Point};
use crate::kernel::{self, pair_integral, phase_prefactor, MassProfile, PhaseConvention};
use crate::units::{localization_width_si, tau_g_si, PhysConstants};

/// Largest site count accepted by the brute-force oracle.
pub const BRUTE_FORCE_MAX_SITES: usize = 8;
/// Fewest sites for which a reduction time is estimated.
pub const MIN_CLUSTER_SITES: usize = 16;
/// Decay level that defines the reduction time.
pub const REDUCTION_LEVEL: f64 = 1.0 / std::f64::consts::E;
/// A coherence recovering above this after the crossing counts as oscillation.
pub const REVIVAL_LEVEL: f64 = 0.9;
/// Search horizon for the reduction time, in units of `tau_g`.
pub const SEARCH_HORIZON_TAU: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionConfig {
    pub sites: Vec<Point>,
    pub profile: MassProfile,
    pub replicas: u64,
    pub t_grid: Vec<f64>,
    pub consts: PhysConstants,
    pub convention: PhaseConvention,
}

impl ReductionConfig {
    pub fn new(sites: Vec<Point>, profile: MassProfile, replicas: u64) -> Result<Self> {
        if sites.len() < 2 {
            return Err(Error::param("sites", "need at least two localized states"));
        }
        for (i, a) in sites.iter().enumerate() {
            if sites[..i].iter().any(|b| distance(a, b) == 0.0) {
                return Err(Error::param("sites", format!("site {i} repeated")));
            }
        }
        if replicas < 2 {
            return Err(Error::param("N", "need at least two replicas"));
        }
        Ok(ReductionConfig {
            sites,
            profile,
            replicas,
            t_grid: Vec::new(),
            consts: PhysConstants::CODATA,
            convention: PhaseConvention::RESOLVED,
        })
    }

    pub fn with_t_grid(mut self, t_grid: Vec<f64>) -> Self {
        self.t_grid = t_grid;
        self
    }

    pub fn with_replicas(mut self, replicas: u64) -> Self {
        self.replicas = replicas;
        self
    }

    pub fn with_constants(mut self, consts: PhysConstants) -> Self {
        self.consts = consts;
        self
    }

    pub fn with_convention(mut self, convention: PhaseConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    /// `tau_g` of the profile's mass and density.
    pub fn tau_g(&self) -> Result<f64> {
        tau_g_si(&self.consts, self.profile.mass, self.profile.density())
    }

    fn pair_matrix(&self) -> Vec<f64> {
        let n = self.n_sites();
        let mut m = vec![0.0; n * n];
        for j in 0..n {
            for h in 0..n {
                m[j * n + h] = pair_integral(&self.profile, distance(&self.sites[j], &self.sites[h]));
            }
        }
        m
    }
}

/// Site layouts for [`cluster`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterPreset {
    /// Cubic grid with spacing `R/2`: the superposed displacements are a
    /// sizeable fraction of the body radius.
    BodyScale,
    /// Cubic grid with spacing equal to the localization width
    /// `(m_p/M)^{1/2}` cm.
    LocalizationWidth,
    /// Sites on a line, spacing `R/2`.
    Cigar,
}

impl ClusterPreset {
    pub fn spacing(self, consts: &PhysConstants, profile: &MassProfile) -> Result<f64> {
        match self {
            ClusterPreset::BodyScale | ClusterPreset::Cigar => Ok(0.5 * profile.size_scale()),
            ClusterPreset::LocalizationWidth => localization_width_si(consts, profile.mass),
        }
    }
}

/// Sites for a preset; cubic presets need a perfect-cube count.
pub fn cluster(
    preset: ClusterPreset,
    consts: &PhysConstants,
    profile: &MassProfile,
    n_sites: usize,
) -> Result<Vec<Point>> {
    let spacing = preset.spacing(consts, profile)?;
    match preset {
        ClusterPreset::BodyScale | ClusterPreset::LocalizationWidth => cubic_grid(n_sites, spacing),
        ClusterPreset::Cigar => cigar(n_sites, spacing),
    }
}

/// The 64-site body-scale cluster of a homogeneous ball with `N = 2`.
pub fn default_cluster(mass: f64, density: f64) -> Result<ReductionConfig> {
    let profile = MassProfile::homogeneous_body(mass, density)?;
    let sites = cluster(ClusterPreset::BodyScale, &PhysConstants::CODATA, &profile, 64)?;
    ReductionConfig::new(sites, profile, 2)
}

/// `(1/n) * w^{N-1}` with `w = 1 + u`, evaluated in log-polar form.
fn powered_mean(u: Complex64, exponent: f64, n: f64) -> Complex64 {
    let ln_mag = 0.5 * (2.0 * u.re + u.norm_sqr()).ln_1p();
    let arg = u.im.atan2(1.0 + u.re);
    Complex64::from_polar((exponent * ln_mag).exp() / n, exponent * arg)
}

/// `mean_j exp(i a_j) - 1`, accurate for small phases.
fn mean_phasor_minus_one(phases: impl Iterator<Item = f64>, n: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for a in phases {
        let s = (0.5 * a).sin();
        acc += Complex64::new(-2.0 * s * s, a.sin());
    }
    acc / n
}

fn element_from_pairs(cfg: &ReductionConfig, pairs: &[f64], h: usize, k: usize, t: f64, replicas: u64) -> Complex64 {
    let n = cfg.n_sites();
    let nf = n as f64;
    if h == k || t == 0.0 {
        return Complex64::new(1.0 / nf, 0.0);
    }
    let hidden = (replicas - 1) as f64;
    let pref = phase_prefactor(&cfg.profile, &cfg.consts, t, cfg.convention) / hidden;
    let u = mean_phasor_minus_one(
        (0..n).map(|j| pref * (pairs[j * n + h] - pairs[j * n + k])),
        nf,
    );
    powered_mean(u, hidden, nf)
}

/// Closed-form `<z_h| rho(t) |z_k>` for `cfg.replicas` replicas.
pub fn matrix_element(cfg: &ReductionConfig, h: usize, k: usize, t: f64) -> Result<Complex64> {
    let n = cfg.n_sites();
    if h >= n || k >= n {
        return Err(Error::param("h, k", format!("site index out of range 0..{n}")));
    }
    if !(t >= 0.0) {
        return Err(Error::param("t", "time must be non-negative"));
    }
    Ok(element_from_pairs(cfg, &cfg.pair_matrix(), h, k, t, cfg.replicas))
}

/// All reduced elements at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionResult {
    pub t: f64,
    pub n: usize,
    /// Row-major `n x n`.
    pub elements: Vec<Complex64>,
    /// Mean of `|element| * n` over `h != k`.
    pub offdiag_magnitude: f64,
}

impl ReductionResult {
    pub fn get(&self, h: usize, k: usize) -> Complex64 {
        self.elements[h * self.n + k]
    }

    fn from_elements(t: f64, n: usize, elements: Vec<Complex64>) -> Self {
        let mut sum = 0.0;
        for h in 0..n {
            for k in 0..n {
                if h != k {
                    sum += elements[h * n + k].norm();
                }
            }
        }
        let offdiag_magnitude = sum * n as f64 / (n * (n - 1)) as f64;
        ReductionResult {
            t,
            n,
            elements,
            offdiag_magnitude,
        }
    }
}

fn elements_at(cfg: &ReductionConfig, pairs: &[f64], t: f64) -> Vec<Complex64> {
    let n = cfg.n_sites();
    if cfg.replicas == 2 {
        // rho_hk = n^-2 sum_j e^{i p I_jh} conj(e^{i p I_jk})
        let pref = phase_prefactor(&cfg.profile, &cfg.consts, t, cfg.convention);
        let phasors: Vec<Complex64> = pairs
            .iter()
            .map(|&i| Complex64::from_polar(1.0, pref * i))
            .collect();
        let norm = 1.0 / (n * n) as f64;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for h in 0..n {
            for k in 0..n {
                out[h * n + k] = if h == k {
                    Complex64::new(1.0 / n as f64, 0.0)
                } else {
                    let s: Complex64 = (0..n)
                        .map(|j| phasors[j * n + h] * phasors[j * n + k].conj())
                        .sum();
                    s * norm
                };
            }
        }
        out
    } else {
        (0..n * n)
            .map(|idx| element_from_pairs(cfg, pairs, idx / n, idx % n, t, cfg.replicas))
            .collect()
    }
}

pub fn reduced_matrix(cfg: &ReductionConfig, t: f64) -> ReductionResult {
    let pairs = cfg.pair_matrix();
    ReductionResult::from_elements(t, cfg.n_sites(), elements_at(cfg, &pairs, t))
}

/// Direct evolution of the two-replica state `sum_{j,l} |z_j>|z_l> / n` under
/// the cross-replica pair energy `-(G/(N-1)) m^2 I(|z_j - z_l|)` with `N = 2`,
/// followed by the partial trace over the hidden replica.
///
/// Uses neither the phase functional nor the convention setting; it is the
/// reference the closed form is held to.
pub fn brute_force_reduced_rho(cfg: &ReductionConfig, t: f64) -> Result<Vec<Complex64>> {
    if cfg.replicas != 2 {
        return Err(Error::param("N", "brute-force oracle is for two replicas"));
    }
    let n = cfg.n_sites();
    if n > BRUTE_FORCE_MAX_SITES {
        return Err(Error::param(
            "sites",
            format!("brute-force oracle limited to {BRUTE_FORCE_MAX_SITES} sites, got {n}"),
        ));
    }
    let m = cfg.profile.mass;
    let coupling = cfg.consts.g / (cfg.replicas - 1) as f64;
    let amp = 1.0 / n as f64;
    // psi[j * n + l]: physical at z_j, hidden at z_l
    let psi: Vec<Complex64> = (0..n * n)
        .map(|idx| {
            let (j, l) = (idx / n, idx % n);
            let energy = -coupling * m * m * pair_integral(&cfg.profile, distance(&cfg.sites[j], &cfg.sites[l]));
            Complex64::from_polar(amp, -energy * t / cfg.consts.hbar)
        })
        .collect();
    let mut rho = vec![Complex64::new(0.0, 0.0); n * n];
    for h in 0..n {
        for k in 0..n {
            rho[h * n + k] = (0..n).map(|l| psi[h * n + l] * psi[k * n + l].conj()).sum();
        }
    }
    Ok(rho)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRow {
    pub t: f64,
    /// Mean `|element| * n` over `h != k`; 1 is full coherence.
    pub coherence: f64,
}

/// Coherence on `cfg.t_grid`.
pub fn decay_curve(cfg: &ReductionConfig) -> Result<Vec<DecayRow>> {
    if cfg.t_grid.is_empty() {
        return Err(Error::param("t_grid", "empty time grid"));
    }
    if cfg.t_grid.windows(2).any(|w| !(w[1] > w[0])) || cfg.t_grid[0] < 0.0 {
        return Err(Error::param("t_grid", "times must be non-negative and increasing"));
    }
    let pairs = cfg.pair_matrix();
    Ok(cfg
        .t_grid
        .par_iter()
        .map(|&t| DecayRow {
            t,
            coherence: coherence_at(cfg, &pairs, t),
        })
        .collect())
}

fn coherence_at(cfg: &ReductionConfig, pairs: &[f64], t: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    ReductionResult::from_elements(t, cfg.n_sites(), elements_at(cfg, pairs, t)).offdiag_magnitude
}

pub fn decay_csv(rows: &[DecayRow], tau_g: f64) -> String {
    let mut out = String::from("t_s,t_over_tau_g,coherence\n");
    for r in rows {
        out.push_str(&format!("{:.14e},{:.14e},{:.14e}\n", r.t, r.t / tau_g, r.coherence));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NsLimitRow {
    pub replicas: u64,
    /// `|n * element - exp(i mean_j A_j)|`.
    pub deviation: f64,
}

/// Distance of the finite-`N` element from its Newton-Schrodinger limit.
pub fn ns_limit_deviation(
    cfg: &ReductionConfig,
    h: usize,
    k: usize,
    t: f64,
    n_list: &[u64],
) -> Result<Vec<NsLimitRow>> {
    let n = cfg.n_sites();
    if h >= n || k >= n {
        return Err(Error::param("h, k", format!("site index out of range 0..{n}")));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("N_list", "must be strictly increasing"));
    }
    if n_list.first().is_some_and(|&m| m < 2) || n_list.last().is_some_and(|&m| m > 10_000_000) {
        return Err(Error::param("N_list", "replica counts must lie in [2, 1e7]"));
    }
    let pairs = cfg.pair_matrix();
    let pref = phase_prefactor(&cfg.profile, &cfg.consts, t, cfg.convention);
    let phases: Vec<f64> = (0..n).map(|j| pref * (pairs[j * n + h] - pairs[j * n + k])).collect();
    let mean_phase = phases.iter().sum::<f64>() / n as f64;
    Ok(n_list
        .iter()
        .map(|&replicas| {
            let hidden = (replicas - 1) as f64;
            let u = mean_phasor_minus_one(phases.iter().map(|a| a / hidden), n as f64);
            let ln_mag = 0.5 * (2.0 * u.re + u.norm_sqr()).ln_1p();
            let x = hidden * ln_mag;
            let delta = hidden * u.im.atan2(1.0 + u.re) - mean_phase;
            // |e^{x + i delta} - 1|
            let s = (0.5 * delta).sin();
            let re = x.exp_m1() * delta.cos() - 2.0 * s * s;
            let im = x.exp() * delta.sin();
            NsLimitRow {
                replicas,
                deviation: re.hypot(im),
            }
        })
        .collect())
}

pub fn ns_limit_csv(rows: &[NsLimitRow]) -> String {
    let mut out = String::from("N,deviation\n");
    for r in rows {
        out.push_str(&format!("{},{:.14e}\n", r.replicas, r.deviation));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionTime {
    /// First time the coherence falls below 1/e, s.
    pub time: f64,
    pub tau_g: f64,
}

impl ReductionTime {
    pub fn ratio(&self) -> f64 {
        self.time / self.tau_g
    }
}

const SCAN_POINTS: usize = 2000;

/// First `t` at which the mean coherence drops below `1/e`, refined by
/// bisection on the closed form.
///
/// Fails when the curve does not cross within `100 tau_g`, or when it revives
/// above [`REVIVAL_LEVEL`] afterwards (coherent oscillation, not reduction).
pub fn estimate_reduction_time(cfg: &ReductionConfig) -> Result<ReductionTime> {
    if cfg.n_sites() < MIN_CLUSTER_SITES {
        return Err(Error::NoReduction(format!(
            "{} localized states: coherences oscillate, a cluster of at least {MIN_CLUSTER_SITES} is needed",
            cfg.n_sites()
        )));
    }
    let tau_g = cfg.tau_g()?;
    let pairs = cfg.pair_matrix();
    let (lo_exp, hi_exp) = (-3.0f64, SEARCH_HORIZON_TAU.log10());
    let times: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| tau_g * 10f64.powf(lo_exp + (hi_exp - lo_exp) * i as f64 / (SCAN_POINTS - 1) as f64))
        .collect();
    let curve: Vec<f64> = times.par_iter().map(|&t| coherence_at(cfg, &pairs, t)).collect();
    let first = curve.iter().position(|&c| c < REDUCTION_LEVEL).ok_or_else(|| {
        let min = curve.iter().copied().fold(f64::INFINITY, f64::min);
        Error::NoReduction(format!(
            "coherence stays above 1/e up to {SEARCH_HORIZON_TAU} tau_g (minimum {min:.3})"
        ))
    })?;
    if first == 0 {
        return Err(Error::NoReduction(format!(
            "coherence already below 1/e at {:.1e} tau_g",
            10f64.powf(lo_exp)
        )));
    }
    if let Some(rev) = curve[first..].iter().copied().find(|&c| c > REVIVAL_LEVEL) {
        return Err(Error::NoReduction(format!(
            "coherence revives to {rev:.3} after crossing 1/e (oscillation)"
        )));
    }
    let (mut lo, mut hi) = (times[first - 1], times[first]);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if coherence_at(cfg, &pairs, mid) < REDUCTION_LEVEL {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-9 * hi {
            break;
        }
    }
    Ok(ReductionTime { time: hi, tau_g })
}

/// The closed-form phase of hidden site `j` for the pair `(h, k)`.
pub fn site_phase(cfg: &ReductionConfig, j: usize, h: usize, k: usize, t: f64) -> f64 {
    kernel::phase_A(
        &cfg.profile,
        &cfg.consts,
        t,
        &cfg.sites[j],
        &cfg.sites[h],
        &cfg.sites[k],
        cfg.convention,
    )
}
