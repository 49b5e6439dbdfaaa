use nng_core::interdiction::{interdiction_scan, log_masses, ProbeRule};
use nng_core::kernel::{pair_integral, pair_integral_mc, MassProfile, PhaseConvention, ProfileShape};
use nng_core::metastate::{build_metastate, concentration_profile, extend, BranchWeights};
use nng_core::phone::{signal_csv, signal_sweep, PointerConfig};
use nng_core::reduction::{
    brute_force_reduced_rho, cluster, decay_csv, decay_curve, estimate_reduction_time, matrix_element,
    ns_limit_csv, ns_limit_deviation, ClusterPreset, ReductionConfig,
};
use nng_core::units::{above_threshold_with, localization_width_si, tau_g_si, PhysConstants, Quantity};
use nng_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, Result};
use crate::scenario::{Command, Scenario};

const C: PhysConstants = PhysConstants::CODATA;

/// Closed form vs brute force, entry-wise.
pub const REDUCTION_ORACLE_TOL: f64 = 1e-10;
/// Closed form vs Monte Carlo, in standard errors.
pub const KERNEL_ORACLE_SIGMAS: f64 = 4.0;
pub const METASTATE_ORACLE_TOL: f64 = 1e-12;

pub struct Output {
    pub csv: String,
    pub summary: String,
    pub seed: Option<u64>,
}

pub fn execute(s: &Scenario) -> Result<Output> {
    match s.command {
        Command::TauG => tau_g(s),
        Command::Metastate => metastate(s),
        Command::Reduce => reduce(s),
        Command::NsLimit => ns_limit(s),
        Command::Interdiction => interdiction(s),
        Command::Phone => phone(s),
        Command::Oracle => oracle(s),
    }
}

fn tau_g(s: &Scenario) -> Result<Output> {
    let (m, rho) = (s.quantity("mass"), s.quantity("density"));
    let tau = tau_g_si(&C, m, rho)?;
    let width = localization_width_si(&C, m)?;
    let above = above_threshold_with(&C, Quantity::mass(m), s.real("threshold_mp"))?;
    Ok(Output {
        csv: format!(
            "mass_kg,density_kg_m3,tau_g_s,localization_width_m,above_threshold\n{m:.14e},{rho:.14e},{tau:.14e},{width:.14e},{above}\n"
        ),
        summary: format!("tau_g = {tau:.6e} s; localization width {width:.6e} m; above threshold: {above}"),
        seed: None,
    })
}

fn metastate(s: &Scenario) -> Result<Output> {
    let w = BranchWeights::new(s.real("p"))?;
    let n = s.count("replicas");
    let state = build_metastate(w, n)?;
    let profile = concentration_profile(w, n)?;
    Ok(Output {
        csv: profile.to_csv(),
        summary: format!(
            "N = {n}: norm^2 - 1 = {:.3e}; sup |binomial - gaussian| / peak = {:.6e}",
            state.norm_sq() - 1.0,
            profile.relative_deviation()
        ),
        seed: None,
    })
}

fn preset(name: &str) -> ClusterPreset {
    match name {
        "width" => ClusterPreset::LocalizationWidth,
        "cigar" => ClusterPreset::Cigar,
        _ => ClusterPreset::BodyScale,
    }
}

fn cluster_cfg(s: &Scenario, replicas: u64) -> Result<ReductionConfig> {
    let profile = MassProfile::homogeneous_body(s.quantity("mass"), s.quantity("density"))?;
    let sites = cluster(preset(s.choice("preset")), &C, &profile, s.count("sites") as usize)?;
    Ok(ReductionConfig::new(sites, profile, replicas)?)
}

fn log_grid(lo: f64, hi: f64, points: u64) -> Result<Vec<f64>> {
    if !(lo > 0.0) || !(hi > lo) || points < 2 {
        return Err(CliError::key("t_min_tau", "need 0 < t_min_tau < t_max_tau and at least 2 points"));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect())
}

fn reduce(s: &Scenario) -> Result<Output> {
    let mut cfg = cluster_cfg(s, s.count("replicas"))?;
    if s.choice("convention") == "half" {
        cfg = cfg.with_convention(PhaseConvention::HalfPrefactor);
    }
    let tg = cfg.tau_g()?;
    let grid = log_grid(s.real("t_min_tau"), s.real("t_max_tau"), s.count("points"))?;
    let cfg = cfg.with_t_grid(grid.iter().map(|x| x * tg).collect());
    let rows = decay_curve(&cfg)?;
    let summary = match estimate_reduction_time(&cfg) {
        Ok(r) => format!("reduction time {:.6e} s = {:.4} tau_g (tau_g = {tg:.6e} s)", r.time, r.ratio()),
        Err(Error::NoReduction(why)) => format!("no reduction: {why} (tau_g = {tg:.6e} s)"),
        Err(e) => return Err(e.into()),
    };
    Ok(Output {
        csv: decay_csv(&rows, tg),
        summary,
        seed: None,
    })
}

fn ns_limit(s: &Scenario) -> Result<Output> {
    let cfg = cluster_cfg(s, 2)?;
    let t = s.real("t_tau") * cfg.tau_g()?;
    let rows = ns_limit_deviation(&cfg, s.count("h") as usize, s.count("k") as usize, t, s.count_list("n_list"))?;
    let ratios: Vec<String> = rows
        .windows(2)
        .map(|w| format!("{:.4}", w[1].deviation / w[0].deviation))
        .collect();
    Ok(Output {
        csv: ns_limit_csv(&rows),
        summary: format!("successive deviation ratios: {}", ratios.join(", ")),
        seed: None,
    })
}

fn interdiction(s: &Scenario) -> Result<Output> {
    let consts = C.with_gravity(C.g * s.real("g_scale"));
    let masses = log_masses(s.quantity("m_min"), s.quantity("m_max"), s.count("points") as usize)?;
    let curve = interdiction_scan(&consts, &masses, s.quantity("rho"), ProbeRule::Fraction(s.real("m_rule")), s.real("margin"))?;
    let feasible = curve.feasible.iter().filter(|&&f| f).count();
    Ok(Output {
        csv: curve.to_csv(&consts),
        summary: format!("{feasible} of {} masses feasible", masses.len()),
        seed: None,
    })
}

fn phone(s: &Scenario) -> Result<Output> {
    let profile = MassProfile::homogeneous_body(s.quantity("mass"), s.quantity("density"))?;
    let p = match s.choice("preset") {
        "body" => ClusterPreset::BodyScale,
        _ => ClusterPreset::LocalizationWidth,
    };
    let base = PointerConfig::preset(p, &C, profile)?;
    let tg = base.tau_g()?;
    let cfg = base
        .with_coupling(C.g * s.real("coupling_scale"))
        .with_precession(s.opt_real("precession"));
    let points = s.count("points");
    if points < 2 {
        return Err(CliError::key("points", "need at least 2 points"));
    }
    let t_max = s.real("t_max_tau") * tg;
    let ts: Vec<f64> = (0..points).map(|i| t_max * i as f64 / (points - 1) as f64).collect();
    let rows = signal_sweep(&cfg, &ts)?;
    let last = rows.last().expect("non-empty grid");
    Ok(Output {
        csv: signal_csv(&rows, tg),
        summary: format!(
            "signal {:.6} at t = 0, {:.6} at {:.3} tau_g; branch coherence {:.6} -> {:.6}",
            rows[0].signal(),
            last.signal(),
            last.t / tg,
            rows[0].coherence,
            last.coherence
        ),
        seed: None,
    })
}

fn oracle(s: &Scenario) -> Result<Output> {
    let seed = s.count("seed");
    let trials = s.count("trials");
    let nn = s.count("nn") as usize;
    if trials == 0 {
        return Err(CliError::key("trials", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (csv, summary, ok) = match s.choice("suite") {
        "reduction" => oracle_reduction(&mut rng, nn, trials)?,
        "kernel" => oracle_kernel(&mut rng, trials, s.count("samples") as usize)?,
        _ => oracle_metastate(&mut rng, nn, trials)?,
    };
    if !ok {
        return Err(CliError::Internal(format!("oracle mismatch: {summary}")));
    }
    Ok(Output {
        csv,
        summary,
        seed: Some(seed),
    })
}

fn oracle_reduction(rng: &mut ChaCha8Rng, nn: usize, trials: u64) -> Result<(String, String, bool)> {
    if !(2..=8).contains(&nn) {
        return Err(CliError::key("nn", "the brute-force tracer handles 2 to 8 sites"));
    }
    let mut csv = String::from("trial,sites,max_abs_diff,half_prefactor_diff\n");
    let (mut worst, mut worst_half) = (0.0f64, 0.0f64);
    for trial in 0..trials {
        let mass = 10f64.powf(rng.random_range(-16.0..-12.0));
        let profile = MassProfile::homogeneous_body(mass, rng.random_range(500.0..5000.0))?;
        let r = profile.size_scale();
        let sites = (0..nn)
            .map(|_| [r * rng.random_range(-2.0..2.0), r * rng.random_range(-2.0..2.0), r * rng.random_range(-2.0..2.0)])
            .collect();
        let cfg = ReductionConfig::new(sites, profile, 2)?;
        let half = cfg.clone().with_convention(PhaseConvention::HalfPrefactor);
        let tg = cfg.tau_g()?;
        let (mut d, mut dh) = (0.0f64, 0.0f64);
        for _ in 0..10 {
            let t = rng.random_range(0.0..3.0) * tg;
            let brute = brute_force_reduced_rho(&cfg, t)?;
            for h in 0..nn {
                for k in 0..nn {
                    let b = brute[h * nn + k];
                    d = d.max((matrix_element(&cfg, h, k, t)? - b).norm());
                    dh = dh.max((matrix_element(&half, h, k, t)? - b).norm());
                }
            }
        }
        worst = worst.max(d);
        worst_half = worst_half.max(dh);
        csv.push_str(&format!("{trial},{nn},{d:.14e},{dh:.14e}\n"));
    }
    let summary = format!(
        "max |closed - brute| = {worst:.3e} (tolerance {REDUCTION_ORACLE_TOL:e}); half-prefactor convention differs by up to {worst_half:.3e}"
    );
    Ok((csv, summary, worst <= REDUCTION_ORACLE_TOL))
}

fn oracle_kernel(rng: &mut ChaCha8Rng, trials: u64, samples: usize) -> Result<(String, String, bool)> {
    let mut csv = String::from("trial,shape,size_m,d_m,closed_per_m,mc_per_m,std_error_per_m,z\n");
    let mut worst = 0.0f64;
    for trial in 0..trials {
        let size = 10f64.powf(rng.random_range(-9.0..-3.0));
        let profile = if rng.random_bool(0.5) {
            MassProfile::uniform_sphere(1.0, size)?
        } else {
            MassProfile::gaussian(1.0, size)?
        };
        let d = rng.random_range(0.0..4.0) * size;
        let mc_seed: u64 = rng.random();
        let mc = pair_integral_mc(&profile, d, samples, mc_seed)?;
        let closed = pair_integral(&profile, d);
        let z = (mc.estimate - closed) / mc.std_error;
        worst = worst.max(z.abs());
        let shape = match profile.shape {
            ProfileShape::UniformSphere { .. } => "uniform",
            ProfileShape::Gaussian { .. } => "gaussian",
        };
        csv.push_str(&format!(
            "{trial},{shape},{size:.14e},{d:.14e},{closed:.14e},{:.14e},{:.14e},{z:.14e}\n",
            mc.estimate, mc.std_error
        ));
    }
    let summary = format!("max |closed - MC| = {worst:.3} standard errors (limit {KERNEL_ORACLE_SIGMAS})");
    Ok((csv, summary, worst <= KERNEL_ORACLE_SIGMAS))
}

fn oracle_metastate(rng: &mut ChaCha8Rng, nn: usize, trials: u64) -> Result<(String, String, bool)> {
    if nn == 0 {
        return Err(CliError::key("nn", "must be positive"));
    }
    let mut csv = String::from("trial,p,max_abs_diff\n");
    let mut worst = 0.0f64;
    for trial in 0..trials {
        let p: f64 = rng.random_range(0.0..1.0);
        let w = BranchWeights::new(p)?;
        let mut d = 0.0f64;
        for n in 1..=nn as u64 {
            let a = extend(&build_metastate(w, n)?, w)?;
            let b = build_metastate(w, n + 1)?;
            for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                d = d.max((x - y).abs());
            }
        }
        worst = worst.max(d);
        csv.push_str(&format!("{trial},{p:.14e},{d:.14e}\n"));
    }
    let summary = format!("max |extend(build(N)) - build(N+1)| = {worst:.3e} (tolerance {METASTATE_ORACLE_TOL:e})");
    Ok((csv, summary, worst <= METASTATE_ORACLE_TOL))
}
