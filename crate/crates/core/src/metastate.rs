//! Two-branch N-replica metastates.
//!
//! `(sqrt(p)|x> + sqrt(q)|y>)^{(x)N}` expanded over the symmetrized kets with
//! `k` replicas at `x` has coefficients `sqrt(C(N,k)) p^{k/2} q^{(N-k)/2}`.
//! Coefficients are kept as logarithms because `C(10^4, 5000)` overflows f64.

use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Probabilities of the two branches `x` and `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchWeights {
    p: f64,
    q: f64,
}

impl BranchWeights {
    /// Weights `(p, 1 - p)`.
    pub fn new(p: f64) -> Result<Self> {
        Self::from_pair(p, 1.0 - p)
    }

    pub fn from_pair(p: f64, q: f64) -> Result<Self> {
        let ok = |v: f64| (0.0..=1.0).contains(&v);
        if !ok(p) || !ok(q) {
            return Err(Error::param("p", format!("weights ({p}, {q}) outside [0, 1]")));
        }
        if (p + q - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::param("p", format!("p + q = {} != 1", p + q)));
        }
        Ok(BranchWeights { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    fn is_degenerate(&self) -> bool {
        self.p == 0.0 || self.q == 0.0
    }
}

/// Coefficient vector indexed by the number `k` of replicas in branch `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Metastate {
    weights: BranchWeights,
    ln_coeffs: Vec<f64>,
}

/// `k ln p`, with `0 ln 0 = 0`.
fn xlogy(k: f64, p: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        k * p.ln()
    }
}

fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub fn build_metastate(weights: BranchWeights, replicas: u64) -> Result<Metastate> {
    if replicas == 0 {
        return Err(Error::param("N", "replica count must be >= 1"));
    }
    let n = replicas as f64;
    let ln_coeffs = (0..=replicas)
        .map(|k| {
            let kf = k as f64;
            0.5 * (ln_binomial(replicas, k) + xlogy(kf, weights.p) + xlogy(n - kf, weights.q))
        })
        .collect();
    Ok(Metastate { weights, ln_coeffs })
}

/// Tensor one more replica `(sqrt(p)|x> + sqrt(q)|y>)` onto `state`.
///
/// Works entirely through the overlaps of the symmetrized kets,
/// `<S^{N+1}_k | S^N_k, y> = sqrt((N+1-k)/(N+1))` and
/// `<S^{N+1}_k | S^N_{k-1}, x> = sqrt(k/(N+1))`, i.e. Pascal's rule, and never
/// evaluates a binomial coefficient.
pub fn extend(state: &Metastate, weights: BranchWeights) -> Result<Metastate> {
    if (state.weights.p - weights.p).abs() > WEIGHT_SUM_TOL {
        return Err(Error::param(
            "weights",
            format!(
                "state built with p = {}, extension uses p = {}",
                state.weights.p, weights.p
            ),
        ));
    }
    let n = state.replicas() as f64;
    let ln_sp = 0.5 * weights.p.ln();
    let ln_sq = 0.5 * weights.q.ln();
    let old = &state.ln_coeffs;
    let ln_coeffs = (0..old.len() + 1)
        .map(|k| {
            let kf = k as f64;
            let stay = if k < old.len() && weights.q > 0.0 {
                ln_sq + 0.5 * ((n + 1.0 - kf) / (n + 1.0)).ln() + old[k]
            } else {
                f64::NEG_INFINITY
            };
            let add = if k > 0 && weights.p > 0.0 {
                ln_sp + 0.5 * (kf / (n + 1.0)).ln() + old[k - 1]
            } else {
                f64::NEG_INFINITY
            };
            ln_add_exp(stay, add)
        })
        .collect();
    Ok(Metastate {
        weights: state.weights,
        ln_coeffs,
    })
}

impl Metastate {
    pub fn replicas(&self) -> u64 {
        (self.ln_coeffs.len() - 1) as u64
    }

    pub fn weights(&self) -> BranchWeights {
        self.weights
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.ln_coeffs[k].exp()
    }

    pub fn ln_coeff(&self, k: usize) -> f64 {
        self.ln_coeffs[k]
    }

    pub fn coeffs(&self) -> Vec<f64> {
        self.ln_coeffs.iter().map(|c| c.exp()).collect()
    }

    /// `sum_k coeffs[k]^2`.
    pub fn norm_sq(&self) -> f64 {
        // compensated: ~10^4 terms of wildly different size
        let max = self
            .ln_coeffs
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        let mut comp = 0.0;
        for &c in &self.ln_coeffs {
            let y = (2.0 * (c - max)).exp() - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        sum * (2.0 * max).exp()
    }
}

/// One row of the binomial-vs-Gaussian comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationRow {
    pub alpha: f64,
    pub binomial_weight: f64,
    pub gaussian_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationProfile {
    pub rows: Vec<ConcentrationRow>,
    /// `max_k |binomial - gaussian|`.
    pub sup_deviation: f64,
    /// Largest binomial weight.
    pub peak_weight: f64,
}

impl ConcentrationProfile {
    pub fn relative_deviation(&self) -> f64 {
        self.sup_deviation / self.peak_weight
    }

    /// Standard deviation of `alpha` under the binomial weights.
    pub fn alpha_std(&self) -> f64 {
        let mean: f64 = self.rows.iter().map(|r| r.alpha * r.binomial_weight).sum();
        self.rows
            .iter()
            .map(|r| (r.alpha - mean).powi(2) * r.binomial_weight)
            .sum::<f64>()
            .sqrt()
    }

    /// Binomial mass outside `|alpha - p| <= width`.
    pub fn mass_outside(&self, p: f64, width: f64) -> f64 {
        self.rows
            .iter()
            .filter(|r| (r.alpha - p).abs() > width)
            .map(|r| r.binomial_weight)
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,binomial_weight,gaussian_weight\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.14e},{:.14e},{:.14e}\n",
                r.alpha, r.binomial_weight, r.gaussian_weight
            ));
        }
        out
    }
}

/// Binomial weights `C(N,k) p^k q^{N-k}` next to the Gaussian
/// `(2 pi p q / N)^{-1/2} exp[-(alpha - p)^2 / (2 p q / N)] / N`.
pub fn concentration_profile(weights: BranchWeights, replicas: u64) -> Result<ConcentrationProfile> {
    if replicas < 2 {
        return Err(Error::param("N", "need at least 2 replicas"));
    }
    if weights.is_degenerate() {
        return Err(Error::param("p", "Gaussian limit undefined for p in {0, 1}"));
    }
    let state = build_metastate(weights, replicas)?;
    let n = replicas as f64;
    let (p, q) = (weights.p, weights.q);
    let var = p * q / n;
    let norm = (2.0 * std::f64::consts::PI * var).sqrt().recip() / n;
    let rows: Vec<ConcentrationRow> = (0..=replicas as usize)
        .map(|k| {
            let alpha = k as f64 / n;
            ConcentrationRow {
                alpha,
                binomial_weight: (2.0 * state.ln_coeff(k)).exp(),
                gaussian_weight: norm * (-(alpha - p).powi(2) / (2.0 * var)).exp(),
            }
        })
        .collect();
    let sup_deviation = rows
        .iter()
        .map(|r| (r.binomial_weight - r.gaussian_weight).abs())
        .fold(0.0, f64::max);
    let peak_weight = rows.iter().map(|r| r.binomial_weight).fold(0.0, f64::max);
    Ok(ConcentrationProfile {
        rows,
        sup_deviation,
        peak_weight,
    })
}
