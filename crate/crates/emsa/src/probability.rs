//! Seeded Monte Carlo estimation of the probabilities the finite-volume
//! bounds control: the m-localizing probability, level-spacing probability,
//! the small-window eigenvalue-count event, the Minami second-factorial
//! moment, and the multiscale scan over the scale sequence.
//!
//! Every driver is reproducible: per-trial randomness is counter-based, trial
//! outcomes are collected in trial order, and aggregation is sequential, so
//! results are independent of the parallel schedule.

use rayon::prelude::*;
use serde::Serialize;

use crate::certify::{self, ScaleParams};
use crate::error::{Error, Result};
use crate::lattice::{rat_int, rat_to_f64, LatticeBox, Rat, Region};
use crate::model::{sample_potential, AndersonHamiltonian, SingleSiteDistribution};
use crate::rng;
use crate::spectral;

/// 95% normal quantile used by the Wilson interval.
const Z95: f64 = 1.959963984540054;

/// One Anderson-model configuration for the drivers: dimension, hopping, and
/// the single-site law.
#[derive(Debug, Clone, Serialize)]
pub struct ModelSpec {
    pub dim: usize,
    pub eps: f64,
    pub dist: SingleSiteDistribution,
}

impl ModelSpec {
    pub fn sample_hamiltonian(
        &self,
        region: &Region,
        master_seed: u64,
        trial: u64,
    ) -> Result<AndersonHamiltonian> {
        let pot = sample_potential(region, &self.dist, master_seed, trial)?;
        AndersonHamiltonian::new(region, self.eps, &pot)
    }
}

/// How a Monte Carlo estimate relates to the stated probability bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundVerdict {
    /// The interval sits on the correct side of the bound.
    Consistent,
    /// The interval straddles the bound; a fluctuation cannot be ruled out.
    Inconclusive,
    /// The 95% interval excludes the bound on the wrong side.
    BoundViolated,
    /// No bound available (non-Holder law or unsupported kind).
    NotCompared,
}

/// A Bernoulli Monte Carlo estimate with its Wilson 95% interval and the
/// verdict against a stated lower bound on the success probability.
#[derive(Debug, Clone, Serialize)]
pub struct McEstimate {
    pub trials: u64,
    pub successes: u64,
    pub point: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    /// Stated lower bound on the success probability, when comparable.
    pub bound: Option<f64>,
    pub verdict: BoundVerdict,
}

/// Wilson 95% score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    assert!(trials > 0 && successes <= trials);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

impl McEstimate {
    pub fn from_counts(successes: u64, trials: u64, bound: Option<f64>) -> Result<Self> {
        if trials == 0 {
            return Err(Error::invalid("Monte Carlo estimate needs at least one trial"));
        }
        let (wilson_low, wilson_high) = wilson_interval(successes, trials);
        let point = successes as f64 / trials as f64;
        let verdict = match bound {
            None => BoundVerdict::NotCompared,
            Some(b) if b <= 0.0 => BoundVerdict::Consistent,
            Some(b) if wilson_high < b => BoundVerdict::BoundViolated,
            Some(b) if wilson_low >= b => BoundVerdict::Consistent,
            Some(_) => BoundVerdict::Inconclusive,
        };
        Ok(McEstimate { trials, successes, point, wilson_low, wilson_high, bound, verdict })
    }

    /// Standard error of the point estimate.
    pub fn std_error(&self) -> f64 {
        (self.point * (1.0 - self.point) / self.trials as f64).sqrt()
    }
}

/// Run `trials` independent Bernoulli trials in parallel and count successes.
/// Outcomes are materialized in trial order, so the count (and any downstream
/// serialization) is schedule-independent.
fn run_trials<F>(trials: u64, per_trial: F) -> Result<u64>
where
    F: Fn(u64) -> Result<bool> + Sync,
{
    let outcomes: Vec<Result<bool>> = (0..trials).into_par_iter().map(&per_trial).collect();
    let mut successes = 0u64;
    for outcome in outcomes {
        if outcome? {
            successes += 1;
        }
    }
    Ok(successes)
}

/// Probability that the origin-centered box of side `l` is m-localizing,
/// against the explicit large-disorder lower bound
/// `1 - K (L+1)^{2d} (8 d eps + 2 e^{-L^beta})^alpha / 2` (Holder laws only).
pub fn mc_localizing_probability(
    model: &ModelSpec,
    l: Rat,
    m: f64,
    params: &ScaleParams,
    trials: u64,
    master_seed: u64,
) -> Result<McEstimate> {
    let bx = LatticeBox::centered(model.dim, l)?;
    let region = bx.sites()?;
    let successes = run_trials(trials, |trial| {
        let h = model.sample_hamiltonian(&region, master_seed, trial)?;
        Ok(certify::certify_m_localizing(&bx, &h, m, params)?.verdict)
    })?;
    let bound = model.dist.holder().map(|holder| {
        let lf = rat_to_f64(l);
        let d = model.dim as f64;
        let spread = 8.0 * d * model.eps + 2.0 * (-lf.powf(params.beta)).exp();
        1.0 - 0.5 * holder.k * (lf + 1.0).powf(2.0 * d) * spread.powf(holder.alpha)
    });
    McEstimate::from_counts(successes, trials, bound)
}

/// Probability that a region is `R`-level spacing, against the bound
/// `1 - Y e^{-(2 alpha - 1) R^beta} |Theta|^2` with
/// `Y = 2^{2 alpha - 1} K~^2 (diam supp mu + 2 d eps0 + 1)`.
///
/// For non-Holder laws the estimate is still returned, with no comparison.
/// `eps0` defaults to the model's `eps`.
pub fn mc_level_spacing_probability(
    model: &ModelSpec,
    theta: &Region,
    r: f64,
    beta: f64,
    trials: u64,
    master_seed: u64,
    eps0: Option<f64>,
) -> Result<McEstimate> {
    let successes = run_trials(trials, |trial| {
        let h = model.sample_hamiltonian(theta, master_seed, trial)?;
        let es = spectral::eigensystem(&h)?;
        Ok(certify::is_level_spacing(&es, r, beta))
    })?;
    let bound = model.dist.holder().map(|holder| {
        let eps0 = eps0.unwrap_or(model.eps);
        let a = holder.alpha;
        let y = (2.0f64).powf(2.0 * a - 1.0)
            * holder.k_tilde().powi(2)
            * (model.dist.support_diameter() + 2.0 * model.dim as f64 * eps0 + 1.0);
        let n = theta.len() as f64;
        1.0 - y * (-(2.0 * a - 1.0) * r.powf(beta)).exp() * n * n
    });
    McEstimate::from_counts(successes, trials, bound)
}

/// Probability of the windowed eigenvalue-count event: cover `interval` with
/// `2 ceil(|I|/(2 eta))` overlapping windows of length `2 eta`, stepping by
/// `eta`; the event holds when no window captures two eigenvalues. Compared
/// against `1 - K~^2 (|I|+1) (2 eta)^{2 alpha - 1} |Theta|^2`.
pub fn klm_event_probability(
    model: &ModelSpec,
    theta: &Region,
    interval: (f64, f64),
    eta: f64,
    trials: u64,
    master_seed: u64,
) -> Result<McEstimate> {
    if !(eta > 0.0 && eta <= 0.5) {
        return Err(Error::invalid("klm: eta must lie in (0, 1/2]"));
    }
    let (lo, hi) = interval;
    if !(hi > lo) {
        return Err(Error::invalid("klm: empty interval"));
    }
    let length = hi - lo;
    let window_count = 2 * (length / (2.0 * eta)).ceil() as i64;
    let successes = run_trials(trials, |trial| {
        let h = model.sample_hamiltonian(theta, master_seed, trial)?;
        let es = spectral::eigensystem(&h)?;
        let mut counts: std::collections::HashMap<i64, u32> = std::collections::HashMap::new();
        for &lam in es.eigenvalues() {
            // Windows [lo + k eta, lo + k eta + 2 eta] containing lam.
            let k_min = ((lam - lo - 2.0 * eta) / eta).ceil() as i64;
            let k_max = ((lam - lo) / eta).floor() as i64;
            for k in k_min.max(0)..=k_max.min(window_count - 1) {
                let c = counts.entry(k).or_insert(0);
                *c += 1;
                if *c >= 2 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    })?;
    let bound = model.dist.holder().map(|holder| {
        let n = theta.len() as f64;
        let kt = holder.k_tilde();
        1.0 - kt * kt * (length + 1.0) * (2.0 * eta).powf(2.0 * holder.alpha - 1.0) * n * n
    });
    McEstimate::from_counts(successes, trials, bound)
}

/// Estimate of the Minami second factorial moment `E[k (k-1)]` for the
/// eigenvalue count `k` in an interval, against `(Q(|J|) |Theta|)^2`.
#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub trials: u64,
    /// Estimate of `E[tr chi_J (tr chi_J - 1)]`.
    pub moment: f64,
    pub std_error: f64,
    pub bound: Option<f64>,
    pub verdict: BoundVerdict,
}

pub fn minami_empirical(
    model: &ModelSpec,
    theta: &Region,
    interval: (f64, f64),
    trials: u64,
    master_seed: u64,
) -> Result<MomentReport> {
    if trials == 0 {
        return Err(Error::invalid("minami: at least one trial required"));
    }
    let (lo, hi) = interval;
    let per_trial: Vec<Result<u64>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let h = model.sample_hamiltonian(theta, master_seed, trial)?;
            let es = spectral::eigensystem(&h)?;
            let k = es
                .eigenvalues()
                .iter()
                .filter(|&&lam| lam >= lo && lam <= hi)
                .count() as u64;
            Ok(k * (k.saturating_sub(1)))
        })
        .collect();
    // Integer accumulation keeps the aggregate exact and order-free.
    let mut sum = 0u64;
    let mut sum_sq = 0u128;
    for value in per_trial {
        let v = value?;
        sum += v;
        sum_sq += (v as u128) * (v as u128);
    }
    let n = trials as f64;
    let moment = sum as f64 / n;
    let variance = (sum_sq as f64 / n - moment * moment).max(0.0);
    let std_error = (variance / n).sqrt();
    let width = (hi - lo).max(0.0);
    let bound = match model.dist.concentration(width) {
        Ok((_, q)) => Some((q * theta.len() as f64).powi(2)),
        Err(_) => None,
    };
    let verdict = match bound {
        None => BoundVerdict::NotCompared,
        Some(b) => {
            if moment - Z95 * std_error > b {
                BoundVerdict::BoundViolated
            } else if moment + Z95 * std_error <= b {
                BoundVerdict::Consistent
            } else {
                BoundVerdict::Inconclusive
            }
        }
    };
    Ok(MomentReport { trials, moment, std_error, bound, verdict })
}

/// The scale sequence `L_{k+1} = L_k^gamma`, kept in the log domain, with the
/// per-scale target mass `m0/2`.
#[derive(Debug, Clone, Serialize)]
pub struct ScaleSequence {
    pub l0: f64,
    pub gamma: f64,
    pub scales: Vec<f64>,
    pub target_mass: f64,
    /// The sequence was cut before `k_max` to stay representable.
    pub truncated: bool,
}

pub fn scale_sequence(l0: f64, gamma: f64, k_max: usize, m0: f64) -> Result<ScaleSequence> {
    if !(l0 > 1.0) {
        return Err(Error::invalid("scale sequence: L0 must exceed 1"));
    }
    if !(gamma > 1.0) {
        return Err(Error::invalid("scale sequence: gamma must exceed 1"));
    }
    let mut scales = Vec::with_capacity(k_max + 1);
    let mut truncated = false;
    let log_l0 = l0.ln();
    for k in 0..=k_max {
        let log_l = gamma.powi(k as i32) * log_l0;
        if log_l > 700.0 {
            truncated = true;
            break;
        }
        scales.push(log_l.exp());
    }
    Ok(ScaleSequence { l0, gamma, scales, target_mass: 0.5 * m0, truncated })
}

/// One scale of the multiscale scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub k: usize,
    pub scale: f64,
    pub sites: usize,
    pub target_mass: f64,
    /// `1 - e^{-L^zeta}` and `1 - e^{-L^xi}`.
    pub target_zeta: f64,
    pub target_xi: f64,
    pub skipped: bool,
    pub estimate: Option<McEstimate>,
    /// Wilson lower bound reaches the respective target.
    pub meets_zeta: Option<bool>,
    pub meets_xi: Option<bool>,
}

/// Scan the scale sequence, estimating the m0/2-localizing probability at
/// each scale and comparing it to both decay targets. Scales whose boxes
/// exceed the site cap are skipped with a flag.
#[allow(clippy::too_many_arguments)]
pub fn msa_scan(
    model: &ModelSpec,
    params: &ScaleParams,
    l0: f64,
    k_max: usize,
    m0: f64,
    trials_per_scale: u64,
    master_seed: u64,
    site_cap: usize,
) -> Result<Vec<ScanRow>> {
    let sequence = scale_sequence(l0, params.gamma, k_max, m0)?;
    let mut rows = Vec::with_capacity(sequence.scales.len());
    for (k, &scale) in sequence.scales.iter().enumerate() {
        // Box sides are exact rationals; scales from the log domain are
        // rational-rounded at 1e-6.
        let side = rat_int((scale * 1e6).round() as i64) / rat_int(1_000_000);
        let sites_per_axis = 2 * (side / rat_int(2)).floor().to_integer() + 1;
        let sites = (sites_per_axis as usize).pow(model.dim as u32);
        let target_zeta = 1.0 - (-scale.powf(params.zeta)).exp();
        let target_xi = 1.0 - (-scale.powf(params.xi)).exp();
        if sites > site_cap {
            rows.push(ScanRow {
                k,
                scale,
                sites,
                target_mass: sequence.target_mass,
                target_zeta,
                target_xi,
                skipped: true,
                estimate: None,
                meets_zeta: None,
                meets_xi: None,
            });
            continue;
        }
        let estimate = mc_localizing_probability(
            model,
            side,
            sequence.target_mass,
            params,
            trials_per_scale,
            rng::derive_seed(master_seed, k as u64),
        )?;
        rows.push(ScanRow {
            k,
            scale,
            sites,
            target_mass: sequence.target_mass,
            target_zeta,
            target_xi,
            skipped: false,
            meets_zeta: Some(estimate.wilson_low >= target_zeta),
            meets_xi: Some(estimate.wilson_low >= target_xi),
            estimate: Some(estimate),
        });
    }
    Ok(rows)
}
