//! Green's-function side of the analysis: `(m,E)`-regular boxes, the
//! geometric resolvent identity, the empirical Wegner bound, and the two
//! experiments relating eigensystem localization to resolvent decay.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::certify::{self, ScaleParams};
use crate::error::{Error, Result};
use crate::lattice::{
    self, point_dist, rat_int, rat_to_f64, LatticeBox, Rat, Region, Site,
};
use crate::model::{AndersonHamiltonian, Potential};
use crate::probability::{McEstimate, ModelSpec};
use crate::rng;
use crate::spectral::{self, Eigensystem, NEAR_SINGULAR_TOL};

/// Decision record for one `(m,E)`-regularity test.
#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub energy: f64,
    pub m: f64,
    pub is_regular: bool,
    /// `E` was within the near-singular tolerance of the spectrum.
    pub near_singular: bool,
    pub resolvent_norm: f64,
    /// Worst `|G(E;x,y)| / e^{-m|x-y|}` over tested pairs (1 = at the bound).
    pub worst_ratio: f64,
    pub worst_pair: Option<(Site, Site)>,
    pub tested_pairs: usize,
    /// Absolute noise floor granted to each entry, derived from the computed
    /// residual `(H-E)G - I`.
    pub entry_slack: f64,
}

/// Test `|G_{Lambda_L}(E; x, y)| <= e^{-m |x-y|}` over all site pairs at
/// sup-distance at least `L/100`, granting each entry the numerically
/// certified accuracy of the computed resolvent.
pub fn is_regular(
    h: &AndersonHamiltonian,
    es: &Eigensystem,
    es_box: &LatticeBox,
    energy: f64,
    m: f64,
) -> Result<RegularityReport> {
    let l = rat_to_f64(es_box.side());
    if l < 1.0 {
        return Err(Error::invalid("is_regular: box side must be at least 1"));
    }
    let dist = es.dist_to_spectrum(energy);
    let resolvent_norm = 1.0 / dist;
    if dist <= NEAR_SINGULAR_TOL * es.norm_scale() {
        return Ok(RegularityReport {
            energy,
            m,
            is_regular: false,
            near_singular: true,
            resolvent_norm,
            worst_ratio: f64::INFINITY,
            worst_pair: None,
            tested_pairs: 0,
            entry_slack: 0.0,
        });
    }
    let g = spectral::green_matrix(h, es, energy)?;
    // Residual-certified entry accuracy: G_hat = G (I + R) gives
    // |dG(x,y)| <= |G| * sqrt(n) * |R|_max.
    let n = h.len();
    let mut shifted = h.matrix().clone();
    for i in 0..n {
        shifted[(i, i)] -= energy;
    }
    let residual = (shifted * &g - DMatrix::<f64>::identity(n, n)).amax();
    let entry_slack = 10.0 * resolvent_norm * (n as f64).sqrt() * residual;

    let region = h.region();
    let threshold = l / 100.0;
    let mut worst_ratio = 0.0f64;
    let mut worst_pair = None;
    let mut tested = 0usize;
    let mut ok = true;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = lattice::site_dist(region.site(i), region.site(j));
            if (d as f64) < threshold {
                continue;
            }
            tested += 1;
            let bound = (-m * d as f64).exp();
            let value = g[(i, j)].abs();
            let ratio = value / bound;
            if ratio > worst_ratio {
                worst_ratio = ratio;
                worst_pair = Some((region.site(i).clone(), region.site(j).clone()));
            }
            if value > bound + entry_slack {
                ok = false;
            }
        }
    }
    Ok(RegularityReport {
        energy,
        m,
        is_regular: ok,
        near_singular: false,
        resolvent_norm,
        worst_ratio,
        worst_pair,
        tested_pairs: tested,
        entry_slack,
    })
}

/// Residual of the geometric resolvent identity for one eigenpair of the big
/// box against a strictly smaller sub-box.
#[derive(Debug, Clone, Serialize)]
pub struct ResolventIdentityReport {
    /// `max_x |phi(x) - sum_{(u,v)} eps G_sub(lambda; x, u) phi(v)|`.
    pub residual: f64,
    /// `1e-8`, condition-scaled by the sub-box resolvent.
    pub tolerance: f64,
    /// Distance from `lambda` to the sub-box spectrum.
    pub sub_gap: f64,
    /// The identity was not evaluated (`lambda` resonant with the sub-box).
    pub skipped: bool,
}

/// Check `phi(x) = sum_{(u,v) in boundary} eps G_sub(lambda; x, u) phi(v)`
/// for all `x` in the sub-box, where `(phi, lambda)` is an eigenpair of the
/// enclosing box and the boundary pairs the sub-box with its complement.
pub fn geometric_resolvent_check(
    h: &AndersonHamiltonian,
    phi: &nalgebra::DVector<f64>,
    lambda: f64,
    sub_box: &LatticeBox,
) -> Result<ResolventIdentityReport> {
    let theta = h.region();
    let sub = sub_box.sites()?;
    if !sub.is_subset_of(theta) {
        return Err(Error::invalid("resolvent identity: sub-box not inside the region"));
    }
    if sub.len() == theta.len() {
        return Err(Error::invalid(
            "resolvent identity: sub-box must be strictly smaller (empty boundary otherwise)",
        ));
    }
    if phi.len() != theta.len() {
        return Err(Error::invalid("resolvent identity: phi length mismatch"));
    }
    let sub_values: Vec<f64> = sub
        .sites()
        .iter()
        .map(|s| h.potential()[theta.position(s).expect("subset site")])
        .collect();
    let sub_pot = Potential::new(sub.clone(), sub_values)?;
    let h_sub = AndersonHamiltonian::new(&sub, h.eps(), &sub_pot)?;
    let es_sub = spectral::eigensystem(&h_sub)?;
    let sub_gap = es_sub.dist_to_spectrum(lambda);
    if sub_gap <= 1e-10 {
        return Ok(ResolventIdentityReport {
            residual: f64::NAN,
            tolerance: 0.0,
            sub_gap,
            skipped: true,
        });
    }
    let g = spectral::green_matrix(&h_sub, &es_sub, lambda)?;
    let boundary = lattice::boundaries(&sub, theta)?;
    let mut residual = 0.0f64;
    for (x_row, x_site) in sub.sites().iter().enumerate() {
        let mut acc = 0.0;
        for (u, v) in &boundary.edges {
            let u_row = sub.position(u).expect("interior endpoint in sub-box");
            let v_row = theta.position(v).expect("exterior endpoint in region");
            acc += h.eps() * g[(x_row, u_row)] * phi[v_row];
        }
        let x_theta = theta.position(x_site).expect("subset site");
        residual = residual.max((phi[x_theta] - acc).abs());
    }
    let tolerance = 1e-8 * (h.eps() / sub_gap).max(1.0);
    Ok(ResolventIdentityReport { residual, tolerance, sub_gap, skipped: false })
}

/// Deterministic probe energies: uniform draws over the spectral enclosure
/// plus midpoints of the largest spectral gaps.
pub fn probe_energies(
    h: &AndersonHamiltonian,
    es: &Eigensystem,
    count: usize,
    seed: u64,
    trial: u64,
) -> Vec<f64> {
    let (lo, hi) = h.spectral_enclosure();
    let n_gaps = if count >= 3 { 2usize } else { 0 };
    let n_uniform = count.saturating_sub(n_gaps);
    let mut out = Vec::with_capacity(count);
    for k in 0..n_uniform {
        out.push(lo + (hi - lo) * rng::uniform_53(seed, trial, k as u64));
    }
    if n_gaps > 0 && es.len() >= 2 {
        let lams = es.eigenvalues();
        let mut gaps: Vec<(f64, usize)> = lams
            .windows(2)
            .enumerate()
            .map(|(i, w)| (w[1] - w[0], i))
            .collect();
        gaps.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite gaps").then(a.1.cmp(&b.1)));
        for &(_, i) in gaps.iter().take(n_gaps) {
            out.push(0.5 * (lams[i] + lams[i + 1]));
        }
    }
    out
}

/// Aggregate of the "localizing boxes have regular resolvents" experiment.
#[derive(Debug, Clone, Serialize)]
pub struct LocalizingImpliesRegularReport {
    pub trials: u64,
    pub localizing_trials: u64,
    /// (trial, energy) pairs satisfying both hypotheses.
    pub hypothesis_pairs: u64,
    pub regular_pairs: u64,
    /// Probes excluded by the resolvent-norm gate.
    pub excluded_resolvent: u64,
    pub pass_fraction: f64,
    /// Worst `|G|/bound` ratio among hypothesis pairs (<= 1 means all clear).
    pub worst_margin: f64,
}

/// For each trial: if the box is m-localizing and `|G(E)| <= e^{L^beta}` at a
/// probe energy, test `(m', E)`-regularity.
#[allow(clippy::too_many_arguments)]
pub fn localizing_implies_regular_experiment(
    model: &ModelSpec,
    l: Rat,
    m: f64,
    m_prime: f64,
    params: &ScaleParams,
    trials: u64,
    energies_per_trial: usize,
    master_seed: u64,
) -> Result<LocalizingImpliesRegularReport> {
    if !(m_prime < m) {
        return Err(Error::invalid("experiment requires m' < m"));
    }
    let bx = LatticeBox::centered(model.dim, l)?;
    let region = bx.sites()?;
    let lf = rat_to_f64(l);
    let gate = lf.powf(params.beta).exp();
    let energy_seed = rng::derive_seed(master_seed, 101);

    struct TrialOut {
        localizing: bool,
        hypothesis: u64,
        regular: u64,
        excluded: u64,
        worst: f64,
    }
    let outcomes: Vec<Result<TrialOut>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let h = model.sample_hamiltonian(&region, master_seed, trial)?;
            let es = spectral::eigensystem(&h)?;
            let cert = certify::certify_with_eigensystem(&bx, &es, m, params)?;
            let mut out = TrialOut {
                localizing: cert.verdict,
                hypothesis: 0,
                regular: 0,
                excluded: 0,
                worst: 0.0,
            };
            if !cert.verdict {
                return Ok(out);
            }
            for energy in probe_energies(&h, &es, energies_per_trial, energy_seed, trial) {
                if es.resolvent_norm(energy) > gate {
                    out.excluded += 1;
                    continue;
                }
                let report = is_regular(&h, &es, &bx, energy, m_prime)?;
                out.hypothesis += 1;
                out.worst = out.worst.max(report.worst_ratio);
                if report.is_regular {
                    out.regular += 1;
                }
            }
            Ok(out)
        })
        .collect();

    let mut report = LocalizingImpliesRegularReport {
        trials,
        localizing_trials: 0,
        hypothesis_pairs: 0,
        regular_pairs: 0,
        excluded_resolvent: 0,
        pass_fraction: 1.0,
        worst_margin: 0.0,
    };
    for out in outcomes {
        let out = out?;
        report.localizing_trials += out.localizing as u64;
        report.hypothesis_pairs += out.hypothesis;
        report.regular_pairs += out.regular;
        report.excluded_resolvent += out.excluded;
        report.worst_margin = report.worst_margin.max(out.worst);
    }
    if report.hypothesis_pairs > 0 {
        report.pass_fraction = report.regular_pairs as f64 / report.hypothesis_pairs as f64;
    }
    Ok(report)
}

/// Aggregate of the converse experiment: pairwise-regular covers yield a
/// site-labeled localized eigensystem via Hall matching.
#[derive(Debug, Clone, Serialize)]
pub struct RegularImpliesLocalizingReport {
    pub trials: u64,
    pub excluded_level_spacing: u64,
    /// Trials where every eigenvalue admits a center with all far cover boxes
    /// regular at that eigenvalue.
    pub hypothesis_trials: u64,
    pub matched_trials: u64,
    /// Matched trials whose labeling is `(x, m')`-localized at every site.
    pub localized_trials: u64,
    pub labeling_fraction: f64,
}

/// For each trial satisfying level spacing and the per-eigenvalue regularity
/// hypothesis, build the neighborhoods `N(x) = {j : x in enlarged box of
/// a_{lambda_j}}`, run the matching, and test the resulting labeling for
/// `(x, m')`-localization.
#[allow(clippy::too_many_arguments)]
pub fn regular_implies_localizing_experiment(
    model: &ModelSpec,
    params: &ScaleParams,
    ell: Rat,
    m: f64,
    m_prime: f64,
    trials: u64,
    master_seed: u64,
) -> Result<RegularImpliesLocalizingReport> {
    if !(m_prime < m) {
        return Err(Error::invalid("experiment requires m' < m"));
    }
    // L = ell^gamma, rational-rounded at 1e-6; the ell-cover must exist.
    let ell_f = rat_to_f64(ell);
    let lf = ell_f.powf(params.gamma);
    let side = rat_int((lf * 1e6).round() as i64) / rat_int(1_000_000);
    let bx = LatticeBox::centered(model.dim, side)?;
    let cover = lattice::suitable_cover(&bx, ell)?;
    let region = bx.sites()?;
    let cover_regions: Vec<Region> =
        cover.boxes.iter().map(|b| b.sites()).collect::<Result<Vec<_>>>()?;
    let enlarged_side = (rat_int(2) * cover.rho + rat_int(1)) * cover.ell;

    struct TrialOut {
        excluded: bool,
        hypothesis: bool,
        matched: bool,
        localized: bool,
    }
    let outcomes: Vec<Result<TrialOut>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut out =
                TrialOut { excluded: false, hypothesis: false, matched: false, localized: false };
            let h = model.sample_hamiltonian(&region, master_seed, trial)?;
            let es = spectral::eigensystem(&h)?;
            if !certify::is_level_spacing(&es, lf, params.beta) {
                out.excluded = true;
                return Ok(out);
            }
            // Sub-box spectra, one per cover box.
            let mut sub_systems = Vec::with_capacity(cover_regions.len());
            for sub in &cover_regions {
                let values: Vec<f64> = sub
                    .sites()
                    .iter()
                    .map(|s| h.potential()[region.position(s).expect("cover site")])
                    .collect();
                let pot = Potential::new(sub.clone(), values)?;
                let h_sub = AndersonHamiltonian::new(sub, h.eps(), &pot)?;
                sub_systems.push((h_sub, None::<Eigensystem>));
            }
            for entry in &mut sub_systems {
                entry.1 = Some(spectral::eigensystem(&entry.0)?);
            }
            // Regularity per (eigenvalue, cover box); hypothesis: for every
            // eigenvalue some center has all boxes beyond distance ell regular.
            let mut centers_for_lambda: Vec<usize> = Vec::with_capacity(es.len());
            let mut hypothesis_ok = true;
            'lams: for &lam in es.eigenvalues() {
                let mut irregular: Vec<usize> = Vec::new();
                for (bi, (h_sub, es_sub)) in sub_systems.iter().enumerate() {
                    let es_sub = es_sub.as_ref().expect("filled above");
                    let report = is_regular(h_sub, es_sub, &cover.boxes[bi], lam, m)?;
                    if !report.is_regular {
                        irregular.push(bi);
                    }
                }
                for (ai, a) in cover.centers.iter().enumerate() {
                    let all_near = irregular
                        .iter()
                        .all(|&bi| point_dist(a, &cover.centers[bi]) <= cover.ell);
                    if all_near {
                        centers_for_lambda.push(ai);
                        continue 'lams;
                    }
                }
                hypothesis_ok = false;
                break;
            }
            if !hypothesis_ok {
                return Ok(out);
            }
            out.hypothesis = true;
            // N(x) = { j : x in Lambda_{(2 rho + 1) ell}(a_{lambda_j}) }.
            let n = region.len();
            let mut adj = vec![Vec::new(); n];
            for (j, &ai) in centers_for_lambda.iter().enumerate() {
                let enlarged =
                    LatticeBox::new(cover.centers[ai].clone(), enlarged_side)?;
                for (x, site) in region.sites().iter().enumerate() {
                    if enlarged.contains(site) {
                        adj[x].push(j);
                    }
                }
            }
            let graph = certify::BipartiteGraph::new(adj);
            let labels = match certify::perfect_matching(&graph) {
                certify::MatchingOutcome::Perfect(labels) => labels,
                certify::MatchingOutcome::Deficient(_) => return Ok(out),
            };
            out.matched = true;
            let mut all_localized = true;
            for (x, &j) in labels.iter().enumerate() {
                let check =
                    certify::is_localized(&es.vector(j), &bx, &es, x, m_prime, params.tau)?;
                if !check.localized {
                    all_localized = false;
                    break;
                }
            }
            out.localized = all_localized;
            Ok(out)
        })
        .collect();

    let mut report = RegularImpliesLocalizingReport {
        trials,
        excluded_level_spacing: 0,
        hypothesis_trials: 0,
        matched_trials: 0,
        localized_trials: 0,
        labeling_fraction: 1.0,
    };
    for out in outcomes {
        let out = out?;
        report.excluded_level_spacing += out.excluded as u64;
        report.hypothesis_trials += out.hypothesis as u64;
        report.matched_trials += out.matched as u64;
        report.localized_trials += out.localized as u64;
    }
    if report.hypothesis_trials > 0 {
        report.labeling_fraction =
            report.localized_trials as f64 / report.hypothesis_trials as f64;
    }
    Ok(report)
}

/// Probability that `|G_{Lambda_L}(E)| <= e^{L^beta}`, against the Wegner-type
/// bound `1 - K~ 2^alpha e^{-alpha L^beta} (L+1)^d`.
pub fn wegner_empirical(
    model: &ModelSpec,
    l: Rat,
    energy: f64,
    beta: f64,
    trials: u64,
    master_seed: u64,
) -> Result<McEstimate> {
    let bx = LatticeBox::centered(model.dim, l)?;
    let region = bx.sites()?;
    let lf = rat_to_f64(l);
    let threshold = (-lf.powf(beta)).exp();
    let outcomes: Vec<Result<bool>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let h = model.sample_hamiltonian(&region, master_seed, trial)?;
            let es = spectral::eigensystem(&h)?;
            Ok(es.dist_to_spectrum(energy) >= threshold)
        })
        .collect();
    let mut successes = 0u64;
    for o in outcomes {
        if o? {
            successes += 1;
        }
    }
    let bound = model.dist.holder().map(|holder| {
        let kt = holder.k_tilde();
        1.0 - kt
            * (2.0f64).powf(holder.alpha)
            * (-holder.alpha * lf.powf(beta)).exp()
            * (lf + 1.0).powf(model.dim as f64)
    });
    McEstimate::from_counts(successes, trials, bound)
}
