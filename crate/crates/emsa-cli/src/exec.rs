//! Execute one configured experiment into a result table. Each row echoes
//! the inputs that produced it, so a row alone reproduces the run.

use anyhow::Context;
use emsa::certify;
use emsa::green;
use emsa::lattice::{rat_to_f64, LatticeBox};
use emsa::probability::{self, BoundVerdict, McEstimate};
use emsa::spectral;

use crate::config::{CrossDirection, ExperimentBlock, RunConfig};
use crate::table::{Cell, Table};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn verdict_str(v: BoundVerdict) -> &'static str {
    match v {
        BoundVerdict::Consistent => "consistent",
        BoundVerdict::Inconclusive => "inconclusive",
        BoundVerdict::BoundViolated => "bound-violated",
        BoundVerdict::NotCompared => "not-compared",
    }
}

fn estimate_cells(est: &McEstimate) -> Vec<Cell> {
    vec![
        est.trials.into(),
        est.successes.into(),
        est.point.into(),
        est.wilson_low.into(),
        est.wilson_high.into(),
        est.bound.into(),
        verdict_str(est.verdict).into(),
    ]
}

/// Run the experiment described by the config and return its table.
pub fn execute(config: &RunConfig) -> anyhow::Result<Table> {
    config.validate()?;
    let model = config.model_spec()?;
    let params = config.scale_params()?;
    let seed = config.model.seed;
    let d = config.model.d;
    let eps = config.model.eps;

    match &config.experiment {
        ExperimentBlock::Certify { l, m, trials } => {
            let side = crate::config::parse_side(l)?;
            let lf = rat_to_f64(side);
            let mass = m.resolve(eps, lf, params.beta, d);
            let bx = LatticeBox::centered(d, side)?;
            let region = bx.sites()?;
            let mut table = Table::new(vec![
                "experiment", "version", "seed", "trial", "d", "eps", "l", "m", "beta", "tau",
                "level_spacing", "min_gap", "matched", "vacuous_pairs", "verdict",
            ]);
            for trial in 0..*trials {
                let h = model.sample_hamiltonian(&region, seed, trial)?;
                let cert = certify::certify_m_localizing(&bx, &h, mass, &params)?;
                table.push_row(vec![
                    "certify".into(),
                    VERSION.into(),
                    seed.into(),
                    trial.into(),
                    d.into(),
                    eps.into(),
                    lf.into(),
                    mass.into(),
                    params.beta.into(),
                    params.tau.into(),
                    cert.level_spacing.into(),
                    cert.min_gap.into(),
                    cert.matching.is_some().into(),
                    cert.vacuous_pairs.into(),
                    if cert.verdict { "localizing" } else { "not-localizing" }.into(),
                ]);
            }
            Ok(table)
        }

        ExperimentBlock::Cover { l, ell } => {
            let side = crate::config::parse_side(l)?;
            let sub = crate::config::parse_side(ell)?;
            let bx = LatticeBox::centered(d, side)?;
            let cover = emsa::lattice::suitable_cover(&bx, sub)?;
            let invariants_ok = cover.verify().is_ok();
            let mut table = Table::new(vec![
                "experiment", "version", "seed", "d", "l", "ell", "rho", "grid_k",
                "center_count", "invariants_ok", "center_index", "center",
            ]);
            for (i, center) in cover.centers.iter().enumerate() {
                let coords: Vec<String> = center.iter().map(|c| c.to_string()).collect();
                table.push_row(vec![
                    "cover".into(),
                    VERSION.into(),
                    seed.into(),
                    d.into(),
                    rat_to_f64(side).into(),
                    rat_to_f64(sub).into(),
                    cover.rho.to_string().into(),
                    Cell::Int(cover.grid_k),
                    cover.centers.len().into(),
                    invariants_ok.into(),
                    i.into(),
                    coords.join("|").into(),
                ]);
            }
            Ok(table)
        }

        ExperimentBlock::McLocalizing { l, m, trials } => {
            let side = crate::config::parse_side(l)?;
            let lf = rat_to_f64(side);
            let mass = m.resolve(eps, lf, params.beta, d);
            let est =
                probability::mc_localizing_probability(&model, side, mass, &params, *trials, seed)?;
            let mut table = Table::new(vec![
                "experiment", "version", "seed", "d", "eps", "l", "m", "beta", "tau", "trials",
                "successes", "point", "wilson_low", "wilson_high", "bound", "verdict",
            ]);
            let mut row: Vec<Cell> = vec![
                "mc-localizing".into(),
                VERSION.into(),
                seed.into(),
                d.into(),
                eps.into(),
                lf.into(),
                mass.into(),
                params.beta.into(),
                params.tau.into(),
            ];
            row.extend(estimate_cells(&est));
            table.push_row(row);
            Ok(table)
        }

        ExperimentBlock::McSpacing { l, r, trials } => {
            let side = crate::config::parse_side(l)?;
            let lf = rat_to_f64(side);
            let r = r.unwrap_or(lf);
            let region = LatticeBox::centered(d, side)?.sites()?;
            let est = probability::mc_level_spacing_probability(
                &model, &region, r, params.beta, *trials, seed, None,
            )?;
            let mut table = Table::new(vec![
                "experiment", "version", "seed", "d", "eps", "l", "r", "beta", "trials",
                "successes", "point", "wilson_low", "wilson_high", "bound", "verdict",
            ]);
            let mut row: Vec<Cell> = vec![
                "mc-spacing".into(),
                VERSION.into(),
                seed.into(),
                d.into(),
                eps.into(),
                lf.into(),
                r.into(),
                params.beta.into(),
            ];
            row.extend(estimate_cells(&est));
            table.push_row(row);
            Ok(table)
        }

        ExperimentBlock::Klm { l, i_lo, i_hi, eta, trials } => {
            let side = crate::config::parse_side(l)?;
            let region = LatticeBox::centered(d, side)?.sites()?;
            let est = probability::klm_event_probability(
                &model,
                &region,
                (*i_lo, *i_hi),
                *eta,
                *trials,
                seed,
            )?;
            let mut table = Table::new(vec![
                "experiment", "version", "seed", "d", "eps", "l", "i_lo", "i_hi", "eta",
                "trials", "successes", "point", "wilson_low", "wilson_high", "bound", "verdict",
            ]);
            let mut row: Vec<Cell> = vec![
                "klm".into(),
                VERSION.into(),
                seed.into(),
                d.into(),
                eps.into(),
                rat_to_f64(side).into(),
                (*i_lo).into(),
                (*i_hi).into(),
                (*eta).into(),
            ];
            row.extend(estimate_cells(&est));
            table.push_row(row);
            Ok(table)
        }

        ExperimentBlock::Minami { l, j_lo, j_hi, trials } => {
            let side = crate::config::parse_side(l)?;
            let region = LatticeBox::centered(d, side)?.sites()?;
            let report =
                probability::minami_empirical(&model, &region, (*j_lo, *j_hi), *trials, seed)?;
            let mut table = Table::new(vec![
                "experiment", "version", "seed", "d", "eps", "l", "j_lo", "j_hi", "trials",
                "moment", "std_error", "bound", "verdict",
            ]);
            table.push_row(vec![
                "minami".into(),
                VERSION.into(),
                seed.into(),
                d.into(),
                eps.into(),
                rat_to_f64(side).into(),
                (*j_lo).into(),
                (*j_hi).into(),
                report.trials.into(),
                report.moment.into(),
                report.std_error.into(),
                report.bound.into(),
                verdict_str(report.verdict).into(),
            ]);
            Ok(table)
        }

        ExperimentBlock::GreenRegular { l, energy, m, trials } => {
            let side = crate::config::parse_side(l)?;
            let lf = rat_to_f64(side);
            let mass = m.resolve(eps, lf, params.beta, d);
            let est =
                green::wegner_empirical(&model, side, *energy, params.beta, *trials, seed)?;
            // Per-trial (m,E)-regularity fraction over the same trials.
            let bx = LatticeBox::centered(d, side)?;
            let region = bx.sites()?;
            let mut regular = 0u64;
            for trial in 0..*trials {
                let h = model.sample_hamiltonian(&region, seed, trial)?;
                let es = spectral::eigensystem(&h)?;
                if green::is_regular(&h, &es, &bx, *energy, mass)?.is_regular {
                    regular += 1;
                }
            }
            let mut table = Table::new(vec![
                "experiment", "version", "seed", "d", "eps", "l", "energy", "m", "beta",
                "trials", "successes", "point", "wilson_low", "wilson_high", "bound",
                "verdict", "regular_fraction",
            ]);
            let mut row: Vec<Cell> = vec![
                "green-regular".into(),
                VERSION.into(),
                seed.into(),
                d.into(),
                eps.into(),
                lf.into(),
                (*energy).into(),
                mass.into(),
                params.beta.into(),
            ];
            row.extend(estimate_cells(&est));
            row.push((regular as f64 / (*trials).max(1) as f64).into());
            table.push_row(row);
            Ok(table)
        }

        ExperimentBlock::GreenCross { direction, l, m, m_prime, trials, energies } => {
            let side = crate::config::parse_side(l)?;
            let lf = rat_to_f64(side);
            match direction {
                CrossDirection::LocToReg => {
                    let mass = m.resolve(eps, lf, params.beta, d);
                    let mp = m_prime.unwrap_or(0.5 * mass);
                    let report = green::localizing_implies_regular_experiment(
                        &model, side, mass, mp, &params, *trials, *energies, seed,
                    )?;
                    let mut table = Table::new(vec![
                        "experiment", "version", "seed", "direction", "d", "eps", "l", "m",
                        "m_prime", "beta", "tau", "trials", "energies", "localizing_trials",
                        "hypothesis_pairs", "regular_pairs", "excluded_resolvent",
                        "pass_fraction", "worst_margin",
                    ]);
                    table.push_row(vec![
                        "green-cross".into(),
                        VERSION.into(),
                        seed.into(),
                        "loc-to-reg".into(),
                        d.into(),
                        eps.into(),
                        lf.into(),
                        mass.into(),
                        mp.into(),
                        params.beta.into(),
                        params.tau.into(),
                        report.trials.into(),
                        (*energies).into(),
                        report.localizing_trials.into(),
                        report.hypothesis_pairs.into(),
                        report.regular_pairs.into(),
                        report.excluded_resolvent.into(),
                        report.pass_fraction.into(),
                        report.worst_margin.into(),
                    ]);
                    Ok(table)
                }
                CrossDirection::RegToLoc => {
                    // `l` is the sub-scale; the enclosing side is ell^gamma.
                    let ell_f = rat_to_f64(side);
                    let big_l = ell_f.powf(params.gamma);
                    let mass = m.resolve(eps, big_l, params.beta, d);
                    let mp = m_prime.unwrap_or(0.5 * mass);
                    let report = green::regular_implies_localizing_experiment(
                        &model, &params, side, mass, mp, *trials, seed,
                    )?;
                    let mut table = Table::new(vec![
                        "experiment", "version", "seed", "direction", "d", "eps", "ell", "l",
                        "m", "m_prime", "beta", "tau", "trials", "excluded_level_spacing",
                        "hypothesis_trials", "matched_trials", "localized_trials",
                        "labeling_fraction",
                    ]);
                    table.push_row(vec![
                        "green-cross".into(),
                        VERSION.into(),
                        seed.into(),
                        "reg-to-loc".into(),
                        d.into(),
                        eps.into(),
                        ell_f.into(),
                        big_l.into(),
                        mass.into(),
                        mp.into(),
                        params.beta.into(),
                        params.tau.into(),
                        report.trials.into(),
                        report.excluded_level_spacing.into(),
                        report.hypothesis_trials.into(),
                        report.matched_trials.into(),
                        report.localized_trials.into(),
                        report.labeling_fraction.into(),
                    ]);
                    Ok(table)
                }
            }
        }

        ExperimentBlock::Scan { l0, k_max, m0, trials } => {
            let mass0 = m0.resolve(eps, *l0, params.beta, d);
            let rows = probability::msa_scan(
                &model,
                &params,
                *l0,
                *k_max,
                mass0,
                *trials,
                seed,
                emsa::model::DEFAULT_SITE_CAP,
            )?;
            let mut table = Table::new(vec![
                "experiment", "version", "seed", "d", "eps", "k", "scale", "sites",
                "m_target", "trials", "skipped", "successes", "point", "wilson_low",
                "wilson_high", "bound", "target_zeta", "target_xi", "meets_zeta", "meets_xi",
                "verdict",
            ]);
            for row in &rows {
                let (successes, point, lo, hi, bound, verdict): (
                    Cell,
                    Cell,
                    Cell,
                    Cell,
                    Cell,
                    Cell,
                ) = match &row.estimate {
                    Some(est) => (
                        est.successes.into(),
                        est.point.into(),
                        est.wilson_low.into(),
                        est.wilson_high.into(),
                        est.bound.into(),
                        verdict_str(est.verdict).into(),
                    ),
                    None => (Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty, "skipped".into()),
                };
                table.push_row(vec![
                    "scan".into(),
                    VERSION.into(),
                    seed.into(),
                    d.into(),
                    eps.into(),
                    row.k.into(),
                    row.scale.into(),
                    row.sites.into(),
                    row.target_mass.into(),
                    (*trials).into(),
                    row.skipped.into(),
                    successes,
                    point,
                    lo,
                    hi,
                    bound,
                    row.target_zeta.into(),
                    row.target_xi.into(),
                    row.meets_zeta.into(),
                    row.meets_xi.into(),
                    verdict,
                ]);
            }
            Ok(table)
        }

        ExperimentBlock::DecayRates { m, ell, l, c } => {
            let rates = certify::reference_decay_rates(*m, *ell, *l, &params, *c)
                .context("decay rate evaluation")?;
            let mut table = Table::new(vec![
                "experiment", "version", "seed", "m", "ell", "l", "c", "xi", "zeta", "beta",
                "tau", "gamma", "m1", "m2", "m3", "m4", "m5", "m_induction",
            ]);
            table.push_row(vec![
                "decay-rates".into(),
                VERSION.into(),
                seed.into(),
                (*m).into(),
                (*ell).into(),
                (*l).into(),
                (*c).into(),
                params.xi.into(),
                params.zeta.into(),
                params.beta.into(),
                params.tau.into(),
                params.gamma.into(),
                rates.m1.into(),
                rates.m2.into(),
                rates.m3.into(),
                rates.m4.into(),
                rates.m5.into(),
                rates.m_induction.into(),
            ]);
            Ok(table)
        }
    }
}
