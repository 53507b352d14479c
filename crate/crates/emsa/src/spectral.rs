//! Dense symmetric eigensystems and the spectral estimates built on them:
//! resolvents, eigenpair defect bounds, eigenpair alignment, and lifting of
//! sub-box eigenpairs into an enclosing region.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{self, rat_int, rat_to_f64, LatticeBox, Region};
use crate::model::AndersonHamiltonian;

/// Relative residual/orthonormality tolerance for accepted eigensystems.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Additive slack `1e-9 * max(1, |H|)` used by every bound check; exceedances
/// beyond it are hard failures.
pub const BOUND_SLACK: f64 = 1e-9;

/// Near-singularity threshold for resolvents.
pub const NEAR_SINGULAR_TOL: f64 = 1e-12;

/// A full orthonormal eigensystem for one finite-volume operator.
///
/// Eigenvalues ascend; eigenvector `j` is column `j`. Signs are fixed by
/// making the largest-magnitude entry positive (ties: first index), so the
/// decomposition is reproducible.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    region: Region,
    eigenvalues: Vec<f64>,
    vectors: DMatrix<f64>,
    norm_scale: f64,
}

impl Eigensystem {
    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn vector(&self, j: usize) -> DVector<f64> {
        self.vectors.column(j).into_owned()
    }

    /// Scale `max(1, |H|)` for absolute slacks.
    pub fn norm_scale(&self) -> f64 {
        self.norm_scale
    }

    /// Smallest consecutive gap of the (sorted) spectrum; infinite for a
    /// single eigenvalue.
    pub fn min_gap(&self) -> f64 {
        self.eigenvalues
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from `eigenvalue[j]` to the rest of the spectrum.
    pub fn gap_to_rest(&self, j: usize) -> f64 {
        let lam = self.eigenvalues[j];
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, &mu)| (mu - lam).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from `z` to the spectrum.
    pub fn dist_to_spectrum(&self, z: f64) -> f64 {
        self.eigenvalues
            .iter()
            .map(|&lam| (lam - z).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Index of the eigenvalue nearest to `z` (smallest index on exact ties).
    pub fn nearest_index(&self, z: f64) -> usize {
        let mut best = 0usize;
        let mut best_dist = f64::INFINITY;
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let d = (lam - z).abs();
            if d < best_dist {
                best = j;
                best_dist = d;
            }
        }
        best
    }

    /// Operator norm of the resolvent, `1/dist(z, spectrum)`.
    pub fn resolvent_norm(&self, z: f64) -> f64 {
        1.0 / self.dist_to_spectrum(z)
    }
}

/// Full symmetric eigendecomposition with validated residuals and
/// orthonormality.
pub fn eigensystem(h: &AndersonHamiltonian) -> Result<Eigensystem> {
    let n = h.len();
    if n == 0 {
        return Err(Error::invalid("eigensystem: empty region"));
    }
    let decomp = SymmetricEigen::new(h.matrix().clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        decomp.eigenvalues[a]
            .partial_cmp(&decomp.eigenvalues[b])
            .expect("finite eigenvalues")
    });
    let mut eigenvalues = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues.push(decomp.eigenvalues[src]);
        let col = decomp.eigenvectors.column(src);
        // Sign convention: largest-magnitude entry positive, first index on ties.
        let mut lead = 0usize;
        let mut lead_abs = -1.0f64;
        for (i, &x) in col.iter().enumerate() {
            if x.abs() > lead_abs {
                lead_abs = x.abs();
                lead = i;
            }
        }
        let sign = if col[lead] < 0.0 { -1.0 } else { 1.0 };
        vectors.column_mut(dst).copy_from(&col.map(|x| sign * x));
    }

    let scale = h.norm_scale();
    let tol = RESIDUAL_TOL * scale;
    let residual = h.matrix() * &vectors
        - &vectors * DMatrix::from_diagonal(&DVector::from_vec(eigenvalues.clone()));
    let max_residual = residual
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0f64, f64::max);
    if max_residual > tol {
        return Err(Error::SolverFailure(format!(
            "eigenpair residual {max_residual:e} exceeds {tol:e} (n = {n})"
        )));
    }
    let gram = vectors.transpose() * &vectors - DMatrix::identity(n, n);
    let gram_dev = gram.amax();
    if gram_dev > RESIDUAL_TOL {
        return Err(Error::SolverFailure(format!(
            "orthonormality deviation {gram_dev:e} exceeds {RESIDUAL_TOL:e} (n = {n})"
        )));
    }
    Ok(Eigensystem {
        region: h.region().clone(),
        eigenvalues,
        vectors,
        norm_scale: scale,
    })
}

/// Resolvent `G(z) = (H - z)^{-1}`, symmetrized; `z` must stay clear of the
/// spectrum by `NEAR_SINGULAR_TOL * max(1, |H|)`.
pub fn green_matrix(
    h: &AndersonHamiltonian,
    es: &Eigensystem,
    z: f64,
) -> Result<DMatrix<f64>> {
    let dist = es.dist_to_spectrum(z);
    if dist <= NEAR_SINGULAR_TOL * es.norm_scale() {
        return Err(Error::NearSingular { z, dist });
    }
    let n = h.len();
    let mut shifted = h.matrix().clone();
    for i in 0..n {
        shifted[(i, i)] -= z;
    }
    let g = shifted
        .try_inverse()
        .ok_or(Error::NearSingular { z, dist })?;
    Ok((&g + g.transpose()).scale(0.5))
}

/// Defect data for an eigenpair of a sub-region embedded in a larger region.
#[derive(Debug, Clone, Serialize)]
pub struct DefectReport {
    pub lambda: f64,
    /// `|(H_ambient - lambda) phi|_2` of the zero-extended vector.
    pub defect: f64,
    /// `(2d-1) * eps * |ext-boundary|^{1/2} * |phi restricted to in-boundary|_inf`.
    pub bound: f64,
    /// Distance from `lambda` to the ambient spectrum.
    pub spectral_dist: f64,
    /// Largest defect entry inside the sub-region (the eigenpair's own
    /// residual; exactly zero boundary support would make this 0).
    pub interior_residual: f64,
    /// Defect entries away from the sub-region and its exterior boundary are
    /// identically zero (exact support property).
    pub support_exact: bool,
    /// Additive slack used by `holds`.
    pub slack: f64,
}

impl DefectReport {
    /// `spectral_dist <= defect <= bound` up to the slack.
    pub fn holds(&self) -> bool {
        self.spectral_dist <= self.defect + self.slack && self.defect <= self.bound + self.slack
    }
}

/// Defect of the eigenpair `(phi, lambda)` of `H_sub` seen inside the ambient
/// operator: the defect vector concentrates on the exterior boundary of the
/// sub-region, its norm bounds the distance from `lambda` to the ambient
/// spectrum, and is itself bounded through the boundary values of `phi`.
pub fn defect_report(
    phi: &DVector<f64>,
    lambda: f64,
    sub: &Region,
    ambient: &AndersonHamiltonian,
    ambient_es: &Eigensystem,
) -> Result<DefectReport> {
    if phi.len() != sub.len() {
        return Err(Error::invalid("defect: phi length does not match sub-region"));
    }
    if !sub.is_subset_of(ambient.region()) {
        return Err(Error::invalid("defect: sub-region not contained in ambient region"));
    }
    if (phi.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::invalid("defect: phi must be normalized"));
    }
    let theta = ambient.region();
    let n = theta.len();
    let mut extended = DVector::zeros(n);
    for (i, site) in sub.sites().iter().enumerate() {
        extended[theta.position(site).expect("subset site")] = phi[i];
    }
    let mut defect_vec = ambient.matrix() * &extended;
    defect_vec.axpy(-lambda, &extended, 1.0);

    let boundary = lattice::boundaries(sub, theta)?;
    let mut interior_residual = 0.0f64;
    let mut support_exact = true;
    for (i, site) in theta.sites().iter().enumerate() {
        let v = defect_vec[i].abs();
        if sub.contains(site) {
            interior_residual = interior_residual.max(v);
        } else if !boundary.exterior.contains(site) && v != 0.0 {
            support_exact = false;
        }
    }
    let phi_inf_boundary = boundary
        .interior
        .sites()
        .iter()
        .map(|s| phi[sub.position(s).expect("boundary site in sub")].abs())
        .fold(0.0f64, f64::max);
    let d = theta.dim() as f64;
    let bound = (2.0 * d - 1.0)
        * ambient.eps()
        * (boundary.exterior.len() as f64).sqrt()
        * phi_inf_boundary;
    Ok(DefectReport {
        lambda,
        defect: defect_vec.norm(),
        bound,
        spectral_dist: ambient_es.dist_to_spectrum(lambda),
        interior_residual,
        support_exact,
        slack: BOUND_SLACK * ambient_es.norm_scale(),
    })
}

/// Alignment of an approximate eigenpair with the nearest true eigenpair.
#[derive(Debug, Clone, Serialize)]
pub struct AlignmentReport {
    /// Index of the nearest eigenvalue.
    pub nearest: usize,
    /// Defect `|(H - lambda) phi|`.
    pub delta: f64,
    /// Gap from the nearest eigenvalue to the rest of the spectrum.
    pub eta: f64,
    pub overlap: f64,
    pub orthogonal_norm: f64,
    /// `|phi_hat - psi|` after choosing the sign that makes the overlap positive.
    pub aligned_dist: f64,
    /// The two-sided bounds only apply under `4 delta < eta`.
    pub bounds_applicable: bool,
}

impl AlignmentReport {
    /// `|phi_perp| <= sqrt(2) delta/eta` and `|phi_hat - psi| <= 3 delta/(2 eta)`,
    /// with slack; trivially true when the hypothesis gate is closed.
    pub fn holds(&self, slack: f64) -> bool {
        if !self.bounds_applicable {
            return true;
        }
        self.orthogonal_norm <= std::f64::consts::SQRT_2 * self.delta / self.eta + slack
            && self.aligned_dist <= 1.5 * self.delta / self.eta + slack
    }
}

/// Align `(phi, lambda)` against the eigensystem: locate the nearest
/// eigenvalue, split `phi` into its projection and orthogonal part, and fix
/// the sign so the overlap is positive.
pub fn align_eigenpair(
    phi: &DVector<f64>,
    lambda: f64,
    h: &AndersonHamiltonian,
    es: &Eigensystem,
) -> Result<AlignmentReport> {
    if phi.len() != es.len() {
        return Err(Error::invalid("align: phi length does not match eigensystem"));
    }
    if (phi.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::invalid("align: phi must be normalized"));
    }
    // Nearest eigenvalue; an exact distance tie between distinct eigenvalues
    // leaves no canonical choice.
    let nearest = es.nearest_index(lambda);
    let best = (es.eigenvalues[nearest] - lambda).abs();
    for (j, &mu) in es.eigenvalues.iter().enumerate() {
        if j != nearest && (mu - lambda).abs() == best && mu != es.eigenvalues[nearest] {
            return Err(Error::AmbiguousNearest { lambda, dist: best });
        }
    }
    let mut residual = h.matrix() * phi;
    residual.axpy(-lambda, phi, 1.0);
    let delta = residual.norm();
    let eta = es.gap_to_rest(nearest);
    let psi = es.vector(nearest);
    let overlap = psi.dot(phi);
    let orthogonal = phi - &psi * overlap;
    let sign = if overlap < 0.0 { -1.0 } else { 1.0 };
    let aligned_dist = (phi.map(|x| sign * x) - &psi).norm();
    Ok(AlignmentReport {
        nearest,
        delta,
        eta,
        overlap: overlap.abs(),
        orthogonal_norm: orthogonal.norm(),
        aligned_dist,
        bounds_applicable: 4.0 * delta < eta,
    })
}

/// One lifted eigenpair: a site-labeled sub-box eigenpair matched to an
/// eigenpair of the enclosing region.
#[derive(Debug, Clone, Serialize)]
pub struct LiftedPair {
    pub site: Vec<i64>,
    pub sub_eigenvalue: f64,
    pub big_eigenvalue: f64,
    pub big_index: usize,
    pub eigenvalue_dist: f64,
    pub vector_dist: f64,
    pub eigenvalue_within_bound: bool,
    pub vector_within_bound: bool,
}

/// Result of lifting the labeled eigenpairs of a sub-box into the enclosing
/// region's eigensystem.
#[derive(Debug, Clone, Serialize)]
pub struct LiftReport {
    pub pairs: Vec<LiftedPair>,
    pub injective: bool,
    /// Reference rate `m1` used by the bounds.
    pub m1: f64,
    pub eigenvalue_bound: f64,
    pub vector_bound: f64,
    /// Number of interior sites tested (`|sub-box interior at depth ell_tau|`).
    pub tested: usize,
}

/// Reference rate `m1(s) = m (1 - C log s / s^tau)`.
pub fn rate_m1(m: f64, scale: f64, tau: f64, c: f64) -> f64 {
    m * (1.0 - c * scale.ln() / scale.powf(tau))
}

/// Lift the site-labeled eigenpairs of an `m`-localizing sub-box into the
/// eigensystem of an enclosing region: each interior label maps to the
/// nearest enclosing eigenvalue, injectively, with eigenvalue and eigenvector
/// distances reported against the reference bounds
/// `e^{-m1 l_tau}` and `2 e^{-m1 l_tau} e^{R^beta}`.
#[allow(clippy::too_many_arguments)]
pub fn lift_eigenpairs(
    sub_box: &LatticeBox,
    sub_es: &Eigensystem,
    labels: &[usize],
    big_es: &Eigensystem,
    big_scale: f64,
    tau: f64,
    beta: f64,
    m: f64,
    rate_constant: f64,
) -> Result<LiftReport> {
    let sub_region = sub_es.region();
    let big_region = big_es.region();
    if !sub_region.is_subset_of(big_region) {
        return Err(Error::invalid("lift: sub-box region not contained in big region"));
    }
    if labels.len() != sub_region.len() {
        return Err(Error::invalid("lift: one label per sub-box site required"));
    }
    // The enclosing region must be level spacing at its own scale.
    if big_es.min_gap() < (-big_scale.powf(beta)).exp() {
        return Err(Error::PreconditionViolated(
            "lift: enclosing region is not level spacing at its scale".into(),
        ));
    }
    let ell = rat_to_f64(sub_box.side());
    let ell_tau = ell.powf(tau).floor().max(0.0);
    let (deep, _) = lattice::interior(sub_region, big_region, rat_int(ell_tau as i64))?;
    let m1 = rate_m1(m, ell, tau, rate_constant);
    let eigenvalue_bound = (-m1 * ell_tau).exp();
    let vector_bound = 2.0 * (-m1 * ell_tau).exp() * big_scale.powf(beta).exp();

    let mut pairs = Vec::with_capacity(deep.len());
    let mut used = std::collections::HashSet::new();
    let mut injective = true;
    for site in deep.sites() {
        let row = sub_region.position(site).expect("interior site in sub-region");
        let j = labels[row];
        let lam = sub_es.eigenvalues()[j];
        let big_idx = big_es.nearest_index(lam);
        if !used.insert(big_idx) {
            injective = false;
        }
        let big_lam = big_es.eigenvalues()[big_idx];
        // Zero-extend the sub vector and align its sign to the big eigenvector.
        let phi = sub_es.vector(j);
        let mut extended = DVector::zeros(big_region.len());
        for (i, s) in sub_region.sites().iter().enumerate() {
            extended[big_region.position(s).expect("subset site")] = phi[i];
        }
        let psi = big_es.vector(big_idx);
        let sign = if psi.dot(&extended) < 0.0 { -1.0 } else { 1.0 };
        let vector_dist = (extended.map(|x| sign * x) - &psi).norm();
        let eigenvalue_dist = (big_lam - lam).abs();
        pairs.push(LiftedPair {
            site: site.clone(),
            sub_eigenvalue: lam,
            big_eigenvalue: big_lam,
            big_index: big_idx,
            eigenvalue_dist,
            vector_dist,
            eigenvalue_within_bound: eigenvalue_dist <= eigenvalue_bound,
            vector_within_bound: vector_dist <= vector_bound,
        });
    }
    Ok(LiftReport {
        pairs,
        injective,
        m1,
        eigenvalue_bound,
        vector_bound,
        tested: deep.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{rat_int, LatticeBox, Region};
    use crate::model::{sample_potential, AndersonHamiltonian, Potential, SingleSiteDistribution};

    fn path_hamiltonian(n: i64, eps: f64) -> AndersonHamiltonian {
        let region = Region::segment(0, n - 1);
        let pot = Potential::new(region.clone(), vec![0.0; n as usize]).unwrap();
        AndersonHamiltonian::new(&region, eps, &pot).unwrap()
    }

    /// Closed-form path spectrum: -2 eps cos(pi j / (n+1)), j = 1..n.
    fn path_spectrum(n: usize, eps: f64) -> Vec<f64> {
        let mut v: Vec<f64> = (1..=n)
            .map(|j| -2.0 * eps * (std::f64::consts::PI * j as f64 / (n as f64 + 1.0)).cos())
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn single_site_eigensystem() {
        let region = Region::segment(0, 0);
        let pot = Potential::new(region.clone(), vec![0.7]).unwrap();
        let h = AndersonHamiltonian::new(&region, 1.0, &pot).unwrap();
        let es = eigensystem(&h).unwrap();
        assert_eq!(es.eigenvalues(), &[0.7]);
        assert_eq!(es.vectors()[(0, 0)], 1.0);
    }

    #[test]
    fn path_eigenvalues_match_closed_form() {
        for n in [5usize, 50] {
            let h = path_hamiltonian(n as i64, 1.0);
            let es = eigensystem(&h).unwrap();
            let expect = path_spectrum(n, 1.0);
            for (a, b) in es.eigenvalues().iter().zip(&expect) {
                assert!((a - b).abs() < 1e-10, "n = {n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn eigensystem_checks_pass_on_random_instance() {
        let region = Region::segment(0, 99);
        let dist = SingleSiteDistribution::uniform(0.0, 1.0).unwrap();
        let pot = sample_potential(&region, &dist, 42, 0).unwrap();
        let h = AndersonHamiltonian::new(&region, 0.1, &pot).unwrap();
        let es = eigensystem(&h).unwrap();
        // Spectral enclosure.
        let (lo, hi) = h.spectral_enclosure();
        assert!(es.eigenvalues().iter().all(|&l| l >= lo - 1e-12 && l <= hi + 1e-12));
    }

    #[test]
    fn eigensystem_is_reproducible() {
        let region = Region::segment(0, 30);
        let dist = SingleSiteDistribution::uniform(0.0, 1.0).unwrap();
        let pot = sample_potential(&region, &dist, 9, 1).unwrap();
        let h = AndersonHamiltonian::new(&region, 0.05, &pot).unwrap();
        let a = eigensystem(&h).unwrap();
        let b = eigensystem(&h).unwrap();
        assert_eq!(a.eigenvalues(), b.eigenvalues());
        assert_eq!(a.vectors().as_slice(), b.vectors().as_slice());
    }

    #[test]
    fn weyl_displacement_under_hopping() {
        // Turning on eps moves each sorted eigenvalue by at most 2*d*eps.
        let region = LatticeBox::centered(2, rat_int(4)).unwrap().sites().unwrap();
        let dist = SingleSiteDistribution::uniform(0.0, 1.0).unwrap();
        let pot = sample_potential(&region, &dist, 17, 0).unwrap();
        for eps in [1e-3, 0.05] {
            let h0 = AndersonHamiltonian::new(&region, 0.0, &pot).unwrap();
            let h1 = AndersonHamiltonian::new(&region, eps, &pot).unwrap();
            let a = eigensystem(&h0).unwrap();
            let b = eigensystem(&h1).unwrap();
            let max_move = a
                .eigenvalues()
                .iter()
                .zip(b.eigenvalues())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0f64, f64::max);
            assert!(max_move <= 2.0 * 2.0 * eps + 1e-12, "eps = {eps}: {max_move}");
        }
    }

    #[test]
    fn green_diagonal_case() {
        let region = Region::segment(0, 4);
        let values = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let pot = Potential::new(region.clone(), values.clone()).unwrap();
        let h = AndersonHamiltonian::new(&region, 0.0, &pot).unwrap();
        let es = eigensystem(&h).unwrap();
        let z = 0.5;
        let g = green_matrix(&h, &es, z).unwrap();
        for i in 0..5 {
            assert!((g[(i, i)] - 1.0 / (values[i] - z)).abs() < 1e-12);
            for j in 0..5 {
                if i != j {
                    assert_eq!(g[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn green_two_site_hand_inverse() {
        // H = [[0,-1],[-1,0]], z = 0: H^{-1} = [[0,-1],[-1,0]].
        let h = path_hamiltonian(2, 1.0);
        let es = eigensystem(&h).unwrap();
        let g = green_matrix(&h, &es, 0.0).unwrap();
        assert!((g[(0, 0)]).abs() < 1e-14);
        assert!((g[(0, 1)] + 1.0).abs() < 1e-14);
        assert!((g[(1, 0)] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn green_residual_and_symmetry() {
        let region = Region::segment(0, 39);
        let dist = SingleSiteDistribution::uniform(0.0, 1.0).unwrap();
        let pot = sample_potential(&region, &dist, 5, 2).unwrap();
        let h = AndersonHamiltonian::new(&region, 0.2, &pot).unwrap();
        let es = eigensystem(&h).unwrap();
        let z = es.eigenvalues()[0] - 0.35;
        let g = green_matrix(&h, &es, z).unwrap();
        let n = region.len();
        let mut shifted = h.matrix().clone();
        for i in 0..n {
            shifted[(i, i)] -= z;
        }
        let residual = (shifted * &g - DMatrix::<f64>::identity(n, n)).amax();
        assert!(residual < 1e-8, "residual {residual}");
        assert_eq!((&g - g.transpose()).amax(), 0.0);
        // |G| = 1/dist(z, spectrum) for symmetric H.
        let op_norm = es
            .eigenvalues()
            .iter()
            .map(|l| 1.0 / (l - z).abs())
            .fold(0.0f64, f64::max);
        assert!((op_norm - es.resolvent_norm(z)).abs() <= 1e-9 * op_norm);
    }

    #[test]
    fn green_rejects_near_singular() {
        let h = path_hamiltonian(3, 1.0);
        let es = eigensystem(&h).unwrap();
        let z = es.eigenvalues()[1] + 1e-14;
        assert!(matches!(
            green_matrix(&h, &es, z),
            Err(Error::NearSingular { .. })
        ));
    }

    #[test]
    fn defect_whole_region_is_residual() {
        let region = Region::segment(0, 9);
        let dist = SingleSiteDistribution::uniform(0.0, 1.0).unwrap();
        let pot = sample_potential(&region, &dist, 8, 0).unwrap();
        let h = AndersonHamiltonian::new(&region, 0.3, &pot).unwrap();
        let es = eigensystem(&h).unwrap();
        let r = defect_report(&es.vector(0), es.eigenvalues()[0], &region, &h, &es).unwrap();
        assert!(r.defect <= 1e-12);
        assert_eq!(r.bound, 0.0);
        assert!(r.holds());
    }

    #[test]
    fn defect_single_edge_equality() {
        // Phi = {0} in Theta' = {0,1}, V = 0, phi = delta_0, lambda = 0:
        // defect = eps and the bound is also exactly eps.
        let theta = Region::segment(0, 1);
        let pot = Potential::new(theta.clone(), vec![0.0, 0.0]).unwrap();
        let eps = 0.37;
        let h = AndersonHamiltonian::new(&theta, eps, &pot).unwrap();
        let es = eigensystem(&h).unwrap();
        let sub = Region::segment(0, 0);
        let phi = DVector::from_vec(vec![1.0]);
        let r = defect_report(&phi, 0.0, &sub, &h, &es).unwrap();
        assert_eq!(r.defect, eps);
        assert_eq!(r.bound, eps);
        assert!(r.support_exact);
        assert!(r.holds());
    }

    #[test]
    fn defect_box_bound_random() {
        // Box sub-region: defect <= eps * sqrt(s_d) * L^{(d-1)/2} * boundary sup.
        let theta = LatticeBox::centered(2, rat_int(6)).unwrap().sites().unwrap();
        let dist = SingleSiteDistribution::uniform(0.0, 1.0).unwrap();
        let pot = sample_potential(&theta, &dist, 33, 0).unwrap();
        let eps = 0.01;
        let h = AndersonHamiltonian::new(&theta, eps, &pot).unwrap();
        let es = eigensystem(&h).unwrap();
        let sub_box = LatticeBox::centered(2, rat_int(2)).unwrap();
        let sub = sub_box.sites().unwrap();
        let sub_pot = Potential::new(
            sub.clone(),
            sub.sites()
                .iter()
                .map(|s| pot.value(theta.position(s).unwrap()))
                .collect(),
        )
        .unwrap();
        let h_sub = AndersonHamiltonian::new(&sub, eps, &sub_pot).unwrap();
        let es_sub = eigensystem(&h_sub).unwrap();
        for j in 0..sub.len() {
            let r =
                defect_report(&es_sub.vector(j), es_sub.eigenvalues()[j], &sub, &h, &es).unwrap();
            assert!(r.holds(), "pair {j}: defect {} bound {}", r.defect, r.bound);
            let l = 2.0f64;
            let box_bound = eps
                * crate::lattice::boundary_constant(2).sqrt()
                * l.powf(0.5)
                * es_sub.vector(j).amax();
            // The generic bound is within the box form with the sup over the
            // full vector.
            assert!(r.defect <= box_bound + r.slack);
        }
    }

    #[test]
    fn align_exact_eigenvector() {
        let region = Region::segment(0, 9);
        let dist = SingleSiteDistribution::uniform(0.0, 1.0).unwrap();
        let pot = sample_potential(&region, &dist, 2, 0).unwrap();
        let h = AndersonHamiltonian::new(&region, 0.1, &pot).unwrap();
        let es = eigensystem(&h).unwrap();
        let r = align_eigenpair(&es.vector(3), es.eigenvalues()[3], &h, &es).unwrap();
        assert_eq!(r.nearest, 3);
        assert!(r.delta < 1e-12);
        assert!(r.orthogonal_norm < 1e-10);
        assert!(r.aligned_dist < 1e-10);
        assert!(r.holds(1e-9));
    }

    #[test]
    fn align_two_level_mixture() {
        // phi = (psi_mu + theta psi_nu)/sqrt(1+theta^2): measured orthogonal
        // part is theta/sqrt(1+theta^2) and the lemma bounds hold.
        let region = Region::segment(0, 7);
        let dist = SingleSiteDistribution::uniform(0.0, 1.0).unwrap();
        let pot = sample_potential(&region, &dist, 14, 3).unwrap();
        let h = AndersonHamiltonian::new(&region, 0.02, &pot).unwrap();
        let es = eigensystem(&h).unwrap();
        let theta = 0.01f64;
        let mu = 4usize;
        let other = 5usize;
        let norm = (1.0 + theta * theta).sqrt();
        let phi = (es.vector(mu) + es.vector(other).scale(theta)).scale(1.0 / norm);
        let r = align_eigenpair(&phi, es.eigenvalues()[mu], &h, &es).unwrap();
        assert_eq!(r.nearest, mu);
        let expect = theta / norm;
        assert!((r.orthogonal_norm - expect).abs() < 1e-10);
        assert!(r.holds(1e-9));
    }

    #[test]
    fn align_gate_closed_when_delta_large() {
        let region = Region::segment(0, 5);
        let values = vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
        let pot = Potential::new(region.clone(), values).unwrap();
        let h = AndersonHamiltonian::new(&region, 0.0, &pot).unwrap();
        let es = eigensystem(&h).unwrap();
        // Uniform vector: large defect relative to the 0.1 gaps.
        let n = region.len();
        let phi = DVector::from_element(n, 1.0 / (n as f64).sqrt());
        // An exact midpoint (0.25) has no canonical nearest eigenvalue.
        assert!(matches!(
            align_eigenpair(&phi, 0.25, &h, &es),
            Err(Error::AmbiguousNearest { .. })
        ));
        let r = align_eigenpair(&phi, 0.26, &h, &es).unwrap();
        assert!(!r.bounds_applicable);
        assert!(r.holds(0.0));
    }

    #[test]
    fn lift_identity_when_sub_equals_big() {
        let bx = LatticeBox::centered(1, rat_int(12)).unwrap();
        let region = bx.sites().unwrap();
        let dist = SingleSiteDistribution::uniform(0.0, 1.0).unwrap();
        let pot = sample_potential(&region, &dist, 77, 0).unwrap();
        let h = AndersonHamiltonian::new(&region, 1e-6, &pot).unwrap();
        let es = eigensystem(&h).unwrap();
        let labels: Vec<usize> = (0..region.len())
            .map(|i| es.nearest_index(pot.value(i)))
            .collect();
        let r = lift_eigenpairs(&bx, &es, &labels, &es, 12.0, 0.9, 0.8, 1.0, 1.0).unwrap();
        assert!(r.injective);
        for p in &r.pairs {
            assert_eq!(p.eigenvalue_dist, 0.0);
            assert!(p.vector_dist < 1e-12);
        }
    }

    #[test]
    fn lift_diagonal_case_maps_potential_values() {
        // eps = 0 with distinct potentials: sub eigenvalues are potential
        // values and lift exactly onto the same values of the big system.
        let bx = LatticeBox::new(vec![rat_int(0)], rat_int(6)).unwrap();
        let sub = bx.sites().unwrap();
        let big = Region::segment(-10, 10);
        let values: Vec<f64> = big.sites().iter().map(|s| 0.1 * s[0] as f64 + 1.5).collect();
        let big_pot = Potential::new(big.clone(), values.clone()).unwrap();
        let h_big = AndersonHamiltonian::new(&big, 0.0, &big_pot).unwrap();
        let es_big = eigensystem(&h_big).unwrap();
        let sub_vals: Vec<f64> = sub
            .sites()
            .iter()
            .map(|s| values[big.position(s).unwrap()])
            .collect();
        let sub_pot = Potential::new(sub.clone(), sub_vals.clone()).unwrap();
        let h_sub = AndersonHamiltonian::new(&sub, 0.0, &sub_pot).unwrap();
        let es_sub = eigensystem(&h_sub).unwrap();
        let labels: Vec<usize> = (0..sub.len())
            .map(|i| es_sub.nearest_index(sub_vals[i]))
            .collect();
        let r = lift_eigenpairs(&bx, &es_sub, &labels, &es_big, 21.0, 0.5, 0.8, 1.0, 1.0).unwrap();
        assert!(r.injective);
        for p in &r.pairs {
            assert_eq!(p.eigenvalue_dist, 0.0);
        }
    }

    #[test]
    fn lift_requires_level_spacing() {
        let bx = LatticeBox::centered(1, rat_int(12)).unwrap();
        let region = bx.sites().unwrap();
        // Two equal potential values: big system is not level spacing.
        let mut values: Vec<f64> = (0..region.len()).map(|i| i as f64).collect();
        values[1] = values[0];
        let pot = Potential::new(region.clone(), values).unwrap();
        let h = AndersonHamiltonian::new(&region, 0.0, &pot).unwrap();
        let es = eigensystem(&h).unwrap();
        let labels: Vec<usize> = (0..region.len()).collect();
        assert!(matches!(
            lift_eigenpairs(&bx, &es, &labels, &es, 12.0, 0.9, 0.8, 1.0, 1.0),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn lift_monte_carlo_small_scale() {
        // d=1, ell=12 box inside L=20 segment, strong disorder: injective and
        // within bounds on every seeded trial.
        let bx = LatticeBox::centered(1, rat_int(12)).unwrap();
        let sub = bx.sites().unwrap();
        let big = Region::segment(-10, 10);
        let dist = SingleSiteDistribution::uniform(0.0, 1.0).unwrap();
        let eps = 1e-6;
        let mut skipped = 0;
        for trial in 0..100u64 {
            let big_pot = sample_potential(&big, &dist, 4242, trial).unwrap();
            let h_big = AndersonHamiltonian::new(&big, eps, &big_pot).unwrap();
            let es_big = eigensystem(&h_big).unwrap();
            let sub_vals: Vec<f64> = sub
                .sites()
                .iter()
                .map(|s| big_pot.value(big.position(s).unwrap()))
                .collect();
            let sub_pot = Potential::new(sub.clone(), sub_vals.clone()).unwrap();
            let h_sub = AndersonHamiltonian::new(&sub, eps, &sub_pot).unwrap();
            let es_sub = eigensystem(&h_sub).unwrap();
            let labels: Vec<usize> = (0..sub.len())
                .map(|i| es_sub.nearest_index(sub_vals[i]))
                .collect();
            match lift_eigenpairs(&bx, &es_sub, &labels, &es_big, 20.0, 0.9, 0.8, 1.0, 1.0) {
                Ok(r) => {
                    assert!(r.injective, "trial {trial}");
                    for p in &r.pairs {
                        assert!(p.eigenvalue_within_bound, "trial {trial}: {p:?}");
                        assert!(p.vector_within_bound, "trial {trial}: {p:?}");
                    }
                }
                Err(Error::PreconditionViolated(_)) => skipped += 1,
                Err(e) => panic!("trial {trial}: {e}"),
            }
        }
        assert!(skipped < 10, "too many level-spacing failures: {skipped}");
    }
}
