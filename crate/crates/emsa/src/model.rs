//! The Anderson Hamiltonian `H = -eps*Delta + V` on a finite region, with
//! i.i.d. random potentials drawn from a Holder-continuous single-site
//! distribution.
//!
//! Sampling is counter-based: the potential value at site index `i` of trial
//! `t` is a pure function of `(master_seed, t, i)`, so a sampled operator is
//! reproducible bit-for-bit regardless of evaluation order or thread count.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::rng;

/// Dense-matrix site cap; regions beyond this are rejected.
pub const DEFAULT_SITE_CAP: usize = 4096;

/// Holder continuity data of the single-site measure: the concentration
/// function satisfies `S(t) <= K t^alpha` on `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Holder {
    pub alpha: f64,
    pub k: f64,
}

impl Holder {
    /// `K~ = K` for `alpha = 1` and `8K` for `alpha in (1/2, 1)`.
    pub fn k_tilde(&self) -> f64 {
        if self.alpha == 1.0 {
            self.k
        } else {
            8.0 * self.k
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
enum Kind {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Finitely many atoms `(value, probability)`, probabilities summing to 1.
    Discrete {
        atoms: Vec<(f64, f64)>,
        cumulative: Vec<f64>,
    },
    /// A custom law given by its quantile function as piecewise-linear knots
    /// `(u, value)` on `[0,1]`, truncated to the stated support.
    TruncatedCustom {
        knots: Vec<(f64, f64)>,
    },
}

/// A non-degenerate single-site distribution with bounded support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleSiteDistribution {
    kind: Kind,
    support: (f64, f64),
    holder: Option<Holder>,
}

impl SingleSiteDistribution {
    /// Uniform on `[lo, hi]`; Holder of order 1 with `K = 1/(hi-lo)`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid("uniform distribution needs lo < hi, finite"));
        }
        Ok(SingleSiteDistribution {
            kind: Kind::Uniform { lo, hi },
            support: (lo, hi),
            holder: Some(Holder { alpha: 1.0, k: 1.0 / (hi - lo) }),
        })
    }

    /// Finitely many atoms. Not Holder continuous of any order in (1/2, 1],
    /// so `holder()` is `None` and probability-bound comparisons are disabled
    /// downstream. Rejected unless there are at least two distinct atoms with
    /// positive weight.
    pub fn discrete(atoms: &[(f64, f64)]) -> Result<Self> {
        let mut atoms: Vec<(f64, f64)> = atoms.to_vec();
        atoms.retain(|&(_, w)| w > 0.0);
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite atom values"));
        if atoms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("discrete atoms must be distinct"));
        }
        if atoms.len() < 2 {
            return Err(Error::invalid(
                "degenerate distribution: need at least two atoms with positive weight",
            ));
        }
        let total: f64 = atoms.iter().map(|&(_, w)| w).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::invalid("atom weights must sum to a positive finite value"));
        }
        for (_, w) in &mut atoms {
            *w /= total;
        }
        let mut cumulative = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for &(_, w) in &atoms {
            acc += w;
            cumulative.push(acc);
        }
        *cumulative.last_mut().expect("nonempty") = 1.0;
        let support = (atoms[0].0, atoms[atoms.len() - 1].0);
        Ok(SingleSiteDistribution { kind: Kind::Discrete { atoms, cumulative }, support, holder: None })
    }

    /// A custom quantile table with caller-asserted Holder data.
    pub fn truncated_custom(knots: &[(f64, f64)], alpha: f64, k: f64) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::invalid("custom quantile needs at least two knots"));
        }
        if knots.first().map(|k| k.0) != Some(0.0) || knots.last().map(|k| k.0) != Some(1.0) {
            return Err(Error::invalid("custom quantile knots must span u in [0,1]"));
        }
        if knots.windows(2).any(|w| w[0].0 >= w[1].0 || w[0].1 > w[1].1) {
            return Err(Error::invalid("custom quantile knots must be increasing"));
        }
        if !(0.5 < alpha && alpha <= 1.0) || !(k > 0.0) {
            return Err(Error::invalid("custom distribution needs alpha in (1/2,1] and K > 0"));
        }
        let support = (knots[0].1, knots[knots.len() - 1].1);
        if !(support.0 < support.1) {
            return Err(Error::invalid("degenerate distribution: single-point support"));
        }
        Ok(SingleSiteDistribution {
            kind: Kind::TruncatedCustom { knots: knots.to_vec() },
            support,
            holder: Some(Holder { alpha, k }),
        })
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn support_diameter(&self) -> f64 {
        self.support.1 - self.support.0
    }

    /// Holder data, `None` for non-Holder (discrete) laws.
    pub fn holder(&self) -> Option<Holder> {
        self.holder
    }

    /// Inverse CDF at `u in [0,1)`.
    fn quantile(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Uniform { lo, hi } => lo + u * (hi - lo),
            Kind::Discrete { atoms, cumulative } => {
                let i = cumulative.partition_point(|&c| c <= u).min(atoms.len() - 1);
                atoms[i].0
            }
            Kind::TruncatedCustom { knots } => {
                let i = knots.partition_point(|&(ku, _)| ku <= u).min(knots.len() - 1);
                let (u0, x0) = knots[i - 1];
                let (u1, x1) = knots[i];
                x0 + (u - u0) / (u1 - u0) * (x1 - x0)
            }
        }
    }

    /// Concentration function `S(t) = sup_a mu[a, a+t]` and the doubled form
    /// `Q(t)` (`= S` at order 1, `= 8S` otherwise). Exact for uniform and
    /// discrete kinds.
    pub fn concentration(&self, t: f64) -> Result<(f64, f64)> {
        if !(t >= 0.0) {
            return Err(Error::invalid("concentration: t must be nonnegative"));
        }
        match &self.kind {
            Kind::Uniform { lo, hi } => {
                let s = (t / (hi - lo)).min(1.0);
                Ok((s, s))
            }
            Kind::Discrete { atoms, .. } => {
                // The sup over windows [a, a+t] is attained with a at an atom.
                let mut s: f64 = 0.0;
                for i in 0..atoms.len() {
                    let mass: f64 = atoms[i..]
                        .iter()
                        .take_while(|&&(v, _)| v <= atoms[i].0 + t)
                        .map(|&(_, w)| w)
                        .sum();
                    s = s.max(mass);
                }
                Ok((s, 8.0 * s))
            }
            Kind::TruncatedCustom { .. } => Err(Error::NotImplemented(
                "concentration function for custom quantile tables".into(),
            )),
        }
    }
}

/// A realized potential on a region, one value per site.
#[derive(Debug, Clone)]
pub struct Potential {
    region: Region,
    values: Vec<f64>,
}

impl Potential {
    pub fn new(region: Region, values: Vec<f64>) -> Result<Self> {
        if values.len() != region.len() {
            return Err(Error::invalid("potential length does not match region"));
        }
        Ok(Potential { region, values })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, row: usize) -> f64 {
        self.values[row]
    }
}

/// Draw an i.i.d. potential for `(master_seed, trial_index)`; the stream is
/// a pure function of the site index, independent of evaluation order.
pub fn sample_potential(
    region: &Region,
    dist: &SingleSiteDistribution,
    master_seed: u64,
    trial_index: u64,
) -> Result<Potential> {
    if region.is_empty() {
        return Err(Error::invalid("sample_potential: empty region"));
    }
    let values = (0..region.len())
        .map(|i| dist.quantile(rng::uniform_53(master_seed, trial_index, i as u64)))
        .collect();
    Potential::new(region.clone(), values)
}

/// The finite-volume Anderson Hamiltonian `(-eps*Delta + V)` restricted to a
/// region, as a dense symmetric matrix.
#[derive(Debug, Clone)]
pub struct AndersonHamiltonian {
    region: Region,
    eps: f64,
    potential: Vec<f64>,
    matrix: DMatrix<f64>,
}

impl AndersonHamiltonian {
    pub fn new(region: &Region, eps: f64, potential: &Potential) -> Result<Self> {
        Self::with_cap(region, eps, potential, DEFAULT_SITE_CAP)
    }

    pub fn with_cap(
        region: &Region,
        eps: f64,
        potential: &Potential,
        cap: usize,
    ) -> Result<Self> {
        if !(eps >= 0.0) {
            return Err(Error::invalid("hamiltonian: eps must be nonnegative"));
        }
        if potential.region() != region {
            return Err(Error::invalid("hamiltonian: potential region mismatch"));
        }
        let n = region.len();
        if n > cap {
            return Err(Error::SiteCapExceeded { sites: n, cap });
        }
        let mut matrix = DMatrix::zeros(n, n);
        for (i, site) in region.sites().iter().enumerate() {
            matrix[(i, i)] = potential.value(i);
            for nb in region.neighbors_of(site) {
                let j = region.position(&nb).expect("neighbor is in region");
                matrix[(i, j)] = -eps;
                matrix[(j, i)] = -eps;
            }
        }
        Ok(AndersonHamiltonian { region: region.clone(), eps, potential: potential.values().to_vec(), matrix })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn len(&self) -> usize {
        self.region.len()
    }

    pub fn is_empty(&self) -> bool {
        self.region.is_empty()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// A priori spectral enclosure `[min V - 2*eps*d, max V + 2*eps*d]`.
    pub fn spectral_enclosure(&self) -> (f64, f64) {
        let vmin = self.potential.iter().cloned().fold(f64::INFINITY, f64::min);
        let vmax = self.potential.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let r = 2.0 * self.eps * self.dim() as f64;
        (vmin - r, vmax + r)
    }

    /// Coarse scale `max(1, |V|_inf + 2*eps*d)` used to size absolute slacks.
    pub fn norm_scale(&self) -> f64 {
        let vmax = self.potential.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (vmax + 2.0 * self.eps * self.dim() as f64).max(1.0)
    }
}

/// The decomposition `H_Theta = H_Phi (+) H_{Theta\Phi} + eps*Gamma` along the
/// boundary of `Phi`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub inner: AndersonHamiltonian,
    pub outer: AndersonHamiltonian,
    /// Boundary coupling on the full region: `-1` at `(u,v)` and `(v,u)` for
    /// every boundary edge, `0` elsewhere.
    pub gamma: DMatrix<f64>,
    pub boundary: crate::lattice::BoundarySet,
}

/// Split `h` along `phi` (`phi` must be a subset of the region of `h`).
pub fn decompose(h: &AndersonHamiltonian, phi: &Region) -> Result<Decomposition> {
    let theta = h.region();
    if !phi.is_subset_of(theta) {
        return Err(Error::invalid("decompose: Phi is not a subset of the region"));
    }
    let complement = theta.difference(phi);
    let restrict = |part: &Region| -> Result<AndersonHamiltonian> {
        let values: Vec<f64> = part
            .sites()
            .iter()
            .map(|s| h.potential[theta.position(s).expect("subset site")])
            .collect();
        let pot = Potential::new(part.clone(), values)?;
        AndersonHamiltonian::with_cap(part, h.eps, &pot, usize::MAX)
    };
    let inner = restrict(phi)?;
    let outer = restrict(&complement)?;
    let boundary = crate::lattice::boundaries(phi, theta)?;
    let n = theta.len();
    let mut gamma = DMatrix::zeros(n, n);
    for (u, v) in &boundary.edges {
        let i = theta.position(u).expect("edge endpoint in region");
        let j = theta.position(v).expect("edge endpoint in region");
        gamma[(i, j)] = -1.0;
        gamma[(j, i)] = -1.0;
    }
    Ok(Decomposition { inner, outer, gamma, boundary })
}

impl Decomposition {
    /// Reassemble `H_Phi (+) H_{Theta\Phi} + eps*Gamma` on the original index
    /// order; equals the original matrix entry-for-entry.
    pub fn reassembled(&self, h: &AndersonHamiltonian) -> DMatrix<f64> {
        let theta = h.region();
        let n = theta.len();
        let mut out = DMatrix::zeros(n, n);
        for part in [&self.inner, &self.outer] {
            for (a, sa) in part.region().sites().iter().enumerate() {
                let i = theta.position(sa).expect("subset site");
                for (b, sb) in part.region().sites().iter().enumerate() {
                    let val = part.matrix[(a, b)];
                    if val != 0.0 {
                        out[(i, theta.position(sb).expect("subset site"))] = val;
                    }
                }
            }
        }
        out + self.gamma.scale(h.eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{rat_int, LatticeBox, Region};

    #[test]
    fn degenerate_discrete_rejected() {
        assert!(SingleSiteDistribution::discrete(&[(0.5, 1.0)]).is_err());
        assert!(SingleSiteDistribution::discrete(&[(0.5, 1.0), (0.5, 1.0)]).is_err());
        assert!(SingleSiteDistribution::discrete(&[(0.5, 1.0), (0.7, 0.0)]).is_err());
    }

    #[test]
    fn uniform_sampling_in_support() {
        let region = Region::segment(0, 99);
        let dist = SingleSiteDistribution::uniform(0.0, 1.0).unwrap();
        let pot = sample_potential(&region, &dist, 7, 0).unwrap();
        assert!(pot.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn sampling_is_deterministic() {
        let region = Region::segment(0, 49);
        let dist = SingleSiteDistribution::uniform(-1.0, 2.0).unwrap();
        let a = sample_potential(&region, &dist, 123, 9).unwrap();
        let b = sample_potential(&region, &dist, 123, 9).unwrap();
        assert_eq!(a.values(), b.values());
        let c = sample_potential(&region, &dist, 123, 10).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn discrete_sampling_matches_weights() {
        let region = Region::segment(0, 9999);
        let dist = SingleSiteDistribution::discrete(&[(0.0, 3.0), (1.0, 1.0)]).unwrap();
        let pot = sample_potential(&region, &dist, 5, 0).unwrap();
        let ones = pot.values().iter().filter(|&&v| v == 1.0).count();
        // Expected 2500 +- ~43 (one-in-a-million tail at 5 sigma = 217).
        assert!((ones as f64 - 2500.0).abs() < 250.0, "ones = {ones}");
    }

    #[test]
    fn two_site_hopping_matrix() {
        let region = Region::segment(0, 1);
        let pot = Potential::new(region.clone(), vec![0.0, 0.0]).unwrap();
        let h = AndersonHamiltonian::new(&region, 1.0, &pot).unwrap();
        assert_eq!(h.matrix()[(0, 0)], 0.0);
        assert_eq!(h.matrix()[(0, 1)], -1.0);
        assert_eq!(h.matrix()[(1, 0)], -1.0);
        assert_eq!(h.matrix()[(1, 1)], 0.0);
    }

    #[test]
    fn eps_zero_is_diagonal() {
        let region = LatticeBox::centered(2, rat_int(4)).unwrap().sites().unwrap();
        let n = region.len();
        let values: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let pot = Potential::new(region.clone(), values.clone()).unwrap();
        let h = AndersonHamiltonian::new(&region, 0.0, &pot).unwrap();
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { values[i] } else { 0.0 };
                assert_eq!(h.matrix()[(i, j)], expect);
            }
        }
    }

    #[test]
    fn matrix_is_bitwise_symmetric() {
        let region = LatticeBox::centered(2, rat_int(6)).unwrap().sites().unwrap();
        let dist = SingleSiteDistribution::uniform(0.0, 1.0).unwrap();
        let pot = sample_potential(&region, &dist, 3, 0).unwrap();
        let h = AndersonHamiltonian::new(&region, 0.37, &pot).unwrap();
        let m = h.matrix();
        for i in 0..region.len() {
            for j in 0..i {
                assert_eq!(m[(i, j)].to_bits(), m[(j, i)].to_bits());
            }
        }
    }

    #[test]
    fn site_cap_enforced() {
        let region = Region::segment(0, 9);
        let pot = Potential::new(region.clone(), vec![0.0; 10]).unwrap();
        let err = AndersonHamiltonian::with_cap(&region, 0.0, &pot, 5).unwrap_err();
        assert!(matches!(err, Error::SiteCapExceeded { sites: 10, cap: 5 }));
    }

    #[test]
    fn decompose_trivial_and_one_edge() {
        let theta = Region::segment(0, 9);
        let dist = SingleSiteDistribution::uniform(0.0, 1.0).unwrap();
        let pot = sample_potential(&theta, &dist, 11, 0).unwrap();
        let h = AndersonHamiltonian::new(&theta, 0.5, &pot).unwrap();

        // Phi = Theta: no coupling.
        let whole = decompose(&h, &theta).unwrap();
        assert!(whole.gamma.iter().all(|&x| x == 0.0));

        // Phi = {0..4}: exactly the two entries (4,5), (5,4).
        let phi = Region::segment(0, 4);
        let dec = decompose(&h, &phi).unwrap();
        let nz: Vec<(usize, usize)> = (0..10)
            .flat_map(|i| (0..10).map(move |j| (i, j)))
            .filter(|&(i, j)| dec.gamma[(i, j)] != 0.0)
            .collect();
        assert_eq!(nz, vec![(4, 5), (5, 4)]);
        assert_eq!(dec.gamma[(4, 5)], -1.0);
    }

    #[test]
    fn decompose_reassembles_exactly() {
        let theta = LatticeBox::centered(2, rat_int(5)).unwrap().sites().unwrap();
        let dist = SingleSiteDistribution::uniform(-1.0, 1.0).unwrap();
        let pot = sample_potential(&theta, &dist, 21, 4).unwrap();
        let h = AndersonHamiltonian::new(&theta, 0.25, &pot).unwrap();
        let phi = LatticeBox::centered(2, rat_int(2)).unwrap().sites().unwrap();
        let dec = decompose(&h, &phi).unwrap();
        let re = dec.reassembled(&h);
        let max_dev = (re - h.matrix()).amax();
        assert_eq!(max_dev, 0.0);
    }

    #[test]
    fn concentration_uniform_and_discrete() {
        let u = SingleSiteDistribution::uniform(0.0, 1.0).unwrap();
        assert_eq!(u.concentration(0.3).unwrap(), (0.3, 0.3));
        assert_eq!(u.concentration(1.5).unwrap(), (1.0, 1.0));
        let d = SingleSiteDistribution::discrete(&[(0.0, 1.0), (1.0, 1.0)]).unwrap();
        let (s, q) = d.concentration(0.5).unwrap();
        assert_eq!(s, 0.5);
        assert_eq!(q, 4.0);
        // Window long enough to hold both atoms.
        assert_eq!(d.concentration(1.0).unwrap().0, 1.0);
    }

    #[test]
    fn custom_quantile_interpolates() {
        let dist =
            SingleSiteDistribution::truncated_custom(&[(0.0, 0.0), (1.0, 2.0)], 1.0, 0.5).unwrap();
        assert_eq!(dist.quantile(0.25), 0.5);
        assert!(dist.concentration(0.1).is_err());
    }

    #[test]
    fn laplacian_norm_at_most_2d() {
        // Power iteration on the hopping part alone.
        for d in 1..=2usize {
            let region = LatticeBox::centered(d, rat_int(6)).unwrap().sites().unwrap();
            let pot = Potential::new(region.clone(), vec![0.0; region.len()]).unwrap();
            let h = AndersonHamiltonian::new(&region, 1.0, &pot).unwrap();
            let m = h.matrix();
            let n = region.len();
            let mut v = nalgebra::DVector::from_element(n, 1.0 / (n as f64).sqrt());
            let mut estimate = 0.0;
            for _ in 0..200 {
                let w = m * &v;
                estimate = w.norm();
                if estimate == 0.0 {
                    break;
                }
                v = w / estimate;
            }
            assert!(estimate <= 2.0 * d as f64 + 1e-9, "d = {d}: {estimate}");
        }
    }
}
