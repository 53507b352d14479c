//! Exact geometry on `Z^d`: boxes, regions, boundaries, interiors, suitable
//! covers, and buffered subsets.
//!
//! Box centers, sides, and cover data are exact rationals; a box of side `L`
//! centered at `x` holds the integer points `y` with `max_i |y_i - x_i| <= L/2`.
//! Only spectral quantities elsewhere in the crate use floating point, so the
//! geometric predicates here (membership, cover step selection, boundary
//! classification) never depend on rounding.

use std::collections::{HashMap, HashSet, VecDeque};

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar used for all geometry.
pub type Rat = Ratio<i64>;

/// A lattice site in `Z^d`.
pub type Site = Vec<i64>;

/// Rational point in `R^d` (box and cover centers).
pub type Point = Vec<Rat>;

pub fn rat(n: i64, d: i64) -> Rat {
    Ratio::new(n, d)
}

pub fn rat_int(n: i64) -> Rat {
    Ratio::from_integer(n)
}

pub fn rat_to_f64(r: Rat) -> f64 {
    r.to_f64().expect("rational in f64 range")
}

/// Parse a decimal string (e.g. "31.622777") into an exact rational.
pub fn rat_from_decimal(s: &str) -> Result<Rat> {
    let s = s.trim();
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1i64, rest),
        None => (1i64, s),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(Error::invalid(format!("not a decimal number: {s:?}")));
    }
    let int: i64 = if int_part.is_empty() {
        0
    } else {
        int_part
            .parse()
            .map_err(|_| Error::invalid(format!("not a decimal number: {s:?}")))?
    };
    let mut den: i64 = 1;
    let mut num: i64 = 0;
    for c in frac_part.chars() {
        let d = c
            .to_digit(10)
            .ok_or_else(|| Error::invalid(format!("not a decimal number: {s:?}")))?;
        num = num
            .checked_mul(10)
            .and_then(|n| n.checked_add(d as i64))
            .ok_or_else(|| Error::invalid("decimal has too many digits"))?;
        den = den
            .checked_mul(10)
            .ok_or_else(|| Error::invalid("decimal has too many digits"))?;
    }
    Ok(rat_int(sign) * (rat_int(int) + Ratio::new(num, den)))
}

/// Sup-norm distance between two sites.
pub fn site_dist(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).max().unwrap_or(0)
}

/// Sup-norm distance between two rational points.
pub fn point_dist(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x - *y).abs())
        .max()
        .unwrap_or_else(Rat::zero)
}

// ---------------------------------------------------------------------------
// Boxes
// ---------------------------------------------------------------------------

/// The box `Lambda_L(x)` in `Z^d` of side `L > 0` centered at a rational point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeBox {
    center: Point,
    side: Rat,
}

impl LatticeBox {
    pub fn new(center: Point, side: Rat) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::invalid("box dimension must be positive"));
        }
        if side <= Rat::zero() {
            return Err(Error::invalid("box side must be positive"));
        }
        Ok(LatticeBox { center, side })
    }

    /// Box centered at the origin.
    pub fn centered(dim: usize, side: Rat) -> Result<Self> {
        Self::new(vec![Rat::zero(); dim], side)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[Rat] {
        &self.center
    }

    pub fn side(&self) -> Rat {
        self.side
    }

    /// Integer bounds `[lo_i, hi_i]` of the box on one axis.
    fn axis_bounds(&self, axis: usize) -> (i64, i64) {
        let half = self.side / rat_int(2);
        let lo = (self.center[axis] - half).ceil().to_integer();
        let hi = (self.center[axis] + half).floor().to_integer();
        (lo, hi)
    }

    /// Exact membership `max_i |y_i - x_i| <= L/2`.
    pub fn contains(&self, site: &[i64]) -> bool {
        debug_assert_eq!(site.len(), self.dim());
        let half = self.side / rat_int(2);
        site.iter()
            .zip(&self.center)
            .all(|(y, c)| (rat_int(*y) - *c).abs() <= half)
    }

    /// Membership of a rational point in the real box `Lambda^R_L(x)`.
    pub fn contains_point(&self, p: &[Rat]) -> bool {
        let half = self.side / rat_int(2);
        p.iter().zip(&self.center).all(|(y, c)| (*y - *c).abs() <= half)
    }

    /// All integer points of the box, in lexicographic order.
    pub fn sites(&self) -> Result<Region> {
        let d = self.dim();
        let bounds: Vec<(i64, i64)> = (0..d).map(|i| self.axis_bounds(i)).collect();
        if bounds.iter().any(|(lo, hi)| lo > hi) {
            // A very thin box can miss the lattice entirely.
            return Region::from_sorted_sites(d, Vec::new());
        }
        let mut count: usize = 1;
        for (lo, hi) in &bounds {
            count = count.saturating_mul((hi - lo + 1) as usize);
        }
        let mut sites = Vec::with_capacity(count);
        let mut cur: Site = bounds.iter().map(|(lo, _)| *lo).collect();
        loop {
            sites.push(cur.clone());
            // Odometer increment, last axis fastest: yields lexicographic order.
            let mut axis = d;
            loop {
                if axis == 0 {
                    return Region::from_sorted_sites(d, sites);
                }
                axis -= 1;
                if cur[axis] < bounds[axis].1 {
                    cur[axis] += 1;
                    break;
                }
                cur[axis] = bounds[axis].0;
            }
        }
    }
}

/// Integer points of a box: `box_sites` from the module surface.
pub fn box_sites(b: &LatticeBox) -> Result<Region> {
    b.sites()
}

// ---------------------------------------------------------------------------
// Regions
// ---------------------------------------------------------------------------

/// A finite indexed subset of `Z^d` with a site -> row bijection.
///
/// Sites are held in lexicographic order, so matrices and matchings built on
/// top of a region are reproducible.
#[derive(Debug, Clone)]
pub struct Region {
    dim: usize,
    sites: Vec<Site>,
    index: HashMap<Site, usize>,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.sites == other.sites
    }
}
impl Eq for Region {}

impl Region {
    pub fn new(dim: usize, mut sites: Vec<Site>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("region dimension must be positive"));
        }
        if sites.iter().any(|s| s.len() != dim) {
            return Err(Error::invalid("site dimension mismatch"));
        }
        sites.sort();
        sites.dedup();
        Region::from_sorted_sites(dim, sites)
    }

    fn from_sorted_sites(dim: usize, sites: Vec<Site>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("region dimension must be positive"));
        }
        let index: HashMap<Site, usize> =
            sites.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        if index.len() != sites.len() {
            return Err(Error::invalid("region sites must be distinct"));
        }
        Ok(Region { dim, sites, index })
    }

    /// 1D convenience: the sites `lo..=hi`.
    pub fn segment(lo: i64, hi: i64) -> Region {
        let sites = (lo..=hi).map(|x| vec![x]).collect();
        Region::from_sorted_sites(1, sites).expect("segment is sorted and distinct")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, row: usize) -> &Site {
        &self.sites[row]
    }

    /// Row of a site, if present.
    pub fn position(&self, site: &[i64]) -> Option<usize> {
        self.index.get(site).copied()
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        self.index.contains_key(site)
    }

    pub fn is_subset_of(&self, other: &Region) -> bool {
        self.sites.iter().all(|s| other.contains(s))
    }

    /// Set difference, keeping lexicographic order.
    pub fn difference(&self, other: &Region) -> Region {
        let sites: Vec<Site> =
            self.sites.iter().filter(|s| !other.contains(s)).cloned().collect();
        Region::from_sorted_sites(self.dim, sites).expect("difference of sorted is sorted")
    }

    pub fn intersection(&self, other: &Region) -> Region {
        let sites: Vec<Site> =
            self.sites.iter().filter(|s| other.contains(s)).cloned().collect();
        Region::from_sorted_sites(self.dim, sites).expect("intersection of sorted is sorted")
    }

    pub fn union(&self, other: &Region) -> Result<Region> {
        if self.dim != other.dim {
            return Err(Error::invalid("region dimension mismatch"));
        }
        let mut sites = self.sites.clone();
        sites.extend(other.sites.iter().cloned());
        Region::new(self.dim, sites)
    }

    /// Union of many site lists.
    pub fn union_all(dim: usize, parts: &[Region]) -> Result<Region> {
        let mut sites = Vec::new();
        for p in parts {
            if p.dim != dim {
                return Err(Error::invalid("region dimension mismatch"));
            }
            sites.extend(p.sites.iter().cloned());
        }
        Region::new(dim, sites)
    }

    /// Sup-norm distance from a site to this region (`None` if empty).
    pub fn dist_to(&self, site: &[i64]) -> Option<i64> {
        self.sites.iter().map(|s| site_dist(s, site)).min()
    }

    /// Sup-norm diameter (0 for a single site, `None` if empty).
    pub fn diameter(&self) -> Option<i64> {
        if self.sites.is_empty() {
            return None;
        }
        let d = self.dim;
        let mut out = 0i64;
        for axis in 0..d {
            let (mut lo, mut hi) = (i64::MAX, i64::MIN);
            for s in &self.sites {
                lo = lo.min(s[axis]);
                hi = hi.max(s[axis]);
            }
            out = out.max(hi - lo);
        }
        Some(out)
    }

    /// Nearest-neighbor sites of `site` (Euclidean distance 1) inside the region.
    pub fn neighbors_of(&self, site: &[i64]) -> Vec<Site> {
        let mut out = Vec::with_capacity(2 * self.dim);
        let mut probe = site.to_vec();
        for axis in 0..self.dim {
            for step in [-1i64, 1] {
                probe[axis] = site[axis] + step;
                if self.contains(&probe) {
                    out.push(probe.clone());
                }
            }
            probe[axis] = site[axis];
        }
        out
    }

    /// Connectivity as a subset of `Z^d` (nearest-neighbor graph).
    pub fn is_connected(&self) -> bool {
        if self.sites.len() <= 1 {
            return true;
        }
        let mut seen = vec![false; self.sites.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut reached = 1usize;
        while let Some(i) = queue.pop_front() {
            for nb in self.neighbors_of(&self.sites[i]) {
                let j = self.position(&nb).expect("neighbor is in region");
                if !seen[j] {
                    seen[j] = true;
                    reached += 1;
                    queue.push_back(j);
                }
            }
        }
        reached == self.sites.len()
    }
}

// ---------------------------------------------------------------------------
// Boundaries
// ---------------------------------------------------------------------------

/// The boundary data of `Phi` relative to `Theta`: the edge set
/// `{(u,v) : u in Phi, v in Theta \ Phi, |u-v|_2 = 1}` together with its
/// exterior and interior projections.
#[derive(Debug, Clone)]
pub struct BoundarySet {
    /// Ordered pairs `(u, v)` with `u` inside and `v` outside.
    pub edges: Vec<(Site, Site)>,
    /// Sites `v` outside touching the inner set.
    pub exterior: Region,
    /// Sites `u` inside touching the complement.
    pub interior: Region,
    /// For each exterior site `v`, its unique inner contact `v_hat`, when the
    /// contact is unique for every exterior site (always the case when the
    /// inner set is a box).
    pub hat: Option<HashMap<Site, Site>>,
}

/// Boundary of `inner` relative to `outer` (`inner` must be a subset).
pub fn boundaries(inner: &Region, outer: &Region) -> Result<BoundarySet> {
    if !inner.is_subset_of(outer) {
        return Err(Error::invalid("boundaries: inner region is not a subset of outer"));
    }
    let dim = inner.dim();
    let mut edges = Vec::new();
    let mut exterior: Vec<Site> = Vec::new();
    let mut interior: Vec<Site> = Vec::new();
    let mut contacts: HashMap<Site, Vec<Site>> = HashMap::new();
    for u in inner.sites() {
        let mut touching = false;
        let mut probe = u.clone();
        for axis in 0..dim {
            for step in [-1i64, 1] {
                probe[axis] = u[axis] + step;
                if outer.contains(&probe) && !inner.contains(&probe) {
                    edges.push((u.clone(), probe.clone()));
                    exterior.push(probe.clone());
                    contacts.entry(probe.clone()).or_default().push(u.clone());
                    touching = true;
                }
            }
            probe[axis] = u[axis];
        }
        if touching {
            interior.push(u.clone());
        }
    }
    let exterior = Region::new(dim, exterior)?;
    let interior = Region::new(dim, interior)?;
    let unique = contacts.values().all(|us| us.len() == 1);
    let hat = unique.then(|| {
        contacts
            .into_iter()
            .map(|(v, mut us)| (v, us.pop().expect("one contact")))
            .collect()
    });
    Ok(BoundarySet { edges, exterior, interior, hat })
}

/// `s_d = 2^d d`, the constant in the boundary cardinality bound
/// `|boundary(Lambda_L)| <= s_d L^{d-1}`.
pub fn boundary_constant(dim: usize) -> f64 {
    (1u64 << dim) as f64 * dim as f64
}

/// The `t`-interior `Psi^{Theta,t} = {y in Psi : dist(y, Theta \ Psi) > floor(t)}`
/// and the `t`-boundary `(Psi \ Psi^{Theta,t}) union ext-boundary(Psi)`.
///
/// The floor is taken exactly on the rational `t`, so `Psi^{Theta,t}`
/// coincides with `Psi^{Theta,floor(t)}`.
pub fn interior(psi: &Region, theta: &Region, t: Rat) -> Result<(Region, Region)> {
    if t < Rat::zero() {
        return Err(Error::invalid("interior: t must be nonnegative"));
    }
    if !psi.is_subset_of(theta) {
        return Err(Error::invalid("interior: Psi is not a subset of Theta"));
    }
    let dim = psi.dim();
    let radius = t.floor().to_integer();
    let mut kept: Vec<Site> = Vec::with_capacity(psi.len());
    let mut offsets: Site = vec![-radius; dim];
    for y in psi.sites() {
        // y survives iff the radius-`t` sup-ball around it meets Theta only
        // inside Psi.
        let mut deep = true;
        'scan: loop {
            let z: Site = y.iter().zip(&offsets).map(|(a, o)| a + o).collect();
            if theta.contains(&z) && !psi.contains(&z) {
                deep = false;
                break 'scan;
            }
            let mut axis = dim;
            loop {
                if axis == 0 {
                    break 'scan;
                }
                axis -= 1;
                if offsets[axis] < radius {
                    offsets[axis] += 1;
                    break;
                }
                offsets[axis] = -radius;
            }
        }
        offsets.iter_mut().for_each(|o| *o = -radius);
        if deep {
            kept.push(y.clone());
        }
    }
    let deep_region = Region::from_sorted_sites(dim, kept)?;
    let shell = psi.difference(&deep_region);
    let ext = boundaries(psi, theta)?.exterior;
    let t_boundary = shell.union(&ext)?;
    Ok((deep_region, t_boundary))
}

// ---------------------------------------------------------------------------
// Suitable covers
// ---------------------------------------------------------------------------

/// A suitable `ell`-cover of a box of side `L`: boxes of side `ell` on the
/// grid `x0 + rho*ell*Z^d` with the maximal admissible step ratio
/// `rho = max [3/5, 4/5] ∩ {(L-ell)/(2*ell*k) : k in N}`.
#[derive(Debug, Clone)]
pub struct CoverGeometry {
    pub parent: LatticeBox,
    pub ell: Rat,
    pub rho: Rat,
    /// Grid index `k` with `rho = (L - ell)/(2*ell*k)`.
    pub grid_k: i64,
    /// Cover centers, lexicographically ordered.
    pub centers: Vec<Point>,
    pub boxes: Vec<LatticeBox>,
}

/// Build the suitable `ell`-cover of `parent`. Requires `ell <= L/6`.
pub fn suitable_cover(parent: &LatticeBox, ell: Rat) -> Result<CoverGeometry> {
    let side = parent.side();
    if ell <= Rat::zero() {
        return Err(Error::invalid("cover: ell must be positive"));
    }
    if ell > side / rat_int(6) {
        return Err(Error::invalid(format!(
            "cover: ell = {ell} exceeds L/6 = {}",
            side / rat_int(6)
        )));
    }
    // rho = (L-ell)/(2*ell*k) lies in [3/5, 4/5] iff
    // 5(L-ell)/(8*ell) <= k <= 5(L-ell)/(6*ell); rho is maximal at the
    // smallest such k. ell <= L/6 guarantees the range holds an integer.
    let spread = side - ell;
    let k_lo = (rat_int(5) * spread / (rat_int(8) * ell)).ceil().to_integer();
    let k_hi = (rat_int(5) * spread / (rat_int(6) * ell)).floor().to_integer();
    assert!(
        k_lo <= k_hi && k_lo >= 1,
        "no admissible grid step for L = {side}, ell = {ell}"
    );
    let k = k_lo;
    let rho = spread / (rat_int(2) * ell * rat_int(k));
    debug_assert!(rat(3, 5) <= rho && rho <= rat(4, 5));

    // Grid points x0 + rho*ell*j with |rho*ell*j| <= L/2; the truncation
    // works out to |j| <= k per axis, giving (2k+1)^d centers.
    let step = rho * ell;
    let j_max = (side / (rat_int(2) * step)).floor().to_integer();
    debug_assert_eq!(j_max, k);

    let dim = parent.dim();
    let mut centers = Vec::new();
    let mut j: Vec<i64> = vec![-j_max; dim];
    loop {
        let center: Point = parent
            .center()
            .iter()
            .zip(&j)
            .map(|(c, idx)| *c + step * rat_int(*idx))
            .collect();
        centers.push(center);
        let mut axis = dim;
        loop {
            if axis == 0 {
                let boxes = centers
                    .iter()
                    .map(|c| LatticeBox::new(c.clone(), ell))
                    .collect::<Result<Vec<_>>>()?;
                return Ok(CoverGeometry {
                    parent: parent.clone(),
                    ell,
                    rho,
                    grid_k: k,
                    centers,
                    boxes,
                });
            }
            axis -= 1;
            if j[axis] < j_max {
                j[axis] += 1;
                break;
            }
            j[axis] = -j_max;
        }
    }
}

impl CoverGeometry {
    /// Interior margin `floor(ell/10)` used by the covering property.
    pub fn margin(&self) -> i64 {
        (self.ell / rat_int(10)).floor().to_integer()
    }

    /// Index of the first (lexicographically smallest center) cover box that
    /// holds `b` in its `ell/10` interior relative to the parent box.
    pub fn covering_box_index(&self, b: &[i64]) -> Result<usize> {
        if !self.parent.contains(b) {
            return Err(Error::invalid("cover: site lies outside the parent box"));
        }
        let t = self.margin();
        let dim = self.parent.dim();
        'boxes: for (i, bx) in self.boxes.iter().enumerate() {
            if !bx.contains(b) {
                continue;
            }
            for axis in 0..dim {
                let (lo, hi) = bx.axis_bounds(axis);
                let (parent_lo, parent_hi) = self.parent.axis_bounds(axis);
                // The sup-ball of radius t around b, clipped to the parent,
                // must stay inside this box on every axis.
                if (b[axis] - t).max(parent_lo) < lo || (b[axis] + t).min(parent_hi) > hi {
                    continue 'boxes;
                }
            }
            return Ok(i);
        }
        Err(Error::invalid(format!(
            "cover: no box holds {b:?} in its interior (covering property violated)"
        )))
    }

    /// Check the defining cover properties exhaustively:
    /// the boxes tile the parent exactly, every parent site sits in the
    /// `ell/10` interior of some box, and the center count matches
    /// `((L-ell)/(rho*ell) + 1)^d` inside `[(L/ell)^d, (2L/ell)^d]`.
    pub fn verify(&self) -> Result<()> {
        let parent_sites = self.parent.sites()?;
        let mut union: HashSet<Site> = HashSet::new();
        for bx in &self.boxes {
            for s in bx.sites()?.sites() {
                if !parent_sites.contains(s) {
                    return Err(Error::invalid(format!(
                        "cover box site {s:?} escapes the parent box"
                    )));
                }
                union.insert(s.clone());
            }
        }
        if union.len() != parent_sites.len() {
            return Err(Error::invalid("cover boxes do not exhaust the parent box"));
        }
        for b in parent_sites.sites() {
            self.covering_box_index(b)?;
        }
        let dim = self.parent.dim() as i32;
        let expected = ((self.parent.side() - self.ell) / (self.rho * self.ell)
            + rat_int(1))
        .pow(dim);
        let count = rat_int(self.centers.len() as i64);
        let lower = (self.parent.side() / self.ell).pow(dim);
        let upper = (rat_int(2) * self.parent.side() / self.ell).pow(dim);
        if count != expected || count < lower || count > upper {
            return Err(Error::invalid(format!(
                "cover center count {count} violates [{lower}, {upper}] or != {expected}"
            )));
        }
        Ok(())
    }
}

/// The box in the cover that holds `b` in its `ell/10` interior
/// (lexicographically smallest qualifying center).
pub fn cover_box_for_site<'a>(cover: &'a CoverGeometry, b: &[i64]) -> Result<&'a LatticeBox> {
    cover.covering_box_index(b).map(|i| &cover.boxes[i])
}

// ---------------------------------------------------------------------------
// G2 components and buffered subsets
// ---------------------------------------------------------------------------

/// Partition cover centers into connected components of the graph whose edges
/// join centers at sup-distance exactly `2*rho*ell` or `3*rho*ell` (disjoint
/// ell-boxes whose (2*rho+1)*ell enlargements still meet).
///
/// Components are returned with lexicographically sorted members, ordered by
/// their smallest member.
pub fn g2_components(centers: &[Point], rho: Rat, ell: Rat) -> Vec<Vec<Point>> {
    let n = centers.len();
    let two = rho * ell * rat_int(2);
    let three = rho * ell * rat_int(3);
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = point_dist(&centers[i], &centers[j]);
            if dist == two || dist == three {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut buckets: HashMap<usize, Vec<Point>> = HashMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        buckets.entry(root).or_default().push(centers[i].clone());
    }
    let mut components: Vec<Vec<Point>> = buckets.into_values().collect();
    for comp in &mut components {
        comp.sort();
    }
    components.sort();
    components
}

/// A buffered subset of the parent box: the union of cover boxes around a
/// component of bad boxes, ringed by a buffer of cover boxes, together with
/// the derived buffer regions.
#[derive(Debug, Clone)]
pub struct BufferedSubsetGeometry {
    /// The buffered subset `Upsilon`.
    pub upsilon: Region,
    /// Buffer box centers (the grid-exterior ring of the enlarged component).
    pub buffer_centers: Vec<Point>,
    /// Union of buffer boxes.
    pub check: Region,
    /// Union of the `2*ell_tau` interiors of the buffer boxes relative to `Upsilon`.
    pub check_tau: Region,
    /// `Upsilon` minus the buffer boxes.
    pub hat: Region,
    /// `Upsilon` minus the buffer interiors.
    pub hat_tau: Region,
    /// `floor(ell^tau)` used for the buffer interiors.
    pub ell_tau: i64,
    /// Sup-norm diameter of `Upsilon`.
    pub diameter: i64,
    /// Whether every interior-boundary site of `Upsilon` relative to the
    /// parent box lies in some buffer-box interior. Holds for large `ell`;
    /// at desk scales it is reported, not assumed.
    pub buffer_coverage_ok: bool,
    /// Interior-boundary sites not covered by any buffer interior.
    pub uncovered_boundary: Vec<Site>,
}

/// Build the buffered subset around one G2-connected component `phi` of cover
/// centers: enlarge the component by one grid step, ring it with buffer boxes,
/// and take the union of all their sites inside the parent box.
pub fn build_buffered_subset(
    phi: &[Point],
    cover: &CoverGeometry,
    tau: f64,
) -> Result<BufferedSubsetGeometry> {
    if phi.is_empty() {
        return Err(Error::invalid("buffered subset: empty component"));
    }
    for p in phi {
        if !cover.centers.contains(p) {
            return Err(Error::invalid("buffered subset: component center not in cover"));
        }
    }
    if !(0.0 < tau && tau < 1.0) {
        return Err(Error::invalid("buffered subset: tau must lie in (0,1)"));
    }
    let step = cover.rho * cover.ell;
    let dist_to_set = |a: &Point, set: &[Point]| -> Rat {
        set.iter().map(|p| point_dist(a, p)).min().expect("nonempty set")
    };
    // Enlarged component: centers within one grid step.
    let enlarged: Vec<Point> = cover
        .centers
        .iter()
        .filter(|a| dist_to_set(a, phi) <= step)
        .cloned()
        .collect();
    // Buffer ring: grid-exterior boundary of the enlarged component.
    let buffer_centers: Vec<Point> = cover
        .centers
        .iter()
        .filter(|a| dist_to_set(a, &enlarged) == step)
        .cloned()
        .collect();
    let mut hull = enlarged.clone();
    hull.extend(buffer_centers.iter().cloned());

    let dim = cover.parent.dim();
    let parent_sites = cover.parent.sites()?;
    let collect_boxes = |centers: &[Point]| -> Result<Region> {
        let parts = centers
            .iter()
            .map(|c| LatticeBox::new(c.clone(), cover.ell)?.sites())
            .collect::<Result<Vec<_>>>()?;
        Ok(Region::union_all(dim, &parts)?.intersection(&parent_sites))
    };
    let upsilon = collect_boxes(&hull)?;
    let check = collect_boxes(&buffer_centers)?;

    let ell_f = rat_to_f64(cover.ell);
    let ell_tau = ell_f.powf(tau).floor() as i64;
    let t = rat_int(2 * ell_tau);
    let mut interiors = Vec::with_capacity(buffer_centers.len());
    for c in &buffer_centers {
        let box_sites = LatticeBox::new(c.clone(), cover.ell)?.sites()?;
        interiors.push(interior(&box_sites, &upsilon, t)?.0);
    }
    let check_tau = Region::union_all(dim, &interiors)?;
    let hat = upsilon.difference(&check);
    let hat_tau = upsilon.difference(&check_tau);

    let inner_boundary = boundaries(&upsilon, &parent_sites)?.interior;
    let uncovered_boundary: Vec<Site> = inner_boundary
        .sites()
        .iter()
        .filter(|s| !check_tau.contains(s))
        .cloned()
        .collect();
    let diameter = upsilon.diameter().unwrap_or(0);

    Ok(BufferedSubsetGeometry {
        upsilon,
        buffer_centers,
        check,
        check_tau,
        hat,
        hat_tau,
        ell_tau,
        diameter,
        buffer_coverage_ok: uncovered_boundary.is_empty(),
        uncovered_boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boxed(dim: usize, side: i64) -> LatticeBox {
        LatticeBox::centered(dim, rat_int(side)).unwrap()
    }

    #[test]
    fn box_sites_1d() {
        let r = boxed(1, 4).sites().unwrap();
        let expect: Vec<Site> = (-2..=2).map(|x| vec![x]).collect();
        assert_eq!(r.sites(), &expect[..]);
    }

    #[test]
    fn box_sites_half_integer_center() {
        let b = LatticeBox::new(vec![rat(1, 2), rat(1, 2)], rat_int(1)).unwrap();
        let r = b.sites().unwrap();
        let expect: Vec<Site> = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]];
        assert_eq!(r.sites(), &expect[..]);
    }

    #[test]
    fn cardinality_sandwich() {
        // (L-2)^d < |Lambda_L| <= (L+1)^d on a rational grid of sides and centers.
        for d in 1..=2usize {
            for num in [4i64, 7, 9, 15, 21] {
                for den in [1i64, 2, 3] {
                    let side = rat(num, den);
                    if side < rat_int(2) {
                        continue;
                    }
                    for c in [rat_int(0), rat(1, 3), rat(-5, 2)] {
                        let b = LatticeBox::new(vec![c; d], side).unwrap();
                        let n = b.sites().unwrap().len() as f64;
                        let lo = rat_to_f64(side - rat_int(2)).powi(d as i32);
                        let hi = rat_to_f64(side + rat_int(1)).powi(d as i32);
                        assert!(lo < n && n <= hi, "side {side} center {c} d {d}: {n}");
                    }
                }
            }
        }
    }

    #[test]
    fn box_count_l10_d2() {
        let r = boxed(2, 10).sites().unwrap();
        assert_eq!(r.len(), 121);
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(LatticeBox::new(vec![], rat_int(2)).is_err());
    }

    #[test]
    fn boundary_single_contact() {
        let inner = Region::segment(0, 4);
        let outer = Region::segment(0, 9);
        let b = boundaries(&inner, &outer).unwrap();
        assert_eq!(b.edges, vec![(vec![4], vec![5])]);
        assert_eq!(b.exterior.sites(), &[vec![5]]);
        assert_eq!(b.interior.sites(), &[vec![4]]);
        let hat = b.hat.unwrap();
        assert_eq!(hat[&vec![5]], vec![4]);
    }

    #[test]
    fn boundary_of_equal_regions_is_empty() {
        let r = Region::segment(0, 5);
        let b = boundaries(&r, &r).unwrap();
        assert!(b.edges.is_empty());
        assert!(b.exterior.is_empty());
        assert!(b.interior.is_empty());
    }

    #[test]
    fn boundary_box_in_box_2d() {
        let inner = boxed(2, 2).sites().unwrap();
        let outer = boxed(2, 6).sites().unwrap();
        let b = boundaries(&inner, &outer).unwrap();
        // |exterior| = |edges| for an inner box, and both bounded by s_2 * 2.
        assert_eq!(b.exterior.len(), b.edges.len());
        assert!(b.hat.is_some());
        assert!((b.edges.len() as f64) <= boundary_constant(2) * 2.0);
    }

    #[test]
    fn boundary_identity_on_grid() {
        for inner_side in [2i64, 3, 4] {
            for outer_side in [8i64, 11] {
                let inner = boxed(2, inner_side).sites().unwrap();
                let outer = boxed(2, outer_side).sites().unwrap();
                let b = boundaries(&inner, &outer).unwrap();
                assert_eq!(b.exterior.len(), b.edges.len());
                let cap = boundary_constant(2) * inner_side as f64;
                assert!(b.edges.len() as f64 <= cap);
            }
        }
    }

    #[test]
    fn interior_1d() {
        let psi = Region::segment(0, 4);
        let theta = Region::segment(0, 9);
        let (deep, shell) = interior(&psi, &theta, rat_int(1)).unwrap();
        assert_eq!(deep.sites(), &[vec![0], vec![1], vec![2], vec![3]]);
        // t-boundary = {4} (shed) plus exterior boundary {5}.
        assert_eq!(shell.sites(), &[vec![4], vec![5]]);
    }

    #[test]
    fn interior_floor_of_t() {
        let psi = Region::segment(0, 4);
        let theta = Region::segment(0, 9);
        let (a, _) = interior(&psi, &theta, rat(3, 2)).unwrap();
        let (b, _) = interior(&psi, &theta, rat_int(1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn interior_of_whole_region_is_identity() {
        let psi = Region::segment(-3, 3);
        for t in [0i64, 1, 5, 100] {
            let (deep, shell) = interior(&psi, &psi, rat_int(t)).unwrap();
            assert_eq!(deep, psi);
            assert!(shell.is_empty());
        }
    }

    #[test]
    fn cover_1d_l100_ell10() {
        let cover = suitable_cover(&boxed(1, 100), rat_int(10)).unwrap();
        // Admissible k are 6 and 7; the maximal step ratio is 4.5/6 = 3/4.
        assert_eq!(cover.rho, rat(3, 4));
        assert_eq!(cover.grid_k, 6);
        assert_eq!(cover.centers.len(), 13);
        cover.verify().unwrap();
    }

    #[test]
    fn cover_2d_center_count_is_product() {
        let cover = suitable_cover(&boxed(2, 100), rat_int(10)).unwrap();
        assert_eq!(cover.centers.len(), 13 * 13);
    }

    #[test]
    fn cover_rho_is_maximal_admissible() {
        // Independent selection: enumerate k directly and keep the best rho.
        for (l, ell) in [(100i64, 10i64), (30, 5), (60, 10), (120, 20), (36, 6)] {
            let cover = suitable_cover(&boxed(1, l), rat_int(ell)).unwrap();
            let mut best: Option<Rat> = None;
            for k in 1..=l {
                let rho = rat(l - ell, 2 * ell * k);
                if rat(3, 5) <= rho && rho <= rat(4, 5) {
                    best = Some(best.map_or(rho, |b: Rat| b.max(rho)));
                }
            }
            assert_eq!(cover.rho, best.unwrap(), "L={l} ell={ell}");
        }
    }

    #[test]
    fn cover_edge_site_box() {
        let cover = suitable_cover(&boxed(1, 100), rat_int(10)).unwrap();
        let bx = cover_box_for_site(&cover, &[50]).unwrap();
        assert_eq!(bx.center(), &[rat_int(45)]);
    }

    #[test]
    fn cover_property_exhaustive_small() {
        for d in 1..=2usize {
            let parent = boxed(d, 30);
            let cover = suitable_cover(&parent, rat_int(5)).unwrap();
            cover.verify().unwrap();
        }
    }

    #[test]
    fn covering_box_matches_brute_force() {
        // The interval-arithmetic interior test agrees with the Region-based
        // interior computation.
        let parent = boxed(2, 30);
        let cover = suitable_cover(&parent, rat_int(5)).unwrap();
        let parent_sites = parent.sites().unwrap();
        let margin = rat_int(cover.margin());
        for b in parent_sites.sites().iter().step_by(7) {
            let idx = cover.covering_box_index(b).unwrap();
            let brute = cover.boxes.iter().position(|bx| {
                let sites = bx.sites().unwrap();
                sites.contains(b)
                    && interior(&sites, &parent_sites, margin).unwrap().0.contains(b)
            });
            assert_eq!(Some(idx), brute, "site {b:?}");
        }
    }

    #[test]
    fn nesting_property_subgrids() {
        // Boxes of side (2k*rho+1)*ell centered at grid points decompose into
        // the ell-boxes of the sub-grid that they contain.
        let parent = boxed(1, 100);
        let cover = suitable_cover(&parent, rat_int(10)).unwrap();
        let step = cover.rho * cover.ell;
        for k in [1i64, 2] {
            let side = (rat_int(2 * k) * cover.rho + rat_int(1)) * cover.ell;
            let a = &cover.centers[cover.centers.len() / 2];
            let big = LatticeBox::new(a.clone(), side).unwrap();
            let mut union: HashSet<Site> = HashSet::new();
            for j in -(2 * k)..=(2 * k) {
                let c = vec![a[0] + step * rat_int(j)];
                if big.contains_point(&c) {
                    for s in LatticeBox::new(c, cover.ell).unwrap().sites().unwrap().sites() {
                        union.insert(s.clone());
                    }
                }
            }
            let expect: HashSet<Site> =
                big.sites().unwrap().sites().iter().cloned().collect();
            assert_eq!(union, expect, "k = {k}");
        }
    }

    #[test]
    fn g2_component_examples() {
        let cover = suitable_cover(&boxed(1, 100), rat_int(10)).unwrap();
        let c = &cover.centers;
        let mid = c.len() / 2;
        // Singleton.
        let comps = g2_components(&c[mid..mid + 1], cover.rho, cover.ell);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].len(), 1);
        // Two centers two grid steps apart: one E2 edge.
        let pair = vec![c[mid].clone(), c[mid + 2].clone()];
        let comps = g2_components(&pair, cover.rho, cover.ell);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].len(), 2);
        // Four grid steps apart: no edge.
        let pair = vec![c[mid].clone(), c[mid + 4].clone()];
        let comps = g2_components(&pair, cover.rho, cover.ell);
        assert_eq!(comps.len(), 2);
    }

    #[test]
    fn g2_component_diameter_bound() {
        let cover = suitable_cover(&boxed(1, 100), rat_int(10)).unwrap();
        let c = &cover.centers;
        let comp = vec![c[3].clone(), c[5].clone(), c[7].clone()];
        let comps = g2_components(&comp, cover.rho, cover.ell);
        assert_eq!(comps.len(), 1);
        let diam = point_dist(&comps[0][0], comps[0].last().unwrap());
        let bound = rat_int(3) * cover.rho * cover.ell * rat_int(comps[0].len() as i64 - 1);
        assert!(diam <= bound);
    }

    #[test]
    fn buffered_subset_singleton() {
        let cover = suitable_cover(&boxed(1, 100), rat_int(10)).unwrap();
        let mid = cover.centers.len() / 2;
        let phi = vec![cover.centers[mid].clone()];
        let buffered = build_buffered_subset(&phi, &cover, 0.9).unwrap();
        assert!(rat_int(buffered.diameter) <= rat_int(5) * cover.ell * rat_int(1));
        // Derived regions partition Upsilon.
        assert_eq!(
            buffered.hat.len() + buffered.check.len(),
            buffered.upsilon.len()
        );
        assert_eq!(
            buffered.hat_tau.len() + buffered.check_tau.len(),
            buffered.upsilon.len()
        );
        assert!(buffered.upsilon.is_connected());
    }

    #[test]
    fn buffered_subset_pair_is_connected() {
        let cover = suitable_cover(&boxed(1, 100), rat_int(10)).unwrap();
        let mid = cover.centers.len() / 2;
        // Two centers three grid steps apart (an E2 edge via 3*rho*ell).
        let phi = vec![cover.centers[mid - 2].clone(), cover.centers[mid + 1].clone()];
        let buffered = build_buffered_subset(&phi, &cover, 0.9).unwrap();
        assert!(buffered.upsilon.is_connected());
        let bound = rat_int(5) * cover.ell * rat_int(2);
        assert!(rat_int(buffered.diameter) <= bound);
    }

    #[test]
    fn buffer_coverage_brute_force_agreement() {
        // The recorded coverage flag agrees with a direct re-scan, and with
        // tau = 0.5 (2*floor(ell^tau) = 6 < ell) the coverage does hold.
        let cover = suitable_cover(&boxed(1, 100), rat_int(10)).unwrap();
        let parent_sites = cover.parent.sites().unwrap();
        let mid = cover.centers.len() / 2;
        for (tau, expect_ok) in [(0.5, true), (0.9, false)] {
            let phi = vec![cover.centers[mid].clone()];
            let buffered = build_buffered_subset(&phi, &cover, tau).unwrap();
            let inner = boundaries(&buffered.upsilon, &parent_sites).unwrap().interior;
            let covered = inner.sites().iter().all(|s| buffered.check_tau.contains(s));
            assert_eq!(covered, buffered.buffer_coverage_ok);
            assert_eq!(covered, expect_ok, "tau = {tau}");
        }
    }

    #[test]
    fn diameter_bound_over_generated_components() {
        let cover = suitable_cover(&boxed(1, 120), rat_int(20)).unwrap();
        let centers = &cover.centers;
        for take in 1..=3usize {
            let phi: Vec<Point> = centers.iter().take(take).cloned().collect();
            for comp in g2_components(&phi, cover.rho, cover.ell) {
                let buffered = build_buffered_subset(&comp, &cover, 0.9).unwrap();
                let bound = rat_int(5) * cover.ell * rat_int(comp.len() as i64);
                assert!(rat_int(buffered.diameter) <= bound);
            }
        }
    }

    #[test]
    fn decimal_parsing() {
        assert_eq!(rat_from_decimal("31.622777").unwrap(), rat(31_622_777, 1_000_000));
        assert_eq!(rat_from_decimal("-2.5").unwrap(), rat(-5, 2));
        assert_eq!(rat_from_decimal("100").unwrap(), rat_int(100));
        assert!(rat_from_decimal("abc").is_err());
    }
}
