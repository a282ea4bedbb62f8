//! Pants decompositions, shear/triangle invariants, the closed-leaf relations
//! and the modified shear-triangle coordinates (boundary, internal, gluing).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::TripleRatioIndex;
use crate::linalg::WeylChamberPoint;
use crate::scalar::Scalar;

/// Tolerance for closed-leaf residuals in float mode.
pub const CLOSED_LEAF_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Slot {
    A,
    B,
    C,
}

impl Slot {
    pub const ALL: [Slot; 3] = [Slot::A, Slot::B, Slot::C];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// One boundary slot of a pair of pants: which curve it is, and whether the
/// slot's group element is conjugate to the curve's oriented element (true)
/// or to its inverse (false).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundarySlot {
    pub curve: usize,
    pub agrees: bool,
}

/// Which of the three non-closed edges of a pair of pants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    /// [a⁻, b⁻]
    AB,
    /// [a⁻, c⁻]
    AC,
    /// [b⁻, c⁻]
    BC,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 3] = [EdgeKind::AB, EdgeKind::AC, EdgeKind::BC];
}

/// Edge of 𝒬 by pants and kind; numbered 3·pants + kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId {
    pub pants: usize,
    pub kind: EdgeKind,
}

impl EdgeId {
    pub fn number(&self) -> usize {
        3 * self.pants + self.kind as usize
    }

    pub fn from_number(k: usize) -> Self {
        Self {
            pants: k / 3,
            kind: EdgeKind::ALL[k % 3],
        }
    }
}

/// Oriented pants decomposition of a closed genus-g surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PantsDecomposition {
    pub genus: usize,
    /// Per pants, the curves in slots A, B, C (with C = A⁻¹B⁻¹).
    pub pants: Vec<[BoundarySlot; 3]>,
}

impl PantsDecomposition {
    pub fn new(genus: usize, pants: Vec<[BoundarySlot; 3]>) -> Result<Self> {
        let d = Self { genus, pants };
        d.validate()?;
        Ok(d)
    }

    /// A default decomposition: pants arranged in a cycle, with consecutive
    /// pairs (2i, 2i+1) joined by one more curve. Genus 2 gives two pants
    /// sharing all three curves.
    pub fn standard(genus: usize) -> Result<Self> {
        if genus < 2 {
            return Err(Error::Precondition("genus must be at least 2".into()));
        }
        let p = 2 * genus - 2;
        let mut edges: Vec<(usize, usize)> = Vec::new();
        if p == 2 {
            edges = vec![(0, 1), (0, 1), (0, 1)];
        } else {
            for i in 0..p {
                edges.push((i, (i + 1) % p));
            }
            for i in 0..p / 2 {
                edges.push((2 * i, 2 * i + 1));
            }
        }
        let mut slots: Vec<Vec<BoundarySlot>> = vec![Vec::new(); p];
        for (c, (u, v)) in edges.iter().enumerate() {
            slots[*u].push(BoundarySlot { curve: c, agrees: true });
            slots[*v].push(BoundarySlot { curve: c, agrees: false });
        }
        let pants = slots
            .into_iter()
            .map(|s| [s[0], s[1], s[2]])
            .collect();
        Self::new(genus, pants)
    }

    pub fn num_pants(&self) -> usize {
        self.pants.len()
    }

    pub fn num_curves(&self) -> usize {
        3 * self.genus - 3
    }

    pub fn num_edges(&self) -> usize {
        6 * self.genus - 6
    }

    pub fn num_triangles(&self) -> usize {
        4 * self.genus - 4
    }

    pub fn edges(&self) -> Vec<EdgeId> {
        (0..self.num_pants())
            .flat_map(|j| EdgeKind::ALL.into_iter().map(move |kind| EdgeId { pants: j, kind }))
            .collect()
    }

    /// The two (pants, slot, agrees) incidences of a curve.
    pub fn incidences(&self, curve: usize) -> Vec<(usize, Slot, bool)> {
        let mut out = Vec::new();
        for (j, slots) in self.pants.iter().enumerate() {
            for s in Slot::ALL {
                if slots[s.index()].curve == curve {
                    out.push((j, s, slots[s.index()].agrees));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.genus < 2 {
            return Err(Error::Precondition("genus must be at least 2".into()));
        }
        if self.pants.len() != 2 * self.genus - 2 {
            return Err(Error::Precondition(format!(
                "genus {} needs {} pants, got {}",
                self.genus,
                2 * self.genus - 2,
                self.pants.len()
            )));
        }
        for c in 0..self.num_curves() {
            let inc = self.incidences(c);
            if inc.len() != 2 {
                return Err(Error::Precondition(format!(
                    "curve {c} has {} incidences, expected 2",
                    inc.len()
                )));
            }
            if inc[0].2 == inc[1].2 {
                return Err(Error::Precondition(format!(
                    "curve {c} must be seen with opposite orientations from its two sides"
                )));
            }
        }
        if let Some(bad) = self
            .pants
            .iter()
            .flatten()
            .find(|s| s.curve >= self.num_curves())
        {
            return Err(Error::Precondition(format!("unknown curve id {}", bad.curve)));
        }
        // connectivity of the incidence graph
        let mut seen = vec![false; self.pants.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(j) = stack.pop() {
            for s in self.pants[j] {
                for (k, _, _) in self.incidences(s.curve) {
                    if !seen[k] {
                        seen[k] = true;
                        stack.push(k);
                    }
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Precondition("pants graph is disconnected".into()));
        }
        Ok(())
    }
}

/// Triangle and shear invariants of one pair of pants.
///
/// `sigma_ab[x-1]` is σ_{(x,n−x,0)}, `sigma_ac[x-1]` is σ_{(x,0,n−x)} and
/// `sigma_bc[y-1]` is σ_{(0,y,n−y)}.
#[derive(Debug, Clone, PartialEq)]
pub struct PantsInvariants<S> {
    pub n: usize,
    pub tau: BTreeMap<TripleRatioIndex, S>,
    pub tau_prime: BTreeMap<TripleRatioIndex, S>,
    pub sigma_ab: Vec<S>,
    pub sigma_ac: Vec<S>,
    pub sigma_bc: Vec<S>,
}

impl<S: Scalar> PantsInvariants<S> {
    pub fn zeros(n: usize) -> Self {
        let z: BTreeMap<_, _> = TripleRatioIndex::all(n).into_iter().map(|i| (i, S::zero())).collect();
        Self {
            n,
            tau: z.clone(),
            tau_prime: z,
            sigma_ab: vec![S::zero(); n - 1],
            sigma_ac: vec![S::zero(); n - 1],
            sigma_bc: vec![S::zero(); n - 1],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        for (name, map) in [("tau", &self.tau), ("tau_prime", &self.tau_prime)] {
            if map.len() != TripleRatioIndex::all(n).len()
                || TripleRatioIndex::all(n).iter().any(|i| !map.contains_key(i))
            {
                return Err(Error::Precondition(format!("{name} must cover every index with x+y+z = {n}")));
            }
        }
        for (name, v) in [("sigma_ab", &self.sigma_ab), ("sigma_ac", &self.sigma_ac), ("sigma_bc", &self.sigma_bc)] {
            if v.len() != n - 1 {
                return Err(Error::Precondition(format!("{name} needs {} entries, got {}", n - 1, v.len())));
            }
        }
        Ok(())
    }

    pub fn t(&self, x: usize, y: usize, z: usize) -> S {
        self.tau[&TripleRatioIndex { x, y, z }].clone()
    }

    pub fn tp(&self, x: usize, y: usize, z: usize) -> S {
        self.tau_prime[&TripleRatioIndex { x, y, z }].clone()
    }

    fn tt(&self, x: usize, y: usize, z: usize) -> S {
        self.t(x, y, z) + self.tp(x, y, z)
    }

    /// Shear σ at an index with exactly one zero coordinate.
    pub fn s(&self, x: usize, y: usize, z: usize) -> S {
        match (x, y, z) {
            (x, _, 0) => self.sigma_ab[x - 1].clone(),
            (x, 0, _) => self.sigma_ac[x - 1].clone(),
            (0, y, _) => self.sigma_bc[y - 1].clone(),
            _ => panic!("shear index ({x},{y},{z}) has no zero coordinate"),
        }
    }

    pub fn sigma(&self, kind: EdgeKind) -> &[S] {
        match kind {
            EdgeKind::AB => &self.sigma_ab,
            EdgeKind::AC => &self.sigma_ac,
            EdgeKind::BC => &self.sigma_bc,
        }
    }

    pub fn set_s(&mut self, x: usize, y: usize, z: usize, v: S) {
        match (x, y, z) {
            (x, _, 0) => self.sigma_ab[x - 1] = v,
            (x, 0, _) => self.sigma_ac[x - 1] = v,
            (0, y, _) => self.sigma_bc[y - 1] = v,
            _ => panic!("shear index ({x},{y},{z}) has no zero coordinate"),
        }
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> PantsInvariants<T> {
        PantsInvariants {
            n: self.n,
            tau: self.tau.iter().map(|(k, v)| (*k, f(v))).collect(),
            tau_prime: self.tau_prime.iter().map(|(k, v)| (*k, f(v))).collect(),
            sigma_ab: self.sigma_ab.iter().map(&f).collect(),
            sigma_ac: self.sigma_ac.iter().map(&f).collect(),
            sigma_bc: self.sigma_bc.iter().map(&f).collect(),
        }
    }
}

/// λ_k − λ_{k+1} of A, B and C for k = 1..n−1, each as the sum of the
/// invariants on the corresponding plane x = n−k, y = n−k, z = n−k.
pub fn lambda_gaps_from_invariants<S: Scalar>(inv: &PantsInvariants<S>) -> [Vec<S>; 3] {
    let n = inv.n;
    let mut ga = Vec::with_capacity(n - 1);
    let mut gb = Vec::with_capacity(n - 1);
    let mut gc = Vec::with_capacity(n - 1);
    for k in 1..n {
        let mut a = inv.s(n - k, k, 0) + inv.s(n - k, 0, k);
        let mut b = inv.s(0, n - k, k) + inv.s(k, n - k, 0);
        let mut c = inv.s(k, 0, n - k) + inv.s(0, k, n - k);
        for i in 1..k {
            a = a + inv.tt(n - k, i, k - i);
            b = b + inv.tt(k - i, n - k, i);
            c = c + inv.tt(i, k - i, n - k);
        }
        ga.push(a);
        gb.push(b);
        gc.push(c);
    }
    [ga, gb, gc]
}

/// Gaps of a slot's element read off the curve's boundary invariant.
pub fn slot_gaps<S: Scalar>(boundary: &WeylChamberPoint<S>, agrees: bool) -> Vec<S> {
    let g = boundary.gaps();
    if agrees {
        g
    } else {
        g.into_iter().rev().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    /// Pants id for the gap equations; for leaf equalities, the curve's first pants.
    pub pants_id: usize,
    pub relation: String,
    pub k: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityRow {
    pub pants_id: usize,
    pub slot: Slot,
    pub k: usize,
    pub value: f64,
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClosedLeafReport {
    /// Gap equations against supplied boundary invariants (empty if none given).
    pub equations: Vec<ResidualRow>,
    /// Closed leaf equalities, one row per curve and k.
    pub equalities: Vec<ResidualRow>,
    pub inequalities: Vec<InequalityRow>,
}

impl ClosedLeafReport {
    pub fn max_residual(&self) -> f64 {
        self.equations
            .iter()
            .chain(&self.equalities)
            .map(|r| r.residual)
            .fold(0.0, f64::max)
    }

    pub fn all_strict(&self) -> bool {
        self.inequalities.iter().all(|r| r.strict)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol && self.all_strict()
    }

    /// Flattened rows (pants_id, relation, k, residual); inequality rows carry
    /// the plane sum's shortfall below zero.
    pub fn rows(&self) -> Vec<ResidualRow> {
        let mut out: Vec<ResidualRow> = self.equations.iter().chain(&self.equalities).cloned().collect();
        out.extend(self.inequalities.iter().map(|r| ResidualRow {
            pants_id: r.pants_id,
            relation: format!("inequality_{:?}", r.slot),
            k: r.k,
            residual: if r.strict { 0.0 } else { -r.value.min(0.0) },
        }));
        out
    }

    /// First failing relation, if any.
    pub fn first_failure(&self, tol: f64) -> Option<String> {
        if let Some(r) = self.equations.iter().chain(&self.equalities).find(|r| r.residual > tol) {
            return Some(format!("{} (pants {}, k = {}, residual {:.3e})", r.relation, r.pants_id, r.k, r.residual));
        }
        self.inequalities
            .iter()
            .find(|r| !r.strict)
            .map(|r| format!("inequality {:?} (pants {}, k = {}, value {:.6})", r.slot, r.pants_id, r.k, r.value))
    }
}

fn residual<S: Scalar>(a: &S, b: &S) -> f64 {
    let d = a.clone() - b.clone();
    if d.is_zero() {
        0.0
    } else {
        d.abs().to_f64()
    }
}

/// Closed-leaf equalities across each curve and the positivity of every plane
/// sum; with `boundary` given, also the gap equations against it.
pub fn check_closed_leaf<S: Scalar>(
    decomp: &PantsDecomposition,
    inv: &[PantsInvariants<S>],
    boundary: Option<&[WeylChamberPoint<S>]>,
) -> Result<ClosedLeafReport> {
    if inv.len() != decomp.num_pants() {
        return Err(Error::DimensionMismatch {
            expected: decomp.num_pants(),
            got: inv.len(),
        });
    }
    for i in inv {
        i.validate()?;
    }
    let gaps: Vec<[Vec<S>; 3]> = inv.iter().map(lambda_gaps_from_invariants).collect();
    let mut report = ClosedLeafReport::default();
    for (j, g) in gaps.iter().enumerate() {
        for slot in Slot::ALL {
            for (k, v) in g[slot.index()].iter().enumerate() {
                report.inequalities.push(InequalityRow {
                    pants_id: j,
                    slot,
                    k: k + 1,
                    value: v.to_f64(),
                    strict: v.is_positive() && !v.negligible(&S::one()),
                });
            }
        }
    }
    for c in 0..decomp.num_curves() {
        let inc = decomp.incidences(c);
        // curve gaps seen from each side
        let side = |(j, slot, agrees): (usize, Slot, bool)| -> Vec<S> {
            let g = gaps[j][slot.index()].clone();
            if agrees {
                g
            } else {
                g.into_iter().rev().collect()
            }
        };
        let first = side(inc[0]);
        let second = side(inc[1]);
        for k in 0..first.len() {
            report.equalities.push(ResidualRow {
                pants_id: inc[0].0,
                relation: format!("leaf_equality_curve_{c}"),
                k: k + 1,
                residual: residual(&first[k], &second[k]),
            });
        }
    }
    if let Some(b) = boundary {
        if b.len() != decomp.num_curves() {
            return Err(Error::DimensionMismatch {
                expected: decomp.num_curves(),
                got: b.len(),
            });
        }
        for (j, g) in gaps.iter().enumerate() {
            for (slot, name) in Slot::ALL.into_iter().zip(["gap_A", "gap_B", "gap_C"]) {
                let bs = decomp.pants[j][slot.index()];
                let expected = slot_gaps(&b[bs.curve], bs.agrees);
                for k in 0..expected.len() {
                    report.equations.push(ResidualRow {
                        pants_id: j,
                        relation: name.into(),
                        k: k + 1,
                        residual: residual(&g[slot.index()][k], &expected[k]),
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Internal parameters of one pair of pants: every τ, τ′ with x > 1 and
/// σ_{(x,y,0)} with x > 1 (`sigma_ab[x-2]`).
#[derive(Debug, Clone, PartialEq)]
pub struct InternalParams<S> {
    pub tau: BTreeMap<TripleRatioIndex, S>,
    pub tau_prime: BTreeMap<TripleRatioIndex, S>,
    pub sigma_ab: Vec<S>,
}

impl<S: Scalar> InternalParams<S> {
    pub fn zeros(n: usize) -> Self {
        Self {
            tau: TripleRatioIndex::all(n).into_iter().map(|i| (i, S::zero())).collect(),
            tau_prime: TripleRatioIndex::all(n)
                .into_iter()
                .filter(|i| i.x > 1)
                .map(|i| (i, S::zero()))
                .collect(),
            sigma_ab: vec![S::zero(); n - 2],
        }
    }

    pub fn count(n: usize) -> usize {
        (n - 1) * (n - 2)
    }

    /// Flattened in a fixed order: τ, then τ′ (x > 1), then σ (x > 1).
    pub fn to_vec(&self) -> Vec<S> {
        self.tau
            .values()
            .chain(self.tau_prime.values())
            .chain(self.sigma_ab.iter())
            .cloned()
            .collect()
    }

    pub fn from_vec(n: usize, v: &[S]) -> Result<Self> {
        if v.len() != Self::count(n) {
            return Err(Error::DimensionMismatch {
                expected: Self::count(n),
                got: v.len(),
            });
        }
        let mut out = Self::zeros(n);
        let mut it = v.iter().cloned();
        for val in out.tau.values_mut() {
            *val = it.next().unwrap();
        }
        for val in out.tau_prime.values_mut() {
            *val = it.next().unwrap();
        }
        for val in out.sigma_ab.iter_mut() {
            *val = it.next().unwrap();
        }
        Ok(out)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let tz = TripleRatioIndex::all(n);
        if self.tau.len() != tz.len() || tz.iter().any(|i| !self.tau.contains_key(i)) {
            return Err(Error::Precondition("internal tau must cover every index".into()));
        }
        let tp: Vec<_> = tz.iter().filter(|i| i.x > 1).collect();
        if self.tau_prime.len() != tp.len() || tp.iter().any(|i| !self.tau_prime.contains_key(i)) {
            return Err(Error::Precondition("internal tau_prime must cover exactly the indices with x > 1".into()));
        }
        if self.sigma_ab.len() != n - 2 {
            return Err(Error::Precondition(format!("internal sigma needs {} entries", n - 2)));
        }
        Ok(())
    }
}

/// Modified shear-triangle coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct HitchinParams<S> {
    pub n: usize,
    pub decomposition: PantsDecomposition,
    /// One boundary invariant per curve, for the curve's own orientation.
    pub boundary: Vec<WeylChamberPoint<S>>,
    pub internal: Vec<InternalParams<S>>,
    /// n−1 opaque values per curve.
    pub gluing: Vec<Vec<S>>,
}

/// (boundary, internal, gluing) dimensions and their total.
pub fn parameter_counts(n: usize, g: usize) -> (usize, usize, usize, usize) {
    let boundary = (3 * g - 3) * (n - 1);
    let internal = (2 * g - 2) * (n - 1) * (n - 2);
    let gluing = (3 * g - 3) * (n - 1);
    (boundary, internal, gluing, boundary + internal + gluing)
}

impl<S: Scalar> HitchinParams<S> {
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        let d = &self.decomposition;
        d.validate()?;
        let (_, _, _, total) = parameter_counts(n, d.genus);
        if total != (2 * d.genus - 2) * (n * n - 1) {
            return Err(Error::Inconsistent("parameter count does not match the Hitchin dimension".into()));
        }
        if self.boundary.len() != d.num_curves() || self.gluing.len() != d.num_curves() {
            return Err(Error::DimensionMismatch {
                expected: d.num_curves(),
                got: self.boundary.len().min(self.gluing.len()),
            });
        }
        if self.internal.len() != d.num_pants() {
            return Err(Error::DimensionMismatch {
                expected: d.num_pants(),
                got: self.internal.len(),
            });
        }
        for (c, b) in self.boundary.iter().enumerate() {
            if b.entries().len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: b.entries().len() });
            }
            if !b.in_open_chamber() {
                return Err(Error::Precondition(format!("boundary invariant of curve {c} is not in the open chamber")));
            }
        }
        for g in &self.gluing {
            if g.len() != n - 1 {
                return Err(Error::DimensionMismatch { expected: n - 1, got: g.len() });
            }
        }
        for i in &self.internal {
            i.validate(n)?;
        }
        Ok(())
    }

    pub fn scalar_count(&self) -> usize {
        self.boundary.len() * (self.n - 1)
            + self.internal.iter().map(|i| i.to_vec().len()).sum::<usize>()
            + self.gluing.iter().map(|g| g.len()).sum::<usize>()
    }
}

/// Ξ: invariants satisfying the closed-leaf relations ↦ coordinates.
pub fn xi_forward<S: Scalar>(
    decomp: &PantsDecomposition,
    inv: &[PantsInvariants<S>],
    gluing: Vec<Vec<S>>,
) -> Result<HitchinParams<S>> {
    let report = check_closed_leaf(decomp, inv, None)?;
    if let Some(bad) = report.equalities.iter().find(|r| r.residual > tolerance::<S>()) {
        return Err(Error::Inconsistent(format!(
            "{} violated at k = {} (residual {:.3e})",
            bad.relation, bad.k, bad.residual
        )));
    }
    let n = inv[0].n;
    let gaps: Vec<[Vec<S>; 3]> = inv.iter().map(lambda_gaps_from_invariants).collect();
    let mut boundary = Vec::with_capacity(decomp.num_curves());
    for c in 0..decomp.num_curves() {
        let (j, slot, agrees) = decomp.incidences(c)[0];
        let mut g = gaps[j][slot.index()].clone();
        if !agrees {
            g.reverse();
        }
        let point = WeylChamberPoint::from_gaps(&g)?;
        if !point.in_open_chamber() {
            return Err(Error::Precondition(format!("boundary invariant of curve {c} is not in the open chamber")));
        }
        boundary.push(point);
    }
    let internal = inv
        .iter()
        .map(|i| InternalParams {
            tau: i.tau.clone(),
            tau_prime: i.tau_prime.iter().filter(|(k, _)| k.x > 1).map(|(k, v)| (*k, v.clone())).collect(),
            sigma_ab: i.sigma_ab[1..].to_vec(),
        })
        .collect();
    let p = HitchinParams {
        n,
        decomposition: decomp.clone(),
        boundary,
        internal,
        gluing,
    };
    p.validate()?;
    Ok(p)
}

fn tolerance<S: Scalar>() -> f64 {
    match S::BACKEND {
        crate::scalar::Backend::Exact => 0.0,
        crate::scalar::Backend::Float64 => CLOSED_LEAF_TOL,
    }
}

/// Ξ⁻¹: solve each pants' gap equations for the non-parameter invariants.
pub fn xi_inverse<S: Scalar>(p: &HitchinParams<S>) -> Result<(Vec<PantsInvariants<S>>, Vec<Vec<S>>)> {
    p.validate()?;
    let n = p.n;
    let d = &p.decomposition;
    let nn = S::from_int(n as i64);
    let mut out = Vec::with_capacity(d.num_pants());
    for (j, internal) in p.internal.iter().enumerate() {
        let gap = |slot: Slot| -> Vec<S> {
            let bs = d.pants[j][slot.index()];
            slot_gaps(&p.boundary[bs.curve], bs.agrees)
        };
        let (ga, gb, gc) = (gap(Slot::A), gap(Slot::B), gap(Slot::C));
        // 1-based accessors
        let ga = |k: usize| ga[k - 1].clone();
        let gb = |k: usize| gb[k - 1].clone();
        let gc = |k: usize| gc[k - 1].clone();
        let kk = |k: usize| S::from_int(k as i64);

        let mut inv = PantsInvariants::zeros(n);
        inv.tau = internal.tau.clone();
        for (k, v) in &internal.tau_prime {
            inv.tau_prime.insert(*k, v.clone());
        }
        for x in 2..n {
            inv.set_s(x, n - x, 0, internal.sigma_ab[x - 2].clone());
        }

        // Σ_k σ_{(n−k,k,0)} from the weighted sum of all three gap equations
        let mut bottom = S::zero();
        let mut left = S::zero();
        for k in 1..n {
            let nk = kk(n - k);
            bottom = bottom + nk.clone() * ga(k) + nk.clone() * gb(k) - kk(k) * gc(k);
            left = left + nk.clone() * ga(k) - kk(k) * gb(k) + nk * gc(k);
        }
        let mut s1 = bottom / nn.clone();
        for x in 2..n {
            s1 = s1 - inv.s(x, n - x, 0);
        }
        inv.set_s(1, n - 1, 0, s1);

        // σ_{(m,0,n−m)} for m > 1 from the A-equation at k = n−m
        for m in 2..n {
            let k = n - m;
            let mut v = ga(k) - inv.s(m, k, 0);
            for i in 1..k {
                v = v - inv.tt(m, i, k - i);
            }
            inv.set_s(m, 0, k, v);
        }

        // σ_{(1,0,n−1)} from the weighted sum giving Σ_k σ_{(k,0,n−k)}
        let mut s = left / nn.clone();
        for m in 2..n {
            s = s - inv.s(m, 0, n - m);
        }
        inv.set_s(1, 0, n - 1, s);

        for l in 1..n {
            // σ_{(0,n−l,l)} from the B-equation at k = l
            let mut v = gb(l) - inv.s(l, n - l, 0);
            for i in 1..l {
                v = v - inv.tt(l - i, n - l, i);
            }
            inv.set_s(0, n - l, l, v);
            // τ′_{(1,n−l−1,l)} from the C-equation at k = n−l
            if l + 2 <= n {
                let k = n - l;
                let mut w = gc(k) - inv.s(k, 0, l) - inv.s(0, k, l);
                for i in 2..k {
                    w = w - inv.tt(i, k - i, l);
                }
                w = w - inv.t(1, k - 1, l);
                inv.tau_prime.insert(TripleRatioIndex { x: 1, y: k - 1, z: l }, w);
            }
        }
        out.push(inv);
    }
    Ok((out, p.gluing.clone()))
}
