//! The degeneration functionals K and L, the counting bounds, the entropy
//! upper bound, and the internal-sequence scan built on them.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flags::{reconstruct_triple, recover_fourth_line, ShearAssignment, TripleRatioAssignment};
use crate::hyperbolic::{CirclePoint, FuchsianSurface};
use crate::invariants::{cross_ratio_flags, triple_ratio, TripleRatioIndex};
use crate::linalg::{Flag, Subspace, WeylChamberPoint};
use crate::params::{xi_inverse, EdgeId, EdgeKind, HitchinParams, PantsDecomposition, PantsInvariants};
use crate::scalar::{Extended, Scalar};

/// Flags at the six vertices around one pair of pants: the triangle
/// (a⁻, c⁻, b⁻) and the far vertex of the neighbouring triangle across each of
/// its edges, namely A·c⁻ (across {a⁻,b⁻}), C·b⁻ (across {a⁻,c⁻}) and B·a⁻
/// (across {b⁻,c⁻}).
#[derive(Debug, Clone)]
pub struct PantsFlags<S> {
    pub a: Flag<S>,
    pub b: Flag<S>,
    pub c: Flag<S>,
    pub across_ab: Flag<S>,
    pub across_ac: Flag<S>,
    pub across_bc: Flag<S>,
}

impl<S: Scalar> PantsFlags<S> {
    /// (edge end, edge end, opposite vertex, opposite vertex) for one edge.
    pub fn quadruple(&self, kind: EdgeKind) -> [&Flag<S>; 4] {
        match kind {
            EdgeKind::AB => [&self.a, &self.b, &self.c, &self.across_ab],
            EdgeKind::AC => [&self.a, &self.c, &self.b, &self.across_ac],
            EdgeKind::BC => [&self.b, &self.c, &self.a, &self.across_bc],
        }
    }
}

fn minus_cross<S: Scalar>(flags: &[Flag<S>], quad: [usize; 4], base: &[(usize, usize)]) -> Result<S> {
    match cross_ratio_flags(flags, quad, base)? {
        Extended::Finite(v) if !v.is_zero() => Ok(-v),
        _ => Err(Error::Degenerate("shear cross ratio is zero or infinite".into())),
    }
}

/// Triangle and shear invariants of a pants configuration before taking
/// logarithms: the returned fields hold e^τ, e^τ′ and e^σ.
pub fn pants_ratios<S: Scalar>(f: &PantsFlags<S>) -> Result<PantsInvariants<S>> {
    let n = f.a.dim();
    let mut out = PantsInvariants::zeros(n);
    for idx in TripleRatioIndex::all(n) {
        let TripleRatioIndex { x, y, z } = idx;
        out.tau.insert(idx, triple_ratio(&f.a, &f.c, &f.b, TripleRatioIndex { x, y: z, z: y })?);
        out.tau_prime.insert(idx, triple_ratio(&f.a, &f.b, &f.across_ab, idx)?);
    }
    // indices into the list below: a, b, c, A·c, C·b, B·a
    let list = [
        f.a.clone(),
        f.b.clone(),
        f.c.clone(),
        f.across_ab.clone(),
        f.across_ac.clone(),
        f.across_bc.clone(),
    ];
    for k in 1..n {
        let (x, y) = (k, n - k);
        out.sigma_ab[k - 1] = minus_cross(&list, [0, 2, 3, 1], &[(0, x - 1), (1, y - 1)])?;
        let (x, z) = (k, n - k);
        out.sigma_ac[k - 1] = minus_cross(&list, [2, 1, 4, 0], &[(2, z - 1), (0, x - 1)])?;
        let (y, z) = (k, n - k);
        out.sigma_bc[k - 1] = minus_cross(&list, [1, 0, 5, 2], &[(1, y - 1), (2, z - 1)])?;
    }
    Ok(out)
}

/// Rebuild a pants configuration (up to projective equivalence) from the
/// exponentiated invariants returned by [`pants_ratios`]. The normalization
/// puts a⁻ at the standard flag, b⁻ at the reversed one and c⁻ through (1,…,1).
pub fn pants_flags_from_ratios<S: Scalar>(r: &PantsInvariants<S>) -> Result<PantsFlags<S>> {
    let n = r.n;
    let a = Flag::<S>::standard(n);
    let b = Flag::<S>::reversed_standard(n);
    let ones = Subspace::line(&vec![S::one(); n])?;
    let tau = |x, y, z| r.tau[&TripleRatioIndex { x, y, z }].clone();
    let tau_p = |x, y, z| r.tau_prime[&TripleRatioIndex { x, y, z }].clone();

    // T_{x,y,z}(a, c, b) = e^{τ(x,z,y)}
    let c = reconstruct_triple(&a, &b, &ones, &TripleRatioAssignment::from_fn(n, |i| tau(i.x, i.z, i.y))?)?;

    let shear = |v: Vec<S>| ShearAssignment { values: v };
    // T_{x,y,z}(a, b, A·c) = T_{y,z,x}(b, A·c, a)
    let line = recover_fourth_line(&a, &b, &ones, &shear(r.sigma_ab.clone()))?;
    let across_ab = reconstruct_triple(&b, &a, &line, &TripleRatioAssignment::from_fn(n, |i| tau_p(i.z, i.x, i.y))?)?;

    // the shear on [a,c] is read from c's side: the x'-th value is σ_{(n−x',0,x')}
    let ac_values: Vec<S> = (1..n).map(|k| r.sigma_ac[n - k - 1].clone()).collect();
    let line = recover_fourth_line(&c, &a, &b.line(), &shear(ac_values))?;
    let across_ac = reconstruct_triple(&a, &c, &line, &TripleRatioAssignment::from_fn(n, |i| tau_p(i.x, i.y, i.z))?)?;

    // T_{x,y,z}(B·a, b, c) = T_{z,x,y}(c, B·a, b)
    let line = recover_fourth_line(&b, &c, &a.line(), &shear(r.sigma_bc.clone()))?;
    let across_bc = reconstruct_triple(&c, &b, &line, &TripleRatioAssignment::from_fn(n, |i| tau_p(i.y, i.z, i.x))?)?;

    Ok(PantsFlags {
        a,
        b,
        c,
        across_ab,
        across_ac,
        across_bc,
    })
}

/// Logarithmic invariants of a configuration; fails if it is not positive.
pub fn invariants_from_flags(f: &PantsFlags<f64>) -> Result<PantsInvariants<f64>> {
    let r = pants_ratios(f)?;
    let bad = r
        .tau
        .values()
        .chain(r.tau_prime.values())
        .chain(&r.sigma_ab)
        .chain(&r.sigma_ac)
        .chain(&r.sigma_bc)
        .any(|v| !(*v > 0.0));
    if bad {
        return Err(Error::Precondition("configuration is not positive".into()));
    }
    Ok(r.map(|v| v.ln()))
}

/// Veronese flags at the six vertices of pants `j` of a Fuchsian surface.
pub fn fuchsian_pants_flags(surface: &FuchsianSurface, j: usize, n: usize) -> Result<PantsFlags<f64>> {
    let [a, b, c] = surface.pants_elements(j)?;
    let (am, bm, cm) = (a.fixed_points()?.0, b.fixed_points()?.0, c.fixed_points()?.0);
    let pts: [CirclePoint; 6] = [am, bm, cm, a.apply(&cm), c.apply(&bm), b.apply(&am)];
    let fl: Vec<Flag<f64>> = pts.iter().map(|p| surface.flag(p, n)).collect::<Result<_>>()?;
    let mut it = fl.into_iter();
    Ok(PantsFlags {
        a: it.next().unwrap(),
        b: it.next().unwrap(),
        c: it.next().unwrap(),
        across_ab: it.next().unwrap(),
        across_ac: it.next().unwrap(),
        across_bc: it.next().unwrap(),
    })
}

/// Invariants of every pants of the Fuchsian surface in dimension n.
pub fn fuchsian_invariants(surface: &FuchsianSurface, n: usize) -> Result<Vec<PantsInvariants<f64>>> {
    (0..2).map(|j| invariants_from_flags(&fuchsian_pants_flags(surface, j, n)?)).collect()
}

/// Boundary invariants of the Fuchsian surface in dimension n: every gap of
/// the symmetric power equals the curve length.
pub fn fuchsian_boundary(surface: &FuchsianSurface, n: usize) -> Result<Vec<WeylChamberPoint<f64>>> {
    surface
        .spec
        .lengths
        .iter()
        .map(|l| WeylChamberPoint::from_gaps(&vec![*l; n - 1]))
        .collect()
}

/// 𝓜_p(a,b,c) as base multiplicity lists over indices (a, b, c).
fn m_collection(p: usize, n: usize, a: usize, b: usize, c: usize) -> Vec<Vec<(usize, usize)>> {
    (1..=p).map(|r| vec![(a, p - r), (b, n - p - 1), (c, r - 1)]).collect()
}

fn log_cross<S: Scalar>(flags: &[Flag<S>], quad: [usize; 4], base: &[(usize, usize)]) -> Result<f64> {
    match cross_ratio_flags(flags, quad, base)? {
        Extended::Finite(v) if v.is_positive() => Ok(v.ln()),
        Extended::Finite(v) => Err(Error::Degenerate(format!(
            "edge cross ratio {} is not positive",
            v.to_f64()
        ))),
        Extended::Infinity => Err(Error::Degenerate("edge cross ratio is infinite".into())),
    }
}

/// Per-p terms and the two averages behind K[a,b].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeK {
    pub k_prime: Vec<f64>,
    pub k_double_prime: Vec<f64>,
    pub value: f64,
}

/// K[a,b] for the edge {a,b} with c and d the far vertices of its two
/// triangles.
pub fn k_edge_detail<S: Scalar>(a: &Flag<S>, b: &Flag<S>, c: &Flag<S>, d: &Flag<S>) -> Result<EdgeK> {
    let n = a.dim();
    let flags = [a.clone(), b.clone(), c.clone(), d.clone()];
    let (ia, ib, ic, id) = (0, 1, 2, 3);
    let mut k1 = Vec::with_capacity(n);
    let mut k2 = Vec::with_capacity(n);
    for p in 0..n {
        // 𝓜_0 is empty, which gives the p = 0 and p = n−1 cases
        let mut first = m_collection(p, n, ia, ib, ic);
        first.extend(m_collection(n - p - 1, n, ib, ia, id));
        let mut second = m_collection(p, n, ia, ib, id);
        second.extend(m_collection(n - p - 1, n, ib, ia, ic));
        let best = |bases: &[Vec<(usize, usize)>], quad: [usize; 4]| -> Result<f64> {
            let mut m = f64::NEG_INFINITY;
            for base in bases {
                m = m.max(log_cross(&flags, quad, base)?);
            }
            Ok(m)
        };
        k1.push(best(&first, [id, ia, ic, ib])?);
        k2.push(best(&second, [ib, id, ia, ic])?);
    }
    let avg = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let value = avg(&k1).min(avg(&k2));
    Ok(EdgeK {
        k_prime: k1,
        k_double_prime: k2,
        value,
    })
}

pub fn k_edge<S: Scalar>(a: &Flag<S>, b: &Flag<S>, c: &Flag<S>, d: &Flag<S>) -> Result<f64> {
    Ok(k_edge_detail(a, b, c, d)?.value)
}

/// K over every edge of 𝒬, with the per-edge values keyed by edge number.
pub fn compute_k(decomp: &PantsDecomposition, inv: &[PantsInvariants<f64>]) -> Result<(f64, BTreeMap<usize, f64>)> {
    if inv.len() != decomp.num_pants() {
        return Err(Error::DimensionMismatch {
            expected: decomp.num_pants(),
            got: inv.len(),
        });
    }
    let mut per_edge = BTreeMap::new();
    for (j, i) in inv.iter().enumerate() {
        i.validate()?;
        let flags = pants_flags_from_ratios(&i.map(|v| v.exp()))?;
        for kind in EdgeKind::ALL {
            let [a, b, c, d] = flags.quadruple(kind);
            per_edge.insert(EdgeId { pants: j, kind }.number(), k_edge(a, b, c, d)?);
        }
    }
    let k = per_edge.values().copied().fold(f64::INFINITY, f64::min);
    Ok((k, per_edge))
}

/// L = min over curves of (λ₁ − λₙ)/n.
pub fn compute_l<S: Scalar>(boundary: &[WeylChamberPoint<S>]) -> Result<f64> {
    if boundary.is_empty() {
        return Err(Error::Precondition("no boundary invariants".into()));
    }
    let mut best = f64::INFINITY;
    for b in boundary {
        if !b.in_open_chamber() {
            return Err(Error::Precondition("boundary invariant has a non-positive gap".into()));
        }
        let n = b.entries().len();
        best = best.min(b.spread().to_f64() / n as f64);
    }
    Ok(best)
}

/// r·K/11 + s·L/11.
pub fn length_lower_bound(r: usize, s: usize, k: f64, l: f64) -> Result<f64> {
    if r == 0 {
        return Err(Error::Precondition("the bound needs at least one binodal edge".into()));
    }
    if !(k > 0.0) || !(l > 0.0) {
        return Err(Error::Precondition("K and L must be positive".into()));
    }
    Ok(r as f64 * k / 11.0 + s as f64 * l / 11.0)
}

fn floor_rational(x: &BigRational) -> BigInt {
    x.floor().to_integer()
}

fn binomial(n: &BigInt, k: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - BigInt::from(i)) / BigInt::from(i + 1);
    }
    acc
}

/// (6g−6)·⌊T/L⌋ + 1.
pub fn count_bound_gamma0(t: &BigRational, l: &BigRational, genus: u64) -> Result<BigInt> {
    if !t.is_positive() || !l.is_positive() || genus < 2 {
        return Err(Error::Precondition("need T, L > 0 and genus ≥ 2".into()));
    }
    Ok(BigInt::from(6 * genus - 6) * floor_rational(&(t / l)) + BigInt::one())
}

/// Σ_{a=1}^{⌊11T/K⌋} (120g−120)^a / a · C(⌊(11T − aK)/L⌋ + a, a), exactly.
pub fn count_bound_gamma1(t: &BigRational, k: &BigRational, l: &BigRational, genus: u64) -> Result<BigRational> {
    if !t.is_positive() || !k.is_positive() || !l.is_positive() || genus < 2 {
        return Err(Error::Precondition("need T, K, L > 0 and genus ≥ 2".into()));
    }
    let eleven_t = t * BigRational::from_integer(BigInt::from(11));
    let top = floor_rational(&(&eleven_t / k));
    let top = top
        .to_u64()
        .ok_or_else(|| Error::Precondition("11T/K is too large to enumerate".into()))?;
    let base = BigInt::from(120 * genus - 120);
    let mut total = BigRational::zero();
    let mut power = BigInt::one();
    for a in 1..=top {
        power *= &base;
        let ar = BigRational::from_integer(BigInt::from(a));
        let free = floor_rational(&((&eleven_t - &ar * k) / l));
        let choose = binomial(&(free + BigInt::from(a)), a);
        total += BigRational::new(&power * choose, BigInt::from(a));
    }
    Ok(total)
}

/// Exponential growth rate of C(m·T + q·T, q·T) in T, with m = (1−qK)/L.
pub fn binomial_growth(q: f64, k: f64, l: f64) -> f64 {
    let m = ((1.0 - q * k) / l).max(0.0);
    let xlogx = |x: f64| if x <= 0.0 { 0.0 } else { x * x.ln() };
    xlogx(m + q) - xlogx(m) - xlogx(q)
}

fn golden_max(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = (lo + hi) / 2.0;
    (x, f(x))
}

/// F(K, L) = max over q ∈ [0, 1/K] of the binomial growth rate.
pub fn growth_maximum(k: f64, l: f64) -> f64 {
    let f = |q: f64| binomial_growth(q, k, l);
    let end = 1.0 / k;
    let mut best = f(0.0).max(f(end));
    let (_, v) = golden_max(&f, 0.0, end, 1e-10 * end.max(1e-300));
    best = best.max(v);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..10 {
        let u: f64 = rng.gen();
        let w: f64 = rng.gen();
        let (lo, hi) = (u.min(w) * end, u.max(w) * end);
        if hi > lo {
            best = best.max(golden_max(&f, lo, hi, 1e-10 * end).1);
        }
    }
    best
}

/// 11·F(K,L) + 11·ln(120g−120)/K.
pub fn entropy_upper_bound(k: f64, l: f64, genus: u64) -> Result<f64> {
    if !(k > 0.0) || !(l > 0.0) || genus < 2 {
        return Err(Error::Precondition("need K, L > 0 and genus ≥ 2".into()));
    }
    Ok(11.0 * growth_maximum(k, l) + 11.0 * ((120 * genus - 120) as f64).ln() / k)
}

/// One row of the scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerationReport {
    pub step: usize,
    pub n: usize,
    pub genus: usize,
    pub k: Option<f64>,
    pub l: Option<f64>,
    pub entropy_bound: Option<f64>,
    pub min_edge_id: Option<usize>,
    pub per_edge: BTreeMap<usize, f64>,
    pub flags_ok: bool,
    pub error: Option<String>,
}

fn report_for(step: usize, p: &HitchinParams<f64>) -> DegenerationReport {
    let mut row = DegenerationReport {
        step,
        n: p.n,
        genus: p.decomposition.genus,
        k: None,
        l: None,
        entropy_bound: None,
        min_edge_id: None,
        per_edge: BTreeMap::new(),
        flags_ok: false,
        error: None,
    };
    let run = || -> Result<(f64, BTreeMap<usize, f64>, f64, f64)> {
        let (inv, _) = xi_inverse(p)?;
        let (k, per_edge) = compute_k(&p.decomposition, &inv)?;
        let l = compute_l(&p.boundary)?;
        let h = entropy_upper_bound(k, l, p.decomposition.genus as u64)?;
        Ok((k, per_edge, l, h))
    };
    match run() {
        Ok((k, per_edge, l, h)) => {
            row.min_edge_id = per_edge
                .iter()
                .min_by(|x, y| x.1.total_cmp(y.1))
                .map(|(e, _)| *e);
            row.k = Some(k);
            row.l = Some(l);
            row.entropy_bound = Some(h);
            row.per_edge = per_edge;
            row.flags_ok = true;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Push base + i·direction (internal coordinates only, one vector per pants
/// in [`crate::params::InternalParams::to_vec`] order) through the K/L/entropy
/// pipeline for i = 0..=steps.
pub fn internal_sequence_scan(
    base: &HitchinParams<f64>,
    direction: &[Vec<f64>],
    steps: usize,
) -> Result<Vec<DegenerationReport>> {
    base.validate()?;
    if direction.len() != base.internal.len() {
        return Err(Error::DimensionMismatch {
            expected: base.internal.len(),
            got: direction.len(),
        });
    }
    let n = base.n;
    let start: Vec<Vec<f64>> = base.internal.iter().map(|i| i.to_vec()).collect();
    for d in direction {
        if d.len() != crate::params::InternalParams::<f64>::count(n) {
            return Err(Error::DimensionMismatch {
                expected: crate::params::InternalParams::<f64>::count(n),
                got: d.len(),
            });
        }
    }
    let mut rows = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        let mut p = base.clone();
        for (j, (s, d)) in start.iter().zip(direction).enumerate() {
            let v: Vec<f64> = s.iter().zip(d).map(|(x, y)| x + step as f64 * y).collect();
            p.internal[j] = crate::params::InternalParams::from_vec(n, &v)?;
        }
        rows.push(report_for(step, &p));
    }
    Ok(rows)
}

/// The documented ray: every τ of every pants moves by 1 per step (for n ≥ 3),
/// all other coordinates fixed.
pub fn triangle_ray(n: usize, pants: usize) -> Vec<Vec<f64>> {
    let tau_count = TripleRatioIndex::all(n).len();
    let total = crate::params::InternalParams::<f64>::count(n);
    (0..pants)
        .map(|_| (0..total).map(|i| if i < tau_count { 1.0 } else { 0.0 }).collect())
        .collect()
}

impl<S: Scalar> PantsFlags<S> {
    pub fn all(&self) -> [&Flag<S>; 6] {
        [&self.a, &self.b, &self.c, &self.across_ab, &self.across_ac, &self.across_bc]
    }
}

/// Exact rational value of a finite float.
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::Precondition(format!("{x} is not finite")))
}
