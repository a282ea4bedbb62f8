//! Building flag configurations: the Veronese curve, triangle reconstruction
//! from triple ratios, and the fourth line of a quadrilateral from shears.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::{cross_ratio_vectors, TripleRatioIndex};
use crate::linalg::{kernel, rank, unit, wedge_det_checked, Flag, Matrix, Subspace, Vector};
use crate::scalar::{Extended, Scalar};

/// Point [s:t] of the projective line, acted on by 2×2 matrices as column vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectivePoint<S> {
    pub s: S,
    pub t: S,
}

impl<S: Scalar> ProjectivePoint<S> {
    pub fn new(s: S, t: S) -> Result<Self> {
        if s.is_zero() && t.is_zero() {
            return Err(Error::Degenerate("[0:0] is not a point".into()));
        }
        Ok(Self { s, t })
    }

    /// The point [x:1]; `None` gives [1:0].
    pub fn affine(x: Option<S>) -> Self {
        match x {
            Some(x) => Self { s: x, t: S::one() },
            None => Self {
                s: S::one(),
                t: S::zero(),
            },
        }
    }

    pub fn apply(&self, m: &Matrix<S>) -> Self {
        let v = m.apply(&[self.s.clone(), self.t.clone()]);
        Self {
            s: v[0].clone(),
            t: v[1].clone(),
        }
    }

    pub fn vector(&self) -> Vector<S> {
        vec![self.s.clone(), self.t.clone()]
    }
}

fn poly_mul<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    let mut out = vec![S::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j].clone() + x.clone() * y.clone();
        }
    }
    out
}

fn poly_pow<S: Scalar>(p: &[S], k: usize) -> Vec<S> {
    (0..k).fold(vec![S::one()], |acc, _| poly_mul(&acc, p))
}

/// Coordinates ν_k(v) = v_0^{n−1−k} v_1^k as polynomials: returns, for each k,
/// the coefficients of ν_k(p + u·q) in powers of u.
fn veronese_expansion<S: Scalar>(p: &[S], q: &[S], n: usize) -> Vec<Vec<S>> {
    let first = [p[0].clone(), q[0].clone()];
    let second = [p[1].clone(), q[1].clone()];
    (0..n)
        .map(|k| {
            let mut c = poly_mul(&poly_pow(&first, n - 1 - k), &poly_pow(&second, k));
            c.resize(n, S::zero());
            c
        })
        .collect()
}

/// Veronese image ν(v) ∈ ℝⁿ of a vector of ℝ².
pub fn veronese_vector<S: Scalar>(v: &[S], n: usize) -> Vector<S> {
    (0..n)
        .map(|k| {
            let mut acc = S::one();
            for _ in 0..n - 1 - k {
                acc = acc * v[0].clone();
            }
            for _ in 0..k {
                acc = acc * v[1].clone();
            }
            acc
        })
        .collect()
}

/// The irreducible n-dimensional representation: ν(m·v) = S(m)·ν(v).
pub fn sym_power<S: Scalar>(m: &Matrix<S>, n: usize) -> Result<Matrix<S>> {
    if m.nrows() != 2 || m.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: m.nrows(),
        });
    }
    if n < 2 {
        return Err(Error::Precondition("n must be at least 2".into()));
    }
    let (a, b, c, d) = (
        m.get(0, 0).clone(),
        m.get(0, 1).clone(),
        m.get(1, 0).clone(),
        m.get(1, 1).clone(),
    );
    // row k: coefficients of (a v0 + b v1)^{n−1−k} (c v0 + d v1)^k in powers of v1
    let mut out = Matrix::zeros(n, n);
    for k in 0..n {
        let row = poly_mul(&poly_pow(&[a.clone(), b.clone()], n - 1 - k), &poly_pow(&[c.clone(), d.clone()], k));
        for (j, v) in row.into_iter().enumerate() {
            out.set(k, j, v);
        }
    }
    Ok(out)
}

/// Osculating flag of the rational normal curve at p.
pub fn veronese_flag<S: Scalar>(p: &ProjectivePoint<S>, n: usize) -> Result<Flag<S>> {
    if n < 2 {
        return Err(Error::Precondition("n must be at least 2".into()));
    }
    let v = p.vector();
    // any direction off the point gives the same flag; the perpendicular one
    // keeps the float basis well conditioned
    let w = vec![-v[1].clone(), v[0].clone()];
    let coeffs = veronese_expansion(&v, &w, n);
    // j-th basis vector: coefficient of u^j in every coordinate
    let basis: Vec<Vector<S>> = (0..n)
        .map(|j| (0..n).map(|k| coeffs[k][j].clone()).collect())
        .collect();
    Flag::from_basis(basis)
}

/// Triple ratios prescribed on every index of 𝒜.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleRatioAssignment<S> {
    n: usize,
    values: BTreeMap<TripleRatioIndex, S>,
}

impl<S: Scalar> TripleRatioAssignment<S> {
    pub fn new(n: usize, values: BTreeMap<TripleRatioIndex, S>) -> Result<Self> {
        for idx in TripleRatioIndex::all(n) {
            match values.get(&idx) {
                None => return Err(Error::InvalidIndex(vec![idx.x, idx.y, idx.z])),
                Some(v) if v.is_zero() => {
                    return Err(Error::Precondition(format!("triple ratio at {idx:?} is zero")))
                }
                _ => {}
            }
        }
        if values.len() != TripleRatioIndex::all(n).len() {
            return Err(Error::Precondition("assignment has indices outside the admissible set".into()));
        }
        Ok(Self { n, values })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(TripleRatioIndex) -> S) -> Result<Self> {
        Self::new(n, TripleRatioIndex::all(n).into_iter().map(|i| (i, f(i))).collect())
    }

    /// Every ratio taken from an existing triple.
    pub fn extract(f: &Flag<S>, g: &Flag<S>, h: &Flag<S>) -> Result<Self> {
        let n = f.dim();
        let mut values = BTreeMap::new();
        for idx in TripleRatioIndex::all(n) {
            values.insert(idx, crate::invariants::triple_ratio(f, g, h, idx)?);
        }
        Self::new(n, values)
    }

    pub fn get(&self, idx: TripleRatioIndex) -> &S {
        &self.values[&idx]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &BTreeMap<TripleRatioIndex, S> {
        &self.values
    }
}

fn concat<S: Scalar>(parts: &[&[Vector<S>]]) -> Vec<Vector<S>> {
    parts.iter().flat_map(|p| p.iter().cloned()).collect()
}

fn nonzero_det<S: Scalar>(cols: Vec<Vector<S>>, what: &str) -> Result<S> {
    let (d, zero) = wedge_det_checked(&cols)?;
    if zero {
        return Err(Error::Degenerate(format!("{what} vanishes")));
    }
    Ok(d)
}

/// Linear functional v ↦ det(cols[..pos] , v, cols[pos..]) as a row vector.
fn det_functional<S: Scalar>(before: &[Vector<S>], after: &[Vector<S>], n: usize) -> Result<Vector<S>> {
    (0..n)
        .map(|i| {
            let mut cols = before.to_vec();
            cols.push(unit(n, i));
            cols.extend_from_slice(after);
            Ok(wedge_det_checked(&cols)?.0)
        })
        .collect()
}

/// Scale so the first nonzero coordinate is 1.
fn normalize_leading<S: Scalar>(v: Vector<S>) -> Vector<S> {
    let scale = crate::scalar::max_abs(&v);
    match v.iter().find(|x| !x.negligible(&scale)) {
        Some(lead) => {
            let lead = lead.clone();
            v.into_iter().map(|x| x / lead.clone()).collect()
        }
        None => v,
    }
}

/// The flag G with G^(1) = `g_line` and T_{x,y,z}(F, G, H) as prescribed.
///
/// G is built one dimension at a time: with G^(y) known, each index (x, y, z)
/// gives a linear condition on the next basis vector, and their common kernel
/// is G^(y+1).
pub fn reconstruct_triple<S: Scalar>(
    f: &Flag<S>,
    h: &Flag<S>,
    g_line: &Subspace<S>,
    ratios: &TripleRatioAssignment<S>,
) -> Result<Flag<S>> {
    let n = f.dim();
    if h.dim() != n || g_line.ambient() != n || ratios.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if h.dim() != n { h.dim() } else { ratios.n() },
        });
    }
    let g1 = normalize_leading(g_line.representative()?.clone());
    for (part, name) in [(f, "F"), (h, "H")] {
        let mut cols = part.prefix(n - 1).to_vec();
        cols.push(g1.clone());
        nonzero_det(cols, &format!("G^(1) ∧ {name}^(n-1)"))?;
    }
    let mut g: Vec<Vector<S>> = vec![g1];
    for y0 in 1..=n.saturating_sub(2) {
        let mut rows = Vec::new();
        for x in 1..=n - y0 - 1 {
            let z = n - x - y0;
            let t = ratios.get(TripleRatioIndex { x, y: y0, z }).clone();
            let fp = |k: usize| f.prefix(k);
            let hp = |k: usize| h.prefix(k);
            let gp = |k: usize| &g[..k];
            let p1 = nonzero_det(concat(&[fp(x), gp(y0 - 1), hp(z + 1)]), "F^x G^(y-1) H^(z+1)")?;
            let p2 = nonzero_det(concat(&[fp(x + 1), gp(y0), hp(z - 1)]), "F^(x+1) G^y H^(z-1)")?;
            let q2 = nonzero_det(concat(&[fp(x - 1), gp(y0), hp(z + 1)]), "F^(x-1) G^y H^(z+1)")?;
            let q3 = nonzero_det(concat(&[fp(x + 1), gp(y0 - 1), hp(z)]), "F^(x+1) G^(y-1) H^z")?;
            let d1 = det_functional(&concat(&[fp(x), gp(y0)]), hp(z - 1), n)?;
            let n3 = det_functional(&concat(&[fp(x - 1), gp(y0)]), hp(z), n)?;
            let a = t * q2 * q3;
            let b = p1 * p2;
            rows.push(
                d1.iter()
                    .zip(&n3)
                    .map(|(u, w)| a.clone() * u.clone() - b.clone() * w.clone())
                    .collect::<Vec<S>>(),
            );
        }
        let ker = Subspace::span(n, &kernel(&rows, n))?;
        if ker.dim() != y0 + 1 {
            return Err(Error::Degenerate(format!(
                "G^({}) would have dimension {}",
                y0 + 1,
                ker.dim()
            )));
        }
        let next = ker
            .basis()
            .iter()
            .find(|v| {
                let mut t = g.clone();
                t.push((*v).clone());
                rank(&t) == t.len()
            })
            .cloned()
            .ok_or_else(|| Error::Degenerate("kernel does not extend G".into()))?;
        g.push(normalize_leading(next));
    }
    Flag::from_basis(g)
}

/// −(a, c, d, b)_M values e^σ for one edge, indexed by x = 1..n−1 with
/// M = a^(x−1) + b^(n−x−1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShearAssignment<S> {
    pub values: Vec<S>,
}

impl ShearAssignment<f64> {
    /// From shear invariants σ (logarithms).
    pub fn from_logs(sigma: &[f64]) -> Self {
        Self {
            values: sigma.iter().map(|s| s.exp()).collect(),
        }
    }
}

/// The line D with −(A, C, D, B)_{A^(x−1)+B^(n−x−1)} = e^{σ_x} for every x.
pub fn recover_fourth_line<S: Scalar>(
    a: &Flag<S>,
    b: &Flag<S>,
    c_line: &Subspace<S>,
    shears: &ShearAssignment<S>,
) -> Result<Subspace<S>> {
    let n = a.dim();
    if shears.values.len() != n - 1 {
        return Err(Error::Inconsistent(format!(
            "expected {} shear values, got {}",
            n - 1,
            shears.values.len()
        )));
    }
    let c = c_line.representative()?.clone();
    let mut rows = Vec::new();
    for x in 1..n {
        let y = n - x;
        let m = concat(&[a.prefix(x - 1), b.prefix(y - 1)]);
        let la = a.vector(x).clone();
        let lb = b.vector(y).clone();
        let mbc = nonzero_det(concat(&[&m, &[lb.clone(), c.clone()]]), "m∧b∧c")?;
        let mac = nonzero_det(concat(&[&m, &[la.clone(), c.clone()]]), "m∧a∧c")?;
        let da = det_functional(&concat(&[&m, &[la.clone()]]), &[], n)?;
        let db = det_functional(&concat(&[&m, &[lb.clone()]]), &[], n)?;
        let e = shears.values[x - 1].clone();
        // (m∧a∧d)(m∧b∧c) + e^σ (m∧a∧c)(m∧b∧d) = 0
        rows.push(
            da.iter()
                .zip(&db)
                .map(|(u, w)| mbc.clone() * u.clone() + e.clone() * mac.clone() * w.clone())
                .collect::<Vec<S>>(),
        );
    }
    let ker = Subspace::span(n, &kernel(&rows, n))?;
    if ker.dim() != 1 {
        return Err(Error::Inconsistent(format!(
            "shear hyperplanes meet in dimension {}",
            ker.dim()
        )));
    }
    let d = ker.representative()?.clone();
    // every cross ratio must be finite and nonzero at the recovered line
    for x in 1..n {
        let y = n - x;
        let m = concat(&[a.prefix(x - 1), b.prefix(y - 1)]);
        match cross_ratio_vectors([a.vector(x), &c, &d, b.vector(y)], &m)? {
            Extended::Finite(v) if !v.is_zero() => {}
            _ => return Err(Error::Degenerate("recovered line is not transverse".into())),
        }
    }
    Ok(Subspace::line(&normalize_leading(d))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::{cross_ratio_flags, triple_ratio};
    use crate::linalg::is_generic_triple;
    use crate::scalar::rational;
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(n: i64) -> Q {
        Q::from_int(n)
    }

    fn pt(x: Option<i64>) -> ProjectivePoint<Q> {
        ProjectivePoint::affine(x.map(q))
    }

    #[test]
    fn sym_power_examples() {
        assert_eq!(sym_power(&Matrix::<Q>::identity(2), 4).unwrap(), Matrix::identity(4));
        let lam = rational(3, 2);
        let d = Matrix::diagonal(&[lam.clone(), q(1) / lam.clone()]);
        let s = sym_power(&d, 3).unwrap();
        assert_eq!(s, Matrix::diagonal(&[lam.clone() * lam.clone(), q(1), q(1) / (lam.clone() * lam)]));
    }

    #[test]
    fn sym_power_is_multiplicative() {
        let a = Matrix::new(2, 2, vec![q(2), q(1), q(1), q(1)]).unwrap();
        let b = Matrix::new(2, 2, vec![q(1), q(-3), q(0), q(1)]).unwrap();
        for n in 2..6 {
            let lhs = sym_power(&a.mul(&b).unwrap(), n).unwrap();
            let rhs = sym_power(&a, n).unwrap().mul(&sym_power(&b, n).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
            assert_eq!(num_traits::Signed::abs(&sym_power(&a, n).unwrap().det().unwrap()), q(1));
        }
    }

    #[test]
    fn veronese_base_point_is_standard_flag() {
        let f = veronese_flag(&pt(None), 3).unwrap();
        assert!(f.same_as(&Flag::standard(3), 0.0));
        let g = veronese_flag(&pt(Some(0)), 3).unwrap();
        assert!(g.same_as(&Flag::reversed_standard(3), 0.0));
    }

    #[test]
    fn veronese_equivariance() {
        let m = Matrix::new(2, 2, vec![q(2), q(3), q(1), q(2)]).unwrap();
        for x in [Some(0), Some(5), Some(-2), None] {
            let p = pt(x);
            let lhs = veronese_flag(&p.apply(&m), 4).unwrap();
            let rhs = veronese_flag(&p, 4).unwrap().apply(&sym_power(&m, 4).unwrap()).unwrap();
            assert!(lhs.same_as(&rhs, 0.0));
        }
    }

    #[test]
    fn veronese_triple_ratios_are_one() {
        for n in 3..6 {
            let f = veronese_flag(&pt(Some(0)), n).unwrap();
            let g = veronese_flag(&pt(Some(1)), n).unwrap();
            let h = veronese_flag(&pt(None), n).unwrap();
            assert!(is_generic_triple(&f, &g, &h));
            for idx in TripleRatioIndex::all(n) {
                assert_eq!(triple_ratio(&f, &g, &h, idx).unwrap(), q(1));
            }
        }
    }

    fn example_g() -> Flag<Q> {
        Flag::from_basis(vec![vec![q(1), q(1), q(1)], vec![q(1), q(0), q(-2)]]).unwrap()
    }

    #[test]
    fn reconstruct_round_trips() {
        let f = Flag::<Q>::standard(3);
        let h = Flag::<Q>::reversed_standard(3);
        let line = Subspace::line(&[q(1), q(1), q(1)]).unwrap();
        for t in [q(1), rational(1, 2), rational(7, 3)] {
            let ratios = TripleRatioAssignment::from_fn(3, |_| t.clone()).unwrap();
            let g = reconstruct_triple(&f, &h, &line, &ratios).unwrap();
            let idx = TripleRatioIndex::new(1, 1, 1, 3).unwrap();
            assert_eq!(triple_ratio(&f, &g, &h, idx).unwrap(), t);
        }
        let g = example_g();
        let ratios = TripleRatioAssignment::extract(&f, &g, &h).unwrap();
        let back = reconstruct_triple(&f, &h, &g.line(), &ratios).unwrap();
        assert!(back.same_as(&g, 0.0));
    }

    #[test]
    fn fourth_line_planar_example() {
        let fl = |x: i64, y: i64| Flag::from_basis(vec![vec![q(x), q(y)]]).unwrap();
        let (a, b, c) = (fl(1, 0), fl(0, 1), fl(1, 1));
        let shears = ShearAssignment { values: vec![q(1)] };
        let d = recover_fourth_line(&a, &b, &c.line(), &shears).unwrap();
        assert_eq!(d, Subspace::line(&[q(-1), q(1)]).unwrap());
    }

    #[test]
    fn fourth_line_round_trip_on_veronese() {
        let n = 3;
        let pts = [Some(0), Some(-1), None, Some(2)];
        let flags: Vec<Flag<Q>> = pts.iter().map(|&x| veronese_flag(&pt(x), n).unwrap()).collect();
        // edge {0, ∞} with c = 2 and d = −1 on either side
        let (a, b, c, d) = (0, 2, 3, 1);
        let values: Vec<Q> = (1..n)
            .map(|x| {
                let base = [(a, x - 1), (b, n - x - 1)];
                match cross_ratio_flags(&flags, [a, c, d, b], &base).unwrap() {
                    Extended::Finite(v) => -v,
                    Extended::Infinity => panic!("infinite cross ratio"),
                }
            })
            .collect();
        let line = recover_fourth_line(&flags[a], &flags[b], &flags[c].line(), &ShearAssignment { values }).unwrap();
        assert_eq!(line, flags[d].line());
    }

    #[test]
    fn wrong_shear_count_is_an_error() {
        let a = Flag::<Q>::standard(3);
        let b = Flag::<Q>::reversed_standard(3);
        let c = Subspace::line(&[q(1), q(1), q(1)]).unwrap();
        let shears = ShearAssignment { values: vec![q(1)] };
        assert!(recover_fourth_line(&a, &b, &c, &shears).is_err());
    }
}
