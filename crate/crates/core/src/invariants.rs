//! Cross ratios and triple ratios of lines and flags.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm_inf, wedge_det_checked, Flag, Matrix, Subspace, Vector};
use crate::scalar::{Backend, Extended, Scalar, FLOAT_DET_TOL};

/// Four lines and an (n−2)-dimensional base.
#[derive(Debug, Clone)]
pub struct LineQuadrupleBase<S> {
    pub lines: [Subspace<S>; 4],
    pub base: Subspace<S>,
}

/// (L1,L2,L3,L4)_M computed with representatives of the lines and a basis of M.
pub fn cross_ratio_vectors<S: Scalar>(lines: [&Vector<S>; 4], base: &[Vector<S>]) -> Result<Extended<S>> {
    let n = lines[0].len();
    if base.len() + 2 != n {
        return Err(Error::DimensionMismatch {
            expected: n - 2,
            got: base.len(),
        });
    }
    if lines.iter().any(|l| l.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: lines.iter().map(|l| l.len()).find(|&d| d != n).unwrap(),
        });
    }
    // work in ℝⁿ/M: m ∧ l_i ∧ l_j is a fixed multiple of the 2×2 determinant
    // of the images, and the multiple cancels in the ratio
    let (red, pivots) = reduce_base(base).ok_or_else(|| Error::Degenerate("base is not (n-2)-dimensional".into()))?;
    let free: Vec<usize> = (0..n).filter(|j| !pivots.contains(j)).collect();
    let mut images: Vec<[S; 2]> = Vec::with_capacity(4);
    for l in lines {
        let q = [free[0], free[1]].map(|f| {
            red.iter()
                .zip(&pivots)
                .fold(l[f].clone(), |acc, (row, &p)| acc - row[f].clone() * l[p].clone())
        });
        if norm_inf(&q).negligible(&norm_inf(l)) {
            return Err(Error::Degenerate("base contains one of the lines".into()));
        }
        images.push(q);
    }
    // zero iff M+L_i = M+L_j
    let w = |i: usize, j: usize| -> Result<(S, bool)> {
        let ([a, b], [c, d]) = (&images[i], &images[j]);
        let det = a.clone() * d.clone() - b.clone() * c.clone();
        let zero = match S::BACKEND {
            Backend::Exact => det.is_zero(),
            Backend::Float64 => {
                let scale = norm_inf(&images[i]).to_f64() * norm_inf(&images[j]).to_f64();
                det.to_f64().abs() <= FLOAT_DET_TOL * scale
            }
        };
        Ok((det, zero))
    };
    let mut same = [[false; 4]; 4];
    for i in 0..4 {
        for j in i + 1..4 {
            let z = w(i, j)?.1;
            same[i][j] = z;
            same[j][i] = z;
        }
    }
    for (i, j, k) in [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)] {
        if same[i][j] && same[j][k] {
            return Err(Error::Degenerate(
                "three of the hyperplanes M+L_i coincide".into(),
            ));
        }
    }
    let (w13, z13) = w(0, 2)?;
    let (w42, z42) = w(3, 1)?;
    let (w12, z12) = w(0, 1)?;
    let (w43, z43) = w(3, 2)?;
    if z12 || z43 {
        return Ok(Extended::Infinity);
    }
    if z13 || z42 {
        return Ok(Extended::Finite(S::zero()));
    }
    Ok(Extended::Finite((w13 * w42) / (w12 * w43)))
}

/// Reduced rows of a basis of M with complete pivoting, and the pivot column
/// of each row. None if the rows are dependent.
fn reduce_base<S: Scalar>(base: &[Vector<S>]) -> Option<(Vec<Vector<S>>, Vec<usize>)> {
    let mut rows: Vec<Vector<S>> = match S::BACKEND {
        Backend::Exact => base.to_vec(),
        Backend::Float64 => base
            .iter()
            .map(|r| {
                let m = norm_inf(r);
                r.iter().map(|x| x.clone() / m.clone()).collect()
            })
            .collect(),
    };
    let n = rows.first().map_or(0, |r| r.len());
    let one = S::one();
    let mut pivots: Vec<usize> = Vec::new();
    for r in 0..rows.len() {
        let (i, j) = (r..rows.len())
            .flat_map(|i| (0..n).filter(|j| !pivots.contains(j)).map(move |j| (i, j)))
            .max_by(|&(a, b), &(c, d)| {
                rows[a][b].abs().partial_cmp(&rows[c][d].abs()).unwrap_or(std::cmp::Ordering::Equal)
            })?;
        if rows[i][j].negligible(&one) {
            return None;
        }
        rows.swap(r, i);
        let p = rows[r][j].clone();
        rows[r] = rows[r].iter().map(|x| x.clone() / p.clone()).collect();
        for k in 0..rows.len() {
            if k != r && !rows[k][j].is_zero() {
                let f = rows[k][j].clone();
                rows[k] = rows[k].iter().zip(&rows[r]).map(|(x, y)| x.clone() - f.clone() * y.clone()).collect();
            }
        }
        pivots.push(j);
    }
    Some((rows, pivots))
}

pub fn cross_ratio<S: Scalar>(q: &LineQuadrupleBase<S>) -> Result<Extended<S>> {
    let reps: Vec<&Vector<S>> = q
        .lines
        .iter()
        .map(|l| l.representative())
        .collect::<Result<_>>()?;
    cross_ratio_vectors([reps[0], reps[1], reps[2], reps[3]], q.base.basis())
}

/// The m-dimensional piece of the flag at `point` used against the base
/// Σ M_i^(n_i): E^(m) if `point` is not a base point, and otherwise the span
/// of adapted basis vectors n_i+1 … n_i+m (a fixed transverse complement).
pub fn moving_vectors<S: Scalar>(
    flags: &[Flag<S>],
    point: usize,
    base: &[(usize, usize)],
    m: usize,
) -> Vec<Vector<S>> {
    let offset = base
        .iter()
        .find(|(p, mult)| *p == point && *mult > 0)
        .map_or(0, |(_, mult)| *mult);
    (offset + 1..=offset + m)
        .map(|k| flags[point].vector(k).clone())
        .collect()
}

/// Basis vectors of Σ M_i^(n_i).
pub fn base_vectors<S: Scalar>(flags: &[Flag<S>], base: &[(usize, usize)]) -> Vec<Vector<S>> {
    base.iter()
        .flat_map(|(p, mult)| flags[*p].prefix(*mult).to_vec())
        .collect()
}

fn check_base<S: Scalar>(flags: &[Flag<S>], base: &[(usize, usize)], expected: usize) -> Result<()> {
    let total: usize = base.iter().map(|(_, m)| m).sum();
    if total != expected {
        return Err(Error::Precondition(format!(
            "base multiplicities sum to {total}, expected {expected}"
        )));
    }
    for (i, (p, _)) in base.iter().enumerate() {
        if *p >= flags.len() {
            return Err(Error::Precondition(format!("point index {p} out of range")));
        }
        if base[..i].iter().any(|(q, m)| q == p && *m > 0) && base[i].1 > 0 {
            return Err(Error::Precondition(format!("base point {p} repeated")));
        }
    }
    Ok(())
}

/// (A,B,C,D)_M for points along a curve, with M = Σ M_i^(n_i).
///
/// Points are indices into `flags`; base entries are (point, multiplicity).
pub fn cross_ratio_flags<S: Scalar>(
    flags: &[Flag<S>],
    quad: [usize; 4],
    base: &[(usize, usize)],
) -> Result<Extended<S>> {
    let n = flags
        .first()
        .map(|f| f.dim())
        .ok_or_else(|| Error::Precondition("no flags".into()))?;
    check_base(flags, base, n - 2)?;
    if quad.iter().any(|&q| q >= flags.len()) {
        return Err(Error::Precondition("quadruple index out of range".into()));
    }
    let m = base_vectors(flags, base);
    let lines: Vec<Vector<S>> = quad
        .iter()
        .map(|&q| moving_vectors(flags, q, base, 1).remove(0))
        .collect();
    cross_ratio_vectors([&lines[0], &lines[1], &lines[2], &lines[3]], &m)
}

/// (V_j, L, g·L, V_i)_M for a real-split g with distinct eigenvalue moduli.
///
/// `i < j` index the eigenvalues by decreasing modulus (1-based); M is the span
/// of the remaining eigenlines. On the nose this equals e^{λ_i(g) − λ_j(g)}.
pub fn eigen_gap_check<S: Scalar>(g: &Matrix<S>, i: usize, j: usize, witness: &Vector<S>) -> Result<f64> {
    let n = g.nrows();
    if !g.is_square() || witness.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: witness.len(),
        });
    }
    if !(1 <= i && i < j && j <= n) {
        return Err(Error::Precondition(format!("need 1 <= i < j <= n, got ({i}, {j})")));
    }
    let lines = real_eigenlines(&g.to_f64())?;
    let vi = &lines[i - 1];
    let vj = &lines[j - 1];
    let base: Vec<Vector<f64>> = lines
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != i - 1 && *k != j - 1)
        .map(|(_, v)| v.clone())
        .collect();
    let l: Vector<f64> = witness.iter().map(|x| x.to_f64()).collect();
    let gl = g.to_f64().apply(&l);
    match cross_ratio_vectors([vj, &l, &gl, vi], &base)? {
        Extended::Finite(v) => Ok(v),
        Extended::Infinity => Err(Error::Degenerate("witness lies in M + V_i".into())),
    }
}

/// Eigenlines of a real-split matrix ordered by decreasing eigenvalue modulus.
pub fn real_eigenlines(g: &Matrix<f64>) -> Result<Vec<Vector<f64>>> {
    let n = g.nrows();
    let a = g.to_nalgebra();
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), 1e-15, 100_000)
        .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
    let eig = schur.complex_eigenvalues();
    let mut vals: Vec<f64> = Vec::with_capacity(n);
    let scale = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for z in eig.iter() {
        if z.im.abs() > 1e-9 * scale {
            return Err(Error::Eigen("matrix is not real split".into()));
        }
        vals.push(z.re);
    }
    vals.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap());
    for w in vals.windows(2) {
        if (w[0].abs() - w[1].abs()).abs() <= 1e-9 * scale {
            return Err(Error::Eigen("repeated eigenvalue modulus".into()));
        }
    }
    let mut lines = Vec::with_capacity(n);
    for mu in vals {
        // eigenline = right singular vector of g − μI for the smallest singular value
        let shifted = &a - nalgebra::DMatrix::<f64>::identity(n, n) * mu;
        let svd = nalgebra::linalg::SVD::try_new(shifted, false, true, 1e-15, 100_000)
            .ok_or_else(|| Error::Eigen("SVD did not converge".into()))?;
        let v_t = svd.v_t.expect("requested");
        let (kmin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        lines.push(v_t.row(kmin).iter().copied().collect());
    }
    Ok(lines)
}

/// Index (x, y, z) of a triple ratio: positive integers with x + y + z = n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TripleRatioIndex {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl TripleRatioIndex {
    pub fn new(x: usize, y: usize, z: usize, n: usize) -> Result<Self> {
        if x == 0 || y == 0 || z == 0 || x + y + z != n {
            return Err(Error::InvalidIndex(vec![x, y, z]));
        }
        Ok(Self { x, y, z })
    }

    /// Every index with x + y + z = n, in lexicographic order.
    pub fn all(n: usize) -> Vec<Self> {
        let mut out = Vec::new();
        for x in 1..n {
            for y in 1..n - x {
                let z = n - x - y;
                if z >= 1 {
                    out.push(Self { x, y, z });
                }
            }
        }
        out
    }

    /// (y, z, x): the index of the same ratio after cycling the flags.
    pub fn rotated(self) -> Self {
        Self {
            x: self.y,
            y: self.z,
            z: self.x,
        }
    }

    pub fn n(&self) -> usize {
        self.x + self.y + self.z
    }
}

/// F^(a) ∧ G^(b) ∧ H^(c) with adapted bases (dims must sum to n).
pub fn triple_wedge<S: Scalar>(f: &Flag<S>, g: &Flag<S>, h: &Flag<S>, a: usize, b: usize, c: usize) -> Result<(S, bool)> {
    let mut cols = f.prefix(a).to_vec();
    cols.extend_from_slice(g.prefix(b));
    cols.extend_from_slice(h.prefix(c));
    wedge_det_checked(&cols)
}

/// T_{x,y,z}(F, G, H).
pub fn triple_ratio<S: Scalar>(f: &Flag<S>, g: &Flag<S>, h: &Flag<S>, idx: TripleRatioIndex) -> Result<S> {
    let n = f.dim();
    if g.dim() != n || h.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if g.dim() != n { g.dim() } else { h.dim() },
        });
    }
    let TripleRatioIndex { x, y, z } = TripleRatioIndex::new(idx.x, idx.y, idx.z, n)?;
    let terms = [
        (x, y - 1, z + 1),
        (x + 1, y, z - 1),
        (x - 1, y + 1, z),
        (x, y + 1, z - 1),
        (x - 1, y, z + 1),
        (x + 1, y - 1, z),
    ];
    let mut vals = Vec::with_capacity(6);
    for (a, b, c) in terms {
        let (v, zero) = triple_wedge(f, g, h, a, b, c)?;
        if zero {
            return Err(Error::NotGeneric);
        }
        vals.push(v);
    }
    let num = vals[0].clone() * vals[1].clone() * vals[2].clone();
    let den = vals[3].clone() * vals[4].clone() * vals[5].clone();
    Ok(num / den)
}

/// ℙ(Σ M_i^(n_i) + E^(m)) ∩ ℙ(A^(1) + B^(1)), with the transverse-complement
/// convention of [`moving_vectors`] wherever a point equals a base point.
pub fn project_curve_point<S: Scalar>(
    flags: &[Flag<S>],
    e: usize,
    base: &[(usize, usize)],
    target: (usize, usize),
    m: usize,
) -> Result<Subspace<S>> {
    let n = flags
        .first()
        .map(|f| f.dim())
        .ok_or_else(|| Error::Precondition("no flags".into()))?;
    check_base(flags, base, n - 1 - m.min(n - 1))?;
    if m == 0 {
        return Err(Error::Precondition("m must be positive".into()));
    }
    let mut hyper = base_vectors(flags, base);
    hyper.extend(moving_vectors(flags, e, base, m));
    let w = Subspace::span(n, &hyper)?;
    if w.dim() != n - 1 {
        return Err(Error::Degenerate("projection base is not a hyperplane".into()));
    }
    let a = moving_vectors(flags, target.0, base, 1).remove(0);
    let b = moving_vectors(flags, target.1, base, 1).remove(0);
    let plane = Subspace::span(n, &[a, b])?;
    if plane.dim() != 2 {
        return Err(Error::Degenerate("target points coincide".into()));
    }
    let out = w.intersect(&plane)?;
    if out.dim() != 1 {
        return Err(Error::Degenerate("target line lies in the projection hyperplane".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unit;
    use crate::scalar::rational;
    use num_rational::BigRational;

    type Q = BigRational;

    fn v(xs: &[i64]) -> Vector<Q> {
        xs.iter().map(|&x| Q::from_int(x)).collect()
    }

    #[test]
    fn planar_example_is_two() {
        let l = [v(&[1, 0]), v(&[1, 1]), v(&[1, 2]), v(&[0, 1])];
        let cr = cross_ratio_vectors([&l[0], &l[1], &l[2], &l[3]], &[]).unwrap();
        assert_eq!(cr, Extended::Finite(Q::from_int(2)));
    }

    #[test]
    fn repeated_lines_give_one_and_infinity() {
        let l = [v(&[1, 0, 2]), v(&[0, 1, 1]), v(&[1, 1, 0])];
        let base = vec![v(&[0, 0, 1])];
        let one = cross_ratio_vectors([&l[0], &l[1], &l[1], &l[2]], &base).unwrap();
        assert_eq!(one, Extended::Finite(Q::from_int(1)));
        let inf = cross_ratio_vectors([&l[0], &l[0], &l[1], &l[2]], &base).unwrap();
        assert_eq!(inf, Extended::Infinity);
    }

    #[test]
    fn three_equal_hyperplanes_rejected() {
        let base = vec![v(&[0, 0, 1])];
        let a = v(&[1, 0, 0]);
        let b = v(&[1, 0, 5]);
        let c = v(&[2, 0, 1]);
        let d = v(&[0, 1, 0]);
        assert!(cross_ratio_vectors([&a, &b, &c, &d], &base).is_err());
    }

    #[test]
    fn eigen_gap_diagonal_example() {
        let g = Matrix::diagonal(&[rational(4, 1), rational(2, 1), rational(1, 1)]);
        let val = eigen_gap_check(&g, 1, 3, &v(&[1, 1, 1])).unwrap();
        assert!((val - 4.0).abs() < 1e-10);
    }

    #[test]
    fn eigen_gap_scalar_matrix_rejected_or_one() {
        let g = Matrix::<f64>::identity(3).scaled(&2.0);
        // every modulus repeats, so there is no well-defined split
        assert!(eigen_gap_check(&g, 1, 2, &vec![1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn triple_ratio_example_is_half() {
        let f = Flag::<Q>::standard(3);
        let h = Flag::<Q>::reversed_standard(3);
        let g = Flag::from_basis(vec![v(&[1, 1, 1]), v(&[1, 0, -2])]).unwrap();
        let t = triple_ratio(&f, &g, &h, TripleRatioIndex::new(1, 1, 1, 3).unwrap()).unwrap();
        assert_eq!(t, rational(1, 2));
    }

    #[test]
    fn index_set_sizes() {
        assert_eq!(TripleRatioIndex::all(3).len(), 1);
        assert_eq!(TripleRatioIndex::all(5).len(), 6);
        assert!(TripleRatioIndex::new(0, 1, 2, 3).is_err());
    }

    #[test]
    fn projection_of_target_is_itself() {
        let flags = vec![
            Flag::<Q>::standard(3),
            Flag::reversed_standard(3),
            Flag::from_basis(vec![v(&[1, 1, 1]), v(&[1, 0, -2])]).unwrap(),
        ];
        let p = project_curve_point(&flags, 0, &[(2, 1)], (0, 1), 1).unwrap();
        assert_eq!(p, Subspace::line(&unit(3, 0)).unwrap());
        let two = vec![
            Flag::from_basis(vec![v(&[1, 0])]).unwrap(),
            Flag::from_basis(vec![v(&[0, 1])]).unwrap(),
            Flag::from_basis(vec![v(&[1, 3])]).unwrap(),
        ];
        let p = project_curve_point(&two, 2, &[], (0, 1), 1).unwrap();
        assert_eq!(p, Subspace::line(&v(&[1, 3])).unwrap());
    }
}
