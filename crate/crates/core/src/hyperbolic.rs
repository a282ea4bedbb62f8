//! The Fuchsian locus: Möbius maps on the circle at infinity, and a closed
//! genus-2 hyperbolic surface glued from two pairs of pants.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flags::{sym_power, veronese_flag, ProjectivePoint};
use crate::linalg::{Flag, Matrix};
use crate::params::{BoundarySlot, PantsDecomposition, Slot};

/// A 2×2 real matrix acting on the circle ℝP¹ = ∂ℍ². Determinant −1 gives a
/// reflection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mobius {
    pub m: [[f64; 2]; 2],
}

impl Mobius {
    pub const IDENTITY: Mobius = Mobius {
        m: [[1.0, 0.0], [0.0, 1.0]],
    };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { m: [[a, b], [c, d]] }
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn mul(&self, o: &Mobius) -> Mobius {
        let a = &self.m;
        let b = &o.m;
        Mobius::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    pub fn inverse(&self) -> Mobius {
        let d = self.det();
        Mobius::new(self.m[1][1] / d, -self.m[0][1] / d, -self.m[1][0] / d, self.m[0][0] / d)
    }

    pub fn apply(&self, p: &CirclePoint) -> CirclePoint {
        CirclePoint::new(
            self.m[0][0] * p.s + self.m[0][1] * p.t,
            self.m[1][0] * p.s + self.m[1][1] * p.t,
        )
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.det() > 0.0 && self.trace().abs() > 2.0 * self.det().sqrt() * (1.0 + 1e-12)
    }

    /// (repelling, attracting) fixed points of a hyperbolic element.
    pub fn fixed_points(&self) -> Result<(CirclePoint, CirclePoint)> {
        if !self.is_hyperbolic() {
            return Err(Error::NotHyperbolic(self.trace().abs()));
        }
        let tr = self.trace();
        let disc = (tr * tr - 4.0 * self.det()).sqrt();
        let big = (tr + tr.signum() * disc) / 2.0;
        let small = self.det() / big;
        Ok((self.eigenpoint(small), self.eigenpoint(big)))
    }

    fn eigenpoint(&self, mu: f64) -> CirclePoint {
        let [[a, b], [c, d]] = self.m;
        let u = (b, mu - a);
        let v = (mu - d, c);
        if u.0.hypot(u.1) >= v.0.hypot(v.1) {
            CirclePoint::new(u.0, u.1)
        } else {
            CirclePoint::new(v.0, v.1)
        }
    }

    /// Hyperbolic translation length 2·arccosh(|tr|/2), for det 1.
    pub fn translation_length(&self) -> Result<f64> {
        if !self.is_hyperbolic() {
            return Err(Error::NotHyperbolic(self.trace().abs()));
        }
        Ok(2.0 * (self.trace().abs() / (2.0 * self.det().sqrt())).acosh())
    }

    /// Hyperbolic element translating from `from` towards `to` by `dist`.
    pub fn translation(from: &CirclePoint, to: &CirclePoint, dist: f64) -> Mobius {
        let p = Mobius::new(to.s, from.s, to.t, from.t);
        let e = (dist / 2.0).exp();
        p.mul(&Mobius::new(e, 0.0, 0.0, 1.0 / e)).mul(&p.inverse())
    }

    /// Reflection in the geodesic with the given endpoints.
    pub fn reflection(p: &CirclePoint, q: &CirclePoint) -> Mobius {
        let basis = Mobius::new(p.s, q.s, p.t, q.t);
        basis.mul(&Mobius::new(1.0, 0.0, 0.0, -1.0)).mul(&basis.inverse())
    }

    /// Rescaled to |det| = 1.
    pub fn normalized(&self) -> Mobius {
        let k = self.det().abs().sqrt();
        Mobius::new(self.m[0][0] / k, self.m[0][1] / k, self.m[1][0] / k, self.m[1][1] / k)
    }

    pub fn to_matrix(&self) -> Matrix<f64> {
        Matrix::new(2, 2, vec![self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]]).expect("2x2")
    }

    pub fn approx_eq_projective(&self, o: &Mobius, tol: f64) -> bool {
        let a = self.normalized();
        let b = o.normalized();
        let diff = |sign: f64| {
            (0..2)
                .flat_map(|i| (0..2).map(move |j| (i, j)))
                .map(|(i, j)| (a.m[i][j] - sign * b.m[i][j]).abs())
                .fold(0.0, f64::max)
        };
        diff(1.0).min(diff(-1.0)) <= tol
    }
}

/// Point [s:t] of ∂ℍ², standing for s/t ∈ ℝ ∪ {∞}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirclePoint {
    pub s: f64,
    pub t: f64,
}

impl CirclePoint {
    pub fn new(s: f64, t: f64) -> Self {
        let r = s.hypot(t);
        let (s, t) = (s / r, t / r);
        // fix the sign so that the representative is unique
        if t < 0.0 || (t == 0.0 && s < 0.0) {
            Self { s: -s, t: -t }
        } else {
            Self { s, t }
        }
    }

    pub fn real(x: f64) -> Self {
        Self::new(x, 1.0)
    }

    pub fn infinity() -> Self {
        Self::new(1.0, 0.0)
    }

    /// Position on the circle in [0, 2π), increasing with s/t; ∞ sits at π.
    pub fn angle(&self) -> f64 {
        let a = 2.0 * self.s.atan2(self.t);
        let a = if a < 0.0 { a + 2.0 * PI } else { a };
        if a >= 2.0 * PI {
            0.0
        } else {
            a
        }
    }

    pub fn distance(&self, o: &CirclePoint) -> f64 {
        let d = (self.angle() - o.angle()).abs();
        d.min(2.0 * PI - d)
    }

    pub fn projective(&self) -> ProjectivePoint<f64> {
        ProjectivePoint {
            s: self.s,
            t: self.t,
        }
    }
}

impl fmt::Display for CirclePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.t.abs() < 1e-15 {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.s / self.t)
        }
    }
}

/// Counterclockwise position of `x` measured from `from`, in [0, 2π).
pub fn ccw_offset(from: &CirclePoint, x: &CirclePoint) -> f64 {
    let d = x.angle() - from.angle();
    if d < 0.0 {
        d + 2.0 * PI
    } else {
        d
    }
}

/// True if `x` lies strictly inside the counterclockwise arc from `p` to `q`.
pub fn in_open_arc(p: &CirclePoint, q: &CirclePoint, x: &CirclePoint) -> bool {
    let ox = ccw_offset(p, x);
    ox > 0.0 && ox < ccw_offset(p, q)
}

/// True if the chords {p, q} and {u, v} cross.
pub fn separates(p: &CirclePoint, q: &CirclePoint, u: &CirclePoint, v: &CirclePoint) -> bool {
    in_open_arc(p, q, u) != in_open_arc(p, q, v)
}

/// A word in the generators; lowercase letters are generators, uppercase
/// their inverses.
pub fn invert_word(w: &str) -> String {
    w.chars()
        .rev()
        .map(|c| {
            if c.is_ascii_lowercase() {
                c.to_ascii_uppercase()
            } else {
                c.to_ascii_lowercase()
            }
        })
        .collect()
}

/// Freely reduce a word.
pub fn reduce_word(w: &str) -> String {
    let mut out: Vec<char> = Vec::new();
    for c in w.chars() {
        match out.last() {
            Some(&l) if l != c && l.eq_ignore_ascii_case(&c) => {
                out.pop();
            }
            _ => out.push(c),
        }
    }
    out.into_iter().collect()
}

/// Split a word as y·c·y⁻¹ with c cyclically reduced; returns (y, c).
pub fn cyclic_split(w: &str) -> (String, String) {
    let core: Vec<char> = reduce_word(w).chars().collect();
    let mut k = 0;
    while core.len() >= 2 * k + 2 {
        let (first, last) = (core[k], core[core.len() - 1 - k]);
        if first != last && first.eq_ignore_ascii_case(&last) {
            k += 1;
        } else {
            break;
        }
    }
    (core[..k].iter().collect(), core[k..core.len() - k].iter().collect())
}

/// Hexagon/pants data of a genus-2 Fuchsian surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuchsianSpec {
    /// Lengths of the three pants curves.
    pub lengths: [f64; 3],
    /// Twist (signed distance) along each pants curve.
    #[serde(default)]
    pub twists: [f64; 3],
}

/// Closed genus-2 hyperbolic surface: pants P0 bounded by the axes of
/// A = a, B = b and C = A⁻¹B⁻¹, and its mirror image P1, glued along all three
/// curves. The group is generated by a, b, s, t with the single relation
/// t⁻¹·b·a·t = s⁻¹·b·s·a. The mirror reverses the cyclic order of the
/// boundary, so the second pants carries curve 2 in slot B and curve 1 in slot C.
#[derive(Debug, Clone)]
pub struct FuchsianSurface {
    pub spec: FuchsianSpec,
    generators: BTreeMap<char, Mobius>,
}

/// Elements of one pair of pants, by slot.
pub const PANTS_WORDS: [[&str; 3]; 2] = [["a", "b", "AB"], ["A", "Tbat", "SBs"]];

/// Across the boundary in slot S of pants j lies the region G·R_k, listed as
/// (k, slot of the same curve in k, word of G). G conjugates the element of
/// (k, slot) to the inverse of the element of (j, S).
pub const GLUING: [[(usize, Slot, &str); 3]; 2] = [
    [(1, Slot::A, ""), (1, Slot::C, "s"), (1, Slot::B, "t")],
    [(0, Slot::A, ""), (0, Slot::C, "T"), (0, Slot::B, "S")],
];

/// Letters of the genus-2 presentation.
pub const GENERATORS: [char; 4] = ['a', 'b', 's', 't'];

impl FuchsianSurface {
    pub fn genus_two(spec: FuchsianSpec) -> Result<Self> {
        let [l1, l2, l3] = spec.lengths;
        if spec.lengths.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::Precondition("curve lengths must be positive".into()));
        }
        let (h1, h2, h3) = (l1 / 2.0, l2 / 2.0, l3 / 2.0);
        let cosh_d = (h3.cosh() + h1.cosh() * h2.cosh()) / (h1.sinh() * h2.sinh());
        let d = cosh_d.acosh();
        let in_axis = |x: &Mobius| x.fixed_points();
        let mut found = None;
        'search: for sd in [-1.0, 1.0] {
            for ea in [1.0, -1.0] {
                for eb in [1.0, -1.0] {
                    let a = Mobius::new((ea * h1).exp(), 0.0, 0.0, (-ea * h1).exp());
                    let shift = Mobius::new((sd * d / 2.0).cosh(), (sd * d / 2.0).sinh(), (sd * d / 2.0).sinh(), (sd * d / 2.0).cosh());
                    let b0 = Mobius::new((eb * h2).exp(), 0.0, 0.0, (-eb * h2).exp());
                    let b = shift.mul(&b0).mul(&shift.inverse());
                    let c = a.inverse().mul(&b.inverse());
                    if (c.trace().abs() - 2.0 * h3.cosh()).abs() > 1e-8 * h3.cosh() {
                        continue;
                    }
                    let axes = [in_axis(&a)?, in_axis(&b)?, in_axis(&c)?];
                    let left_ok = (0..3).all(|i| {
                        let (rep, att) = axes[i];
                        (0..3).filter(|j| *j != i).all(|j| {
                            in_open_arc(&att, &rep, &axes[j].0) && in_open_arc(&att, &rep, &axes[j].1)
                        })
                    });
                    if left_ok {
                        found = Some((a, b, c));
                        break 'search;
                    }
                }
            }
        }
        let (a, b, c) = found.ok_or_else(|| Error::Inconsistent("no pants orientation satisfies the boundary conditions".into()))?;
        let (a_rep, a_att) = a.fixed_points()?;
        let (b_rep, b_att) = b.fixed_points()?;
        let (c_rep, c_att) = c.fixed_points()?;
        let [ta, tb, tc] = spec.twists;
        // mirror across the axis of A, then twist along it
        let mirror = Mobius::translation(&a_rep, &a_att, ta).mul(&Mobius::reflection(&a_rep, &a_att));
        let s = Mobius::translation(&b_rep, &b_att, tb)
            .mul(&Mobius::reflection(&b_rep, &b_att))
            .mul(&mirror.inverse());
        let t = Mobius::translation(&c_rep, &c_att, tc)
            .mul(&Mobius::reflection(&c_rep, &c_att))
            .mul(&mirror.inverse());
        let mut generators = BTreeMap::new();
        generators.insert('a', a.normalized());
        generators.insert('b', b.normalized());
        generators.insert('s', s.normalized());
        generators.insert('t', t.normalized());
        let surface = Self { spec, generators };
        let res = surface.relation_residual()?;
        if res > 1e-6 {
            return Err(Error::Inconsistent(format!("surface relation fails by {res:.3e}")));
        }
        Ok(surface)
    }

    pub fn decomposition(&self) -> PantsDecomposition {
        let slot = |curve, agrees| BoundarySlot { curve, agrees };
        PantsDecomposition::new(
            2,
            vec![
                [slot(0, true), slot(1, true), slot(2, true)],
                [slot(0, false), slot(2, false), slot(1, false)],
            ],
        )
        .expect("genus-2 pants table")
    }

    pub fn generator(&self, c: char) -> Result<Mobius> {
        if c.is_ascii_lowercase() {
            self.generators
                .get(&c)
                .copied()
                .ok_or_else(|| Error::Precondition(format!("unknown generator '{c}'")))
        } else {
            Ok(self.generator(c.to_ascii_lowercase())?.inverse())
        }
    }

    pub fn word(&self, w: &str) -> Result<Mobius> {
        let mut m = Mobius::IDENTITY;
        for c in w.chars() {
            m = m.mul(&self.generator(c)?);
        }
        Ok(m)
    }

    /// w·p, applying one generator at a time.
    pub fn apply_word(&self, w: &str, p: &CirclePoint) -> Result<CirclePoint> {
        let mut q = *p;
        for c in w.chars().rev() {
            q = self.generator(c)?.apply(&q);
        }
        Ok(q)
    }

    /// Distance between the two sides of t⁻¹·b·a·t = s⁻¹·b·s·a in PSL(2,ℝ).
    pub fn relation_residual(&self) -> Result<f64> {
        let lhs = self.word("Tbat")?;
        let rhs = self.word("Sbsa")?;
        let d = |sign: f64| {
            (0..2)
                .flat_map(|i| (0..2).map(move |j| (i, j)))
                .map(|(i, j)| (lhs.m[i][j] - sign * rhs.m[i][j]).abs())
                .fold(0.0, f64::max)
        };
        Ok(d(1.0).min(d(-1.0)))
    }

    /// The elements in slots A, B, C of pants `j`.
    pub fn pants_elements(&self, j: usize) -> Result<[Mobius; 3]> {
        let w = PANTS_WORDS
            .get(j)
            .ok_or_else(|| Error::Precondition(format!("genus-2 surface has no pants {j}")))?;
        Ok([self.word(w[0])?, self.word(w[1])?, self.word(w[2])?])
    }

    /// Image under the n-dimensional irreducible representation.
    pub fn holonomy(&self, w: &str, n: usize) -> Result<Matrix<f64>> {
        sym_power(&self.word(w)?.to_matrix(), n)
    }

    /// Veronese flag at a circle point.
    pub fn flag(&self, p: &CirclePoint, n: usize) -> Result<Flag<f64>> {
        veronese_flag(&p.projective(), n)
    }
}
