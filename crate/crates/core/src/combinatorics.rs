//! Following a closed geodesic through the pants triangulation on the Fuchsian
//! locus: meshes along pants curves, the cyclic binodal-edge encoding ψ(X) with
//! its counters r and s, and lengths of crossing and winding segments in the
//! plane spanned by the axis endpoints.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::{cyclic_split, CirclePoint, FuchsianSurface, Mobius, GLUING};
use crate::invariants::cross_ratio_vectors;
use crate::linalg::{Flag, Subspace, Vector};
use crate::params::{EdgeId, EdgeKind, PantsDecomposition, Slot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeType {
    Z,
    S,
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeType::Z => write!(f, "Z"),
            EdgeType::S => write!(f, "S"),
        }
    }
}

/// One binodal edge with its neighbours along the axis and the winding count
/// to the next binodal edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PsiTuple {
    pub pred: EdgeId,
    pub edge: EdgeId,
    pub succ: EdgeId,
    pub kind: EdgeType,
    pub t: i64,
}

/// Cyclic sequence of tuples; equality of curves is equality up to rotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PsiEncoding {
    pub tuples: Vec<PsiTuple>,
}

impl PsiEncoding {
    pub fn new(tuples: Vec<PsiTuple>) -> Self {
        Self { tuples }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn rotated(&self, k: usize) -> Self {
        let mut tuples = self.tuples.clone();
        if !tuples.is_empty() {
            let k = k % tuples.len();
            tuples.rotate_left(k);
        }
        Self { tuples }
    }

    /// The lexicographically least rotation.
    pub fn canonical(&self) -> Self {
        (0..self.len().max(1))
            .map(|k| self.rotated(k))
            .min_by(|a, b| a.tuples.cmp(&b.tuples))
            .unwrap_or_else(|| self.clone())
    }

    pub fn same_cycle(&self, other: &PsiEncoding) -> bool {
        self.len() == other.len() && self.canonical() == other.canonical()
    }

    pub fn t_values(&self) -> Vec<i64> {
        self.tuples.iter().map(|t| t.t).collect()
    }
}

/// r = number of binodal classes, s = Σ max{0, |t| − 2}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountPair {
    pub r: usize,
    pub s: usize,
}

pub fn winding_excess(t: i64) -> usize {
    (t.unsigned_abs() as usize).saturating_sub(2)
}

pub fn r_and_s(psi: &PsiEncoding) -> Result<CountPair> {
    if psi.is_empty() {
        return Err(Error::Precondition("encoding has no tuples".into()));
    }
    Ok(CountPair {
        r: psi.len(),
        s: psi.tuples.iter().map(|t| winding_excess(t.t)).sum(),
    })
}

/// The two boundary slots an edge of a pair of pants runs between.
pub fn edge_slots(kind: EdgeKind) -> [Slot; 2] {
    match kind {
        EdgeKind::AB => [Slot::A, Slot::B],
        EdgeKind::AC => [Slot::A, Slot::C],
        EdgeKind::BC => [Slot::B, Slot::C],
    }
}

fn shares_slot(a: EdgeKind, b: EdgeKind) -> bool {
    let sa = edge_slots(a);
    edge_slots(b).iter().any(|s| sa.contains(s))
}

/// Necessary conditions for an encoding to come from a closed curve. An empty
/// result means every check passed.
pub fn validate_psi(psi: &PsiEncoding, decomp: &PantsDecomposition) -> Vec<String> {
    let mut out = Vec::new();
    if psi.is_empty() {
        out.push("encoding has no tuples".to_string());
        return out;
    }
    let np = decomp.num_pants();
    for (i, tp) in psi.tuples.iter().enumerate() {
        for (name, e) in [("pred", tp.pred), ("edge", tp.edge), ("succ", tp.succ)] {
            if e.pants >= np {
                out.push(format!("tuple {i}: {name} lies in pants {} of {np}", e.pants));
            }
        }
        if tp.pred.pants != tp.edge.pants || tp.succ.pants != tp.edge.pants {
            out.push(format!("tuple {i}: neighbours are not edges of the same pants as the edge"));
        }
        if tp.pred.kind == tp.edge.kind || tp.succ.kind == tp.edge.kind || tp.pred.kind == tp.succ.kind {
            out.push(format!("tuple {i}: neighbours must be the two other edges of the pants"));
        }
    }
    if !out.is_empty() {
        return out;
    }
    let r = psi.len();
    for i in 0..r {
        let cur = &psi.tuples[i];
        let next = &psi.tuples[(i + 1) % r];
        if cur.kind != next.kind {
            // consecutive edges of different type share a vertex
            if cur.edge.pants != next.edge.pants || !shares_slot(cur.edge.kind, next.edge.kind) {
                out.push(format!("tuples {i},{}: different types but no common vertex", (i + 1) % r));
            }
        } else {
            // same type: a pants curve separates them
            let joinable = (0..decomp.num_curves()).any(|c| {
                let inc = decomp.incidences(c);
                inc.iter().any(|&(p, s, ag)| {
                    p == cur.edge.pants
                        && edge_slots(cur.edge.kind).contains(&s)
                        && inc.iter().any(|&(q, s2, ag2)| {
                            (q, s2) != (p, s)
                                && ag2 != ag
                                && q == next.edge.pants
                                && edge_slots(next.edge.kind).contains(&s2)
                        })
                })
            });
            if !joinable {
                out.push(format!("tuples {i},{}: same type but no pants curve joins them", (i + 1) % r));
            }
        }
    }
    out
}

/// The lift h·W·h⁻¹ of the pants-curve element W sitting in `slot` of `pants`;
/// its repelling fixed point is h·(repelling point of W).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveLift {
    pub conjugator: Mobius,
    pub pants: usize,
    pub slot: Slot,
}

impl CurveLift {
    pub fn base(pants: usize, slot: Slot) -> Self {
        Self {
            conjugator: Mobius::IDENTITY,
            pants,
            slot,
        }
    }

    pub fn conjugated(&self, y: &Mobius) -> Self {
        Self {
            conjugator: y.mul(&self.conjugator).normalized(),
            ..*self
        }
    }
}

struct PantsData {
    elems: [Mobius; 3],
    rep: [CirclePoint; 3],
    att: [CirclePoint; 3],
}

struct Geometry<'a> {
    surface: &'a FuchsianSurface,
    pants: Vec<PantsData>,
    gluing: Vec<[(usize, Slot, Mobius); 3]>,
}

impl<'a> Geometry<'a> {
    fn new(surface: &'a FuchsianSurface) -> Result<Self> {
        let mut pants = Vec::new();
        let mut gluing = Vec::new();
        for j in 0..GLUING.len() {
            let elems = surface.pants_elements(j)?;
            let mut rep = [CirclePoint::infinity(); 3];
            let mut att = [CirclePoint::infinity(); 3];
            for k in 0..3 {
                let (r, a) = elems[k].fixed_points()?;
                rep[k] = r;
                att[k] = a;
            }
            pants.push(PantsData { elems, rep, att });
            let mut row = [(0, Slot::A, Mobius::IDENTITY); 3];
            for s in Slot::ALL {
                let (k, s2, w) = GLUING[j][s.index()];
                row[s.index()] = (k, s2, surface.word(w)?);
            }
            gluing.push(row);
        }
        Ok(Self { surface, pants, gluing })
    }

    fn repelling(&self, l: &CurveLift) -> CirclePoint {
        l.conjugator.apply(&self.pants[l.pants].rep[l.slot.index()])
    }

    fn attracting(&self, l: &CurveLift) -> CirclePoint {
        l.conjugator.apply(&self.pants[l.pants].att[l.slot.index()])
    }

    fn element(&self, l: &CurveLift) -> Mobius {
        l.conjugator
            .mul(&self.pants[l.pants].elems[l.slot.index()])
            .mul(&l.conjugator.inverse())
            .normalized()
    }

    fn slot_element(&self, pants: usize, slot: Slot) -> Mobius {
        self.pants[pants].elems[slot.index()]
    }

    /// The same curve seen from the region on the other side of the leaf;
    /// its repelling point is the attracting point of `l`.
    fn across(&self, l: &CurveLift) -> CurveLift {
        let (k, s2, g) = self.gluing[l.pants][l.slot.index()];
        CurveLift {
            conjugator: l.conjugator.mul(&g).normalized(),
            pants: k,
            slot: s2,
        }
    }
}

/// Orientation-preserving map sending `zero` to 0 and `inf` to ∞.
fn normalizer(zero: &CirclePoint, inf: &CirclePoint) -> Mobius {
    let mut m = Mobius::new(inf.s, zero.s, inf.t, zero.t);
    if m.det() < 0.0 {
        m = Mobius::new(inf.s, -zero.s, inf.t, -zero.t);
    }
    m.inverse().normalized()
}

fn coord(m: &Mobius, p: &CirclePoint) -> f64 {
    let q = m.apply(p);
    q.s / q.t
}

/// z ↦ μ·z in the normalized picture of a hyperbolic element.
fn scaling_factor(norm: &Mobius, g: &Mobius) -> f64 {
    let d = norm.mul(g).mul(&norm.inverse());
    d.m[0][0] / d.m[1][1]
}

fn power(m: &Mobius, k: i64) -> Mobius {
    let base = if k < 0 { m.inverse() } else { *m };
    let mut out = Mobius::IDENTITY;
    for _ in 0..k.unsigned_abs() {
        out = out.mul(&base).normalized();
    }
    out
}

/// Upper half-plane point as (re, im).
type HalfPlanePoint = (f64, f64);

fn apply_half_plane(m: &Mobius, z: HalfPlanePoint) -> HalfPlanePoint {
    let [[a, b], [c, d]] = m.m;
    let (x, y) = z;
    let (nr, ni) = (a * x + b, a * y);
    let (dr, di) = (c * x + d, c * y);
    let den = dr * dr + di * di;
    ((nr * dr + ni * di) / den, (ni * dr - nr * di) / den)
}

/// Other endpoint of the edge used to anchor the mesh of a curve in `slot`.
fn anchor_partner(slot: Slot) -> Slot {
    match slot {
        Slot::A => Slot::B,
        Slot::B | Slot::C => Slot::A,
    }
}

fn partners(slot: Slot) -> [Slot; 2] {
    match slot {
        Slot::A => [Slot::B, Slot::C],
        Slot::B => [Slot::A, Slot::C],
        Slot::C => [Slot::A, Slot::B],
    }
}

/// Classical cross ratio factor |(ξ(a⁺), ξ(x), ξ(z), ξ(a⁻))| based at
/// ξ(a⁺)^(n−1) ∩ ξ(a⁻)^(n−1).
fn mesh_ratio(surface: &FuchsianSurface, plus: &CirclePoint, x: &CirclePoint, z: &CirclePoint, minus: &CirclePoint, n: usize) -> Result<f64> {
    let fp = surface.flag(plus, n)?;
    let fm = surface.flag(minus, n)?;
    let base = fp.subspace(n - 1).intersect(&fm.subspace(n - 1))?;
    let fx = surface.flag(x, n)?;
    let fz = surface.flag(z, n)?;
    let v = cross_ratio_vectors([fp.vector(1), fx.vector(1), fz.vector(1), fm.vector(1)], base.basis())?;
    Ok(v.to_f64().abs())
}

/// A normalized mesh {A^k·x, A^k·y : k ∈ ℤ} of a pants-curve lift A.
///
/// `local_*` hold the same data pulled back by the lift's conjugator, where
/// the curve is the untwisted pants element; arithmetic is done there since
/// deep lifts are badly conditioned.
#[derive(Debug, Clone, Serialize)]
pub struct MeshSpec {
    pub lift: CurveLift,
    pub element: Mobius,
    pub repelling: CirclePoint,
    pub attracting: CirclePoint,
    pub x: CirclePoint,
    pub y: CirclePoint,
    /// |g(y)|
    pub g_value: f64,
    /// e^{λ₁(A)−λₙ(A)} in dimension n.
    pub bound: f64,
    pub n: usize,
    pub local_element: Mobius,
    pub local_repelling: CirclePoint,
    pub local_attracting: CirclePoint,
    pub local_x: CirclePoint,
    pub local_y: CirclePoint,
}

impl MeshSpec {
    pub fn inequality_holds(&self) -> bool {
        self.g_value >= 1.0 - 1e-9 && self.g_value < self.bound
    }

    /// The pair {A^k·x, A^k·y}.
    pub fn pair(&self, k: i64) -> (CirclePoint, CirclePoint) {
        let p = self.lift.conjugator.mul(&power(&self.local_element, k));
        (p.apply(&self.local_x), p.apply(&self.local_y))
    }

    /// Signed number of mesh pairs crossing the geodesic from `minus` to
    /// `plus`; positive when the geodesic meets them in the order of k.
    pub fn signed_crossings(&self, minus: &CirclePoint, plus: &CirclePoint) -> Result<i64> {
        let norm = normalizer(&self.local_repelling, &self.local_attracting);
        let mu = scaling_factor(&norm, &self.local_element);
        let (xa, ya) = (coord(&norm, &self.local_x), coord(&norm, &self.local_y));
        if !(xa < 0.0 && ya > 0.0 && mu > 1.0) {
            return Err(Error::Inconsistent("mesh anchors are not on opposite sides of the axis".into()));
        }
        // smallest k for which the k-th pair encloses ζ on the real line
        let first_enclosing = |zeta: f64| -> Result<i64> {
            if !zeta.is_finite() || zeta == 0.0 {
                return Err(Error::Degenerate("geodesic shares an endpoint with the pants curve".into()));
            }
            let ratio = if zeta > 0.0 { zeta / ya } else { zeta.abs() / xa.abs() };
            Ok((ratio.ln() / mu.ln()).floor() as i64 + 1)
        };
        let pull = self.lift.conjugator.inverse();
        let kp = first_enclosing(coord(&norm, &pull.apply(minus)))?;
        let kq = first_enclosing(coord(&norm, &pull.apply(plus)))?;
        Ok(kq - kp)
    }
}

fn bound_for(element: &Mobius, n: usize) -> Result<f64> {
    Ok(((n as f64 - 1.0) * element.translation_length()?).exp())
}

/// Mesh of a lift with the anchor x taken in the orbit of the canonical edge
/// at the lift's repelling point.
pub fn compute_mesh(surface: &FuchsianSurface, lift: &CurveLift, n: usize) -> Result<MeshSpec> {
    let geo = Geometry::new(surface)?;
    mesh_in(&geo, lift, None, n)
}

/// Mesh of a lift for a caller-supplied anchor x on the left of the axis.
pub fn mesh_with_anchor(surface: &FuchsianSurface, lift: &CurveLift, x: &CirclePoint, n: usize) -> Result<MeshSpec> {
    let geo = Geometry::new(surface)?;
    mesh_in(&geo, lift, Some(x), n)
}

fn mesh_in(geo: &Geometry, lift: &CurveLift, x: Option<&CirclePoint>, n: usize) -> Result<MeshSpec> {
    if n < 2 {
        return Err(Error::Precondition("dimension must be at least 2".into()));
    }
    let base = CurveLift::base(lift.pants, lift.slot);
    let element = geo.slot_element(lift.pants, lift.slot);
    let minus = geo.repelling(&base);
    let plus = geo.attracting(&base);
    let norm = normalizer(&minus, &plus);
    let mu = scaling_factor(&norm, &element);
    let local_x = match x {
        Some(x) => lift.conjugator.inverse().apply(x),
        None => geo.pants[lift.pants].rep[anchor_partner(lift.slot).index()],
    };
    let xa = coord(&norm, &local_x);
    if !(xa < 0.0) {
        return Err(Error::Precondition("mesh anchor must lie left of the curve's axis".into()));
    }
    let far = geo.across(&base);
    let mut best: Option<(f64, CirclePoint)> = None;
    for p in partners(far.slot) {
        let y0 = far.conjugator.apply(&geo.pants[far.pants].rep[p.index()]);
        let ya = coord(&norm, &y0);
        if !(ya > 0.0) {
            return Err(Error::Inconsistent("far-side fan is not right of the axis".into()));
        }
        // on the Fuchsian locus g ∝ |x|/y, so the threshold sits near m*
        let m_star = ((xa.abs() / ya).ln() / mu.ln()).floor() as i64;
        for m in m_star - 2..=m_star + 2 {
            let y = power(&element, m).apply(&y0);
            let g = mesh_ratio(geo.surface, &plus, &local_x, &y, &minus, n)?;
            if g >= 1.0 - 1e-12 && best.map_or(true, |(b, _)| g < b) {
                best = Some((g, y));
            }
        }
    }
    let (g_value, local_y) = best.ok_or_else(|| Error::SearchExhausted("no mesh candidate with |g| ≥ 1".into()))?;
    let h = lift.conjugator;
    Ok(MeshSpec {
        lift: *lift,
        element: geo.element(lift),
        repelling: h.apply(&minus),
        attracting: h.apply(&plus),
        x: h.apply(&local_x),
        y: h.apply(&local_y),
        g_value,
        bound: bound_for(&element, n)?,
        n,
        local_element: element,
        local_repelling: minus,
        local_attracting: plus,
        local_x,
        local_y,
    })
}

/// Ideal triangle g·T_j (vertices a⁻, b⁻, c⁻) or g·T′_j (b⁻, a⁻, A·c⁻).
#[derive(Debug, Clone, Copy)]
struct Tri {
    g: Mobius,
    pants: usize,
    prime: bool,
}

/// (kind, first vertex, second vertex), ordered so that an edge and the same
/// edge seen from the neighbouring triangle list matching vertices.
fn tri_edges(prime: bool) -> [(EdgeKind, usize, usize); 3] {
    if prime {
        [(EdgeKind::AB, 0, 1), (EdgeKind::AC, 1, 2), (EdgeKind::BC, 2, 0)]
    } else {
        [(EdgeKind::AB, 1, 0), (EdgeKind::AC, 0, 2), (EdgeKind::BC, 2, 1)]
    }
}

impl Tri {
    fn vertices(&self, geo: &Geometry) -> [CurveLift; 3] {
        let at = |c: Mobius, slot| CurveLift {
            conjugator: c,
            pants: self.pants,
            slot,
        };
        if self.prime {
            let ga = self.g.mul(&geo.slot_element(self.pants, Slot::A)).normalized();
            [at(self.g, Slot::B), at(self.g, Slot::A), at(ga, Slot::C)]
        } else {
            [at(self.g, Slot::A), at(self.g, Slot::B), at(self.g, Slot::C)]
        }
    }

    fn neighbor(&self, geo: &Geometry, kind: EdgeKind) -> Tri {
        let a = geo.slot_element(self.pants, Slot::A);
        let b = geo.slot_element(self.pants, Slot::B);
        let shift = match (self.prime, kind) {
            (_, EdgeKind::AB) => Mobius::IDENTITY,
            (false, EdgeKind::AC) => a.inverse(),
            (false, EdgeKind::BC) => b,
            (true, EdgeKind::AC) => a,
            (true, EdgeKind::BC) => b.inverse(),
        };
        Tri {
            g: self.g.mul(&shift).normalized(),
            pants: self.pants,
            prime: !self.prime,
        }
    }

    fn vertex_index(&self, slot: Slot) -> usize {
        match (self.prime, slot) {
            (false, s) => s.index(),
            (true, Slot::B) => 0,
            (true, Slot::A) => 1,
            (true, Slot::C) => 2,
        }
    }
}

/// Triangles around the repelling point of a slot, before translation by
/// powers of the slot element: (extra prefix by A⁻¹, primed).
fn fan_seeds(slot: Slot) -> [(bool, bool); 2] {
    match slot {
        Slot::A | Slot::B => [(false, false), (false, true)],
        Slot::C => [(false, false), (true, true)],
    }
}

/// Geodesic from `minus` to `plus`, normalized to run from 0 up to ∞.
struct Line {
    norm: Mobius,
    minus: CirclePoint,
    plus: CirclePoint,
}

impl Line {
    fn new(minus: CirclePoint, plus: CirclePoint) -> Self {
        Self {
            norm: normalizer(&minus, &plus),
            minus,
            plus,
        }
    }

    fn pos(&self, p: &CirclePoint) -> f64 {
        coord(&self.norm, p)
    }

    /// Position along the line where the chord {u, v} crosses it.
    fn crossing(u: f64, v: f64) -> Option<f64> {
        if u * v < 0.0 && u.is_finite() && v.is_finite() {
            Some(0.5 * (u.abs() * v.abs()).ln())
        } else {
            None
        }
    }

    fn param_of(&self, z: HalfPlanePoint) -> f64 {
        let w = apply_half_plane(&self.norm, z);
        w.0.hypot(w.1).ln()
    }
}

#[derive(Debug, Clone, Copy)]
struct Vertex {
    id: usize,
    lift: CurveLift,
    point: CirclePoint,
    pos: f64,
}

#[derive(Debug, Clone, Copy)]
struct Crossing {
    class: EdgeId,
    /// endpoint on s₀ (negative side of the normalized line)
    low: Vertex,
    /// endpoint on s₁
    high: Vertex,
    param: f64,
}

impl Crossing {
    fn ids(&self) -> [usize; 2] {
        [self.low.id, self.high.id]
    }
}

#[derive(Debug, Clone, Copy)]
enum Item {
    Edge(Crossing),
    Leaf { near: Vertex, far: Vertex },
}

impl Item {
    fn ids(&self) -> [usize; 2] {
        match self {
            Item::Edge(c) => c.ids(),
            Item::Leaf { near, far, .. } => [near.id, far.id],
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Cursor {
    tri: Tri,
    verts: [Vertex; 3],
    entry: Option<EdgeKind>,
    param: f64,
}

struct FanHit {
    cursor: Cursor,
    /// outermost fan edge crossing the line
    outer: Crossing,
    /// the next one towards the leaf
    inner: Crossing,
}

struct Walker<'g, 'a> {
    geo: &'g Geometry<'a>,
    line: Line,
    next_id: usize,
    steps: usize,
    max_steps: usize,
}

impl<'g, 'a> Walker<'g, 'a> {
    fn new(geo: &'g Geometry<'a>, line: Line, max_steps: usize) -> Self {
        Self {
            geo,
            line,
            next_id: 0,
            steps: 0,
            max_steps,
        }
    }

    fn vertex(&mut self, lift: CurveLift) -> Vertex {
        let point = self.geo.repelling(&lift);
        let v = Vertex {
            id: self.next_id,
            lift,
            point,
            pos: self.line.pos(&point),
        };
        self.next_id += 1;
        v
    }

    fn cursor(&mut self, tri: Tri, keep: &[(usize, Vertex)], entry: Option<EdgeKind>, param: f64) -> Cursor {
        let lifts = tri.vertices(self.geo);
        let mut verts = [None; 3];
        for &(i, v) in keep {
            verts[i] = Some(v);
        }
        let verts = [0, 1, 2].map(|i| verts[i].unwrap_or_else(|| self.vertex(lifts[i])));
        Cursor { tri, verts, entry, param }
    }

    fn crossing(&self, cur: &Cursor, kind: EdgeKind) -> Option<Crossing> {
        let (_, i, j) = tri_edges(cur.tri.prime).into_iter().find(|e| e.0 == kind)?;
        let (u, v) = (cur.verts[i], cur.verts[j]);
        let param = Line::crossing(u.pos, v.pos)?;
        let (low, high) = if u.pos < 0.0 { (u, v) } else { (v, u) };
        Some(Crossing {
            class: EdgeId {
                pants: cur.tri.pants,
                kind,
            },
            low,
            high,
            param,
        })
    }

    /// (exit, the other crossed edge)
    fn exit(&mut self, cur: &Cursor) -> Result<(Crossing, Option<Crossing>)> {
        self.steps += 1;
        if self.steps > self.max_steps {
            return Err(Error::SearchExhausted(format!("walk exceeded {} triangles", self.max_steps)));
        }
        let crossed: Vec<Crossing> = EdgeKind::ALL.iter().filter_map(|k| self.crossing(cur, *k)).collect();
        let ahead = crossed
            .iter()
            .filter(|c| Some(c.class.kind) != cur.entry && c.param > cur.param - 1e-12)
            .max_by(|a, b| a.param.total_cmp(&b.param))
            .copied()
            .ok_or_else(|| Error::Inconsistent("line does not leave the triangle".into()))?;
        let other = crossed.iter().find(|c| c.class.kind != ahead.class.kind).copied();
        Ok((ahead, other))
    }

    fn enter(&mut self, cur: &Cursor, exit: &Crossing) -> Cursor {
        let tri = cur.tri.neighbor(self.geo, exit.class.kind);
        let (_, i, j) = tri_edges(cur.tri.prime).into_iter().find(|e| e.0 == exit.class.kind).unwrap();
        let (_, i2, j2) = tri_edges(tri.prime).into_iter().find(|e| e.0 == exit.class.kind).unwrap();
        self.cursor(tri, &[(i2, cur.verts[i]), (j2, cur.verts[j])], Some(exit.class.kind), exit.param)
    }

    /// Where the leaf through this vertex crosses the line, if it does.
    fn leaf_crossing(&self, v: &Vertex) -> Option<f64> {
        let far = self.geo.attracting(&v.lift);
        Line::crossing(v.pos, self.line.pos(&far))
    }

    fn shared(a: &Crossing, b: &Crossing) -> Option<Vertex> {
        [a.low, a.high].into_iter().find(|v| b.ids().contains(&v.id))
    }

    /// The fan triangle at `apex` whose two other vertices bracket `radius`
    /// in the picture where the apex is 0 and its leaf runs to ∞.
    fn fan_at(&mut self, apex: Vertex, radius: f64) -> Result<FanHit> {
        let lift = apex.lift;
        let norm = normalizer(&apex.point, &self.geo.attracting(&lift));
        let base = CurveLift::base(lift.pants, lift.slot);
        let mu = scaling_factor(
            &normalizer(&self.geo.repelling(&base), &self.geo.attracting(&base)),
            &self.geo.slot_element(lift.pants, lift.slot),
        );
        let a_shift = self.geo.slot_element(lift.pants, Slot::A).inverse();
        let slot_elem = self.geo.slot_element(lift.pants, lift.slot);
        let seed_tri = |m_pow: &Mobius, prefix: bool, prime: bool| Tri {
            g: {
                let g = lift.conjugator.mul(m_pow);
                if prefix {
                    g.mul(&a_shift).normalized()
                } else {
                    g.normalized()
                }
            },
            pants: lift.pants,
            prime,
        };
        let radius_of = |geo: &Geometry, l: &CurveLift| coord(&norm, &geo.repelling(l)).abs();
        let probe = seed_tri(&Mobius::IDENTITY, false, false);
        let r0 = radius_of(self.geo, &probe.vertices(self.geo)[anchor_partner_index(&probe, lift.slot)]);
        let m_c = ((radius / r0).ln() / mu.ln()).floor() as i64;
        let mut fan = Vec::new();
        for m in m_c - 3..=m_c + 3 {
            let pw = power(&slot_elem, m);
            for (prefix, prime) in fan_seeds(lift.slot) {
                let tri = seed_tri(&pw, prefix, prime);
                let w = tri.vertex_index(lift.slot);
                let lifts = tri.vertices(self.geo);
                let mut others: Vec<(f64, usize)> = (0..3)
                    .filter(|i| *i != w)
                    .map(|i| (radius_of(self.geo, &lifts[i]), i))
                    .collect();
                others.sort_by(|a, b| a.0.total_cmp(&b.0));
                fan.push((others[0], others[1], tri, w));
            }
        }
        fan.sort_by(|a, b| a.0 .0.total_cmp(&b.0 .0));
        let pos = fan
            .iter()
            .position(|(lo, hi, _, _)| lo.0 < radius && radius < hi.0)
            .ok_or_else(|| Error::SearchExhausted("fan window does not bracket the line".into()))?;
        if pos + 1 >= fan.len() {
            return Err(Error::SearchExhausted("fan window too small".into()));
        }
        let (_, hi, tri, w) = fan[pos];
        let cursor = self.cursor(tri, &[(w, apex)], None, f64::NEG_INFINITY);
        let outer = self.fan_edge(&cursor, w, hi.1)?;
        let (_, hi2, tri2, w2) = fan[pos + 1];
        let next = Cursor {
            tri: tri2,
            verts: {
                let lifts = tri2.vertices(self.geo);
                let mut vs = [apex; 3];
                for i in 0..3 {
                    if i != w2 {
                        vs[i] = Vertex {
                            id: usize::MAX,
                            lift: lifts[i],
                            point: self.geo.repelling(&lifts[i]),
                            pos: self.line.pos(&self.geo.repelling(&lifts[i])),
                        };
                    }
                }
                vs
            },
            entry: None,
            param: f64::NEG_INFINITY,
        };
        let mut inner = self.fan_edge(&next, w2, hi2.1)?;
        // the inner edge shares the outer one's far vertex only through the apex
        let fresh = self.vertex(next.verts[hi2.1].lift);
        if inner.low.id == usize::MAX {
            inner.low = fresh;
        } else {
            inner.high = fresh;
        }
        let cursor = Cursor {
            entry: Some(outer.class.kind),
            param: outer.param,
            ..cursor
        };
        Ok(FanHit { cursor, outer, inner })
    }

    fn fan_edge(&self, cur: &Cursor, a: usize, b: usize) -> Result<Crossing> {
        let kind = tri_edges(cur.tri.prime)
            .into_iter()
            .find(|e| (e.1 == a && e.2 == b) || (e.1 == b && e.2 == a))
            .map(|e| e.0)
            .unwrap();
        self.crossing(cur, kind)
            .ok_or_else(|| Error::Inconsistent("fan edge does not cross the line".into()))
    }

    /// Radius, in the apex picture, of the line endpoint on the fan's side.
    fn line_radius(&self, apex: &Vertex) -> Result<f64> {
        let norm = normalizer(&apex.point, &self.geo.attracting(&apex.lift));
        let probe = Tri {
            g: apex.lift.conjugator,
            pants: apex.lift.pants,
            prime: false,
        };
        let side = coord(&norm, &self.geo.repelling(&probe.vertices(self.geo)[anchor_partner_index(&probe, apex.lift.slot)]));
        let ends = [coord(&norm, &self.line.minus), coord(&norm, &self.line.plus)];
        ends.into_iter()
            .find(|e| e * side > 0.0)
            .map(f64::abs)
            .ok_or_else(|| Error::Inconsistent("line does not cross the leaf".into()))
    }

    fn point_radius(&self, apex: &Vertex, z: HalfPlanePoint) -> f64 {
        let norm = normalizer(&apex.point, &self.geo.attracting(&apex.lift));
        let w = apply_half_plane(&norm, z);
        (w.0 * w.0 + w.1 * w.1) / w.0.abs()
    }
}

fn anchor_partner_index(tri: &Tri, slot: Slot) -> usize {
    tri.vertex_index(anchor_partner(slot))
}

/// Circle points at the two ends of a lifted edge: s0 lies on the arc of the
/// axis' left side, s1 on its right side.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EdgeLift {
    pub s0: CirclePoint,
    pub s1: CirclePoint,
}

impl From<&Crossing> for EdgeLift {
    fn from(c: &Crossing) -> Self {
        Self {
            s0: c.low.point,
            s1: c.high.point,
        }
    }
}

/// A binodal edge on the axis together with its neighbours.
#[derive(Debug, Clone, Serialize)]
pub struct BinodalLift {
    pub edge: EdgeId,
    pub kind: EdgeType,
    /// position along the axis: log of the height of the crossing point
    pub param: f64,
    pub lift: EdgeLift,
    pub pred: EdgeLift,
    pub succ: EdgeLift,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trace {
    pub word: String,
    /// Axis endpoints of the conjugate of the word that was walked: its axis
    /// meets the base triangles, and `lifts` live along it.
    pub repelling: CirclePoint,
    pub attracting: CirclePoint,
    /// hyperbolic translation length of the word
    pub length: f64,
    pub psi: PsiEncoding,
    /// one period of binodal lifts plus the translate of the first
    pub lifts: Vec<BinodalLift>,
}

#[derive(Debug, Clone, Serialize)]
pub enum TraceOutcome {
    /// The axis is a closed leaf: no edge of 𝒬 crosses it.
    ClosedLeaf { word: String, length: f64 },
    Encoded(Trace),
}

impl TraceOutcome {
    pub fn counts(&self) -> Result<CountPair> {
        match self {
            TraceOutcome::ClosedLeaf { .. } => Ok(CountPair { r: 0, s: 0 }),
            TraceOutcome::Encoded(t) => r_and_s(&t.psi),
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            TraceOutcome::ClosedLeaf { length, .. } => *length,
            TraceOutcome::Encoded(t) => t.length,
        }
    }

    pub fn trace(&self) -> Option<&Trace> {
        match self {
            TraceOutcome::Encoded(t) => Some(t),
            TraceOutcome::ClosedLeaf { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TraceOptions {
    /// Cap on triangles visited; `None` means 400·(word length + 20).
    pub max_steps: Option<usize>,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self { max_steps: None }
    }
}

fn same_point(p: &CirclePoint, q: &CirclePoint) -> bool {
    p.distance(q) < 1e-8
}

enum Located {
    Inside(Tri),
    ClosedLeaf,
}

/// Walk from the base triangle T₀ along the geodesic through its centre and
/// `target`, returning the triangle containing `target`.
fn locate(geo: &Geometry, target: HalfPlanePoint, axis: (&CirclePoint, &CirclePoint), max_steps: usize) -> Result<Located> {
    let t0 = Tri {
        g: Mobius::IDENTITY,
        pants: 0,
        prime: false,
    };
    let verts = t0.vertices(geo).map(|l| geo.repelling(&l));
    // the point of T₀ that is the centre of the ideal triangle (0, 1, ∞)
    let to_std = {
        let n0 = normalizer(&verts[0], &verts[2]);
        let one = coord(&n0, &verts[1]);
        let sign = one.signum();
        Mobius::new(sign / one.abs().sqrt(), 0.0, 0.0, one.abs().sqrt()).mul(&n0).normalized()
    };
    let centre_std = (0.5 * to_std_sign(&to_std, &verts[1]), 3f64.sqrt() / 2.0);
    let centre = apply_half_plane(&to_std.inverse(), centre_std);
    let (minus, plus) = geodesic_through(centre, target)?;
    let line = Line::new(minus, plus);
    let goal = line.param_of(target);
    let mut walker = Walker::new(geo, line, max_steps);
    let mut cur = walker.cursor(t0, &[], None, walker.line.param_of(centre));
    loop {
        let (exit, _) = walker.exit(&cur)?;
        if exit.param > goal {
            return Ok(Located::Inside(cur.tri));
        }
        if let Some(entry) = cur.entry.and_then(|k| walker.crossing(&cur, k)) {
            if let Some(w) = Walker::shared(&entry, &exit) {
                if let Some(leaf) = walker.leaf_crossing(&w).filter(|lp| *lp > exit.param) {
                    let far_point = geo.attracting(&w.lift);
                    let (am, ap) = axis;
                    if (same_point(&w.point, am) && same_point(&far_point, ap))
                        || (same_point(&w.point, ap) && same_point(&far_point, am))
                    {
                        return Ok(Located::ClosedLeaf);
                    }
                    if leaf > goal {
                        let r = walker.point_radius(&w, target);
                        return Ok(Located::Inside(walker.fan_at(w, r)?.cursor.tri));
                    }
                    let far = walker.vertex(geo.across(&w.lift));
                    let r = walker.line_radius(&far)?;
                    let hit = walker.fan_at(far, r)?;
                    if hit.outer.param > goal {
                        let r = walker.point_radius(&far, target);
                        return Ok(Located::Inside(walker.fan_at(far, r)?.cursor.tri));
                    }
                    cur = hit.cursor;
                    continue;
                }
            }
        }
        cur = walker.enter(&cur, &exit);
    }
}

fn to_std_sign(m: &Mobius, p: &CirclePoint) -> f64 {
    let v = coord(m, p);
    if v > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Endpoints (behind p, beyond q) of the geodesic through two points of ℍ².
fn geodesic_through(p: HalfPlanePoint, q: HalfPlanePoint) -> Result<(CirclePoint, CirclePoint)> {
    let dx = q.0 - p.0;
    if dx.abs() < 1e-12 * (1.0 + p.0.abs()) {
        return Ok(if q.1 > p.1 {
            (CirclePoint::real(p.0), CirclePoint::infinity())
        } else {
            (CirclePoint::infinity(), CirclePoint::real(p.0))
        });
    }
    let c = (q.0 * q.0 + q.1 * q.1 - p.0 * p.0 - p.1 * p.1) / (2.0 * dx);
    let r = (p.0 - c).hypot(p.1);
    if !r.is_finite() {
        return Err(Error::Degenerate("points too close to locate a geodesic".into()));
    }
    Ok(if dx > 0.0 {
        (CirclePoint::real(c - r), CirclePoint::real(c + r))
    } else {
        (CirclePoint::real(c + r), CirclePoint::real(c - r))
    })
}

/// ψ(X) of a word on the genus-2 Fuchsian surface, by walking the axis of X
/// through the lifted pants triangulation over three periods.
pub fn trace_psi(surface: &FuchsianSurface, word: &str, n: usize, opts: TraceOptions) -> Result<TraceOutcome> {
    let geo = Geometry::new(surface)?;
    // y·c·y⁻¹ and c close up to the same geodesic on the surface. The axis of
    // the conjugate sits far out, where its endpoints crowd together and the
    // pulled-back line drifts too much to close up after a period.
    let (_, core) = cyclic_split(word);
    if core.is_empty() {
        return Err(Error::Precondition(format!("word {word:?} is trivial")));
    }
    let x = surface.word(&core)?.normalized();
    let (minus, plus) = x.fixed_points()?;
    let length = x.translation_length()?;
    let max_steps = opts.max_steps.unwrap_or(400 * (word.len() + 20));
    let axis_line = Line::new(minus, plus);
    let start_point = apply_half_plane(&axis_line.norm.inverse(), (0.0, 1.0));
    let start = match locate(&geo, start_point, (&minus, &plus), max_steps)? {
        Located::ClosedLeaf => {
            return Ok(TraceOutcome::ClosedLeaf {
                word: word.to_string(),
                length,
            })
        }
        Located::Inside(t) => t,
    };
    // continue with the conjugate whose axis runs through the base triangles;
    // deep lifts lose precision quickly
    let pull = start.g.inverse();
    let (local_minus, local_plus) = (pull.apply(&minus), pull.apply(&plus));
    let line = Line::new(local_minus, local_plus);
    let from = line.param_of(apply_half_plane(&pull, start_point));
    let base_tri = Tri {
        g: Mobius::IDENTITY,
        ..start
    };
    let mut walker = Walker::new(&geo, line, max_steps);
    let items = walk_axis(&mut walker, base_tri, from, from + 2.0 * length + 2.0)?;
    let encoded = encode(&geo, &items, word, (local_minus, local_plus), from, length, n)?;
    Ok(TraceOutcome::Encoded(encoded))
}

fn walk_axis(walker: &mut Walker, start: Tri, from: f64, stop: f64) -> Result<Vec<Item>> {
    let mut items = Vec::new();
    let mut cur = walker.cursor(start, &[], None, from);
    loop {
        let (exit, other) = walker.exit(&cur)?;
        if exit.param > stop {
            return Ok(items);
        }
        items.push(Item::Edge(exit));
        let behind = cur.entry.and_then(|k| walker.crossing(&cur, k)).or(other);
        let spiral = behind
            .and_then(|b| Walker::shared(&b, &exit))
            .and_then(|w| walker.leaf_crossing(&w).filter(|lp| *lp > exit.param).map(|_| w));
        if let Some(w) = spiral {
            let far = walker.vertex(walker.geo.across(&w.lift));
            items.push(Item::Leaf { near: w, far });
            let r = walker.line_radius(&far)?;
            let hit = walker.fan_at(far, r)?;
            items.push(Item::Edge(hit.inner));
            items.push(Item::Edge(hit.outer));
            cur = hit.cursor;
            continue;
        }
        cur = walker.enter(&cur, &exit);
    }
}

struct Binodal {
    index: usize,
    crossing: Crossing,
    kind: EdgeType,
    pred: Crossing,
    succ: Crossing,
}

fn encode(geo: &Geometry, items: &[Item], word: &str, axis: (CirclePoint, CirclePoint), from: f64, length: f64, n: usize) -> Result<Trace> {
    let mut binodal = Vec::new();
    for i in 1..items.len().saturating_sub(1) {
        let Item::Edge(c) = items[i] else { continue };
        let prev = items[i - 1].ids();
        let next = items[i + 1].ids();
        let node = |id: usize| prev.contains(&id) || next.contains(&id);
        if !(node(c.low.id) && node(c.high.id)) {
            continue;
        }
        let kind = if next.contains(&c.high.id) && prev.contains(&c.low.id) {
            EdgeType::Z
        } else if next.contains(&c.low.id) && prev.contains(&c.high.id) {
            EdgeType::S
        } else {
            return Err(Error::Inconsistent(format!("edge {i} on the axis is binodal but neither Z nor S")));
        };
        let (Item::Edge(pred), Item::Edge(succ)) = (items[i - 1], items[i + 1]) else {
            return Err(Error::Inconsistent("binodal edge next to a closed leaf".into()));
        };
        binodal.push(Binodal {
            index: i,
            crossing: c,
            kind,
            pred,
            succ,
        });
    }
    let first = binodal
        .iter()
        .position(|b| b.crossing.param >= from)
        .ok_or_else(|| Error::SearchExhausted("no binodal edge found on the axis".into()))?;
    let p1 = binodal[first].crossing.param;
    if binodal.last().map_or(true, |b| b.crossing.param < p1 + 0.5 * length) {
        return Err(Error::SearchExhausted("axis walk shorter than a period".into()));
    }
    let end = (first + 1..binodal.len())
        .min_by(|&a, &b| {
            let da = (binodal[a].crossing.param - p1 - length).abs();
            let db = (binodal[b].crossing.param - p1 - length).abs();
            da.total_cmp(&db)
        })
        .unwrap();
    let window = &binodal[first..=end];
    let closing = &binodal[end];
    if (closing.crossing.param - p1 - length).abs() > 1e-5 * (1.0 + length)
        || closing.crossing.class != binodal[first].crossing.class
        || closing.kind != binodal[first].kind
    {
        return Err(Error::Inconsistent("binodal edges are not periodic under the word".into()));
    }
    let m = window.len() - 1;
    let mut tuples = Vec::with_capacity(m);
    for i in 0..m {
        let (e, e2) = (&window[i], &window[i + 1]);
        let leaves: Vec<Vertex> = items[e.index + 1..e2.index]
            .iter()
            .filter_map(|it| match it {
                Item::Leaf { near, .. } => Some(*near),
                _ => None,
            })
            .collect();
        let pivot = if e.kind != e2.kind {
            if !leaves.is_empty() {
                return Err(Error::Inconsistent("closed leaf between binodal edges of different type".into()));
            }
            Walker::shared(&e.crossing, &e2.crossing)
                .ok_or_else(|| Error::Inconsistent("binodal edges of different type without a common vertex".into()))?
        } else {
            if leaves.len() != 1 {
                return Err(Error::Inconsistent(format!(
                    "{} closed leaves between binodal edges of the same type",
                    leaves.len()
                )));
            }
            leaves[0]
        };
        let mesh = mesh_in(geo, &pivot.lift, None, n)?;
        let t = mesh.signed_crossings(&axis.0, &axis.1)?;
        tuples.push(PsiTuple {
            pred: e.pred.class,
            edge: e.crossing.class,
            succ: e.succ.class,
            kind: e.kind,
            t,
        });
    }
    let lifts = window
        .iter()
        .map(|b| BinodalLift {
            edge: b.crossing.class,
            kind: b.kind,
            param: b.crossing.param,
            lift: (&b.crossing).into(),
            pred: (&b.pred).into(),
            succ: (&b.succ).into(),
        })
        .collect();
    Ok(Trace {
        word: word.to_string(),
        repelling: axis.0,
        attracting: axis.1,
        length,
        psi: PsiEncoding::new(tuples),
        lifts,
    })
}

/// Coordinates (α, β) of the line (ξ(a)^(p) + ξ(b)^(n−p−1)) ∩ H on the basis
/// ξ(x⁻)^(1), ξ(x⁺)^(1) of H.
fn plane_point(flags: (&Flag<f64>, &Flag<f64>), axis: (&Vector<f64>, &Vector<f64>), p: usize) -> Result<[f64; 2]> {
    let (fa, fb) = flags;
    let n = fa.dim();
    let mut span: Vec<Vector<f64>> = fa.prefix(p).to_vec();
    span.extend_from_slice(fb.prefix(n - p - 1));
    let hyper = Subspace::span(n, &span)?;
    if hyper.dim() != n - 1 {
        return Err(Error::Degenerate("edge endpoints are not transverse".into()));
    }
    let normal = hyper
        .annihilator()
        .into_iter()
        .next()
        .ok_or_else(|| Error::Degenerate("hyperplane has no normal".into()))?;
    let dot = |u: &Vector<f64>| u.iter().zip(normal.iter()).map(|(a, b)| a * b).sum::<f64>();
    Ok([dot(axis.1), -dot(axis.0)])
}

/// log(ξ(x⁻), y, z, ξ(x⁺)) for points y, z of H in axis coordinates; errors
/// when y, z are not in that order along one segment.
pub fn segment_length(y: [f64; 2], z: [f64; 2]) -> Result<f64> {
    let cr = (y[0] * z[1]) / (y[1] * z[0]);
    if !cr.is_finite() || cr <= 0.0 {
        return Err(Error::Precondition("segment endpoints lie on different arcs".into()));
    }
    let l = cr.ln();
    if l < -1e-9 {
        return Err(Error::Precondition("segment endpoints are out of order".into()));
    }
    Ok(l.max(0.0))
}

struct PlaneFrame {
    n: usize,
    minus: Vector<f64>,
    plus: Vector<f64>,
}

impl PlaneFrame {
    fn new(surface: &FuchsianSurface, trace: &Trace, n: usize) -> Result<Self> {
        Ok(Self {
            n,
            minus: surface.flag(&trace.repelling, n)?.vector(1).clone(),
            plus: surface.flag(&trace.attracting, n)?.vector(1).clone(),
        })
    }

    fn point(&self, surface: &FuchsianSurface, e: &EdgeLift, p: usize) -> Result<[f64; 2]> {
        let fa = surface.flag(&e.s0, self.n)?;
        let fb = surface.flag(&e.s1, self.n)?;
        plane_point((&fa, &fb), (&self.minus, &self.plus), p)
    }
}

/// l(c_p(ẽ_i)) for p = 0, …, n−1.
pub fn crossing_lengths(surface: &FuchsianSurface, trace: &Trace, i: usize, n: usize) -> Result<Vec<f64>> {
    let b = trace.lifts.get(i).ok_or_else(|| Error::Precondition("no such binodal lift".into()))?;
    let frame = PlaneFrame::new(surface, trace, n)?;
    (0..n)
        .map(|p| segment_length(frame.point(surface, &b.pred, p)?, frame.point(surface, &b.succ, p)?))
        .collect()
}

/// l(w_p(ẽ_i, ẽ_{i+1})) for p = 0, …, n−1.
pub fn winding_lengths(surface: &FuchsianSurface, trace: &Trace, i: usize, n: usize) -> Result<Vec<f64>> {
    let (b, b2) = match (trace.lifts.get(i), trace.lifts.get(i + 1)) {
        (Some(b), Some(b2)) => (b, b2),
        _ => return Err(Error::Precondition("no such consecutive binodal pair".into())),
    };
    let frame = PlaneFrame::new(surface, trace, n)?;
    (0..n)
        .map(|p| segment_length(frame.point(surface, &b.pred, p)?, frame.point(surface, &b2.succ, p)?))
        .collect()
}

/// A measured segment length next to the lower bound it should satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl SegmentCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs >= self.rhs - tol
    }
}

/// Average crossing length over p against K.
pub fn crossing_check(surface: &FuchsianSurface, trace: &Trace, i: usize, n: usize, k: f64) -> Result<SegmentCheck> {
    let ls = crossing_lengths(surface, trace, i, n)?;
    Ok(SegmentCheck {
        lhs: ls.iter().sum::<f64>() / n as f64,
        rhs: k,
    })
}

/// Winding length against max{0, |t| − 2}·L: the average over p when the two
/// edges have the same type, l(w_1) + l(w_{n−2}) otherwise.
pub fn winding_check(surface: &FuchsianSurface, trace: &Trace, i: usize, n: usize, l: f64) -> Result<SegmentCheck> {
    let ls = winding_lengths(surface, trace, i, n)?;
    let tuple = trace.psi.tuples.get(i).ok_or_else(|| Error::Precondition("no such tuple".into()))?;
    let same = trace.lifts[i].kind == trace.lifts[i + 1].kind;
    let lhs = if same {
        ls.iter().sum::<f64>() / n as f64
    } else {
        ls[1.min(n - 1)] + ls[n.saturating_sub(2)]
    };
    Ok(SegmentCheck {
        lhs,
        rhs: winding_excess(tuple.t) as f64 * l,
    })
}

/// The tuple alphabet without t: each edge with its two orderings of the
/// other edges and both types.
fn tuple_alphabet(decomp: &PantsDecomposition) -> Vec<(EdgeId, EdgeId, EdgeId, EdgeType)> {
    let mut out = Vec::new();
    for e in decomp.edges() {
        let others: Vec<EdgeId> = decomp.edges().into_iter().filter(|o| o.pants == e.pants && o.kind != e.kind).collect();
        for (p, s) in [(others[0], others[1]), (others[1], others[0])] {
            for kind in [EdgeType::Z, EdgeType::S] {
                out.push((p, e, s, kind));
            }
        }
    }
    out
}

/// Number of t-vectors of length `len` with Σ max{0, |t|−2} ≤ cap.
fn t_vectors(len: usize, cap: usize) -> u128 {
    // ways[s] = number of vectors so far with excess exactly s
    let mut ways = vec![0u128; cap + 1];
    ways[0] = 1;
    for _ in 0..len {
        let mut next = vec![0u128; cap + 1];
        for (s, w) in ways.iter().enumerate() {
            if *w == 0 {
                continue;
            }
            next[s] += 5 * w;
            for extra in 1..=cap - s {
                next[s + extra] += 2 * w;
            }
        }
        ways = next;
    }
    ways.iter().sum()
}

/// Number of t-free sequences of length r (read cyclically) passing
/// `validate_psi`, found by exhaustive enumeration.
pub fn count_valid_skeletons(decomp: &PantsDecomposition, r: usize) -> u128 {
    let alphabet = tuple_alphabet(decomp);
    let mut count = 0u128;
    let mut idx = vec![0usize; r];
    if r == 0 {
        return 0;
    }
    loop {
        let tuples = idx
            .iter()
            .map(|&i| {
                let (pred, edge, succ, kind) = alphabet[i];
                PsiTuple { pred, edge, succ, kind, t: 0 }
            })
            .collect();
        if validate_psi(&PsiEncoding::new(tuples), decomp).is_empty() {
            count += 1;
        }
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < alphabet.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == r {
                return count;
            }
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Cyclic encodings (up to rotation) with exactly r tuples and s ≤ s_max that
/// pass `validate_psi`, counted by Burnside over rotations of the exhaustive
/// skeleton enumeration.
pub fn count_encodings(decomp: &PantsDecomposition, r: usize, s_max: usize) -> u128 {
    if r == 0 {
        return 0;
    }
    let fixed: u128 = (0..r)
        .map(|k| {
            let block = gcd(k, r);
            let repeats = r / block;
            count_valid_skeletons(decomp, block) * t_vectors(block, s_max / repeats)
        })
        .sum();
    fixed / r as u128
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::FuchsianSpec;

    fn surface() -> FuchsianSurface {
        FuchsianSurface::genus_two(FuchsianSpec {
            lengths: [2.0, 2.4, 2.9],
            twists: [0.3, -0.4, 0.1],
        })
        .unwrap()
    }

    fn tuple(t: i64) -> PsiTuple {
        PsiTuple {
            pred: EdgeId::from_number(1),
            edge: EdgeId::from_number(0),
            succ: EdgeId::from_number(2),
            kind: EdgeType::Z,
            t,
        }
    }

    #[test]
    fn counters() {
        let psi = PsiEncoding::new(vec![tuple(3), tuple(-1), tuple(0)]);
        assert_eq!(r_and_s(&psi).unwrap(), CountPair { r: 3, s: 1 });
        let psi = PsiEncoding::new(vec![tuple(5)]);
        assert_eq!(r_and_s(&psi).unwrap(), CountPair { r: 1, s: 3 });
        let psi = PsiEncoding::new(vec![tuple(2), tuple(-2), tuple(1)]);
        assert_eq!(r_and_s(&psi).unwrap().s, 0);
        assert!(r_and_s(&PsiEncoding::new(vec![])).is_err());
    }

    #[test]
    fn validation_flags_bad_tuples() {
        let d = PantsDecomposition::standard(2).unwrap();
        assert_eq!(validate_psi(&PsiEncoding::new(vec![]), &d).len(), 1);
        let mut bad = tuple(0);
        bad.pred = EdgeId::from_number(4);
        assert_eq!(validate_psi(&PsiEncoding::new(vec![bad]), &d).len(), 1);
    }

    #[test]
    fn rotation_equivalence() {
        let psi = PsiEncoding::new(vec![tuple(3), tuple(-1), tuple(0)]);
        assert!(psi.same_cycle(&psi.rotated(2)));
        let other = PsiEncoding::new(vec![tuple(-1), tuple(3), tuple(1)]);
        assert!(!psi.same_cycle(&other));
    }

    #[test]
    fn t_vector_counts_match_enumeration() {
        for len in 1..=3 {
            for cap in 0..=4 {
                let mut brute = 0u128;
                let range: Vec<i64> = (-(cap as i64) - 2..=cap as i64 + 2).collect();
                let mut idx = vec![0usize; len];
                loop {
                    let s: usize = idx.iter().map(|&i| winding_excess(range[i])).sum();
                    if s <= cap {
                        brute += 1;
                    }
                    let mut k = 0;
                    loop {
                        idx[k] += 1;
                        if idx[k] < range.len() {
                            break;
                        }
                        idx[k] = 0;
                        k += 1;
                        if k == len {
                            break;
                        }
                    }
                    if k == len {
                        break;
                    }
                }
                assert_eq!(t_vectors(len, cap), brute, "len {len} cap {cap}");
            }
        }
    }

    #[test]
    fn burnside_count_matches_orbit_enumeration() {
        let d = PantsDecomposition::standard(2).unwrap();
        let alphabet = tuple_alphabet(&d);
        let ts: Vec<i64> = (-3..=3).collect();
        for r in 1..=2usize {
            let mut seen = std::collections::BTreeSet::new();
            let mut idx = vec![0usize; 2 * r];
            let radix: Vec<usize> = (0..2 * r).map(|k| if k < r { alphabet.len() } else { ts.len() }).collect();
            'outer: loop {
                let tuples: Vec<PsiTuple> = (0..r)
                    .map(|k| {
                        let (pred, edge, succ, kind) = alphabet[idx[k]];
                        PsiTuple {
                            pred,
                            edge,
                            succ,
                            kind,
                            t: ts[idx[r + k]],
                        }
                    })
                    .collect();
                let psi = PsiEncoding::new(tuples);
                if r_and_s(&psi).unwrap().s <= 1 && validate_psi(&psi, &d).is_empty() {
                    seen.insert(psi.canonical().tuples);
                }
                let mut k = 0;
                loop {
                    idx[k] += 1;
                    if idx[k] < radix[k] {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                    if k == 2 * r {
                        break 'outer;
                    }
                }
            }
            assert_eq!(count_encodings(&d, r, 1), seen.len() as u128, "r = {r}");
        }
    }

    #[test]
    fn pants_curve_words_are_closed_leaves() {
        let s = surface();
        for w in ["a", "b", "AB", "aa", "Tbat", "SBs", "sbS"] {
            let out = trace_psi(&s, w, 2, TraceOptions::default()).unwrap();
            assert!(matches!(out, TraceOutcome::ClosedLeaf { .. }), "{w}");
            assert_eq!(out.counts().unwrap().r, 0);
        }
    }

    #[test]
    fn traced_encodings_validate_and_are_conjugation_invariant() {
        let s = surface();
        let d = s.decomposition();
        for w in ["aB", "aab", "as", "st", "aBt", "abst", "sTab"] {
            let out = trace_psi(&s, w, 2, TraceOptions::default()).unwrap();
            let tr = out.trace().unwrap_or_else(|| panic!("{w} traced as a closed leaf"));
            assert!(validate_psi(&tr.psi, &d).is_empty(), "{w}: {:?}", validate_psi(&tr.psi, &d));
            for y in ["s", "Ab", "tS"] {
                let conj = format!("{y}{w}{}", crate::hyperbolic::invert_word(y));
                let other = trace_psi(&s, &conj, 2, TraceOptions::default()).unwrap();
                assert!(tr.psi.same_cycle(&other.trace().unwrap().psi), "{w} vs {conj}");
            }
        }
    }

    #[test]
    fn mesh_inequality_and_anchor_shift() {
        let s = surface();
        for pants in 0..2 {
            for slot in Slot::ALL {
                for n in [2, 3, 4] {
                    let lift = CurveLift::base(pants, slot);
                    let mesh = compute_mesh(&s, &lift, n).unwrap();
                    assert!(mesh.inequality_holds(), "{pants} {slot:?} {n}: {} vs {}", mesh.g_value, mesh.bound);
                    let shifted = mesh_with_anchor(&s, &lift, &mesh.element.apply(&mesh.x), n).unwrap();
                    assert!(shifted.y.distance(&mesh.element.apply(&mesh.y)) < 1e-8);
                    let y = s.word("sT").unwrap();
                    let moved = compute_mesh(&s, &lift.conjugated(&y), n).unwrap();
                    assert!(moved.x.distance(&y.apply(&mesh.x)) < 1e-6);
                    assert!(moved.y.distance(&y.apply(&mesh.y)) < 1e-6);
                }
            }
        }
    }

    const SAMPLE_WORDS: [&str; 16] = [
        "aB", "aab", "as", "st", "aBt", "abst", "sTab", "aaaB", "asat", "aBBs", "abbbt", "sats", "tAsB", "aaaaab", "asbt", "aTbS",
    ];

    #[test]
    fn length_bound_and_segments_hold_on_sample_curves() {
        use crate::degeneration::{compute_k, compute_l, fuchsian_boundary, fuchsian_invariants, length_lower_bound};
        let s = surface();
        let d = s.decomposition();
        let (k, _) = compute_k(&d, &fuchsian_invariants(&s, 2).unwrap()).unwrap();
        let l = compute_l(&fuchsian_boundary(&s, 2).unwrap()).unwrap();
        for w in SAMPLE_WORDS {
            let out = trace_psi(&s, w, 2, TraceOptions::default()).unwrap();
            let tr = out.trace().unwrap();
            let c = r_and_s(&tr.psi).unwrap();
            assert!(tr.length >= length_lower_bound(c.r, c.s, k, l).unwrap(), "{w}");
            for n in [2, 3] {
                for i in 0..c.r {
                    assert!(crossing_check(&s, tr, i, n, k).unwrap().holds(1e-9), "{w} crossing {i} n={n}");
                    assert!(winding_check(&s, tr, i, n, l).unwrap().holds(1e-9), "{w} winding {i} n={n}");
                }
            }
        }
    }

    #[test]
    fn cyclic_rotations_of_a_word_share_an_encoding() {
        let s = surface();
        for w in ["abst", "aaaB", "tAsB"] {
            let first = trace_psi(&s, w, 2, TraceOptions::default()).unwrap();
            for k in 1..w.len() {
                let rot = format!("{}{}", &w[k..], &w[..k]);
                let other = trace_psi(&s, &rot, 2, TraceOptions::default()).unwrap();
                assert!(first.trace().unwrap().psi.same_cycle(&other.trace().unwrap().psi), "{w} vs {rot}");
            }
        }
    }

    #[test]
    fn winding_around_a_curve_grows_with_powers() {
        let s = surface();
        let ts: Vec<Vec<i64>> = ["aB", "aaaB", "aaaaaB"]
            .iter()
            .map(|w| trace_psi(&s, w, 2, TraceOptions::default()).unwrap().trace().unwrap().psi.canonical().t_values())
            .collect();
        assert_eq!(ts[0], vec![-2, 2]);
        assert_eq!(ts[1], vec![-2, 4]);
        assert_eq!(ts[2], vec![-2, 6]);
    }

    #[test]
    fn walk_cap_is_reported() {
        let s = surface();
        let err = trace_psi(&s, "abst", 2, TraceOptions { max_steps: Some(3) }).unwrap_err();
        assert!(matches!(err, Error::SearchExhausted(_)));
    }
}
