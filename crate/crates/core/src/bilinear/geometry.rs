use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// A point `(τ, ξ)`.
pub type Point = (f64, f64);

fn sub(a: Point, b: Point) -> Point {
    (a.0 - b.0, a.1 - b.1)
}

fn add(a: Point, b: Point) -> Point {
    (a.0 + b.0, a.1 + b.1)
}

fn scale(a: Point, c: f64) -> Point {
    (a.0 * c, a.1 * c)
}

fn cross(a: Point, b: Point) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

/// Parallelogram stored as an offset plus vertices relative to it.
///
/// The offset carries the large coordinates (`τ ~ N³`); all geometry is done
/// on the small local vertices, so thin slabs far from the origin keep full
/// relative precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Parallelogram {
    origin_offset: Point,
    vertices: [Point; 4],
}

impl Parallelogram {
    /// Vertices `v1..v4` in order around the boundary, relative to
    /// `origin_offset`.
    pub fn new(origin_offset: Point, vertices: [Point; 4]) -> Result<Self> {
        let [v1, v2, v3, v4] = vertices;
        let finite = vertices
            .iter()
            .chain(std::iter::once(&origin_offset))
            .all(|p| p.0.is_finite() && p.1.is_finite());
        if !finite {
            return Err(LabError::Invariant("parallelogram has non-finite coordinates".into()));
        }
        let closure = sub(add(v1, v3), add(v2, v4));
        let size = vertices
            .iter()
            .map(|p| p.0.abs().max(p.1.abs()))
            .fold(0.0, f64::max);
        if closure.0.abs().max(closure.1.abs()) > 1e-9 * size.max(f64::MIN_POSITIVE) {
            return Err(LabError::Invariant(format!(
                "v1 + v3 != v2 + v4 (residual {closure:?})"
            )));
        }
        let p = Parallelogram {
            origin_offset,
            vertices,
        };
        if !(p.area() > 0.0) {
            return Err(LabError::Invariant("degenerate parallelogram".into()));
        }
        Ok(p)
    }

    /// From absolute vertices, using `v1` as the offset.
    pub fn from_absolute(vertices: [Point; 4]) -> Result<Self> {
        let o = vertices[0];
        Self::new(o, vertices.map(|v| sub(v, o)))
    }

    pub fn origin_offset(&self) -> Point {
        self.origin_offset
    }

    pub fn local_vertices(&self) -> [Point; 4] {
        self.vertices
    }

    pub fn vertices(&self) -> [Point; 4] {
        self.vertices.map(|v| add(v, self.origin_offset))
    }

    pub fn e1(&self) -> Point {
        sub(self.vertices[1], self.vertices[0])
    }

    pub fn e2(&self) -> Point {
        sub(self.vertices[3], self.vertices[0])
    }

    /// `cross(e1, e2)`.
    pub fn det(&self) -> f64 {
        cross(self.e1(), self.e2())
    }

    pub fn area(&self) -> f64 {
        self.det().abs()
    }

    /// Local point `v1 + σ e1 + t e2`.
    pub fn local_point(&self, sigma: f64, t: f64) -> Point {
        add(self.vertices[0], add(scale(self.e1(), sigma), scale(self.e2(), t)))
    }

    /// Frame coordinates `(σ, t)` of a local point.
    pub fn frame_coords(&self, local: Point) -> (f64, f64) {
        let d = sub(local, self.vertices[0]);
        let det = self.det();
        (cross(d, self.e2()) / det, cross(self.e1(), d) / det)
    }

    pub fn contains(&self, point: Point) -> bool {
        let (s, t) = self.frame_coords(sub(point, self.origin_offset));
        (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t)
    }

    /// The point reflection `{−z : z ∈ P}`; keeps `e1`, `e2`.
    pub fn reflected(&self) -> Self {
        let [v1, v2, v3, v4] = self.vertices;
        let neg = |p: Point| (-p.0, -p.1);
        Parallelogram {
            origin_offset: neg(self.origin_offset),
            vertices: [neg(v3), neg(v4), neg(v1), neg(v2)],
        }
    }

    /// The translate centred at the origin.
    pub fn centered(&self) -> Self {
        let (e1, e2) = (self.e1(), self.e2());
        let v1 = scale(add(e1, e2), -0.5);
        Parallelogram {
            origin_offset: (0.0, 0.0),
            vertices: [v1, add(v1, e1), add(v1, add(e1, e2)), add(v1, e2)],
        }
    }

    /// Whether `other` is a translate of `self` (same edge vectors, up to
    /// roundoff relative to the vertex coordinates).
    pub fn is_translate_of(&self, other: &Parallelogram) -> bool {
        let size = self
            .vertices
            .iter()
            .chain(other.vertices.iter())
            .map(|p| p.0.abs().max(p.1.abs()))
            .fold(0.0, f64::max);
        let close = |a: Point, b: Point| (a.0 - b.0).abs().max((a.1 - b.1).abs()) <= 1e-12 * size;
        close(self.e1(), other.e1()) && close(self.e2(), other.e2())
    }

    /// Local vertices in counter-clockwise order.
    fn ccw_local(&self) -> Vec<Point> {
        let mut v = self.vertices.to_vec();
        if self.det() < 0.0 {
            v.reverse();
        }
        v
    }
}

/// Signed shoelace area.
pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    0.5 * (0..n).map(|i| cross(poly[i], poly[(i + 1) % n])).sum::<f64>()
}

/// Sutherland–Hodgman clipping of `subject` by the convex counter-clockwise
/// polygon `clip`.
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut out = subject.to_vec();
    for i in 0..clip.len() {
        if out.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let edge = sub(b, a);
        let side = |p: Point| cross(edge, sub(p, a));
        let input = std::mem::take(&mut out);
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let (sc, sp) = (side(cur), side(prev));
            if sc >= 0.0 {
                if sp < 0.0 {
                    out.push(add(prev, scale(sub(cur, prev), sp / (sp - sc))));
                }
                out.push(cur);
            } else if sp >= 0.0 {
                out.push(add(prev, scale(sub(cur, prev), sp / (sp - sc))));
            }
        }
    }
    out
}

/// `|P ∩ Q|` by exact clipping in the local frame of `P`.
pub fn intersection_area(p: &Parallelogram, q: &Parallelogram) -> f64 {
    let shift = sub(q.origin_offset, p.origin_offset);
    let qv: Vec<Point> = q.ccw_local().into_iter().map(|v| add(v, shift)).collect();
    polygon_area(&clip_convex(&p.ccw_local(), &qv)).abs()
}

fn tent(x: f64) -> f64 {
    (1.0 - (x - 1.0).abs()).max(0.0)
}

/// `(1_P * 1_Q)(z) = |P ∩ (z − Q)|` by convex clipping.
pub fn indicator_convolution_clipped(p: &Parallelogram, q: &Parallelogram, z: Point) -> f64 {
    // z − Q in P's local frame: offset z − Q.off − P.off, vertices −q_i
    let shift = sub(sub(z, q.origin_offset), p.origin_offset);
    let mut zq: Vec<Point> = q.vertices.iter().map(|v| sub(shift, *v)).collect();
    // point reflection preserves orientation
    if q.det() < 0.0 {
        zq.reverse();
    }
    polygon_area(&clip_convex(&p.ccw_local(), &zq)).abs()
}

/// `(1_P * 1_Q)(z)`.
///
/// For translates the value is `|det|·Λ(σ)Λ(t)` in the frame anchored at
/// `v1(P) + v1(Q)` with `Λ` the unit tent on `[0, 2]`; otherwise it falls back
/// to clipping.
pub fn indicator_convolution_value(p: &Parallelogram, q: &Parallelogram, z: Point) -> f64 {
    if !p.is_translate_of(q) {
        return indicator_convolution_clipped(p, q, z);
    }
    let base = add(p.vertices[0], q.vertices[0]);
    let local = sub(sub(sub(z, p.origin_offset), q.origin_offset), base);
    let det = p.det();
    let s = cross(local, p.e2()) / det;
    let t = cross(p.e1(), local) / det;
    det.abs() * tent(s) * tent(t)
}
