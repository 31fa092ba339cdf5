//! Planar regions `Ω₊ ⊂ ℂ` used as boundary data for Poisson integrals.
//!
//! A [`PlanarDomain`] is an expression tree over disks, half-planes and simple
//! polygons combined by union, intersection and difference. Besides membership
//! it answers ray queries: the set of `t ≥ 0` with `o + t·e^{iθ}` inside the
//! region, which is what the harmonic-measure quadrature integrates over.

mod intervals;
mod sampling;
mod json;

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub use intervals::IntervalSet;
pub use sampling::{hausdorff_distance, reflection_symmetric, PointIndex};

/// Expression tree of a planar region.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Disk { center: Complex64, radius: f64 },
    /// `{ζ : Re(conj(normal)·ζ) > offset}` with `|normal| = 1`.
    HalfPlane { normal: Complex64, offset: f64 },
    Polygon { vertices: Vec<Complex64> },
    Union(Vec<Region>),
    Intersection(Vec<Region>),
    /// First region minus the union of the rest.
    Difference(Vec<Region>),
}

/// A boundary curve of one primitive, used for breakpoints and sampling.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Curve {
    Circle { center: Complex64, radius: f64 },
    Line { point: Complex64, dir: Complex64 },
    Segment { a: Complex64, b: Complex64 },
}

/// A validated planar region with cached geometric data.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanarDomain {
    root: Region,
    bounding_radius: f64,
    curves: Vec<Curve>,
    /// Polygon vertices and pairwise boundary intersections.
    corners: Vec<Complex64>,
}

/// Parameters of the dogbone `{|ζ−1| < 1/4} ∪ {|ζ+1| < 1/4} ∪ {|ζ| < 1, |Im ζ| < ε³}`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DogboneSpec {
    epsilon: f64,
}

impl DogboneSpec {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(Error::InvalidInput(format!("dogbone epsilon {epsilon} must lie in (0, 1/2)")));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Half-height `ε³` of the corridor.
    pub fn corridor_half_height(&self) -> f64 {
        self.epsilon.powi(3)
    }

    pub fn domain(&self) -> PlanarDomain {
        let h = self.corridor_half_height();
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let rect = Region::Polygon { vertices: vec![c(-1.0, -h), c(1.0, -h), c(1.0, h), c(-1.0, h)] };
        let corridor = Region::Intersection(vec![rect, Region::Disk { center: c(0.0, 0.0), radius: 1.0 }]);
        PlanarDomain::from_region(Region::Union(vec![
            Region::Disk { center: c(1.0, 0.0), radius: 0.25 },
            Region::Disk { center: c(-1.0, 0.0), radius: 0.25 },
            corridor,
        ]))
        .expect("dogbone primitives are valid")
    }
}

impl PlanarDomain {
    /// Validates the tree and builds the cached geometry.
    pub fn from_region(root: Region) -> Result<Self> {
        validate(&root)?;
        let bounding_radius = bounding_radius(&root);
        let mut curves = Vec::new();
        let mut corners = Vec::new();
        collect_curves(&root, &mut curves, &mut corners);
        for i in 0..curves.len() {
            for j in (i + 1)..curves.len() {
                curve_intersections(&curves[i], &curves[j], &mut corners);
            }
        }
        Ok(Self { root, bounding_radius, curves, corners })
    }

    pub fn disk(center: Complex64, radius: f64) -> Result<Self> {
        Self::from_region(Region::Disk { center, radius })
    }

    /// Half-plane `{ζ : n·ζ > offset}`; the normal is normalized.
    pub fn half_plane(normal: Complex64, offset: f64) -> Result<Self> {
        let n = normal.norm();
        if !(n > 0.0 && n.is_finite()) || !offset.is_finite() {
            return Err(Error::InvalidInput("half-plane normal must be nonzero and finite".into()));
        }
        Self::from_region(Region::HalfPlane { normal: normal / n, offset: offset / n })
    }

    /// The upper half-plane `{Im ζ > 0}`.
    pub fn upper_half_plane() -> Self {
        Self::half_plane(Complex64::i(), 0.0).expect("valid")
    }

    pub fn polygon(vertices: Vec<Complex64>) -> Result<Self> {
        Self::from_region(Region::Polygon { vertices })
    }

    pub fn union(parts: Vec<PlanarDomain>) -> Result<Self> {
        Self::from_region(Region::Union(parts.into_iter().map(|d| d.root).collect()))
    }

    pub fn intersection(parts: Vec<PlanarDomain>) -> Result<Self> {
        Self::from_region(Region::Intersection(parts.into_iter().map(|d| d.root).collect()))
    }

    pub fn difference(a: PlanarDomain, b: PlanarDomain) -> Result<Self> {
        Self::from_region(Region::Difference(vec![a.root, b.root]))
    }

    pub fn dogbone(epsilon: f64) -> Result<Self> {
        Ok(DogboneSpec::new(epsilon)?.domain())
    }

    pub fn region(&self) -> &Region {
        &self.root
    }

    /// Radius of a disk about the origin containing the region (∞ if unbounded).
    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    pub fn is_bounded(&self) -> bool {
        self.bounding_radius.is_finite()
    }

    /// Membership test; boundary points may go either way.
    pub fn contains(&self, zeta: Complex64) -> bool {
        contains(&self.root, zeta)
    }

    /// Image of the region under `ζ ↦ λζ`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("scale factor {lambda} must be positive")));
        }
        Self::from_region(scale(&self.root, lambda))
    }

    /// Parameters `t ≥ 0` with `origin + t·dir` inside the region; `dir` is a unit vector.
    pub fn ray_intervals(&self, origin: Complex64, dir: Complex64) -> IntervalSet {
        ray(&self.root, origin, dir)
    }

    /// Angles in `[θ₀, θ₀ + 2π)` at which the ray integrand seen from `origin`
    /// may fail to be smooth: tangencies, corners and asymptotic directions.
    pub fn angular_breakpoints(&self, origin: Complex64, theta0: f64) -> Vec<f64> {
        let wrap = |a: f64| {
            let mut t = (a - theta0).rem_euclid(2.0 * PI);
            if t >= 2.0 * PI {
                t = 0.0;
            }
            theta0 + t
        };
        let mut out = Vec::new();
        for curve in &self.curves {
            match curve {
                Curve::Circle { center, radius } => {
                    let v = center - origin;
                    let d = v.norm();
                    if d > *radius * (1.0 + 1e-14) {
                        let half = (radius / d).asin();
                        let mid = v.arg();
                        out.push(wrap(mid - half));
                        out.push(wrap(mid + half));
                    }
                }
                Curve::Line { dir, .. } => {
                    out.push(wrap(dir.arg()));
                    out.push(wrap((-dir).arg()));
                }
                Curve::Segment { .. } => {}
            }
        }
        for p in &self.corners {
            let v = p - origin;
            if v.norm() > 1e-300 {
                out.push(wrap(v.arg()));
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
        out
    }

    pub(crate) fn curves(&self) -> &[Curve] {
        &self.curves
    }
}

fn validate(r: &Region) -> Result<()> {
    match r {
        Region::Disk { center, radius } => {
            if !(center.re.is_finite() && center.im.is_finite()) || !(*radius > 0.0 && radius.is_finite()) {
                return Err(Error::InvalidInput(format!("disk radius {radius} must be positive and finite")));
            }
        }
        Region::HalfPlane { normal, offset } => {
            if ((normal.norm() - 1.0).abs() > 1e-12) || !offset.is_finite() {
                return Err(Error::InvalidInput("half-plane normal must have unit length".into()));
            }
        }
        Region::Polygon { vertices } => validate_polygon(vertices)?,
        Region::Union(v) | Region::Intersection(v) => {
            if v.is_empty() {
                return Err(Error::InvalidInput("set operation needs at least one argument".into()));
            }
            v.iter().try_for_each(validate)?;
        }
        Region::Difference(v) => {
            if v.len() < 2 {
                return Err(Error::InvalidInput("difference needs at least two arguments".into()));
            }
            v.iter().try_for_each(validate)?;
        }
    }
    Ok(())
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn validate_polygon(v: &[Complex64]) -> Result<()> {
    if v.len() < 3 {
        return Err(Error::InvalidInput("polygon needs at least 3 vertices".into()));
    }
    if v.iter().any(|p| !(p.re.is_finite() && p.im.is_finite())) {
        return Err(Error::InvalidInput("polygon vertices must be finite".into()));
    }
    let n = v.len();
    let area: f64 = (0..n).map(|i| cross(v[i], v[(i + 1) % n])).sum::<f64>() * 0.5;
    let scale = v.iter().map(|p| p.norm_sqr()).fold(0.0, f64::max).max(1e-300);
    if area.abs() <= 1e-14 * scale {
        return Err(Error::InvalidInput("polygon vertices are collinear".into()));
    }
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        if (b - a).norm() == 0.0 {
            return Err(Error::InvalidInput("polygon has repeated vertices".into()));
        }
        for j in (i + 1)..n {
            let (c, d) = (v[j], v[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // adjacent edges may only share their common vertex
                let shared = if j == i + 1 { b } else { a };
                let (p, q) = if j == i + 1 { (a, d) } else { (b, c) };
                if cross(p - shared, q - shared).abs() <= 1e-15 * scale
                    && ((p - shared).re * (q - shared).re + (p - shared).im * (q - shared).im) > 0.0
                {
                    return Err(Error::InvalidInput("polygon edges overlap".into()));
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return Err(Error::InvalidInput("polygon is self-intersecting".into()));
            }
        }
    }
    Ok(())
}

fn segments_intersect(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    (d1 * d2 <= 0.0) && (d3 * d4 <= 0.0) && !(d1 == 0.0 && d2 == 0.0 && d3 == 0.0 && d4 == 0.0 && {
        // collinear: check projection overlap
        let dir = b - a;
        let proj = |p: Complex64| (p - a).re * dir.re + (p - a).im * dir.im;
        let (lo, hi) = (proj(c).min(proj(d)), proj(c).max(proj(d)));
        hi < 0.0 || lo > dir.norm_sqr()
    })
}

fn bounding_radius(r: &Region) -> f64 {
    match r {
        Region::Disk { center, radius } => center.norm() + radius,
        Region::HalfPlane { .. } => f64::INFINITY,
        Region::Polygon { vertices } => vertices.iter().map(|v| v.norm()).fold(0.0, f64::max),
        Region::Union(v) => v.iter().map(bounding_radius).fold(0.0, f64::max),
        Region::Intersection(v) => v.iter().map(bounding_radius).fold(f64::INFINITY, f64::min),
        Region::Difference(v) => bounding_radius(&v[0]),
    }
}

fn polygon_contains(v: &[Complex64], p: Complex64) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a.im > p.im) != (b.im > p.im) {
            let x = a.re + (p.im - a.im) * (b.re - a.re) / (b.im - a.im);
            if p.re < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn contains(r: &Region, z: Complex64) -> bool {
    match r {
        Region::Disk { center, radius } => (z - center).norm_sqr() < radius * radius,
        Region::HalfPlane { normal, offset } => normal.re * z.re + normal.im * z.im > *offset,
        Region::Polygon { vertices } => polygon_contains(vertices, z),
        Region::Union(v) => v.iter().any(|s| contains(s, z)),
        Region::Intersection(v) => v.iter().all(|s| contains(s, z)),
        Region::Difference(v) => contains(&v[0], z) && !v[1..].iter().any(|s| contains(s, z)),
    }
}

fn scale(r: &Region, l: f64) -> Region {
    match r {
        Region::Disk { center, radius } => Region::Disk { center: center * l, radius: radius * l },
        Region::HalfPlane { normal, offset } => Region::HalfPlane { normal: *normal, offset: offset * l },
        Region::Polygon { vertices } => Region::Polygon { vertices: vertices.iter().map(|v| v * l).collect() },
        Region::Union(v) => Region::Union(v.iter().map(|s| scale(s, l)).collect()),
        Region::Intersection(v) => Region::Intersection(v.iter().map(|s| scale(s, l)).collect()),
        Region::Difference(v) => Region::Difference(v.iter().map(|s| scale(s, l)).collect()),
    }
}

fn ray(r: &Region, o: Complex64, d: Complex64) -> IntervalSet {
    match r {
        Region::Disk { center, radius } => {
            let w = o - center;
            let b = d.re * w.re + d.im * w.im;
            let c = w.norm_sqr() - radius * radius;
            let disc = b * b - c;
            if disc <= 0.0 {
                return IntervalSet::empty();
            }
            let s = disc.sqrt();
            // stable roots of t² + 2bt + c
            let q = -b - b.signum() * s;
            let (t1, t2) = if q == 0.0 { (-s, s) } else { (q, c / q) };
            IntervalSet::single(t1.min(t2), t1.max(t2))
        }
        Region::HalfPlane { normal, offset } => {
            let s0 = normal.re * o.re + normal.im * o.im - offset;
            let nd = normal.re * d.re + normal.im * d.im;
            if nd == 0.0 {
                if s0 > 0.0 {
                    IntervalSet::full()
                } else {
                    IntervalSet::empty()
                }
            } else if nd > 0.0 {
                IntervalSet::single(-s0 / nd, f64::INFINITY)
            } else {
                IntervalSet::single(0.0, -s0 / nd)
            }
        }
        Region::Polygon { vertices } => polygon_ray(vertices, o, d),
        Region::Union(v) => v.iter().fold(IntervalSet::empty(), |acc, s| acc.union(&ray(s, o, d))),
        Region::Intersection(v) => {
            let mut acc = ray(&v[0], o, d);
            for s in &v[1..] {
                if acc.is_empty() {
                    break;
                }
                acc = acc.intersection(&ray(s, o, d));
            }
            acc
        }
        Region::Difference(v) => {
            let mut acc = ray(&v[0], o, d);
            for s in &v[1..] {
                if acc.is_empty() {
                    break;
                }
                acc = acc.difference(&ray(s, o, d));
            }
            acc
        }
    }
}

fn polygon_ray(v: &[Complex64], o: Complex64, d: Complex64) -> IntervalSet {
    let n = v.len();
    let mut hits = Vec::new();
    for i in 0..n {
        let a = v[i];
        let e = v[(i + 1) % n] - a;
        let den = cross(d, e);
        if den == 0.0 {
            continue;
        }
        let w = a - o;
        let t = cross(w, e) / den;
        let s = cross(w, d) / den;
        if t > 0.0 && (0.0..1.0).contains(&s) {
            hits.push(t);
        }
    }
    hits.sort_by(f64::total_cmp);
    let mut inside = polygon_contains(v, o);
    let mut start = 0.0;
    let mut out = Vec::with_capacity(hits.len() / 2 + 1);
    for t in hits {
        if inside {
            out.push((start, t));
        } else {
            start = t;
        }
        inside = !inside;
    }
    // a bounded polygon is exited by every ray; an unmatched entry is a grazing artefact
    IntervalSet::from_intervals(out)
}

fn collect_curves(r: &Region, curves: &mut Vec<Curve>, corners: &mut Vec<Complex64>) {
    match r {
        Region::Disk { center, radius } => curves.push(Curve::Circle { center: *center, radius: *radius }),
        Region::HalfPlane { normal, offset } => curves.push(Curve::Line {
            point: normal * *offset,
            dir: normal * Complex64::new(0.0, 1.0),
        }),
        Region::Polygon { vertices } => {
            let n = vertices.len();
            for i in 0..n {
                curves.push(Curve::Segment { a: vertices[i], b: vertices[(i + 1) % n] });
            }
            corners.extend_from_slice(vertices);
        }
        Region::Union(v) | Region::Intersection(v) | Region::Difference(v) => {
            v.iter().for_each(|s| collect_curves(s, curves, corners))
        }
    }
}

/// Parametrized straight piece `p + t·d`, `t ∈ [lo, hi]`.
fn as_line(c: &Curve) -> Option<(Complex64, Complex64, f64, f64)> {
    match c {
        Curve::Line { point, dir } => Some((*point, *dir, f64::NEG_INFINITY, f64::INFINITY)),
        Curve::Segment { a, b } => Some((*a, b - a, 0.0, 1.0)),
        Curve::Circle { .. } => None,
    }
}

fn curve_intersections(c1: &Curve, c2: &Curve, out: &mut Vec<Complex64>) {
    match (c1, c2) {
        (Curve::Circle { center: p, radius: r }, Curve::Circle { center: q, radius: s }) => {
            let v = q - p;
            let d = v.norm();
            if d == 0.0 || d > r + s || d < (r - s).abs() {
                return;
            }
            let a = (r * r - s * s + d * d) / (2.0 * d);
            let h = (r * r - a * a).max(0.0).sqrt();
            let e = v / d;
            let m = p + e * a;
            let perp = e * Complex64::i();
            out.push(m + perp * h);
            out.push(m - perp * h);
        }
        (Curve::Circle { center, radius }, other) | (other, Curve::Circle { center, radius }) => {
            let (p, d, lo, hi) = as_line(other).expect("straight curve");
            let w = p - center;
            let a = d.norm_sqr();
            let b = d.re * w.re + d.im * w.im;
            let c = w.norm_sqr() - radius * radius;
            let disc = b * b - a * c;
            if disc < 0.0 {
                return;
            }
            let s = disc.sqrt();
            for t in [(-b - s) / a, (-b + s) / a] {
                if t >= lo && t <= hi {
                    out.push(p + d * t);
                }
            }
        }
        _ => {
            let (p, d, lo1, hi1) = as_line(c1).expect("straight curve");
            let (q, e, lo2, hi2) = as_line(c2).expect("straight curve");
            let den = cross(d, e);
            if den == 0.0 {
                return;
            }
            let w = q - p;
            let t = cross(w, e) / den;
            let s = cross(w, d) / den;
            if t >= lo1 && t <= hi1 && s >= lo2 && s <= hi2 {
                out.push(p + d * t);
            }
        }
    }
}
