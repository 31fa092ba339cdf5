//! Constant-curvature −1 geometry in the upper half-space model of H³, with the
//! Poincaré disk kept only as the home of the surface-group construction.
//!
//! Points are `(x, y, z)` with `z > 0` and metric `(dx² + dy² + dz²)/z²`.
//! Isometries are unit-determinant complex 2×2 matrices acting on the
//! boundary plane by linear fractional maps and on H³ by the quaternionic
//! extension `q ↦ (a q + b)(c q + d)⁻¹`, `q = x + y i + z j`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|ad − bc − 1|` after normalization.
pub const DET_TOLERANCE: f64 = 1e-12;

/// A point of hyperbolic 3-space in the upper half-space model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct H3Point {
    x: f64,
    y: f64,
    z: f64,
}

impl H3Point {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::InvalidPoint(format!("non-finite coordinate ({x}, {y}, {z})")));
        }
        if z <= 0.0 {
            return Err(Error::InvalidPoint(format!("height must be positive, got {z}")));
        }
        Ok(Self { x, y, z })
    }

    /// The point `(0, 0, z)` on the vertical geodesic over the origin.
    pub fn on_axis(z: f64) -> Result<Self> {
        Self::new(0.0, 0.0, z)
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    /// Vertical projection onto the boundary plane.
    pub fn foot(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn coords(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Shift by a Euclidean offset, validating the result.
    pub fn offset(&self, d: [f64; 3]) -> Result<Self> {
        Self::new(self.x + d[0], self.y + d[1], self.z + d[2])
    }
}

impl TryFrom<[f64; 3]> for H3Point {
    type Error = Error;

    fn try_from(c: [f64; 3]) -> Result<Self> {
        Self::new(c[0], c[1], c[2])
    }
}

impl From<H3Point> for [f64; 3] {
    fn from(p: H3Point) -> Self {
        p.coords()
    }
}

/// `cosh` of the hyperbolic distance between two half-space points.
pub fn h3_cosh_distance(p: &H3Point, q: &H3Point) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    let dz = p.z - q.z;
    1.0 + (dx * dx + dy * dy + dz * dz) / (2.0 * p.z * q.z)
}

/// Hyperbolic distance in the upper half-space model.
pub fn h3_distance(p: &H3Point, q: &H3Point) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    let dz = p.z - q.z;
    let s = (dx * dx + dy * dy + dz * dz) / (2.0 * p.z * q.z);
    // acosh(1 + s) without cancellation for small s
    (s + (s * (s + 2.0)).sqrt()).ln_1p()
}

/// A point of the Poincaré disk with metric `4|dζ|²/(1 − |ζ|²)²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskPoint(Complex64);

impl DiskPoint {
    pub fn new(zeta: Complex64) -> Result<Self> {
        if !(zeta.re.is_finite() && zeta.im.is_finite()) || zeta.norm_sqr() >= 1.0 {
            return Err(Error::InvalidPoint(format!("{zeta} is not in the open unit disk")));
        }
        Ok(Self(zeta))
    }

    pub fn zeta(&self) -> Complex64 {
        self.0
    }
}

/// Distance in the Poincaré disk; `disk_distance(0, r) = log((1 + r)/(1 − r))`.
pub fn disk_distance(u: &DiskPoint, v: &DiskPoint) -> f64 {
    let num = 2.0 * (u.0 - v.0).norm_sqr();
    let den = (1.0 - u.0.norm_sqr()) * (1.0 - v.0.norm_sqr());
    let s = num / den;
    (s + (s * (s + 2.0)).sqrt()).ln_1p()
}

/// Fixed transport of the disk into H³: the Cayley map `w = i(1 + ζ)/(1 − ζ)`
/// onto the upper half-plane, placed in the totally geodesic vertical plane
/// `y = 0` as `(Re w, 0, Im w)`.
pub fn disk_to_half_space(p: &DiskPoint) -> H3Point {
    let w = cayley().apply(p.0);
    H3Point { x: w.re, y: 0.0, z: w.im.max(f64::MIN_POSITIVE) }
}

/// The normalized Cayley matrix carrying the unit disk onto the upper half-plane.
pub fn cayley() -> MobiusMap {
    let i = Complex64::i();
    MobiusMap::new(i, i, Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0))
        .expect("Cayley matrix is invertible")
}

/// A point of the Riemann sphere `ℂ ∪ {∞}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryPoint {
    Finite(Complex64),
    Infinity,
}

/// An orientation-preserving isometry of H³, stored as an SL(2, ℂ) matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobiusMap {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl MobiusMap {
    /// Builds the map and rescales it to unit determinant.
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det.norm() > 1e-300) || !det.re.is_finite() || !det.im.is_finite() {
            return Err(Error::InvalidInput("Möbius matrix is singular".into()));
        }
        let s = det.sqrt();
        let m = Self { a: a / s, b: b / s, c: c / s, d: d / s };
        debug_assert!((m.det() - 1.0).norm() < DET_TOLERANCE * (1.0 + m.norm_sqr()));
        Ok(m)
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self { a: one, b: zero, c: zero, d: one }
    }

    /// `ζ ↦ λζ`, i.e. `diag(√λ, 1/√λ)`.
    pub fn dilation(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("dilation factor {lambda} must be positive")));
        }
        let s = lambda.sqrt();
        Ok(Self {
            a: Complex64::new(s, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0 / s, 0.0),
        })
    }

    /// Rotation `ζ ↦ e^{iφ}ζ` about the origin.
    pub fn rotation(phi: f64) -> Self {
        let h = Complex64::from_polar(1.0, 0.5 * phi);
        Self { a: h, b: Complex64::new(0.0, 0.0), c: Complex64::new(0.0, 0.0), d: h.conj() }
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    /// Squared Frobenius norm.
    pub fn norm_sqr(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()
    }

    /// Matrix product `self · other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn inverse(&self) -> Self {
        Self { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    /// Frobenius distance between the matrices, minimized over the sign ±M.
    pub fn projective_distance(&self, other: &Self) -> f64 {
        let plus = (self.a - other.a).norm_sqr()
            + (self.b - other.b).norm_sqr()
            + (self.c - other.c).norm_sqr()
            + (self.d - other.d).norm_sqr();
        let minus = (self.a + other.a).norm_sqr()
            + (self.b + other.b).norm_sqr()
            + (self.c + other.c).norm_sqr()
            + (self.d + other.d).norm_sqr();
        plus.min(minus).sqrt()
    }

    /// Action on a finite boundary point; poles are not handled.
    pub fn apply(&self, zeta: Complex64) -> Complex64 {
        (self.a * zeta + self.b) / (self.c * zeta + self.d)
    }

    /// Action on the Riemann sphere.
    pub fn apply_boundary(&self, p: BoundaryPoint) -> BoundaryPoint {
        let zero = |w: Complex64| w.re == 0.0 && w.im == 0.0;
        match p {
            BoundaryPoint::Infinity => {
                if zero(self.c) {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Finite(self.a / self.c)
                }
            }
            BoundaryPoint::Finite(zeta) => {
                let den = self.c * zeta + self.d;
                if zero(den) {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Finite((self.a * zeta + self.b) / den)
                }
            }
        }
    }

    /// Isometric action on H³.
    pub fn apply_h3(&self, p: &H3Point) -> H3Point {
        let w = p.foot();
        let t2 = p.z * p.z;
        let cw_d = self.c * w + self.d;
        let den = cw_d.norm_sqr() + self.c.norm_sqr() * t2;
        let num = (self.a * w + self.b) * cw_d.conj() + self.a * self.c.conj() * t2;
        H3Point { x: num.re / den, y: num.im / den, z: p.z / den }
    }
}

/// Discrete Laplace–Beltrami operator `Δ = −div grad` of the hyperbolic
/// metric, `Δf = −[z²(f_xx + f_yy + f_zz) − z f_z]`, by central differences.
pub fn laplace_beltrami<F>(f: F, p: &H3Point, step: f64) -> Result<f64>
where
    F: Fn(&H3Point) -> Result<f64>,
{
    if !(step > 0.0) || step >= 0.5 * p.z {
        return Err(Error::Precondition(format!(
            "stencil step {step} must lie in (0, z/2) with z = {}",
            p.z
        )));
    }
    let f0 = f(p)?;
    let mut second = 0.0;
    let mut fz = 0.0;
    for axis in 0..3 {
        let mut d = [0.0; 3];
        d[axis] = step;
        let fp = f(&p.offset(d)?)?;
        d[axis] = -step;
        let fm = f(&p.offset(d)?)?;
        second += (fp - 2.0 * f0 + fm) / (step * step);
        if axis == 2 {
            fz = (fp - fm) / (2.0 * step);
        }
    }
    Ok(-(p.z * p.z * second - p.z * fz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pt(x: f64, y: f64, z: f64) -> H3Point {
        H3Point::new(x, y, z).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_invalid_points() {
        assert!(H3Point::new(0.0, 0.0, 0.0).is_err());
        assert!(H3Point::new(f64::NAN, 0.0, 1.0).is_err());
        assert!(DiskPoint::new(c(1.0, 0.0)).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(h3_distance(&pt(0.0, 0.0, 1.0), &pt(0.0, 0.0, 1.0)), 0.0);
        assert_relative_eq!(
            h3_distance(&pt(0.0, 0.0, 1.0), &pt(0.0, 0.0, std::f64::consts::E)),
            1.0,
            epsilon = 1e-14
        );
    }

    /// Hyperbolic length of the Euclidean semicircle through (0,0,1) and
    /// (1,0,1) orthogonal to the boundary, by composite Simpson in the angle.
    fn arc_length(n: usize) -> f64 {
        let rad = 1.25f64.sqrt();
        let t0 = (0.5 / rad).acos();
        let t1 = std::f64::consts::PI - t0;
        let h = (t1 - t0) / n as f64;
        // ds/z with x = 1/2 + R cos t, z = R sin t
        let g = |t: f64| rad / (rad * t.sin());
        let mut s = g(t0) + g(t1);
        for k in 1..n {
            s += g(t0 + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn distance_matches_geodesic_arc_length() {
        let exact = h3_distance(&pt(0.0, 0.0, 1.0), &pt(1.0, 0.0, 1.0));
        assert!((arc_length(2000) - exact).abs() < 1e-10);
        // the straight horizontal path is longer
        assert!(1.0 > exact);
    }

    #[test]
    fn disk_distance_examples() {
        let o = DiskPoint::new(c(0.0, 0.0)).unwrap();
        assert_eq!(disk_distance(&o, &o), 0.0);
        let h = DiskPoint::new(c(0.5, 0.0)).unwrap();
        assert_relative_eq!(disk_distance(&o, &h), 3f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn disk_model_transport_preserves_distance() {
        let u = DiskPoint::new(c(0.3, 0.0)).unwrap();
        let v = DiskPoint::new(c(0.0, -0.3)).unwrap();
        let d_disk = disk_distance(&u, &v);
        let d_h3 = h3_distance(&disk_to_half_space(&u), &disk_to_half_space(&v));
        assert_relative_eq!(d_disk, d_h3, epsilon = 1e-12);
    }

    #[test]
    fn boundary_action_examples() {
        let id = MobiusMap::identity();
        assert_eq!(id.apply_boundary(BoundaryPoint::Finite(c(5.0, 2.0))), BoundaryPoint::Finite(c(5.0, 2.0)));
        let dil = MobiusMap::dilation(3.0).unwrap();
        match dil.apply_boundary(BoundaryPoint::Finite(c(1.0, -2.0))) {
            BoundaryPoint::Finite(w) => assert!((w - c(3.0, -6.0)).norm() < 1e-14),
            _ => panic!("finite point mapped to infinity"),
        }
        let m = MobiusMap::new(c(2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_eq!(m.apply_boundary(BoundaryPoint::Infinity), BoundaryPoint::Finite(c(2.0, 0.0)));
        let pole = c(-1.0, 0.0);
        assert_eq!(m.apply_boundary(BoundaryPoint::Finite(pole)), BoundaryPoint::Infinity);
        assert_eq!(dil.apply_boundary(BoundaryPoint::Infinity), BoundaryPoint::Infinity);
    }

    #[test]
    fn normalization_gives_unit_determinant() {
        let m = MobiusMap::new(c(2.0, 1.0), c(0.3, 0.0), c(-1.0, 4.0), c(0.5, 0.5)).unwrap();
        assert!((m.det() - 1.0).norm() < DET_TOLERANCE);
        assert!(MobiusMap::new(c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)).is_err());
    }

    #[test]
    fn h3_action_examples() {
        let p = pt(0.3, -0.2, 0.7);
        assert_eq!(MobiusMap::identity().apply_h3(&p), p);
        let q = MobiusMap::dilation(2.5).unwrap().apply_h3(&pt(0.0, 0.0, 1.0));
        assert_relative_eq!(q.z(), 2.5, epsilon = 1e-14);
        assert!(q.x().abs() < 1e-15 && q.y().abs() < 1e-15);
    }

    #[test]
    fn h3_action_restricts_to_boundary_action() {
        let m = MobiusMap::new(c(1.0, 0.5), c(-0.2, 1.0), c(0.3, 0.1), c(1.2, -0.4)).unwrap();
        let zeta = c(0.4, -0.9);
        let img = m.apply_h3(&pt(zeta.re, zeta.im, 1e-9));
        let w = m.apply(zeta);
        assert!((img.foot() - w).norm() < 1e-7);
        assert!(img.z() < 1e-7);
    }

    #[test]
    fn laplace_beltrami_of_constant_is_zero() {
        let v = laplace_beltrami(|_| Ok(3.5), &pt(0.0, 0.0, 1.0), 0.01).unwrap();
        assert_eq!(v, 0.0);
        assert!(laplace_beltrami(|_| Ok(1.0), &pt(0.0, 0.0, 1.0), 0.6).is_err());
    }

    fn halfplane_f0(p: &H3Point) -> Result<f64> {
        Ok(0.5 * (p.y() / (p.y() * p.y() + p.z() * p.z()).sqrt() + 1.0))
    }

    fn radial_green(p: &H3Point) -> Result<f64> {
        let d = h3_distance(p, &pt(0.0, 0.0, 1.0));
        Ok(1.0 / ((2.0 * d).exp() - 1.0))
    }

    fn observed_order<F: Fn(&H3Point) -> Result<f64> + Copy>(f: F, p: &H3Point, h: f64) -> f64 {
        let coarse = laplace_beltrami(f, p, h).unwrap().abs();
        let fine = laplace_beltrami(f, p, h / 2.0).unwrap().abs();
        (coarse / fine).log2()
    }

    #[test]
    fn closed_form_harmonic_fields_have_vanishing_laplacian() {
        let p = pt(0.0, 1.0, 1.0);
        let h = 0.02;
        assert!(laplace_beltrami(halfplane_f0, &p, h).unwrap().abs() < 10.0 * h * h);
        assert!(observed_order(halfplane_f0, &p, h) >= 1.8);
        let q = pt(1.0, 1.0, 2.0);
        assert!(laplace_beltrami(radial_green, &q, h).unwrap().abs() < 10.0 * h * h);
        assert!(observed_order(radial_green, &q, h) >= 1.8);
    }

    fn arb_point() -> impl Strategy<Value = H3Point> {
        (-3.0..3.0f64, -3.0..3.0f64, 0.05..4.0f64).prop_map(|(x, y, z)| pt(x, y, z))
    }

    fn arb_map() -> impl Strategy<Value = MobiusMap> {
        prop::array::uniform8(-2.0..2.0f64).prop_filter_map("singular", |v| {
            MobiusMap::new(c(v[0], v[1]), c(v[2], v[3]), c(v[4], v[5]), c(v[6], v[7]))
                .ok()
                .filter(|m| m.norm_sqr() < 200.0)
        })
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(p in arb_point(), q in arb_point(), r in arb_point()) {
            let dpq = h3_distance(&p, &q);
            prop_assert!((dpq - h3_distance(&q, &p)).abs() < 1e-12);
            prop_assert!(h3_distance(&p, &p) == 0.0);
            prop_assert!(dpq <= h3_distance(&p, &r) + h3_distance(&r, &q) + 1e-12);
        }

        #[test]
        fn isometries_preserve_distance(m in arb_map(), p in arb_point(), q in arb_point()) {
            let d0 = h3_distance(&p, &q);
            let d1 = h3_distance(&m.apply_h3(&p), &m.apply_h3(&q));
            prop_assert!((d0 - d1).abs() < 1e-10 * (1.0 + d0), "{} vs {}", d0, d1);
        }

        #[test]
        fn action_respects_composition(m in arb_map(), n in arb_map(), p in arb_point()) {
            let lhs = m.compose(&n).apply_h3(&p);
            let rhs = m.apply_h3(&n.apply_h3(&p));
            prop_assert!(h3_distance(&lhs, &rhs) < 1e-10);
        }

        #[test]
        fn disk_transport_is_isometric(r1 in 0.0..0.95f64, a1 in 0.0..std::f64::consts::TAU, r2 in 0.0..0.95f64, a2 in 0.0..std::f64::consts::TAU) {
            let u = DiskPoint::new(Complex64::from_polar(r1, a1)).unwrap();
            let v = DiskPoint::new(Complex64::from_polar(r2, a2)).unwrap();
            let d = disk_distance(&u, &v);
            let e = h3_distance(&disk_to_half_space(&u), &disk_to_half_space(&v));
            prop_assert!((d - e).abs() < 1e-10 * (1.0 + d));
        }
    }
}
