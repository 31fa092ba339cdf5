//! Poisson kernel of H³ and Poisson integrals of domain indicators.
//!
//! In the upper half-space model the kernel at `(x, y, z)` is
//! `P(ξ, η) = (1/π)·[z / ((x−ξ)² + (y−η)² + z²)]²`, with unit total mass.
//!
//! Harmonic measure is integrated in polar coordinates about the foot point
//! `(x, y)`. The radial integral of the kernel has the closed form
//! `∫₀ᵗ P r dr = t²/(2π(t² + z²))`, so along each ray only the entry and exit
//! parameters of the domain matter; the remaining angular integral is done by
//! adaptive Gauss–Kronrod, split at the angles where the ray structure
//! changes (tangencies, corners, asymptotic directions of lines). Unbounded
//! ray intervals are handled exactly through the `t → ∞` limits, so no
//! far-field truncation enters the value.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::domain::PlanarDomain;
use crate::error::{Error, Result};
use crate::hyperbolic::H3Point;
use crate::quadrature::integrate;

/// Tuning for the adaptive angular quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Target absolute error.
    pub tolerance: f64,
    /// Maximum bisection depth of any angular segment.
    pub max_depth: u32,
    /// Radius multiplier (of `max(z, reach)`) for the kernel-mass cutoff.
    pub cutoff: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { tolerance: 1e-7, max_depth: 24, cutoff: 64.0 }
    }
}

impl QuadratureConfig {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self { tolerance, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || self.max_depth < 1 || !(self.cutoff >= 1.0) {
            return Err(Error::InvalidInput(format!(
                "invalid quadrature config: tolerance {} depth {} cutoff {}",
                self.tolerance, self.max_depth, self.cutoff
            )));
        }
        Ok(())
    }
}

/// A harmonic-measure value with its error budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureValue {
    pub value: f64,
    pub error: f64,
    /// Kernel mass of the disk of radius `cutoff·max(z, reach)` about the foot.
    pub mass: f64,
}

/// Euclidean-coordinate gradient `(∂f/∂x, ∂f/∂y, ∂f/∂z)` with an error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gradient {
    pub components: [f64; 3],
    pub error: f64,
}

impl Gradient {
    pub fn euclidean_norm(&self) -> f64 {
        let [a, b, c] = self.components;
        (a * a + b * b + c * c).sqrt()
    }

    /// `|df|_h = z·|∇f|` for the hyperbolic metric.
    pub fn hyperbolic_norm(&self, p: &H3Point) -> f64 {
        p.z() * self.euclidean_norm()
    }
}

/// Poisson kernel `P_{(x,y,z)}(ζ)`.
pub fn poisson_kernel(p: &H3Point, zeta: num_complex::Complex64) -> f64 {
    let dx = p.x() - zeta.re;
    let dy = p.y() - zeta.im;
    let z = p.z();
    let q = z / (dx * dx + dy * dy + z * z);
    q * q / PI
}

/// Numerical total mass of the kernel: adaptive product quadrature over the
/// disk of radius `R = cutoff·z` about the foot plus the exact tail `z²/(R² + z²)`.
pub fn kernel_mass(p: &H3Point, config: &QuadratureConfig) -> Result<f64> {
    config.validate()?;
    let z = p.z();
    let foot = p.foot();
    let radius = config.cutoff * z;
    let tol = config.tolerance;
    let radial = |theta: f64| -> Result<f64> {
        let dir = num_complex::Complex64::from_polar(1.0, theta);
        let r = integrate(|t: f64| [poisson_kernel(p, foot + dir * t) * t], 0.0, radius, &[z], tol * 1e-2 / (2.0 * PI), 40);
        if !r.converged {
            return Err(Error::NotConverged { estimate: r.value[0], error: r.error });
        }
        Ok(r.value[0])
    };
    // the kernel is rotationally symmetric about the foot, so a fixed rule in θ
    // suffices; sample a few directions and integrate by the trapezoid rule
    let n = 8;
    let mut sum = 0.0;
    for k in 0..n {
        sum += radial(2.0 * PI * k as f64 / n as f64)?;
    }
    let inner = sum * 2.0 * PI / n as f64;
    let tail = z * z / (radius * radius + z * z);
    let mass = inner + tail;
    if !mass.is_finite() {
        return Err(Error::NotConverged { estimate: mass, error: f64::INFINITY });
    }
    Ok(mass)
}

/// Closed-form harmonic measure of the half-plane `{Im ζ > 0}`.
pub fn halfplane_closed_form(p: &H3Point) -> f64 {
    let (y, z) = (p.y(), p.z());
    0.5 * (y / (y * y + z * z).sqrt() + 1.0)
}

/// Closed-form harmonic measure of the disk `|ζ| < ρ` seen from `(0, 0, z)`.
pub fn disk_closed_form(rho: f64, z: f64) -> Result<f64> {
    if !(rho > 0.0 && z > 0.0) {
        return Err(Error::InvalidInput(format!("need rho > 0 and z > 0, got {rho}, {z}")));
    }
    Ok(rho * rho / (rho * rho + z * z))
}

/// Radial antiderivatives along one ray.
///
/// `value(t) = t²/(2π(t² + z²))`, `dz(t)` integrates `∂P/∂z · r`, and
/// `dfoot(t)` integrates the radial factor of `∂P/∂x` (to be multiplied by cos θ
/// for x and sin θ for y).
struct RayKernel {
    z: f64,
}

impl RayKernel {
    fn value(&self, t: f64) -> f64 {
        if t.is_infinite() {
            return 1.0 / (2.0 * PI);
        }
        let u = t * t + self.z * self.z;
        t * t / u / (2.0 * PI)
    }

    fn dz(&self, t: f64) -> f64 {
        if t.is_infinite() {
            return 0.0;
        }
        // (1/π)(−z/u + z³/u²) shifted so that dz(0) = 0: equals −z t²/(π u²)
        let z = self.z;
        let u = t * t + z * z;
        -z * t * t / (PI * u * u)
    }

    fn dfoot(&self, t: f64) -> f64 {
        // (4/π)·z²·∫₀ᵗ r²/(r²+z²)³ dr = (4/π)(1/z)·F(t/z),
        // F(s) = (atan s + s(s² − 1)/(s² + 1)²)/8
        let z = self.z;
        if t.is_infinite() {
            return 1.0 / (4.0 * z);
        }
        let s = t / z;
        let s2 = s * s;
        let f = (s.atan() + s * (s2 - 1.0) / ((s2 + 1.0) * (s2 + 1.0))) / 8.0;
        4.0 / (PI * z) * f
    }
}

const THETA0: f64 = -PI;

fn reach(domain: &PlanarDomain, p: &H3Point) -> f64 {
    domain.bounding_radius() + p.foot().norm()
}

/// Harmonic measure of `domain` seen from `p`: the Poisson integral of its indicator.
pub fn harmonic_measure(domain: &PlanarDomain, p: &H3Point, config: &QuadratureConfig) -> Result<MeasureValue> {
    config.validate()?;
    let foot = p.foot();
    let kernel = RayKernel { z: p.z() };
    let breaks = domain.angular_breakpoints(foot, THETA0);
    let integrand = |theta: f64| -> [f64; 1] {
        let dir = num_complex::Complex64::from_polar(1.0, theta);
        let mut acc = 0.0;
        for &(a, b) in domain.ray_intervals(foot, dir).intervals() {
            acc += kernel.value(b) - kernel.value(a);
        }
        [acc]
    };
    let r = integrate(integrand, THETA0, THETA0 + 2.0 * PI, &breaks, config.tolerance, config.max_depth);
    let radius = config.cutoff * p.z().max(reach(domain, p));
    let mass = if radius.is_finite() { 1.0 - p.z() * p.z() / (radius * radius + p.z() * p.z()) } else { 1.0 };
    if !r.converged {
        return Err(Error::NotConverged { estimate: r.value[0], error: r.error });
    }
    Ok(MeasureValue { value: r.value[0], error: r.error, mass })
}

/// Gradient of the harmonic measure from the analytically differentiated kernel.
pub fn measure_gradient(domain: &PlanarDomain, p: &H3Point, config: &QuadratureConfig) -> Result<Gradient> {
    config.validate()?;
    let foot = p.foot();
    let kernel = RayKernel { z: p.z() };
    let breaks = domain.angular_breakpoints(foot, THETA0);
    let integrand = |theta: f64| -> [f64; 3] {
        let dir = num_complex::Complex64::from_polar(1.0, theta);
        let (mut radial, mut vertical) = (0.0, 0.0);
        for &(a, b) in domain.ray_intervals(foot, dir).intervals() {
            radial += kernel.dfoot(b) - kernel.dfoot(a);
            vertical += kernel.dz(b) - kernel.dz(a);
        }
        [radial * dir.re, radial * dir.im, vertical]
    };
    let r = integrate(integrand, THETA0, THETA0 + 2.0 * PI, &breaks, config.tolerance, config.max_depth);
    if !r.converged {
        return Err(Error::NotConverged { estimate: r.value[2], error: r.error });
    }
    Ok(Gradient { components: r.value, error: r.error })
}

/// Coordinate Hessian of the harmonic measure by central differences of the gradient.
pub fn measure_hessian(domain: &PlanarDomain, p: &H3Point, config: &QuadratureConfig) -> Result<[[f64; 3]; 3]> {
    let h = 1e-4 * p.z();
    let mut hess = [[0.0; 3]; 3];
    for j in 0..3 {
        let mut d = [0.0; 3];
        d[j] = h;
        let gp = measure_gradient(domain, &p.offset(d)?, config)?;
        d[j] = -h;
        let gm = measure_gradient(domain, &p.offset(d)?, config)?;
        for i in 0..3 {
            hess[i][j] = (gp.components[i] - gm.components[i]) / (2.0 * h);
        }
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            let s = 0.5 * (hess[i][j] + hess[j][i]);
            hess[i][j] = s;
            hess[j][i] = s;
        }
    }
    Ok(hess)
}

pub fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::laplace_beltrami;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn pt(x: f64, y: f64, z: f64) -> H3Point {
        H3Point::new(x, y, z).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tight() -> QuadratureConfig {
        QuadratureConfig::with_tolerance(1e-12)
    }

    #[test]
    fn kernel_examples() {
        assert!((poisson_kernel(&pt(0.0, 0.0, 1.0), c(0.0, 0.0)) - 1.0 / PI).abs() < 1e-16);
        let expected = (1.0 / PI) * (1.0f64 / 101.0).powi(2);
        assert!((poisson_kernel(&pt(0.0, 0.0, 1.0), c(10.0, 0.0)) - expected).abs() < 1e-18);
        let lambda = 3.7;
        let zeta = c(0.4, -1.3);
        let lhs = poisson_kernel(&pt(0.0, 0.0, lambda), zeta);
        let rhs = poisson_kernel(&pt(0.0, 0.0, 1.0), zeta / lambda) / (lambda * lambda);
        assert!((lhs - rhs).abs() < 1e-15 * rhs);
    }

    #[test]
    fn kernel_mass_is_one() {
        let cfg = QuadratureConfig::with_tolerance(1e-9);
        for p in [pt(0.0, 0.0, 1.0), pt(0.0, 0.0, 100.0), pt(5.0, -3.0, 0.2)] {
            assert!((kernel_mass(&p, &cfg).unwrap() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn ray_kernel_antiderivatives_match_quadrature() {
        let z = 0.7;
        let k = RayKernel { z };
        for t in [0.1, 0.9, 3.0] {
            let v = integrate(|r: f64| [r * z * z / (PI * (r * r + z * z).powi(2))], 0.0, t, &[], 1e-14, 30);
            assert!((v.value[0] - k.value(t)).abs() < 1e-13);
            let dz = integrate(
                |r: f64| {
                    let u = r * r + z * z;
                    [r * (2.0 * z / (u * u) - 4.0 * z * z * z / (u * u * u)) / PI]
                },
                0.0,
                t,
                &[],
                1e-14,
                30,
            );
            assert!((dz.value[0] - k.dz(t)).abs() < 1e-13);
            let dx = integrate(|r: f64| [4.0 / PI * z * z * r * r / (r * r + z * z).powi(3)], 0.0, t, &[], 1e-14, 30);
            assert!((dx.value[0] - k.dfoot(t)).abs() < 1e-13);
        }
        assert!((k.dfoot(1e12) - k.dfoot(f64::INFINITY)).abs() < 1e-10);
    }

    #[test]
    fn whole_plane_has_full_measure() {
        let huge = PlanarDomain::disk(c(0.0, 0.0), 1e6).unwrap();
        let m = harmonic_measure(&huge, &pt(0.0, 0.0, 1.0), &QuadratureConfig::default()).unwrap();
        assert!((m.value - 1.0).abs() < 1e-7 + m.error);
    }

    #[test]
    fn halfplane_matches_closed_form() {
        let hp = PlanarDomain::upper_half_plane();
        for (x, y, z) in [(0.0, 1.0, 1.0), (3.0, -0.5, 0.2), (-1.0, 2.0, 5.0), (0.0, -1.0, 0.001)] {
            let p = pt(x, y, z);
            let m = harmonic_measure(&hp, &p, &tight()).unwrap();
            assert!((m.value - halfplane_closed_form(&p)).abs() < 1e-12, "{p:?}");
        }
        assert_eq!(halfplane_closed_form(&pt(7.0, 0.0, 3.0)), 0.5);
        assert!((halfplane_closed_form(&pt(0.0, 1.0, 1.0)) - 0.5 * (1.0 / 2f64.sqrt() + 1.0)).abs() < 1e-15);
        let tiny = halfplane_closed_form(&pt(0.0, -1.0, 0.001));
        assert!((tiny - 2.5e-7).abs() < 1e-12);
    }

    #[test]
    fn disk_matches_closed_form() {
        assert_eq!(disk_closed_form(1.0, 1.0).unwrap(), 0.5);
        assert!((disk_closed_form(2.0, 1e-9).unwrap() - 1.0).abs() < 1e-15);
        assert!(disk_closed_form(2.0, 1e9).unwrap() < 1e-17);
        assert!(disk_closed_form(0.0, 1.0).is_err());
        for (rho, z) in [(1.0, 1.0), (0.3, 0.01), (2.0, 7.0)] {
            let d = PlanarDomain::disk(c(0.0, 0.0), rho).unwrap();
            let m = harmonic_measure(&d, &pt(0.0, 0.0, z), &tight()).unwrap();
            assert!((m.value - disk_closed_form(rho, z).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_closed_forms() {
        let hp = PlanarDomain::upper_half_plane();
        let g = measure_gradient(&hp, &pt(0.0, 1.0, 1.0), &tight()).unwrap();
        // f0 = (y/√(y²+z²) + 1)/2: ∂y = z²/(2r³), ∂z = −yz/(2r³)
        let r3 = 2f64.sqrt().powi(3);
        assert!(g.components[0].abs() < 1e-12);
        assert!((g.components[1] - 1.0 / (2.0 * r3)).abs() < 1e-12);
        assert!((g.components[2] + 1.0 / (2.0 * r3)).abs() < 1e-12);

        let (rho, z) = (0.8, 0.6);
        let d = PlanarDomain::disk(c(0.0, 0.0), rho).unwrap();
        let g = measure_gradient(&d, &pt(0.0, 0.0, z), &tight()).unwrap();
        let expect = -2.0 * rho * rho * z / (rho * rho + z * z).powi(2);
        assert!(g.components[0].abs() < 1e-12 && g.components[1].abs() < 1e-12);
        assert!((g.components[2] - expect).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let dog = PlanarDomain::dogbone(0.3).unwrap();
        let cfg = tight();
        let p = pt(0.4, 0.2, 0.3);
        let g = measure_gradient(&dog, &p, &cfg).unwrap();
        let h = 1e-4;
        for axis in 0..3 {
            let mut d = [0.0; 3];
            d[axis] = h;
            let fp = harmonic_measure(&dog, &p.offset(d).unwrap(), &cfg).unwrap().value;
            d[axis] = -h;
            let fm = harmonic_measure(&dog, &p.offset(d).unwrap(), &cfg).unwrap().value;
            let fd = (fp - fm) / (2.0 * h);
            assert!((fd - g.components[axis]).abs() < 1e-6, "axis {axis}: {fd} vs {}", g.components[axis]);
        }
    }

    #[test]
    fn dogbone_gradient_is_axial_on_axis() {
        let dog = PlanarDomain::dogbone(0.1).unwrap();
        let cfg = QuadratureConfig::default();
        for z in [0.05, 0.3, 1.0, 4.0] {
            let g = measure_gradient(&dog, &pt(0.0, 0.0, z), &cfg).unwrap();
            assert!(g.components[0].abs() < 10.0 * cfg.tolerance);
            assert!(g.components[1].abs() < 10.0 * cfg.tolerance);
        }
    }

    #[test]
    fn harmonic_measure_is_harmonic() {
        let dog = PlanarDomain::dogbone(0.2).unwrap();
        let cfg = QuadratureConfig::with_tolerance(1e-13);
        let f = |q: &H3Point| harmonic_measure(&dog, q, &cfg).map(|m| m.value);
        let p = pt(0.3, 0.1, 0.4);
        let coarse = laplace_beltrami(f, &p, 0.02).unwrap().abs();
        let fine = laplace_beltrami(f, &p, 0.01).unwrap().abs();
        assert!((coarse / fine).log2() >= 1.8, "{coarse} {fine}");
    }

    #[test]
    fn invalid_config_is_rejected() {
        let d = PlanarDomain::disk(c(0.0, 0.0), 1.0).unwrap();
        let bad = QuadratureConfig { tolerance: 0.0, ..Default::default() };
        assert!(harmonic_measure(&d, &pt(0.0, 0.0, 1.0), &bad).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn kernel_is_bounded_by_one(x in -50.0..50.0f64, y in -50.0..50.0f64) {
            prop_assert!(poisson_kernel(&pt(0.0, 0.0, 1.0), c(x, y)) <= 1.0);
        }

        #[test]
        fn nested_domains_are_monotone(r1 in 0.1..1.0f64, dr in 0.0..1.0f64, cx in -0.5..0.5f64, x in -1.0..1.0f64, y in -1.0..1.0f64, z in 0.05..3.0f64) {
            let cfg = QuadratureConfig::default();
            let inner = PlanarDomain::disk(c(cx, 0.0), r1).unwrap();
            let outer = PlanarDomain::disk(c(cx, 0.0), r1 + dr).unwrap();
            let p = pt(x, y, z);
            let a = harmonic_measure(&inner, &p, &cfg).unwrap().value;
            let b = harmonic_measure(&outer, &p, &cfg).unwrap().value;
            prop_assert!(a <= b + 2.0 * cfg.tolerance);
        }

        #[test]
        fn disjoint_domains_are_additive(x in -1.0..1.0f64, y in -1.0..1.0f64, z in 0.05..3.0f64) {
            let cfg = QuadratureConfig::default();
            let a = PlanarDomain::disk(c(-0.6, 0.0), 0.5).unwrap();
            let b = PlanarDomain::polygon(vec![c(0.0, -0.5), c(1.0, -0.5), c(1.0, 0.5), c(0.0, 0.5)]).unwrap();
            let u = PlanarDomain::union(vec![a.clone(), b.clone()]).unwrap();
            let p = pt(x, y, z);
            let ma = harmonic_measure(&a, &p, &cfg).unwrap();
            let mb = harmonic_measure(&b, &p, &cfg).unwrap();
            let mu = harmonic_measure(&u, &p, &cfg).unwrap();
            prop_assert!((mu.value - ma.value - mb.value).abs() < 3.0 * cfg.tolerance);
        }

        #[test]
        fn dilation_equivariance(lambda in 0.05..20.0f64, z in 0.05..3.0f64) {
            let cfg = QuadratureConfig::with_tolerance(1e-10);
            let dog = PlanarDomain::dogbone(0.25).unwrap();
            let a = harmonic_measure(&dog, &pt(0.0, 0.0, z), &cfg).unwrap().value;
            let b = harmonic_measure(&dog.scaled(lambda).unwrap(), &pt(0.0, 0.0, lambda * z), &cfg).unwrap().value;
            prop_assert!((a - b).abs() < 2e-10);
        }
    }
}
