//! Green's functions on H³ and their Poincaré series over surface groups,
//! the potential `V = 1 + Σ G_{p_j}`, and quantization sums.
//!
//! With `Δ = −div grad` the Green's function normalized by `ΔG = 2πδ_p` is
//! `G = 1/(e^{2d} − 1)`, so the outward flux of `grad G` through any sphere
//! around the pole is `−2π`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::PlanarDomain;
use crate::error::{Error, Result};
use crate::groups::Enumeration;
use crate::hyperbolic::{h3_distance, H3Point};
use crate::measure::{harmonic_measure, QuadratureConfig};

const MIN_SEPARATION: f64 = 1e-8;

/// `1/(e^{2d} − 1)` for `d = dist(pole, q)`.
pub fn h3_green(pole: &H3Point, q: &H3Point) -> Result<f64> {
    let d = h3_distance(pole, q);
    if d < MIN_SEPARATION {
        return Err(Error::CoincidentPoints(d));
    }
    Ok(1.0 / (2.0 * d).exp_m1())
}

/// Euclidean gradient of `h3_green(pole, ·)` at `q`.
pub fn h3_green_gradient(pole: &H3Point, q: &H3Point) -> Result<[f64; 3]> {
    let d = h3_distance(pole, q);
    if d < MIN_SEPARATION {
        return Err(Error::CoincidentPoints(d));
    }
    let (zp, zq) = (pole.z(), q.z());
    let (dx, dy, dz) = (q.x() - pole.x(), q.y() - pole.y(), q.z() - pole.z());
    let r2 = dx * dx + dy * dy + dz * dz;
    let grad_cosh = [dx / (zp * zq), dy / (zp * zq), dz / (zp * zq) - r2 / (2.0 * zp * zq * zq)];
    let s = d.sinh();
    let k = -1.0 / (2.0 * s * s * s);
    Ok(grad_cosh.map(|c| k * c))
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { t } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (t * p - pm) / (t * t - 1.0);
            let dt = p / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Flux through a geodesic sphere with an under-resolution estimate
/// (difference from the rule with half the nodes).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxValue {
    pub value: f64,
    pub resolution_error: f64,
}

fn sphere_flux<F: Fn(&H3Point) -> Result<[f64; 3]> + Sync>(grad: &F, centre: &H3Point, radius: f64, n: usize) -> Result<f64> {
    // the geodesic sphere is the Euclidean sphere with centre (x0, y0, z0 cosh r)
    // and radius z0 sinh r
    let (cz, rho) = (centre.z() * radius.cosh(), centre.z() * radius.sinh());
    let (nodes, weights) = gauss_legendre(n);
    let m = 2 * n;
    let dphi = 2.0 * std::f64::consts::PI / m as f64;
    let rows = nodes
        .par_iter()
        .zip(weights.par_iter())
        .map(|(&c, &w)| {
            let s = (1.0 - c * c).sqrt();
            let mut row = 0.0;
            for j in 0..m {
                let phi = dphi * j as f64;
                let nrm = [s * phi.cos(), s * phi.sin(), c];
                let q = H3Point::new(centre.x() + rho * nrm[0], centre.y() + rho * nrm[1], cz + rho * nrm[2])?;
                let g = grad(&q)?;
                // ⟨grad_h G, ν_h⟩ dA_h = (∇_e G · n̂)/z dA_e
                row += (g[0] * nrm[0] + g[1] * nrm[1] + g[2] * nrm[2]) / q.z();
            }
            Ok(w * row * dphi * rho * rho)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(rows.iter().sum())
}

/// Outward flux of `grad G` through the geodesic sphere of the given radius about the pole.
pub fn green_flux(pole: &H3Point, radius: f64, n: usize) -> Result<FluxValue> {
    flux_of(|q| h3_green_gradient(pole, q), pole, radius, n)
}

/// Outward flux of an arbitrary Euclidean gradient field through a geodesic sphere.
pub fn flux_of<F: Fn(&H3Point) -> Result<[f64; 3]> + Sync>(grad: F, centre: &H3Point, radius: f64, n: usize) -> Result<FluxValue> {
    if !(radius > 0.0 && radius.is_finite()) || n < 4 {
        return Err(Error::InvalidInput(format!("need radius > 0 and n ≥ 4, got {radius}, {n}")));
    }
    let value = sphere_flux(&grad, centre, radius, n)?;
    let coarse = sphere_flux(&grad, centre, radius, n / 2)?;
    Ok(FluxValue { value, resolution_error: (value - coarse).abs() })
}

/// Truncated Poincaré series with its geometric tail estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub partial_sum: f64,
    pub shells_used: usize,
    pub tail_estimate: f64,
    /// Fitted ratio of consecutive shell sums (0 for a trivial group).
    pub ratio: f64,
    pub shell_sums: Vec<f64>,
}

impl SeriesValue {
    pub fn value(&self) -> f64 {
        self.partial_sum
    }
}

/// Ratio of consecutive terms from a least-squares line through the last three `ln s`.
fn fit_ratio(s: &[f64]) -> f64 {
    let n = s.len();
    let l = [s[n - 3].ln(), s[n - 2].ln(), s[n - 1].ln()];
    ((l[2] - l[0]) / 2.0).exp()
}

/// `Σ_{φ} 1/(e^{2 dist(φ·pole, q)} − 1)` over word-length shells `0..=shells`.
///
/// Group matrices act on H³ directly (`apply_h3`); for disk automorphisms the
/// lift of the disk centre is `(0, 0, 1)`.
pub fn quotient_green(group: &Enumeration, pole: &H3Point, q: &H3Point, shells: usize) -> Result<SeriesValue> {
    if shells > group.max_len() {
        return Err(Error::InvalidInput(format!("enumeration only reaches length {}, asked for {shells}", group.max_len())));
    }
    let mut sums = Vec::with_capacity(shells + 1);
    for l in 0..=shells {
        let terms = group
            .shell(l)
            .par_iter()
            .map(|g| h3_green(&g.map.apply_h3(pole), q))
            .collect::<Result<Vec<f64>>>()?;
        let mut terms = terms;
        terms.sort_by(f64::total_cmp);
        sums.push(terms.iter().sum::<f64>());
    }
    let partial_sum = {
        let mut s = sums.clone();
        s.reverse();
        s.iter().sum::<f64>()
    };
    let nonzero = sums.iter().skip(1).any(|&s| s > 0.0);
    let (ratio, tail_estimate) = if !nonzero {
        (0.0, 0.0)
    } else {
        if shells < 2 {
            return Err(Error::InvalidInput("need at least 3 shells for a tail estimate".into()));
        }
        let rho = fit_ratio(&sums);
        if !(rho < 1.0) {
            return Err(Error::SeriesDivergence(format!("shell sums do not decay (ratio {rho})")));
        }
        (rho, sums[shells] * rho / (1.0 - rho))
    };
    Ok(SeriesValue { partial_sum, shells_used: shells, tail_estimate, ratio, shell_sums: sums })
}

/// Points in H³ with optional tunnel-vision values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointConfiguration {
    pub points: Vec<H3Point>,
    pub f: Vec<f64>,
    pub f_error: Vec<f64>,
}

impl PointConfiguration {
    pub fn new(points: Vec<H3Point>) -> Result<Self> {
        for i in 0..points.len() {
            for j in 0..i {
                let d = h3_distance(&points[i], &points[j]);
                if d < MIN_SEPARATION {
                    return Err(Error::CoincidentPoints(d));
                }
            }
        }
        Ok(Self { points, f: Vec::new(), f_error: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Fills `f` and `f_error` from harmonic measure of `domain`.
    pub fn evaluate(&mut self, domain: &PlanarDomain, config: &QuadratureConfig) -> Result<()> {
        let vals = self.points.par_iter().map(|p| harmonic_measure(domain, p, config)).collect::<Result<Vec<_>>>()?;
        self.f = vals.iter().map(|m| m.value).collect();
        self.f_error = vals.iter().map(|m| m.error).collect();
        Ok(())
    }
}

/// `V(q) = 1 + Σ_j G_{p_j}(q)`; with a group each `G` is the Poincaré series.
pub fn potential_v(config: &PointConfiguration, q: &H3Point, group: Option<(&Enumeration, usize)>) -> Result<f64> {
    let mut total = 1.0;
    for p in &config.points {
        total += match group {
            Some((en, shells)) => quotient_green(en, p, q, shells)?.partial_sum,
            None => h3_green(p, q)?,
        };
    }
    Ok(total)
}

pub const QUANTIZATION_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizationSum {
    pub sum: f64,
    pub ell: i64,
    pub is_quantizable: bool,
    pub tol: f64,
    pub values: Vec<f64>,
}

/// Quantization test for given tunnel-vision values.
///
/// The values are summed in sorted order, so the result does not depend on
/// the order of the points.
pub fn quantization_from_values(values: &[f64], tol: f64) -> QuantizationSum {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let sum: f64 = sorted.iter().sum();
    let ell = sum.round() as i64;
    let k = values.len() as i64;
    let is_quantizable = (sum - ell as f64).abs() < tol && ell > 0 && ell < k;
    QuantizationSum { sum, ell, is_quantizable, tol, values: values.to_vec() }
}

/// Evaluates `f(p_j)` for `domain` and applies the quantization test.
pub fn quantization_sum(domain: &PlanarDomain, config: &PointConfiguration, quad: &QuadratureConfig) -> Result<QuantizationSum> {
    let mut c = config.clone();
    c.evaluate(domain, quad)?;
    Ok(quantization_from_values(&c.f, QUANTIZATION_TOL))
}

/// Serialized form `{"points", "f", "ell", "sum"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationRecord {
    pub points: Vec<H3Point>,
    pub f: Vec<f64>,
    pub ell: i64,
    pub sum: f64,
}

impl ConfigurationRecord {
    pub fn new(config: &PointConfiguration, q: &QuantizationSum) -> Self {
        Self { points: config.points.clone(), f: config.f.clone(), ell: q.ell, sum: q.sum }
    }
}

/// Interior foot points for `k` vertical lines: spread along a ray from the
/// origin, trying further directions when a candidate leaves the domain.
fn foot_points(domain: &PlanarDomain, k: usize) -> Result<Vec<num_complex::Complex64>> {
    let r = if domain.is_bounded() { domain.bounding_radius() } else { 1.0 };
    for t in 0..16 {
        let dir = num_complex::Complex64::from_polar(1.0, t as f64 * std::f64::consts::PI / 8.0);
        for spread in [0.25, 0.1, 0.02] {
            let feet: Vec<_> = (0..k).map(|j| dir * (spread * r * j as f64 / k as f64)).collect();
            if feet.iter().all(|&z| domain.contains(z)) {
                return Ok(feet);
            }
        }
    }
    Err(Error::Precondition("could not place distinct interior foot points".into()))
}

/// Height on the vertical line over `foot` where `f = level`, by bisection in `ln z`.
fn solve_level(domain: &PlanarDomain, foot: num_complex::Complex64, level: f64, quad: &QuadratureConfig) -> Result<H3Point> {
    let f = |z: f64| -> Result<f64> { Ok(harmonic_measure(domain, &H3Point::new(foot.re, foot.im, z)?, quad)?.value) };
    let mut lo = 1e-3;
    let mut tries = 0;
    while f(lo)? <= level {
        lo *= 0.1;
        tries += 1;
        if tries > 20 {
            return Err(Error::Precondition(format!("level {level} not bracketed below on the line over {foot}")));
        }
    }
    let mut hi = 1.0;
    tries = 0;
    while f(hi)? >= level {
        hi *= 10.0;
        tries += 1;
        if tries > 20 {
            return Err(Error::Precondition(format!("level {level} not bracketed above on the line over {foot}")));
        }
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if !(m > a && m < b) {
            break;
        }
        let v = f(m.exp())? - level;
        if v.abs() < 1e-3 * QUANTIZATION_TOL {
            return H3Point::new(foot.re, foot.im, m.exp());
        }
        if v > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    H3Point::new(foot.re, foot.im, (0.5 * (a + b)).exp())
}

/// `k` points on distinct vertical lines with prescribed tunnel-vision values.
pub fn find_configuration_at_levels(domain: &PlanarDomain, levels: &[f64], quad: &QuadratureConfig) -> Result<PointConfiguration> {
    if levels.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
        return Err(Error::InvalidInput("levels must lie in (0, 1)".into()));
    }
    let q = QuadratureConfig { tolerance: quad.tolerance.min(1e-12), ..*quad };
    let feet = foot_points(domain, levels.len())?;
    let points = feet
        .par_iter()
        .zip(levels.par_iter())
        .map(|(&foot, &level)| solve_level(domain, foot, level, &q))
        .collect::<Result<Vec<_>>>()?;
    let mut config = PointConfiguration::new(points)?;
    config.evaluate(domain, &q)?;
    Ok(config)
}

/// `k` points with `f = ℓ/k` each, so that the configuration is quantizable with sum `ℓ`.
pub fn find_quantizable(domain: &PlanarDomain, k: usize, ell: usize, quad: &QuadratureConfig) -> Result<PointConfiguration> {
    if k < 2 || ell < 1 || ell >= k {
        return Err(Error::Precondition(format!("need k ≥ 2 and 1 ≤ ℓ ≤ k − 1, got k = {k}, ℓ = {ell}")));
    }
    find_configuration_at_levels(domain, &vec![ell as f64 / k as f64; k], quad)
}
