//! Critical points of tunnel-vision functions.
//!
//! For a domain symmetric under `ζ ↦ −ζ` the gradient of `f` is tangent to the
//! vertical axis over the origin, so interior extrema of `z ↦ f(0, 0, z)` are
//! genuine critical points in H³. Off-axis searches use damped Newton on the
//! analytic gradient with a finite-difference Hessian.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::domain::{reflection_symmetric, DogboneSpec, PlanarDomain};
use crate::error::{Error, Result};
use crate::hyperbolic::{h3_distance, H3Point};
use crate::measure::{det3, harmonic_measure, measure_gradient, measure_hessian, MeasureValue, QuadratureConfig};

const SYMMETRY_SAMPLES: usize = 20_000;
/// Seed of the random reflection-symmetry test.
pub const SYMMETRY_SEED: u64 = 0x5eed;

/// `f(0, 0, z)` on a log-spaced grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisProfile {
    pub z: Vec<f64>,
    pub f: Vec<f64>,
    pub error: Vec<f64>,
}

impl AxisProfile {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("z,f,err\n");
        for i in 0..self.z.len() {
            let _ = writeln!(s, "{:.16e},{:.16e},{:.16e}", self.z[i], self.f[i], self.error[i]);
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    AxisMin,
    AxisMax,
    #[serde(rename = "3d-refined")]
    Refined3d,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointReport {
    pub location: H3Point,
    pub value: f64,
    pub value_error: f64,
    /// `z·|∇f|` at the location.
    pub gradient_norm: f64,
    pub gradient_tol: f64,
    pub classification: Classification,
    /// Determinant of the coordinate Hessian (diagnostic only).
    pub hessian_det: f64,
    /// False when the extremum margin is within quadrature error.
    pub conclusive: bool,
}

fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
}

fn require_bounded_with_origin(domain: &PlanarDomain) -> Result<()> {
    if !domain.is_bounded() {
        return Err(Error::Precondition("domain must be bounded".into()));
    }
    if !domain.contains(num_complex::Complex64::new(0.0, 0.0)) {
        return Err(Error::Precondition("domain must contain the origin".into()));
    }
    Ok(())
}

/// Samples `f(0, 0, z)` at `n` log-spaced heights in `[z_min, z_max]`.
pub fn axis_profile(domain: &PlanarDomain, z_min: f64, z_max: f64, n: usize, config: &QuadratureConfig) -> Result<AxisProfile> {
    if !(z_min > 0.0 && z_max > z_min && z_max.is_finite()) || n < 2 {
        return Err(Error::InvalidInput(format!("need 0 < z_min < z_max and n ≥ 2, got {z_min}, {z_max}, {n}")));
    }
    require_bounded_with_origin(domain)?;
    let z = log_space(z_min, z_max, n);
    let values = z
        .par_iter()
        .map(|&zi| harmonic_measure(domain, &H3Point::on_axis(zi)?, config))
        .collect::<Result<Vec<MeasureValue>>>()?;
    Ok(AxisProfile { z, f: values.iter().map(|m| m.value).collect(), error: values.iter().map(|m| m.error).collect() })
}

fn axis_value(domain: &PlanarDomain, z: f64, config: &QuadratureConfig) -> Result<MeasureValue> {
    harmonic_measure(domain, &H3Point::on_axis(z)?, config)
}

fn axis_slope(domain: &PlanarDomain, z: f64, config: &QuadratureConfig) -> Result<f64> {
    Ok(measure_gradient(domain, &H3Point::on_axis(z)?, config)?.components[2])
}

/// Golden-section search for a minimum of `g` on `[a, b]`.
fn golden_section<G: Fn(f64) -> Result<f64>>(g: G, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut gc, mut gd) = (g(c)?, g(d)?);
    for _ in 0..200 {
        if b - a <= tol * (1.0 + 0.5 * (a + b)) {
            break;
        }
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - phi * (b - a);
            gc = g(c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + phi * (b - a);
            gd = g(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Bisection on a sign change of `s` in `[a, b]`.
fn bisect<S: Fn(f64) -> Result<f64>>(s: S, mut a: f64, mut b: f64) -> Result<f64> {
    let mut sa = s(a)?;
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if !(m > a && m < b) {
            break;
        }
        let sm = s(m)?;
        if sm == 0.0 {
            return Ok(m);
        }
        if (sm > 0.0) == (sa > 0.0) {
            a = m;
            sa = sm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Default acceptance threshold on `z·|∇f|` for a given quadrature setting.
pub fn gradient_threshold(config: &QuadratureConfig) -> f64 {
    10.0 * config.tolerance
}

fn report(
    domain: &PlanarDomain,
    p: &H3Point,
    classification: Classification,
    conclusive: bool,
    gradient_tol: f64,
    config: &QuadratureConfig,
) -> Result<CriticalPointReport> {
    let m = harmonic_measure(domain, p, config)?;
    let g = measure_gradient(domain, p, config)?;
    let hess = measure_hessian(domain, p, config)?;
    Ok(CriticalPointReport {
        location: *p,
        value: m.value,
        value_error: m.error,
        gradient_norm: g.hyperbolic_norm(p),
        gradient_tol,
        classification,
        hessian_det: det3(&hess),
        conclusive,
    })
}

/// Locates interior extrema of an axis profile and refines them.
///
/// Sign changes of the discrete derivative are read off differences larger
/// than the combined quadrature error; each bracket is refined by golden
/// section on `f(0, 0, ·)` to relative width `refine_tol` and then polished
/// by bisection on `∂f/∂z`.
pub fn axis_critical_points(
    profile: &AxisProfile,
    domain: &PlanarDomain,
    refine_tol: f64,
    config: &QuadratureConfig,
) -> Result<Vec<CriticalPointReport>> {
    require_bounded_with_origin(domain)?;
    if !reflection_symmetric(domain, SYMMETRY_SAMPLES, SYMMETRY_SEED)? {
        return Err(Error::Precondition("domain is not symmetric under ζ ↦ −ζ".into()));
    }
    if !(refine_tol > 0.0) {
        return Err(Error::InvalidInput(format!("refine_tol must be positive, got {refine_tol}")));
    }
    // (index of left sample, sign) for each significant difference
    let mut steps: Vec<(usize, bool)> = Vec::new();
    for i in 0..profile.len().saturating_sub(1) {
        let d = profile.f[i + 1] - profile.f[i];
        if d.abs() > profile.error[i] + profile.error[i + 1] {
            steps.push((i, d > 0.0));
        }
    }
    let mut brackets = Vec::new();
    for w in steps.windows(2) {
        let ((i, up_i), (j, up_j)) = (w[0], w[1]);
        if up_i != up_j {
            brackets.push((i, j + 1, if up_j { Classification::AxisMin } else { Classification::AxisMax }));
        }
    }
    let tol_grad = gradient_threshold(config);
    let mut out = Vec::new();
    for (lo, hi, class) in brackets {
        let (za, zb) = (profile.z[lo], profile.z[hi]);
        let sign = if class == Classification::AxisMin { 1.0 } else { -1.0 };
        let g = |z: f64| axis_value(domain, z, config).map(|m| sign * m.value);
        let zg = golden_section(g, za, zb, refine_tol)?;
        // polish on the slope, within the profile bracket
        let slope = |z: f64| axis_slope(domain, z, config);
        let s0 = slope(zg)?;
        let mut width = refine_tol * (1.0 + zg);
        let mut z_star = zg;
        for _ in 0..60 {
            let (a, b) = ((zg - width).max(za), (zg + width).min(zb));
            let (sa, sb) = (slope(a)?, slope(b)?);
            if (sa > 0.0) != (sb > 0.0) {
                z_star = bisect(slope, a, b)?;
                break;
            }
            if (a == za && b == zb) || s0 == 0.0 {
                break;
            }
            width *= 2.0;
        }
        let p = H3Point::on_axis(z_star)?;
        let centre = axis_value(domain, z_star, config)?;
        let margin = (sign * (profile.f[lo] - centre.value)).min(sign * (profile.f[hi] - centre.value));
        let conclusive = margin > 2.0 * (centre.error + profile.error[lo].max(profile.error[hi]));
        out.push(report(domain, &p, class, conclusive, tol_grad, config)?);
    }
    Ok(out)
}

/// Outcome of the dogbone critical-point experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DogboneReport {
    pub epsilon: f64,
    pub f_at_eps: MeasureValue,
    pub f_at_one: MeasureValue,
    /// `f(0,0,1)` for the two disks without the corridor.
    pub two_disk_lower_bound: f64,
    pub inequality_holds: bool,
    pub axis_window: [f64; 2],
    pub samples: usize,
    pub critical_points: Vec<CriticalPointReport>,
    pub conclusive: bool,
}

pub const DOGBONE_SAMPLES: usize = 200;

/// Compares `f(0,0,ε)` with `f(0,0,1)` and searches the axis window `[ε², 10]`.
pub fn dogbone_experiment(epsilon: f64, config: &QuadratureConfig) -> Result<(DogboneReport, AxisProfile)> {
    let spec = DogboneSpec::new(epsilon)?;
    let domain = spec.domain();
    let f_at_eps = axis_value(&domain, epsilon, config)?;
    let f_at_one = axis_value(&domain, 1.0, config)?;
    let disks = PlanarDomain::union(vec![
        PlanarDomain::disk(num_complex::Complex64::new(1.0, 0.0), 0.25)?,
        PlanarDomain::disk(num_complex::Complex64::new(-1.0, 0.0), 0.25)?,
    ])?;
    let two_disk_lower_bound = axis_value(&disks, 1.0, config)?.value;
    let inequality_holds = f_at_eps.value + f_at_eps.error < f_at_one.value - f_at_one.error;
    let window = [epsilon * epsilon, 10.0];
    let profile = axis_profile(&domain, window[0], window[1], DOGBONE_SAMPLES, config)?;
    let critical_points = axis_critical_points(&profile, &domain, 1e-10, config)?;
    let min_then_max = critical_points.windows(2).any(|w| {
        w[0].classification == Classification::AxisMin
            && w[1].classification == Classification::AxisMax
            && w[0].conclusive
            && w[1].conclusive
            && w[1].value - w[0].value > 3.0 * (w[0].value_error + w[1].value_error)
    });
    let conclusive = inequality_holds && min_then_max;
    Ok((
        DogboneReport {
            epsilon,
            f_at_eps,
            f_at_one,
            two_disk_lower_bound,
            inequality_holds,
            axis_window: window,
            samples: DOGBONE_SAMPLES,
            critical_points,
            conclusive,
        },
        profile,
    ))
}

fn solve3(m: &[[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = det3(m);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let mut x = [0.0; 3];
    for (k, xk) in x.iter_mut().enumerate() {
        let mut mk = *m;
        for i in 0..3 {
            mk[i][k] = b[i];
        }
        *xk = det3(&mk) / det;
    }
    Some(x)
}

/// Damped Newton iteration for `∇f = 0` from `p0`.
///
/// Converges when `z·|∇f| < tol`. The search box is `|x|, |y| ≤ 4·reach` and
/// `z ∈ [reach/50, 50·reach]` where `reach` bounds the domain; `z·|∇f|` decays
/// towards the boundary plane and towards infinity, so the box keeps those
/// regions from passing as zeros. Leaving the box, or 30 iterations without
/// convergence, is reported as divergence.
pub fn refine_critical_point_3d(
    domain: &PlanarDomain,
    p0: &H3Point,
    tol: f64,
    config: &QuadratureConfig,
) -> Result<(CriticalPointReport, usize)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tol must be positive, got {tol}")));
    }
    let reach = if domain.is_bounded() { domain.bounding_radius() } else { 1.0 };
    let xy_box = 4.0 * reach;
    let z_box = (reach / 50.0, 50.0 * reach);
    let cfg = QuadratureConfig { tolerance: config.tolerance.min(tol * 1e-2), ..*config };
    let inside = |p: &H3Point| p.x().abs() <= xy_box && p.y().abs() <= xy_box && p.z() >= z_box.0 && p.z() <= z_box.1;

    if !inside(p0) {
        return Err(Error::InvalidInput(format!("start point {:?} is outside the search box", p0.coords())));
    }
    let mut p = *p0;
    let mut g = measure_gradient(domain, &p, &cfg)?;
    if !g.euclidean_norm().is_finite() {
        return Err(Error::InvalidInput("gradient is not finite at the start point".into()));
    }
    for iter in 0..=30 {
        if g.hyperbolic_norm(&p) < tol {
            let rep = report(domain, &p, Classification::Refined3d, true, tol, &cfg)?;
            return Ok((rep, iter));
        }
        if iter == 30 {
            break;
        }
        let hess = measure_hessian(domain, &p, &cfg)?;
        let neg = [-g.components[0], -g.components[1], -g.components[2]];
        let step = solve3(&hess, neg).ok_or_else(|| Error::Divergence("singular Hessian".into()))?;
        // damp: cap the step at half the height, then backtrack on |∇f|
        let len = (step[0] * step[0] + step[1] * step[1] + step[2] * step[2]).sqrt();
        let mut scale = (0.5 * p.z() / len).min(1.0);
        let merit = g.hyperbolic_norm(&p);
        let mut accepted = None;
        for _ in 0..12 {
            let q = p.offset([scale * step[0], scale * step[1], scale * step[2]]);
            if let Ok(q) = q {
                if !inside(&q) {
                    return Err(Error::Divergence(format!("left the search box at {:?}", q.coords())));
                }
                let gq = measure_gradient(domain, &q, &cfg)?;
                if gq.hyperbolic_norm(&q) < merit {
                    accepted = Some((q, gq));
                    break;
                }
            }
            scale *= 0.5;
        }
        let Some((q, gq)) = accepted else {
            return Err(Error::Divergence(format!("no descent step from {:?}", p.coords())));
        };
        p = q;
        g = gq;
    }
    Err(Error::Divergence(format!("no convergence within 30 iterations, last point {:?}", p.coords())))
}

/// Grid for the 3D gradient-norm scan: `n³` points over `|x|, |y| ≤ xy_extent`
/// and log-spaced `z ∈ [z_min, z_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub xy_extent: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl GridSpec {
    /// Default grid scaled to the domain's bounding radius `r`:
    /// `|x|, |y| ≤ 1.5r`, `z ∈ [0.05r, 20r]`.
    pub fn for_domain(domain: &PlanarDomain, n: usize) -> Self {
        let r = domain.bounding_radius();
        Self { n, xy_extent: 1.5 * r, z_min: 0.05 * r, z_max: 20.0 * r }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 || !(self.xy_extent > 0.0) || !(self.z_min > 0.0 && self.z_max > self.z_min) {
            return Err(Error::InvalidInput(format!("invalid grid {self:?}")));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<H3Point> {
        let xs: Vec<f64> =
            (0..self.n).map(|i| -self.xy_extent + 2.0 * self.xy_extent * i as f64 / (self.n - 1) as f64).collect();
        let zs = log_space(self.z_min, self.z_max, self.n);
        let mut out = Vec::with_capacity(self.n.pow(3));
        for &x in &xs {
            for &y in &xs {
                for &z in &zs {
                    out.push(H3Point::new(x, y, z).expect("grid heights are positive"));
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    NoCriticalPointFound,
    CriticalPointsFound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchCoverage {
    pub grid: GridSpec,
    pub quadrature: QuadratureConfig,
    pub gradient_threshold: f64,
    pub min_grid_gradient_norm: f64,
    pub seeds_refined: usize,
    pub axis_search: bool,
}

/// Search-relative verdict: `NoCriticalPointFound` is evidence, not proof.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub reports: Vec<CriticalPointReport>,
    pub coverage: SearchCoverage,
}

impl Verdict {
    /// Any critical point rules out an almost-Kähler representative.
    pub fn almost_kahler_possible(&self) -> bool {
        self.status == VerdictStatus::NoCriticalPointFound
    }
}

/// Indices of grid points whose gradient norm is a strict local minimum
/// among their (up to 26) neighbours and not on the grid's outer faces.
fn interior_minima(norms: &[f64], n: usize) -> Vec<usize> {
    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let mut out = Vec::new();
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            for k in 1..n - 1 {
                let c = norms[idx(i, j, k)];
                let mut is_min = true;
                'nb: for di in [-1i64, 0, 1] {
                    for dj in [-1i64, 0, 1] {
                        for dk in [-1i64, 0, 1] {
                            if di == 0 && dj == 0 && dk == 0 {
                                continue;
                            }
                            let o = idx((i as i64 + di) as usize, (j as i64 + dj) as usize, (k as i64 + dk) as usize);
                            if norms[o] < c {
                                is_min = false;
                                break 'nb;
                            }
                        }
                    }
                }
                if is_min {
                    out.push(idx(i, j, k));
                }
            }
        }
    }
    out
}

const MAX_SEEDS: usize = 16;

/// Searches for critical points of the tunnel-vision function of `domain`.
///
/// Symmetric domains get the axis search first. The grid scan then seeds
/// Newton refinement from interior local minima of `z·|∇f|`, smallest first.
pub fn almost_kahler_verdict(domain: &PlanarDomain, grid: &GridSpec, config: &QuadratureConfig) -> Result<Verdict> {
    require_bounded_with_origin(domain)?;
    grid.validate()?;
    let threshold = gradient_threshold(config);
    let mut reports: Vec<CriticalPointReport> = Vec::new();
    let symmetric = reflection_symmetric(domain, SYMMETRY_SAMPLES, SYMMETRY_SEED)?;
    if symmetric {
        let profile = axis_profile(domain, grid.z_min, grid.z_max, DOGBONE_SAMPLES, config)?;
        reports.extend(axis_critical_points(&profile, domain, 1e-10, config)?);
    }
    let pts = grid.points();
    let norms = pts
        .par_iter()
        .map(|p| measure_gradient(domain, p, config).map(|g| g.hyperbolic_norm(p)))
        .collect::<Result<Vec<f64>>>()?;
    let min_norm = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let mut seeds = interior_minima(&norms, grid.n);
    seeds.sort_by(|&a, &b| norms[a].total_cmp(&norms[b]).then(a.cmp(&b)));
    seeds.truncate(MAX_SEEDS);
    let refined: Vec<Option<CriticalPointReport>> = seeds
        .par_iter()
        .map(|&s| refine_critical_point_3d(domain, &pts[s], threshold, config).ok().map(|(r, _)| r))
        .collect();
    for r in refined.into_iter().flatten() {
        if reports.iter().all(|e| h3_distance(&e.location, &r.location) > 1e-4) {
            reports.push(r);
        }
    }
    let status = if reports.is_empty() { VerdictStatus::NoCriticalPointFound } else { VerdictStatus::CriticalPointsFound };
    Ok(Verdict {
        status,
        reports,
        coverage: SearchCoverage {
            grid: *grid,
            quadrature: *config,
            gradient_threshold: threshold,
            min_grid_gradient_norm: min_norm,
            seeds_refined: seeds.len(),
            axis_search: symmetric,
        },
    })
}
