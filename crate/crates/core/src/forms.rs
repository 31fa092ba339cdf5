//! Self-dual 2-forms built from a harmonic function on H³.
//!
//! For `ω = ψ∧θ + V⋆ψ` with `ψ = df`, the pointwise norm in the metric
//! `Vh + V⁻¹θ²` is `√2·|ψ|_h`, independent of `V` and `θ`; `ω` vanishes
//! exactly at critical points of `f`. Only that norm is computed here, with
//! `θ` kept as an abstract fourth coframe slot.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::PlanarDomain;
use crate::error::{Error, Result};
use crate::green::{potential_v, PointConfiguration};
use crate::hyperbolic::{h3_distance, H3Point};
use crate::measure::{harmonic_measure, measure_gradient, QuadratureConfig};
use crate::tunnel::{almost_kahler_verdict, gradient_threshold, refine_critical_point_3d, GridSpec, Verdict};

/// Data attached to a point of the circle bundle's base.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FramePoint {
    pub base: H3Point,
    pub v: f64,
    pub df: [f64; 3],
    pub u: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormSample {
    pub base: H3Point,
    pub omega_norm_g0: f64,
    pub psi_norm_h: f64,
}

impl FormSample {
    fn from_gradient(base: H3Point, df: [f64; 3]) -> Self {
        let psi = base.z() * (df[0] * df[0] + df[1] * df[1] + df[2] * df[2]).sqrt();
        Self { base, omega_norm_g0: std::f64::consts::SQRT_2 * psi, psi_norm_h: psi }
    }
}

/// Choice of boundary defining function `u`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefiningFunction {
    /// `u = 2z/(1 + x² + y² + z²)`: equal to `z` to leading order at the
    /// boundary plane and vanishing at the point at infinity as well.
    Height,
    /// `u = √(f(1 − f))`.
    Harmonic,
}

impl DefiningFunction {
    pub fn eval(self, p: &H3Point, f: f64) -> f64 {
        match self {
            Self::Height => 2.0 * p.z() / (1.0 + p.x() * p.x() + p.y() * p.y() + p.z() * p.z()),
            Self::Harmonic => (f * (1.0 - f)).max(0.0).sqrt(),
        }
    }
}

fn check_off_poles(config: &PointConfiguration, p: &H3Point) -> Result<()> {
    for q in &config.points {
        let d = h3_distance(p, q);
        if d < 1e-8 {
            return Err(Error::CoincidentPoints(d));
        }
    }
    Ok(())
}

/// Frame data at `p`: `V` from the configuration (no group), `df`, and `u`.
pub fn frame_point(
    domain: &PlanarDomain,
    config: &PointConfiguration,
    p: &H3Point,
    quad: &QuadratureConfig,
    u: DefiningFunction,
) -> Result<FramePoint> {
    check_off_poles(config, p)?;
    let v = potential_v(config, p, None)?;
    let f = harmonic_measure(domain, p, quad)?.value;
    let g = measure_gradient(domain, p, quad)?;
    Ok(FramePoint { base: *p, v, df: g.components, u: u.eval(p, f) })
}

/// `|ω|_{g₀} = √2·z·|∇f|` at `p`.
pub fn sd_form_norm(domain: &PlanarDomain, config: &PointConfiguration, p: &H3Point, quad: &QuadratureConfig) -> Result<FormSample> {
    check_off_poles(config, p)?;
    let g = measure_gradient(domain, p, quad)?;
    Ok(FormSample::from_gradient(*p, g.components))
}

/// Same norm from stored frame data; `V` does not enter.
pub fn form_sample_from_frame(frame: &FramePoint) -> FormSample {
    FormSample::from_gradient(frame.base, frame.df)
}

/// Residuals of the algebraic identities for `ω = ψ∧θ + V⋆ψ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraResidual {
    /// `‖*ω − ω‖` for the four-dimensional Hodge star.
    pub selfduality: f64,
    /// `| |ω| − √2|ψ| |`.
    pub norm: f64,
}

impl AlgebraResidual {
    pub fn max(&self) -> f64 {
        self.selfduality.max(self.norm)
    }
}

fn levi_civita(idx: [usize; 4]) -> f64 {
    let mut v = idx;
    let mut sign = 1.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            if v[i] == v[j] {
                return 0.0;
            }
        }
    }
    // bubble sort, counting transpositions
    for i in 0..4 {
        for j in 0..3 - i {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    sign
}

/// Builds `ω` in the coframe `(e¹, e², e³, θ)`, rescales to the orthonormal
/// coframe `E^i = V^{1/2}e^i`, `E⁴ = V^{−1/2}θ`, and compares with its Hodge dual
/// for the orientation `E¹E²E³E⁴`.
pub fn selfdual_algebra_check(psi: [f64; 3], v: f64) -> Result<AlgebraResidual> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidInput(format!("V must be positive, got {v}")));
    }
    // antisymmetric coefficients w[a][b] of ω = ½ w_ab e^a∧e^b, index 3 = θ
    let mut w = [[0.0; 4]; 4];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        // ψ∧θ
        w[i][3] += psi[i];
        w[3][i] -= psi[i];
        // V ⋆_h ψ, with ⋆e^i = e^j∧e^k for the h-orthonormal e^i
        w[j][k] += v * psi[i];
        w[k][j] -= v * psi[i];
    }
    // e^a = s_a E^a with s = (V^{-1/2}, V^{-1/2}, V^{-1/2}, V^{1/2})
    let s = [v.powf(-0.5), v.powf(-0.5), v.powf(-0.5), v.sqrt()];
    let mut om = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            om[a][b] = w[a][b] * s[a] * s[b];
        }
    }
    let mut star = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let mut acc = 0.0;
            for c in 0..4 {
                for d in 0..4 {
                    acc += levi_civita([a, b, c, d]) * om[c][d];
                }
            }
            star[a][b] = 0.5 * acc;
        }
    }
    let mut diff = 0.0;
    let mut norm2 = 0.0;
    for a in 0..4 {
        for b in (a + 1)..4 {
            diff += (star[a][b] - om[a][b]).powi(2);
            norm2 += om[a][b] * om[a][b];
        }
    }
    let psi_norm = (psi[0] * psi[0] + psi[1] * psi[1] + psi[2] * psi[2]).sqrt();
    Ok(AlgebraResidual { selfduality: diff.sqrt(), norm: (norm2.sqrt() - std::f64::consts::SQRT_2 * psi_norm).abs() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Foot inside the domain: fit `1 − f`.
    Inside,
    /// Foot outside: fit `f`.
    Outside,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFit {
    pub coefficient: f64,
    pub exponent: f64,
    /// Set when the exponent is more than 0.1 from 2.
    pub flagged: bool,
    pub z: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Fits `residual ≈ C·z^α` near a boundary foot point by least squares in log–log.
pub fn boundary_expansion_check(
    domain: &PlanarDomain,
    foot: num_complex::Complex64,
    side: Side,
    z_list: &[f64],
    quad: &QuadratureConfig,
) -> Result<ExpansionFit> {
    if z_list.len() < 2 || z_list.iter().any(|&z| !(z > 0.0)) {
        return Err(Error::InvalidInput("need at least two positive heights".into()));
    }
    if domain.contains(foot) != (side == Side::Inside) {
        return Err(Error::Precondition(format!("foot {foot} is not on the requested side")));
    }
    // residuals are O(z²), so the absolute quadrature error must be far smaller
    let z_min = z_list.iter().copied().fold(f64::INFINITY, f64::min);
    let q = QuadratureConfig { tolerance: quad.tolerance.min(1e-6 * z_min * z_min).max(1e-13), ..*quad };
    let residuals = z_list
        .iter()
        .map(|&z| {
            let f = harmonic_measure(domain, &H3Point::new(foot.re, foot.im, z)?, &q)?.value;
            Ok(match side {
                Side::Inside => 1.0 - f,
                Side::Outside => f,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    if residuals.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Precondition("residual is not positive; heights too small for the quadrature".into()));
    }
    let xs: Vec<f64> = z_list.iter().map(|z| z.ln()).collect();
    let ys: Vec<f64> = residuals.iter().map(|r| r.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let exponent = sxy / sxx;
    let coefficient = (my - exponent * mx).exp();
    Ok(ExpansionFit { coefficient, exponent, flagged: (exponent - 2.0).abs() > 0.1, z: z_list.to_vec(), residuals })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroSample {
    pub sample: FormSample,
    /// `|ω|_{g₀}/u²`.
    pub weighted_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroCluster {
    pub centre: H3Point,
    pub samples: Vec<ZeroSample>,
    /// Index into the verdict's reports.
    pub critical_point: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroLocusReport {
    pub threshold: f64,
    pub weighting: DefiningFunction,
    pub clusters: Vec<ZeroCluster>,
    /// Grid samples whose raw norm is below threshold but whose weighted norm is not.
    pub excluded_near_boundary: usize,
    pub verdict: Verdict,
    /// Every cluster has a critical point and every critical point a cluster.
    pub consistent: bool,
}

const MATCH_DISTANCE: f64 = 1e-3;

/// Local minima along each vertical grid column (interior heights only).
fn column_minima(values: &[f64], n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for col in 0..n * n {
        for k in 1..n - 1 {
            let i = col * n + k;
            if values[i] <= values[i - 1] && values[i] <= values[i + 1] {
                out.push(i);
            }
        }
    }
    out
}

/// For each sign change of `df/dz` between vertically adjacent nodes, the
/// node with the smaller weighted norm.
fn column_sign_changes(dz: &[f64], values: &[f64], n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for col in 0..n * n {
        for k in 0..n - 1 {
            let i = col * n + k;
            if dz[i] * dz[i + 1] < 0.0 {
                out.push(if values[i] <= values[i + 1] { i } else { i + 1 });
            }
        }
    }
    out
}

/// Zeros of `ω` located from a grid scan of the `u`-weighted norm.
///
/// Grid samples below `threshold` form clusters; minima of the weighted norm
/// along vertical grid columns seed Newton refinement, and converged zeros
/// join (or start) clusters.
/// Clusters are matched to the critical points of [`almost_kahler_verdict`].
pub fn zero_locus_report(
    domain: &PlanarDomain,
    grid: &GridSpec,
    quad: &QuadratureConfig,
    weighting: DefiningFunction,
    threshold: Option<f64>,
) -> Result<ZeroLocusReport> {
    let threshold = threshold.unwrap_or_else(|| gradient_threshold(quad));
    let verdict = almost_kahler_verdict(domain, grid, quad)?;
    let pts = grid.points();
    let scan = pts
        .par_iter()
        .map(|p| {
            let f = harmonic_measure(domain, p, quad)?.value;
            let g = measure_gradient(domain, p, quad)?;
            let s = FormSample::from_gradient(*p, g.components);
            let u = weighting.eval(p, f);
            Ok((ZeroSample { sample: s, weighted_norm: s.omega_norm_g0 / (u * u) }, g.components[2]))
        })
        .collect::<Result<Vec<(ZeroSample, f64)>>>()?;
    let (scan, dz): (Vec<ZeroSample>, Vec<f64>) = scan.into_iter().unzip();
    let excluded_near_boundary =
        scan.iter().filter(|s| s.sample.omega_norm_g0 < threshold && s.weighted_norm >= threshold).count();

    let weighted: Vec<f64> = scan.iter().map(|s| s.weighted_norm).collect();
    let mut seeds = column_minima(&weighted, grid.n);
    seeds.extend(column_sign_changes(&dz, &weighted, grid.n));
    seeds.sort_unstable();
    seeds.dedup();
    seeds.sort_by(|&a, &b| weighted[a].total_cmp(&weighted[b]).then(a.cmp(&b)));
    seeds.truncate(32);
    let refined: Vec<Option<H3Point>> = seeds
        .par_iter()
        .map(|&s| {
            refine_critical_point_3d(domain, &pts[s], gradient_threshold(quad), quad).ok().map(|(r, _)| r.location)
        })
        .collect();

    let mut clusters: Vec<ZeroCluster> = Vec::new();
    let add = |z: ZeroSample, clusters: &mut Vec<ZeroCluster>, radius: f64| {
        if let Some(c) = clusters.iter_mut().find(|c| h3_distance(&c.centre, &z.sample.base) < radius) {
            c.samples.push(z);
        } else {
            clusters.push(ZeroCluster { centre: z.sample.base, samples: vec![z], critical_point: None });
        }
    };
    for p in refined.into_iter().flatten() {
        let f = harmonic_measure(domain, &p, quad)?.value;
        let g = measure_gradient(domain, &p, quad)?;
        let s = FormSample::from_gradient(p, g.components);
        let u = weighting.eval(&p, f);
        add(ZeroSample { sample: s, weighted_norm: s.omega_norm_g0 / (u * u) }, &mut clusters, MATCH_DISTANCE);
    }
    // grid samples below threshold join the nearest refined zero within one grid cell
    let cell = grid_cell_distance(grid);
    for s in scan.into_iter().filter(|s| s.weighted_norm < threshold) {
        add(s, &mut clusters, cell);
    }
    for c in clusters.iter_mut() {
        c.critical_point = verdict
            .reports
            .iter()
            .enumerate()
            .filter(|(_, r)| h3_distance(&r.location, &c.centre) < MATCH_DISTANCE)
            .map(|(i, _)| i)
            .next();
    }
    let all_clusters_matched = clusters.iter().all(|c| c.critical_point.is_some());
    let all_points_matched = (0..verdict.reports.len()).all(|i| clusters.iter().any(|c| c.critical_point == Some(i)));
    Ok(ZeroLocusReport {
        threshold,
        weighting,
        clusters,
        excluded_near_boundary,
        consistent: all_clusters_matched && all_points_matched,
        verdict,
    })
}

/// Hyperbolic diameter of one grid cell at the bottom of the grid.
fn grid_cell_distance(grid: &GridSpec) -> f64 {
    let dx = 2.0 * grid.xy_extent / (grid.n - 1) as f64;
    let zr = (grid.z_max / grid.z_min).powf(1.0 / (grid.n - 1) as f64);
    let a = H3Point::new(0.0, 0.0, grid.z_min).expect("positive");
    let b = H3Point::new(dx, dx, grid.z_min * zr).expect("positive");
    h3_distance(&a, &b)
}
