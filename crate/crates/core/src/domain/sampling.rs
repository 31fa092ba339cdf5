//! Boundary sampling, Hausdorff distance and reflection-symmetry checks.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::PI;

use super::{Curve, PlanarDomain};
use crate::error::{Error, Result};

/// Uniform-grid nearest-neighbour index over a planar point cloud.
pub struct PointIndex<'a> {
    points: &'a [Complex64],
    cell: f64,
    origin: Complex64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    max_ring: i64,
}

impl<'a> PointIndex<'a> {
    pub fn new(points: &'a [Complex64]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("point cloud is empty".into()));
        }
        let (mut lo, mut hi) = (points[0], points[0]);
        for p in points {
            lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
            hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
        }
        let extent = (hi.re - lo.re).max(hi.im - lo.im).max(1e-12);
        let cell = extent / (points.len() as f64).sqrt().max(1.0);
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let key = |p: Complex64| (((p.re - lo.re) / cell).floor() as i64, ((p.im - lo.im) / cell).floor() as i64);
        for (i, p) in points.iter().enumerate() {
            buckets.entry(key(*p)).or_default().push(i);
        }
        let max_ring = (extent / cell).ceil() as i64 + 2;
        Ok(Self { points, cell, origin: lo, buckets, max_ring })
    }

    /// Distance from `q` to the nearest indexed point.
    pub fn nearest_distance(&self, q: Complex64) -> f64 {
        let kx = ((q.re - self.origin.re) / self.cell).floor() as i64;
        let ky = ((q.im - self.origin.im) / self.cell).floor() as i64;
        // start the ring search from the index box when q lies far outside it
        let ox = if kx < 0 { -kx } else { (kx - self.max_ring).max(0) };
        let oy = if ky < 0 { -ky } else { (ky - self.max_ring).max(0) };
        let start = ox.max(oy).saturating_sub(1);
        let mut best = f64::INFINITY;
        let mut ring = start;
        loop {
            // a ring with more cells than points: scan everything instead
            if 8 * ring + 1 > self.points.len() as i64 {
                let all = self.points.iter().map(|p| (p - q).norm()).fold(f64::INFINITY, f64::min);
                return best.min(all);
            }
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    if dx.abs() != ring && dy.abs() != ring {
                        continue;
                    }
                    if let Some(ids) = self.buckets.get(&(kx + dx, ky + dy)) {
                        for &i in ids {
                            best = best.min((self.points[i] - q).norm());
                        }
                    }
                }
            }
            // every unvisited cell is at least `ring` cells away
            if best <= ring as f64 * self.cell || ring > start + self.max_ring + 1 {
                return best;
            }
            ring += 1;
        }
    }
}

fn directed(a: &[Complex64], b: &PointIndex<'_>) -> f64 {
    a.par_iter().map(|p| b.nearest_distance(*p)).reduce(|| 0.0, f64::max)
}

/// Symmetric Hausdorff distance between two finite point clouds.
pub fn hausdorff_distance(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    let ia = PointIndex::new(a)?;
    let ib = PointIndex::new(b)?;
    Ok(directed(a, &ib).max(directed(b, &ia)))
}

/// Deterministic Monte Carlo check that membership is invariant under `ζ ↦ −ζ`.
///
/// Samples are drawn uniformly from the bounding disk (radius 10 for
/// unbounded regions).
pub fn reflection_symmetric(domain: &PlanarDomain, samples: usize, seed: u64) -> Result<bool> {
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let radius = if domain.is_bounded() { domain.bounding_radius() } else { 10.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let r = radius * rng.gen::<f64>().sqrt();
        let z = Complex64::from_polar(r, rng.gen_range(0.0..2.0 * PI));
        if domain.contains(z) != domain.contains(-z) {
            return Ok(false);
        }
    }
    Ok(true)
}

impl PlanarDomain {
    /// Points on the topological boundary, sampled along each primitive's
    /// boundary at `density` points per unit length and clipped by the tree.
    /// Infinite lines are sampled within `window` of their closest point to the origin.
    pub fn boundary_samples(&self, density: f64, window: f64) -> Vec<Complex64> {
        let scale = if self.is_bounded() { self.bounding_radius().max(1e-6) } else { window.max(1.0) };
        let delta = 1e-9 * scale;
        let mut out = Vec::new();
        for curve in self.curves() {
            let candidates: Vec<(Complex64, Complex64)> = match curve {
                Curve::Circle { center, radius } => {
                    let n = ((2.0 * PI * radius * density).ceil() as usize).max(8);
                    (0..n)
                        .map(|k| {
                            let u = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
                            (center + u * *radius, u)
                        })
                        .collect()
                }
                Curve::Segment { a, b } => {
                    let len = (b - a).norm();
                    let n = ((len * density).ceil() as usize).max(2);
                    let nrm = (b - a) / len * Complex64::new(0.0, -1.0);
                    (0..=n).map(|k| (a + (b - a) * (k as f64 / n as f64), nrm)).collect()
                }
                Curve::Line { point, dir } => {
                    let n = ((2.0 * window * density).ceil() as usize).max(2);
                    let nrm = dir * Complex64::new(0.0, -1.0);
                    (0..=n)
                        .map(|k| (point + dir * (-window + 2.0 * window * k as f64 / n as f64), nrm))
                        .collect()
                }
            };
            out.extend(
                candidates
                    .into_iter()
                    .filter(|(p, n)| self.contains(p + n * delta) != self.contains(p - n * delta))
                    .map(|(p, _)| p),
            );
        }
        out
    }
}
