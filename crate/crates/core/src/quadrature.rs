//! Globally adaptive 21-point Gauss–Kronrod quadrature for vector-valued
//! integrands on an interval split at caller-supplied breakpoints.
//!
//! Segments are bisected in order of decreasing error estimate until the
//! summed estimate meets the tolerance, a segment reaches the depth limit,
//! or the rounding floor is hit. The final sum runs over segments sorted by
//! left endpoint, so results depend only on the inputs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208980178350,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral<const N: usize> {
    pub value: [f64; N],
    /// Sum over segments of the Euclidean norm of the per-segment error vector.
    pub error: f64,
    pub segments: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
struct Segment<const N: usize> {
    a: f64,
    b: f64,
    depth: u32,
    value: [f64; N],
    error: f64,
    floor: f64,
}

impl<const N: usize> PartialEq for Segment<N> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<const N: usize> Eq for Segment<N> {}

impl<const N: usize> PartialOrd for Segment<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<const N: usize> Ord for Segment<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.a.total_cmp(&self.a))
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut e = err.abs();
    if res_asc != 0.0 && e != 0.0 {
        e = res_asc * (200.0 * e / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        e = e.max(50.0 * f64::EPSILON * res_abs);
    }
    e
}

fn gk21<const N: usize, F: Fn(f64) -> [f64; N]>(f: &F, a: f64, b: f64, depth: u32) -> Segment<N> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut samples = [[0.0; N]; 21];
    samples[10] = fc;
    for j in 0..10 {
        let dx = half * XGK[j];
        samples[j] = f(center - dx);
        samples[20 - j] = f(center + dx);
    }
    let mut value = [0.0; N];
    let mut err2 = 0.0;
    let mut floor2 = 0.0;
    for k in 0..N {
        let mut kron = WGK[10] * fc[k];
        let mut gauss = 0.0;
        let mut res_abs = WGK[10] * fc[k].abs();
        for j in 0..10 {
            let s = samples[j][k] + samples[20 - j][k];
            kron += WGK[j] * s;
            res_abs += WGK[j] * (samples[j][k].abs() + samples[20 - j][k].abs());
            if j % 2 == 1 {
                gauss += WG[j / 2] * s;
            }
        }
        let mean = 0.5 * kron;
        let mut res_asc = WGK[10] * (fc[k] - mean).abs();
        for j in 0..10 {
            res_asc += WGK[j] * ((samples[j][k] - mean).abs() + (samples[20 - j][k] - mean).abs());
        }
        let e = rescale_error((kron - gauss) * half, res_abs * half.abs(), res_asc * half.abs());
        value[k] = kron * half;
        err2 += e * e;
        let fl = 50.0 * f64::EPSILON * res_abs * half.abs();
        floor2 += fl * fl;
    }
    Segment { a, b, depth, value, error: err2.sqrt(), floor: floor2.sqrt() }
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        v.iter().sum()
    } else {
        let (l, r) = v.split_at(v.len() / 2);
        pairwise_sum(l) + pairwise_sum(r)
    }
}

/// Integrates `f` over `[a, b]`, splitting first at every breakpoint strictly inside.
///
/// `max_depth` bounds how many times any initial piece may be bisected.
pub fn integrate<const N: usize, F>(f: F, a: f64, b: f64, breakpoints: &[f64], tol: f64, max_depth: u32) -> Integral<N>
where
    F: Fn(f64) -> [f64; N],
{
    let mut cuts = vec![a];
    cuts.extend(breakpoints.iter().copied().filter(|&x| x > a && x < b));
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    let mut done: Vec<Segment<N>> = Vec::new();
    let mut evaluations = 0;
    for w in cuts.windows(2) {
        heap.push(gk21(&f, w[0], w[1], 0));
        evaluations += 21;
    }
    let total = |heap: &BinaryHeap<Segment<N>>, done: &[Segment<N>]| -> (f64, f64) {
        let e = heap.iter().chain(done.iter()).map(|s| s.error).sum::<f64>();
        let fl = heap.iter().chain(done.iter()).map(|s| s.floor).sum::<f64>();
        (e, fl)
    };
    let (mut err, mut floor) = total(&heap, &done);
    let mut converged = err <= tol.max(floor);
    while !converged {
        let Some(worst) = heap.pop() else { break };
        if worst.depth >= max_depth || worst.error <= worst.floor * 1.000_001 {
            done.push(worst);
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            done.push(worst);
            continue;
        }
        let left = gk21(&f, worst.a, mid, worst.depth + 1);
        let right = gk21(&f, mid, worst.b, worst.depth + 1);
        evaluations += 42;
        err += left.error + right.error - worst.error;
        floor += left.floor + right.floor - worst.floor;
        heap.push(left);
        heap.push(right);
        if err <= tol.max(floor) {
            // re-sum to shed accumulated rounding in the running totals
            let (e, fl) = total(&heap, &done);
            err = e;
            floor = fl;
            converged = err <= tol.max(floor);
        }
    }
    let mut segs: Vec<Segment<N>> = heap.into_vec();
    segs.extend(done);
    segs.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut value = [0.0; N];
    for (k, v) in value.iter_mut().enumerate() {
        let parts: Vec<f64> = segs.iter().map(|s| s.value[k]).collect();
        *v = pairwise_sum(&parts);
    }
    let error = pairwise_sum(&segs.iter().map(|s| s.error).collect::<Vec<_>>());
    let floor = pairwise_sum(&segs.iter().map(|s| s.floor).collect::<Vec<_>>());
    Integral { value, error, segments: segs.len(), evaluations, converged: error <= tol.max(floor) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn smooth_integrand() {
        let r = integrate(|x: f64| [x.sin()], 0.0, PI, &[], 1e-13, 30);
        assert!(r.converged);
        assert!((r.value[0] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn discontinuity_at_breakpoint_is_exact() {
        let r = integrate(|x: f64| [if x < 0.3 { 1.0 } else { 0.0 }], 0.0, 1.0, &[0.3], 1e-14, 30);
        assert!((r.value[0] - 0.3).abs() < 1e-15);
        assert_eq!(r.segments, 2);
    }

    #[test]
    fn sqrt_singularity_converges() {
        let r = integrate(|x: f64| [x.sqrt(), 1.0 / (1.0 + x * x)], 0.0, 1.0, &[], 1e-12, 40);
        assert!(r.converged);
        assert!((r.value[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.value[1] - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn depth_limit_reports_non_convergence() {
        let r = integrate(|x: f64| [if x < 1.0 / 3.0 { 1.0 } else { 0.0 }], 0.0, 1.0, &[], 1e-15, 3);
        assert!(!r.converged);
        assert!(r.error > 0.0);
    }
}
