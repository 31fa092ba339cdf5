//! Sorted disjoint interval sets on the ray parameter `t ∈ [0, ∞]`.

/// A finite union of disjoint open intervals, sorted by left endpoint.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IntervalSet(Vec<(f64, f64)>);

impl IntervalSet {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// The whole ray `[0, ∞)`.
    pub fn full() -> Self {
        Self(vec![(0.0, f64::INFINITY)])
    }

    /// A single interval clipped to `[0, ∞)`; empty if degenerate.
    pub fn single(lo: f64, hi: f64) -> Self {
        let lo = lo.max(0.0);
        if hi > lo {
            Self(vec![(lo, hi)])
        } else {
            Self::empty()
        }
    }

    /// Builds a set from arbitrary intervals, normalizing overlaps.
    pub fn from_intervals(mut v: Vec<(f64, f64)>) -> Self {
        v.retain(|&(a, b)| b > a.max(0.0));
        for iv in v.iter_mut() {
            iv.0 = iv.0.max(0.0);
        }
        v.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (a, b) in v {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Self(out)
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self::from_intervals(v)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let lo = a[i].0.max(b[j].0);
            let hi = a[i].1.min(b[j].1);
            if hi > lo {
                out.push((lo, hi));
            }
            if a[i].1 < b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self(out)
    }

    /// Complement within `[0, ∞)`.
    pub fn complement(&self) -> Self {
        let mut out = Vec::with_capacity(self.0.len() + 1);
        let mut cursor = 0.0;
        for &(a, b) in &self.0 {
            if a > cursor {
                out.push((cursor, a));
            }
            cursor = b;
        }
        if cursor < f64::INFINITY {
            out.push((cursor, f64::INFINITY));
        }
        Self(out)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.intersection(&other.complement())
    }

    pub fn contains(&self, t: f64) -> bool {
        self.0.iter().any(|&(a, b)| a < t && t < b)
    }
}
