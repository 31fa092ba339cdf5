//! Regular hyperbolic 4g-gons and their surface groups in the Poincaré disk.
//!
//! Matrices act on the unit disk (they lie in SU(1,1) up to sign). The same
//! matrices act on H³ through [`MobiusMap::apply_h3`], where they preserve the
//! hemisphere over the unit circle; [`to_half_plane`] conjugates them into
//! PSL(2, ℝ) when the upper half-plane picture is wanted.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hyperbolic::{cayley, DiskPoint, MobiusMap};

/// Geometry of the regular 4g-gon with interior angles `π/(2g)`, centred at 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonData {
    pub genus: usize,
    /// Hyperbolic distance from the centre to an edge midpoint.
    pub inradius: f64,
    /// Hyperbolic distance from the centre to a vertex.
    pub circumradius: f64,
    /// Euclidean distance from 0 to an edge midpoint in the disk model.
    pub euclidean_inradius: f64,
    pub area: f64,
    pub interior_angle: f64,
}

impl PolygonData {
    pub fn sides(&self) -> usize {
        4 * self.genus
    }

    /// Direction of the midpoint of edge `k`.
    pub fn edge_angle(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.sides() as f64
    }

    pub fn vertices(&self) -> Vec<Complex64> {
        let rv = (0.5 * self.circumradius).tanh();
        (0..self.sides()).map(|k| Complex64::from_polar(rv, self.edge_angle(k) + PI / self.sides() as f64)).collect()
    }

    /// Centre and radius of the Euclidean circle carrying edge `k`.
    pub fn edge_circle(&self, k: usize) -> (Complex64, f64) {
        let r = self.euclidean_inradius;
        let s = (1.0 + r * r) / (2.0 * r);
        let rho = (1.0 - r * r) / (2.0 * r);
        (Complex64::from_polar(s, self.edge_angle(k)), rho)
    }

    /// Open-polygon membership.
    pub fn contains(&self, zeta: Complex64) -> bool {
        zeta.norm() < 1.0 && (0..self.sides()).all(|k| {
            let (c, rho) = self.edge_circle(k);
            (zeta - c).norm() > rho
        })
    }
}

/// Builds the regular 4g-gon from the right-triangle dissection.
pub fn regular_polygon(genus: usize) -> Result<PolygonData> {
    if genus < 2 {
        return Err(Error::InvalidInput(format!("genus must be at least 2, got {genus}")));
    }
    let q = PI / (4 * genus) as f64;
    let cot = 1.0 / q.tan();
    let inradius = cot.acosh();
    let circumradius = (cot * cot).acosh();
    let interior_angle = PI / (2 * genus) as f64;
    let sides = (4 * genus) as f64;
    Ok(PolygonData {
        genus,
        inradius,
        circumradius,
        euclidean_inradius: (0.5 * inradius).tanh(),
        area: (sides - 2.0) * PI - sides * interior_angle,
        interior_angle,
    })
}

/// Smallest genus whose polygon contains the disk of Euclidean radius `1 − δ`:
/// `1 + ⌈1/δ²⌉`.
pub fn min_genus(delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {delta}")));
    }
    let x = 1.0 / (delta * delta);
    // snap to a nearby integer so rounding in 1/δ² cannot push the ceiling up
    let near = x.round();
    let c = if (x - near).abs() <= 1e-9 * near { near } else { x.ceil() };
    Ok(1 + c as usize)
}

/// One letter of a word: generator index `0..2g` and whether it is inverted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub generator: usize,
    pub inverse: bool,
}

impl Letter {
    pub fn inv(self) -> Self {
        Self { inverse: !self.inverse, ..self }
    }

    /// `a1`, `b1`, `a2`, … with inverses in upper case.
    pub fn symbol(self) -> String {
        let base = if self.generator % 2 == 0 { 'a' } else { 'b' };
        let c = if self.inverse { base.to_ascii_uppercase() } else { base };
        format!("{c}{}", self.generator / 2 + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub map: MobiusMap,
    pub letters: Vec<Letter>,
}

impl GroupElement {
    pub fn identity() -> Self {
        Self { map: MobiusMap::identity(), letters: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Reduced word; `e` for the identity.
    pub fn word(&self) -> String {
        if self.letters.is_empty() {
            return "e".into();
        }
        self.letters.iter().map(|l| l.symbol()).collect()
    }

    pub fn inverse(&self) -> Self {
        Self { map: self.map.inverse(), letters: self.letters.iter().rev().map(|l| l.inv()).collect() }
    }
}

fn translation(t: f64) -> MobiusMap {
    let (c, s) = ((0.5 * t).cosh(), (0.5 * t).sinh());
    MobiusMap { a: Complex64::new(c, 0.0), b: Complex64::new(s, 0.0), c: Complex64::new(s, 0.0), d: Complex64::new(c, 0.0) }
}

/// The isometry carrying edge `k` onto edge `m`, taking the polygon across edge `m`.
fn edge_map(poly: &PolygonData, k: usize, m: usize) -> MobiusMap {
    MobiusMap::rotation(poly.edge_angle(m))
        .compose(&translation(2.0 * poly.inradius))
        .compose(&MobiusMap::rotation(PI - poly.edge_angle(k)))
}

fn relator(gens: &[MobiusMap]) -> MobiusMap {
    let mut p = MobiusMap::identity();
    for pair in gens.chunks(2) {
        let (a, b) = (&pair[0], &pair[1]);
        p = p.compose(a).compose(b).compose(&a.inverse()).compose(&b.inverse());
    }
    p
}

/// Residual of `∏ aᵢbᵢaᵢ⁻¹bᵢ⁻¹` from ±I.
pub fn relator_residual(generators: &[GroupElement]) -> f64 {
    let maps: Vec<MobiusMap> = generators.iter().map(|g| g.map).collect();
    relator(&maps).projective_distance(&MobiusMap::identity())
}

/// Side pairings `a₁, b₁, …, a_g, b_g` for the edge pattern `a₁ b₁ a₁⁻¹ b₁⁻¹ …`.
///
/// Edge `4j` carries `aⱼ`, `4j+1` carries `bⱼ`, `4j+2` carries `aⱼ⁻¹` and
/// `4j+3` carries `bⱼ⁻¹`. Each pairing is an edge map in one of two directions;
/// the direction pair is the one for which the relator closes.
pub fn side_pairing_generators(genus: usize) -> Result<Vec<GroupElement>> {
    let poly = regular_polygon(genus)?;
    let mut best: Option<(f64, Vec<MobiusMap>)> = None;
    for (flip_a, flip_b) in [(false, true), (false, false), (true, false), (true, true)] {
        let mut gens = Vec::with_capacity(2 * genus);
        for j in 0..genus {
            let (a0, a1) = (4 * j, 4 * j + 2);
            let (b0, b1) = (4 * j + 1, 4 * j + 3);
            gens.push(if flip_a { edge_map(&poly, a0, a1) } else { edge_map(&poly, a1, a0) });
            gens.push(if flip_b { edge_map(&poly, b0, b1) } else { edge_map(&poly, b1, b0) });
        }
        let res = relator(&gens).projective_distance(&MobiusMap::identity());
        if best.as_ref().is_none_or(|(r, _)| res < *r) {
            best = Some((res, gens));
        }
    }
    let (res, gens) = best.expect("four candidates");
    if res > 1e-8 {
        return Err(Error::Divergence(format!("side pairings do not satisfy the relator (residual {res:e})")));
    }
    Ok(gens
        .into_iter()
        .enumerate()
        .map(|(i, map)| GroupElement { map, letters: vec![Letter { generator: i, inverse: false }] })
        .collect())
}

/// Result of word enumeration.
#[derive(Clone, Debug)]
pub struct Enumeration {
    /// Elements in shell order (word length, then generation order).
    pub elements: Vec<GroupElement>,
    /// Start index of each shell in `elements`; `shells.len() = max_len + 2`.
    pub shell_starts: Vec<usize>,
    /// Pairs of words closer than the ambiguity band but not merged.
    pub near_collisions: Vec<(String, String, f64)>,
}

impl Enumeration {
    /// The trivial group, identity only.
    pub fn trivial() -> Self {
        Self { elements: vec![GroupElement::identity()], shell_starts: vec![0, 1], near_collisions: Vec::new() }
    }

    pub fn shell(&self, l: usize) -> &[GroupElement] {
        &self.elements[self.shell_starts[l]..self.shell_starts[l + 1]]
    }

    pub fn max_len(&self) -> usize {
        self.shell_starts.len() - 2
    }

    pub fn shell_sizes(&self) -> Vec<usize> {
        self.shell_starts.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

const DEDUP_TOL: f64 = 1e-9;
const AMBIGUITY: f64 = 1e-6;

struct MatrixIndex {
    cell: f64,
    buckets: HashMap<[i64; 4], Vec<usize>>,
}

impl MatrixIndex {
    fn key(&self, m: &MobiusMap, sign: f64) -> [i64; 4] {
        let q = |x: f64| (sign * x / self.cell).floor() as i64;
        [q(m.a.re), q(m.a.im), q(m.b.re), q(m.b.im)]
    }

    fn insert(&mut self, m: &MobiusMap, id: usize) {
        for s in [1.0, -1.0] {
            let k = self.key(m, s);
            self.buckets.entry(k).or_default().push(id);
        }
    }

    fn candidates(&self, m: &MobiusMap) -> Vec<usize> {
        let k = self.key(m, 1.0);
        let mut out = Vec::new();
        for d in 0..81 {
            let off = [d % 3, (d / 3) % 3, (d / 9) % 3, d / 27].map(|o| o as i64 - 1);
            let kk = [k[0] + off[0], k[1] + off[1], k[2] + off[2], k[3] + off[3]];
            if let Some(v) = self.buckets.get(&kk) {
                out.extend_from_slice(v);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// All distinct group elements with reduced words of length `≤ max_len`.
///
/// Words are extended shell by shell; a new matrix equal (up to sign, within
/// `1e−9·max(1, ‖M‖)`) to a known one is dropped. Distances inside
/// `(1e−9, 1e−6]·max(1, ‖M‖)` are reported as near collisions.
pub fn enumerate_group(generators: &[GroupElement], max_len: usize) -> Result<Enumeration> {
    if generators.iter().any(|g| g.letters.len() != 1 || g.letters[0].inverse) {
        return Err(Error::InvalidInput("generators must be single positive letters".into()));
    }
    let mut letters: Vec<(Letter, MobiusMap)> = Vec::new();
    for g in generators {
        letters.push((g.letters[0], g.map));
        letters.push((g.letters[0].inv(), g.map.inverse()));
    }
    let mut elements = vec![GroupElement::identity()];
    let mut shell_starts = vec![0, 1];
    let mut index = MatrixIndex { cell: AMBIGUITY * 10.0, buckets: HashMap::new() };
    index.insert(&elements[0].map, 0);
    let mut near = Vec::new();
    for _len in 1..=max_len {
        let start = shell_starts[shell_starts.len() - 2];
        let end = shell_starts[shell_starts.len() - 1];
        let children: Vec<Vec<GroupElement>> = elements[start..end]
            .par_iter()
            .map(|parent| {
                let last = parent.letters.last().copied();
                letters
                    .iter()
                    .filter(|(l, _)| last != Some(l.inv()))
                    .map(|(l, m)| {
                        let mut w = parent.letters.clone();
                        w.push(*l);
                        GroupElement { map: parent.map.compose(m), letters: w }
                    })
                    .collect()
            })
            .collect();
        for child in children.into_iter().flatten() {
            let scale = child.map.norm_sqr().sqrt().max(1.0);
            let mut duplicate = false;
            for id in index.candidates(&child.map) {
                let d = elements[id].map.projective_distance(&child.map);
                if d <= DEDUP_TOL * scale {
                    duplicate = true;
                    break;
                }
                if d <= AMBIGUITY * scale {
                    near.push((elements[id].word(), child.word(), d));
                }
            }
            if !duplicate {
                index.insert(&child.map, elements.len());
                elements.push(child);
            }
        }
        shell_starts.push(elements.len());
    }
    Ok(Enumeration { elements, shell_starts, near_collisions: near })
}

/// Images of `base` under each element, tagged with word length.
pub fn orbit_cloud(elements: &[GroupElement], base: &DiskPoint) -> Vec<(Complex64, usize)> {
    elements.iter().map(|g| (g.map.apply(base.zeta()), g.len())).collect()
}

/// Images of 0 under the longest shell, projected radially to the unit circle.
pub fn limit_set_sample(genus: usize, depth: usize) -> Result<Vec<Complex64>> {
    let gens = side_pairing_generators(genus)?;
    let en = enumerate_group(&gens, depth)?;
    Ok(en
        .shell(depth)
        .iter()
        .filter_map(|g| {
            let w = g.map.apply(Complex64::new(0.0, 0.0));
            let r = w.norm();
            (r > 0.0).then(|| w / r)
        })
        .collect())
}

/// CSV with columns `re,im,word_length`.
pub fn cloud_to_csv(points: &[(Complex64, usize)]) -> String {
    let mut s = String::from("re,im,word_length\n");
    for (p, l) in points {
        let _ = writeln!(s, "{:.16e},{:.16e},{}", p.re, p.im, l);
    }
    s
}

/// Conjugates a disk automorphism into the upper half-plane picture via the Cayley map.
pub fn to_half_plane(m: &MobiusMap) -> MobiusMap {
    let c = cayley();
    c.compose(m).compose(&c.inverse())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::hausdorff_distance;
    use crate::hyperbolic::disk_distance;
    use proptest::prelude::*;

    fn circle(n: usize) -> Vec<Complex64> {
        (0..n).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)).collect()
    }

    /// Angle at `v` between two circles through `v` (angle between tangents).
    fn circle_angle(v: Complex64, c1: Complex64, c2: Complex64) -> f64 {
        let (n1, n2) = (v - c1, v - c2);
        let cos = (n1.re * n2.re + n1.im * n2.im) / (n1.norm() * n2.norm());
        cos.clamp(-1.0, 1.0).acos()
    }

    #[test]
    fn genus_two_polygon() {
        let p = regular_polygon(2).unwrap();
        assert!((p.interior_angle - PI / 4.0).abs() < 1e-15);
        assert!((p.inradius - (1.0 + 2f64.sqrt()).acosh()).abs() < 1e-12);
        assert!((p.inradius - 1.52857).abs() < 1e-5);
        assert!((p.euclidean_inradius - 0.64359).abs() < 1e-5);
        // sixteen (π/2, π/8, π/8) triangles
        assert!((p.area - 16.0 * (PI - PI / 2.0 - 2.0 * PI / 8.0)).abs() < 1e-12);
        assert!(regular_polygon(1).is_err());
    }

    #[test]
    fn polygon_geometry_is_consistent() {
        for g in [2, 3, 7, 30] {
            let p = regular_polygon(g).unwrap();
            let vs = p.vertices();
            for k in 0..p.sides() {
                // vertex k lies on edges k and k+1, which meet at the interior angle
                let (c1, r1) = p.edge_circle(k);
                let (c2, r2) = p.edge_circle((k + 1) % p.sides());
                assert!(((vs[k] - c1).norm() - r1).abs() < 1e-12);
                assert!(((vs[k] - c2).norm() - r2).abs() < 1e-12);
                let a = circle_angle(vs[k], c1, c2);
                assert!((PI - a - p.interior_angle).abs() < 1e-9 || (a - p.interior_angle).abs() < 1e-9, "{a}");
            }
            let mid = DiskPoint::new(Complex64::new(p.euclidean_inradius, 0.0)).unwrap();
            let origin = DiskPoint::new(Complex64::new(0.0, 0.0)).unwrap();
            assert!((disk_distance(&origin, &mid) - p.inradius).abs() < 1e-12);
            assert!(p.contains(Complex64::new(0.0, 0.0)));
            assert!(!p.contains(Complex64::new(0.99, 0.0)));
        }
    }

    #[test]
    fn min_genus_examples() {
        assert_eq!(min_genus(0.5).unwrap(), 5);
        assert_eq!(min_genus(1.0 - 1e-12).unwrap(), 2);
        assert_eq!(min_genus(0.1).unwrap(), 101);
        assert!(regular_polygon(101).unwrap().euclidean_inradius > 0.9);
        assert!(min_genus(0.0).is_err() && min_genus(1.0).is_err());
    }

    #[test]
    fn generators_pair_edges() {
        for g in [2, 3, 4] {
            let gens = side_pairing_generators(g).unwrap();
            let p = regular_polygon(g).unwrap();
            assert_eq!(gens.len(), 2 * g);
            assert!(relator_residual(&gens) < 1e-8);
            let origin = DiskPoint::new(Complex64::new(0.0, 0.0)).unwrap();
            for e in gens.iter().chain(gens.iter().map(|e| e.inverse()).collect::<Vec<_>>().iter()) {
                let img = DiskPoint::new(e.map.apply(Complex64::new(0.0, 0.0))).unwrap();
                assert!((disk_distance(&origin, &img) - 2.0 * p.inradius).abs() < 1e-8);
                assert!(e.map.projective_distance(&MobiusMap::identity()) > 1e-3);
                // the open polygon is carried off itself
                for k in 0..64 {
                    let z = Complex64::from_polar(0.9 * p.euclidean_inradius * (k % 4 + 1) as f64 / 4.0, k as f64 * 0.37);
                    assert!(!p.contains(e.map.apply(z)));
                }
            }
        }
    }

    #[test]
    fn generators_map_edges_onto_partner_edges() {
        let p = regular_polygon(2).unwrap();
        let gens = side_pairing_generators(2).unwrap();
        let vs = p.vertices();
        let n = p.sides();
        // each generator maps the vertex pair of one paired edge onto the other
        for (i, e) in gens.iter().enumerate() {
            let (j, is_b) = (i / 2, i % 2 == 1);
            let (e0, e1) = if is_b { (4 * j + 1, 4 * j + 3) } else { (4 * j, 4 * j + 2) };
            let ends = |k: usize| [vs[(k + n - 1) % n], vs[k]];
            let hits = |src: usize, dst: usize| {
                ends(src).iter().all(|v| ends(dst).iter().any(|w| (e.map.apply(*v) - w).norm() < 1e-9))
            };
            assert!(hits(e0, e1) || hits(e1, e0));
        }
    }

    #[test]
    fn enumeration_counts() {
        let gens = side_pairing_generators(2).unwrap();
        let en = enumerate_group(&gens, 0).unwrap();
        assert_eq!(en.elements.len(), 1);
        let en = enumerate_group(&gens, 4).unwrap();
        let sizes = en.shell_sizes();
        assert_eq!(&sizes[..3], &[1, 8, 56]);
        // brute force: compose all words of length ≤ 2 and dedup naively
        let mut maps = vec![MobiusMap::identity()];
        let all: Vec<MobiusMap> = gens.iter().flat_map(|g| [g.map, g.map.inverse()]).collect();
        for a in &all {
            maps.push(*a);
            for b in &all {
                maps.push(a.compose(b));
            }
        }
        let mut distinct: Vec<MobiusMap> = Vec::new();
        for m in maps {
            if distinct.iter().all(|d| d.projective_distance(&m) > 1e-9) {
                distinct.push(m);
            }
        }
        assert_eq!(distinct.len(), 65);
        // relator coincidences appear at length 4: fewer than 8·7³ new elements
        assert!(sizes[4] < 8 * 343);
        assert!(en.near_collisions.is_empty());
        for w in sizes[2..].windows(2) {
            let ratio = w[1] as f64 / w[0] as f64;
            assert!(ratio > 5.0 && ratio <= 7.0, "{sizes:?}");
        }
    }

    #[test]
    fn limit_set_approaches_circle() {
        let reference = circle(4096);
        let mut prev = f64::INFINITY;
        for depth in [4, 5, 6] {
            let sample = limit_set_sample(2, depth).unwrap();
            let d = hausdorff_distance(&sample, &reference).unwrap();
            assert!(d < prev);
            prev = d;
        }
        assert!(prev < 0.05, "{prev}");
    }

    #[test]
    fn orbit_cloud_stays_in_disk() {
        let gens = side_pairing_generators(2).unwrap();
        let en = enumerate_group(&gens, 4).unwrap();
        let base = DiskPoint::new(Complex64::new(0.1, -0.2)).unwrap();
        let cloud = orbit_cloud(&en.elements, &base);
        assert!(cloud.iter().all(|(z, _)| z.norm() < 1.0));
        let id = orbit_cloud(&[GroupElement::identity()], &base);
        assert_eq!(id, vec![(base.zeta(), 0)]);
        assert!(cloud_to_csv(&id).starts_with("re,im,word_length\n"));
    }

    #[test]
    fn words_and_conjugation() {
        let gens = side_pairing_generators(2).unwrap();
        assert_eq!(gens[0].word(), "a1");
        assert_eq!(gens[3].inverse().word(), "B2");
        assert_eq!(GroupElement::identity().word(), "e");
        let h = to_half_plane(&gens[0].map);
        // real coefficients up to a common phase
        let phase = if h.a.norm() > 1e-12 { h.a / h.a.norm() } else { h.b / h.b.norm() };
        for x in [h.a, h.b, h.c, h.d] {
            assert!((x / phase).im.abs() < 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn group_elements_are_isometries(i in 0usize..200, r1 in 0.0..0.95f64, t1 in 0.0..6.3f64, r2 in 0.0..0.95f64, t2 in 0.0..6.3f64) {
            let gens = side_pairing_generators(2).unwrap();
            let en = enumerate_group(&gens, 3).unwrap();
            let e = &en.elements[i % en.elements.len()];
            let u = DiskPoint::new(Complex64::from_polar(r1, t1)).unwrap();
            let v = DiskPoint::new(Complex64::from_polar(r2, t2)).unwrap();
            let gu = DiskPoint::new(e.map.apply(u.zeta())).unwrap();
            let gv = DiskPoint::new(e.map.apply(v.zeta())).unwrap();
            prop_assert!((disk_distance(&u, &v) - disk_distance(&gu, &gv)).abs() < 1e-9);
            // boundary circle preserved
            let b = e.map.apply(Complex64::from_polar(1.0, t1));
            prop_assert!((b.norm() - 1.0).abs() < 1e-10);
        }
    }
}
