//! Poincaré-disk geometry and the Fuchsian group of the Bolza surface.
//!
//! Isometries are stored as the pair `(a, b)` of the matrix
//! `[[a, b], [conj(b), conj(a)]]` acting by `z ↦ (a z + b) / (conj(b) z + conj(a))`.
//!
//! Side `j` of the fundamental octagon faces the direction `π + jπ/4`; the
//! generator with index `k` maps side `k` onto side `(k + 4) mod 8`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Orientation-preserving isometry of the unit disk with `|a|² − |b|² = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "IsometryRecord", into = "IsometryRecord")]
pub struct DiskIsometry {
    pub a: Complex64,
    pub b: Complex64,
}

/// Stable on-disk layout of a [`DiskIsometry`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct IsometryRecord {
    pub a_re: f64,
    pub a_im: f64,
    pub b_re: f64,
    pub b_im: f64,
}

impl From<IsometryRecord> for DiskIsometry {
    fn from(r: IsometryRecord) -> Self {
        DiskIsometry::new(Complex64::new(r.a_re, r.a_im), Complex64::new(r.b_re, r.b_im))
    }
}

impl From<DiskIsometry> for IsometryRecord {
    fn from(g: DiskIsometry) -> Self {
        IsometryRecord { a_re: g.a.re, a_im: g.a.im, b_re: g.b.re, b_im: g.b.im }
    }
}

impl DiskIsometry {
    pub const fn new(a: Complex64, b: Complex64) -> Self {
        DiskIsometry { a, b }
    }

    pub fn identity() -> Self {
        DiskIsometry::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    /// Euclidean rotation `z ↦ e^{iθ} z`.
    pub fn rotation(theta: f64) -> Self {
        DiskIsometry::new(Complex64::from_polar(1.0, 0.5 * theta), Complex64::new(0.0, 0.0))
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.b.conj() * z + self.a.conj())
    }

    /// Complex derivative `(conj(b) z + conj(a))⁻²`.
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let d = self.b.conj() * z + self.a.conj();
        1.0 / (d * d)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &DiskIsometry) -> DiskIsometry {
        DiskIsometry::new(
            self.a * other.a + self.b * other.b.conj(),
            self.a * other.b + self.b * other.a.conj(),
        )
    }

    pub fn inverse(&self) -> DiskIsometry {
        DiskIsometry::new(self.a.conj(), -self.b)
    }

    /// `|a|² − |b|² − 1`; zero for a genuine disk isometry.
    pub fn determinant_defect(&self) -> f64 {
        self.a.norm_sqr() - self.b.norm_sqr() - 1.0
    }

    /// Hyperbolic distance between `0` and the image of `0`.
    pub fn displacement(&self) -> f64 {
        2.0 * self.a.norm().max(1.0).acosh()
    }

    /// Translation length from the trace formula `2 cosh(ℓ/2) = |tr|`.
    pub fn translation_length(&self) -> f64 {
        2.0 * self.a.re.abs().max(1.0).acosh()
    }

    /// Representative of `±(a, b)` whose `a` has positive real part.
    pub fn sign_normalized(&self) -> DiskIsometry {
        if self.a.re < 0.0 || (self.a.re == 0.0 && self.a.im < 0.0) {
            DiskIsometry::new(-self.a, -self.b)
        } else {
            *self
        }
    }

    /// Equality in PSU(1,1) up to `tol` on matrix entries.
    pub fn approx_eq(&self, other: &DiskIsometry, tol: f64) -> bool {
        let p = self.sign_normalized();
        let q = other.sign_normalized();
        (p.a - q.a).norm() <= tol && (p.b - q.b).norm() <= tol
    }

    fn lexicographic_key(&self) -> [f64; 4] {
        let g = self.sign_normalized();
        [g.a.re, g.a.im, g.b.re, g.b.im]
    }
}

/// Conformal density of the hyperbolic metric, `4 / (1 − |z|²)²`.
pub fn metric_density(z: Complex64) -> Result<f64> {
    let r2 = z.norm_sqr();
    if !(r2 < 1.0) {
        return Err(Error::OutsideDisk { re: z.re, im: z.im });
    }
    let d = 1.0 - r2;
    Ok(4.0 / (d * d))
}

/// Möbius map sending `p` to the origin.
pub fn to_origin(p: Complex64, z: Complex64) -> Complex64 {
    (z - p) / (Complex64::new(1.0, 0.0) - p.conj() * z)
}

/// Inverse of [`to_origin`].
pub fn from_origin(p: Complex64, z: Complex64) -> Complex64 {
    (z + p) / (Complex64::new(1.0, 0.0) + p.conj() * z)
}

pub fn hyperbolic_distance(z: Complex64, w: Complex64) -> f64 {
    2.0 * to_origin(z, w).norm().min(1.0 - f64::EPSILON).atanh()
}

/// Midpoint of the geodesic segment between `z` and `w`.
pub fn geodesic_midpoint(z: Complex64, w: Complex64) -> Complex64 {
    let w0 = to_origin(z, w);
    let r = w0.norm();
    if r == 0.0 {
        return z;
    }
    let half = (0.5 * r.atanh()).tanh();
    from_origin(z, w0 * (half / r))
}

/// Interior angle at `p` of the geodesic triangle `p, q, r`.
pub fn geodesic_angle(p: Complex64, q: Complex64, r: Complex64) -> f64 {
    let u = to_origin(p, q);
    let v = to_origin(p, r);
    (v / u).arg().abs()
}

/// Hyperbolic area of the geodesic triangle with the given vertices
/// (angle defect).
pub fn geodesic_triangle_area(p: Complex64, q: Complex64, r: Complex64) -> f64 {
    PI - geodesic_angle(p, q, r) - geodesic_angle(q, r, p) - geodesic_angle(r, p, q)
}

/// Geodesic side of the octagon, stored as the Euclidean circle orthogonal to
/// the unit circle plus its two corner endpoints.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GeodesicSide {
    pub center: Complex64,
    pub radius: f64,
    pub start: Complex64,
    pub end: Complex64,
}

impl GeodesicSide {
    /// Positive on the side of the origin, negative beyond the side.
    pub fn half_plane_value(&self, z: Complex64) -> f64 {
        (z - self.center).norm_sqr() - self.radius * self.radius
    }

    /// Radial projection of `z` onto the supporting circle.
    pub fn project(&self, z: Complex64) -> Complex64 {
        let d = z - self.center;
        self.center + d * (self.radius / d.norm())
    }

    /// Distance from the origin along the ray at angle `phi` to the circle.
    pub fn ray_hit(&self, phi: f64) -> f64 {
        let p = (self.center.conj() * Complex64::from_polar(1.0, phi)).re;
        p - (p * p - 1.0).max(0.0).sqrt()
    }

    /// Unit tangent at `p` (a point of the circle) pointing towards `toward`.
    fn tangent_towards(&self, p: Complex64, toward: Complex64) -> Complex64 {
        let t = Complex64::new(0.0, 1.0) * (p - self.center);
        let t = t / t.norm();
        let along = toward - p;
        if (t.conj() * along).re >= 0.0 {
            t
        } else {
            -t
        }
    }
}

/// Regular hyperbolic octagon with corner angle π/4 and its side pairings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BolzaDomain {
    pub vertex_radius: f64,
    pub midpoint_radius: f64,
    /// `T₀..T₃` followed by their inverses.
    pub generators: [DiskIsometry; 8],
    pub sides: [GeodesicSide; 8],
    /// Corner `j` joins side `j` and side `j + 1`.
    pub corners: [Complex64; 8],
}

/// Generator indices spelling `T₀ T₁⁻¹ T₂ T₃⁻¹ T₀⁻¹ T₁ T₂⁻¹ T₃`.
pub const SURFACE_RELATION: [usize; 8] = [0, 5, 2, 7, 4, 1, 6, 3];

/// Hyperbolic circumradius R of the octagon: `cosh R = cot²(π/8)`.
pub fn octagon_circumradius() -> f64 {
    let c = 1.0 / FRAC_PI_8.tan();
    (c * c).acosh()
}

/// Hyperbolic inradius r: `cosh r = cot(π/8)`.
pub fn octagon_inradius() -> f64 {
    (1.0 / FRAC_PI_8.tan()).acosh()
}

pub fn side_direction(j: usize) -> f64 {
    PI + j as f64 * FRAC_PI_4
}

impl BolzaDomain {
    pub fn new() -> Self {
        let vertex_radius = (0.5 * octagon_circumradius()).tanh();
        let midpoint_radius = (0.5 * octagon_inradius()).tanh();
        let sqrt2 = std::f64::consts::SQRT_2;
        let t0 = DiskIsometry::new(
            Complex64::new(1.0 + sqrt2, 0.0),
            Complex64::new((2.0 + 2.0 * sqrt2).sqrt(), 0.0),
        );
        let mut generators = [DiskIsometry::identity(); 8];
        for k in 0..4 {
            let rot = DiskIsometry::rotation(k as f64 * FRAC_PI_4);
            let tk = rot.compose(&t0).compose(&rot.inverse());
            generators[k] = tk;
            generators[k + 4] = tk.inverse();
        }
        let corners: [Complex64; 8] = std::array::from_fn(|j| {
            Complex64::from_polar(vertex_radius, side_direction(j) + FRAC_PI_8)
        });
        let s = (1.0 + midpoint_radius * midpoint_radius) / (2.0 * midpoint_radius);
        let sides: [GeodesicSide; 8] = std::array::from_fn(|j| GeodesicSide {
            center: Complex64::from_polar(s, side_direction(j)),
            radius: (s * s - 1.0).sqrt(),
            start: corners[(j + 7) % 8],
            end: corners[j],
        });
        BolzaDomain { vertex_radius, midpoint_radius, generators, sides, corners }
    }

    pub fn side_midpoint(&self, j: usize) -> Complex64 {
        Complex64::from_polar(self.midpoint_radius, side_direction(j))
    }

    /// Interior angle at corner `j`, measured from the tangents of the two arcs.
    pub fn corner_angle(&self, j: usize) -> f64 {
        let p = self.corners[j];
        let s1 = &self.sides[j];
        let s2 = &self.sides[(j + 1) % 8];
        let t1 = s1.tangent_towards(p, self.side_midpoint(j));
        let t2 = s2.tangent_towards(p, self.side_midpoint((j + 1) % 8));
        (t2 / t1).arg().abs()
    }

    /// Evaluates the surface-group relation; ±identity for a correct group.
    pub fn relation_product(&self) -> DiskIsometry {
        SURFACE_RELATION
            .iter()
            .fold(DiskIsometry::identity(), |acc, &k| acc.compose(&self.generators[k]))
    }

    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.norm_sqr() < 1.0 && self.sides.iter().all(|s| s.half_plane_value(z) >= -slack)
    }

    /// Hyperbolic area by Gauss–Legendre quadrature in polar coordinates:
    /// each sixteenth of the octagon is split into `pieces` angular
    /// intervals carrying `order`-point rules.
    pub fn area_by_quadrature(&self, order: usize, pieces: usize) -> f64 {
        let (nodes, weights) = gauss_legendre(order);
        let mut total = 0.0;
        for j in 0..8 {
            let side = &self.sides[j];
            let center = side_direction(j);
            let lo = center - FRAC_PI_8;
            let h = 2.0 * FRAC_PI_8 / pieces as f64;
            for p in 0..pieces {
                let a = lo + p as f64 * h;
                for (x, w) in nodes.iter().zip(&weights) {
                    let phi = a + 0.5 * h * (x + 1.0);
                    let r = side.ray_hit(phi);
                    // ∫₀^r 4ρ/(1−ρ²)² dρ = 2r²/(1−r²)
                    total += 0.5 * h * w * 2.0 * r * r / (1.0 - r * r);
                }
            }
        }
        total
    }

    /// Greedy reduction into the closed octagon. Returns the reduced point and
    /// the accumulated isometry `γ` with `γ(z) = z'`.
    pub fn reduce(&self, z: Complex64) -> Result<(Complex64, DiskIsometry)> {
        if !(z.norm_sqr() < 1.0) {
            return Err(Error::OutsideDisk { re: z.re, im: z.im });
        }
        let start = hyperbolic_distance(Complex64::new(0.0, 0.0), z);
        let limit = (10.0 * (1.0 + start)).ceil() as usize + 10;
        let mut w = z;
        let mut gamma = DiskIsometry::identity();
        for _ in 0..limit {
            let (k, worst) = self
                .sides
                .iter()
                .enumerate()
                .map(|(k, s)| (k, s.half_plane_value(w)))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .expect("eight sides");
            if worst >= -1e-13 {
                return Ok((w, gamma));
            }
            w = self.generators[k].apply(w);
            gamma = self.generators[k].compose(&gamma);
        }
        Err(Error::Internal(format!("domain reduction did not terminate within {limit} steps")))
    }

    /// All distinct group elements of word length ≤ `max_word_length`, sorted
    /// by word length then by the sign-normalized entries.
    pub fn enumerate_group(&self, max_word_length: usize) -> Vec<DiskIsometry> {
        let mut index = OrbitIndex::default();
        let mut levels: Vec<Vec<(DiskIsometry, Option<usize>)>> = Vec::new();
        let id = DiskIsometry::identity();
        index.insert(id);
        levels.push(vec![(id, None)]);
        for _ in 0..max_word_length {
            let mut next = Vec::new();
            for (g, last) in levels.last().expect("level") {
                for k in 0..8 {
                    if last.is_some_and(|l| (l + 4) % 8 == k) {
                        continue;
                    }
                    let h = g.compose(&self.generators[k]);
                    if index.insert(h) {
                        next.push((h, Some(k)));
                    }
                }
            }
            levels.push(next);
        }
        let mut out = Vec::new();
        for level in levels {
            let mut elems: Vec<DiskIsometry> = level.into_iter().map(|(g, _)| g.sign_normalized()).collect();
            elems.sort_by(|x, y| cmp_keys(&x.lexicographic_key(), &y.lexicographic_key()));
            out.extend(elems);
        }
        out
    }

    /// All group elements moving the origin by at most `radius`, sorted by
    /// displacement.
    pub fn enumerate_ball(&self, radius: f64) -> Vec<DiskIsometry> {
        // tiles met by the segment from 0 to γ(0) have centers within the
        // circumradius of it, so every element of the ball is reached through
        // elements inside this larger ball
        let expand = radius + octagon_circumradius();
        let mut index = OrbitIndex::default();
        let id = DiskIsometry::identity();
        index.insert(id);
        let mut frontier = vec![id];
        let mut kept = vec![id];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for g in &frontier {
                for gen in &self.generators {
                    let h = g.compose(gen);
                    let d = h.displacement();
                    if d > expand {
                        continue;
                    }
                    if index.insert(h) {
                        if d <= radius {
                            kept.push(h.sign_normalized());
                        }
                        next.push(h);
                    }
                }
            }
            frontier = next;
        }
        kept.sort_by(|x, y| {
            x.displacement()
                .total_cmp(&y.displacement())
                .then_with(|| cmp_keys(&x.lexicographic_key(), &y.lexicographic_key()))
        });
        kept
    }

    pub fn dump(&self) -> DomainDump {
        DomainDump {
            vertex_radius: self.vertex_radius,
            generators: self.generators.iter().map(|&g| g.into()).collect(),
            sides: self
                .sides
                .iter()
                .map(|s| SideRecord {
                    center_re: s.center.re,
                    center_im: s.center.im,
                    radius: s.radius,
                    start_re: s.start.re,
                    start_im: s.start.im,
                    end_re: s.end.re,
                    end_im: s.end.im,
                })
                .collect(),
        }
    }
}

impl Default for BolzaDomain {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SideRecord {
    pub center_re: f64,
    pub center_im: f64,
    pub radius: f64,
    pub start_re: f64,
    pub start_im: f64,
    pub end_re: f64,
    pub end_im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DomainDump {
    pub vertex_radius: f64,
    pub generators: Vec<IsometryRecord>,
    pub sides: Vec<SideRecord>,
}

fn cmp_keys(x: &[f64; 4], y: &[f64; 4]) -> std::cmp::Ordering {
    x.iter()
        .zip(y)
        .map(|(a, b)| a.total_cmp(b))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Dedup of group elements through their orbit point `γ(0)`; the surface
/// group acts freely so distinct elements have distinct orbit points.
#[derive(Default)]
struct OrbitIndex {
    cells: HashMap<(i64, i64), Vec<DiskIsometry>>,
}

impl OrbitIndex {
    const CELL: f64 = 1e-8;

    fn cell(z: Complex64) -> (i64, i64) {
        ((z.re / Self::CELL).floor() as i64, (z.im / Self::CELL).floor() as i64)
    }

    /// Returns `true` when `g` was not yet present.
    fn insert(&mut self, g: DiskIsometry) -> bool {
        let z = g.apply(Complex64::new(0.0, 0.0));
        let (cx, cy) = Self::cell(z);
        let inv = g.inverse();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = self.cells.get(&(cx + dx, cy + dy)) {
                    // entries agree within 1e-9 after sign normalization
                    if list.iter().any(|h| inv.compose(h).b.norm() < 1e-9 * (1.0 + h.a.norm())) {
                        return false;
                    }
                }
            }
        }
        self.cells.entry((cx, cy)).or_default().push(g);
        true
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn density_values() {
        assert_eq!(metric_density(c(0.0, 0.0)).unwrap(), 4.0);
        assert_relative_eq!(metric_density(c(0.5, 0.0)).unwrap(), 4.0 / 0.5625, epsilon = 1e-14);
        assert!(metric_density(c(0.9, 0.0)).unwrap() > metric_density(c(0.0, 0.8)).unwrap());
        assert!(matches!(metric_density(c(1.0, 0.0)), Err(Error::OutsideDisk { .. })));
        assert!(metric_density(c(0.6, 0.9)).is_err());
    }

    #[test]
    fn octagon_radii() {
        let r = octagon_circumradius();
        assert_relative_eq!(r.cosh(), 3.0 + 2.0 * 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(r, 2.448452447678076, epsilon = 1e-12);
        let dom = BolzaDomain::new();
        assert_relative_eq!(dom.vertex_radius, 0.8408964152537145, epsilon = 1e-12);
    }

    #[test]
    fn generator_determinant_and_translation_length() {
        let dom = BolzaDomain::new();
        for g in &dom.generators {
            assert!(g.determinant_defect().abs() < 1e-12);
        }
        let t0 = dom.generators[0];
        let ell = t0.translation_length();
        assert_relative_eq!(ell, 2.0 * (1.0 + 2f64.sqrt()).acosh(), epsilon = 1e-12);
        // displacement of the origin along the axis equals the translation length
        let o = c(0.0, 0.0);
        assert_relative_eq!(hyperbolic_distance(o, t0.apply(o)), ell, epsilon = 1e-10);
        let o2 = t0.apply(t0.apply(o));
        assert_relative_eq!(hyperbolic_distance(o, o2), 2.0 * ell, epsilon = 1e-9);
    }

    #[test]
    fn corner_angles_are_quarter_pi() {
        let dom = BolzaDomain::new();
        for j in 0..8 {
            assert!((dom.corner_angle(j) - FRAC_PI_4).abs() < 1e-10, "corner {j}");
        }
    }

    #[test]
    fn generators_pair_sides() {
        let dom = BolzaDomain::new();
        for k in 0..8 {
            let g = dom.generators[k];
            let src = dom.sides[k];
            let dst = dom.sides[(k + 4) % 8];
            // endpoints are exchanged: start ↦ end, end ↦ start
            assert!((g.apply(src.start) - dst.end).norm() < 1e-10);
            assert!((g.apply(src.end) - dst.start).norm() < 1e-10);
            assert!((g.apply(dom.side_midpoint(k)) - dom.side_midpoint((k + 4) % 8)).norm() < 1e-10);
        }
    }

    #[test]
    fn surface_relation_is_identity() {
        let p = BolzaDomain::new().relation_product();
        assert!(p.approx_eq(&DiskIsometry::identity(), 1e-8), "{p:?}");
    }

    #[test]
    fn area_is_four_pi() {
        let dom = BolzaDomain::new();
        let q = dom.area_by_quadrature(7, 8);
        assert!((q - 4.0 * PI).abs() < 1e-6, "{q}");
        let defect: f64 = (0..8)
            .map(|j| geodesic_triangle_area(c(0.0, 0.0), dom.corners[(j + 7) % 8], dom.corners[j]))
            .sum();
        assert_relative_eq!(defect, 4.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn word_counts() {
        let dom = BolzaDomain::new();
        assert_eq!(dom.enumerate_group(0).len(), 1);
        assert_eq!(dom.enumerate_group(1).len(), 9);
        // no relator is shorter than 8, so only free cancellation occurs
        assert_eq!(dom.enumerate_group(2).len(), 65);
        assert_eq!(dom.enumerate_group(3).len(), 457);
        let g = dom.enumerate_group(1);
        assert!(g[0].approx_eq(&DiskIsometry::identity(), 1e-15));
    }

    #[test]
    fn reduction_basics() {
        let dom = BolzaDomain::new();
        let z = c(0.1, -0.2);
        let (w, g) = dom.reduce(z).unwrap();
        assert_eq!(w, z);
        assert!(g.approx_eq(&DiskIsometry::identity(), 0.0));
        let t0 = dom.generators[0];
        let (w, g) = dom.reduce(t0.apply(c(0.0, 0.0))).unwrap();
        assert!(w.norm() < 1e-12);
        assert!(g.approx_eq(&t0.inverse(), 1e-10));
    }

    #[test]
    fn ball_enumeration_is_closed_under_small_words() {
        let dom = BolzaDomain::new();
        let ball = dom.enumerate_ball(4.0);
        for g in dom.enumerate_group(2) {
            if g.displacement() <= 4.0 {
                assert!(ball.iter().any(|h| h.approx_eq(&g, 1e-8)));
            }
        }
        assert!(ball.iter().all(|g| g.displacement() <= 4.0 + 1e-12));
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert_relative_eq!(s, 2.0 / 13.0, epsilon = 1e-14);
    }
}
