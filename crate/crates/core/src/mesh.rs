//! Pairing-compatible triangulation of the octagon and P1 finite-element
//! assembly on the identified surface.
//!
//! Raw vertices live in the closed octagon; boundary copies are folded onto
//! canonical vertices through `identify`. All assembled objects (stiffness,
//! lumped mass, fields) are indexed by canonical vertex.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hyperbolic::{geodesic_midpoint, geodesic_triangle_area, metric_density, BolzaDomain};
use crate::linalg::{CsrMatrix, Ordering};

pub const MAX_LEVEL: usize = 8;

/// How each triangle's hyperbolic area is split onto its vertices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassScheme {
    /// Area of the geodesic triangle through the three vertices (angle
    /// defect). The total is exactly the surface area.
    #[default]
    Geodesic,
    /// Quadrature of the metric density over the straight triangle in disk
    /// coordinates. Second-order accurate.
    StraightQuadrature,
}

/// Symmetric triangle rules on barycentric coordinates, weights summing to 1.
pub fn triangle_rule(points: usize) -> Result<Vec<([f64; 3], f64)>> {
    match points {
        1 => Ok(vec![([1.0 / 3.0; 3], 1.0)]),
        3 => Ok(vec![
            ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
            ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
            ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
        ]),
        7 => {
            // degree-5 rule
            let s15 = 15f64.sqrt();
            let a1 = (6.0 - s15) / 21.0;
            let b1 = (9.0 + 2.0 * s15) / 21.0;
            let a2 = (6.0 + s15) / 21.0;
            let b2 = (9.0 - 2.0 * s15) / 21.0;
            let w1 = (155.0 - s15) / 1200.0;
            let w2 = (155.0 + s15) / 1200.0;
            Ok(vec![
                ([1.0 / 3.0; 3], 9.0 / 40.0),
                ([b1, a1, a1], w1),
                ([a1, b1, a1], w1),
                ([a1, a1, b1], w1),
                ([b2, a2, a2], w2),
                ([a2, b2, a2], w2),
                ([a2, a2, b2], w2),
            ])
        }
        _ => Err(Error::InvalidInput(format!("no {points}-point triangle rule (use 1, 3 or 7)"))),
    }
}

fn bary_point(p: [Complex64; 3], b: [f64; 3]) -> Complex64 {
    p[0] * b[0] + p[1] * b[1] + p[2] * b[2]
}

fn straight_area(p: [Complex64; 3]) -> f64 {
    let e1 = p[1] - p[0];
    let e2 = p[2] - p[0];
    0.5 * (e1.re * e2.im - e1.im * e2.re)
}

/// One quadrature point of the surface integration functional.
#[derive(Clone, Copy, Debug)]
struct QuadPoint {
    tri: usize,
    bary: [f64; 3],
    weight: f64,
    z: Complex64,
}

#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    pub refinement_level: usize,
    pub vertices: Vec<Complex64>,
    pub triangles: Vec<[usize; 3]>,
    /// Raw vertex → canonical vertex.
    pub identify: Vec<usize>,
    /// Bitmask of octagon sides each raw vertex lies on.
    pub side_mask: Vec<u8>,
    pub quadrature_order: usize,
    pub mass_scheme: MassScheme,
    /// Per-canonical-vertex hyperbolic area.
    pub lumped_mass: Vec<f64>,
    pub stiffness: CsrMatrix,
    n_canonical: usize,
    representative: Vec<usize>,
    quad: Vec<QuadPoint>,
    ordering: Ordering,
    hash: String,
}

/// Builds the refined, identified mesh with the default geodesic mass.
pub fn build_mesh(domain: &BolzaDomain, level: usize) -> Result<SurfaceMesh> {
    build_mesh_with(domain, level, MassScheme::Geodesic, 7)
}

pub fn build_mesh_with(
    domain: &BolzaDomain,
    level: usize,
    scheme: MassScheme,
    quadrature_order: usize,
) -> Result<SurfaceMesh> {
    if level > MAX_LEVEL {
        return Err(Error::InvalidInput(format!("refinement level {level} outside [0, {MAX_LEVEL}]")));
    }
    let mut b = Builder::coarse(domain);
    b.check_pairing(domain)?;
    for _ in 0..level {
        b.refine(domain);
        b.check_pairing(domain)?;
    }
    let identify = b.identification();
    SurfaceMesh::from_parts(level, b.vertices, b.triangles, identify, b.side_mask, scheme, quadrature_order)
}

struct Builder {
    vertices: Vec<Complex64>,
    triangles: Vec<[usize; 3]>,
    side_mask: Vec<u8>,
    /// `(k, v)` for `v` on side `k + 4` → its partner on side `k`.
    partner: HashMap<(usize, usize), usize>,
}

impl Builder {
    fn coarse(domain: &BolzaDomain) -> Self {
        let mut vertices = vec![Complex64::new(0.0, 0.0)];
        let mut side_mask = vec![0u8];
        for j in 0..8 {
            vertices.push(domain.corners[j]);
            side_mask.push((1 << j) | (1 << ((j + 1) % 8)));
        }
        for j in 0..8 {
            vertices.push(domain.side_midpoint(j));
            side_mask.push(1 << j);
        }
        let corner = |j: usize| 1 + j % 8;
        let mid = |j: usize| 9 + j;
        let mut triangles = Vec::with_capacity(16);
        for j in 0..8 {
            triangles.push([0, corner(j + 7), mid(j)]);
            triangles.push([0, mid(j), corner(j)]);
        }
        let mut partner = HashMap::new();
        for k in 0..4 {
            let g = domain.generators[k];
            let on = |s: usize| -> Vec<usize> {
                (0..vertices.len()).filter(|&v| side_mask[v] & (1 << s) != 0).collect()
            };
            let candidates = on(k);
            for v in on(k + 4) {
                let p = candidates
                    .iter()
                    .copied()
                    .min_by(|&a, &b| {
                        let da = (g.apply(vertices[a]) - vertices[v]).norm();
                        let db = (g.apply(vertices[b]) - vertices[v]).norm();
                        da.total_cmp(&db)
                    })
                    .expect("side has vertices");
                partner.insert((k, v), p);
            }
        }
        Builder { vertices, triangles, side_mask, partner }
    }

    fn refine(&mut self, domain: &BolzaDomain) {
        let mut edge_mid: HashMap<(usize, usize), usize> = HashMap::new();
        let key = |a: usize, b: usize| (a.min(b), a.max(b));
        let mut pending_paired: Vec<(usize, usize, usize)> = Vec::new();
        let old = std::mem::take(&mut self.triangles);
        // first pass creates every midpoint; paired sides are fixed afterwards
        for t in &old {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                if edge_mid.contains_key(&key(a, b)) {
                    continue;
                }
                let shared = self.side_mask[a] & self.side_mask[b];
                let mut z = geodesic_midpoint(self.vertices[a], self.vertices[b]);
                if shared != 0 {
                    let s = shared.trailing_zeros() as usize;
                    z = domain.sides[s].project(z);
                    if s >= 4 {
                        pending_paired.push((s - 4, a, b));
                    }
                }
                self.vertices.push(z);
                self.side_mask.push(shared);
                edge_mid.insert(key(a, b), self.vertices.len() - 1);
            }
        }
        for (k, a, b) in pending_paired {
            let m = edge_mid[&key(a, b)];
            let pa = self.partner[&(k, a)];
            let pb = self.partner[&(k, b)];
            let pm = edge_mid[&key(pa, pb)];
            self.vertices[m] = domain.generators[k].apply(self.vertices[pm]);
            self.partner.insert((k, m), pm);
        }
        self.triangles = Vec::with_capacity(4 * old.len());
        for t in &old {
            let [a, b, c] = *t;
            let ab = edge_mid[&key(a, b)];
            let bc = edge_mid[&key(b, c)];
            let ca = edge_mid[&key(c, a)];
            self.triangles.push([a, ab, ca]);
            self.triangles.push([ab, b, bc]);
            self.triangles.push([ca, bc, c]);
            self.triangles.push([ab, bc, ca]);
        }
    }

    fn check_pairing(&self, domain: &BolzaDomain) -> Result<()> {
        let mut worst: f64 = 0.0;
        for (&(k, v), &p) in &self.partner {
            worst = worst.max((domain.generators[k].apply(self.vertices[p]) - self.vertices[v]).norm());
        }
        if worst > 1e-8 {
            return Err(Error::PairingMismatch(worst));
        }
        Ok(())
    }

    /// Union-find over the pairings, numbered in order of first raw index.
    fn identification(&self) -> Vec<usize> {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut pairs: Vec<(usize, usize)> = self.partner.iter().map(|(&(_, v), &p)| (v, p)).collect();
        pairs.sort_unstable();
        for (v, p) in pairs {
            let (rv, rp) = (find(&mut parent, v), find(&mut parent, p));
            if rv != rp {
                let (lo, hi) = (rv.min(rp), rv.max(rp));
                parent[hi] = lo;
            }
        }
        let mut label = vec![usize::MAX; n];
        let mut identify = vec![0; n];
        let mut next = 0;
        for v in 0..n {
            let r = find(&mut parent, v);
            if label[r] == usize::MAX {
                label[r] = next;
                next += 1;
            }
            identify[v] = label[r];
        }
        identify
    }
}

impl SurfaceMesh {
    /// Assembles a mesh from explicit topology. Used by the builder and when
    /// loading mesh files.
    pub fn from_parts(
        refinement_level: usize,
        vertices: Vec<Complex64>,
        triangles: Vec<[usize; 3]>,
        identify: Vec<usize>,
        side_mask: Vec<u8>,
        mass_scheme: MassScheme,
        quadrature_order: usize,
    ) -> Result<Self> {
        let n_raw = vertices.len();
        if identify.len() != n_raw || side_mask.len() != n_raw {
            return Err(Error::InvalidInput("identify table does not match vertex count".into()));
        }
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&v| v >= n_raw)) {
            return Err(Error::InvalidInput(format!("triangle {t:?} references a missing vertex")));
        }
        if let Some(z) = vertices.iter().find(|z| !(z.norm_sqr() < 1.0)) {
            return Err(Error::OutsideDisk { re: z.re, im: z.im });
        }
        let n_canonical = identify.iter().max().map_or(0, |m| m + 1);
        let mut representative = vec![usize::MAX; n_canonical];
        for (v, &c) in identify.iter().enumerate() {
            if representative[c] == usize::MAX {
                representative[c] = v;
            }
        }
        if representative.contains(&usize::MAX) {
            return Err(Error::InvalidInput("identify table is not surjective".into()));
        }
        let rule = triangle_rule(quadrature_order)?;
        let stiffness = assemble_stiffness_raw(&vertices, &triangles, &identify, n_canonical)?;
        let quad = build_quadrature(&vertices, &triangles, &rule)?;
        let mut mesh = SurfaceMesh {
            refinement_level,
            vertices,
            triangles,
            identify,
            side_mask,
            quadrature_order,
            mass_scheme,
            lumped_mass: Vec::new(),
            ordering: Ordering::rcm(&stiffness),
            stiffness,
            n_canonical,
            representative,
            quad,
            hash: String::new(),
        };
        mesh.lumped_mass = mesh.lumped_areas(mass_scheme)?;
        mesh.hash = mesh.compute_hash();
        Ok(mesh)
    }

    pub fn n_canonical(&self) -> usize {
        self.n_canonical
    }

    /// A raw vertex carrying each canonical vertex's position.
    pub fn canonical_point(&self, c: usize) -> Complex64 {
        self.vertices[self.representative[c]]
    }

    /// Raw vertex index representing canonical vertex `c`.
    pub fn representative(&self, c: usize) -> usize {
        self.representative[c]
    }

    pub fn canonical_points(&self) -> Vec<Complex64> {
        (0..self.n_canonical).map(|c| self.canonical_point(c)).collect()
    }

    /// Fill-reducing ordering of the stiffness sparsity pattern.
    pub fn ordering(&self) -> &Ordering {
        &self.ordering
    }

    /// Content hash over level, coordinates, topology and identification.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    fn compute_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.refinement_level as u64).to_le_bytes());
        for z in &self.vertices {
            h.update(z.re.to_bits().to_le_bytes());
            h.update(z.im.to_bits().to_le_bytes());
        }
        for t in &self.triangles {
            for &v in t {
                h.update((v as u64).to_le_bytes());
            }
        }
        for &c in &self.identify {
            h.update((c as u64).to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    fn tri_points(&self, t: usize) -> [Complex64; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    /// Per-canonical-vertex area under the given lumping scheme.
    pub fn lumped_areas(&self, scheme: MassScheme) -> Result<Vec<f64>> {
        let rule = triangle_rule(self.quadrature_order)?;
        let areas: Vec<f64> = (0..self.triangles.len())
            .into_par_iter()
            .map(|t| {
                let p = self.tri_points(t);
                match scheme {
                    MassScheme::Geodesic => Ok(geodesic_triangle_area(p[0], p[1], p[2])),
                    MassScheme::StraightQuadrature => {
                        let a = straight_area(p);
                        rule.iter().try_fold(0.0, |acc, (b, w)| Ok(acc + a * w * metric_density(bary_point(p, *b))?))
                    }
                }
            })
            .collect::<Result<_>>()?;
        let mut mass = vec![0.0; self.n_canonical];
        for (t, a) in areas.iter().enumerate() {
            for &v in &self.triangles[t] {
                mass[self.identify[v]] += a / 3.0;
            }
        }
        Ok(mass)
    }

    pub fn total_area(&self) -> f64 {
        self.lumped_mass.iter().sum()
    }

    /// Lumped mass weighted by a nonnegative per-vertex field.
    pub fn weighted_mass(&self, weight: &[f64]) -> Result<Vec<f64>> {
        if weight.len() != self.n_canonical {
            return Err(Error::InvalidInput("weight length does not match the mesh".into()));
        }
        if let Some(w) = weight.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidInput(format!("mass weight {w} is not finite and nonnegative")));
        }
        Ok(self.lumped_mass.iter().zip(weight).map(|(m, w)| m * w).collect())
    }

    /// Lumped integral `Σ M_v f_v`.
    pub fn lumped_integral(&self, f: &[f64]) -> f64 {
        self.lumped_mass.iter().zip(f).map(|(m, f)| m * f).sum()
    }

    /// Integral of `g(f₁, f₂, …)` where each `fᵢ` is the P1 interpolant of a
    /// canonical field. Weights on each triangle are scaled to its
    /// geodesic-triangle area, so constants integrate exactly.
    pub fn integrate<G>(&self, fields: &[&[f64]], g: G) -> f64
    where
        G: Fn(&[f64]) -> f64 + Sync,
    {
        let k = fields.len();
        self.quad
            .par_chunks(self.quadrature_order)
            .map(|chunk| {
                let mut vals = vec![0.0; k];
                chunk
                    .iter()
                    .map(|q| {
                        let tri = self.triangles[q.tri];
                        for (slot, f) in vals.iter_mut().zip(fields) {
                            *slot = (0..3).map(|i| q.bary[i] * f[self.identify[tri[i]]]).sum();
                        }
                        q.weight * g(&vals)
                    })
                    .sum::<f64>()
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum()
    }

    /// Integral of `g(z, f₁, …)` with `z` the quadrature point, for
    /// integrands known in closed form.
    pub fn integrate_pointwise<G>(&self, fields: &[&[f64]], g: G) -> f64
    where
        G: Fn(Complex64, &[f64]) -> f64 + Sync,
    {
        let k = fields.len();
        self.quad
            .par_chunks(self.quadrature_order)
            .map(|chunk| {
                let mut vals = vec![0.0; k];
                chunk
                    .iter()
                    .map(|q| {
                        let tri = self.triangles[q.tri];
                        for (slot, f) in vals.iter_mut().zip(fields) {
                            *slot = (0..3).map(|i| q.bary[i] * f[self.identify[tri[i]]]).sum();
                        }
                        q.weight * g(q.z, &vals)
                    })
                    .sum::<f64>()
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum()
    }

    /// Quadrature points in the disk, in the order used by the integrators.
    pub fn quadrature_points(&self) -> Vec<Complex64> {
        self.quad.iter().map(|q| q.z).collect()
    }

    /// Euler characteristic from canonical counts; edges are interior edges
    /// plus half the (paired) boundary edges.
    pub fn euler_characteristic(&self) -> i64 {
        let mut count: HashMap<(usize, usize), u8> = HashMap::new();
        for t in &self.triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let boundary = count.values().filter(|&&c| c == 1).count();
        let interior = count.len() - boundary;
        let edges = interior + boundary / 2;
        self.n_canonical as i64 - edges as i64 + self.triangles.len() as i64
    }

    /// Largest distance between a paired boundary vertex and the generator
    /// image of a copy of the same canonical vertex.
    pub fn pairing_defect(&self, domain: &BolzaDomain) -> f64 {
        let mut copies: Vec<Vec<usize>> = vec![Vec::new(); self.n_canonical];
        for (v, &c) in self.identify.iter().enumerate() {
            copies[c].push(v);
        }
        let mut worst: f64 = 0.0;
        for (v, &m) in self.side_mask.iter().enumerate() {
            for k in 0..4 {
                if m & (1 << (k + 4)) == 0 {
                    continue;
                }
                let best = copies[self.identify[v]]
                    .iter()
                    .filter(|&&p| self.side_mask[p] & (1 << k) != 0)
                    .map(|&p| (domain.generators[k].apply(self.vertices[p]) - self.vertices[v]).norm())
                    .fold(f64::INFINITY, f64::min);
                worst = worst.max(best);
            }
        }
        worst
    }

    /// Interpolates a canonical field onto raw vertices.
    pub fn to_raw(&self, f: &[f64]) -> Vec<f64> {
        self.identify.iter().map(|&c| f[c]).collect()
    }

    /// Folds a raw field onto canonical vertices by averaging the copies;
    /// also returns the largest spread among copies of one vertex. Copies
    /// are averaged as offsets from the first, so equal copies fold exactly.
    pub fn fold_average(&self, raw: &[f64]) -> (Vec<f64>, f64) {
        let first: Vec<f64> = (0..self.n_canonical).map(|c| raw[self.representative[c]]).collect();
        let mut offset = vec![0.0; self.n_canonical];
        let mut lo = first.clone();
        let mut hi = first.clone();
        let mut cnt = vec![0usize; self.n_canonical];
        for (v, &c) in self.identify.iter().enumerate() {
            offset[c] += raw[v] - first[c];
            cnt[c] += 1;
            lo[c] = lo[c].min(raw[v]);
            hi[c] = hi[c].max(raw[v]);
        }
        let spread = lo.iter().zip(&hi).map(|(l, h)| h - l).fold(0.0, f64::max);
        (first.iter().zip(&offset).zip(&cnt).map(|((f, o), &n)| f + o / n as f64).collect(), spread)
    }
}

/// Cotangent stiffness folded onto canonical vertices.
pub fn assemble_stiffness(mesh: &SurfaceMesh) -> Result<CsrMatrix> {
    assemble_stiffness_raw(&mesh.vertices, &mesh.triangles, &mesh.identify, mesh.n_canonical)
}

fn assemble_stiffness_raw(
    vertices: &[Complex64],
    triangles: &[[usize; 3]],
    identify: &[usize],
    n: usize,
) -> Result<CsrMatrix> {
    let locals: Vec<[f64; 3]> = triangles
        .par_iter()
        .enumerate()
        .map(|(t, tri)| {
            let p = tri.map(|v| vertices[v]);
            let area = straight_area(p);
            if !(area >= 1e-14) {
                return Err(Error::DegenerateTriangle { index: t, area });
            }
            // cot of the angle at vertex i, for the opposite edge
            Ok(std::array::from_fn(|i| {
                let e1 = p[(i + 1) % 3] - p[i];
                let e2 = p[(i + 2) % 3] - p[i];
                (e1.re * e2.re + e1.im * e2.im) / (2.0 * area)
            }))
        })
        .collect::<Result<_>>()?;
    let mut trip = Vec::with_capacity(triangles.len() * 12);
    for (tri, cot) in triangles.iter().zip(&locals) {
        for i in 0..3 {
            let a = identify[tri[(i + 1) % 3]];
            let b = identify[tri[(i + 2) % 3]];
            let w = 0.5 * cot[i];
            trip.push((a, b, -w));
            trip.push((b, a, -w));
            trip.push((a, a, w));
            trip.push((b, b, w));
        }
    }
    Ok(CsrMatrix::from_triplets(n, trip))
}

fn build_quadrature(
    vertices: &[Complex64],
    triangles: &[[usize; 3]],
    rule: &[([f64; 3], f64)],
) -> Result<Vec<QuadPoint>> {
    let per_tri: Vec<Vec<QuadPoint>> = triangles
        .par_iter()
        .enumerate()
        .map(|(t, tri)| {
            let p = tri.map(|v| vertices[v]);
            let target = geodesic_triangle_area(p[0], p[1], p[2]);
            let raw = rule
                .iter()
                .map(|(b, w)| Ok((bary_point(p, *b), w * metric_density(bary_point(p, *b))?)))
                .collect::<Result<Vec<_>>>()?;
            let total: f64 = raw.iter().map(|(_, w)| w).sum();
            Ok(raw
                .iter()
                .zip(rule)
                .map(|((z, w), (b, _))| QuadPoint { tri: t, bary: *b, weight: w * target / total, z: *z })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_tri.into_iter().flatten().collect())
}

/// Interchange form of a mesh.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeshFile {
    pub refinement_level: usize,
    pub quadrature_order: usize,
    pub mass_scheme: MassScheme,
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub identify: Vec<usize>,
    pub side_mask: Vec<u8>,
    pub mesh_hash: String,
}

impl From<&SurfaceMesh> for MeshFile {
    fn from(m: &SurfaceMesh) -> Self {
        MeshFile {
            refinement_level: m.refinement_level,
            quadrature_order: m.quadrature_order,
            mass_scheme: m.mass_scheme,
            vertices: m.vertices.iter().map(|z| [z.re, z.im]).collect(),
            triangles: m.triangles.clone(),
            identify: m.identify.clone(),
            side_mask: m.side_mask.clone(),
            mesh_hash: m.hash.clone(),
        }
    }
}

impl MeshFile {
    /// Rebuilds the mesh and checks the stored hash.
    pub fn into_mesh(self) -> Result<SurfaceMesh> {
        let expected = self.mesh_hash.clone();
        let mesh = SurfaceMesh::from_parts(
            self.refinement_level,
            self.vertices.iter().map(|v| Complex64::new(v[0], v[1])).collect(),
            self.triangles,
            self.identify,
            self.side_mask,
            self.mass_scheme,
            self.quadrature_order,
        )?;
        if mesh.hash() != expected {
            return Err(Error::MeshHashMismatch { expected, found: mesh.hash().to_string() });
        }
        Ok(mesh)
    }
}
