use std::f64::consts::TAU;

use super::HarmError;
use crate::linalg::BandedSym;
use crate::Vec3;

/// Which boundary arc a boundary vertex lies on. The corners `(±1, 0)`
/// belong to the lower arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryArc {
    Lower,
    Upper,
}

/// Concentric ring/sector triangulation of the closed unit disc.
///
/// Vertex 0 is the center; vertex `1 + (i-1)*S + j` sits on ring `i` at
/// angle `2πj/S`. Ring `rings` is the boundary.
#[derive(Debug, Clone)]
pub struct DiscMesh {
    rings: usize,
    sectors: usize,
    uv: Vec<[f64; 2]>,
    tris: Vec<[usize; 3]>,
}

impl DiscMesh {
    pub fn new(rings: usize, sectors: usize) -> Result<Self, HarmError> {
        Self::with_diagonals(rings, sectors, |_, _| false)
    }

    /// `flip(i, j)` selects the diagonal of the quad between rings `i`,
    /// `i+1` and sectors `j`, `j+1`: `false` joins `(i,j)-(i+1,j+1)`.
    pub fn with_diagonals(rings: usize, sectors: usize, flip: impl Fn(usize, usize) -> bool) -> Result<Self, HarmError> {
        if rings < 1 || sectors < 4 || sectors % 2 != 0 {
            return Err(HarmError::BadMesh(format!("need rings >= 1 and even sectors >= 4, got {rings}x{sectors}")));
        }
        let mut uv = Vec::with_capacity(1 + rings * sectors);
        uv.push([0.0, 0.0]);
        for i in 1..=rings {
            let r = i as f64 / rings as f64;
            for j in 0..sectors {
                let t = TAU * j as f64 / sectors as f64;
                let (s, c) = t.sin_cos();
                // exact zeros keep the arc split clean
                let (c, s) = match (4 * j) % sectors == 0 {
                    true => match 4 * j / sectors {
                        0 => (1.0, 0.0),
                        1 => (0.0, 1.0),
                        2 => (-1.0, 0.0),
                        _ => (0.0, -1.0),
                    },
                    false => (c, s),
                };
                uv.push([r * c, r * s]);
            }
        }
        let mut mesh = DiscMesh { rings, sectors, uv, tris: Vec::new() };
        let mut tris = Vec::with_capacity(sectors * (2 * rings - 1));
        for j in 0..sectors {
            tris.push([0, mesh.vertex(1, j), mesh.vertex(1, j + 1)]);
        }
        for i in 1..rings {
            for j in 0..sectors {
                let a = mesh.vertex(i, j);
                let b = mesh.vertex(i + 1, j);
                let c = mesh.vertex(i + 1, j + 1);
                let d = mesh.vertex(i, j + 1);
                if flip(i, j) {
                    tris.push([a, b, d]);
                    tris.push([b, c, d]);
                } else {
                    tris.push([a, b, c]);
                    tris.push([a, c, d]);
                }
            }
        }
        mesh.tris = tris;
        Ok(mesh)
    }

    /// Index of ring `i`, sector `j` (taken mod `S`); ring 0 is the center.
    pub fn vertex(&self, i: usize, j: usize) -> usize {
        if i == 0 {
            0
        } else {
            1 + (i - 1) * self.sectors + j % self.sectors
        }
    }

    pub fn rings(&self) -> usize {
        self.rings
    }

    pub fn sectors(&self) -> usize {
        self.sectors
    }

    pub fn uv(&self) -> &[[f64; 2]] {
        &self.uv
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.tris
    }

    pub fn vertex_count(&self) -> usize {
        self.uv.len()
    }

    /// `(ring, sector)` of a vertex; the center is `(0, 0)`.
    pub fn ring_sector(&self, v: usize) -> (usize, usize) {
        if v == 0 {
            (0, 0)
        } else {
            (1 + (v - 1) / self.sectors, (v - 1) % self.sectors)
        }
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.ring_sector(v).0 == self.rings
    }

    pub fn arc(&self, v: usize) -> Option<BoundaryArc> {
        let (i, j) = self.ring_sector(v);
        if i != self.rings {
            None
        } else if j == 0 || j >= self.sectors / 2 {
            Some(BoundaryArc::Lower)
        } else {
            Some(BoundaryArc::Upper)
        }
    }

    /// Boundary vertices by sector `j = 0..S`.
    pub fn boundary(&self) -> Vec<usize> {
        (0..self.sectors).map(|j| self.vertex(self.rings, j)).collect()
    }

    /// Lower arc from the corner `(-1, 0)` to the corner `(1, 0)`, corners included.
    pub fn lower_arc(&self) -> Vec<usize> {
        (self.sectors / 2..=self.sectors).map(|j| self.vertex(self.rings, j)).collect()
    }

    /// Open upper arc from `(1, 0)` towards `(-1, 0)`, corners excluded.
    pub fn upper_arc(&self) -> Vec<usize> {
        (1..self.sectors / 2).map(|j| self.vertex(self.rings, j)).collect()
    }

    pub fn interior(&self) -> Vec<usize> {
        (0..self.vertex_count()).filter(|&v| !self.is_boundary(v)).collect()
    }

    /// Vertex adjacency lists, sorted.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count()];
        for t in &self.tris {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for l in &mut adj {
            l.sort_unstable();
            l.dedup();
        }
        adj
    }

    /// Locates `p` and returns the containing triangle with barycentric
    /// weights.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let r = p[0].hypot(p[1]);
        if r > 1.0 + 1e-12 {
            return None;
        }
        let ring = ((r * self.rings as f64).floor() as usize).min(self.rings - 1);
        let ang = p[1].atan2(p[0]).rem_euclid(TAU);
        let sec = ((ang / TAU * self.sectors as f64).floor() as usize).min(self.sectors - 1);
        let quad = |ring: usize| if ring == 0 { vec![sec] } else {
            let base = self.sectors + 2 * ((ring - 1) * self.sectors + sec);
            vec![base, base + 1]
        };
        let mut cands = quad(ring);
        if ring > 0 {
            cands.extend(quad(ring - 1));
        }
        let tol = 1e-12;
        for &t in &cands {
            if let Some(b) = self.barycentric(t, p) {
                if b.iter().all(|x| *x >= -tol) {
                    return Some((t, b));
                }
            }
        }
        // numerical edge cases at ring or sector borders
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for t in 0..self.tris.len() {
            if let Some(b) = self.barycentric(t, p) {
                let worst = b.iter().cloned().fold(f64::INFINITY, f64::min);
                if best.map_or(true, |(_, _, w)| worst > w) {
                    best = Some((t, b, worst));
                }
            }
        }
        best.filter(|(_, _, w)| *w >= -1e-9).map(|(t, b, _)| (t, b))
    }

    fn barycentric(&self, t: usize, p: [f64; 2]) -> Option<[f64; 3]> {
        let [a, b, c] = self.tris[t].map(|v| self.uv[v]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        if det.abs() < 1e-300 {
            return None;
        }
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
        Some([1.0 - l1 - l2, l1, l2])
    }

    /// Piecewise-linear interpolation of per-vertex values.
    pub fn interpolate(&self, values: &[f64], p: [f64; 2]) -> Option<f64> {
        self.locate(p).map(|(t, b)| {
            let tri = self.tris[t];
            b[0] * values[tri[0]] + b[1] * values[tri[1]] + b[2] * values[tri[2]]
        })
    }

    /// Positions of the vertices in the plane `z = 0`.
    pub fn flat_positions(&self) -> Vec<Vec3> {
        self.uv.iter().map(|p| Vec3::new(p[0], p[1], 0.0)).collect()
    }

    /// Half-bandwidth of the interior-vertex block in natural order.
    pub(crate) fn interior_bandwidth(&self) -> usize {
        let mut bw = 0;
        for t in &self.tris {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if !self.is_boundary(a) && !self.is_boundary(b) {
                    bw = bw.max(a.abs_diff(b));
                }
            }
        }
        bw
    }
}

/// Symmetric edge weights `w_ij = ½ Σ cot θ` of the cotangent Laplacian for
/// triangles with the given vertex positions. Entries are keyed `(i, j)`
/// with `i < j`, sorted.
pub fn cotan_weights(tris: &[[usize; 3]], pos: &[Vec3]) -> Result<Vec<((usize, usize), f64)>, HarmError> {
    let mut w: Vec<((usize, usize), f64)> = Vec::with_capacity(tris.len() * 3);
    for (ti, t) in tris.iter().enumerate() {
        let area2 = (pos[t[1]] - pos[t[0]]).cross(&(pos[t[2]] - pos[t[0]])).norm();
        if !(area2 > 0.0) || !area2.is_finite() {
            return Err(HarmError::Singular(format!("triangle {ti} has zero area")));
        }
        for k in 0..3 {
            let o = t[k];
            let (a, b) = (t[(k + 1) % 3], t[(k + 2) % 3]);
            let (ea, eb) = (pos[a] - pos[o], pos[b] - pos[o]);
            let cot = ea.dot(&eb) / area2;
            w.push(((a.min(b), a.max(b)), 0.5 * cot));
        }
    }
    w.sort_by(|x, y| x.0.cmp(&y.0));
    let mut out: Vec<((usize, usize), f64)> = Vec::with_capacity(w.len() / 2 + 1);
    for (k, v) in w {
        match out.last_mut() {
            Some((lk, lv)) if *lk == k => *lv += v,
            _ => out.push((k, v)),
        }
    }
    Ok(out)
}

/// Interior block of the cotangent stiffness matrix, in the compressed
/// index of `interior`, plus the interior-boundary couplings `(row, v, w)`.
pub(crate) fn assemble_interior(
    mesh: &DiscMesh,
    weights: &[((usize, usize), f64)],
) -> Result<(BandedSym, Vec<(usize, usize, f64)>), HarmError> {
    let n = mesh.vertex_count();
    let mut local = vec![usize::MAX; n];
    let mut next = 0;
    for v in 0..n {
        if !mesh.is_boundary(v) {
            local[v] = next;
            next += 1;
        }
    }
    let mut k = BandedSym::zeros(next, mesh.interior_bandwidth().max(1));
    let mut coupling = Vec::new();
    for &((a, b), w) in weights {
        let (la, lb) = (local[a], local[b]);
        if la != usize::MAX {
            k.add(la, la, w).map_err(|e| HarmError::Singular(e.to_string()))?;
        }
        if lb != usize::MAX {
            k.add(lb, lb, w).map_err(|e| HarmError::Singular(e.to_string()))?;
        }
        match (la != usize::MAX, lb != usize::MAX) {
            (true, true) => k.add(la, lb, -w).map_err(|e| HarmError::Singular(e.to_string()))?,
            (true, false) => coupling.push((la, b, w)),
            (false, true) => coupling.push((lb, a, w)),
            _ => {}
        }
    }
    Ok((k, coupling))
}
