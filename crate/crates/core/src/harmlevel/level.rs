use std::collections::{BTreeMap, BTreeSet};

use super::field::{DiscField, ZERO_TOL};
use super::mesh::BoundaryArc;
use super::HarmError;

/// Where a point of the piecewise-linear level set sits in the mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointLoc {
    /// A vertex whose value equals the level.
    Vertex(usize),
    /// A crossing on edge `(a, b)` at `(1 - t) a + t b`.
    Edge(usize, usize, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelPoint {
    pub pos: [f64; 2],
    pub loc: PointLoc,
    pub boundary: Option<BoundaryArc>,
    pub degree: usize,
    pub component: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    LowerBoundary,
    UpperBoundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelNode {
    pub point: usize,
    pub pos: [f64; 2],
    pub kind: NodeKind,
    pub valence: usize,
    pub component: usize,
}

/// A traced edge between two nodes, with the point indices it passes.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelEdge {
    pub a: usize,
    pub b: usize,
    pub points: Vec<usize>,
    pub polyline: Vec<[f64; 2]>,
}

/// The `h = a` level set of a piecewise-linear field as a planar graph.
#[derive(Debug, Clone)]
pub struct LevelGraph {
    pub level: f64,
    pub points: Vec<LevelPoint>,
    /// Straight pieces between level points.
    pub segments: Vec<(usize, usize)>,
    pub nodes: Vec<LevelNode>,
    pub edges: Vec<LevelEdge>,
    pub components: usize,
    /// First Betti number of the level set.
    pub cycles: usize,
}

impl LevelGraph {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn component_nodes(&self, c: usize) -> impl Iterator<Item = &LevelNode> {
        self.nodes.iter().filter(move |n| n.component == c)
    }

    /// Whether component `c` contains a piece lying along the boundary arc `arc`.
    pub fn runs_along(&self, c: usize, arc: BoundaryArc) -> bool {
        self.segments.iter().any(|&(p, q)| {
            self.points[p].component == c && self.points[p].boundary == Some(arc) && self.points[q].boundary == Some(arc)
                && matches!((self.points[p].loc, self.points[q].loc), (PointLoc::Vertex(_), PointLoc::Vertex(_)))
        })
    }
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let n = self.0[y];
            self.0[y] = r;
            y = n;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Traces the `h = a` level set through the triangles. Vertex values within
/// a relative tolerance of `a` are snapped onto the level.
pub fn extract_level_graph(field: &DiscField, a: f64) -> Result<LevelGraph, HarmError> {
    let mesh = &*field.mesh;
    let tol = ZERO_TOL * field.scale().max(a.abs());
    let sign: Vec<i8> = field
        .values
        .iter()
        .map(|v| {
            let d = v - a;
            if d.abs() <= tol {
                0
            } else if d > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();

    let mut ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut points: Vec<LevelPoint> = Vec::new();
    let uv = mesh.uv();
    let mut point_id = |key: (usize, usize), points: &mut Vec<LevelPoint>| -> usize {
        *ids.entry(key).or_insert_with(|| {
            let (loc, pos, boundary) = if key.0 == key.1 {
                let v = key.0;
                (PointLoc::Vertex(v), uv[v], mesh.arc(v))
            } else {
                let (u, v) = key;
                let t = (a - field.values[u]) / (field.values[v] - field.values[u]);
                let pos = [uv[u][0] + t * (uv[v][0] - uv[u][0]), uv[u][1] + t * (uv[v][1] - uv[u][1])];
                let boundary = if mesh.is_boundary(u) && mesh.is_boundary(v) {
                    Some(if pos[1] > 0.0 { BoundaryArc::Upper } else { BoundaryArc::Lower })
                } else {
                    None
                };
                (PointLoc::Edge(u, v, t), pos, boundary)
            };
            points.push(LevelPoint { pos, loc, boundary, degree: 0, component: 0 });
            points.len() - 1
        })
    };
    let edge_key = |u: usize, v: usize| (u.min(v), u.max(v));

    let mut segs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for t in mesh.triangles() {
        let s = t.map(|v| sign[v]);
        let zeros: Vec<usize> = (0..3).filter(|&k| s[k] == 0).collect();
        let mut ends: Vec<usize> = Vec::new();
        match zeros.len() {
            3 => {
                let p = uv[t[0]];
                return Err(HarmError::Plateau { x: p[0], y: p[1] });
            }
            2 => {
                ends.push(point_id((t[zeros[0]], t[zeros[0]]), &mut points));
                ends.push(point_id((t[zeros[1]], t[zeros[1]]), &mut points));
            }
            1 => {
                let z = zeros[0];
                let (u, v) = (t[(z + 1) % 3], t[(z + 2) % 3]);
                let id = point_id((t[z], t[z]), &mut points);
                if sign[u] != sign[v] {
                    ends.push(id);
                    ends.push(point_id(edge_key(u, v), &mut points));
                }
            }
            _ => {
                for k in 0..3 {
                    let (u, v) = (t[k], t[(k + 1) % 3]);
                    if sign[u] != sign[v] {
                        ends.push(point_id(edge_key(u, v), &mut points));
                    }
                }
            }
        }
        if ends.len() == 2 && ends[0] != ends[1] {
            segs.insert((ends[0].min(ends[1]), ends[0].max(ends[1])));
        }
    }
    // zero vertices not reached by any triangle case above are isolated points
    for v in 0..mesh.vertex_count() {
        if sign[v] == 0 {
            point_id((v, v), &mut points);
        }
    }
    let segments: Vec<(usize, usize)> = segs.into_iter().collect();

    let np = points.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); np];
    for &(p, q) in &segments {
        adj[p].push(q);
        adj[q].push(p);
    }
    let mut dsu = Dsu((0..np).collect());
    for &(p, q) in &segments {
        dsu.union(p, q);
    }
    let mut comp_id: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..np {
        let root = dsu.find(i);
        let next = comp_id.len();
        let c = *comp_id.entry(root).or_insert(next);
        points[i].component = c;
        points[i].degree = adj[i].len();
    }
    let components = comp_id.len();
    let cycles = segments.len() + components - np;

    let mut node_of = vec![usize::MAX; np];
    let mut nodes: Vec<LevelNode> = Vec::new();
    let make_node = |i: usize, nodes: &mut Vec<LevelNode>, node_of: &mut Vec<usize>| {
        let p = &points[i];
        let kind = match p.boundary {
            Some(BoundaryArc::Lower) => NodeKind::LowerBoundary,
            Some(BoundaryArc::Upper) => NodeKind::UpperBoundary,
            None => NodeKind::Interior,
        };
        node_of[i] = nodes.len();
        nodes.push(LevelNode { point: i, pos: p.pos, kind, valence: p.degree, component: p.component });
    };
    for i in 0..np {
        if points[i].boundary.is_some() || points[i].degree != 2 {
            make_node(i, &mut nodes, &mut node_of);
        }
    }

    let mut used: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut edges: Vec<LevelEdge> = Vec::new();
    let trace = |start: usize, first: usize, node_of: &Vec<usize>, used: &mut BTreeSet<(usize, usize)>| -> LevelEdge {
        let mut path = vec![start, first];
        used.insert((start.min(first), start.max(first)));
        let (mut prev, mut cur) = (start, first);
        while node_of[cur] == usize::MAX {
            let next = if adj[cur][0] != prev { adj[cur][0] } else { adj[cur][1] };
            used.insert((cur.min(next), cur.max(next)));
            path.push(next);
            prev = cur;
            cur = next;
            if cur == start {
                break;
            }
        }
        LevelEdge {
            a: node_of[start],
            b: node_of[cur],
            polyline: path.iter().map(|&i| points[i].pos).collect(),
            points: path,
        }
    };
    for n in 0..nodes.len() {
        let start = nodes[n].point;
        for &q in &adj[start] {
            if !used.contains(&(start.min(q), start.max(q))) {
                edges.push(trace(start, q, &node_of, &mut used));
            }
        }
    }
    // closed loops without any node
    for i in 0..np {
        if node_of[i] == usize::MAX && adj[i].iter().any(|&q| !used.contains(&(i.min(q), i.max(q)))) {
            make_node(i, &mut nodes, &mut node_of);
            let q = adj[i][0];
            edges.push(trace(i, q, &node_of, &mut used));
        }
    }
    Ok(LevelGraph { level: a, points, segments, nodes, edges, components, cycles })
}

#[cfg(test)]
mod tests {
    use super::super::field::solve_harmonic;
    use super::super::mesh::DiscMesh;
    use super::*;
    use std::sync::Arc;

    #[test]
    fn diameter_of_re_z() {
        let mesh = Arc::new(DiscMesh::new(16, 32).unwrap());
        let f = solve_harmonic(mesh, |t| t.cos()).unwrap();
        let g = extract_level_graph(&f, 0.0).unwrap();
        assert_eq!(g.components, 1);
        assert_eq!(g.cycles, 0);
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.edges.len(), 1);
        let kinds: Vec<NodeKind> = g.nodes.iter().map(|n| n.kind).collect();
        assert!(kinds.contains(&NodeKind::LowerBoundary) && kinds.contains(&NodeKind::UpperBoundary));
    }

    #[test]
    fn cross_of_re_z2() {
        let mesh = Arc::new(DiscMesh::new(16, 32).unwrap());
        let f = solve_harmonic(mesh, |t| (2.0 * t).cos()).unwrap();
        let g = extract_level_graph(&f, 0.0).unwrap();
        assert_eq!(g.components, 1);
        assert_eq!(g.cycles, 0);
        let interior: Vec<&LevelNode> = g.nodes.iter().filter(|n| n.kind == NodeKind::Interior).collect();
        assert_eq!(interior.len(), 1);
        assert_eq!(interior[0].valence, 4);
        assert!(interior[0].pos[0].hypot(interior[0].pos[1]) < 1e-12);
        assert_eq!(g.nodes.len(), 5);
        assert_eq!(g.edges.len(), 4);
    }

    #[test]
    fn regular_level_off_mesh_values() {
        let mesh = Arc::new(DiscMesh::new(16, 32).unwrap());
        let f = solve_harmonic(mesh, |t| t.cos() + 0.3 * t.sin()).unwrap();
        let g = extract_level_graph(&f, 0.123).unwrap();
        assert_eq!((g.components, g.cycles, g.edges.len()), (1, 0, 1));
        let e = &g.edges[0];
        for p in &e.polyline {
            assert!((f.at(*p).unwrap() - 0.123).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_field_is_a_plateau() {
        let mesh = Arc::new(DiscMesh::new(4, 8).unwrap());
        let f = solve_harmonic(mesh, |_| 2.0).unwrap();
        assert!(matches!(extract_level_graph(&f, 2.0), Err(HarmError::Plateau { .. })));
        assert!(extract_level_graph(&f, 3.0).unwrap().is_empty());
    }
}
