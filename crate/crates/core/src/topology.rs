//! The 2-localized Delaunay graph, its planar faces, and radio holes.

use crate::geom::{convex_hull, convex_hull_indices, signed_area, Point, Polygon, EPS};
use crate::netgen::{NetworkInstance, TriangleClass, UnitGrid};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("general position violated near nodes {0:?}")]
    GeneralPosition(Vec<usize>),
    #[error("inconsistent half-edge structure: {0}")]
    Inconsistent(String),
    #[error("hole {0} is degenerate")]
    DegenerateHole(usize),
}

#[derive(Clone, Debug)]
pub struct Face {
    /// Half-edge ids in walk order.
    pub half_edges: Vec<usize>,
    /// Origin node of each half-edge.
    pub nodes: Vec<usize>,
    pub signed_area: f64,
}

/// Half-edge representation of a straight-line planar graph.
///
/// Interior faces are walked counterclockwise; the unbounded face clockwise.
#[derive(Clone, Debug)]
pub struct PlanarEmbedding {
    /// Neighbours of each node sorted counterclockwise by angle.
    pub rotation: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    origin: Vec<usize>,
    target: Vec<usize>,
    next: Vec<usize>,
    face_of: Vec<usize>,
    pub faces: Vec<Face>,
    pub outer_face: usize,
}

impl PlanarEmbedding {
    pub fn new(pos: &[Point], edges: &[(usize, usize)]) -> Result<Self, TopologyError> {
        let n = pos.len();
        let mut rotation = vec![Vec::new(); n];
        for &(u, v) in edges {
            rotation[u].push(v);
            rotation[v].push(u);
        }
        for (u, list) in rotation.iter_mut().enumerate() {
            let p = pos[u];
            list.sort_by(|&a, &b| {
                (pos[a] - p)
                    .angle()
                    .total_cmp(&(pos[b] - p).angle())
                    .then(a.cmp(&b))
            });
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut total = 0;
        for list in &rotation {
            offsets.push(total);
            total += list.len();
        }
        offsets.push(total);
        let mut origin = vec![0; total];
        let mut target = vec![0; total];
        for u in 0..n {
            for (k, &v) in rotation[u].iter().enumerate() {
                origin[offsets[u] + k] = u;
                target[offsets[u] + k] = v;
            }
        }
        let mut emb = Self {
            rotation,
            offsets,
            origin,
            target,
            next: vec![usize::MAX; total],
            face_of: vec![usize::MAX; total],
            faces: Vec::new(),
            outer_face: 0,
        };
        for h in 0..total {
            let (u, v) = (emb.origin[h], emb.target[h]);
            let rot = &emb.rotation[v];
            let j = rot
                .iter()
                .position(|&w| w == u)
                .ok_or_else(|| TopologyError::Inconsistent(format!("missing twin of {u}->{v}")))?;
            let w = rot[(j + rot.len() - 1) % rot.len()];
            emb.next[h] = emb.half_edge(v, w).expect("neighbour present");
        }
        for start in 0..total {
            if emb.face_of[start] != usize::MAX {
                continue;
            }
            let fid = emb.faces.len();
            let mut half_edges = Vec::new();
            let mut h = start;
            loop {
                if emb.face_of[h] != usize::MAX {
                    return Err(TopologyError::Inconsistent(format!(
                        "half-edge {h} reached twice"
                    )));
                }
                emb.face_of[h] = fid;
                half_edges.push(h);
                h = emb.next[h];
                if h == start {
                    break;
                }
            }
            let nodes: Vec<usize> = half_edges.iter().map(|&h| emb.origin[h]).collect();
            let ring: Vec<Point> = nodes.iter().map(|&u| pos[u]).collect();
            emb.faces.push(Face {
                half_edges,
                nodes,
                signed_area: signed_area(&ring),
            });
        }
        emb.outer_face = emb
            .faces
            .iter()
            .enumerate()
            .min_by(|a, b| {
                a.1.signed_area
                    .total_cmp(&b.1.signed_area)
                    .then(a.0.cmp(&b.0))
            })
            .map(|(i, _)| i)
            .unwrap_or(0);
        Ok(emb)
    }

    pub fn half_edge_count(&self) -> usize {
        self.origin.len()
    }

    pub fn half_edge(&self, u: usize, v: usize) -> Option<usize> {
        self.rotation[u]
            .iter()
            .position(|&w| w == v)
            .map(|k| self.offsets[u] + k)
    }

    pub fn origin(&self, h: usize) -> usize {
        self.origin[h]
    }

    pub fn target(&self, h: usize) -> usize {
        self.target[h]
    }

    /// Next half-edge along the face on the left of `h`.
    pub fn next(&self, h: usize) -> usize {
        self.next[h]
    }

    /// Half-edge preceding `h` on the same face.
    pub fn prev(&self, h: usize) -> usize {
        let (u, v) = (self.origin[h], self.target[h]);
        let rot = &self.rotation[u];
        let k = rot.iter().position(|&w| w == v).expect("edge in rotation");
        let w = rot[(k + 1) % rot.len()];
        self.half_edge(w, u).expect("twin exists")
    }

    pub fn twin(&self, h: usize) -> usize {
        self.half_edge(self.target[h], self.origin[h])
            .expect("twin exists")
    }

    /// Face lying to the left of `h`.
    pub fn face_of(&self, h: usize) -> usize {
        self.face_of[h]
    }

    /// Half-edge leaving `u` whose left face contains the ray from `u` in
    /// direction `dir`.
    pub fn half_edge_toward(&self, pos: &[Point], u: usize, dir: Point) -> Option<usize> {
        let rot = &self.rotation[u];
        if rot.is_empty() {
            return None;
        }
        let target = dir.angle();
        // The face left of u->a spans counterclockwise from a to the next neighbour.
        let angles: Vec<f64> = rot.iter().map(|&v| (pos[v] - pos[u]).angle()).collect();
        let k = rot.len();
        for i in 0..k {
            let a0 = angles[i];
            let a1 = angles[(i + 1) % k];
            let span = ccw_span(a0, a1, k == 1);
            let off = ccw_span(a0, target, false);
            if off < span || k == 1 {
                return Some(self.offsets[u] + i);
            }
        }
        Some(self.offsets[u] + k - 1)
    }

    pub fn vertex_count(&self) -> usize {
        self.rotation.len()
    }

    pub fn edge_count(&self) -> usize {
        self.origin.len() / 2
    }
}

/// Counterclockwise angle from `from` to `to` in `[0, 2pi)`; a full turn if
/// `full` and the angles coincide.
fn ccw_span(from: f64, to: f64, full: bool) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut d = (to - from) % tau;
    if d < 0.0 {
        d += tau;
    }
    if full && d == 0.0 {
        tau
    } else {
        d
    }
}

/// The 2-localized Delaunay graph of a network instance.
#[derive(Clone, Debug)]
pub struct LDelGraph {
    pub base: NetworkInstance,
    /// Undirected edges `(u, v)` with `u < v`, sorted.
    pub edges: Vec<(usize, usize)>,
    /// Accepted 2-localized triangles, vertex indices ascending.
    pub triangles: Vec<[usize; 3]>,
    pub embedding: PlanarEmbedding,
}

impl LDelGraph {
    pub fn pos(&self, u: usize) -> Point {
        self.base.nodes[u]
    }

    pub fn positions(&self) -> &[Point] {
        &self.base.nodes
    }

    pub fn node_count(&self) -> usize {
        self.base.nodes.len()
    }

    /// Neighbours in counterclockwise order.
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.embedding.rotation[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).is_ok()
    }

    pub fn faces(&self) -> &[Face] {
        &self.embedding.faces
    }
}

/// Triangles whose edges are unit-disk edges and whose open circumdisk holds
/// no node within two hops of any corner.
fn localized_triangles(net: &NetworkInstance) -> Result<Vec<[usize; 3]>, TopologyError> {
    let mut out = Vec::new();
    if net.is_empty() {
        return Ok(out);
    }
    let grid = UnitGrid::new(&net.nodes);
    let mut err = None;
    net.for_each_triangle(|u, v, w| {
        if err.is_some() {
            return;
        }
        match net.classify_triangle(&grid, u, v, w) {
            TriangleClass::Empty => out.push([u, v, w]),
            TriangleClass::Blocked => {}
            TriangleClass::Degenerate(nodes) => err = Some(TopologyError::GeneralPosition(nodes)),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Unit-disk edges whose diametral disk holds no other node.
fn gabriel_edges(net: &NetworkInstance) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for u in 0..net.len() {
        for &v in &net.adjacency[u] {
            if v < u {
                continue;
            }
            let m = net.nodes[u].lerp(net.nodes[v], 0.5);
            let r = net.nodes[u].dist(net.nodes[v]) / 2.0;
            let blocked = net.adjacency[u]
                .iter()
                .any(|&x| x != v && net.nodes[x].dist(m) < r - EPS);
            if !blocked {
                out.push((u, v));
            }
        }
    }
    out
}

/// Builds the 2-localized Delaunay graph: edges of all 2-localized triangles
/// plus all Gabriel edges.
pub fn build_ldel2(net: &NetworkInstance) -> Result<LDelGraph, TopologyError> {
    let triangles = localized_triangles(net)?;
    let mut set: BTreeSet<(usize, usize)> = gabriel_edges(net).into_iter().collect();
    for t in &triangles {
        set.insert((t[0], t[1]));
        set.insert((t[0], t[2]));
        set.insert((t[1], t[2]));
    }
    let edges: Vec<(usize, usize)> = set.into_iter().collect();
    let embedding = PlanarEmbedding::new(&net.nodes, &edges)?;
    Ok(LDelGraph {
        base: net.clone(),
        edges,
        triangles,
        embedding,
    })
}

/// Face cycles of the graph; checks Euler's formula for connected plane graphs.
pub fn enumerate_faces(g: &LDelGraph) -> Result<Vec<Vec<usize>>, TopologyError> {
    let emb = &g.embedding;
    let v = emb.vertex_count() as i64;
    let e = emb.edge_count() as i64;
    let f = emb.faces.len() as i64;
    if v - e + f != 2 {
        return Err(TopologyError::Inconsistent(format!(
            "Euler check failed: V={v} E={e} F={f}"
        )));
    }
    Ok(emb.faces.iter().map(|face| face.nodes.clone()).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HoleKind {
    Inner,
    Outer,
}

/// A radio hole: its perimeter nodes in walk order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    pub id: usize,
    pub cycle: Vec<usize>,
    pub kind: HoleKind,
    pub perimeter_length: f64,
}

impl Hole {
    pub fn polygon(&self, pos: &[Point]) -> Result<Polygon, TopologyError> {
        Polygon::new(self.cycle.iter().map(|&u| pos[u]).collect())
            .map_err(|_| TopologyError::DegenerateHole(self.id))
    }

    pub fn positions(&self, pos: &[Point]) -> Vec<Point> {
        self.cycle.iter().map(|&u| pos[u]).collect()
    }
}

/// All holes of a graph and the reverse map from nodes to hole ids.
#[derive(Clone, Debug, Default)]
pub struct HoleSet {
    pub holes: Vec<Hole>,
    pub node_holes: Vec<Vec<usize>>,
}

/// Splits a closed walk at repeated nodes into simple closed sub-walks.
/// Spikes (`a b a`) come out as two-node pieces.
fn split_simple_cycles(walk: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    for &u in walk {
        if let Some(i) = stack.iter().position(|&x| x == u) {
            out.push(stack.split_off(i));
        }
        stack.push(u);
    }
    if !stack.is_empty() {
        out.push(stack);
    }
    out
}

/// Simple counterclockwise lobes of a face walk with at least `min_nodes` nodes.
/// Clockwise pieces bound islands hanging into the face and are dropped.
fn face_lobes(walk: &[usize], pos: &[Point], min_nodes: usize) -> Vec<Vec<usize>> {
    split_simple_cycles(walk)
        .into_iter()
        .filter(|c| c.len() >= min_nodes)
        .filter(|c| {
            let ring: Vec<Point> = c.iter().map(|&u| pos[u]).collect();
            signed_area(&ring) > 0.0
        })
        .collect()
}

fn cycle_length(cycle: &[usize], pos: &[Point]) -> f64 {
    let n = cycle.len();
    (0..n)
        .map(|i| pos[cycle[i]].dist(pos[cycle[(i + 1) % n]]))
        .sum()
}

/// Inner holes are bounded faces with at least four nodes; outer holes are
/// the faces between the graph and its convex hull that contain a hull edge
/// longer than one.
pub fn detect_holes(g: &LDelGraph) -> HoleSet {
    let pos = g.positions();
    let emb = &g.embedding;
    let mut holes = Vec::new();
    for (fid, face) in emb.faces.iter().enumerate() {
        if fid == emb.outer_face {
            continue;
        }
        if face.nodes.len() < 4 {
            continue;
        }
        for cycle in face_lobes(&face.nodes, pos, 4) {
            holes.push(Hole {
                id: holes.len(),
                perimeter_length: cycle_length(&cycle, pos),
                cycle,
                kind: HoleKind::Inner,
            });
        }
    }

    let hull = convex_hull_indices(pos);
    if hull.len() >= 3 {
        let mut long_new = Vec::new();
        let mut augmented: BTreeSet<(usize, usize)> = g.edges.iter().copied().collect();
        for i in 0..hull.len() {
            let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
            let key = (a.min(b), a.max(b));
            if !augmented.contains(&key) {
                augmented.insert(key);
                if pos[a].dist(pos[b]) > 1.0 {
                    long_new.push((a, b));
                }
            }
        }
        if !long_new.is_empty() {
            let edges: Vec<(usize, usize)> = augmented.into_iter().collect();
            if let Ok(aug) = PlanarEmbedding::new(pos, &edges) {
                let mut seen = BTreeSet::new();
                for (a, b) in long_new {
                    let h = aug.half_edge(a, b).expect("hull edge present");
                    let f = aug.face_of(h);
                    if f == aug.outer_face || !seen.insert(f) {
                        continue;
                    }
                    for mut cycle in face_lobes(&aug.faces[f].nodes, pos, 3) {
                        let has_gap = cycle.windows(2).any(|w| (w[0], w[1]) == (a, b))
                            || (cycle[cycle.len() - 1], cycle[0]) == (a, b);
                        if !has_gap && cycle.len() < 4 {
                            continue;
                        }
                        cycle.reverse();
                        holes.push(Hole {
                            id: holes.len(),
                            perimeter_length: cycle_length(&cycle, pos),
                            cycle,
                            kind: HoleKind::Outer,
                        });
                    }
                }
            }
        }
    }

    let mut node_holes = vec![Vec::new(); pos.len()];
    for h in &holes {
        for &u in &h.cycle {
            if node_holes[u].last() != Some(&h.id) {
                node_holes[u].push(h.id);
            }
        }
    }
    for list in &mut node_holes {
        list.sort_unstable();
        list.dedup();
    }
    HoleSet { holes, node_holes }
}

/// Convex hull of the hole's perimeter nodes.
pub fn hole_convex_hull(h: &Hole, net: &NetworkInstance) -> Result<Polygon, TopologyError> {
    let pts = h.positions(&net.nodes);
    convex_hull(&pts).map_err(|_| TopologyError::DegenerateHole(h.id))
}

/// Line-based dump: `edge u v`, `face i n0 n1 ...`, `hole id kind perimeter n0 n1 ...`.
pub fn debug_dump(g: &LDelGraph, holes: &HoleSet) -> String {
    let mut s = String::new();
    for &(u, v) in &g.edges {
        let _ = writeln!(s, "edge {u} {v}");
    }
    for (i, f) in g.faces().iter().enumerate() {
        let _ = write!(s, "face {i}");
        for u in &f.nodes {
            let _ = write!(s, " {u}");
        }
        s.push('\n');
    }
    for h in &holes.holes {
        let kind = match h.kind {
            HoleKind::Inner => "inner",
            HoleKind::Outer => "outer",
        };
        let _ = write!(s, "hole {} {} {:.16e}", h.id, kind, h.perimeter_length);
        for u in &h.cycle {
            let _ = write!(s, " {u}");
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn walks_split_into_simple_pieces() {
        assert_eq!(
            split_simple_cycles(&[0, 1, 2, 3, 2, 4]),
            vec![vec![2, 3], vec![0, 1, 2, 4]]
        );
        assert_eq!(split_simple_cycles(&[0, 1, 2, 3]), vec![vec![0, 1, 2, 3]]);
        assert_eq!(
            split_simple_cycles(&[0, 1, 2, 0, 3, 4]),
            vec![vec![0, 1, 2], vec![0, 3, 4]]
        );
    }

    #[test]
    fn ray_selects_face_between_neighbours() {
        let pos = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(-1.0, -0.2),
        ];
        let edges = vec![(0, 1), (0, 2), (0, 3), (1, 2)];
        let emb = PlanarEmbedding::new(&pos, &edges).unwrap();
        let h = emb.half_edge_toward(&pos, 0, Point::new(1.0, 1.0)).unwrap();
        assert_eq!(emb.target(h), 1);
        let h = emb
            .half_edge_toward(&pos, 0, Point::new(-1.0, 1.0))
            .unwrap();
        assert_eq!(emb.target(h), 2);
    }
}
