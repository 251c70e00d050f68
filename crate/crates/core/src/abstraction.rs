//! Bounding boxes of holes and the visibility graphs built on their corners.
//!
//! Overlapping boxes are merged into intersection components. Corners buried
//! inside a component are dropped, and the points where box edges cross on
//! the component's outline are joined by a weighted clique.

use crate::geom::{
    convex_hull, nearest_node, segment_enters_polygon, segment_intersects_rect, CornerRole,
    GeomError, Point, Polygon, Rect, Segment, EPS,
};
use crate::netgen::{fmt_f64, NetworkInstance};
use crate::topology::Hole;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;
use thiserror::Error;

/// Radius of the compass probes that decide whether a point lies on the
/// outline of a union of boxes.
const PROBE_RADIUS: f64 = 10.0 * EPS;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AbstractionError {
    #[error("hole {0} needs at least 3 nodes")]
    TooSmall(usize),
    #[error("bounding boxes {0} and {1} overlap; use the modified visibility graph")]
    Overlapping(usize, usize),
    #[error("sqrt2 weights need two-box components, component {component} has {size} boxes")]
    ComponentTooLarge { component: usize, size: usize },
    #[error("weight factor must be positive, got {0}")]
    InvalidAlpha(f64),
    #[error("no path between the query points")]
    Disconnected,
    #[error("no monotone step from ({}, {})", .0.x, .0.y)]
    NoMonotoneStep(Point),
    #[error("scene parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Per-hole summary: box, corners, representatives and hulls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoleAbstraction {
    pub hole_id: usize,
    pub bbox: Rect,
    /// Box corners in [`CornerRole::ALL`] order.
    pub corners: [Point; 4],
    /// Node nearest to each corner, same order.
    pub representatives: [usize; 4],
    /// Nodes attaining min x, max x, min y, max y.
    pub extreme_nodes: [usize; 4],
    pub hull: Polygon,
    /// The hole perimeter itself.
    pub polygon: Polygon,
}

impl HoleAbstraction {
    /// Abstraction of a free-standing obstacle polygon. Its own vertices play
    /// the role of network nodes, so representatives and extreme nodes index
    /// into `polygon.vertices()`.
    pub fn from_polygon(hole_id: usize, polygon: Polygon) -> Result<Self, AbstractionError> {
        let pts = polygon.vertices().to_vec();
        let bbox = Rect::bounding(pts.iter().copied())?;
        let corners = bbox.corners();
        let representatives = corners.map(|c| nearest_node(c, &pts).expect("non-empty"));
        Ok(Self {
            hole_id,
            bbox,
            corners,
            representatives,
            extreme_nodes: extreme_indices(&pts),
            hull: convex_hull(&pts)?,
            polygon,
        })
    }

    pub fn corner(&self, role: CornerRole) -> Point {
        self.corners[role.index()]
    }
}

fn extreme_indices(pts: &[Point]) -> [usize; 4] {
    let pick = |key: &dyn Fn(Point) -> f64, max: bool| {
        let mut best = 0;
        for (i, p) in pts.iter().enumerate() {
            let better = if max {
                key(*p) > key(pts[best])
            } else {
                key(*p) < key(pts[best])
            };
            if better {
                best = i;
            }
        }
        best
    };
    [
        pick(&|p| p.x, false),
        pick(&|p| p.x, true),
        pick(&|p| p.y, false),
        pick(&|p| p.y, true),
    ]
}

/// Box, corners, nearest-node representatives, extreme nodes and hulls of a hole.
pub fn compute_abstraction(
    hole: &Hole,
    net: &NetworkInstance,
) -> Result<HoleAbstraction, AbstractionError> {
    if hole.cycle.len() < 3 {
        return Err(AbstractionError::TooSmall(hole.id));
    }
    let pts = hole.positions(&net.nodes);
    let bbox = Rect::bounding(pts.iter().copied())?;
    let corners = bbox.corners();
    let mut representatives = [0; 4];
    for (r, c) in representatives.iter_mut().zip(corners) {
        *r = nearest_node(c, &net.nodes)?;
    }
    let extreme_nodes = extreme_indices(&pts).map(|i| hole.cycle[i]);
    Ok(HoleAbstraction {
        hole_id: hole.id,
        bbox,
        corners,
        representatives,
        extreme_nodes,
        hull: convex_hull(&pts)?,
        polygon: Polygon::new(pts)?,
    })
}

/// How clique edges between outer intersection points are weighted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum WeightMode {
    /// Length of the shortest hole-avoiding path inside the component.
    Exact,
    /// `sqrt(2) * |o1 o2|`; two-box components only.
    Sqrt2,
    /// `alpha * |o1 o2|^2`.
    Quadratic(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VertexKind {
    Corner {
        obstacle: usize,
        role: CornerRole,
    },
    Outer {
        component: usize,
        boxes: (usize, usize),
    },
    Source,
    Target,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vertex {
    pub pos: Point,
    pub kind: VertexKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    /// Straight segment that enters no box (box edges included).
    Visibility,
    /// Edge between two outer intersection points of one component.
    Clique { component: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub to: usize,
    pub weight: f64,
    pub kind: EdgeKind,
}

/// Buckets rectangles into a coarse grid for segment queries.
#[derive(Clone, Debug)]
pub struct RectIndex {
    rects: Vec<Rect>,
    origin: Point,
    cell: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<usize>>,
}

impl RectIndex {
    pub fn new(rects: Vec<Rect>) -> Self {
        let cell = 2.0;
        if rects.is_empty() {
            return Self {
                rects,
                origin: Point::default(),
                cell,
                cols: 1,
                rows: 1,
                buckets: vec![Vec::new()],
            };
        }
        let min_x = rects.iter().map(|r| r.min_x).fold(f64::INFINITY, f64::min);
        let min_y = rects.iter().map(|r| r.min_y).fold(f64::INFINITY, f64::min);
        let max_x = rects
            .iter()
            .map(|r| r.max_x)
            .fold(f64::NEG_INFINITY, f64::max);
        let max_y = rects
            .iter()
            .map(|r| r.max_y)
            .fold(f64::NEG_INFINITY, f64::max);
        // Keep the grid small for scenes with huge boxes.
        let cell = cell.max((max_x - min_x).max(max_y - min_y) / 256.0);
        let cols = ((max_x - min_x) / cell).floor() as usize + 1;
        let rows = ((max_y - min_y) / cell).floor() as usize + 1;
        let mut idx = Self {
            rects,
            origin: Point::new(min_x, min_y),
            cell,
            cols,
            rows,
            buckets: vec![Vec::new(); cols * rows],
        };
        for (i, r) in idx.rects.iter().enumerate() {
            let (x0, y0) = idx.cell_of(Point::new(r.min_x, r.min_y));
            let (x1, y1) = idx.cell_of(Point::new(r.max_x, r.max_y));
            for y in y0..=y1 {
                for x in x0..=x1 {
                    idx.buckets[y * cols + x].push(i);
                }
            }
        }
        idx
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let f =
            |v: f64, o: f64, n: usize| (((v - o) / self.cell).floor().max(0.0) as usize).min(n - 1);
        (
            f(p.x, self.origin.x, self.cols),
            f(p.y, self.origin.y, self.rows),
        )
    }

    /// True iff the segment `a b` passes through the interior of some rect.
    pub fn blocked(&self, a: Point, b: Point) -> bool {
        let Ok(seg) = Segment::new(a, b) else {
            return self.rects.iter().any(|r| r.contains_strict(a));
        };
        // Walk the segment in pieces no longer than half a cell and test the
        // rects bucketed under each piece's bounding box.
        let pieces = ((seg.length() / (0.5 * self.cell)).ceil() as usize).max(1);
        for k in 0..pieces {
            let p = seg.at(k as f64 / pieces as f64);
            let q = seg.at((k + 1) as f64 / pieces as f64);
            let (x0, y0) = self.cell_of(Point::new(p.x.min(q.x) - EPS, p.y.min(q.y) - EPS));
            let (x1, y1) = self.cell_of(Point::new(p.x.max(q.x) + EPS, p.y.max(q.y) + EPS));
            for y in y0..=y1 {
                for x in x0..=x1 {
                    if self.buckets[y * self.cols + x]
                        .iter()
                        .any(|&i| segment_intersects_rect(&seg, &self.rects[i]))
                    {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Bounding-box visibility graph, plain or modified.
#[derive(Clone, Debug)]
pub struct BoxGraph {
    pub vertices: Vec<Vertex>,
    pub adjacency: Vec<Vec<Edge>>,
    /// Obstacle polygons and boxes, indexed like the input abstractions.
    pub polygons: Vec<Polygon>,
    pub index: RectIndex,
    /// Obstacle indices per intersection component (singletons included).
    pub components: Vec<Vec<usize>>,
    pub component_of: Vec<usize>,
    /// Vertex ids of the outer intersection points of each component.
    pub outer_points: Vec<Vec<usize>>,
    pub mode: Option<WeightMode>,
}

impl BoxGraph {
    pub fn rects(&self) -> &[Rect] {
        self.index.rects()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Visibility edge or cheapest parallel edge between two vertices.
    pub fn edge(&self, u: usize, v: usize) -> Option<Edge> {
        self.adjacency[u]
            .iter()
            .filter(|e| e.to == v)
            .min_by(|a, b| a.weight.total_cmp(&b.weight))
            .copied()
    }

    /// Kept vertices whose corner or outer point belongs to `component`.
    pub fn component_vertices(&self, component: usize) -> Vec<usize> {
        self.vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| match v.kind {
                VertexKind::Corner { obstacle, .. } => self.component_of[obstacle] == component,
                VertexKind::Outer { component: c, .. } => c == component,
                _ => false,
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// Overlay with source and target vertices and their visibility edges.
    pub fn with_query(&self, s: Point, t: Point) -> QueryView<'_> {
        let n = self.vertices.len();
        let (si, ti) = (n, n + 1);
        let mut extra = Vec::new();
        for (i, v) in self.vertices.iter().enumerate() {
            for (q, qi) in [(s, si), (t, ti)] {
                if !self.index.blocked(q, v.pos) {
                    extra.push((qi, i, q.dist(v.pos)));
                }
            }
        }
        if !self.index.blocked(s, t) {
            extra.push((si, ti, s.dist(t)));
        }
        QueryView {
            base: self,
            s,
            t,
            extra,
        }
    }
}

/// A [`BoxGraph`] plus private source and target vertices.
#[derive(Clone, Debug)]
pub struct QueryView<'a> {
    pub base: &'a BoxGraph,
    pub s: Point,
    pub t: Point,
    /// Edges incident to the query vertices: `(query id, other id, weight)`.
    extra: Vec<(usize, usize, f64)>,
}

impl QueryView<'_> {
    pub fn source(&self) -> usize {
        self.base.vertices.len()
    }

    pub fn target(&self) -> usize {
        self.base.vertices.len() + 1
    }

    pub fn vertex_count(&self) -> usize {
        self.base.vertices.len() + 2
    }

    pub fn pos(&self, v: usize) -> Point {
        let n = self.base.vertices.len();
        match v.cmp(&n) {
            Ordering::Less => self.base.vertices[v].pos,
            Ordering::Equal => self.s,
            Ordering::Greater => self.t,
        }
    }

    pub fn kind(&self, v: usize) -> VertexKind {
        let n = self.base.vertices.len();
        match v.cmp(&n) {
            Ordering::Less => self.base.vertices[v].kind,
            Ordering::Equal => VertexKind::Source,
            Ordering::Greater => VertexKind::Target,
        }
    }

    fn for_each_edge(&self, u: usize, mut f: impl FnMut(Edge)) {
        if u < self.base.vertices.len() {
            self.base.adjacency[u].iter().copied().for_each(&mut f);
        }
        for &(q, o, w) in &self.extra {
            let kind = EdgeKind::Visibility;
            if q == u {
                f(Edge {
                    to: o,
                    weight: w,
                    kind,
                });
            } else if o == u {
                f(Edge {
                    to: q,
                    weight: w,
                    kind,
                });
            }
        }
    }

    /// Cheapest edge between two vertices of the view.
    pub fn edge(&self, u: usize, v: usize) -> Option<Edge> {
        let mut best: Option<Edge> = None;
        self.for_each_edge(u, |e| {
            if e.to == v && best.is_none_or(|b| e.weight < b.weight) {
                best = Some(e);
            }
        });
        best
    }
}

/// Connected components of the positive-area overlap relation.
pub fn intersection_components(abstractions: &[HoleAbstraction]) -> Vec<Vec<usize>> {
    let rects: Vec<Rect> = abstractions.iter().map(|a| a.bbox).collect();
    rect_components(&rects)
}

fn rect_components(rects: &[Rect]) -> Vec<Vec<usize>> {
    let n = rects.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| rects[a].min_x.total_cmp(&rects[b].min_x));
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if rects[j].min_x > rects[i].max_x {
                break;
            }
            if rects[i].overlaps(&rects[j]) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

const PROBES: [(f64, f64); 8] = [
    (1.0, 0.0),
    (
        std::f64::consts::FRAC_1_SQRT_2,
        std::f64::consts::FRAC_1_SQRT_2,
    ),
    (0.0, 1.0),
    (
        -std::f64::consts::FRAC_1_SQRT_2,
        std::f64::consts::FRAC_1_SQRT_2,
    ),
    (-1.0, 0.0),
    (
        -std::f64::consts::FRAC_1_SQRT_2,
        -std::f64::consts::FRAC_1_SQRT_2,
    ),
    (0.0, -1.0),
    (
        std::f64::consts::FRAC_1_SQRT_2,
        -std::f64::consts::FRAC_1_SQRT_2,
    ),
];

/// Some compass probe around `p` lies outside every closed rect.
fn on_outline(p: Point, rects: &[&Rect]) -> bool {
    PROBES.iter().any(|&(dx, dy)| {
        let q = p + Point::new(dx, dy) * PROBE_RADIUS;
        !rects.iter().any(|r| r.contains_closed(q))
    })
}

/// Proper crossings between edges of different boxes that lie on the outline
/// of the boxes' union, with the indices of the two boxes involved.
pub fn outer_intersection_points(rects: &[Rect]) -> Vec<(Point, (usize, usize))> {
    let all: Vec<&Rect> = rects.iter().collect();
    let mut out = Vec::new();
    for i in 0..rects.len() {
        for j in (i + 1)..rects.len() {
            if !rects[i].overlaps(&rects[j]) {
                continue;
            }
            for ei in rects[i].edges() {
                for ej in rects[j].edges() {
                    if let crate::geom::Intersection::Crossing(p) =
                        crate::geom::segments_intersect(&ei, &ej)
                    {
                        if on_outline(p, &all) {
                            out.push((p, (i, j)));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Plain visibility graph on box corners; boxes must not overlap.
pub fn build_bbvg(abstractions: &[HoleAbstraction]) -> Result<BoxGraph, AbstractionError> {
    let rects: Vec<Rect> = abstractions.iter().map(|a| a.bbox).collect();
    for comp in rect_components(&rects) {
        if comp.len() > 1 {
            let (a, b) = first_overlap(&rects, &comp);
            return Err(AbstractionError::Overlapping(a, b));
        }
    }
    build(abstractions, None)
}

fn first_overlap(rects: &[Rect], comp: &[usize]) -> (usize, usize) {
    for (k, &i) in comp.iter().enumerate() {
        for &j in &comp[k + 1..] {
            if rects[i].overlaps(&rects[j]) {
                return (i.min(j), i.max(j));
            }
        }
    }
    unreachable!("component with several boxes has an overlapping pair")
}

/// Visibility graph with buried corners removed and weighted cliques on
/// the outer intersection points of every component.
pub fn build_modified_bbvg(
    abstractions: &[HoleAbstraction],
    mode: WeightMode,
) -> Result<BoxGraph, AbstractionError> {
    if let WeightMode::Quadratic(alpha) = mode {
        if !(alpha > 0.0) {
            return Err(AbstractionError::InvalidAlpha(alpha));
        }
    }
    build(abstractions, Some(mode))
}

fn build(
    abstractions: &[HoleAbstraction],
    mode: Option<WeightMode>,
) -> Result<BoxGraph, AbstractionError> {
    let rects: Vec<Rect> = abstractions.iter().map(|a| a.bbox).collect();
    let components = rect_components(&rects);
    let mut component_of = vec![0; rects.len()];
    for (c, comp) in components.iter().enumerate() {
        for &i in comp {
            component_of[i] = c;
        }
    }
    if mode == Some(WeightMode::Sqrt2) {
        if let Some((c, comp)) = components.iter().enumerate().find(|(_, c)| c.len() > 2) {
            return Err(AbstractionError::ComponentTooLarge {
                component: c,
                size: comp.len(),
            });
        }
    }

    let mut vertices = Vec::new();
    let mut outer_points = vec![Vec::new(); components.len()];
    for (c, comp) in components.iter().enumerate() {
        let comp_rects: Vec<&Rect> = comp.iter().map(|&i| &rects[i]).collect();
        for &i in comp {
            for role in CornerRole::ALL {
                let pos = rects[i].corner(role);
                if comp.len() == 1 || on_outline(pos, &comp_rects) {
                    vertices.push(Vertex {
                        pos,
                        kind: VertexKind::Corner { obstacle: i, role },
                    });
                }
            }
        }
        if comp.len() > 1 {
            let local: Vec<Rect> = comp.iter().map(|&i| rects[i]).collect();
            for (pos, (a, b)) in outer_intersection_points(&local) {
                outer_points[c].push(vertices.len());
                vertices.push(Vertex {
                    pos,
                    kind: VertexKind::Outer {
                        component: c,
                        boxes: (comp[a], comp[b]),
                    },
                });
            }
        }
    }

    let index = RectIndex::new(rects.clone());
    let mut adjacency = vec![Vec::new(); vertices.len()];
    for i in 0..vertices.len() {
        for j in (i + 1)..vertices.len() {
            let (a, b) = (vertices[i].pos, vertices[j].pos);
            if !index.blocked(a, b) {
                let w = a.dist(b);
                adjacency[i].push(Edge {
                    to: j,
                    weight: w,
                    kind: EdgeKind::Visibility,
                });
                adjacency[j].push(Edge {
                    to: i,
                    weight: w,
                    kind: EdgeKind::Visibility,
                });
            }
        }
    }

    let polygons: Vec<Polygon> = abstractions.iter().map(|a| a.polygon.clone()).collect();
    if let Some(mode) = mode {
        for (c, pts) in outer_points.iter().enumerate() {
            let comp_rects: Vec<Rect> = components[c].iter().map(|&i| rects[i]).collect();
            let comp_polys: Vec<&Polygon> = components[c].iter().map(|&i| &polygons[i]).collect();
            for (k, &i) in pts.iter().enumerate() {
                for &j in &pts[k + 1..] {
                    let (a, b) = (vertices[i].pos, vertices[j].pos);
                    let weight = match mode {
                        WeightMode::Sqrt2 => std::f64::consts::SQRT_2 * a.dist(b),
                        WeightMode::Quadratic(alpha) => alpha * a.dist_sq(b),
                        WeightMode::Exact => {
                            let extra: Vec<Point> = pts.iter().map(|&v| vertices[v].pos).collect();
                            match shortest_path_in_region(&comp_polys, &comp_rects, &extra, a, b) {
                                Some((len, _)) => len,
                                None => continue,
                            }
                        }
                    };
                    let kind = EdgeKind::Clique { component: c };
                    adjacency[i].push(Edge {
                        to: j,
                        weight,
                        kind,
                    });
                    adjacency[j].push(Edge {
                        to: i,
                        weight,
                        kind,
                    });
                }
            }
        }
    }

    Ok(BoxGraph {
        vertices,
        adjacency,
        polygons,
        index,
        components,
        component_of,
        outer_points,
        mode,
    })
}

/// True iff every point of `a b` lies in the closed union of `rects`.
fn segment_inside_union(a: Point, b: Point, rects: &[Rect]) -> bool {
    let Ok(seg) = Segment::new(a, b) else {
        return rects.iter().any(|r| r.contains_closed(a));
    };
    let mut ts = vec![0.0, 1.0];
    for r in rects {
        if let Some((t0, t1)) = r.clip(&seg) {
            ts.push(t0.clamp(0.0, 1.0));
            ts.push(t1.clamp(0.0, 1.0));
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let len = seg.length();
    std::iter::once(0.0)
        .chain(
            ts.windows(2)
                .filter(|w| (w[1] - w[0]) * len > EPS)
                .map(|w| 0.5 * (w[0] + w[1])),
        )
        .chain(std::iter::once(1.0))
        .all(|t| {
            let p = seg.at(t);
            rects.iter().any(|r| r.contains_closed(p))
        })
}

fn segment_clear(a: Point, b: Point, polygons: &[&Polygon]) -> bool {
    match Segment::new(a, b) {
        Ok(seg) => !polygons
            .iter()
            .any(|poly| segment_enters_polygon(&seg, poly)),
        Err(_) => true,
    }
}

/// Shortest path from `a` to `b` that stays inside the closed union of
/// `region` and enters none of `polygons`. Bends may occur at polygon
/// vertices and at the `extra` points.
pub fn shortest_path_in_region(
    polygons: &[&Polygon],
    region: &[Rect],
    extra: &[Point],
    a: Point,
    b: Point,
) -> Option<(f64, Vec<Point>)> {
    let mut pts = vec![a, b];
    pts.extend(extra.iter().copied());
    for poly in polygons {
        pts.extend(poly.vertices().iter().copied());
    }
    pts.retain({
        let mut seen: Vec<Point> = Vec::new();
        move |p| {
            if seen.iter().any(|q| q.approx_eq(*p)) {
                false
            } else {
                seen.push(*p);
                true
            }
        }
    });
    let pts: Vec<Point> = pts
        .into_iter()
        .filter(|p| region.iter().any(|r| r.contains_closed(*p)))
        .collect();
    dijkstra_points(&pts, 0, 1, |p, q| {
        segment_inside_union(p, q, region) && segment_clear(p, q, polygons)
    })
}

/// Shortest hole-avoiding path among free-standing polygons (no region limit).
pub fn shortest_path_among_polygons(
    polygons: &[&Polygon],
    a: Point,
    b: Point,
) -> Option<(f64, Vec<Point>)> {
    let mut pts = vec![a, b];
    for poly in polygons {
        pts.extend(poly.vertices().iter().copied());
    }
    dijkstra_points(&pts, 0, 1, |p, q| segment_clear(p, q, polygons))
}

/// Dijkstra on the complete graph over `pts` with edges filtered by `valid`,
/// evaluated lazily.
fn dijkstra_points(
    pts: &[Point],
    src: usize,
    dst: usize,
    valid: impl Fn(Point, Point) -> bool,
) -> Option<(f64, Vec<Point>)> {
    if pts.len() <= dst.max(src) {
        return None;
    }
    let n = pts.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut done = vec![false; n];
    dist[src] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem(0.0, src));
    while let Some(HeapItem(d, u)) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == dst {
            break;
        }
        for v in 0..n {
            if done[v] || v == u {
                continue;
            }
            let nd = d + pts[u].dist(pts[v]);
            if nd < dist[v] && valid(pts[u], pts[v]) {
                dist[v] = nd;
                prev[v] = u;
                heap.push(HeapItem(nd, v));
            }
        }
    }
    if !dist[dst].is_finite() {
        return None;
    }
    let mut path = vec![pts[dst]];
    let mut v = dst;
    while v != src {
        v = prev[v];
        path.push(pts[v]);
    }
    path.reverse();
    Some((dist[dst], path))
}

/// Min-heap entry ordered by distance, then vertex id.
#[derive(Clone, Copy, Debug, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// A path through an abstraction graph.
#[derive(Clone, Debug, PartialEq)]
pub struct VgPath {
    pub vertices: Vec<usize>,
    pub points: Vec<Point>,
    /// Kind of the edge entering each vertex after the first.
    pub edge_kinds: Vec<EdgeKind>,
    /// Sum of edge weights.
    pub length: f64,
}

/// Dijkstra between the query vertices; ties go to the smaller vertex id.
pub fn shortest_path_vg(view: &QueryView<'_>) -> Result<VgPath, AbstractionError> {
    shortest_path_from(view, view.source())
}

/// Dijkstra from any vertex of the view to its target.
pub fn shortest_path_from(view: &QueryView<'_>, src: usize) -> Result<VgPath, AbstractionError> {
    let n = view.vertex_count();
    let dst = view.target();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev: Vec<Option<(usize, EdgeKind)>> = vec![None; n];
    let mut done = vec![false; n];
    dist[src] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem(0.0, src));
    while let Some(HeapItem(d, u)) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == dst {
            break;
        }
        view.for_each_edge(u, |e| {
            let nd = d + e.weight;
            if !done[e.to] && nd < dist[e.to] {
                dist[e.to] = nd;
                prev[e.to] = Some((u, e.kind));
                heap.push(HeapItem(nd, e.to));
            }
        });
    }
    if !dist[dst].is_finite() {
        return Err(AbstractionError::Disconnected);
    }
    let mut vertices = vec![dst];
    let mut edge_kinds = Vec::new();
    let mut v = dst;
    while let Some((u, k)) = prev[v] {
        edge_kinds.push(k);
        vertices.push(u);
        v = u;
    }
    vertices.reverse();
    edge_kinds.reverse();
    Ok(VgPath {
        points: vertices.iter().map(|&v| view.pos(v)).collect(),
        vertices,
        edge_kinds,
        length: dist[dst],
    })
}

/// Greedy monotone walk over box corners from `from` to `to`: each step goes
/// to a visible corner that keeps both coordinates monotone in the direction
/// of `reference` and is closest to it.
pub fn grevio_path(
    graph: &BoxGraph,
    from: Point,
    to: Point,
    reference: &Segment,
) -> Result<Vec<Point>, AbstractionError> {
    let dir = reference.b - reference.a;
    let sx = if dir.x >= 0.0 { 1.0 } else { -1.0 };
    let sy = if dir.y >= 0.0 { 1.0 } else { -1.0 };
    let monotone = |c: Point, v: Point| {
        (v.x - c.x) * sx >= -EPS
            && (v.y - c.y) * sy >= -EPS
            && (to.x - v.x) * sx >= -EPS
            && (to.y - v.y) * sy >= -EPS
    };
    let mut path = vec![from];
    let mut cur = from;
    for _ in 0..=graph.vertices.len() {
        if !graph.index.blocked(cur, to) {
            if !cur.approx_eq(to) {
                path.push(to);
            }
            return Ok(path);
        }
        let next = graph
            .vertices
            .iter()
            .map(|v| v.pos)
            .filter(|&v| v.dist(cur) > EPS && monotone(cur, v) && !graph.index.blocked(cur, v))
            .min_by(|&a, &b| {
                reference
                    .distance_to(a)
                    .total_cmp(&reference.distance_to(b))
                    .then(a.dist(cur).total_cmp(&b.dist(cur)))
            });
        match next {
            Some(v) => {
                path.push(v);
                cur = v;
            }
            None => return Err(AbstractionError::NoMonotoneStep(cur)),
        }
    }
    Err(AbstractionError::NoMonotoneStep(cur))
}

/// Obstacle polygons with optional query points, for golden tests.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scene {
    pub holes: Vec<Polygon>,
    pub source: Option<Point>,
    pub target: Option<Point>,
}

impl Scene {
    /// Lines: `hole x1 y1 x2 y2 ...`, `source x y`, `target x y`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, AbstractionError> {
        let mut scene = Scene::default();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| AbstractionError::Parse {
                line: ln + 1,
                msg: msg.to_string(),
            };
            let mut it = line.split_whitespace();
            let tag = it.next().unwrap_or("");
            let nums: Vec<f64> = it
                .map(|v| v.parse::<f64>().map_err(|_| err("bad number")))
                .collect::<Result<_, _>>()?;
            if nums.len() % 2 != 0 {
                return Err(err("odd number of coordinates"));
            }
            let pts: Vec<Point> = nums.chunks(2).map(|c| Point::new(c[0], c[1])).collect();
            match (tag, pts.len()) {
                ("hole", n) if n >= 3 => scene.holes.push(Polygon::new(pts)?),
                ("source", 1) => scene.source = Some(pts[0]),
                ("target", 1) => scene.target = Some(pts[0]),
                _ => return Err(err("unknown or malformed record")),
            }
        }
        Ok(scene)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for h in &self.holes {
            s.push_str("hole");
            for p in h.vertices() {
                let _ = write!(s, " {} {}", fmt_f64(p.x), fmt_f64(p.y));
            }
            s.push('\n');
        }
        for (tag, p) in [("source", self.source), ("target", self.target)] {
            if let Some(p) = p {
                let _ = writeln!(s, "{tag} {} {}", fmt_f64(p.x), fmt_f64(p.y));
            }
        }
        s
    }

    pub fn abstractions(&self) -> Result<Vec<HoleAbstraction>, AbstractionError> {
        self.holes
            .iter()
            .enumerate()
            .map(|(i, p)| HoleAbstraction::from_polygon(i, p.clone()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(a: f64, b: f64, c: f64, d: f64) -> Rect {
        Rect::new(a, b, c, d).unwrap()
    }

    #[test]
    fn union_containment_splits_at_box_borders() {
        let region = [rect(0.0, 3.0, 0.0, 2.0), rect(2.0, 5.0, 1.0, 3.0)];
        assert!(segment_inside_union(
            Point::new(0.5, 1.5),
            Point::new(4.5, 1.5),
            &region
        ));
        assert!(!segment_inside_union(
            Point::new(0.5, 1.5),
            Point::new(4.5, 2.9),
            &region
        ));
    }

    #[test]
    fn rect_index_agrees_with_scan() {
        let rects = vec![rect(0.0, 1.0, 0.0, 1.0), rect(5.0, 9.0, 5.0, 6.0)];
        let idx = RectIndex::new(rects.clone());
        let cases = [
            (Point::new(-1.0, 0.5), Point::new(12.0, 5.5)),
            (Point::new(-1.0, 1.0), Point::new(3.0, 1.0)),
            (Point::new(0.5, -3.0), Point::new(0.5, 9.0)),
            (Point::new(2.0, 2.0), Point::new(4.0, 4.0)),
        ];
        for (a, b) in cases {
            let seg = Segment::new(a, b).unwrap();
            let scan = rects.iter().any(|r| segment_intersects_rect(&seg, r));
            assert_eq!(idx.blocked(a, b), scan, "{a:?} {b:?}");
        }
    }
}
