//! Seeded generation of connected unit disk graphs on a square.

use crate::geom::{circumcircle, side_of_line, Point, EPS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;
use std::fmt::Write as _;
use thiserror::Error;

/// Consecutive disconnected placements tolerated before giving up.
pub const MAX_REJECTIONS: u32 = 10_000;
/// Half-width of the symmetric jitter used to break degeneracies.
pub const PERTURBATION: f64 = 1e-6;
const MAX_PERTURB_ROUNDS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetgenError {
    #[error("density too low for connectivity (gave up after {0} rejected placements)")]
    TooSparse(u32),
    #[error("graph has no nodes")]
    Empty,
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("general position could not be reached after perturbation")]
    Degenerate,
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Outcome of the localized emptiness test for one unit-disk triangle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TriangleClass {
    /// No two-hop node inside the circumdisk.
    Empty,
    /// Some two-hop node strictly inside.
    Blocked,
    /// Collinear corners or a two-hop node within tolerance of the circle.
    Degenerate(Vec<usize>),
}

/// A node set in the plane with its unit-disk adjacency.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkInstance {
    pub nodes: Vec<Point>,
    pub side: f64,
    pub density: f64,
    pub seed: u64,
    /// Sorted neighbour indices per node.
    pub adjacency: Vec<Vec<usize>>,
    /// Number of disconnected placements discarded before this one.
    pub rejections: u32,
}

/// `round(density * side^2 / pi)`: a unit disk has area pi.
pub fn node_count_for_density(density: f64, side: f64) -> usize {
    (density * side * side / std::f64::consts::PI).round() as usize
}

/// Unit-disk adjacency, built by bucketing nodes into unit cells.
pub fn unit_disk_adjacency(nodes: &[Point]) -> Vec<Vec<usize>> {
    let n = nodes.len();
    let mut adj = vec![Vec::new(); n];
    if n == 0 {
        return adj;
    }
    let grid = UnitGrid::new(nodes);
    let lim = (1.0 + EPS) * (1.0 + EPS);
    for (i, p) in nodes.iter().enumerate() {
        grid.for_each_near(nodes, i, |j| {
            if p.dist_sq(nodes[j]) <= lim {
                adj[i].push(j);
            }
        });
        adj[i].sort_unstable();
    }
    adj
}

/// Nodes sorted into unit cells (counting sort, flat storage).
pub struct UnitGrid {
    min_x: f64,
    min_y: f64,
    cols: usize,
    rows: usize,
    start: Vec<usize>,
    items: Vec<usize>,
}

impl UnitGrid {
    pub fn new(nodes: &[Point]) -> Self {
        let min_x = nodes.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
        let min_y = nodes.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
        let max_x = nodes.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
        let max_y = nodes.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
        let cols = (max_x - min_x).floor() as usize + 1;
        let rows = (max_y - min_y).floor() as usize + 1;
        let mut grid = Self {
            min_x,
            min_y,
            cols,
            rows,
            start: vec![0; cols * rows + 1],
            items: vec![0; nodes.len()],
        };
        let cells: Vec<usize> = nodes.iter().map(|p| grid.cell(*p)).collect();
        for &c in &cells {
            grid.start[c + 1] += 1;
        }
        for k in 0..cols * rows {
            grid.start[k + 1] += grid.start[k];
        }
        let mut fill = grid.start.clone();
        for (i, &c) in cells.iter().enumerate() {
            grid.items[fill[c]] = i;
            fill[c] += 1;
        }
        grid
    }

    fn coords(&self, p: Point) -> (usize, usize) {
        let cx = ((p.x - self.min_x).floor() as usize).min(self.cols - 1);
        let cy = ((p.y - self.min_y).floor() as usize).min(self.rows - 1);
        (cx, cy)
    }

    fn cell(&self, p: Point) -> usize {
        let (cx, cy) = self.coords(p);
        cy * self.cols + cx
    }

    /// Calls `f` for every node in the cells overlapping the axis-parallel
    /// bounding squares of both disks `(c1, r1)` and `(c2, r2)`.
    pub fn for_each_in_disk_near(
        &self,
        c1: Point,
        r1: f64,
        c2: Point,
        r2: f64,
        mut f: impl FnMut(usize),
    ) {
        let x_lo = (c1.x - r1).max(c2.x - r2) - self.min_x;
        let x_hi = (c1.x + r1).min(c2.x + r2) - self.min_x;
        let y_lo = (c1.y - r1).max(c2.y - r2) - self.min_y;
        let y_hi = (c1.y + r1).min(c2.y + r2) - self.min_y;
        if x_hi < 0.0 || y_hi < 0.0 || x_lo > x_hi || y_lo > y_hi {
            return;
        }
        let x0 = x_lo.floor().max(0.0) as usize;
        let y0 = y_lo.floor().max(0.0) as usize;
        let x1 = (x_hi.floor() as usize).min(self.cols - 1);
        let y1 = (y_hi.floor() as usize).min(self.rows - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let c = y * self.cols + x;
                for &j in &self.items[self.start[c]..self.start[c + 1]] {
                    f(j);
                }
            }
        }
    }

    /// Calls `f` for every other node in the 3x3 block of cells around node `i`.
    fn for_each_near(&self, nodes: &[Point], i: usize, mut f: impl FnMut(usize)) {
        let (cx, cy) = self.coords(nodes[i]);
        for y in cy.saturating_sub(1)..=(cy + 1).min(self.rows - 1) {
            for x in cx.saturating_sub(1)..=(cx + 1).min(self.cols - 1) {
                let c = y * self.cols + x;
                for &j in &self.items[self.start[c]..self.start[c + 1]] {
                    if j != i {
                        f(j);
                    }
                }
            }
        }
    }
}

/// Cheap necessary condition for connectivity: no node without a neighbour.
fn has_isolated_node(nodes: &[Point]) -> bool {
    if nodes.len() < 2 {
        return true;
    }
    let grid = UnitGrid::new(nodes);
    let lim = (1.0 + EPS) * (1.0 + EPS);
    (0..nodes.len()).any(|i| {
        let mut found = false;
        grid.for_each_near(nodes, i, |j| found |= nodes[i].dist_sq(nodes[j]) <= lim);
        !found
    })
}

impl NetworkInstance {
    /// Wraps explicit positions (fixtures, deserialised instances).
    pub fn from_points(nodes: Vec<Point>, side: f64, density: f64, seed: u64) -> Self {
        let adjacency = unit_disk_adjacency(&nodes);
        Self {
            nodes,
            side,
            density,
            seed,
            adjacency,
            rejections: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn pos(&self, i: usize) -> Point {
        self.nodes[i]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Nodes within two hops of `u`, including `u`, sorted.
    pub fn two_hop(&self, u: usize) -> Vec<usize> {
        let mut out = vec![u];
        for &v in &self.adjacency[u] {
            out.push(v);
            out.extend_from_slice(&self.adjacency[v]);
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// True iff `x` is `u`, a neighbour of `u`, or a neighbour of one.
    pub fn within_two_hops(&self, u: usize, x: usize) -> bool {
        if u == x || self.has_edge(u, x) {
            return true;
        }
        let (a, b) = (&self.adjacency[u], &self.adjacency[x]);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    /// Calls `f(u, v, w)` for every unit-disk triangle, `u < v < w`.
    pub fn for_each_triangle(&self, mut f: impl FnMut(usize, usize, usize)) {
        for u in 0..self.len() {
            let adj = &self.adjacency[u];
            let first = adj.partition_point(|&v| v < u);
            for (k, &v) in adj.iter().enumerate().skip(first) {
                for &w in &adj[k + 1..] {
                    if self.has_edge(v, w) {
                        f(u, v, w);
                    }
                }
            }
        }
    }

    /// Decides whether the open circumdisk of unit-disk triangle `(u, v, w)`
    /// holds a node within two hops of a corner.
    pub fn classify_triangle(
        &self,
        grid: &UnitGrid,
        u: usize,
        v: usize,
        w: usize,
    ) -> TriangleClass {
        let (a, b, c) = (self.nodes[u], self.nodes[v], self.nodes[w]);
        if side_of_line(a, b, c).abs() <= EPS
            || side_of_line(b, c, a).abs() <= EPS
            || side_of_line(c, a, b).abs() <= EPS
        {
            return TriangleClass::Degenerate(vec![u, v, w]);
        }
        let Ok((center, r)) = circumcircle(a, b, c) else {
            return TriangleClass::Degenerate(vec![u, v, w]);
        };
        let corner = |x: usize| x == u || x == v || x == w;
        // Neighbours of a corner are the likeliest intruders; try them first.
        if self.adjacency[u]
            .iter()
            .any(|&x| !corner(x) && self.nodes[x].dist(center) < r - EPS)
        {
            return TriangleClass::Blocked;
        }
        let mut on_circle = Vec::new();
        let mut blocked = false;
        // Two-hop nodes of the corners lie within distance 3 of `a`.
        grid.for_each_in_disk_near(center, r + EPS, a, 3.0, |x| {
            if blocked || corner(x) {
                return;
            }
            let d = self.nodes[x].dist(center);
            if d >= r + EPS {
                return;
            }
            let near = self.within_two_hops(u, x)
                || self.within_two_hops(v, x)
                || self.within_two_hops(w, x);
            if !near {
                return;
            }
            if d > r - EPS {
                on_circle.push(x);
            } else {
                blocked = true;
            }
        });
        if blocked {
            TriangleClass::Blocked
        } else if on_circle.is_empty() {
            TriangleClass::Empty
        } else {
            on_circle.extend([u, v, w]);
            TriangleClass::Degenerate(on_circle)
        }
    }

    /// Nodes involved in a degeneracy that could change the localized
    /// Delaunay graph: coincident pairs, nearly collinear unit-disk triangles,
    /// or a two-hop node on the circumcircle of an otherwise empty triangle.
    pub fn degenerate_nodes(&self) -> Vec<usize> {
        let mut bad = Vec::new();
        if self.is_empty() {
            return bad;
        }
        for u in 0..self.len() {
            for &v in &self.adjacency[u] {
                if v > u && self.nodes[u].dist(self.nodes[v]) <= EPS {
                    bad.extend([u, v]);
                }
            }
        }
        let grid = UnitGrid::new(&self.nodes);
        self.for_each_triangle(|u, v, w| {
            if let TriangleClass::Degenerate(nodes) = self.classify_triangle(&grid, u, v, w) {
                bad.extend(nodes);
            }
        });
        bad.sort_unstable();
        bad.dedup();
        bad
    }

    /// Jitters degenerate nodes until none remain.
    pub fn enforce_general_position<R: Rng>(&mut self, rng: &mut R) -> Result<(), NetgenError> {
        for _ in 0..MAX_PERTURB_ROUNDS {
            let bad = self.degenerate_nodes();
            if bad.is_empty() {
                return Ok(());
            }
            for i in bad {
                let dx = rng.random_range(-PERTURBATION..=PERTURBATION);
                let dy = rng.random_range(-PERTURBATION..=PERTURBATION);
                self.nodes[i] = self.nodes[i] + Point::new(dx, dy);
            }
            self.adjacency = unit_disk_adjacency(&self.nodes);
        }
        if self.degenerate_nodes().is_empty() {
            Ok(())
        } else {
            Err(NetgenError::Degenerate)
        }
    }

    /// Line format: header `side density seed n`, then `x y` per node.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} {} {} {}",
            fmt_f64(self.side),
            fmt_f64(self.density),
            self.seed,
            self.len()
        );
        for p in &self.nodes {
            let _ = writeln!(s, "{} {}", fmt_f64(p.x), fmt_f64(p.y));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, NetgenError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines.next().ok_or(NetgenError::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let perr = |line: usize, msg: &str| NetgenError::Parse {
            line: line + 1,
            msg: msg.to_string(),
        };
        if fields.len() != 4 {
            return Err(perr(hl, "header needs 4 fields"));
        }
        let side: f64 = fields[0].parse().map_err(|_| perr(hl, "bad side"))?;
        let density: f64 = fields[1].parse().map_err(|_| perr(hl, "bad density"))?;
        let seed: u64 = fields[2].parse().map_err(|_| perr(hl, "bad seed"))?;
        let n: usize = fields[3].parse().map_err(|_| perr(hl, "bad node count"))?;
        let mut nodes = Vec::with_capacity(n);
        for (ln, line) in lines {
            let mut it = line.split_whitespace();
            let x: f64 = it
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| perr(ln, "bad x"))?;
            let y: f64 = it
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| perr(ln, "bad y"))?;
            nodes.push(Point::new(x, y));
        }
        if nodes.len() != n {
            return Err(perr(hl, "node count mismatch"));
        }
        Ok(Self::from_points(nodes, side, density, seed))
    }
}

/// Decimal with 17 significant digits; parses back to the same bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Breadth-first reachability from node 0.
pub fn is_connected(net: &NetworkInstance) -> Result<bool, NetgenError> {
    connected(&net.adjacency)
}

fn connected(adj: &[Vec<usize>]) -> Result<bool, NetgenError> {
    if adj.is_empty() {
        return Err(NetgenError::Empty);
    }
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    Ok(count == adj.len())
}

/// Uniform placement on `[0, side)^2`, resampled until connected, then
/// perturbed into general position. At least two nodes are required so a
/// source and a distinct target exist.
pub fn generate_udg(density: f64, side: f64, seed: u64) -> Result<NetworkInstance, NetgenError> {
    if !(density > 0.0) || !(side > 0.0) {
        return Err(NetgenError::InvalidParameters(format!(
            "density {density} and side {side} must be positive"
        )));
    }
    let n = node_count_for_density(density, side);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rejections = 0u32;
    loop {
        let nodes: Vec<Point> = (0..n)
            .map(|_| Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side))
            .collect();
        if n < 2 || has_isolated_node(&nodes) {
            rejections += 1;
            if rejections >= MAX_REJECTIONS {
                return Err(NetgenError::TooSparse(rejections));
            }
            continue;
        }
        let adjacency = unit_disk_adjacency(&nodes);
        if connected(&adjacency)? {
            let mut net = NetworkInstance {
                nodes,
                side,
                density,
                seed,
                adjacency,
                rejections,
            };
            net.enforce_general_position(&mut rng)?;
            if connected(&net.adjacency)? {
                return Ok(net);
            }
        }
        rejections += 1;
        if rejections >= MAX_REJECTIONS {
            return Err(NetgenError::TooSparse(rejections));
        }
    }
}
