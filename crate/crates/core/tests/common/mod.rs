//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use holeroute::geom::{Point, Segment};
use std::collections::BTreeSet;

/// Pairwise distance test, no grid.
pub fn udg_oracle(nodes: &[Point]) -> Vec<Vec<bool>> {
    let n = nodes.len();
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            adj[i][j] = i != j && nodes[i].dist(nodes[j]) <= 1.0 + 1e-9;
        }
    }
    adj
}

/// Brute-force 2-localized Delaunay edge set: every unit triangle is checked
/// against every node within two hops of its corners, every unit edge against
/// every node for the diametral disk.
pub fn ldel2_oracle(nodes: &[Point]) -> BTreeSet<(usize, usize)> {
    let n = nodes.len();
    let adj = udg_oracle(nodes);
    let mut two = adj.clone();
    for m in 0..n {
        let nb: Vec<usize> = (0..n).filter(|&x| adj[m][x]).collect();
        for &u in &nb {
            for &x in &nb {
                two[u][x] = true;
            }
        }
    }
    let within_two = |u: usize, x: usize| u == x || two[u][x];
    let mut out = BTreeSet::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if !adj[u][v] {
                continue;
            }
            let c = nodes[u].lerp(nodes[v], 0.5);
            let r = nodes[u].dist(nodes[v]) / 2.0;
            if (0..n).all(|x| x == u || x == v || nodes[x].dist(c) >= r - 1e-9) {
                out.insert((u, v));
            }
            for w in (v + 1)..n {
                if !adj[u][w] || !adj[v][w] {
                    continue;
                }
                let (center, radius) = circum(nodes[u], nodes[v], nodes[w]);
                let empty = (0..n).all(|x| {
                    x == u
                        || x == v
                        || x == w
                        || !(within_two(u, x) || within_two(v, x) || within_two(w, x))
                        || nodes[x].dist(center) >= radius
                });
                if empty {
                    out.insert((u, v));
                    out.insert((u, w));
                    out.insert((v, w));
                }
            }
        }
    }
    out
}

/// Circumcircle from the perpendicular-bisector linear system.
pub fn circum(a: Point, b: Point, c: Point) -> (Point, f64) {
    let (a1, b1, c1) = (
        2.0 * (b.x - a.x),
        2.0 * (b.y - a.y),
        b.x * b.x + b.y * b.y - a.x * a.x - a.y * a.y,
    );
    let (a2, b2, c2) = (
        2.0 * (c.x - a.x),
        2.0 * (c.y - a.y),
        c.x * c.x + c.y * c.y - a.x * a.x - a.y * a.y,
    );
    let det = a1 * b2 - a2 * b1;
    let p = Point::new((c1 * b2 - c2 * b1) / det, (a1 * c2 - a2 * c1) / det);
    (p, p.dist(a))
}

/// Number of edge pairs whose interiors properly cross.
pub fn crossing_pairs(nodes: &[Point], edges: &[(usize, usize)]) -> usize {
    let mut count = 0;
    for i in 0..edges.len() {
        for j in (i + 1)..edges.len() {
            let (a, b) = edges[i];
            let (c, d) = edges[j];
            if a == c || a == d || b == c || b == d {
                continue;
            }
            let (p, q, r, s) = (nodes[a], nodes[b], nodes[c], nodes[d]);
            let o = |x: Point, y: Point, z: Point| {
                (y.x - x.x) * (z.y - x.y) - (y.y - x.y) * (z.x - x.x)
            };
            if o(p, q, r) * o(p, q, s) < 0.0 && o(r, s, p) * o(r, s, q) < 0.0 {
                count += 1;
            }
        }
    }
    count
}

/// Dense O(n^2) Dijkstra over an explicit weight function.
pub fn dense_dijkstra(
    n: usize,
    src: usize,
    weight: impl Fn(usize, usize) -> Option<f64>,
) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[src] = 0.0;
    for _ in 0..n {
        let mut u = usize::MAX;
        for v in 0..n {
            if !done[v] && dist[v].is_finite() && (u == usize::MAX || dist[v] < dist[u]) {
                u = v;
            }
        }
        if u == usize::MAX {
            break;
        }
        done[u] = true;
        for v in 0..n {
            if !done[v] {
                if let Some(w) = weight(u, v) {
                    if dist[u] + w < dist[v] {
                        dist[v] = dist[u] + w;
                    }
                }
            }
        }
    }
    dist
}

/// Bellman-Ford over an edge list.
pub fn bellman_ford(n: usize, src: usize, edges: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; n];
    dist[src] = 0.0;
    for _ in 0..n {
        let mut changed = false;
        for &(u, v, w) in edges {
            if dist[u] + w < dist[v] {
                dist[v] = dist[u] + w;
                changed = true;
            }
            if dist[v] + w < dist[u] {
                dist[u] = dist[v] + w;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

pub fn seg(a: Point, b: Point) -> Segment {
    Segment::new(a, b).unwrap()
}

pub fn p(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

/// Segment meets the open rectangle `[x0,x1] x [y0,y1]`: clip against the
/// closed box by slab intersection, then test the chord midpoint strictly.
pub fn crosses_open_rect(a: Point, b: Point, x0: f64, x1: f64, y0: f64, y1: f64) -> bool {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for (p, d, min, max) in [(a.x, b.x - a.x, x0, x1), (a.y, b.y - a.y, y0, y1)] {
        if d.abs() < 1e-15 {
            if p < min || p > max {
                return false;
            }
        } else {
            let (t0, t1) = ((min - p) / d, (max - p) / d);
            lo = lo.max(t0.min(t1));
            hi = hi.min(t0.max(t1));
        }
    }
    if hi - lo < 1e-12 {
        return false;
    }
    let m = a.lerp(b, 0.5 * (lo + hi));
    m.x > x0 + 1e-9 && m.x < x1 - 1e-9 && m.y > y0 + 1e-9 && m.y < y1 - 1e-9
}

/// Even-odd ray casting.
pub fn inside_polygon(q: Point, poly: &[Point]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (u, v) = (poly[i], poly[(i + 1) % n]);
        if (u.y > q.y) != (v.y > q.y) {
            let x = u.x + (q.y - u.y) / (v.y - u.y) * (v.x - u.x);
            if x > q.x {
                inside = !inside;
            }
        }
    }
    inside
}

fn near_boundary(q: Point, poly: &[Point]) -> bool {
    let n = poly.len();
    (0..n).any(|i| holeroute::geom::point_segment_distance(q, poly[i], poly[(i + 1) % n]) < 1e-9)
}

/// Parameters along `a b` where it meets an edge or passes a vertex, plus 0 and 1.
fn split_params(a: Point, b: Point, poly: &[Point]) -> Vec<f64> {
    let d = b - a;
    let mut ts = vec![0.0, 1.0];
    let n = poly.len();
    for i in 0..n {
        let (u, v) = (poly[i], poly[(i + 1) % n]);
        let e = v - u;
        let den = d.cross(e);
        if den.abs() > 1e-15 {
            let t = (u - a).cross(e) / den;
            let s = (u - a).cross(d) / den;
            if (-1e-12..=1.0 + 1e-12).contains(&s) && (0.0..=1.0).contains(&t) {
                ts.push(t);
            }
        }
        for w in [u, v] {
            let len2 = d.dot(d);
            if len2 > 0.0 {
                let t = (w - a).dot(d) / len2;
                if (0.0..=1.0).contains(&t) {
                    ts.push(t);
                }
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    ts
}

/// Segment passes through the open interior of the polygon: split it at
/// every parameter where it meets an edge line inside that edge, and ray-cast
/// the midpoint of every piece.
pub fn hits_polygon_interior(a: Point, b: Point, poly: &[Point]) -> bool {
    split_params(a, b, poly)
        .windows(2)
        .filter(|w| w[1] - w[0] > 1e-12)
        .any(|w| {
            let m = a.lerp(b, 0.5 * (w[0] + w[1]));
            inside_polygon(m, poly) && !near_boundary(m, poly)
        })
}

/// The segment minus its endpoints meets the closed polygon (interior or
/// boundary).
pub fn meets_closed_polygon(a: Point, b: Point, poly: &[Point]) -> bool {
    let ts = split_params(a, b, poly);
    let on_boundary = ts
        .iter()
        .filter(|&&t| t > 1e-9 && t < 1.0 - 1e-9)
        .any(|&t| near_boundary(a.lerp(b, t), poly));
    on_boundary
        || ts.windows(2).filter(|w| w[1] - w[0] > 1e-12).any(|w| {
            let m = a.lerp(b, 0.5 * (w[0] + w[1]));
            inside_polygon(m, poly) || near_boundary(m, poly)
        })
}

/// Length of the shortest path from `s` to `t` avoiding the interiors of
/// `polys`, by dense Dijkstra over all polygon vertices.
pub fn visibility_optimum(polys: &[Vec<Point>], s: Point, t: Point) -> f64 {
    let mut pts = vec![s, t];
    for poly in polys {
        pts.extend(poly.iter().copied());
    }
    let dist = dense_dijkstra(pts.len(), 0, |u, v| {
        let (a, b) = (pts[u], pts[v]);
        (!polys.iter().any(|poly| hits_polygon_interior(a, b, poly))).then(|| a.dist(b))
    });
    dist[1]
}

/// Closed-union membership with a small tolerance.
pub fn in_union(q: Point, rects: &[(f64, f64, f64, f64)]) -> bool {
    rects.iter().any(|&(x0, x1, y0, y1)| {
        q.x >= x0 - 1e-9 && q.x <= x1 + 1e-9 && q.y >= y0 - 1e-9 && q.y <= y1 + 1e-9
    })
}

/// Segment stays in the closed union: dense sampling.
pub fn segment_in_union(a: Point, b: Point, rects: &[(f64, f64, f64, f64)]) -> bool {
    (0..=400).all(|k| in_union(a.lerp(b, k as f64 / 400.0), rects))
}
