//! Planar primitives and predicates shared by every other module.
//!
//! All predicates use the global tolerance [`EPS`]; values closer than that
//! are treated as equal.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};
use thiserror::Error;

/// Global geometric tolerance.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("degenerate triangle")]
    DegenerateTriangle,
    #[error("segment endpoints coincide")]
    DegenerateSegment,
    #[error("rectangle has no area: [{min_x}, {max_x}] x [{min_y}, {max_y}]")]
    DegenerateRect {
        min_x: f64,
        max_x: f64,
        min_y: f64,
        max_y: f64,
    },
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("all points are collinear")]
    Collinear,
    #[error("empty node list")]
    EmptyNodeList,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn dist_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        Point::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }

    /// Angle of the vector from the origin, in `(-pi, pi]`.
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn approx_eq(self, o: Point) -> bool {
        self.dist(o) <= EPS
    }

    /// Rotate by `quarter_turns * 90` degrees counterclockwise about the origin.
    pub fn rotate_quarter(self, quarter_turns: u8) -> Point {
        match quarter_turns % 4 {
            0 => self,
            1 => Point::new(-self.y, self.x),
            2 => Point::new(-self.x, -self.y),
            _ => Point::new(self.y, -self.x),
        }
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

/// Euclidean distance.
pub fn dist(a: Point, b: Point) -> f64 {
    a.dist(b)
}

/// Twice the signed area of triangle `abc`; positive when counterclockwise.
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

/// Signed distance of `p` from the directed line through `a` and `b`
/// (positive on the left).
pub fn side_of_line(a: Point, b: Point, p: Point) -> f64 {
    let len = a.dist(b);
    if len == 0.0 {
        return p.dist(a);
    }
    orient(a, b, p) / len
}

/// Distance from `p` to the closed segment `ab`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a.lerp(b, t))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Result<Self, GeomError> {
        if a.dist(b) <= EPS {
            return Err(GeomError::DegenerateSegment);
        }
        Ok(Self { a, b })
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn midpoint(&self) -> Point {
        self.a.lerp(self.b, 0.5)
    }

    pub fn at(&self, t: f64) -> Point {
        self.a.lerp(self.b, t)
    }

    /// Parameter of the orthogonal projection of `p` onto the supporting line.
    pub fn project(&self, p: Point) -> f64 {
        let d = self.b - self.a;
        (p - self.a).dot(d) / d.dot(d)
    }

    pub fn distance_to(&self, p: Point) -> f64 {
        point_segment_distance(p, self.a, self.b)
    }
}

/// How two segments meet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Intersection {
    Disjoint,
    /// Interiors cross at a single point.
    Crossing(Point),
    /// The segments share exactly one point that is an endpoint of at least one of them.
    Touching(Point),
    /// Collinear with an overlap of positive length.
    Overlap,
}

/// Classify the intersection of two segments.
pub fn segments_intersect(s1: &Segment, s2: &Segment) -> Intersection {
    let (a, b, c, d) = (s1.a, s1.b, s2.a, s2.b);
    let d1 = side_of_line(c, d, a);
    let d2 = side_of_line(c, d, b);
    let d3 = side_of_line(a, b, c);
    let d4 = side_of_line(a, b, d);
    let z1 = d1.abs() <= EPS;
    let z2 = d2.abs() <= EPS;
    let z3 = d3.abs() <= EPS;
    let z4 = d4.abs() <= EPS;

    if (z1 && z2) || (z3 && z4) {
        // Collinear: compare projections onto the longer segment.
        let (base, other) = if s1.length() >= s2.length() {
            (s1, s2)
        } else {
            (s2, s1)
        };
        let len = base.length();
        let mut t0 = base.project(other.a) * len;
        let mut t1 = base.project(other.b) * len;
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        let lo = t0.max(0.0);
        let hi = t1.min(len);
        if hi - lo > EPS {
            return Intersection::Overlap;
        }
        if hi - lo >= -EPS {
            let p = base.at((lo.max(0.0).min(len)) / len);
            return Intersection::Touching(p);
        }
        return Intersection::Disjoint;
    }

    if !z1 && !z2 && !z3 && !z4 {
        if (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0) {
            let t = d1 / (d1 - d2);
            return Intersection::Crossing(a.lerp(b, t));
        }
        return Intersection::Disjoint;
    }

    // Exactly one endpoint lies on the other segment's line.
    let on = |p: Point, s: &Segment| s.distance_to(p) <= EPS;
    if z1 && on(a, s2) {
        return Intersection::Touching(a);
    }
    if z2 && on(b, s2) {
        return Intersection::Touching(b);
    }
    if z3 && on(c, s1) {
        return Intersection::Touching(c);
    }
    if z4 && on(d, s1) {
        return Intersection::Touching(d);
    }
    Intersection::Disjoint
}

/// Corner of an axis-parallel box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum CornerRole {
    TopLeft,
    TopRight,
    BottomLeft,
    BottomRight,
}

impl CornerRole {
    pub const ALL: [CornerRole; 4] = [
        CornerRole::TopLeft,
        CornerRole::TopRight,
        CornerRole::BottomLeft,
        CornerRole::BottomRight,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub max_x: f64,
    pub min_y: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn new(min_x: f64, max_x: f64, min_y: f64, max_y: f64) -> Result<Self, GeomError> {
        if !(min_x < max_x && min_y < max_y) {
            return Err(GeomError::DegenerateRect {
                min_x,
                max_x,
                min_y,
                max_y,
            });
        }
        Ok(Self {
            min_x,
            max_x,
            min_y,
            max_y,
        })
    }

    /// Tight bounding box of `points`; a flat dimension is widened by [`EPS`].
    pub fn bounding(points: impl IntoIterator<Item = Point>) -> Result<Self, GeomError> {
        let mut it = points.into_iter().peekable();
        if it.peek().is_none() {
            return Err(GeomError::EmptyNodeList);
        }
        let (mut min_x, mut max_x, mut min_y, mut max_y) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for p in it {
            min_x = min_x.min(p.x);
            max_x = max_x.max(p.x);
            min_y = min_y.min(p.y);
            max_y = max_y.max(p.y);
        }
        if max_x - min_x < EPS {
            max_x = min_x + EPS;
        }
        if max_y - min_y < EPS {
            max_y = min_y + EPS;
        }
        Rect::new(min_x, max_x, min_y, max_y)
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn corner(&self, role: CornerRole) -> Point {
        match role {
            CornerRole::TopLeft => Point::new(self.min_x, self.max_y),
            CornerRole::TopRight => Point::new(self.max_x, self.max_y),
            CornerRole::BottomLeft => Point::new(self.min_x, self.min_y),
            CornerRole::BottomRight => Point::new(self.max_x, self.min_y),
        }
    }

    /// Corners in the order of [`CornerRole::ALL`].
    pub fn corners(&self) -> [Point; 4] {
        CornerRole::ALL.map(|r| self.corner(r))
    }

    /// Boundary edges in counterclockwise order: bottom, right, top, left.
    pub fn edges(&self) -> [Segment; 4] {
        let bl = self.corner(CornerRole::BottomLeft);
        let br = self.corner(CornerRole::BottomRight);
        let tr = self.corner(CornerRole::TopRight);
        let tl = self.corner(CornerRole::TopLeft);
        [
            Segment { a: bl, b: br },
            Segment { a: br, b: tr },
            Segment { a: tr, b: tl },
            Segment { a: tl, b: bl },
        ]
    }

    /// Closed containment with tolerance.
    pub fn contains_closed(&self, p: Point) -> bool {
        p.x >= self.min_x - EPS
            && p.x <= self.max_x + EPS
            && p.y >= self.min_y - EPS
            && p.y <= self.max_y + EPS
    }

    /// Open containment: farther than [`EPS`] from every edge.
    pub fn contains_strict(&self, p: Point) -> bool {
        p.x > self.min_x + EPS
            && p.x < self.max_x - EPS
            && p.y > self.min_y + EPS
            && p.y < self.max_y - EPS
    }

    /// Distance from `p` to the rectangle boundary.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.edges()
            .iter()
            .map(|e| e.distance_to(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Overlap with positive area (more than [`EPS`] in both dimensions).
    pub fn overlaps(&self, o: &Rect) -> bool {
        let w = self.max_x.min(o.max_x) - self.min_x.max(o.min_x);
        let h = self.max_y.min(o.max_y) - self.min_y.max(o.min_y);
        w > EPS && h > EPS
    }

    /// `o` lies inside `self` (closed).
    pub fn contains_rect(&self, o: &Rect) -> bool {
        o.min_x >= self.min_x - EPS
            && o.max_x <= self.max_x + EPS
            && o.min_y >= self.min_y - EPS
            && o.max_y <= self.max_y + EPS
    }

    /// Parameter interval of `s` inside the closed rectangle (Liang-Barsky).
    pub fn clip(&self, s: &Segment) -> Option<(f64, f64)> {
        let d = s.b - s.a;
        let mut t0: f64 = 0.0;
        let mut t1: f64 = 1.0;
        let checks = [
            (-d.x, s.a.x - self.min_x),
            (d.x, self.max_x - s.a.x),
            (-d.y, s.a.y - self.min_y),
            (d.y, self.max_y - s.a.y),
        ];
        for (p, q) in checks {
            if p == 0.0 {
                if q < -EPS {
                    return None;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
            }
        }
        if t0 > t1 {
            None
        } else {
            Some((t0, t1))
        }
    }

    /// Bounding box overlap test used to skip exact checks.
    fn bbox_disjoint(&self, s: &Segment) -> bool {
        s.a.x.max(s.b.x) < self.min_x
            || s.a.x.min(s.b.x) > self.max_x
            || s.a.y.max(s.b.y) < self.min_y
            || s.a.y.min(s.b.y) > self.max_y
    }

    pub fn translate(&self, d: Point) -> Rect {
        Rect {
            min_x: self.min_x + d.x,
            max_x: self.max_x + d.x,
            min_y: self.min_y + d.y,
            max_y: self.max_y + d.y,
        }
    }

    /// Image under a quarter-turn rotation about the origin.
    pub fn rotate_quarter(&self, quarter_turns: u8) -> Rect {
        let a = Point::new(self.min_x, self.min_y).rotate_quarter(quarter_turns);
        let b = Point::new(self.max_x, self.max_y).rotate_quarter(quarter_turns);
        Rect {
            min_x: a.x.min(b.x),
            max_x: a.x.max(b.x),
            min_y: a.y.min(b.y),
            max_y: a.y.max(b.y),
        }
    }
}

/// True iff `s` passes through the open interior of `r`. Segments that only
/// touch the boundary (along an edge or through a corner) do not count.
pub fn segment_intersects_rect(s: &Segment, r: &Rect) -> bool {
    if r.bbox_disjoint(s) {
        return false;
    }
    match r.clip(s) {
        None => false,
        Some((t0, t1)) => r.contains_strict(s.at(0.5 * (t0 + t1))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    /// Builds a polygon, reordering the vertices counterclockwise if needed.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self, GeomError> {
        if vertices.len() < 3 {
            return Err(GeomError::TooFewPoints(vertices.len()));
        }
        let area = signed_area(&vertices);
        if area.abs() <= EPS * EPS {
            return Err(GeomError::Collinear);
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment {
            a: self.vertices[i],
            b: self.vertices[(i + 1) % n],
        })
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|e| e.length()).sum()
    }

    pub fn bounding_rect(&self) -> Rect {
        Rect::bounding(self.vertices.iter().copied()).expect("polygon has vertices")
    }

    /// No two non-adjacent edges meet and adjacent edges share only their endpoint.
    pub fn is_simple(&self) -> bool {
        let edges: Vec<Segment> = self.edges().collect();
        let n = edges.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                match segments_intersect(&edges[i], &edges[j]) {
                    Intersection::Disjoint => {}
                    Intersection::Touching(_) if adjacent => {}
                    _ => return false,
                }
            }
        }
        true
    }

    /// Convex polygon test: all turns left (collinear vertices tolerated).
    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            side_of_line(a, b, c) >= -EPS
        })
    }
}

/// Shoelace formula; positive for counterclockwise rings.
pub fn signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for i in 0..n {
        s += pts[i].cross(pts[(i + 1) % n]);
    }
    0.5 * s
}

/// Strict interior test; points within [`EPS`] of the boundary are outside.
pub fn point_in_polygon(p: Point, poly: &Polygon) -> bool {
    let v = poly.vertices();
    let n = v.len();
    let mut inside = false;
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        if point_segment_distance(p, a, b) <= EPS {
            return false;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if x > p.x {
                inside = !inside;
            }
        }
    }
    inside
}

/// True iff some point of `s` lies strictly inside `poly`.
pub fn segment_enters_polygon(s: &Segment, poly: &Polygon) -> bool {
    let bb = poly.bounding_rect();
    if bb.bbox_disjoint(s) {
        return false;
    }
    let len = s.length();
    let mut ts = vec![0.0, 1.0];
    for e in poly.edges() {
        match segments_intersect(s, &e) {
            Intersection::Disjoint => {}
            Intersection::Crossing(_) => return true,
            Intersection::Touching(p) => ts.push(s.project(p)),
            Intersection::Overlap => {
                ts.push(s.project(e.a).clamp(0.0, 1.0));
                ts.push(s.project(e.b).clamp(0.0, 1.0));
            }
        }
    }
    ts.sort_by(|a, b| a.total_cmp(b));
    ts.windows(2)
        .any(|w| (w[1] - w[0]) * len > EPS && point_in_polygon(s.at(0.5 * (w[0] + w[1])), poly))
}

/// True iff the interiors of two simple polygons share a point.
pub fn polygons_overlap(a: &Polygon, b: &Polygon) -> bool {
    let (ra, rb) = (a.bounding_rect(), b.bounding_rect());
    if ra.max_x < rb.min_x || rb.max_x < ra.min_x || ra.max_y < rb.min_y || rb.max_y < ra.min_y {
        return false;
    }
    for ea in a.edges() {
        for eb in b.edges() {
            if let Intersection::Crossing(_) = segments_intersect(&ea, &eb) {
                return true;
            }
        }
    }
    let probes = |p: &Polygon| -> Vec<Point> {
        p.vertices()
            .iter()
            .copied()
            .chain(p.edges().map(|e| e.midpoint()))
            .collect()
    };
    probes(a).into_iter().any(|q| point_in_polygon(q, b))
        || probes(b).into_iter().any(|q| point_in_polygon(q, a))
        || point_in_polygon(centroid(a), b)
        || point_in_polygon(centroid(b), a)
}

fn centroid(p: &Polygon) -> Point {
    let v = p.vertices();
    let sum = v.iter().fold(Point::default(), |acc, &q| acc + q);
    sum * (1.0 / v.len() as f64)
}

/// Circumcenter and circumradius of a non-degenerate triangle.
pub fn circumcircle(a: Point, b: Point, c: Point) -> Result<(Point, f64), GeomError> {
    let scale = a.dist(b).max(b.dist(c)).max(c.dist(a));
    let d = 2.0 * orient(a, b, c);
    if scale == 0.0 || d.abs() <= EPS * scale {
        return Err(GeomError::DegenerateTriangle);
    }
    let b0 = b - a;
    let c0 = c - a;
    let bb = b0.dot(b0);
    let cc = c0.dot(c0);
    let ux = (c0.y * bb - b0.y * cc) / d;
    let uy = (b0.x * cc - c0.x * bb) / d;
    let center = Point::new(a.x + ux, a.y + uy);
    let r = (a.dist(center) + b.dist(center) + c.dist(center)) / 3.0;
    Ok((center, r))
}

/// Counterclockwise convex hull (Andrew's monotone chain), collinear points dropped.
pub fn convex_hull(points: &[Point]) -> Result<Polygon, GeomError> {
    if points.len() < 3 {
        return Err(GeomError::TooFewPoints(points.len()));
    }
    let idx = convex_hull_indices(points);
    if idx.len() < 3 {
        return Err(GeomError::Collinear);
    }
    Polygon::new(idx.into_iter().map(|i| points[i]).collect())
}

/// Indices of the counterclockwise hull vertices of `points`.
pub fn convex_hull_indices(points: &[Point]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        points[i]
            .x
            .total_cmp(&points[j].x)
            .then(points[i].y.total_cmp(&points[j].y))
    });
    order.dedup_by(|a, b| points[*a].approx_eq(points[*b]));
    if order.len() < 3 {
        return order;
    }
    let turn = |h: &[usize], p: usize| {
        let n = h.len();
        side_of_line(points[h[n - 2]], points[h[n - 1]], points[p])
    };
    let mut lower: Vec<usize> = Vec::new();
    for &p in &order {
        while lower.len() >= 2 && turn(&lower, p) <= EPS {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &p in order.iter().rev() {
        while upper.len() >= 2 && turn(&upper, p) <= EPS {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Index of the node closest to `q`; ties go to the lowest index.
pub fn nearest_node(q: Point, nodes: &[Point]) -> Result<usize, GeomError> {
    nodes
        .iter()
        .enumerate()
        .map(|(i, p)| (i, p.dist_sq(q)))
        .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
            Some((_, bd)) if bd <= d => best,
            _ => Some((i, d)),
        })
        .map(|(i, _)| i)
        .ok_or(GeomError::EmptyNodeList)
}
