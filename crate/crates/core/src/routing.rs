//! Online routing on the 2-localized Delaunay graph: greedy, the face-routing
//! family, the chord-arc rule, the pairwise-intersection polyline and the
//! bounding-box router that composes them.

use crate::abstraction::{
    build_modified_bbvg, shortest_path_from, shortest_path_in_region, AbstractionError, BoxGraph,
    EdgeKind, HoleAbstraction, VertexKind, WeightMode,
};
use crate::geom::{
    nearest_node, polygons_overlap, segment_enters_polygon, segments_intersect, Intersection,
    Point, Polygon, Rect, Segment, EPS,
};
use crate::topology::LDelGraph;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HopMode {
    Greedy,
    Face,
    ChordArc,
    Redirect,
    Pic,
    GoafrPlus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailReason {
    LocalMinimum,
    Budget,
    Visibility,
    Hypothesis,
    /// Face exploration looped without progress: the target is not reachable.
    Unreachable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Delivered,
    Failed(FailReason),
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Delivered => f.write_str("delivered"),
            Outcome::Failed(r) => {
                let name = match r {
                    FailReason::LocalMinimum => "local_minimum",
                    FailReason::Budget => "budget",
                    FailReason::Visibility => "visibility",
                    FailReason::Hypothesis => "hypothesis",
                    FailReason::Unreachable => "unreachable",
                };
                write!(f, "failed({name})")
            }
        }
    }
}

/// Route taken by a packet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathTrace {
    pub hops: Vec<usize>,
    pub length: f64,
    /// Label of each hop; one shorter than `hops`.
    pub modes: Vec<HopMode>,
    pub outcome: Outcome,
    pub hop_budget_used: usize,
}

impl PathTrace {
    pub fn delivered(&self) -> bool {
        self.outcome == Outcome::Delivered
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoutingError {
    #[error("node {0} does not exist")]
    UnknownNode(usize),
    #[error("node {0} lies inside a bounding box")]
    OutOfScope(usize),
    #[error("outer intersection points coincide")]
    CoincidentPoints,
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
}

/// Hop budget exhausted.
#[derive(Debug)]
struct OutOfBudget;

/// Accumulates hops of a route under a budget.
struct Walker<'a> {
    g: &'a LDelGraph,
    hops: Vec<usize>,
    modes: Vec<HopMode>,
    length: f64,
    budget: usize,
}

impl<'a> Walker<'a> {
    fn new(g: &'a LDelGraph, s: usize, budget: usize) -> Self {
        Self {
            g,
            hops: vec![s],
            modes: Vec::new(),
            length: 0.0,
            budget,
        }
    }

    fn at(&self) -> usize {
        *self.hops.last().expect("walker starts at a node")
    }

    fn pos(&self, v: usize) -> Point {
        self.g.pos(v)
    }

    fn push(&mut self, v: usize, mode: HopMode) -> Result<(), OutOfBudget> {
        if self.modes.len() >= self.budget {
            return Err(OutOfBudget);
        }
        debug_assert!(
            self.g.has_edge(self.at(), v),
            "hop {} -> {v} is not an edge",
            self.at()
        );
        self.length += self.pos(self.at()).dist(self.pos(v));
        self.hops.push(v);
        self.modes.push(mode);
        Ok(())
    }

    /// Walks `nodes` in order, skipping a leading copy of the current node.
    fn follow(
        &mut self,
        nodes: impl IntoIterator<Item = usize>,
        mode: HopMode,
    ) -> Result<(), OutOfBudget> {
        for v in nodes {
            if v != self.at() {
                self.push(v, mode)?;
            }
        }
        Ok(())
    }

    fn finish(self, outcome: Outcome) -> PathTrace {
        PathTrace {
            hop_budget_used: self.modes.len(),
            hops: self.hops,
            length: self.length,
            modes: self.modes,
            outcome,
        }
    }
}

fn check_node(g: &LDelGraph, v: usize) -> Result<(), RoutingError> {
    if v < g.node_count() {
        Ok(())
    } else {
        Err(RoutingError::UnknownNode(v))
    }
}

/// Neighbour strictly closer to `t` than `u`, closest first, lowest id on ties.
pub fn greedy_next(g: &LDelGraph, u: usize, t: Point) -> Option<usize> {
    let du = g.pos(u).dist(t);
    g.neighbors(u)
        .iter()
        .map(|&v| (v, g.pos(v).dist(t)))
        .filter(|&(_, d)| d < du - EPS)
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(v, _)| v)
}

/// Next half-edge on the face to the left of `h`.
pub fn face_step(g: &LDelGraph, h: usize) -> usize {
    g.embedding.next(h)
}

/// Greedy forwarding until `t` or a local minimum.
pub fn greedy_route(
    g: &LDelGraph,
    s: usize,
    t: usize,
    hop_budget: usize,
) -> Result<PathTrace, RoutingError> {
    check_node(g, s)?;
    check_node(g, t)?;
    let mut w = Walker::new(g, s, hop_budget);
    let tp = g.pos(t);
    while w.at() != t {
        match greedy_next(g, w.at(), tp) {
            Some(v) => {
                if w.push(v, HopMode::Greedy).is_err() {
                    return Ok(w.finish(Outcome::Failed(FailReason::Budget)));
                }
            }
            None => return Ok(w.finish(Outcome::Failed(FailReason::LocalMinimum))),
        }
    }
    Ok(w.finish(Outcome::Delivered))
}

/// Region that bounds a face exploration.
#[derive(Clone, Copy, Debug)]
enum Bound {
    Ellipse { f1: Point, f2: Point, major: f64 },
    Circle { center: Point, radius: f64 },
}

impl Bound {
    fn contains(&self, p: Point) -> bool {
        match *self {
            Bound::Ellipse { f1, f2, major } => p.dist(f1) + p.dist(f2) <= major + EPS,
            Bound::Circle { center, radius } => p.dist(center) <= radius + EPS,
        }
    }
}

enum Explored {
    /// Walker stands on `t` or on a node strictly closer to it than the start.
    Progress,
    /// Walker is back at the start; `hit` tells whether the bound was reached.
    Stuck { hit: bool },
}

/// Tracks nodes seen during one exploration.
struct Seen {
    t: Point,
    start_dist: f64,
    best: usize,
    best_dist: f64,
    closer: usize,
    other: usize,
}

impl Seen {
    fn new(start: usize, start_pos: Point, t: Point) -> Self {
        let d = start_pos.dist(t);
        Self {
            t,
            start_dist: d,
            best: start,
            best_dist: d,
            closer: 0,
            other: 0,
        }
    }

    /// Records `v`; true if it is strictly closer than the start.
    fn record(&mut self, v: usize, p: Point) -> bool {
        let d = p.dist(self.t);
        if d < self.best_dist - EPS || ((d - self.best_dist).abs() <= EPS && v < self.best) {
            self.best = v;
            self.best_dist = d;
        }
        let closer = d < self.start_dist - EPS;
        if closer {
            self.closer += 1;
        } else {
            self.other += 1;
        }
        closer
    }
}

fn path_length(g: &LDelGraph, nodes: &[usize]) -> f64 {
    nodes
        .windows(2)
        .map(|w| g.pos(w[0]).dist(g.pos(w[1])))
        .sum()
}

/// Explores the face cut by the segment from the current node to `t`, as in
/// adaptive face routing: walk one way until the bound is hit, come back and
/// walk the other way, then move to the node closest to `t`. With
/// `early = Some(sigma)` the walk stops at a closer node as soon as
/// `closer >= sigma * other`.
fn explore_face(
    w: &mut Walker<'_>,
    t: usize,
    bound: Bound,
    early: Option<f64>,
    mode: HopMode,
) -> Result<Explored, OutOfBudget> {
    let g = w.g;
    let emb = &g.embedding;
    let u = w.at();
    let tp = g.pos(t);
    let Some(h0) = emb.half_edge_toward(g.positions(), u, tp - g.pos(u)) else {
        return Ok(Explored::Stuck { hit: false });
    };
    let mut seen = Seen::new(u, g.pos(u), tp);
    let visit = |w: &mut Walker<'_>, v: usize, seen: &mut Seen| -> Result<bool, OutOfBudget> {
        w.push(v, mode)?;
        let closer = seen.record(v, g.pos(v));
        let stop = v == t
            || early.is_some_and(|sigma| closer && seen.closer as f64 >= sigma * seen.other as f64);
        Ok(stop)
    };

    let mut fwd = vec![u];
    let mut h = h0;
    let mut full = false;
    loop {
        let v = emb.target(h);
        if !bound.contains(g.pos(v)) {
            break;
        }
        if visit(w, v, &mut seen)? {
            return Ok(Explored::Progress);
        }
        fwd.push(v);
        h = emb.next(h);
        if h == h0 {
            full = true;
            break;
        }
    }

    if full {
        if seen.best == u {
            return Ok(Explored::Stuck { hit: false });
        }
        let i = fwd
            .iter()
            .position(|&v| v == seen.best)
            .expect("best was visited");
        let ahead = &fwd[..=i];
        let behind: Vec<usize> = fwd[i..].iter().rev().copied().collect();
        if path_length(g, ahead) <= path_length(g, &behind) {
            w.follow(ahead.iter().copied(), mode)?;
        } else {
            w.follow(behind, mode)?;
        }
        return Ok(Explored::Progress);
    }

    // Bound hit going forward: return and try the other way round.
    w.follow(fwd.iter().rev().copied(), mode)?;
    let mut bwd = vec![u];
    let first = emb.prev(h0);
    let mut hb = first;
    loop {
        let v = emb.origin(hb);
        if !bound.contains(g.pos(v)) {
            break;
        }
        if visit(w, v, &mut seen)? {
            return Ok(Explored::Progress);
        }
        bwd.push(v);
        hb = emb.prev(hb);
        if hb == first {
            break;
        }
    }
    let best = seen.best;
    if best == u {
        w.follow(bwd.iter().rev().copied(), mode)?;
        return Ok(Explored::Stuck { hit: true });
    }
    if let Some(j) = bwd.iter().position(|&v| v == best) {
        w.follow(bwd[j..].iter().rev().copied(), mode)?;
    } else {
        let i = fwd
            .iter()
            .position(|&v| v == best)
            .expect("best was visited");
        w.follow(bwd.iter().rev().copied(), mode)?;
        w.follow(fwd[..=i].iter().copied(), mode)?;
    }
    Ok(Explored::Progress)
}

/// Perimeter walk with face changes where an edge crosses the segment from
/// the last face-entry point to `t`, until a node closer to `t` than the
/// start is reached.
fn perimeter_walk(w: &mut Walker<'_>, t: usize, mode: HopMode) -> Result<Explored, OutOfBudget> {
    let g = w.g;
    let emb = &g.embedding;
    let m = w.at();
    let tp = g.pos(t);
    let dm = g.pos(m).dist(tp);
    let Some(mut h) = emb.half_edge_toward(g.positions(), m, tp - g.pos(m)) else {
        return Ok(Explored::Stuck { hit: false });
    };
    let mut entry = g.pos(m);
    let mut first = h;
    let limit = emb.half_edge_count() + 1;
    loop {
        let mut changes = 0;
        loop {
            let a = g.pos(emb.origin(h));
            let b = g.pos(emb.target(h));
            let cross = match (Segment::new(a, b), Segment::new(entry, tp)) {
                (Ok(e), Ok(line)) => match segments_intersect(&e, &line) {
                    Intersection::Crossing(p) | Intersection::Touching(p) => Some(p),
                    _ => None,
                },
                _ => None,
            };
            match cross {
                Some(p) if p.dist(tp) < entry.dist(tp) - EPS && changes < limit => {
                    entry = p;
                    h = emb.next(emb.twin(h));
                    first = h;
                    changes += 1;
                }
                _ => break,
            }
        }
        let v = emb.target(h);
        w.push(v, mode)?;
        if v == t || g.pos(v).dist(tp) < dm - EPS {
            return Ok(Explored::Progress);
        }
        h = emb.next(h);
        if h == first {
            return Ok(Explored::Stuck { hit: false });
        }
    }
}

/// Greedy forwarding to `t` or a local minimum.
fn greedy_walk(w: &mut Walker<'_>, t: usize, mode: HopMode) -> Result<(), OutOfBudget> {
    let tp = w.g.pos(t);
    while w.at() != t {
        match greedy_next(w.g, w.at(), tp) {
            Some(v) => w.push(v, mode)?,
            None => break,
        }
    }
    Ok(())
}

/// Face-routing variant.
#[derive(Clone, Copy, Debug, PartialEq)]
enum FaceVariant {
    Oafr,
    Goafr,
    GoafrFc,
    Gpsr,
}

/// Ellipse with foci `f1`, `f2` bounding a face exploration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipseState {
    pub f1: Point,
    pub f2: Point,
    pub major_axis: f64,
}

impl EllipseState {
    pub fn contains(&self, p: Point) -> bool {
        p.dist(self.f1) + p.dist(self.f2) <= self.major_axis + EPS
    }
}

fn face_family(
    g: &LDelGraph,
    s: usize,
    t: usize,
    hop_budget: usize,
    variant: FaceVariant,
) -> Result<(PathTrace, EllipseState), RoutingError> {
    check_node(g, s)?;
    check_node(g, t)?;
    let mut w = Walker::new(g, s, hop_budget);
    let (sp, tp) = (g.pos(s), g.pos(t));
    let mut major = 2.0 * sp.dist(tp);
    let mut run = |w: &mut Walker<'_>| -> Result<Outcome, OutOfBudget> {
        while w.at() != t {
            if variant != FaceVariant::Oafr {
                greedy_walk(w, t, HopMode::Greedy)?;
                if w.at() == t {
                    break;
                }
            }
            let stuck_free = if variant == FaceVariant::Gpsr {
                perimeter_walk(w, t, HopMode::Face)?
            } else {
                let early = (variant == FaceVariant::GoafrFc).then_some(0.0);
                loop {
                    let bound = Bound::Ellipse {
                        f1: sp,
                        f2: tp,
                        major,
                    };
                    match explore_face(w, t, bound, early, HopMode::Face)? {
                        Explored::Stuck { hit: true } => major *= 2.0,
                        Explored::Stuck { hit: false } => {
                            break perimeter_walk(w, t, HopMode::Face)?
                        }
                        done => break done,
                    }
                }
            };
            if let Explored::Stuck { .. } = stuck_free {
                return Ok(Outcome::Failed(FailReason::Unreachable));
            }
        }
        Ok(Outcome::Delivered)
    };
    let outcome = run(&mut w).unwrap_or(Outcome::Failed(FailReason::Budget));
    let ellipse = EllipseState {
        f1: sp,
        f2: tp,
        major_axis: major,
    };
    Ok((w.finish(outcome), ellipse))
}

/// Face routing bounded by an ellipse around `s` and `t` whose major axis
/// starts at twice their distance and doubles whenever a face yields no
/// progress inside it.
pub fn oafr_route(
    g: &LDelGraph,
    s: usize,
    t: usize,
    hop_budget: usize,
) -> Result<PathTrace, RoutingError> {
    oafr_route_with_ellipse(g, s, t, hop_budget).map(|r| r.0)
}

/// [`oafr_route`] together with the final ellipse.
pub fn oafr_route_with_ellipse(
    g: &LDelGraph,
    s: usize,
    t: usize,
    hop_budget: usize,
) -> Result<(PathTrace, EllipseState), RoutingError> {
    face_family(g, s, t, hop_budget, FaceVariant::Oafr)
}

/// Greedy, with one bounded face exploration per local minimum.
pub fn goafr_route(
    g: &LDelGraph,
    s: usize,
    t: usize,
    hop_budget: usize,
) -> Result<PathTrace, RoutingError> {
    face_family(g, s, t, hop_budget, FaceVariant::Goafr).map(|r| r.0)
}

/// As [`goafr_route`], falling back to greedy at the first closer node.
pub fn goafr_fc_route(
    g: &LDelGraph,
    s: usize,
    t: usize,
    hop_budget: usize,
) -> Result<PathTrace, RoutingError> {
    face_family(g, s, t, hop_budget, FaceVariant::GoafrFc).map(|r| r.0)
}

/// Greedy with unbounded perimeter recovery.
pub fn gpsr_route(
    g: &LDelGraph,
    s: usize,
    t: usize,
    hop_budget: usize,
) -> Result<PathTrace, RoutingError> {
    face_family(g, s, t, hop_budget, FaceVariant::Gpsr).map(|r| r.0)
}

/// GOAFR+ parameters: early fall-back factor and circle radius factors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoafrPlusParams {
    pub sigma: f64,
    pub rho0: f64,
    pub rho: f64,
}

impl Default for GoafrPlusParams {
    fn default() -> Self {
        Self {
            sigma: 0.5,
            rho0: 1.4,
            rho: 1.4,
        }
    }
}

fn goafr_plus_walk(
    w: &mut Walker<'_>,
    t: usize,
    params: GoafrPlusParams,
    greedy: HopMode,
    face: HopMode,
) -> Result<Outcome, OutOfBudget> {
    let g = w.g;
    let tp = g.pos(t);
    let mut radius = params.rho0 * g.pos(w.at()).dist(tp);
    while w.at() != t {
        if let Some(v) = greedy_next(g, w.at(), tp) {
            w.push(v, greedy)?;
            radius = (radius / params.rho).max(params.rho0 * g.pos(v).dist(tp));
            continue;
        }
        let res = loop {
            let bound = Bound::Circle { center: tp, radius };
            match explore_face(w, t, bound, Some(params.sigma), face)? {
                Explored::Stuck { hit: true } => radius *= params.rho,
                Explored::Stuck { hit: false } => break perimeter_walk(w, t, face)?,
                done => break done,
            }
        };
        if let Explored::Stuck { .. } = res {
            return Ok(Outcome::Failed(FailReason::Unreachable));
        }
    }
    Ok(Outcome::Delivered)
}

/// Greedy with circle-bounded face recovery that returns to greedy once
/// closer nodes make up a `sigma` share of the explored ones.
pub fn goafr_plus_route(
    g: &LDelGraph,
    s: usize,
    t: usize,
    hop_budget: usize,
    params: GoafrPlusParams,
) -> Result<PathTrace, RoutingError> {
    check_node(g, s)?;
    check_node(g, t)?;
    let mut w = Walker::new(g, s, hop_budget);
    let outcome = goafr_plus_walk(&mut w, t, params, HopMode::Greedy, HopMode::Face)
        .unwrap_or(Outcome::Failed(FailReason::Budget));
    Ok(w.finish(outcome))
}

/// Chord-arc forwarding toward `t`: go straight to `t` when adjacent;
/// otherwise pick the neighbour that gains distance to the goal point most
/// cheaply (hop length per unit of progress). The goal is the end of
/// `reference` while one exists and progress toward it is possible, then
/// `t` itself. Returns whether `t` was reached.
fn chord_arc_walk(
    w: &mut Walker<'_>,
    t: usize,
    reference: Option<Segment>,
    mode: HopMode,
    mut stop: impl FnMut(usize, usize) -> bool,
) -> Result<ChordArcEnd, OutOfBudget> {
    let g = w.g;
    let tp = g.pos(t);
    let mut goal = reference.map_or(tp, |r| r.b);
    loop {
        let u = w.at();
        if u == t {
            return Ok(ChordArcEnd::Reached);
        }
        if g.has_edge(u, t) {
            if stop(u, t) {
                return Ok(ChordArcEnd::Stopped);
            }
            w.push(t, mode)?;
            continue;
        }
        let up = g.pos(u);
        let du = up.dist(goal);
        let next = g
            .neighbors(u)
            .iter()
            .filter_map(|&v| {
                let gain = du - g.pos(v).dist(goal);
                (gain > EPS).then(|| (v, up.dist(g.pos(v)) / gain))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        match next {
            Some((v, _)) => {
                if stop(u, v) {
                    return Ok(ChordArcEnd::Stopped);
                }
                w.push(v, mode)?;
            }
            None if goal != tp => goal = tp,
            None => return Ok(ChordArcEnd::Stuck),
        }
    }
}

enum ChordArcEnd {
    Reached,
    Stuck,
    /// The caller's stop predicate fired before the hop was taken.
    Stopped,
}

/// Chord-arc routing between mutually visible nodes; `reference` replaces
/// the segment `s t` in every geometric test when given.
pub fn chord_arc_route(
    g: &LDelGraph,
    holes: &[Polygon],
    s: usize,
    t: usize,
    reference: Option<Segment>,
    hop_budget: usize,
) -> Result<PathTrace, RoutingError> {
    check_node(g, s)?;
    check_node(g, t)?;
    let mut w = Walker::new(g, s, hop_budget);
    let line = reference.or_else(|| Segment::new(g.pos(s), g.pos(t)).ok());
    if let Some(line) = line {
        if holes.iter().any(|h| segment_enters_polygon(&line, h)) {
            return Ok(w.finish(Outcome::Failed(FailReason::Visibility)));
        }
    }
    let outcome = match chord_arc_walk(&mut w, t, reference, HopMode::ChordArc, |_, _| false) {
        Ok(ChordArcEnd::Reached) => Outcome::Delivered,
        Ok(_) => Outcome::Failed(FailReason::LocalMinimum),
        Err(OutOfBudget) => Outcome::Failed(FailReason::Budget),
    };
    Ok(w.finish(outcome))
}

/// Why no crossing polyline exists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum PicFailure {
    #[error("convex hulls of the two holes overlap")]
    HullsOverlap,
    #[error("every boundary path of the overlap stays blocked by a hull")]
    NoPath,
    #[error("outer intersection points coincide")]
    Coincident,
}

/// Polyline from `o1` to `o2` through the overlap of two boxes that enters
/// neither hole's convex hull: the shortest such path inside the overlap
/// rectangle. Wherever the staircase along a box edge, the hull and the other
/// box edge exists, this path is at most as long, hence within
/// `sqrt 2 |o1 o2|`.
pub fn pic_polyline(
    a: &HoleAbstraction,
    b: &HoleAbstraction,
    o1: Point,
    o2: Point,
) -> Result<Vec<Point>, PicFailure> {
    if o1.approx_eq(o2) {
        return Err(PicFailure::Coincident);
    }
    if polygons_overlap(&a.hull, &b.hull) {
        return Err(PicFailure::HullsOverlap);
    }
    let r = Rect::new(
        a.bbox.min_x.max(b.bbox.min_x),
        a.bbox.max_x.min(b.bbox.max_x),
        a.bbox.min_y.max(b.bbox.min_y),
        a.bbox.max_y.min(b.bbox.max_y),
    )
    .map_err(|_| PicFailure::NoPath)?;
    shortest_path_in_region(&[&a.hull, &b.hull], &[r], &r.corners(), o1, o2)
        .map(|(_, path)| path)
        .ok_or(PicFailure::NoPath)
}

/// Follows `legs` (consecutive polyline points) with chord-arc, each leg
/// targeting the node nearest to its end; GOAFR+ takes over a stuck leg.
fn follow_polyline(
    w: &mut Walker<'_>,
    legs: &[Point],
    last: usize,
    mode: HopMode,
    params: GoafrPlusParams,
) -> Result<Outcome, OutOfBudget> {
    let g = w.g;
    for (k, leg) in legs.windows(2).enumerate() {
        let target = if k + 2 == legs.len() {
            last
        } else {
            nearest_node(leg[1], g.positions()).expect("non-empty network")
        };
        if w.at() == target {
            continue;
        }
        let reference = Segment::new(leg[0], leg[1]).ok();
        leg_to(w, target, reference, mode, params)?;
    }
    Ok(Outcome::Delivered)
}

/// Chord-arc to `target` with GOAFR+ recovery.
fn leg_to(
    w: &mut Walker<'_>,
    target: usize,
    reference: Option<Segment>,
    mode: HopMode,
    params: GoafrPlusParams,
) -> Result<(), OutOfBudget> {
    if let ChordArcEnd::Reached = chord_arc_walk(w, target, reference, mode, |_, _| false)? {
        return Ok(());
    }
    match goafr_plus_walk(w, target, params, HopMode::GoafrPlus, HopMode::GoafrPlus)? {
        Outcome::Delivered => Ok(()),
        // Face recovery only fails on disconnected graphs; the budget then
        // runs out in the caller's loop anyway.
        Outcome::Failed(_) => Err(OutOfBudget),
    }
}

/// Network route between the nodes nearest to two outer intersection points
/// along the crossing polyline.
pub fn pic_route(
    g: &LDelGraph,
    a: &HoleAbstraction,
    b: &HoleAbstraction,
    o1: Point,
    o2: Point,
    hop_budget: usize,
) -> Result<PathTrace, RoutingError> {
    if o1.approx_eq(o2) {
        return Err(RoutingError::CoincidentPoints);
    }
    let s = nearest_node(o1, g.positions()).map_err(AbstractionError::from)?;
    let t = nearest_node(o2, g.positions()).map_err(AbstractionError::from)?;
    let mut w = Walker::new(g, s, hop_budget);
    let outcome = match pic_polyline(a, b, o1, o2) {
        Err(_) => Outcome::Failed(FailReason::Hypothesis),
        Ok(poly) => follow_polyline(&mut w, &poly, t, HopMode::Pic, GoafrPlusParams::default())
            .unwrap_or(Outcome::Failed(FailReason::Budget)),
    };
    Ok(w.finish(outcome))
}

/// Distance within which a node outside a box counts as sitting on its edge.
pub const BOUNDARY_MARGIN: f64 = 0.5;

/// Precomputed per-instance state of the bounding-box router.
#[derive(Clone, Debug)]
pub struct BbrContext {
    pub abstractions: Vec<HoleAbstraction>,
    pub graph: BoxGraph,
    /// Boxes each node is marked for (near the edge, or a representative).
    pub marks: Vec<Vec<usize>>,
    /// Network node standing in for each box-graph vertex.
    pub vertex_nodes: Vec<usize>,
    pub params: GoafrPlusParams,
}

impl BbrContext {
    pub fn new(
        g: &LDelGraph,
        abstractions: Vec<HoleAbstraction>,
        mode: WeightMode,
        params: GoafrPlusParams,
    ) -> Result<Self, RoutingError> {
        let graph = build_modified_bbvg(&abstractions, mode)?;
        let mut marks = vec![Vec::new(); g.node_count()];
        for (i, a) in abstractions.iter().enumerate() {
            let r = &a.bbox;
            for (v, p) in g.positions().iter().enumerate() {
                let near = !r.contains_strict(*p) && r.boundary_distance(*p) <= BOUNDARY_MARGIN;
                if near || a.representatives.contains(&v) {
                    marks[v].push(i);
                }
            }
        }
        let vertex_nodes = graph
            .vertices
            .iter()
            .map(|v| match v.kind {
                VertexKind::Corner { obstacle, role } => {
                    Ok(abstractions[obstacle].representatives[role.index()])
                }
                _ => nearest_node(v.pos, g.positions()).map_err(AbstractionError::from),
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            abstractions,
            graph,
            marks,
            vertex_nodes,
            params,
        })
    }

    fn rects(&self) -> &[Rect] {
        self.graph.rects()
    }

    /// Box in the way of `p -> t` that node `u` is marked for.
    fn blocking_box(&self, u: usize, p: Point, t: Point) -> Option<usize> {
        let seg = Segment::new(p, t).ok()?;
        self.marks[u]
            .iter()
            .copied()
            .find(|&i| crate::geom::segment_intersects_rect(&seg, &self.rects()[i]))
    }

    /// Kept corner whose representative is closest to `p`: corners of box
    /// `hit` first, otherwise any corner of its component.
    fn redirect_vertex(&self, g: &LDelGraph, hit: usize, p: Point) -> Option<usize> {
        let comp = self.graph.component_of[hit];
        let corners: Vec<(usize, usize)> = self
            .graph
            .component_vertices(comp)
            .into_iter()
            .filter_map(|v| match self.graph.vertices[v].kind {
                VertexKind::Corner { obstacle, .. } => Some((v, obstacle)),
                _ => None,
            })
            .collect();
        let own: Vec<usize> = corners.iter().filter(|c| c.1 == hit).map(|c| c.0).collect();
        let pool = if own.is_empty() {
            corners.iter().map(|c| c.0).collect()
        } else {
            own
        };
        pool.into_iter().min_by(|&x, &y| {
            let dx = g.pos(self.vertex_nodes[x]).dist(p);
            let dy = g.pos(self.vertex_nodes[y]).dist(p);
            dx.total_cmp(&dy).then(x.cmp(&y))
        })
    }

    /// First box whose interior the hop `p -> q` enters.
    fn crossed_box(&self, p: Point, q: Point) -> Option<usize> {
        let seg = Segment::new(p, q).ok()?;
        self.rects()
            .iter()
            .position(|r| crate::geom::segment_intersects_rect(&seg, r))
    }
}

/// Bounding-box routing: optimistic chord-arc toward `t`; on reaching a box
/// edge in the way, detour to the closest representative of that box's
/// component and follow the shortest box-graph path from there.
pub fn bbr_route(
    g: &LDelGraph,
    ctx: &BbrContext,
    s: usize,
    t: usize,
    hop_budget: usize,
) -> Result<PathTrace, RoutingError> {
    check_node(g, s)?;
    check_node(g, t)?;
    for v in [s, t] {
        if ctx.rects().iter().any(|r| r.contains_closed(g.pos(v))) {
            return Err(RoutingError::OutOfScope(v));
        }
    }
    let mut w = Walker::new(g, s, hop_budget);
    let outcome = match bbr_walk(&mut w, ctx, t) {
        Ok(o) => o,
        Err(OutOfBudget) => Outcome::Failed(FailReason::Budget),
    };
    Ok(w.finish(outcome))
}

fn bbr_walk(w: &mut Walker<'_>, ctx: &BbrContext, t: usize) -> Result<Outcome, OutOfBudget> {
    let g = w.g;
    let tp = g.pos(t);
    let mut event: Option<usize> = None;
    let end = chord_arc_walk(w, t, None, HopMode::ChordArc, |u, v| {
        let up = g.pos(u);
        event = ctx
            .blocking_box(u, up, tp)
            .or_else(|| ctx.crossed_box(up, g.pos(v)));
        event.is_some()
    })?;
    match end {
        ChordArcEnd::Reached => return Ok(Outcome::Delivered),
        ChordArcEnd::Stuck => {
            // Local minimum without a box event: plain recovery.
            return goafr_plus_walk(w, t, ctx.params, HopMode::GoafrPlus, HopMode::GoafrPlus);
        }
        ChordArcEnd::Stopped => {}
    }
    let hit = event.expect("stop predicate recorded the box");
    let Some(start) = ctx.redirect_vertex(g, hit, g.pos(w.at())) else {
        return goafr_plus_walk(w, t, ctx.params, HopMode::GoafrPlus, HopMode::GoafrPlus);
    };
    let here = g.pos(w.at());
    let rep = ctx.vertex_nodes[start];
    if w.at() != rep {
        let axis = Segment::new(here, ctx.graph.vertices[start].pos).ok();
        leg_to(w, rep, axis, HopMode::Redirect, ctx.params)?;
    }

    let view = ctx.graph.with_query(ctx.graph.vertices[start].pos, tp);
    let Ok(path) = shortest_path_from(&view, start) else {
        return goafr_plus_walk(w, t, ctx.params, HopMode::GoafrPlus, HopMode::GoafrPlus);
    };
    for (k, kind) in path.edge_kinds.iter().enumerate() {
        let (va, vb) = (path.vertices[k], path.vertices[k + 1]);
        let (pa, pb) = (view.pos(va), view.pos(vb));
        let target = if vb == view.target() {
            t
        } else {
            ctx.vertex_nodes[vb]
        };
        match *kind {
            EdgeKind::Visibility => {
                if w.at() != target {
                    leg_to(
                        w,
                        target,
                        Segment::new(pa, pb).ok(),
                        HopMode::ChordArc,
                        ctx.params,
                    )?;
                }
            }
            EdgeKind::Clique { component } => {
                clique_leg(w, ctx, component, pa, pb, target)?;
            }
        }
    }
    if w.at() != t {
        leg_to(w, t, None, HopMode::ChordArc, ctx.params)?;
    }
    Ok(Outcome::Delivered)
}

/// Crossing of an intersection component between two outer points.
fn clique_leg(
    w: &mut Walker<'_>,
    ctx: &BbrContext,
    component: usize,
    pa: Point,
    pb: Point,
    target: usize,
) -> Result<(), OutOfBudget> {
    let members = &ctx.graph.components[component];
    let recover = |w: &mut Walker<'_>| -> Result<(), OutOfBudget> {
        match goafr_plus_walk(
            w,
            target,
            ctx.params,
            HopMode::GoafrPlus,
            HopMode::GoafrPlus,
        )? {
            Outcome::Delivered => Ok(()),
            Outcome::Failed(_) => Err(OutOfBudget),
        }
    };
    match ctx.graph.mode {
        Some(WeightMode::Sqrt2) if members.len() == 2 => {
            let (a, b) = (&ctx.abstractions[members[0]], &ctx.abstractions[members[1]]);
            match pic_polyline(a, b, pa, pb) {
                Ok(poly) => {
                    follow_polyline(w, &poly, target, HopMode::Pic, ctx.params)?;
                    Ok(())
                }
                Err(_) => recover(w),
            }
        }
        Some(WeightMode::Exact) => {
            let polys: Vec<&Polygon> = members
                .iter()
                .map(|&i| &ctx.abstractions[i].polygon)
                .collect();
            let region: Vec<Rect> = members.iter().map(|&i| ctx.rects()[i]).collect();
            let extra: Vec<Point> = ctx.graph.outer_points[component]
                .iter()
                .map(|&v| ctx.graph.vertices[v].pos)
                .collect();
            match shortest_path_in_region(&polys, &region, &extra, pa, pb) {
                Some((_, bends)) => {
                    follow_polyline(w, &bends, target, HopMode::ChordArc, ctx.params)?;
                    Ok(())
                }
                None => recover(w),
            }
        }
        _ => recover(w),
    }
}
