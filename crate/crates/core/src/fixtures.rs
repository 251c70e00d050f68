//! Constructed scenes: the lower-bound layout, equality cases and random
//! obstacle scenes used by tests and the CLI.

use crate::abstraction::Scene;
use crate::geom::{polygons_overlap, Point, Polygon, Rect};
use rand::Rng;

/// Star-shaped polygon whose bounding box is exactly `r`: one vertex on each
/// side plus up to `extra` interior vertices, sorted by angle about the center.
pub fn random_obstacle<R: Rng>(rng: &mut R, r: &Rect, extra: usize) -> Polygon {
    let c = Point::new(0.5 * (r.min_x + r.max_x), 0.5 * (r.min_y + r.max_y));
    let fx = |t: f64| r.min_x + (0.1 + 0.8 * t) * r.width();
    let fy = |t: f64| r.min_y + (0.1 + 0.8 * t) * r.height();
    let mut pts = vec![
        Point::new(fx(rng.random()), r.min_y),
        Point::new(r.max_x, fy(rng.random())),
        Point::new(fx(rng.random()), r.max_y),
        Point::new(r.min_x, fy(rng.random())),
    ];
    for _ in 0..rng.random_range(0..=extra) {
        pts.push(Point::new(fx(rng.random()), fy(rng.random())));
    }
    pts.sort_by(|a, b| (*a - c).angle().total_cmp(&(*b - c).angle()));
    Polygon::new(pts).expect("star polygon around the box center has area")
}

fn random_rect<R: Rng>(rng: &mut R, area: f64, min_side: f64, max_side: f64) -> Rect {
    let w = rng.random_range(min_side..max_side);
    let h = rng.random_range(min_side..max_side);
    let x = rng.random_range(0.0..area - w);
    let y = rng.random_range(0.0..area - h);
    Rect::new(x, x + w, y, y + h).expect("positive sides")
}

/// Uniform point in `[lo, hi]^2` outside every closed rect.
pub fn random_free_point<R: Rng>(rng: &mut R, rects: &[Rect], lo: f64, hi: f64) -> Point {
    loop {
        let p = Point::new(rng.random_range(lo..hi), rng.random_range(lo..hi));
        if !rects.iter().any(|r| r.contains_closed(p)) {
            return p;
        }
    }
}

/// One obstacle in `[0, 10]^2` with free query points in `[-2, 12]^2`.
pub fn random_single_box_scene<R: Rng>(rng: &mut R) -> Scene {
    let r = random_rect(rng, 10.0, 1.0, 8.0);
    let hole = random_obstacle(rng, &r, 6);
    Scene {
        source: Some(random_free_point(rng, &[r], -2.0, 12.0)),
        target: Some(random_free_point(rng, &[r], -2.0, 12.0)),
        holes: vec![hole],
    }
}

/// `count` obstacles with pairwise disjoint closed boxes in `[0, 20]^2`.
pub fn random_disjoint_scene<R: Rng>(rng: &mut R, count: usize) -> Scene {
    let mut rects: Vec<Rect> = Vec::new();
    while rects.len() < count {
        let r = random_rect(rng, 20.0, 0.5, 5.0);
        let clear = rects.iter().all(|o| {
            r.max_x < o.min_x || o.max_x < r.min_x || r.max_y < o.min_y || o.max_y < r.min_y
        });
        if clear {
            rects.push(r);
        }
    }
    let holes = rects.iter().map(|r| random_obstacle(rng, r, 6)).collect();
    Scene {
        source: Some(random_free_point(rng, &rects, -2.0, 22.0)),
        target: Some(random_free_point(rng, &rects, -2.0, 22.0)),
        holes,
    }
}

/// Obstacle inside `r` that stays clear of every polygon in `taken`.
fn disjoint_obstacle<R: Rng>(rng: &mut R, r: &Rect, taken: &[Polygon]) -> Option<Polygon> {
    (0..200).map(|_| random_obstacle(rng, r, 3)).find(|p| {
        taken
            .iter()
            .all(|q| !polygons_overlap(p, q) && !touches(p, q))
    })
}

fn touches(a: &Polygon, b: &Polygon) -> bool {
    a.edges().any(|ea| {
        b.edges().any(|eb| {
            crate::geom::segments_intersect(&ea, &eb) != crate::geom::Intersection::Disjoint
        })
    })
}

/// Two or three boxes overlapping in a chain, with pairwise disjoint holes,
/// plus free query points on opposite sides.
pub fn random_overlapping_scene<R: Rng>(rng: &mut R) -> Scene {
    loop {
        let count = rng.random_range(2..=3);
        let mut rects = vec![random_rect(rng, 10.0, 2.0, 6.0)];
        while rects.len() < count {
            let prev = *rects.last().expect("non-empty");
            let w = rng.random_range(2.0..6.0);
            let h = rng.random_range(2.0..6.0);
            // Anchor the new box so that it overlaps the previous one.
            let x = rng.random_range(prev.min_x - w + 0.5..prev.max_x - 0.5);
            let y = rng.random_range(prev.min_y - h + 0.5..prev.max_y - 0.5);
            let r = Rect::new(x, x + w, y, y + h).expect("positive sides");
            if r.overlaps(&prev) && !r.contains_rect(&prev) && !prev.contains_rect(&r) {
                rects.push(r);
            }
        }
        let mut holes: Vec<Polygon> = Vec::new();
        for r in &rects {
            match disjoint_obstacle(rng, r, &holes) {
                Some(p) => holes.push(p),
                None => break,
            }
        }
        if holes.len() < rects.len() {
            continue;
        }
        let lo = rects
            .iter()
            .map(|r| r.min_x.min(r.min_y))
            .fold(f64::INFINITY, f64::min)
            - 3.0;
        let hi = rects
            .iter()
            .map(|r| r.max_x.max(r.max_y))
            .fold(f64::NEG_INFINITY, f64::max)
            + 3.0;
        return Scene {
            source: Some(random_free_point(rng, &rects, lo, hi)),
            target: Some(random_free_point(rng, &rects, lo, hi)),
            holes,
        };
    }
}

/// Two boxes overlapping at one corner each, holes with disjoint convex hulls,
/// rotated by a random number of quarter turns.
pub fn random_corner_overlap_scene<R: Rng>(rng: &mut R) -> Scene {
    loop {
        // Upper-left box and a lower-right box covering its bottom-right corner.
        let uw = rng.random_range(2.0..6.0);
        let uh = rng.random_range(2.0..6.0);
        let upper = Rect::new(0.0, uw, 0.0, uh).expect("positive");
        let lower = Rect::new(
            rng.random_range(0.2..0.8) * uw,
            uw + rng.random_range(0.5..6.0),
            -rng.random_range(0.5..6.0),
            rng.random_range(0.2..0.8) * uh,
        )
        .expect("positive");
        let Some(hu) = disjoint_obstacle(rng, &upper, &[]) else {
            continue;
        };
        let hl = (0..200).map(|_| random_obstacle(rng, &lower, 3)).find(|p| {
            let (a, b) = (
                crate::geom::convex_hull(p.vertices()).expect("hull"),
                crate::geom::convex_hull(hu.vertices()).expect("hull"),
            );
            !polygons_overlap(&a, &b) && !touches(&a, &b)
        });
        let Some(hl) = hl else { continue };
        let turns = rng.random_range(0..4u8);
        let rot = |p: &Polygon| {
            Polygon::new(
                p.vertices()
                    .iter()
                    .map(|q| q.rotate_quarter(turns))
                    .collect(),
            )
            .expect("rotation keeps area")
        };
        return Scene {
            holes: vec![rot(&hu), rot(&hl)],
            source: None,
            target: None,
        };
    }
}

/// The layout showing that the modified visibility graph can be about
/// `2 sqrt 2` times longer than a straight connection.
///
/// A tall box of width `x` holds a diamond-shaped hole; a thin box of width 1
/// whose hole fills it pokes `x - 1` units into it from below. Source and
/// target sit below, `x - 1` away from the two crossing points, placed so
/// that they are exactly `sqrt(2) x` apart.
#[derive(Clone, Debug)]
pub struct LowerBoundFixture {
    pub x: f64,
    pub scene: Scene,
    pub o1: Point,
    pub o2: Point,
}

pub fn lower_bound(x: f64) -> LowerBoundFixture {
    assert!(x > 2.0, "lower-bound layout needs x > 2");
    let tall = 100.0 * x;
    let diamond = Polygon::new(vec![
        Point::new(0.0, 0.5 * tall),
        Point::new(0.05 * x, 0.0),
        Point::new(x, 0.5 * tall),
        Point::new(0.5 * x, tall),
    ])
    .expect("diamond");
    let (l, r) = (0.5 * x - 0.5, 0.5 * x + 0.5);
    let spike = Polygon::new(vec![
        Point::new(l, -tall),
        Point::new(r, -tall),
        Point::new(r, x - 1.0),
        Point::new(l, x - 1.0),
    ])
    .expect("rectangle");
    let o1 = Point::new(l, 0.0);
    let o2 = Point::new(r, 0.0);
    let reach = x - 1.0;
    let cos = (std::f64::consts::SQRT_2 * x - 1.0) / (2.0 * reach);
    let sin = (1.0 - cos * cos).sqrt();
    let s = o1 + Point::new(-cos, -sin) * reach;
    let t = o2 + Point::new(cos, -sin) * reach;
    LowerBoundFixture {
        x,
        scene: Scene {
            holes: vec![diamond, spike],
            source: Some(s),
            target: Some(t),
        },
        o1,
        o2,
    }
}

/// A unit box whose triangular hole has the box diagonal as an edge, with
/// source and target at the ends of that diagonal.
pub fn coinciding_box() -> Scene {
    Scene {
        holes: vec![Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
        ])
        .expect("triangle")],
        source: Some(Point::new(0.0, 0.0)),
        target: Some(Point::new(1.0, 1.0)),
    }
}

/// Lengths measured on the lower-bound layout.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LowerBoundReport {
    /// Shortest source-target path in the exactly weighted modified box graph.
    pub path: f64,
    pub straight: f64,
    pub ratio: f64,
}

pub fn lower_bound_report(
    x: f64,
) -> Result<LowerBoundReport, crate::abstraction::AbstractionError> {
    use crate::abstraction::{build_modified_bbvg, shortest_path_vg, WeightMode};
    let fx = lower_bound(x);
    let (s, t) = (
        fx.scene.source.expect("fixture has a source"),
        fx.scene.target.expect("fixture has a target"),
    );
    let g = build_modified_bbvg(&fx.scene.abstractions()?, WeightMode::Exact)?;
    let path = shortest_path_vg(&g.with_query(s, t))?.length;
    let straight = s.dist(t);
    Ok(LowerBoundReport {
        path,
        straight,
        ratio: path / straight,
    })
}
