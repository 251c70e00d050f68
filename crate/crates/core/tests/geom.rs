use approx::assert_abs_diff_eq;
use holeroute::geom::{
    circumcircle, convex_hull, dist, nearest_node, point_in_polygon, segment_intersects_rect,
    segments_intersect, GeomError, Intersection, Point, Polygon, Rect, Segment,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

fn seg(a: (f64, f64), b: (f64, f64)) -> Segment {
    Segment::new(p(a.0, a.1), p(b.0, b.1)).unwrap()
}

#[test]
fn distances() {
    assert_eq!(dist(p(0.0, 0.0), p(3.0, 4.0)), 5.0);
    assert_eq!(dist(p(1.0, 1.0), p(1.0, 1.0)), 0.0);
    assert_abs_diff_eq!(dist(p(0.0, 0.0), p(1.0, 1.0)), 2f64.sqrt(), epsilon = 1e-15);
}

#[test]
fn segment_intersection_kinds() {
    match segments_intersect(&seg((0.0, 0.0), (2.0, 2.0)), &seg((0.0, 2.0), (2.0, 0.0))) {
        Intersection::Crossing(q) => assert!(q.approx_eq(p(1.0, 1.0))),
        other => panic!("expected a crossing, got {other:?}"),
    }
    assert_eq!(
        segments_intersect(&seg((0.0, 0.0), (1.0, 0.0)), &seg((2.0, 0.0), (3.0, 0.0))),
        Intersection::Disjoint
    );
    assert_eq!(
        segments_intersect(&seg((0.0, 0.0), (2.0, 0.0)), &seg((1.0, 0.0), (3.0, 0.0))),
        Intersection::Overlap
    );
    assert_eq!(
        Segment::new(p(1.0, 1.0), p(1.0, 1.0)),
        Err(GeomError::DegenerateSegment)
    );
}

#[test]
fn rect_intersection_ignores_grazing() {
    let r = Rect::new(0.0, 2.0, 0.0, 2.0).unwrap();
    assert!(segment_intersects_rect(&seg((-1.0, 1.0), (3.0, 1.0)), &r));
    assert!(!segment_intersects_rect(&seg((-1.0, 3.0), (3.0, 3.0)), &r));
    assert!(!segment_intersects_rect(&seg((0.0, 2.0), (2.0, 2.0)), &r));
    assert!(Rect::new(1.0, 1.0, 0.0, 2.0).is_err());
}

#[test]
fn polygon_membership_excludes_boundary() {
    let sq = Polygon::new(vec![p(0.0, 0.0), p(3.0, 0.0), p(3.0, 3.0), p(0.0, 3.0)]).unwrap();
    assert!(point_in_polygon(p(1.0, 1.0), &sq));
    assert!(!point_in_polygon(p(5.0, 5.0), &sq));
    assert!(!point_in_polygon(p(0.0, 0.0), &sq));
}

#[test]
fn circumcircles() {
    let (c, r) = circumcircle(p(0.0, 0.0), p(2.0, 0.0), p(0.0, 2.0)).unwrap();
    assert!(c.approx_eq(p(1.0, 1.0)));
    assert_abs_diff_eq!(r, 2f64.sqrt(), epsilon = 1e-12);
    let h = 3f64.sqrt();
    let (c, r) = circumcircle(p(0.0, 0.0), p(1.0, 0.0), p(0.5, h / 2.0)).unwrap();
    assert!(c.approx_eq(p(0.5, h / 6.0)));
    assert_abs_diff_eq!(r, h / 3.0, epsilon = 1e-12);
    assert_eq!(
        circumcircle(p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)),
        Err(GeomError::DegenerateTriangle)
    );
}

#[test]
fn hull_examples() {
    let pts = [
        p(0.0, 0.0),
        p(2.0, 0.0),
        p(2.0, 2.0),
        p(0.0, 2.0),
        p(1.0, 1.0),
    ];
    let hull = convex_hull(&pts).unwrap();
    assert_eq!(hull.len(), 4);
    assert!(!hull.vertices().contains(&p(1.0, 1.0)));
    assert_eq!(convex_hull(&pts[..3]).unwrap().len(), 3);
    assert_eq!(convex_hull(&pts[..2]), Err(GeomError::TooFewPoints(2)));
    assert_eq!(
        convex_hull(&[p(0.0, 0.0), p(1.0, 1.0), p(2.0, 2.0)]),
        Err(GeomError::Collinear)
    );
}

/// A point is a hull vertex iff some other point sees all remaining points
/// strictly on one side of the line through the two.
fn brute_hull_vertices(pts: &[Point]) -> Vec<Point> {
    let side = |a: Point, b: Point, c: Point| (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    (0..pts.len())
        .filter(|&i| {
            (0..pts.len()).any(|j| {
                let others = || (0..pts.len()).filter(move |&k| k != i && k != j);
                j != i
                    && (others().all(|k| side(pts[i], pts[j], pts[k]) > 0.0)
                        || others().all(|k| side(pts[i], pts[j], pts[k]) < 0.0))
            })
        })
        .map(|i| pts[i])
        .collect()
}

#[test]
fn hull_matches_brute_force_on_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let pts: Vec<Point> = (0..50).map(|_| p(rng.random(), rng.random())).collect();
        let hull = convex_hull(&pts).unwrap();
        let v = hull.vertices();
        for k in 0..v.len() {
            let (a, b) = (v[k], v[(k + 1) % v.len()]);
            for &q in &pts {
                assert!((b - a).cross(q - a) >= -1e-12, "point right of a hull edge");
            }
        }
        let mut want = brute_hull_vertices(&pts);
        let mut got = v.to_vec();
        let key = |q: &Point| (q.x.to_bits(), q.y.to_bits());
        want.sort_by_key(key);
        got.sort_by_key(key);
        assert_eq!(got, want);
    }
}

#[test]
fn nearest_node_examples() {
    let nodes = [p(0.0, 0.0), p(2.0, 0.0), p(1.0, 2.0)];
    assert_eq!(nearest_node(p(0.9, 1.8), &nodes), Ok(2));
    let four = [p(0.0, 0.0), p(2.0, 0.0), p(1.0, 2.0), p(7.0, 7.0)];
    assert_eq!(nearest_node(p(7.0, 7.0), &four), Ok(3));
    assert_eq!(
        nearest_node(p(0.0, 0.0), &[]),
        Err(GeomError::EmptyNodeList)
    );
}

#[test]
fn nearest_node_matches_linear_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let nodes: Vec<Point> = (0..100).map(|_| p(rng.random(), rng.random())).collect();
    for _ in 0..100 {
        let q = p(rng.random(), rng.random());
        let mut best = 0;
        for (i, n) in nodes.iter().enumerate() {
            if q.dist(*n) < q.dist(nodes[best]) {
                best = i;
            }
        }
        assert_eq!(nearest_node(q, &nodes), Ok(best));
    }
}
