mod common;

use common::p;
use holeroute::abstraction::{compute_abstraction, HoleAbstraction};
use holeroute::geom::{Point, Rect};
use holeroute::netgen::{generate_udg, NetworkInstance};
use holeroute::overlay::{
    ceil_log2, elect_leader_and_disseminate, run_hole_aggregation, simulate_setup, Extent,
    OverlayError, Payload, RoundSim, AGGREGATION_SLACK, MAX_MESSAGE_WORDS, STORAGE_SLACK,
};
use holeroute::topology::{build_ldel2, detect_holes};

/// `h` nodes on a circle, each adjacent to its two ring neighbours only.
fn ring(h: usize, radius: f64) -> (Vec<Point>, Vec<Vec<usize>>, Vec<usize>) {
    let pts = (0..h)
        .map(|i| {
            let a = i as f64 * std::f64::consts::TAU / h as f64 + 0.1;
            p(radius * a.cos(), radius * a.sin())
        })
        .collect();
    let adj = (0..h).map(|i| vec![(i + h - 1) % h, (i + 1) % h]).collect();
    (pts, adj, (0..h).collect())
}

fn scan_box(pts: &[Point]) -> Rect {
    let min_x = pts.iter().map(|q| q.x).fold(f64::INFINITY, f64::min);
    let max_x = pts.iter().map(|q| q.x).fold(f64::NEG_INFINITY, f64::max);
    let min_y = pts.iter().map(|q| q.y).fold(f64::INFINITY, f64::min);
    let max_y = pts.iter().map(|q| q.y).fold(f64::NEG_INFINITY, f64::max);
    Rect::new(min_x, max_x, min_y, max_y).unwrap()
}

fn round_bound(h: usize) -> u32 {
    2 * ceil_log2(h) + AGGREGATION_SLACK
}

#[test]
fn ceil_log2_values() {
    assert_eq!(
        [1, 2, 3, 4, 5, 64, 65, 1024].map(ceil_log2),
        [0, 1, 2, 2, 3, 6, 7, 10]
    );
}

#[test]
fn four_node_hole_matches_centralized_box() {
    let pts = vec![p(0.0, 0.0), p(0.9, 0.1), p(1.0, 0.8), p(0.2, 0.95)];
    let net = NetworkInstance::from_points(pts.clone(), 2.0, 1.0, 0);
    let mut sim = RoundSim::for_network(&net);
    let agg = run_hole_aggregation(&mut sim, &[vec![0, 1, 2, 3]]).unwrap();
    assert!(agg.stats.rounds <= round_bound(4), "{}", agg.stats.rounds);
    assert_eq!(agg.boxes, vec![scan_box(&pts)]);
    let hole = holeroute::topology::Hole {
        id: 0,
        cycle: vec![0, 1, 2, 3],
        kind: holeroute::topology::HoleKind::Inner,
        perimeter_length: 0.0,
    };
    assert_eq!(agg.boxes[0], compute_abstraction(&hole, &net).unwrap().bbox);
    for u in 0..4 {
        assert_eq!(sim.node_box(u, 0), Some(agg.boxes[0]));
    }
}

#[test]
fn ring_of_64_finishes_within_bound() {
    let (pts, adj, cycle) = ring(64, 8.0);
    let mut sim = RoundSim::new(pts.clone(), &adj).unwrap();
    let agg = run_hole_aggregation(&mut sim, &[cycle]).unwrap();
    assert!(agg.stats.rounds <= 2 * 6 + AGGREGATION_SLACK);
    assert_eq!(agg.stats.waves, vec![6]);
    assert_eq!(agg.boxes[0], scan_box(&pts));
    // Two messages per node per wave.
    assert_eq!(agg.stats.max_messages_per_node_round, 2);
    assert_eq!(agg.stats.messages, 2 * 64 * 6);
}

#[test]
fn rounds_grow_logarithmically() {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut h = 8;
    while h <= 1024 {
        let (pts, adj, cycle) = ring(h, h as f64);
        let mut sim = RoundSim::new(pts.clone(), &adj).unwrap();
        let agg = run_hole_aggregation(&mut sim, &[cycle]).unwrap();
        assert_eq!(agg.boxes[0], scan_box(&pts));
        assert!(agg.stats.rounds <= round_bound(h));
        xs.push(ceil_log2(h) as f64);
        ys.push(agg.stats.rounds as f64);
        h *= 2;
    }
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    assert!(slope > 0.5 && slope <= 2.5, "slope {slope}");
}

#[test]
fn thousand_node_cycle_within_bound() {
    let (pts, adj, cycle) = ring(1000, 200.0);
    let mut sim = RoundSim::new(pts.clone(), &adj).unwrap();
    let agg = run_hole_aggregation(&mut sim, &[cycle]).unwrap();
    assert!(agg.stats.rounds <= round_bound(1000));
    assert_eq!(agg.boxes[0], scan_box(&pts));
}

#[test]
fn sends_to_unknown_ids_are_rejected() {
    let (pts, adj, _) = ring(6, 3.0);
    let mut sim = RoundSim::new(pts, &adj).unwrap();
    let payload = Payload::Back {
        hole: 0,
        backward: 1,
    };
    assert_eq!(
        sim.send(0, 3, payload.clone()),
        Err(OverlayError::UnknownRecipient { from: 0, to: 3 })
    );
    assert!(sim.send(0, 1, payload.clone()).is_ok());
    assert_eq!(sim.send(0, 9, payload), Err(OverlayError::UnknownNode(9)));
    sim.introduce(&[(0, 3)]).unwrap();
    assert!(sim.knows(3, 0));
}

#[test]
fn messages_arrive_exactly_one_round_later() {
    let (pts, adj, _) = ring(4, 1.0);
    let mut sim = RoundSim::new(pts, &adj).unwrap();
    sim.send(
        0,
        1,
        Payload::Back {
            hole: 0,
            backward: 3,
        },
    )
    .unwrap();
    assert!(sim.inbox(1).is_empty());
    sim.advance();
    assert_eq!(sim.inbox(1).len(), 1);
    assert_eq!(sim.inbox(1)[0].from, 0);
    sim.advance();
    assert!(sim.inbox(1).is_empty());
    assert_eq!(sim.round(), 2);
}

#[test]
fn introduction_charges_log_n_rounds() {
    let (pts, adj, _) = ring(100, 20.0);
    let mut sim = RoundSim::new(pts, &adj).unwrap();
    assert_eq!(sim.introduce(&[(0, 50)]).unwrap(), 7);
    assert_eq!(sim.round(), 7);
}

#[test]
fn payloads_fit_the_size_limit() {
    let e = Extent::of(p(0.0, 0.0));
    for m in [
        Payload::Jump {
            hole: 0,
            forward: 1,
            extent: e,
        },
        Payload::Back {
            hole: 0,
            backward: 1,
        },
        Payload::Box { extent: e },
    ] {
        assert!(m.words() <= MAX_MESSAGE_WORDS);
    }
}

#[test]
fn malformed_cycles_are_rejected() {
    let (pts, adj, _) = ring(5, 2.0);
    for (cycle, reason) in [
        (vec![0, 1], "fewer than three nodes"),
        (vec![0, 1, 2, 1], "repeated node"),
        (vec![0, 1, 7], "node out of range"),
    ] {
        let mut sim = RoundSim::new(pts.clone(), &adj).unwrap();
        let err = run_hole_aggregation(&mut sim, &[vec![0, 1, 2], cycle]).unwrap_err();
        assert_eq!(err, OverlayError::MalformedCycle { hole: 1, reason });
    }
}

#[test]
fn dissemination_requires_aggregation() {
    let (pts, adj, _) = ring(5, 2.0);
    let mut sim = RoundSim::new(pts, &adj).unwrap();
    assert_eq!(
        elect_leader_and_disseminate(&mut sim, &[]).unwrap_err(),
        OverlayError::NotAggregated
    );
}

fn abstraction_of(pts: &[Point], cycle: &[usize], id: usize) -> HoleAbstraction {
    let poly = holeroute::geom::Polygon::new(cycle.iter().map(|&u| pts[u]).collect()).unwrap();
    HoleAbstraction::from_polygon(id, poly).unwrap()
}

#[test]
fn single_hole_leader_is_min_x_node() {
    let (pts, adj, cycle) = ring(12, 3.0);
    let mut sim = RoundSim::new(pts.clone(), &adj).unwrap();
    run_hole_aggregation(&mut sim, &[cycle.clone()]).unwrap();
    let abs = vec![abstraction_of(&pts, &cycle, 0)];
    let stats = elect_leader_and_disseminate(&mut sim, &abs).unwrap();
    let min_x = (0..12)
        .min_by(|&a, &b| pts[a].x.total_cmp(&pts[b].x))
        .unwrap();
    assert_eq!(stats.leaders, vec![min_x]);
    assert_eq!(stats.inter_leader_messages, 0);
    assert_eq!(sim.stored_boxes(min_x), vec![scan_box(&pts)]);
}

#[test]
fn tied_leaders_are_reported() {
    let pts = vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)];
    let adj = vec![vec![1, 3], vec![0, 2], vec![1, 3], vec![2, 0]];
    let mut sim = RoundSim::new(pts.clone(), &adj).unwrap();
    run_hole_aggregation(&mut sim, &[vec![0, 1, 2, 3]]).unwrap();
    let abs = vec![abstraction_of(&pts, &[0, 1, 2, 3], 0)];
    assert_eq!(
        elect_leader_and_disseminate(&mut sim, &abs).unwrap_err(),
        OverlayError::LeaderTie(0)
    );
}

#[test]
fn three_rings_share_all_boxes() {
    let mut pts = Vec::new();
    let mut adj = Vec::new();
    let mut cycles = Vec::new();
    for (k, (cx, cy)) in [(0.0, 0.0), (10.0, 1.0), (4.0, 9.0)]
        .into_iter()
        .enumerate()
    {
        let (rp, ra, _) = ring(8 + 2 * k, 2.0);
        let off = pts.len();
        pts.extend(rp.into_iter().map(|q| q + p(cx, cy)));
        adj.extend(
            ra.into_iter()
                .map(|nb| nb.into_iter().map(|v| v + off).collect::<Vec<_>>()),
        );
        cycles.push((off..pts.len()).collect::<Vec<_>>());
    }
    let mut sim = RoundSim::new(pts.clone(), &adj).unwrap();
    let agg = run_hole_aggregation(&mut sim, &cycles).unwrap();
    let abs: Vec<HoleAbstraction> = cycles
        .iter()
        .enumerate()
        .map(|(i, c)| abstraction_of(&pts, c, i))
        .collect();
    let stats = elect_leader_and_disseminate(&mut sim, &abs).unwrap();
    assert_eq!(stats.inter_leader_messages, 6);
    let mut want: Vec<Rect> = cycles
        .iter()
        .map(|c| scan_box(&c.iter().map(|&u| pts[u]).collect::<Vec<_>>()))
        .collect();
    assert_eq!(agg.boxes, want);
    want.sort_by(|a, b| {
        [a.min_x, a.max_x, a.min_y, a.max_y]
            .partial_cmp(&[b.min_x, b.max_x, b.min_y, b.max_y])
            .unwrap()
    });
    for a in &abs {
        for &r in &a.representatives {
            assert_eq!(sim.stored_boxes(r), want);
        }
    }
    for &l in &stats.leaders {
        assert_eq!(sim.stored_boxes(l), want);
    }
}

#[test]
fn random_networks_match_centralized_setup() {
    let mut worst_c: f64 = 0.0;
    for (k, density) in [5.0, 8.0, 12.0].into_iter().cycle().take(15).enumerate() {
        let net = generate_udg(density, 10.0, 900 + k as u64).unwrap();
        let g = build_ldel2(&net).unwrap();
        let holes = detect_holes(&g);
        let abs: Vec<HoleAbstraction> = holes
            .holes
            .iter()
            .map(|h| compute_abstraction(h, &net).unwrap())
            .collect();
        let r = simulate_setup(&net, &holes, &abs).unwrap();
        assert!(r.boxes_match && r.lists_match, "seed {}", 900 + k);
        assert!(r.aggregation_rounds <= round_bound(r.largest_hole));
        assert!(
            r.max_plain_storage <= STORAGE_SLACK,
            "{}",
            r.max_plain_storage
        );
        assert!(r.max_holder_storage <= 4 * r.holes + STORAGE_SLACK);
        let lg = (r.largest_hole.max(2) as f64).log2();
        assert!(r.max_messages_per_node_round as f64 <= 4.0 * lg);
        worst_c = worst_c.max(r.round_constant);
    }
    assert!(worst_c > 0.0 && worst_c < 2.0, "{worst_c}");
    println!("fitted round constant {worst_c:.3}");
}

#[test]
fn representatives_of_real_network_hold_every_box() {
    let net = generate_udg(6.0, 12.0, 31).unwrap();
    let g = build_ldel2(&net).unwrap();
    let holes = detect_holes(&g);
    assert!(holes.holes.len() >= 3);
    let abs: Vec<HoleAbstraction> = holes
        .holes
        .iter()
        .map(|h| compute_abstraction(h, &net).unwrap())
        .collect();
    let mut sim = RoundSim::for_network(&net);
    let cycles: Vec<Vec<usize>> = holes.holes.iter().map(|h| h.cycle.clone()).collect();
    run_hole_aggregation(&mut sim, &cycles).unwrap();
    elect_leader_and_disseminate(&mut sim, &abs).unwrap();
    let mut want: Vec<Rect> = abs.iter().map(|a| a.bbox).collect();
    want.sort_by(|a, b| {
        [a.min_x, a.max_x, a.min_y, a.max_y]
            .partial_cmp(&[b.min_x, b.max_x, b.min_y, b.max_y])
            .unwrap()
    });
    for a in &abs {
        for u in a.representatives.iter().chain(&a.extreme_nodes) {
            assert_eq!(sim.stored_boxes(*u), want);
        }
    }
}
