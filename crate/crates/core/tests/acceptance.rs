//! End-to-end acceptance checks, one test per criterion. Each prints a
//! summary line; run with `--nocapture` to see them all.

mod common;

use common::{
    crossing_pairs, dense_dijkstra, ldel2_oracle, meets_closed_polygon, visibility_optimum,
};
use holeroute::abstraction::{
    build_bbvg, build_modified_bbvg, compute_abstraction, grevio_path, outer_intersection_points,
    shortest_path_among_polygons, shortest_path_vg, HoleAbstraction, WeightMode,
};
use holeroute::fixtures;
use holeroute::geom::{Point, Polygon, Rect, Segment};
use holeroute::harness::{
    records_to_csv, run_experiment, sign_test, Algorithm, ExperimentConfig, ExperimentResult,
    Regime, Scenario,
};
use holeroute::netgen::generate_udg;
use holeroute::overlay::{ceil_log2, simulate_setup, AGGREGATION_SLACK, STORAGE_SLACK};
use holeroute::routing::pic_polyline;
use holeroute::topology::{build_ldel2, detect_holes};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::f64::consts::SQRT_2;
use std::sync::OnceLock;
use std::time::Instant;

fn report(n: u32, pass: bool, detail: &str) {
    println!(
        "criterion {n:>2}: {} | {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} failed: {detail}");
}

/// The 50 instances shared by the topology and overlay criteria.
fn small_instances() -> impl Iterator<Item = (f64, u64)> {
    (0..50u64).map(|k| ([5.0, 8.0, 12.0][k as usize % 3], 1000 + k))
}

#[test]
fn criterion_01_topology_matches_definitional_oracle() {
    let start = Instant::now();
    let (mut mismatched, mut crossings, mut sizes) = (0, 0, Vec::new());
    for (density, seed) in small_instances() {
        let net = generate_udg(density, 10.0, seed).unwrap();
        let g = build_ldel2(&net).unwrap();
        let got: BTreeSet<(usize, usize)> = g.edges.iter().copied().collect();
        if got != ldel2_oracle(&net.nodes) {
            mismatched += 1;
        }
        crossings += crossing_pairs(&net.nodes, &g.edges);
        sizes.push(net.nodes.len());
    }
    let secs = start.elapsed().as_secs_f64();
    let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
    report(
        1,
        mismatched == 0 && crossings == 0 && secs < 60.0,
        &format!("50 instances, n {lo}..{hi}, {mismatched} mismatches, {crossings} crossings, {secs:.1}s"),
    );
}

#[test]
fn criterion_02_spanner_bound_on_visible_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut pairs, mut worst) = (0usize, 0.0f64);
    for k in 0..100u64 {
        let density = [6.0, 8.0, 10.0, 12.0, 15.0][k as usize % 5];
        let net = generate_udg(density, 10.0, 2000 + k).unwrap();
        let g = build_ldel2(&net).unwrap();
        let rings: Vec<Vec<Point>> = detect_holes(&g)
            .holes
            .iter()
            .map(|h| h.positions(&net.nodes))
            .collect();
        let n = g.node_count();
        for _ in 0..20 {
            let s = rng.random_range(0..n);
            let dist = dense_dijkstra(n, s, |u, v| {
                g.has_edge(u, v).then(|| g.pos(u).dist(g.pos(v)))
            });
            for _ in 0..40 {
                let t = rng.random_range(0..n);
                if t == s
                    || rings
                        .iter()
                        .any(|r| meets_closed_polygon(g.pos(s), g.pos(t), r))
                {
                    continue;
                }
                worst = worst.max(dist[t] / g.pos(s).dist(g.pos(t)));
                pairs += 1;
            }
        }
    }
    report(
        2,
        pairs >= 5000 && worst <= 1.998 + 1e-6,
        &format!("{pairs} visible pairs over 100 instances, max stretch {worst:.4}"),
    );
}

#[test]
fn criterion_03_right_triangle_legs() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violations = 0;
    for _ in 0..1_000_000 {
        let a: f64 = rng.random_range(1e-6..10.0);
        let b: f64 = rng.random_range(1e-6..10.0);
        if a + b > SQRT_2 * a.hypot(b) + 1e-12 {
            violations += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        3,
        violations == 0 && secs < 5.0,
        &format!("10^6 leg pairs, {violations} violations, {secs:.2}s"),
    );
}

fn rings(holes: &[Polygon]) -> Vec<Vec<Point>> {
    holes.iter().map(|h| h.vertices().to_vec()).collect()
}

#[test]
fn criterion_04_single_box_within_sqrt2() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut violations = 0;
    for _ in 0..1000 {
        let scene = fixtures::random_single_box_scene(&mut rng);
        let (s, t) = (scene.source.unwrap(), scene.target.unwrap());
        let g = build_bbvg(&scene.abstractions().unwrap()).unwrap();
        let len = shortest_path_vg(&g.with_query(s, t)).unwrap().length;
        let opt = visibility_optimum(&rings(&scene.holes), s, t);
        worst = worst.max(len / opt);
        if len > SQRT_2 * opt + 1e-9 {
            violations += 1;
        }
    }
    let coinciding = fixtures::coinciding_box();
    let (s, t) = (coinciding.source.unwrap(), coinciding.target.unwrap());
    let g = build_bbvg(&coinciding.abstractions().unwrap()).unwrap();
    let len = shortest_path_vg(&g.with_query(s, t)).unwrap().length;
    let opt = visibility_optimum(&rings(&coinciding.holes), s, t);
    let tight = (len - SQRT_2 * opt).abs() < 1e-9;
    report(
        4,
        violations == 0 && tight,
        &format!("1000 scenes, {violations} violations, max ratio {worst:.4}; coinciding box ratio {:.12}", len / opt),
    );
}

/// Part of `a b` between the boxes holding its ends.
fn between_boxes(a: Point, b: Point, rects: &[Rect]) -> Option<Segment> {
    let seg = Segment::new(a, b).ok()?;
    let owner = |q: Point| rects.iter().position(|r| r.contains_closed(q));
    let (oa, ob) = (owner(a), owner(b));
    if oa.is_some() && oa == ob {
        return None;
    }
    let t0 = oa.and_then(|i| rects[i].clip(&seg)).map_or(0.0, |c| c.1);
    let t1 = ob.and_then(|i| rects[i].clip(&seg)).map_or(1.0, |c| c.0);
    Segment::new(seg.at(t0), seg.at(t1))
        .ok()
        .filter(|_| t1 > t0)
}

fn monotone_like(path: &[Point], r: &Segment) -> bool {
    let d = r.b - r.a;
    path.windows(2).all(|w| {
        (w[1].x - w[0].x) * d.x.signum() >= -1e-9 && (w[1].y - w[0].y) * d.y.signum() >= -1e-9
    })
}

#[test]
fn criterion_05_disjoint_boxes_within_sqrt2_with_monotone_subpaths() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut violations, mut non_monotone, mut subpaths) = (0, 0, 0);
    let mut worst = 0.0f64;
    for k in 0..1000 {
        let scene = fixtures::random_disjoint_scene(&mut rng, 3 + k % 6);
        let (s, t) = (scene.source.unwrap(), scene.target.unwrap());
        let g = build_bbvg(&scene.abstractions().unwrap()).unwrap();
        let len = shortest_path_vg(&g.with_query(s, t)).unwrap().length;
        let opt = visibility_optimum(&rings(&scene.holes), s, t);
        worst = worst.max(len / opt);
        if len > SQRT_2 * opt + 1e-9 {
            violations += 1;
        }
        let refs: Vec<&Polygon> = scene.holes.iter().collect();
        let (_, geo) = shortest_path_among_polygons(&refs, s, t).unwrap();
        for w in geo.windows(2) {
            let Some(r) = between_boxes(w[0], w[1], g.rects()) else {
                continue;
            };
            subpaths += 1;
            match grevio_path(&g, r.a, r.b, &r) {
                Ok(sub) if monotone_like(&sub, &r) => {}
                _ => non_monotone += 1,
            }
        }
    }
    report(
        5,
        violations == 0 && non_monotone == 0,
        &format!(
            "1000 scenes, {violations} violations, max ratio {worst:.4}; {subpaths} sub-paths, {non_monotone} not monotone"
        ),
    );
}

#[test]
fn criterion_06_lower_bound_fixture_via_cli() {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_holeroute"))
        .args(["fixture", "--name", "lower-bound", "--x", "100"])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let field = |name: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(name).map(|v| v.trim().parse().unwrap()))
            .unwrap_or(f64::NAN)
    };
    let (path, straight, ratio) = (field("path "), field("straight "), field("ratio "));
    let direct = fixtures::lower_bound_report(100.0).unwrap();
    report(
        6,
        out.status.success()
            && (path - 397.0).abs() <= 1e-6
            && (direct.path - 397.0).abs() <= 1e-6
            && (straight - 141.4214).abs() <= 1e-4
            && (ratio - 2.8069).abs() <= 1e-3,
        &format!("path {path}, straight {straight}, ratio {ratio}"),
    );
}

#[test]
fn criterion_07_modified_graph_within_4_42() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut violations, mut worst) = (0, 0.0f64);
    for _ in 0..500 {
        let scene = fixtures::random_overlapping_scene(&mut rng);
        let (s, t) = (scene.source.unwrap(), scene.target.unwrap());
        let g = build_modified_bbvg(&scene.abstractions().unwrap(), WeightMode::Exact).unwrap();
        let len = shortest_path_vg(&g.with_query(s, t)).unwrap().length;
        let opt = visibility_optimum(&rings(&scene.holes), s, t);
        worst = worst.max(len / opt);
        if len > 4.42 * opt + 1e-9 {
            violations += 1;
        }
    }
    report(
        7,
        violations == 0,
        &format!("500 intersecting scenes, {violations} violations, max ratio {worst:.4}"),
    );
}

#[test]
fn criterion_08_pic_polyline_within_sqrt2() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut violations, mut worst, mut unreachable) = (0, 0.0f64, 0);
    for _ in 0..500 {
        let scene = fixtures::random_corner_overlap_scene(&mut rng);
        let abs: Vec<HoleAbstraction> = scene.abstractions().unwrap();
        let outer = outer_intersection_points(&[abs[0].bbox, abs[1].bbox]);
        let (o1, o2) = (outer[0].0, outer[1].0);
        let bound = SQRT_2 * o1.dist(o2);
        let len = match pic_polyline(&abs[0], &abs[1], o1, o2) {
            Ok(path) => path.windows(2).map(|w| w[0].dist(w[1])).sum::<f64>(),
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(len / o1.dist(o2));
        if len > bound + 1e-9 {
            violations += 1;
            // Whether any hull-avoiding path at all meets the bound.
            let hulls = vec![
                abs[0].hull.vertices().to_vec(),
                abs[1].hull.vertices().to_vec(),
            ];
            if visibility_optimum(&hulls, o1, o2) > bound + 1e-9 {
                unreachable += 1;
            }
        }
    }
    report(
        8,
        violations == 0,
        &format!(
            "500 corner overlaps, {violations} above the bound ({unreachable} where even the unrestricted geodesic exceeds it), max ratio {worst:.4}"
        ),
    );
}

fn sweep_config(densities: Vec<f64>, scenario: Scenario) -> ExperimentConfig {
    ExperimentConfig {
        densities,
        trials: 200,
        scenario,
        algorithms: vec![
            Algorithm::Bbr,
            Algorithm::GoafrPlus,
            Algorithm::GoafrFc,
            Algorithm::Goafr,
            Algorithm::Gpsr,
            Algorithm::Oafr,
        ],
        ..ExperimentConfig::default()
    }
}

const REPRO_DENSITIES: [f64; 6] = [4.5, 6.0, 8.0, 10.0, 14.0, 20.0];

fn reproduction_runs() -> &'static [(Scenario, String, ExperimentResult); 2] {
    static RUNS: OnceLock<[(Scenario, String, ExperimentResult); 2]> = OnceLock::new();
    RUNS.get_or_init(|| {
        [Scenario::AnyPair, Scenario::IntersectingOnly].map(|sc| {
            let res = run_experiment(&sweep_config(REPRO_DENSITIES.to_vec(), sc)).unwrap();
            (sc, records_to_csv(&res.records), res)
        })
    })
}

#[test]
fn criterion_09_ceilings_and_delivery_over_full_sweep() {
    let start = Instant::now();
    let cfg = sweep_config(ExperimentConfig::default().densities, Scenario::AnyPair);
    let res = run_experiment(&cfg);
    let secs = start.elapsed().as_secs_f64();
    let res = match res {
        Ok(r) => r,
        Err(e) => return report(9, false, &format!("sweep aborted: {e}")),
    };
    let guaranteed: Vec<_> = res
        .records
        .iter()
        .filter(|r| r.algorithm.guarantees_delivery())
        .collect();
    let failed = guaranteed.iter().filter(|r| !r.delivered()).count();
    let bbr = |reg: Regime| {
        res.records
            .iter()
            .filter(|r| r.algorithm == Algorithm::Bbr && r.regime == reg)
            .count()
    };
    let skipped: Vec<f64> = res
        .summaries
        .iter()
        .filter(|s| s.skipped.is_some())
        .map(|s| s.density)
        .collect();
    let worst_bbr = res
        .records
        .iter()
        .filter(|r| r.algorithm == Algorithm::Bbr && r.delivered())
        .map(|r| r.perf)
        .fold(0.0, f64::max);
    report(
        9,
        failed == 0,
        &format!(
            "{} routed trials, {failed} undelivered; BBR trials under the disjoint ceiling {}, pairwise ceiling {}, none exceeded; max BBR perf {worst_bbr:.3}; densities without connected instances {skipped:?}; {secs:.0}s",
            guaranteed.len(),
            bbr(Regime::Disjoint),
            bbr(Regime::Pairwise),
        ),
    );
}

#[test]
fn criterion_10_reproduction_ordering() {
    let start = Instant::now();
    let runs = reproduction_runs();
    let mut ok = true;
    let mut lines = Vec::new();
    for (sc, _, res) in runs {
        for s in &res.summaries {
            if let Some(why) = &s.skipped {
                ok = false;
                lines.push(format!("{sc:?} density {}: no trials ({why})", s.density));
                continue;
            }
            let st = sign_test(
                &res.records,
                s.density,
                Algorithm::Bbr,
                Algorithm::GoafrPlus,
            );
            let gp = s.mean(Algorithm::GoafrPlus).unwrap();
            let below: Vec<&str> = [
                Algorithm::GoafrFc,
                Algorithm::Goafr,
                Algorithm::Gpsr,
                Algorithm::Oafr,
            ]
            .iter()
            .filter(|&&a| gp > s.mean(a).unwrap() + 1e-12)
            .map(|a| a.name())
            .collect();
            let others_ok = below.is_empty();
            ok &= st.significant(0.01) && others_ok;
            lines.push(format!(
                "{sc:?} density {}: BBR {:.4} GOAFR+ {gp:.4} (sign test {}:{}, p {:.2e}){}",
                s.density,
                s.mean(Algorithm::Bbr).unwrap(),
                st.wins,
                st.losses,
                st.p_value,
                if others_ok {
                    String::new()
                } else {
                    format!(", GOAFR+ above {}", below.join("/"))
                }
            ));
        }
    }
    let any = &runs[0].2;
    let gp = |d: f64| {
        any.summaries
            .iter()
            .find(|s| s.density == d)
            .and_then(|s| s.mean(Algorithm::GoafrPlus))
            .unwrap_or(f64::NAN)
    };
    let peak = gp(8.0) > gp(6.0) && gp(8.0) > gp(10.0);
    ok &= peak;
    for l in &lines {
        println!("    {l}");
    }
    report(
        10,
        ok,
        &format!(
            "GOAFR+ means at 6/8/10: {:.4}/{:.4}/{:.4} (peak at 8: {peak}); {:.0}s",
            gp(6.0),
            gp(8.0),
            gp(10.0),
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_11_overlay_equivalence_and_budgets() {
    let (mut mismatched, mut over_rounds, mut worst_plain, mut worst_c) = (0, 0, 0, 0.0f64);
    for (density, seed) in small_instances() {
        let net = generate_udg(density, 10.0, seed).unwrap();
        let g = build_ldel2(&net).unwrap();
        let holes = detect_holes(&g);
        let abs: Vec<HoleAbstraction> = holes
            .holes
            .iter()
            .map(|h| compute_abstraction(h, &net).unwrap())
            .collect();
        let r = simulate_setup(&net, &holes, &abs).unwrap();
        if !(r.boxes_match && r.lists_match) {
            mismatched += 1;
        }
        if r.aggregation_rounds > 2 * ceil_log2(r.largest_hole) + AGGREGATION_SLACK {
            over_rounds += 1;
        }
        worst_plain = worst_plain.max(r.max_plain_storage);
        worst_c = worst_c.max(r.round_constant);
    }
    report(
        11,
        mismatched == 0 && over_rounds == 0 && worst_plain <= STORAGE_SLACK,
        &format!(
            "50 instances, {mismatched} box mismatches, {over_rounds} over the round bound, max plain storage {worst_plain} words, fitted C = {worst_c:.3}"
        ),
    );
}

#[test]
fn criterion_12_reproduction_is_deterministic() {
    let first = reproduction_runs();
    let mut same = true;
    for (sc, csv, _) in first {
        let again = run_experiment(&sweep_config(REPRO_DENSITIES.to_vec(), *sc)).unwrap();
        same &= records_to_csv(&again.records) == *csv;
    }
    report(
        12,
        same,
        &format!(
            "two executions, {} + {} CSV bytes, identical: {same}",
            first[0].1.len(),
            first[1].1.len()
        ),
    );
}
