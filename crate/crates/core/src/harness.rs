//! Density sweeps: per-trial competitive ratios against the unit-disk optimum,
//! per-density means, sign tests and CSV output.

use crate::abstraction::{
    compute_abstraction, intersection_components, HoleAbstraction, WeightMode,
};
use crate::geom::{polygons_overlap, segment_intersects_rect, Rect, Segment};
use crate::netgen::{generate_udg, NetgenError, NetworkInstance};
use crate::overlay::{simulate_setup, SetupReport};
use crate::routing::{
    bbr_route, goafr_fc_route, goafr_plus_route, goafr_route, gpsr_route, greedy_route, oafr_route,
    BbrContext, GoafrPlusParams, PathTrace, RoutingError,
};
use crate::topology::{build_ldel2, detect_holes, LDelGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

/// Tolerance below 1 for a ratio against the optimum.
pub const PERF_EPS: f64 = 1e-9;
/// Proven ceiling for the box router when no two boxes overlap.
pub const DISJOINT_CEILING: f64 = 18.55;
/// Proven ceiling when boxes overlap at most pairwise with disjoint hulls.
pub const PAIRWISE_CEILING: f64 = 28.83;
/// Source/target draws per instance in the intersecting scenario.
pub const PAIR_SAMPLING_CAP: usize = 1000;
/// Fresh instances tried per trial before the trial is dropped.
pub const MAX_INSTANCE_ATTEMPTS: u64 = 20;
/// Instances probed at a density before declaring it too sparse.
pub const SPARSE_PROBE_ATTEMPTS: u64 = 3;
/// Hop budget per node.
pub const HOP_BUDGET_FACTOR: usize = 50;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("optimal length {0} is not positive")]
    NonPositiveOptimum(f64),
    #[error("ratio {0} lies below 1: the path beats the optimum")]
    BelowOptimum(f64),
    #[error("node {t} is unreachable from {s}")]
    Unreachable { s: usize, t: usize },
    #[error("invariant violated (seed {seed}, density {density}, trial {trial}): {detail}")]
    Invariant {
        seed: u64,
        density: f64,
        trial: usize,
        detail: String,
    },
    #[error("routing failed (seed {seed}): {source}")]
    Routing { seed: u64, source: RoutingError },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Algorithm {
    Greedy,
    Gpsr,
    Oafr,
    Goafr,
    GoafrFc,
    GoafrPlus,
    Bbr,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Greedy,
        Algorithm::Gpsr,
        Algorithm::Oafr,
        Algorithm::Goafr,
        Algorithm::GoafrFc,
        Algorithm::GoafrPlus,
        Algorithm::Bbr,
    ];

    /// Algorithms that deliver on every connected network.
    pub fn guarantees_delivery(self) -> bool {
        self != Algorithm::Greedy
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Greedy => "GREEDY",
            Algorithm::Gpsr => "GPSR",
            Algorithm::Oafr => "OAFR",
            Algorithm::Goafr => "GOAFR",
            Algorithm::GoafrFc => "GOAFR_FC",
            Algorithm::GoafrPlus => "GOAFR_PLUS",
            Algorithm::Bbr => "BBR",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| *c != '_' && *c != '-').collect();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().replace('_', "").eq_ignore_ascii_case(&key))
            .ok_or_else(|| HarnessError::Config(format!("unknown algorithm {s:?}")))
    }
}

impl TryFrom<String> for Algorithm {
    type Error = HarnessError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Algorithm> for String {
    fn from(a: Algorithm) -> Self {
        a.name().to_owned()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    AnyPair,
    IntersectingOnly,
}

impl FromStr for Scenario {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "any" | "any_pair" => Ok(Scenario::AnyPair),
            "intersecting" | "intersecting_only" => Ok(Scenario::IntersectingOnly),
            _ => Err(HarnessError::Config(format!("unknown scenario {s:?}"))),
        }
    }
}

/// Clique weighting of the modified box graph, without its parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightChoice {
    Exact,
    Sqrt2,
    Quadratic,
}

impl FromStr for WeightChoice {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(WeightChoice::Exact),
            "sqrt2" => Ok(WeightChoice::Sqrt2),
            "quadratic" => Ok(WeightChoice::Quadratic),
            _ => Err(HarnessError::Config(format!("unknown weight mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub densities: Vec<f64>,
    pub side: f64,
    pub trials: usize,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub scenario: Scenario,
    pub weight_mode: WeightChoice,
    pub alpha: f64,
    pub sigma: f64,
    /// Run the distributed setup simulation on every instance and require
    /// it to agree with the centralized boxes.
    pub check_overlay: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            densities: density_range(4.5, 20.0, 0.5),
            side: 20.0,
            trials: 200,
            seed: 42,
            algorithms: Algorithm::ALL[1..].to_vec(),
            scenario: Scenario::AnyPair,
            weight_mode: WeightChoice::Quadratic,
            alpha: 1.0,
            sigma: 0.5,
            check_overlay: true,
        }
    }
}

/// `start, start + step, ...` up to `end` inclusive, free of drift.
pub fn density_range(start: f64, end: f64, step: f64) -> Vec<f64> {
    let count = ((end - start) / step + 1e-9).floor() as usize;
    (0..=count).map(|i| start + i as f64 * step).collect()
}

impl ExperimentConfig {
    /// Rejects unusable settings; returns warnings for usable but unusual ones.
    pub fn validate(&self) -> Result<Vec<String>, HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.densities.is_empty() || self.densities.iter().any(|d| !(*d > 0.0)) {
            return bad("densities must be positive and non-empty".into());
        }
        if !(self.side > 2.0) {
            return bad(format!("side {} must exceed 2", self.side));
        }
        if self.algorithms.is_empty() {
            return bad("no algorithm selected".into());
        }
        if !(self.alpha > 0.0) {
            return bad(format!("alpha {} must be positive", self.alpha));
        }
        if !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return bad(format!("sigma {} must lie in (0, 1]", self.sigma));
        }
        Ok(self
            .densities
            .iter()
            .filter(|&&d| d < 4.5)
            .map(|d| format!("density {d} is below 4.5"))
            .collect())
    }

    pub fn weight(&self) -> WeightMode {
        match self.weight_mode {
            WeightChoice::Exact => WeightMode::Exact,
            WeightChoice::Sqrt2 => WeightMode::Sqrt2,
            WeightChoice::Quadratic => WeightMode::Quadratic(self.alpha),
        }
    }

    fn params(&self) -> GoafrPlusParams {
        GoafrPlusParams {
            sigma: self.sigma,
            ..GoafrPlusParams::default()
        }
    }
}

/// Which ceiling applies to an instance's boxes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// No two boxes overlap.
    Disjoint,
    /// Overlaps only in pairs whose hole hulls are disjoint.
    Pairwise,
    General,
}

impl Regime {
    pub fn of(abs: &[HoleAbstraction]) -> Self {
        let comps = intersection_components(abs);
        if comps.iter().all(|c| c.len() == 1) {
            Regime::Disjoint
        } else if comps.iter().all(|c| {
            c.len() <= 2 && (c.len() < 2 || !polygons_overlap(&abs[c[0]].hull, &abs[c[1]].hull))
        }) {
            Regime::Pairwise
        } else {
            Regime::General
        }
    }

    pub fn ceiling(self) -> Option<f64> {
        match self {
            Regime::Disjoint => Some(DISJOINT_CEILING),
            Regime::Pairwise => Some(PAIRWISE_CEILING),
            Regime::General => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Regime::Disjoint => "disjoint",
            Regime::Pairwise => "pairwise",
            Regime::General => "general",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Seed of the instance actually used.
    pub seed: u64,
    pub density: f64,
    pub trial: usize,
    pub s: usize,
    pub t: usize,
    pub algorithm: Algorithm,
    /// Routed length; NaN when the algorithm could not run.
    pub length: f64,
    pub optimal: f64,
    /// `length / optimal` for delivered trials, NaN otherwise.
    pub perf: f64,
    pub outcome: String,
    pub hops: usize,
    pub regime: Regime,
}

impl TrialRecord {
    pub fn delivered(&self) -> bool {
        self.outcome == "delivered"
    }
}

/// Competitive ratio of a routed length against the optimum.
pub fn perf(path_len: f64, opt_len: f64) -> Result<f64, HarnessError> {
    if !(opt_len > 0.0) {
        return Err(HarnessError::NonPositiveOptimum(opt_len));
    }
    let r = path_len / opt_len;
    if r < 1.0 - PERF_EPS {
        return Err(HarnessError::BelowOptimum(r));
    }
    Ok(r)
}

#[derive(Clone, Copy, PartialEq)]
struct Dist(f64);

impl Eq for Dist {}
impl PartialOrd for Dist {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Dist {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}

/// Single-source Euclidean distances and predecessors in the unit disk graph.
pub fn udg_tree(net: &NetworkInstance, s: usize) -> (Vec<f64>, Vec<Option<usize>>) {
    let n = net.nodes.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(Reverse((Dist(0.0), s)));
    while let Some(Reverse((Dist(d), u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &v in &net.adjacency[u] {
            let nd = d + net.nodes[u].dist(net.nodes[v]);
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = Some(u);
                heap.push(Reverse((Dist(nd), v)));
            }
        }
    }
    (dist, pred)
}

fn unwind(pred: &[Option<usize>], s: usize, t: usize) -> Vec<usize> {
    let mut path = vec![t];
    let mut u = t;
    while u != s {
        u = pred[u].expect("reached nodes have predecessors");
        path.push(u);
    }
    path.reverse();
    path
}

/// Shortest path in the unit disk graph between `s` and `t`.
pub fn dijkstra_udg(
    net: &NetworkInstance,
    s: usize,
    t: usize,
) -> Result<(f64, Vec<usize>), HarnessError> {
    let n = net.nodes.len();
    if s >= n || t >= n {
        return Err(HarnessError::Unreachable { s, t });
    }
    let (dist, pred) = udg_tree(net, s);
    if dist[t].is_infinite() {
        return Err(HarnessError::Unreachable { s, t });
    }
    Ok((dist[t], unwind(&pred, s, t)))
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Instance seed of one attempt at one trial. Depends on the density value,
/// not its position, so any sub-sweep reproduces the same instances.
pub fn trial_seed(seed: u64, density: f64, trial: usize, attempt: u64) -> u64 {
    let mut h = splitmix(seed);
    for part in [density.to_bits(), trial as u64, attempt] {
        h = splitmix(h ^ part);
    }
    h
}

/// Per-instance overlay statistics, one CSV row each.
#[derive(Clone, Debug)]
pub struct OverlayRow {
    pub seed: u64,
    pub density: f64,
    pub trial: usize,
    pub report: SetupReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub trials: usize,
    pub delivered: usize,
    /// Mean perf over delivered trials.
    pub mean_perf: f64,
    pub max_perf: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensitySummary {
    pub density: f64,
    pub trials: usize,
    /// Why the density produced no trials, if it did not.
    pub skipped: Option<String>,
    pub algorithms: Vec<AlgorithmSummary>,
}

impl DensitySummary {
    pub fn mean(&self, a: Algorithm) -> Option<f64> {
        self.algorithms
            .iter()
            .find(|s| s.algorithm == a)
            .map(|s| s.mean_perf)
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<DensitySummary>,
    /// Replaced instances, dropped trials and skipped densities.
    pub notes: Vec<String>,
    pub overlay: Vec<OverlayRow>,
}

enum TrialRun {
    Done {
        records: Vec<TrialRecord>,
        overlay: Option<OverlayRow>,
        notes: Vec<String>,
    },
    Dropped(Vec<String>),
}

struct Instance {
    net: NetworkInstance,
    g: LDelGraph,
    abs: Vec<HoleAbstraction>,
}

fn build_instance(seed: u64, density: f64, side: f64) -> Result<Instance, String> {
    let net = generate_udg(density, side, seed).map_err(|e| e.to_string())?;
    let g = build_ldel2(&net).map_err(|e| e.to_string())?;
    let holes = detect_holes(&g);
    let abs = holes
        .holes
        .iter()
        .map(|h| compute_abstraction(h, &net))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(Instance { net, g, abs })
}

/// Whether the polyline through `path` enters a box of a component with
/// at least two boxes.
fn crosses_overlap(net: &NetworkInstance, path: &[usize], rects: &[Rect]) -> bool {
    path.iter()
        .any(|&u| rects.iter().any(|r| r.contains_strict(net.nodes[u])))
        || path.windows(2).any(|w| {
            Segment::new(net.nodes[w[0]], net.nodes[w[1]])
                .is_ok_and(|seg| rects.iter().any(|r| segment_intersects_rect(&seg, r)))
        })
}

/// Draws `(s, t)` among nodes outside every closed box.
fn sample_pair(
    inst: &Instance,
    scenario: Scenario,
    rng: &mut ChaCha8Rng,
) -> Result<(usize, usize, f64), String> {
    let boxes: Vec<Rect> = inst.abs.iter().map(|a| a.bbox).collect();
    let free: Vec<usize> = (0..inst.net.nodes.len())
        .filter(|&u| !boxes.iter().any(|r| r.contains_closed(inst.net.nodes[u])))
        .collect();
    if free.len() < 2 {
        return Err(format!("{} nodes outside every box", free.len()));
    }
    let draw = |rng: &mut ChaCha8Rng| {
        let s = free[rng.random_range(0..free.len())];
        let t = loop {
            let t = free[rng.random_range(0..free.len())];
            if t != s {
                break t;
            }
        };
        (s, t)
    };
    match scenario {
        Scenario::AnyPair => {
            let (s, t) = draw(rng);
            let (opt, _) = dijkstra_udg(&inst.net, s, t).map_err(|e| e.to_string())?;
            Ok((s, t, opt))
        }
        Scenario::IntersectingOnly => {
            let overlap: Vec<Rect> = intersection_components(&inst.abs)
                .into_iter()
                .filter(|c| c.len() >= 2)
                .flatten()
                .map(|i| boxes[i])
                .collect();
            if overlap.is_empty() {
                return Err("no intersecting boxes".into());
            }
            let mut trees: HashMap<usize, (Vec<f64>, Vec<Option<usize>>)> = HashMap::new();
            for _ in 0..PAIR_SAMPLING_CAP {
                let (s, t) = draw(rng);
                let (dist, pred) = trees.entry(s).or_insert_with(|| udg_tree(&inst.net, s));
                if crosses_overlap(&inst.net, &unwind(pred, s, t), &overlap) {
                    return Ok((s, t, dist[t]));
                }
            }
            Err(format!(
                "no pair through intersecting boxes in {PAIR_SAMPLING_CAP} draws"
            ))
        }
    }
}

fn route(
    a: Algorithm,
    inst: &Instance,
    ctx: Option<&BbrContext>,
    cfg: &ExperimentConfig,
    s: usize,
    t: usize,
) -> Result<Option<PathTrace>, RoutingError> {
    let g = &inst.g;
    let budget = HOP_BUDGET_FACTOR * g.node_count();
    Ok(Some(match a {
        Algorithm::Greedy => greedy_route(g, s, t, budget)?,
        Algorithm::Gpsr => gpsr_route(g, s, t, budget)?,
        Algorithm::Oafr => oafr_route(g, s, t, budget)?,
        Algorithm::Goafr => goafr_route(g, s, t, budget)?,
        Algorithm::GoafrFc => goafr_fc_route(g, s, t, budget)?,
        Algorithm::GoafrPlus => goafr_plus_route(g, s, t, budget, cfg.params())?,
        Algorithm::Bbr => match ctx {
            Some(ctx) => bbr_route(g, ctx, s, t, budget)?,
            None => return Ok(None),
        },
    }))
}

fn run_trial(cfg: &ExperimentConfig, density: f64, trial: usize) -> Result<TrialRun, HarnessError> {
    let mut notes = Vec::new();
    for attempt in 0..MAX_INSTANCE_ATTEMPTS {
        let seed = trial_seed(cfg.seed, density, trial, attempt);
        let violation = |detail: String| HarnessError::Invariant {
            seed,
            density,
            trial,
            detail,
        };
        let inst = match build_instance(seed, density, cfg.side) {
            Ok(i) => i,
            Err(e) => {
                notes.push(format!("density {density} trial {trial} seed {seed}: {e}"));
                continue;
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed));
        let (s, t, opt) = match sample_pair(&inst, cfg.scenario, &mut rng) {
            Ok(x) => x,
            Err(e) => {
                notes.push(format!("density {density} trial {trial} seed {seed}: {e}"));
                continue;
            }
        };
        let overlay = if cfg.check_overlay {
            let holes = detect_holes(&inst.g);
            let report = simulate_setup(&inst.net, &holes, &inst.abs)
                .map_err(|e| violation(format!("overlay: {e}")))?;
            if !(report.boxes_match && report.lists_match) {
                return Err(violation(
                    "distributed boxes differ from centralized boxes".into(),
                ));
            }
            Some(OverlayRow {
                seed,
                density,
                trial,
                report,
            })
        } else {
            None
        };
        let regime = Regime::of(&inst.abs);
        let ctx = if cfg.algorithms.contains(&Algorithm::Bbr) {
            // A weight mode whose hypothesis the instance violates leaves
            // the box router without a graph.
            BbrContext::new(&inst.g, inst.abs.clone(), cfg.weight(), cfg.params()).ok()
        } else {
            None
        };
        let mut records = Vec::with_capacity(cfg.algorithms.len());
        for &a in &cfg.algorithms {
            let trace = route(a, &inst, ctx.as_ref(), cfg, s, t)
                .map_err(|source| HarnessError::Routing { seed, source })?;
            let (length, hops, outcome) = match &trace {
                Some(tr) => (tr.length, tr.hops.len() - 1, tr.outcome.to_string()),
                None => (f64::NAN, 0, "failed(hypothesis)".to_owned()),
            };
            let delivered = trace.as_ref().is_some_and(PathTrace::delivered);
            let ratio = if delivered {
                perf(length, opt).map_err(|e| violation(format!("{a}: {e}")))?
            } else {
                f64::NAN
            };
            if a == Algorithm::Bbr && delivered && cfg.scenario == Scenario::AnyPair {
                if let Some(c) = regime.ceiling() {
                    if ratio > c {
                        return Err(violation(format!(
                            "BBR perf {ratio} exceeds the {} ceiling {c}",
                            regime.name()
                        )));
                    }
                }
            }
            records.push(TrialRecord {
                seed,
                density,
                trial,
                s,
                t,
                algorithm: a,
                length,
                optimal: opt,
                perf: ratio,
                outcome,
                hops,
                regime,
            });
        }
        return Ok(TrialRun::Done {
            records,
            overlay,
            notes,
        });
    }
    notes.push(format!(
        "density {density} trial {trial}: dropped after {MAX_INSTANCE_ATTEMPTS} instances"
    ));
    Ok(TrialRun::Dropped(notes))
}

/// Whether any of the first few instances at `density` can be generated.
fn density_feasible(cfg: &ExperimentConfig, density: f64) -> Result<(), String> {
    let mut last = String::new();
    for attempt in 0..SPARSE_PROBE_ATTEMPTS {
        match generate_udg(density, cfg.side, trial_seed(cfg.seed, density, 0, attempt)) {
            Ok(_) => return Ok(()),
            Err(e @ NetgenError::TooSparse(_)) => last = e.to_string(),
            Err(e) => return Err(e.to_string()),
        }
    }
    Err(last)
}

/// Runs every trial of every density. Output order is (density, trial,
/// algorithm) regardless of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    let mut notes = cfg.validate()?;
    let mut skipped: HashMap<usize, String> = HashMap::new();
    for (i, &d) in cfg.densities.iter().enumerate() {
        if let Err(e) = density_feasible(cfg, d) {
            notes.push(format!("density {d} skipped: {e}"));
            skipped.insert(i, e);
        }
    }
    let jobs: Vec<(f64, usize)> = cfg
        .densities
        .iter()
        .enumerate()
        .filter(|(i, _)| !skipped.contains_key(i))
        .flat_map(|(_, &d)| (0..cfg.trials).map(move |k| (d, k)))
        .collect();
    let runs: Vec<TrialRun> = jobs
        .par_iter()
        .map(|&(d, k)| run_trial(cfg, d, k))
        .collect::<Result<_, _>>()?;
    let mut records = Vec::new();
    let mut overlay = Vec::new();
    for run in runs {
        match run {
            TrialRun::Done {
                records: r,
                overlay: o,
                notes: n,
            } => {
                records.extend(r);
                overlay.extend(o);
                notes.extend(n);
            }
            TrialRun::Dropped(n) => notes.extend(n),
        }
    }
    let mut summaries = summarize(&records, &cfg.densities, &cfg.algorithms);
    for (i, reason) in skipped {
        summaries[i].skipped = Some(reason);
    }
    Ok(ExperimentResult {
        records,
        summaries,
        notes,
        overlay,
    })
}

/// Per-density means over delivered trials.
pub fn summarize(
    records: &[TrialRecord],
    densities: &[f64],
    algorithms: &[Algorithm],
) -> Vec<DensitySummary> {
    densities
        .iter()
        .map(|&d| {
            let at: Vec<&TrialRecord> = records.iter().filter(|r| r.density == d).collect();
            let algorithms = algorithms
                .iter()
                .map(|&a| {
                    let mine: Vec<&&TrialRecord> = at.iter().filter(|r| r.algorithm == a).collect();
                    let ok: Vec<f64> = mine
                        .iter()
                        .filter(|r| r.delivered())
                        .map(|r| r.perf)
                        .collect();
                    AlgorithmSummary {
                        algorithm: a,
                        trials: mine.len(),
                        delivered: ok.len(),
                        mean_perf: ok.iter().sum::<f64>() / ok.len() as f64,
                        max_perf: ok.iter().copied().fold(f64::NAN, f64::max),
                    }
                })
                .collect::<Vec<_>>();
            DensitySummary {
                density: d,
                trials: algorithms.first().map_or(0, |s| s.trials),
                skipped: None,
                algorithms,
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SignTest {
    /// Trials where the first algorithm is strictly better.
    pub wins: u64,
    pub losses: u64,
    pub ties: u64,
    /// One-sided p-value of at least `wins` successes under a fair coin.
    pub p_value: f64,
}

impl SignTest {
    pub fn significant(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// Paired one-sided sign test that `better` has lower perf than `other`
/// at `density`. Trials where either failed count as ties.
pub fn sign_test(
    records: &[TrialRecord],
    density: f64,
    better: Algorithm,
    other: Algorithm,
) -> SignTest {
    let pick = |a: Algorithm| -> HashMap<usize, f64> {
        records
            .iter()
            .filter(|r| r.density == density && r.algorithm == a && r.delivered())
            .map(|r| (r.trial, r.perf))
            .collect()
    };
    let (x, y) = (pick(better), pick(other));
    let trials: std::collections::BTreeSet<usize> = records
        .iter()
        .filter(|r| r.density == density)
        .map(|r| r.trial)
        .collect();
    let (mut wins, mut losses, mut ties) = (0, 0, 0);
    for k in trials {
        match (x.get(&k), y.get(&k)) {
            (Some(a), Some(b)) if a < b => wins += 1,
            (Some(a), Some(b)) if a > b => losses += 1,
            _ => ties += 1,
        }
    }
    let n = wins + losses;
    let p_value = if wins == 0 || n == 0 {
        1.0
    } else {
        Binomial::new(0.5, n).expect("valid binomial").sf(wins - 1)
    };
    SignTest {
        wins,
        losses,
        ties,
        p_value,
    }
}

const HEADER: [&str; 12] = [
    "seed",
    "density",
    "trial",
    "s",
    "t",
    "algorithm",
    "length",
    "optimal",
    "perf",
    "outcome",
    "hops",
    "regime",
];

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text of `records`: header plus one row each, floats with 17
/// significant digits.
pub fn records_to_csv(records: &[TrialRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER).expect("in-memory write");
    for r in records {
        w.write_record([
            r.seed.to_string(),
            float(r.density),
            r.trial.to_string(),
            r.s.to_string(),
            r.t.to_string(),
            r.algorithm.to_string(),
            float(r.length),
            float(r.optimal),
            float(r.perf),
            r.outcome.clone(),
            r.hops.to_string(),
            r.regime.name().to_owned(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("ascii")
}

pub fn parse_csv(text: &str) -> Result<Vec<TrialRecord>, HarnessError> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| HarnessError::Csv {
        line: 1,
        reason: e.to_string(),
    })?;
    if header.iter().ne(HEADER) {
        return Err(HarnessError::Csv {
            line: 1,
            reason: "unexpected header".into(),
        });
    }
    rd.records()
        .enumerate()
        .map(|(i, row)| {
            let line = i + 2;
            let err = |reason: String| HarnessError::Csv { line, reason };
            let row = row.map_err(|e| err(e.to_string()))?;
            if row.len() != HEADER.len() {
                return Err(err(format!("{} fields", row.len())));
            }
            fn num<T: FromStr>(f: &str, name: &str) -> Result<T, String> {
                f.parse().map_err(|_| format!("bad {name} {f:?}"))
            }
            let regime = match &row[11] {
                "disjoint" => Regime::Disjoint,
                "pairwise" => Regime::Pairwise,
                "general" => Regime::General,
                other => return Err(err(format!("bad regime {other:?}"))),
            };
            Ok(TrialRecord {
                seed: num(&row[0], "seed").map_err(err)?,
                density: num(&row[1], "density").map_err(err)?,
                trial: num(&row[2], "trial").map_err(err)?,
                s: num(&row[3], "s").map_err(err)?,
                t: num(&row[4], "t").map_err(err)?,
                algorithm: row[5]
                    .parse()
                    .map_err(|e: HarnessError| err(e.to_string()))?,
                length: num(&row[6], "length").map_err(err)?,
                optimal: num(&row[7], "optimal").map_err(err)?,
                perf: num(&row[8], "perf").map_err(err)?,
                outcome: row[9].to_owned(),
                hops: num(&row[10], "hops").map_err(err)?,
                regime,
            })
        })
        .collect()
}

pub fn write_csv(records: &[TrialRecord], path: &Path) -> Result<(), HarnessError> {
    std::fs::write(path, records_to_csv(records)).map_err(|source| HarnessError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn read_csv(path: &Path) -> Result<Vec<TrialRecord>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_csv(&text)
}

/// Overlay statistics as CSV, one row per instance.
pub fn overlay_to_csv(rows: &[OverlayRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "seed",
        "density",
        "trial",
        "nodes",
        "holes",
        "largest_hole",
        "aggregation_rounds",
        "total_rounds",
        "round_constant",
        "max_messages_per_node_round",
        "max_plain_storage",
        "max_holder_storage",
        "max_peak_storage",
        "boxes_match",
        "lists_match",
    ])
    .expect("in-memory write");
    for row in rows {
        let r = &row.report;
        w.write_record([
            row.seed.to_string(),
            float(row.density),
            row.trial.to_string(),
            r.nodes.to_string(),
            r.holes.to_string(),
            r.largest_hole.to_string(),
            r.aggregation_rounds.to_string(),
            r.total_rounds.to_string(),
            float(r.round_constant),
            r.max_messages_per_node_round.to_string(),
            r.max_plain_storage.to_string(),
            r.max_holder_storage.to_string(),
            r.max_peak_storage.to_string(),
            r.boxes_match.to_string(),
            r.lists_match.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("ascii")
}

/// Reruns the sweep with each clique parameter of the quadratic weighting.
pub fn alpha_sweep(
    cfg: &ExperimentConfig,
    alphas: &[f64],
) -> Result<Vec<(f64, Vec<DensitySummary>)>, HarnessError> {
    alphas
        .iter()
        .map(|&alpha| {
            let c = ExperimentConfig {
                alpha,
                weight_mode: WeightChoice::Quadratic,
                algorithms: vec![Algorithm::Bbr],
                ..cfg.clone()
            };
            run_experiment(&c).map(|r| (alpha, r.summaries))
        })
        .collect()
}
