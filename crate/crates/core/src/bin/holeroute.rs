use clap::{Args, Parser, Subcommand};
use holeroute::fixtures;
use holeroute::harness::{
    alpha_sweep, density_range, overlay_to_csv, run_experiment, sign_test, write_csv, Algorithm,
    DensitySummary, ExperimentConfig, HarnessError, Scenario, WeightChoice,
};
use holeroute::netgen::generate_udg;
use holeroute::topology::{build_ldel2, debug_dump, detect_holes, HoleKind};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "holeroute",
    version,
    about = "Hole-aware geometric routing simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a density sweep and write per-trial records as CSV.
    Simulate(SimulateArgs),
    /// Build one network and report its planar graph and holes.
    Topology {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        density: f64,
        #[arg(long, default_value_t = 20.0)]
        side: f64,
        /// Print every edge, face and hole cycle.
        #[arg(long)]
        dump_holes: bool,
    },
    /// Evaluate a constructed layout.
    Fixture {
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 100.0)]
        x: f64,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON file with any subset of the config fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `start:end:step` or a comma-separated list.
    #[arg(long)]
    densities: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    side: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated, e.g. `BBR,GOAFRPLUS,GPSR`.
    #[arg(long)]
    algos: Option<String>,
    /// `any` or `intersecting`.
    #[arg(long)]
    scenario: Option<String>,
    /// `exact`, `sqrt2` or `quadratic`.
    #[arg(long)]
    weight_mode: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Skip the distributed setup simulation.
    #[arg(long)]
    no_overlay: bool,
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// Also write per-instance overlay statistics here.
    #[arg(long)]
    overlay_out: Option<PathBuf>,
    /// Rerun the box router with alpha in {0.25, 0.5, 1, 2}.
    #[arg(long)]
    alpha_sweep: bool,
}

fn parse_densities(s: &str) -> Result<Vec<f64>, HarnessError> {
    let bad = || HarnessError::Config(format!("bad density list {s:?}"));
    let nums = |sep: char| -> Result<Vec<f64>, HarnessError> {
        s.split(sep)
            .map(|x| x.trim().parse().map_err(|_| bad()))
            .collect()
    };
    if s.contains(':') {
        match nums(':')?[..] {
            [a, b, step] if step > 0.0 && b >= a => Ok(density_range(a, b, step)),
            _ => Err(bad()),
        }
    } else {
        nums(',')
    }
}

fn build_config(a: &SimulateArgs) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
                path: path.clone(),
                source,
            })?;
            serde_json::from_str(&text)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(d) = &a.densities {
        cfg.densities = parse_densities(d)?;
    }
    if let Some(list) = &a.algos {
        cfg.algorithms = list
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<Result<_, _>>()?;
    }
    if let Some(s) = &a.scenario {
        cfg.scenario = s.parse::<Scenario>()?;
    }
    if let Some(w) = &a.weight_mode {
        cfg.weight_mode = w.parse::<WeightChoice>()?;
    }
    cfg.trials = a.trials.unwrap_or(cfg.trials);
    cfg.side = a.side.unwrap_or(cfg.side);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.alpha = a.alpha.unwrap_or(cfg.alpha);
    cfg.sigma = a.sigma.unwrap_or(cfg.sigma);
    cfg.check_overlay &= !a.no_overlay;
    Ok(cfg)
}

fn print_table(summaries: &[DensitySummary], algorithms: &[Algorithm]) {
    print!("{:>8} {:>6}", "density", "trials");
    for a in algorithms {
        print!(" {:>11}", a.name());
    }
    println!();
    for s in summaries {
        print!("{:>8} {:>6}", s.density, s.trials);
        if let Some(why) = &s.skipped {
            println!("  skipped: {why}");
            continue;
        }
        for a in &s.algorithms {
            print!(" {:>11.4}", a.mean_perf);
        }
        println!();
    }
}

fn simulate(a: SimulateArgs) -> Result<(), HarnessError> {
    let cfg = build_config(&a)?;
    let res = run_experiment(&cfg)?;
    for n in &res.notes {
        eprintln!("note: {n}");
    }
    write_csv(&res.records, &a.out)?;
    if let Some(path) = &a.overlay_out {
        std::fs::write(path, overlay_to_csv(&res.overlay)).map_err(|source| HarnessError::Io {
            path: path.clone(),
            source,
        })?;
    }
    print_table(&res.summaries, &cfg.algorithms);
    if cfg.algorithms.contains(&Algorithm::Bbr) && cfg.algorithms.contains(&Algorithm::GoafrPlus) {
        println!("sign test BBR < GOAFR_PLUS (one-sided):");
        for s in res.summaries.iter().filter(|s| s.skipped.is_none()) {
            let t = sign_test(
                &res.records,
                s.density,
                Algorithm::Bbr,
                Algorithm::GoafrPlus,
            );
            println!(
                "  density {:>5}: wins {:>4} losses {:>4} ties {:>4} p {:.3e}",
                s.density, t.wins, t.losses, t.ties, t.p_value
            );
        }
    }
    if a.alpha_sweep {
        for (alpha, sums) in alpha_sweep(&cfg, &[0.25, 0.5, 1.0, 2.0])? {
            println!("alpha {alpha}:");
            print_table(&sums, &[Algorithm::Bbr]);
        }
    }
    println!("wrote {} records to {}", res.records.len(), a.out.display());
    Ok(())
}

fn topology(seed: u64, density: f64, side: f64, dump: bool) -> Result<(), String> {
    let net = generate_udg(density, side, seed).map_err(|e| e.to_string())?;
    let g = build_ldel2(&net).map_err(|e| e.to_string())?;
    let holes = detect_holes(&g);
    let inner = holes
        .holes
        .iter()
        .filter(|h| h.kind == HoleKind::Inner)
        .count();
    println!(
        "nodes {} edges {} faces {} holes {} (inner {}, outer {})",
        g.node_count(),
        g.edges.len(),
        g.faces().len(),
        holes.holes.len(),
        inner,
        holes.holes.len() - inner
    );
    if dump {
        print!("{}", debug_dump(&g, &holes));
    }
    Ok(())
}

fn fixture(name: &str, x: f64) -> Result<(), String> {
    match name {
        "lower-bound" => {
            if !(x > 2.0) {
                return Err(format!("x = {x} must exceed 2"));
            }
            let r = fixtures::lower_bound_report(x).map_err(|e| e.to_string())?;
            println!("path {:.6}", r.path);
            println!("straight {:.6}", r.straight);
            println!("ratio {:.6}", r.ratio);
            Ok(())
        }
        other => Err(format!("unknown fixture {other:?}")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a).map_err(|e| {
            let code = match e {
                HarnessError::Invariant { .. } | HarnessError::BelowOptimum(_) => 2,
                _ => 1,
            };
            (code, e.to_string())
        }),
        Command::Topology {
            seed,
            density,
            side,
            dump_holes,
        } => topology(seed, density, side, dump_holes).map_err(|e| (1, e)),
        Command::Fixture { name, x } => fixture(&name, x).map_err(|e| (1, e)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
