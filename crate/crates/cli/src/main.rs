//! Command-line front end: instance generation, PPSZ runs, tree exports,
//! distribution reports, structural reports, and the constants audit.
//!
//! Output is JSON by default (CSV for tables); every payload embeds the
//! invoked configuration, the seed, and the crate version so runs are
//! reproducible byte for byte.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ppsz_core::cct::{self, CutThreshold};
use ppsz_core::dist::{self, GammaSpec, GraphShape, KlMode, PlacementSampler};
use ppsz_core::formula::{self, CnfFormula, VarId};
use ppsz_core::imply::{Implier, SearchMode};
use ppsz_core::{audit, gw, ppsz, structure};
use serde::Serialize;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug, Serialize)]
#[command(name = "ppsz", version, about = "PPSZ laboratory")]
struct Cli {
    /// Worker threads for Monte Carlo loops (0 = all cores). Results are
    /// identical for every thread count.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Generate a uniquely satisfiable instance (plus a JSON sidecar).
    Gen(GenArgs),
    /// Monte Carlo success probability of the algorithm on an instance.
    Solve(SolveArgs),
    /// Per-variable forced frequencies over sampled orders.
    Forced(ForcedArgs),
    /// Ad-hoc bounded-implication query.
    Imply(ImplyArgs),
    /// Build a critical clause tree; JSON dump and optional DOT export.
    Cct(CctArgs),
    /// Monte Carlo cut probabilities on trees.
    Cutprob(CutprobArgs),
    /// Tabulate the branching-process fixed points to CSV.
    Gw(GwArgs),
    /// Distribution tools: sample dumps, divergence reports, density grids.
    Dist(DistArgs),
    /// Structural report: indegrees, the degree-2 subgraph and its parts.
    Structure(StructureArgs),
    /// Recompute and certify the analysis constants.
    Audit(AuditArgs),
}

#[derive(Args, Debug, Serialize)]
struct GenArgs {
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 4.0)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the DIMACS file; the sidecar lands next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct SolveArgs {
    cnf: PathBuf,
    #[arg(long, default_value_t = 3)]
    w: usize,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// uniform, matched, or a bias name (main, twocc, id01, ...).
    #[arg(long, default_value = "uniform")]
    dist: String,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
struct ForcedArgs {
    cnf: PathBuf,
    #[arg(long, default_value_t = 3)]
    w: usize,
    #[arg(long, default_value_t = 500)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "uniform")]
    dist: String,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
}

#[derive(Args, Debug, Serialize)]
struct ImplyArgs {
    cnf: PathBuf,
    #[arg(long)]
    var: u32,
    #[arg(long)]
    value: u8,
    #[arg(long, default_value_t = 3)]
    w: usize,
    /// Use the reference all-subsets search instead of the pruned one.
    #[arg(long, default_value_t = false)]
    exhaustive: bool,
    #[arg(long, default_value_t = 4)]
    w_cap: usize,
}

#[derive(Args, Debug, Serialize)]
struct CctArgs {
    cnf: PathBuf,
    #[arg(long)]
    var: u32,
    #[arg(long, default_value_t = 3)]
    height: usize,
    /// Write a DOT rendering here.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct CutprobArgs {
    /// Build the tree from this instance (with --var/--height)...
    #[arg(long)]
    cnf: Option<PathBuf>,
    #[arg(long)]
    var: Option<u32>,
    #[arg(long, default_value_t = 3)]
    height: usize,
    /// ...or use the complete (k-1)-ary tree of this width...
    #[arg(long)]
    complete_k: Option<usize>,
    /// ...truncated at this depth.
    #[arg(long, default_value_t = 10)]
    depth: usize,
    /// Fixed threshold; omit for the root-relative mode.
    #[arg(long)]
    r: Option<f64>,
    #[arg(long, default_value = "uniform")]
    dist: String,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct GwArgs {
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Number of grid rows over [0, 1].
    #[arg(long, default_value_t = 101)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct DistArgs {
    #[command(subcommand)]
    action: DistAction,
}

#[derive(Subcommand, Debug, Serialize)]
enum DistAction {
    /// CSV dump of samples (univariate, pair, or graph).
    Sample {
        #[arg(long, default_value = "main")]
        gamma: String,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `univariate`, `pair`, `path:<t>`, or `cycle:<t>`.
        #[arg(long, default_value = "univariate")]
        shape: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Divergence report (JSON): univariate envelope and graph expansion.
    Kl {
        #[arg(long, default_value = "main")]
        gamma: String,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long)]
        rho: Option<f64>,
        /// `path:<t>` or `cycle:<t>`, optional graph part.
        #[arg(long)]
        shape: Option<String>,
        /// Monte Carlo trials for the graph estimate (0 = expansion only).
        #[arg(long, default_value_t = 0)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// CSV grid of gamma, phi, and the univariate density.
    Density {
        #[arg(long, default_value = "main")]
        gamma: String,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Serialize)]
struct StructureArgs {
    cnf: PathBuf,
    #[arg(long, default_value_t = 4)]
    k_prime: u32,
    #[arg(long, default_value_t = structure::DEFAULT_THRESHOLD)]
    thr: f64,
}

#[derive(Args, Debug, Serialize, Clone)]
struct AuditArgs {
    /// Comma-separated entry ids (default: everything).
    #[arg(long, value_delimiter = ',')]
    ids: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
enum Format {
    Json,
    Table,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .expect("thread pool");
    }
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn envelope(cli: &Cli, seed: Option<u64>, payload: serde_json::Value) -> serde_json::Value {
    json!({
        "config": &cli.command,
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
        "result": payload,
    })
}

fn csv_header(cli: &Cli, seed: Option<u64>) -> String {
    let config = serde_json::to_string(&cli.command).unwrap();
    let seed = seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into());
    format!(
        "# config: {config}\n# seed: {seed}\n# version: {}\n",
        env!("CARGO_PKG_VERSION")
    )
}

fn load(path: &PathBuf) -> Result<CnfFormula> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(formula::parse_dimacs(&text)?)
}

fn sampler_for(
    name: &str,
    epsilon: f64,
    rho: Option<f64>,
    f: Option<&CnfFormula>,
) -> Result<Box<dyn PlacementSampler>> {
    Ok(match name {
        "uniform" => Box::new(dist::UniformSampler),
        "matched" => {
            let f = f.context("the matched distribution needs an instance")?;
            let partition = structure::partition_high_low(f, structure::DEFAULT_THRESHOLD, 4)?;
            let sg = structure::sibling_graph(f)?;
            Box::new(structure::CorrelatedSampler::new(&partition, &sg, epsilon)?)
        }
        other => {
            let spec = GammaSpec::by_name(other, rho)?;
            Box::new(dist::IidBiasedSampler::new(spec, epsilon)?)
        }
    })
}

fn parse_shape(text: &str) -> Result<GraphShape> {
    let (kind, t) = text
        .split_once(':')
        .with_context(|| format!("shape {text:?} is not path:<t> or cycle:<t>"))?;
    let t: usize = t.parse().context("bad shape size")?;
    Ok(match kind {
        "path" => GraphShape::path(t),
        "cycle" => GraphShape::cycle(t),
        _ => bail!("shape kind {kind:?} is not path or cycle"),
    })
}

fn write_or_print(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text)
                .with_context(|| format!("cannot write {}", path.display()))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Gen(args) => {
            let f = formula::generate_unique_instance(args.n, args.k, args.density, args.seed)?;
            let comments = vec![
                format!("generated unique-solution instance, seed {}", args.seed),
                format!("n={} k={} density={}", args.n, args.k, args.density),
            ];
            std::fs::write(&args.out, formula::write_dimacs(&f, &comments))?;
            let sidecar = formula::GeneratedSidecar {
                n: args.n,
                k: args.k,
                seed: args.seed,
                unique_solution: vec![1; args.n as usize],
            };
            let sidecar_path = args.out.with_extension("json");
            std::fs::write(&sidecar_path, serde_json::to_string_pretty(&sidecar)?)?;
            println!(
                "{}",
                envelope(
                    cli,
                    Some(args.seed),
                    json!({
                        "clauses": f.clauses().len(),
                        "dimacs": args.out,
                        "sidecar": sidecar_path,
                    })
                )
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve(args) => {
            let f = load(&args.cnf)?.normalize_all_ones()?;
            let sampler = sampler_for(&args.dist, args.epsilon, args.rho, Some(&f))?;
            let est = ppsz::success_probability_mc(&f, args.w, &*sampler, args.trials, args.seed)?;
            println!(
                "{}",
                envelope(
                    cli,
                    Some(args.seed),
                    json!({
                        "success_estimate": est.mean,
                        "stderr": est.stderr,
                        "forced_mean": est.forced_mean,
                        "trials": est.trials,
                        "seed": est.seed,
                        "distribution": est.distribution,
                    })
                )
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Forced(args) => {
            let f = load(&args.cnf)?.normalize_all_ones()?;
            let sampler = sampler_for(&args.dist, args.epsilon, None, Some(&f))?;
            let freq = ppsz::forced_statistics(&f, args.w, &*sampler, args.trials, args.seed)?;
            println!(
                "{}",
                envelope(
                    cli,
                    Some(args.seed),
                    json!({
                        "trials": args.trials,
                        "distribution": sampler.describe(),
                        "forced_frequency": freq,
                    })
                )
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Imply(args) => {
            let f = load(&args.cnf)?;
            let cfg = Implier {
                cap: args.w_cap.max(args.w),
                mode: if args.exhaustive {
                    SearchMode::Exhaustive
                } else {
                    SearchMode::Connected
                },
            };
            let implied = ppsz_core::imply::w_implies_with(
                &cfg,
                &f,
                args.w,
                VarId(args.var),
                args.value != 0,
            )?;
            println!(
                "{}",
                envelope(cli, None, json!({ "implied": implied, "w": args.w }))
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Cct(args) => {
            let f = load(&args.cnf)?;
            let mut tree = cct::build_cct(&f, VarId(args.var), args.height)?;
            tree.mark_canonical(&f)?;
            if let Some(dot) = &args.dot {
                std::fs::write(dot, cct::cct_to_dot(&tree))?;
            }
            println!("{}", envelope(cli, None, serde_json::to_value(&tree)?));
            Ok(ExitCode::SUCCESS)
        }
        Command::Cutprob(args) => {
            let tree = match (&args.cnf, args.complete_k) {
                (Some(path), None) => {
                    let f = load(path)?;
                    let var = args.var.context("--var is required with --cnf")?;
                    let mut t = cct::build_cct(&f, VarId(var), args.height)?;
                    t.mark_canonical(&f)?;
                    t.to_labeled()
                }
                (None, Some(k)) => cct::complete_tree(k, args.depth),
                _ => bail!("pass exactly one of --cnf or --complete-k"),
            };
            let sampler = sampler_for(&args.dist, args.epsilon, None, None)?;
            let threshold = match args.r {
                Some(r) => CutThreshold::Fixed(r),
                None => CutThreshold::RootRelative,
            };
            let est = cct::cut_probability_mc(&tree, &*sampler, threshold, args.trials, args.seed)?;
            println!(
                "{}",
                envelope(
                    cli,
                    Some(args.seed),
                    json!({
                        "estimate": est.mean,
                        "stderr": est.stderr,
                        "trials": est.trials,
                        "r": args.r,
                        "distribution": sampler.describe(),
                    })
                )
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Gw(args) => {
            let mut csv = csv_header(cli, None);
            csv.push_str("r,Q,P\n");
            for i in 0..args.grid {
                let r = i as f64 / (args.grid - 1).max(1) as f64;
                csv.push_str(&format!("{r},{},{}\n", gw::q(args.k, r), gw::p(args.k, r)));
            }
            csv.push_str(&format!("# s_{} = {}\n", args.k, gw::s(args.k)));
            write_or_print(args.out.as_ref(), &csv)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Dist(args) => run_dist(cli, args),
        Command::Structure(args) => {
            let f = load(&args.cnf)?.normalize_all_ones()?;
            let report = structure::structure_report(&f, args.k_prime, args.thr)?;
            println!("{}", envelope(cli, None, serde_json::to_value(&report)?));
            Ok(ExitCode::SUCCESS)
        }
        Command::Audit(args) => {
            let selection = if args.ids.is_empty() {
                None
            } else {
                Some(args.ids.clone())
            };
            let report = audit::run_audit(selection);
            match args.format {
                Format::Json => {
                    println!("{}", envelope(cli, None, serde_json::to_value(&report)?));
                }
                Format::Table => {
                    print!("{}", report.render_table());
                    println!(
                        "{} entries, {} flags, {} failures",
                        report.entries.len(),
                        report.flags().len(),
                        report.failures().len()
                    );
                }
            }
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn run_dist(cli: &Cli, args: &DistArgs) -> Result<ExitCode> {
    match &args.action {
        DistAction::Sample {
            gamma,
            epsilon,
            rho,
            count,
            seed,
            shape,
            out,
        } => {
            let spec = GammaSpec::by_name(gamma, *rho)?;
            let mut csv = csv_header(cli, Some(*seed));
            let mut rng = ppsz_core::seeds::rng(*seed);
            match shape.as_str() {
                "univariate" => {
                    dist::validate_univariate(&spec, *epsilon)?;
                    csv.push_str("x\n");
                    for _ in 0..*count {
                        csv.push_str(&format!(
                            "{}\n",
                            dist::sample_univariate(&spec, *epsilon, &mut rng)
                        ));
                    }
                }
                "pair" => {
                    csv.push_str("x,y\n");
                    for _ in 0..*count {
                        let (x, y) = dist::sample_pair(&spec, *epsilon, &mut rng);
                        csv.push_str(&format!("{x},{y}\n"));
                    }
                }
                other => {
                    let g = parse_shape(other)?;
                    let mut stats = dist::SampleStats::default();
                    csv.push_str(
                        &(0..g.vertices)
                            .map(|i| format!("x{i}"))
                            .collect::<Vec<_>>()
                            .join(","),
                    );
                    csv.push('\n');
                    for _ in 0..*count {
                        let xs = dist::sample_graph(&g, &spec, *epsilon, &mut rng, &mut stats)?;
                        let row: Vec<String> = xs.iter().map(f64::to_string).collect();
                        csv.push_str(&row.join(","));
                        csv.push('\n');
                    }
                    csv.push_str(&format!(
                        "# acceptance_ratio: {}\n",
                        stats.acceptance_ratio()
                    ));
                }
            }
            write_or_print(out.as_ref(), &csv)?;
            Ok(ExitCode::SUCCESS)
        }
        DistAction::Kl {
            gamma,
            epsilon,
            rho,
            shape,
            trials,
            seed,
        } => {
            let spec = GammaSpec::by_name(gamma, *rho)?;
            let uni = dist::kl_univariate(&spec, *epsilon);
            let moments = dist::moments(&spec);
            let mut payload = json!({
                "univariate": uni,
                "moments": moments,
            });
            if let Some(text) = shape {
                let g = parse_shape(text)?;
                let expansion = dist::kl_graph(&g, &spec, *epsilon, KlMode::MomentExpansion)?;
                payload["graph_expansion"] = json!(expansion);
                payload["graph_bound"] = json!(0.00638 * epsilon * epsilon * g.edges.len() as f64);
                if *trials > 0 {
                    let mc = dist::kl_graph(
                        &g,
                        &spec,
                        *epsilon,
                        KlMode::MonteCarlo {
                            trials: *trials,
                            seed: *seed,
                        },
                    )?;
                    payload["graph_monte_carlo"] = json!(mc);
                }
            }
            println!("{}", envelope(cli, Some(*seed), payload));
            Ok(ExitCode::SUCCESS)
        }
        DistAction::Density {
            gamma,
            epsilon,
            rho,
            grid,
            out,
        } => {
            let spec = GammaSpec::by_name(gamma, *rho)?;
            let mut csv = csv_header(cli, None);
            csv.push_str("r,gamma,phi,density\n");
            for i in 0..=*grid {
                let r = i as f64 / *grid as f64;
                csv.push_str(&format!(
                    "{r},{},{},{}\n",
                    spec.gamma(r),
                    spec.phi(r),
                    1.0 + epsilon * spec.phi(r)
                ));
            }
            write_or_print(out.as_ref(), &csv)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
