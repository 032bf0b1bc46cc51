//! `arak`: sample, run and check planar polygonal Markov fields.
//!
//! Settings come from defaults, then `--config` (key = value lines), then
//! `ARAK_SEED`, then `--set key=value` and the dedicated flags. With `--out DIR`
//! a run writes `bundle.json` (config, version, reports, results) and its
//! sample stream; without it the stream goes to stdout and reports to stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use arak_core::arak::sample_arak;
use arak_core::contour::{theta_mass_estimator, theta_walk_estimate, VertexRule};
use arak_core::contour_bd::{run_bd, BdState, ContourEnsemble};
use arak_core::geometry::PolygonalConfiguration;
use arak_core::gibbs::ColouredConfiguration;
use arak_core::graphical::{perfect_sample, PerfectCaps};
use arak_core::harness::acceptance::{run_criterion, CRITERIA};
use arak_core::harness::{
    all_pass, export_svg, parse_domain, stats_extreme_vertices, to_json_lines, Figure, RunBundle, RunConfig,
    StatReport, SvgStyle,
};
use arak_core::metropolis::run_chain;
use arak_core::rng::{stream, tag};

const VERSION: &str = env!("ARAK_VERSION");

#[derive(Parser)]
#[command(name = "arak", version = VERSION, about = "Planar polygonal Markov fields of Arak type")]
struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (a file path for `render`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Independent draws of the Arak field.
    Sample {
        #[arg(long)]
        domain: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Metropolis chain for a Gibbs modification.
    Metropolis {
        #[arg(long)]
        domain: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        /// none, empty, black or white.
        #[arg(long)]
        boundary: Option<String>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        thin: Option<f64>,
        #[arg(long)]
        burn_in: Option<f64>,
    },
    /// Tilted free contour mass by walks and, optionally, by line arrangements.
    ContourMass {
        #[arg(long)]
        domain: Option<String>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        walks: Option<u64>,
        /// Samples per line count for the arrangement estimator; 0 skips it.
        #[arg(long, default_value_t = 0)]
        line_samples: u64,
        #[arg(long, default_value_t = 6)]
        max_lines: usize,
    },
    /// Contour birth and death dynamics with empty boundary.
    ContourBd {
        #[arg(long)]
        domain: Option<String>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        thin: Option<f64>,
        #[arg(long)]
        burn_in: Option<f64>,
    },
    /// Perfect window samples of the stationary contour field.
    Perfect {
        #[arg(long)]
        window: Option<String>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        rmax_tail: Option<f64>,
        #[arg(long)]
        clan_cap: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Acceptance suite; exits nonzero iff a criterion fails.
    Stats {
        /// Comma-separated criterion ids; all by default.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
    },
    /// SVG of one line of a JSON-lines sample stream.
    Render {
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long)]
        domain: Option<String>,
    },
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut c = match &cli.config {
        Some(p) => RunConfig::from_file(p).with_context(|| format!("reading {}", p.display()))?,
        None => RunConfig::default(),
    };
    c.apply_env()?;
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').with_context(|| format!("--set expects KEY=VALUE, got '{kv}'"))?;
        c.set(k.trim(), v.trim())?;
    }
    let mut flags: Vec<(&str, Option<String>)> = vec![("seed", cli.seed.map(|s| s.to_string()))];
    let s = |x: &Option<String>| x.clone();
    let f = |x: &Option<f64>| x.map(|v| v.to_string());
    match &cli.cmd {
        Cmd::Sample { domain, samples } => {
            c.command = "sample".into();
            flags.extend([("domain", s(domain)), ("samples", samples.map(|v| v.to_string()))]);
        }
        Cmd::Metropolis { domain, alpha, beta, a, b, boundary, horizon, thin, burn_in } => {
            c.command = "metropolis".into();
            flags.extend([
                ("domain", s(domain)),
                ("alpha", f(alpha)),
                ("beta", f(beta)),
                ("a", f(a)),
                ("b", f(b)),
                ("boundary", s(boundary)),
                ("horizon", f(horizon)),
                ("thin", f(thin)),
                ("burn_in", f(burn_in)),
            ]);
        }
        Cmd::ContourMass { domain, beta, walks, .. } => {
            c.command = "contour-mass".into();
            flags.extend([("domain", s(domain)), ("beta", f(beta)), ("walks", walks.map(|v| v.to_string()))]);
        }
        Cmd::ContourBd { domain, beta, horizon, thin, burn_in } => {
            c.command = "contour-bd".into();
            flags.extend([
                ("domain", s(domain)),
                ("beta", f(beta)),
                ("horizon", f(horizon)),
                ("thin", f(thin)),
                ("burn_in", f(burn_in)),
            ]);
        }
        Cmd::Perfect { window, beta, rmax_tail, clan_cap, samples } => {
            c.command = "perfect".into();
            flags.extend([
                ("window", s(window)),
                ("beta", f(beta)),
                ("rmax_tail", f(rmax_tail)),
                ("clan_cap", clan_cap.map(|v| v.to_string())),
                ("samples", samples.map(|v| v.to_string())),
            ]);
        }
        Cmd::Stats { .. } => c.command = "stats".into(),
        Cmd::Render { domain, .. } => {
            c.command = "render".into();
            flags.push(("domain", s(domain)));
        }
    }
    for (k, v) in flags {
        if let Some(v) = v {
            c.set(k, &v)?;
        }
    }
    if let Some(o) = &cli.out {
        c.out = Some(o.clone());
    }
    Ok(c)
}

/// Writes the bundle and stream, or prints them.
fn emit(bundle: &RunBundle, stream_name: &str, lines: &str) -> Result<()> {
    for r in &bundle.reports {
        eprintln!("{}", r.line());
    }
    match &bundle.config.out {
        Some(dir) => {
            let path = bundle.write(dir)?;
            if !lines.is_empty() {
                fs::write(dir.join(stream_name), lines)?;
            }
            eprintln!("wrote {}", path.display());
        }
        None if !lines.is_empty() => print!("{lines}"),
        None => println!("{}", serde_json::to_string_pretty(bundle)?),
    }
    Ok(())
}

fn run(cli: &Cli, cfg: RunConfig) -> Result<bool> {
    let mut bundle = RunBundle::new(VERSION, cfg.clone());
    let seed = cfg.seed;
    match &cli.cmd {
        Cmd::Sample { .. } => {
            let d = cfg.domain()?;
            let mut rng = stream(seed, &[tag::BIRTH_SITES]);
            let samples: Vec<PolygonalConfiguration> =
                (0..cfg.samples).map(|_| sample_arak(&d, &mut rng).map(|(_, c)| c)).collect::<Result<_, _>>()?;
            if samples.len() >= 10 {
                let reps = stats_extreme_vertices(&samples, &d, &cfg.thresholds)?;
                bundle.reports.extend(reps.into_iter().map(StatReport::advisory));
            }
            bundle.result("samples", samples.len())?;
            emit(&bundle, "samples.jsonl", &to_json_lines(&samples)?)?;
        }
        Cmd::Metropolis { .. } => {
            let d = cfg.domain()?;
            let (snaps, counters) =
                run_chain(&d, cfg.params()?, cfg.boundary, cfg.schedule(), &mut stream(seed, &[tag::CHAIN]))?;
            bundle.result("counters", counters)?;
            bundle.result("snapshots", snaps.len())?;
            let cfgs: Vec<&ColouredConfiguration> = snaps.iter().map(|s| &s.cfg).collect();
            emit(&bundle, "snapshots.jsonl", &to_json_lines(&cfgs)?)?;
        }
        Cmd::ContourMass { line_samples, max_lines, .. } => {
            let d = cfg.domain()?;
            let cap = 50.0 * d.diameter();
            let walk = theta_walk_estimate(
                Some(&d),
                cfg.contour_beta(),
                VertexRule::Leftmost,
                cap,
                cfg.walks,
                |_| true,
                &mut stream(seed, &[tag::WALK]),
            )?;
            bundle.reports.push(
                StatReport::new("theta_mass_walk", "estimate")
                    .estimate(walk.estimate, walk.se)
                    .judged(0.0, true)
                    .advisory(),
            );
            bundle.result("walk", walk)?;
            if *line_samples > 0 {
                let lines = theta_mass_estimator(
                    &d,
                    cfg.contour_beta(),
                    3..=*max_lines,
                    *line_samples,
                    |_| true,
                    &mut stream(seed, &[tag::BIRTH_SITES]),
                )?;
                bundle.reports.push(
                    StatReport::new(format!("theta_mass_lines_k3_{max_lines}"), "estimate")
                        .estimate(lines.estimate, lines.se)
                        .judged(0.0, true)
                        .advisory(),
                );
                bundle.result("lines", lines)?;
            }
            emit(&bundle, "", "")?;
        }
        Cmd::ContourBd { .. } => {
            let d = cfg.domain()?;
            let (snaps, end) =
                run_bd(BdState::new(d, cfg.contour_beta())?, cfg.schedule(), &mut stream(seed, &[tag::CHAIN]))?;
            bundle.result("counters", end.counters)?;
            let ens: Vec<&ContourEnsemble> = snaps.iter().map(|s| &s.ensemble).collect();
            emit(&bundle, "ensembles.jsonl", &to_json_lines(&ens)?)?;
        }
        Cmd::Perfect { .. } => {
            let w = cfg.window()?;
            let caps = PerfectCaps { clan_cap: cfg.clan_cap, tail: cfg.rmax_tail };
            let mut ens = Vec::new();
            let mut bound = 0.0;
            for k in 0..cfg.samples.max(1) as u64 {
                let sub = arak_core::rng::subseed(seed, &[tag::REPLICA, k]);
                match perfect_sample(&w, cfg.contour_beta(), sub, caps) {
                    Ok(s) => {
                        bundle.result("r_max", s.r_max)?;
                        bound = s.tail_bound;
                        ens.push(s.ensemble);
                    }
                    Err(e) => {
                        let failure = json!({
                            "schema": arak_core::harness::SCHEMA_VERSION,
                            "status": "failed",
                            "error": e.to_string(),
                            "error_kind": format!("{e:?}").split(['(', ' ', '{']).next().unwrap_or(""),
                            "sample": k,
                            "completed": ens.len(),
                            "version": VERSION,
                            "config": cfg,
                        });
                        let text = serde_json::to_string_pretty(&failure)?;
                        if let Some(dir) = &cfg.out {
                            fs::create_dir_all(dir)?;
                            fs::write(dir.join("failure.json"), &text)?;
                        }
                        println!("{text}");
                        return Ok(false);
                    }
                }
            }
            bundle.result("tail_bound", bound)?;
            emit(&bundle, "ensembles.jsonl", &to_json_lines(&ens)?)?;
        }
        Cmd::Stats { criteria } => {
            let ids: Vec<u8> =
                if criteria.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { criteria.clone() };
            let mut outcomes = Vec::new();
            for id in ids {
                let o = run_criterion(id, seed, &cfg.thresholds);
                eprintln!("{}", o.line());
                bundle.reports.extend(o.reports.iter().cloned());
                outcomes.push(o);
            }
            bundle.result("criteria", &outcomes)?;
            emit(&bundle, "", "")?;
        }
        Cmd::Render { input, index, .. } => {
            let d = parse_domain(&cfg.domain)?;
            let svg = render_line(input, *index, &d)?;
            match &cfg.out {
                Some(p) => fs::write(p, svg)?,
                None => print!("{svg}"),
            }
            return Ok(true);
        }
    }
    Ok(all_pass(&bundle.reports))
}

fn render_line(input: &Path, index: usize, d: &arak_core::geometry::ConvexDomain) -> Result<String> {
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let line = text.lines().nth(index).with_context(|| format!("no line {index} in {}", input.display()))?;
    let v: serde_json::Value = serde_json::from_str(line)?;
    let data = v.get("data").cloned().unwrap_or(v);
    let style = SvgStyle::default();
    if let Ok(c) = serde_json::from_value::<ColouredConfiguration>(data.clone()) {
        return Ok(export_svg(d, Figure::Coloured(&c), &style)?);
    }
    if let Ok(e) = serde_json::from_value::<ContourEnsemble>(data.clone()) {
        return Ok(export_svg(d, Figure::Ensemble(&e), &style)?);
    }
    if let Ok(c) = serde_json::from_value::<PolygonalConfiguration>(data) {
        return Ok(export_svg(d, Figure::Configuration(&c), &style)?);
    }
    bail!("line {index} is neither a configuration nor an ensemble")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = build_config(&cli).and_then(|cfg| run(&cli, cfg));
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
