//! Command-line surface for the coordination-detection pipeline.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use coordnet::actions::ActionType;
use coordnet::ingest::{load_dataset, load_profiles, Timeframe};
use coordnet::pipeline::{run_bench, run_pipeline, RunConfig, StageSet};
use coordnet::report::render_run_dir;
use coordnet::synth::CampaignSpec;
use coordnet::window::{sweep_windows, write_sweep_csv, SweepOptions, DEFAULT_SWEEP_WINDOWS};

#[derive(Parser)]
#[command(name = "coordnet", version, about = "Detect coordinated user groups in post streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunOverrides {
    /// Run configuration (TOML or JSON).
    #[arg(long)]
    config: PathBuf,
    /// Fixed window in seconds (mutually exclusive with --sweep).
    #[arg(long)]
    window: Option<u64>,
    /// Comma-separated sweep grid in seconds (mutually exclusive with --window).
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<u64>>,
    /// Fraction of posts kept for sweeping, by stable post-id hash.
    #[arg(long)]
    sample_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Channels to run: semantic, referral, social.
    #[arg(long, value_delimiter = ',')]
    channels: Option<Vec<String>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Match URLs verbatim instead of stripping tracking decoration.
    #[arg(long)]
    url_verbatim: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Validate input files and print ingest counters.
    IngestCheck {
        #[arg(long)]
        posts: PathBuf,
        #[arg(long)]
        profiles: Option<PathBuf>,
        #[arg(long, default_value = "event")]
        event_id: String,
        #[arg(long)]
        timeframe_start: Option<String>,
        #[arg(long)]
        timeframe_end: Option<String>,
    },
    /// Sweep candidate windows and report the modularity-optimal one.
    Sweep(RunOverrides),
    /// Run ingest through clustering and write graph exports plus manifest.
    Detect(RunOverrides),
    /// Run the full pipeline including themes and user analysis.
    Analyze(RunOverrides),
    /// Generate a synthetic campaign, run detection and score it.
    Bench {
        /// Campaign spec (JSON).
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        window: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<u64>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "bench-out")]
        out: PathBuf,
    },
    /// Render the human-readable report for a finished run directory.
    Report {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn parse_channels(raw: &[String]) -> anyhow::Result<Vec<ActionType>> {
    let mut channels = Vec::new();
    for name in raw {
        match ActionType::parse(name) {
            Some(c) if !channels.contains(&c) => channels.push(c),
            Some(_) => {}
            None => bail!("unknown channel {name:?}; expected semantic, referral or social"),
        }
    }
    if channels.is_empty() {
        bail!("no channels selected");
    }
    Ok(channels)
}

fn effective_config(overrides: &RunOverrides) -> anyhow::Result<RunConfig> {
    let mut config = RunConfig::from_file(&overrides.config)
        .with_context(|| format!("loading {}", overrides.config.display()))?;
    if let Some(w) = overrides.window {
        config.window_seconds = Some(w);
        config.sweep_windows = None;
    }
    if let Some(grid) = &overrides.sweep {
        config.sweep_windows = Some(grid.clone());
        config.window_seconds = None;
    }
    if let Some(f) = overrides.sample_fraction {
        config.sample_fraction = Some(f);
    }
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(raw) = &overrides.channels {
        config.channels = parse_channels(raw)?;
    }
    if let Some(out) = &overrides.out {
        config.out_dir = out.clone();
    }
    if overrides.url_verbatim {
        config.url_verbatim = true;
    }
    Ok(config)
}

fn cmd_ingest_check(
    posts: &Path,
    profiles: Option<&PathBuf>,
    event_id: &str,
    start: Option<&String>,
    end: Option<&String>,
) -> anyhow::Result<()> {
    let timeframe = match (start, end) {
        (Some(s), Some(e)) => Some(Timeframe {
            start: s.parse().context("bad --timeframe-start")?,
            end: e.parse().context("bad --timeframe-end")?,
        }),
        (None, None) => None,
        _ => bail!("--timeframe-start and --timeframe-end must be given together"),
    };
    let dataset = load_dataset(posts, event_id, timeframe)?;
    let s = &dataset.summary;
    println!("posts file: {}", posts.display());
    println!("  total lines      {}", s.total_lines);
    println!("  kept             {}", s.kept);
    println!(
        "  dropped filter   {} (not original {}, outside timeframe {})",
        s.dropped_by_filter, s.dropped_not_original, s.dropped_outside_timeframe
    );
    println!(
        "  dropped malformed {} (duplicate ids {})",
        s.dropped_malformed, s.duplicate_post_ids
    );
    for warning in &s.warnings {
        println!("  warning: {warning}");
    }
    if let Some(path) = profiles {
        let (list, summary) = load_profiles(path)?;
        println!("profiles file: {}", path.display());
        println!("  total lines {}", summary.total_lines);
        println!("  loaded      {}", list.len());
        println!("  duplicates  {}", summary.duplicates);
        println!("  skipped     {}", summary.skipped);
    }
    Ok(())
}

fn cmd_sweep(overrides: &RunOverrides) -> anyhow::Result<()> {
    let config = effective_config(overrides)?;
    let grid = config
        .sweep_windows
        .clone()
        .unwrap_or_else(|| DEFAULT_SWEEP_WINDOWS.to_vec());
    std::fs::create_dir_all(&config.out_dir)
        .with_context(|| format!("creating {}", config.out_dir.display()))?;
    for event in &config.events {
        let timeframe = config.timeframe_of(event)?;
        let mut dataset = load_dataset(&event.posts, &event.id, timeframe)?;
        if let Some(profile_path) = &event.profiles {
            dataset.profiles = load_profiles(profile_path)?.0;
        }
        // The standalone sweep mirrors the half-data selection protocol, so
        // the sample fraction defaults to 0.5 here (and only here).
        let result = sweep_windows(
            &dataset,
            &grid,
            SweepOptions {
                seed: config.seed,
                sample_fraction: config.sample_fraction.unwrap_or(0.5),
                extract: coordnet::actions::ExtractOptions {
                    url_verbatim: config.url_verbatim,
                },
                second_threshold_pass: config.second_threshold_pass,
                semantics: config.window_semantics,
            },
        )?;
        let csv_path = config.out_dir.join(format!("{}.sweep.csv", event.id));
        let mut buf = Vec::new();
        write_sweep_csv(&result, &mut buf)?;
        std::fs::write(&csv_path, &buf)?;
        let json_path = config.out_dir.join(format!("{}.sweep.json", event.id));
        std::fs::write(&json_path, serde_json::to_string_pretty(&result)?)?;
        println!("event {}", event.id);
        println!("  window_s   q_semantic   q_referral   q_social     q_avg");
        for c in &result.candidates {
            println!(
                "  {:>8} {:>12.6} {:>12.6} {:>12.6} {:>9.6}{}",
                c.window_seconds,
                c.q_by_type[0],
                c.q_by_type[1],
                c.q_by_type[2],
                c.q_avg,
                if c.window_seconds == result.selected_window {
                    "  <= selected"
                } else {
                    ""
                }
            );
        }
        println!("  selected window: {} s", result.selected_window);
        println!("  wrote {}", csv_path.display());
    }
    Ok(())
}

fn cmd_run(overrides: &RunOverrides, stages: StageSet) -> anyhow::Result<()> {
    let config = effective_config(overrides)?;
    let output = run_pipeline(&config, stages)?;
    println!("run complete; manifest at {}", config.out_dir.join("manifest.json").display());
    for (event, ev) in &output.manifest.events {
        println!("event {event}: window {} s", ev.selected_window);
        for (channel, ch) in &ev.channels {
            println!(
                "  {channel}: {} -> {} nodes, {} -> {} links, threshold {}, {} communities, Q {:.4}",
                ch.coordinated.node_count,
                ch.filtered.node_count,
                ch.coordinated.edge_count,
                ch.filtered.edge_count,
                ch.threshold,
                ch.communities,
                ch.modularity
            );
        }
    }
    Ok(())
}

fn cmd_bench(
    spec_path: &Path,
    window: Option<u64>,
    sweep: Option<Vec<u64>>,
    seed: Option<u64>,
    out: &Path,
) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(spec_path)
        .with_context(|| format!("reading {}", spec_path.display()))?;
    let spec = CampaignSpec::from_json(&text)?;
    let (window, sweep) = match (window, sweep) {
        (Some(w), None) => (Some(w), None),
        (None, Some(grid)) => (None, Some(grid)),
        (None, None) => (Some(300), None),
        (Some(_), Some(_)) => bail!("--window and --sweep are mutually exclusive"),
    };
    let seed = seed.unwrap_or(spec.seed);
    let bench = run_bench(&spec, window, sweep, seed, out)?;
    let s = &bench.score;
    println!("bench complete; outputs in {}", out.display());
    println!(
        "precision {:.4}  recall {:.4}  f1 {:.4}  (planted {}, predicted {}, hits {})",
        s.precision, s.recall, s.f1, s.planted_users, s.predicted_positives, s.true_positives
    );
    for (group, recovery) in &s.per_group_recovery {
        println!("  group {group}: best-community recovery {recovery:.4}");
    }
    Ok(())
}

fn main() -> ExitCode {
    // Die quietly when stdout is a closed pipe (e.g. piped into `head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::IngestCheck {
            posts,
            profiles,
            event_id,
            timeframe_start,
            timeframe_end,
        } => cmd_ingest_check(
            posts,
            profiles.as_ref(),
            event_id,
            timeframe_start.as_ref(),
            timeframe_end.as_ref(),
        ),
        Command::Sweep(overrides) => cmd_sweep(overrides),
        Command::Detect(overrides) => cmd_run(overrides, StageSet::Detect),
        Command::Analyze(overrides) => cmd_run(overrides, StageSet::Full),
        Command::Bench {
            spec,
            window,
            sweep,
            seed,
            out,
        } => cmd_bench(spec, *window, sweep.clone(), *seed, out),
        Command::Report { out } => render_run_dir(out)
            .map(|text| print!("{text}"))
            .map_err(anyhow::Error::from),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
