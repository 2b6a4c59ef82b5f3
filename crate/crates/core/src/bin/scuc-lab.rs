use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use scuc_lab::harness::{
    load_profile, parse_hints, run_test, run_training, write_csv, Campaign, ExperimentConfig,
    HarnessError, RunManifest, TestReport,
};
use scuc_lab::learn::TrainingStore;
use scuc_lab::powergrid::{load_instance, save_instance};
use scuc_lab::sampling::{generate_variation, ProfileStats, RatioSource, ShiftSpec};
use scuc_lab::{
    build_model, solve_scuc, HORIZON, BackendOptions, HighsBackend, Hints, Sensitivities, SolveError, SolveOptions,
};

#[derive(Parser)]
#[command(name = "scuc-lab", version, about = "Unit commitment with learned screening hints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write seeded variations of a base instance.
    Generate {
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Ratio statistics (.json) or reference daily loads (.csv).
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Draw from the shifted distribution.
        #[arg(long)]
        ood: bool,
    },
    /// Solve the training variations of a config and write the store.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the roster of a config on its test variations.
    Test {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve one instance.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        hints: Option<PathBuf>,
        /// Write the solution here instead of omitting it.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the initial model in LP format.
        #[arg(long)]
        lp: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-3)]
        gap: f64,
        #[arg(long)]
        time_limit: Option<f64>,
    },
    /// Render a metrics file written by `test`.
    Report {
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let solve_failure = e.chain().any(|cause| {
        cause.downcast_ref::<SolveError>().is_some()
            || cause
                .downcast_ref::<HarnessError>()
                .is_some_and(HarnessError::is_solve_failure)
    });
    if solve_failure {
        3
    } else {
        2
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            base,
            samples,
            seed,
            out,
            profile,
            ood,
        } => generate(&base, samples, seed, &out, profile.as_deref(), ood),
        Command::Train { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let store_dir = cfg.store.clone();
            let settings = serde_json::to_value(&cfg)?;
            let campaign = Campaign::from_config(cfg)?;
            let outcome = run_training(&campaign)?;
            outcome
                .store
                .save(&store_dir, &campaign.base, settings)
                .with_context(|| format!("writing store {}", store_dir.display()))?;
            println!(
                "{}",
                json!({
                    "store": store_dir,
                    "samples": outcome.store.len(),
                    "iterations": outcome.iterations,
                })
            );
            Ok(())
        }
        Command::Test { store, config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let output = cfg.output.clone();
            let campaign = Campaign::from_config(cfg)?;
            let store = TrainingStore::load(&store, &campaign.base)?;
            let report = run_test(&campaign, &store)?;
            fs::create_dir_all(&output).with_context(|| format!("creating {}", output.display()))?;
            let json_path = output.join("metrics.json");
            fs::write(&json_path, serde_json::to_string_pretty(&report)?)
                .with_context(|| format!("writing {}", json_path.display()))?;
            let csv_path = output.join("metrics.csv");
            let file = fs::File::create(&csv_path)
                .with_context(|| format!("writing {}", csv_path.display()))?;
            write_csv(&report.rows, file)?;
            let manifest = RunManifest::new(&report, Some(&campaign.config));
            let manifest_path = output.join("manifest.json");
            fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)
                .with_context(|| format!("writing {}", manifest_path.display()))?;
            write_csv(&report.rows, std::io::stdout().lock())?;
            Ok(())
        }
        Command::Solve {
            instance,
            hints,
            out,
            lp,
            gap,
            time_limit,
        } => solve(&instance, hints.as_deref(), out.as_deref(), lp.as_deref(), gap, time_limit),
        Command::Report {
            metrics,
            format,
            out,
        } => {
            let text = fs::read_to_string(&metrics)
                .with_context(|| format!("reading {}", metrics.display()))?;
            let report: TestReport = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", metrics.display()))?;
            if report.rows.is_empty() {
                bail!("{} holds no metrics", metrics.display());
            }
            let mut buf: Vec<u8> = Vec::new();
            match format {
                Format::Csv => write_csv(&report.rows, &mut buf)?,
                Format::Json => {
                    serde_json::to_writer_pretty(&mut buf, &RunManifest::new(&report, None))?;
                    buf.push(b'\n');
                }
            }
            match out {
                Some(path) => fs::write(&path, &buf).with_context(|| format!("writing {}", path.display()))?,
                None => std::io::stdout().lock().write_all(&buf)?,
            }
            Ok(())
        }
    }
}

fn generate(base: &Path, samples: usize, seed: u64, out: &Path, profile: Option<&Path>, ood: bool) -> Result<()> {
    let base_instance = load_instance(base)?;
    let mut spec = if ood {
        ShiftSpec::out_of_distribution()
    } else {
        ShiftSpec::in_distribution()
    };
    let stats = match profile {
        Some(p) => load_profile(p)?,
        None => {
            spec.ratios = RatioSource::Base;
            ProfileStats {
                mean: vec![1.0; HORIZON - 1],
                std_dev: vec![0.0; HORIZON - 1],
            }
        }
    };
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut index = Vec::with_capacity(samples);
    for i in 0..samples {
        let s = seed + i as u64;
        let (params, instance) = generate_variation(&base_instance, &stats, &spec, s)?;
        let name = format!("instance_{}.json", i + 1);
        save_instance(&instance, out.join(&name))?;
        index.push(json!({ "file": name, "seed": s, "params": params }));
    }
    let path = out.join("variations.json");
    fs::write(&path, serde_json::to_string_pretty(&index)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn solve(
    instance: &Path,
    hints: Option<&Path>,
    out: Option<&Path>,
    lp: Option<&Path>,
    gap: f64,
    time_limit: Option<f64>,
) -> Result<()> {
    let inst = load_instance(instance)?;
    let hints = match hints {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_hints(&text, &inst).with_context(|| format!("hints {}", p.display()))?
        }
        None => Hints::default(),
    };
    let sens = Sensitivities::new(&inst.network)?;
    if let Some(path) = lp {
        let model = build_model(&inst, &sens, &hints.enforce, &hints.hyperplanes)?;
        let file = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
        model.write_lp(std::io::BufWriter::new(file))?;
    }
    let options = SolveOptions {
        backend: BackendOptions {
            relative_gap: gap,
            time_limit,
            ..BackendOptions::test()
        },
        ..SolveOptions::default()
    };
    let outcome = solve_scuc(&inst, &sens, &hints, &options, &HighsBackend)?;
    if let Some(path) = out {
        fs::write(path, serde_json::to_string_pretty(&outcome.solution)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "objective": outcome.solution.objective,
            "stats": outcome.stats,
            "enforced": outcome.enforced.len(),
        }))?
    );
    Ok(())
}
