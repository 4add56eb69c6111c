use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, LevelFilter};

use sdsforge::checkpoint;
use sdsforge::diffusion::Denoiser;
use sdsforge::experiment::pipeline::{self, snapshot_iterations};
use sdsforge::experiment::{
    loss_csv, parse_config, report_csv, scatter_svg, sweep_csv, write_text, ExperimentConfig, REPORT_HEADER,
};
use sdsforge::generator::StyleGenerator;
use sdsforge::sds::{AdaptationReport, EvalRow};

const LOG_ENV: &str = "SDSFORGE_LOG";

#[derive(Parser)]
#[command(name = "sdsforge", version, about = "Score-distillation adaptation of toy style generators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Experiment configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct Models {
    /// Pretrained generator checkpoint.
    #[arg(long)]
    gen: PathBuf,
    /// Trained denoiser checkpoint.
    #[arg(long)]
    den: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train the conditional denoiser; writes its checkpoint and loss curve.
    TrainDenoiser {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the generator to the source class by MMD.
    PretrainGenerator {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print layer ranking and code displacement as CSV.
    SelectLayers {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        models: Models,
    },
    /// Run the full adaptation and write checkpoint, report and plots.
    Adapt {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        models: Models,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print one metric row for a generator.
    Evaluate {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        models: Models,
    },
    /// Adapt once per value of one parameter and write a combined table.
    Sweep {
        #[command(flatten)]
        config: ConfigArg,
        /// Config key, or an `sds.` key without its prefix (e.g. T_max).
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Generator checkpoint; trained from the config when absent.
        #[arg(long)]
        gen: Option<PathBuf>,
        /// Denoiser checkpoint; trained from the config when absent.
        #[arg(long)]
        den: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn init_logging() {
    let level = match std::env::var(LOG_ENV).as_deref() {
        Ok("quiet") => LevelFilter::Off,
        Ok("debug") => LevelFilter::Debug,
        _ => LevelFilter::Info,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .format_target(false)
        .init();
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    Ok(parse_config(&text).map_err(|e| e.with_path(path))?)
}

fn load_generator(path: &Path) -> Result<StyleGenerator> {
    let params = checkpoint::load(path)?;
    StyleGenerator::from_params(params).with_context(|| format!("{}", path.display()))
}

fn load_denoiser(path: &Path) -> Result<Denoiser> {
    let params = checkpoint::load(path)?;
    Denoiser::from_params(params).with_context(|| format!("{}", path.display()))
}

fn check_models(cfg: &ExperimentConfig, gen: &StyleGenerator, den: &Denoiser) -> Result<()> {
    if den.arch().classes != cfg.classes.len() {
        bail!(
            "denoiser knows {} classes but the config defines {}",
            den.arch().classes,
            cfg.classes.len()
        );
    }
    if gen.arch().latent_dim != cfg.generator.latent_dim || gen.arch().layers != cfg.generator.layers {
        bail!("generator checkpoint does not match the generator.* settings in the config");
    }
    Ok(())
}

fn write_echo(dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
    Ok(write_text(&dir.join("config.echo"), &cfg.echo())?)
}

fn train_denoiser(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    info!("training denoiser for {} steps", cfg.denoiser.steps);
    let trained = pipeline::denoiser_stage(cfg)?;
    let path = out.join("denoiser.ckpt");
    checkpoint::save(&path, trained.denoiser.params())?;
    write_text(&out.join("denoiser_loss.csv"), &loss_csv(&trained.losses))?;
    info!("wrote {}", path.display());
    Ok(path)
}

fn pretrain_generator(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    info!("pretraining generator for {} steps", cfg.pretrain.steps);
    let trained = pipeline::generator_stage(cfg)?;
    let path = out.join("generator.ckpt");
    checkpoint::save(&path, trained.generator.params())?;
    write_text(&out.join("generator_loss.csv"), &loss_csv(&trained.losses))?;
    info!("wrote {}", path.display());
    Ok(path)
}

fn adapt(cfg: &ExperimentConfig, gen: &StyleGenerator, den: &Denoiser, out: &Path) -> Result<AdaptationReport> {
    let started = Instant::now();
    let eval = pipeline::evaluator(cfg, pipeline::classifier_stage(cfg)?)?;
    let snaps = snapshot_iterations(cfg.sds.iters);
    let (ranking, outcome) = pipeline::adaptation_stage(cfg, gen, den, &eval, &snaps)?;
    let layers: Vec<String> = ranking.top(cfg.sds.k).iter().map(|l| (l + 1).to_string()).collect();
    info!("{}: adapting layers {}", out.display(), layers.join(","));

    checkpoint::save(&out.join("adapted.ckpt"), outcome.generator.params())?;
    write_text(&out.join("report.csv"), &report_csv(&outcome.report))?;
    let initial = &outcome.snapshots[0].1;
    for (iter, samples) in &outcome.snapshots {
        let svg = scatter_svg(
            &format!("iteration {iter}"),
            &[
                ("source", eval.source.points()),
                ("initial generated", initial),
                ("generated", samples),
                ("target reference", eval.target.points()),
            ],
        );
        write_text(&out.join(format!("scatter_{iter:05}.svg")), &svg)?;
    }
    write_echo(out, cfg)?;
    write_text(
        &out.join("timing.txt"),
        &format!("wall_clock_seconds = {:.3}\n", started.elapsed().as_secs_f64()),
    )?;
    if let Some(last) = outcome.report.last() {
        info!(
            "{}: final fd_target {:.4}, fd_source {:.4}, diversity {:.4}",
            out.display(),
            last.metrics.fd_target, last.metrics.fd_source, last.metrics.diversity
        );
    }
    Ok(outcome.report)
}

/// Map a sweep parameter name onto a config key.
fn sweep_key(param: &str) -> String {
    let lower = param.to_ascii_lowercase();
    if lower.contains('.') || lower == "seed" || lower == "encoder" {
        lower
    } else {
        format!("sds.{lower}")
    }
}

fn sweep(
    cfg: &ExperimentConfig,
    param: &str,
    values: &[String],
    models: (Option<PathBuf>, Option<PathBuf>),
    out: &Path,
) -> Result<()> {
    let key = sweep_key(param);
    let mut configs = Vec::with_capacity(values.len());
    for v in values {
        let mut c = cfg.clone();
        c.set(&key, v).map_err(|m| anyhow::anyhow!("--param {param} = {v}: {m}"))?;
        c.validate().with_context(|| format!("--param {param} = {v}"))?;
        configs.push(c);
    }
    let den_path = match models.1 {
        Some(p) => p,
        None => train_denoiser(cfg, out)?,
    };
    let gen_path = match models.0 {
        Some(p) => p,
        None => pretrain_generator(cfg, out)?,
    };
    let gen = load_generator(&gen_path)?;
    let den = load_denoiser(&den_path)?;
    check_models(cfg, &gen, &den)?;

    let results: Vec<Result<AdaptationReport>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .zip(values)
            .map(|(c, v)| {
                let dir = out.join(format!("{key}={v}"));
                let (gen, den) = (&gen, &den);
                scope.spawn(move || adapt(c, gen, den, &dir))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(anyhow::anyhow!("sweep worker panicked"))))
            .collect()
    });
    let mut runs = Vec::with_capacity(values.len());
    for (v, r) in values.iter().zip(results) {
        runs.push((v.clone(), r.with_context(|| format!("{key} = {v}"))?));
    }
    write_text(&out.join("sweep.csv"), &sweep_csv(&key, &runs))?;
    write_echo(out, cfg)?;
    info!("wrote {}", out.join("sweep.csv").display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::TrainDenoiser { config, out } => {
            let cfg = load_config(&config.config)?;
            train_denoiser(&cfg, &out)?;
            write_echo(&out, &cfg)?;
        }
        Command::PretrainGenerator { config, out } => {
            let cfg = load_config(&config.config)?;
            pretrain_generator(&cfg, &out)?;
            write_echo(&out, &cfg)?;
        }
        Command::SelectLayers { config, models } => {
            let cfg = load_config(&config.config)?;
            let gen = load_generator(&models.gen)?;
            let den = load_denoiser(&models.den)?;
            check_models(&cfg, &gen, &den)?;
            let ranking = pipeline::selection_stage(&cfg, &gen, &den)?;
            println!("rank,layer,magnitude,selected");
            for (rank, &l) in ranking.order.iter().enumerate() {
                println!(
                    "{},{},{:.8e},{}",
                    rank + 1,
                    l + 1,
                    ranking.magnitudes[l],
                    rank < cfg.sds.k
                );
            }
        }
        Command::Adapt { config, models, out } => {
            let cfg = load_config(&config.config)?;
            let gen = load_generator(&models.gen)?;
            let den = load_denoiser(&models.den)?;
            check_models(&cfg, &gen, &den)?;
            adapt(&cfg, &gen, &den, &out)?;
        }
        Command::Evaluate { config, models } => {
            let cfg = load_config(&config.config)?;
            let gen = load_generator(&models.gen)?;
            let den = load_denoiser(&models.den)?;
            check_models(&cfg, &gen, &den)?;
            let eval = pipeline::evaluator(&cfg, pipeline::classifier_stage(&cfg)?)?;
            let report = AdaptationReport {
                rows: vec![EvalRow {
                    iteration: 0,
                    metrics: eval.evaluate(&gen)?,
                    g_sds: 0.0,
                    g_dir: 0.0,
                    g_rec: 0.0,
                }],
                ..Default::default()
            };
            let csv = report_csv(&report);
            debug_assert!(csv.starts_with(REPORT_HEADER));
            print!("{csv}");
        }
        Command::Sweep {
            config,
            param,
            values,
            gen,
            den,
            out,
        } => {
            let cfg = load_config(&config.config)?;
            sweep(&cfg, &param, &values, (gen, den), &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    init_logging();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
