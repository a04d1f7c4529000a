//! CLI for the change-pair synthesizer. Exit codes: 0 success, 1 data error,
//! 2 usage error.

use clap::{Args, Parser, Subcommand};
use selfpair::blend::{BlendMode, BlendSpec};
use selfpair::dataset_io::{
    append_manifest, ingest, load_source, read_change_mask, tile_sources, validate, write_run_config,
    write_sample, RunConfig,
};
use selfpair::metrics::{confusion, f1, iou, ConfusionCounts};
use selfpair::pipeline::{synthesize_dataset, PipelineConfig, StrategyKind};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "selfpair", version, about = "Synthesize bi-temporal change-detection pairs from single-temporal imagery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SynthOpts {
    /// Dataset root containing images/ and masks/ with matching stems
    #[arg(long)]
    input: PathBuf,
    /// Output directory (t0/, t1/, change/, manifest.jsonl, config.json)
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    samples_per_source: u64,
    #[arg(long, default_value_t = 256)]
    crop_size: usize,
    /// Comma-separated subset of crop,inpaint,copy_paste
    #[arg(long, value_delimiter = ',', default_values_t = vec!["crop".to_string(), "inpaint".to_string(), "copy_paste".to_string()])]
    strategies: Vec<String>,
    /// Comma-separated weights, same order as --strategies (default: equal)
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "fourier")]
    blend: BlendArg,
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0.5)]
    erase_fraction: f64,
    #[arg(long, default_value_t = 2)]
    dilation: usize,
    #[arg(long, default_value_t = 5)]
    radius: usize,
    #[arg(long, default_value_t = 8)]
    max_instances: usize,
    /// Worker threads (falls back to SELF_PAIR_JOBS, then all cores)
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value_t = false)]
    swap_inpaint_order: bool,
    /// Pre-tile large sources into N x N tiles before synthesis
    #[arg(long)]
    tile: Option<usize>,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum BlendArg {
    None,
    Gaussian,
    Fourier,
}

impl From<BlendArg> for BlendMode {
    fn from(b: BlendArg) -> Self {
        match b {
            BlendArg::None => BlendMode::None,
            BlendArg::Gaussian => BlendMode::Gaussian,
            BlendArg::Fourier => BlendMode::Fourier,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline over a dataset
    Synth(SynthOpts),
    /// Synthesize a single sample and print where it was written
    Preview {
        #[command(flatten)]
        opts: SynthOpts,
        /// Sample index to derive
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
    /// Verify an output directory against its manifest
    Validate {
        #[arg(long)]
        output: PathBuf,
        /// Source dataset; when given, samples are re-derived byte for byte
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// IoU / F1 between two directories of masks with matching stems
    Metrics {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Average per-sample scores instead of pooling counts
        #[arg(long, default_value_t = false)]
        macro_average: bool,
    },
}

fn build_config(opts: &SynthOpts) -> anyhow::Result<PipelineConfig> {
    let strategies: Vec<StrategyKind> = opts
        .strategies
        .iter()
        .map(|s| s.parse())
        .collect::<selfpair::Result<_>>()?;
    let weights = match &opts.weights {
        Some(w) => w.clone(),
        None => vec![1.0 / strategies.len() as f64; strategies.len()],
    };
    Ok(PipelineConfig {
        crop_size: opts.crop_size,
        strategies,
        strategy_weights: weights,
        blend: BlendSpec {
            mode: opts.blend.into(),
            beta: opts.beta,
            sigma: opts.sigma,
        },
        erase_fraction: opts.erase_fraction,
        dilation: opts.dilation,
        telea_radius: opts.radius,
        max_instances: opts.max_instances,
        max_attempts: 20,
        global_seed: opts.seed,
        samples_per_source: opts.samples_per_source,
        swap_inpaint_order: opts.swap_inpaint_order,
        normalize_size: true,
    })
}

fn thread_pool(jobs: Option<usize>) -> anyhow::Result<rayon::ThreadPool> {
    let jobs = jobs
        .or_else(|| {
            std::env::var("SELF_PAIR_JOBS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0); // 0 = rayon default (all cores)
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

fn run_synth(opts: &SynthOpts, only_index: Option<u64>) -> anyhow::Result<()> {
    let cfg = build_config(opts)?;
    cfg.validate()?;
    let entries = ingest(&opts.input)?;
    if entries.is_empty() {
        anyhow::bail!("no sources found under {}", opts.input.display());
    }
    let sources: selfpair::Result<Vec<_>> = entries.iter().map(load_source).collect();
    let mut sources = sources?;
    if let Some(n) = opts.tile {
        sources = tile_sources(sources, n);
    }

    write_run_config(
        &opts.output,
        &RunConfig {
            pipeline: cfg.clone(),
            tile: opts.tile,
        },
    )?;

    if let Some(idx) = only_index {
        // derive just the requested sample
        let src_idx = (idx / cfg.samples_per_source) as usize;
        let src = sources
            .get(src_idx)
            .ok_or_else(|| anyhow::anyhow!("sample index {idx} is out of range"))?;
        let sample = selfpair::pipeline::synthesize_sample(
            &src.image,
            &src.label,
            &src.instances,
            &cfg,
            &src.id,
            idx,
        )?;
        let rec = write_sample(&sample, &opts.output)?;
        append_manifest(&opts.output, std::slice::from_ref(&rec))?;
        println!("pre:    {}", opts.output.join(&rec.files.pre).display());
        println!("post:   {}", opts.output.join(&rec.files.post).display());
        println!("change: {}", opts.output.join(&rec.files.change).display());
        println!("strategy: {}", rec.strategy);
        return Ok(());
    }

    let pool = thread_pool(opts.jobs)?;
    let (samples, report) = pool.install(|| synthesize_dataset(&sources, &cfg))?;

    let mut records = Vec::new();
    for sample in &samples {
        records.push(write_sample(sample, &opts.output)?);
    }
    append_manifest(&opts.output, &records)?;

    println!(
        "wrote {} samples to {} ({} source(s) unusable)",
        records.len(),
        opts.output.display(),
        report.failures.len()
    );
    for (id, msg) in &report.failures {
        eprintln!("warning: source '{id}' skipped: {msg}");
    }
    Ok(())
}

fn run_metrics(pred: &PathBuf, gt: &PathBuf, macro_average: bool) -> anyhow::Result<()> {
    let mut pred_files: Vec<PathBuf> = std::fs::read_dir(pred)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    pred_files.sort();
    if pred_files.is_empty() {
        anyhow::bail!("no mask files under {}", pred.display());
    }

    let mut pooled = ConfusionCounts::default();
    let mut macro_iou = 0.0;
    let mut macro_f1 = 0.0;
    let mut n = 0usize;
    for pred_path in &pred_files {
        let name = pred_path.file_name().unwrap();
        let gt_path = gt.join(name);
        if !gt_path.exists() {
            anyhow::bail!("no matching reference mask for {}", name.to_string_lossy());
        }
        let p = read_change_mask(pred_path)?;
        let g = read_change_mask(&gt_path)?;
        let c = confusion(&p, &g)?;
        pooled = pooled.merge(&c);
        macro_iou += iou(&c);
        macro_f1 += f1(&c);
        n += 1;
    }
    let (i, f) = if macro_average {
        (macro_iou / n as f64, macro_f1 / n as f64)
    } else {
        (iou(&pooled), f1(&pooled))
    };
    println!("IoU: {:.2}%", i * 100.0);
    println!("F1:  {:.2}%", f * 100.0);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(opts) => run_synth(opts, None),
        Command::Preview { opts, index } => run_synth(opts, Some(*index)),
        Command::Validate { output, input } => {
            validate(output, input.as_deref()).map_err(Into::into)
        }
        Command::Metrics {
            pred,
            gt,
            macro_average,
        } => run_metrics(pred, gt, *macro_average),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
