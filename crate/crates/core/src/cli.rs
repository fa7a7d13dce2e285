//! Command-line front end: `segment`, `evaluate` and `batch`.
//!
//! Exit codes: 0 success, 2 usage error, 3 input/data error, 4 degenerate
//! image (no threshold or no lesion).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fusion::FusionConfig;
use crate::imgcore::{self, BinaryMask, Channel, MaskFormat};
use crate::metrics::{self, EvalRow, ManualBorder, ReportRow};
use crate::morphology::DEFAULT_EXPAND_K;
use crate::pipeline::{segment, SegmentConfig};
use crate::thresholders::{Method, Polarity};

pub const EXIT_OK: u8 = 0;
pub const EXIT_DATA: u8 = 3;

/// Color of the detected border in overlays.
const BORDER_COLOR: imgcore::Rgb = [255, 0, 0];

#[derive(Debug, Parser)]
#[command(name = "dermfuse", version, about = "Lesion border detection by threshold fusion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect the lesion border in one image.
    Segment(SegmentArgs),
    /// Score a mask against a manual border.
    Evaluate(EvaluateArgs),
    /// Segment and score every image of a manifest.
    Batch(BatchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ChannelArg {
    Red,
    Green,
    Blue,
}

impl From<ChannelArg> for Channel {
    fn from(c: ChannelArg) -> Self {
        match c {
            ChannelArg::Red => Channel::Red,
            ChannelArg::Green => Channel::Green,
            ChannelArg::Blue => Channel::Blue,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolarityArg {
    Dark,
    Bright,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MaskFormatArg {
    Pgm,
    Png,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Color channel to threshold.
    #[arg(long, value_enum, default_value = "blue")]
    pub channel: ChannelArg,
    /// Comma-separated thresholding methods: huang_wang, kapur, kittler, otsu.
    #[arg(long, default_value = "huang_wang,kapur,kittler,otsu")]
    pub ensemble: String,
    /// Which side of the threshold is lesion.
    #[arg(long, value_enum, default_value = "dark")]
    pub polarity: PolarityArg,
    /// Weight decay rate per gray level.
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    /// Spatial term weight, used by refinement sweeps.
    #[arg(long = "beta-sp", default_value_t = 1.0)]
    pub beta_sp: f64,
    /// Number of spatial refinement sweeps.
    #[arg(long, default_value_t = 0)]
    pub iterations: usize,
    /// Stop refining once a sweep changes fewer than this fraction of labels.
    #[arg(long, default_value_t = 0.001)]
    pub convergence: f64,
    /// Dilation scale factor k in R = floor(k D / 512).
    #[arg(long = "expand-k", default_value_t = DEFAULT_EXPAND_K)]
    pub expand_k: f64,
    /// Skip the final dilation.
    #[arg(long = "no-expand")]
    pub no_expand: bool,
}

impl PipelineArgs {
    pub fn to_config(&self) -> Result<SegmentConfig> {
        let fusion = FusionConfig {
            gamma: self.gamma,
            beta_sp: self.beta_sp,
            iterations: self.iterations,
            convergence_fraction: self.convergence,
        };
        fusion.validate()?;
        if !(self.expand_k > 0.0 && self.expand_k.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "--expand-k must be positive, got {}",
                self.expand_k
            )));
        }
        Ok(SegmentConfig {
            channel: self.channel.into(),
            methods: Method::parse_list(&self.ensemble)?,
            polarity: match self.polarity {
                PolarityArg::Dark => Polarity::DarkForeground,
                PolarityArg::Bright => Polarity::BrightForeground,
            },
            fusion,
            expand_k: (!self.no_expand).then_some(self.expand_k),
        })
    }
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(short = 'i', long = "input")]
    pub input: PathBuf,
    #[arg(short = 'o', long = "output")]
    pub output: PathBuf,
    /// Also write a PNG with the detected border drawn over the image.
    #[arg(long)]
    pub overlay: Option<PathBuf>,
    #[arg(long = "mask-format", value_enum, default_value = "pgm")]
    pub mask_format: MaskFormatArg,
    /// Print the pipeline wall-clock time (excluding decoding).
    #[arg(long)]
    pub time: bool,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub mask: PathBuf,
    /// Manual border control points, one "x y" pair per line.
    #[arg(long, conflicts_with = "truth_mask", required_unless_present = "truth_mask")]
    pub truth: Option<PathBuf>,
    /// Manual border as a mask image.
    #[arg(long = "truth-mask")]
    pub truth_mask: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(short = 'o', long = "output")]
    pub output: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

/// Runs a parsed command, writing human-facing output to `out`. Returns the
/// process exit code for outcomes that are not errors in themselves (a
/// batch with failed rows).
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<u8> {
    match &cli.command {
        Command::Segment(args) => cmd_segment(args, out),
        Command::Evaluate(args) => cmd_evaluate(args, out),
        Command::Batch(args) => cmd_batch(args, out),
    }
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

pub fn cmd_segment(args: &SegmentArgs, out: &mut dyn Write) -> Result<u8> {
    let cfg = args.pipeline.to_config()?;
    let img = imgcore::read_image(&args.input)?;
    let start = Instant::now();
    let seg = segment(&img, &cfg)?;
    let elapsed = start.elapsed();
    let format = match args.mask_format {
        MaskFormatArg::Pgm => MaskFormat::Pgm,
        MaskFormatArg::Png => MaskFormat::Png,
    };
    imgcore::write_mask(&args.output, seg.mask(), format)?;
    if let Some(path) = &args.overlay {
        imgcore::write_overlay(path, &img, &[(seg.mask().clone(), BORDER_COLOR)])?;
    }
    if args.time {
        writeln!(out, "elapsed_ms={:.3}", elapsed.as_secs_f64() * 1e3).map_err(stdout_err)?;
    }
    Ok(EXIT_OK)
}

/// Loads ground truth: a points file (`.txt`) rasterized at `dims`, or a
/// mask image.
pub fn load_truth(path: &Path, dims: (usize, usize)) -> Result<BinaryMask> {
    let is_points = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("txt"));
    if is_points {
        metrics::rasterize_border(&ManualBorder::read(path)?, dims.0, dims.1)
    } else {
        imgcore::read_mask(path)
    }
}

pub fn cmd_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> Result<u8> {
    let mask = imgcore::read_mask(&args.mask)?;
    let truth = match (&args.truth, &args.truth_mask) {
        (Some(points), None) => metrics::rasterize_border(&ManualBorder::read(points)?, mask.width(), mask.height())?,
        (None, Some(path)) => imgcore::read_mask(path)?,
        _ => return Err(Error::InvalidConfig("give exactly one of --truth and --truth-mask".into())),
    };
    let eps = metrics::xor_error(&mask, &truth)?;
    writeln!(out, "{:.2}", eps * 100.0).map_err(stdout_err)?;
    Ok(EXIT_OK)
}

fn evaluate_entry(entry: &metrics::ManifestEntry, cfg: &SegmentConfig) -> Result<f64> {
    let img = imgcore::read_image(&entry.image_path)?;
    let seg = segment(&img, cfg)?;
    let truth = load_truth(&entry.truth_path, (img.width(), img.height()))?;
    metrics::xor_error(seg.mask(), &truth)
}

/// Outcome of a batch run, before it is written out.
#[derive(Debug)]
pub struct BatchOutcome {
    pub rows: Vec<ReportRow>,
    pub report: Option<metrics::EvalReport>,
}

impl BatchOutcome {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Segments and scores every manifest row. Rows run in parallel; failed rows
/// are recorded and excluded from the aggregates.
pub fn run_batch(entries: &[metrics::ManifestEntry], cfg: &SegmentConfig) -> BatchOutcome {
    let results: Vec<Result<f64>> = entries.par_iter().map(|e| evaluate_entry(e, cfg)).collect();
    let rows: Vec<ReportRow> = entries
        .iter()
        .zip(results)
        .map(|(entry, result)| {
            let image = entry.image.clone();
            match result {
                Ok(eps) => ReportRow {
                    image,
                    class: entry.class,
                    epsilon: Some(eps),
                    error: None,
                },
                Err(e) => ReportRow {
                    image,
                    class: entry.class,
                    epsilon: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let ok_rows: Vec<EvalRow> = rows
        .iter()
        .filter_map(|r| {
            r.epsilon.map(|epsilon| EvalRow {
                image: r.image.clone(),
                class: r.class,
                epsilon,
            })
        })
        .collect();
    let report = metrics::aggregate(ok_rows).ok();
    BatchOutcome { rows, report }
}

pub fn cmd_batch(args: &BatchArgs, out: &mut dyn Write) -> Result<u8> {
    let cfg = args.pipeline.to_config()?;
    let entries = metrics::read_manifest(&args.manifest)?;
    let outcome = run_batch(&entries, &cfg);
    let file = std::fs::File::create(&args.output).map_err(|e| Error::io(&args.output, e))?;
    metrics::write_report(std::io::BufWriter::new(file), &outcome.rows, outcome.report.as_ref())?;
    let failed = outcome.failures();
    if failed > 0 {
        writeln!(out, "{failed} of {} rows failed", outcome.rows.len()).map_err(stdout_err)?;
        return Ok(EXIT_DATA);
    }
    Ok(EXIT_OK)
}
