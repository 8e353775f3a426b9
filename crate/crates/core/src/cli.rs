//! `otsu-bisect` command line.
//!
//! Machine-readable output goes to stdout and diagnostics to stderr. Exit
//! status is 0 on success, 1 when the input data is unusable (degenerate
//! histogram, bad root bracket, malformed image) and 2 for usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{
    aggregate, category_breakdown, check_unimodal, compare, discover_images, load_category_map,
    render_report, run_bench, ReportFormat,
};
use crate::error::Error;
use crate::histogram::{build_moments, compute_histogram};
use crate::imageio::{binarize, load_image_path, save_pgm, MaskPolarity, PgmEncoding};
use crate::rootfind::{bisect_root, transcendental_demo};
use crate::search::{bisection_otsu, exhaustive_otsu, BisectionConfig, ThresholdResult};
use crate::synth::{bimodal_histogram, image_from_histogram, two_delta_histogram, BimodalSpec};
use crate::variance::VarianceEvaluator;

#[derive(Debug, Parser)]
#[command(
    name = "otsu-bisect",
    version,
    about = "Otsu thresholding by exhaustive scan or bracketing bisection"
)]
struct Cli {
    /// Suppress progress messages on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the 256-bin histogram as `index,count` CSV.
    Hist {
        image: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Print the between-class variance profile as `t,sigma` CSV.
    Profile {
        image: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Select a threshold and optionally write the binary mask.
    Threshold {
        image: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Bisection)]
        method: MethodArg,
        /// Emit the bisection trace as JSON lines after the result.
        #[arg(long)]
        trace: bool,
        /// Write the binary mask as PGM.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Write the mask as ASCII P2 instead of binary P5.
        #[arg(long)]
        plain: bool,
        /// Make the foreground (p >= t) black instead of white.
        #[arg(long)]
        invert: bool,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Run both searches on one image.
    Compare {
        image: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Compare both searches over every image in a directory tree.
    Bench {
        dir: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        /// `image,category` CSV enabling the per-category table.
        #[arg(long)]
        categories: Option<PathBuf>,
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Report whether the variance profile has a single peak.
    CheckUnimodal { image: PathBuf },
    /// Bisect e^x - 3x - 2 on [a, b] and print the iteration table.
    RootDemo {
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
        b: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 60)]
        max_iter: usize,
        /// Decimal places in the table.
        #[arg(long, default_value_t = 3)]
        digits: usize,
    },
    /// Write a seeded synthetic PGM.
    Synth {
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, default_value_t = 512)]
        width: u32,
        #[arg(long, default_value_t = 512)]
        height: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 70.0)]
        mean0: f64,
        #[arg(long, default_value_t = 170.0)]
        mean1: f64,
        #[arg(long, default_value_t = 18.0)]
        sigma0: f64,
        #[arg(long, default_value_t = 22.0)]
        sigma1: f64,
        #[arg(long, default_value_t = 0.5)]
        mix: f64,
        /// Two equal spikes `A,B` instead of a Gaussian mixture.
        #[arg(long, value_parser = parse_pair)]
        two_delta: Option<(u8, u8)>,
        #[arg(long)]
        plain: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Exhaustive,
    Bisection,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Markdown,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Markdown => ReportFormat::Markdown,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// Initial bracket `LOW,MID,HIGH`.
    #[arg(long, value_parser = parse_triplet, default_value = "0,127,255")]
    init: (u8, u8, u8),
    /// Stop when high - low is at most this many levels.
    #[arg(long, default_value_t = 2)]
    width_stop: u8,
    /// Early stop when the three probes agree within this fraction of their max.
    #[arg(long)]
    plateau_eps: Option<f64>,
}

impl SearchArgs {
    fn config(&self) -> Result<BisectionConfig, Error> {
        let cfg = BisectionConfig {
            low: self.init.0,
            mid: self.init.1,
            high: self.init.2,
            width_stop: self.width_stop,
            plateau_epsilon: self.plateau_eps,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_u8_list(s: &str, n: usize) -> Result<Vec<u8>, String> {
    let parts: Vec<_> = s.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(format!("expected {n} comma-separated levels"));
    }
    parts
        .iter()
        .map(|p| p.parse::<u8>().map_err(|e| format!("{p:?}: {e}")))
        .collect()
}

fn parse_triplet(s: &str) -> Result<(u8, u8, u8), String> {
    let v = parse_u8_list(s, 3)?;
    Ok((v[0], v[1], v[2]))
}

fn parse_pair(s: &str) -> Result<(u8, u8), String> {
    let v = parse_u8_list(s, 2)?;
    Ok((v[0], v[1]))
}

enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::InvalidArgument(_) => Failure::Usage(e.to_string()),
            e => Failure::Domain(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Domain(Error::Io(e))
    }
}

fn require_file(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("{}: no such file", path.display())))
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    2
                }
            };
        }
    };
    let code = match dispatch(cli, out, err) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Domain(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    };
    let _ = out.flush();
    code
}

fn with_output<F>(path: Option<&Path>, out: &mut dyn Write, f: F) -> Result<(), Failure>
where
    F: FnOnce(&mut dyn Write) -> Result<(), Error>,
{
    match path {
        Some(p) => {
            let mut file = std::io::BufWriter::new(std::fs::File::create(p)?);
            f(&mut file)?;
            file.flush()?;
        }
        None => f(out)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct ThresholdLine<'a> {
    #[serde(flatten)]
    result: &'a ThresholdResult,
    reduction_factor: f64,
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let quiet = cli.quiet;
    match cli.command {
        Command::Hist { image, output } => {
            require_file(&image)?;
            let hist = compute_histogram(&load_image_path(&image)?);
            with_output(output.as_deref(), out, |w| hist.write_csv(w))
        }
        Command::Profile { image, output } => {
            require_file(&image)?;
            let moments = build_moments(&compute_histogram(&load_image_path(&image)?));
            let profile = VarianceEvaluator::new(&moments).full_profile();
            with_output(output.as_deref(), out, |w| profile.write_csv(w))
        }
        Command::Threshold {
            image,
            method,
            trace,
            mask,
            plain,
            invert,
            search,
        } => {
            require_file(&image)?;
            let cfg = search.config()?;
            let img = load_image_path(&image)?;
            let moments = build_moments(&compute_histogram(&img));
            let mut ev = VarianceEvaluator::new(&moments);
            let (result, steps) = match method {
                MethodArg::Exhaustive => {
                    if trace && !quiet {
                        writeln!(err, "note: --trace only applies to the bisection method")?;
                    }
                    (exhaustive_otsu(&mut ev)?, None)
                }
                MethodArg::Bisection => {
                    let (r, t) = bisection_otsu(&mut ev, &cfg)?;
                    (r, trace.then_some(t))
                }
            };
            let line = ThresholdLine {
                result: &result,
                reduction_factor: result.reduction_factor(),
            };
            serde_json::to_writer(&mut *out, &line).map_err(Error::from)?;
            writeln!(out)?;
            if let Some(t) = steps {
                t.write_json_lines(&mut *out)?;
            }
            if let Some(path) = mask {
                let polarity = if invert {
                    MaskPolarity::ForegroundBlack
                } else {
                    MaskPolarity::ForegroundWhite
                };
                let encoding = if plain {
                    PgmEncoding::Plain
                } else {
                    PgmEncoding::Raw
                };
                save_pgm(&binarize(&img, result.threshold, polarity), encoding, &path)?;
                if !quiet {
                    writeln!(err, "wrote mask to {}", path.display())?;
                }
            }
            Ok(())
        }
        Command::Compare {
            image,
            format,
            search,
        } => {
            require_file(&image)?;
            let cfg = search.config()?;
            let id = image.file_name().map_or_else(
                || image.display().to_string(),
                |n| n.to_string_lossy().into_owned(),
            );
            let record = compare(&id, &load_image_path(&image)?, &cfg)?;
            let records = [record];
            let stats = aggregate(&records)?;
            render_report(&stats, &records, None, format.into(), &mut *out)?;
            Ok(())
        }
        Command::Bench {
            dir,
            format,
            categories,
            output,
            search,
        } => {
            if !dir.is_dir() {
                return Err(Failure::Usage(format!(
                    "{}: not a directory",
                    dir.display()
                )));
            }
            if let Some(c) = &categories {
                require_file(c)?;
            }
            let cfg = search.config()?;
            let paths = discover_images(&dir)?;
            if !quiet {
                writeln!(err, "found {} images under {}", paths.len(), dir.display())?;
            }
            let mut records = Vec::with_capacity(paths.len());
            for item in run_bench(&dir, &paths, &cfg) {
                match item.outcome {
                    Ok(r) => records.push(r),
                    Err(e) => writeln!(err, "warning: skipping {}: {e}", item.image_id)?,
                }
            }
            let stats = aggregate(&records)?;
            let cats = match &categories {
                Some(path) => Some(category_breakdown(&records, &load_category_map(path)?)),
                None => None,
            };
            with_output(output.as_deref(), out, |w| {
                render_report(&stats, &records, cats.as_deref(), format.into(), w)
            })?;
            if !quiet {
                writeln!(
                    err,
                    "compared {} images: mean {:.2} evaluations, {} exact matches",
                    stats.images, stats.computations.mean, stats.exact_matches
                )?;
            }
            Ok(())
        }
        Command::CheckUnimodal { image } => {
            require_file(&image)?;
            let moments = build_moments(&compute_histogram(&load_image_path(&image)?));
            let report = check_unimodal(&VarianceEvaluator::new(&moments).full_profile());
            serde_json::to_writer_pretty(&mut *out, &report).map_err(Error::from)?;
            writeln!(out)?;
            Ok(())
        }
        Command::RootDemo {
            a,
            b,
            tol,
            max_iter,
            digits,
        } => {
            let (fa, fb) = (transcendental_demo(a), transcendental_demo(b));
            writeln!(out, "f(x) = e^x - 3x - 2")?;
            writeln!(out, "f({a:.digits$}) = {fa:.digits$}")?;
            writeln!(out, "f({b:.digits$}) = {fb:.digits$}")?;
            let root = bisect_root(transcendental_demo, a, b, tol, max_iter)?;
            root.write_table(&mut *out, digits)?;
            writeln!(
                out,
                "root = {:.10} after {} iterations, f(root) = {:.3e}",
                root.root,
                root.iterations,
                transcendental_demo(root.root)
            )?;
            Ok(())
        }
        Command::Synth {
            output,
            width,
            height,
            seed,
            mean0,
            mean1,
            sigma0,
            sigma1,
            mix,
            two_delta,
            plain,
        } => {
            let total = u64::from(width) * u64::from(height);
            let hist = match two_delta {
                Some((a, b)) => two_delta_histogram(a, b, total)?,
                None => bimodal_histogram(&BimodalSpec {
                    mean0,
                    mean1,
                    sigma0,
                    sigma1,
                    mix,
                    total,
                    seed,
                })?,
            };
            let img = image_from_histogram(&hist, width, height, seed)?;
            let encoding = if plain {
                PgmEncoding::Plain
            } else {
                PgmEncoding::Raw
            };
            save_pgm(&img, encoding, &output)?;
            if !quiet {
                writeln!(err, "wrote {width}x{height} image to {}", output.display())?;
            }
            Ok(())
        }
    }
}
