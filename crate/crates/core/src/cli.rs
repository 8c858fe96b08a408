//! Command-line surface: `augment`, `evaluate`, `inspect`, `take-fraction`.
//! Exit codes: 0 success, 1 input error, 2 runtime failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use ocr_augment::config::AugmentConfig;
use ocr_augment::extract::extract_line;
use ocr_augment::manifest::{self, Difficulty};
use ocr_augment::metrics::{self, EvalReport};
use ocr_augment::pipeline::{self, PipelineError};
use ocr_augment::raster::Raster;
use ocr_augment::render::{render_frame, FrameContext, SceneProvenance};

#[derive(Parser)]
#[command(name = "ocr-augment", version, about = "Perspective/illumination augmentation and CER/WER evaluation for OCR text-line datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Augment a dataset by the configured enlargement factor
    Augment {
        /// Input manifest (image_path<TAB>difficulty<TAB>transcript)
        #[arg(long)]
        input: PathBuf,
        /// Output directory for images and manifest.tsv
        #[arg(long)]
        out: PathBuf,
        /// Config JSON; built-in defaults when omitted
        #[arg(long)]
        config: Option<PathBuf>,
        /// Enlargement factor (overrides config)
        #[arg(long)]
        factor: Option<u32>,
        /// Master seed (overrides config)
        #[arg(long)]
        seed: Option<u64>,
        /// Worker thread count (overrides config)
        #[arg(long)]
        workers: Option<usize>,
        /// Fail on undecodable sample images instead of skipping them
        #[arg(long)]
        strict: bool,
    },
    /// Evaluate OCR hypotheses against a reference manifest
    Evaluate {
        /// Reference manifest
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Hypothesis file (id<TAB>recognized text)
        #[arg(long)]
        hyp: PathBuf,
        /// Write the full report as JSON
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write a per-class CSV table
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Render one scene frame with the projected quad overlaid
    Inspect {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Sample id (its image path in the manifest)
        #[arg(long)]
        sample: String,
        #[arg(long, default_value_t = 1)]
        replica: u32,
        #[arg(long, default_value_t = 0)]
        frame: u32,
        /// Output PNG for the rendered frame
        #[arg(long)]
        out: PathBuf,
        /// Also write the extracted line image here
        #[arg(long)]
        extracted: Option<PathBuf>,
    },
    /// Stratified subset selection by difficulty
    TakeFraction {
        #[arg(long)]
        input: PathBuf,
        /// Output manifest path
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

pub fn run() -> u8 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Augment {
            input,
            out,
            config,
            factor,
            seed,
            workers,
            strict,
        } => cmd_augment(&input, &out, config.as_deref(), factor, seed, workers, strict),
        Command::Evaluate {
            reference,
            hyp,
            report,
            csv,
        } => cmd_evaluate(&reference, &hyp, report.as_deref(), csv.as_deref()),
        Command::Inspect {
            input,
            config,
            sample,
            replica,
            frame,
            out,
            extracted,
        } => cmd_inspect(
            &input,
            config.as_deref(),
            &sample,
            replica,
            frame,
            &out,
            extracted.as_deref(),
        ),
        Command::TakeFraction {
            input,
            out,
            fraction,
            seed,
        } => cmd_take_fraction(&input, &out, fraction, seed),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn input_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

fn pipeline_err(e: PipelineError) -> CliError {
    match e {
        PipelineError::Io { .. } => CliError::Runtime(e.to_string()),
        other => CliError::Input(other.to_string()),
    }
}

fn load_config(path: Option<&Path>) -> Result<AugmentConfig, CliError> {
    match path {
        Some(p) => AugmentConfig::load(p).map_err(input_err),
        None => Ok(AugmentConfig::default()),
    }
}

fn load_dataset(
    input: &Path,
    strict: bool,
) -> Result<(Vec<manifest::TextLineSample>, PathBuf), CliError> {
    let records = manifest::parse_manifest(input).map_err(input_err)?;
    let base_dir = input.parent().unwrap_or(Path::new(".")).to_path_buf();
    let loaded = manifest::load_samples(&records, &base_dir);
    if strict && !loaded.failed.is_empty() {
        return Err(CliError::Input(format!(
            "{} sample image(s) failed to load (first: {})",
            loaded.failed.len(),
            loaded.failed[0].error
        )));
    }
    Ok((loaded.samples, base_dir))
}

fn cmd_augment(
    input: &Path,
    out: &Path,
    config_path: Option<&Path>,
    factor: Option<u32>,
    seed: Option<u64>,
    workers: Option<usize>,
    strict: bool,
) -> Result<(), CliError> {
    let start = Instant::now();
    let mut config = load_config(config_path)?;
    if let Some(f) = factor {
        config.enlargement_factor = f;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(w) = workers {
        config.workers = w;
    }
    config.validate().map_err(input_err)?;
    let (samples, base_dir) = load_dataset(input, strict)?;
    println!("master seed: {}", config.seed);
    let summary =
        pipeline::augment_dataset(&samples, &base_dir, &config, out).map_err(pipeline_err)?;
    println!("originals: {}", summary.originals);
    for difficulty in Difficulty::ALL {
        if let Some(n) = summary.per_class.get(&difficulty) {
            println!("  class {difficulty}: {n}");
        }
    }
    println!("augmented lines written: {}", summary.augmented);
    println!("passed through unaugmented: {}", summary.passed_through);
    println!("frames rendered: {}", summary.frames_rendered);
    println!("rejections: {}", summary.rejections.len());
    println!("wall time: {:.2}s", start.elapsed().as_secs_f64());
    Ok(())
}

fn print_report(report: &EvalReport) {
    let pct = |v: Option<f64>| match v {
        Some(x) => format!("{:.2}%", x * 100.0),
        None => "-".to_string(),
    };
    for difficulty in Difficulty::ALL {
        let c = report.class(difficulty);
        if c.count == 0 {
            continue;
        }
        println!(
            "{} ({} lines): CER {} WER {}",
            capitalize(difficulty.as_str()),
            c.count,
            pct(c.macro_cer),
            pct(c.macro_wer)
        );
    }
    println!(
        "Overall CER {} WER {}",
        pct(report.overall.macro_cer),
        pct(report.overall.macro_wer)
    );
    if report.missing_hypotheses > 0 {
        println!("missing hypotheses: {}", report.missing_hypotheses);
    }
    if report.excluded_empty_reference > 0 {
        println!("excluded empty references: {}", report.excluded_empty_reference);
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

fn cmd_evaluate(
    reference: &Path,
    hyp: &Path,
    report_path: Option<&Path>,
    csv_path: Option<&Path>,
) -> Result<(), CliError> {
    let report = metrics::evaluate_run(reference, hyp).map_err(input_err)?;
    print_report(&report);
    if let Some(path) = report_path {
        let json = serde_json::to_string_pretty(&report)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        fs::write(path, json).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    if let Some(path) = csv_path {
        fs::write(path, metrics::report_to_csv(&report))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(())
}

fn draw_segment(image: &mut Raster, a: [f64; 2], b: [f64; 2]) {
    let steps = ((b[0] - a[0]).abs().max((b[1] - a[1]).abs()).ceil() as u32).max(1);
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let x = a[0] + (b[0] - a[0]) * t;
        let y = a[1] + (b[1] - a[1]) * t;
        if x < 0.0 || y < 0.0 || x >= image.width() as f64 || y >= image.height() as f64 {
            continue;
        }
        for c in 0..image.channels() {
            image.put(x as u32, y as u32, c, if c == 1 { 0 } else { 255 });
        }
    }
}

fn cmd_inspect(
    input: &Path,
    config_path: Option<&Path>,
    sample_id: &str,
    replica: u32,
    frame: u32,
    out: &Path,
    extracted: Option<&Path>,
) -> Result<(), CliError> {
    let config = load_config(config_path)?;
    let (samples, _) = load_dataset(input, false)?;
    let sample = samples
        .iter()
        .find(|s| s.id == sample_id)
        .ok_or_else(|| CliError::Input(format!("unknown sample id '{sample_id}'")))?;
    println!("master seed: {}", config.seed);
    let mut rng = pipeline::derive_rng(config.seed, &sample.id, replica as u64);
    let scene = ocr_augment::geometry::sample_scene(&config, &mut rng).map_err(input_err)?;
    let (h, plane) = scene
        .frame_homography(frame, sample.raster.width(), sample.raster.height())
        .map_err(input_err)?;
    let rendered = render_frame(
        &sample.raster,
        &FrameContext {
            homography: &h,
            plane: &plane,
            lights: &config.lights,
            ambient: config.ambient,
            render_width: config.render.width,
            render_height: config.render.height,
        },
        SceneProvenance {
            source_id: sample.id.clone(),
            replica,
            frame,
            camera: scene.camera.name.clone(),
            radius_m: scene.radius,
            psi_deg: scene.psi,
            seed: config.seed,
        },
    )
    .map_err(input_err)?;
    let mut overlay = rendered.image.clone();
    for i in 0..4 {
        draw_segment(
            &mut overlay,
            rendered.quad.corners[i],
            rendered.quad.corners[(i + 1) % 4],
        );
    }
    overlay
        .save_png(out)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    println!(
        "frame written: {} ({}x{}, camera {}, radius {:.3} m, psi {:.2} deg)",
        out.display(),
        overlay.width(),
        overlay.height(),
        scene.camera.name,
        scene.radius,
        scene.psi
    );
    if let Some(path) = extracted {
        match extract_line(&rendered, sample.height) {
            Ok(line) => {
                line.save_png(path)
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
                println!("extracted line written: {}", path.display());
            }
            Err(rejection) => println!("extraction rejected: {rejection}"),
        }
    }
    Ok(())
}

fn cmd_take_fraction(input: &Path, out: &Path, fraction: f64, seed: u64) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(CliError::Input("fraction must be in [0, 1]".into()));
    }
    let records = manifest::parse_manifest(input).map_err(input_err)?;
    println!("master seed: {seed}");
    let subset = pipeline::take_fraction(&records, fraction, seed);
    let mut text = String::new();
    for rec in &subset {
        text.push_str(&format!(
            "{}\t{}\t{}\n",
            rec.image_path, rec.difficulty, rec.transcript
        ));
    }
    fs::write(out, text).map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("selected {} of {} lines", subset.len(), records.len());
    Ok(())
}
