use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{ArgGroup, Args, Parser, Subcommand};

use rectisynth::compositor::{load_rgb, rectify, save_image};
use rectisynth::eval::{evaluate, format_record, read_annotations, read_predictions, BootstrapConfig};
use rectisynth::perturb::Registry;
use rectisynth::pipeline::manifest::check_manifest;
use rectisynth::pipeline::{bench, generate_dataset, read_manifest, DatasetOptions, SourceSet};
use rectisynth::sampling::GenConfig;
use rectisynth::{Homography, Quad};

#[derive(Parser)]
#[command(name = "rectisynth", version, about = "Synthesize, rectify and score projective photos")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset: photos plus a manifest of ground-truth transforms.
    Generate(GenerateArgs),
    /// Undo a projective transform given as a matrix or as the photo's corner quad.
    Rectify(RectifyArgs),
    /// Score predicted transforms against annotated quads by IoU.
    EvalIou(EvalArgs),
    /// Validate a manifest or describe a matrix.
    Inspect(InspectArgs),
    /// Measure in-memory generation throughput.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Size(u32, u32);

impl FromStr for Size {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (w, h) = s.split_once(['x', 'X']).ok_or("expected WxH")?;
        let w: u32 = w.trim().parse().map_err(|_| format!("bad width `{w}`"))?;
        let h: u32 = h.trim().parse().map_err(|_| format!("bad height `{h}`"))?;
        if w == 0 || h == 0 {
            return Err("dimensions must be >= 1".into());
        }
        Ok(Size(w, h))
    }
}

/// Eight numbers separated by whitespace or commas.
#[derive(Debug, Clone, Copy)]
struct Eight([f64; 8]);

impl FromStr for Eight {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let vals: Vec<f64> = s
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| format!("not a number: `{t}`")))
            .collect::<Result<_, _>>()?;
        let arr: [f64; 8] = vals
            .try_into()
            .map_err(|v: Vec<f64>| format!("expected 8 values, got {}", v.len()))?;
        if arr.iter().any(|v| !v.is_finite()) {
            return Err("values must be finite".into());
        }
        Ok(Eight(arr))
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Directory of foreground images.
    #[arg(long)]
    fg: PathBuf,
    /// Directory of background images.
    #[arg(long)]
    bg: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// TOML generator config; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Canvas size of the generated photos.
    #[arg(long)]
    size: Option<Size>,
    /// Comma-separated perturbation names to keep, or `none`.
    #[arg(long)]
    perturbations: Option<String>,
    /// Decode sources on every use instead of caching them.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args)]
#[command(group(ArgGroup::new("transform").required(true).args(["matrix", "quad"])))]
struct RectifyArgs {
    #[arg(long)]
    photo: PathBuf,
    /// θ1..θ8, row-major.
    #[arg(long, allow_hyphen_values = true)]
    matrix: Option<Eight>,
    /// Photo-pixel corners x1 y1 .. x4 y4 of the source frame, ordered
    /// top-left, top-right, bottom-right, bottom-left.
    #[arg(long, allow_hyphen_values = true)]
    quad: Option<Eight>,
    #[arg(long)]
    out: PathBuf,
    /// Output size; defaults to the photo's size.
    #[arg(long)]
    size: Option<Size>,
}

#[derive(Args)]
struct EvalArgs {
    /// Records `id θ1..θ8`.
    #[arg(long)]
    pred: PathBuf,
    /// Records `id x1 y1 .. x4 y4` in normalized coordinates.
    #[arg(long)]
    truth: PathBuf,
    /// Also write the report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    resamples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
#[command(group(ArgGroup::new("what").required(true).args(["manifest", "matrix"])))]
struct InspectArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    matrix: Option<Eight>,
    /// Write the manifest's quads as eval-iou truth records.
    #[arg(long, requires = "manifest")]
    export_truth: Option<PathBuf>,
    /// Write the manifest's thetas as eval-iou prediction records.
    #[arg(long, requires = "manifest")]
    export_pred: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 1000)]
    n: u64,
    #[arg(long, default_value = "224x224")]
    size: Size,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    perturbations: Option<String>,
}

type CmdResult = Result<(), Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Rectify(a) => cmd_rectify(a),
        Command::EvalIou(a) => cmd_eval_iou(a),
        Command::Inspect(a) => cmd_inspect(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn default_workers() -> usize {
    DatasetOptions::default().workers
}

fn load_config(path: Option<&Path>, perturbations: Option<&str>) -> Result<GenConfig, Box<dyn std::error::Error>> {
    let mut cfg = match path {
        Some(p) => GenConfig::load(p)?,
        None => GenConfig::default(),
    };
    if let Some(list) = perturbations {
        let names: Vec<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        if names == ["none"] {
            cfg.perturb.enabled = false;
        } else if names != ["all"] {
            if let Err(e) = cfg.perturb.restrict_to(&names) {
                let known: Vec<_> = Registry::builtin().names().collect();
                usage_exit(&format!("{e}; known: {}", known.join(", ")));
            }
        }
    }
    Ok(cfg)
}

fn usage_exit(msg: &str) -> ! {
    eprintln!("error: {msg}");
    std::process::exit(2)
}

fn cmd_generate(a: GenerateArgs) -> CmdResult {
    for dir in [&a.fg, &a.bg] {
        if !dir.is_dir() {
            return Err(format!("not a directory: {}", dir.display()).into());
        }
    }
    let mut cfg = load_config(a.config.as_deref(), a.perturbations.as_deref())?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(Size(w, h)) = a.size {
        cfg.canvas_width = w;
        cfg.canvas_height = h;
    }
    cfg.validate()?;
    let sources = SourceSet::from_dirs(&a.fg, &a.bg)?;
    let opts = DatasetOptions {
        workers: a.workers.unwrap_or_else(default_workers),
        cache_sources: !a.no_cache,
    };
    let summary = generate_dataset(&sources, a.n, &a.out, &cfg, &opts)?;
    println!("written:   {}", summary.written);
    println!("skipped:   {}", summary.skipped);
    println!("manifest:  {}", summary.manifest.display());
    println!("wall time: {:.3} s", summary.elapsed.as_secs_f64());
    println!("rate:      {:.2} samples/s", summary.samples_per_second());
    Ok(())
}

fn cmd_rectify(a: RectifyArgs) -> CmdResult {
    let photo = load_rgb(&a.photo)?;
    let (pw, ph) = photo.dimensions();
    let m = match (a.matrix, a.quad) {
        (Some(Eight(t)), _) => Homography::from_theta(t)?,
        (None, Some(Eight(c))) => {
            let mut n = c;
            for (i, v) in n.iter_mut().enumerate() {
                let extent = if i % 2 == 0 { pw } else { ph } as f64;
                *v = 2.0 * *v / extent - 1.0;
            }
            Homography::from_quad(&Quad::from_coords(n))?
        }
        (None, None) => unreachable!("clap requires one of --matrix/--quad"),
    };
    let Size(w, h) = a.size.unwrap_or(Size(pw, ph));
    let out = rectify(&photo, &m, w, h)?;
    save_image(&out, &a.out)?;
    println!("wrote {} ({w}x{h})", a.out.display());
    Ok(())
}

fn cmd_eval_iou(a: EvalArgs) -> CmdResult {
    let preds = read_predictions(&a.pred)?;
    let truth = read_annotations(&a.truth)?;
    let report = evaluate(
        &preds,
        &truth,
        BootstrapConfig {
            resamples: a.resamples,
            seed: a.seed,
        },
    )?;
    println!("{report}");
    if let Some(path) = a.report {
        std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}

fn cmd_inspect(a: InspectArgs) -> CmdResult {
    if let Some(Eight(t)) = a.matrix {
        let m = Homography::from_theta(t)?;
        println!("theta:       {m}");
        println!("determinant: {}", m.determinant());
        match m.to_quad() {
            Ok(q) => {
                let c = q.coords();
                println!("quad:        {}", c.map(|v| format!("{v:.6}")).join(" "));
                println!("validity:    {:?}", q.validate());
            }
            Err(e) => println!("quad:        {e}"),
        }
        println!("acceptable:  {}", rectisynth::sampling::is_acceptable(&m));
        return Ok(());
    }
    let path = a.manifest.expect("clap requires --manifest or --matrix");
    let records = read_manifest(&path)?;
    let root = path.parent().unwrap_or(Path::new("."));
    let check = check_manifest(root, &records);
    let screens = records.iter().filter(|r| r.screen_used).count();
    println!("records:        {}", check.records);
    println!("screen used:    {screens}");
    println!("missing photos: {}", check.missing_photos.len());
    println!("invalid theta:  {}", check.invalid_theta.len());
    println!("ordered:        {}", !check.out_of_order);
    if let Some(out) = a.export_truth {
        let lines: Vec<String> = records
            .iter()
            .map(|r| Ok(format_record(&r.photo_path, &r.theta.to_quad()?.coords())))
            .collect::<rectisynth::Result<_>>()?;
        std::fs::write(out, lines.join("\n") + "\n")?;
    }
    if let Some(out) = a.export_pred {
        let lines: Vec<String> = records.iter().map(|r| format_record(&r.photo_path, &r.theta.theta())).collect();
        std::fs::write(out, lines.join("\n") + "\n")?;
    }
    if !check.is_ok() {
        return Err("manifest check failed".into());
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    let mut cfg = load_config(a.config.as_deref(), a.perturbations.as_deref())?;
    cfg.seed = a.seed;
    cfg.canvas_width = a.size.0;
    cfg.canvas_height = a.size.1;
    let workers = a.workers.unwrap_or_else(default_workers);
    let r = bench::run(&cfg, a.n, workers)?;
    println!("samples:   {}", r.samples);
    println!("workers:   {}", r.workers);
    println!("size:      {}x{}", a.size.0, a.size.1);
    println!("wall time: {:.3} s", r.elapsed.as_secs_f64());
    println!("rate:      {:.2} samples/s", r.samples_per_second());
    println!("per-sample step time (ms, summed over workers):");
    for (name, ms) in r.per_step_ms() {
        println!("  {name:<10} {ms:.3}");
    }
    Ok(())
}
