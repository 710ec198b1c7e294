use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use splatlab::blend::BlendMode;
use splatlab::image_io::{difference_heat, write_png, write_ppm};
use splatlab::lab::{mean_abs_error, psnr, run_sweep, write_sweep_csv, SweepConfig, SweepGrid, SweepVar};
use splatlab::raster::{render, Framebuffer, Render, RenderOptions, Viewport};
use splatlab::scene::{read_ply, write_ply, Camera, Splat3D};
use splatlab::synth::{generate, SceneKind};

#[derive(Parser)]
#[command(name = "splatlab", version, about = "CPU reference renderer and error lab for Gaussian-splat blending")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render one image.
    Render(RenderArgs),
    /// Render two modes and a reference, report PSNRs and write difference heat maps.
    Compare(CompareArgs),
    /// Run the two-splat transmittance-error sweep.
    Sweep(SweepArgs),
    /// Write a synthetic scene as splat PLY plus camera JSON.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct SceneArgs {
    /// Splat PLY file.
    #[arg(long, requires = "camera", conflicts_with = "synth")]
    ply: Option<PathBuf>,
    /// Camera JSON file.
    #[arg(long)]
    camera: Option<PathBuf>,
    /// Built-in synthetic scene instead of files: two-plane, checker, cloud or cloudN.
    #[arg(long, default_value = "two-plane")]
    synth: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Multiplies intrinsics and resolution (0.125 zooms out 8x, 8 zooms in).
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
}

#[derive(Args)]
struct RenderFlags {
    /// Sub-samples per axis for a bare `ss` mode.
    #[arg(long = "ss-k", default_value_t = 256)]
    ss_k: u32,
    #[arg(long, default_value_t = splatlab::blend::DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = 16)]
    tile: u32,
    /// Background color as r,g,b in linear [0, 1].
    #[arg(long, default_value = "0,0,0", value_parser = parse_rgb)]
    bg: [f64; 3],
    /// Force the 0.3 px² screen-space dilation on or off (default: on for center only).
    #[arg(long)]
    lowpass: Option<Switch>,
    /// Render only x0,y0,width,height of the image.
    #[arg(long, value_parser = parse_viewport)]
    viewport: Option<Viewport>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[command(flatten)]
    flags: RenderFlags,
    /// center, integrated, gb, ss or ssK.
    #[arg(long, default_value = "gb")]
    mode: String,
    /// Output PPM path.
    #[arg(long, default_value = "render.ppm")]
    out: PathBuf,
    /// Also write a PNG next to the PPM.
    #[arg(long)]
    png: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[command(flatten)]
    flags: RenderFlags,
    #[arg(long = "mode-a", default_value = "gb")]
    mode_a: String,
    #[arg(long = "mode-b", default_value = "center")]
    mode_b: String,
    #[arg(long = "reference", default_value = "ss")]
    reference: String,
    /// Output prefix; writes <out>_<mode>.ppm and <out>_heat_<mode>.ppm.
    #[arg(long, default_value = "compare")]
    out: PathBuf,
    /// Heat-map gain applied to the absolute difference.
    #[arg(long, default_value_t = 10.0)]
    gain: f64,
}

#[derive(Args)]
struct SweepArgs {
    /// mu_x or sigma.
    #[arg(long, default_value = "mu_x")]
    var: String,
    #[arg(long)]
    start: Option<f64>,
    #[arg(long)]
    end: Option<f64>,
    /// Linear step; the sigma sweep is log-spaced and uses --count instead.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    /// Comma-separated modes.
    #[arg(long, default_value = "center,integrated,gb,ss256")]
    modes: String,
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// two-plane, checker, cloud or cloudN.
    #[arg(long, default_value = "two-plane")]
    kind: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Splat count for the cloud scene.
    #[arg(long)]
    n: Option<usize>,
    /// Output directory for scene.ply and camera.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn parse_rgb(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s.split(',').map(|c| c.trim().parse::<f64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    match v[..] {
        [r, g, b] if v.iter().all(|c| c.is_finite() && *c >= 0.0) => Ok([r, g, b]),
        _ => Err(format!("expected r,g,b with non-negative values, got '{s}'")),
    }
}

fn parse_viewport(s: &str) -> Result<Viewport, String> {
    let v: Vec<u32> = s.split(',').map(|c| c.trim().parse::<u32>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    match v[..] {
        [x0, y0, width, height] => Ok(Viewport { x0, y0, width, height }),
        _ => Err(format!("expected x0,y0,width,height, got '{s}'")),
    }
}

fn parse_mode(s: &str, ss_k: u32) -> Result<BlendMode> {
    if ss_k == 0 {
        bail!("--ss-k must be at least 1");
    }
    if s == "ss" {
        return Ok(BlendMode::Supersample(ss_k));
    }
    Ok(s.parse()?)
}

fn load_scene(args: &SceneArgs) -> Result<(Vec<Splat3D>, Camera)> {
    let (splats, camera) = match (&args.ply, &args.camera) {
        (Some(ply), Some(cam)) => (
            read_ply(ply).with_context(|| format!("reading {}", ply.display()))?,
            Camera::load(cam).with_context(|| format!("reading {}", cam.display()))?,
        ),
        (None, Some(_)) => bail!("--camera needs --ply"),
        _ => {
            let scene = generate(args.synth.parse()?, args.seed);
            (scene.splats, scene.camera)
        }
    };
    let camera = if args.scale == 1.0 { camera } else { camera.scaled(args.scale)? };
    Ok((splats, camera))
}

fn options(flags: &RenderFlags, mode: BlendMode) -> Result<RenderOptions> {
    if !(flags.epsilon > 0.0 && flags.epsilon < 1.0) {
        bail!("--epsilon must lie in (0, 1), got {}", flags.epsilon);
    }
    Ok(RenderOptions {
        epsilon: flags.epsilon,
        tile_size: flags.tile,
        background: flags.bg,
        lowpass: flags.lowpass.map(|s| match s {
            Switch::On => splatlab::scene::LOWPASS_DILATION,
            Switch::Off => 0.0,
        }),
        viewport: flags.viewport,
        threads: flags.threads,
        ..RenderOptions::new(mode)
    })
}

fn render_reported(splats: &[Splat3D], camera: &Camera, opts: &RenderOptions) -> Result<Render> {
    let t0 = Instant::now();
    let r = render(splats, camera, opts)?;
    let elapsed = t0.elapsed();
    let s = &r.stats;
    let res = &r.image.residual;
    let mean = res.iter().sum::<f64>() / res.len() as f64;
    let (lo, hi) = res.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
    println!(
        "{}: {}x{}, {} of {} splats visible, residual T mean {mean:.4} min {lo:.4} max {hi:.4}, {:.1} ms",
        opts.mode,
        r.image.width,
        r.image.height,
        s.visible,
        s.splats,
        elapsed.as_secs_f64() * 1e3
    );
    if s.culled_near > 0 {
        println!("  {} splats behind the near plane", s.culled_near);
    }
    if s.numerical_culls() > 0 {
        eprintln!(
            "warning: culled {} non-finite and {} degenerate splats",
            s.culled_non_finite, s.culled_degenerate
        );
    }
    Ok(r)
}

fn save(path: &Path, fb: &Framebuffer) -> Result<()> {
    write_ppm(path, fb).with_context(|| format!("writing {}", path.display()))
}

fn cmd_render(args: RenderArgs) -> Result<()> {
    let mode = parse_mode(&args.mode, args.flags.ss_k)?;
    let (splats, camera) = load_scene(&args.scene)?;
    let r = render_reported(&splats, &camera, &options(&args.flags, mode)?)?;
    save(&args.out, &r.image)?;
    println!("wrote {}", args.out.display());
    if args.png {
        let png = args.out.with_extension("png");
        write_png(&png, &r.image).with_context(|| format!("writing {}", png.display()))?;
        println!("wrote {}", png.display());
    }
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!("_{suffix}.ppm"));
    prefix.with_file_name(name)
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let k = args.flags.ss_k;
    let (a, b, reference) = (parse_mode(&args.mode_a, k)?, parse_mode(&args.mode_b, k)?, parse_mode(&args.reference, k)?);
    let (splats, camera) = load_scene(&args.scene)?;
    let oracle = render_reported(&splats, &camera, &options(&args.flags, reference)?)?.image;
    save(&with_suffix(&args.out, &reference.short_name()), &oracle)?;
    for mode in [a, b] {
        let img = render_reported(&splats, &camera, &options(&args.flags, mode)?)?.image;
        let p = psnr(&img, &oracle)?;
        println!("PSNR({mode}, {reference}) = {p:.2} dB");
        save(&with_suffix(&args.out, &mode.short_name()), &img)?;
        save(&with_suffix(&args.out, &format!("heat_{}", mode.short_name())), &difference_heat(&img, &oracle, args.gain)?)?;
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let var: SweepVar = args.var.parse()?;
    let mut config = match var {
        SweepVar::MuX => SweepConfig::mu_x_sweep(),
        SweepVar::Sigma => SweepConfig::sigma_sweep(),
    };
    config.grid = match config.grid {
        SweepGrid::Linear { start, end, step } => SweepGrid::Linear {
            start: args.start.unwrap_or(start),
            end: args.end.unwrap_or(end),
            step: args.step.unwrap_or(step),
        },
        SweepGrid::Log { start, end, count } => SweepGrid::Log {
            start: args.start.unwrap_or(start),
            end: args.end.unwrap_or(end),
            count: args.count.unwrap_or(count),
        },
    };
    config.modes = args.modes.split(',').map(|m| parse_mode(m.trim(), 256)).collect::<Result<_>>()?;
    let rows = run_sweep(&config)?;
    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_sweep_csv(BufWriter::new(file), &rows).with_context(|| format!("writing {}", args.out.display()))?;
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    for (mode, mean) in mean_abs_error(&rows) {
        println!("mean |dT| {mode:>10}: {mean:.4e}");
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let mut kind: SceneKind = args.kind.parse()?;
    if let (SceneKind::Cloud(_), Some(n)) = (kind, args.n) {
        kind = SceneKind::Cloud(n);
    }
    let scene = generate(kind, args.seed);
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let ply = args.out.join("scene.ply");
    let cam = args.out.join("camera.json");
    write_ply(&ply, &scene.splats)?;
    scene.camera.save(&cam)?;
    println!("{kind}: {} splats -> {}, {}", scene.splats.len(), ply.display(), cam.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Render(a) => cmd_render(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
