//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the report is printed by a
//! normal `cargo test`. Exits nonzero if any hard criterion fails; the
//! relative-cost criterion only warns.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{Rotation2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use splatlab::blend::{blend_pixel, to_splat_frame, update_window, BlendMode, BlendParams, PreparedSplat, TransmittanceWindow};
use splatlab::eigen::Sym2;
use splatlab::lab::{psnr, run_sweep, SweepConfig};
use splatlab::quadrature::{integrate, integrate_2d};
use splatlab::raster::{render, Framebuffer, RenderOptions, Viewport};
use splatlab::scene::{read_ply_bytes, Camera, write_ply_bytes, ProjectedSplat, Splat3D};
use splatlab::special::{gaussian_moment, MomentOrder};
use splatlab::synth::{generate, SceneKind, SynthScene};

enum Outcome {
    Pass,
    Fail,
    Warn,
}

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: u32, title: &str, outcome: Outcome, detail: String, elapsed: Duration) {
        let tag = match outcome {
            Outcome::Pass => "PASS",
            Outcome::Fail => {
                self.failures += 1;
                "FAIL"
            }
            Outcome::Warn => "WARN",
        };
        println!("criterion {id:>2} [{tag}] {title}: {detail} ({:.2} s)", elapsed.as_secs_f64());
    }

    fn check(&mut self, id: u32, title: &str, ok: bool, detail: String, elapsed: Duration) {
        self.line(id, title, if ok { Outcome::Pass } else { Outcome::Fail }, detail, elapsed);
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

fn prepared(mu: Vector2<f64>, s1: f64, s2: f64, theta: f64, o: f64, color: [f64; 3]) -> PreparedSplat {
    let r = Rotation2::new(theta).into_inner();
    let c = r * nalgebra::Matrix2::new(s1 * s1, 0.0, 0.0, s2 * s2) * r.transpose();
    PreparedSplat::new(ProjectedSplat {
        mu2d: mu,
        cov2d: Sym2::new(c[(0, 0)], 0.5 * (c[(0, 1)] + c[(1, 0)]), c[(1, 1)]),
        depth: 1.0,
        opacity: o,
        color,
    })
    .expect("SPD covariance")
}

fn order(k: u32) -> MomentOrder {
    MomentOrder::try_from(k).expect("k in 0..=2")
}

/// Gaussian moments by quadrature: returns (∫xᵏg, ∫|x|ᵏg).
fn quad_moment(k: i32, sigma: f64, a: f64, b: f64) -> (f64, f64) {
    let g = |x: f64| (-x * x / (2.0 * sigma * sigma)).exp();
    let v = integrate(|x| x.powi(k) * g(x), a, b, 1e-13, 0.0);
    let n = integrate(|x| x.abs().powi(k) * g(x), a, b, 1e-13, 0.0);
    (v, n)
}

fn criterion_1(report: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let k = rng.random_range(0..3u32);
        let sigma = log_uniform(&mut rng, 1e-2, 1e3);
        let (mut a, mut b) = (rng.random_range(-10.0..10.0) * sigma, rng.random_range(-10.0..10.0) * sigma);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        let got = gaussian_moment(order(k), sigma, a, b).expect("valid arguments");
        let (want, norm) = quad_moment(k as i32, sigma, a, b);
        if norm > 0.0 {
            worst = worst.max((got - want).abs() / norm);
        }
    }
    let t = start.elapsed();
    report.check(
        1,
        "moment closed forms vs quadrature",
        worst <= 1e-9 && t < Duration::from_secs(10),
        format!("10^4 cases, max rel err {worst:.2e} (limit 1e-9)"),
        t,
    );
}

/// A random window and splat pair whose frame lies within the stability
/// guard.
fn guarded_case(rng: &mut ChaCha8Rng) -> (TransmittanceWindow, PreparedSplat) {
    loop {
        let win = TransmittanceWindow {
            center: Vector2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
            sides: Vector2::new(log_uniform(rng, 0.05, 3.0), log_uniform(rng, 0.05, 3.0)),
            value: rng.random_range(0.0..1.0),
        };
        let s = prepared(
            Vector2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)),
            log_uniform(rng, 0.05, 10.0),
            log_uniform(rng, 0.05, 10.0),
            rng.random_range(0.0..std::f64::consts::PI),
            rng.random_range(0.0..1.0),
            [1.0; 3],
        );
        if to_splat_frame(&win, &s).within_guard() {
            return (win, s);
        }
    }
}

fn criterion_2(report: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let (win, s) = guarded_case(&mut rng);
        let (w, next) = update_window(&win, &s);
        worst = worst.max((next.mass() - (win.mass() - w)).abs());
    }
    let t = start.elapsed();
    report.check(
        2,
        "mass conservation",
        worst <= 1e-9 && t < Duration::from_secs(10),
        format!("10^5 guarded steps, max |Δmass| {worst:.2e} (limit 1e-9)"),
        t,
    );
}

fn criterion_3(report: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_mean, mut worst_var) = (0.0f64, 0.0f64);
    let (mut checked, mut skipped) = (0, 0);
    while checked < 10_000 {
        let (win, s) = guarded_case(&mut rng);
        let f = to_splat_frame(&win, &s);
        let (t, o) = (win.value, s.splat.opacity);
        let ju: Vec<f64> = (0..3).map(|k| quad_moment(k, f.sigma1, f.u1, f.u2).0).collect();
        let jv: Vec<f64> = (0..3).map(|k| quad_moment(k, f.sigma2, f.v1, f.v2).0).collect();
        let (su, sv) = (f.u2 - f.u1, f.v2 - f.v1);
        let pu = [su, (f.u2.powi(2) - f.u1.powi(2)) / 2.0, (f.u2.powi(3) - f.u1.powi(3)) / 3.0];
        let pv = [sv, (f.v2.powi(2) - f.v1.powi(2)) / 2.0, (f.v2.powi(3) - f.v1.powi(3)) / 3.0];
        let m0 = t * pu[0] * pv[0] - t * o * ju[0] * jv[0];
        let mean = Vector2::new(
            (t * pu[1] * pv[0] - t * o * ju[1] * jv[0]) / m0,
            (t * pu[0] * pv[1] - t * o * ju[0] * jv[1]) / m0,
        );
        let var = Vector2::new(
            (t * pu[2] * pv[0] - t * o * ju[2] * jv[0]) / m0 - mean.x * mean.x,
            (t * pu[0] * pv[2] - t * o * ju[0] * jv[2]) / m0 - mean.y * mean.y,
        );
        // clamped sides or a widened box deliberately leave exact matching
        let implied_value = m0 / (12.0 * var.x).sqrt() / (12.0 * var.y).sqrt();
        if !(m0 > 1e-12) || 12.0 * var.min() < 1e-10 || implied_value > 1.0 - 1e-9 {
            skipped += 1;
            continue;
        }
        let (_, next) = update_window(&win, &s);
        let d = next.center - s.splat.mu2d;
        let got_mean = Vector2::new(d.dot(&f.axis1), d.dot(&f.axis2));
        let got_var = next.sides.map(|l| l * l / 12.0);
        for axis in 0..2 {
            let scale = [su, sv][axis];
            worst_mean = worst_mean.max((got_mean[axis] - mean[axis]).abs() / mean[axis].abs().max(scale));
            worst_var = worst_var.max((got_var[axis] - var[axis]).abs() / var[axis].max(scale * scale / 12.0));
        }
        checked += 1;
    }
    let t = start.elapsed();
    report.check(
        3,
        "moment matching vs quadrature",
        worst_mean <= 1e-8 && worst_var <= 1e-8,
        format!("10^4 cases ({skipped} clamped skipped), max rel err mean {worst_mean:.2e}, variance {worst_var:.2e} (limit 1e-8)"),
        t,
    );
}

/// `∫_p α₁α₂` over the origin pixel.
fn pair_overlap(cfg: &SweepConfig, value: f64) -> f64 {
    let [a, b] = cfg.splats_at(value);
    integrate_2d(|x, y| a.alpha_at(Vector2::new(x, y)) * b.alpha_at(Vector2::new(x, y)), (-0.5, 0.5), (-0.5, 0.5), 1e-8, 1e-12)
}

fn criterion_4(report: &mut Report) {
    let start = Instant::now();
    let mut ok = true;
    let mut details = Vec::new();
    for cfg in [SweepConfig::mu_x_sweep(), SweepConfig::sigma_sweep()] {
        let rows = run_sweep(&cfg).expect("valid sweep");
        let mean = |m: BlendMode| {
            let v: Vec<f64> = rows.iter().filter(|r| r.mode == m).map(|r| r.delta_t.abs()).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let (center, integ, gb, ss) = (
            mean(BlendMode::ScalarCenter),
            mean(BlendMode::ScalarIntegrated),
            mean(BlendMode::GaussianBlending),
            mean(BlendMode::Supersample(256)),
        );
        let ratio = center.min(integ) / gb;
        let max_ss = rows.iter().filter(|r| r.mode == BlendMode::Supersample(256)).map(|r| r.delta_t.abs()).fold(0.0, f64::max);
        let mut overlapping = 0;
        let mut sign_ok = true;
        let mut exceptions = Vec::new();
        for r in rows.iter().filter(|r| matches!(r.mode, BlendMode::ScalarCenter | BlendMode::ScalarIntegrated)) {
            if pair_overlap(&cfg, r.value) >= 0.1 {
                overlapping += 1;
                if r.delta_t >= 0.0 {
                    sign_ok = false;
                    exceptions.push(format!("{} {}={:.3} ΔT={:+.1e}", r.mode, cfg.var.name(), r.value, r.delta_t));
                }
            }
        }
        ok &= ratio >= 3.0 && sign_ok && overlapping > 0 && max_ss < 1e-3 && ss < gb;
        details.push(format!(
            "{}: mean|ΔT| center {center:.2e} integrated {integ:.2e} gb {gb:.2e} ss256 {ss:.2e}, ratio {ratio:.1}x, scalar ΔT<0 on {overlapping} overlapping rows: {sign_ok}{}, max|ΔT| ss256 {max_ss:.1e}",
            cfg.var.name(),
            if exceptions.is_empty() { String::new() } else { format!(" (exceptions: {})", exceptions.join(", ")) }
        ));
    }
    let t = start.elapsed();
    report.check(4, "two-splat transmittance sweep", ok && t < Duration::from_secs(30), details.join("; "), t);
}

fn render_with(scene: &SynthScene, cam: &Camera, mode: BlendMode, viewport: Option<Viewport>) -> Framebuffer {
    let opts = RenderOptions { viewport, ..RenderOptions::new(mode) };
    render(&scene.splats, cam, &opts).expect("render").image
}

fn criterion_5(report: &mut Report, scene: &SynthScene) {
    let start = Instant::now();
    let cam = scene.camera.scaled(1.0 / 8.0).unwrap();
    let a = render_with(scene, &cam, BlendMode::Supersample(128), None);
    let b = render_with(scene, &cam, BlendMode::Supersample(256), None);
    let p = psnr(&a, &b).unwrap();
    let t = start.elapsed();
    report.check(5, "oracle convergence", p > 50.0, format!("PSNR(ss128, ss256) at x1/8 = {p:.1} dB (limit > 50)"), t);
}

fn criterion_6(report: &mut Report) {
    let start = Instant::now();
    let mut ok = true;
    let mut details = Vec::new();
    for seed in [1, 2] {
        let scene = generate(SceneKind::TwoPlane, seed);
        let out = scene.camera.scaled(1.0 / 8.0).unwrap();
        // a 32x32 window over the occluder's right edge
        let zoom = scene.camera.scaled(8.0).unwrap();
        let window = Viewport { x0: 829, y0: 445, width: 32, height: 32 };
        for (label, cam, view, margin) in [("x1/8", out, None, 1.0f64), ("x8", zoom, Some(window), 0.0)] {
            let oracle = render_with(&scene, &cam, BlendMode::Supersample(256), view);
            let score = |m| psnr(&render_with(&scene, &cam, m, view), &oracle).unwrap();
            let (center, integ, gb) =
                (score(BlendMode::ScalarCenter), score(BlendMode::ScalarIntegrated), score(BlendMode::GaussianBlending));
            let pass = gb - center >= margin.max(1e-9) && gb - integ >= margin;
            ok &= pass;
            details.push(format!("seed {seed} {label}: gb {gb:.2} center {center:.2} integrated {integ:.2} dB"));
        }
    }
    let t = start.elapsed();
    report.check(6, "anti-aliasing ordering", ok && t < Duration::from_secs(120), details.join("; "), t);
}

fn criterion_7(report: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let params = BlendParams::default();
    let center = Vector2::new(0.5, 0.5);
    let (mut worst, mut worst_aligned) = (0.0f64, 0.0f64);
    for i in 0..1000 {
        // rotated splats of at least a pixel, plus axis-aligned ones down to 0.1 px
        let (s1, s2, theta) = if i % 2 == 0 {
            (rng.random_range(1.0..8.0), rng.random_range(1.0..8.0), rng.random_range(0.0..std::f64::consts::PI))
        } else {
            let quarter = [0.0, std::f64::consts::FRAC_PI_2][rng.random_range(0..2)];
            (log_uniform(&mut rng, 0.1, 8.0), log_uniform(&mut rng, 0.1, 8.0), quarter)
        };
        let mu = center + Vector2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let color = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        let s = prepared(mu, s1, s2, theta, rng.random_range(0.05..1.0), color);
        let c = |m| blend_pixel(&[&s], center, m, &params).color;
        let (gb, integ, ss) = (c(BlendMode::GaussianBlending), c(BlendMode::ScalarIntegrated), c(BlendMode::Supersample(256)));
        let mut e = 0.0f64;
        for k in 0..3 {
            e = e.max((gb[k] - integ[k]).abs()).max((gb[k] - ss[k]).abs()).max((integ[k] - ss[k]).abs());
        }
        worst = worst.max(e);
        if i % 2 == 1 {
            worst_aligned = worst_aligned.max(e);
        }
    }
    let t = start.elapsed();
    report.check(
        7,
        "single-splat equivalence",
        worst <= 1e-4,
        format!("10^3 pixels, max color diff {worst:.2e}, axis-aligned half {worst_aligned:.2e} (limit 1e-4)"),
        t,
    );
}

fn criterion_8(report: &mut Report, fixtures: &[(&str, SynthScene)]) {
    let start = Instant::now();
    let max = std::thread::available_parallelism().map_or(8, |n| n.get());
    let mut ok = true;
    let mut frames = 0;
    for (_, scene) in fixtures {
        for mode in [BlendMode::ScalarCenter, BlendMode::ScalarIntegrated, BlendMode::GaussianBlending, BlendMode::Supersample(4)] {
            let run = |threads| {
                let opts = RenderOptions { threads: Some(threads), ..RenderOptions::new(mode) };
                let fb = render(&scene.splats, &scene.camera, &opts).unwrap().image;
                let mut bytes: Vec<u8> = fb.rgb.iter().flatten().flat_map(|v| v.to_le_bytes()).collect();
                bytes.extend(fb.residual.iter().flat_map(|v| v.to_le_bytes()));
                bytes
            };
            let reference = run(1);
            for threads in [2, 4, 8, max] {
                ok &= run(threads) == reference;
            }
            frames += 1;
        }
    }
    let t = start.elapsed();
    report.check(8, "determinism across thread counts", ok, format!("{frames} fixture/mode frames at threads {{1, 2, 4, 8, {max} (max)}}"), t);
}

fn criterion_9(report: &mut Report, cloud: &SynthScene) {
    let start = Instant::now();
    let time = |mode| {
        let opts = RenderOptions { threads: Some(1), ..RenderOptions::new(mode) };
        (0..3)
            .map(|_| {
                let t0 = Instant::now();
                render(&cloud.splats, &cloud.camera, &opts).unwrap();
                t0.elapsed()
            })
            .min()
            .unwrap()
    };
    let (center, gb) = (time(BlendMode::ScalarCenter), time(BlendMode::GaussianBlending));
    let ratio = gb.as_secs_f64() / center.as_secs_f64();
    let outcome = if ratio <= 3.0 { Outcome::Pass } else { Outcome::Warn };
    report.line(
        9,
        "relative cost (soft)",
        outcome,
        format!("single-thread cloud: gb {:.1} ms, center {:.1} ms, ratio {ratio:.2} (limit 3)", gb.as_secs_f64() * 1e3, center.as_secs_f64() * 1e3),
        start.elapsed(),
    );
}

fn criterion_10(report: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for coeffs in [1, 4, 9, 16] {
        let splats: Vec<Splat3D> = (0..200)
            .map(|_| {
                let mu = nalgebra::Vector3::from_fn(|_, _| rng.random_range(-10.0..10.0));
                let scale = nalgebra::Vector3::from_fn(|_, _| log_uniform(&mut rng, 1e-3, 10.0));
                let axis = nalgebra::Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
                let rot = nalgebra::UnitQuaternion::from_scaled_axis(axis * 3.0);
                let sh = (0..coeffs).map(|_| std::array::from_fn(|_| rng.random_range(-2.0..2.0))).collect();
                Splat3D::new(mu, scale, rot, rng.random_range(0.01..0.99), sh).unwrap()
            })
            .collect();
        let back = read_ply_bytes(&write_ply_bytes(&splats).unwrap()).unwrap();
        assert_eq!(back.len(), splats.len());
        for (a, b) in splats.iter().zip(&back) {
            let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(1.0);
            let mut e = (a.mu - b.mu).amax() / a.mu.amax().max(1.0);
            e = e.max(a.scale.iter().zip(b.scale.iter()).map(|(x, y)| (x - y).abs() / x).fold(0.0, f64::max));
            e = e.max(rel(a.opacity, b.opacity));
            e = e.max(a.rot.angle_to(&b.rot));
            e = e.max(a.sh.iter().flatten().zip(b.sh.iter().flatten()).map(|(x, y)| rel(*x, *y)).fold(0.0, f64::max));
            worst = worst.max(e);
        }
    }

    // logistic(0) = 0.5 and exp(0) = 1 on a hand-written record
    let mut bytes = b"ply\nformat binary_little_endian 1.0\nelement vertex 1\n".to_vec();
    let names = ["x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"];
    for n in names {
        bytes.extend(format!("property float {n}\n").as_bytes());
    }
    bytes.extend(b"end_header\n");
    for v in [1.0f32, 2.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0] {
        bytes.extend(v.to_le_bytes());
    }
    let fixture = &read_ply_bytes(&bytes).unwrap()[0];
    let activations_ok = fixture.opacity == 0.5 && fixture.scale == nalgebra::Vector3::new(1.0, 1.0, 1.0) && fixture.rot.angle() == 0.0;

    let t = start.elapsed();
    report.check(
        10,
        "PLY ingest",
        worst <= 1e-6 && activations_ok,
        format!("800 splats over SH degrees 0..3, max rel err {worst:.2e} (limit 1e-6); activation fixtures {activations_ok}"),
        t,
    );
}

fn main() -> ExitCode {
    // `cargo test -- <filter>` passes arguments; anything but a bare run or
    // the word "acceptance" skips the suite.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return ExitCode::SUCCESS;
    }
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }

    let mut report = Report { failures: 0 };
    let two_plane = generate(SceneKind::TwoPlane, 1);
    let fixtures = [
        ("two-plane", two_plane.clone()),
        ("checker", generate(SceneKind::Checker, 1)),
        ("cloud", generate(SceneKind::Cloud(2000), 1)),
    ];

    criterion_1(&mut report);
    criterion_2(&mut report);
    criterion_3(&mut report);
    criterion_4(&mut report);
    criterion_5(&mut report, &two_plane);
    criterion_6(&mut report);
    criterion_7(&mut report);
    criterion_8(&mut report, &fixtures);
    criterion_9(&mut report, &fixtures[2].1);
    criterion_10(&mut report);

    if report.failures == 0 {
        println!("acceptance: all hard criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria failed", report.failures);
        ExitCode::FAILURE
    }
}
