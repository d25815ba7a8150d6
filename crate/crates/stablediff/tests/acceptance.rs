//! The ten acceptance criteria, each with its stated tolerance and runtime
//! budget. Prints one PASS/FAIL line per criterion; exits nonzero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use stablediff::cli::write_sample;
use stablediff::config::OutputFormat;
use stablediff::experiment::{self, Setup};
use stablediff::parallel::{map_indexed, resolve_threads};
use stablediff_core::asymptotics::{centering_exact, diffusive_variance, poisson_solution, Regime};
use stablediff_core::pathsim::{direct_path, Rescaling, Scheme, SimConfig};
use stablediff_core::stable::{estimate_local_time, BrownianGrid, StableSpec};
use stablediff_core::validate::{cf_distance, default_xi_grid, empirical_cf, estimate_alpha, ks_two_sample};
use stablediff_core::ObservablePreset;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome, String> {
    Ok(Outcome { pass, detail })
}

type Check = fn(&Ctx) -> Result<Outcome, String>;

struct Ctx {
    dir: PathBuf,
    threads: usize,
}

impl Ctx {
    fn file(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_stablediff")
}

fn run_cli(args: &[&str]) -> Result<serde_json::Value, String> {
    let out = Command::new(bin()).args(args).output().map_err(e)?;
    if !out.status.success() {
        return Err(format!("{:?} failed: {}", args, String::from_utf8_lossy(&out.stderr)));
    }
    serde_json::from_slice(&out.stdout).map_err(e)
}

// 1. σ² by direct integration vs γ² from the Poisson equation, kinetic β = 7
fn c1(_: &Ctx) -> Result<Outcome, String> {
    let s = Setup::build("kinetic(7)", Some("centered_id"), None).map_err(e)?;
    let direct = diffusive_variance(&s.model, &s.observable).map_err(e)?;
    let poisson = poisson_solution(&s.model, &s.observable).map_err(e)?.gamma_sq;
    let rel = (direct - poisson).abs() / direct.abs();
    outcome(rel < 1e-6, format!("sigma^2 = {direct:.12}, gamma^2 = {poisson:.12}, rel gap {rel:.2e}"))
}

// 2. regime table through `analyze`
fn c2(ctx: &Ctx) -> Result<Outcome, String> {
    let want = [
        ("7", "Diffusive", 8.0 / 3.0),
        ("5", "CriticalDiffusive", 2.0),
        ("3", "Levy", 4.0 / 3.0),
        ("2", "CriticalLevy", 1.0),
        ("1.5", "Levy", 5.0 / 6.0),
    ];
    let mut pass = true;
    let mut got = Vec::new();
    for (beta, regime, alpha) in want {
        let out = ctx.file(&format!("analyze_{beta}"));
        let v = run_cli(&["analyze", "--model", &format!("kinetic({beta})"), "--out", out.to_str().unwrap()])?;
        let file: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("analysis.json")).map_err(e)?).map_err(e)?;
        let r = file["law"]["regime"].as_str().unwrap_or("?").to_string();
        let a = file["law"]["alpha"].as_f64().unwrap_or(f64::NAN);
        pass &= r == regime && (a - alpha).abs() < 1e-12 && v["law"] == file["law"];
        got.push(format!("{beta}:{r}({a:.4})"));
    }
    outcome(pass, got.join(" "))
}

fn excursion_sample(ctx: &Ctx, spec: &StableSpec, name: &str) -> Result<Vec<f64>, String> {
    let s = experiment::stable_samples(spec, Scheme::Excursion, &[1.0], 5000, 3, 1e-5, ctx.threads).map_err(e)?;
    write_sample(&ctx.dir.join(name), &s, OutputFormat::Csv).map_err(e)?;
    Ok(s.column(0))
}

// 3. excursion construction, α = 1/2, (a, b) = (1, 0)
fn c3(ctx: &Ctx) -> Result<Outcome, String> {
    let spec = StableSpec::new(0.5, 1.0, 0.0).map_err(e)?;
    let ks = excursion_sample(ctx, &spec, "c3")?;
    let p = spec.params().map_err(e)?;
    let grid = default_xi_grid(p.c.powf(2.0));
    let ecf = empirical_cf(&ks, &grid).map_err(e)?;
    let target: Vec<_> = grid.iter().map(|&x| p.cf(x, 1.0)).collect();
    let d = cf_distance(&ecf, &target, 0.02);
    let inside = d.points - d.outside;
    outcome(inside >= 19, format!("c = {:.6}, {inside}/21 points in band, sup gap {:.4}", p.c, d.sup_gap))
}

// 4. compensated construction, α = 3/2, (a, b) = (1, -1)
fn c4(ctx: &Ctx) -> Result<Outcome, String> {
    let spec = StableSpec::new(1.5, 1.0, -1.0).map_err(e)?;
    let ks = excursion_sample(ctx, &spec, "c4")?;
    let c = spec.c().map_err(e)?;
    let grid = default_xi_grid(c.powf(1.0 / 1.5));
    let ecf = empirical_cf(&ks, &grid).map_err(e)?;
    let im_ok = ecf.iter().filter(|p| p.im.abs() <= 3.0 * p.se_im).count();
    let mod_ok = ecf
        .iter()
        .filter(|p| (p.value().norm() - (-c * p.xi.powf(1.5)).exp()).abs() <= 3.0 * p.se() + 0.02)
        .count();
    outcome(
        im_ok == 21 && mod_ok >= 19,
        format!("c = {c:.4}, Im within 3 SE at {im_ok}/21, modulus in band at {mod_ok}/21"),
    )
}

fn kinetic3(ctx: &Ctx, eps: f64, dt: f64, scheme: Scheme, seed: u64, name: &str) -> Result<(Vec<f64>, Setup), String> {
    let setup = Setup::build("kinetic(3)", None, None).map_err(e)?;
    let a = experiment::analyze(&setup, None, Some(eps)).map_err(e)?;
    let sim = SimConfig { dt, epsilon: eps, horizon_times: vec![1.0], n_paths: 2000, seed, scheme };
    let s = experiment::simulate(&setup, &a.law, &sim, ctx.threads).map_err(e)?;
    write_sample(&ctx.dir.join(name), &s, OutputFormat::Csv).map_err(e)?;
    Ok((s.column(0), setup))
}

// 5. end-to-end Lévy regime, kinetic β = 3
fn c5(ctx: &Ctx) -> Result<Outcome, String> {
    let (xs, setup) = kinetic3(ctx, 1e-3, 0.01, Scheme::Direct, 1, "c5")?;
    let law = experiment::analyze(&setup, None, None).map_err(e)?.law;
    let est = estimate_alpha(&xs, 5).map_err(e)?;
    let reference = experiment::law_samples(&law, &[1.0], 2000, 5, ctx.threads).map_err(e)?.column(0);
    let ks = ks_two_sample(&xs, &reference).map_err(e)?;
    outcome(
        (est.alpha - 4.0 / 3.0).abs() <= 0.15 && !ks.reject,
        format!(
            "1e5 steps/path, alpha_hat = {:.4} (95% CI {:.3}..{:.3}), KS {:.4} vs critical {:.4}",
            est.alpha, est.ci_low, est.ci_high, ks.statistic, ks.critical
        ),
    )
}

// 6. Direct vs TimeChange, kinetic β = 3, ε = 1e-2
fn c6(ctx: &Ctx) -> Result<Outcome, String> {
    let (d, _) = kinetic3(ctx, 1e-2, 0.0025, Scheme::Direct, 11, "c6")?;
    let (t, _) = kinetic3(ctx, 1e-2, 0.0025, Scheme::TimeChange, 11, "c6")?;
    let ks = ks_two_sample(&d, &t).map_err(e)?;
    outcome(!ks.reject, format!("KS {:.4} vs critical {:.4}", ks.statistic, ks.critical))
}

// 7. local-time calibration and the occupation formula
fn c7(ctx: &Ctx) -> Result<Outcome, String> {
    let n = 10_000u64;
    let dt = 1e-5;
    let res: Vec<(f64, f64)> = map_indexed(n, ctx.threads, |i| {
        let g = BrownianGrid::simulate(dt, 100_000, 17, i);
        let l = estimate_local_time(&g, 0.0, 1.0);
        let phi = |x: f64| (-x * x).exp();
        let time_side: f64 = g.w[..g.w.len() - 1].iter().map(|&w| phi(w) * dt).sum();
        let level_side: f64 = g.levels.levels().iter().map(|&(x, lx)| phi(x) * lx * g.delta).sum();
        (l, (time_side - level_side).abs() / time_side)
    });
    let nf = n as f64;
    let mean = res.iter().map(|r| r.0).sum::<f64>() / nf;
    let var = res.iter().map(|r| (r.0 - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let se = (var / nf).sqrt();
    let target = (2.0 / std::f64::consts::PI).sqrt();
    let gap = res.iter().map(|r| r.1).sum::<f64>() / nf;
    outcome(
        (mean - target).abs() <= 3.0 * se && gap < 0.02,
        format!("mean L = {mean:.5} vs {target:.5} (SE {se:.5}), occupation gap {:.3}%", 100.0 * gap),
    )
}

// 8. exact α = 1 centering vs its asymptotic form, kinetic(2, 2, 1)
fn c8(_: &Ctx) -> Result<Outcome, String> {
    let setup = Setup::build("kinetic(2,2,1)", Some("id"), None).map_err(e)?;
    let law = experiment::analyze(&setup, None, None).map_err(e)?.law;
    if law.regime != Regime::CriticalLevy {
        return outcome(false, format!("regime {}", law.regime));
    }
    let mut ratios = Vec::new();
    for k in 2..=6 {
        let eps = 10f64.powi(-k);
        let exact = centering_exact(&setup.model, &setup.observable, &law, eps).map_err(e)?;
        ratios.push(exact / law.xi_eps_asymptotic(eps).map_err(e)?);
    }
    let monotone = ratios.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs());
    let last = *ratios.last().unwrap();
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.5}")).collect();
    outcome(monotone && (0.9..=1.1).contains(&last), format!("ratios k=2..6: {}", shown.join(", ")))
}

// 9. ergodic average, heavy-tailed θ = 1, f = x²
fn c9(ctx: &Ctx) -> Result<Outcome, String> {
    let setup = Setup::build("heavy_tailed(1)", Some("abs_power(2)"), None).map_err(e)?;
    let t_end = 200.0;
    let dt = 1e-3;
    // ε = 1 / T turns the horizon t = 1 into diffusion time T
    let sim = SimConfig { dt, epsilon: 1.0 / t_end, horizon_times: vec![1.0], n_paths: 100, seed: 23, scheme: Scheme::Direct };
    let f = ObservablePreset::AbsPower { p: 2.0 };
    let avgs: Result<Vec<f64>, _> = map_indexed(100, ctx.threads, |i| {
        direct_path(&setup.model, &f, &sim, &Rescaling::identity(), i).map(|p| p.values[0] / t_end)
    })
    .into_iter()
    .collect();
    let avgs = avgs.map_err(e)?;
    let mean = avgs.iter().sum::<f64>() / avgs.len() as f64;
    outcome((mean - 0.5).abs() < 0.05, format!("average of time means {mean:.4} (target 0.5)"))
}

// 10. criteria 3-6 rerun through the CLI on 3 threads: byte-identical files
fn c10(ctx: &Ctx) -> Result<Outcome, String> {
    let d = |s: &str| ctx.file(&format!("rerun/{s}")).to_string_lossy().into_owned();
    let th = ["--threads", "3"];
    let mut runs: Vec<(Vec<String>, PathBuf, PathBuf)> = Vec::new();
    let mut add = |args: &[&str], orig: &str, new_dir: &str| {
        let mut v: Vec<String> = th.iter().chain(args.iter()).map(|s| s.to_string()).collect();
        v.extend(["--out".to_string(), d(new_dir)]);
        runs.push((v, ctx.file(orig), PathBuf::from(d(new_dir)).join(Path::new(orig).file_name().unwrap())));
    };
    let stable = ["stable", "--method", "excursion", "--paths", "5000", "--seed", "3", "--dt", "1e-5", "--times", "1"];
    add(&[&stable[..], &["--preset", "half"]].concat(), "c3/sample_excursion.csv", "c3");
    add(&[&stable[..], &["--preset", "three_halves"]].concat(), "c4/sample_excursion.csv", "c4");
    let sim = ["simulate", "--model", "kinetic(3)", "--paths", "2000", "--times", "1"];
    add(&[&sim[..], &["--epsilon", "1e-3", "--dt", "0.01", "--seed", "1", "--scheme", "direct"]].concat(), "c5/sample_direct.csv", "c5");
    add(&[&sim[..], &["--epsilon", "1e-2", "--dt", "0.0025", "--seed", "11", "--scheme", "direct"]].concat(), "c6/sample_direct.csv", "c6");
    add(&[&sim[..], &["--epsilon", "1e-2", "--dt", "0.0025", "--seed", "11", "--scheme", "timechange"]].concat(), "c6/sample_timechange.csv", "c6");
    let mut same = 0;
    let total = runs.len();
    for (args, orig, new) in runs {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        run_cli(&refs)?;
        let a = std::fs::read(&orig).map_err(|err| format!("{}: {err}", orig.display()))?;
        let b = std::fs::read(&new).map_err(|err| format!("{}: {err}", new.display()))?;
        same += usize::from(a == b);
    }
    outcome(same == total, format!("{same}/{total} sample files byte-identical (library on {} thread(s) vs CLI on 3)", ctx.threads))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let ctx = Ctx { dir: tmp.path().to_path_buf(), threads: 1 };
    let _ = resolve_threads(None);
    let criteria: [(u32, &str, Check, u64); 10] = [
        (1, "diffusive constant cross-check", c1, 10),
        (2, "regime table", c2, 30),
        (3, "excursion construction, alpha = 1/2", c3, 300),
        (4, "compensated construction, alpha = 3/2", c4, 300),
        (5, "end-to-end Levy regime", c5, 1800),
        (6, "scheme equivalence", c6, 1200),
        (7, "local-time calibration", c7, 120),
        (8, "centering asymptotics", c8, 60),
        (9, "ergodic sanity", c9, 120),
        (10, "determinism across thread counts", c10, 3600),
    ];
    let mut failed = 0;
    for (n, name, check, budget) in criteria {
        let start = Instant::now();
        let res = check(&ctx);
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(budget);
        let (pass, detail) = match res {
            Ok(o) => (o.pass && in_time, o.detail),
            Err(err) => (false, format!("error: {err}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {n:>2} {}: {name}: {detail} [{:.1}s, budget {budget}s]",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
