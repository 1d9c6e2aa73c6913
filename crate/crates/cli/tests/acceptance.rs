//! Acceptance suite: one PASS/FAIL line per criterion.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use bpr_core::domain::{
    aligned_relative_error, ramp_aligned_errors, synth, ComplexImage, ExitWaveStack, MeasurementStack, Model, Probe,
    ScanGeometry,
};
use bpr_core::forward::{adjoint_wrt_u, adjoint_wrt_w, forward, intensity, simulate_poisson};
use bpr_core::lifted::{random_instance, solve_lifted};
use bpr_core::metrics::{metric_gradient_slice, metric_value_slice, Metric, MetricKind};
use bpr_core::solvers::{
    jacobian_adjoint_apply, jacobian_apply, lm_step, residual, run_admm, run_ap, run_dr, run_lm, run_phebie,
    run_rpie, Damping, Estimate, Linearization, Problem, ProjectionScheme, ProjectionState,
};
use bpr_core::{DampingRule, SolverConfig, SolverReport};
use num_complex::Complex64 as C64;
use rand::Rng;

type Solver = fn(&Problem, &SolverConfig) -> bpr_core::Result<SolverReport>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

fn rdot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cnorm(a: &[C64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn rnorm(a: &[f64]) -> f64 {
    rdot(a, a).sqrt()
}

fn rel_dist(a: &[C64], b: &[C64]) -> f64 {
    let d: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    cnorm(&d) / cnorm(b)
}

fn models() -> Vec<Model> {
    let g = ScanGeometry::jittered_grid(16, 8, 4, 1, 3).unwrap();
    vec![
        Model::ptycho(g.clone()),
        Model::fourier_ptycho(g),
        Model::frog(4, 6, 3).unwrap(),
        Model::convolution(8, false).unwrap(),
        Model::convolution(8, true).unwrap(),
    ]
}

fn problem(model: Model, probe_seed: u64, sample_seed: u64) -> Problem {
    let w = synth::random_probe(model.probe_side(), probe_seed);
    let u = synth::random_sample(model.image_side(), sample_seed);
    let f = intensity(&forward(&model, &w, &u).unwrap());
    Problem::new(model, f).unwrap().with_truth(Estimate { probe: w, sample: u }).unwrap()
}

fn ptycho(image: usize, probe: usize, step: usize, seed: u64) -> Problem {
    let g = ScanGeometry::jittered_grid(image, probe, step, 1, seed).unwrap();
    problem(Model::ptycho(g), seed + 1, seed + 2)
}

fn perturbed(x: &[C64], eps: f64, seed: u64) -> Vec<C64> {
    let mut rng = synth::rng(seed);
    let n = synth::complex_gaussian(&mut rng, x.len());
    let s = eps * cnorm(x) / cnorm(&n);
    x.iter().zip(&n).map(|(a, b)| a + s * b).collect()
}

fn c1_adjoints() -> Outcome {
    let start = Instant::now();
    let mut rng = synth::rng(1);
    let mut worst: f64 = 0.0;
    for model in models() {
        for _ in 0..100 {
            let w = Probe::new(model.probe_side(), synth::complex_gaussian(&mut rng, model.probe_len())).unwrap();
            let u = ComplexImage::new(model.image_side(), synth::complex_gaussian(&mut rng, model.image_len())).unwrap();
            let y = synth::complex_gaussian(&mut rng, model.measurement_len());
            let ys = ExitWaveStack::new(model.frame_len(), y.clone()).unwrap();
            let ax = forward(&model, &w, &u).unwrap();
            let lhs = dot(ax.as_slice(), &y);
            let scale = cnorm(ax.as_slice()) * cnorm(&y);
            let au = adjoint_wrt_u(&model, &w, &ys).unwrap();
            let aw = adjoint_wrt_w(&model, &u, &ys).unwrap();
            worst = worst.max((lhs - dot(u.as_slice(), au.as_slice())).norm() / scale);
            worst = worst.max((lhs - dot(w.as_slice(), aw.as_slice())).norm() / scale);
            let r: Vec<f64> = y.iter().map(|v| v.re).collect();
            for metric in [Metric::agm(), Metric::igm()] {
                for lin in [Linearization::Sample, Linearization::Probe] {
                    let n = if lin == Linearization::Sample { model.image_len() } else { model.probe_len() };
                    let v = synth::complex_gaussian(&mut rng, n);
                    let (ws, us) = (w.as_slice(), u.as_slice());
                    let jv = jacobian_apply(&metric, &model, lin, ws, us, &v).unwrap();
                    let jr = jacobian_adjoint_apply(&metric, &model, lin, ws, us, &r).unwrap();
                    let rhs = dot(&v, &jr).re;
                    worst = worst.max((rdot(&jv, &r) - rhs).abs() / (rnorm(&jv) * rnorm(&r)));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-10 && secs < 10.0, format!("worst ratio {worst:.2e}, {secs:.2} s"))
}

fn metric_for(kind: MetricKind) -> Metric {
    let eps = if kind == MetricKind::Stagm { 0.3 } else { 0.0 };
    Metric::new(kind, eps).unwrap()
}

fn c2_prox() -> Outcome {
    let start = Instant::now();
    let mut rng = synth::rng(2);
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    for kind in [MetricKind::Agm, MetricKind::Ipm, MetricKind::Igm, MetricKind::Stagm] {
        let m = metric_for(kind);
        for _ in 0..1000 {
            let v = synth::complex_gaussian(&mut rng, 1)[0] * 2.0;
            let f: f64 = rng.random_range(0.0..4.0);
            let beta = 10f64.powf(rng.random_range(-1.5..1.5));
            let p = bpr_core::metrics::prox_slice(&m, beta, &[v], &[f]).unwrap()[0];
            let obj = |z: C64| m.entry_value(z.norm(), f) + 0.5 * beta * (z - v).norm_sqr();
            // the minimizer shares the phase of v, so a grid over the modulus suffices
            let dir = if v.norm() > 0.0 { v / v.norm() } else { C64::new(1.0, 0.0) };
            let hi = 2.0 * v.norm().max(f.sqrt()).max(1e-3);
            let oracle = (0..10_000)
                .map(|i| obj(dir * (hi * i as f64 / 9_999.0)))
                .fold(f64::INFINITY, f64::min);
            let gap = obj(p) - oracle;
            worst = worst.max(gap);
            if gap > 1e-8 {
                failures += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && secs < 30.0,
        format!("{failures} of 4000 above slack, worst excess {worst:.2e}, {secs:.2} s"),
    )
}

fn c3_gradients() -> Outcome {
    let mut rng = synth::rng(3);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let n = 24;
    for kind in [MetricKind::Agm, MetricKind::Ipm, MetricKind::Igm, MetricKind::Stagm] {
        let m = metric_for(kind);
        let mut done = 0;
        while done < 50 {
            let z: Vec<C64> = synth::complex_gaussian(&mut rng, n);
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..2.0)).collect();
            if kind == MetricKind::Stagm
                && z.iter().zip(&f).any(|(a, b)| (a.norm() - m.epsilon * b.sqrt()).abs() < 1e-3)
            {
                continue;
            }
            let d = synth::complex_gaussian(&mut rng, n);
            let at = |s: f64| {
                let zs: Vec<C64> = z.iter().zip(&d).map(|(a, b)| a + s * b).collect();
                metric_value_slice(&m, &zs, &f).unwrap()
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            let g = metric_gradient_slice(&m, &z, &f).unwrap();
            let an = dot(&d, &g).re;
            worst = worst.max((fd - an).abs() / (cnorm(&g) * cnorm(&d)));
            done += 1;
        }
    }
    let model = Model::ptycho(ScanGeometry::jittered_grid(12, 6, 2, 1, 4).unwrap());
    let f: Vec<f64> = (0..model.measurement_len()).map(|_| rng.random_range(0.1..1.0)).collect();
    for metric in [Metric::agm(), Metric::igm()] {
        for k in 0..50 {
            let lin = if k % 2 == 0 { Linearization::Sample } else { Linearization::Probe };
            let w = synth::complex_gaussian(&mut rng, model.probe_len());
            let u = synth::complex_gaussian(&mut rng, model.image_len());
            let len = if lin == Linearization::Sample { u.len() } else { w.len() };
            let v = synth::complex_gaussian(&mut rng, len);
            let at = |s: f64| {
                let (mut w2, mut u2) = (w.clone(), u.clone());
                let x = if lin == Linearization::Sample { &mut u2 } else { &mut w2 };
                x.iter_mut().zip(&v).for_each(|(a, b)| *a += s * b);
                let w2 = Probe::new(model.probe_side(), w2).unwrap();
                let u2 = ComplexImage::new(model.image_side(), u2).unwrap();
                residual(&metric, forward(&model, &w2, &u2).unwrap().as_slice(), &f).unwrap()
            };
            let (rp, rm) = (at(h), at(-h));
            let fd: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            let jv = jacobian_apply(&metric, &model, lin, &w, &u, &v).unwrap();
            let diff: Vec<f64> = fd.iter().zip(&jv).map(|(a, b)| a - b).collect();
            worst = worst.max(rnorm(&diff) / rnorm(&jv));
        }
    }
    outcome(worst <= 1e-5, format!("worst relative deviation {worst:.2e}"))
}

fn c4_blind_recovery() -> Outcome {
    let g = ScanGeometry::jittered_grid(64, 16, 4, 1, 1).unwrap();
    let p = problem(Model::ptycho(g), 2, 3);
    let t = p.truth.clone().unwrap();
    let runs: [(&str, Solver, SolverConfig); 3] = [
        ("rpie", run_rpie, SolverConfig { max_iter: 500, ..Default::default() }),
        ("phebie", run_phebie, SolverConfig { max_iter: 500, ..Default::default() }),
        ("admm", run_admm, SolverConfig { max_iter: 500, beta: 0.5, ..Default::default() }),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, solver, cfg) in runs {
        let start = Instant::now();
        let r = solver(&p, &cfg).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let e = ramp_aligned_errors(&r.final_w, &t.probe, &r.final_u, &t.sample).unwrap();
        let scalar_w = aligned_relative_error(r.final_w.as_slice(), t.probe.as_slice()).unwrap();
        let scalar_u = aligned_relative_error(r.final_u.as_slice(), t.sample.as_slice()).unwrap();
        let ok = e.probe <= 1e-2 && e.sample <= 1e-2 && secs < 60.0;
        pass &= ok;
        parts.push(format!(
            "{name} {} w {:.1e} u {:.1e} (scalar {scalar_w:.1e}/{scalar_u:.1e}) {secs:.1} s",
            if ok { "ok" } else { "miss" },
            e.probe,
            e.sample
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c5_phebie_monotone() -> Outcome {
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..30 {
        let p = ptycho(16, 8, 2, 200 + seed);
        let r = run_phebie(&p, &SolverConfig { max_iter: 60, seed, ..Default::default() }).unwrap();
        for pair in r.objective_history.windows(2) {
            let rise = pair[1] - pair[0];
            worst = worst.max(rise / pair[0].max(1.0));
            if rise > 1e-12 * pair[0].max(1.0) {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("{violations} increases over 30 runs, largest relative rise {worst:.2e}"))
}

fn c6_projection_family() -> Outcome {
    let p = ptycho(16, 8, 2, 5);
    let sqrt_f = p.data.sqrt();
    let (w, u) = p.initial(2);
    let cfg = SolverConfig::default();
    let mut dr = ProjectionState::start(&p.model, &sqrt_f, w.clone(), u.clone());
    let mut raar = ProjectionState::start(&p.model, &sqrt_f, w, u);
    let mut gap: f64 = 0.0;
    for _ in 0..10 {
        dr.step(&p.model, &sqrt_f, ProjectionScheme::Dr, &cfg);
        raar.step(&p.model, &sqrt_f, ProjectionScheme::Raar(1.0), &cfg);
        gap = gap.max(rel_dist(&raar.psi, &dr.psi));
    }
    let t = p.truth.clone().unwrap();
    let feasible = Problem { init: Some(t.clone()), ..p.clone() };
    let cfg = SolverConfig { max_iter: 5, ls_reg_probe: 1e-12, ls_reg_sample: 1e-12, ..Default::default() };
    let mut drift: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, solver) in [
        ("ap", run_ap as Solver),
        ("dr", run_dr),
        ("phebie", run_phebie),
        ("admm", run_admm),
    ] {
        let r = solver(&feasible, &cfg).unwrap();
        let d = rel_dist(r.final_w.as_slice(), t.probe.as_slice()).max(rel_dist(r.final_u.as_slice(), t.sample.as_slice()));
        drift = drift.max(d);
        parts.push(format!("{name} {d:.1e}"));
    }
    outcome(
        gap <= 1e-12 && drift <= 1e-8,
        format!("raar(1) vs dr {gap:.1e}; feasible drift {}", parts.join(", ")),
    )
}

fn c7_lifted() -> Outcome {
    let start = Instant::now();
    let cfg = SolverConfig { max_iter: 3000, tol: 1e-10, beta1: 0.1, beta2: 1.0, ..Default::default() };
    let seeds = 0..10u64;
    let total = seeds.end - seeds.start;
    let mut good = Vec::new();
    for seed in seeds {
        let (inst, h, m) = random_instance(32, 3, 3, seed).unwrap();
        let sol = solve_lifted(&inst, &cfg).unwrap();
        let (rh, rm) = sol.rank_ratios();
        let eh = aligned_relative_error(&sol.h, &h).unwrap();
        let em = aligned_relative_error(&sol.m, &m).unwrap();
        if rh <= 1e-3 && rm <= 1e-3 && eh <= 1e-2 && em <= 1e-2 {
            good.push(seed);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        good.len() as u64 == total && secs < 120.0,
        format!("{}/{total} seeds recovered {good:?}, {secs:.1} s", good.len()),
    )
}

fn c8_lm() -> Outcome {
    let p = ptycho(16, 8, 2, 7);
    let t = p.truth.clone().unwrap();
    let f = p.data.as_slice().to_vec();
    let u0 = perturbed(t.sample.as_slice(), 1e-4, 1);
    let e0 = aligned_relative_error(&u0, t.sample.as_slice()).unwrap();
    let cfg = SolverConfig::default();
    let step = lm_step(
        &Metric::igm(),
        &p.model,
        Linearization::Sample,
        t.probe.as_slice(),
        &u0,
        &f,
        Damping::Levenberg(DampingRule::default()),
        cfg.cg_iters,
        cfg.cg_tol,
    )
    .unwrap();
    let e1 = aligned_relative_error(&step.x, t.sample.as_slice()).unwrap();
    let contraction = e0 / e1;
    let local = step.accepted && contraction >= 10.0;

    let start = Instant::now();
    let q = ptycho(32, 8, 2, 12);
    let t = q.truth.clone().unwrap();
    let init = Estimate {
        probe: t.probe.with_data(perturbed(t.probe.as_slice(), 0.01, 4)),
        sample: ComplexImage::new(32, perturbed(t.sample.as_slice(), 0.01, 5)).unwrap(),
    };
    let q = q.with_init(init).unwrap();
    let r = run_lm(&q, &SolverConfig { max_iter: 30, ..Default::default() }).unwrap();
    let e = ramp_aligned_errors(&r.final_w, &t.probe, &r.final_u, &t.sample).unwrap();
    let warm = r.iterations_run <= 30 && e.probe <= 1e-3 && e.sample <= 1e-3;
    outcome(
        local && warm,
        format!(
            "one step ({} CG iterations) contracts {contraction:.1}x; warm start w {:.1e} u {:.1e} in {} iterations, {:.1} s",
            cfg.cg_iters,
            e.probe,
            e.sample,
            r.iterations_run,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn c9_poisson() -> Outcome {
    let mut rng = synth::rng(9);
    let fv: Vec<f64> = (0..256).map(|_| rng.random_range(0.1..20.0)).collect();
    let f = MeasurementStack::new(16, fv.clone()).unwrap();
    let draws = 10_000;
    let mut sum = vec![0.0; fv.len()];
    for seed in 0..draws {
        let d = simulate_poisson(&f, 1.0, seed as u64).unwrap();
        sum.iter_mut().zip(d.as_slice()).for_each(|(s, v)| *s += v);
    }
    let within = sum
        .iter()
        .zip(&fv)
        .filter(|(s, f)| (*s / draws as f64 - **f).abs() <= 3.0 * (**f / draws as f64).sqrt())
        .count();
    let frac = within as f64 / fv.len() as f64;
    outcome(frac >= 0.99, format!("{within}/{} entries within 3 sigma", fv.len()))
}

fn bpr(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_bpr"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn pipeline(root: &Path) -> Option<(Vec<u8>, Vec<u8>)> {
    let s = |p: &Path| p.to_str().unwrap().to_owned();
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let (data, run, csv) = (root.join("data"), root.join("run"), root.join("table.csv"));
    let ok = bpr(&["simulate", "--config", &s(&configs.join("simulate.json")), "--seed", "17", "--out", &s(&data)])
        && bpr(&[
            "reconstruct",
            "--input",
            &s(&data),
            "--algorithm",
            "rpie",
            "--config",
            &s(&configs.join("solver.json")),
            "--seed",
            "17",
            "--out",
            &s(&run),
        ])
        && bpr(&["compare", "--truth", &s(&data), "--csv", &s(&csv), &s(&run.join("report.json"))]);
    if !ok {
        return None;
    }
    let report = fs::read(run.join("report.json")).ok()?;
    // wall time is the one column allowed to differ
    let table = fs::read_to_string(&csv).ok()?;
    let stripped: String = table.lines().map(|l| l.rsplit_once(',').map_or(l, |x| x.0)).collect::<Vec<_>>().join("\n");
    Some((report, stripped.into_bytes()))
}

fn c10_cli_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("run");
    let a = pipeline(&root);
    fs::remove_dir_all(&root).unwrap();
    let b = pipeline(&root);
    match (a, b) {
        (Some(a), Some(b)) => outcome(
            a.0 == b.0 && a.1 == b.1,
            format!("report {} bytes, identical: {}; table identical: {}", a.0.len(), a.0 == b.0, a.1 == b.1),
        ),
        _ => outcome(false, "pipeline exited with an error"),
    }
}

fn main() {
    #[allow(clippy::type_complexity)]
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("adjoint suite", c1_adjoints),
        ("prox grid oracle", c2_prox),
        ("gradients vs finite differences", c3_gradients),
        ("blind recovery 64x64", c4_blind_recovery),
        ("PHeBIE monotonicity", c5_phebie_monotone),
        ("DR/RAAR reduction and stationarity", c6_projection_family),
        ("lifted convex recovery n=32", c7_lifted),
        ("LM local contraction and warm start", c8_lm),
        ("Poisson statistics", c9_poisson),
        ("CLI determinism", c10_cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("{} C{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{}/{} criteria pass", criteria.len() - failed, criteria.len());
}
