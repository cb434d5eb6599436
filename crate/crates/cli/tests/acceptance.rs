//! One line per acceptance criterion: `criterion N: PASS|FAIL ...`.
//! Paper-scale runs are `#[ignore]`d; run them with `--ignored`. Set
//! `PAT_PAPER_OUT` to a directory holding finished paper runs
//! (`paper_sim1/metrics.csv`, `paper_sim2/metrics.csv`) to check those
//! instead of recomputing.

use pat_cli::commands;
use pat_cli::config::{ExperimentConfig, GridBlock, Layout, PhantomKind, RaysBlock};
use pat_cli::Experiment;
use pat_core::media::{
    make_damping, make_sound_speed, BoundaryAbsorption, CutoffBand, DampingKind, Grid2D, InitialSource, Medium,
    NodeMask, Rect, ScalarField2D,
};
use pat_core::operators::{full_robin, TrKind};
use pat_core::rays::{
    dist_to_gamma, reflection_coefficient, symbol_p, symbol_q, t0, trace, visibility_times, GridSpeed, RayBoundary,
    RayEnd, RayState, Sampling, TraceOptions, Uniform,
};
use pat_core::record::RecordNode;
use pat_core::wavesolver::{boundary_flux, energy_fields, run, BoundarySpec, EdgeCondition, RunSpec, SolverConfig};
use proptest::prelude::*;
use proptest::test_runner::{Config as PtConfig, TestRunner};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(n: &str, pass: bool, detail: String) -> bool {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&configs().join(name)).unwrap()
}

struct Errors {
    bp: (f64, f64),
    nm: (f64, f64),
}

fn read_metrics(path: &Path) -> Errors {
    let text = std::fs::read_to_string(path).unwrap();
    let row = |name: &str| {
        let line = text.lines().find(|l| l.starts_with(&format!("{name},"))).unwrap();
        let v: Vec<f64> = line.split(',').skip(1).map(|s| s.parse().unwrap()).collect();
        (v[0], v[1])
    };
    Errors { bp: row("back_projection"), nm: row("neumann") }
}

/// Simulate and reconstruct into `out`; returns the errors and wall time.
fn pipeline(cfg: &ExperimentConfig, out: &Path) -> (Errors, f64) {
    let start = Instant::now();
    commands::simulate(cfg, out).unwrap();
    commands::reconstruct(cfg, &out.join("data.patr"), Some(&out.join("truth.patf")), out, None).unwrap();
    (read_metrics(&out.join("metrics.csv")), start.elapsed().as_secs_f64())
}

fn paper_run(name: &str, stem: &str) -> Errors {
    if let Ok(dir) = std::env::var("PAT_PAPER_OUT") {
        let m = Path::new(&dir).join(stem).join("metrics.csv");
        if m.exists() {
            return read_metrics(&m);
        }
    }
    let dir = tempfile::tempdir().unwrap();
    pipeline(&load(name), dir.path()).0
}

fn within(v: f64, centre: f64, half: f64) -> bool {
    (v - centre).abs() <= half
}

#[test]
fn criterion_1_desk() {
    let _g = serial();
    let dir = tempfile::tempdir().unwrap();
    let (e, secs) = pipeline(&load("desk_sim1.toml"), dir.path());
    let pass = e.nm.0 < e.bp.0 && secs < 120.0;
    let detail = format!(
        "(201² desk) neumann relL2 {:.4} < back-projection {:.4}, {secs:.1} s < 120 s",
        e.nm.0, e.bp.0
    );
    assert!(report("1 desk", pass, detail));
}

#[test]
#[ignore = "paper scale, tens of minutes"]
fn criterion_1_paper() {
    let _g = serial();
    let e = paper_run("paper_sim1.toml", "paper_sim1");
    let pass = within(e.nm.0, 0.09, 0.10)
        && within(e.nm.1, 0.26, 0.15)
        && within(e.bp.0, 0.40, 0.15)
        && within(e.bp.1, 0.53, 0.15)
        && e.nm.0 < e.bp.0;
    let detail = format!(
        "(601²) neumann {:.4}/{:.4} in 0.09±0.10/0.26±0.15, back-projection {:.4}/{:.4} in 0.40±0.15/0.53±0.15",
        e.nm.0, e.nm.1, e.bp.0, e.bp.1
    );
    assert!(report("1 paper", pass, detail));
}

#[test]
fn criterion_2_desk() {
    let _g = serial();
    let dir = tempfile::tempdir().unwrap();
    let (e, secs) = pipeline(&load("desk_sim2.toml"), dir.path());
    let pass = e.nm.0 < e.bp.0;
    let detail = format!("(201² desk) neumann relL2 {:.4} < back-projection {:.4} ({secs:.1} s)", e.nm.0, e.bp.0);
    assert!(report("2 desk", pass, detail));
}

#[test]
#[ignore = "paper scale, over an hour"]
fn criterion_2_paper() {
    let _g = serial();
    let e = paper_run("paper_sim2.toml", "paper_sim2");
    let pass = within(e.nm.0, 0.20, 0.10) && within(e.bp.0, 0.32, 0.10) && e.nm.0 < e.bp.0;
    let detail = format!("(601²) neumann relL2 {:.4} in 0.20±0.10, back-projection {:.4} in 0.32±0.10", e.nm.0, e.bp.0);
    assert!(report("2 paper", pass, detail));
}

fn paper_medium(g: Grid2D, kind: DampingKind) -> Medium {
    let dom = Rect::centered_square(1.0);
    let c = make_sound_speed(g, &dom, CutoffBand::default()).unwrap();
    let a = make_damping(g, kind, &c, &dom, CutoffBand::default()).unwrap();
    Medium::new(c, a, 0.5).unwrap()
}

fn gaussian(g: Grid2D, x0: f64, y0: f64, w: f64) -> ScalarField2D {
    ScalarField2D::from_fn(g, |x, y| (-((x - x0).powi(2) + (y - y0).powi(2)) / (w * w)).exp())
}

fn at_rest(f1: ScalarField2D) -> InitialSource {
    let g = *f1.grid();
    InitialSource::new(f1, ScalarField2D::zeros(g), g.bounds()).unwrap()
}

/// Robin on bottom, right and top with tapered λ; the left side is a wall.
fn walled_three_sided(g: Grid2D) -> BoundarySpec {
    let lam = BoundaryAbsorption::three_sided(g, &Rect::centered_square(1.0), 1.0, 0.1, 1.0).unwrap();
    BoundarySpec::new([EdgeCondition::Neumann, EdgeCondition::Robin, EdgeCondition::Robin, EdgeCondition::Robin], lam)
        .unwrap()
}

fn gamma_nodes(bc: &BoundarySpec) -> Vec<RecordNode> {
    bc.gamma().iter().map(|n| RecordNode { x: n.x, y: n.y, weight: n.weight, lambda: n.lambda }).collect()
}

#[test]
fn criterion_3_energy_identity() {
    let _g = serial();
    let g = Grid2D::centered(201, 0.01).unwrap();
    let m = paper_medium(g, DampingKind::Linear);
    let bc = walled_three_sided(g);
    let cfg = SolverConfig::new(&g, &m.c, 2, 0.3, 2.0).unwrap();
    let region = NodeMask::all(g);
    let nodes = gamma_nodes(&bc);
    let mut spec = RunSpec::forward();
    spec.energy_region = Some(&region);
    spec.record_on = Some(&nodes);
    let f = at_rest(gaussian(g, 0.1, 0.2, 0.12));
    let out = run(&f, &m, &bc, &cfg, &spec).unwrap();
    let e0 = energy_fields(&f.f1, &f.f2, &m.c, &region);
    let ext_t = *out.energy.unwrap().extended().last().unwrap();
    let flux = boundary_flux(out.record.as_ref().unwrap(), &bc.lambda).unwrap();
    let literal = (e0 - (ext_t + flux)).abs() / e0;
    let doubled = (e0 - (ext_t + 2.0 * flux)).abs() / e0;
    println!("criterion 3 companion: with 2∫λ|u_t|² the defect is {doubled:.2e} (< 2%: {})", doubled < 0.02);
    let detail = format!("defect {literal:.4} < 0.02 (E0 {e0:.4}, ℰ_T {ext_t:.4}, ∫λ|u_t|² {flux:.4})");
    assert!(report("3", literal < 0.02, detail));
}

#[test]
fn criterion_4_energy_monotonicity() {
    let _g = serial();
    let g = Grid2D::centered(101, 0.02).unwrap();
    let region = NodeMask::all(g);
    let f = at_rest(gaussian(g, 0.2, -0.1, 0.12));
    let mut worst_rise: f64 = 0.0;
    let mut runs = 0;
    let layouts = [walled_three_sided(g), full_robin(g, 1.0).unwrap()];
    for bc in &layouts {
        for kind in [DampingKind::None, DampingKind::Linear, DampingKind::SpeedProportional] {
            for order in [2u8, 4] {
                let m = paper_medium(g, kind);
                let cfg = SolverConfig::new(&g, &m.c, order, 0.3, 2.5).unwrap();
                let mut spec = RunSpec::forward();
                spec.energy_region = Some(&region);
                let ext = run(&f, &m, bc, &cfg, &spec).unwrap().energy.unwrap().extended();
                for w in ext.windows(2) {
                    worst_rise = worst_rise.max((w[1] - w[0]) / ext[0]);
                }
                runs += 1;
            }
        }
    }
    let mut drift: f64 = 0.0;
    for kind in [DampingKind::None, DampingKind::Linear] {
        let m = paper_medium(g, kind);
        let cfg = SolverConfig::new(&g, &m.c, 2, 0.3, 2.5).unwrap();
        let mut spec = RunSpec::forward();
        spec.energy_region = Some(&region);
        let ext = run(&f, &m, &BoundarySpec::closed(g), &cfg, &spec).unwrap().energy.unwrap().extended();
        drift = drift.max(ext.iter().map(|v| (v - ext[0]).abs()).fold(0.0, f64::max) / ext[0]);
    }
    let pass = worst_rise <= 0.005 && drift < 0.001;
    let detail = format!("largest step rise {worst_rise:.2e} ≤ 0.005 over {runs} Robin runs, closed-box drift {drift:.2e} < 0.001");
    assert!(report("4", pass, detail));
}

fn visible_config(damping: DampingKind, phantom: PhantomKind) -> ExperimentConfig {
    let mut cfg = load("desk_full.toml");
    cfg.grid = GridBlock { nx: 101, ny: 101, dx: 0.02 };
    cfg.medium.damping = damping;
    cfg.boundary.pml_delta = 0.2;
    cfg.boundary.data_delta = 0.2;
    cfg.source.phantom = phantom;
    cfg.source.sigma = 0.03;
    cfg.source.omega0 = 0.9;
    cfg.solver.order = 2;
    cfg.solver.t_final = None;
    cfg.rays = RaysBlock { n_space: 16, n_angles: 64, step: 0.01, horizon: 8.0 };
    cfg.validate().unwrap();
    cfg
}

/// `‖K^(m+1)f‖/‖K^m f‖` for `m = 0..=10`, starting from `Πf`.
fn power_ratios(model: &pat_core::operators::Model, f: &InitialSource) -> Vec<f64> {
    let mut f = model.project(f).unwrap();
    let mut norm = model.h_norm(&f);
    let mut ratios = Vec::new();
    for _ in 0..=10 {
        let k = model.error_op(&f, TrKind::Dissipative).unwrap();
        let next = model.h_norm(&k);
        ratios.push(next / norm);
        f = k;
        norm = next;
    }
    ratios
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

#[test]
fn criterion_5_contraction() {
    let _g = serial();
    let mut pass = true;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    let mut first = Vec::new();
    for damping in [DampingKind::None, DampingKind::Linear] {
        let base = Experiment::build(&visible_config(damping, PhantomKind::SheppLogan)).unwrap();
        assert_eq!(base.config.boundary.layout, Layout::Full);
        let rep = base.visibility().unwrap();
        let t = base.t_final().unwrap();
        let certified = rep.offenders.is_empty() && rep.visible(t);
        pass &= certified;
        let model = base.recon_model(base.solver_config(t).unwrap()).unwrap();
        let two = Experiment::build(&visible_config(damping, PhantomKind::TwoSheppLogan)).unwrap().truth;
        let blob = gaussian(base.domain, -0.3, 0.35, 0.15).masked_to(&base.omega0);
        let blob = InitialSource::pat(&blob, &base.medium.a, base.omega0).unwrap();
        for (name, f) in [("shepp_logan", &base.truth), ("two_shepp_logan", &two), ("gaussian", &blob)] {
            let ratios = power_ratios(&model, f);
            let max = max_of(&ratios);
            worst = worst.max(max);
            pass &= max < 1.0;
            parts.push(format!("{damping:?}/{name} {max:.4}"));
            first.push(format!("{damping:?}/{name} {:.3}", ratios[0]));
        }
        parts.push(format!("{damping:?}: T = {t:.3} > T1 = {:.3}, certified {certified}", rep.t1));
    }
    println!("criterion 5 companion: first-step ‖Kf‖/‖f‖ {}", first.join(", "));
    let detail = format!("worst ‖K^(m+1)f‖/‖K^m f‖ over m ≤ 10 is {worst:.4} < 1 [{}]", parts.join("; "));
    assert!(report("5", pass, detail));
}

#[test]
fn criterion_6_reversal_kinds_without_damping() {
    let _g = serial();
    let mut cfg = load("desk_sim1.toml");
    cfg.grid = GridBlock { nx: 101, ny: 101, dx: 0.02 };
    cfg.medium.damping = DampingKind::None;
    cfg.boundary.pml_delta = 0.2;
    cfg.boundary.data_delta = 0.2;
    cfg.source.sigma = 0.03;
    cfg.source.omega0 = 0.9;
    cfg.solver.order = 2;
    let exp = Experiment::build(&cfg).unwrap();
    let model = exp.recon_model(exp.solver_config(exp.t_final().unwrap()).unwrap()).unwrap();
    let h = model.observe(&exp.truth).unwrap();
    let rel = |a: &InitialSource, b: &InitialSource| {
        let d = a.f1.sub(&b.f1).unwrap().max_abs().max(a.f2.sub(&b.f2).unwrap().max_abs());
        d / b.f1.max_abs().max(b.f2.max_abs())
    };
    let s = model.time_reverse(&h, TrKind::Standard).unwrap();
    let d = model.time_reverse(&h, TrKind::Dissipative).unwrap();
    let tr = rel(&s, &d);
    let ks = model.error_op(&exp.truth, TrKind::Standard).unwrap();
    let kd = model.error_op(&exp.truth, TrKind::Dissipative).unwrap();
    let k = rel(&ks, &kd);
    let detail = format!("relative max difference {tr:.1e} (reversal), {k:.1e} (error operator) ≤ 1e-12");
    assert!(report("6", tr <= 1e-12 && k <= 1e-12, detail));
}

#[test]
fn criterion_7_symbols() {
    let _g = serial();
    let tuple = (0.2f64..5.0, prop_oneof![Just(0.0), 1e-6f64..20.0], -20.0f64..-1e-3, 0.0f64..0.999);
    let mut runner = TestRunner::new(PtConfig { cases: 100_000, failure_persistence: None, ..PtConfig::default() });
    let sweep = runner.run(&tuple, |(c, lambda, tau, frac)| {
        let eta = frac * (-tau) / c;
        let r = reflection_coefficient(c, lambda, tau, eta).unwrap();
        prop_assert!(r > -1.0 && r <= 1.0);
        prop_assert_eq!(r == 1.0, lambda == 0.0);
        prop_assert!(symbol_p(c, lambda, tau, eta).unwrap() > 0.0);
        prop_assert!(symbol_q(c, lambda, tau, eta).unwrap() >= 0.0);
        Ok(())
    });
    let points = [
        (reflection_coefficient(1.0, 1.0, -1.0, 0.0).unwrap(), 0.0),
        (reflection_coefficient(1.0, 0.5, -1.0, 0.0).unwrap(), 1.0 / 3.0),
        (symbol_q(1.0, 1.0, -1.0, 0.0).unwrap(), 0.5),
        (symbol_q(1.0, 1.0, -1.0, 0.6).unwrap(), 1.0 / 1.8),
        (symbol_p(1.0, 0.0, -1.0, 0.3).unwrap(), 2.0),
        (reflection_coefficient(1.3, 0.0, -2.0, 0.7).unwrap(), 1.0),
    ];
    let worst = points.iter().map(|(got, want)| (got - want).abs()).fold(0.0, f64::max);
    let pass = sweep.is_ok() && worst <= 1e-12;
    let detail = format!("10⁵ admissible tuples {}, point values max error {worst:.1e} ≤ 1e-12", match &sweep {
        Ok(()) => "ok".to_string(),
        Err(e) => format!("failed: {e}"),
    });
    assert!(report("7", pass, detail));
}

#[test]
fn criterion_8_rays() {
    let _g = serial();
    let square = Rect::centered_square(1.0);
    let full = RayBoundary::uniform(square, [Some(1.0); 4]);
    let opts = |t_max| TraceOptions { t_max, step: 1e-3, stop_at_gamma: false, keep_path: true };

    let s = Uniform(1.0);
    let theta: f64 = 0.7;
    let ray = trace(RayState::launch(&s, -0.3, -0.2, theta), &s, &full, opts(0.5)).unwrap();
    let mut straight: f64 = 0.0;
    for &(t, x, y, _) in &ray.samples {
        straight = straight.max((x - (-0.3 + t * theta.cos())).hypot(y - (-0.2 + t * theta.sin())));
    }
    let straight_ok = ray.end == RayEnd::TimeUp && straight < 1e-8;

    let mirrors = RayBoundary::uniform(square, [Some(0.0); 4]);
    let ray = trace(RayState::launch(&s, 0.0, 0.2, 1.1), &s, &mirrors, opts(1.2)).unwrap();
    let ev = ray.events[0];
    let inc = ev.incident.1.atan2(ev.incident.0);
    let refl = (-ev.reflected.1).atan2(ev.reflected.0);
    let mirror = (inc - refl).abs().max((ev.x - 0.8 / 1.1f64.tan()).abs());
    let mirror_ok = mirror < 1e-8;

    // fast marching against Euclidean distance
    let g = Grid2D::centered(101, 0.02).unwrap();
    let one = ScalarField2D::constant(g, 1.0);
    let mut fmm: f64 = 0.0;
    for (x, y) in [(0.0, 0.0), (0.3, -0.7), (-0.85, 0.85), (0.51, 0.13), (-0.9667, 0.0)] {
        let d = dist_to_gamma(x, y, &one, &full).unwrap();
        fmm = fmm.max((d - (1.0 - x.abs()).min(1.0 - y.abs())).abs());
    }
    let fmm_ok = fmm <= 2.0 * g.dx;

    // T1 ≥ T0 and stability under doubled angular sampling
    let om = Rect::centered_square(0.9667);
    let paper = make_sound_speed(g, &square, CutoffBand::default()).unwrap();
    let paper_full = RayBoundary::from_spec(&full_robin(g, 1.0).unwrap(), square);
    let three = Experiment::build(&load("desk_sim1.toml")).unwrap().ray_boundary().unwrap();
    let coarse = Sampling { n_space: 16, n_angles: 64, step: 0.01, horizon: 8.0 };
    let fine = Sampling { n_angles: 128, ..coarse };
    let mut ordered = true;
    let mut stable = true;
    let mut parts = Vec::new();
    let cases: [(&str, &ScalarField2D, &RayBoundary, bool); 3] =
        [("uniform/full", &one, &full, false), ("paper/full", &paper, &paper_full, true), ("paper/three_sided", &paper, &three, true)];
    for (name, c, b, variable) in cases {
        let speed = GridSpeed::new(c.clone());
        let (r1, r2) = if variable {
            (visibility_times(&speed, c, &om, b, &coarse).unwrap(), visibility_times(&speed, c, &om, b, &fine).unwrap())
        } else {
            (visibility_times(&s, c, &om, b, &coarse).unwrap(), visibility_times(&s, c, &om, b, &fine).unwrap())
        };
        ordered &= r1.t1 >= r1.t0 && r2.t1 >= r2.t0;
        let same = if r2.t1.is_finite() { (r2.t1 - r1.t1).abs() / r2.t1 < 0.02 } else { r1.t1.is_infinite() };
        stable &= same;
        parts.push(format!("{name}: T0 {:.4}, T1 {:.4} → {:.4}, offenders {}", r1.t0, r1.t1, r2.t1, r2.offenders.len()));
    }
    let t0_full = t0(&one, &om, &full).unwrap();
    ordered &= t0_full > 0.0;

    let pass = straight_ok && mirror_ok && fmm_ok && ordered && stable;
    let detail = format!(
        "line {straight:.1e}, mirror {mirror:.1e} < 1e-8; FMM {fmm:.4} ≤ {:.2}; T1 ≥ T0 {ordered}; 2% stable {stable} [{}]",
        2.0 * g.dx,
        parts.join("; ")
    );
    assert!(report("8", pass, detail));
}

/// Error after `steps` leapfrog steps against the exact standing mode; the
/// amplitude follows the discrete time recursion so only spatial error remains.
fn standing_mode_error(n: usize, order: u8, dt: f64, steps: usize) -> f64 {
    let g = Grid2D::centered(n, 2.0 / (n - 1) as f64).unwrap();
    let m = Medium::uniform(g, 1.0, 0.0).unwrap();
    let cfg = SolverConfig::with_dt(order, dt, steps, 0.3);
    let f = ScalarField2D::from_fn(g, |x, y| (PI * x).cos() * (PI * y).cos());
    let out = run(&at_rest(f.clone()), &m, &BoundarySpec::closed(g), &cfg, &RunSpec::forward()).unwrap();
    let mu = 2.0 * PI * PI;
    let (mut prev, mut cur) = (1.0 - 0.5 * dt * dt * mu, 1.0);
    for _ in 0..steps {
        let next = 2.0 * cur - prev - dt * dt * mu * cur;
        prev = cur;
        cur = next;
    }
    out.u_end.values().iter().zip(f.values()).map(|(u, s)| (u - cur * s).abs()).fold(0.0, f64::max)
}

#[test]
fn criterion_9_convergence_orders() {
    let _g = serial();
    let dt = 0.3 * 0.0125 / 2f64.sqrt();
    let steps = (1.0 / dt).round() as usize;
    let mut pass = true;
    let mut parts = Vec::new();
    for (order, lo, hi) in [(2u8, 3.0, 6.0), (4u8, 8.0, 32.0)] {
        let errs: Vec<f64> = [21, 41, 81].iter().map(|&n| standing_mode_error(n, order, dt, steps)).collect();
        let rates: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
        pass &= rates.iter().all(|r| (lo..=hi).contains(r));
        parts.push(format!("order {order}: {:.2}, {:.2} in [{lo}, {hi}]", rates[0], rates[1]));
    }
    assert!(report("9", pass, parts.join("; ")));
}
