use nalgebra::{DMatrix, DVector};
use pat_core::media::{Edge, Grid2D, InitialSource, Medium, NodeMask, Rect, ScalarField2D};
use pat_core::operators::{
    dirichlet_projection, enlarge, extend_medium, full_robin, harmonic_extension, h_norm, interior_mask, CgOptions,
    Model, TrKind,
};
use pat_core::wavesolver::{energy_fields, BoundarySpec, EdgeCondition, SolverConfig};

fn tight() -> CgOptions {
    CgOptions { tol: 1e-12, max_iter: 50_000 }
}

fn bump(g: Grid2D, x0: f64, y0: f64, r: f64) -> ScalarField2D {
    ScalarField2D::from_fn(g, |x, y| {
        let s = ((x - x0).powi(2) + (y - y0).powi(2)) / (r * r);
        if s < 1.0 {
            (1.0 - s).powi(4)
        } else {
            0.0
        }
    })
}

/// Dense solve of `−Δ_h x = b` on the masked nodes, zero Dirichlet data elsewhere.
fn dense_dirichlet(g: &Grid2D, mask: &[bool], rhs: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let ids: Vec<usize> = (0..g.len()).filter(|k| mask[*k]).collect();
    let pos = |k: usize| ids.iter().position(|q| *q == k);
    let n = ids.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    let (ix2, iy2) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
    for (r, &k) in ids.iter().enumerate() {
        let (i, j) = (k % g.nx, k / g.nx);
        a[(r, r)] = 2.0 * ix2 + 2.0 * iy2;
        for (nb, w) in [(k - 1, ix2), (k + 1, ix2), (k - g.nx, iy2), (k + g.nx, iy2)] {
            if let Some(c) = pos(nb) {
                a[(r, c)] = -w;
            }
        }
        b[r] = rhs(i, j);
    }
    let x = a.lu().solve(&b).expect("nonsingular");
    let mut out = vec![0.0; g.len()];
    for (r, &k) in ids.iter().enumerate() {
        out[k] = x[r];
    }
    out
}

#[test]
fn harmonic_extension_reproduces_discrete_harmonics() {
    let g = Grid2D::centered(33, 1.0 / 16.0).unwrap();
    for f in [
        ScalarField2D::constant(g, 2.5),
        ScalarField2D::from_fn(g, |x, _| x),
        ScalarField2D::from_fn(g, |x, y| x * x - y * y),
    ] {
        let phi = harmonic_extension(&f, tight()).unwrap();
        let err = phi.sub(&f).unwrap().max_abs();
        assert!(err < 1e-9, "error {err}");
    }
}

#[test]
fn harmonic_extension_matches_dense_solve() {
    let g = Grid2D::centered(21, 0.1).unwrap();
    let data = ScalarField2D::from_fn(g, |x, y| x.exp() * (2.0 * y).cos() + x * x * x);
    let phi = harmonic_extension(&data, tight()).unwrap();
    let mask: Vec<bool> = (0..g.len()).map(|k| !g.on_perimeter(k % g.nx, k / g.nx)).collect();
    // move the boundary values to the right-hand side
    let (ix2, iy2) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
    let rhs = |i: usize, j: usize| {
        let mut s = 0.0;
        if g.on_perimeter(i - 1, j) {
            s += ix2 * data.at(i - 1, j);
        }
        if g.on_perimeter(i + 1, j) {
            s += ix2 * data.at(i + 1, j);
        }
        if g.on_perimeter(i, j - 1) {
            s += iy2 * data.at(i, j - 1);
        }
        if g.on_perimeter(i, j + 1) {
            s += iy2 * data.at(i, j + 1);
        }
        s
    };
    let want = dense_dirichlet(&g, &mask, rhs);
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            let d = (phi.at(i, j) - want[g.idx(i, j)]).abs();
            assert!(d < 1e-9, "({i}, {j}): {d}");
        }
    }
    let zero = harmonic_extension(&ScalarField2D::zeros(g), tight()).unwrap();
    assert_eq!(zero.max_abs(), 0.0);
}

#[test]
fn projection_keeps_fields_vanishing_off_the_box() {
    let g = Grid2D::centered(41, 0.05).unwrap();
    let om = Rect::centered_square(0.6);
    let f = bump(g, 0.1, -0.05, 0.4);
    let p = dirichlet_projection(&f, &om, tight()).unwrap();
    assert!(p.sub(&f).unwrap().max_abs() < 1e-9);
}

#[test]
fn projection_kills_harmonic_fields() {
    let g = Grid2D::centered(41, 0.05).unwrap();
    let om = Rect::centered_square(0.6);
    let f = ScalarField2D::from_fn(g, |x, y| 1.0 + 2.0 * x - y + x * x - y * y + x * y);
    let p = dirichlet_projection(&f, &om, tight()).unwrap();
    assert!(p.max_abs() < 1e-8 * f.max_abs(), "{}", p.max_abs());
}

#[test]
fn projection_matches_dense_solve() {
    let g = Grid2D::centered(31, 1.0 / 15.0).unwrap();
    let om = Rect::new(-0.55, 0.7, -0.6, 0.45);
    let f = ScalarField2D::from_fn(g, |x, y| (3.0 * x).sin() * (y + 0.3).exp() + x * y * y);
    let p = dirichlet_projection(&f, &om, tight()).unwrap();
    let mask = interior_mask(g, &om);
    let lap = |i: usize, j: usize| {
        (f.at(i - 1, j) - 2.0 * f.at(i, j) + f.at(i + 1, j)) / (g.dx * g.dx)
            + (f.at(i, j - 1) - 2.0 * f.at(i, j) + f.at(i, j + 1)) / (g.dy * g.dy)
    };
    let want = dense_dirichlet(&g, &mask, |i, j| -lap(i, j));
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for k in 0..g.len() {
        assert!((p.values()[k] - want[k]).abs() < 1e-9 * scale);
        if !mask[k] {
            assert_eq!(p.values()[k], 0.0);
        }
    }
}

#[test]
fn projection_is_idempotent_and_non_expanding() {
    let g = Grid2D::centered(41, 0.05).unwrap();
    let om = Rect::centered_square(0.7);
    let f = ScalarField2D::from_fn(g, |x, y| (2.0 * x + y).cos() + 0.3 * x);
    let p = dirichlet_projection(&f, &om, tight()).unwrap();
    let pp = dirichlet_projection(&p, &om, tight()).unwrap();
    assert!(pp.sub(&p).unwrap().max_abs() < 1e-9);
    let all = NodeMask::all(g);
    let zero = ScalarField2D::zeros(g);
    assert!(energy_fields(&p, &zero, &zero.map(|_| 1.0), &all) <= energy_fields(&f, &zero, &zero.map(|_| 1.0), &all));
}

// small full-boundary Robin setup with a smooth damping bump
fn robin_model(a_peak: f64, t_final: f64) -> Model {
    let g = Grid2D::centered(61, 1.0 / 30.0).unwrap();
    let c = ScalarField2D::constant(g, 1.0);
    let a = bump(g, 0.0, 0.0, 0.7).scaled(a_peak);
    let m = Medium::new(c, a, 0.5).unwrap();
    let bc = full_robin(g, 1.0).unwrap();
    let cfg = SolverConfig::new(&g, &m.c, 2, 0.3, t_final).unwrap();
    Model::robin(g, Rect::centered_square(0.7), m, bc, cfg).unwrap()
}

fn pat_source(model: &Model, f: ScalarField2D) -> InitialSource {
    InitialSource::pat(&f, &model.domain_medium.a, model.omega0).unwrap()
}

fn rel_max(a: &InitialSource, b: &InitialSource) -> f64 {
    let d = a.f1.sub(&b.f1).unwrap().max_abs().max(a.f2.sub(&b.f2).unwrap().max_abs());
    d / b.f1.max_abs().max(b.f2.max_abs()).max(1e-300)
}

#[test]
fn zero_source_gives_zero_record_and_zero_reversal() {
    let model = robin_model(0.5, 1.0);
    let f = InitialSource::zero(model.domain, model.omega0);
    let h = model.observe(&f).unwrap();
    assert_eq!(h.max_abs(), 0.0);
    for kind in [TrKind::Standard, TrKind::Dissipative] {
        let v = model.time_reverse(&h, kind).unwrap();
        assert_eq!(v.f1.max_abs() + v.f2.max_abs(), 0.0);
    }
    let k = model.error_op(&f, TrKind::Dissipative).unwrap();
    assert_eq!(k.f1.max_abs(), 0.0);
}

#[test]
fn observation_is_symmetric_under_reflection() {
    let model = robin_model(0.5, 1.5);
    let f = pat_source(&model, bump(model.domain, 0.15, 0.0, 0.3));
    let h = model.observe(&f).unwrap();
    let scale = h.max_abs();
    assert!(scale > 0.0);
    for (m, n) in model.nodes.iter().enumerate() {
        let partner = model.nodes.iter().position(|q| (q.x - n.x).abs() < 1e-9 && (q.y + n.y).abs() < 1e-9).unwrap();
        for k in 0..h.n_samples() {
            assert!((h.get(k, m) - h.get(k, partner)).abs() <= 1e-10 * scale);
        }
    }
}

#[test]
fn operators_are_linear() {
    let mut model = robin_model(0.8, 1.5);
    // linearity of Π holds only to the Poisson tolerance
    model.cg = CgOptions { tol: 1e-13, max_iter: 50_000 };
    let f = pat_source(&model, bump(model.domain, 0.1, -0.1, 0.3));
    let g = pat_source(&model, bump(model.domain, -0.15, 0.1, 0.2).scaled(-0.7));
    let sum = f.add(&g).unwrap();
    let (hf, hg, hs) = (model.observe(&f).unwrap(), model.observe(&g).unwrap(), model.observe(&sum).unwrap());
    let scale = hs.max_abs();
    for k in 0..hs.n_samples() {
        for m in 0..hs.n_nodes() {
            assert!((hf.get(k, m) + hg.get(k, m) - hs.get(k, m)).abs() <= 1e-10 * scale);
        }
    }
    let h2 = model.observe(&f.scaled(2.0)).unwrap();
    for k in 0..hf.n_samples() {
        for m in 0..hf.n_nodes() {
            assert_eq!(h2.get(k, m), 2.0 * hf.get(k, m));
        }
    }
    let kf = model.error_op(&f, TrKind::Dissipative).unwrap();
    let kg = model.error_op(&g, TrKind::Dissipative).unwrap();
    let ks = model.error_op(&sum, TrKind::Dissipative).unwrap();
    let additive = rel_max(&kf.add(&kg).unwrap(), &ks);
    assert!(additive < 1e-10, "{additive}");
    let k3 = model.error_op(&f.scaled(-3.0), TrKind::Dissipative).unwrap();
    let homogeneous = rel_max(&kf.scaled(-3.0), &k3);
    assert!(homogeneous < 1e-10, "{homogeneous}");
}

#[test]
fn reversal_kinds_coincide_without_damping() {
    let model = robin_model(0.0, 1.5);
    let f = pat_source(&model, bump(model.domain, 0.1, 0.2, 0.3));
    let h = model.observe(&f).unwrap();
    let s = model.time_reverse(&h, TrKind::Standard).unwrap();
    let d = model.time_reverse(&h, TrKind::Dissipative).unwrap();
    assert!(rel_max(&s, &d) <= 1e-12);
}

#[test]
fn h_norm_of_velocity_only_source_is_l2_norm() {
    let model = robin_model(0.0, 0.5);
    let g = model.domain;
    let f2 = bump(g, 0.0, 0.0, 0.3);
    let f = InitialSource::new(ScalarField2D::zeros(g), f2.clone(), model.omega0).unwrap();
    let l2 = f2.map(|v| v * v).integral().sqrt();
    assert!((model.h_norm(&f) - l2).abs() < 1e-14 * l2);
    assert_eq!(model.h_norm(&InitialSource::zero(g, model.omega0)), 0.0);
}

#[test]
fn error_operator_contracts_with_full_robin_boundary() {
    let model = robin_model(0.0, 3.0);
    for (x0, y0, r) in [(0.0, 0.0, 0.4), (0.2, -0.1, 0.2), (-0.25, 0.2, 0.3)] {
        let f = pat_source(&model, bump(model.domain, x0, y0, r));
        let f = model.project(&f).unwrap();
        let kf = model.error_op(&f, TrKind::Dissipative).unwrap();
        let ratio = model.h_norm(&kf) / model.h_norm(&f);
        assert!(ratio < 1.0, "ratio {ratio}");
    }
}

/// 5-point Laplacian with ghost nodes carrying Neumann data `g` on each edge.
fn neumann_laplacian(g: &Grid2D, u: &[f64], gdata: &dyn Fn(usize, usize, Edge) -> f64) -> Vec<f64> {
    let (nx, ny) = (g.nx, g.ny);
    let mut out = vec![0.0; g.len()];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let xx = if i == 0 {
                (2.0 * u[k + 1] - 2.0 * u[k]) / (g.dx * g.dx) + 2.0 * gdata(i, j, Edge::Left) / g.dx
            } else if i + 1 == nx {
                (2.0 * u[k - 1] - 2.0 * u[k]) / (g.dx * g.dx) + 2.0 * gdata(i, j, Edge::Right) / g.dx
            } else {
                (u[k - 1] - 2.0 * u[k] + u[k + 1]) / (g.dx * g.dx)
            };
            let yy = if j == 0 {
                (2.0 * u[k + nx] - 2.0 * u[k]) / (g.dy * g.dy) + 2.0 * gdata(i, j, Edge::Bottom) / g.dy
            } else if j + 1 == ny {
                (2.0 * u[k - nx] - 2.0 * u[k]) / (g.dy * g.dy) + 2.0 * gdata(i, j, Edge::Top) / g.dy
            } else {
                (u[k - nx] - 2.0 * u[k] + u[k + nx]) / (g.dy * g.dy)
            };
            out[k] = xx + yy;
        }
    }
    out
}

#[test]
fn error_operator_is_bounded_by_error_system_energy() {
    let model = robin_model(1.5, 2.0);
    let g = model.domain;
    let dt = model.cfg.dt;
    let n = model.cfg.n_steps();
    let f = model.project(&pat_source(&model, bump(g, 0.1, 0.0, 0.45))).unwrap();

    let fwd = model.forward(&f, 1).unwrap();
    let h = fwd.record.clone().unwrap();
    let u: Vec<Vec<f64>> = fwd.snapshots.iter().map(|(_, _, s)| s.values().to_vec()).collect();
    let back = model.time_reverse_run(&h, TrKind::Dissipative, 1).unwrap();
    let mut v: Vec<Vec<f64>> = vec![Vec::new(); n + 1];
    for (step, _, s) in &back.snapshots {
        v[n - step] = s.values().to_vec();
    }
    let dh = model.apply_window(&h).unwrap().time_derivative().unwrap();
    let locate = dh.locate_on(&g).unwrap();
    let node_of = |i: usize, j: usize| locate.iter().position(|p| *p == (i, j));
    let a = model.domain_medium.a.values().to_vec();

    // w = u − v stepped backward with source −a(u_t + v_t)
    let mut w_next: Vec<f64> = u[n].iter().zip(&v[n]).map(|(p, q)| p - q).collect();
    let mut w: Vec<f64> = u[n - 1].iter().zip(&v[n - 1]).map(|(p, q)| p - q).collect();
    let mut levels = vec![w_next.clone(), w.clone()];
    for m in (1..n).rev() {
        let ut = |k: usize| (u[m + 1][k] - u[m - 1][k]) / (2.0 * dt);
        let vt = |k: usize| (v[m + 1][k] - v[m - 1][k]) / (2.0 * dt);
        let gdata = |i: usize, j: usize, _e: Edge| {
            let k = g.idx(i, j);
            let drive = node_of(i, j).map_or(0.0, |q| dh.get(m, q));
            -ut(k) + drive
        };
        let lap = neumann_laplacian(&g, &w, &gdata);
        let w_prev: Vec<f64> =
            (0..g.len()).map(|k| 2.0 * w[k] - w_next[k] + dt * dt * (lap[k] - a[k] * (ut(k) + vt(k)))).collect();
        w_next = std::mem::replace(&mut w, w_prev);
        levels.push(w.clone());
    }
    let w0 = &levels[n];
    let (w1, w2) = (&levels[n - 1], &levels[n - 2]);
    let wt0: Vec<f64> = (0..g.len()).map(|k| (-3.0 * w0[k] + 4.0 * w1[k] - w2[k]) / (2.0 * dt)).collect();
    let all = NodeMask::all(g);
    let c = &model.domain_medium.c;
    let e_w = energy_fields(
        &ScalarField2D::from_values(g, w0.clone()).unwrap(),
        &ScalarField2D::from_values(g, wt0).unwrap(),
        c,
        &all,
    );

    let tr = model.time_reverse(&h, TrKind::Dissipative).unwrap();
    let direct = f.sub(&tr).unwrap();
    let e_direct = h_norm(&direct, &model.domain_medium).powi(2);
    let gap = (e_w - e_direct).abs() / e_direct;
    assert!(gap < 0.02, "error-system energy {e_w} vs composed {e_direct}");

    let kf = model.error_op(&f, TrKind::Dissipative).unwrap();
    let k2 = model.h_norm(&kf).powi(2);
    assert!(k2 <= e_w * (1.0 + 1e-9), "{k2} > {e_w}");
    assert!(k2 < model.h_norm(&f).powi(2));
}

#[test]
fn transparent_time_reversal_recovers_smooth_source() {
    let dom = Grid2D::centered(81, 0.025).unwrap();
    let ring = 10;
    let solver = enlarge(&dom, [ring; 4]).unwrap();
    let m = extend_medium(&Medium::uniform(dom, 1.0, 0.0).unwrap(), &solver).unwrap();
    let bc = BoundarySpec::uniform(solver, EdgeCondition::pml(ring as f64 * dom.dx, 1.0)).unwrap();
    let cfg = SolverConfig::new(&solver, &m.c, 2, 0.3, 3.5).unwrap();
    let model = Model::transparent(dom, Rect::centered_square(0.8), m, bc, cfg).unwrap();
    let f = InitialSource::new(
        bump(dom, 0.1, -0.15, 0.5).add(&bump(dom, -0.3, 0.3, 0.3)).unwrap(),
        ScalarField2D::zeros(dom),
        model.omega0,
    )
    .unwrap();
    let h = model.observe(&f).unwrap();
    let back = model.time_reverse(&h, TrKind::Standard).unwrap();
    let err = model.h_norm(&back.sub(&f).unwrap()) / model.h_norm(&f);
    assert!(err < 0.25, "relative error {err}");
}

#[test]
fn model_rejects_bad_geometry() {
    let g = Grid2D::centered(41, 0.05).unwrap();
    let m = Medium::uniform(g, 1.0, 0.0).unwrap();
    let cfg = SolverConfig::new(&g, &m.c, 2, 0.3, 1.0).unwrap();
    let closed = BoundarySpec::closed(g);
    assert!(Model::robin(g, Rect::centered_square(0.5), m.clone(), closed.clone(), cfg).is_err());
    let bc = full_robin(g, 1.0).unwrap();
    assert!(Model::robin(g, Rect::centered_square(1.0), m.clone(), bc, cfg).is_err());
    assert!(Model::transparent(g, Rect::centered_square(0.5), m, closed, cfg).is_err());
}

/// Γ on the bottom, right and top sides; the left side runs into a PML.
fn three_sided_model(t: f64) -> Model {
    let g = Grid2D::centered(101, 0.02).unwrap();
    let solver = enlarge(&g, [10, 0, 0, 0]).unwrap();
    let lambda = pat_core::media::BoundaryAbsorption::three_sided(solver, &g.bounds(), 1.0, 0.1, 1.0).unwrap();
    let bc = BoundarySpec::new(
        [EdgeCondition::pml(0.2, 1.0), EdgeCondition::Robin, EdgeCondition::Robin, EdgeCondition::Robin],
        lambda,
    )
    .unwrap();
    let medium = Medium::uniform(solver, 1.0, 0.0).unwrap();
    let cfg = SolverConfig::new(&solver, &medium.c, 2, 0.3, t).unwrap();
    Model::robin(g, Rect::centered_square(0.8), medium, bc, cfg).unwrap()
}

/// Wave packet around `(0.3, 0)` travelling in direction `dir` (±1 along x).
fn one_way_packet(g: Grid2D, dir: f64) -> InitialSource {
    let (x0, s, k) = (0.3, 0.15, 30.0);
    let env = |x: f64, y: f64| (-((x - x0).powi(2) + y * y) / (2.0 * s * s)).exp();
    let f1 = ScalarField2D::from_fn(g, |x, y| env(x, y) * (k * (x - x0)).cos());
    // u = F(x − dir·t) gives u_t = −dir·∂_x F
    let f2 = ScalarField2D::from_fn(g, |x, y| {
        let d = env(x, y) * (-(x - x0) / (s * s) * (k * (x - x0)).cos() - k * (k * (x - x0)).sin());
        -dir * d
    });
    let om = Rect::centered_square(0.8);
    InitialSource::new(f1.masked_to(&om), f2.masked_to(&om), om).unwrap()
}

#[test]
fn packets_heading_for_the_open_side_are_not_contracted() {
    let model = three_sided_model(3.0);
    let ratio = |dir: f64| {
        let f = one_way_packet(model.domain, dir);
        model.h_norm(&model.error_op(&f, TrKind::Dissipative).unwrap()) / model.h_norm(&f)
    };
    let (toward_gamma, toward_open) = (ratio(1.0), ratio(-1.0));
    assert!(toward_gamma < 0.3, "{toward_gamma}");
    assert!(toward_open > 0.9, "{toward_open}");
}
