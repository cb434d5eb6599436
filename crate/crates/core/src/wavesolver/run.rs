use super::{BoundarySpec, EnergyTracker, SolverConfig, Stepper, WaveState};
use crate::error::{PatError, Result};
use crate::media::{InitialSource, Medium, NodeMask, ScalarField2D};
use crate::record::{ObservationRecord, RecordNode};

/// Boundary data applied during a run, sampled from a record at every level.
#[derive(Debug, Clone, Copy)]
pub enum Drive<'a> {
    /// Robin edges carry `g_e = coeff·λ_e·χh` at each record node.
    Robin { record: &'a ObservationRecord, coeff: f64 },
    /// Driven Dirichlet edges take the values `χh`.
    Dirichlet { record: &'a ObservationRecord },
}

impl<'a> Drive<'a> {
    fn record(&self) -> &'a ObservationRecord {
        match self {
            Drive::Robin { record, .. } | Drive::Dirichlet { record } => record,
        }
    }
}

/// What to do besides stepping.
#[derive(Debug, Clone, Copy)]
pub struct RunSpec<'a> {
    /// Sign of `a·u_t` in the physical equation.
    pub sign_a: f64,
    /// Multiplier of `λ` in the physical Robin condition.
    pub lambda_scale: f64,
    /// Step from `t = T` down to `t = 0`; the source is then the state at `T`.
    pub reverse: bool,
    pub record_on: Option<&'a [RecordNode]>,
    pub drive: Option<Drive<'a>>,
    pub energy_region: Option<&'a NodeMask>,
    /// Keep a snapshot of `u` every this many steps (0: never).
    pub dump_every: usize,
}

impl<'a> RunSpec<'a> {
    pub fn forward() -> Self {
        RunSpec {
            sign_a: 1.0,
            lambda_scale: 1.0,
            reverse: false,
            record_on: None,
            drive: None,
            energy_region: None,
            dump_every: 0,
        }
    }

    pub fn backward(sign_a: f64, lambda_scale: f64) -> Self {
        RunSpec { sign_a, lambda_scale, reverse: true, ..RunSpec::forward() }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: WaveState,
    /// `u` at the end of the run (`t = T` forward, `t = 0` backward).
    pub u_end: ScalarField2D,
    /// Physical-time derivative `u_t` at the end of the run.
    pub ut_end: ScalarField2D,
    pub record: Option<ObservationRecord>,
    pub energy: Option<EnergyTracker>,
    /// `(step, physical time, u)`.
    pub snapshots: Vec<(usize, f64, ScalarField2D)>,
}

/// Full time loop of `u_tt − c²Δu + sign_a·a·u_t = 0` over `cfg.n_steps()` steps.
pub fn run(f: &InitialSource, medium: &Medium, bc: &BoundarySpec, cfg: &SolverConfig, spec: &RunSpec) -> Result<RunOutput> {
    let g = *medium.grid();
    if !f.grid().same_shape(&g) {
        return Err(PatError::Geometry("source grid differs from the medium grid".into()));
    }
    let n_steps = cfg.n_steps();
    let dir = if spec.reverse { -1.0 } else { 1.0 };
    let mut stepper = Stepper::new(medium, bc, cfg, dir * spec.sign_a, dir * spec.lambda_scale)?;

    let drive_rec = spec.drive.map(|d| d.record());
    if let Some(rec) = drive_rec {
        if rec.n_samples() != n_steps + 1 || (rec.dt - cfg.dt).abs() > 1e-9 * cfg.dt {
            return Err(PatError::Config(format!(
                "drive record has {} samples at dt={} but the run needs {} at dt={}",
                rec.n_samples(),
                rec.dt,
                n_steps + 1,
                cfg.dt
            )));
        }
        let nodes = rec.locate_on(&g)?;
        match spec.drive {
            Some(Drive::Robin { coeff, .. }) => stepper.set_robin_drive(bc, &nodes, coeff)?,
            Some(Drive::Dirichlet { .. }) => stepper.set_dirichlet_drive(&nodes)?,
            None => {}
        }
    }
    let n_drive = drive_rec.map_or(0, |r| r.n_nodes());
    let is_robin = matches!(spec.drive, Some(Drive::Robin { .. }));
    let mut buf = vec![0.0; n_drive];
    let physical = |n: usize| if spec.reverse { n_steps - n } else { n };
    let fill = |buf: &mut Vec<f64>, level: usize| {
        if let Some(rec) = drive_rec {
            for (m, b) in buf.iter_mut().enumerate() {
                *b = rec.value(level, m);
            }
        }
    };

    let record_idx = match spec.record_on {
        Some(nodes) => {
            if spec.reverse {
                return Err(PatError::Config("recording is only available in forward runs".into()));
            }
            let probe = ObservationRecord::zeros(nodes.to_vec(), cfg.dt, 1)?;
            Some(probe.locate_on(&g)?)
        }
        None => None,
    };
    let mut samples: Vec<f64> = Vec::new();
    let push_sample = |samples: &mut Vec<f64>, u: &ScalarField2D| {
        if let Some(idx) = &record_idx {
            samples.extend(idx.iter().map(|&(i, j)| u.at(i, j)));
        }
    };

    let v0 = if spec.reverse { f.f2.scaled(-1.0) } else { f.f2.clone() };
    fill(&mut buf, physical(0));
    let empty: [f64; 0] = [];
    let (r0, d0) = if is_robin { (&buf[..], &empty[..]) } else { (&empty[..], &buf[..]) };
    let mut st = stepper.init(&f.f1, &v0, r0, d0)?;

    let mut tracker = spec.energy_region.map(|region| {
        let damping = medium.a.scaled(dir * spec.sign_a);
        let flux = bc
            .gamma()
            .iter()
            .map(|n| (g.idx(n.i, n.j), dir * spec.lambda_scale * n.flux_weight))
            .collect();
        let mut t = EnergyTracker::new(region, &medium.c, &damping, flux, cfg.dt);
        t.start(&st);
        t
    });
    push_sample(&mut samples, &st.u);
    let mut snapshots = Vec::new();
    if spec.dump_every > 0 {
        snapshots.push((0, physical(0) as f64 * cfg.dt, st.u.clone()));
    }

    let mut before_last: Option<ScalarField2D> = None;
    let mut next = vec![0.0; n_drive];
    for n in 0..n_steps {
        if n + 1 == n_steps {
            before_last = Some(st.u_prev.clone());
        }
        fill(&mut buf, physical(n));
        let before = tracker.as_ref().map(|_| st.u_prev.clone());
        if is_robin {
            stepper.step(&mut st, &buf, &empty)?;
        } else {
            fill(&mut next, physical(n + 1));
            stepper.step(&mut st, &empty, &next)?;
        }
        if let (Some(t), Some(b)) = (tracker.as_mut(), before.as_ref()) {
            t.after_step(&st, b);
        }
        push_sample(&mut samples, &st.u);
        if spec.dump_every > 0 && (n + 1) % spec.dump_every == 0 {
            snapshots.push((n + 1, physical(n + 1) as f64 * cfg.dt, st.u.clone()));
        }
    }
    if st.u.values().iter().any(|v| !v.is_finite()) {
        return Err(PatError::NumericalBlowup { step: st.step });
    }

    let dt = cfg.dt;
    let ut_step = match (n_steps, &before_last) {
        (0, _) => v0.clone(),
        (1, _) => st.velocity(dt),
        (_, Some(b2)) => {
            let mut v = st.u.clone();
            let (u1, u2) = (st.u_prev.values(), b2.values());
            v.values_mut()
                .iter_mut()
                .enumerate()
                .for_each(|(k, x)| *x = (3.0 * *x - 4.0 * u1[k] + u2[k]) / (2.0 * dt));
            v
        }
        _ => unreachable!(),
    };
    let ut_end = if spec.reverse { ut_step.scaled(-1.0) } else { ut_step };

    let record = match spec.record_on {
        Some(nodes) => Some(ObservationRecord::from_samples(nodes.to_vec(), dt, samples)?),
        None => None,
    };
    Ok(RunOutput { u_end: st.u.clone(), state: st, ut_end, record, energy: tracker, snapshots })
}
