//! Fixed-step RK4 for the surface system with straightened vorticity.

use std::path::Path;

use serde::Serialize;
use serde_json::json;
use wavedno::io::Container;
use wavedno::solver::{zcs_rhs, SurfaceState, VorticityData};
use wavedno::spectral::{Field2, VectorField3};
use wavedno::{Error, Result};

use crate::config::ExperimentConfig;
use crate::experiments::write_json;

#[derive(Clone)]
struct State {
    eta: Field2,
    phi: Field2,
    omega: VectorField3,
}

impl State {
    fn axpy(&self, a: f64, k: &State) -> State {
        State { eta: &self.eta + &k.eta.scale(a), phi: &self.phi + &k.phi.scale(a), omega: &self.omega + &k.omega.scale(a) }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Norms {
    pub step: usize,
    pub t: f64,
    pub eta: f64,
    pub grad_phi: f64,
    pub omega: f64,
    pub eta_mean: f64,
}

#[derive(Debug, Serialize)]
pub struct DemoReport {
    pub steps: usize,
    pub dt: f64,
    pub snapshots: usize,
    /// Largest change of the mean of `η` over one step.
    pub max_mean_drift: f64,
    pub aborted: Option<String>,
}

fn norms(s: &State, step: usize, t: f64) -> Norms {
    Norms { step, t, eta: s.eta.norm_l2(), grad_phi: s.phi.grad().norm_l2(), omega: s.omega.norm_l2(), eta_mean: s.eta.mean() }
}

fn rhs(cfg: &ExperimentConfig, s: &State) -> Result<State> {
    let d = cfg.diffeo(&s.eta)?;
    let st = SurfaceState::new(s.eta.clone(), s.phi.clone(), cfg.physics.h0);
    let (eta, phi, omega) = zcs_rhs(&st, &VorticityData { omega: s.omega.clone() }, &d, &cfg.solver_opts(), cfg.physics.g)?;
    Ok(State { eta: eta.dealiased(), phi: phi.dealiased(), omega: omega.dealiased() })
}

fn rk4(cfg: &ExperimentConfig, s: &State, dt: f64) -> Result<State> {
    let k1 = rhs(cfg, s)?;
    let k2 = rhs(cfg, &s.axpy(dt / 2.0, &k1))?;
    let k3 = rhs(cfg, &s.axpy(dt / 2.0, &k2))?;
    let k4 = rhs(cfg, &s.axpy(dt, &k3))?;
    Ok(s.axpy(dt / 6.0, &k1).axpy(dt / 3.0, &k2).axpy(dt / 3.0, &k3).axpy(dt / 6.0, &k4))
}

fn snapshot(cfg: &ExperimentConfig, s: &State, n: Norms, dir: &Path) -> Result<()> {
    let mut c = Container::new("snapshot", &cfg.hgrid(), Some(&cfg.vgrid()));
    c.push2("eta", &s.eta)?;
    c.push2("phi", &s.phi)?;
    c.push_vector3("omega", &s.omega)?;
    c.meta = json!({ "step": n.step, "t": n.t });
    c.write(&dir.join(format!("step_{:06}", n.step)))
}

/// Integrates `demo.steps` steps, writing `norms.csv`, snapshots and
/// `demo.json` under `out`. A failed solve stops the run after recording
/// what was reached; the error is returned.
pub fn run_demo(cfg: &ExperimentConfig, out: &Path) -> Result<DemoReport> {
    let snaps = out.join("snapshots");
    std::fs::create_dir_all(&snaps)?;
    let eta = cfg.eta()?;
    let d = cfg.diffeo(&eta)?;
    let omega = cfg.vorticity(&d)?.omega;
    let mut s = State { eta, phi: cfg.phi()?, omega };
    let (dt, steps) = (cfg.demo.dt, cfg.demo.steps);
    let mut w = csv::Writer::from_path(out.join("norms.csv")).map_err(|e| Error::Io(e.to_string()))?;
    let mut n = norms(&s, 0, 0.0);
    w.serialize(n).map_err(|e| Error::Io(e.to_string()))?;
    snapshot(cfg, &s, n, &snaps)?;
    let mut report = DemoReport { steps: 0, dt, snapshots: 1, max_mean_drift: 0.0, aborted: None };
    let mut failure = None;
    for step in 1..=steps {
        match rk4(cfg, &s, dt) {
            Ok(next) => s = next,
            Err(e) => {
                report.aborted = Some(format!("step {step}: {e}"));
                failure = Some(e);
                break;
            }
        }
        let m = norms(&s, step, step as f64 * dt);
        report.max_mean_drift = report.max_mean_drift.max((m.eta_mean - n.eta_mean).abs());
        n = m;
        report.steps = step;
        w.serialize(n).map_err(|e| Error::Io(e.to_string()))?;
        if step % cfg.demo.snapshot_every == 0 || step == steps {
            snapshot(cfg, &s, n, &snaps)?;
            report.snapshots += 1;
        }
    }
    w.flush()?;
    write_json(&out.join("demo.json"), &json!({ "config": cfg, "result": &report }))?;
    match failure {
        Some(e) => Err(e),
        None => Ok(report),
    }
}
