//! Experiment configuration, TOML or JSON, parsed strictly.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use wavedno::geometry::{make_regularizing_diffeo, make_strip_diffeo, make_trivial_diffeo, Diffeo};
use wavedno::io::Container;
use wavedno::solver::{make_divfree_vorticity, SolverOpts, VorticityData};
use wavedno::spectral::{Field2, Field3, HGrid, SmoothStep, VGrid, VectorField3};
use wavedno::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    FlatMultiplier,
    RouteCompare,
    Slopes,
    Paralin,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::FlatMultiplier => "flat-multiplier",
            Experiment::RouteCompare => "route-compare",
            Experiment::Slopes => "slopes",
            Experiment::Paralin => "paralin",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiments: Vec<Experiment>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub physics: Physics,
    #[serde(default)]
    pub eta: SurfaceSpec,
    #[serde(default)]
    pub phi: SurfaceSpec,
    #[serde(default)]
    pub vorticity: VorticitySpec,
    #[serde(default)]
    pub diffeo: DiffeoSpec,
    #[serde(default = "default_order")]
    pub expansion_order: usize,
    #[serde(default = "default_ladder")]
    pub ladder: Vec<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub oracle: OracleSpec,
    #[serde(default)]
    pub paralin: ParalinSpec,
    #[serde(default)]
    pub demo: DemoSpec,
}

fn default_order() -> usize {
    3
}

fn default_ladder() -> Vec<f64> {
    vec![0.08, 0.04, 0.02]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub nw: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { nx: 32, ny: 32, lx: TAU, ly: TAU, nw: 32 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    pub h: f64,
    pub h0: f64,
    pub g: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Physics { h: 1.0, h0: 0.5, g: 9.81 }
    }
}

/// `amp · p(w) · cos(mx x′ + my y′ + phase)` with `p(w) = Σ depth[i] wⁱ`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub mx: i64,
    pub my: i64,
    pub amp: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub depth: Vec<f64>,
}

impl Mode {
    fn eval(&self, hg: &HGrid, x: f64, y: f64) -> f64 {
        let kx = TAU / hg.lx * self.mx as f64;
        let ky = TAU / hg.ly * self.my as f64;
        self.amp * (kx * x + ky * y + self.phase).cos()
    }

    fn profile(&self, w: f64) -> f64 {
        if self.depth.is_empty() {
            1.0
        } else {
            self.depth.iter().rev().fold(0.0, |acc, c| acc * w + c)
        }
    }
}

/// Random modes drawn from the seed: `count` modes with `|m| ≤ max_mode`
/// and amplitudes uniform in `[-amp, amp]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomModes {
    pub count: usize,
    pub max_mode: i64,
    pub amp: f64,
}

impl RandomModes {
    fn draw(&self, rng: &mut ChaCha8Rng) -> Vec<Mode> {
        (0..self.count)
            .map(|_| Mode {
                mx: rng.random_range(-self.max_mode..=self.max_mode),
                my: rng.random_range(0..=self.max_mode),
                amp: rng.random_range(-self.amp..=self.amp),
                phase: rng.random_range(0.0..TAU),
                depth: Vec::new(),
            })
            .collect()
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    #[serde(default)]
    pub modes: Vec<Mode>,
    #[serde(default)]
    pub random: Option<RandomModes>,
    /// Stem of a field container with a component named `field`.
    #[serde(default)]
    pub file: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VorticityKind {
    /// The modes give `ω̃`, which must be divergence-free.
    Direct,
    /// The modes give a potential `V` and `ω̃ = curl^Σ V`.
    #[default]
    Potential,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VorticitySpec {
    #[serde(default)]
    pub kind: VorticityKind,
    #[serde(default)]
    pub x: Vec<Mode>,
    #[serde(default)]
    pub y: Vec<Mode>,
    #[serde(default)]
    pub z: Vec<Mode>,
    /// Stem of a field container with a vector component named `field`.
    #[serde(default)]
    pub file: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffeoName {
    #[default]
    Trivial,
    Regularizing,
    Strip,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffeoSpec {
    #[serde(default)]
    pub kind: DiffeoName,
    #[serde(default)]
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub flat_multiplier: f64,
    pub slope: f64,
    pub paralin_slope: f64,
    pub route: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { flat_multiplier: 1e-10, slope: 0.3, paralin_slope: 0.4, route: 1e-2 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub tol_fp: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub tol_div: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let o = SolverOpts::default();
        SolverSpec { tol_fp: o.tol_fp, max_iter: o.max_iter, damping: o.damping, tol_div: o.tol_div }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    /// Vertical lattice points of the finite-difference route; 0 means `nx + 1`.
    pub nw: usize,
    pub tol: f64,
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec { nw: 0, tol: 1e-11 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParalinSpec {
    pub delta: f64,
    pub eps1: f64,
    pub eps2: f64,
}

impl Default for ParalinSpec {
    fn default() -> Self {
        ParalinSpec { delta: 0.4, eps1: 0.1, eps2: 0.45 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoSpec {
    pub dt: f64,
    pub steps: usize,
    pub snapshot_every: usize,
}

impl Default for DemoSpec {
    fn default() -> Self {
        DemoSpec { dt: 1e-2, steps: 10, snapshot_every: 1 }
    }
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::ConfigError(msg.into())
}

impl ExperimentConfig {
    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        let cfg: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| cfg_err(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| cfg_err(e.to_string()))?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        let mut cfg = cfg;
        for f in [&mut cfg.eta.file, &mut cfg.phi.file, &mut cfg.vorticity.file].into_iter().flatten() {
            if f.is_relative() {
                *f = base.join(&*f);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.nx < 4 || g.ny < 4 || g.nx % 2 == 1 || g.ny % 2 == 1 {
            return Err(cfg_err(format!("grid sizes must be even and >= 4, got {} x {}", g.nx, g.ny)));
        }
        if g.nw < 4 {
            return Err(cfg_err(format!("need at least 4 vertical nodes, got {}", g.nw)));
        }
        if !(g.lx > 0.0 && g.ly > 0.0) {
            return Err(cfg_err("periods must be positive"));
        }
        let p = &self.physics;
        if !(p.h > 0.0 && p.h0 > 0.0 && p.h0 <= p.h) {
            return Err(cfg_err(format!("need 0 < h0 <= h, got h = {}, h0 = {}", p.h, p.h0)));
        }
        if self.ladder.len() < 3 {
            return Err(cfg_err("amplitude ladder needs at least 3 entries"));
        }
        if self.ladder.iter().any(|a| !(*a > 0.0)) || self.ladder.windows(2).any(|w| w[1] >= w[0]) {
            return Err(cfg_err(format!("amplitude ladder must be positive and strictly decreasing, got {:?}", self.ladder)));
        }
        if self.expansion_order == 0 || self.expansion_order > 6 {
            return Err(cfg_err(format!("expansion order must be in 1..=6, got {}", self.expansion_order)));
        }
        if self.demo.snapshot_every == 0 || !(self.demo.dt > 0.0) {
            return Err(cfg_err("demo needs dt > 0 and snapshot_every >= 1"));
        }
        if matches!(self.diffeo.kind, DiffeoName::Regularizing | DiffeoName::Strip) && self.diffeo.delta.is_none() {
            return Err(cfg_err("regularizing and strip maps need delta"));
        }
        Ok(())
    }

    pub fn hgrid(&self) -> Arc<HGrid> {
        HGrid::new(self.grid.lx, self.grid.ly, self.grid.nx, self.grid.ny)
    }

    pub fn vgrid(&self) -> Arc<VGrid> {
        VGrid::new(self.physics.h, self.grid.nw)
    }

    pub fn solver_opts(&self) -> SolverOpts {
        let s = &self.solver;
        SolverOpts { tol_fp: s.tol_fp, max_iter: s.max_iter, damping: s.damping, tol_div: s.tol_div }
    }

    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }

    fn surface(&self, spec: &SurfaceSpec, hg: &Arc<HGrid>, stream: u64) -> Result<Field2> {
        if let Some(f) = &spec.file {
            let c = Container::read(f)?;
            if !c.hg.same(hg) {
                return Err(Error::GridMismatch(format!("{} does not match the configured grid", f.display())));
            }
            return c.field2("field");
        }
        let mut modes = spec.modes.clone();
        if let Some(r) = &spec.random {
            modes.extend(r.draw(&mut self.rng(stream)));
        }
        Ok(Field2::from_fn(hg, |x, y| modes.iter().map(|m| m.eval(hg, x, y)).sum()).dealiased())
    }

    pub fn eta(&self) -> Result<Field2> {
        self.surface(&self.eta, &self.hgrid(), 1)
    }

    pub fn phi(&self) -> Result<Field2> {
        self.surface(&self.phi, &self.hgrid(), 2)
    }

    pub fn diffeo(&self, eta: &Field2) -> Result<Diffeo> {
        let vg = self.vgrid();
        let h0 = self.physics.h0;
        match self.diffeo.kind {
            DiffeoName::Trivial => make_trivial_diffeo(eta, &vg, h0),
            DiffeoName::Regularizing => make_regularizing_diffeo(eta, &vg, h0, self.diffeo.delta.unwrap_or_default(), SmoothStep::default()),
            DiffeoName::Strip => make_strip_diffeo(eta, &vg, self.diffeo.delta.unwrap_or_default()),
        }
    }

    /// The configured field on the strip, before any curl.
    pub fn vorticity_modes(&self) -> Result<VectorField3> {
        let (hg, vg) = (self.hgrid(), self.vgrid());
        if let Some(f) = &self.vorticity.file {
            let c = Container::read(f)?;
            if !c.hg.same(&hg) || c.vg.as_deref() != Some(&*vg) {
                return Err(Error::GridMismatch(format!("{} does not match the configured grid", f.display())));
            }
            return c.vector3("field");
        }
        let comp = |ms: &[Mode]| Field3::from_fn(&hg, &vg, |x, y, w| ms.iter().map(|m| m.eval(&hg, x, y) * m.profile(w)).sum()).dealiased();
        Ok(VectorField3([comp(&self.vorticity.x), comp(&self.vorticity.y), comp(&self.vorticity.z)]))
    }

    /// `ω̃` on the strip of `d`, divergence-free there.
    pub fn vorticity(&self, d: &Diffeo) -> Result<VorticityData> {
        let v = self.vorticity_modes()?;
        match self.vorticity.kind {
            VorticityKind::Potential => make_divfree_vorticity(&v, d),
            VorticityKind::Direct => {
                let om = VorticityData { omega: v };
                let def = om.div_defect(d);
                if def > self.solver.tol_div {
                    return Err(cfg_err(format!("direct vorticity has divergence {def:e} > {:e}", self.solver.tol_div)));
                }
                Ok(om)
            }
        }
    }

    pub fn cutoff(&self) -> Result<wavedno::paralin::Cutoff> {
        wavedno::paralin::Cutoff::new(self.paralin.eps1, self.paralin.eps2)
    }
}
