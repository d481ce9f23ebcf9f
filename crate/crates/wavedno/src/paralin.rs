//! Paradifferential calculus on the torus and the paralinearized forms of
//! the Dirichlet–Neumann operator.
//!
//! A symbol `a(x′, ξ)` acts through
//! `(T_a u)^(ξ) = Σ_{ξ′} χ(ξ − ξ′, ξ′) â(ξ − ξ′, ξ′) û(ξ′)`, where `â` is the
//! discrete Fourier transform of `a` in `x′` at fixed `ξ′`. The sum is
//! carried out exactly over mode pairs; [`ParaMatrix`] stores the resulting
//! sparse operator so that repeated applications (power iterations, the
//! vertical levels of a strip field) reuse the symbol transforms.
//!
//! Localization uses the affine strip `z = δw + η`, for which
//! `∂_j^ϱ = ∂_j − (η_j/δ)∂_w` and `∂_w^ϱ = ∂_w/δ`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{flat_curl, make_strip_diffeo, resample, Diffeo};
use crate::spectral::{Field2, Field3, HGrid, SmoothStep, VectorField3};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Admissible cutoff `χ(ξ₁, ξ₂) = (1 − f(|ξ₂|)) f(|ξ₁|/|ξ₂|)`, with `f = 1`
/// on `|t| ≤ 2ε₁` and `f = 0` on `|t| ≥ ε₂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Cutoff {
    pub eps1: f64,
    pub eps2: f64,
    profile: SmoothStep,
}

impl Default for Cutoff {
    fn default() -> Self {
        Cutoff::new(0.1, 0.45).expect("default cutoff is admissible")
    }
}

impl Cutoff {
    pub fn new(eps1: f64, eps2: f64) -> Result<Self> {
        if !(0.0 < eps1 && 2.0 * eps1 < eps2 && eps2 < 0.5) {
            return Err(Error::ConfigError(format!("cutoff needs 0 < 2 eps1 < eps2 < 1/2, got eps1 = {eps1}, eps2 = {eps2}")));
        }
        Ok(Cutoff { eps1, eps2, profile: SmoothStep::new(2.0 * eps1, eps2) })
    }

    pub fn f(&self, t: f64) -> f64 {
        self.profile.eval(t)
    }

    pub fn chi(&self, xi1: [f64; 2], xi2: [f64; 2]) -> f64 {
        let r2 = xi2[0].hypot(xi2[1]);
        if r2 == 0.0 {
            return 0.0;
        }
        let w = 1.0 - self.f(r2);
        if w == 0.0 {
            return 0.0;
        }
        w * self.f(xi1[0].hypot(xi1[1]) / r2)
    }

    /// Checks the cutoff properties on all pairs of grid wavenumbers.
    ///
    /// Property ii. is measured through first differences: the constant
    /// `sup (1 + |ξ₂|) |∇χ|` is computed over `|ξ₂| ≤ R/2` and `|ξ₂| ≤ R` and
    /// must not grow.
    pub fn check(&self, hg: &HGrid) -> CutoffReport {
        let n = hg.len();
        let (mut i_one, mut i_zero, mut sym) = (true, true, 0.0f64);
        for k2 in 0..n {
            let x2 = hg.xi(k2);
            let r2 = hg.xi_abs(k2);
            for k1 in 0..n {
                let x1 = hg.xi(k1);
                let r1 = hg.xi_abs(k1);
                let v = self.chi(x1, x2);
                if r1 <= self.eps1 * r2 && r2 >= 2.0 && v != 1.0 {
                    i_one = false;
                }
                if (r1 >= self.eps2 * r2 || r2 < 1.0) && v != 0.0 {
                    i_zero = false;
                }
                let m1 = [-x1[0], -x1[1]];
                let m2 = [-x2[0], -x2[1]];
                sym = sym.max((v - self.chi(m1, m2)).abs()).max((v - self.chi(m1, x2)).abs());
            }
        }
        let rmax = hg.xi_abs(hg.index(hg.nx as i64 / 2 - 1, 0));
        let (c_half, c_full) = (self.derivative_constant(rmax / 2.0), self.derivative_constant(rmax));
        CutoffReport {
            prop_i: i_one && i_zero,
            prop_ii_half: c_half,
            prop_ii_full: c_full,
            prop_ii: c_full <= 1.05 * c_half + 1e-12,
            prop_iii: sym == 0.0,
        }
    }

    /// `sup (1 + |ξ₂|)(|∇_{ξ₁}χ| + |∇_{ξ₂}χ|)` over a polar sample of `|ξ₂| ≤ r`.
    fn derivative_constant(&self, r: f64) -> f64 {
        let mut c = 0.0f64;
        let nr = 64;
        for ir in 1..=nr {
            let r2 = r * ir as f64 / nr as f64;
            for it in 0..24 {
                let t = it as f64 * std::f64::consts::PI / 12.0;
                let x2 = [r2, 0.0];
                let s = 1.0 - 1e-9 + 0.6 * it as f64 / 24.0;
                let x1 = [s * r2 * t.cos() * 0.8, s * r2 * t.sin() * 0.8];
                let e = 1e-6 * (1.0 + r2);
                let d = |a: [f64; 2], b: [f64; 2]| self.chi(a, b);
                let g1 = [(d([x1[0] + e, x1[1]], x2) - d([x1[0] - e, x1[1]], x2)) / (2.0 * e), (d([x1[0], x1[1] + e], x2) - d([x1[0], x1[1] - e], x2)) / (2.0 * e)];
                let g2 = [(d(x1, [x2[0] + e, x2[1]]) - d(x1, [x2[0] - e, x2[1]])) / (2.0 * e), (d(x1, [x2[0], x2[1] + e]) - d(x1, [x2[0], x2[1] - e])) / (2.0 * e)];
                c = c.max((1.0 + r2) * (g1[0].hypot(g1[1]) + g2[0].hypot(g2[1])));
            }
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutoffReport {
    pub prop_i: bool,
    pub prop_ii_half: f64,
    pub prop_ii_full: f64,
    pub prop_ii: bool,
    pub prop_iii: bool,
}

impl CutoffReport {
    pub fn pass(&self) -> bool {
        self.prop_i && self.prop_ii && self.prop_iii
    }
}

type ColumnFn = Arc<dyn Fn([f64; 2]) -> Vec<C64> + Send + Sync>;
type MultiplierFn = Arc<dyn Fn([f64; 2]) -> C64 + Send + Sync>;

/// Sampled form of one homogeneous component.
#[derive(Clone)]
pub enum Table {
    /// `a(ξ)`, independent of `x′`.
    Multiplier(MultiplierFn),
    /// `a(x′)`, independent of `ξ`.
    Function(Field2),
    /// `ξ ↦ (a(x′_j, ξ))_j` over the physical grid.
    General(ColumnFn),
}

#[derive(Clone)]
pub struct Component {
    pub order: f64,
    pub table: Table,
    sparse: Option<Arc<Vec<(usize, C64)>>>,
}

impl Component {
    fn column(&self, hg: &HGrid, xi: [f64; 2]) -> Vec<C64> {
        match &self.table {
            Table::Multiplier(f) => vec![f(xi); hg.len()],
            Table::Function(a) => a.to_phys().into_iter().map(|v| C64::new(v, 0.0)).collect(),
            Table::General(f) => f(xi),
        }
    }

    /// Nonzero Fourier coefficients in `x′` at fixed `ξ`.
    fn hat(&self, hg: &HGrid, xi: [f64; 2]) -> Vec<(usize, C64)> {
        match &self.table {
            Table::Multiplier(f) => vec![(0, f(xi))],
            Table::Function(_) => self.sparse.as_ref().map(|s| s.as_ref().clone()).unwrap_or_default(),
            Table::General(f) => {
                let mut c = f(xi);
                hg.forward(&mut c);
                c.into_iter().enumerate().filter(|(_, v)| *v != ZERO).collect()
            }
        }
    }
}

/// A finite sum of homogeneous components sampled on the physical grid.
#[derive(Clone)]
pub struct Symbol {
    pub grid: Arc<HGrid>,
    pub comps: Vec<Component>,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol").field("grid", &self.grid).field("orders", &self.orders()).finish()
    }
}

impl Symbol {
    pub fn multiplier(hg: &Arc<HGrid>, order: f64, f: impl Fn([f64; 2]) -> C64 + Send + Sync + 'static) -> Self {
        Symbol { grid: hg.clone(), comps: vec![Component { order, table: Table::Multiplier(Arc::new(f)), sparse: None }] }
    }

    /// Order-zero symbol `a(x′)`; `T_a` is then a paraproduct.
    pub fn function(a: &Field2) -> Self {
        let sparse: Vec<(usize, C64)> = a.c.iter().copied().enumerate().filter(|(_, v)| *v != ZERO).collect();
        Symbol { grid: a.grid.clone(), comps: vec![Component { order: 0.0, table: Table::Function(a.clone()), sparse: Some(Arc::new(sparse)) }] }
    }

    pub fn general(hg: &Arc<HGrid>, order: f64, f: impl Fn([f64; 2]) -> Vec<C64> + Send + Sync + 'static) -> Self {
        Symbol { grid: hg.clone(), comps: vec![Component { order, table: Table::General(Arc::new(f)), sparse: None }] }
    }

    pub fn plus(&self, o: &Symbol) -> Symbol {
        assert!(self.grid.same(&o.grid), "symbols on different grids");
        let mut comps = self.comps.clone();
        comps.extend(o.comps.iter().cloned());
        Symbol { grid: self.grid.clone(), comps }
    }

    pub fn orders(&self) -> Vec<f64> {
        self.comps.iter().map(|c| c.order).collect()
    }

    /// Component of highest order.
    pub fn principal(&self) -> Symbol {
        let c = self.comps.iter().max_by(|a, b| a.order.total_cmp(&b.order)).expect("empty symbol").clone();
        Symbol { grid: self.grid.clone(), comps: vec![c] }
    }

    /// `a(x′_j, ξ)` for every physical sample `j`.
    pub fn column(&self, xi: [f64; 2]) -> Vec<C64> {
        let mut out = vec![ZERO; self.grid.len()];
        for c in &self.comps {
            for (o, v) in out.iter_mut().zip(c.column(&self.grid, xi)) {
                *o += v;
            }
        }
        out
    }

    pub fn eval(&self, j: usize, xi: [f64; 2]) -> C64 {
        self.column(xi)[j]
    }

    fn hat(&self, xi: [f64; 2]) -> Vec<(usize, C64)> {
        self.comps.iter().flat_map(|c| c.hat(&self.grid, xi)).collect()
    }

    /// Table of component `i`, mode-major: entry `k * N + j` is
    /// `a(x′_j, ξ_k)`. The zero mode row is left at zero.
    pub fn component_table(&self, i: usize) -> Vec<C64> {
        let n = self.grid.len();
        let c = &self.comps[i];
        let mut out = vec![ZERO; n * n];
        for k in 1..n {
            out[k * n..(k + 1) * n].copy_from_slice(&c.column(&self.grid, self.grid.xi(k)));
        }
        out
    }

    /// Largest relative defect of `a(x′, tξ) = t^m a(x′, ξ)` over the grid
    /// wavenumbers with `|ξ| ≥ 1`, for `t = 2`. Non-finite values count as an
    /// infinite defect.
    pub fn homogeneity_defect(&self) -> f64 {
        let t = 2.0;
        let hg = &self.grid;
        let mut worst = 0.0f64;
        for c in &self.comps {
            for k in 0..hg.len() {
                let xi = hg.xi(k);
                if hg.xi_abs(k) < 1.0 {
                    continue;
                }
                let a = c.column(hg, xi);
                let b = c.column(hg, [t * xi[0], t * xi[1]]);
                let s = t.powf(c.order);
                for (u, v) in a.iter().zip(&b) {
                    if !(u.re.is_finite() && u.im.is_finite() && v.re.is_finite() && v.im.is_finite()) {
                        return f64::INFINITY;
                    }
                    let d = (v - u * s).norm() / (u.norm() * s).max(f64::MIN_POSITIVE);
                    if u.norm() > 0.0 {
                        worst = worst.max(d);
                    } else {
                        worst = worst.max(v.norm());
                    }
                }
            }
        }
        worst
    }
}

fn in_range(hg: &HGrid, mx: i64, my: i64) -> bool {
    2 * mx.abs() < hg.nx as i64 && 2 * my.abs() < hg.ny as i64
}

/// Contributions `(output mode, χ â)` of one input mode.
fn scatter(hg: &HGrid, c: &Cutoff, k: usize, hat: &[(usize, C64)]) -> Vec<(usize, C64)> {
    let xi = hg.xi(k);
    let r = hg.xi_abs(k);
    let (mx, my) = hg.modes(k);
    if r == 0.0 || !in_range(hg, mx, my) {
        return Vec::new();
    }
    let w = 1.0 - c.f(r);
    if w == 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for &(q, v) in hat {
        let rq = hg.xi_abs(q);
        if rq >= c.eps2 * r {
            continue;
        }
        let (qx, qy) = hg.modes(q);
        if !in_range(hg, qx, qy) || !in_range(hg, mx + qx, my + qy) {
            continue;
        }
        let chi = w * c.f(rq / r);
        let _ = xi;
        out.push((hg.index(mx + qx, my + qy), v * chi));
    }
    out
}

/// Sparse matrix of a paradifferential operator restricted to a set of
/// input modes.
#[derive(Clone, Debug)]
pub struct ParaMatrix {
    pub grid: Arc<HGrid>,
    cols: Vec<(usize, Vec<(usize, C64)>)>,
}

impl ParaMatrix {
    pub fn assemble(a: &Symbol, c: &Cutoff, inputs: &[usize]) -> Self {
        let hg = &a.grid;
        let cols = inputs.par_iter().map(|&k| (k, scatter(hg, c, k, &a.hat(hg.xi(k))))).collect();
        ParaMatrix { grid: hg.clone(), cols }
    }

    /// Operator on every mode of the grid.
    pub fn assemble_full(a: &Symbol, c: &Cutoff) -> Self {
        let all: Vec<usize> = (0..a.grid.len()).collect();
        Self::assemble(a, c, &all)
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(|c| c.1.len()).sum()
    }

    pub fn apply(&self, u: &Field2) -> Field2 {
        let mut out = Field2::zeros(&self.grid);
        for (k, col) in &self.cols {
            let uk = u.c[*k];
            if uk == ZERO {
                continue;
            }
            for &(o, v) in col {
                out.c[o] += v * uk;
            }
        }
        out
    }

    pub fn apply_adjoint(&self, v: &Field2) -> Field2 {
        let mut out = Field2::zeros(&self.grid);
        for (k, col) in &self.cols {
            let s: C64 = col.iter().map(|&(o, a)| a.conj() * v.c[o]).sum();
            out.c[*k] = s;
        }
        out
    }
}

fn support(u: &Field2) -> Vec<usize> {
    (0..u.c.len()).filter(|&k| u.c[k] != ZERO).collect()
}

/// `T_a u` by exact summation over mode pairs.
pub fn paradiff_apply(a: &Symbol, u: &Field2, c: &Cutoff) -> Field2 {
    assert!(a.grid.same(&u.grid), "symbol and field on different grids");
    ParaMatrix::assemble(a, c, &support(u)).apply(u)
}

/// Paraproduct `T_a u` for `a = a(x′)`.
pub fn paraproduct(a: &Field2, u: &Field2, c: &Cutoff) -> Field2 {
    assert!(a.grid.same(&u.grid), "paraproduct of fields on different grids");
    let hg = &u.grid;
    let hat: Vec<(usize, C64)> = support(a).into_iter().map(|q| (q, a.c[q])).collect();
    let mut out = Field2::zeros(hg);
    if hat.is_empty() {
        return out;
    }
    for k in support(u) {
        let uk = u.c[k];
        for (o, v) in scatter(hg, c, k, &hat) {
            out.c[o] += v * uk;
        }
    }
    out
}

/// Largest singular value of `op` on the span of `inputs`, by power
/// iteration on `op* op` from a fixed start vector.
pub fn band_norm(hg: &Arc<HGrid>, inputs: &[usize], iters: usize, op: impl Fn(&Field2) -> Field2, adj: impl Fn(&Field2) -> Field2) -> f64 {
    let mut u = Field2::zeros(hg);
    for (i, &k) in inputs.iter().enumerate() {
        let t = 0.618_033_988_749_895 * (i as f64 + 1.0) * std::f64::consts::TAU;
        u.c[k] = C64::new(t.cos(), t.sin());
    }
    let project = |f: &mut Field2| {
        let mut g = Field2::zeros(hg);
        for &k in inputs {
            g.c[k] = f.c[k];
        }
        *f = g;
    };
    let mut s = 0.0;
    for _ in 0..iters {
        let n = u.norm_l2();
        if n == 0.0 {
            return 0.0;
        }
        u = u.scale(1.0 / n);
        let v = op(&u);
        s = v.norm_l2();
        let mut w = adj(&v);
        project(&mut w);
        u = w;
    }
    s
}

/// Physical samples of `∇η` and its Hessian.
#[derive(Clone)]
struct Geom {
    ex: Vec<f64>,
    ey: Vec<f64>,
    exx: Vec<f64>,
    exy: Vec<f64>,
    eyy: Vec<f64>,
    delta: f64,
}

/// Values of `q± = δ(iξ·∇η ± λ)/(1+|∇η|²)` and its derivatives at one point.
struct QParts {
    q: C64,
    dxi: [C64; 2],
    dx: [C64; 2],
    lambda: f64,
    g2: f64,
}

impl Geom {
    fn new(eta: &Field2, delta: f64) -> Self {
        let (ex, ey) = (eta.dx(), eta.dy());
        Geom { ex: ex.to_phys(), ey: ey.to_phys(), exx: ex.dx().to_phys(), exy: ex.dy().to_phys(), eyy: ey.dy().to_phys(), delta }
    }

    fn lambda(&self, j: usize, xi: [f64; 2]) -> f64 {
        let (p0, p1) = (self.ex[j], self.ey[j]);
        let s = xi[0] * p0 + xi[1] * p1;
        ((1.0 + p0 * p0 + p1 * p1) * (xi[0] * xi[0] + xi[1] * xi[1]) - s * s).max(0.0).sqrt()
    }

    fn q(&self, j: usize, xi: [f64; 2], sign: f64) -> QParts {
        let p = [self.ex[j], self.ey[j]];
        let h = [[self.exx[j], self.exy[j]], [self.exy[j], self.eyy[j]]];
        let g = 1.0 + p[0] * p[0] + p[1] * p[1];
        let s = xi[0] * p[0] + xi[1] * p[1];
        let k2 = xi[0] * xi[0] + xi[1] * xi[1];
        let lam = self.lambda(j, xi);
        let d = self.delta;
        let q = (I * s + sign * lam) * (d / g);
        if lam == 0.0 {
            return QParts { q, dxi: [ZERO; 2], dx: [ZERO; 2], lambda: 0.0, g2: g };
        }
        let mut dxi = [ZERO; 2];
        let mut dx = [ZERO; 2];
        for a in 0..2 {
            let dlam_xi = (g * xi[a] - s * p[a]) / lam;
            dxi[a] = (I * p[a] + sign * dlam_xi) * (d / g);
            let hk = h[a];
            let pdh = p[0] * hk[0] + p[1] * hk[1];
            let xdh = xi[0] * hk[0] + xi[1] * hk[1];
            let dlam_x = (pdh * k2 - s * xdh) / lam;
            dx[a] = ((I * xdh + sign * dlam_x) * g - (I * s + sign * lam) * (2.0 * pdh)) * (d / (g * g));
        }
        QParts { q, dxi, dx, lambda: lam, g2: g }
    }

    /// `m^(0) = [i∇_ξm·∇_x m − b̌·∇_x m + č m] / (i b̌·ξ + 2m)`, with the
    /// denominator equal to `2δλ/(1+|∇η|²)`.
    fn m0(&self, j: usize, xi: [f64; 2]) -> C64 {
        let m = self.q(j, xi, 1.0);
        if m.lambda == 0.0 {
            return ZERO;
        }
        let d = self.delta;
        let b = [-2.0 * d * self.ex[j] / m.g2, -2.0 * d * self.ey[j] / m.g2];
        let cc = d * (self.exx[j] + self.eyy[j]) / m.g2;
        let num = I * (m.dxi[0] * m.dx[0] + m.dxi[1] * m.dx[1]) - (m.dx[0] * b[0] + m.dx[1] * b[1]) + m.q * cc;
        num / (2.0 * d * m.lambda / m.g2)
    }

    fn len(&self) -> usize {
        self.ex.len()
    }
}

/// `λ^(1)(x′, ξ) = √((1+|∇η|²)|ξ|² − (ξ·∇η)²)`.
pub fn dno_principal_symbol(eta: &Field2) -> Symbol {
    let g = Arc::new(Geom::new(eta, 1.0));
    Symbol::general(&eta.grid, 1.0, move |xi| (0..g.len()).map(|j| C64::new(g.lambda(j, xi), 0.0)).collect())
}

/// Symbols of the factorization `T_E ≈ (∂_w − T_N)(∂_w − T_M)` at orders 1
/// and 0. All four are scalar multiples of the 3×3 identity.
#[derive(Clone, Debug)]
pub struct Factorization {
    pub m1: Symbol,
    pub m0: Symbol,
    pub n1: Symbol,
    pub n0: Symbol,
    pub delta: f64,
}

impl Factorization {
    pub fn m(&self) -> Symbol {
        self.m1.plus(&self.m0)
    }

    pub fn n(&self) -> Symbol {
        self.n1.plus(&self.n0)
    }
}

pub fn factorization_symbols(eta: &Field2, delta: f64) -> Factorization {
    let hg = &eta.grid;
    let g = Arc::new(Geom::new(eta, delta));
    let col = |f: fn(&Geom, usize, [f64; 2]) -> C64| {
        let g = g.clone();
        move |xi: [f64; 2]| (0..g.len()).map(|j| f(&g, j, xi)).collect::<Vec<C64>>()
    };
    let m1 = Symbol::general(hg, 1.0, col(|g, j, xi| g.q(j, xi, 1.0).q));
    let m0 = Symbol::general(hg, 0.0, col(|g, j, xi| g.m0(j, xi)));
    let n1 = Symbol::general(hg, 1.0, col(|g, j, xi| g.q(j, xi, -1.0).q));
    let n0 = Symbol::general(
        hg,
        0.0,
        col(|g, j, xi| {
            let gg = 1.0 + g.ex[j] * g.ex[j] + g.ey[j] * g.ey[j];
            C64::new(g.delta * (g.exx[j] + g.eyy[j]) / gg, 0.0) - g.m0(j, xi)
        }),
    );
    Factorization { m1, m0, n1, n0, delta }
}

/// Coefficients `ǎ − 1`, `b̌`, `č` of the strip operator
/// `E = ∂_w² + ǎΔ + b̌·∇∂_w − č∂_w`.
#[derive(Clone, Debug)]
pub struct StripCoeffs {
    pub a_m1: Field2,
    pub b: [Field2; 2],
    pub c: Field2,
}

pub fn strip_coeffs(eta: &Field2, delta: f64) -> StripCoeffs {
    let hg = &eta.grid;
    let (ex, ey, lap) = (eta.dx().to_phys(), eta.dy().to_phys(), eta.laplacian().to_phys());
    let g: Vec<f64> = ex.iter().zip(&ey).map(|(a, b)| 1.0 + a * a + b * b).collect();
    let f = |v: Vec<f64>| Field2::from_phys(hg, &v).dealiased();
    StripCoeffs {
        a_m1: f(g.iter().map(|g| delta * delta / g - 1.0).collect()),
        b: [f((0..g.len()).map(|i| -2.0 * delta * ex[i] / g[i]).collect()), f((0..g.len()).map(|i| -2.0 * delta * ey[i] / g[i]).collect())],
        c: f((0..g.len()).map(|i| delta * lap[i] / g[i]).collect()),
    }
}

/// Vector potential and vorticity on the strip `z = δw + η`.
#[derive(Clone, Debug)]
pub struct StripFields {
    pub delta: f64,
    pub diffeo: Diffeo,
    pub a: VectorField3,
    pub omega: VectorField3,
}

impl StripFields {
    pub fn eta(&self) -> &Field2 {
        &self.diffeo.eta
    }
}

/// Resamples solver fields from the straightened domain of `from` onto the
/// strip with parameter `δ ∈ (0, h0/h)`.
pub fn strip_localize(a: &VectorField3, omega: &VectorField3, from: &Diffeo, delta: f64, h0: f64) -> Result<StripFields> {
    let upper = h0 / from.h;
    if !(delta > 0.0 && delta < upper) {
        return Err(Error::DeltaOutOfRange { delta, upper });
    }
    let strip = make_strip_diffeo(&from.eta, from.vgrid(), delta)?;
    let r = |v: &VectorField3| VectorField3([resample(&v.0[0], from, &strip), resample(&v.0[1], from, &strip), resample(&v.0[2], from, &strip)]);
    Ok(StripFields { delta, a: r(a), omega: r(omega), diffeo: strip })
}

/// Applies `f` to every level of `u`.
fn per_level(u: &Field3, f: impl Fn(usize, &Field2) -> Field2 + Sync) -> Field3 {
    let levels: Vec<Field2> = (0..u.vg.nw).into_par_iter().map(|l| f(l, &u.level(l))).collect();
    Field3::from_levels(&u.vg, &levels)
}

/// `B̂ = Â − T_{∂_w^ϱÂ} η`, level by level.
pub fn good_unknown(a: &VectorField3, eta: &Field2, delta: f64, c: &Cutoff) -> VectorField3 {
    let one = |f: &Field3| {
        let dw = f.dw().scale(1.0 / delta);
        per_level(f, |l, fl| fl - &paraproduct(&dw.level(l), eta, c))
    };
    VectorField3([one(&a.0[0]), one(&a.0[1]), one(&a.0[2])])
}

/// The source `F̂₀` of the paralinearized interior equation.
///
/// The commutator term `T_{[∂_w^ϱ, E]Â} η` vanishes identically because the
/// coefficients of `E` do not depend on `w`. The vorticity source `−ω̂` of
/// `T_E B̂` is not part of this sum; [`paralinearized_gii`] adds it.
pub fn f0_term(sf: &StripFields, c: &Cutoff) -> VectorField3 {
    let eta = sf.eta();
    let d = sf.delta;
    let k = strip_coeffs(eta, d);
    let (ex, ey) = (eta.dx(), eta.dy());
    let a_check = &k.a_m1 + &Field2::constant(&eta.grid, 1.0);
    let pp = |a: &Field2, u: &Field2| paraproduct(a, u, c);
    let one = |a: &Field3, om: &Field3| -> Field3 {
        let dr = a.dw().scale(1.0 / d);
        let (dr_x, dr_y, dr_lap, dr_w) = (dr.dx(), dr.dy(), dr.lap_h(), dr.dw());
        let (a_lap, aw) = (a.lap_h(), a.dw());
        let (aw_x, aw_y) = (aw.dx(), aw.dy());
        let om_w = om.dw();
        per_level(om, |l, oml| {
            let mut s = -&pp(&k.a_m1, oml);
            s -= &pp(oml, &k.a_m1);
            s += &pp(&a_check.prod(&om_w.level(l)).scale(1.0 / d), eta);
            let br = &pp(&dr_lap.level(l), eta) + &(&pp(&dr_x.level(l), &ex) + &pp(&dr_y.level(l), &ey)).scale(2.0);
            s -= &br;
            s -= &pp(&k.a_m1, &br);
            let drw = dr_w.level(l);
            s -= &(&pp(&k.b[0], &pp(&drw, &ex)) + &pp(&k.b[1], &pp(&drw, &ey)));
            s -= &pp(&a_lap.level(l), &k.a_m1);
            s -= &(&pp(&aw_x.level(l), &k.b[0]) + &pp(&aw_y.level(l), &k.b[1]));
            s += &pp(&aw.level(l), &k.c);
            s
        })
    };
    VectorField3([one(&sf.a.0[0], &sf.omega.0[0]), one(&sf.a.0[1], &sf.omega.0[1]), one(&sf.a.0[2], &sf.omega.0[2])])
}

/// `∫_{−h}^0 (T_𝓔 F)(z) dz` for the horizontal components of `F`, with
/// `𝓔(z) = e^{−z n^(1)} (1 − i (z²/2) ∇_ξ n^(1)·∇_x n^(1))`.
///
/// `Re n^(1) < 0`, so the kernel decays into the fluid.
pub fn surface_flux(eta: &Field2, delta: f64, f: [&Field3; 2], c: &Cutoff) -> [Field2; 2] {
    let hg = &eta.grid;
    let vg = &f[0].vg;
    let g = Geom::new(eta, delta);
    let nw = vg.nw;
    let n = hg.len();
    let inputs: Vec<usize> = (0..n).filter(|&k| (0..nw).any(|l| f[0].c[l * n + k] != ZERO || f[1].c[l * n + k] != ZERO)).collect();
    let parts: Vec<[Vec<(usize, C64)>; 2]> = inputs
        .par_iter()
        .map(|&k| {
            let xi = hg.xi(k);
            if 1.0 - c.f(hg.xi_abs(k)) == 0.0 {
                return [Vec::new(), Vec::new()];
            }
            let mut cols = [vec![ZERO; n], vec![ZERO; n]];
            let fk: Vec<[C64; 2]> = (0..nw).map(|l| [f[0].c[l * n + k], f[1].c[l * n + k]]).collect();
            for j in 0..n {
                let q = g.q(j, xi, -1.0);
                let corr = -0.5 * I * (q.dxi[0] * q.dx[0] + q.dxi[1] * q.dx[1]);
                let mut acc = [ZERO; 2];
                for (l, &z) in vg.nodes.iter().enumerate() {
                    let e = (-z * q.q).exp() * (1.0 + corr * z * z) * vg.weights[l];
                    acc[0] += e * fk[l][0];
                    acc[1] += e * fk[l][1];
                }
                cols[0][j] = acc[0];
                cols[1][j] = acc[1];
            }
            cols.map(|mut col| {
                hg.forward(&mut col);
                let hat: Vec<(usize, C64)> = col.into_iter().enumerate().filter(|(_, v)| *v != ZERO).collect();
                scatter(hg, c, k, &hat)
            })
        })
        .collect();
    let mut out = [Field2::zeros(hg), Field2::zeros(hg)];
    for p in parts {
        for (i, col) in p.iter().enumerate() {
            for &(o, v) in col {
                out[i].c[o] += v;
            }
        }
    }
    out
}

/// The row operator `λ_II` acting on surface traces of `B̂`:
/// `T_{1+|∇η|²}[∂_x B̂₂ − ∂_y B̂₁ + δ⁻¹(T_{η_y}T_M B̂₁ − T_{η_x}T_M B̂₂)]`.
#[derive(Clone, Debug)]
pub struct LambdaII {
    pub eta: Field2,
    pub m: Symbol,
    pub delta: f64,
}

pub fn lambda_ii(eta: &Field2, fac: &Factorization) -> LambdaII {
    LambdaII { eta: eta.clone(), m: fac.m(), delta: fac.delta }
}

impl LambdaII {
    /// Pointwise row symbol `(1+|∇η|²)(−iξ₂ + η_y m/δ, iξ₁ − η_x m/δ, 0)` at
    /// physical sample `j`, with `m` the full symbol or its principal part.
    pub fn row(&self, j: usize, xi: [f64; 2], principal: bool) -> [C64; 3] {
        let (ex, ey) = (self.eta.dx().to_phys()[j], self.eta.dy().to_phys()[j]);
        let g = 1.0 + ex * ex + ey * ey;
        let m = if principal { self.m.principal().eval(j, xi) } else { self.m.eval(j, xi) };
        let blk = self.eta_block(j, xi, principal);
        [(C64::new(0.0, -xi[1]) + blk[0]) * g, (C64::new(0.0, xi[0]) + blk[1]) * g, ZERO].map(|v| v + ZERO * m)
    }

    /// The part of the row linear in `∇η` for frozen `M`, before the weight.
    pub fn eta_block(&self, j: usize, xi: [f64; 2], principal: bool) -> [C64; 3] {
        let (ex, ey) = (self.eta.dx().to_phys()[j], self.eta.dy().to_phys()[j]);
        let m = if principal { self.m.principal().eval(j, xi) } else { self.m.eval(j, xi) };
        [m * (ey / self.delta), m * (-ex / self.delta), ZERO]
    }

    pub fn apply(&self, b: &[Field2; 3], c: &Cutoff) -> Field2 {
        let (ex, ey) = (self.eta.dx(), self.eta.dy());
        let tm = |u: &Field2| paradiff_apply(&self.m, u, c);
        let dx = Symbol::multiplier(&self.eta.grid, 1.0, |xi| C64::new(0.0, xi[0]));
        let dy = Symbol::multiplier(&self.eta.grid, 1.0, |xi| C64::new(0.0, xi[1]));
        let mut s = &paradiff_apply(&dx, &b[1], c) - &paradiff_apply(&dy, &b[0], c);
        let t = &paraproduct(&ey, &tm(&b[0]), c) - &paraproduct(&ex, &tm(&b[1]), c);
        s += &t.scale(1.0 / self.delta);
        weight_apply(&self.eta, &s, c)
    }
}

/// `T_{1+|∇η|²} u`.
fn weight_apply(eta: &Field2, u: &Field2, c: &Cutoff) -> Field2 {
    let g2 = eta.grad().dot(&eta.grad());
    &paraproduct(&Field2::constant(&eta.grid, 1.0), u, c) + &paraproduct(&g2, u, c)
}

/// Paralinearized value of an operator and its residual against the exact
/// trace.
#[derive(Clone, Debug)]
pub struct Paralinearization {
    pub value: Field2,
    pub residual: Field2,
}

/// Paralinearized `G_II[η]ω̂`:
/// `T_{λ_II}B̂ + δ⁻¹T_{1+|∇η|²}T_{∇⊥η}·f̂ + T_{1+|∇η|²}(…) − T_{∇η}·V̂ − T_{V̂}·∇η − T_{|∇η|²}Ŵ`
/// with `f̂ = ∫(T_𝓔(F̂₀ − ω̂))_h dz` and `(V̂, Ŵ) = curl^ϱÂ|_{w=0}`.
pub fn paralinearized_gii_value(sf: &StripFields, c: &Cutoff) -> Field2 {
    let eta = sf.eta();
    let d = sf.delta;
    let hg = &eta.grid;
    let (ex, ey) = (eta.dx(), eta.dy());
    let fac = factorization_symbols(eta, d);
    let b = good_unknown(&sf.a, eta, d, c).surface();
    let src = &f0_term(sf, c) - &sf.omega;
    let fh = surface_flux(eta, d, [&src.0[0], &src.0[1]], c);
    let pp = |a: &Field2, u: &Field2| paraproduct(a, u, c);
    let lam = lambda_ii(eta, &fac).apply(&b, c);
    let [a1, a2, _] = &sf.a.0;
    let (a1w, a2w) = (a1.dw(), a2.dw());
    let (a1yw, a2xw) = (a1w.dy().surface(), a2w.dx().surface());
    let (a1ww, a2ww) = (a1w.dw().surface(), a2w.dw().surface());
    let mut inner = (&pp(&ey, &fh[0]) - &pp(&ex, &fh[1])).scale(1.0 / d);
    inner += &(&pp(&a2xw, eta) - &pp(&a1yw, eta)).scale(1.0 / d);
    inner += &(&pp(&ey, &pp(&a1ww, eta)) - &pp(&ex, &pp(&a2ww, eta))).scale(1.0 / (d * d));
    let cv = flat_curl(&sf.a, &sf.diffeo).surface();
    let g2 = ex.prod(&ex) + ey.prod(&ey);
    let mut v = &lam + &weight_apply(eta, &inner, c);
    v -= &(&pp(&ex, &cv[0]) + &pp(&ey, &cv[1]));
    v -= &(&pp(&cv[0], &ex) + &pp(&cv[1], &ey));
    v -= &pp(&g2, &cv[2]);
    let _ = hg;
    v
}

pub fn paralinearized_gii(sf: &StripFields, g_ii: &Field2, c: &Cutoff) -> Paralinearization {
    let value = paralinearized_gii_value(sf, c);
    let residual = g_ii - &value;
    Paralinearization { value, residual }
}

/// Paralinearized `G_I[η]Φ = T_λ(Φ − T_W η) − T_V·∇η − T_{div V}η` with
/// `λ = λ^(1)`, `W = (G_I + ∇η·∇Φ)/(1+|∇η|²)` and `V = ∇Φ − W∇η`.
pub fn paralinearized_gi(eta: &Field2, phi: &Field2, g_i: &Field2, c: &Cutoff) -> Paralinearization {
    let hg = &eta.grid;
    let (ex, ey, px, py) = (eta.dx().to_phys(), eta.dy().to_phys(), phi.dx().to_phys(), phi.dy().to_phys());
    let gp = g_i.to_phys();
    let n = ex.len();
    let w: Vec<f64> = (0..n).map(|i| (gp[i] + ex[i] * px[i] + ey[i] * py[i]) / (1.0 + ex[i] * ex[i] + ey[i] * ey[i])).collect();
    let wf = Field2::from_phys(hg, &w).dealiased();
    let v1 = Field2::from_phys(hg, &(0..n).map(|i| px[i] - w[i] * ex[i]).collect::<Vec<_>>()).dealiased();
    let v2 = Field2::from_phys(hg, &(0..n).map(|i| py[i] - w[i] * ey[i]).collect::<Vec<_>>()).dealiased();
    let divv = &v1.dx() + &v2.dy();
    let pp = |a: &Field2, u: &Field2| paraproduct(a, u, c);
    let u = phi - &pp(&wf, eta);
    let mut value = paradiff_apply(&dno_principal_symbol(eta), &u, c);
    value -= &(&pp(&v1, &eta.dx()) + &pp(&v2, &eta.dy()));
    value -= &pp(&divv, eta);
    let residual = g_i - &value;
    Paralinearization { value, residual }
}

/// Strip-localized `Â`, `ω̂` of a vector potential `a` with vorticity `omega`
/// given on the domain of `d`, and the field `f(z) = z` sampled there.
pub fn physical_height(d: &Diffeo) -> Field3 {
    let vg = d.vgrid();
    let hg = d.hgrid();
    &Field3::separable(&Field2::constant(hg, 1.0), vg, |w| w) + &d.sigma
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_trivial_diffeo;
    use crate::spectral::VGrid;
    use approx::assert_abs_diff_eq;

    fn unit(hg: &Arc<HGrid>, mx: i64, my: i64) -> Field2 {
        let mut u = Field2::zeros(hg);
        u.c[hg.index(mx, my)] = C64::new(0.5, 0.0);
        u.c[hg.index(-mx, -my)] = C64::new(0.5, 0.0);
        u
    }

    #[test]
    fn cutoff_rejects_bad_parameters() {
        assert!(Cutoff::new(0.1, 0.45).is_ok());
        assert!(Cutoff::new(0.2, 0.3).is_err());
        assert!(Cutoff::new(0.1, 0.5).is_err());
        assert!(Cutoff::new(0.0, 0.3).is_err());
    }

    #[test]
    fn cutoff_properties_on_grid() {
        let r = Cutoff::default().check(&HGrid::square(16));
        assert!(r.pass(), "{r:?}");
        let c = Cutoff::default();
        assert_eq!(c.chi([1.0, 0.0], [0.0, 0.0]), 0.0);
        assert_eq!(c.chi([0.5, 0.0], [1.0, 0.0]), 0.0);
        assert_eq!(c.chi([0.2, 0.0], [3.0, 0.0]), 1.0);
    }

    #[test]
    fn identity_symbol_keeps_high_modes() {
        let hg = HGrid::square(32);
        let one = Symbol::multiplier(&hg, 0.0, |_| C64::new(1.0, 0.0));
        let u = unit(&hg, 5, 2);
        let v = paradiff_apply(&one, &u, &Cutoff::default());
        assert!((&v - &u).norm_l2() < 1e-15);
        let k = Field2::constant(&hg, 2.0);
        assert_eq!(paradiff_apply(&one, &k, &Cutoff::default()).norm_l2(), 0.0);
        assert_eq!(paradiff_apply(&one, &Field2::zeros(&hg), &Cutoff::default()).norm_l2(), 0.0);
    }

    #[test]
    fn low_frequency_paraproduct_is_exact() {
        let hg = HGrid::square(32);
        let a = Field2::from_fn(&hg, |x, _| 1.0 + 0.3 * x.cos());
        let u = unit(&hg, 8, 0);
        let c = Cutoff::default();
        let v = paraproduct(&a, &u, &c);
        assert!((&v - &a.prod(&u)).norm_l2() < 1e-14);
        let v2 = paradiff_apply(&Symbol::function(&a), &u, &c);
        assert!((&v2 - &v).norm_l2() < 1e-14);
    }

    #[test]
    fn multiplier_symbol_is_fourier_multiplier() {
        let hg = HGrid::square(32);
        let u = Field2::from_fn(&hg, |x, y| (3.0 * x + y).sin() + (2.0 * y).cos());
        let s = Symbol::multiplier(&hg, 1.0, |xi| C64::new(xi[0].hypot(xi[1]), 0.0));
        let v = paradiff_apply(&s, &u, &Cutoff::default());
        assert!((&v - &u.radial(|k| k)).norm_l2() < 1e-14);
    }

    #[test]
    fn adjoint_matches_inner_product() {
        let hg = HGrid::square(16);
        let eta = Field2::from_fn(&hg, |x, y| 0.2 * x.cos() + 0.1 * (x + y).sin());
        let c = Cutoff::default();
        let m = ParaMatrix::assemble_full(&dno_principal_symbol(&eta), &c);
        let u = Field2::from_fn(&hg, |x, y| (4.0 * x).cos() + (5.0 * y + x).sin());
        let v = Field2::from_fn(&hg, |x, y| (3.0 * x - y).sin() + (4.0 * y).cos());
        let lhs: C64 = m.apply(&u).c.iter().zip(&v.c).map(|(a, b)| a * b.conj()).sum();
        let rhs: C64 = u.c.iter().zip(&m.apply_adjoint(&v).c).map(|(a, b)| a * b.conj()).sum();
        assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn principal_symbol_examples() {
        let hg = HGrid::square(16);
        let s = dno_principal_symbol(&Field2::zeros(&hg));
        for k in 0..hg.len() {
            assert_abs_diff_eq!(s.eval(3, hg.xi(k)).re, hg.xi_abs(k), epsilon = 1e-14);
        }
        let eta = Field2::from_fn(&hg, |x, _| x.sin());
        let s = dno_principal_symbol(&eta);
        // η_x = 1 at x = 0, so ∇η ⟂ ξ = (0, 1) there.
        assert_abs_diff_eq!(s.eval(0, [0.0, 1.0]).re, 2f64.sqrt(), epsilon = 1e-14);
        assert!(s.homogeneity_defect() < 1e-14);
    }

    #[test]
    fn flat_factorization() {
        let hg = HGrid::square(16);
        let f = factorization_symbols(&Field2::zeros(&hg), 1.0);
        for k in 1..hg.len() {
            let xi = hg.xi(k);
            let r = hg.xi_abs(k);
            assert_abs_diff_eq!(f.m1.eval(5, xi).re, r, epsilon = 1e-14);
            assert_abs_diff_eq!(f.n1.eval(5, xi).re, -r, epsilon = 1e-14);
            assert_eq!(f.m0.eval(5, xi), ZERO);
        }
    }

    #[test]
    fn factorization_orders_cancel() {
        // −ǎ|ξ|² + i b̌·ξ m¹ + (m¹)² = 0 and the order-one equation
        // −č m¹ + i b̌·ξ m⁰ + b̌·∇m¹ + 2m¹m⁰ − i∇_ξm¹·∇m¹ = 0.
        let hg = HGrid::square(16);
        let eta = Field2::from_fn(&hg, |x, y| 0.2 * x.cos() + 0.15 * (x + 2.0 * y).sin());
        let d = 0.7;
        let g = Geom::new(&eta, d);
        for j in [0, 17, 100, 201] {
            for xi in [[1.0, 0.0], [3.0, -2.0], [-5.0, 4.0]] {
                let m = g.q(j, xi, 1.0);
                let gg = m.g2;
                let a = d * d / gg;
                let b = [-2.0 * d * g.ex[j] / gg, -2.0 * d * g.ey[j] / gg];
                let cc = d * (g.exx[j] + g.eyy[j]) / gg;
                let ibx = I * (b[0] * xi[0] + b[1] * xi[1]);
                let k2 = xi[0] * xi[0] + xi[1] * xi[1];
                let o2 = -a * k2 + ibx * m.q + m.q * m.q;
                assert!(o2.norm() < 1e-12 * k2);
                let m0 = g.m0(j, xi);
                let o1 = -cc * m.q + ibx * m0 + b[0] * m.dx[0] + b[1] * m.dx[1] + 2.0 * m.q * m0 - I * (m.dxi[0] * m.dx[0] + m.dxi[1] * m.dx[1]);
                assert!(o1.norm() < 1e-12 * k2.sqrt());
            }
        }
    }

    #[test]
    fn analytic_gradients_match_spectral() {
        let hg = HGrid::square(32);
        let eta = Field2::from_fn(&hg, |x, y| 0.2 * x.cos() + 0.1 * (x + 2.0 * y).sin());
        let g = Geom::new(&eta, 0.6);
        let xi = [2.0, -3.0];
        for sign in [1.0, -1.0] {
            let mut col: Vec<C64> = (0..hg.len()).map(|j| g.q(j, xi, sign).q).collect();
            hg.forward(&mut col);
            let mut dx = col.clone();
            for (k, v) in dx.iter_mut().enumerate() {
                *v *= I * hg.xi_deriv(k)[0];
            }
            hg.inverse(&mut dx);
            let err = (0..hg.len()).map(|j| (dx[j] - g.q(j, xi, sign).dx[0]).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10, "{err}");
            let e = 1e-6;
            let j = 77;
            let fd = (g.q(j, [xi[0], xi[1] + e], sign).q - g.q(j, [xi[0], xi[1] - e], sign).q) / (2.0 * e);
            assert!((fd - g.q(j, xi, sign).dxi[1]).norm() < 1e-8);
        }
    }

    #[test]
    fn strip_localize_examples() {
        let hg = HGrid::square(16);
        let vg = VGrid::new(1.0, 24);
        let eta = Field2::from_fn(&hg, |x, y| 0.1 * x.cos() + 0.05 * y.sin());
        let d = make_trivial_diffeo(&eta, &vg, 0.5).unwrap();
        let z = physical_height(&d);
        let zero = VectorField3::zeros(&hg, &vg);
        let sf = strip_localize(&VectorField3([z.clone(), z.clone(), z]), &zero, &d, 0.4, 0.5).unwrap();
        let want = &Field3::separable(&Field2::constant(&hg, 1.0), &vg, |w| 0.4 * w) + &Field3::broadcast(&eta, &vg);
        assert!((&sf.a.0[0] - &want).max_abs() < 1e-12);
        assert!(matches!(strip_localize(&zero, &zero, &d, 0.6, 0.5), Err(Error::DeltaOutOfRange { .. })));
        assert!(matches!(strip_localize(&zero, &zero, &d, 0.0, 0.5), Err(Error::DeltaOutOfRange { .. })));
        let flat = make_trivial_diffeo(&Field2::zeros(&hg), &vg, 0.5).unwrap();
        let f = Field3::from_fn(&hg, &vg, |x, y, w| (x + w).sin() * y.cos());
        let sf = strip_localize(&VectorField3([f.clone(), f.clone(), f.clone()]), &zero, &flat, 1.0 - 1e-15, 1.0).unwrap();
        assert!((&sf.a.0[1] - &f).max_abs() < 1e-12);
    }

    #[test]
    fn good_unknown_examples() {
        let hg = HGrid::square(16);
        let vg = VGrid::new(1.0, 12);
        let c = Cutoff::default();
        let a = VectorField3([
            Field3::from_fn(&hg, &vg, |x, _, w| x.sin() * w.exp()),
            Field3::from_fn(&hg, &vg, |_, y, w| y.cos() * w),
            Field3::zeros(&hg, &vg),
        ]);
        let b = good_unknown(&a, &Field2::zeros(&hg), 0.5, &c);
        assert!((&b - &a).norm_l2() == 0.0);
        let flat = VectorField3([Field3::broadcast(&Field2::from_fn(&hg, |x, _| x.cos()), &vg), Field3::zeros(&hg, &vg), Field3::zeros(&hg, &vg)]);
        let eta = Field2::from_fn(&hg, |x, _| 0.1 * (5.0 * x).cos());
        let b = good_unknown(&flat, &eta, 0.5, &c);
        assert!((&b - &flat).norm_l2() < 1e-12);
        let b1 = good_unknown(&a, &eta, 0.5, &c);
        let b2 = good_unknown(&a.scale(-2.5), &eta, 0.5, &c);
        assert!((&b2 - &b1.scale(-2.5)).norm_l2() < 1e-13);
    }

    #[test]
    fn f0_vanishes_for_flat_or_empty_data() {
        let hg = HGrid::square(16);
        let vg = VGrid::new(1.0, 12);
        let c = Cutoff::default();
        let flat = make_trivial_diffeo(&Field2::zeros(&hg), &vg, 0.5).unwrap();
        let a = VectorField3([Field3::from_fn(&hg, &vg, |x, _, w| x.sin() * w.exp()), Field3::zeros(&hg, &vg), Field3::zeros(&hg, &vg)]);
        let om = VectorField3([Field3::zeros(&hg, &vg), Field3::from_fn(&hg, &vg, |x, _, _| x.cos()), Field3::zeros(&hg, &vg)]);
        // Only −T_{ǎ−1}ω̂ survives at η = 0, with ǎ − 1 = δ² − 1 constant.
        let sf = strip_localize(&a, &om, &flat, 0.9, 1.0).unwrap();
        let one = Field2::constant(&hg, 1.0);
        let want = per_level(&sf.omega.0[1], |_, o| paraproduct(&one, o, &c).scale(1.0 - 0.81));
        let f0 = f0_term(&sf, &c);
        assert!((&f0.0[1] - &want).norm_l2() < 1e-13);
        assert!(f0.0[0].norm_l2() < 1e-13 && f0.0[2].norm_l2() < 1e-13);
        let sf = strip_localize(&a, &om, &flat, 1.0 - 1e-12, 1.0).unwrap();
        assert!(f0_term(&sf, &c).norm_l2() < 1e-10);
        let eta = Field2::from_fn(&hg, |x, _| 0.05 * x.cos());
        let d = make_trivial_diffeo(&eta, &vg, 0.5).unwrap();
        let z = VectorField3::zeros(&hg, &vg);
        let sf = strip_localize(&z, &z, &d, 0.4, 0.5).unwrap();
        assert_eq!(f0_term(&sf, &c).norm_l2(), 0.0);
    }

    #[test]
    fn lambda_ii_flat_row() {
        let hg = HGrid::square(16);
        let eta = Field2::zeros(&hg);
        let l = lambda_ii(&eta, &factorization_symbols(&eta, 0.5));
        let xi = [2.0, -3.0];
        let r = l.row(4, xi, false);
        assert_eq!(r, [C64::new(0.0, 3.0), C64::new(0.0, 2.0), ZERO]);
        let u = [unit(&hg, 0, 2), unit(&hg, 3, 1), Field2::zeros(&hg)];
        let v = l.apply(&u, &Cutoff::default());
        assert!((&v - &(&u[1].dx() - &u[0].dy())).norm_l2() < 1e-14);
    }

    #[test]
    fn lambda_ii_block_is_linear_in_eta() {
        let hg = HGrid::square(16);
        let eta = Field2::from_fn(&hg, |x, y| 0.1 * x.cos() + 0.05 * y.sin());
        let fac = factorization_symbols(&eta, 0.5);
        let l1 = lambda_ii(&eta, &fac);
        let l2 = LambdaII { eta: eta.scale(2.0), m: fac.m(), delta: 0.5 };
        for j in [0, 9, 130] {
            let (a, b) = (l1.eta_block(j, [1.0, 2.0], false), l2.eta_block(j, [1.0, 2.0], false));
            for i in 0..3 {
                assert!((b[i] - a[i] * 2.0).norm() < 1e-14);
            }
        }
        let p = |t: f64| l1.row(9, [t, 2.0 * t], true);
        let (a, b) = (p(1.5), p(3.0));
        for i in 0..3 {
            assert!((b[i] - a[i] * 2.0).norm() < 1e-12);
        }
    }
}
