//! Homogeneous expansion of the generalized Dirichlet–Neumann operator in
//! powers of the surface elevation.
//!
//! Every order is produced by the Euler identity `Σ j G_j = dG[η](η)`: the
//! differential is expanded with [`Jet`] arithmetic and the degree-`j` part is
//! divided by `j`. Lower-order operators applied to new arguments are obtained
//! by recursing on the same routine, so each order is an exact `j`-linear form
//! in `η`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Diffeo, DiffeoKind};
use crate::solver::{g_ii_trace, solve_vector_potential, SolverOpts, SurfaceState, VorticityData};
use crate::spectral::{Field2, Field3, VGrid, VectorField2, VectorField3, C64};

/// Default cap on the expansion order.
pub const MAX_ORDER: usize = 6;

/// Coefficient types a [`Jet`] can carry.
pub trait JetField: Clone {
    fn zero_like(&self) -> Self;
    fn plus(&self, o: &Self) -> Self;
    fn times(&self, s: f64) -> Self;
    /// Pointwise product, dealiased.
    fn prod_with(&self, o: &Self) -> Self;
}

impl JetField for Field2 {
    fn zero_like(&self) -> Self {
        Field2::zeros(&self.grid)
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn times(&self, s: f64) -> Self {
        self.scale(s)
    }
    fn prod_with(&self, o: &Self) -> Self {
        self.prod(o)
    }
}

impl JetField for Field3 {
    fn zero_like(&self) -> Self {
        Field3::zeros(&self.hg, &self.vg)
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn times(&self, s: f64) -> Self {
        self.scale(s)
    }
    fn prod_with(&self, o: &Self) -> Self {
        self.prod(o)
    }
}

/// Truncated power series `Σ_{j ≤ D} εʲ c_j`.
#[derive(Clone, Debug)]
pub struct Jet<F> {
    pub c: Vec<F>,
}

impl<F: JetField> Jet<F> {
    pub fn new(c: Vec<F>) -> Self {
        assert!(!c.is_empty(), "a jet needs at least one coefficient");
        Jet { c }
    }

    /// `c₀` padded with zeros up to degree `d`.
    pub fn constant(c0: F, d: usize) -> Self {
        let z = c0.zero_like();
        let mut c = vec![c0];
        c.resize(d + 1, z);
        Jet { c }
    }

    /// `ε f` truncated at degree `d`.
    pub fn linear(f: F, d: usize) -> Self {
        let mut c = vec![f.zero_like(); d + 1];
        if d >= 1 {
            c[1] = f;
        }
        Jet { c }
    }

    pub fn degree(&self) -> usize {
        self.c.len() - 1
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.degree(), o.degree());
        Jet { c: self.c.iter().zip(&o.c).map(|(a, b)| a.plus(b)).collect() }
    }

    pub fn scale(&self, s: f64) -> Self {
        Jet { c: self.c.iter().map(|a| a.times(s)).collect() }
    }

    /// Truncated Cauchy product.
    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.degree(), o.degree());
        let d = self.degree();
        let c = (0..=d)
            .map(|n| {
                let mut acc = self.c[0].zero_like();
                for k in 0..=n {
                    acc = acc.plus(&self.c[k].prod_with(&o.c[n - k]));
                }
                acc
            })
            .collect();
        Jet { c }
    }

    /// Multiplies every coefficient by a fixed field.
    pub fn mul_field(&self, f: &F) -> Self {
        Jet { c: self.c.iter().map(|a| a.prod_with(f)).collect() }
    }

    /// Reciprocal of `1 + ε(...)`. The constant coefficient is assumed to be
    /// the unit field and is not inspected beyond the product structure.
    pub fn reciprocal_unit(&self) -> Self {
        let d = self.degree();
        let one = self.c[0].clone();
        let mut r = vec![one];
        for n in 1..=d {
            let mut acc = self.c[0].zero_like();
            for k in 1..=n {
                acc = acc.plus(&self.c[k].prod_with(&r[n - k]));
            }
            r.push(acc.times(-1.0));
        }
        Jet { c: r }
    }

    /// `Σ_j sʲ c_j`.
    pub fn eval(&self, s: f64) -> F {
        let mut acc = self.c[0].zero_like();
        for (j, cj) in self.c.iter().enumerate() {
            acc = acc.plus(&cj.times(s.powi(j as i32)));
        }
        acc
    }
}

/// Per-order output of [`expand`].
#[derive(Clone, Debug)]
pub struct ExpansionResult {
    /// `G_j = G_{j,I} + G_{j,II}` for `j = 0..=J`.
    pub g: Vec<Field2>,
    pub g_i: Vec<Field2>,
    pub g_ii: Vec<Field2>,
    pub gamma: Vec<VectorField3>,
    /// Coefficients of `ω̃·N|₀ = ν₀ + ν₁`.
    pub nu: Vec<Field2>,
    pub k: Vec<VectorField2>,
    pub w: Vec<Field2>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderNorms {
    pub order: usize,
    pub g: f64,
    pub g_i: f64,
    pub g_ii: f64,
    pub gamma: f64,
    /// Fraction of the L² norm of `G_j` carried by `|ξ| > ξ_max / 2`.
    pub hf_fraction: f64,
}

impl ExpansionResult {
    pub fn order(&self) -> usize {
        self.g.len() - 1
    }

    pub fn sum(&self) -> Field2 {
        let mut acc = self.g[0].clone();
        for gj in &self.g[1..] {
            acc += gj;
        }
        acc
    }

    pub fn manifest(&self) -> Vec<OrderNorms> {
        (0..self.g.len())
            .map(|j| OrderNorms {
                order: j,
                g: self.g[j].norm_l2(),
                g_i: self.g_i[j].norm_l2(),
                g_ii: self.g_ii[j].norm_l2(),
                gamma: self.gamma.get(j).map_or(0.0, |v| v.norm_l2()),
                hf_fraction: hf_fraction(&self.g[j]),
            })
            .collect()
    }
}

fn hf_fraction(f: &Field2) -> f64 {
    let g = &f.grid;
    let kmax = (0..g.len()).map(|k| g.xi_abs(k)).fold(0.0, f64::max);
    let (mut hi, mut all) = (0.0, 0.0);
    for (k, v) in f.c.iter().enumerate() {
        let e = v.norm_sqr();
        all += e;
        if g.xi_abs(k) > 0.5 * kmax {
            hi += e;
        }
    }
    if all == 0.0 {
        0.0
    } else {
        (hi / all).sqrt()
    }
}

fn require_trivial(d: &Diffeo) -> Result<()> {
    match d.kind {
        DiffeoKind::Trivial => Ok(()),
        DiffeoKind::Regularizing { .. } => Err(Error::UnsupportedDiffeo("regularizing")),
        DiffeoKind::Strip { .. } => Err(Error::UnsupportedDiffeo("strip")),
    }
}

/// `|ξ| tanh(h|ξ|) Φ̂`.
pub fn g0_i(phi: &Field2, h: f64) -> Field2 {
    phi.radial(|k| k * (h * k).tanh())
}

/// Flat rotational operator:
/// `∇·∫ sinh(|ξ|(ζ+h)) / (|ξ| cosh(h|ξ|)) ω̂_h^⊥(ζ) dζ` plus the surface
/// term from `-∇⊥Δ⁻¹ω̃₃|₀`, which is a perpendicular gradient and drops out
/// under the divergence.
pub fn g0_ii(omega: &VectorField3) -> Field2 {
    let hg = omega.0[0].hg.clone();
    let vg = omega.0[0].vg.clone();
    let mut out = Field2::zeros(&hg);
    let integ = |col: &[C64], kern: &[f64]| -> C64 {
        let re: Vec<f64> = col.iter().zip(kern).map(|(v, q)| v.re * q).collect();
        let im: Vec<f64> = col.iter().zip(kern).map(|(v, q)| v.im * q).collect();
        C64::new(vg.integrate(&re), vg.integrate(&im))
    };
    for k in 0..hg.len() {
        let xi = hg.xi_abs(k);
        if xi == 0.0 {
            continue;
        }
        let kern = kernel_column(&vg, xi);
        let [d1, d2] = hg.xi_deriv(k);
        let a1 = integ(&omega.0[0].column(k), &kern);
        let a2 = integ(&omega.0[1].column(k), &kern);
        out.c[k] = C64::i() * (d1 * a2 - d2 * a1);
    }
    out
}

/// `sinh(k(ζ+h)) / (k cosh(kh))` at the vertical nodes, overflow-safe.
fn kernel_column(vg: &VGrid, k: f64) -> Vec<f64> {
    let h = vg.h;
    vg.nodes
        .iter()
        .map(|&z| {
            let e = (k * z).exp();
            e * (-(-2.0 * k * (z + h)).exp_m1()) / (k * (1.0 + (-2.0 * k * h).exp()))
        })
        .collect()
}

/// `1/(1 + ε²|∇η|²)` as a jet of degree `d`.
fn inv_metric_jet(eta: &Field2, d: usize) -> Jet<Field2> {
    let ge = eta.grad();
    let n2 = ge.dot(&ge);
    let mut c = vec![Field2::constant(&eta.grid, 1.0)];
    c.resize(d + 1, Field2::zeros(&eta.grid));
    if d >= 2 {
        c[2] = n2;
    }
    Jet::new(c).reciprocal_unit()
}

fn div_times_eta(f: &VectorField2, eta: &Field2) -> Field2 {
    f.scale_by(eta).div()
}

/// Orders `0..=J` of the classical Dirichlet–Neumann operator `G[η]Φ`.
pub fn gj_i(eta: &Field2, phi: &Field2, h: f64, order: usize) -> Vec<Field2> {
    let mut g = vec![g0_i(phi, h)];
    if order == 0 {
        return g;
    }
    let ge = eta.grad();
    let gp = phi.grad();
    let gpe = gp.dot(&ge);
    let rinv = inv_metric_jet(eta, order);
    for j in 1..=order {
        // B = (G + ∇η·∇Φ)/(1+|∇η|²) up to degree j-1
        let mut num: Vec<Field2> = g.clone();
        num.resize(order + 1, Field2::zeros(&eta.grid));
        if order >= 1 {
            num[1] = &num[1] + &gpe;
        }
        let b = Jet::new(num).mul(&rinv);
        let mut s = Field2::zeros(&eta.grid);
        for k in 0..j {
            let arg = b.c[j - 1 - k].prod(eta);
            s += &gj_i(eta, &arg, h, k)[k];
        }
        let mut flux = if j == 1 { gp.clone() } else { VectorField2::zeros(&eta.grid) };
        if j >= 2 {
            flux = &flux - &ge.scale_by(&b.c[j - 2]);
        }
        let gj = (-(&s + &div_times_eta(&flux, eta))).scale(1.0 / j as f64);
        g.push(gj);
    }
    g
}

/// Coefficients of `γ̃ = ∂_wω̃ (1+w/h) η/(1+η/h)` in powers of `η`; entry 0
/// is zero.
pub fn gamma_expansion(eta: &Field2, omega: &VectorField3, d: &Diffeo, order: usize) -> Result<Vec<VectorField3>> {
    require_trivial(d)?;
    Ok(gamma_raw(eta, omega, order))
}

fn gamma_raw(eta: &Field2, omega: &VectorField3, order: usize) -> Vec<VectorField3> {
    let vg = omega.0[0].vg.clone();
    let h = vg.h;
    let q = Jet::linear(eta.scale(1.0 / h), order).add(&Jet::constant(Field2::constant(&eta.grid, 1.0), order));
    let frac = Jet::linear(eta.clone(), order).mul(&q.reciprocal_unit());
    let dw = omega.dw();
    let wts: Vec<f64> = vg.nodes.iter().map(|&w| 1.0 + w / h).collect();
    let base = VectorField3([dw.0[0].scale_levels(&wts), dw.0[1].scale_levels(&wts), dw.0[2].scale_levels(&wts)]);
    frac.c
        .iter()
        .map(|fk| VectorField3([base.0[0].prod2(fk), base.0[1].prod2(fk), base.0[2].prod2(fk)]))
        .collect()
}

fn is_zero3(v: &VectorField3) -> bool {
    v.0.iter().all(|f| f.c.iter().all(|c| c.norm_sqr() == 0.0))
}

struct RotParts {
    g: Vec<Field2>,
    gamma: Vec<VectorField3>,
    nu: Vec<Field2>,
    k: Vec<VectorField2>,
    w: Vec<Field2>,
}

fn rot_orders(eta: &Field2, omega: &VectorField3, order: usize) -> RotParts {
    let hg = &eta.grid;
    let h = omega.0[0].vg.h;
    let gamma = gamma_raw(eta, omega, order);
    let ge = eta.grad();
    let nu0 = omega.0[2].surface();
    let nu1 = -&omega.surface_h().dot(&ge);
    let mut nu = vec![nu0, nu1];
    nu.resize(order.max(1) + 1, Field2::zeros(hg));
    nu.truncate(order + 1);
    let k: Vec<VectorField2> = nu.iter().map(|n| -&n.inv_laplacian_meanfree().grad_perp()).collect();
    let rinv = inv_metric_jet(eta, order);
    let wperp = omega.surface_h().perp();
    let psi1 = -&wperp.scale_by(eta).div().inv_laplacian_meanfree();
    let uniform = uniform_flow_flux(omega, eta, &ge);
    let mut g = vec![g0_ii(omega)];
    for j in 1..=order {
        let mut s = Field2::zeros(hg);
        for hh in 0..j {
            let gam = &gamma[j - hh];
            if !is_zero3(gam) {
                s += &rot_orders(eta, gam, hh).g[hh];
            }
        }
        let w = w_coeffs(&g, &k, &ge, &rinv, order);
        let mut flux = k[j - 1].clone();
        if j >= 2 {
            flux = &flux - &ge.scale_by(&w[j - 2]);
        }
        // potential-flow part G[η]ψ, with ψ_m = -[m=1]Δ⁻¹∇·(ω̃_h^⊥η) - W_{m-1}η
        let mut pot = Field2::zeros(hg);
        for kk in 0..j {
            let m = j - kk;
            let mut psi = -&w[m - 1].prod(eta);
            if m == 1 {
                psi += &psi1;
            }
            pot += &gj_i(eta, &psi, h, kk)[kk];
        }
        if j == 2 {
            pot += &uniform;
        }
        g.push((&pot - &(&s + &div_times_eta(&flux, eta))).scale(1.0 / j as f64));
    }
    let w = w_coeffs(&g, &k, &ge, &rinv, order);
    RotParts { g, gamma, nu, k, w }
}

/// `W = (K·∇η + G_II)/(1+|∇η|²)` coefficient by coefficient, using the
/// orders of `G_II` available so far.
fn w_coeffs(g: &[Field2], k: &[VectorField2], ge: &VectorField2, rinv: &Jet<Field2>, order: usize) -> Vec<Field2> {
    let z = Field2::zeros(&ge.0[0].grid);
    let num: Vec<Field2> = (0..=order)
        .map(|m| {
            let mut v = g.get(m).cloned().unwrap_or_else(|| z.clone());
            if m >= 1 {
                if let Some(km) = k.get(m - 1) {
                    v += &km.dot(ge);
                }
            }
            v
        })
        .collect();
    let w = Jet::new(num).mul(rinv);
    w.c.into_iter().take(g.len()).collect()
}

/// Orders `0..=J` of `G̃_II[η]ω̃` for the trivial map.
pub fn gj_ii(eta: &Field2, omega: &VectorField3, d: &Diffeo, order: usize) -> Result<Vec<Field2>> {
    require_trivial(d)?;
    Ok(rot_orders(eta, omega, order).g)
}

/// All orders up to `J` of both parts, with diagnostics.
pub fn expand(state: &SurfaceState, omega: &VorticityData, d: &Diffeo, order: usize) -> Result<ExpansionResult> {
    require_trivial(d)?;
    if order > MAX_ORDER {
        return Err(Error::ConfigError(format!("expansion order {order} exceeds the cap {MAX_ORDER}")));
    }
    let (g_i, rot) = rayon::join(|| gj_i(&state.eta, &state.phi, d.h, order), || rot_orders(&state.eta, &omega.omega, order));
    let g = g_i.iter().zip(&rot.g).map(|(a, b)| a + b).collect();
    Ok(ExpansionResult { g, g_i, g_ii: rot.g, gamma: rot.gamma, nu: rot.nu, k: rot.k, w: rot.w })
}

/// `Σ_{j ≤ J} (G_{j,I} + G_{j,II})`.
pub fn taylor_gdno(state: &SurfaceState, omega: &VorticityData, d: &Diffeo, order: usize) -> Result<Field2> {
    Ok(expand(state, omega, d, order)?.sum())
}

/// Shape derivative of `G̃_II[η]ω̃` in the direction `δη` with `ω̃` held
/// fixed on the flat strip:
/// `-G̃_II[η]γ̃ - ∇·[(K - W∇η)δη] + G[η]ψ`, where
/// `ψ = -Δ⁻¹∇·(ω̃_h^⊥|₀ δη) - W δη` is the gradient part of the linearized
/// tangential-curl condition.
pub fn dg_ii(deta: &Field2, omega: &VorticityData, d: &Diffeo, opts: &SolverOpts) -> Result<Field2> {
    let p = dg_ii_parts(deta, omega, d, opts)?;
    Ok(&p.printed + &p.potential)
}

/// The two pieces of [`dg_ii`]: the displayed two-term formula and the
/// potential-flow correction `G[η]ψ`.
pub struct DgParts {
    pub printed: Field2,
    pub potential: Field2,
}

pub fn dg_ii_parts(deta: &Field2, omega: &VorticityData, d: &Diffeo, opts: &SolverOpts) -> Result<DgParts> {
    let eta = &d.eta;
    let (a, _) = solve_vector_potential(omega, d, opts)?;
    let g = g_ii_trace(&a, eta);
    let ge = eta.grad();
    let om = &omega.omega;
    let nu = &om.0[2].surface() - &om.surface_h().dot(&ge);
    let k = -&nu.inv_laplacian_meanfree().grad_perp();
    let n2: Vec<f64> = ge.dot(&ge).to_phys().iter().map(|v| 1.0 / (1.0 + v)).collect();
    let w = (&k.dot(&ge) + &g).mul_phys(&n2);
    let ds = d.sigma_of(deta);
    let dw = om.dw();
    let gamma = VectorField3([d.mul_jinv(&dw.0[0]).prod(&ds), d.mul_jinv(&dw.0[1]).prod(&ds), d.mul_jinv(&dw.0[2]).prod(&ds)]);
    let (ag, _) = solve_vector_potential(&VorticityData { omega: gamma }, d, opts)?;
    let gg = g_ii_trace(&ag, eta);
    let flux = &k - &ge.scale_by(&w);
    let printed = -(&gg + &flux.scale_by(deta).div());
    let psi = tangential_potential(om, &w, deta);
    let st = SurfaceState::new(eta.clone(), psi, 0.0);
    let mut potential = crate::solver::gdno(&st, &VorticityData::zeros(d), d, opts)?.g_i;
    potential += &uniform_flow_flux(om, deta, &ge);
    Ok(DgParts { printed, potential })
}

/// `c·N` for the uniform flow `c = -⟨ω̃_h^⊥|₀ δη⟩` carried by the mean of
/// the tangential condition.
fn uniform_flow_flux(omega: &VectorField3, deta: &Field2, ge: &VectorField2) -> Field2 {
    let m = omega.surface_h().perp().scale_by(deta).mean();
    &ge.0[0].scale(m[0]) + &ge.0[1].scale(m[1])
}

/// `-Δ⁻¹∇·(ω̃_h^⊥|₀ δη) - W δη`.
fn tangential_potential(omega: &VectorField3, w: &Field2, deta: &Field2) -> Field2 {
    let wp = omega.surface_h().perp();
    let t = wp.scale_by(deta).div().inv_laplacian_meanfree();
    -&(&t + &w.prod(deta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_trivial_diffeo;
    use crate::solver::gdno;
    use crate::spectral::HGrid;
    use std::sync::Arc;

    fn grids() -> (Arc<HGrid>, Arc<VGrid>) {
        (HGrid::square(16), VGrid::new(1.0, 16))
    }

    fn omega_sample(hg: &Arc<HGrid>, vg: &Arc<VGrid>) -> VectorField3 {
        VectorField3::new(
            Field3::from_fn(hg, vg, |x, y, w| (w + 1.0) * (y + x).cos()),
            Field3::from_fn(hg, vg, |x, _, w| w * w * (2.0 * x).sin()),
            Field3::from_fn(hg, vg, |x, y, _| (x - y).sin()),
        )
    }

    fn diff(a: &Field2, b: &Field2) -> f64 {
        (a - b).max_abs()
    }

    #[test]
    fn reciprocal_of_one_plus_x() {
        let hg = HGrid::square(8);
        let x = Field2::from_fn(&hg, |x, _| 0.3 * x.cos());
        let one = Field2::constant(&hg, 1.0);
        let j = Jet::constant(one.clone(), 5).add(&Jet::linear(x, 5));
        let p = j.mul(&j.reciprocal_unit());
        assert!(diff(&p.c[0], &one) < 1e-15);
        for c in &p.c[1..] {
            assert!(c.max_abs() < 1e-15);
        }
    }

    #[test]
    fn g0_i_tanh() {
        let hg = HGrid::square(16);
        let phi = Field2::from_fn(&hg, |x, _| x.cos());
        let g = g0_i(&phi, 1.0);
        assert!((g.coef(1, 0).re - 0.5 * 1f64.tanh()).abs() < 1e-14);
        let g = g0_i(&phi, 50.0);
        assert!((g.coef(1, 0).re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn g0_ii_closed_form() {
        let (hg, vg) = grids();
        let om = VectorField3::new(Field3::zeros(&hg, &vg), Field3::from_fn(&hg, &vg, |x, _, _| x.cos()), Field3::zeros(&hg, &vg));
        let g = g0_ii(&om);
        let c = (1f64.cosh() - 1.0) / 1f64.cosh();
        let want = Field2::from_fn(&hg, |x, _| -c * x.sin());
        assert!(diff(&g, &want) < 1e-13);
    }

    #[test]
    fn first_order_irrotational_formula() {
        let hg = HGrid::square(16);
        let eta = Field2::from_fn(&hg, |x, y| 0.1 * x.cos() + 0.05 * y.sin());
        let phi = Field2::from_fn(&hg, |x, y| (x + y).sin());
        let g = gj_i(&eta, &phi, 1.0, 1);
        let want = -(&g0_i(&g0_i(&phi, 1.0).prod(&eta), 1.0) + &phi.grad().scale_by(&eta).div());
        assert!(diff(&g[1], &want) < 1e-14);
    }

    #[test]
    fn homogeneity() {
        let (hg, vg) = grids();
        let eta = Field2::from_fn(&hg, |x, y| 0.1 * x.cos() + 0.05 * (x + y).sin());
        let phi = Field2::from_fn(&hg, |x, y| (x - y).sin());
        let om = omega_sample(&hg, &vg);
        for lam in [0.5, 2.0] {
            let e2 = eta.scale(lam);
            let a = gj_i(&eta, &phi, 1.0, 3);
            let b = gj_i(&e2, &phi, 1.0, 3);
            let ra = rot_orders(&eta, &om, 2).g;
            let rb = rot_orders(&e2, &om, 2).g;
            for j in 0..=3 {
                assert!(diff(&b[j], &a[j].scale(lam.powi(j as i32))) < 1e-12 * (1.0 + a[j].max_abs()));
            }
            for j in 0..=2 {
                assert!(diff(&rb[j], &ra[j].scale(lam.powi(j as i32))) < 1e-12 * (1.0 + ra[j].max_abs()));
            }
        }
    }

    #[test]
    fn linear_in_data() {
        let (hg, vg) = grids();
        let eta = Field2::from_fn(&hg, |x, y| 0.1 * x.cos() + 0.05 * (x + y).sin());
        let p1 = Field2::from_fn(&hg, |x, y| (x - y).sin());
        let p2 = Field2::from_fn(&hg, |x, _| (2.0 * x).cos());
        let sum = gj_i(&eta, &(&p1 + &p2.scale(3.0)), 1.0, 3);
        let (a, b) = (gj_i(&eta, &p1, 1.0, 3), gj_i(&eta, &p2, 1.0, 3));
        for j in 0..=3 {
            assert!(diff(&sum[j], &(&a[j] + &b[j].scale(3.0))) < 1e-12);
        }
        let o1 = omega_sample(&hg, &vg);
        let o2 = VectorField3::new(Field3::zeros(&hg, &vg), Field3::from_fn(&hg, &vg, |x, _, w| w * x.cos()), Field3::zeros(&hg, &vg));
        let s = rot_orders(&eta, &(&o1 + &o2.scale(-2.0)), 2).g;
        let (a, b) = (rot_orders(&eta, &o1, 2).g, rot_orders(&eta, &o2, 2).g);
        for j in 0..=2 {
            assert!(diff(&s[j], &(&a[j] + &b[j].scale(-2.0))) < 1e-12);
        }
    }

    #[test]
    fn gamma_terms() {
        let (hg, vg) = grids();
        let eta = Field2::from_fn(&hg, |x, _| 0.1 * x.cos());
        let om = omega_sample(&hg, &vg);
        let d = make_trivial_diffeo(&eta, &vg, 0.1).unwrap();
        let g = gamma_expansion(&eta, &om, &d, 3).unwrap();
        assert!(g[0].max_coef() == 0.0);
        let want = Field3::from_fn(&hg, &vg, |x, y, w| (1.0 + w) * 0.1 * x.cos() * (y + x).cos());
        assert!((&g[1].0[0] - &want).max_abs() < 1e-13);
        let flat = VectorField3::new(Field3::zeros(&hg, &vg), Field3::zeros(&hg, &vg), Field3::from_fn(&hg, &vg, |x, _, _| x.sin()));
        for gk in gamma_expansion(&eta, &flat, &d, 3).unwrap() {
            assert!(gk.max_coef() < 1e-14);
        }
    }

    #[test]
    fn flat_route_agreement() {
        let (hg, vg) = grids();
        let eta = Field2::zeros(&hg);
        let d = make_trivial_diffeo(&eta, &vg, 0.1).unwrap();
        let v = VectorField3::new(
            Field3::from_fn(&hg, &vg, |x, y, w| (w + 1.0) * (x + y).sin()),
            Field3::from_fn(&hg, &vg, |x, _, w| w * (2.0 * x).cos()),
            Field3::zeros(&hg, &vg),
        );
        let om = crate::solver::make_divfree_vorticity(&v, &d).unwrap();
        let phi = Field2::from_fn(&hg, |x, y| (x + 2.0 * y).cos());
        let st = SurfaceState::new(eta, phi, 0.1);
        let sol = gdno(&st, &om, &d, &SolverOpts::default()).unwrap();
        let t = taylor_gdno(&st, &om, &d, 0).unwrap();
        assert!(diff(&sol.g, &t) < 1e-10 * sol.g.max_abs());
    }

    #[test]
    fn rejects_regularizing() {
        let (hg, vg) = grids();
        let eta = Field2::from_fn(&hg, |x, _| 0.05 * x.cos());
        let d = crate::geometry::make_regularizing_diffeo(&eta, &vg, 0.1, 0.01, Default::default()).unwrap();
        let om = VectorField3::zeros(&hg, &vg);
        assert!(matches!(gj_ii(&eta, &om, &d, 1), Err(Error::UnsupportedDiffeo(_))));
        assert!(matches!(gamma_expansion(&eta, &om, &d, 1), Err(Error::UnsupportedDiffeo(_))));
    }

    #[test]
    fn dg_vanishes_for_zero_data() {
        let (hg, vg) = grids();
        let eta = Field2::from_fn(&hg, |x, _| 0.05 * x.cos());
        let d = make_trivial_diffeo(&eta, &vg, 0.1).unwrap();
        let de = Field2::from_fn(&hg, |_, y| y.sin());
        let z = dg_ii(&de, &VorticityData::zeros(&d), &d, &SolverOpts::default()).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let om = VorticityData { omega: omega_sample(&hg, &vg) };
        let z = dg_ii(&Field2::zeros(&hg), &om, &d, &SolverOpts::default()).unwrap();
        assert!(z.max_abs() < 1e-14);
    }
}
