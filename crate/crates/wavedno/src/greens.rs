//! Mode-by-mode solvers for `(|ξ|² - ∂_w²) u = f` on `[-h, 0]`.
//!
//! Two boundary configurations occur:
//!
//! * DN: `u(-h) = 0`, `∂_w u(0)` prescribed (horizontal vector potential),
//! * ND: `∂_w u(-h)` prescribed, `u(0)` prescribed (vertical vector potential
//!   and the scalar potential).
//!
//! Volume integrals `∫ G(w, ζ) f(ζ) dζ` are evaluated with the Chebyshev
//! interpolant of `f` and Clenshaw–Curtis quadrature on the two panels
//! `[-h, w]` and `[w, 0]`, where the kernels are smooth. The resulting
//! `Nw × Nw` matrices depend on `|ξ|` only and are cached.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::spectral::{cheb_nodes, clenshaw_curtis, Field2, Field3, HGrid, VGrid, VectorField2, VectorField3};

/// `G_DN(w, ζ) = sinh(k(m+h)) cosh(kM) / (k cosh kh)`, `m = min`, `M = max`;
/// `min + h` at `k = 0`.
pub fn kernel_dn(k: f64, h: f64, w: f64, z: f64) -> f64 {
    let (m, mm) = (w.min(z), w.max(z));
    if k == 0.0 {
        return m + h;
    }
    (k * (m - mm)).exp() * (-(-2.0 * k * (m + h)).exp_m1()) * (1.0 + (2.0 * k * mm).exp()) / (2.0 * k * (1.0 + (-2.0 * k * h).exp()))
}

/// `G_ND(w, ζ) = -cosh(k(m+h)) sinh(kM) / (k cosh kh)`; `-max` at `k = 0`.
pub fn kernel_nd(k: f64, h: f64, w: f64, z: f64) -> f64 {
    let (m, mm) = (w.min(z), w.max(z));
    if k == 0.0 {
        return -mm;
    }
    (k * (m - mm)).exp() * (1.0 + (-2.0 * k * (m + h)).exp()) * (-(2.0 * k * mm).exp_m1()) / (2.0 * k * (1.0 + (-2.0 * k * h).exp()))
}

/// `∂_w G_ND(0, ζ) = -cosh(k(ζ+h)) / cosh(kh)`.
pub fn kernel_nd_trace(k: f64, h: f64, z: f64) -> f64 {
    -(k * z).exp() * (1.0 + (-2.0 * k * (z + h)).exp()) / (1.0 + (-2.0 * k * h).exp())
}

/// Homogeneous ND solution with `u(0) = 1`: `cosh(k(w+h)) / cosh(kh)`.
pub fn top_dirichlet(k: f64, h: f64, w: f64) -> f64 {
    (k * w).exp() * (1.0 + (-2.0 * k * (w + h)).exp()) / (1.0 + (-2.0 * k * h).exp())
}

/// Homogeneous DN solution with `∂_w u(0) = 1`: `sinh(k(w+h)) / (k cosh kh)`.
pub fn top_neumann(k: f64, h: f64, w: f64) -> f64 {
    if k == 0.0 {
        return w + h;
    }
    (k * w).exp() * (-(-2.0 * k * (w + h)).exp_m1()) / (k * (1.0 + (-2.0 * k * h).exp()))
}

/// Homogeneous ND solution with `∂_w u(-h) = 1`, `u(0) = 0`: `sinh(kw) / (k cosh kh)`.
pub fn bottom_neumann(k: f64, h: f64, w: f64) -> f64 {
    if k == 0.0 {
        return w;
    }
    (-k * (w + h)).exp() * (2.0 * k * w).exp_m1() / (k * (1.0 + (-2.0 * k * h).exp()))
}

/// Per-`|ξ|` tables.
#[derive(Debug)]
pub struct ModeOps {
    pub k: f64,
    /// DN volume matrix, row-major `Nw × Nw`.
    pub q_dn: Vec<f64>,
    /// ND volume matrix.
    pub q_nd: Vec<f64>,
    pub v_top_dir: Vec<f64>,
    pub v_top_neu: Vec<f64>,
    pub v_bot_neu: Vec<f64>,
    /// Row giving `∂_w u(0)` from the ND volume data.
    pub trace_nd: Vec<f64>,
    /// `∂_w` at `w = 0` of [`top_dirichlet`]: `k tanh(kh)`.
    pub dtop_dir: f64,
    /// `∂_w` at `w = 0` of [`bottom_neumann`]: `1 / cosh(kh)`.
    pub dbot_neu: f64,
}

/// Quadrature panels for one evaluation node: points, weights and Lagrange rows.
struct Panels {
    pts: Vec<f64>,
    wts: Vec<f64>,
    lag: Vec<Vec<f64>>,
}

/// Precomputed trace and volume operators for a pair of grids.
#[derive(Debug)]
pub struct GreenOps {
    pub vg: Arc<VGrid>,
    pub hg: Arc<HGrid>,
    by_mode: Vec<Arc<ModeOps>>,
}

fn panel_nodes(vg: &VGrid) -> Vec<Panels> {
    let m = (vg.nw + 24).max(40);
    let (t, cw) = (cheb_nodes(m), clenshaw_curtis(m));
    let h = vg.h;
    vg.nodes
        .iter()
        .map(|&wi| {
            let mut pts = Vec::new();
            let mut wts = Vec::new();
            for (a, b) in [(-h, wi), (wi, 0.0)] {
                if b - a <= 0.0 {
                    continue;
                }
                for (s, c) in t.iter().zip(&cw) {
                    pts.push(0.5 * (a + b) + 0.5 * (b - a) * s);
                    wts.push(0.5 * (b - a) * c);
                }
            }
            let lag = pts.iter().map(|&z| vg.lagrange_row(z)).collect();
            Panels { pts, wts, lag }
        })
        .collect()
}

fn build_mode(k: f64, vg: &VGrid, panels: &[Panels]) -> ModeOps {
    let (h, nw) = (vg.h, vg.nw);
    let mut q_dn = vec![0.0; nw * nw];
    let mut q_nd = vec![0.0; nw * nw];
    for (i, p) in panels.iter().enumerate() {
        let wi = vg.nodes[i];
        for (q, &z) in p.pts.iter().enumerate() {
            let (gd, gn) = (kernel_dn(k, h, wi, z) * p.wts[q], kernel_nd(k, h, wi, z) * p.wts[q]);
            for j in 0..nw {
                q_dn[i * nw + j] += gd * p.lag[q][j];
                q_nd[i * nw + j] += gn * p.lag[q][j];
            }
        }
    }
    let top = &panels[nw - 1];
    let mut trace_nd = vec![0.0; nw];
    for (q, &z) in top.pts.iter().enumerate() {
        let g = if k == 0.0 { -1.0 } else { kernel_nd_trace(k, h, z) } * top.wts[q];
        for j in 0..nw {
            trace_nd[j] += g * top.lag[q][j];
        }
    }
    let e = (-2.0 * k * h).exp();
    ModeOps {
        k,
        q_dn,
        q_nd,
        v_top_dir: vg.nodes.iter().map(|&w| if k == 0.0 { 1.0 } else { top_dirichlet(k, h, w) }).collect(),
        v_top_neu: vg.nodes.iter().map(|&w| top_neumann(k, h, w)).collect(),
        v_bot_neu: vg.nodes.iter().map(|&w| bottom_neumann(k, h, w)).collect(),
        trace_nd,
        dtop_dir: k * (1.0 - e) / (1.0 + e),
        dbot_neu: 2.0 * (-k * h).exp() / (1.0 + e),
    }
}

type CacheKey = (u64, u64, usize, usize, u64, usize);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<GreenOps>>> {
    static C: OnceLock<Mutex<HashMap<CacheKey, Arc<GreenOps>>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

impl GreenOps {
    /// Cached tables for the given grids (`green_trace_ops`).
    pub fn get(hg: &Arc<HGrid>, vg: &Arc<VGrid>) -> Arc<GreenOps> {
        let key = (hg.lx.to_bits(), hg.ly.to_bits(), hg.nx, hg.ny, vg.h.to_bits(), vg.nw);
        if let Some(g) = cache().lock().unwrap().get(&key) {
            return g.clone();
        }
        let g = Arc::new(Self::build(hg, vg));
        cache().lock().unwrap().insert(key, g.clone());
        g
    }

    fn build(hg: &Arc<HGrid>, vg: &Arc<VGrid>) -> GreenOps {
        let panels = panel_nodes(vg);
        let mut ks: Vec<u64> = (0..hg.len()).map(|k| hg.xi_abs(k).to_bits()).collect();
        ks.sort_unstable();
        ks.dedup();
        let built: HashMap<u64, Arc<ModeOps>> =
            ks.par_iter().map(|&b| (b, Arc::new(build_mode(f64::from_bits(b), vg, &panels)))).collect();
        let by_mode = (0..hg.len()).map(|k| built[&hg.xi_abs(k).to_bits()].clone()).collect();
        GreenOps { vg: vg.clone(), hg: hg.clone(), by_mode }
    }

    pub fn mode(&self, k: usize) -> &ModeOps {
        &self.by_mode[k]
    }
}

fn matvec(m: &[f64], x: &[C64]) -> Vec<C64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let row = &m[i * n..(i + 1) * n];
            row.iter().zip(x).fold(C64::new(0.0, 0.0), |acc, (a, b)| acc + b * a)
        })
        .collect()
}

/// Runs `f(mode, columns)` for every horizontal mode and scatters the
/// returned columns into `nout` fresh fields.
fn per_mode<const N: usize>(
    hg: &Arc<HGrid>,
    vg: &Arc<VGrid>,
    inputs: &[&Field3],
    f: impl Fn(usize, &[Vec<C64>]) -> [Vec<C64>; N] + Sync,
) -> [Field3; N] {
    let n = hg.len();
    let cols: Vec<[Vec<C64>; N]> = (0..n)
        .into_par_iter()
        .map(|k| {
            let ins: Vec<Vec<C64>> = inputs.iter().map(|fl| fl.column(k)).collect();
            f(k, &ins)
        })
        .collect();
    std::array::from_fn(|c| {
        let mut out = Field3::zeros(hg, vg);
        for (k, col) in cols.iter().enumerate() {
            out.set_column(k, &col[c]);
        }
        out
    })
}

fn axpy_vec(y: &mut [C64], a: C64, x: &[f64]) {
    for (u, v) in y.iter_mut().zip(x) {
        *u += a * v;
    }
}

/// Flat-strip vector potential: `(|ξ|² - ∂_w²) Ã = rhs` with `Ã_h(-h) = 0`,
/// `∂_wÃ_3(-h) = 0`, `Ã_3(0) = r2` and the tangential curl condition
/// `(curl Ã)_h(0) = -∇⊥Δ⁻¹ s + r3`, where `s` is the surface value of `ω̃_3`
/// (its mean is discarded).
pub fn green_solve_a(rhs: &VectorField3, r2: &Field2, r3: &VectorField2, s: &Field2) -> VectorField3 {
    let (hg, vg) = (rhs.0[0].hg.clone(), rhs.0[0].vg.clone());
    let ops = GreenOps::get(&hg, &vg);
    let [a1, a2, a3] = per_mode::<3>(&hg, &vg, &[&rhs.0[0], &rhs.0[1], &rhs.0[2]], |k, ins| {
        let m = ops.mode(k);
        let [d1, d2] = hg.xi_deriv(k);
        let (i1, i2) = (C64::new(0.0, d1), C64::new(0.0, d2));
        let r2k = r2.c[k];
        let sk = if m.k == 0.0 { C64::new(0.0, 0.0) } else { s.c[k] / (m.k * m.k) };
        let mut u3 = matvec(&m.q_nd, &ins[2]);
        axpy_vec(&mut u3, r2k, &m.v_top_dir);
        let g1 = i1 * r2k - i1 * sk + r3.0[1].c[k];
        let g2 = i2 * r2k - i2 * sk - r3.0[0].c[k];
        let mut u1 = matvec(&m.q_dn, &ins[0]);
        axpy_vec(&mut u1, g1, &m.v_top_neu);
        let mut u2 = matvec(&m.q_dn, &ins[1]);
        axpy_vec(&mut u2, g2, &m.v_top_neu);
        [u1, u2, u3]
    });
    VectorField3([a1, a2, a3])
}

/// Scalar potential: `(|ξ|² - ∂_w²) φ̃ = r4`, `∂_wφ̃(-h) = r5`, `φ̃(0) = Φ`.
pub fn green_solve_phi(r4: &Field3, r5: &Field2, phi: &Field2) -> Field3 {
    let (hg, vg) = (r4.hg.clone(), r4.vg.clone());
    let ops = GreenOps::get(&hg, &vg);
    let [u] = per_mode::<1>(&hg, &vg, &[r4], |k, ins| {
        let m = ops.mode(k);
        let mut u = matvec(&m.q_nd, &ins[0]);
        axpy_vec(&mut u, phi.c[k], &m.v_top_dir);
        axpy_vec(&mut u, r5.c[k], &m.v_bot_neu);
        [u]
    });
    u
}

/// `∂_wφ̃(0)` of the solution of [`green_solve_phi`], from the exact kernels.
pub fn green_trace_phi(r4: &Field3, r5: &Field2, phi: &Field2) -> Field2 {
    let hg = r4.hg.clone();
    let ops = GreenOps::get(&hg, &r4.vg);
    let mut out = Field2::zeros(&hg);
    for k in 0..hg.len() {
        let m = ops.mode(k);
        let col = r4.column(k);
        let v = m.trace_nd.iter().zip(&col).fold(C64::new(0.0, 0.0), |acc, (a, b)| acc + b * a);
        out.c[k] = v + phi.c[k] * m.dtop_dir + r5.c[k] * m.dbot_neu;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn residual_ok(k: f64, vg: &VGrid, u: &[f64], f: &[f64]) -> f64 {
        let d2 = vg.d2();
        let nw = vg.nw;
        let mut r: f64 = 0.0;
        for i in 1..nw - 1 {
            let uww: f64 = (0..nw).map(|j| d2[i * nw + j] * u[j]).sum();
            r = r.max((k * k * u[i] - uww - f[i]).abs());
        }
        r
    }

    #[test]
    fn kernels_match_hyperbolic_forms() {
        let (k, h) = (1.7, 1.3);
        for &(w, z) in &[(-0.2, -0.9), (-1.1, -0.3), (-0.5, -0.5), (0.0, -1.0)] {
            let (m, mm) = (f64::min(w, z), f64::max(w, z));
            let dn = (k * (m + h)).sinh() * (k * mm).cosh() / (k * (k * h).cosh());
            let nd = -(k * (m + h)).cosh() * (k * mm).sinh() / (k * (k * h).cosh());
            assert_abs_diff_eq!(kernel_dn(k, h, w, z), dn, epsilon = 1e-14);
            assert_abs_diff_eq!(kernel_nd(k, h, w, z), nd, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(top_dirichlet(k, h, -0.4), (k * (h - 0.4)).cosh() / (k * h).cosh(), epsilon = 1e-14);
        assert_abs_diff_eq!(top_neumann(k, h, -0.4), (k * (h - 0.4)).sinh() / (k * (k * h).cosh()), epsilon = 1e-14);
        assert_abs_diff_eq!(bottom_neumann(k, h, -0.4), (-0.4 * k).sinh() / (k * (k * h).cosh()), epsilon = 1e-14);
    }

    #[test]
    fn surface_kernel_row() {
        let h = 1.0;
        for z in [-1.0, -0.6, -0.1] {
            assert_abs_diff_eq!(kernel_dn(2.0, h, 0.0, z), (2.0 * (z + h)).sinh() / (2.0 * 2f64.cosh()), epsilon = 1e-14);
            assert_eq!(kernel_nd(2.0, h, 0.0, z), 0.0);
        }
    }

    #[test]
    fn kernels_finite_at_large_wavenumber() {
        let k = 700.0;
        for f in [kernel_dn(k, 1.0, -0.5, -0.4), kernel_nd(k, 1.0, -0.5, -0.4), top_dirichlet(k, 1.0, -0.01), bottom_neumann(k, 1.0, -0.99)] {
            assert!(f.is_finite());
        }
        // Decay away from the surface like e^{-k|w|}.
        let (a, b) = (top_dirichlet(20.0, 1.0, -0.5), top_dirichlet(40.0, 1.0, -0.5));
        assert_abs_diff_eq!((a / b).ln() / 20.0, 0.5, epsilon = 1e-8);
    }

    #[test]
    fn flat_a_surface_value() {
        let hg = HGrid::square(16);
        let vg = VGrid::new(1.0, 24);
        let cosx = Field2::from_fn(&hg, |x, _| x.cos());
        let rhs = VectorField3([Field3::zeros(&hg, &vg), Field3::broadcast(&cosx, &vg), Field3::zeros(&hg, &vg)]);
        let z2 = Field2::zeros(&hg);
        let a = green_solve_a(&rhs, &z2, &VectorField2::zeros(&hg), &z2);
        let c = (1f64.cosh() - 1.0) / 1f64.cosh();
        assert_abs_diff_eq!(a.0[1].surface().coef(1, 0).re, 0.5 * c, epsilon = 1e-13);
        let zero = green_solve_a(&VectorField3::zeros(&hg, &vg), &z2, &VectorField2::zeros(&hg), &z2);
        assert_eq!(zero.max_coef(), 0.0);
    }

    #[test]
    fn flat_phi_profile_and_trace() {
        let hg = HGrid::square(16);
        let vg = VGrid::new(1.0, 24);
        let mut phi = Field2::zeros(&hg);
        phi.c[hg.index(1, 0)] = C64::new(1.0, 0.0);
        let z3 = Field3::zeros(&hg, &vg);
        let z2 = Field2::zeros(&hg);
        let u = green_solve_phi(&z3, &z2, &phi);
        for (l, &w) in vg.nodes.iter().enumerate() {
            assert_abs_diff_eq!(u.level(l).coef(1, 0).re, (w + 1.0).cosh() / 1f64.cosh(), epsilon = 1e-14);
        }
        let t = green_trace_phi(&z3, &z2, &phi);
        assert_abs_diff_eq!(t.coef(1, 0).re, 1f64.tanh(), epsilon = 1e-14);
        assert_eq!(green_solve_phi(&z3, &z2, &z2).max_coef(), 0.0);
    }

    #[test]
    fn trace_row_matches_differentiated_solution() {
        let hg = HGrid::square(8);
        let vg = VGrid::new(1.2, 28);
        let f = Field3::from_fn(&hg, &vg, |x, y, w| (x + y).cos() * (w * 2.0).sin() + (2.0 * x).sin() * w * w + 0.3 * w);
        let r5 = Field2::from_fn(&hg, |x, _| 0.4 * x.sin() + 0.1);
        let phi = Field2::from_fn(&hg, |_, y| y.cos());
        let u = green_solve_phi(&f, &r5, &phi);
        let t = green_trace_phi(&f, &r5, &phi);
        assert!((&u.dw().surface() - &t).norm_l2() < 1e-10);
        // Dirichlet consistency at the surface.
        assert!((&u.surface() - &phi).norm_l2() < 1e-13);
        assert!((&u.dw().bottom() - &r5).norm_l2() < 1e-9);
    }

    #[test]
    fn zero_mode_closures() {
        let hg = HGrid::square(4);
        let vg = VGrid::new(1.0, 16);
        let f = Field3::separable(&Field2::constant(&hg, 1.0), &vg, |w| w + 2.0);
        let r5 = Field2::constant(&hg, 0.7);
        let phi = Field2::constant(&hg, -0.2);
        let u = green_solve_phi(&f, &r5, &phi);
        // -u'' = w + 2, u'(-1) = 0.7, u(0) = -0.2.
        let exact = |w: f64| -w.powi(3) / 6.0 - w * w + (0.7 + 0.5 - 2.0) * w - 0.2;
        for (l, &w) in vg.nodes.iter().enumerate() {
            assert_abs_diff_eq!(u.level(l).mean(), exact(w), epsilon = 1e-13);
        }
        let z2 = Field2::zeros(&hg);
        let r3 = VectorField2([Field2::constant(&hg, 0.3), Field2::constant(&hg, -0.5)]);
        let rhs = VectorField3([f.clone(), Field3::zeros(&hg, &vg), f.clone()]);
        let a = green_solve_a(&rhs, &Field2::constant(&hg, 0.25), &r3, &z2);
        let b = a.dw().bottom();
        let t = a.dw().surface();
        assert_abs_diff_eq!(a.0[0].bottom().mean(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b[2].mean(), 0.0, epsilon = 1e-11);
        assert_abs_diff_eq!(a.0[2].surface().mean(), 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(t[0].mean(), -0.5, epsilon = 1e-11);
        assert_abs_diff_eq!(t[1].mean(), -0.3, epsilon = 1e-11);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn per_mode_residual(k in 0.5f64..25.0, c in prop::array::uniform4(-1.0f64..1.0), nw in 24usize..34) {
            let vg = VGrid::new(1.0, nw);
            let panels = panel_nodes(&vg);
            let m = build_mode(k, &vg, &panels);
            let f: Vec<f64> = vg.nodes.iter().map(|&w| c[0] + c[1] * (3.0 * w).sin() + c[2] * w * w + c[3] * (2.0 * w).cos()).collect();
            let fn_ = f.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-3);
            for q in [&m.q_dn, &m.q_nd] {
                let u: Vec<f64> = (0..nw).map(|i| (0..nw).map(|j| q[i * nw + j] * f[j]).sum()).collect();
                prop_assert!(residual_ok(k, &vg, &u, &f) <= 1e-8 * fn_);
            }
            // Boundary rows.
            let dn_bot: f64 = (0..nw).map(|j| m.q_dn[j] * f[j]).sum();
            let nd_top: f64 = (0..nw).map(|j| m.q_nd[(nw - 1) * nw + j] * f[j]).sum();
            prop_assert!(dn_bot.abs() < 1e-14 && nd_top.abs() < 1e-14);
        }
    }
}
