//! Independent checks: a second-order finite-difference solver for the
//! straightened elliptic problems, residual audits of the div-curl system and
//! log-log slope fits.
//!
//! The finite-difference route shares only the coefficient fields of `Δ^Σ`
//! with the spectral route. Unknowns live on a uniform lattice
//! `w_l = -h + l Δw`, `l = 0..Nw-1`, with the horizontal lattice equal to the
//! collocation points of an [`HGrid`]. The discrete system is solved by
//! BiCGSTAB, right-preconditioned by per-mode tridiagonal solves of the flat
//! operator.

use std::sync::Arc;

pub mod protocols;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{flat_coeffs, flat_curl, flat_div, Diffeo};
use crate::spectral::{Field2, Field3, HGrid, VectorField3, C64};

/// Uniform lattice over `T² × [-h, 0]`.
#[derive(Clone, Debug)]
pub struct FDGrid {
    pub hg: Arc<HGrid>,
    pub nw: usize,
    pub h: f64,
    pub dx: f64,
    pub dy: f64,
    pub dw: f64,
}

impl FDGrid {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize, nw: usize, h: f64) -> Result<Self> {
        if nw < 9 {
            return Err(Error::GridMismatch(format!("need at least 9 vertical points, got {nw}")));
        }
        if !(h > 0.0) {
            return Err(Error::GridMismatch(format!("depth must be positive, got {h}")));
        }
        let hg = HGrid::new(lx, ly, nx, ny);
        Ok(FDGrid { dx: lx / nx as f64, dy: ly / ny as f64, dw: h / (nw - 1) as f64, hg, nw, h })
    }

    /// `n × n × (n+1)` points on the `2π`-periodic square of depth `h`.
    pub fn cube(n: usize, h: f64) -> Result<Self> {
        Self::new(2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI, n, n, n + 1, h)
    }

    pub fn n_h(&self) -> usize {
        self.hg.len()
    }

    pub fn len(&self) -> usize {
        self.n_h() * self.nw
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn w(&self, l: usize) -> f64 {
        -self.h + l as f64 * self.dw
    }

    pub fn idx(&self, l: usize, p: usize) -> usize {
        l * self.n_h() + p
    }
}

/// Scalar field on an [`FDGrid`], level-major.
#[derive(Clone, Debug)]
pub struct FdField {
    pub values: Vec<f64>,
    pub nh: usize,
}

impl FdField {
    pub fn level(&self, l: usize) -> &[f64] {
        &self.values[l * self.nh..(l + 1) * self.nh]
    }

    pub fn surface(&self) -> &[f64] {
        let nw = self.values.len() / self.nh;
        self.level(nw - 1)
    }

    /// Second-order one-sided `∂_w` at the surface.
    pub fn surface_dw(&self, dw: f64) -> Vec<f64> {
        let nw = self.values.len() / self.nh;
        let (a, b, c) = (self.level(nw - 1), self.level(nw - 2), self.level(nw - 3));
        (0..self.nh).map(|p| (3.0 * a[p] - 4.0 * b[p] + c[p]) / (2.0 * dw)).collect()
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FdReport {
    pub iterations: usize,
    pub residual: f64,
}

/// Physical samples of a spectral surface field on the lattice.
pub fn sample2(f: &Field2, fg: &FDGrid) -> Vec<f64> {
    let src = &f.grid;
    let tg = &fg.hg;
    let mut buf = vec![C64::new(0.0, 0.0); tg.len()];
    for (k, c) in f.c.iter().enumerate() {
        let (mx, my) = src.modes(k);
        buf[tg.index(mx, my)] += c;
    }
    tg.inverse(&mut buf);
    buf.iter().map(|v| v.re).collect()
}

/// Physical samples of a strip field on the lattice: exact in the
/// horizontal, Chebyshev interpolation in the vertical.
pub fn sample3(f: &Field3, fg: &FDGrid) -> Vec<f64> {
    let vg = &f.vg;
    let levels: Vec<Vec<f64>> = (0..vg.nw).map(|l| sample2(&f.level(l), fg)).collect();
    let nh = fg.n_h();
    let mut out = vec![0.0; fg.len()];
    for l in 0..fg.nw {
        let row = vg.lagrange_row(fg.w(l));
        for p in 0..nh {
            out[l * nh + p] = row.iter().zip(&levels).map(|(r, lev)| r * lev[p]).sum();
        }
    }
    out
}

struct Coeffs {
    a: Vec<f64>,
    b1: Vec<f64>,
    b2: Vec<f64>,
    c: Vec<f64>,
    qx: Vec<f64>,
    qy: Vec<f64>,
    jinv: Vec<f64>,
    ex: Vec<f64>,
    ey: Vec<f64>,
}

impl Coeffs {
    fn new(d: &Diffeo, fg: &FDGrid) -> Self {
        let fc = flat_coeffs(d);
        let top = |f: &Field3| sample2(&f.surface(), fg);
        let sx = top(&d.sx);
        let sy = top(&d.sy);
        let jac: Vec<f64> = top(&d.sw).iter().map(|v| 1.0 + v).collect();
        let jinv: Vec<f64> = jac.iter().map(|v| 1.0 / v).collect();
        let (ex, ey) = (sample2(&d.eta.dx(), fg), sample2(&d.eta.dy(), fg));
        Coeffs {
            a: sample3(&fc.a, fg),
            b1: sample3(&fc.b[0], fg),
            b2: sample3(&fc.b[1], fg),
            c: sample3(&fc.c, fg),
            qx: sx.iter().zip(&jinv).map(|(a, b)| a * b).collect(),
            qy: sy.iter().zip(&jinv).map(|(a, b)| a * b).collect(),
            jinv,
            ex,
            ey,
        }
    }
}

struct Nbr {
    xp: Vec<usize>,
    xm: Vec<usize>,
    yp: Vec<usize>,
    ym: Vec<usize>,
}

fn neighbours(fg: &FDGrid) -> Nbr {
    let (nx, ny) = (fg.hg.nx, fg.hg.ny);
    let mut n = Nbr { xp: vec![], xm: vec![], yp: vec![], ym: vec![] };
    for iy in 0..ny {
        for ix in 0..nx {
            n.xp.push(iy * nx + (ix + 1) % nx);
            n.xm.push(iy * nx + (ix + nx - 1) % nx);
            n.yp.push(((iy + 1) % ny) * nx + ix);
            n.ym.push(((iy + ny - 1) % ny) * nx + ix);
        }
    }
    n
}

/// `-Δ^Σ u` at interior levels, written into `out`.
fn interior_rows(u: &[f64], co: &Coeffs, fg: &FDGrid, nb: &Nbr, out: &mut [f64]) {
    let nh = fg.n_h();
    let (idx2, idy2, idw2) = (1.0 / (fg.dx * fg.dx), 1.0 / (fg.dy * fg.dy), 1.0 / (fg.dw * fg.dw));
    let (ixw, iyw, iw) = (0.25 / (fg.dx * fg.dw), 0.25 / (fg.dy * fg.dw), 0.5 / fg.dw);
    out[nh..(fg.nw - 1) * nh].par_chunks_mut(nh).enumerate().for_each(|(lm, o)| {
        let l = lm + 1;
        let (c0, up, dn) = (l * nh, (l + 1) * nh, (l - 1) * nh);
        for p in 0..nh {
            let i = c0 + p;
            let v = u[i];
            let uww = (u[up + p] - 2.0 * v + u[dn + p]) * idw2;
            let uxx = (u[c0 + nb.xp[p]] - 2.0 * v + u[c0 + nb.xm[p]]) * idx2;
            let uyy = (u[c0 + nb.yp[p]] - 2.0 * v + u[c0 + nb.ym[p]]) * idy2;
            let uxw = (u[up + nb.xp[p]] - u[up + nb.xm[p]] - u[dn + nb.xp[p]] + u[dn + nb.xm[p]]) * ixw;
            let uyw = (u[up + nb.yp[p]] - u[up + nb.ym[p]] - u[dn + nb.yp[p]] + u[dn + nb.ym[p]]) * iyw;
            let uw = (u[up + p] - u[dn + p]) * iw;
            o[p] = -(co.a[i] * uww + uxx + uyy + co.b1[i] * uxw + co.b2[i] * uyw - co.c[i] * uw);
        }
    });
}

fn bottom_neumann_row(u: &[f64], fg: &FDGrid, out: &mut [f64]) {
    let nh = fg.n_h();
    for p in 0..nh {
        out[p] = (-3.0 * u[p] + 4.0 * u[nh + p] - u[2 * nh + p]) / (2.0 * fg.dw);
    }
}

fn top_dw(u: &[f64], fg: &FDGrid, p: usize) -> f64 {
    let nh = fg.n_h();
    let l = fg.nw - 1;
    (3.0 * u[l * nh + p] - 4.0 * u[(l - 1) * nh + p] + u[(l - 2) * nh + p]) / (2.0 * fg.dw)
}

fn apply_phi(u: &[f64], co: &Coeffs, fg: &FDGrid, nb: &Nbr) -> Vec<f64> {
    let nh = fg.n_h();
    let mut out = vec![0.0; u.len()];
    interior_rows(u, co, fg, nb, &mut out);
    bottom_neumann_row(u, fg, &mut out);
    let l = fg.nw - 1;
    out[l * nh..].copy_from_slice(&u[l * nh..]);
    out
}

/// Rows of the vector-potential system. Block order `A₁, A₂, A₃`; the top
/// rows of the three blocks hold, in order, `(curl^ΣA)_∥,2`,
/// `-(curl^ΣA)_∥,1` and `A·N`.
fn apply_a(u: &[f64], co: &Coeffs, fg: &FDGrid, nb: &Nbr) -> Vec<f64> {
    let m = fg.len();
    let nh = fg.n_h();
    let mut out = vec![0.0; 3 * m];
    for c in 0..3 {
        let (ub, ob) = (&u[c * m..(c + 1) * m], &mut out[c * m..(c + 1) * m]);
        interior_rows(ub, co, fg, nb, ob);
        if c == 2 {
            bottom_neumann_row(ub, fg, ob);
        } else {
            ob[..nh].copy_from_slice(&ub[..nh]);
        }
    }
    let (a1, a2, a3) = (&u[..m], &u[m..2 * m], &u[2 * m..]);
    let l = fg.nw - 1;
    let top = l * nh;
    let (ix, iy) = (0.5 / fg.dx, 0.5 / fg.dy);
    for p in 0..nh {
        let dw = [top_dw(a1, fg, p), top_dw(a2, fg, p), top_dw(a3, fg, p)];
        let hx = |f: &[f64]| (f[top + nb.xp[p]] - f[top + nb.xm[p]]) * ix;
        let hy = |f: &[f64]| (f[top + nb.yp[p]] - f[top + nb.ym[p]]) * iy;
        let (qx, qy, ji) = (co.qx[p], co.qy[p], co.jinv[p]);
        let dxs = |f: &[f64], fw: f64| hx(f) - qx * fw;
        let dys = |f: &[f64], fw: f64| hy(f) - qy * fw;
        let c1 = dys(a3, dw[2]) - ji * dw[1];
        let c2 = ji * dw[0] - dxs(a3, dw[2]);
        let c3 = dxs(a2, dw[1]) - dys(a1, dw[0]);
        out[top + p] = c2 + c3 * co.ey[p];
        out[m + top + p] = -(c1 + c3 * co.ex[p]);
        out[2 * m + top + p] = a3[top + p] - co.ex[p] * a1[top + p] - co.ey[p] * a2[top + p];
    }
    out
}

#[derive(Clone, Copy)]
enum Bc {
    /// Dirichlet at the bottom, Neumann at the top.
    DirNeu,
    /// Neumann at the bottom, Dirichlet at the top.
    NeuDir,
}

/// Inverse of the flat operator with the same row layout, mode by mode.
fn precondition(r: &[f64], kinds: &[Bc], fg: &FDGrid) -> Vec<f64> {
    let m = fg.len();
    let nh = fg.n_h();
    let nw = fg.nw;
    let hg = &fg.hg;
    let sym: Vec<f64> = (0..nh)
        .map(|k| {
            let (mx, my) = hg.modes(k);
            let tx = 2.0 * std::f64::consts::PI * mx as f64 / hg.nx as f64;
            let ty = 2.0 * std::f64::consts::PI * my as f64 / hg.ny as f64;
            (2.0 - 2.0 * tx.cos()) / (fg.dx * fg.dx) + (2.0 - 2.0 * ty.cos()) / (fg.dy * fg.dy)
        })
        .collect();
    let mut out = vec![0.0; r.len()];
    for (c, kind) in kinds.iter().enumerate() {
        let rb = &r[c * m..(c + 1) * m];
        let mut spec: Vec<C64> = rb.iter().map(|&v| C64::new(v, 0.0)).collect();
        spec.par_chunks_mut(nh).for_each(|lev| hg.forward(lev));
        let cols: Vec<Vec<C64>> = (0..nh)
            .into_par_iter()
            .map(|k| {
                let mut col: Vec<C64> = (0..nw).map(|l| spec[l * nh + k]).collect();
                solve_column(*kind, sym[k], fg.dw, &mut col);
                col
            })
            .collect();
        for (k, col) in cols.iter().enumerate() {
            for l in 0..nw {
                spec[l * nh + k] = col[l];
            }
        }
        spec.par_chunks_mut(nh).for_each(|lev| {
            hg.inverse(lev);
        });
        // forward divides by N, inverse does not: the pair is the identity
        for (o, v) in out[c * m..(c + 1) * m].iter_mut().zip(&spec) {
            *o = v.re;
        }
    }
    out
}

/// Flat column problem `-(u'' - s u) = r` with the boundary rows of `kind`.
fn solve_column(kind: Bc, s: f64, dw: f64, r: &mut [C64]) {
    let n = r.len();
    let (mut lo, mut di, mut up) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (al, be) = (-1.0 / (dw * dw), 2.0 / (dw * dw) + s);
    for l in 1..n - 1 {
        lo[l] = al;
        di[l] = be;
        up[l] = al;
    }
    let i2 = 1.0 / (2.0 * dw);
    match kind {
        Bc::DirNeu => {
            di[0] = 1.0;
            // top row (3u_L - 4u_{L-1} + u_{L-2}) i2; remove u_{L-2} with row L-1
            let f = i2 / al;
            di[n - 1] = 3.0 * i2 - f * up[n - 2];
            lo[n - 1] = -4.0 * i2 - f * di[n - 2];
            let rl = r[n - 2];
            r[n - 1] -= rl * f;
        }
        Bc::NeuDir => {
            di[n - 1] = 1.0;
            // bottom row (-3u_0 + 4u_1 - u_2) i2; remove u_2 with row 1
            let f = -i2 / al;
            di[0] = -3.0 * i2 - f * lo[1];
            up[0] = 4.0 * i2 - f * di[1];
            let r1 = r[1];
            r[0] -= r1 * f;
        }
    }
    // Thomas
    let mut cp = vec![0.0; n];
    let mut dp = vec![C64::new(0.0, 0.0); n];
    cp[0] = up[0] / di[0];
    dp[0] = r[0] / di[0];
    for l in 1..n {
        let m = di[l] - lo[l] * cp[l - 1];
        cp[l] = up[l] / m;
        dp[l] = (r[l] - dp[l - 1] * lo[l]) / m;
    }
    r[n - 1] = dp[n - 1];
    for l in (0..n - 1).rev() {
        r[l] = dp[l] - r[l + 1] * cp[l];
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.par_iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Right-preconditioned BiCGSTAB.
fn bicgstab(op: impl Fn(&[f64]) -> Vec<f64>, pre: impl Fn(&[f64]) -> Vec<f64>, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, FdReport)> {
    let n = b.len();
    let bn = norm(b);
    if bn == 0.0 {
        return Ok((vec![0.0; n], FdReport { iterations: 0, residual: 0.0 }));
    }
    let mut x = pre(b);
    let ax = op(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(a, c)| a - c).collect();
    let rh = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut res = norm(&r) / bn;
    for it in 1..=max_iter {
        if res <= tol {
            return Ok((x, FdReport { iterations: it - 1, residual: res }));
        }
        let rho1 = dot(&rh, &r);
        if rho1 == 0.0 {
            break;
        }
        let beta = (rho1 / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let ph = pre(&p);
        v = op(&ph);
        alpha = rho1 / dot(&rh, &v);
        let s: Vec<f64> = r.iter().zip(&v).map(|(a, c)| a - alpha * c).collect();
        if norm(&s) / bn <= tol {
            for i in 0..n {
                x[i] += alpha * ph[i];
            }
            return Ok((x, FdReport { iterations: it, residual: norm(&s) / bn }));
        }
        let sh = pre(&s);
        let t = op(&sh);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * ph[i] + omega * sh[i];
            r[i] = s[i] - omega * t[i];
        }
        rho = rho1;
        res = norm(&r) / bn;
    }
    if res <= tol {
        return Ok((x, FdReport { iterations: max_iter, residual: res }));
    }
    Err(Error::SolveFailed { residual: res })
}

const FD_MAX_ITER: usize = 500;

/// Harmonic potential with data: interior `-Δ^Σφ = f`, `∂_wφ(-h) = g_b`,
/// `φ(0) = g_t`.
pub fn fd_solve_phi_with(f: &[f64], g_b: &[f64], g_t: &[f64], d: &Diffeo, fg: &FDGrid, tol: f64) -> Result<(FdField, FdReport)> {
    let nh = fg.n_h();
    let co = Coeffs::new(d, fg);
    let nb = neighbours(fg);
    let mut b = f.to_vec();
    b[..nh].copy_from_slice(g_b);
    b[(fg.nw - 1) * nh..].copy_from_slice(g_t);
    let (x, rep) = bicgstab(|u| apply_phi(u, &co, fg, &nb), |r| precondition(r, &[Bc::NeuDir], fg), &b, tol, FD_MAX_ITER)?;
    Ok((FdField { values: x, nh }, rep))
}

pub fn fd_solve_phi(phi: &Field2, d: &Diffeo, fg: &FDGrid, tol: f64) -> Result<(FdField, FdReport)> {
    let nh = fg.n_h();
    fd_solve_phi_with(&vec![0.0; fg.len()], &vec![0.0; nh], &sample2(phi, fg), d, fg, tol)
}

/// Vector potential with data: interior `-Δ^ΣA = f`, bottom rows zero, top
/// rows `(curl^ΣA)_∥ = k`, `A·N = 0`.
pub fn fd_solve_a_with(f: [&[f64]; 3], k: [&[f64]; 2], d: &Diffeo, fg: &FDGrid, tol: f64) -> Result<([FdField; 3], FdReport)> {
    let m = fg.len();
    let nh = fg.n_h();
    let co = Coeffs::new(d, fg);
    let nb = neighbours(fg);
    let mut b = vec![0.0; 3 * m];
    for c in 0..3 {
        b[c * m..(c + 1) * m].copy_from_slice(f[c]);
        for v in b[c * m..c * m + nh].iter_mut() {
            *v = 0.0;
        }
    }
    let top = (fg.nw - 1) * nh;
    for p in 0..nh {
        b[top + p] = k[1][p];
        b[m + top + p] = -k[0][p];
        b[2 * m + top + p] = 0.0;
    }
    let kinds = [Bc::DirNeu, Bc::DirNeu, Bc::NeuDir];
    let (x, rep) = bicgstab(|u| apply_a(u, &co, fg, &nb), |r| precondition(r, &kinds, fg), &b, tol, FD_MAX_ITER)?;
    let comp = |c: usize| FdField { values: x[c * m..(c + 1) * m].to_vec(), nh };
    Ok(([comp(0), comp(1), comp(2)], rep))
}

pub fn fd_solve_a(omega: &VectorField3, d: &Diffeo, fg: &FDGrid, tol: f64) -> Result<([FdField; 3], FdReport)> {
    let f: Vec<Vec<f64>> = omega.0.iter().map(|c| sample3(c, fg)).collect();
    let nu = crate::solver::surface_normal_vorticity(omega, &d.eta);
    let kk = -&nu.inv_laplacian_meanfree().grad_perp();
    let (k1, k2) = (sample2(&kk.0[0], fg), sample2(&kk.0[1], fg));
    fd_solve_a_with([&f[0], &f[1], &f[2]], [&k1, &k2], d, fg, tol)
}

/// Residuals of the straightened div-curl system.
#[derive(Clone, Debug, Serialize)]
pub struct DivCurlReport {
    pub curl: f64,
    pub div: f64,
    pub bottom: f64,
    pub surface: f64,
    /// Normalization used for the relative values.
    pub scale: f64,
    pub tol: f64,
    pub pass: bool,
}

impl DivCurlReport {
    pub fn relative(&self) -> [f64; 4] {
        [self.curl / self.scale, self.div / self.scale, self.bottom / self.scale, self.surface / self.scale]
    }
}

/// Default relative tolerance of [`verify_divcurl`].
pub const DIVCURL_TOL: f64 = 1e-6;

/// Max-norm residuals of `curl^ΣU = ω̃`, `div^ΣU = 0`, `U_3(-h) = 0` and
/// `U_∥ = ∇Φ - ∇⊥Δ⁻¹(ω̃·N)`, relative to `max(‖U‖, ‖ω̃‖)`.
pub fn verify_divcurl(u: &VectorField3, omega: &VectorField3, phi: &Field2, d: &Diffeo, tol: f64) -> DivCurlReport {
    let c = &flat_curl(u, d) - omega;
    let curl = c.0.iter().map(|f| f.max_abs()).fold(0.0, f64::max);
    let div = flat_div(u, d).max_abs();
    let bottom = u.0[2].bottom().max_abs();
    let ge = d.eta.grad();
    let us = u.surface();
    let nu = crate::solver::surface_normal_vorticity(omega, &d.eta);
    let want = &phi.grad() - &nu.inv_laplacian_meanfree().grad_perp();
    let surface = (0..2).map(|j| (&(&us[j] + &us[2].prod(&ge.0[j])) - &want.0[j]).max_abs()).fold(0.0, f64::max);
    let un = u.0.iter().map(|f| f.max_abs()).fold(0.0, f64::max);
    let on = omega.0.iter().map(|f| f.max_abs()).fold(0.0, f64::max);
    let scale = un.max(on).max(f64::MIN_POSITIVE);
    let pass = [curl, div, bottom, surface].iter().all(|v| v / scale <= tol);
    DivCurlReport { curl, div, bottom, surface, scale, tol, pass }
}

/// Least-squares fit of `ln e = p ln s + c`; returns `(p, r²)`.
pub fn slope_fit(samples: &[(f64, f64)]) -> Result<(f64, f64)> {
    if samples.len() < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 samples, got {}", samples.len())));
    }
    if let Some((s, e)) = samples.iter().find(|(s, e)| !(*s > 0.0 && *e > 0.0 && s.is_finite() && e.is_finite())) {
        return Err(Error::DegenerateFit(format!("non-positive sample ({s}, {e})")));
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all scales equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let p = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok((p, r2))
}
