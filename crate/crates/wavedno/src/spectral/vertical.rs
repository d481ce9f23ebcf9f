use std::f64::consts::PI;
use std::sync::Arc;

/// Chebyshev–Lobatto nodes on `[-h, 0]`, ascending, with Clenshaw–Curtis
/// weights and the collocation differentiation matrix.
#[derive(Debug, Clone)]
pub struct VGrid {
    pub h: f64,
    pub nw: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    bary: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl PartialEq for VGrid {
    fn eq(&self, o: &Self) -> bool {
        self.nw == o.nw && self.h == o.h
    }
}

/// Nodes on `[-1, 1]`, ascending.
pub fn cheb_nodes(nw: usize) -> Vec<f64> {
    let n = (nw - 1) as f64;
    (0..nw).map(|j| -(PI * j as f64 / n).cos()).collect()
}

/// Clenshaw–Curtis weights for [`cheb_nodes`] on `[-1, 1]`.
pub fn clenshaw_curtis(nw: usize) -> Vec<f64> {
    let n = nw - 1;
    let mut w = vec![0.0; nw];
    for (j, wj) in w.iter_mut().enumerate() {
        let th = PI * j as f64 / n as f64;
        let mut s = 1.0;
        for k in 1..=n / 2 {
            let b = if 2 * k == n { 1.0 } else { 2.0 };
            s -= b * (2.0 * k as f64 * th).cos() / (4.0 * (k * k) as f64 - 1.0);
        }
        let c = if j == 0 || j == n { 1.0 } else { 2.0 };
        *wj = c * s / n as f64;
    }
    w
}

/// Barycentric weights of Lobatto points (sign pattern and halved ends).
fn lobatto_bary(nw: usize) -> Vec<f64> {
    (0..nw)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == nw - 1 {
                0.5 * s
            } else {
                s
            }
        })
        .collect()
}

/// Differentiation matrix for arbitrary distinct nodes with barycentric weights.
pub fn diff_matrix(x: &[f64], lam: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = lam[j] / lam[i] / (x[i] - x[j]);
                d[i * n + j] = v;
                diag -= v;
            }
        }
        d[i * n + i] = diag;
    }
    d
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik != 0.0 {
                for j in 0..n {
                    c[i * n + j] += aik * b[k * n + j];
                }
            }
        }
    }
    c
}

impl VGrid {
    pub fn new(h: f64, nw: usize) -> Arc<Self> {
        assert!(h > 0.0, "depth must be positive");
        assert!(nw >= 3, "need at least three vertical nodes");
        let t = cheb_nodes(nw);
        let nodes: Vec<f64> = t.iter().map(|&s| 0.5 * h * (s - 1.0)).collect();
        let weights = clenshaw_curtis(nw).into_iter().map(|v| 0.5 * h * v).collect();
        let bary = lobatto_bary(nw);
        let d1 = diff_matrix(&nodes, &bary);
        let d2 = matmul(&d1, &d1, nw);
        Arc::new(VGrid { h, nw, nodes, weights, bary, d1, d2 })
    }

    /// First-derivative collocation matrix, row-major.
    pub fn d1(&self) -> &[f64] {
        &self.d1
    }

    pub fn d2(&self) -> &[f64] {
        &self.d2
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(a, b)| a * b).sum()
    }

    /// Lagrange basis values at `w` (barycentric form).
    pub fn lagrange_row(&self, w: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.nw];
        for (j, &wj) in self.nodes.iter().enumerate() {
            if (w - wj).abs() < 1e-14 * self.h {
                out[j] = 1.0;
                return out;
            }
        }
        let mut den = 0.0;
        for j in 0..self.nw {
            let t = self.bary[j] / (w - self.nodes[j]);
            out[j] = t;
            den += t;
        }
        for v in out.iter_mut() {
            *v /= den;
        }
        out
    }

    pub fn interpolate(&self, f: &[f64], w: f64) -> f64 {
        self.lagrange_row(w).iter().zip(f).map(|(a, b)| a * b).sum()
    }
}
