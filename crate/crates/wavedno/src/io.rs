//! Field containers on disk.
//!
//! A container is a pair of files: `<stem>.bin` holds the grid description
//! and the coefficient arrays, `<stem>.json` repeats the grid parameters
//! with component labels and free-form metadata.
//!
//! Binary layout, all little-endian:
//!
//! ```text
//! magic  b"WDNOFLD1"
//! nx ny  u64          lx ly  f64
//! nw     u64          h      f64      (nw = 0: no vertical grid)
//! ncomp  u64
//! per component: len u64, then len pairs (re, im) of f64
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::expansion::ExpansionResult;
use crate::geometry::Diffeo;
use crate::paralin::Symbol;
use crate::solver::BVPSolution;
use crate::spectral::{Field2, Field3, HGrid, VGrid, VectorField3};

const MAGIC: &[u8; 8] = b"WDNOFLD1";

/// JSON sidecar of a container.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub kind: String,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub nw: usize,
    pub h: f64,
    pub components: Vec<String>,
    pub meta: Value,
}

#[derive(Clone, Debug)]
pub struct Container {
    pub hg: Arc<HGrid>,
    pub vg: Option<Arc<VGrid>>,
    pub kind: String,
    pub labels: Vec<String>,
    pub data: Vec<Vec<C64>>,
    pub meta: Value,
}

fn bin_path(stem: &Path) -> PathBuf {
    stem.with_extension("bin")
}

fn json_path(stem: &Path) -> PathBuf {
    stem.with_extension("json")
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

impl Container {
    pub fn new(kind: &str, hg: &Arc<HGrid>, vg: Option<&Arc<VGrid>>) -> Self {
        Container { hg: hg.clone(), vg: vg.cloned(), kind: kind.into(), labels: Vec::new(), data: Vec::new(), meta: Value::Null }
    }

    pub fn push2(&mut self, label: &str, f: &Field2) -> Result<()> {
        if !f.grid.same(&self.hg) {
            return Err(Error::GridMismatch(format!("component {label}")));
        }
        self.labels.push(label.into());
        self.data.push(f.c.clone());
        Ok(())
    }

    pub fn push3(&mut self, label: &str, f: &Field3) -> Result<()> {
        let vg = self.vg.get_or_insert_with(|| f.vg.clone());
        if !f.hg.same(&self.hg) || **vg != *f.vg {
            return Err(Error::GridMismatch(format!("component {label}")));
        }
        self.labels.push(label.into());
        self.data.push(f.c.clone());
        Ok(())
    }

    pub fn push_vector3(&mut self, label: &str, v: &VectorField3) -> Result<()> {
        for (i, f) in v.0.iter().enumerate() {
            self.push3(&format!("{label}.{}", i + 1), f)?;
        }
        Ok(())
    }

    pub fn push_raw(&mut self, label: &str, c: Vec<C64>) {
        self.labels.push(label.into());
        self.data.push(c);
    }

    fn position(&self, label: &str) -> Result<usize> {
        self.labels.iter().position(|l| l == label).ok_or_else(|| Error::Io(format!("no component {label}")))
    }

    pub fn field2(&self, label: &str) -> Result<Field2> {
        let i = self.position(label)?;
        if self.data[i].len() != self.hg.len() {
            return Err(Error::GridMismatch(format!("{label} is not a horizontal field")));
        }
        Ok(Field2 { grid: self.hg.clone(), c: self.data[i].clone() })
    }

    pub fn field3(&self, label: &str) -> Result<Field3> {
        let i = self.position(label)?;
        let vg = self.vg.as_ref().ok_or_else(|| Error::GridMismatch("container has no vertical grid".into()))?;
        if self.data[i].len() != self.hg.len() * vg.nw {
            return Err(Error::GridMismatch(format!("{label} is not a strip field")));
        }
        Ok(Field3 { hg: self.hg.clone(), vg: vg.clone(), c: self.data[i].clone() })
    }

    pub fn vector3(&self, label: &str) -> Result<VectorField3> {
        Ok(VectorField3([self.field3(&format!("{label}.1"))?, self.field3(&format!("{label}.2"))?, self.field3(&format!("{label}.3"))?]))
    }

    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            kind: self.kind.clone(),
            nx: self.hg.nx,
            ny: self.hg.ny,
            lx: self.hg.lx,
            ly: self.hg.ly,
            nw: self.vg.as_ref().map_or(0, |v| v.nw),
            h: self.vg.as_ref().map_or(0.0, |v| v.h),
            components: self.labels.clone(),
            meta: self.meta.clone(),
        }
    }

    /// Writes `<stem>.bin` and `<stem>.json`.
    pub fn write(&self, stem: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(bin_path(stem))?);
        w.write_all(MAGIC)?;
        let sc = self.sidecar();
        w.write_u64::<LittleEndian>(sc.nx as u64)?;
        w.write_u64::<LittleEndian>(sc.ny as u64)?;
        w.write_f64::<LittleEndian>(sc.lx)?;
        w.write_f64::<LittleEndian>(sc.ly)?;
        w.write_u64::<LittleEndian>(sc.nw as u64)?;
        w.write_f64::<LittleEndian>(sc.h)?;
        w.write_u64::<LittleEndian>(self.data.len() as u64)?;
        for d in &self.data {
            w.write_u64::<LittleEndian>(d.len() as u64)?;
            for v in d {
                w.write_f64::<LittleEndian>(v.re)?;
                w.write_f64::<LittleEndian>(v.im)?;
            }
        }
        w.flush()?;
        let js = serde_json::to_string_pretty(&sc).map_err(io_err)?;
        std::fs::write(json_path(stem), js + "\n")?;
        Ok(())
    }

    /// Reads a container; the sidecar must agree with the binary header.
    pub fn read(stem: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(bin_path(stem))?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Io("not a field container".into()));
        }
        let nx = r.read_u64::<LittleEndian>()? as usize;
        let ny = r.read_u64::<LittleEndian>()? as usize;
        let lx = r.read_f64::<LittleEndian>()?;
        let ly = r.read_f64::<LittleEndian>()?;
        let nw = r.read_u64::<LittleEndian>()? as usize;
        let h = r.read_f64::<LittleEndian>()?;
        if nx < 4 || ny < 4 || nx % 2 == 1 || ny % 2 == 1 || !(lx > 0.0 && ly > 0.0) || (nw > 0 && (nw < 2 || !(h > 0.0))) {
            return Err(Error::Io("invalid grid in container header".into()));
        }
        let ncomp = r.read_u64::<LittleEndian>()? as usize;
        let mut data = Vec::with_capacity(ncomp.min(1 << 16));
        for _ in 0..ncomp {
            let len = r.read_u64::<LittleEndian>()? as usize;
            if len > nx * ny * (nx * ny).max(nw) {
                return Err(Error::Io("component length exceeds grid size".into()));
            }
            let mut d = Vec::with_capacity(len);
            for _ in 0..len {
                let re = r.read_f64::<LittleEndian>()?;
                let im = r.read_f64::<LittleEndian>()?;
                d.push(C64::new(re, im));
            }
            data.push(d);
        }
        let sc: Sidecar = serde_json::from_str(&std::fs::read_to_string(json_path(stem))?).map_err(io_err)?;
        if (sc.nx, sc.ny, sc.nw, sc.lx, sc.ly, sc.h) != (nx, ny, nw, lx, ly, h) || sc.components.len() != ncomp {
            return Err(Error::Io("sidecar disagrees with binary header".into()));
        }
        Ok(Container {
            hg: HGrid::new(lx, ly, nx, ny),
            vg: (nw > 0).then(|| VGrid::new(h, nw)),
            kind: sc.kind,
            labels: sc.components,
            data,
            meta: sc.meta,
        })
    }
}

pub fn save_field2(stem: &Path, label: &str, f: &Field2) -> Result<()> {
    let mut c = Container::new("field2", &f.grid, None);
    c.push2(label, f)?;
    c.write(stem)
}

pub fn save_field3(stem: &Path, label: &str, f: &Field3) -> Result<()> {
    let mut c = Container::new("field3", &f.hg, Some(&f.vg));
    c.push3(label, f)?;
    c.write(stem)
}

/// Elevation, `σ` and its derivatives, with kind, `h` and `c₀` in the sidecar.
pub fn save_diffeo(stem: &Path, d: &Diffeo) -> Result<()> {
    let mut c = Container::new("diffeo", d.hgrid(), Some(d.vgrid()));
    c.push2("eta", &d.eta)?;
    c.push3("sigma", &d.sigma)?;
    c.push3("sigma_x", &d.sx)?;
    c.push3("sigma_y", &d.sy)?;
    c.push3("sigma_w", &d.sw)?;
    c.meta = serde_json::json!({ "kind": d.kind, "h": d.h, "c0": d.c0, "jac_min": d.jac_min });
    c.write(stem)
}

pub fn save_solution(stem: &Path, s: &BVPSolution) -> Result<()> {
    let mut c = Container::new("bvp_solution", &s.g.grid, Some(&s.phi.vg));
    c.push_vector3("a", &s.a)?;
    c.push3("phi", &s.phi)?;
    c.push_vector3("u", &s.u)?;
    for (l, f) in [("g_i", &s.g_i), ("g_ii", &s.g_ii), ("g", &s.g), ("w", &s.w), ("omega_n", &s.omega_n)] {
        c.push2(l, f)?;
    }
    c.meta = serde_json::json!({
        "iterations_a": s.report_a.iterations,
        "iterations_phi": s.report_phi.iterations,
        "last_update_a": s.report_a.last_update,
        "last_update_phi": s.report_phi.last_update,
    });
    c.write(stem)
}

/// Per-order `G_j`, `G_{j,I}`, `G_{j,II}` with their L² norms in the manifest.
pub fn save_expansion(stem: &Path, e: &ExpansionResult) -> Result<()> {
    let mut c = Container::new("expansion", &e.g[0].grid, None);
    let mut norms = Vec::new();
    for j in 0..=e.order() {
        c.push2(&format!("g_{j}"), &e.g[j])?;
        c.push2(&format!("g_i_{j}"), &e.g_i[j])?;
        c.push2(&format!("g_ii_{j}"), &e.g_ii[j])?;
        norms.push(serde_json::json!({ "order": j, "g": e.g[j].norm_l2(), "g_i": e.g_i[j].norm_l2(), "g_ii": e.g_ii[j].norm_l2() }));
    }
    c.meta = serde_json::json!({ "order": e.order(), "norms": norms });
    c.write(stem)
}

/// Each component as its mode-major table `a(x′_j, ξ_k)`, with the
/// component orders in the manifest.
pub fn save_symbol(stem: &Path, s: &Symbol) -> Result<()> {
    let mut c = Container::new("symbol", &s.grid, None);
    for i in 0..s.comps.len() {
        c.push_raw(&format!("component_{i}"), s.component_table(i));
    }
    c.meta = serde_json::json!({ "orders": s.orders(), "layout": "mode-major, entry k*N + j = a(x_j, xi_k)" });
    c.write(stem)
}

/// Physical samples of horizontal fields, one row per grid point.
pub fn write_csv(path: &Path, columns: &[(&str, &Field2)]) -> Result<()> {
    let hg = columns.first().map(|c| c.1.grid.clone()).ok_or_else(|| Error::Io("no columns".into()))?;
    if columns.iter().any(|c| !c.1.grid.same(&hg)) {
        return Err(Error::GridMismatch("csv columns on different grids".into()));
    }
    let phys: Vec<Vec<f64>> = columns.iter().map(|c| c.1.to_phys()).collect();
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    let mut header = vec!["x".to_string(), "y".to_string()];
    header.extend(columns.iter().map(|c| c.0.to_string()));
    w.write_record(&header).map_err(io_err)?;
    for iy in 0..hg.ny {
        for ix in 0..hg.nx {
            let j = iy * hg.nx + ix;
            let mut row = vec![hg.x(ix).to_string(), hg.y(iy).to_string()];
            row.extend(phys.iter().map(|p| p[j].to_string()));
            w.write_record(&row).map_err(io_err)?;
        }
    }
    w.flush()?;
    Ok(())
}
