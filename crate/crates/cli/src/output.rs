//! CSV and JSON artifacts.
//!
//! Numbers are written with 17 significant digits so they round-trip exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use torus_bie::fields::{ConvergenceTable, FieldGrid};
use torus_bie::geometry::QuadratureGrid;
use torus_bie::SteklovEigenpair;

use crate::CliError;

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: PathBuf) -> Result<Self, CliError> {
        std::fs::create_dir_all(&root).map_err(|source| CliError::Output {
            path: root.clone(),
            source,
        })?;
        Ok(Self {
            root,
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.root.join(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Output { path, source })?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Names written so far, in order.
    pub fn written(&self) -> &[String] {
        &self.written
    }
}

/// `hole,t,x,y,phi,g` per node.
pub fn boundary_csv(grid: &QuadratureGrid, phi: &[f64], g: &[f64]) -> String {
    let mut s = String::from("hole,t,x,y,phi,g\n");
    for i in 0..grid.len() {
        let z = grid.point(i).position;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            grid.hole_of(i),
            num(grid.param(i)),
            num(z.re),
            num(z.im),
            num(phi[i]),
            num(g[i])
        );
    }
    s
}

/// `mode,hole,t,x,y,phi,g` with `g` the boundary trace of each eigenfunction.
pub fn steklov_boundary_csv(grid: &QuadratureGrid, pairs: &[SteklovEigenpair<'_>]) -> String {
    let mut s = String::from("mode,hole,t,x,y,phi,g\n");
    for (k, pair) in pairs.iter().enumerate() {
        for i in 0..grid.len() {
            let z = grid.point(i).position;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                k + 1,
                grid.hole_of(i),
                num(grid.param(i)),
                num(z.re),
                num(z.im),
                num(pair.phi[i]),
                num(pair.trace[i])
            );
        }
    }
    s
}

/// `x,y,value,mask`; the mask is `omega`, `hole` or `near`.
pub fn field_csv(field: &FieldGrid) -> String {
    let mut s = String::from("x,y,value,mask\n");
    for ((z, v), m) in field.points.iter().zip(&field.values).zip(&field.mask) {
        let _ = writeln!(s, "{},{},{},{}", num(z.re), num(z.im), num(*v), m.code());
    }
    s
}

pub fn convergence_csv(table: &ConvergenceTable) -> String {
    let mut s = String::from("n,error\n");
    for row in &table.rows {
        let _ = writeln!(s, "{},{}", row.n, num(row.error));
    }
    s
}

/// Serializes with a trailing newline.
pub fn json(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    s.push('\n');
    s
}
