//! Convergence tables, VTK snapshots and the end-to-end experiment driver.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::adaptivity::{adapt_loop_with, rate_fit, AdaptOutcome, ConvergenceRecord, StopReason};
use crate::config::ProblemConfig;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::solver::SolutionState;

pub const CSV_HEADER: &str =
    "iter,n_elements,n_vertices,ndof,estimator_total,estimator_ns,estimator_heat,picard_iters,min_h_at_z";

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Renders records as CSV. Reals use `{:.16e}`, which round-trips every f64.
pub fn convergence_csv(records: &[ConvergenceRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::Records("no convergence records to write".into()));
    }
    let mut out = String::with_capacity(128 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{:.16e},{:.16e},{:.16e},{},{:.16e}",
            r.iteration,
            r.n_elements,
            r.n_vertices,
            r.ndof,
            r.estimator_total,
            r.estimator_ns,
            r.estimator_heat,
            r.picard_iterations,
            r.min_h_at_z
        )
        .expect("writing to a String cannot fail");
    }
    Ok(out)
}

pub fn write_convergence_csv(records: &[ConvergenceRecord], path: &Path) -> Result<()> {
    let text = convergence_csv(records)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parses a file written by [`write_convergence_csv`]. `min_h` is not
/// stored and comes back as NaN.
pub fn read_convergence_csv(path: &Path) -> Result<Vec<ConvergenceRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Records(format!("{}: unexpected header", path.display())));
    }
    let bad = |n: usize| Error::Records(format!("{}: malformed row {n}", path.display()));
    lines
        .enumerate()
        .map(|(n, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(bad(n + 1));
            }
            let int = |i: usize| f[i].parse::<usize>().map_err(|_| bad(n + 1));
            let real = |i: usize| f[i].parse::<f64>().map_err(|_| bad(n + 1));
            Ok(ConvergenceRecord {
                iteration: int(0)?,
                n_elements: int(1)?,
                n_vertices: int(2)?,
                ndof: int(3)?,
                estimator_total: real(4)?,
                estimator_ns: real(5)?,
                estimator_heat: real(6)?,
                picard_iterations: int(7)?,
                min_h_at_z: real(8)?,
                min_h: f64::NAN,
            })
        })
        .collect()
}

/// Legacy ASCII VTK unstructured grid with the fields sampled at vertices.
pub fn vtk_string(mesh: &Mesh, state: &SolutionState) -> Result<String> {
    state.check_mesh(mesh)?;
    let nv = mesh.n_vertices();
    let ne = mesh.n_elements();
    // Vertex DOFs come first in every space and hold the vertex values.
    let u = state.u.values();
    let udofs = state.u.space().n_dofs();
    let vel = |v: usize| [u[v], u[udofs + v]];

    let mut out = String::with_capacity(64 * (nv + ne));
    out.push_str("# vtk DataFile Version 3.0\nboussinesq solution\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(out, "POINTS {nv} double").unwrap();
    for p in mesh.vertices() {
        writeln!(out, "{:.16e} {:.16e} 0", p.x, p.y).unwrap();
    }
    writeln!(out, "CELLS {ne} {}", 4 * ne).unwrap();
    for t in mesh.elements() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(out, "CELL_TYPES {ne}").unwrap();
    for _ in 0..ne {
        out.push_str("5\n");
    }
    writeln!(out, "POINT_DATA {nv}").unwrap();
    out.push_str("VECTORS velocity double\n");
    for v in 0..nv {
        let [a, b] = vel(v);
        writeln!(out, "{a:.16e} {b:.16e} 0").unwrap();
    }
    let scalars = |out: &mut String, name: &str, f: &dyn Fn(usize) -> f64| {
        writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
        for v in 0..nv {
            writeln!(out, "{:.16e}", f(v)).unwrap();
        }
    };
    scalars(&mut out, "pressure", &|v| state.p.values()[v]);
    scalars(&mut out, "temperature", &|v| state.t.values()[v]);
    scalars(&mut out, "speed", &|v| {
        let [a, b] = vel(v);
        a.hypot(b)
    });
    Ok(out)
}

pub fn write_vtk(mesh: &Mesh, state: &SolutionState, path: &Path) -> Result<()> {
    let text = vtk_string(mesh, state)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Where a run writes its files.
#[derive(Clone, Debug)]
pub struct RunManifest {
    pub config: ProblemConfig,
    pub out_dir: PathBuf,
    pub csv_file: String,
    pub summary_file: String,
    /// Snapshot every this many iterations (and after the last one).
    pub vtk_every: Option<usize>,
    pub version: &'static str,
}

impl RunManifest {
    /// Creates the output directory and checks that it is writable.
    pub fn new(config: ProblemConfig, out_dir: impl Into<PathBuf>, vtk_every: Option<usize>) -> Result<RunManifest> {
        config.validate()?;
        if vtk_every == Some(0) {
            return Err(Error::InvalidConfig("vtk_every must be at least 1".into()));
        }
        let out_dir = out_dir.into();
        fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
        let probe = out_dir.join(".write_test");
        fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
        fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))?;
        Ok(RunManifest {
            config,
            out_dir,
            csv_file: "convergence.csv".into(),
            summary_file: "summary.txt".into(),
            vtk_every,
            version: VERSION,
        })
    }

    pub fn vtk_file(iteration: usize) -> String {
        format!("solution_{iteration:03}.vtk")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# boussinesq {}\n", self.version);
        out.push_str(&self.config.to_config_string());
        writeln!(out, "# csv = {}", self.csv_file).unwrap();
        writeln!(out, "# summary = {}", self.summary_file).unwrap();
        if let Some(n) = self.vtk_every {
            writeln!(out, "# vtk every {n} iterations: {}", RunManifest::vtk_file(1).replace("001", "NNN")).unwrap();
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub outcome: AdaptOutcome,
    /// `None` with fewer than five records.
    pub slope: Option<f64>,
    pub vtk_files: Vec<PathBuf>,
}

impl RunReport {
    pub fn summary(&self) -> String {
        let mut out = String::new();
        writeln!(out, "stop = {}", self.outcome.stop).unwrap();
        writeln!(out, "iterations = {}", self.outcome.records.len()).unwrap();
        if let Some(r) = self.outcome.records.last() {
            writeln!(out, "final_elements = {}", r.n_elements).unwrap();
            writeln!(out, "final_vertices = {}", r.n_vertices).unwrap();
            writeln!(out, "final_ndof = {}", r.ndof).unwrap();
            writeln!(out, "final_estimator = {:.16e}", r.estimator_total).unwrap();
        }
        match self.slope {
            Some(s) => writeln!(out, "rate_fit_slope = {s:.6}").unwrap(),
            None => out.push_str("rate_fit_slope = n/a\n"),
        }
        out
    }
}

/// Runs the adaptive loop and writes the manifest, CSV, summary and
/// optional VTK snapshots. A run that stops early still writes everything
/// recorded so far; the stop reason is in the report.
pub fn run_experiment(manifest: &RunManifest) -> Result<RunReport> {
    let dir = &manifest.out_dir;
    let manifest_path = dir.join("manifest.txt");
    fs::write(&manifest_path, manifest.to_text()).map_err(|e| Error::io(&manifest_path, e))?;

    let mut vtk_files = Vec::new();
    let cfg = &manifest.config;
    let outcome = adapt_loop_with(cfg, |data| {
        if let Some(every) = manifest.vtk_every {
            let it = data.record.iteration;
            if it % every == 0 || it == cfg.adapt_max {
                let path = dir.join(RunManifest::vtk_file(it));
                write_vtk(data.mesh, data.state, &path)?;
                vtk_files.push(path);
            }
        }
        Ok(())
    })?;

    // a snapshot of the final mesh when the loop stopped early
    if let (Some(every), Some(mesh), Some(state), Some(last)) =
        (manifest.vtk_every, &outcome.mesh, &outcome.state, outcome.records.last())
    {
        if !matches!(outcome.stop, StopReason::Completed) && last.iteration % every != 0 {
            let path = dir.join(RunManifest::vtk_file(last.iteration));
            write_vtk(mesh, state, &path)?;
            vtk_files.push(path);
        }
    }

    if !outcome.records.is_empty() {
        write_convergence_csv(&outcome.records, &dir.join(&manifest.csv_file))?;
    }
    let report = RunReport { slope: rate_fit(&outcome.records).ok(), outcome, vtk_files };
    let summary_path = dir.join(&manifest.summary_file);
    fs::write(&summary_path, report.summary()).map_err(|e| Error::io(&summary_path, e))?;
    Ok(report)
}
