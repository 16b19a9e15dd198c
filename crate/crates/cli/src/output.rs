//! CSV and JSON artifacts. Everything is written to a staging directory
//! first and moved into place at the end.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tdsmat::grid::{Grid, WaveFunction};
use tdsmat::moller::Tau0Trace;

use crate::config::RunConfig;
use crate::pipeline::RunResult;

const STAGING: &str = ".staging";

#[derive(Serialize)]
struct Versions {
    tdsmat_cli: &'static str,
    tdsmat_core: &'static str,
}

#[derive(Serialize)]
struct Tau0Summary {
    channel: String,
    v: usize,
    tau0: f64,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    config: &'a RunConfig,
    seed: u64,
    versions: Versions,
    propagator_dt: f64,
    register_qubits: usize,
    tau0: Vec<Tau0Summary>,
    reactant_internal_energy: f64,
    product_internal_energies: Vec<f64>,
}

/// Writes all artifacts of `res` under `cfg.output_dir` and returns the paths written.
pub fn write_all(cfg: &RunConfig, res: &RunResult) -> std::io::Result<Vec<PathBuf>> {
    let out = &cfg.output_dir;
    let stage = out.join(STAGING);
    if stage.exists() {
        fs::remove_dir_all(&stage)?;
    }
    fs::create_dir_all(stage.join("snapshots"))?;

    write_corr(&stage.join("corr.csv"), res)?;
    write_smatrix(&stage.join("smatrix.csv"), res)?;
    write_traces(&stage.join("moller_trace.csv"), res)?;
    write_snapshots(&stage.join("snapshots"), res)?;
    write_record(&stage.join("run.json"), cfg, res)?;

    let mut written = Vec::new();
    for name in ["corr.csv", "smatrix.csv", "moller_trace.csv", "run.json", "snapshots"] {
        let dst = out.join(name);
        if dst.is_dir() {
            fs::remove_dir_all(&dst)?;
        }
        fs::rename(stage.join(name), &dst)?;
        written.push(dst);
    }
    fs::remove_dir_all(&stage)?;
    Ok(written)
}

fn csv_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

fn write_corr(path: &Path, res: &RunResult) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["v_out", "t", "re_c", "im_c", "stderr"]).map_err(csv_err)?;
    for p in &res.products {
        for ((t, c), s) in p.corr.times().iter().zip(&p.corr.values).zip(&p.corr.stderr) {
            w.serialize((p.v, t, c.re, c.im, s)).map_err(csv_err)?;
        }
    }
    w.flush()
}

fn write_smatrix(path: &Path, res: &RunResult) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["v_out", "e", "e_collision", "re_s", "im_s", "abs_s", "p", "mask"]).map_err(csv_err)?;
    for p in &res.products {
        let t = &p.table;
        for i in 0..t.energies.len() {
            let s = t.s[i];
            let e = t.energies[i];
            w.serialize((p.v, e, e - res.e_reactant, s.re, s.im, s.norm(), s.norm_sqr(), t.mask[i] as u8))
                .map_err(csv_err)?;
        }
    }
    w.flush()
}

fn trace_rows(w: &mut csv::Writer<fs::File>, channel: &str, v: usize, tr: &Tau0Trace) -> std::io::Result<()> {
    for (j, r) in tr.residuals.iter().enumerate() {
        w.serialize((channel, v, j + 1, tr.times[j], tr.times[j + 1], r, tr.tau0)).map_err(csv_err)?;
    }
    Ok(())
}

fn write_traces(path: &Path, res: &RunResult) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["channel", "v", "step", "tau_prev", "tau_next", "residual", "tau0"]).map_err(csv_err)?;
    trace_rows(&mut w, "reactant", res.plus.state.channel.v, &res.plus)?;
    for p in &res.products {
        trace_rows(&mut w, "product", p.v, &p.minus)?;
    }
    w.flush()
}

fn write_snapshots(dir: &Path, res: &RunResult) -> std::io::Result<()> {
    let mut idx = csv::Writer::from_path(dir.join("index.csv")).map_err(csv_err)?;
    idx.write_record(["file", "t"]).map_err(csv_err)?;
    for (i, (t, psi)) in res.snapshots.iter().enumerate() {
        let name = format!("snap_{i:03}.csv");
        write_wave(&dir.join(&name), psi)?;
        idx.serialize((&name, t)).map_err(csv_err)?;
    }
    idx.flush()
}

fn write_wave(path: &Path, psi: &WaveFunction) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    match psi.grid() {
        Grid::One(g) => {
            w.write_record(["x", "abs_psi", "re_psi", "im_psi"]).map_err(csv_err)?;
            for (j, a) in psi.amp().iter().enumerate() {
                w.serialize((g.x(j), a.norm(), a.re, a.im)).map_err(csv_err)?;
            }
        }
        Grid::Two(g2) => {
            w.write_record(["x", "y", "abs_psi"]).map_err(csv_err)?;
            for (i, a) in psi.amp().iter().enumerate() {
                let (ix, iy) = g2.split(i);
                w.serialize((g2.gx.x(ix), g2.gy.x(iy), a.norm())).map_err(csv_err)?;
            }
        }
    }
    w.flush()
}

fn write_record(path: &Path, cfg: &RunConfig, res: &RunResult) -> std::io::Result<()> {
    let mut tau0 = vec![Tau0Summary { channel: "reactant".into(), v: res.plus.state.channel.v, tau0: res.plus.tau0 }];
    tau0.extend(res.products.iter().map(|p| Tau0Summary { channel: "product".into(), v: p.v, tau0: p.minus.tau0 }));
    let rec = RunRecord {
        config: cfg,
        seed: cfg.circuit.seed,
        versions: Versions { tdsmat_cli: env!("CARGO_PKG_VERSION"), tdsmat_core: tdsmat::VERSION },
        propagator_dt: res.dt,
        register_qubits: res.register_qubits,
        tau0,
        reactant_internal_energy: res.e_reactant,
        product_internal_energies: res.products.iter().map(|p| p.e_internal).collect(),
    };
    let text = serde_json::to_string_pretty(&rec).map_err(std::io::Error::other)?;
    fs::write(path, text + "\n")
}
