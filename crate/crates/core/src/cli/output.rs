use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::dynamics::RunReport;
use crate::error::Result;
use crate::geometry::HausdorffEstimate;
use crate::linalg::fmt17;
use crate::network::GainCertificate;

/// Writes `contents` to `dir/name` through a temporary file and a rename, so
/// readers never observe a partial file.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, &path)?;
    Ok(path)
}

pub fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt17(*x)).collect::<Vec<_>>().join(",")
}

pub fn gain_lines(prefix: &str, g: &GainCertificate) -> String {
    g.to_text().lines().map(|l| format!("{prefix}{l}\n")).collect()
}

pub fn hausdorff_lines(prefix: &str, h: &[Option<HausdorffEstimate>]) -> String {
    let mut out = String::new();
    for (i, e) in h.iter().enumerate() {
        match e {
            Some(e) => {
                let _ = writeln!(out, "{prefix}player{}.value = {}", i + 1, fmt17(e.value));
                let _ = writeln!(out, "{prefix}player{}.resolution = {}", i + 1, e.resolution);
                let _ = writeln!(out, "{prefix}player{}.refined = {}", i + 1, e.refined);
            }
            None => {
                let _ = writeln!(out, "{prefix}player{}.value = unavailable", i + 1);
            }
        }
    }
    out
}

pub fn run_lines(prefix: &str, r: &RunReport) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{prefix}{k} = {v}");
    };
    kv("mode", r.mode.to_string());
    kv("converged", r.converged.to_string());
    kv("steps", r.steps.to_string());
    kv("t_final", fmt17(r.t_final));
    kv("wall_time_s", fmt17(r.wall_time));
    kv("residual_x", fmt17(r.terminal_residuals.0));
    kv("residual_zeta", fmt17(r.terminal_residuals.1));
    kv("qp_iterations_total", r.qp_iterations_total.to_string());
    kv("max_phi_sum", fmt17(r.max_phi_sum));
    kv("x_final", join(&r.x_final));
    kv("zeta_final", join(&r.zeta_final));
    if let Some(w) = &r.gain_warning {
        kv("warning", w.clone());
    }
    out
}
