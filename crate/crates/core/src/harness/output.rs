//! Plot-ready file formats: CSV trajectories and JSON reports.
//!
//! Floats are rendered with 17 significant digits so that a CSV written by
//! any worker count or rerun is byte-identical.

use crate::engine::RunOutput;
use std::io::Write;
use std::path::Path;

pub const CSV_HEADER: &str = "t,rho00_re,rho00_im,rho01_re,rho01_im,rho10_re,rho10_im,\
rho11_re,rho11_im,sigma_z,trace_re,norm,n_paths,mem_bytes";

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Render a run as CSV, one row per grid point.
pub fn trajectory_csv(run: &RunOutput) -> String {
    let mut out = String::with_capacity(run.times.len() * 256);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (k, (t, rho)) in run.times.iter().zip(&run.trajectory).enumerate() {
        let e = &rho.elements;
        let cols = [
            *t,
            e[0][0].re,
            e[0][0].im,
            e[0][1].re,
            e[0][1].im,
            e[1][0].re,
            e[1][0].im,
            e[1][1].re,
            e[1][1].im,
            rho.sigma_z_expectation(),
            rho.trace().re,
            rho.norm(),
        ];
        let mut row: Vec<String> = cols.iter().map(|v| fmt(*v)).collect();
        row.push(run.stats.n_paths[k].to_string());
        row.push(run.stats.mem_bytes[k].to_string());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_string(dir: &Path, name: &str, contents: &str) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut f = std::fs::File::create(dir.join(name))?;
    f.write_all(contents.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        let v = std::f64::consts::PI / 17.0;
        let s = fmt(v);
        let back: f64 = s.parse().unwrap();
        assert_eq!(v, back);
    }
}
