//! Plot-ready CSV tables and atomic file output.
//!
//! Numbers are written with 17 significant digits so every value parses back
//! to the same `f64`.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::Path;

use crate::domain::Point;
use crate::field::SpaceTimeField;
use crate::lemmas::KappaEstimate;
use crate::semigroup::KernelMatrix;

/// Render `v` with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn point_headers(name: &str, dim: usize) -> String {
    if dim == 1 {
        name.to_string()
    } else {
        format!("{name}1,{name}2")
    }
}

fn push_point(row: &mut String, p: Point, dim: usize) {
    for &c in &p[..dim] {
        row.push_str(&fmt_f64(c));
        row.push(',');
    }
}

/// `x, y, t, K` rows for every `x` and each kernel column in `columns`.
/// Two-dimensional grids use `x1, x2, y1, y2`.
pub fn kernel_csv(kernels: &[KernelMatrix], columns: &[usize], dim: usize) -> String {
    let mut out = format!(
        "{},{},t,K\n",
        point_headers("x", dim),
        point_headers("y", dim)
    );
    for k in kernels {
        for &j in columns {
            for i in 0..k.len() {
                push_point(&mut out, k.points[i], dim);
                push_point(&mut out, k.points[j], dim);
                let _ = writeln!(out, "{},{}", fmt_f64(k.t), fmt_f64(k.get(i, j)));
            }
        }
    }
    out
}

/// `x, t, v, U, w` rows, plus `U_max` when the maximal iterate is given.
///
/// Panics if the fields do not share one grid.
pub fn fields_csv(
    v: &SpaceTimeField,
    u: &SpaceTimeField,
    w: &SpaceTimeField,
    maximal: Option<&SpaceTimeField>,
    dim: usize,
) -> String {
    let shape = |f: &SpaceTimeField| (f.points().len(), f.times().len());
    assert!(
        shape(v) == shape(u) && shape(u) == shape(w),
        "fields on different grids"
    );
    if let Some(m) = maximal {
        assert!(shape(m) == shape(u), "fields on different grids");
    }
    let mut out = format!("{},t,v,U,w", point_headers("x", dim));
    out.push_str(if maximal.is_some() { ",U_max\n" } else { "\n" });
    for (m, &t) in u.times().iter().enumerate() {
        for (i, &p) in u.points().iter().enumerate() {
            push_point(&mut out, p, dim);
            let _ = write!(
                out,
                "{},{},{},{}",
                fmt_f64(t),
                fmt_f64(v.get(m, i)),
                fmt_f64(u.get(m, i)),
                fmt_f64(w.get(m, i))
            );
            if let Some(f) = maximal {
                let _ = write!(out, ",{}", fmt_f64(f.get(m, i)));
            }
            out.push('\n');
        }
    }
    out
}

/// `t, min_value, argmin` rows of a κ estimate.
pub fn kappa_csv(est: &KappaEstimate, dim: usize) -> String {
    let mut out = format!("t,min_value,{}\n", point_headers("argmin", dim));
    for s in &est.samples {
        let _ = write!(out, "{},{}", fmt_f64(s.t), fmt_f64(s.min_value));
        for &c in &s.argmin[..dim] {
            let _ = write!(out, ",{}", fmt_f64(c));
        }
        out.push('\n');
    }
    out
}

/// Write `bytes` to a temporary sibling of `path`, then rename it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}
