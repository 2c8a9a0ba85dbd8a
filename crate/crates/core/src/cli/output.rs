//! Deterministic JSON and CSV emission. Every float is written with 17
//! significant digits so values round-trip exactly.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::Result;
use crate::phases::PhaseLedger;
use crate::propagation::CoefficientTrajectory;

/// `{:.16e}`, i.e. 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct ExactFloats(PrettyFormatter<'static>);

impl Formatter for ExactFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            w.write_all(fmt_f64(value).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, ExactFloats(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json(value)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

/// Trajectory table: `t`, then per channel `re_c`, `im_c`, `abs2_c`, `gamma`,
/// `dyn`, `amp_log`, then `energy` (`<ψ|H|ψ>`). Coefficients are the stored
/// ones (interaction picture for integrated runs).
pub fn trajectory_csv(
    traj: &CoefficientTrajectory,
    ledger: &PhaseLedger,
    energy: &[f64],
) -> String {
    let dim = traj.dim();
    let mut out = String::from("t");
    for k in 0..dim {
        for col in ["re_c", "im_c", "abs2_c", "gamma", "dyn", "amp_log"] {
            write!(out, ",{col}{k}").unwrap();
        }
    }
    out.push_str(",energy\n");
    for (j, t) in traj.grid().times().enumerate() {
        out.push_str(&fmt_f64(t));
        let c = &traj.coefficients()[j];
        for k in 0..dim {
            for v in [
                c[k].re,
                c[k].im,
                c[k].norm_sqr(),
                ledger.gamma()[j][k],
                ledger.dynamical()[j][k],
                ledger.amp_log()[j][k],
            ] {
                out.push(',');
                out.push_str(&fmt_f64(v));
            }
        }
        out.push(',');
        out.push_str(&fmt_f64(energy[j]));
        out.push('\n');
    }
    out
}

/// A CSV table with a fixed header; `None` cells are left empty.
pub fn table_csv(header: &[&str], rows: &[Vec<Option<f64>>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .map(|c| c.map(fmt_f64).unwrap_or_default())
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
