//! Artifact writers.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use vsrd::entropy::EntropyReport;

use crate::error::CliError;

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|source| CliError::Io { path: root.display().to_string(), source })?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_with<F>(&self, name: &str, f: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.path(name);
        let io = |source| CliError::Io { path: path.display().to_string(), source };
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        f(&mut w).and_then(|_| w.flush()).map_err(io)?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)
        })
    }
}

pub fn write_trajectory<W: Write>(w: &mut W, rows: &[EntropyReport], mass0: f64) -> std::io::Result<()> {
    writeln!(w, "t,entropy,dissipation,mass,relative_mass_drift")?;
    for r in rows {
        writeln!(w, "{:.10e},{:.17e},{:.17e},{:.17e},{:.3e}", r.t, r.entropy, r.dissipation, r.mass, (r.mass - mass0).abs() / mass0)?;
    }
    Ok(())
}

/// Semi-log plot of the entropy, with the certified envelope when known.
pub fn write_gnuplot<W: Write>(w: &mut W, csv: &str, e0: f64, lambda: Option<f64>) -> std::io::Result<()> {
    writeln!(w, "set datafile separator ','")?;
    writeln!(w, "set logscale y")?;
    writeln!(w, "set xlabel 't'")?;
    writeln!(w, "set ylabel 'relative entropy'")?;
    writeln!(w, "set key top right")?;
    match lambda {
        Some(l) => writeln!(w, "plot '{csv}' using 1:2 skip 1 with lines title 'E(t)', {e0:.17e}*exp(-{l:.17e}*x) with lines dashtype 2 title 'certified bound'"),
        None => writeln!(w, "plot '{csv}' using 1:2 skip 1 with lines title 'E(t)'"),
    }
}
