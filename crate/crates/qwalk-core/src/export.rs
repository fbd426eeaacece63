//! File formats: probability snapshots (CSV + PGM), diffusion tables (CSV),
//! fit reports (JSON), and phase-diagram tables (CSV).
//!
//! All floats are written with Rust's shortest round-trip formatting, so a
//! write/read cycle reproduces values bit-for-bit.

use crate::diffusion::{DiffusionSeries, MsdSeries, Verdict};
use crate::error::{Error, Result};
use crate::momentum::PhaseDiagram;
use crate::walk::ProbabilityField;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Sites below this probability are omitted from snapshot CSVs.
pub const SNAPSHOT_PROB_FLOOR: f64 = 1e-15;

/// Write a probability snapshot as `x,y,prob` rows (row-major over the
/// bounding region, sites with `prob > 1e-15` only).
pub fn write_snapshot_csv(field: &ProbabilityField, mut w: impl Write) -> Result<()> {
    writeln!(w, "x,y,prob")?;
    let r = field.region;
    for y in r.y0..=r.y1() {
        for x in r.x0..=r.x1() {
            let prob = field.probs[r.index((x, y))];
            if prob > SNAPSHOT_PROB_FLOOR {
                writeln!(w, "{x},{y},{prob}")?;
            }
        }
    }
    Ok(())
}

/// Rescaling constants accompanying a PGM snapshot.
///
/// Pixel values are `round(255 * sqrt(prob / max_prob))`; the raster's top row
/// is the region's highest `y` so the image is plot-oriented.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PgmScale {
    /// Probability mapped to intensity 255.
    pub max_prob: f64,
    /// Intensity is proportional to `prob` raised to this exponent.
    pub exponent: f64,
    pub x0: i64,
    pub y0: i64,
    pub width: usize,
    pub height: usize,
    /// Lattice `y` of the top raster row.
    pub top_row_y: i64,
}

/// Write an 8-bit binary PGM with intensity ∝ sqrt(prob), returning the
/// rescaling constants (serialize them as the sidecar JSON).
pub fn write_snapshot_pgm(field: &ProbabilityField, mut w: impl Write) -> Result<PgmScale> {
    let r = field.region;
    let max_prob = field.max();
    let scale = if max_prob > 0.0 { 255.0 / max_prob.sqrt() } else { 0.0 };
    write!(w, "P5\n{} {}\n255\n", r.width, r.height)?;
    let mut raster = Vec::with_capacity(r.width * r.height);
    for y in (r.y0..=r.y1()).rev() {
        for x in r.x0..=r.x1() {
            let prob = field.probs[r.index((x, y))];
            raster.push((prob.max(0.0).sqrt() * scale).round().min(255.0) as u8);
        }
    }
    w.write_all(&raster)?;
    Ok(PgmScale {
        max_prob,
        exponent: 0.5,
        x0: r.x0,
        y0: r.y0,
        width: r.width,
        height: r.height,
        top_row_y: r.y1(),
    })
}

/// Write a PGM sidecar (or any report value) as JSON with stable key order.
pub fn write_json<T: Serialize>(value: &T, mut w: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::format(None, format!("JSON encoding failed: {e}")))?;
    writeln!(w)?;
    Ok(())
}

const DIFFUSION_HEADER: &str = "t,msd,msd_stderr,alpha,d_alpha,n_configs";

/// Write a diffusion table: `t,msd,msd_stderr,alpha,d_alpha,n_configs`, with
/// empty alpha/d_alpha cells where the running fit is undefined.
pub fn write_diffusion_csv(diff: &DiffusionSeries, mut w: impl Write) -> Result<()> {
    writeln!(w, "{DIFFUSION_HEADER}")?;
    let s = &diff.base;
    for i in 0..s.times.len() {
        let alpha = diff.alpha[i].map(|a| a.to_string()).unwrap_or_default();
        let d = diff.d_alpha[i].map(|d| d.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            s.times[i], s.msd[i], s.stderr[i], alpha, d, s.n_configs
        )?;
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::format(Some(line), format!("invalid {what}: {s:?}")))
}

/// Read a diffusion table back. Errors name the offending line (1-based).
///
/// The recovered series has no per-configuration rows, and the returned
/// `window` is NaN (the file does not record it).
pub fn read_diffusion_csv(r: impl BufRead) -> Result<DiffusionSeries> {
    let mut lines = r.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim() == DIFFUSION_HEADER => {}
        Some((_, Ok(h))) => {
            return Err(Error::format(
                Some(1),
                format!("expected header {DIFFUSION_HEADER:?}, found {h:?}"),
            ))
        }
        Some((_, Err(e))) => return Err(e.into()),
        None => return Err(Error::format(None, "empty diffusion CSV")),
    }
    let mut times = Vec::new();
    let mut msd = Vec::new();
    let mut stderr = Vec::new();
    let mut alpha = Vec::new();
    let mut d_alpha = Vec::new();
    let mut n_configs = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(Error::format(
                Some(lineno),
                format!("expected 6 columns, found {}", cols.len()),
            ));
        }
        let t: u64 = parse_field(cols[0], lineno, "time")?;
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(Error::format(
                    Some(lineno),
                    format!("times must be strictly increasing ({prev} then {t})"),
                ));
            }
        }
        times.push(t);
        msd.push(parse_field(cols[1], lineno, "msd")?);
        stderr.push(parse_field(cols[2], lineno, "msd_stderr")?);
        alpha.push(if cols[3].trim().is_empty() {
            None
        } else {
            Some(parse_field(cols[3], lineno, "alpha")?)
        });
        d_alpha.push(if cols[4].trim().is_empty() {
            None
        } else {
            Some(parse_field(cols[4], lineno, "d_alpha")?)
        });
        n_configs = parse_field(cols[5], lineno, "n_configs")?;
    }
    if times.is_empty() {
        return Err(Error::format(None, "diffusion CSV has no data rows"));
    }
    Ok(DiffusionSeries {
        base: MsdSeries {
            times,
            msd,
            stderr,
            n_configs,
            per_config: None,
        },
        alpha,
        d_alpha,
        window: f64::NAN,
    })
}

/// Late-time fit report.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitReport {
    pub alpha_inf: f64,
    pub d_inf: f64,
    pub t_min: u64,
    pub t_max: u64,
    pub residual: f64,
    pub verdict: Verdict,
}

/// Write a phase-diagram table: `theta1,theta2,chern,min_gap`, one row per
/// (θ₁, θ₂) cell in row-major order, with indeterminate Chern cells empty.
pub fn write_phase_csv(pd: &PhaseDiagram, mut w: impl Write) -> Result<()> {
    writeln!(w, "theta1,theta2,chern,min_gap")?;
    for (i1, &t1) in pd.theta1s.iter().enumerate() {
        for (i2, &t2) in pd.theta2s.iter().enumerate() {
            let cell = pd.cell(i1, i2);
            let chern = cell.chern.map(|c| c.to_string()).unwrap_or_default();
            writeln!(w, "{t1},{t2},{},{}", chern, cell.min_gap)?;
        }
    }
    Ok(())
}
