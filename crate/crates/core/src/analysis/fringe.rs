//! Fringe scans and visibility fits.
//!
//! Model: `R(θ) = B + A·(1 + V·cos(θ − θ0))`. The baseline `B` is not
//! separable from `A` over a single sinusoid, so it is held at zero and the
//! accidental floor is handled by [`subtract_accidentals`] instead.

use std::f64::consts::{PI, TAU};
use std::fmt::{self, Write as _};

use nalgebra::{DMatrix, DVector};

use crate::analysis::lm::{levenberg_marquardt, LmOptions};
use crate::error::{Error, Result};

pub const MIN_SCAN_POINTS: usize = 5;
pub const SCAN_CSV_HEADER: &str = "theta_rad,rate,rate_err,singles";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringePoint {
    pub theta_rad: f64,
    /// Coincidences per gate.
    pub rate: f64,
    pub rate_err: f64,
    /// Idler singles per gate.
    pub singles: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringeScan {
    pub points: Vec<FringePoint>,
    pub accidental_estimate: f64,
    pub accidental_err: f64,
}

impl FringeScan {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# accidental_estimate={}", self.accidental_estimate);
        let _ = writeln!(out, "# accidental_err={}", self.accidental_err);
        let _ = writeln!(out, "{SCAN_CSV_HEADER}");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{},{}", p.theta_rad, p.rate, p.rate_err, p.singles);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut scan = FringeScan { points: Vec::new(), accidental_estimate: 0.0, accidental_err: 0.0 };
        let mut header_seen = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            let csv_err = |reason: String| Error::Csv { line: line_no, reason };
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((key, value)) = comment.split_once('=') {
                    let target = match key.trim() {
                        "accidental_estimate" => Some(&mut scan.accidental_estimate),
                        "accidental_err" => Some(&mut scan.accidental_err),
                        _ => None,
                    };
                    if let Some(t) = target {
                        *t = value.trim().parse().map_err(|_| csv_err(format!("bad number '{}'", value.trim())))?;
                    }
                }
                continue;
            }
            if !header_seen {
                if line != SCAN_CSV_HEADER {
                    return Err(csv_err(format!("expected header '{SCAN_CSV_HEADER}'")));
                }
                header_seen = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(csv_err(format!("expected 4 fields, found {}", fields.len())));
            }
            let mut values = [0.0; 4];
            for (v, f) in values.iter_mut().zip(&fields) {
                let parsed: f64 = f.parse().map_err(|_| csv_err(format!("bad number '{f}'")))?;
                if !parsed.is_finite() {
                    return Err(csv_err(format!("non-finite value '{f}'")));
                }
                *v = parsed;
            }
            if values[2] <= 0.0 {
                return Err(csv_err("rate_err must be positive".into()));
            }
            scan.points.push(FringePoint { theta_rad: values[0], rate: values[1], rate_err: values[2], singles: values[3] });
        }
        if !header_seen {
            return Err(Error::Csv { line: text.lines().count().max(1), reason: "missing header row".into() });
        }
        Ok(scan)
    }
}

/// Rate with the accidental floor removed, clamped at zero, and its error.
pub fn subtract_accidentals(r_m: f64, sigma_m: f64, r_acc: f64, sigma_acc: f64) -> (f64, f64) {
    ((r_m - r_acc).max(0.0), sigma_m.hypot(sigma_acc))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FringeModel {
    Raw,
    Subtracted,
}

impl FringeModel {
    pub fn as_str(self) -> &'static str {
        match self {
            FringeModel::Raw => "raw",
            FringeModel::Subtracted => "subtracted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: FringeModel,
    pub amplitude: f64,
    pub visibility: f64,
    pub theta0: f64,
    pub baseline: f64,
    pub amplitude_err: f64,
    pub visibility_err: f64,
    pub theta0_err: f64,
    pub baseline_err: f64,
    pub chi2: f64,
    pub dof: usize,
    pub iterations: usize,
}

impl FitResult {
    pub fn chi2_per_dof(&self) -> f64 {
        if self.dof == 0 {
            f64::NAN
        } else {
            self.chi2 / self.dof as f64
        }
    }

    pub fn fringe_max(&self) -> f64 {
        self.baseline + self.amplitude * (1.0 + self.visibility)
    }

    pub fn fringe_min(&self) -> f64 {
        self.baseline + self.amplitude * (1.0 - self.visibility)
    }

    /// `key=value` lines.
    pub fn report(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for FitResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model={}", self.model.as_str())?;
        writeln!(f, "visibility={}", self.visibility)?;
        writeln!(f, "visibility_err={}", self.visibility_err)?;
        writeln!(f, "amplitude={}", self.amplitude)?;
        writeln!(f, "amplitude_err={}", self.amplitude_err)?;
        writeln!(f, "theta0={}", self.theta0)?;
        writeln!(f, "theta0_err={}", self.theta0_err)?;
        writeln!(f, "baseline={}", self.baseline)?;
        writeln!(f, "baseline_err={}", self.baseline_err)?;
        writeln!(f, "chi2={}", self.chi2)?;
        writeln!(f, "dof={}", self.dof)?;
        writeln!(f, "chi2_per_dof={}", self.chi2_per_dof())?;
        writeln!(f, "iterations={}", self.iterations)
    }
}

fn check_scan(points: &[FringePoint]) -> Result<()> {
    if points.len() < MIN_SCAN_POINTS {
        return Err(Error::DegenerateScan(format!("{} points, need at least {MIN_SCAN_POINTS}", points.len())));
    }
    if points.iter().any(|p| !p.theta_rad.is_finite() || !p.rate.is_finite() || !(p.rate_err > 0.0)) {
        return Err(Error::DegenerateScan("non-finite value or non-positive error".into()));
    }
    let mut phases: Vec<f64> = points.iter().map(|p| p.theta_rad.rem_euclid(TAU)).collect();
    phases.sort_by(f64::total_cmp);
    if phases.last().unwrap() - phases[0] < 1e-12 {
        return Err(Error::DegenerateScan("all phases are equal".into()));
    }
    let wrap = TAU - (phases.last().unwrap() - phases[0]);
    let widest = phases.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max);
    if widest >= PI {
        return Err(Error::DegenerateScan(format!("phases leave a gap of {widest:.3} rad; scan a full period")));
    }
    Ok(())
}

fn wrap_phase(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t > PI {
        t - TAU
    } else {
        t
    }
}

/// Weighted least-squares fit of the fringe model.
pub fn fit_fringe(scan: &FringeScan, model: FringeModel) -> Result<FitResult> {
    check_scan(&scan.points)?;
    let (ys, sigmas): (Vec<f64>, Vec<f64>) = scan
        .points
        .iter()
        .map(|p| match model {
            FringeModel::Raw => (p.rate, p.rate_err),
            FringeModel::Subtracted => subtract_accidentals(p.rate, p.rate_err, scan.accidental_estimate, scan.accidental_err),
        })
        .unzip();
    let thetas: Vec<f64> = scan.points.iter().map(|p| p.theta_rad).collect();

    let (imax, ymax) = ys.iter().copied().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    let ymin = ys.iter().copied().fold(f64::INFINITY, f64::min);
    if !(ymax > 0.0) {
        return Err(Error::DegenerateScan("no coincidences in the scan".into()));
    }
    let p0 = DVector::from_vec(vec![(ymax + ymin) / 2.0, (ymax - ymin) / (ymax + ymin), thetas[imax]]);

    let n = ys.len();
    let residuals = |p: &DVector<f64>| -> Result<DVector<f64>> {
        Ok(DVector::from_iterator(
            n,
            (0..n).map(|i| (p[0] * (1.0 + p[1] * (thetas[i] - p[2]).cos()) - ys[i]) / sigmas[i]),
        ))
    };
    let jacobian = |p: &DVector<f64>| -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_fn(n, 3, |i, j| {
            let c = (thetas[i] - p[2]).cos();
            let s = (thetas[i] - p[2]).sin();
            let d = match j {
                0 => 1.0 + p[1] * c,
                1 => p[0] * c,
                _ => p[0] * p[1] * s,
            };
            d / sigmas[i]
        }))
    };
    let sol = levenberg_marquardt(residuals, jacobian, p0, &LmOptions::default())?;
    let err = |k: usize| sol.covariance.as_ref().map_or(f64::NAN, |c| c[(k, k)].max(0.0).sqrt());
    let (mut visibility, mut theta0) = (sol.params[1], sol.params[2]);
    if visibility < 0.0 {
        visibility = -visibility;
        theta0 += PI;
    }
    Ok(FitResult {
        model,
        amplitude: sol.params[0],
        visibility,
        theta0: wrap_phase(theta0),
        baseline: 0.0,
        amplitude_err: err(0),
        visibility_err: err(1),
        theta0_err: err(2),
        baseline_err: 0.0,
        chi2: sol.cost,
        dof: n - 3,
        iterations: sol.iterations,
    })
}
