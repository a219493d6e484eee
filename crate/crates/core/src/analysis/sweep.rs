//! Pump-power sweeps of the correlation measurement and the power-law fit of
//! the correlated and noise photon numbers.

use std::fmt::Write as _;

use nalgebra::DVector;

use crate::analysis::lm::{levenberg_marquardt, numeric_jacobian, LmOptions};
use crate::config::{ExperimentConfig, SourceConfig};
use crate::error::{Error, Result};
use crate::model::{effective_means, predict_rates};
use crate::montecarlo::{simulate_with, SimOptions};

pub const SWEEP_CSV_HEADER: &str = "P,mu_i,C,frac_s,frac_i";

/// Monte Carlo check of one sweep row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McCheck {
    pub c: f64,
    pub c_err: f64,
    /// C expected from the histogram with earliest-stop bookkeeping.
    pub c_expected: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub power: f64,
    /// Mean idler photons per pulse, correlated plus noise.
    pub mu_i: f64,
    pub c: f64,
    pub frac_s: f64,
    pub frac_i: f64,
    pub mc: Option<McCheck>,
}

fn fraction(mu_c: f64, noise: f64) -> f64 {
    if mu_c + noise > 0.0 {
        mu_c / (mu_c + noise)
    } else {
        0.0
    }
}

/// Analytic C and correlated fractions of the interferometer-free setup.
pub fn sweep_mu(cfg: &ExperimentConfig, powers: &[f64]) -> Result<Vec<SweepRow>> {
    if powers.is_empty() {
        return Err(Error::InvalidParameter { name: "powers", reason: "empty list".into() });
    }
    let base = cfg.without_interferometers();
    powers
        .iter()
        .map(|&power| {
            let mut c = base.clone();
            c.pump.relative_power = power;
            let p = predict_rates(&c, 0.0)?;
            let m = p.means;
            Ok(SweepRow {
                power,
                mu_i: m.mu_i(),
                c: p.c_ratio,
                frac_s: fraction(m.mu_c, m.mu_sn),
                frac_i: fraction(m.mu_c, m.mu_in),
                mc: None,
            })
        })
        .collect()
}

/// [`sweep_mu`] plus a simulated histogram C at every power.
pub fn sweep_mu_mc(cfg: &ExperimentConfig, powers: &[f64], n_gates: u64, seed: u64) -> Result<Vec<SweepRow>> {
    let mut rows = sweep_mu(cfg, powers)?;
    let base = cfg.without_interferometers();
    for (idx, row) in rows.iter_mut().enumerate() {
        let mut c = base.clone();
        c.pump.relative_power = row.power;
        let opts = SimOptions { seed, stream_offset: (idx as u64) << 32, ..SimOptions::default() };
        let result = simulate_with(&c, n_gates, &opts)?;
        let expected = predict_rates(&c, 0.0)?.expected_measured_c(c.tia_window);
        row.mc = Some(McCheck {
            c: result.histogram.measured_c()?,
            c_err: result.histogram.measured_c_error()?,
            c_expected: expected,
        });
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let with_mc = rows.iter().any(|r| r.mc.is_some());
    let mut out = String::from(SWEEP_CSV_HEADER);
    if with_mc {
        out.push_str(",C_mc,C_mc_err");
    }
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{},{},{},{},{}", r.power, r.mu_i, r.c, r.frac_s, r.frac_i);
        if with_mc {
            match r.mc {
                Some(m) => {
                    let _ = write!(out, ",{},{}", m.c, m.c_err);
                }
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    }
    out
}

/// One measured point of a sweep. The pump power may be unknown, in which
/// case it is inferred from `mu_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepObservation {
    pub power: Option<f64>,
    pub mu_i: f64,
    pub c: f64,
    pub fraction_i: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NoiseFitOptions {
    pub pair_exponent: Option<f64>,
    pub noise_exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseFit {
    pub source: SourceConfig,
    /// Relative residuals, in observation order (μi when P is given, C, fraction when given).
    pub residuals: Vec<f64>,
    /// Pump power used for each observation.
    pub powers: Vec<f64>,
    pub iterations: usize,
}

impl NoiseFit {
    pub fn apply(&self, cfg: &ExperimentConfig) -> ExperimentConfig {
        let mut out = cfg.clone();
        out.source = self.source.clone();
        out
    }

    pub fn report(&self) -> String {
        let s = &self.source;
        let mut out = String::new();
        let _ = writeln!(out, "mu_c_ref={}", s.mu_c_ref);
        let _ = writeln!(out, "mu_sn_ref={}", s.mu_sn_ref);
        let _ = writeln!(out, "mu_in_ref={}", s.mu_in_ref);
        let _ = writeln!(out, "pair_exponent={}", s.pair_exponent);
        let _ = writeln!(out, "noise_exponent={}", s.noise_exponent);
        let max = self.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let _ = writeln!(out, "max_relative_residual={max}");
        let _ = writeln!(out, "iterations={}", self.iterations);
        out
    }
}

/// Pump power at which the idler carries `mu_i` photons per pulse.
fn power_for_mu(cfg: &ExperimentConfig, mu_i: f64) -> Result<f64> {
    let mu_at = |p: f64| effective_means(&cfg.source, p).map(|m| m.mu_i());
    let mut hi = 1.0;
    while mu_at(hi)? < mu_i {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::Regime(format!("no pump power reaches mu_i={mu_i}")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mu_at(mid)? < mu_i {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fits `μc = a·P^pc`, `μin = b·P^pn` (signal noise kept at the configured
/// ratio to idler noise) to measured C values of the interferometer-free setup.
pub fn fit_noise_coefficients(
    cfg: &ExperimentConfig,
    data: &[SweepObservation],
    opts: &NoiseFitOptions,
) -> Result<NoiseFit> {
    let free = 2 + usize::from(opts.pair_exponent.is_none()) + usize::from(opts.noise_exponent.is_none());
    let n_residuals: usize =
        data.iter().map(|o| 1 + usize::from(o.power.is_some()) + usize::from(o.fraction_i.is_some())).sum();
    if data.len() < 2 || n_residuals < free {
        return Err(Error::Underdetermined(format!(
            "{} observations give {n_residuals} constraints for {free} free parameters",
            data.len()
        )));
    }
    for o in data {
        if !(o.mu_i > 0.0) || !(o.c >= 1.0) || o.power.is_some_and(|p| !(p > 0.0)) {
            return Err(Error::InvalidParameter { name: "sweep_data", reason: format!("{o:?}") });
        }
    }
    let base = cfg.without_interferometers();
    let noise_ratio = if base.source.mu_in_ref > 0.0 { base.source.mu_sn_ref / base.source.mu_in_ref } else { 1.0 };

    let source_from = |p: &DVector<f64>| -> SourceConfig {
        let mut s = base.source.clone();
        s.mu_c_ref = p[0].exp();
        s.mu_in_ref = p[1].exp();
        s.mu_sn_ref = noise_ratio * s.mu_in_ref;
        let mut rest = p.iter().skip(2).copied();
        s.pair_exponent = opts.pair_exponent.unwrap_or_else(|| rest.next().expect("pair exponent parameter"));
        s.noise_exponent = opts.noise_exponent.unwrap_or_else(|| rest.next().expect("noise exponent parameter"));
        s
    };

    // (residuals, powers) for a parameter vector
    let evaluate = |p: &DVector<f64>| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut c = base.clone();
        c.source = source_from(p);
        let mut res = Vec::with_capacity(n_residuals);
        let mut powers = Vec::with_capacity(data.len());
        for o in data {
            let power = match o.power {
                Some(pw) => pw,
                None => power_for_mu(&c, o.mu_i)?,
            };
            c.pump.relative_power = power;
            let pred = predict_rates(&c, 0.0)?;
            if o.power.is_some() {
                res.push(pred.means.mu_i() / o.mu_i - 1.0);
            }
            res.push(pred.c_ratio / o.c - 1.0);
            if let Some(f) = o.fraction_i {
                res.push(fraction(pred.means.mu_c, pred.means.mu_in) / f - 1.0);
            }
            powers.push(power);
        }
        Ok((res, powers))
    };
    let residuals = |p: &DVector<f64>| -> Result<DVector<f64>> { Ok(DVector::from_vec(evaluate(p)?.0)) };

    let s = &base.source;
    let mut p0 = vec![s.mu_c_ref.max(1e-6).ln(), s.mu_in_ref.max(1e-6).ln()];
    if opts.pair_exponent.is_none() {
        p0.push(s.pair_exponent);
    }
    if opts.noise_exponent.is_none() {
        p0.push(s.noise_exponent);
    }
    let sol = levenberg_marquardt(residuals, |p| numeric_jacobian(&residuals, p), DVector::from_vec(p0), &LmOptions::default())?;
    let (res, powers) = evaluate(&sol.params)?;
    Ok(NoiseFit { source: source_from(&sol.params), residuals: res, powers, iterations: sol.iterations })
}
