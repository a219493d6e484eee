//! Experiment parameter tree and its INI-style text format.
//!
//! The format is line oriented: `[section]` headers, `key = value` pairs and
//! `#` / `;` comments. Units are fixed by the key name (`_nm`, `_ps`, `_db`, ...).
//! Unknown sections and keys are rejected so that a typo never silently falls
//! back to a default.
//!
//! Photon-number means in `[source]` are per pump pulse; a double pulse carries
//! twice these means.

use std::collections::BTreeMap;
use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{check_finite, check_non_negative, check_probability, Error, Result};

/// Default two-photon phase tuning coefficient: 2π per 0.4 K.
pub const DEFAULT_PHASE_PER_KELVIN: f64 = std::f64::consts::TAU / 0.4;

/// Pump-suppression level below which a channel is considered clean.
pub const PUMP_SUPPRESSION_LIMIT_DB: f64 = -120.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arm {
    Signal,
    Idler,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::Signal, Arm::Idler];

    pub fn name(self) -> &'static str {
        match self {
            Arm::Signal => "signal",
            Arm::Idler => "idler",
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A value held once per arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmPair<T> {
    pub signal: T,
    pub idler: T,
}

impl<T> ArmPair<T> {
    pub fn new(signal: T, idler: T) -> Self {
        Self { signal, idler }
    }

    pub fn get(&self, arm: Arm) -> &T {
        match arm {
            Arm::Signal => &self.signal,
            Arm::Idler => &self.idler,
        }
    }

    pub fn get_mut(&mut self, arm: Arm) -> &mut T {
        match arm {
            Arm::Signal => &mut self.signal,
            Arm::Idler => &mut self.idler,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(Arm, &T) -> U) -> ArmPair<U> {
        ArmPair { signal: f(Arm::Signal, &self.signal), idler: f(Arm::Idler, &self.idler) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PumpConfig {
    pub wavelength_nm: f64,
    pub pulse_width_ps: f64,
    pub bin_separation_ns: f64,
    pub repetition_rate_mhz: f64,
    /// Pump power relative to the reference operating point (P = 1).
    pub relative_power: f64,
    /// Phase difference between the two pump pulses; the two-photon phase is twice this.
    pub phase_rad: f64,
}

impl PumpConfig {
    /// Relative phase of the two-photon amplitude, φ = 2 φp.
    pub fn two_photon_phase(&self) -> f64 {
        2.0 * self.phase_rad
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceConfig {
    /// Mean correlated pairs per pulse at P = 1.
    pub mu_c_ref: f64,
    /// Mean noise photons per pulse at P = 1, before the polarizer.
    pub mu_sn_ref: f64,
    pub mu_in_ref: f64,
    pub pair_exponent: f64,
    pub noise_exponent: f64,
    /// Fraction of the noise co-polarized with the pump.
    pub noise_polarized_fraction: f64,
    pub polarizer: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub length_km: f64,
    pub loss_db_per_km: f64,
    /// Filters, connectors and the rest of the arm, excluding detector efficiency.
    pub excess_loss_db: f64,
    pub dispersion_ps_per_nm_km: f64,
    pub center_offset_ghz: f64,
    pub bandwidth_ghz: f64,
    pub pump_suppression_db: f64,
}

impl ChannelConfig {
    pub fn loss_db(&self) -> f64 {
        self.excess_loss_db + self.length_km * self.loss_db_per_km
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterferometerConfig {
    pub delay_ns: f64,
    pub phase_rad: f64,
    pub insertion_loss_db: f64,
    /// Dark-port to bright-port power ratio; `-inf` means ideal.
    pub extinction_ratio_db: f64,
    /// Phase change per kelvin of chip temperature.
    pub phase_per_kelvin: f64,
}

impl InterferometerConfig {
    /// Phase reached after changing the chip temperature by `delta_kelvin`.
    pub fn phase_at_temperature(&self, delta_kelvin: f64) -> f64 {
        self.phase_rad + self.phase_per_kelvin * delta_kelvin
    }

    /// Temperature offset that produces the phase `theta`.
    pub fn temperature_for_phase(&self, theta: f64) -> f64 {
        (theta - self.phase_rad) / self.phase_per_kelvin
    }
}

/// Which time slots the detector gate opens on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GatedSlot {
    /// A single gate centred on the second time slot.
    Slot2Only,
    /// Every slot is gated.
    EveryBin,
}

impl GatedSlot {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "slot2-only" => Some(GatedSlot::Slot2Only),
            "every-bin" => Some(GatedSlot::EveryBin),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GatedSlot::Slot2Only => "slot2-only",
            GatedSlot::EveryBin => "every-bin",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub efficiency: f64,
    pub dark_count_per_gate: f64,
    pub gate_width_ns: f64,
    pub gate_rate_mhz: f64,
    pub gated_slot: GatedSlot,
}

impl DetectorConfig {
    pub fn gate_period_ns(&self) -> f64 {
        1e3 / self.gate_rate_mhz
    }
}

/// Standard single-mode fiber spool inserted in both arms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberSpool {
    pub loss_db_per_km: f64,
    pub dispersion_ps_per_nm_km: f64,
    /// Connector and splice loss added once per spool.
    pub connector_loss_db: f64,
}

impl FiberSpool {
    /// 1310-nm zero-dispersion fiber seen at 1.55 µm.
    pub const STANDARD_SMF: FiberSpool =
        FiberSpool { loss_db_per_km: 0.21, dispersion_ps_per_nm_km: 17.0, connector_loss_db: 0.2 };
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub pump: PumpConfig,
    pub source: SourceConfig,
    pub channels: ArmPair<ChannelConfig>,
    /// `None` runs the bare time-correlation measurement.
    pub interferometers: Option<ArmPair<InterferometerConfig>>,
    pub detectors: ArmPair<DetectorConfig>,
    /// TIA window in gate periods on each side of zero delay.
    pub tia_window: usize,
}

impl ExperimentConfig {
    /// Checks every invariant. Returns warnings for conditions that are
    /// suspicious but not fatal.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        let p = &self.pump;
        for (name, v) in [
            ("pump.wavelength_nm", p.wavelength_nm),
            ("pump.pulse_width_ps", p.pulse_width_ps),
            ("pump.bin_separation_ns", p.bin_separation_ns),
            ("pump.repetition_rate_mhz", p.repetition_rate_mhz),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name, reason: format!("{v} must be > 0") });
            }
        }
        check_non_negative("pump.relative_power", p.relative_power)?;
        check_finite("pump.phase_rad", p.phase_rad)?;
        if p.pulse_width_ps >= p.bin_separation_ns * 1e3 {
            return Err(Error::Inconsistent(format!(
                "pulse width {} ps is not shorter than the bin separation {} ns",
                p.pulse_width_ps, p.bin_separation_ns
            )));
        }
        let period_ns = 1e3 / p.repetition_rate_mhz;
        if period_ns < 2.0 * p.bin_separation_ns {
            return Err(Error::Inconsistent(format!(
                "repetition period {period_ns} ns cannot hold two bins of {} ns",
                p.bin_separation_ns
            )));
        }

        let s = &self.source;
        check_non_negative("source.mu_c_ref", s.mu_c_ref)?;
        check_non_negative("source.mu_sn_ref", s.mu_sn_ref)?;
        check_non_negative("source.mu_in_ref", s.mu_in_ref)?;
        for (name, v) in [("source.pair_exponent", s.pair_exponent), ("source.noise_exponent", s.noise_exponent)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name, reason: format!("{v} must be > 0") });
            }
        }
        check_probability("source.noise_polarized_fraction", s.noise_polarized_fraction)?;

        for arm in Arm::BOTH {
            let c = self.channels.get(arm);
            check_non_negative("channel.length_km", c.length_km)?;
            check_non_negative("channel.loss_db_per_km", c.loss_db_per_km)?;
            check_non_negative("channel.excess_loss_db", c.excess_loss_db)?;
            check_non_negative("channel.dispersion_ps_per_nm_km", c.dispersion_ps_per_nm_km.abs())?;
            check_finite("channel.center_offset_ghz", c.center_offset_ghz)?;
            if !(c.bandwidth_ghz > 0.0 && c.bandwidth_ghz.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "channel.bandwidth_ghz",
                    reason: format!("{} must be > 0", c.bandwidth_ghz),
                });
            }
            if c.pump_suppression_db > PUMP_SUPPRESSION_LIMIT_DB {
                warnings.push(format!(
                    "{arm} channel pump suppression {} dB is weaker than {} dB",
                    c.pump_suppression_db, PUMP_SUPPRESSION_LIMIT_DB
                ));
            }

            let d = self.detectors.get(arm);
            check_probability("detector.efficiency", d.efficiency)?;
            if !(0.0..1.0).contains(&d.dark_count_per_gate) {
                return Err(Error::InvalidParameter {
                    name: "detector.dark_count_per_gate",
                    reason: format!("{} is outside [0, 1)", d.dark_count_per_gate),
                });
            }
            for (name, v) in [("detector.gate_width_ns", d.gate_width_ns), ("detector.gate_rate_mhz", d.gate_rate_mhz)] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::InvalidParameter { name, reason: format!("{v} must be > 0") });
                }
            }
            if d.gate_period_ns() < period_ns {
                return Err(Error::Inconsistent(format!(
                    "{arm} gate rate {} MHz exceeds the pump repetition rate",
                    d.gate_rate_mhz
                )));
            }
        }

        // 2 f_p = f_s + f_i
        let offset_sum = self.channels.signal.center_offset_ghz + self.channels.idler.center_offset_ghz;
        if offset_sum.abs() > 1e-6 {
            return Err(Error::Inconsistent(format!(
                "signal and idler offsets must be symmetric about the pump (sum is {offset_sum} GHz)"
            )));
        }

        if let Some(ifs) = &self.interferometers {
            for arm in Arm::BOTH {
                let i = ifs.get(arm);
                check_finite("interferometer.phase_rad", i.phase_rad)?;
                check_non_negative("interferometer.insertion_loss_db", i.insertion_loss_db)?;
                check_finite("interferometer.phase_per_kelvin", i.phase_per_kelvin)?;
                if i.extinction_ratio_db.is_nan() || i.extinction_ratio_db >= 0.0 {
                    return Err(Error::InvalidParameter {
                        name: "interferometer.extinction_ratio_db",
                        reason: format!("{} must be < 0 dB", i.extinction_ratio_db),
                    });
                }
                if (i.delay_ns - p.bin_separation_ns).abs() > 1e-9 {
                    return Err(Error::Inconsistent(format!(
                        "{arm} interferometer delay {} ns differs from the bin separation {} ns",
                        i.delay_ns, p.bin_separation_ns
                    )));
                }
            }
        }
        if self.tia_window == 0 {
            return Err(Error::InvalidParameter { name: "tia.window_gate_periods", reason: "must be >= 1".into() });
        }
        Ok(warnings)
    }

    /// Same experiment with the interferometers taken out.
    pub fn without_interferometers(&self) -> Self {
        Self { interferometers: None, ..self.clone() }
    }

    /// Sets the idler interferometer phase.
    pub fn with_idler_phase(&self, theta: f64) -> Self {
        let mut cfg = self.clone();
        if let Some(ifs) = cfg.interferometers.as_mut() {
            ifs.idler.phase_rad = theta;
        }
        cfg
    }

    /// Inserts `length_km` of fiber into each arm.
    pub fn with_fiber(&self, length_km: f64, spool: FiberSpool) -> Self {
        let mut cfg = self.clone();
        if length_km > 0.0 {
            for arm in Arm::BOTH {
                let ch = cfg.channels.get_mut(arm);
                ch.length_km = length_km;
                ch.loss_db_per_km = spool.loss_db_per_km;
                ch.dispersion_ps_per_nm_km = spool.dispersion_ps_per_nm_km;
                ch.excess_loss_db += spool.connector_loss_db;
            }
        }
        cfg
    }

    /// Parses the INI text format described in the module docs.
    pub fn from_ini_str(text: &str) -> Result<Self> {
        let doc = IniDocument::parse(text)?;
        let mut reader = SectionReader::new(&doc);

        let pump = {
            let s = reader.section("pump", true)?.unwrap();
            let cfg = PumpConfig {
                wavelength_nm: s.f64("wavelength_nm")?,
                pulse_width_ps: s.f64("pulse_width_ps")?,
                bin_separation_ns: s.f64("bin_separation_ns")?,
                repetition_rate_mhz: s.f64("repetition_rate_mhz")?,
                relative_power: s.f64_or("relative_power", 1.0)?,
                phase_rad: s.f64_or("phase_rad", 0.0)?,
            };
            s.finish()?;
            cfg
        };
        let source = {
            let s = reader.section("source", true)?.unwrap();
            let cfg = SourceConfig {
                mu_c_ref: s.f64("mu_c_ref")?,
                mu_sn_ref: s.f64("mu_sn_ref")?,
                mu_in_ref: s.f64("mu_in_ref")?,
                pair_exponent: s.f64_or("pair_exponent", 2.0)?,
                noise_exponent: s.f64_or("noise_exponent", 1.0)?,
                noise_polarized_fraction: s.f64_or("noise_polarized_fraction", 0.5)?,
                polarizer: s.bool_or("polarizer", true)?,
            };
            s.finish()?;
            cfg
        };
        let channel = |reader: &mut SectionReader, arm: Arm| -> Result<ChannelConfig> {
            let s = reader.section(&format!("channel.{arm}"), true)?.unwrap();
            let cfg = ChannelConfig {
                length_km: s.f64_or("length_km", 0.0)?,
                loss_db_per_km: s.f64_or("loss_db_per_km", 0.0)?,
                excess_loss_db: s.f64("excess_loss_db")?,
                dispersion_ps_per_nm_km: s.f64_or("dispersion_ps_per_nm_km", 0.0)?,
                center_offset_ghz: s.f64("center_offset_ghz")?,
                bandwidth_ghz: s.f64("bandwidth_ghz")?,
                pump_suppression_db: s.f64("pump_suppression_db")?,
            };
            s.finish()?;
            Ok(cfg)
        };
        let channels = ArmPair::new(channel(&mut reader, Arm::Signal)?, channel(&mut reader, Arm::Idler)?);

        let interferometer = |reader: &mut SectionReader, arm: Arm| -> Result<Option<InterferometerConfig>> {
            let Some(s) = reader.section(&format!("interferometer.{arm}"), false)? else {
                return Ok(None);
            };
            let cfg = InterferometerConfig {
                delay_ns: s.f64("delay_ns")?,
                phase_rad: s.f64_or("phase_rad", 0.0)?,
                insertion_loss_db: s.f64("insertion_loss_db")?,
                extinction_ratio_db: s.f64("extinction_ratio_db")?,
                phase_per_kelvin: s.f64_or("phase_per_kelvin", DEFAULT_PHASE_PER_KELVIN)?,
            };
            s.finish()?;
            Ok(Some(cfg))
        };
        let interferometers = match (
            interferometer(&mut reader, Arm::Signal)?,
            interferometer(&mut reader, Arm::Idler)?,
        ) {
            (Some(s), Some(i)) => Some(ArmPair::new(s, i)),
            (None, None) => None,
            _ => {
                return Err(Error::Config {
                    line: 0,
                    reason: "interferometer sections must be given for both arms or neither".into(),
                })
            }
        };

        let detector = |reader: &mut SectionReader, arm: Arm| -> Result<DetectorConfig> {
            let s = reader.section(&format!("detector.{arm}"), true)?.unwrap();
            let (slot_line, slot) = s.raw_or("gated_slot", "slot2-only");
            let gated_slot = GatedSlot::parse(slot).ok_or_else(|| Error::Config {
                line: slot_line,
                reason: format!("gated_slot must be `slot2-only` or `every-bin`, got `{slot}`"),
            })?;
            let cfg = DetectorConfig {
                efficiency: s.f64("efficiency")?,
                dark_count_per_gate: s.f64("dark_count_per_gate")?,
                gate_width_ns: s.f64("gate_width_ns")?,
                gate_rate_mhz: s.f64("gate_rate_mhz")?,
                gated_slot,
            };
            s.finish()?;
            Ok(cfg)
        };
        let detectors = ArmPair::new(detector(&mut reader, Arm::Signal)?, detector(&mut reader, Arm::Idler)?);

        let tia_window = match reader.section("tia", false)? {
            Some(s) => {
                let (line, raw) = s.raw_or("window_gate_periods", "3");
                let k = raw.parse::<usize>().map_err(|_| Error::Config {
                    line,
                    reason: format!("window_gate_periods must be a positive integer, got `{raw}`"),
                })?;
                s.finish()?;
                k
            }
            None => 3,
        };
        reader.finish()?;

        Ok(Self { pump, source, channels, interferometers, detectors, tia_window })
    }

    /// Serializes back to the INI format; parsing the result yields an equal config.
    pub fn to_ini_string(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        let p = &self.pump;
        kv("[pump]\nwavelength_nm", p.wavelength_nm.to_string());
        kv("pulse_width_ps", p.pulse_width_ps.to_string());
        kv("bin_separation_ns", p.bin_separation_ns.to_string());
        kv("repetition_rate_mhz", p.repetition_rate_mhz.to_string());
        kv("relative_power", p.relative_power.to_string());
        kv("phase_rad", p.phase_rad.to_string());
        let s = &self.source;
        kv("\n[source]\nmu_c_ref", s.mu_c_ref.to_string());
        kv("mu_sn_ref", s.mu_sn_ref.to_string());
        kv("mu_in_ref", s.mu_in_ref.to_string());
        kv("pair_exponent", s.pair_exponent.to_string());
        kv("noise_exponent", s.noise_exponent.to_string());
        kv("noise_polarized_fraction", s.noise_polarized_fraction.to_string());
        kv("polarizer", s.polarizer.to_string());
        for arm in Arm::BOTH {
            let c = self.channels.get(arm);
            kv(&format!("\n[channel.{arm}]\nlength_km"), c.length_km.to_string());
            kv("loss_db_per_km", c.loss_db_per_km.to_string());
            kv("excess_loss_db", c.excess_loss_db.to_string());
            kv("dispersion_ps_per_nm_km", c.dispersion_ps_per_nm_km.to_string());
            kv("center_offset_ghz", c.center_offset_ghz.to_string());
            kv("bandwidth_ghz", c.bandwidth_ghz.to_string());
            kv("pump_suppression_db", c.pump_suppression_db.to_string());
        }
        if let Some(ifs) = &self.interferometers {
            for arm in Arm::BOTH {
                let i = ifs.get(arm);
                kv(&format!("\n[interferometer.{arm}]\ndelay_ns"), i.delay_ns.to_string());
                kv("phase_rad", i.phase_rad.to_string());
                kv("insertion_loss_db", i.insertion_loss_db.to_string());
                kv("extinction_ratio_db", i.extinction_ratio_db.to_string());
                kv("phase_per_kelvin", i.phase_per_kelvin.to_string());
            }
        }
        for arm in Arm::BOTH {
            let d = self.detectors.get(arm);
            kv(&format!("\n[detector.{arm}]\nefficiency"), d.efficiency.to_string());
            kv("dark_count_per_gate", d.dark_count_per_gate.to_string());
            kv("gate_width_ns", d.gate_width_ns.to_string());
            kv("gate_rate_mhz", d.gate_rate_mhz.to_string());
            kv("gated_slot", d.gated_slot.as_str().to_string());
        }
        kv("\n[tia]\nwindow_gate_periods", self.tia_window.to_string());
        out
    }
}

/// SHA-256 of the config text, hex encoded. Depends only on the bytes.
pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

struct Entry {
    line: usize,
    value: String,
    used: std::cell::Cell<bool>,
}

struct IniDocument {
    sections: BTreeMap<String, (usize, BTreeMap<String, Entry>)>,
}

impl IniDocument {
    fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, (usize, BTreeMap<String, Entry>)> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split(['#', ';']).next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| Error::Config {
                    line,
                    reason: format!("malformed section header `{content}`"),
                })?;
                let name = name.trim().to_string();
                if sections.contains_key(&name) {
                    return Err(Error::Config { line, reason: format!("duplicate section [{name}]") });
                }
                sections.insert(name.clone(), (line, BTreeMap::new()));
                current = Some(name);
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                reason: format!("expected `key = value`, got `{content}`"),
            })?;
            let section = current.as_ref().ok_or_else(|| Error::Config {
                line,
                reason: "key outside of any section".into(),
            })?;
            let entries = &mut sections.get_mut(section).unwrap().1;
            let key = key.trim().to_string();
            if entries.contains_key(&key) {
                return Err(Error::Config { line, reason: format!("duplicate key `{key}`") });
            }
            entries.insert(key, Entry { line, value: value.trim().to_string(), used: Default::default() });
        }
        Ok(Self { sections })
    }
}

struct SectionReader<'a> {
    doc: &'a IniDocument,
    seen: Vec<String>,
}

impl<'a> SectionReader<'a> {
    fn new(doc: &'a IniDocument) -> Self {
        Self { doc, seen: Vec::new() }
    }

    fn section(&mut self, name: &str, required: bool) -> Result<Option<Section<'a>>> {
        match self.doc.sections.get(name) {
            Some((line, entries)) => {
                self.seen.push(name.to_string());
                Ok(Some(Section { name: name.to_string(), line: *line, entries }))
            }
            None if required => Err(Error::Config { line: 0, reason: format!("missing section [{name}]") }),
            None => Ok(None),
        }
    }

    fn finish(self) -> Result<()> {
        for (name, (line, _)) in &self.doc.sections {
            if !self.seen.contains(name) {
                return Err(Error::Config { line: *line, reason: format!("unknown section [{name}]") });
            }
        }
        Ok(())
    }
}

struct Section<'a> {
    name: String,
    line: usize,
    entries: &'a BTreeMap<String, Entry>,
}

impl Section<'_> {
    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.entries.get(key).map(|e| {
            e.used.set(true);
            (e.line, e.value.as_str())
        })
    }

    fn raw_or<'s>(&'s self, key: &str, default: &'s str) -> (usize, &'s str) {
        self.raw(key).unwrap_or((self.line, default))
    }

    fn parse_f64(line: usize, key: &str, raw: &str) -> Result<f64> {
        raw.parse::<f64>()
            .map_err(|_| Error::Config { line, reason: format!("`{key}` expects a number, got `{raw}`") })
    }

    fn f64(&self, key: &str) -> Result<f64> {
        let (line, raw) = self.raw(key).ok_or_else(|| Error::Config {
            line: self.line,
            reason: format!("missing key `{key}` in [{}]", self.name),
        })?;
        Self::parse_f64(line, key, raw)
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            Some((line, raw)) => Self::parse_f64(line, key, raw),
            None => Ok(default),
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            Some((_, "true")) => Ok(true),
            Some((_, "false")) => Ok(false),
            Some((line, raw)) => {
                Err(Error::Config { line, reason: format!("`{key}` expects true or false, got `{raw}`") })
            }
            None => Ok(default),
        }
    }

    fn finish(&self) -> Result<()> {
        for (key, e) in self.entries {
            if !e.used.get() {
                return Err(Error::Config { line: e.line, reason: format!("unknown key `{key}` in [{}]", self.name) });
            }
        }
        Ok(())
    }
}
