//! Session configuration: a flat `key = value` file with an optional
//! `include = <preset>` line. Later lines override earlier ones.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{amplitude_for_snr, transmission_from_db, ChannelParams};
use crate::privacy::DEFAULT_SECURITY_BITS;
use crate::reconciliation::{DEFAULT_BLOCK_LEN, DEFAULT_MAX_ITER, MIN_BLOCK_LEN};
use crate::rng::derive_seed;
use crate::security::{acceptance_and_error, OperatingPoint, DEFAULT_EXCESS_NOISE_CEILING};

/// Smallest session accepted.
pub const MIN_SLOTS: u64 = 10_000;

pub const PRESETS: [&str; 3] = ["paper-24km", "paper-derived", "ideal"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {value}")]
    BadValue { key: String, value: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// How Alice's amplitude is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulation {
    /// Received signal-to-noise ratio; `mu = sqrt(snr)`.
    Snr(f64),
    /// Alice's amplitude `r` directly.
    Amplitude(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub channel: ChannelParams,
    pub modulation: Modulation,
    pub threshold: f64,
    pub p_tomo: f64,
    /// Target reconciliation efficiency.
    pub beta: f64,
    pub slots: u64,
    /// Slots per second, for rate reporting.
    pub symbol_rate: f64,
    pub seed_alice: u64,
    pub seed_bob: u64,
    pub seed_channel: u64,
    pub excess_noise_ceiling: f64,
    /// Longest reconciliation block.
    pub block_len: usize,
    /// Fixed code rate; chosen from `beta` and the estimated error rate
    /// when absent.
    pub code_rate: Option<f64>,
    pub max_iter: usize,
    pub s_sec: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self::paper_24km()
    }
}

impl SessionConfig {
    pub fn paper_24km() -> Self {
        Self {
            channel: ChannelParams {
                eta_channel: transmission_from_db(5.18),
                eta_detector: 0.56,
                excess_noise: 0.0024,
                electronic_noise: 0.069,
                phase_offset: 0.0,
            },
            modulation: Modulation::Snr(0.272),
            threshold: 1.0588,
            p_tomo: 0.10,
            beta: 0.80,
            slots: 2_000_000,
            symbol_rate: 2e6,
            seed_alice: 1,
            seed_bob: 2,
            seed_channel: 3,
            excess_noise_ceiling: DEFAULT_EXCESS_NOISE_CEILING,
            block_len: DEFAULT_BLOCK_LEN,
            code_rate: None,
            max_iter: DEFAULT_MAX_ITER,
            s_sec: DEFAULT_SECURITY_BITS,
        }
    }

    /// Same link, with the SNR chosen so that the post-selected error rate
    /// is 7% at the same threshold.
    pub fn paper_derived() -> Self {
        let mut c = Self::paper_24km();
        let sigma = c.channel.noise_variance().sqrt();
        let mu = mean_for_error_rate(0.07, c.threshold, sigma);
        c.modulation = Modulation::Snr(mu * mu);
        c
    }

    pub fn ideal() -> Self {
        Self {
            channel: ChannelParams::ideal(),
            modulation: Modulation::Amplitude(1.5),
            threshold: 0.0,
            p_tomo: 0.5,
            beta: 0.90,
            slots: 200_000,
            // tomography on 1e5 slots still scatters the estimate by ~0.005
            excess_noise_ceiling: 0.05,
            block_len: 50_000,
            ..Self::paper_24km()
        }
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        match name {
            "paper-24km" => Ok(Self::paper_24km()),
            "paper-derived" => Ok(Self::paper_derived()),
            "ideal" => Ok(Self::ideal()),
            _ => Err(ConfigError::UnknownPreset(name.to_string())),
        }
    }

    /// Alice's amplitude `r`.
    pub fn amplitude(&self) -> f64 {
        match self.modulation {
            Modulation::Amplitude(r) => r,
            Modulation::Snr(snr) => amplitude_for_snr(snr, self.channel.total_transmission()),
        }
    }

    /// Closed-form operating point implied by the configured link.
    pub fn operating_point(&self) -> OperatingPoint {
        let eta = self.channel.total_transmission();
        let r = self.amplitude();
        OperatingPoint {
            mu: 2.0 * eta.sqrt() * r,
            threshold: self.threshold,
            noise_variance: self.channel.noise_variance(),
            excess_noise: self.channel.excess_noise,
            total_transmission: eta,
            amplitude: r,
            beta: self.beta,
            p_tomo: self.p_tomo,
        }
    }

    /// Sets all three seeds from one value.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed_alice = derive_seed(seed, 0xa11ce);
        self.seed_bob = derive_seed(seed, 0xb0b);
        self.seed_channel = derive_seed(seed, 0xc4a2);
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        self.channel
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let r = self.amplitude();
        if !(r.is_finite() && r > 0.0) {
            return bad(format!("amplitude must be > 0, got {r}"));
        }
        if !(self.threshold >= 0.0 && self.threshold.is_finite()) {
            return bad(format!("threshold must be >= 0, got {}", self.threshold));
        }
        if !(0.0..1.0).contains(&self.p_tomo) {
            return bad(format!("p_tomo must be in [0, 1), got {}", self.p_tomo));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return bad(format!("beta must be in (0, 1], got {}", self.beta));
        }
        if self.slots < MIN_SLOTS {
            return bad(format!(
                "need at least {MIN_SLOTS} slots, got {}",
                self.slots
            ));
        }
        if !(self.symbol_rate > 0.0 && self.symbol_rate.is_finite()) {
            return bad(format!("symbol_rate must be > 0, got {}", self.symbol_rate));
        }
        if self.excess_noise_ceiling.is_nan() {
            return bad("excess_noise_ceiling is NaN".into());
        }
        if self.block_len < 2 * MIN_BLOCK_LEN {
            return bad(format!(
                "block_len must be >= {}, got {}",
                2 * MIN_BLOCK_LEN,
                self.block_len
            ));
        }
        if let Some(rate) = self.code_rate {
            if !(rate > 0.0 && rate < 1.0) {
                return bad(format!("code_rate must be in (0, 1), got {rate}"));
            }
        }
        if self.max_iter == 0 {
            return bad("max_iter must be > 0".into());
        }
        Ok(())
    }

    /// Applies `key = value` text on top of `self`. `include` lines load a
    /// preset, or a file relative to `base_dir`.
    pub fn apply_text(&mut self, text: &str, base_dir: Option<&Path>) -> Result<(), ConfigError> {
        self.apply_text_depth(text, base_dir, 0)
    }

    fn apply_text_depth(
        &mut self,
        text: &str,
        base_dir: Option<&Path>,
        depth: usize,
    ) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    message: format!("expected key = value, got `{line}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if key == "include" {
                if depth > 8 {
                    return Err(ConfigError::Syntax {
                        line: i + 1,
                        message: "include nesting too deep".into(),
                    });
                }
                if PRESETS.contains(&value) {
                    *self = Self::preset(value)?;
                } else {
                    let path = base_dir
                        .map(|d| d.join(value))
                        .unwrap_or_else(|| value.into());
                    let text = read(&path)?;
                    self.apply_text_depth(&text, path.parent(), depth + 1)?;
                }
            } else {
                self.set(key, value)?;
            }
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut c = Self::paper_24km();
        c.apply_text(text, None)?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = read(path)?;
        let mut c = Self::paper_24km();
        c.apply_text(&text, path.parent())?;
        c.validate()?;
        Ok(c)
    }

    /// Sets one key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
        };
        let f = || value.parse::<f64>().map_err(|_| bad());
        let u = || value.parse::<u64>().map_err(|_| bad());
        match key {
            "loss_db" => self.channel.eta_channel = transmission_from_db(f()?),
            "eta_channel" => self.channel.eta_channel = f()?,
            "eta_detector" => self.channel.eta_detector = f()?,
            "excess_noise" => self.channel.excess_noise = f()?,
            "electronic_noise" => self.channel.electronic_noise = f()?,
            "phase_offset" => self.channel.phase_offset = f()?,
            "snr" => self.modulation = Modulation::Snr(f()?),
            "amplitude" => self.modulation = Modulation::Amplitude(f()?),
            "threshold" => self.threshold = f()?,
            "p_tomo" => self.p_tomo = f()?,
            "beta" => self.beta = f()?,
            "slots" => self.slots = u()?,
            "symbol_rate" => self.symbol_rate = f()?,
            "seed" => self.set_seed(u()?),
            "seed_alice" => self.seed_alice = u()?,
            "seed_bob" => self.seed_bob = u()?,
            "seed_channel" => self.seed_channel = u()?,
            "excess_noise_ceiling" => self.excess_noise_ceiling = f()?,
            "block_len" => self.block_len = u()? as usize,
            "code_rate" => {
                self.code_rate = match value {
                    "auto" => None,
                    _ => Some(f()?),
                }
            }
            "max_iter" => self.max_iter = u()? as usize,
            "s_sec" => self.s_sec = u()?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Every key, in a form [`SessionConfig::from_text`] reads back exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let c = &self.channel;
        let _ = writeln!(s, "eta_channel = {:?}", c.eta_channel);
        let _ = writeln!(s, "eta_detector = {:?}", c.eta_detector);
        let _ = writeln!(s, "excess_noise = {:?}", c.excess_noise);
        let _ = writeln!(s, "electronic_noise = {:?}", c.electronic_noise);
        let _ = writeln!(s, "phase_offset = {:?}", c.phase_offset);
        match self.modulation {
            Modulation::Snr(x) => writeln!(s, "snr = {x:?}"),
            Modulation::Amplitude(x) => writeln!(s, "amplitude = {x:?}"),
        }
        .ok();
        let _ = writeln!(s, "threshold = {:?}", self.threshold);
        let _ = writeln!(s, "p_tomo = {:?}", self.p_tomo);
        let _ = writeln!(s, "beta = {:?}", self.beta);
        let _ = writeln!(s, "slots = {}", self.slots);
        let _ = writeln!(s, "symbol_rate = {:?}", self.symbol_rate);
        let _ = writeln!(s, "seed_alice = {}", self.seed_alice);
        let _ = writeln!(s, "seed_bob = {}", self.seed_bob);
        let _ = writeln!(s, "seed_channel = {}", self.seed_channel);
        let _ = writeln!(s, "excess_noise_ceiling = {:?}", self.excess_noise_ceiling);
        let _ = writeln!(s, "block_len = {}", self.block_len);
        match self.code_rate {
            Some(r) => writeln!(s, "code_rate = {r:?}"),
            None => writeln!(s, "code_rate = auto"),
        }
        .ok();
        let _ = writeln!(s, "max_iter = {}", self.max_iter);
        let _ = writeln!(s, "s_sec = {}", self.s_sec);
        s
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Received mean giving post-selected error rate `e` (bisection; the error
/// rate falls monotonically in the mean).
pub fn mean_for_error_rate(e: f64, threshold: f64, sigma: f64) -> f64 {
    let err = |mu: f64| {
        acceptance_and_error(mu, threshold, sigma)
            .map(|x| x.1)
            .unwrap_or(0.0)
    };
    let (mut lo, mut hi) = (0.0, 20.0 * sigma);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if err(mid) > e {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            SessionConfig::preset(name).unwrap().validate().unwrap();
        }
        assert!(SessionConfig::preset("nope").is_err());
    }

    #[test]
    fn paper_preset_values() {
        let c = SessionConfig::paper_24km();
        assert!((c.channel.total_transmission() - 0.16990).abs() < 1e-4);
        assert!((c.amplitude() - 0.63265).abs() < 1e-4);
        assert!((c.channel.noise_variance() - 1.0714).abs() < 1e-12);
    }

    #[test]
    fn derived_preset_hits_seven_percent() {
        let c = SessionConfig::paper_derived();
        let Modulation::Snr(snr) = c.modulation else {
            panic!()
        };
        let (_, e) =
            acceptance_and_error(snr.sqrt(), c.threshold, c.channel.noise_variance().sqrt())
                .unwrap();
        assert!((e - 0.07).abs() < 1e-9);
    }

    #[test]
    fn text_roundtrip_and_overrides() {
        let c = SessionConfig::from_text(
            "include = ideal\nslots = 30000 # comment\n\ncode_rate = 0.5\n",
        )
        .unwrap();
        assert_eq!(c.slots, 30_000);
        assert_eq!(c.code_rate, Some(0.5));
        assert_eq!(c.threshold, 0.0);
        let back = SessionConfig::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        let p = SessionConfig::paper_derived();
        assert_eq!(SessionConfig::from_text(&p.to_text()).unwrap(), p);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            SessionConfig::from_text("slots 10"),
            Err(ConfigError::Syntax { .. })
        ));
        assert!(matches!(
            SessionConfig::from_text("colour = red"),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            SessionConfig::from_text("beta = x"),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(matches!(
            SessionConfig::from_text("slots = 9999"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            SessionConfig::from_text("include = nowhere.cfg"),
            Err(ConfigError::Io { .. })
        ));
        assert!(matches!(
            SessionConfig::from_text("beta = 1.5"),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn one_seed_sets_all_three() {
        let a = SessionConfig::from_text("seed = 9").unwrap();
        let b = SessionConfig::from_text("seed = 9").unwrap();
        assert_eq!(a, b);
        assert_ne!(a.seed_alice, a.seed_bob);
    }
}
