use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dynamics::{FrameRotation, SimulationGrid, SpinPreparation, TrapParams};
use crate::fock::{choose_truncation, TruncationPolicy};
use crate::{angular_from_hz, Error, Result, C64};

/// Environment variable overriding the sweep worker count.
pub const WORKERS_ENV: &str = "KERR_ION_WORKERS";

/// Fock cutoff used with `--paper-parity`.
pub const PARITY_N_MAX: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Smallest cutoff whose initial Poisson tail is below the bound.
    Adaptive { tail_epsilon: f64 },
    Fixed { n_max: usize },
}

/// One run's settings. Frequencies are ordinary (Hz), times in ms or ns as
/// named; conversion to rad/us happens in [`RunConfig::trap_params`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub trap_freq_hz: f64,
    pub rabi_hz: f64,
    pub eta: f64,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub dt_ns: f64,
    pub t_total_ms: f64,
    /// Steps between records; `None` records every `record_interval_us`.
    pub record_stride: Option<usize>,
    pub record_interval_us: f64,
    pub truncation: Truncation,
    pub output_dir: PathBuf,
    pub commensurate: bool,
    pub spin: SpinPreparation,
    pub frame: FrameRotation,
    /// `None` uses the environment or the machine's parallelism.
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    /// The reference cat run: eta = 0.2, Omega = 2pi x 100 kHz,
    /// omega = 2pi x 3 MHz, alpha = 2, 13.5 ms at 1 ns steps.
    fn default() -> Self {
        Self {
            trap_freq_hz: 3e6,
            rabi_hz: 100e3,
            eta: 0.2,
            alpha_re: 2.0,
            alpha_im: 0.0,
            dt_ns: 1.0,
            t_total_ms: 13.5,
            record_stride: None,
            record_interval_us: 10.0,
            truncation: Truncation::Adaptive { tail_epsilon: 1e-12 },
            output_dir: PathBuf::from("out"),
            commensurate: true,
            spin: SpinPreparation::Plus,
            frame: FrameRotation::Fitted,
            workers: None,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "trap_freq_hz",
    "rabi_hz",
    "eta",
    "alpha_re",
    "alpha_im",
    "dt_ns",
    "t_total_ms",
    "record_stride",
    "record_interval_us",
    "truncation",
    "tail_epsilon",
    "n_max",
    "output_dir",
    "commensurate",
    "spin",
    "frame",
    "workers",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {key} = {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("cannot parse {key} = {value:?} as a flag"))),
    }
}

impl RunConfig {
    /// Parses `key = value` lines; `#` and `;` start comments, `[section]`
    /// headers are ignored.
    pub fn from_ini(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`, got {raw:?}", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_ini(&text)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "trap_freq_hz" => self.trap_freq_hz = parse(key, value)?,
            "rabi_hz" => self.rabi_hz = parse(key, value)?,
            "eta" => self.eta = parse(key, value)?,
            "alpha_re" => self.alpha_re = parse(key, value)?,
            "alpha_im" => self.alpha_im = parse(key, value)?,
            "dt_ns" => self.dt_ns = parse(key, value)?,
            "t_total_ms" => self.t_total_ms = parse(key, value)?,
            "record_stride" => {
                self.record_stride = match value {
                    "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "record_interval_us" => self.record_interval_us = parse(key, value)?,
            "truncation" => {
                self.truncation = match value {
                    "adaptive" => match self.truncation {
                        t @ Truncation::Adaptive { .. } => t,
                        Truncation::Fixed { .. } => Truncation::Adaptive { tail_epsilon: 1e-12 },
                    },
                    "fixed" => match self.truncation {
                        t @ Truncation::Fixed { .. } => t,
                        Truncation::Adaptive { .. } => Truncation::Fixed { n_max: PARITY_N_MAX },
                    },
                    other => {
                        return Err(Error::Config(format!(
                            "truncation must be adaptive or fixed, got {other:?}"
                        )))
                    }
                }
            }
            "tail_epsilon" => {
                self.truncation = Truncation::Adaptive {
                    tail_epsilon: parse(key, value)?,
                }
            }
            "n_max" => {
                self.truncation = Truncation::Fixed {
                    n_max: parse(key, value)?,
                }
            }
            "output_dir" => self.output_dir = PathBuf::from(value),
            "commensurate" => self.commensurate = parse_bool(key, value)?,
            "spin" => {
                self.spin = match value {
                    "plus" | "+" => SpinPreparation::Plus,
                    "minus" | "-" => SpinPreparation::Minus,
                    other => {
                        return Err(Error::Config(format!("spin must be plus or minus, got {other:?}")))
                    }
                }
            }
            "frame" => {
                self.frame = match value {
                    "fitted" => FrameRotation::Fitted,
                    "fixed" => FrameRotation::Fixed,
                    "off" => FrameRotation::Off,
                    other => {
                        return Err(Error::Config(format!(
                            "frame must be fitted, fixed or off, got {other:?}"
                        )))
                    }
                }
            }
            "workers" => {
                self.workers = match value {
                    "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("trap_freq_hz", self.trap_freq_hz),
            ("rabi_hz", self.rabi_hz + f64::MIN_POSITIVE),
            ("dt_ns", self.dt_ns),
            ("t_total_ms", self.t_total_ms + f64::MIN_POSITIVE),
            ("record_interval_us", self.record_interval_us),
        ];
        for (key, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{key} must be positive")));
            }
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::Config(format!("eta = {} outside (0, 1)", self.eta)));
        }
        if !self.alpha_re.is_finite() || !self.alpha_im.is_finite() {
            return Err(Error::Config("alpha must be finite".into()));
        }
        match self.truncation {
            Truncation::Adaptive { tail_epsilon } if !(tail_epsilon > 0.0 && tail_epsilon < 0.1) => {
                return Err(Error::Config(format!("tail_epsilon = {tail_epsilon} outside (0, 0.1)")))
            }
            Truncation::Fixed { n_max: 0 } => return Err(Error::Config("n_max must be >= 1".into())),
            _ => {}
        }
        if self.record_stride == Some(0) || self.workers == Some(0) {
            return Err(Error::Config("record_stride and workers must be >= 1".into()));
        }
        Ok(())
    }

    pub fn alpha(&self) -> C64 {
        C64::new(self.alpha_re, self.alpha_im)
    }

    pub fn trap_params(&self) -> TrapParams {
        TrapParams::from_hz(self.rabi_hz, self.trap_freq_hz, self.eta, self.alpha())
    }

    pub fn policy(&self) -> Result<TruncationPolicy> {
        match self.truncation {
            Truncation::Adaptive { tail_epsilon } => choose_truncation(self.alpha(), tail_epsilon),
            Truncation::Fixed { n_max } => TruncationPolicy::fixed(n_max),
        }
    }

    pub fn dt_us(&self) -> f64 {
        self.dt_ns * 1e-3
    }

    pub fn t_total_us(&self) -> f64 {
        self.t_total_ms * 1e3
    }

    pub fn grid(&self) -> Result<SimulationGrid> {
        let p = self.trap_params();
        match self.record_stride {
            Some(stride) => {
                SimulationGrid::new(self.dt_us(), self.t_total_us(), stride, self.commensurate)
            }
            None if self.commensurate => SimulationGrid::with_interval(
                &p,
                self.dt_us(),
                self.t_total_us(),
                self.record_interval_us,
            ),
            None => {
                let stride = (self.record_interval_us / self.dt_us()).round().max(1.0) as usize;
                SimulationGrid::new(self.dt_us(), self.t_total_us(), stride, false)
            }
        }
    }

    /// Rabi frequency in rad/us.
    pub fn rabi(&self) -> f64 {
        angular_from_hz(self.rabi_hz)
    }

    /// Worker count: explicit setting, then the environment, then the
    /// available parallelism.
    pub fn resolved_workers(&self) -> usize {
        if let Some(w) = self.workers {
            return w;
        }
        std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .filter(|&w: &usize| w > 0)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    /// Round-trippable `key = value` text.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("trap_freq_hz", format!("{}", self.trap_freq_hz));
        kv("rabi_hz", format!("{}", self.rabi_hz));
        kv("eta", format!("{}", self.eta));
        kv("alpha_re", format!("{}", self.alpha_re));
        kv("alpha_im", format!("{}", self.alpha_im));
        kv("dt_ns", format!("{}", self.dt_ns));
        kv("t_total_ms", format!("{}", self.t_total_ms));
        kv(
            "record_stride",
            self.record_stride.map_or("auto".into(), |s| s.to_string()),
        );
        kv("record_interval_us", format!("{}", self.record_interval_us));
        match self.truncation {
            Truncation::Adaptive { tail_epsilon } => {
                kv("truncation", "adaptive".into());
                kv("tail_epsilon", format!("{tail_epsilon:e}"));
            }
            Truncation::Fixed { n_max } => {
                kv("truncation", "fixed".into());
                kv("n_max", n_max.to_string());
            }
        }
        kv("output_dir", self.output_dir.display().to_string());
        kv("commensurate", self.commensurate.to_string());
        kv(
            "spin",
            match self.spin {
                SpinPreparation::Plus => "plus".into(),
                SpinPreparation::Minus => "minus".into(),
            },
        );
        kv(
            "frame",
            match self.frame {
                FrameRotation::Fitted => "fitted".into(),
                FrameRotation::Fixed => "fixed".into(),
                FrameRotation::Off => "off".into(),
            },
        );
        kv("workers", self.workers.map_or("auto".into(), |w| w.to_string()));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::default();
        cfg.set("n_max", "30").unwrap();
        cfg.set("spin", "minus").unwrap();
        cfg.set("workers", "3").unwrap();
        cfg.set("record_stride", "999").unwrap();
        let back = RunConfig::from_ini(&cfg.to_ini()).unwrap();
        assert_eq!(cfg, back);
        let d = RunConfig::default();
        assert_eq!(RunConfig::from_ini(&d.to_ini()).unwrap(), d);
    }

    #[test]
    fn parses_comments_and_sections() {
        let text = "[run]\n# comment\nrabi_hz = 50e3 ; inline\neta=0.15\n\n";
        let cfg = RunConfig::from_ini(text).unwrap();
        assert_eq!(cfg.rabi_hz, 50e3);
        assert_eq!(cfg.eta, 0.15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(RunConfig::from_ini("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_ini("eta = 1.5"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_ini("eta"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_ini("dt_ns = -1"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_ini("spin = up"), Err(Error::Config(_))));
    }

    #[test]
    fn unit_conversion() {
        let cfg = RunConfig::default();
        let p = cfg.trap_params();
        assert!((p.rabi - 2.0 * std::f64::consts::PI * 0.1).abs() < 1e-15);
        assert!((p.trap_freq - 2.0 * std::f64::consts::PI * 3.0).abs() < 1e-14);
        assert_eq!(cfg.dt_us(), 1e-3);
        assert_eq!(cfg.t_total_us(), 13500.0);
    }

    #[test]
    fn explicit_workers_win() {
        let cfg = RunConfig {
            workers: Some(2),
            ..RunConfig::default()
        };
        assert_eq!(cfg.resolved_workers(), 2);
    }
}
