//! End-to-end Monte Carlo simulation.
//!
//! A trial draws sources and channels from per-trial streams (see
//! [`crate::rng`]), so different schemes, detectors and SNR points run on the
//! same seed see identical sources and fading. Sweeps reduce trials in index
//! order and are bit-reproducible.

use alloc::vec::Vec;

use crate::channel::mimo::MimoParams;
use crate::channel::{ChannelParams, TapProfile};
use crate::codec::{QuantizerSpec, RangeMode};
use crate::transceiver::Detector;
use crate::{Error, Result};

mod sweep;
mod trial;

pub use sweep::{nmse, snr_to_noise_power, sweep, PointAccumulator, SweepPoint, SweepResult};
pub use trial::{
    draw_realization, run_analog_baseline, run_scheme_trial, run_trial, SubcarrierRecord,
    TrialRecord, TrialStreams,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    /// Uniform on `[-s_max, s_max]`.
    Uniform { s_max: f64 },
    /// Zero-mean Gaussian, saturated to `[-s_max, s_max]` before quantization.
    Gaussian { std: f64, s_max: f64 },
}

impl Source {
    pub fn s_max(&self) -> f64 {
        match *self {
            Self::Uniform { s_max } | Self::Gaussian { s_max, .. } => s_max,
        }
    }

    /// Second moment of one device's value before clamping.
    pub fn second_moment(&self) -> f64 {
        match *self {
            Self::Uniform { s_max } => s_max * s_max / 3.0,
            Self::Gaussian { std, .. } => std * std,
        }
    }

    fn range_mode(&self) -> RangeMode {
        match self {
            Self::Uniform { .. } => RangeMode::Strict,
            Self::Gaussian { .. } => RangeMode::Clamp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Two's-complement code, greedy truncated inversion, configurable detector.
    Proposed,
    /// Uncoded amplitudes with threshold truncation, averaged over subcarriers.
    Analog,
    /// Offset-binary code with ML plane detection.
    BinaryMl,
}

impl Scheme {
    pub fn is_coded(&self) -> bool {
        !matches!(self, Self::Analog)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Proposed => "proposed",
            Self::Analog => "analog",
            Self::BinaryMl => "binary_ml",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerMode {
    Uniform,
    Geometric { varpi: f64 },
}

impl PowerMode {
    pub fn varpi(&self) -> f64 {
        match *self {
            Self::Uniform => 1.0,
            Self::Geometric { varpi } => varpi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TapShape {
    Uniform,
    Exponential { decay: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub devices: usize,
    pub bits: u32,
    pub subcarriers: usize,
    pub taps: usize,
    pub tap_shape: TapShape,
    pub source: Source,
    pub scheme: Scheme,
    pub power: PowerMode,
    pub detector: Detector,
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub csi_error_radius: f64,
    pub p_max: f64,
    pub seed: u64,
    pub mimo: Option<MimoParams>,
    /// `|h|^2` threshold of the analog baseline.
    pub analog_threshold: f64,
    /// Second power-allocation pass after selection.
    pub reallocate: bool,
    /// Let a subcarrier go silent when no set beats the prior variance.
    pub allow_silence: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            devices: 20,
            bits: 8,
            subcarriers: 8,
            taps: 4,
            tap_shape: TapShape::Uniform,
            source: Source::Uniform { s_max: 1.0 },
            scheme: Scheme::Proposed,
            power: PowerMode::Uniform,
            detector: Detector::Lmmse,
            snr_db: alloc::vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            trials: 100_000,
            csi_error_radius: 0.0,
            p_max: 1.0,
            seed: 0,
            mimo: None,
            analog_threshold: 0.1,
            reallocate: false,
            allow_silence: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.devices == 0 {
            return Err(Error::invalid("devices", "need at least one device"));
        }
        if self.scheme.is_coded() && self.subcarriers != self.bits as usize {
            return Err(Error::invalid("subcarriers", "coded schemes need L = b"));
        }
        if self.subcarriers == 0 {
            return Err(Error::invalid(
                "subcarriers",
                "need at least one subcarrier",
            ));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "need at least one trial"));
        }
        if self.snr_db.is_empty() {
            return Err(Error::invalid("snr_db", "SNR grid is empty"));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("snr_db", "SNR values must be finite"));
        }
        if !(self.p_max.is_finite() && self.p_max > 0.0) {
            return Err(Error::invalid("p_max", "must be finite and positive"));
        }
        if !(self.csi_error_radius.is_finite() && self.csi_error_radius >= 0.0) {
            return Err(Error::invalid(
                "csi_error_radius",
                "must be finite and non-negative",
            ));
        }
        if self.analog_threshold.is_nan() || self.analog_threshold < 0.0 {
            return Err(Error::invalid("analog_threshold", "must be non-negative"));
        }
        if let Source::Gaussian { std, .. } = self.source {
            if !(std.is_finite() && std > 0.0) {
                return Err(Error::invalid("source_std", "must be finite and positive"));
            }
        }
        if let Some(m) = self.mimo {
            MimoParams::new(m.tx, m.rx)?;
        }
        let varpi = self.power.varpi();
        if !(varpi.is_finite() && varpi >= 1.0) {
            return Err(Error::invalid("varpi", "must be at least 1"));
        }
        self.tap_profile()?;
        if self.scheme.is_coded() {
            self.quantizer()?;
        } else if !(self.source.s_max().is_finite() && self.source.s_max() > 0.0) {
            return Err(Error::invalid("s_max", "must be finite and positive"));
        }
        Ok(())
    }

    pub fn tap_profile(&self) -> Result<TapProfile> {
        match self.tap_shape {
            TapShape::Uniform => TapProfile::uniform(self.taps),
            TapShape::Exponential { decay } => TapProfile::exponential(self.taps, decay),
        }
    }

    pub fn quantizer(&self) -> Result<QuantizerSpec> {
        Ok(QuantizerSpec::new(self.bits, self.source.s_max())?.with_mode(self.source.range_mode()))
    }

    pub fn channel_params(&self, noise_power: f64) -> Result<ChannelParams> {
        Ok(ChannelParams::new(
            self.devices,
            self.subcarriers,
            self.tap_profile()?,
            noise_power,
        )
        .with_csi_error(self.csi_error_radius))
    }
}
