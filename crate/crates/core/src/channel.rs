//! Frequency-selective fading, CSI perturbation and MAC superposition.
//!
//! Each device link is a tapped delay line. Tap `m` has a circularly-symmetric
//! complex Gaussian gain with the profile variance and an integer delay; the
//! first tap sits at delay 0 and the others are uniform on `0..L`. Subcarrier
//! `l` (1-based in the phase term) then sees
//! `h_{k,l} = sum_m g_m exp(j 2 pi tau_m l / L)`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::rng::{self, Purpose};
use crate::{Error, Result};

pub mod mimo;

/// Per-tap power profile, normalised to unit total power.
#[derive(Debug, Clone, PartialEq)]
pub struct TapProfile {
    variances: Vec<f64>,
}

impl TapProfile {
    pub fn uniform(taps: usize) -> Result<Self> {
        if taps == 0 {
            return Err(Error::invalid("taps", "need at least one tap"));
        }
        Ok(Self {
            variances: alloc::vec![1.0 / taps as f64; taps],
        })
    }

    /// Variances proportional to `exp(-decay * m)`.
    pub fn exponential(taps: usize, decay: f64) -> Result<Self> {
        if taps == 0 {
            return Err(Error::invalid("taps", "need at least one tap"));
        }
        if !(decay.is_finite() && decay >= 0.0) {
            return Err(Error::invalid("decay", "must be finite and non-negative"));
        }
        let raw: Vec<f64> = (0..taps).map(|m| libm::exp(-decay * m as f64)).collect();
        let total: f64 = raw.iter().sum();
        Ok(Self {
            variances: raw.into_iter().map(|v| v / total).collect(),
        })
    }

    pub fn from_variances(variances: Vec<f64>) -> Result<Self> {
        if variances.is_empty() {
            return Err(Error::invalid("taps", "need at least one tap"));
        }
        if variances.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("taps", "variances must be positive"));
        }
        let total: f64 = variances.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("taps", "variances must sum to 1"));
        }
        Ok(Self { variances })
    }

    pub fn taps(&self) -> usize {
        self.variances.len()
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub devices: usize,
    pub subcarriers: usize,
    pub profile: TapProfile,
    /// `sigma_l^2` per subcarrier.
    pub noise_power: Vec<f64>,
    /// Bound on the relative CSI error `|Delta|`.
    pub csi_error_radius: f64,
}

impl ChannelParams {
    /// Equal noise power on every subcarrier, perfect CSI.
    pub fn new(devices: usize, subcarriers: usize, profile: TapProfile, noise_power: f64) -> Self {
        Self {
            devices,
            subcarriers,
            profile,
            noise_power: alloc::vec![noise_power; subcarriers],
            csi_error_radius: 0.0,
        }
    }

    pub fn with_csi_error(mut self, radius: f64) -> Self {
        self.csi_error_radius = radius;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.devices == 0 {
            return Err(Error::invalid("devices", "need at least one device"));
        }
        if self.subcarriers == 0 {
            return Err(Error::invalid(
                "subcarriers",
                "need at least one subcarrier",
            ));
        }
        if self.noise_power.len() != self.subcarriers {
            return Err(Error::DimensionMismatch {
                expected: self.subcarriers,
                actual: self.noise_power.len(),
            });
        }
        if self
            .noise_power
            .iter()
            .any(|s| !(s.is_finite() && *s > 0.0))
        {
            return Err(Error::invalid("noise_power", "must be finite and positive"));
        }
        if !(self.csi_error_radius.is_finite() && self.csi_error_radius >= 0.0) {
            return Err(Error::invalid(
                "csi_error_radius",
                "must be finite and non-negative",
            ));
        }
        Ok(())
    }
}

/// True and estimated gains for every (device, subcarrier), row-major by device.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    devices: usize,
    subcarriers: usize,
    h: Vec<Complex64>,
    h_est: Vec<Complex64>,
    noise_power: Vec<f64>,
}

impl NetworkRealization {
    pub fn from_parts(
        devices: usize,
        subcarriers: usize,
        h: Vec<Complex64>,
        h_est: Vec<Complex64>,
        noise_power: Vec<f64>,
    ) -> Result<Self> {
        let cells = devices * subcarriers;
        for len in [h.len(), h_est.len()] {
            if len != cells {
                return Err(Error::DimensionMismatch {
                    expected: cells,
                    actual: len,
                });
            }
        }
        if noise_power.len() != subcarriers {
            return Err(Error::DimensionMismatch {
                expected: subcarriers,
                actual: noise_power.len(),
            });
        }
        Ok(Self {
            devices,
            subcarriers,
            h,
            h_est,
            noise_power,
        })
    }

    pub fn devices(&self) -> usize {
        self.devices
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn gain(&self, device: usize, subcarrier: usize) -> Complex64 {
        self.h[device * self.subcarriers + subcarrier]
    }

    pub fn estimate(&self, device: usize, subcarrier: usize) -> Complex64 {
        self.h_est[device * self.subcarriers + subcarrier]
    }

    pub fn noise_power(&self, subcarrier: usize) -> f64 {
        self.noise_power[subcarrier]
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.h
    }

    pub fn estimates(&self) -> &[Complex64] {
        &self.h_est
    }

    pub fn noise_powers(&self) -> &[f64] {
        &self.noise_power
    }
}

/// `exp(j 2 pi n / L)` for `n in 0..L`.
pub(crate) fn twiddles(subcarriers: usize) -> Vec<Complex64> {
    (0..subcarriers)
        .map(|n| Complex64::cis(2.0 * PI * n as f64 / subcarriers as f64))
        .collect()
}

/// Draws one device link across all subcarriers into `out`.
pub(crate) fn draw_link<R: Rng + ?Sized>(
    rng: &mut R,
    profile: &TapProfile,
    twiddles: &[Complex64],
    out: &mut [Complex64],
) {
    let subcarriers = twiddles.len();
    out.iter_mut().for_each(|h| *h = Complex64::new(0.0, 0.0));
    for (m, &variance) in profile.variances().iter().enumerate() {
        let delay = if m == 0 {
            0
        } else {
            rng.random_range(0..subcarriers)
        };
        let tap = rng::complex_gaussian(rng, variance);
        for (l, h) in out.iter_mut().enumerate() {
            *h += tap * twiddles[(delay * (l + 1)) % subcarriers];
        }
    }
}

/// Applies `h_est = h (1 + Delta)` with `Delta` uniform on the disk.
pub(crate) fn perturb<R: Rng + ?Sized>(
    rng: &mut R,
    radius: f64,
    h: &[Complex64],
) -> Vec<Complex64> {
    if radius == 0.0 {
        return h.to_vec();
    }
    h.iter()
        .map(|&g| g * (Complex64::new(1.0, 0.0) + rng::complex_disk(rng, radius)))
        .collect()
}

/// Draws a realization from explicit channel and CSI-error generators.
pub fn draw_channel_with<R: Rng + ?Sized>(
    params: &ChannelParams,
    channel_rng: &mut R,
    csi_rng: &mut R,
) -> Result<NetworkRealization> {
    params.validate()?;
    let (k, l) = (params.devices, params.subcarriers);
    let table = twiddles(l);
    let mut h = alloc::vec![Complex64::new(0.0, 0.0); k * l];
    for row in h.chunks_exact_mut(l) {
        draw_link(channel_rng, &params.profile, &table, row);
    }
    let h_est = perturb(csi_rng, params.csi_error_radius, &h);
    NetworkRealization::from_parts(k, l, h, h_est, params.noise_power.clone())
}

/// Realization for trial 0 of `seed`.
pub fn draw_channel(params: &ChannelParams, seed: u64) -> Result<NetworkRealization> {
    draw_trial_channel(params, seed, 0)
}

/// Realization for a given trial, on the trial's channel and CSI streams.
pub fn draw_trial_channel(
    params: &ChannelParams,
    seed: u64,
    trial: u64,
) -> Result<NetworkRealization> {
    let mut channel_rng = rng::stream(seed, trial, Purpose::Channel);
    let mut csi_rng = rng::stream(seed, trial, Purpose::Csi);
    draw_channel_with(params, &mut channel_rng, &mut csi_rng)
}

/// `y = sum_k weights_k * symbols_k + n`, `n ~ CN(0, noise_power)`.
pub fn mac_superpose<R: Rng + ?Sized>(
    symbols: &[f64],
    weights: &[Complex64],
    noise_power: f64,
    rng: &mut R,
) -> Complex64 {
    assert_eq!(symbols.len(), weights.len(), "one weight per symbol");
    let signal: Complex64 = symbols.iter().zip(weights).map(|(&t, &w)| w * t).sum();
    signal + rng::complex_gaussian(rng, noise_power)
}
