use alloc::vec::Vec;

use super::trial::{draw_realization, run_scheme_trial, TrialRecord, TrialStreams};
use super::SimConfig;
use crate::{Error, Result};

/// `sigma^2 = P_max / (SNR * L)` with the SNR given in dB.
pub fn snr_to_noise_power(p_max: f64, snr_db: f64, subcarriers: usize) -> f64 {
    p_max / (libm::pow(10.0, snr_db / 10.0) * subcarriers as f64)
}

/// Ratio of sums `sum (s_hat - s)^2 / sum s^2`.
pub fn nmse(records: &[TrialRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::invalid("records", "need at least one trial"));
    }
    let num: f64 = records.iter().map(TrialRecord::squared_error).sum();
    let den: f64 = records.iter().map(|r| r.s_true * r.s_true).sum();
    if den == 0.0 {
        return Err(Error::UndefinedNmse);
    }
    Ok(num / den)
}

/// Streaming statistics of one SNR point. Trials must be pushed in index
/// order for bit-reproducible results.
#[derive(Debug, Clone, Default)]
pub struct PointAccumulator {
    n: u64,
    err: f64,
    err2: f64,
    sig: f64,
    sig2: f64,
    err_sig: f64,
    quant: f64,
    trans: f64,
    active: Vec<f64>,
    scaling: Vec<f64>,
    ones: Vec<f64>,
    devices: f64,
    plane_err: Vec<f64>,
    plane_cross: Vec<f64>,
}

impl PointAccumulator {
    pub fn new(subcarriers: usize) -> Self {
        Self {
            active: alloc::vec![0.0; subcarriers],
            scaling: alloc::vec![0.0; subcarriers],
            ones: alloc::vec![0.0; subcarriers],
            plane_err: alloc::vec![0.0; subcarriers],
            plane_cross: alloc::vec![0.0; subcarriers * subcarriers],
            ..Self::default()
        }
    }

    pub fn push(&mut self, record: &TrialRecord) {
        let a = record.squared_error();
        let b = record.s_true * record.s_true;
        self.n += 1;
        self.err += a;
        self.err2 += a * a;
        self.sig += b;
        self.sig2 += b * b;
        self.err_sig += a * b;
        self.quant += record.quantization_error();
        self.trans += record.transmission_error();
        let l = self.active.len();
        for (i, s) in record.subcarriers.iter().enumerate() {
            self.active[i] += s.active as f64;
            self.scaling[i] += s.scaling;
            let e = s.estimate - s.target;
            self.plane_err[i] += e;
            for (j, t) in record.subcarriers.iter().enumerate() {
                self.plane_cross[i * l + j] += e * (t.estimate - t.target);
            }
        }
        for c in &record.codewords {
            for (i, ones) in self.ones.iter_mut().enumerate() {
                *ones += f64::from(c.bit(i));
            }
        }
        self.devices += record.codewords.len() as f64;
    }

    pub fn finish(&self, snr_db: f64, noise_power: f64) -> Result<SweepPoint> {
        if self.n == 0 {
            return Err(Error::invalid("trials", "need at least one trial"));
        }
        if self.sig == 0.0 {
            return Err(Error::UndefinedNmse);
        }
        let n = self.n as f64;
        let ratio = self.err / self.sig;
        let stderr = if self.n > 1 {
            // Delta method for a ratio of means.
            let (ma, mb) = (self.err / n, self.sig / n);
            let var_a = (self.err2 - n * ma * ma) / (n - 1.0);
            let var_b = (self.sig2 - n * mb * mb) / (n - 1.0);
            let cov = (self.err_sig - n * ma * mb) / (n - 1.0);
            let v = (var_a - 2.0 * ratio * cov + ratio * ratio * var_b).max(0.0);
            libm::sqrt(v / n) / mb
        } else {
            0.0
        };
        let l = self.active.len();
        let mean = |v: &[f64]| v.iter().map(|x| x / n).collect::<Vec<_>>();
        let active = mean(&self.active);
        let scaling = mean(&self.scaling);
        let cov: Vec<f64> = (0..l * l)
            .map(|ij| {
                let (i, j) = (ij / l, ij % l);
                self.plane_cross[ij] / n - (self.plane_err[i] / n) * (self.plane_err[j] / n)
            })
            .collect();
        let corr = (0..l * l)
            .map(|ij| {
                let (i, j) = (ij / l, ij % l);
                let d = libm::sqrt(cov[i * l + i] * cov[j * l + j]);
                if d > 0.0 {
                    cov[ij] / d
                } else {
                    0.0
                }
            })
            .collect();
        Ok(SweepPoint {
            snr_db,
            noise_power,
            trials: self.n,
            nmse: ratio,
            stderr,
            quantization_nmse: self.quant / self.sig,
            transmission_nmse: self.trans / self.sig,
            mean_active: active.iter().sum::<f64>() / l as f64,
            mean_scaling: scaling.iter().sum::<f64>() / l as f64,
            mean_active_per_subcarrier: active,
            mean_scaling_per_subcarrier: scaling,
            bit_frequency: if self.devices > 0.0 {
                self.ones.iter().map(|o| o / self.devices).collect()
            } else {
                Vec::new()
            },
            plane_error_correlation: corr,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub noise_power: f64,
    pub trials: u64,
    pub nmse: f64,
    pub stderr: f64,
    /// NMSE of the quantized sum alone.
    pub quantization_nmse: f64,
    /// `sum (s_hat - s_quant)^2 / sum s^2`.
    pub transmission_nmse: f64,
    pub mean_active: f64,
    pub mean_scaling: f64,
    pub mean_active_per_subcarrier: Vec<f64>,
    pub mean_scaling_per_subcarrier: Vec<f64>,
    /// Fraction of ones per plane (coded schemes).
    pub bit_frequency: Vec<f64>,
    /// Row-major `L x L` correlation of per-plane estimation errors.
    pub plane_error_correlation: Vec<f64>,
}

impl SweepPoint {
    /// Largest off-diagonal plane error correlation in magnitude.
    pub fn max_cross_correlation(&self) -> f64 {
        let l = self.mean_active_per_subcarrier.len();
        (0..l * l)
            .filter(|ij| ij / l != ij % l)
            .map(|ij| self.plane_error_correlation[ij].abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub config: SimConfig,
    pub points: Vec<SweepPoint>,
}

/// Runs `config.trials` trials at every SNR point, reusing trial `t`'s sources
/// and fading across points.
pub fn sweep(config: &SimConfig) -> Result<SweepResult> {
    config.validate()?;
    let mut points = Vec::with_capacity(config.snr_db.len());
    for &snr_db in &config.snr_db {
        let noise_power = snr_to_noise_power(config.p_max, snr_db, config.subcarriers);
        let mut acc = PointAccumulator::new(config.subcarriers);
        for trial in 0..config.trials {
            let realization = draw_realization(config, noise_power, trial)?;
            let mut streams = TrialStreams::new(config.seed, trial);
            acc.push(&run_scheme_trial(config, &realization, &mut streams)?);
        }
        points.push(acc.finish(snr_db, noise_power)?);
    }
    Ok(SweepResult {
        config: config.clone(),
        points,
    })
}
