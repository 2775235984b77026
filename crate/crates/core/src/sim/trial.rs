use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Scheme, SimConfig, Source};
use crate::channel::mimo::draw_trial_mimo_channel;
use crate::channel::{self, mac_superpose, NetworkRealization};
use crate::codec::{self, Codeword};
use crate::rng::{self, Purpose, SimRng};
use crate::selection::{greedy_select, optimal_scaling, Selection, SelectionInstance};
use crate::transceiver::{preprocess, Detector, PowerBudget, SubcarrierPlan};
use crate::{Error, Result};

/// Source and noise generators of one trial.
#[derive(Debug, Clone)]
pub struct TrialStreams {
    pub source: SimRng,
    pub noise: SimRng,
}

impl TrialStreams {
    pub fn new(seed: u64, trial: u64) -> Self {
        Self {
            source: rng::stream(seed, trial, Purpose::Source),
            noise: rng::stream(seed, trial, Purpose::Noise),
        }
    }
}

/// Channel of trial `trial` at noise power `noise_power`, SISO or MIMO per config.
pub fn draw_realization(
    config: &SimConfig,
    noise_power: f64,
    trial: u64,
) -> Result<NetworkRealization> {
    let params = config.channel_params(noise_power)?;
    match config.mimo {
        Some(mimo) => draw_trial_mimo_channel(&params, mimo, config.seed, trial),
        None => channel::draw_trial_channel(&params, config.seed, trial),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierRecord {
    pub active: usize,
    pub scaling: f64,
    /// Received sample.
    pub y: Complex64,
    /// Noiseless target: the plane count, or the true sum for the analog baseline.
    pub target: f64,
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub sources: Vec<f64>,
    /// Lattice integers (empty for the analog baseline).
    pub lattice: Vec<i64>,
    pub codewords: Vec<Codeword>,
    pub s_true: f64,
    pub s_quant: f64,
    pub s_hat: f64,
    pub subcarriers: Vec<SubcarrierRecord>,
}

impl TrialRecord {
    pub fn squared_error(&self) -> f64 {
        let e = self.s_hat - self.s_true;
        e * e
    }

    pub fn quantization_error(&self) -> f64 {
        let e = self.s_quant - self.s_true;
        e * e
    }

    pub fn transmission_error(&self) -> f64 {
        let e = self.s_hat - self.s_quant;
        e * e
    }
}

fn draw_sources<R: Rng + ?Sized>(source: &Source, devices: usize, rng: &mut R) -> Vec<f64> {
    (0..devices)
        .map(|_| match *source {
            Source::Uniform { s_max } => rng.random_range(-s_max..=s_max),
            Source::Gaussian { std, .. } => std * rng.sample::<f64, _>(StandardNormal),
        })
        .collect()
}

fn check_dims(config: &SimConfig, realization: &NetworkRealization) -> Result<()> {
    if realization.devices() != config.devices {
        return Err(Error::DimensionMismatch {
            expected: config.devices,
            actual: realization.devices(),
        });
    }
    if realization.subcarriers() != config.subcarriers {
        return Err(Error::DimensionMismatch {
            expected: config.subcarriers,
            actual: realization.subcarriers(),
        });
    }
    Ok(())
}

/// Per-subcarrier plans: greedy selection on `|h_est|^2 P`, optionally
/// followed by re-spreading the budget of silent subcarriers.
fn plan_subcarriers(
    config: &SimConfig,
    realization: &NetworkRealization,
) -> Result<(Vec<SubcarrierPlan>, PowerBudget)> {
    let (k, l) = (config.devices, config.subcarriers);
    let mut budget = PowerBudget::geometric(k, config.p_max, l, config.power.varpi())?;
    let instances: Vec<SelectionInstance> = (0..l)
        .map(|sub| {
            let gains = (0..k)
                .map(|d| realization.estimate(d, sub).norm_sqr() * budget.get(d, sub))
                .collect();
            SelectionInstance::new(gains, realization.noise_power(sub))
        })
        .collect::<Result<_>>()?;
    let mut selections: Vec<Selection> = instances
        .iter()
        .map(|inst| {
            let s = greedy_select(inst);
            if config.allow_silence {
                s.or_silent(k)
            } else {
                s
            }
        })
        .collect();

    if config.reallocate {
        for d in 0..k {
            let mask: Vec<bool> = selections
                .iter()
                .map(|s| s.active.binary_search(&d).is_ok())
                .collect();
            budget.reallocate(d, &mask);
        }
        for (sub, sel) in selections.iter_mut().enumerate() {
            if sel.active.is_empty() {
                continue;
            }
            let gains = (0..k)
                .map(|d| realization.estimate(d, sub).norm_sqr() * budget.get(d, sub))
                .collect();
            let inst = SelectionInstance::new(gains, realization.noise_power(sub))?;
            sel.scaling = optimal_scaling(&sel.active, &inst)?;
        }
    }

    let plans = selections
        .into_iter()
        .enumerate()
        .map(|(sub, s)| SubcarrierPlan::new(s.active, s.scaling, realization.noise_power(sub), k))
        .collect::<Result<_>>()?;
    Ok((plans, budget))
}

/// Received sample on one subcarrier: inversion from `h_est`, propagation through `h`.
fn receive(
    plan: &SubcarrierPlan,
    realization: &NetworkRealization,
    sub: usize,
    symbols: &[f64],
    noise: &mut SimRng,
) -> Result<Complex64> {
    let weights = (0..symbols.len())
        .map(|d| {
            let active = plan.is_active(d);
            let rho = preprocess(realization.estimate(d, sub), plan.scaling(), active)?;
            Ok(realization.gain(d, sub) * rho)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(mac_superpose(
        symbols,
        &weights,
        realization.noise_power(sub),
        noise,
    ))
}

/// One coded trial: quantize, encode, plan, superpose, detect, decode.
///
/// The proposed scheme uses two's complement and the configured detector;
/// the binary baseline uses offset binary and ML detection.
pub fn run_trial(
    config: &SimConfig,
    realization: &NetworkRealization,
    streams: &mut TrialStreams,
) -> Result<TrialRecord> {
    if !config.scheme.is_coded() {
        return Err(Error::invalid("scheme", "run_trial needs a coded scheme"));
    }
    check_dims(config, realization)?;
    let quantizer = config.quantizer()?;
    let zeta = quantizer.zeta();
    let binary = config.scheme == Scheme::BinaryMl;
    let detector = if binary {
        Detector::Ml
    } else {
        config.detector
    };

    let sources = draw_sources(&config.source, config.devices, &mut streams.source);
    let lattice = sources
        .iter()
        .map(|&s| quantizer.quantize(s))
        .collect::<Result<Vec<_>>>()?;
    let codewords = lattice
        .iter()
        .map(|&v| {
            if binary {
                codec::encode_offset_binary(v, config.bits)
            } else {
                codec::encode(v, config.bits)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let (plans, _) = plan_subcarriers(config, realization)?;
    let mut subcarriers = Vec::with_capacity(config.subcarriers);
    let mut symbols = alloc::vec![0.0; config.devices];
    for (sub, plan) in plans.iter().enumerate() {
        for (t, c) in symbols.iter_mut().zip(&codewords) {
            *t = c.symbol(sub);
        }
        let y = receive(plan, realization, sub, &symbols, &mut streams.noise)?;
        let target = codewords.iter().map(|c| f64::from(c.bit(sub))).sum();
        subcarriers.push(SubcarrierRecord {
            active: plan.active_count(),
            scaling: plan.scaling(),
            y,
            target,
            estimate: detector.detect(y, plan),
        });
    }

    let estimates: Vec<f64> = subcarriers.iter().map(|s| s.estimate).collect();
    let s_hat = if binary {
        codec::decode_offset_binary(&estimates, config.devices, zeta)?
    } else {
        codec::decode(&estimates, zeta)?
    };
    Ok(TrialRecord {
        s_true: sources.iter().sum(),
        s_quant: lattice.iter().map(|&v| v as f64 / zeta).sum(),
        sources,
        lattice,
        codewords,
        s_hat,
        subcarriers,
    })
}

/// Analog baseline: each device sends `s_k / s_max` on every subcarrier with
/// channel inversion if `|h_est|^2 >= threshold`, scaled to the weakest
/// active device; the receiver averages the per-subcarrier sum estimates.
/// Silent devices contribute their prior mean, zero.
pub fn run_analog_baseline(
    config: &SimConfig,
    realization: &NetworkRealization,
    streams: &mut TrialStreams,
) -> Result<TrialRecord> {
    check_dims(config, realization)?;
    let (k, l) = (config.devices, config.subcarriers);
    let s_max = config.source.s_max();
    let sources = draw_sources(&config.source, k, &mut streams.source);
    let symbols: Vec<f64> = sources
        .iter()
        .map(|s| s.clamp(-s_max, s_max) / s_max)
        .collect();
    let budget = config.p_max / l as f64;

    let mut subcarriers = Vec::with_capacity(l);
    for sub in 0..l {
        let active: Vec<usize> = (0..k)
            .filter(|&d| realization.estimate(d, sub).norm_sqr() >= config.analog_threshold)
            .filter(|&d| realization.estimate(d, sub).norm_sqr() > 0.0)
            .collect();
        let scaling = active
            .iter()
            .map(|&d| realization.estimate(d, sub).norm_sqr() * budget)
            .fold(f64::INFINITY, f64::min);
        let scaling = if active.is_empty() { 0.0 } else { scaling };
        let plan = SubcarrierPlan::new(active, scaling, realization.noise_power(sub), k)?;
        let y = receive(&plan, realization, sub, &symbols, &mut streams.noise)?;
        let estimate = if scaling > 0.0 {
            s_max * y.re / libm::sqrt(scaling)
        } else {
            0.0
        };
        subcarriers.push(SubcarrierRecord {
            active: plan.active_count(),
            scaling,
            y,
            target: 0.0,
            estimate,
        });
    }

    let s_true: f64 = sources.iter().sum();
    for s in &mut subcarriers {
        s.target = s_true;
    }
    let s_hat = subcarriers.iter().map(|s| s.estimate).sum::<f64>() / l as f64;
    Ok(TrialRecord {
        sources,
        lattice: Vec::new(),
        codewords: Vec::new(),
        s_true,
        s_quant: s_true,
        s_hat,
        subcarriers,
    })
}

/// Dispatches on the configured scheme.
pub fn run_scheme_trial(
    config: &SimConfig,
    realization: &NetworkRealization,
    streams: &mut TrialStreams,
) -> Result<TrialRecord> {
    match config.scheme {
        Scheme::Analog => run_analog_baseline(config, realization, streams),
        Scheme::Proposed | Scheme::BinaryMl => run_trial(config, realization, streams),
    }
}
