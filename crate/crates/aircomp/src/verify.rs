//! Built-in oracle checks run by `aircomp verify`.
//!
//! Each check pits the library against an independent reference: integer
//! sums for the codec, exhaustive subset search for the greedy selection,
//! Monte Carlo for the LMMSE detector and exhaustive counting for the bit
//! statistics.

use std::fmt;

use aircomp_core::channel::{draw_channel_with, mac_superpose, ChannelParams, TapProfile};
use aircomp_core::codec::{self, lattice_range, Codeword, QuantizerSpec};
use aircomp_core::rng::{self, Purpose, SimRng};
use aircomp_core::selection::{
    brute_force_select, greedy_select, optimal_scaling, SelectionInstance,
};
use aircomp_core::transceiver::{
    lmmse_detect, mse_closed_form, transmit_power_check, SubcarrierPlan,
};
use aircomp_core::Complex64;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Sizes {
    pub random_sums: usize,
    pub greedy_instances: usize,
    pub lmmse_tuples: usize,
    pub lmmse_trials: usize,
    pub bit_samples: usize,
}

impl Sizes {
    pub const FULL: Sizes = Sizes {
        random_sums: 100_000,
        greedy_instances: 10_000,
        lmmse_tuples: 20,
        lmmse_trials: 100_000,
        bit_samples: 1_000_000,
    };

    pub const QUICK: Sizes = Sizes {
        random_sums: 10_000,
        greedy_instances: 1_000,
        lmmse_tuples: 20,
        lmmse_trials: 20_000,
        bit_samples: 100_000,
    };
}

/// Runs every oracle check.
pub fn run_all(sizes: Sizes, seed: u64) -> Vec<CheckOutcome> {
    vec![
        exhaustive_sums(3, 3),
        exhaustive_sums(3, 5),
        random_sums(8, 20, sizes.random_sums, seed),
        greedy_matches_brute_force(sizes.greedy_instances, seed),
        lmmse_matches_closed_form(sizes.lmmse_tuples, sizes.lmmse_trials, seed),
        bernoulli_exhaustive(8),
        bernoulli_monte_carlo(8, sizes.bit_samples, seed),
    ]
}

fn outcome(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> CheckOutcome {
    CheckOutcome {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

/// Decoded superposition of `values` on `bits` planes, both in integer and in
/// floating point at unit scale.
fn superposed_sum(values: &[i64], bits: u32) -> (i64, f64) {
    let words: Vec<Codeword> = values
        .iter()
        .map(|&v| codec::encode(v, bits).unwrap())
        .collect();
    let counts = codec::plane_counts(&words).unwrap();
    let real: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    (
        codec::decode_counts(&counts).unwrap(),
        codec::decode(&real, 1.0).unwrap(),
    )
}

/// Every tuple of `devices` lattice values on `bits` planes.
pub fn exhaustive_sums(bits: u32, devices: usize) -> CheckOutcome {
    let lattice: Vec<i64> = lattice_range(bits).collect();
    let n = lattice.len();
    let total = n.pow(devices as u32);
    let mut failures = 0usize;
    let mut tuple = vec![0i64; devices];
    for mut idx in 0..total {
        for slot in tuple.iter_mut() {
            *slot = lattice[idx % n];
            idx /= n;
        }
        let expected: i64 = tuple.iter().sum();
        let (int, real) = superposed_sum(&tuple, bits);
        if int != expected || real != expected as f64 {
            failures += 1;
        }
    }
    outcome(
        format!("exact sum, exhaustive b={bits} K={devices}"),
        failures == 0,
        format!("{total} tuples, {failures} mismatches"),
    )
}

pub fn random_sums(bits: u32, devices: usize, cases: usize, seed: u64) -> CheckOutcome {
    let mut rng = rng::stream(seed, 0, Purpose::Source);
    let range = lattice_range(bits);
    let mut failures = 0usize;
    for _ in 0..cases {
        let tuple: Vec<i64> = (0..devices)
            .map(|_| rng.random_range(range.clone()))
            .collect();
        let expected: i64 = tuple.iter().sum();
        let (int, real) = superposed_sum(&tuple, bits);
        if int != expected || real != expected as f64 {
            failures += 1;
        }
    }
    outcome(
        format!("exact sum, random b={bits} K={devices}"),
        failures == 0,
        format!("{cases} tuples, {failures} mismatches"),
    )
}

/// Random selection instance with gain-budget products from the multipath model.
pub fn random_instance(rng: &mut SimRng) -> SelectionInstance {
    let devices = rng.random_range(2..=12);
    let params = ChannelParams::new(devices, 8, TapProfile::uniform(4).unwrap(), 1.0);
    let realization =
        draw_channel_with(&params, rng, &mut rng::stream(0, 0, Purpose::Csi)).unwrap();
    let sub = rng.random_range(0..8);
    let budget = 1.0 / 8.0;
    let snr_db: f64 = rng.random_range(-10.0..20.0);
    let noise_power = budget / 10f64.powf(snr_db / 10.0);
    let gains = (0..devices)
        .map(|k| realization.gain(k, sub).norm_sqr() * budget)
        .collect();
    SelectionInstance::new(gains, noise_power).unwrap()
}

pub fn greedy_matches_brute_force(instances: usize, seed: u64) -> CheckOutcome {
    let mut rng = rng::stream(seed, 1, Purpose::Channel);
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    for _ in 0..instances {
        let inst = random_instance(&mut rng);
        let greedy = greedy_select(&inst);
        let best = brute_force_select(&inst).unwrap();
        let rel = (greedy.mse - best.mse).abs() / best.mse.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        let feasible = [&greedy, &best].iter().all(|s| {
            let plan = SubcarrierPlan::new(
                s.active.clone(),
                s.scaling,
                inst.noise_power,
                inst.devices(),
            )
            .unwrap();
            // Unit channels with the gain-budget products as budgets: no rounding.
            let h = vec![Complex64::new(1.0, 0.0); inst.devices()];
            transmit_power_check(&plan, &h, &inst.effective_gains)
                && optimal_scaling(&s.active, &inst).unwrap() == s.scaling
        });
        if rel > 1e-12 || !feasible {
            failures += 1;
        }
    }
    outcome(
        "greedy selection vs exhaustive subsets",
        failures == 0,
        format!("{instances} instances, {failures} mismatches, worst relative gap {worst:.1e}"),
    )
}

/// Monte Carlo MSE of the affine detector `lambda Re{y} + mu`.
struct DetectorErrors {
    mean: f64,
    stderr: f64,
}

/// One LMMSE tuple: returns (closed form, optimal detector errors, perturbed errors).
fn lmmse_tuple(
    scaling: f64,
    active: usize,
    devices: usize,
    noise_power: f64,
    trials: usize,
    seed: u64,
    tuple: u64,
) -> (f64, DetectorErrors, Vec<f64>) {
    let plan = SubcarrierPlan::new((0..active).collect(), scaling, noise_power, devices).unwrap();
    let (lambda, mu) = (plan.lambda(), plan.mu());
    let perturbed: Vec<(f64, f64)> = [0.9, 1.0, 1.1]
        .iter()
        .flat_map(|&a| [-0.5, 0.0, 0.5].iter().map(move |&b| (lambda * a, mu + b)))
        .filter(|&(l, m)| (l, m) != (lambda, mu))
        .collect();
    let mut bits_rng = rng::stream(seed, tuple, Purpose::Source);
    let mut noise_rng = rng::stream(seed, tuple, Purpose::Noise);
    let amp = Complex64::new(scaling.sqrt(), 0.0);
    let weights: Vec<Complex64> = (0..devices)
        .map(|k| {
            if k < active {
                amp
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let (mut sum, mut sum2) = (0.0, 0.0);
    let mut others = vec![0.0; perturbed.len()];
    let mut symbols = vec![0.0; devices];
    for _ in 0..trials {
        let mut count = 0.0;
        for t in symbols.iter_mut() {
            let bit: bool = bits_rng.random();
            count += f64::from(u8::from(bit));
            *t = if bit { 1.0 } else { -1.0 };
        }
        let y = mac_superpose(&symbols, &weights, noise_power, &mut noise_rng);
        let e = lmmse_detect(y, &plan) - count;
        sum += e * e;
        sum2 += e * e * e * e;
        for (acc, &(l, m)) in others.iter_mut().zip(&perturbed) {
            let e = l * y.re + m - count;
            *acc += e * e;
        }
    }
    let n = trials as f64;
    let mean = sum / n;
    let var = (sum2 / n - mean * mean) * n / (n - 1.0);
    (
        mse_closed_form(scaling, active, devices, noise_power),
        DetectorErrors {
            mean,
            stderr: (var / n).sqrt(),
        },
        others.into_iter().map(|s| s / n).collect(),
    )
}

pub fn lmmse_matches_closed_form(tuples: usize, trials: usize, seed: u64) -> CheckOutcome {
    let mut rng = rng::stream(seed, 2, Purpose::Channel);
    let mut failures = Vec::new();
    let mut worst_z = 0.0f64;
    for t in 0..tuples {
        let devices: usize = rng.random_range(2..=20);
        let active = rng.random_range(devices.div_ceil(2)..=devices);
        let noise_power = 10f64.powf(rng.random_range(-1.0..1.0));
        let scaling = noise_power * 10f64.powf(rng.random_range(0.0..1.0));
        let (closed, emp, others) = lmmse_tuple(
            scaling,
            active,
            devices,
            noise_power,
            trials,
            seed,
            t as u64,
        );
        let z = (emp.mean - closed).abs() / emp.stderr;
        worst_z = worst_z.max(z);
        let beaten = others.iter().any(|&o| o < emp.mean);
        if z > 3.0 || beaten {
            failures.push(format!(
                "tuple {t} (p={scaling:.3}, |K_l|={active}, sigma2={noise_power:.3}, K={devices}): \
                 empirical {:.5} vs closed form {closed:.5}, z={z:.2}, beaten={beaten}",
                emp.mean
            ));
        }
    }
    let detail = if failures.is_empty() {
        format!("{tuples} tuples x {trials} trials, worst deviation {worst_z:.2} standard errors")
    } else {
        failures.join("; ")
    };
    outcome(
        "LMMSE Monte Carlo vs closed-form MSE",
        failures.is_empty(),
        detail,
    )
}

pub fn bernoulli_exhaustive(bits: u32) -> CheckOutcome {
    let mut ones = vec![0u64; bits as usize];
    for v in lattice_range(bits) {
        let c = codec::encode(v, bits).unwrap();
        for (l, o) in ones.iter_mut().enumerate() {
            *o += u64::from(c.bit(l));
        }
    }
    let half = 1u64 << (bits - 1);
    outcome(
        format!("bit balance, exhaustive b={bits}"),
        ones.iter().all(|&o| o == half),
        format!("ones per plane {ones:?}, expected {half}"),
    )
}

pub fn bernoulli_monte_carlo(bits: u32, samples: usize, seed: u64) -> CheckOutcome {
    let quantizer = QuantizerSpec::new(bits, 1.0).unwrap();
    let mut rng = rng::stream(seed, 3, Purpose::Source);
    let mut ones = vec![0u64; bits as usize];
    for _ in 0..samples {
        let s = rng.random_range(-1.0..=1.0);
        let c = codec::encode(quantizer.quantize(s).unwrap(), bits).unwrap();
        for (l, o) in ones.iter_mut().enumerate() {
            *o += u64::from(c.bit(l));
        }
    }
    let n = samples as f64;
    let bound = 3.0 * (n * 0.25).sqrt();
    let worst = ones
        .iter()
        .map(|&o| (o as f64 - n / 2.0).abs())
        .fold(0.0, f64::max);
    outcome(
        format!("bit balance, uniform source b={bits}"),
        worst <= bound,
        format!("{samples} samples per plane, worst |ones - n/2| = {worst} (3 sigma = {bound:.1})"),
    )
}
