//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary so the report is printed even when the test
//! harness would capture it. Exits non-zero if any criterion fails.

use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use aircomp_core::channel::mimo::MimoParams;
use aircomp_core::channel::{draw_channel_with, ChannelParams, TapProfile};
use aircomp_core::codec::{self, lattice_range, Codeword, QuantizerSpec};
use aircomp_core::rng::{self, Purpose, SimRng};
use aircomp_core::selection::{brute_force_select, greedy_select, SelectionInstance};
use aircomp_core::sim::{sweep, PowerMode, Scheme, SimConfig, SweepPoint};
use aircomp_core::transceiver::{
    lmmse_detect, mse_closed_form, transmit_power_check, Detector, SubcarrierPlan,
};
use aircomp_core::Complex64;
use rand::Rng;

const SEED: u64 = 1;
const GRID: [f64; 7] = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0];

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: &str, passed: bool, detail: impl AsRef<str>) {
        self.failed += usize::from(!passed);
        println!(
            "criterion {id:<6} {}  {}",
            if passed { "PASS" } else { "FAIL" },
            detail.as_ref()
        );
    }

    fn timed(&mut self, id: &str, limit: Duration, elapsed: Duration) {
        self.line(
            id,
            elapsed < limit,
            format!("runtime {elapsed:.2?} (limit {limit:?})"),
        );
    }

    fn note(&self, id: &str, detail: impl AsRef<str>) {
        println!("note      {id:<6}       {}", detail.as_ref());
    }
}

// ---------------------------------------------------------------- 1

/// Plain two's-complement reading of `values` summed: the oracle is integer addition.
fn superposition_matches(values: &[i64], bits: u32) -> bool {
    let words: Vec<Codeword> = values
        .iter()
        .map(|&v| codec::encode(v, bits).unwrap())
        .collect();
    let counts = codec::plane_counts(&words).unwrap();
    let real: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let expected: i64 = values.iter().sum();
    codec::decode_counts(&counts).unwrap() == expected
        && codec::decode(&real, 1.0).unwrap() == expected as f64
}

fn exhaustive_mismatches(bits: u32, devices: usize) -> (usize, usize) {
    let lattice: Vec<i64> = lattice_range(bits).collect();
    let total = lattice.len().pow(devices as u32);
    let mut tuple = vec![0; devices];
    let mut bad = 0;
    for mut idx in 0..total {
        for slot in tuple.iter_mut() {
            *slot = lattice[idx % lattice.len()];
            idx /= lattice.len();
        }
        bad += usize::from(!superposition_matches(&tuple, bits));
    }
    (total, bad)
}

fn criterion_1(report: &mut Report) {
    let start = Instant::now();
    let (n33, bad33) = exhaustive_mismatches(3, 3);
    let (n35, bad35) = exhaustive_mismatches(3, 5);
    let mut rng = rng::stream(SEED, 0, Purpose::Source);
    let mut bad_random = 0;
    for _ in 0..100_000 {
        let tuple: Vec<i64> = (0..20)
            .map(|_| rng.random_range(lattice_range(8)))
            .collect();
        bad_random += usize::from(!superposition_matches(&tuple, 8));
    }
    report.line(
        "1",
        bad33 + bad35 + bad_random == 0,
        format!(
            "exact sum: b=3 K=3 {n33} tuples, b=3 K=5 {n35} tuples, b=8 K=20 100000 random tuples; \
             mismatches {bad33}/{bad35}/{bad_random}"
        ),
    );
    report.timed("1-time", Duration::from_secs(5), start.elapsed());
}

// ---------------------------------------------------------------- 2

fn criterion_2(report: &mut Report) {
    let start = Instant::now();
    let mut rng = rng::stream(SEED, 1, Purpose::Channel);
    let mut csi: SimRng = rng::stream(SEED, 1, Purpose::Csi);
    let (mut worst, mut bad, mut infeasible) = (0.0f64, 0, 0);
    for _ in 0..10_000 {
        let devices: usize = rng.random_range(2..=12);
        let params = ChannelParams::new(devices, 8, TapProfile::uniform(4).unwrap(), 1.0);
        let r = draw_channel_with(&params, &mut rng, &mut csi).unwrap();
        let sub = rng.random_range(0..8);
        let budget = 1.0 / 8.0;
        let noise = budget / 10f64.powf(rng.random_range(-10.0..20.0) / 10.0);
        let gains: Vec<f64> = (0..devices)
            .map(|k| r.gain(k, sub).norm_sqr() * budget)
            .collect();
        let inst = SelectionInstance::new(gains.clone(), noise).unwrap();
        let g = greedy_select(&inst);
        let b = brute_force_select(&inst).unwrap();
        let rel = (g.mse - b.mse).abs() / b.mse;
        worst = worst.max(rel);
        bad += usize::from(rel > 1e-12);
        let unit = vec![Complex64::new(1.0, 0.0); devices];
        for s in [&g, &b] {
            let plan = SubcarrierPlan::new(s.active.clone(), s.scaling, noise, devices).unwrap();
            infeasible += usize::from(!transmit_power_check(&plan, &unit, &gains));
        }
    }
    report.line(
        "2",
        bad == 0 && infeasible == 0,
        format!("greedy vs exhaustive subsets: 10000 instances, {bad} mismatches, {infeasible} infeasible sets, worst relative gap {worst:.1e}"),
    );
    report.timed("2-time", Duration::from_secs(30), start.elapsed());
}

// ---------------------------------------------------------------- 3

/// `Var r - Cov(r, Re y)^2 / Var Re y` for `r` a sum of `K` fair bits.
fn linear_mse_from_moments(p: f64, n: usize, k: usize, sigma2: f64) -> f64 {
    let (n, k) = (n as f64, k as f64);
    let cov = p.sqrt() * n / 2.0;
    k / 4.0 - cov * cov / (p * n + sigma2 / 2.0)
}

fn criterion_3(report: &mut Report) {
    let start = Instant::now();
    let trials = 100_000;
    let mut pick = rng::stream(SEED, 2, Purpose::Channel);
    let (mut worst_z, mut beaten, mut formula_gap) = (0.0f64, 0, 0.0f64);
    for t in 0..20u64 {
        let devices: usize = pick.random_range(2..=20);
        let active = pick.random_range(devices.div_ceil(2)..=devices);
        let sigma2 = 10f64.powf(pick.random_range(-1.0..1.0));
        let p = sigma2 * 10f64.powf(pick.random_range(0.0..1.0));
        let plan = SubcarrierPlan::new((0..active).collect(), p, sigma2, devices).unwrap();
        let closed = mse_closed_form(p, active, devices, sigma2);
        formula_gap = formula_gap
            .max((closed / linear_mse_from_moments(p, active, devices, sigma2) - 1.0).abs());

        let grid: Vec<(f64, f64)> = [0.9, 1.0, 1.1]
            .iter()
            .flat_map(|&a| [-0.5, 0.0, 0.5].map(|d| (plan.lambda() * a, plan.mu() + d)))
            .filter(|&(a, d)| (a, d) != (plan.lambda(), plan.mu()))
            .collect();
        let mut bits = rng::stream(SEED, 100 + t, Purpose::Source);
        let mut noise = rng::stream(SEED, 100 + t, Purpose::Noise);
        let (mut s1, mut s2) = (0.0, 0.0);
        let mut perturbed = vec![0.0; grid.len()];
        for _ in 0..trials {
            let mut r = 0u32;
            let mut signal = 0.0;
            for k in 0..devices {
                let bit: bool = bits.random();
                r += u32::from(bit);
                if k < active {
                    signal += if bit { 1.0 } else { -1.0 };
                }
            }
            let y =
                Complex64::new(p.sqrt() * signal, 0.0) + rng::complex_gaussian(&mut noise, sigma2);
            let e = lmmse_detect(y, &plan) - f64::from(r);
            s1 += e * e;
            s2 += e.powi(4);
            for (acc, &(a, d)) in perturbed.iter_mut().zip(&grid) {
                *acc += (a * y.re + d - f64::from(r)).powi(2);
            }
        }
        let n = trials as f64;
        let mean = s1 / n;
        let se = ((s2 / n - mean * mean) / (n - 1.0)).sqrt();
        let z = (mean - closed).abs() / se;
        worst_z = worst_z.max(z);
        let lost = perturbed.iter().filter(|&&x| x / n < mean).count();
        beaten += lost;
        if z > 3.0 || lost > 0 {
            report.note(
                "3",
                format!("tuple {t}: p={p:.3} |K_l|={active} sigma2={sigma2:.3} K={devices} empirical {mean:.5} closed {closed:.5} z={z:.2} beaten by {lost}"),
            );
        }
    }
    report.line(
        "3",
        worst_z <= 3.0 && beaten == 0 && formula_gap < 1e-12,
        format!(
            "LMMSE: 20 tuples x {trials} trials, worst |empirical - closed form| = {worst_z:.2} SE, \
             {beaten} perturbed detectors better, closed form vs moment derivation {formula_gap:.1e}"
        ),
    );
    report.timed("3-time", Duration::from_secs(60), start.elapsed());
}

// ---------------------------------------------------------------- 4

fn criterion_4(report: &mut Report) {
    let mut ones = [0u32; 8];
    for v in lattice_range(8) {
        let c = codec::encode(v, 8).unwrap();
        for (l, o) in ones.iter_mut().enumerate() {
            *o += u32::from(c.bit(l));
        }
    }
    report.line(
        "4-exh",
        ones == [128; 8],
        format!("ones per position over all 256 codewords: {ones:?}"),
    );

    let n = 1_000_000usize;
    let q = QuantizerSpec::new(8, 1.0).unwrap();
    let mut rng = rng::stream(SEED, 3, Purpose::Source);
    let mut counts = [0u64; 8];
    for _ in 0..n {
        let c = codec::encode(q.quantize(rng.random_range(-1.0..=1.0)).unwrap(), 8).unwrap();
        for (l, o) in counts.iter_mut().enumerate() {
            *o += u64::from(c.bit(l));
        }
    }
    let bound = 3.0 * (n as f64 / 4.0).sqrt();
    let worst = counts
        .iter()
        .map(|&c| (c as f64 - n as f64 / 2.0).abs())
        .fold(0.0, f64::max);
    report.line(
        "4-mc",
        worst <= bound,
        format!("uniform source, {n} bits per position: worst |ones - n/2| = {worst} vs 3 sigma {bound:.0}"),
    );
}

// ---------------------------------------------------------------- 5

/// Quantization-only NMSE of a sum of `devices` uniform sources, integrated
/// exactly over each lattice cell.
fn quantization_floor(devices: usize, zeta: f64, s_max: f64) -> f64 {
    let step = 1.0 / zeta;
    let (mut m1, mut m2) = (0.0, 0.0);
    for n in (-s_max * zeta).floor() as i64..=(s_max * zeta).floor() as i64 {
        let lo = (n as f64 * step).max(-s_max);
        let hi = ((n + 1) as f64 * step).min(s_max);
        if hi > lo {
            let (a, b) = (lo - n as f64 * step, hi - n as f64 * step);
            m1 += (b * b - a * a) / 2.0;
            m2 += (b.powi(3) - a.powi(3)) / 3.0;
        }
    }
    let (e1, e2) = (m1 / (2.0 * s_max), m2 / (2.0 * s_max));
    let k = devices as f64;
    (k * e2 + k * (k - 1.0) * e1 * e1) / (k * s_max * s_max / 3.0)
}

fn baseline_sweep(trials: u64) -> SimConfig {
    SimConfig {
        devices: 20,
        bits: 8,
        subcarriers: 8,
        trials,
        seed: SEED,
        snr_db: GRID.to_vec(),
        ..SimConfig::default()
    }
}

fn curve(points: &[SweepPoint]) -> String {
    points
        .iter()
        .map(|p| format!("{:.3e}", p.nmse))
        .collect::<Vec<_>>()
        .join(" ")
}

fn combined_se(a: &SweepPoint, b: &SweepPoint) -> f64 {
    (a.stderr * a.stderr + b.stderr * b.stderr).sqrt()
}

fn criterion_5(report: &mut Report) {
    let start = Instant::now();
    let base = baseline_sweep(100_000);
    let uniform = sweep(&base).unwrap().points;
    let geometric = sweep(&SimConfig {
        power: PowerMode::Geometric { varpi: 2.0 },
        ..base.clone()
    })
    .unwrap()
    .points;
    let ml = sweep(&SimConfig {
        detector: Detector::Ml,
        ..base.clone()
    })
    .unwrap()
    .points;
    let analog = sweep(&SimConfig {
        scheme: Scheme::Analog,
        ..base.clone()
    })
    .unwrap()
    .points;
    report.note("5", format!("SNR grid (dB) {GRID:?}"));
    report.note("5", format!("Proposed-U {}", curve(&uniform)));
    report.note("5", format!("Proposed-G {}", curve(&geometric)));
    report.note("5", format!("LMMSE->ML  {}", curve(&ml)));
    report.note("5", format!("Analog     {}", curve(&analog)));

    // (a)
    let mut violations = Vec::new();
    for (name, pts) in [
        ("U", &uniform),
        ("G", &geometric),
        ("ML", &ml),
        ("analog", &analog),
    ] {
        for w in pts.windows(2) {
            if w[1].nmse > w[0].nmse + 3.0 * combined_se(&w[0], &w[1]) {
                violations.push(format!("{name} {}->{} dB", w[0].snr_db, w[1].snr_db));
            }
        }
    }
    report.line(
        "5a",
        violations.is_empty(),
        if violations.is_empty() {
            "NMSE non-increasing in SNR for every curve (3 SE)".to_owned()
        } else {
            format!("increases at {}", violations.join(", "))
        },
    );

    // (b)
    let floor = quantization_floor(20, base.quantizer().unwrap().zeta(), 1.0);
    let top = uniform.last().unwrap();
    let rel = top.nmse / floor - 1.0;
    report.line(
        "5b",
        rel.abs() <= 0.05,
        format!(
            "NMSE at {} dB = {:.4e} vs quantization floor {floor:.4e}: relative {:+.1}% (limit 5%); \
             measured quantization part {:.4e}",
            top.snr_db,
            top.nmse,
            rel * 100.0,
            top.quantization_nmse
        ),
    );

    // (c)
    let low: Vec<usize> = (0..GRID.len()).filter(|&i| GRID[i] <= 0.0).collect();
    let c_ok = low.iter().all(|&i| geometric[i].nmse <= uniform[i].nmse);
    report.line(
        "5c",
        c_ok,
        format!(
            "Proposed-G / Proposed-U at SNR <= 0 dB: {}",
            low.iter()
                .map(|&i| format!("{:.3}", geometric[i].nmse / uniform[i].nmse))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );

    // (d)
    let lower: Vec<usize> = (0..GRID.len()).filter(|&i| GRID[i] <= -5.0).collect();
    let d_ok = lower.iter().all(|&i| uniform[i].nmse <= ml[i].nmse);
    report.line(
        "5d",
        d_ok,
        format!(
            "LMMSE / ML at SNR <= -5 dB: {}",
            lower
                .iter()
                .map(|&i| format!("{:.3}", uniform[i].nmse / ml[i].nmse))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );

    // (e)
    let (lo, hi) = (0, GRID.len() - 1);
    let margin_hi = 3.0 * combined_se(&analog[hi], &uniform[hi]);
    let margin_lo = 3.0 * combined_se(&analog[lo], &uniform[lo]);
    let beats_high = analog[hi].nmse + margin_hi < uniform[hi].nmse;
    let loses_low = analog[lo].nmse > uniform[lo].nmse + margin_lo;
    report.line(
        "5e-high",
        beats_high,
        format!(
            "analog {:.4e} vs proposed {:.4e} at {} dB (analog must be lower by 3 SE = {margin_hi:.1e})",
            analog[hi].nmse, uniform[hi].nmse, GRID[hi]
        ),
    );
    report.line(
        "5e-low",
        loses_low,
        format!(
            "analog {:.4e} vs proposed {:.4e} at {} dB (analog must be higher by 3 SE = {margin_lo:.1e})",
            analog[lo].nmse, uniform[lo].nmse, GRID[lo]
        ),
    );
    report.timed("5-time", Duration::from_secs(600), start.elapsed());

    // Context for 5(b) and 5(e): the same pipeline beyond the grid, and the
    // analog baseline with a lower truncation threshold.
    let beyond = sweep(&SimConfig {
        snr_db: vec![40.0, 60.0, 80.0],
        trials: 20_000,
        ..base.clone()
    })
    .unwrap()
    .points;
    report.note(
        "5b",
        format!(
            "Proposed-U at 40/60/80 dB (2e4 trials): {} ; floor {floor:.4e}",
            beyond
                .iter()
                .map(|p| format!("{:+.1}%", (p.nmse / floor - 1.0) * 100.0))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    );
    let low_gamma = sweep(&SimConfig {
        scheme: Scheme::Analog,
        analog_threshold: 0.03,
        trials: 20_000,
        ..base
    })
    .unwrap()
    .points;
    report.note(
        "5e",
        format!(
            "Analog with threshold 0.03 (2e4 trials): {}",
            curve(&low_gamma)
        ),
    );
}

// ---------------------------------------------------------------- 6

fn criterion_6(report: &mut Report) {
    let config = SimConfig {
        snr_db: vec![-5.0],
        ..baseline_sweep(100_000)
    };
    let perfect = &sweep(&config).unwrap().points[0];
    let noisy = &sweep(&SimConfig {
        csi_error_radius: 0.2,
        ..config
    })
    .unwrap()
    .points[0];
    let ratio = noisy.nmse / perfect.nmse;
    report.line(
        "6",
        ratio <= 1.10,
        format!(
            "NMSE at -5 dB with |Delta| < 0.2: {:.4e} vs perfect CSI {:.4e}, ratio {ratio:.4} (limit 1.10)",
            noisy.nmse, perfect.nmse
        ),
    );
}

// ---------------------------------------------------------------- 7

fn criterion_7(report: &mut Report) {
    let siso_cfg = baseline_sweep(20_000);
    let siso_small = sweep(&siso_cfg).unwrap();
    let one = sweep(&SimConfig {
        mimo: Some(MimoParams::new(1, 1).unwrap()),
        ..siso_cfg
    })
    .unwrap();
    report.line(
        "7-1x1",
        one.points == siso_small.points,
        "(1,1) MIMO sweep vs SISO sweep, 7 points x 2e4 trials: every statistic bit-identical",
    );

    let siso = sweep(&baseline_sweep(100_000)).unwrap().points;
    let mimo = sweep(&SimConfig {
        mimo: Some(MimoParams::new(2, 2).unwrap()),
        ..baseline_sweep(100_000)
    })
    .unwrap()
    .points;
    let ok = mimo.iter().zip(&siso).all(|(m, s)| m.nmse <= s.nmse);
    report.line(
        "7-2x2",
        ok,
        format!(
            "(2,2)/SISO NMSE ratio per SNR point: {}",
            mimo.iter()
                .zip(&siso)
                .map(|(m, s)| format!("{:.3}", m.nmse / s.nmse))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
}

// ---------------------------------------------------------------- 8

fn criterion_8(report: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("experiments.cfg");
    fs::write(
        &cfg,
        "seed = 5\ntrials = 2000\n\n[Proposed-U]\n\n[Proposed-G]\npower = geometric\nvarpi = 2\n\n[Analog]\nscheme = analog\n",
    )
    .unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_aircomp"))
            .args([
                "sweep",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .env_remove("AIRCOMP_SEED")
            .env_remove("AIRCOMP_TRIALS")
            .env_remove("AIRCOMP_OUT")
            .env_remove("AIRCOMP_QUICK")
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        (
            fs::read(&out).unwrap(),
            fs::read(out.with_extension("meta.json")).unwrap(),
        )
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    report.line(
        "8",
        a == b && !a.0.is_empty(),
        format!(
            "two CLI sweeps: CSV {} bytes identical={}, metadata identical={}",
            a.0.len(),
            a.0 == b.0,
            a.1 == b.1
        ),
    );
}

fn main() -> ExitCode {
    let mut report = Report { failed: 0 };
    criterion_1(&mut report);
    criterion_2(&mut report);
    criterion_3(&mut report);
    criterion_4(&mut report);
    criterion_5(&mut report);
    criterion_6(&mut report);
    criterion_7(&mut report);
    criterion_8(&mut report);
    if report.failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criterion line(s) failed", report.failed);
        ExitCode::FAILURE
    }
}
