//! Single-trial trace for `aircomp demo`.

use std::fmt::Write as _;

use aircomp_core::sim::{draw_realization, run_trial, snr_to_noise_power, SimConfig, TrialStreams};

/// Runs trial 0 of the proposed scheme and renders every intermediate value.
pub fn trace(seed: u64, devices: usize, bits: u32, snr_db: f64) -> anyhow::Result<String> {
    let config = SimConfig {
        devices,
        bits,
        subcarriers: bits as usize,
        seed,
        trials: 1,
        snr_db: vec![snr_db],
        ..SimConfig::default()
    };
    config.validate()?;
    let noise_power = snr_to_noise_power(config.p_max, snr_db, config.subcarriers);
    let realization = draw_realization(&config, noise_power, 0)?;
    let record = run_trial(&config, &realization, &mut TrialStreams::new(seed, 0))?;
    let zeta = config.quantizer()?.zeta();

    let mut s = String::new();
    writeln!(
        s,
        "seed {seed}, K={devices}, b={bits}, L={bits}, SNR {snr_db} dB"
    )?;
    writeln!(s, "zeta {zeta}, noise power {noise_power:e}")?;
    writeln!(s)?;
    writeln!(s, "device  source        lattice  codeword (MSB first)")?;
    for (k, ((src, q), c)) in record
        .sources
        .iter()
        .zip(&record.lattice)
        .zip(&record.codewords)
        .enumerate()
    {
        writeln!(s, "{k:>6}  {src:>+12.8}  {q:>7}  {c}")?;
    }
    writeln!(s)?;
    writeln!(
        s,
        "plane  active  p            y                         r      r_hat"
    )?;
    for (l, sub) in record.subcarriers.iter().enumerate() {
        writeln!(
            s,
            "{l:>5}  {:>6}  {:<11.5e}  {:>+11.5e} {:>+11.5e}j  {:>5}  {:>9.4}",
            sub.active, sub.scaling, sub.y.re, sub.y.im, sub.target, sub.estimate
        )?;
    }
    writeln!(s)?;
    writeln!(s, "true sum       {:+.8}", record.s_true)?;
    writeln!(s, "quantized sum  {:+.8}", record.s_quant)?;
    writeln!(s, "estimate       {:+.8}", record.s_hat)?;
    writeln!(s, "squared error  {:.6e}", record.squared_error())?;
    Ok(s)
}
