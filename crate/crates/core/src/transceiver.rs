//! Power allocation, truncated channel inversion and plane detection.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::{Error, Result};

/// Per-plane budgets `P_l = P_1 varpi^(l-1)` summing to `p_max`.
///
/// `varpi = 1` splits the budget evenly; larger ratios shift power towards
/// the high-weight planes.
pub fn allocate_power(p_max: f64, planes: usize, varpi: f64) -> Result<Vec<f64>> {
    if !(p_max.is_finite() && p_max > 0.0) {
        return Err(Error::invalid("p_max", "must be finite and positive"));
    }
    if planes == 0 {
        return Err(Error::invalid("planes", "need at least one plane"));
    }
    if !(varpi.is_finite() && varpi >= 1.0) {
        return Err(Error::invalid("varpi", "must be at least 1"));
    }
    if varpi == 1.0 {
        return Ok(alloc::vec![p_max / planes as f64; planes]);
    }
    let first = p_max * (varpi - 1.0) / (libm::pow(varpi, planes as f64) - 1.0);
    Ok((0..planes)
        .map(|l| first * libm::pow(varpi, l as f64))
        .collect())
}

/// Device-by-subcarrier transmit budgets.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerBudget {
    subcarriers: usize,
    varpi: f64,
    p_max: Vec<f64>,
    per_subcarrier: Vec<f64>,
}

impl PowerBudget {
    /// Same geometric split for every device.
    pub fn geometric(devices: usize, p_max: f64, subcarriers: usize, varpi: f64) -> Result<Self> {
        let row = allocate_power(p_max, subcarriers, varpi)?;
        let mut per_subcarrier = Vec::with_capacity(devices * subcarriers);
        for _ in 0..devices {
            per_subcarrier.extend_from_slice(&row);
        }
        Ok(Self {
            subcarriers,
            varpi,
            p_max: alloc::vec![p_max; devices],
            per_subcarrier,
        })
    }

    pub fn devices(&self) -> usize {
        self.p_max.len()
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn varpi(&self) -> f64 {
        self.varpi
    }

    pub fn p_max(&self, device: usize) -> f64 {
        self.p_max[device]
    }

    pub fn get(&self, device: usize, subcarrier: usize) -> f64 {
        self.per_subcarrier[device * self.subcarriers + subcarrier]
    }

    pub fn device_row(&self, device: usize) -> &[f64] {
        let start = device * self.subcarriers;
        &self.per_subcarrier[start..start + self.subcarriers]
    }

    /// Moves budget from subcarriers where `device` is silent onto the ones
    /// where it transmits, proportionally to the current split.
    pub fn reallocate(&mut self, device: usize, active: &[bool]) {
        assert_eq!(active.len(), self.subcarriers);
        let start = device * self.subcarriers;
        let row = &mut self.per_subcarrier[start..start + self.subcarriers];
        let total: f64 = row.iter().sum();
        let kept: f64 = row
            .iter()
            .zip(active)
            .filter(|(_, &a)| a)
            .map(|(p, _)| p)
            .sum();
        if kept <= 0.0 {
            return;
        }
        let gain = total / kept;
        for (p, &a) in row.iter_mut().zip(active) {
            *p = if a { *p * gain } else { 0.0 };
        }
    }
}

/// Active set, scaling factor and noise level of one subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierPlan {
    active: Vec<usize>,
    scaling: f64,
    noise_power: f64,
    devices: usize,
}

impl SubcarrierPlan {
    pub fn new(
        mut active: Vec<usize>,
        scaling: f64,
        noise_power: f64,
        devices: usize,
    ) -> Result<Self> {
        active.sort_unstable();
        active.dedup();
        if active.last().is_some_and(|&k| k >= devices) {
            return Err(Error::invalid("active_set", "device index out of range"));
        }
        if !(scaling.is_finite() && scaling >= 0.0) {
            return Err(Error::invalid("scaling", "must be finite and non-negative"));
        }
        if !(noise_power.is_finite() && noise_power > 0.0) {
            return Err(Error::invalid("noise_power", "must be finite and positive"));
        }
        Ok(Self {
            active,
            scaling,
            noise_power,
            devices,
        })
    }

    /// Silent subcarrier: nobody transmits and the detector returns `K/2`.
    pub fn silent(noise_power: f64, devices: usize) -> Result<Self> {
        Self::new(Vec::new(), 0.0, noise_power, devices)
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn is_active(&self, device: usize) -> bool {
        self.active.binary_search(&device).is_ok()
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    pub fn scaling(&self) -> f64 {
        self.scaling
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn devices(&self) -> usize {
        self.devices
    }

    /// LMMSE slope `sqrt(p) |K_l| / (2 p |K_l| + sigma^2)`.
    pub fn lambda(&self) -> f64 {
        lmmse_slope(self.scaling, self.active.len(), self.noise_power)
    }

    /// LMMSE offset `K / 2`.
    pub fn mu(&self) -> f64 {
        self.devices as f64 / 2.0
    }

    /// Closed-form MSE of the LMMSE estimate on this subcarrier.
    pub fn mse(&self) -> f64 {
        mse_closed_form(
            self.scaling,
            self.active.len(),
            self.devices,
            self.noise_power,
        )
    }
}

/// Truncated channel inversion factor `rho = sqrt(p) conj(h) / |h|^2`.
pub fn preprocess(h_est: Complex64, scaling: f64, active: bool) -> Result<Complex64> {
    if !active {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let power = h_est.norm_sqr();
    if !(power > 0.0) {
        return Err(Error::ZeroChannelGain);
    }
    Ok(h_est.conj() * (libm::sqrt(scaling) / power))
}

/// Whether `p_l / |h_k|^2 <= P_k` holds for every active device.
///
/// `h_est` and `budgets` are indexed by device.
pub fn transmit_power_check(plan: &SubcarrierPlan, h_est: &[Complex64], budgets: &[f64]) -> bool {
    if plan.scaling() == 0.0 {
        return true;
    }
    plan.active()
        .iter()
        .all(|&k| plan.scaling() <= budgets[k] * h_est[k].norm_sqr())
}

fn lmmse_slope(scaling: f64, active: usize, noise_power: f64) -> f64 {
    let n = active as f64;
    libm::sqrt(scaling) * n / (2.0 * scaling * n + noise_power)
}

/// `r_hat = lambda Re{y} + K/2`.
pub fn lmmse_detect(y: Complex64, plan: &SubcarrierPlan) -> f64 {
    plan.lambda() * y.re + plan.mu()
}

/// Nearest point of the lattice `sqrt(p) (2 r - |K_l|)` to `Re{y}`, plus the
/// prior mean `(K - |K_l|) / 2` of the silent devices. Exact midpoints go to
/// the lower count.
pub fn ml_detect(y: Complex64, plan: &SubcarrierPlan) -> f64 {
    let n = plan.active_count();
    let silent = (plan.devices() - n) as f64 / 2.0;
    let amp = libm::sqrt(plan.scaling());
    if n == 0 || amp == 0.0 {
        return silent;
    }
    let point = |r: usize| amp * (2.0 * r as f64 - n as f64);
    let dist = |r: usize| (y.re - point(r)).abs();
    let guess = ((y.re / amp + n as f64) / 2.0).clamp(0.0, n as f64);
    let lo = libm::floor(guess) as usize;
    // Scan the neighbourhood so float rounding in `guess` cannot pick the wrong point.
    let mut best = lo.saturating_sub(1);
    for r in best + 1..=(lo + 2).min(n) {
        if dist(r) < dist(best) {
            best = r;
        }
    }
    best as f64 + silent
}

/// Minimum MSE of the LMMSE plane estimate,
/// `(2 p |K_l| (K - |K_l|) + K sigma^2) / (8 p |K_l| + 4 sigma^2)`.
pub fn mse_closed_form(scaling: f64, active: usize, devices: usize, noise_power: f64) -> f64 {
    let (p, n, k) = (scaling, active as f64, devices as f64);
    (2.0 * p * n * (k - n) + k * noise_power) / (8.0 * p * n + 4.0 * noise_power)
}

/// Plane detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Detector {
    #[default]
    Lmmse,
    /// LMMSE followed by rounding to the nearest count in `0..=K`.
    LmmseRounded,
    Ml,
}

impl Detector {
    pub fn detect(&self, y: Complex64, plan: &SubcarrierPlan) -> f64 {
        match self {
            Self::Lmmse => lmmse_detect(y, plan),
            Self::LmmseRounded => {
                libm::round(lmmse_detect(y, plan)).clamp(0.0, plan.devices() as f64)
            }
            Self::Ml => ml_detect(y, plan),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn allocation_examples() {
        assert_eq!(allocate_power(8.0, 8, 1.0).unwrap(), vec![1.0; 8]);
        assert_eq!(allocate_power(7.0, 3, 2.0).unwrap(), vec![1.0, 2.0, 4.0]);
        assert_eq!(allocate_power(1.0, 2, 3.0).unwrap(), vec![0.25, 0.75]);
    }

    #[test]
    fn allocation_rejects_bad_input() {
        assert!(allocate_power(1.0, 8, 0.5).is_err());
        assert!(allocate_power(0.0, 8, 1.0).is_err());
        assert!(allocate_power(1.0, 0, 1.0).is_err());
        assert!(allocate_power(1.0, 8, f64::NAN).is_err());
    }

    #[test]
    fn reallocation_conserves_budget() {
        let mut b = PowerBudget::geometric(2, 1.0, 4, 2.0).unwrap();
        b.reallocate(0, &[true, false, true, false]);
        let row = b.device_row(0);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(row[1], 0.0);
        assert!((row[2] / row[0] - 4.0).abs() < 1e-12);
        // Other devices untouched; an all-silent device keeps its split.
        assert_eq!(b.device_row(1), allocate_power(1.0, 4, 2.0).unwrap());
        b.reallocate(1, &[false; 4]);
        assert_eq!(b.device_row(1), allocate_power(1.0, 4, 2.0).unwrap());
    }

    #[test]
    fn preprocess_examples() {
        assert_eq!(preprocess(c(3.0, 1.0), 2.0, false).unwrap(), c(0.0, 0.0));
        let rho = preprocess(c(2.0, 0.0), 4.0, true).unwrap();
        assert_eq!(rho, c(1.0, 0.0));
        assert_eq!(c(2.0, 0.0) * rho, c(2.0, 0.0));
        let rho = preprocess(c(0.0, 1.0), 1.0, true).unwrap();
        assert_eq!(rho, c(0.0, -1.0));
        assert_eq!(c(0.0, 1.0) * rho, c(1.0, 0.0));
        assert_eq!(
            preprocess(c(0.0, 0.0), 1.0, true),
            Err(Error::ZeroChannelGain)
        );
    }

    #[test]
    fn power_check_examples() {
        let h = [c(2.0, 0.0)];
        let zero = SubcarrierPlan::new(vec![0], 0.0, 1.0, 1).unwrap();
        assert!(transmit_power_check(&zero, &[c(0.0, 0.0)], &[0.0]));
        let edge = SubcarrierPlan::new(vec![0], 4.0, 1.0, 1).unwrap();
        assert!(transmit_power_check(&edge, &h, &[1.0]));
        let over = SubcarrierPlan::new(vec![0], 4.01, 1.0, 1).unwrap();
        assert!(!transmit_power_check(&over, &h, &[1.0]));
    }

    #[test]
    fn lmmse_examples() {
        let plan = SubcarrierPlan::new(vec![0, 1, 2, 3], 1.0, 1.0, 4).unwrap();
        assert_eq!(plan.lambda(), 4.0 / 9.0);
        assert_eq!(plan.mu(), 2.0);

        // No signal power: the estimate is the prior mean.
        let dead = SubcarrierPlan::new(vec![0, 1], 0.0, 1.0, 6).unwrap();
        assert_eq!(dead.lambda(), 0.0);
        assert_eq!(lmmse_detect(c(123.0, -4.0), &dead), 3.0);

        // Vanishing noise: lambda -> 1 / (2 sqrt(p)) and the offset cancels.
        let sharp = SubcarrierPlan::new(vec![0, 1, 2], 4.0, 1e-12, 3).unwrap();
        let y = c(2.0 * 2.0 * 2.0 - 2.0 * 3.0, 0.7);
        assert!((lmmse_detect(y, &sharp) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn ml_examples() {
        let plan = SubcarrierPlan::new(vec![0, 1, 2], 4.0, 1.0, 5).unwrap();
        // Lattice sqrt(p) (2r - 3) = {-6, -2, 2, 6}; two silent devices add 1.
        for r in 0..=3 {
            let y = c(2.0 * (2.0 * r as f64 - 3.0), 0.0);
            assert_eq!(ml_detect(y, &plan), r as f64 + 1.0);
        }
        // Midpoint between -2 (r = 1) and 2 (r = 2) resolves downwards.
        assert_eq!(ml_detect(c(0.0, 0.0), &plan), 2.0);
        assert_eq!(ml_detect(c(-4.0, 0.0), &plan), 1.0);
        // Far outside the lattice clamps to the end points.
        assert_eq!(ml_detect(c(1e6, 0.0), &plan), 4.0);
        assert_eq!(ml_detect(c(-1e6, 0.0), &plan), 1.0);
        let silent = SubcarrierPlan::silent(1.0, 5).unwrap();
        assert_eq!(ml_detect(c(3.0, 0.0), &silent), 2.5);
    }

    #[test]
    fn mse_examples() {
        assert!(mse_closed_form(1.0, 10, 10, 1e-300) < 1e-299);
        assert_eq!(mse_closed_form(0.0, 4, 7, 2.0), 7.0 / 4.0);
        assert_eq!(mse_closed_form(4.0, 2, 3, 1.0), 19.0 / 68.0);
        let plan = SubcarrierPlan::new(vec![1, 2], 4.0, 1.0, 3).unwrap();
        assert_eq!(plan.mse(), 19.0 / 68.0);
    }

    #[test]
    fn rounded_detector_stays_in_range() {
        let plan = SubcarrierPlan::new(vec![0, 1], 1.0, 1.0, 2).unwrap();
        assert_eq!(Detector::LmmseRounded.detect(c(100.0, 0.0), &plan), 2.0);
        assert_eq!(Detector::LmmseRounded.detect(c(-100.0, 0.0), &plan), 0.0);
        assert_eq!(Detector::LmmseRounded.detect(c(0.0, 0.0), &plan), 1.0);
    }

    #[test]
    fn plan_validation() {
        assert!(SubcarrierPlan::new(vec![3], 1.0, 1.0, 3).is_err());
        assert!(SubcarrierPlan::new(vec![0], -1.0, 1.0, 3).is_err());
        assert!(SubcarrierPlan::new(vec![0], 1.0, 0.0, 3).is_err());
        let plan = SubcarrierPlan::new(vec![2, 0, 2], 1.0, 1.0, 3).unwrap();
        assert_eq!(plan.active(), &[0, 2]);
        assert!(plan.is_active(2) && !plan.is_active(1));
    }
}
