//! Multi-antenna links reduced to effective scalar channels `w^H H f`.
//!
//! The receive beamformer on each subcarrier is the principal left singular
//! vector of the summed device channels; each device then transmits along the
//! matched direction `(w^H H)^H / |w^H H|`. Both beamformers are rotated so
//! their first non-zero entry is real and positive, which makes the 1x1 case
//! collapse to `w = f = 1` and reproduce the SISO gains exactly.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use super::{draw_link, perturb, twiddles, ChannelParams, NetworkRealization};
use crate::rng::{self, Purpose};
use crate::{Error, Result};

const UNIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MimoParams {
    pub tx: usize,
    pub rx: usize,
}

impl MimoParams {
    pub fn new(tx: usize, rx: usize) -> Result<Self> {
        if tx == 0 || rx == 0 {
            return Err(Error::invalid("mimo", "antenna counts must be at least 1"));
        }
        Ok(Self { tx, rx })
    }

    pub fn is_siso(&self) -> bool {
        self.tx == 1 && self.rx == 1
    }
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: alloc::vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row vector `w^H A`.
    pub fn left_project(&self, w: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(w.len(), self.rows);
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| w[r].conj() * self[(r, c)]).sum())
            .collect()
    }

    /// `A A^H`.
    fn gram(&self) -> CMatrix {
        let mut g = CMatrix::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in 0..self.rows {
                g[(i, j)] = (0..self.cols)
                    .map(|c| self[(i, c)] * self[(j, c)].conj())
                    .sum();
            }
        }
        g
    }

    fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self[(r, c)] * x[c]).sum())
            .collect()
    }
}

impl core::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl core::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

pub fn norm(v: &[Complex64]) -> f64 {
    libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum())
}

fn check_unit(v: &[Complex64]) -> Result<()> {
    let n = norm(v);
    if (n - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::NonUnitBeamformer { norm: n });
    }
    Ok(())
}

/// Effective scalar channel `w^H H f`.
pub fn scalarize_mimo(h: &CMatrix, w: &[Complex64], f: &[Complex64]) -> Result<Complex64> {
    if w.len() != h.rows() {
        return Err(Error::DimensionMismatch {
            expected: h.rows(),
            actual: w.len(),
        });
    }
    if f.len() != h.cols() {
        return Err(Error::DimensionMismatch {
            expected: h.cols(),
            actual: f.len(),
        });
    }
    check_unit(w)?;
    check_unit(f)?;
    Ok(h.left_project(w).iter().zip(f).map(|(a, b)| a * b).sum())
}

/// Rotates `v` so its first non-zero entry is real and positive.
fn canonical_phase(v: &mut [Complex64]) {
    if let Some(lead) = v.iter().copied().find(|z| z.norm_sqr() > 0.0) {
        let rot = lead.conj() / lead.norm();
        for z in v.iter_mut() {
            *z *= rot;
        }
        v.iter_mut().find(|z| z.norm_sqr() > 0.0).unwrap().im = 0.0;
    }
}

fn unit_basis(n: usize) -> Vec<Complex64> {
    let mut e = alloc::vec![Complex64::new(0.0, 0.0); n];
    e[0] = Complex64::new(1.0, 0.0);
    e
}

/// Principal left singular vector of `a` by power iteration on `a a^H`.
pub fn principal_left_singular(a: &CMatrix) -> Vec<Complex64> {
    if a.rows() == 1 {
        return unit_basis(1);
    }
    let gram = a.gram();
    let start = Complex64::new(1.0 / libm::sqrt(a.rows() as f64), 0.0);
    let mut x = alloc::vec![start; a.rows()];
    for _ in 0..500 {
        let mut next = gram.mul_vec(&x);
        let n = norm(&next);
        if n == 0.0 {
            return unit_basis(a.rows());
        }
        next.iter_mut().for_each(|z| *z /= n);
        canonical_phase(&mut next);
        let delta: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).norm_sqr()).sum();
        x = next;
        if delta < 1e-28 {
            break;
        }
    }
    x
}

/// Unit transmit beamformer maximising `|w^H H f|` for fixed `w`.
pub fn matched_transmit(h: &CMatrix, w: &[Complex64]) -> Vec<Complex64> {
    if h.cols() == 1 {
        return unit_basis(1);
    }
    let row = h.left_project(w);
    let n = norm(&row);
    if n == 0.0 {
        return unit_basis(h.cols());
    }
    let mut f: Vec<Complex64> = row.iter().map(|z| z.conj() / n).collect();
    canonical_phase(&mut f);
    f
}

/// Receive beamformer for one subcarrier and the per-device transmit ones.
pub fn matched_beamformers(channels: &[CMatrix]) -> (Vec<Complex64>, Vec<Vec<Complex64>>) {
    let (rows, cols) = (channels[0].rows(), channels[0].cols());
    let mut sum = CMatrix::zeros(rows, cols);
    for h in channels {
        for (s, x) in sum.data.iter_mut().zip(&h.data) {
            *s += x;
        }
    }
    let w = principal_left_singular(&sum);
    let f = channels.iter().map(|h| matched_transmit(h, &w)).collect();
    (w, f)
}

/// Per-subcarrier channel matrices, `[subcarrier][device]`.
#[allow(clippy::needless_range_loop)]
pub fn draw_mimo_links<R: Rng + ?Sized>(
    params: &ChannelParams,
    mimo: MimoParams,
    rng: &mut R,
) -> Vec<Vec<CMatrix>> {
    let (k, l) = (params.devices, params.subcarriers);
    let table = twiddles(l);
    let mut out = alloc::vec![alloc::vec![CMatrix::zeros(mimo.rx, mimo.tx); k]; l];
    let mut link = alloc::vec![Complex64::new(0.0, 0.0); l];
    // Device-major draw order so the 1x1 case consumes the stream like SISO.
    for device in 0..k {
        for r in 0..mimo.rx {
            for t in 0..mimo.tx {
                draw_link(rng, &params.profile, &table, &mut link);
                for (sub, &g) in link.iter().enumerate() {
                    out[sub][device][(r, t)] = g;
                }
            }
        }
    }
    out
}

/// MIMO realization after matched beamforming, as effective scalar gains.
pub fn draw_mimo_channel_with<R: Rng + ?Sized>(
    params: &ChannelParams,
    mimo: MimoParams,
    channel_rng: &mut R,
    csi_rng: &mut R,
) -> Result<NetworkRealization> {
    params.validate()?;
    let (k, l) = (params.devices, params.subcarriers);
    let links = draw_mimo_links(params, mimo, channel_rng);
    let mut h = alloc::vec![Complex64::new(0.0, 0.0); k * l];
    for (sub, channels) in links.iter().enumerate() {
        let (w, fs) = matched_beamformers(channels);
        for (device, (hm, f)) in channels.iter().zip(&fs).enumerate() {
            h[device * l + sub] = scalarize_mimo(hm, &w, f)?;
        }
    }
    let h_est = perturb(csi_rng, params.csi_error_radius, &h);
    NetworkRealization::from_parts(k, l, h, h_est, params.noise_power.clone())
}

pub fn draw_trial_mimo_channel(
    params: &ChannelParams,
    mimo: MimoParams,
    seed: u64,
    trial: u64,
) -> Result<NetworkRealization> {
    let mut channel_rng = rng::stream(seed, trial, Purpose::Channel);
    let mut csi_rng = rng::stream(seed, trial, Purpose::Csi);
    draw_mimo_channel_with(params, mimo, &mut channel_rng, &mut csi_rng)
}
