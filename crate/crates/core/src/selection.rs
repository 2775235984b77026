//! Active-set selection for one subcarrier.
//!
//! For a fixed active set the best scaling factor is the weakest member's
//! gain-budget product, so the search is over sets only. Adding a weaker
//! device raises `|K_l|` but lowers `p_l`; the optimum is always a prefix of
//! the devices sorted by decreasing gain-budget product, which
//! [`greedy_select`] scans in `O(K log K)`. [`brute_force_select`] enumerates
//! every subset and serves as the reference.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::transceiver::mse_closed_form;
use crate::{Error, Result};

/// Largest device count accepted by the exhaustive search.
pub const BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionInstance {
    /// `|h_k|^2 P_k` per device.
    pub effective_gains: Vec<f64>,
    pub noise_power: f64,
}

impl SelectionInstance {
    pub fn new(effective_gains: Vec<f64>, noise_power: f64) -> Result<Self> {
        if effective_gains.is_empty() {
            return Err(Error::invalid(
                "effective_gains",
                "need at least one device",
            ));
        }
        if effective_gains
            .iter()
            .any(|g| !(g.is_finite() && *g >= 0.0))
        {
            return Err(Error::invalid(
                "effective_gains",
                "must be finite and non-negative",
            ));
        }
        if !(noise_power.is_finite() && noise_power > 0.0) {
            return Err(Error::invalid("noise_power", "must be finite and positive"));
        }
        Ok(Self {
            effective_gains,
            noise_power,
        })
    }

    pub fn devices(&self) -> usize {
        self.effective_gains.len()
    }

    fn mse(&self, scaling: f64, active: usize) -> f64 {
        mse_closed_form(scaling, active, self.devices(), self.noise_power)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Active devices in ascending index order.
    pub active: Vec<usize>,
    pub scaling: f64,
    pub mse: f64,
}

impl Selection {
    /// Nobody transmits; the plane estimate falls back to the prior mean.
    pub fn silent(devices: usize) -> Self {
        Self {
            active: Vec::new(),
            scaling: 0.0,
            mse: devices as f64 / 4.0,
        }
    }

    /// Replaces the selection by silence when it cannot beat the prior variance.
    pub fn or_silent(self, devices: usize) -> Self {
        if self.mse >= devices as f64 / 4.0 {
            Self::silent(devices)
        } else {
            self
        }
    }
}

/// `min_{k in set} |h_k|^2 P_k`.
pub fn optimal_scaling(active: &[usize], instance: &SelectionInstance) -> Result<f64> {
    active
        .iter()
        .map(|&k| {
            instance
                .effective_gains
                .get(k)
                .copied()
                .ok_or(Error::invalid("active_set", "device index out of range"))
        })
        .try_fold(None, |acc: Option<f64>, g| {
            let g = g?;
            Ok(Some(acc.map_or(g, |m| m.min(g))))
        })?
        .ok_or(Error::EmptyActiveSet)
}

/// Device indices by decreasing gain, ties by ascending index.
pub fn gain_order(instance: &SelectionInstance) -> Vec<usize> {
    let gains = &instance.effective_gains;
    let mut order: Vec<usize> = (0..gains.len()).collect();
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));
    order
}

/// Best descending-gain prefix.
pub fn greedy_select(instance: &SelectionInstance) -> Selection {
    let order = gain_order(instance);
    let mut best_len = 1;
    let mut best_scaling = instance.effective_gains[order[0]];
    let mut best_mse = f64::INFINITY;
    for (n, &k) in order.iter().enumerate() {
        let scaling = instance.effective_gains[k];
        let mse = instance.mse(scaling, n + 1);
        if mse < best_mse {
            best_len = n + 1;
            best_scaling = scaling;
            best_mse = mse;
        }
    }
    let mut active = order[..best_len].to_vec();
    active.sort_unstable();
    Selection {
        active,
        scaling: best_scaling,
        mse: best_mse,
    }
}

/// Exhaustive minimum over all non-empty subsets. Ties go to the smaller set,
/// then to the lexicographically smaller index list.
pub fn brute_force_select(instance: &SelectionInstance) -> Result<Selection> {
    let k = instance.devices();
    if k > BRUTE_FORCE_LIMIT {
        return Err(Error::TooManyDevices {
            devices: k,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut best: Option<Selection> = None;
    for mask in 1u32..(1u32 << k) {
        let active: Vec<usize> = (0..k).filter(|&i| mask & (1 << i) != 0).collect();
        let scaling = optimal_scaling(&active, instance)?;
        let mse = instance.mse(scaling, active.len());
        let candidate = Selection {
            active,
            scaling,
            mse,
        };
        let better = match &best {
            None => true,
            Some(b) => match candidate.mse.total_cmp(&b.mse) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => {
                    (candidate.active.len(), &candidate.active) < (b.active.len(), &b.active)
                }
            },
        };
        if better {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one subset"))
}
