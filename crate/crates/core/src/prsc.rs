//! Pulsed sideband cooling: equal-length red-sideband pulses, each followed
//! by instantaneous, recoil-free optical pumping.
//!
//! After a pulse of length `t`, a fraction `½(1 - cos Ω_{n-1,n} t)` of the
//! population in `|n⟩` moves to `|n-1⟩`, with
//! `Ω_{n-1,n} = Ω₀ |⟨n-1| D |n⟩|`.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::specfun::{default_cutoff, sideband_factors, ThermalMode};
use crate::{Error, Result};

/// Phonon-number distribution on `|0⟩ … |n_cut⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockPopulations {
    pub p: Vec<f64>,
}

impl FockPopulations {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::invalid("populations", "must not be empty"));
        }
        if p.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("populations", "must be finite and non-negative"));
        }
        if (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("populations", "must sum to 1"));
        }
        Ok(FockPopulations { p })
    }

    /// Thermal distribution cut where the tail drops below `1e-8`, then
    /// renormalized.
    pub fn thermal(nbar: f64) -> Result<Self> {
        Self::thermal_truncated(nbar, default_cutoff(nbar))
    }

    pub fn thermal_truncated(nbar: f64, n_cut: usize) -> Result<Self> {
        let mut p = ThermalMode::new(nbar, n_cut)?.weights();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
        Ok(FockPopulations { p })
    }

    pub fn fock(n: usize, n_cut: usize) -> Self {
        let mut p = alloc::vec![0.0; n_cut.max(n) + 1];
        p[n] = 1.0;
        FockPopulations { p }
    }

    pub fn n_cut(&self) -> usize {
        self.p.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.p.iter().enumerate().map(|(n, v)| n as f64 * v).sum()
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// Sideband Rabi frequencies `Ω_{n-1,n}` for `n = 1..=n_cut` (index `n-1`).
fn rabi_table(n_cut: usize, eta: f64, omega0: f64) -> Vec<f64> {
    sideband_factors(n_cut, eta)
        .into_iter()
        .map(|f| omega0 * f.abs())
        .collect()
}

/// Transfer fractions `½(1 - cos Ω_{n-1,n} t)` for `n = 1..=n_cut`.
fn transfer(rabi: &[f64], t: f64) -> Vec<f64> {
    rabi.iter().map(|w| 0.5 * (1.0 - (w * t).cos())).collect()
}

fn apply(p: &mut [f64], transfer: &[f64]) {
    // Ascending order: level n-1 receives from n only after its own outflow
    // to n-2 has been applied with the pre-pulse value.
    for n in 1..p.len() {
        let moved = p[n] * transfer[n - 1];
        p[n] -= moved;
        p[n - 1] += moved;
    }
}

/// Applies one pulse of length `t`. The top level has nothing above it, so
/// no population leaves the truncated space.
pub fn pulse_update(pop: &FockPopulations, t: f64, eta: f64, omega0: f64) -> FockPopulations {
    let rabi = rabi_table(pop.n_cut(), eta, omega0);
    let mut p = pop.p.clone();
    apply(&mut p, &transfer(&rabi, t));
    FockPopulations { p }
}

/// `n̄` before the first pulse and after each of `n_pulses` pulses.
pub fn prsc_trajectory(nbar0: f64, eta: f64, omega0: f64, t_pulse: f64, n_pulses: usize) -> Result<Vec<f64>> {
    if !(t_pulse >= 0.0) {
        return Err(Error::invalid("t_pulse", "must be non-negative"));
    }
    let pop = FockPopulations::thermal(nbar0)?;
    let rabi = rabi_table(pop.n_cut(), eta, omega0);
    Ok(run(pop.p, &transfer(&rabi, t_pulse), n_pulses))
}

fn run(mut p: Vec<f64>, transfer: &[f64], n_pulses: usize) -> Vec<f64> {
    let mean = |p: &[f64]| p.iter().enumerate().map(|(n, v)| n as f64 * v).sum::<f64>();
    let mut out = Vec::with_capacity(n_pulses + 1);
    out.push(mean(&p));
    for _ in 0..n_pulses {
        apply(&mut p, transfer);
        out.push(mean(&p));
    }
    out
}

/// Grid search over `grid + 1` equally spaced pulse lengths in `t_range`
/// for the lowest `n̄` after `n_pulses` pulses. Ties go to the shorter
/// pulse.
pub fn optimize_pulse_length(
    nbar0: f64,
    eta: f64,
    omega0: f64,
    n_pulses: usize,
    t_range: (f64, f64),
    grid: usize,
) -> Result<f64> {
    let (t0, t1) = t_range;
    if !(t0 >= 0.0 && t1 >= t0) {
        return Err(Error::invalid("t_range", "need 0 <= start <= end"));
    }
    if grid == 0 {
        return Err(Error::invalid("grid", "must be positive"));
    }
    let pop = FockPopulations::thermal(nbar0)?;
    let rabi = rabi_table(pop.n_cut(), eta, omega0);
    let mut best = (f64::INFINITY, t0);
    for k in 0..=grid {
        let t = t0 + (t1 - t0) * k as f64 / grid as f64;
        let final_nbar = *run(pop.p.clone(), &transfer(&rabi, t), n_pulses).last().unwrap();
        if final_nbar < best.0 {
            best = (final_nbar, t);
        }
    }
    Ok(best.1)
}
