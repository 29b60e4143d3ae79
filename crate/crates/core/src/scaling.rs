//! Cooling time of all modes of an N-ion chain when one laser power budget
//! is shared between the modes (parallel) or spent on one mode at a time
//! (sequential).
//!
//! Mode `m` cools in `C/√(ω_m P_m)`: the initial phonon number scales as
//! `1/ω_m`, the Lamb-Dicke factor as `1/√ω_m` and the Rabi frequency as
//! `√P_m`. Frequency lists below start with the reference mode `ω₁`, the one
//! whose single-ion cooling time is `T₁`.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::chain::{modes, Axis, TrapConfig};
use crate::constants::khz;
use crate::fit::{line_fit, LineFit};
use crate::{Error, Result};

/// Single-ion cooling time measured at [`REFERENCE_OMEGA`].
pub const REFERENCE_T1: f64 = 200e-6;
/// Axial frequency at which [`REFERENCE_T1`] holds, rad/s.
pub const REFERENCE_OMEGA: f64 = 2.0 * core::f64::consts::PI * 735e3;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub powers: Vec<f64>,
    pub total: f64,
}

fn check_frequencies(frequencies: &[f64]) -> Result<()> {
    if frequencies.is_empty() {
        return Err(Error::invalid("frequencies", "must not be empty"));
    }
    if frequencies.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::invalid("frequencies", "must be positive"));
    }
    Ok(())
}

/// `P_m ∝ 1/ω_m`, which equalizes every mode's cooling time.
pub fn optimal_power_allocation(frequencies: &[f64], p0: f64) -> Result<PowerAllocation> {
    check_frequencies(frequencies)?;
    if !(p0 > 0.0 && p0.is_finite()) {
        return Err(Error::invalid("p0", "must be positive"));
    }
    let norm: f64 = frequencies.iter().map(|w| 1.0 / w).sum();
    let powers = frequencies.iter().map(|w| p0 / (w * norm)).collect();
    Ok(PowerAllocation { powers, total: p0 })
}

/// `max_m C/√(ω_m P_m)`; infinite if any mode gets no power.
pub fn allocation_time(frequencies: &[f64], powers: &[f64], c: f64) -> f64 {
    frequencies
        .iter()
        .zip(powers)
        .map(|(w, p)| if *p > 0.0 { c / (w * p).sqrt() } else { f64::INFINITY })
        .fold(0.0, f64::max)
}

/// `√(ω₁ Σ_m 1/ω_m) · T₁`.
pub fn parallel_cooling_time(frequencies: &[f64], t1: f64) -> f64 {
    let w1 = frequencies[0];
    (w1 * frequencies.iter().map(|w| 1.0 / w).sum::<f64>()).sqrt() * t1
}

/// `√ω₁ Σ_m 1/√ω_m · T₁`.
pub fn sequential_cooling_time(frequencies: &[f64], t1: f64) -> f64 {
    let w1 = frequencies[0];
    w1.sqrt() * frequencies.iter().map(|w| 1.0 / w.sqrt()).sum::<f64>() * t1
}

/// Single-ion cooling time at `omega`, given `t1` at `omega_ref`
/// (`T₁ ∝ 1/√ω` at fixed power).
pub fn rescale_t1(t1: f64, omega_ref: f64, omega: f64) -> f64 {
    t1 * (omega_ref / omega).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub n_ions: usize,
    pub t_parallel: f64,
    pub t_sequential: f64,
}

/// Fit of `T(N)` to `a + b ln N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogFit {
    pub line: LineFit,
    /// Largest `|T - fit| / T` over the curve.
    pub max_relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingCurve {
    pub axis: Axis,
    /// Single-ion time at this axis's reference frequency.
    pub t1: f64,
    pub rows: Vec<ScalingRow>,
    /// First ion number at which the chain buckled; rows stop before it.
    pub unstable_from: Option<usize>,
}

impl ScalingCurve {
    fn column(&self, f: impl Fn(&ScalingRow) -> f64) -> (Vec<f64>, Vec<f64>) {
        self.rows.iter().map(|r| (r.n_ions as f64, f(r))).unzip()
    }

    /// `T_parallel ≈ a + b ln N`.
    pub fn parallel_log_fit(&self) -> Result<LogFit> {
        let (n, t) = self.column(|r| r.t_parallel);
        let ln_n: Vec<f64> = n.iter().map(|v| v.ln()).collect();
        let line = line_fit(&ln_n, &t)?;
        let max_relative_residual = ln_n
            .iter()
            .zip(&t)
            .map(|(x, y)| (y - line.eval(*x)).abs() / y)
            .fold(0.0, f64::max);
        Ok(LogFit {
            line,
            max_relative_residual,
        })
    }

    /// Exponent `k` of `T ∝ N^k` from a log-log fit over `N ≥ n_min`.
    pub fn growth_exponent(&self, sequential: bool, n_min: usize) -> Result<f64> {
        let (n, t) = self.column(|r| if sequential { r.t_sequential } else { r.t_parallel });
        let (x, y): (Vec<f64>, Vec<f64>) = n
            .iter()
            .zip(&t)
            .filter(|(n, _)| **n >= n_min as f64)
            .map(|(n, t)| (n.ln(), t.ln()))
            .unzip();
        Ok(line_fit(&x, &y)?.slope)
    }
}

/// Reference frequency of an axis: the COM mode, whose single-ion limit is
/// the bare trap frequency.
pub fn reference_frequency(cfg: &TrapConfig, axis: Axis) -> f64 {
    match axis {
        Axis::Axial => cfg.omega_z,
        Axis::Radial => cfg.omega_x,
    }
}

/// Parallel and sequential times for `n_ions` ions. `t1` is the
/// single-ion time at this axis's reference frequency.
pub fn scaling_row(cfg: &TrapConfig, axis: Axis, n_ions: usize, t1: f64) -> Result<ScalingRow> {
    let m = modes(&cfg.with_ions(n_ions)?, axis)?;
    Ok(ScalingRow {
        n_ions,
        t_parallel: parallel_cooling_time(&m.frequencies, t1),
        t_sequential: sequential_cooling_time(&m.frequencies, t1),
    })
}

/// Rows for `N = 1..=n_max`, with `T₁` carried from the 200 µs / 735 kHz
/// reference to the axis's own reference frequency.
pub fn scaling_curve(n_max: usize, cfg: &TrapConfig, axis: Axis) -> Result<ScalingCurve> {
    scaling_curve_with(n_max, cfg, axis, REFERENCE_T1, REFERENCE_OMEGA)
}

pub fn scaling_curve_with(
    n_max: usize,
    cfg: &TrapConfig,
    axis: Axis,
    t1_ref: f64,
    omega_ref: f64,
) -> Result<ScalingCurve> {
    if n_max == 0 {
        return Err(Error::invalid("n_max", "must be at least 1"));
    }
    let t1 = rescale_t1(t1_ref, omega_ref, reference_frequency(cfg, axis));
    let mut curve = ScalingCurve {
        axis,
        t1,
        rows: Vec::with_capacity(n_max),
        unstable_from: None,
    };
    for n in 1..=n_max {
        match scaling_row(cfg, axis, n, t1) {
            Ok(row) => curve.rows.push(row),
            Err(Error::ZigzagInstability { .. }) => {
                curve.unstable_from = Some(n);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(curve)
}

/// The large-chain trap used for the scaling curves: `(ω_x, ω_z) =
/// 2π × (7.5, 0.2) MHz`, Be⁺.
pub fn long_chain_trap() -> TrapConfig {
    TrapConfig::new(
        crate::chain::IonSpecies::beryllium9(),
        1,
        khz(200.0),
        khz(7500.0),
    )
    .expect("valid constants")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn allocation_examples() {
        let a = optimal_power_allocation(&[3.0], 2.0).unwrap();
        assert_eq!(a.powers, [2.0]);
        let a = optimal_power_allocation(&[1.0, 2.0], 3.0).unwrap();
        assert!((a.powers[0] - 2.0).abs() < 1e-15 && (a.powers[1] - 1.0).abs() < 1e-15);
        assert!(optimal_power_allocation(&[], 1.0).is_err());
        assert!(optimal_power_allocation(&[1.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn closed_forms_for_two_ions() {
        let w: [f64; 2] = [1.0, 3f64.sqrt()];
        assert!((parallel_cooling_time(&w, 1.0) - (1.0 + 1.0 / 3f64.sqrt()).sqrt()).abs() < 1e-15);
        assert!((parallel_cooling_time(&w, 1.0) - 1.2560).abs() < 1e-4);
        assert!((sequential_cooling_time(&w, 1.0) - 1.7598).abs() < 1e-4);
        assert_eq!(parallel_cooling_time(&[5.0], 2.0), 2.0);
        assert_eq!(sequential_cooling_time(&[5.0], 2.0), 2.0);
    }

    #[test]
    fn optimal_allocation_attains_parallel_time() {
        let w = [1.0, 1.7, 2.3, 2.9];
        let p0: f64 = 4.0;
        let t1 = 1.0;
        let c = t1 * (w[0] * p0).sqrt();
        let a = optimal_power_allocation(&w, p0).unwrap();
        let wp: Vec<f64> = w.iter().zip(&a.powers).map(|(x, p)| x * p).collect();
        assert!(wp.iter().all(|v| (v - wp[0]).abs() < 1e-12 * wp[0]));
        let t = allocation_time(&w, &a.powers, c);
        assert!((t - parallel_cooling_time(&w, t1)).abs() < 1e-12);
    }

    #[test]
    fn rescaling_invariance() {
        let w: [f64; 3] = [1.0, 1.6, 2.2];
        let s: f64 = 3.7;
        let ws: Vec<f64> = w.iter().map(|x| x * s).collect();
        let t1s = 1.0 / s.sqrt();
        assert!((parallel_cooling_time(&ws, 1.0) - parallel_cooling_time(&w, 1.0)).abs() < 1e-14);
        assert!(
            (rescale_t1(1.0, 1.0, s) * parallel_cooling_time(&w, 1.0)
                - parallel_cooling_time(&ws, t1s))
            .abs()
                < 1e-14
        );
    }
}
