//! Special functions shared by the simulators.
//!
//! The displacement operator `D(iη) = exp(iη(a + a†))` has matrix elements
//!
//! ```text
//! ⟨n+s| D |n⟩ = i^s · e^{-η²/2} · η^s · √(n!/(n+s)!) · L_n^{(s)}(η²)
//! ```
//!
//! and [`displacement_element`] returns the real factor without the `i^s`
//! phase. Red-sideband rates for `|n⟩ → |n-1⟩` therefore use
//! `L_{n-1}^{(1)}`, not `L_n^{(1)}`; [`RsbIndex::UpperLevel`] keeps the
//! other index available for comparison.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::{Error, Result};

/// Largest Fock cutoff chosen automatically.
pub const MAX_AUTO_CUTOFF: usize = 512;
/// Default thermal tail mass left out by [`default_cutoff`].
pub const DEFAULT_TAIL: f64 = 1e-8;
/// Tail mass used for the thermally averaged red-sideband rate.
pub const RSB_RATE_TAIL: f64 = 1e-10;

/// Generalized Laguerre polynomial `L_n^{(α)}(x)` by upward recurrence.
pub fn laguerre(n: usize, alpha: u32, x: f64) -> f64 {
    let a = alpha as f64;
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + a - x) * cur - (k + a) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `L_0^{(α)}(x), …, L_{n_max}^{(α)}(x)` in one pass of the recurrence.
pub fn laguerre_all(n_max: usize, alpha: u32, x: f64) -> Vec<f64> {
    let a = alpha as f64;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    if n_max == 0 {
        return out;
    }
    out.push(1.0 + a - x);
    for k in 1..n_max {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * out[k] - (kf + a) * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// `½ ln(n! / (n+s)!)`
fn half_log_factorial_ratio(n: usize, s: usize) -> f64 {
    -0.5 * (n + 1..=n + s).map(|k| (k as f64).ln()).sum::<f64>()
}

/// Real factor of `⟨n+s| exp(iη(a+a†)) |n⟩` (the matrix element is this
/// value times `i^s`). By symmetry it also equals the factor of
/// `⟨n| exp(iη(a+a†)) |n+s⟩`.
pub fn displacement_element(n: usize, s: usize, eta: f64) -> f64 {
    let x = eta * eta;
    let lag = laguerre(n, s as u32, x);
    if s == 0 {
        return (-0.5 * x).exp() * lag;
    }
    if eta == 0.0 {
        return 0.0;
    }
    let sign = if eta < 0.0 && s % 2 == 1 { -1.0 } else { 1.0 };
    let log_mag = -0.5 * x + s as f64 * eta.abs().ln() + half_log_factorial_ratio(n, s);
    sign * log_mag.exp() * lag
}

/// Carrier factors `e^{-η²/2} L_n(η²)` for `n = 0..=n_max`.
pub fn carrier_factors(n_max: usize, eta: f64) -> Vec<f64> {
    let x = eta * eta;
    let dw = (-0.5 * x).exp();
    laguerre_all(n_max, 0, x).into_iter().map(|l| dw * l).collect()
}

/// First-sideband factors `⟨n|D|n+1⟩` (up to phase) for `n = 0..n_max`.
pub fn sideband_factors(n_max: usize, eta: f64) -> Vec<f64> {
    let x = eta * eta;
    let dw = (-0.5 * x).exp();
    laguerre_all(n_max, 1, x)
        .into_iter()
        .enumerate()
        .take(n_max)
        .map(|(n, l)| dw * eta * l / ((n + 1) as f64).sqrt())
        .collect()
}

/// Thermal occupation `P(n) = n̄ⁿ / (n̄+1)^{n+1}`.
pub fn thermal_probability(nbar: f64, n: usize) -> f64 {
    if nbar == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let q = nbar / (nbar + 1.0);
    (n as f64 * q.ln()).exp() / (nbar + 1.0)
}

/// Population beyond `n_cut`: `(n̄/(n̄+1))^{n_cut+1}`.
pub fn thermal_tail(nbar: f64, n_cut: usize) -> f64 {
    if nbar == 0.0 {
        return 0.0;
    }
    let q = nbar / (nbar + 1.0);
    ((n_cut + 1) as f64 * q.ln()).exp()
}

/// Smallest cutoff whose thermal tail is below `tol`, clamped to
/// `[min, cap]`.
pub fn cutoff_for_tail(nbar: f64, tol: f64, min: usize, cap: usize) -> usize {
    if nbar <= 0.0 {
        return min.min(cap);
    }
    let q = nbar / (nbar + 1.0);
    // q^{n+1} < tol  <=>  n + 1 > ln(tol)/ln(q)
    let exact = (tol.ln() / q.ln()).floor();
    let mut n = if exact.is_finite() && exact > 0.0 {
        exact as usize
    } else {
        0
    };
    while n > 0 && thermal_tail(nbar, n - 1) < tol {
        n -= 1;
    }
    while thermal_tail(nbar, n) >= tol && n < cap {
        n += 1;
    }
    n.clamp(min, cap)
}

/// Default truncation: tail below `1e-8`, at most 512 levels.
pub fn default_cutoff(nbar: f64) -> usize {
    cutoff_for_tail(nbar, DEFAULT_TAIL, 0, MAX_AUTO_CUTOFF)
}

/// A thermally occupied mode truncated at `n_cut`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalMode {
    pub nbar: f64,
    pub n_cut: usize,
}

impl ThermalMode {
    pub fn new(nbar: f64, n_cut: usize) -> Result<Self> {
        if !(nbar.is_finite() && nbar >= 0.0) {
            return Err(Error::invalid("nbar", "must be finite and non-negative"));
        }
        Ok(ThermalMode { nbar, n_cut })
    }

    /// Truncation at the smallest cutoff with tail mass below `tol`.
    pub fn with_tail(nbar: f64, tol: f64) -> Result<Self> {
        let mode = Self::new(nbar, 0)?;
        Ok(ThermalMode {
            n_cut: cutoff_for_tail(mode.nbar, tol, 0, MAX_AUTO_CUTOFF),
            ..mode
        })
    }

    pub fn tail_mass(&self) -> f64 {
        thermal_tail(self.nbar, self.n_cut)
    }

    /// Checks that the discarded tail is below `tol`.
    pub fn check_tail(&self, tol: f64) -> Result<()> {
        if self.tail_mass() < tol {
            Ok(())
        } else {
            Err(Error::invalid("n_cut", "thermal tail exceeds tolerance"))
        }
    }

    /// `P(0), …, P(n_cut)` (not renormalized).
    pub fn weights(&self) -> Vec<f64> {
        thermal_weights(self)
    }
}

/// `P(n)` for `n = 0..=n_cut`; sums to `1 - tail_mass`.
pub fn thermal_weights(mode: &ThermalMode) -> Vec<f64> {
    let mut out = Vec::with_capacity(mode.n_cut + 1);
    if mode.nbar == 0.0 {
        out.push(1.0);
        out.resize(mode.n_cut + 1, 0.0);
        return out;
    }
    let q = mode.nbar / (mode.nbar + 1.0);
    let mut p = 1.0 / (mode.nbar + 1.0);
    for _ in 0..=mode.n_cut {
        out.push(p);
        p *= q;
    }
    out
}

/// Laguerre index used for the red-sideband rate of `|n⟩ → |n-1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RsbIndex {
    /// `L_{n-1}^{(1)}`: the displacement-operator matrix element.
    #[default]
    Standard,
    /// `L_n^{(1)}` paired with `1/√n`.
    UpperLevel,
}

/// Per-level red-sideband strengths, precomputed once for a given `η` so
/// that thermal averages cost one pass over the levels.
#[derive(Debug, Clone)]
pub struct RsbRateTable {
    omega0: f64,
    /// `factors[n-1]`: `|⟨n-1| D |n⟩|` for `n = 1..=len`.
    factors: Vec<f64>,
}

impl RsbRateTable {
    pub fn new(eta: f64, omega0: f64, index: RsbIndex, n_max: usize) -> Self {
        let x = eta * eta;
        let dw = (-0.5 * x).exp();
        let lag = laguerre_all(n_max + 1, 1, x);
        let factors = (1..=n_max)
            .map(|n| {
                let l = match index {
                    RsbIndex::Standard => lag[n - 1],
                    RsbIndex::UpperLevel => lag[n],
                };
                (dw * eta * l / (n as f64).sqrt()).abs()
            })
            .collect();
        RsbRateTable { omega0, factors }
    }

    /// Table long enough to average a distribution with mean up to
    /// `nbar_max` at the [`RSB_RATE_TAIL`] tolerance.
    pub fn for_nbar(eta: f64, omega0: f64, index: RsbIndex, nbar_max: f64) -> Self {
        let n_max = cutoff_for_tail(nbar_max, RSB_RATE_TAIL, 1, usize::MAX / 2);
        Self::new(eta, omega0, index, n_max)
    }

    pub fn n_max(&self) -> usize {
        self.factors.len()
    }

    /// `Ω₀ Σ_{n≥1} P(n) |⟨n-1|D|n⟩|` with the tail below [`RSB_RATE_TAIL`]
    /// (or the whole table, if shorter).
    pub fn rate(&self, nbar: f64) -> f64 {
        if nbar <= 0.0 {
            return 0.0;
        }
        let n_cut = cutoff_for_tail(nbar, RSB_RATE_TAIL, 1, self.n_max());
        self.rate_truncated(nbar, n_cut)
    }

    /// Same average summed over `n = 1..=n_cut` exactly.
    pub fn rate_truncated(&self, nbar: f64, n_cut: usize) -> f64 {
        if nbar <= 0.0 {
            return 0.0;
        }
        let q = nbar / (nbar + 1.0);
        let mut p = q / (nbar + 1.0);
        let mut sum = 0.0;
        for f in self.factors.iter().take(n_cut) {
            sum += p * f;
            p *= q;
        }
        self.omega0 * sum
    }
}

/// Thermally averaged red-sideband Rabi rate, rad/s.
pub fn thermal_rsb_rabi(nbar: f64, eta: f64, omega0: f64) -> f64 {
    thermal_rsb_rabi_with(nbar, eta, omega0, RsbIndex::Standard)
}

pub fn thermal_rsb_rabi_with(nbar: f64, eta: f64, omega0: f64, index: RsbIndex) -> f64 {
    RsbRateTable::for_nbar(eta, omega0, index, nbar).rate(nbar)
}
