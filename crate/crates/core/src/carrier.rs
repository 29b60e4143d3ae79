//! Carrier Rabi flopping of ions coupled to thermally occupied modes.
//!
//! On the joint Fock state `|n₁ … n_M⟩` ion `i` flops at
//! `Ω_i Π_m e^{-η²/2} L_{n_m}(η_{im}²)`; the observed signal is the thermal
//! average `P(t) = ½[1 + Σ P_n cos(Ω_n t)]`, i.e. the population left in
//! the initial spin state.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::chain::ModeStructure;
use crate::fit::{nelder_mead, NelderMeadOptions};
use crate::specfun::{carrier_factors, default_cutoff, displacement_element, ThermalMode};
use crate::{Error, Result};

/// Largest number of joint Fock configurations summed exactly.
pub const ENUMERATION_BUDGET: usize = 1_000_000;
pub const MIN_MC_SAMPLES: usize = 1000;
/// Raman beam waist along the chain.
pub const DEFAULT_WAIST: f64 = 270e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FlopTrace {
    pub ion: Option<usize>,
    pub times: Vec<f64>,
    pub p_excited: Vec<f64>,
    /// Standard error per point; zero for exact traces.
    pub std_error: Vec<f64>,
}

impl FlopTrace {
    fn exact(ion: Option<usize>, times: &[f64], p: Vec<f64>) -> Self {
        FlopTrace {
            ion,
            times: times.to_vec(),
            std_error: vec![0.0; p.len()],
            p_excited: p,
        }
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("times", "must be finite"));
    }
    Ok(())
}

/// `½[1 + Σ w cos(Ω t)]` over `(weight, rate)` pairs.
fn flop(terms: &[(f64, f64)], times: &[f64]) -> Vec<f64> {
    times
        .iter()
        .map(|t| 0.5 * (1.0 + terms.iter().map(|(w, r)| w * (r * t).cos()).sum::<f64>()))
        .collect()
}

/// One ion, one thermal mode.
pub fn single_ion_carrier(nbar: f64, eta: f64, omega0: f64, times: &[f64]) -> Result<FlopTrace> {
    check_times(times)?;
    let mode = ThermalMode::new(nbar, 0)?;
    let n_cut = default_cutoff(mode.nbar);
    let w = ThermalMode::new(nbar, n_cut)?.weights();
    let total: f64 = w.iter().sum();
    let terms: Vec<(f64, f64)> = w
        .iter()
        .zip(carrier_factors(n_cut, eta))
        .map(|(p, f)| (p / total, omega0 * f))
        .collect();
    Ok(FlopTrace::exact(None, times, flop(&terms, times)))
}

/// Ground-state carrier rate of ion `ion`: `Ω₀ Π_m e^{-η²/2}`.
pub fn carrier_rabi_ground(modes: &ModeStructure, ion: usize, omega0: f64) -> Result<f64> {
    if ion >= modes.n_ions() {
        return Err(Error::invalid("ion", "index out of range"));
    }
    let s: f64 = (0..modes.n_modes()).map(|m| modes.lamb_dicke[(ion, m)].powi(2)).sum();
    Ok(omega0 * (-0.5 * s).exp())
}

/// `exp(-2 z²/w²)` for ion positions `z` (m) and beam waist `w`.
pub fn beam_profile(positions: &[f64], waist: f64) -> Result<Vec<f64>> {
    if !(waist > 0.0) {
        return Err(Error::invalid("waist", "must be positive"));
    }
    Ok(positions.iter().map(|z| (-2.0 * z * z / (waist * waist)).exp()).collect())
}

/// Modes, their occupations and the per-ion carrier Rabi frequency.
#[derive(Debug, Clone)]
pub struct CarrierModel {
    pub modes: ModeStructure,
    pub nbars: Vec<f64>,
    /// rad/s, beam profile included.
    pub omega0: Vec<f64>,
}

impl CarrierModel {
    pub fn new(modes: ModeStructure, nbars: Vec<f64>, omega0: Vec<f64>) -> Result<Self> {
        if nbars.len() != modes.n_modes() {
            return Err(Error::invalid("nbars", "need one value per mode"));
        }
        if omega0.len() != modes.n_ions() {
            return Err(Error::invalid("omega0", "need one value per ion"));
        }
        if nbars.iter().any(|n| !(n.is_finite() && *n >= 0.0)) {
            return Err(Error::invalid("nbars", "must be finite and non-negative"));
        }
        if omega0.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("omega0", "must be finite"));
        }
        Ok(CarrierModel { modes, nbars, omega0 })
    }

    /// Same `Ω₀` on every ion.
    pub fn uniform(modes: ModeStructure, nbars: Vec<f64>, omega0: f64) -> Result<Self> {
        let n = modes.n_ions();
        Self::new(modes, nbars, vec![omega0; n])
    }

    /// Peak `Ω₀` weighted by a Gaussian beam profile at the ion positions.
    pub fn with_beam(modes: ModeStructure, nbars: Vec<f64>, omega_peak: f64, positions: &[f64], waist: f64) -> Result<Self> {
        if positions.len() != modes.n_ions() {
            return Err(Error::invalid("positions", "need one value per ion"));
        }
        let omega0 = beam_profile(positions, waist)?.iter().map(|w| omega_peak * w).collect();
        Self::new(modes, nbars, omega0)
    }

    /// Occupation `nbar` on `mode` and ground state elsewhere.
    pub fn with_single_thermal(&self, mode: usize, nbar: f64) -> Result<Self> {
        if mode >= self.nbars.len() {
            return Err(Error::invalid("mode", "index out of range"));
        }
        let mut nbars = vec![0.0; self.nbars.len()];
        nbars[mode] = nbar;
        Self::new(self.modes.clone(), nbars, self.omega0.clone())
    }

    fn check_ion(&self, ion: usize) -> Result<()> {
        if ion >= self.modes.n_ions() {
            return Err(Error::invalid("ion", "index out of range"));
        }
        Ok(())
    }

    fn cutoffs(&self) -> Vec<usize> {
        self.nbars.iter().map(|n| default_cutoff(*n)).collect()
    }

    /// Joint configurations the exact sum would visit.
    pub fn enumeration_size(&self) -> Option<usize> {
        self.cutoffs().iter().try_fold(1usize, |acc, c| acc.checked_mul(c + 1))
    }
}

/// Exact sum over joint Fock configurations. Fails with a resource error
/// above [`ENUMERATION_BUDGET`]; use [`multimode_carrier_mc`] there.
pub fn multimode_carrier_exact(model: &CarrierModel, ion: usize, times: &[f64]) -> Result<FlopTrace> {
    model.check_ion(ion)?;
    check_times(times)?;
    let cuts = model.cutoffs();
    let size = model.enumeration_size().unwrap_or(usize::MAX);
    if size > ENUMERATION_BUDGET {
        return Err(Error::ResourceBudget {
            what: "joint Fock configurations (use the Monte Carlo estimator)",
            required: size,
            limit: ENUMERATION_BUDGET,
        });
    }
    // per mode: (weight, rate factor) for each level
    let per_mode: Vec<Vec<(f64, f64)>> = cuts
        .iter()
        .enumerate()
        .map(|(m, &c)| {
            let w = ThermalMode { nbar: model.nbars[m], n_cut: c }.weights();
            let total: f64 = w.iter().sum();
            let f = carrier_factors(c, model.modes.lamb_dicke[(ion, m)]);
            w.iter().zip(f).map(|(p, f)| (p / total, f)).collect()
        })
        .collect();
    let mut terms = vec![(1.0, model.omega0[ion])];
    for levels in &per_mode {
        if levels.len() == 1 {
            let (p, f) = levels[0];
            terms.iter_mut().for_each(|t| *t = (t.0 * p, t.1 * f));
            continue;
        }
        let mut next = Vec::with_capacity(terms.len() * levels.len());
        for &(w, r) in &terms {
            for &(p, f) in levels {
                next.push((w * p, r * f));
            }
        }
        terms = next;
    }
    Ok(FlopTrace::exact(Some(ion), times, flop(&terms, times)))
}

fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sample from `P(n) = (1-q) qⁿ` by inversion.
fn geometric(rng: &mut ChaCha8Rng, nbar: f64) -> usize {
    if nbar == 0.0 {
        return 0;
    }
    let q = nbar / (nbar + 1.0);
    let u = 1.0 - uniform01(rng);
    (u.ln() / q.ln()).floor() as usize
}

/// Monte Carlo estimate of the same sum: joint configurations drawn from
/// the product thermal law, one ChaCha stream per ion.
pub fn multimode_carrier_mc(
    model: &CarrierModel,
    ion: usize,
    times: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<FlopTrace> {
    model.check_ion(ion)?;
    check_times(times)?;
    if n_samples < MIN_MC_SAMPLES {
        return Err(Error::invalid("n_samples", "need at least 1000 samples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ion as u64);

    let etas: Vec<f64> = (0..model.modes.n_modes()).map(|m| model.modes.lamb_dicke[(ion, m)]).collect();
    let tables: Vec<Vec<f64>> = model
        .cutoffs()
        .iter()
        .zip(&etas)
        .map(|(&c, &eta)| carrier_factors(c, eta))
        .collect();
    let factor = |m: usize, n: usize| tables[m].get(n).copied().unwrap_or_else(|| displacement_element(n, 0, etas[m]));

    let mut sum = vec![0.0; times.len()];
    let mut sum_sq = vec![0.0; times.len()];
    for _ in 0..n_samples {
        let mut rate = model.omega0[ion];
        for (m, &nbar) in model.nbars.iter().enumerate() {
            rate *= factor(m, geometric(&mut rng, nbar));
        }
        for (k, t) in times.iter().enumerate() {
            let x = 0.5 * (1.0 + (rate * t).cos());
            sum[k] += x;
            sum_sq[k] += x * x;
        }
    }
    let n = n_samples as f64;
    let mut p = Vec::with_capacity(times.len());
    let mut se = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let mean = sum[k] / n;
        let var = ((sum_sq[k] - n * mean * mean) / (n - 1.0)).max(0.0);
        p.push(mean);
        se.push((var / n).sqrt());
    }
    Ok(FlopTrace {
        ion: Some(ion),
        times: times.to_vec(),
        p_excited: p,
        std_error: se,
    })
}

/// Damped flop `½[1 + A e^{-t/τ} cos(Ω t)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedFlop {
    pub amplitude: f64,
    pub tau: f64,
    pub omega: f64,
}

impl DampedFlop {
    pub fn eval(&self, t: f64) -> f64 {
        0.5 * (1.0 + self.amplitude * (-t / self.tau).exp() * (self.omega * t).cos())
    }
}

/// Least-squares damped-cosine fit started from a rate guess.
pub fn fit_damped_flop(trace: &FlopTrace, omega_guess: f64) -> Result<DampedFlop> {
    if trace.times.len() < 4 {
        return Err(Error::invalid("trace", "need at least four points"));
    }
    let span = trace.times.iter().cloned().fold(0.0, f64::max);
    if !(span > 0.0 && omega_guess > 0.0) {
        return Err(Error::invalid("trace", "need positive times and rate guess"));
    }
    // parameters: amplitude, ln τ, Ω
    let sse = |x: &[f64]| {
        let f = DampedFlop {
            amplitude: x[0],
            tau: x[1].exp(),
            omega: x[2],
        };
        trace.times.iter().zip(&trace.p_excited).map(|(t, p)| (f.eval(*t) - p).powi(2)).sum::<f64>()
    };
    let m = nelder_mead(
        sse,
        &[1.0, span.ln(), omega_guess],
        &[0.2, 1.0, 0.1 * omega_guess],
        NelderMeadOptions::default(),
    )?;
    Ok(DampedFlop {
        amplitude: m.x[0],
        tau: m.x[1].exp(),
        omega: m.x[2],
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComFitOptions {
    pub com_mode: usize,
    pub nbar_max: f64,
    pub step: f64,
}

impl Default for ComFitOptions {
    fn default() -> Self {
        ComFitOptions {
            com_mode: 0,
            nbar_max: 5.0,
            step: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComFit {
    pub nbar: f64,
    /// `n̄ ± one standard error` from the curvature of the objective.
    pub interval: (f64, f64),
    pub sse: f64,
    /// The objective barely changes over the grid: the traces do not
    /// constrain `n̄`.
    pub flat: bool,
    pub objective: Vec<(f64, f64)>,
}

/// Grid search for the COM occupation that best reproduces `traces`, all
/// other modes held in the ground state.
pub fn fit_com_nbar(traces: &[FlopTrace], template: &CarrierModel, opts: ComFitOptions) -> Result<ComFit> {
    if traces.is_empty() {
        return Err(Error::invalid("traces", "need at least one trace"));
    }
    if traces.iter().any(|t| t.ion.is_none() || t.times.len() != t.p_excited.len()) {
        return Err(Error::invalid("traces", "each trace needs an ion index and matching lengths"));
    }
    if !(opts.step > 0.0 && opts.nbar_max >= 0.0) {
        return Err(Error::invalid("grid", "need step > 0 and nbar_max >= 0"));
    }
    let n_grid = (opts.nbar_max / opts.step).round() as usize;
    let mut objective = Vec::with_capacity(n_grid + 1);
    let mut n_points = 0usize;
    for k in 0..=n_grid {
        let nbar = k as f64 * opts.step;
        let model = template.with_single_thermal(opts.com_mode, nbar)?;
        let mut sse = 0.0;
        n_points = 0;
        for tr in traces {
            let sim = multimode_carrier_exact(&model, tr.ion.unwrap(), &tr.times)?;
            sse += sim.p_excited.iter().zip(&tr.p_excited).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            n_points += tr.times.len();
        }
        objective.push((nbar, sse));
    }
    let (best, &(nbar, sse)) = objective
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .unwrap();
    let hi = objective.iter().map(|o| o.1).fold(0.0, f64::max);
    let flat = hi - sse <= 1e-9 * (1.0 + sse);

    // SSE ≈ SSE_min + c (n̄ - n̂)²; one standard error is √(σ²/c)
    let h = opts.step;
    let at = |i: usize| objective[i].1;
    let c = if objective.len() < 3 {
        0.0
    } else if best == 0 {
        (at(1) - at(0)) / (h * h)
    } else if best == objective.len() - 1 {
        (at(best - 1) - at(best)) / (h * h)
    } else {
        (at(best + 1) - 2.0 * at(best) + at(best - 1)) / (2.0 * h * h)
    };
    let sigma2 = sse / (n_points.saturating_sub(1).max(1)) as f64;
    let half = if c > 0.0 { (sigma2 / c).sqrt() } else { f64::INFINITY };
    Ok(ComFit {
        nbar,
        interval: ((nbar - half).max(0.0), nbar + half),
        sse,
        flat,
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{modes, Axis, IonSpecies, TrapConfig};
    use crate::constants::khz;

    fn times(n: usize, t_max: f64) -> Vec<f64> {
        (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn single_ion_limits() {
        let om = khz(300.0);
        let ts = times(50, 2e-5);
        let tr = single_ion_carrier(2.0, 0.0, om, &ts).unwrap();
        for (t, p) in ts.iter().zip(&tr.p_excited) {
            assert!((p - 0.5 * (1.0 + (om * t).cos())).abs() < 1e-12);
        }
        let tr = single_ion_carrier(0.0, 0.78, om, &ts).unwrap();
        let w = om * (-0.5f64 * 0.78 * 0.78).exp();
        for (t, p) in ts.iter().zip(&tr.p_excited) {
            assert!((p - 0.5 * (1.0 + (w * t).cos())).abs() < 1e-12);
        }
        assert_eq!(tr.p_excited[0], 1.0);
    }

    #[test]
    fn ground_rate_of_single_mode() {
        let cfg = TrapConfig::new(IonSpecies::beryllium9(), 1, khz(735.0), khz(7500.0)).unwrap();
        let m = modes(&cfg, Axis::Axial).unwrap();
        let eta = m.lamb_dicke[(0, 0)];
        let r = carrier_rabi_ground(&m, 0, 2.0).unwrap();
        assert!((r - 2.0 * (-0.5 * eta * eta).exp()).abs() < 1e-15);
        assert!(carrier_rabi_ground(&m, 1, 2.0).is_err());
    }

    #[test]
    fn exact_budget_and_mc_floor() {
        let cfg = TrapConfig::new(IonSpecies::beryllium9(), 6, khz(735.0), khz(7500.0)).unwrap();
        let m = modes(&cfg, Axis::Axial).unwrap();
        let model = CarrierModel::uniform(m, vec![3.0; 6], khz(300.0)).unwrap();
        assert!(matches!(
            multimode_carrier_exact(&model, 0, &[0.0]),
            Err(Error::ResourceBudget { .. })
        ));
        assert!(multimode_carrier_mc(&model, 0, &[0.0], 10, 1).is_err());
    }

    #[test]
    fn mc_is_reproducible_and_exact_at_zero_temperature() {
        let cfg = TrapConfig::new(IonSpecies::beryllium9(), 3, khz(735.0), khz(7500.0)).unwrap();
        let m = modes(&cfg, Axis::Axial).unwrap();
        let ts = times(20, 1e-5);
        let cold = CarrierModel::uniform(m.clone(), vec![0.0; 3], khz(300.0)).unwrap();
        let mc = multimode_carrier_mc(&cold, 1, &ts, 1000, 7).unwrap();
        let ex = multimode_carrier_exact(&cold, 1, &ts).unwrap();
        for k in 0..ts.len() {
            assert!((mc.p_excited[k] - ex.p_excited[k]).abs() < 1e-12);
            assert!(mc.std_error[k] < 1e-7);
        }
        let warm = CarrierModel::uniform(m, vec![0.5; 3], khz(300.0)).unwrap();
        let a = multimode_carrier_mc(&warm, 1, &ts, 2000, 7).unwrap();
        let b = multimode_carrier_mc(&warm, 1, &ts, 2000, 7).unwrap();
        assert_eq!(a, b);
        let c = multimode_carrier_mc(&warm, 2, &ts, 2000, 7).unwrap();
        assert_ne!(a.p_excited, c.p_excited);
    }

    #[test]
    fn damped_flop_fit_recovers_parameters() {
        let truth = DampedFlop {
            amplitude: 0.9,
            tau: 2e-5,
            omega: khz(150.0),
        };
        let ts = times(80, 4e-5);
        let tr = FlopTrace::exact(Some(0), &ts, ts.iter().map(|t| truth.eval(*t)).collect());
        let f = fit_damped_flop(&tr, khz(140.0)).unwrap();
        assert!((f.amplitude - 0.9).abs() < 1e-4);
        assert!((f.tau / 2e-5 - 1.0).abs() < 1e-3);
        assert!((f.omega / truth.omega - 1.0).abs() < 1e-5);
    }
}
