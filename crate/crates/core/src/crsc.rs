//! Continuous sideband cooling of a single ion.
//!
//! Four internal levels: `|1⟩ = ↓`, `|2⟩ = ↑`, `|3⟩ = aux`, `|4⟩ = e`.
//! A red-sideband Raman drive couples 1-2, two pump beams couple 2-4 and
//! 3-4, and `|4⟩` decays to all three ground levels. The motion enters
//! only through the thermally averaged sideband coupling `Ω₁₂(n̄)`, which is
//! refreshed from the current `n̄` at every integrator step while `n̄`
//! itself drains in proportion to the excited population.
//!
//! Indices in code are zero-based (`|1⟩` is index 0).

use alloc::vec::Vec;

use num_complex::Complex64;

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::constants::{khz, BE9_LINEWIDTH_HZ};
use crate::linalg::hermitian_eigenvalues;
use crate::specfun::{RsbIndex, RsbRateTable};
use crate::{Error, Result};

type Mat4 = [[Complex64; 4]; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Decay branching of `|4⟩` into `|1⟩, |2⟩, |3⟩`.
pub const BE9_BRANCHING: [f64; 3] = [2.0 / 3.0, 1.0 / 4.0, 1.0 / 12.0];

pub const HERMITICITY_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Drive and decay parameters of the four-level model, all in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourLevelParams {
    pub omega12: f64,
    pub omega24: f64,
    pub omega34: f64,
    /// Detuning of the 3-4 pump; enters the Hamiltonian as `-δ` on `|3⟩`.
    pub delta: f64,
    pub gamma: f64,
    pub branching: [f64; 3],
}

impl FourLevelParams {
    /// Be⁺ pumping defaults with the given sideband coupling.
    pub fn beryllium(omega12: f64) -> Self {
        FourLevelParams {
            omega12,
            omega24: khz(700.0),
            omega34: khz(600.0),
            delta: khz(-10.0),
            gamma: crate::constants::hz(BE9_LINEWIDTH_HZ),
            branching: BE9_BRANCHING,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega12, self.omega24, self.omega34, self.delta, self.gamma]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("params", "non-finite entry"));
        }
        if self.gamma <= 0.0 {
            return Err(Error::invalid("gamma", "must be positive"));
        }
        if self.branching.iter().any(|b| !(*b >= 0.0)) {
            return Err(Error::invalid("branching", "fractions must be non-negative"));
        }
        if (self.branching.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("branching", "fractions must sum to 1"));
        }
        Ok(())
    }

    /// Fastest rate in the model; sets the integrator step bound.
    pub fn max_rate(&self) -> f64 {
        [self.omega12, self.omega24, self.omega34, self.delta, self.gamma]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Largest step accepted by [`evolve`] for these parameters.
pub fn max_step(p: &FourLevelParams) -> f64 {
    0.05 / p.max_rate()
}

/// Density matrix of the four-level system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix4 {
    pub m: Mat4,
}

impl DensityMatrix4 {
    pub fn zero() -> Self {
        DensityMatrix4 { m: [[ZERO; 4]; 4] }
    }

    /// Pure state `|k⟩⟨k|`, zero-based.
    pub fn pure_level(k: usize) -> Self {
        let mut r = Self::zero();
        r.m[k][k] = Complex64::new(1.0, 0.0);
        r
    }

    pub fn from_matrix(m: Mat4) -> Self {
        DensityMatrix4 { m }
    }

    pub fn trace(&self) -> Complex64 {
        (0..4).map(|i| self.m[i][i]).sum()
    }

    pub fn population(&self, k: usize) -> f64 {
        self.m[k][k].re
    }

    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.m[i][j] - self.m[j][i].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let flat: Vec<Complex64> = self.m.iter().flatten().copied().collect();
        let ev = hermitian_eigenvalues(&flat, 4)?;
        Ok(ev.iter().copied().fold(f64::INFINITY, f64::min))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        worst
    }

    /// Checks Hermiticity, unit trace and positivity, naming the first
    /// violated invariant. `step` is reported back in the error.
    pub fn check(&self, step: f64) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > HERMITICITY_TOL {
            return Err(Error::Integration {
                invariant: "hermiticity",
                deviation: herm,
                step,
            });
        }
        let tr = (self.trace() - 1.0).norm();
        if tr > TRACE_TOL {
            return Err(Error::Integration {
                invariant: "unit trace",
                deviation: tr,
                step,
            });
        }
        let min = self.min_eigenvalue()?;
        if min < -POSITIVITY_TOL {
            return Err(Error::Integration {
                invariant: "positivity",
                deviation: -min,
                step,
            });
        }
        Ok(())
    }

    fn axpy(&self, a: f64, x: &Self) -> Self {
        let mut out = *self;
        for i in 0..4 {
            for j in 0..4 {
                out.m[i][j] += x.m[i][j] * a;
            }
        }
        out
    }
}

/// Hamiltonian in angular-frequency units (ħ = 1).
pub fn build_hamiltonian(p: &FourLevelParams) -> Mat4 {
    let c = |v: f64| Complex64::new(v, 0.0);
    let mut h = [[ZERO; 4]; 4];
    h[0][1] = c(0.5 * p.omega12);
    h[1][0] = h[0][1];
    h[1][3] = c(0.5 * p.omega24);
    h[3][1] = h[1][3];
    h[2][3] = c(0.5 * p.omega34);
    h[3][2] = h[2][3];
    h[2][2] = c(-p.delta);
    h
}

/// `dρ/dt = -i[H, ρ] + Σ_k (C_k ρ C_k† - ½{C_k†C_k, ρ})` with
/// `C_k = √(b_k Γ) |k⟩⟨4|`.
pub fn lindblad_rhs(rho: &DensityMatrix4, p: &FourLevelParams) -> DensityMatrix4 {
    let h = build_hamiltonian(p);
    rhs_with(&h, p.gamma, &p.branching, rho)
}

fn rhs_with(h: &Mat4, gamma: f64, branching: &[f64; 3], rho: &DensityMatrix4) -> DensityMatrix4 {
    let r = &rho.m;
    let mut out = [[ZERO; 4]; 4];
    let minus_i = Complex64::new(0.0, -1.0);
    for i in 0..4 {
        for j in 0..4 {
            let mut comm = ZERO;
            for k in 0..4 {
                comm += h[i][k] * r[k][j] - r[i][k] * h[k][j];
            }
            out[i][j] = minus_i * comm;
        }
    }
    // Σ C_k†C_k = Γ|4⟩⟨4|, so the anticommutator only touches row and
    // column 4.
    for j in 0..4 {
        out[3][j] -= r[3][j] * (0.5 * gamma);
        out[j][3] -= r[j][3] * (0.5 * gamma);
    }
    for (k, b) in branching.iter().enumerate() {
        out[k][k] += r[3][3] * (b * gamma);
    }
    DensityMatrix4 { m: out }
}

fn check_step(p: &FourLevelParams, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    if dt > max_step(p) * (1.0 + 1e-12) {
        return Err(Error::invalid("dt", "exceeds 0.05 / fastest rate"));
    }
    Ok(())
}

/// One RK4 step; also returns the stage-weighted `ρ₄₄`, which is the RK4
/// increment (over `dt`) of any quantity driven by `ρ₄₄` alone.
fn rk4_step(h: &Mat4, p: &FourLevelParams, rho: &DensityMatrix4, dt: f64) -> (DensityMatrix4, f64) {
    let f = |r: &DensityMatrix4| rhs_with(h, p.gamma, &p.branching, r);
    let k1 = f(rho);
    let y2 = rho.axpy(0.5 * dt, &k1);
    let k2 = f(&y2);
    let y3 = rho.axpy(0.5 * dt, &k2);
    let k3 = f(&y3);
    let y4 = rho.axpy(dt, &k3);
    let k4 = f(&y4);
    let mut out = *rho;
    for i in 0..4 {
        for j in 0..4 {
            out.m[i][j] += (k1.m[i][j] + (k2.m[i][j] + k3.m[i][j]) * 2.0 + k4.m[i][j]) * (dt / 6.0);
        }
    }
    let rho44 = (rho.population(3) + 2.0 * (y2.population(3) + y3.population(3)) + y4.population(3)) / 6.0;
    (out, rho44)
}

/// Integrates for time `t` with fixed RK4 steps of at most `dt` (the last
/// interval is split evenly so the end time is hit exactly).
pub fn evolve(rho0: &DensityMatrix4, p: &FourLevelParams, t: f64, dt: f64) -> Result<DensityMatrix4> {
    p.validate()?;
    check_step(p, dt)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", "must be non-negative"));
    }
    if t == 0.0 {
        return Ok(*rho0);
    }
    let steps = (t / dt).ceil() as usize;
    let h_step = t / steps as f64;
    let h = build_hamiltonian(p);
    let mut rho = *rho0;
    for _ in 0..steps {
        rho = rk4_step(&h, p, &rho, h_step).0;
    }
    rho.check(h_step)?;
    Ok(rho)
}

/// Phonon drain per unit excited population, `dn̄/dt = -K ρ₄₄`.
///
/// The drain factor is `Γ₄₁/3` with `Γ₄₁` left undefined; the
/// variants are the readings of that symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoolingRate {
    /// `Γ₄₁ = Γ`: `K = Γ/3`.
    #[default]
    TotalLinewidth,
    /// `Γ₄₁ = b₁Γ`: `K = b₁Γ/3`.
    PartialLinewidth,
    /// One phonon per photon scattered into `|1⟩`: `K = b₁Γ`.
    PhotonCounting,
}

impl CoolingRate {
    pub fn factor(self, gamma: f64, branching: &[f64; 3]) -> f64 {
        match self {
            CoolingRate::TotalLinewidth => gamma / 3.0,
            CoolingRate::PartialLinewidth => branching[0] * gamma / 3.0,
            CoolingRate::PhotonCounting => branching[0] * gamma,
        }
    }
}

/// Everything a cooling run needs except the initial `n̄` and the clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrscConfig {
    pub eta: f64,
    pub omega0: f64,
    /// Pump Rabi frequencies at unit pump scale.
    pub omega24: f64,
    pub omega34: f64,
    pub delta: f64,
    pub gamma: f64,
    pub branching: [f64; 3],
    pub rate: CoolingRate,
    pub index: RsbIndex,
    /// Multiplies both pump Rabi frequencies.
    pub pump_scale: f64,
}

impl CrscConfig {
    pub fn beryllium(eta: f64, omega0: f64) -> Self {
        let p = FourLevelParams::beryllium(0.0);
        CrscConfig {
            eta,
            omega0,
            omega24: p.omega24,
            omega34: p.omega34,
            delta: p.delta,
            gamma: p.gamma,
            branching: p.branching,
            rate: CoolingRate::default(),
            index: RsbIndex::default(),
            pump_scale: 1.0,
        }
    }

    pub fn params(&self, omega12: f64) -> FourLevelParams {
        FourLevelParams {
            omega12,
            omega24: self.omega24 * self.pump_scale,
            omega34: self.omega34 * self.pump_scale,
            delta: self.delta,
            gamma: self.gamma,
            branching: self.branching,
        }
    }

    /// Step bound for this configuration (the sideband coupling never
    /// exceeds `Ω₀`).
    pub fn max_step(&self) -> f64 {
        max_step(&self.params(self.omega0))
    }
}

/// Sampled `n̄(t)` and `ρ₄₄(t)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoolingTrajectory {
    pub times: Vec<f64>,
    pub nbar: Vec<f64>,
    pub rho44: Vec<f64>,
}

impl CoolingTrajectory {
    pub fn final_nbar(&self) -> f64 {
        self.nbar.last().copied().unwrap_or(f64::NAN)
    }

    /// First time `n̄` falls to `target`, linearly interpolated between
    /// samples.
    pub fn time_to(&self, target: f64) -> Option<f64> {
        crossing_time(&self.times, &self.nbar, target)
    }

    /// `n̄` at time `t`, linearly interpolated.
    pub fn nbar_at(&self, t: f64) -> Option<f64> {
        let i = self.times.iter().position(|&s| s >= t)?;
        if i == 0 {
            return self.nbar.first().copied();
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        Some(self.nbar[i - 1] + w * (self.nbar[i] - self.nbar[i - 1]))
    }
}

pub(crate) fn crossing_time(times: &[f64], values: &[f64], target: f64) -> Option<f64> {
    let i = values.iter().position(|&v| v <= target)?;
    if i == 0 {
        return times.first().copied();
    }
    let (v0, v1) = (values[i - 1], values[i]);
    let (t0, t1) = (times[i - 1], times[i]);
    Some(t0 + (v0 - target) / (v0 - v1) * (t1 - t0))
}

/// Number of steps between stored samples when sampling every
/// `sample_interval`.
fn record_stride(dt: f64, sample_interval: f64) -> usize {
    ((sample_interval / dt).round() as usize).max(1)
}

/// Default spacing of stored samples, s.
pub const SAMPLE_INTERVAL: f64 = 1e-7;

/// Cooling run with Be⁺ pumping defaults (see [`cooling_trajectory_with`]).
pub fn cooling_trajectory(
    nbar0: f64,
    eta: f64,
    omega0: f64,
    pump_scale: f64,
    duration: f64,
    dt: f64,
) -> Result<CoolingTrajectory> {
    let cfg = CrscConfig {
        pump_scale,
        ..CrscConfig::beryllium(eta, omega0)
    };
    cooling_trajectory_with(&cfg, nbar0, duration, dt)
}

/// Integrates `(ρ, n̄)` from `|1⟩⟨1|` and `n̄₀`. Within a step `Ω₁₂` is
/// frozen at its value for the `n̄` at the start of the step; `n̄` is
/// advanced with the same RK4 stages as `ρ` and floored at 0.
pub fn cooling_trajectory_with(
    cfg: &CrscConfig,
    nbar0: f64,
    duration: f64,
    dt: f64,
) -> Result<CoolingTrajectory> {
    if !(nbar0 > 0.0 && nbar0.is_finite()) {
        return Err(Error::invalid("nbar0", "must be positive"));
    }
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::invalid("duration", "must be non-negative"));
    }
    if !(cfg.pump_scale >= 0.0) || !(cfg.omega0 >= 0.0) {
        return Err(Error::invalid("config", "pump scale and omega0 must be non-negative"));
    }
    let p0 = cfg.params(cfg.omega0);
    p0.validate()?;
    check_step(&p0, dt)?;

    let table = RsbRateTable::for_nbar(cfg.eta, cfg.omega0, cfg.index, nbar0);
    let k_drain = cfg.rate.factor(cfg.gamma, &cfg.branching);
    let steps = (duration / dt).round() as usize;
    let stride = record_stride(dt, SAMPLE_INTERVAL);

    let mut traj = CoolingTrajectory::default();
    let mut rho = DensityMatrix4::pure_level(0);
    let mut nbar = nbar0;
    let mut push = |t: f64, nbar: f64, rho: &DensityMatrix4| {
        traj.times.push(t);
        traj.nbar.push(nbar);
        traj.rho44.push(rho.population(3));
    };
    push(0.0, nbar, &rho);

    let mut p = p0;
    for step in 1..=steps {
        p.omega12 = table.rate(nbar);
        let h = build_hamiltonian(&p);
        let (next, rho44) = rk4_step(&h, &p, &rho, dt);
        let drained = k_drain * dt * rho44;
        rho = next;
        nbar = (nbar - drained).max(0.0);
        if step % stride == 0 || step == steps {
            rho.check(dt)?;
            push(step as f64 * dt, nbar, &rho);
        }
    }
    Ok(traj)
}
