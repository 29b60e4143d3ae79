//! Heating budgets that bound the final temperature: field-noise heating
//! against cooling rate, photon recoil, and background-gas collisions.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::constants::{HBAR, K_B};
use crate::{Error, Result};

/// Axial recoil per scattered photon in units of `η̃²`: ½ from absorption
/// along the beam plus ⅓ from isotropic emission.
pub const RECOIL_PER_PHOTON: f64 = 0.5 + 1.0 / 3.0;
/// Photons scattered per optical-pumping spin reset.
pub const PHOTONS_PER_RESET: f64 = 1.5;
/// Mean energy deposited by one H₂ collision at room temperature, J.
pub const H2_COLLISION_ENERGY: f64 = 6.2e-22;

/// Cooling and heating rates of one mode and the resulting steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatingBudget {
    pub cooling_rate: f64,
    pub heating_rate: f64,
    pub equilibrium_nbar: f64,
}

impl HeatingBudget {
    pub fn new(cooling_rate: f64, heating_rate: f64) -> Self {
        HeatingBudget {
            cooling_rate,
            heating_rate,
            equilibrium_nbar: heating_rate / cooling_rate,
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, "must be positive"))
    }
}

/// Carries single-ion rates measured at `omega1` to the COM mode of an
/// `n_ions` chain at `omega2`:
///
/// ```text
/// R_c = R_c0 √(ω₁/ω₂) / ln N,    R_h = N R_h0 (ω₁/ω₂)^{α+1}
/// ```
///
/// The cooling rate divides the laser power among the `∝ ln N` tones; for a
/// single ion there is nothing to divide and the `ln N` is dropped. `n_ions`
/// is real so the formula can be probed between integers.
pub fn field_noise_extrapolation(
    rc0: f64,
    rh0: f64,
    omega1: f64,
    omega2: f64,
    n_ions: f64,
    alpha: f64,
) -> Result<HeatingBudget> {
    positive("rc0", rc0)?;
    positive("rh0", rh0)?;
    positive("omega1", omega1)?;
    positive("omega2", omega2)?;
    if !(n_ions >= 1.0 && n_ions.is_finite()) {
        return Err(Error::invalid("n_ions", "must be at least 1"));
    }
    let ratio = omega1 / omega2;
    let split = if n_ions == 1.0 { 1.0 } else { n_ions.ln() };
    Ok(HeatingBudget::new(
        rc0 * ratio.sqrt() / split,
        n_ions * rh0 * ratio.powf(alpha + 1.0),
    ))
}

/// Single-photon Lamb-Dicke parameter `η̃ = η/√2`.
pub fn single_photon_eta(eta: f64) -> f64 {
    eta / core::f64::consts::SQRT_2
}

/// Phonons added by `photons` scattered photons.
pub fn photon_recoil(eta: f64, photons: f64) -> f64 {
    let e = single_photon_eta(eta);
    photons * RECOIL_PER_PHOTON * e * e
}

/// Phonons added by the optical-pumping reset after each removed phonon:
/// `1.25 η̃²`.
pub fn recoil_per_cooling_cycle(eta: f64) -> f64 {
    photon_recoil(eta, PHOTONS_PER_RESET)
}

/// Phonons added by the final clean-up pumping pulse.
pub fn cleanup_recoil(eta: f64, photons: f64) -> Result<f64> {
    if !(photons >= 0.0) {
        return Err(Error::invalid("photons", "must be non-negative"));
    }
    Ok(photon_recoil(eta, photons))
}

/// Heating rate (phonons/s) from photons scattered at `scatter_rate`.
pub fn off_resonant_heating_rate(eta: f64, scatter_rate: f64) -> f64 {
    photon_recoil(eta, scatter_rate)
}

/// Two-level scattering rate `(Γ/2) s / (1 + s + (2Δ/Γ)²)`, all in rad/s.
pub fn scatter_rate_two_level(s: f64, detuning: f64, gamma: f64) -> f64 {
    let x = 2.0 * detuning / gamma;
    0.5 * gamma * s / (1.0 + s + x * x)
}

/// Photon scattering rate from off-resonant carrier excitation:
/// `1.5 Ω_off / 2π` with `Ω_off = Ω_c³ / (Ω_c² + Δ²)`.
pub fn carrier_off_resonant_rate(omega_c: f64, detuning: f64) -> f64 {
    let w2 = omega_c * omega_c;
    let off = omega_c * w2 / (w2 + detuning * detuning);
    PHOTONS_PER_RESET * off / (2.0 * core::f64::consts::PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelUnit {
    PhononsPerCycle,
    PhononsPerSecond,
}

/// One labeled recoil contribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub label: &'static str,
    pub value: f64,
    pub unit: ChannelUnit,
}

/// Inputs of the recoil channels other than `η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoilParams {
    pub cleanup_photons: f64,
    /// Scattering rate of the detuned pump on the cycling transition, 1/s.
    pub doppler_scatter_rate: f64,
    /// Carrier Rabi frequency and its detuning from the driven sideband,
    /// rad/s.
    pub carrier_rabi: f64,
    pub carrier_detuning: f64,
}

pub fn recoil_channels(eta: f64, p: &RecoilParams) -> Result<Vec<Channel>> {
    Ok(alloc::vec![
        Channel {
            label: "spin_reset",
            value: recoil_per_cooling_cycle(eta),
            unit: ChannelUnit::PhononsPerCycle,
        },
        Channel {
            label: "cleanup_pumping",
            value: cleanup_recoil(eta, p.cleanup_photons)?,
            unit: ChannelUnit::PhononsPerCycle,
        },
        Channel {
            label: "doppler_off_resonant",
            value: off_resonant_heating_rate(eta, p.doppler_scatter_rate),
            unit: ChannelUnit::PhononsPerSecond,
        },
        Channel {
            label: "carrier_off_resonant",
            value: off_resonant_heating_rate(
                eta,
                carrier_off_resonant_rate(p.carrier_rabi, p.carrier_detuning),
            ),
            unit: ChannelUnit::PhononsPerSecond,
        },
    ])
}

/// How the per-experiment collision probability becomes a data fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeltModel {
    /// Fraction equals the expected number of collisions.
    #[default]
    Linear,
    /// `1 - exp(-expected)`.
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionBudget {
    /// Energy per mode per collision, as an angular frequency.
    pub omega_bgc: f64,
    pub nbar_equiv: f64,
    pub collisions_per_s: f64,
    pub collisions_per_experiment: f64,
    pub melted_fraction: f64,
}

/// Spreads the collision energy over the `3N` modes and counts collisions.
pub fn collision_budget(
    e_bgc: f64,
    n_ions: usize,
    omega_ref: f64,
    rate_per_ion: f64,
    experiment_time: f64,
    model: MeltModel,
) -> Result<CollisionBudget> {
    positive("e_bgc", e_bgc)?;
    positive("omega_ref", omega_ref)?;
    positive("experiment_time", experiment_time)?;
    if !(rate_per_ion >= 0.0) {
        return Err(Error::invalid("rate_per_ion", "must be non-negative"));
    }
    if n_ions == 0 {
        return Err(Error::invalid("n_ions", "must be positive"));
    }
    let omega_bgc = e_bgc / (3.0 * n_ions as f64 * HBAR);
    let collisions_per_s = rate_per_ion * n_ions as f64;
    let per_exp = collisions_per_s * experiment_time;
    let melted_fraction = match model {
        MeltModel::Linear => per_exp,
        MeltModel::Poisson => -(-per_exp).exp_m1(),
    };
    Ok(CollisionBudget {
        omega_bgc,
        nbar_equiv: omega_bgc / omega_ref,
        collisions_per_s,
        collisions_per_experiment: per_exp,
        melted_fraction,
    })
}

/// `4 m_g m_i / (m_g + m_i)²`: fraction of kinetic energy transferred in a
/// head-on elastic collision.
pub fn mass_factor(m_gas: f64, m_ion: f64) -> f64 {
    4.0 * m_gas * m_ion / ((m_gas + m_ion) * (m_gas + m_ion))
}

/// `(3/2) k_B T · mass_factor · g`.
pub fn hard_sphere_mean_energy(t_gas: f64, m_gas: f64, m_ion: f64, g: f64) -> Result<f64> {
    if !(t_gas >= 0.0) {
        return Err(Error::invalid("t_gas", "must be non-negative"));
    }
    positive("m_gas", m_gas)?;
    positive("m_ion", m_ion)?;
    Ok(1.5 * K_B * t_gas * mass_factor(m_gas, m_ion) * g)
}

/// Geometric factor that makes 300 K H₂ on Be⁺ deposit
/// [`H2_COLLISION_ENERGY`]. It is fitted to that one number, not derived.
pub fn default_geometric_factor() -> f64 {
    use crate::constants::{AMU, BE9_ION_MASS_AMU, H2_MASS_AMU};
    let m_gas = H2_MASS_AMU * AMU;
    let m_ion = BE9_ION_MASS_AMU * AMU;
    H2_COLLISION_ENERGY / (1.5 * K_B * 300.0 * mass_factor(m_gas, m_ion))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{khz, mhz};

    #[test]
    fn identity_point() {
        let b = field_noise_extrapolation(3.2e4, 2e2, 1.0, 1.0, core::f64::consts::E, 1.0).unwrap();
        assert!((b.cooling_rate - 3.2e4).abs() < 1e-9);
        let single = field_noise_extrapolation(3.2e4, 2e2, 2.0, 1.0, 1.0, 1.0).unwrap();
        assert!((single.cooling_rate - 3.2e4 * 2f64.sqrt()).abs() < 1e-9);
        assert!((single.heating_rate - 8e2).abs() < 1e-9);
        assert!(field_noise_extrapolation(3.2e4, 2e2, 1.0, 1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn heating_is_linear_in_n() {
        let r = |n: f64| {
            field_noise_extrapolation(3.2e4, 2e2, khz(735.0), khz(272.0), n, 1.0)
                .unwrap()
                .heating_rate
        };
        assert!((r(24.0) / r(12.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_recoil() {
        assert_eq!(recoil_per_cooling_cycle(0.0), 0.0);
        assert_eq!(cleanup_recoil(0.78, 0.0).unwrap(), 0.0);
        assert_eq!(off_resonant_heating_rate(0.0, 125e3), 0.0);
    }

    #[test]
    fn reset_is_three_cleanups() {
        for eta in [0.1, 0.78, 1.3] {
            let a = recoil_per_cooling_cycle(eta);
            let b = cleanup_recoil(eta, 0.5).unwrap();
            assert!((a - 3.0 * b).abs() < 1e-15);
        }
    }

    #[test]
    fn scatter_rate_limits() {
        let g = mhz(19.4);
        // saturated on resonance: Γ/2
        assert!((scatter_rate_two_level(1e12, 0.0, g) - g / 2.0).abs() < 1e-3 * g);
        assert!((scatter_rate_two_level(1.0, 0.0, g) - g / 4.0).abs() < 1e-9 * g);
        // far off resonance the carrier leak vanishes
        assert!(carrier_off_resonant_rate(khz(300.0), mhz(1e3)) < 1.0);
    }

    #[test]
    fn collisions() {
        let b = collision_budget(6.2e-22, 24, khz(272.0), 0.0, 1e-2, MeltModel::Linear).unwrap();
        assert_eq!(b.collisions_per_s, 0.0);
        let lin = collision_budget(6.2e-22, 24, khz(272.0), 0.007, 1e-2, MeltModel::Linear).unwrap();
        let poi = collision_budget(6.2e-22, 24, khz(272.0), 0.007, 1e-2, MeltModel::Poisson).unwrap();
        assert!(poi.melted_fraction < lin.melted_fraction);
        assert!((poi.melted_fraction - lin.melted_fraction).abs() < 1e-5);
    }

    #[test]
    fn hard_sphere() {
        let e = hard_sphere_mean_energy(300.0, 1.0, 1.0, 1.0).unwrap();
        assert!((e - 1.5 * K_B * 300.0).abs() < 1e-30);
        assert_eq!(hard_sphere_mean_energy(0.0, 1.0, 9.0, 0.2).unwrap(), 0.0);
        let g = default_geometric_factor();
        assert!(g > 0.1 && g < 0.2);
    }

    #[test]
    fn units_rescale() {
        // doubling both frequencies leaves the extrapolation unchanged
        let a = field_noise_extrapolation(3.2e4, 2e2, 2.0, 1.0, 24.0, 1.0).unwrap();
        let b = field_noise_extrapolation(3.2e4, 2e2, 4.0, 2.0, 24.0, 1.0).unwrap();
        assert!((a.equilibrium_nbar - b.equilibrium_nbar).abs() < 1e-12);
        // rates scale with the time unit
        let c = field_noise_extrapolation(3.2e1, 2e-1, 2.0, 1.0, 24.0, 1.0).unwrap();
        assert!((a.equilibrium_nbar - c.equilibrium_nbar).abs() < 1e-12);
    }
}
