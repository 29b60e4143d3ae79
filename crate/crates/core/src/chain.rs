//! Linear ion chains in a harmonic trap: equilibrium geometry, normal modes
//! and Lamb-Dicke parameters.
//!
//! Positions are in units of the characteristic length
//! `ℓ = (e² / (4π ε₀ m ω_z²))^{1/3}`. In these units the axial potential is
//! `Σ u_i²/2 + Σ_{i<j} 1/|u_i - u_j|` and its Hessian `A` gives the axial
//! mode frequencies `ω_z √λ`. Transverse modes follow from
//! `ω_m² = ω_x² - λ_m ω_z²` with `λ_m` the eigenvalues of `(A - 1)/2`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};


#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::constants::{
    AMU, BE9_ION_MASS_AMU, BE9_LINEWIDTH_HZ, BE9_RAMAN_WAVELENGTH, EPSILON_0, E_CHARGE, HBAR,
};
use crate::linalg::{self, Matrix};
use crate::{Error, Result};

/// Upper bound on chain length accepted by the equilibrium solver.
pub const MAX_IONS: usize = 128;

const NEWTON_MAX_ITERATIONS: usize = 200;
const NEWTON_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonSpecies {
    /// kg
    pub mass: f64,
    /// Natural linewidth of the excited state, rad/s.
    pub linewidth: f64,
    /// Wavelength of the Raman beams, m.
    pub raman_wavelength: f64,
}

impl IonSpecies {
    pub fn new(mass: f64, linewidth: f64, raman_wavelength: f64) -> Result<Self> {
        for (name, v) in [
            ("mass", mass),
            ("linewidth", linewidth),
            ("raman_wavelength", raman_wavelength),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, "must be finite and positive"));
            }
        }
        Ok(IonSpecies {
            mass,
            linewidth,
            raman_wavelength,
        })
    }

    /// ⁹Be⁺ driven on the 313 nm Raman transition.
    pub fn beryllium9() -> Self {
        IonSpecies {
            mass: BE9_ION_MASS_AMU * AMU,
            linewidth: 2.0 * PI * BE9_LINEWIDTH_HZ,
            raman_wavelength: BE9_RAMAN_WAVELENGTH,
        }
    }

    /// Wave-vector difference of two beams crossing at 90° with the
    /// difference along the trap axis: `√2 · 2π/λ`.
    pub fn default_delta_k(&self) -> f64 {
        SQRT_2 * 2.0 * PI / self.raman_wavelength
    }
}

/// Static trap parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapConfig {
    pub species: IonSpecies,
    pub n_ions: usize,
    /// Axial COM frequency, rad/s.
    pub omega_z: f64,
    /// Radial single-ion frequency, rad/s.
    pub omega_x: f64,
    /// Raman wave-vector difference along the axis, rad/m.
    pub delta_k: f64,
}

impl TrapConfig {
    /// Builds a config with the default `Δk` of the species.
    pub fn new(species: IonSpecies, n_ions: usize, omega_z: f64, omega_x: f64) -> Result<Self> {
        Self::with_delta_k(species, n_ions, omega_z, omega_x, species.default_delta_k())
    }

    pub fn with_delta_k(
        species: IonSpecies,
        n_ions: usize,
        omega_z: f64,
        omega_x: f64,
        delta_k: f64,
    ) -> Result<Self> {
        if n_ions == 0 || n_ions > MAX_IONS {
            return Err(Error::invalid("n_ions", "must be between 1 and 128"));
        }
        if !(omega_z.is_finite() && omega_z > 0.0) {
            return Err(Error::invalid("omega_z", "must be finite and positive"));
        }
        if !(omega_x.is_finite() && omega_x > 0.0) {
            return Err(Error::invalid("omega_x", "must be finite and positive"));
        }
        // Δk = 0 is allowed: it switches the motional coupling off.
        if !(delta_k.is_finite() && delta_k >= 0.0) {
            return Err(Error::invalid("delta_k", "must be finite and non-negative"));
        }
        Ok(TrapConfig {
            species,
            n_ions,
            omega_z,
            omega_x,
            delta_k,
        })
    }

    /// Same trap with a different number of ions.
    pub fn with_ions(&self, n_ions: usize) -> Result<Self> {
        Self::with_delta_k(self.species, n_ions, self.omega_z, self.omega_x, self.delta_k)
    }

    /// Characteristic length `ℓ` in metres.
    pub fn length_scale(&self) -> f64 {
        let k = E_CHARGE * E_CHARGE / (4.0 * PI * EPSILON_0);
        (k / (self.species.mass * self.omega_z * self.omega_z)).cbrt()
    }

    /// Lamb-Dicke parameter of a single ion oscillating at `omega`.
    pub fn lamb_dicke(&self, omega: f64) -> f64 {
        self.delta_k * (HBAR / (2.0 * self.species.mass * omega)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Axial,
    Radial,
}

/// Normal modes of a chain along one axis.
#[derive(Debug, Clone)]
pub struct ModeStructure {
    pub axis: Axis,
    /// rad/s. Axial: ascending from the COM mode. Radial: descending from
    /// the COM mode at `ω_x`. The COM mode is index 0 on both axes.
    pub frequencies: Vec<f64>,
    /// `b[(i, m)]`: participation of ion `i` in mode `m`; columns orthonormal.
    pub eigenvectors: Matrix,
    /// `η[(i, m)] = Δk √(ħ / 2 m ω_m) · b[(i, m)]`.
    pub lamb_dicke: Matrix,
}

impl ModeStructure {
    pub fn n_ions(&self) -> usize {
        self.eigenvectors.rows()
    }

    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    /// Lamb-Dicke parameter of a single photon (`η/√2`) for ion `i`, mode `m`.
    pub fn single_photon_lamb_dicke(&self, ion: usize, mode: usize) -> f64 {
        self.lamb_dicke[(ion, mode)] / SQRT_2
    }

    /// Column `m` of the Lamb-Dicke matrix.
    pub fn mode_lamb_dicke(&self, mode: usize) -> Vec<f64> {
        self.lamb_dicke.column(mode)
    }
}

/// Solves the force balance of `n_ions` ions in dimensionless units.
///
/// Newton iteration with the analytic Jacobian and a backtracking line
/// search, started from uniform spacing scaled to the expected chain length.
pub fn equilibrium_positions(n_ions: usize) -> Result<Vec<f64>> {
    if n_ions == 0 || n_ions > MAX_IONS {
        return Err(Error::invalid("n_ions", "must be between 1 and 128"));
    }
    if n_ions == 1 {
        return Ok(vec![0.0]);
    }
    let n = n_ions;
    // overestimates the chain length; the edge grows roughly as N^0.44
    let half_len = 2.0 * (n as f64).powf(0.44);
    let mut u: Vec<f64> = (0..n)
        .map(|i| -half_len + 2.0 * half_len * i as f64 / (n - 1) as f64)
        .collect();

    let mut residual = max_abs(&coulomb_force(&u));
    let mut iterations = 0;
    while residual > NEWTON_TOLERANCE {
        if iterations == NEWTON_MAX_ITERATIONS {
            return Err(Error::NoConvergence {
                solver: "equilibrium Newton solve",
                iterations,
                residual,
            });
        }
        iterations += 1;
        let f = coulomb_force(&u);
        let jac = axial_hessian(&u);
        let minus_f: Vec<f64> = f.iter().map(|x| -x).collect();
        let step = linalg::solve(&jac, &minus_f)?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(a, d)| a + lambda * d).collect();
            let ordered = trial.windows(2).all(|w| w[0] < w[1]);
            if ordered {
                let r = max_abs(&coulomb_force(&trial));
                if r < residual || lambda < 1e-6 {
                    u = trial;
                    residual = r;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-12 {
                return Err(Error::NoConvergence {
                    solver: "equilibrium Newton solve",
                    iterations,
                    residual,
                });
            }
        }
    }

    // enforce the mirror symmetry exactly
    let sym: Vec<f64> = (0..n).map(|i| 0.5 * (u[i] - u[n - 1 - i])).collect();
    let r = max_abs(&coulomb_force(&sym));
    if r > 1e-10 {
        return Err(Error::NoConvergence {
            solver: "equilibrium Newton solve",
            iterations,
            residual: r,
        });
    }
    Ok(sym)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Net dimensionless force on each ion (gradient of the potential).
fn coulomb_force(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|i| {
            let mut f = u[i];
            for j in 0..n {
                if j != i {
                    let d = u[i] - u[j];
                    f -= d.signum() / (d * d);
                }
            }
            f
        })
        .collect()
}

/// Axial Hessian `A` of the dimensionless potential at positions `u`.
pub fn axial_hessian(u: &[f64]) -> Matrix {
    let n = u.len();
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 1.0;
        for j in 0..n {
            if j != i {
                let c = 2.0 / (u[i] - u[j]).abs().powi(3);
                a[(i, j)] = -c;
                diag += c;
            }
        }
        a[(i, i)] = diag;
    }
    a
}

fn fill_lamb_dicke(cfg: &TrapConfig, frequencies: &[f64], b: &Matrix) -> Matrix {
    Matrix::from_fn(b.rows(), b.cols(), |i, m| {
        cfg.lamb_dicke(frequencies[m]) * b[(i, m)]
    })
}

/// Axial normal modes of the chain described by `cfg`.
pub fn axial_modes(cfg: &TrapConfig) -> Result<ModeStructure> {
    let u = equilibrium_positions(cfg.n_ions)?;
    let eig = linalg::symmetric_eigen(&axial_hessian(&u))?;
    let frequencies: Vec<f64> = eig
        .values
        .iter()
        .map(|&l| cfg.omega_z * l.max(0.0).sqrt())
        .collect();
    let lamb_dicke = fill_lamb_dicke(cfg, &frequencies, &eig.vectors);
    Ok(ModeStructure {
        axis: Axis::Axial,
        frequencies,
        eigenvectors: eig.vectors,
        lamb_dicke,
    })
}

/// Transverse normal modes along the radial axis.
pub fn radial_modes(cfg: &TrapConfig) -> Result<ModeStructure> {
    let u = equilibrium_positions(cfg.n_ions)?;
    let n = u.len();
    let a = axial_hessian(&u);
    let coupling = Matrix::from_fn(n, n, |i, j| {
        let identity = if i == j { 1.0 } else { 0.0 };
        0.5 * (a[(i, j)] - identity)
    });
    let eig = linalg::symmetric_eigen(&coupling)?;
    let mut frequencies = Vec::with_capacity(n);
    for (m, &l) in eig.values.iter().enumerate() {
        let w2 = cfg.omega_x * cfg.omega_x - l * cfg.omega_z * cfg.omega_z;
        if w2 <= 0.0 {
            return Err(Error::ZigzagInstability {
                mode: m,
                omega_squared: w2,
            });
        }
        frequencies.push(w2.sqrt());
    }
    let lamb_dicke = fill_lamb_dicke(cfg, &frequencies, &eig.vectors);
    Ok(ModeStructure {
        axis: Axis::Radial,
        frequencies,
        eigenvectors: eig.vectors,
        lamb_dicke,
    })
}

/// Normal modes along `axis`.
pub fn modes(cfg: &TrapConfig, axis: Axis) -> Result<ModeStructure> {
    match axis {
        Axis::Axial => axial_modes(cfg),
        Axis::Radial => radial_modes(cfg),
    }
}

/// Recomputes `η_{i,m}` for `modes` under the wave-vector of `cfg`.
pub fn lamb_dicke_matrix(modes: &ModeStructure, cfg: &TrapConfig) -> Matrix {
    fill_lamb_dicke(cfg, &modes.frequencies, &modes.eigenvectors)
}

/// Ion positions in metres.
pub fn positions_m(cfg: &TrapConfig) -> Result<Vec<f64>> {
    let l = cfg.length_scale();
    Ok(equilibrium_positions(cfg.n_ions)?
        .into_iter()
        .map(|u| u * l)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::khz;

    #[test]
    fn equilibrium_small_chains() {
        assert_eq!(equilibrium_positions(1).unwrap(), vec![0.0]);
        let two = equilibrium_positions(2).unwrap();
        let expect = 0.5f64.powf(2.0 / 3.0);
        assert!((two[1] - expect).abs() < 1e-12 && (two[0] + expect).abs() < 1e-12);
        let three = equilibrium_positions(3).unwrap();
        let outer = 1.25f64.cbrt();
        assert!((three[2] - outer).abs() < 1e-12);
        assert_eq!(three[1], 0.0);
    }

    #[test]
    fn equilibrium_up_to_max_ions() {
        for n in [5, 16, 24, 64, 100, 128] {
            let u = equilibrium_positions(n).unwrap();
            assert!(u.windows(2).all(|w| w[0] < w[1]));
            assert!(max_abs(&coulomb_force(&u)) < 1e-10);
            for i in 0..n {
                assert_eq!(u[i], -u[n - 1 - i]);
            }
        }
        assert!(equilibrium_positions(0).is_err());
        assert!(equilibrium_positions(MAX_IONS + 1).is_err());
    }

    #[test]
    fn radial_two_ions() {
        let cfg = TrapConfig::new(IonSpecies::beryllium9(), 2, khz(200.0), khz(1000.0)).unwrap();
        let modes = radial_modes(&cfg).unwrap();
        let expect = (cfg.omega_x.powi(2) - cfg.omega_z.powi(2)).sqrt();
        assert!((modes.frequencies[0] / cfg.omega_x - 1.0).abs() < 1e-12);
        assert!((modes.frequencies[1] / expect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zigzag_is_reported() {
        let cfg = TrapConfig::new(IonSpecies::beryllium9(), 10, khz(1000.0), khz(2000.0)).unwrap();
        assert!(matches!(
            radial_modes(&cfg),
            Err(Error::ZigzagInstability { .. })
        ));
    }

    #[test]
    fn zero_wave_vector_gives_zero_lamb_dicke() {
        let cfg = TrapConfig::with_delta_k(IonSpecies::beryllium9(), 3, khz(500.0), khz(3300.0), 0.0)
            .unwrap();
        let m = axial_modes(&cfg).unwrap();
        assert!(m.lamb_dicke.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_bad_config() {
        let be = IonSpecies::beryllium9();
        assert!(TrapConfig::new(be, 3, 0.0, 1.0).is_err());
        assert!(TrapConfig::new(be, 0, 1.0, 1.0).is_err());
        assert!(TrapConfig::with_delta_k(be, 1, 1.0, 1.0, -1.0).is_err());
        assert!(IonSpecies::new(-1.0, 1.0, 1.0).is_err());
    }
}
