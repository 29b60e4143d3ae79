use nalgebra::DMatrix;
use num_complex::Complex64;
use rsc_core::chain::{modes, Axis, IonSpecies, TrapConfig};
use rsc_core::constants::khz;
use rsc_core::sideband::*;
use rsc_core::specfun::{displacement_element, ThermalMode};

const OMEGA0: f64 = 2.0 * std::f64::consts::PI * 300e3;

fn two_ion_stretch() -> Vec<f64> {
    let cfg = TrapConfig::new(IonSpecies::beryllium9(), 2, khz(735.0), khz(7500.0)).unwrap();
    modes(&cfg, Axis::Axial).unwrap().mode_lamb_dicke(1)
}

#[test]
fn thermal_mixture_matches_density_matrix_evolution() {
    let etas = [0.55, -0.42];
    let nbar = 0.8;
    let n_cut = 12;
    let t = 2.7e-6;
    for sideband in [Sideband::Red, Sideband::Blue] {
        let h = build_sideband_hamiltonian(&etas, OMEGA0, sideband, Expansion::Third, khz(15.0), n_cut).unwrap();
        let d = h.dim();
        let dense = h.to_dense();
        let hm = DMatrix::from_fn(d, d, |i, j| Complex64::new(0.0, -t * dense[i * d + j]));
        let u = hm.exp();
        let w = ThermalMode::new(nbar, n_cut).unwrap().weights();
        let mut rho = DMatrix::<Complex64>::zeros(d, d);
        for (n, p) in w.iter().enumerate() {
            let k = h.index(0, n);
            rho[(k, k)] = Complex64::new(*p, 0.0);
        }
        let rho_t = &u * rho * u.adjoint();
        let flipped: f64 = (0..d)
            .map(|k| rho_t[(k, k)].re * ((k % 4) as u32).count_ones() as f64 / 2.0)
            .sum();
        let column: Vec<f64> = fock_brightness(&h, n_cut, &[t]).unwrap().into_iter().map(|v| v[0]).collect();
        let mixture: f64 = w.iter().zip(&column).map(|(p, b)| p * b).sum();
        assert!((flipped - mixture).abs() < 1e-8, "{sideband:?}: {flipped} vs {mixture}");
    }
}

#[test]
fn evolution_matches_dense_exponential_and_keeps_norm() {
    let h = build_sideband_hamiltonian(&[0.6, 0.3, -0.2], OMEGA0, Sideband::Blue, Expansion::Full { order: 1 }, khz(40.0), 5)
        .unwrap();
    let d = h.dim();
    let dense = h.to_dense();
    let t = 4.1e-6;
    let u = DMatrix::from_fn(d, d, |i, j| Complex64::new(0.0, -t * dense[i * d + j])).exp();
    let psi0 = SpinPhononState::ground_spins(&h, 2).unwrap();
    let out = evolve_state(&h, &psi0, t).unwrap();
    let k0 = h.index(0, 2);
    for k in 0..d {
        assert!((out.amps[k] - u[(k, k0)]).norm() < 1e-8);
    }
    assert!((out.norm() - 1.0).abs() < 1e-8);
}

#[test]
fn two_level_rabi_oracle() {
    // one spin, blue sideband from |↓,0⟩: a two-level system at Ω₀·D₀₁
    let eta = 0.78;
    let h = build_sideband_hamiltonian(&[eta], OMEGA0, Sideband::Blue, Expansion::Full { order: 1 }, 0.0, 4).unwrap();
    let g = OMEGA0 * displacement_element(0, 1, eta);
    let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.1e-6).collect();
    let trace = brightness_trace(&h, &SpinPhononState::ground_spins(&h, 0).unwrap(), &times).unwrap();
    for (t, b) in times.iter().zip(&trace) {
        assert!((b - (0.5 * g * t).sin().powi(2)).abs() < 1e-9);
    }
    let out = evolve_state(&h, &SpinPhononState::ground_spins(&h, 0).unwrap(), std::f64::consts::PI / g).unwrap();
    assert!(brightness(&out) > 0.999);
}

#[test]
fn detuned_drive_stays_below_lorentzian_bound() {
    let eta = 0.78;
    let g = OMEGA0 * displacement_element(0, 1, eta);
    for delta in [10.0 * g, 30.0 * g] {
        let h = build_sideband_hamiltonian(&[eta], OMEGA0, Sideband::Blue, Expansion::Full { order: 1 }, delta, 4).unwrap();
        let times: Vec<f64> = (1..=200).map(|k| k as f64 * 0.05e-6).collect();
        let trace = brightness_trace(&h, &SpinPhononState::ground_spins(&h, 0).unwrap(), &times).unwrap();
        let peak = trace.iter().cloned().fold(0.0, f64::max);
        assert!(peak < (g / delta).powi(2), "delta={delta}: {peak}");
    }
}

#[test]
fn red_sideband_is_dark_in_ground_state() {
    let cfg = TrapConfig::new(IonSpecies::beryllium9(), 3, khz(735.0), khz(7500.0)).unwrap();
    let m = modes(&cfg, Axis::Axial).unwrap();
    let detunings: Vec<f64> = (-4..=4).map(|k| khz(10.0 * k as f64)).collect();
    let scan = spectrum_scan(&m, 0, 0.0, OMEGA0, 3e-6, &detunings, Expansion::Third).unwrap();
    let blue_peak = scan.iter().filter(|p| p.sideband == Sideband::Blue).map(|p| p.excitation).fold(0.0, f64::max);
    let red_peak = scan.iter().filter(|p| p.sideband == Sideband::Red).map(|p| p.excitation).fold(0.0, f64::max);
    assert!((blue_peak - 1.0).abs() < 1e-12);
    assert!(red_peak < 0.01);
    let zero = spectrum_scan(&m, 0, 0.5, OMEGA0, 0.0, &detunings, Expansion::Third).unwrap();
    assert!(zero.iter().all(|p| p.excitation == 0.0 && p.raw == 0.0));
    let red = scan.iter().find(|p| p.sideband == Sideband::Red).unwrap();
    assert!((red.frequency - (red.detuning - m.frequencies[0])).abs() < 1e-6);
}

#[test]
fn single_ion_ratio_is_boltzmann() {
    let grid: Vec<f64> = (0..=30).map(|k| 0.1 * k as f64).collect();
    for expansion in [Expansion::Full { order: 1 }, Expansion::Third] {
        let curve = ratio_curve(&[0.78], OMEGA0, &grid, RatioOptions { expansion, ..Default::default() }).unwrap();
        assert_eq!(curve.ratio[0], 0.0);
        for (n, r) in curve.nbar.iter().zip(&curve.ratio).skip(1) {
            assert!((r / (n / (n + 1.0)) - 1.0).abs() < 1e-6, "n̄={n}: {r}");
        }
        for a in curve.alpha().into_iter().flatten() {
            assert!((a - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn two_ion_round_trip() {
    let etas = two_ion_stretch();
    let grid: Vec<f64> = (0..=20).map(|k| 0.1 * k as f64).collect();
    let curve = ratio_curve(&etas, OMEGA0, &grid, RatioOptions::default()).unwrap();
    assert!(curve.is_monotone());
    for truth in [0.05, 0.25, 0.73, 1.42] {
        let r = thermal_brightness(&etas, OMEGA0, Sideband::Red, Expansion::Third, truth, curve.probe_time).unwrap()
            / thermal_brightness(&etas, OMEGA0, Sideband::Blue, Expansion::Third, truth, curve.probe_time).unwrap();
        let est = extract_nbar(r, 0.01, &curve).unwrap();
        assert_eq!(est.flag, EstimateFlag::Ok);
        assert!((est.nbar / truth - 1.0).abs() < 0.05, "{truth}: {}", est.nbar);
        let (lo, hi) = est.interval.unwrap();
        assert!(lo < est.nbar && est.nbar < hi);
    }
}

#[test]
fn upper_bounds_grow_with_noise() {
    let etas = two_ion_stretch();
    let grid: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
    let curve = ratio_curve(&etas, OMEGA0, &grid, RatioOptions::default()).unwrap();
    let mut last = -1.0;
    for noise in [0.0, 0.01, 0.03, 0.06, 0.1] {
        let b = upper_bound_nbar(noise, 0.9, &curve).unwrap();
        assert!(b.nbar >= last);
        last = b.nbar;
    }
    assert_eq!(upper_bound_nbar(0.0, 0.9, &curve).unwrap().nbar, 0.0);
}

#[test]
fn larger_systems_hit_the_budget() {
    let r = ratio_curve(&[0.2; 5], OMEGA0, &[0.0, 0.1], RatioOptions::default());
    assert!(matches!(r, Err(rsc_core::Error::ResourceBudget { .. })));
    assert!(matches!(thermal_fock_cut(20.0), Err(rsc_core::Error::ResourceBudget { .. })));
}
