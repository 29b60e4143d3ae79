use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rsc_core::carrier::*;
use rsc_core::chain::{modes, positions_m, Axis, IonSpecies, ModeStructure, TrapConfig};
use rsc_core::constants::khz;

const OMEGA0: f64 = 2.0 * std::f64::consts::PI * 300e3;

fn chain(n: usize, wz_khz: f64) -> (TrapConfig, ModeStructure) {
    let cfg = TrapConfig::new(IonSpecies::beryllium9(), n, khz(wz_khz), khz(7500.0)).unwrap();
    let m = modes(&cfg, Axis::Axial).unwrap();
    (cfg, m)
}

fn grid(n: usize, dt: f64) -> Vec<f64> {
    (0..n).map(|k| k as f64 * dt).collect()
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u = |r: &mut ChaCha8Rng| ((r.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
    let (a, b) = (u(rng), u(rng));
    (-2.0 * a.ln()).sqrt() * (2.0 * std::f64::consts::PI * b).cos()
}

#[test]
fn one_thermal_mode_factorizes() {
    let (_, m) = chain(4, 735.0);
    let ts = grid(60, 0.2e-6);
    for mode in 0..4 {
        let model = CarrierModel::uniform(m.clone(), vec![0.0; 4], OMEGA0)
            .unwrap()
            .with_single_thermal(mode, 1.3)
            .unwrap();
        for ion in 0..4 {
            let exact = multimode_carrier_exact(&model, ion, &ts).unwrap();
            let others: f64 = (0..4).filter(|&k| k != mode).map(|k| m.lamb_dicke[(ion, k)].powi(2)).sum();
            let omega_eff = OMEGA0 * (-0.5 * others).exp();
            let single = single_ion_carrier(1.3, m.lamb_dicke[(ion, mode)], omega_eff, &ts).unwrap();
            for (a, b) in exact.p_excited.iter().zip(&single.p_excited) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn ground_state_flops_at_ground_rate() {
    let (_, m) = chain(5, 500.0);
    let model = CarrierModel::uniform(m.clone(), vec![0.0; 5], OMEGA0).unwrap();
    let ts = grid(40, 0.3e-6);
    for ion in 0..5 {
        let w = carrier_rabi_ground(&m, ion, OMEGA0).unwrap();
        let tr = multimode_carrier_exact(&model, ion, &ts).unwrap();
        for (t, p) in ts.iter().zip(&tr.p_excited) {
            assert!((p - 0.5 * (1.0 + (w * t).cos())).abs() < 1e-12);
        }
    }
}

#[test]
fn monte_carlo_covers_exact_sum() {
    let (_, m) = chain(2, 735.0);
    let model = CarrierModel::uniform(m, vec![0.5, 0.5], OMEGA0).unwrap();
    let ts = grid(21, 0.5e-6);
    for ion in 0..2 {
        let exact = multimode_carrier_exact(&model, ion, &ts).unwrap();
        let (mut hits, mut total) = (0, 0);
        for trial in 0..100 {
            let mc = multimode_carrier_mc(&model, ion, &ts, 2000, trial).unwrap();
            for k in 1..ts.len() {
                total += 1;
                if (mc.p_excited[k] - exact.p_excited[k]).abs() <= 1.96 * mc.std_error[k] {
                    hits += 1;
                }
            }
        }
        let coverage = hits as f64 / total as f64;
        assert!(coverage > 0.92 && coverage < 0.98, "ion {ion}: coverage {coverage}");
    }
}

#[test]
fn long_chain_edge_ions_flop_slower() {
    let (_, m) = chain(24, 272.0);
    let rates: Vec<f64> = (0..24).map(|i| carrier_rabi_ground(&m, i, 1.0).unwrap()).collect();
    let ratio = rates[12] / rates[0];
    assert!((ratio - 1.19).abs() < 0.02, "{ratio}");
    assert!((1.0 - 1.0 / ratio - 0.16).abs() < 0.01);
    for i in 0..12 {
        assert!(rates[i] < rates[i + 1] + 1e-12);
        assert!((rates[i] - rates[23 - i]).abs() < 1e-12);
    }
}

#[test]
fn long_chain_monte_carlo_decays_with_ion_dependent_rate() {
    let (cfg, m) = chain(24, 272.0);
    let pos = positions_m(&cfg).unwrap();
    let mut nbars = vec![0.0; 24];
    nbars[0] = 1.5;
    let model = CarrierModel::with_beam(m, nbars, OMEGA0, &pos, DEFAULT_WAIST).unwrap();
    let ts = grid(400, 0.05e-6);
    let center = multimode_carrier_mc(&model, 12, &ts, 4000, 11).unwrap();
    let edge = multimode_carrier_mc(&model, 0, &ts, 4000, 11).unwrap();
    let first_min = |p: &[f64]| (1..p.len() - 1).find(|&k| p[k] < p[k - 1] && p[k] <= p[k + 1]).unwrap();
    assert!(first_min(&center.p_excited) < first_min(&edge.p_excited));
    // contrast per half of the window shrinks
    let spread = |p: &[f64]| p.iter().cloned().fold(0.0, f64::max) - p.iter().cloned().fold(1.0, f64::min);
    for tr in [&center, &edge] {
        assert!(spread(&tr.p_excited[200..]) < spread(&tr.p_excited[..200]));
    }
}

fn synthetic_traces(model: &CarrierModel, nbar: f64, noise: f64, seed: u64) -> Vec<FlopTrace> {
    let truth = model.with_single_thermal(0, nbar).unwrap();
    let ts = grid(60, 0.25e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..truth.modes.n_ions())
        .map(|ion| {
            let mut tr = multimode_carrier_exact(&truth, ion, &ts).unwrap();
            tr.p_excited.iter_mut().for_each(|p| *p += noise * gaussian(&mut rng));
            tr
        })
        .collect()
}

#[test]
fn com_fit_round_trips() {
    let (cfg, m) = chain(24, 272.0);
    let pos = positions_m(&cfg).unwrap();
    let model = CarrierModel::with_beam(m, vec![0.0; 24], OMEGA0, &pos, DEFAULT_WAIST).unwrap();
    for seed in 0..3 {
        let fit = fit_com_nbar(&synthetic_traces(&model, 1.5, 0.02, seed), &model, ComFitOptions::default()).unwrap();
        assert!((fit.nbar - 1.5).abs() <= 0.2, "seed {seed}: {}", fit.nbar);
        assert!(!fit.flat);
        assert!(fit.interval.0 <= fit.nbar && fit.nbar <= fit.interval.1);
    }
    let fit = fit_com_nbar(&synthetic_traces(&model, 0.0, 0.0, 0), &model, ComFitOptions::default()).unwrap();
    assert_eq!(fit.nbar, 0.0);
    assert!(fit.sse < 1e-20);
}

#[test]
fn matched_beam_profile_fits_better() {
    let (cfg, m) = chain(12, 400.0);
    let pos = positions_m(&cfg).unwrap();
    let matched = CarrierModel::with_beam(m.clone(), vec![0.0; 12], OMEGA0, &pos, 60e-6).unwrap();
    let flat = CarrierModel::uniform(m, vec![0.0; 12], OMEGA0).unwrap();
    let traces = synthetic_traces(&matched, 0.8, 0.01, 5);
    let good = fit_com_nbar(&traces, &matched, ComFitOptions::default()).unwrap();
    let bad = fit_com_nbar(&traces, &flat, ComFitOptions::default()).unwrap();
    assert!(bad.sse > good.sse);
}

#[test]
fn insensitive_traces_are_flagged() {
    let (_, m) = chain(3, 735.0);
    let model = CarrierModel::uniform(m, vec![0.0; 3], OMEGA0).unwrap();
    let traces = vec![FlopTrace {
        ion: Some(1),
        times: vec![0.0; 5],
        p_excited: vec![1.0; 5],
        std_error: vec![0.0; 5],
    }];
    assert!(fit_com_nbar(&traces, &model, ComFitOptions::default()).unwrap().flat);
}

#[test]
fn doppler_cooled_contrast_collapses() {
    let eta = 0.78;
    let period = 2.0 * std::f64::consts::PI / (OMEGA0 * (-0.5f64 * eta * eta).exp());
    let ts: Vec<f64> = (0..3000).map(|k| 3.0 * period * k as f64 / 3000.0).collect();
    let tr = single_ion_carrier(6.0, eta, OMEGA0, &ts).unwrap();
    let third = &tr.p_excited[2000..];
    let pp = third.iter().cloned().fold(0.0, f64::max) - third.iter().cloned().fold(1.0, f64::min);
    assert!(pp < 0.2, "{pp}");
}
