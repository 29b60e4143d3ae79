use nalgebra::DMatrix;
use num_complex::Complex64;
use rsc_core::chain::{modes, Axis, IonSpecies, TrapConfig};
use rsc_core::constants::khz;
use rsc_core::scaling::{allocation_time, parallel_cooling_time, sequential_cooling_time};
use rsc_core::specfun::{displacement_element, laguerre};

/// `exp(iη(a + a†))` on a truncated Fock space.
fn displacement_matrix(levels: usize, eta: f64) -> DMatrix<Complex64> {
    let x = DMatrix::from_fn(levels, levels, |i, j| {
        if i + 1 == j {
            Complex64::new(0.0, eta * (j as f64).sqrt())
        } else if j + 1 == i {
            Complex64::new(0.0, eta * (i as f64).sqrt())
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    x.exp()
}

#[test]
fn displacement_elements_match_matrix_exponential() {
    let mut i_pow = [Complex64::new(1.0, 0.0); 31];
    for s in 1..31 {
        i_pow[s] = i_pow[s - 1] * Complex64::new(0.0, 1.0);
    }
    for eta in [0.05, 0.3, 0.78, 1.0, 1.3, 1.5] {
        let d = displacement_matrix(60, eta);
        for n in 0..=30 {
            for s in 0..=(30 - n) {
                let exact = d[(n + s, n)] / i_pow[s];
                assert!(exact.im.abs() < 1e-8, "imaginary residue n={n} s={s} eta={eta}");
                let ours = displacement_element(n, s, eta);
                assert!((ours - exact.re).abs() < 1e-8, "n={n} s={s} eta={eta}: {ours} vs {}", exact.re);
                // the lower triangle carries the same factor
                let back = d[(n, n + s)] / i_pow[s];
                assert!((back.re - exact.re).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn laguerre_matches_explicit_sum() {
    // L_n^(a)(x) = Σ_k (-1)^k C(n+a, n-k) x^k / k!
    fn binom(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }
    for a in 0..3u32 {
        for n in 0..15usize {
            for x in [0.0f64, 0.3, 1.69, 4.0] {
                let mut sum = 0.0;
                let mut fact = 1.0;
                for k in 0..=n {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    sum += sign * binom((n + a as usize) as u64, (n - k) as u64) * x.powi(k as i32) / fact;
                }
                assert!((laguerre(n, a, x) - sum).abs() < 1e-9 * sum.abs().max(1.0));
            }
        }
    }
}

/// Shifts power from the fastest mode to the slowest until no move helps.
fn brute_force_maximin(freqs: &[f64], p0: f64, c: f64) -> f64 {
    let n = freqs.len();
    let mut p = vec![p0 / n as f64; n];
    let mut step = 0.25;
    let times = |p: &[f64]| -> Vec<f64> { freqs.iter().zip(p).map(|(w, q)| c / (w * q).sqrt()).collect() };
    let mut best = allocation_time(freqs, &p, c);
    while step > 1e-12 {
        let t = times(&p);
        let slow = (0..n).max_by(|a, b| t[*a].total_cmp(&t[*b])).unwrap();
        let fast = (0..n).min_by(|a, b| t[*a].total_cmp(&t[*b])).unwrap();
        let mut trial = p.clone();
        let moved = step * trial[fast];
        trial[fast] -= moved;
        trial[slow] += moved;
        let value = allocation_time(freqs, &trial, c);
        if value < best {
            best = value;
            p = trial;
        } else {
            step *= 0.5;
        }
    }
    best
}

#[test]
fn parallel_time_matches_maximin_oracle() {
    for n in 1..=8 {
        for axis in [Axis::Axial, Axis::Radial] {
            let cfg = TrapConfig::new(IonSpecies::beryllium9(), n, khz(735.0), khz(7500.0)).unwrap();
            let w = modes(&cfg, axis).unwrap().frequencies;
            let (t1, p0) = (200e-6, 1.0);
            let c = t1 * (w[0] * p0).sqrt();
            let oracle = brute_force_maximin(&w, p0, c);
            let closed = parallel_cooling_time(&w, t1);
            assert!((oracle / closed - 1.0).abs() < 1e-3, "n={n} {axis:?}: {oracle} vs {closed}");
            // one mode at a time, each with the full power
            let seq: f64 = w.iter().map(|x| c / (x * p0).sqrt()).sum();
            assert!((seq / sequential_cooling_time(&w, t1) - 1.0).abs() < 1e-12);
        }
    }
}
