//! N spins driven on a red or blue sideband of one shared motional mode,
//! simulated exactly in a truncated Fock space, plus sideband-ratio
//! thermometry built on top.
//!
//! Spins start in `|↓…↓⟩`; `σ₊` takes `↓` to `↑`. The red sideband
//! `σ₊ a + h.c.` therefore removes a phonon when it flips a spin and leaves
//! `|↓…↓, 0⟩` dark. Basis index: `n · 2^N + s`, where bit `i` of `s` is set
//! when spin `i` is up.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::chain::ModeStructure;
use crate::specfun::{cutoff_for_tail, displacement_element, thermal_tail, ThermalMode};
use crate::{Error, Result};

pub const MAX_SPINS: usize = 6;
pub const MAX_FOCK_CUT: usize = 64;
/// Spins simulated with exact thermal averaging in ratio curves and scans.
pub const MAX_THERMAL_SPINS: usize = 4;
/// Step-halving agreement required of [`evolve_state`].
pub const EVOLVE_TOL: f64 = 1e-7;
pub const NORM_TOL: f64 = 1e-8;
/// Thermal tail allowed when choosing the Fock cutoff.
pub const FOCK_TAIL: f64 = 1e-6;

const TAYLOR_MAX_TERMS: usize = 80;
/// Largest `‖H‖·dt` per Taylor step.
const TAYLOR_STEP_NORM: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sideband {
    Red,
    Blue,
}

/// How the spin-motion coupling is expanded in `η`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Expansion {
    /// Third order in `η`: `η a - (η³/2) a a† a` (red) and its mirror
    /// `η a† - (η³/2) a† a a†` (blue). These are the first two Taylor terms
    /// of the displacement matrix element.
    #[default]
    Third,
    /// Third-order correction with a plus sign and reversed ordering:
    /// `η a + (η³/2) a a a†` (red), `η a† + (η³/2) a† a† a` (blue).
    ThirdReversed,
    /// Exact displacement-operator elements on the sideband of the given
    /// order.
    Full { order: usize },
}

impl Expansion {
    fn shift(self) -> usize {
        match self {
            Expansion::Full { order } => order,
            _ => 1,
        }
    }

    /// Factor of the blue term taking `|n⟩` to `|n + shift⟩`.
    fn element(self, n: usize, eta: f64) -> f64 {
        let m = (n + 1) as f64;
        let e2 = eta * eta;
        match self {
            Expansion::Third => eta * m.sqrt() * (1.0 - 0.5 * m * e2),
            Expansion::ThirdReversed => eta * m.sqrt() * (1.0 + 0.5 * (m - 1.0) * e2),
            Expansion::Full { order } => displacement_element(n, order, eta),
        }
    }

    /// Factor of the red term taking `|n⟩` to `|n - shift⟩`.
    fn red(self, n: usize, eta: f64) -> f64 {
        match self {
            Expansion::ThirdReversed => {
                let nf = n as f64;
                eta * nf.sqrt() * (1.0 + 0.5 * (nf + 1.0) * eta * eta)
            }
            _ => self.element(n - self.shift(), eta),
        }
    }

}

/// Sparse real-symmetric Hamiltonian (rad/s) on spins ⊗ Fock space.
#[derive(Debug, Clone)]
pub struct SidebandHamiltonian {
    pub sideband: Sideband,
    pub expansion: Expansion,
    pub etas: Vec<f64>,
    pub omega0: f64,
    pub delta: f64,
    n_spins: usize,
    n_fock: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Fock levels needed so that every state reachable from `|n ≤ n_cut⟩`
/// stays inside the space.
pub fn fock_dim(n_cut: usize, n_spins: usize, expansion: Expansion) -> usize {
    n_cut + 1 + n_spins * expansion.shift()
}

/// Builds the coupling `(Ω₀/2) Σ_i σ₊⁽ⁱ⁾ f(η_i) + h.c.` plus the detuning
/// term `-(δ/2) Σ_i σ_z⁽ⁱ⁾`, on a Fock space large enough for initial
/// phonon numbers up to `n_cut`.
pub fn build_sideband_hamiltonian(
    etas: &[f64],
    omega0: f64,
    sideband: Sideband,
    expansion: Expansion,
    delta: f64,
    n_cut: usize,
) -> Result<SidebandHamiltonian> {
    let n_spins = etas.len();
    if n_spins == 0 {
        return Err(Error::invalid("etas", "need at least one spin"));
    }
    if n_spins > MAX_SPINS {
        return Err(Error::ResourceBudget {
            what: "spins",
            required: n_spins,
            limit: MAX_SPINS,
        });
    }
    if n_cut > MAX_FOCK_CUT {
        return Err(Error::ResourceBudget {
            what: "Fock cutoff",
            required: n_cut,
            limit: MAX_FOCK_CUT,
        });
    }
    if let Expansion::Full { order } = expansion {
        if order == 0 {
            return Err(Error::invalid("order", "sideband order must be at least 1"));
        }
    }
    if etas.iter().any(|e| !e.is_finite()) || !omega0.is_finite() || !delta.is_finite() {
        return Err(Error::invalid("hamiltonian", "non-finite parameter"));
    }

    let n_fock = fock_dim(n_cut, n_spins, expansion);
    let n_conf = 1usize << n_spins;
    let dim = n_conf * n_fock;
    let k = expansion.shift();
    let half = 0.5 * omega0;

    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
    for n in 0..n_fock {
        for s in 0..n_conf {
            let idx = n * n_conf + s;
            let up = s.count_ones() as f64;
            let diag = -delta * (up - 0.5 * n_spins as f64);
            if diag != 0.0 {
                rows[idx].push((idx, diag));
            }
            for (i, &eta) in etas.iter().enumerate() {
                if s & (1 << i) != 0 {
                    continue;
                }
                let target_n = match sideband {
                    Sideband::Red if n >= k => n - k,
                    Sideband::Blue if n + k < n_fock => n + k,
                    _ => continue,
                };
                let f = match sideband {
                    Sideband::Red => expansion.red(n, eta),
                    Sideband::Blue => expansion.element(n, eta),
                };
                if f == 0.0 {
                    continue;
                }
                let to = target_n * n_conf + (s | (1 << i));
                rows[to].push((idx, half * f));
                rows[idx].push((to, half * f));
            }
        }
    }

    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for mut r in rows {
        r.sort_by_key(|e| e.0);
        for (c, v) in r {
            cols.push(c);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    Ok(SidebandHamiltonian {
        sideband,
        expansion,
        etas: etas.to_vec(),
        omega0,
        delta,
        n_spins,
        n_fock,
        row_ptr,
        cols,
        vals,
    })
}

impl SidebandHamiltonian {
    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn n_fock(&self) -> usize {
        self.n_fock
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn index(&self, spins: usize, n: usize) -> usize {
        n * (1 << self.n_spins) + spins
    }

    /// `⟨row| H |col⟩`.
    pub fn element(&self, row: usize, col: usize) -> f64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        self.cols[range.clone()]
            .iter()
            .position(|&c| c == col)
            .map_or(0.0, |k| self.vals[range.start + k])
    }

    /// Largest `|H_ij - H_ji|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k];
                worst = worst.max((self.vals[k] - self.element(c, r)).abs());
            }
        }
        worst
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim())
            .map(|r| self.vals[self.row_ptr[r]..self.row_ptr[r + 1]].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += x[self.cols[k]] * self.vals[k];
            }
            *out = acc;
        }
    }

    /// `⟨ψ|H|ψ⟩`.
    pub fn expectation(&self, psi: &SpinPhononState) -> f64 {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.apply(&psi.amps, &mut y);
        psi.amps.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Dense row-major copy, for tests and small diagnostics.
    pub fn to_dense(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d * d];
        for r in 0..d {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out[r * d + self.cols[k]] = self.vals[k];
            }
        }
        out
    }
}

/// Amplitudes over `|s₁…s_N⟩ ⊗ |n⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinPhononState {
    pub n_spins: usize,
    pub n_fock: usize,
    pub amps: Vec<Complex64>,
}

impl SpinPhononState {
    /// Basis state with spin bits `spins` and `n` phonons.
    pub fn basis(n_spins: usize, n_fock: usize, spins: usize, n: usize) -> Result<Self> {
        if spins >= 1 << n_spins || n >= n_fock {
            return Err(Error::invalid("basis", "index outside the space"));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); n_fock << n_spins];
        amps[n * (1 << n_spins) + spins] = Complex64::new(1.0, 0.0);
        Ok(SpinPhononState {
            n_spins,
            n_fock,
            amps,
        })
    }

    /// All spins down with `n` phonons, sized for `h`.
    pub fn ground_spins(h: &SidebandHamiltonian, n: usize) -> Result<Self> {
        Self::basis(h.n_spins, h.n_fock, 0, n)
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Population with `n` phonons, traced over spins.
    pub fn phonon_population(&self, n: usize) -> f64 {
        let c = 1 << self.n_spins;
        self.amps[n * c..(n + 1) * c].iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Mean fraction of spins flipped away from `|↓…↓⟩`.
pub fn brightness(psi: &SpinPhononState) -> f64 {
    let c = 1usize << psi.n_spins;
    let n = psi.n_spins as f64;
    psi.amps
        .iter()
        .enumerate()
        .map(|(i, a)| a.norm_sqr() * (i % c).count_ones() as f64 / n)
        .sum()
}

struct Stepper<'a> {
    h: &'a SidebandHamiltonian,
    term: Vec<Complex64>,
    next: Vec<Complex64>,
}

impl<'a> Stepper<'a> {
    fn new(h: &'a SidebandHamiltonian) -> Self {
        let d = h.dim();
        Stepper {
            h,
            term: vec![Complex64::new(0.0, 0.0); d],
            next: vec![Complex64::new(0.0, 0.0); d],
        }
    }

    /// `ψ ← exp(-i H dt) ψ` by Taylor series summed to roundoff.
    fn step(&mut self, psi: &mut [Complex64], dt: f64) {
        self.term.copy_from_slice(psi);
        let scale = psi.iter().map(|a| a.norm()).fold(0.0, f64::max);
        for k in 1..=TAYLOR_MAX_TERMS {
            self.h.apply(&self.term, &mut self.next);
            let f = Complex64::new(0.0, -dt / k as f64);
            let mut biggest = 0.0f64;
            for (t, n) in self.term.iter_mut().zip(&self.next) {
                *t = n * f;
                biggest = biggest.max(t.norm());
            }
            for (p, t) in psi.iter_mut().zip(&self.term) {
                *p += t;
            }
            if biggest <= 1e-17 * scale {
                break;
            }
        }
    }

    fn advance(&mut self, psi: &mut [Complex64], t: f64, steps: usize) {
        let dt = t / steps as f64;
        for _ in 0..steps {
            self.step(psi, dt);
        }
    }
}

fn base_steps(h: &SidebandHamiltonian, t: f64) -> usize {
    ((h.norm_bound() * t.abs() / TAYLOR_STEP_NORM).ceil() as usize).max(1)
}

fn check_norm(psi: &SpinPhononState, step: f64) -> Result<()> {
    let dev = (psi.norm() - 1.0).abs();
    if dev > NORM_TOL {
        return Err(Error::Integration {
            invariant: "state norm",
            deviation: dev,
            step,
        });
    }
    Ok(())
}

/// `exp(-i H t) ψ₀`. The step count is doubled until two successive
/// results agree to [`EVOLVE_TOL`].
pub fn evolve_state(h: &SidebandHamiltonian, psi0: &SpinPhononState, t: f64) -> Result<SpinPhononState> {
    if psi0.amps.len() != h.dim() {
        return Err(Error::invalid("psi0", "dimension does not match the Hamiltonian"));
    }
    if !t.is_finite() {
        return Err(Error::invalid("t", "must be finite"));
    }
    if t == 0.0 {
        return Ok(psi0.clone());
    }
    let mut stepper = Stepper::new(h);
    let mut steps = base_steps(h, t);
    let mut coarse = psi0.clone();
    stepper.advance(&mut coarse.amps, t, steps);
    let mut worst = f64::INFINITY;
    for _ in 0..6 {
        steps *= 2;
        let mut fine = psi0.clone();
        stepper.advance(&mut fine.amps, t, steps);
        worst = fine.max_abs_diff(&coarse);
        if worst <= EVOLVE_TOL {
            check_norm(&fine, t / steps as f64)?;
            return Ok(fine);
        }
        coarse = fine;
    }
    Err(Error::NoConvergence {
        solver: "Taylor propagator",
        iterations: steps,
        residual: worst,
    })
}

/// Brightness at each of the ascending `times`, starting from `psi0`.
pub fn brightness_trace(h: &SidebandHamiltonian, psi0: &SpinPhononState, times: &[f64]) -> Result<Vec<f64>> {
    if psi0.amps.len() != h.dim() {
        return Err(Error::invalid("psi0", "dimension does not match the Hamiltonian"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::invalid("times", "must be non-negative and ascending"));
    }
    let mut stepper = Stepper::new(h);
    let mut psi = psi0.clone();
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let span = t - now;
        if span > 0.0 {
            let steps = base_steps(h, span);
            stepper.advance(&mut psi.amps, span, steps);
            check_norm(&psi, span / steps as f64)?;
        }
        now = t;
        out.push(brightness(&psi));
    }
    Ok(out)
}

/// Fock cutoff for thermal runs: `max(16, 8 n̄)`, raised until the
/// thermal tail is below [`FOCK_TAIL`].
pub fn thermal_fock_cut(nbar: f64) -> Result<usize> {
    let base = (16.0f64).max((8.0 * nbar).ceil()) as usize;
    let n = cutoff_for_tail(nbar, FOCK_TAIL, base, usize::MAX / 2);
    if n > MAX_FOCK_CUT {
        return Err(Error::ResourceBudget {
            what: "Fock cutoff",
            required: n,
            limit: MAX_FOCK_CUT,
        });
    }
    Ok(n)
}

/// Brightness of each initial Fock state `|↓…↓, n⟩`, `n = 0..=n_cut`,
/// at each of `times`: `result[n][k]`.
pub fn fock_brightness(h: &SidebandHamiltonian, n_cut: usize, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    (0..=n_cut)
        .map(|n| brightness_trace(h, &SpinPhononState::ground_spins(h, n)?, times))
        .collect()
}

/// `Σ_n P(n) b_n` for a per-Fock brightness column.
pub fn thermal_average(nbar: f64, per_fock: &[f64]) -> Result<f64> {
    let w = ThermalMode::new(nbar, per_fock.len() - 1)?.weights();
    Ok(w.iter().zip(per_fock).map(|(p, b)| p * b).sum())
}

/// Thermally averaged brightness after driving `sideband` for `t`.
pub fn thermal_brightness(
    etas: &[f64],
    omega0: f64,
    sideband: Sideband,
    expansion: Expansion,
    nbar: f64,
    t: f64,
) -> Result<f64> {
    let n_cut = thermal_fock_cut(nbar)?;
    let h = build_sideband_hamiltonian(etas, omega0, sideband, expansion, 0.0, n_cut)?;
    let b = fock_brightness(&h, n_cut, &[t])?;
    let column: Vec<f64> = b.iter().map(|v| v[0]).collect();
    thermal_average(nbar, &column)
}

/// How the probe time of a ratio curve is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeTime {
    /// Time of the brightest blue-sideband excitation at the central `n̄`
    /// of the grid, searched on `samples` points over the first three
    /// `π/(Ω₀ √Σ η_i²)`.
    BlueArgmax { samples: usize },
    Fixed(f64),
}

impl Default for ProbeTime {
    fn default() -> Self {
        ProbeTime::BlueArgmax { samples: 600 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RatioOptions {
    pub expansion: Expansion,
    pub probe: ProbeTime,
}

/// Red/blue brightness ratio `R(n̄)` at a fixed probe time.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioCurve {
    pub mode: Option<usize>,
    pub etas: Vec<f64>,
    pub probe_time: f64,
    pub nbar: Vec<f64>,
    pub red: Vec<f64>,
    pub blue: Vec<f64>,
    pub ratio: Vec<f64>,
}

impl RatioCurve {
    /// `α = n̄ / (R (1 + n̄))` per grid point (`n̄ = αR/(1 - αR)`); `None`
    /// where `R = 0`.
    pub fn alpha(&self) -> Vec<Option<f64>> {
        self.nbar
            .iter()
            .zip(&self.ratio)
            .map(|(n, r)| if *r > 0.0 { Some(n / (r * (1.0 + n))) } else { None })
            .collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.ratio.windows(2).all(|w| w[1] > w[0])
    }
}

fn probe_window(etas: &[f64], omega0: f64) -> f64 {
    let eta_c = etas.iter().map(|e| e * e).sum::<f64>().sqrt();
    3.0 * core::f64::consts::PI / (omega0 * eta_c)
}

/// Tabulates `R(n̄)` on an ascending grid. Each initial Fock state is run
/// once per sideband; thermal averages reuse those runs.
pub fn ratio_curve(etas: &[f64], omega0: f64, nbar_grid: &[f64], opts: RatioOptions) -> Result<RatioCurve> {
    if etas.len() > MAX_THERMAL_SPINS {
        return Err(Error::ResourceBudget {
            what: "spins for thermal averaging",
            required: etas.len(),
            limit: MAX_THERMAL_SPINS,
        });
    }
    if nbar_grid.is_empty() || nbar_grid.windows(2).any(|w| w[1] <= w[0]) || nbar_grid[0] < 0.0 {
        return Err(Error::invalid("nbar_grid", "must be non-empty, non-negative and ascending"));
    }
    if !(omega0 > 0.0) || etas.iter().all(|e| *e == 0.0) {
        return Err(Error::invalid("coupling", "need omega0 > 0 and a non-zero eta"));
    }
    let nbar_max = *nbar_grid.last().unwrap();
    let n_cut = thermal_fock_cut(nbar_max)?;
    let red_h = build_sideband_hamiltonian(etas, omega0, Sideband::Red, opts.expansion, 0.0, n_cut)?;
    let blue_h = build_sideband_hamiltonian(etas, omega0, Sideband::Blue, opts.expansion, 0.0, n_cut)?;

    let probe_time = match opts.probe {
        ProbeTime::Fixed(t) => t,
        ProbeTime::BlueArgmax { samples } => {
            let samples = samples.max(2);
            let window = probe_window(etas, omega0);
            let times: Vec<f64> = (1..=samples).map(|k| window * k as f64 / samples as f64).collect();
            let per_fock = fock_brightness(&blue_h, n_cut, &times)?;
            let central = nbar_grid[nbar_grid.len() / 2];
            let w = ThermalMode::new(central, n_cut)?.weights();
            let mut best = (f64::NEG_INFINITY, times[0]);
            for (k, &t) in times.iter().enumerate() {
                let a: f64 = w.iter().zip(&per_fock).map(|(p, b)| p * b[k]).sum();
                if a > best.0 {
                    best = (a, t);
                }
            }
            best.1
        }
    };
    if !(probe_time >= 0.0 && probe_time.is_finite()) {
        return Err(Error::invalid("probe_time", "must be non-negative"));
    }

    let column = |h: &SidebandHamiltonian| -> Result<Vec<f64>> {
        Ok(fock_brightness(h, n_cut, &[probe_time])?.into_iter().map(|v| v[0]).collect())
    };
    let red_n = column(&red_h)?;
    let blue_n = column(&blue_h)?;
    let mut curve = RatioCurve {
        mode: None,
        etas: etas.to_vec(),
        probe_time,
        nbar: nbar_grid.to_vec(),
        red: Vec::with_capacity(nbar_grid.len()),
        blue: Vec::with_capacity(nbar_grid.len()),
        ratio: Vec::with_capacity(nbar_grid.len()),
    };
    for &nbar in nbar_grid {
        let r = thermal_average(nbar, &red_n)?;
        let b = thermal_average(nbar, &blue_n)?;
        curve.red.push(r);
        curve.blue.push(b);
        curve.ratio.push(if b > 0.0 { r / b } else { 0.0 });
    }
    Ok(curve)
}

/// Ratio curve for one mode of a chain, using that mode's per-ion `η`.
pub fn mode_ratio_curve(
    modes: &ModeStructure,
    mode: usize,
    omega0: f64,
    nbar_grid: &[f64],
    opts: RatioOptions,
) -> Result<RatioCurve> {
    if mode >= modes.n_modes() {
        return Err(Error::invalid("mode", "index out of range"));
    }
    let mut c = ratio_curve(&modes.mode_lamb_dicke(mode), omega0, nbar_grid, opts)?;
    c.mode = Some(mode);
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateFlag {
    Ok,
    /// The ratio fell below the tabulated range; `n̄` is the grid minimum.
    Clamped,
    /// The ratio reached the top of the tabulated range; `n̄` is only a
    /// lower bound.
    LowerBound,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NbarEstimate {
    pub nbar: f64,
    /// Scaling factor with `n̄ = αR/(1 - αR)`; `None` when `R = 0`.
    pub alpha: Option<f64>,
    pub flag: EstimateFlag,
    /// `n̄` at `R ∓ σ_R`, when an uncertainty was supplied.
    pub interval: Option<(f64, f64)>,
}

fn invert(r: f64, curve: &RatioCurve) -> (f64, EstimateFlag) {
    let (xs, ys) = (&curve.nbar, &curve.ratio);
    if r <= ys[0] {
        let flag = if r < ys[0] { EstimateFlag::Clamped } else { EstimateFlag::Ok };
        return (xs[0], flag);
    }
    for i in 1..ys.len() {
        if r <= ys[i] {
            let (y0, y1) = (ys[i - 1], ys[i]);
            if y1 <= y0 {
                // non-monotone stretch: the curve cannot be inverted past it
                return (xs[i - 1], EstimateFlag::LowerBound);
            }
            let w = (r - y0) / (y1 - y0);
            return (xs[i - 1] + w * (xs[i] - xs[i - 1]), EstimateFlag::Ok);
        }
    }
    (*xs.last().unwrap(), EstimateFlag::LowerBound)
}

/// Inverts `R(n̄)` by linear interpolation. `sigma_r` (may be 0) gives the
/// interval reported alongside.
pub fn extract_nbar(r_measured: f64, sigma_r: f64, curve: &RatioCurve) -> Result<NbarEstimate> {
    if curve.nbar.is_empty() || curve.nbar.len() != curve.ratio.len() {
        return Err(Error::invalid("curve", "empty or inconsistent"));
    }
    if !r_measured.is_finite() || !(sigma_r >= 0.0) {
        return Err(Error::invalid("r_measured", "need finite R and sigma >= 0"));
    }
    let (nbar, flag) = invert(r_measured, curve);
    let alpha = if r_measured > 0.0 && flag == EstimateFlag::Ok {
        Some(nbar / (r_measured * (1.0 + nbar)))
    } else {
        None
    };
    let interval = if sigma_r > 0.0 {
        Some((invert(r_measured - sigma_r, curve).0, invert(r_measured + sigma_r, curve).0))
    } else {
        None
    };
    Ok(NbarEstimate {
        nbar,
        alpha,
        flag,
        interval,
    })
}

/// Half of the peak-to-peak spread of a noise trace.
pub fn half_peak_to_peak(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    0.5 * (hi - lo)
}

/// Upper bound on `n̄` when the red sideband is not visible. The red
/// amplitude is bounded by `noise_amplitude` (already halved, see
/// [`half_peak_to_peak`]); with the blue peak at `bsb_amplitude` the ratio
/// is at most their quotient.
pub fn upper_bound_nbar(noise_amplitude: f64, bsb_amplitude: f64, curve: &RatioCurve) -> Result<NbarEstimate> {
    if !(0.0..=1.0).contains(&noise_amplitude) || !(bsb_amplitude > 0.0 && bsb_amplitude <= 1.0) {
        return Err(Error::invalid("amplitudes", "need noise in [0,1] and bsb in (0,1]"));
    }
    let r = noise_amplitude / bsb_amplitude;
    if r >= 1.0 {
        return Ok(NbarEstimate {
            nbar: *curve.nbar.last().unwrap(),
            alpha: None,
            flag: EstimateFlag::LowerBound,
            interval: None,
        });
    }
    extract_nbar(r, 0.0, curve)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub sideband: Sideband,
    /// Drive detuning from the sideband resonance, rad/s.
    pub detuning: f64,
    /// Drive frequency relative to the carrier, rad/s.
    pub frequency: f64,
    pub raw: f64,
    /// Excitation with the largest blue value in the scan set to 1.
    pub excitation: f64,
}

/// Thermally averaged brightness after a pulse of `probe_time` for a
/// drive detuned by `detuning` from the chosen sideband.
pub fn sideband_excitation(
    etas: &[f64],
    omega0: f64,
    sideband: Sideband,
    expansion: Expansion,
    nbar: f64,
    probe_time: f64,
    detuning: f64,
) -> Result<f64> {
    if etas.len() > MAX_THERMAL_SPINS {
        return Err(Error::ResourceBudget {
            what: "spins for thermal averaging",
            required: etas.len(),
            limit: MAX_THERMAL_SPINS,
        });
    }
    let n_cut = thermal_fock_cut(nbar)?;
    let h = build_sideband_hamiltonian(etas, omega0, sideband, expansion, detuning, n_cut)?;
    let column: Vec<f64> = fock_brightness(&h, n_cut, &[probe_time])?.into_iter().map(|v| v[0]).collect();
    thermal_average(nbar, &column)
}

/// Red and blue excitation of one mode over a detuning grid, each mode
/// simulated on its own.
pub fn spectrum_scan(
    modes: &ModeStructure,
    mode: usize,
    nbar: f64,
    omega0: f64,
    probe_time: f64,
    detunings: &[f64],
    expansion: Expansion,
) -> Result<Vec<SpectrumPoint>> {
    if mode >= modes.n_modes() {
        return Err(Error::invalid("mode", "index out of range"));
    }
    let etas = modes.mode_lamb_dicke(mode);
    let omega_m = modes.frequencies[mode];
    let mut points = Vec::with_capacity(2 * detunings.len());
    for sideband in [Sideband::Red, Sideband::Blue] {
        let sign = if sideband == Sideband::Red { -1.0 } else { 1.0 };
        for &d in detunings {
            let raw = sideband_excitation(&etas, omega0, sideband, expansion, nbar, probe_time, d)?;
            points.push(SpectrumPoint {
                sideband,
                detuning: d,
                frequency: sign * omega_m + d,
                raw,
                excitation: 0.0,
            });
        }
    }
    let peak = points
        .iter()
        .filter(|p| p.sideband == Sideband::Blue)
        .map(|p| p.raw)
        .fold(0.0, f64::max);
    if peak > 0.0 {
        for p in &mut points {
            p.excitation = p.raw / peak;
        }
    }
    Ok(points)
}

/// Thermal tail left out by [`thermal_fock_cut`].
pub fn fock_tail(nbar: f64) -> Result<f64> {
    Ok(thermal_tail(nbar, thermal_fock_cut(nbar)?))
}
