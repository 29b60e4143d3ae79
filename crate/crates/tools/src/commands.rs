//! One function per subcommand. Each runs the core routines and returns an
//! [`Artifact`]; nothing here touches the filesystem except input readers.

use std::path::Path;

use rayon::prelude::*;
use rsc_core::carrier::{
    carrier_rabi_ground, fit_com_nbar, fit_damped_flop, multimode_carrier_exact, multimode_carrier_mc,
    CarrierModel, ComFitOptions, FlopTrace, ENUMERATION_BUDGET,
};
use rsc_core::chain::{modes, positions_m, Axis};
use rsc_core::constants::{mhz, to_hz, AMU, BE9_ION_MASS_AMU, H2_MASS_AMU};
use rsc_core::crsc::cooling_trajectory_with;
use rsc_core::limits::{
    carrier_off_resonant_rate, collision_budget, default_geometric_factor, field_noise_extrapolation,
    hard_sphere_mean_energy, recoil_channels, ChannelUnit, MeltModel,
    RecoilParams,
};
use rsc_core::prsc::{optimize_pulse_length, prsc_trajectory};
use rsc_core::scaling::scaling_curve;
use rsc_core::sideband::{
    half_peak_to_peak, mode_ratio_curve, ratio_curve, spectrum_scan, upper_bound_nbar, EstimateFlag,
    ProbeTime, RatioCurve, RatioOptions, Sideband, MAX_THERMAL_SPINS,
};
use serde_json::json;

use crate::error::ToolError;
use crate::output::{Artifact, Context};
use crate::table::{Cell, ResultTable};

fn khz_of(omega: f64) -> f64 {
    to_hz(omega) * 1e-3
}

fn axis_name(axis: Axis) -> &'static str {
    match axis {
        Axis::Axial => "axial",
        Axis::Radial => "radial",
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Normal modes of the configured chain.
pub fn run_modes(ctx: &Context, axis: Axis) -> Result<Artifact, ToolError> {
    let trap = ctx.config.trap_config()?;
    let m = modes(&trap, axis)?;
    let n = m.n_ions();
    let mut columns = vec!["mode".to_string(), "frequency_khz".into(), "ratio_to_com".into()];
    columns.extend((0..n).map(|i| format!("eta_ion_{i}")));
    let mut table = ResultTable::new(columns);
    let com = m.frequencies[0];
    for (k, w) in m.frequencies.iter().enumerate() {
        let mut row: Vec<Cell> = vec![k.into(), khz_of(*w).into(), (w / com).into()];
        row.extend((0..n).map(|i| Cell::from(m.lamb_dicke[(i, k)])));
        table.push(row)?;
    }
    let positions: Vec<f64> = positions_m(&trap)?.iter().map(|z| z * 1e6).collect();
    let freqs: Vec<f64> = m.frequencies.iter().map(|w| khz_of(*w)).collect();
    let (lo, hi) = freqs.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), f| (lo.min(*f), hi.max(*f)));
    let mut art = Artifact::new("modes");
    art.param("axis", axis_name(axis));
    art.results = json!({
        "axis": axis_name(axis),
        "n_ions": n,
        "frequencies_khz": freqs,
        "bandwidth_khz": hi - lo,
        "positions_um": positions,
        "com_eta_single_ion": trap.lamb_dicke(com),
    });
    art.tables.push(("modes".into(), table));
    Ok(art)
}

/// Parses `--sweep pump_scale=0.2,0.4,1`.
pub fn parse_sweep(spec: &str) -> Result<Vec<f64>, ToolError> {
    let bad = |why: &str| ToolError::Usage(format!("invalid --sweep `{spec}`: {why}"));
    let (key, values) = spec.split_once('=').ok_or_else(|| bad("expected key=v1,v2,..."))?;
    if key.trim() != "pump_scale" {
        return Err(bad("only pump_scale can be swept"));
    }
    let scales = values
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| bad("values must be numbers")))
        .collect::<Result<Vec<_>, _>>()?;
    if scales.is_empty() || scales.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
        return Err(bad("values must be non-negative"));
    }
    Ok(scales)
}

/// Continuous cooling, one trajectory per pump scale.
pub fn run_crsc(ctx: &Context, sweep: Option<Vec<f64>>) -> Result<Artifact, ToolError> {
    let sim = &ctx.config.simulation;
    let swept = sweep.is_some();
    let scales = sweep.unwrap_or_else(|| ctx.config.drive.pump_scale.clone());
    let jobs: Vec<_> = scales
        .iter()
        .map(|s| ctx.config.crsc_config(*s))
        .collect::<Result<_, _>>()?;
    let results = ctx.pool(|| {
        jobs.par_iter()
            .map(|c| {
                let dt = sim.dt_ns.map_or_else(|| c.max_step(), |ns| ns * 1e-9);
                cooling_trajectory_with(c, sim.nbar0, sim.duration_us * 1e-6, dt).map(|t| (dt, t))
            })
            .collect::<Vec<_>>()
    })?;
    let mut table = ResultTable::new(["pump_scale", "time_us", "nbar", "rho44"]);
    let mut runs = Vec::new();
    for (scale, r) in scales.iter().zip(results) {
        let (dt, traj) = r?;
        for k in 0..traj.times.len() {
            table.push(vec![
                (*scale).into(),
                (traj.times[k] * 1e6).into(),
                traj.nbar[k].into(),
                traj.rho44[k].into(),
            ])?;
        }
        runs.push(json!({
            "pump_scale": scale,
            "dt_ns": dt * 1e9,
            "final_nbar": traj.final_nbar(),
            "time_to_0_2_us": traj.time_to(0.2).map(|t| t * 1e6),
            "time_to_0_5_us": traj.time_to(0.5).map(|t| t * 1e6),
        }));
    }
    let best = runs
        .iter()
        .min_by(|a, b| a["final_nbar"].as_f64().unwrap_or(f64::NAN).total_cmp(&b["final_nbar"].as_f64().unwrap_or(f64::NAN)))
        .map(|r| r["pump_scale"].clone());
    let mut art = Artifact::new("crsc");
    if swept {
        let list: Vec<String> = scales.iter().map(|s| s.to_string()).collect();
        art.param("sweep", format!("pump_scale={}", list.join(",")));
    }
    art.results = json!({
        "eta": ctx.config.eta()?,
        "nbar0": sim.nbar0,
        "duration_us": sim.duration_us,
        "runs": runs,
        "lowest_final_pump_scale": best,
    });
    art.tables.push(("crsc".into(), table));
    Ok(art)
}

/// Pulsed cooling at the best pulse length.
pub fn run_prsc(ctx: &Context) -> Result<Artifact, ToolError> {
    let sim = &ctx.config.simulation;
    let (eta, omega0) = (ctx.config.eta()?, ctx.config.omega0());
    let t_opt = optimize_pulse_length(
        sim.nbar0,
        eta,
        omega0,
        sim.prsc_pulses,
        (0.0, sim.prsc_window_us * 1e-6),
        sim.prsc_grid,
    )?;
    let nbar = prsc_trajectory(sim.nbar0, eta, omega0, t_opt, sim.prsc_pulses)?;
    let times: Vec<f64> = (0..nbar.len()).map(|k| k as f64 * t_opt).collect();
    let mut table = ResultTable::new(["pulse", "time_us", "nbar"]);
    for (k, (t, n)) in times.iter().zip(&nbar).enumerate() {
        table.push(vec![k.into(), (t * 1e6).into(), (*n).into()])?;
    }
    let crossing = |target: f64| {
        let i = nbar.iter().position(|&v| v <= target)?;
        if i == 0 {
            return Some(0.0);
        }
        let w = (nbar[i - 1] - target) / (nbar[i - 1] - nbar[i]);
        Some((times[i - 1] + w * (times[i] - times[i - 1])) * 1e6)
    };
    let mut art = Artifact::new("prsc");
    art.results = json!({
        "eta": eta,
        "optimal_pulse_us": t_opt * 1e6,
        "pulses": sim.prsc_pulses,
        "total_time_us": t_opt * sim.prsc_pulses as f64 * 1e6,
        "final_nbar": nbar.last().copied(),
        "time_to_0_5_us": crossing(0.5),
    });
    art.tables.push(("prsc".into(), table));
    Ok(art)
}

/// Parallel and sequential cooling times against chain length.
pub fn run_scaling(ctx: &Context, axis: Axis, n_max: usize) -> Result<Artifact, ToolError> {
    let trap = ctx.config.trap_config()?;
    let curve = scaling_curve(n_max, &trap, axis)?;
    let mut table = ResultTable::new(["n_ions", "t_parallel_us", "t_sequential_us", "sequential_over_parallel"]);
    for r in &curve.rows {
        table.push(vec![
            r.n_ions.into(),
            (r.t_parallel * 1e6).into(),
            (r.t_sequential * 1e6).into(),
            (r.t_sequential / r.t_parallel).into(),
        ])?;
    }
    let fit = if curve.rows.len() >= 3 {
        curve.parallel_log_fit().ok().map(|f| {
            json!({
                "intercept_us": f.line.intercept * 1e6,
                "slope_us": f.line.slope * 1e6,
                "r2": f.line.r2,
                "max_relative_residual": f.max_relative_residual,
            })
        })
    } else {
        None
    };
    let n_min = if curve.rows.len() >= 20 { 10 } else { 1 };
    let exponent = |seq: bool| {
        if curve.rows.len() >= 3 {
            curve.growth_exponent(seq, n_min).ok()
        } else {
            None
        }
    };
    let mut art = Artifact::new("scaling");
    art.param("axis", axis_name(axis));
    art.param("n_max", n_max);
    art.results = json!({
        "axis": axis_name(axis),
        "t1_us": curve.t1 * 1e6,
        "rows": curve.rows.len(),
        "unstable_from": curve.unstable_from,
        "parallel_log_fit": fit,
        "parallel_growth_exponent": exponent(false),
        "sequential_growth_exponent": exponent(true),
    });
    art.tables.push(("scaling".into(), table));
    Ok(art)
}

fn ratio_options(ctx: &Context) -> RatioOptions {
    RatioOptions {
        expansion: ctx.config.expansion(),
        probe: match ctx.config.simulation.probe_time_us {
            Some(t) => ProbeTime::Fixed(t * 1e-6),
            None => ProbeTime::default(),
        },
    }
}

fn nbar_grid(ctx: &Context) -> Vec<f64> {
    let sim = &ctx.config.simulation;
    let n = (sim.nbar_max / sim.nbar_step).round() as usize;
    (0..=n).map(|k| k as f64 * sim.nbar_step).collect()
}

/// Ratio curve for one mode. Chains with more spins than the thermal
/// averaging budget fall back to a single spin carrying the mode's
/// root-mean-square `η`; the output says which was used.
fn mode_curve(
    ctx: &Context,
    m: &rsc_core::chain::ModeStructure,
    mode: usize,
) -> Result<(RatioCurve, &'static str), ToolError> {
    let grid = nbar_grid(ctx);
    let omega0 = ctx.config.omega0();
    if m.n_ions() <= MAX_THERMAL_SPINS {
        Ok((mode_ratio_curve(m, mode, omega0, &grid, ratio_options(ctx))?, "all_spins"))
    } else {
        let etas = m.mode_lamb_dicke(mode);
        let rms = (etas.iter().map(|e| e * e).sum::<f64>() / etas.len() as f64).sqrt();
        let mut c = ratio_curve(&[rms], omega0, &grid, ratio_options(ctx))?;
        c.mode = Some(mode);
        Ok((c, "single_spin"))
    }
}

/// Red and blue sideband noise read from a spectrum file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeNoise {
    pub mode: usize,
    pub noise_amplitude: f64,
    pub bsb_amplitude: f64,
}

/// Reads a spectrum file with columns `mode`, `sideband` (`red`/`blue`)
/// and `excitation`; the noise amplitude of a mode is half the
/// peak-to-peak spread of its red samples and the BSB amplitude the
/// largest blue sample.
pub fn read_sideband_noise(path: &Path) -> Result<Vec<ModeNoise>, ToolError> {
    let t = ResultTable::read_csv(path)?;
    let need = |c: &str| {
        t.column(c)
            .ok_or_else(|| ToolError::Format(format!("{}: missing column `{c}`", path.display())))
    };
    let (km, ks, ke) = (need("mode")?, need("sideband")?, need("excitation")?);
    let mut per_mode: std::collections::BTreeMap<usize, (Vec<f64>, f64)> = Default::default();
    for row in &t.rows {
        let mode = match &row[km] {
            Cell::Int(i) if *i >= 0 => *i as usize,
            other => return Err(ToolError::Format(format!("bad mode index `{other}`"))),
        };
        let x = row[ke]
            .as_f64()
            .ok_or_else(|| ToolError::Format(format!("bad excitation `{}`", row[ke])))?;
        let entry = per_mode.entry(mode).or_insert((Vec::new(), 0.0));
        match row[ks].to_string().as_str() {
            "red" => entry.0.push(x),
            "blue" => entry.1 = entry.1.max(x),
            other => return Err(ToolError::Format(format!("bad sideband `{other}`"))),
        }
    }
    Ok(per_mode
        .into_iter()
        .map(|(mode, (red, blue))| ModeNoise {
            mode,
            noise_amplitude: half_peak_to_peak(&red),
            bsb_amplitude: blue,
        })
        .collect())
}

fn flag_name(f: EstimateFlag) -> &'static str {
    match f {
        EstimateFlag::Ok => "ok",
        EstimateFlag::Clamped => "clamped",
        EstimateFlag::LowerBound => "lower_bound",
    }
}

/// Sideband ratio curve, optional spectrum and optional upper bounds.
pub fn run_sideband(
    ctx: &Context,
    mode: usize,
    spectrum: bool,
    bounds: Option<&Path>,
) -> Result<Artifact, ToolError> {
    let trap = ctx.config.trap_config()?;
    let m = modes(&trap, Axis::Axial)?;
    if mode >= m.n_modes() {
        return Err(ToolError::Usage(format!("mode {mode} does not exist in a {}-ion chain", m.n_ions())));
    }
    let (curve, curve_kind) = mode_curve(ctx, &m, mode)?;
    let mut art = Artifact::new("sideband");
    art.param("mode", mode);

    let mut table = ResultTable::new(["nbar", "red", "blue", "ratio", "alpha"]);
    for (k, a) in curve.alpha().into_iter().enumerate() {
        table.push(vec![
            curve.nbar[k].into(),
            curve.red[k].into(),
            curve.blue[k].into(),
            curve.ratio[k].into(),
            a.into(),
        ])?;
    }
    table.set_meta("curve", curve_kind);
    art.tables.push(("sideband_ratio".into(), table));

    let mut results = json!({
        "mode": mode,
        "mode_frequency_khz": khz_of(m.frequencies[mode]),
        "etas": curve.etas,
        "curve": curve_kind,
        "probe_time_us": curve.probe_time * 1e6,
        "monotone": curve.is_monotone(),
    });

    if spectrum {
        let sim = &ctx.config.simulation;
        let span = rsc_core::constants::khz(sim.spectrum_span_khz);
        let detunings = linspace(-span, span, sim.spectrum_points);
        let points = spectrum_scan(
            &m,
            mode,
            sim.spectrum_nbar,
            ctx.config.omega0(),
            curve.probe_time,
            &detunings,
            ctx.config.expansion(),
        )?;
        let mut t = ResultTable::new([
            "mode",
            "sideband",
            "detuning_hz",
            "frequency_hz",
            "excitation",
            "raw",
            "probe_time_s",
        ]);
        for p in &points {
            t.push(vec![
                mode.into(),
                match p.sideband {
                    Sideband::Red => "red",
                    Sideband::Blue => "blue",
                }
                .into(),
                to_hz(p.detuning).into(),
                to_hz(p.frequency).into(),
                p.excitation.into(),
                p.raw.into(),
                curve.probe_time.into(),
            ])?;
        }
        t.set_meta("nbar", sim.spectrum_nbar);
        art.tables.push(("sideband_spectrum".into(), t));
    }

    if let Some(path) = bounds {
        let noise = read_sideband_noise(path)?;
        let mut t = ResultTable::new(["mode", "noise_amplitude", "bsb_amplitude", "ratio", "nbar_bound", "flag", "curve"]);
        let mut list = Vec::new();
        for n in &noise {
            if n.mode >= m.n_modes() {
                return Err(ToolError::Usage(format!(
                    "{}: mode {} does not exist in a {}-ion chain",
                    path.display(),
                    n.mode,
                    m.n_ions()
                )));
            }
            let (c, kind) = if n.mode == mode { (curve.clone(), curve_kind) } else { mode_curve(ctx, &m, n.mode)? };
            let est = upper_bound_nbar(n.noise_amplitude, n.bsb_amplitude, &c)?;
            t.push(vec![
                n.mode.into(),
                n.noise_amplitude.into(),
                n.bsb_amplitude.into(),
                (n.noise_amplitude / n.bsb_amplitude).into(),
                est.nbar.into(),
                flag_name(est.flag).into(),
                kind.into(),
            ])?;
            list.push(json!({"mode": n.mode, "nbar_bound": est.nbar, "flag": flag_name(est.flag)}));
        }
        let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        art.param("bounds_input", file);
        art.tables.push(("sideband_bounds".into(), t));
        results["upper_bounds"] = json!(list);
    }
    art.results = results;
    Ok(art)
}

/// Carrier model of the configured chain: COM at `com_nbar`, every other
/// axial mode at `spectator_nbar`, Gaussian beam along the chain.
pub fn carrier_template(ctx: &Context, com_nbar: f64, spectator_nbar: f64) -> Result<CarrierModel, ToolError> {
    let trap = ctx.config.trap_config()?;
    let m = modes(&trap, Axis::Axial)?;
    let pos = positions_m(&trap)?;
    let mut nbars = vec![spectator_nbar; m.n_modes()];
    nbars[0] = com_nbar;
    Ok(CarrierModel::with_beam(
        m,
        nbars,
        ctx.config.omega0(),
        &pos,
        ctx.config.simulation.waist_um * 1e-6,
    )?)
}

/// Synthetic carrier flopping traces, as excitation probability.
pub fn run_carrier(ctx: &Context) -> Result<Artifact, ToolError> {
    let sim = &ctx.config.simulation;
    let model = carrier_template(ctx, sim.com_nbar, sim.spectator_nbar)?;
    let n = model.modes.n_ions();
    let times = linspace(0.0, sim.flop_duration_us * 1e-6, sim.flop_points);
    let exact = model.enumeration_size().is_some_and(|s| s <= ENUMERATION_BUDGET);
    let traces = ctx.pool(|| {
        (0..n)
            .into_par_iter()
            .map(|ion| {
                if exact {
                    multimode_carrier_exact(&model, ion, &times)
                } else {
                    multimode_carrier_mc(&model, ion, &times, sim.mc_samples, ctx.seed)
                }
            })
            .collect::<Vec<_>>()
    })?;
    let mut table = ResultTable::new(["ion_index", "time_s", "excitation", "std_error"]);
    for (ion, tr) in traces.into_iter().enumerate() {
        let tr = tr?;
        for ((t, p), se) in times.iter().zip(&tr.p_excited).zip(&tr.std_error) {
            table.push(vec![ion.into(), (*t).into(), (1.0 - p).into(), (*se).into()])?;
        }
    }
    let rates: Vec<f64> = (0..n)
        .map(|i| carrier_rabi_ground(&model.modes, i, model.omega0[i]).map(khz_of))
        .collect::<Result<_, _>>()?;
    let mut art = Artifact::new("carrier");
    art.results = json!({
        "method": if exact { "exact" } else { "monte_carlo" },
        "com_nbar": sim.com_nbar,
        "spectator_nbar": sim.spectator_nbar,
        "ground_rabi_khz": rates,
        "center_over_edge": rates[n / 2] / rates[0],
    });
    art.tables.push(("carrier".into(), table));
    Ok(art)
}

/// Reads traces with columns `ion_index`, `time_s`, `excitation`.
pub fn read_traces(path: &Path) -> Result<Vec<FlopTrace>, ToolError> {
    let t = ResultTable::read_csv(path)?;
    let need = |c: &str| {
        t.numeric_column(c)
            .ok_or_else(|| ToolError::Format(format!("{}: missing column `{c}`", path.display())))
    };
    let (ions, times, exc) = (need("ion_index")?, need("time_s")?, need("excitation")?);
    let mut traces: Vec<FlopTrace> = Vec::new();
    for k in 0..ions.len() {
        let (ion, t, e) = (ions[k], times[k], exc[k]);
        if !(ion >= 0.0 && ion.fract() == 0.0 && t.is_finite() && e.is_finite()) {
            return Err(ToolError::Format(format!("{}: bad row {}", path.display(), k + 1)));
        }
        let ion = ion as usize;
        let tr = match traces.iter_mut().find(|tr| tr.ion == Some(ion)) {
            Some(tr) => tr,
            None => {
                traces.push(FlopTrace {
                    ion: Some(ion),
                    times: Vec::new(),
                    p_excited: Vec::new(),
                    std_error: Vec::new(),
                });
                traces.last_mut().unwrap()
            }
        };
        tr.times.push(t);
        tr.p_excited.push(1.0 - e);
        tr.std_error.push(0.0);
    }
    if traces.is_empty() {
        return Err(ToolError::Format(format!("{}: no traces", path.display())));
    }
    Ok(traces)
}

/// COM occupation fitted to measured or synthetic traces. With `smooth`,
/// each trace is first replaced by a damped-cosine fit.
pub fn run_carrier_fit(ctx: &Context, path: &Path, smooth: bool) -> Result<Artifact, ToolError> {
    let template = carrier_template(ctx, 0.0, 0.0)?;
    let mut traces = read_traces(path)?;
    let n = template.modes.n_ions();
    if let Some(tr) = traces.iter().find(|t| t.ion.unwrap() >= n) {
        return Err(ToolError::Usage(format!(
            "trace for ion {} but the chain has {n} ions",
            tr.ion.unwrap()
        )));
    }
    if smooth {
        for tr in &mut traces {
            let ion = tr.ion.unwrap();
            let guess = carrier_rabi_ground(&template.modes, ion, template.omega0[ion])?;
            let f = fit_damped_flop(tr, guess)?;
            tr.p_excited = tr.times.iter().map(|t| f.eval(*t)).collect();
        }
    }
    let fit = fit_com_nbar(&traces, &template, ComFitOptions::default())?;
    let mut table = ResultTable::new(["nbar", "sse"]);
    for (x, s) in &fit.objective {
        table.push(vec![(*x).into(), (*s).into()])?;
    }
    let mut art = Artifact::new("carrier_fit");
    art.param("traces", path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default());
    art.param("smooth", smooth);
    art.results = json!({
        "nbar": fit.nbar,
        "interval": [fit.interval.0, fit.interval.1],
        "sse": fit.sse,
        "flat": fit.flat,
        "traces": traces.len(),
    });
    art.tables.push(("carrier_fit".into(), table));
    Ok(art)
}

/// Inputs of the error budget that are not part of the run config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitsInputs {
    /// Single-ion cooling and heating rates, 1/s, measured at `omega1_khz`.
    pub rc0: f64,
    pub rh0: f64,
    pub omega1_khz: f64,
    /// Exponent of the field-noise spectrum.
    pub noise_alpha: f64,
    pub cleanup_photons: f64,
    pub doppler_scatter_per_s: f64,
    pub carrier_detuning_mhz: f64,
    /// Background-gas collisions per ion per second.
    pub collision_rate: f64,
    pub experiment_ms: f64,
    pub gas_temperature_k: f64,
}

impl Default for LimitsInputs {
    fn default() -> Self {
        LimitsInputs {
            rc0: 3.2e4,
            rh0: 2.0e2,
            omega1_khz: 735.0,
            noise_alpha: 1.0,
            cleanup_photons: 0.5,
            doppler_scatter_per_s: 125e3,
            carrier_detuning_mhz: 1.82,
            collision_rate: 0.007,
            experiment_ms: 10.0,
            gas_temperature_k: 300.0,
        }
    }
}

/// Heating, recoil and collision budget of the configured chain.
pub fn run_limits(ctx: &Context, p: &LimitsInputs) -> Result<Artifact, ToolError> {
    let trap = ctx.config.trap_config()?;
    let eta = ctx.config.eta()?;
    let n = trap.n_ions;
    let budget = field_noise_extrapolation(
        p.rc0,
        p.rh0,
        rsc_core::constants::khz(p.omega1_khz),
        trap.omega_z,
        n as f64,
        p.noise_alpha,
    )?;
    let channels = recoil_channels(
        eta,
        &RecoilParams {
            cleanup_photons: p.cleanup_photons,
            doppler_scatter_rate: p.doppler_scatter_per_s,
            carrier_rabi: ctx.config.omega0(),
            carrier_detuning: mhz(p.carrier_detuning_mhz),
        },
    )?;
    let energy = hard_sphere_mean_energy(
        p.gas_temperature_k,
        H2_MASS_AMU * AMU,
        BE9_ION_MASS_AMU * AMU,
        default_geometric_factor(),
    )?;
    let col = collision_budget(energy, n, trap.omega_z, p.collision_rate, p.experiment_ms * 1e-3, MeltModel::Linear)?;

    let mut rows: Vec<(String, f64, &str)> = vec![
        ("cooling_rate".into(), budget.cooling_rate, "1/s"),
        ("heating_rate".into(), budget.heating_rate, "1/s"),
        ("equilibrium_nbar".into(), budget.equilibrium_nbar, "phonons"),
    ];
    for c in &channels {
        let unit = match c.unit {
            ChannelUnit::PhononsPerCycle => "phonons/cycle",
            ChannelUnit::PhononsPerSecond => "phonons/s",
        };
        rows.push((format!("recoil_{}", c.label), c.value, unit));
    }
    rows.extend([
        (
            "carrier_scatter_rate".to_string(),
            carrier_off_resonant_rate(ctx.config.omega0(), mhz(p.carrier_detuning_mhz)),
            "photons/s",
        ),
        ("collision_energy".into(), energy, "J"),
        ("collision_energy_per_mode".into(), to_hz(col.omega_bgc), "Hz"),
        ("collision_nbar_equiv".into(), col.nbar_equiv, "phonons"),
        ("collisions_per_s".into(), col.collisions_per_s, "1/s"),
        ("collisions_per_experiment".into(), col.collisions_per_experiment, "1"),
        ("melted_fraction".into(), col.melted_fraction, "1"),
    ]);
    let mut table = ResultTable::new(["quantity", "value", "unit"]);
    let mut results = serde_json::Map::new();
    for (name, value, unit) in &rows {
        table.push(vec![name.as_str().into(), (*value).into(), (*unit).into()])?;
        results.insert(name.clone(), json!(value));
    }
    results.insert("eta".into(), json!(eta));
    let mut art = Artifact::new("limits");
    art.param("rc0", p.rc0);
    art.param("rh0", p.rh0);
    art.param("omega1_khz", p.omega1_khz);
    art.param("noise_alpha", p.noise_alpha);
    art.param("cleanup_photons", p.cleanup_photons);
    art.param("doppler_scatter_per_s", p.doppler_scatter_per_s);
    art.param("carrier_detuning_mhz", p.carrier_detuning_mhz);
    art.param("collision_rate", p.collision_rate);
    art.param("experiment_ms", p.experiment_ms);
    art.param("gas_temperature_k", p.gas_temperature_k);
    art.results = serde_json::Value::Object(results);
    art.tables.push(("limits".into(), table));
    Ok(art)
}
