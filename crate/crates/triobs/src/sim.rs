//! Fixed-step simulation of a plant together with one or more observers,
//! filtered measurement noise, and metric extraction.
//!
//! Plant and observers advance simultaneously with explicit Euler on a
//! shared grid; the measurement `y_k = z_1(t_k) + v_k` is fed to every
//! observer at every step. Runs are bitwise deterministic for a fixed
//! scenario (seed included), independent of thread count.

use crate::observers::{ObserverConfig, ObserverKind, WHatMode};
use crate::plant::{example_dynamics, h4, TriangularSystem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("plant state diverged at t = {t}")]
    PlantDiverged { t: f64 },
}

/// Input signal u(t).
#[derive(Clone, Debug)]
pub enum InputSignal {
    Zero,
    Constant(f64),
    /// `amplitude * sin(frequency * t)` (frequency in rad/s).
    Sinusoid { amplitude: f64, frequency: f64 },
    /// Values sampled on the simulation grid, one per step instant.
    Series(Arc<Vec<f64>>),
}

impl InputSignal {
    #[inline]
    fn eval(&self, t: f64, k: usize) -> f64 {
        match self {
            InputSignal::Zero => 0.0,
            InputSignal::Constant(c) => *c,
            InputSignal::Sinusoid { amplitude, frequency } => amplitude * (frequency * t).sin(),
            InputSignal::Series(v) => v[k.min(v.len() - 1)],
        }
    }
}

/// Process disturbance w(t) entering the plant lines.
#[derive(Clone, Debug, Default)]
pub enum Disturbance {
    #[default]
    None,
    /// Constant on one line (1-based), zero elsewhere.
    ConstantLine { line: usize, value: f64 },
    /// Sinusoid on one line (1-based).
    SinusoidLine { line: usize, amplitude: f64, frequency: f64 },
}

impl Disturbance {
    #[inline]
    fn eval(&self, t: f64, out: &mut [f64]) {
        out.fill(0.0);
        match self {
            Disturbance::None => {}
            Disturbance::ConstantLine { line, value } => out[line - 1] = *value,
            Disturbance::SinusoidLine { line, amplitude, frequency } => {
                out[line - 1] = amplitude * (frequency * t).sin()
            }
        }
    }
}

/// Plant to observe.
#[derive(Clone)]
pub enum PlantKind {
    /// Benchmark oscillator with state x in R^3; observed coordinates are
    /// z = h4(x) in R^4, with the last line's nonlinearity unknown.
    Example { x0: [f64; 3] },
    /// Explicit triangular dynamics in z-coordinates.
    Triangular { system: Arc<TriangularSystem>, z0: Vec<f64> },
}

impl PlantKind {
    pub fn dim(&self) -> usize {
        match self {
            PlantKind::Example { .. } => 4,
            PlantKind::Triangular { system, .. } => system.m,
        }
    }
}

/// Filtered Gaussian measurement noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Standard deviation of the white source.
    pub sigma: f64,
    /// First-order low-pass parameter.
    pub filter_a: f64,
    pub seed: u64,
}

/// One observer attached to a scenario.
#[derive(Clone)]
pub struct ObserverSetup {
    pub cfg: ObserverConfig,
    /// Flat initial observer state (all block states for cascades).
    pub zhat0: Vec<f64>,
    pub label: String,
}

/// Complete simulation description.
#[derive(Clone)]
pub struct Scenario {
    pub plant: PlantKind,
    /// Observers simulated against the same plant run (may be empty for
    /// plant-only trajectories).
    pub observers: Vec<ObserverSetup>,
    pub input: InputSignal,
    pub disturbance: Disturbance,
    pub noise: Option<NoiseConfig>,
    pub dt: f64,
    pub t_final: f64,
    pub seed: u64,
    /// Record every `record_stride`-th step (plus the endpoint).
    pub record_stride: usize,
    /// Fraction of the horizon over which final errors are measured.
    pub tail_fraction: f64,
    /// Error-norm threshold defining the convergence time.
    pub conv_threshold: f64,
}

impl Scenario {
    /// Number of Euler steps (grid instants are 0..=n_steps).
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidScenario(m));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final >= self.dt) {
            return bad(format!("horizon {} shorter than one step {}", self.t_final, self.dt));
        }
        if self.record_stride == 0 {
            return bad("record stride must be >= 1".into());
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction < 1.0) {
            return bad(format!("tail fraction must lie in (0,1), got {}", self.tail_fraction));
        }
        if !(self.conv_threshold > 0.0) {
            return bad(format!("convergence threshold must be positive, got {}", self.conv_threshold));
        }
        let m = self.plant.dim();
        if let PlantKind::Triangular { system, z0 } = &self.plant {
            if z0.len() != system.m {
                return bad(format!("initial state has {} entries for an {}-line system", z0.len(), system.m));
            }
        }
        match &self.disturbance {
            Disturbance::None => {}
            Disturbance::ConstantLine { line, .. } | Disturbance::SinusoidLine { line, .. } => {
                if *line < 1 || *line > m {
                    return bad(format!("disturbance line {line} outside 1..={m}"));
                }
                if matches!(self.plant, PlantKind::Example { .. }) {
                    return bad("line disturbances require an explicit triangular plant".into());
                }
            }
        }
        if let Some(nc) = &self.noise {
            if !(nc.sigma >= 0.0) || !(nc.filter_a > 0.0) {
                return bad(format!("noise needs sigma >= 0 and filter_a > 0, got {} and {}", nc.sigma, nc.filter_a));
            }
        }
        if let InputSignal::Series(v) = &self.input {
            if v.len() != self.n_steps() + 1 {
                return bad(format!("input series has {} samples, grid needs {}", v.len(), self.n_steps() + 1));
            }
        }
        for obs in &self.observers {
            obs.cfg
                .validate()
                .map_err(|e| SimError::InvalidScenario(e.to_string()))?;
            if obs.cfg.m != m {
                return bad(format!("observer '{}' built for dimension {} against an {m}-line plant", obs.label, obs.cfg.m));
            }
            if obs.zhat0.len() != obs.cfg.state_dim() {
                return bad(format!(
                    "observer '{}' needs {} initial states, got {}",
                    obs.label,
                    obs.cfg.state_dim(),
                    obs.zhat0.len()
                ));
            }
            match &obs.cfg.w_hat {
                WHatMode::Zero => {}
                WHatMode::PerLine(v) => {
                    if v.len() != obs.cfg.state_dim() {
                        return bad(format!(
                            "observer '{}' disturbance estimates: {} values for {} lines",
                            obs.label,
                            v.len(),
                            obs.cfg.state_dim()
                        ));
                    }
                }
                WHatMode::ExactResidual => {
                    if matches!(self.plant, PlantKind::Example { .. }) {
                        return bad("exact-residual disturbance estimates require a fully known triangular plant".into());
                    }
                }
            }
        }
        Ok(())
    }
}

/// Result of one observer within a scenario run.
#[derive(Clone, Debug)]
pub struct ObserverRun {
    pub label: String,
    /// Headline gain (single observers: L; cascades: last block's L).
    pub gain: f64,
    /// Column names of the flat observer states.
    pub state_labels: Vec<String>,
    /// Flat observer states at the recorded instants.
    pub states: Vec<Vec<f64>>,
    /// Reported estimation errors e_{z,i} at the recorded instants.
    pub errors: Vec<Vec<f64>>,
    /// Max |e_{z,i}| over the tail window, per component (infinite if the
    /// observer diverged).
    pub final_errors: Vec<f64>,
    /// Max over the run of the largest |e_{z,i}|.
    pub peaking: f64,
    /// First instant after which the error inf-norm stays below the
    /// scenario threshold.
    pub convergence_time: Option<f64>,
    pub diverged_at: Option<f64>,
}

/// Result of a scenario run.
#[derive(Clone, Debug)]
pub struct ScenarioResult {
    /// Recorded instants.
    pub times: Vec<f64>,
    /// True z-coordinates at the recorded instants.
    pub plant_z: Vec<Vec<f64>>,
    pub observers: Vec<ObserverRun>,
    pub dt: f64,
    pub seed: u64,
}

/// White Gaussian draws, deterministic per seed.
pub fn gaussian_source(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
        .collect()
}

/// Discrete first-order low-pass `v_{k+1} = v_k + dt a (n_k - v_k)`,
/// v_0 = 0; output has one more sample than the source.
pub fn lowpass(source: &[f64], dt: f64, a: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(source.len() + 1);
    let mut state = 0.0;
    v.push(state);
    for &n in source {
        state += dt * a * (n - state);
        v.push(state);
    }
    v
}

/// Filtered measurement-noise series for a grid of `n_steps` Euler steps
/// (`n_steps + 1` instants).
pub fn gen_noise(n_steps: usize, dt: f64, cfg: &NoiseConfig) -> Vec<f64> {
    lowpass(&gaussian_source(n_steps, cfg.sigma, cfg.seed), dt, cfg.filter_a)
}

/// Metrics of an error series: per-component max over the tail window,
/// peaking over the whole series, and the first instant after which the
/// inf-norm stays below `threshold`.
pub fn metrics(
    times: &[f64],
    errors: &[Vec<f64>],
    tail_fraction: f64,
    threshold: f64,
) -> (Vec<f64>, f64, Option<f64>) {
    assert_eq!(times.len(), errors.len());
    assert!(!times.is_empty());
    assert!(tail_fraction > 0.0 && tail_fraction < 1.0);
    let n = times.len() - 1;
    let m = errors[0].len();
    let tail_start = (((1.0 - tail_fraction) * n as f64).ceil() as usize).min(n);
    let mut final_errors = vec![0.0; m];
    let mut peaking = 0.0f64;
    let mut last_above: Option<usize> = None;
    for (k, row) in errors.iter().enumerate() {
        let mut norm = 0.0f64;
        for (i, &e) in row.iter().enumerate() {
            let a = e.abs();
            norm = norm.max(a);
            if k >= tail_start && a > final_errors[i] {
                final_errors[i] = a;
            }
        }
        peaking = peaking.max(norm);
        if norm >= threshold {
            last_above = Some(k);
        }
    }
    let conv = match last_above {
        None => Some(times[0]),
        Some(k) if k == n => None,
        Some(k) => Some(times[k + 1]),
    };
    (final_errors, peaking, conv)
}

/// Streaming version of [`metrics`] used inside the integration loop.
struct MetricsAcc {
    tail_start: usize,
    n: usize,
    threshold: f64,
    dt: f64,
    final_errors: Vec<f64>,
    peaking: f64,
    last_above: Option<usize>,
}

impl MetricsAcc {
    fn new(m: usize, n: usize, tail_fraction: f64, threshold: f64, dt: f64) -> Self {
        MetricsAcc {
            tail_start: (((1.0 - tail_fraction) * n as f64).ceil() as usize).min(n),
            n,
            threshold,
            dt,
            final_errors: vec![0.0; m],
            peaking: 0.0,
            last_above: None,
        }
    }

    #[inline]
    fn push(&mut self, k: usize, e: &[f64]) {
        let mut norm = 0.0f64;
        for (i, &v) in e.iter().enumerate() {
            let a = v.abs();
            norm = norm.max(a);
            if k >= self.tail_start && a > self.final_errors[i] {
                self.final_errors[i] = a;
            }
        }
        self.peaking = self.peaking.max(norm);
        if norm >= self.threshold {
            self.last_above = Some(k);
        }
    }

    fn convergence_time(&self) -> Option<f64> {
        match self.last_above {
            None => Some(0.0),
            Some(k) if k == self.n => None,
            Some(k) => Some((k + 1) as f64 * self.dt),
        }
    }
}

fn headline_gain(cfg: &ObserverConfig) -> f64 {
    match &cfg.kind {
        ObserverKind::HighGain { gain, .. } | ObserverKind::Homogeneous { gain, .. } => *gain,
        ObserverKind::CascadeHighGain { blocks } | ObserverKind::CascadeHomogeneous { blocks, .. } => {
            blocks.last().map(|b| b.gain).unwrap_or(f64::NAN)
        }
    }
}

/// Per-flat-line bookkeeping for resolving disturbance estimates.
struct LinePlan {
    /// 0-based system line this flat observer line models.
    sys_line: usize,
    /// Block-last lines drop chain and nonlinearity; the exact-residual
    /// mode substitutes the full true line derivative there.
    block_last: bool,
}

fn line_plans(cfg: &ObserverConfig) -> Vec<LinePlan> {
    match &cfg.kind {
        ObserverKind::HighGain { .. } | ObserverKind::Homogeneous { .. } => {
            (0..cfg.m).map(|i| LinePlan { sys_line: i, block_last: false }).collect()
        }
        ObserverKind::CascadeHighGain { blocks } | ObserverKind::CascadeHomogeneous { blocks, .. } => {
            let mut out = Vec::new();
            for b in blocks {
                for j in 0..b.dim {
                    out.push(LinePlan { sys_line: j, block_last: j + 1 == b.dim });
                }
            }
            out
        }
    }
}

struct ObserverSlot {
    cfg: ObserverConfig,
    label: String,
    state: Vec<f64>,
    rhs: Vec<f64>,
    w_hat: Vec<f64>,
    plans: Vec<LinePlan>,
    report: Vec<usize>,
    err: Vec<f64>,
    acc: MetricsAcc,
    states_rec: Vec<Vec<f64>>,
    errors_rec: Vec<Vec<f64>>,
    diverged_at: Option<f64>,
}

/// Run a scenario, generating its noise realization from the embedded
/// configuration.
pub fn run(sc: &Scenario) -> Result<ScenarioResult, SimError> {
    sc.validate()?;
    let noise = sc.noise.as_ref().map(|nc| gen_noise(sc.n_steps(), sc.dt, nc));
    run_with_noise(sc, noise.as_deref())
}

/// Run with a pre-generated noise series (shared across sweep rows).
fn run_with_noise(sc: &Scenario, noise: Option<&[f64]>) -> Result<ScenarioResult, SimError> {
    let m = sc.plant.dim();
    let n = sc.n_steps();
    let dt = sc.dt;
    if let Some(v) = noise {
        assert_eq!(v.len(), n + 1);
    }

    let mut x = [0.0f64; 3];
    let mut z = vec![0.0f64; m];
    let mut plant_rhs = vec![0.0f64; m];
    let mut w_buf = vec![0.0f64; m];
    match &sc.plant {
        PlantKind::Example { x0 } => x = *x0,
        PlantKind::Triangular { z0, .. } => z.copy_from_slice(z0),
    }

    let mut slots: Vec<ObserverSlot> = sc
        .observers
        .iter()
        .map(|o| {
            let sd = o.cfg.state_dim();
            ObserverSlot {
                cfg: o.cfg.clone(),
                label: o.label.clone(),
                state: o.zhat0.clone(),
                rhs: vec![0.0; sd],
                w_hat: vec![0.0; sd],
                plans: line_plans(&o.cfg),
                report: o.cfg.report_indices(),
                err: vec![0.0; m],
                acc: MetricsAcc::new(m, n, sc.tail_fraction, sc.conv_threshold, dt),
                states_rec: Vec::new(),
                errors_rec: Vec::new(),
                diverged_at: None,
            }
        })
        .collect();

    let mut times = Vec::new();
    let mut plant_rec = Vec::new();

    for k in 0..=n {
        let t = k as f64 * dt;
        if let PlantKind::Example { .. } = &sc.plant {
            z.copy_from_slice(&h4(x));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(SimError::PlantDiverged { t });
        }
        let v_k = noise.map_or(0.0, |v| v[k]);
        let y = z[0] + v_k;
        let u = sc.input.eval(t, k);
        let record = k % sc.record_stride == 0 || k == n;
        if record {
            times.push(t);
            plant_rec.push(z.clone());
        }
        for slot in &mut slots {
            if slot.diverged_at.is_some() {
                continue;
            }
            for i in 0..m {
                slot.err[i] = slot.state[slot.report[i]] - z[i];
            }
            slot.acc.push(k, &slot.err);
            if record {
                slot.states_rec.push(slot.state.clone());
                slot.errors_rec.push(slot.err.clone());
            }
        }
        if k == n {
            break;
        }

        // Plant advance (w enters explicit triangular plants only).
        sc.disturbance.eval(t, &mut w_buf);
        match &sc.plant {
            PlantKind::Example { .. } => {
                let dx = example_dynamics(x, u);
                for i in 0..3 {
                    x[i] += dt * dx[i];
                }
            }
            PlantKind::Triangular { system, .. } => {
                system.rhs(&z, u, &w_buf, &mut plant_rhs);
            }
        }

        for slot in &mut slots {
            if slot.diverged_at.is_some() {
                continue;
            }
            match &slot.cfg.w_hat {
                WHatMode::Zero => slot.w_hat.fill(0.0),
                WHatMode::PerLine(vals) => slot.w_hat.copy_from_slice(vals),
                WHatMode::ExactResidual => {
                    // The true leftover of each modeled line: block-last
                    // lines get the full line derivative (the plant's own
                    // arithmetic, so exact initialization stays exact),
                    // the rest just the true disturbance.
                    for (line, plan) in slot.plans.iter().enumerate() {
                        slot.w_hat[line] = if plan.block_last {
                            plant_rhs[plan.sys_line]
                        } else {
                            w_buf[plan.sys_line]
                        };
                    }
                }
            }
            slot.cfg.rhs(&slot.state, y, u, &slot.w_hat, &mut slot.rhs);
            let mut finite = true;
            for (s, d) in slot.state.iter_mut().zip(&slot.rhs) {
                *s += dt * d;
                finite &= s.is_finite();
            }
            if !finite {
                slot.diverged_at = Some((k + 1) as f64 * dt);
            }
        }

        if let PlantKind::Triangular { .. } = &sc.plant {
            for i in 0..m {
                z[i] += dt * plant_rhs[i];
            }
        }
    }

    let observers = slots
        .into_iter()
        .map(|slot| {
            let diverged = slot.diverged_at.is_some();
            ObserverRun {
                gain: headline_gain(&slot.cfg),
                state_labels: slot.cfg.state_labels(),
                label: slot.label,
                states: slot.states_rec,
                errors: slot.errors_rec,
                final_errors: if diverged {
                    vec![f64::INFINITY; m]
                } else {
                    slot.acc.final_errors.clone()
                },
                peaking: slot.acc.peaking,
                convergence_time: if diverged { None } else { slot.acc.convergence_time() },
                diverged_at: slot.diverged_at,
            }
        })
        .collect();

    Ok(ScenarioResult { times, plant_z: plant_rec, observers, dt, seed: sc.seed })
}

/// One row of a gain sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub gain: f64,
    pub final_errors: Vec<f64>,
    pub peaking: f64,
    pub converged: bool,
    /// Convergence time, infinite when the threshold was never held.
    pub conv_time: f64,
    pub seed: u64,
    pub diverged_at: Option<f64>,
}

fn with_gain(cfg: &ObserverConfig, gain: f64) -> ObserverConfig {
    let mut cfg = cfg.clone();
    match &mut cfg.kind {
        ObserverKind::HighGain { gain: g, .. } | ObserverKind::Homogeneous { gain: g, .. } => {
            *g = gain
        }
        ObserverKind::CascadeHighGain { blocks } | ObserverKind::CascadeHomogeneous { blocks, .. } => {
            for b in blocks {
                b.gain = gain;
            }
        }
    }
    cfg
}

/// Run the template once per gain choice (`None` keeps the configured
/// gains; `Some(L)` overrides the observer gain, all blocks for
/// cascades). All rows see the identical plant and noise realization;
/// rows are computed in parallel and returned in the given order.
pub fn sweep(template: &Scenario, gains: &[Option<f64>]) -> Result<Vec<SweepRow>, SimError> {
    if gains.is_empty() {
        return Err(SimError::InvalidScenario("sweep needs at least one gain entry".into()));
    }
    if template.observers.len() != 1 {
        return Err(SimError::InvalidScenario(format!(
            "sweep needs exactly one observer in the template, got {}",
            template.observers.len()
        )));
    }
    template.validate()?;
    let noise = template
        .noise
        .as_ref()
        .map(|nc| Arc::new(gen_noise(template.n_steps(), template.dt, nc)));

    let rows: Vec<Result<SweepRow, SimError>> = gains
        .par_iter()
        .map(|g| {
            let mut sc = template.clone();
            if let Some(l) = g {
                sc.observers[0].cfg = with_gain(&sc.observers[0].cfg, *l);
            }
            let gain = headline_gain(&sc.observers[0].cfg);
            match run_with_noise(&sc, noise.as_deref().map(|v| v.as_slice())) {
                Ok(res) => {
                    let o = &res.observers[0];
                    Ok(SweepRow {
                        gain,
                        final_errors: o.final_errors.clone(),
                        peaking: o.peaking,
                        converged: o.diverged_at.is_none() && o.convergence_time.is_some(),
                        conv_time: o.convergence_time.unwrap_or(f64::INFINITY),
                        seed: sc.seed,
                        diverged_at: o.diverged_at,
                    })
                }
                Err(SimError::PlantDiverged { t }) => Ok(SweepRow {
                    gain,
                    final_errors: vec![f64::INFINITY; sc.plant.dim()],
                    peaking: f64::INFINITY,
                    converged: false,
                    conv_time: f64::INFINITY,
                    seed: sc.seed,
                    diverged_at: Some(t),
                }),
                Err(e) => Err(e),
            }
        })
        .collect();
    rows.into_iter().collect()
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Trajectory CSV: `t,z1..zm` plus, per observer, its flat states and
/// reported errors. Floats carry 17 significant digits.
pub fn trajectory_csv(result: &ScenarioResult, m: usize) -> String {
    let mut header = vec!["t".to_string()];
    for i in 1..=m {
        header.push(format!("z{i}"));
    }
    for (oi, o) in result.observers.iter().enumerate() {
        let suffix = if result.observers.len() > 1 { format!("_{}", oi + 1) } else { String::new() };
        for l in &o.state_labels {
            header.push(format!("{l}{suffix}"));
        }
        for i in 1..=m {
            header.push(format!("e_z{i}{suffix}"));
        }
    }
    let mut out = header.join(",");
    out.push('\n');
    for (k, t) in result.times.iter().enumerate() {
        let mut row = vec![fmt(*t)];
        row.extend(result.plant_z[k].iter().map(|&v| fmt(v)));
        for o in &result.observers {
            if k < o.states.len() {
                row.extend(o.states[k].iter().map(|&v| fmt(v)));
                row.extend(o.errors[k].iter().map(|&v| fmt(v)));
            } else {
                // Diverged observers stop recording; pad with nan.
                row.extend(std::iter::repeat("nan".to_string()).take(o.state_labels.len() + m));
            }
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Sweep CSV: `L,e_z1..e_zm,peaking,converged,conv_time,seed`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let m = rows.first().map_or(0, |r| r.final_errors.len());
    let mut header = vec!["L".to_string()];
    for i in 1..=m {
        header.push(format!("e_z{i}"));
    }
    header.extend(["peaking", "converged", "conv_time", "seed"].map(String::from));
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let mut row = vec![fmt(r.gain)];
        row.extend(r.final_errors.iter().map(|&v| fmt(v)));
        row.push(fmt(r.peaking));
        row.push(r.converged.to_string());
        row.push(fmt(r.conv_time));
        row.push(r.seed.to_string());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
