//! Fixed-step RK4 integration of `x' = lambda(t) - (I - R^T) z` with
//! `z = f(x)` (smooth mode) or `z` resolved on the set of empty links
//! (inclusion mode), plus runtime monitors for the unconditional bounds.

use serde::{Deserialize, Serialize};

use crate::certificates::LyapunovWeights;
use crate::error::{Error, Result};
use crate::flow::{check_state, FlowField};
use crate::inflow::InflowVector;
use crate::model::FlowNetwork;
use crate::network::{Leontief, RoutingMatrix};

pub const DEFAULT_DT: f64 = 1e-3;
pub const CLAMP_TOLERANCE: f64 = 1e-9;
pub const ZERO_THRESHOLD: f64 = 1e-9;
pub const RESOLVE_MAX_ITER: usize = 10_000;
const LIMITER_MAX_PASSES: usize = 10_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Smooth,
    Inclusion,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "smooth" => Ok(Mode::Smooth),
            "inclusion" => Ok(Mode::Inclusion),
            other => Err(format!("unknown mode `{other}` (expected smooth or inclusion)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Smooth => "smooth",
            Mode::Inclusion => "inclusion",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorToggles {
    pub iiss: bool,
    pub growth_bound: bool,
}

impl Default for MonitorToggles {
    fn default() -> Self {
        Self {
            iiss: true,
            growth_bound: true,
        }
    }
}

/// Heuristic thresholds for classifying a finite-horizon run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceThresholds {
    /// `V` must exceed `multiplier * max(V(0), 1)` to count as diverging.
    pub multiplier: f64,
    /// Relative growth of `V` between the last two eighths of the run.
    pub trend_tolerance: f64,
}

impl Default for DivergenceThresholds {
    fn default() -> Self {
        Self {
            multiplier: 40.0,
            trend_tolerance: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub mode: Mode,
    /// Store every n-th step (the final state is always stored).
    pub record_every: usize,
    pub monitors: MonitorToggles,
    pub divergence: DivergenceThresholds,
    pub clamp_tolerance: f64,
    pub zero_threshold: f64,
}

impl SimConfig {
    pub fn new(dt: f64, horizon: f64) -> Result<Self> {
        let cfg = Self {
            dt,
            horizon,
            mode: Mode::Smooth,
            record_every: 1,
            monitors: MonitorToggles::default(),
            divergence: DivergenceThresholds::default(),
            clamp_tolerance: CLAMP_TOLERANCE,
            zero_threshold: ZERO_THRESHOLD,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_record_every(mut self, n: usize) -> Self {
        self.record_every = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad("dt must be > 0");
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return bad("horizon must be > 0");
        }
        if self.dt > self.horizon {
            return bad("dt must not exceed the horizon");
        }
        if self.record_every == 0 {
            return bad("record_every must be >= 1");
        }
        if !(self.clamp_tolerance >= 0.0) || !(self.zero_threshold >= 0.0) {
            return bad("tolerances must be >= 0");
        }
        if !(self.divergence.multiplier > 1.0) || !(self.divergence.trend_tolerance > 0.0) {
            return bad("divergence multiplier must be > 1 and trend tolerance > 0");
        }
        Ok(())
    }

    /// Number of RK4 steps; the last one may be shorter than `dt`.
    pub fn step_count(&self) -> usize {
        ((self.horizon / self.dt) - 1e-9).ceil().max(1.0) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunVerdict {
    Bounded,
    Diverging,
    HorizonReached,
}

impl std::fmt::Display for RunVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RunVerdict::Bounded => "bounded",
            RunVerdict::Diverging => "diverging",
            RunVerdict::HorizonReached => "horizon-reached",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub time: f64,
    pub link: Option<usize>,
    pub value: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub name: String,
    pub samples_checked: usize,
    pub violation_count: usize,
    /// Largest `value - bound` seen (negative when the bound always holds).
    pub max_excess: f64,
    /// First few violations in time order.
    pub violations: Vec<BoundViolation>,
}

impl MonitorReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            samples_checked: 0,
            violation_count: 0,
            max_excess: f64::NEG_INFINITY,
            violations: Vec::new(),
        }
    }

    fn observe(&mut self, time: f64, link: Option<usize>, value: f64, bound: f64) {
        let tol = 1e-6 * (1.0 + bound.abs());
        self.max_excess = self.max_excess.max(value - bound);
        if value > bound + tol || !value.is_finite() {
            self.violation_count += 1;
            if self.violations.len() < 10 {
                self.violations.push(BoundViolation {
                    time,
                    link,
                    value,
                    bound,
                });
            }
        }
    }

    pub fn holds(&self) -> bool {
        self.violation_count == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Actual outflow `z` at each sample.
    pub outflows: Vec<Vec<f64>>,
    /// Running integrals of `lambda` and `z`, consistent with the RK4 update.
    pub cumulative_inflow: Vec<Vec<f64>>,
    pub cumulative_outflow: Vec<Vec<f64>>,
    pub lyapunov_uniform: Vec<f64>,
    pub lyapunov_capacity: Option<Vec<f64>>,
    pub monitors: Vec<MonitorReport>,
    pub verdict: RunVerdict,
    pub stats: RunStats,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub steps: usize,
    /// Entries clamped to zero after a step (smooth mode).
    pub clamp_events: usize,
    /// Steps whose outflow was reduced to keep the state nonnegative
    /// (inclusion mode).
    pub limiter_events: usize,
    /// Most negative post-step value before clamping or limiting.
    pub min_before_clamp: f64,
}

impl Trajectory {
    pub fn link_count(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map_or(&[], Vec::as_slice)
    }

    pub fn total_mass(&self) -> Vec<f64> {
        self.states.iter().map(|x| x.iter().sum()).collect()
    }
}

/// Actual outflow for the current state. Links holding mass release `f`;
/// on empty links `z_i = min(f_i, lambda_i + (R^T z)_i)`, found by monotone
/// iteration from zero.
pub fn resolve_outflow(
    x: &[f64],
    f_val: &[f64],
    lambda_now: &[f64],
    routing: &RoutingMatrix,
) -> Result<Vec<f64>> {
    let n = routing.dim();
    check_state(x, n)?;
    for (what, v) in [("flow vector", f_val), ("inflow vector", lambda_now)] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                actual: v.len(),
            });
        }
    }
    let mut z = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    resolve_into(x, f_val, lambda_now, routing, ZERO_THRESHOLD, &mut z, &mut scratch)?;
    Ok(z)
}

fn resolve_into(
    x: &[f64],
    f_val: &[f64],
    lambda_now: &[f64],
    routing: &RoutingMatrix,
    zero_threshold: f64,
    z: &mut [f64],
    scratch: &mut [f64],
) -> Result<()> {
    let mut any_empty = false;
    for i in 0..x.len() {
        if x[i] > zero_threshold {
            z[i] = f_val[i];
        } else {
            z[i] = 0.0;
            any_empty = true;
        }
    }
    if !any_empty {
        return Ok(());
    }
    let mut residual = f64::INFINITY;
    for _ in 0..RESOLVE_MAX_ITER {
        routing.transpose_mul_into(z, scratch);
        residual = 0.0;
        for i in 0..x.len() {
            if x[i] <= zero_threshold {
                let next = f_val[i].min(lambda_now[i] + scratch[i]);
                residual = f64::max(residual, (next - z[i]).abs());
                z[i] = next;
            }
        }
        if residual <= 1e-15 * (1.0 + z.iter().fold(0.0, |m: f64, v| m.max(*v))) {
            return Ok(());
        }
    }
    Err(Error::OutflowResolution {
        iterations: RESOLVE_MAX_ITER,
        residual,
    })
}

/// Scratch buffers for one right-hand-side evaluation.
pub(crate) struct Stage {
    pub clamped: Vec<f64>,
    pub flow: Vec<f64>,
    pub lambda: Vec<f64>,
    pub z: Vec<f64>,
    pub rate: Vec<f64>,
    pub tmp: Vec<f64>,
}

impl Stage {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            clamped: vec![0.0; n],
            flow: vec![0.0; n],
            lambda: vec![0.0; n],
            z: vec![0.0; n],
            rate: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

/// A right-hand side on a (possibly stacked) state vector.
pub(crate) trait Dynamics {
    fn dim(&self) -> usize;
    /// Fills `stage.lambda`, `stage.z` and `stage.rate` at `(t, x)`.
    fn rates(&self, t: f64, x: &[f64], stage: &mut Stage) -> Result<()>;
    /// `out = (I - R^T) v`, blockwise for stacked states.
    fn leave(&self, v: &[f64], out: &mut [f64]);
}

struct SingleCommodity<'a> {
    routing: &'a RoutingMatrix,
    field: &'a FlowField,
    inflow: &'a InflowVector,
    mode: Mode,
    zero_threshold: f64,
}

impl Dynamics for SingleCommodity<'_> {
    fn dim(&self) -> usize {
        self.routing.dim()
    }

    fn rates(&self, t: f64, x: &[f64], s: &mut Stage) -> Result<()> {
        for (c, v) in s.clamped.iter_mut().zip(x) {
            *c = v.max(0.0);
        }
        self.field.eval_into(&s.clamped, &mut s.flow);
        self.inflow.eval_into(t, &mut s.lambda);
        match self.mode {
            Mode::Smooth => s.z.copy_from_slice(&s.flow),
            Mode::Inclusion => resolve_into(
                &s.clamped,
                &s.flow,
                &s.lambda,
                self.routing,
                self.zero_threshold,
                &mut s.z,
                &mut s.tmp,
            )?,
        }
        self.routing.leave_operator_into(&s.z, &mut s.tmp);
        for i in 0..s.rate.len() {
            s.rate[i] = s.lambda[i] - s.tmp[i];
        }
        Ok(())
    }

    fn leave(&self, v: &[f64], out: &mut [f64]) {
        self.routing.leave_operator_into(v, out);
    }
}

/// Raw samples of an integration run.
pub(crate) struct RawRun {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub outflows: Vec<Vec<f64>>,
    pub cumulative_inflow: Vec<Vec<f64>>,
    pub cumulative_outflow: Vec<Vec<f64>>,
    pub stats: RunStats,
}

pub(crate) fn integrate<D: Dynamics>(
    dynamics: &D,
    x0: &[f64],
    cfg: &SimConfig,
    limiter: bool,
) -> Result<RawRun> {
    let n = dynamics.dim();
    let steps = cfg.step_count();
    let samples = steps / cfg.record_every + 2;
    let mut run = RawRun {
        times: Vec::with_capacity(samples),
        states: Vec::with_capacity(samples),
        outflows: Vec::with_capacity(samples),
        cumulative_inflow: Vec::with_capacity(samples),
        cumulative_outflow: Vec::with_capacity(samples),
        stats: RunStats {
            steps,
            ..RunStats::default()
        },
    };
    let mut x = x0.to_vec();
    let mut cum_in = vec![0.0; n];
    let mut cum_out = vec![0.0; n];
    let mut stages = [Stage::new(n), Stage::new(n), Stage::new(n), Stage::new(n)];
    let mut probe = vec![0.0; n];
    let mut delta = vec![0.0; n];
    let mut moved = vec![0.0; n];

    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        let h = if k + 1 == steps { cfg.horizon - t } else { cfg.dt };
        let [s1, s2, s3, s4] = &mut stages;
        dynamics.rates(t, &x, s1)?;
        if k % cfg.record_every == 0 {
            run.times.push(t);
            run.states.push(x.clone());
            run.outflows.push(s1.z.clone());
            run.cumulative_inflow.push(cum_in.clone());
            run.cumulative_outflow.push(cum_out.clone());
        }
        for i in 0..n {
            probe[i] = x[i] + 0.5 * h * s1.rate[i];
        }
        dynamics.rates(t + 0.5 * h, &probe, s2)?;
        for i in 0..n {
            probe[i] = x[i] + 0.5 * h * s2.rate[i];
        }
        dynamics.rates(t + 0.5 * h, &probe, s3)?;
        for i in 0..n {
            probe[i] = x[i] + h * s3.rate[i];
        }
        dynamics.rates(t + h, &probe, s4)?;
        let w = h / 6.0;
        for i in 0..n {
            x[i] += w * (s1.rate[i] + 2.0 * s2.rate[i] + 2.0 * s3.rate[i] + s4.rate[i]);
            cum_in[i] +=
                w * (s1.lambda[i] + 2.0 * s2.lambda[i] + 2.0 * s3.lambda[i] + s4.lambda[i]);
            cum_out[i] += w * (s1.z[i] + 2.0 * s2.z[i] + 2.0 * s3.z[i] + s4.z[i]);
        }
        let failure = |reason: String| Error::IntegrationFailure {
            step: k + 1,
            time: t + h,
            reason,
        };
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(failure(format!("state of link {i} is not finite")));
        }
        let min = x.iter().copied().fold(f64::INFINITY, f64::min);
        run.stats.min_before_clamp = run.stats.min_before_clamp.min(min);
        if min >= 0.0 {
            continue;
        }
        if limiter {
            // Withhold just enough outflow from each overdrawn link, and the
            // share of it routed downstream, to restore nonnegativity.
            run.stats.limiter_events += 1;
            for _ in 0..LIMITER_MAX_PASSES {
                let mut any = false;
                for i in 0..n {
                    delta[i] = if x[i] < 0.0 {
                        any = true;
                        -x[i]
                    } else {
                        0.0
                    };
                }
                if !any {
                    break;
                }
                dynamics.leave(&delta, &mut moved);
                for i in 0..n {
                    x[i] += moved[i];
                    cum_out[i] -= delta[i];
                }
            }
        }
        for (i, v) in x.iter_mut().enumerate() {
            if *v < 0.0 {
                if *v >= -cfg.clamp_tolerance {
                    *v = 0.0;
                    run.stats.clamp_events += 1;
                } else {
                    return Err(failure(format!(
                        "state of link {i} fell to {v:e}, beyond the clamp tolerance"
                    )));
                }
            }
        }
    }
    let [s1, ..] = &mut stages;
    dynamics.rates(cfg.horizon, &x, s1)?;
    run.times.push(cfg.horizon);
    run.outflows.push(s1.z.clone());
    run.states.push(x);
    run.cumulative_inflow.push(cum_in);
    run.cumulative_outflow.push(cum_out);
    Ok(run)
}

pub(crate) fn lyapunov_series(states: &[Vec<f64>], row: &[f64]) -> Vec<f64> {
    states
        .iter()
        .map(|x| x.iter().zip(row).map(|(x, r)| x * r).sum::<f64>().max(0.0))
        .collect()
}

/// Integrates the network dynamics from `x0` over `[0, cfg.horizon]`.
pub fn simulate(
    network: &FlowNetwork,
    inflow: &InflowVector,
    x0: &[f64],
    cfg: &SimConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let n = network.link_count();
    check_state(x0, n)?;
    if inflow.len() != n {
        return Err(Error::DimensionMismatch {
            what: "inflow vector",
            expected: n,
            actual: inflow.len(),
        });
    }
    let field = network.field();
    if cfg.mode == Mode::Smooth && field.is_inclusion_only() {
        return Err(Error::InvalidConfig(
            "flow field offers service on empty links; simulate it in inclusion mode".into(),
        ));
    }
    let dynamics = SingleCommodity {
        routing: network.routing(),
        field,
        inflow,
        mode: cfg.mode,
        zero_threshold: cfg.zero_threshold,
    };
    let raw = integrate(&dynamics, x0, cfg, cfg.mode == Mode::Inclusion)?;
    let leontief = network.leontief();
    let uniform = LyapunovWeights::uniform(n);
    let lyapunov_uniform = lyapunov_series(&raw.states, &uniform.row(leontief));
    let capacity_weights = LyapunovWeights::capacity(field).ok();
    let lyapunov_capacity = capacity_weights
        .as_ref()
        .map(|w| lyapunov_series(&raw.states, &w.row(leontief)));
    let mut traj = Trajectory {
        times: raw.times,
        states: raw.states,
        outflows: raw.outflows,
        cumulative_inflow: raw.cumulative_inflow,
        cumulative_outflow: raw.cumulative_outflow,
        lyapunov_uniform,
        lyapunov_capacity,
        monitors: Vec::new(),
        verdict: RunVerdict::HorizonReached,
        stats: raw.stats,
    };
    if cfg.monitors.iiss {
        traj.monitors
            .push(monitor_iiss_bound(&traj, leontief, inflow, &uniform)?);
        if let Some(w) = &capacity_weights {
            let mut report = monitor_iiss_bound(&traj, leontief, inflow, w)?;
            report.name.push_str(" (capacity weights)");
            traj.monitors.push(report);
        }
    }
    if cfg.monitors.growth_bound {
        traj.monitors
            .push(monitor_prop3_bound(&traj, leontief, inflow)?);
    }
    traj.verdict = divergence_verdict(&traj, cfg);
    Ok(traj)
}

fn check_traj(traj: &Trajectory, n: usize) -> Result<()> {
    if traj.link_count() != n || traj.states.is_empty() {
        return Err(Error::DimensionMismatch {
            what: "trajectory links",
            expected: n,
            actual: traj.link_count(),
        });
    }
    Ok(())
}

/// Checks `V(t) <= V(0) + int_0^t sum_i w_i a_i(s) ds` at every sample.
pub fn monitor_iiss_bound(
    traj: &Trajectory,
    leontief: &Leontief,
    inflow: &InflowVector,
    weights: &LyapunovWeights,
) -> Result<MonitorReport> {
    let n = leontief.dim();
    check_traj(traj, n)?;
    let row = weights.row(leontief);
    let v: Vec<f64> = lyapunov_series(&traj.states, &row);
    let mut report = MonitorReport::new("iiss integral bound");
    for (k, &t) in traj.times.iter().enumerate() {
        let integral: f64 = inflow
            .integral(t)
            .iter()
            .zip(&row)
            .map(|(l, r)| l * r)
            .sum();
        report.samples_checked += 1;
        report.observe(t, None, v[k], v[0] + integral);
    }
    Ok(report)
}

/// Checks `x_i(t) <= int_0^t a_i(s) ds + xi_i` with `xi = (I - R^T)^{-1} x(0)`.
pub fn monitor_prop3_bound(
    traj: &Trajectory,
    leontief: &Leontief,
    inflow: &InflowVector,
) -> Result<MonitorReport> {
    let n = leontief.dim();
    check_traj(traj, n)?;
    let xi = leontief.apply(&traj.states[0]);
    let mut report = MonitorReport::new("per-link growth bound");
    for (k, &t) in traj.times.iter().enumerate() {
        let integral = leontief.apply(&inflow.integral(t));
        for i in 0..n {
            report.observe(t, Some(i), traj.states[k][i], integral[i] + xi[i]);
        }
        report.samples_checked += 1;
    }
    Ok(report)
}

/// Classifies a finite run from its uniform-weight Lyapunov series.
pub fn divergence_verdict(traj: &Trajectory, cfg: &SimConfig) -> RunVerdict {
    classify_series(&traj.lyapunov_uniform, &cfg.divergence)
}

pub fn classify_series(v: &[f64], thresholds: &DivergenceThresholds) -> RunVerdict {
    let n = v.len();
    if n == 0 {
        return RunVerdict::HorizonReached;
    }
    let base = v[0].max(1.0);
    let limit = thresholds.multiplier * base;
    let eighth = (n / 8).max(1);
    let quarter = (n / 4).max(1);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let last = &v[n - eighth..];
    let previous = &v[n.saturating_sub(2 * eighth)..n - eighth];
    let tail = &v[n - quarter..];
    let trend = if previous.is_empty() {
        0.0
    } else {
        (mean(last) - mean(previous)) / mean(tail).max(1.0)
    };
    let tail_max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !v[n - 1].is_finite() || (v[n - 1] > limit && trend > thresholds.trend_tolerance) {
        RunVerdict::Diverging
    } else if tail_max <= limit && trend.abs() <= thresholds.trend_tolerance {
        RunVerdict::Bounded
    } else {
        RunVerdict::HorizonReached
    }
}

/// Largest per-link violation of `x(t) - x(s) = Lambda - (I - R^T) Z` between
/// consecutive samples, per unit time.
pub fn conservation_residual(traj: &Trajectory, routing: &RoutingMatrix) -> f64 {
    let n = routing.dim();
    let mut dz = vec![0.0; n];
    let mut moved = vec![0.0; n];
    let mut worst: f64 = 0.0;
    for k in 1..traj.times.len() {
        let dt = traj.times[k] - traj.times[k - 1];
        if dt <= 0.0 {
            continue;
        }
        for i in 0..n {
            dz[i] = traj.cumulative_outflow[k][i] - traj.cumulative_outflow[k - 1][i];
        }
        routing.leave_operator_into(&dz, &mut moved);
        for i in 0..n {
            let dx = traj.states[k][i] - traj.states[k - 1][i];
            let dl = traj.cumulative_inflow[k][i] - traj.cumulative_inflow[k - 1][i];
            worst = worst.max((dx - dl + moved[i]).abs() / dt);
        }
    }
    worst
}

/// Largest violation of total-mass balance
/// `d/dt sum x = sum lambda - sum_i (1 - sum_j R_ij) z_i` between samples,
/// per unit time.
pub fn mass_balance_residual(traj: &Trajectory, routing: &RoutingMatrix) -> f64 {
    let n = routing.dim();
    let exit: Vec<f64> = (0..n).map(|i| routing.exit_fraction(i)).collect();
    let mut worst: f64 = 0.0;
    for k in 1..traj.times.len() {
        let dt = traj.times[k] - traj.times[k - 1];
        if dt <= 0.0 {
            continue;
        }
        let mut r = 0.0;
        for i in 0..n {
            r += traj.states[k][i] - traj.states[k - 1][i];
            r -= traj.cumulative_inflow[k][i] - traj.cumulative_inflow[k - 1][i];
            r += exit[i] * (traj.cumulative_outflow[k][i] - traj.cumulative_outflow[k - 1][i]);
        }
        worst = worst.max(r.abs() / dt);
    }
    worst
}

/// Largest `|x_i (z_i - f_i(x))|`, and the largest excursion of `z` outside
/// `[0, f(x)]`, over all samples.
pub fn complementarity_residual(traj: &Trajectory, field: &FlowField) -> (f64, f64) {
    let mut f = vec![0.0; field.len()];
    let mut comp: f64 = 0.0;
    let mut range: f64 = 0.0;
    for (x, z) in traj.states.iter().zip(&traj.outflows) {
        field.eval_into(x, &mut f);
        for i in 0..x.len() {
            comp = comp.max((x[i] * (z[i] - f[i])).abs());
            range = range.max(-z[i]).max(z[i] - f[i]);
        }
    }
    (comp, range)
}

/// Most negative stored state entry.
pub fn min_state(traj: &Trajectory) -> f64 {
    traj.states
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::FlowFamily;
    use crate::network::FlowGraph;

    fn single_link(capacity: f64) -> FlowNetwork {
        let g = FlowGraph::new(2, &[(0, 1)]).unwrap();
        let f = FlowField::new(&g, vec![FlowFamily::SaturatingExp { capacity }]).unwrap();
        FlowNetwork::new(g, RoutingMatrix::zeros(1), f).unwrap()
    }

    fn junction(kappa: f64) -> FlowNetwork {
        let fam = |phase| FlowFamily::PhaseProportional { phase, kappa };
        let g = FlowGraph::new(5, &[(1, 0), (2, 0), (3, 0), (4, 0)]).unwrap();
        let f = FlowField::new(&g, vec![fam(0), fam(1), fam(0), fam(1)]).unwrap();
        FlowNetwork::new(g, RoutingMatrix::zeros(4), f).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0.0, 1.0).is_err());
        assert!(SimConfig::new(2.0, 1.0).is_err());
        assert!(SimConfig::new(0.1, f64::NAN).is_err());
        assert_eq!(SimConfig::new(0.1, 1.0).unwrap().step_count(), 10);
        assert_eq!(SimConfig::new(0.3, 1.0).unwrap().step_count(), 4);
        assert!("bogus".parse::<Mode>().is_err());
    }

    #[test]
    fn equilibrium_stays_put() {
        let net = single_link(1.0);
        let cfg = SimConfig::new(0.01, 5.0).unwrap();
        let traj = simulate(&net, &InflowVector::zero(1), &[0.0], &cfg).unwrap();
        assert!(traj.states.iter().all(|x| x[0] == 0.0));
        assert_eq!(traj.verdict, RunVerdict::Bounded);
        assert_eq!(traj.times.len(), 501);
        assert_eq!(*traj.times.last().unwrap(), 5.0);
    }

    #[test]
    fn single_link_reaches_ln2() {
        let net = single_link(1.0);
        let cfg = SimConfig::new(0.01, 60.0).unwrap().with_record_every(100);
        let traj = simulate(&net, &InflowVector::constant(&[0.5]).unwrap(), &[0.0], &cfg).unwrap();
        let x = traj.final_state()[0];
        assert!((x - 2f64.ln()).abs() / 2f64.ln() < 1e-3, "{x}");
        assert_eq!(traj.verdict, RunVerdict::Bounded);
        assert!(traj.monitors.iter().all(MonitorReport::holds));
    }

    #[test]
    fn smooth_mode_refuses_inclusion_fields() {
        let net = junction(0.1);
        let cfg = SimConfig::new(0.01, 1.0).unwrap();
        assert!(matches!(
            simulate(&net, &InflowVector::zero(4), &[0.0; 4], &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn negative_initial_state_rejected() {
        let net = single_link(1.0);
        let cfg = SimConfig::new(0.01, 1.0).unwrap();
        assert!(simulate(&net, &InflowVector::zero(1), &[-1.0], &cfg).is_err());
    }

    #[test]
    fn resolve_outflow_examples() {
        let net = junction(0.1);
        let x = [0.0, 0.0, 1.0, 0.0];
        let f = net.field().eval(&x).unwrap();
        assert!((f[0] - 1.0 / 1.1).abs() < 1e-15 && (f[2] - 1.0 / 1.1).abs() < 1e-15);
        let z = resolve_outflow(&x, &f, &[0.0; 4], net.routing()).unwrap();
        assert_eq!(z, vec![0.0, 0.0, f[2], 0.0]);

        let r = RoutingMatrix::zeros(1);
        let z = resolve_outflow(&[0.0], &[0.8], &[0.3], &r).unwrap();
        assert_eq!(z, vec![0.3]);
        assert_eq!(0.3 - z[0], 0.0);

        let full = resolve_outflow(&[1.0, 2.0], &[0.4, 0.5], &[0.0, 0.0], &RoutingMatrix::zeros(2))
            .unwrap();
        assert_eq!(full, vec![0.4, 0.5]);
    }

    #[test]
    fn resolve_outflow_passes_through_chains() {
        // Empty link 0 feeds empty link 1 feeds empty link 2.
        let mut r = RoutingMatrix::zeros(3);
        r.set(0, 1, 1.0);
        r.set(1, 2, 0.5);
        let z = resolve_outflow(&[0.0; 3], &[1.0, 0.2, 1.0], &[0.3, 0.0, 0.0], &r).unwrap();
        assert_eq!(z, vec![0.3, 0.2, 0.1]);
    }

    #[test]
    fn junction_verdicts() {
        let net = junction(0.1);
        let cfg = SimConfig::new(1e-3, 100.0)
            .unwrap()
            .with_mode(Mode::Inclusion)
            .with_record_every(100);
        let high = InflowVector::constant(&[1.9, 0.0, 0.0, 0.0]).unwrap();
        let traj = simulate(&net, &high, &[0.0; 4], &cfg).unwrap();
        assert_eq!(traj.verdict, RunVerdict::Diverging);
        assert!(traj.monitors.iter().all(MonitorReport::holds));
        assert_eq!(min_state(&traj), 0.0);
        let low = InflowVector::constant(&[0.5, 0.0, 0.0, 0.0]).unwrap();
        let traj = simulate(&net, &low, &[0.0; 4], &cfg).unwrap();
        assert_eq!(traj.verdict, RunVerdict::Bounded);
        assert!((traj.final_state()[0] - 0.1).abs() < 1e-6);
        assert!(conservation_residual(&traj, net.routing()) < 1e-6);
        let (comp, range) = complementarity_residual(&traj, net.field());
        assert!(comp < 1e-6 && range < 1e-12, "{comp} {range}");
    }

    #[test]
    fn inclusion_mode_keeps_state_nonnegative() {
        // Links 2 and 4 start with mass that the phase rule drains while
        // links 1 and 3 (same phase) are offered service while empty.
        let net = junction(0.1);
        let cfg = SimConfig::new(0.05, 20.0).unwrap().with_mode(Mode::Inclusion);
        let inflow = InflowVector::constant(&[0.2, 0.0, 0.0, 0.3]).unwrap();
        let traj = simulate(&net, &inflow, &[1e-6, 1.0, 0.0, 0.5], &cfg).unwrap();
        assert!(min_state(&traj) >= 0.0);
        assert!(traj.stats.limiter_events > 0);
        assert!(conservation_residual(&traj, net.routing()) < 1e-9);
        assert!(mass_balance_residual(&traj, net.routing()) < 1e-9);
    }

    #[test]
    fn monitors_hold_under_zero_inflow() {
        let g = FlowGraph::new(2, &[(0, 1), (1, 0)]).unwrap();
        let r = RoutingMatrix::from_rows(&[vec![0.0, 0.9], vec![1.0, 0.0]]).unwrap();
        let f = FlowField::new(
            &g,
            vec![
                FlowFamily::SaturatingExp { capacity: 1.0 },
                FlowFamily::SaturatingExp { capacity: 100.0 },
            ],
        )
        .unwrap();
        let net = FlowNetwork::new(g, r, f).unwrap();
        let cfg = SimConfig::new(1e-3, 50.0).unwrap().with_record_every(10);
        let traj = simulate(&net, &InflowVector::zero(2), &[1.0, 0.0], &cfg).unwrap();
        let v = &traj.lyapunov_uniform;
        assert!((v[0] - 19.0).abs() < 1e-12);
        assert!(v.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(traj.monitors.iter().all(MonitorReport::holds));
        assert!(mass_balance_residual(&traj, net.routing()) < 1e-9);
        assert!(conservation_residual(&traj, net.routing()) < 1e-9);
    }

    #[test]
    fn classify_examples() {
        let t = DivergenceThresholds::default();
        assert_eq!(classify_series(&[0.0; 100], &t), RunVerdict::Bounded);
        let growing: Vec<f64> = (0..100).map(|k| k as f64).collect();
        assert_eq!(classify_series(&growing, &t), RunVerdict::Diverging);
        let slow: Vec<f64> = (0..100).map(|k| 0.3 * k as f64).collect();
        assert_eq!(classify_series(&slow, &t), RunVerdict::HorizonReached);
    }
}
