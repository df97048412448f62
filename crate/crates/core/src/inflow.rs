//! Exogenous inflow signals `lambda(t) >= 0`, with closed-form integrals and
//! suprema of nonnegative combinations.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};

/// Grid density used when the supremum has no closed form.
pub const SUP_SAMPLES_PER_PERIOD: usize = 10_000;
pub const SUP_MAX_SAMPLES: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub enum InflowSignal {
    Constant {
        value: f64,
    },
    /// `amplitude * (sin(frequency * t + phase) + 1)`.
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
    /// `values[k]` on `[breakpoints[k-1], breakpoints[k])`, with
    /// `values.len() == breakpoints.len() + 1`.
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// `inner(t)` for `t < cutoff`, zero afterwards.
    ZeroAfter {
        cutoff: f64,
        inner: Box<InflowSignal>,
    },
}

impl InflowSignal {
    pub fn zero() -> Self {
        InflowSignal::Constant { value: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(msg));
        match self {
            InflowSignal::Constant { value } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return bad(format!("constant inflow {value} must be finite and >= 0"));
                }
            }
            InflowSignal::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => {
                if !(amplitude.is_finite() && *amplitude >= 0.0) {
                    return bad(format!("sinusoid amplitude {amplitude} must be >= 0"));
                }
                if !(frequency.is_finite() && *frequency >= 0.0 && phase.is_finite()) {
                    return bad("sinusoid frequency must be >= 0 and phase finite".into());
                }
            }
            InflowSignal::PiecewiseConstant {
                breakpoints,
                values,
            } => {
                if values.len() != breakpoints.len() + 1 {
                    return bad(format!(
                        "piecewise signal needs {} values for {} breakpoints, got {}",
                        breakpoints.len() + 1,
                        breakpoints.len(),
                        values.len()
                    ));
                }
                if breakpoints.iter().any(|b| !(b.is_finite() && *b > 0.0))
                    || breakpoints.windows(2).any(|w| w[1] <= w[0])
                {
                    return bad("breakpoints must be positive and strictly increasing".into());
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return bad("piecewise values must be finite and >= 0".into());
                }
            }
            InflowSignal::ZeroAfter { cutoff, inner } => {
                if !(cutoff.is_finite() && *cutoff >= 0.0) {
                    return bad(format!("cutoff {cutoff} must be finite and >= 0"));
                }
                inner.validate()?;
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            InflowSignal::Constant { value } => *value,
            InflowSignal::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => amplitude * ((frequency * t + phase).sin() + 1.0),
            InflowSignal::PiecewiseConstant {
                breakpoints,
                values,
            } => values[breakpoints.partition_point(|&b| b <= t)],
            InflowSignal::ZeroAfter { cutoff, inner } => {
                if t < *cutoff {
                    inner.eval(t)
                } else {
                    0.0
                }
            }
        }
    }

    /// `int_0^t lambda(s) ds`.
    pub fn integral(&self, t: f64) -> f64 {
        match self {
            InflowSignal::Constant { value } => value * t,
            InflowSignal::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => {
                if *frequency == 0.0 {
                    amplitude * (phase.sin() + 1.0) * t
                } else {
                    amplitude * t
                        + amplitude / frequency * (phase.cos() - (frequency * t + phase).cos())
                }
            }
            InflowSignal::PiecewiseConstant {
                breakpoints,
                values,
            } => {
                let mut acc = 0.0;
                let mut start = 0.0;
                for (k, &b) in breakpoints.iter().enumerate() {
                    if t <= b {
                        return acc + values[k] * (t - start);
                    }
                    acc += values[k] * (b - start);
                    start = b;
                }
                acc + values[values.len() - 1] * (t - start)
            }
            InflowSignal::ZeroAfter { cutoff, inner } => inner.integral(t.min(*cutoff)),
        }
    }

    /// Time scale over which the signal's shape repeats or settles.
    fn characteristic_time(&self) -> f64 {
        match self {
            InflowSignal::Constant { .. } => 0.0,
            InflowSignal::Sinusoid { frequency, .. } => {
                if *frequency > 0.0 {
                    TAU / frequency
                } else {
                    0.0
                }
            }
            InflowSignal::PiecewiseConstant { breakpoints, .. } => {
                breakpoints.last().copied().unwrap_or(0.0)
            }
            InflowSignal::ZeroAfter { cutoff, inner } => cutoff.max(inner.characteristic_time()),
        }
    }

    fn period(&self) -> Option<f64> {
        match self {
            InflowSignal::Sinusoid { frequency, .. } if *frequency > 0.0 => Some(TAU / frequency),
            InflowSignal::ZeroAfter { inner, .. } => inner.period(),
            _ => None,
        }
    }

    fn breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            InflowSignal::PiecewiseConstant { breakpoints, .. } => out.extend(breakpoints),
            InflowSignal::ZeroAfter { cutoff, inner } => {
                out.push(*cutoff);
                inner.breakpoints(out);
            }
            _ => {}
        }
    }

    fn is_step_function(&self) -> bool {
        match self {
            InflowSignal::Constant { .. } | InflowSignal::PiecewiseConstant { .. } => true,
            InflowSignal::Sinusoid { frequency, .. } => *frequency == 0.0,
            InflowSignal::ZeroAfter { inner, .. } => inner.is_step_function(),
        }
    }
}

/// One signal per link.
#[derive(Clone, Debug, PartialEq)]
pub struct InflowVector(pub Vec<InflowSignal>);

impl InflowVector {
    pub fn new(signals: Vec<InflowSignal>) -> Result<Self> {
        for s in &signals {
            s.validate()?;
        }
        Ok(Self(signals))
    }

    pub fn zero(n: usize) -> Self {
        Self(vec![InflowSignal::zero(); n])
    }

    pub fn constant(values: &[f64]) -> Result<Self> {
        Self::new(
            values
                .iter()
                .map(|&value| InflowSignal::Constant { value })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn signals(&self) -> &[InflowSignal] {
        &self.0
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        for (o, s) in out.iter_mut().zip(&self.0) {
            *o = s.eval(t);
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        self.0.iter().map(|s| s.eval(t)).collect()
    }

    pub fn integral(&self, t: f64) -> Vec<f64> {
        self.0.iter().map(|s| s.integral(t)).collect()
    }

    /// Constant value of every entry, if every signal is constant.
    pub fn as_constant(&self) -> Option<Vec<f64>> {
        self.0
            .iter()
            .map(|s| match s {
                InflowSignal::Constant { value } => Some(*value),
                InflowSignal::Sinusoid {
                    amplitude,
                    frequency,
                    phase,
                } if *frequency == 0.0 => Some(amplitude * (phase.sin() + 1.0)),
                _ => None,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupMethod {
    Analytic,
    /// Maximum over a uniform grid; a lower estimate of the true supremum.
    Sampled { samples: usize, horizon: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupEstimate {
    pub value: f64,
    pub method: SupMethod,
}

/// `sup_{t >= 0} sum_j weights[j] * signals[j](t)` for nonnegative weights.
///
/// Closed form for constants plus sinusoids of a common frequency (offset plus
/// phasor magnitude) and for step functions (evaluation at every breakpoint).
/// Anything else falls back to a uniform grid of [`SUP_SAMPLES_PER_PERIOD`]
/// points per shortest period over the longest characteristic time.
pub fn weighted_sup(terms: &[(f64, &InflowSignal)]) -> SupEstimate {
    let active: Vec<(f64, &InflowSignal)> = terms
        .iter()
        .copied()
        .filter(|(w, _)| *w != 0.0)
        .collect();
    let eval = |t: f64| -> f64 { active.iter().map(|(w, s)| w * s.eval(t)).sum() };

    if active.iter().all(|(_, s)| s.is_step_function()) {
        let mut times = vec![0.0];
        for (_, s) in &active {
            s.breakpoints(&mut times);
        }
        let value = times.into_iter().map(eval).fold(0.0, f64::max);
        return SupEstimate {
            value,
            method: SupMethod::Analytic,
        };
    }

    let common_frequency = {
        let mut freq: Option<f64> = None;
        let mut ok = true;
        for (_, s) in &active {
            match s {
                InflowSignal::Constant { .. } => {}
                InflowSignal::Sinusoid { frequency, .. } if *frequency == 0.0 => {}
                InflowSignal::Sinusoid { frequency, .. } => match freq {
                    None => freq = Some(*frequency),
                    Some(f) if f == *frequency => {}
                    Some(_) => ok = false,
                },
                _ => ok = false,
            }
        }
        ok.then_some(freq).flatten()
    };
    if common_frequency.is_some() {
        let (mut offset, mut re, mut im) = (0.0, 0.0, 0.0);
        for (w, s) in &active {
            match s {
                InflowSignal::Constant { value } => offset += w * value,
                InflowSignal::Sinusoid {
                    amplitude,
                    frequency,
                    phase,
                } => {
                    if *frequency == 0.0 {
                        offset += w * amplitude * (phase.sin() + 1.0);
                    } else {
                        offset += w * amplitude;
                        re += w * amplitude * phase.cos();
                        im += w * amplitude * phase.sin();
                    }
                }
                _ => unreachable!(),
            }
        }
        return SupEstimate {
            value: offset + re.hypot(im),
            method: SupMethod::Analytic,
        };
    }

    let periods: Vec<f64> = active.iter().filter_map(|(_, s)| s.period()).collect();
    let min_period = periods.iter().copied().fold(f64::INFINITY, f64::min);
    let max_period = periods.iter().copied().fold(0.0, f64::max);
    let mut horizon = active
        .iter()
        .map(|(_, s)| s.characteristic_time())
        .fold(0.0, f64::max);
    if periods.iter().any(|p| *p != max_period) {
        horizon = horizon.max(10.0 * max_period);
    }
    let horizon = horizon.max(1.0);
    let per = if min_period.is_finite() {
        (horizon / min_period).ceil() as usize
    } else {
        1
    };
    let samples = (SUP_SAMPLES_PER_PERIOD * per.max(1)).min(SUP_MAX_SAMPLES);
    let mut value = (0..=samples)
        .map(|k| eval(horizon * k as f64 / samples as f64))
        .fold(0.0, f64::max);
    let mut times = Vec::new();
    for (_, s) in &active {
        s.breakpoints(&mut times);
    }
    for t in times {
        value = value.max(eval(t));
    }
    SupEstimate {
        value,
        method: SupMethod::Sampled { samples, horizon },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sin(amplitude: f64, phase: f64) -> InflowSignal {
        InflowSignal::Sinusoid {
            amplitude,
            frequency: 1.0,
            phase,
        }
    }

    #[test]
    fn sinusoid_is_nonnegative_and_integrates() {
        let s = sin(0.45, 0.3);
        for k in 0..1000 {
            assert!(s.eval(k as f64 * 0.01) >= 0.0);
        }
        // Simpson oracle on [0, 7].
        let (t, n) = (7.0, 20_000);
        let h = t / n as f64;
        let mut acc = s.eval(0.0) + s.eval(t);
        for k in 1..n {
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * s.eval(k as f64 * h);
        }
        assert!((acc * h / 3.0 - s.integral(t)).abs() < 1e-10);
    }

    #[test]
    fn piecewise_and_cutoff_integrals() {
        let p = InflowSignal::PiecewiseConstant {
            breakpoints: vec![1.0, 3.0],
            values: vec![2.0, 0.5, 1.0],
        };
        assert_eq!(p.eval(0.5), 2.0);
        assert_eq!(p.eval(1.0), 0.5);
        assert_eq!(p.eval(10.0), 1.0);
        assert!((p.integral(4.0) - (2.0 + 1.0 + 1.0)).abs() < 1e-15);
        let z = InflowSignal::ZeroAfter {
            cutoff: 2.0,
            inner: Box::new(InflowSignal::Constant { value: 3.0 }),
        };
        assert_eq!(z.eval(2.0), 0.0);
        assert_eq!(z.integral(5.0), 6.0);
    }

    #[test]
    fn invalid_signals_rejected() {
        assert!(InflowSignal::Constant { value: -1.0 }.validate().is_err());
        assert!(sin(-0.1, 0.0).validate().is_err());
        assert!(InflowSignal::PiecewiseConstant {
            breakpoints: vec![2.0, 1.0],
            values: vec![0.0; 3]
        }
        .validate()
        .is_err());
    }

    #[test]
    fn in_phase_sinusoids_sum_to_four_amplitudes() {
        let (a, b) = (sin(0.2, 0.0), sin(0.2, 0.0));
        let sup = weighted_sup(&[(1.0, &a), (1.0, &b)]);
        assert_eq!(sup.method, SupMethod::Analytic);
        assert!((sup.value - 0.8).abs() < 1e-15);
    }

    #[test]
    fn antiphase_sinusoids_cancel() {
        let (a, b) = (sin(0.2, 0.0), sin(0.2, PI));
        let sup = weighted_sup(&[(1.0, &a), (1.0, &b)]);
        assert!((sup.value - 0.4).abs() < 1e-15);
    }

    #[test]
    fn sampled_sup_for_mixed_frequencies() {
        let a = sin(1.0, 0.0);
        let b = InflowSignal::Sinusoid {
            amplitude: 1.0,
            frequency: 2.0,
            phase: 0.0,
        };
        let sup = weighted_sup(&[(1.0, &a), (1.0, &b)]);
        assert!(matches!(sup.method, SupMethod::Sampled { .. }));
        // Dense brute force over one common period.
        let brute = (0..2_000_000)
            .map(|k| {
                let t = TAU * k as f64 / 2_000_000.0;
                a.eval(t) + b.eval(t)
            })
            .fold(0.0, f64::max);
        assert!(sup.value <= brute + 1e-12);
        assert!(brute - sup.value < 1e-5);
    }

    #[test]
    fn step_sup_is_exact() {
        let p = InflowSignal::PiecewiseConstant {
            breakpoints: vec![1.0],
            values: vec![0.2, 0.7],
        };
        let z = InflowSignal::ZeroAfter {
            cutoff: 5.0,
            inner: Box::new(InflowSignal::Constant { value: 0.5 }),
        };
        let sup = weighted_sup(&[(2.0, &p), (1.0, &z)]);
        assert_eq!(sup.method, SupMethod::Analytic);
        assert!((sup.value - 1.9).abs() < 1e-15);
    }
}
