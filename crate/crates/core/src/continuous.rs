//! Classical compartment ODEs in per-capita form, integrated with fixed-step RK4.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Rates per unit time. `mu` is the birth/death rate of the endemic model
/// and is zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeParams<T> {
    pub beta: T,
    pub gamma: T,
    pub mu: T,
}

impl<T: Scalar> OdeParams<T> {
    pub fn new(beta: T, gamma: T, mu: T) -> Result<Self> {
        for (name, v) in [("beta", beta), ("gamma", gamma), ("mu", mu)] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::param(name, format!("{v} must be a finite rate >= 0")));
            }
        }
        Ok(OdeParams { beta, gamma, mu })
    }
}

/// Susceptible, infected and recovered fractions. `r` is zero for SIS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeState<T> {
    pub s: T,
    pub i: T,
    pub r: T,
}

impl<T: Scalar> OdeState<T> {
    /// SIR state with `r = 1 - s - i`.
    pub fn sir(s: T, i: T) -> Self {
        OdeState {
            s,
            i,
            r: T::one() - s - i,
        }
    }

    /// SIS state with `s = 1 - i`.
    pub fn sis(i: T) -> Self {
        OdeState {
            s: T::one() - i,
            i,
            r: T::zero(),
        }
    }

    pub fn total(&self) -> T {
        self.s + self.i + self.r
    }

    fn axpy(&self, h: T, d: &Derivative<T>) -> Self {
        OdeState {
            s: self.s + h * d.ds,
            i: self.i + h * d.di,
            r: self.r + h * d.dr(),
        }
    }
}

/// Time derivative of `(s, i)`; the recovered derivative follows from conservation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative<T> {
    pub ds: T,
    pub di: T,
}

impl<T: Scalar> Derivative<T> {
    pub fn dr(&self) -> T {
        -(self.ds + self.di)
    }
}

pub fn sir_epidemic_rhs<T: Scalar>(st: &OdeState<T>, pr: &OdeParams<T>) -> Derivative<T> {
    let incidence = pr.beta * st.i * st.s;
    Derivative {
        ds: -incidence,
        di: incidence - pr.gamma * st.i,
    }
}

pub fn sir_endemic_rhs<T: Scalar>(st: &OdeState<T>, pr: &OdeParams<T>) -> Derivative<T> {
    let incidence = pr.beta * st.i * st.s;
    Derivative {
        ds: -incidence + pr.mu - pr.mu * st.s,
        di: incidence - (pr.gamma + pr.mu) * st.i,
    }
}

pub fn sis_rhs<T: Scalar>(st: &OdeState<T>, pr: &OdeParams<T>) -> Derivative<T> {
    let flow = pr.beta * st.i * st.s - pr.gamma * st.i;
    Derivative { ds: -flow, di: flow }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OdeModel {
    SirEpidemic,
    SirEndemic,
    Sis,
}

impl OdeModel {
    pub fn rhs<T: Scalar>(self, st: &OdeState<T>, pr: &OdeParams<T>) -> Derivative<T> {
        match self {
            OdeModel::SirEpidemic => sir_epidemic_rhs(st, pr),
            OdeModel::SirEndemic => sir_endemic_rhs(st, pr),
            OdeModel::Sis => sis_rhs(st, pr),
        }
    }
}

/// Time-indexed states. `times` is strictly increasing and matches `states`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<OdeState<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(T, OdeState<T>)> {
        Some((*self.times.last()?, *self.states.last()?))
    }

    /// Writes `t,s,i,r` rows with 16 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,s,i,r")?;
        for (t, st) in self.times.iter().zip(&self.states) {
            writeln!(out, "{:.15e},{:.15e},{:.15e},{:.15e}", t, st.s, st.i, st.r)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Drift allowed in `s + i + r` at any step (in `f64`; single precision
/// uses a few hundred ulps instead).
pub const CONSERVATION_TOL: f64 = 1e-12;
/// Slack allowed outside `[0, 1]` for roundoff.
pub const BOUND_SLACK: f64 = 1e-9;
/// Magnitude treated as numerical blow-up.
pub const BLOWUP: f64 = 10.0;

fn check_state<T: Scalar>(st: &OdeState<T>, step: usize, t: T) -> Result<()> {
    let values = [st.s, st.i, st.r];
    if let Some(v) = values
        .iter()
        .find(|v| !v.is_finite() || v.abs() > T::lit(BLOWUP))
    {
        return Err(Error::Instability {
            step,
            t: t.as_f64(),
            value: v.abs().as_f64(),
        });
    }
    let lo = -T::lit(BOUND_SLACK);
    let hi = T::one() + T::lit(BOUND_SLACK);
    if values.iter().any(|&v| v < lo || v > hi) {
        return Err(Error::OutOfBounds {
            step,
            t: t.as_f64(),
            detail: format!("fractions (s, i, r) = ({}, {}, {})", st.s, st.i, st.r),
        });
    }
    let drift = (st.total() - T::one()).abs();
    let tol = T::lit(CONSERVATION_TOL).max(T::epsilon() * T::lit(256.0));
    if drift > tol {
        return Err(Error::OutOfBounds {
            step,
            t: t.as_f64(),
            detail: format!("conservation drift {drift:e}"),
        });
    }
    Ok(())
}

/// One classical RK4 step.
pub fn rk4_step<T: Scalar>(model: OdeModel, st: &OdeState<T>, pr: &OdeParams<T>, dt: T) -> OdeState<T> {
    let half = dt / T::lit(2.0);
    let k1 = model.rhs(st, pr);
    let k2 = model.rhs(&st.axpy(half, &k1), pr);
    let k3 = model.rhs(&st.axpy(half, &k2), pr);
    let k4 = model.rhs(&st.axpy(dt, &k3), pr);
    let six = T::lit(6.0);
    let two = T::lit(2.0);
    let combine = |a: T, b: T, c: T, d: T| (a + two * b + two * c + d) / six;
    let slope = Derivative {
        ds: combine(k1.ds, k2.ds, k3.ds, k4.ds),
        di: combine(k1.di, k2.di, k3.di, k4.di),
    };
    st.axpy(dt, &slope)
}

/// Integrates `model` from `st0` up to `t_end` with fixed step `dt`.
///
/// The last step is shortened when `t_end` is not a multiple of `dt`. Every
/// state, including the initial one, is checked for blow-up, the `[0, 1]`
/// bounds and conservation of the total.
pub fn integrate<T: Scalar>(
    model: OdeModel,
    st0: OdeState<T>,
    pr: &OdeParams<T>,
    dt: T,
    t_end: T,
) -> Result<Trajectory<T>> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::param("dt", format!("{dt} must be positive")));
    }
    if !(t_end >= dt) || !t_end.is_finite() {
        return Err(Error::param("t_end", format!("{t_end} must be finite and >= dt")));
    }
    if model == OdeModel::Sis && st0.r != T::zero() {
        return Err(Error::param("r", "SIS state has no recovered class"));
    }
    check_state(&st0, 0, T::zero())?;

    let ratio = (t_end / dt).as_f64();
    let mut steps = ratio.floor() as usize;
    // A remainder below roundoff level is not worth an extra sliver step.
    if ratio - steps as f64 > 1e-9 {
        steps += 1;
    }
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(T::zero());
    states.push(st0);
    let mut st = st0;
    for k in 1..=steps {
        let t_prev = dt * T::from_usize_lossy(k - 1);
        let t = if k == steps { t_end } else { dt * T::from_usize_lossy(k) };
        st = rk4_step(model, &st, pr, t - t_prev);
        check_state(&st, k, t)?;
        times.push(t);
        states.push(st);
    }
    Ok(Trajectory { times, states })
}

/// Solves the SIR final-size relation `s = s0 * exp(-(beta/gamma) * (1 - s))`
/// for its root in `(0, s0]` by bisection. Requires `gamma > 0`.
pub fn sir_final_size(s0: f64, r0: f64) -> f64 {
    let f = |s: f64| s - s0 * (-r0 * (1.0 - s)).exp();
    // f(0) < 0. For r0 * s0 > 1, f(s0) > 0 and the smaller root sits below s0;
    // otherwise the root is also bracketed by (0, s0] since f(s0) >= 0.
    let (mut lo, mut hi) = (0.0, s0);
    if f(hi) < 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
