//! The fractional SIS model reduced to the infected population.
//!
//! With the conservation law `S = N - I`, the Caputo-Fabrizio SIS system is
//! equivalent to the scalar ODE `I' = b_alpha(I)` where
//!
//! ```text
//! b_alpha(x) = alpha (beta - gamma - beta x / N) x / (M - (1 - alpha)(beta - gamma - 2 beta x / N))
//! ```
//!
//! For `alpha = 1` (and `M(1) = 1`) this is the logistic equation.
//!
//! The same drift can be written as a saturated SIS model
//! `I' = (lambda (N - I) - r) I / (1 + k I)`. Note that the coefficients in the
//! literature are printed with unbalanced parentheses, an extra `1/N` in `r`
//! and an extra `-(1 - alpha)` in the denominator of `k`; [`saturated_params`]
//! uses the unique coefficients that reproduce `b_alpha` identically.

use crate::control::TrajectoryRecord;
use crate::error::{Error, Result};

/// Round-off tolerance below zero that is silently clamped to zero.
pub const STATE_CLAMP_TOL: f64 = 1e-12;

/// Parameters `(alpha, beta, gamma, N, M(alpha))` of the fractional SIS model.
///
/// Constructed only through [`ModelParams::new`], so every value in circulation
/// satisfies positivity, `0 <= alpha <= 1` and the admissibility condition
/// `alpha + (1 - alpha)(beta - gamma) <= M(alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    alpha: f64,
    beta: f64,
    gamma: f64,
    n_pop: f64,
    m_alpha: f64,
}

impl ModelParams {
    /// Validates and builds a parameter set.
    pub fn new(alpha: f64, beta: f64, gamma: f64, n_pop: f64, m_alpha: f64) -> Result<Self> {
        validate_params(ModelParams {
            alpha,
            beta,
            gamma,
            n_pop,
            m_alpha,
        })
    }

    /// Parameters used throughout the numerical experiments: `N = 9/4`,
    /// `gamma = 1`, `M = 1` and `beta = rho * gamma`.
    pub fn reference(alpha: f64, rho: f64) -> Result<Self> {
        Self::new(alpha, rho, 1.0, 2.25, 1.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n_pop(&self) -> f64 {
        self.n_pop
    }

    pub fn m_alpha(&self) -> f64 {
        self.m_alpha
    }

    /// Reproduction factor `rho = beta / gamma`.
    pub fn rho(&self) -> f64 {
        self.beta / self.gamma
    }

    /// Root `x0` of the drift denominator, or `None` when `alpha = 1`
    /// (constant denominator).
    pub fn denominator_root(&self) -> Option<f64> {
        if self.alpha >= 1.0 {
            return None;
        }
        let one_m = 1.0 - self.alpha;
        Some(((self.beta - self.gamma) * one_m - self.m_alpha) * 2.0 * self.n_pop / (self.beta * one_m))
    }

    pub fn drift(&self, x: f64) -> f64 {
        drift(self, x)
    }
}

/// Checks every [`ModelParams`] invariant and returns the params unchanged.
pub fn validate_params(raw: ModelParams) -> Result<ModelParams> {
    let ModelParams {
        alpha,
        beta,
        gamma,
        n_pop,
        m_alpha,
    } = raw;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    for (name, value) in [
        ("beta", beta),
        ("gamma", gamma),
        ("n_pop", n_pop),
        ("m_alpha", m_alpha),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositiveParameter { name, value });
        }
    }
    let lhs = alpha + (1.0 - alpha) * (beta - gamma);
    if lhs > m_alpha {
        return Err(Error::ViolatedAdmissibility { lhs, rhs: m_alpha });
    }
    if let Some(x0) = raw.denominator_root() {
        if x0 >= 0.0 {
            return Err(Error::SingularDrift(x0));
        }
    }
    Ok(raw)
}

/// Reduced drift `b_alpha(x)`.
pub fn drift(p: &ModelParams, x: f64) -> f64 {
    let growth = p.beta - p.gamma - p.beta / p.n_pop * x;
    let slope = p.beta - p.gamma - 2.0 * p.beta / p.n_pop * x;
    growth * x * p.alpha / (p.m_alpha - (1.0 - p.alpha) * slope)
}

/// Derivative `b_alpha'(x)`, written as the two-term quotient
/// `alpha y2 / D - 2 (1 - alpha) alpha (beta / N) x y1 / D^2`.
pub fn drift_derivative(p: &ModelParams, x: f64) -> f64 {
    let growth = p.beta - p.gamma - p.beta / p.n_pop * x;
    let slope = p.beta - p.gamma - 2.0 * p.beta / p.n_pop * x;
    let den = p.m_alpha - (1.0 - p.alpha) * slope;
    p.alpha * slope / den
        - 2.0 * (1.0 - p.alpha) * p.alpha * (p.beta / p.n_pop) * x * growth / (den * den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub state: f64,
    pub stable: bool,
}

/// Equilibria of `I' = b_alpha(I)` in `[0, +inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumSet {
    pub disease_free: Equilibrium,
    /// `E = N (1 - 1/rho)`, present only when `rho > 1`.
    pub endemic: Option<Equilibrium>,
}

impl EquilibriumSet {
    /// The asymptotically stable equilibrium.
    pub fn attractor(&self) -> f64 {
        match self.endemic {
            Some(e) => e.state,
            None => self.disease_free.state,
        }
    }
}

pub fn equilibria(p: &ModelParams) -> EquilibriumSet {
    let rho = p.rho();
    if rho > 1.0 {
        EquilibriumSet {
            disease_free: Equilibrium {
                state: 0.0,
                stable: false,
            },
            endemic: Some(Equilibrium {
                state: p.n_pop * (1.0 - 1.0 / rho),
                stable: true,
            }),
        }
    } else {
        EquilibriumSet {
            disease_free: Equilibrium {
                state: 0.0,
                stable: true,
            },
            endemic: None,
        }
    }
}

/// Coefficients of the saturated incidence/treatment form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturatedParams {
    pub lambda_a: f64,
    pub r_a: f64,
    pub k_a: f64,
}

impl SaturatedParams {
    /// Right-hand side `(lambda (N - I) - r) I / (1 + k I)`.
    pub fn rate(&self, n_pop: f64, i: f64) -> f64 {
        (self.lambda_a * (n_pop - i) - self.r_a) * i / (1.0 + self.k_a * i)
    }
}

pub fn saturated_params(p: &ModelParams) -> SaturatedParams {
    let one_m = 1.0 - p.alpha;
    let d0 = p.m_alpha - one_m * (p.beta - p.gamma);
    SaturatedParams {
        lambda_a: p.alpha * p.beta / (p.n_pop * d0),
        r_a: p.alpha * p.gamma / d0,
        k_a: 2.0 * p.beta * one_m / (p.n_pop * d0),
    }
}

/// Explicit logistic solution for `alpha = 1`.
///
/// With `M != 1` the drift is the logistic rate divided by `M`, so the rates
/// are rescaled accordingly.
pub fn logistic_closed_form(p: &ModelParams, i0: f64, t: f64) -> Result<f64> {
    if p.alpha != 1.0 {
        return Err(Error::RequiresLogistic {
            alpha: p.alpha,
            m_alpha: p.m_alpha,
        });
    }
    let beta = p.beta / p.m_alpha;
    let gamma = p.gamma / p.m_alpha;
    if beta == gamma {
        return Err(Error::DegenerateRate);
    }
    let n = p.n_pop;
    Ok(n * i0 * (beta - gamma)
        / ((t * (gamma - beta)).exp() * (n * (beta - gamma) - beta * i0) + beta * i0))
}

fn rk4_step(p: &ModelParams, y: f64, h: f64) -> f64 {
    let k1 = drift(p, y);
    let k2 = drift(p, y + 0.5 * h * k1);
    let k3 = drift(p, y + 0.5 * h * k2);
    let k4 = drift(p, y + h * k3);
    y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

fn check_band(p: &ModelParams, time: f64, state: f64) -> Result<f64> {
    if !state.is_finite() || state > 2.0 * p.n_pop || state < -STATE_CLAMP_TOL {
        return Err(Error::StepTooLarge { time, state });
    }
    Ok(state.max(0.0))
}

/// Number of steps and the adjusted step so that `steps * h == horizon`.
fn step_count(horizon: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0) || !(horizon >= 0.0) {
        return Err(Error::BadDimensions(format!(
            "need dt > 0 and horizon >= 0, got dt = {dt}, horizon = {horizon}"
        )));
    }
    let n = (horizon / dt - 1e-9).ceil().max(0.0) as usize;
    let h = if n == 0 { dt } else { horizon / n as f64 };
    Ok((n, h))
}

/// Integrates `I' = b_alpha(I)` with classical RK4.
///
/// The record carries zero controls and running cost `I^2 / 2`.
pub fn integrate_uncontrolled(p: &ModelParams, i0: f64, horizon: f64, dt: f64) -> Result<TrajectoryRecord> {
    let (n, h) = step_count(horizon, dt)?;
    let mut y = check_band(p, 0.0, i0)?;
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    times.push(0.0);
    states.push(y);
    for k in 1..=n {
        let t = k as f64 * h;
        y = check_band(p, t, rk4_step(p, y, h))?;
        times.push(t);
        states.push(y);
    }
    Ok(TrajectoryRecord::uncontrolled(times, states))
}

/// States of the uncontrolled model on `[-lookback, 0]`, ending at `i0`.
///
/// Obtained by integrating the ODE backward in time; the output is ordered by
/// increasing time. Useful as the memory of a trajectory when evaluating the
/// Caputo-Fabrizio derivative, whose value depends on the whole past.
pub fn uncontrolled_prehistory(p: &ModelParams, i0: f64, lookback: f64, dt: f64) -> Result<Vec<f64>> {
    let (n, h) = step_count(lookback, dt)?;
    let mut y = check_band(p, 0.0, i0)?;
    let mut states = Vec::with_capacity(n + 1);
    states.push(y);
    for k in 1..=n {
        y = check_band(p, -(k as f64) * h, rk4_step(p, y, -h))?;
        states.push(y);
    }
    states.reverse();
    Ok(states)
}

/// Caputo-Fabrizio derivative of uniformly sampled data, with the lower
/// integration limit at the first sample.
///
/// `f'` is taken from centred differences (second-order one-sided at the
/// ends) and the exponential-kernel integral from the trapezoidal rule,
/// accumulated recursively so the cost is linear in the number of samples.
pub fn cf_derivative(samples: &[f64], dt: f64, alpha: f64, m_alpha: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::OrderOutOfRange(alpha));
    }
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    if !(dt > 0.0) {
        return Err(Error::BadDimensions(format!("dt must be positive, got {dt}")));
    }
    let fprime = centred_derivative(samples, dt);
    let rate = alpha / (1.0 - alpha);
    let scale = m_alpha / (1.0 - alpha);
    let decay = (-rate * dt).exp();
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(n);
    out.push(0.0);
    for k in 1..n {
        acc = decay * acc + 0.5 * dt * (decay * fprime[k - 1] + fprime[k]);
        out.push(scale * acc);
    }
    Ok(out)
}

pub(crate) fn centred_derivative(f: &[f64], dt: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    if n == 2 {
        let s = (f[1] - f[0]) / dt;
        return vec![s, s];
    }
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dt);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dt);
    for k in 1..n - 1 {
        d[k] = (f[k + 1] - f[k - 1]) / (2.0 * dt);
    }
    d
}
