//! Explicit stationary solution and discrepancy norms.
//!
//! The horizon-free equation `-b(x) v' + v'^2 / 2 - x^2 / 2 = 0`, `v(0) = phi(0)`
//! has the smooth increasing solution
//!
//! ```text
//! v(x) = phi(0) + int_0^x b(s) + sqrt(b(s)^2 + s^2) ds
//! ```
//!
//! which is the large-horizon limit of the marched value function on bounded
//! sets. It is evaluated by the trapezoidal rule on the solver nodes, and for
//! `alpha = 1` also by an inverse-hyperbolic-sine antiderivative.

use crate::error::{Error, Result};
use crate::model::{drift, ModelParams};

/// `b(s) + sqrt(b(s)^2 + s^2)`, the slope of the stationary solution.
pub fn stationary_integrand(p: &ModelParams, s: f64) -> f64 {
    let b = drift(p, s);
    b + b.hypot(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryField {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub phi0: f64,
}

/// Trapezoidal accumulation of [`stationary_integrand`] over ascending nodes
/// starting at zero.
pub fn stationary_value(p: &ModelParams, phi0: f64, nodes: &[f64]) -> Result<StationaryField> {
    if nodes.first() != Some(&0.0) {
        return Err(Error::BadDimensions(
            "stationary nodes must start at x = 0".into(),
        ));
    }
    if nodes.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::BadDimensions("stationary nodes must be ascending".into()));
    }
    let mut values = Vec::with_capacity(nodes.len());
    let mut acc = phi0;
    let mut g_prev = stationary_integrand(p, nodes[0]);
    values.push(acc);
    for w in nodes.windows(2) {
        let g = stationary_integrand(p, w[1]);
        acc += 0.5 * (w[1] - w[0]) * (g_prev + g);
        values.push(acc);
        g_prev = g;
    }
    Ok(StationaryField {
        nodes: nodes.to_vec(),
        values,
        phi0,
    })
}

/// Closed form of the stationary solution for the logistic case (`alpha = M = 1`):
///
/// ```text
/// v(x) = phi0 + C0 - beta x^3 / (3N) + (beta - gamma) x^2 / 2
///        + N^2/beta^2 [ (y^2 + 1)^{3/2} / 3 - (beta - gamma) y sqrt(y^2 + 1) / 2
///                       - (beta - gamma) asinh(y) / 2 ]
/// ```
///
/// with `y(x) = beta - gamma - beta x / N` and `C0` chosen so that `v(0) = phi0`.
pub fn closed_form_alpha1(p: &ModelParams, phi0: f64, x: f64) -> Result<f64> {
    if p.alpha() != 1.0 || p.m_alpha() != 1.0 {
        return Err(Error::RequiresLogistic {
            alpha: p.alpha(),
            m_alpha: p.m_alpha(),
        });
    }
    let (beta, gamma, n) = (p.beta(), p.gamma(), p.n_pop());
    let c = beta - gamma;
    let scale = n * n / (beta * beta);
    let c0 = scale
        * (0.5 * (c * c + 1.0).sqrt() * c * c - (c * c + 1.0).powf(1.5) / 3.0 + 0.5 * c * c.asinh());
    let y = c - beta / n * x;
    let r = (y * y + 1.0).sqrt();
    let bracket = r * r * r / 3.0 - 0.5 * c * y * r - 0.5 * c * y.asinh();
    Ok(phi0 + c0 - beta * x * x * x / (3.0 * n) + 0.5 * x * x * c + scale * bracket)
}

/// Discrepancy between a marched field and the stationary reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    /// `max_i |u_i - v_i|`
    pub l_inf: f64,
    /// `sqrt(dx * sum_i (u_i - v_i)^2)`
    pub l_2: f64,
    /// `dx * sum_i (u_i - v_i)^2`, the squared discrete L2 norm. This is the
    /// quantity usually tabulated as the "L2 error" in refinement studies of
    /// this problem and decays at second order.
    pub l_2_sq: f64,
}

pub fn compare_fields(u_final: &[f64], v_bar: &[f64], dx: f64) -> Result<ErrorNorms> {
    if u_final.len() != v_bar.len() {
        return Err(Error::LengthMismatch {
            left: u_final.len(),
            right: v_bar.len(),
        });
    }
    let mut l_inf: f64 = 0.0;
    let mut sum_sq = 0.0;
    for (u, v) in u_final.iter().zip(v_bar) {
        let d = (u - v).abs();
        l_inf = l_inf.max(d);
        sum_sq += d * d;
    }
    let l_2_sq = dx * sum_sq;
    Ok(ErrorNorms {
        l_inf,
        l_2: l_2_sq.sqrt(),
        l_2_sq,
    })
}

/// Writes the stationary field as `x,v_bar`.
pub fn write_stationary_csv(path: &std::path::Path, field: &StationaryField) -> Result<()> {
    crate::hjb::write_nodal_csv(path, "v_bar", &field.nodes, &field.values)
}
