//! Forward quotes: the exact arithmetic forward, its unweighted, linear
//! and piecewise approximations, the geometric forward, and the
//! expectation-of-integrated-rate forwards.

use serde::{Deserialize, Serialize};

use crate::curve::DiscountCurve;
use crate::error::{Error, Result};
use crate::factors::{
    default_midpoint, factor_curve_exact, factor_exact, factor_linear, factor_piecewise,
    FactorCurve,
};
use crate::g2pp::G2ppParams;
use crate::montecarlo::McEstimate;
use crate::quadrature::QuadratureRule;
use crate::real::Real;
use crate::timegrid::AccrualGrid;

/// How a forward quote was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForwardMethod {
    /// Exact factors for every period.
    Exact,
    /// Unweighted: all factors set to one.
    Murex,
    /// Linear factor interpolation from `(T_1, A_1)` to `(T_e, 1)`.
    Linear,
    /// Piecewise-linear factor interpolation with a midpoint knot.
    Piecewise,
    /// Geometric (compounded) forward of the period.
    Geometric,
    /// `log(1 + tau F_g)/tau`, the deterministic-rate average forward.
    TakadaDet,
    /// `E[int r]/tau` under the terminal forward measure.
    TakadaOa,
    /// Monte Carlo estimate of the exact arithmetic forward.
    Mc,
}

impl ForwardMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ForwardMethod::Exact => "exact",
            ForwardMethod::Murex => "murex",
            ForwardMethod::Linear => "linear",
            ForwardMethod::Piecewise => "piecewise",
            ForwardMethod::Geometric => "geometric",
            ForwardMethod::TakadaDet => "takada_det",
            ForwardMethod::TakadaOa => "takada_oa",
            ForwardMethod::Mc => "mc",
        }
    }
}

impl std::str::FromStr for ForwardMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "exact" => ForwardMethod::Exact,
            "murex" => ForwardMethod::Murex,
            "linear" => ForwardMethod::Linear,
            "piecewise" => ForwardMethod::Piecewise,
            "geometric" => ForwardMethod::Geometric,
            "takada_det" => ForwardMethod::TakadaDet,
            "takada_oa" => ForwardMethod::TakadaOa,
            "mc" => ForwardMethod::Mc,
            other => {
                return Err(Error::domain(format!(
                    "unknown method `{other}` (expected exact, murex, linear, piecewise, \
                     geometric, takada_det, takada_oa or mc)"
                )))
            }
        })
    }
}

/// A forward value with its provenance and optional diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardQuote<R> {
    pub value: R,
    pub method: ForwardMethod,
    /// Present exactly when the quote is a Monte Carlo estimate.
    pub std_error: Option<R>,
    /// The factor curve behind a factor-weighted quote.
    pub factors: Option<FactorCurve<R>>,
}

impl<R: Real> ForwardQuote<R> {
    pub fn from_mc(est: McEstimate<R>) -> Self {
        ForwardQuote {
            value: est.value,
            method: ForwardMethod::Mc,
            std_error: Some(est.std_error),
            factors: None,
        }
    }
}

/// `(1/tau) sum(tau_k A_k F_k)` for a given factor curve.
fn weighted_average<R: Real>(
    curve: &DiscountCurve<R>,
    grid: &AccrualGrid<R>,
    factors: Option<&FactorCurve<R>>,
) -> Result<R> {
    let mut acc = R::zero();
    for k in 0..grid.period_count() {
        let weight = match factors {
            Some(f) => f.values()[k],
            None => R::one(),
        };
        acc += grid.fractions()[k] * weight * curve.on_forward(grid, k)?;
    }
    Ok(acc / grid.total())
}

/// Arithmetic forward under one of the factor weightings. The midpoint for
/// the piecewise method defaults to the ceil(K/2)-th period when not given.
pub fn arithmetic_forward<R: Real>(
    model: &G2ppParams<R>,
    curve: &DiscountCurve<R>,
    grid: &AccrualGrid<R>,
    method: ForwardMethod,
    order: usize,
    midpoint: Option<usize>,
) -> Result<ForwardQuote<R>> {
    let factors = match method {
        ForwardMethod::Exact => Some(factor_curve_exact(model, curve, grid, order)?),
        ForwardMethod::Murex => None,
        ForwardMethod::Linear => {
            let a1 = factor_exact(model, curve, grid, 0, order)?;
            Some(factor_linear(a1, grid)?)
        }
        ForwardMethod::Piecewise => {
            let a1 = factor_exact(model, curve, grid, 0, order)?;
            let m = midpoint.unwrap_or_else(|| default_midpoint(grid));
            let am = factor_exact(model, curve, grid, m, order)?;
            Some(factor_piecewise(a1, am, grid, m)?)
        }
        other => {
            return Err(Error::domain(format!(
                "arithmetic_forward does not produce `{}` quotes",
                other.name()
            )))
        }
    };
    let value = weighted_average(curve, grid, factors.as_ref())?;
    Ok(ForwardQuote {
        value,
        method,
        std_error: None,
        factors,
    })
}

/// Geometric forward of the period as a quote.
pub fn geometric_forward<R: Real>(
    curve: &DiscountCurve<R>,
    grid: &AccrualGrid<R>,
) -> Result<ForwardQuote<R>> {
    Ok(ForwardQuote {
        value: curve.geometric_forward(grid)?,
        method: ForwardMethod::Geometric,
        std_error: None,
        factors: None,
    })
}

/// Deterministic-rate average forward `log(1 + tau F_g)/tau`.
pub fn takada_det_forward<R: Real>(
    curve: &DiscountCurve<R>,
    grid: &AccrualGrid<R>,
) -> Result<ForwardQuote<R>> {
    let tau = grid.total();
    let f_g = curve.geometric_forward(grid)?;
    Ok(ForwardQuote {
        value: (R::one() + tau * f_g).ln() / tau,
        method: ForwardMethod::TakadaDet,
        std_error: None,
        factors: None,
    })
}

/// `O_a = (1/tau) E[int_{T_s}^{T_e} r]` under the `T_e`-forward measure,
/// integrating the closed-form short-rate mean with Gauss-Legendre.
pub fn takada_oa<R: Real>(
    model: &G2ppParams<R>,
    curve: &DiscountCurve<R>,
    grid: &AccrualGrid<R>,
    time_steps: usize,
) -> Result<ForwardQuote<R>> {
    if time_steps < 16 {
        return Err(Error::domain("takada_oa needs at least 16 time steps"));
    }
    let t_e = grid.end();
    let rule = QuadratureRule::<R>::legendre(time_steps)?;
    // the mean itself cannot fail inside the interval once checked at the
    // endpoints, so evaluate eagerly and propagate one error afterwards
    let mut failed = None;
    let integral = rule.integrate_interval(grid.start(), t_e, |u| {
        match model.forward_short_rate_mean(curve, u, t_e) {
            Ok(v) => v,
            Err(e) => {
                failed = Some(e);
                R::zero()
            }
        }
    });
    if let Some(e) = failed {
        return Err(e);
    }
    Ok(ForwardQuote {
        value: integral / grid.total(),
        method: ForwardMethod::TakadaOa,
        std_error: None,
        factors: None,
    })
}
