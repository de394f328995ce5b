//! G2++ two-factor Gaussian short-rate model.
//!
//! The short rate is `r(t) = x(t) + y(t) + phi(t)` with correlated
//! Ornstein-Uhlenbeck factors
//!
//! ```text
//! dx = -a x dt + sigma dW1,   dy = -b y dt + eta dW2,   dW1 dW2 = rho dt
//! ```
//!
//! and a deterministic shift `phi` that fits the initial discount curve
//! exactly. The one-factor Hull-White model is the `eta = 0` special case;
//! there is no separate code path for it.
//!
//! `phi` is never tabulated: every operation is arranged so that only bond
//! ratios and `f(0,t)` plus the standard variance hump appear, which the
//! exact-fit property makes sufficient.

use serde::{Deserialize, Serialize};

use crate::curve::DiscountCurve;
use crate::error::{Error, Result};
use crate::real::Real;

/// Model parameters `(sigma, a, eta, b, rho)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct G2ppParams<R> {
    /// Volatility of the first factor (absolute, per sqrt-year).
    pub sigma: R,
    /// Mean reversion of the first factor.
    pub a: R,
    /// Volatility of the second factor.
    pub eta: R,
    /// Mean reversion of the second factor.
    pub b: R,
    /// Instantaneous correlation of the factor Brownian motions.
    pub rho: R,
}

/// Probability measure a Gaussian factor law is stated under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureTag<R> {
    /// Money-market-account numeraire.
    RiskNeutral,
    /// `P(., U)` numeraire for the given horizon `U`.
    Forward(R),
}

/// Mean and covariance of `(x(t), y(t))` under a tagged measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLaw2D<R> {
    pub mean: [R; 2],
    /// Symmetric 2x2 covariance matrix.
    pub cov: [[R; 2]; 2],
    pub time: R,
    pub measure: MeasureTag<R>,
}

/// `B_c(t) = (1 - e^{-c t}) / c`.
pub(crate) fn b_factor<R: Real>(c: R, t: R) -> R {
    (R::one() - (-c * t).exp()) / c
}

impl<R: Real> G2ppParams<R> {
    pub fn new(sigma: R, a: R, eta: R, b: R, rho: R) -> Result<Self> {
        let p = G2ppParams {
            sigma,
            a,
            eta,
            b,
            rho,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = self.sigma.is_finite()
            && self.a.is_finite()
            && self.eta.is_finite()
            && self.b.is_finite()
            && self.rho.is_finite();
        if !all_finite {
            return Err(Error::domain("model parameters must be finite"));
        }
        if self.sigma < R::zero() || self.eta < R::zero() {
            return Err(Error::domain("volatilities must be non-negative"));
        }
        if self.a <= R::zero() || self.b <= R::zero() {
            return Err(Error::domain("mean reversions must be positive"));
        }
        if self.rho < -R::one() || self.rho > R::one() {
            return Err(Error::domain("correlation must lie in [-1, 1]"));
        }
        Ok(())
    }

    /// Variance of `int_t^T (x(u) + y(u)) du` given time-`t` information.
    /// Depends on the tenor only.
    pub fn integrated_variance(&self, t: R, big_t: R) -> Result<R> {
        if t > big_t {
            return Err(Error::domain("integrated_variance requires t <= T"));
        }
        Ok(self.v_tenor(big_t - t))
    }

    /// `V(0, dt)` as a function of the tenor.
    pub(crate) fn v_tenor(&self, dt: R) -> R {
        let (s, a, e, b, rho) = (self.sigma, self.a, self.eta, self.b, self.rho);
        let one = R::one();
        let two = R::cast(2.0);
        let half = R::cast(0.5);
        let x_part = s * s / (a * a)
            * (dt + two / a * (-a * dt).exp() - half / a * (-two * a * dt).exp()
                - R::cast(1.5) / a);
        let y_part = e * e / (b * b)
            * (dt + two / b * (-b * dt).exp() - half / b * (-two * b * dt).exp()
                - R::cast(1.5) / b);
        let cross = two * rho * s * e / (a * b)
            * (dt + ((-a * dt).exp() - one) / a + ((-b * dt).exp() - one) / b
                - ((-(a + b) * dt).exp() - one) / (a + b));
        x_part + y_part + cross
    }

    /// Zero-coupon bond `P(t, T)` as a function of the factor state,
    /// consistent with the initial curve:
    /// `P(t,T,x,y) = P(0,T)/P(0,t) * exp(A(t,T,x,y))`.
    pub fn bond_reconstitute(
        &self,
        curve: &DiscountCurve<R>,
        t: R,
        big_t: R,
        x: R,
        y: R,
    ) -> Result<R> {
        if t > big_t {
            return Err(Error::domain("bond_reconstitute requires t <= T"));
        }
        let ratio = curve.discount(big_t)? / curve.discount(t)?;
        Ok(ratio * self.reconstitution_exponent(t, big_t, x, y).exp())
    }

    /// `A(t,T,x,y) = 0.5 [V(t,T) - V(0,T) + V(0,t)] - B_a(T-t) x - B_b(T-t) y`.
    pub(crate) fn reconstitution_exponent(&self, t: R, big_t: R, x: R, y: R) -> R {
        let dt = big_t - t;
        let half = R::cast(0.5);
        half * (self.v_tenor(dt) - self.v_tenor(big_t) + self.v_tenor(t))
            - b_factor(self.a, dt) * x
            - b_factor(self.b, dt) * y
    }

    /// Covariance of `(x(t), y(t))`; the same under every forward measure
    /// because measure changes only shift the (deterministic) drift.
    pub(crate) fn state_covariance(&self, t: R) -> [[R; 2]; 2] {
        let (s, a, e, b, rho) = (self.sigma, self.a, self.eta, self.b, self.rho);
        let two = R::cast(2.0);
        let c11 = s * s * b_factor(two * a, t);
        let c22 = e * e * b_factor(two * b, t);
        let c12 = rho * s * e * b_factor(a + b, t);
        [[c11, c12], [c12, c22]]
    }

    /// Mean of `(x(t), y(t))` under the `U`-forward measure, from the
    /// Girsanov drift `-(sigma^2 B_a(s,U) + rho sigma eta B_b(s,U))`
    /// integrated against `e^{-a(t-s)}` in closed form (and symmetrically
    /// for `y`).
    pub(crate) fn forward_measure_mean(&self, t: R, u: R) -> [R; 2] {
        let (s, a, e, b, rho) = (self.sigma, self.a, self.eta, self.b, self.rho);
        let half = R::cast(0.5);
        let one = R::one();
        let mx = (s * s / (a * a) + rho * s * e / (a * b)) * (one - (-a * t).exp())
            - half * s * s / (a * a) * ((-a * (u - t)).exp() - (-a * (u + t)).exp())
            - rho * s * e / (b * (a + b)) * ((-b * (u - t)).exp() - (-b * u - a * t).exp());
        let my = (e * e / (b * b) + rho * s * e / (a * b)) * (one - (-b * t).exp())
            - half * e * e / (b * b) * ((-b * (u - t)).exp() - (-b * (u + t)).exp())
            - rho * s * e / (a * (a + b)) * ((-a * (u - t)).exp() - (-a * u - b * t).exp());
        [-mx, -my]
    }

    /// Exact Gaussian law of `(x(t), y(t))` under the tagged measure.
    /// For `t <= 0` the law degenerates to a point mass at the origin.
    pub fn factor_law(&self, t: R, measure: MeasureTag<R>) -> Result<GaussianLaw2D<R>> {
        if t <= R::zero() {
            return Ok(GaussianLaw2D {
                mean: [R::zero(); 2],
                cov: [[R::zero(); 2]; 2],
                time: t,
                measure,
            });
        }
        let mean = match measure {
            MeasureTag::RiskNeutral => [R::zero(); 2],
            MeasureTag::Forward(u) => {
                if u < t {
                    return Err(Error::domain(
                        "forward-measure horizon must not precede the law time",
                    ));
                }
                self.forward_measure_mean(t, u)
            }
        };
        Ok(GaussianLaw2D {
            mean,
            cov: self.state_covariance(t),
            time: t,
            measure,
        })
    }

    /// Variance hump of the exact-fit shift:
    /// `phi(t) = f(0,t) + hump(t)`.
    pub(crate) fn phi_hump(&self, t: R) -> R {
        let (s, a, e, b, rho) = (self.sigma, self.a, self.eta, self.b, self.rho);
        let half = R::cast(0.5);
        let ea = R::one() - (-a * t).exp();
        let eb = R::one() - (-b * t).exp();
        half * s * s / (a * a) * ea * ea
            + half * e * e / (b * b) * eb * eb
            + rho * s * e / (a * b) * ea * eb
    }

    /// `E[r(u)]` under the `horizon`-forward measure:
    /// `phi(u) + mean_x(u) + mean_y(u)`.
    pub fn forward_short_rate_mean(
        &self,
        curve: &DiscountCurve<R>,
        u: R,
        horizon: R,
    ) -> Result<R> {
        if u <= R::zero() || u > horizon {
            return Err(Error::domain(
                "forward_short_rate_mean requires 0 < u <= horizon",
            ));
        }
        let law = self.factor_law(u, MeasureTag::Forward(horizon))?;
        let phi = curve.instantaneous_forward(u)? + self.phi_hump(u);
        Ok(phi + law.mean[0] + law.mean[1])
    }
}

impl<R: Real> GaussianLaw2D<R> {
    /// True when the covariance is exactly zero (deterministic state).
    pub fn is_degenerate(&self) -> bool {
        self.cov[0][0] == R::zero() && self.cov[1][1] == R::zero()
    }
}
