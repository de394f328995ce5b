//! Arithmetic factors `A_k` and their linear and piecewise-linear
//! approximations.
//!
//! The exact factor is defined as `A_k = E^{T_e}[R_k] / F_k`, which makes
//! the pricing identity `F_a = (1/tau) sum(tau_k A_k F_k)` hold by
//! construction. The in-advance expectation `E^{T_k}[R_k]` and the
//! normalized-product form of the factor (an inverse expectation of two
//! unit-mean variables) are tracked as diagnostics; the ratio
//! `E^{T_e}[R_k] / E^{T_k}[R_k]` and the normalized product agree
//! identically up to quadrature error, which exercises the
//! change-of-numeraire algebra from two directions.

use std::io::Write;

use rayon::prelude::*;

use crate::curve::DiscountCurve;
use crate::error::{Error, Result};
use crate::g2pp::{G2ppParams, MeasureTag};
use crate::quadrature::gaussian_expectation_2d;
use crate::real::Real;
use crate::timegrid::AccrualGrid;

/// How a factor curve was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorMethod {
    Exact,
    Linear,
    Piecewise,
}

/// Per-period inner expectations kept alongside the exact factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorDiagnostics<R> {
    /// `E^{T_e}[R_k]`.
    pub expected_rate: R,
    /// `E^{T_e}[1 / P(T_k, T_e)]`; equals `P(T_k)/P(T_e)` by the
    /// martingale pricing identity.
    pub expected_inverse_bond: R,
    /// `E^{T_k}[R_k]`, the in-advance forward.
    pub in_advance: R,
    /// The normalized-product form of the factor.
    pub normalized_product: R,
}

impl<R: Real> FactorDiagnostics<R> {
    /// `E^{T_e}[R_k] / E^{T_k}[R_k]`, the change-of-numeraire ratio form.
    pub fn ratio_form(&self) -> R {
        self.expected_rate / self.in_advance
    }
}

/// A per-period factor curve over an accrual grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorCurve<R> {
    grid: AccrualGrid<R>,
    values: Vec<R>,
    method: FactorMethod,
    diagnostics: Option<Vec<FactorDiagnostics<R>>>,
}

impl<R: Real> FactorCurve<R> {
    pub fn grid(&self) -> &AccrualGrid<R> {
        &self.grid
    }

    /// Factor values `A_1 ..= A_K`.
    pub fn values(&self) -> &[R] {
        &self.values
    }

    /// Fixing times `T_1 ..= T_K` the values are attached to.
    pub fn fixing_times(&self) -> &[R] {
        &self.grid.times()[..self.values.len()]
    }

    pub fn method(&self) -> FactorMethod {
        self.method
    }

    pub fn diagnostics(&self) -> Option<&[FactorDiagnostics<R>]> {
        self.diagnostics.as_deref()
    }
}

/// Exponential-affine payoff constants for `R_k` and `1/P(T_k, T_e)`,
/// precomputed so the quadrature integrand stays allocation-free.
struct RatePayoff<R> {
    ratio: R,
    vconst: R,
    ba: R,
    bb: R,
    tau_inv: R,
}

impl<R: Real> RatePayoff<R> {
    /// `R_k(x, y) = (P(T_k)/P(T_{k+1}) e^{-A} - 1)/tau_k` at the factor state.
    fn rate(
        model: &G2ppParams<R>,
        curve: &DiscountCurve<R>,
        grid: &AccrualGrid<R>,
        k: usize,
    ) -> Result<Self> {
        let t_k = grid.times()[k];
        let t_k1 = grid.times()[k + 1];
        Ok(RatePayoff {
            ratio: curve.discount(t_k)? / curve.discount(t_k1)?,
            vconst: R::cast(0.5)
                * (model.v_tenor(t_k1 - t_k) - model.v_tenor(t_k1) + model.v_tenor(t_k)),
            ba: crate::g2pp::b_factor(model.a, t_k1 - t_k),
            bb: crate::g2pp::b_factor(model.b, t_k1 - t_k),
            tau_inv: R::one() / grid.fractions()[k],
        })
    }

    /// `1/P(T_k, T_e, x, y)` as the same exponential-affine shape.
    fn inverse_terminal_bond(
        model: &G2ppParams<R>,
        curve: &DiscountCurve<R>,
        grid: &AccrualGrid<R>,
        k: usize,
    ) -> Result<Self> {
        let t_k = grid.times()[k];
        let t_e = grid.end();
        Ok(RatePayoff {
            ratio: curve.discount(t_k)? / curve.discount(t_e)?,
            vconst: R::cast(0.5)
                * (model.v_tenor(t_e - t_k) - model.v_tenor(t_e) + model.v_tenor(t_k)),
            ba: crate::g2pp::b_factor(model.a, t_e - t_k),
            bb: crate::g2pp::b_factor(model.b, t_e - t_k),
            tau_inv: R::one(),
        })
    }

    fn eval_rate(&self, x: R, y: R) -> R {
        (self.ratio * (-self.vconst + self.ba * x + self.bb * y).exp() - R::one()) * self.tau_inv
    }

    fn eval_growth(&self, x: R, y: R) -> R {
        self.ratio * (-self.vconst + self.ba * x + self.bb * y).exp()
    }
}

/// Exact arithmetic factor `A_k = E^{T_e}[R_k] / F_k` for period `k`
/// (0-based), by Gauss-Hermite quadrature of the given order.
pub fn factor_exact<R: Real>(
    model: &G2ppParams<R>,
    curve: &DiscountCurve<R>,
    grid: &AccrualGrid<R>,
    k: usize,
    order: usize,
) -> Result<R> {
    factor_exact_with_diagnostics(model, curve, grid, k, order).map(|(a, _)| a)
}

/// Exact factor together with its inner expectations.
pub fn factor_exact_with_diagnostics<R: Real>(
    model: &G2ppParams<R>,
    curve: &DiscountCurve<R>,
    grid: &AccrualGrid<R>,
    k: usize,
    order: usize,
) -> Result<(R, FactorDiagnostics<R>)> {
    grid.check_period(k)?;
    let t_k = grid.times()[k];
    let t_e = grid.end();
    let rate = RatePayoff::rate(model, curve, grid, k)?;
    let inv_bond = RatePayoff::inverse_terminal_bond(model, curve, grid, k)?;

    let law_e = model.factor_law(t_k, MeasureTag::Forward(t_e))?;
    let expected_rate = gaussian_expectation_2d(&law_e, |x, y| rate.eval_rate(x, y), order)?;
    let expected_inverse_bond =
        gaussian_expectation_2d(&law_e, |x, y| inv_bond.eval_growth(x, y), order)?;
    let cross = gaussian_expectation_2d(
        &law_e,
        |x, y| rate.eval_rate(x, y) * inv_bond.eval_growth(x, y),
        order,
    )?;
    // inverse of the expectation of the product of two unit-mean variables
    let normalized_product = expected_rate * expected_inverse_bond / cross;

    let in_advance = in_advance_forward(model, curve, grid, k, order)?;
    let f_k = curve.on_forward(grid, k)?;
    let a_k = expected_rate / f_k;
    Ok((
        a_k,
        FactorDiagnostics {
            expected_rate,
            expected_inverse_bond,
            in_advance,
            normalized_product,
        },
    ))
}

/// In-advance forward `E^{T_k}[R_k]`; equals `F_k` for deterministic
/// models, and carries a one-day convexity residual otherwise.
pub fn in_advance_forward<R: Real>(
    model: &G2ppParams<R>,
    curve: &DiscountCurve<R>,
    grid: &AccrualGrid<R>,
    k: usize,
    order: usize,
) -> Result<R> {
    grid.check_period(k)?;
    let t_k = grid.times()[k];
    let rate = RatePayoff::rate(model, curve, grid, k)?;
    let law_k = model.factor_law(t_k, MeasureTag::Forward(t_k))?;
    gaussian_expectation_2d(&law_k, |x, y| rate.eval_rate(x, y), order)
}

/// Exact factors for every period, evaluated in parallel over `k`.
/// The result is independent of the degree of parallelism.
pub fn factor_curve_exact<R: Real>(
    model: &G2ppParams<R>,
    curve: &DiscountCurve<R>,
    grid: &AccrualGrid<R>,
    order: usize,
) -> Result<FactorCurve<R>> {
    let pairs: Vec<(R, FactorDiagnostics<R>)> = (0..grid.period_count())
        .into_par_iter()
        .map(|k| factor_exact_with_diagnostics(model, curve, grid, k, order))
        .collect::<Result<_>>()?;
    let (values, diagnostics) = pairs.into_iter().unzip();
    Ok(FactorCurve {
        grid: grid.clone(),
        values,
        method: FactorMethod::Exact,
        diagnostics: Some(diagnostics),
    })
}

/// Linear factor approximation: the line through `(T_1, A_1)` and `(T_e, 1)`.
pub fn factor_linear<R: Real>(a1: R, grid: &AccrualGrid<R>) -> Result<FactorCurve<R>> {
    if a1 <= R::zero() {
        return Err(Error::domain("first factor must be positive"));
    }
    let t1 = grid.start();
    let t_e = grid.end();
    let slope = (R::one() - a1) / (t_e - t1);
    let values = grid.times()[..grid.period_count()]
        .iter()
        .map(|&t| a1 + (t - t1) * slope)
        .collect();
    Ok(FactorCurve {
        grid: grid.clone(),
        values,
        method: FactorMethod::Linear,
        diagnostics: None,
    })
}

/// Piecewise-linear factor approximation with a knot `(T_m, A_m)` at the
/// 0-based interior index `m`: two segments joining `(T_1, A_1)` to
/// `(T_m, A_m)` to `(T_e, 1)`.
pub fn factor_piecewise<R: Real>(
    a1: R,
    am: R,
    grid: &AccrualGrid<R>,
    m: usize,
) -> Result<FactorCurve<R>> {
    if a1 <= R::zero() || am <= R::zero() {
        return Err(Error::domain("knot factors must be positive"));
    }
    let k = grid.period_count();
    if m == 0 || m + 1 >= k {
        return Err(Error::domain(format!(
            "midpoint index {m} must be interior (0 < m < {})",
            k.saturating_sub(1)
        )));
    }
    let t1 = grid.start();
    let t_e = grid.end();
    let t_m = grid.times()[m];
    let lower = (am - a1) / (t_m - t1);
    let upper = (R::one() - am) / (t_e - t_m);
    let values = grid.times()[..k]
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            if i <= m {
                a1 + (t - t1) * lower
            } else {
                am + (t - t_m) * upper
            }
        })
        .collect();
    Ok(FactorCurve {
        grid: grid.clone(),
        values,
        method: FactorMethod::Piecewise,
        diagnostics: None,
    })
}

/// Default knot for the piecewise approximation: the 0-based index of the
/// ceil(K/2)-th period.
pub fn default_midpoint(grid: &AccrualGrid<impl Real>) -> usize {
    grid.period_count().div_ceil(2) - 1
}

/// Writes `k,T_k,A_exact,A_lin,A_pw` rows (1-based `k`) for three curves
/// over the same grid.
pub fn write_csv<R: Real>(
    mut out: impl Write,
    exact: &FactorCurve<R>,
    linear: &FactorCurve<R>,
    piecewise: &FactorCurve<R>,
) -> Result<()> {
    let k = exact.values.len();
    if linear.values.len() != k || piecewise.values.len() != k {
        return Err(Error::domain("factor curves cover different grids"));
    }
    writeln!(out, "k,T_k,A_exact,A_lin,A_pw")?;
    for i in 0..k {
        writeln!(
            out,
            "{},{},{},{},{}",
            i + 1,
            exact.fixing_times()[i],
            exact.values[i],
            linear.values[i],
            piecewise.values[i]
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timegrid::DayCountBasis;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn grid(start: u32, end: u32) -> AccrualGrid<f64> {
        AccrualGrid::daily(start, end, DayCountBasis::ACT_360).unwrap()
    }

    fn flat(r: f64) -> DiscountCurve<f64> {
        DiscountCurve::flat(r).unwrap()
    }

    fn table1_row1() -> G2ppParams<f64> {
        G2ppParams::new(0.07, 0.51, 0.04, 0.86, -0.27).unwrap()
    }

    fn table2_row2() -> G2ppParams<f64> {
        G2ppParams::new(0.07, 0.1, 0.04, 0.5, 0.7).unwrap()
    }

    #[test]
    fn deterministic_model_gives_unit_factors() {
        let p = G2ppParams::new(0.0, 0.5, 0.0, 0.5, 0.0).unwrap();
        let c = flat(0.05);
        let g = grid(30, 120);
        assert_eq!(factor_exact(&p, &c, &g, 0, 32).unwrap(), 1.0);
        let curve = factor_curve_exact(&p, &c, &g, 32).unwrap();
        assert!(curve.values().iter().all(|&a| a == 1.0));
    }

    #[test]
    fn first_factor_short_period() {
        // published value for the quarter starting one month out
        let a1 = factor_exact(&table1_row1(), &flat(0.05), &grid(30, 120), 0, 32).unwrap();
        assert!((a1 - 0.99819).abs() < 5e-4, "A_1 = {a1}");
    }

    #[test]
    fn first_factor_long_period_regression() {
        // cross-validated against an independent adaptive 2D integration
        // and an exact-transition Monte Carlo run
        let a1 = factor_exact(&table2_row2(), &flat(0.05), &grid(360, 540), 0, 32).unwrap();
        assert!((a1 - 0.9208003354).abs() < 1e-7, "A_1 = {a1}");
    }

    #[test]
    fn in_advance_deterministic_equals_curve_forward() {
        let p = G2ppParams::new(0.0, 0.5, 0.0, 0.5, 0.0).unwrap();
        let c = flat(0.05);
        let g = grid(30, 120);
        let f0 = c.on_forward(&g, 0).unwrap();
        assert_eq!(in_advance_forward(&p, &c, &g, 0, 32).unwrap(), f0);
    }

    #[test]
    fn in_advance_convexity_is_non_negative_one_factor() {
        let p = G2ppParams::new(0.05, 0.3, 0.0, 0.5, 0.0).unwrap();
        let c = flat(0.05);
        let g = grid(360, 540);
        for k in [0usize, 60, 179] {
            let adv = in_advance_forward(&p, &c, &g, k, 32).unwrap();
            let f = c.on_forward(&g, k).unwrap();
            assert!(adv >= f, "k={k}: {adv} < {f}");
        }
    }

    #[test]
    fn in_advance_residual_is_one_day_sized() {
        // quantifies the one-day measure mismatch: the residual is of
        // order Var(R_k) * tau_k / F_k, a few basis points of a basis
        // point here, far below the published tables' precision
        let c = flat(0.05);
        let g = grid(360, 540);
        let adv = in_advance_forward(&table2_row2(), &c, &g, 0, 32).unwrap();
        let f = c.on_forward(&g, 0).unwrap();
        let resid = (adv / f - 1.0).abs();
        assert!(resid < 1e-3, "residual {resid}");
        assert!((resid - 4.66e-4).abs() < 2e-5, "residual {resid}");
    }

    #[test]
    fn factor_curve_tail_attracted_to_one() {
        let curve =
            factor_curve_exact(&table2_row2(), &flat(0.05), &grid(360, 540), 32).unwrap();
        let values = curve.values();
        let last = values[values.len() - 1];
        assert!((last - 1.0).abs() < 1e-3, "A_K = {last}");
        // monotone increase toward one over the last half of the grid
        let half = values.len() / 2;
        for w in values[half..].windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn linear_factor_endpoints() {
        let g = grid(30, 120);
        let lin = factor_linear(0.9, &g).unwrap();
        assert_eq!(lin.values()[0], 0.9);
        // the defining line hits 1 at T_e
        let t1 = g.start();
        let te = g.end();
        let at_te = 0.9 + (te - t1) * (1.0 - 0.9) / (te - t1);
        assert!((at_te - 1.0).abs() < 1e-15);
        // midpoint of [T_1, T_e] sits halfway in value
        let mid_t = 0.5 * (t1 + te);
        let v = 0.9 + (mid_t - t1) * (1.0 - 0.9) / (te - t1);
        assert!((v - 0.95).abs() < 1e-15);
        assert!(factor_linear(-0.1, &g).is_err());
    }

    #[test]
    fn piecewise_factor_knot_and_collinear() {
        let g = grid(30, 120);
        let m = default_midpoint(&g);
        assert_eq!(m, 44);
        let pw = factor_piecewise(0.9, 0.96, &g, m).unwrap();
        assert_eq!(pw.values()[m], 0.96);
        assert_eq!(pw.values()[0], 0.9);

        // knot on the straight line reproduces the linear curve
        let lin = factor_linear(0.9, &g).unwrap();
        let am = lin.values()[m];
        let collinear = factor_piecewise(0.9, am, &g, m).unwrap();
        for (a, b) in collinear.values().iter().zip(lin.values()) {
            assert!((a - b).abs() < 1e-14);
        }

        assert!(factor_piecewise(0.9, 0.95, &g, 0).is_err());
        assert!(factor_piecewise(0.9, 0.95, &g, 89).is_err());
    }

    #[test]
    fn route_equivalence_of_factor_forms() {
        // Eq-style normalized product vs the ratio of expectations,
        // both by quadrature, across both table configurations
        let cases = [
            (table1_row1(), grid(30, 120)),
            (table2_row2(), grid(360, 540)),
        ];
        let c = flat(0.05);
        for (p, g) in cases {
            for k in [0usize, g.period_count() / 2, g.period_count() - 1] {
                let (_, d) = factor_exact_with_diagnostics(&p, &c, &g, k, 32).unwrap();
                let rel = (d.normalized_product / d.ratio_form() - 1.0).abs();
                assert!(rel < 1e-8, "k={k}: {rel}");
            }
        }
    }

    #[test]
    fn one_factor_proposition_smoke() {
        // A_k <= 1 for the one-factor model; the full 50-draw sweep runs
        // in the acceptance suite
        let mut rng = StdRng::seed_from_u64(11);
        let c = flat(0.05);
        for _ in 0..8 {
            let sigma = rng.gen_range(0.005..0.09);
            let a = rng.gen_range(0.05..1.0);
            let start = rng.gen_range(5u32..420);
            let len = rng.gen_range(10u32..200);
            let p = G2ppParams::new(sigma, a, 0.0, 0.5, 0.0).unwrap();
            let g = grid(start, start + len);
            let fc = factor_curve_exact(&p, &c, &g, 32).unwrap();
            for (k, &v) in fc.values().iter().enumerate() {
                assert!(v <= 1.0 + 1e-10, "sigma={sigma} a={a} k={k}: {v}");
            }
        }
    }

    #[test]
    fn low_volatility_limit() {
        let c = flat(0.05);
        let g = grid(360, 540);
        let base = table2_row2();
        let mut prev = f64::INFINITY;
        for scale in [1.0, 0.5, 0.25, 0.125] {
            let p = G2ppParams::new(
                base.sigma * scale,
                base.a,
                base.eta * scale,
                base.b,
                base.rho,
            )
            .unwrap();
            let fc = factor_curve_exact(&p, &c, &g, 32).unwrap();
            let worst = fc
                .values()
                .iter()
                .map(|&a| (a - 1.0).abs())
                .fold(0.0, f64::max);
            assert!(worst < prev, "scale {scale}: {worst} !< {prev}");
            prev = worst;
        }
        assert!(prev < 3e-3);
    }

    #[test]
    fn csv_export_layout() {
        let g = grid(30, 33);
        let p = table1_row1();
        let c = flat(0.05);
        let exact = factor_curve_exact(&p, &c, &g, 16).unwrap();
        let a1 = exact.values()[0];
        let m = default_midpoint(&g);
        let lin = factor_linear(a1, &g).unwrap();
        let pw = factor_piecewise(a1, exact.values()[m], &g, m).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &exact, &lin, &pw).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "k,T_k,A_exact,A_lin,A_pw");
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(1).unwrap().starts_with("1,"));
    }
}
