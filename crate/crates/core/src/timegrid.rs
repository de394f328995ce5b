//! Daily accrual decomposition of an interest period.
//!
//! Dates are integer day offsets from the valuation date; a period
//! `[start_day, end_day)` decomposes into one accrual period per calendar
//! day, each with day-count fraction `1/denominator`. No holiday calendar
//! or business-day adjustment is applied.

use crate::error::{Error, Result};
use crate::real::Real;

/// Day-count convention expressed as days per year (e.g. 360 for ACT/360).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DayCountBasis {
    denominator: u32,
}

impl DayCountBasis {
    /// ACT/360, the convention used for overnight-rate accrual throughout.
    pub const ACT_360: DayCountBasis = DayCountBasis { denominator: 360 };

    pub fn new(denominator: u32) -> Result<Self> {
        if denominator == 0 {
            return Err(Error::domain("day-count denominator must be positive"));
        }
        Ok(DayCountBasis { denominator })
    }

    pub fn denominator(&self) -> u32 {
        self.denominator
    }

    /// Year fraction of `days` calendar days: the exact quotient
    /// `days / denominator` rounded once to the scalar type.
    pub fn year_fraction<R: Real>(&self, days: u32) -> R {
        R::cast_usize(days as usize) / R::cast_usize(self.denominator as usize)
    }
}

/// The daily grid `T_1 < T_2 < ... < T_{K+1}` spanning one interest period,
/// with `T_1 = start` and `T_{K+1} = end` as year fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct AccrualGrid<R> {
    start_day: u32,
    end_day: u32,
    basis: DayCountBasis,
    times: Vec<R>,
    fractions: Vec<R>,
    total: R,
}

impl<R: Real> AccrualGrid<R> {
    /// Builds the one-period-per-day grid over `[start_day, end_day)`.
    pub fn daily(start_day: u32, end_day: u32, basis: DayCountBasis) -> Result<Self> {
        if end_day <= start_day {
            return Err(Error::domain(format!(
                "end_day ({end_day}) must be strictly greater than start_day ({start_day})"
            )));
        }
        let k = (end_day - start_day) as usize;
        let times: Vec<R> = (0..=k)
            .map(|i| basis.year_fraction(start_day + i as u32))
            .collect();
        let one_day: R = basis.year_fraction(1);
        let fractions = vec![one_day; k];
        // The stored total is the sum of the fractions, not an independent
        // computation, so sum(fractions) == total holds bit-exactly.
        let total = fractions.iter().copied().sum();
        Ok(AccrualGrid {
            start_day,
            end_day,
            basis,
            times,
            fractions,
            total,
        })
    }

    /// Number of accrual periods `K`.
    pub fn period_count(&self) -> usize {
        self.fractions.len()
    }

    /// Fixing times `T_1 ..= T_{K+1}` (length `K + 1`).
    pub fn times(&self) -> &[R] {
        &self.times
    }

    /// Day-count fractions `tau_1 ..= tau_K`.
    pub fn fractions(&self) -> &[R] {
        &self.fractions
    }

    /// Day-count fraction of the whole period, `tau(T_s, T_e)`.
    pub fn total(&self) -> R {
        self.total
    }

    /// `T_s`, the period start as a year fraction.
    pub fn start(&self) -> R {
        self.times[0]
    }

    /// `T_e`, the period end as a year fraction.
    pub fn end(&self) -> R {
        *self.times.last().expect("grid has at least two times")
    }

    pub fn start_day(&self) -> u32 {
        self.start_day
    }

    pub fn end_day(&self) -> u32 {
        self.end_day
    }

    pub fn basis(&self) -> DayCountBasis {
        self.basis
    }

    /// Checks a 0-based period index against `K`.
    pub fn check_period(&self, k: usize) -> Result<()> {
        if k >= self.period_count() {
            return Err(Error::domain(format!(
                "period index {k} out of range (K = {})",
                self.period_count()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn year_fractions() {
        let b = DayCountBasis::ACT_360;
        assert_eq!(b.year_fraction::<f64>(90), 0.25);
        assert_eq!(b.year_fraction::<f64>(0), 0.0);
        assert_eq!(b.year_fraction::<f64>(360), 1.0);
    }

    #[test]
    fn rejects_zero_denominator() {
        assert!(DayCountBasis::new(0).is_err());
    }

    #[test]
    fn quarter_grid() {
        let g: AccrualGrid<f64> = AccrualGrid::daily(30, 120, DayCountBasis::ACT_360).unwrap();
        assert_eq!(g.period_count(), 90);
        assert!(g.fractions().iter().all(|&t| t == 1.0 / 360.0));
        assert!((g.total() - 0.25).abs() < 1e-15);
        assert_eq!(g.start(), 30.0 / 360.0);
        assert_eq!(g.end(), 120.0 / 360.0);
    }

    #[test]
    fn half_year_grid() {
        let g: AccrualGrid<f64> = AccrualGrid::daily(360, 540, DayCountBasis::ACT_360).unwrap();
        assert_eq!(g.period_count(), 180);
        assert!((g.total() - 0.5).abs() < 1e-13);
    }

    #[test]
    fn single_day_grid() {
        let g: AccrualGrid<f64> = AccrualGrid::daily(0, 1, DayCountBasis::ACT_360).unwrap();
        assert_eq!(g.period_count(), 1);
        assert_eq!(g.total(), 1.0 / 360.0);
    }

    #[test]
    fn rejects_empty_period() {
        assert!(AccrualGrid::<f64>::daily(120, 120, DayCountBasis::ACT_360).is_err());
        assert!(AccrualGrid::<f64>::daily(120, 30, DayCountBasis::ACT_360).is_err());
    }

    proptest! {
        #[test]
        fn disjoint_cover(start in 0u32..2000, len in 1u32..500, denom in 1u32..1000) {
            let basis = DayCountBasis::new(denom).unwrap();
            let g: AccrualGrid<f64> = AccrualGrid::daily(start, start + len, basis).unwrap();
            prop_assert_eq!(g.period_count() as u32, len);
            // strictly increasing, with steps equal to the stored fraction
            // within one ulp of the times
            for k in 0..g.period_count() {
                let step = g.times()[k + 1] - g.times()[k];
                let tau = g.fractions()[k];
                prop_assert!(g.times()[k + 1] > g.times()[k]);
                prop_assert!((step - tau).abs() <= 2.0 * f64::EPSILON * g.times()[k + 1]);
            }
            let sum: f64 = g.fractions().iter().sum();
            prop_assert_eq!(sum, g.total());
        }

        #[test]
        fn deterministic(start in 0u32..1000, len in 1u32..200) {
            let basis = DayCountBasis::ACT_360;
            let a: AccrualGrid<f64> = AccrualGrid::daily(start, start + len, basis).unwrap();
            let b: AccrualGrid<f64> = AccrualGrid::daily(start, start + len, basis).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
