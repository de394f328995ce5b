//! Initial discount factors `P(0,T)`, simply-compounded overnight forwards
//! and the geometric forward of a period.
//!
//! Two curve variants are supported: a flat continuously-compounded rate,
//! and a pillar curve interpolated log-linearly in the discount factor
//! (piecewise-constant instantaneous forwards), with flat-forward
//! extrapolation beyond the last pillar.

use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::timegrid::AccrualGrid;

#[derive(Debug, Clone, PartialEq)]
pub enum DiscountCurve<R> {
    /// `P(0,T) = exp(-r T)`.
    Flat { rate: R },
    /// Log-linear interpolation between `(tenor, df)` pillars.
    Pillars(PillarCurve<R>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PillarCurve<R> {
    tenors: Vec<R>,
    dfs: Vec<R>,
    log_dfs: Vec<R>,
}

impl<R: Real> DiscountCurve<R> {
    pub fn flat(rate: R) -> Result<Self> {
        if !rate.is_finite() {
            return Err(Error::domain("flat rate must be finite"));
        }
        Ok(DiscountCurve::Flat { rate })
    }

    /// Builds a pillar curve. The first pillar must be `(0, 1)` and the
    /// discount factors must be positive and non-increasing in tenor.
    pub fn from_pillars(pillars: &[(R, R)]) -> Result<Self> {
        if pillars.len() < 2 {
            return Err(Error::domain("pillar curve needs at least two pillars"));
        }
        if pillars[0].0 != R::zero() || pillars[0].1 != R::one() {
            return Err(Error::domain("first pillar must be (0, 1)"));
        }
        for w in pillars.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::domain("pillar tenors must be strictly increasing"));
            }
            if w[1].1 <= R::zero() || w[1].1 > w[0].1 {
                return Err(Error::domain(
                    "discount factors must be positive and non-increasing",
                ));
            }
        }
        let tenors: Vec<R> = pillars.iter().map(|p| p.0).collect();
        let dfs: Vec<R> = pillars.iter().map(|p| p.1).collect();
        let log_dfs: Vec<R> = dfs.iter().map(|d| d.ln()).collect();
        Ok(DiscountCurve::Pillars(PillarCurve {
            tenors,
            dfs,
            log_dfs,
        }))
    }

    /// Reads a pillar curve from CSV with header `tenor_years,df`.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            tenor_years: f64,
            df: f64,
        }
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Parse(format!("curve csv: {e}")))?;
        if headers.len() != 2 || &headers[0] != "tenor_years" || &headers[1] != "df" {
            return Err(Error::Parse(format!(
                "curve csv: expected header `tenor_years,df`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut pillars = Vec::new();
        for rec in rdr.deserialize() {
            let row: Row = rec.map_err(|e| Error::Parse(format!("curve csv: {e}")))?;
            pillars.push((R::cast(row.tenor_years), R::cast(row.df)));
        }
        Self::from_pillars(&pillars)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }

    /// `P(0,T)`.
    pub fn discount(&self, t: R) -> Result<R> {
        if t < R::zero() {
            return Err(Error::domain("discount tenor must be non-negative"));
        }
        Ok(match self {
            DiscountCurve::Flat { rate } => (-*rate * t).exp(),
            DiscountCurve::Pillars(p) => p.discount(t),
        })
    }

    /// Instantaneous forward `f(0,t)`: the flat rate, or the
    /// piecewise-constant forward implied by log-linear interpolation.
    pub fn instantaneous_forward(&self, t: R) -> Result<R> {
        if t < R::zero() {
            return Err(Error::domain("forward tenor must be non-negative"));
        }
        Ok(match self {
            DiscountCurve::Flat { rate } => *rate,
            DiscountCurve::Pillars(p) => p.instantaneous_forward(t),
        })
    }

    /// Simply-compounded overnight forward for period `k` (0-based):
    /// `F_k = (P(T_k)/P(T_{k+1}) - 1) / tau_k`.
    pub fn on_forward(&self, grid: &AccrualGrid<R>, k: usize) -> Result<R> {
        grid.check_period(k)?;
        let p_k = self.discount(grid.times()[k])?;
        let p_k1 = self.discount(grid.times()[k + 1])?;
        Ok((p_k / p_k1 - R::one()) / grid.fractions()[k])
    }

    /// Geometric (compounded) forward of the whole period:
    /// `F_g = (P(T_s)/P(T_e) - 1) / tau(T_s,T_e)`.
    pub fn geometric_forward(&self, grid: &AccrualGrid<R>) -> Result<R> {
        let p_s = self.discount(grid.start())?;
        let p_e = self.discount(grid.end())?;
        Ok((p_s / p_e - R::one()) / grid.total())
    }
}

impl<R: Real> PillarCurve<R> {
    fn discount(&self, t: R) -> R {
        // exact hit returns the stored pillar value
        match self
            .tenors
            .binary_search_by(|x| x.partial_cmp(&t).expect("finite tenors"))
        {
            Ok(i) => self.dfs[i],
            Err(i) => {
                let n = self.tenors.len();
                if i >= n {
                    // flat-forward extrapolation from the last segment
                    let f = self.segment_forward(n - 2);
                    self.dfs[n - 1] * (-f * (t - self.tenors[n - 1])).exp()
                } else {
                    let (t0, t1) = (self.tenors[i - 1], self.tenors[i]);
                    let w = (t - t0) / (t1 - t0);
                    ((R::one() - w) * self.log_dfs[i - 1] + w * self.log_dfs[i]).exp()
                }
            }
        }
    }

    /// Constant forward on segment `[tenors[i], tenors[i+1])`.
    fn segment_forward(&self, i: usize) -> R {
        -(self.log_dfs[i + 1] - self.log_dfs[i]) / (self.tenors[i + 1] - self.tenors[i])
    }

    fn instantaneous_forward(&self, t: R) -> R {
        let n = self.tenors.len();
        // right-continuous: a pillar hit uses the segment to its right
        let seg = match self
            .tenors
            .binary_search_by(|x| x.partial_cmp(&t).expect("finite tenors"))
        {
            Ok(i) => i.min(n - 2),
            Err(i) if i >= n => n - 2,
            Err(i) => i - 1,
        };
        self.segment_forward(seg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timegrid::DayCountBasis;
    use proptest::prelude::*;

    fn grid(start: u32, end: u32) -> AccrualGrid<f64> {
        AccrualGrid::daily(start, end, DayCountBasis::ACT_360).unwrap()
    }

    #[test]
    fn flat_discount() {
        let c: DiscountCurve<f64> = DiscountCurve::flat(0.05).unwrap();
        assert_eq!(c.discount(0.0).unwrap(), 1.0);
        // exp(-0.0125), frozen from a high-precision evaluation
        assert!((c.discount(0.25).unwrap() - 0.9875778004938814).abs() < 1e-15);
        assert!(c.discount(-0.1).is_err());
    }

    #[test]
    fn pillar_discount_log_linear() {
        let c: DiscountCurve<f64> = DiscountCurve::from_pillars(&[(0.0, 1.0), (1.0, 0.95)]).unwrap();
        // exp(0.5 ln 0.95), frozen from a high-precision evaluation
        assert!((c.discount(0.5).unwrap() - 0.9746794344808964).abs() < 1e-15);
        // pillar values reproduced exactly
        assert_eq!(c.discount(0.0).unwrap(), 1.0);
        assert_eq!(c.discount(1.0).unwrap(), 0.95);
        // flat-forward extrapolation stays positive and decreasing
        let d2 = c.discount(2.0).unwrap();
        assert!(d2 > 0.0 && d2 < 0.95);
        assert!((d2 - 0.95f64 * 0.95).abs() < 1e-15);
    }

    #[test]
    fn pillar_validation() {
        assert!(DiscountCurve::<f64>::from_pillars(&[(0.0, 1.0)]).is_err());
        assert!(DiscountCurve::from_pillars(&[(0.1, 1.0), (1.0, 0.9)]).is_err());
        assert!(DiscountCurve::from_pillars(&[(0.0, 1.0), (1.0, 1.1)]).is_err());
        assert!(DiscountCurve::from_pillars(&[(0.0, 1.0), (1.0, -0.5)]).is_err());
        assert!(DiscountCurve::from_pillars(&[(0.0, 1.0), (1.0, 0.9), (0.5, 0.95)]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let data = "tenor_years,df\n0,1\n0.5,0.976\n1,0.95\n";
        let c = DiscountCurve::<f64>::from_csv_reader(data.as_bytes()).unwrap();
        assert_eq!(c.discount(0.5).unwrap(), 0.976);
        let bad = "maturity,df\n0,1\n";
        assert!(DiscountCurve::<f64>::from_csv_reader(bad.as_bytes()).is_err());
    }

    #[test]
    fn on_forward_flat() {
        let c = DiscountCurve::flat(0.05).unwrap();
        let g = grid(30, 120);
        // 360*(e^{0.05/360} - 1), frozen from a high-precision evaluation;
        // the 1/tau_k scaling amplifies unit rounding by ~360
        let f = c.on_forward(&g, 0).unwrap();
        assert!((f / 0.05000347238297883 - 1.0).abs() < 1e-12);
        assert!(c.on_forward(&g, 90).is_err());

        let zero = DiscountCurve::flat(0.0).unwrap();
        for k in 0..g.period_count() {
            assert_eq!(zero.on_forward(&g, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn geometric_forward_flat() {
        let c = DiscountCurve::flat(0.05).unwrap();
        let g = grid(30, 120);
        // (e^{0.0125} - 1)/0.25, frozen from a high-precision evaluation
        assert!((c.geometric_forward(&g).unwrap() - 0.05031380616253751).abs() < 1e-14);
        let zero = DiscountCurve::flat(0.0).unwrap();
        assert_eq!(zero.geometric_forward(&g).unwrap(), 0.0);
    }

    #[test]
    fn geometric_equals_on_forward_for_single_day() {
        let c = DiscountCurve::flat(0.043).unwrap();
        let g = grid(17, 18);
        assert_eq!(
            c.geometric_forward(&g).unwrap(),
            c.on_forward(&g, 0).unwrap()
        );
    }

    #[test]
    fn telescoping_product() {
        let g = grid(30, 120);
        for c in [
            DiscountCurve::flat(0.05).unwrap(),
            DiscountCurve::from_pillars(&[(0.0, 1.0), (0.2, 0.99), (1.0, 0.95), (2.0, 0.91)])
                .unwrap(),
        ] {
            let mut prod = 1.0;
            for k in 0..g.period_count() {
                prod *= 1.0 + g.fractions()[k] * c.on_forward(&g, k).unwrap();
            }
            let target = c.discount(g.start()).unwrap() / c.discount(g.end()).unwrap();
            assert!(
                (prod / target - 1.0).abs() < 1e-12,
                "telescoping failed: {prod} vs {target}"
            );
        }
    }

    #[test]
    fn instantaneous_forward_piecewise() {
        let c = DiscountCurve::from_pillars(&[(0.0, 1.0), (1.0, 0.95), (2.0, 0.91)]).unwrap();
        let f0 = -(0.95f64.ln()) / 1.0;
        let f1 = -(0.91f64.ln() - 0.95f64.ln()) / 1.0;
        assert!((c.instantaneous_forward(0.3).unwrap() - f0).abs() < 1e-15);
        assert!((c.instantaneous_forward(1.0).unwrap() - f1).abs() < 1e-15);
        assert!((c.instantaneous_forward(1.7).unwrap() - f1).abs() < 1e-15);
        assert!((c.instantaneous_forward(5.0).unwrap() - f1).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn discount_monotone(
            steps in proptest::collection::vec((0.01f64..2.0, 0.0f64..0.1), 1..6),
            t1 in 0.0f64..10.0,
            t2 in 0.0f64..10.0,
        ) {
            let mut pillars = vec![(0.0, 1.0)];
            let (mut t, mut d) = (0.0, 1.0);
            for (dt, r) in steps {
                t += dt;
                d *= (-r * dt).exp();
                pillars.push((t, d));
            }
            let c = DiscountCurve::from_pillars(&pillars).unwrap();
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(c.discount(hi).unwrap() <= c.discount(lo).unwrap() + 1e-15);
        }

        #[test]
        fn telescoping_random_flat(r in -0.02f64..0.12, start in 0u32..720, len in 1u32..240) {
            let c = DiscountCurve::flat(r).unwrap();
            let g = grid(start, start + len);
            let mut prod = 1.0;
            for k in 0..g.period_count() {
                prod *= 1.0 + g.fractions()[k] * c.on_forward(&g, k).unwrap();
            }
            let target = c.discount(g.start()).unwrap() / c.discount(g.end()).unwrap();
            prop_assert!((prod / target - 1.0).abs() < 1e-12);
        }
    }
}
