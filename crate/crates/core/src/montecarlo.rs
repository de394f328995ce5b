//! Exact-discretization Monte Carlo oracle under the risk-neutral measure.
//!
//! Each step draws the exact joint Gaussian transition of
//! `(x, y, int x, int y)` over a grid interval from the closed-form 4x4
//! step covariance of the Ornstein-Uhlenbeck solution, so there is no
//! Euler bias: every discrepancy against the quadrature engine is
//! statistical. The money-market discount uses the exact-fit identity
//! `int_0^T phi = -ln P(0,T) + V(0,T)/2`, which makes the simulated
//! `B^{-1}(T)` reprice the input curve in expectation.
//!
//! Paths draw from counter-based ChaCha streams keyed by `(seed, path)`,
//! and block sums are reduced in fixed path order, so results are
//! bit-identical for a given seed regardless of worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::curve::DiscountCurve;
use crate::error::{Error, Result};
use crate::g2pp::{b_factor, G2ppParams};
use crate::real::Real;
use crate::timegrid::AccrualGrid;

/// Paths per reduction block; fixed so the summation order never depends
/// on the thread count.
const BLOCK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub n_paths: usize,
    pub seed: u64,
    pub antithetic: bool,
}

impl McConfig {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        McConfig {
            n_paths,
            seed,
            antithetic: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(Error::domain("n_paths must be at least 2"));
        }
        if self.antithetic && !self.n_paths.is_multiple_of(2) {
            return Err(Error::domain("antithetic sampling needs an even n_paths"));
        }
        Ok(())
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<R> {
    pub value: R,
    pub std_error: R,
    pub n_paths: usize,
}

/// Exact Gaussian step kernel for one interval length.
#[derive(Debug, Clone)]
struct StepKernel<R> {
    decay_x: R,
    decay_y: R,
    ba: R,
    bb: R,
    /// Lower Cholesky factor of the 4x4 covariance of
    /// `(dx, dy, d int x, d int y)`.
    chol: [[R; 4]; 4],
}

impl<R: Real> StepKernel<R> {
    /// The integrated-factor covariance entries cancel down to O(dt^3) of
    /// the raw bracket magnitudes, which single precision cannot resolve
    /// at daily steps, so the once-per-engine constants are assembled in
    /// f64 and rounded once into the working scalar type.
    #[allow(clippy::needless_range_loop)]
    fn build(model: &G2ppParams<R>, dt: R) -> Result<Self> {
        let (s, a, e, b) = (
            model.sigma.as_f64(),
            model.a.as_f64(),
            model.eta.as_f64(),
            model.b.as_f64(),
        );
        let rho = model.rho.as_f64();
        let dt = dt.as_f64();
        let ba = b_factor(a, dt);
        let bb = b_factor(b, dt);
        let b2a = b_factor(2.0 * a, dt);
        let b2b = b_factor(2.0 * b, dt);
        let bab = b_factor(a + b, dt);
        let mut c = [[0.0f64; 4]; 4];
        c[0][0] = s * s * b2a;
        c[1][1] = e * e * b2b;
        c[0][1] = rho * s * e * bab;
        c[0][2] = s * s / a * (ba - b2a);
        c[1][3] = e * e / b * (bb - b2b);
        c[0][3] = rho * s * e / b * (ba - bab);
        c[1][2] = rho * s * e / a * (bb - bab);
        c[2][2] = s * s / (a * a) * (dt - 2.0 * ba + b2a);
        c[3][3] = e * e / (b * b) * (dt - 2.0 * bb + b2b);
        c[2][3] = rho * s * e / (a * b) * (dt - ba - bb + bab);
        for i in 0..4 {
            for j in 0..i {
                c[i][j] = c[j][i];
            }
        }
        let chol64 = cholesky4_psd(&c)?;
        let mut chol = [[R::zero(); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                chol[i][j] = R::cast(chol64[i][j]);
            }
        }
        Ok(StepKernel {
            decay_x: R::cast((-a * dt).exp()),
            decay_y: R::cast((-b * dt).exp()),
            ba: R::cast(ba),
            bb: R::cast(bb),
            chol,
        })
    }
}

/// Lower Cholesky factor of a symmetric PSD 4x4 matrix, tolerating zero
/// pivots (volatilities of zero make whole rows vanish).
#[allow(clippy::needless_range_loop)]
fn cholesky4_psd(c: &[[f64; 4]; 4]) -> Result<[[f64; 4]; 4]> {
    let mut scale = 0.0f64;
    for (i, row) in c.iter().enumerate() {
        scale = scale.max(row[i]);
    }
    let tol = 64.0 * f64::EPSILON * scale;
    let mut l = [[0.0f64; 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let mut s = c[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s < -tol {
                    return Err(Error::NotPsd(format!(
                        "step covariance pivot {s} at row {i}"
                    )));
                }
                l[i][i] = s.max(0.0).sqrt();
            } else if l[j][j] > 0.0 {
                l[i][j] = s / l[j][j];
            } else if s.abs() > tol {
                return Err(Error::NotPsd(
                    "off-diagonal mass on a zero pivot".to_string(),
                ));
            }
        }
    }
    Ok(l)
}

/// Streaming mean and centered second moment (Welford), merged across
/// blocks with Chan's formula. Unlike raw power sums this reports an
/// exactly zero variance when every sample is identical.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Moments<R> {
    mean: R,
    m2: R,
}

impl<R: Real> Moments<R> {
    fn zero() -> Self {
        Moments {
            mean: R::zero(),
            m2: R::zero(),
        }
    }

    /// `n_new` is the sample count including `x`.
    fn push(&mut self, x: R, n_new: R) {
        let d = x - self.mean;
        self.mean += d / n_new;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments<R>, na: R, nb: R) {
        if nb == R::zero() {
            return;
        }
        if na == R::zero() {
            *self = *other;
            return;
        }
        let n = na + nb;
        let d = other.mean - self.mean;
        self.mean += d * nb / n;
        self.m2 += other.m2 + d * d * na * nb / n;
    }

    fn variance(&self, n: usize) -> R {
        if n < 2 {
            R::zero()
        } else {
            (self.m2 / R::cast_usize(n - 1)).max(R::zero())
        }
    }

    fn std_error(&self, n: usize) -> R {
        (self.variance(n) / R::cast_usize(n)).sqrt()
    }
}

/// Joint streaming moments of a pair, including the co-moment.
#[derive(Debug, Clone, Copy, PartialEq)]
struct BiMoments<R> {
    u: Moments<R>,
    w: Moments<R>,
    c: R,
}

impl<R: Real> BiMoments<R> {
    fn zero() -> Self {
        BiMoments {
            u: Moments::zero(),
            w: Moments::zero(),
            c: R::zero(),
        }
    }

    fn push(&mut self, uv: R, wv: R, n_new: R) {
        let du = uv - self.u.mean;
        self.u.push(uv, n_new);
        self.w.push(wv, n_new);
        self.c += du * (wv - self.w.mean);
    }

    fn merge(&mut self, other: &BiMoments<R>, na: R, nb: R) {
        if nb == R::zero() {
            return;
        }
        if na == R::zero() {
            *self = *other;
            return;
        }
        let n = na + nb;
        let du = other.u.mean - self.u.mean;
        let dw = other.w.mean - self.w.mean;
        self.c += other.c + du * dw * na * nb / n;
        self.u.merge(&other.u, na, nb);
        self.w.merge(&other.w, na, nb);
    }

    fn covariance(&self, n: usize) -> R {
        if n < 2 {
            R::zero()
        } else {
            self.c / R::cast_usize(n - 1)
        }
    }
}

/// Pure sufficient statistics of a simulated panel: everything the
/// estimators and the consistency checks need, accumulated in fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct McPanel<R> {
    n_samples: usize,
    n_paths: usize,
    antithetic: bool,
    tau: R,
    p_at: Vec<R>,
    sums: Sums<R>,
}

#[derive(Debug, Clone, PartialEq)]
struct Sums<R> {
    count: usize,
    pay: Moments<R>,
    int_rate: Moments<R>,
    /// per period: `u = R_k B^{-1}(T_e)` against `w = R_k B^{-1}(T_k)`
    uw: Vec<BiMoments<R>>,
    /// per grid time
    binv: Vec<Moments<R>>,
    /// per grid time: factor state `(x, y)`
    state: Vec<BiMoments<R>>,
}

impl<R: Real> Sums<R> {
    fn zero(k: usize) -> Self {
        Sums {
            count: 0,
            pay: Moments::zero(),
            int_rate: Moments::zero(),
            uw: vec![BiMoments::zero(); k],
            binv: vec![Moments::zero(); k + 1],
            state: vec![BiMoments::zero(); k + 1],
        }
    }

    fn absorb(&mut self, other: &Sums<R>) {
        let na = R::cast_usize(self.count);
        let nb = R::cast_usize(other.count);
        self.pay.merge(&other.pay, na, nb);
        self.int_rate.merge(&other.int_rate, na, nb);
        for (d, s) in self.uw.iter_mut().zip(&other.uw) {
            d.merge(s, na, nb);
        }
        for (d, s) in self.binv.iter_mut().zip(&other.binv) {
            d.merge(s, na, nb);
        }
        for (d, s) in self.state.iter_mut().zip(&other.state) {
            d.merge(s, na, nb);
        }
        self.count += other.count;
    }
}

/// One simulated path evaluated on the grid.
struct PathOut<R> {
    /// `R_k`, `k = 1..=K`.
    rates: Vec<R>,
    /// `B^{-1}(T_j)`, `j = 1..=K+1`.
    binv: Vec<R>,
    /// factor states at the grid times
    xs: Vec<R>,
    ys: Vec<R>,
    /// `int_{T_s}^{T_e} r`
    int_rate: R,
}

impl<R: Real> PathOut<R> {
    fn zero(k: usize) -> Self {
        PathOut {
            rates: vec![R::zero(); k],
            binv: vec![R::zero(); k + 1],
            xs: vec![R::zero(); k + 1],
            ys: vec![R::zero(); k + 1],
            int_rate: R::zero(),
        }
    }
}

/// Everything constant across paths.
struct Engine<R> {
    k: usize,
    init: Option<StepKernel<R>>,
    daily: StepKernel<R>,
    /// `P(T_k)/P(T_{k+1})` per period.
    ratio: Vec<R>,
    /// deterministic part of the one-day reconstitution exponent
    vconst: Vec<R>,
    /// `1/tau_k`
    tau_inv: Vec<R>,
    /// one-day `B_a`, `B_b`
    ba_d: R,
    bb_d: R,
    /// `P(T_j) e^{-V(0,T_j)/2}` per grid time
    binv_det: Vec<R>,
    /// `int_{T_s}^{T_e} phi`
    int_phi: R,
    seed: u64,
}

impl<R: Real> Engine<R> {
    fn build(
        model: &G2ppParams<R>,
        curve: &DiscountCurve<R>,
        grid: &AccrualGrid<R>,
        seed: u64,
    ) -> Result<Self> {
        let k = grid.period_count();
        let times = grid.times();
        let one_day = grid.basis().year_fraction::<R>(1);
        let mut p_at = Vec::with_capacity(k + 1);
        for &t in times {
            p_at.push(curve.discount(t)?);
        }
        let half = R::cast(0.5);
        let binv_det: Vec<R> = times
            .iter()
            .zip(&p_at)
            .map(|(&t, &p)| p * (-half * model.v_tenor(t)).exp())
            .collect();
        let ratio: Vec<R> = (0..k).map(|j| p_at[j] / p_at[j + 1]).collect();
        let vconst: Vec<R> = (0..k)
            .map(|j| {
                half * (model.v_tenor(times[j + 1] - times[j]) - model.v_tenor(times[j + 1])
                    + model.v_tenor(times[j]))
            })
            .collect();
        let tau_inv: Vec<R> = grid.fractions().iter().map(|&t| R::one() / t).collect();
        let init = if times[0] > R::zero() {
            Some(StepKernel::build(model, times[0])?)
        } else {
            None
        };
        let int_phi = (p_at[0] / p_at[k]).ln()
            + half * (model.v_tenor(grid.end()) - model.v_tenor(grid.start()));
        Ok(Engine {
            k,
            init,
            daily: StepKernel::build(model, one_day)?,
            ratio,
            vconst,
            tau_inv,
            ba_d: b_factor(model.a, one_day),
            bb_d: b_factor(model.b, one_day),
            binv_det,
            int_phi,
            seed,
        })
    }

    fn simulate_path(&self, path_index: u64, negate: bool, out: &mut PathOut<R>)
    where
        StandardNormal: Distribution<R>,
    {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(path_index);
        let sign = if negate { -R::one() } else { R::one() };
        let mut draw = move || -> R {
            let z: R = StandardNormal.sample(&mut rng);
            sign * z
        };
        let mut x = R::zero();
        let mut y = R::zero();
        let mut int_xy = R::zero();
        let mut step = |kern: &StepKernel<R>, x: &mut R, y: &mut R, int_xy: &mut R| {
            let z = [draw(), draw(), draw(), draw()];
            let l = &kern.chol;
            let g0 = l[0][0] * z[0];
            let g1 = l[1][0] * z[0] + l[1][1] * z[1];
            let g2 = l[2][0] * z[0] + l[2][1] * z[1] + l[2][2] * z[2];
            let g3 = l[3][0] * z[0] + l[3][1] * z[1] + l[3][2] * z[2] + l[3][3] * z[3];
            *int_xy += *x * kern.ba + *y * kern.bb + g2 + g3;
            *x = *x * kern.decay_x + g0;
            *y = *y * kern.decay_y + g1;
        };
        if let Some(kern) = &self.init {
            step(kern, &mut x, &mut y, &mut int_xy);
        }
        let mut int_at_start = R::zero();
        for j in 0..=self.k {
            out.xs[j] = x;
            out.ys[j] = y;
            out.binv[j] = self.binv_det[j] * (-int_xy).exp();
            if j == 0 {
                int_at_start = int_xy;
            }
            if j < self.k {
                out.rates[j] = (self.ratio[j]
                    * (-self.vconst[j] + self.ba_d * x + self.bb_d * y).exp()
                    - R::one())
                    * self.tau_inv[j];
                step(&self.daily, &mut x, &mut y, &mut int_xy);
            }
        }
        out.int_rate = self.int_phi + (int_xy - int_at_start);
    }
}

/// Accumulates one sample (a path, or an average of an antithetic pair).
fn accumulate<R: Real>(sums: &mut Sums<R>, grid: &AccrualGrid<R>, path: &PathOut<R>) {
    sums.count += 1;
    let n_new = R::cast_usize(sums.count);
    let k = path.rates.len();
    let binv_end = path.binv[k];
    let mut acc = R::zero();
    for j in 0..k {
        acc += grid.fractions()[j] * path.rates[j];
        let u = path.rates[j] * binv_end;
        let w = path.rates[j] * path.binv[j];
        sums.uw[j].push(u, w, n_new);
    }
    sums.pay.push(binv_end * acc, n_new);
    sums.int_rate.push(binv_end * path.int_rate, n_new);
    for j in 0..=k {
        sums.binv[j].push(path.binv[j], n_new);
        sums.state[j].push(path.xs[j], path.ys[j], n_new);
    }
}

fn average_pair<R: Real>(a: &PathOut<R>, b: &PathOut<R>, out: &mut PathOut<R>) {
    let half = R::cast(0.5);
    let k = a.rates.len();
    for j in 0..k {
        out.rates[j] = half * (a.rates[j] + b.rates[j]);
    }
    for j in 0..=k {
        out.binv[j] = half * (a.binv[j] + b.binv[j]);
        out.xs[j] = half * (a.xs[j] + b.xs[j]);
        out.ys[j] = half * (a.ys[j] + b.ys[j]);
    }
    out.int_rate = half * (a.int_rate + b.int_rate);
}

/// Simulates the panel and reduces it to sufficient statistics.
pub fn simulate_paths<R: Real>(
    model: &G2ppParams<R>,
    curve: &DiscountCurve<R>,
    grid: &AccrualGrid<R>,
    cfg: &McConfig,
) -> Result<McPanel<R>>
where
    StandardNormal: Distribution<R>,
{
    model.validate()?;
    cfg.validate()?;
    let engine = Engine::build(model, curve, grid, cfg.seed)?;
    let k = engine.k;
    let n_samples = if cfg.antithetic {
        cfg.n_paths / 2
    } else {
        cfg.n_paths
    };
    let n_blocks = n_samples.div_ceil(BLOCK);

    let blocks: Vec<Sums<R>> = (0..n_blocks)
        .into_par_iter()
        .map(|blk| {
            let lo = blk * BLOCK;
            let hi = ((blk + 1) * BLOCK).min(n_samples);
            let mut sums = Sums::zero(k);
            let mut path = PathOut::zero(k);
            let mut anti = PathOut::zero(k);
            let mut paired = PathOut::zero(k);
            for i in lo..hi {
                if cfg.antithetic {
                    engine.simulate_path(i as u64, false, &mut path);
                    engine.simulate_path(i as u64, true, &mut anti);
                    average_pair(&path, &anti, &mut paired);
                    accumulate(&mut sums, grid, &paired);
                } else {
                    engine.simulate_path(i as u64, false, &mut path);
                    accumulate(&mut sums, grid, &path);
                }
            }
            sums
        })
        .collect();

    let mut total = Sums::zero(k);
    for blk in &blocks {
        total.absorb(blk);
    }
    let mut p_at = Vec::with_capacity(k + 1);
    for &t in grid.times() {
        p_at.push(curve.discount(t)?);
    }
    Ok(McPanel {
        n_samples,
        n_paths: cfg.n_paths,
        antithetic: cfg.antithetic,
        tau: grid.total(),
        p_at,
        sums: total,
    })
}

impl<R: Real> McPanel<R> {
    /// Effective sample count (antithetic pairs count once).
    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn period_count(&self) -> usize {
        self.sums.uw.len()
    }

    /// Curve discount factor at grid time `j`, `j = 0..=K`.
    pub fn curve_discount(&self, j: usize) -> R {
        self.p_at[j]
    }

    /// Sample mean and standard error of `B^{-1}(T_j)`; its expectation is
    /// `P(T_j)` when the engine is unbiased.
    pub fn bond_reprice(&self, j: usize) -> McEstimate<R> {
        let m = &self.sums.binv[j];
        McEstimate {
            value: m.mean,
            std_error: m.std_error(self.n_samples),
            n_paths: self.n_paths,
        }
    }

    /// Sample moments of the factor state at grid time `j`:
    /// `(mean_x, mean_y, var_x, var_y, cov_xy)`.
    pub fn state_moments(&self, j: usize) -> (R, R, R, R, R) {
        let s = &self.sums.state[j];
        (
            s.u.mean,
            s.w.mean,
            s.u.variance(self.n_samples),
            s.w.variance(self.n_samples),
            s.covariance(self.n_samples),
        )
    }
}

/// Arithmetic forward `F_a = E[B^{-1}(T_e) sum(tau_k R_k)] / (tau P(T_e))`.
pub fn mc_arithmetic_forward<R: Real>(panel: &McPanel<R>) -> McEstimate<R> {
    let scale = panel.tau * panel.p_at[panel.period_count()];
    McEstimate {
        value: panel.sums.pay.mean / scale,
        std_error: panel.sums.pay.std_error(panel.n_samples) / scale,
        n_paths: panel.n_paths,
    }
}

/// Arithmetic factor for period `k` as the change-of-numeraire ratio
/// `E[R_k B^{-1}(T_e)] P(T_k) / (E[R_k B^{-1}(T_k)] P(T_e))`, with a
/// delta-method standard error for the ratio of correlated means.
pub fn mc_factor<R: Real>(panel: &McPanel<R>, k: usize) -> Result<McEstimate<R>> {
    if k >= panel.period_count() {
        return Err(Error::domain(format!(
            "period index {k} out of range (K = {})",
            panel.period_count()
        )));
    }
    let n = panel.n_samples;
    let pair = &panel.sums.uw[k];
    let u_mean = pair.u.mean;
    let w_mean = pair.w.mean;
    if w_mean == R::zero() {
        return Err(Error::domain(
            "factor ratio undefined: in-advance leg has zero mean",
        ));
    }
    let scale = panel.p_at[k] / panel.p_at[panel.period_count()];
    let ratio = u_mean / w_mean;
    let value = scale * ratio;
    let std_error = if n < 2 {
        R::zero()
    } else {
        let s_uu = pair.u.variance(n);
        let s_ww = pair.w.variance(n);
        let s_uw = pair.covariance(n);
        let var = (s_uu - R::cast(2.0) * ratio * s_uw + ratio * ratio * s_ww).max(R::zero());
        scale / w_mean.abs() * (var / R::cast_usize(n)).sqrt()
    };
    Ok(McEstimate {
        value,
        std_error,
        n_paths: panel.n_paths,
    })
}

/// Discounted average of `int_{T_s}^{T_e} r` divided by `tau`: the Monte
/// Carlo estimate of the expectation-of-integrated-rate forward.
pub fn mc_integrated_rate<R: Real>(panel: &McPanel<R>) -> McEstimate<R> {
    let scale = panel.tau * panel.p_at[panel.period_count()];
    McEstimate {
        value: panel.sums.int_rate.mean / scale,
        std_error: panel.sums.int_rate.std_error(panel.n_samples) / scale,
        n_paths: panel.n_paths,
    }
}
