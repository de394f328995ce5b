//! Gauss quadrature rules and tensor-product expectations of smooth
//! functions of a 2D Gaussian law.
//!
//! The Hermite rule is the probabilists' variant, normalized against the
//! standard normal weight so its weights sum to one. Nodes are found by
//! Newton iteration on the orthonormal three-term recurrence, which keeps
//! intermediate values bounded at every supported order.

use crate::error::{Error, Result};
use crate::g2pp::GaussianLaw2D;
use crate::real::Real;

pub const MAX_HERMITE_ORDER: usize = 128;
pub const MAX_LEGENDRE_ORDER: usize = 512;

/// Nodes and weights of a one-dimensional quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<R> {
    nodes: Vec<R>,
    weights: Vec<R>,
}

impl<R: Real> QuadratureRule<R> {
    /// Probabilists' Gauss-Hermite rule: exact for polynomials up to degree
    /// `2*order - 1` against the standard normal density, weights summing
    /// to one, nodes symmetric about zero.
    pub fn hermite(order: usize) -> Result<Self> {
        if order == 0 || order > MAX_HERMITE_ORDER {
            return Err(Error::domain(format!(
                "hermite order must lie in 1..={MAX_HERMITE_ORDER}, got {order}"
            )));
        }
        let n = order;
        let mut nodes = vec![R::zero(); n];
        let mut weights = vec![R::zero(); n];
        // physicists'-scale initial guesses, scaled by sqrt(2) to the
        // probabilists' axis, then polished with Newton
        let sqrt2 = R::cast(2.0).sqrt();
        let nf = R::cast_usize(n);
        let tol = R::epsilon() * R::cast(64.0);
        let mut z = R::zero();
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => {
                    let m = R::cast(2.0) * nf + R::one();
                    sqrt2 * (m.sqrt() - R::cast(1.85575) * m.powf(-R::one() / R::cast(6.0)))
                }
                1 => z - sqrt2 * R::cast(1.14) * nf.powf(R::cast(0.426)) / (z / sqrt2),
                2 => R::cast(1.86) * z - R::cast(0.86) * nodes[n - 1],
                3 => R::cast(1.91) * z - R::cast(0.91) * nodes[n - 2],
                _ => R::cast(2.0) * z - nodes[n - i + 1],
            };
            for _ in 0..200 {
                let (p, dp) = hermite_orthonormal(n, z);
                let dz = p / dp;
                z -= dz;
                if dz.abs() <= tol * z.abs().max(R::one()) {
                    break;
                }
            }
            // Christoffel number: 1 / sum_{k<n} p_k(z)^2
            let w = R::one() / hermite_christoffel_denominator(n, z);
            nodes[n - 1 - i] = z;
            nodes[i] = -z;
            weights[n - 1 - i] = w;
            weights[i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = R::zero();
            weights[n / 2] = R::one() / hermite_christoffel_denominator(n, R::zero());
        }
        for w in nodes.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Domain(format!(
                    "hermite root search failed to separate roots at order {order}"
                )));
            }
        }
        Ok(QuadratureRule { nodes, weights })
    }

    /// Gauss-Legendre rule on `[-1, 1]`, weights summing to two.
    pub fn legendre(order: usize) -> Result<Self> {
        if order == 0 || order > MAX_LEGENDRE_ORDER {
            return Err(Error::domain(format!(
                "legendre order must lie in 1..={MAX_LEGENDRE_ORDER}, got {order}"
            )));
        }
        let n = order;
        let mut nodes = vec![R::zero(); n];
        let mut weights = vec![R::zero(); n];
        let nf = R::cast_usize(n);
        let tol = R::epsilon() * R::cast(64.0);
        for i in 0..n.div_ceil(2) {
            let theta =
                R::PI() * (R::cast_usize(i) + R::cast(0.75)) / (nf + R::cast(0.5));
            let mut z = theta.cos();
            for _ in 0..200 {
                let (p, d) = legendre_poly(n, z);
                let dz = p / d;
                z -= dz;
                if dz.abs() <= tol {
                    break;
                }
            }
            // derivative at the converged node, for the weight
            let (_, dp) = legendre_poly(n, z);
            let w = R::cast(2.0) / ((R::one() - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Ok(QuadratureRule { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[R] {
        &self.nodes
    }

    pub fn weights(&self) -> &[R] {
        &self.weights
    }

    /// Integrates `f` over `[lo, hi]` after mapping from `[-1, 1]`.
    /// Only meaningful for a Legendre rule.
    pub fn integrate_interval(&self, lo: R, hi: R, mut f: impl FnMut(R) -> R) -> R {
        let half_span = R::cast(0.5) * (hi - lo);
        let mid = R::cast(0.5) * (hi + lo);
        let mut acc = R::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half_span * x);
        }
        acc * half_span
    }
}

/// Orthonormal probabilists' Hermite value and derivative at `z`.
fn hermite_orthonormal<R: Real>(n: usize, z: R) -> (R, R) {
    let mut p_prev = R::zero();
    let mut p = R::one();
    for k in 0..n {
        let kf = R::cast_usize(k);
        let next = (z * p - kf.sqrt() * p_prev) / (kf + R::one()).sqrt();
        p_prev = p;
        p = next;
    }
    (p, R::cast_usize(n).sqrt() * p_prev)
}

fn hermite_christoffel_denominator<R: Real>(n: usize, z: R) -> R {
    let mut acc = R::zero();
    let mut p_prev = R::zero();
    let mut p = R::one();
    for k in 0..n {
        acc += p * p;
        let kf = R::cast_usize(k);
        let next = (z * p - kf.sqrt() * p_prev) / (kf + R::one()).sqrt();
        p_prev = p;
        p = next;
    }
    acc
}

/// Legendre polynomial value and derivative at `z`.
fn legendre_poly<R: Real>(n: usize, z: R) -> (R, R) {
    let mut p_prev = R::zero();
    let mut p = R::one();
    for k in 0..n {
        let kf = R::cast_usize(k);
        let next = ((R::cast(2.0) * kf + R::one()) * z * p - kf * p_prev) / (kf + R::one());
        p_prev = p;
        p = next;
    }
    let d = R::cast_usize(n) * (z * p - p_prev) / (z * z - R::one());
    (p, d)
}

/// Lower Cholesky factor of a symmetric PSD 2x2 matrix, with a zero-pivot
/// fallback to the rank-deficient case (exact for one-factor models).
fn cholesky2_psd<R: Real>(cov: [[R; 2]; 2]) -> Result<(R, R, R)> {
    let (c11, c12, c22) = (cov[0][0], cov[0][1], cov[1][1]);
    if c12 != cov[1][0] {
        return Err(Error::NotPsd("covariance matrix is not symmetric".into()));
    }
    if c11 < R::zero() || c22 < R::zero() {
        return Err(Error::NotPsd(format!(
            "negative diagonal: ({}, {})",
            c11.as_f64(),
            c22.as_f64()
        )));
    }
    let scale = c11.max(c22);
    let tiny = R::epsilon() * scale;
    if c11 <= tiny {
        if c12.abs() > tiny.max(R::epsilon() * c12.abs()) && c12 * c12 > c11 * c22 {
            return Err(Error::NotPsd("off-diagonal exceeds zero pivot".into()));
        }
        return Ok((R::zero(), R::zero(), c22.sqrt()));
    }
    let l11 = c11.sqrt();
    let l21 = c12 / l11;
    let rem = c22 - l21 * l21;
    let slack = R::cast(16.0) * R::epsilon() * c22.max(l21 * l21);
    if rem < -slack {
        return Err(Error::NotPsd(format!(
            "Schur complement {} is negative",
            rem.as_f64()
        )));
    }
    Ok((l11, l21, rem.max(R::zero()).sqrt()))
}

/// `E[f(X, Y)]` for `(X, Y)` distributed by `law`, via a tensor-product
/// Gauss-Hermite rule of the given order per dimension. Degenerate laws
/// collapse to evaluating `f` at the mean.
pub fn gaussian_expectation_2d<R: Real>(
    law: &GaussianLaw2D<R>,
    f: impl Fn(R, R) -> R,
    order: usize,
) -> Result<R> {
    let (l11, l21, l22) = cholesky2_psd(law.cov)?;
    let [m1, m2] = law.mean;
    let check = |x: R, y: R, v: R| -> Result<R> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteIntegrand {
                x: x.as_f64(),
                y: y.as_f64(),
                value: v.as_f64(),
            })
        }
    };
    if l11 == R::zero() && l22 == R::zero() {
        return check(m1, m2, f(m1, m2));
    }
    let rule = QuadratureRule::<R>::hermite(order)?;
    let mut acc = R::zero();
    if l22 == R::zero() {
        // rank one: the y-dimension is a deterministic function of x
        for (&u, &wu) in rule.nodes.iter().zip(&rule.weights) {
            let x = m1 + l11 * u;
            let y = m2 + l21 * u;
            acc += wu * check(x, y, f(x, y))?;
        }
        return Ok(acc);
    }
    for (&u, &wu) in rule.nodes.iter().zip(&rule.weights) {
        let x = m1 + l11 * u;
        let y_base = m2 + l21 * u;
        let mut inner = R::zero();
        for (&v, &wv) in rule.nodes.iter().zip(&rule.weights) {
            let y = y_base + l22 * v;
            inner += wv * check(x, y, f(x, y))?;
        }
        acc += wu * inner;
    }
    Ok(acc)
}
