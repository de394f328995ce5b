//! Cross-validation of the quadrature engine against Monte Carlo, plus
//! independent Euler-scheme oracles for the closed-form measure shifts.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use aaon_core::curve::DiscountCurve;
use aaon_core::factors::factor_exact_with_diagnostics;
use aaon_core::forwards::{arithmetic_forward, takada_oa, ForwardMethod};
use aaon_core::g2pp::G2ppParams;
use aaon_core::montecarlo::{
    mc_arithmetic_forward, mc_factor, mc_integrated_rate, simulate_paths, McConfig,
};
use aaon_core::timegrid::{AccrualGrid, DayCountBasis};

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
fn fa_matches_published_quarter_row() {
    let panel =
        simulate_paths(&table1_row1(), &flat(0.05), &grid(30, 120), &McConfig::new(100_000, 42))
            .unwrap();
    let fa = mc_arithmetic_forward(&panel);
    let tol = (3.0 * fa.std_error).max(2e-4);
    assert!(
        (fa.value - 0.04992).abs() <= tol,
        "F_a = {} +/- {}",
        fa.value,
        fa.std_error
    );
}

#[test]
fn fa_matches_published_half_year_row() {
    let panel =
        simulate_paths(&table2_row2(), &flat(0.05), &grid(360, 540), &McConfig::new(100_000, 42))
            .unwrap();
    let fa = mc_arithmetic_forward(&panel);
    let tol = (3.0 * fa.std_error).max(2e-4);
    assert!(
        (fa.value - 0.04763).abs() <= tol,
        "F_a = {} +/- {}",
        fa.value,
        fa.std_error
    );
}

#[test]
fn first_factor_mc_at_figure_resolution() {
    // one million paths, the resolution quoted for the factor plots
    let panel =
        simulate_paths(&table1_row1(), &flat(0.05), &grid(30, 120), &McConfig::new(1_000_000, 7))
            .unwrap();
    let a1 = mc_factor(&panel, 0).unwrap();
    let tol = (3.0 * a1.std_error).max(5e-4);
    assert!(
        (a1.value - 0.99819).abs() <= tol,
        "A_1 = {} +/- {}",
        a1.value,
        a1.std_error
    );
}

#[test]
fn mc_agrees_with_quadrature_on_both_rows() {
    let cases = [
        (table1_row1(), grid(30, 120)),
        (table2_row2(), grid(360, 540)),
    ];
    let curve = flat(0.05);
    for (params, g) in cases {
        let panel = simulate_paths(&params, &curve, &g, &McConfig::new(100_000, 11)).unwrap();

        let fa_mc = mc_arithmetic_forward(&panel);
        let fa_quad = arithmetic_forward(&params, &curve, &g, ForwardMethod::Exact, 32, None)
            .unwrap()
            .value;
        assert!(
            (fa_mc.value - fa_quad).abs() <= 3.0 * fa_mc.std_error,
            "F_a: mc {} +/- {} vs quad {}",
            fa_mc.value,
            fa_mc.std_error,
            fa_quad
        );

        // the MC factor estimates the change-of-numeraire ratio, so compare
        // against the quadrature ratio form
        for k in [0usize, g.period_count() / 2] {
            let est = mc_factor(&panel, k).unwrap();
            let (_, diag) = factor_exact_with_diagnostics(&params, &curve, &g, k, 32).unwrap();
            let target = diag.ratio_form();
            assert!(
                (est.value - target).abs() <= 3.0 * est.std_error,
                "A_{k}: mc {} +/- {} vs quad {}",
                est.value,
                est.std_error,
                target
            );
        }
    }
}

#[test]
fn takada_oa_matches_mc_integrated_rate() {
    let curve = flat(0.05);
    let g = grid(360, 540);
    let panel = simulate_paths(&table2_row2(), &curve, &g, &McConfig::new(100_000, 19)).unwrap();
    let mc = mc_integrated_rate(&panel);
    let quad = takada_oa(&table2_row2(), &curve, &g, 64).unwrap();
    assert!(
        (mc.value - quad.value).abs() <= 3.0 * mc.std_error,
        "O_a: mc {} +/- {} vs quad {}",
        mc.value,
        mc.std_error,
        quad.value
    );
}

/// Euler-Maruyama simulation of the factor SDEs, under the risk-neutral
/// measure or with the forward-measure drift, independent of the engine's
/// exact transition kernels.
struct EulerSim {
    params: G2ppParams<f64>,
    dt: f64,
    horizon: Option<f64>,
}

impl EulerSim {
    /// Returns `(x(t), y(t), int_0^t (x+y))` for one path.
    fn path(&self, t: f64, rng: &mut StdRng) -> (f64, f64, f64) {
        let p = &self.params;
        let steps = (t / self.dt).round() as usize;
        let dt = t / steps as f64;
        let sqrt_dt = dt.sqrt();
        let c = (1.0 - p.rho * p.rho).max(0.0).sqrt();
        let (mut x, mut y, mut int_xy) = (0.0, 0.0, 0.0);
        for i in 0..steps {
            let s = i as f64 * dt;
            let z1: f64 = StandardNormal.sample(rng);
            let z2: f64 = StandardNormal.sample(rng);
            let dw1 = sqrt_dt * z1;
            let dw2 = sqrt_dt * (p.rho * z1 + c * z2);
            let (gx, gy) = match self.horizon {
                None => (0.0, 0.0),
                Some(u) => {
                    let ba = (1.0 - (-p.a * (u - s)).exp()) / p.a;
                    let bb = (1.0 - (-p.b * (u - s)).exp()) / p.b;
                    (
                        p.sigma * p.sigma * ba + p.rho * p.sigma * p.eta * bb,
                        p.eta * p.eta * bb + p.rho * p.sigma * p.eta * ba,
                    )
                }
            };
            int_xy += (x + y) * dt;
            x += (-p.a * x - gx) * dt + p.sigma * dw1;
            y += (-p.b * y - gy) * dt + p.eta * dw2;
        }
        (x, y, int_xy)
    }
}

#[test]
fn integrated_variance_matches_euler_monte_carlo() {
    let params = table1_row1();
    let sim = EulerSim {
        params,
        dt: 1.0 / 1440.0,
        horizon: None,
    };
    let mut rng = StdRng::seed_from_u64(5150);
    let n = 20_000usize;
    let t = 0.25;
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..n {
        let (_, _, i) = sim.path(t, &mut rng);
        sum += i;
        sum2 += i * i;
    }
    let mean = sum / n as f64;
    let var = (sum2 - n as f64 * mean * mean) / (n as f64 - 1.0);
    let target = params.integrated_variance(0.0, t).unwrap();
    // variance of a sample variance of a Gaussian: var^2 * 2/(n-1)
    let se = target * (2.0 / (n as f64 - 1.0)).sqrt();
    assert!(
        (var - target).abs() <= 3.0 * se + 1e-3 * target,
        "Var(int r) = {var} vs V = {target}"
    );
}

#[test]
fn forward_measure_means_match_euler_drift_simulation() {
    // one-factor special case and a full two-factor case
    let cases = [
        (G2ppParams::new(0.05, 0.4, 0.0, 0.5, 0.0).unwrap(), 0.5, 1.0),
        (table2_row2(), 1.0, 1.5),
    ];
    for (params, t, u) in cases {
        let sim = EulerSim {
            params,
            dt: 1.0 / 1440.0,
            horizon: Some(u),
        };
        let mut rng = StdRng::seed_from_u64(90210);
        let n = 30_000usize;
        let (mut sx, mut sx2, mut sy, mut sy2) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let (x, y, _) = sim.path(t, &mut rng);
            sx += x;
            sx2 += x * x;
            sy += y;
            sy2 += y * y;
        }
        let nf = n as f64;
        let mx = sx / nf;
        let my = sy / nf;
        let se_x = (((sx2 - nf * mx * mx) / (nf - 1.0)) / nf).sqrt();
        let se_y = (((sy2 - nf * my * my) / (nf - 1.0)) / nf).sqrt();
        let law = params
            .factor_law(t, aaon_core::g2pp::MeasureTag::Forward(u))
            .unwrap();
        assert!(
            (mx - law.mean[0]).abs() <= 3.0 * se_x + 1e-3 * law.mean[0].abs(),
            "mean_x {mx} vs {}",
            law.mean[0]
        );
        assert!(
            (my - law.mean[1]).abs() <= 3.0 * se_y + 1e-3 * law.mean[1].abs(),
            "mean_y {my} vs {}",
            law.mean[1]
        );
    }
}

#[test]
fn forward_short_rate_mean_matches_euler() {
    let params = table2_row2();
    let curve = flat(0.05);
    let (u, horizon) = (1.25, 1.5);
    let sim = EulerSim {
        params,
        dt: 1.0 / 1440.0,
        horizon: Some(horizon),
    };
    let mut rng = StdRng::seed_from_u64(31337);
    let n = 30_000usize;
    let target = params.forward_short_rate_mean(&curve, u, horizon).unwrap();
    // r(u) = phi(u) + x(u) + y(u). The deterministic shift phi is shared
    // by any simulation of r (its hump is validated separately through
    // bond repricing); the independent content here is the factor drift.
    let law = params
        .factor_law(u, aaon_core::g2pp::MeasureTag::Forward(horizon))
        .unwrap();
    let phi = target - law.mean[0] - law.mean[1];
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let (x, y, _) = sim.path(u, &mut rng);
        let r = phi + x + y;
        s += r;
        s2 += r * r;
    }
    let nf = n as f64;
    let mean = s / nf;
    let se = (((s2 - nf * mean * mean) / (nf - 1.0)) / nf).sqrt();
    assert!(
        (mean - target).abs() <= 3.0 * se + 2e-5,
        "E[r(u)] = {mean} vs {target} (se {se})"
    );
}

#[test]
fn random_draws_cross_validate() {
    // a smaller version of the acceptance sweep, at reduced path counts
    let mut rng = StdRng::seed_from_u64(1234);
    for trial in 0..4 {
        let params = G2ppParams::new(
            rng.gen_range(0.01..0.08),
            rng.gen_range(0.05..1.0),
            rng.gen_range(0.02..0.09),
            rng.gen_range(0.1..1.0),
            rng.gen_range(-0.8..0.8),
        )
        .unwrap();
        let g = if trial % 2 == 0 {
            grid(30, 120)
        } else {
            grid(360, 540)
        };
        let curve = flat(0.05);
        let panel = simulate_paths(&params, &curve, &g, &McConfig::new(40_000, trial)).unwrap();
        let fa_mc = mc_arithmetic_forward(&panel);
        let fa_quad = arithmetic_forward(&params, &curve, &g, ForwardMethod::Exact, 32, None)
            .unwrap()
            .value;
        assert!(
            (fa_mc.value - fa_quad).abs() <= 3.5 * fa_mc.std_error,
            "trial {trial}: {} +/- {} vs {}",
            fa_mc.value,
            fa_mc.std_error,
            fa_quad
        );
    }
}
