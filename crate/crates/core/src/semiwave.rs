//! The constant-coefficient semi-wave `q_c` and the critical speed `c0`
//! defined by the boundary relation `-mu(a) q_c'(0) = c0`.
//!
//! `q_c` solves `d q'' + c q' + a q - b q^2 = 0` on `(-inf, 0]` with
//! `q(-inf) = a/b`, `q(0) = 0`, and is computed here as a truncated
//! boundary value problem with Dirichlet value `a/b` at the left end.

use crate::bvp::{
    derivative_at_right, left_truncation_radius, solve_logistic_bvp, Branch, BvpSpec, Coefficient,
    POINTS_PER_LENGTH_SCALE,
};
use crate::model::{ExpansionRate, ModelParams};
use crate::{Error, Result};

/// A computed semi-wave profile on `[-X, 0]`.
#[derive(Debug, Clone)]
pub struct SemiWave {
    pub c: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// One-sided estimate of `q_c'(0)`; negative.
    pub slope0: f64,
    /// Truncation radius `X`.
    pub x_radius: f64,
    pub residual: f64,
}

impl SemiWave {
    /// Linear interpolation with plateau extension to the left of `-X`.
    pub fn interp(&self, x: f64) -> f64 {
        if x <= self.grid[0] {
            return self.values[0];
        }
        if x >= 0.0 {
            return 0.0;
        }
        let dx = self.grid[1] - self.grid[0];
        let pos = (x - self.grid[0]) / dx;
        let i = (pos.floor() as usize).min(self.values.len() - 2);
        let w = pos - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }
}

fn check_admissible_speed(c: f64, params: &ModelParams) -> Result<()> {
    let bound = params.speed_bound();
    if !(c > 0.0 && c < bound) {
        return Err(Error::Precondition(format!(
            "semi-wave speed must lie in (0, 2 sqrt(a d)) = (0, {bound:.6}), got {c}"
        )));
    }
    Ok(())
}

/// Solve the truncated semi-wave problem on `[-x_radius, 0]` with `n`
/// intervals. Low-level entry point; [`solve_semiwave`] picks the radius
/// and resolution itself.
pub fn solve_semiwave_on(
    c: f64,
    params: &ModelParams,
    x_radius: f64,
    n: usize,
    tol: f64,
) -> Result<SemiWave> {
    check_admissible_speed(c, params)?;
    let spec = BvpSpec {
        xl: -x_radius,
        xr: 0.0,
        left_value: params.carrying_capacity(),
        right_value: 0.0,
        drift: c,
        diffusion: params.d,
        competition: params.b,
        coefficient: Coefficient::Constant(params.a),
    };
    let profile = solve_logistic_bvp(&spec, n, tol)?;
    if profile.branch != Branch::Positive {
        return Err(Error::Breakdown(
            "semi-wave solve converged to the zero branch".into(),
        ));
    }
    let slack = 1e-10 * params.carrying_capacity();
    for w in profile.values.windows(2) {
        if w[1] > w[0] + slack {
            return Err(Error::Breakdown(format!(
                "semi-wave profile is not decreasing (rise {:.3e})",
                w[1] - w[0]
            )));
        }
    }
    let slope0 = derivative_at_right(&profile);
    Ok(SemiWave {
        c,
        grid: profile.grid,
        values: profile.values,
        slope0,
        x_radius,
        residual: profile.residual,
    })
}

/// Solve for the semi-wave `q_c`, choosing the truncation radius by the
/// self-certifying doubling loop and the grid from the diffusive length
/// scale.
pub fn solve_semiwave(c: f64, params: &ModelParams, tol: f64) -> Result<SemiWave> {
    check_admissible_speed(c, params)?;
    let x_radius = left_truncation_radius(params, c, tol.min(1e-8))?;
    let dx = params.length_scale() / POINTS_PER_LENGTH_SCALE as f64;
    let n = (x_radius / dx).ceil() as usize;
    solve_semiwave_on(c, params, x_radius, n.max(16), tol)
}

/// Closed-form front slope of the zero-speed wave, from the first integral
/// of `d q'' + a q - b q^2 = 0`: `q'(0) = -(a/b) sqrt(a / (3 d))`.
pub fn zero_speed_front_slope(params: &ModelParams) -> f64 {
    -(params.a / params.b) * (params.a / (3.0 * params.d)).sqrt()
}

/// Result of the critical-speed computation, carrying its residual
/// certificate.
#[derive(Debug, Clone)]
pub struct CriticalSpeed {
    pub c0: f64,
    /// `|-mu(a) q'(0) - c0|` at the returned speed.
    pub residual: f64,
    pub slope0: f64,
    pub x_radius: f64,
    pub bisection_iterations: usize,
}

const PREFLIGHT_SPEEDS: usize = 8;
const MAX_BISECTION_ITERATIONS: usize = 60;
const BRACKET_MARGIN: f64 = 1e-6;

/// Find the unique `c0 in (0, 2 sqrt(a d))` with `-mu(a) q_{c0}'(0) = c0`.
///
/// A pre-flight scan over eight speeds asserts that
/// `f(c) = -mu(a) q_c'(0) - c` is strictly decreasing (uniqueness makes it
/// so); bisection then drives `|f|` below `tol`, so the reported speed
/// carries a residual certificate.
pub fn critical_speed(params: &ModelParams, mu: &ExpansionRate, tol: f64) -> Result<CriticalSpeed> {
    if !(params.a > 0.0 && params.b > 0.0 && params.d > 0.0) {
        return Err(Error::Precondition(
            "critical speed requires a > 0, b > 0, d > 0".into(),
        ));
    }
    let mu_a = mu.at_favourable();
    if !(mu_a > 0.0) {
        return Err(Error::Precondition(format!(
            "critical speed requires mu(a) > 0, got {mu_a}"
        )));
    }

    let bound = params.speed_bound();
    let c_lo = BRACKET_MARGIN * bound;
    let c_hi = (1.0 - BRACKET_MARGIN) * bound;

    // one conservative radius for the whole bracket: the left tail is
    // slowest (largest X) at the fastest speed
    let x_radius = left_truncation_radius(params, c_hi, (tol * 1e-2).min(1e-9))?;
    let dx = params.length_scale() / POINTS_PER_LENGTH_SCALE as f64;
    let n = (x_radius / dx).ceil() as usize;
    let f = |c: f64| -> Result<(f64, f64)> {
        let wave = solve_semiwave_on(c, params, x_radius, n, (tol * 1e-2).min(1e-10))?;
        Ok((-mu_a * wave.slope0 - c, wave.slope0))
    };

    let mut scan = Vec::with_capacity(PREFLIGHT_SPEEDS);
    for i in 0..PREFLIGHT_SPEEDS {
        let c = c_lo + (c_hi - c_lo) * i as f64 / (PREFLIGHT_SPEEDS - 1) as f64;
        scan.push((c, f(c)?.0));
    }
    for w in scan.windows(2) {
        if w[1].1 >= w[0].1 {
            return Err(Error::Bracket(format!(
                "pre-flight scan found f non-decreasing between c = {:.6} and c = {:.6} \
                 (f = {:.6e}, {:.6e}); the slope relation should be strictly decreasing",
                w[0].0, w[1].0, w[0].1, w[1].1
            )));
        }
    }
    let (f_lo, f_hi) = (scan[0].1, scan[scan.len() - 1].1);
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::Bracket(format!(
            "critical-speed bracket has no sign change: f({c_lo:.6}) = {f_lo:.6e}, \
             f({c_hi:.6}) = {f_hi:.6e}"
        )));
    }

    let (mut lo, mut hi) = (c_lo, c_hi);
    let mut best = (0.5 * (lo + hi), f64::INFINITY, 0.0);
    let mut iterations = 0;
    while iterations < MAX_BISECTION_ITERATIONS {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let (fm, slope) = f(mid)?;
        if fm.abs() < best.1.abs() {
            best = (mid, fm, slope);
        }
        if fm.abs() <= tol {
            return Ok(CriticalSpeed {
                c0: mid,
                residual: fm.abs(),
                slope0: slope,
                x_radius,
                bisection_iterations: iterations,
            });
        }
        if fm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        context: format!(
            "critical-speed bisection (best |f| = {:.3e} at c = {:.8})",
            best.1.abs(),
            best.0
        ),
        iterations,
        residual: best.1.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Mode;
    use approx::assert_abs_diff_eq;

    fn params() -> ModelParams {
        ModelParams {
            d: 1.0,
            a: 1.0,
            a0: -1.0,
            b: 1.0,
            l0: 1.0,
            c: 0.25,
            h0: 2.0,
            mode: Mode::Paper,
        }
    }

    #[test]
    fn boundary_value_is_imposed() {
        let wave = solve_semiwave(0.5, &params(), 1e-10).unwrap();
        assert_eq!(*wave.values.last().unwrap(), 0.0);
        assert_eq!(wave.values[0], 1.0);
        assert!(wave.slope0 < 0.0);
    }

    #[test]
    fn rejects_speeds_outside_existence_range() {
        let p = params();
        assert!(solve_semiwave(0.0, &p, 1e-8).is_err());
        assert!(solve_semiwave(2.0, &p, 1e-8).is_err());
        assert!(solve_semiwave(2.5, &p, 1e-8).is_err());
    }

    #[test]
    fn slow_waves_approach_the_zero_speed_first_integral() {
        let p = params();
        let closed_form = zero_speed_front_slope(&p);
        assert_abs_diff_eq!(closed_form, -(1.0f64 / 3.0).sqrt(), epsilon = 1e-15);

        // at c = 1e-5 on a fine grid the drift correction (about 0.64 c)
        // and the discretization error are both below 1e-5
        let fine = solve_semiwave_on(1e-5, &p, 40.0, 40 * 2048, 1e-11).unwrap();
        assert_abs_diff_eq!(fine.slope0, closed_form, epsilon = 1e-5);

        // at c = 1e-4 the first-order drift in c dominates; 1e-4 absolute
        let wave = solve_semiwave(1e-4, &p, 1e-10).unwrap();
        assert_abs_diff_eq!(wave.slope0, closed_form, epsilon = 1e-4);
    }

    #[test]
    fn critical_speed_lies_in_the_admissible_range() {
        let p = params();
        let mu = ExpansionRate::constant(&p, 1.0);
        let cs = critical_speed(&p, &mu, 1e-8).unwrap();
        assert!(cs.c0 > 0.0 && cs.c0 < p.speed_bound());
        assert!(cs.residual <= 1e-8);
        assert!(cs.bisection_iterations <= 60);
    }

    #[test]
    fn critical_speed_is_reproducible_bit_for_bit() {
        let p = params();
        let mu = ExpansionRate::constant(&p, 1.0);
        let first = critical_speed(&p, &mu, 1e-8).unwrap();
        let second = critical_speed(&p, &mu, 1e-8).unwrap();
        assert_eq!(first.c0.to_bits(), second.c0.to_bits());
    }

    #[test]
    fn slope_relation_is_strictly_decreasing_on_a_ladder() {
        let p = params();
        let speeds = [0.1, 0.3, 0.55, 0.8, 1.1, 1.4, 1.7, 1.9];
        let mut previous = f64::INFINITY;
        for &c in &speeds {
            let wave = solve_semiwave(c, &p, 1e-10).unwrap();
            let f = -wave.slope0 - c;
            assert!(f < previous, "f not strictly decreasing at c = {c}");
            previous = f;
        }
    }

    #[test]
    fn profile_is_strictly_decreasing_in_x() {
        let wave = solve_semiwave(0.8, &params(), 1e-10).unwrap();
        for w in wave.values.windows(2) {
            assert!(w[1] <= w[0] + 1e-10);
        }
    }
}
