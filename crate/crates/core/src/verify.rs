//! Independent oracles and convergence studies.
//!
//! Everything here cross-checks the main solvers without sharing their
//! discretization code: the boundary value oracle integrates the ODE by
//! adaptive Runge-Kutta shooting from the left plateau, and the time
//! stepping oracle is an explicit front-fixed scheme at four times the
//! spatial resolution with a third-order slope stencil.

use crate::bvp::{BvpSpec, Coefficient};
use crate::model::{ClimateProfile, ExpansionRate, InitialData, ModelParams};
use crate::stefan::{InvariantStats, Trajectory, TrajectorySample};
use crate::{Error, Result};

/// Shooting solution of a logistic boundary value problem.
#[derive(Debug, Clone)]
pub struct OracleProfile {
    /// `v'(xr)` from the integrated trajectory.
    pub slope_right: f64,
    /// `|v(xr) - right_value|` at the converged manifold parameter.
    pub end_mismatch: f64,
    /// Converged departure amplitude from the left plateau.
    pub epsilon: f64,
    /// Sparse integration path `(x, v)` for profile comparisons.
    pub path: Vec<(f64, f64)>,
}

impl OracleProfile {
    pub fn interp(&self, x: f64) -> f64 {
        let path = &self.path;
        if x <= path[0].0 {
            return path[0].1;
        }
        if x >= path[path.len() - 1].0 {
            return path[path.len() - 1].1;
        }
        let i = path.partition_point(|p| p.0 <= x) - 1;
        let (x0, v0) = path[i];
        let (x1, v1) = path[i + 1];
        v0 + (v1 - v0) * (x - x0) / (x1 - x0)
    }
}

struct OdeField<'a> {
    spec: &'a BvpSpec,
}

impl OdeField<'_> {
    fn accel(&self, x: f64, v: f64, w: f64) -> f64 {
        let kappa = self.spec.coefficient.eval(x);
        -(self.spec.drift * w + kappa * v - self.spec.competition * v * v) / self.spec.diffusion
    }

    fn rk4(&self, x: f64, v: f64, w: f64, h: f64) -> (f64, f64) {
        let k1v = w;
        let k1w = self.accel(x, v, w);
        let k2v = w + 0.5 * h * k1w;
        let k2w = self.accel(x + 0.5 * h, v + 0.5 * h * k1v, w + 0.5 * h * k1w);
        let k3v = w + 0.5 * h * k2w;
        let k3w = self.accel(x + 0.5 * h, v + 0.5 * h * k2v, w + 0.5 * h * k2w);
        let k4v = w + h * k3w;
        let k4w = self.accel(x + h, v + h * k3v, w + h * k3w);
        (
            v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
            w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
        )
    }

    /// One accepted adaptive step by step doubling; returns the new state
    /// and the step actually taken.
    fn adaptive_step(
        &self,
        x: f64,
        v: f64,
        w: f64,
        h_try: f64,
        err_tol: f64,
    ) -> (f64, f64, f64) {
        let mut h = h_try;
        for _ in 0..60 {
            let (v1, w1) = self.rk4(x, v, w, h);
            let (vh, wh) = self.rk4(x, v, w, 0.5 * h);
            let (v2, w2) = self.rk4(x + 0.5 * h, vh, wh, 0.5 * h);
            let err = (v2 - v1).abs().max((w2 - w1).abs()) / 15.0;
            if err <= err_tol || h <= 1e-12 {
                return (v2, w2, h);
            }
            h *= 0.5;
        }
        (v, w, 0.0)
    }
}

/// Kink positions of the coefficient inside `(xl, xr)`, used to align
/// integration steps with the transition band edges.
fn coefficient_kinks(spec: &BvpSpec) -> Vec<f64> {
    match spec.coefficient {
        Coefficient::Constant(_) => Vec::new(),
        Coefficient::Climate { profile, shift } => {
            let mut ks: Vec<f64> = [shift, shift + (profile.favourable_rate() - profile.unfavourable_rate()).abs() / profile.lipschitz_bound() * if profile.kind() == crate::model::TransitionKind::Linear { 1.0 } else { 1.5 }]
                .into_iter()
                .filter(|k| *k > spec.xl && *k < spec.xr)
                .collect();
            ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ks
        }
    }
}

/// Integrate from the left end to `xr` (or to the first crossing of the
/// right boundary value). Returns `(mismatch, slope, value, path)`: the
/// mismatch is `v(xr) - right_value` when the trajectory stays above the
/// target, and `-(xr - x_cross)` when it crosses early.
fn shoot(
    spec: &BvpSpec,
    start_x: f64,
    epsilon: f64,
    departure_rate: f64,
    plateau: f64,
    err_tol: f64,
) -> (f64, f64, Vec<(f64, f64)>) {
    let field = OdeField { spec };
    let target = spec.right_value;
    let kinks = coefficient_kinks(spec);

    let mut x = start_x;
    let mut v = plateau - epsilon;
    let mut w = -epsilon * departure_rate;
    let mut h = (spec.xr - start_x) / 256.0;
    let mut path = vec![(x, v)];

    while x < spec.xr {
        let mut h_cap = (spec.xr - x).min(h);
        for &k in &kinks {
            if x < k - 1e-14 {
                h_cap = h_cap.min(k - x);
                break;
            }
        }
        let (v_new, w_new, h_used) = field.adaptive_step(x, v, w, h_cap, err_tol);
        if h_used == 0.0 {
            break;
        }
        if v_new < target {
            // refine the crossing location inside [x, x + h_used]
            let (mut lo, mut hi) = (0.0f64, h_used);
            let mut slope_end = w_new;
            let mut v_end = v_new;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let (vm, wm) = field.rk4(x, v, w, mid);
                if vm < target {
                    hi = mid;
                } else {
                    lo = mid;
                }
                slope_end = wm;
                v_end = vm;
            }
            let x_cross = x + 0.5 * (lo + hi);
            path.push((x_cross, v_end));
            return (-(spec.xr - x_cross), slope_end, path);
        }
        x += h_used;
        v = v_new;
        w = w_new;
        path.push((x, v));
        h = (h_used * 2.0).min((spec.xr - spec.xl) / 16.0);
        if h <= 0.0 {
            break;
        }
    }
    (v - target, w, path)
}

/// Solve a logistic BVP by adaptive shooting from the left plateau, with
/// safeguarded secant iteration on the log of the unstable-manifold
/// departure amplitude.
///
/// The left boundary value must sit on the plateau `kappa(xl)/b` (the
/// semi-infinite limit it truncates); the mismatch between the Dirichlet
/// condition and the manifold start decays like the plateau tail and is
/// covered by the comparison tolerances.
pub fn oracle_bvp(spec: &BvpSpec, tol: f64) -> Result<OracleProfile> {
    let plateau = spec.coefficient.eval(spec.xl) / spec.competition;
    if plateau <= 0.0 {
        return Err(Error::Precondition(
            "shooting oracle needs a positive left plateau kappa(xl)/b".into(),
        ));
    }
    // degenerate constant case: boundary data on the plateau, zero slope
    if (spec.right_value - plateau).abs() <= 1e-14 * plateau
        && (spec.left_value - plateau).abs() <= 1e-14 * plateau
    {
        return Ok(OracleProfile {
            slope_right: 0.0,
            end_mismatch: 0.0,
            epsilon: 0.0,
            path: vec![(spec.xl, plateau), (spec.xr, plateau)],
        });
    }

    let d = spec.diffusion;
    let c = spec.drift;
    let kappa_left = spec.coefficient.eval(spec.xl);
    let departure_rate = (-c + (c * c + 4.0 * d * kappa_left).sqrt()) / (2.0 * d);
    let err_tol = (tol * 1e-3).min(1e-11) * plateau;

    // The departure amplitude shrinks like exp(-rate * distance); past
    // ~36 e-folds it falls below f64 resolution against the plateau, so
    // long domains are entered at a capped distance from the plateau's
    // right edge (truncation error ~ exp(-30), far below any comparison
    // tolerance here).
    let plateau_edge = match spec.coefficient {
        Coefficient::Constant(_) => spec.xr,
        Coefficient::Climate { shift, .. } => spec.xr.min(shift),
    };
    let start_x = spec.xl.max(plateau_edge - 30.0 / departure_rate);

    // bracket the crossing in the departure amplitude
    let mut eps_hi = 0.499 * plateau;
    let (r_hi, _, _) = shoot(spec, start_x, eps_hi, departure_rate, plateau, err_tol);
    if r_hi > 0.0 {
        return Err(Error::Bracket(format!(
            "shooting divergence: even epsilon = {eps_hi:.3e} does not reach the right \
             boundary value (mismatch {r_hi:.3e})"
        )));
    }
    let mut eps_lo = eps_hi;
    let mut r_lo = r_hi;
    for _ in 0..2000 {
        eps_lo *= 0.5;
        let (r, _, _) = shoot(spec, start_x, eps_lo, departure_rate, plateau, err_tol);
        r_lo = r;
        if r > 0.0 {
            break;
        }
        eps_hi = eps_lo;
    }
    if r_lo <= 0.0 {
        return Err(Error::Bracket(
            "shooting oracle could not bracket the departure amplitude".into(),
        ));
    }

    // secant on ln(epsilon), safeguarded by a bisection step every other
    // iteration (the residual mixes density and length units, which can
    // stall a pure secant against one bracket edge)
    let (mut llo, mut lhi) = (eps_lo.ln(), eps_hi.ln());
    let mut flo = r_lo;
    let mut fhi = {
        let (r, _, _) = shoot(spec, start_x, eps_hi, departure_rate, plateau, err_tol);
        r
    };
    let mut result = None;
    for iter in 0..200 {
        let mut guess = lhi - fhi * (lhi - llo) / (fhi - flo);
        if iter % 2 == 1 || !(guess > llo && guess < lhi) {
            guess = 0.5 * (llo + lhi);
        }
        let eps = guess.exp();
        let (r, slope, path) = shoot(spec, start_x, eps, departure_rate, plateau, err_tol);
        if r > 0.0 {
            llo = guess;
            flo = r;
        } else {
            lhi = guess;
            fhi = r;
        }
        if (lhi - llo).abs() <= 1e-13 || r.abs() <= 1e-11 * plateau.max(1.0) {
            result = Some((eps, r, slope, path));
            break;
        }
    }
    let (epsilon, mismatch, slope_right, path) = result.ok_or_else(|| Error::NonConvergence {
        context: "shooting secant iteration".into(),
        iterations: 200,
        residual: (lhi - llo).abs(),
    })?;
    if mismatch.abs() > 1e-5 * plateau.max(1.0) {
        return Err(Error::NonConvergence {
            context: "shooting end mismatch".into(),
            iterations: 200,
            residual: mismatch.abs(),
        });
    }
    Ok(OracleProfile {
        slope_right,
        end_mismatch: mismatch.abs(),
        epsilon,
        path,
    })
}

/// Output of the explicit reference time stepper.
#[derive(Debug, Clone)]
pub struct OracleRun {
    pub trajectory: Trajectory,
    pub final_h: f64,
    pub final_x: Vec<f64>,
    pub final_u: Vec<f64>,
    pub final_mass: f64,
    /// Time-step halvings forced by detected instability.
    pub halvings: usize,
}

/// Numerical settings for [`oracle_simulate`].
#[derive(Debug, Clone, Copy)]
pub struct OracleSimSpec {
    pub t_max: f64,
    pub record_dt: f64,
    pub gap_margin: f64,
    pub c0: Option<f64>,
    /// Oracle grid = `resolution_multiplier * base_n` intervals.
    pub resolution_multiplier: usize,
    pub safety: f64,
}

impl OracleSimSpec {
    pub fn new(t_max: f64, record_dt: f64) -> Self {
        Self {
            t_max,
            record_dt,
            gap_margin: 10.0,
            c0: None,
            resolution_multiplier: 4,
            safety: 0.4,
        }
    }
}

/// Explicit-in-time front-fixed integration on a finer grid with a
/// third-order one-sided slope stencil. Deliberately slow; used only for
/// cross-checks of the main stepper.
pub fn oracle_simulate(
    params: &ModelParams,
    climate: &ClimateProfile,
    mu: &ExpansionRate,
    u0: &InitialData,
    base_n: usize,
    spec: &OracleSimSpec,
) -> Result<OracleRun> {
    let n = base_n * spec.resolution_multiplier.max(1);
    if n < 32 {
        return Err(Error::Precondition("oracle grid too coarse".into()));
    }
    let dy = 1.0 / n as f64;
    let mut h = params.h0;
    let mut t = 0.0f64;
    let mut u: Vec<f64> = (0..=n).map(|i| u0.eval(i as f64 * dy * h)).collect();
    u[n] = 0.0;
    let mut next = u.clone();

    let equilibrium = params.a / params.b.max(f64::MIN_POSITIVE);
    let bound = if params.b > 0.0 {
        params.carrying_capacity().max(u0.sup())
    } else {
        u0.sup()
    };
    let rate_cap = params.a.abs().max(params.a0.abs()) + params.b * bound;
    let zero_floor = 1e-14 * bound.max(1.0);

    let slope_y = |u: &[f64]| -> f64 {
        (11.0 * u[n] - 18.0 * u[n - 1] + 9.0 * u[n - 2] - 2.0 * u[n - 3]) / (6.0 * dy)
    };
    let sample = |t: f64, h: f64, u: &[f64], slope_x: f64| -> TrajectorySample {
        let hi = (params.c * t - spec.gap_margin).min(h);
        let mut gap: Option<f64> = None;
        if hi > 0.0 {
            let mut g = 0.0f64;
            let mut any = false;
            for (i, &ui) in u.iter().enumerate() {
                if h * i as f64 * dy <= hi {
                    g = g.max((ui - equilibrium).abs());
                    any = true;
                } else {
                    break;
                }
            }
            if any {
                gap = Some(g);
            }
        }
        TrajectorySample {
            t,
            h,
            sup_u: u.iter().cloned().fold(0.0, f64::max),
            front_slope: slope_x,
            interior_gap: gap,
        }
    };

    let mut invariants = InvariantStats {
        min_u: 0.0,
        max_u: u.iter().cloned().fold(0.0, f64::max),
        density_bound: bound,
        monotone_front: true,
        steps: 0,
    };
    let first_slope = slope_y(&u) / h;
    let mut samples = vec![sample(t, h, &u, first_slope)];
    let mut next_record = spec.record_dt;
    let mut dt_scale = 1.0f64;
    let mut halvings = 0usize;

    while t < spec.t_max * (1.0 - 1e-12) {
        let slope_x = slope_y(&u) / h;
        let hprime = -mu.eval(climate.eval(h - params.c * t)) * slope_x;
        if hprime <= 0.0 {
            let sup = u.iter().cloned().fold(0.0, f64::max);
            if sup <= zero_floor {
                t += spec.record_dt;
                continue;
            }
            return Err(Error::Breakdown(format!(
                "oracle front speed non-positive ({hprime:.3e}) at t = {t}"
            )));
        }

        let diffusion_limit = dy * dy * h * h / (2.0 * params.d);
        let advection_limit = if hprime > 0.0 {
            dy * h / hprime
        } else {
            f64::INFINITY
        };
        let reaction_limit = 1.0 / rate_cap.max(1e-12);
        let mut dt = spec.safety
            * dt_scale
            * diffusion_limit.min(advection_limit).min(reaction_limit);
        dt = dt.min(spec.t_max - t);

        let h_new = h + dt * hprime;
        let t_new = t + dt;
        let diffusion = params.d / (h_new * h_new);
        let inv_dy2 = 1.0 / (dy * dy);
        let inv_2dy = 1.0 / (2.0 * dy);

        let mut ok = true;
        next[0] = u[0]
            + dt * (2.0 * diffusion * (u[1] - u[0]) * inv_dy2
                + climate.eval(-params.c * t) * u[0]
                - params.b * u[0] * u[0]);
        for i in 1..n {
            let y = i as f64 * dy;
            let lap = diffusion * (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_dy2;
            let adv = y * hprime / h_new * (u[i + 1] - u[i - 1]) * inv_2dy;
            let reac = climate.eval(y * h - params.c * t) * u[i] - params.b * u[i] * u[i];
            next[i] = u[i] + dt * (lap + adv + reac);
        }
        next[n] = 0.0;
        for value in next.iter_mut() {
            if !value.is_finite() || *value > 10.0 * bound.max(1.0) || *value < -1e-6 * bound.max(1.0) {
                ok = false;
                break;
            }
            if *value < 0.0 {
                *value = 0.0;
            }
        }
        if !ok {
            dt_scale *= 0.5;
            halvings += 1;
            if halvings > 40 {
                return Err(Error::Breakdown(
                    "oracle stepping unstable after 40 halvings".into(),
                ));
            }
            continue;
        }

        std::mem::swap(&mut u, &mut next);
        let h_before = h;
        h = h_new;
        t = t_new;
        invariants.steps += 1;
        for &value in &u {
            invariants.min_u = invariants.min_u.min(value);
            invariants.max_u = invariants.max_u.max(value);
        }
        if h <= h_before && u.iter().cloned().fold(0.0, f64::max) > zero_floor {
            invariants.monotone_front = false;
        }
        if t >= next_record || t >= spec.t_max * (1.0 - 1e-12) {
            while next_record <= t {
                next_record += spec.record_dt;
            }
            samples.push(sample(t, h, &u, slope_y(&u) / h));
        }
    }

    let final_mass = {
        let mut acc = 0.5 * (u[0] + u[n]);
        for &value in &u[1..n] {
            acc += value;
        }
        acc * dy * h
    };
    Ok(OracleRun {
        trajectory: Trajectory {
            c: params.c,
            c0: spec.c0,
            samples,
            invariants,
        },
        final_h: h,
        final_x: (0..=n).map(|i| h * i as f64 * dy).collect(),
        final_u: u,
        final_mass,
        halvings,
    })
}

/// Richardson-style order estimate from a refinement ladder.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvergenceReport {
    /// Resolution labels (grid counts, or 1/dt), coarse to fine.
    pub resolutions: Vec<f64>,
    pub values: Vec<f64>,
    /// `|values[k+1] - values[k]|`.
    pub differences: Vec<f64>,
    /// Estimated order from the last pair of differences.
    pub order: f64,
    /// Whether the differences decrease monotonically.
    pub monotone: bool,
}

/// Estimate the convergence order of a quantity from at least three
/// levels refined by `ratio` per level.
pub fn convergence_study(levels: &[(f64, f64)], ratio: f64) -> Result<ConvergenceReport> {
    if levels.len() < 3 {
        return Err(Error::Precondition(
            "convergence study needs at least 3 levels".into(),
        ));
    }
    if !(ratio > 1.0) {
        return Err(Error::Precondition("refinement ratio must exceed 1".into()));
    }
    let resolutions: Vec<f64> = levels.iter().map(|l| l.0).collect();
    let values: Vec<f64> = levels.iter().map(|l| l.1).collect();
    let differences: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let monotone = differences.windows(2).all(|w| w[1] < w[0]);
    let last = differences.len() - 1;
    if differences[last] == 0.0 {
        return Ok(ConvergenceReport {
            resolutions,
            values,
            differences,
            order: f64::INFINITY,
            monotone,
        });
    }
    let order = (differences[last - 1] / differences[last]).ln() / ratio.ln();
    Ok(ConvergenceReport {
        resolutions,
        values,
        differences,
        order,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvp::{derivative_at_right, solve_logistic_bvp};
    use crate::model::{make_initial_bump, BumpFamily, Mode, TransitionKind};
    use crate::semiwave::{critical_speed, solve_semiwave};
    use crate::stefan::{SimulationSpec, StefanSolver, StepScheme, TimeStepRule};

    fn params(c: f64) -> ModelParams {
        ModelParams {
            d: 1.0,
            a: 1.0,
            a0: -1.0,
            b: 1.0,
            l0: 1.0,
            c,
            h0: 2.0,
            mode: Mode::Paper,
        }
    }

    fn reference_spec() -> BvpSpec {
        BvpSpec {
            xl: -20.0,
            xr: 0.0,
            left_value: 1.0,
            right_value: 0.0,
            drift: 0.5,
            diffusion: 1.0,
            competition: 1.0,
            coefficient: Coefficient::Constant(1.0),
        }
    }

    #[test]
    fn shooting_matches_finite_differences_on_the_reference_instance() {
        let spec = reference_spec();
        let oracle = oracle_bvp(&spec, 1e-10).unwrap();
        let fd = solve_logistic_bvp(&spec, 8192, 1e-11).unwrap();
        let fd_slope = derivative_at_right(&fd);
        assert!(
            (fd_slope - oracle.slope_right).abs() <= 1e-5,
            "fd {fd_slope} vs oracle {}",
            oracle.slope_right
        );
        assert!(oracle.slope_right < 0.0);
    }

    #[test]
    fn constant_case_is_exact_for_both_backends() {
        let spec = BvpSpec {
            right_value: 1.0,
            ..reference_spec()
        };
        let oracle = oracle_bvp(&spec, 1e-10).unwrap();
        assert_eq!(oracle.slope_right, 0.0);
        let fd = solve_logistic_bvp(&spec, 512, 1e-12).unwrap();
        let fd_slope = derivative_at_right(&fd);
        assert!(fd_slope.abs() < 1e-10);
    }

    #[test]
    fn grid_refinement_closes_on_the_oracle_slope_at_second_order() {
        let spec = reference_spec();
        let oracle = oracle_bvp(&spec, 1e-10).unwrap();
        let slope = |n: usize| derivative_at_right(&solve_logistic_bvp(&spec, n, 1e-12).unwrap());
        let err_coarse = (slope(512) - oracle.slope_right).abs();
        let err_fine = (slope(1024) - oracle.slope_right).abs();
        assert!(
            err_coarse / err_fine >= 3.0,
            "halving the mesh only improved {err_coarse:.3e} -> {err_fine:.3e}"
        );
    }

    #[test]
    fn semiwave_slope_against_shooting_to_six_digits() {
        let p = params(0.25);
        let wave = solve_semiwave(1.0, &p, 1e-11).unwrap();
        let spec = BvpSpec {
            xl: -wave.x_radius,
            xr: 0.0,
            left_value: 1.0,
            right_value: 0.0,
            drift: 1.0,
            diffusion: 1.0,
            competition: 1.0,
            coefficient: Coefficient::Constant(1.0),
        };
        let oracle = oracle_bvp(&spec, 1e-11).unwrap();
        // the finite-difference slope carries the O(dx^2) bias, so six
        // digits needs a Richardson pass over two resolutions
        let fine = crate::semiwave::solve_semiwave_on(1.0, &p, wave.x_radius, 2 * wave.values.len() - 2, 1e-11)
            .unwrap();
        let extrapolated = (4.0 * fine.slope0 - wave.slope0) / 3.0;
        assert!(
            (extrapolated - oracle.slope_right).abs() < 1e-6,
            "extrapolated {extrapolated} vs oracle {}",
            oracle.slope_right
        );
    }

    #[test]
    fn shift_identity_reproduced_by_the_shooting_backend() {
        let p = params(0.2);
        let climate = ClimateProfile::new(&p, TransitionKind::Linear);
        let spec_at = |l: f64| BvpSpec {
            xl: l.min(0.0) - 25.0,
            xr: l,
            left_value: 1.0,
            right_value: 0.0,
            drift: 0.2,
            diffusion: 1.0,
            competition: 1.0,
            coefficient: Coefficient::Climate {
                profile: climate,
                shift: 0.0,
            },
        };
        let at_zero = oracle_bvp(&spec_at(0.0), 1e-10).unwrap();
        let at_minus_two = oracle_bvp(&spec_at(-2.0), 1e-10).unwrap();
        assert!(
            (at_zero.slope_right - at_minus_two.slope_right).abs() < 1e-7,
            "shift identity: slopes {} vs {}",
            at_zero.slope_right,
            at_minus_two.slope_right
        );
    }

    #[test]
    fn oracle_and_main_stepper_agree_on_the_front_position() {
        let p = params(0.25);
        let climate = ClimateProfile::new(&p, TransitionKind::Linear);
        let mu = ExpansionRate::constant(&p, 1.0);
        let u0 = make_initial_bump(2.0, 1.0, BumpFamily::Cosine).unwrap();

        let main = StefanSolver::new(&p, &climate, &mu, 128).unwrap();
        // 100 fixed steps of the main solver
        let mut state = main.initial_state(&u0);
        for _ in 0..100 {
            state = main.step(&state, 1e-3, StepScheme::Basic).unwrap();
        }
        let oracle_short = oracle_simulate(
            &p,
            &climate,
            &mu,
            &u0,
            128,
            &OracleSimSpec::new(state.t, state.t / 4.0),
        )
        .unwrap();
        let rel = (state.h - oracle_short.final_h).abs() / oracle_short.final_h;
        assert!(rel < 0.002, "after 100 steps, relative front gap {rel:.2e}");

        // a longer horizon at the 1% acceptance tolerance
        let out = main
            .simulate(&SimulationSpec {
                u0: u0.clone(),
                t_max: 5.0,
                step: TimeStepRule::Fixed(1e-3),
                scheme: StepScheme::Basic,
                record_dt: 0.5,
                snapshot_dt: None,
                c0: None,
                gap_margin: 10.0,
            })
            .unwrap();
        let oracle_long =
            oracle_simulate(&p, &climate, &mu, &u0, 128, &OracleSimSpec::new(5.0, 1.0)).unwrap();
        let rel = (out.final_state.h - oracle_long.final_h).abs() / oracle_long.final_h;
        assert!(rel < 0.01, "at T = 5, relative front gap {rel:.2e}");
    }

    #[test]
    fn oracle_mass_decreases_without_reaction() {
        let p = ModelParams {
            d: 1.0,
            a: 0.0,
            a0: 0.0,
            b: 0.0,
            l0: 1.0,
            c: 0.5,
            h0: 2.0,
            mode: Mode::Relaxed,
        };
        let climate = ClimateProfile::new(&p, TransitionKind::Linear);
        let mu = ExpansionRate::constant(&p, 1.0);
        let u0 = make_initial_bump(2.0, 1.0, BumpFamily::Cosine).unwrap();
        let run = |t: f64| {
            oracle_simulate(&p, &climate, &mu, &u0, 64, &OracleSimSpec::new(t, t / 2.0))
                .unwrap()
                .final_mass
        };
        let initial_mass = 2.0 * 2.0 / std::f64::consts::PI; // int sigma cos(pi x / (2 h0))
        let masses = [run(0.5), run(1.0), run(2.0)];
        assert!(masses[0] < initial_mass);
        assert!(masses[1] < masses[0]);
        assert!(masses[2] < masses[1]);
    }

    #[test]
    fn homogeneous_front_speed_approaches_the_critical_speed() {
        // relaxed homogeneous reduction: A == a, mu == mu(a)
        let p = ModelParams {
            d: 1.0,
            a: 1.0,
            a0: 1.0,
            b: 1.0,
            l0: 1.0,
            c: 0.25,
            h0: 2.0,
            mode: Mode::Relaxed,
        };
        let climate = ClimateProfile::new(&p, TransitionKind::Linear);
        let mu = ExpansionRate::constant(&p, 1.0);
        let c0 = critical_speed(&p, &mu, 1e-8).unwrap().c0;
        let u0 = make_initial_bump(2.0, 1.0, BumpFamily::Cosine).unwrap();
        let t_max = 200.0 / c0;
        let run = oracle_simulate(
            &p,
            &climate,
            &mu,
            &u0,
            96,
            &OracleSimSpec::new(t_max, t_max / 16.0),
        )
        .unwrap();
        // trailing-half slope cancels the O(1)/T offset of h(T)/T
        let half = run.trajectory.sample_at_or_before(t_max / 2.0);
        let last = run.trajectory.final_sample();
        let speed = (last.h - half.h) / (last.t - half.t);
        assert!(
            (speed - c0).abs() / c0 < 0.02,
            "front speed {speed} vs c0 {c0}"
        );
        // the raw average also converges, just more slowly
        assert!((run.final_h / t_max - c0).abs() / c0 < 0.05);
    }

    #[test]
    fn convergence_study_recovers_known_orders() {
        // synthetic second-order data f(h) = 1 + h^2
        let levels = [(64.0, 1.0 + 1.0 / 64.0f64.powi(2) * 100.0),
            (128.0, 1.0 + 1.0 / 128.0f64.powi(2) * 100.0),
            (256.0, 1.0 + 1.0 / 256.0f64.powi(2) * 100.0)];
        let report = convergence_study(&levels, 2.0).unwrap();
        assert!((report.order - 2.0).abs() < 1e-6);
        assert!(report.monotone);

        // identical values at every level have no finite order
        let flat = [(1.0, 3.5), (2.0, 3.5), (4.0, 3.5)];
        let report = convergence_study(&flat, 2.0).unwrap();
        assert!(report.order.is_infinite());
    }

    #[test]
    fn determinism_identical_configs_zero_difference() {
        let spec = reference_spec();
        let a = derivative_at_right(&solve_logistic_bvp(&spec, 1024, 1e-11).unwrap());
        let b = derivative_at_right(&solve_logistic_bvp(&spec, 1024, 1e-11).unwrap());
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
