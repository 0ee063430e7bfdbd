//! The forced semi-wave `v_L` and the critical shift `L0`.
//!
//! For `0 < c <= c0` and any shift `L`, the frame-fixed problem
//!
//! ```text
//!   -d v'' - c v' = A(x) v - b v^2,   -inf < x < L,   v(L) = 0
//! ```
//!
//! has a unique positive solution `v_L` with `v_L(-inf) = a/b` and
//! `v_L' < 0`. The critical shift is the unique `L0 >= 0` with
//! `-mu(A(L0)) v_{L0}'(L0) = c`; it vanishes exactly when `c = c0`.

use crate::bvp::{
    derivative_at_right, left_truncation_radius, solve_logistic_bvp, Branch, BvpSpec, Coefficient,
    Profile, POINTS_PER_LENGTH_SCALE,
};
use crate::model::{ClimateProfile, ExpansionRate, ModelParams};
use crate::semiwave::{critical_speed, CriticalSpeed};
use crate::{Error, Result};

/// A computed forced wave for one shift `L`.
#[derive(Debug, Clone)]
pub struct ForcedWave {
    /// The shift `L`.
    pub shift: f64,
    /// Discrete profile on `[min(0, L) - X, L]`.
    pub profile: Profile,
    /// One-sided estimate of `v_L'(L)`.
    pub slope_end: f64,
}

impl ForcedWave {
    /// Linear interpolation with plateau extension (`a/b` to the left of
    /// the truncated domain, `0` to the right of `L`).
    pub fn interp(&self, x: f64) -> f64 {
        if x >= self.shift {
            return 0.0;
        }
        self.profile.interp(x)
    }
}

/// Numerical settings for the forced-wave computations.
#[derive(Debug, Clone, Copy)]
pub struct ForcedOptions {
    pub points_per_scale: usize,
    pub residual_tol: f64,
    pub trunc_tol: f64,
}

impl Default for ForcedOptions {
    fn default() -> Self {
        Self {
            points_per_scale: POINTS_PER_LENGTH_SCALE,
            residual_tol: 1e-10,
            trunc_tol: 1e-8,
        }
    }
}

/// Result of the critical-shift search, with its residual certificate.
#[derive(Debug, Clone)]
pub struct CriticalShift {
    pub l0: f64,
    /// `|-mu(A(L0)) v'(L0) - c|` at the returned shift.
    pub residual: f64,
    pub iterations: usize,
}

/// One row of a slope monotonicity scan.
#[derive(Debug, Clone, Copy)]
pub struct SlopeSample {
    pub shift: f64,
    pub slope: f64,
}

/// Table produced by [`ForcedWaveSolver::monotonicity_scan`].
#[derive(Debug, Clone)]
pub struct SlopeScan {
    pub samples: Vec<SlopeSample>,
    /// Index pair of the first violating adjacent entries, if any.
    pub violation: Option<(usize, usize)>,
}

impl SlopeScan {
    pub fn strictly_increasing(&self) -> bool {
        self.violation.is_none()
    }
}

impl std::fmt::Display for SlopeScan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:>14}  {:>18}", "L", "v_L'(L)")?;
        for s in &self.samples {
            writeln!(f, "{:>14.6}  {:>18.12e}", s.shift, s.slope)?;
        }
        match self.violation {
            None => writeln!(f, "slopes strictly increasing"),
            Some((i, j)) => writeln!(
                f,
                "violation between entries {i} and {j}: {:.12e} !< {:.12e}",
                self.samples[i].slope, self.samples[j].slope
            ),
        }
    }
}

/// Solver context for one `(params, A, mu, c)` quadruple: holds the
/// critical speed and a truncation radius valid for every shift.
#[derive(Debug, Clone)]
pub struct ForcedWaveSolver {
    params: ModelParams,
    climate: ClimateProfile,
    mu: ExpansionRate,
    c: f64,
    critical: CriticalSpeed,
    x_radius: f64,
    dx: f64,
    options: ForcedOptions,
}

impl ForcedWaveSolver {
    pub fn new(
        params: &ModelParams,
        climate: &ClimateProfile,
        mu: &ExpansionRate,
        c: f64,
    ) -> Result<Self> {
        Self::with_options(params, climate, mu, c, ForcedOptions::default())
    }

    pub fn with_options(
        params: &ModelParams,
        climate: &ClimateProfile,
        mu: &ExpansionRate,
        c: f64,
        options: ForcedOptions,
    ) -> Result<Self> {
        let critical = critical_speed(params, mu, options.trunc_tol.max(1e-9))?;
        // the same window that find_l0 treats as "c = c0 exactly"
        if !(c > 0.0) || c > critical.c0 * (1.0 + 1e-8) {
            return Err(Error::Precondition(format!(
                "the forced semi-wave exists only for 0 < c <= c0; got c = {c}, c0 = {}",
                critical.c0
            )));
        }
        let x_radius = left_truncation_radius(params, c, options.trunc_tol)?;
        let dx = params.length_scale() / options.points_per_scale as f64;
        Ok(Self {
            params: *params,
            climate: *climate,
            mu: *mu,
            c,
            critical,
            x_radius,
            dx,
            options,
        })
    }

    pub fn critical_speed(&self) -> &CriticalSpeed {
        &self.critical
    }

    pub fn shift_speed(&self) -> f64 {
        self.c
    }

    pub fn x_radius(&self) -> f64 {
        self.x_radius
    }

    /// Solve the truncated problem for one shift. The same generic path is
    /// used for every `L`; for `L < 0` the coefficient is constant on the
    /// whole domain and the shift identity `v_L(x) = v_0(x - L)` emerges
    /// rather than being imposed.
    pub fn solve(&self, shift: f64) -> Result<ForcedWave> {
        let xl = shift.min(0.0) - self.x_radius;
        let n = ((shift - xl) / self.dx).ceil() as usize;
        let spec = BvpSpec {
            xl,
            xr: shift,
            left_value: self.params.carrying_capacity(),
            right_value: 0.0,
            drift: self.c,
            diffusion: self.params.d,
            competition: self.params.b,
            coefficient: Coefficient::Climate {
                profile: self.climate,
                shift: 0.0,
            },
        };
        let profile = solve_logistic_bvp(&spec, n.max(16), self.options.residual_tol)?;
        if profile.branch != Branch::Positive {
            return Err(Error::Breakdown(format!(
                "forced wave at L = {shift} converged to the zero branch"
            )));
        }
        let slack = 1e-10 * self.params.carrying_capacity();
        for w in profile.values.windows(2) {
            if w[1] > w[0] + slack {
                return Err(Error::Breakdown(format!(
                    "forced wave at L = {shift} is not decreasing (rise {:.3e})",
                    w[1] - w[0]
                )));
            }
        }
        let slope_end = derivative_at_right(&profile);
        Ok(ForcedWave {
            shift,
            profile,
            slope_end,
        })
    }

    /// `v_L'(L)`, strictly increasing in `L` on `[0, inf)`.
    pub fn slope_at(&self, shift: f64) -> Result<f64> {
        Ok(self.solve(shift)?.slope_end)
    }

    /// The Stefan mismatch `g(L) = -mu(A(L)) v_L'(L) - c` whose root is `L0`.
    pub fn stefan_mismatch(&self, shift: f64) -> Result<f64> {
        let slope = self.slope_at(shift)?;
        Ok(-self.mu.eval(self.climate.eval(shift)) * slope - self.c)
    }

    /// Find the critical shift `L0 >= 0` with `|g(L0)| <= tol`.
    ///
    /// `g` is strictly decreasing on the bracket (checked on the doubling
    /// ladder; a violation is reported, never guessed around), `g(0) > 0`
    /// for `c < c0`, and `g -> -c < 0` as `L` grows, so bisection is valid.
    pub fn find_l0(&self, tol: f64) -> Result<CriticalShift> {
        // at c = c0 the root sits exactly on the bracket edge
        if (self.c - self.critical.c0).abs() <= 1e-8 * self.critical.c0.max(1.0) {
            let residual = self.stefan_mismatch(0.0)?.abs();
            return Ok(CriticalShift {
                l0: 0.0,
                residual,
                iterations: 0,
            });
        }

        let mut ladder = vec![(0.0, self.stefan_mismatch(0.0)?)];
        if ladder[0].1 <= 0.0 {
            return Err(Error::Bracket(format!(
                "g(0) = {:.6e} <= 0 for c = {} < c0 = {}; scan ladder: {:?}",
                ladder[0].1, self.c, self.critical.c0, ladder
            )));
        }
        let cap = 64.0 * (self.params.l0 + self.params.length_scale());
        let mut hi = self.params.l0;
        loop {
            let g = self.stefan_mismatch(hi)?;
            ladder.push((hi, g));
            if g < 0.0 {
                break;
            }
            hi *= 2.0;
            if hi > cap {
                return Err(Error::Bracket(format!(
                    "no sign change of g(L) up to L = {cap}; scan ladder: {ladder:?}"
                )));
            }
        }
        for w in ladder.windows(2) {
            if w[1].1 >= w[0].1 {
                return Err(Error::Bracket(format!(
                    "g(L) is not strictly decreasing on the scan ladder: \
                     g({}) = {:.6e}, g({}) = {:.6e}; full ladder: {ladder:?}",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }

        let (mut lo, mut hi) = (ladder[ladder.len() - 2].0, ladder[ladder.len() - 1].0);
        let mut iterations = 0;
        let mut best = (lo, f64::INFINITY);
        while iterations < 200 {
            iterations += 1;
            let mid = 0.5 * (lo + hi);
            let g = self.stefan_mismatch(mid)?;
            if g.abs() < best.1.abs() {
                best = (mid, g);
            }
            if g.abs() <= tol {
                return Ok(CriticalShift {
                    l0: mid,
                    residual: g.abs(),
                    iterations,
                });
            }
            if g > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Err(Error::NonConvergence {
            context: format!(
                "critical-shift bisection (best |g| = {:.3e} at L = {:.8})",
                best.1.abs(),
                best.0
            ),
            iterations,
            residual: best.1.abs(),
        })
    }

    /// Evaluate `v_L'(L)` along a sorted list of shifts and assert strict
    /// increase. Entries below zero are compared through the shift
    /// identity (their slope equals the slope at `L = 0`), so equality is
    /// accepted there.
    pub fn monotonicity_scan(&self, shifts: &[f64]) -> Result<SlopeScan> {
        if shifts.len() < 2 {
            return Err(Error::Precondition(
                "monotonicity scan needs at least 2 shifts".into(),
            ));
        }
        if shifts.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Precondition("shift list must be sorted".into()));
        }
        let mut samples = Vec::with_capacity(shifts.len());
        for &shift in shifts {
            samples.push(SlopeSample {
                shift,
                slope: self.slope_at(shift)?,
            });
        }
        // equality tolerance tied to the discretization scale
        let tie = 1e-7 * self.params.carrying_capacity() / self.params.length_scale();
        let mut violation = None;
        for i in 0..samples.len() - 1 {
            let (a, b) = (samples[i], samples[i + 1]);
            if b.shift.max(0.0) > a.shift.max(0.0) {
                if b.slope <= a.slope {
                    violation = Some((i, i + 1));
                    break;
                }
            } else if (b.slope - a.slope).abs() > tie {
                violation = Some((i, i + 1));
                break;
            }
        }
        Ok(SlopeScan { samples, violation })
    }
}
