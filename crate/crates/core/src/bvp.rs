//! Finite-difference solver for logistic two-point boundary value problems
//!
//! ```text
//!   -d v'' - c v' = kappa(x) v - b v^2,   xl < x < xr,
//!   v(xl) = left_value,  v(xr) = right_value,
//! ```
//!
//! plus the controlled truncation of semi-infinite domains. Centered
//! second-order differences on a uniform grid; Newton iteration with a
//! tridiagonal Jacobian and residual-monotone damping.

use crate::model::{ClimateProfile, ModelParams};
use crate::output::{digest_hex, fmt_sig};
use crate::{Error, Result};

/// Growth-rate coefficient `kappa(x)` of the boundary value problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    /// A climate profile evaluated with a shift: `kappa(x) = A(x - shift)`.
    Climate { profile: ClimateProfile, shift: f64 },
}

impl Coefficient {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Coefficient::Constant(k) => *k,
            Coefficient::Climate { profile, shift } => profile.eval(x - shift),
        }
    }

    fn canonical(&self) -> String {
        match self {
            Coefficient::Constant(k) => format!("const:{}", fmt_sig(*k)),
            Coefficient::Climate { profile, shift } => format!(
                "climate:{},{},{},{},{}",
                fmt_sig(profile.favourable_rate()),
                fmt_sig(profile.unfavourable_rate()),
                fmt_sig(profile.lipschitz_bound()),
                profile.kind(),
                fmt_sig(*shift)
            ),
        }
    }
}

/// One boundary value problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct BvpSpec {
    pub xl: f64,
    pub xr: f64,
    pub left_value: f64,
    pub right_value: f64,
    /// Drift speed `c` multiplying `v'`.
    pub drift: f64,
    pub diffusion: f64,
    pub competition: f64,
    pub coefficient: Coefficient,
}

impl BvpSpec {
    fn check(&self) -> Result<()> {
        if !(self.xl < self.xr) {
            return Err(Error::Precondition(format!(
                "bvp interval requires xl < xr, got [{}, {}]",
                self.xl, self.xr
            )));
        }
        if self.left_value < 0.0 || self.right_value < 0.0 {
            return Err(Error::Precondition(
                "bvp boundary values must be nonnegative".into(),
            ));
        }
        if !(self.diffusion > 0.0) || !(self.competition > 0.0) {
            return Err(Error::Precondition(
                "bvp requires d > 0 and b > 0".into(),
            ));
        }
        Ok(())
    }

    /// Canonical text identifying the problem, hashed into profile headers.
    pub fn canonical(&self) -> String {
        format!(
            "bvp;xl={};xr={};left={};right={};c={};d={};b={};kappa={}",
            fmt_sig(self.xl),
            fmt_sig(self.xr),
            fmt_sig(self.left_value),
            fmt_sig(self.right_value),
            fmt_sig(self.drift),
            fmt_sig(self.diffusion),
            fmt_sig(self.competition),
            self.coefficient.canonical()
        )
    }

    pub fn hash(&self) -> String {
        digest_hex(&self.canonical())
    }
}

/// Which solution branch the Newton iteration landed on. For zero-zero
/// boundary data on short intervals the only solution is identically zero;
/// that outcome is reported, never silently returned as a wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Positive,
    Trivial,
}

/// A converged discrete solution.
#[derive(Debug, Clone)]
pub struct Profile {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub spec_hash: String,
    pub iterations: usize,
    pub residual: f64,
    pub branch: Branch,
}

impl Profile {
    pub fn dx(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    /// Linear interpolation, clamped to the boundary values outside the grid.
    pub fn interp(&self, x: f64) -> f64 {
        let dx = self.dx();
        let pos = (x - self.grid[0]) / dx;
        if pos <= 0.0 {
            return self.values[0];
        }
        let last = self.values.len() - 1;
        if pos >= last as f64 {
            return self.values[last];
        }
        let i = pos.floor() as usize;
        let w = pos - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

const MAX_NEWTON_ITERATIONS: usize = 80;
const MAX_DAMPING_HALVINGS: usize = 25;

/// Solve the logistic BVP with `n` intervals (n+1 grid points).
///
/// The positive branch is sought first: the initial iterate is the linear
/// interpolation of the boundary data floored at a positive fraction of the
/// local equilibrium `max(kappa, 0)/b`. Uniqueness of the positive solution
/// makes any converged positive iterate the answer; convergence onto the
/// zero branch is reported via [`Branch::Trivial`].
pub fn solve_logistic_bvp(spec: &BvpSpec, n: usize, tol: f64) -> Result<Profile> {
    spec.check()?;
    if n < 16 {
        return Err(Error::Precondition(format!(
            "bvp grid needs n >= 16 intervals, got {n}"
        )));
    }

    let dx = (spec.xr - spec.xl) / n as f64;
    let grid: Vec<f64> = (0..=n).map(|i| spec.xl + i as f64 * dx).collect();
    let kappa: Vec<f64> = grid.iter().map(|&x| spec.coefficient.eval(x)).collect();
    let kappa_max = kappa.iter().cloned().fold(0.0f64, f64::max);

    let d = spec.diffusion;
    let b = spec.competition;
    let c = spec.drift;
    let inv_dx2 = 1.0 / (dx * dx);
    let inv_2dx = 1.0 / (2.0 * dx);

    // value scale for round-off floor and branch detection
    let scale = spec
        .left_value
        .max(spec.right_value)
        .max(kappa_max / b)
        .max(f64::MIN_POSITIVE);
    let round_floor =
        64.0 * f64::EPSILON * scale * (2.0 * d * inv_dx2 + c.abs() * inv_2dx + kappa_max + 2.0 * b * scale);
    let target = tol.max(round_floor);

    let mut v = vec![0.0; n + 1];
    v[0] = spec.left_value;
    v[n] = spec.right_value;
    for i in 1..n {
        let t = i as f64 / n as f64;
        let lin = spec.left_value * (1.0 - t) + spec.right_value * t;
        let floor = 0.9 * kappa[i].max(0.0) / b;
        v[i] = lin.max(floor);
    }

    let residual = |v: &[f64], out: &mut [f64]| {
        for i in 1..n {
            out[i] = d * (v[i + 1] - 2.0 * v[i] + v[i - 1]) * inv_dx2
                + c * (v[i + 1] - v[i - 1]) * inv_2dx
                + kappa[i] * v[i]
                - b * v[i] * v[i];
        }
    };
    let inf_norm = |f: &[f64]| f[1..n].iter().fold(0.0f64, |m, x| m.max(x.abs()));

    let mut f = vec![0.0; n + 1];
    residual(&v, &mut f);
    let mut fnorm = inf_norm(&f);

    let mut lower = vec![0.0; n + 1];
    let mut diag = vec![0.0; n + 1];
    let mut upper = vec![0.0; n + 1];
    let mut rhs = vec![0.0; n + 1];
    let mut trial = vec![0.0; n + 1];
    let mut ftrial = vec![0.0; n + 1];

    let mut iterations = 0;
    while fnorm > target {
        if iterations >= MAX_NEWTON_ITERATIONS {
            return Err(Error::NonConvergence {
                context: "bvp Newton iteration".into(),
                iterations,
                residual: fnorm,
            });
        }
        iterations += 1;

        for i in 1..n {
            lower[i] = d * inv_dx2 - c * inv_2dx;
            diag[i] = -2.0 * d * inv_dx2 + kappa[i] - 2.0 * b * v[i];
            upper[i] = d * inv_dx2 + c * inv_2dx;
            rhs[i] = -f[i];
        }
        solve_tridiagonal(&mut lower[1..n], &mut diag[1..n], &mut upper[1..n], &mut rhs[1..n])?;

        // damped update: halve the step until the residual decreases
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_DAMPING_HALVINGS {
            trial[0] = v[0];
            trial[n] = v[n];
            for i in 1..n {
                trial[i] = v[i] + lambda * rhs[i];
            }
            residual(&trial, &mut ftrial);
            let fnew = inf_norm(&ftrial);
            if fnew < fnorm || fnew <= target {
                v.copy_from_slice(&trial);
                f.copy_from_slice(&ftrial);
                fnorm = fnew;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence {
                context: "bvp Newton damping".into(),
                iterations,
                residual: fnorm,
            });
        }
    }

    let min_value = v.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_value < -1e-10 * scale {
        return Err(Error::Breakdown(format!(
            "bvp solution has negative values (min {:.3e})",
            min_value
        )));
    }
    for value in v.iter_mut() {
        if *value < 0.0 {
            *value = 0.0;
        }
    }

    let branch = if v.iter().cloned().fold(0.0f64, f64::max) > 1e-8 * scale {
        Branch::Positive
    } else {
        Branch::Trivial
    };

    Ok(Profile {
        grid,
        values: v,
        spec_hash: spec.hash(),
        iterations,
        residual: fnorm,
        branch,
    })
}

/// Thomas algorithm; slices are the interior bands (same length).
pub(crate) fn solve_tridiagonal(
    lower: &mut [f64],
    diag: &mut [f64],
    upper: &mut [f64],
    rhs: &mut [f64],
) -> Result<()> {
    let m = diag.len();
    for i in 1..m {
        if diag[i - 1] == 0.0 {
            return Err(Error::Breakdown("tridiagonal pivot is zero".into()));
        }
        let w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    if diag[m - 1] == 0.0 {
        return Err(Error::Breakdown("tridiagonal pivot is zero".into()));
    }
    rhs[m - 1] /= diag[m - 1];
    for i in (0..m - 1).rev() {
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
    }
    Ok(())
}

/// Second-order one-sided estimate of `v'(xr)`. Exact for polynomials of
/// degree at most two.
pub fn derivative_at_right(p: &Profile) -> f64 {
    let n = p.values.len();
    assert!(n >= 4, "derivative_at_right needs at least 4 grid points");
    let dx = p.dx();
    (3.0 * p.values[n - 1] - 4.0 * p.values[n - 2] + p.values[n - 3]) / (2.0 * dx)
}

/// Grid points per diffusive length scale used when an operation has to
/// choose its own resolution.
pub const POINTS_PER_LENGTH_SCALE: usize = 512;

const TRUNCATION_CAP_SCALES: f64 = 4000.0;

/// Truncation radius for the semi-infinite left domain: the smallest `X`
/// in a doubling ladder from `20 sqrt(d/a)` such that doubling `X` changes
/// the right-end slope of the truncated semi-wave by less than `tol`.
/// The grid spacing is held fixed across the ladder so the certificate
/// measures truncation error, not discretization error.
pub fn left_truncation_radius(params: &ModelParams, c: f64, tol: f64) -> Result<f64> {
    if !(c > 0.0) || !(tol > 0.0) {
        return Err(Error::Precondition(
            "left_truncation_radius requires c > 0 and tol > 0".into(),
        ));
    }
    let scale = params.length_scale();
    let dx = scale / POINTS_PER_LENGTH_SCALE as f64;
    let slope_at = |x_radius: f64| -> Result<f64> {
        let n = (x_radius / dx).ceil() as usize;
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
        let profile = solve_logistic_bvp(&spec, n.max(16), tol.min(1e-10))?;
        Ok(derivative_at_right(&profile))
    };

    let mut x_radius = 20.0 * scale;
    let cap = TRUNCATION_CAP_SCALES * scale;
    let mut slope = slope_at(x_radius)?;
    while x_radius <= cap {
        let slope_doubled = slope_at(2.0 * x_radius)?;
        if (slope_doubled - slope).abs() < tol {
            return Ok(x_radius);
        }
        x_radius *= 2.0;
        slope = slope_doubled;
    }
    Err(Error::TruncationCap { cap, tol })
}
