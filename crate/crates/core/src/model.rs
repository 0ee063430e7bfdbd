//! Problem parameters, the climate and expansion-rate functions, initial
//! data construction, and validation.
//!
//! The model is the logistic free boundary problem
//!
//! ```text
//!   u_t = d u_xx + A(x - c t) u - b u^2,   0 < x < h(t),
//!   u_x(0,t) = u(h(t),t) = 0,
//!   h'(t) = -mu(A(h(t) - c t)) u_x(h(t), t),
//! ```
//!
//! where the climate profile `A` equals `a` behind the shift, `a0` ahead of
//! it, and transitions monotonically over a band of width `l0`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

/// Parameter regime. Paper mode enforces `a0 < 0 < a` (favourable
/// environment replacing unfavourable). Relaxed mode only requires
/// `a0 <= a` and is used for homogeneous-environment reductions and
/// degenerate oracle checks; every output records which mode produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Paper,
    Relaxed,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Paper => write!(f, "paper"),
            Mode::Relaxed => write!(f, "relaxed"),
        }
    }
}

/// The constants defining one problem instance.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelParams {
    /// Diffusion coefficient (length^2 / time).
    pub d: f64,
    /// Favourable growth rate (1/time).
    pub a: f64,
    /// Unfavourable growth rate (1/time); negative in paper mode.
    pub a0: f64,
    /// Intraspecific competition (1 / (density * time)).
    pub b: f64,
    /// Transition band width (length).
    pub l0: f64,
    /// Climate shift speed (length/time).
    pub c: f64,
    /// Initial range length (length).
    pub h0: f64,
    pub mode: Mode,
}

impl ModelParams {
    /// Carrying capacity `a/b` of the favourable environment.
    pub fn carrying_capacity(&self) -> f64 {
        self.a / self.b
    }

    /// `2 sqrt(a d)`, the upper end of the admissible semi-wave speed range.
    pub fn speed_bound(&self) -> f64 {
        2.0 * (self.a * self.d).sqrt()
    }

    /// `pi/2 * sqrt(d/a)`: once the range reaches this length, vanishing is
    /// impossible and spreading is certified.
    pub fn critical_length(&self) -> f64 {
        FRAC_PI_2 * (self.d / self.a).sqrt()
    }

    /// Diffusive length scale `sqrt(d/a)` used to size grids and domains.
    pub fn length_scale(&self) -> f64 {
        (self.d / self.a).sqrt()
    }
}

/// Interpolation used across the transition band of the climate profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionKind {
    /// Piecewise-linear ramp; Lipschitz constant `(a - a0)/l0`.
    Linear,
    /// Cubic smoothstep; strictly monotone with Lipschitz constant
    /// `1.5 (a - a0)/l0`.
    Cubic,
}

impl fmt::Display for TransitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransitionKind::Linear => write!(f, "linear"),
            TransitionKind::Cubic => write!(f, "cubic"),
        }
    }
}

/// The shifted growth-rate profile `A(xi)`: equal to `a` for `xi <= 0`,
/// `a0` for `xi >= l0`, monotone in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClimateProfile {
    a: f64,
    a0: f64,
    l0: f64,
    kind: TransitionKind,
}

impl ClimateProfile {
    pub fn new(params: &ModelParams, kind: TransitionKind) -> Self {
        Self {
            a: params.a,
            a0: params.a0,
            l0: params.l0,
            kind,
        }
    }

    /// Evaluate `A(xi)`. Plateau values are exact outside `[0, l0]`.
    pub fn eval(&self, xi: f64) -> f64 {
        if xi <= 0.0 {
            self.a
        } else if xi >= self.l0 {
            self.a0
        } else {
            let t = xi / self.l0;
            let s = match self.kind {
                TransitionKind::Linear => t,
                TransitionKind::Cubic => t * t * (3.0 - 2.0 * t),
            };
            self.a + (self.a0 - self.a) * s
        }
    }

    /// A Lipschitz constant valid on the whole line.
    pub fn lipschitz_bound(&self) -> f64 {
        let ramp = (self.a - self.a0).abs() / self.l0;
        match self.kind {
            TransitionKind::Linear => ramp,
            TransitionKind::Cubic => 1.5 * ramp,
        }
    }

    pub fn kind(&self) -> TransitionKind {
        self.kind
    }

    pub fn favourable_rate(&self) -> f64 {
        self.a
    }

    pub fn unfavourable_rate(&self) -> f64 {
        self.a0
    }
}

/// The front expansion rate `mu(zeta)` for `zeta in [a0, a]`: continuous,
/// nondecreasing, with `0 < mu(a0) <= mu(a)`. Default family is affine,
/// anchored at `mu(a0) = mu0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionRate {
    mu0: f64,
    slope: f64,
    zeta_lo: f64,
    zeta_hi: f64,
}

impl ExpansionRate {
    pub fn affine(params: &ModelParams, mu0: f64, slope: f64) -> Self {
        Self {
            mu0,
            slope,
            zeta_lo: params.a0,
            zeta_hi: params.a,
        }
    }

    /// Constant expansion rate, `mu == value` on the whole range.
    pub fn constant(params: &ModelParams, value: f64) -> Self {
        Self::affine(params, value, 0.0)
    }

    /// Evaluate `mu(zeta)`, clamping the argument into `[a0, a]`.
    pub fn eval(&self, zeta: f64) -> f64 {
        self.eval_checked(zeta).0
    }

    /// As [`eval`](Self::eval), also reporting whether the argument had
    /// to be clamped into the admissible range.
    pub fn eval_checked(&self, zeta: f64) -> (f64, bool) {
        let clamped = zeta.clamp(self.zeta_lo, self.zeta_hi);
        (self.mu0 + self.slope * (clamped - self.zeta_lo), clamped != zeta)
    }

    /// `mu(a)`, the value entering the critical-speed relation.
    pub fn at_favourable(&self) -> f64 {
        self.mu0 + self.slope * (self.zeta_hi - self.zeta_lo)
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }
}

/// Analytic initial-bump families `u0 = sigma * phi(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BumpFamily {
    /// `phi(x) = cos(pi x / (2 h0))`.
    Cosine,
    /// `phi(x) = 1 - (x/h0)^2`.
    Parabola,
}

impl BumpFamily {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "cosine" => Some(BumpFamily::Cosine),
            "parabola" => Some(BumpFamily::Parabola),
            _ => None,
        }
    }

    fn shape(&self, x: f64, h0: f64) -> f64 {
        match self {
            BumpFamily::Cosine => (FRAC_PI_2 * x / h0).cos(),
            BumpFamily::Parabola => 1.0 - (x / h0) * (x / h0),
        }
    }
}

impl fmt::Display for BumpFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BumpFamily::Cosine => write!(f, "cosine"),
            BumpFamily::Parabola => write!(f, "parabola"),
        }
    }
}

/// Initial density `u0` on `[0, h0]`, sampled on a uniform grid, with the
/// analytic descriptor kept when constructed from a bump family.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    h0: f64,
    values: Vec<f64>,
    analytic: Option<(BumpFamily, f64)>,
}

impl InitialData {
    const DEFAULT_SAMPLES: usize = 2049;

    pub fn from_samples(h0: f64, values: Vec<f64>) -> Self {
        Self {
            h0,
            values,
            analytic: None,
        }
    }

    pub fn h0(&self) -> f64 {
        self.h0
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid_spacing(&self) -> f64 {
        self.h0 / (self.values.len() - 1) as f64
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn analytic(&self) -> Option<(BumpFamily, f64)> {
        self.analytic
    }

    /// Evaluate `u0(x)`: analytically when a family descriptor is present,
    /// by linear interpolation of the samples otherwise.
    pub fn eval(&self, x: f64) -> f64 {
        if let Some((family, sigma)) = self.analytic {
            return sigma * family.shape(x.clamp(0.0, self.h0), self.h0);
        }
        let dx = self.grid_spacing();
        let pos = (x / dx).clamp(0.0, (self.values.len() - 1) as f64);
        let i = (pos.floor() as usize).min(self.values.len() - 2);
        let w = pos - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Pointwise scaling `u0 -> factor * u0`, preserving the analytic
    /// descriptor. Used by comparison-principle runs.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            h0: self.h0,
            values: self.values.iter().map(|v| v * factor).collect(),
            analytic: self.analytic.map(|(f, s)| (f, s * factor)),
        }
    }
}

/// Build `u0 = sigma * phi` for a named bump family. The cosine family
/// satisfies the initial-data class exactly: `u0'(0) = u0(h0) = 0`,
/// `u0'(h0) < 0`, `u0 > 0` on `[0, h0)`.
pub fn make_initial_bump(
    h0: f64,
    sigma: f64,
    family: BumpFamily,
) -> crate::Result<InitialData> {
    if !(h0 > 0.0) {
        return Err(crate::Error::Precondition(format!(
            "initial bump requires h0 > 0, got {h0}"
        )));
    }
    if !(sigma > 0.0) {
        return Err(crate::Error::Precondition(format!(
            "initial bump requires sigma > 0, got {sigma}"
        )));
    }
    let n = InitialData::DEFAULT_SAMPLES;
    let dx = h0 / (n - 1) as f64;
    let mut values: Vec<f64> = (0..n)
        .map(|i| sigma * family.shape(i as f64 * dx, h0))
        .collect();
    // the boundary value is zero by construction; pin it against rounding
    *values.last_mut().unwrap() = 0.0;
    Ok(InitialData {
        h0,
        values,
        analytic: Some((family, sigma)),
    })
}

/// Parse a bump family id, failing on unknown names.
pub fn bump_family(name: &str) -> crate::Result<BumpFamily> {
    BumpFamily::parse(name).ok_or_else(|| {
        crate::Error::Config(format!(
            "unknown initial bump family '{name}' (known: cosine, parabola)"
        ))
    })
}

/// One violated invariant, with its location in the inputs.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

/// Report-valued outcome of [`validate`]; empty means pass.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, location: &str, message: String) {
        self.violations.push(Violation {
            location: location.to_string(),
            message,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pass() {
            return write!(f, "pass");
        }
        for v in &self.violations {
            writeln!(f, "  [{}] {}", v.location, v.message)?;
        }
        Ok(())
    }
}

/// Check every model invariant and the initial-data class conditions.
/// Derivative conditions are tested with second-order one-sided
/// differences at tolerance 1e-6 relative to the grid slope scale.
pub fn validate(
    params: &ModelParams,
    profile: &ClimateProfile,
    mu: &ExpansionRate,
    u0: &InitialData,
) -> ValidationReport {
    let mut report = ValidationReport::default();

    if !(params.d > 0.0) {
        report.push("params.d", format!("requires d > 0, got {}", params.d));
    }
    if !(params.l0 > 0.0) {
        report.push("params.l0", format!("requires l0 > 0, got {}", params.l0));
    }
    if !(params.c > 0.0) {
        report.push("params.c", format!("requires c > 0, got {}", params.c));
    }
    if !(params.h0 > 0.0) {
        report.push("params.h0", format!("requires h0 > 0, got {}", params.h0));
    }
    match params.mode {
        Mode::Paper => {
            if !(params.b > 0.0) {
                report.push("params.b", format!("requires b > 0, got {}", params.b));
            }
            if !(params.a0 < 0.0 && 0.0 < params.a) {
                report.push(
                    "params.a0",
                    format!(
                        "paper mode requires a0 < 0 < a, got a0 = {}, a = {}",
                        params.a0, params.a
                    ),
                );
            }
        }
        Mode::Relaxed => {
            if !(params.b >= 0.0) {
                report.push("params.b", format!("requires b >= 0, got {}", params.b));
            }
            if !(params.a >= 0.0) {
                report.push("params.a", format!("relaxed mode requires a >= 0, got {}", params.a));
            }
            if !(params.a0 <= params.a) {
                report.push(
                    "params.a0",
                    format!(
                        "relaxed mode requires a0 <= a, got a0 = {}, a = {}",
                        params.a0, params.a
                    ),
                );
            }
        }
    }

    if profile.favourable_rate() != params.a
        || profile.unfavourable_rate() != params.a0
    {
        report.push(
            "profile",
            "climate plateau values do not match the model parameters".to_string(),
        );
    }

    if !(mu.mu0() > 0.0) {
        report.push("mu.mu0", format!("requires mu(a0) > 0, got {}", mu.mu0()));
    }
    if !(mu.slope() >= 0.0) {
        report.push(
            "mu.slope",
            format!("mu must be nondecreasing: slope {} < 0", mu.slope()),
        );
    }

    if (u0.h0() - params.h0).abs() > 1e-12 * params.h0.max(1.0) {
        report.push(
            "u0.h0",
            format!(
                "initial data length {} does not match params.h0 = {}",
                u0.h0(),
                params.h0
            ),
        );
    }
    if u0.values().len() < 5 {
        report.push("u0", "needs at least 5 samples".to_string());
        return report;
    }

    let v = u0.values();
    let n = v.len();
    let dx = u0.grid_spacing();
    let sup = u0.sup();
    let value_tol = 1e-6 * sup.max(f64::MIN_POSITIVE);
    // slope tolerance 1e-6 relative to the steepest slope the grid resolves
    let slope_tol = 1e-6 * sup.max(f64::MIN_POSITIVE) / dx;

    if v[n - 1].abs() > value_tol {
        report.push("u0(h0)", format!("u0(h0) != 0 (got {:.6e})", v[n - 1]));
    }
    if let Some((i, &bad)) = v[..n - 1]
        .iter()
        .enumerate()
        .find(|(_, &x)| !(x > 0.0))
    {
        report.push(
            "u0 > 0",
            format!("u0 must be positive on [0, h0); u0({:.6e}) = {:.6e}", i as f64 * dx, bad),
        );
    }
    let left_slope = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx);
    if left_slope.abs() > slope_tol {
        report.push(
            "u0'(0)",
            format!("u0'(0) != 0 (one-sided estimate {:.6e})", left_slope),
        );
    }
    let right_slope = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dx);
    if right_slope >= -slope_tol {
        report.push(
            "u0'(h0)",
            format!("u0'(h0) must be negative (one-sided estimate {:.6e})", right_slope),
        );
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn reference_params() -> ModelParams {
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
    fn climate_plateaus_are_exact() {
        let p = reference_params();
        let profile = ClimateProfile::new(&p, TransitionKind::Linear);
        assert_eq!(profile.eval(-5.0), 1.0);
        assert_eq!(profile.eval(0.0), 1.0);
        assert_eq!(profile.eval(p.l0 + 3.0), -1.0);
        assert_eq!(profile.eval(p.l0), -1.0);
    }

    #[test]
    fn climate_linear_midpoint() {
        let p = reference_params();
        let profile = ClimateProfile::new(&p, TransitionKind::Linear);
        assert_relative_eq!(profile.eval(p.l0 / 2.0), (p.a + p.a0) / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn mu_anchor_and_affine_values() {
        let p = reference_params();
        let mu = ExpansionRate::affine(&p, 0.5, 0.25);
        assert_eq!(mu.eval(p.a0), 0.5);
        assert_relative_eq!(mu.eval((p.a0 + p.a) / 2.0), 0.5 + 0.25 * (p.a - p.a0) / 2.0);
        assert_relative_eq!(mu.at_favourable(), 1.0);

        let flat = ExpansionRate::constant(&p, 0.7);
        assert_eq!(flat.eval(p.a), 0.7);
        assert_eq!(flat.eval(p.a0), 0.7);
    }

    #[test]
    fn mu_clamps_outside_domain() {
        let p = reference_params();
        let mu = ExpansionRate::affine(&p, 0.5, 0.25);
        let (lo, clamped) = mu.eval_checked(p.a0 - 3.0);
        assert_eq!(lo, 0.5);
        assert!(clamped);
        let (hi, clamped) = mu.eval_checked(p.a + 3.0);
        assert_relative_eq!(hi, 1.0);
        assert!(clamped);
    }

    #[test]
    fn cosine_bump_matches_closed_form() {
        let u0 = make_initial_bump(1.0, 1.0, BumpFamily::Cosine).unwrap();
        assert_eq!(*u0.values().last().unwrap(), 0.0);
        assert_relative_eq!(u0.eval(0.5), (std::f64::consts::FRAC_PI_2 * 0.5).cos());

        let u0 = make_initial_bump(2.0, 0.3, BumpFamily::Cosine).unwrap();
        assert_relative_eq!(u0.sup(), 0.3);
        assert_eq!(u0.eval(0.0), 0.3);
    }

    #[test]
    fn zero_amplitude_bump_rejected() {
        assert!(make_initial_bump(1.0, 0.0, BumpFamily::Cosine).is_err());
        assert!(make_initial_bump(0.0, 1.0, BumpFamily::Cosine).is_err());
    }

    #[test]
    fn unknown_family_rejected() {
        assert!(bump_family("gaussian").is_err());
        assert!(bump_family("cosine").is_ok());
    }

    #[test]
    fn validate_flags_nonzero_boundary_value() {
        let p = reference_params();
        let profile = ClimateProfile::new(&p, TransitionKind::Linear);
        let mu = ExpansionRate::constant(&p, 1.0);
        let mut u0 = make_initial_bump(p.h0, 1.0, BumpFamily::Cosine).unwrap();
        let n = u0.values.len();
        u0.values[n - 1] = 0.1;
        u0.analytic = None;
        let report = validate(&p, &profile, &mu, &u0);
        assert!(!report.pass());
        assert!(report.violations.iter().any(|v| v.location == "u0(h0)"));
    }

    #[test]
    fn validate_flags_positive_a0_in_paper_mode() {
        let mut p = reference_params();
        p.a0 = 0.5;
        let profile = ClimateProfile::new(&p, TransitionKind::Linear);
        let mu = ExpansionRate::constant(&p, 1.0);
        let u0 = make_initial_bump(p.h0, 1.0, BumpFamily::Cosine).unwrap();
        let report = validate(&p, &profile, &mu, &u0);
        assert!(report
            .violations
            .iter()
            .any(|v| v.location == "params.a0" && v.message.contains("a0 < 0")));
    }

    #[test]
    fn validate_passes_cosine_bump() {
        let p = reference_params();
        let profile = ClimateProfile::new(&p, TransitionKind::Linear);
        let mu = ExpansionRate::affine(&p, 0.5, 0.25);
        let u0 = make_initial_bump(p.h0, 1.0, BumpFamily::Cosine).unwrap();
        let report = validate(&p, &profile, &mu, &u0);
        assert!(report.pass(), "unexpected violations: {report}");
    }

    #[test]
    fn relaxed_mode_allows_homogeneous_reduction() {
        let p = ModelParams {
            a0: 1.0,
            mode: Mode::Relaxed,
            ..reference_params()
        };
        let profile = ClimateProfile::new(&p, TransitionKind::Linear);
        let mu = ExpansionRate::constant(&p, 1.0);
        let u0 = make_initial_bump(p.h0, 1.0, BumpFamily::Cosine).unwrap();
        assert!(validate(&p, &profile, &mu, &u0).pass());
        assert_eq!(profile.eval(0.5), 1.0);
    }

    proptest! {
        #[test]
        fn climate_is_nonincreasing(
            xi1 in -10.0f64..10.0,
            xi2 in -10.0f64..10.0,
            cubic in proptest::bool::ANY,
        ) {
            let p = reference_params();
            let kind = if cubic { TransitionKind::Cubic } else { TransitionKind::Linear };
            let profile = ClimateProfile::new(&p, kind);
            let (lo, hi) = if xi1 <= xi2 { (xi1, xi2) } else { (xi2, xi1) };
            prop_assert!(profile.eval(lo) >= profile.eval(hi) - 1e-12);
        }

        #[test]
        fn climate_is_lipschitz(
            xi1 in -5.0f64..5.0,
            xi2 in -5.0f64..5.0,
        ) {
            let p = reference_params();
            let profile = ClimateProfile::new(&p, TransitionKind::Linear);
            let bound = (profile.lipschitz_bound() + 1e-9) * (xi1 - xi2).abs();
            prop_assert!((profile.eval(xi1) - profile.eval(xi2)).abs() <= bound + 1e-12);
        }

        #[test]
        fn stefan_coefficient_is_nonincreasing(
            xi1 in -10.0f64..10.0,
            xi2 in -10.0f64..10.0,
            slope in 0.0f64..2.0,
        ) {
            let p = reference_params();
            let profile = ClimateProfile::new(&p, TransitionKind::Linear);
            let mu = ExpansionRate::affine(&p, 0.5, slope);
            let (lo, hi) = if xi1 <= xi2 { (xi1, xi2) } else { (xi2, xi1) };
            prop_assert!(mu.eval(profile.eval(lo)) >= mu.eval(profile.eval(hi)) - 1e-12);
        }

        #[test]
        fn bump_always_validates(
            sigma in 1e-6f64..1e3,
            h0 in 0.05f64..20.0,
            parabola in proptest::bool::ANY,
        ) {
            let p = ModelParams { h0, ..reference_params() };
            let profile = ClimateProfile::new(&p, TransitionKind::Linear);
            let mu = ExpansionRate::constant(&p, 1.0);
            let family = if parabola { BumpFamily::Parabola } else { BumpFamily::Cosine };
            let u0 = make_initial_bump(h0, sigma, family).unwrap();
            prop_assert!(validate(&p, &profile, &mu, &u0).pass());
        }
    }
}
