//! Front-fixed time stepping of the free boundary problem.
//!
//! The change of variables `y = x / h(t)` maps the moving domain onto
//! `[0, 1]`; the density `u(y, t)` then satisfies
//!
//! ```text
//!   u_t = (d/h^2) u_yy + (y h'/h) u_y + A(y h - c t) u - b u^2,
//! ```
//!
//! with `u_y(0) = 0`, `u(1) = 0` and the Stefan coupling
//! `h' = -mu(A(h - ct)) u_y(1)/h`. Diffusion and advection are implicit,
//! the reaction is taken semi-implicitly (`b u_old u_new`) to preserve
//! positivity, so each step is one tridiagonal solve. The front slope is
//! extracted with a second-order one-sided difference, `h` is updated
//! explicitly, then the density advances; a predictor-corrector option
//! re-evaluates the slope once.

use crate::bvp::solve_tridiagonal;
use crate::forced::ForcedWave;
use crate::model::{ClimateProfile, ExpansionRate, InitialData, ModelParams};
use crate::semiwave::SemiWave;
use crate::{Error, Result};

/// Density state on the fixed grid at one instant.
#[derive(Debug, Clone)]
pub struct FrontState {
    pub t: f64,
    /// Front position `h(t)`.
    pub h: f64,
    /// Densities at `y_i = i/n`, `i = 0..=n`; `u[n] = 0`.
    pub u: Vec<f64>,
    /// Cached physical front slope `u_x(h, t)`.
    pub front_slope: f64,
}

impl FrontState {
    pub fn grid_intervals(&self) -> usize {
        self.u.len() - 1
    }

    pub fn sup_u(&self) -> f64 {
        self.u.iter().cloned().fold(0.0, f64::max)
    }

    /// Physical abscissa of grid index `i`.
    pub fn x_of(&self, i: usize) -> f64 {
        self.h * i as f64 / (self.u.len() - 1) as f64
    }
}

/// Total population `int_0^h u dx` by the trapezoid rule.
pub fn total_mass(state: &FrontState) -> f64 {
    let n = state.u.len() - 1;
    let dy = 1.0 / n as f64;
    let mut acc = 0.5 * (state.u[0] + state.u[n]);
    for i in 1..n {
        acc += state.u[i];
    }
    acc * dy * state.h
}

/// Time-step selection.
#[derive(Debug, Clone, Copy)]
pub enum TimeStepRule {
    Fixed(f64),
    /// `dt = min(dt_max, cfl * h * dy / v_ref)` with `v_ref` the natural
    /// front speed bound; the step grows with the physical grid spacing.
    Adaptive { cfl: f64, dt_max: f64 },
}

/// Whether each step re-evaluates the front slope once on the predicted
/// density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepScheme {
    Basic,
    Corrected,
}

/// One recorded point of a run.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub h: f64,
    pub sup_u: f64,
    pub front_slope: f64,
    pub interior_gap: Option<f64>,
}

/// Invariant bookkeeping accumulated over every accepted step.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct InvariantStats {
    pub min_u: f64,
    pub max_u: f64,
    /// `max(a/b, ||u0||_inf)`, the a priori density bound.
    pub density_bound: f64,
    pub monotone_front: bool,
    pub steps: usize,
}

/// Time series of the front and its diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub c: f64,
    /// Critical speed used for the `h - c0 t` gap column, when known.
    pub c0: Option<f64>,
    pub samples: Vec<TrajectorySample>,
    pub invariants: InvariantStats,
}

impl Trajectory {
    pub fn final_sample(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory has samples")
    }

    pub fn gap_shift(&self, i: usize) -> f64 {
        self.samples[i].h - self.c * self.samples[i].t
    }

    pub fn gap_critical(&self, i: usize) -> Option<f64> {
        self.c0.map(|c0| self.samples[i].h - c0 * self.samples[i].t)
    }

    /// Latest sample with `t <= time` (first one if all are later).
    pub fn sample_at_or_before(&self, time: f64) -> &TrajectorySample {
        match self
            .samples
            .binary_search_by(|s| s.t.partial_cmp(&time).unwrap())
        {
            Ok(i) => &self.samples[i],
            Err(0) => &self.samples[0],
            Err(i) => &self.samples[i - 1],
        }
    }

    pub fn front_is_strictly_increasing(&self) -> bool {
        self.invariants.monotone_front
    }
}

/// A stored `u(x)` snapshot.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub h: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

/// Everything a single run needs besides the problem definition.
#[derive(Debug, Clone)]
pub struct SimulationSpec {
    pub u0: InitialData,
    pub t_max: f64,
    pub step: TimeStepRule,
    pub scheme: StepScheme,
    /// Trajectory sampling interval (simulated time).
    pub record_dt: f64,
    /// Snapshot interval; `None` disables snapshots.
    pub snapshot_dt: Option<f64>,
    pub c0: Option<f64>,
    /// Margin `M` for the interior gap diagnostic over `[0, ct - M]`.
    pub gap_margin: f64,
}

/// Output of [`StefanSolver::simulate`].
#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub trajectory: Trajectory,
    pub snapshots: Vec<Snapshot>,
    pub final_state: FrontState,
    pub stopped_early: bool,
}

/// Semi-implicit front-fixing solver for one problem instance.
#[derive(Debug, Clone)]
pub struct StefanSolver {
    params: ModelParams,
    climate: ClimateProfile,
    mu: ExpansionRate,
    n: usize,
    dy: f64,
}

struct Workspace {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
            rhs: vec![0.0; n],
        }
    }
}

impl StefanSolver {
    pub fn new(
        params: &ModelParams,
        climate: &ClimateProfile,
        mu: &ExpansionRate,
        n: usize,
    ) -> Result<Self> {
        if n < 16 {
            return Err(Error::Precondition(format!(
                "front-fixed grid needs n >= 16 intervals, got {n}"
            )));
        }
        if !(params.h0 > 0.0 && params.d > 0.0) {
            return Err(Error::Precondition(
                "stefan solver requires h0 > 0 and d > 0".into(),
            ));
        }
        Ok(Self {
            params: *params,
            climate: *climate,
            mu: *mu,
            n,
            dy: 1.0 / n as f64,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn grid_intervals(&self) -> usize {
        self.n
    }

    /// Sample the initial data onto the fixed grid.
    pub fn initial_state(&self, u0: &InitialData) -> FrontState {
        let h = self.params.h0;
        let mut u: Vec<f64> = (0..=self.n)
            .map(|i| u0.eval(i as f64 * self.dy * h))
            .collect();
        u[self.n] = 0.0;
        let front_slope = self.physical_front_slope(&u, h);
        FrontState {
            t: 0.0,
            h,
            u,
            front_slope,
        }
    }

    /// `u_x(h, t)` by the second-order one-sided difference at `y = 1`.
    fn physical_front_slope(&self, u: &[f64], h: f64) -> f64 {
        let n = self.n;
        (3.0 * u[n] - 4.0 * u[n - 1] + u[n - 2]) / (2.0 * self.dy) / h
    }

    fn front_speed(&self, t: f64, h: f64, slope_x: f64) -> f64 {
        let mu_here = self.mu.eval(self.climate.eval(h - self.params.c * t));
        -mu_here * slope_x
    }

    /// Advance one step. The zero state is a fixed point of the discrete
    /// map and is allowed through with `h' = 0`; any other state that
    /// produces a non-positive front speed signals a slope-extraction bug
    /// and is rejected.
    pub fn step(&self, state: &FrontState, dt: f64, scheme: StepScheme) -> Result<FrontState> {
        if !(dt > 0.0) {
            return Err(Error::Precondition(format!("step needs dt > 0, got {dt}")));
        }
        let mut next = state.clone();
        let mut ws = Workspace::new(self.n);
        self.advance(&mut next, dt, scheme, &mut ws)?;
        Ok(next)
    }

    fn advance(
        &self,
        state: &mut FrontState,
        dt: f64,
        scheme: StepScheme,
        ws: &mut Workspace,
    ) -> Result<()> {
        let n = self.n;
        let slope_x = self.physical_front_slope(&state.u, state.h);
        let hprime = self.front_speed(state.t, state.h, slope_x);

        if hprime <= 0.0 {
            if state.sup_u() <= 1e-14 * self.params.carrying_capacity().max(1.0) {
                // degenerate zero state: the front does not move and the
                // density stays identically zero
                state.t += dt;
                state.front_slope = 0.0;
                return Ok(());
            }
            return Err(Error::Breakdown(format!(
                "non-positive front speed h' = {hprime:.3e} at t = {} (slope-extraction bug: \
                 the front speed must stay positive)",
                state.t
            )));
        }

        let h_pred = state.h + dt * hprime;
        let t_new = state.t + dt;
        self.implicit_density_step(&state.u, h_pred, hprime, t_new, dt, ws)?;

        let h_new = match scheme {
            StepScheme::Basic => h_pred,
            StepScheme::Corrected => {
                // one slope re-evaluation on the predicted density
                let mut u_star = state.u.clone();
                u_star[..n].copy_from_slice(&ws.rhs[..n]);
                u_star[n] = 0.0;
                let slope_star = self.physical_front_slope(&u_star, h_pred);
                let hprime_star = self.front_speed(state.t, h_pred, slope_star);
                if hprime_star <= 0.0 {
                    return Err(Error::Breakdown(format!(
                        "corrector produced non-positive front speed {hprime_star:.3e}"
                    )));
                }
                let hp = 0.5 * (hprime + hprime_star);
                let h_corr = state.h + dt * hp;
                self.implicit_density_step(&state.u, h_corr, hp, t_new, dt, ws)?;
                h_corr
            }
        };

        for (i, value) in ws.rhs[..n].iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::Breakdown(format!(
                    "non-finite density at grid index {i}, t = {t_new}"
                )));
            }
        }
        state.u[..n].copy_from_slice(&ws.rhs[..n]);
        state.u[n] = 0.0;
        let bound = self.params.carrying_capacity().max(1.0);
        for value in state.u.iter_mut() {
            if *value < 0.0 {
                if *value < -1e-10 * bound {
                    return Err(Error::Breakdown(format!(
                        "density went negative ({:.3e}) at t = {t_new}",
                        *value
                    )));
                }
                *value = 0.0;
            }
        }
        state.t = t_new;
        state.h = h_new;
        state.front_slope = self.physical_front_slope(&state.u, h_new);
        Ok(())
    }

    /// One implicit solve of the transformed density equation; the result
    /// is left in `ws.rhs[0..n]` (the `y = 1` value is the Dirichlet zero).
    fn implicit_density_step(
        &self,
        u_old: &[f64],
        h: f64,
        hprime: f64,
        t_new: f64,
        dt: f64,
        ws: &mut Workspace,
    ) -> Result<()> {
        let n = self.n;
        let dy = self.dy;
        let diffusion = self.params.d / (h * h);
        let inv_dy2 = 1.0 / (dy * dy);
        let inv_2dy = 1.0 / (2.0 * dy);
        let inv_dt = 1.0 / dt;
        let b = self.params.b;
        let c = self.params.c;

        // no-flux row at y = 0 via ghost node (u[-1] = u[1]); the advection
        // coefficient vanishes there
        let a_0 = self.climate.eval(-c * t_new);
        ws.lower[0] = 0.0;
        ws.diag[0] = inv_dt + 2.0 * diffusion * inv_dy2 - a_0 + b * u_old[0];
        ws.upper[0] = -2.0 * diffusion * inv_dy2;
        ws.rhs[0] = u_old[0] * inv_dt;

        for i in 1..n {
            let y = i as f64 * dy;
            let advect = y * hprime / h;
            let growth = self.climate.eval(y * h - c * t_new);
            ws.lower[i] = -diffusion * inv_dy2 + advect * inv_2dy;
            ws.diag[i] = inv_dt + 2.0 * diffusion * inv_dy2 - growth + b * u_old[i];
            ws.upper[i] = -diffusion * inv_dy2 - advect * inv_2dy;
            // u[n] = 0, so the last interior row needs no boundary term
            ws.rhs[i] = u_old[i] * inv_dt;
        }
        solve_tridiagonal(
            &mut ws.lower[..n],
            &mut ws.diag[..n],
            &mut ws.upper[..n],
            &mut ws.rhs[..n],
        )
    }

    fn choose_dt(&self, rule: TimeStepRule, h: f64) -> f64 {
        match rule {
            TimeStepRule::Fixed(dt) => dt,
            TimeStepRule::Adaptive { cfl, dt_max } => {
                let v_ref = self.params.speed_bound().max(self.params.c);
                (cfl * h * self.dy / v_ref).min(dt_max)
            }
        }
    }

    /// Default adaptive rule: the step tracks the physical grid spacing
    /// with a reaction-limited cap.
    pub fn default_step_rule(&self) -> TimeStepRule {
        let rate = self.params.a.abs().max(self.params.a0.abs()).max(1e-6);
        TimeStepRule::Adaptive {
            cfl: 0.5,
            dt_max: 0.05 / rate,
        }
    }

    /// Maximum of `|u - a/b|` over grid points in `[0, ct - margin]`;
    /// `None` when the window is empty.
    pub fn interior_sup_gap(&self, state: &FrontState, margin: f64) -> Option<f64> {
        let hi = (self.params.c * state.t - margin).min(state.h);
        if hi <= 0.0 {
            return None;
        }
        let equilibrium = self.params.carrying_capacity();
        let mut gap = 0.0f64;
        let mut any = false;
        for (i, &u) in state.u.iter().enumerate() {
            if state.h * i as f64 * self.dy <= hi {
                gap = gap.max((u - equilibrium).abs());
                any = true;
            } else {
                break;
            }
        }
        any.then_some(gap)
    }

    /// Sup-norm error against a front-anchored target:
    /// `max over [0, h]` of `|u(x) - target(x - h + anchor)|`.
    pub fn profile_error_fn(
        &self,
        state: &FrontState,
        target: impl Fn(f64) -> f64,
        anchor: f64,
    ) -> f64 {
        let mut err = 0.0f64;
        for (i, &u) in state.u.iter().enumerate() {
            let x = state.h * i as f64 * self.dy;
            err = err.max((u - target(x - state.h + anchor)).abs());
        }
        err
    }

    /// Front-anchored error against the semi-wave `q_c`.
    pub fn profile_error_semiwave(&self, state: &FrontState, wave: &SemiWave) -> f64 {
        self.profile_error_fn(state, |xi| wave.interp(xi), 0.0)
    }

    /// Front-anchored error against a forced wave, aligned at its shift.
    pub fn profile_error_forced(&self, state: &FrontState, wave: &ForcedWave) -> f64 {
        self.profile_error_fn(state, |xi| wave.interp(xi), wave.shift)
    }

    /// Run a simulation to `t_max`. Deterministic for a fixed spec.
    pub fn simulate(&self, spec: &SimulationSpec) -> Result<SimulationOutput> {
        self.simulate_with_stop(spec, |_| false)
    }

    /// As [`simulate`](Self::simulate), additionally giving a stop
    /// predicate a look at the trajectory after every recorded sample.
    pub fn simulate_with_stop(
        &self,
        spec: &SimulationSpec,
        mut stop: impl FnMut(&Trajectory) -> bool,
    ) -> Result<SimulationOutput> {
        if !(spec.t_max > 0.0) || !(spec.record_dt > 0.0) {
            return Err(Error::Precondition(
                "simulation needs t_max > 0 and record_dt > 0".into(),
            ));
        }

        let mut state = self.initial_state(&spec.u0);
        let density_bound = self.params.carrying_capacity().max(spec.u0.sup());
        let mut invariants = InvariantStats {
            min_u: 0.0,
            max_u: state.sup_u(),
            density_bound,
            monotone_front: true,
            steps: 0,
        };
        let mut trajectory = Trajectory {
            c: self.params.c,
            c0: spec.c0,
            samples: vec![self.sample(&state, spec.gap_margin)],
            invariants,
        };
        let mut snapshots = Vec::new();
        if spec.snapshot_dt.is_some() {
            snapshots.push(self.snapshot(&state));
        }

        let mut ws = Workspace::new(self.n);
        let mut next_record = spec.record_dt;
        let mut next_snapshot = spec.snapshot_dt.unwrap_or(f64::INFINITY);
        let mut stopped_early = false;
        let zero_floor = 1e-14 * self.params.carrying_capacity().max(1.0);

        while state.t < spec.t_max * (1.0 - 1e-12) {
            let dt = self.choose_dt(spec.step, state.h).min(spec.t_max - state.t);
            let h_before = state.h;
            self.advance(&mut state, dt, spec.scheme, &mut ws)?;
            invariants.steps += 1;
            for &u in &state.u {
                invariants.min_u = invariants.min_u.min(u);
                invariants.max_u = invariants.max_u.max(u);
            }
            if state.h <= h_before && state.sup_u() > zero_floor {
                invariants.monotone_front = false;
            }

            let at_end = state.t >= spec.t_max * (1.0 - 1e-12);
            if state.t >= next_record || at_end {
                while next_record <= state.t {
                    next_record += spec.record_dt;
                }
                trajectory.invariants = invariants;
                trajectory.samples.push(self.sample(&state, spec.gap_margin));
                if stop(&trajectory) {
                    stopped_early = true;
                }
            }
            if state.t >= next_snapshot {
                while next_snapshot <= state.t {
                    next_snapshot += spec.snapshot_dt.unwrap();
                }
                snapshots.push(self.snapshot(&state));
            }
            if stopped_early {
                break;
            }
        }

        if spec.snapshot_dt.is_some() && snapshots.last().map(|s| s.t) != Some(state.t) {
            snapshots.push(self.snapshot(&state));
        }
        trajectory.invariants = invariants;
        Ok(SimulationOutput {
            trajectory,
            snapshots,
            final_state: state,
            stopped_early,
        })
    }

    fn sample(&self, state: &FrontState, gap_margin: f64) -> TrajectorySample {
        TrajectorySample {
            t: state.t,
            h: state.h,
            sup_u: state.sup_u(),
            front_slope: state.front_slope,
            interior_gap: self.interior_sup_gap(state, gap_margin),
        }
    }

    fn snapshot(&self, state: &FrontState) -> Snapshot {
        Snapshot {
            t: state.t,
            h: state.h,
            x: (0..=self.n).map(|i| state.h * i as f64 * self.dy).collect(),
            u: state.u.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_initial_bump, BumpFamily, Mode, TransitionKind};

    fn params(c: f64, h0: f64) -> ModelParams {
        ModelParams {
            d: 1.0,
            a: 1.0,
            a0: -1.0,
            b: 1.0,
            l0: 1.0,
            c,
            h0,
            mode: Mode::Paper,
        }
    }

    fn solver(c: f64, h0: f64, n: usize) -> StefanSolver {
        let p = params(c, h0);
        let climate = ClimateProfile::new(&p, TransitionKind::Linear);
        let mu = ExpansionRate::constant(&p, 1.0);
        StefanSolver::new(&p, &climate, &mu, n).unwrap()
    }

    fn spec(u0: InitialData, t_max: f64) -> SimulationSpec {
        SimulationSpec {
            u0,
            t_max,
            step: TimeStepRule::Fixed(1e-3),
            scheme: StepScheme::Basic,
            record_dt: 0.1,
            snapshot_dt: None,
            c0: None,
            gap_margin: 10.0,
        }
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        let s = solver(0.25, 2.0, 64);
        let state = FrontState {
            t: 0.0,
            h: 2.0,
            u: vec![0.0; 65],
            front_slope: 0.0,
        };
        let next = s.step(&state, 0.01, StepScheme::Basic).unwrap();
        assert_eq!(next.h, 2.0);
        assert!(next.u.iter().all(|&u| u == 0.0));
        assert_eq!(next.t, 0.01);
    }

    #[test]
    fn one_step_moves_the_front_forward() {
        let s = solver(0.25, 2.0, 128);
        let u0 = make_initial_bump(2.0, 1.0, BumpFamily::Cosine).unwrap();
        let state = s.initial_state(&u0);
        let next = s.step(&state, 1e-3, StepScheme::Basic).unwrap();
        assert!(next.h > state.h);
        assert!(next.front_slope < 0.0);
    }

    #[test]
    fn density_stays_within_the_a_priori_bound() {
        let s = solver(0.25, 2.0, 128);
        let u0 = make_initial_bump(2.0, 1.4, BumpFamily::Cosine).unwrap();
        let out = s.simulate(&spec(u0, 5.0)).unwrap();
        let bound = 1.4f64.max(1.0) * (1.0 + 1e-6);
        assert!(out.trajectory.invariants.min_u >= 0.0);
        assert!(
            out.trajectory.invariants.max_u <= bound,
            "max u = {} exceeds {}",
            out.trajectory.invariants.max_u,
            bound
        );
        assert!(out.trajectory.front_is_strictly_increasing());
    }

    #[test]
    fn ordered_initial_data_yields_ordered_runs() {
        let s = solver(0.25, 2.0, 256);
        let u0 = make_initial_bump(2.0, 0.8, BumpFamily::Cosine).unwrap();
        let lo = s.simulate(&spec(u0.clone(), 3.0)).unwrap();
        let hi = s.simulate(&spec(u0.scaled(1.2), 3.0)).unwrap();

        let dx = hi.final_state.h / 256.0;
        for (a, b) in lo.trajectory.samples.iter().zip(&hi.trajectory.samples) {
            assert_eq!(a.t, b.t);
            assert!(a.h <= b.h + dx, "front order violated at t = {}", a.t);
        }
        // compare densities at the final time on the lower run's grid
        let interp = |state: &FrontState, x: f64| {
            let n = state.u.len() - 1;
            let pos = (x / state.h * n as f64).clamp(0.0, n as f64);
            let i = (pos.floor() as usize).min(n - 1);
            let w = pos - i as f64;
            state.u[i] * (1.0 - w) + state.u[i + 1] * w
        };
        for i in 0..=256 {
            let x = lo.final_state.x_of(i);
            let ua = lo.final_state.u[i];
            let ub = interp(&hi.final_state, x);
            assert!(ua <= ub + 1e-6, "density order violated at x = {x}");
        }
    }

    #[test]
    fn halving_the_step_converges_at_first_order() {
        let s = solver(0.25, 2.0, 256);
        let u0 = make_initial_bump(2.0, 1.0, BumpFamily::Cosine).unwrap();
        let run = |dt: f64| {
            let mut sp = spec(u0.clone(), 2.0);
            sp.step = TimeStepRule::Fixed(dt);
            s.simulate(&sp).unwrap().final_state.h
        };
        let h1 = run(0.02);
        let h2 = run(0.01);
        let h3 = run(0.005);
        let ratio = (h1 - h2).abs() / (h2 - h3).abs();
        // first order in time: halving should shrink differences by ~2
        assert!(
            ratio >= 1.6 && ratio <= 2.6,
            "halving ratio {ratio} outside the first-order window"
        );
    }

    #[test]
    fn corrected_scheme_stays_close_to_basic() {
        let s = solver(0.25, 2.0, 128);
        let u0 = make_initial_bump(2.0, 1.0, BumpFamily::Cosine).unwrap();
        let basic = s.simulate(&spec(u0.clone(), 1.0)).unwrap();
        let mut sp = spec(u0, 1.0);
        sp.scheme = StepScheme::Corrected;
        let corrected = s.simulate(&sp).unwrap();
        let diff = (basic.final_state.h - corrected.final_state.h).abs();
        assert!(diff < 1e-3, "schemes diverged by {diff}");
    }

    #[test]
    fn interior_gap_of_equilibrium_state_is_zero() {
        let s = solver(0.25, 2.0, 64);
        let mut u = vec![1.0; 65];
        u[64] = 0.0;
        let state = FrontState {
            t: 100.0,
            h: 30.0,
            u,
            front_slope: -0.3,
        };
        // window [0, 15]: every grid point there carries u = a/b
        let gap = s.interior_sup_gap(&state, 10.0).unwrap();
        assert_eq!(gap, 0.0);
    }

    #[test]
    fn interior_gap_empty_before_the_shift_arrives() {
        let s = solver(0.25, 2.0, 64);
        let u0 = make_initial_bump(2.0, 1.0, BumpFamily::Cosine).unwrap();
        let state = s.initial_state(&u0);
        assert!(s.interior_sup_gap(&state, 10.0).is_none());
    }

    #[test]
    fn interior_gap_small_at_late_times_in_a_spreading_run() {
        let c = 0.27;
        let s = solver(c, 2.0, 256);
        let u0 = make_initial_bump(2.0, 1.0, BumpFamily::Cosine).unwrap();
        let mut sp = spec(u0, 110.0);
        sp.step = s.default_step_rule();
        let out = s.simulate(&sp).unwrap();
        let gap = s.interior_sup_gap(&out.final_state, 10.0).unwrap();
        assert!(gap < 0.05, "interior gap {gap} too large at ct = {}", c * 110.0);
    }

    #[test]
    fn profile_error_against_itself_is_zero() {
        let s = solver(0.25, 2.0, 128);
        let u0 = make_initial_bump(2.0, 1.0, BumpFamily::Cosine).unwrap();
        let out = s.simulate(&spec(u0, 1.0)).unwrap();
        let state = &out.final_state;
        let n = state.u.len() - 1;
        let grid: Vec<f64> = (0..=n).map(|i| state.x_of(i) - state.h).collect();
        let values = state.u.clone();
        let own = move |xi: f64| {
            let dx = grid[1] - grid[0];
            let pos = ((xi - grid[0]) / dx).clamp(0.0, n as f64);
            let i = (pos.floor() as usize).min(n - 1);
            let w = pos - i as f64;
            values[i] * (1.0 - w) + values[i + 1] * w
        };
        let err = s.profile_error_fn(state, own, 0.0);
        assert!(err <= 1e-12, "self comparison error {err}");
    }

    #[test]
    fn trajectory_records_gaps_against_both_speeds() {
        let s = solver(0.25, 2.0, 64);
        let u0 = make_initial_bump(2.0, 1.0, BumpFamily::Cosine).unwrap();
        let mut sp = spec(u0, 0.5);
        sp.c0 = Some(0.36);
        let out = s.simulate(&sp).unwrap();
        let k = out.trajectory.samples.len() - 1;
        let smp = out.trajectory.samples[k];
        assert!((out.trajectory.gap_shift(k) - (smp.h - 0.25 * smp.t)).abs() < 1e-14);
        assert!((out.trajectory.gap_critical(k).unwrap() - (smp.h - 0.36 * smp.t)).abs() < 1e-14);
    }

    #[test]
    fn mass_decreases_only_through_the_free_end_without_reaction() {
        // relaxed degenerate mode: a = a0 = 0, b = 0 is pure diffusion with
        // an absorbing free end; mass must decrease monotonically
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
        let s = StefanSolver::new(&p, &climate, &mu, 128).unwrap();
        let u0 = make_initial_bump(2.0, 1.0, BumpFamily::Cosine).unwrap();
        let mut state = s.initial_state(&u0);
        let mut mass = total_mass(&state);
        for _ in 0..200 {
            state = s.step(&state, 1e-3, StepScheme::Basic).unwrap();
            let new_mass = total_mass(&state);
            assert!(new_mass < mass, "mass did not decrease at t = {}", state.t);
            mass = new_mass;
        }
    }
}
