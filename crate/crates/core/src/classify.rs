//! Spreading / vanishing classification, the sharp threshold in the
//! initial amplitude, asymptotic front-law reports, and phase sweeps.
//!
//! Spreading is certified exactly: the moment `h(t)` reaches the critical
//! length `pi/2 sqrt(d/a)`, vanishing is impossible and the dichotomy
//! makes the run a spreading run. Vanishing has no finite-time
//! certificate; the decay rule here (small sup norm, stagnant front over
//! the trailing half of the run, subcritical length) is a declared
//! approximation, and `Undetermined` is a first-class outcome that is
//! never silently coerced.

use rayon::prelude::*;

use crate::model::{make_initial_bump, BumpFamily, ClimateProfile, ExpansionRate, InitialData, ModelParams, TransitionKind};
use crate::stefan::{SimulationSpec, StefanSolver, StepScheme, TimeStepRule, Trajectory};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Verdict {
    Spreading,
    Vanishing,
    Undetermined,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Spreading => write!(f, "spreading"),
            Verdict::Vanishing => write!(f, "vanishing"),
            Verdict::Undetermined => write!(f, "undetermined"),
        }
    }
}

/// Which rule fired, and the evidence it saw.
#[derive(Debug, Clone, serde::Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Certificate {
    /// `h(t)` reached the critical length; exact.
    CriticalLength { t: f64, h: f64, threshold: f64 },
    /// Decay heuristic: tiny sup norm and a stagnant subcritical front
    /// over the trailing window.
    DecayWindow {
        t: f64,
        sup_u: f64,
        h_gain: f64,
        window_start: f64,
    },
    /// Ran to `t_max` without either rule firing.
    Timeout { t_max: f64 },
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Diagnostics {
    pub final_t: f64,
    pub final_h: f64,
    pub final_sup_u: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub certificate: Certificate,
    pub diagnostics: Diagnostics,
}

/// Thresholds of the classification rules.
#[derive(Debug, Clone, Copy)]
pub struct ClassifierRules {
    /// Exact spreading certificate: `pi/2 sqrt(d/a)`.
    pub critical_length: f64,
    /// Vanishing needs `sup u` below this.
    pub decay_sup: f64,
    /// ... and the front to have gained less than this ...
    pub stagnation_gain: f64,
    /// ... over the trailing `window_fraction` of the run.
    pub window_fraction: f64,
}

impl ClassifierRules {
    pub fn for_params(params: &ModelParams) -> Self {
        Self {
            critical_length: params.critical_length(),
            decay_sup: 1e-4 * params.carrying_capacity(),
            stagnation_gain: 1e-3 * params.h0,
            window_fraction: 0.5,
        }
    }
}

/// Classify the evidence recorded so far; `None` means undetermined.
pub fn classify_trajectory(trajectory: &Trajectory, rules: &ClassifierRules) -> Option<(Verdict, Certificate)> {
    for s in &trajectory.samples {
        if s.h >= rules.critical_length {
            return Some((
                Verdict::Spreading,
                Certificate::CriticalLength {
                    t: s.t,
                    h: s.h,
                    threshold: rules.critical_length,
                },
            ));
        }
    }
    let last = trajectory.final_sample();
    let window_start = last.t * (1.0 - rules.window_fraction);
    if window_start <= trajectory.samples[0].t {
        return None;
    }
    let earlier = trajectory.sample_at_or_before(window_start);
    let h_gain = last.h - earlier.h;
    if last.sup_u < rules.decay_sup
        && h_gain < rules.stagnation_gain
        && last.h < rules.critical_length
    {
        return Some((
            Verdict::Vanishing,
            Certificate::DecayWindow {
                t: last.t,
                sup_u: last.sup_u,
                h_gain,
                window_start: earlier.t,
            },
        ));
    }
    None
}

/// Numerical settings for one classification run.
#[derive(Debug, Clone)]
pub struct ClassifySpec {
    pub t_max: f64,
    pub step: TimeStepRule,
    pub scheme: StepScheme,
    pub record_dt: f64,
    pub gap_margin: f64,
    pub rules: ClassifierRules,
}

impl ClassifySpec {
    pub fn with_defaults(solver: &StefanSolver, t_max: f64) -> Self {
        Self {
            t_max,
            step: solver.default_step_rule(),
            scheme: StepScheme::Basic,
            record_dt: (t_max / 2000.0).max(1e-3),
            gap_margin: 10.0,
            rules: ClassifierRules::for_params(solver.params()),
        }
    }
}

/// A classified run with its trajectory evidence.
#[derive(Debug, Clone)]
pub struct ClassifiedRun {
    pub classification: Classification,
    pub trajectory: Trajectory,
}

/// Simulate until a rule fires or `t_max` is reached, and classify.
pub fn classify_run(
    solver: &StefanSolver,
    u0: &InitialData,
    spec: &ClassifySpec,
) -> Result<ClassifiedRun> {
    // the certificate can fire on the initial data alone
    if solver.params().h0 >= spec.rules.critical_length {
        let state = solver.initial_state(u0);
        let trajectory = Trajectory {
            c: solver.params().c,
            c0: None,
            samples: vec![crate::stefan::TrajectorySample {
                t: 0.0,
                h: state.h,
                sup_u: state.sup_u(),
                front_slope: state.front_slope,
                interior_gap: None,
            }],
            invariants: crate::stefan::InvariantStats {
                min_u: 0.0,
                max_u: state.sup_u(),
                density_bound: solver.params().carrying_capacity().max(u0.sup()),
                monotone_front: true,
                steps: 0,
            },
        };
        return Ok(ClassifiedRun {
            classification: Classification {
                verdict: Verdict::Spreading,
                certificate: Certificate::CriticalLength {
                    t: 0.0,
                    h: state.h,
                    threshold: spec.rules.critical_length,
                },
                diagnostics: Diagnostics {
                    final_t: 0.0,
                    final_h: state.h,
                    final_sup_u: state.sup_u(),
                    steps: 0,
                },
            },
            trajectory,
        });
    }

    let sim = SimulationSpec {
        u0: u0.clone(),
        t_max: spec.t_max,
        step: spec.step,
        scheme: spec.scheme,
        record_dt: spec.record_dt,
        snapshot_dt: None,
        c0: None,
        gap_margin: spec.gap_margin,
    };
    let rules = spec.rules;
    let out = solver.simulate_with_stop(&sim, |traj| classify_trajectory(traj, &rules).is_some())?;

    let (verdict, certificate) = classify_trajectory(&out.trajectory, &rules)
        .unwrap_or((Verdict::Undetermined, Certificate::Timeout { t_max: spec.t_max }));
    Ok(ClassifiedRun {
        classification: Classification {
            verdict,
            certificate,
            diagnostics: Diagnostics {
                final_t: out.final_state.t,
                final_h: out.final_state.h,
                final_sup_u: out.final_state.sup_u(),
                steps: out.trajectory.invariants.steps,
            },
        },
        trajectory: out.trajectory,
    })
}

/// Outcome of a threshold search.
#[derive(Debug, Clone, serde::Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ThresholdStatus {
    /// Vanishing at `sigma_lo`, spreading at `sigma_hi`, width within
    /// tolerance.
    Bracketed,
    /// A midpoint run timed out; the partial bracket is reported.
    UndeterminedAt { sigma: f64 },
    /// No spreading amplitude found up to the cap. Whether the threshold
    /// can genuinely be infinite is open; this is a report, not an error.
    PossiblyInfinite { cap: f64 },
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ThresholdResult {
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub status: ThresholdStatus,
    /// Every amplitude classified along the way, in evaluation order.
    pub evaluations: Vec<(f64, Verdict)>,
}

/// Bisect the sharp threshold `sigma*` for a fixed initial shape.
///
/// Requires `h0` below the critical length (above it no threshold exists)
/// and bracket endpoints that classify differently; comparison-principle
/// monotonicity in `sigma` makes bisection valid.
pub fn find_sigma_star(
    solver: &StefanSolver,
    family: BumpFamily,
    spec: &ClassifySpec,
    bracket: (f64, f64),
    rel_tol: f64,
) -> Result<ThresholdResult> {
    let params = solver.params();
    if params.h0 >= spec.rules.critical_length {
        return Err(Error::Precondition(format!(
            "no threshold exists: h0 = {} already reaches the critical length {} and spreading \
             happens for every amplitude",
            params.h0, spec.rules.critical_length
        )));
    }
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Precondition(format!(
            "threshold bracket must satisfy 0 < lo < hi, got ({lo}, {hi})"
        )));
    }

    let mut evaluations = Vec::new();
    let mut classify_sigma = |sigma: f64| -> Result<Verdict> {
        let u0 = make_initial_bump(params.h0, sigma, family)?;
        let verdict = classify_run(solver, &u0, spec)?.classification.verdict;
        evaluations.push((sigma, verdict));
        Ok(verdict)
    };

    let v_lo = classify_sigma(lo)?;
    let v_hi = classify_sigma(hi)?;
    match (v_lo, v_hi) {
        (Verdict::Vanishing, Verdict::Spreading) => {}
        (Verdict::Undetermined, _) => {
            return Ok(ThresholdResult {
                sigma_lo: lo,
                sigma_hi: hi,
                status: ThresholdStatus::UndeterminedAt { sigma: lo },
                evaluations,
            })
        }
        (_, Verdict::Undetermined) => {
            return Ok(ThresholdResult {
                sigma_lo: lo,
                sigma_hi: hi,
                status: ThresholdStatus::UndeterminedAt { sigma: hi },
                evaluations,
            })
        }
        _ => {
            return Err(Error::Bracket(format!(
                "threshold bracket endpoints classify the same way ({v_lo} at {lo}, {v_hi} at \
                 {hi}); widen the bracket"
            )))
        }
    }

    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        match classify_sigma(mid)? {
            Verdict::Vanishing => lo = mid,
            Verdict::Spreading => hi = mid,
            Verdict::Undetermined => {
                return Ok(ThresholdResult {
                    sigma_lo: lo,
                    sigma_hi: hi,
                    status: ThresholdStatus::UndeterminedAt { sigma: mid },
                    evaluations,
                })
            }
        }
    }
    Ok(ThresholdResult {
        sigma_lo: lo,
        sigma_hi: hi,
        status: ThresholdStatus::Bracketed,
        evaluations,
    })
}

/// As [`find_sigma_star`], but widen the bracket automatically: the upper
/// end is quadrupled until spreading appears (reporting a possibly
/// infinite threshold at the cap), the lower end is quartered until
/// vanishing appears.
pub fn find_sigma_star_auto(
    solver: &StefanSolver,
    family: BumpFamily,
    spec: &ClassifySpec,
    initial_bracket: (f64, f64),
    rel_tol: f64,
    sigma_cap: f64,
) -> Result<ThresholdResult> {
    let params = solver.params();
    if params.h0 >= spec.rules.critical_length {
        return Err(Error::Precondition(format!(
            "no threshold exists: h0 = {} already reaches the critical length {}",
            params.h0, spec.rules.critical_length
        )));
    }
    let classify_sigma = |sigma: f64| -> Result<Verdict> {
        let u0 = make_initial_bump(params.h0, sigma, family)?;
        Ok(classify_run(solver, &u0, spec)?.classification.verdict)
    };

    let (mut lo, mut hi) = initial_bracket;
    let mut widened = Vec::new();
    while classify_sigma(hi)? != Verdict::Spreading {
        widened.push((hi, Verdict::Vanishing));
        hi *= 4.0;
        if hi > sigma_cap {
            return Ok(ThresholdResult {
                sigma_lo: lo,
                sigma_hi: sigma_cap,
                status: ThresholdStatus::PossiblyInfinite { cap: sigma_cap },
                evaluations: widened,
            });
        }
    }
    while classify_sigma(lo)? != Verdict::Vanishing {
        lo *= 0.25;
        if lo < 1e-12 {
            return Err(Error::Bracket(
                "no vanishing amplitude found above 1e-12".into(),
            ));
        }
    }
    find_sigma_star(solver, family, spec, (lo, hi), rel_tol)
}

/// Verdicts along an amplitude ladder, for the comparison-principle
/// monotonicity audit: all vanishing amplitudes must sit below all
/// spreading ones.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MonotonicityAudit {
    pub verdicts: Vec<(f64, Verdict)>,
    pub sorted: bool,
}

pub fn verdict_monotonicity_audit(
    solver: &StefanSolver,
    family: BumpFamily,
    spec: &ClassifySpec,
    sigmas: &[f64],
) -> Result<MonotonicityAudit> {
    let mut verdicts = Vec::with_capacity(sigmas.len());
    for &sigma in sigmas {
        let u0 = make_initial_bump(solver.params().h0, sigma, family)?;
        verdicts.push((sigma, classify_run(solver, &u0, spec)?.classification.verdict));
    }
    let last_vanishing = verdicts
        .iter()
        .rposition(|(_, v)| *v == Verdict::Vanishing);
    let first_spreading = verdicts
        .iter()
        .position(|(_, v)| *v == Verdict::Spreading);
    let no_undetermined = verdicts.iter().all(|(_, v)| *v != Verdict::Undetermined);
    let sorted = no_undetermined
        && match (last_vanishing, first_spreading) {
            (Some(v), Some(s)) => v < s,
            _ => true,
        };
    Ok(MonotonicityAudit { verdicts, sorted })
}

/// Front-law regime relative to the critical speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    BelowCritical,
    AtCritical,
    AboveCritical,
}

impl Regime {
    /// Compare a shift speed against a computed critical speed, treating
    /// relative differences below 1e-8 as equal.
    pub fn of(c: f64, c0: f64) -> Regime {
        if (c - c0).abs() <= 1e-8 * c0.max(1.0) {
            Regime::AtCritical
        } else if c < c0 {
            Regime::BelowCritical
        } else {
            Regime::AboveCritical
        }
    }
}

/// Tail statistics of the appropriate gap series: `h - ct` below the
/// critical speed (limit `L0`), `h - c0 t` at or above it.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AsymptoticReport {
    pub regime: Regime,
    /// Mean of the gap over the trailing window.
    pub gap_estimate: f64,
    /// Max minus min of the gap over the trailing window.
    pub tail_oscillation: f64,
    pub window_start: f64,
    pub samples_used: usize,
}

pub fn asymptotic_report(
    trajectory: &Trajectory,
    verdict: Verdict,
    regime: Regime,
    tail_fraction: f64,
) -> Result<AsymptoticReport> {
    if verdict != Verdict::Spreading {
        return Err(Error::Precondition(format!(
            "asymptotic report needs a spreading trajectory, got verdict {verdict}"
        )));
    }
    if regime != Regime::BelowCritical && trajectory.c0.is_none() {
        return Err(Error::Precondition(
            "gap series h - c0 t needs the critical speed recorded in the trajectory".into(),
        ));
    }
    let t_final = trajectory.final_sample().t;
    let window_start = t_final * (1.0 - tail_fraction);
    let mut gaps = Vec::new();
    for (i, s) in trajectory.samples.iter().enumerate() {
        if s.t >= window_start {
            let gap = match regime {
                Regime::BelowCritical => trajectory.gap_shift(i),
                _ => trajectory.gap_critical(i).unwrap(),
            };
            gaps.push(gap);
        }
    }
    if gaps.len() < 2 {
        return Err(Error::Precondition(
            "trailing window holds fewer than 2 samples".into(),
        ));
    }
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let max = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(AsymptoticReport {
        regime,
        gap_estimate: mean,
        tail_oscillation: max - min,
        window_start,
        samples_used: gaps.len(),
    })
}

/// Template for sweep cells: everything except the swept coordinates.
#[derive(Debug, Clone)]
pub struct SweepTemplate {
    pub params: ModelParams,
    pub climate_kind: TransitionKind,
    pub mu0: f64,
    pub mu_slope: f64,
    pub family: BumpFamily,
    pub sigma: f64,
    pub grid_n: usize,
    pub t_max: f64,
}

/// Second sweep axis: initial amplitude or initial range length.
#[derive(Debug, Clone)]
pub enum SweepAxis {
    Sigma(Vec<f64>),
    RangeLength(Vec<f64>),
}

impl SweepAxis {
    fn len(&self) -> usize {
        match self {
            SweepAxis::Sigma(v) => v.len(),
            SweepAxis::RangeLength(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepCell {
    pub row: usize,
    pub col: usize,
    pub c: f64,
    pub sigma: f64,
    pub h0: f64,
    pub verdict: Option<Verdict>,
    pub certificate: Option<Certificate>,
    pub error: Option<String>,
}

/// Classify every `(c, axis)` cell. Cells run independently on a bounded
/// worker pool; results are merged in row-major grid order regardless of
/// completion order, and per-cell errors are recorded without aborting
/// the sweep.
pub fn phase_sweep(
    template: &SweepTemplate,
    speeds: &[f64],
    axis: &SweepAxis,
    threads: usize,
) -> Result<Vec<SweepCell>> {
    if speeds.is_empty() || axis.len() == 0 {
        return Err(Error::Precondition("sweep grid must be non-empty".into()));
    }
    let mut coords = Vec::new();
    for (row, &c) in speeds.iter().enumerate() {
        for col in 0..axis.len() {
            let (sigma, h0) = match axis {
                SweepAxis::Sigma(v) => (v[col], template.params.h0),
                SweepAxis::RangeLength(v) => (template.sigma, v[col]),
            };
            coords.push((row, col, c, sigma, h0));
        }
    }

    let run_cell = |&(row, col, c, sigma, h0): &(usize, usize, f64, f64, f64)| -> SweepCell {
        let params = ModelParams {
            c,
            h0,
            ..template.params
        };
        let outcome = (|| -> Result<Classification> {
            let climate = ClimateProfile::new(&params, template.climate_kind);
            let mu = ExpansionRate::affine(&params, template.mu0, template.mu_slope);
            let solver = StefanSolver::new(&params, &climate, &mu, template.grid_n)?;
            let u0 = make_initial_bump(h0, sigma, template.family)?;
            let spec = ClassifySpec::with_defaults(&solver, template.t_max);
            Ok(classify_run(&solver, &u0, &spec)?.classification)
        })();
        match outcome {
            Ok(classification) => SweepCell {
                row,
                col,
                c,
                sigma,
                h0,
                verdict: Some(classification.verdict),
                certificate: Some(classification.certificate),
                error: None,
            },
            Err(e) => SweepCell {
                row,
                col,
                c,
                sigma,
                h0,
                verdict: None,
                certificate: None,
                error: Some(e.to_string()),
            },
        }
    };

    let mut cells: Vec<SweepCell> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Breakdown(format!("worker pool: {e}")))?;
        pool.install(|| coords.par_iter().map(run_cell).collect())
    } else {
        coords.iter().map(run_cell).collect()
    };
    cells.sort_by_key(|cell| (cell.row, cell.col));
    Ok(cells)
}
