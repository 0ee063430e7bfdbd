//! Plain-text run configuration: one `key = value` per line, `#`
//! comments, documented in `docs/config.md`. Every run is identified by
//! the SHA-256 digest of its canonicalized text (keys sorted, comments
//! and whitespace stripped), which all output files embed.

use std::collections::BTreeMap;

use crate::model::{
    make_initial_bump, validate, BumpFamily, ClimateProfile, ExpansionRate, InitialData,
    ModelParams, Mode, TransitionKind, ValidationReport,
};
use crate::output::digest_hex;
use crate::stefan::{SimulationSpec, StefanSolver, StepScheme, TimeStepRule};
use crate::{Error, Result};

/// `auto` or an explicit number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AutoOr {
    Auto,
    Value(f64),
}

impl AutoOr {
    pub fn or(self, fallback: f64) -> f64 {
        match self {
            AutoOr::Auto => fallback,
            AutoOr::Value(v) => v,
        }
    }
}

/// A fully parsed run configuration. Only the six core constants have no
/// default.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub d: f64,
    pub a: f64,
    pub a0: f64,
    pub b: f64,
    pub c: f64,
    pub h0: f64,
    pub l0: f64,
    pub mode: Mode,
    pub climate: TransitionKind,
    pub mu0: f64,
    pub mu_slope: f64,
    pub shape: BumpFamily,
    pub sigma: f64,
    pub grid_n: usize,
    pub dt: AutoOr,
    pub cfl: f64,
    pub dt_max: AutoOr,
    pub scheme: StepScheme,
    pub t_max: f64,
    pub record_dt: AutoOr,
    /// `0` disables snapshots.
    pub snapshot_dt: f64,
    pub gap_margin: f64,
    pub bvp_tol: f64,
    pub c0_tol: f64,
    pub l0_tol: f64,
    pub trunc_tol: f64,
    pub points_per_scale: usize,
    /// Digest of the canonicalized source text.
    pub hash: String,
}

const REQUIRED_KEYS: [&str; 6] = ["d", "a", "a0", "b", "c", "h0"];
const KNOWN_KEYS: [&str; 27] = [
    "d",
    "a",
    "a0",
    "b",
    "c",
    "h0",
    "l0",
    "mode",
    "climate",
    "mu0",
    "mu_slope",
    "shape",
    "sigma",
    "grid_n",
    "dt",
    "cfl",
    "dt_max",
    "scheme",
    "t_max",
    "record_dt",
    "snapshot_dt",
    "gap_margin",
    "bvp_tol",
    "c0_tol",
    "l0_tol",
    "trunc_tol",
    "points_per_scale",
];

/// Split config text into (key, value) pairs: comments and blank lines
/// dropped, keys checked against the schema, duplicates rejected.
fn entries(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected `key = value`, got '{raw}'", lineno + 1))
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!(
                "line {}: unknown key '{key}'",
                lineno + 1
            )));
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(Error::Config(format!(
                "line {}: duplicate key '{key}'",
                lineno + 1
            )));
        }
    }
    Ok(map)
}

/// Canonical form: sorted `key = value` lines, comments and blank lines
/// stripped.
pub fn canonicalize(text: &str) -> Result<String> {
    let map = entries(text)?;
    let mut out = String::new();
    for (key, value) in &map {
        out.push_str(key);
        out.push_str(" = ");
        out.push_str(value);
        out.push('\n');
    }
    Ok(out)
}

/// SHA-256 digest of the canonicalized text.
pub fn config_hash(text: &str) -> Result<String> {
    Ok(digest_hex(&canonicalize(text)?))
}

fn parse_f64(map: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>> {
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<f64>()
            .map(Some)
            .map_err(|_| Error::Config(format!("field '{key}': invalid number '{raw}'"))),
    }
}

fn parse_auto(map: &BTreeMap<String, String>, key: &str) -> Result<AutoOr> {
    match map.get(key).map(String::as_str) {
        None | Some("auto") => Ok(AutoOr::Auto),
        Some(raw) => raw
            .parse::<f64>()
            .map(AutoOr::Value)
            .map_err(|_| Error::Config(format!("field '{key}': expected 'auto' or a number"))),
    }
}

fn parse_usize(map: &BTreeMap<String, String>, key: &str, default: usize) -> Result<usize> {
    match map.get(key) {
        None => Ok(default),
        Some(raw) => raw
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("field '{key}': invalid integer '{raw}'"))),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let map = entries(text)?;
        for key in REQUIRED_KEYS {
            if !map.contains_key(key) {
                return Err(Error::Config(format!("missing required field '{key}'")));
            }
        }
        let required = |key: &str| -> Result<f64> {
            parse_f64(&map, key).map(|v| v.expect("required key present"))
        };

        let mode = match map.get("mode").map(String::as_str) {
            None | Some("paper") => Mode::Paper,
            Some("relaxed") => Mode::Relaxed,
            Some(other) => {
                return Err(Error::Config(format!(
                    "field 'mode': expected paper|relaxed, got '{other}'"
                )))
            }
        };
        let climate = match map.get("climate").map(String::as_str) {
            None | Some("linear") => TransitionKind::Linear,
            Some("cubic") => TransitionKind::Cubic,
            Some(other) => {
                return Err(Error::Config(format!(
                    "field 'climate': expected linear|cubic, got '{other}'"
                )))
            }
        };
        let shape = match map.get("shape") {
            None => BumpFamily::Cosine,
            Some(raw) => BumpFamily::parse(raw).ok_or_else(|| {
                Error::Config(format!("field 'shape': unknown family '{raw}'"))
            })?,
        };
        let scheme = match map.get("scheme").map(String::as_str) {
            None | Some("basic") => StepScheme::Basic,
            Some("corrected") => StepScheme::Corrected,
            Some(other) => {
                return Err(Error::Config(format!(
                    "field 'scheme': expected basic|corrected, got '{other}'"
                )))
            }
        };

        Ok(RunConfig {
            d: required("d")?,
            a: required("a")?,
            a0: required("a0")?,
            b: required("b")?,
            c: required("c")?,
            h0: required("h0")?,
            l0: parse_f64(&map, "l0")?.unwrap_or(1.0),
            mode,
            climate,
            mu0: parse_f64(&map, "mu0")?.unwrap_or(1.0),
            mu_slope: parse_f64(&map, "mu_slope")?.unwrap_or(0.0),
            shape,
            sigma: parse_f64(&map, "sigma")?.unwrap_or(1.0),
            grid_n: parse_usize(&map, "grid_n", 2048)?,
            dt: parse_auto(&map, "dt")?,
            cfl: parse_f64(&map, "cfl")?.unwrap_or(0.5),
            dt_max: parse_auto(&map, "dt_max")?,
            scheme,
            t_max: parse_f64(&map, "t_max")?.unwrap_or(200.0),
            record_dt: parse_auto(&map, "record_dt")?,
            snapshot_dt: parse_f64(&map, "snapshot_dt")?.unwrap_or(0.0),
            gap_margin: parse_f64(&map, "gap_margin")?.unwrap_or(10.0),
            bvp_tol: parse_f64(&map, "bvp_tol")?.unwrap_or(1e-10),
            c0_tol: parse_f64(&map, "c0_tol")?.unwrap_or(1e-8),
            l0_tol: parse_f64(&map, "l0_tol")?.unwrap_or(1e-6),
            trunc_tol: parse_f64(&map, "trunc_tol")?.unwrap_or(1e-8),
            points_per_scale: parse_usize(&map, "points_per_scale", 512)?,
            hash: digest_hex(&canonicalize(text)?),
        })
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            d: self.d,
            a: self.a,
            a0: self.a0,
            b: self.b,
            l0: self.l0,
            c: self.c,
            h0: self.h0,
            mode: self.mode,
        }
    }

    pub fn climate(&self) -> ClimateProfile {
        ClimateProfile::new(&self.params(), self.climate)
    }

    pub fn mu(&self) -> ExpansionRate {
        ExpansionRate::affine(&self.params(), self.mu0, self.mu_slope)
    }

    pub fn initial_data(&self) -> Result<InitialData> {
        make_initial_bump(self.h0, self.sigma, self.shape)
    }

    /// Run the model validation over the assembled pieces.
    pub fn validate(&self) -> Result<ValidationReport> {
        let params = self.params();
        let report = validate(&params, &self.climate(), &self.mu(), &self.initial_data()?);
        Ok(report)
    }

    pub fn stefan_solver(&self) -> Result<StefanSolver> {
        StefanSolver::new(&self.params(), &self.climate(), &self.mu(), self.grid_n)
    }

    pub fn step_rule(&self) -> TimeStepRule {
        match self.dt {
            AutoOr::Value(dt) => TimeStepRule::Fixed(dt),
            AutoOr::Auto => {
                let params = self.params();
                let rate = params.a.abs().max(params.a0.abs()).max(1e-6);
                TimeStepRule::Adaptive {
                    cfl: self.cfl,
                    dt_max: self.dt_max.or(0.05 / rate),
                }
            }
        }
    }

    /// Assemble the simulation spec; `c0` feeds the `h - c0 t` column.
    pub fn simulation_spec(&self, c0: Option<f64>) -> Result<SimulationSpec> {
        Ok(SimulationSpec {
            u0: self.initial_data()?,
            t_max: self.t_max,
            step: self.step_rule(),
            scheme: self.scheme,
            record_dt: self.record_dt.or(self.t_max / 1000.0),
            snapshot_dt: (self.snapshot_dt > 0.0).then_some(self.snapshot_dt),
            c0,
            gap_margin: self.gap_margin,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = "\
# reference instance
d = 1.0
a = 1.0
a0 = -1.0
b = 1.0
c = 0.25
h0 = 2.0
mu0 = 0.5
mu_slope = 0.25
";

    #[test]
    fn parses_reference_with_defaults() {
        let cfg = RunConfig::parse(REFERENCE).unwrap();
        assert_eq!(cfg.d, 1.0);
        assert_eq!(cfg.a0, -1.0);
        assert_eq!(cfg.l0, 1.0);
        assert_eq!(cfg.grid_n, 2048);
        assert_eq!(cfg.mode, Mode::Paper);
        assert_eq!(cfg.dt, AutoOr::Auto);
        assert!((cfg.mu().at_favourable() - 1.0).abs() < 1e-14);
        assert!(cfg.validate().unwrap().pass());
    }

    #[test]
    fn missing_required_field_is_named() {
        let err = RunConfig::parse("d = 1.0\na = 1.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("a0"), "message was: {msg}");
    }

    #[test]
    fn unknown_and_duplicate_keys_are_rejected() {
        let err = RunConfig::parse(&format!("{REFERENCE}\nbogus = 1\n")).unwrap_err();
        assert!(err.to_string().contains("bogus"));
        let err = RunConfig::parse(&format!("{REFERENCE}\nd = 2.0\n")).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn canonicalization_sorts_and_strips() {
        let messy = "b = 1.0 # competition\n\n  c =   0.25\na = 1.0\n";
        let canon = canonicalize(messy).unwrap();
        assert_eq!(canon, "a = 1.0\nb = 1.0\nc = 0.25\n");
    }

    #[test]
    fn hash_ignores_comments_and_ordering() {
        let reordered = "\
c = 0.25
b = 1.0
a0 = -1.0   # ahead of the shift
a = 1.0
d = 1.0
mu_slope = 0.25
mu0 = 0.5
h0 = 2.0
";
        assert_eq!(
            config_hash(REFERENCE).unwrap(),
            config_hash(reordered).unwrap()
        );
        assert_ne!(
            config_hash(REFERENCE).unwrap(),
            config_hash(&REFERENCE.replace("0.25", "0.26")).unwrap()
        );
    }

    #[test]
    fn fixed_dt_round_trips_into_the_step_rule() {
        let cfg = RunConfig::parse(&format!("{REFERENCE}dt = 0.001\n")).unwrap();
        assert!(matches!(cfg.step_rule(), TimeStepRule::Fixed(dt) if dt == 0.001));
        let cfg = RunConfig::parse(&format!("{REFERENCE}dt = auto\ndt_max = 0.2\n")).unwrap();
        assert!(
            matches!(cfg.step_rule(), TimeStepRule::Adaptive { dt_max, .. } if dt_max == 0.2)
        );
    }
}
