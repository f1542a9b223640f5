//! Experiment configuration: one TOML file per experiment.

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// The reproducible studies the harness knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    Voronovskaya,
    SemigroupRate,
    Longrun,
    Holder,
    Martingale,
    FvVoronovskaya,
    FvSemigroup,
    Moments,
    Assumptions,
}

impl StudyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StudyKind::Voronovskaya => "voronovskaya",
            StudyKind::SemigroupRate => "semigroup-rate",
            StudyKind::Longrun => "longrun",
            StudyKind::Holder => "holder",
            StudyKind::Martingale => "martingale",
            StudyKind::FvVoronovskaya => "fv-voronovskaya",
            StudyKind::FvSemigroup => "fv-semigroup",
            StudyKind::Moments => "moments",
            StudyKind::Assumptions => "assumptions",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub space: Space,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub function: FunctionSpec,
    #[serde(default)]
    pub mutation: MutationSpec,
    #[serde(default)]
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub kind: StudyKind,
    pub seed: u64,
    /// Output directory; relative paths resolve against the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    /// Subdirectory name under the default output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Space {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// `root:K`, `fixed:D` or `explicit:N=D;N=D`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<String>,
    /// Resolution `m` of the evaluation grid `{k/m}`.
    #[serde(default = "default_grid")]
    pub grid: u32,
    /// Start point of simulated chains; the barycenter when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
}

fn default_grid() -> u32 {
    20
}

impl Default for Space {
    fn default() -> Self {
        Self {
            d: None,
            schedule: None,
            grid: default_grid(),
            point: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub t: Vec<f64>,
    /// Frequencies for the moment tables.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x: Vec<f64>,
    /// Moment orders `beta` (the `2 beta`-th moment is measured).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub beta: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    /// Polynomial in `x1..xd`, e.g. `"x1^2*x2 - 0.5*x3"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polynomial: Option<String>,
    /// A named test function, see [`crate::expr::builtin`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    /// Moment functional for the measure-valued studies: `linear`, `squared-mean` or `variance`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<String>,
    /// Polynomial in `z` fed to the functional; `"z"` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MutationSpec {
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_boundary")]
    pub boundary: String,
    /// Constant of the rate assumptions; `theta` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    /// Exponent of the fixed-dimension approximation check.
    #[serde(default = "default_gamma_exponent")]
    pub exponent: f64,
}

fn default_model() -> String {
    "none".into()
}

fn default_theta() -> f64 {
    1.0
}

fn default_boundary() -> String {
    "censored".into()
}

fn default_gamma_exponent() -> f64 {
    2.0
}

impl Default for MutationSpec {
    fn default() -> Self {
        Self {
            model: default_model(),
            theta: default_theta(),
            boundary: default_boundary(),
            constant: None,
            exponent: default_gamma_exponent(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Method {
    /// `lattice`, `polynomial` or `monte-carlo`.
    #[serde(default = "default_route")]
    pub route: String,
    #[serde(default = "default_paths")]
    pub paths: usize,
    /// Chain length for the martingale study.
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Convergence tolerance for the long-run iteration.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

fn default_route() -> String {
    "lattice".into()
}

fn default_paths() -> usize {
    1000
}

fn default_steps() -> usize {
    100
}

fn default_tol() -> f64 {
    1e-13
}

fn default_max_iterations() -> usize {
    100_000
}

impl Default for Method {
    fn default() -> Self {
        Self {
            route: default_route(),
            paths: default_paths(),
            steps: default_steps(),
            tol: default_tol(),
            max_iterations: default_max_iterations(),
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates a config file's text.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::parse(text)
            .map_err(|e| CliError::config("<document>", e.message()))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let message = e.inner().message().to_string();
            CliError::config(field_name(&path, &message), message)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks the cross-field requirements of the selected study.
    pub fn validate(&self) -> Result<(), CliError> {
        use StudyKind::*;
        let kind = self.experiment.kind;
        let needs_d = matches!(
            kind,
            Voronovskaya | SemigroupRate | Longrun | Holder | Martingale | FvSemigroup
        );
        if needs_d {
            match self.space.d {
                None => {
                    return Err(CliError::config(
                        "space.d",
                        format!("required by the {} study", kind.as_str()),
                    ))
                }
                Some(d) if d < 2 => return Err(CliError::config("space.d", "must be at least 2")),
                _ => {}
            }
        }
        if matches!(kind, FvVoronovskaya | Assumptions)
            && self.space.schedule.is_none()
            && self.space.d.is_none()
        {
            return Err(CliError::config(
                "space.schedule",
                "either a schedule or a fixed d is required",
            ));
        }
        if let Some(s) = &self.space.schedule {
            crate::studies::parse_schedule(s)?;
        }
        if kind != Moments || !self.sweep.n.is_empty() {
            if self.sweep.n.is_empty() {
                return Err(CliError::config("sweep.n", "must list at least one n"));
            }
            if self.sweep.n.contains(&0) {
                return Err(CliError::config("sweep.n", "entries must be positive"));
            }
        }
        if matches!(kind, SemigroupRate | FvSemigroup) && self.sweep.t.is_empty() {
            return Err(CliError::config("sweep.t", "must list at least one t"));
        }
        if self.sweep.t.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(CliError::config(
                "sweep.t",
                "entries must be finite and non-negative",
            ));
        }
        if kind == Moments {
            if self.sweep.x.is_empty() {
                return Err(CliError::config(
                    "sweep.x",
                    "must list at least one frequency",
                ));
            }
            if self.sweep.x.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(CliError::config("sweep.x", "entries must lie in [0, 1]"));
            }
            if self.sweep.beta.is_empty() {
                return Err(CliError::config(
                    "sweep.beta",
                    "must list at least one order",
                ));
            }
        }
        if self.sweep.beta.contains(&0) {
            return Err(CliError::config("sweep.beta", "orders must be positive"));
        }
        if let Some(a) = self.sweep.alpha {
            if !(a > 0.0 && a <= 1.0) {
                return Err(CliError::config("sweep.alpha", "must lie in (0, 1]"));
            }
        }
        if matches!(kind, Voronovskaya | SemigroupRate)
            && self.function.polynomial.is_none()
            && self.function.builtin.is_none()
        {
            return Err(CliError::config(
                "function.polynomial",
                "a polynomial or builtin test function is required",
            ));
        }
        if let (Some(p), Some(d)) = (&self.function.polynomial, self.space.d) {
            crate::expr::parse_polynomial(p, d)
                .map_err(|m| CliError::config("function.polynomial", m))?;
        }
        if let Some(b) = &self.function.builtin {
            if !crate::expr::BUILTINS.contains(&b.as_str()) {
                return Err(CliError::config(
                    "function.builtin",
                    format!(
                        "unknown builtin `{b}`; expected one of {}",
                        crate::expr::BUILTINS.join(", ")
                    ),
                ));
            }
        }
        if let Some(f) = &self.function.functional {
            if !["linear", "squared-mean", "variance"].contains(&f.as_str()) {
                return Err(CliError::config(
                    "function.functional",
                    format!("unknown functional `{f}`"),
                ));
            }
        }
        if let Some(g) = &self.function.gamma {
            crate::expr::parse_univariate(g).map_err(|m| CliError::config("function.gamma", m))?;
        }
        if !["none", "uniform", "ohta-kimura"].contains(&self.mutation.model.as_str()) {
            return Err(CliError::config(
                "mutation.model",
                format!(
                    "unknown model `{}`; expected none, uniform or ohta-kimura",
                    self.mutation.model
                ),
            ));
        }
        if !["censored", "reflecting", "killing"].contains(&self.mutation.boundary.as_str()) {
            return Err(CliError::config(
                "mutation.boundary",
                format!("unknown boundary `{}`", self.mutation.boundary),
            ));
        }
        if !(self.mutation.theta.is_finite() && self.mutation.theta >= 0.0) {
            return Err(CliError::config(
                "mutation.theta",
                "must be finite and non-negative",
            ));
        }
        if !["lattice", "polynomial", "monte-carlo"].contains(&self.method.route.as_str()) {
            return Err(CliError::config(
                "method.route",
                format!("unknown route `{}`", self.method.route),
            ));
        }
        if (matches!(kind, Holder | Martingale) || self.method.route == "monte-carlo")
            && self.method.paths < 2
        {
            return Err(CliError::config(
                "method.paths",
                "at least 2 paths are needed",
            ));
        }
        if let (Some(p), Some(d)) = (&self.space.point, self.space.d) {
            if p.len() != d {
                return Err(CliError::config(
                    "space.point",
                    format!("expected {d} coordinates, got {}", p.len()),
                ));
            }
            bernsim_core::SimplexPoint::new(p.clone())
                .map_err(|e| CliError::config("space.point", e.to_string()))?;
        }
        if self.space.grid == 0 {
            return Err(CliError::config("space.grid", "must be positive"));
        }
        Ok(())
    }
}

/// Names the offending field: the path, extended by the key quoted in
/// "missing field `k`" / "unknown field `k`" messages.
fn field_name(path: &str, message: &str) -> String {
    let quoted = message
        .split('`')
        .nth(1)
        .filter(|_| message.starts_with("missing field") || message.starts_with("unknown field"));
    match (path, quoted) {
        (".", Some(k)) | ("", Some(k)) => k.to_string(),
        (p, Some(k)) if message.starts_with("missing field") => format!("{p}.{k}"),
        (p, Some(k)) if p.ends_with(k) => p.to_string(),
        (p, Some(k)) => format!("{p}.{k}"),
        (p, None) => p.to_string(),
    }
}
