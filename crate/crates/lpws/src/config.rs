//! Flat `key = value` experiment configuration.
//!
//! Lines starting with `#` and blank lines are ignored. Lists are comma
//! separated. Keys absent from the file take the defaults of the chosen
//! experiment; unknown keys are rejected.

use std::fmt;
use std::str::FromStr;

use lpws_core::simulation::SupportPlacement;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Robustness,
    Errors,
    Solutions,
    Coverage,
    Bound,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Robustness => "robustness",
            Self::Errors => "errors",
            Self::Solutions => "solutions",
            Self::Coverage => "coverage",
            Self::Bound => "bound",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "robustness" => Ok(Self::Robustness),
            "errors" => Ok(Self::Errors),
            "solutions" => Ok(Self::Solutions),
            "coverage" => Ok(Self::Coverage),
            "bound" => Ok(Self::Bound),
            _ => Err(CliError::Input(format!("unknown experiment '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    LpwsAsymptotic,
    LpwsExactOracle,
    LpwsGaussianApprox,
    LoglikCv,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::LpwsAsymptotic,
        Method::LpwsExactOracle,
        Method::LpwsGaussianApprox,
        Method::LoglikCv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::LpwsAsymptotic => "lpws_asymptotic",
            Self::LpwsExactOracle => "lpws_exact_oracle",
            Self::LpwsGaussianApprox => "lpws_gaussian_approx",
            Self::LoglikCv => "loglik_cv",
        }
    }

    /// Stream offset separating this method's Monte Carlo draws from the others'.
    pub(crate) fn stream(self) -> u64 {
        match self {
            Self::LpwsAsymptotic => 0,
            Self::LpwsExactOracle => 1,
            Self::LpwsGaussianApprox => 2,
            Self::LoglikCv => 3,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| CliError::Input(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    /// Coefficient scales; every experiment but robustness uses one.
    pub scales: Vec<f64>,
    pub reps: usize,
    pub alpha: f64,
    /// Multiplier `c` of the asymptotic rule and of the cone constant.
    pub tuning_c: f64,
    /// Multiplier applied to the simulated quantile by the exact and
    /// Gaussian rules.
    pub quantile_c: f64,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub mc_samples: usize,
    pub folds: usize,
    pub grid_points: usize,
    pub grid_min_ratio: f64,
    pub max_iters: usize,
    pub tol_kkt: f64,
    pub placement: SupportPlacement,
    /// Record wall time per fit. Off by default so output is byte-stable.
    pub timing: bool,
    pub coverage_trials: usize,
    pub kappa_samples: usize,
    /// Bound experiment: give up after this many replications.
    pub max_reps: usize,
}

const KEYS: &[&str] = &[
    "n", "p", "s", "beta_scale", "scales", "reps", "alpha", "tuning_c", "quantile_c", "methods",
    "seed", "mc_samples", "folds", "grid_points", "grid_min_ratio", "max_iters", "tol_kkt",
    "placement", "timing", "coverage_trials", "kappa_samples", "max_reps",
];

impl ExperimentConfig {
    /// Defaults for `kind`, following the published simulation settings.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = Self {
            kind,
            n: 500,
            p: 20,
            s: 5,
            scales: vec![1.0],
            reps: 100,
            alpha: 0.05,
            tuning_c: 2.0,
            quantile_c: 2.0,
            methods: vec![Method::LpwsAsymptotic, Method::LoglikCv],
            seed: 20_190_101,
            mc_samples: 10_000,
            folds: 10,
            grid_points: 50,
            grid_min_ratio: 1e-3,
            max_iters: 1000,
            tol_kkt: 1e-7,
            placement: SupportPlacement::Leading,
            timing: false,
            coverage_trials: 2000,
            kappa_samples: 5000,
            max_reps: 500,
        };
        match kind {
            ExperimentKind::Robustness => Self {
                scales: vec![0.1, 0.2, 0.5, 1.0, 1.5, 2.0, 3.0],
                ..base
            },
            ExperimentKind::Errors => Self {
                n: 100,
                p: 1000,
                s: 10,
                scales: vec![0.5],
                // The error study quotes the simulated quantiles without a multiplier.
                quantile_c: 1.0,
                methods: Method::ALL.to_vec(),
                ..base
            },
            ExperimentKind::Solutions => Self { reps: 1, ..base },
            ExperimentKind::Coverage => Self {
                n: 200,
                p: 50,
                s: 3,
                scales: vec![0.5],
                reps: 5,
                alpha: 0.1,
                methods: vec![Method::LpwsExactOracle, Method::LpwsGaussianApprox, Method::LpwsAsymptotic],
                ..base
            },
            ExperimentKind::Bound => Self {
                s: 3,
                scales: vec![0.3],
                reps: 50,
                methods: vec![Method::LpwsExactOracle],
                ..base
            },
        }
    }

    /// Parses `text` over the defaults of `kind`.
    pub fn parse(kind: ExperimentKind, text: &str) -> Result<Self> {
        let mut cfg = Self::defaults(kind);
        let mut quantile_c_set = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Input(format!("config line {}: expected key = value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| CliError::Input(format!("config line {}: {key}: {what}", lineno + 1));
            match key {
                "n" => cfg.n = num(value).map_err(|_| bad("expected an integer"))?,
                "p" => cfg.p = num(value).map_err(|_| bad("expected an integer"))?,
                "s" => cfg.s = num(value).map_err(|_| bad("expected an integer"))?,
                "beta_scale" | "scales" => {
                    cfg.scales = list(value).map_err(|_| bad("expected numbers"))?;
                }
                "reps" => cfg.reps = num(value).map_err(|_| bad("expected an integer"))?,
                "alpha" => cfg.alpha = num(value).map_err(|_| bad("expected a number"))?,
                "tuning_c" => cfg.tuning_c = num(value).map_err(|_| bad("expected a number"))?,
                "quantile_c" => {
                    cfg.quantile_c = num(value).map_err(|_| bad("expected a number"))?;
                    quantile_c_set = true;
                }
                "methods" => cfg.methods = list(value)?,
                "seed" => cfg.seed = num(value).map_err(|_| bad("expected an integer"))?,
                "mc_samples" => cfg.mc_samples = num(value).map_err(|_| bad("expected an integer"))?,
                "folds" => cfg.folds = num(value).map_err(|_| bad("expected an integer"))?,
                "grid_points" => cfg.grid_points = num(value).map_err(|_| bad("expected an integer"))?,
                "grid_min_ratio" => cfg.grid_min_ratio = num(value).map_err(|_| bad("expected a number"))?,
                "max_iters" => cfg.max_iters = num(value).map_err(|_| bad("expected an integer"))?,
                "tol_kkt" => cfg.tol_kkt = num(value).map_err(|_| bad("expected a number"))?,
                "placement" => {
                    cfg.placement = match value {
                        "leading" => SupportPlacement::Leading,
                        "random" => SupportPlacement::Random,
                        _ => return Err(bad("expected leading or random")),
                    }
                }
                "timing" => cfg.timing = num(value).map_err(|_| bad("expected true or false"))?,
                "coverage_trials" => cfg.coverage_trials = num(value).map_err(|_| bad("expected an integer"))?,
                "kappa_samples" => cfg.kappa_samples = num(value).map_err(|_| bad("expected an integer"))?,
                "max_reps" => cfg.max_reps = num(value).map_err(|_| bad("expected an integer"))?,
                _ => {
                    return Err(CliError::Input(format!(
                        "config line {}: unknown key '{key}' (known: {})",
                        lineno + 1,
                        KEYS.join(", ")
                    )))
                }
            }
        }
        // Outside the error study the simulated-quantile rules follow tuning_c.
        if !quantile_c_set && kind != ExperimentKind::Errors {
            cfg.quantile_c = cfg.tuning_c;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(CliError::Input(m));
        if self.n < 2 || self.p < 2 {
            return fail(format!("n and p must be at least 2, got n={} p={}", self.n, self.p));
        }
        if self.s > self.p {
            return fail(format!("s={} exceeds p={}", self.s, self.p));
        }
        if self.reps == 0 {
            return fail("reps must be at least 1".into());
        }
        if self.scales.is_empty() || self.scales.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return fail("scales must be non-negative numbers".into());
        }
        if self.kind != ExperimentKind::Robustness && self.scales.len() != 1 {
            return fail(format!("the {} experiment takes a single beta_scale", self.kind.name()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.tuning_c > 1.0 && self.tuning_c.is_finite()) {
            return fail(format!("tuning_c must exceed 1, got {}", self.tuning_c));
        }
        if !(self.quantile_c > 0.0 && self.quantile_c.is_finite()) {
            return fail(format!("quantile_c must be positive, got {}", self.quantile_c));
        }
        if self.methods.is_empty() {
            return fail("methods must not be empty".into());
        }
        if self.mc_samples == 0 || self.max_iters == 0 || self.grid_points == 0 {
            return fail("mc_samples, max_iters and grid_points must be positive".into());
        }
        if self.folds < 2 || self.folds > self.n {
            return fail(format!("folds must lie in [2, n], got {}", self.folds));
        }
        if !(self.grid_min_ratio > 0.0 && self.grid_min_ratio < 1.0) {
            return fail(format!("grid_min_ratio must lie in (0, 1), got {}", self.grid_min_ratio));
        }
        if !(self.tol_kkt > 0.0) {
            return fail(format!("tol_kkt must be positive, got {}", self.tol_kkt));
        }
        if self.coverage_trials < 100 {
            return fail(format!("coverage_trials must be at least 100, got {}", self.coverage_trials));
        }
        if self.kappa_samples < 1000 {
            return fail(format!("kappa_samples must be at least 1000, got {}", self.kappa_samples));
        }
        if self.kind == ExperimentKind::Bound && self.max_reps < self.reps {
            return fail("max_reps must be at least reps".into());
        }
        Ok(())
    }

    /// Every field as `key = value`, in a form `parse` reads back.
    pub fn to_lines(&self) -> String {
        let methods: Vec<&str> = self.methods.iter().map(|m| m.name()).collect();
        let scales: Vec<String> = self.scales.iter().map(|v| v.to_string()).collect();
        let placement = match self.placement {
            SupportPlacement::Leading => "leading",
            SupportPlacement::Random => "random",
        };
        format!(
            "n = {}\np = {}\ns = {}\nscales = {}\nreps = {}\nalpha = {}\ntuning_c = {}\nquantile_c = {}\n\
             methods = {}\nseed = {}\nmc_samples = {}\nfolds = {}\ngrid_points = {}\ngrid_min_ratio = {}\n\
             max_iters = {}\ntol_kkt = {}\nplacement = {}\ntiming = {}\ncoverage_trials = {}\n\
             kappa_samples = {}\nmax_reps = {}\n",
            self.n, self.p, self.s, scales.join(","), self.reps, self.alpha, self.tuning_c,
            self.quantile_c, methods.join(","), self.seed, self.mc_samples, self.folds,
            self.grid_points, self.grid_min_ratio, self.max_iters, self.tol_kkt, placement,
            self.timing, self.coverage_trials, self.kappa_samples, self.max_reps,
        )
    }
}

fn num<T: FromStr>(v: &str) -> std::result::Result<T, T::Err> {
    v.parse()
}

fn list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, T::Err> {
    v.split(',').map(|item| item.trim().parse()).collect()
}
