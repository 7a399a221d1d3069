use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{
    generate_city_graph, generate_er, load_city_dataset, CityOptions, GaussianWaxman, DEFAULT_VARIANCE_RANGE,
    WaxmanParams,
};
use crate::graph::{DiffusionModel, Graph};
use crate::heuristics::Algorithm;
use crate::rng::Rng;

fn default_box_side() -> f64 {
    10.0
}

fn default_centers() -> usize {
    5
}

fn default_variance_range() -> (f64, f64) {
    DEFAULT_VARIANCE_RANGE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeneratorConfig {
    Er {
        n: usize,
        p: f64,
    },
    Waxman {
        n: usize,
        #[serde(default = "default_centers")]
        centers: usize,
        alpha: f64,
        beta: f64,
        #[serde(default = "default_box_side")]
        box_side: f64,
        /// Uniform range of the per-center variances.
        #[serde(default = "default_variance_range")]
        variance_range: (f64, f64),
    },
    City {
        /// Relative paths resolve against the config file's directory.
        csv: PathBuf,
        /// People per node.
        f: u64,
        #[serde(default)]
        min_nodes: usize,
        alpha: f64,
        beta: f64,
        #[serde(default = "default_box_side")]
        box_side: f64,
        #[serde(default)]
        sigma_constant: Option<f64>,
    },
}

impl GeneratorConfig {
    pub fn generate(&self, model: DiffusionModel, rng: &mut Rng) -> Result<Graph> {
        match self {
            GeneratorConfig::Er { n, p } => generate_er(*n, *p, model, rng),
            GeneratorConfig::Waxman {
                n,
                centers,
                alpha,
                beta,
                box_side,
                variance_range,
            } => {
                let params = WaxmanParams {
                    alpha: *alpha,
                    beta: *beta,
                    box_side: *box_side,
                };
                let mut generator = GaussianWaxman::new(*n, *centers, params);
                generator.variance_range = *variance_range;
                generator.generate(model, rng)
            }
            GeneratorConfig::City {
                csv,
                f,
                min_nodes,
                alpha,
                beta,
                box_side,
                sigma_constant,
            } => {
                let options = CityOptions {
                    scale_factor: *f,
                    box_side: *box_side,
                    min_nodes: *min_nodes,
                    sigma_constant: *sigma_constant,
                };
                let city = load_city_dataset(csv, &options)?;
                Ok(generate_city_graph(&city, *alpha, *beta, model, rng)?.0)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match self {
            GeneratorConfig::Er { n, p } => {
                if *n == 0 {
                    return bad("er: n must be positive".into());
                }
                if !(0.0..=1.0).contains(p) {
                    return bad(format!("er: p = {p} outside [0, 1]"));
                }
            }
            GeneratorConfig::Waxman {
                n,
                centers,
                alpha,
                beta,
                box_side,
                variance_range: (lo, hi),
            } => {
                if *centers == 0 || n < centers {
                    return bad(format!("waxman: need n >= centers >= 1, got {n} and {centers}"));
                }
                if !(*lo > 0.0 && hi >= lo && hi.is_finite()) {
                    return bad(format!("waxman: variance_range ({lo}, {hi}) is not a positive interval"));
                }
                WaxmanParams {
                    alpha: *alpha,
                    beta: *beta,
                    box_side: *box_side,
                }
                .validate()
                .map_err(|e| Error::Config(format!("waxman: {e}")))?;
            }
            GeneratorConfig::City {
                f,
                alpha,
                beta,
                box_side,
                ..
            } => {
                if *f == 0 {
                    return bad("city: f must be positive".into());
                }
                WaxmanParams {
                    alpha: *alpha,
                    beta: *beta,
                    box_side: *box_side,
                }
                .validate()
                .map_err(|e| Error::Config(format!("city: {e}")))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: DiffusionModel,
    pub generator: GeneratorConfig,
    pub infected_fraction: f64,
    pub budget_fraction: f64,
    pub samples: usize,
    pub algorithms: Vec<Algorithm>,
    pub seed: u64,
    pub repetitions: usize,
    /// Budget fractions for `sweep-budget`.
    #[serde(default)]
    pub budgets: Vec<f64>,
    /// Topology counts for `sweep-samples`.
    #[serde(default)]
    pub sample_counts: Vec<usize>,
}

fn fraction_ok(x: f64) -> bool {
    x > 0.0 && x <= 1.0
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Loads and validates a config file; a relative city CSV path is
    /// resolved against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        if let GeneratorConfig::City { csv, .. } = &mut config.generator {
            if csv.is_relative() {
                if let Some(dir) = path.parent() {
                    *csv = dir.join(&*csv);
                }
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !fraction_ok(self.infected_fraction) {
            return bad(format!("infected_fraction {} outside (0, 1]", self.infected_fraction));
        }
        if !fraction_ok(self.budget_fraction) {
            return bad(format!("budget_fraction {} outside (0, 1]", self.budget_fraction));
        }
        if let Some(b) = self.budgets.iter().find(|&&b| !fraction_ok(b)) {
            return bad(format!("budget {b} outside (0, 1]"));
        }
        if self.samples == 0 || self.sample_counts.contains(&0) {
            return bad("sample counts must be at least 1".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.algorithms.is_empty() {
            return bad("no algorithms requested".into());
        }
        self.generator.validate()
    }
}
