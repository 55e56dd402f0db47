//! The run configuration: one TOML file with nested `[methods.<name>]` tables.
//!
//! Relative paths are resolved against the directory holding the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use premsel::ensemble::{CombineScheme, CombinerSpec};
use premsel::eval::{Learner, MethodSet, MethodSpec};
use premsel::features::Weighting;
use premsel::rankers::{GeoMode, GeoParams, KnnParams, NbParams};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub dependencies: Option<PathBuf>,
    /// Explicit references; when set, the first loop pass is limited to them.
    pub references: Option<PathBuf>,
    #[serde(default = "default_slices")]
    pub slice_sizes: Vec<usize>,
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
    #[serde(default = "one")]
    pub threads: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Default seed of the randomized learners.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_passes")]
    pub passes: usize,
    #[serde(default)]
    pub prover: ProverConfig,
    #[serde(default)]
    pub methods: BTreeMap<String, MethodConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProverConfig {
    #[serde(default)]
    pub kind: ProverKind,
    /// Ground-truth dependencies answered by the synthetic oracle.
    pub truth: Option<PathBuf>,
    pub name: Option<String>,
    /// Shell command with `{file}` and `{timelimit}` placeholders.
    pub command: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProverKind {
    #[default]
    Synthetic,
    External,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub learner: String,
    /// Without a slice the method expands to `name@N` per configured size.
    pub slice: Option<usize>,
    pub weighting: Option<String>,
    #[serde(default)]
    pub original_vars: bool,
    #[serde(default)]
    pub closure: bool,
    pub k: Option<usize>,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub beta: Option<f64>,
    pub sigma1: Option<f64>,
    pub sigma2: Option<f64>,
    pub use_idf: Option<bool>,
    pub decay: Option<f64>,
    pub mode: Option<String>,
    pub max_depth: Option<usize>,
    pub epsilon: Option<f64>,
    pub topics: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub members: Vec<String>,
    pub scheme: Option<String>,
    pub weights: Option<Vec<f64>>,
}

fn default_slices() -> Vec<usize> {
    vec![32, 64, 128]
}

fn one() -> usize {
    1
}

fn default_time_limit() -> f64 {
    10.0
}

fn default_output() -> PathBuf {
    PathBuf::from("premsel-out")
}

fn default_passes() -> usize {
    3
}

impl RunConfig {
    /// An empty configuration; every field at its default.
    pub fn empty() -> Self {
        toml::from_str("").expect("the empty config is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut config: RunConfig =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.rebase(base);
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.corpus, &mut self.dependencies, &mut self.references, &mut self.prover.truth]
            .into_iter()
            .flatten()
        {
            join(p);
        }
        join(&mut self.output);
    }

    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 {
            bail!("stride must be at least 1");
        }
        if self.threads == 0 {
            bail!("threads must be at least 1");
        }
        if self.slice_sizes.contains(&0) {
            bail!("slice sizes must be positive");
        }
        if !(self.time_limit.is_finite() && self.time_limit > 0.0) {
            bail!("time_limit must be a positive number of seconds");
        }
        Ok(())
    }

    pub fn corpus_path(&self) -> Result<&Path> {
        self.corpus
            .as_deref()
            .context("no corpus given (set `corpus` in the config or pass --corpus)")
    }

    /// Concrete method names in definition-expanded form.
    pub fn method_set(&self) -> Result<MethodSet> {
        let mut specs = Vec::new();
        for (name, m) in &self.methods {
            if name.contains('@') {
                bail!("method name `{name}` must not contain `@`");
            }
            match m.slice {
                Some(slice) => specs.push(self.spec(name, m, slice, None)?),
                None => {
                    if self.slice_sizes.is_empty() {
                        bail!("method `{name}` has no slice and no slice_sizes are configured");
                    }
                    for &n in &self.slice_sizes {
                        specs.push(self.spec(&format!("{name}@{n}"), m, n, Some(n))?);
                    }
                }
            }
        }
        Ok(MethodSet::new(specs)?)
    }

    fn member_name(&self, member: &str, expanded: Option<usize>) -> String {
        match (self.methods.get(member), expanded.or_else(|| self.slice_sizes.first().copied())) {
            (Some(m), Some(n)) if m.slice.is_none() => format!("{member}@{n}"),
            _ => member.to_string(),
        }
    }

    fn spec(&self, name: &str, m: &MethodConfig, slice: usize, expanded: Option<usize>) -> Result<MethodSpec> {
        let context = || format!("method `{name}`");
        let learner = self.learner(m, expanded).with_context(context)?;
        let mut spec = MethodSpec::new(name, learner, slice);
        if let Some(w) = &m.weighting {
            spec.weighting = w.parse::<Weighting>().map_err(anyhow::Error::msg).with_context(context)?;
        }
        spec.original_vars = m.original_vars;
        spec.closure = m.closure;
        Ok(spec)
    }

    fn learner(&self, m: &MethodConfig, expanded: Option<usize>) -> Result<Learner> {
        let d = KnnParams::default();
        let knn = KnnParams {
            k: m.k.unwrap_or(d.k),
            tau1: m.tau1.unwrap_or(d.tau1),
            tau2: m.tau2.unwrap_or(d.tau2),
            beta: m.beta.unwrap_or(d.beta),
        };
        Ok(match m.learner.as_str() {
            "knn" => Learner::Knn(knn),
            "nb" => {
                let d = NbParams::default();
                Learner::Nb(NbParams {
                    sigma1: m.sigma1.unwrap_or(d.sigma1),
                    sigma2: m.sigma2.unwrap_or(d.sigma2),
                    use_idf: m.use_idf.unwrap_or(d.use_idf),
                })
            }
            "geo" => {
                let d = GeoParams::default();
                let mode = match m.mode.as_deref() {
                    None => d.mode,
                    Some("full") => GeoMode::Full,
                    Some("first-level") => GeoMode::FirstLevel,
                    Some(other) => bail!("unknown geo mode `{other}` (expected full or first-level)"),
                };
                Learner::Geo {
                    knn,
                    geo: GeoParams {
                        decay: m.decay.unwrap_or(d.decay),
                        mode,
                        max_depth: m.max_depth.unwrap_or(d.max_depth),
                        epsilon: m.epsilon.unwrap_or(d.epsilon),
                    },
                }
            }
            "lsi" => Learner::Lsi {
                knn,
                topics: m.topics.context("an lsi method needs `topics`")?,
                seed: m.seed.unwrap_or(self.seed),
            },
            "combine" => {
                let scheme: CombineScheme = m
                    .scheme
                    .as_deref()
                    .unwrap_or("linear")
                    .parse()
                    .map_err(anyhow::Error::msg)?;
                let members: Vec<String> =
                    m.members.iter().map(|s| self.member_name(s, expanded)).collect();
                let spec = match &m.weights {
                    Some(w) => CombinerSpec { scheme, weights: w.clone() },
                    None => CombinerSpec::equal(scheme, members.len()),
                };
                Learner::Combine { members, spec }
            }
            other => bail!("unknown learner `{other}` (expected knn, nb, geo, lsi or combine)"),
        })
    }
}
