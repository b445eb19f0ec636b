use std::collections::HashSet;
use std::path::{Path, PathBuf};

use dpl_core::matrix::Square;
use dpl_core::sim::{generate_dcsbm, generate_sbm, make_planted_theta, AlphaSpec, DcsbmConfig, PlantedNetwork, SbmConfig};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// Estimators a grid point can be fitted with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dpl,
    Dcpl,
    /// Single-machine pseudo-likelihood on the whole graph.
    PlOracle,
    /// Single-machine conditional pseudo-likelihood.
    CplOracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dpl => "dpl",
            Method::Dcpl => "dcpl",
            Method::PlOracle => "pl-oracle",
            Method::CplOracle => "cpl-oracle",
        }
    }
}

/// How the shards see the graph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Splitting {
    /// Full rows: every edge of an in-worker node.
    #[default]
    BlockWise,
    /// Only edges inside the worker's own block.
    WithinBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaSpec {
    /// `rho ((1 - beta) 11^T + beta I)`.
    Planted { rho: f64, beta: f64 },
    Matrix(Vec<Vec<f64>>),
}

impl ThetaSpec {
    pub fn build(&self, k: usize) -> Square {
        match self {
            ThetaSpec::Planted { rho, beta } => make_planted_theta(*rho, *beta, k),
            ThetaSpec::Matrix(rows) => Square::from_rows(rows),
        }
    }
}

/// One fully specified simulation setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPoint {
    pub label: String,
    /// Curve the point belongs to in plots and trend checks.
    #[serde(default)]
    pub series: String,
    /// Abscissa in plots.
    pub x: f64,
    pub num_nodes: usize,
    pub workers: usize,
    pub pi: Vec<f64>,
    pub theta: ThetaSpec,
    /// Two-point degree heterogeneity `m`; absent for a plain SBM draw.
    #[serde(default)]
    pub heterogeneity: Option<f64>,
    #[serde(default)]
    pub max_rounds: Option<usize>,
    #[serde(default)]
    pub splitting: Splitting,
}

impl GridPoint {
    pub fn k(&self) -> usize {
        self.pi.len()
    }

    pub fn block_size(&self) -> usize {
        self.num_nodes / self.workers.max(1)
    }

    fn sbm(&self, seed: u64) -> SbmConfig {
        SbmConfig {
            num_nodes: self.num_nodes,
            pi: self.pi.clone(),
            theta: self.theta.build(self.k()),
            seed,
        }
    }

    /// Draws the planted network for one replicate.
    pub fn generate(&self, seed: u64) -> dpl_core::Result<PlantedNetwork> {
        match self.heterogeneity {
            Some(m) => generate_dcsbm(&DcsbmConfig {
                base: self.sbm(seed),
                alpha: AlphaSpec::TwoPoint { m },
            }),
            None => generate_sbm(&self.sbm(seed)),
        }
    }

    fn validate_generator(&self) -> dpl_core::Result<()> {
        match self.heterogeneity {
            Some(m) => DcsbmConfig {
                base: self.sbm(0),
                alpha: AlphaSpec::TwoPoint { m },
            }
            .validate(),
            None => self.sbm(0).validate(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub reps: usize,
    /// Replicate `j` uses seed `base_seed + j` for both the graph and the fit.
    #[serde(default)]
    pub base_seed: u64,
    pub methods: Vec<Method>,
    /// Also compute relative density for every fit.
    #[serde(default)]
    pub red: bool,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    pub points: Vec<GridPoint>,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.reps as u64).map(|j| self.base_seed.wrapping_add(j))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BenchError::Spec(format!("{}: {msg}", self.name)));
        if self.reps == 0 {
            return bad("reps must be positive".into());
        }
        if self.methods.is_empty() {
            return bad("no methods".into());
        }
        if self.points.is_empty() {
            return bad("empty grid".into());
        }
        let mut labels = HashSet::new();
        for p in &self.points {
            if !labels.insert(&p.label) {
                return bad(format!("grid label {:?} repeats", p.label));
            }
            if p.workers == 0 || p.num_nodes % p.workers != 0 {
                return bad(format!("{}: {} workers do not divide {} nodes", p.label, p.workers, p.num_nodes));
            }
            if !p.x.is_finite() {
                return bad(format!("{}: x must be finite", p.label));
            }
            if p.max_rounds == Some(0) {
                return bad(format!("{}: max_rounds must be positive", p.label));
            }
            if let ThetaSpec::Matrix(rows) = &p.theta {
                if rows.len() != p.k() || rows.iter().any(|r| r.len() != p.k()) {
                    return bad(format!("{}: theta is not {k} x {k}", p.label, k = p.k()));
                }
            }
            p.validate_generator()
                .map_err(|e| BenchError::Spec(format!("{}: {}: {e}", self.name, p.label)))?;
        }
        Ok(())
    }
}
