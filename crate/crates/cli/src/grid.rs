//! Parameter grids, the five compared methods and parallel grid fitting.

use clap::{Args, ValueEnum};
use localmax::{evaluate, train, MarginalDist, Metric, SampleSet, TrainConfig, WeightSet};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};
use crate::sets::exponent_pair;

const PARAM_TOL: f64 = 1e-12;

/// Methods of the comparison, each a restriction of the `(ζ, τ)` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum Method {
    /// `τ = 1`.
    MaxNorm,
    /// `ζ = 1, τ = 0`.
    UniformTrace,
    /// `ζ = 0, τ = 0`.
    EmpiricalTrace,
    /// `τ = 0`, any `ζ`.
    SmoothedTrace,
    /// Any `ζ` and `τ`.
    LocalMax,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::MaxNorm,
        Method::UniformTrace,
        Method::EmpiricalTrace,
        Method::SmoothedTrace,
        Method::LocalMax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::MaxNorm => "max-norm",
            Method::UniformTrace => "uniform-trace",
            Method::EmpiricalTrace => "empirical-trace",
            Method::SmoothedTrace => "smoothed-trace",
            Method::LocalMax => "local-max",
        }
    }

    pub fn admits(self, zeta: f64, tau: f64) -> bool {
        let is = |x: f64, v: f64| (x - v).abs() <= PARAM_TOL;
        match self {
            Method::MaxNorm => is(tau, 1.0),
            Method::UniformTrace => is(zeta, 1.0) && is(tau, 0.0),
            Method::EmpiricalTrace => is(zeta, 0.0) && is(tau, 0.0),
            Method::SmoothedTrace => is(tau, 0.0),
            Method::LocalMax => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub zeta: f64,
    pub tau: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGrid {
    pub zetas: Vec<f64>,
    pub taus: Vec<f64>,
    pub lambdas: Vec<f64>,
}

fn tenths() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

impl ExperimentGrid {
    pub fn new(zetas: Vec<f64>, taus: Vec<f64>, lambdas: Vec<f64>) -> CliResult<Self> {
        for (name, values) in [("zeta", &zetas), ("tau", &taus), ("lambda", &lambdas)] {
            if values.is_empty() {
                return Err(CliError::input(format!("{name} grid is empty")));
            }
        }
        if let Some(v) = zetas
            .iter()
            .chain(&taus)
            .find(|v| !(0.0..=1.0).contains(*v))
        {
            return Err(CliError::input(format!("grid value {v} outside [0, 1]")));
        }
        if let Some(v) = lambdas.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(CliError::input(format!(
                "lambda {v} must be finite and nonnegative"
            )));
        }
        Ok(ExperimentGrid {
            zetas,
            taus,
            lambdas,
        })
    }

    /// `ζ, τ ∈ {0, 0.1, …, 1}`, `λ ∈ {2¹, …, 2¹⁰}`.
    pub fn full() -> Self {
        ExperimentGrid {
            zetas: tenths(),
            taus: tenths(),
            lambdas: (1..=10).map(|e| 2f64.powi(e)).collect(),
        }
    }

    /// `ζ, τ ∈ {0, 0.5, 1}`, `λ ∈ {2², 2⁵, 2⁸}`.
    pub fn fast() -> Self {
        ExperimentGrid {
            zetas: vec![0.0, 0.5, 1.0],
            taus: vec![0.0, 0.5, 1.0],
            lambdas: vec![4.0, 32.0, 256.0],
        }
    }

    /// All cells in `(ζ, τ, λ)` order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::with_capacity(self.len());
        for &zeta in &self.zetas {
            for &tau in &self.taus {
                for &lambda in &self.lambdas {
                    out.push(Cell { zeta, tau, lambda });
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.zetas.len() * self.taus.len() * self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn methods(&self) -> Vec<Method> {
        Method::ALL
            .into_iter()
            .filter(|m| {
                self.zetas
                    .iter()
                    .any(|&z| self.taus.iter().any(|&t| m.admits(z, t)))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Coarse grid: ζ, τ ∈ {0, 0.5, 1}, λ ∈ {4, 32, 256}.
    #[arg(long)]
    pub fast: bool,
    /// Comma-separated ζ values, overriding the grid's.
    #[arg(long, value_delimiter = ',')]
    pub zetas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub taus: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
}

impl GridArgs {
    pub fn grid(&self) -> CliResult<ExperimentGrid> {
        let base = if self.fast {
            ExperimentGrid::fast()
        } else {
            ExperimentGrid::full()
        };
        ExperimentGrid::new(
            self.zetas.clone().unwrap_or(base.zetas),
            self.taus.clone().unwrap_or(base.taus),
            self.lambdas.clone().unwrap_or(base.lambdas),
        )
    }
}

/// Training settings shared by every cell of a grid.
#[derive(Debug, Clone, Copy)]
pub struct FitSettings {
    pub rank: usize,
    pub epochs: usize,
    pub seed: u64,
    pub metric: Metric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellScore {
    pub cell: Cell,
    /// One score per evaluation set, in the order given to [`fit_grid`].
    pub scores: Vec<f64>,
    pub epochs: usize,
}

pub fn pool(threads: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    match threads {
        Some(0) => return Err(CliError::input("--threads must be at least 1")),
        Some(t) => builder = builder.num_threads(t),
        None => {}
    }
    builder
        .build()
        .map_err(|e| CliError::input(format!("thread pool: {e}")))
}

/// Trains every cell of `grid` on `train` and scores it on each of `evals`.
///
/// Cells whose weight sets and `λ` coincide (for instance every `ζ` at
/// `τ = 1`) are trained once. Results come back in [`ExperimentGrid::cells`]
/// order regardless of scheduling.
pub fn fit_grid(
    grid: &ExperimentGrid,
    marginals: (&MarginalDist<f64>, &MarginalDist<f64>),
    train_set: &SampleSet<f64>,
    evals: &[&SampleSet<f64>],
    settings: FitSettings,
    pool: &rayon::ThreadPool,
) -> CliResult<Vec<CellScore>> {
    let cells = grid.cells();
    let mut unique: Vec<(WeightSet<f64>, WeightSet<f64>, f64)> = Vec::new();
    let mut slot = Vec::with_capacity(cells.len());
    for cell in &cells {
        let (r, c) = exponent_pair(marginals.0, marginals.1, cell.zeta, cell.tau)?;
        let found = unique
            .iter()
            .position(|(ur, uc, ul)| *ul == cell.lambda && *ur == r && *uc == c);
        slot.push(found.unwrap_or_else(|| {
            unique.push((r, c, cell.lambda));
            unique.len() - 1
        }));
    }
    let fitted: Vec<CliResult<(Vec<f64>, usize)>> = pool.install(|| {
        unique
            .par_iter()
            .map(|(r, c, lambda)| {
                let mut cfg = TrainConfig::new(settings.rank, *lambda, r.clone(), c.clone());
                cfg.epochs = settings.epochs;
                cfg.seed = settings.seed;
                let out = train(train_set, &cfg)?;
                let scores = evals
                    .iter()
                    .map(|set| evaluate(&out.model, set, settings.metric))
                    .collect::<localmax::Result<Vec<f64>>>()?;
                Ok((scores, out.history.len() - 1))
            })
            .collect()
    });
    let fitted = fitted.into_iter().collect::<CliResult<Vec<_>>>()?;
    Ok(cells
        .into_iter()
        .zip(slot)
        .map(|(cell, s)| CellScore {
            cell,
            scores: fitted[s].0.clone(),
            epochs: fitted[s].1,
        })
        .collect())
}

/// The admitted cell with the lowest score at `index`; ties go to the
/// earliest cell. Returns `None` when the grid has no admitted cell.
pub fn select(method: Method, scores: &[CellScore], index: usize) -> Option<&CellScore> {
    let key = |s: &CellScore| {
        let v = s.scores[index];
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut best: Option<&CellScore> = None;
    for s in scores
        .iter()
        .filter(|s| method.admits(s.cell.zeta, s.cell.tau))
    {
        if best.is_none_or(|b| key(s) < key(b)) {
            best = Some(s);
        }
    }
    best
}
