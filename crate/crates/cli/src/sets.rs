//! Weight-set flags shared by the subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use localmax::{MarginalDist, SmoothingSegment, WeightSet, Weights};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// The smoothed marginals as a single point.
    Singleton,
    /// Same as singleton; kept as the name used for the smoothed trace norm.
    Smoothed,
    /// The whole simplex.
    Max,
    /// `r_i ≤ eps`.
    UniformCap,
    /// `r_i ≤ gamma · p̃_i`.
    Multiplicative,
    /// `r_i ≤ p̃_i^(1 − tau)`.
    Exponent,
    /// `r_i ≥ t / (1 + (n − 1)t)`.
    LowerBounded,
    /// The segment between the marginals and uniform (norm only).
    Segment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MarginalSource {
    Uniform,
    Empirical,
    File,
}

#[derive(Debug, Clone, Args)]
pub struct SetArgs {
    #[arg(long, value_enum, default_value = "exponent")]
    pub family: Family,
    /// Smoothing toward uniform.
    #[arg(long, default_value_t = 0.0)]
    pub zeta: f64,
    /// Exponent family interpolation, 0 = weighted trace, 1 = max norm.
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    #[arg(long, default_value_t = f64::INFINITY)]
    pub gamma: f64,
    /// Row cap of the uniform-cap family; defaults to 1/n.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Column cap of the uniform-cap family; defaults to --eps scaled by n/m.
    #[arg(long)]
    pub eps_col: Option<f64>,
    #[arg(long = "t", default_value_t = 0.0)]
    pub t: f64,
    #[arg(long, value_enum)]
    pub marginals: Option<MarginalSource>,
    /// Row marginals for `--marginals file`: numbers separated by commas or whitespace.
    #[arg(long)]
    pub row_marginals: Option<PathBuf>,
    #[arg(long)]
    pub col_marginals: Option<PathBuf>,
}

impl Default for SetArgs {
    fn default() -> Self {
        SetArgs {
            family: Family::Exponent,
            zeta: 0.0,
            tau: 0.0,
            gamma: f64::INFINITY,
            eps: None,
            eps_col: None,
            t: 0.0,
            marginals: None,
            row_marginals: None,
            col_marginals: None,
        }
    }
}

pub fn read_marginals(path: &Path, len: usize) -> CliResult<MarginalDist<f64>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let values = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::input(format!("{}: bad number {s:?}", path.display())))
        })
        .collect::<CliResult<Vec<_>>>()?;
    if values.len() != len {
        return Err(CliError::input(format!(
            "{}: expected {len} weights, found {}",
            path.display(),
            values.len()
        )));
    }
    MarginalDist::from_counts(&values).map_err(|e| CliError::from(e).context(path.display()))
}

impl SetArgs {
    /// Row and column marginals from the selected source. `empirical` is
    /// only called when that source is chosen.
    pub fn marginals(
        &self,
        default: MarginalSource,
        n: usize,
        m: usize,
        empirical: impl FnOnce() -> CliResult<(MarginalDist<f64>, MarginalDist<f64>)>,
    ) -> CliResult<(MarginalDist<f64>, MarginalDist<f64>)> {
        match self.marginals.unwrap_or(default) {
            MarginalSource::Uniform => Ok((MarginalDist::uniform(n), MarginalDist::uniform(m))),
            MarginalSource::Empirical => empirical(),
            MarginalSource::File => {
                let row = self
                    .row_marginals
                    .as_deref()
                    .ok_or_else(|| CliError::input("--marginals file needs --row-marginals"))?;
                let col = self.col_marginals.as_deref().unwrap_or(row);
                Ok((read_marginals(row, n)?, read_marginals(col, m)?))
            }
        }
    }

    pub fn weights(
        &self,
        pr: &MarginalDist<f64>,
        pc: &MarginalDist<f64>,
    ) -> CliResult<(Weights<f64>, Weights<f64>)> {
        if self.family == Family::Segment {
            return Ok((
                SmoothingSegment::new(pr).into(),
                SmoothingSegment::new(pc).into(),
            ));
        }
        let (r, c) = self.capped(pr, pc)?;
        Ok((r.into(), c.into()))
    }

    pub fn capped(
        &self,
        pr: &MarginalDist<f64>,
        pc: &MarginalDist<f64>,
    ) -> CliResult<(WeightSet<f64>, WeightSet<f64>)> {
        let (n, m) = (pr.len(), pc.len());
        let pair = match self.family {
            Family::Singleton | Family::Smoothed => (
                WeightSet::smoothed(pr, self.zeta)?,
                WeightSet::smoothed(pc, self.zeta)?,
            ),
            Family::Max => (WeightSet::full_simplex(n), WeightSet::full_simplex(m)),
            Family::UniformCap => {
                let eps = self.eps.unwrap_or(1.0 / n as f64);
                let eps_col = self.eps_col.unwrap_or(eps * n as f64 / m as f64);
                (
                    WeightSet::uniform_cap(n, eps)?,
                    WeightSet::uniform_cap(m, eps_col.min(1.0))?,
                )
            }
            Family::Multiplicative => (
                WeightSet::capped_multiplicative(pr, self.zeta, self.gamma)?,
                WeightSet::capped_multiplicative(pc, self.zeta, self.gamma)?,
            ),
            Family::Exponent => exponent_pair(pr, pc, self.zeta, self.tau)?,
            Family::LowerBounded => (
                WeightSet::lower_bounded(n, self.t)?,
                WeightSet::lower_bounded(m, self.t)?,
            ),
            Family::Segment => {
                return Err(CliError::input(
                    "the segment family is only available for `norm`",
                ))
            }
        };
        Ok(pair)
    }
}

pub fn exponent_pair(
    pr: &MarginalDist<f64>,
    pc: &MarginalDist<f64>,
    zeta: f64,
    tau: f64,
) -> CliResult<(WeightSet<f64>, WeightSet<f64>)> {
    Ok((
        WeightSet::capped_exponent(pr, zeta, tau)?,
        WeightSet::capped_exponent(pc, zeta, tau)?,
    ))
}
