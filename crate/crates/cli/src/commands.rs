use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use localmax::data::{parse_ratings, read_dense_csv, Diagnostic, IdMap};
use localmax::{
    empirical_marginals, evaluate as score, load_ratings_files, local_max_norm,
    simulate as generate, split_ratings, train as fit, FactorModel, MarginalDist, Matrix, Metric,
    NormOptions, Role, SampleSet, SimulationSpec, TrainConfig,
};
use serde::{Deserialize, Serialize};

use crate::args::{EvaluateArgs, GridsearchArgs, NormArgs, SimulateArgs, TrainArgs};
use crate::error::{CliError, CliResult};
use crate::grid::{fit_grid, pool, select, CellScore, FitSettings};
use crate::output::{join_nums, num, sibling, write_file, RunConfig, Table};
use crate::sets::MarginalSource;

const SHOWN_DIAGNOSTICS: usize = 10;

/// A fitted model together with the ids of its rows and columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SavedModel {
    pub users: Vec<String>,
    pub items: Vec<String>,
    /// Added to every prediction; the factors model the centered ratings.
    #[serde(default)]
    pub mean: f64,
    pub model: FactorModel<f64>,
}

fn ids(map: &IdMap) -> Vec<String> {
    (0..map.len())
        .map(|i| map.id(i).unwrap_or_default().to_string())
        .collect()
}

fn warn_diagnostics(path: &Path, diags: &[Diagnostic]) {
    for d in diags.iter().take(SHOWN_DIAGNOSTICS) {
        eprintln!("warning: {}:{d}", path.display());
    }
    if diags.len() > SHOWN_DIAGNOSTICS {
        eprintln!(
            "warning: {}: {} more malformed lines skipped",
            path.display(),
            diags.len() - SHOWN_DIAGNOSTICS
        );
    }
}

fn load_sets(
    paths: &[&Path],
    format: localmax::RatingsFormat,
) -> CliResult<(Vec<SampleSet<f64>>, IdMap, IdMap)> {
    let coll = load_ratings_files(paths, format)?;
    let mut sets = Vec::with_capacity(paths.len());
    for (path, (set, diags)) in paths.iter().zip(coll.sets) {
        warn_diagnostics(path, &diags);
        sets.push(set);
    }
    Ok((sets, coll.users, coll.items))
}

fn mean_rating(set: &SampleSet<f64>) -> f64 {
    set.triples.iter().map(|t| t.2).sum::<f64>() / set.len() as f64
}

fn shift(set: &SampleSet<f64>, by: f64) -> SampleSet<f64> {
    let mut out = set.clone();
    out.triples.iter_mut().for_each(|t| t.2 -= by);
    out
}

/// Share of nonzero entries in each row and column.
fn pattern_marginals(x: &Matrix<f64>) -> CliResult<(MarginalDist<f64>, MarginalDist<f64>)> {
    let mut rows = vec![0.0; x.rows()];
    let mut cols = vec![0.0; x.cols()];
    for i in 0..x.rows() {
        for (j, v) in x.row(i).iter().enumerate() {
            if *v != 0.0 {
                rows[i] += 1.0;
                cols[j] += 1.0;
            }
        }
    }
    if rows.iter().all(|&r| r == 0.0) {
        return Err(CliError::input("empirical marginals of an all-zero matrix"));
    }
    Ok((
        MarginalDist::from_counts(&rows)?,
        MarginalDist::from_counts(&cols)?,
    ))
}

pub fn norm(args: &NormArgs, out: &mut dyn Write) -> CliResult<()> {
    if !(args.tol > 0.0) || args.max_iter == 0 {
        return Err(CliError::input("--tol and --max-iter must be positive"));
    }
    let x: Matrix<f64> = read_dense_csv(&args.matrix)?;
    let (pr, pc) = args
        .set
        .marginals(MarginalSource::Uniform, x.rows(), x.cols(), || {
            pattern_marginals(&x)
        })?;
    let (r, c) = args.set.weights(&pr, &pc)?;
    let opts = NormOptions {
        tol: args.tol,
        max_iter: args.max_iter,
        ..NormOptions::default()
    };
    let cert = local_max_norm(&x, &r, &c, opts)?;
    writeln!(out, "value {}", num(cert.value))?;
    writeln!(out, "gap {}", num(cert.gap))?;
    writeln!(out, "upper {}", num(cert.upper_bound()))?;
    writeln!(out, "iterations {}", cert.iterations)?;
    writeln!(out, "converged {}", cert.converged)?;
    if args.show_weights {
        writeln!(out, "rows {}", join_nums(&cert.r_star))?;
        writeln!(out, "cols {}", join_nums(&cert.c_star))?;
    }
    if !cert.converged {
        return Err(CliError::non_convergence(format!(
            "gap {} still above tolerance after {} iterations",
            cert.gap, cert.iterations
        )));
    }
    Ok(())
}

pub fn train(args: &TrainArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut paths = vec![args.train.as_path()];
    paths.extend(args.validation.as_deref());
    let (raw, users, items) = load_sets(&paths, args.format.into())?;
    let mean = if args.no_center {
        0.0
    } else {
        mean_rating(&raw[0])
    };
    let sets: Vec<_> = raw.iter().map(|s| shift(s, mean)).collect();
    let train_set = &sets[0];
    let (pr, pc) =
        args.set
            .marginals(MarginalSource::Empirical, train_set.n, train_set.m, || {
                Ok(empirical_marginals(train_set)?)
            })?;
    let (rows, cols) = args.set.capped(&pr, &pc)?;
    let mut cfg = TrainConfig::new(args.rank, args.lambda, rows, cols);
    cfg.loss = args.loss.into();
    cfg.epochs = args.epochs;
    cfg.seed = args.seed;
    let outcome = fit(train_set, &cfg)?;
    let best = &outcome.history[outcome.best_epoch];
    writeln!(out, "users {}", train_set.n)?;
    writeln!(out, "items {}", train_set.m)?;
    writeln!(out, "epochs {}", outcome.history.len() - 1)?;
    writeln!(out, "best_epoch {}", outcome.best_epoch)?;
    writeln!(out, "objective {}", num(best.objective))?;
    writeln!(out, "penalty {}", num(best.penalty))?;
    writeln!(
        out,
        "train_rmse {}",
        num(score(&outcome.model, train_set, Metric::Rmse)?)
    )?;
    if let Some(val) = sets.get(1) {
        writeln!(
            out,
            "validation_rmse {}",
            num(score(&outcome.model, val, Metric::Rmse)?)
        )?;
    }
    if let Some(path) = &args.history {
        let mut table = Table::new(["epoch", "loss", "penalty", "objective"]);
        for h in &outcome.history {
            table.push(vec![
                h.epoch.to_string(),
                num(h.loss),
                num(h.penalty),
                num(h.objective),
            ]);
        }
        table.write(path)?;
    }
    if let Some(path) = &args.model_out {
        let saved = SavedModel {
            users: ids(&users),
            items: ids(&items),
            mean,
            model: outcome.model,
        };
        write_file(path, &serde_json::to_string(&saved)?)?;
        let mut echo = RunConfig::new("train");
        echo.set("train", args.train.display())
            .set("validation", opt_path(&args.validation))
            .set("format", format!("{:?}", args.format))
            .set("family", format!("{:?}", args.set.family))
            .set("zeta", args.set.zeta)
            .set("tau", args.set.tau)
            .set("gamma", args.set.gamma)
            .set("t", args.set.t)
            .set("rank", args.rank)
            .set("lambda", args.lambda)
            .set("epochs", args.epochs)
            .set("loss", format!("{:?}", args.loss))
            .set("seed", args.seed)
            .set("mean", mean);
        echo.write(&sibling(path, "config.txt"))?;
    }
    Ok(())
}

fn opt_path(p: &Option<PathBuf>) -> String {
    p.as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_default()
}

pub fn evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> CliResult<()> {
    let file = File::open(&args.model)
        .map_err(|e| CliError::input(format!("{}: {e}", args.model.display())))?;
    let saved: SavedModel = serde_json::from_reader(BufReader::new(file))?;
    let (rows, cols) = (saved.model.rows(), saved.model.cols());
    if saved.users.len() != rows || saved.items.len() != cols {
        return Err(CliError::input("model ids do not match its factor shapes"));
    }
    let mut users = IdMap::default();
    let mut items = IdMap::default();
    saved.users.iter().for_each(|u| {
        users.get_or_insert(u);
    });
    saved.items.iter().for_each(|i| {
        items.get_or_insert(i);
    });
    let file = File::open(&args.ratings)
        .map_err(|e| CliError::input(format!("{}: {e}", args.ratings.display())))?;
    let (triples, diags) = parse_ratings::<f64>(
        BufReader::new(file),
        args.format.into(),
        &mut users,
        &mut items,
    )?;
    warn_diagnostics(&args.ratings, &diags);
    let total = triples.len();
    let known: Vec<_> = triples
        .into_iter()
        .filter(|&(i, j, _)| i < rows && j < cols)
        .collect();
    if known.is_empty() {
        return Err(CliError::input(format!(
            "{}: no ratings for users and items known to the model",
            args.ratings.display()
        )));
    }
    let scored = known.len();
    let set = shift(&SampleSet::new(rows, cols, known, Role::Test)?, saved.mean);
    let metric: Metric = args.metric.into();
    writeln!(
        out,
        "{:?} {}",
        args.metric,
        num(score(&saved.model, &set, metric)?)
    )?;
    writeln!(out, "scored {scored}")?;
    writeln!(out, "skipped_unknown {}", total - scored)?;
    Ok(())
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn simulate(args: &SimulateArgs, out: &mut dyn Write) -> CliResult<()> {
    if args.trials == 0 {
        return Err(CliError::input("--trials must be at least 1"));
    }
    let grid = args.grid.grid()?;
    let methods = grid.methods();
    let workers = pool(args.threads)?;
    let mut results = Table::new([
        "trial",
        "n",
        "k",
        "method",
        "zeta",
        "tau",
        "lambda",
        "validation_mse",
        "test_mse",
    ]);
    let mut cells = Table::new([
        "trial",
        "zeta",
        "tau",
        "lambda",
        "validation_mse",
        "test_mse",
        "epochs",
    ]);
    let mut per_method: Vec<Vec<f64>> = vec![Vec::new(); methods.len()];
    for trial in 0..args.trials {
        let seed = args.seed.wrapping_add(trial as u64);
        let sim = generate(&SimulationSpec {
            n: args.n,
            k: args.k,
            sigma: args.sigma,
            seed,
        })?;
        let (pr, pc) = empirical_marginals(&sim.train)?;
        let settings = FitSettings {
            rank: args.rank,
            epochs: args.epochs,
            seed,
            metric: Metric::Mse,
        };
        let scores = fit_grid(
            &grid,
            (&pr, &pc),
            &sim.train,
            &[&sim.validation, &sim.test],
            settings,
            &workers,
        )?;
        for s in &scores {
            cells.push(vec![
                trial.to_string(),
                num(s.cell.zeta),
                num(s.cell.tau),
                num(s.cell.lambda),
                num(s.scores[0]),
                num(s.scores[1]),
                s.epochs.to_string(),
            ]);
        }
        for (slot, &method) in methods.iter().enumerate() {
            let best = select(method, &scores, 0).expect("grid admits the method");
            per_method[slot].push(best.scores[1]);
            results.push(vec![
                trial.to_string(),
                args.n.to_string(),
                args.k.to_string(),
                method.name().to_string(),
                num(best.cell.zeta),
                num(best.cell.tau),
                num(best.cell.lambda),
                num(best.scores[0]),
                num(best.scores[1]),
            ]);
        }
    }
    results.write(&args.output)?;
    if let Some(path) = &args.cells {
        cells.write(path)?;
    }
    let mut echo = RunConfig::new("simulate");
    echo.set("n", args.n)
        .set("k", args.k)
        .set("sigma", args.sigma)
        .set("trials", args.trials)
        .set("seed", args.seed)
        .set("rank", args.rank)
        .set("epochs", args.epochs)
        .set("zetas", join_nums(&grid.zetas))
        .set("taus", join_nums(&grid.taus))
        .set("lambdas", join_nums(&grid.lambdas))
        .set("threads", workers.current_num_threads())
        .set("output", args.output.display());
    echo.write(&sibling(&args.output, "config.txt"))?;
    writeln!(out, "method,mean_test_mse,standard_error")?;
    for (method, values) in methods.iter().zip(&per_method) {
        let (mean, se) = mean_se(values);
        writeln!(out, "{},{},{}", method.name(), num(mean), num(se))?;
    }
    Ok(())
}

/// For each `(ζ, τ)` the cell whose `λ` scores best on `index`.
fn best_lambda(scores: &[CellScore], index: usize) -> Vec<CellScore> {
    let mut chosen: Vec<CellScore> = Vec::new();
    for s in scores {
        match chosen
            .iter_mut()
            .find(|c| c.cell.zeta == s.cell.zeta && c.cell.tau == s.cell.tau)
        {
            Some(c) if s.scores[index] < c.scores[index] || c.scores[index].is_nan() => {
                *c = s.clone()
            }
            Some(_) => {}
            None => chosen.push(s.clone()),
        }
    }
    chosen
}

pub fn gridsearch(args: &GridsearchArgs, out: &mut dyn Write) -> CliResult<()> {
    let grid = args.grid.grid()?;
    let workers = pool(args.threads)?;
    let paths = [
        args.train.as_path(),
        args.validation.as_path(),
        args.test.as_path(),
    ];
    let (raw, _, _) = load_sets(&paths, args.format.into())?;
    let mean = if args.no_center {
        0.0
    } else {
        mean_rating(&raw[0])
    };
    let sets: Vec<_> = raw.iter().map(|s| shift(s, mean)).collect();
    let [train_set, validation, test] = [&sets[0], &sets[1], &sets[2]];
    if test.len() < 2 {
        return Err(CliError::input("the test file needs at least two ratings"));
    }
    let half = test.len() / 2;
    let [selection, holdout, _] = split_ratings(test, (half, test.len() - half, 0), args.seed)?;
    let (pr, pc) = empirical_marginals(train_set)?;
    let settings = FitSettings {
        rank: args.rank,
        epochs: args.epochs,
        seed: args.seed,
        metric: Metric::Rmse,
    };
    let scores = fit_grid(
        &grid,
        (&pr, &pc),
        train_set,
        &[validation, test, &selection, &holdout],
        settings,
        &workers,
    )?;
    let chosen = best_lambda(&scores, 0);

    let mut header = vec!["zeta".to_string()];
    header.extend(grid.taus.iter().map(|t| format!("tau={t}")));
    let mut table = Table::new(header);
    for &zeta in &grid.zetas {
        let mut row = vec![num(zeta)];
        for &tau in &grid.taus {
            let c = chosen
                .iter()
                .find(|c| c.cell.zeta == zeta && c.cell.tau == tau)
                .expect("every grid point has a cell");
            row.push(num(c.scores[1]));
        }
        table.push(row);
    }
    table.write(&args.output)?;

    let mut cells = Table::new([
        "zeta",
        "tau",
        "lambda",
        "validation_rmse",
        "test_rmse",
        "epochs",
        "selected",
    ]);
    for s in &scores {
        let selected = chosen.iter().any(|c| c.cell == s.cell);
        cells.push(vec![
            num(s.cell.zeta),
            num(s.cell.tau),
            num(s.cell.lambda),
            num(s.scores[0]),
            num(s.scores[1]),
            s.epochs.to_string(),
            selected.to_string(),
        ]);
    }
    cells.write(&sibling(&args.output, "cells.csv"))?;

    let mut summary = Table::new([
        "method",
        "zeta",
        "tau",
        "lambda",
        "validation_rmse",
        "selection_rmse",
        "holdout_rmse",
    ]);
    for method in grid.methods() {
        let best = select(method, &chosen, 2).expect("grid admits the method");
        summary.push(vec![
            method.name().to_string(),
            num(best.cell.zeta),
            num(best.cell.tau),
            num(best.cell.lambda),
            num(best.scores[0]),
            num(best.scores[2]),
            num(best.scores[3]),
        ]);
    }
    summary.write(&sibling(&args.output, "summary.csv"))?;

    let mut echo = RunConfig::new("gridsearch");
    echo.set("train", args.train.display())
        .set("validation", args.validation.display())
        .set("test", args.test.display())
        .set("format", format!("{:?}", args.format))
        .set("users", train_set.n)
        .set("items", train_set.m)
        .set("train_ratings", train_set.len())
        .set("validation_ratings", validation.len())
        .set("test_ratings", test.len())
        .set("mean", mean)
        .set("rank", args.rank)
        .set("epochs", args.epochs)
        .set("seed", args.seed)
        .set("zetas", join_nums(&grid.zetas))
        .set("taus", join_nums(&grid.taus))
        .set("lambdas", join_nums(&grid.lambdas))
        .set("threads", workers.current_num_threads())
        .set("output", args.output.display());
    echo.write(&sibling(&args.output, "config.txt"))?;

    write!(out, "{}", table.render())?;
    write!(out, "{}", summary.render())?;
    Ok(())
}
