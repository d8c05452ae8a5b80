//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::fs;
use std::path::Path;
use std::time::Instant;

use localmax::data::{synthetic_ratings, write_ratings};
use localmax::linalg::trace_norm;
use localmax::normcore::{beta_tau_scan, factorized_penalty, penalty_beta_tau};
use localmax::oracle::{brute_linmax, hull_check, psd_factor, psd_witness, GridSpec};
use localmax::trainer::{penalty_subgradient, penalty_value};
use localmax::{
    decompose_vector, local_max_norm, MarginalDist, Matrix, NormOptions, RatingsFormat,
    SmoothingSegment, WeightDomain, WeightSet, Weights,
};
use localmax_cli::args::{FormatArg, GridsearchArgs, SimulateArgs};
use localmax_cli::commands;
use localmax_cli::grid::GridArgs;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;

fn gauss_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Matrix<f64> {
    Matrix::from_fn(n, m, |_, _| rng.sample(StandardNormal))
}

fn random_marginal(rng: &mut ChaCha8Rng, n: usize) -> MarginalDist<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    MarginalDist::from_counts(&w).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Exponent, uniform-cap or lower-bounded set of dimension `n`.
fn random_family(rng: &mut ChaCha8Rng, n: usize, which: usize) -> WeightSet<f64> {
    match which % 3 {
        0 => {
            let p = random_marginal(rng, n);
            WeightSet::capped_exponent(&p, rng.random_range(0.0..1.0), rng.random_range(0.0..1.0))
                .unwrap()
        }
        1 => {
            let lo = 1.0 / n as f64;
            WeightSet::uniform_cap(n, rng.random_range(lo..=1.0)).unwrap()
        }
        _ => WeightSet::lower_bounded(n, rng.random_range(0.0..1.0)).unwrap(),
    }
}

fn strong_duality() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let opts = NormOptions::with_tol(1e-6);
    let mut worst: f64 = 0.0;
    for inst in 0..50 {
        let n = rng.random_range(1..=8);
        let m = rng.random_range(1..=8);
        let x = gauss_matrix(&mut rng, n, m);
        let r = random_family(&mut rng, n, inst);
        let c = random_family(&mut rng, m, inst + 1);
        let cert = local_max_norm(&x, &r, &c, opts).map_err(|e| e.to_string())?;
        let fp = factorized_penalty(&cert.a, &cert.b, &r, &c).map_err(|e| e.to_string())?;
        let gap = fp - cert.value;
        if !(gap >= -1e-12 * cert.value && gap <= 1e-4 * cert.value + 1e-8) {
            return Err(format!(
                "instance {inst} ({n}x{m}): gap {gap:e} at value {}",
                cert.value
            ));
        }
        let recon = cert.a.matmul_transpose(&cert.b).unwrap();
        let err = recon.sub(&x).unwrap().max_abs();
        if err > 1e-8 * x.max_abs().max(1.0) {
            return Err(format!("instance {inst}: factorization off by {err:e}"));
        }
        worst = worst.max(gap / cert.value.max(1e-300));
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 30.0 {
        return Err(format!("took {secs:.1} s"));
    }
    Ok(format!(
        "50 instances, worst relative gap {worst:.2e}, {secs:.2} s"
    ))
}

fn endpoints() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let opts = NormOptions::with_tol(1e-9);
    let (mut w_cap, mut w_single, mut w_exp): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..20 {
        let n = rng.random_range(2..=7);
        let m = rng.random_range(2..=7);
        let x = gauss_matrix(&mut rng, n, m);

        let r = WeightSet::uniform_cap(n, 1.0 / n as f64).unwrap();
        let c = WeightSet::uniform_cap(m, 1.0 / m as f64).unwrap();
        let v = local_max_norm(&x, &r, &c, opts).unwrap().value;
        let want = trace_norm(&x).unwrap() / ((n * m) as f64).sqrt();
        w_cap = w_cap.max(rel(v, want));

        let pr = random_marginal(&mut rng, n);
        let pc = random_marginal(&mut rng, m);
        let v = local_max_norm(
            &x,
            &WeightSet::singleton(&pr),
            &WeightSet::singleton(&pc),
            opts,
        )
        .unwrap()
        .value;
        let scaled = nalgebra::DMatrix::from_fn(n, m, |i, j| {
            x[(i, j)] * pr.weights()[i].sqrt() * pc.weights()[j].sqrt()
        });
        let direct: f64 = scaled.singular_values().sum();
        w_single = w_single.max(rel(v, direct));

        let zeta = rng.random_range(0.0..1.0);
        let er = WeightSet::capped_exponent(&pr, zeta, 1.0).unwrap();
        let ec = WeightSet::capped_exponent(&pc, zeta, 1.0).unwrap();
        let v = local_max_norm(&x, &er, &ec, opts).unwrap().value;
        let full = local_max_norm(
            &x,
            &WeightSet::full_simplex(n),
            &WeightSet::full_simplex(m),
            opts,
        )
        .unwrap()
        .value;
        w_exp = w_exp.max(rel(v, full));
    }
    let detail =
        format!("uniform cap {w_cap:.1e}, singleton {w_single:.1e}, exponent τ=1 {w_exp:.1e}");
    if w_cap <= 1e-6 && w_single <= 1e-10 && w_exp <= 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lp_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grid = GridSpec::new(0.02).unwrap();
    let (mut worst_brute, mut worst_dual): (f64, f64) = (0.0, 0.0);
    for pair in 0..100 {
        let n = rng.random_range(1..=4);
        let set = if pair % 4 == 3 {
            WeightSet::lower_bounded(n, rng.random_range(0.0..1.0)).unwrap()
        } else {
            let base_mass = if pair % 2 == 0 {
                0.0
            } else {
                rng.random_range(0.0..0.5)
            };
            let p = random_marginal(&mut rng, n);
            let base: Vec<f64> = p.weights().iter().map(|w| w * base_mass).collect();
            let target =
                rng.random_range(1.0 + n as f64 * grid.step..=n as f64 + n as f64 * grid.step);
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let caps: Vec<f64> = raw.iter().map(|c| (c * target / total).min(1.0)).collect();
            match WeightSet::new(base, 1.0 - base_mass, caps) {
                Ok(s) => s,
                Err(_) => WeightSet::full_simplex(n),
            }
        };
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
        let exact = set.linmax(&v).unwrap().value;
        let brute = brute_linmax(&set, &v, &grid).unwrap();
        let vmax = v.iter().cloned().fold(0.0, f64::max);
        let tol = set.scale() * n as f64 * grid.step * vmax + 1e-12;
        let miss = exact - brute;
        if !(miss >= -1e-12 && miss <= tol) {
            return Err(format!(
                "pair {pair}: linmax {exact} vs brute {brute} (tol {tol:e})"
            ));
        }
        let base: f64 = set.base().iter().zip(&v).map(|(b, x)| b * x).sum();
        let dual = if set.scale() == 0.0 {
            base
        } else {
            base + set.scale() * set.dual_offset(&v).unwrap().value
        };
        worst_brute = worst_brute.max(miss);
        worst_dual = worst_dual.max((dual - exact).abs());
    }
    let detail = format!(
        "100 pairs, max linmax−brute {worst_brute:.2e}, max |linmax−dual| {worst_dual:.1e}"
    );
    if worst_dual <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn hull() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut unconverged = 0;
    for family in 0..5 {
        for trial in 0..8 {
            let n = rng.random_range(2..=6);
            let m = rng.random_range(2..=6);
            let pr = random_marginal(&mut rng, n);
            let pc = random_marginal(&mut rng, m);
            let (r, c): (Weights<f64>, Weights<f64>) = match family {
                0 => {
                    let (z, t) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
                    (
                        WeightSet::capped_exponent(&pr, z, t).unwrap().into(),
                        WeightSet::capped_exponent(&pc, z, t).unwrap().into(),
                    )
                }
                1 => (
                    WeightSet::uniform_cap(n, rng.random_range(1.0 / n as f64..=1.0))
                        .unwrap()
                        .into(),
                    WeightSet::uniform_cap(m, rng.random_range(1.0 / m as f64..=1.0))
                        .unwrap()
                        .into(),
                ),
                2 => {
                    let g = rng.random_range(1.0..8.0);
                    (
                        WeightSet::capped_multiplicative(&pr, 0.5, g)
                            .unwrap()
                            .into(),
                        WeightSet::capped_multiplicative(&pc, 0.5, g)
                            .unwrap()
                            .into(),
                    )
                }
                3 => {
                    let t = rng.random_range(0.0..1.0);
                    (
                        WeightSet::lower_bounded(n, t).unwrap().into(),
                        WeightSet::lower_bounded(m, t).unwrap().into(),
                    )
                }
                _ => (
                    SmoothingSegment::new(&pr).into(),
                    SmoothingSegment::new(&pc).into(),
                ),
            };
            let report = hull_check(&r, &c, 5, (family * 100 + trial) as u64, 1e-5)
                .map_err(|e| e.to_string())?;
            if report.violations > 0 {
                return Err(format!("family {family}: max norm {}", report.max_norm));
            }
            worst = worst.max(report.max_norm);
            unconverged += report.unconverged;
        }
    }
    Ok(format!(
        "200 rank-1 instances over 5 families, max norm {worst:.8}, {unconverged} unconverged"
    ))
}

fn decomposition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut inf, mut heavy): (f64, f64) = (0.0, f64::NEG_INFINITY);
    for gamma in [1.0, 4.0, 16.0] {
        for _ in 0..100 {
            let n = rng.random_range(1..=12);
            let p = random_marginal(&mut rng, n);
            let set = WeightSet::capped_multiplicative(&p, 0.5, gamma).unwrap();
            let mut u: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let norm = set.vec_norm(&u).unwrap();
            u.iter_mut().for_each(|x| *x /= norm);
            let d = decompose_vector(&u, &p, gamma).map_err(|e| e.to_string())?;
            let a = d.u_prime.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            let b: f64 = d
                .smoothed
                .iter()
                .zip(&d.u_doubleprime)
                .map(|(w, x)| w * x * x)
                .sum();
            if a > 1.0 + 1e-9 || b > 1.0 / gamma + 1e-9 {
                return Err(format!("γ={gamma}, n={n}: ‖u'‖∞={a}, Σp̃u''²={b}"));
            }
            inf = inf.max(a);
            heavy = heavy.max(b - 1.0 / gamma);
        }
    }
    Ok(format!(
        "300 vectors, max ‖u'‖∞ {inf:.6}, max Σp̃u''² − 1/γ {heavy:.2e}"
    ))
}

fn beta_tau() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let opts = NormOptions::with_tol(1e-9);
    let (mut worst, mut worst_h): (f64, f64) = (0.0, 0.0);
    for _ in 0..10 {
        let x = gauss_matrix(&mut rng, 3, 3);
        let golden = penalty_beta_tau(&x, 1e-9).map_err(|e| e.to_string())?;
        let hi = 3f64.sqrt();
        let mut dense = f64::INFINITY;
        let mut alpha = 1.0;
        while alpha <= hi + 1e-12 {
            dense = dense.min(beta_tau_scan(&x, alpha.min(hi), opts).unwrap().value);
            alpha += 1e-3;
        }
        dense = dense.min(beta_tau_scan(&x, hi, opts).unwrap().value);
        worst = worst.max(rel(golden.value, dense));
        let twice = penalty_beta_tau(&x.scaled(2.0), 1e-9).unwrap().value;
        worst_h = worst_h.max(rel(twice, 2.0 * golden.value));
    }
    let detail = format!("10 matrices, golden vs dense {worst:.1e}, homogeneity {worst_h:.1e}");
    if worst <= 1e-4 && worst_h <= 2e-4 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn psd() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = NormOptions::with_tol(1e-8);
    let (mut worst_eig, mut worst_rt): (f64, f64) = (0.0, 0.0);
    for inst in 0..20 {
        let n = rng.random_range(1..=6);
        let m = rng.random_range(1..=6);
        let x = gauss_matrix(&mut rng, n, m);
        let r = random_family(&mut rng, n, inst);
        let c = random_family(&mut rng, m, inst + 2);
        let cert = local_max_norm(&x, &r, &c, opts).unwrap();
        let w = psd_witness(&cert.a, &cert.b).map_err(|e| e.to_string())?;
        if w.min_eigenvalue < -1e-10 * cert.value {
            return Err(format!(
                "instance {inst}: min eigenvalue {:e}",
                w.min_eigenvalue
            ));
        }
        let (a, b) = psd_factor(&w.block, n).map_err(|e| e.to_string())?;
        let err = a.matmul_transpose(&b).unwrap().sub(&x).unwrap().max_abs();
        if err > 1e-9 * x.max_abs().max(1.0) {
            return Err(format!("instance {inst}: round trip off by {err:e}"));
        }
        worst_eig = worst_eig.min(w.min_eigenvalue / cert.value);
        worst_rt = worst_rt.max(err);
    }
    Ok(format!(
        "20 instances, min eigenvalue/norm {worst_eig:.1e}, round trip {worst_rt:.1e}"
    ))
}

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn fast_grid() -> GridArgs {
    GridArgs {
        fast: true,
        zetas: None,
        taus: None,
        lambdas: None,
    }
}

fn method_stats(rows: &[Vec<String>], method: &str) -> (f64, f64) {
    let v: Vec<f64> = rows
        .iter()
        .filter(|r| r[3] == method)
        .map(|r| r[8].parse().unwrap())
        .collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn simulation() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let baselines = [
        "max-norm",
        "uniform-trace",
        "empirical-trace",
        "smoothed-trace",
    ];
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    for (n, k) in [(30, 2), (60, 2), (60, 4)] {
        let output = dir.path().join(format!("sim_{n}_{k}.csv"));
        let args = SimulateArgs {
            n,
            k,
            sigma: 0.3,
            trials: 10,
            seed: 2012,
            grid: fast_grid(),
            rank: 8,
            epochs: 500,
            threads: None,
            output: output.clone(),
            cells: None,
        };
        commands::simulate(&args, &mut std::io::sink()).map_err(|e| e.to_string())?;
        let rows = read_rows(&output);
        if rows.len() != 50 {
            return Err(format!("n={n}, k={k}: {} result rows", rows.len()));
        }
        let (local, local_se) = method_stats(&rows, "local-max");
        if k == 2 {
            for b in baselines {
                let (mean, _) = method_stats(&rows, b);
                if local > mean + local_se {
                    failures.push(format!(
                        "n={n} k=2: local-max {local:.4} > {b} {mean:.4} + SE {local_se:.4}"
                    ));
                }
            }
            notes.push(format!("n={n} k=2 local {local:.4}±{local_se:.4}"));
        } else {
            let (max, _) = method_stats(&rows, "max-norm");
            if max <= local {
                failures.push(format!(
                    "n={n} k={k}: max-norm {max:.4} <= local-max {local:.4}"
                ));
            }
            notes.push(format!("n={n} k={k} local {local:.4} max {max:.4}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs > 900.0 {
        failures.push(format!("took {secs:.0} s"));
    }
    let detail = format!("{}; {secs:.0} s", notes.join(", "));
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", failures.join("; ")))
    }
}

fn ratings_gridsearch() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let all = synthetic_ratings(300, 150, 5000, 9).map_err(|e| e.to_string())?;
    let (train, rest) = all.split_at(4000);
    let (validation, test) = rest.split_at(500);
    let path = |name: &str| dir.path().join(name);
    for (name, part) in [
        ("train.dat", train),
        ("validation.dat", validation),
        ("test.dat", test),
    ] {
        write_ratings(path(name), part, RatingsFormat::DoubleColon).map_err(|e| e.to_string())?;
    }
    let output = path("grid.csv");
    let args = GridsearchArgs {
        train: path("train.dat"),
        validation: path("validation.dat"),
        test: path("test.dat"),
        format: FormatArg::DoubleColon,
        grid: fast_grid(),
        no_center: false,
        rank: 30,
        epochs: 500,
        seed: 0,
        threads: None,
        output: output.clone(),
    };
    commands::gridsearch(&args, &mut std::io::sink()).map_err(|e| e.to_string())?;
    let table = fs::read_to_string(&output).unwrap();
    let header: Vec<&str> = table.lines().next().unwrap().split(',').collect();
    let col = header
        .iter()
        .position(|h| *h == "tau=1")
        .ok_or("no tau=1 column")?;
    let tau1: Vec<f64> = read_rows(&output)
        .iter()
        .map(|r| r[col].parse().unwrap())
        .collect();
    let spread = tau1.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - tau1.iter().cloned().fold(f64::INFINITY, f64::min);
    if read_rows(&output)
        .iter()
        .flatten()
        .any(|v| !v.parse::<f64>().unwrap().is_finite())
    {
        return Err("non-finite grid cell".into());
    }
    let summary = read_rows(&output.with_file_name("grid.summary.csv"));
    let holdout = |m: &str| -> f64 {
        summary.iter().find(|r| r[0] == m).unwrap()[6]
            .parse()
            .unwrap()
    };
    let (local, uniform) = (holdout("local-max"), holdout("uniform-trace"));
    let detail =
        format!("τ=1 spread {spread:.1e}, local-max {local:.4} vs uniform-trace {uniform:.4}");
    if spread <= 1e-3 && local <= uniform {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn subgradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for point in 0..50 {
        let n = rng.random_range(2..=7);
        let m = rng.random_range(2..=7);
        let k = rng.random_range(1..=3);
        let r = random_family(&mut rng, n, point);
        let c = random_family(&mut rng, m, point + 1);
        let a = gauss_matrix(&mut rng, n, k);
        let b = gauss_matrix(&mut rng, m, k);
        let (ga, gb) = penalty_subgradient(&a, &b, &r, &c).map_err(|e| e.to_string())?;
        let scale = ga.max_abs().max(gb.max_abs()).max(1.0);
        let mut check = |which: usize, grad: &Matrix<f64>| {
            let base = if which == 0 { &a } else { &b };
            for i in 0..base.rows() {
                for l in 0..k {
                    let bump = |d: f64| {
                        let mut moved = base.clone();
                        moved.row_mut(i)[l] += d;
                        if which == 0 {
                            penalty_value(&moved, &b, &r, &c).unwrap()
                        } else {
                            penalty_value(&a, &moved, &r, &c).unwrap()
                        }
                    };
                    let fd = (bump(h) - bump(-h)) / (2.0 * h);
                    worst = worst.max((fd - grad[(i, l)]).abs() / scale);
                }
            }
        };
        check(0, &ga);
        check(1, &gb);
    }
    let detail = format!("50 points, max relative error {worst:.1e}");
    if worst <= 1e-5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("strong duality", strong_duality),
        ("endpoint equivalences", endpoints),
        ("LP oracle agreement", lp_oracle),
        ("hull lower inclusion", hull),
        ("vector decomposition bounds", decomposition),
        ("max-norm/trace product penalty", beta_tau),
        ("PSD witness", psd),
        ("simulation study", simulation),
        ("ratings grid search", ratings_gridsearch),
        ("penalty subgradients", subgradients),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        let start = Instant::now();
        let outcome =
            std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1} s]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
