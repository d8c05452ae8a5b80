//! Observed entries: synthetic low-rank data, ratings files and splits.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{count, Real};
use crate::weights::MarginalDist;

/// Which part of an experiment a sample set belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Train,
    Validation,
    Test,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::Validation => "validation",
            Role::Test => "test",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Observed entries `(i, j, Y_ij)` of an `n x m` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet<T> {
    pub n: usize,
    pub m: usize,
    pub triples: Vec<(usize, usize, T)>,
    pub role: Role,
}

impl<T: Real> SampleSet<T> {
    /// Validates that every index lies inside `n x m` and every value is finite.
    pub fn new(n: usize, m: usize, triples: Vec<(usize, usize, T)>, role: Role) -> Result<Self> {
        for &(i, j, y) in &triples {
            if i >= n || j >= m {
                return Err(Error::IndexOutOfRange {
                    row: i,
                    col: j,
                    rows: n,
                    cols: m,
                });
            }
            if !y.is_finite() {
                return Err(Error::NonFinite(format!("value at ({i}, {j})")));
            }
        }
        Ok(SampleSet {
            n,
            m,
            triples,
            role,
        })
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }
}

/// Parameters of the synthetic low-rank study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec<T> {
    pub n: usize,
    /// Rank of the signal `UVᵀ`.
    pub k: usize,
    pub sigma: T,
    pub seed: u64,
}

/// One generated instance: `Y = UVᵀ + σZ` and a random three-way split of
/// its entries.
#[derive(Debug, Clone)]
pub struct Simulation<T> {
    pub y: Matrix<T>,
    pub u: Matrix<T>,
    pub v: Matrix<T>,
    pub train: SampleSet<T>,
    pub validation: SampleSet<T>,
    pub test: SampleSet<T>,
}

/// Generates an `n x n` instance with `3kn` training entries, `3kn`
/// validation entries and the rest held out for testing.
///
/// Rows of `U` and `V` are uniform on the unit sphere in `R^k`.
pub fn simulate<T: Real>(spec: &SimulationSpec<T>) -> Result<Simulation<T>> {
    let SimulationSpec { n, k, sigma, seed } = *spec;
    if k == 0 || n < k {
        return Err(Error::Infeasible(format!(
            "need n >= k >= 1, got n={n}, k={k}"
        )));
    }
    if !(sigma >= T::zero()) || !sigma.is_finite() {
        return Err(invalid("sigma", "must be finite and nonnegative"));
    }
    let s = 3 * k * n;
    if 2 * s >= n * n {
        return Err(Error::Infeasible(format!(
            "2·3kn = {} must be below n² = {}",
            2 * s,
            n * n
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = sphere_rows(&mut rng, n, k);
    let v = sphere_rows(&mut rng, n, k);
    let signal = u.matmul_transpose(&v)?;
    let y = Matrix::from_fn(n, n, |i, j| {
        let z: f64 = StandardNormal.sample(&mut rng);
        signal[(i, j)] + sigma * T::from_f64(z).unwrap()
    });

    let mut cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    cells.shuffle(&mut rng);
    let take = |range: std::ops::Range<usize>, role| SampleSet {
        n,
        m: n,
        triples: cells[range]
            .iter()
            .map(|&(i, j)| (i, j, y[(i, j)]))
            .collect(),
        role,
    };
    let train = take(0..s, Role::Train);
    let validation = take(s..2 * s, Role::Validation);
    let test = take(2 * s..n * n, Role::Test);
    Ok(Simulation {
        y,
        u,
        v,
        train,
        validation,
        test,
    })
}

fn sphere_rows<T: Real>(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Matrix<T> {
    let mut out = Matrix::zeros(n, k);
    for i in 0..n {
        loop {
            let g: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut *rng)).collect();
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                for (dst, x) in out.row_mut(i).iter_mut().zip(&g) {
                    *dst = T::from_f64(x / norm).unwrap();
                }
                break;
            }
        }
    }
    out
}

/// Draws `count` entries of `y` i.i.d. with row and column indices
/// independent from the given marginals (repeats allowed).
pub fn sample_iid<T: Real>(
    y: &Matrix<T>,
    rows: &MarginalDist<T>,
    cols: &MarginalDist<T>,
    count: usize,
    seed: u64,
) -> Result<SampleSet<T>> {
    if rows.len() != y.rows() || cols.len() != y.cols() {
        return Err(Error::DimensionMismatch {
            expected: y.rows() * y.cols(),
            got: rows.len() * cols.len(),
        });
    }
    let to_f64 = |d: &MarginalDist<T>| -> Vec<f64> {
        d.weights().iter().map(|w| w.to_f64().unwrap()).collect()
    };
    let ri =
        WeightedIndex::new(to_f64(rows)).map_err(|e| Error::InvalidMarginals(e.to_string()))?;
    let ci =
        WeightedIndex::new(to_f64(cols)).map_err(|e| Error::InvalidMarginals(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples = (0..count)
        .map(|_| {
            let i = ri.sample(&mut rng);
            let j = ci.sample(&mut rng);
            (i, j, y[(i, j)])
        })
        .collect();
    Ok(SampleSet {
        n: y.rows(),
        m: y.cols(),
        triples,
        role: Role::Train,
    })
}

/// Observed row and column frequencies. Unobserved rows get weight zero.
pub fn empirical_marginals<T: Real>(
    samples: &SampleSet<T>,
) -> Result<(MarginalDist<T>, MarginalDist<T>)> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut rc = vec![0usize; samples.n];
    let mut cc = vec![0usize; samples.m];
    for &(i, j, _) in &samples.triples {
        rc[i] += 1;
        cc[j] += 1;
    }
    let total = count::<T>(samples.len());
    let norm =
        |c: Vec<usize>| MarginalDist::new(c.into_iter().map(|x| count::<T>(x) / total).collect());
    Ok((norm(rc)?, norm(cc)?))
}

/// Splits samples uniformly at random into disjoint train, validation and
/// test sets of the requested sizes.
pub fn split_ratings<T: Real>(
    samples: &SampleSet<T>,
    sizes: (usize, usize, usize),
    seed: u64,
) -> Result<[SampleSet<T>; 3]> {
    let (a, b, c) = sizes;
    if a + b + c > samples.len() {
        return Err(Error::Infeasible(format!(
            "split sizes {a}+{b}+{c} exceed {} samples",
            samples.len()
        )));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let part = |idx: &[usize], role| SampleSet {
        n: samples.n,
        m: samples.m,
        triples: idx.iter().map(|&t| samples.triples[t]).collect(),
        role,
    };
    Ok([
        part(&order[..a], Role::Train),
        part(&order[a..a + b], Role::Validation),
        part(&order[a + b..a + b + c], Role::Test),
    ])
}

/// Field separator of a ratings file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingsFormat {
    /// `user<TAB>item<TAB>rating`
    Tab,
    /// `user::item::rating::timestamp`
    DoubleColon,
    /// `user,item,rating`
    Comma,
}

impl RatingsFormat {
    fn separator(self) -> &'static str {
        match self {
            RatingsFormat::Tab => "\t",
            RatingsFormat::DoubleColon => "::",
            RatingsFormat::Comma => ",",
        }
    }
}

impl FromStr for RatingsFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tab" => Ok(RatingsFormat::Tab),
            "double-colon" | "::" => Ok(RatingsFormat::DoubleColon),
            "comma" | "csv" => Ok(RatingsFormat::Comma),
            other => Err(Error::Parse(format!("unknown ratings format {other:?}"))),
        }
    }
}

/// A line that could not be parsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Dense reindexing of external user and item ids in first-seen order.
#[derive(Debug, Clone, Default)]
pub struct IdMap {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    pub fn get_or_insert(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_owned());
        self.index.insert(id.to_owned(), i);
        i
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// External id of a dense index.
    pub fn id(&self, i: usize) -> Option<&str> {
        self.ids.get(i).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// A parsed ratings file.
#[derive(Debug, Clone)]
pub struct Ratings<T> {
    pub samples: SampleSet<T>,
    pub users: IdMap,
    pub items: IdMap,
    pub diagnostics: Vec<Diagnostic>,
}

/// Reads one ratings file. See [`load_ratings_files`] for several files that
/// must share an index.
pub fn load_ratings<T: Real>(path: impl AsRef<Path>, format: RatingsFormat) -> Result<Ratings<T>> {
    let mut loaded = load_ratings_files(&[path.as_ref()], format)?;
    let (samples, diagnostics) = loaded.sets.pop().expect("one file");
    Ok(Ratings {
        samples,
        users: loaded.users,
        items: loaded.items,
        diagnostics,
    })
}

/// Several ratings files indexed with one shared id map, so the same user or
/// item gets the same row or column in every set.
#[derive(Debug, Clone)]
pub struct RatingsCollection<T> {
    /// One sample set and its diagnostics per input file, in order.
    pub sets: Vec<(SampleSet<T>, Vec<Diagnostic>)>,
    pub users: IdMap,
    pub items: IdMap,
}

pub fn load_ratings_files<P: AsRef<Path>, T: Real>(
    paths: &[P],
    format: RatingsFormat,
) -> Result<RatingsCollection<T>> {
    let mut users = IdMap::default();
    let mut items = IdMap::default();
    let mut sets = Vec::with_capacity(paths.len());
    for path in paths {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let (triples, diags) = parse_ratings(BufReader::new(file), format, &mut users, &mut items)?;
        if triples.is_empty() {
            return Err(Error::Parse(format!("{}: no valid lines", path.display())));
        }
        sets.push((triples, diags));
    }
    let (n, m) = (users.len(), items.len());
    let sets = sets
        .into_iter()
        .map(|(triples, diags)| {
            (
                SampleSet {
                    n,
                    m,
                    triples,
                    role: Role::Train,
                },
                diags,
            )
        })
        .collect();
    Ok(RatingsCollection { sets, users, items })
}

type Parsed<T> = (Vec<(usize, usize, T)>, Vec<Diagnostic>);

/// Parses ratings lines from any reader. Blank lines are skipped silently.
pub fn parse_ratings<T: Real>(
    reader: impl BufRead,
    format: RatingsFormat,
    users: &mut IdMap,
    items: &mut IdMap,
) -> Result<Parsed<T>> {
    let sep = format.separator();
    let mut triples = Vec::new();
    let mut diags = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(sep).map(str::trim).collect();
        let bad = |message: String| Diagnostic {
            line: lineno + 1,
            message,
        };
        if fields.len() < 3 {
            diags.push(bad(format!(
                "expected at least 3 fields, found {}",
                fields.len()
            )));
            continue;
        }
        if fields[0].is_empty() || fields[1].is_empty() {
            diags.push(bad("empty user or item id".into()));
            continue;
        }
        let rating = match fields[2].parse::<f64>() {
            Ok(r) if r.is_finite() => r,
            _ => {
                diags.push(bad(format!("rating {:?} is not a number", fields[2])));
                continue;
            }
        };
        let i = users.get_or_insert(fields[0]);
        let j = items.get_or_insert(fields[1]);
        triples.push((i, j, T::from_f64(rating).unwrap()));
    }
    Ok((triples, diags))
}

/// Writes `(user, item, rating)` lines in the given format.
pub fn write_ratings<T: Real>(
    path: impl AsRef<Path>,
    ratings: &[(String, String, T)],
    format: RatingsFormat,
) -> Result<()> {
    let sep = format.separator();
    let mut out = std::io::BufWriter::new(File::create(path)?);
    for (u, i, r) in ratings {
        writeln!(out, "{u}{sep}{i}{sep}{r}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a dense matrix from a header-less, comma-separated file.
pub fn read_dense_csv<T: Real>(path: impl AsRef<Path>) -> Result<Matrix<T>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (lineno, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field
                    .parse::<f64>()
                    .ok()
                    .and_then(T::from_f64)
                    .ok_or_else(|| {
                        Error::Parse(format!(
                            "{}: line {}, column {}: {field:?} is not a number",
                            path.display(),
                            lineno + 1,
                            col + 1
                        ))
                    })
            })
            .collect::<Result<Vec<T>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse(format!("{}: empty matrix", path.display())));
    }
    let m = Matrix::from_rows(&rows)
        .map_err(|_| Error::Parse(format!("{}: ragged rows", path.display())))?;
    if !m.is_finite() {
        return Err(Error::NonFinite(path.display().to_string()));
    }
    Ok(m)
}

/// Writes a dense matrix without header, full round-trip precision.
pub fn write_dense_csv<T: Real>(path: impl AsRef<Path>, x: &Matrix<T>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::Io(e.to_string()))?;
    for i in 0..x.rows() {
        w.write_record(x.row(i).iter().map(|v| v.to_string()))
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the split assignment as `i,j,value,role` rows.
pub fn write_split_csv<T: Real>(path: impl AsRef<Path>, sets: &[&SampleSet<T>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    w.write_record(["i", "j", "value", "role"])
        .map_err(|e| Error::Io(e.to_string()))?;
    for set in sets {
        for &(i, j, y) in &set.triples {
            w.write_record([
                i.to_string(),
                j.to_string(),
                y.to_string(),
                set.role.to_string(),
            ])
            .map_err(|e| Error::Io(e.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Synthetic MovieLens-style ratings: a low-rank preference model observed
/// with Zipf-distributed user and item activity, rounded to half stars in
/// `[1, 5]`. Ids are 1-based integers rendered as strings. Each
/// `(user, item)` pair is rated at most once.
pub fn synthetic_ratings(
    users: usize,
    items: usize,
    ratings: usize,
    seed: u64,
) -> Result<Vec<(String, String, f64)>> {
    if ratings > users * items / 2 {
        return Err(Error::Infeasible(format!(
            "{ratings} ratings exceed half of {users}x{items} cells"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zipf =
        |len: usize, s: f64| -> Vec<f64> { (1..=len).map(|r| 1.0 / (r as f64).powf(s)).collect() };
    let mut pu = zipf(users, 0.8);
    let mut pi = zipf(items, 1.0);
    pu.shuffle(&mut rng);
    pi.shuffle(&mut rng);
    let ud = WeightedIndex::new(&pu).map_err(|e| Error::InvalidMarginals(e.to_string()))?;
    let id = WeightedIndex::new(&pi).map_err(|e| Error::InvalidMarginals(e.to_string()))?;

    let k = 3;
    let gauss = |rng: &mut ChaCha8Rng, len: usize| -> Vec<f64> {
        (0..len)
            .map(|_| StandardNormal.sample(&mut *rng))
            .collect::<Vec<f64>>()
    };
    let uf: Vec<Vec<f64>> = (0..users).map(|_| gauss(&mut rng, k)).collect();
    let vf: Vec<Vec<f64>> = (0..items).map(|_| gauss(&mut rng, k)).collect();
    let ub = gauss(&mut rng, users);
    let ib = gauss(&mut rng, items);

    let mut seen = std::collections::HashSet::with_capacity(ratings);
    let mut out = Vec::with_capacity(ratings);
    while out.len() < ratings {
        let u = ud.sample(&mut rng);
        let i = id.sample(&mut rng);
        if !seen.insert((u, i)) {
            continue;
        }
        let noise: f64 = StandardNormal.sample(&mut rng);
        let affinity: f64 = uf[u].iter().zip(&vf[i]).map(|(a, b)| a * b).sum();
        let raw = 3.5 + 0.5 * affinity + 0.3 * ub[u] + 0.4 * ib[i] + 0.4 * noise;
        let stars = ((raw * 2.0).round() / 2.0).clamp(1.0, 5.0);
        out.push(((u + 1).to_string(), (i + 1).to_string(), stars));
    }
    Ok(out)
}
