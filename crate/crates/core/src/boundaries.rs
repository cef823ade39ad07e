//! Cultural boundaries: principal components of area signatures, spherical
//! k-means over the component scores, and rank comparison against survey
//! coordinates.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::model::{AreaKind, ClassId, Taxonomy};
use crate::signatures::{DayGroup, SLOTS_PER_SUBCATEGORY};

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const EIGEN_TOLERANCE: f64 = 1e-12;

/// Number of clusters used by default at each area level.
pub fn default_k(kind: AreaKind) -> usize {
    match kind {
        AreaKind::Country => 7,
        AreaKind::City => 4,
        AreaKind::GridCell => 3,
    }
}

/// Principal components of a data matrix.
///
/// `components` has one orthonormal row per non-zero eigenvalue, in
/// descending eigenvalue order. `eigenvalues` and `explained_ratio` list every
/// eigenvalue of the covariance that the decomposition produces, with
/// numerically zero ones set to exactly 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub explained_ratio: Vec<f64>,
}

impl PcaModel {
    pub fn rank(&self) -> usize {
        self.components.len()
    }

    /// Scores of `rows` on the first `p` components.
    pub fn transform(&self, rows: &[Vec<f64>], p: usize) -> Result<Vec<Vec<f64>>> {
        if p > self.rank() {
            return Err(Error::invalid(format!("asked for {p} components, model has {}", self.rank())));
        }
        rows.iter()
            .map(|row| {
                if row.len() != self.mean.len() {
                    return Err(Error::invalid("row length does not match the fitted data"));
                }
                Ok(self.components[..p]
                    .iter()
                    .map(|c| row.iter().zip(&self.mean).zip(c).map(|((x, m), v)| (x - m) * v).sum())
                    .collect())
            })
            .collect()
    }

    /// Maps scores back to feature space.
    pub fn inverse_transform(&self, scores: &[Vec<f64>]) -> Vec<Vec<f64>> {
        scores
            .iter()
            .map(|s| {
                let mut x = self.mean.clone();
                for (w, c) in s.iter().zip(&self.components) {
                    for (xi, ci) in x.iter_mut().zip(c) {
                        *xi += w * ci;
                    }
                }
                x
            })
            .collect()
    }
}

/// Fits PCA by an exact symmetric eigendecomposition of the covariance, or of
/// the Gram matrix of the centered rows when there are fewer rows than
/// features.
pub fn fit_pca(data: &[Vec<f64>]) -> Result<PcaModel> {
    let n = data.len();
    if n < 2 {
        return Err(Error::invalid("PCA needs at least two rows"));
    }
    let d = data[0].len();
    if d == 0 || data.iter().any(|r| r.len() != d) {
        return Err(Error::invalid("PCA rows must be non-empty and of equal length"));
    }
    if data.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("PCA input contains non-finite values"));
    }
    let mean: Vec<f64> = (0..d).map(|j| data.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let x = DMatrix::from_fn(n, d, |i, j| data[i][j] - mean[j]);
    let scale = (n - 1) as f64;

    let (values, mut vectors): (Vec<f64>, Vec<Vec<f64>>) = if n <= d {
        let eig = SymmetricEigen::new(&x * x.transpose());
        let order = descending(eig.eigenvalues.as_slice());
        let vecs = order
            .iter()
            .map(|&i| {
                let lambda = eig.eigenvalues[i].max(0.0);
                if lambda == 0.0 {
                    return vec![0.0; d];
                }
                let v = x.transpose() * eig.eigenvectors.column(i) / lambda.sqrt();
                v.iter().copied().collect()
            })
            .collect();
        (order.iter().map(|&i| eig.eigenvalues[i].max(0.0) / scale).collect(), vecs)
    } else {
        let eig = SymmetricEigen::new(x.transpose() * &x / scale);
        let order = descending(eig.eigenvalues.as_slice());
        (
            order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect(),
            order.iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect(),
        )
    };

    let max = values.first().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return Err(Error::undefined("PCA of data with zero variance"));
    }
    let eigenvalues: Vec<f64> = values.iter().map(|&v| if v < EIGEN_TOLERANCE * max { 0.0 } else { v }).collect();
    let rank = eigenvalues.iter().take_while(|&&v| v > 0.0).count();
    vectors.truncate(rank);
    orthonormalize(&mut vectors);
    let total: f64 = eigenvalues.iter().sum();
    Ok(PcaModel {
        mean,
        components: vectors,
        explained_ratio: eigenvalues.iter().map(|v| v / total).collect(),
        eigenvalues,
    })
}

fn descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Modified Gram-Schmidt, applied twice.
fn orthonormalize(vectors: &mut [Vec<f64>]) {
    for _ in 0..2 {
        for i in 0..vectors.len() {
            for j in 0..i {
                let proj = dot(&vectors[i], &vectors[j]);
                let (head, tail) = vectors.split_at_mut(i);
                for (a, b) in tail[0].iter_mut().zip(&head[j]) {
                    *a -= proj * b;
                }
            }
            let norm = dot(&vectors[i], &vectors[i]).sqrt();
            vectors[i].iter_mut().for_each(|v| *v /= norm);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Smallest number of leading components whose explained variance reaches
/// `coverage`.
pub fn select_components(model: &PcaModel, coverage: f64) -> usize {
    let mut cumulative = 0.0;
    for (p, r) in model.explained_ratio.iter().enumerate() {
        if *r == 0.0 {
            return p;
        }
        cumulative += r;
        if cumulative >= coverage - 1e-9 {
            return p + 1;
        }
    }
    model.rank()
}

/// Settings for [`kmeans_cosine`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iterations: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            restarts: 10,
            max_iterations: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub k: usize,
    pub seed: u64,
    pub area_ids: Vec<String>,
    /// Cluster index of each area, aligned with `area_ids`.
    pub assignments: Vec<usize>,
    /// Unit-length centroids.
    pub centroids: Vec<Vec<f64>>,
    /// Σ (1 − cos) between each area and its centroid.
    pub objective: f64,
    pub iterations: usize,
    /// Objective after each assignment step of the winning restart.
    pub objective_trace: Vec<f64>,
    /// Restart that produced this result.
    pub restart: usize,
}

impl ClusterReport {
    pub fn assignment_map(&self) -> BTreeMap<String, usize> {
        self.area_ids.iter().cloned().zip(self.assignments.iter().copied()).collect()
    }
}

/// Spherical k-means: rows are scaled to unit length, distance is `1 − x·c`,
/// and each centroid is the renormalized mean of its members. Seeding is
/// k-means++ from `seed`; the best of `options.restarts` runs is returned.
pub fn kmeans_cosine(
    area_ids: &[String],
    rows: &[Vec<f64>],
    k: usize,
    seed: u64,
    options: KMeansOptions,
) -> Result<ClusterReport> {
    if area_ids.len() != rows.len() {
        return Err(Error::invalid("one id per row is required"));
    }
    if k == 0 || k > rows.len() {
        return Err(Error::invalid(format!("k = {k} with {} rows", rows.len())));
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::invalid("rows of unequal length"));
    }
    let units: Vec<Vec<f64>> = rows
        .iter()
        .zip(area_ids)
        .map(|(r, id)| {
            let len = norm(r);
            if len == 0.0 || !len.is_finite() {
                Err(Error::invalid(format!("row `{id}` has zero length; cosine is undefined")))
            } else {
                Ok(r.iter().map(|v| v / len).collect())
            }
        })
        .collect::<Result<_>>()?;

    let runs: Vec<Run> = (0..options.restarts.max(1))
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(restart as u64);
            lloyd(&units, k, &mut rng, options.max_iterations)
        })
        .collect();
    let (restart, best) = runs
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.objective < a.1.objective { b } else { a })
        .expect("at least one restart");
    Ok(ClusterReport {
        k,
        seed,
        area_ids: area_ids.to_vec(),
        assignments: best.assignments,
        centroids: best.centroids,
        objective: best.objective,
        iterations: best.iterations,
        objective_trace: best.trace,
        restart,
    })
}

struct Run {
    assignments: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    objective: f64,
    iterations: usize,
    trace: Vec<f64>,
}

fn plus_plus_seeds(units: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = units.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = units.iter().map(|u| (1.0 - dot(u, &units[chosen[0]])).max(0.0)).collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, w) in nearest.iter().enumerate() {
                if *w > 0.0 && target < *w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            // floating round-off can walk past the end; fall back to the last positive weight
            if nearest[pick] == 0.0 {
                pick = nearest.iter().rposition(|&w| w > 0.0).expect("positive total");
            }
            pick
        } else {
            (0..n).find(|i| !chosen.contains(i)).expect("k ≤ n")
        };
        chosen.push(next);
        for (w, u) in nearest.iter_mut().zip(units) {
            *w = w.min((1.0 - dot(u, &units[next])).max(0.0));
        }
    }
    chosen.iter().map(|&i| units[i].clone()).collect()
}

fn assign(units: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<usize> {
    units
        .iter()
        .map(|u| {
            let mut best = 0;
            let mut best_sim = f64::NEG_INFINITY;
            for (j, c) in centroids.iter().enumerate() {
                let s = dot(u, c);
                if s > best_sim {
                    best = j;
                    best_sim = s;
                }
            }
            best
        })
        .collect()
}

fn objective(units: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &[usize]) -> f64 {
    units
        .iter()
        .zip(assignments)
        .map(|(u, &a)| (1.0 - dot(u, &centroids[a])).max(0.0))
        .sum()
}

/// Fills each empty cluster with the point farthest from its own centroid,
/// taken from a cluster that has more than one member.
fn repair_empty(units: &[Vec<f64>], centroids: &mut [Vec<f64>], assignments: &mut [usize]) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assignments.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut victim = None;
        let mut worst = f64::NEG_INFINITY;
        for (i, u) in units.iter().enumerate() {
            let a = assignments[i];
            if sizes[a] > 1 {
                let d = 1.0 - dot(u, &centroids[a]);
                if d > worst {
                    worst = d;
                    victim = Some(i);
                }
            }
        }
        let i = victim.expect("k ≤ n leaves a cluster with spare members");
        assignments[i] = empty;
        centroids[empty] = units[i].clone();
    }
}

fn update_centroids(units: &[Vec<f64>], assignments: &[usize], previous: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = units[0].len();
    let mut sums = vec![vec![0.0; dim]; previous.len()];
    for (u, &a) in units.iter().zip(assignments) {
        for (s, v) in sums[a].iter_mut().zip(u) {
            *s += v;
        }
    }
    sums.into_iter()
        .zip(previous)
        .map(|(s, prev)| {
            let len = norm(&s);
            if len > 0.0 {
                s.iter().map(|v| v / len).collect()
            } else {
                prev.clone()
            }
        })
        .collect()
}

fn lloyd(units: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng, max_iterations: usize) -> Run {
    let mut centroids = plus_plus_seeds(units, k, rng);
    let mut previous: Option<Vec<usize>> = None;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut assignments = Vec::new();
    for it in 1..=max_iterations.max(1) {
        iterations = it;
        assignments = assign(units, &centroids);
        repair_empty(units, &mut centroids, &mut assignments);
        trace.push(objective(units, &centroids, &assignments));
        if previous.as_ref() == Some(&assignments) {
            break;
        }
        centroids = update_centroids(units, &assignments, &centroids);
        previous = Some(assignments.clone());
    }
    Run {
        objective: objective(units, &centroids, &assignments),
        assignments,
        centroids,
        iterations,
        trace,
    }
}

/// Cosine similarity of two non-zero vectors.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid("cosine of vectors with different lengths"));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("cosine with a zero vector"));
    }
    Ok(dot(a, b) / (na * nb))
}

/// Every area other than `target`, most similar first. Ties are broken by
/// ascending id.
pub fn rank_by_cosine(target: &str, vectors: &BTreeMap<String, Vec<f64>>) -> Result<Vec<(String, f64)>> {
    let t = vectors
        .get(target)
        .ok_or_else(|| Error::invalid(format!("`{target}` has no vector")))?;
    let mut ranked: Vec<(String, f64)> = vectors
        .iter()
        .filter(|(id, _)| id.as_str() != target)
        .map(|(id, v)| {
            cosine(t, v)
                .map(|c| (id.clone(), c))
                .map_err(|e| Error::invalid(format!("ranking `{id}` against `{target}`: {e}")))
        })
        .collect::<Result<_>>()?;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(ranked)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    /// Student t approximation with n − 2 degrees of freedom.
    #[default]
    TApprox,
    /// Exact two-sided permutation test; only for n ≤ 8.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spearman {
    pub rho: f64,
    pub p_value: f64,
}

/// Largest `n` accepted by the exact permutation test.
pub const EXACT_PERMUTATION_MAX_N: usize = 8;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Spearman's rank correlation between two orderings of the same items.
///
/// ρ is the Pearson correlation of rank positions. When the orderings agree
/// or are exactly reversed, ρ = ±1 and the p-value is the permutation bound
/// `2 / n!`.
pub fn spearman(rank_a: &[String], rank_b: &[String], method: PValueMethod) -> Result<Spearman> {
    let n = rank_a.len();
    if n < 3 {
        return Err(Error::invalid("Spearman correlation needs at least three items"));
    }
    let pos_b: BTreeMap<&str, usize> = rank_b.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let set_a: BTreeSet<&str> = rank_a.iter().map(String::as_str).collect();
    if rank_b.len() != n || pos_b.len() != n || set_a.len() != n || set_a.iter().any(|s| !pos_b.contains_key(s)) {
        return Err(Error::invalid("rankings must be permutations of the same items"));
    }
    let sum_d2: usize = rank_a
        .iter()
        .enumerate()
        .map(|(i, s)| i.abs_diff(pos_b[s.as_str()]).pow(2))
        .sum();
    let max_d2 = n * (n * n - 1) / 3;
    if sum_d2 == 0 || sum_d2 == max_d2 {
        return Ok(Spearman {
            rho: if sum_d2 == 0 { 1.0 } else { -1.0 },
            p_value: 2.0 / factorial(n),
        });
    }
    // Pearson of tie-free positions, as one exact integer ratio
    let rho = (max_d2 as i64 - 2 * sum_d2 as i64) as f64 / max_d2 as f64;
    let p_value = match method {
        PValueMethod::TApprox => {
            let df = (n - 2) as f64;
            let t = rho * (df / (1.0 - rho * rho)).sqrt();
            let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::invalid(e.to_string()))?;
            (2.0 * dist.sf(t.abs())).min(1.0)
        }
        PValueMethod::Exact => exact_p_value(n, sum_d2)?,
    };
    Ok(Spearman { rho, p_value })
}

/// Two-sided permutation p-value: the share of all n! orderings whose Σd² is
/// at least as far from its null mean as the observed one.
fn exact_p_value(n: usize, observed_d2: usize) -> Result<f64> {
    if n > EXACT_PERMUTATION_MAX_N {
        return Err(Error::invalid(format!(
            "exact Spearman p-value is limited to n ≤ {EXACT_PERMUTATION_MAX_N}"
        )));
    }
    // Σd² has null mean n(n²−1)/6; |ρ| grows with the distance from it.
    let center2 = n * (n * n - 1) / 3; // twice the mean, kept integral
    let dev = |d2: usize| (2 * d2).abs_diff(center2);
    let target = dev(observed_d2);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut hits = 0u64;
    let mut total = 0u64;
    permute(&mut perm, 0, &mut |p| {
        let d2: usize = p.iter().enumerate().map(|(i, &j)| i.abs_diff(j).pow(2)).sum();
        total += 1;
        if dev(d2) >= target {
            hits += 1;
        }
    });
    Ok(hits as f64 / total as f64)
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

/// One row of the survey comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankComparison {
    pub country: String,
    pub rank_survey: Vec<String>,
    pub rank_ours: Vec<String>,
    pub rho: f64,
    pub p_value: f64,
    /// `p_value < 0.05`.
    pub significant: bool,
}

/// Significance level used to flag rows.
pub const SIGNIFICANCE: f64 = 0.05;

/// For each country, ranks the others by cosine similarity in both spaces
/// and correlates the two rankings.
pub fn compare_with_survey(
    ours: &BTreeMap<String, Vec<f64>>,
    survey: &BTreeMap<String, Vec<f64>>,
    countries: &[String],
    method: PValueMethod,
) -> Result<Vec<RankComparison>> {
    let pick = |source: &BTreeMap<String, Vec<f64>>, what: &str| -> Result<BTreeMap<String, Vec<f64>>> {
        countries
            .iter()
            .map(|c| {
                source
                    .get(c)
                    .map(|v| (c.clone(), v.clone()))
                    .ok_or_else(|| Error::invalid(format!("country `{c}` missing from {what}")))
            })
            .collect()
    };
    let ours = pick(ours, "our vectors")?;
    let survey = pick(survey, "survey coordinates")?;
    countries
        .iter()
        .map(|c| {
            let rank_survey: Vec<String> = rank_by_cosine(c, &survey)?.into_iter().map(|(id, _)| id).collect();
            let rank_ours: Vec<String> = rank_by_cosine(c, &ours)?.into_iter().map(|(id, _)| id).collect();
            let s = spearman(&rank_survey, &rank_ours, method)?;
            Ok(RankComparison {
                country: c.clone(),
                rank_survey,
                rank_ours,
                rho: s.rho,
                p_value: s.p_value,
                significant: s.p_value < SIGNIFICANCE,
            })
        })
        .collect()
}

/// Reads `country,trad_secular,surv_selfexpr`.
pub fn parse_survey_csv(text: &str) -> Result<BTreeMap<String, Vec<f64>>> {
    #[derive(Deserialize)]
    struct Row {
        country: String,
        trad_secular: f64,
        surv_selfexpr: f64,
    }
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut out = BTreeMap::new();
    for row in reader.deserialize::<Row>() {
        let row = row?;
        if out.insert(row.country.clone(), vec![row.trad_secular, row.surv_selfexpr]).is_some() {
            return Err(Error::invalid(format!("country `{}` listed twice", row.country)));
        }
    }
    Ok(out)
}

/// Which part of a spatio-temporal signature feeds the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubset {
    /// Every feature.
    Full,
    /// Fast food subcategories, weekend slots, all four periods.
    FastFoodWeekend,
}

impl FeatureSubset {
    pub fn name(self) -> &'static str {
        match self {
            FeatureSubset::Full => "dataset1",
            FeatureSubset::FastFoodWeekend => "dataset2",
        }
    }

    /// Extracts the subset from a spatio-temporal vector.
    pub fn apply(self, vector: &[f64], taxonomy: &Taxonomy) -> Result<Vec<f64>> {
        if vector.len() != taxonomy.len() * SLOTS_PER_SUBCATEGORY {
            return Err(Error::invalid("expected a spatio-temporal vector"));
        }
        match self {
            FeatureSubset::Full => Ok(vector.to_vec()),
            FeatureSubset::FastFoodWeekend => {
                let range = taxonomy.class_range(ClassId::FastFood)?;
                let offset = DayGroup::Weekend as usize * 4;
                Ok(range
                    .flat_map(|s| {
                        let base = s * SLOTS_PER_SUBCATEGORY + offset;
                        vector[base..base + 4].iter().copied()
                    })
                    .collect())
            }
        }
    }
}

/// Writes the comparison table: `country` then `<dataset>_rho,<dataset>_p`
/// for each dataset. All datasets must cover the same countries in the same
/// order.
pub fn write_comparison_csv<W: Write>(out: W, datasets: &[(&str, &[RankComparison])]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["country".to_string()];
    for (name, _) in datasets {
        header.push(format!("{name}_rho"));
        header.push(format!("{name}_p"));
    }
    w.write_record(&header)?;
    let rows = datasets.first().map_or(0, |d| d.1.len());
    for i in 0..rows {
        let country = &datasets[0].1[i].country;
        let mut row = vec![country.clone()];
        for (_, rows) in datasets {
            let r = rows
                .get(i)
                .filter(|r| &r.country == country)
                .ok_or_else(|| Error::invalid("datasets cover different countries"))?;
            row.push(r.rho.to_string());
            row.push(r.p_value.to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
