//! Two-way k-means used to cut a node.
//!
//! Rows are encoded per node: numeric attributes are z-scored over the rows
//! being clustered, nominal attributes are one-hot encoded over the values
//! present, each slot scaled by `1/sqrt(categories)`. Identical vectors are
//! collapsed into weighted points and sorted, so the induced partition does
//! not depend on the order rows are given in.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{AttributeSelection, ColumnKind, Dataset};
use crate::rowset::RowSet;

pub const RESTARTS: u64 = 10;
pub const MAX_ITERATIONS: usize = 300;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClusterError {
    #[error("at least two rows are needed to cut, got {0}")]
    TooFewRows(usize),
    #[error("all rows are identical over the selected attributes")]
    AllIdentical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AttributeEncoding {
    Numeric { column: usize, mean: f64, std: f64 },
    /// `categories` are nominal codes present in the encoded rows, one slot each.
    Nominal { column: usize, categories: Vec<u32>, scale: f64 },
}

impl AttributeEncoding {
    fn width(&self) -> usize {
        match self {
            AttributeEncoding::Numeric { .. } => 1,
            AttributeEncoding::Nominal { categories, .. } => categories.len(),
        }
    }
}

/// Row-major feature vectors for a set of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: Vec<u32>,
    dim: usize,
    data: Vec<f64>,
    encoding: Vec<AttributeEncoding>,
}

impl FeatureMatrix {
    /// Builds a matrix from raw vectors; `rows[i]` identifies `vectors[i]`.
    pub fn from_vectors(rows: Vec<u32>, vectors: &[Vec<f64>]) -> Self {
        assert_eq!(rows.len(), vectors.len());
        let dim = vectors.first().map_or(0, Vec::len);
        assert!(vectors.iter().all(|v| v.len() == dim), "vectors must have equal length");
        Self { rows, dim, data: vectors.concat(), encoding: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn encoding(&self) -> &[AttributeEncoding] {
        &self.encoding
    }
}

/// Encodes the `extension` rows over the selected attributes.
pub fn encode(dataset: &Dataset, selection: &AttributeSelection, extension: &RowSet) -> FeatureMatrix {
    let n = extension.len();
    let mut encoding = Vec::new();
    for &column in selection.columns() {
        match dataset.column(column).kind {
            ColumnKind::Numeric => {
                let xs: Vec<f64> = extension.iter().map(|r| dataset.numeric(r, column).unwrap()).collect();
                let mean = xs.iter().sum::<f64>() / n.max(1) as f64;
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n.max(1) as f64;
                encoding.push(AttributeEncoding::Numeric { column, mean, std: var.sqrt() });
            }
            ColumnKind::Nominal => {
                let domain = dataset.column(column).nominal_values().map_or(0, <[String]>::len);
                let mut present = vec![false; domain];
                for r in extension.iter() {
                    present[dataset.nominal_code(r, column).unwrap() as usize] = true;
                }
                let categories: Vec<u32> =
                    (0..domain as u32).filter(|&c| present[c as usize]).collect();
                let scale = 1.0 / (categories.len().max(1) as f64).sqrt();
                encoding.push(AttributeEncoding::Nominal { column, categories, scale });
            }
            ColumnKind::Identifier => {}
        }
    }
    let dim = encoding.iter().map(AttributeEncoding::width).sum();
    let mut data = Vec::with_capacity(n * dim);
    for r in extension.iter() {
        for enc in &encoding {
            match enc {
                AttributeEncoding::Numeric { column, mean, std } => {
                    let x = dataset.numeric(r, *column).unwrap();
                    data.push(if *std > 0.0 { (x - mean) / std } else { 0.0 });
                }
                AttributeEncoding::Nominal { column, categories, scale } => {
                    let code = dataset.nominal_code(r, *column).unwrap();
                    data.extend(categories.iter().map(|&c| if c == code { *scale } else { 0.0 }));
                }
            }
        }
    }
    FeatureMatrix { rows: extension.as_slice().to_vec(), dim, data, encoding }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    /// Cluster index (0 or 1) for each matrix row, aligned with `FeatureMatrix::rows`.
    pub assignment: Vec<u8>,
    pub rows: Vec<u32>,
    pub centroids: [Vec<f64>; 2],
    /// Objective after each centroid update of the winning restart.
    pub wcss_trace: Vec<f64>,
    pub seed: u64,
    pub restart: u64,
}

impl ClusterResult {
    pub fn wcss(&self) -> f64 {
        *self.wcss_trace.last().expect("at least one iteration")
    }

    pub fn partition(&self) -> [RowSet; 2] {
        let pick = |k: u8| {
            self.rows
                .iter()
                .zip(&self.assignment)
                .filter(|(_, &a)| a == k)
                .map(|(&r, _)| r)
                .collect::<RowSet>()
        };
        [pick(0), pick(1)]
    }
}

/// Distinct vectors with multiplicities, in lexicographic order.
struct Points {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    /// For each matrix row, the index of its distinct point.
    owner: Vec<usize>,
}

impl Points {
    fn new(matrix: &FeatureMatrix) -> Self {
        let dim = matrix.dim();
        let mut order: Vec<usize> = (0..matrix.len()).collect();
        let cmp = |a: &usize, b: &usize| lex_cmp(matrix.vector(*a), matrix.vector(*b));
        order.sort_by(cmp);
        let mut coords = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut owner = vec![0; matrix.len()];
        let mut prev: Option<usize> = None;
        for &i in &order {
            if prev.is_none_or(|p| lex_cmp(matrix.vector(p), matrix.vector(i)) != Ordering::Equal) {
                coords.extend_from_slice(matrix.vector(i));
                weights.push(0.0);
            }
            *weights.last_mut().unwrap() += 1.0;
            owner[i] = weights.len() - 1;
            prev = Some(i);
        }
        Self { dim, coords, weights, owner }
    }

    fn len(&self) -> usize {
        self.weights.len()
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

struct Run {
    labels: Vec<u8>,
    centroids: [Vec<f64>; 2],
    trace: Vec<f64>,
}

fn seeded_rng(seed: u64, restart: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart);
    rng
}

/// Weighted index draw proportional to `weights`.
fn draw(rng: &mut ChaCha8Rng, weights: impl Iterator<Item = f64> + Clone) -> usize {
    let total: f64 = weights.clone().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last = i;
            if u < w {
                return i;
            }
            u -= w;
        }
    }
    last
}

fn kmeans_pp(points: &Points, rng: &mut ChaCha8Rng) -> [Vec<f64>; 2] {
    let first = draw(rng, points.weights.iter().copied());
    let c0 = points.point(first).to_vec();
    let d2 = (0..points.len()).map(|i| points.weights[i] * sq_dist(points.point(i), &c0));
    let second = draw(rng, d2);
    [c0, points.point(second).to_vec()]
}

fn assign(points: &Points, centroids: &[Vec<f64>; 2], labels: &mut [u8]) {
    for (i, label) in labels.iter_mut().enumerate() {
        let p = points.point(i);
        // ties go to cluster 0
        *label = u8::from(sq_dist(p, &centroids[1]) < sq_dist(p, &centroids[0]));
    }
}

fn update(points: &Points, labels: &mut [u8]) -> [Vec<f64>; 2] {
    loop {
        let mut sums = [vec![0.0; points.dim], vec![0.0; points.dim]];
        let mut mass = [0.0f64; 2];
        for (i, &k) in labels.iter().enumerate() {
            let w = points.weights[i];
            mass[k as usize] += w;
            for (s, x) in sums[k as usize].iter_mut().zip(points.point(i)) {
                *s += w * x;
            }
        }
        let Some(empty) = (0..2).find(|&k| mass[k] == 0.0) else {
            for (sum, m) in sums.iter_mut().zip(mass) {
                sum.iter_mut().for_each(|s| *s /= m);
            }
            return sums;
        };
        // move the point farthest from its centroid into the empty cluster
        let full = 1 - empty;
        let centroid: Vec<f64> = sums[full].iter().map(|s| s / mass[full]).collect();
        let far = (0..points.len())
            .max_by(|&a, &b| {
                sq_dist(points.point(a), &centroid)
                    .total_cmp(&sq_dist(points.point(b), &centroid))
                    .then(b.cmp(&a))
            })
            .expect("nonempty");
        labels[far] = empty as u8;
    }
}

fn objective(points: &Points, labels: &[u8], centroids: &[Vec<f64>; 2]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &k)| points.weights[i] * sq_dist(points.point(i), &centroids[k as usize]))
        .sum()
}

fn lloyd(points: &Points, seed: u64, restart: u64) -> Run {
    let mut rng = seeded_rng(seed, restart);
    let mut centroids = kmeans_pp(points, &mut rng);
    let mut labels = vec![0u8; points.len()];
    assign(points, &centroids, &mut labels);
    let mut trace = Vec::new();
    let mut next = labels.clone();
    for _ in 0..MAX_ITERATIONS {
        centroids = update(points, &mut labels);
        trace.push(objective(points, &labels, &centroids));
        assign(points, &centroids, &mut next);
        if next == labels {
            break;
        }
        labels.copy_from_slice(&next);
    }
    Run { labels, centroids, trace }
}

fn run_restarts(points: &Points, seed: u64) -> Vec<Run> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..RESTARTS).into_par_iter().map(|r| lloyd(points, seed, r)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..RESTARTS).map(|r| lloyd(points, seed, r)).collect()
    }
}

/// Splits the matrix rows into two clusters.
///
/// Best of [`RESTARTS`] k-means++ initialisations by final objective, ties to
/// the lowest restart index. Cluster 0 is the one holding the lowest row id.
pub fn kmeans2(matrix: &FeatureMatrix, seed: u64) -> Result<ClusterResult, ClusterError> {
    if matrix.len() < 2 {
        return Err(ClusterError::TooFewRows(matrix.len()));
    }
    let points = Points::new(matrix);
    if points.len() < 2 {
        return Err(ClusterError::AllIdentical);
    }
    let runs = run_restarts(&points, seed);
    let (restart, best) = runs
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            a.trace.last().unwrap().total_cmp(b.trace.last().unwrap()).then(ia.cmp(ib))
        })
        .expect("at least one restart");

    let mut assignment: Vec<u8> = points.owner.iter().map(|&p| best.labels[p]).collect();
    let mut centroids = best.centroids;
    let lowest = (0..matrix.len()).min_by_key(|&i| matrix.rows()[i]).expect("nonempty");
    if assignment[lowest] == 1 {
        assignment.iter_mut().for_each(|a| *a = 1 - *a);
        centroids.swap(0, 1);
    }
    Ok(ClusterResult {
        assignment,
        rows: matrix.rows().to_vec(),
        centroids,
        wcss_trace: best.trace,
        seed,
        restart: restart as u64,
    })
}
