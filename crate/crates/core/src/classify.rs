//! Shape classification: standardization, PCA, random-subspace KNN ensemble,
//! stratified cross-validation and baseline comparisons.
//!
//! Everything here works in `f64`. The eigensolver and the reconstruction
//! identity checks need double precision regardless of the simulation scalar.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::procedure::Shape;

pub const MODEL_FORMAT: &str = "rollsense-model";
pub const MODEL_VERSION: u32 = 1;

/// Per-column affine scaling to zero mean and unit sample variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Sample standard deviation; columns without variance keep scale 1.
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let (n, d) = shape_of(rows)?;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let denom = (n.max(2) - 1) as f64;
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / denom).sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

fn shape_of(rows: &[Vec<f64>]) -> Result<(usize, usize)> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if n == 0 || d == 0 {
        return Err(Error::DegenerateData("empty feature matrix".into()));
    }
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::DegenerateData("ragged feature matrix".into()));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("non-finite feature value".into()));
    }
    Ok((n, d))
}

/// Principal axes of a data set, sorted by decreasing variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Retained axes, one unit-length row per component.
    pub components: Vec<Vec<f64>>,
    /// Every eigenvalue of the sample covariance, descending, clamped at 0.
    pub eigenvalues: Vec<f64>,
    pub variance_target: f64,
}

impl Pca {
    /// Fits on `rows` and keeps the fewest components whose cumulative share of
    /// the variance reaches `variance_target`.
    pub fn fit(rows: &[Vec<f64>], variance_target: f64) -> Result<Self> {
        let (n, d) = shape_of(rows)?;
        if n < 3 {
            return Err(Error::DegenerateData(format!("PCA needs at least 3 rows, got {n}")));
        }
        if !(variance_target > 0.0 && variance_target <= 1.0) {
            return Err(Error::InvalidConfig(format!("variance target {variance_target} outside (0, 1]")));
        }
        let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
        let x = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
        let cov = (x.transpose() * &x) / (n - 1) as f64;
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
        let total: f64 = eigenvalues.iter().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateData("all rows are identical".into()));
        }
        let m = retained_count(&eigenvalues, variance_target);
        let components = order[..m]
            .iter()
            .map(|&k| {
                let v = eig.eigenvectors.column(k);
                // fix the sign so the largest-magnitude entry is positive
                let pivot = (0..d).fold(0, |best, j| if v[j].abs() > v[best].abs() { j } else { best });
                let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
                v.iter().map(|x| x * sign).collect()
            })
            .collect();
        Ok(Self {
            mean,
            components,
            eigenvalues,
            variance_target,
        })
    }

    pub fn retained(&self) -> usize {
        self.components.len()
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    /// Cumulative explained-variance ratio after each component.
    pub fn cumulative_ratio(&self) -> Vec<f64> {
        let total: f64 = self.eigenvalues.iter().sum();
        self.eigenvalues
            .iter()
            .scan(0.0, |acc, l| {
                *acc += l;
                Some(*acc / total)
            })
            .collect()
    }

    pub fn project(&self, row: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().zip(row).zip(&self.mean).map(|((a, x), m)| a * (x - m)).sum())
            .collect()
    }

    pub fn reconstruct(&self, scores: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, s) in self.components.iter().zip(scores) {
            for (o, a) in out.iter_mut().zip(c) {
                *o += a * s;
            }
        }
        out
    }

    /// Summed squared reconstruction residual over `rows`, divided by `n - 1`.
    /// On the fitting data this equals the sum of the discarded eigenvalues.
    pub fn reconstruction_error(&self, rows: &[Vec<f64>]) -> f64 {
        let sq: f64 = rows
            .iter()
            .map(|r| {
                let back = self.reconstruct(&self.project(r));
                r.iter().zip(&back).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            })
            .sum();
        sq / (rows.len().max(2) - 1) as f64
    }

    pub fn discarded_variance(&self) -> f64 {
        self.eigenvalues[self.retained()..].iter().sum()
    }
}

/// Smallest `m` whose leading eigenvalues reach `target` of the total.
pub fn retained_count(sorted_eigenvalues: &[f64], target: f64) -> usize {
    let total: f64 = sorted_eigenvalues.iter().sum();
    // tolerate summation rounding on exactly low-rank data
    let goal = target * total * (1.0 - 1e-12);
    let mut acc = 0.0;
    for (i, l) in sorted_eigenvalues.iter().enumerate() {
        acc += l;
        if acc >= goal {
            return i + 1;
        }
    }
    sorted_eigenvalues.len()
}

fn sq_dist(a: &[f64], b: &[f64], dims: &[usize]) -> f64 {
    dims.iter().map(|&j| (a[j] - b[j]) * (a[j] - b[j])).sum()
}

/// Majority label of the `k` nearest training points over `dims`.
/// Distance ties go to the lower training index, vote ties to the lower class.
fn knn_vote(train: &[Vec<f64>], labels: &[usize], n_classes: usize, k: usize, dims: &[usize], x: &[f64]) -> usize {
    let mut d: Vec<(f64, usize)> = train.iter().enumerate().map(|(i, t)| (sq_dist(t, x, dims), i)).collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut votes = vec![0usize; n_classes];
    for &(_, i) in d.iter().take(k.max(1)) {
        votes[labels[i]] += 1;
    }
    argmax_lowest(&votes)
}

fn argmax_lowest(votes: &[usize]) -> usize {
    votes
        .iter()
        .enumerate()
        .fold(0, |best, (c, &v)| if v > votes[best] { c } else { best })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub learners: usize,
    pub k: usize,
    /// Features per learner; `None` uses half the input dimension, rounded up.
    pub subspace_dim: Option<usize>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            learners: 30,
            k: 1,
            subspace_dim: None,
        }
    }
}

/// Random-subspace ensemble of nearest-neighbour learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceKnn {
    pub k: usize,
    pub n_classes: usize,
    /// Sorted feature subset of each learner.
    pub subsets: Vec<Vec<usize>>,
    pub train: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl SubspaceKnn {
    pub fn fit(train: Vec<Vec<f64>>, labels: Vec<usize>, n_classes: usize, cfg: &EnsembleConfig, seed: u64) -> Result<Self> {
        let (n, d) = shape_of(&train)?;
        if labels.len() != n {
            return Err(Error::DegenerateData(format!("{} labels for {n} rows", labels.len())));
        }
        check_classes(&labels, n_classes)?;
        let size = cfg.subspace_dim.unwrap_or(d.div_ceil(2)).clamp(1, d);
        if cfg.learners == 0 || cfg.k == 0 {
            return Err(Error::InvalidConfig(format!("invalid ensemble settings: {cfg:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let subsets = (0..cfg.learners)
            .map(|_| {
                let mut s = rand::seq::index::sample(&mut rng, d, size).into_vec();
                s.sort_unstable();
                s
            })
            .collect();
        Ok(Self {
            k: cfg.k,
            n_classes,
            subsets,
            train,
            labels,
        })
    }

    /// Vote count per class; always sums to the number of learners.
    pub fn votes(&self, x: &[f64]) -> Vec<usize> {
        use rayon::prelude::*;
        let picks: Vec<usize> = self
            .subsets
            .par_iter()
            .map(|dims| knn_vote(&self.train, &self.labels, self.n_classes, self.k, dims, x))
            .collect();
        let mut votes = vec![0; self.n_classes];
        for c in picks {
            votes[c] += 1;
        }
        votes
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax_lowest(&self.votes(x))
    }
}

fn check_classes(labels: &[usize], n_classes: usize) -> Result<()> {
    if let Some(&bad) = labels.iter().find(|&&c| c >= n_classes) {
        return Err(Error::DegenerateData(format!("label {bad} outside {n_classes} classes")));
    }
    let present = class_counts(labels, n_classes).iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::SingleClass(present));
    }
    Ok(())
}

fn class_counts(labels: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &c in labels {
        counts[c] += 1;
    }
    counts
}

/// Gaussian linear discriminant with a shared, ridge-regularised covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lda {
    /// Per class: weight vector and bias of the linear score.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl Lda {
    pub fn fit(train: &[Vec<f64>], labels: &[usize], n_classes: usize, ridge: f64) -> Result<Self> {
        let (n, d) = shape_of(train)?;
        check_classes(labels, n_classes)?;
        let counts = class_counts(labels, n_classes);
        let mut means = vec![DVector::<f64>::zeros(d); n_classes];
        for (r, &c) in train.iter().zip(labels) {
            means[c] += DVector::from_column_slice(r);
        }
        for (m, &c) in means.iter_mut().zip(&counts) {
            if c > 0 {
                *m /= c as f64;
            }
        }
        let mut cov = DMatrix::<f64>::zeros(d, d);
        for (r, &c) in train.iter().zip(labels) {
            let dv = DVector::from_column_slice(r) - &means[c];
            cov += &dv * dv.transpose();
        }
        let present = counts.iter().filter(|&&c| c > 0).count();
        cov /= (n.saturating_sub(present)).max(1) as f64;
        let level = (cov.trace() / d as f64).max(f64::MIN_POSITIVE);
        for i in 0..d {
            cov[(i, i)] += ridge * level;
        }
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::DegenerateData("pooled covariance is not positive definite".into()))?;
        let mut weights = Vec::with_capacity(n_classes);
        let mut bias = Vec::with_capacity(n_classes);
        for (m, &c) in means.iter().zip(&counts) {
            if c == 0 {
                weights.push(vec![0.0; d]);
                bias.push(f64::NEG_INFINITY);
                continue;
            }
            let w = chol.solve(m);
            bias.push(-0.5 * m.dot(&w) + (c as f64 / n as f64).ln());
            weights.push(w.iter().copied().collect());
        }
        Ok(Self { weights, bias })
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let scores: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + b)
            .collect();
        scores
            .iter()
            .enumerate()
            .fold(0, |best, (c, &s)| if s > scores[best] { c } else { best })
    }
}

/// Which learner sits on top of the shared standardize + PCA front end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    SubspaceKnn(EnsembleConfig),
    /// Plain nearest-neighbour vote over every retained component.
    Knn { k: usize },
    Lda { ridge: f64 },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::SubspaceKnn(_) => "subspace KNN ensemble",
            Method::Knn { .. } => "KNN",
            Method::Lda { .. } => "linear discriminant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierConfig {
    pub variance_target: f64,
    pub ensemble: EnsembleConfig,
    pub folds: usize,
    pub lda_ridge: f64,
    pub permutation_repeats: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            variance_target: 0.95,
            ensemble: EnsembleConfig::default(),
            folds: 3,
            lda_ridge: 1e-3,
            permutation_repeats: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Learner {
    SubspaceKnn(SubspaceKnn),
    Knn { k: usize, train: Vec<Vec<f64>>, labels: Vec<usize>, n_classes: usize },
    Lda(Lda),
}

/// Standardizer, PCA basis and learner, as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format: String,
    pub version: u32,
    pub classes: Vec<Shape>,
    pub feature_names: Vec<String>,
    pub seed: u64,
    pub method: Method,
    pub scaler: Standardizer,
    pub pca: Pca,
    pub learner: Learner,
}

impl TrainedModel {
    pub fn fit(
        rows: &[Vec<f64>],
        labels: &[usize],
        feature_names: Vec<String>,
        method: Method,
        variance_target: f64,
        seed: u64,
    ) -> Result<Self> {
        let classes = Shape::ALL.to_vec();
        let n_classes = classes.len();
        check_classes(labels, n_classes)?;
        let scaler = Standardizer::fit(rows)?;
        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| scaler.transform(r)).collect();
        let pca = Pca::fit(&scaled, variance_target)?;
        let z: Vec<Vec<f64>> = scaled.iter().map(|r| pca.project(r)).collect();
        let learner = match method {
            Method::SubspaceKnn(cfg) => Learner::SubspaceKnn(SubspaceKnn::fit(z, labels.to_vec(), n_classes, &cfg, seed)?),
            Method::Knn { k } => Learner::Knn {
                k: k.max(1),
                train: z,
                labels: labels.to_vec(),
                n_classes,
            },
            Method::Lda { ridge } => Learner::Lda(Lda::fit(&z, labels, n_classes, ridge)?),
        };
        Ok(Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            classes,
            feature_names,
            seed,
            method,
            scaler,
            pca,
            learner,
        })
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        let z = self.pca.project(&self.scaler.transform(row));
        match &self.learner {
            Learner::SubspaceKnn(m) => m.predict(&z),
            Learner::Knn { k, train, labels, n_classes } => {
                let dims: Vec<usize> = (0..z.len()).collect();
                knn_vote(train, labels, *n_classes, *k, &dims, &z)
            }
            Learner::Lda(m) => m.predict(&z),
        }
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Vec<usize> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    /// Scores the model on a labelled set as a single fold.
    pub fn evaluate(&self, rows: &[Vec<f64>], labels: &[usize]) -> EvalReport {
        let mut report = EvalReport::empty(self.method.name(), &self.classes);
        report.add_fold(&self.predict_all(rows), labels, self.pca.retained());
        report
    }
}

/// Stratified fold assignment: each class is shuffled with the seeded
/// generator (classes in index order) and dealt round-robin.
pub fn stratified_folds(labels: &[usize], n_classes: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 folds, got {folds}")));
    }
    check_classes(labels, n_classes)?;
    let counts = class_counts(labels, n_classes);
    if let Some((class, &count)) = counts.iter().enumerate().find(|(_, &c)| c > 0 && c < folds) {
        return Err(Error::InsufficientClassSamples { class, count, folds });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0; labels.len()];
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for (pos, i) in members.into_iter().enumerate() {
            fold_of[i] = pos % folds;
        }
    }
    Ok(fold_of)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub classes: Vec<Shape>,
    pub fold_accuracies: Vec<f64>,
    /// Components kept by the PCA fitted on each training split.
    pub fold_components: Vec<usize>,
    /// Rows are the true class, columns the predicted class.
    pub confusion: Vec<Vec<usize>>,
}

impl EvalReport {
    fn empty(method: &str, classes: &[Shape]) -> Self {
        Self {
            method: method.into(),
            classes: classes.to_vec(),
            fold_accuracies: Vec::new(),
            fold_components: Vec::new(),
            confusion: vec![vec![0; classes.len()]; classes.len()],
        }
    }

    fn add_fold(&mut self, predicted: &[usize], truth: &[usize], components: usize) {
        let mut hit = 0;
        for (&p, &t) in predicted.iter().zip(truth) {
            self.confusion[t][p] += 1;
            hit += usize::from(p == t);
        }
        self.fold_accuracies.push(hit as f64 / truth.len().max(1) as f64);
        self.fold_components.push(components);
    }

    pub fn mean_fold_accuracy(&self) -> f64 {
        self.fold_accuracies.iter().sum::<f64>() / self.fold_accuracies.len().max(1) as f64
    }

    /// Pooled accuracy: confusion trace over total.
    pub fn accuracy(&self) -> f64 {
        let total: usize = self.confusion.iter().flatten().sum();
        let diag: usize = (0..self.confusion.len()).map(|i| self.confusion[i][i]).sum();
        diag as f64 / total.max(1) as f64
    }

    pub fn class_totals(&self) -> Vec<usize> {
        self.confusion.iter().map(|r| r.iter().sum()).collect()
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "method: {}", self.method)?;
        let folds: Vec<String> = self.fold_accuracies.iter().map(|a| format!("{:.1}%", 100.0 * a)).collect();
        writeln!(f, "fold accuracy: {}", folds.join("  "))?;
        writeln!(f, "fold components: {:?}", self.fold_components)?;
        writeln!(f, "accuracy: {:.1}%", 100.0 * self.accuracy())?;
        writeln!(f, "confusion (rows true, columns predicted):")?;
        write!(f, "{:>10}", "")?;
        for c in &self.classes {
            write!(f, "{:>9}", c.name())?;
        }
        writeln!(f)?;
        for (c, row) in self.classes.iter().zip(&self.confusion) {
            write!(f, "{:>10}", c.name())?;
            for v in row {
                write!(f, "{v:>9}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Seed of the learner fitted for `fold` during cross-validation.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 + fold as u64);
    rng.random()
}

/// Stratified k-fold cross-validation. Scaling and PCA are refitted on every
/// training split, so held-out rows never shape the transform.
pub fn cross_validate(
    rows: &[Vec<f64>],
    labels: &[usize],
    method: Method,
    cfg: &ClassifierConfig,
    seed: u64,
) -> Result<EvalReport> {
    let classes = Shape::ALL;
    let fold_of = stratified_folds(labels, classes.len(), cfg.folds, seed)?;
    let mut report = EvalReport::empty(method.name(), &classes);
    for fold in 0..cfg.folds {
        let pick = |test: bool| -> (Vec<Vec<f64>>, Vec<usize>) {
            (0..rows.len())
                .filter(|&i| (fold_of[i] == fold) == test)
                .map(|i| (rows[i].clone(), labels[i]))
                .unzip()
        };
        let (train, train_y) = pick(false);
        let (test, test_y) = pick(true);
        let model = TrainedModel::fit(&train, &train_y, Vec::new(), method, cfg.variance_target, fold_seed(seed, fold))?;
        report.add_fold(&model.predict_all(&test), &test_y, model.pca.retained());
    }
    Ok(report)
}

/// One row of the method comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    pub accuracy: f64,
    pub mean_fold_accuracy: f64,
}

/// Runs the ensemble and both baselines with identical folds and preprocessing.
pub fn compare_methods(rows: &[Vec<f64>], labels: &[usize], cfg: &ClassifierConfig, seed: u64) -> Result<Vec<(Method, EvalReport)>> {
    let methods = [
        Method::Lda { ridge: cfg.lda_ridge },
        Method::Knn { k: cfg.ensemble.k },
        Method::SubspaceKnn(cfg.ensemble),
    ];
    methods
        .into_iter()
        .map(|m| cross_validate(rows, labels, m, cfg, seed).map(|r| (m, r)))
        .collect()
}

pub fn comparison_table(results: &[(Method, EvalReport)]) -> Vec<ComparisonRow> {
    results
        .iter()
        .map(|(m, r)| ComparisonRow {
            method: m.name().into(),
            accuracy: r.accuracy(),
            mean_fold_accuracy: r.mean_fold_accuracy(),
        })
        .collect()
}

/// Cross-validated accuracy with labels shuffled, once per repeat.
pub fn permutation_baseline(
    rows: &[Vec<f64>],
    labels: &[usize],
    method: Method,
    cfg: &ClassifierConfig,
    seed: u64,
    repeats: usize,
) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    (0..repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1000 + r as u64);
            let mut shuffled = labels.to_vec();
            shuffled.shuffle(&mut rng);
            cross_validate(rows, &shuffled, method, cfg, rng.random()).map(|rep| rep.accuracy())
        })
        .collect()
}
