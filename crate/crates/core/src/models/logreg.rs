//! Binomial logistic regression with L2 regularization, trained by damped
//! Newton iteration from a zero initialization. The objective is convex, so
//! retraining on identical data reproduces the same coefficients.

use serde::{Deserialize, Serialize};

use super::{Predictor, TrainConfig};
use crate::corpus::{AnnotatedDocument, CorpusStore, Label, Split};
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureRegistry, FeatureVector, LexiconSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub registry_version: String,
    /// Coefficient T_j per feature, in registry order, on the standardized
    /// scale.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Per-feature training mean and standard deviation (std 1 for
    /// zero-variance features).
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub config_digest: String,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + exp(-t)), stable for large |t|.
fn log1p_exp_neg(t: f64) -> f64 {
    if t > 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

/// Solve A x = b by Gaussian elimination with partial pivoting. A is
/// row-major n×n and is consumed.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::numeric("logreg/newton", "singular Hessian"));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Ok(x)
}

struct Problem {
    /// Standardized design matrix, one row per example.
    x: Vec<Vec<f64>>,
    /// Labels as ±1.
    y: Vec<f64>,
    l2: f64,
}

impl Problem {
    fn dims(&self) -> usize {
        self.x[0].len()
    }

    fn margin(&self, w: &[f64], b: f64, i: usize) -> f64 {
        self.y[i] * (dot(w, &self.x[i]) + b)
    }

    fn loss(&self, w: &[f64], b: f64) -> f64 {
        let n = self.x.len() as f64;
        let data: f64 = (0..self.x.len())
            .map(|i| log1p_exp_neg(self.margin(w, b, i)))
            .sum();
        data / n + 0.5 * self.l2 * dot(w, w)
    }

    /// Gradient over [w, b]; the intercept is unpenalized.
    fn gradient(&self, w: &[f64], b: f64) -> Vec<f64> {
        let d = self.dims();
        let n = self.x.len() as f64;
        let mut g = vec![0.0; d + 1];
        for i in 0..self.x.len() {
            let coef = -self.y[i] * sigmoid(-self.margin(w, b, i)) / n;
            for j in 0..d {
                g[j] += coef * self.x[i][j];
            }
            g[d] += coef;
        }
        for j in 0..d {
            g[j] += self.l2 * w[j];
        }
        g
    }

    fn hessian(&self, w: &[f64], b: f64) -> Vec<Vec<f64>> {
        let d = self.dims();
        let n = self.x.len() as f64;
        let mut h = vec![vec![0.0; d + 1]; d + 1];
        for i in 0..self.x.len() {
            let p = sigmoid(dot(w, &self.x[i]) + b);
            let s = p * (1.0 - p) / n;
            for j in 0..d {
                for k in j..d {
                    h[j][k] += s * self.x[i][j] * self.x[i][k];
                }
                h[j][d] += s * self.x[i][j];
            }
            h[d][d] += s;
        }
        for j in 0..d {
            h[j][j] += self.l2;
        }
        for j in 0..d + 1 {
            for k in 0..j {
                h[j][k] = h[k][j];
            }
        }
        h
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn standardization(features: &[FeatureVector]) -> (Vec<f64>, Vec<f64>) {
    let d = features[0].values.len();
    let n = features.len() as f64;
    let mut means = vec![0.0; d];
    for f in features {
        for j in 0..d {
            means[j] += f.values[j];
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut stds = vec![0.0; d];
    for f in features {
        for j in 0..d {
            let c = f.values[j] - means[j];
            stds[j] += c * c;
        }
    }
    for s in &mut stds {
        *s = (*s / n).sqrt();
        // Zero-variance features are excluded from scaling.
        if *s < 1e-12 {
            *s = 1.0;
        }
    }
    (means, stds)
}

fn build_problem(
    features: &[FeatureVector],
    labels: &[Label],
    l2: f64,
    means: &[f64],
    stds: &[f64],
) -> Problem {
    let x = features
        .iter()
        .map(|f| {
            f.values
                .iter()
                .zip(means.iter().zip(stds))
                .map(|(v, (m, s))| (v - m) / s)
                .collect()
        })
        .collect();
    let y = labels.iter().map(|l| l.sign()).collect();
    Problem { x, y, l2 }
}

/// Train on standardized features by damped Newton iteration from zero.
pub fn train_logreg(
    features: &[FeatureVector],
    labels: &[Label],
    config: &TrainConfig,
) -> Result<LogRegModel> {
    config.validate()?;
    if features.len() != labels.len() {
        return Err(Error::Contract(format!(
            "{} feature vectors but {} labels",
            features.len(),
            labels.len()
        )));
    }
    if features.is_empty() {
        return Err(Error::Training("no training examples".into()));
    }
    let version = &features[0].registry_version;
    for f in features {
        if f.registry_version != *version {
            return Err(Error::Contract("feature vectors mix registries".into()));
        }
        if f.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite feature value".into()));
        }
    }
    if !labels.contains(&Label::News) || !labels.contains(&Label::Opinion) {
        return Err(Error::Training(
            "training data must contain both classes".into(),
        ));
    }

    let (means, stds) = standardization(features);
    let problem = build_problem(features, labels, config.l2, &means, &stds);
    let d = problem.dims();
    let mut w = vec![0.0; d];
    let mut b = 0.0;

    for _ in 0..config.logreg_max_iter {
        let g = problem.gradient(&w, b);
        let gnorm = dot(&g, &g).sqrt();
        if gnorm < 1e-11 {
            break;
        }
        let h = problem.hessian(&w, b);
        let step = solve(h, g.clone())?;
        // Backtracking keeps the damped Newton step a descent step.
        let base_loss = problem.loss(&w, b);
        let mut alpha = 1.0;
        loop {
            let cand_w: Vec<f64> = w.iter().zip(&step).map(|(wi, si)| wi - alpha * si).collect();
            let cand_b = b - alpha * step[d];
            let cand_loss = problem.loss(&cand_w, cand_b);
            if cand_loss.is_finite() && cand_loss <= base_loss {
                w = cand_w;
                b = cand_b;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-12 {
                return Err(Error::numeric("logreg/newton", "line search stalled"));
            }
        }
    }

    if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
        return Err(Error::numeric("logreg/newton", "non-finite coefficients"));
    }
    Ok(LogRegModel {
        registry_version: version.clone(),
        coefficients: w,
        intercept: b,
        means,
        stds,
        config_digest: config.digest(),
    })
}

impl LogRegModel {
    pub fn model_id(&self) -> String {
        format!("logreg-{}-{}", self.registry_version, self.config_digest)
    }

    /// Predict from a feature vector. Returns the label and the
    /// (opinion, news) = (p, 1−p) score pair; a tie breaks to news.
    pub fn predict(&self, features: &FeatureVector) -> Result<(Label, (f64, f64))> {
        if features.registry_version != self.registry_version {
            return Err(Error::Contract(format!(
                "model registry {:?} but features from {:?}",
                self.registry_version, features.registry_version
            )));
        }
        let z: f64 = features
            .values
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .zip(&self.coefficients)
            .map(|((v, (m, s)), c)| c * (v - m) / s)
            .sum::<f64>()
            + self.intercept;
        let p = sigmoid(z);
        let label = if p > 0.5 { Label::Opinion } else { Label::News };
        Ok((label, (p, 1.0 - p)))
    }

    /// Norm of the regularized-loss gradient at the trained coefficients,
    /// for optimality checks.
    pub fn gradient_norm(&self, features: &[FeatureVector], labels: &[Label], l2: f64) -> f64 {
        let problem = build_problem(features, labels, l2, &self.means, &self.stds);
        let g = problem.gradient(&self.coefficients, self.intercept);
        dot(&g, &g).sqrt()
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Model(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::from_str(&json).map_err(|e| Error::Model(e.to_string()))
    }
}

/// Binds a logistic model to the registry and lexicons it needs to turn a
/// document into features.
pub struct LogRegPredictor<'a> {
    pub model: &'a LogRegModel,
    pub registry: &'a FeatureRegistry,
    pub lexicons: &'a LexiconSet,
}

impl Predictor for LogRegPredictor<'_> {
    fn model_id(&self) -> String {
        self.model.model_id()
    }

    fn predict_doc(&self, doc: &AnnotatedDocument) -> Result<(Label, (f64, f64))> {
        let features = extract_features(doc, self.registry, self.lexicons)?;
        self.model.predict(&features)
    }
}

/// Exhaustive grid search over logistic-regression hyperparameters,
/// selecting the configuration with the highest validation accuracy. Ties
/// break to the smallest l2, then to grid order. Recognized grid keys:
/// `l2`, `max_iter`.
pub fn grid_search_logreg(
    corpus: &CorpusStore,
    registry: &FeatureRegistry,
    lexicons: &LexiconSet,
    grid: &[(String, Vec<f64>)],
    base: &TrainConfig,
) -> Result<(LogRegModel, TrainConfig)> {
    if grid.is_empty() || grid.iter().any(|(_, v)| v.is_empty()) {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    for (key, _) in grid {
        if key != "l2" && key != "max_iter" {
            return Err(Error::Config(format!("unknown grid key {key:?}")));
        }
    }
    let val_docs = corpus.split_docs(Split::Validation)?;
    if val_docs.is_empty() {
        return Err(Error::Data("validation split is empty".into()));
    }
    let train_docs = corpus.split_docs(Split::Train)?;
    let features: Vec<FeatureVector> = train_docs
        .iter()
        .map(|d| extract_features(d, registry, lexicons))
        .collect::<Result<_>>()?;
    let labels: Vec<Label> = train_docs.iter().map(|d| d.label).collect();

    // Cartesian product in grid order, first key outermost.
    let mut combos: Vec<Vec<f64>> = vec![vec![]];
    for (_, values) in grid {
        combos = combos
            .iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push(*v);
                    c
                })
            })
            .collect();
    }

    let mut best: Option<(f64, TrainConfig, LogRegModel)> = None;
    for combo in &combos {
        let mut config = base.clone();
        for ((key, _), &value) in grid.iter().zip(combo) {
            match key.as_str() {
                "l2" => config.l2 = value,
                "max_iter" => config.logreg_max_iter = value as usize,
                _ => unreachable!(),
            }
        }
        let model = train_logreg(&features, &labels, &config)?;
        let predictor = LogRegPredictor {
            model: &model,
            registry,
            lexicons,
        };
        let acc = super::accuracy(&predictor, &val_docs)?;
        let better = match &best {
            None => true,
            Some((best_acc, best_config, _)) => {
                acc > *best_acc || (acc == *best_acc && config.l2 < best_config.l2)
            }
        };
        if better {
            best = Some((acc, config, model));
        }
    }
    let (_, config, model) = best.expect("grid is non-empty");
    Ok((model, config))
}
