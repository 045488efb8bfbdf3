//! Linear projection learning: PCA and spectral-regression discriminant
//! analysis (SRDA), plus a versioned text serialization for learned models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, sym_eigen, Mat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionMethod {
    Pca,
    Srda,
}

impl std::fmt::Display for ReductionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReductionMethod::Pca => write!(f, "pca"),
            ReductionMethod::Srda => write!(f, "srda"),
        }
    }
}

/// Requested output dimensionality.
///
/// `Auto` resolves to the smallest dimension retaining the configured
/// variance fraction for PCA, and to `n_classes - 1` for SRDA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OutDim {
    Fixed(usize),
    Auto(AutoTag),
}

/// Serde marker so `out_dim = "auto"` round-trips through config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoTag {
    Auto,
}

impl OutDim {
    pub const AUTO: OutDim = OutDim::Auto(AutoTag::Auto);
}

impl Default for OutDim {
    fn default() -> Self {
        OutDim::AUTO
    }
}

/// Configuration for fitting a projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    pub method: ReductionMethod,
    #[serde(default)]
    pub out_dim: OutDim,
    /// Ridge regularizer for SRDA; must be positive.
    #[serde(default = "default_ridge_lambda")]
    pub ridge_lambda: f64,
    /// Variance fraction the PCA auto rule must retain.
    #[serde(default = "default_variance_threshold")]
    pub pca_variance_threshold: f64,
}

fn default_ridge_lambda() -> f64 {
    0.01
}

fn default_variance_threshold() -> f64 {
    0.95
}

impl ReductionConfig {
    pub fn pca() -> Self {
        ReductionConfig {
            method: ReductionMethod::Pca,
            out_dim: OutDim::AUTO,
            ridge_lambda: default_ridge_lambda(),
            pca_variance_threshold: default_variance_threshold(),
        }
    }

    pub fn srda() -> Self {
        ReductionConfig {
            method: ReductionMethod::Srda,
            ..ReductionConfig::pca()
        }
    }

    /// Fit a projection on already-preprocessed training features.
    ///
    /// `labels` is consulted only by SRDA. For PCA a fixed `out_dim` is
    /// honored as-is; `auto` keeps the smallest dimension retaining the
    /// configured variance fraction, capped by the rank bound.
    pub fn fit(&self, train_features: &Mat, labels: &[u32]) -> Result<ProjectionModel> {
        match self.method {
            ReductionMethod::Pca => {
                let out_dim = match self.out_dim {
                    OutDim::Fixed(d) => d,
                    OutDim::Auto(_) => {
                        return fit_pca_auto(train_features, self.pca_variance_threshold)
                    }
                };
                fit_pca(train_features, out_dim)
            }
            ReductionMethod::Srda => {
                let model = fit_srda(train_features, labels, self.ridge_lambda)?;
                if let OutDim::Fixed(d) = self.out_dim {
                    if d != model.out_dim() {
                        return Err(Error::Config(format!(
                            "srda projects to n_classes - 1 = {} dimensions; requested {d}",
                            model.out_dim()
                        )));
                    }
                }
                Ok(model)
            }
        }
    }
}

/// A learned linear projection: `y = w (x - center)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionModel {
    w: Mat,
    center: Vec<f64>,
    method: ReductionMethod,
    /// Eigenvalues of the training covariance, descending; empty for SRDA.
    spectrum: Vec<f64>,
}

impl ProjectionModel {
    pub fn w(&self) -> &Mat {
        &self.w
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn method(&self) -> ReductionMethod {
        self.method
    }

    pub fn out_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn in_dim(&self) -> usize {
        self.w.ncols()
    }

    /// Covariance eigenvalues recorded at fit time (PCA only).
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// Identity model, mostly useful in tests.
    pub fn identity(dim: usize) -> Self {
        ProjectionModel {
            w: Mat::identity(dim),
            center: vec![0.0; dim],
            method: ReductionMethod::Pca,
            spectrum: Vec::new(),
        }
    }

    /// Serialize to the versioned text format.
    ///
    /// Layout: a `dispel-projection v1` header, then `method`, `in_dim`,
    /// `out_dim`, one `center` line, `out_dim` lines of `w` (row-major), and
    /// an optional `spectrum` line. Floats use the shortest representation
    /// that parses back to the identical value.
    pub fn to_text(&self) -> String {
        let fmt_vec = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = String::new();
        out.push_str("dispel-projection v1\n");
        out.push_str(&format!("method {}\n", self.method));
        out.push_str(&format!("in_dim {}\n", self.in_dim()));
        out.push_str(&format!("out_dim {}\n", self.out_dim()));
        out.push_str(&format!("center {}\n", fmt_vec(&self.center)));
        for i in 0..self.w.nrows() {
            out.push_str(&format!("w {}\n", fmt_vec(self.w.row(i))));
        }
        if !self.spectrum.is_empty() {
            out.push_str(&format!("spectrum {}\n", fmt_vec(&self.spectrum)));
        }
        out
    }

    /// Parse the format produced by [`ProjectionModel::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        if header != "dispel-projection v1" {
            return Err(Error::Schema(format!(
                "unsupported projection model header {header:?}"
            )));
        }
        let mut method = None;
        let mut in_dim = None;
        let mut out_dim = None;
        let mut center = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut spectrum = Vec::new();

        let parse_vec = |s: &str| -> Result<Vec<f64>> {
            s.split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|e| Error::Schema(format!("bad float {t:?}: {e}")))
                })
                .collect()
        };

        for line in lines {
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "method" => {
                    method = Some(match rest {
                        "pca" => ReductionMethod::Pca,
                        "srda" => ReductionMethod::Srda,
                        other => return Err(Error::Schema(format!("unknown method {other:?}"))),
                    })
                }
                "in_dim" => {
                    in_dim = Some(
                        rest.parse::<usize>()
                            .map_err(|e| Error::Schema(format!("bad in_dim {rest:?}: {e}")))?,
                    )
                }
                "out_dim" => {
                    out_dim = Some(
                        rest.parse::<usize>()
                            .map_err(|e| Error::Schema(format!("bad out_dim {rest:?}: {e}")))?,
                    )
                }
                "center" => center = Some(parse_vec(rest)?),
                "w" => rows.push(parse_vec(rest)?),
                "spectrum" => spectrum = parse_vec(rest)?,
                "" => {}
                other => return Err(Error::Schema(format!("unknown field {other:?}"))),
            }
        }

        let method = method.ok_or_else(|| Error::Schema("missing method".into()))?;
        let in_dim = in_dim.ok_or_else(|| Error::Schema("missing in_dim".into()))?;
        let out_dim = out_dim.ok_or_else(|| Error::Schema("missing out_dim".into()))?;
        let center = center.ok_or_else(|| Error::Schema("missing center".into()))?;
        if center.len() != in_dim || rows.len() != out_dim || rows.iter().any(|r| r.len() != in_dim)
        {
            return Err(Error::Schema(
                "projection model dimensions do not match its header".into(),
            ));
        }
        Ok(ProjectionModel {
            w: Mat::from_rows(&rows)?,
            center,
            method,
            spectrum,
        })
    }
}

/// Center the rows of `x` by their column means; returns (centered, means).
fn center_columns(x: &Mat) -> (Mat, Vec<f64>) {
    let means = x.col_means();
    let mut c = x.clone();
    for i in 0..c.nrows() {
        let row = c.row_mut(i);
        for (v, m) in row.iter_mut().zip(&means) {
            *v -= m;
        }
    }
    (c, means)
}

/// Principal component analysis with a fixed output dimension.
///
/// Rows of the learned matrix are the top eigenvectors of the sample
/// covariance in descending eigenvalue order, each sign-fixed so its
/// largest-magnitude entry is positive.
pub fn fit_pca(train_features: &Mat, out_dim: usize) -> Result<ProjectionModel> {
    let (n, m) = (train_features.nrows(), train_features.ncols());
    if n < 2 {
        return Err(Error::Shape(format!(
            "pca needs at least 2 samples, got {n}"
        )));
    }
    let rank_bound = m.min(n - 1);
    if out_dim == 0 || out_dim > rank_bound {
        return Err(Error::Dimension(format!(
            "pca out_dim {out_dim} outside 1..={rank_bound} (m = {m}, n = {n})"
        )));
    }
    let (centered, center) = center_columns(train_features);
    let cov = sample_covariance_from_centered(&centered);
    let (eigenvalues, eigenvectors) = sym_eigen(&cov)?;
    let w = Mat::from_fn(out_dim, m, |i, j| eigenvectors[(i, j)]);
    Ok(ProjectionModel {
        w,
        center,
        method: ReductionMethod::Pca,
        spectrum: eigenvalues,
    })
}

/// PCA keeping the smallest dimension whose eigenvalues retain at least
/// `variance_threshold` of the total variance (capped by the rank bound).
pub fn fit_pca_auto(train_features: &Mat, variance_threshold: f64) -> Result<ProjectionModel> {
    if !(variance_threshold > 0.0 && variance_threshold <= 1.0) {
        return Err(Error::Config(format!(
            "variance threshold must be in (0, 1], got {variance_threshold}"
        )));
    }
    let (n, m) = (train_features.nrows(), train_features.ncols());
    if n < 2 {
        return Err(Error::Shape(format!(
            "pca needs at least 2 samples, got {n}"
        )));
    }
    let rank_bound = m.min(n - 1);
    let full = fit_pca(train_features, rank_bound)?;
    let total: f64 = full.spectrum.iter().filter(|v| **v > 0.0).sum();
    let mut out_dim = rank_bound.max(1);
    if total > 0.0 {
        let mut acc = 0.0;
        for (i, v) in full.spectrum.iter().take(rank_bound).enumerate() {
            acc += v.max(0.0);
            if acc / total >= variance_threshold {
                out_dim = i + 1;
                break;
            }
        }
    } else {
        out_dim = 1;
    }
    let w = Mat::from_fn(out_dim, m, |i, j| full.w[(i, j)]);
    Ok(ProjectionModel {
        w,
        center: full.center,
        method: ReductionMethod::Pca,
        spectrum: full.spectrum,
    })
}

fn sample_covariance_from_centered(centered: &Mat) -> Mat {
    let n = centered.nrows();
    let m = centered.ncols();
    let mut cov = Mat::zeros(m, m);
    for row in centered.iter_rows() {
        for a in 0..m {
            let ra = row[a];
            for b in a..m {
                cov[(a, b)] += ra * row[b];
            }
        }
    }
    let denom = (n - 1) as f64;
    for a in 0..m {
        for b in a..m {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    cov
}

/// Spectral-regression discriminant analysis.
///
/// Class-indicator responses are Gram-Schmidt orthonormalized against the
/// all-ones vector (the dependent final indicator vanishes and is dropped),
/// then each projection row solves the ridge system
/// `(Xc' Xc + lambda I) w = Xc' y` on centered features. The output
/// dimension is always `n_classes - 1`.
pub fn fit_srda(
    train_features: &Mat,
    labels: &[u32],
    ridge_lambda: f64,
) -> Result<ProjectionModel> {
    let n = train_features.nrows();
    if n != labels.len() {
        return Err(Error::Shape(format!(
            "{} feature rows but {} labels",
            n,
            labels.len()
        )));
    }
    if n < 2 {
        return Err(Error::Shape(format!(
            "srda needs at least 2 samples, got {n}"
        )));
    }
    if ridge_lambda.is_nan() || ridge_lambda <= 0.0 {
        return Err(Error::Config(format!(
            "ridge_lambda must be positive, got {ridge_lambda}"
        )));
    }
    let mut present: Vec<u32> = labels.to_vec();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(Error::Degenerate(format!(
            "srda needs at least 2 classes, found {}",
            present.len()
        )));
    }

    // Orthonormal responses from class indicators, seeded with ones.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(present.len());
    let ones = vec![1.0 / (n as f64).sqrt(); n];
    basis.push(ones);
    let mut responses: Vec<Vec<f64>> = Vec::with_capacity(present.len() - 1);
    for &class in &present {
        let mut y: Vec<f64> = labels
            .iter()
            .map(|&l| if l == class { 1.0 } else { 0.0 })
            .collect();
        for b in &basis {
            let dot: f64 = y.iter().zip(b).map(|(a, c)| a * c).sum();
            for (v, c) in y.iter_mut().zip(b) {
                *v -= dot * c;
            }
        }
        let norm: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-8 {
            continue; // dependent indicator, dropped by construction
        }
        for v in &mut y {
            *v /= norm;
        }
        basis.push(y.clone());
        responses.push(y);
    }
    debug_assert_eq!(responses.len(), present.len() - 1);

    let (centered, center) = center_columns(train_features);
    let m = centered.ncols();
    let mut gram = sample_covariance_from_centered(&centered);
    // Work with Xc' Xc + lambda I rather than the covariance.
    let scale = (n - 1) as f64;
    for a in 0..m {
        for b in 0..m {
            gram[(a, b)] *= scale;
        }
    }
    for a in 0..m {
        gram[(a, a)] += ridge_lambda;
    }

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(responses.len());
    for y in &responses {
        let mut rhs = vec![0.0; m];
        for (row, yv) in centered.iter_rows().zip(y) {
            for (r, v) in rhs.iter_mut().zip(row) {
                *r += v * yv;
            }
        }
        let w = cholesky_solve(&gram, &rhs).map_err(|e| e.at_stage("srda ridge solve"))?;
        rows.push(w);
    }

    Ok(ProjectionModel {
        w: Mat::from_rows(&rows)?,
        center,
        method: ReductionMethod::Srda,
        spectrum: Vec::new(),
    })
}

/// Apply a learned projection: each output row is `w (x - center)`.
pub fn project(model: &ProjectionModel, features: &Mat) -> Result<Mat> {
    if features.ncols() != model.in_dim() {
        return Err(Error::Shape(format!(
            "features have {} columns, model expects {}",
            features.ncols(),
            model.in_dim()
        )));
    }
    let out = Mat::from_fn(features.nrows(), model.out_dim(), |i, r| {
        let row = features.row(i);
        let wr = model.w.row(r);
        let mut acc = 0.0;
        for k in 0..model.in_dim() {
            acc += wr[k] * (row[k] - model.center[k]);
        }
        acc
    });
    Ok(out)
}
