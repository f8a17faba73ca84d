//! Laplacian construction, dense symmetric eigendecomposition, eigengap
//! analysis and embedding-dimension selection.
//!
//! The normalized Laplacian uses the symmetric entrywise form: unit diagonal
//! on buses with positive degree, `-w_ij / sqrt(d_i d_j)` off the diagonal.
//! Its spectrum lies in [0, 2] and is invariant to uniform weight scaling.
//! Isolated buses produce an all-zero row rather than an error; they surface
//! as extra zero eigenvalues and, downstream, as singleton islands.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::layers::{LayerKind, WeightLayer};

/// A Laplacian matrix together with the degrees it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianView {
    pub matrix: DMatrix<f64>,
    pub normalized: bool,
    pub source: LayerKind,
    pub degrees: DVector<f64>,
}

impl LaplacianView {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Builds the (optionally normalized) Laplacian of a weight layer.
pub fn laplacian(layer: &WeightLayer, normalized: bool) -> LaplacianView {
    let n = layer.n();
    let w = &layer.weights;
    let degrees = DVector::from_iterator(n, (0..n).map(|i| w.row(i).iter().sum::<f64>()));
    let mut matrix = DMatrix::zeros(n, n);
    if normalized {
        for i in 0..n {
            if degrees[i] > 0.0 {
                matrix[(i, i)] = 1.0;
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let weight = w[(i, j)];
                if weight != 0.0 && degrees[i] > 0.0 && degrees[j] > 0.0 {
                    let value = -weight / (degrees[i] * degrees[j]).sqrt();
                    matrix[(i, j)] = value;
                    matrix[(j, i)] = value;
                }
            }
        }
    } else {
        for i in 0..n {
            matrix[(i, i)] = degrees[i];
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let weight = w[(i, j)];
                if weight != 0.0 {
                    matrix[(i, j)] = -weight;
                    matrix[(j, i)] = -weight;
                }
            }
        }
    }
    LaplacianView {
        matrix,
        normalized,
        source: layer.kind,
        degrees,
    }
}

/// Full spectrum of a symmetric matrix: eigenvalues ascending, orthonormal
/// eigenvector columns, plus the eigengap tables.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors, same order as `eigenvalues`. Each column's
    /// largest-magnitude entry is positive (first such entry decides ties).
    pub eigenvectors: DMatrix<f64>,
    /// `gaps[i] = |lambda_{i+2} - lambda_{i+1}|` in 1-based eigenvalue terms.
    pub gaps: Vec<f64>,
    /// Gaps divided by the upper eigenvalue (0 when that eigenvalue is ~0).
    pub gaps_normalized: Vec<f64>,
    pub selected_k: Option<usize>,
}

impl SpectrumReport {
    /// 1-based access: `lambda(1)` is the smallest eigenvalue.
    pub fn lambda(&self, i: usize) -> f64 {
        self.eigenvalues[i - 1]
    }

    /// Normalized gap above the i-th eigenvalue (1-based).
    pub fn normalized_gap(&self, i: usize) -> f64 {
        self.gaps_normalized[i - 1]
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Relative residual bound enforced on every eigenpair.
pub const EIGEN_RESIDUAL_RTOL: f64 = 1e-8;

const EIGEN_MAX_SWEEPS: usize = 10_000;

/// Flips eigenvector signs so each column's largest-magnitude entry is
/// positive; among equal magnitudes the lowest row index decides.
pub(crate) fn fix_column_signs(vectors: &mut DMatrix<f64>) {
    for mut column in vectors.column_iter_mut() {
        let mut lead = 0.0_f64;
        let mut lead_value = 0.0_f64;
        for &value in column.iter() {
            if value.abs() > lead {
                lead = value.abs();
                lead_value = value;
            }
        }
        if lead_value < 0.0 {
            column.neg_mut();
        }
    }
}

/// Dense symmetric eigendecomposition with ascending eigenvalues and the
/// deterministic sign convention. Verifies the residual bound
/// `||A u - lambda u|| <= 1e-8 ||A||` for every pair.
pub fn symmetric_spectrum(matrix: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = matrix.nrows();
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let eigen = nalgebra::SymmetricEigen::try_new(matrix.clone(), f64::EPSILON, EIGEN_MAX_SWEEPS)
        .ok_or(Error::EigenConvergence)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[a].total_cmp(&eigen.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eigen.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (column, &i) in order.iter().enumerate() {
        eigenvectors.set_column(column, &eigen.eigenvectors.column(i));
    }
    fix_column_signs(&mut eigenvectors);

    let norm = eigenvalues
        .iter()
        .fold(0.0_f64, |acc, &v| acc.max(v.abs()));
    let tolerance = EIGEN_RESIDUAL_RTOL * norm + f64::EPSILON;
    let residual_matrix = matrix * &eigenvectors;
    for (i, &value) in eigenvalues.iter().enumerate() {
        let residual = (residual_matrix.column(i) - eigenvectors.column(i) * value).norm();
        if residual > tolerance {
            return Err(Error::EigenResidual {
                residual,
                tolerance,
            });
        }
    }
    Ok((eigenvalues, eigenvectors))
}

/// Eigendecomposition of a Laplacian plus its eigengap tables.
pub fn eigendecompose(lap: &LaplacianView) -> Result<SpectrumReport> {
    spectrum_of(&lap.matrix)
}

/// Spectrum report for an arbitrary symmetric matrix (the unified Laplacian
/// is symmetric but indefinite, which is fine here).
pub fn spectrum_of(matrix: &DMatrix<f64>) -> Result<SpectrumReport> {
    let (eigenvalues, eigenvectors) = symmetric_spectrum(matrix)?;
    let (gaps, gaps_normalized) = eigengaps(&eigenvalues)?;
    Ok(SpectrumReport {
        eigenvalues,
        eigenvectors,
        gaps,
        gaps_normalized,
        selected_k: None,
    })
}

/// Eigenvalue below which a normalized gap is treated as signal-free.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-12;

/// Gap tables for an ascending eigenvalue sequence. The normalized gap
/// divides by the upper eigenvalue of the pair and is defined as 0 when
/// that eigenvalue is itself ~0 (both eigenvalues vanish: no signal).
pub fn eigengaps(eigenvalues: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    for (i, pair) in eigenvalues.windows(2).enumerate() {
        if pair[1] < pair[0] {
            return Err(Error::UnsortedEigenvalues(i + 1));
        }
    }
    let gaps: Vec<f64> = eigenvalues.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let gaps_normalized = gaps
        .iter()
        .zip(eigenvalues.iter().skip(1))
        .map(|(&gap, &upper)| if upper <= ZERO_EIGENVALUE_TOL { 0.0 } else { gap / upper })
        .collect();
    Ok((gaps, gaps_normalized))
}

/// Picks the embedding dimension: the index i in `[k_min, k_max]` (1-based
/// eigenvalue indexing) maximizing the normalized eigengap, ties broken
/// toward the smaller index.
pub fn select_k(report: &SpectrumReport, k_min: usize, k_max: usize) -> Result<usize> {
    let n = report.n();
    if k_min < 1 || k_min > k_max || k_max >= n {
        return Err(Error::EmptySearchRange { k_min, k_max, n });
    }
    let mut best_index = k_min;
    let mut best_gap = report.normalized_gap(k_min);
    for i in (k_min + 1)..=k_max {
        let gap = report.normalized_gap(i);
        if gap > best_gap {
            best_gap = gap;
            best_index = i;
        }
    }
    Ok(best_index)
}

/// Number of eigenvalues below the zero threshold; equals the connected
/// component count of the underlying weight graph.
pub fn zero_eigenvalue_multiplicity(report: &SpectrumReport, threshold: f64) -> usize {
    report
        .eigenvalues
        .iter()
        .take_while(|&&v| v.abs() <= threshold)
        .count()
}
