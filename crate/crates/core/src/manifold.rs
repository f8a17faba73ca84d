//! Subspace fusion of per-layer spectral embeddings into one unified
//! Laplacian. Each layer's K-dimensional bottom eigenspace is a point on the
//! Grassmann manifold G(K, N); the unified matrix sums the Laplacians and
//! subtracts alpha times each layer's bottom-eigenspace projector, so its own
//! bottom eigenspace is pulled toward a subspace close to all of them.
//!
//! Only the span of each embedding is meaningful: eigenvector sign is fixed
//! deterministically, but within-eigenspace rotation for repeated eigenvalues
//! is left free, so subspace comparisons must use principal angles rather
//! than entrywise checks.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::layers::LayerKind;
use crate::spectral::{symmetric_spectrum, LaplacianView, SpectrumReport};

/// Per-layer spectral embeddings sharing one N and K.
#[derive(Debug, Clone)]
pub struct EmbeddingSet {
    pub embeddings: Vec<DMatrix<f64>>,
    pub k: usize,
    pub layer_kinds: Vec<LayerKind>,
}

/// The fused symmetric (generally indefinite) matrix.
#[derive(Debug, Clone)]
pub struct UnifiedLaplacian {
    pub matrix: DMatrix<f64>,
    pub alpha: f64,
    pub sources: Vec<LayerKind>,
    pub k: usize,
}

impl UnifiedLaplacian {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }
}

/// First K eigenvectors (ascending eigenvalues) of a symmetric matrix, with
/// the deterministic per-column sign convention.
fn bottom_eigenvectors(matrix: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    let n = matrix.nrows();
    if k < 1 || k > n {
        return Err(Error::EmbeddingDim { k, n });
    }
    let (_, vectors) = symmetric_spectrum(matrix)?;
    Ok(vectors.columns(0, k).into_owned())
}

/// N x K spectral embedding of a Laplacian.
pub fn embed(lap: &LaplacianView, k: usize) -> Result<DMatrix<f64>> {
    bottom_eigenvectors(&lap.matrix, k)
}

/// Embedding sliced out of an existing spectrum report.
pub fn embed_from_report(report: &SpectrumReport, k: usize) -> Result<DMatrix<f64>> {
    let n = report.n();
    if k < 1 || k > n {
        return Err(Error::EmbeddingDim { k, n });
    }
    Ok(report.eigenvectors.columns(0, k).into_owned())
}

/// Fuses M Laplacians: sum of the matrices minus alpha times the sum of the
/// per-layer bottom-K eigenspace projectors. The result is symmetrized
/// explicitly to keep the invariant exact.
pub fn unify(laps: &[LaplacianView], k: usize, alpha: f64) -> Result<UnifiedLaplacian> {
    let first = laps
        .first()
        .ok_or(Error::DimensionMismatch { expected: 1, got: 0 })?;
    let n = first.n();
    for lap in laps {
        if lap.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: lap.n(),
            });
        }
    }
    if !(alpha >= 0.0) {
        return Err(Error::CaseSchema(format!("alpha must be >= 0, got {alpha}")));
    }

    let mut matrix = DMatrix::zeros(n, n);
    let mut sources = Vec::with_capacity(laps.len());
    for lap in laps {
        matrix += &lap.matrix;
        sources.push(lap.source);
    }
    for lap in laps {
        let u = embed(lap, k)?;
        let projector = &u * u.transpose();
        matrix -= projector * alpha;
    }
    let matrix = (&matrix + matrix.transpose()) * 0.5;
    Ok(UnifiedLaplacian {
        matrix,
        alpha,
        sources,
        k,
    })
}

/// Embeddings of every Laplacian in one set (used for reporting).
pub fn embedding_set(laps: &[LaplacianView], k: usize) -> Result<EmbeddingSet> {
    let mut embeddings = Vec::with_capacity(laps.len());
    let mut layer_kinds = Vec::with_capacity(laps.len());
    for lap in laps {
        embeddings.push(embed(lap, k)?);
        layer_kinds.push(lap.source);
    }
    Ok(EmbeddingSet {
        embeddings,
        k,
        layer_kinds,
    })
}

/// N x K embedding of the unified matrix. The eigensolver makes no
/// positive-semidefiniteness assumption; eigenvalues may be negative.
pub fn unified_embedding(uni: &UnifiedLaplacian, k: usize) -> Result<DMatrix<f64>> {
    bottom_eigenvectors(&uni.matrix, k)
}

/// Full spectrum report of the unified matrix (for eigengap tables).
pub fn unified_spectrum(uni: &UnifiedLaplacian) -> Result<SpectrumReport> {
    crate::spectral::spectrum_of(&uni.matrix)
}
