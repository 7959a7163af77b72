use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, Schur};
use serde::Serialize;

use crate::graph::{learners, truth_reachability, AgentId, GraphSnapshot};
use crate::{Error, Result};

/// Learner-block eigenvalue moduli of `D^{-1}A` and the resulting gap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub nu: f64,
    pub max_modulus: f64,
    pub reachable: bool,
    /// Sorted in decreasing order.
    pub eigen_moduli: Vec<f64>,
}

/// Eigenvalues of a dense real matrix via the real Schur form.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let max_iter = 1000 * m.nrows().max(10);
    let schur = Schur::try_new(m.clone(), f64::EPSILON, max_iter).ok_or_else(|| {
        Error::UnsupportedAnalysis("eigenvalue iteration did not converge".into())
    })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// `E^{-1}B`: the learner block of `D^{-1}A`, learners in ascending order.
pub fn degree_normalized_block(snapshot: &GraphSnapshot, truth: AgentId) -> Result<DMatrix<f64>> {
    let n = snapshot.n();
    let ids: Vec<usize> = learners(n, truth).collect();
    let mut pos = vec![usize::MAX; n];
    for (k, &i) in ids.iter().enumerate() {
        pos[i] = k;
    }
    let mut m = DMatrix::zeros(ids.len(), ids.len());
    for (k, &i) in ids.iter().enumerate() {
        let nbrs = snapshot.neighbors(i);
        if nbrs.is_empty() {
            return Err(Error::SingularDegree(i));
        }
        let inv = 1.0 / nbrs.len() as f64;
        for &j in nbrs {
            if j != truth.0 {
                m[(k, pos[j])] = inv;
            }
        }
    }
    Ok(m)
}

/// Spectral gap `1 - max |lambda|` over the eigenvalues of `E^{-1}B`, a pure
/// graph quantity (self-confidence plays no role).
pub fn spectral_gap(snapshot: &GraphSnapshot, truth: AgentId) -> Result<SpectralReport> {
    let reachable = truth_reachability(snapshot, truth)?.into_iter().all(|r| r);
    let block = degree_normalized_block(snapshot, truth)?;
    let mut moduli: Vec<f64> = eigenvalues(&block)?.iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    let max_modulus = moduli.first().copied().unwrap_or(0.0);
    Ok(SpectralReport {
        nu: (1.0 - max_modulus).clamp(0.0, 1.0),
        max_modulus,
        reachable,
        eigen_moduli: moduli,
    })
}

/// Closed-form eigenvalues of the circulant construction's learner block:
/// `(1 + w_j + ... + w_j^{d-2}) / d` for the `L`-th roots of unity `w_j`.
pub fn circulant_eigenvalues(learners: usize, degree: usize) -> Vec<Complex<f64>> {
    (0..learners)
        .map(|j| {
            let omega = Complex::from_polar(1.0, 2.0 * PI * j as f64 / learners as f64);
            let mut power = Complex::new(1.0, 0.0);
            let mut sum = Complex::new(0.0, 0.0);
            for _ in 0..degree.saturating_sub(1) {
                sum += power;
                power *= omega;
            }
            sum / degree as f64
        })
        .collect()
}
