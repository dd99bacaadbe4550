//! Independent validation path: the Rabi Hamiltonian assembled in a truncated
//! number-state basis and diagonalized with a cyclic Jacobi eigensolver.
//!
//! Basis convention: index = 2 n + s with s in {0, 1} encoding the sigma_z
//! eigenvalue +1 / -1.

use crate::recurrence::ModelParams;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("Jacobi sweeps did not converge: off-diagonal norm {offdiag:.3e} after {sweeps} sweeps")]
    NotConverged { sweeps: usize, offdiag: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
}

const MAX_SWEEPS: usize = 100;

/// Dense symmetric truncation of the Rabi Hamiltonian.
#[derive(Debug, Clone)]
pub struct TruncatedHamiltonian {
    pub n_max: usize,
    pub dim: usize,
    data: Vec<f64>,
}

impl TruncatedHamiltonian {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }
}

/// Sorted spectrum of a truncation, with the eigensolver's final off-diagonal
/// norm as a convergence measure.
#[derive(Debug, Clone, Serialize)]
pub struct OracleSpectrum {
    pub n_max: usize,
    pub eigenvalues: Vec<f64>,
    pub offdiag_norm_final: f64,
}

impl OracleSpectrum {
    /// Eigenvalues in the truncation-converged region (lower third of the
    /// spectrum); comparisons must not use the truncation-polluted top.
    pub fn trusted(&self) -> &[f64] {
        &self.eigenvalues[..self.eigenvalues.len() / 3]
    }
}

/// Assembles H = a'a + g sigma_z (a + a') + delta sigma_x with boson states
/// 0..=n_max.
pub fn build_matrix(params: &ModelParams, n_max: usize) -> TruncatedHamiltonian {
    let dim = 2 * (n_max + 1);
    let mut data = vec![0.0_f64; dim * dim];
    let idx = |n: usize, s: usize| 2 * n + s;
    for n in 0..=n_max {
        for s in 0..2usize {
            let i = idx(n, s);
            data[i * dim + i] = n as f64;
            let j = idx(n, 1 - s);
            data[i * dim + j] = params.delta;
            if n + 1 <= n_max {
                let sign = if s == 0 { 1.0 } else { -1.0 };
                let v = sign * params.g * ((n + 1) as f64).sqrt();
                let k = idx(n + 1, s);
                data[i * dim + k] = v;
                data[k * dim + i] = v;
            }
        }
    }
    TruncatedHamiltonian { n_max, dim, data }
}

/// Eigen-decomposition of a dense symmetric matrix (row-major, `dim x dim`)
/// by cyclic Jacobi rotations. Eigenvalues ascending; `vectors` is column
/// major (`vectors[j * dim + i]` is component i of eigenvector j).
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
    pub offdiag_norm: f64,
    pub sweeps: usize,
}

fn offdiag_norm(a: &[f64], dim: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            if i != j {
                s += a[i * dim + j] * a[i * dim + j];
            }
        }
    }
    s.sqrt()
}

pub fn jacobi_eigen(matrix: &[f64], dim: usize, tol: f64) -> Result<SymmetricEigen, OracleError> {
    if matrix.len() != dim * dim {
        return Err(OracleError::InvalidInput("matrix length must be dim^2"));
    }
    if !(tol > 0.0) {
        return Err(OracleError::InvalidInput("tol must be > 0"));
    }
    let mut a = matrix.to_vec();
    let mut v = vec![0.0_f64; dim * dim];
    for i in 0..dim {
        v[i * dim + i] = 1.0;
    }
    let norm = {
        let mut s = 0.0;
        for x in &a {
            s += x * x;
        }
        s.sqrt().max(f64::MIN_POSITIVE)
    };

    let mut off = offdiag_norm(&a, dim);
    let mut sweeps = 0;
    while off > tol * norm {
        if sweeps >= MAX_SWEEPS {
            return Err(OracleError::NotConverged { sweeps, offdiag: off });
        }
        for p in 0..dim {
            for q in p + 1..dim {
                let apq = a[p * dim + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * dim + p];
                let aqq = a[q * dim + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // Rotate rows/columns p, q of A.
                for k in 0..dim {
                    let akp = a[k * dim + p];
                    let akq = a[k * dim + q];
                    a[k * dim + p] = c * akp - s * akq;
                    a[k * dim + q] = s * akp + c * akq;
                }
                for k in 0..dim {
                    let apk = a[p * dim + k];
                    let aqk = a[q * dim + k];
                    a[p * dim + k] = c * apk - s * aqk;
                    a[q * dim + k] = s * apk + c * aqk;
                }
                for k in 0..dim {
                    let vkp = v[k * dim + p];
                    let vkq = v[k * dim + q];
                    v[k * dim + p] = c * vkp - s * vkq;
                    v[k * dim + q] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
        off = offdiag_norm(&a, dim);
    }

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| a[i * dim + i].total_cmp(&a[j * dim + j]));
    let values: Vec<f64> = order.iter().map(|&i| a[i * dim + i]).collect();
    let mut vectors = vec![0.0_f64; dim * dim];
    for (jnew, &jold) in order.iter().enumerate() {
        for i in 0..dim {
            vectors[jnew * dim + i] = v[i * dim + jold];
        }
    }
    Ok(SymmetricEigen { values, vectors, offdiag_norm: off, sweeps })
}

pub fn eigenvalues(h: &TruncatedHamiltonian, tol: f64) -> Result<OracleSpectrum, OracleError> {
    let eig = jacobi_eigen(&h.data, h.dim, tol)?;
    Ok(OracleSpectrum {
        n_max: h.n_max,
        eigenvalues: eig.values,
        offdiag_norm_final: eig.offdiag_norm,
    })
}

/// Minimum distance from `x` to any trusted oracle eigenvalue shifted to the
/// x convention (E + g^2).
pub fn oracle_gap(
    x: f64,
    params: &ModelParams,
    n_max: usize,
    tol: f64,
) -> Result<f64, OracleError> {
    let spectrum = eigenvalues(&build_matrix(params, n_max), tol)?;
    let g2 = params.g * params.g;
    Ok(spectrum
        .trusted()
        .iter()
        .map(|e| (x - (e + g2)).abs())
        .fold(f64::INFINITY, f64::min))
}

/// Lowest-k eigenvalues for each truncation in `n_list` (ascending), for
/// convergence studies of the variational projection.
pub fn convergence_study(
    params: &ModelParams,
    n_list: &[usize],
    k: usize,
    tol: f64,
) -> Result<Vec<(usize, Vec<f64>)>, OracleError> {
    if n_list.is_empty() {
        return Err(OracleError::InvalidInput("n_list must be non-empty"));
    }
    if !n_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(OracleError::InvalidInput("n_list must be strictly ascending"));
    }
    let min_dim = 2 * (n_list[0] + 1);
    if k > min_dim {
        return Err(OracleError::InvalidInput("k exceeds the smallest truncation dimension"));
    }
    let mut table = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let spectrum = eigenvalues(&build_matrix(params, n), tol)?;
        table.push((n, spectrum.eigenvalues[..k].to_vec()));
    }
    Ok(table)
}
