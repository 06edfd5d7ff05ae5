//! Von Neumann entropy of finite coherent-state mixtures.
//!
//! For `rho = sum_i p_i |a_i><a_i|` the nonzero spectrum of `rho` equals the
//! spectrum of the weighted Gram matrix `G_ij = sqrt(p_i p_j) <a_i|a_j>`, so
//! the entropy needs only a `k x k` eigenproblem for `k` states.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::SecurityError;

/// Eigenvalues below this are treated as zero.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

/// `<alpha|beta>` for coherent states.
pub fn coherent_overlap(alpha: Complex64, beta: Complex64) -> Complex64 {
    (-(alpha.norm_sqr() + beta.norm_sqr()) / 2.0 + alpha.conj() * beta).exp()
}

fn check_weights(weights: &[f64], len: usize) -> Result<(), SecurityError> {
    if weights.len() != len || weights.is_empty() {
        return Err(SecurityError::InvalidWeights(format!(
            "{} weights for {len} states",
            weights.len()
        )));
    }
    if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(SecurityError::InvalidWeights(
            "negative or non-finite weight".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(SecurityError::InvalidWeights(format!(
            "weights sum to {total}"
        )));
    }
    Ok(())
}

/// `-sum lambda log2 lambda` with the floor applied.
pub fn entropy_from_eigenvalues(eigenvalues: impl IntoIterator<Item = f64>) -> f64 {
    eigenvalues
        .into_iter()
        .filter(|&l| l > EIGENVALUE_FLOOR)
        .map(|l| -l * l.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Entropy in bits of the mixture of coherent states `amplitudes` with
/// probabilities `weights`.
pub fn entropy_of_mixture(weights: &[f64], amplitudes: &[Complex64]) -> Result<f64, SecurityError> {
    check_weights(weights, amplitudes.len())?;
    let k = amplitudes.len();
    let gram = DMatrix::from_fn(k, k, |i, j| {
        coherent_overlap(amplitudes[i], amplitudes[j]) * (weights[i] * weights[j]).sqrt()
    });
    Ok(entropy_from_eigenvalues(
        gram.symmetric_eigenvalues().iter().copied(),
    ))
}

/// Fock-basis cross-check of [`entropy_of_mixture`].
pub mod fock {
    use super::*;

    /// Largest admissible probability mass outside the truncated space.
    pub const MAX_TAIL: f64 = 1e-10;

    /// Truncation used for a mixture whose largest `|alpha|^2` is `mean_photons`:
    /// `max(20, ceil(n + 10 sqrt(n + 1)))`.
    pub fn cutoff(mean_photons: f64) -> usize {
        let n = mean_photons.max(0.0);
        ((n + 10.0 * (n + 1.0).sqrt()).ceil() as usize).max(20)
    }

    /// Fock amplitudes `<k|alpha>` for `k = 0..=n_max`.
    pub fn coefficients(alpha: Complex64, n_max: usize) -> Vec<Complex64> {
        let mut c = Vec::with_capacity(n_max + 1);
        c.push(Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0));
        for k in 1..=n_max {
            let prev = c[k - 1];
            c.push(prev * alpha / (k as f64).sqrt());
        }
        c
    }

    /// Truncated density matrix of the mixture.
    pub fn density_matrix(
        weights: &[f64],
        amplitudes: &[Complex64],
        n_max: usize,
    ) -> DMatrix<Complex64> {
        let dim = n_max + 1;
        let mut rho = DMatrix::<Complex64>::zeros(dim, dim);
        for (&w, &a) in weights.iter().zip(amplitudes) {
            let c = coefficients(a, n_max);
            for i in 0..dim {
                for j in 0..dim {
                    rho[(i, j)] += c[i] * c[j].conj() * w;
                }
            }
        }
        rho
    }

    /// Entropy and truncation details.
    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct FockEntropy {
        pub entropy: f64,
        pub cutoff: usize,
        /// `1 - tr(rho)` of the truncated matrix.
        pub tail_mass: f64,
    }

    /// Entropy from the eigenvalues of the truncated density matrix.
    pub fn entropy_of_mixture(
        weights: &[f64],
        amplitudes: &[Complex64],
    ) -> Result<FockEntropy, SecurityError> {
        check_weights(weights, amplitudes.len())?;
        let biggest = amplitudes.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
        let n_max = cutoff(biggest);
        let rho = density_matrix(weights, amplitudes, n_max);
        let tail_mass = 1.0 - rho.trace().re;
        if tail_mass > MAX_TAIL {
            return Err(SecurityError::TruncationTail {
                cutoff: n_max,
                tail_mass,
            });
        }
        Ok(FockEntropy {
            entropy: entropy_from_eigenvalues(rho.symmetric_eigenvalues().iter().copied()),
            cutoff: n_max,
            tail_mass,
        })
    }
}
