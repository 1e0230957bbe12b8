//! Neumann-series style iterative solve for `Z_M eps = Z_{M,y}` used by the
//! greedy selectors in place of a direct factorization.
//!
//! Starting from `eps0 = alpha0 * b` with `alpha0 = 1 / ||Z||_inf`, each
//! step moves along the current residual `r = b - Z eps` with the adaptive
//! length `r^T Z r / ||Z r||^2`. The iteration stops once
//! `||eps0 - alpha0 Z eps|| < beta`, i.e. the `alpha0`-scaled residual is
//! small, and its fixed point is `Z^{-1} b`.

use nalgebra::{DMatrix, DVector};

/// `1 / ||Z||_inf`; for symmetric PSD `Z` this keeps `||I - alpha0 Z||_2 <= 1`.
pub fn initial_step(z: &DMatrix<f64>) -> f64 {
    let bound = z
        .row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if bound > 0.0 {
        1.0 / bound
    } else {
        1.0
    }
}

/// One in-progress solve.
#[derive(Debug, Clone)]
pub struct NeumannIter<'a> {
    z: &'a DMatrix<f64>,
    b: DVector<f64>,
    alpha0: f64,
    eps: DVector<f64>,
    residual: DVector<f64>,
    /// Step length used by the most recent update.
    pub alpha: f64,
    pub iterations: usize,
}

impl<'a> NeumannIter<'a> {
    pub fn new(z: &'a DMatrix<f64>, b: DVector<f64>, alpha0: f64) -> Self {
        let eps = &b * alpha0;
        let residual = &b - z * &eps;
        NeumannIter {
            z,
            b,
            alpha0,
            eps,
            residual,
            alpha: alpha0,
            iterations: 0,
        }
    }

    /// `||eps0 - alpha0 Z eps||`
    pub fn stopping_norm(&self) -> f64 {
        self.alpha0 * self.residual.norm()
    }

    pub fn step(&mut self) {
        let zr = self.z * &self.residual;
        let denom = zr.norm_squared();
        if denom == 0.0 {
            return;
        }
        self.alpha = self.residual.dot(&zr) / denom;
        self.eps.axpy(self.alpha, &self.residual, 1.0);
        self.residual = &self.b - self.z * &self.eps;
        self.iterations += 1;
    }

    pub fn solution(&self) -> &DVector<f64> {
        &self.eps
    }

    pub fn into_solution(self) -> DVector<f64> {
        self.eps
    }
}

/// Result of a capped iterative solve.
#[derive(Debug, Clone)]
pub struct NeumannSolve {
    pub solution: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates until the stopping norm drops below `beta` or `cap` steps run.
pub fn neumann_solve(z: &DMatrix<f64>, b: DVector<f64>, beta: f64, cap: usize) -> NeumannSolve {
    let mut it = NeumannIter::new(z, b, initial_step(z));
    while it.stopping_norm() >= beta && it.iterations < cap {
        it.step();
    }
    let converged = it.stopping_norm() < beta;
    NeumannSolve {
        iterations: it.iterations,
        converged,
        solution: it.into_solution(),
    }
}
