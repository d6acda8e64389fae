//! The per-window coefficient matrix and its reusable factorization.

use nalgebra::{DMatrix, DVector, Dyn};

use super::{CoeffSource, Registry, SystemModel, equations};
use crate::error::{CoreError, Result};
use crate::scalar::{Scalar, lit};

/// A window's constant coefficient matrix `A₀`, row-equilibrated and
/// LU-factorized with partial pivoting. Built only from zeroth-order values,
/// it is reused for every order `k = 1..K+2` and for every retry attempt at
/// the same window start.
pub struct WindowMatrix<T: Scalar> {
    lu: nalgebra::LU<T, Dyn, Dyn>,
    /// Per-row equilibration factors applied to the matrix before
    /// factorization; right-hand sides get the same scaling.
    row_scale: DVector<T>,
    pub size: usize,
}

impl<T: Scalar> WindowMatrix<T> {
    /// Assemble `A₀` from the zeroth-order values of `source` and factorize.
    ///
    /// Rows are scaled to unit max-norm before the factorization so the
    /// SI-unit heat rows and the per-unit electric rows pivot on comparable
    /// magnitudes. A zero pivot is reported with the label of the equation
    /// that produced the offending row.
    pub fn build(model: &SystemModel<T>, source: &impl CoeffSource<T>) -> Result<Self> {
        let raw = equations::matrix_at(&model.equations, source, &model.registry);
        Self::factorize(raw, &model.registry, |row| model.equations[row].label.clone())
    }

    /// Factorize an explicit matrix (rows labelled by index).
    pub fn factorize(
        mut matrix: DMatrix<T>,
        registry: &Registry,
        label: impl Fn(usize) -> String,
    ) -> Result<Self> {
        let n = registry.unknown_count();
        let mut row_scale = DVector::from_element(n, T::one());
        for row in 0..n {
            let max = matrix.row(row).amax();
            if max > T::zero() {
                let s = T::one() / max;
                row_scale[row] = s;
                for col in 0..n {
                    matrix[(row, col)] *= s;
                }
            }
        }
        // Row order of U tracks the pivoting permutation; recover the
        // original equation index of a bad pivot for the diagnostic.
        let lu = nalgebra::LU::new(matrix);
        let mut order = DMatrix::<f64>::zeros(n.max(1), 1);
        for i in 0..n {
            order[(i, 0)] = i as f64;
        }
        lu.p().permute_rows(&mut order);
        let diag = lu.u().diagonal();
        let mut max_pivot = T::zero();
        for d in diag.iter() {
            max_pivot = max_pivot.max(d.abs());
        }
        let tol = max_pivot * lit::<T>(1e-12);
        if let Some(bad) = diag.iter().position(|d| d.abs() <= tol) {
            let equation = label(order[(bad, 0)] as usize);
            return Err(CoreError::SingularMatrix { equation });
        }
        Ok(Self { lu, row_scale, size: n })
    }

    /// Solve `A₀·y = rhs` using the stored factorization.
    pub fn solve(&self, rhs: &DVector<T>) -> Result<DVector<T>> {
        let scaled = rhs.component_mul(&self.row_scale);
        self.lu
            .solve(&scaled)
            .ok_or_else(|| CoreError::SingularMatrix { equation: "<factorized system>".into() })
    }
}

impl<T: Scalar> std::fmt::Debug for WindowMatrix<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WindowMatrix").field("size", &self.size).finish_non_exhaustive()
    }
}
