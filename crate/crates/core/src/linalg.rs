use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative residual bound accepted from a dense solve.
pub const LINSOLVE_TOL: f64 = 1e-9;

/// LU factorization with partial pivoting, reusable across right-hand sides.
pub(crate) struct Factored {
    a: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    context: &'static str,
}

impl Factored {
    pub(crate) fn new(a: DMatrix<f64>, context: &'static str) -> Self {
        let lu = a.clone().lu();
        Factored { a, lu, context }
    }

    pub(crate) fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let singular = |residual| Error::Singular { context: self.context.to_string(), residual };
        let x = self.lu.solve(b).ok_or_else(|| singular(f64::INFINITY))?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(singular(f64::INFINITY));
        }
        let residual = (&self.a * &x - b).amax();
        let scale = self.a.row_iter().map(|r| r.abs().sum()).fold(0.0, f64::max) * x.amax() + b.amax();
        if residual > LINSOLVE_TOL * scale.max(1.0) {
            return Err(singular(residual));
        }
        Ok(x)
    }
}

pub(crate) fn solve(a: DMatrix<f64>, b: &DVector<f64>, context: &'static str) -> Result<DVector<f64>> {
    Factored::new(a, context).solve(b)
}
