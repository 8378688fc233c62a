use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};

use super::{Dopri5, IntegratorConfig};
use crate::error::{Error, Result};

/// Re-orthonormalization interval for the fundamental matrix.
const CHUNK: f64 = 1.0;

/// State-transition matrix over a time span.
#[derive(Debug, Clone)]
pub struct Monodromy {
    pub matrix: DMatrix<f64>,
    /// `ln |det|`, accumulated from the QR factors of each chunk, which
    /// stays accurate when the matrix itself is numerically singular.
    pub log_abs_det: f64,
}

/// Integrate `Φ' = J(t) Φ`, `Φ(t0) = I` over `t_span` and return `Φ(t1)`.
///
/// The span is cut into chunks of unit length; after each chunk the
/// propagated basis is QR-factored and integration continues from `Q`, so
/// `Φ(t1) = Q_K R_K ... R_1`.
pub fn integrate_variational<J>(
    mut jacobian: J,
    dim: usize,
    t_span: (f64, f64),
    config: &IntegratorConfig,
) -> Result<Monodromy>
where
    J: FnMut(f64, &mut DMatrix<f64>),
{
    let (t0, t1) = t_span;
    if !(t1 > t0) {
        return Err(Error::Domain(format!("empty time span [{t0}, {t1}]")));
    }
    let chunks = ((t1 - t0) / CHUNK).ceil().max(1.0) as usize;
    let mut jm = DMatrix::<f64>::zeros(dim, dim);
    let mut q = DMatrix::<f64>::identity(dim, dim);
    let mut r_acc = DMatrix::<f64>::identity(dim, dim);
    let mut log_abs_det = 0.0;

    for c in 0..chunks {
        let a = t0 + (t1 - t0) * c as f64 / chunks as f64;
        let b = if c + 1 == chunks {
            t1
        } else {
            t0 + (t1 - t0) * (c + 1) as f64 / chunks as f64
        };
        let field = |t: f64, x: &[f64], dx: &mut [f64]| {
            jacobian(t, &mut jm);
            let phi = DMatrixView::from_slice(x, dim, dim);
            let mut out = DMatrixViewMut::from_slice(dx, dim, dim);
            out.gemm(1.0, &jm, &phi, 0.0);
        };
        let mut stepper = Dopri5::new(field, a, q.as_slice(), b - a, config)?;
        while stepper.t() < b {
            stepper.step(b)?;
        }
        let propagated = DMatrix::from_column_slice(dim, dim, stepper.state());
        let qr = propagated.qr();
        let r = qr.r();
        for i in 0..dim {
            log_abs_det += r[(i, i)].abs().ln();
        }
        r_acc = &r * &r_acc;
        q = qr.q();
    }

    Ok(Monodromy {
        matrix: q * r_acc,
        log_abs_det,
    })
}
