//! Basis expansions mapping coefficient vectors to forecast/backcast
//! signals: learnable linear projections (generic), polynomial trend and
//! Fourier seasonality (interpretable).

use serde::{Deserialize, Serialize};

use crate::tensor::{Scalar, Tensor};

/// The kind of basis a stack expands its coefficients through.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum BasisKind {
    /// Learnable projection matrices plus learnable additive terms.
    Generic { dim_f: usize, dim_b: usize },
    /// Fixed Vandermonde basis `[1, t, ..., t^p]` over a `[0, 1)` time grid.
    Trend { degree: usize },
    /// Fixed Fourier basis: a constant column plus `cos`/`sin` pairs up to
    /// harmonic `floor(len/2 - 1)`.
    Seasonal,
}

impl BasisKind {
    /// Coefficient count for the forecast of length `h`.
    pub fn dim_forecast(&self, h: usize) -> usize {
        match self {
            BasisKind::Generic { dim_f, .. } => *dim_f,
            BasisKind::Trend { degree } => degree + 1,
            BasisKind::Seasonal => 2 * seasonal_harmonics(h) + 1,
        }
    }

    /// Coefficient count for the backcast over a window of length `l`.
    pub fn dim_backcast(&self, l: usize) -> usize {
        match self {
            BasisKind::Generic { dim_b, .. } => *dim_b,
            BasisKind::Trend { degree } => degree + 1,
            BasisKind::Seasonal => 2 * seasonal_harmonics(l) + 1,
        }
    }

    pub fn is_generic(&self) -> bool {
        matches!(self, BasisKind::Generic { .. })
    }
}

/// Number of cos/sin harmonic pairs for an output of length `len`:
/// `floor(len/2 - 1)`, never below zero (degenerate horizons keep at least
/// the constant column).
pub fn seasonal_harmonics(len: usize) -> usize {
    (len / 2).saturating_sub(1)
}

/// The uniform `[0, 1)` time grid `t_j = j / len`.
fn time_grid(len: usize) -> impl Iterator<Item = f64> {
    (0..len).map(move |j| j as f64 / len as f64)
}

/// Vandermonde trend basis, shape `[degree+1, len]`; row `i` is `t^i`.
pub fn trend_matrix<T: Scalar>(degree: usize, len: usize) -> Tensor<T> {
    let mut data = Vec::with_capacity((degree + 1) * len);
    for p in 0..=degree {
        for t in time_grid(len) {
            data.push(T::from_f64(t.powi(p as i32)));
        }
    }
    Tensor::from_vec(&[degree + 1, len], data).unwrap()
}

/// Fourier seasonal basis, shape `[2*harmonics+1, len]`: a row of ones, then
/// `cos(2*pi*i*t)`, `sin(2*pi*i*t)` for each harmonic `i`.
pub fn seasonal_matrix<T: Scalar>(len: usize) -> Tensor<T> {
    let harmonics = seasonal_harmonics(len);
    let rows = 2 * harmonics + 1;
    let mut data = Vec::with_capacity(rows * len);
    data.extend((0..len).map(|_| T::one()));
    for i in 1..=harmonics {
        for t in time_grid(len) {
            data.push(T::from_f64((2.0 * std::f64::consts::PI * i as f64 * t).cos()));
        }
        for t in time_grid(len) {
            data.push(T::from_f64((2.0 * std::f64::consts::PI * i as f64 * t).sin()));
        }
    }
    Tensor::from_vec(&[rows, len], data).unwrap()
}

/// Fixed basis matrix for direction/length; generic kinds have no fixed
/// matrix.
pub fn fixed_matrix<T: Scalar>(kind: &BasisKind, len: usize) -> Option<Tensor<T>> {
    match kind {
        BasisKind::Generic { .. } => None,
        BasisKind::Trend { degree } => Some(trend_matrix(*degree, len)),
        BasisKind::Seasonal => Some(seasonal_matrix(len)),
    }
}

/// Place the columns of `mat` (`[d, l]`) into the last `l` columns of a
/// `[d, total]` matrix, zeros elsewhere. Used to right-align per-head fixed
/// backcast bases within the shared length-`L` buffer.
pub fn place_last_columns<T: Scalar>(mat: &Tensor<T>, total: usize) -> Tensor<T> {
    let (d, l) = (mat.rows(), mat.cols());
    debug_assert!(l <= total);
    let mut data = vec![T::zero(); d * total];
    for r in 0..d {
        for c in 0..l {
            data[r * total + (total - l) + c] = mat.at2(r, c);
        }
    }
    Tensor::from_vec(&[d, total], data).unwrap()
}
