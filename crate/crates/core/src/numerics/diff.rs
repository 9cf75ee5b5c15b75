//! Discrete differential operators on unit-spaced grids.
//!
//! Forward differences leave the last row (resp. column) of their component
//! at zero; the Laplacian is zero on the one-sample border. Every operator is
//! linear and shape-preserving.

use super::field::Field2D;
use crate::error::{Error, Result};

fn require(f: &Field2D, need: usize) -> Result<()> {
    let (h, w) = f.shape();
    if h < need || w < need {
        return Err(Error::DimensionTooSmall { need, h, w });
    }
    Ok(())
}

/// Forward differences along rows (`gx`) and columns (`gy`).
pub fn grad_forward(f: &Field2D) -> Result<(Field2D, Field2D)> {
    require(f, 2)?;
    Ok((diff_rows(f), diff_cols(f)))
}

fn diff_rows(f: &Field2D) -> Field2D {
    let (h, w) = f.shape();
    let mut gx = Field2D::zeros(h, w);
    for i in 0..h - 1 {
        for j in 0..w {
            gx[(i, j)] = f[(i + 1, j)] - f[(i, j)];
        }
    }
    gx
}

fn diff_cols(f: &Field2D) -> Field2D {
    let (h, w) = f.shape();
    let mut gy = Field2D::zeros(h, w);
    for i in 0..h {
        for j in 0..w - 1 {
            gy[(i, j)] = f[(i, j + 1)] - f[(i, j)];
        }
    }
    gy
}

/// Adjoint of [`grad_forward`]: returns `Dxᵀ gx + Dyᵀ gy`.
pub fn grad_forward_adjoint(gx: &Field2D, gy: &Field2D) -> Result<Field2D> {
    super::field::ensure_same_shape(gx.shape(), gy.shape())?;
    require(gx, 2)?;
    let (h, w) = gx.shape();
    let mut out = Field2D::zeros(h, w);
    for i in 0..h {
        for j in 0..w {
            let mut v = 0.0;
            if i >= 1 {
                v += gx[(i - 1, j)];
            }
            if i < h - 1 {
                v -= gx[(i, j)];
            }
            if j >= 1 {
                v += gy[(i, j - 1)];
            }
            if j < w - 1 {
                v -= gy[(i, j)];
            }
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

/// Five-point Laplacian on the interior, zero on the border.
pub fn laplacian(f: &Field2D) -> Result<Field2D> {
    require(f, 3)?;
    let (h, w) = f.shape();
    let mut out = Field2D::zeros(h, w);
    for i in 1..h - 1 {
        for j in 1..w - 1 {
            out[(i, j)] = f[(i - 1, j)] + f[(i + 1, j)] + f[(i, j - 1)] + f[(i, j + 1)]
                - 4.0 * f[(i, j)];
        }
    }
    Ok(out)
}

/// Order-3 or order-4 difference: the first forward difference composed
/// `order` times along each axis, summed over both axes.
pub fn grad_n(f: &Field2D, order: usize) -> Result<Field2D> {
    if !(3..=4).contains(&order) {
        return Err(Error::UnsupportedOrder(order));
    }
    require(f, order + 1)?;
    let mut along_rows = f.clone();
    let mut along_cols = f.clone();
    for _ in 0..order {
        along_rows = diff_rows(&along_rows);
        along_cols = diff_cols(&along_cols);
    }
    along_rows.zip_map(&along_cols, |a, b| a + b)
}
