//! Classical multidimensional scaling into the plane.

use nalgebra::DMatrix;

use crate::error::{GmebError, Result};
use crate::grassmann::symmetric_eigen_desc;

#[derive(Clone, Debug)]
pub struct Embedding {
    /// One row per point.
    pub coords: DMatrix<f64>,
    /// The two leading eigenvalues of the centered Gram matrix.
    pub eigenvalues: [f64; 2],
    /// Set when either leading eigenvalue is not positive, so the plane
    /// does not carry the configuration.
    pub negative_dominant: bool,
}

/// Embeds points given their pairwise distances (not squared).
pub fn mds_embed(distances: &DMatrix<f64>) -> Result<Embedding> {
    let m = distances.nrows();
    if m == 0 || distances.ncols() != m {
        return Err(GmebError::InvalidArgument("distance matrix must be square and nonempty".into()));
    }
    for i in 0..m {
        if distances[(i, i)].abs() > 1e-12 {
            return Err(GmebError::InvalidArgument(format!("nonzero diagonal entry at {i}")));
        }
        for j in 0..i {
            let (a, b) = (distances[(i, j)], distances[(j, i)]);
            if !(a >= 0.0 && b >= 0.0) || (a - b).abs() > 1e-9 * a.abs().max(1.0) {
                return Err(GmebError::InvalidArgument(format!("entries ({i}, {j}) are negative or asymmetric")));
            }
        }
    }
    let squared = distances.map(|d| d * d);
    let row_means: Vec<f64> = (0..m).map(|i| squared.row(i).mean()).collect();
    let grand = squared.mean();
    let gram = DMatrix::from_fn(m, m, |i, j| -0.5 * (squared[(i, j)] - row_means[i] - row_means[j] + grand));
    let (values, vectors) = symmetric_eigen_desc(gram);

    let mut coords = DMatrix::zeros(m, 2);
    let mut eigenvalues = [0.0; 2];
    for c in 0..2.min(m) {
        eigenvalues[c] = values[c];
        let scale = values[c].max(0.0).sqrt();
        let mut column = vectors.column(c).into_owned();
        let pivot = column.iter().copied().fold(0.0, |acc: f64, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            column.neg_mut();
        }
        coords.set_column(c, &(column * scale));
    }
    let negative_dominant = m > 1 && (eigenvalues[0] <= 0.0 || eigenvalues[1] <= 0.0);
    if negative_dominant {
        log::warn!("leading MDS eigenvalues {eigenvalues:?} are not both positive");
    }
    Ok(Embedding { coords, eigenvalues, negative_dominant })
}
