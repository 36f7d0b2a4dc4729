//! Small collections with closed-form answers.

use nalgebra::DMatrix;

use crate::grassmann::{Basis, SubspaceCollection};

/// Two planes and a line in R^5 whose minimax centers are known exactly.
///
/// For k = 1 the center is `(1, 1, 1, 0, 0)/√3` at squared distance 1/9 from
/// every item. For k = 2 it is spanned by `(3, 3, 2, 0, 0)/√22` and
/// `(0, 0, 0, 1, 1)/√2`, at distance `(14 − 3√7)/24` from the two planes,
/// while the line lies inside it.
pub fn three_subspaces() -> SubspaceCollection {
    let s = f64::sqrt;
    let x1 = DMatrix::from_row_slice(
        5,
        2,
        &[s(2.0) / s(3.0), 0.0, 1.0 / s(6.0), 0.0, 1.0 / s(6.0), 0.0, 0.0, s(7.0) / s(8.0), 0.0, 1.0 / s(8.0)],
    );
    let x2 = DMatrix::from_row_slice(
        5,
        2,
        &[1.0 / s(6.0), 0.0, s(2.0) / s(3.0), 0.0, 1.0 / s(6.0), 0.0, 0.0, 1.0 / s(8.0), 0.0, s(7.0) / s(8.0)],
    );
    let x3 = DMatrix::from_column_slice(5, 1, &[1.0 / s(6.0), 1.0 / s(6.0), s(2.0) / s(3.0), 0.0, 0.0]);
    let items = [x1, x2, x3]
        .into_iter()
        .map(|m| Basis::new(m).expect("fixture bases are orthonormal"))
        .collect();
    SubspaceCollection::new(items).expect("fixture shares R^5")
}

/// Squared distance from the k = 2 center to either plane of [`three_subspaces`].
pub fn three_subspaces_radius_k2() -> f64 {
    (14.0 - 3.0 * 7f64.sqrt()) / 24.0
}
