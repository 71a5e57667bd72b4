//! Error decomposition of a recovered vector against the ground truth.

use serde::Serialize;

use crate::matrixlab::MeasurementMatrix;
use crate::signals::{best_k_block, best_k_term};
use crate::{Error, Result, Vector};

/// `h = x♯ − x` with the index sets and error norms used by the bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualAnalysis {
    #[serde(skip)]
    pub h: Vector,
    /// Coordinates in the support of the best k-term (or k-block)
    /// approximation of `x`, ascending.
    pub e: Vec<usize>,
    /// Coordinates of the k largest entries (or blocks) of `h` off `e`,
    /// ascending.
    pub e1: Vec<usize>,
    /// `‖Ah‖₂`
    pub meas_error: f64,
    /// `‖AᵀAh‖∞`
    pub ds_error: f64,
    /// `‖h‖₂`
    pub sig_error: f64,
}

pub fn analyze_residual(
    x_true: &Vector,
    x_sharp: &Vector,
    a: &MeasurementMatrix,
    k: usize,
    d: usize,
) -> Result<ResidualAnalysis> {
    let n = a.cols();
    if x_true.len() != n || x_sharp.len() != n {
        return Err(Error::InvalidDimensions(format!(
            "vectors of length {} and {} for a matrix with {n} columns",
            x_true.len(),
            x_sharp.len()
        )));
    }
    if d == 0 || n % d != 0 {
        return Err(Error::InvalidDimensions(format!("block size {d} does not divide n = {n}")));
    }
    let h = x_sharp - x_true;
    let head = if d == 1 { best_k_term(x_true, k)? } else { best_k_block(x_true, k, d)? };

    let e = if d == 1 {
        (0..n).filter(|&i| head[i] != 0.0).collect::<Vec<_>>()
    } else {
        let mut idx = Vec::new();
        for (b, chunk) in head.as_slice().chunks(d).enumerate() {
            if chunk.iter().any(|&v| v != 0.0) {
                idx.extend(b * d..(b + 1) * d);
            }
        }
        idx
    };

    // Rank the units (entries or blocks) of h outside E by magnitude.
    let on_e = {
        let mut mask = vec![false; n];
        for &i in &e {
            mask[i] = true;
        }
        mask
    };
    let mut units: Vec<(usize, f64)> = h
        .as_slice()
        .chunks(d)
        .enumerate()
        .filter(|(b, _)| !on_e[b * d])
        .map(|(b, chunk)| (b, chunk.iter().map(|v| v * v).sum::<f64>()))
        .collect();
    units.sort_by(|p, q| q.1.total_cmp(&p.1));
    units.truncate(k);
    let mut e1: Vec<usize> = units.iter().flat_map(|&(b, _)| b * d..(b + 1) * d).collect();
    e1.sort_unstable();

    let ah = a.entries() * &h;
    let ds_error = a.entries().tr_mul(&ah).amax();
    Ok(ResidualAnalysis {
        meas_error: ah.norm(),
        ds_error,
        sig_error: h.norm(),
        h,
        e,
        e1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixlab::{generate_matrix, MatrixKind};

    #[test]
    fn exact_recovery_has_no_error() {
        let g = generate_matrix(MatrixKind::Gaussian, 6, 10, 1, 1, None, 1).unwrap();
        let x = Vector::from_fn(10, |i, _| if i % 4 == 0 { 1.0 } else { 0.0 });
        let r = analyze_residual(&x, &x, &g.matrix, 2, 1).unwrap();
        assert_eq!((r.meas_error, r.ds_error, r.sig_error), (0.0, 0.0, 0.0));
        assert_eq!(r.e, vec![0, 4]);
        assert_eq!(r.e1.len(), 2);
        assert!(r.e1.iter().all(|i| !r.e.contains(i)));
    }

    #[test]
    fn unit_coordinate_error_has_unit_measurement_norm() {
        let g = generate_matrix(MatrixKind::Gaussian, 6, 10, 1, 2, None, 1).unwrap();
        let x = Vector::zeros(10);
        let mut xs = x.clone();
        xs[3] = 1.0;
        let r = analyze_residual(&x, &xs, &g.matrix, 2, 1).unwrap();
        assert!((r.meas_error - 1.0).abs() < 1e-12);
        assert!(r.e.is_empty());
        assert!(r.e1.contains(&3));
    }

    #[test]
    fn block_sets_cover_whole_blocks() {
        let g = generate_matrix(MatrixKind::BlockOrthonormal, 8, 8, 2, 3, None, 1).unwrap();
        let x = Vector::from_vec(vec![0.0, 0.0, 3.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let xs = Vector::from_vec(vec![0.1, 0.0, 3.0, 1.0, 0.0, 0.5, 0.0, 0.0]);
        let r = analyze_residual(&x, &xs, &g.matrix, 1, 2).unwrap();
        assert_eq!(r.e, vec![2, 3]);
        assert_eq!(r.e1, vec![4, 5]);
    }
}
