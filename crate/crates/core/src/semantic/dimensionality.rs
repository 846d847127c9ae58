use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Error, Result};

/// Cumulative-ratio comparisons allow this much relative slack so that
/// exactly-tied spectra (e.g. isotropic data) resolve deterministically.
const RATIO_SLACK: f64 = 1e-10;

/// Principal-component summary of a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionalityResult {
    /// Smallest number of components reaching the requested variance ratio.
    pub d_eff: usize,
    /// Covariance eigenvalues, descending, negatives from rounding clamped to 0.
    pub eigenvalues: Vec<f64>,
    pub explained_ratio_at_deff: f64,
}

fn centered(samples: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = samples.nrows();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "effective dimensionality needs at least 2 samples, got {n}"
        )));
    }
    let means = samples.row_mean();
    let mut centered = samples.clone();
    for mut row in centered.row_iter_mut() {
        row -= &means;
    }
    // constant columns carry no variance; drop the rounding residue of the mean
    for (j, col) in samples.column_iter().enumerate() {
        if col.iter().all(|v| *v == col[0]) {
            centered.column_mut(j).fill(0.0);
        }
    }
    Ok(centered)
}

/// Population covariance (divide by `n`) of the rows of `samples`.
pub fn covariance(samples: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let c = centered(samples)?;
    Ok(c.transpose() * &c / samples.nrows() as f64)
}

/// Effective dimensionality of `samples` (rows are observations).
pub fn effective_dimensionality(samples: &DMatrix<f64>, ratio: f64) -> Result<DimensionalityResult> {
    check_ratio(ratio)?;
    let (n, dim) = samples.shape();
    if n >= dim {
        return effective_dimensionality_from_covariance(&covariance(samples)?, ratio);
    }
    // fewer samples than features: the n×n Gram matrix has the same non-zero spectrum
    let c = centered(samples)?;
    let gram = &c * c.transpose() / n as f64;
    let mut eigenvalues = symmetric_spectrum(&gram);
    eigenvalues.resize(dim, 0.0);
    Ok(summarize(eigenvalues, ratio))
}

/// Eigenvalues, descending, with rounding negatives clamped to 0.
fn symmetric_spectrum(m: &DMatrix<f64>) -> Vec<f64> {
    let eigen = SymmetricEigen::new(m.clone());
    let mut eigenvalues: Vec<f64> = eigen.eigenvalues.iter().map(|l| l.max(0.0)).collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    eigenvalues
}

/// Effective dimensionality of a supplied symmetric covariance matrix.
pub fn effective_dimensionality_from_covariance(
    cov: &DMatrix<f64>,
    ratio: f64,
) -> Result<DimensionalityResult> {
    check_ratio(ratio)?;
    if !cov.is_square() {
        return Err(Error::DimensionMismatch {
            expected: cov.nrows(),
            found: cov.ncols(),
        });
    }
    Ok(summarize(symmetric_spectrum(cov), ratio))
}

fn summarize(eigenvalues: Vec<f64>, ratio: f64) -> DimensionalityResult {
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return DimensionalityResult {
            d_eff: 0,
            eigenvalues,
            explained_ratio_at_deff: 1.0,
        };
    }

    let target = ratio * total * (1.0 - RATIO_SLACK);
    let mut cumulative = 0.0;
    let mut d_eff = eigenvalues.len();
    for (k, lambda) in eigenvalues.iter().enumerate() {
        cumulative += lambda;
        if cumulative >= target {
            d_eff = k + 1;
            break;
        }
    }
    let explained: f64 = eigenvalues[..d_eff].iter().sum::<f64>() / total;
    DimensionalityResult {
        d_eff,
        eigenvalues,
        explained_ratio_at_deff: explained.min(1.0),
    }
}

fn check_ratio(ratio: f64) -> Result<()> {
    if ratio > 0.0 && ratio <= 1.0 {
        Ok(())
    } else {
        Err(invalid("ratio", format!("{ratio} is outside (0, 1]")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotropic_covariance_gives_nine_of_ten() {
        let cov = DMatrix::<f64>::identity(10, 10);
        let r = effective_dimensionality_from_covariance(&cov, 0.9).unwrap();
        assert_eq!(r.d_eff, 9);
        assert_eq!(r.eigenvalues, vec![1.0; 10]);
    }

    #[test]
    fn wide_samples_match_covariance_spectrum() {
        let samples = DMatrix::from_fn(5, 12, |i, j| ((i * 7 + j * 3) % 11) as f64 + 0.1 * (i * j) as f64);
        let wide = effective_dimensionality(&samples, 0.9).unwrap();
        let direct = effective_dimensionality_from_covariance(&covariance(&samples).unwrap(), 0.9).unwrap();
        assert_eq!(wide.d_eff, direct.d_eff);
        assert_eq!(wide.eigenvalues.len(), 12);
        for (a, b) in wide.eigenvalues.iter().zip(&direct.eigenvalues) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn identical_samples_have_zero_dimension() {
        let samples = DMatrix::from_fn(20, 6, |_, j| j as f64 * 0.1);
        let r = effective_dimensionality(&samples, 0.9).unwrap();
        assert_eq!(r.d_eff, 0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let one = DMatrix::<f64>::zeros(1, 4);
        assert!(matches!(
            effective_dimensionality(&one, 0.9),
            Err(Error::InsufficientData(_))
        ));
        let two = DMatrix::<f64>::zeros(2, 4);
        assert!(effective_dimensionality(&two, 0.0).is_err());
        assert!(effective_dimensionality(&two, 1.5).is_err());
    }

    #[test]
    fn eigenpairs_have_small_residual() {
        let samples = DMatrix::from_fn(40, 7, |i, j| ((i * 7 + j * 13) % 11) as f64 - (j as f64).sqrt());
        let cov = covariance(&samples).unwrap();
        let eigen = SymmetricEigen::new(cov.clone());
        for (k, lambda) in eigen.eigenvalues.iter().enumerate() {
            let v = eigen.eigenvectors.column(k);
            let residual = (&cov * v - v * *lambda).norm();
            assert!(residual <= 1e-8, "residual {residual}");
        }
        let r = effective_dimensionality_from_covariance(&cov, 0.9).unwrap();
        let sum: f64 = r.eigenvalues.iter().sum();
        assert!((sum - cov.trace()).abs() <= 1e-9 * cov.trace());
    }

    #[test]
    fn lower_ratio_never_needs_more_components() {
        let samples = DMatrix::from_fn(30, 5, |i, j| ((i + 1) as f64).powi(j as i32 % 3) * (j + 1) as f64);
        let mut last = usize::MAX;
        for ratio in [1.0, 0.95, 0.9, 0.7, 0.5, 0.2] {
            let d = effective_dimensionality(&samples, ratio).unwrap().d_eff;
            assert!(d <= last);
            last = d;
        }
    }
}
