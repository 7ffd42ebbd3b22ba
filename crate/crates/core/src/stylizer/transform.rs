use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::conv_engine::FeatureMap;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformSpec {
    /// Floor applied to covariance eigenvalues.
    pub epsilon: f64,
    /// Blend between stylized (`1`) and content (`0`) features.
    pub strength: f64,
}

impl Default for TransformSpec {
    fn default() -> Self {
        TransformSpec {
            epsilon: 1e-5,
            strength: 1.0,
        }
    }
}

impl TransformSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if !(0.0..=1.0).contains(&self.strength) {
            return Err(Error::InvalidArgument(format!(
                "strength must lie in [0, 1], got {}",
                self.strength
            )));
        }
        Ok(())
    }
}

/// Per-channel mean and the centred samples as an `n x c` f64 matrix.
fn centered(f: &FeatureMap) -> (DVector<f64>, DMatrix<f64>) {
    let (n, c) = (f.rows(), f.cols());
    let mut mean = DVector::zeros(c);
    for i in 0..n {
        for (k, &v) in f.row(i).iter().enumerate() {
            mean[k] += v as f64;
        }
    }
    mean /= n as f64;
    let x = DMatrix::from_fn(n, c, |i, k| f.row(i)[k] as f64 - mean[k]);
    (mean, x)
}

/// Sample covariance `XᵀX / (n - 1)` of centred samples.
fn covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, c) = x.shape();
    let mut cov = DMatrix::zeros(c, c);
    // SAFETY: nalgebra storage is column-major and contiguous, element (i, k) of
    // `x` at i + k * n; the strides below read it as both Xᵀ and X.
    unsafe {
        matrixmultiply::dgemm(
            c,
            n,
            c,
            1.0 / (n as f64 - 1.0),
            x.as_ptr(),
            n as isize,
            1,
            x.as_ptr(),
            1,
            n as isize,
            0.0,
            cov.as_mut_ptr(),
            1,
            c as isize,
        );
    }
    cov
}

/// `V diag(max(λ, ε)^p) Vᵀ` for symmetric `m`.
fn spectral_power(m: DMatrix<f64>, p: f64, epsilon: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m);
    let d = eig.eigenvalues.map(|l| l.max(epsilon).powf(p));
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

fn check(f: &FeatureMap, what: &str) -> Result<()> {
    if f.rows() < 2 {
        return Err(Error::Shape(format!(
            "{what} features need at least 2 rows, got {}",
            f.rows()
        )));
    }
    if !f.is_finite() {
        return Err(Error::Numeric(format!(
            "{what} features contain non-finite values"
        )));
    }
    Ok(())
}

/// Whitening-coloring transform.
///
/// Each centred content sample `x` maps to `T x + μs` with `T = Σs^½ Σc^-½`, so the
/// output covariance is `T Σc Tᵀ = Σs` whenever no eigenvalue was floored. The
/// result is blended with the input by `spec.strength`.
pub fn linear_transform(
    content: &FeatureMap,
    style: &FeatureMap,
    spec: &TransformSpec,
) -> Result<FeatureMap> {
    spec.validate()?;
    if content.cols() != style.cols() {
        return Err(Error::Shape(format!(
            "content has {} channels, style has {}",
            content.cols(),
            style.cols()
        )));
    }
    check(content, "content")?;
    check(style, "style")?;
    let alpha = spec.strength;
    if alpha == 0.0 {
        return Ok(content.clone());
    }

    let (_, xc) = centered(content);
    let (mean_s, xs) = centered(style);
    let t = spectral_power(covariance(&xs), 0.5, spec.epsilon)
        * spectral_power(covariance(&xc), -0.5, spec.epsilon);
    // Row form of T x: Y = Xc Tᵀ.
    let y = &xc * t.transpose();

    let (n, c) = (content.rows(), content.cols());
    let mut out = Vec::with_capacity(n * c);
    for i in 0..n {
        let row = content.row(i);
        for k in 0..c {
            let styled = y[(i, k)] + mean_s[k];
            out.push((alpha * styled + (1.0 - alpha) * row[k] as f64) as f32);
        }
    }
    let out = FeatureMap::new(n, c, out)?;
    if !out.is_finite() {
        return Err(Error::Numeric(
            "transform produced non-finite values".into(),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, c: usize, scale: &[f64], seed: u64) -> FeatureMap {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * c)
            .map(|i| {
                let z: f64 = rng.sample(StandardNormal);
                (z * scale[i % c]) as f32
            })
            .collect();
        FeatureMap::new(n, c, data).unwrap()
    }

    #[test]
    fn scalar_variance_ratio() {
        // Two-point samples with variance 4 and 9 exactly.
        let fc = FeatureMap::new(2, 1, vec![-2.0f32.sqrt(), 2.0f32.sqrt()]).unwrap();
        let fs = FeatureMap::new(2, 1, vec![-4.5f32.sqrt(), 4.5f32.sqrt()]).unwrap();
        let out = linear_transform(&fc, &fs, &TransformSpec::default()).unwrap();
        for (o, i) in out.data().iter().zip(fc.data()) {
            assert!((o - 1.5 * i).abs() < 1e-5, "{o} vs {}", 1.5 * i);
        }
    }

    #[test]
    fn matched_statistics_are_fixed() {
        let f = gaussian(500, 4, &[1.0, 2.0, 0.5, 3.0], 7);
        let out = linear_transform(&f, &f, &TransformSpec::default()).unwrap();
        for (a, b) in out.data().iter().zip(f.data()) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn zero_strength_is_exact() {
        let fc = gaussian(50, 3, &[1.0; 3], 1);
        let fs = gaussian(60, 3, &[2.0; 3], 2);
        let spec = TransformSpec {
            strength: 0.0,
            ..Default::default()
        };
        assert_eq!(linear_transform(&fc, &fs, &spec).unwrap(), fc);
    }

    #[test]
    fn output_covariance_matches_style() {
        let fc = gaussian(4000, 3, &[1.0, 0.3, 2.0], 3);
        let mut fs = gaussian(3000, 3, &[1.0, 1.0, 1.0], 4);
        // Correlate the style channels so T is not symmetric.
        for i in 0..fs.rows() {
            let r = fs.row_mut(i);
            r[1] += 0.8 * r[0];
            r[2] += -0.5 * r[1] + 3.0;
        }
        let out = linear_transform(&fc, &fs, &TransformSpec::default()).unwrap();
        let (_, xo) = centered(&out);
        let (ms, xs) = centered(&fs);
        let (mo, _) = centered(&out);
        let diff = covariance(&xo) - covariance(&xs);
        assert!(diff.norm() < 1e-3 * covariance(&xs).norm());
        assert!((mo - ms).norm() < 1e-4);
    }

    #[test]
    fn argument_errors() {
        let a = gaussian(10, 2, &[1.0; 2], 1);
        let b = gaussian(10, 3, &[1.0; 3], 1);
        let spec = TransformSpec::default();
        assert!(matches!(
            linear_transform(&a, &b, &spec),
            Err(Error::Shape(_))
        ));
        let one = FeatureMap::zeros(1, 2);
        assert!(matches!(
            linear_transform(&one, &a, &spec),
            Err(Error::Shape(_))
        ));
        let mut bad = a.clone();
        bad.data_mut()[3] = f32::NAN;
        assert!(matches!(
            linear_transform(&bad, &a, &spec),
            Err(Error::Numeric(_))
        ));
        let strong = TransformSpec {
            strength: 1.5,
            ..spec
        };
        assert!(linear_transform(&a, &a, &strong).is_err());
    }
}
