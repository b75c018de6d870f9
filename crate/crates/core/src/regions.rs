//! Extreme quantile regions for elliptical samples.
//!
//! A region is the closed complement of an open ellipsoid,
//! `{x : ||x - center||_shape >= radius}` with `||u||_A = sqrt(u^T A^{-1} u)`.
//! The estimator plugs location/scatter estimates into the Mahalanobis
//! residuals and extrapolates their tail quantile; with the true parameters
//! the residuals coincide with the generating variate draws.

use crate::error::{Error, Result};
use crate::evt::{extreme_quantile, OrderedSample, QuantileQuery};
use crate::linalg::{mahalanobis_norm, sym_eigen, Matrix, SpdMatrix};
use crate::models::EllipticalModel;
use crate::rng::SimRng;

/// Tolerance for the det = 1 convention on estimated/transformed shapes.
const DET_ONE_TOL: f64 = 1e-8;

/// Location estimate plus det-normalized scatter estimate.
#[derive(Clone, Debug)]
pub struct LocationScatter {
    pub mu_hat: Vec<f64>,
    pub sigma_hat: SpdMatrix,
}

/// Ellipsoid-complement quantile region (closed boundary).
#[derive(Clone, Debug)]
pub struct QuantileRegion {
    pub center: Vec<f64>,
    pub shape: SpdMatrix,
    pub radius: f64,
}

impl QuantileRegion {
    pub fn new(center: Vec<f64>, shape: SpdMatrix, radius: f64) -> Result<Self> {
        if center.len() != shape.dim() {
            return Err(Error::DimensionMismatch {
                expected: shape.dim(),
                got: center.len(),
            });
        }
        let det = shape.determinant();
        if (det - 1.0).abs() > DET_ONE_TOL {
            return Err(Error::DeterminantNotOne { det });
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument {
                reason: format!("region radius must be positive, got {radius}"),
            });
        }
        Ok(Self {
            center,
            shape,
            radius,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Membership test; the boundary belongs to the region.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(mahalanobis_norm(x, &self.center, &self.shape)? >= self.radius)
    }
}

/// Sample mean and det-normalized sample covariance (1/(n-1) divisor).
///
/// This is the shipped location/scatter pair; robust alternatives can be
/// slotted in behind the same signature since downstream code only consumes
/// `LocationScatter`.
pub fn estimate_location_scatter(data: &[Vec<f64>]) -> Result<LocationScatter> {
    let n = data.len();
    if n == 0 {
        return Err(Error::TooFewObservations { needed: 2, got: 0 });
    }
    let d = data[0].len();
    if n <= d {
        return Err(Error::TooFewObservations {
            needed: d + 1,
            got: n,
        });
    }
    for row in data {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
    }
    let mut mu = vec![0.0; d];
    for row in data {
        for (m, x) in mu.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in mu.iter_mut() {
        *m /= n as f64;
    }
    let mut cov = vec![0.0; d * d];
    for row in data {
        for i in 0..d {
            let di = row[i] - mu[i];
            for j in i..d {
                cov[i * d + j] += di * (row[j] - mu[j]);
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in i..d {
            cov[i * d + j] /= denom;
            cov[j * d + i] = cov[i * d + j];
        }
    }
    let sigma = SpdMatrix::new(d, cov).map_err(|_| Error::SingularCovariance)?;
    Ok(LocationScatter {
        mu_hat: mu,
        sigma_hat: sigma.det_normalized(),
    })
}

/// Mahalanobis residuals `||X_i - mu_hat||_{sigma_hat}` for every point.
pub fn residuals(data: &[Vec<f64>], ls: &LocationScatter) -> Result<Vec<f64>> {
    let d = ls.sigma_hat.dim();
    if ls.mu_hat.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: ls.mu_hat.len(),
        });
    }
    let w = ls.sigma_hat.whitening_rows();
    let mut out = Vec::with_capacity(data.len());
    let mut diff = vec![0.0; d];
    for row in data {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        for i in 0..d {
            diff[i] = row[i] - ls.mu_hat[i];
        }
        let wx = w.mul_vec(&diff)?;
        out.push(wx.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    Ok(out)
}

/// Plug-in extreme quantile region: estimated center/shape with the
/// extrapolated tail quantile of the residuals as radius.
pub fn estimate_region(data: &[Vec<f64>], k: usize, p: f64) -> Result<QuantileRegion> {
    let ls = estimate_location_scatter(data)?;
    let res = residuals(data, &ls)?;
    let ordered = OrderedSample::new(res)?;
    let radius = extreme_quantile(&ordered, &QuantileQuery { k, p })?;
    QuantileRegion::new(ls.mu_hat, ls.sigma_hat, radius)
}

/// Simpler region for very short tails: radius is the largest residual.
pub fn max_region(data: &[Vec<f64>]) -> Result<QuantileRegion> {
    let ls = estimate_location_scatter(data)?;
    let res = residuals(data, &ls)?;
    let radius = res.iter().fold(0.0f64, |m, &x| m.max(x));
    QuantileRegion::new(ls.mu_hat, ls.sigma_hat, radius)
}

/// Oracle region of tail mass p: radius is the generator quantile at 1/p.
/// Valid only below the model's declared representation threshold.
pub fn true_region(model: &EllipticalModel, p: f64) -> Result<QuantileRegion> {
    let threshold = model.generator.region_p_threshold();
    if !(p > 0.0 && p <= threshold) {
        return Err(Error::InvalidP { p, threshold });
    }
    let radius = model.generator.quantile_from_tail(p);
    QuantileRegion::new(model.mu.clone(), model.sigma.clone(), radius)
}

/// Image of a region under `x -> A x + b`, with the shape renormalized to
/// det 1 and the radius compensated so the point set stays identical.
pub fn affine_transform_region(
    region: &QuantileRegion,
    a: &Matrix,
    b: &[f64],
) -> Result<QuantileRegion> {
    let d = region.dim();
    if a.dim() != d || b.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if a.dim() != d { a.dim() } else { b.len() },
        });
    }
    let raw = a
        .matmul(&region.shape.as_matrix())?
        .matmul(&a.transpose())?;
    let raw_spd =
        SpdMatrix::new(d, raw.entries().to_vec()).map_err(|_| Error::SingularTransform)?;
    let det_raw = raw_spd.determinant();
    let det_old = region.shape.determinant();
    let factor = (det_raw / det_old).powf(1.0 / (2.0 * d as f64));
    let center = a
        .mul_vec(&region.center)?
        .iter()
        .zip(b)
        .map(|(x, y)| x + y)
        .collect();
    QuantileRegion::new(center, raw_spd.det_normalized(), region.radius * factor)
}

/// Monte Carlo estimate of the mass of a symmetric difference.
#[derive(Clone, Copy, Debug)]
pub struct SymDiffEstimate {
    pub probability: f64,
    pub standard_error: f64,
    /// Radial threshold the draws were conditioned on.
    pub threshold: f64,
    /// True tail mass above the threshold.
    pub tail_mass: f64,
    pub draws: usize,
}

/// Smallest possible truth-norm of any point of the region, from the
/// eigenvalue bound `||u||_sigma >= sqrt(lam_min) ||u||_shape` and the
/// triangle inequality for the center offset. Never above the true value.
fn region_min_truth_norm(region: &QuantileRegion, truth: &EllipticalModel) -> Result<f64> {
    let d = truth.dim();
    let root = region.shape.sqrt().as_matrix();
    let inv = truth.sigma.inverse().as_matrix();
    let m = root.matmul(&inv)?.matmul(&root)?;
    // symmetrize fp noise before the eigensolver
    let mut sym = m.entries().to_vec();
    for i in 0..d {
        for j in (i + 1)..d {
            let avg = 0.5 * (sym[i * d + j] + sym[j * d + i]);
            sym[i * d + j] = avg;
            sym[j * d + i] = avg;
        }
    }
    let eig = sym_eigen(d, &sym)?;
    let lam_min = eig.eigenvalues().last().copied().unwrap_or(0.0).max(0.0);
    let offset = mahalanobis_norm(&region.center, &truth.mu, &truth.sigma)?;
    Ok(lam_min.sqrt() * region.radius - offset)
}

/// Estimates `P(X in A (xor) B)` under the true elliptical law by
/// conditioning the radial variate on a tail threshold.
///
/// The threshold is the larger of the support minimum and the smaller of:
/// the quantile carrying 100x the smaller region's (bounded) tail mass, and
/// each region's minimum truth-norm. The last clause keeps the conditioning
/// below every point of both regions, so the conditional estimator stays
/// unbiased even for regions that reach far from the truth center; when a
/// region dips to the support minimum this degrades to plain Monte Carlo.
pub fn sym_diff_probability(
    region_a: &QuantileRegion,
    region_b: &QuantileRegion,
    truth: &EllipticalModel,
    n_mc: usize,
    rng: &mut SimRng,
) -> Result<SymDiffEstimate> {
    if n_mc < 1_000 {
        return Err(Error::InvalidArgument {
            reason: format!("sym_diff_probability needs n_mc >= 1000, got {n_mc}"),
        });
    }
    let d = truth.dim();
    if region_a.dim() != d || region_b.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if region_a.dim() != d {
                region_a.dim()
            } else {
                region_b.dim()
            },
        });
    }
    let gen = &truth.generator;
    let support_min = gen.support_min();

    let bound_a = region_min_truth_norm(region_a, truth)?;
    let bound_b = region_min_truth_norm(region_b, truth)?;
    let mass_a = gen.survival(bound_a.max(support_min));
    let mass_b = gen.survival(bound_b.max(support_min));
    let p_ref = mass_a.min(mass_b);

    let r0 = if p_ref >= 0.01 {
        support_min
    } else {
        let target = (100.0 * p_ref).min(1.0);
        gen.quantile_from_tail(target)
            .min(bound_a)
            .min(bound_b)
            .max(support_min)
    };
    let tail_mass = gen.survival(r0);
    if tail_mass <= 1e-15 {
        // neither region carries mass under the truth
        return Ok(SymDiffEstimate {
            probability: 0.0,
            standard_error: 0.0,
            threshold: r0,
            tail_mass: 0.0,
            draws: 0,
        });
    }

    let radii = gen.conditional_tail_sample(r0, n_mc, rng)?;
    let root = truth.sigma.sqrt().as_matrix();
    let w_a = region_a.shape.whitening_rows();
    let w_b = region_b.shape.whitening_rows();

    let mut hits = 0usize;
    let mut gauss = vec![0.0; d];
    let mut x = vec![0.0; d];
    let mut diff = vec![0.0; d];
    for &r in &radii {
        let s: Vec<f64> = loop {
            rng.fill_normal(&mut gauss);
            let norm = gauss.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break gauss.iter().map(|g| g / norm).collect();
            }
        };
        let dir = root.mul_vec(&s)?;
        for i in 0..d {
            x[i] = truth.mu[i] + r * dir[i];
        }
        for i in 0..d {
            diff[i] = x[i] - region_a.center[i];
        }
        let na = norm2(&w_a.mul_vec(&diff)?);
        for i in 0..d {
            diff[i] = x[i] - region_b.center[i];
        }
        let nb = norm2(&w_b.mul_vec(&diff)?);
        let in_a = na >= region_a.radius;
        let in_b = nb >= region_b.radius;
        if in_a != in_b {
            hits += 1;
        }
    }
    let mean = hits as f64 / n_mc as f64;
    let se = tail_mass * (mean * (1.0 - mean) / n_mc as f64).sqrt();
    Ok(SymDiffEstimate {
        probability: tail_mass * mean,
        standard_error: se,
        threshold: r0,
        tail_mass,
        draws: n_mc,
    })
}

#[inline]
fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::TailModel;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    fn cross_points() -> Vec<Vec<f64>> {
        let mut pts = Vec::new();
        for _ in 0..2 {
            pts.push(vec![1.0, 0.0]);
            pts.push(vec![-1.0, 0.0]);
            pts.push(vec![0.0, 1.0]);
            pts.push(vec![0.0, -1.0]);
        }
        pts
    }

    #[test]
    fn location_scatter_hand_case() {
        let ls = estimate_location_scatter(&cross_points()).unwrap();
        assert!(ls.mu_hat.iter().all(|&m| m.abs() < 1e-15));
        // covariance is proportional to the identity, so sigma_hat = I
        assert!(rel(ls.sigma_hat.get(0, 0), 1.0) < 1e-12);
        assert!(rel(ls.sigma_hat.get(1, 1), 1.0) < 1e-12);
        assert!(ls.sigma_hat.get(0, 1).abs() < 1e-12);
        assert!((ls.sigma_hat.determinant() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn location_scatter_translation_equivariant() {
        let pts = cross_points();
        let shifted: Vec<Vec<f64>> = pts.iter().map(|p| vec![p[0] + 3.5, p[1] - 1.25]).collect();
        let a = estimate_location_scatter(&pts).unwrap();
        let b = estimate_location_scatter(&shifted).unwrap();
        assert!((b.mu_hat[0] - a.mu_hat[0] - 3.5).abs() < 1e-12);
        assert!((b.mu_hat[1] - a.mu_hat[1] + 1.25).abs() < 1e-12);
        for i in 0..4 {
            assert!((a.sigma_hat.entries()[i] - b.sigma_hat.entries()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn location_scatter_needs_more_points_than_dims() {
        let err = estimate_location_scatter(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap_err();
        assert!(matches!(err, Error::TooFewObservations { .. }));
    }

    #[test]
    fn singular_covariance_detected() {
        // all points on a line
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        assert_eq!(
            estimate_location_scatter(&pts).unwrap_err(),
            Error::SingularCovariance
        );
    }

    #[test]
    fn residual_zero_at_center() {
        let pts = cross_points();
        let ls = estimate_location_scatter(&pts).unwrap();
        let r = residuals(std::slice::from_ref(&ls.mu_hat), &ls).unwrap();
        assert_eq!(r[0], 0.0);
    }

    #[test]
    fn estimate_region_dn_one_takes_order_statistic() {
        // 32 points at distinct radii spread over angles; p = k/n = 1/8 is
        // exactly representable, so d_n is exactly 1.
        let pts: Vec<Vec<f64>> = (0..32)
            .map(|i| {
                let r = 1.0 + 0.37 * i as f64;
                let theta = 2.399963229728653 * i as f64;
                vec![r * theta.cos(), r * theta.sin()]
            })
            .collect();
        let n = pts.len();
        let k = 4;
        let p = k as f64 / n as f64;
        let region = estimate_region(&pts, k, p).unwrap();
        let ls = estimate_location_scatter(&pts).unwrap();
        let mut res = residuals(&pts, &ls).unwrap();
        res.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(region.radius, res[n - 1 - k]);
    }

    #[test]
    fn max_region_radius_is_max_residual() {
        let pts = cross_points();
        let region = max_region(&pts).unwrap();
        let ls = estimate_location_scatter(&pts).unwrap();
        let res = residuals(&pts, &ls).unwrap();
        let max = res.iter().fold(0.0f64, |m, &x| m.max(x));
        assert_eq!(region.radius, max);
    }

    #[test]
    fn true_region_oracle_radii() {
        let m = EllipticalModel::new(
            vec![0.0, 0.0],
            SpdMatrix::identity(2),
            TailModel::pareto(1.0).unwrap(),
        )
        .unwrap();
        let region = true_region(&m, 1e-3).unwrap();
        assert!(rel(region.radius, 1e3) < 1e-12);

        let b = EllipticalModel::new(
            vec![0.0, 0.0],
            SpdMatrix::identity(2),
            TailModel::bounded(2.0, -0.5).unwrap(),
        )
        .unwrap();
        // p = 1/4 sits above the representation threshold by design
        assert!(matches!(
            true_region(&b, 0.25).unwrap_err(),
            Error::InvalidP { .. }
        ));
        let region = true_region(&b, 0.05).unwrap();
        assert!(rel(region.radius, 2.0 - 0.05f64.powf(0.5)) < 1e-12);
    }

    #[test]
    fn contains_cases() {
        let region = QuantileRegion::new(vec![0.0, 0.0], SpdMatrix::identity(2), 1.0).unwrap();
        assert!(!region.contains(&[0.0, 0.0]).unwrap());
        assert!(region.contains(&[2.0, 0.0]).unwrap());
        // closed boundary
        assert!(region.contains(&[1.0, 0.0]).unwrap());
    }

    #[test]
    fn affine_identity_is_noop() {
        let region = QuantileRegion::new(vec![0.5, -0.5], SpdMatrix::identity(2), 2.0).unwrap();
        let t = affine_transform_region(&region, &Matrix::identity(2), &[0.0, 0.0]).unwrap();
        assert_eq!(t.center, region.center);
        assert!(rel(t.radius, region.radius) < 1e-12);
        for i in 0..4 {
            assert!((t.shape.entries()[i] - region.shape.entries()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_orthogonal_preserves_identity_shape() {
        let region = QuantileRegion::new(vec![0.0, 0.0], SpdMatrix::identity(2), 1.5).unwrap();
        let theta: f64 = 0.7;
        let rot =
            Matrix::new(2, vec![theta.cos(), -theta.sin(), theta.sin(), theta.cos()]).unwrap();
        let t = affine_transform_region(&region, &rot, &[0.0, 0.0]).unwrap();
        assert!(rel(t.radius, 1.5) < 1e-12);
        assert!((t.shape.get(0, 0) - 1.0).abs() < 1e-10);
        assert!((t.shape.get(1, 1) - 1.0).abs() < 1e-10);
        assert!(t.shape.get(0, 1).abs() < 1e-10);
    }

    #[test]
    fn affine_singular_transform_rejected() {
        let region = QuantileRegion::new(vec![0.0, 0.0], SpdMatrix::identity(2), 1.0).unwrap();
        let singular = Matrix::new(2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(
            affine_transform_region(&region, &singular, &[0.0, 0.0]).unwrap_err(),
            Error::SingularTransform
        );
    }

    #[test]
    fn sym_diff_identical_regions_is_exactly_zero() {
        let truth = EllipticalModel::new(
            vec![0.0, 0.0],
            SpdMatrix::identity(2),
            TailModel::pareto(2.0).unwrap(),
        )
        .unwrap();
        let region = true_region(&truth, 0.01).unwrap();
        let est =
            sym_diff_probability(&region, &region, &truth, 10_000, &mut SimRng::new(1)).unwrap();
        assert_eq!(est.probability, 0.0);
        assert_eq!(est.standard_error, 0.0);
    }

    #[test]
    fn sym_diff_concentric_annulus_matches_cdf_difference() {
        let gen = TailModel::pareto(2.0).unwrap();
        let truth = EllipticalModel::new(vec![0.0, 0.0], SpdMatrix::identity(2), gen).unwrap();
        let r_b = gen.quantile_from_tail(1e-3);
        let r_a = gen.quantile_from_tail(2e-4);
        let a = QuantileRegion::new(vec![0.0, 0.0], SpdMatrix::identity(2), r_a).unwrap();
        let b = QuantileRegion::new(vec![0.0, 0.0], SpdMatrix::identity(2), r_b).unwrap();
        let est = sym_diff_probability(&a, &b, &truth, 200_000, &mut SimRng::new(9)).unwrap();
        let expect = gen.cdf(r_a) - gen.cdf(r_b); // = 8e-4
        assert!(
            (est.probability - expect).abs() <= 3.0 * est.standard_error.max(1e-12),
            "got {} expected {} (se {})",
            est.probability,
            expect,
            est.standard_error
        );
    }

    #[test]
    fn sym_diff_far_shifted_center_reaches_complement_masses() {
        // Complements become disjoint: XOR mass -> P(A^c) + P(B^c) around 1.
        let gen = TailModel::pareto(2.0).unwrap();
        let truth = EllipticalModel::new(vec![0.0, 0.0], SpdMatrix::identity(2), gen).unwrap();
        let p_a = 1e-5;
        let r = gen.quantile_from_tail(p_a);
        let a = QuantileRegion::new(vec![0.0, 0.0], SpdMatrix::identity(2), r).unwrap();
        let b = QuantileRegion::new(vec![1e9, 0.0], SpdMatrix::identity(2), r).unwrap();
        let est = sym_diff_probability(&a, &b, &truth, 200_000, &mut SimRng::new(4)).unwrap();
        // P(A xor B) = (1 - p_a) + P(B^c) with P(B^c) negligible
        let expect = 1.0 - p_a;
        assert!(
            (est.probability - expect).abs() <= 3.0 * est.standard_error + 1e-4,
            "got {} expected {} (se {})",
            est.probability,
            expect,
            est.standard_error
        );
    }

    #[test]
    fn sym_diff_symmetric_in_arguments_with_same_seed() {
        let gen = TailModel::frechet(3.0).unwrap();
        let truth = EllipticalModel::new(vec![0.0, 0.0], SpdMatrix::identity(2), gen).unwrap();
        let a = QuantileRegion::new(
            vec![0.1, 0.0],
            SpdMatrix::identity(2),
            gen.quantile_from_tail(1e-3),
        )
        .unwrap();
        let b = QuantileRegion::new(
            vec![0.0, 0.1],
            SpdMatrix::identity(2),
            gen.quantile_from_tail(8e-4),
        )
        .unwrap();
        let ab = sym_diff_probability(&a, &b, &truth, 50_000, &mut SimRng::new(6)).unwrap();
        let ba = sym_diff_probability(&b, &a, &truth, 50_000, &mut SimRng::new(6)).unwrap();
        assert_eq!(ab.probability, ba.probability);
    }
}
