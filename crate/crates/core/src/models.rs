//! Reference tail distributions with closed-form quantile, CDF, sampler, and
//! known first/second-order tail behavior, plus sphere and elliptical samplers.
//!
//! Each model knows its tail quantile `U(t) = F^{-1}(1 - 1/t)`, its scale
//! function `a(t)`, its extreme value index gamma, and a second-order rate
//! `A(t)` where one exists. Pareto, exponential, and the bounded model are
//! *exact*: their quantile satisfies the first-order expansion with no
//! remainder, recorded as `rho = -inf`. A genuinely finite second order is
//! available through the Frechet family (`rho = -1`).

use crate::error::{Error, Result};
use crate::linalg::SpdMatrix;
use crate::rng::SimRng;

/// Conservative level below which the ellipsoid-complement representation of
/// quantile regions is declared valid for every shipped generator.
const REGION_P_THRESHOLD: f64 = 0.05;

/// Tolerance for the det(Sigma) = 1 identifiability convention.
const DET_ONE_TOL: f64 = 1e-8;

/// A reference distribution for the generating variate / univariate tail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailModel {
    /// `F(x) = 1 - x^{-alpha}` on [1, inf); `U(t) = t^{1/alpha}`, exact.
    Pareto { alpha: f64 },
    /// `F(x) = exp(-x^{-alpha})` on (0, inf); gamma = 1/alpha, rho = -1.
    Frechet { alpha: f64 },
    /// `F(x) = 1 - exp(-rate x)` on (0, inf); gamma = 0, exact.
    Exponential { rate: f64 },
    /// `U(t) = endpoint - t^{gamma}` with gamma < 0, exact; support
    /// (endpoint - 1, endpoint).
    Bounded { endpoint: f64, gamma: f64 },
}

impl TailModel {
    pub fn pareto(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter {
                reason: format!("pareto alpha must be positive, got {alpha}"),
            });
        }
        Ok(Self::Pareto { alpha })
    }

    pub fn frechet(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter {
                reason: format!("frechet alpha must be positive, got {alpha}"),
            });
        }
        Ok(Self::Frechet { alpha })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter {
                reason: format!("exponential rate must be positive, got {rate}"),
            });
        }
        Ok(Self::Exponential { rate })
    }

    pub fn bounded(endpoint: f64, gamma: f64) -> Result<Self> {
        if !(endpoint > 1.0 && endpoint.is_finite()) {
            return Err(Error::InvalidParameter {
                reason: format!("bounded endpoint must exceed 1, got {endpoint}"),
            });
        }
        if !(gamma < 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter {
                reason: format!("bounded gamma must be negative, got {gamma}"),
            });
        }
        Ok(Self::Bounded { endpoint, gamma })
    }

    pub fn name(&self) -> String {
        match self {
            Self::Pareto { alpha } => format!("pareto({alpha})"),
            Self::Frechet { alpha } => format!("frechet({alpha})"),
            Self::Exponential { rate } => format!("exponential({rate})"),
            Self::Bounded { endpoint, gamma } => format!("bounded({endpoint},{gamma})"),
        }
    }

    /// True extreme value index.
    pub fn gamma(&self) -> f64 {
        match self {
            Self::Pareto { alpha } | Self::Frechet { alpha } => 1.0 / alpha,
            Self::Exponential { .. } => 0.0,
            Self::Bounded { gamma, .. } => *gamma,
        }
    }

    /// Second-order parameter; `-inf` marks an exact first-order model.
    pub fn rho(&self) -> f64 {
        match self {
            Self::Frechet { .. } => -1.0,
            _ => f64::NEG_INFINITY,
        }
    }

    pub fn right_endpoint(&self) -> f64 {
        match self {
            Self::Bounded { endpoint, .. } => *endpoint,
            _ => f64::INFINITY,
        }
    }

    /// Infimum of the support.
    pub fn support_min(&self) -> f64 {
        match self {
            Self::Pareto { .. } => 1.0,
            Self::Frechet { .. } | Self::Exponential { .. } => 0.0,
            Self::Bounded { endpoint, .. } => endpoint - 1.0,
        }
    }

    /// Largest p for which the ellipsoid-complement region representation is
    /// declared valid (conservative, shared by all shipped models).
    pub fn region_p_threshold(&self) -> f64 {
        REGION_P_THRESHOLD
    }

    /// Tail quantile `U(t) = F^{-1}(1 - 1/t)`, t > 1.
    pub fn quantile(&self, t: f64) -> f64 {
        self.quantile_from_tail(1.0 / t)
    }

    /// Quantile expressed through the tail mass q = 1/t; numerically exact
    /// deep in the tail.
    pub fn quantile_from_tail(&self, q: f64) -> f64 {
        match self {
            Self::Pareto { alpha } => q.powf(-1.0 / alpha),
            Self::Frechet { alpha } => (-(-q).ln_1p()).powf(-1.0 / alpha),
            Self::Exponential { rate } => -q.ln() / rate,
            Self::Bounded { endpoint, gamma } => endpoint - q.powf(-gamma),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        1.0 - self.survival(x)
    }

    /// `P(X > x)` in closed form.
    pub fn survival(&self, x: f64) -> f64 {
        match self {
            Self::Pareto { alpha } => {
                if x <= 1.0 {
                    1.0
                } else {
                    x.powf(-alpha)
                }
            }
            Self::Frechet { alpha } => {
                if x <= 0.0 {
                    1.0
                } else {
                    -(-x.powf(-alpha)).exp_m1()
                }
            }
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            Self::Bounded { endpoint, gamma } => {
                if x <= endpoint - 1.0 {
                    1.0
                } else if x >= *endpoint {
                    0.0
                } else {
                    (endpoint - x).powf(-1.0 / gamma)
                }
            }
        }
    }

    /// Scale function a(t) paired with U(t) in the tail expansion. For the
    /// Frechet family this is the second-order-exact choice
    /// `a(t) = g t^g (1 - ((g-1)/2)/t)`.
    pub fn scale(&self, t: f64) -> f64 {
        match self {
            Self::Pareto { alpha } => {
                let g = 1.0 / alpha;
                g * t.powf(g)
            }
            Self::Frechet { alpha } => {
                let g = 1.0 / alpha;
                g * t.powf(g) * (1.0 - 0.5 * (g - 1.0) / t)
            }
            Self::Exponential { rate } => 1.0 / rate,
            Self::Bounded { gamma, .. } => -gamma * t.powf(*gamma),
        }
    }

    /// Inverse-transform sampling: `X = U(1/(1 - u))` with u clamped away
    /// from both endpoints. Reproducible given the generator state.
    pub fn sample(&self, n: usize, rng: &mut SimRng) -> Vec<f64> {
        (0..n)
            .map(|_| {
                let u = rng.next_unit_clamped();
                self.quantile_from_tail(1.0 - u)
            })
            .collect()
    }

    /// Draws from the law of `X | X > threshold` by restricting the tail mass.
    /// A threshold below the support behaves exactly like `sample`.
    pub fn conditional_tail_sample(
        &self,
        threshold: f64,
        n: usize,
        rng: &mut SimRng,
    ) -> Result<Vec<f64>> {
        let tail = self.survival(threshold);
        if tail <= 1e-15 {
            return Err(Error::ThresholdAtEndpoint { threshold });
        }
        Ok((0..n)
            .map(|_| {
                let u = rng.next_unit_clamped();
                self.quantile_from_tail(tail * (1.0 - u))
            })
            .collect())
    }

    /// Second-order oracle for this model; every shipped model declares one.
    pub fn second_order_oracle(&self) -> Result<SecondOrderOracle> {
        let gamma = self.gamma();
        let rho = self.rho();
        let (branch, rho_prime) = match self {
            // Exact in log scale as well: ln U(t) = gamma ln t, so Q vanishes
            // identically and no second-order parameter exists.
            Self::Pareto { .. } => (QBranch::HillGap, f64::NEG_INFINITY),
            // rho < gamma <= 0 cases of the selection table.
            Self::Exponential { .. } | Self::Bounded { .. } => (QBranch::HillGap, gamma),
            Self::Frechet { .. } => {
                if gamma > -rho {
                    // gamma > -rho > 0
                    (QBranch::ScaledRate, rho)
                } else if gamma == -rho {
                    (QBranch::HillGap, rho)
                } else {
                    // 0 < gamma < -rho with l = lim U(t) - a(t)/gamma = 0,
                    // verified numerically and frozen in the oracle tests.
                    (QBranch::ScaledRate, rho)
                }
            }
        };
        Ok(SecondOrderOracle {
            model: *self,
            branch,
            rho_prime,
        })
    }
}

/// Which case of the selection table the oracle's Q function follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QBranch {
    /// Q(t) = A(t).
    Rate,
    /// Q(t) = gamma_+ - a(t)/U(t).
    HillGap,
    /// Q(t) = rho/(gamma + rho) * A(t).
    ScaledRate,
}

/// Closed-form second-order data for a shipped model: the scale a(t), the
/// second-order rate A(t), and the log-scale rate Q(t) with its index rho'.
#[derive(Clone, Copy, Debug)]
pub struct SecondOrderOracle {
    model: TailModel,
    branch: QBranch,
    pub rho_prime: f64,
}

impl SecondOrderOracle {
    pub fn branch(&self) -> QBranch {
        self.branch
    }

    pub fn scale(&self, t: f64) -> f64 {
        self.model.scale(t)
    }

    /// Second-order rate A(t); identically zero for exact models.
    pub fn second_order_rate(&self, t: f64) -> f64 {
        match self.model {
            TailModel::Frechet { alpha } => {
                let g = 1.0 / alpha;
                0.5 * (g - 1.0) / t
            }
            _ => 0.0,
        }
    }

    /// The auxiliary rate for the log-scale expansion.
    pub fn q(&self, t: f64) -> f64 {
        let gamma = self.model.gamma();
        match self.branch {
            QBranch::Rate => self.second_order_rate(t),
            QBranch::HillGap => gamma.max(0.0) - self.scale(t) / self.model.quantile(t),
            QBranch::ScaledRate => {
                let rho = self.model.rho();
                rho / (gamma + rho) * self.second_order_rate(t)
            }
        }
    }
}

/// n points uniform on the unit sphere in R^d, by normalizing Gaussians.
pub fn sphere_sample(d: usize, n: usize, rng: &mut SimRng) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut buf = vec![0.0; d];
    for _ in 0..n {
        loop {
            rng.fill_normal(&mut buf);
            let norm = buf.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                out.push(buf.iter().map(|x| x / norm).collect());
                break;
            }
        }
    }
    out
}

/// Elliptical law `X = mu + R Sigma^{1/2} S`: location, det-1 scatter, and a
/// generating variate for the radial part.
#[derive(Clone, Debug)]
pub struct EllipticalModel {
    pub mu: Vec<f64>,
    pub sigma: SpdMatrix,
    pub generator: TailModel,
}

impl EllipticalModel {
    /// Enforces the identifiability convention det(Sigma) = 1 (within 1e-8).
    pub fn new(mu: Vec<f64>, sigma: SpdMatrix, generator: TailModel) -> Result<Self> {
        if mu.len() != sigma.dim() {
            return Err(Error::DimensionMismatch {
                expected: sigma.dim(),
                got: mu.len(),
            });
        }
        let det = sigma.determinant();
        if (det - 1.0).abs() > DET_ONE_TOL {
            return Err(Error::DeterminantNotOne { det });
        }
        Ok(Self {
            mu,
            sigma,
            generator,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Draws `X_i = mu + R_i Sigma^{1/2} S_i`. Per point the radial variate
    /// is drawn first, then the sphere direction; the order is part of the
    /// reproducibility contract.
    pub fn sample(&self, n: usize, rng: &mut SimRng) -> Vec<Vec<f64>> {
        self.sample_with_radii(n, rng).0
    }

    /// Like [`sample`](Self::sample) but also returns the radial draws R_i,
    /// whose values the true-parameter Mahalanobis norms reproduce.
    pub fn sample_with_radii(&self, n: usize, rng: &mut SimRng) -> (Vec<Vec<f64>>, Vec<f64>) {
        let d = self.dim();
        let root = self.sigma.sqrt();
        let root = root.as_matrix();
        let mut out = Vec::with_capacity(n);
        let mut radii = Vec::with_capacity(n);
        let mut gauss = vec![0.0; d];
        for _ in 0..n {
            let u = rng.next_unit_clamped();
            let r = self.generator.quantile_from_tail(1.0 - u);
            let s = loop {
                rng.fill_normal(&mut gauss);
                let norm = gauss.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    break gauss.iter().map(|x| x / norm).collect::<Vec<f64>>();
                }
            };
            let dir = root.mul_vec(&s).expect("dims agree");
            out.push(
                (0..d)
                    .map(|i| self.mu[i] + r * dir[i])
                    .collect::<Vec<f64>>(),
            );
            radii.push(r);
        }
        (out, radii)
    }
}
