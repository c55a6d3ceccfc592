//! Centered noise laws with analytic moment metadata.
//!
//! Each model reports its variance bound `σ²`, the largest integer moment
//! order `q_max` that is finite, and the moment constant `Q` bounding
//! `E|ε|^q` for admissible `q`. The Student-t and Pareto models are the
//! heavy-tailed laws: only finitely many absolute moments exist.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{ChiSquared, Distribution, Pareto, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::stream::StreamKey;

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("infinite variance: {0}")]
    InfiniteVariance(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("absolute moment of order {q} diverges for {model}")]
    MomentDiverges { q: u32, model: String },
}

/// Largest integer moment order with a finite absolute moment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QMax {
    Finite(u32),
    Infinite,
}

impl QMax {
    /// True when order `q` has a finite absolute moment.
    pub fn admits(&self, q: u32) -> bool {
        match *self {
            QMax::Finite(m) => q <= m,
            QMax::Infinite => true,
        }
    }
}

/// A centered noise law.
///
/// The Pareto law is shifted by its analytic mean so that all models
/// satisfy `E[ε] = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    Gaussian { variance: f64 },
    StudentT { df: f64 },
    ParetoCentered { shape: f64, scale: f64 },
}

impl NoiseModel {
    pub fn gaussian(variance: f64) -> Result<Self, NoiseError> {
        let m = NoiseModel::Gaussian { variance };
        m.validate()?;
        Ok(m)
    }

    pub fn student_t(df: f64) -> Result<Self, NoiseError> {
        let m = NoiseModel::StudentT { df };
        m.validate()?;
        Ok(m)
    }

    pub fn pareto_centered(shape: f64, scale: f64) -> Result<Self, NoiseError> {
        let m = NoiseModel::ParetoCentered { shape, scale };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        match *self {
            NoiseModel::Gaussian { variance } => {
                if !(variance > 0.0) || !variance.is_finite() {
                    return Err(NoiseError::InvalidParameter(format!(
                        "gaussian variance must be positive and finite, got {variance}"
                    )));
                }
            }
            NoiseModel::StudentT { df } => {
                if !df.is_finite() || df <= 0.0 {
                    return Err(NoiseError::InvalidParameter(format!(
                        "student_t df must be positive, got {df}"
                    )));
                }
                if df <= 2.0 {
                    return Err(NoiseError::InfiniteVariance(format!(
                        "student_t requires df > 2, got {df}"
                    )));
                }
            }
            NoiseModel::ParetoCentered { shape, scale } => {
                if !(scale > 0.0) || !scale.is_finite() {
                    return Err(NoiseError::InvalidParameter(format!(
                        "pareto scale must be positive, got {scale}"
                    )));
                }
                if !shape.is_finite() || shape <= 0.0 {
                    return Err(NoiseError::InvalidParameter(format!(
                        "pareto shape must be positive, got {shape}"
                    )));
                }
                if shape <= 2.0 {
                    return Err(NoiseError::InfiniteVariance(format!(
                        "pareto_centered requires shape > 2, got {shape}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Stable label used in stream keys and CSV output.
    pub fn label(&self) -> String {
        match *self {
            NoiseModel::Gaussian { variance } => format!("gaussian(var={variance})"),
            NoiseModel::StudentT { df } => format!("student_t(df={df})"),
            NoiseModel::ParetoCentered { shape, scale } => {
                format!("pareto(shape={shape};scale={scale})")
            }
        }
    }

    /// Analytic variance.
    pub fn sigma2(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian { variance } => variance,
            NoiseModel::StudentT { df } => df / (df - 2.0),
            NoiseModel::ParetoCentered { shape, scale } => {
                shape * scale * scale / ((shape - 1.0) * (shape - 1.0) * (shape - 2.0))
            }
        }
    }

    /// Largest integer `q` with `E|ε|^q < ∞`.
    pub fn q_max(&self) -> QMax {
        match *self {
            NoiseModel::Gaussian { .. } => QMax::Infinite,
            NoiseModel::StudentT { df } => QMax::Finite(largest_order_below(df)),
            NoiseModel::ParetoCentered { shape, .. } => QMax::Finite(largest_order_below(shape)),
        }
    }

    /// The constant `Q = E|ε|^q` for admissible integer `q`.
    pub fn q_bound(&self, q: u32) -> Result<f64, NoiseError> {
        if q == 0 {
            return Ok(1.0);
        }
        if !self.q_max().admits(q) {
            return Err(NoiseError::MomentDiverges { q, model: self.label() });
        }
        Ok(match *self {
            NoiseModel::Gaussian { variance } => gaussian_abs_moment(variance.sqrt(), q),
            NoiseModel::StudentT { df } => student_t_abs_moment(df, q),
            NoiseModel::ParetoCentered { shape, scale } => {
                pareto_centered_abs_moment(shape, scale, q)
            }
        })
    }

    /// Packaged moment metadata `(σ², q_max, q ↦ Q)`.
    pub fn moments(&self) -> Moments {
        Moments { sigma2: self.sigma2(), q_max: self.q_max(), model: self.clone() }
    }

    /// Sampler drawing from this law on streams derived from `key`.
    pub fn sampler(&self, key: &StreamKey) -> NoiseSampler {
        let imp = match *self {
            NoiseModel::Gaussian { variance } => {
                Imp::Gaussian { sd: variance.sqrt(), rng: key.rng() }
            }
            // Normal / chi-square ratio on two substreams.
            NoiseModel::StudentT { df } => Imp::StudentT {
                df,
                z: key.child("z").rng(),
                chi2: key.child("chi2").rng(),
                chi2_dist: ChiSquared::new(df).expect("validated df"),
            },
            NoiseModel::ParetoCentered { shape, scale } => Imp::Pareto {
                dist: Pareto::new(scale, shape).expect("validated parameters"),
                mean: shape * scale / (shape - 1.0),
                rng: key.rng(),
            },
        };
        NoiseSampler { imp }
    }
}

/// Moment metadata for one noise model.
#[derive(Clone, Debug)]
pub struct Moments {
    pub sigma2: f64,
    pub q_max: QMax,
    model: NoiseModel,
}

impl Moments {
    pub fn q_bound(&self, q: u32) -> Result<f64, NoiseError> {
        self.model.q_bound(q)
    }
}

/// Stateful sampler bound to a deterministic stream.
pub struct NoiseSampler {
    imp: Imp,
}

enum Imp {
    Gaussian { sd: f64, rng: ChaCha12Rng },
    StudentT { df: f64, z: ChaCha12Rng, chi2: ChaCha12Rng, chi2_dist: ChiSquared<f64> },
    Pareto { dist: Pareto<f64>, mean: f64, rng: ChaCha12Rng },
}

impl NoiseSampler {
    pub fn sample(&mut self) -> f64 {
        match &mut self.imp {
            Imp::Gaussian { sd, rng } => *sd * rng.sample::<f64, _>(StandardNormal),
            Imp::StudentT { df, z, chi2, chi2_dist } => {
                let num: f64 = z.sample(StandardNormal);
                let den: f64 = chi2_dist.sample(chi2);
                num / (den / *df).sqrt()
            }
            Imp::Pareto { dist, mean, rng } => dist.sample(rng) - *mean,
        }
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.sample();
        }
    }
}

fn largest_order_below(x: f64) -> u32 {
    // Largest integer strictly below x; x > 2 by validation.
    if x.fract() == 0.0 {
        x as u32 - 1
    } else {
        x.floor() as u32
    }
}

/// `E|ε|^q` for `ε ~ N(0, σ²)`: `σ^q 2^{q/2} Γ((q+1)/2) / √π`.
fn gaussian_abs_moment(sd: f64, q: u32) -> f64 {
    let qf = f64::from(q);
    (qf * sd.ln() + 0.5 * qf * std::f64::consts::LN_2 + ln_gamma(0.5 * (qf + 1.0))
        - 0.5 * std::f64::consts::PI.ln())
    .exp()
}

/// `E|T|^q` for `T ~ t(df)`:
/// `df^{q/2} Γ((q+1)/2) Γ((df−q)/2) / (√π Γ(df/2))`.
fn student_t_abs_moment(df: f64, q: u32) -> f64 {
    let qf = f64::from(q);
    (0.5 * qf * df.ln() + ln_gamma(0.5 * (qf + 1.0)) + ln_gamma(0.5 * (df - qf))
        - 0.5 * std::f64::consts::PI.ln()
        - ln_gamma(0.5 * df))
    .exp()
}

/// `E|X − m|^q` for `X ~ Pareto(shape a, scale s)` with mean `m`.
///
/// Substituting `u = s/x` turns the density into `a u^{a-1} du` on `(0,1]`,
/// and splitting at `u = s/m` lets the binomial expansion of
/// `|s/u − m|^q` integrate term by term.
fn pareto_centered_abs_moment(shape: f64, scale: f64, q: u32) -> f64 {
    let a = shape;
    let s = scale;
    let m = a * s / (a - 1.0);
    let c = s / m; // = (a-1)/a in (0,1)
    let mut total = 0.0;
    let mut binom = 1.0;
    for j in 0..=q {
        let jf = f64::from(j);
        let e = a - jf; // > 0 since q < shape
        let c_pow = c.powf(e);
        // u in (0, c): (s/u - m)^q, term s^j (-m)^{q-j}
        let t1 = binom * s.powi(j as i32) * (-m).powi((q - j) as i32) * c_pow / e;
        // u in (c, 1): (m - s/u)^q, term (-s)^j m^{q-j}
        let t2 = binom * (-s).powi(j as i32) * m.powi((q - j) as i32) * (1.0 - c_pow) / e;
        total += t1 + t2;
        binom *= f64::from(q - j) / (jf + 1.0);
    }
    a * total
}
