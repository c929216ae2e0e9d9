use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_BETA: f64 = 0.1;
pub const DEFAULT_LAMBDA: f64 = 5.0;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DpoError {
    #[error("{0} is not finite")]
    NonFinite(&'static str),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("{0} is a log-likelihood and must not exceed 0")]
    PositiveLogLikelihood(&'static str),
}

/// Sequence log-likelihoods of the chosen (`plus`) and rejected (`minus`)
/// completions under the policy being trained (`star`) and the frozen
/// reference (`ref`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpoPInputs {
    pub logp_star_plus: f64,
    pub logp_star_minus: f64,
    pub logp_ref_plus: f64,
    pub logp_ref_minus: f64,
    pub beta: f64,
    pub lambda: f64,
}

impl DpoPInputs {
    /// Inputs with default beta and lambda.
    pub fn new(star_plus: f64, star_minus: f64, ref_plus: f64, ref_minus: f64) -> Self {
        Self {
            logp_star_plus: star_plus,
            logp_star_minus: star_minus,
            logp_ref_plus: ref_plus,
            logp_ref_minus: ref_minus,
            beta: DEFAULT_BETA,
            lambda: DEFAULT_LAMBDA,
        }
    }

    fn validate(&self) -> Result<(), DpoError> {
        let fields = [
            ("logp_star_plus", self.logp_star_plus),
            ("logp_star_minus", self.logp_star_minus),
            ("logp_ref_plus", self.logp_ref_plus),
            ("logp_ref_minus", self.logp_ref_minus),
            ("beta", self.beta),
            ("lambda", self.lambda),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(DpoError::NonFinite(name));
            }
        }
        for (name, v) in &fields[..4] {
            if *v > 0.0 {
                return Err(DpoError::PositiveLogLikelihood(name));
            }
        }
        for (name, v) in &fields[4..] {
            if *v <= 0.0 {
                return Err(DpoError::NonPositive(name));
            }
        }
        Ok(())
    }

    /// Implicit rewards (r+, r-) and penalty g.
    pub fn terms(&self) -> (f64, f64, f64) {
        let r_plus = self.beta * (self.logp_star_plus - self.logp_ref_plus);
        let r_minus = self.beta * (self.logp_star_minus - self.logp_ref_minus);
        let g = self.lambda * (self.logp_ref_plus - self.logp_star_plus).max(0.0);
        (r_plus, r_minus, g)
    }

    fn margin(&self) -> f64 {
        let (r_plus, r_minus, g) = self.terms();
        r_plus - r_minus - g
    }
}

/// log(1 + e^x) without overflow or cancellation.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// DPO-Positive loss `-log sigmoid(r+ - r- - g)`, evaluated as
/// `softplus(g + r- - r+)`.
pub fn dpo_positive_loss(inputs: &DpoPInputs) -> Result<f64, DpoError> {
    inputs.validate()?;
    Ok(softplus(-inputs.margin()))
}

/// Partial derivatives of the loss with respect to each log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpoGradient {
    pub logp_star_plus: f64,
    pub logp_star_minus: f64,
    pub logp_ref_plus: f64,
    pub logp_ref_minus: f64,
}

/// Analytic gradient. At the penalty kink (policy and reference agree on
/// the chosen completion) the penalty's right derivative (zero) is used.
pub fn dpo_positive_grad(inputs: &DpoPInputs) -> Result<DpoGradient, DpoError> {
    inputs.validate()?;
    let dl_dz = -sigmoid(-inputs.margin());
    let active = if inputs.logp_ref_plus > inputs.logp_star_plus {
        inputs.lambda
    } else {
        0.0
    };
    Ok(DpoGradient {
        logp_star_plus: dl_dz * (inputs.beta + active),
        logp_star_minus: dl_dz * -inputs.beta,
        logp_ref_plus: dl_dz * (-inputs.beta - active),
        logp_ref_minus: dl_dz * inputs.beta,
    })
}
