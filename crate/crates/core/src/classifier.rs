//! Analytic phase predictions: recurrence verdicts, limit constants and scaling
//! envelopes as functions of `(d, rho, beta, sigma2)`.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::models::BiasTarget;
use crate::vector::check_dim;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YVerdict {
    Recurrent,
    Transient,
    BoundaryRecurrent,
    NotCovered,
}

impl YVerdict {
    pub fn is_recurrent(self) -> bool {
        matches!(self, YVerdict::Recurrent | YVerdict::BoundaryRecurrent)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XVerdict {
    TransientWithDirection,
    Transient1d,
    NotCovered,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Extended,
    Transitional,
    PartiallyCollapsed,
    FullyCollapsed,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    /// `n^{1/(1+beta)}`
    Power,
    /// `n^{1/2} (log n)^{1/2+eps}`
    DiffusiveLog,
    /// `n^{gamma+eps}`
    PowerGamma,
    /// `(log n)^{1+1/(1-beta)+eps}`
    PolyLog,
}

/// Almost-sure upper bound on `max_{m<=n} |X_m|`. Only an upper bound is known, so
/// `one_sided` is always true.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub kind: EnvelopeKind,
    pub expression: String,
    /// Power of `n` (for power envelopes) or of `log n` (for the poly-log one).
    pub exponent: f64,
    pub one_sided: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePrediction {
    pub d: usize,
    pub rho: f64,
    pub beta: f64,
    pub sigma2: f64,
    pub bias_target: BiasTarget,
    pub rho0: f64,
    pub y_process_verdict: YVerdict,
    pub x_process_verdict: XVerdict,
    pub ell: Option<f64>,
    pub x_constant: Option<f64>,
    pub g_constant: Option<f64>,
    pub exponent_nu: Option<f64>,
    pub gamma: Option<f64>,
    pub upper_envelope: Option<Envelope>,
    pub phase_label: Phase,
}

/// Critical drift strength at `beta = 1`.
pub fn rho0(d: usize, sigma2: f64) -> f64 {
    (2.0 - d as f64) * sigma2 / 2.0
}

/// `(2 - d - 2 rho / sigma2)^{-1}`, meaningful for `rho < -d sigma2 / 2`.
pub fn gamma(d: usize, sigma2: f64, rho: f64) -> f64 {
    1.0 / (2.0 - d as f64 - 2.0 * rho / sigma2)
}

/// Law-of-large-numbers constant `(rho (1+beta) / (2+beta))^{1/(1+beta)}`.
pub fn ell(rho: f64, beta: f64) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(CoreError::param("rho", "must be positive"));
    }
    if !(0.0..1.0).contains(&beta) {
        return Err(CoreError::param("beta", "must lie in [0, 1)"));
    }
    Ok((rho * (1.0 + beta) / (2.0 + beta)).powf(1.0 / (1.0 + beta)))
}

pub fn classify(
    d: usize,
    rho: f64,
    beta: f64,
    sigma2: f64,
    bias_target: BiasTarget,
) -> Result<PhasePrediction> {
    check_dim(d)?;
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(CoreError::param("sigma2", "must be positive"));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(CoreError::param("beta", "must be >= 0"));
    }
    if !rho.is_finite() {
        return Err(CoreError::param("rho", "must be finite"));
    }
    let r0 = rho0(d, sigma2);
    let df = d as f64;

    let y = if beta < 1.0 {
        if rho > 0.0 {
            YVerdict::Transient
        } else if rho < 0.0 {
            YVerdict::Recurrent
        } else {
            YVerdict::NotCovered
        }
    } else if beta == 1.0 {
        if rho > r0 {
            YVerdict::Transient
        } else if rho == r0 {
            YVerdict::BoundaryRecurrent
        } else {
            YVerdict::Recurrent
        }
    } else if d >= 3 {
        YVerdict::Transient
    } else {
        YVerdict::Recurrent
    };

    let x = if beta < 1.0 && rho > 0.0 {
        XVerdict::TransientWithDirection
    } else if d == 1 && y == YVerdict::Transient {
        XVerdict::Transient1d
    } else {
        XVerdict::NotCovered
    };

    let (ell_v, x_c, g_c) = if beta < 1.0 && rho > 0.0 {
        let l = ell(rho, beta)?;
        let (xc, gc) = match bias_target {
            BiasTarget::Barycentre => ((2.0 + beta) * l, (1.0 + beta) * l),
            BiasTarget::Origin => (
                (2.0 + beta).powf(1.0 / (1.0 + beta)) * l,
                (1.0 + beta) * (2.0 + beta).powf(-beta / (1.0 + beta)) * l,
            ),
        };
        (Some(l), Some(xc), Some(gc))
    } else {
        (None, None, None)
    };

    let mut gamma_v = None;
    let (phase, envelope, nu) = if beta < 1.0 && rho > 0.0 {
        let nu = 1.0 / (1.0 + beta);
        (
            Phase::Extended,
            Some(Envelope {
                kind: EnvelopeKind::Power,
                expression: format!("n^{nu}"),
                exponent: nu,
                one_sided: true,
            }),
            Some(nu),
        )
    } else if beta < 1.0 && rho < 0.0 {
        let p = 1.0 + 1.0 / (1.0 - beta);
        (
            Phase::FullyCollapsed,
            Some(Envelope {
                kind: EnvelopeKind::PolyLog,
                expression: format!("(log n)^({p}+eps)"),
                exponent: p,
                one_sided: true,
            }),
            Some(0.0),
        )
    } else if beta == 1.0 && rho < -df * sigma2 / 2.0 {
        let g = gamma(d, sigma2, rho);
        gamma_v = Some(g);
        (
            Phase::PartiallyCollapsed,
            Some(Envelope {
                kind: EnvelopeKind::PowerGamma,
                expression: format!("n^({g}+eps)"),
                exponent: g,
                one_sided: true,
            }),
            Some(g),
        )
    } else if beta >= 1.0 {
        (
            Phase::Transitional,
            Some(Envelope {
                kind: EnvelopeKind::DiffusiveLog,
                expression: "n^0.5 (log n)^(0.5+eps)".into(),
                exponent: 0.5,
                one_sided: true,
            }),
            Some(0.5),
        )
    } else {
        (Phase::None, None, None)
    };

    Ok(PhasePrediction {
        d,
        rho,
        beta,
        sigma2,
        bias_target,
        rho0: r0,
        y_process_verdict: y,
        x_process_verdict: x,
        ell: ell_v,
        x_constant: x_c,
        g_constant: g_c,
        exponent_nu: nu,
        gamma: gamma_v,
        upper_envelope: envelope,
        phase_label: phase,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SrwVerdict {
    Recurrent,
    Transient,
}

impl SrwVerdict {
    fn from_bool(recurrent: bool) -> Self {
        if recurrent {
            SrwVerdict::Recurrent
        } else {
            SrwVerdict::Transient
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrwPrediction {
    pub x: SrwVerdict,
    pub g: SrwVerdict,
    pub y: SrwVerdict,
}

/// Verdicts for the simple symmetric random walk, its barycentre, and their difference.
pub fn classify_srw(d: usize) -> Result<SrwPrediction> {
    check_dim(d)?;
    Ok(SrwPrediction {
        x: SrwVerdict::from_bool(d <= 2),
        g: SrwVerdict::from_bool(d == 1),
        y: SrwVerdict::from_bool(d <= 2),
    })
}
