//! Quantum predictions for the two-qubit state
//! `|Ψ⟩ = (x|++⟩ - |--⟩)/√(1+x²)` measured along ladder observables.
//!
//! All amplitudes and measurement directions live in a real plane. The `+1`
//! eigenvector of a setting with angle `θ` is `(cos θ, sin θ)` and the `-1`
//! eigenvector is `(-sin θ, cos θ)`, both in the `{|+⟩, |-⟩}` basis.

use serde::{Deserialize, Serialize};

use crate::behavior::{Behavior, Outcome, Scenario};
use crate::error::{Error, Result};

/// `x^n` by repeated multiplication.
pub(crate) fn pow_mul(x: f64, n: usize) -> f64 {
    let mut acc = 1.0;
    for _ in 0..n {
        acc *= x;
    }
    acc
}

fn check_closed(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
    }
    Ok(())
}

fn check_open(x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("x = {x} outside (0, 1)")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchmidtState {
    x: f64,
}

impl SchmidtState {
    pub fn new(x: f64) -> Result<Self> {
        check_closed(x)?;
        Ok(Self { x })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    /// Coefficients of `|++⟩` and `|--⟩`.
    pub fn amplitudes(&self) -> (f64, f64) {
        let norm = (1.0 + self.x * self.x).sqrt();
        (self.x / norm, -1.0 / norm)
    }

    /// `|⟨a ⊗ b|Ψ⟩|²` for real single-qubit vectors `a`, `b`.
    pub fn joint_probability(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let (c_pp, c_mm) = self.amplitudes();
        let amp = c_pp * a[0] * b[0] + c_mm * a[1] * b[1];
        amp * amp
    }
}

/// Eigenvector of a real-plane observable with angle `theta`.
pub fn eigenvector(theta: f64, outcome: Outcome) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    match outcome {
        Outcome::Plus => [c, s],
        Outcome::Minus => [-s, c],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderAngles {
    pub theta_a: Vec<f64>,
    pub theta_b: Vec<f64>,
}

/// Angles satisfying every Hardy zero on the Schmidt state:
/// `tan θ_0 = √x` and `tan θ_k = -x tan θ_{k-1}`.
pub fn ladder_angles(x: f64, k_param: usize) -> Result<LadderAngles> {
    check_open(x)?;
    Scenario::new(k_param)?;
    let mut tangent = x.sqrt();
    let mut theta = Vec::with_capacity(k_param + 1);
    for _ in 0..=k_param {
        theta.push(tangent.atan());
        tangent *= -x;
    }
    Ok(LadderAngles {
        theta_a: theta.clone(),
        theta_b: theta,
    })
}

/// Full Born-rule behavior of the Schmidt state with ladder observables.
pub fn born_behavior(x: f64, k_param: usize) -> Result<Behavior> {
    let angles = ladder_angles(x, k_param)?;
    let state = SchmidtState::new(x)?;
    Behavior::from_fn(k_param, |ix| {
        state.joint_probability(
            eigenvector(angles.theta_a[ix.a_setting], ix.a_outcome),
            eigenvector(angles.theta_b[ix.b_setting], ix.b_outcome),
        )
    })
}

/// Hardy fraction of the ladder construction as a function of `x`.
pub fn p_k_qm(x: f64, k_param: usize) -> Result<f64> {
    check_closed(x)?;
    Scenario::new(k_param)?;
    Ok(p_k_qm_unchecked(x, k_param))
}

pub(crate) fn p_k_qm_unchecked(x: f64, k_param: usize) -> f64 {
    let x2 = x * x;
    let ratio = (1.0 - pow_mul(x2, k_param)) / (1.0 + pow_mul(x, 2 * k_param + 1));
    x2 / (1.0 + x2) * ratio * ratio
}

/// Closed-form predictions for the probabilities entering the all-minus balance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormProbs {
    pub x: f64,
    pub k: usize,
    /// `P(A_0=-1, B_0=-1)`
    pub p00_mm: f64,
    /// `P(A_K=-1, B_K=-1)`
    pub pkk_mm: f64,
    /// `P(A_K=+1, B_K=+1)`
    pub pkk_pp: f64,
    /// `zig[k-1] = P(A_k=-1, B_{k-1}=+1) = P(A_{k-1}=+1, B_k=-1)` for `k = 1..=K`.
    pub zig: Vec<f64>,
}

pub fn closed_form_probs(x: f64, k_param: usize) -> Result<ClosedFormProbs> {
    check_closed(x)?;
    Scenario::new(k_param)?;
    let x2 = x * x;
    let norm = 1.0 + x2;
    let tail = (1.0 - pow_mul(x, 2 * k_param + 2)) / (1.0 + pow_mul(x, 2 * k_param + 1));
    // The x^{2k}/x factor is folded into x^{2k-1} so x = 0 needs no special case.
    let prefactor = (1.0 - x2) * (1.0 - x2) / norm;
    let zig = (1..=k_param)
        .map(|k| {
            let lo = pow_mul(x, 2 * k - 1);
            let hi = lo * x2;
            prefactor * lo / ((1.0 + lo) * (1.0 + hi))
        })
        .collect();
    Ok(ClosedFormProbs {
        x,
        k: k_param,
        p00_mm: (1.0 - x) * (1.0 - x) / norm,
        pkk_mm: tail * tail / norm,
        pkk_pp: p_k_qm_unchecked(x, k_param),
        zig,
    })
}

/// Absolute difference between the two sides of
/// `Σ_{k=1}^K x^{2k}/((1+x^{2k-1})(1+x^{2k+1})) = Σ_{k=1}^K x^{2k} / ((1+x)(1+x^{2K+1}))`.
pub fn ladder_identity_residual(x: f64, k_param: usize) -> Result<f64> {
    let (lhs, rhs) = ladder_identity_sides(x, k_param)?;
    Ok((lhs - rhs).abs())
}

/// Residual scaled by the magnitude of the right-hand side (absolute when it is zero).
pub fn ladder_identity_relative_residual(x: f64, k_param: usize) -> Result<f64> {
    let (lhs, rhs) = ladder_identity_sides(x, k_param)?;
    let scale = rhs.abs();
    Ok(if scale > 0.0 {
        (lhs - rhs).abs() / scale
    } else {
        (lhs - rhs).abs()
    })
}

pub fn ladder_identity_sides(x: f64, k_param: usize) -> Result<(f64, f64)> {
    Scenario::new(k_param)?;
    if !x.is_finite() {
        return Err(Error::Domain(format!("x = {x} is not finite")));
    }
    let pole = |denominator: f64| -> Result<f64> {
        if denominator.abs() <= 1e-12 {
            Err(Error::Pole { x, denominator })
        } else {
            Ok(denominator)
        }
    };
    let x2 = x * x;
    let mut lhs = 0.0;
    let mut even_sum = 0.0;
    let mut even = 1.0;
    let mut odd = x; // x^{2k-1}
    for _ in 1..=k_param {
        even *= x2;
        let next_odd = odd * x2;
        lhs += even / (pole(1.0 + odd)? * pole(1.0 + next_odd)?);
        even_sum += even;
        odd = next_odd;
    }
    // `odd` is now x^{2K+1}
    let rhs = even_sum / (pole(1.0 + x)? * pole(1.0 + odd)?);
    Ok((lhs, rhs))
}
