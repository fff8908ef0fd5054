//! Total-variation certificates for treating thinned Markov-chain samples as
//! iid.
//!
//! With a chain mixing at rate `eps_t`, the joint law of `N` samples spaced
//! `M` apart deviates from the iid product law by at most `(N - 1) eps_M` in
//! total variation. This module evaluates that bound and inverts it for the
//! smallest spacing meeting a budget; it does not estimate mixing rates from
//! chains.

/// Errors raised by the bound calculators.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ThinningError {
    #[error("geometric rate needs C > 0 and 0 < rho < 1, got C = {c}, rho = {rho}")]
    InvalidGeometric { c: f64, rho: f64 },
    #[error("tabulated rates must be strictly decreasing and positive")]
    InvalidTabulation,
    #[error("spacing M = {m} outside tabulated range 1..={len}")]
    OutOfRange { m: usize, len: usize },
    #[error("spacing must be at least 1")]
    ZeroSpacing,
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("budget {budget} not achievable: bound is at least {floor}")]
    BudgetInfeasible { budget: f64, floor: f64 },
    #[error("budget must be positive, got {0}")]
    InvalidBudget(f64),
}

/// Mixing-rate model `eps_t`.
#[derive(Debug, Clone, PartialEq)]
pub enum MixingModel {
    /// `eps_t = C rho^t`, the uniformly ergodic form.
    Geometric { c: f64, rho: f64 },
    /// Explicit strictly decreasing rate table; entry `t - 1` holds `eps_t`.
    Tabulated { eps: Vec<f64> },
}

impl MixingModel {
    /// Validates model parameters.
    pub fn geometric(c: f64, rho: f64) -> Result<Self, ThinningError> {
        if !(c > 0.0 && c.is_finite()) || !(rho > 0.0 && rho < 1.0) {
            return Err(ThinningError::InvalidGeometric { c, rho });
        }
        Ok(MixingModel::Geometric { c, rho })
    }

    /// Validates a tabulated rate sequence.
    pub fn tabulated(eps: Vec<f64>) -> Result<Self, ThinningError> {
        if eps.is_empty()
            || eps.iter().any(|&e| !(e > 0.0 && e.is_finite()))
            || eps.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(ThinningError::InvalidTabulation);
        }
        Ok(MixingModel::Tabulated { eps })
    }

    fn eps(&self, m: usize) -> Result<f64, ThinningError> {
        if m == 0 {
            return Err(ThinningError::ZeroSpacing);
        }
        match self {
            MixingModel::Geometric { c, rho } => Ok(c * rho.powi(m as i32)),
            MixingModel::Tabulated { eps } => {
                eps.get(m - 1).copied().ok_or(ThinningError::OutOfRange {
                    m,
                    len: eps.len(),
                })
            }
        }
    }
}

/// Total-variation bound `(N - 1) eps_M` between the law of `N` samples at
/// spacing `M` and the iid product law.
pub fn tv_bound(model: &MixingModel, n: usize, m: usize) -> Result<f64, ThinningError> {
    if n == 0 {
        return Err(ThinningError::ZeroSamples);
    }
    if n == 1 {
        // A single sample is iid regardless of spacing.
        return Ok(0.0);
    }
    Ok((n - 1) as f64 * model.eps(m)?)
}

/// Smallest spacing `M` with `(N - 1) eps_M <= budget`.
///
/// The geometric case starts from the closed form
/// `ceil(log(budget / ((N - 1) C)) / log(rho))` and is then adjusted by
/// direct evaluation, so the returned spacing is exactly the smallest
/// feasible one under float arithmetic.
pub fn min_thinning(model: &MixingModel, n: usize, budget: f64) -> Result<usize, ThinningError> {
    if n == 0 {
        return Err(ThinningError::ZeroSamples);
    }
    if !(budget > 0.0) {
        return Err(ThinningError::InvalidBudget(budget));
    }
    if n == 1 || tv_bound(model, n, 1)? <= budget {
        return Ok(1);
    }
    match model {
        MixingModel::Geometric { c, rho } => {
            let target = budget / ((n - 1) as f64 * c);
            let mut m = (target.ln() / rho.ln()).ceil().max(1.0) as usize;
            while tv_bound(model, n, m)? > budget {
                m += 1;
            }
            while m > 1 && tv_bound(model, n, m - 1)? <= budget {
                m -= 1;
            }
            Ok(m)
        }
        MixingModel::Tabulated { eps } => {
            let scale = (n - 1) as f64;
            for (i, &e) in eps.iter().enumerate() {
                if scale * e <= budget {
                    return Ok(i + 1);
                }
            }
            Err(ThinningError::BudgetInfeasible {
                budget,
                floor: scale * eps[eps.len() - 1],
            })
        }
    }
}
