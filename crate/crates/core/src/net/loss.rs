use serde::{Deserialize, Serialize};

/// Loss term weights. The composite training loss is
/// `huber_sdf * L_Hs + huber_conf * L_Hc + eikonal * L_E + linf * L_R`,
/// averaged over the batch (the L-infinity regularizer is batch-independent).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub huber_sdf: f64,
    pub huber_conf: f64,
    pub eikonal: f64,
    pub linf: f64,
    pub huber_delta: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            huber_sdf: 1e4,
            huber_conf: 1e4,
            eikonal: 1.0,
            linf: 1e-3,
            huber_delta: 1.0,
        }
    }
}

/// Per-term values of one evaluated batch, unweighted; `total` applies the
/// weights.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub huber_sdf: f64,
    pub huber_conf: f64,
    pub eikonal: f64,
    pub linf: f64,
}

/// Huber loss of a residual.
#[inline]
pub fn huber(residual: f64, delta: f64) -> f64 {
    let a = residual.abs();
    if a < delta {
        0.5 * residual * residual
    } else {
        delta * (a - 0.5 * delta)
    }
}

/// Derivative of the Huber loss with respect to the residual.
#[inline]
pub fn huber_deriv(residual: f64, delta: f64) -> f64 {
    if residual.abs() < delta {
        residual
    } else {
        delta * residual.signum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn huber_reference_points() {
        assert_eq!(huber(0.0, 1.0), 0.0);
        assert_eq!(huber(0.5, 1.0), 0.125);
        assert_eq!(huber(2.0, 1.0), 1.5);
        assert_eq!(huber(-2.0, 1.0), 1.5);
        // Continuous at the crossover.
        assert!((huber(1.0 - 1e-12, 1.0) - huber(1.0 + 1e-12, 1.0)).abs() < 1e-9);
    }

    #[test]
    fn huber_derivative_matches_fd() {
        let h = 1e-7;
        for &r in &[-1.7, -0.3, 0.0, 0.4, 2.2] {
            let fd = (huber(r + h, 1.0) - huber(r - h, 1.0)) / (2.0 * h);
            assert!((huber_deriv(r, 1.0) - fd).abs() < 1e-6);
        }
    }
}
