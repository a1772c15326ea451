#[cfg(not(feature = "std"))]
use crate::prelude::Float;

/// Fixed monotone map from a constrained parameter to the real line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Identity,
    /// (0, ∞) ↔ ℝ
    Log,
    /// (0, 1) ↔ ℝ
    Logit,
}

impl Transform {
    pub fn to_unconstrained(self, theta: f64) -> f64 {
        match self {
            Transform::Identity => theta,
            Transform::Log => theta.ln(),
            Transform::Logit => (theta / (1.0 - theta)).ln(),
        }
    }

    pub fn to_constrained(self, z: f64) -> f64 {
        match self {
            Transform::Identity => z,
            Transform::Log => z.exp(),
            Transform::Logit => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// log |dθ/dz| at `z`.
    pub fn log_jacobian(self, z: f64) -> f64 {
        match self {
            Transform::Identity => 0.0,
            Transform::Log => z,
            // log σ(z) + log(1 - σ(z)) = -|z| - 2 log(1 + e^{-|z|})
            Transform::Logit => -z.abs() - 2.0 * (-z.abs()).exp().ln_1p(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_jacobian() {
        for t in [Transform::Identity, Transform::Log, Transform::Logit] {
            let theta = 0.3;
            let z = t.to_unconstrained(theta);
            assert!((t.to_constrained(z) - theta).abs() < 1e-14);
            let h = 1e-6;
            let fd = (t.to_constrained(z + h) - t.to_constrained(z - h)) / (2.0 * h);
            assert!((t.log_jacobian(z) - fd.ln()).abs() < 1e-6);
        }
    }
}
