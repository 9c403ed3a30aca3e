//! Tracking controllers: per-joint sliding surface, equivalent and
//! switching control, the sliding-mode law with the adaptive compensator,
//! and a PD baseline.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, JointState, ManipulatorParams, ModelKind};
use crate::netapprox::NetApproximator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmcGains {
    /// Sliding-surface slope λ per joint, > 0.
    pub lambda: [f64; 3],
    /// Switching gain k per joint, > 0.
    pub k: [f64; 3],
    /// Boundary-layer width ε, > 0.
    pub epsilon: f64,
    /// Sign applied to the switching term, +1 or −1. A sign of −1
    /// destabilizes the loop under the e = q_d − q error convention;
    /// +1 is the stabilizing default.
    #[serde(default = "default_reaching_sign")]
    pub reaching_sign: f64,
}

fn default_reaching_sign() -> f64 {
    1.0
}

impl Default for SmcGains {
    fn default() -> Self {
        Self {
            lambda: [250.0, 12.0, 12.0],
            k: [40_000.0, 80_000.0, 80_000.0],
            epsilon: 10.0,
            reaching_sign: 1.0,
        }
    }
}

impl SmcGains {
    pub fn validate(&self) -> Result<(), String> {
        if self.lambda.iter().any(|&l| !(l > 0.0)) {
            return Err("gains.lambda: must be > 0 per joint".into());
        }
        if self.k.iter().any(|&k| !(k > 0.0)) {
            return Err("gains.k: must be > 0 per joint".into());
        }
        if !(self.epsilon > 0.0) {
            return Err("gains.epsilon: must be > 0".into());
        }
        if self.reaching_sign != 1.0 && self.reaching_sign != -1.0 {
            return Err("gains.reaching_sign: must be +1 or -1".into());
        }
        Ok(())
    }

    pub fn lambda_vec(&self) -> Vector3<f64> {
        Vector3::from_row_slice(&self.lambda)
    }

    pub fn k_vec(&self) -> Vector3<f64> {
        Vector3::from_row_slice(&self.k)
    }
}

/// e = q_d − q and its rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingError {
    pub e: Vector3<f64>,
    pub edot: Vector3<f64>,
}

impl TrackingError {
    pub fn between(reference: &ReferencePoint, state: &JointState) -> Self {
        Self {
            e: reference.q_d - state.q,
            edot: reference.qdot_d - state.qdot,
        }
    }
}

/// Desired position, velocity and acceleration at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePoint {
    pub q_d: Vector3<f64>,
    pub qdot_d: Vector3<f64>,
    pub qddot_d: Vector3<f64>,
}

/// A controller output broken into its additive parts.
/// tau_total = tau_eq + tau_sw + tau_nn exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlDecomposition {
    pub tau_eq: Vector3<f64>,
    pub tau_sw: Vector3<f64>,
    pub tau_nn: Vector3<f64>,
    pub tau_total: Vector3<f64>,
    pub s: Vector3<f64>,
}

/// s = ė + λ∘e, per joint.
pub fn sliding_surface(err: &TrackingError, gains: &SmcGains) -> Vector3<f64> {
    err.edot + gains.lambda_vec().component_mul(&err.e)
}

/// Boundary-layer approximation s/(ε + |s|), elementwise.
pub fn smoothed_sign(s: &Vector3<f64>, epsilon: f64) -> Vector3<f64> {
    s.map(|si| si / (epsilon + si.abs()))
}

/// Model-based feedforward τ_eq = A(q)q̈_d + velocity products + D. The
/// velocity products are evaluated at the measured q̇, and the terms come
/// from whichever model the controller is told the plant follows.
pub fn equivalent_control(
    params: &ManipulatorParams,
    state: &JointState,
    reference: &ReferencePoint,
    model: ModelKind,
) -> Vector3<f64> {
    let a = dynamics::model_inertia(params, &state.q, model);
    a * reference.qddot_d
        + dynamics::model_velocity_coupling(params, state, model)
        + dynamics::gravity_vector(params)
}

/// τ_sw = reaching_sign · k ∘ smoothed sign of s.
pub fn switching_control(s: &Vector3<f64>, gains: &SmcGains) -> Vector3<f64> {
    gains.reaching_sign * gains.k_vec().component_mul(&smoothed_sign(s, gains.epsilon))
}

/// Sliding-mode controller: τ = τ_eq + τ_sw.
pub fn smc_control(
    params: &ManipulatorParams,
    state: &JointState,
    reference: &ReferencePoint,
    gains: &SmcGains,
    model: ModelKind,
) -> ControlDecomposition {
    let err = TrackingError::between(reference, state);
    let s = sliding_surface(&err, gains);
    let tau_eq = equivalent_control(params, state, reference, model);
    let tau_sw = switching_control(&s, gains);
    ControlDecomposition {
        tau_eq,
        tau_sw,
        tau_nn: Vector3::zeros(),
        tau_total: tau_eq + tau_sw,
        s,
    }
}

/// Unified law τ = τ_eq + τ_sw + τ_NN. Does not mutate the approximator;
/// adaptation is stepped separately by the simulator.
pub fn asmc_nn_control(
    params: &ManipulatorParams,
    state: &JointState,
    reference: &ReferencePoint,
    gains: &SmcGains,
    net: &NetApproximator,
    model: ModelKind,
) -> ControlDecomposition {
    let err = TrackingError::between(reference, state);
    let s = sliding_surface(&err, gains);
    let tau_eq = equivalent_control(params, state, reference, model);
    let tau_sw = switching_control(&s, gains);
    let tau_nn = net.output(&state.q, &state.qdot, &s);
    ControlDecomposition {
        tau_eq,
        tau_sw,
        tau_nn,
        tau_total: tau_eq + tau_sw + tau_nn,
        s,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdGains {
    pub kp: [f64; 3],
    pub kd: [f64; 3],
}

impl Default for PdGains {
    fn default() -> Self {
        Self {
            kp: [400.0; 3],
            kd: [40.0; 3],
        }
    }
}

impl PdGains {
    pub fn validate(&self) -> Result<(), String> {
        if self.kp.iter().chain(self.kd.iter()).any(|&g| g < 0.0) {
            return Err("gains.pd: kp and kd must be >= 0".into());
        }
        Ok(())
    }
}

/// Baseline comparator τ = kp∘e + kd∘ė.
pub fn pd_control(err: &TrackingError, kp: &Vector3<f64>, kd: &Vector3<f64>) -> Vector3<f64> {
    kp.component_mul(&err.e) + kd.component_mul(&err.edot)
}

/// V = ½sᵀs + ½ tr(WᵀW), the logged stability diagnostic.
pub fn lyapunov_value(s: &Vector3<f64>, weight_norm_sq: f64) -> f64 {
    0.5 * s.dot(s) + 0.5 * weight_norm_sq
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netapprox::NetConfig;
    use crate::testutil::Lcg;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn gains() -> SmcGains {
        SmcGains::default()
    }

    fn ref_point(q_d: Vector3<f64>, qdot_d: Vector3<f64>, qddot_d: Vector3<f64>) -> ReferencePoint {
        ReferencePoint { q_d, qdot_d, qddot_d }
    }

    #[test]
    fn sliding_surface_examples() {
        let g = SmcGains {
            lambda: [5.0; 3],
            ..gains()
        };
        let zero = TrackingError {
            e: Vector3::zeros(),
            edot: Vector3::zeros(),
        };
        assert_eq!(sliding_surface(&zero, &g), Vector3::zeros());

        let unit = TrackingError {
            e: Vector3::new(1.0, 0.0, 0.0),
            edot: Vector3::zeros(),
        };
        assert_eq!(sliding_surface(&unit, &g), Vector3::new(5.0, 0.0, 0.0));

        // on the sliding manifold ė = −λe
        let manifold = TrackingError {
            e: Vector3::new(0.2, -0.1, 0.0),
            edot: Vector3::new(-1.0, 0.5, 0.0),
        };
        assert!(sliding_surface(&manifold, &g).norm() < 1e-15);
    }

    #[test]
    fn smoothed_sign_examples() {
        assert_eq!(smoothed_sign(&Vector3::zeros(), 0.01), Vector3::zeros());
        let at_eps = smoothed_sign(&Vector3::new(0.01, 0.0, 0.0), 0.01);
        assert_relative_eq!(at_eps[0], 0.5, epsilon = 1e-15);
        let v = smoothed_sign(&Vector3::new(0.09, -0.09, 0.0), 0.01);
        assert_relative_eq!(v[0], 0.9, epsilon = 1e-12);
        assert_relative_eq!(v[1], -0.9, epsilon = 1e-12);
        assert_eq!(v[2], 0.0);
    }

    #[test]
    fn smoothed_sign_properties() {
        let mut rng = Lcg::new(3);
        for _ in 0..1000 {
            let s = Vector3::new(
                rng.uniform(-5.0, 5.0),
                rng.uniform(-5.0, 5.0),
                rng.uniform(-5.0, 5.0),
            );
            let f = smoothed_sign(&s, 0.01);
            let fneg = smoothed_sign(&(-s), 0.01);
            assert_eq!(fneg, -f); // odd, exactly
            assert!(f.iter().all(|&x| x.abs() < 1.0)); // bounded
        }
        // monotone in each coordinate
        let mut prev = -1.0;
        for i in 0..200 {
            let si = -2.0 + i as f64 * 0.02;
            let f = smoothed_sign(&Vector3::new(si, 0.0, 0.0), 0.05)[0];
            assert!(f > prev);
            prev = f;
        }
        // pointwise convergence to the hard sign as ε → 0
        for &si in &[0.01, 0.5, -0.01, -2.0] {
            let f = smoothed_sign(&Vector3::new(si, 0.0, 0.0), 1e-6)[0];
            assert!((f - si.signum()).abs() < 1e-4);
        }
    }

    #[test]
    fn equivalent_control_examples() {
        let p = ManipulatorParams::default();
        let rest = JointState::zero();
        let hold = ref_point(Vector3::zeros(), Vector3::zeros(), Vector3::zeros());
        assert_eq!(
            equivalent_control(&p, &rest, &hold, ModelKind::Paper),
            dynamics::gravity_vector(&p)
        );

        let st = JointState::new(Vector3::new(FRAC_PI_2, 0.0, 0.0), Vector3::zeros());
        let r = ref_point(Vector3::zeros(), Vector3::zeros(), Vector3::new(1.0, 0.0, 0.0));
        let tau = equivalent_control(&p, &st, &r, ModelKind::Paper);
        assert_relative_eq!(tau[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(tau[1], 356.400569, epsilon = 1e-5);
        assert_relative_eq!(tau[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn equivalent_control_affine_in_qddot_d() {
        let p = ManipulatorParams::default();
        let st = JointState::new(Vector3::new(0.7, 0.1, 0.9), Vector3::new(0.2, 0.0, -0.1));
        let mk = |qdd| ref_point(Vector3::zeros(), Vector3::zeros(), qdd);
        let base = equivalent_control(&p, &st, &mk(Vector3::zeros()), ModelKind::Paper);
        let a = equivalent_control(&p, &st, &mk(Vector3::new(1.0, 2.0, -1.0)), ModelKind::Paper);
        let b = equivalent_control(&p, &st, &mk(Vector3::new(-0.5, 0.3, 2.0)), ModelKind::Paper);
        let sum = equivalent_control(&p, &st, &mk(Vector3::new(0.5, 2.3, 1.0)), ModelKind::Paper);
        assert!((sum - (a + b - base)).norm() < 1e-9);
    }

    #[test]
    fn switching_control_examples() {
        let g = SmcGains {
            k: [10.0; 3],
            epsilon: 0.01,
            ..gains()
        };
        assert_eq!(switching_control(&Vector3::zeros(), &g), Vector3::zeros());
        let t = switching_control(&Vector3::new(0.09, 0.0, 0.0), &g);
        assert_relative_eq!(t[0], 9.0, epsilon = 1e-12);

        let flipped = SmcGains {
            reaching_sign: -1.0,
            ..g.clone()
        };
        let tf = switching_control(&Vector3::new(0.09, 0.0, 0.0), &flipped);
        assert_eq!(tf, -t);
    }

    #[test]
    fn smc_on_reference_is_pure_feedforward() {
        let p = ManipulatorParams::default();
        let st = JointState::new(Vector3::new(0.3, 0.5, 1.0), Vector3::new(0.1, 0.0, -0.2));
        let r = ref_point(st.q, st.qdot, Vector3::new(0.5, 0.0, 0.0));
        let dec = smc_control(&p, &st, &r, &gains(), ModelKind::Paper);
        assert_eq!(dec.s, Vector3::zeros());
        assert_eq!(dec.tau_total, dec.tau_eq);
    }

    #[test]
    fn decomposition_identity_and_zero_weight_equivalence() {
        let p = ManipulatorParams::default();
        let net = NetApproximator::new(NetConfig::default());
        let mut rng = Lcg::new(9);
        for _ in 0..200 {
            let st = JointState::new(
                Vector3::new(
                    rng.uniform(-1.0, 1.0),
                    rng.uniform(-1.0, 1.0),
                    rng.uniform(-1.0, 1.0),
                ),
                Vector3::new(
                    rng.uniform(-2.0, 2.0),
                    rng.uniform(-2.0, 2.0),
                    rng.uniform(-2.0, 2.0),
                ),
            );
            let r = ref_point(
                Vector3::new(
                    rng.uniform(-1.0, 1.0),
                    rng.uniform(-1.0, 1.0),
                    rng.uniform(-1.0, 1.0),
                ),
                Vector3::zeros(),
                Vector3::new(rng.uniform(-1.0, 1.0), 0.0, 0.0),
            );
            let g = gains();
            let smc = smc_control(&p, &st, &r, &g, ModelKind::Paper);
            assert_eq!(smc.tau_total, smc.tau_eq + smc.tau_sw + smc.tau_nn);
            // zero NN weights: identical to plain SMC, bit for bit
            let asmc = asmc_nn_control(&p, &st, &r, &g, &net, ModelKind::Paper);
            assert_eq!(asmc.tau_total, smc.tau_total);
            assert_eq!(asmc.s, smc.s);
        }
    }

    #[test]
    fn asmc_linear_in_weights() {
        let p = ManipulatorParams::default();
        let mut net = NetApproximator::new(NetConfig {
            w_max: 1e12,
            ..NetConfig::default()
        });
        let st = JointState::new(Vector3::new(0.2, 0.4, 0.6), Vector3::new(1.0, 0.0, -1.0));
        let r = ref_point(Vector3::new(0.5, 0.5, 0.5), Vector3::zeros(), Vector3::zeros());
        let g = gains();
        let n = net.feature_count();
        let w1 = nalgebra::DMatrix::from_fn(n, 3, |i, j| ((i + j) as f64 * 0.11).sin());
        let w2 = nalgebra::DMatrix::from_fn(n, 3, |i, j| ((i * j) as f64 * 0.07).cos());
        net.set_weights(w1.clone());
        let t1 = asmc_nn_control(&p, &st, &r, &g, &net, ModelKind::Paper).tau_nn;
        net.set_weights(w2.clone());
        let t2 = asmc_nn_control(&p, &st, &r, &g, &net, ModelKind::Paper).tau_nn;
        net.set_weights(w1 + w2);
        let tsum = asmc_nn_control(&p, &st, &r, &g, &net, ModelKind::Paper).tau_nn;
        assert!((tsum - (t1 + t2)).norm() < 1e-10 * tsum.norm().max(1.0));
    }

    #[test]
    fn pd_control_examples() {
        let kp = Vector3::new(100.0, 100.0, 100.0);
        let kd = Vector3::new(10.0, 10.0, 10.0);
        let zero = TrackingError {
            e: Vector3::zeros(),
            edot: Vector3::zeros(),
        };
        assert_eq!(pd_control(&zero, &kp, &kd), Vector3::zeros());
        let err = TrackingError {
            e: Vector3::new(1.0, 0.0, 0.0),
            edot: Vector3::zeros(),
        };
        assert_eq!(pd_control(&err, &kp, &kd), Vector3::new(100.0, 0.0, 0.0));
        // linear in (e, ė)
        let e2 = TrackingError {
            e: Vector3::new(0.5, -0.2, 0.1),
            edot: Vector3::new(-1.0, 0.4, 0.0),
        };
        let both = TrackingError {
            e: err.e + e2.e,
            edot: err.edot + e2.edot,
        };
        assert_eq!(
            pd_control(&both, &kp, &kd),
            pd_control(&err, &kp, &kd) + pd_control(&e2, &kp, &kd)
        );
    }

    #[test]
    fn lyapunov_value_examples() {
        assert_eq!(lyapunov_value(&Vector3::zeros(), 0.0), 0.0);
        assert_eq!(lyapunov_value(&Vector3::new(1.0, 0.0, 0.0), 0.0), 0.5);
        // one weight entry of 2 → tr(WᵀW) = 4
        assert_eq!(lyapunov_value(&Vector3::zeros(), 4.0), 2.0);
        let mut rng = Lcg::new(21);
        for _ in 0..100 {
            let s = Vector3::new(
                rng.uniform(-3.0, 3.0),
                rng.uniform(-3.0, 3.0),
                rng.uniform(-3.0, 3.0),
            );
            assert!(lyapunov_value(&s, rng.uniform(0.0, 10.0)) >= 0.0);
        }
    }

    #[test]
    fn gains_validation() {
        assert!(gains().validate().is_ok());
        let mut bad = gains();
        bad.epsilon = 0.0;
        assert!(bad.validate().is_err());
        let mut bad2 = gains();
        bad2.reaching_sign = 0.5;
        assert!(bad2.validate().is_err());
        let mut bad3 = gains();
        bad3.lambda = [20.0, -1.0, 20.0];
        assert!(bad3.validate().is_err());
    }
}
