//! Built-in verification suite: fast numerical checks of the core
//! invariants, runnable from the CLI against any configuration.

use nalgebra::{DMatrix, Vector3, Vector6};

use crate::config::WorkbenchConfig;
use crate::dynamics::{self, DynamicsError, JointState};
use crate::netapprox::NetApproximator;
use crate::report;
use crate::sim::{self, ControllerKind};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

struct Lcg(u64);

impl Lcg {
    fn new(seed: u64) -> Self {
        Lcg(seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493))
    }
    fn next_f64(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
    fn vec3(&mut self, lo: f64, hi: f64) -> Vector3<f64> {
        Vector3::new(
            self.uniform(lo, hi),
            self.uniform(lo, hi),
            self.uniform(lo, hi),
        )
    }
}

/// Forward∘inverse dynamics identity on random admissible states.
pub fn check_round_trip(cfg: &WorkbenchConfig) -> CheckResult {
    let p = &cfg.params;
    let mut rng = Lcg::new(1);
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 1000 {
        let st = JointState::new(rng.vec3(-3.0, 3.0), rng.vec3(-3.0, 3.0));
        if dynamics::inertia_matrix(p, &st.q).determinant().abs() < 1e-3 {
            continue;
        }
        let qdd = rng.vec3(-5.0, 5.0);
        let f_ext = rng.vec3(-10.0, 10.0);
        let tau = dynamics::inverse_dynamics(p, &st, &qdd, &f_ext);
        match dynamics::forward_dynamics(p, &st, &tau, &f_ext) {
            Ok(back) => worst = worst.max((back - qdd).norm() / qdd.norm().max(1.0)),
            Err(_) => continue,
        }
        checked += 1;
    }
    CheckResult {
        name: "dynamics round-trip",
        pass: worst < 1e-8,
        detail: format!("worst relative error {worst:.3e} over 1000 states"),
    }
}

/// Reference-model energy conservation under zero input and zero gravity.
pub fn check_energy_conservation(cfg: &WorkbenchConfig) -> CheckResult {
    let mut p = cfg.params.clone();
    p.g = 1e-300; // effectively zero while satisfying g > 0
    p.viscous_friction = [0.0; 3];
    let mut state = JointState::new(Vector3::new(0.3, 0.0, 0.5), Vector3::new(1.0, 0.5, 0.8));
    let e0 = dynamics::reference_model_energy(&p, &state);
    let dt = 1e-3;
    let deriv = |_t: f64, x: &Vector6<f64>| -> Result<Vector6<f64>, DynamicsError> {
        let st = JointState::new(Vector3::new(x[0], x[1], x[2]), Vector3::new(x[3], x[4], x[5]));
        let qdd =
            dynamics::reference_model_dynamics(&p, &st, &Vector3::zeros(), &Vector3::zeros());
        Ok(Vector6::new(
            st.qdot[0], st.qdot[1], st.qdot[2], qdd[0], qdd[1], qdd[2],
        ))
    };
    let mut drift = 0.0f64;
    let mut x = Vector6::new(
        state.q[0], state.q[1], state.q[2], state.qdot[0], state.qdot[1], state.qdot[2],
    );
    for n in 0..10_000 {
        x = match sim::rk4_step(&deriv, &x, n as f64 * dt, dt) {
            Ok(v) => v,
            Err(e) => {
                return CheckResult {
                    name: "energy conservation",
                    pass: false,
                    detail: format!("integration failed: {e}"),
                }
            }
        };
        state = JointState::new(Vector3::new(x[0], x[1], x[2]), Vector3::new(x[3], x[4], x[5]));
        let e = dynamics::reference_model_energy(&p, &state);
        drift = drift.max(((e - e0) / e0).abs());
    }
    CheckResult {
        name: "energy conservation",
        pass: drift < 1e-6,
        detail: format!("relative drift {drift:.3e} over 10 s"),
    }
}

/// RK4 local-order check on the harmonic oscillator.
pub fn check_integrator_order(_cfg: &WorkbenchConfig) -> CheckResult {
    let deriv = |_t: f64, x: &Vector6<f64>| -> Result<Vector6<f64>, DynamicsError> {
        Ok(Vector6::new(x[3], x[4], x[5], -x[0], -x[1], -x[2]))
    };
    // y = sin t: nonzero fifth derivative at t = 0, single step h vs h/2
    let dt = 0.1;
    let x0 = Vector6::new(0.0, 0.0, 0.0, 1.0, 1.0, 1.0);
    let e1 = (sim::rk4_step(&deriv, &x0, 0.0, dt).unwrap()[0] - dt.sin()).abs();
    let e2 = (sim::rk4_step(&deriv, &x0, 0.0, dt / 2.0).unwrap()[0] - (dt / 2.0).sin()).abs();
    let ratio = e1 / e2;
    CheckResult {
        name: "integrator order",
        pass: (28.0..=36.0).contains(&ratio),
        detail: format!("Richardson ratio {ratio:.2} (nominal 32)"),
    }
}

/// Weight freeze at s = 0, projection bound, output linearity.
pub fn check_adaptation_law(cfg: &WorkbenchConfig) -> CheckResult {
    let mut net_cfg = cfg.controller_setup().net;
    if net_cfg.gamma == 0.0 {
        // a frozen approximator would make this check vacuous
        net_cfg.gamma = 10.0;
    }
    let mut net = NetApproximator::new(net_cfg);
    let mut rng = Lcg::new(2);

    // freeze
    let n = net.feature_count();
    net.set_weights(DMatrix::from_fn(n, 3, |i, j| (i + j) as f64 * 0.01));
    let before = net.weights().clone();
    net.adapt(&rng.vec3(-1.0, 1.0), &rng.vec3(-1.0, 1.0), &Vector3::zeros(), 1e-3);
    if net.weights() != &before {
        return CheckResult {
            name: "adaptation law",
            pass: false,
            detail: "weights moved at s = 0".into(),
        };
    }

    // projection bound under sustained random updates
    net.reset();
    let w_max = net.config.w_max;
    for _ in 0..100_000 {
        net.adapt(&rng.vec3(-2.0, 2.0), &rng.vec3(-2.0, 2.0), &rng.vec3(-2.0, 2.0), 1e-3);
        if net.frobenius_norm() > w_max * (1.0 + 1e-12) {
            return CheckResult {
                name: "adaptation law",
                pass: false,
                detail: format!("projection violated: {}", net.frobenius_norm()),
            };
        }
    }

    // linearity in W
    let q = rng.vec3(-1.0, 1.0);
    let qd = rng.vec3(-1.0, 1.0);
    let s = rng.vec3(-1.0, 1.0);
    let w1 = DMatrix::from_fn(n, 3, |i, j| ((i * 3 + j) as f64 * 0.13).sin());
    let w2 = DMatrix::from_fn(n, 3, |i, j| ((i + 2 * j) as f64 * 0.07).cos());
    net.set_weights(w1.clone());
    let o1 = net.output(&q, &qd, &s);
    net.set_weights(w2.clone());
    let o2 = net.output(&q, &qd, &s);
    net.set_weights(w1 + w2);
    let osum = net.output(&q, &qd, &s);
    let lin_err = (osum - (o1 + o2)).norm() / osum.norm().max(1.0);
    CheckResult {
        name: "adaptation law",
        pass: lin_err < 1e-12,
        detail: format!("freeze + projection ok, linearity residual {lin_err:.3e}"),
    }
}

/// V(t) non-increasing per control sample for t >= 0.05 s on the
/// constant scenario. Fails by construction with the flipped
/// switching sign.
pub fn check_lyapunov_decrease(cfg: &WorkbenchConfig) -> CheckResult {
    let Some(spec) = cfg.scenario("constant") else {
        return CheckResult {
            name: "lyapunov decrease",
            pass: false,
            detail: "constant scenario missing".into(),
        };
    };
    let setup = cfg.controller_setup();
    let trace = match sim::run_scenario(&spec, ControllerKind::AsmcNn, &setup, &cfg.params) {
        Ok(t) => t,
        Err(failure) => {
            return CheckResult {
                name: "lyapunov decrease",
                pass: false,
                detail: format!("simulation aborted: {failure}"),
            }
        }
    };
    let mut worst = f64::NEG_INFINITY;
    let mut worst_t = 0.0;
    for w in trace.records.windows(2) {
        if w[0].t >= 0.05 {
            let dv = w[1].v - w[0].v;
            if dv > worst {
                worst = dv;
                worst_t = w[1].t;
            }
        }
    }
    CheckResult {
        name: "lyapunov decrease",
        pass: worst <= 1e-6,
        detail: format!(
            "max per-step increase {worst:.3e} at t = {worst_t:.3} s (sign = {:+})",
            cfg.gains.reaching_sign
        ),
    }
}

/// Identical runs produce byte-identical CSV.
pub fn check_determinism(cfg: &WorkbenchConfig) -> CheckResult {
    let Some(spec) = cfg.scenario("constant") else {
        return CheckResult {
            name: "determinism",
            pass: false,
            detail: "constant scenario missing".into(),
        };
    };
    let setup = cfg.controller_setup();
    let run = || sim::run_scenario(&spec, ControllerKind::AsmcNn, &setup, &cfg.params);
    match (run(), run()) {
        (Ok(a), Ok(b)) => {
            let same = report::csv_string(&a) == report::csv_string(&b);
            CheckResult {
                name: "determinism",
                pass: same,
                detail: if same {
                    "two runs byte-identical".into()
                } else {
                    "traces differ".into()
                },
            }
        }
        (Err(e), _) | (_, Err(e)) => CheckResult {
            name: "determinism",
            pass: false,
            detail: format!("simulation aborted: {e}"),
        },
    }
}

/// Runs every check. The Lyapunov check doubles as the empirical
/// documentation of the switching-sign discrepancy: with
/// reaching_sign = -1 it reports FAIL.
pub fn run_all(cfg: &WorkbenchConfig) -> Vec<CheckResult> {
    vec![
        check_round_trip(cfg),
        check_energy_conservation(cfg),
        check_integrator_order(cfg),
        check_adaptation_law(cfg),
        check_lyapunov_decrease(cfg),
        check_determinism(cfg),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_checks_pass_on_defaults() {
        let cfg = WorkbenchConfig::default();
        for check in [
            check_round_trip(&cfg),
            check_integrator_order(&cfg),
        ] {
            assert!(check.pass, "{}: {}", check.name, check.detail);
        }
    }

}
