//! Closed-loop fixed-step simulation: reference generators, disturbance
//! profiles, plant perturbation, RK4 integration with zero-order-hold
//! torque, and the four built-in scenarios.

use nalgebra::{Vector3, Vector6};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::control::{
    self, ControlDecomposition, PdGains, ReferencePoint, SmcGains, TrackingError,
};
use crate::dynamics::{self, DynamicsError, JointState, ManipulatorParams};
use crate::netapprox::{NetApproximator, NetConfig};

/// Desired-trajectory generator. Derivatives are analytic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReferenceSignal {
    Constant {
        targets: [f64; 3],
    },
    Sinusoid {
        amplitude: [f64; 3],
        frequency_hz: [f64; 3],
    },
    /// Piecewise-linear table; the caller supplies the derivative columns.
    CustomTable {
        rows: Vec<TableRow>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableRow {
    pub t: f64,
    pub q_d: [f64; 3],
    pub qdot_d: [f64; 3],
    pub qddot_d: [f64; 3],
}

impl ReferenceSignal {
    pub fn at(&self, t: f64) -> ReferencePoint {
        match self {
            ReferenceSignal::Constant { targets } => ReferencePoint {
                q_d: Vector3::from_row_slice(targets),
                qdot_d: Vector3::zeros(),
                qddot_d: Vector3::zeros(),
            },
            ReferenceSignal::Sinusoid {
                amplitude,
                frequency_hz,
            } => {
                let mut q = Vector3::zeros();
                let mut qd = Vector3::zeros();
                let mut qdd = Vector3::zeros();
                for i in 0..3 {
                    let w = 2.0 * PI * frequency_hz[i];
                    q[i] = amplitude[i] * (w * t).sin();
                    qd[i] = amplitude[i] * w * (w * t).cos();
                    qdd[i] = -amplitude[i] * w * w * (w * t).sin();
                }
                ReferencePoint {
                    q_d: q,
                    qdot_d: qd,
                    qddot_d: qdd,
                }
            }
            ReferenceSignal::CustomTable { rows } => {
                let interp = |take: fn(&TableRow) -> [f64; 3]| -> Vector3<f64> {
                    if rows.is_empty() {
                        return Vector3::zeros();
                    }
                    if t <= rows[0].t {
                        return Vector3::from_row_slice(&take(&rows[0]));
                    }
                    if t >= rows[rows.len() - 1].t {
                        return Vector3::from_row_slice(&take(&rows[rows.len() - 1]));
                    }
                    let hi = rows.partition_point(|r| r.t <= t);
                    let (a, b) = (&rows[hi - 1], &rows[hi]);
                    let alpha = (t - a.t) / (b.t - a.t);
                    let va = Vector3::from_row_slice(&take(a));
                    let vb = Vector3::from_row_slice(&take(b));
                    va + alpha * (vb - va)
                };
                ReferencePoint {
                    q_d: interp(|r| r.q_d),
                    qdot_d: interp(|r| r.qdot_d),
                    qddot_d: interp(|r| r.qddot_d),
                }
            }
        }
    }

    pub fn is_step(&self) -> bool {
        matches!(self, ReferenceSignal::Constant { .. })
    }

    pub fn validate(&self) -> Result<(), String> {
        if let ReferenceSignal::CustomTable { rows } = self {
            if rows.is_empty() {
                return Err("scenario.reference.rows: table must be non-empty".into());
            }
            if rows.windows(2).any(|w| w[1].t <= w[0].t) {
                return Err("scenario.reference.rows: times must be strictly increasing".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisturbanceShape {
    Step,
    Pulse { duration: f64 },
}

/// External force applied at one joint from an onset time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceProfile {
    /// 1-based joint index.
    pub joint: usize,
    pub onset: f64,
    pub magnitude: f64,
    pub shape: DisturbanceShape,
}

impl DisturbanceProfile {
    pub fn f_ext(&self, t: f64) -> Vector3<f64> {
        let active = match self.shape {
            DisturbanceShape::Step => t >= self.onset,
            DisturbanceShape::Pulse { duration } => t >= self.onset && t < self.onset + duration,
        };
        let mut f = Vector3::zeros();
        if active {
            f[self.joint - 1] = self.magnitude;
        }
        f
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(1..=3).contains(&self.joint) {
            return Err("scenario.disturbance.joint: must be 1, 2 or 3".into());
        }
        if self.onset < 0.0 {
            return Err("scenario.disturbance.onset: must be >= 0".into());
        }
        if let DisturbanceShape::Pulse { duration } = self.shape {
            if !(duration > 0.0) {
                return Err("scenario.disturbance.shape.duration: must be > 0".into());
            }
        }
        Ok(())
    }
}

/// The plant integrates one of the two model families in `dynamics`; the
/// controller feedforward follows the same selection (nominal masses).
pub use crate::dynamics::ModelKind as PlantModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub reference: ReferenceSignal,
    #[serde(default)]
    pub disturbance: Option<DisturbanceProfile>,
    /// Multiplicative factors on (m1, m2, m3); the plant integrates the
    /// perturbed masses while the controller keeps the nominal ones.
    #[serde(default = "ones3")]
    pub plant_perturbation: [f64; 3],
    #[serde(default = "zero3")]
    pub initial_q: [f64; 3],
    #[serde(default = "zero3")]
    pub initial_qdot: [f64; 3],
    pub horizon: f64,
    pub dt: f64,
    #[serde(default = "default_plant_model")]
    pub plant_model: PlantModel,
    #[serde(default)]
    pub torque_clamp: Option<[f64; 3]>,
}

fn ones3() -> [f64; 3] {
    [1.0; 3]
}
fn zero3() -> [f64; 3] {
    [0.0; 3]
}
fn default_plant_model() -> PlantModel {
    PlantModel::Reference
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.horizon > 0.0) {
            return Err(format!("scenario.{}.horizon: must be > 0", self.name));
        }
        if !(self.dt > 0.0 && self.dt <= self.horizon) {
            return Err(format!("scenario.{}.dt: must satisfy 0 < dt <= horizon", self.name));
        }
        if self.plant_perturbation.iter().any(|&f| !(f > 0.0)) {
            return Err(format!(
                "scenario.{}.plant_perturbation: factors must be > 0",
                self.name
            ));
        }
        if let Some(c) = self.torque_clamp {
            if c.iter().any(|&b| !(b > 0.0)) {
                return Err(format!("scenario.{}.torque_clamp: bounds must be > 0", self.name));
            }
        }
        self.reference.validate()?;
        if let Some(d) = &self.disturbance {
            d.validate()?;
        }
        Ok(())
    }
}

/// Masses scaled elementwise; everything else unchanged.
pub fn perturb_params(params: &ManipulatorParams, factors: &[f64; 3]) -> ManipulatorParams {
    let mut p = params.clone();
    p.m1 *= factors[0];
    p.m2 *= factors[1];
    p.m3 *= factors[2];
    p
}

/// The four built-in scenarios.
pub fn paper_scenarios() -> Vec<ScenarioSpec> {
    let constant = ReferenceSignal::Constant {
        targets: [PI / 3.0, PI / 2.0, PI],
    };
    let base = ScenarioSpec {
        name: String::new(),
        reference: constant.clone(),
        disturbance: None,
        plant_perturbation: [1.0; 3],
        initial_q: [0.0; 3],
        initial_qdot: [0.0; 3],
        horizon: 2.0,
        dt: 1e-3,
        plant_model: PlantModel::Reference,
        torque_clamp: None,
    };
    vec![
        ScenarioSpec {
            name: "constant".into(),
            ..base.clone()
        },
        ScenarioSpec {
            name: "uncertain".into(),
            plant_perturbation: [1.2, 0.8, 1.2],
            ..base.clone()
        },
        ScenarioSpec {
            name: "sinusoidal".into(),
            reference: ReferenceSignal::Sinusoid {
                amplitude: [1.0; 3],
                frequency_hz: [1.0; 3],
            },
            ..base.clone()
        },
        ScenarioSpec {
            name: "disturbance".into(),
            disturbance: Some(DisturbanceProfile {
                joint: 3,
                onset: 0.5,
                magnitude: 50.0,
                shape: DisturbanceShape::Step,
            }),
            ..base
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    Pd,
    Smc,
    AsmcNn,
}

impl ControllerKind {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerKind::Pd => "pd",
            ControllerKind::Smc => "smc",
            ControllerKind::AsmcNn => "asmc-nn",
        }
    }

    pub fn parse(name: &str) -> Result<Self, String> {
        match name {
            "pd" => Ok(ControllerKind::Pd),
            "smc" => Ok(ControllerKind::Smc),
            "asmc-nn" => Ok(ControllerKind::AsmcNn),
            other => Err(format!(
                "unknown controller '{other}'; valid: pd, smc, asmc-nn"
            )),
        }
    }
}

/// One sampled record of the closed loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub q: Vector3<f64>,
    pub q_d: Vector3<f64>,
    pub e: Vector3<f64>,
    pub s: Vector3<f64>,
    pub tau: Vector3<f64>,
    pub tau_eq: Vector3<f64>,
    pub tau_sw: Vector3<f64>,
    pub tau_nn: Vector3<f64>,
    pub f_ext: Vector3<f64>,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub scenario: String,
    pub controller: ControllerKind,
    pub dt: f64,
    /// True for constant (step) references; drives metric thresholds.
    pub step_reference: bool,
    pub records: Vec<TraceRecord>,
}

impl SimTrace {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AbortKind {
    SingularInertia(String),
    NonFinite(String),
}

/// Simulation abort carrying the trace up to the failure.
#[derive(Debug, Clone)]
pub struct SimFailure {
    pub kind: AbortKind,
    pub trace: SimTrace,
}

impl std::fmt::Display for SimFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            AbortKind::SingularInertia(msg) => write!(f, "singular inertia: {msg}"),
            AbortKind::NonFinite(msg) => write!(f, "non-finite state: {msg}"),
        }
    }
}

impl std::error::Error for SimFailure {}

/// Classical 4th-order Runge–Kutta step on the stacked state [q; q̇].
pub fn rk4_step<F>(deriv: &F, state: &Vector6<f64>, t: f64, dt: f64) -> Result<Vector6<f64>, DynamicsError>
where
    F: Fn(f64, &Vector6<f64>) -> Result<Vector6<f64>, DynamicsError>,
{
    let k1 = deriv(t, state)?;
    let k2 = deriv(t + 0.5 * dt, &(state + 0.5 * dt * k1))?;
    let k3 = deriv(t + 0.5 * dt, &(state + 0.5 * dt * k2))?;
    let k4 = deriv(t + dt, &(state + dt * k3))?;
    Ok(state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

fn pack(state: &JointState) -> Vector6<f64> {
    Vector6::new(
        state.q[0], state.q[1], state.q[2], state.qdot[0], state.qdot[1], state.qdot[2],
    )
}

fn unpack(v: &Vector6<f64>) -> JointState {
    JointState::new(
        Vector3::new(v[0], v[1], v[2]),
        Vector3::new(v[3], v[4], v[5]),
    )
}

const STATE_LIMIT: f64 = 1e8;

/// Controller bundle passed to `run_scenario`.
#[derive(Debug, Clone)]
pub struct ControllerSetup {
    pub gains: SmcGains,
    pub pd: PdGains,
    pub net: NetConfig,
}

impl Default for ControllerSetup {
    fn default() -> Self {
        Self {
            gains: SmcGains::default(),
            pd: PdGains::default(),
            net: NetConfig::default(),
        }
    }
}

/// Runs the closed loop: the controller sees the nominal parameters, the
/// plant integrates the perturbed ones; torque and disturbance are held
/// constant across each RK4 step. Deterministic for a fixed setup.
pub fn run_scenario(
    spec: &ScenarioSpec,
    controller: ControllerKind,
    setup: &ControllerSetup,
    nominal: &ManipulatorParams,
) -> Result<SimTrace, SimFailure> {
    let plant_params = perturb_params(nominal, &spec.plant_perturbation);
    let mut net = NetApproximator::new(setup.net.clone());
    let mut state = JointState::new(
        Vector3::from_row_slice(&spec.initial_q),
        Vector3::from_row_slice(&spec.initial_qdot),
    );
    let steps = (spec.horizon / spec.dt).floor() as usize;
    let mut trace = SimTrace {
        scenario: spec.name.clone(),
        controller,
        dt: spec.dt,
        step_reference: spec.reference.is_step(),
        records: Vec::with_capacity(steps + 1),
    };

    for n in 0..=steps {
        let t = n as f64 * spec.dt;
        let reference = spec.reference.at(t);
        let err = TrackingError::between(&reference, &state);
        let mut dec = match controller {
            ControllerKind::Pd => {
                let tau = control::pd_control(
                    &err,
                    &Vector3::from_row_slice(&setup.pd.kp),
                    &Vector3::from_row_slice(&setup.pd.kd),
                );
                ControlDecomposition {
                    tau_eq: tau,
                    tau_sw: Vector3::zeros(),
                    tau_nn: Vector3::zeros(),
                    tau_total: tau,
                    s: control::sliding_surface(&err, &setup.gains),
                }
            }
            ControllerKind::Smc => {
                control::smc_control(nominal, &state, &reference, &setup.gains, spec.plant_model)
            }
            ControllerKind::AsmcNn => control::asmc_nn_control(
                nominal,
                &state,
                &reference,
                &setup.gains,
                &net,
                spec.plant_model,
            ),
        };
        if let Some(clamp) = spec.torque_clamp {
            // the clamp residual is absorbed into the switching term so
            // the decomposition identity keeps holding
            for i in 0..3 {
                let clamped = dec.tau_total[i].clamp(-clamp[i], clamp[i]);
                dec.tau_sw[i] += clamped - dec.tau_total[i];
                dec.tau_total[i] = clamped;
            }
        }
        let f_ext = spec
            .disturbance
            .as_ref()
            .map_or(Vector3::zeros(), |d| d.f_ext(t));
        let wsq = match controller {
            ControllerKind::AsmcNn => {
                let n = net.frobenius_norm();
                n * n
            }
            _ => 0.0,
        };
        trace.records.push(TraceRecord {
            t,
            q: state.q,
            q_d: reference.q_d,
            e: err.e,
            s: dec.s,
            tau: dec.tau_total,
            tau_eq: dec.tau_eq,
            tau_sw: dec.tau_sw,
            tau_nn: dec.tau_nn,
            f_ext,
            v: control::lyapunov_value(&dec.s, wsq),
        });

        if n == steps {
            break;
        }

        if controller == ControllerKind::AsmcNn {
            net.adapt(&state.q, &state.qdot, &dec.s, spec.dt);
        }

        let tau = dec.tau_total;
        let plant = spec.plant_model;
        let deriv = |_t: f64, x: &Vector6<f64>| -> Result<Vector6<f64>, DynamicsError> {
            let st = unpack(x);
            let qdd = match plant {
                PlantModel::Paper => dynamics::forward_dynamics(&plant_params, &st, &tau, &f_ext)?,
                PlantModel::Reference => {
                    dynamics::reference_model_dynamics(&plant_params, &st, &tau, &f_ext)
                }
            };
            Ok(Vector6::new(
                st.qdot[0], st.qdot[1], st.qdot[2], qdd[0], qdd[1], qdd[2],
            ))
        };
        let next = match rk4_step(&deriv, &pack(&state), t, spec.dt) {
            Ok(v) => v,
            Err(DynamicsError::SingularInertia { det }) => {
                return Err(SimFailure {
                    kind: AbortKind::SingularInertia(format!(
                        "at t = {t:.4} s (|det A| = {det:.3e})"
                    )),
                    trace,
                });
            }
        };
        if next.iter().any(|x| !x.is_finite() || x.abs() > STATE_LIMIT) {
            return Err(SimFailure {
                kind: AbortKind::NonFinite(format!("state left +/-1e8 at t = {t:.4} s")),
                trace,
            });
        }
        state = unpack(&next);
    }

    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rk4_harmonic_oscillator_full_period() {
        // q̈ = −q on joint 1; analytic solution cos t
        let deriv = |_t: f64, x: &Vector6<f64>| -> Result<Vector6<f64>, DynamicsError> {
            Ok(Vector6::new(x[3], x[4], x[5], -x[0], -x[1], -x[2]))
        };
        let mut x = Vector6::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let dt = 1e-3;
        let steps = (2.0 * PI / dt).round() as usize;
        let mut t = 0.0;
        for _ in 0..steps {
            x = rk4_step(&deriv, &x, t, dt).unwrap();
            t += dt;
        }
        // land exactly on 2π by a final fractional step
        let rem = 2.0 * PI - t;
        x = rk4_step(&deriv, &x, t, rem).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-8, "q(2π) = {}", x[0]);
    }

    #[test]
    fn rk4_zero_derivative_keeps_state() {
        let deriv =
            |_t: f64, _x: &Vector6<f64>| -> Result<Vector6<f64>, DynamicsError> { Ok(Vector6::zeros()) };
        let x = Vector6::new(1.0, -2.0, 3.0, 0.5, 0.0, -0.5);
        assert_eq!(rk4_step(&deriv, &x, 0.0, 0.1).unwrap(), x);
    }

    #[test]
    fn rk4_order_richardson_ratio() {
        let deriv = |_t: f64, x: &Vector6<f64>| -> Result<Vector6<f64>, DynamicsError> {
            Ok(Vector6::new(x[3], x[4], x[5], -x[0], -x[1], -x[2]))
        };
        // y = sin t keeps the fifth derivative nonzero at t = 0, so a
        // single step of size h against a single step of size h/2 shows
        // the local truncation order: e(h)/e(h/2) ≈ 2^5 = 32
        let dt = 0.1;
        let x0 = Vector6::new(0.0, 0.0, 0.0, 1.0, 1.0, 1.0);
        let e1 = (rk4_step(&deriv, &x0, 0.0, dt).unwrap()[0] - dt.sin()).abs();
        let e2 = (rk4_step(&deriv, &x0, 0.0, dt / 2.0).unwrap()[0] - (dt / 2.0).sin()).abs();
        let ratio = e1 / e2;
        assert!(
            (28.0..=36.0).contains(&ratio),
            "Richardson ratio {ratio} outside [28, 36]"
        );
    }

    #[test]
    fn paper_scenarios_shapes() {
        let scenarios = paper_scenarios();
        assert_eq!(scenarios.len(), 4);
        let names: Vec<&str> = scenarios.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["constant", "uncertain", "sinusoidal", "disturbance"]);

        // sinusoid reference checks
        let sin = &scenarios[2];
        let r = sin.reference.at(0.25);
        assert_relative_eq!(r.q_d[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.q_d[1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.q_d[2], 1.0, epsilon = 1e-12);
        let r0 = sin.reference.at(0.0);
        for i in 0..3 {
            assert_relative_eq!(r0.qdot_d[i], 2.0 * PI, epsilon = 1e-12);
        }

        // disturbance step
        let dist = scenarios[3].disturbance.as_ref().unwrap();
        assert_eq!(dist.f_ext(0.4), Vector3::zeros());
        assert_eq!(dist.f_ext(0.6), Vector3::new(0.0, 0.0, 50.0));
    }

    #[test]
    fn perturb_params_examples() {
        let p = ManipulatorParams::default();
        assert_eq!(perturb_params(&p, &[1.0; 3]), p);
        let doubled = perturb_params(&p, &[2.0, 1.0, 1.0]);
        assert_eq!(doubled.m1, 2.0 * p.m1);
        assert_eq!(doubled.m2, p.m2);
        assert_eq!(doubled.m3, p.m3);

        // gravity scales by (2m2 + m3)/(m2 + m3) under factors (1,2,1)
        let heavier = perturb_params(&p, &[1.0, 2.0, 1.0]);
        let ratio = dynamics::gravity_vector(&heavier)[1] / dynamics::gravity_vector(&p)[1];
        assert_relative_eq!(
            ratio,
            (2.0 * p.m2 + p.m3) / (p.m2 + p.m3),
            epsilon = 1e-12
        );
    }

    #[test]
    fn run_starts_converged_stays_converged() {
        // start exactly on a constant reference with exact parameters
        let spec = ScenarioSpec {
            name: "hold".into(),
            reference: ReferenceSignal::Constant {
                targets: [0.4, 0.2, 0.8],
            },
            disturbance: None,
            plant_perturbation: [1.0; 3],
            initial_q: [0.4, 0.2, 0.8],
            initial_qdot: [0.0; 3],
            horizon: 1.0,
            dt: 1e-3,
            plant_model: PlantModel::Reference,
            torque_clamp: None,
        };
        let trace = run_scenario(
            &spec,
            ControllerKind::AsmcNn,
            &ControllerSetup::default(),
            &ManipulatorParams::default(),
        )
        .unwrap();
        let max_e = trace
            .records
            .iter()
            .map(|r| r.e.norm())
            .fold(0.0, f64::max);
        assert!(max_e < 1e-6, "max error {max_e}");
    }

    #[test]
    fn trace_is_well_formed() {
        let spec = &paper_scenarios()[0];
        let trace = run_scenario(
            spec,
            ControllerKind::Smc,
            &ControllerSetup::default(),
            &ManipulatorParams::default(),
        )
        .unwrap();
        assert_eq!(trace.records.len(), (spec.horizon / spec.dt) as usize + 1);
        for (k, r) in trace.records.iter().enumerate() {
            assert_relative_eq!(r.t, k as f64 * spec.dt, epsilon = 1e-12);
            assert_eq!(r.tau, r.tau_eq + r.tau_sw + r.tau_nn);
        }
    }

    #[test]
    fn determinism_bit_identical_traces() {
        let spec = &paper_scenarios()[0];
        let setup = ControllerSetup::default();
        let p = ManipulatorParams::default();
        let a = run_scenario(spec, ControllerKind::AsmcNn, &setup, &p).unwrap();
        let b = run_scenario(spec, ControllerKind::AsmcNn, &setup, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn disturbance_scenario_matches_constant_before_onset() {
        let scenarios = paper_scenarios();
        let setup = ControllerSetup::default();
        let p = ManipulatorParams::default();
        let base = run_scenario(&scenarios[0], ControllerKind::AsmcNn, &setup, &p).unwrap();
        let dist = run_scenario(&scenarios[3], ControllerKind::AsmcNn, &setup, &p).unwrap();
        let onset = scenarios[3].disturbance.as_ref().unwrap().onset;
        for (a, b) in base.records.iter().zip(&dist.records) {
            if a.t < onset {
                assert_eq!(a.q, b.q, "diverged at t = {}", a.t);
                assert_eq!(a.tau, b.tau);
            }
        }
    }

    #[test]
    fn paper_plant_aborts_with_partial_trace_near_singularity() {
        // the constant scenario on the `Paper` model crosses the
        // A11 = 0 surface early; the run must abort, not panic
        let mut spec = paper_scenarios()[0].clone();
        spec.plant_model = PlantModel::Paper;
        let res = run_scenario(
            &spec,
            ControllerKind::Smc,
            &ControllerSetup::default(),
            &ManipulatorParams::default(),
        );
        match res {
            Err(failure) => assert!(!failure.trace.records.is_empty()),
            Ok(trace) => {
                // if it survives, the trace must still be complete
                assert_eq!(trace.records.len(), 2001);
            }
        }
    }

    #[test]
    fn custom_table_reference_interpolates() {
        let sig = ReferenceSignal::CustomTable {
            rows: vec![
                TableRow {
                    t: 0.0,
                    q_d: [0.0; 3],
                    qdot_d: [1.0; 3],
                    qddot_d: [0.0; 3],
                },
                TableRow {
                    t: 1.0,
                    q_d: [1.0; 3],
                    qdot_d: [1.0; 3],
                    qddot_d: [0.0; 3],
                },
            ],
        };
        let mid = sig.at(0.5);
        assert_relative_eq!(mid.q_d[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(mid.qdot_d[1], 1.0, epsilon = 1e-12);
        // clamped outside the table
        assert_eq!(sig.at(5.0).q_d[0], 1.0);
        assert_eq!(sig.at(-1.0).q_d[0], 0.0);
    }

    #[test]
    fn scenario_validation_catches_bad_fields() {
        let mut spec = paper_scenarios()[0].clone();
        spec.dt = 0.0;
        assert!(spec.validate().is_err());
        let mut spec2 = paper_scenarios()[0].clone();
        spec2.plant_perturbation = [1.0, -1.0, 1.0];
        assert!(spec2.validate().is_err());
        let mut spec3 = paper_scenarios()[3].clone();
        spec3.disturbance.as_mut().unwrap().joint = 4;
        assert!(spec3.validate().is_err());
    }
}
