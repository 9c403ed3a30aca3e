//! Rigid-body dynamics of the 3-DOF cylindrical manipulator.
//!
//! Two plant models live here. `inertia_matrix` / `velocity_coupling` /
//! `gravity_vector` and the forward/inverse dynamics built on them follow
//! the matrix-form entries of the `Paper` model verbatim, quirks included
//! (the inertia matrix is not symmetric and its (1,1) entry changes sign
//! inside the workspace). `reference_model_dynamics` is a textbook
//! cylindrical-robot model with a diagonal, always positive definite
//! inertia matrix; it doubles as an energy-conservation oracle.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("inertia matrix is singular or near-singular (|det| = {det:.3e})")]
    SingularInertia { det: f64 },
}

/// Masses, lengths, inertia and friction of the manipulator.
///
/// The lengths are carried for completeness; the matrix-form dynamics do
/// not consume them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManipulatorParams {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    /// Moment of inertia of joint 3, kg·m².
    pub i3: f64,
    /// Gravitational acceleration, m/s².
    pub g: f64,
    /// Per-joint viscous friction coefficients (default zero).
    #[serde(default = "zero3")]
    pub viscous_friction: [f64; 3],
}

fn zero3() -> [f64; 3] {
    [0.0; 3]
}

impl Default for ManipulatorParams {
    /// Nominal parameter set of the modeled manipulator.
    fn default() -> Self {
        Self {
            m1: 36.367405,
            m2: 12.632222,
            m3: 23.735183,
            l1: 0.05,
            l2: 0.79,
            l3: 0.9,
            i3: 1.0,
            g: 9.8,
            viscous_friction: [0.0; 3],
        }
    }
}

impl ManipulatorParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.m1 > 0.0 && self.m2 > 0.0 && self.m3 > 0.0) {
            return Err("params: all masses must be > 0".into());
        }
        if !(self.i3 > 0.0) {
            return Err("params.i3: must be > 0".into());
        }
        if !(self.g > 0.0) {
            return Err("params.g: must be > 0".into());
        }
        if self.viscous_friction.iter().any(|&f| f < 0.0) {
            return Err("params.viscous_friction: must be >= 0 elementwise".into());
        }
        Ok(())
    }

    pub fn friction(&self) -> Vector3<f64> {
        Vector3::from_row_slice(&self.viscous_friction)
    }
}

/// Joint positions and velocities at an instant.
/// q = (θ₁ rad, q₂ m, q₃ m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointState {
    pub q: Vector3<f64>,
    pub qdot: Vector3<f64>,
}

impl JointState {
    pub fn new(q: Vector3<f64>, qdot: Vector3<f64>) -> Self {
        Self { q, qdot }
    }

    pub fn zero() -> Self {
        Self {
            q: Vector3::zeros(),
            qdot: Vector3::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qdot.iter()).all(|x| x.is_finite())
    }
}

/// The evaluated pieces of the matrix-form dynamics at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsTerms {
    pub a: Matrix3<f64>,
    /// B · [θ̇₁², q̇₂², q̇₃²]ᵀ
    pub bsq: Vector3<f64>,
    /// C · [θ̇₁q̇₂, θ̇₁q̇₃, q̇₂q̇₃]ᵀ
    pub ccross: Vector3<f64>,
    pub d: Vector3<f64>,
}

impl DynamicsTerms {
    pub fn evaluate(params: &ManipulatorParams, state: &JointState) -> Self {
        Self {
            a: inertia_matrix(params, &state.q),
            bsq: b_contribution(params, state),
            ccross: c_contribution(params, state),
            d: gravity_vector(params),
        }
    }
}

/// Inertia-role matrix A(q) of the `Paper` model. Not symmetric:
/// A13 ≠ A31 as printed.
pub fn inertia_matrix(params: &ManipulatorParams, q: &Vector3<f64>) -> Matrix3<f64> {
    let (s1, c1) = q[0].sin_cos();
    let q3 = q[2];
    let a11 = (4.0 * params.m1 * s1 - 4.0 * params.m2 * c1) * q3 + params.i3;
    let a13 = (params.m1 + params.m2) * s1 * c1 * q3;
    let a22 = params.m3;
    let a31 = params.m1 * s1 * c1;
    let a33 = 2.0 * (params.m1 * s1 + params.m2 * c1);
    Matrix3::new(
        a11, 0.0, a13, //
        0.0, a22, 0.0, //
        a31, 0.0, a33,
    )
}

fn b_contribution(params: &ManipulatorParams, state: &JointState) -> Vector3<f64> {
    let (s1, c1) = state.q[0].sin_cos();
    let q3 = state.q[2];
    let v = &state.qdot;
    // squared-velocity vector [θ̇₁², q̇₂², q̇₃²]; column 2 never contributes
    let v1sq = v[0] * v[0];
    let v3sq = v[2] * v[2];
    let b11 = (params.m1 * s1 - 4.0 * params.m2 * c1) * q3;
    // the bare θ in the printed B13 is read as θ₁
    let b13 = -params.m1 * c1 + params.m2 * s1;
    let b31 = 2.0 * q3 * (params.m1 * s1 - params.m2 * c1);
    Vector3::new(b11 * v1sq + b13 * v3sq, 0.0, b31 * v1sq)
}

fn c_contribution(params: &ManipulatorParams, state: &JointState) -> Vector3<f64> {
    let (s1, c1) = state.q[0].sin_cos();
    let q3 = state.q[2];
    let v = &state.qdot;
    // cross-velocity vector [θ̇₁q̇₂, θ̇₁q̇₃, q̇₂q̇₃]
    let w2 = v[0] * v[2];
    let c12 = -(params.m1 + params.m2) * s1 * c1 * q3;
    let c32 = -(params.m1 + params.m2) * s1 * c1;
    Vector3::new(c12 * w2, 0.0, c32 * w2)
}

/// Combined velocity-product torque B·[q̇²] + C·[q̇ᵢq̇ⱼ].
pub fn velocity_coupling(params: &ManipulatorParams, state: &JointState) -> Vector3<f64> {
    b_contribution(params, state) + c_contribution(params, state)
}

/// Gravity torque D; only the vertical prismatic joint carries weight.
pub fn gravity_vector(params: &ManipulatorParams) -> Vector3<f64> {
    Vector3::new(0.0, params.g * (params.m2 + params.m3), 0.0)
}

/// τ = A(q)q̈ + B/C velocity products + D + friction∘q̇ + f_ext.
pub fn inverse_dynamics(
    params: &ManipulatorParams,
    state: &JointState,
    qddot: &Vector3<f64>,
    f_ext: &Vector3<f64>,
) -> Vector3<f64> {
    let a = inertia_matrix(params, &state.q);
    a * qddot
        + velocity_coupling(params, state)
        + gravity_vector(params)
        + params.friction().component_mul(&state.qdot)
        + f_ext
}

const DET_TOLERANCE: f64 = 1e-9;
const COND_LIMIT: f64 = 1e12;

/// Solves A(q)q̈ = τ − velocity products − D − friction∘q̇ − f_ext.
///
/// Errors with `SingularInertia` when the `Paper` model's A leaves the
/// numerically meaningful region (|det| below 1e-9 or condition estimate
/// above 1e12).
pub fn forward_dynamics(
    params: &ManipulatorParams,
    state: &JointState,
    tau: &Vector3<f64>,
    f_ext: &Vector3<f64>,
) -> Result<Vector3<f64>, DynamicsError> {
    let a = inertia_matrix(params, &state.q);
    let rhs = tau
        - velocity_coupling(params, state)
        - gravity_vector(params)
        - params.friction().component_mul(&state.qdot)
        - f_ext;
    solve3(&a, &rhs)
}

/// Direct 3×3 solve with partial pivoting plus a determinant/condition
/// guard.
pub fn solve3(a: &Matrix3<f64>, rhs: &Vector3<f64>) -> Result<Vector3<f64>, DynamicsError> {
    let det = a.determinant();
    if !det.is_finite() || det.abs() < DET_TOLERANCE {
        return Err(DynamicsError::SingularInertia { det });
    }
    // cheap condition estimate: max-norm of A times max-norm of A⁻¹
    let inv = a
        .try_inverse()
        .ok_or(DynamicsError::SingularInertia { det })?;
    let cond = inf_norm(a) * inf_norm(&inv);
    if !cond.is_finite() || cond > COND_LIMIT {
        return Err(DynamicsError::SingularInertia { det });
    }
    let lu = a.lu();
    lu.solve(rhs).ok_or(DynamicsError::SingularInertia { det })
}

fn inf_norm(m: &Matrix3<f64>) -> f64 {
    (0..3)
        .map(|i| (0..3).map(|j| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Diagonal inertia matrix of the textbook reference model.
/// Which rigid-body model the torque maps are built from: the quirky
/// matrix-form `Paper` entries or the textbook cylindrical-arm model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Paper,
    #[default]
    Reference,
}

/// Inertia matrix of the selected model.
pub fn model_inertia(params: &ManipulatorParams, q: &Vector3<f64>, kind: ModelKind) -> Matrix3<f64> {
    match kind {
        ModelKind::Paper => inertia_matrix(params, q),
        ModelKind::Reference => Matrix3::from_diagonal(&reference_inertia(params, q)),
    }
}

/// Velocity-product torques of the selected model.
pub fn model_velocity_coupling(
    params: &ManipulatorParams,
    state: &JointState,
    kind: ModelKind,
) -> Vector3<f64> {
    match kind {
        ModelKind::Paper => velocity_coupling(params, state),
        ModelKind::Reference => {
            let q3 = state.q[2];
            let th1dot = state.qdot[0];
            let q3dot = state.qdot[2];
            Vector3::new(
                2.0 * params.m3 * q3 * q3dot * th1dot,
                0.0,
                -params.m3 * q3 * th1dot * th1dot,
            )
        }
    }
}

pub fn reference_inertia(params: &ManipulatorParams, q: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(
        params.i3 + params.m3 * q[2] * q[2],
        params.m2 + params.m3,
        params.m3,
    )
}

/// Textbook cylindrical-robot dynamics used as the sane-model oracle:
///   τ₁ = (I₃ + m₃q₃²)θ̈₁ + 2m₃q₃q̇₃θ̇₁
///   τ₂ = (m₂ + m₃)q̈₂ + (m₂ + m₃)g
///   τ₃ = m₃q̈₃ − m₃q₃θ̇₁²
pub fn reference_model_dynamics(
    params: &ManipulatorParams,
    state: &JointState,
    tau: &Vector3<f64>,
    f_ext: &Vector3<f64>,
) -> Vector3<f64> {
    let m = reference_inertia(params, &state.q);
    let q3 = state.q[2];
    let th1dot = state.qdot[0];
    let q3dot = state.qdot[2];
    let fr = params.friction().component_mul(&state.qdot);
    let rhs = Vector3::new(
        tau[0] - f_ext[0] - fr[0] - 2.0 * params.m3 * q3 * q3dot * th1dot,
        tau[1] - f_ext[1] - fr[1] - (params.m2 + params.m3) * params.g,
        tau[2] - f_ext[2] - fr[2] + params.m3 * q3 * th1dot * th1dot,
    );
    rhs.component_div(&m)
}

/// Total energy of the reference model, the conservation oracle.
pub fn reference_model_energy(params: &ManipulatorParams, state: &JointState) -> f64 {
    let m = reference_inertia(params, &state.q);
    let kinetic = 0.5
        * (m[0] * state.qdot[0] * state.qdot[0]
            + m[1] * state.qdot[1] * state.qdot[1]
            + m[2] * state.qdot[2] * state.qdot[2]);
    let potential = (params.m2 + params.m3) * params.g * state.q[1];
    kinetic + potential
}
