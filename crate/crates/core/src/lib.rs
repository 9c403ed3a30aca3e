//! Simulation workbench for trajectory tracking of a 3-DOF cylindrical
//! manipulator (revolute base, vertical and radial prismatic joints).
//!
//! The crate provides the manipulator dynamics, a family of tracking
//! controllers (PD, sliding-mode, and sliding-mode with an adaptive
//! radial-basis compensator), a fixed-step closed-loop simulator, and
//! deterministic reporting (CSV traces, SVG figures, metric tables).

pub mod config;
pub mod control;
pub mod dynamics;
pub mod netapprox;
pub mod report;
pub mod sim;
pub mod verify;

pub use config::WorkbenchConfig;
pub use dynamics::ManipulatorParams;
