//! Pseudo-spectral simulation and analysis toolkit for the stochastically
//! forced 2D Navier-Stokes perturbation system near Couette flow on the
//! periodic channel, with fast-slow averaging diagnostics: the coupled
//! fast-slow, pseudo-linearized and auxiliary processes, the frozen fast
//! process with its Gaussian invariant measure, the averaged slow
//! equation, hypocoercive energy monitors, and an experiment harness.

pub mod audit;
pub mod averaged;
pub mod checkpoint;
pub mod config;
pub mod energy;
pub mod error;
pub mod frozen;
pub mod harness;
pub mod linalg;
pub mod monitor;
pub mod noise;
pub mod nonlinear;
pub mod shear;
pub mod spectral;
pub mod stepper;
