//! State observers for triangular systems whose nonlinearities are Hölder
//! continuous but not Lipschitz.
//!
//! The library covers the full pipeline:
//!
//! * [`numerics`]: signed fractional powers, set-valued sign selections,
//!   saturation and weighted dilations.
//! * [`plant`]: triangular system descriptions, a worked 3-state oscillator
//!   with its order-4 immersion, Hölder-constant estimation and the Young
//!   split of a Hölder bound into a linear gain plus offset.
//! * [`lyapunov`]: a homogeneous Lyapunov function for the observer error
//!   dynamics, numerical gain design by backward recursion, and
//!   sampling-based decrease/robustness certificates.
//! * [`observers`]: high-gain, homogeneous and cascaded observer
//!   right-hand sides sharing one configuration type.
//! * [`sim`]: fixed-step simulation of plant plus observers, filtered
//!   measurement noise, and error metrics (final error, peaking,
//!   convergence time).
//! * [`config`]: serializable scenario descriptions and the built-in
//!   benchmark presets.
//! * [`cli`]: subcommand implementations for the `triobs` binary.

pub mod cli;
pub mod config;
pub mod lyapunov;
pub mod numerics;
pub mod observers;
pub mod plant;
pub mod sim;
