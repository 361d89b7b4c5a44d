//! Muscle simulation and gait inverse dynamics.
//!
//! The crate models skeletal muscle as populations of motor units with
//! short-decay twitches, wave summation and tetanic saturation, and pairs
//! that with a family of per-muscle inverse-dynamics routines that turn
//! joint-angle traces for one gait cycle into tension-force traces for six
//! lower-body muscles. A size-principle recruitment solver closes the loop:
//! given a target force trace it emits per-motor-unit stimulation plans whose
//! forward evaluation reproduces the target.
//!
//! Start with the `examples/` directory; each example exercises one
//! capability end to end. The `myogait` binary exposes the same pipeline as
//! batch subcommands (`boots`, `recruit`, `analyze`, `simulate`).

pub mod boots;
pub mod config;
pub mod datasets;
pub mod io;
pub mod kinematics;
pub mod muscle;
pub mod recruitment;
pub mod sim;
