//! How well can a macroscopic superposition be told apart from its
//! incoherent mixture when the measuring device carries only a finite
//! quantum reference frame?
//!
//! The crate computes the twirled trace distance between a superposition
//! and its classical counterpart exactly — by decomposing the joint
//! system-plus-frame state into superselection sectors — and in closed
//! form for the photon, spin and position settings, models the noisy
//! collective measurement induced by a Jaynes-Cummings interaction,
//! bounds the distance for arbitrary macroscopic states by the frame
//! variance, and covers the two-copy constructions that need no external
//! frame at all.

pub mod canonical;
pub mod constants;
pub mod distinguish;
pub mod error;
pub mod general_macro;
pub mod jc;
pub mod limits;
pub mod number_states;
pub mod numerics;
pub mod report;
pub mod twirl;
pub mod two_copy;

pub use error::{Error, Result};
