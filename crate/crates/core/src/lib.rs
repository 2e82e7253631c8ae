//! A laboratory for the Ising perceptron under Bernoulli disorder.
//!
//! Every point `x` of the cube `{-1, 1}^n` carries a half-cube
//! `H(x) = {y : x·y ≥ κ√n}` and is switched on independently with
//! probability `p`. The question is whether the half-cubes of the active
//! centers have an empty intersection. The crate provides
//!
//! * [`hypercube`]: bit-packed spin vectors, half-cubes and the sign-switch
//!   and permutation automorphisms;
//! * [`symmetry`]: the agreement-pattern encoding of spin sequences,
//!   automorphism witnesses, admissibility and gentle mappings;
//! * [`sat`]: disorders, three exact emptiness solvers, and samplers
//!   including the monotone coupling;
//! * [`estimators`]: Monte Carlo curves, thresholds, sharpness windows,
//!   influences, boosting sets and the scans built on them;
//! * [`cli`]: the `perclab` command line front end.

pub mod cli;
pub mod cubeset;
pub mod error;
pub mod estimators;
pub mod hypercube;
pub mod rng;
pub mod sat;
pub mod stats;
pub mod suite;
pub mod symmetry;

pub use cubeset::{CubeSet, HalfcubeTemplate};
pub use error::{Error, Result};
pub use hypercube::{
    apply_permutation, apply_sign_switch, dot, halfcube_diff_size, hamming, in_halfcube, ModelParams,
    Permutation, SignSwitch, SpinVector, EXACT_CAP,
};
pub use sat::{
    sample_coupled, sample_disorder, solution_set, solve, solve_with, Backend, CouplingSample, Disorder,
    DisorderPath, Instance, SolveResult,
};
pub use symmetry::{
    build_gentle_map, compose_to_reference, decode, encode, gentle_apply, is_admissible, match_automorphism,
    sign_switch_invariance_check, AdmissibilityParams, AutomorphismWitness, GentleMap, PatternPartition,
    SpinSequence,
};
