//! Frozen Gaussian approximation (FGA) and frozen Gaussian grid-point
//! correction (FGGC) solvers for the semi-classical Schrödinger equation
//! `iε ∂_t u = -ε²/2 Δu + V u`, with a time-splitting spectral reference.

pub mod config;
pub mod decompose;
pub mod error;
pub mod exec;
pub mod fft;
pub mod field;
pub mod flow;
pub mod initial;
pub mod lsa;
pub mod mesh;
pub mod metrics;
pub mod packet;
pub mod potential;
pub mod reconstruct;
pub mod solver;
pub mod tables;
pub mod tssp;

pub use num_complex::Complex64 as C64;

pub use config::{ExperimentConfig, InitialSpec, SolverKind};
pub use decompose::{initial_decompose, transform_u0, DecomposeOptions, PacketEnsemble};
pub use error::{FggcError, Result};
pub use exec::Exec;
pub use field::{ComplexField, FieldFile};
pub use flow::{evolve_all, evolve_packet};
pub use lsa::{build_normal_system, e_lsa, m_lsa, m_lsa_h1, precompute, split_packet, PrecomputedLSA, SplitResult};
pub use mesh::{frac_decompose, neighbor_map, FracDecomp, MeshSpec, NeighborStrategy, PhaseIndex, RVec};
pub use metrics::{h1_error, l2_error, ErrorReport};
pub use packet::{eval_packet, grad_inner_product, h1_norm, inner_product, l2_norm, GaussianParams, WavePacket};
pub use potential::Potential;
pub use reconstruct::{accumulate_corrected, reconstruct_direct, reconstruct_fft, PhaseGridAmplitudes};
pub use solver::{run, solve_fga, solve_fggc, solve_fggc_multistep, Problem, SolveOutput, Timing};
pub use tssp::{solve_tssp, tssp_step, SpectralState};
