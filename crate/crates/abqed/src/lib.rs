//! Aharonov-Bohm interferometer phases from coherent-state effective
//! potentials.
//!
//! The crate computes the phase difference a charged particle picks up
//! between two interferometer paths when the electromagnetic interaction
//! is mediated by a quantized field whose ground state is a displaced
//! (coherent) vacuum. The coherent-state expectation values of the
//! potential operators reduce to the classical Lorenz-gauge potentials,
//! so the machinery is:
//!
//! * [`sources`] - classical charge/current geometry with adiabatic
//!   schedules,
//! * [`potentials`] - real-space Green's-function quadrature for the
//!   effective potentials, plus circulation and kernel oracles,
//! * [`modespace`] - covariant mode amplitudes, k-space reconstruction of
//!   the potentials, and the field ground-energy constant,
//! * [`gauge`] - classical gauge functions, the transformed potentials,
//!   and the Hamiltonian-vs-energy distinction,
//! * [`interferometer`] - two-path scenarios, dual phase calculators, and
//!   the magnetic / electric / electrodynamic presets,
//! * [`config`] - the run-configuration schema behind the CLI.
//!
//! Everything is pure and immutable after construction; evaluations are
//! deterministic functions of their inputs with fixed-order reductions.

pub mod config;
pub mod constants;
pub mod error;
pub mod gauge;
pub mod geometry;
pub mod interferometer;
pub mod modespace;
pub mod potentials;
pub mod quadrature;
pub mod report;
pub mod schedule;
pub mod sources;

pub use constants::{PhysicalConstants, UnitSystem};
pub use error::{Error, Result};
pub use geometry::Vec3;
pub use quadrature::QuadratureSettings;
pub use schedule::TimeSchedule;
pub use sources::{ElementKind, SourceConfiguration, SourceElement};
