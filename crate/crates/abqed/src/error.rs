//! Error type shared by all evaluation paths.

use thiserror::Error;

/// Errors surfaced by source evaluation, quadrature, and scenario runs.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A field evaluation was requested within the exclusion radius of a
    /// singular source (point charge, shell surface, filament).
    #[error("evaluation point lies within {radius:.3e} m of a singular source ({what})")]
    EvaluationInsideSource { what: &'static str, radius: f64 },

    /// An operation that only makes sense for solenoids was called on
    /// another element kind.
    #[error("operation requires a solenoid element, got {got}")]
    WrongElementKind { got: &'static str },

    /// Adaptive quadrature hit the maximum subdivision depth before
    /// meeting the requested tolerance.
    #[error("quadrature for {what} did not converge: est. error {est_error:.3e} > tol {tol:.3e}")]
    QuadratureNotConverged {
        what: &'static str,
        est_error: f64,
        tol: f64,
    },

    /// Circulation was requested over a polyline whose endpoints do not
    /// coincide.
    #[error("loop is not closed: endpoint gap {gap:.3e} m exceeds {tol:.3e} m")]
    OpenLoop { gap: f64, tol: f64 },

    /// Mode amplitudes are undefined at k = 0.
    #[error("mode amplitude requested at zero wavevector")]
    ZeroWavevector,

    /// The ground-energy constant diverges for point-like sources
    /// (point charges, or filaments with zero regularization length).
    #[error("ground-energy constant diverges: {what}")]
    SelfEnergyDivergent { what: &'static str },

    /// The phase accumulator hit its refinement limit.
    #[error("phase integration did not converge: est. error {est_error:.3e} rad > tol {tol:.3e} rad")]
    PhaseNotConverged { est_error: f64, tol: f64 },

    /// The Hamiltonian and energy calculators disagreed on a closed
    /// scenario beyond tolerance. For a gauge with no explicit time
    /// dependence this signals a numerics bug; a time-dependent gauge
    /// genuinely splits the two calculators by
    /// (q/hbar) * [int_a - int_b] dF/dt dt.
    #[error(
        "phase calculators disagree on closed loop: |delta_ham - delta_energy| = {mismatch:.3e} rad > {tol:.3e} rad{hint}"
    )]
    CalculatorMismatchOnClosedLoop {
        mismatch: f64,
        tol: f64,
        hint: &'static str,
    },

    /// Scenario construction was given inconsistent parameters.
    #[error("bad scenario parameters: {0}")]
    BadScenarioParameters(String),

    /// A path or configuration failed validation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The run-configuration file failed to parse or validate.
    #[error("configuration error: {0}")]
    ConfigError(String),
}

pub type Result<T> = std::result::Result<T, Error>;
