//! Effective one-dimensional edge operators: the matrix Schrödinger family 𝕊(κ) and the
//! Dirac families Ɗ±(κ), with essential spectra, gap eigenvalues, closed-form oracles,
//! eigenvalue curves and spectral flow.

pub mod curves;
pub mod essential;
pub mod operator;
pub mod oracle;
pub mod spectrum;

pub use curves::{assign, crossings, perturbation_slopes, trace_eigenvalue_curves, CurveEnd, CurveTrace, EigenvalueCurve, Slope};
pub use essential::{dirac_gap_width, essential_spectrum_edges};
pub use operator::{Coeffs, EffEdgeOperator, Kind};
pub use oracle::{dirac_zero_mode, exact_s0_oracle, l2_error, matching_s0_oracle, DiracZeroMode, ExactS0Pair, ModeEigenpair};
pub use spectrum::{gap_bound_states, gap_bound_states_with, BoundOpts, SpectrumSlice};
