//! Bulk Floquet–Bloch solvers, effective-parameter extraction and strip edge spectra.

pub mod assemble;
pub mod bulkfb;
pub mod edgestrip;
pub mod effparams;
