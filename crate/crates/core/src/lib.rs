//! Heat traces, spectra and inverse spectral reconstruction for the ten
//! compact flat 3-manifolds.

pub mod cli;
pub mod geometry;
pub mod heat_trace;
pub mod inverse;
pub mod isospec;
pub mod lattice;
pub mod oracle;
