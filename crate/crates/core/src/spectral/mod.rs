//! Spectral side of the model: Bessel functions, the characteristic equation
//! and its asymptotics, and the discrete generator with its resolvent.

pub mod bessel;
pub mod characteristic;
pub mod generator;

pub use characteristic::{
    asymptotic_eigenvalue, asymptotic_root, char_function, compute_spectrum, refine_root,
    spectrum_to_json, AsymptoticCase, AsymptoticConstants, EigenvalueEstimate,
};
pub use generator::{
    assemble_discrete_generator, build_generator, fit_resolvent_exponent, resolvent_peak,
    resolvent_peaks, write_resolvent_csv, Generator, ResolventFit, ResolventPeak,
};
