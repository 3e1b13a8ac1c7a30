//! Convolution probes, the dyadic bilinear case analysis and the
//! exact-geometry counterexamples.

pub mod conv_lemmas;
pub mod convolution;
pub mod counterexample;
pub mod geometry;
pub mod lemma31;
pub mod report;
pub mod trial;

pub use conv_lemmas::{
    check_hypotheses, conv_lemma_ratio, conv_lemma_setup, measured_separation, probe_convolution_lemma,
    probe_convolution_lemma_default, ConvLemma, ConvSetup,
};
pub use convolution::{convolve, convolve_direct};
pub use counterexample::{
    convolution_output_norm, counterexample_r0, counterexample_rect, example1_experiment, example2_experiment,
    indicator_norm, indicator_norm_with, ExampleReport, ExampleRow,
};
pub use geometry::{
    clip_convex, indicator_convolution_clipped, indicator_convolution_value, intersection_area, polygon_area,
    Parallelogram, Point,
};
pub use lemma31::{
    bilinear_lhs, case_constant, lemma31_case, lemma31_geometry, lemma31_matches, lemma31_ratio, probe_lemma31,
    CaseAssignment, Lemma31Case, Lemma31Geometry, Lemma31Probe, LhsTarget,
};
pub use report::{ProbeReport, ScaleRow};
pub use trial::{
    make_trial_field, make_trial_pair, support_separation, DyadicSupportSpec, ProbeLattice, Region, SignPattern,
};
