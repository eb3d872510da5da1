//! Exact construction and analysis of Delone sets in the 2-adic numbers.
//!
//! Points are dyadic rationals ([`Dyadic`]); balls `A_n = {|x|_2 <= 2^n}` are
//! clopen subgroups, so patch extraction, coset counting and V-closeness are
//! all exact finite computations on well-placed sets.
//!
//! Haar measure is normalized by `θ(A_0) = 1`, so `θ(A_n) = 2^n`.

pub mod ball;
pub mod construction;
pub mod diffraction;
pub mod domination;
pub mod dyadic;
mod error;
pub mod patch;
pub mod pointset;
pub mod representation;
pub mod schedule;

pub use ball::{coset_rep, haar, in_ball, transversal, Ball};
pub use construction::{
    build, extend, min_r, verify_lemma, BuildResult, ClauseReport, Extension, LemmaReport, StageSet,
};
pub use diffraction::{
    almost_period_defect, autocorr, pp_mass, spectrum, Autocorrelation, PairCounting, Spectrum,
};
pub use dyadic::{Dyadic, Valuation};
pub use error::{Error, Result};
pub use patch::{
    entropy_series, frequency, frequency_sorted, patch_at, patch_set, EntropyRow, Patch, PatchSet,
};
pub use pointset::{
    delone_check, delta_v, model_set, xi_plus, DeloneReport, FinitePointSet, Interval,
};
pub use representation::{
    min_representation, pat_series, v_close, ClosenessGraph, PatRow, Representation,
};
pub use schedule::{schedule, StageSchedule, Target};
