//! Offer-first patient-provider matching.
//!
//! Providers are scarce and patients respond in an unknown order, so the
//! planner's lever is the *assortment*: which providers each patient is
//! offered before anyone responds. This crate holds the whole stack —
//!
//! * [`model`]: instances, choice models, offer matrices, response orders;
//! * [`choice`]: sampling and exact per-patient selection probabilities;
//! * [`matching`]: maximum-weight bipartite matching on the quality matrix;
//! * [`oracle`]: exact expected metrics by enumerating small instances;
//! * [`policies`]: assortment builders, from one-provider-each matchings
//!   through grouped sharing, projected gradient descent, order-aware
//!   augmentation, and a dynamic re-solving benchmark;
//! * [`simulate`]: seeded trial streams, paired across policies, with
//!   match-rate/quality/fairness/regret reporting;
//! * [`gen`]: synthetic and geographic instance generators plus file I/O.
//!
//! Everything numeric is generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the aliases at the crate root pin the `f64` case that binaries and tests
//! normally use.

// Index loops mirror the i/j matrix notation the math is written in;
// iterator rewrites of those bodies obscure which axis is which.
#![allow(clippy::needless_range_loop)]

pub mod choice;
pub mod gen;
pub mod matching;
pub mod model;
pub mod oracle;
pub mod policies;
pub mod simulate;

pub mod scalar;

pub use model::{
    validate_instance, Assortment, AvailabilityState, ChoiceModelSpec, Instance, InstanceError,
    ResponseOrder, SelectionOutcome, INSTANCE_FORMAT_VERSION,
};
pub use scalar::Scalar;

/// `f64` instance, the default working type.
pub type Instance64 = model::Instance<f64>;
/// `f64` choice model.
pub type ChoiceModelSpec64 = model::ChoiceModelSpec<f64>;
/// `f64` gradient-descent configuration.
pub type GdConfig64 = policies::GdConfig<f64>;
/// `f64` policy selector.
pub type PolicySpec64 = simulate::PolicySpec<f64>;
/// `f64` evaluation configuration.
pub type EvalConfig64 = simulate::EvalConfig<f64>;
/// `f64` metrics report.
pub type MetricsReport64 = simulate::MetricsReport<f64>;
/// `f64` geographic instance.
pub type GeoInstance64 = gen::GeoInstance<f64>;
