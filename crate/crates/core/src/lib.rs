//! Interval type-2 fuzzy neural network for detecting Parkinson's disease
//! from gait.
//!
//! The crate covers the full pipeline:
//!
//! 1. [`vgrf_io`] reads vertical ground reaction force recordings.
//! 2. [`preprocess`] trims the walk edges, median-filters every channel and
//!    cuts out turnaround strides.
//! 3. [`gait_features`] segments strides and computes ten normalised timing
//!    features.
//! 4. [`learning`] builds the rule base with [`fcm`] clustering and grows it
//!    online.
//! 5. [`it2fnn`] runs inference; [`rule_report`] explains it.
//! 6. [`evaluation`] scores models and runs the experiments.
//!
//! ```
//! use pd_it2fnn::{FuzzyRule, NormalizationParams, RuleBase, Widths, Class};
//!
//! let rules = vec![
//!     FuzzyRule { centers: [0.3; 10], consequent: 1.0, sigma_override: None },
//!     FuzzyRule { centers: [0.7; 10], consequent: -1.0, sigma_override: None },
//! ];
//! let rb = RuleBase::new(rules, Widths::new(0.01, 0.1)?, NormalizationParams::unit())?;
//! let trace = rb.infer(&[0.32; 10])?;
//! assert_eq!(trace.decision, Class::Patient);
//! # Ok::<(), pd_it2fnn::Error>(())
//! ```

pub mod class;
pub mod error;
pub mod evaluation;
pub mod fcm;
pub mod gait_features;
pub mod it2fnn;
pub mod learning;
pub mod preprocess;
pub mod rule_report;
pub mod synthetic;
pub mod vgrf_io;

pub use class::{Class, Dataset};
pub use error::{Error, Result};
pub use gait_features::{FeatureRecord, FeatureVector, Inputs, NormalizationParams, FEATURE_COUNT};
pub use it2fnn::{FuzzyRule, InferenceTrace, RuleBase, Widths};
pub use learning::{batch_train, online_update, BatchConfig, OnlineConfig, UpdateOutcome};

// The guide's code blocks run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/gait-features.md")]
    mod gait_features {}
    #[doc = include_str!("../../../book/src/interval-type2-network.md")]
    mod network {}
    #[doc = include_str!("../../../book/src/learning.md")]
    mod learning {}
    #[doc = include_str!("../../../book/src/online-learning.md")]
    mod online_learning {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/interpretability.md")]
    mod interpretability {}
}
