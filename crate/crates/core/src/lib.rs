//! Circulation-state classification during cardiopulmonary resuscitation
//! from 4 s snippets of paired ECG and accelerometry (ACC).
//!
//! The crate covers the full pipeline: snippet construction from annotated
//! recordings, the 49 hand-crafted features, an RBF support vector machine
//! trained by sequential minimal optimization, the repeated patient-wise
//! evaluation protocol, and a synthetic recording generator with known
//! ground truth.

// `!(x > 0.0)` is used on purpose so that NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod case_io;
pub mod dataset;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod features;
pub mod par;
pub mod signal;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};
pub use features::{FeatureSet, FeatureVector, FEATURE_COUNT};
pub use signal::{Label, Recording, Rhythm, Snippet, FS, SNIPPET_LEN};
