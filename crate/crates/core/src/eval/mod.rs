//! Metrics, patient-wise splitting, the repeated evaluation protocol and
//! probability timelines.

pub mod metrics;
pub mod protocol;
pub mod roc;
pub mod split;
pub mod timeline;

pub use metrics::{metrics, ConfusionCounts, Metrics};
pub use protocol::{run_protocol, EvaluationReport, ProtocolConfig};
pub use roc::{roc_auc, RocCurve};
pub use split::{patient_split, PatientSplit};
pub use timeline::{timeline, Timeline, TimelinePoint};
