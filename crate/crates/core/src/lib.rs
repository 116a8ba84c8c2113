//! Volumetric segmentation evaluation for white matter hyperintensity (WMH)
//! lesions on FLAIR MRI.
//!
//! The crate covers the non-neural parts of a WMH segmentation pipeline:
//! NIfTI-1 I/O ([`nifti`]), intensity preprocessing ([`preprocess`]),
//! connected-component morphology ([`morphology`]), STAPLE fusion of several
//! candidate masks ([`staple`]), the evaluation metrics ([`metrics`]), the
//! Tversky / F-beta training objectives ([`scores`]), nonparametric model
//! comparison ([`stats`]) and a synthetic phantom generator ([`phantom`]).

pub mod distance;
pub mod error;
pub mod metrics;
pub mod morphology;
pub mod nifti;
pub mod phantom;
pub mod preprocess;
pub mod scores;
pub mod staple;
pub mod stats;
pub mod volume;

pub use error::{Error, Result};
pub use metrics::{CaseMetrics, ConfusionCounts, SizeBins};
pub use morphology::{Connectivity, LabelMap3D, LesionRecord};
pub use staple::{RaterStack, StapleParams, StapleResult};
pub use stats::{FriedmanResult, MetricTable};
pub use volume::{BinaryMask3D, Field3D, Geometry, ProbabilityMap3D, Volume3D};
