//! Static decoding: nodal feature matrices, one-vs-one linear SVMs and
//! leave-one-subject-out cross-validation.

mod cv;
mod features;
mod svm;

pub use cv::{binomial_interval, loso_cv, CvResult, FoldResult};
pub use features::{assemble_features, assemble_raw, FeatureMatrix, SampleMeta, Standardizer};
pub use svm::{train_linear_svm_ovo, BinaryModel, LinearSvmModel, SvmParams};
