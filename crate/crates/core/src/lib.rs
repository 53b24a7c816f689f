//! Content-based image retrieval and instance-based fire classification.
//!
//! The pipeline is: decode an image ([`imaging`]), map it to a fixed-length
//! feature vector with one of six MPEG-7 style extractors ([`descriptors`]),
//! compare vectors with one of six evaluation functions ([`evalfuncs`]),
//! persist labeled vectors and answer kNN queries ([`featurestore`]), label
//! unseen images by majority vote of their neighbours ([`classifier`]) and
//! measure all of it ([`evalharness`]). [`synth`] generates a labeled
//! stand-in corpus for desk-scale experiments.

pub mod classifier;
pub mod descriptors;
pub mod error;
pub mod evalfuncs;
pub mod evalharness;
pub mod featurestore;
pub mod imaging;
pub mod synth;

pub use classifier::{classify, classify_batch, Classification};
pub use descriptors::{extract, DescriptorConfig, DescriptorId, FeatureVector};
pub use error::{Error, Result};
pub use evalfuncs::{evaluate, EvaluationFunctionId};
pub use featurestore::{Collection, FeatureStore, KnnResult, Label, StoredInstance};
pub use imaging::{decode_image, RasterImage};
