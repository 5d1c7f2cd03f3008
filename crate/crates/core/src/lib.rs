//! Author profiling from short social-media posts.
//!
//! The crate covers the whole path from forum crawl archives to per-user
//! demographic predictions: ingestion with quote separation, chatspeak-aware
//! tokenization, feature selection and representation, a suite of
//! self-contained classifiers, and the message-based scheme that aggregates
//! post-level predictions into user-level decisions.

pub mod aggregate;
pub mod artifact;
pub mod corpus;
pub mod error;
pub mod evaluate;
pub mod features;
pub mod ingest;
pub mod learners;
pub mod lint;
pub mod pipeline;
pub mod scalar;
pub mod textprep;
pub mod userlevel;
pub mod util;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SparseVec = features::SparseVector<f64>;
pub type SparseVec32 = features::SparseVector<f32>;
pub type Model = learners::TrainedModel<f64>;
pub type Model32 = learners::TrainedModel<f32>;
pub type Pred = learners::Prediction<f64>;
pub type Pred32 = learners::Prediction<f32>;
