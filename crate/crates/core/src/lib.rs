//! Summarization-data distillation with PMI critics.
//!
//! A teacher language model writes summary/document pairs, three critics
//! (brevity, saliency, faithfulness) keep the good ones, and the survivors
//! either self-train the teacher or become distillation data. Scalar-valued
//! types are generic over [`Real`]; the aliases below fix the common choices.

pub mod control;
pub mod critics;
pub mod generator;
pub mod num;
pub mod pipeline;
pub mod scoring;
pub mod synth;
pub mod text;

pub use num::{Exact, Real, Scalar};

pub type CriticConfigF64 = critics::CriticConfig<f64>;
pub type VerdictF64 = critics::CriticVerdict<f64>;
pub type RecordF64 = pipeline::DatasetRecord<f64>;
pub type LogDistF64 = scoring::LogDist<f64>;
pub type RankedF64 = pipeline::Ranked<f64>;
/// Annotation runs on exact rationals so bucket edges never drift.
pub type ExactThresholds = control::ControlThresholds<Exact>;
pub type ExactAttributes = control::ControlAttributes<Exact>;
