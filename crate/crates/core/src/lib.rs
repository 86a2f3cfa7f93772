//! Producers as neurons: Cobb-Douglas firms whose profit-maximizing output
//! is a softplus unit in log coordinates, wired into gates, small
//! economies and the trainable Islandia market.
//!
//! The numeric core is generic over `num_traits::Float`; the aliases below
//! fix it to `f64` or `f32`. The Islandia market runs in `f64` only.

// `!(x > 0.0)` style checks reject NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datagen;
pub mod error;
pub mod gates;
pub mod graph;
pub mod islandia;
pub mod producer;
pub mod stats;

pub use error::{EnnError, Result};
pub use producer::{NeuronCoeffs, ProducerParams};

pub type Producer = ProducerParams<f64>;
pub type Producer32 = ProducerParams<f32>;
pub type Neuron = NeuronCoeffs<f64>;
pub type Neuron32 = NeuronCoeffs<f32>;
pub type Economy = graph::LayeredEconomy<f64>;
pub type Economy32 = graph::LayeredEconomy<f32>;
pub type Network = gates::NandNetwork<f64>;
