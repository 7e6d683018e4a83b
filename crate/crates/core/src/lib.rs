//! Question popularity modeling: a calibrated synthetic corpus of Q&A posts, text and
//! topic features, a binned logistic popularity classifier, Boruta feature selection,
//! uplift forests for the "add details" intervention and a scoring service layer.

pub mod boruta;
pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod evalstats;
pub mod popmodel;
pub mod service;
pub mod textfeat;
pub mod topics;
pub mod uplift;

pub use error::{Error, Result};
