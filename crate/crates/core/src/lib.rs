//! Interactive question-driven retrieval.
//!
//! The engine narrows a text corpus towards the item a user is looking for:
//! it clusters the corpus vocabulary, relates clusters through Word Mover's
//! Distance, picks a representative sentence from the most distinct cluster,
//! turns it into a question with an attention seq2seq model and eliminates
//! parts of the corpus based on the typed answer.

pub mod corpus;
pub mod embedding;
pub mod clustering;
pub mod transport;
pub mod entity;
pub mod qgen;
pub mod texteval;
pub mod session;
pub mod config;
pub mod service;
pub mod cli;
