//! Evaluation toolkit for molecule captioning and text-conditioned molecule
//! generation, plus a span-corruption pretraining data pipeline.
//!
//! Molecules are handled as SMILES strings parsed into [`smiles::MolGraph`]
//! values; the metric modules build on top of that.

pub mod corrupt;
pub mod embed;
pub mod fingerprint;
pub mod harness;
pub mod hash;
pub mod retrieval;
pub mod smiles;
pub mod text;
