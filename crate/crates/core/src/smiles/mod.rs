//! SMILES parsing, validation, tokenization and canonicalization.

mod aromaticity;
mod canon;
mod element;
mod graph;
mod matching;
mod parser;
mod rings;
mod tokenize;
mod writer;

pub use canon::{canonical_smiles, canonicalize, symmetry_classes};
pub use element::Element;
pub use graph::{Atom, Bond, BondOrder, BondStereo, MolGraph};
pub use parser::{is_valid, parse, ParseError, ParseErrorKind};
pub use tokenize::tokenize_smiles;
pub use writer::write_smiles;
