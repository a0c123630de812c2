//! On-disk formats (TSF feature matrices, tab-separated manifests) and the
//! synthetic corpus generator.

pub mod manifest;
pub mod synth;
pub mod tsf;

pub use manifest::{read_manifest, write_manifest};
pub use synth::{synth_generate, write_corpus, ClassBlueprint, Coupling, Periodicity, SynthSpec};
pub use tsf::{decode_tsf, encode_tsf, read_tsf, write_tsf, TsfWriter, TSF_HEADER_LEN, TSF_MAGIC};
