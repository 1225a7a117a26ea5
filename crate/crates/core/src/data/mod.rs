//! Canonical signal I/O, normalization, segmentation, contamination at a
//! target SNR, dataset manifests and synthetic surrogates.

mod io;
mod manifest;
mod mix;
mod pairs;
mod prep;
mod synth;

pub use crate::signal::{Provenance, Signal};
pub use io::{
    decode_csv, decode_signal, encode_csv, encode_signal, read_signal, write_signal, SIGNAL_MAGIC, SIGNAL_VERSION,
};
pub use manifest::{
    assemble_pairs, build_dataset, default_test_grid, default_train_grid, load_split, snr_grid, split_rng, Dataset,
    DatasetManifest, FileRef, Split, SplitSources, SplitSpec, MANIFEST_SCHEMA_VERSION,
};
pub use mix::{mix_at_snr, snr_scale, NoisyPair};
pub use pairs::{read_pairs, write_pairs, PairEntry, PairIndex, PAIR_INDEX_SCHEMA_VERSION};
pub use prep::{denormalize, normalize, segment};
pub use synth::{
    split_counts, synth_ecg, synth_ecg_with, synth_semg, synthetic_dataset, synthetic_sources, write_synthetic_corpus,
    EcgJitter, SynthCorpusConfig, SynthDatasetConfig, SyntheticEcg, Wave, BEAT, RAW_SEMG_FS,
};
