//! Evaluation against gold annotation, and synthetic corpora to evaluate on.

mod metrics;
mod synth;

pub use metrics::{au_error, aw_error, mismatches, ErrorRate, EvalError, GoldAnnotation};
pub use synth::{
    generate, load_truth, write_corpus, SegmentStatus, SynthCorpus, SynthError, SynthOutput, SynthPaths,
    SynthRecording, SynthSegment, SynthSpec,
};
