//! Linear-chain CRF tagger with silver-then-gold training.

mod crf;
mod features;
mod io;
mod tag;
mod train;

pub use crf::{
    log_partition, loss_and_gradient, sequence_score, viterbi, CrfModel, EncodedSentence, Gradient,
    N_LABELS,
};
pub use features::{short_shape, word_shape, FeatureExtractor, FEATURE_TEMPLATE_ID};
pub use io::{load_model, model_from_str, model_to_string, save_model};
pub use tag::{mentions_of, tag_corpus, viterbi_decode, Mention, TaggingResult};
pub use train::{
    encode_corpus, ssc_epoch_plan, train, train_stage, vocabulary, DecayKind, EpochStats,
    NegativeSampler, TrainOutput, TrainingConfig,
};

use crate::corpus::TaggedSentence;
use crate::error::Result;

/// Weighted loss and sparse gradient of one tagged sentence.
pub fn sentence_loss_and_gradient(
    m: &CrfModel,
    fx: &FeatureExtractor,
    ts: &TaggedSentence,
    cfg: &TrainingConfig,
) -> Result<(f64, Gradient)> {
    let x = m.encode(&fx.sentence_features(&ts.sentence));
    loss_and_gradient(m, &x, &ts.tags, cfg.positive_class_weight_boost)
}
