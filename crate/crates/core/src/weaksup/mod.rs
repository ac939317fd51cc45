//! Candidate generation, labeling functions, the generative label model and
//! silver-standard corpus emission.

mod candidates;
mod label_model;
mod lf;
mod ssc;

pub use candidates::{
    generate_candidates, is_name_like, is_proper_noun_shaped, resolve_overlaps, Candidate,
    MAX_CANDIDATE_TOKENS,
};
pub use label_model::{fit_label_model, EmConfig, LabelModel, VoteMatrix, DEFAULT_THRESHOLD};
pub(crate) use lf::COMPANY_SUFFIXES;
pub use lf::{
    context_window, developer_at, english_words, general_context_cues, is_number, is_version_token,
    lf_dictionary, lf_exact_context, lf_general_context, lf_negative_list, load_negative_list,
    load_wordlist, sentence_lemmas, version_at, ContextCues, ExactPattern, ExactRules,
    KbAliasDictionary, LabelingFunctionVote, LabelingFunctions, Vote, CONTEXT_WINDOW,
    DEFAULT_EXACT_RULES, DEFAULT_NEGATIVE_LIST, LANGUAGES, LF_DICTIONARY, LF_EXACT, LF_GENERAL,
    LF_IDS, LF_NEGATIVE,
};
pub use ssc::{
    accepted_spans, apply_lfs, emit_ssc, false_positive_ngrams, vote_matrix, LabeledSentence,
};
