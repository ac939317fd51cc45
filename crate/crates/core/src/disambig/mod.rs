//! Collapsing spelling variants of software names into linked entities.

mod cluster;
mod enrichment;
mod kb;
mod normalize;

pub use cluster::{
    cluster_index, cluster_mentions, cluster_report, link_kb, mention_strings, representative_name,
    MentionCluster, MentionString,
};
pub use enrichment::{Enrichment, SoftwareEnrichment};
pub use kb::{Kb, KbEntry, KB_LANGUAGES};
pub use normalize::{make_abbreviation, normalize_mention, Normalizer, DEFAULT_SYLLABLES};

/// Clusters, then links against the KB.
pub fn disambiguate(mentions: &[MentionString], kb: &Kb, nz: &Normalizer) -> Vec<MentionCluster> {
    link_kb(cluster_mentions(mentions, nz), kb, nz)
}
