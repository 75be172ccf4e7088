use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::hdp::Topic;

/// Topic assigning the most probability to the query terms. Terms outside
/// the vocabulary are ignored; ties go to the heavier topic, then to the
/// lower topic id.
pub fn find_topic<'a, S: AsRef<str>>(topics: &'a [Topic], query: &[S], vocab: &Vocabulary) -> Result<&'a Topic> {
    let mut words: Vec<usize> = query
        .iter()
        .filter_map(|t| vocab.index_of(&t.as_ref().to_lowercase()))
        .collect();
    words.sort_unstable();
    words.dedup();
    if words.is_empty() {
        return Err(Error::invalid("no query term is in the vocabulary"));
    }
    let score = |t: &Topic| words.iter().map(|&w| t.prob_of(w)).sum::<f64>();
    topics
        .iter()
        .map(|t| (score(t), t))
        .max_by(|(sa, a), (sb, b)| {
            sa.total_cmp(sb)
                .then(a.mass.cmp(&b.mass))
                .then(b.topic_id.cmp(&a.topic_id))
        })
        .map(|(_, t)| t)
        .ok_or_else(|| Error::invalid("no topics to search"))
}
