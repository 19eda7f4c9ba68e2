//! Per-headline majority vote over encoder-model sentiment labels.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::backends::ClassificationOutcome;
use crate::metrics::{distribution_from_counts, LabelCounts, MetricsError, SentimentDistribution};
use crate::protocol::Sentiment;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnsembleError {
    #[error("cannot vote over an empty label list")]
    EmptyVote,
    #[error("no ensemble members supplied")]
    NoMembers,
    #[error("member {member} covers a different headline set than {reference}")]
    IdSetMismatch { member: String, reference: String },
    #[error("member {member} lists headline {id} more than once")]
    DuplicateId { member: String, id: u64 },
    #[error("tie precedence must list each sentiment exactly once")]
    InvalidPrecedence,
}

/// Order in which tied labels win. Default: Neutral, Negative, Positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Sentiment>", into = "Vec<Sentiment>")]
pub struct TiePolicy {
    precedence: [Sentiment; 3],
}

impl TiePolicy {
    pub fn new(precedence: [Sentiment; 3]) -> Result<Self, EnsembleError> {
        let distinct: BTreeSet<_> = precedence.iter().collect();
        if distinct.len() != 3 {
            return Err(EnsembleError::InvalidPrecedence);
        }
        Ok(Self { precedence })
    }

    pub fn precedence(&self) -> [Sentiment; 3] {
        self.precedence
    }

    fn rank(&self, label: Sentiment) -> usize {
        self.precedence.iter().position(|l| *l == label).unwrap()
    }
}

impl Default for TiePolicy {
    fn default() -> Self {
        Self { precedence: [Sentiment::Neutral, Sentiment::Negative, Sentiment::Positive] }
    }
}

impl TryFrom<Vec<Sentiment>> for TiePolicy {
    type Error = EnsembleError;

    fn try_from(v: Vec<Sentiment>) -> Result<Self, Self::Error> {
        let arr: [Sentiment; 3] = v.try_into().map_err(|_| EnsembleError::InvalidPrecedence)?;
        Self::new(arr)
    }
}

impl From<TiePolicy> for Vec<Sentiment> {
    fn from(p: TiePolicy) -> Self {
        p.precedence.to_vec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub winner: Sentiment,
    pub tie: bool,
}

/// Most frequent label; ties go to the highest-precedence tied label and set `tie`.
pub fn majority_vote(labels: &[Sentiment], policy: &TiePolicy) -> Result<Vote, EnsembleError> {
    if labels.is_empty() {
        return Err(EnsembleError::EmptyVote);
    }
    let counts: LabelCounts = labels.iter().copied().collect();
    let max = Sentiment::ALL.iter().map(|l| counts.get(*l)).max().unwrap();
    let modes: Vec<Sentiment> = Sentiment::ALL.into_iter().filter(|l| counts.get(*l) == max).collect();
    let winner = *modes.iter().min_by_key(|l| policy.rank(**l)).unwrap();
    Ok(Vote { winner, tie: modes.len() > 1 })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleVote {
    pub headline_id: u64,
    pub winner: Sentiment,
    pub tie: bool,
    pub member_labels: Vec<Sentiment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleLabeling {
    pub member_names: Vec<String>,
    pub tie_policy: TiePolicy,
    pub votes: Vec<EnsembleVote>,
    /// Headlines skipped because at least one member has no label for them.
    pub excluded: Vec<u64>,
}

impl EnsembleLabeling {
    pub fn tie_count(&self) -> usize {
        self.votes.iter().filter(|v| v.tie).count()
    }

    pub fn tie_rate(&self) -> f64 {
        if self.votes.is_empty() {
            0.0
        } else {
            self.tie_count() as f64 / self.votes.len() as f64
        }
    }

    pub fn distribution(&self) -> Result<SentimentDistribution, MetricsError> {
        distribution_from_counts(&self.votes.iter().map(|v| v.winner).collect())
    }

    /// The ensemble rendered as outcomes, so it can sit beside real models in a report.
    pub fn as_outcomes(&self, name: &str) -> Vec<ClassificationOutcome> {
        self.votes
            .iter()
            .map(|v| ClassificationOutcome::sentiment_only(v.headline_id, name, v.winner))
            .collect()
    }
}

/// One member's outcomes.
#[derive(Debug, Clone)]
pub struct MemberOutcomes {
    pub name: String,
    pub outcomes: Vec<ClassificationOutcome>,
}

/// Votes headline by headline, in the first member's order. All members must
/// cover the same headline ids.
pub fn build_ensemble_labels(
    members: &[MemberOutcomes],
    policy: &TiePolicy,
) -> Result<EnsembleLabeling, EnsembleError> {
    let first = members.first().ok_or(EnsembleError::NoMembers)?;
    let mut indexed: Vec<HashMap<u64, Option<Sentiment>>> = Vec::with_capacity(members.len());
    for m in members {
        let mut map = HashMap::with_capacity(m.outcomes.len());
        for o in &m.outcomes {
            let label = if o.error.is_some() { None } else { o.sentiment };
            if map.insert(o.headline_id, label).is_some() {
                return Err(EnsembleError::DuplicateId { member: m.name.clone(), id: o.headline_id });
            }
        }
        indexed.push(map);
    }
    for (m, map) in members.iter().zip(&indexed).skip(1) {
        if map.len() != indexed[0].len() || map.keys().any(|k| !indexed[0].contains_key(k)) {
            return Err(EnsembleError::IdSetMismatch { member: m.name.clone(), reference: first.name.clone() });
        }
    }
    let mut votes = Vec::new();
    let mut excluded = Vec::new();
    for o in &first.outcomes {
        let labels: Option<Vec<Sentiment>> = indexed.iter().map(|m| m[&o.headline_id]).collect();
        match labels {
            Some(member_labels) => {
                let vote = majority_vote(&member_labels, policy)?;
                votes.push(EnsembleVote { headline_id: o.headline_id, winner: vote.winner, tie: vote.tie, member_labels });
            }
            None => excluded.push(o.headline_id),
        }
    }
    Ok(EnsembleLabeling {
        member_names: members.iter().map(|m| m.name.clone()).collect(),
        tie_policy: *policy,
        votes,
        excluded,
    })
}

/// JSONL of `{headline_id, winner, tie, member_labels}`.
pub fn write_ensemble_jsonl(labeling: &EnsembleLabeling, path: &std::path::Path) -> std::io::Result<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for v in &labeling.votes {
        serde_json::to_writer(&mut w, v)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use Sentiment::*;

    #[test]
    fn clear_mode() {
        let v = majority_vote(&[Negative, Negative, Neutral, Negative, Neutral, Positive], &TiePolicy::default());
        assert_eq!(v, Ok(Vote { winner: Negative, tie: false }));
    }

    #[test]
    fn tie_uses_precedence() {
        let p = TiePolicy::default();
        let v = majority_vote(&[Negative, Negative, Negative, Neutral, Neutral, Neutral], &p).unwrap();
        assert_eq!(v, Vote { winner: Neutral, tie: true });
        let v = majority_vote(&[Negative, Positive, Negative, Positive], &p).unwrap();
        assert_eq!(v, Vote { winner: Negative, tie: true });
        let p = TiePolicy::new([Positive, Negative, Neutral]).unwrap();
        let v = majority_vote(&[Negative, Positive], &p).unwrap();
        assert_eq!(v.winner, Positive);
    }

    #[test]
    fn empty_vote_and_bad_policy() {
        assert_eq!(majority_vote(&[], &TiePolicy::default()), Err(EnsembleError::EmptyVote));
        assert_eq!(TiePolicy::new([Neutral, Neutral, Positive]), Err(EnsembleError::InvalidPrecedence));
        assert!(serde_json::from_str::<TiePolicy>(r#"["Neutral","Negative"]"#).is_err());
    }

    fn member(name: &str, labels: &[(u64, Sentiment)]) -> MemberOutcomes {
        MemberOutcomes {
            name: name.into(),
            outcomes: labels.iter().map(|(id, l)| ClassificationOutcome::sentiment_only(*id, name, *l)).collect(),
        }
    }

    #[test]
    fn all_neutral_members() {
        let members: Vec<_> = (0..6)
            .map(|m| member(&format!("m{m}"), &[(1, Neutral), (2, Neutral), (3, Neutral)]))
            .collect();
        let e = build_ensemble_labels(&members, &TiePolicy::default()).unwrap();
        assert_eq!(e.distribution().unwrap().probabilities(), [0.0, 1.0, 0.0]);
        assert_eq!(e.tie_count(), 0);
    }

    #[test]
    fn id_mismatch_and_errors_excluded() {
        let a = member("a", &[(1, Neutral), (2, Negative)]);
        let b = member("b", &[(1, Neutral)]);
        assert!(matches!(
            build_ensemble_labels(&[a.clone(), b], &TiePolicy::default()),
            Err(EnsembleError::IdSetMismatch { .. })
        ));
        let mut c = member("c", &[(1, Neutral), (2, Negative)]);
        c.outcomes[1].error = Some("TransportError: down".into());
        c.outcomes[1].sentiment = None;
        let e = build_ensemble_labels(&[a, c], &TiePolicy::default()).unwrap();
        assert_eq!(e.excluded, vec![2]);
        assert_eq!(e.votes.len(), 1);
        assert_eq!(build_ensemble_labels(&[], &TiePolicy::default()), Err(EnsembleError::NoMembers));
    }

    #[test]
    fn member_order_does_not_change_winners() {
        let a = member("a", &[(1, Neutral), (2, Negative), (3, Positive)]);
        let b = member("b", &[(1, Negative), (2, Negative), (3, Positive)]);
        let c = member("c", &[(1, Positive), (2, Neutral), (3, Neutral)]);
        let p = TiePolicy::default();
        let x = build_ensemble_labels(&[a.clone(), b.clone(), c.clone()], &p).unwrap();
        let y = build_ensemble_labels(&[c, a, b], &p).unwrap();
        let winners = |e: &EnsembleLabeling| e.votes.iter().map(|v| (v.headline_id, v.winner, v.tie)).collect::<Vec<_>>();
        assert_eq!(winners(&x), winners(&y));
    }
}
