//! Hard majority voting across per-model predictions.
//!
//! Each model votes for its argmax class. The class with the most votes wins;
//! a tie on vote count goes to the tied class with the largest summed
//! probability across all models, and an exact tie on that goes to the lowest
//! wire id. The probability vector passed downstream is the element-wise mean
//! of the inputs.

use serde::{Deserialize, Serialize};

use crate::domain::{ActionClass, ModelVote, ProbabilityVector, NUM_CLASSES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ballot {
    pub model: String,
    pub vote: ActionClass,
    pub probabilities: ProbabilityVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub votes: Vec<Ballot>,
    pub winner: ActionClass,
    /// More than one class shared the top vote count.
    pub tie_broken: bool,
    /// Element-wise mean of the input vectors.
    pub ensemble: ProbabilityVector,
}

impl VoteRecord {
    pub fn vote_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for b in &self.votes {
            counts[b.vote.index()] += 1;
        }
        counts
    }
}

/// Votes over unnamed vectors; models are named `model-<i>`.
pub fn majority_vote(predictions: &[ProbabilityVector]) -> Result<VoteRecord> {
    let named: Vec<ModelVote> = predictions
        .iter()
        .enumerate()
        .map(|(i, p)| ModelVote {
            model: format!("model-{i}"),
            probabilities: *p,
        })
        .collect();
    majority_vote_named(&named)
}

pub fn majority_vote_named(predictions: &[ModelVote]) -> Result<VoteRecord> {
    if predictions.is_empty() {
        return Err(Error::invalid("majority vote needs at least one prediction"));
    }

    let mut counts = [0usize; NUM_CLASSES];
    let mut sums = [0.0f64; NUM_CLASSES];
    let votes: Vec<Ballot> = predictions
        .iter()
        .map(|mv| {
            let vote = mv.probabilities.argmax();
            counts[vote.index()] += 1;
            for (s, p) in sums.iter_mut().zip(mv.probabilities.values()) {
                *s += p;
            }
            Ballot {
                model: mv.model.clone(),
                vote,
                probabilities: mv.probabilities,
            }
        })
        .collect();

    let top = *counts.iter().max().expect("four classes");
    let tied: Vec<usize> = (0..NUM_CLASSES).filter(|&i| counts[i] == top).collect();
    let tie_broken = tied.len() > 1;
    // `tied` is ascending, so keeping the first strict maximum picks the
    // lowest wire id on an exact probability tie
    let mut winner = tied[0];
    for &i in &tied[1..] {
        if sums[i] > sums[winner] {
            winner = i;
        }
    }

    let n = predictions.len() as f64;
    let mut mean = sums.map(|s| s / n);
    let total: f64 = mean.iter().sum();
    mean.iter_mut().for_each(|v| *v /= total);

    Ok(VoteRecord {
        votes,
        winner: ActionClass::ALL[winner],
        tie_broken,
        ensemble: ProbabilityVector::new(mean)?,
    })
}
