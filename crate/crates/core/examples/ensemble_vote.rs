//! Hard majority voting across five models, including a tie.

use fragc::domain::ProbabilityVector;
use fragc::ensemble::majority_vote;

fn pv(p: [f64; 4]) -> ProbabilityVector {
    ProbabilityVector::new(p).expect("valid vector")
}

fn main() -> fragc::Result<()> {
    let plurality = [
        pv([0.8, 0.1, 0.05, 0.05]),
        pv([0.6, 0.3, 0.05, 0.05]),
        pv([0.1, 0.8, 0.05, 0.05]),
        pv([0.7, 0.1, 0.1, 0.1]),
        pv([0.2, 0.2, 0.5, 0.1]),
    ];
    let rec = majority_vote(&plurality)?;
    println!("votes {:?} -> {} (mean {:?})", rec.vote_counts(), rec.winner, rec.ensemble.values());

    let tied = [
        pv([0.95, 0.05, 0.0, 0.0]),
        pv([0.95, 0.05, 0.0, 0.0]),
        pv([0.15, 0.85, 0.0, 0.0]),
        pv([0.15, 0.85, 0.0, 0.0]),
        pv([0.0, 0.0, 1.0, 0.0]),
    ];
    let rec = majority_vote(&tied)?;
    println!("votes {:?} -> {} (tie broken: {})", rec.vote_counts(), rec.winner, rec.tie_broken);
    Ok(())
}
