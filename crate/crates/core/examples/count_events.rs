//! Duplicate suppression on a gated label stream under each count mode.

use fragc::counter::{count_labels, CountMode};
use fragc::demo::KILL_DEATH_SCENARIO;
use fragc::domain::ActionClass::{Kill as K, NoAction as NA, Smoke as S};

fn main() {
    let scenario: Vec<_> = KILL_DEATH_SCENARIO.iter().enumerate().map(|(i, &c)| (i as u64 * 30, c)).collect();
    let trace = count_labels(&scenario, CountMode::Literal);
    for step in &trace.steps {
        println!(
            "frame {:>3}: {:>5} -> {:<8} counted={}",
            step.frame_index, step.label_before, step.label_after, step.counted
        );
    }
    println!("literal: {}", trace.final_counts);

    let stream: Vec<_> = [K, K, K, NA, S, NA, S].iter().enumerate().map(|(i, &c)| (i as u64, c)).collect();
    for mode in CountMode::ALL {
        println!("{:>18}: {}", mode.as_str(), count_labels(&stream, mode).final_counts);
    }
}
