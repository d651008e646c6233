//! Confusion matrix, per-class precision/sensitivity/F1 and an accuracy plot.
//!
//! ```text
//! cargo run --example evaluate_metrics [-- accuracy.svg]
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fragc::domain::ActionClass;
use fragc::metrics::{evaluate_groups, write_accuracy_plot, LabelledGroup};

fn main() -> fragc::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let groups: Vec<LabelledGroup> = [("vgg16", 0.90), ("xception", 0.86), ("majority", 0.93)]
        .iter()
        .map(|&(name, acc)| {
            let pairs = (0..81)
                .map(|i| {
                    let truth = ActionClass::ALL[i % 4];
                    let pred = if rng.gen_bool(acc) { truth } else { ActionClass::ALL[rng.gen_range(0..4)] };
                    (truth, pred)
                })
                .collect();
            (name.to_string(), pairs)
        })
        .collect();

    let evals = evaluate_groups(&groups)?;
    for e in &evals {
        println!("{}", e.report.render_table(&e.model));
    }
    println!("{}", evals[2].report.render_matrix());
    if let Some(path) = std::env::args().nth(1) {
        write_accuracy_plot(&evals, path.as_ref())?;
        println!("plot written to {path}");
    }
    Ok(())
}
