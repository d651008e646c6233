//! Wire ids, one-hot labels and softmax over the four action classes.

use fragc::domain::{softmax, ActionClass};

fn main() -> fragc::Result<()> {
    for class in ActionClass::ALL {
        println!("{:>8} id={} one-hot={:?}", class.name(), class.wire_id(), class.one_hot().bits());
    }
    let p = softmax([1.0, 2.0, 3.0, 4.0])?;
    println!("softmax([1,2,3,4]) = {:?} -> {}", p.values(), p.argmax());
    let parsed: ActionClass = "no_action".parse()?;
    println!("\"no_action\" parses as {parsed}");
    Ok(())
}
