//! Loads an exported model from its manifest, checks it against its golden
//! file and classifies a few uniform frames.
//!
//! ```text
//! cargo run --example onnx_classify [-- path/to/model.manifest.json]
//! ```

use std::path::PathBuf;

use fragc::backend::{load_backend, verify_golden, BackendManifest};
use fragc::preprocess::ModelInput;

fn main() -> fragc::Result<()> {
    let manifest_path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/models/tiny.manifest.json"))
    });
    let manifest = BackendManifest::load(&manifest_path)?;
    let model = load_backend(&manifest)?;
    println!("loaded {} ({:?} scaling)", model.name(), manifest.input_scaling);

    let golden = manifest_path.with_file_name(format!("{}.golden.json", manifest.name));
    if golden.is_file() {
        let check = verify_golden(model.as_ref(), &golden)?;
        println!("golden: {} fixtures, max |diff| {:.2e}", check.fixtures, check.max_abs_diff);
    }
    for v in [0.1, 0.5, 0.9] {
        let p = model.classify(&ModelInput::filled(v)?)?;
        println!("uniform {v}: {:?} -> {}", p.values(), p.argmax());
    }
    Ok(())
}
