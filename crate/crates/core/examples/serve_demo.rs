//! Serves the HTTP API with five mock backends.
//!
//! ```text
//! cargo run --example serve_demo -- 8080
//! curl localhost:8080/health
//! curl -F file=@frames.tar 'localhost:8080/analyze?format=csv'
//! ```
//!
//! `frames.tar` is a tar of `frame_<index>.png` files;
//! `fragc::demo::frame_archive` builds one.

use std::net::SocketAddr;

use fragc::backend::mock_ensemble;
use fragc::service::{serve, AppState, ServiceConfig, DEFAULT_PORT};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let port: u16 = match std::env::args().nth(1) {
        Some(p) => p.parse()?,
        None => DEFAULT_PORT,
    };
    let state = AppState::new(mock_ensemble(5), ServiceConfig::default())?;
    serve(state, SocketAddr::from(([127, 0, 0, 1], port))).await?;
    Ok(())
}
