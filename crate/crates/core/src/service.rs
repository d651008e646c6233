//! HTTP service.
//!
//! * `GET /health`: version, loaded backend names and a request counter.
//! * `POST /analyze`: multipart upload (field `file`) of a video or a tar
//!   archive of `<stem>_<index>.png` frames. Query: `format=json|csv`,
//!   `fps` (declared rate of an archive, default 30), `threshold`,
//!   `count_mode`.
//! * `POST /collect`: like `/analyze`, then writes gated frames into a
//!   per-input folder under the collect root and returns the manifest.
//!
//! Each request runs its own pipeline and counter; backends are shared
//! read-only.

use std::io::Read;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::extract::multipart::{Multipart, MultipartRejection};
use axum::extract::{DefaultBodyLimit, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::backend::Classifier;
use crate::counter::{CountMode, CounterConfig};
use crate::dataset::{DatasetManifest, DatasetWriter};
use crate::error::{Error, Stage};
use crate::ingest::{Decoder, FrameSourceSpec};
use crate::pipeline::Analyzer;
use crate::report::csv_string;
use crate::STREAM_FPS;

pub const PORT_ENV: &str = "FRAGC_PORT";
pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_UPLOAD_LIMIT: usize = 512 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub upload_limit: usize,
    pub counter: CounterConfig,
    pub decoder: Decoder,
    pub collect_root: PathBuf,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            upload_limit: DEFAULT_UPLOAD_LIMIT,
            counter: CounterConfig::default(),
            decoder: Decoder::resolve(None),
            collect_root: std::env::temp_dir().join("fragc-collect"),
        }
    }
}

pub struct AppState {
    backends: Vec<Arc<dyn Classifier>>,
    config: ServiceConfig,
    requests: AtomicU64,
}

impl AppState {
    pub fn new(backends: Vec<Arc<dyn Classifier>>, config: ServiceConfig) -> crate::Result<Arc<Self>> {
        // fail at startup rather than on the first request
        Analyzer::new(backends.clone(), config.counter)?;
        Ok(Arc::new(AppState {
            backends,
            config,
            requests: AtomicU64::new(0),
        }))
    }

    pub fn backend_names(&self) -> Vec<String> {
        self.backends.iter().map(|b| b.name().to_string()).collect()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.config.upload_limit;
    Router::new()
        .route("/health", get(health))
        .route("/analyze", post(analyze))
        .route("/collect", post(collect))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// Binds `addr` and serves until Ctrl-C.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    message: String,
    stage: Option<Stage>,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
            stage: None,
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            message: message.into(),
            stage: None,
        }
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        let stage = err.stage();
        let malformed = match &err {
            Error::InvalidInput(_) => true,
            Error::Stage { stage: Stage::Ingest, source, .. } => {
                matches!(**source, Error::Image { .. } | Error::InvalidInput(_) | Error::Decoder(_))
            }
            Error::Stage { stage: Stage::Preprocess, source, .. } => {
                matches!(**source, Error::InvalidInput(_))
            }
            _ => false,
        };
        ApiError {
            status: if malformed {
                StatusCode::BAD_REQUEST
            } else {
                StatusCode::INTERNAL_SERVER_ERROR
            },
            message: err.to_string(),
            stage,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({
            "error": self.message,
            "stage": self.stage.map(|s| s.to_string()),
        });
        (self.status, Json(body)).into_response()
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Default, Deserialize)]
struct AnalyzeParams {
    #[serde(default)]
    format: Format,
    fps: Option<f64>,
    threshold: Option<f64>,
    count_mode: Option<String>,
}

impl AnalyzeParams {
    fn counter(&self, base: CounterConfig) -> Result<CounterConfig, ApiError> {
        let mode = match &self.count_mode {
            Some(m) => m.parse::<CountMode>().map_err(|e| ApiError::bad_request(e.to_string()))?,
            None => base.mode,
        };
        CounterConfig::new(self.threshold.unwrap_or(base.threshold), mode)
            .map_err(|e| ApiError::bad_request(e.to_string()))
    }
}

async fn health(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let n = state.requests.fetch_add(1, Ordering::Relaxed) + 1;
    Json(json!({
        "status": "ok",
        "version": env!("CARGO_PKG_VERSION"),
        "backends": state.backend_names(),
        "requests": n,
    }))
}

/// An uploaded input staged on disk for the pipeline.
struct StagedUpload {
    _dir: tempfile::TempDir,
    spec: FrameSourceSpec,
}

async fn read_upload(multipart: Result<Multipart, MultipartRejection>) -> Result<(Vec<u8>, Option<String>), ApiError> {
    let mut multipart = multipart.map_err(|e| ApiError::bad_request(format!("expected a multipart upload: {e}")))?;
    loop {
        let field = multipart.next_field().await.map_err(multipart_error)?;
        let Some(field) = field else {
            return Err(ApiError::bad_request("multipart body has no `file` field"));
        };
        if field.name() == Some("file") || field.file_name().is_some() {
            let name = field.file_name().map(str::to_string);
            let bytes = field.bytes().await.map_err(multipart_error)?;
            if bytes.is_empty() {
                return Err(ApiError::bad_request("uploaded file is empty"));
            }
            return Ok((bytes.to_vec(), name));
        }
    }
}

fn multipart_error(err: axum::extract::multipart::MultipartError) -> ApiError {
    ApiError {
        status: err.status(),
        message: err.body_text(),
        stage: None,
    }
}

fn is_tar(bytes: &[u8]) -> bool {
    bytes.len() >= 262 && &bytes[257..262] == b"ustar"
}

fn stage_upload(bytes: &[u8], file_name: Option<&str>, fps: f64) -> Result<StagedUpload, ApiError> {
    let dir = tempfile::tempdir().map_err(|e| ApiError::internal(format!("scratch dir: {e}")))?;
    let spec = if is_tar(bytes) {
        let frames = dir.path().join("frames");
        let n = unpack_frames(bytes, &frames)?;
        if n == 0 {
            return Err(ApiError::bad_request("archive contains no <stem>_<index>.png frames"));
        }
        let fps = crate::ingest::round_fps(fps).map_err(|e| ApiError::bad_request(e.to_string()))?;
        FrameSourceSpec::frame_directory(frames, fps).map_err(|e| ApiError::bad_request(e.to_string()))?
    } else {
        let ext = file_name
            .and_then(|n| Path::new(n).extension())
            .and_then(|e| e.to_str())
            .filter(|e| e.chars().all(|c| c.is_ascii_alphanumeric()))
            .unwrap_or("bin");
        let path = dir.path().join(format!("upload.{ext}"));
        std::fs::write(&path, bytes).map_err(|e| ApiError::internal(format!("staging upload: {e}")))?;
        FrameSourceSpec::video_file(path).map_err(|e| ApiError::bad_request(e.to_string()))?
    };
    Ok(StagedUpload { _dir: dir, spec })
}

/// Extracts regular `.png` entries by base name only.
fn unpack_frames(bytes: &[u8], out: &Path) -> Result<usize, ApiError> {
    std::fs::create_dir_all(out).map_err(|e| ApiError::internal(format!("scratch dir: {e}")))?;
    let mut archive = tar::Archive::new(bytes);
    let entries = archive
        .entries()
        .map_err(|e| ApiError::bad_request(format!("unreadable archive: {e}")))?;
    let mut count = 0;
    for entry in entries {
        let mut entry = entry.map_err(|e| ApiError::bad_request(format!("unreadable archive: {e}")))?;
        if !entry.header().entry_type().is_file() {
            continue;
        }
        let path = entry
            .path()
            .map_err(|e| ApiError::bad_request(format!("bad archive entry name: {e}")))?
            .into_owned();
        let Some(name) = path.file_name().map(PathBuf::from) else {
            continue;
        };
        if crate::ingest::frame_file_index(&name).is_none() {
            continue;
        }
        let mut buf = Vec::new();
        entry
            .read_to_end(&mut buf)
            .map_err(|e| ApiError::bad_request(format!("truncated archive: {e}")))?;
        std::fs::write(out.join(&name), buf).map_err(|e| ApiError::internal(format!("unpacking: {e}")))?;
        count += 1;
    }
    Ok(count)
}

async fn analyze(
    State(state): State<Arc<AppState>>,
    Query(params): Query<AnalyzeParams>,
    multipart: Result<Multipart, MultipartRejection>,
) -> Result<Response, ApiError> {
    state.requests.fetch_add(1, Ordering::Relaxed);
    let cfg = params.counter(state.config.counter)?;
    let (bytes, name) = read_upload(multipart).await?;
    let fps = params.fps.unwrap_or(f64::from(STREAM_FPS));
    let format = params.format;

    let worker = state.clone();
    let report = tokio::task::spawn_blocking(move || -> Result<_, ApiError> {
        let staged = stage_upload(&bytes, name.as_deref(), fps)?;
        let analyzer = Analyzer::new(worker.backends.clone(), cfg)?.with_decoder(worker.config.decoder.clone());
        Ok(analyzer.analyze(&staged.spec)?)
    })
    .await
    .map_err(|e| ApiError::internal(format!("worker panicked: {e}")))??;

    Ok(match format {
        Format::Json => Json(report).into_response(),
        Format::Csv => {
            let body = csv_string(&report)?;
            ([(header::CONTENT_TYPE, "text/csv")], body).into_response()
        }
    })
}

#[derive(Debug, Serialize)]
struct CollectResponse {
    dir: PathBuf,
    counts: crate::domain::ActionCounts,
    manifest: DatasetManifest,
}

async fn collect(
    State(state): State<Arc<AppState>>,
    Query(params): Query<AnalyzeParams>,
    multipart: Result<Multipart, MultipartRejection>,
) -> Result<Json<CollectResponse>, ApiError> {
    state.requests.fetch_add(1, Ordering::Relaxed);
    let cfg = params.counter(state.config.counter)?;
    let (bytes, name) = read_upload(multipart).await?;
    let fps = params.fps.unwrap_or(f64::from(STREAM_FPS));

    let worker = state.clone();
    tokio::task::spawn_blocking(move || -> Result<_, ApiError> {
        let staged = stage_upload(&bytes, name.as_deref(), fps)?;
        let analyzer = Analyzer::new(worker.backends.clone(), cfg)?.with_decoder(worker.config.decoder.clone());
        let root = &worker.config.collect_root;
        std::fs::create_dir_all(root).map_err(|e| ApiError::internal(format!("{}: {e}", root.display())))?;
        let scratch = tempfile::Builder::new()
            .prefix(".incoming-")
            .tempdir_in(root)
            .map_err(|e| ApiError::internal(format!("{}: {e}", root.display())))?;
        let mut writer = DatasetWriter::create(scratch.path())?;
        let report = analyzer.analyze_streaming(&staged.spec, |row| {
            writer.add(row.frame, row.prediction).map(|_| ())
        })?;
        let manifest = writer.finish(&report.input_digest)?;
        let dir = root.join(&report.input_digest[..16]);
        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(|e| ApiError::internal(format!("{}: {e}", dir.display())))?;
        }
        std::fs::rename(scratch.keep(), &dir).map_err(|e| ApiError::internal(format!("{}: {e}", dir.display())))?;
        Ok(Json(CollectResponse {
            dir,
            counts: report.counts,
            manifest,
        }))
    })
    .await
    .map_err(|e| ApiError::internal(format!("worker panicked: {e}")))?
}
