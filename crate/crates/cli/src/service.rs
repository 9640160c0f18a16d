//! JSON-over-HTTP façade: run, parse, validate, completion and metadata
//! endpoints against one immutable knowledge base.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::{header, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use kopl_core::induction::{parse_question, InductionError, ParserBinding, Question};
use kopl_core::program::Diagnostic;
use kopl_core::{
    build_indices, load_kb, parse_program, serialize_program, validate, Engine, EngineConfig, ExecOptions,
    ExecutionError, IndexBackendKind, IndexSet, KnowledgeBase, Operator, ProgramError, SchemaKind, TraceEntry,
    ValidationReport,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{Any, CorsLayer};

pub const DEFAULT_COMPLETION_LIMIT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    ParseError,
    ValidationError,
    RuntimeError,
    NotFound,
    BadRequest,
    /// The knowledge base is still loading (or failed to load).
    Unavailable,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::ParseError | ErrorCode::BadRequest => StatusCode::BAD_REQUEST,
            ErrorCode::ValidationError | ErrorCode::RuntimeError => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::Unavailable => StatusCode::SERVICE_UNAVAILABLE,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Vec<Diagnostic>>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
            node_index: None,
            diagnostics: None,
        }
    }

    fn at(mut self, node: Option<usize>) -> Self {
        self.node_index = node;
        self
    }

    fn invalid(report: ValidationReport) -> Self {
        let message = report
            .errors()
            .next()
            .map(|d| d.message.clone())
            .unwrap_or_else(|| "program failed validation".into());
        ApiError {
            code: ErrorCode::ValidationError,
            message,
            node_index: report.first_error_node(),
            diagnostics: Some(report.diagnostics),
        }
    }
}

impl From<ProgramError> for ApiError {
    fn from(e: ProgramError) -> Self {
        ApiError::new(ErrorCode::ParseError, e.to_string()).at(e.node_index())
    }
}

impl From<ExecutionError> for ApiError {
    fn from(e: ExecutionError) -> Self {
        match e {
            ExecutionError::Invalid(report) => ApiError::invalid(report),
            ExecutionError::Runtime { node, function, message } => {
                ApiError::new(ErrorCode::RuntimeError, format!("{function}: {message}")).at(Some(node))
            }
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(ErrorCode::BadRequest, e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::new(ErrorCode::BadRequest, e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// A loaded knowledge base and its indices.
pub struct Loaded {
    pub kb: KnowledgeBase,
    pub idx: IndexSet,
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub preview_limit: usize,
    pub parser: ParserBinding,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            preview_limit: kopl_core::engine::DEFAULT_PREVIEW_LIMIT,
            parser: ParserBinding::default(),
        }
    }
}

struct Shared {
    loaded: OnceLock<Loaded>,
    load_error: OnceLock<String>,
    config: ServiceConfig,
}

/// Shared server state. Requests before the KB is installed get 503.
#[derive(Clone)]
pub struct AppState(Arc<Shared>);

impl AppState {
    pub fn loading(config: ServiceConfig) -> Self {
        AppState(Arc::new(Shared {
            loaded: OnceLock::new(),
            load_error: OnceLock::new(),
            config,
        }))
    }

    pub fn ready(kb: KnowledgeBase, idx: IndexSet, config: ServiceConfig) -> Self {
        let state = AppState::loading(config);
        state.install(kb, idx);
        state
    }

    pub fn install(&self, kb: KnowledgeBase, idx: IndexSet) {
        let _ = self.0.loaded.set(Loaded { kb, idx });
    }

    pub fn fail(&self, message: String) {
        let _ = self.0.load_error.set(message);
    }

    fn loaded(&self) -> Result<&Loaded, ApiError> {
        self.0.loaded.get().ok_or_else(|| {
            let message = match self.0.load_error.get() {
                Some(e) => format!("knowledge base failed to load: {e}"),
                None => "knowledge base is loading".to_string(),
            };
            ApiError::new(ErrorCode::Unavailable, message)
        })
    }

    fn engine(&self) -> Result<Engine<'_>, ApiError> {
        let loaded = self.loaded()?;
        Ok(Engine::new(&loaded.kb, &loaded.idx).with_config(EngineConfig {
            preview_limit: self.0.config.preview_limit,
            fusion: true,
        }))
    }
}

pub fn router(state: AppState) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]);
    Router::new()
        .route("/api/run", post(api_run))
        .route("/api/parse", post(api_parse))
        .route("/api/validate", post(api_validate))
        .route("/api/completion", get(api_completion))
        .route("/api/meta", get(api_meta))
        .route("/healthz", get(healthz))
        .fallback(|| async { ApiError::new(ErrorCode::NotFound, "no such endpoint") })
        .layer(cors)
        .with_state(state)
}

#[derive(Debug, Deserialize)]
pub struct RunRequest {
    pub program: Value,
    #[serde(default)]
    pub trace: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunResponse {
    pub answer: String,
    pub root_kind: kopl_core::OutputKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceEntry>>,
}

async fn api_run(State(state): State<AppState>, body: Result<Json<RunRequest>, JsonRejection>) -> ApiResult<RunResponse> {
    let Json(request) = body?;
    let program = parse_program(&request.program)?;
    // Execution is CPU-bound; keep it off the async workers.
    let result = tokio::task::spawn_blocking(move || {
        let options = ExecOptions {
            trace: request.trace,
            keep_outputs: false,
        };
        state.engine()?.execute(&program, options).map_err(ApiError::from)
    })
    .await
    .map_err(|e| ApiError::new(ErrorCode::RuntimeError, format!("execution aborted: {e}")))??;
    Ok(Json(RunResponse {
        answer: result.answer,
        root_kind: result.root_kind,
        trace: result.trace,
    }))
}

#[derive(Debug, Deserialize)]
pub struct ParseRequest {
    pub question: String,
}

async fn api_parse(State(state): State<AppState>, body: Result<Json<ParseRequest>, JsonRejection>) -> ApiResult<Value> {
    let Json(request) = body?;
    let question = Question::new(&request.question).map_err(|e| ApiError::new(ErrorCode::BadRequest, e.to_string()))?;
    let parser = state.0.config.parser.clone();
    let program = tokio::task::spawn_blocking(move || {
        let loaded = state.loaded()?;
        parse_question(&parser, &question, &loaded.idx).map_err(|e| match e {
            InductionError::EmptyQuestion => ApiError::new(ErrorCode::BadRequest, e.to_string()),
            InductionError::Unparsed(_) => ApiError::new(ErrorCode::ParseError, e.to_string()),
        })
    })
    .await
    .map_err(|e| ApiError::new(ErrorCode::ParseError, format!("parser aborted: {e}")))??;
    Ok(Json(json!({ "program": serialize_program(&program) })))
}

#[derive(Debug, Deserialize)]
pub struct ValidateRequest {
    pub program: Value,
}

async fn api_validate(body: Result<Json<ValidateRequest>, JsonRejection>) -> ApiResult<ValidationReport> {
    let Json(request) = body?;
    Ok(Json(validate(&parse_program(&request.program)?)))
}

#[derive(Debug, Deserialize)]
pub struct CompletionParams {
    pub kind: String,
    #[serde(default)]
    pub prefix: String,
    pub limit: Option<usize>,
}

async fn api_completion(
    State(state): State<AppState>,
    params: Result<Query<CompletionParams>, QueryRejection>,
) -> ApiResult<Value> {
    let Query(params) = params?;
    let kind: SchemaKind = params
        .kind
        .parse()
        .map_err(|e: kopl_core::index::IndexError| ApiError::new(ErrorCode::BadRequest, e.to_string()))?;
    let limit = params.limit.unwrap_or(DEFAULT_COMPLETION_LIMIT);
    let candidates = state
        .loaded()?
        .idx
        .complete(kind, &params.prefix, limit)
        .map_err(|e| ApiError::new(ErrorCode::BadRequest, e.to_string()))?;
    Ok(Json(json!({ "candidates": candidates })))
}

/// Operator palette with argument slots, dependency kinds and output rule.
pub fn operator_inventory() -> Value {
    Value::Array(
        Operator::ALL
            .iter()
            .map(|op| {
                let sig = op.signature();
                json!({
                    "name": op.name(),
                    "args": sig.args,
                    "dependencies": sig.deps,
                    "output": sig.output,
                })
            })
            .collect(),
    )
}

async fn api_meta(State(state): State<AppState>) -> ApiResult<Value> {
    let loaded = state.loaded()?;
    Ok(Json(json!({
        "stats": loaded.kb.stats(),
        "backend": loaded.idx.backend(),
        "operators": operator_inventory(),
        "health": "ok",
    })))
}

async fn healthz(State(state): State<AppState>) -> Response {
    match state.loaded() {
        Ok(_) => Json(json!({ "status": "ok" })).into_response(),
        Err(e) => (StatusCode::SERVICE_UNAVAILABLE, Json(json!({ "status": "unavailable", "message": e.message })))
            .into_response(),
    }
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub kb_path: PathBuf,
    pub addr: SocketAddr,
    pub backend: IndexBackendKind,
    pub config: ServiceConfig,
}

/// Binds, then loads the KB in the background so `/healthz` can report
/// progress. Runs until Ctrl-C.
pub async fn serve(options: ServeOptions) -> anyhow::Result<()> {
    let state = AppState::loading(options.config);
    let listener = tokio::net::TcpListener::bind(options.addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");

    let loader = state.clone();
    let (path, backend) = (options.kb_path, options.backend);
    tokio::task::spawn_blocking(move || {
        let started = std::time::Instant::now();
        match load_kb(&path) {
            Ok(kb) => {
                let idx = build_indices(&kb, backend);
                let stats = kb.stats();
                loader.install(kb, idx);
                tracing::info!(
                    entities = stats.entity_count,
                    concepts = stats.concept_count,
                    elapsed_ms = started.elapsed().as_millis() as u64,
                    "knowledge base ready"
                );
            }
            Err(e) => {
                tracing::error!(path = %path.display(), error = %e, "knowledge base failed to load");
                loader.fail(e.to_string());
            }
        }
    });

    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
