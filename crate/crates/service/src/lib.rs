//! HTTP facade over the metaphor toolkit: suggestions, poem enhancement,
//! literalization, evaluation and adapter health.

pub mod api;
pub mod config;
pub mod error;
pub mod request_log;

use std::future::Future;
use std::sync::Arc;
use std::time::Instant;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Request, State};
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use metaphor_core::adapters::{AdapterConfig, AdapterRegistry};
use metaphor_core::detector::score_all_verbs;
use metaphor_core::enhancer::enhance_poem;
use metaphor_core::evaluator::{evaluate_system, semantic_similarity, MetricsReport};
use metaphor_core::generator::{generate_candidates, RescoringConfig};
use metaphor_core::literalizer::{literalize, LiteralizeConfig};
use metaphor_core::text::{extract_verbs, tokenize};
use metaphor_core::types::{Sentence, VerbOccurrence};
use tokio::net::TcpListener;
use tokio::sync::Semaphore;

use crate::api::*;
pub use crate::config::ServiceConfig;
pub use crate::error::{ApiError, ServiceError};
use crate::request_log::{RequestLog, RequestRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_text_chars: usize,
    pub max_poem_lines: usize,
}

/// Shared handler state. Cloning is cheap.
#[derive(Clone)]
pub struct AppState {
    registry: Arc<AdapterRegistry>,
    gate: Arc<Semaphore>,
    log: Option<Arc<RequestLog>>,
    limits: Limits,
}

impl AppState {
    pub fn new(registry: AdapterRegistry, config: &ServiceConfig) -> Result<Self, ServiceError> {
        let permits = config
            .max_inflight
            .min(registry.max_concurrency())
            .min(Semaphore::MAX_PERMITS)
            .max(1);
        let log = match &config.log_dir {
            Some(dir) => Some(Arc::new(RequestLog::open(dir)?)),
            None => None,
        };
        Ok(AppState {
            registry: Arc::new(registry),
            gate: Arc::new(Semaphore::new(permits)),
            log,
            limits: Limits {
                max_text_chars: config.max_text_chars,
                max_poem_lines: config.max_poem_lines,
            },
        })
    }

    /// Loads the adapter configuration named by `config`.
    pub fn from_config(config: &ServiceConfig) -> Result<Self, ServiceError> {
        let adapters = AdapterConfig::load(&config.adapters)?;
        AppState::new(AdapterRegistry::from_config(&adapters)?, config)
    }

    pub fn registry(&self) -> &AdapterRegistry {
        &self.registry
    }

    pub fn request_log(&self) -> Option<&RequestLog> {
        self.log.as_deref()
    }

    /// Runs adapter-bound work off the async runtime, behind the shared gate.
    async fn blocking<T, F>(&self, f: F) -> Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&AdapterRegistry) -> Result<T, ApiError> + Send + 'static,
    {
        let _permit = self
            .gate
            .clone()
            .acquire_owned()
            .await
            .map_err(|e| ApiError::internal(e.to_string()))?;
        let registry = self.registry.clone();
        tokio::task::spawn_blocking(move || f(&registry))
            .await
            .map_err(|e| ApiError::internal(e.to_string()))?
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/suggest", post(suggest))
        .route("/enhance", post(enhance))
        .route("/literalize", post(literalize_text))
        .route("/evaluate", post(evaluate))
        .route("/health", get(health))
        .layer(middleware::from_fn_with_state(state.clone(), log_requests))
        .with_state(state)
}

/// Serves `state` on `listener` until `shutdown` resolves.
pub async fn run(
    listener: TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

/// Binds the configured address and serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = AppState::from_config(&config)?;
    let listener = TcpListener::bind((config.host.as_str(), config.port)).await?;
    log::info!("listening on {}", listener.local_addr()?);
    run(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await?;
    Ok(())
}

async fn log_requests(State(state): State<AppState>, req: Request, next: Next) -> Response {
    let method = req.method().to_string();
    let path = req.uri().path().to_string();
    let start = Instant::now();
    let response = next.run(req).await;
    if let Some(log) = &state.log {
        let record = RequestRecord::now(method, path, response.status().as_u16(), start.elapsed().as_millis());
        if let Err(e) = log.append(&record) {
            log::warn!("request log append failed: {e}");
        }
    }
    response
}

fn fresh_seed() -> u64 {
    // Kept below 2^32 so browser clients can echo it back losslessly.
    u64::from(rand::random::<u32>())
}

fn check_text(text: &str, limits: &Limits) -> Result<(), ApiError> {
    if text.trim().is_empty() {
        return Err(ApiError::invalid("text is empty"));
    }
    let n = text.chars().count();
    if n > limits.max_text_chars {
        return Err(ApiError::invalid(format!(
            "text has {n} characters; the limit is {}",
            limits.max_text_chars
        )));
    }
    Ok(())
}

fn rescoring(lambda: Option<f64>, k: Option<usize>, num_hypotheses: Option<usize>, seed: u64) -> Result<RescoringConfig, ApiError> {
    let base = RescoringConfig::default();
    let cfg = RescoringConfig {
        lambda: lambda.unwrap_or(base.lambda),
        k: k.unwrap_or(base.k),
        num_hypotheses: num_hypotheses.unwrap_or(base.num_hypotheses),
        seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// The replaced verb of a candidate: the first token where it departs from
/// the input, or the input's first verb for an unchanged copy. Unknown when
/// the token counts differ.
fn verb_change(input: &[String], output: &[String], verbs: &[VerbOccurrence]) -> (Option<String>, Option<String>) {
    if input.len() != output.len() {
        return (None, None);
    }
    match input.iter().zip(output).position(|(a, b)| a != b) {
        Some(i) => (Some(input[i].clone()), Some(output[i].clone())),
        None => {
            let v = verbs.first().map(|v| v.surface.clone());
            (v.clone(), v)
        }
    }
}

fn token_texts(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.text).collect()
}

async fn suggest(
    State(state): State<AppState>,
    body: Result<Json<SuggestRequest>, JsonRejection>,
) -> Result<Json<SuggestResponse>, ApiError> {
    let Json(req) = body?;
    check_text(&req.text, &state.limits)?;
    let seed = req.seed.unwrap_or_else(fresh_seed);
    let cfg = rescoring(req.lambda, req.k, req.num_hypotheses, seed)?;
    let text = req.text;
    let response = state
        .blocking(move |registry| {
            let sentence = Sentence::user(text.as_str())?;
            let verbs = extract_verbs(&sentence, &*registry.tagger)?;
            if verbs.is_empty() {
                return Err(ApiError::no_verb(&text));
            }
            let ranked = generate_candidates(&sentence, &cfg, registry)?;
            let input_tokens = token_texts(&text);
            let candidates = ranked
                .iter()
                .map(|r| {
                    let (verb_before, verb_after) = verb_change(&input_tokens, &token_texts(&r.text), &verbs);
                    Ok(Candidate {
                        text: r.text.clone(),
                        verb_before,
                        verb_after,
                        nll: r.nll(),
                        disc: r.disc(),
                        combined: r.combined(),
                        similarity: semantic_similarity(&text, &r.text, registry)?,
                    })
                })
                .collect::<Result<Vec<_>, ApiError>>()?;
            Ok(SuggestResponse {
                input: text,
                seed,
                lambda: cfg.lambda,
                candidates,
                chosen_index: 0,
            })
        })
        .await?;
    Ok(Json(response))
}

async fn enhance(
    State(state): State<AppState>,
    body: Result<Json<EnhanceRequest>, JsonRejection>,
) -> Result<Json<EnhanceResponse>, ApiError> {
    let Json(req) = body?;
    let lines: Vec<String> = req.poem.lines().map(String::from).collect();
    if lines.len() > state.limits.max_poem_lines {
        return Err(ApiError::invalid(format!(
            "poem has {} lines; the limit is {}",
            lines.len(),
            state.limits.max_poem_lines
        )));
    }
    if let Some(i) = lines.iter().position(|l| l.chars().count() > state.limits.max_text_chars) {
        return Err(ApiError::invalid(format!("line {} is longer than {} characters", i + 1, state.limits.max_text_chars)));
    }
    let seed = req.seed.unwrap_or_else(fresh_seed);
    let cfg = rescoring(req.lambda, req.k, req.num_hypotheses, seed)?;
    let response = state
        .blocking(move |registry| {
            let poem = enhance_poem(&lines, "request", &cfg, registry)?;
            Ok(EnhanceResponse {
                seed,
                quatrains: poem.quatrains,
                remainder: poem.remainder,
            })
        })
        .await?;
    Ok(Json(response))
}

async fn literalize_text(
    State(state): State<AppState>,
    body: Result<Json<LiteralizeRequest>, JsonRejection>,
) -> Result<Json<LiteralizeResponse>, ApiError> {
    let Json(req) = body?;
    check_text(&req.text, &state.limits)?;
    let base = LiteralizeConfig::default();
    let cfg = LiteralizeConfig {
        n_candidates: req.candidates.unwrap_or(base.n_candidates),
        required_overlap: req.overlap.unwrap_or(base.required_overlap),
        ..base
    };
    cfg.validate()?;
    let response = state
        .blocking(move |registry| {
            let sentence = Sentence::user(req.text.as_str())?;
            let scored = score_all_verbs(&sentence, registry)?;
            let verb = match req.verb_index {
                Some(i) => scored
                    .into_iter()
                    .find(|(v, _)| v.token_index == i)
                    .map(|(v, _)| v)
                    .ok_or_else(|| ApiError::invalid(format!("token {i} is not a verb")))?,
                None => scored
                    .into_iter()
                    .reduce(|best, cur| if cur.1.p_metaphoric() > best.1.p_metaphoric() { cur } else { best })
                    .map(|(v, _)| v)
                    .ok_or_else(|| ApiError::no_verb(&req.text))?,
            };
            let pair = literalize(&sentence, &verb, &cfg, registry)?;
            let reason = pair.is_none().then(|| {
                format!(
                    "no replacement for `{}` passed the literalness and {}/5 symbol-overlap filters",
                    verb.surface, cfg.required_overlap
                )
            });
            Ok(LiteralizeResponse { pair, reason })
        })
        .await?;
    Ok(Json(response))
}

async fn evaluate(
    State(state): State<AppState>,
    body: Result<Json<EvaluateRequest>, JsonRejection>,
) -> Result<Json<MetricsReport>, ApiError> {
    let Json(req) = body?;
    let report = state
        .blocking(move |registry| Ok(evaluate_system(&req.inputs, &req.outputs, &req.references, registry)?))
        .await?;
    Ok(Json(report))
}

async fn health(State(state): State<AppState>) -> Response {
    let registry = state.registry.clone();
    let probes = match tokio::task::spawn_blocking(move || registry.health()).await {
        Ok(p) => p,
        Err(e) => return ApiError::internal(e.to_string()).into_response(),
    };
    let mut adapters = std::collections::BTreeMap::new();
    let mut failing = Vec::new();
    for (slot, result) in probes {
        let error = result.err().map(|e| e.to_string());
        if error.is_some() {
            failing.push(slot.name().to_string());
        }
        adapters.insert(slot.name().to_string(), SlotHealth { ok: error.is_none(), error });
    }
    let (status, label) = if failing.is_empty() {
        (StatusCode::OK, "ok")
    } else {
        (StatusCode::SERVICE_UNAVAILABLE, "unavailable")
    };
    let body = HealthResponse {
        status: label.into(),
        adapters,
        failing,
    };
    (status, Json(body)).into_response()
}
