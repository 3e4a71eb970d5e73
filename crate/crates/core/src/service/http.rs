use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use tower_http::cors::CorsLayer;

use super::{ModelRegistry, PredictRequest, ServiceError};
use crate::error::{Error, Result};

fn error_response(status: u16, message: String) -> Response {
    let status = StatusCode::from_u16(status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, Json(json!({ "error": message }))).into_response()
}

async fn predict(State(reg): State<Arc<ModelRegistry>>, body: Result<Json<PredictRequest>, JsonRejection>) -> Response {
    let Json(req) = match body {
        Ok(b) => b,
        Err(e) => return error_response(400, e.body_text()),
    };
    // Prediction is CPU-bound; keep it off the async workers.
    let result = tokio::task::spawn_blocking(move || reg.handle_predict(&req)).await;
    match result {
        Ok(Ok(resp)) => Json(resp).into_response(),
        Ok(Err(e)) => error_response(e.status(), e.message()),
        Err(e) => {
            let e = ServiceError::Internal(e.to_string());
            error_response(e.status(), e.message())
        }
    }
}

async fn models(State(reg): State<Arc<ModelRegistry>>) -> Response {
    Json(json!({ "models": reg.models(), "default": reg.default_id() })).into_response()
}

/// `POST /v1/predict` and `GET /v1/models`, open to browser clients.
pub fn router(registry: Arc<ModelRegistry>) -> Router {
    Router::new()
        .route("/v1/predict", post(predict))
        .route("/v1/models", get(models))
        .layer(CorsLayer::permissive())
        .with_state(registry)
}

/// Bind address: the explicit flag, then `POLYLM_ADDR`, then the default.
pub fn resolve_addr(flag: Option<&str>) -> Result<SocketAddr> {
    let env = std::env::var(super::ADDR_ENV).ok();
    let raw = flag.or(env.as_deref()).unwrap_or(super::DEFAULT_ADDR);
    raw.parse()
        .map_err(|_| Error::Config(format!("invalid bind address {raw:?}")))
}

/// Serves until interrupted.
pub fn serve(addr: SocketAddr, registry: ModelRegistry) -> Result<()> {
    let rt = tokio::runtime::Runtime::new().map_err(|e| Error::io("<runtime>", e))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Error::io(addr.to_string(), e))?;
        log::info!("listening on {}", listener.local_addr().map_err(|e| Error::io(addr.to_string(), e))?);
        axum::serve(listener, router(Arc::new(registry)))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| Error::io(addr.to_string(), e))
    })
}
