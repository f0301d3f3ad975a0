//! HTTP front end over `hltl::api`. Every route takes and returns JSON;
//! malformed bodies get 400, domain failures 422. Handlers run on the
//! blocking pool because planning and model calls are long and synchronous.

use std::io;
use std::net::SocketAddr;
use std::thread;

use axum::body::Bytes;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use hltl::api::{self, ApiError};
use serde::de::DeserializeOwned;
use serde::Serialize;
use tokio::net::TcpListener;
use tokio::sync::oneshot;

fn failure(status: StatusCode, e: ApiError) -> Response {
    (status, Json(e)).into_response()
}

async fn call<Req, Resp>(body: Bytes, op: fn(&Req) -> Result<Resp, ApiError>) -> Response
where
    Req: DeserializeOwned + Send + 'static,
    Resp: Serialize + Send + 'static,
{
    let req: Req = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return failure(StatusCode::BAD_REQUEST, ApiError::bad_request(e)),
    };
    match tokio::task::spawn_blocking(move || op(&req)).await {
        Ok(Ok(r)) => Json(r).into_response(),
        Ok(Err(e)) if e.is_bad_request() => failure(StatusCode::BAD_REQUEST, e),
        Ok(Err(e)) => {
            tracing::debug!(kind = %e.kind, "request failed: {}", e.message);
            failure(StatusCode::UNPROCESSABLE_ENTITY, e)
        }
        Err(e) => failure(StatusCode::INTERNAL_SERVER_ERROR, ApiError::new("internal", e)),
    }
}

macro_rules! route {
    ($op:expr) => {
        post(|body: Bytes| call(body, $op))
    };
}

pub fn router() -> Router {
    Router::new()
        .route("/v1/health", get(|| async { Json(api::health()) }))
        .route("/v1/ltl/parse", route!(api::ltl_parse))
        .route("/v1/ltl/check", route!(api::ltl_check))
        .route("/v1/ltl/eval", route!(api::ltl_eval))
        .route("/v1/spec/validate", route!(|r| Ok(api::spec_validate(r))))
        .route("/v1/spec/satisfies", route!(api::spec_satisfies))
        .route("/v1/spec/dot", route!(api::spec_dot))
        .route("/v1/htt/validate", route!(|r| Ok(api::htt_validate(r))))
        .route("/v1/htt/construct", route!(api::htt_construct))
        .route("/v1/pipeline/run", route!(api::pipeline_run))
        .route("/v1/pipeline/translate", route!(api::pipeline_translate))
        .route("/v1/pipeline/diagnose", route!(|r| Ok(api::pipeline_diagnose(r))))
        .route("/v1/plan", route!(api::plan_request))
        .route("/v1/simulate", route!(api::simulate_request))
        .route("/v1/gen-tasks", route!(api::gen_tasks))
        .route("/v1/evaluate", route!(|r| Ok(api::evaluate_request(r))))
}

/// Serves until the process exits.
pub async fn serve(listener: TcpListener) -> io::Result<()> {
    axum::serve(listener, router()).await
}

/// A server on its own thread and runtime; stops when dropped.
pub struct Background {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<thread::JoinHandle<io::Result<()>>>,
}

impl Background {
    /// Binds `127.0.0.1` on an ephemeral port.
    pub fn start() -> io::Result<Background> {
        let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
        let listener = rt.block_on(TcpListener::bind(("127.0.0.1", 0)))?;
        let addr = listener.local_addr()?;
        let (stop, stopped) = oneshot::channel::<()>();
        let thread = thread::Builder::new().name("hltl-server".into()).spawn(move || {
            rt.block_on(async move {
                axum::serve(listener, router())
                    .with_graceful_shutdown(async {
                        let _ = stopped.await;
                    })
                    .await
            })
        })?;
        Ok(Background { addr, stop: Some(stop), thread: Some(thread) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for Background {
    fn drop(&mut self) {
        if let Some(s) = self.stop.take() {
            let _ = s.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
