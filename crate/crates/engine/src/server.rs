use std::net::SocketAddr;
use std::sync::Arc;

use axum::http::{header, Method, StatusCode, Uri};
use axum::response::IntoResponse;
use axum::Router;
use log::info;

use crate::api::Api;
use crate::error::{EngineError, Result};

/// Every route goes through [`Api::get`]; only GET is accepted.
pub fn router(api: Arc<Api>) -> Router {
    Router::new().fallback(move |method: Method, uri: Uri| {
        let api = Arc::clone(&api);
        async move {
            if method != Method::GET {
                return (StatusCode::METHOD_NOT_ALLOWED, [(header::ALLOW, "GET")]).into_response();
            }
            let target = uri
                .path_and_query()
                .map_or_else(|| uri.path().to_string(), |p| p.to_string());
            let api_response = tokio::task::spawn_blocking(move || api.get(&target)).await;
            match api_response {
                Ok(r) => {
                    let status =
                        StatusCode::from_u16(r.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
                    (status, [(header::CONTENT_TYPE, "application/json")], r.body).into_response()
                }
                Err(_) => StatusCode::INTERNAL_SERVER_ERROR.into_response(),
            }
        }
    })
}

pub async fn serve(api: Api, bind: SocketAddr) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .map_err(EngineError::Serve)?;
    info!(
        "serving store version {} on http://{}",
        api.store_version(),
        listener.local_addr().map_err(EngineError::Serve)?
    );
    axum::serve(listener, router(Arc::new(api)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(EngineError::Serve)
}
