//! HTTP/JSON front end for the benchmark.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | GET | `/health` | | [`Health`] |
//! | GET | `/protocol` | | wire grammar, markdown |
//! | POST | `/maps/generate` | `MapSpec` | `ObstacleMap` |
//! | POST | `/maps/metrics` | [`MapMetricsRequest`] | `EnvMetrics` |
//! | POST | `/trials/generate` | [`TrialRequest`] | `TrialSpec` |
//! | POST | `/path` | [`PathRequest`] | `PathResult` |
//! | POST | `/metrics/contrast` | [`ContrastRequest`] | [`ContrastReply`] |
//! | POST | `/campaigns` | [`CampaignRequest`] | [`CampaignStatus`], 202 |
//! | GET | `/campaigns/{id}` | | [`CampaignStatus`] |
//! | POST | `/results/metrics` | [`ResultsRequest`] | [`MetricsReply`] |
//! | POST | `/results/report` | [`ResultsRequest`] | [`ReportReply`] |
//!
//! Failures reply with an [`ApiError`] body. Invalid configs and inputs are
//! 400 with kind `config` or `invalid`.

mod api;

pub use api::*;

use std::net::SocketAddr;

use tokio::net::TcpListener;

/// Serves the API on `listener` until the task is dropped.
pub async fn serve(listener: TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router()).await
}

/// Binds `addr` and serves in a background task. Returns the bound address.
pub async fn spawn(addr: SocketAddr) -> std::io::Result<(SocketAddr, tokio::task::JoinHandle<std::io::Result<()>>)> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    Ok((local, tokio::spawn(serve(listener))))
}
