//! Async client for the flybench HTTP service.
//!
//! ```no_run
//! # async fn demo() -> Result<(), flybench_client::ClientError> {
//! let client = flybench_client::Client::new("http://127.0.0.1:8080")?;
//! let started = client.start_campaign(std::fs::read_to_string("campaign.toml").unwrap(), None).await?;
//! let status = client.wait_campaign(started.id, std::time::Duration::from_millis(200), |_| {}).await?;
//! println!("{:?}", status.state);
//! # Ok(()) }
//! ```

use std::path::PathBuf;
use std::time::Duration;

use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;
use url::Url;

use flybench_core::env::EnvMetrics;
use flybench_core::geometry::ObstacleMap;
use flybench_core::mapgen::{MapSpec, TrialSpec};
use flybench_core::path::PathResult;
pub use flybench_server::{
    ApiError, CampaignRequest, CampaignState, CampaignStatus, ContrastReply, ContrastRequest, ErrorKind, Health, MapMetricsRequest, MetricsReply,
    PathRequest, ReportReply, ResultsRequest, TrialRequest,
};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("{status}: {}", .error.message)]
    Api { status: StatusCode, error: ApiError },
    #[error("transport: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("bad server url: {0}")]
    Url(#[from] url::ParseError),
}

impl ClientError {
    /// The error kind reported by the server, if the server answered.
    pub fn kind(&self) -> Option<ErrorKind> {
        match self {
            Self::Api { error, .. } => Some(error.kind),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Client {
    base: Url,
    http: reqwest::Client,
}

impl Client {
    pub fn new(base: &str) -> Result<Self, ClientError> {
        Ok(Self { base: Url::parse(base)?, http: reqwest::Client::new() })
    }

    pub fn base(&self) -> &Url {
        &self.base
    }

    async fn decode<T: DeserializeOwned>(resp: reqwest::Response) -> Result<T, ClientError> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp.json().await?);
        }
        let text = resp.text().await?;
        let error = serde_json::from_str(&text).unwrap_or(ApiError { kind: ErrorKind::Invalid, message: text });
        Err(ClientError::Api { status, error })
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        Self::decode(self.http.get(self.base.join(path)?).send().await?).await
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ClientError> {
        Self::decode(self.http.post(self.base.join(path)?).json(body).send().await?).await
    }

    pub async fn health(&self) -> Result<Health, ClientError> {
        self.get("/health").await
    }

    /// The agent wire protocol description, markdown.
    pub async fn protocol_docs(&self) -> Result<String, ClientError> {
        let resp = self.http.get(self.base.join("/protocol")?).send().await?;
        if !resp.status().is_success() {
            return Self::decode(resp).await;
        }
        Ok(resp.text().await?)
    }

    pub async fn generate_map(&self, spec: &MapSpec) -> Result<ObstacleMap, ClientError> {
        self.post("/maps/generate", spec).await
    }

    pub async fn map_metrics(&self, req: &MapMetricsRequest) -> Result<EnvMetrics, ClientError> {
        self.post("/maps/metrics", req).await
    }

    pub async fn generate_trial(&self, req: &TrialRequest) -> Result<TrialSpec, ClientError> {
        self.post("/trials/generate", req).await
    }

    pub async fn shortest_path(&self, req: &PathRequest) -> Result<PathResult, ClientError> {
        self.post("/path", req).await
    }

    pub async fn contrast_factor(&self, req: &ContrastRequest) -> Result<f64, ClientError> {
        Ok(self.post::<_, ContrastReply>("/metrics/contrast", req).await?.cf)
    }

    /// Validates the config and starts the campaign in the background.
    pub async fn start_campaign(&self, config: String, output_dir: Option<PathBuf>) -> Result<CampaignStatus, ClientError> {
        self.post("/campaigns", &CampaignRequest { config, output_dir }).await
    }

    pub async fn campaign(&self, id: u64) -> Result<CampaignStatus, ClientError> {
        self.get(&format!("/campaigns/{id}")).await
    }

    /// Polls until the campaign leaves the running state. `on_poll` sees every
    /// status, including the last.
    pub async fn wait_campaign(&self, id: u64, every: Duration, mut on_poll: impl FnMut(&CampaignStatus)) -> Result<CampaignStatus, ClientError> {
        loop {
            let status = self.campaign(id).await?;
            on_poll(&status);
            if status.state != CampaignState::Running {
                return Ok(status);
            }
            tokio::time::sleep(every).await;
        }
    }

    /// Recomputes every metric from the stored trajectories.
    pub async fn recompute_metrics(&self, dir: PathBuf) -> Result<MetricsReply, ClientError> {
        self.post("/results/metrics", &ResultsRequest { dir }).await
    }

    pub async fn report(&self, dir: PathBuf) -> Result<ReportReply, ClientError> {
        self.post("/results/report", &ResultsRequest { dir }).await
    }
}
