//! HTTP session service exposing the simulator to external trainers.
//!
//! JSON over HTTP/1.1, opaque session tokens, no auth — this is a local
//! integration surface. The server owns all reward computation so clients
//! only ever see (observation, masks, reward, done).
//!
//! Endpoints:
//!   POST   /sessions            create an episode (scenario or distribution+seed)
//!   POST   /sessions/{id}/step  apply one flat-index action
//!   GET    /sessions/{id}       full state snapshot
//!   DELETE /sessions/{id}       purge the session

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::thread::JoinHandle;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use tiny_http::{Header, Method, Response, Server};

use colorbatch_core::heuristics::heuristic_mask;
use colorbatch_core::plant::{Color, PlantConfig, PlantState};
use colorbatch_core::reward::{outcome_car_reward, shaped_reward, RewardConfig};
use colorbatch_core::scenario::generate_scenarios;

/// Sessions kept before the oldest ones are evicted.
const MAX_SESSIONS: usize = 1024;

struct Session {
    plant: PlantState,
    reward: RewardConfig,
    color_changes: usize,
    steps: usize,
    created_at: Instant,
}

struct ServiceState {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    counter: AtomicU64,
    nonce: u64,
}

#[derive(Debug, Deserialize)]
struct CreateSessionBody {
    #[serde(default, alias = "plant_config")]
    plant: Option<PlantConfig>,
    #[serde(default)]
    reward: Option<RewardConfig>,
    /// Explicit color sequence…
    #[serde(default)]
    scenario: Option<Vec<u8>>,
    /// …or a distribution to draw from (with `seed`, and optional `len`).
    #[serde(default)]
    distribution: Option<Vec<f64>>,
    #[serde(default)]
    len: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub observation: Vec<f64>,
    pub structural_mask: Vec<bool>,
    pub heuristic_mask: Vec<bool>,
    pub scenario_len: usize,
}

#[derive(Debug, Deserialize)]
struct StepBody {
    action: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StepResponse {
    pub observation: Vec<f64>,
    /// Empty vectors once the episode is done.
    pub structural_mask: Vec<bool>,
    pub heuristic_mask: Vec<bool>,
    pub reward: f64,
    pub car_reward: f64,
    pub emitted_color: Option<u8>,
    pub color_changed: bool,
    pub inserted: bool,
    pub done: bool,
    pub color_changes: usize,
    pub steps: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Snapshot {
    pub pending: Vec<u8>,
    pub buffers: Vec<Vec<u8>>,
    pub emitted: Vec<u8>,
    pub dup: u32,
    pub color_changes: usize,
    pub done: bool,
    pub scenario_len: usize,
    pub plant: PlantConfig,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    structural_mask: Option<Vec<bool>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    heuristic_mask: Option<Vec<bool>>,
}

enum Reply {
    Json(u16, String),
    Empty(u16),
}

fn json_reply<T: Serialize>(status: u16, value: &T) -> Reply {
    Reply::Json(status, serde_json::to_string(value).expect("serializable"))
}

fn error_reply(status: u16, message: impl Into<String>) -> Reply {
    json_reply(
        status,
        &ErrorBody {
            error: message.into(),
            structural_mask: None,
            heuristic_mask: None,
        },
    )
}

fn mask_vec(mask: &colorbatch_core::plant::MaskVector) -> Vec<bool> {
    mask.as_slice().to_vec()
}

fn masks_of(plant: &PlantState) -> (Vec<bool>, Vec<bool>) {
    if plant.is_done() {
        (Vec::new(), Vec::new())
    } else {
        let structural = plant.structural_mask().expect("non-terminal");
        let heuristic = heuristic_mask(plant).expect("non-terminal");
        (mask_vec(&structural), mask_vec(&heuristic))
    }
}

impl ServiceState {
    fn new(nonce: u64) -> Self {
        ServiceState {
            sessions: RwLock::new(HashMap::new()),
            counter: AtomicU64::new(1),
            nonce,
        }
    }

    fn create_session(&self, body: CreateSessionBody) -> Reply {
        let plant_cfg = body.plant.unwrap_or_default();
        if let Err(e) = plant_cfg.validate() {
            return error_reply(400, e.to_string());
        }
        let reward_cfg = body.reward.unwrap_or_default();
        let colors: Vec<Color> = match (body.scenario, body.distribution) {
            (Some(ids), None) => ids.into_iter().map(Color).collect(),
            (None, Some(dist)) => {
                let len = body.len.unwrap_or(100);
                let seed = body.seed.unwrap_or(0);
                match generate_scenarios(&dist, 1, len, seed) {
                    Ok(mut s) => s.remove(0).colors,
                    Err(e) => return error_reply(422, e.to_string()),
                }
            }
            (Some(_), Some(_)) => {
                return error_reply(400, "give either scenario or distribution, not both")
            }
            (None, None) => return error_reply(400, "scenario or distribution required"),
        };
        let plant = match PlantState::new(plant_cfg, &colors) {
            Ok(p) => p,
            Err(e) => return error_reply(422, e.to_string()),
        };

        let id = format!(
            "s{:08x}{:08x}",
            self.nonce & 0xffff_ffff,
            self.counter.fetch_add(1, Ordering::Relaxed)
        );
        let (structural, heuristic) = masks_of(&plant);
        let created = SessionCreated {
            session_id: id.clone(),
            observation: plant.encode_observation(),
            structural_mask: structural,
            heuristic_mask: heuristic,
            scenario_len: plant.scenario_len(),
        };
        let session = Session {
            plant,
            reward: reward_cfg,
            color_changes: 0,
            steps: 0,
            created_at: Instant::now(),
        };
        let mut sessions = self.sessions.write().expect("lock");
        if sessions.len() >= MAX_SESSIONS {
            // evict the oldest session
            if let Some(oldest) = sessions
                .iter()
                .min_by_key(|(_, s)| s.lock().expect("lock").created_at)
                .map(|(k, _)| k.clone())
            {
                sessions.remove(&oldest);
            }
        }
        sessions.insert(id, Arc::new(Mutex::new(session)));
        json_reply(201, &created)
    }

    fn with_session(&self, id: &str, f: impl FnOnce(&mut Session) -> Reply) -> Reply {
        let session = {
            let sessions = self.sessions.read().expect("lock");
            sessions.get(id).cloned()
        };
        match session {
            Some(s) => {
                let mut guard = s.lock().expect("lock");
                f(&mut guard)
            }
            None => error_reply(404, format!("unknown session {id}")),
        }
    }

    fn step(&self, id: &str, body: StepBody) -> Reply {
        self.with_session(id, |session| {
            if session.plant.is_done() {
                return error_reply(410, "episode already finished");
            }
            let n = session.plant.config().num_buffers;
            let in_range = body.action < n * n;
            let action = colorbatch_core::plant::Action::from_flat(
                if in_range { body.action } else { 0 },
                n,
            );
            if !in_range || !session.plant.action_valid(action) {
                let (structural, heuristic) = masks_of(&session.plant);
                return json_reply(
                    409,
                    &ErrorBody {
                        error: format!("action {} is invalid in the current state", body.action),
                        structural_mask: Some(structural),
                        heuristic_mask: Some(heuristic),
                    },
                );
            }
            let before = session.plant.clone();
            let outcome = match session.plant.apply(action) {
                Ok(o) => o,
                Err(e) => return error_reply(409, e.to_string()),
            };
            let car_r = outcome_car_reward(&session.reward, &before, &session.plant, &outcome);
            let reward = shaped_reward(&session.reward, &before, &session.plant, car_r);
            session.steps += 1;
            if outcome.color_changed {
                session.color_changes += 1;
            }
            let (structural, heuristic) = masks_of(&session.plant);
            json_reply(
                200,
                &StepResponse {
                    observation: session.plant.encode_observation(),
                    structural_mask: structural,
                    heuristic_mask: heuristic,
                    reward,
                    car_reward: car_r,
                    emitted_color: outcome.emitted_color.map(|c| c.id()),
                    color_changed: outcome.color_changed,
                    inserted: outcome.inserted,
                    done: outcome.done,
                    color_changes: session.color_changes,
                    steps: session.steps,
                },
            )
        })
    }

    fn snapshot(&self, id: &str) -> Reply {
        self.with_session(id, |session| {
            let plant = &session.plant;
            json_reply(
                200,
                &Snapshot {
                    pending: plant.pending().iter().map(|c| c.id()).collect(),
                    buffers: plant
                        .buffers()
                        .iter()
                        .map(|b| b.iter().map(|c| c.id()).collect())
                        .collect(),
                    emitted: plant.emitted().iter().map(|c| c.id()).collect(),
                    dup: plant.dup(),
                    color_changes: session.color_changes,
                    done: plant.is_done(),
                    scenario_len: plant.scenario_len(),
                    plant: *plant.config(),
                },
            )
        })
    }

    fn delete(&self, id: &str) -> Reply {
        let mut sessions = self.sessions.write().expect("lock");
        match sessions.remove(id) {
            Some(_) => Reply::Empty(204),
            None => error_reply(404, format!("unknown session {id}")),
        }
    }
}

fn read_json_body<T: for<'de> Deserialize<'de>>(
    req: &mut tiny_http::Request,
) -> Result<T, Reply> {
    let is_json = req
        .headers()
        .iter()
        .any(|h| {
            h.field.as_str().as_str().eq_ignore_ascii_case("content-type")
                && h.value.as_str().to_ascii_lowercase().contains("application/json")
        });
    // Drain the body regardless of outcome so the connection stays usable.
    let mut body = String::new();
    if req.as_reader().read_to_string(&mut body).is_err() {
        return Err(error_reply(400, "unreadable body"));
    }
    if !is_json {
        return Err(error_reply(415, "content-type must be application/json"));
    }
    serde_json::from_str(&body).map_err(|e| error_reply(400, format!("malformed body: {e}")))
}

fn route(state: &ServiceState, req: &mut tiny_http::Request) -> Reply {
    let url = req.url().to_string();
    let path: Vec<&str> = url.trim_matches('/').split('/').collect();
    match (req.method(), path.as_slice()) {
        (Method::Post, ["sessions"]) => match read_json_body::<CreateSessionBody>(req) {
            Ok(body) => state.create_session(body),
            Err(reply) => reply,
        },
        (Method::Post, ["sessions", id, "step"]) => match read_json_body::<StepBody>(req) {
            Ok(body) => state.step(id, body),
            Err(reply) => reply,
        },
        (Method::Get, ["sessions", id]) => state.snapshot(id),
        (Method::Delete, ["sessions", id]) => state.delete(id),
        _ => error_reply(404, format!("no route for {} {url}", req.method())),
    }
}

/// A running simulator service.
pub struct SimServer {
    server: Arc<Server>,
    state: Arc<ServiceState>,
    stop: Arc<AtomicBool>,
    workers: Vec<JoinHandle<()>>,
}

impl SimServer {
    /// Bind and start serving on `workers` threads. Use port 0 for an
    /// ephemeral port.
    pub fn start(addr: &str, workers: usize) -> Result<Self> {
        let server = Arc::new(
            Server::http(addr)
                .map_err(|e| anyhow::anyhow!("binding {addr}: {e}"))?,
        );
        let nonce = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0);
        let state = Arc::new(ServiceState::new(nonce));
        let stop = Arc::new(AtomicBool::new(false));
        let mut handles = Vec::new();
        for _ in 0..workers.max(1) {
            let server = Arc::clone(&server);
            let state = Arc::clone(&state);
            let stop = Arc::clone(&stop);
            handles.push(std::thread::spawn(move || {
                while !stop.load(Ordering::Relaxed) {
                    match server.recv() {
                        Ok(mut req) => {
                            let reply = route(&state, &mut req);
                            let header: Header = "Content-Type: application/json"
                                .parse()
                                .expect("static header");
                            let result = match reply {
                                Reply::Json(status, body) => req.respond(
                                    Response::from_string(body)
                                        .with_status_code(status)
                                        .with_header(header),
                                ),
                                Reply::Empty(status) => {
                                    req.respond(Response::empty(status))
                                }
                            };
                            if let Err(e) = result {
                                eprintln!("response error: {e}");
                            }
                        }
                        Err(_) => break, // server unblocked/shut down
                    }
                }
            }));
        }
        Ok(SimServer {
            server,
            state,
            stop,
            workers: handles,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        match self.server.server_addr() {
            tiny_http::ListenAddr::IP(addr) => addr,
            #[allow(unreachable_patterns)]
            _ => unreachable!("http listener is TCP"),
        }
    }

    pub fn session_count(&self) -> usize {
        self.state.sessions.read().expect("lock").len()
    }

    /// Block the current thread until the workers exit.
    pub fn join(mut self) {
        for h in self.workers.drain(..) {
            let _ = h.join();
        }
    }

    pub fn stop(&self) {
        self.stop.store(true, Ordering::Relaxed);
        // unblock() wakes a single blocked recv(); every worker needs one
        for _ in 0..self.workers.len().max(1) {
            self.server.unblock();
        }
    }
}

impl Drop for SimServer {
    fn drop(&mut self) {
        self.stop();
        for h in self.workers.drain(..) {
            let _ = h.join();
        }
    }
}

/// Run the service in the foreground (the `serve` subcommand).
pub fn serve_blocking(port: u16, workers: usize) -> Result<()> {
    let server = SimServer::start(&format!("0.0.0.0:{port}"), workers)
        .context("starting simulator service")?;
    println!("listening on {}", server.local_addr());
    server.join();
    Ok(())
}
