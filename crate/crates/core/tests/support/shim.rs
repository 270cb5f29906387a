//! Minimal model-shim server over an in-process scorer.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use pmidistill::critics::MaskedView;
use pmidistill::scoring::{wire, CausalScorer, InfillScorer, TokenId};
use tiny_http::{Header, Method, Response, Server};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    None,
    /// Every POST answers with a body that is not JSON.
    Malformed,
    /// Infill responses carry one item fewer than requested.
    ShortBatch,
    /// The first `n` POSTs answer 503.
    Unavailable(usize),
}

pub struct Shim {
    pub url: String,
    server: Arc<Server>,
    handle: Option<JoinHandle<()>>,
    /// Raw JSON bodies of every POST received, in arrival order.
    pub requests: Arc<Mutex<Vec<(String, String)>>>,
}

impl Drop for Shim {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn json(body: String, status: u16) -> Response<std::io::Cursor<Vec<u8>>> {
    Response::from_string(body)
        .with_status_code(status)
        .with_header(Header::from_bytes("content-type", "application/json").unwrap())
}

fn respond<M>(model: &M, path: &str, body: &str) -> Result<String, String>
where
    M: CausalScorer<f64> + InfillScorer<f64>,
{
    let vocab = model.vocab().clone();
    let encode = |ts: &[String]| -> Vec<TokenId> { vocab.encode(ts) };
    let meta = |items| wire::LogprobResponse { schema: wire::SCHEMA, model: "stub".into(), version: "1".into(), items };
    match path {
        "/v1/causal/next" => {
            let req: wire::NextRequest = serde_json::from_str(body).map_err(|e| e.to_string())?;
            let mut items = Vec::new();
            for item in req.items {
                let d = model.next_token_distribution(&encode(&item.context)).map_err(|e| e.to_string())?;
                let mut entries: Vec<wire::TokenLogprob> = (0..d.len() as TokenId)
                    .filter(|&t| d.logp(t) > f64::NEG_INFINITY)
                    .map(|t| wire::TokenLogprob { token: vocab.token(t).to_string(), logprob: d.logp(t) })
                    .collect();
                let mut tail_mass = 0.0;
                if let Some(k) = req.top_k {
                    entries.sort_by(|a, b| b.logprob.partial_cmp(&a.logprob).unwrap());
                    tail_mass = entries.iter().skip(k).map(|e| e.logprob.exp()).sum();
                    entries.truncate(k);
                }
                items.push(wire::NextResult { entries, tail_mass });
            }
            let resp = wire::NextResponse { schema: wire::SCHEMA, model: "stub".into(), version: "1".into(), items };
            Ok(serde_json::to_string(&resp).unwrap())
        }
        "/v1/causal/seq" => {
            let req: wire::SeqRequest = serde_json::from_str(body).map_err(|e| e.to_string())?;
            let mut items = Vec::new();
            for item in req.items {
                let lp = model
                    .sequence_logprob(&encode(&item.context), &encode(&item.continuation))
                    .map_err(|e| e.to_string())?;
                items.push(wire::LogprobResult { logprob: lp });
            }
            Ok(serde_json::to_string(&meta(items)).unwrap())
        }
        "/v1/infill" => {
            let req: wire::InfillRequest = serde_json::from_str(body).map_err(|e| e.to_string())?;
            let mut items = Vec::new();
            for item in req.items {
                let view = MaskedView::from_parts(&item.tokens, item.answers).map_err(|e| e.to_string())?;
                let lp = model.infill_logprob(&view, item.condition.as_deref()).map_err(|e| e.to_string())?;
                items.push(wire::LogprobResult { logprob: lp });
            }
            Ok(serde_json::to_string(&meta(items)).unwrap())
        }
        other => Err(format!("unknown path {other}")),
    }
}

impl Shim {
    pub fn serve<M>(model: M, fault: Fault) -> Self
    where
        M: CausalScorer<f64> + InfillScorer<f64> + 'static,
    {
        let server = Arc::new(Server::http("127.0.0.1:0").expect("bind"));
        let url = format!("http://{}", server.server_addr().to_ip().expect("ip listener"));
        let requests = Arc::new(Mutex::new(Vec::new()));
        let log = requests.clone();
        let srv = server.clone();
        let handle = std::thread::spawn(move || {
            let posts = AtomicUsize::new(0);
            for mut req in srv.incoming_requests() {
                let path = req.url().to_string();
                let response = if *req.method() == Method::Get {
                    match path.as_str() {
                        "/v1/health" => json(
                            serde_json::to_string(&wire::Health {
                                status: "ok".into(),
                                model: "stub".into(),
                                version: "1".into(),
                            })
                            .unwrap(),
                            200,
                        ),
                        "/v1/vocab" => json(
                            serde_json::to_string(&wire::VocabResponse {
                                schema: wire::SCHEMA,
                                tokens: model.vocab().tokens().to_vec(),
                            })
                            .unwrap(),
                            200,
                        ),
                        _ => json("{}".into(), 404),
                    }
                } else {
                    let mut body = String::new();
                    req.as_reader().read_to_string(&mut body).unwrap();
                    log.lock().unwrap().push((path.clone(), body.clone()));
                    let n = posts.fetch_add(1, Ordering::SeqCst);
                    match fault {
                        Fault::Malformed => json("{\"schema\": 1, \"items\": [".into(), 200),
                        Fault::Unavailable(k) if n < k => json("{\"error\":\"busy\"}".into(), 503),
                        _ => match respond(&model, &path, &body) {
                            Ok(text) if fault == Fault::ShortBatch && path == "/v1/infill" => {
                                let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
                                v["items"].as_array_mut().unwrap().pop();
                                json(v.to_string(), 200)
                            }
                            Ok(text) => json(text, 200),
                            Err(e) => json(
                                serde_json::to_string(&wire::ErrorBody { error: "bad_request".into(), message: e })
                                    .unwrap(),
                                400,
                            ),
                        },
                    }
                };
                let _ = req.respond(response);
            }
        });
        Self { url, server, handle: Some(handle), requests }
    }
}
