#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use genbias_core::scoring::TokenScoreColumns;
use genbias_core::{ScorerBackend, TableBackend, TokenScore};
use serde_json::{json, Value};

pub const EN_LEXICON: &str = "lang=en\nmatch=token\n# pairs\nhe\tshe\nwaiter\twaitress\nman\twoman\nactor\tactress\nhim\ther\n";

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

pub fn token_scores(log_probs: &[f64]) -> Vec<TokenScore> {
    log_probs
        .iter()
        .enumerate()
        .map(|(i, &l)| TokenScore {
            token: format!("w{i}"),
            log_prob: l,
            attention: 1.0,
        })
        .collect()
}

/// Four single-gender sentences (two male, two female). Their lexicon
/// counterparts score so that the male side wins in exactly three pairs.
pub struct SbmFixture {
    pub corpus: String,
    pub table: TableBackend,
    /// (male text, female text, male AULA, female AULA)
    pub pairs: Vec<(String, String, f64, f64)>,
}

pub fn sbm_fixture() -> SbmFixture {
    let rows = [
        ("he came over .", "she came over .", -1.0, -2.0),
        ("the waiter smiled", "the waitress smiled", -3.0, -1.0),
        ("an actor left", "an actress left", -0.5, -0.75),
        ("the man sat down", "the woman sat down", -2.0, -4.0),
    ];
    // sources: two male originals, two female originals
    let corpus = ["he came over .", "the waitress smiled", "an actor left", "the woman sat down"].join("\n") + "\n";
    let mut table = TableBackend::new();
    let mut pairs = Vec::new();
    for (i, (m, f, lm, lf)) in rows.iter().enumerate() {
        let n = m.split_whitespace().count();
        // every token gets the same log prob, so the AULA equals it
        table.insert_token_scores(m, token_scores(&vec![*lm; n])).unwrap();
        table.insert_token_scores(f, token_scores(&vec![*lf; n])).unwrap();
        let e = i as f64;
        table.insert_embedding(m, vec![1.0, e, 0.5]).unwrap();
        table.insert_embedding(f, vec![0.5, 1.0, e]).unwrap();
        pairs.push((m.to_string(), f.to_string(), *lm, *lf));
    }
    SbmFixture { corpus, table, pairs }
}

type Handler = dyn Fn(&str, &str, &Value) -> (u16, String) + Send + Sync;

/// Minimal HTTP/1.1 server, one thread per connection.
pub struct StubServer {
    pub addr: SocketAddr,
    pub requests: Arc<AtomicUsize>,
    pub max_concurrent: Arc<AtomicUsize>,
}

impl StubServer {
    pub fn start(handler: Arc<Handler>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let requests = Arc::new(AtomicUsize::new(0));
        let max_concurrent = Arc::new(AtomicUsize::new(0));
        let active = Arc::new(AtomicUsize::new(0));
        let (req, maxc) = (requests.clone(), max_concurrent.clone());
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let (handler, req, maxc, active) = (handler.clone(), req.clone(), maxc.clone(), active.clone());
                thread::spawn(move || {
                    let now = active.fetch_add(1, Ordering::SeqCst) + 1;
                    maxc.fetch_max(now, Ordering::SeqCst);
                    req.fetch_add(1, Ordering::SeqCst);
                    let _ = serve(stream, &*handler);
                    active.fetch_sub(1, Ordering::SeqCst);
                });
            }
        });
        StubServer {
            addr,
            requests,
            max_concurrent,
        }
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

fn serve(stream: TcpStream, handler: &Handler) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let mut parts = line.split_whitespace();
    let method = parts.next().unwrap_or("").to_string();
    let path = parts.next().unwrap_or("").to_string();
    let mut length = 0usize;
    loop {
        let mut h = String::new();
        reader.read_line(&mut h)?;
        let h = h.trim_end();
        if h.is_empty() {
            break;
        }
        if let Some((k, v)) = h.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body)?;
    let json: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
    let (status, text) = handler(&method, &path, &json);
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
        text.len()
    )?;
    stream.flush()
}

/// Serve a table backend over the scoring wire protocol.
pub fn table_handler(table: TableBackend) -> Arc<Handler> {
    Arc::new(move |method: &str, path: &str, body: &Value| {
        let text = body["text"].as_str().unwrap_or("");
        let answer = match (method, path) {
            ("GET", "/v1/info") => Ok(serde_json::to_value(table.info()).unwrap()),
            ("POST", "/v1/token_scores") => table
                .token_scores(text)
                .map(|s| serde_json::to_value(TokenScoreColumns::from_scores(&s)).unwrap()),
            ("POST", "/v1/fill_mask") => table
                .fill_mask(
                    text,
                    body["mask_index"].as_u64().unwrap_or(0) as usize,
                    body["top_k"].as_u64().unwrap_or(10) as usize,
                )
                .map(|p| json!({ "predictions": p })),
            ("POST", "/v1/embed") => table.embed(text).map(|v| json!({ "vector": v })),
            _ => return (404, json!({"error": format!("no route {method} {path}")}).to_string()),
        };
        match answer {
            Ok(v) => (200, v.to_string()),
            Err(e) => (400, json!({ "error": e.to_string() }).to_string()),
        }
    })
}

/// An address nothing listens on.
pub fn dead_address() -> String {
    let l = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = l.local_addr().unwrap();
    drop(l);
    format!("http://{addr}")
}
