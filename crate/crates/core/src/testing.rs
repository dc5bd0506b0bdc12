//! A loopback HTTP server with canned routes, for exercising the network
//! operators and the live provider without leaving the machine.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

#[derive(Debug, Clone)]
pub struct Route {
    pub status: u16,
    pub body: String,
    pub content_type: String,
    pub headers: Vec<(String, String)>,
    /// Wait this long before answering.
    pub delay: Duration,
}

impl Route {
    pub fn new(status: u16, body: &str) -> Self {
        Self {
            status,
            body: body.into(),
            content_type: "text/plain; charset=utf-8".into(),
            headers: Vec::new(),
            delay: Duration::ZERO,
        }
    }

    pub fn json(status: u16, body: &serde_json::Value) -> Self {
        Self {
            content_type: "application/json".into(),
            ..Self::new(status, &body.to_string())
        }
    }

    pub fn delayed(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn header(mut self, name: &str, value: &str) -> Self {
        self.headers.push((name.into(), value.into()));
        self
    }
}

/// A request as the server saw it.
#[derive(Debug, Clone)]
pub struct SeenRequest {
    pub method: String,
    pub path: String,
    pub headers: HashMap<String, String>,
    pub body: String,
}

pub struct FixtureServer {
    addr: SocketAddr,
    hits: Arc<AtomicUsize>,
    seen: Arc<Mutex<Vec<SeenRequest>>>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl FixtureServer {
    /// Serves `routes` by exact path (query string included, if present in
    /// the key; otherwise ignored). Unknown paths get 404.
    pub fn start(routes: Vec<(&str, Route)>) -> Self {
        let routes: HashMap<String, Route> = routes.into_iter().map(|(p, r)| (p.to_string(), r)).collect();
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind loopback");
        listener.set_nonblocking(true).expect("nonblocking listener");
        let addr = listener.local_addr().unwrap();
        let hits = Arc::new(AtomicUsize::new(0));
        let seen = Arc::new(Mutex::new(Vec::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let routes = Arc::new(routes);
        let handle = {
            let (hits, seen, stop) = (hits.clone(), seen.clone(), stop.clone());
            std::thread::spawn(move || {
                while !stop.load(Ordering::Relaxed) {
                    match listener.accept() {
                        Ok((stream, _)) => {
                            hits.fetch_add(1, Ordering::Relaxed);
                            let (routes, seen, stop) = (routes.clone(), seen.clone(), stop.clone());
                            std::thread::spawn(move || {
                                let _ = serve(stream, &routes, &seen, &stop);
                            });
                        }
                        Err(_) => std::thread::sleep(Duration::from_millis(5)),
                    }
                }
            })
        };
        Self {
            addr,
            hits,
            seen,
            stop,
            handle: Some(handle),
        }
    }

    /// 200, 204, 301, 404, 500 and a route that stalls for 3 s.
    pub fn standard() -> Self {
        Self::start(vec![
            ("/ok", Route::new(200, "ok")),
            ("/empty", Route::new(204, "")),
            ("/moved", Route::new(301, "").header("Location", "/ok")),
            ("/missing", Route::new(404, "not found")),
            ("/error", Route::new(500, "boom")),
            ("/stall", Route::new(200, "late").delayed(Duration::from_secs(3))),
        ])
    }

    /// A fake GitHub API for `octo/demo`: metadata, a README and a tree.
    pub fn github(readme: &str) -> Self {
        Self::start(vec![
            (
                "/repos/octo/demo",
                Route::json(
                    200,
                    &serde_json::json!({
                        "full_name": "octo/demo",
                        "default_branch": "main",
                        "owner": {"login": "octo"},
                        "stargazers_count": 42
                    }),
                ),
            ),
            ("/repos/octo/demo/contents/README.md?ref=main", Route::new(200, readme)),
            (
                "/repos/octo/demo/git/trees/main?recursive=1",
                Route::json(
                    200,
                    &serde_json::json!({"tree": [
                        {"path": "README.md", "type": "blob"},
                        {"path": "docs/readme.md", "type": "blob"},
                        {"path": "src/lib.rs", "type": "blob"}
                    ]}),
                ),
            ),
            ("/repos/octo/limited", Route::new(429, "slow down")),
        ])
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Connections accepted so far.
    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn requests(&self) -> Vec<SeenRequest> {
        self.seen.lock().unwrap().clone()
    }
}

impl Drop for FixtureServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(
    stream: TcpStream,
    routes: &HashMap<String, Route>,
    seen: &Mutex<Vec<SeenRequest>>,
    stop: &AtomicBool,
) -> std::io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_read_timeout(Some(Duration::from_secs(5)))?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut parts = request_line.split_whitespace();
    let method = parts.next().unwrap_or_default().to_string();
    let target = parts.next().unwrap_or("/").to_string();
    let mut headers = HashMap::new();
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 || line.trim().is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            headers.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
        }
    }
    let len: usize = headers.get("content-length").and_then(|v| v.parse().ok()).unwrap_or(0);
    let mut body = vec![0; len];
    reader.read_exact(&mut body)?;
    seen.lock().unwrap().push(SeenRequest {
        method,
        path: target.clone(),
        headers,
        body: String::from_utf8_lossy(&body).into_owned(),
    });

    let path_only = target.split('?').next().unwrap_or("/");
    let route = routes
        .get(&target)
        .or_else(|| routes.get(path_only))
        .cloned()
        .unwrap_or_else(|| Route::new(404, "no such fixture"));
    let mut waited = Duration::ZERO;
    while waited < route.delay && !stop.load(Ordering::Relaxed) {
        std::thread::sleep(Duration::from_millis(20));
        waited += Duration::from_millis(20);
    }
    let mut out = stream;
    let mut head = format!(
        "HTTP/1.1 {} {}\r\nContent-Type: {}\r\nContent-Length: {}\r\nConnection: close\r\n",
        route.status,
        reason(route.status),
        route.content_type,
        route.body.len()
    );
    for (k, v) in &route.headers {
        head.push_str(&format!("{k}: {v}\r\n"));
    }
    head.push_str("\r\n");
    out.write_all(head.as_bytes())?;
    out.write_all(route.body.as_bytes())?;
    out.flush()
}

fn reason(status: u16) -> &'static str {
    match status {
        200 => "OK",
        204 => "No Content",
        301 => "Moved Permanently",
        404 => "Not Found",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        _ => "Status",
    }
}
