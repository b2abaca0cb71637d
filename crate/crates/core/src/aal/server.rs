//! Transport front-ends. Every connection forwards requests to one loop that
//! owns the session, so tool execution is serialized in arrival order.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender};
use std::thread;
use std::time::{Duration, Instant};

use super::session::Session;
use super::wire::handle_line;

const IDLE_POLL: Duration = Duration::from_millis(20);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Listen {
    Stdio,
    Tcp(u16),
    Http(u16),
}

impl std::str::FromStr for Listen {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let port = |p: &str| p.parse::<u16>().map_err(|e| format!("bad port {p:?}: {e}"));
        match s.split_once(':') {
            None if s == "stdio" => Ok(Listen::Stdio),
            Some(("tcp", p)) => Ok(Listen::Tcp(port(p)?)),
            Some(("http", p)) => Ok(Listen::Http(port(p)?)),
            _ => Err(format!("expected stdio, tcp:PORT or http:PORT, got {s:?}")),
        }
    }
}

struct Request {
    line: String,
    reply: Sender<String>,
}

/// Serve until the session closes, every client has gone away, or no request
/// arrived within `grace` of starting. Returns whether any request was served.
/// `on_bound` receives the bound address of socket transports.
pub fn serve(
    session: &mut Session,
    listen: &Listen,
    grace: Option<Duration>,
    on_bound: impl FnOnce(Option<SocketAddr>),
) -> io::Result<bool> {
    let (tx, rx) = channel::<Request>();
    match listen {
        Listen::Stdio => {
            on_bound(None);
            thread::spawn(move || stdio_front(tx));
        }
        Listen::Tcp(p) => {
            let l = TcpListener::bind(("127.0.0.1", *p))?;
            on_bound(Some(l.local_addr()?));
            thread::spawn(move || tcp_front(l, tx));
        }
        Listen::Http(p) => {
            let srv = tiny_http::Server::http(("127.0.0.1", *p))
                .map_err(|e| io::Error::other(e.to_string()))?;
            on_bound(srv.server_addr().to_ip());
            thread::spawn(move || http_front(srv, tx));
        }
    }
    Ok(run_loop(session, rx, grace))
}

fn run_loop(session: &mut Session, rx: Receiver<Request>, grace: Option<Duration>) -> bool {
    let started = Instant::now();
    let mut served = false;
    while session.closed().is_none() {
        match rx.recv_timeout(IDLE_POLL) {
            Ok(req) => {
                served = true;
                let out = handle_line(session, &req.line);
                let _ = req.reply.send(out);
            }
            Err(RecvTimeoutError::Timeout) => {
                if !served && grace.is_some_and(|g| started.elapsed() >= g) {
                    break;
                }
                session.pace();
            }
            Err(RecvTimeoutError::Disconnected) => break,
        }
    }
    served
}

fn roundtrip(tx: &Sender<Request>, line: String) -> Option<String> {
    let (rtx, rrx) = channel();
    tx.send(Request { line, reply: rtx }).ok()?;
    rrx.recv().ok()
}

fn stdio_front(tx: Sender<Request>) {
    let stdin = io::stdin();
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let Some(out) = roundtrip(&tx, line) else {
            break;
        };
        let mut so = io::stdout().lock();
        let _ = writeln!(so, "{out}");
        let _ = so.flush();
    }
}

fn tcp_front(l: TcpListener, tx: Sender<Request>) {
    for conn in l.incoming() {
        let Ok(conn) = conn else { continue };
        let tx = tx.clone();
        thread::spawn(move || tcp_conn(conn, tx));
    }
}

fn tcp_conn(conn: TcpStream, tx: Sender<Request>) {
    let Ok(mut w) = conn.try_clone() else { return };
    for line in BufReader::new(conn).lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let Some(out) = roundtrip(&tx, line) else {
            break;
        };
        if writeln!(w, "{out}").and_then(|_| w.flush()).is_err() {
            break;
        }
    }
}

fn http_front(srv: tiny_http::Server, tx: Sender<Request>) {
    let json =
        tiny_http::Header::from_bytes("Content-Type", "application/json").expect("static header");
    for mut req in srv.incoming_requests() {
        if req.method() != &tiny_http::Method::Post || req.url() != "/rpc" {
            let _ =
                req.respond(tiny_http::Response::from_string("not found").with_status_code(404));
            continue;
        }
        let mut body = String::new();
        if req.as_reader().read_to_string(&mut body).is_err() {
            let _ = req.respond(tiny_http::Response::from_string("bad body").with_status_code(400));
            continue;
        }
        match roundtrip(&tx, body.trim().to_string()) {
            Some(out) => {
                let _ =
                    req.respond(tiny_http::Response::from_string(out).with_header(json.clone()));
            }
            None => {
                let _ = req.respond(
                    tiny_http::Response::from_string("session closed").with_status_code(503),
                );
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_listen() {
        assert_eq!("stdio".parse::<Listen>().unwrap(), Listen::Stdio);
        assert_eq!("tcp:7000".parse::<Listen>().unwrap(), Listen::Tcp(7000));
        assert_eq!("http:0".parse::<Listen>().unwrap(), Listen::Http(0));
        assert!("udp:1".parse::<Listen>().is_err());
    }
}
