use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;
use std::time::Duration;

use recbias::corpus::{Gender, GroupSpec, Race};
use recbias::llmgen::{
    ChatEndpoint, CompletionRequest, EndpointError, HttpEndpoint, ModelEndpointConfig,
};

struct Captured {
    request_line: String,
    headers: Vec<String>,
    body: String,
}

/// Serves exactly one HTTP request with the given status and body.
fn one_shot_server(status: u16, body: &'static str) -> (String, thread::JoinHandle<Captured>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let handle = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut request_line = String::new();
        reader.read_line(&mut request_line).unwrap();
        let mut headers = Vec::new();
        let mut length = 0usize;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let line = line.trim_end().to_string();
            if line.is_empty() {
                break;
            }
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                length = v.trim().parse().unwrap();
            }
            headers.push(line);
        }
        let mut buf = vec![0u8; length];
        reader.read_exact(&mut buf).unwrap();
        let mut stream = stream;
        write!(
            stream,
            "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        )
        .unwrap();
        stream.flush().unwrap();
        Captured {
            request_line,
            headers,
            body: String::from_utf8(buf).unwrap(),
        }
    });
    (format!("http://{addr}/v1"), handle)
}

fn request() -> CompletionRequest {
    CompletionRequest {
        model_id: "gpt-4o".into(),
        temperature: 1.0,
        prompt: "recommend things".into(),
        group: GroupSpec::new(Race::Asian, Gender::Woman),
        response_index: 0,
        attempt: 0,
    }
}

fn config(base_url: String) -> ModelEndpointConfig {
    ModelEndpointConfig {
        base_url,
        timeout: Duration::from_secs(10),
        ..Default::default()
    }
}

#[test]
fn posts_chat_completion_and_reads_first_choice() {
    let (url, server) = one_shot_server(
        200,
        r#"{"choices":[{"message":{"role":"assistant","content":"{\"Lamp\": \"Bright.\"}"}}]}"#,
    );
    let endpoint = HttpEndpoint::with_key(&config(url), "sk-test".into()).unwrap();
    let text = endpoint.complete(&request()).unwrap();
    assert_eq!(text, r#"{"Lamp": "Bright."}"#);

    let got = server.join().unwrap();
    assert!(got.request_line.starts_with("POST /v1/chat/completions "));
    assert!(got
        .headers
        .iter()
        .any(|h| h.eq_ignore_ascii_case("authorization: Bearer sk-test")));
    let body: serde_json::Value = serde_json::from_str(&got.body).unwrap();
    assert_eq!(body["model"], "gpt-4o");
    assert_eq!(body["temperature"], 1.0);
    assert_eq!(body["messages"][0]["role"], "user");
    assert_eq!(body["messages"][0]["content"], "recommend things");
    assert_eq!(body["messages"].as_array().unwrap().len(), 1);
}

#[test]
fn unauthorized_maps_to_auth_error() {
    let (url, server) = one_shot_server(401, r#"{"error":"bad key"}"#);
    let endpoint = HttpEndpoint::with_key(&config(url), "nope".into()).unwrap();
    assert_eq!(endpoint.complete(&request()), Err(EndpointError::Auth(401)));
    server.join().unwrap();
}

#[test]
fn server_error_carries_status() {
    let (url, server) = one_shot_server(503, r#"{"error":"overloaded"}"#);
    let endpoint = HttpEndpoint::with_key(&config(url), "k".into()).unwrap();
    assert!(matches!(
        endpoint.complete(&request()),
        Err(EndpointError::Http { status: 503, .. })
    ));
    server.join().unwrap();
}

#[test]
fn refused_connection_is_transport_error() {
    let port = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let endpoint =
        HttpEndpoint::with_key(&config(format!("http://127.0.0.1:{port}/v1")), "k".into()).unwrap();
    assert!(matches!(
        endpoint.complete(&request()),
        Err(EndpointError::Transport(_))
    ));
}
