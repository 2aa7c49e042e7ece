//! Scripted responder for exercising the external oracle protocol.
//!
//! Modes:
//!   echo SCORE        answer every request with SCORE
//!   linear COL SLOPE  score = SLOPE * instance[COL]
//!   wrong-id          reply with an id one larger than requested
//!   crash             handshake, then exit with status 3 on the first request
//!   silent            never answer the handshake
//!   garbage           answer requests with a non-JSON line

use std::io::{BufRead, Write};
use std::process::ExitCode;

use serde_json::{json, Value};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mode = args.first().map(String::as_str).unwrap_or("echo");
    let stdin = std::io::stdin();
    let mut out = std::io::stdout().lock();
    let mut lines = stdin.lock().lines();

    let Some(Ok(hello)) = lines.next() else {
        return ExitCode::from(1);
    };
    let hello: Value = serde_json::from_str(&hello).expect("hello is JSON");
    assert_eq!(hello["type"], "hello");
    if mode == "silent" {
        for _ in lines.by_ref() {}
        return ExitCode::SUCCESS;
    }
    writeln!(out, "{}", json!({"type": "ready"})).unwrap();
    out.flush().unwrap();

    for line in lines {
        let Ok(line) = line else { break };
        let req: Value = serde_json::from_str(&line).expect("request is JSON");
        let id = req["id"].as_u64().expect("id");
        let instances = req["instances"].as_array().expect("instances");
        let scores: Vec<f64> = match mode {
            "echo" => {
                let s: f64 = args.get(1).map_or(0.5, |v| v.parse().expect("score"));
                vec![s; instances.len()]
            }
            "linear" => {
                let col: usize = args[1].parse().expect("column");
                let slope: f64 = args[2].parse().expect("slope");
                instances
                    .iter()
                    .map(|i| slope * i[col].as_f64().expect("numeric column"))
                    .collect()
            }
            "crash" => {
                eprintln!("fixture: simulated failure on request {id}");
                return ExitCode::from(3);
            }
            "garbage" => {
                writeln!(out, "not json").unwrap();
                out.flush().unwrap();
                continue;
            }
            _ => vec![0.5; instances.len()],
        };
        let reply_id = if mode == "wrong-id" { id + 1 } else { id };
        writeln!(
            out,
            "{}",
            json!({"type": "predictions", "id": reply_id, "scores": scores})
        )
        .unwrap();
        out.flush().unwrap();
    }
    ExitCode::SUCCESS
}
