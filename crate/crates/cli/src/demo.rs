use std::io::{BufRead, Write};

use noisy_search_service::session::{AnswerRequest, CreateRequest, Session, Status};

/// Interactive search in the terminal. The user keeps a point in mind and
/// types the position (1..k) of the shown point closest to it, `f` when the
/// point is shown, or `q` to stop.
pub fn run<R: BufRead, W: Write>(req: CreateRequest, input: R, mut out: W) -> Result<Status, String> {
    let mut session = Session::create("demo".into(), req, None).map_err(|e| e.to_string())?;
    let first = session.summary(true);
    let points = first.points.clone().unwrap_or_default();
    let io = |e: std::io::Error| e.to_string();
    writeln!(out, "{} points, strategy {}, k = {}", first.n, first.strategy, first.k).map_err(io)?;
    if points.len() <= 40 {
        for (i, p) in points.iter().enumerate() {
            writeln!(out, "  {:>3}: {}", i + 1, fmt_point(p)).map_err(io)?;
        }
    }
    writeln!(
        out,
        "Think of one point. Answer with the position of the closest shown point, f if yours is shown, q to quit."
    )
    .map_err(io)?;

    let mut lines = input.lines();
    loop {
        let state = session.summary(false);
        let Some(query) = state.query.clone() else {
            let word = match state.status {
                Status::Found => "found",
                _ => "stopped without finding the point",
            };
            writeln!(out, "Search {word} after {} rounds.", state.history.len()).map_err(io)?;
            return Ok(state.status);
        };
        writeln!(
            out,
            "Round {} (entropy {:.3} bits):",
            state.round, state.posterior.entropy
        )
        .map_err(io)?;
        for (pos, idx) in query.iter().enumerate() {
            writeln!(out, "  [{}] point {idx}: {}", pos + 1, fmt_point(&points[idx - 1])).map_err(io)?;
        }
        write!(out, "> ").map_err(io)?;
        out.flush().map_err(io)?;
        let Some(line) = lines.next() else {
            writeln!(out).map_err(io)?;
            return Ok(state.status);
        };
        let line = line.map_err(io)?;
        let answer = match line.trim() {
            "q" | "quit" => return Ok(state.status),
            "f" | "found" => AnswerRequest {
                response: None,
                found: Some(true),
                round: Some(state.round),
            },
            other => match other.parse::<usize>() {
                Ok(r) => AnswerRequest {
                    response: Some(r),
                    found: None,
                    round: Some(state.round),
                },
                Err(_) => {
                    writeln!(out, "Type a number between 1 and {}, f or q.", query.len()).map_err(io)?;
                    continue;
                }
            },
        };
        if let Err(e) = session.answer(&answer) {
            writeln!(out, "{e}").map_err(io)?;
        }
    }
}

fn fmt_point(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|x| format!("{x:.4}")).collect();
    if parts.len() == 1 {
        parts[0].clone()
    } else {
        format!("({})", parts.join(", "))
    }
}
