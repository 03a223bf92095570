//! Line-oriented circuit text format.
//!
//! ```text
//! qubits 2
//! out 1
//! # comment
//! H 0
//! CNOT 0 1
//! STATEPREP 0 1 : 0.707106781187,0.000000000000 0.000000000000,0.000000000000 ...
//! ```

use num_complex::Complex64;

use super::{Circuit, Gate};
use crate::error::{Error, Result};

/// `re,im` with 12 fixed decimals; negative zero prints as zero.
pub fn format_amplitude(a: Complex64) -> String {
    format!("{},{}", fixed12(a.re), fixed12(a.im))
}

fn fixed12(x: f64) -> String {
    let s = format!("{x:.12}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub(crate) fn parse_amplitude(tok: &str, line: usize) -> Result<Complex64> {
    let (re, im) = tok
        .split_once(',')
        .ok_or_else(|| Error::parse(line, format!("amplitude `{tok}` is not of the form re,im")))?;
    let re: f64 = re
        .parse()
        .map_err(|_| Error::parse(line, format!("bad real part `{re}`")))?;
    let im: f64 = im
        .parse()
        .map_err(|_| Error::parse(line, format!("bad imaginary part `{im}`")))?;
    if !re.is_finite() || !im.is_finite() {
        return Err(Error::parse(line, "amplitude is not finite"));
    }
    Ok(Complex64::new(re, im))
}

fn parse_index(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("expected a qubit index, found `{tok}`")))
}

/// Strips a trailing `#` comment and surrounding whitespace.
pub(crate) fn strip_comment(raw: &str) -> &str {
    raw.split('#').next().unwrap_or("").trim()
}

/// Parses one gate instruction line (already stripped of comments).
pub(crate) fn parse_gate(text: &str, line: usize) -> Result<Gate> {
    if let Some(rest) = text.strip_prefix("STATEPREP") {
        let (targets, amps) = rest
            .split_once(':')
            .ok_or_else(|| Error::parse(line, "STATEPREP needs `:` before the amplitudes"))?;
        let targets = targets
            .split_whitespace()
            .map(|t| parse_index(t, line))
            .collect::<Result<Vec<_>>>()?;
        let amplitudes = amps
            .split_whitespace()
            .map(|t| parse_amplitude(t, line))
            .collect::<Result<Vec<_>>>()?;
        return Ok(Gate::StatePrep {
            targets,
            amplitudes,
        });
    }
    let toks: Vec<&str> = text.split_whitespace().collect();
    let (name, args) = toks.split_first().expect("non-empty line");
    let want = |n: usize| -> Result<()> {
        if args.len() != n {
            return Err(Error::parse(
                line,
                format!("{name} takes {n} qubit argument(s), found {}", args.len()),
            ));
        }
        Ok(())
    };
    let single = |f: fn(usize) -> Gate| -> Result<Gate> {
        want(1)?;
        Ok(f(parse_index(args[0], line)?))
    };
    match *name {
        "H" => single(Gate::H),
        "X" => single(Gate::X),
        "S" => single(Gate::S),
        "Sdg" => single(Gate::Sdg),
        "T" => single(Gate::T),
        "Tdg" => single(Gate::Tdg),
        "CNOT" => {
            want(2)?;
            Ok(Gate::Cnot {
                control: parse_index(args[0], line)?,
                target: parse_index(args[1], line)?,
            })
        }
        other => Err(Error::parse(line, format!("unknown instruction `{other}`"))),
    }
}

fn parse_header(text: &str, key: &str, line: usize) -> Result<usize> {
    let mut toks = text.split_whitespace();
    match (toks.next(), toks.next(), toks.next()) {
        (Some(k), Some(v), None) if k == key => v
            .parse()
            .map_err(|_| Error::parse(line, format!("`{key}` needs a non-negative integer"))),
        _ => Err(Error::parse(line, format!("expected `{key} <count>`"))),
    }
}

/// Parses the circuit text format. Errors carry 1-based line numbers.
pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l)))
        .filter(|(_, l)| !l.is_empty());
    let (l1, first) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty circuit file"))?;
    let q_in = parse_header(first, "qubits", l1)?;
    let (l2, second) = lines
        .next()
        .ok_or_else(|| Error::parse(l1 + 1, "missing `out <count>` line"))?;
    let q_out = parse_header(second, "out", l2)?;
    if q_out > q_in {
        return Err(Error::parse(
            l2,
            format!("out {q_out} exceeds qubits {q_in}"),
        ));
    }
    let mut gates = Vec::new();
    for (ln, text) in lines {
        let gate = parse_gate(text, ln)?;
        gate.validate(q_in)
            .map_err(|e| Error::parse(ln, e.to_string()))?;
        gates.push(gate);
    }
    Circuit::new(q_in, q_out, gates).map_err(|e| Error::parse(l2, e.to_string()))
}

/// Canonical text: header lines, then one gate per line, newline-terminated.
pub fn serialize_circuit(c: &Circuit) -> String {
    let mut out = format!("qubits {}\nout {}\n", c.q_in(), c.q_out());
    for g in c.gates() {
        out.push_str(&g.to_string());
        out.push('\n');
    }
    out
}
