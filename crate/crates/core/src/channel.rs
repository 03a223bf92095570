//! Channels built from unitary circuits, computational-basis measurements
//! with classical branching, biased coins, state preparation and discards.
//!
//! Evaluation is exact: the working register is carried as an unnormalized
//! density matrix whose trace is the probability of the current path, and
//! the branches of every measurement and coin are summed with their weights.
//! Nothing is sampled.
//!
//! Text format (indentation is ignored, `#` starts a comment):
//!
//! ```text
//! channel
//! out 1
//! PREPARE 1 : 1,0 0,0 0,0 0,0
//! UNITARY 2
//!   H 1
//! END
//! BRANCH 1 : ANY1
//! THEN
//!   KEEP 0
//! ELSE
//!   COIN 0.5
//!   HEADS
//!     PREPARE 1 : 1,0 0,0 0,0 0,0
//!   TAILS
//!     PREPARE 1 : 0,0 0,0 0,0 1,0
//!   END
//! END
//! ```
//!
//! `UNITARY n` widens the register with fresh `|0⟩` qubits up to `n` before
//! applying its gates; any `STATEPREP` inside must target fresh qubits.
//! Predicates are `ANY1` (some measured bit is 1) or `IN o1 o2 ..` (the
//! measured bits, read as a big-endian integer, are one of the listed
//! outcomes). Numbers are written in shortest round-trip form.

use nalgebra::DMatrix;

use crate::circuits::{
    format::parse_amplitude, format::parse_gate, format::strip_comment, Circuit, Gate,
};
use crate::error::{Error, Result};
use crate::qcore::{c, check_cap, gather_bits, max_abs, DensityOperator, PureState, C64};

/// Which measurement outcomes select the `then` branch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Predicate {
    /// At least one measured qubit reads 1.
    AnyOne,
    /// The outcome (measured bits as a big-endian integer) is listed.
    OutcomeIn(Vec<usize>),
}

impl Predicate {
    pub fn matches(&self, outcome: usize) -> bool {
        match self {
            Predicate::AnyOne => outcome != 0,
            Predicate::OutcomeIn(list) => list.contains(&outcome),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Unitary(Circuit),
    Measure {
        qubits: Vec<usize>,
        predicate: Predicate,
        then: Vec<Step>,
        otherwise: Vec<Step>,
    },
    Coin {
        heads_probability: f64,
        heads: Vec<Step>,
        tails: Vec<Step>,
    },
    /// Discards the working register and replaces it with the given state.
    Prepare(DensityOperator),
    /// Traces out every qubit not listed; kept qubits keep their order.
    Keep(Vec<usize>),
}

/// A channel from nothing to `output_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    output_qubits: usize,
    steps: Vec<Step>,
}

impl Channel {
    /// Checks every path ends on `output_qubits` qubits and that widths stay
    /// consistent at every merge point.
    pub fn new(output_qubits: usize, steps: Vec<Step>) -> Result<Self> {
        let end = block_width(&steps, 0)?;
        if end != output_qubits {
            return Err(Error::InvalidChannel(format!(
                "paths end on {end} qubits but the channel declares {output_qubits}"
            )));
        }
        Ok(Self {
            output_qubits,
            steps,
        })
    }

    pub fn output_qubits(&self) -> usize {
        self.output_qubits
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// The largest register width reached on any path.
    pub fn max_width(&self) -> usize {
        block_max_width(&self.steps, 0)
    }

    /// Exact output state.
    pub fn output(&self) -> Result<DensityOperator> {
        check_cap(self.max_width())?;
        let start = DMatrix::from_element(1, 1, c(1.0, 0.0));
        let out = run_block(&self.steps, start)?;
        let sym = (&out + out.adjoint()) * c(0.5, 0.0);
        Ok(DensityOperator::from_matrix_unchecked(sym))
    }
}

/// Exact output of `ch`.
pub fn channel_output(ch: &Channel) -> Result<DensityOperator> {
    ch.output()
}

fn width_of(m: &DMatrix<C64>) -> usize {
    m.nrows().trailing_zeros() as usize
}

fn check_qubits(qubits: &[usize], width: usize) -> Result<()> {
    for (i, &q) in qubits.iter().enumerate() {
        if q >= width {
            return Err(Error::InvalidChannel(format!(
                "qubit {q} is outside the {width}-qubit working register"
            )));
        }
        if qubits[..i].contains(&q) {
            return Err(Error::InvalidChannel(format!("qubit {q} listed twice")));
        }
    }
    Ok(())
}

fn block_width(steps: &[Step], mut width: usize) -> Result<usize> {
    for step in steps {
        width = match step {
            Step::Unitary(circuit) => {
                if circuit.q_in() < width {
                    return Err(Error::InvalidChannel(format!(
                        "UNITARY on {} qubits cannot act on a {width}-qubit register",
                        circuit.q_in()
                    )));
                }
                for g in circuit.gates() {
                    if let Gate::StatePrep { targets, .. } = g {
                        if targets.iter().any(|&t| t < width) {
                            return Err(Error::InvalidChannel(
                                "STATEPREP inside a channel must target fresh qubits".into(),
                            ));
                        }
                    }
                }
                circuit.q_in()
            }
            Step::Measure {
                qubits,
                then,
                otherwise,
                ..
            } => {
                check_qubits(qubits, width)?;
                merge(block_width(then, width)?, block_width(otherwise, width)?)?
            }
            Step::Coin {
                heads_probability,
                heads,
                tails,
            } => {
                if !(0.0..=1.0).contains(heads_probability) {
                    return Err(Error::InvalidChannel(format!(
                        "coin probability {heads_probability} outside [0, 1]"
                    )));
                }
                merge(block_width(heads, width)?, block_width(tails, width)?)?
            }
            Step::Prepare(rho) => rho.num_qubits(),
            Step::Keep(qubits) => {
                check_qubits(qubits, width)?;
                qubits.len()
            }
        };
    }
    Ok(width)
}

fn block_max_width(steps: &[Step], mut width: usize) -> usize {
    let mut max = width;
    for step in steps {
        let (next, inner) = match step {
            Step::Unitary(c) => (c.q_in(), c.q_in()),
            Step::Measure {
                then, otherwise, ..
            } => (
                block_width(then, width).unwrap_or(width),
                block_max_width(then, width).max(block_max_width(otherwise, width)),
            ),
            Step::Coin { heads, tails, .. } => (
                block_width(heads, width).unwrap_or(width),
                block_max_width(heads, width).max(block_max_width(tails, width)),
            ),
            Step::Prepare(rho) => (rho.num_qubits(), rho.num_qubits()),
            Step::Keep(q) => (q.len(), width),
        };
        max = max.max(inner).max(next);
        width = next;
    }
    max
}

fn merge(a: usize, b: usize) -> Result<usize> {
    if a != b {
        return Err(Error::InvalidChannel(format!(
            "branches end on different widths ({a} and {b})"
        )));
    }
    Ok(a)
}

fn is_negligible(m: &DMatrix<C64>) -> bool {
    m.trace().re.abs() < 1e-300 && max_abs(m) < 1e-300
}

fn run_block(steps: &[Step], mut rho: DMatrix<C64>) -> Result<DMatrix<C64>> {
    for step in steps {
        rho = run_step(step, rho)?;
    }
    Ok(rho)
}

fn run_step(step: &Step, rho: DMatrix<C64>) -> Result<DMatrix<C64>> {
    let width = width_of(&rho);
    match step {
        Step::Unitary(circuit) => {
            let fresh = circuit.q_in() - width;
            let widened = if fresh > 0 {
                let zeros = DensityOperator::basis(fresh, 0).into_matrix();
                rho.kronecker(&zeros)
            } else {
                rho
            };
            // U ρ U† as two passes of U over columns.
            let left = apply_to_columns(circuit, &widened)?;
            let both = apply_to_columns(circuit, &left.adjoint())?;
            Ok(both.adjoint())
        }
        Step::Measure {
            qubits,
            predicate,
            then,
            otherwise,
        } => {
            let d = rho.nrows();
            let outcome: Vec<usize> = (0..d).map(|i| gather_bits(width, qubits, i)).collect();
            let project = |want: bool| {
                DMatrix::from_fn(d, d, |i, j| {
                    if outcome[i] == outcome[j] && predicate.matches(outcome[i]) == want {
                        rho[(i, j)]
                    } else {
                        c(0.0, 0.0)
                    }
                })
            };
            let yes = project(true);
            let no = project(false);
            let out_yes = if is_negligible(&yes) {
                None
            } else {
                Some(run_block(then, yes)?)
            };
            let out_no = if is_negligible(&no) {
                None
            } else {
                Some(run_block(otherwise, no)?)
            };
            combine(out_yes, out_no, then, width)
        }
        Step::Coin {
            heads_probability,
            heads,
            tails,
        } => {
            let p = *heads_probability;
            let h = if p > 0.0 {
                Some(run_block(heads, &rho * c(p, 0.0))?)
            } else {
                None
            };
            let t = if p < 1.0 {
                Some(run_block(tails, &rho * c(1.0 - p, 0.0))?)
            } else {
                None
            };
            combine(h, t, heads, width)
        }
        Step::Prepare(sigma) => Ok(sigma.matrix() * rho.trace()),
        Step::Keep(qubits) => {
            let reduced = DensityOperator::from_matrix_unchecked(rho).partial_trace(qubits)?;
            // partial_trace sorts its input; honour the listed order.
            let mut sorted = qubits.clone();
            sorted.sort_unstable();
            let order: Vec<usize> = qubits
                .iter()
                .map(|q| sorted.iter().position(|s| s == q).expect("kept qubit"))
                .collect();
            Ok(reduced.permute_qubits(&order)?.into_matrix())
        }
    }
}

fn combine(
    a: Option<DMatrix<C64>>,
    b: Option<DMatrix<C64>>,
    a_block: &[Step],
    width: usize,
) -> Result<DMatrix<C64>> {
    match (a, b) {
        (Some(x), Some(y)) => Ok(x + y),
        (Some(x), None) | (None, Some(x)) => Ok(x),
        (None, None) => {
            let w = block_width(a_block, width)?;
            Ok(DMatrix::zeros(1 << w, 1 << w))
        }
    }
}

fn apply_to_columns(circuit: &Circuit, m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        let col = m.column(j).into_owned();
        if col.iter().all(|z| *z == c(0.0, 0.0)) {
            continue;
        }
        let mut v = PureState::from_vec_unchecked(col);
        circuit.apply_to(&mut v)?;
        out.set_column(j, v.amplitudes());
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Text format

fn number(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x}")
    }
}

fn entry(z: C64) -> String {
    format!("{},{}", number(z.re), number(z.im))
}

/// `q : e00 e01 ..` with row-major `re,im` entries.
pub(crate) fn format_density_inline(rho: &DensityOperator) -> String {
    let mut s = format!("{} :", rho.num_qubits());
    let m = rho.matrix();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            s.push(' ');
            s.push_str(&entry(m[(i, j)]));
        }
    }
    s
}

pub(crate) fn parse_density_inline(text: &str, line: usize) -> Result<DensityOperator> {
    let (q, entries) = text
        .split_once(':')
        .ok_or_else(|| Error::parse(line, "expected `<qubits> : entries`"))?;
    let q: usize = q
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, "bad qubit count"))?;
    if q > 30 {
        return Err(Error::parse(line, "qubit count too large"));
    }
    let vals = entries
        .split_whitespace()
        .map(|t| parse_amplitude(t, line))
        .collect::<Result<Vec<_>>>()?;
    let d = 1usize << q;
    if vals.len() != d * d {
        return Err(Error::parse(
            line,
            format!(
                "{q}-qubit state needs {} entries, found {}",
                d * d,
                vals.len()
            ),
        ));
    }
    DensityOperator::new(DMatrix::from_row_slice(d, d, &vals))
        .map_err(|e| Error::parse(line, e.to_string()))
}

fn join(qubits: &[usize]) -> String {
    qubits.iter().map(|q| format!(" {q}")).collect()
}

fn write_block(steps: &[Step], depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    for step in steps {
        match step {
            Step::Unitary(circuit) => {
                out.push_str(&format!("{pad}UNITARY {}\n", circuit.q_in()));
                for g in circuit.gates() {
                    out.push_str(&format!("{pad}  {g}\n"));
                }
                out.push_str(&format!("{pad}END\n"));
            }
            Step::Measure {
                qubits,
                predicate,
                then,
                otherwise,
            } => {
                let pred = match predicate {
                    Predicate::AnyOne => "ANY1".to_string(),
                    Predicate::OutcomeIn(list) => format!("IN{}", join(list)),
                };
                out.push_str(&format!("{pad}BRANCH{} : {pred}\n", join(qubits)));
                out.push_str(&format!("{pad}THEN\n"));
                write_block(then, depth + 1, out);
                out.push_str(&format!("{pad}ELSE\n"));
                write_block(otherwise, depth + 1, out);
                out.push_str(&format!("{pad}END\n"));
            }
            Step::Coin {
                heads_probability,
                heads,
                tails,
            } => {
                out.push_str(&format!("{pad}COIN {}\n", number(*heads_probability)));
                out.push_str(&format!("{pad}HEADS\n"));
                write_block(heads, depth + 1, out);
                out.push_str(&format!("{pad}TAILS\n"));
                write_block(tails, depth + 1, out);
                out.push_str(&format!("{pad}END\n"));
            }
            Step::Prepare(rho) => {
                out.push_str(&format!("{pad}PREPARE {}\n", format_density_inline(rho)));
            }
            Step::Keep(qubits) => out.push_str(&format!("{pad}KEEP{}\n", join(qubits))),
        }
    }
}

/// Canonical channel text.
pub fn serialize_channel(ch: &Channel) -> String {
    let mut out = format!("channel\nout {}\n", ch.output_qubits);
    write_block(&ch.steps, 0, &mut out);
    out
}

struct Lines<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn peek(&self) -> Option<(usize, &'a str)> {
        self.items.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let item = self.peek();
        self.pos += 1;
        item
    }

    fn last_line(&self) -> usize {
        self.items.last().map(|(l, _)| *l).unwrap_or(1)
    }

    fn expect(&mut self, keyword: &str) -> Result<()> {
        match self.next() {
            Some((_, t)) if t == keyword => Ok(()),
            Some((l, t)) => Err(Error::parse(
                l,
                format!("expected `{keyword}`, found `{t}`"),
            )),
            None => Err(Error::parse(
                self.last_line(),
                format!("expected `{keyword}` before end of file"),
            )),
        }
    }
}

fn parse_indices(text: &str, line: usize) -> Result<Vec<usize>> {
    text.split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::parse(line, format!("expected an integer, found `{t}`")))
        })
        .collect()
}

fn keyword_rest<'a>(text: &'a str, keyword: &str) -> Option<&'a str> {
    let rest = text.strip_prefix(keyword)?;
    (rest.is_empty() || rest.starts_with(char::is_whitespace)).then_some(rest)
}

/// Parses steps until one of `terminators` (not consumed) or end of input.
fn parse_block(lines: &mut Lines<'_>, terminators: &[&str]) -> Result<Vec<Step>> {
    let mut steps = Vec::new();
    while let Some((line, text)) = lines.peek() {
        if terminators.contains(&text) {
            break;
        }
        lines.next();
        if let Some(rest) = keyword_rest(text, "UNITARY") {
            let width: usize = rest
                .trim()
                .parse()
                .map_err(|_| Error::parse(line, "UNITARY needs a qubit count"))?;
            let mut gates = Vec::new();
            loop {
                match lines.next() {
                    Some((_, "END")) => break,
                    Some((l, t)) => {
                        let g = parse_gate(t, l)?;
                        g.validate(width)
                            .map_err(|e| Error::parse(l, e.to_string()))?;
                        gates.push(g);
                    }
                    None => return Err(Error::parse(line, "UNITARY block is not closed by END")),
                }
            }
            let circuit =
                Circuit::new(width, 0, gates).map_err(|e| Error::parse(line, e.to_string()))?;
            steps.push(Step::Unitary(circuit));
        } else if let Some(rest) = keyword_rest(text, "BRANCH") {
            let (qs, pred) = rest
                .split_once(':')
                .ok_or_else(|| Error::parse(line, "BRANCH needs `: <predicate>`"))?;
            let qubits = parse_indices(qs, line)?;
            let pred = pred.trim();
            let predicate = if pred == "ANY1" {
                Predicate::AnyOne
            } else if let Some(list) = keyword_rest(pred, "IN") {
                Predicate::OutcomeIn(parse_indices(list, line)?)
            } else {
                return Err(Error::parse(line, format!("unknown predicate `{pred}`")));
            };
            lines.expect("THEN")?;
            let then = parse_block(lines, &["ELSE"])?;
            lines.expect("ELSE")?;
            let otherwise = parse_block(lines, &["END"])?;
            lines.expect("END")?;
            steps.push(Step::Measure {
                qubits,
                predicate,
                then,
                otherwise,
            });
        } else if let Some(rest) = keyword_rest(text, "COIN") {
            let p: f64 = rest
                .trim()
                .parse()
                .map_err(|_| Error::parse(line, "COIN needs a probability"))?;
            lines.expect("HEADS")?;
            let heads = parse_block(lines, &["TAILS"])?;
            lines.expect("TAILS")?;
            let tails = parse_block(lines, &["END"])?;
            lines.expect("END")?;
            steps.push(Step::Coin {
                heads_probability: p,
                heads,
                tails,
            });
        } else if let Some(rest) = keyword_rest(text, "PREPARE") {
            steps.push(Step::Prepare(parse_density_inline(rest, line)?));
        } else if let Some(rest) = keyword_rest(text, "KEEP") {
            steps.push(Step::Keep(parse_indices(rest, line)?));
        } else {
            return Err(Error::parse(line, format!("unknown channel step `{text}`")));
        }
    }
    Ok(steps)
}

/// Parses the channel text format.
pub fn parse_channel(text: &str) -> Result<Channel> {
    let items: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l)))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let mut lines = Lines { items, pos: 0 };
    lines.expect("channel")?;
    let (line, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "missing `out <count>` line"))?;
    let out: usize = keyword_rest(header, "out")
        .and_then(|r| r.trim().parse().ok())
        .ok_or_else(|| Error::parse(line, "expected `out <count>`"))?;
    let steps = parse_block(&mut lines, &[])?;
    Channel::new(out, steps).map_err(|e| Error::parse(line, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::parse_circuit;

    fn prep(bits: usize) -> Step {
        Step::Prepare(DensityOperator::basis(1, bits))
    }

    #[test]
    fn fair_coin_over_basis_states() {
        let ch = Channel::new(
            1,
            vec![Step::Coin {
                heads_probability: 0.5,
                heads: vec![prep(0)],
                tails: vec![prep(1)],
            }],
        )
        .unwrap();
        let out = ch.output().unwrap();
        assert!(out.max_abs_diff(&DensityOperator::maximally_mixed(1)) < 1e-15);
    }

    #[test]
    fn branch_weights_follow_born_rule() {
        // |+⟩ measured; outcome 0 → |0⟩⟨0|, outcome 1 → |1⟩⟨1| flipped to
        // a marker on a second qubit so the weights are visible.
        let plus = parse_circuit("qubits 1\nout 1\nH 0").unwrap();
        let ch = Channel::new(
            1,
            vec![
                Step::Unitary(plus),
                Step::Measure {
                    qubits: vec![0],
                    predicate: Predicate::OutcomeIn(vec![0]),
                    then: vec![prep(0)],
                    otherwise: vec![prep(1)],
                },
            ],
        )
        .unwrap();
        let out = ch.output().unwrap();
        assert!((out.matrix()[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!((out.matrix()[(1, 1)].re - 0.5).abs() < 1e-12);
        assert!(out.matrix()[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn measurement_dephases_kept_qubits() {
        let plus = parse_circuit("qubits 1\nout 1\nH 0").unwrap();
        let ch = Channel::new(
            1,
            vec![
                Step::Unitary(plus),
                Step::Measure {
                    qubits: vec![0],
                    predicate: Predicate::AnyOne,
                    then: vec![],
                    otherwise: vec![],
                },
            ],
        )
        .unwrap();
        let out = ch.output().unwrap();
        assert!(out.max_abs_diff(&DensityOperator::maximally_mixed(1)) < 1e-12);
    }

    #[test]
    fn keep_honours_listed_order() {
        let c = parse_circuit("qubits 2\nout 2\nX 1").unwrap();
        let ch = Channel::new(2, vec![Step::Unitary(c), Step::Keep(vec![1, 0])]).unwrap();
        let out = ch.output().unwrap();
        assert!(out.max_abs_diff(&DensityOperator::basis(2, 0b10)) < 1e-15);
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let err = Channel::new(
            1,
            vec![Step::Coin {
                heads_probability: 0.5,
                heads: vec![prep(0)],
                tails: vec![Step::Prepare(DensityOperator::maximally_mixed(2))],
            }],
        );
        assert!(matches!(err, Err(Error::InvalidChannel(_))));
        assert!(Channel::new(2, vec![prep(0)]).is_err());
    }

    #[test]
    fn state_prep_must_target_fresh_qubits() {
        let prep_circuit = parse_circuit("qubits 2\nout 0\nSTATEPREP 0 : 0,0 1,0").unwrap();
        assert!(Channel::new(2, vec![prep(0), Step::Unitary(prep_circuit.clone())]).is_err());
        let fresh = parse_circuit("qubits 2\nout 0\nSTATEPREP 1 : 0,0 1,0").unwrap();
        let ch = Channel::new(2, vec![prep(0), Step::Unitary(fresh)]).unwrap();
        assert!(
            ch.output()
                .unwrap()
                .max_abs_diff(&DensityOperator::basis(2, 0b01))
                < 1e-15
        );
    }

    #[test]
    fn text_round_trip() {
        let text = "\
channel
out 1
PREPARE 1 : 0.5,0 0,0 0,0 0.5,0
UNITARY 2
  H 1
  CNOT 1 0
END
BRANCH 1 : ANY1
THEN
  KEEP 0
ELSE
  COIN 0.25
  HEADS
    PREPARE 1 : 1,0 0,0 0,0 0,0
  TAILS
    KEEP 0
  END
END
";
        let ch = parse_channel(text).unwrap();
        assert_eq!(serialize_channel(&ch), text);
        let out = ch.output().unwrap();
        assert!((out.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parse_errors() {
        assert!(parse_channel("channel\nout 1\nCOIN 0.5\nHEADS\nKEEP 0\n").is_err());
        assert!(parse_channel("channel\nout 1\nFROB\n").is_err());
        assert!(parse_channel("chan\nout 1\n").is_err());
        assert!(parse_channel("channel\nout 1\nPREPARE 1 : 1,0 0,0 0,0\n").is_err());
    }
}
