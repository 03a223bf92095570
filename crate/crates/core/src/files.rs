//! Text file formats for graphs, density matrices, instances and protocol
//! specifications, plus loaders that resolve relative file references.
//!
//! Graph files: `n <count>` then one `edge i j` per line.
//!
//! Density files: `density <q>` then `2^q` rows of `2^q` entries `re,im`.
//!
//! Instance files are `key=value` lines:
//!
//! ```text
//! kind=qsci
//! alpha=0
//! beta=0.25
//! circuit=k3.circuit
//! provenance.reduction=gna
//! ```
//!
//! A QSCI instance has one source key (`circuit`, `channel`, `state` or
//! `graph`); a QSD instance has two, suffixed `0` and `1`. A `graph` source
//! stands for the output of the graph non-automorphism reduction. Keys under
//! `provenance.` are carried along verbatim. Paths are relative to the file
//! that mentions them.
//!
//! Protocol files either name an instance circuit (`qsci_circuit=`, with
//! optional `q_p=`) to build the zero-knowledge verifier from, or give an
//! explicit verifier (`verifier=`, `q_v=`, `q_m=`, `q_p=`, `q_s=` and
//! either `output=<qubit>` or `accept_zero=<qubits..>`). Either form may
//! name a simulator state: `sim=` (a circuit whose output is the state) or
//! `sim_density=`.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::channel::{parse_channel, serialize_channel};
use crate::circuits::{
    format::parse_amplitude, format::strip_comment, parse_circuit, serialize_circuit, Circuit,
};
use crate::error::{Error, Result};
use crate::problems::{Graph, QsciInstance, QsdInstance, StateSource};
use crate::protocol::{
    build_qsci_verifier_with_workspace, AcceptRule, ProtocolSpec, QsciProtocol, SimulatorState,
};
use crate::qcore::{check_cap, DensityOperator};
use crate::reductions::gna_to_qsci;

/// Shortest round-trip decimal; negative zero prints as `0`.
pub(crate) fn format_number(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        x.to_string()
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l)))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse().map_err(|_| {
        Error::parse(
            line,
            format!("expected a non-negative integer, found `{tok}`"),
        )
    })
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("expected a number, found `{tok}`")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, "number is not finite"));
    }
    Ok(v)
}

pub fn parse_graph(text: &str) -> Result<Graph> {
    let mut lines = content_lines(text);
    let (l1, first) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty graph file"))?;
    let n = match first.split_whitespace().collect::<Vec<_>>()[..] {
        ["n", count] => parse_usize(count, l1)?,
        _ => return Err(Error::parse(l1, "expected `n <count>`")),
    };
    let mut g = Graph::empty(n);
    for (ln, text) in lines {
        match text.split_whitespace().collect::<Vec<_>>()[..] {
            ["edge", u, v] => g
                .add_edge(parse_usize(u, ln)?, parse_usize(v, ln)?)
                .map_err(|e| Error::parse(ln, e.to_string()))?,
            _ => return Err(Error::parse(ln, "expected `edge <u> <v>`")),
        }
    }
    Ok(g)
}

pub fn serialize_graph(g: &Graph) -> String {
    let mut out = format!("n {}\n", g.n());
    for (u, v) in g.edges() {
        out.push_str(&format!("edge {u} {v}\n"));
    }
    out
}

pub fn parse_density(text: &str) -> Result<DensityOperator> {
    let mut lines = content_lines(text);
    let (l1, first) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty density file"))?;
    let q = match first.split_whitespace().collect::<Vec<_>>()[..] {
        ["density", q] => parse_usize(q, l1)?,
        _ => return Err(Error::parse(l1, "expected `density <qubits>`")),
    };
    check_cap(q)?;
    let d = 1usize << q;
    let mut m = DMatrix::zeros(d, d);
    let mut last = l1;
    for row in 0..d {
        let (ln, text) = lines
            .next()
            .ok_or_else(|| Error::parse(last + 1, format!("expected {d} rows, found {row}")))?;
        let entries: Vec<&str> = text.split_whitespace().collect();
        if entries.len() != d {
            return Err(Error::parse(
                ln,
                format!("row has {} entries, expected {d}", entries.len()),
            ));
        }
        for (col, tok) in entries.iter().enumerate() {
            m[(row, col)] = parse_amplitude(tok, ln)?;
        }
        last = ln;
    }
    if let Some((ln, _)) = lines.next() {
        return Err(Error::parse(ln, "unexpected extra row"));
    }
    DensityOperator::new(m).map_err(|e| Error::parse(l1, e.to_string()))
}

pub fn serialize_density(rho: &DensityOperator) -> String {
    let mut out = format!("density {}\n", rho.num_qubits());
    let m = rho.matrix();
    for row in 0..m.nrows() {
        let entries: Vec<String> = (0..m.ncols())
            .map(|col| {
                let z = m[(row, col)];
                format!("{},{}", format_number(z.re), format_number(z.im))
            })
            .collect();
        out.push_str(&entries.join(" "));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    Qsci,
    Qsd,
}

impl InstanceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InstanceKind::Qsci => "qsci",
            InstanceKind::Qsd => "qsd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Circuit,
    Channel,
    State,
    Graph,
}

impl SourceKind {
    const ALL: [SourceKind; 4] = [
        SourceKind::Circuit,
        SourceKind::Channel,
        SourceKind::State,
        SourceKind::Graph,
    ];

    pub fn key(self) -> &'static str {
        match self {
            SourceKind::Circuit => "circuit",
            SourceKind::Channel => "channel",
            SourceKind::State => "state",
            SourceKind::Graph => "graph",
        }
    }

    fn extension(self) -> &'static str {
        match self {
            SourceKind::Circuit => "circuit",
            SourceKind::Channel => "channel",
            SourceKind::State => "density",
            SourceKind::Graph => "graph",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceRef {
    pub kind: SourceKind,
    pub path: PathBuf,
}

/// The parsed contents of an instance file, before references are loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFile {
    pub kind: InstanceKind,
    pub alpha: f64,
    pub beta: f64,
    /// One source for QSCI; two (slots 0 and 1) for QSD.
    pub sources: Vec<SourceRef>,
    /// `provenance.*` entries without the prefix, in file order.
    pub provenance: Vec<(String, String)>,
}

/// A loaded instance of either problem.
#[derive(Debug, Clone)]
pub enum Instance {
    Qsci(QsciInstance),
    Qsd(QsdInstance),
}

fn key_values(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (ln, line) in content_lines(text) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(ln, format!("expected `key=value`, found `{line}`")))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if !seen.insert(k.clone()) {
            return Err(Error::parse(ln, format!("duplicate key `{k}`")));
        }
        out.push((ln, k, v));
    }
    Ok(out)
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kind = InstanceKind::Qsci;
        let (mut alpha, mut beta) = (None, None);
        let mut slots: [Option<SourceRef>; 3] = [None, None, None];
        let mut provenance = Vec::new();
        let mut last = 1;
        for (ln, k, v) in key_values(text)? {
            last = ln;
            if let Some(p) = k.strip_prefix("provenance.") {
                provenance.push((p.to_string(), v));
                continue;
            }
            match k.as_str() {
                "kind" => {
                    kind = match v.as_str() {
                        "qsci" => InstanceKind::Qsci,
                        "qsd" => InstanceKind::Qsd,
                        other => return Err(Error::parse(ln, format!("unknown kind `{other}`"))),
                    }
                }
                "alpha" => alpha = Some(parse_f64(&v, ln)?),
                "beta" => beta = Some(parse_f64(&v, ln)?),
                _ => {
                    let found = SourceKind::ALL.iter().find_map(|&sk| {
                        let rest = k.strip_prefix(sk.key())?;
                        let slot = match rest {
                            "" => 0,
                            "0" => 1,
                            "1" => 2,
                            _ => return None,
                        };
                        Some((sk, slot))
                    });
                    let (sk, slot) =
                        found.ok_or_else(|| Error::parse(ln, format!("unknown key `{k}`")))?;
                    if slots[slot].is_some() {
                        return Err(Error::parse(ln, format!("second source for slot `{k}`")));
                    }
                    slots[slot] = Some(SourceRef {
                        kind: sk,
                        path: PathBuf::from(v),
                    });
                }
            }
        }
        let alpha = alpha.ok_or_else(|| Error::parse(last, "missing `alpha`"))?;
        let beta = beta.ok_or_else(|| Error::parse(last, "missing `beta`"))?;
        let [single, first, second] = slots;
        let sources = match (kind, single, first, second) {
            (InstanceKind::Qsci, Some(s), None, None) => vec![s],
            (InstanceKind::Qsd, None, Some(a), Some(b)) => vec![a, b],
            (InstanceKind::Qsci, ..) => {
                return Err(Error::parse(
                    last,
                    "a qsci instance needs exactly one unsuffixed source",
                ))
            }
            (InstanceKind::Qsd, ..) => {
                return Err(Error::parse(
                    last,
                    "a qsd instance needs sources suffixed 0 and 1",
                ))
            }
        };
        Ok(Self {
            kind,
            alpha,
            beta,
            sources,
            provenance,
        })
    }

    pub fn serialize(&self) -> String {
        let mut out = format!(
            "kind={}\nalpha={}\nbeta={}\n",
            self.kind.as_str(),
            format_number(self.alpha),
            format_number(self.beta)
        );
        for (i, s) in self.sources.iter().enumerate() {
            let suffix = match (self.kind, i) {
                (InstanceKind::Qsci, _) => String::new(),
                (InstanceKind::Qsd, i) => i.to_string(),
            };
            out.push_str(&format!(
                "{}{}={}\n",
                s.kind.key(),
                suffix,
                s.path.display()
            ));
        }
        for (k, v) in &self.provenance {
            out.push_str(&format!("provenance.{k}={v}\n"));
        }
        out
    }

    /// Loads every referenced file relative to `base`.
    pub fn resolve(&self, base: &Path) -> Result<Instance> {
        let sources = self
            .sources
            .iter()
            .map(|s| load_source(s, base))
            .collect::<Result<Vec<_>>>()?;
        let mut it = sources.into_iter();
        match self.kind {
            InstanceKind::Qsci => Ok(Instance::Qsci(QsciInstance::new(
                self.alpha,
                self.beta,
                it.next().unwrap(),
            )?)),
            InstanceKind::Qsd => {
                let (a, b) = (it.next().unwrap(), it.next().unwrap());
                Ok(Instance::Qsd(QsdInstance::new(
                    self.alpha, self.beta, a, b,
                )?))
            }
        }
    }
}

fn read(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

pub fn load_circuit(path: &Path) -> Result<Circuit> {
    parse_circuit(&read(path)?)
}

pub fn load_graph(path: &Path) -> Result<Graph> {
    parse_graph(&read(path)?)
}

pub fn load_density(path: &Path) -> Result<DensityOperator> {
    parse_density(&read(path)?)
}

pub fn load_source(s: &SourceRef, base: &Path) -> Result<StateSource> {
    let path = base.join(&s.path);
    let text = read(&path)?;
    Ok(match s.kind {
        SourceKind::Circuit => StateSource::Circuit(parse_circuit(&text)?),
        SourceKind::Channel => StateSource::Channel(parse_channel(&text)?),
        SourceKind::State => StateSource::State(parse_density(&text)?),
        SourceKind::Graph => gna_to_qsci(&parse_graph(&text)?)?.instance.source().clone(),
    })
}

pub fn load_instance_file(path: &Path) -> Result<InstanceFile> {
    InstanceFile::parse(&read(path)?)
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    load_instance_file(path)?.resolve(&base_dir(path))
}

fn source_text(source: &StateSource) -> (SourceKind, String) {
    match source {
        StateSource::Circuit(c) => (SourceKind::Circuit, serialize_circuit(c)),
        StateSource::Channel(ch) => (SourceKind::Channel, serialize_channel(ch)),
        StateSource::State(rho) => (SourceKind::State, serialize_density(rho)),
    }
}

/// Writes `inst` to `out` with its source beside it (`<stem>.circuit`,
/// `<stem>.channel` or `<stem>.density`). Returns every path written.
pub fn write_qsci_instance(
    out: &Path,
    inst: &QsciInstance,
    provenance: &[(String, String)],
) -> Result<Vec<PathBuf>> {
    let (kind, text) = source_text(inst.source());
    let stem = out
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::InvalidInstance(format!("bad output path {}", out.display())))?;
    let aux_name = format!("{stem}.{}", kind.extension());
    let aux = base_dir(out).join(&aux_name);
    if aux == out {
        return Err(Error::InvalidInstance(format!(
            "output path {} collides with its source file",
            out.display()
        )));
    }
    let file = InstanceFile {
        kind: InstanceKind::Qsci,
        alpha: inst.alpha(),
        beta: inst.beta(),
        sources: vec![SourceRef {
            kind,
            path: PathBuf::from(aux_name),
        }],
        provenance: provenance.to_vec(),
    };
    fs::write(&aux, text)?;
    fs::write(out, file.serialize())?;
    Ok(vec![out.to_path_buf(), aux])
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimulatorRef {
    Circuit(PathBuf),
    Density(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolFileBody {
    /// Build the zero-knowledge verifier from an instance circuit.
    Qsci {
        circuit: PathBuf,
        q_p: Option<usize>,
    },
    Explicit {
        verifier: PathBuf,
        q_v: usize,
        q_m: usize,
        q_p: usize,
        q_s: usize,
        accept: AcceptRule,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolFile {
    pub body: ProtocolFileBody,
    pub simulator: Option<SimulatorRef>,
}

/// A protocol with its files loaded.
#[derive(Debug, Clone)]
pub struct LoadedProtocol {
    pub spec: ProtocolSpec,
    /// Present for specs built from an instance circuit.
    pub qsci: Option<QsciProtocol>,
    pub simulator: Option<SimulatorState>,
}

impl ProtocolFile {
    pub fn parse(text: &str) -> Result<Self> {
        let kv = key_values(text)?;
        let last = kv.last().map(|e| e.0).unwrap_or(1);
        let get = |key: &str| {
            kv.iter()
                .find(|(_, k, _)| k == key)
                .map(|(ln, _, v)| (*ln, v.as_str()))
        };
        for (ln, k, _) in &kv {
            const KNOWN: [&str; 10] = [
                "qsci_circuit",
                "verifier",
                "q_v",
                "q_m",
                "q_p",
                "q_s",
                "output",
                "accept_zero",
                "sim",
                "sim_density",
            ];
            if !KNOWN.contains(&k.as_str()) {
                return Err(Error::parse(*ln, format!("unknown key `{k}`")));
            }
        }
        let num = |key: &str| -> Result<Option<usize>> {
            get(key).map(|(ln, v)| parse_usize(v, ln)).transpose()
        };
        let need = |key: &str| -> Result<usize> {
            num(key)?.ok_or_else(|| Error::parse(last, format!("missing `{key}`")))
        };
        let simulator = match (get("sim"), get("sim_density")) {
            (Some(_), Some((ln, _))) => {
                return Err(Error::parse(ln, "give either `sim` or `sim_density`"))
            }
            (Some((_, v)), None) => Some(SimulatorRef::Circuit(PathBuf::from(v))),
            (None, Some((_, v))) => Some(SimulatorRef::Density(PathBuf::from(v))),
            (None, None) => None,
        };
        let body = match (get("qsci_circuit"), get("verifier")) {
            (Some((_, c)), None) => {
                for key in ["q_v", "q_m", "q_s", "output", "accept_zero"] {
                    if let Some((ln, _)) = get(key) {
                        return Err(Error::parse(
                            ln,
                            format!("`{key}` is derived from `qsci_circuit`"),
                        ));
                    }
                }
                ProtocolFileBody::Qsci {
                    circuit: PathBuf::from(c),
                    q_p: num("q_p")?,
                }
            }
            (None, Some((_, v))) => {
                let accept = match (get("output"), get("accept_zero")) {
                    (Some((ln, o)), None) => AcceptRule::OutputQubit(parse_usize(o, ln)?),
                    (None, Some((ln, list))) => AcceptRule::AllZero(
                        list.split_whitespace()
                            .map(|t| parse_usize(t, ln))
                            .collect::<Result<_>>()?,
                    ),
                    _ => {
                        return Err(Error::parse(
                            last,
                            "give exactly one of `output` and `accept_zero`",
                        ))
                    }
                };
                ProtocolFileBody::Explicit {
                    verifier: PathBuf::from(v),
                    q_v: need("q_v")?,
                    q_m: need("q_m")?,
                    q_p: need("q_p")?,
                    q_s: need("q_s")?,
                    accept,
                }
            }
            _ => {
                return Err(Error::parse(
                    last,
                    "give exactly one of `qsci_circuit` and `verifier`",
                ))
            }
        };
        Ok(Self { body, simulator })
    }

    pub fn resolve(&self, base: &Path) -> Result<LoadedProtocol> {
        let (spec, qsci) = match &self.body {
            ProtocolFileBody::Qsci { circuit, q_p } => {
                let c = load_circuit(&base.join(circuit))?;
                let q_p = q_p.unwrap_or(c.q_out());
                let p = build_qsci_verifier_with_workspace(&c, q_p)?;
                (p.spec().clone(), Some(p))
            }
            ProtocolFileBody::Explicit {
                verifier,
                q_v,
                q_m,
                q_p,
                q_s,
                accept,
            } => {
                let v = load_circuit(&base.join(verifier))?;
                (
                    ProtocolSpec::new(*q_v, *q_m, *q_p, *q_s, v, accept.clone())?,
                    None,
                )
            }
        };
        let simulator = match &self.simulator {
            None => None,
            Some(SimulatorRef::Circuit(p)) => Some(load_circuit(&base.join(p))?.output_state()?),
            Some(SimulatorRef::Density(p)) => Some(load_density(&base.join(p))?),
        };
        let simulator = match simulator {
            Some(rho) if rho.num_qubits() != spec.view_qubits() => {
                return Err(Error::DimensionMismatch {
                    expected: spec.view_qubits(),
                    found: rho.num_qubits(),
                })
            }
            other => other.map(SimulatorState),
        };
        Ok(LoadedProtocol {
            spec,
            qsci,
            simulator,
        })
    }
}

pub fn load_protocol(path: &Path) -> Result<LoadedProtocol> {
    ProtocolFile::parse(&read(path)?)?.resolve(&base_dir(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::c;

    #[test]
    fn graph_round_trip() {
        let g = Graph::path(4);
        let text = serialize_graph(&g);
        assert_eq!(text, "n 4\nedge 0 1\nedge 1 2\nedge 2 3\n");
        assert_eq!(parse_graph(&text).unwrap(), g);
        assert!(matches!(
            parse_graph("n 3\nedge 0 3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_graph("nodes 3\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn density_round_trip_is_exact() {
        let rho = DensityOperator::new(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.7, 0.0), c(0.1, -0.2), c(0.1, 0.2), c(0.3, 0.0)],
        ))
        .unwrap();
        let text = serialize_density(&rho);
        assert_eq!(text, "density 1\n0.7,0 0.1,-0.2\n0.1,0.2 0.3,0\n");
        assert_eq!(parse_density(&text).unwrap(), rho);
        assert!(parse_density("density 1\n1,0 0,0\n").is_err());
        assert!(parse_density("density 1\n1,0 0,0\n0,0 1,0\n").is_err());
    }

    #[test]
    fn instance_file_round_trip() {
        let text = "kind=qsci\nalpha=0\nbeta=0.25\ngraph=k3.graph\nprovenance.reduction=gna\n";
        let f = InstanceFile::parse(text).unwrap();
        assert_eq!(f.sources[0].kind, SourceKind::Graph);
        assert_eq!(
            f.provenance,
            vec![("reduction".to_string(), "gna".to_string())]
        );
        assert_eq!(f.serialize(), text);

        let qsd = "kind=qsd\nalpha=0.1\nbeta=0.9\ncircuit0=a.circuit\nstate1=b.density\n";
        assert_eq!(InstanceFile::parse(qsd).unwrap().serialize(), qsd);
    }

    #[test]
    fn instance_file_errors() {
        assert!(matches!(
            InstanceFile::parse("alpha=0\nbeta=1\nfoo=1\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(InstanceFile::parse("alpha=0\nbeta=1\n").is_err());
        assert!(InstanceFile::parse("alpha=0\nbeta=1\ncircuit=a\nstate=b\n").is_err());
        assert!(InstanceFile::parse("kind=qsd\nalpha=0\nbeta=1\ncircuit0=a\n").is_err());
        assert!(matches!(
            InstanceFile::parse("alpha=0\nalpha=1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn protocol_file_forms() {
        let q = ProtocolFile::parse("qsci_circuit=epr.circuit\nsim=sim.circuit\n").unwrap();
        assert_eq!(
            q.body,
            ProtocolFileBody::Qsci {
                circuit: PathBuf::from("epr.circuit"),
                q_p: None
            }
        );
        let e = ProtocolFile::parse(
            "verifier=v.circuit\nq_v=2\nq_m=0\nq_p=1\nq_s=1\naccept_zero=0 1\n",
        )
        .unwrap();
        assert!(matches!(
            e.body,
            ProtocolFileBody::Explicit {
                accept: AcceptRule::AllZero(_),
                ..
            }
        ));
        assert!(ProtocolFile::parse("qsci_circuit=a\nq_v=2\n").is_err());
        assert!(ProtocolFile::parse("verifier=v\nq_v=1\nq_m=0\nq_p=1\nq_s=1\n").is_err());
        assert!(ProtocolFile::parse("sim=a\n").is_err());
    }

    #[test]
    fn write_and_load_instance() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("epr.inst");
        let circuit = parse_circuit("qubits 2\nout 1\nH 0\nCNOT 0 1\n").unwrap();
        let inst = QsciInstance::new(0.0, 0.5, StateSource::Circuit(circuit)).unwrap();
        let written =
            write_qsci_instance(&out, &inst, &[("source".into(), "test".into())]).unwrap();
        assert_eq!(written.len(), 2);
        match load_instance(&out).unwrap() {
            Instance::Qsci(loaded) => assert_eq!(loaded, inst),
            Instance::Qsd(_) => panic!("wrong kind"),
        }
    }
}
