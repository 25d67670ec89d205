//! The `limavg/1` JSON documents for automata, samples and chains.
//!
//! Transitions and chain edges are rows `[from, letter, to, "p/q"]`. Rationals are
//! strings (integers may also be JSON numbers) and are always written in lowest terms. Words are strings in the alphabet's own notation:
//! concatenated when every letter name is one character, space-separated otherwise.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{DistanceReport, RigidReport};
use crate::gadgets::ExperimentReport;

use crate::automaton::{Alphabet, Automaton, RawAutomaton};
use crate::error::{Error, Result};
use crate::measures::{LabeledExample, MarkovChain, Sample, SampleKind};
use crate::rational::{parse_rational, Rational};

pub const FORMAT: &str = "limavg/1";

fn rational_text(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) if n.is_i64() || n.is_u64() => Ok(n.to_string()),
        other => Err(Error::Parse(format!("expected a rational string, found {other}"))),
    }
}

fn header(doc: &Value, kind: &str) -> Result<()> {
    if !doc.is_object() {
        return Err(Error::Parse(format!("a {kind} document must be a JSON object")));
    }
    // Both header fields are optional on input, but must agree when present.
    match doc.get("format") {
        None => {}
        Some(Value::String(f)) if f == FORMAT => {}
        Some(other) => return Err(Error::Parse(format!("unsupported format {other}"))),
    }
    match doc.get("type") {
        None => Ok(()),
        Some(Value::String(t)) if t == kind => Ok(()),
        Some(other) => Err(Error::Parse(format!("expected a {kind} document, found type {other}"))),
    }
}

fn parse(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Serialize, Deserialize)]
struct AutomatonDoc {
    #[serde(default)]
    format: Option<String>,
    #[serde(rename = "type", default)]
    kind: Option<String>,
    alphabet: Vec<String>,
    states: usize,
    initial: usize,
    /// Rows `[from, letter, to, weight]`.
    transitions: Vec<(usize, String, usize, Value)>,
}

pub fn automaton_to_json(a: &Automaton) -> Value {
    let raw = a.to_raw();
    let doc = AutomatonDoc {
        format: Some(FORMAT.into()),
        kind: Some("automaton".into()),
        alphabet: raw.alphabet,
        states: raw.states,
        initial: raw.initial,
        transitions: raw
            .transitions
            .into_iter()
            .map(|(from, letter, to, w)| (from, letter, to, Value::String(w)))
            .collect(),
    };
    serde_json::to_value(doc).expect("serializable")
}

/// Parses and validates an automaton document; every structural defect is reported.
pub fn automaton_from_json(text: &str) -> Result<Automaton> {
    let v = parse(text)?;
    header(&v, "automaton")?;
    let doc: AutomatonDoc = serde_json::from_value(v).map_err(|e| Error::Parse(e.to_string()))?;
    let transitions = doc
        .transitions
        .into_iter()
        .map(|(from, letter, to, w)| Ok((from, letter, to, rational_text(&w)?)))
        .collect::<Result<_>>()?;
    Automaton::from_raw(&RawAutomaton {
        alphabet: doc.alphabet,
        states: doc.states,
        initial: doc.initial,
        transitions,
    })
}

#[derive(Serialize, Deserialize)]
struct ExampleDoc {
    u: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    v: Option<String>,
    value: Value,
}

#[derive(Serialize, Deserialize)]
struct SampleDoc {
    #[serde(default)]
    format: Option<String>,
    #[serde(rename = "type", default)]
    doc_type: Option<String>,
    /// `"U"`, `"E"` or `"En"`.
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    n: Option<usize>,
    /// Optional; when absent the alphabet is the sorted set of characters in the words.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    alphabet: Option<Vec<String>>,
    examples: Vec<ExampleDoc>,
}

pub fn sample_to_json(s: &Sample) -> Value {
    let al = &s.alphabet;
    let (kind, n) = match s.kind {
        SampleKind::U => ("U", None),
        SampleKind::E => ("E", None),
        SampleKind::En(n) => ("En", Some(n)),
    };
    let doc = SampleDoc {
        format: Some(FORMAT.into()),
        doc_type: Some("sample".into()),
        kind: kind.into(),
        n,
        alphabet: Some(al.letters().to_vec()),
        examples: s
            .examples
            .iter()
            .map(|e| ExampleDoc {
                u: al.format_word(&e.u),
                v: e.v.as_ref().map(|v| al.format_word(v)),
                value: Value::String(e.value.to_string()),
            })
            .collect(),
    };
    serde_json::to_value(doc).expect("serializable")
}

pub fn sample_from_json(text: &str) -> Result<Sample> {
    let v = parse(text)?;
    header(&v, "sample")?;
    let doc: SampleDoc = serde_json::from_value(v).map_err(|e| Error::Parse(e.to_string()))?;
    let kind = match (doc.kind.as_str(), doc.n) {
        ("U", None) => SampleKind::U,
        ("E", None) => SampleKind::E,
        ("En", Some(n)) => SampleKind::En(n),
        ("En", None) => return Err(Error::Parse("kind \"En\" needs a field \"n\"".into())),
        (k, Some(_)) if k == "U" || k == "E" => {
            return Err(Error::Parse(format!("field \"n\" is only allowed with kind \"En\", not {k:?}")))
        }
        (k, _) => return Err(Error::Parse(format!("unknown sample kind {k:?}"))),
    };
    let letters = match doc.alphabet {
        Some(l) => l,
        None => {
            let chars: std::collections::BTreeSet<char> = doc
                .examples
                .iter()
                .flat_map(|e| e.u.chars().chain(e.v.iter().flat_map(|v| v.chars())))
                .filter(|c| !c.is_whitespace())
                .collect();
            if chars.is_empty() {
                return Err(Error::Parse("cannot infer an alphabet from an empty sample".into()));
            }
            chars.into_iter().map(String::from).collect()
        }
    };
    let al = Alphabet::new(&letters)?;
    let examples = doc
        .examples
        .iter()
        .map(|e| {
            let u = al.parse_word(&e.u)?;
            let value = parse_rational(&rational_text(&e.value)?)?;
            Ok(match &e.v {
                Some(v) => LabeledExample::lasso(u, al.parse_word(v)?, value),
                None => LabeledExample::expectation(u, value),
            })
        })
        .collect::<Result<_>>()?;
    Sample::new(al, kind, examples)
}

#[derive(Serialize, Deserialize)]
struct ChainDoc {
    #[serde(default)]
    format: Option<String>,
    #[serde(rename = "type", default)]
    kind: Option<String>,
    alphabet: Vec<String>,
    states: usize,
    initial: usize,
    /// Rows `[from, letter, to, probability]`.
    edges: Vec<(usize, String, usize, Value)>,
}

pub fn chain_to_json(m: &MarkovChain) -> Value {
    let al = m.alphabet();
    let doc = ChainDoc {
        format: Some(FORMAT.into()),
        kind: Some("chain".into()),
        alphabet: al.letters().to_vec(),
        states: m.state_count(),
        initial: m.initial(),
        edges: (0..m.state_count())
            .flat_map(|s| {
                m.edges(s)
                    .iter()
                    .map(move |(a, t, p)| (s, al.name(*a).to_string(), *t, Value::String(p.to_string())))
            })
            .collect(),
    };
    serde_json::to_value(doc).expect("serializable")
}

pub fn chain_from_json(text: &str) -> Result<MarkovChain> {
    let v = parse(text)?;
    header(&v, "chain")?;
    let doc: ChainDoc = serde_json::from_value(v).map_err(|e| Error::Parse(e.to_string()))?;
    let al = Alphabet::new(&doc.alphabet)?;
    let mut edges: Vec<Vec<(usize, usize, Rational)>> = vec![Vec::new(); doc.states];
    for (from, letter, to, p) in &doc.edges {
        if *from >= doc.states {
            return Err(Error::Input(format!("chain edge from unknown state {from}")));
        }
        edges[*from].push((al.letter(letter)?, *to, parse_rational(&rational_text(p)?)?));
    }
    MarkovChain::new(al, doc.initial, edges)
}

fn q(x: &Rational) -> Value {
    Value::String(x.to_string())
}

pub fn distance_report_to_json(r: &DistanceReport) -> Value {
    json!({
        "format": FORMAT,
        "type": "distance",
        "pairs": r.pairs.iter().map(|p| json!({
            "a_component": p.a_component,
            "b_component": p.b_component,
            "probability": q(&p.probability),
            "a_value": q(&p.x),
            "b_value": q(&p.y),
        })).collect::<Vec<_>>(),
        "total": q(&r.total),
    })
}

pub fn rigid_report_to_json(r: &RigidReport, alphabet: &Alphabet) -> Value {
    json!({
        "format": FORMAT,
        "type": "rigid",
        "pairs": r.pairs.iter().map(|p| json!({
            "a_state": p.a_state,
            "b_state": p.b_state,
            "witness": alphabet.format_word(&p.witness),
            "distance": q(&p.distance),
        })).collect::<Vec<_>>(),
        "max_distance": q(&r.max_distance),
        "within": r.within,
    })
}

pub fn experiment_report_to_json(r: &ExperimentReport) -> Value {
    json!({
        "format": FORMAT,
        "type": "experiment",
        "n": r.n,
        "trials": r.trials,
        "distinguishing": r.distinguishing,
        "frequency": q(&r.frequency()),
        "mean_total_length": q(&r.mean_total_length),
        "bound": q(&r.bound),
    })
}

/// Pretty-printed document followed by a newline.
pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}
