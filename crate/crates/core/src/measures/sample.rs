use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rand::Rng;

use crate::analysis::Analysis;
use crate::automaton::{Alphabet, Automaton, Word};
use crate::error::{Error, Result};
use crate::lasso::Lasso;
use crate::measures::Distribution;
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleKind {
    /// Ultimately periodic words with their values.
    U,
    /// Finite prefixes with conditional expected values.
    E,
    /// Like `E`, with every word of length exactly `n`.
    En(usize),
}

impl SampleKind {
    pub fn is_expectation(self) -> bool {
        !matches!(self, SampleKind::U)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledExample {
    pub u: Word,
    /// Present exactly for U-examples, and then non-empty.
    pub v: Option<Word>,
    pub value: Rational,
}

impl LabeledExample {
    pub fn expectation(u: Word, value: Rational) -> Self {
        LabeledExample { u, v: None, value }
    }

    pub fn lasso(u: Word, v: Word, value: Rational) -> Self {
        LabeledExample { u, v: Some(v), value }
    }

    pub fn len(&self) -> usize {
        self.u.len() + self.v.as_ref().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_lasso(&self) -> Option<Lasso> {
        self.v.as_ref().and_then(|v| Lasso::new(self.u.clone(), v.clone()).ok())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    pub alphabet: Alphabet,
    pub kind: SampleKind,
    pub examples: Vec<LabeledExample>,
}

impl Sample {
    pub fn new(alphabet: Alphabet, kind: SampleKind, examples: Vec<LabeledExample>) -> Result<Self> {
        for (i, ex) in examples.iter().enumerate() {
            alphabet.check_word(&ex.u)?;
            match (&ex.v, kind) {
                (Some(v), SampleKind::U) => {
                    if v.is_empty() {
                        return Err(Error::input(format!("example {i}: empty period")));
                    }
                    alphabet.check_word(v)?;
                }
                (None, SampleKind::E) => {}
                (None, SampleKind::En(n)) if ex.u.len() == n => {}
                (None, SampleKind::En(n)) => {
                    return Err(Error::input(format!("example {i}: word length is not {n}")));
                }
                _ => return Err(Error::input(format!("example {i} does not match the sample kind"))),
            }
        }
        Ok(Sample { alphabet, kind, examples })
    }

    /// `‖S‖`: the summed lengths of all example words.
    pub fn total_length(&self) -> usize {
        self.examples.iter().map(LabeledExample::len).sum()
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Two or more examples that cannot all hold at once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conflict {
    /// Indices of the examples involved.
    pub examples: Vec<usize>,
    pub message: String,
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (examples {:?})", self.message, self.examples)
    }
}

/// Lists the conflicts of a sample; empty iff the sample is consistent.
pub fn check_sample_consistency(s: &Sample) -> Vec<Conflict> {
    match s.kind {
        SampleKind::U => lasso_conflicts(s),
        SampleKind::E | SampleKind::En(_) => {
            let known: Vec<(Word, Rational)> =
                s.examples.iter().map(|e| (e.u.clone(), e.value.clone())).collect();
            match propagate(&known, s.alphabet.len()) {
                Ok(_) => Vec::new(),
                Err(c) => c,
            }
        }
    }
}

fn lasso_conflicts(s: &Sample) -> Vec<Conflict> {
    let mut by_word: BTreeMap<Lasso, Vec<usize>> = BTreeMap::new();
    for (i, e) in s.examples.iter().enumerate() {
        if let Some(l) = e.as_lasso() {
            by_word.entry(l.canonical()).or_default().push(i);
        }
    }
    let mut out = Vec::new();
    for (w, idx) in by_word {
        let v0 = &s.examples[idx[0]].value;
        if idx.iter().any(|&i| s.examples[i].value != *v0) {
            out.push(Conflict {
                message: format!(
                    "the same infinite word {}({})^w carries different values",
                    s.alphabet.format_word(w.prefix()),
                    s.alphabet.format_word(w.period())
                ),
                examples: idx,
            });
        }
    }
    out
}

/// Closes the labelled prefixes under the averaging law
/// `value(w) = mean_a value(w a)`, in both directions. Returns every derivable value
/// or the conflicts found.
pub(crate) fn propagate(
    known: &[(Word, Rational)],
    letters: usize,
) -> Result<BTreeMap<Word, Rational>, Vec<Conflict>> {
    let mut values: BTreeMap<Word, Rational> = BTreeMap::new();
    // which original examples a derived value depends on
    let mut sources: HashMap<Word, BTreeSet<usize>> = HashMap::new();
    let mut conflicts = Vec::new();
    for (i, (w, x)) in known.iter().enumerate() {
        match values.get(w) {
            Some(y) if y != x => conflicts.push(Conflict {
                examples: sources[w].iter().copied().chain([i]).collect(),
                message: format!("prefix #{i} is labelled twice with different values"),
            }),
            _ => {
                values.insert(w.clone(), x.clone());
                sources.entry(w.clone()).or_default().insert(i);
            }
        }
    }
    if !conflicts.is_empty() {
        return Err(conflicts);
    }
    let mut parents: BTreeSet<Word> = BTreeSet::new();
    for (w, _) in known {
        for l in 0..w.len() {
            parents.insert(w[..l].to_vec());
        }
    }
    let k = Rational::from_integer((letters as i64).into());
    loop {
        let mut changed = false;
        for p in &parents {
            let children: Vec<Word> = (0..letters)
                .map(|a| {
                    let mut c = p.clone();
                    c.push(a);
                    c
                })
                .collect();
            let missing: Vec<&Word> = children.iter().filter(|c| !values.contains_key(*c)).collect();
            let deps = |values_src: &HashMap<Word, BTreeSet<usize>>, ws: &[&Word]| {
                ws.iter()
                    .flat_map(|w| values_src.get(*w).into_iter().flatten().copied())
                    .collect::<BTreeSet<usize>>()
            };
            if missing.is_empty() {
                let sum: Rational = children.iter().map(|c| &values[c]).sum();
                let avg = &sum / &k;
                let child_refs: Vec<&Word> = children.iter().collect();
                match values.get(p) {
                    Some(x) if *x != avg => {
                        let mut ex = deps(&sources, &child_refs);
                        ex.extend(deps(&sources, &[p]));
                        conflicts.push(Conflict {
                            examples: ex.into_iter().collect(),
                            message: format!(
                                "a prefix has value {x} but its one-letter extensions average {avg}"
                            ),
                        });
                    }
                    Some(_) => {}
                    None => {
                        let ex = deps(&sources, &child_refs);
                        values.insert(p.clone(), avg);
                        sources.insert(p.clone(), ex);
                        changed = true;
                    }
                }
            } else if missing.len() == 1 {
                if let Some(x) = values.get(p).cloned() {
                    let others: Vec<&Word> =
                        children.iter().filter(|c| values.contains_key(*c)).collect();
                    let sum: Rational = others.iter().map(|c| &values[*c]).sum();
                    let mut ex = deps(&sources, &others);
                    ex.extend(deps(&sources, &[p]));
                    let child = missing[0].clone();
                    values.insert(child.clone(), x * &k - sum);
                    sources.insert(child, ex);
                    changed = true;
                }
            }
        }
        if !conflicts.is_empty() {
            return Err(conflicts);
        }
        if !changed {
            return Ok(values);
        }
    }
}

/// Removes duplicate words and examples whose value follows from the others.
/// The sample must be consistent.
pub fn reduce_to_minimal(s: &Sample) -> Sample {
    let mut kept: Vec<LabeledExample> = Vec::new();
    match s.kind {
        SampleKind::U => {
            let mut seen = BTreeSet::new();
            for e in &s.examples {
                if seen.insert(e.as_lasso().map(|l| l.canonical())) {
                    kept.push(e.clone());
                }
            }
        }
        _ => {
            let mut seen = BTreeSet::new();
            for e in &s.examples {
                if seen.insert(e.u.clone()) {
                    kept.push(e.clone());
                }
            }
            let mut i = 0;
            while i < kept.len() {
                let rest: Vec<(Word, Rational)> = kept
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, e)| (e.u.clone(), e.value.clone()))
                    .collect();
                let derivable = matches!(
                    propagate(&rest, s.alphabet.len()),
                    Ok(vals) if vals.contains_key(&kept[i].u)
                );
                if derivable {
                    kept.remove(i);
                } else {
                    i += 1;
                }
            }
        }
    }
    Sample { alphabet: s.alphabet.clone(), kind: s.kind, examples: kept }
}

/// Parameters of a random sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SampleSpec {
    /// `u` from `U_λ1`, `v` from `U_λ2` conditioned on being non-empty.
    U { lambda1: Rational, lambda2: Rational },
    E { lambda: Rational },
    En { n: usize },
}

/// Draws `count` examples labelled by `hidden` and reduces them to a minimal sample.
pub fn draw_sample<R: Rng + ?Sized>(
    spec: &SampleSpec,
    hidden: &Automaton,
    count: usize,
    rng: &mut R,
) -> Result<Sample> {
    let k = hidden.letters();
    let mut examples = Vec::with_capacity(count);
    let kind = match spec {
        SampleSpec::U { lambda1, lambda2 } => {
            let du = Distribution::uniform_term(k, lambda1.clone())?;
            let dv = Distribution::uniform_term(k, lambda2.clone())?;
            for _ in 0..count {
                let u = du.draw_word(rng)?;
                let v = loop {
                    let v = dv.draw_word(rng)?;
                    if !v.is_empty() {
                        break v;
                    }
                };
                let value = hidden.eval_lasso(&Lasso::new(u.clone(), v.clone())?)?;
                examples.push(LabeledExample::lasso(u, v, value));
            }
            SampleKind::U
        }
        SampleSpec::E { lambda } => {
            let d = Distribution::uniform_term(k, lambda.clone())?;
            let an = Analysis::uniform(hidden);
            for _ in 0..count {
                let u = d.draw_word(rng)?;
                let value = an.conditional_expectation(&u)?;
                examples.push(LabeledExample::expectation(u, value));
            }
            SampleKind::E
        }
        SampleSpec::En { n } => {
            let d = Distribution::UniformN { letters: k, n: *n };
            let an = Analysis::uniform(hidden);
            for _ in 0..count {
                let u = d.draw_word(rng)?;
                let value = an.conditional_expectation(&u)?;
                examples.push(LabeledExample::expectation(u, value));
            }
            SampleKind::En(*n)
        }
    };
    let s = Sample::new(hidden.alphabet().clone(), kind, examples)?;
    if let Some(c) = check_sample_consistency(&s).first() {
        return Err(Error::internal(format!("sample drawn from an automaton is inconsistent: {c}")));
    }
    Ok(reduce_to_minimal(&s))
}
