//! Deterministic complete LimAvg automata over interned alphabets.

use std::collections::HashMap;
use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::lasso::Lasso;
use crate::rational::{parse_rational, Rational};

/// A finite word as a sequence of letter indices.
pub type Word = Vec<usize>;

/// Ordered set of letter names. The index of a letter is its position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    letters: Vec<String>,
    index: HashMap<String, usize>,
}

impl Alphabet {
    pub fn new<S: AsRef<str>>(letters: impl IntoIterator<Item = S>) -> Result<Self> {
        let letters: Vec<String> = letters.into_iter().map(|s| s.as_ref().to_string()).collect();
        if letters.is_empty() {
            return Err(Error::input("alphabet is empty"));
        }
        let mut index = HashMap::with_capacity(letters.len());
        for (i, l) in letters.iter().enumerate() {
            if l.is_empty() || l.chars().any(char::is_whitespace) {
                return Err(Error::input(format!("invalid letter name `{l}`")));
            }
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::input(format!("duplicate letter `{l}`")));
            }
        }
        Ok(Alphabet { letters, index })
    }

    /// `{a, b, c, ...}` with `n` single-character letters.
    pub fn abc(n: usize) -> Self {
        assert!((1..=26).contains(&n));
        Alphabet::new((0..n).map(|i| ((b'a' + i as u8) as char).to_string())).unwrap()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[String] {
        &self.letters
    }

    pub fn name(&self, letter: usize) -> &str {
        &self.letters[letter]
    }

    pub fn letter(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownLetter(name.to_string()))
    }

    fn single_chars(&self) -> bool {
        self.letters.iter().all(|l| l.chars().count() == 1)
    }

    /// Parses a word. Whitespace-separated names are always accepted; without
    /// whitespace the text is tokenized greedily by longest matching letter name.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let text = text.trim();
        if text.chars().any(char::is_whitespace) {
            return text.split_whitespace().map(|t| self.letter(t)).collect();
        }
        let mut word = Vec::new();
        let mut rest = text;
        while !rest.is_empty() {
            let best = self
                .letters
                .iter()
                .enumerate()
                .filter(|(_, l)| rest.starts_with(l.as_str()))
                .max_by_key(|(_, l)| l.len());
            match best {
                Some((i, l)) => {
                    word.push(i);
                    rest = &rest[l.len()..];
                }
                None => {
                    let bad: String = rest.chars().take(1).collect();
                    return Err(Error::UnknownLetter(bad));
                }
            }
        }
        Ok(word)
    }

    /// Inverse of `parse_word`: letters are concatenated when all names are one
    /// character long and separated by spaces otherwise.
    pub fn format_word(&self, word: &[usize]) -> String {
        let sep = if self.single_chars() { "" } else { " " };
        word.iter()
            .map(|&a| self.letters[a].as_str())
            .collect::<Vec<_>>()
            .join(sep)
    }

    pub fn check_word(&self, word: &[usize]) -> Result<()> {
        match word.iter().find(|&&a| a >= self.len()) {
            Some(a) => Err(Error::UnknownLetter(format!("#{a}"))),
            None => Ok(()),
        }
    }
}

/// A deterministic complete LimAvg automaton. States are `0..state_count`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automaton {
    alphabet: Alphabet,
    states: usize,
    initial: usize,
    delta: Vec<usize>,
    weights: Vec<Rational>,
}

/// Raw automaton as read from a file, before completeness is established.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawAutomaton {
    pub alphabet: Vec<String>,
    pub states: usize,
    pub initial: usize,
    /// Rows `(from, letter, to, weight)`.
    pub transitions: Vec<(usize, String, usize, String)>,
}

/// One reason a raw automaton is not a valid deterministic complete automaton.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Defect {
    EmptyAlphabet,
    DuplicateLetter(String),
    NoStates,
    InitialOutOfRange(usize),
    UnknownLetter { from: usize, letter: String },
    SourceOutOfRange { from: usize, letter: String },
    DanglingTarget { from: usize, letter: String, to: usize },
    DuplicateTransition { from: usize, letter: String },
    MissingTransition { from: usize, letter: String },
    ZeroDenominator { from: usize, letter: String },
    BadWeight { from: usize, letter: String, weight: String },
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Defect::EmptyAlphabet => write!(f, "empty alphabet"),
            Defect::DuplicateLetter(l) => write!(f, "duplicate letter `{l}`"),
            Defect::NoStates => write!(f, "automaton has no states"),
            Defect::InitialOutOfRange(q) => write!(f, "initial state {q} out of range"),
            Defect::UnknownLetter { from, letter } => {
                write!(f, "unknown letter `{letter}` on a transition from {from}")
            }
            Defect::SourceOutOfRange { from, letter } => {
                write!(f, "transition source {from} (letter `{letter}`) out of range")
            }
            Defect::DanglingTarget { from, letter, to } => {
                write!(f, "dangling target: delta({from}, {letter}) = {to} out of range")
            }
            Defect::DuplicateTransition { from, letter } => {
                write!(f, "nondeterministic: several transitions for ({from}, {letter})")
            }
            Defect::MissingTransition { from, letter } => {
                write!(f, "incomplete transition function: missing delta({from}, {letter})")
            }
            Defect::ZeroDenominator { from, letter } => {
                write!(f, "zero denominator in weight of ({from}, {letter})")
            }
            Defect::BadWeight { from, letter, weight } => {
                write!(f, "malformed weight `{weight}` on ({from}, {letter})")
            }
        }
    }
}

/// Lists every defect of a raw automaton; empty iff it describes a valid automaton.
pub fn validate(raw: &RawAutomaton) -> Vec<Defect> {
    let mut defects = Vec::new();
    if raw.alphabet.is_empty() {
        defects.push(Defect::EmptyAlphabet);
    }
    let mut letter_index = HashMap::new();
    for (i, l) in raw.alphabet.iter().enumerate() {
        if letter_index.insert(l.as_str(), i).is_some() {
            defects.push(Defect::DuplicateLetter(l.clone()));
        }
    }
    if raw.states == 0 {
        defects.push(Defect::NoStates);
    } else if raw.initial >= raw.states {
        defects.push(Defect::InitialOutOfRange(raw.initial));
    }
    let k = raw.alphabet.len();
    let mut seen = vec![false; raw.states * k];
    for (from, letter, to, weight) in &raw.transitions {
        let (from, to) = (*from, *to);
        let Some(&a) = letter_index.get(letter.as_str()) else {
            defects.push(Defect::UnknownLetter { from, letter: letter.clone() });
            continue;
        };
        if from >= raw.states {
            defects.push(Defect::SourceOutOfRange { from, letter: letter.clone() });
            continue;
        }
        if to >= raw.states {
            defects.push(Defect::DanglingTarget { from, letter: letter.clone(), to });
        }
        if std::mem::replace(&mut seen[from * k + a], true) {
            defects.push(Defect::DuplicateTransition { from, letter: letter.clone() });
        }
        if let Err(e) = parse_rational(weight) {
            let letter = letter.clone();
            defects.push(if e.to_string().contains("zero denominator") {
                Defect::ZeroDenominator { from, letter }
            } else {
                Defect::BadWeight { from, letter, weight: weight.clone() }
            });
        }
    }
    for q in 0..raw.states {
        for (a, l) in raw.alphabet.iter().enumerate() {
            if !seen[q * k + a] {
                defects.push(Defect::MissingTransition { from: q, letter: l.clone() });
            }
        }
    }
    defects
}

impl Automaton {
    /// Builds an automaton from dense tables indexed by `state * |alphabet| + letter`.
    pub fn from_tables(
        alphabet: Alphabet,
        initial: usize,
        delta: Vec<usize>,
        weights: Vec<Rational>,
    ) -> Result<Self> {
        let k = alphabet.len();
        if delta.is_empty() || delta.len() % k != 0 || weights.len() != delta.len() {
            return Err(Error::input("transition tables do not cover states x letters"));
        }
        let states = delta.len() / k;
        if initial >= states {
            return Err(Error::input(format!("initial state {initial} out of range")));
        }
        if let Some(t) = delta.iter().find(|&&t| t >= states) {
            return Err(Error::input(format!("dangling target {t}")));
        }
        Ok(Automaton { alphabet, states, initial, delta, weights })
    }

    /// Single-state automaton whose every transition has weight `w`.
    pub fn constant(alphabet: Alphabet, w: Rational) -> Self {
        let k = alphabet.len();
        Automaton { alphabet, states: 1, initial: 0, delta: vec![0; k], weights: vec![w; k] }
    }

    pub fn from_raw(raw: &RawAutomaton) -> Result<Self> {
        let defects = validate(raw);
        if !defects.is_empty() {
            let list: Vec<String> = defects.iter().map(|d| d.to_string()).collect();
            return Err(Error::Input(list.join("; ")));
        }
        let alphabet = Alphabet::new(&raw.alphabet)?;
        let k = alphabet.len();
        let mut delta = vec![0; raw.states * k];
        let mut weights = vec![Rational::zero(); raw.states * k];
        for (from, letter, to, weight) in &raw.transitions {
            let a = alphabet.letter(letter)?;
            delta[from * k + a] = *to;
            weights[from * k + a] = parse_rational(weight)?;
        }
        Automaton::from_tables(alphabet, raw.initial, delta, weights)
    }

    /// Canonical raw form: rows sorted by (from, letter index).
    pub fn to_raw(&self) -> RawAutomaton {
        let mut transitions = Vec::with_capacity(self.delta.len());
        for q in 0..self.states {
            for a in 0..self.alphabet.len() {
                transitions.push((
                    q,
                    self.alphabet.name(a).to_string(),
                    self.next(q, a),
                    self.weight(q, a).to_string(),
                ));
            }
        }
        RawAutomaton {
            alphabet: self.alphabet.letters().to_vec(),
            states: self.states,
            initial: self.initial,
            transitions,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn state_count(&self) -> usize {
        self.states
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn letters(&self) -> usize {
        self.alphabet.len()
    }

    #[inline]
    pub fn next(&self, q: usize, a: usize) -> usize {
        self.delta[q * self.alphabet.len() + a]
    }

    #[inline]
    pub fn weight(&self, q: usize, a: usize) -> &Rational {
        &self.weights[q * self.alphabet.len() + a]
    }

    pub fn delta_table(&self) -> &[usize] {
        &self.delta
    }

    pub fn weight_table(&self) -> &[Rational] {
        &self.weights
    }

    /// Same structure and weights, different initial state.
    pub fn rooted_at(&self, q: usize) -> Automaton {
        assert!(q < self.states);
        Automaton { initial: q, ..self.clone() }
    }

    pub fn run_from(&self, q: usize, word: &[usize]) -> usize {
        word.iter().fold(q, |q, &a| self.next(q, a))
    }

    pub fn run(&self, word: &[usize]) -> usize {
        self.run_from(self.initial, word)
    }

    /// Encoding size: states plus the bit lengths of all weight numerators and denominators.
    pub fn encoding_size(&self) -> u64 {
        self.states as u64
            + self
                .weights
                .iter()
                .map(|w| w.numer().bits() + w.denom().bits())
                .sum::<u64>()
    }

    /// States reachable from the initial state, in BFS order with letters by index.
    pub fn reachable(&self) -> Vec<usize> {
        let mut seen = vec![false; self.states];
        let mut order = vec![self.initial];
        seen[self.initial] = true;
        let mut i = 0;
        while i < order.len() {
            let q = order[i];
            i += 1;
            for a in 0..self.letters() {
                let t = self.next(q, a);
                if !seen[t] {
                    seen[t] = true;
                    order.push(t);
                }
            }
        }
        order
    }

    /// The LimAvg value of `u v^ω`: the mean weight of the transition cycle the run settles in.
    pub fn eval_lasso(&self, w: &Lasso) -> Result<Rational> {
        self.alphabet.check_word(w.prefix())?;
        self.alphabet.check_word(w.period())?;
        let v = w.period();
        let mut q = self.run(w.prefix());
        // first[state * |v| + offset] = step at which the pair was first seen
        let mut first = vec![usize::MAX; self.states * v.len()];
        let mut trace: Vec<(usize, usize)> = Vec::new();
        let mut step = 0;
        loop {
            let pos = step % v.len();
            let key = q * v.len() + pos;
            if first[key] != usize::MAX {
                let start = first[key];
                let cycle = &trace[start..];
                let sum: Rational = cycle.iter().map(|&(q, a)| self.weight(q, a)).sum();
                return Ok(sum / Rational::from_integer(cycle.len().into()));
            }
            first[key] = step;
            trace.push((q, v[pos]));
            q = self.next(q, v[pos]);
            step += 1;
        }
    }
}

/// Incremental construction helper for hand-built automata.
#[derive(Clone, Debug)]
pub struct Builder {
    alphabet: Alphabet,
    delta: Vec<Option<usize>>,
    weights: Vec<Rational>,
}

impl Builder {
    pub fn new(alphabet: Alphabet, states: usize) -> Self {
        let k = alphabet.len();
        Builder {
            alphabet,
            delta: vec![None; states * k],
            weights: vec![Rational::zero(); states * k],
        }
    }

    pub fn add_state(&mut self) -> usize {
        let k = self.alphabet.len();
        let q = self.delta.len() / k;
        self.delta.extend(std::iter::repeat(None).take(k));
        self.weights.extend(std::iter::repeat(Rational::zero()).take(k));
        q
    }

    pub fn set(&mut self, from: usize, letter: usize, to: usize, w: Rational) -> &mut Self {
        let i = from * self.alphabet.len() + letter;
        self.delta[i] = Some(to);
        self.weights[i] = w;
        self
    }

    /// Sets every still-undefined transition of `from` to `to` with weight `w`.
    pub fn fill(&mut self, from: usize, to: usize, w: Rational) -> &mut Self {
        for a in 0..self.alphabet.len() {
            if self.delta[from * self.alphabet.len() + a].is_none() {
                self.set(from, a, to, w.clone());
            }
        }
        self
    }

    /// Every still-undefined transition of `q` becomes a self-loop of weight `w`.
    pub fn sink(&mut self, q: usize, w: Rational) -> &mut Self {
        self.fill(q, q, w)
    }

    pub fn is_defined(&self, from: usize, letter: usize) -> bool {
        self.delta[from * self.alphabet.len() + letter].is_some()
    }

    pub fn build(self, initial: usize) -> Result<Automaton> {
        let k = self.alphabet.len();
        let mut delta = Vec::with_capacity(self.delta.len());
        for (i, t) in self.delta.iter().enumerate() {
            match t {
                Some(t) => delta.push(*t),
                None => {
                    return Err(Error::input(format!(
                        "incomplete transition function: missing delta({}, {})",
                        i / k,
                        self.alphabet.name(i % k)
                    )))
                }
            }
        }
        Automaton::from_tables(self.alphabet, initial, delta, self.weights)
    }
}
