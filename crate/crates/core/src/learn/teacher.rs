use std::sync::Mutex;

use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{distance, separating_word, Analysis};
use crate::automaton::{Automaton, Word};
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Counts of answered queries. Never decreases.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct QueryLog {
    pub expectation_queries: u64,
    pub consistency_queries: u64,
    /// Summed length of every word sent with an expectation query.
    pub queried_length: u64,
}

/// Answer to a consistency query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Consistency {
    Yes,
    Counterexample(Word),
}

/// Answers queries about a hidden automaton under the uniform measure, exactly.
/// Queries may run concurrently; the log is updated under a lock.
#[derive(Debug)]
pub struct Teacher {
    analysis: Analysis,
    log: Mutex<QueryLog>,
    trace: Option<Mutex<Vec<Value>>>,
}

impl Teacher {
    pub fn new(hidden: &Automaton) -> Self {
        Teacher { analysis: Analysis::uniform(hidden), log: Mutex::default(), trace: None }
    }

    /// Also records every query, and every table passed to [`Teacher::snapshot`].
    pub fn traced(hidden: &Automaton) -> Self {
        Teacher { trace: Some(Mutex::default()), ..Teacher::new(hidden) }
    }

    pub fn hidden(&self) -> &Automaton {
        self.analysis.automaton()
    }

    pub fn log(&self) -> QueryLog {
        *self.log.lock().unwrap()
    }

    pub(crate) fn record(&self, event: impl FnOnce() -> Value) {
        if let Some(t) = &self.trace {
            t.lock().unwrap().push(event());
        }
    }

    /// The recorded events, oldest first; empty unless built with [`Teacher::traced`].
    pub fn take_trace(&self) -> Vec<Value> {
        self.trace.as_ref().map(|t| std::mem::take(&mut *t.lock().unwrap())).unwrap_or_default()
    }

    /// `E(L | u Σ^ω)`.
    pub fn expectation(&self, u: &[usize]) -> Result<Rational> {
        let value = self.analysis.conditional_expectation(u)?;
        {
            let mut log = self.log.lock().unwrap();
            log.expectation_queries += 1;
            log.queried_length += u.len() as u64;
        }
        self.record(|| {
            json!({
                "query": "expectation",
                "word": self.hidden().alphabet().format_word(u),
                "value": value.to_string(),
            })
        });
        Ok(value)
    }

    /// `Yes` iff `distance(hidden, h) <= eps`; otherwise the shortlex-least word whose
    /// conditional expectations differ by more than `eps`.
    pub fn consistency(&self, h: &Automaton, eps: &Rational) -> Result<Consistency> {
        if h.alphabet() != self.hidden().alphabet() {
            return Err(Error::AlphabetMismatch("hypothesis and hidden automaton".into()));
        }
        self.log.lock().unwrap().consistency_queries += 1;
        let report = distance(self.hidden(), h, None)?;
        let answer = if report.total <= *eps {
            Consistency::Yes
        } else {
            Consistency::Counterexample(separating_word(&self.analysis, &Analysis::uniform(h), eps)?)
        };
        self.record(|| {
            let reply = match &answer {
                Consistency::Yes => Value::from("yes"),
                Consistency::Counterexample(u) => Value::from(self.hidden().alphabet().format_word(u)),
            };
            json!({
                "query": "consistency",
                "hypothesis_states": h.state_count(),
                "epsilon": eps.to_string(),
                "answer": reply,
            })
        });
        Ok(answer)
    }
}
