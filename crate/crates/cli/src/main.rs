use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};

use limavg::fit::{approx_minimize_bounded, fit_bounded, fit_tree, FitOutcome, FitProblem};
use limavg::gadgets::{self, BkmpVariant, ExperimentKind, Graph, Sat0Formula, VectorInstance};
use limavg::json::{self, FORMAT};
use limavg::learn::{learn, Teacher};
use limavg::measures::{draw_sample, SampleSpec};
use limavg::rational::{parse_rational, to_decimal};
use limavg::{Automaton, Equivalence, Error, Lasso, MarkovChain, Rational, Sample};

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NEGATIVE: u8 = 3;
const EXIT_BUDGET: u8 = 4;
const EXIT_INTERNAL: u8 = 5;

/// Limit-average automata under probabilistic semantics.
#[derive(Parser)]
#[command(name = "limavg", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Print a single JSON document on stdout instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Also show rationals as decimals with this many digits (lossy, text mode only).
    #[arg(long, global = true, value_name = "K")]
    decimal: Option<usize>,
    /// Seed for every stochastic step; echoed in the output.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel searches and experiments.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Value of the lasso word u·v^ω.
    Eval {
        #[arg(short)]
        a: PathBuf,
        #[arg(long, default_value = "")]
        u: String,
        #[arg(long)]
        v: String,
    },
    /// Conditional expectation E(A | uΣ^ω).
    Expect {
        #[arg(short)]
        a: PathBuf,
        #[arg(long, default_value = "")]
        u: String,
        /// Markov chain measure; uniform when absent.
        #[arg(long)]
        chain: Option<PathBuf>,
    },
    /// Expected absolute difference E(|A - B|), split by pairs of bottom components.
    Distance {
        #[arg(short)]
        a: PathBuf,
        #[arg(short)]
        b: PathBuf,
        #[arg(long)]
        chain: Option<PathBuf>,
    },
    /// Almost-equivalence; exit 3 with a counterexample when they differ.
    Equiv {
        #[arg(short)]
        a: PathBuf,
        #[arg(short)]
        b: PathBuf,
        #[arg(long)]
        chain: Option<PathBuf>,
    },
    /// Rigid approximation check; exit 3 when some reachable pair exceeds eps.
    Rigid {
        #[arg(short)]
        a: PathBuf,
        #[arg(short)]
        b: PathBuf,
        #[arg(long, default_value = "0")]
        eps: String,
    },
    /// Almost-exact minimization, or with --states the best approximation of that size.
    Minimize {
        #[arg(short)]
        a: PathBuf,
        /// Search all automata with at most this many states (micro scale only).
        #[arg(long)]
        states: Option<usize>,
    },
    /// Learns the hidden automaton through expectation and consistency queries.
    Learn {
        #[arg(long)]
        hidden: PathBuf,
        /// Print query statistics on stderr.
        #[arg(long)]
        stats: bool,
        /// Write every query and table snapshot as JSON lines.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
    },
    /// Finds an automaton consistent with a sample; exit 3 on "none", 4 on budget exhaustion.
    Fit {
        #[arg(short, long)]
        sample: PathBuf,
        #[arg(long, required_unless_present = "tree")]
        max_states: Option<usize>,
        /// Build the unbounded tree automaton instead of searching.
        #[arg(long)]
        tree: bool,
        /// Allowed deviation per example.
        #[arg(long)]
        slack: Option<String>,
        /// Search nodes per independent subtree.
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        chain: Option<PathBuf>,
    },
    /// Draws a labelled sample from a hidden automaton.
    Sample {
        #[arg(long)]
        hidden: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        count: usize,
        /// Word length for kind En.
        #[arg(long)]
        n: Option<usize>,
        /// Termination probability for E, and for the U prefix.
        #[arg(long, default_value = "1/4")]
        lambda: String,
        /// Termination probability for the U period.
        #[arg(long, default_value = "1/4")]
        lambda2: String,
    },
    /// Emits an example or reduction artifact.
    Gadget(GadgetArgs),
    /// Sample size after which a random sample distinguishes with high probability.
    Estimate {
        #[arg(long)]
        sigma: u32,
        #[arg(long)]
        l: u32,
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        eps: String,
    },
    /// Monte Carlo frequency of samples that tell A_n from its twin.
    Experiment {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = ExpKind::E)]
        kind: ExpKind,
        /// Total sample length ‖S‖ per trial.
        #[arg(long)]
        target: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value = "1/4")]
        lambda: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    #[value(name = "U")]
    U,
    #[value(name = "E")]
    E,
    #[value(name = "En")]
    En,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpKind {
    #[value(name = "U")]
    U,
    #[value(name = "E")]
    E,
}

#[derive(Clone, Copy, ValueEnum)]
enum GadgetKind {
    An,
    #[value(name = "sat0-u")]
    Sat0U,
    #[value(name = "sat0-e")]
    Sat0E,
    Fig3,
    Fig4,
    Bkmp,
    Vcover,
    Chain,
}

#[derive(Args)]
struct GadgetArgs {
    #[arg(value_enum)]
    kind: GadgetKind,
    #[arg(long)]
    n: Option<usize>,
    /// DIMACS CNF input for sat0-u / sat0-e.
    #[arg(long)]
    cnf: Option<PathBuf>,
    /// Vector instance for bkmp.
    #[arg(long)]
    vectors: Option<PathBuf>,
    /// Graph for vcover: {"vertices": n, "edges": [[u, v], ...]}.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Number of centers (vcover).
    #[arg(long)]
    k: Option<usize>,
    /// Replace each graph edge by a path of length 5 first (vcover).
    #[arg(long)]
    subdivide: bool,
    /// Sample whose example words span the chain (chain).
    #[arg(long)]
    sample: Option<PathBuf>,
    /// an: a|bar; fig3: 1|2|3; fig4: a|large|small; bkmp: boolean|ternary.
    #[arg(long)]
    variant: Option<String>,
}

/// A command failure and its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::Internal(_)) { EXIT_INTERNAL } else { EXIT_INPUT };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn input(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_INPUT, message: message.into() }
}

/// What a command produced: text for humans, a JSON document for machines, and the exit code.
struct Output {
    text: String,
    doc: Value,
    code: u8,
}

impl Output {
    fn new(text: String, doc: Value) -> Self {
        Output { text, doc, code: 0 }
    }

    /// Documents that are file formats print as JSON in both modes.
    fn document(doc: Value) -> Self {
        Output { text: json::render(&doc), doc, code: 0 }
    }

    fn negative(mut self) -> Self {
        self.code = EXIT_NEGATIVE;
        self
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn load_automaton(path: &Path) -> Result<Automaton, Failure> {
    json::automaton_from_json(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn load_sample(path: &Path) -> Result<Sample, Failure> {
    json::sample_from_json(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn load_chain(path: Option<&PathBuf>) -> Result<Option<MarkovChain>, Failure> {
    path.map(|p| json::chain_from_json(&read(p)?).map_err(|e| input(format!("{}: {e}", p.display()))))
        .transpose()
}

fn rational_arg(name: &str, text: &str) -> Result<Rational, Failure> {
    parse_rational(text).map_err(|e| usage(format!("--{name}: {e}")))
}

fn q(x: &Rational) -> Value {
    Value::String(x.to_string())
}

struct Ctx {
    decimal: Option<usize>,
    seed: u64,
}

impl Ctx {
    /// `p/q`, followed by a decimal rendering when one was requested.
    fn show(&self, x: &Rational) -> String {
        match self.decimal {
            Some(k) => format!("{x} (~ {})", to_decimal(x, k)),
            None => x.to_string(),
        }
    }
}

fn run(cli: Cli) -> Result<Output, Failure> {
    let g = &cli.global;
    if let Some(j) = g.jobs {
        if j == 0 {
            return Err(usage("--jobs must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Failure { code: EXIT_INTERNAL, message: e.to_string() })?;
    }
    let ctx = Ctx { decimal: g.decimal, seed: g.seed };
    match cli.command {
        Command::Eval { a, u, v } => {
            let a = load_automaton(&a)?;
            let al = a.alphabet();
            let lasso = Lasso::new(al.parse_word(&u)?, al.parse_word(&v)?)?;
            let value = a.eval_lasso(&lasso)?;
            let doc = json!({"format": FORMAT, "type": "value", "u": u, "v": v, "value": q(&value)});
            Ok(Output::new(format!("value = {}\n", ctx.show(&value)), doc))
        }
        Command::Expect { a, u, chain } => {
            let a = load_automaton(&a)?;
            let chain = load_chain(chain.as_ref())?;
            let word = a.alphabet().parse_word(&u)?;
            let value = limavg::conditional_expectation(&a, &word, chain.as_ref())?;
            let doc = json!({"format": FORMAT, "type": "expectation", "u": u, "value": q(&value)});
            Ok(Output::new(format!("E(A | u) = {}\n", ctx.show(&value)), doc))
        }
        Command::Distance { a, b, chain } => {
            let (a, b) = (load_automaton(&a)?, load_automaton(&b)?);
            let chain = load_chain(chain.as_ref())?;
            let r = limavg::distance(&a, &b, chain.as_ref())?;
            let mut text = String::new();
            for p in &r.pairs {
                text += &format!(
                    "bottom pair ({}, {}): probability {}, values {} / {}\n",
                    p.a_component,
                    p.b_component,
                    ctx.show(&p.probability),
                    p.x,
                    p.y
                );
            }
            // scripts rely on this being the final line, with the bare rational
            text += &format!("total = {}\n", r.total);
            Ok(Output::new(text, json::distance_report_to_json(&r)))
        }
        Command::Equiv { a, b, chain } => {
            let (a, b) = (load_automaton(&a)?, load_automaton(&b)?);
            let chain = load_chain(chain.as_ref())?;
            match limavg::almost_equivalent(&a, &b, chain.as_ref())? {
                Equivalence::Equivalent => Ok(Output::new(
                    "equivalent\n".into(),
                    json!({"format": FORMAT, "type": "equivalence", "equivalent": true}),
                )),
                Equivalence::Counterexample(u) => {
                    let w = a.alphabet().format_word(&u);
                    let ea = limavg::conditional_expectation(&a, &u, chain.as_ref())?;
                    let eb = limavg::conditional_expectation(&b, &u, chain.as_ref())?;
                    let doc = json!({"format": FORMAT, "type": "equivalence", "equivalent": false,
                        "counterexample": w, "a_value": q(&ea), "b_value": q(&eb)});
                    let text = format!("not equivalent\ncounterexample u = {w:?}: E(A|u) = {ea}, E(B|u) = {eb}\n");
                    Ok(Output::new(text, doc).negative())
                }
            }
        }
        Command::Rigid { a, b, eps } => {
            let (a, b) = (load_automaton(&a)?, load_automaton(&b)?);
            let eps = rational_arg("eps", &eps)?;
            let r = limavg::rigid_check(&a, &b, &eps)?;
            let mut text = String::new();
            for p in &r.pairs {
                text += &format!(
                    "states ({}, {}) via {:?}: {}\n",
                    p.a_state,
                    p.b_state,
                    a.alphabet().format_word(&p.witness),
                    ctx.show(&p.distance)
                );
            }
            text += &format!("max = {}\n{}\n", r.max_distance, if r.within { "within" } else { "exceeds" });
            let out = Output::new(text, json::rigid_report_to_json(&r, a.alphabet()));
            Ok(if r.within { out } else { out.negative() })
        }
        Command::Minimize { a, states } => {
            let a = load_automaton(&a)?;
            match states {
                None => Ok(Output::document(json::automaton_to_json(&limavg::minimize_almost_exact(&a)?))),
                Some(n) => {
                    let (d, m) = approx_minimize_bounded(&a, n)?;
                    eprintln!("distance = {d}");
                    Ok(Output::document(json::automaton_to_json(&m)))
                }
            }
        }
        Command::Learn { hidden, stats, trace } => {
            let hidden = load_automaton(&hidden)?;
            let teacher = if trace.is_some() { Teacher::traced(&hidden) } else { Teacher::new(&hidden) };
            let result = learn(&teacher);
            if let Some(path) = &trace {
                let mut lines = String::new();
                for event in teacher.take_trace() {
                    lines += &event.to_string();
                    lines.push('\n');
                }
                fs::write(path, lines).map_err(|e| input(format!("{}: {e}", path.display())))?;
            }
            let (h, st) = result?;
            if stats {
                eprintln!("{}", serde_json::to_string_pretty(&st).expect("serializable"));
            }
            Ok(Output::document(json::automaton_to_json(&h)))
        }
        Command::Fit { sample, max_states, tree, slack, budget, chain } => {
            let s = load_sample(&sample)?;
            if tree {
                let a = fit_tree(&s)?;
                if let Some(n) = max_states {
                    if a.state_count() > n {
                        eprintln!("tree automaton has {} states, above --max-states {n}", a.state_count());
                    }
                }
                return Ok(Output::document(json::automaton_to_json(&a)));
            }
            let chain = load_chain(chain.as_ref())?;
            let mut p = FitProblem::new(&s, max_states.expect("required unless --tree"));
            p.measure = chain.as_ref();
            p.slack = slack.map(|t| rational_arg("slack", &t)).transpose()?;
            if let Some(b) = budget {
                p.budget = b;
            }
            match fit_bounded(&p)? {
                FitOutcome::Found(a) => Ok(Output::document(json::automaton_to_json(&a))),
                FitOutcome::None => Ok(Output::new(
                    "none\n".into(),
                    json!({"format": FORMAT, "type": "fit", "result": "none"}),
                )
                .negative()),
                FitOutcome::BudgetExhausted => {
                    let doc = json!({"format": FORMAT, "type": "fit", "result": "budget exhausted"});
                    Ok(Output { text: "budget exhausted\n".into(), doc, code: EXIT_BUDGET })
                }
            }
        }
        Command::Sample { hidden, kind, count, n, lambda, lambda2 } => {
            let hidden = load_automaton(&hidden)?;
            let spec = match kind {
                KindArg::U => SampleSpec::U {
                    lambda1: rational_arg("lambda", &lambda)?,
                    lambda2: rational_arg("lambda2", &lambda2)?,
                },
                KindArg::E => SampleSpec::E { lambda: rational_arg("lambda", &lambda)? },
                KindArg::En => SampleSpec::En { n: n.ok_or_else(|| usage("kind En needs --n"))? },
            };
            let mut rng = ChaCha20Rng::seed_from_u64(ctx.seed);
            let s = draw_sample(&spec, &hidden, count, &mut rng)?;
            let mut doc = json::sample_to_json(&s);
            doc["seed"] = json!(ctx.seed);
            Ok(Output::document(doc))
        }
        Command::Gadget(args) => gadget(args),
        Command::Estimate { sigma, l, lambda, eps } => {
            let lambda = rational_arg("lambda", &lambda)?;
            let eps = rational_arg("eps", &eps)?;
            let size = gadgets::estimate_sample_size(sigma, l, &lambda, &eps)?;
            let doc = json!({"format": FORMAT, "type": "estimate", "sigma": sigma, "l": l,
                "lambda": q(&lambda), "eps": q(&eps), "size": size.to_string()});
            Ok(Output::new(format!("size = {size}\n"), doc))
        }
        Command::Experiment { n, kind, target, trials, lambda } => {
            let lambda = rational_arg("lambda", &lambda)?;
            let kind = match kind {
                ExpKind::U => ExperimentKind::U,
                ExpKind::E => ExperimentKind::E,
            };
            let r = gadgets::experiment_distinguish(n, kind, target, trials, &lambda, ctx.seed)?;
            let mut doc = json::experiment_report_to_json(&r);
            doc["seed"] = json!(ctx.seed);
            let text = format!(
                "seed = {}\ntrials = {}\ndistinguishing = {}\nfrequency = {}\nmean length = {}\nbound = {}\n",
                ctx.seed,
                r.trials,
                r.distinguishing,
                ctx.show(&r.frequency()),
                ctx.show(&r.mean_total_length),
                ctx.show(&r.bound)
            );
            Ok(Output::new(text, doc))
        }
    }
}

fn need<T>(value: Option<T>, flag: &str, kind: &str) -> Result<T, Failure> {
    value.ok_or_else(|| usage(format!("gadget {kind} needs --{flag}")))
}

/// Vectors as a bare array of arrays of `"0" | "1/2" | "1"`, or as
/// `{"vectors": [...], "k": k, "t": t}`.
fn load_vectors(path: &Path) -> Result<VectorInstance, Failure> {
    let bad = |m: String| input(format!("{}: {m}", path.display()));
    let v: Value = serde_json::from_str(&read(path)?).map_err(|e| bad(e.to_string()))?;
    let (rows, k, t) = match &v {
        Value::Array(_) => (&v, 0, None),
        Value::Object(o) => (
            o.get("vectors").ok_or_else(|| bad("missing \"vectors\"".into()))?,
            o.get("k").and_then(Value::as_u64).unwrap_or(0) as usize,
            o.get("t").and_then(Value::as_u64).map(|t| t as usize),
        ),
        _ => return Err(bad("expected an array of vectors".into())),
    };
    let rows = rows.as_array().ok_or_else(|| bad("\"vectors\" must be an array".into()))?;
    let mut vectors = Vec::with_capacity(rows.len());
    for row in rows {
        let row = row.as_array().ok_or_else(|| bad("each vector must be an array".into()))?;
        let parsed = row
            .iter()
            .map(|x| {
                let s = x.as_str().ok_or_else(|| bad(format!("entry {x} is not a string")))?;
                parse_rational(s).map_err(|e| bad(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        vectors.push(parsed);
    }
    let inst = VectorInstance::new(vectors, k, t)?;
    if !inst.is_ternary() {
        return Err(bad("entries must be 0, 1/2 or 1".into()));
    }
    Ok(inst)
}

fn load_graph(path: &Path) -> Result<Graph, Failure> {
    let bad = |m: String| input(format!("{}: {m}", path.display()));
    let v: Value = serde_json::from_str(&read(path)?).map_err(|e| bad(e.to_string()))?;
    let n = v.get("vertices").and_then(Value::as_u64).ok_or_else(|| bad("missing \"vertices\"".into()))?;
    let edges: Vec<(usize, usize)> = serde_json::from_value(v.get("edges").cloned().unwrap_or(json!([])))
        .map_err(|e| bad(format!("edges: {e}")))?;
    Ok(Graph::new(n as usize, &edges)?)
}

fn gadget(args: GadgetArgs) -> Result<Output, Failure> {
    let variant = args.variant.as_deref();
    let bad_variant = |kind: &str, allowed: &str| usage(format!("gadget {kind}: --variant must be one of {allowed}"));
    let automaton = |a: Automaton| Ok(Output::document(json::automaton_to_json(&a)));
    match args.kind {
        GadgetKind::An => {
            let n = need(args.n, "n", "an")?;
            if n == 0 {
                return Err(usage("--n must be positive"));
            }
            let (a, bar) = gadgets::characterization(n);
            match variant {
                None | Some("a") => automaton(a),
                Some("bar") => automaton(bar),
                _ => Err(bad_variant("an", "a, bar")),
            }
        }
        GadgetKind::Sat0U | GadgetKind::Sat0E => {
            let path = need(args.cnf, "cnf", "sat0")?;
            let phi = Sat0Formula::from_dimacs(&read(&path)?).map_err(|e| input(format!("{}: {e}", path.display())))?;
            let s = match args.kind {
                GadgetKind::Sat0U => gadgets::sat0_to_usample(&phi),
                _ => gadgets::sat0_to_esample(&phi),
            };
            Ok(Output::document(json::sample_to_json(&s)))
        }
        GadgetKind::Fig3 => match variant {
            None | Some("1") => automaton(gadgets::a1()),
            Some("2") => automaton(gadgets::a2()),
            Some("3") => automaton(gadgets::a3()),
            _ => Err(bad_variant("fig3", "1, 2, 3")),
        },
        GadgetKind::Fig4 => {
            let n = || match args.n {
                Some(n) if n >= 1 => Ok(n),
                _ => Err(usage("gadget fig4 needs --n >= 1")),
            };
            match variant {
                None | Some("a") => automaton(gadgets::two_branch(n()?)),
                Some("large") => automaton(gadgets::two_branch_large(n()?)),
                Some("small") => automaton(gadgets::two_branch_small()),
                _ => Err(bad_variant("fig4", "a, large, small")),
            }
        }
        GadgetKind::Bkmp => {
            let inst = load_vectors(&need(args.vectors, "vectors", "bkmp")?)?;
            let v = match variant {
                Some("boolean") => BkmpVariant::Boolean,
                Some("ternary") => BkmpVariant::Ternary,
                None if inst.is_boolean() => BkmpVariant::Boolean,
                None => BkmpVariant::Ternary,
                _ => return Err(bad_variant("bkmp", "boolean, ternary")),
            };
            automaton(gadgets::bkmp_automaton(&inst, v)?)
        }
        GadgetKind::Vcover => {
            let g = load_graph(&need(args.graph, "graph", "vcover")?)?;
            let k = need(args.k, "k", "vcover")?;
            let (_, inst) = gadgets::dominating_set_to_vectors(&g, k, args.subdivide)?;
            let vectors: Vec<Vec<Value>> = inst.vectors.iter().map(|v| v.iter().map(q).collect()).collect();
            Ok(Output::document(json!({"format": FORMAT, "type": "vectors", "k": k, "vectors": vectors})))
        }
        GadgetKind::Chain => {
            let s = load_sample(&need(args.sample, "sample", "chain")?)?;
            Ok(Output::document(json::chain_to_json(&gadgets::sample_chain(&s)?)))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let as_json = cli.global.json;
    match run(cli) {
        Ok(out) => {
            let text = if as_json { json::render(&out.doc) } else { out.text };
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(EXIT_INTERNAL);
            }
            ExitCode::from(out.code)
        }
        Err(f) => {
            eprintln!("limavg: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
