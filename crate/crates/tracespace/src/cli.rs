//! Command-line front end.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::absint::{self, EffectConfig, Env};
use crate::error::{Error, Result};
use crate::geometry::build_holes_with;
use crate::index_poset::{enumerate_dead_with, max_alive_with_stats, schedulings_with, DeadOptions, ScheduleOptions, ScheduleReport, Variant};
use crate::lang::{normalize, parse, Alternative, Mode, Source};
use crate::oracle;
use crate::shadow::{self, Labels, ShadowAutomaton};

#[derive(Parser, Debug)]
#[command(name = "tracespace", version, about = "Trace spaces of PV programs: schedulings, shadow automata, interval analysis")]
pub struct Cli {
    /// Worker threads for the parallel parts (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug, Clone)]
struct Input {
    /// Program file, or `-` for standard input.
    file: Option<PathBuf>,
    /// Program text given inline instead of a file.
    #[arg(short = 'e', long = "expr", conflicts_with = "file")]
    expr: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
struct Output {
    #[arg(long)]
    json: bool,
    /// Leave wall-clock timings out so that outputs are byte-stable.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args, Debug, Clone)]
struct PosetFlags {
    #[arg(long, value_enum, default_value_t = VariantArg::Exact)]
    variant: VariantArg,
    /// Process dimensions by decreasing hole count when enumerating dead matrices.
    #[arg(long)]
    sort_dims: bool,
    /// Keep holes that are contained in other holes.
    #[arg(long)]
    no_subsumption: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Exact,
    Superset,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum LabelArg {
    Maximal,
    All,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count schedulings and list components with representative runs.
    Schedulings {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        poset: PosetFlags,
        #[command(flatten)]
        out: Output,
    },
    /// List dead matrices.
    Dead {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        poset: PosetFlags,
        #[command(flatten)]
        out: Output,
    },
    /// List maximal alive matrices.
    Alive {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        poset: PosetFlags,
        #[command(flatten)]
        out: Output,
    },
    /// Print the forbidden hyperrectangles.
    Holes {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        no_subsumption: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Build the shadow automaton of a looping program.
    Automaton {
        #[command(flatten)]
        input: Input,
        /// Replace matrix labels by connexity classes.
        #[arg(long)]
        quotient: bool,
        #[arg(long)]
        det: bool,
        #[arg(long)]
        min: bool,
        #[arg(long, value_enum, default_value_t = LabelArg::Maximal)]
        labels: LabelArg,
        /// Write a Graphviz rendering here.
        #[arg(long)]
        dot: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Interval analysis on the reduced shadow automaton.
    Absint {
        #[command(flatten)]
        input: Input,
        /// JSON overrides: {"by_direction": {"0": "a:=a-1"}, "by_class": {"c1": "a:=a/2"}}.
        #[arg(long)]
        effects: Option<PathBuf>,
        /// Initial value, e.g. `a=[0,1]`; repeatable.
        #[arg(long)]
        init: Vec<String>,
        #[arg(long, default_value_t = absint::DEFAULT_WIDENING_DELAY)]
        widening_delay: usize,
        #[arg(long, default_value_t = absint::DEFAULT_NARROWING_PASSES)]
        narrowing_passes: usize,
        /// Keep matrix labels instead of connexity classes.
        #[arg(long)]
        no_quotient: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Cross-check the scheduling count against explicit interleavings.
    Oracle {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = oracle::DEFAULT_RUN_CAP)]
        cap: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Run a generated benchmark family.
    Bench {
        #[command(subcommand)]
        family: Family,
        #[command(flatten)]
        out: Output,
    },
    /// Print a generated program.
    Gen {
        #[command(subcommand)]
        family: Family,
        /// Put every thread under a loop.
        #[arg(long = "loop", global = true)]
        looped: bool,
    },
    /// Unroll each loop a given number of times.
    Deloop {
        #[command(flatten)]
        input: Input,
        /// Copies per thread, e.g. `2,1`.
        #[arg(long)]
        v: String,
    },
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Family {
    /// `n` philosophers, each taking forks `k` and `k+1 mod n`.
    Philosophers { n: usize },
    /// `n` copies of a process locking `l` resources then releasing them.
    Twophase { n: usize, l: usize },
}

/// Thread `k` takes forks `a_k` then `a_{k+1 mod n}`. A single philosopher
/// owns a single fork.
pub fn gen_philosophers(n: usize) -> String {
    if n == 1 {
        return "P(a0).V(a0)".into();
    }
    (0..n)
        .map(|k| {
            let (a, b) = (k, (k + 1) % n);
            format!("P(a{a}).P(a{b}).V(a{a}).V(a{b})")
        })
        .collect::<Vec<_>>()
        .join(" | ")
}

/// Every resource admits `n - 1` holders, so the forbidden region is the
/// single configuration where all `n` threads hold the same resource.
pub fn gen_twophase(n: usize, l: usize, looped: bool) -> String {
    let kappa = n.saturating_sub(1).max(1);
    let mut s = String::new();
    if kappa > 1 {
        for r in 1..=l {
            let _ = writeln!(s, "#cap a{r} {kappa}");
        }
    }
    let ps: Vec<String> = (1..=l).map(|r| format!("P(a{r})")).collect();
    let vs: Vec<String> = (1..=l).map(|r| format!("V(a{r})")).collect();
    let body = format!("{}.{}", ps.join("."), vs.join("."));
    let thread = if looped { format!("({body})*") } else { body };
    s.push_str(&vec![thread; n].join(" | "));
    s
}

fn family_text(f: Family, looped: bool) -> String {
    match f {
        Family::Philosophers { n } => {
            let p = gen_philosophers(n);
            if looped {
                p.split(" | ").map(|t| format!("({t})*")).collect::<Vec<_>>().join(" | ")
            } else {
                p
            }
        }
        Family::Twophase { n, l } => gen_twophase(n, l, looped),
    }
}

fn read_input(input: &Input) -> Result<Source> {
    let text = match (&input.expr, &input.file) {
        (Some(e), _) => e.clone(),
        (None, Some(p)) if p.as_os_str() == "-" => {
            std::io::read_to_string(std::io::stdin()).map_err(|e| Error::Io(format!("stdin: {e}")))?
        }
        (None, Some(p)) => std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        (None, None) => return Err(Error::Io("no program given (FILE or --expr)".into())),
    };
    parse(&text)
}

fn options(p: &PosetFlags) -> ScheduleOptions {
    ScheduleOptions {
        variant: match p.variant {
            VariantArg::Exact => Variant::Exact,
            VariantArg::Superset => Variant::Superset,
        },
        dead: DeadOptions { sort_dims: p.sort_dims, parallel: true },
        no_subsumption: p.no_subsumption,
        ..ScheduleOptions::new()
    }
}

fn loop_free(src: &Source) -> Result<Vec<Alternative>> {
    let alts = normalize(&src.program)?;
    if alts.iter().any(|a| a.mode != Mode::LoopFree) {
        return Err(Error::UnsupportedShape("this command needs a loop-free program; see `deloop`".into()));
    }
    Ok(alts)
}

fn single_looping(src: &Source) -> Result<Alternative> {
    let mut alts = normalize(&src.program)?;
    if alts.len() != 1 {
        return Err(Error::UnsupportedShape(format!("expected one looping alternative, got {}", alts.len())));
    }
    let alt = alts.remove(0);
    if alt.mode != Mode::AllStarred {
        return Err(Error::UnsupportedShape("every thread must be a loop".into()));
    }
    Ok(alt)
}

fn emit(out: &Output, value: Value, text: String, elapsed: f64) -> String {
    if out.json {
        let mut v = value;
        if !out.no_timing {
            if let Value::Object(m) = &mut v {
                m.insert("timing_ms".into(), json!(elapsed));
            }
        }
        let mut s = serde_json::to_string_pretty(&v).expect("json values serialize");
        s.push('\n');
        s
    } else if out.no_timing {
        text
    } else {
        format!("{text}time_ms={elapsed:.3}\n")
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn report_text(r: &ScheduleReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "threads={} holes={}", r.threads, r.holes);
    let _ = writeln!(s, "dead: {}", r.dead.join(" "));
    let _ = writeln!(s, "{}: {}", if r.alive_is_poset { "alive" } else { "alive (maximal)" }, r.alive.join(" "));
    for (k, c) in r.components.iter().enumerate() {
        let _ = writeln!(s, "component {k}: {} | {}", c.matrices.join(" "), c.representative.join(" "));
    }
    let _ = writeln!(s, "schedulings={}", r.count);
    s
}

fn reports_json(reports: &[ScheduleReport]) -> Value {
    if let [r] = reports {
        serde_json::to_value(r).expect("report serializes")
    } else {
        json!({
            "alternatives": reports,
            "count": reports.iter().map(|r| r.count).sum::<usize>(),
        })
    }
}

fn automaton_summary(a: &ShadowAutomaton) -> String {
    format!("states={} transitions={} edges={}", a.states.len(), a.transition_count(), a.edge_count())
}

fn parse_init(items: &[String]) -> Result<Env> {
    let mut env = Env::new();
    for it in items {
        let bad = || Error::Parse { line: 1, col: 1, msg: format!("bad --init `{it}`, expected VAR=[lo,hi]") };
        let (v, i) = it.split_once('=').ok_or_else(bad)?;
        env.insert(v.trim().to_string(), absint::parse_interval(i).ok_or_else(bad)?);
    }
    Ok(env)
}

fn run(cli: Cli) -> Result<String> {
    if let Some(k) = cli.threads {
        // a second initialization only fails when a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    match cli.cmd {
        Command::Schedulings { input, poset, out } => {
            let src = read_input(&input)?;
            let t = Instant::now();
            let caps = src.capacities();
            let reports: Vec<ScheduleReport> =
                loop_free(&src)?.iter().map(|a| schedulings_with(a, &caps, &options(&poset))).collect::<Result<_>>()?;
            let text: String = if reports.len() == 1 {
                report_text(&reports[0])
            } else {
                let mut s: String = reports.iter().enumerate().map(|(k, r)| format!("# alternative {k}\n{}", report_text(r))).collect();
                let _ = writeln!(s, "total schedulings={}", reports.iter().map(|r| r.count).sum::<usize>());
                s
            };
            Ok(emit(&out, reports_json(&reports), text, ms(t)))
        }
        Command::Dead { input, poset, out } => {
            let src = read_input(&input)?;
            let t = Instant::now();
            let opts = options(&poset);
            let mut all = Vec::new();
            for alt in loop_free(&src)? {
                let g = build_holes_with(&alt.threads, &src.capacities(), !opts.no_subsumption)?;
                let dead = enumerate_dead_with(&g, opts.dead);
                all.push(dead.iter().map(|d| d.to_matrix(g.l()).to_string()).collect::<Vec<_>>());
            }
            let text: String = all.iter().map(|d| format!("{}\n", d.join(" "))).collect();
            let value = if all.len() == 1 { json!({"dead": all[0]}) } else { json!({"dead": all}) };
            Ok(emit(&out, value, text, ms(t)))
        }
        Command::Alive { input, poset, out } => {
            let src = read_input(&input)?;
            let t = Instant::now();
            let opts = options(&poset);
            let mut all = Vec::new();
            let mut peak = 0;
            for alt in loop_free(&src)? {
                let g = build_holes_with(&alt.threads, &src.capacities(), !opts.no_subsumption)?;
                let dead = enumerate_dead_with(&g, opts.dead);
                let (alive, stats) = max_alive_with_stats(&g, &dead, opts.variant);
                peak = peak.max(stats.peak);
                all.push(alive.iter().map(ToString::to_string).collect::<Vec<_>>());
            }
            let text: String = all.iter().map(|d| format!("{}\n", d.join(" "))).collect();
            let value = if all.len() == 1 {
                json!({"alive": all[0], "peak_candidates": peak})
            } else {
                json!({"alive": all, "peak_candidates": peak})
            };
            Ok(emit(&out, value, text, ms(t)))
        }
        Command::Holes { input, no_subsumption, out } => {
            let src = read_input(&input)?;
            let t = Instant::now();
            let mut text = String::new();
            let mut values = Vec::new();
            for alt in normalize(&src.program)? {
                let g = build_holes_with(&alt.threads, &src.capacities(), !no_subsumption)?;
                text.push_str(&g.to_string());
                values.push(g.to_json());
            }
            let value = if values.len() == 1 { values.remove(0) } else { json!({"alternatives": values}) };
            Ok(emit(&out, value, text, ms(t)))
        }
        Command::Automaton { input, quotient, det, min, labels, dot, out } => {
            let src = read_input(&input)?;
            let alt = single_looping(&src)?;
            let t = Instant::now();
            let labels = if labels == LabelArg::All { Labels::All } else { Labels::Maximal };
            let mut a = shadow::automaton_of(&alt, &src.capacities(), labels)?;
            let mut lines = vec![format!("nfa {}", automaton_summary(&a))];
            if quotient {
                a = shadow::quotient_connexity(&a);
                lines.push(format!("quotient labels={}", a.labels.len()));
            }
            if det || min {
                a = shadow::determinize(&a);
                lines.push(format!("dfa {}", automaton_summary(&a)));
            }
            if min {
                a = shadow::minimize(&a);
                lines.push(format!("min {}", automaton_summary(&a)));
            }
            if let Some(p) = dot {
                std::fs::write(&p, shadow::to_dot(&a)).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            }
            let mut text = lines.join("\n");
            text.push('\n');
            Ok(emit(&out, shadow::to_json(&a), text, ms(t)))
        }
        Command::Absint { input, effects, init, widening_delay, narrowing_passes, no_quotient, out } => {
            let src = read_input(&input)?;
            let alt = single_looping(&src)?;
            let cfg = match effects {
                Some(p) => EffectConfig::from_json(
                    &std::fs::read_to_string(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
                )?,
                None => EffectConfig::default(),
            };
            let init = parse_init(&init)?;
            let t = Instant::now();
            let mut a = shadow::automaton_of(&alt, &src.capacities(), Labels::Maximal)?;
            if !no_quotient {
                a = shadow::quotient_connexity(&a);
            }
            let a = shadow::minimize(&shadow::determinize(&a));
            let sys = absint::build_equations(&a, &alt, &cfg, init);
            for w in &sys.warnings {
                eprintln!("warning: {w}");
            }
            let sol = absint::solve(&sys, widening_delay, narrowing_passes);
            let mut text = String::new();
            let mut states = serde_json::Map::new();
            for (s, env) in sol.iter().enumerate() {
                let name = if Some(s) == a.start { format!("{s} (entry)") } else { s.to_string() };
                let vals = match env {
                    None => "unreachable".to_string(),
                    Some(e) => e.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" "),
                };
                let _ = writeln!(text, "state {name}: {vals}");
                states.insert(s.to_string(), absint::env_to_json(env));
            }
            let value = json!({
                "entry": a.start,
                "states": states,
                "post_fixpoint": sys.is_post_fixpoint(&sol),
                "automaton": {"states": a.states.len(), "transitions": a.transition_count()},
            });
            Ok(emit(&out, value, text, ms(t)))
        }
        Command::Oracle { input, cap, out } => {
            let src = read_input(&input)?;
            let t = Instant::now();
            let caps = src.capacities();
            let mut rows = Vec::new();
            let mut text = String::new();
            for (k, alt) in loop_free(&src)?.iter().enumerate() {
                let runs = oracle::enumerate_runs(alt, &caps, cap)?;
                let complete = runs.iter().filter(|r| r.complete).count();
                let classes = oracle::equiv_classes(alt, &caps, &runs);
                let dp = oracle::count_classes(alt, &caps);
                let poset = schedulings_with(alt, &caps, &ScheduleOptions::new())?.count;
                let _ = writeln!(
                    text,
                    "alternative {k}: runs={} complete={complete} classes={classes} lattice={dp} index_poset={poset} {}",
                    runs.len(),
                    if classes == poset && dp == poset { "agree" } else { "DISAGREE" }
                );
                rows.push(json!({
                    "runs": runs.len(), "complete": complete, "classes": classes,
                    "lattice_classes": dp, "index_poset": poset, "agree": classes == poset && dp == poset,
                }));
            }
            Ok(emit(&out, json!({"alternatives": rows}), text, ms(t)))
        }
        Command::Bench { family, out } => bench(family, &out),
        Command::Gen { family, looped } => Ok(format!("{}\n", family_text(family, looped))),
        Command::Deloop { input, v } => {
            let src = read_input(&input)?;
            let alt = single_looping(&src)?;
            let v: Vec<usize> = v
                .split(',')
                .map(|x| x.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { line: 1, col: 1, msg: format!("bad --v: {e}") })?;
            let d = shadow::deloop(&alt, &v)?;
            Ok(format!("{}\n", Source { decls: src.decls.clone(), program: d.to_program() }))
        }
    }
}

fn bench(family: Family, out: &Output) -> Result<String> {
    match family {
        Family::Philosophers { n } => {
            let src = parse(&gen_philosophers(n))?;
            let alt = &normalize(&src.program)?[0];
            let t = Instant::now();
            let r = schedulings_with(alt, &src.capacities(), &ScheduleOptions { poset_cap: 0, ..ScheduleOptions::new() })?;
            let e = ms(t);
            let value = json!({
                "family": "philosophers", "n": n, "holes": r.holes, "dead": r.dead.len(),
                "maximal": r.maximal.len(), "schedulings": r.count, "peak_candidates": r.peak_candidates,
            });
            let text = format!(
                "philosophers n={n} holes={} dead={} maximal={} schedulings={} peak={}\n",
                r.holes,
                r.dead.len(),
                r.maximal.len(),
                r.count,
                r.peak_candidates
            );
            Ok(emit(out, value, text, e))
        }
        Family::Twophase { n, l } => {
            let src = parse(&gen_twophase(n, l, true))?;
            let alt = single_looping(&src)?;
            let t = Instant::now();
            let a = shadow::automaton_of(&alt, &src.capacities(), Labels::Maximal)?;
            let d = shadow::determinize(&a);
            let e = ms(t);
            let value = json!({
                "family": "twophase", "n": n, "l": l,
                "nfa": {"states": a.states.len(), "transitions": a.transition_count()},
                "dfa": {"states": d.states.len(), "transitions": d.transition_count()},
            });
            let text = format!(
                "twophase n={n} l={l} nfa states={} transitions={} dfa states={} transitions={}\n",
                a.states.len(),
                a.transition_count(),
                d.states.len(),
                d.transition_count()
            );
            Ok(emit(out, value, text, e))
        }
    }
}

/// Runs the command line, printing results or the error, and returns the exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(s) => {
            print!("{s}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
