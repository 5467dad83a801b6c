//! Interval analysis over a reduced shadow automaton used as a control-flow
//! graph. A `(j, label)` edge stands for thread `j` finishing one iteration
//! of its loop body, so its transfer function is that body's assignments
//! unless an override says otherwise.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{BigRational, Signed, Zero};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::lang::{fmt_rational, parse_assignments, parse_decimal, Affine, Alternative, ArithOp, Instruction};
use crate::shadow::ShadowAutomaton;

/// An extended rational; derive order puts `NegInf < Fin(_) < PosInf`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ext {
    NegInf,
    Fin(BigRational),
    PosInf,
}

impl Ext {
    fn neg(&self) -> Ext {
        match self {
            Ext::NegInf => Ext::PosInf,
            Ext::Fin(x) => Ext::Fin(-x),
            Ext::PosInf => Ext::NegInf,
        }
    }

    fn add(&self, c: &BigRational) -> Ext {
        match self {
            Ext::Fin(x) => Ext::Fin(x + c),
            e => e.clone(),
        }
    }

    /// Product with a nonzero constant.
    fn scale(&self, c: &BigRational) -> Ext {
        let r = match self {
            Ext::Fin(x) => return Ext::Fin(x * c),
            e => e.clone(),
        };
        if c.is_negative() {
            r.neg()
        } else {
            r
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::NegInf => write!(f, "-inf"),
            Ext::Fin(x) => write!(f, "{}", fmt_rational(x)),
            Ext::PosInf => write!(f, "inf"),
        }
    }
}

/// `lo ≤ hi` whenever not `Bot`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Interval {
    Bot,
    Range(Ext, Ext),
}

impl Interval {
    pub fn new(lo: Ext, hi: Ext) -> Interval {
        if lo > hi || lo == Ext::PosInf || hi == Ext::NegInf {
            Interval::Bot
        } else {
            Interval::Range(lo, hi)
        }
    }

    pub fn top() -> Interval {
        Interval::Range(Ext::NegInf, Ext::PosInf)
    }

    pub fn constant(c: BigRational) -> Interval {
        Interval::Range(Ext::Fin(c.clone()), Ext::Fin(c))
    }

    pub fn join(&self, o: &Interval) -> Interval {
        match (self, o) {
            (Interval::Bot, x) | (x, Interval::Bot) => x.clone(),
            (Interval::Range(a, b), Interval::Range(c, d)) => Interval::Range(a.min(c).clone(), b.max(d).clone()),
        }
    }

    pub fn le(&self, o: &Interval) -> bool {
        match (self, o) {
            (Interval::Bot, _) => true,
            (_, Interval::Bot) => false,
            (Interval::Range(a, b), Interval::Range(c, d)) => c <= a && b <= d,
        }
    }

    /// Unstable bounds jump to the infinity of their sign.
    pub fn widen(&self, new: &Interval) -> Interval {
        match (self, new) {
            (Interval::Bot, x) => x.clone(),
            (x, Interval::Bot) => x.clone(),
            (Interval::Range(a, b), Interval::Range(c, d)) => Interval::Range(
                if c < a { Ext::NegInf } else { a.clone() },
                if d > b { Ext::PosInf } else { b.clone() },
            ),
        }
    }

    /// Infinite bounds are refined by the new value.
    pub fn narrow(&self, new: &Interval) -> Interval {
        match (self, new) {
            (Interval::Bot, _) | (_, Interval::Bot) => Interval::Bot,
            (Interval::Range(a, b), Interval::Range(c, d)) => Interval::new(
                if *a == Ext::NegInf { c.clone() } else { a.clone() },
                if *b == Ext::PosInf { d.clone() } else { b.clone() },
            ),
        }
    }

    fn map(&self, op: ArithOp, c: &BigRational) -> Interval {
        let Interval::Range(lo, hi) = self else { return Interval::Bot };
        match op {
            ArithOp::Add => Interval::Range(lo.add(c), hi.add(c)),
            ArithOp::Sub => Interval::Range(lo.add(&-c), hi.add(&-c)),
            ArithOp::Mul | ArithOp::Div => {
                if c.is_zero() {
                    return Interval::constant(BigRational::zero());
                }
                let k = if op == ArithOp::Mul { c.clone() } else { c.recip() };
                let (x, y) = (lo.scale(&k), hi.scale(&k));
                if k.is_negative() {
                    Interval::Range(y, x)
                } else {
                    Interval::Range(x, y)
                }
            }
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Interval::Bot => Value::Null,
            Interval::Range(a, b) => json!([a.to_string(), b.to_string()]),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Interval::Bot => write!(f, "bot"),
            Interval::Range(a, b) => {
                let l = if *a == Ext::NegInf { "]" } else { "[" };
                let r = if *b == Ext::PosInf { "[" } else { "]" };
                write!(f, "{l}{a}, {b}{r}")
            }
        }
    }
}

/// Parses `[lo,hi]` with `-inf`/`inf` allowed.
pub fn parse_interval(text: &str) -> Option<Interval> {
    let t = text.trim();
    let inner = t.strip_prefix(['[', ']'])?.strip_suffix(['[', ']'])?;
    let (a, b) = inner.split_once(',')?;
    let ext = |s: &str| -> Option<Ext> {
        match s.trim() {
            "-inf" => Some(Ext::NegInf),
            "inf" | "+inf" => Some(Ext::PosInf),
            s => {
                let (neg, body) = match s.strip_prefix('-') {
                    Some(b) => (true, b),
                    None => (false, s),
                };
                let v = parse_decimal(body)?;
                Some(Ext::Fin(if neg { -v } else { v }))
            }
        }
    };
    Some(Interval::new(ext(a)?, ext(b)?))
}

/// Variables not mentioned are unconstrained.
pub type Env = BTreeMap<String, Interval>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Effect {
    pub assignments: Vec<(String, Affine)>,
}

impl Effect {
    pub fn of_instrs(instrs: &[Instruction]) -> Effect {
        Effect {
            assignments: instrs
                .iter()
                .filter_map(|i| match i {
                    Instruction::Assign(v, e) => Some((v.clone(), e.clone())),
                    _ => None,
                })
                .collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Effect> {
        Ok(Effect { assignments: parse_assignments(text)? })
    }
}

fn lookup(env: &Env, v: &str) -> Interval {
    env.get(v).cloned().unwrap_or_else(Interval::top)
}

/// Sequential interval semantics. `None` is the unreachable environment.
pub fn apply_effect(eff: &Effect, env: &Option<Env>) -> Option<Env> {
    let mut e = env.clone()?;
    for (v, rhs) in &eff.assignments {
        let val = match rhs {
            Affine::Const(c) => Interval::constant(c.clone()),
            Affine::Var(u) => lookup(&e, u),
            Affine::Bin(u, op, c) => lookup(&e, u).map(*op, c),
        };
        if val == Interval::Bot {
            return None;
        }
        e.insert(v.clone(), val);
    }
    Some(e)
}

fn join_env(a: &Option<Env>, b: &Option<Env>) -> Option<Env> {
    match (a, b) {
        (None, x) | (x, None) => x.clone(),
        (Some(x), Some(y)) => {
            let keys: BTreeSet<&String> = x.keys().chain(y.keys()).collect();
            Some(keys.into_iter().map(|k| (k.clone(), lookup(x, k).join(&lookup(y, k)))).collect())
        }
    }
}

fn le_env(a: &Option<Env>, b: &Option<Env>) -> bool {
    match (a, b) {
        (None, _) => true,
        (_, None) => false,
        (Some(x), Some(y)) => x.keys().chain(y.keys()).all(|k| lookup(x, k).le(&lookup(y, k))),
    }
}

fn pointwise(a: &Option<Env>, b: &Option<Env>, f: impl Fn(&Interval, &Interval) -> Interval) -> Option<Env> {
    match (a, b) {
        (None, x) => x.clone(),
        (Some(_), None) => None,
        (Some(x), Some(y)) => {
            let keys: BTreeSet<&String> = x.keys().chain(y.keys()).collect();
            let out: Env = keys.into_iter().map(|k| (k.clone(), f(&lookup(x, k), &lookup(y, k)))).collect();
            if out.values().any(|i| *i == Interval::Bot) {
                None
            } else {
                Some(out)
            }
        }
    }
}

/// Overrides read from `{"by_direction": {"0": "a:=a-1"}, "by_class": {"c1": "a:=a/2"}}`.
/// A class key matches a label by name or by any matrix it contains.
#[derive(Clone, Debug, Default)]
pub struct EffectConfig {
    pub by_direction: BTreeMap<usize, Effect>,
    pub by_class: BTreeMap<String, Effect>,
}

#[derive(Deserialize)]
struct RawConfig {
    #[serde(default)]
    by_direction: BTreeMap<String, String>,
    #[serde(default)]
    by_class: BTreeMap<String, String>,
}

impl EffectConfig {
    pub fn from_json(text: &str) -> Result<EffectConfig> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            col: e.column(),
            msg: format!("effects file: {e}"),
        })?;
        let mut cfg = EffectConfig::default();
        for (k, v) in raw.by_direction {
            let j = k.parse().map_err(|_| Error::Parse { line: 1, col: 1, msg: format!("bad direction `{k}`") })?;
            cfg.by_direction.insert(j, Effect::parse(&v)?);
        }
        for (k, v) in raw.by_class {
            cfg.by_class.insert(k, Effect::parse(&v)?);
        }
        Ok(cfg)
    }
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub src: usize,
    pub effect: Effect,
}

/// `A_s = init ⊔ ⨆ effect(A_src)` over the incoming edges of `s`.
#[derive(Clone, Debug)]
pub struct EquationSystem {
    pub init: Env,
    pub incoming: Vec<Vec<Edge>>,
    pub entry: Option<usize>,
    /// Edges whose thread body has no assignment and no override.
    pub warnings: Vec<String>,
}

/// Class overrides win over direction overrides, which win over the body.
pub fn build_equations(a: &ShadowAutomaton, alt: &Alternative, cfg: &EffectConfig, init: Env) -> EquationSystem {
    let mut incoming = vec![Vec::new(); a.states.len()];
    let mut warnings = BTreeSet::new();
    for &(s, j, l, d) in &a.transitions {
        let lab = &a.labels[l];
        let by_class = cfg
            .by_class
            .iter()
            .find(|(k, _)| **k == lab.name || lab.matrices.iter().any(|m| m.to_string() == **k));
        let effect = if let Some((_, e)) = by_class {
            e.clone()
        } else if let Some(e) = cfg.by_direction.get(&j) {
            e.clone()
        } else {
            let e = Effect::of_instrs(&alt.threads[j].instrs);
            if e.assignments.is_empty() {
                warnings.insert(format!("thread {j} has no assignment; its edges are the identity"));
            }
            e
        };
        incoming[d].push(Edge { src: s, effect });
    }
    EquationSystem { init, incoming, entry: a.start, warnings: warnings.into_iter().collect() }
}

impl EquationSystem {
    pub fn eval(&self, vals: &[Option<Env>], s: usize) -> Option<Env> {
        let mut acc = Some(self.init.clone());
        for e in &self.incoming[s] {
            acc = join_env(&acc, &apply_effect(&e.effect, &vals[e.src]));
        }
        acc
    }

    /// `F(A) ⊑ A` componentwise.
    pub fn is_post_fixpoint(&self, vals: &[Option<Env>]) -> bool {
        (0..vals.len()).all(|s| le_env(&self.eval(vals, s), &vals[s]))
    }
}

pub const DEFAULT_WIDENING_DELAY: usize = 3;
pub const DEFAULT_NARROWING_PASSES: usize = 2;

/// Round-robin Kleene iteration from bottom; a state's value is widened
/// once it has changed more than `delay` times. Then `passes` rounds of
/// narrowing.
pub fn solve(sys: &EquationSystem, delay: usize, passes: usize) -> Vec<Option<Env>> {
    let ns = sys.incoming.len();
    let mut vals: Vec<Option<Env>> = vec![None; ns];
    let mut changes = vec![0usize; ns];
    loop {
        let mut stable = true;
        for s in 0..ns {
            let new = join_env(&vals[s], &sys.eval(&vals, s));
            if new != vals[s] {
                stable = false;
                changes[s] += 1;
                vals[s] = if changes[s] > delay { pointwise(&vals[s], &new, Interval::widen) } else { new };
            }
        }
        if stable {
            break;
        }
    }
    for _ in 0..passes {
        let next: Vec<Option<Env>> = (0..ns).map(|s| pointwise(&vals[s], &sys.eval(&vals, s), Interval::narrow)).collect();
        vals = next;
    }
    vals
}

pub fn env_to_json(env: &Option<Env>) -> Value {
    match env {
        None => Value::Null,
        Some(e) => Value::Object(e.iter().map(|(k, v)| (k.clone(), v.to_json())).collect()),
    }
}
