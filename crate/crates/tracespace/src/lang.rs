//! The PV language: parsing, pretty-printing, normalization into flat
//! parallel alternatives, and per-thread lock intervals.

use std::collections::BTreeMap;
use std::fmt;

use num::rational::BigRational;
use num::{BigInt, One, Signed, Zero};

use crate::error::{Error, Result};

pub const DEFAULT_ALTERNATIVE_CAP: usize = 1024;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResourceDecl {
    pub name: String,
    pub capacity: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    fn symbol(self) -> char {
        match self {
            ArithOp::Add => '+',
            ArithOp::Sub => '-',
            ArithOp::Mul => '*',
            ArithOp::Div => '/',
        }
    }
}

/// Right-hand side of an assignment: `u`, `u op c`, or `c`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Affine {
    Const(BigRational),
    Var(String),
    Bin(String, ArithOp, BigRational),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Instruction {
    Lock(String),
    Unlock(String),
    Assign(String, Affine),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Program {
    Unit,
    Instr(Instruction),
    Seq(Vec<Program>),
    Par(Vec<Program>),
    Choice(Vec<Program>),
    Star(Box<Program>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ThreadProgram {
    pub instrs: Vec<Instruction>,
    pub looped: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    LoopFree,
    AllStarred,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alternative {
    pub threads: Vec<ThreadProgram>,
    pub mode: Mode,
}

/// A parsed file: capacity declarations plus the program body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Source {
    pub decls: Vec<ResourceDecl>,
    pub program: Program,
}

impl Source {
    pub fn capacities(&self) -> Capacities {
        Capacities::from_decls(&self.decls)
    }
}

/// Capacity lookup; undeclared resources are mutexes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Capacities(BTreeMap<String, u32>);

impl Capacities {
    pub fn from_decls(decls: &[ResourceDecl]) -> Self {
        Capacities(decls.iter().map(|d| (d.name.clone(), d.capacity)).collect())
    }

    pub fn get(&self, name: &str) -> u32 {
        self.0.get(name).copied().unwrap_or(1)
    }

    pub fn set(&mut self, name: &str, capacity: u32) {
        self.0.insert(name.to_string(), capacity);
    }
}

// ---------------------------------------------------------------------------
// Rationals

/// Exact decimal rendering when the denominator divides a power of ten,
/// `p/q` otherwise.
pub fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        return r.to_integer().to_string();
    }
    let mut den = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0usize, 0usize);
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let digits = twos.max(fives);
    let scaled = (r.abs() * BigRational::from_integer(BigInt::from(10).pow(digits as u32))).to_integer();
    let s = format!("{:0>width$}", scaled.to_string(), width = digits + 1);
    let (int, frac) = s.split_at(s.len() - digits);
    let sign = if r.is_negative() { "-" } else { "" };
    format!("{sign}{int}.{frac}")
}

/// Parses `-?DIGITS(.DIGITS)?` exactly.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if body.contains('.') && frac.is_empty() {
        return None;
    }
    let numer: BigInt = format!("{int}{frac}").parse().ok()?;
    let denom = BigInt::from(10).pow(frac.len() as u32);
    let r = BigRational::new(numer, denom);
    Some(if neg { -r } else { r })
}

// ---------------------------------------------------------------------------
// Display

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Affine::Const(c) => write!(f, "{}", fmt_rational(c)),
            Affine::Var(v) => write!(f, "{v}"),
            Affine::Bin(v, op, c) => write!(f, "{v}{}{}", op.symbol(), fmt_rational(c)),
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Lock(a) => write!(f, "P({a})"),
            Instruction::Unlock(a) => write!(f, "V({a})"),
            Instruction::Assign(v, e) => write!(f, "[{v}:={e}]"),
        }
    }
}

impl Program {
    fn level(&self) -> u8 {
        match self {
            Program::Par(_) => 0,
            Program::Choice(_) => 1,
            Program::Seq(_) => 2,
            Program::Star(_) => 3,
            Program::Unit | Program::Instr(_) => 4,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min_level: u8) -> fmt::Result {
        if self.level() < min_level {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        let list = |f: &mut fmt::Formatter<'_>, items: &[Program], sep: &str, lvl: u8| {
            for (k, p) in items.iter().enumerate() {
                if k > 0 {
                    write!(f, "{sep}")?;
                }
                p.write_at(f, lvl)?;
            }
            Ok(())
        };
        match self {
            Program::Unit => write!(f, "1"),
            Program::Instr(i) => write!(f, "{i}"),
            Program::Seq(ps) => list(f, ps, ".", 3),
            Program::Choice(ps) => list(f, ps, " + ", 2),
            Program::Par(ps) => list(f, ps, " | ", 1),
            Program::Star(p) => {
                p.write_at(f, 4)?;
                write!(f, "*")
            }
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.decls {
            writeln!(f, "#cap {} {}", d.name, d.capacity)?;
        }
        write!(f, "{}", self.program)
    }
}

impl ThreadProgram {
    pub fn to_program(&self) -> Program {
        let body = Program::seq(self.instrs.iter().cloned().map(Program::Instr).collect());
        if self.looped {
            Program::star(body)
        } else {
            body
        }
    }
}

impl Alternative {
    pub fn to_program(&self) -> Program {
        Program::par(self.threads.iter().map(ThreadProgram::to_program).collect())
    }
}

// ---------------------------------------------------------------------------
// Smart constructors: flatten associative operators, drop units.

impl Program {
    pub fn seq(items: Vec<Program>) -> Program {
        Self::flat(items, |p| matches!(p, Program::Seq(_)), Program::Seq)
    }

    pub fn par(items: Vec<Program>) -> Program {
        Self::flat(items, |p| matches!(p, Program::Par(_)), Program::Par)
    }

    pub fn choice(items: Vec<Program>) -> Program {
        Self::flat(items, |p| matches!(p, Program::Choice(_)), Program::Choice)
    }

    pub fn star(body: Program) -> Program {
        match body {
            Program::Unit => Program::Unit,
            s @ Program::Star(_) => s,
            b => Program::Star(Box::new(b)),
        }
    }

    fn flat(items: Vec<Program>, same: impl Fn(&Program) -> bool, make: fn(Vec<Program>) -> Program) -> Program {
        let mut out = Vec::new();
        for p in items {
            if p == Program::Unit {
                continue;
            }
            if same(&p) {
                match p {
                    Program::Seq(v) | Program::Par(v) | Program::Choice(v) => out.extend(v),
                    _ => unreachable!(),
                }
            } else {
                out.push(p);
            }
        }
        match out.len() {
            0 => Program::Unit,
            1 => out.pop().unwrap(),
            _ => make(out),
        }
    }
}

// ---------------------------------------------------------------------------
// Lexer and parser

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Cap,
    Ident(String),
    Number(String),
    One,
    Sym(char),
    Assign,
    Newline,
    Eof,
}

struct Lexer {
    chars: Vec<char>,
    at: usize,
    line: usize,
    col: usize,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.at).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.at += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn tokens(mut self) -> Result<Vec<Spanned>> {
        let mut out = Vec::new();
        loop {
            while matches!(self.peek(), Some(c) if c.is_whitespace() && c != '\n') {
                self.bump();
            }
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else {
                out.push(Spanned { tok: Tok::Eof, line, col });
                return Ok(out);
            };
            let tok = if c == '\n' {
                self.bump();
                Tok::Newline
            } else if c == '#' {
                let mut word = String::new();
                while matches!(self.peek(), Some(c) if c == '#' || c.is_ascii_alphabetic()) {
                    word.push(self.bump().unwrap());
                }
                if word != "#cap" {
                    return Err(Error::Parse { line, col, msg: format!("unknown directive `{word}`") });
                }
                Tok::Cap
            } else if c.is_ascii_alphabetic() || c == '_' {
                let mut word = String::new();
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                    word.push(self.bump().unwrap());
                }
                Tok::Ident(word)
            } else if c.is_ascii_digit() {
                let mut word = String::new();
                loop {
                    match self.peek() {
                        Some(d) if d.is_ascii_digit() => word.push(self.bump().unwrap()),
                        Some('.') if self.chars.get(self.at + 1).is_some_and(|d| d.is_ascii_digit()) => {
                            word.push(self.bump().unwrap())
                        }
                        _ => break,
                    }
                }
                if word == "1" {
                    Tok::One
                } else {
                    Tok::Number(word)
                }
            } else if c == ':' {
                self.bump();
                if self.peek() != Some('=') {
                    return Err(Error::Parse { line, col, msg: "expected `:=`".into() });
                }
                self.bump();
                Tok::Assign
            } else if "().|+*[]-/".contains(c) {
                self.bump();
                Tok::Sym(c)
            } else {
                return Err(Error::Parse { line, col, msg: format!("unexpected character `{c}`") });
            };
            out.push(Spanned { tok, line, col });
        }
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let t = &self.toks[self.pos];
        Err(Error::Parse { line: t.line, col: t.col, msg: msg.into() })
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn skip_newlines(&mut self) {
        while *self.peek() == Tok::Newline {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        self.skip_newlines();
        if *self.peek() == Tok::Sym(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_newlines();
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected identifier"),
        }
    }

    fn decls(&mut self) -> Result<Vec<ResourceDecl>> {
        let mut decls: Vec<ResourceDecl> = Vec::new();
        loop {
            self.skip_newlines();
            if *self.peek() != Tok::Cap {
                return Ok(decls);
            }
            let line = self.toks[self.pos].line;
            self.pos += 1;
            let name = match self.next() {
                Tok::Ident(s) => s,
                _ => {
                    self.pos -= 1;
                    return self.err("expected resource name after #cap");
                }
            };
            let capacity = match self.next() {
                Tok::One => 1,
                Tok::Number(n) => match n.parse::<u32>() {
                    Ok(v) if v >= 1 => v,
                    _ => {
                        self.pos -= 1;
                        return self.err("capacity must be a positive integer");
                    }
                },
                _ => {
                    self.pos -= 1;
                    return self.err("expected capacity");
                }
            };
            if !matches!(self.peek(), Tok::Newline | Tok::Eof) {
                return self.err("expected end of line after capacity declaration");
            }
            if decls.iter().any(|d| d.name == name) {
                return Err(Error::DuplicateCapacityDecl { name, line });
            }
            decls.push(ResourceDecl { name, capacity });
        }
    }

    fn par(&mut self) -> Result<Program> {
        let mut items = vec![self.choice()?];
        while self.eat('|') {
            items.push(self.choice()?);
        }
        Ok(Program::par(items))
    }

    fn choice(&mut self) -> Result<Program> {
        let mut items = vec![self.seq()?];
        while self.eat('+') {
            items.push(self.seq()?);
        }
        Ok(Program::choice(items))
    }

    fn seq(&mut self) -> Result<Program> {
        let mut items = vec![self.star()?];
        while self.eat('.') {
            items.push(self.star()?);
        }
        Ok(Program::seq(items))
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_newlines();
        if *self.peek() == Tok::Sym(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn star(&mut self) -> Result<Program> {
        let atom = self.atom()?;
        Ok(if self.eat('*') { Program::star(atom) } else { atom })
    }

    fn atom(&mut self) -> Result<Program> {
        self.skip_newlines();
        match self.peek().clone() {
            Tok::One => {
                self.pos += 1;
                Ok(Program::Unit)
            }
            Tok::Ident(k) if k == "P" || k == "V" => {
                self.pos += 1;
                self.expect('(')?;
                let r = self.ident()?;
                self.expect(')')?;
                Ok(Program::Instr(if k == "P" { Instruction::Lock(r) } else { Instruction::Unlock(r) }))
            }
            Tok::Sym('[') => {
                self.pos += 1;
                let v = self.ident()?;
                self.skip_newlines();
                if self.next() != Tok::Assign {
                    self.pos -= 1;
                    return self.err("expected `:=`");
                }
                let e = self.aexpr()?;
                self.expect(']')?;
                Ok(Program::Instr(Instruction::Assign(v, e)))
            }
            Tok::Sym('(') => {
                self.pos += 1;
                let p = self.par()?;
                self.expect(')')?;
                Ok(p)
            }
            Tok::Eof => self.err("unexpected end of input"),
            _ => self.err("expected `1`, `P(`, `V(`, `[` or `(`"),
        }
    }

    fn rational(&mut self) -> Result<BigRational> {
        self.skip_newlines();
        let neg = self.eat('-');
        let text = match self.next() {
            Tok::One => "1".to_string(),
            Tok::Number(n) => n,
            _ => {
                self.pos -= 1;
                return self.err("expected number");
            }
        };
        match parse_decimal(&text) {
            Some(r) => Ok(if neg { -r } else { r }),
            None => {
                self.pos -= 1;
                self.err(format!("malformed number `{text}`"))
            }
        }
    }

    fn aexpr(&mut self) -> Result<Affine> {
        self.skip_newlines();
        if let Tok::Ident(v) = self.peek().clone() {
            self.pos += 1;
            self.skip_newlines();
            let op = match self.peek() {
                Tok::Sym('+') => ArithOp::Add,
                Tok::Sym('-') => ArithOp::Sub,
                Tok::Sym('*') => ArithOp::Mul,
                Tok::Sym('/') => ArithOp::Div,
                _ => return Ok(Affine::Var(v)),
            };
            self.pos += 1;
            let c = self.rational()?;
            if op == ArithOp::Div && c.is_zero() {
                self.pos -= 1;
                return self.err("division by zero");
            }
            Ok(Affine::Bin(v, op, c))
        } else {
            Ok(Affine::Const(self.rational()?))
        }
    }
}

/// Parses a whole program file.
pub fn parse(text: &str) -> Result<Source> {
    let toks = Lexer { chars: text.chars().collect(), at: 0, line: 1, col: 1 }.tokens()?;
    let mut p = Parser { toks, pos: 0 };
    let decls = p.decls()?;
    let program = p.par()?;
    p.skip_newlines();
    if *p.peek() != Tok::Eof {
        return p.err("trailing input");
    }
    Ok(Source { decls, program })
}

/// Parses an effect list such as `a:=a-1; b:=2` (used by effect overrides).
pub fn parse_assignments(text: &str) -> Result<Vec<(String, Affine)>> {
    let mut out = Vec::new();
    for part in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let src = format!("[{part}]");
        match parse(&src)?.program {
            Program::Instr(Instruction::Assign(v, e)) => out.push((v, e)),
            _ => return Err(Error::Parse { line: 1, col: 1, msg: format!("expected assignment, got `{part}`") }),
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Normalization

type Threads = Vec<ThreadProgram>;

fn unsupported<T>(msg: &str) -> Result<T> {
    Err(Error::UnsupportedShape(msg.to_string()))
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::UnsupportedShape(format!("more than {cap} alternatives after distributing choice")));
    }
    Ok(())
}

fn flat_body(p: &Program, out: &mut Vec<Instruction>) -> Result<()> {
    match p {
        Program::Unit => Ok(()),
        Program::Instr(i) => {
            out.push(i.clone());
            Ok(())
        }
        Program::Seq(ps) => ps.iter().try_for_each(|q| flat_body(q, out)),
        Program::Par(_) => unsupported("parallel composition inside a loop body"),
        Program::Choice(_) => unsupported("choice inside a loop body"),
        Program::Star(_) => unsupported("nested loop"),
    }
}

fn alternatives(p: &Program, cap: usize) -> Result<Vec<Threads>> {
    match p {
        Program::Unit => Ok(vec![vec![ThreadProgram { instrs: vec![], looped: false }]]),
        Program::Instr(i) => Ok(vec![vec![ThreadProgram { instrs: vec![i.clone()], looped: false }]]),
        Program::Star(body) => {
            let mut instrs = Vec::new();
            flat_body(body, &mut instrs)?;
            Ok(vec![vec![ThreadProgram { instrs, looped: true }]])
        }
        Program::Choice(ps) => {
            let mut out = Vec::new();
            for q in ps {
                out.extend(alternatives(q, cap)?);
                check_cap(out.len(), cap)?;
            }
            Ok(out)
        }
        Program::Seq(ps) => {
            let mut acc: Vec<Vec<Instruction>> = vec![vec![]];
            for q in ps {
                let parts = alternatives(q, cap)?;
                let mut next = Vec::new();
                for part in &parts {
                    if part.len() != 1 {
                        return unsupported("parallel composition under sequence");
                    }
                    if part[0].looped {
                        return unsupported("loop that is not a whole thread");
                    }
                }
                for prefix in &acc {
                    for part in &parts {
                        let mut v = prefix.clone();
                        v.extend(part[0].instrs.iter().cloned());
                        next.push(v);
                    }
                }
                check_cap(next.len(), cap)?;
                acc = next;
            }
            Ok(acc.into_iter().map(|instrs| vec![ThreadProgram { instrs, looped: false }]).collect())
        }
        Program::Par(ps) => {
            let mut acc: Vec<Threads> = vec![vec![]];
            for q in ps {
                let parts = alternatives(q, cap)?;
                let mut next = Vec::new();
                for prefix in &acc {
                    for part in &parts {
                        let mut v = prefix.clone();
                        v.extend(part.iter().cloned());
                        next.push(v);
                    }
                }
                check_cap(next.len(), cap)?;
                acc = next;
            }
            Ok(acc)
        }
    }
}

/// Distributes choice to the top; each alternative is a flat parallel
/// composition that is either loop-free or entirely starred.
pub fn normalize(p: &Program) -> Result<Vec<Alternative>> {
    normalize_with_cap(p, DEFAULT_ALTERNATIVE_CAP)
}

pub fn normalize_with_cap(p: &Program, cap: usize) -> Result<Vec<Alternative>> {
    alternatives(p, cap)?
        .into_iter()
        .map(|threads| {
            let starred = threads.iter().filter(|t| t.looped).count();
            let mode = if starred == 0 {
                Mode::LoopFree
            } else if starred == threads.len() {
                Mode::AllStarred
            } else {
                return unsupported("parallel composition mixing looped and loop-free threads");
            };
            Ok(Alternative { threads, mode })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Lock intervals

/// A coordinate that may be the symbolic end `Inf` (greater than all integers).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Coord {
    Fin(u32),
    Inf,
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coord::Fin(v) => write!(f, "{v}"),
            Coord::Inf => write!(f, "inf"),
        }
    }
}

/// Thread holds the resource on the open interval `(s, t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hold {
    pub s: u32,
    pub t: Coord,
}

/// Holding intervals keyed by `(thread, resource)`.
pub type LockProfile = BTreeMap<(usize, String), Vec<Hold>>;

/// Instruction `k` (1-based) sits at coordinate `k`.
pub fn lock_intervals(thread: &ThreadProgram, j: usize) -> Result<LockProfile> {
    let mut open: BTreeMap<String, u32> = BTreeMap::new();
    let mut out = LockProfile::new();
    for (k, ins) in thread.instrs.iter().enumerate() {
        let tick = k as u32 + 1;
        match ins {
            Instruction::Lock(a) => {
                if open.contains_key(a) {
                    return Err(Error::NestedRelock { thread: j, resource: a.clone(), tick });
                }
                open.insert(a.clone(), tick);
            }
            Instruction::Unlock(a) => {
                let Some(s) = open.remove(a) else {
                    return Err(Error::UnmatchedUnlock { thread: j, resource: a.clone(), tick });
                };
                out.entry((j, a.clone())).or_default().push(Hold { s, t: Coord::Fin(tick) });
            }
            Instruction::Assign(..) => {}
        }
    }
    for (a, s) in open {
        out.entry((j, a)).or_default().push(Hold { s, t: Coord::Inf });
    }
    for holds in out.values_mut() {
        holds.sort();
    }
    Ok(out)
}

/// Lock profile of a whole alternative.
pub fn profile(threads: &[ThreadProgram]) -> Result<LockProfile> {
    let mut out = LockProfile::new();
    for (j, t) in threads.iter().enumerate() {
        out.extend(lock_intervals(t, j)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lock(a: &str) -> Program {
        Program::Instr(Instruction::Lock(a.into()))
    }
    fn unlock(a: &str) -> Program {
        Program::Instr(Instruction::Unlock(a.into()))
    }

    #[test]
    fn parses_mutex_pair() {
        let s = parse("P(a).V(a) | P(a).V(a)").unwrap();
        let q = Program::Seq(vec![lock("a"), unlock("a")]);
        assert_eq!(s.program, Program::Par(vec![q.clone(), q]));
        assert_eq!(s.capacities().get("a"), 1);
    }

    #[test]
    fn parses_capacity_header() {
        let s = parse("#cap a 2\nP(a).V(a)|P(a).V(a)|P(a).V(a)").unwrap();
        assert_eq!(s.capacities().get("a"), 2);
        assert!(matches!(&s.program, Program::Par(v) if v.len() == 3));
    }

    #[test]
    fn rejects_malformed() {
        assert!(matches!(parse("P(a"), Err(Error::Parse { .. })));
        assert!(matches!(parse("#cap a 1\n#cap a 2\n1"), Err(Error::DuplicateCapacityDecl { .. })));
        assert!(matches!(parse("#cap a 0\n1"), Err(Error::Parse { .. })));
        assert!(matches!(parse("P(a) V(a)"), Err(Error::Parse { .. })));
    }

    #[test]
    fn error_positions_are_one_based() {
        match parse("P(a).\n  V(") {
            Err(Error::Parse { line, col, .. }) => assert_eq!((line, col), (2, 5)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn precedence() {
        let s = parse("P(a) + P(b).V(b) | 1.V(c)*").unwrap();
        let expect = Program::Par(vec![
            Program::Choice(vec![lock("a"), Program::Seq(vec![lock("b"), unlock("b")])]),
            Program::Star(Box::new(unlock("c"))),
        ]);
        assert_eq!(s.program, expect);
    }

    #[test]
    fn units_vanish() {
        assert_eq!(parse("1.P(a).1").unwrap().program, lock("a"));
        assert_eq!(parse("1 | 1").unwrap().program, Program::Unit);
        assert_eq!(parse("(1)*").unwrap().program, Program::Unit);
    }

    #[test]
    fn assignments() {
        let s = parse("[a:=a-1].[b := b/2].[c:=0.25].[d:=e]").unwrap();
        assert_eq!(s.program.to_string(), "[a:=a-1].[b:=b/2].[c:=0.25].[d:=e]");
        assert!(parse("[a:=a/0]").is_err());
    }

    #[test]
    fn decimal_rendering() {
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(fmt_rational(&r(1, 2)), "0.5");
        assert_eq!(fmt_rational(&r(-3, 8)), "-0.375");
        assert_eq!(fmt_rational(&r(7, 1)), "7");
        assert_eq!(fmt_rational(&r(1, 3)), "1/3");
        assert_eq!(parse_decimal("-0.125"), Some(r(-1, 8)));
    }

    #[test]
    fn normalize_shapes() {
        let p = parse("P(a).V(a) | P(b).V(b)").unwrap().program;
        let alts = normalize(&p).unwrap();
        assert_eq!(alts.len(), 1);
        assert_eq!(alts[0].threads.len(), 2);
        assert_eq!(alts[0].mode, Mode::LoopFree);

        let p = parse("(P(a).[a:=a-1].V(a))* | (P(a).[a:=a/2].V(a))*").unwrap().program;
        let alts = normalize(&p).unwrap();
        assert_eq!(alts[0].mode, Mode::AllStarred);
        assert_eq!(alts[0].threads[0].instrs.len(), 3);

        for bad in ["P(a).V(a)*", "(P(a) | P(b)).V(a)", "P(a)* | P(b)", "((P(a))*)*.P(b)", "(P(a) + P(b))*"] {
            let p = parse(bad).unwrap().program;
            assert!(matches!(normalize(&p), Err(Error::UnsupportedShape(_))), "{bad}");
        }
    }

    #[test]
    fn choice_distribution_counts() {
        let p = parse("(P(a) + P(b) + P(c)) | (P(d) + P(e))").unwrap().program;
        assert_eq!(normalize(&p).unwrap().len(), 6);
        let p = parse("(P(a) + P(b)).(V(a) + V(b))").unwrap().program;
        assert_eq!(normalize(&p).unwrap().len(), 4);
        let p = parse("(1+1).(1+1).(1+1)").unwrap().program;
        assert!(normalize_with_cap(&p, 4).is_ok());
    }

    #[test]
    fn choice_cap() {
        let text = vec!["(P(a) + P(b))"; 11].join(".");
        let p = parse(&text).unwrap().program;
        assert!(matches!(normalize(&p), Err(Error::UnsupportedShape(_))));
    }

    #[test]
    fn intervals() {
        let t = ThreadProgram {
            instrs: parse("P(a).V(a).P(b).V(b)").unwrap().program_instrs(),
            looped: false,
        };
        let prof = lock_intervals(&t, 0).unwrap();
        assert_eq!(prof[&(0, "a".into())], vec![Hold { s: 1, t: Coord::Fin(2) }]);
        assert_eq!(prof[&(0, "b".into())], vec![Hold { s: 3, t: Coord::Fin(4) }]);

        let t = ThreadProgram { instrs: vec![Instruction::Lock("a".into())], looped: false };
        assert_eq!(lock_intervals(&t, 0).unwrap()[&(0, "a".into())], vec![Hold { s: 1, t: Coord::Inf }]);

        let t = ThreadProgram { instrs: vec![Instruction::Unlock("a".into())], looped: false };
        assert!(matches!(lock_intervals(&t, 0), Err(Error::UnmatchedUnlock { .. })));

        let t = ThreadProgram {
            instrs: vec![Instruction::Lock("a".into()), Instruction::Lock("a".into())],
            looped: false,
        };
        assert!(matches!(lock_intervals(&t, 0), Err(Error::NestedRelock { .. })));
    }

    impl Source {
        fn program_instrs(&self) -> Vec<Instruction> {
            normalize(&self.program).unwrap()[0].threads[0].instrs.clone()
        }
    }
}
