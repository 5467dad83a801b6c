//! Forbidden hyperrectangles of a loop-free program and their downward
//! extensions.

use std::collections::BTreeMap;
use std::fmt;

use itertools::Itertools;
use num::rational::Rational64;
use serde::Serialize;

use crate::error::Result;
use crate::lang::{profile, Capacities, Coord, Hold, ThreadProgram};

/// Holes `R^i`: dimension `j` of hole `i` is the open interval
/// `(lo[i][j], hi[i][j])`, closed at 0 when `lo[i][j] = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HoleGrid {
    pub n: usize,
    pub lengths: Vec<u32>,
    pub lo: Vec<Vec<u32>>,
    pub hi: Vec<Vec<Coord>>,
    /// Resources whose conflicts produced each hole (several after merging).
    pub origins: Vec<Vec<String>>,
}

/// Upper bound of a box interval. `Wide` is `[.., end[` (open at the end
/// face), `Inf` is closed at the end face.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Up {
    Fin(u32),
    Wide,
    Inf,
}

impl From<Coord> for Up {
    fn from(c: Coord) -> Up {
        match c {
            Coord::Fin(v) => Up::Fin(v),
            Coord::Inf => Up::Inf,
        }
    }
}

/// A downward-extended hyperrectangle: `]lo, up[` in the special dimension
/// and `[0, up[` in every other one.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rect {
    pub special: Option<(usize, u32)>,
    pub up: Vec<Up>,
}

/// One coordinate interval in doubled or quadrupled units.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Span {
    /// Open lower bound; `None` is the closed bound 0.
    pub lo: Option<u32>,
    pub up: Up,
}

impl Span {
    /// Membership of `x` given in units of `1/scale`, for a dimension of extent `len`.
    pub fn contains(&self, x: u32, scale: u32, len: u32) -> bool {
        let above = match self.lo {
            Some(l) => x > l * scale,
            None => true,
        };
        above
            && match self.up {
                Up::Fin(y) => x < y * scale,
                Up::Wide => x < len * scale,
                Up::Inf => true,
            }
    }

    /// Whether the closed segment `[a, b]` (units `1/scale`) meets the interval.
    pub fn meets(&self, a: u32, b: u32, scale: u32, len: u32) -> bool {
        let above = match self.lo {
            Some(l) => b > l * scale,
            None => true,
        };
        above
            && match self.up {
                Up::Fin(y) => a < y * scale,
                Up::Wide => a < len * scale,
                Up::Inf => true,
            }
    }
}

impl Rect {
    pub fn dims(&self) -> usize {
        self.up.len()
    }

    pub fn special_dim(&self) -> Option<usize> {
        self.special.map(|(d, _)| d)
    }

    pub(crate) fn span(&self, d: usize) -> Span {
        let lo = match self.special {
            Some((s, l)) if s == d => Some(l),
            _ => None,
        };
        Span { lo, up: self.up[d] }
    }

    /// Containment of the point sets.
    pub fn contains_rect(&self, other: &Rect) -> bool {
        (0..self.dims()).all(|d| {
            let (a, b) = (other.span(d), self.span(d));
            let lower = match (a.lo, b.lo) {
                (_, None) => true,
                (Some(x), Some(y)) => x >= y,
                (None, Some(_)) => false,
            };
            lower && a.up <= b.up
        })
    }

    /// Widens dimension `j` to `[0, end[`.
    pub fn widened(&self, j: usize) -> Rect {
        let mut r = self.clone();
        r.up[j] = Up::Wide;
        r
    }
}

fn fmt_up(u: Up) -> String {
    match u {
        Up::Fin(v) => format!("{v}["),
        Up::Wide => "inf[".into(),
        Up::Inf => "inf]".into(),
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = (0..self.dims())
            .map(|d| {
                let s = self.span(d);
                match s.lo {
                    Some(l) => format!("]{l},{}", fmt_up(s.up)),
                    None => format!("[0,{}", fmt_up(s.up)),
                }
            })
            .collect();
        write!(f, "{}", parts.join("x"))
    }
}

impl HoleGrid {
    pub fn l(&self) -> usize {
        self.lo.len()
    }

    /// Boundary matrix entry: false iff the hole touches 0 in dimension `j`.
    pub fn boundary(&self, i: usize, j: usize) -> bool {
        self.lo[i][j] > 0
    }

    pub(crate) fn hole_span(&self, i: usize, d: usize) -> Span {
        let lo = if self.lo[i][d] == 0 { None } else { Some(self.lo[i][d]) };
        Span { lo, up: self.hi[i][d].into() }
    }

    fn contains_hole(&self, outer: usize, inner: usize) -> bool {
        (0..self.n).all(|j| self.lo[outer][j] <= self.lo[inner][j] && self.hi[inner][j] <= self.hi[outer][j])
    }
}

impl fmt::Display for HoleGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.l() {
            let dims: Vec<String> = (0..self.n)
                .map(|j| {
                    if self.lo[i][j] == 0 {
                        format!("[0,{}]", self.hi[i][j])
                    } else {
                        format!("]{},{}[", self.lo[i][j], self.hi[i][j])
                    }
                })
                .collect();
            writeln!(f, "{i}: {} ({})", dims.join("x"), self.origins[i].join(","))?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct HoleJson {
    lo: Vec<u32>,
    hi: Vec<String>,
    origins: Vec<String>,
}

#[derive(Serialize)]
struct GridJson {
    threads: usize,
    holes: usize,
    lengths: Vec<u32>,
    rects: Vec<HoleJson>,
}

impl HoleGrid {
    pub fn to_json(&self) -> serde_json::Value {
        let g = GridJson {
            threads: self.n,
            holes: self.l(),
            lengths: self.lengths.clone(),
            rects: (0..self.l())
                .map(|i| HoleJson {
                    lo: self.lo[i].clone(),
                    hi: self.hi[i].iter().map(|c| c.to_string()).collect(),
                    origins: self.origins[i].clone(),
                })
                .collect(),
        };
        serde_json::to_value(g).expect("grid serializes")
    }
}

pub fn build_holes(threads: &[ThreadProgram], caps: &Capacities) -> Result<HoleGrid> {
    build_holes_with(threads, caps, true)
}

/// One hole per resource, per choice of `κ+1` threads, per choice of one
/// holding interval in each chosen thread.
pub fn build_holes_with(threads: &[ThreadProgram], caps: &Capacities, subsume: bool) -> Result<HoleGrid> {
    let n = threads.len();
    let prof = profile(threads)?;
    let mut by_res: BTreeMap<&str, BTreeMap<usize, &Vec<Hold>>> = BTreeMap::new();
    for ((j, a), holds) in &prof {
        by_res.entry(a.as_str()).or_default().insert(*j, holds);
    }
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    let mut origins = Vec::new();
    for (a, holders) in &by_res {
        let k = caps.get(a) as usize + 1;
        if holders.len() < k {
            continue;
        }
        for tuple in holders.keys().copied().combinations(k) {
            for choice in tuple.iter().map(|j| holders[j].iter()).multi_cartesian_product() {
                let mut l = vec![0; n];
                let mut h = vec![Coord::Inf; n];
                for (j, hold) in tuple.iter().zip(choice) {
                    l[*j] = hold.s;
                    h[*j] = hold.t;
                }
                lo.push(l);
                hi.push(h);
                origins.push(vec![a.to_string()]);
            }
        }
    }
    let lengths = threads.iter().map(|t| t.instrs.len() as u32 + 1).collect();
    let mut g = HoleGrid { n, lengths, lo, hi, origins };
    if subsume {
        g = subsumption_reduce(g);
    }
    Ok(g)
}

/// Drops holes contained in another; among equal holes the first is kept
/// and inherits the others' origins.
pub fn subsumption_reduce(g: HoleGrid) -> HoleGrid {
    let l = g.l();
    let mut keep = vec![true; l];
    let mut extra: Vec<Vec<String>> = vec![vec![]; l];
    for i in 0..l {
        for k in 0..l {
            if i == k || !keep[k] || !g.contains_hole(k, i) {
                continue;
            }
            let equal = g.contains_hole(i, k);
            if !equal || k < i {
                keep[i] = false;
                if equal {
                    let o = g.origins[i].clone();
                    extra[k].extend(o);
                }
                break;
            }
        }
    }
    let mut out = HoleGrid { n: g.n, lengths: g.lengths.clone(), lo: vec![], hi: vec![], origins: vec![] };
    for i in 0..l {
        if keep[i] {
            out.lo.push(g.lo[i].clone());
            out.hi.push(g.hi[i].clone());
            let mut o = g.origins[i].clone();
            o.extend(extra[i].iter().cloned());
            o.sort();
            o.dedup();
            out.origins.push(o);
        }
    }
    out
}

/// `R̃^i_j`: hole `i` kept open in dimension `j`, extended down to 0 elsewhere.
pub fn extended_box(g: &HoleGrid, i: usize, j: usize) -> Rect {
    let special = if g.lo[i][j] > 0 { Some((j, g.lo[i][j])) } else { None };
    Rect { special, up: g.hi[i].iter().map(|&c| c.into()).collect() }
}

/// Open bounds, except that a bound at 0 is closed.
pub fn point_forbidden(g: &HoleGrid, p: &[Rational64]) -> bool {
    (0..g.l()).any(|i| {
        (0..g.n).all(|j| {
            let x = p[j];
            let lo = Rational64::from_integer(g.lo[i][j] as i64);
            let above = if g.lo[i][j] == 0 { x >= lo } else { x > lo };
            let below = match g.hi[i][j] {
                Coord::Fin(y) => x < Rational64::from_integer(y as i64),
                Coord::Inf => true,
            };
            above && below
        })
    })
}
