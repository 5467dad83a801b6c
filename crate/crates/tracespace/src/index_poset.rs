//! Dead matrices, maximal alive matrices, connexity components and
//! representative interleavings.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{extended_box, HoleGrid, Rect, Span, Up};
use crate::lang::{Alternative, Capacities, Coord, ThreadProgram};

/// An `l × n` boolean matrix; row `i` is a bitset over columns, `n ≤ 64`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SchedMatrix {
    n: usize,
    rows: Vec<u64>,
}

impl SchedMatrix {
    pub fn zeros(l: usize, n: usize) -> Self {
        assert!(n <= 64, "at most 64 threads");
        SchedMatrix { n, rows: vec![0; l] }
    }

    pub fn ones(l: usize, n: usize) -> Self {
        let mut m = Self::zeros(l, n);
        let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        m.rows.iter_mut().for_each(|r| *r = full);
        m
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn row_bits(&self, i: usize) -> u64 {
        self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i] >> j & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        if v {
            self.rows[i] |= 1 << j;
        } else {
            self.rows[i] &= !(1 << j);
        }
    }

    pub fn with(&self, i: usize, j: usize, v: bool) -> Self {
        let mut m = self.clone();
        m.set(i, j, v);
        m
    }

    /// Pointwise order.
    pub fn le(&self, other: &Self) -> bool {
        self.rows.iter().zip(&other.rows).all(|(a, b)| a & !b == 0)
    }

    pub fn meet(&self, other: &Self) -> Self {
        SchedMatrix { n: self.n, rows: self.rows.iter().zip(&other.rows).map(|(a, b)| a & b).collect() }
    }

    pub fn has_zero_row(&self) -> bool {
        self.rows.iter().any(|&r| r == 0)
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|&r| r == 0)
    }

    pub fn ones_iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(move |(i, &r)| (0..self.n).filter(move |j| r >> j & 1 == 1).map(move |j| (i, j)))
    }

    /// Stacks row blocks of equal width.
    pub fn stack(blocks: &[SchedMatrix]) -> Self {
        let n = blocks.first().map_or(0, |b| b.n);
        SchedMatrix { n, rows: blocks.iter().flat_map(|b| b.rows.iter().copied()).collect() }
    }

    pub fn block(&self, rows: std::ops::Range<usize>) -> Self {
        SchedMatrix { n: self.n, rows: self.rows[rows].to_vec() }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        SchedMatrix { n: self.n, rows: idx.iter().map(|&i| self.rows[i]).collect() }
    }
}

/// Rows as `0/1` strings separated by `/`, column 0 first.
impl fmt::Display for SchedMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> =
            self.rows.iter().map(|r| (0..self.n).map(|j| if r >> j & 1 == 1 { '1' } else { '0' }).collect()).collect();
        write!(f, "{}", rows.join("/"))
    }
}

impl FromStr for SchedMatrix {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let rows: Vec<&str> = s.split('/').collect();
        let n = rows[0].len();
        let mut m = SchedMatrix::zeros(rows.len(), n);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(format!("ragged matrix `{s}`"));
            }
            for (j, c) in r.chars().enumerate() {
                match c {
                    '0' => {}
                    '1' => m.set(i, j, true),
                    _ => return Err(format!("bad matrix digit `{c}`")),
                }
            }
        }
        Ok(m)
    }
}

/// Column `j` holds the chosen hole, or `None` when the column is zero.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DeadMatrix {
    pub cols: Vec<Option<usize>>,
}

impl DeadMatrix {
    pub fn to_matrix(&self, l: usize) -> SchedMatrix {
        let mut m = SchedMatrix::zeros(l, self.cols.len());
        for (j, c) in self.cols.iter().enumerate() {
            if let Some(i) = c {
                m.set(*i, j, true);
            }
        }
        m
    }

    /// Distinct holes used.
    pub fn rows(&self) -> BTreeSet<usize> {
        self.cols.iter().flatten().copied().collect()
    }
}

/// Entries that may be set: the extension of hole `i` along `j` is only
/// meaningful when the hole does not touch 0 in dimension `j`.
pub fn mask(g: &HoleGrid) -> SchedMatrix {
    let mut m = SchedMatrix::zeros(g.l(), g.n);
    for i in 0..g.l() {
        for j in 0..g.n {
            m.set(i, j, g.boundary(i, j));
        }
    }
    m
}

// ---------------------------------------------------------------------------
// Dead matrices

#[derive(Clone, Copy, Debug, Default)]
pub struct DeadOptions {
    /// Visit dimensions by descending number of usable holes.
    pub sort_dims: bool,
    pub parallel: bool,
}

fn lt(x: u32, c: Coord) -> bool {
    match c {
        Coord::Fin(y) => x < y,
        Coord::Inf => true,
    }
}

struct DeadSearch<'a> {
    g: &'a HoleGrid,
    order: Vec<usize>,
}

impl DeadSearch<'_> {
    /// `y[d]` is the minimum of `hi[i][d]` over the holes chosen so far.
    fn go(&self, depth: usize, cols: &mut Vec<Option<usize>>, y: &[Coord], out: &mut Vec<DeadMatrix>) {
        let g = self.g;
        if depth == self.order.len() {
            if cols.iter().any(Option::is_some) {
                out.push(DeadMatrix { cols: cols.clone() });
            }
            return;
        }
        let j = self.order[depth];
        if y[j] == Coord::Inf {
            cols[j] = None;
            self.go(depth + 1, cols, y, out);
        }
        for i in self.candidates(j, y) {
            let ny: Vec<Coord> = y.iter().zip(&g.hi[i]).map(|(a, b)| *a.min(b)).collect();
            cols[j] = Some(i);
            let ok = self.order[..=depth].iter().all(|&d| match cols[d] {
                Some(k) => lt(g.lo[k][d], ny[d]),
                None => ny[d] == Coord::Inf,
            });
            if ok {
                self.go(depth + 1, cols, &ny, out);
            }
        }
        cols[j] = None;
    }

    fn candidates(&self, j: usize, y: &[Coord]) -> Vec<usize> {
        (0..self.g.l()).filter(|&i| self.g.boundary(i, j) && lt(self.g.lo[i][j], y[j])).collect()
    }
}

pub fn enumerate_dead(g: &HoleGrid) -> Vec<DeadMatrix> {
    enumerate_dead_with(g, DeadOptions::default())
}

/// Column-by-column search with the pruning rules: a chosen entry needs
/// `x^i_j < y_j`, a zero column needs `y_j = ∞`, and every new hole is
/// re-checked against the columns already fixed.
pub fn enumerate_dead_with(g: &HoleGrid, opts: DeadOptions) -> Vec<DeadMatrix> {
    if g.l() == 0 || g.n == 0 {
        return vec![];
    }
    let mut order: Vec<usize> = (0..g.n).collect();
    if opts.sort_dims {
        let count = |j: usize| (0..g.l()).filter(|&i| g.boundary(i, j)).count();
        order.sort_by_key(|&j| std::cmp::Reverse(count(j)));
    }
    let search = DeadSearch { g, order };
    let y0 = vec![Coord::Inf; g.n];
    let mut out = if opts.parallel {
        // Split on the first column's choice; concatenation keeps the order.
        let j = search.order[0];
        let mut firsts: Vec<Option<usize>> = vec![None];
        firsts.extend(search.candidates(j, &y0).into_iter().map(Some));
        firsts
            .par_iter()
            .map(|first| {
                let mut cols = vec![None; g.n];
                let mut out = Vec::new();
                let y: Vec<Coord> = match first {
                    Some(i) => g.hi[*i].clone(),
                    None => y0.clone(),
                };
                cols[j] = *first;
                if first.is_none() || lt(g.lo[first.unwrap()][j], y[j]) {
                    search.go(1, &mut cols, &y, &mut out);
                }
                out
            })
            .flatten()
            .collect()
    } else {
        let mut out = Vec::new();
        search.go(0, &mut vec![None; g.n], &y0, &mut out);
        out
    };
    out.sort();
    out
}

/// A box pool entry: the box and, if gated, the matrix entry that enables it.
#[derive(Clone, Debug)]
pub struct PoolBox {
    pub rect: Rect,
    pub tag: Option<(usize, usize)>,
}

fn lt_up(x: u32, u: Up) -> bool {
    match u {
        Up::Fin(y) => x < y,
        Up::Wide | Up::Inf => true,
    }
}

struct SelectionSearch<'a> {
    pool: &'a [PoolBox],
    n: usize,
    by_dim: Vec<Vec<usize>>,
    first_only: bool,
}

impl SelectionSearch<'_> {
    fn go(&self, j: usize, chosen: &mut Vec<Option<usize>>, y: &[Up], out: &mut BTreeSet<Vec<(usize, usize)>>) -> bool {
        if j == self.n {
            if chosen.iter().any(Option::is_some) {
                let mut tags: Vec<(usize, usize)> =
                    chosen.iter().flatten().filter_map(|&k| self.pool[k].tag).collect();
                tags.sort();
                tags.dedup();
                out.insert(tags);
                return self.first_only;
            }
            return false;
        }
        if y[j] == Up::Inf {
            chosen[j] = None;
            if self.go(j + 1, chosen, y, out) {
                return true;
            }
        }
        for &k in &self.by_dim[j] {
            let b = &self.pool[k].rect;
            let (_, lo) = b.special.expect("pool boxes in by_dim are special");
            if !lt_up(lo, y[j]) {
                continue;
            }
            let ny: Vec<Up> = y.iter().zip(&b.up).map(|(a, c)| *a.min(c)).collect();
            chosen[j] = Some(k);
            let ok = (0..=j).all(|d| match chosen[d] {
                Some(c) => lt_up(self.pool[c].rect.special.unwrap().1, ny[d]),
                None => ny[d] == Up::Inf,
            });
            if ok && self.go(j + 1, chosen, &ny, out) {
                return true;
            }
        }
        chosen[j] = None;
        false
    }
}

/// Tag sets of all deadlock selections: one box special in `j` for each
/// `j ∈ J`, lower bounds below every chosen upper bound, and every
/// dimension outside `J` reaching the closed end in all chosen boxes.
/// A box with no special dimension contains the origin and is dead alone.
pub fn dead_selections(pool: &[PoolBox], n: usize, first_only: bool) -> BTreeSet<Vec<(usize, usize)>> {
    let mut out = BTreeSet::new();
    for b in pool {
        if b.rect.special.is_none() {
            out.insert(b.tag.into_iter().collect::<Vec<_>>());
            if first_only {
                return out;
            }
        }
    }
    let mut by_dim = vec![Vec::new(); n];
    for (k, b) in pool.iter().enumerate() {
        if let Some((d, _)) = b.rect.special {
            by_dim[d].push(k);
        }
    }
    let s = SelectionSearch { pool, n, by_dim, first_only };
    s.go(0, &mut vec![None; n], &vec![Up::Inf; n], &mut out);
    out
}

/// True iff the complement of the boxes admits a total path.
pub fn is_alive(boxes: &[Rect], n: usize) -> bool {
    let pool: Vec<PoolBox> = boxes.iter().map(|r| PoolBox { rect: r.clone(), tag: None }).collect();
    dead_selections(&pool, n, true).is_empty()
}

/// Extended boxes `R̃^i_j` for the set entries of `m`.
pub fn boxes_of(g: &HoleGrid, m: &SchedMatrix) -> Vec<Rect> {
    m.ones_iter().map(|(i, j)| extended_box(g, i, j)).collect()
}

// ---------------------------------------------------------------------------
// Maximal alive matrices

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Variant {
    #[default]
    Exact,
    Superset,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AliveStats {
    /// Largest intermediate candidate set.
    pub peak: usize,
}

/// Keeps only the minimal elements.
pub fn minimal(ms: &[SchedMatrix]) -> Vec<SchedMatrix> {
    let mut sorted: Vec<SchedMatrix> = ms.to_vec();
    sorted.sort_by_key(|m| m.rows.iter().map(|r| r.count_ones()).sum::<u32>());
    sorted.dedup();
    let mut out: Vec<SchedMatrix> = Vec::new();
    for m in sorted {
        if !out.iter().any(|o| o.le(&m)) {
            out.push(m);
        }
    }
    out.sort();
    out
}

/// Maximal matrices below `top` avoiding every `dead` matrix, restricted to
/// matrices without a zero row. Starting from `top`, each dead matrix `D`
/// replaces every current `M ≥ D` by the `M^¬(i,j)` with `D(i,j) = 1`.
pub fn max_alive_below(top: &SchedMatrix, dead: &[SchedMatrix], variant: Variant) -> (Vec<SchedMatrix>, AliveStats) {
    let mut stats = AliveStats::default();
    if top.has_zero_row() {
        return (vec![], stats);
    }
    let dead = minimal(dead);
    let mut cur = vec![top.clone()];
    for d in &dead {
        let (bad, good): (Vec<SchedMatrix>, Vec<SchedMatrix>) = cur.into_iter().partition(|m| d.le(m));
        if bad.is_empty() {
            cur = good;
            continue;
        }
        let mut cands: Vec<SchedMatrix> = Vec::new();
        for m in &bad {
            for (i, j) in d.ones_iter() {
                let c = m.with(i, j, false);
                if !c.has_zero_row() {
                    cands.push(c);
                }
            }
        }
        cands.sort();
        cands.dedup();
        match variant {
            Variant::Exact => {
                let kept: Vec<SchedMatrix> = cands
                    .par_iter()
                    .filter(|&c: &&SchedMatrix| !good.iter().any(|g| c.le(g)) && !cands.iter().any(|o| o != c && c.le(o)))
                    .cloned()
                    .collect();
                cur = good;
                cur.extend(kept);
            }
            Variant::Superset => {
                cur = good;
                cur.extend(cands);
                cur.sort();
                cur.dedup();
            }
        }
        stats.peak = stats.peak.max(cur.len());
    }
    cur.sort();
    (cur, stats)
}

/// Maximal alive matrices in `M^R`; empty for a grid without holes.
pub fn max_alive(g: &HoleGrid, dead: &[DeadMatrix], variant: Variant) -> Vec<SchedMatrix> {
    max_alive_with_stats(g, dead, variant).0
}

pub fn max_alive_with_stats(g: &HoleGrid, dead: &[DeadMatrix], variant: Variant) -> (Vec<SchedMatrix>, AliveStats) {
    if g.l() == 0 {
        return (vec![], AliveStats::default());
    }
    let d: Vec<SchedMatrix> = dead.iter().map(|d| d.to_matrix(g.l())).collect();
    max_alive_below(&mask(g), &d, variant)
}

/// The whole index poset: every matrix with nonzero rows below some given
/// maximal one. `None` when it would exceed `cap` elements.
pub fn alive_poset(maximal: &[SchedMatrix], cap: usize) -> Option<Vec<SchedMatrix>> {
    let mut out: BTreeSet<SchedMatrix> = BTreeSet::new();
    for m in maximal {
        let subsets: Vec<Vec<u64>> = m.rows.iter().map(|&r| nonempty_submasks(r)).collect();
        let total: usize = subsets.iter().try_fold(1usize, |acc, s| acc.checked_mul(s.len()))?;
        if total > cap {
            return None;
        }
        let mut idx = vec![0usize; subsets.len()];
        loop {
            out.insert(SchedMatrix { n: m.n, rows: idx.iter().zip(&subsets).map(|(&k, s)| s[k]).collect() });
            if out.len() > cap {
                return None;
            }
            let mut p = 0;
            while p < idx.len() {
                idx[p] += 1;
                if idx[p] < subsets[p].len() {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
            if p == idx.len() {
                break;
            }
        }
    }
    Some(out.into_iter().collect())
}

fn nonempty_submasks(r: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut s = r;
    while s != 0 {
        out.push(s);
        s = (s - 1) & r;
    }
    out.sort();
    out
}

// ---------------------------------------------------------------------------
// Connexity

pub fn connected(m: &SchedMatrix, n: &SchedMatrix) -> bool {
    !m.meet(n).has_zero_row()
}

/// Groups of indices under the transitive closure of `connected`, ordered
/// by smallest member. An empty list over a hole-free grid is one group.
pub fn components(ms: &[SchedMatrix], l: usize) -> Vec<Vec<usize>> {
    if ms.is_empty() {
        return if l == 0 { vec![vec![]] } else { vec![] };
    }
    let mut parent: Vec<usize> = (0..ms.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    let edges: Vec<(usize, usize)> = (0..ms.len())
        .into_par_iter()
        .flat_map_iter(|a| ((a + 1)..ms.len()).filter(move |&b| connected(&ms[a], &ms[b])).map(move |b| (a, b)))
        .collect();
    for (a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; ms.len()];
    for k in 0..ms.len() {
        let r = find(&mut parent, k);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(vec![]);
        }
        groups[slot[r]].push(k);
    }
    groups
}

// ---------------------------------------------------------------------------
// Representatives

/// Greedy total path through `X_M`. Counters count executed instructions;
/// a thread with `e` executed instructions sits at coordinate `e + 1/2`, so a
/// step crosses exactly the coordinate of the instruction it executes.
pub fn representative(g: &HoleGrid, m: &SchedMatrix, threads: &[ThreadProgram]) -> Result<Vec<String>> {
    let n = g.n;
    let mut regions: Vec<Vec<Span>> = (0..g.l()).map(|i| (0..n).map(|d| g.hole_span(i, d)).collect()).collect();
    for (i, j) in m.ones_iter() {
        let b = extended_box(g, i, j);
        regions.push((0..n).map(|d| b.span(d)).collect());
    }
    let ends: Vec<u32> = threads.iter().map(|t| t.instrs.len() as u32).collect();
    let mut e = vec![0u32; n];
    let mut word = Vec::new();
    // doubled units: position of thread d is 2 e_d + 1
    let blocked = |e: &[u32], j: usize| {
        regions.iter().any(|r| {
            (0..n).all(|d| {
                if d == j {
                    r[d].meets(2 * e[d] + 1, 2 * e[d] + 3, 2, g.lengths[d])
                } else {
                    r[d].contains(2 * e[d] + 1, 2, g.lengths[d])
                }
            })
        })
    };
    while e != ends {
        let Some(j) = (0..n).find(|&j| e[j] < ends[j] && !blocked(&e, j)) else {
            return Err(Error::StuckRepresentative(e));
        };
        word.push(format!("{j}:{}", threads[j].instrs[e[j] as usize]));
        e[j] += 1;
    }
    Ok(word)
}

// ---------------------------------------------------------------------------
// Pipeline

#[derive(Clone, Debug, Default)]
pub struct ScheduleOptions {
    pub variant: Variant,
    pub dead: DeadOptions,
    /// Keep holes contained in other holes.
    pub no_subsumption: bool,
    /// Largest index poset listed in full.
    pub poset_cap: usize,
}

impl ScheduleOptions {
    pub fn new() -> Self {
        ScheduleOptions { poset_cap: 4096, ..Default::default() }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Component {
    pub matrices: Vec<String>,
    pub representative: Vec<String>,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct ScheduleReport {
    pub threads: usize,
    pub holes: usize,
    pub dead: Vec<String>,
    /// The index poset when small enough, otherwise its maximal elements.
    pub alive: Vec<String>,
    pub alive_is_poset: bool,
    pub maximal: Vec<String>,
    pub components: Vec<Component>,
    pub count: usize,
    pub peak_candidates: usize,
}

pub fn schedulings(alt: &Alternative, caps: &Capacities) -> Result<ScheduleReport> {
    schedulings_with(alt, caps, &ScheduleOptions::new())
}

pub fn schedulings_with(alt: &Alternative, caps: &Capacities, opts: &ScheduleOptions) -> Result<ScheduleReport> {
    let g = crate::geometry::build_holes_with(&alt.threads, caps, !opts.no_subsumption)?;
    let dead = enumerate_dead_with(&g, opts.dead);
    let (mut maximal, stats) = max_alive_with_stats(&g, &dead, opts.variant);
    if opts.variant == Variant::Superset {
        // components only need maximal elements
        let (exact, _) = max_alive_with_stats(&g, &dead, Variant::Exact);
        debug_assert!(exact.iter().all(|m| maximal.contains(m)));
        maximal = exact;
    }
    let groups = components(&maximal, g.l());
    let mut comps = Vec::new();
    for grp in &groups {
        let (mats, rep) = if g.l() == 0 {
            (vec![String::new()], representative(&g, &SchedMatrix::zeros(0, g.n), &alt.threads)?)
        } else {
            (grp.iter().map(|&k| maximal[k].to_string()).collect(), representative(&g, &maximal[grp[0]], &alt.threads)?)
        };
        comps.push(Component { matrices: mats, representative: rep });
    }
    let poset = alive_poset(&maximal, opts.poset_cap);
    let alive_is_poset = poset.is_some();
    let alive = poset.unwrap_or_else(|| maximal.clone());
    Ok(ScheduleReport {
        threads: g.n,
        holes: g.l(),
        dead: dead.iter().map(|d| d.to_matrix(g.l()).to_string()).collect(),
        alive: alive.iter().map(ToString::to_string).collect(),
        alive_is_poset,
        maximal: maximal.iter().map(ToString::to_string).collect(),
        count: comps.len(),
        components: comps,
        peak_candidates: stats.peak,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{normalize, parse};

    fn setup(text: &str) -> (HoleGrid, Alternative) {
        let src = parse(text).unwrap();
        let alt = normalize(&src.program).unwrap().remove(0);
        (crate::geometry::build_holes(&alt.threads, &src.capacities()).unwrap(), alt)
    }

    fn mats(v: &[&str]) -> Vec<SchedMatrix> {
        let mut out: Vec<SchedMatrix> = v.iter().map(|s| s.parse().unwrap()).collect();
        out.sort();
        out
    }

    const SWISS: &str = "P(a).V(a).P(b).V(b) | P(b).V(b).P(a).V(a)";

    #[test]
    fn matrix_text_roundtrip() {
        let m: SchedMatrix = "10/01".parse().unwrap();
        assert!(m.get(0, 0) && m.get(1, 1) && !m.get(0, 1));
        assert_eq!(m.to_string(), "10/01");
        assert!("1/01".parse::<SchedMatrix>().is_err());
    }

    #[test]
    fn swiss_flag_dead() {
        let (g, _) = setup(SWISS);
        let dead: Vec<SchedMatrix> = enumerate_dead(&g).iter().map(|d| d.to_matrix(2)).collect();
        let mut dead = dead;
        dead.sort();
        assert_eq!(dead, mats(&["11/00", "00/11", "10/01"]));
    }

    #[test]
    fn swiss_flag_alive() {
        let (g, _) = setup(SWISS);
        let dead = enumerate_dead(&g);
        assert_eq!(max_alive(&g, &dead, Variant::Exact), mats(&["01/01", "01/10", "10/10"]));
        let sup = max_alive(&g, &dead, Variant::Superset);
        assert!(mats(&["01/01", "01/10", "10/10"]).iter().all(|m| sup.contains(m)));
    }

    #[test]
    fn philosophers_two_dead() {
        let (g, _) = setup("P(a0).P(a1).V(a0).V(a1) | P(a1).P(a0).V(a1).V(a0)");
        let mut dead: Vec<SchedMatrix> = enumerate_dead(&g).iter().map(|d| d.to_matrix(2)).collect();
        dead.sort();
        assert_eq!(dead, mats(&["11/00", "00/11", "10/01", "01/10"]));
    }

    #[test]
    fn no_holes() {
        let (g, alt) = setup("P(a).V(a) | P(b).V(b)");
        assert!(enumerate_dead(&g).is_empty());
        assert!(max_alive(&g, &[], Variant::Exact).is_empty());
        assert_eq!(components(&[], 0).len(), 1);
        let word = representative(&g, &SchedMatrix::zeros(0, 2), &alt.threads).unwrap();
        assert_eq!(word, vec!["0:P(a)", "0:V(a)", "1:P(b)", "1:V(b)"]);
    }

    #[test]
    fn cube_poset() {
        let (g, _) = setup("#cap a 2\nP(a).V(a)|P(a).V(a)|P(a).V(a)");
        let dead = enumerate_dead(&g);
        assert_eq!(dead.len(), 1);
        let max = max_alive(&g, &dead, Variant::Exact);
        assert_eq!(max, mats(&["011", "101", "110"]));
        let poset = alive_poset(&max, 100).unwrap();
        assert_eq!(poset, mats(&["100", "010", "001", "011", "101", "110"]));
        assert_eq!(components(&poset, 1).len(), 1);
    }

    #[test]
    fn connexity() {
        let a: SchedMatrix = "011".parse().unwrap();
        let b: SchedMatrix = "101".parse().unwrap();
        assert!(connected(&a, &b));
        assert_eq!(a.meet(&b).to_string(), "001");
        assert!(!connected(&"10/10".parse().unwrap(), &"01/01".parse().unwrap()));
        assert_eq!(components(&mats(&["01/01", "01/10", "10/10"]), 2).len(), 3);
    }

    #[test]
    fn alive_checks() {
        let (g, _) = setup(SWISS);
        let m5: SchedMatrix = "10/01".parse().unwrap();
        assert!(!is_alive(&boxes_of(&g, &m5), 2));
        assert!(is_alive(&[], 2));
        let (g, _) = setup("P(a).V(a) | P(a).V(a)");
        assert!(is_alive(&boxes_of(&g, &"10".parse().unwrap()), 2));
        assert!(!is_alive(&boxes_of(&g, &"11".parse().unwrap()), 2));
    }

    #[test]
    fn representatives_of_square() {
        let (g, alt) = setup("P(a).V(a) | P(a).V(a)");
        let w = representative(&g, &"10".parse().unwrap(), &alt.threads).unwrap();
        assert_eq!(w.join(" "), "1:P(a) 1:V(a) 0:P(a) 0:V(a)");
        let w = representative(&g, &"01".parse().unwrap(), &alt.threads).unwrap();
        assert_eq!(w.join(" "), "0:P(a) 0:V(a) 1:P(a) 1:V(a)");
    }

    #[test]
    fn swiss_report() {
        let (_, alt) = setup(SWISS);
        let r = schedulings(&alt, &Capacities::default()).unwrap();
        assert_eq!(r.count, 3);
        let words: BTreeSet<Vec<String>> = r.components.iter().map(|c| c.representative.clone()).collect();
        assert_eq!(words.len(), 3);
    }

    #[test]
    fn deadlocking_pair_has_no_schedule() {
        let (_, alt) = setup("P(a) | P(a)");
        assert_eq!(schedulings(&alt, &Capacities::default()).unwrap().count, 0);
    }

    #[test]
    fn three_way_mutex() {
        let (_, alt) = setup("P(a).V(a)|P(a).V(a)|P(a).V(a)");
        assert_eq!(schedulings(&alt, &Capacities::default()).unwrap().count, 6);
    }

    #[test]
    fn parallel_and_sorted_dead_agree() {
        let (g, _) = setup("P(a).P(b).V(a).V(b) | P(b).P(c).V(b).V(c) | P(c).P(a).V(c).V(a)");
        let base = enumerate_dead(&g);
        assert_eq!(enumerate_dead_with(&g, DeadOptions { sort_dims: true, parallel: false }), base);
        assert_eq!(enumerate_dead_with(&g, DeadOptions { sort_dims: false, parallel: true }), base);
    }

    #[test]
    fn minimal_keeps_antichain() {
        let m = minimal(&mats(&["11/00", "10/00", "01/01", "11/01"]));
        assert_eq!(m, mats(&["10/00", "01/01"]));
    }
}
