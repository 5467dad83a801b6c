//! Brute-force reference semantics: explicit interleavings, their
//! permutation classes, dead matrices by exhaustive filtering, and a
//! grid search for total paths. Shares no algorithmic code with the
//! index-poset pipeline.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::geometry::{HoleGrid, Span};
use crate::index_poset::DeadMatrix;
use crate::lang::{Alternative, Capacities, Coord, Instruction};

pub const DEFAULT_RUN_CAP: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Run {
    /// `(thread, instruction index)` in execution order.
    pub word: Vec<(usize, usize)>,
    pub complete: bool,
}

impl Run {
    pub fn render(&self, alt: &Alternative) -> Vec<String> {
        self.word.iter().map(|&(j, k)| format!("{j}:{}", alt.threads[j].instrs[k])).collect()
    }
}

/// Holder counts per resource; the only state the capacity rule reads.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
struct Counts(BTreeMap<String, u32>);

impl Counts {
    /// Applies one instruction, or `None` when it would exceed a capacity.
    fn step(&self, ins: &Instruction, caps: &Capacities) -> Option<Counts> {
        let mut next = self.clone();
        match ins {
            Instruction::Lock(a) => {
                let c = next.0.entry(a.clone()).or_insert(0);
                if *c >= caps.get(a) {
                    return None;
                }
                *c += 1;
            }
            Instruction::Unlock(a) => {
                let c = next.0.entry(a.clone()).or_insert(0);
                *c = c.checked_sub(1)?;
            }
            Instruction::Assign(..) => {}
        }
        Some(next)
    }
}

/// All maximal interleavings under the capacity rule, depth first.
pub fn enumerate_runs(alt: &Alternative, caps: &Capacities, cap: usize) -> Result<Vec<Run>> {
    let n = alt.threads.len();
    let mut out = Vec::new();
    let mut pos = vec![0usize; n];
    let mut word = Vec::new();
    fn dfs(
        alt: &Alternative,
        caps: &Capacities,
        cap: usize,
        pos: &mut Vec<usize>,
        counts: &Counts,
        word: &mut Vec<(usize, usize)>,
        out: &mut Vec<Run>,
    ) -> Result<()> {
        let mut moved = false;
        for j in 0..pos.len() {
            let Some(ins) = alt.threads[j].instrs.get(pos[j]) else { continue };
            let Some(next) = counts.step(ins, caps) else { continue };
            moved = true;
            word.push((j, pos[j]));
            pos[j] += 1;
            dfs(alt, caps, cap, pos, &next, word, out)?;
            pos[j] -= 1;
            word.pop();
        }
        if !moved {
            if out.len() >= cap {
                return Err(Error::CapExceeded(format!("more than {cap} runs")));
            }
            let complete = pos.iter().zip(&alt.threads).all(|(p, t)| *p == t.instrs.len());
            out.push(Run { word: word.clone(), complete });
        }
        Ok(())
    }
    dfs(alt, caps, cap, &mut pos, &Counts::default(), &mut word, &mut out)?;
    Ok(out)
}

fn legal(alt: &Alternative, caps: &Capacities, word: &[(usize, usize)]) -> bool {
    let mut c = Counts::default();
    for &(j, k) in word {
        match c.step(&alt.threads[j].instrs[k], caps) {
            Some(n) => c = n,
            None => return false,
        }
    }
    true
}

/// Number of classes of complete runs under swapping adjacent actions of
/// different threads whenever the swapped run is also legal.
pub fn equiv_classes(alt: &Alternative, caps: &Capacities, runs: &[Run]) -> usize {
    let complete: Vec<&Run> = runs.iter().filter(|r| r.complete).collect();
    let index: HashMap<&[(usize, usize)], usize> =
        complete.iter().enumerate().map(|(k, r)| (r.word.as_slice(), k)).collect();
    let mut parent: Vec<usize> = (0..complete.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (k, r) in complete.iter().enumerate() {
        for p in 0..r.word.len().saturating_sub(1) {
            if r.word[p].0 == r.word[p + 1].0 {
                continue;
            }
            let mut w = r.word.clone();
            w.swap(p, p + 1);
            if !legal(alt, caps, &w) {
                continue;
            }
            let other = index[w.as_slice()];
            let (a, b) = (find(&mut parent, k), find(&mut parent, other));
            parent[a] = b;
        }
    }
    (0..complete.len()).map(|k| find(&mut parent, k)).collect::<BTreeSet<_>>().len()
}

/// Same count as [`equiv_classes`] without listing runs: classes of paths
/// to each state are merged along every commuting square, level by level.
pub fn count_classes(alt: &Alternative, caps: &Capacities) -> usize {
    let n = alt.threads.len();
    let lens: Vec<usize> = alt.threads.iter().map(|t| t.instrs.len()).collect();
    let mut stride = vec![1usize; n];
    for j in 1..n {
        stride[j] = stride[j - 1] * (lens[j - 1] + 1);
    }
    let total: usize = lens.iter().map(|l| l + 1).product();
    let decode = |mut s: usize| -> Vec<usize> {
        (0..n)
            .map(|j| {
                let v = s % (lens[j] + 1);
                s /= lens[j] + 1;
                v
            })
            .collect()
    };
    // legality of every lattice state
    let mut state_counts: Vec<Option<Counts>> = vec![None; total];
    let mut by_level: Vec<Vec<usize>> = vec![vec![]; lens.iter().sum::<usize>() + 1];
    for s in 0..total {
        let e = decode(s);
        by_level[e.iter().sum::<usize>()].push(s);
    }
    state_counts[0] = Some(Counts::default());
    for level in &by_level {
        for &s in level {
            let e = decode(s);
            for j in 0..n {
                if e[j] == 0 {
                    continue;
                }
                if let Some(c) = &state_counts[s - stride[j]] {
                    if let Some(next) = c.step(&alt.threads[j].instrs[e[j] - 1], caps) {
                        state_counts[s] = Some(next);
                        break;
                    }
                }
            }
        }
    }
    // node = (state, incoming direction, class root at predecessor)
    let mut parent: Vec<usize> = vec![0];
    let mut node_of: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let mut roots: Vec<Vec<usize>> = vec![vec![]; total];
    roots[0] = vec![0];
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for level in by_level.iter().skip(1) {
        for &t in level {
            if state_counts[t].is_none() {
                continue;
            }
            let e = decode(t);
            let mut mine = Vec::new();
            for j in 0..n {
                if e[j] == 0 || state_counts[t - stride[j]].is_none() {
                    continue;
                }
                for &c in &roots[t - stride[j]].clone() {
                    let id = parent.len();
                    parent.push(id);
                    node_of.insert((t, j, c), id);
                    mine.push(id);
                }
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    if e[i] == 0 || e[j] == 0 {
                        continue;
                    }
                    let (si, sj) = (t - stride[i], t - stride[j]);
                    let s0 = si - stride[j];
                    if state_counts[si].is_none() || state_counts[sj].is_none() || state_counts[s0].is_none() {
                        continue;
                    }
                    for &c in &roots[s0].clone() {
                        // path via j then i, and via i then j
                        let a = find(&mut parent, node_of[&(si, j, c)]);
                        let b = find(&mut parent, node_of[&(sj, i, c)]);
                        let x = find(&mut parent, node_of[&(t, i, a)]);
                        let y = find(&mut parent, node_of[&(t, j, b)]);
                        if x != y {
                            parent[x.max(y)] = x.min(y);
                        }
                    }
                }
            }
            let mut r: Vec<usize> = mine.iter().map(|&id| find(&mut parent, id)).collect();
            r.sort();
            r.dedup();
            roots[t] = r;
        }
    }
    if state_counts[total - 1].is_none() {
        0
    } else {
        roots[total - 1].len()
    }
}

fn lt(x: u32, c: Coord) -> bool {
    match c {
        Coord::Fin(y) => x < y,
        Coord::Inf => true,
    }
}

/// Every column choice in `{zero} ∪ {holes not touching 0 there}`, filtered
/// directly by the two deadness conditions.
pub fn brute_dead(g: &HoleGrid) -> Result<Vec<DeadMatrix>> {
    let (l, n) = (g.l(), g.n);
    if l == 0 {
        return Ok(vec![]);
    }
    let space = (l as f64 + 1.0).powi(n as i32);
    if space > 1e6 {
        return Err(Error::CapExceeded(format!("{space} candidate matrices")));
    }
    let mut out = Vec::new();
    let mut cols: Vec<Option<usize>> = vec![None; n];
    loop {
        let rows: BTreeSet<usize> = cols.iter().flatten().copied().collect();
        if !rows.is_empty() {
            let y = |j: usize| rows.iter().map(|&i| g.hi[i][j]).min().unwrap();
            let masked = cols.iter().enumerate().all(|(j, c)| c.is_none_or(|i| g.lo[i][j] > 0));
            let dead = cols.iter().enumerate().all(|(j, c)| match c {
                Some(i) => lt(g.lo[*i][j], y(j)),
                None => y(j) == Coord::Inf,
            });
            if masked && dead {
                out.push(DeadMatrix { cols: cols.clone() });
            }
        }
        // odometer over {None, 0, .., l-1}^n
        let mut p = 0;
        loop {
            if p == n {
                out.sort();
                return Ok(out);
            }
            cols[p] = match cols[p] {
                None => Some(0),
                Some(i) if i + 1 < l => Some(i + 1),
                Some(_) => None,
            };
            if cols[p].is_some() {
                break;
            }
            p += 1;
        }
    }
}

/// Whether a monotone path from the origin to the far corner avoids all
/// regions, searched on the lattice of quarter-integer points.
pub(crate) fn grid_path_exists(regions: &[Vec<Span>], lengths: &[u32]) -> bool {
    const S: u32 = 4;
    let n = lengths.len();
    let dims: Vec<usize> = lengths.iter().map(|&l| (l * S) as usize + 1).collect();
    let total: usize = dims.iter().product();
    let mut reach = vec![false; total];
    let mut coord = vec![0u32; n];
    for idx in 0..total {
        let mut r = idx;
        for d in 0..n {
            coord[d] = (r % dims[d]) as u32;
            r /= dims[d];
        }
        let free = !regions.iter().any(|reg| (0..n).all(|d| reg[d].contains(coord[d], S, lengths[d])));
        if !free {
            continue;
        }
        if idx == 0 {
            reach[0] = true;
            continue;
        }
        let mut stride = 1;
        for d in 0..n {
            if coord[d] > 0 && reach[idx - stride] {
                reach[idx] = true;
                break;
            }
            stride *= dims[d];
        }
    }
    reach[total - 1]
}

/// Total path in `X_M` (the holes themselves plus the extensions chosen by `m`).
pub fn grid_alive(g: &HoleGrid, m: &crate::index_poset::SchedMatrix) -> bool {
    let mut regions: Vec<Vec<Span>> = (0..g.l()).map(|i| (0..g.n).map(|d| g.hole_span(i, d)).collect()).collect();
    for (i, j) in m.ones_iter() {
        let b = crate::geometry::extended_box(g, i, j);
        regions.push((0..g.n).map(|d| b.span(d)).collect());
    }
    grid_path_exists(&regions, &g.lengths)
}

/// Resource-counting reading of the forbidden region at a point given in
/// quarter units: some resource has more holders than its capacity.
pub fn overcommitted(alt: &Alternative, caps: &Capacities, p: &[u32]) -> bool {
    let mut holders: BTreeMap<&str, u32> = BTreeMap::new();
    for (j, t) in alt.threads.iter().enumerate() {
        let mut held: BTreeSet<&str> = BTreeSet::new();
        for (k, ins) in t.instrs.iter().enumerate() {
            // holds are open intervals: a P counts strictly after its tick, a V from its tick
            let tick = 4 * (k as u32 + 1);
            let done = match ins {
                Instruction::Unlock(_) => tick <= p[j],
                _ => tick < p[j],
            };
            if !done {
                break;
            }
            match ins {
                Instruction::Lock(a) => {
                    held.insert(a);
                }
                Instruction::Unlock(a) => {
                    held.remove(a.as_str());
                }
                Instruction::Assign(..) => {}
            }
        }
        for a in held {
            *holders.entry(a).or_insert(0) += 1;
        }
    }
    holders.iter().any(|(a, &c)| c > caps.get(a))
}
