//! Shadow automata of looping programs.
//!
//! A state is a shadow: the set of boxes that the schedulings of later loop
//! copies cast onto the current copy. A transition `N -(j, M)-> N'` says that
//! a copy scheduled by `M`, followed in direction `j` by copies whose shadow
//! is `N'`, casts the shadow `N` onto its own predecessor in direction `j`.
//!
//! Widening a box along the glue dimension yields `[0, end[`: the box reaches
//! the glue face without containing it, so a path may still leave the copy
//! through that face.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geometry::{build_holes, extended_box, HoleGrid, Rect};
use crate::index_poset::{alive_poset, components, dead_selections, mask, max_alive_below, PoolBox, SchedMatrix, Variant};
use crate::lang::{Alternative, Capacities, Coord, Mode, ThreadProgram};

/// Canonical box set: no box contained in another, sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Shadow {
    pub boxes: Vec<Rect>,
}

impl Shadow {
    pub fn new(boxes: Vec<Rect>) -> Shadow {
        let mut bs = boxes;
        bs.sort();
        bs.dedup();
        let keep: Vec<Rect> = bs
            .iter()
            .enumerate()
            .filter(|(k, b)| !bs.iter().enumerate().any(|(o, c)| o != *k && c.contains_rect(b) && (c != *b)))
            .map(|(_, b)| b.clone())
            .collect();
        Shadow { boxes: keep }
    }

    pub fn of_matrix(g: &HoleGrid, m: &SchedMatrix) -> Shadow {
        Shadow::new(m.ones_iter().map(|(i, j)| extended_box(g, i, j)).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn render(&self) -> Vec<String> {
        self.boxes.iter().map(Rect::to_string).collect()
    }
}

pub fn shadow_union(a: &Shadow, b: &Shadow) -> Shadow {
    Shadow::new(a.boxes.iter().chain(&b.boxes).cloned().collect())
}

/// The `j`-shadow: boxes open in `j` cast nothing, the others are widened
/// along `j` up to the glue face.
pub fn shadow_of(s: &Shadow, j: usize) -> Shadow {
    Shadow::new(s.boxes.iter().filter(|b| b.special_dim() != Some(j)).map(|b| b.widened(j)).collect())
}

/// Which scheduling matrices label the transitions leaving a shadow.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Labels {
    /// Maximal alive matrices only.
    #[default]
    Maximal,
    /// Every alive matrix with nonzero rows.
    All,
}

/// Maximal `M` (nonzero rows) with `boxes(M) ∪ N'` alive.
pub fn max_alive_given(nprime: &Shadow, g: &HoleGrid) -> Result<Vec<SchedMatrix>> {
    if g.l() == 0 {
        return Ok(vec![]);
    }
    let mut pool: Vec<PoolBox> = nprime.boxes.iter().map(|r| PoolBox { rect: r.clone(), tag: None }).collect();
    let top = mask(g);
    for (i, j) in top.ones_iter() {
        pool.push(PoolBox { rect: extended_box(g, i, j), tag: Some((i, j)) });
    }
    let mut dead = Vec::new();
    for tags in dead_selections(&pool, g.n, false) {
        if tags.is_empty() {
            return Err(Error::InternalDeadState);
        }
        let mut d = SchedMatrix::zeros(g.l(), g.n);
        for (i, j) in tags {
            d.set(i, j, true);
        }
        dead.push(d);
    }
    Ok(max_alive_below(&top, &dead, Variant::Exact).0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Nondeterministic,
    Deterministic,
}

/// A transition label: one matrix, or a connexity class of matrices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Label {
    pub name: String,
    pub matrices: Vec<SchedMatrix>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct State {
    /// Set for automaton states that are shadows.
    pub shadow: Option<Shadow>,
    /// For subset states: the original states they gather.
    pub members: Vec<usize>,
}

/// `(src, dir, label, dst)`.
pub type Transition = (usize, usize, usize, usize);

#[derive(Clone, Debug)]
pub struct ShadowAutomaton {
    pub n: usize,
    /// Holes of the base grid; labels are `l × n` matrices.
    pub l: usize,
    pub kind: Kind,
    pub states: Vec<State>,
    pub labels: Vec<Label>,
    pub transitions: BTreeSet<Transition>,
    /// Deterministic automata start here; otherwise every state is initial.
    pub start: Option<usize>,
}

pub const DEFAULT_STATE_CAP: usize = 100_000;

/// Worklist closure from the empty shadow.
pub fn build_automaton(g: &HoleGrid, labels: Labels) -> Result<ShadowAutomaton> {
    let mut ids: HashMap<Shadow, usize> = HashMap::new();
    let mut shadows: Vec<Shadow> = Vec::new();
    let mut label_ids: BTreeMap<SchedMatrix, usize> = BTreeMap::new();
    let mut transitions = BTreeSet::new();
    let mut queue = VecDeque::new();
    ids.insert(Shadow::default(), 0);
    shadows.push(Shadow::default());
    queue.push_back(0);
    while let Some(dst) = queue.pop_front() {
        let nprime = shadows[dst].clone();
        let maximal = max_alive_given(&nprime, g)?;
        let ms = match labels {
            Labels::Maximal => maximal,
            Labels::All => alive_poset(&maximal, 1 << 20)
                .ok_or_else(|| Error::CapExceeded("alive labels exceed 2^20".into()))?,
        };
        for m in &ms {
            let next = label_ids.len();
            let lab = *label_ids.entry(m.clone()).or_insert(next);
            let joined = shadow_union(&Shadow::of_matrix(g, m), &nprime);
            for j in 0..g.n {
                let src_shadow = shadow_of(&joined, j);
                let src = match ids.get(&src_shadow) {
                    Some(&s) => s,
                    None => {
                        if shadows.len() >= DEFAULT_STATE_CAP {
                            return Err(Error::CapExceeded(format!("more than {DEFAULT_STATE_CAP} shadow states")));
                        }
                        let s = shadows.len();
                        ids.insert(src_shadow.clone(), s);
                        shadows.push(src_shadow);
                        queue.push_back(s);
                        s
                    }
                };
                transitions.insert((src, j, lab, dst));
            }
        }
    }
    let mut labs: Vec<Label> = vec![Label { name: String::new(), matrices: vec![] }; label_ids.len()];
    for (m, k) in label_ids {
        labs[k] = Label { name: m.to_string(), matrices: vec![m] };
    }
    let a = ShadowAutomaton {
        n: g.n,
        l: g.l(),
        kind: Kind::Nondeterministic,
        states: shadows.into_iter().map(|s| State { shadow: Some(s), members: vec![] }).collect(),
        labels: labs,
        transitions,
        start: None,
    };
    Ok(a.canonical())
}

/// Base grid of an all-starred alternative: the holes of its loop bodies.
pub fn base_grid(alt: &Alternative, caps: &Capacities) -> Result<HoleGrid> {
    if alt.mode != Mode::AllStarred {
        return Err(Error::UnsupportedShape("shadow automata need every thread to be a loop".into()));
    }
    build_holes(&alt.threads, caps)
}

pub fn automaton_of(alt: &Alternative, caps: &Capacities, labels: Labels) -> Result<ShadowAutomaton> {
    build_automaton(&base_grid(alt, caps)?, labels)
}

impl ShadowAutomaton {
    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    /// Transitions with the direction forgotten, as drawn with `(_, M)` labels.
    pub fn edge_count(&self) -> usize {
        self.transitions.iter().map(|&(s, _, l, d)| (s, l, d)).collect::<BTreeSet<_>>().len()
    }

    pub fn alphabet(&self) -> BTreeSet<(usize, usize)> {
        self.transitions.iter().map(|&(_, j, l, _)| (j, l)).collect()
    }

    /// Labels sorted by name; states renumbered in breadth-first order from
    /// the start (or from state 0 and then by index when all are initial).
    fn canonical(self) -> ShadowAutomaton {
        let mut order: Vec<usize> = (0..self.labels.len()).collect();
        order.sort_by(|&a, &b| self.labels[a].cmp(&self.labels[b]));
        let mut lab_map = vec![0; self.labels.len()];
        for (new, &old) in order.iter().enumerate() {
            lab_map[old] = new;
        }
        let labels: Vec<Label> = order.iter().map(|&k| self.labels[k].clone()).collect();
        let mut succ: Vec<Vec<(usize, usize, usize)>> = vec![vec![]; self.states.len()];
        for &(s, j, l, d) in &self.transitions {
            succ[s].push((j, lab_map[l], d));
        }
        for v in &mut succ {
            v.sort();
        }
        let mut map = vec![usize::MAX; self.states.len()];
        let mut seq = Vec::new();
        let roots: Vec<usize> = match self.start {
            Some(s) => vec![s],
            None => (0..self.states.len()).collect(),
        };
        for r in roots {
            if map[r] != usize::MAX {
                continue;
            }
            map[r] = seq.len();
            seq.push(r);
            let mut q = VecDeque::from([r]);
            while let Some(s) = q.pop_front() {
                for &(_, _, d) in &succ[s] {
                    if map[d] == usize::MAX {
                        map[d] = seq.len();
                        seq.push(d);
                        q.push_back(d);
                    }
                }
            }
        }
        ShadowAutomaton {
            n: self.n,
            l: self.l,
            kind: self.kind,
            states: seq.iter().map(|&s| self.states[s].clone()).collect(),
            labels,
            transitions: self
                .transitions
                .iter()
                .filter(|t| map[t.0] != usize::MAX && map[t.3] != usize::MAX)
                .map(|&(s, j, l, d)| (map[s], j, lab_map[l], map[d]))
                .collect(),
            start: self.start.map(|s| map[s]),
        }
    }
}

/// Replaces matrix labels by their connexity classes over the labels in use.
pub fn quotient_connexity(a: &ShadowAutomaton) -> ShadowAutomaton {
    let used: BTreeSet<usize> = a.transitions.iter().map(|t| t.2).collect();
    let used: Vec<usize> = used.into_iter().collect();
    let mats: Vec<SchedMatrix> = used.iter().flat_map(|&k| a.labels[k].matrices.clone()).collect();
    // a label that is already a class contributes all its matrices
    let mut owner = Vec::new();
    for &k in &used {
        for _ in &a.labels[k].matrices {
            owner.push(k);
        }
    }
    let groups = components(&mats, a.l);
    let mut class_of: HashMap<usize, usize> = HashMap::new();
    let mut labels = Vec::new();
    for (c, grp) in groups.iter().enumerate() {
        let mut ms: Vec<SchedMatrix> = grp.iter().map(|&k| mats[k].clone()).collect();
        ms.sort();
        ms.dedup();
        for &k in grp {
            class_of.insert(owner[k], c);
        }
        labels.push(Label { name: format!("c{c}"), matrices: ms });
    }
    ShadowAutomaton {
        labels,
        transitions: a.transitions.iter().map(|&(s, j, l, d)| (s, j, class_of[&l], d)).collect(),
        ..a.clone()
    }
    .canonical()
}

/// Subset construction. A nondeterministic input starts from the set of
/// all its states; a deterministic one from its start state.
pub fn determinize(a: &ShadowAutomaton) -> ShadowAutomaton {
    let mut delta: BTreeMap<(usize, (usize, usize)), BTreeSet<usize>> = BTreeMap::new();
    for &(s, j, l, d) in &a.transitions {
        delta.entry((s, (j, l))).or_default().insert(d);
    }
    let alphabet = a.alphabet();
    let init: BTreeSet<usize> = match a.start {
        Some(s) => BTreeSet::from([s]),
        None => (0..a.states.len()).collect(),
    };
    let mut ids: HashMap<BTreeSet<usize>, usize> = HashMap::from([(init.clone(), 0)]);
    let mut subsets = vec![init];
    let mut transitions = BTreeSet::new();
    let mut k = 0;
    while k < subsets.len() {
        let cur = subsets[k].clone();
        for &sym in &alphabet {
            let next: BTreeSet<usize> =
                cur.iter().filter_map(|&s| delta.get(&(s, sym))).flatten().copied().collect();
            if next.is_empty() {
                continue;
            }
            let id = *ids.entry(next.clone()).or_insert_with(|| {
                subsets.push(next);
                subsets.len() - 1
            });
            transitions.insert((k, sym.0, sym.1, id));
        }
        k += 1;
    }
    let members_of = |set: &BTreeSet<usize>| -> Vec<usize> {
        set.iter()
            .flat_map(|&s| if a.states[s].members.is_empty() { vec![s] } else { a.states[s].members.clone() })
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    };
    ShadowAutomaton {
        n: a.n,
        l: a.l,
        kind: Kind::Deterministic,
        states: subsets.iter().map(|s| State { shadow: None, members: members_of(s) }).collect(),
        labels: a.labels.clone(),
        transitions,
        start: Some(0),
    }
    .canonical()
}

/// Partition refinement on a deterministic automaton in which every state
/// accepts and missing transitions lead to a rejecting sink.
pub fn minimize(a: &ShadowAutomaton) -> ShadowAutomaton {
    let a = if a.kind == Kind::Deterministic { a.clone() } else { determinize(a) };
    let alphabet: Vec<(usize, usize)> = a.alphabet().into_iter().collect();
    let mut delta: HashMap<(usize, (usize, usize)), usize> = HashMap::new();
    for &(s, j, l, d) in &a.transitions {
        delta.insert((s, (j, l)), d);
    }
    let ns = a.states.len();
    let mut block = vec![0usize; ns];
    let mut count = 1;
    loop {
        let sigs: Vec<(usize, Vec<Option<usize>>)> = (0..ns)
            .map(|s| (block[s], alphabet.iter().map(|&x| delta.get(&(s, x)).map(|&d| block[d])).collect()))
            .collect();
        let mut ids: HashMap<&(usize, Vec<Option<usize>>), usize> = HashMap::new();
        let mut next = vec![0; ns];
        for s in 0..ns {
            let k = ids.len();
            next[s] = *ids.entry(&sigs[s]).or_insert(k);
        }
        let c = ids.len();
        block = next;
        if c == count {
            break;
        }
        count = c;
    }
    let mut members: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); count];
    for s in 0..ns {
        members[block[s]].extend(a.states[s].members.iter().copied());
    }
    ShadowAutomaton {
        n: a.n,
        l: a.l,
        kind: Kind::Deterministic,
        states: members.into_iter().map(|m| State { shadow: None, members: m.into_iter().collect() }).collect(),
        labels: a.labels.clone(),
        transitions: a.transitions.iter().map(|&(s, j, l, d)| (block[s], j, l, block[d])).collect(),
        start: a.start.map(|s| block[s]),
    }
    .canonical()
}

/// A word letter: `(direction, label index)`.
pub type Letter = (usize, usize);

/// Distinct words of length at most `k` readable from the start (or from
/// any state when every state is initial).
pub fn accepted_words(a: &ShadowAutomaton, k: usize) -> BTreeSet<Vec<Letter>> {
    let mut succ: Vec<Vec<(Letter, usize)>> = vec![vec![]; a.states.len()];
    for &(s, j, l, d) in &a.transitions {
        succ[s].push(((j, l), d));
    }
    let mut out = BTreeSet::from([vec![]]);
    let mut frontier: BTreeSet<(Vec<Letter>, usize)> = match a.start {
        Some(s) => BTreeSet::from([(vec![], s)]),
        None => (0..a.states.len()).map(|s| (vec![], s)).collect(),
    };
    for _ in 0..k {
        let mut next = BTreeSet::new();
        for (w, s) in &frontier {
            for &(x, d) in &succ[*s] {
                let mut w2 = w.clone();
                w2.push(x);
                out.insert(w2.clone());
                next.insert((w2, d));
            }
        }
        frontier = next;
    }
    out
}

/// `v`-delooping: thread `j` runs its body `v[j]` times, with no loop left.
pub fn deloop(alt: &Alternative, v: &[usize]) -> Result<Alternative> {
    if v.len() != alt.threads.len() {
        return Err(Error::UnsupportedShape(format!(
            "delooping vector has {} entries for {} threads",
            v.len(),
            alt.threads.len()
        )));
    }
    if v.contains(&0) {
        return Err(Error::UnsupportedShape("delooping vector entries must be positive".into()));
    }
    let threads = alt
        .threads
        .iter()
        .zip(v)
        .map(|(t, &c)| ThreadProgram { instrs: (0..c).flat_map(|_| t.instrs.iter().cloned()).collect(), looped: false })
        .collect();
    Ok(Alternative { threads, mode: Mode::LoopFree })
}

/// Locates each hole of the `v`-delooping as `(copy vector, base hole)`.
/// Holes that span several copies are rejected.
pub fn split_glued(base: &HoleGrid, glued: &HoleGrid, bodies: &[u32], v: &[usize]) -> Result<Vec<(Vec<usize>, usize)>> {
    let mut out = Vec::new();
    for h in 0..glued.l() {
        let mut w = vec![0usize; glued.n];
        let mut lo = vec![0u32; glued.n];
        let mut hi = vec![Coord::Inf; glued.n];
        for d in 0..glued.n {
            if glued.lo[h][d] == 0 {
                if v[d] > 1 {
                    return Err(Error::UnsupportedShape(format!("hole {h} spans every copy along {d}")));
                }
                hi[d] = glued.hi[h][d];
                continue;
            }
            let c = (glued.lo[h][d] - 1) / bodies[d];
            w[d] = c as usize;
            lo[d] = glued.lo[h][d] - c * bodies[d];
            hi[d] = match glued.hi[h][d] {
                Coord::Fin(y) => Coord::Fin(y - c * bodies[d]),
                Coord::Inf => Coord::Inf,
            };
        }
        let i = (0..base.l())
            .find(|&i| base.lo[i] == lo && base.hi[i] == hi)
            .ok_or_else(|| Error::UnsupportedShape(format!("hole {h} has no counterpart in the loop body")))?;
        out.push((w, i));
    }
    Ok(out)
}

pub fn to_dot(a: &ShadowAutomaton) -> String {
    let mut s = String::from("digraph shadow {\n  rankdir=LR;\n");
    if let Some(st) = a.start {
        let _ = writeln!(s, "  init [shape=point];\n  init -> s{st};");
    }
    for k in 0..a.states.len() {
        let _ = writeln!(s, "  s{k} [label=\"{k}\"];");
    }
    for &(src, j, l, dst) in &a.transitions {
        let _ = writeln!(s, "  s{src} -> s{dst} [label=\"{j}:{}\"];", a.labels[l].name);
    }
    s.push_str("}\n");
    s
}

pub fn to_json(a: &ShadowAutomaton) -> Value {
    let states: Vec<Value> = a
        .states
        .iter()
        .enumerate()
        .map(|(k, st)| match &st.shadow {
            Some(sh) => json!({"id": k, "boxes": sh.render()}),
            None => json!({"id": k, "members": st.members}),
        })
        .collect();
    let transitions: Vec<Value> = a
        .transitions
        .iter()
        .map(|&(s, j, l, d)| json!({"src": s, "dir": j, "label": a.labels[l].name, "dst": d}))
        .collect();
    let labels: Vec<Value> = a
        .labels
        .iter()
        .map(|l| json!({"name": l.name, "matrices": l.matrices.iter().map(|m| m.to_string()).collect::<Vec<_>>()}))
        .collect();
    json!({
        "kind": match a.kind { Kind::Nondeterministic => "nfa", Kind::Deterministic => "dfa" },
        "states": states,
        "transitions": transitions,
        "labels": labels,
        "start": a.start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{normalize, parse};

    fn grid(text: &str) -> (Alternative, HoleGrid) {
        let src = parse(text).unwrap();
        let alt = normalize(&src.program).unwrap().remove(0);
        let g = base_grid(&alt, &src.capacities()).unwrap();
        (alt, g)
    }

    const QQ: &str = "(P(a).V(a))* | (P(a).V(a))*";
    const QQQ: &str = "#cap a 2\n(P(a).V(a))* | (P(a).V(a))* | (P(a).V(a))*";

    #[test]
    fn shadow_algebra() {
        let (_, g) = grid(QQ);
        let s = Shadow::of_matrix(&g, &"10".parse().unwrap());
        assert_eq!(shadow_union(&s, &Shadow::default()), s);
        assert_eq!(shadow_union(&s, &s), s);
        assert!(shadow_of(&s, 0).is_empty());
        let s1 = shadow_of(&s, 1);
        assert_eq!(s1.render(), vec!["]1,2[x[0,inf[".to_string()]);
        assert_eq!(shadow_of(&s1, 1), s1);
    }

    #[test]
    fn given_shadow() {
        let (_, g) = grid(QQ);
        let all: BTreeSet<String> = max_alive_given(&Shadow::default(), &g).unwrap().iter().map(|m| m.to_string()).collect();
        assert_eq!(all, BTreeSet::from(["01".to_string(), "10".to_string()]));
        let s = shadow_of(&Shadow::of_matrix(&g, &"10".parse().unwrap()), 1);
        let only: Vec<String> = max_alive_given(&s, &g).unwrap().iter().map(|m| m.to_string()).collect();
        assert_eq!(only, ["10"]);
        let (_, g) = grid(QQQ);
        let cube = max_alive_given(&Shadow::default(), &g).unwrap();
        assert_eq!(alive_poset(&cube, 100).unwrap().len(), 6);
    }

    #[test]
    fn square_automaton() {
        let (_, g) = grid(QQ);
        let a = build_automaton(&g, Labels::Maximal).unwrap();
        assert_eq!((a.states.len(), a.transition_count()), (3, 8));
        let d = determinize(&a);
        assert_eq!((d.states.len(), d.transition_count()), (3, 10));
        let m = minimize(&d);
        assert_eq!((m.states.len(), m.transition_count()), (3, 10));
        assert_eq!(quotient_connexity(&a).labels.len(), 2);
        assert_eq!(accepted_words(&d, 0).len(), 1);
        assert_eq!(accepted_words(&a, 1).len(), 5);
        // deterministic, so words are paths: 1 + out(start) + out of each successor
        let out = |s: usize| d.transitions.iter().filter(|t| t.0 == s).count();
        let st = d.start.unwrap();
        let paths = 1 + out(st) + d.transitions.iter().filter(|t| t.0 == st).map(|t| out(t.3)).sum::<usize>();
        assert_eq!(accepted_words(&d, 2).len(), paths);
        assert_eq!(paths, 17);
    }

    #[test]
    fn language_preserved() {
        let (_, g) = grid(QQ);
        let a = build_automaton(&g, Labels::Maximal).unwrap();
        let d = determinize(&a);
        let m = minimize(&d);
        assert_eq!(accepted_words(&a, 5), accepted_words(&d, 5));
        assert_eq!(accepted_words(&d, 5), accepted_words(&m, 5));
    }

    #[test]
    fn delooping() {
        let (alt, g) = grid(QQ);
        let d = deloop(&alt, &[2, 2]).unwrap();
        assert_eq!(d.mode, Mode::LoopFree);
        let gg = build_holes(&d.threads, &Capacities::default()).unwrap();
        assert_eq!(gg.l(), 4);
        let split = split_glued(&g, &gg, &[2, 2], &[2, 2]).unwrap();
        let copies: BTreeSet<Vec<usize>> = split.iter().map(|s| s.0.clone()).collect();
        assert_eq!(copies.len(), 4);
        assert_eq!(deloop(&alt, &[1, 1]).unwrap().threads[0].instrs, alt.threads[0].instrs);
    }

    #[test]
    fn dot_output() {
        let (_, g) = grid(QQ);
        let a = build_automaton(&g, Labels::Maximal).unwrap();
        let dot = to_dot(&a);
        assert_eq!(dot.matches(" -> ").count(), 8);
    }
}
