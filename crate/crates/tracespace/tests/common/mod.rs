//! Seeded random PV programs shared by the property and acceptance suites.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tracespace::lang::{normalize, parse, Alternative, Capacities};

pub const RESOURCES: [&str; 3] = ["a", "b", "c"];

/// Number of interleavings of threads with the given lengths.
pub fn multinomial(lens: &[usize]) -> f64 {
    let mut total = 0usize;
    let mut acc = 1f64;
    for &l in lens {
        for k in 1..=l {
            total += 1;
            acc = acc * total as f64 / k as f64;
        }
    }
    acc
}

/// Well-bracketed thread of at most `max_len` instructions. Locks left open
/// at the end are released unless `leak` allows keeping one.
fn thread(rng: &mut ChaCha8Rng, max_len: usize, nres: usize, leak: bool) -> Vec<String> {
    let target = rng.gen_range(1..=max_len);
    let mut held: Vec<&str> = Vec::new();
    let mut out = Vec::new();
    while out.len() < target {
        let free: Vec<&str> = RESOURCES[..nres].iter().copied().filter(|r| !held.contains(r)).collect();
        let must_release = out.len() + held.len() >= target;
        if !held.is_empty() && (must_release || free.is_empty() || rng.gen_bool(0.45)) {
            let k = rng.gen_range(0..held.len());
            out.push(format!("V({})", held.remove(k)));
        } else if !free.is_empty() && !must_release {
            let r = *free.choose(rng).unwrap();
            held.push(r);
            out.push(format!("P({r})"));
        } else {
            out.push("[x:=x+1]".to_string());
        }
    }
    if leak && !held.is_empty() && rng.gen_bool(0.5) {
        held.pop();
    }
    for r in held {
        out.push(format!("V({r})"));
    }
    out
}

/// 2 or 3 threads, at most 8 instructions each, at most 3 resources with
/// capacities 1 or 2. Interleavings are kept below `max_runs` so that
/// explicit enumeration stays cheap.
pub fn random_program(seed: u64, max_runs: f64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.gen_range(2..=3);
        let nres = rng.gen_range(1..=3);
        let leak = rng.gen_bool(0.1);
        let threads: Vec<Vec<String>> = (0..n).map(|_| thread(&mut rng, 8, nres, leak)).collect();
        if threads.iter().any(|t| t.len() > 8) {
            continue;
        }
        let lens: Vec<usize> = threads.iter().map(Vec::len).collect();
        if multinomial(&lens) > max_runs {
            continue;
        }
        let mut text = String::new();
        for r in &RESOURCES[..nres] {
            let k = rng.gen_range(1..=2);
            if k > 1 {
                text.push_str(&format!("#cap {r} {k}\n"));
            }
        }
        text.push_str(&threads.iter().map(|t| t.join(".")).collect::<Vec<_>>().join(" | "));
        return text;
    }
}

pub fn load(text: &str) -> (Alternative, Capacities) {
    let src = parse(text).unwrap_or_else(|e| panic!("{text}: {e}"));
    let alt = normalize(&src.program).unwrap().remove(0);
    (alt, src.capacities())
}

/// The randomized suite shared by the oracle criteria.
pub fn suite(count: usize) -> Vec<String> {
    (0..count as u64).map(|s| random_program(0x5eed_0000 + s, 60_000.0)).collect()
}

pub const SWISS: &str = "P(a).V(a).P(b).V(b) | P(b).V(b).P(a).V(a)";
pub const CUBE: &str = "#cap a 2\nP(a).V(a) | P(a).V(a) | P(a).V(a)";

/// Hand-written programs with known answers.
pub fn fixtures() -> Vec<String> {
    let mut v: Vec<String> = vec![
        SWISS.into(),
        CUBE.into(),
        "P(a).V(a) | P(a).V(a)".into(),
        "P(a).V(a) | P(b).V(b)".into(),
        "P(a).P(b).V(b).V(a) | P(b).P(a).V(a).V(b)".into(),
        "P(a).V(a) | P(a).V(a) | P(a).V(a)".into(),
        "P(a) | P(a)".into(),
        "#cap a 2\nP(a).P(b).V(a).V(b) | P(a).P(b).V(b).V(a) | P(b).V(b)".into(),
    ];
    for n in 2..=4 {
        let p: Vec<String> = (0..n).map(|k| format!("P(a{k}).P(a{}).V(a{k}).V(a{})", (k + 1) % n, (k + 1) % n)).collect();
        v.push(p.join(" | "));
    }
    v
}
