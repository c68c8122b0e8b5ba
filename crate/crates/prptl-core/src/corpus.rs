//! A deterministic formula corpus for exercising the rewriting and
//! checking pipeline: fixed exemplars covering every constructor and
//! derived operator, topped up with seeded random formulas over the
//! atoms `p` and `q` (depth at most 3, finite bounds at most 4).

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bound::TimeBound;
use crate::formula::{
    always, always_timed, diamond, diamond_timed, empty, fin, halt, iff, implies, keep, len, more,
    next, skip, until, until_leq, Formula,
};

fn p() -> Formula {
    Formula::atom("p")
}

fn q() -> Formula {
    Formula::atom("q")
}

fn exemplars() -> Vec<Formula> {
    let b = |lo, hi| TimeBound::new(lo, hi).unwrap();
    alloc::vec![
        Formula::True,
        Formula::fals(),
        p(),
        q(),
        p().neg(),
        p().and(q()),
        p().or(q()),
        p().and(q()).neg(),
        implies(p(), q()),
        iff(p(), q()),
        next(p()),
        Formula::next(b(2, 2), p()),
        Formula::next(b(1, 4), q()),
        Formula::next(b(0, 2), p()),
        Formula::next(b(3, 4), p().and(q())),
        empty(),
        more(),
        skip(),
        len(1),
        len(3),
        p().chop(TimeBound::ZERO, q()),
        p().chop(TimeBound::UNIT, q()),
        p().chop(b(2, 4), q()),
        empty().chop(b(3, 4), p()),
        p().chop(TimeBound::ZERO, Formula::next(b(3, 4), q())),
        p().and(next(q())).chop(TimeBound::UNIT, q()),
        p().chop(b(2, 2), q().or(p())),
        diamond(q()),
        diamond(p().and(q())),
        always(p()),
        always(p().or(q())),
        always(implies(p(), next(q()))),
        until(p(), q()),
        until_leq(0, p(), q()),
        until_leq(2, p(), q()),
        diamond_timed(b(1, 3), p()),
        always_timed(b(2, 2), q()),
        keep(p()),
        halt(q()),
        fin(p().and(q())),
        next(p().chop(TimeBound::ZERO, q())),
        p().chop(TimeBound::ZERO, q()).neg(),
        Formula::next(b(2, 2), q()).and(diamond(p())),
        diamond(q()).neg(),
        empty().or(Formula::next(b(1, 2), empty())),
    ]
}

fn pick(rng: &mut ChaCha8Rng, n: u32) -> u32 {
    rng.next_u32() % n
}

fn random_bound(rng: &mut ChaCha8Rng) -> TimeBound {
    let lower = pick(rng, 4);
    let upper = lower + pick(rng, 5 - lower);
    TimeBound::new(lower, upper).expect("lower <= upper <= 4")
}

fn random_formula(rng: &mut ChaCha8Rng, depth: u32) -> Formula {
    if depth == 0 {
        return match pick(rng, 4) {
            0 => Formula::True,
            1 => p(),
            2 => q(),
            _ => empty(),
        };
    }
    match pick(rng, 8) {
        0 => random_formula(rng, depth - 1).neg(),
        1 => random_formula(rng, depth - 1).and(random_formula(rng, depth - 1)),
        2 => random_formula(rng, depth - 1).or(random_formula(rng, depth - 1)),
        3 | 4 => {
            let bound = random_bound(rng);
            let bound = if bound.is_zero() { TimeBound::UNIT } else { bound };
            Formula::next(bound, random_formula(rng, depth - 1))
        }
        5 => random_formula(rng, depth - 1)
            .chop(random_bound(rng), random_formula(rng, depth - 1)),
        6 => diamond(random_formula(rng, depth - 1)),
        _ => until(
            random_formula(rng, depth - 1),
            random_formula(rng, depth - 1),
        ),
    }
}

/// The corpus: at least 300 distinct formulas over `p` and `q`, all
/// bounds finite and at most 4, nesting depth at most 3. Deterministic
/// across runs.
pub fn corpus() -> Vec<Formula> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for f in exemplars() {
        if seen.insert(f.clone()) {
            out.push(f);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e5ca1e);
    while out.len() < 320 {
        let depth = 1 + pick(&mut rng, 3);
        let f = random_formula(&mut rng, depth);
        if seen.insert(f.clone()) {
            out.push(f);
        }
    }
    out
}
