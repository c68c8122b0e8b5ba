//! Time normal form: every formula is equivalent (on finite intervals) to
//! a disjunction of "ends now" and "steps forward" cases,
//!
//! ```text
//!   (g_1 & empty) | ... | (g_k & empty)
//! | (h_1 & X[a_1,b_1] Q_1) | ... | (h_m & X[a_m,b_m] Q_m)
//! ```
//!
//! where every `g`/`h` is a guard (conjunction of literals), every future
//! bound has lower endpoint at least 1, and at least one disjunct exists.
//! The complete form (CTNF) additionally makes the future guards minterms
//! that cover the whole guard space and keeps same-guard disjuncts on
//! disjoint time windows, which is what makes one step of the form
//! deterministic per state.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::bound::{TimeBound, Upper};
use crate::formula::{self, canonicalize, Formula};
use crate::guard::Guard;
use crate::parser::render;

/// A disjunct `guard & X[bound] continuation`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FutureDisjunct {
    pub guard: Guard,
    /// Lower endpoint is at least 1.
    pub bound: TimeBound,
    /// Always canonicalized.
    pub continuation: Formula,
}

/// A formula in time normal form. Disjunct lists keep construction order
/// and are duplicate-free; at least one disjunct is always present (the
/// unsatisfiable formula is kept as `true & X[1,1] false`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tnf {
    pub empty_disjuncts: Vec<Guard>,
    pub future_disjuncts: Vec<FutureDisjunct>,
}

#[derive(Debug, Clone)]
pub struct TnfOptions {
    /// Cap on distinct continuation formulas generated during one rewrite.
    pub max_continuations: usize,
}

impl Default for TnfOptions {
    fn default() -> TnfOptions {
        TnfOptions {
            max_continuations: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TnfError {
    /// The rewrite generated more distinct continuations than allowed.
    BudgetExceeded { limit: usize },
    /// A guard mentions an atom outside the declared alphabet.
    UndeclaredAtom(String),
    /// The input to negation is not a complete unit-step normal form.
    NotUnitCtnf(String),
}

impl fmt::Display for TnfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TnfError::BudgetExceeded { limit } => {
                write!(f, "normal form exceeds the budget of {limit} distinct continuations")
            }
            TnfError::UndeclaredAtom(name) => {
                write!(f, "guard atom `{name}` is not in the declared alphabet")
            }
            TnfError::NotUnitCtnf(reason) => {
                write!(f, "input is not a complete unit-step normal form: {reason}")
            }
        }
    }
}

impl core::error::Error for TnfError {}

impl Tnf {
    /// The canonical unsatisfiable form `true & X[1,1] false`.
    pub fn unsat() -> Tnf {
        Tnf {
            empty_disjuncts: Vec::new(),
            future_disjuncts: alloc::vec![FutureDisjunct {
                guard: Guard::truth(),
                bound: TimeBound::UNIT,
                continuation: Formula::fals(),
            }],
        }
    }

    pub fn is_unsat(&self) -> bool {
        *self == Tnf::unsat()
    }

    /// Union of atoms mentioned by any guard.
    pub fn guard_atoms(&self) -> BTreeSet<String> {
        let mut atoms = BTreeSet::new();
        for g in &self.empty_disjuncts {
            atoms.extend(g.atoms());
        }
        for d in &self.future_disjuncts {
            atoms.extend(d.guard.atoms());
        }
        atoms
    }

    /// The disjunction the form denotes, with `empty`/`X` spelled out.
    pub fn to_formula(&self) -> Formula {
        let mut disjuncts = self.disjunct_formulas().into_iter();
        let first = disjuncts.next().expect("a normal form has a disjunct");
        disjuncts.fold(first, Formula::or)
    }

    fn disjunct_formulas(&self) -> Vec<Formula> {
        let mut out = Vec::new();
        for g in &self.empty_disjuncts {
            out.push(g.to_formula().and(formula::empty()));
        }
        for d in &self.future_disjuncts {
            let step = Formula::next(d.bound, d.continuation.clone());
            out.push(d.guard.to_formula().and(step));
        }
        out
    }

    /// Text form with one parenthesized disjunct per clause, e.g.
    /// `(p & X[3,4] q) | (p & X[1,1] (true ; X[3,4] q))`.
    pub fn render(&self) -> String {
        let parts: Vec<String> = self
            .disjunct_formulas()
            .iter()
            .map(|d| alloc::format!("({})", render(d)))
            .collect();
        parts.join(" | ")
    }
}

/// Drop unsatisfiable disjuncts, deduplicate preserving first occurrence,
/// and keep the `k + h >= 1` invariant by falling back to the
/// unsatisfiable form.
fn assemble(eps: Vec<Guard>, futs: Vec<FutureDisjunct>) -> Tnf {
    let mut eps_out = Vec::new();
    let mut seen_eps = BTreeSet::new();
    for g in eps {
        if g.is_false() {
            continue;
        }
        if seen_eps.insert(g.clone()) {
            eps_out.push(g);
        }
    }
    let mut futs_out = Vec::new();
    let mut seen_futs = BTreeSet::new();
    for d in futs {
        if d.guard.is_false() || d.continuation.is_false() {
            continue;
        }
        if seen_futs.insert(d.clone()) {
            futs_out.push(d);
        }
    }
    if eps_out.is_empty() && futs_out.is_empty() {
        return Tnf::unsat();
    }
    Tnf {
        empty_disjuncts: eps_out,
        future_disjuncts: futs_out,
    }
}

/// `X[a,b] Q` with `a >= 1` rewritten one step: the continuation after the
/// first tick, i.e. `Q` when the bound is `[1,1]`, else `X[a-1,b-1] Q`.
fn step_once(bound: TimeBound, continuation: &Formula) -> Formula {
    let rest = bound.pred();
    if rest.is_zero() {
        continuation.clone()
    } else {
        Formula::next(rest, continuation.clone())
    }
}

// ---------------------------------------------------------------------------
// Law-based rewriting
// ---------------------------------------------------------------------------

/// One bottom-up pass of the chop/next rewrite laws:
/// `empty ;[a,b] Q` becomes `X[a,b] Q`; a state-formula conjunct moves out
/// of a chop's left operand; a leading unit next moves out of a chop; a
/// timed next conjoined with a disjunction distributes; a chop distributes
/// over a disjunction on its right. The result is semantically equivalent.
pub fn apply_laws(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::Atom(_) => f.clone(),
        Formula::Neg(inner) => apply_laws(inner).neg(),
        Formula::And(l, r) => rewrite_and(apply_laws(l), apply_laws(r)),
        Formula::Or(l, r) => apply_laws(l).or(apply_laws(r)),
        Formula::Next(b, inner) => Formula::next(*b, apply_laws(inner)),
        Formula::Chop(l, b, r) => rewrite_chop(apply_laws(l), *b, apply_laws(r)),
    }
}

fn rewrite_chop(left: Formula, bound: TimeBound, right: Formula) -> Formula {
    // empty ;[a,b] Q = X[a,b] Q (and X[0,0] Q denotes Q).
    if left == formula::empty() {
        return if bound.is_zero() {
            right
        } else {
            Formula::next(bound, right)
        };
    }
    match left {
        // (w & P) ;[a,b] Q = w & (P ;[a,b] Q) for state formulas w.
        Formula::And(l, r) if l.is_state_formula() => {
            l.and(rewrite_chop(*r, bound, right))
        }
        Formula::And(l, r) if r.is_state_formula() => {
            r.and(rewrite_chop(*l, bound, right))
        }
        // (X P) ;[a,b] Q = X (P ;[a,b] Q).
        Formula::Next(b, inner) if b.is_unit() => {
            Formula::next(b, rewrite_chop(*inner, bound, right))
        }
        left => match right {
            // P ;[a,b] (Q | R) = (P ;[a,b] Q) | (P ;[a,b] R).
            Formula::Or(q, r) => rewrite_chop(left.clone(), bound, *q)
                .or(rewrite_chop(left, bound, *r)),
            right => left.chop(bound, right),
        },
    }
}

fn rewrite_and(left: Formula, right: Formula) -> Formula {
    // X[a,b] P & (Q | R) = (X[a,b] P & Q) | (X[a,b] P & R).
    match (&left, &right) {
        (Formula::Next(..), Formula::Or(..)) => {
            let Formula::Or(q, r) = right else { unreachable!() };
            rewrite_and(left.clone(), *q).or(rewrite_and(left, *r))
        }
        (Formula::Or(..), Formula::Next(..)) => {
            let Formula::Or(q, r) = left else { unreachable!() };
            rewrite_and(*q, right.clone()).or(rewrite_and(*r, right))
        }
        _ => left.and(right),
    }
}

// ---------------------------------------------------------------------------
// Time normal form
// ---------------------------------------------------------------------------

struct Ctx<'o> {
    opts: &'o TnfOptions,
    seen: BTreeSet<Formula>,
}

impl Ctx<'_> {
    fn track(&mut self, f: &Formula) -> Result<(), TnfError> {
        if !self.seen.contains(f) {
            if self.seen.len() >= self.opts.max_continuations {
                return Err(TnfError::BudgetExceeded {
                    limit: self.opts.max_continuations,
                });
            }
            self.seen.insert(f.clone());
        }
        Ok(())
    }

    fn track_tnf(&mut self, n: &Tnf) -> Result<(), TnfError> {
        for d in &n.future_disjuncts {
            self.track(&d.continuation)?;
        }
        Ok(())
    }
}

/// Rewrite a formula into time normal form with default options.
pub fn tnf(f: &Formula) -> Result<Tnf, TnfError> {
    tnf_with(f, &TnfOptions::default())
}

/// Rewrite a formula into time normal form. The result denotes the same
/// truth value as `f` at every position of every finite interval.
pub fn tnf_with(f: &Formula, opts: &TnfOptions) -> Result<Tnf, TnfError> {
    let mut ctx = Ctx {
        opts,
        seen: BTreeSet::new(),
    };
    tnf_rec(f, &mut ctx)
}

fn tnf_rec(f: &Formula, ctx: &mut Ctx<'_>) -> Result<Tnf, TnfError> {
    let result = match f {
        Formula::True => assemble(
            alloc::vec![Guard::truth()],
            alloc::vec![FutureDisjunct {
                guard: Guard::truth(),
                bound: TimeBound::UNIT,
                continuation: Formula::True,
            }],
        ),
        Formula::Atom(name) => {
            let g = Guard::literal(name.clone(), true);
            assemble(
                alloc::vec![g.clone()],
                alloc::vec![FutureDisjunct {
                    guard: g,
                    bound: TimeBound::UNIT,
                    continuation: Formula::True,
                }],
            )
        }
        Formula::And(l, r) => {
            let a = tnf_rec(l, ctx)?;
            let b = tnf_rec(r, ctx)?;
            conj(&a, &b)
        }
        Formula::Or(l, r) => {
            let a = tnf_rec(l, ctx)?;
            let mut b = tnf_rec(r, ctx)?;
            let mut eps = a.empty_disjuncts;
            eps.append(&mut b.empty_disjuncts);
            let mut futs = a.future_disjuncts;
            futs.append(&mut b.future_disjuncts);
            assemble(eps, futs)
        }
        Formula::Next(bound, body) => {
            if bound.lower >= 1 {
                assemble(
                    Vec::new(),
                    alloc::vec![FutureDisjunct {
                        guard: Guard::truth(),
                        bound: *bound,
                        continuation: canonicalize(body),
                    }],
                )
            } else {
                // X[0,b] P = P | X[1,b] P.
                let now = tnf_rec(body, ctx)?;
                let mut futs = now.future_disjuncts;
                if *bound != TimeBound::ZERO {
                    futs.push(FutureDisjunct {
                        guard: Guard::truth(),
                        bound: TimeBound::with_upper(1, bound.upper)
                            .expect("upper >= 1 when the bound is not [0,0]"),
                        continuation: canonicalize(body),
                    });
                }
                assemble(now.empty_disjuncts, futs)
            }
        }
        Formula::Chop(l, bound, r) => {
            let left = tnf_rec(l, ctx)?;
            let r_canon = canonicalize(r);
            let mut eps = Vec::new();
            let mut futs = Vec::new();
            let mut right: Option<Tnf> = None;
            for g in &left.empty_disjuncts {
                // (g & empty) ;[a,b] R = g & X[a,b] R.
                if bound.lower >= 1 {
                    futs.push(FutureDisjunct {
                        guard: g.clone(),
                        bound: *bound,
                        continuation: r_canon.clone(),
                    });
                } else {
                    // Window includes offset zero: g & (R | X[1,b] R).
                    if right.is_none() {
                        right = Some(tnf_rec(r, ctx)?);
                    }
                    let rt = right.as_ref().expect("just filled");
                    for gr in &rt.empty_disjuncts {
                        eps.push(g.conj(gr));
                    }
                    for d in &rt.future_disjuncts {
                        futs.push(FutureDisjunct {
                            guard: g.conj(&d.guard),
                            bound: d.bound,
                            continuation: d.continuation.clone(),
                        });
                    }
                    if *bound != TimeBound::ZERO {
                        futs.push(FutureDisjunct {
                            guard: g.clone(),
                            bound: TimeBound::with_upper(1, bound.upper)
                                .expect("upper >= 1 when the bound is not [0,0]"),
                            continuation: r_canon.clone(),
                        });
                    }
                }
            }
            for d in &left.future_disjuncts {
                // (g & X[a,c] N) ;[t,u] R = g & X[a,c] (N ;[t,u] R).
                futs.push(FutureDisjunct {
                    guard: d.guard.clone(),
                    bound: d.bound,
                    continuation: canonicalize(&Formula::Chop(
                        alloc::boxed::Box::new(d.continuation.clone()),
                        *bound,
                        alloc::boxed::Box::new(r_canon.clone()),
                    )),
                });
            }
            assemble(eps, futs)
        }
        Formula::Neg(body) => {
            let inner = tnf_rec(body, ctx)?;
            let unit = ctnf_unit(&inner);
            ctx.track_tnf(&unit)?;
            negate_ctnf(&unit).expect("unit completion yields valid input")
        }
    };
    ctx.track_tnf(&result)?;
    Ok(result)
}

/// Conjunction of two normal forms: end cases pair with end cases, step
/// cases pair with step cases after aligning both on a single tick.
fn conj(a: &Tnf, b: &Tnf) -> Tnf {
    let mut eps = Vec::new();
    for ga in &a.empty_disjuncts {
        for gb in &b.empty_disjuncts {
            eps.push(ga.conj(gb));
        }
    }
    let mut futs = Vec::new();
    for da in &a.future_disjuncts {
        let ra = step_once(da.bound, &da.continuation);
        for db in &b.future_disjuncts {
            let guard = da.guard.conj(&db.guard);
            if guard.is_false() {
                continue;
            }
            let rb = step_once(db.bound, &db.continuation);
            futs.push(FutureDisjunct {
                guard,
                bound: TimeBound::UNIT,
                continuation: canonicalize(&ra.clone().and(rb)),
            });
        }
    }
    assemble(eps, futs)
}

// ---------------------------------------------------------------------------
// Complete time normal form
// ---------------------------------------------------------------------------

/// Expand guards into minterms over the atoms the guards mention, so that
/// distinct future guards are pairwise contradictory and together cover
/// the whole guard space. Disjuncts sharing a minterm are merged when
/// their bounds are equal, split into unit segments (with a tail for
/// omega) when bounds overlap, and left side by side when already
/// time-disjoint. Uncovered minterms get an unsatisfiable continuation.
/// `alphabet` must contain every guard atom.
pub fn ctnf(n: &Tnf, alphabet: &BTreeSet<String>) -> Result<Tnf, TnfError> {
    let basis = n.guard_atoms();
    if let Some(outside) = basis.iter().find(|a| !alphabet.contains(*a)) {
        return Err(TnfError::UndeclaredAtom(outside.clone()));
    }
    Ok(complete(n, &basis, false))
}

/// Like [`ctnf`] with every future disjunct first reduced to a `[1,1]`
/// bound, leaving exactly one future disjunct per minterm: the shape
/// negation and probabilistic residuation require.
pub fn ctnf_unit(n: &Tnf) -> Tnf {
    let basis = n.guard_atoms();
    complete(n, &basis, true)
}

fn complete(n: &Tnf, basis: &BTreeSet<String>, unit: bool) -> Tnf {
    let mut eps: BTreeSet<Guard> = BTreeSet::new();
    for g in &n.empty_disjuncts {
        eps.extend(g.minterms(basis));
    }
    // minterm -> bound -> disjunction of continuations
    let mut groups: BTreeMap<Guard, BTreeMap<TimeBound, Formula>> = BTreeMap::new();
    for d in &n.future_disjuncts {
        let (bound, continuation) = if unit {
            (TimeBound::UNIT, step_once(d.bound, &d.continuation))
        } else {
            (d.bound, d.continuation.clone())
        };
        for m in d.guard.minterms(basis) {
            let slot = groups.entry(m).or_default();
            match slot.get_mut(&bound) {
                Some(prev) => *prev = canonicalize(&prev.clone().or(continuation.clone())),
                None => {
                    slot.insert(bound, continuation.clone());
                }
            }
        }
    }
    let mut futs = Vec::new();
    for m in Guard::truth().minterms(basis) {
        match groups.get(&m) {
            None => futs.push(FutureDisjunct {
                guard: m,
                bound: TimeBound::UNIT,
                continuation: Formula::fals(),
            }),
            Some(slot) => emit_group(&m, slot, &mut futs),
        }
    }
    Tnf {
        empty_disjuncts: eps.into_iter().collect(),
        future_disjuncts: futs,
    }
}

/// Emit one minterm's future disjuncts with pairwise disjoint bounds.
fn emit_group(
    minterm: &Guard,
    slot: &BTreeMap<TimeBound, Formula>,
    out: &mut Vec<FutureDisjunct>,
) {
    let entries: Vec<(&TimeBound, &Formula)> = slot.iter().collect();
    let disjoint = entries
        .iter()
        .enumerate()
        .all(|(i, (b, _))| entries[i + 1..].iter().all(|(c, _)| !b.overlaps(**c)));
    if disjoint {
        for (bound, continuation) in entries {
            out.push(FutureDisjunct {
                guard: minterm.clone(),
                bound: *bound,
                continuation: continuation.clone(),
            });
        }
        return;
    }
    // Split overlapping windows into unit segments plus an omega tail.
    let start = entries.iter().map(|(b, _)| b.lower).min().expect("non-empty");
    let cutoff = entries
        .iter()
        .map(|(b, _)| match b.upper {
            Upper::Finite(u) => u,
            Upper::Omega => b.lower,
        })
        .max()
        .expect("non-empty");
    for t in start..=cutoff {
        let covering: Vec<&Formula> = entries
            .iter()
            .filter(|(b, _)| b.contains(t as u64))
            .map(|(_, c)| *c)
            .collect();
        if let Some(merged) = or_all(&covering) {
            out.push(FutureDisjunct {
                guard: minterm.clone(),
                bound: TimeBound::point(t),
                continuation: merged,
            });
        }
    }
    let tails: Vec<&Formula> = entries
        .iter()
        .filter(|(b, _)| b.upper.is_omega())
        .map(|(_, c)| *c)
        .collect();
    if let Some(merged) = or_all(&tails) {
        out.push(FutureDisjunct {
            guard: minterm.clone(),
            bound: TimeBound::omega_from(cutoff + 1),
            continuation: merged,
        });
    }
}

fn or_all(parts: &[&Formula]) -> Option<Formula> {
    let mut iter = parts.iter();
    let first = (*iter.next()?).clone();
    Some(canonicalize(
        &iter.fold(first, |acc, f| acc.or((*f).clone())),
    ))
}

// ---------------------------------------------------------------------------
// Negation
// ---------------------------------------------------------------------------

/// Negate a complete unit-step normal form: a minterm ends the negation's
/// interval exactly when it did not end the input's, and each minterm's
/// continuation is negated. Requires every future bound to be `[1,1]` and
/// the guards to be a complete set of minterms over one atom basis.
pub fn negate_ctnf(n: &Tnf) -> Result<Tnf, TnfError> {
    let basis = n.guard_atoms();
    let mut continuation_of: BTreeMap<&Guard, &Formula> = BTreeMap::new();
    for d in &n.future_disjuncts {
        if !d.bound.is_unit() {
            return Err(TnfError::NotUnitCtnf(alloc::format!(
                "future bound {} is not [1,1]",
                d.bound
            )));
        }
        if d.guard.atoms() != basis {
            return Err(TnfError::NotUnitCtnf(alloc::format!(
                "guard `{}` is not a minterm over the basis",
                d.guard
            )));
        }
        if continuation_of.insert(&d.guard, &d.continuation).is_some() {
            return Err(TnfError::NotUnitCtnf(alloc::format!(
                "minterm `{}` has two future disjuncts",
                d.guard
            )));
        }
    }
    let minterms = Guard::truth().minterms(&basis);
    if continuation_of.len() != minterms.len() {
        return Err(TnfError::NotUnitCtnf(alloc::format!(
            "{} of {} minterms have future disjuncts",
            continuation_of.len(),
            minterms.len()
        )));
    }
    let eps_set: BTreeSet<&Guard> = n.empty_disjuncts.iter().collect();
    for g in &n.empty_disjuncts {
        if g.atoms() != basis {
            return Err(TnfError::NotUnitCtnf(alloc::format!(
                "guard `{g}` is not a minterm over the basis"
            )));
        }
    }
    let mut eps = Vec::new();
    let mut futs = Vec::new();
    for m in minterms {
        if !eps_set.contains(&m) {
            eps.push(m.clone());
        }
        let continuation = continuation_of[&m];
        futs.push(FutureDisjunct {
            guard: m,
            bound: TimeBound::UNIT,
            continuation: canonicalize(&continuation.clone().neg()),
        });
    }
    Ok(assemble(eps, futs))
}
