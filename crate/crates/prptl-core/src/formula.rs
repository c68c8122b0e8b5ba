//! Formula syntax: the core connectives, derived operators, and the
//! canonicalizer that gives every formula a unique structural shape.
//!
//! The core grammar is deliberately small: atoms, `true`, negation,
//! conjunction, disjunction, the timed next `X[t1,t2]`, and the timed chop
//! `;[t1,t2]`. Everything else (`empty`, `<>`, `[]`, `U`, `len`, ...) is a
//! derived operator that expands into the core syntactically, with no
//! simplification.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use core::fmt;

use num_rational::BigRational;
use num_traits::Zero;

use crate::bound::TimeBound;

/// A formula over the core connectives.
///
/// `Or` is core syntax here rather than an abbreviation so that normal forms
/// and the canonicalizer can treat disjunction structurally. The variant
/// order fixes the tag rank used by the derived total order: sorting operand
/// lists under `Ord` is what makes canonical forms unique.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    Atom(String),
    Neg(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(TimeBound, Box<Formula>),
    Chop(Box<Formula>, TimeBound, Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Formula {
        Formula::Atom(name.into())
    }

    /// The canonical false representation `!true`.
    pub fn fals() -> Formula {
        Formula::Neg(Box::new(Formula::True))
    }

    pub fn neg(self) -> Formula {
        Formula::Neg(Box::new(self))
    }

    pub fn and(self, other: Formula) -> Formula {
        Formula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Formula) -> Formula {
        Formula::Or(Box::new(self), Box::new(other))
    }

    pub fn next(bound: TimeBound, body: Formula) -> Formula {
        Formula::Next(bound, Box::new(body))
    }

    pub fn chop(self, bound: TimeBound, right: Formula) -> Formula {
        Formula::Chop(Box::new(self), bound, Box::new(right))
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Formula::True)
    }

    /// Structural check for the canonical false representation.
    pub fn is_false(&self) -> bool {
        matches!(self, Formula::Neg(inner) if inner.is_true())
    }

    /// Atom names occurring anywhere in the formula.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True => {}
            Formula::Atom(name) => {
                out.insert(name.clone());
            }
            Formula::Neg(f) | Formula::Next(_, f) => f.collect_atoms(out),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Chop(l, _, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }

    /// Whether the formula is free of temporal operators (its truth depends
    /// only on the current state).
    pub fn is_state_formula(&self) -> bool {
        match self {
            Formula::True | Formula::Atom(_) => true,
            Formula::Neg(f) => f.is_state_formula(),
            Formula::And(l, r) | Formula::Or(l, r) => l.is_state_formula() && r.is_state_formula(),
            Formula::Next(..) | Formula::Chop(..) => false,
        }
    }

    /// Whether any time bound in the formula has an omega upper endpoint.
    pub fn has_omega(&self) -> bool {
        match self {
            Formula::True | Formula::Atom(_) => false,
            Formula::Neg(f) => f.has_omega(),
            Formula::And(l, r) | Formula::Or(l, r) => l.has_omega() || r.has_omega(),
            Formula::Next(b, f) => b.upper.is_omega() || f.has_omega(),
            Formula::Chop(l, b, r) => b.upper.is_omega() || l.has_omega() || r.has_omega(),
        }
    }
}

// ---------------------------------------------------------------------------
// Derived operators
// ---------------------------------------------------------------------------

/// `X f`, the unit next `X[1,1] f`.
pub fn next(f: Formula) -> Formula {
    Formula::next(TimeBound::UNIT, f)
}

/// `empty`: no next state. Expands to `!X[1,1] true`.
pub fn empty() -> Formula {
    next(Formula::True).neg()
}

/// `more`: a next state exists. Expands to `X[1,1] true`.
pub fn more() -> Formula {
    next(Formula::True)
}

/// `skip`: exactly one more state. Expands to `X[1,1] empty`.
pub fn skip() -> Formula {
    next(empty())
}

/// `len(n)`: exactly `n` more states. `len(0)` is `empty`; otherwise
/// `X[1,1] len(n-1)`.
pub fn len(n: u32) -> Formula {
    let mut f = empty();
    for _ in 0..n {
        f = next(f);
    }
    f
}

/// `<> f`: some suffix satisfies `f`. Expands to `true ; f`.
pub fn diamond(f: Formula) -> Formula {
    Formula::True.chop(TimeBound::ZERO, f)
}

/// `[] f`: every suffix satisfies `f`. Expands to `!(true ; !f)`.
pub fn always(f: Formula) -> Formula {
    diamond(f.neg()).neg()
}

/// `<>[t1,t2] f`: some offset in the window reaches `f`. Coincides with the
/// timed next `X[t1,t2] f`.
pub fn diamond_timed(bound: TimeBound, f: Formula) -> Formula {
    Formula::next(bound, f)
}

/// `[][t1,t2] f`: every offset in the window satisfies `f`. Expands to
/// `!X[t1,t2] !f`.
pub fn always_timed(bound: TimeBound, f: Formula) -> Formula {
    Formula::next(bound, f.neg()).neg()
}

/// `p U q`: expands to `p ;[1,1] q`.
pub fn until(p: Formula, q: Formula) -> Formula {
    p.chop(TimeBound::UNIT, q)
}

/// `p U<=t q`: expands to `q | ([][0,t-1] p ;[1,1] q)`; for `t = 0` the
/// window is empty and the expansion is `q` alone.
pub fn until_leq(t: u32, p: Formula, q: Formula) -> Formula {
    if t == 0 {
        return q;
    }
    let window = TimeBound::new(0, t - 1).expect("0 <= t-1");
    q.clone().or(always_timed(window, p).chop(TimeBound::UNIT, q))
}

/// `a -> b` as `!a | b`.
pub fn implies(a: Formula, b: Formula) -> Formula {
    a.neg().or(b)
}

/// `a <-> b` as `(!a | b) & (!b | a)`.
pub fn iff(a: Formula, b: Formula) -> Formula {
    implies(a.clone(), b.clone()).and(implies(b, a))
}

/// `keep(f)`: `f` holds at every state that has a successor. Expands to
/// `[](!empty -> f)`.
pub fn keep(f: Formula) -> Formula {
    always(implies(empty().neg(), f))
}

/// `halt(f)`: the interval ends exactly when `f` holds. Expands to
/// `[](empty <-> f)`.
pub fn halt(f: Formula) -> Formula {
    always(iff(empty(), f))
}

/// `fin(f)`: `f` holds at the final state. Expands to `[](empty -> f)`.
pub fn fin(f: Formula) -> Formula {
    always(implies(empty(), f))
}

/// Argument to the dynamic derived-operator constructor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DerivedArg {
    Formula(Formula),
    Int(i64),
    Bound(TimeBound),
}

/// Errors from [`mk_derived`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DerivedError {
    UnknownTag(String),
    WrongArity { tag: String, expected: &'static str },
    NegativeArgument { tag: String, value: i64 },
}

impl fmt::Display for DerivedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DerivedError::UnknownTag(tag) => write!(f, "unknown derived operator `{tag}`"),
            DerivedError::WrongArity { tag, expected } => {
                write!(f, "`{tag}` expects {expected}")
            }
            DerivedError::NegativeArgument { tag, value } => {
                write!(f, "`{tag}` needs a natural number, got {value}")
            }
        }
    }
}

impl core::error::Error for DerivedError {}

/// Expand a derived operator by tag. The expansion is purely syntactic; no
/// simplification is performed.
///
/// Tags: `next`, `empty`, `more`, `skip`, `len`, `diamond`, `box`, `until`,
/// `until_leq`, `keep`, `halt`, `fin`, `diamond_timed`, `box_timed`.
pub fn mk_derived(tag: &str, args: &[DerivedArg]) -> Result<Formula, DerivedError> {
    use DerivedArg as A;
    let wrong = |expected: &'static str| DerivedError::WrongArity {
        tag: String::from(tag),
        expected,
    };
    let nat = |value: i64| -> Result<u32, DerivedError> {
        u32::try_from(value).map_err(|_| DerivedError::NegativeArgument {
            tag: String::from(tag),
            value,
        })
    };
    match tag {
        "empty" => match args {
            [] => Ok(empty()),
            _ => Err(wrong("no arguments")),
        },
        "more" => match args {
            [] => Ok(more()),
            _ => Err(wrong("no arguments")),
        },
        "skip" => match args {
            [] => Ok(skip()),
            _ => Err(wrong("no arguments")),
        },
        "len" => match args {
            [A::Int(n)] => Ok(len(nat(*n)?)),
            _ => Err(wrong("one natural number")),
        },
        "next" => match args {
            [A::Formula(f)] => Ok(next(f.clone())),
            _ => Err(wrong("one formula")),
        },
        "diamond" => match args {
            [A::Formula(f)] => Ok(diamond(f.clone())),
            _ => Err(wrong("one formula")),
        },
        "box" => match args {
            [A::Formula(f)] => Ok(always(f.clone())),
            _ => Err(wrong("one formula")),
        },
        "keep" => match args {
            [A::Formula(f)] => Ok(keep(f.clone())),
            _ => Err(wrong("one formula")),
        },
        "halt" => match args {
            [A::Formula(f)] => Ok(halt(f.clone())),
            _ => Err(wrong("one formula")),
        },
        "fin" => match args {
            [A::Formula(f)] => Ok(fin(f.clone())),
            _ => Err(wrong("one formula")),
        },
        "until" => match args {
            [A::Formula(p), A::Formula(q)] => Ok(until(p.clone(), q.clone())),
            _ => Err(wrong("two formulas")),
        },
        "until_leq" => match args {
            [A::Int(t), A::Formula(p), A::Formula(q)] => {
                Ok(until_leq(nat(*t)?, p.clone(), q.clone()))
            }
            _ => Err(wrong("a natural number and two formulas")),
        },
        "diamond_timed" => match args {
            [A::Bound(b), A::Formula(f)] => Ok(diamond_timed(*b, f.clone())),
            _ => Err(wrong("a time bound and a formula")),
        },
        "box_timed" => match args {
            [A::Bound(b), A::Formula(f)] => Ok(always_timed(*b, f.clone())),
            _ => Err(wrong("a time bound and a formula")),
        },
        _ => Err(DerivedError::UnknownTag(String::from(tag))),
    }
}

// ---------------------------------------------------------------------------
// Canonicalization
// ---------------------------------------------------------------------------

/// Rewrite a formula into its unique canonical shape.
///
/// Double negations are eliminated; `&`/`|` chains are flattened, sorted
/// under the structural order, and deduplicated; identity and absorbing
/// elements collapse (`f & true = f`, `f & false = false`, `f | false = f`,
/// `f | true = true`); a conjunct pair `f, !f` collapses to `false` and a
/// disjunct pair to `true`. Time bounds are left untouched. The result is a
/// fixpoint: canonicalizing twice returns the same formula.
pub fn canonicalize(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::Atom(_) => f.clone(),
        Formula::Neg(inner) => match canonicalize(inner) {
            Formula::Neg(twice) => *twice,
            other => other.neg(),
        },
        Formula::And(..) => {
            let mut operands = BTreeSet::new();
            if collect_junction(f, true, &mut operands) {
                return Formula::fals();
            }
            if has_complement_pair(&operands) {
                return Formula::fals();
            }
            rebuild(operands, true)
        }
        Formula::Or(..) => {
            let mut operands = BTreeSet::new();
            if collect_junction(f, false, &mut operands) {
                return Formula::True;
            }
            if has_complement_pair(&operands) {
                return Formula::True;
            }
            rebuild(operands, false)
        }
        Formula::Next(b, inner) => Formula::next(*b, canonicalize(inner)),
        Formula::Chop(l, b, r) => canonicalize(l).chop(*b, canonicalize(r)),
    }
}

/// Collect canonicalized operands of an `&`/`|` chain, dropping the identity
/// element. Returns true if the absorbing element was seen.
fn collect_junction(f: &Formula, conj: bool, out: &mut BTreeSet<Formula>) -> bool {
    let parts = match (conj, f) {
        (true, Formula::And(l, r)) | (false, Formula::Or(l, r)) => Some((l, r)),
        _ => None,
    };
    match parts {
        Some((l, r)) => {
            collect_junction(l, conj, out) || collect_junction(r, conj, out)
        }
        None => {
            let c = canonicalize(f);
            match (conj, &c) {
                (true, _) if c.is_true() => false,
                (true, _) if c.is_false() => true,
                (false, _) if c.is_false() => false,
                (false, _) if c.is_true() => true,
                // A nested junction of the same kind can surface after
                // canonicalizing a child (e.g. under a dropped negation).
                (true, Formula::And(..)) | (false, Formula::Or(..)) => {
                    collect_junction(&c, conj, out)
                }
                _ => {
                    out.insert(c);
                    false
                }
            }
        }
    }
}

fn has_complement_pair(operands: &BTreeSet<Formula>) -> bool {
    operands.iter().any(|f| match f {
        Formula::Neg(inner) => operands.contains(inner),
        _ => false,
    })
}

fn rebuild(operands: BTreeSet<Formula>, conj: bool) -> Formula {
    let mut iter = operands.into_iter();
    let first = match iter.next() {
        // The empty conjunction is true; the empty disjunction is false.
        None => return if conj { Formula::True } else { Formula::fals() },
        Some(f) => f,
    };
    iter.fold(first, |acc, f| if conj { acc.and(f) } else { acc.or(f) })
}

// ---------------------------------------------------------------------------
// Probability queries
// ---------------------------------------------------------------------------

/// Comparison operator in a probability-bound query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Comparator {
    Lt,
    Le,
    Ge,
    Gt,
    Eq,
}

impl Comparator {
    pub fn compare(self, lhs: &BigRational, rhs: &BigRational) -> bool {
        match self {
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Eq => lhs == rhs,
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
            Comparator::Gt => ">",
            Comparator::Eq => "=",
        };
        write!(f, "{s}")
    }
}

/// A probability-bound query `Pr <cmp> <threshold> [ <body> ]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbQuery {
    pub comparator: Comparator,
    pub threshold: BigRational,
    pub body: Formula,
}

impl ProbQuery {
    /// Build a query; rejects thresholds outside `[0, 1]`.
    pub fn new(
        comparator: Comparator,
        threshold: BigRational,
        body: Formula,
    ) -> Result<ProbQuery, QueryError> {
        let one = BigRational::from_integer(1.into());
        if threshold < BigRational::zero() || threshold > one {
            return Err(QueryError::ThresholdRange(threshold));
        }
        Ok(ProbQuery {
            comparator,
            threshold,
            body,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryError {
    ThresholdRange(BigRational),
}

impl fmt::Display for QueryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryError::ThresholdRange(t) => {
                write!(f, "probability threshold {t} lies outside [0, 1]")
            }
        }
    }
}

impl core::error::Error for QueryError {}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Formula {
        Formula::atom("p")
    }

    fn q() -> Formula {
        Formula::atom("q")
    }

    #[test]
    fn derived_expansions_are_syntactic() {
        assert_eq!(empty(), Formula::next(TimeBound::UNIT, Formula::True).neg());
        assert_eq!(diamond(p()), Formula::True.chop(TimeBound::ZERO, p()));
        assert_eq!(until(p(), q()), p().chop(TimeBound::UNIT, q()));
        assert_eq!(len(0), empty());
        assert_eq!(len(2), next(next(empty())));
        assert_eq!(
            until_leq(3, p(), q()),
            q().or(always_timed(TimeBound::new(0, 2).unwrap(), p()).chop(TimeBound::UNIT, q()))
        );
        assert_eq!(until_leq(0, p(), q()), q());
    }

    #[test]
    fn mk_derived_matches_typed_constructors() {
        use DerivedArg as A;
        assert_eq!(mk_derived("diamond", &[A::Formula(p())]), Ok(diamond(p())));
        assert_eq!(
            mk_derived("until_leq", &[A::Int(3), A::Formula(p()), A::Formula(q())]),
            Ok(until_leq(3, p(), q()))
        );
        assert_eq!(
            mk_derived("len", &[A::Int(-1)]),
            Err(DerivedError::NegativeArgument {
                tag: "len".into(),
                value: -1
            })
        );
        assert!(matches!(
            mk_derived("frob", &[]),
            Err(DerivedError::UnknownTag(_))
        ));
        assert!(matches!(
            mk_derived("until", &[A::Formula(p())]),
            Err(DerivedError::WrongArity { .. })
        ));
    }

    #[test]
    fn canonicalize_sorts_flattens_and_dedups() {
        let f = q().or(p()).or(q());
        assert_eq!(canonicalize(&f), p().or(q()));
        let g = p().and(Formula::True).and(p());
        assert_eq!(canonicalize(&g), p());
    }

    #[test]
    fn canonicalize_handles_constants_and_complements() {
        assert_eq!(canonicalize(&p().and(p().neg())), Formula::fals());
        assert_eq!(canonicalize(&p().or(p().neg())), Formula::True);
        assert_eq!(canonicalize(&p().and(Formula::fals())), Formula::fals());
        assert_eq!(canonicalize(&p().or(Formula::fals())), p());
        assert_eq!(canonicalize(&p().neg().neg()), p());
        assert_eq!(canonicalize(&Formula::True.neg().neg()), Formula::True);
    }

    #[test]
    fn canonicalize_is_idempotent_on_samples() {
        let samples = [
            q().or(p()).or(q().neg()),
            diamond(p().and(q().neg())),
            until_leq(2, p(), q()),
            keep(p()).and(halt(q())),
            Formula::next(TimeBound::omega_from(1), p()).neg(),
        ];
        for f in samples {
            let once = canonicalize(&f);
            assert_eq!(canonicalize(&once), once);
        }
    }

    #[test]
    fn query_threshold_is_range_checked() {
        let two = BigRational::from_integer(2.into());
        assert!(ProbQuery::new(Comparator::Gt, two, p()).is_err());
    }
}
