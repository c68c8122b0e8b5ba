//! Guards: conjunctions of atom literals used as edge labels in normal
//! forms and normal form graphs.
//!
//! A guard is either unsatisfiable (`False`) or a finite set of literals,
//! at most one per atom. The empty literal set is `true`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::formula::Formula;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Guard {
    False,
    /// Literals keyed by atom name; `true` means a positive occurrence.
    Lits(BTreeMap<String, bool>),
}

impl Guard {
    /// The guard `true` (empty conjunction).
    pub fn truth() -> Guard {
        Guard::Lits(BTreeMap::new())
    }

    /// A single literal.
    pub fn literal(name: impl Into<String>, positive: bool) -> Guard {
        let mut lits = BTreeMap::new();
        lits.insert(name.into(), positive);
        Guard::Lits(lits)
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Guard::Lits(lits) if lits.is_empty())
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Guard::False)
    }

    /// Conjunction of two guards; contradicting literals yield `False`.
    pub fn conj(&self, other: &Guard) -> Guard {
        let (Guard::Lits(a), Guard::Lits(b)) = (self, other) else {
            return Guard::False;
        };
        let mut lits = a.clone();
        for (name, &sign) in b {
            match lits.insert(name.clone(), sign) {
                Some(prev) if prev != sign => return Guard::False,
                _ => {}
            }
        }
        Guard::Lits(lits)
    }

    /// Atom names constrained by the guard.
    pub fn atoms(&self) -> BTreeSet<String> {
        match self {
            Guard::False => BTreeSet::new(),
            Guard::Lits(lits) => lits.keys().cloned().collect(),
        }
    }

    /// Evaluate under an assignment of atom names to truth values.
    pub fn eval_with(&self, holds: impl Fn(&str) -> bool) -> bool {
        match self {
            Guard::False => false,
            Guard::Lits(lits) => lits.iter().all(|(name, &sign)| holds(name) == sign),
        }
    }

    /// Whether the two guards have no common satisfying assignment. Only
    /// syntactic contradiction is detected, which is exact for guards over
    /// the same literal basis.
    pub fn contradicts(&self, other: &Guard) -> bool {
        self.conj(other).is_false()
    }

    /// All full assignments over `basis` consistent with this guard, as
    /// guards. Literals outside `basis` are kept as-is. `False` has none.
    pub fn minterms(&self, basis: &BTreeSet<String>) -> Vec<Guard> {
        let Guard::Lits(lits) = self else {
            return Vec::new();
        };
        let mut out = Vec::new();
        out.push(lits.clone());
        for name in basis {
            if lits.contains_key(name) {
                continue;
            }
            let mut next = Vec::with_capacity(out.len() * 2);
            for m in out {
                for sign in [false, true] {
                    let mut ext = m.clone();
                    ext.insert(name.clone(), sign);
                    next.push(ext);
                }
            }
            out = next;
        }
        let mut guards: Vec<Guard> = out.into_iter().map(Guard::Lits).collect();
        guards.sort();
        guards
    }

    /// The guard as a formula: `true`, `!true`, or the sorted conjunction
    /// of literals (positives before negatives, as the canonicalizer
    /// orders them).
    pub fn to_formula(&self) -> Formula {
        let Guard::Lits(lits) = self else {
            return Formula::fals();
        };
        let mut literals: Vec<Formula> = lits
            .iter()
            .map(|(name, &sign)| {
                let atom = Formula::atom(name.clone());
                if sign {
                    atom
                } else {
                    atom.neg()
                }
            })
            .collect();
        literals.sort();
        let mut iter = literals.into_iter();
        match iter.next() {
            None => Formula::True,
            Some(first) => iter.fold(first, Formula::and),
        }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Guard::Lits(lits) = self else {
            return write!(f, "false");
        };
        if lits.is_empty() {
            return write!(f, "true");
        }
        let mut names: Vec<&String> = lits.keys().collect();
        names.sort_by_key(|name| (!lits[*name], *name));
        for (i, name) in names.iter().enumerate() {
            if i > 0 {
                write!(f, " & ")?;
            }
            if !lits[*name] {
                write!(f, "!")?;
            }
            write!(f, "{name}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conj_detects_contradiction() {
        let p = Guard::literal("p", true);
        let np = Guard::literal("p", false);
        let q = Guard::literal("q", true);
        assert!(p.conj(&np).is_false());
        assert_eq!(p.conj(&q), q.conj(&p));
        assert_eq!(p.conj(&Guard::truth()), p);
        assert!(Guard::False.conj(&q).is_false());
    }

    #[test]
    fn minterms_cover_the_basis() {
        let basis: BTreeSet<String> = ["p", "q"].iter().map(|s| String::from(*s)).collect();
        let all = Guard::truth().minterms(&basis);
        assert_eq!(all.len(), 4);
        let under_p = Guard::literal("p", true).minterms(&basis);
        assert_eq!(under_p.len(), 2);
        for m in &under_p {
            assert!(m.eval_with(|name| name == "p") || m.eval_with(|_| true));
            assert!(!m.contradicts(&Guard::literal("p", true)));
        }
        assert!(Guard::False.minterms(&basis).is_empty());
    }

    #[test]
    fn formula_view_orders_literals() {
        let g = Guard::literal("q", true).conj(&Guard::literal("p", false));
        assert_eq!(g.to_formula(), Formula::atom("q").and(Formula::atom("p").neg()));
        assert_eq!(alloc::format!("{g}"), "q & !p");
        assert_eq!(alloc::format!("{}", Guard::truth()), "true");
        assert_eq!(alloc::format!("{}", Guard::False), "false");
    }

    #[test]
    fn eval_checks_every_literal() {
        let g = Guard::literal("p", true).conj(&Guard::literal("q", false));
        assert!(g.eval_with(|name| name == "p"));
        assert!(!g.eval_with(|_| true));
        assert!(Guard::truth().eval_with(|_| false));
    }
}
