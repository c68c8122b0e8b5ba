//! Reference evaluation of formulas on finite intervals.
//!
//! An interval is a non-empty finite sequence of states; its length is the
//! number of states minus one. Formulas are interpreted at a pair of
//! positions `(i, j)` with `0 <= i <= j <= length`: `i` is the current
//! state, `j` the end of the interval under consideration. The evaluator
//! here is the ground truth that normal forms, graphs, and the checker are
//! validated against; it is exhaustive and meant for small scopes.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::bound::TimeBound;
use crate::formula::Formula;

/// Maximum number of atoms an exhaustive equivalence check will accept.
pub const MAX_SCOPE_ATOMS: usize = 3;
/// Maximum interval length an exhaustive equivalence check will accept.
pub const MAX_SCOPE_LEN: usize = 6;

/// A declared finite set of proposition names. States are bit masks over
/// this set, so it holds at most 64 names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlphabetError {
    TooLarge(usize),
}

impl fmt::Display for AlphabetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphabetError::TooLarge(n) => write!(f, "alphabet of {n} atoms exceeds 64"),
        }
    }
}

impl core::error::Error for AlphabetError {}

impl Alphabet {
    /// Build from any iterator of names; duplicates collapse, order is
    /// lexicographic.
    pub fn new(names: impl IntoIterator<Item = String>) -> Result<Alphabet, AlphabetError> {
        let set: BTreeSet<String> = names.into_iter().collect();
        if set.len() > 64 {
            return Err(AlphabetError::TooLarge(set.len()));
        }
        Ok(Alphabet {
            names: set.into_iter().collect(),
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }

    /// Bit mask of a set of atom names; names outside the alphabet are an
    /// error.
    pub fn mask_of<'a>(
        &self,
        atoms: impl IntoIterator<Item = &'a str>,
    ) -> Result<u64, UnknownAtom> {
        let mut mask = 0u64;
        for name in atoms {
            match self.index(name) {
                Some(bit) => mask |= 1 << bit,
                None => return Err(UnknownAtom(name.to_string())),
            }
        }
        Ok(mask)
    }

    /// Atom names set in a mask, in alphabet order.
    pub fn names_of(&self, mask: u64) -> Vec<&str> {
        self.names
            .iter()
            .enumerate()
            .filter(|(bit, _)| mask & (1 << bit) != 0)
            .map(|(_, name)| name.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownAtom(pub String);

impl fmt::Display for UnknownAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "atom `{}` is not in the alphabet", self.0)
    }
}

impl core::error::Error for UnknownAtom {}

/// A non-empty finite sequence of states over an alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    alphabet: Alphabet,
    states: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntervalError {
    Empty,
    MaskOutOfRange { state: usize, mask: u64 },
}

impl fmt::Display for IntervalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntervalError::Empty => write!(f, "an interval needs at least one state"),
            IntervalError::MaskOutOfRange { state, mask } => {
                write!(f, "state {state} mask {mask:#x} has bits outside the alphabet")
            }
        }
    }
}

impl core::error::Error for IntervalError {}

impl Interval {
    pub fn new(alphabet: Alphabet, states: Vec<u64>) -> Result<Interval, IntervalError> {
        if states.is_empty() {
            return Err(IntervalError::Empty);
        }
        let limit = if alphabet.len() == 64 {
            u64::MAX
        } else {
            (1u64 << alphabet.len()) - 1
        };
        for (state, &mask) in states.iter().enumerate() {
            if mask & !limit != 0 {
                return Err(IntervalError::MaskOutOfRange { state, mask });
            }
        }
        Ok(Interval { alphabet, states })
    }

    /// Build from explicit atom sets; the alphabet is their union.
    pub fn from_sets(sets: &[BTreeSet<String>]) -> Result<Interval, IntervalError> {
        let union: BTreeSet<String> = sets.iter().flatten().cloned().collect();
        let alphabet = Alphabet::new(union).map_err(|AlphabetError::TooLarge(_)| {
            IntervalError::MaskOutOfRange { state: 0, mask: u64::MAX }
        })?;
        let states = sets
            .iter()
            .map(|set| {
                alphabet
                    .mask_of(set.iter().map(String::as_str))
                    .expect("alphabet is the union")
            })
            .collect();
        Interval::new(alphabet, states)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    /// Interval length: number of states minus one.
    pub fn length(&self) -> usize {
        self.states.len() - 1
    }

    /// Whether `atom` holds in the state at `index`.
    pub fn holds(&self, index: usize, atom: &str) -> bool {
        match self.alphabet.index(atom) {
            Some(bit) => self.states[index] & (1 << bit) != 0,
            None => false,
        }
    }

    /// The trace text form: one line per state, propositions separated by
    /// spaces. [`parse_interval`] of this text returns an equal interval.
    pub fn to_trace_text(&self) -> String {
        let mut out = String::new();
        for &mask in &self.states {
            out.push_str(&self.alphabet.names_of(mask).join(" "));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &mask) in self.states.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{{")?;
            for (k, name) in self.alphabet.names_of(mask).iter().enumerate() {
                if k > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{name}")?;
            }
            write!(f, "}}")?;
        }
        Ok(())
    }
}

/// Errors from parsing trace text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceError {
    Empty,
    BadAtom(String),
    TooManyAtoms(usize),
}

impl fmt::Display for TraceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceError::Empty => write!(f, "trace has no states"),
            TraceError::BadAtom(name) => write!(f, "`{name}` is not a valid atom name"),
            TraceError::TooManyAtoms(n) => write!(f, "trace uses {n} atoms, limit 64"),
        }
    }
}

impl core::error::Error for TraceError {}

/// Parse a trace: one line per state, each line a whitespace-separated list
/// of the propositions true in that state; a blank line is a state with no
/// true propositions. One final empty line (a trailing newline) is ignored,
/// so a trace ending in an empty state needs a blank line before it. The
/// alphabet is the set of atoms that appear.
pub fn parse_interval(text: &str) -> Result<Interval, TraceError> {
    let mut lines: Vec<&str> = text.split('\n').collect();
    if lines.last() == Some(&"") && lines.len() > 1 {
        lines.pop();
    }
    if text.is_empty() {
        return Err(TraceError::Empty);
    }
    let mut sets: Vec<BTreeSet<String>> = Vec::new();
    for line in lines {
        let mut set = BTreeSet::new();
        for atom in line.split_whitespace() {
            let valid = atom.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && atom.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid {
                return Err(TraceError::BadAtom(atom.to_string()));
            }
            set.insert(atom.to_string());
        }
        sets.push(set);
    }
    let atom_count = sets.iter().flatten().collect::<BTreeSet<_>>().len();
    if atom_count > 64 {
        return Err(TraceError::TooManyAtoms(atom_count));
    }
    Ok(Interval::from_sets(&sets).expect("non-empty and within the union alphabet"))
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    OutOfRange { i: usize, j: usize, length: usize },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::OutOfRange { i, j, length } => {
                write!(f, "positions ({i}, {j}) are not within 0 <= i <= j <= {length}")
            }
        }
    }
}

impl core::error::Error for EvalError {}

/// Flattened formula node with children as indices; atoms are resolved to
/// alphabet bits up front (absent atoms never hold).
#[derive(Debug, Clone)]
enum Node {
    True,
    Atom(Option<usize>),
    Neg(usize),
    And(usize, usize),
    Or(usize, usize),
    Next(TimeBound, usize),
    Chop(usize, TimeBound, usize),
}

/// A formula compiled against an alphabet, ready to evaluate on any
/// interval over that alphabet. Identical subterms share one node, so the
/// memo table also caches across sharing.
pub struct Evaluator {
    nodes: Vec<Node>,
    root: usize,
}

/// Memo of evaluation results, reusable across intervals of bounded length.
pub struct Memo {
    cells: Vec<u8>,
    positions: usize,
    nodes: usize,
}

impl Memo {
    pub fn new() -> Memo {
        Memo { cells: Vec::new(), positions: 0, nodes: 0 }
    }

    fn reset(&mut self, nodes: usize, positions: usize) {
        let want = nodes * positions * positions;
        self.cells.clear();
        self.cells.resize(want, 0);
        self.positions = positions;
        self.nodes = nodes;
    }

    #[inline]
    fn idx(&self, node: usize, i: usize, j: usize) -> usize {
        (node * self.positions + i) * self.positions + j
    }
}

impl Default for Memo {
    fn default() -> Memo {
        Memo::new()
    }
}

impl Evaluator {
    pub fn new(f: &Formula, alphabet: &Alphabet) -> Evaluator {
        let mut nodes = Vec::new();
        let mut seen: BTreeMap<&Formula, usize> = BTreeMap::new();
        let root = intern(f, alphabet, &mut nodes, &mut seen);
        Evaluator { nodes, root }
    }

    /// Evaluate on `states` at positions `(i, j)`. The memo must be freshly
    /// reset for these states; use [`Evaluator::eval`] unless scanning many
    /// positions of one interval.
    fn eval_at(&self, states: &[u64], i: usize, j: usize, memo: &mut Memo) -> bool {
        self.run(self.root, states, i, j, memo)
    }

    /// Evaluate the formula on an interval at `(i, j)`.
    pub fn eval(&self, interval: &Interval, i: usize, j: usize) -> Result<bool, EvalError> {
        let length = interval.length();
        if i > j || j > length {
            return Err(EvalError::OutOfRange { i, j, length });
        }
        let mut memo = Memo::new();
        memo.reset(self.nodes.len(), length + 1);
        Ok(self.eval_at(interval.states(), i, j, &mut memo))
    }

    fn run(&self, node: usize, states: &[u64], i: usize, j: usize, memo: &mut Memo) -> bool {
        let cell = memo.idx(node, i, j);
        match memo.cells[cell] {
            1 => return false,
            2 => return true,
            _ => {}
        }
        let value = match &self.nodes[node] {
            Node::True => true,
            Node::Atom(bit) => match bit {
                Some(bit) => states[i] & (1 << bit) != 0,
                None => false,
            },
            Node::Neg(f) => !self.run(*f, states, i, j, memo),
            Node::And(l, r) => {
                self.run(*l, states, i, j, memo) && self.run(*r, states, i, j, memo)
            }
            Node::Or(l, r) => {
                self.run(*l, states, i, j, memo) || self.run(*r, states, i, j, memo)
            }
            Node::Next(bound, f) => {
                let avail = (j - i) as u64;
                let hi = bound.upper.min_with(avail);
                (bound.lower as u64..=hi)
                    .any(|l| self.run(*f, states, i + l as usize, j, memo))
            }
            Node::Chop(left, bound, right) => (i..=j).any(|r| {
                self.run(*left, states, i, r, memo) && {
                    let avail = (j - r) as u64;
                    let hi = bound.upper.min_with(avail);
                    (bound.lower as u64..=hi)
                        .any(|l| self.run(*right, states, r + l as usize, j, memo))
                }
            }),
        };
        memo.cells[cell] = if value { 2 } else { 1 };
        value
    }
}

fn intern<'f>(
    f: &'f Formula,
    alphabet: &Alphabet,
    nodes: &mut Vec<Node>,
    seen: &mut BTreeMap<&'f Formula, usize>,
) -> usize {
    if let Some(&id) = seen.get(f) {
        return id;
    }
    let node = match f {
        Formula::True => Node::True,
        Formula::Atom(name) => Node::Atom(alphabet.index(name)),
        Formula::Neg(inner) => Node::Neg(intern(inner, alphabet, nodes, seen)),
        Formula::And(l, r) => Node::And(
            intern(l, alphabet, nodes, seen),
            intern(r, alphabet, nodes, seen),
        ),
        Formula::Or(l, r) => Node::Or(
            intern(l, alphabet, nodes, seen),
            intern(r, alphabet, nodes, seen),
        ),
        Formula::Next(b, inner) => Node::Next(*b, intern(inner, alphabet, nodes, seen)),
        Formula::Chop(l, b, r) => Node::Chop(
            intern(l, alphabet, nodes, seen),
            *b,
            intern(r, alphabet, nodes, seen),
        ),
    };
    nodes.push(node);
    let id = nodes.len() - 1;
    seen.insert(f, id);
    id
}

/// Evaluate `f` on `interval` at `(i, j)`.
pub fn evaluate(interval: &Interval, i: usize, j: usize, f: &Formula) -> Result<bool, EvalError> {
    Evaluator::new(f, interval.alphabet()).eval(interval, i, j)
}

// ---------------------------------------------------------------------------
// Exhaustive equivalence
// ---------------------------------------------------------------------------

/// A distinguishing input: the formulas disagree on `interval` evaluated at
/// `(start, interval.length())`.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub interval: Interval,
    pub start: usize,
}

#[derive(Debug, Clone)]
pub enum Equivalence {
    Holds,
    Differs(Counterexample),
}

impl Equivalence {
    pub fn holds(&self) -> bool {
        matches!(self, Equivalence::Holds)
    }
}

/// Refusal to run an exhaustive check beyond the supported scope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScopeError {
    pub alphabet_len: usize,
    pub max_len: usize,
}

impl fmt::Display for ScopeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "scope {} atoms / length {} exceeds the exhaustive-check limit of {} atoms / length {}",
            self.alphabet_len, self.max_len, MAX_SCOPE_ATOMS, MAX_SCOPE_LEN
        )
    }
}

impl core::error::Error for ScopeError {}

/// Exhaustively compare `f` and `g` on every interval over `alphabet` with
/// length at most `max_len`, at every start position `i` with `j` fixed at
/// the interval length. Scopes beyond 3 atoms or length 6 are refused.
pub fn equivalent_on(
    f: &Formula,
    g: &Formula,
    alphabet: &Alphabet,
    max_len: usize,
) -> Result<Equivalence, ScopeError> {
    if alphabet.len() > MAX_SCOPE_ATOMS || max_len > MAX_SCOPE_LEN {
        return Err(ScopeError {
            alphabet_len: alphabet.len(),
            max_len,
        });
    }
    let ef = Evaluator::new(f, alphabet);
    let eg = Evaluator::new(g, alphabet);
    let mut memo_f = Memo::new();
    let mut memo_g = Memo::new();
    let masks = 1u64 << alphabet.len();
    for len in 0..=max_len {
        let mut states = alloc::vec![0u64; len + 1];
        loop {
            memo_f.reset(ef.nodes.len(), len + 1);
            memo_g.reset(eg.nodes.len(), len + 1);
            for i in 0..=len {
                let vf = ef.eval_at(&states, i, len, &mut memo_f);
                let vg = eg.eval_at(&states, i, len, &mut memo_g);
                if vf != vg {
                    let interval = Interval::new(alphabet.clone(), states.clone())
                        .expect("non-empty by construction");
                    return Ok(Equivalence::Differs(Counterexample { interval, start: i }));
                }
            }
            // Odometer step through all state vectors.
            let mut pos = 0;
            loop {
                if pos == states.len() {
                    break;
                }
                states[pos] += 1;
                if states[pos] < masks {
                    break;
                }
                states[pos] = 0;
                pos += 1;
            }
            if pos == states.len() {
                break;
            }
        }
    }
    Ok(Equivalence::Holds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{self, Formula};
    use crate::parser::parse_formula;

    fn interval(text: &str) -> Interval {
        parse_interval(text).unwrap()
    }

    fn alphabet(names: &[&str]) -> Alphabet {
        Alphabet::new(names.iter().map(|s| String::from(*s))).unwrap()
    }

    #[test]
    fn atom_checks_current_state() {
        let sigma = interval("p");
        assert!(evaluate(&sigma, 0, 0, &Formula::atom("p")).unwrap());
        assert!(!evaluate(&sigma, 0, 0, &Formula::atom("q")).unwrap());
    }

    #[test]
    fn timed_next_searches_the_window() {
        let sigma = interval("\n\nq");
        let f = parse_formula("X[1,2] q").unwrap();
        assert!(evaluate(&sigma, 0, 2, &f).unwrap());
        assert!(!evaluate(&sigma, 1, 1, &f).unwrap());
        let tight = parse_formula("X[1,1] q").unwrap();
        assert!(!evaluate(&sigma, 0, 2, &tight).unwrap());
    }

    #[test]
    fn timed_chop_splits_the_interval() {
        let sigma = interval("p\n\n\n\nq");
        let f = parse_formula("p ; X[3,4] q").unwrap();
        assert!(evaluate(&sigma, 0, 4, &f).unwrap());
        let shorter = interval("p\n\nq");
        assert!(!evaluate(&shorter, 0, 2, &f).unwrap());
    }

    #[test]
    fn empty_marks_interval_end() {
        let f = formula::empty();
        assert!(evaluate(&interval("\n"), 0, 0, &f).unwrap());
        assert!(!evaluate(&interval("\n\n"), 0, 1, &f).unwrap());
        assert!(evaluate(&interval("\n\n"), 1, 1, &f).unwrap());
    }

    #[test]
    fn omega_upper_reaches_interval_end() {
        let sigma = interval("\n\n\nq");
        let f = parse_formula("X[1,w] q").unwrap();
        assert!(evaluate(&sigma, 0, 3, &f).unwrap());
        assert!(!evaluate(&sigma, 0, 2, &f).unwrap());
    }

    #[test]
    fn rejects_bad_positions() {
        let sigma = interval("p\nq");
        assert!(evaluate(&sigma, 1, 0, &Formula::True).is_err());
        assert!(evaluate(&sigma, 0, 2, &Formula::True).is_err());
    }

    #[test]
    fn negation_is_complement_everywhere() {
        let sigma = interval("p\n\np q\n\n");
        let samples = [
            parse_formula("p ; q").unwrap(),
            parse_formula("X[1,2] (p & !q)").unwrap(),
            parse_formula("<> q").unwrap(),
        ];
        for f in &samples {
            for i in 0..=3 {
                for j in i..=3 {
                    let plain = evaluate(&sigma, i, j, f).unwrap();
                    let negated = evaluate(&sigma, i, j, &f.clone().neg()).unwrap();
                    assert_eq!(negated, !plain);
                }
            }
        }
    }

    #[test]
    fn chop_after_empty_is_timed_next() {
        let f = parse_formula("empty ;[2,2] p").unwrap();
        let g = parse_formula("X[2,2] p").unwrap();
        let result = equivalent_on(&f, &g, &alphabet(&["p"]), 4).unwrap();
        assert!(result.holds());
    }

    #[test]
    fn finds_distinguishing_interval() {
        let f = parse_formula("X[1,1] p").unwrap();
        let g = parse_formula("p").unwrap();
        match equivalent_on(&f, &g, &alphabet(&["p"]), 2).unwrap() {
            Equivalence::Holds => panic!("formulas differ"),
            Equivalence::Differs(ce) => {
                let j = ce.interval.length();
                let vf = evaluate(&ce.interval, ce.start, j, &f).unwrap();
                let vg = evaluate(&ce.interval, ce.start, j, &g).unwrap();
                assert_ne!(vf, vg);
            }
        }
    }

    #[test]
    fn refuses_oversized_scopes() {
        let a4 = alphabet(&["a", "b", "c", "d"]);
        let p = Formula::atom("p");
        assert!(equivalent_on(&p, &p, &a4, 2).is_err());
        let a1 = alphabet(&["p"]);
        assert!(equivalent_on(&p, &p, &a1, 7).is_err());
    }

    #[test]
    fn trace_parsing_round_trips() {
        let sigma = interval("p q\n\nq");
        assert_eq!(sigma.length(), 2);
        assert!(sigma.holds(0, "p") && sigma.holds(0, "q"));
        assert!(!sigma.holds(1, "q"));
        assert_eq!(alloc::format!("{sigma}"), "{p q} {} {q}");
        assert_eq!(sigma.to_trace_text(), "p q\n\nq\n");
        assert_eq!(parse_interval(&sigma.to_trace_text()).unwrap(), sigma);

        let empty_end = interval("p\n\n");
        assert_eq!(empty_end.length(), 1);
        assert_eq!(parse_interval(&empty_end.to_trace_text()).unwrap(), empty_end);

        assert_eq!(parse_interval(""), Err(TraceError::Empty));
        assert_eq!(parse_interval("p\n").unwrap().length(), 0);
        assert!(matches!(parse_interval("3p"), Err(TraceError::BadAtom(_))));
    }
}
