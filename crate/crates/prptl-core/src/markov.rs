//! Finite discrete-time Markov chains with exact rational probabilities:
//! parsing and printing of a flat text format, validation, and seeded
//! path sampling.
//!
//! The text format is line-oriented; `#` starts a comment. Within a file:
//!
//! ```text
//! states: <n>
//! init: <state> <prob>          # repeatable; the entries must sum to 1
//! label: <state> <atom> ...     # atoms true in that state
//! trans: <src> <dst> <prob>     # each source row must sum to exactly 1
//! ```
//!
//! Probabilities are written as integers, decimals, or `a/b` fractions,
//! and are parsed exactly; validation uses no tolerance.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::semantics::{Alphabet, Interval};
use crate::Rational;

/// A validated discrete-time Markov chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dtmc {
    state_count: usize,
    /// Dense initial distribution; sums to exactly 1.
    initial: Vec<Rational>,
    /// Per-source rows of (target, probability), sorted by target, with
    /// only positive entries; each row sums to exactly 1.
    rows: Vec<Vec<(usize, Rational)>>,
    labels: Vec<BTreeSet<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    Syntax { line: usize, message: String },
    MissingStates,
    MissingInit,
    BadIndex { index: usize, state_count: usize },
    DuplicateTransition { src: usize, dst: usize },
    DuplicateInit { state: usize },
    ProbabilityRange { value: Rational },
    RowSum { state: usize, sum: Rational },
    InitSum { sum: Rational },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Syntax { line, message } => write!(f, "line {line}: {message}"),
            ModelError::MissingStates => write!(f, "missing `states:` declaration"),
            ModelError::MissingInit => write!(f, "missing `init:` declaration"),
            ModelError::BadIndex { index, state_count } => {
                write!(f, "state {index} is out of range for {state_count} states")
            }
            ModelError::DuplicateTransition { src, dst } => {
                write!(f, "transition {src} -> {dst} is declared twice")
            }
            ModelError::DuplicateInit { state } => {
                write!(f, "initial state {state} is declared twice")
            }
            ModelError::ProbabilityRange { value } => {
                write!(f, "probability {value} is outside [0,1]")
            }
            ModelError::RowSum { state, sum } => {
                write!(f, "row for state {state} sums to {sum}, expected 1")
            }
            ModelError::InitSum { sum } => {
                write!(f, "initial distribution sums to {sum}, expected 1")
            }
        }
    }
}

impl core::error::Error for ModelError {}

impl Dtmc {
    /// Validate and build a chain from raw parts.
    pub fn from_parts(
        state_count: usize,
        init: Vec<(usize, Rational)>,
        transitions: Vec<(usize, usize, Rational)>,
        labeling: Vec<(usize, BTreeSet<String>)>,
    ) -> Result<Dtmc, ModelError> {
        let check_index = |index: usize| {
            if index >= state_count {
                Err(ModelError::BadIndex { index, state_count })
            } else {
                Ok(())
            }
        };
        let check_prob = |value: &Rational| {
            if *value < Rational::zero() || *value > Rational::one() {
                Err(ModelError::ProbabilityRange { value: value.clone() })
            } else {
                Ok(())
            }
        };

        if init.is_empty() {
            return Err(ModelError::MissingInit);
        }
        let mut initial = alloc::vec![Rational::zero(); state_count];
        let mut seen_init = BTreeSet::new();
        for (state, p) in init {
            check_index(state)?;
            check_prob(&p)?;
            if !seen_init.insert(state) {
                return Err(ModelError::DuplicateInit { state });
            }
            initial[state] = p;
        }
        let init_sum: Rational = initial.iter().sum();
        if !init_sum.is_one() {
            return Err(ModelError::InitSum { sum: init_sum });
        }

        let mut rows: Vec<Vec<(usize, Rational)>> = alloc::vec![Vec::new(); state_count];
        let mut seen_trans = BTreeSet::new();
        for (src, dst, p) in transitions {
            check_index(src)?;
            check_index(dst)?;
            check_prob(&p)?;
            if !seen_trans.insert((src, dst)) {
                return Err(ModelError::DuplicateTransition { src, dst });
            }
            if !p.is_zero() {
                rows[src].push((dst, p));
            }
        }
        for (state, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|(dst, _)| *dst);
            let sum: Rational = row.iter().map(|(_, p)| p).sum();
            if !sum.is_one() {
                return Err(ModelError::RowSum { state, sum });
            }
        }

        let mut labels = alloc::vec![BTreeSet::new(); state_count];
        for (state, atoms) in labeling {
            check_index(state)?;
            labels[state].extend(atoms);
        }

        Ok(Dtmc {
            state_count,
            initial,
            rows,
            labels,
        })
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    /// Dense initial distribution.
    pub fn initial(&self) -> &[Rational] {
        &self.initial
    }

    /// Positive outgoing transitions of `state`, sorted by target.
    pub fn row(&self, state: usize) -> &[(usize, Rational)] {
        &self.rows[state]
    }

    pub fn labels(&self, state: usize) -> &BTreeSet<String> {
        &self.labels[state]
    }

    /// All atoms used anywhere in the labeling.
    pub fn atoms(&self) -> BTreeSet<String> {
        self.labels.iter().flatten().cloned().collect()
    }

    /// Canonical text form; `load(save(m))` reproduces `m` exactly.
    pub fn save(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "states: {}", self.state_count);
        for (state, p) in self.initial.iter().enumerate() {
            if !p.is_zero() {
                let _ = writeln!(out, "init: {state} {p}");
            }
        }
        for (state, atoms) in self.labels.iter().enumerate() {
            if !atoms.is_empty() {
                let names: Vec<&str> = atoms.iter().map(String::as_str).collect();
                let _ = writeln!(out, "label: {state} {}", names.join(" "));
            }
        }
        for (src, row) in self.rows.iter().enumerate() {
            for (dst, p) in row {
                let _ = writeln!(out, "trans: {src} {dst} {p}");
            }
        }
        out
    }
}

/// Parse a probability written as an integer, decimal, or `a/b` fraction.
pub fn parse_probability(text: &str) -> Option<Rational> {
    if let Some((numer, denom)) = text.split_once('/') {
        let n: BigInt = numer.parse().ok()?;
        let d: BigInt = denom.parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let whole_part: BigInt = if whole.is_empty() { BigInt::zero() } else { whole.parse().ok()? };
        let frac_part: BigInt = frac.parse().ok()?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        return Some(Rational::new(whole_part * &scale + frac_part, scale));
    }
    let n: BigInt = text.parse().ok()?;
    Some(Rational::from_integer(n))
}

fn is_atom_name(text: &str) -> bool {
    let mut bytes = text.bytes();
    match bytes.next() {
        Some(b) if b.is_ascii_alphabetic() || b == b'_' => {}
        _ => return false,
    }
    bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

/// Parse and validate a chain from its text form.
pub fn load(text: &str) -> Result<Dtmc, ModelError> {
    let syntax = |line: usize, message: String| ModelError::Syntax { line, message };
    let mut state_count: Option<usize> = None;
    let mut init = Vec::new();
    let mut transitions = Vec::new();
    let mut labeling = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((directive, rest)) = line.split_once(':') else {
            return Err(syntax(line_no, alloc::format!("expected `directive: ...`, found `{line}`")));
        };
        let fields: Vec<&str> = rest.split_whitespace().collect();
        let nat = |field: &str| -> Result<usize, ModelError> {
            field
                .parse::<usize>()
                .map_err(|_| syntax(line_no, alloc::format!("`{field}` is not a state index")))
        };
        let prob = |field: &str| -> Result<Rational, ModelError> {
            parse_probability(field)
                .ok_or_else(|| syntax(line_no, alloc::format!("`{field}` is not a probability")))
        };
        match directive.trim() {
            "states" => {
                if state_count.is_some() {
                    return Err(syntax(line_no, "`states:` declared twice".to_string()));
                }
                let [n] = fields[..] else {
                    return Err(syntax(line_no, "expected `states: <n>`".to_string()));
                };
                state_count = Some(nat(n)?);
            }
            "init" => {
                let [state, p] = fields[..] else {
                    return Err(syntax(line_no, "expected `init: <state> <prob>`".to_string()));
                };
                init.push((nat(state)?, prob(p)?));
            }
            "label" => {
                let [state, atoms @ ..] = &fields[..] else {
                    return Err(syntax(line_no, "expected `label: <state> <atom> ...`".to_string()));
                };
                for atom in atoms {
                    if !is_atom_name(atom) {
                        return Err(syntax(line_no, alloc::format!("`{atom}` is not an atom name")));
                    }
                }
                labeling.push((
                    nat(state)?,
                    atoms.iter().map(|a| a.to_string()).collect::<BTreeSet<String>>(),
                ));
            }
            "trans" => {
                let [src, dst, p] = fields[..] else {
                    return Err(syntax(line_no, "expected `trans: <src> <dst> <prob>`".to_string()));
                };
                transitions.push((nat(src)?, nat(dst)?, prob(p)?));
            }
            other => {
                return Err(syntax(line_no, alloc::format!("unknown directive `{other}`")));
            }
        }
    }

    let state_count = state_count.ok_or(ModelError::MissingStates)?;
    Dtmc::from_parts(state_count, init, transitions, labeling)
}

/// A sampled run: state indices plus the labelings they induce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledPath {
    /// Visited states, in order; never empty. Every consecutive pair has
    /// positive transition probability.
    pub states: Vec<usize>,
    /// The label set of each visited state.
    pub labels: Vec<BTreeSet<String>>,
}

impl LabeledPath {
    /// Project the labelings onto `alphabet`, yielding an interval the
    /// formula evaluator can consume. Atoms outside the alphabet drop out.
    pub fn interval(&self, alphabet: &Alphabet) -> Interval {
        let states: Vec<u64> = self
            .labels
            .iter()
            .map(|set| {
                let mut mask = 0u64;
                for (bit, name) in alphabet.names().iter().enumerate() {
                    if set.contains(name) {
                        mask |= 1 << bit;
                    }
                }
                mask
            })
            .collect();
        Interval::new(alphabet.clone(), states).expect("projected states are in range")
    }
}

/// A uniform draw from [0,1) with 53 random bits.
pub(crate) fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn draw(weights: impl Iterator<Item = (usize, f64)>, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (state, w) in weights {
        if w <= 0.0 {
            continue;
        }
        last = state;
        acc += w;
        if u < acc {
            return state;
        }
    }
    last
}

/// Sample a path of `horizon + 1` states: the first from the initial
/// distribution, each next from the current row. The same seed always
/// yields the same path.
pub fn sample_path(m: &Dtmc, horizon: usize, seed: u64) -> LabeledPath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let to_weight = |p: &Rational| p.to_f64().unwrap_or(0.0);
    let first = draw(
        m.initial().iter().map(to_weight).enumerate(),
        uniform(&mut rng),
    );
    let mut states = alloc::vec![first];
    for _ in 0..horizon {
        let here = *states.last().expect("path is non-empty");
        let next = draw(
            m.row(here).iter().map(|(dst, p)| (*dst, to_weight(p))),
            uniform(&mut rng),
        );
        states.push(next);
    }
    let labels = states.iter().map(|&s| m.labels(s).clone()).collect();
    LabeledPath { states, labels }
}

#[cfg(test)]
mod tests {
    use super::*;

    const COIN: &str = "\
# a fair coin flipped until it lands heads
states: 2
init: 0 1
label: 1 q
trans: 0 0 1/2
trans: 0 1 1/2
trans: 1 1 1
";

    fn half() -> Rational {
        Rational::new(1.into(), 2.into())
    }

    #[test]
    fn loads_the_coin_model() {
        let m = load(COIN).unwrap();
        assert_eq!(m.state_count(), 2);
        assert_eq!(m.initial(), &[Rational::one(), Rational::zero()]);
        assert_eq!(m.row(0), &[(0, half()), (1, half())]);
        assert_eq!(m.row(1), &[(1, Rational::one())]);
        assert!(m.labels(0).is_empty());
        assert!(m.labels(1).contains("q"));
        assert_eq!(m.atoms(), BTreeSet::from([String::from("q")]));
    }

    #[test]
    fn bad_row_sum_reports_state_and_sum() {
        let text = COIN.replace("trans: 0 0 1/2", "trans: 0 0 0.6").replace(
            "trans: 0 1 1/2",
            "trans: 0 1 0.5",
        );
        assert_eq!(
            load(&text),
            Err(ModelError::RowSum {
                state: 0,
                sum: Rational::new(11.into(), 10.into()),
            })
        );
    }

    #[test]
    fn out_of_range_label_is_an_index_error() {
        let text = COIN.replace("label: 1 q", "label: 7 q");
        assert_eq!(
            load(&text),
            Err(ModelError::BadIndex {
                index: 7,
                state_count: 2,
            })
        );
    }

    #[test]
    fn duplicate_transition_is_rejected() {
        let text = alloc::format!("{COIN}trans: 1 1 0\n");
        assert_eq!(
            load(&text),
            Err(ModelError::DuplicateTransition { src: 1, dst: 1 })
        );
    }

    #[test]
    fn missing_init_is_rejected() {
        let text = COIN.replace("init: 0 1\n", "");
        assert_eq!(load(&text), Err(ModelError::MissingInit));
    }

    #[test]
    fn init_must_sum_to_one() {
        let text = COIN.replace("init: 0 1", "init: 0 0.25\ninit: 1 0.7");
        assert_eq!(
            load(&text),
            Err(ModelError::InitSum {
                sum: Rational::new(19.into(), 20.into()),
            })
        );
    }

    #[test]
    fn decimals_parse_exactly() {
        assert_eq!(parse_probability("0.25"), Some(Rational::new(1.into(), 4.into())));
        assert_eq!(parse_probability("1.0"), Some(Rational::one()));
        assert_eq!(parse_probability("2/4"), Some(half()));
        assert_eq!(parse_probability("1"), Some(Rational::one()));
        assert_eq!(parse_probability("1/0"), None);
        assert_eq!(parse_probability("0.x"), None);
    }

    #[test]
    fn save_then_load_is_identity() {
        let m = load(COIN).unwrap();
        assert_eq!(load(&m.save()).unwrap(), m);
        let fancy = "\
states: 3
init: 0 0.5
init: 2 1/2
label: 0 p q
label: 2 r
trans: 0 1 3/4
trans: 0 2 0.25
trans: 1 1 1
trans: 2 0 1
";
        let m = load(fancy).unwrap();
        assert_eq!(load(&m.save()).unwrap(), m);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let m = load(COIN).unwrap();
        let a = sample_path(&m, 5, 7);
        let b = sample_path(&m, 5, 7);
        assert_eq!(a, b);
        assert_eq!(a.states.len(), 6);
        assert_eq!(sample_path(&m, 0, 123).states, alloc::vec![0]);
    }

    #[test]
    fn absorbing_states_stay_absorbed() {
        let m = load(COIN).unwrap();
        for seed in 0..50 {
            let path = sample_path(&m, 8, seed);
            if let Some(first_hit) = path.states.iter().position(|&s| s == 1) {
                assert!(path.states[first_hit..].iter().all(|&s| s == 1));
            }
        }
    }

    #[test]
    fn first_step_frequency_matches_the_row() {
        let m = load(COIN).unwrap();
        let hits = (0..100_000u64)
            .filter(|&seed| sample_path(&m, 1, seed).states[1] == 1)
            .count();
        let freq = hits as f64 / 100_000.0;
        assert!((freq - 0.5).abs() < 0.01, "frequency {freq}");
    }

    #[test]
    fn labeled_paths_project_onto_alphabets() {
        let m = load(COIN).unwrap();
        let path = LabeledPath {
            states: alloc::vec![0, 1, 1],
            labels: alloc::vec![
                m.labels(0).clone(),
                m.labels(1).clone(),
                m.labels(1).clone(),
            ],
        };
        let alphabet = Alphabet::new([String::from("q")]).unwrap();
        let interval = path.interval(&alphabet);
        assert_eq!(interval.length(), 2);
        assert!(!interval.holds(0, "q"));
        assert!(interval.holds(1, "q"));
    }
}
