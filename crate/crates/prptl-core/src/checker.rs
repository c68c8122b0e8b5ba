//! Probability computation over Markov chains: what is the probability
//! that a run satisfies a formula, and does a probability-bound query
//! hold?
//!
//! Runs of a chain are infinite, so the end-of-interval disjuncts of a
//! normal form carry measure zero and are dropped here; the finite-trace
//! oracle ([`enumerate_exact`]) still honors them, which is why oracle
//! comparisons are stated at the formula's effective horizon.
//!
//! Four methods, strongest first:
//! - [`check_bounded`]: exact rational dynamic programming over
//!   (state, residual formula) pairs; requires the residual closure to be
//!   acyclic, which is this crate's realization of "bounded formula".
//! - [`check_unbounded`]: value iteration on the same closure for
//!   single-polarity unbounded formulas (reach-style directly, invariant
//!   style via the complement).
//! - [`enumerate_exact`]: brute-force path enumeration at a horizon, the
//!   ground truth everything else is tested against.
//! - [`estimate`]: seeded Monte Carlo with a 95% Wilson interval.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, ToPrimitive, Zero};

use crate::formula::{canonicalize, Comparator, Formula, ProbQuery};
use crate::markov::{sample_path, Dtmc};
use crate::parser::render;
use crate::semantics::{Alphabet, Evaluator, Interval};
use crate::tnf::{ctnf_unit, tnf, Tnf, TnfError};
use crate::Rational;

#[derive(Debug, Clone)]
pub struct CheckOptions {
    /// Stop value iteration when a sweep changes no variable by more.
    pub tolerance: f64,
    /// Value-iteration sweep cap; hitting it is an error, not a hang.
    pub max_iterations: u64,
    /// Maximum positive-probability paths the enumeration oracle visits.
    pub path_budget: u64,
    /// Maximum effective horizon accepted by the bounded method.
    pub horizon_cap: u64,
    /// Maximum (state, residual formula) variables in one closure.
    pub variable_budget: usize,
}

impl Default for CheckOptions {
    fn default() -> CheckOptions {
        CheckOptions {
            tolerance: 1e-10,
            max_iterations: 1_000_000,
            path_budget: 10_000_000,
            horizon_cap: 10_000,
            variable_budget: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckError {
    /// The bounded method saw an omega bound: use the unbounded method.
    OmegaBound,
    /// The residual closure is cyclic (no finite horizon determines the
    /// formula) or resolves only beyond the formula's effective horizon:
    /// use the unbounded method.
    Unbounded { formula: String },
    HorizonCap { horizon: u64, cap: u64 },
    PathBudget { budget: u64 },
    VariableBudget { budget: usize },
    /// Unbounded operators occur with both polarities.
    UnsupportedFragment { subformula: String },
    NoConvergence { iterations: u64 },
    TooManyAtoms { count: usize },
    ZeroSamples,
    Rewrite(TnfError),
}

impl fmt::Display for CheckError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckError::OmegaBound => {
                write!(f, "formula has an omega bound; use the unbounded method")
            }
            CheckError::Unbounded { formula } => write!(
                f,
                "`{formula}` is not determined within its effective horizon; use the unbounded method"
            ),
            CheckError::HorizonCap { horizon, cap } => {
                write!(f, "effective horizon {horizon} exceeds the cap {cap}")
            }
            CheckError::PathBudget { budget } => {
                write!(f, "more than {budget} positive-probability paths")
            }
            CheckError::VariableBudget { budget } => {
                write!(f, "residual closure exceeds {budget} variables")
            }
            CheckError::UnsupportedFragment { subformula } => write!(
                f,
                "`{subformula}` mixes unbounded operators of both polarities; not supported"
            ),
            CheckError::NoConvergence { iterations } => {
                write!(f, "value iteration did not converge within {iterations} sweeps")
            }
            CheckError::TooManyAtoms { count } => {
                write!(f, "formula mentions {count} atoms, more than the 64 supported")
            }
            CheckError::ZeroSamples => write!(f, "sample count must be positive"),
            CheckError::Rewrite(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for CheckError {}

impl From<TnfError> for CheckError {
    fn from(e: TnfError) -> CheckError {
        CheckError::Rewrite(e)
    }
}

/// A computed probability: exact, iterated with an error bound, or
/// estimated with a 95% confidence interval.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Exact(Rational),
    Approx { value: f64, error_bound: f64 },
    Interval { value: f64, low: f64, high: f64 },
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(p) => p.to_f64().unwrap_or(0.0),
            Value::Approx { value, .. } | Value::Interval { value, .. } => *value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Enumeration,
    BoundedDp,
    Fixpoint,
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Method::Enumeration => "enumeration",
            Method::BoundedDp => "bounded-dp",
            Method::Fixpoint => "fixpoint",
            Method::MonteCarlo => "monte-carlo",
        };
        write!(f, "{name}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub value: Value,
    pub method: Method,
    /// Diagnostic effort count: variables, sweeps, paths, or samples.
    pub work: u64,
    /// Set when satisfaction was judged on truncated path prefixes.
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    /// The computed value is too close to the threshold to decide at the
    /// reported error bound, or `=` was asked of an inexact method.
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        };
        write!(f, "{name}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryOutcome {
    pub verdict: Verdict,
    pub result: CheckResult,
}

/// How deep a formula can look into an interval: the sums of nested upper
/// bounds, plus one per chop for the seam step. `None` when an omega
/// bound makes the depth unbounded. A chop's seam search can still range
/// over a whole run, so a finite value bounds prefix determination only
/// when the residual closure is acyclic (what [`check_bounded`] verifies).
pub fn effective_horizon(f: &Formula) -> Option<u64> {
    match f {
        Formula::True | Formula::Atom(_) => Some(0),
        Formula::Neg(g) => effective_horizon(g),
        Formula::And(l, r) | Formula::Or(l, r) => {
            Some(effective_horizon(l)?.max(effective_horizon(r)?))
        }
        Formula::Next(b, g) => match b.upper {
            crate::bound::Upper::Finite(u) => Some(u as u64 + effective_horizon(g)?),
            crate::bound::Upper::Omega => None,
        },
        Formula::Chop(l, b, r) => match b.upper {
            crate::bound::Upper::Finite(u) => {
                Some(effective_horizon(l)? + u as u64 + effective_horizon(r)? + 1)
            }
            crate::bound::Upper::Omega => None,
        },
    }
}

// ---------------------------------------------------------------------------
// Residual system
// ---------------------------------------------------------------------------

enum Equation {
    Const(Rational),
    /// Sum of probability-weighted successor variables.
    Sum(Vec<(Rational, usize)>),
}

struct System {
    /// Variable index -> (state, residual formula); diagnostics only.
    vars: Vec<(usize, Formula)>,
    equations: Vec<Equation>,
    /// The query value is the init-weighted sum of these variables.
    initial: Vec<(Rational, usize)>,
}

/// Close the (state, residual formula) space from the initial states.
/// Each variable's equation follows one chain step: the unit-step
/// complete normal form of the formula has exactly one future disjunct
/// whose guard matches the state's labels, and its continuation is the
/// obligation at the successor. End-of-interval disjuncts are dropped
/// (measure zero on runs).
fn build_system(m: &Dtmc, root: &Formula, opts: &CheckOptions) -> Result<System, CheckError> {
    let mut tables: BTreeMap<Formula, Tnf> = BTreeMap::new();
    let mut index: BTreeMap<(usize, Formula), usize> = BTreeMap::new();
    let mut vars: Vec<(usize, Formula)> = Vec::new();
    let mut equations: Vec<Equation> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::new();

    let mut intern = |state: usize,
                      formula: Formula,
                      vars: &mut Vec<(usize, Formula)>,
                      queue: &mut VecDeque<usize>|
     -> Result<usize, CheckError> {
        if let Some(&id) = index.get(&(state, formula.clone())) {
            return Ok(id);
        }
        if vars.len() >= opts.variable_budget {
            return Err(CheckError::VariableBudget {
                budget: opts.variable_budget,
            });
        }
        let id = vars.len();
        vars.push((state, formula.clone()));
        index.insert((state, formula), id);
        queue.push_back(id);
        Ok(id)
    };

    let mut initial = Vec::new();
    for (state, p) in m.initial().iter().enumerate() {
        if !p.is_zero() {
            let id = intern(state, root.clone(), &mut vars, &mut queue)?;
            initial.push((p.clone(), id));
        }
    }

    while let Some(id) = queue.pop_front() {
        let (state, formula) = vars[id].clone();
        let equation = if formula.is_true() {
            Equation::Const(Rational::one())
        } else if formula.is_false() {
            Equation::Const(Rational::zero())
        } else {
            if !tables.contains_key(&formula) {
                let unit = ctnf_unit(&tnf(&formula)?);
                tables.insert(formula.clone(), unit);
            }
            let unit = &tables[&formula];
            let labels = m.labels(state);
            let continuation = unit
                .future_disjuncts
                .iter()
                .find(|d| d.guard.eval_with(|a| labels.contains(a)))
                .map(|d| d.continuation.clone())
                .unwrap_or_else(Formula::fals);
            if continuation.is_true() {
                Equation::Const(Rational::one())
            } else if continuation.is_false() {
                Equation::Const(Rational::zero())
            } else {
                let mut terms = Vec::new();
                for (dst, p) in m.row(state) {
                    let child = intern(*dst, continuation.clone(), &mut vars, &mut queue)?;
                    terms.push((p.clone(), child));
                }
                Equation::Sum(terms)
            }
        };
        equations.push(equation);
    }

    Ok(System {
        vars,
        equations,
        initial,
    })
}

/// Evaluate an acyclic system exactly, bottom-up, returning the value and
/// the determination depth: the most transitions any positive-probability
/// run takes before its residual hits a constant. A cycle means no finite
/// prefix determines the formula, reported as [`CheckError::Unbounded`].
fn solve_exact(sys: &System) -> Result<(Rational, u64), CheckError> {
    let n = sys.equations.len();
    // Iterative depth-first postorder with cycle detection.
    const WHITE: u8 = 0;
    const GRAY: u8 = 1;
    const BLACK: u8 = 2;
    let mut color = alloc::vec![WHITE; n];
    let mut order: Vec<usize> = Vec::new();
    for start in 0..n {
        if color[start] != WHITE {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = alloc::vec![(start, 0)];
        color[start] = GRAY;
        while let Some(&(v, child_pos)) = stack.last() {
            let children: &[(Rational, usize)] = match &sys.equations[v] {
                Equation::Const(_) => &[],
                Equation::Sum(terms) => terms,
            };
            if child_pos < children.len() {
                stack.last_mut().expect("stack is non-empty").1 += 1;
                let child = children[child_pos].1;
                match color[child] {
                    WHITE => {
                        color[child] = GRAY;
                        stack.push((child, 0));
                    }
                    GRAY => {
                        return Err(CheckError::Unbounded {
                            formula: render(&sys.vars[child].1),
                        });
                    }
                    _ => {}
                }
            } else {
                color[v] = BLACK;
                order.push(v);
                stack.pop();
            }
        }
    }

    let mut value: Vec<Option<Rational>> = alloc::vec![None; n];
    let mut depth = alloc::vec![0u64; n];
    for v in order {
        let x = match &sys.equations[v] {
            Equation::Const(c) => c.clone(),
            Equation::Sum(terms) => {
                depth[v] = 1 + terms
                    .iter()
                    .map(|(_, child)| depth[*child])
                    .max()
                    .expect("sums have at least one term");
                terms
                    .iter()
                    .map(|(p, child)| p * value[*child].as_ref().expect("children precede parents"))
                    .sum()
            }
        };
        value[v] = Some(x);
    }
    let total = sys
        .initial
        .iter()
        .map(|(p, id)| p * value[*id].as_ref().expect("all variables solved"))
        .sum();
    let determination = sys.initial.iter().map(|(_, id)| depth[*id]).max().unwrap_or(0);
    Ok((total, determination))
}

fn sweep(equations: &[(Option<f64>, Vec<(f64, usize)>)], x: &[f64]) -> Vec<f64> {
    equations
        .iter()
        .map(|(constant, terms)| match constant {
            Some(c) => *c,
            None => terms.iter().map(|(p, child)| p * x[*child]).sum(),
        })
        .collect()
}

fn float_equations(sys: &System) -> Vec<(Option<f64>, Vec<(f64, usize)>)> {
    sys.equations
        .iter()
        .map(|eq| match eq {
            Equation::Const(c) => (Some(c.to_f64().unwrap_or(0.0)), Vec::new()),
            Equation::Sum(terms) => (
                None,
                terms
                    .iter()
                    .map(|(p, child)| (p.to_f64().unwrap_or(0.0), *child))
                    .collect(),
            ),
        })
        .collect()
}

/// Least-fixpoint value iteration from zero. Returns the init-weighted
/// value, the sweep count, and the final sweep's maximum change.
fn solve_lfp(sys: &System, opts: &CheckOptions) -> Result<(f64, u64, f64), CheckError> {
    let equations = float_equations(sys);
    let mut x = alloc::vec![0.0; equations.len()];
    let mut sweeps = 0u64;
    loop {
        let next = sweep(&equations, &x);
        let gap = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        x = next;
        sweeps += 1;
        if gap < opts.tolerance {
            let value: f64 = sys
                .initial
                .iter()
                .map(|(p, id)| p.to_f64().unwrap_or(0.0) * x[*id])
                .sum();
            return Ok((value.clamp(0.0, 1.0), sweeps, gap));
        }
        if sweeps >= opts.max_iterations {
            return Err(CheckError::NoConvergence { iterations: sweeps });
        }
    }
}

// ---------------------------------------------------------------------------
// Enumeration oracle
// ---------------------------------------------------------------------------

/// Exact probability that a random length-`horizon` prefix, read as a
/// finite interval, satisfies `f`: the sum of path probabilities over all
/// positive-probability paths of `horizon + 1` states whose labeling
/// satisfies `f` at positions (0, horizon). Ground truth for the other
/// methods.
pub fn enumerate_exact(m: &Dtmc, f: &Formula, horizon: usize) -> Result<Rational, CheckError> {
    enumerate_exact_with(m, f, horizon, &CheckOptions::default())
}

pub fn enumerate_exact_with(
    m: &Dtmc,
    f: &Formula,
    horizon: usize,
    opts: &CheckOptions,
) -> Result<Rational, CheckError> {
    let c = canonicalize(f);
    let (alphabet, masks) = projection(m, &c)?;
    let evaluator = Evaluator::new(&c, &alphabet);
    let mut walk = Walk {
        m,
        masks: &masks,
        alphabet: &alphabet,
        evaluator: &evaluator,
        horizon,
        budget: opts.path_budget,
        paths: 0,
        total: Rational::zero(),
        prefix: Vec::with_capacity(horizon + 1),
    };
    for (state, p) in m.initial().iter().enumerate() {
        if !p.is_zero() {
            walk.run(state, p.clone())?;
        }
    }
    Ok(walk.total)
}

/// The formula's alphabet plus each state's labels projected onto it.
fn projection(m: &Dtmc, f: &Formula) -> Result<(Alphabet, Vec<u64>), CheckError> {
    let atoms = f.atoms();
    let count = atoms.len();
    let alphabet = Alphabet::new(atoms).map_err(|_| CheckError::TooManyAtoms { count })?;
    let masks = (0..m.state_count())
        .map(|s| {
            let labels = m.labels(s);
            let mut mask = 0u64;
            for (bit, name) in alphabet.names().iter().enumerate() {
                if labels.contains(name) {
                    mask |= 1 << bit;
                }
            }
            mask
        })
        .collect();
    Ok((alphabet, masks))
}

struct Walk<'a> {
    m: &'a Dtmc,
    masks: &'a [u64],
    alphabet: &'a Alphabet,
    evaluator: &'a Evaluator,
    horizon: usize,
    budget: u64,
    paths: u64,
    total: Rational,
    prefix: Vec<u64>,
}

impl Walk<'_> {
    fn run(&mut self, state: usize, prob: Rational) -> Result<(), CheckError> {
        self.prefix.push(self.masks[state]);
        let result = if self.prefix.len() == self.horizon + 1 {
            self.finish(prob)
        } else {
            let row: Vec<(usize, Rational)> = self.m.row(state).to_vec();
            let mut out = Ok(());
            for (dst, p) in row {
                out = self.run(dst, &prob * &p);
                if out.is_err() {
                    break;
                }
            }
            out
        };
        self.prefix.pop();
        result
    }

    fn finish(&mut self, prob: Rational) -> Result<(), CheckError> {
        self.paths += 1;
        if self.paths > self.budget {
            return Err(CheckError::PathBudget {
                budget: self.budget,
            });
        }
        let interval = Interval::new(self.alphabet.clone(), self.prefix.clone())
            .expect("projected masks are in range");
        if self
            .evaluator
            .eval(&interval, 0, self.horizon)
            .expect("(0, horizon) is in range")
        {
            self.total += prob;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Bounded and unbounded checking
// ---------------------------------------------------------------------------

/// Exact probability for formulas whose residual closure is acyclic and
/// resolves within the formula's effective horizon, so that every
/// positive-probability run is decided by that finite prefix. On success
/// the value agrees with [`enumerate_exact`] at the effective horizon
/// exactly; formulas determined later (or never) are rejected with
/// [`CheckError::Unbounded`] and belong to [`check_unbounded`].
pub fn check_bounded(m: &Dtmc, f: &Formula) -> Result<CheckResult, CheckError> {
    check_bounded_with(m, f, &CheckOptions::default())
}

pub fn check_bounded_with(
    m: &Dtmc,
    f: &Formula,
    opts: &CheckOptions,
) -> Result<CheckResult, CheckError> {
    let c = canonicalize(f);
    if c.has_omega() {
        return Err(CheckError::OmegaBound);
    }
    let horizon = effective_horizon(&c).expect("no omega bound");
    if horizon > opts.horizon_cap {
        return Err(CheckError::HorizonCap {
            horizon,
            cap: opts.horizon_cap,
        });
    }
    let system = build_system(m, &c, opts)?;
    let (value, determination) = solve_exact(&system)?;
    if determination > horizon {
        return Err(CheckError::Unbounded { formula: render(&c) });
    }
    Ok(CheckResult {
        value: Value::Exact(value),
        method: Method::BoundedDp,
        work: system.vars.len() as u64,
        truncated: false,
    })
}

/// Which polarity the unbounded operators (chops and omega-bounded
/// nexts) of a formula occur under.
fn polarity(f: &Formula) -> (Option<Formula>, Option<Formula>) {
    let mut positive = None;
    let mut negative = None;
    scan_polarity(f, true, &mut positive, &mut negative);
    (positive, negative)
}

fn scan_polarity(
    f: &Formula,
    even: bool,
    positive: &mut Option<Formula>,
    negative: &mut Option<Formula>,
) {
    let mut mark = |f: &Formula, even: bool| {
        let slot = if even { &mut *positive } else { &mut *negative };
        if slot.is_none() {
            *slot = Some(f.clone());
        }
    };
    match f {
        Formula::True | Formula::Atom(_) => {}
        Formula::Neg(g) => scan_polarity(g, !even, positive, negative),
        Formula::And(l, r) | Formula::Or(l, r) => {
            scan_polarity(l, even, positive, negative);
            scan_polarity(r, even, positive, negative);
        }
        Formula::Next(b, g) => {
            if b.upper.is_omega() {
                mark(f, even);
            }
            scan_polarity(g, even, positive, negative);
        }
        Formula::Chop(l, b, r) => {
            // A chop searches the whole rest of the run for its seam, so
            // it is unbounded regardless of its bound.
            let _ = b;
            mark(f, even);
            scan_polarity(l, even, positive, negative);
            scan_polarity(r, even, positive, negative);
        }
    }
}

/// Iterative probability for formulas whose unbounded operators all sit
/// under one polarity: reach-style formulas are solved as a least
/// fixpoint from zero, invariant-style ones as one minus the complement's
/// least fixpoint. The reported error bound is ten times the final
/// sweep's change (exact for geometric convergence at ratio up to 0.9).
pub fn check_unbounded(m: &Dtmc, f: &Formula, tolerance: f64) -> Result<CheckResult, CheckError> {
    let opts = CheckOptions {
        tolerance,
        ..CheckOptions::default()
    };
    check_unbounded_with(m, f, &opts)
}

pub fn check_unbounded_with(
    m: &Dtmc,
    f: &Formula,
    opts: &CheckOptions,
) -> Result<CheckResult, CheckError> {
    let c = canonicalize(f);
    let (target, complemented) = match polarity(&c) {
        (Some(_), Some(conflict)) => {
            return Err(CheckError::UnsupportedFragment {
                subformula: render(&conflict),
            });
        }
        (None, Some(_)) => (canonicalize(&c.clone().neg()), true),
        _ => (c, false),
    };
    let system = build_system(m, &target, opts)?;
    let (raw, sweeps, gap) = solve_lfp(&system, opts)?;
    let value = if complemented { 1.0 - raw } else { raw };
    Ok(CheckResult {
        value: Value::Approx {
            value: value.clamp(0.0, 1.0),
            error_bound: gap * 10.0,
        },
        method: Method::Fixpoint,
        work: sweeps,
        truncated: false,
    })
}

/// Decide a probability-bound query. Bounded formulas are compared as
/// exact rationals (so `=` is meaningful); iterative results within their
/// error bound of the threshold, and `=` on any inexact result, return
/// [`Verdict::Inconclusive`] rather than a guess.
pub fn check_query(m: &Dtmc, q: &ProbQuery) -> Result<QueryOutcome, CheckError> {
    check_query_with(m, q, &CheckOptions::default())
}

pub fn check_query_with(
    m: &Dtmc,
    q: &ProbQuery,
    opts: &CheckOptions,
) -> Result<QueryOutcome, CheckError> {
    match check_bounded_with(m, &q.body, opts) {
        Ok(result) => {
            let Value::Exact(p) = &result.value else {
                unreachable!("bounded results are exact");
            };
            let verdict = if q.comparator.compare(p, &q.threshold) {
                Verdict::Holds
            } else {
                Verdict::Fails
            };
            Ok(QueryOutcome { verdict, result })
        }
        Err(CheckError::OmegaBound) | Err(CheckError::Unbounded { .. }) => {
            let result = check_unbounded_with(m, &q.body, opts)?;
            let Value::Approx { value, error_bound } = result.value else {
                unreachable!("fixpoint results carry error bounds");
            };
            let threshold = q.threshold.to_f64().expect("threshold is in [0,1]");
            let verdict = if q.comparator == Comparator::Eq
                || (value - threshold).abs() <= error_bound
            {
                Verdict::Inconclusive
            } else {
                let holds = match q.comparator {
                    Comparator::Lt => value < threshold,
                    Comparator::Le => value <= threshold,
                    Comparator::Ge => value >= threshold,
                    Comparator::Gt => value > threshold,
                    Comparator::Eq => unreachable!("handled above"),
                };
                if holds {
                    Verdict::Holds
                } else {
                    Verdict::Fails
                }
            };
            Ok(QueryOutcome { verdict, result })
        }
        Err(e) => Err(e),
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo estimation
// ---------------------------------------------------------------------------

/// 95% Wilson score interval for `successes` out of `samples`.
fn wilson(successes: u64, samples: u64) -> (f64, f64) {
    let z = 1.96f64;
    let n = samples as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * libm::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn has_chop(f: &Formula) -> bool {
    match f {
        Formula::True | Formula::Atom(_) => false,
        Formula::Neg(g) | Formula::Next(_, g) => has_chop(g),
        Formula::And(l, r) | Formula::Or(l, r) => has_chop(l) || has_chop(r),
        Formula::Chop(..) => true,
    }
}

/// Monte Carlo estimate of the satisfaction probability from `samples`
/// seeded path prefixes of `horizon + 1` states. Deterministic for a
/// given seed. When the formula can look past the horizon (an omega
/// bound, bounds summing past it, or a chop, whose seam search is not
/// prefix-bounded in general), the result is marked truncated: prefix
/// truncation then biases the mean.
pub fn estimate(
    m: &Dtmc,
    f: &Formula,
    samples: u64,
    horizon: usize,
    seed: u64,
) -> Result<CheckResult, CheckError> {
    if samples == 0 {
        return Err(CheckError::ZeroSamples);
    }
    let c = canonicalize(f);
    let (alphabet, masks) = projection(m, &c)?;
    let evaluator = Evaluator::new(&c, &alphabet);
    let mut successes = 0u64;
    for i in 0..samples {
        let path = sample_path(m, horizon, seed.wrapping_add(i));
        let states: Vec<u64> = path.states.iter().map(|&s| masks[s]).collect();
        let interval =
            Interval::new(alphabet.clone(), states).expect("projected masks are in range");
        if evaluator
            .eval(&interval, 0, horizon)
            .expect("(0, horizon) is in range")
        {
            successes += 1;
        }
    }
    let (low, high) = wilson(successes, samples);
    let truncated =
        effective_horizon(&c).is_none_or(|h| h > horizon as u64) || has_chop(&c);
    Ok(CheckResult {
        value: Value::Interval {
            value: successes as f64 / samples as f64,
            low,
            high,
        },
        method: Method::MonteCarlo,
        work: samples,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::load;
    use crate::parser::{parse_formula, parse_query};

    const COIN: &str = "\
states: 2
init: 0 1
label: 1 q
trans: 0 0 1/2
trans: 0 1 1/2
trans: 1 1 1
";

    /// A fair six-sided die from fair coin flips: seven flip states and
    /// six absorbing faces.
    const DIE: &str = "\
states: 13
init: 0 1
label: 7 face1
label: 8 face2
label: 9 face3
label: 10 face4
label: 11 face5
label: 12 face6
trans: 0 1 1/2
trans: 0 2 1/2
trans: 1 3 1/2
trans: 1 4 1/2
trans: 2 5 1/2
trans: 2 6 1/2
trans: 3 1 1/2
trans: 3 7 1/2
trans: 4 8 1/2
trans: 4 9 1/2
trans: 5 10 1/2
trans: 5 11 1/2
trans: 6 2 1/2
trans: 6 12 1/2
trans: 7 7 1
trans: 8 8 1
trans: 9 9 1
trans: 10 10 1
trans: 11 11 1
trans: 12 12 1
";

    fn fml(text: &str) -> Formula {
        parse_formula(text).unwrap()
    }

    fn ratio(n: i32, d: i32) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn exact(result: &CheckResult) -> Rational {
        match &result.value {
            Value::Exact(p) => p.clone(),
            other => panic!("expected an exact value, got {other:?}"),
        }
    }

    fn approx(result: &CheckResult) -> (f64, f64) {
        match result.value {
            Value::Approx { value, error_bound } => (value, error_bound),
            ref other => panic!("expected an iterated value, got {other:?}"),
        }
    }

    #[test]
    fn horizon_follows_structure() {
        assert_eq!(effective_horizon(&fml("q")), Some(0));
        assert_eq!(effective_horizon(&fml("X[1,2] q")), Some(2));
        assert_eq!(effective_horizon(&fml("empty")), Some(1));
        assert_eq!(effective_horizon(&fml("p ; X[3,4] q")), Some(5));
        assert_eq!(effective_horizon(&fml("<> q")), Some(1));
        assert_eq!(effective_horizon(&fml("X[1,w] q")), None);
        assert_eq!(effective_horizon(&fml("p ;[2,w] q")), None);
    }

    #[test]
    fn enumeration_matches_hand_counts() {
        let m = load(COIN).unwrap();
        assert_eq!(enumerate_exact(&m, &fml("X[1,1] q"), 2).unwrap(), ratio(1, 2));
        assert_eq!(enumerate_exact(&m, &fml("X[1,2] q"), 2).unwrap(), ratio(3, 4));
        assert_eq!(enumerate_exact(&m, &Formula::True, 3).unwrap(), Rational::one());
        assert_eq!(enumerate_exact(&m, &fml("empty"), 0).unwrap(), Rational::one());
    }

    #[test]
    fn enumeration_respects_the_path_budget() {
        let m = load(COIN).unwrap();
        // Three positive-probability paths of three states exist.
        let opts = CheckOptions {
            path_budget: 2,
            ..CheckOptions::default()
        };
        assert_eq!(
            enumerate_exact_with(&m, &fml("q"), 2, &opts),
            Err(CheckError::PathBudget { budget: 2 })
        );
    }

    #[test]
    fn bounded_coin_probabilities() {
        let m = load(COIN).unwrap();
        let check = |text: &str| exact(&check_bounded(&m, &fml(text)).unwrap());
        assert_eq!(check("X[1,2] q"), ratio(3, 4));
        assert_eq!(check("X[1,1] q"), ratio(1, 2));
        assert_eq!(check("empty"), Rational::zero());
        assert_eq!(check("true"), Rational::one());
    }

    #[test]
    fn bounded_rejects_unbounded_shapes() {
        let m = load(COIN).unwrap();
        assert_eq!(
            check_bounded(&m, &fml("X[1,w] q")),
            Err(CheckError::OmegaBound)
        );
        assert!(matches!(
            check_bounded(&m, &fml("<> q")),
            Err(CheckError::Unbounded { .. })
        ));
        let opts = CheckOptions {
            horizon_cap: 3,
            ..CheckOptions::default()
        };
        assert_eq!(
            check_bounded_with(&m, &fml("X[1,9] q"), &opts),
            Err(CheckError::HorizonCap { horizon: 9, cap: 3 })
        );
    }

    #[test]
    fn bounded_agrees_with_enumeration_at_the_horizon() {
        let m = load(COIN).unwrap();
        for text in [
            "q",
            "!q",
            "more",
            "empty",
            "X[1,2] q",
            "!X[1,2] q",
            "X[1,1] q & X[1,2] q",
            "X[2,3] q | empty",
            "X[1,1] X[1,2] q",
            "empty ;[1,2] q",
        ] {
            let f = fml(text);
            let h = effective_horizon(&canonicalize(&f)).unwrap() as usize;
            let dp = exact(&check_bounded(&m, &f).unwrap());
            let oracle = enumerate_exact(&m, &f, h).unwrap();
            assert_eq!(dp, oracle, "{text} at horizon {h}");
        }
    }

    #[test]
    fn bounded_complement_identity() {
        let m = load(COIN).unwrap();
        for text in ["q", "X[1,2] q", "X[1,1] q & X[2,2] q", "empty", "more"] {
            let f = fml(text);
            let direct = exact(&check_bounded(&m, &f).unwrap());
            let complement = exact(&check_bounded(&m, &f.neg()).unwrap());
            assert_eq!(direct + complement, Rational::one(), "{text}");
        }
    }

    #[test]
    fn fixpoint_reaches_the_coin_limits() {
        let m = load(COIN).unwrap();
        let (v, e) = approx(&check_unbounded(&m, &fml("<> q"), 1e-10).unwrap());
        assert!((v - 1.0).abs() <= 1e-9, "value {v}");
        assert!(e <= 1e-9);
        let (v, _) = approx(&check_unbounded(&m, &fml("[] !q"), 1e-10).unwrap());
        assert!(v.abs() <= 1e-9, "value {v}");
    }

    #[test]
    fn fixpoint_computes_the_die_face() {
        let m = load(DIE).unwrap();
        let (v, _) = approx(&check_unbounded(&m, &fml("<> face1"), 1e-10).unwrap());
        assert!((v - 1.0 / 6.0).abs() <= 1e-9, "value {v}");
    }

    #[test]
    fn mixed_polarity_is_rejected_by_name() {
        let m = load(COIN).unwrap();
        let err = check_unbounded(&m, &fml("<> q & [] q"), 1e-10).unwrap_err();
        let CheckError::UnsupportedFragment { subformula } = err else {
            panic!("expected a fragment error, got {err:?}");
        };
        assert!(subformula.contains(";"), "offending subformula: {subformula}");
    }

    #[test]
    fn sweeps_are_monotone_for_least_fixpoints() {
        let m = load(COIN).unwrap();
        let f = canonicalize(&fml("<> q"));
        let system = build_system(&m, &f, &CheckOptions::default()).unwrap();
        let equations = float_equations(&system);
        let mut x = alloc::vec![0.0; equations.len()];
        for _ in 0..60 {
            let next = sweep(&equations, &x);
            for (a, b) in next.iter().zip(&x) {
                assert!(a >= b, "sweep decreased a variable");
            }
            x = next;
        }
    }

    #[test]
    fn queries_compare_exactly_when_bounded() {
        let m = load(COIN).unwrap();
        let run = |text: &str| check_query(&m, &parse_query(text).unwrap()).unwrap();
        assert_eq!(run("Pr>=0.5 [ X[1,1] q ]").verdict, Verdict::Holds);
        assert_eq!(run("Pr>0.5 [ X[1,1] q ]").verdict, Verdict::Fails);
        assert_eq!(run("Pr=0.5 [ X[1,1] q ]").verdict, Verdict::Holds);
        assert_eq!(run("Pr<1/4 [ X[1,1] q ]").verdict, Verdict::Fails);
    }

    #[test]
    fn queries_near_iterated_values_are_inconclusive() {
        let m = load(COIN).unwrap();
        let run = |text: &str| check_query(&m, &parse_query(text).unwrap()).unwrap();
        assert_eq!(run("Pr>=1 [ <> q ]").verdict, Verdict::Inconclusive);
        assert_eq!(run("Pr=0.5 [ <> q ]").verdict, Verdict::Inconclusive);
        assert_eq!(run("Pr>0.9 [ <> q ]").verdict, Verdict::Holds);
        assert_eq!(run("Pr<0.2 [ <> q ]").verdict, Verdict::Fails);
    }

    #[test]
    fn estimates_concentrate_and_repeat() {
        let m = load(COIN).unwrap();
        let r = estimate(&m, &fml("X[1,2] q"), 100_000, 2, 42).unwrap();
        let Value::Interval { value, low, high } = r.value else {
            panic!("expected an interval");
        };
        assert!((value - 0.75).abs() < 0.01, "estimate {value}");
        assert!(low <= 0.75 && 0.75 <= high, "interval [{low}, {high}]");
        assert!(!r.truncated);
        let again = estimate(&m, &fml("X[1,2] q"), 100_000, 2, 42).unwrap();
        assert_eq!(r, again);
        let sure = estimate(&m, &Formula::True, 1000, 3, 7).unwrap();
        assert_eq!(sure.value.to_f64(), 1.0);
        let trunc = estimate(&m, &fml("<> q"), 10, 4, 7).unwrap();
        assert!(trunc.truncated);
        assert_eq!(
            estimate(&m, &fml("q"), 0, 1, 1),
            Err(CheckError::ZeroSamples)
        );
    }
}
