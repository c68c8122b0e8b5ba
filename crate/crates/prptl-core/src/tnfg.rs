//! Time normal form graphs: a formula unrolled into a finite directed
//! graph whose nodes are (formula, delay) pairs and whose edges carry
//! guards. A path from the root to the end marker spells out, state by
//! state, one way an interval can satisfy the formula: each edge's guard
//! constrains one state, and delayed nodes tick down their window one
//! state at a time.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use num_traits::{One, Zero};

use crate::bound::TimeBound;
use crate::formula::{canonicalize, Formula};
use crate::guard::Guard;
use crate::parser::render;
use crate::tnf::{ctnf, tnf, Tnf, TnfError};
use crate::Rational;

/// How long a node still has to wait before its formula must make a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Delay {
    /// No wait: the node expands by its normal form immediately.
    Zero,
    /// A non-zero window `[a,b]` still to tick through.
    Wait(TimeBound),
}

impl Delay {
    fn from_bound(b: TimeBound) -> Delay {
        if b.is_zero() {
            Delay::Zero
        } else {
            Delay::Wait(b)
        }
    }

    /// The delay as a bound, with the zero marker reading as `[0,0]`.
    pub fn bound(self) -> TimeBound {
        match self {
            Delay::Zero => TimeBound::ZERO,
            Delay::Wait(b) => b,
        }
    }
}

/// A graph node: either the end marker or a pending formula.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Node {
    /// Reaching this marker means the interval may end here.
    Eps,
    /// `formula` must hold once `delay` has elapsed.
    State { formula: Formula, delay: Delay },
}

impl Node {
    fn state(formula: Formula, delay: Delay) -> Node {
        Node::State { formula, delay }
    }

    /// Label used by the listing and the DOT export.
    pub fn label(&self) -> String {
        match self {
            Node::Eps => String::from("eps"),
            Node::State { formula, delay } => {
                alloc::format!("{} @ {}", render(formula), delay.bound())
            }
        }
    }
}

/// A guard-labeled edge between node indices, with an optional
/// probability annotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub source: usize,
    pub guard: Guard,
    pub target: usize,
    pub probability: Option<Rational>,
}

/// The unrolled graph. Node and edge indices are stable: they follow
/// discovery order from the root, which is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    /// The closure needed more nodes than allowed; `frontier` names the
    /// node that did not fit.
    NodeLimit { limit: usize, frontier: String },
    /// The formula mentions an atom outside the declared alphabet.
    UndeclaredAtom(String),
    /// Normal form rewriting failed.
    Rewrite(TnfError),
    UnknownEdge { id: usize },
    /// An assigned probability lies outside [0,1].
    ProbabilityRange { id: usize },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::NodeLimit { limit, frontier } => {
                write!(f, "node limit {limit} exceeded while adding `{frontier}`")
            }
            GraphError::UndeclaredAtom(name) => {
                write!(f, "atom `{name}` is not in the declared alphabet")
            }
            GraphError::Rewrite(e) => write!(f, "{e}"),
            GraphError::UnknownEdge { id } => write!(f, "no edge has id {id}"),
            GraphError::ProbabilityRange { id } => {
                write!(f, "probability for edge {id} is outside [0,1]")
            }
        }
    }
}

impl core::error::Error for GraphError {}

impl From<TnfError> for GraphError {
    fn from(e: TnfError) -> GraphError {
        GraphError::Rewrite(e)
    }
}

impl Graph {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// The root node index (always 0).
    pub fn root(&self) -> usize {
        0
    }

    /// Index of the end marker, when any interval can end at all.
    pub fn eps_index(&self) -> Option<usize> {
        self.nodes.iter().position(|n| *n == Node::Eps)
    }

    /// Set probability annotations by edge id, leaving unassigned edges
    /// unset. All values are validated before any edge changes.
    pub fn attach_probabilities(
        mut self,
        assignment: &BTreeMap<usize, Rational>,
    ) -> Result<Graph, GraphError> {
        for (&id, p) in assignment {
            if id >= self.edges.len() {
                return Err(GraphError::UnknownEdge { id });
            }
            if *p < Rational::zero() || *p > Rational::one() {
                return Err(GraphError::ProbabilityRange { id });
            }
        }
        for (&id, p) in assignment {
            self.edges[id].probability = Some(p.clone());
        }
        Ok(self)
    }

    /// Line-oriented node/edge listing with stable ids.
    pub fn listing(&self) -> String {
        let mut out = String::new();
        for (id, node) in self.nodes.iter().enumerate() {
            let _ = writeln!(out, "node {id}: {}", node.label());
        }
        for (id, edge) in self.edges.iter().enumerate() {
            let _ = writeln!(
                out,
                "edge {id}: {} -[{}]-> {}",
                edge.source,
                edge_label(edge),
                edge.target
            );
        }
        out
    }

    /// Deterministic DOT text; the end marker is double-circled.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph tnfg {\n  rankdir=LR;\n");
        for (id, node) in self.nodes.iter().enumerate() {
            let shape = match node {
                Node::Eps => ", shape=doublecircle",
                Node::State { .. } => "",
            };
            let _ = writeln!(out, "  n{id} [label=\"{}\"{shape}];", node.label());
        }
        for edge in &self.edges {
            let _ = writeln!(
                out,
                "  n{} -> n{} [label=\"{}\"];",
                edge.source,
                edge.target,
                edge_label(edge)
            );
        }
        out.push_str("}\n");
        out
    }

    /// Whether some root-to-end path consumes exactly `word`, one state
    /// per edge, with every guard satisfied by its state.
    pub fn accepts(&self, word: &[BTreeSet<String>]) -> bool {
        let mut dead = BTreeSet::new();
        self.accepts_from(self.root(), 0, word, &mut dead)
    }

    fn accepts_from(
        &self,
        node: usize,
        pos: usize,
        word: &[BTreeSet<String>],
        dead: &mut BTreeSet<(usize, usize)>,
    ) -> bool {
        if pos >= word.len() || dead.contains(&(node, pos)) {
            return false;
        }
        for edge in self.edges.iter().filter(|e| e.source == node) {
            if !edge.guard.eval_with(|a| word[pos].contains(a)) {
                continue;
            }
            match self.nodes[edge.target] {
                Node::Eps => {
                    if pos + 1 == word.len() {
                        return true;
                    }
                }
                Node::State { .. } => {
                    if self.accepts_from(edge.target, pos + 1, word, dead) {
                        return true;
                    }
                }
            }
        }
        dead.insert((node, pos));
        false
    }
}

fn edge_label(edge: &Edge) -> String {
    match &edge.probability {
        None => alloc::format!("{}", edge.guard),
        Some(p) => alloc::format!("{} / {}", edge.guard, p),
    }
}

/// Unroll `f` into its graph: the root `(f, zero)` is expanded through
/// the complete normal form, each future disjunct `g & X[a,b] Q` adds a
/// node `(Q, [a-1, b-1])` (omega minus one is omega), and each
/// empty-disjunct guard points at the end marker. A waiting node
/// `(Q, [a,b])` with `a >= 1` ticks down by a single true-guarded edge;
/// once `a` reaches 0 it also exposes `(Q, zero)`'s edges while the upper
/// endpoint keeps ticking (an omega window waits on a self-loop).
/// Disjuncts whose continuation is unsatisfiable are dropped.
pub fn build(
    f: &Formula,
    alphabet: &BTreeSet<String>,
    node_limit: usize,
) -> Result<Graph, GraphError> {
    if let Some(outside) = f.atoms().into_iter().find(|a| !alphabet.contains(a)) {
        return Err(GraphError::UndeclaredAtom(outside));
    }
    let mut builder = Builder {
        nodes: Vec::new(),
        index: BTreeMap::new(),
        edges: Vec::new(),
        edge_ids: BTreeSet::new(),
        forms: BTreeMap::new(),
        queue: VecDeque::new(),
        limit: node_limit,
        alphabet,
    };
    builder.intern(Node::state(canonicalize(f), Delay::Zero))?;
    while let Some(id) = builder.queue.pop_front() {
        builder.expand(id)?;
    }
    Ok(Graph {
        nodes: builder.nodes,
        edges: builder.edges,
    })
}

struct Builder<'a> {
    nodes: Vec<Node>,
    index: BTreeMap<Node, usize>,
    edges: Vec<Edge>,
    edge_ids: BTreeSet<(usize, Guard, usize)>,
    forms: BTreeMap<Formula, Tnf>,
    queue: VecDeque<usize>,
    limit: usize,
    alphabet: &'a BTreeSet<String>,
}

impl Builder<'_> {
    fn intern(&mut self, node: Node) -> Result<usize, GraphError> {
        if let Some(&id) = self.index.get(&node) {
            return Ok(id);
        }
        if self.nodes.len() >= self.limit {
            return Err(GraphError::NodeLimit {
                limit: self.limit,
                frontier: match &node {
                    Node::Eps => String::from("eps"),
                    Node::State { formula, .. } => render(formula),
                },
            });
        }
        let id = self.nodes.len();
        self.nodes.push(node.clone());
        if matches!(node, Node::State { .. }) {
            self.queue.push_back(id);
        }
        self.index.insert(node, id);
        Ok(id)
    }

    fn add_edge(&mut self, source: usize, guard: Guard, target: usize) {
        if self.edge_ids.insert((source, guard.clone(), target)) {
            self.edges.push(Edge {
                source,
                guard,
                target,
                probability: None,
            });
        }
    }

    fn expand(&mut self, id: usize) -> Result<(), GraphError> {
        let Node::State { formula, delay } = self.nodes[id].clone() else {
            return Ok(());
        };
        match delay {
            Delay::Zero => self.expand_zero(id, &formula),
            Delay::Wait(b) if b.lower >= 1 => {
                let target = self.intern(Node::state(formula, Delay::from_bound(b.pred())))?;
                self.add_edge(id, Guard::truth(), target);
                Ok(())
            }
            Delay::Wait(b) => {
                self.expand_zero(id, &formula)?;
                let rest = TimeBound::with_upper(0, b.upper.pred())
                    .expect("a non-zero wait with lower 0 has upper >= 1");
                let target = self.intern(Node::state(formula, Delay::from_bound(rest)))?;
                self.add_edge(id, Guard::truth(), target);
                Ok(())
            }
        }
    }

    fn expand_zero(&mut self, id: usize, formula: &Formula) -> Result<(), GraphError> {
        let form = self.normal_form(formula)?;
        for g in form.empty_disjuncts {
            let eps = self.intern(Node::Eps)?;
            self.add_edge(id, g, eps);
        }
        for d in form.future_disjuncts {
            if d.continuation.is_false() {
                continue;
            }
            let target = self.intern(Node::state(
                d.continuation,
                Delay::from_bound(d.bound.pred()),
            ))?;
            self.add_edge(id, d.guard, target);
        }
        Ok(())
    }

    fn normal_form(&mut self, formula: &Formula) -> Result<Tnf, GraphError> {
        if let Some(n) = self.forms.get(formula) {
            return Ok(n.clone());
        }
        let n = ctnf(&tnf(formula)?, self.alphabet)?;
        self.forms.insert(formula.clone(), n.clone());
        Ok(n)
    }
}
