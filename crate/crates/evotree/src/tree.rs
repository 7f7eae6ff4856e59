//! Lazy infinite-tree population engine.
//!
//! A [`TreeModel`] describes an infinite rooted tree: every node has a
//! fitness and a finite child distribution (the column of a
//! column-stochastic kernel belonging to that node). All population
//! mass starts on the root; one step multiplies each node's mass by its
//! fitness and distributes it over its children.
//!
//! The engine keeps the *normalized* shares of the current generation
//! (the frontier) together with a log-domain accumulator for the total
//! unnormalized mass, so populations that grow or decay exponentially —
//! or far faster — remain representable. The accumulator obeys the
//! exact recursion `log Z(t+1) = log Z(t) + log⟨f(t)⟩`, which doubles
//! as a per-step self-check.

use std::any::Any;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Opaque per-node state threaded from parent to child by the engine.
///
/// Models stash whatever they need to answer fitness/children queries
/// in O(1) (a depth counter, a running fitness value, a pair of inner
/// states, …) and downcast it back on each call.
pub type State = Arc<dyn Any + Send + Sync>;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("no child with index {index} under the node at depth {depth}")]
    InvalidPath { depth: usize, index: usize },
    #[error("prune threshold must lie in [0, 1), got {0}")]
    BadPruneThreshold(f64),
    #[error("sequence of length {len} is too short for window {window}")]
    TooShort { len: usize, window: usize },
}

/// Identity of a tree node: the sequence of child indices from the
/// root. Stored as a persistent linked path so that extending a
/// frontier node by one child is O(1) and shares the parent's path.
#[derive(Clone)]
pub struct NodeRef {
    depth: usize,
    last: Option<Arc<PathLink>>,
}

struct PathLink {
    index: usize,
    parent: Option<Arc<PathLink>>,
}

impl Drop for PathLink {
    // The default recursive drop overflows the stack on paths tens of
    // thousands of links deep; walk the uniquely owned suffix instead.
    fn drop(&mut self) {
        let mut parent = self.parent.take();
        while let Some(arc) = parent {
            match Arc::try_unwrap(arc) {
                Ok(mut link) => parent = link.parent.take(),
                Err(_) => break,
            }
        }
    }
}

impl NodeRef {
    pub fn root() -> Self {
        Self {
            depth: 0,
            last: None,
        }
    }

    pub fn child(&self, index: usize) -> Self {
        Self {
            depth: self.depth + 1,
            last: Some(Arc::new(PathLink {
                index,
                parent: self.last.clone(),
            })),
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Child indices from the root; empty for the root itself.
    pub fn path(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.depth);
        let mut link = self.last.as_deref();
        while let Some(l) = link {
            out.push(l.index);
            link = l.parent.as_deref();
        }
        out.reverse();
        out
    }

    pub fn from_path(path: &[usize]) -> Self {
        let mut node = Self::root();
        for &i in path {
            node = node.child(i);
        }
        node
    }
}

impl fmt::Debug for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NodeRef({self})")
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = self.path();
        if path.is_empty() {
            return write!(f, "(root)");
        }
        let text: Vec<String> = path.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", text.join("."))
    }
}

impl PartialEq for NodeRef {
    fn eq(&self, other: &Self) -> bool {
        self.depth == other.depth && self.path() == other.path()
    }
}
impl Eq for NodeRef {}

/// One entry of a child distribution.
pub struct Child {
    /// Index of this child under its parent (stable across calls).
    pub index: usize,
    pub probability: f64,
    /// State for the child node.
    pub state: State,
}

/// Tags and named scalars attached to a node by its model.
#[derive(Debug, Clone, Default)]
pub struct Labels {
    pub tags: Vec<String>,
    pub scalars: Vec<(String, f64)>,
}

impl Labels {
    pub fn tagged(tags: &[&str]) -> Self {
        Self {
            tags: tags.iter().map(|t| t.to_string()).collect(),
            scalars: Vec::new(),
        }
    }

    pub fn has(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| t == tag)
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.scalars
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }
}

/// Generator contract for a lazily expanded tree.
///
/// Implementations must be pure: for a given state the fitness, child
/// list (indices, probabilities, and child states), and labels never
/// change. Child probabilities must sum to 1 when the list is
/// non-empty, and a node with no children must have fitness 0.
pub trait TreeModel: Send + Sync {
    fn root_state(&self) -> State;
    fn fitness(&self, state: &State) -> f64;
    fn children(&self, state: &State) -> Vec<Child>;
    fn labels(&self, _state: &State) -> Labels {
        Labels::default()
    }
    /// Supremum of fitness over reachable nodes (`f64::INFINITY` for
    /// unbounded models); `None` if the model does not declare one.
    fn fitness_supremum(&self) -> Option<f64> {
        None
    }
}

impl<T: TreeModel + ?Sized> TreeModel for &T {
    fn root_state(&self) -> State {
        (**self).root_state()
    }
    fn fitness(&self, state: &State) -> f64 {
        (**self).fitness(state)
    }
    fn children(&self, state: &State) -> Vec<Child> {
        (**self).children(state)
    }
    fn labels(&self, state: &State) -> Labels {
        (**self).labels(state)
    }
    fn fitness_supremum(&self) -> Option<f64> {
        (**self).fitness_supremum()
    }
}

/// A node alive on the current frontier.
pub struct FrontierNode {
    pub node: NodeRef,
    pub state: State,
    pub share: f64,
    pub fitness: f64,
}

/// Normalized population shares at one generation, plus the log of the
/// total unnormalized mass accumulated so far.
pub struct Frontier {
    pub nodes: Vec<FrontierNode>,
    /// Steps taken since the run started (0 for the initial frontier).
    pub depth: usize,
    /// log Z(depth); 0 at depth 0, −∞ after extinction.
    pub log_total_mass: f64,
    /// Cumulative upper bound on the share mass removed by pruning.
    pub truncated_share_bound: f64,
}

impl Frontier {
    pub fn is_extinct(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn mean_fitness(&self) -> f64 {
        self.nodes.iter().map(|n| n.share * n.fitness).sum()
    }

    pub fn total_share(&self) -> f64 {
        self.nodes.iter().map(|n| n.share).sum()
    }
}

/// Per-step record: the mean fitness seen on the incoming frontier at
/// `time`, and the mass totals *after* the step (so
/// `log_total_mass = log Z(time+1)`).
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub time: usize,
    pub mean_fitness: f64,
    pub log_total_mass: f64,
    /// exp(log Z(time+1) / (time+1)) — the running geometric mean of
    /// the mean fitnesses observed so far.
    pub running_geometric_mean: f64,
    /// Trait shares measured on the incoming frontier at `time`.
    pub trait_shares: Vec<(String, f64)>,
    pub truncated_share_bound: f64,
}

/// A named membership predicate over nodes.
#[derive(Clone)]
pub struct TraitPredicate {
    pub name: String,
    test: Arc<dyn Fn(&NodeRef, f64, &Labels) -> bool + Send + Sync>,
}

impl TraitPredicate {
    pub fn new(
        name: impl Into<String>,
        test: impl Fn(&NodeRef, f64, &Labels) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            test: Arc::new(test),
        }
    }

    /// Membership by label tag.
    pub fn tag(tag: &str) -> Self {
        let owned = tag.to_string();
        Self::new(tag, move |_, _, labels: &Labels| labels.has(&owned))
    }

    pub fn zero_fitness() -> Self {
        Self::new("zero_fitness", |_, fitness, _| fitness == 0.0)
    }

    /// Membership in the subtree rooted at the given path prefix.
    pub fn subtree(prefix: Vec<usize>) -> Self {
        let name = if prefix.is_empty() {
            "subtree:".to_string()
        } else {
            format!(
                "subtree:{}",
                prefix
                    .iter()
                    .map(|i| i.to_string())
                    .collect::<Vec<_>>()
                    .join(".")
            )
        };
        Self::new(name, move |node: &NodeRef, _, _| {
            let path = node.path();
            path.len() >= prefix.len() && path[..prefix.len()] == prefix[..]
        })
    }

    pub fn matches(&self, node: &NodeRef, fitness: f64, labels: &Labels) -> bool {
        (self.test)(node, fitness, labels)
    }
}

/// Frontier size cap, from `EVOTREE_MAX_FRONTIER` (default 5,000,000).
/// When a step would exceed the cap, only the largest shares are kept
/// and the removed mass is charged to the truncation bound.
pub fn frontier_cap() -> usize {
    std::env::var("EVOTREE_MAX_FRONTIER")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or(5_000_000)
}

/// The initial frontier: all mass on the root.
pub fn root_frontier<M: TreeModel + ?Sized>(model: &M) -> Frontier {
    let state = model.root_state();
    let fitness = model.fitness(&state);
    Frontier {
        nodes: vec![FrontierNode {
            node: NodeRef::root(),
            state,
            share: 1.0,
            fitness,
        }],
        depth: 0,
        log_total_mass: 0.0,
        truncated_share_bound: 0.0,
    }
}

/// One frontier placed entirely on an arbitrary node, for lineage runs.
pub fn node_frontier<M: TreeModel + ?Sized>(
    model: &M,
    path: &[usize],
) -> Result<Frontier, TreeError> {
    let mut state = model.root_state();
    let mut node = NodeRef::root();
    for (depth, &index) in path.iter().enumerate() {
        let children = model.children(&state);
        let child = children
            .into_iter()
            .find(|c| c.index == index)
            .ok_or(TreeError::InvalidPath { depth, index })?;
        state = child.state;
        node = node.child(index);
    }
    let fitness = model.fitness(&state);
    Ok(Frontier {
        nodes: vec![FrontierNode {
            node,
            state,
            share: 1.0,
            fitness,
        }],
        depth: 0,
        log_total_mass: 0.0,
        truncated_share_bound: 0.0,
    })
}

/// One step of the population dynamics with an explicit frontier cap.
///
/// Mean fitness and the mass accumulator are updated before pruning, so
/// the recursion `log Z(t+1) − log Z(t) = log⟨f(t)⟩` holds exactly;
/// pruning only affects which shares survive, and everything removed is
/// charged to `truncated_share_bound`. An extinct step (⟨f⟩ = 0)
/// returns an empty frontier with `log_total_mass = −∞`.
pub fn advance_capped<M: TreeModel + ?Sized>(
    model: &M,
    frontier: &Frontier,
    prune_threshold: f64,
    max_frontier: usize,
) -> Result<(Frontier, StepRecord), TreeError> {
    if !(0.0..1.0).contains(&prune_threshold) {
        return Err(TreeError::BadPruneThreshold(prune_threshold));
    }
    let time = frontier.depth;
    let mean = frontier.mean_fitness();
    if mean <= 0.0 {
        let record = StepRecord {
            time,
            mean_fitness: mean,
            log_total_mass: f64::NEG_INFINITY,
            running_geometric_mean: 0.0,
            trait_shares: Vec::new(),
            truncated_share_bound: frontier.truncated_share_bound,
        };
        let next = Frontier {
            nodes: Vec::new(),
            depth: time + 1,
            log_total_mass: f64::NEG_INFINITY,
            truncated_share_bound: frontier.truncated_share_bound,
        };
        return Ok((next, record));
    }
    let log_total_mass = frontier.log_total_mass + mean.ln();

    let mut nodes: Vec<FrontierNode> = Vec::with_capacity(frontier.nodes.len() * 2);
    for parent in &frontier.nodes {
        let weight = parent.share * parent.fitness / mean;
        if weight == 0.0 {
            continue;
        }
        for child in model.children(&parent.state) {
            if child.probability == 0.0 {
                continue;
            }
            let fitness = model.fitness(&child.state);
            nodes.push(FrontierNode {
                node: parent.node.child(child.index),
                state: child.state,
                share: weight * child.probability,
                fitness,
            });
        }
    }

    // Guard against float drift in the share total.
    let total: f64 = nodes.iter().map(|n| n.share).sum();
    if total > 0.0 && (total - 1.0).abs() > 1e-15 {
        for n in &mut nodes {
            n.share /= total;
        }
    }

    let mut truncated_share_bound = frontier.truncated_share_bound;
    if prune_threshold > 0.0 {
        let removed: f64 = nodes
            .iter()
            .filter(|n| n.share < prune_threshold)
            .map(|n| n.share)
            .sum();
        if removed > 0.0 {
            truncated_share_bound += removed;
            nodes.retain(|n| n.share >= prune_threshold);
            let kept = 1.0 - removed;
            for n in &mut nodes {
                n.share /= kept;
            }
        }
    }
    if nodes.len() > max_frontier {
        nodes.sort_unstable_by(|a, b| b.share.partial_cmp(&a.share).unwrap());
        let removed: f64 = nodes[max_frontier..].iter().map(|n| n.share).sum();
        truncated_share_bound += removed;
        nodes.truncate(max_frontier);
        let kept = 1.0 - removed;
        for n in &mut nodes {
            n.share /= kept;
        }
    }

    let record = StepRecord {
        time,
        mean_fitness: mean,
        log_total_mass,
        running_geometric_mean: (log_total_mass / (time + 1) as f64).exp(),
        trait_shares: Vec::new(),
        truncated_share_bound,
    };
    let next = Frontier {
        nodes,
        depth: time + 1,
        log_total_mass,
        truncated_share_bound,
    };
    Ok((next, record))
}

/// [`advance_capped`] with the cap taken from `EVOTREE_MAX_FRONTIER`.
pub fn advance<M: TreeModel + ?Sized>(
    model: &M,
    frontier: &Frontier,
    prune_threshold: f64,
) -> Result<(Frontier, StepRecord), TreeError> {
    advance_capped(model, frontier, prune_threshold, frontier_cap())
}

/// Share of frontier mass on nodes matching the predicate.
pub fn trait_share<M: TreeModel + ?Sized>(
    frontier: &Frontier,
    model: &M,
    trait_pred: &TraitPredicate,
) -> f64 {
    frontier
        .nodes
        .iter()
        .filter(|n| trait_pred.matches(&n.node, n.fitness, &model.labels(&n.state)))
        .map(|n| n.share)
        .sum()
}

/// A completed run: per-step records plus the final frontier.
pub struct TreeRun {
    pub records: Vec<StepRecord>,
    pub frontier: Frontier,
    /// Step at which mean fitness hit zero, if the run went extinct.
    pub extinct_at: Option<usize>,
}

/// Run the dynamics from the root for `steps` generations, recording
/// trait shares on each incoming frontier.
pub fn run_tree<M: TreeModel + ?Sized>(
    model: &M,
    steps: usize,
    prune_threshold: f64,
    traits: &[TraitPredicate],
) -> Result<TreeRun, TreeError> {
    let cap = frontier_cap();
    let mut frontier = root_frontier(model);
    let mut records = Vec::with_capacity(steps);
    let mut extinct_at = None;
    for _ in 0..steps {
        let shares: Vec<(String, f64)> = traits
            .iter()
            .map(|t| (t.name.clone(), trait_share(&frontier, model, t)))
            .collect();
        let (next, mut record) = advance_capped(model, &frontier, prune_threshold, cap)?;
        record.trait_shares = shares;
        let extinct = next.is_extinct();
        if extinct {
            extinct_at = Some(record.time);
        }
        records.push(record);
        frontier = next;
        if extinct {
            break;
        }
    }
    Ok(TreeRun {
        records,
        frontier,
        extinct_at,
    })
}

/// `log Z_origin(s)` for `s = 0..=steps`: the total descendant mass of
/// one unit placed on the origin node. Extinction fills the remaining
/// entries with −∞.
pub fn lineage_sizes<M: TreeModel + ?Sized>(
    model: &M,
    origin: &[usize],
    steps: usize,
    prune_threshold: f64,
) -> Result<Vec<f64>, TreeError> {
    let cap = frontier_cap();
    let mut frontier = node_frontier(model, origin)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(0.0);
    for _ in 0..steps {
        let (next, record) = advance_capped(model, &frontier, prune_threshold, cap)?;
        out.push(record.log_total_mass);
        frontier = next;
        if frontier.is_extinct() {
            while out.len() < steps + 1 {
                out.push(f64::NEG_INFINITY);
            }
            break;
        }
    }
    Ok(out)
}

/// Finite-horizon surrogate for the upper/lower lineage exponents
/// (limsup/liminf of `Z(t)^{1/t}`): min/max of `exp(log Z(t)/t)` over
/// the trailing `window` entries. These are estimates at a horizon, not
/// converged limits.
#[derive(Debug, Clone, Copy)]
pub struct ExponentEstimate {
    pub horizon: usize,
    pub lower: f64,
    pub upper: f64,
    pub window: usize,
    pub full_sequence_available: bool,
}

pub fn exponent_estimate(log_sizes: &[f64], window: usize) -> Result<ExponentEstimate, TreeError> {
    if window == 0 || log_sizes.len() <= window {
        return Err(TreeError::TooShort {
            len: log_sizes.len(),
            window,
        });
    }
    let horizon = log_sizes.len() - 1;
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for t in (horizon - window + 1)..=horizon {
        let value = (log_sizes[t] / t as f64).exp();
        lower = lower.min(value);
        upper = upper.max(value);
    }
    Ok(ExponentEstimate {
        horizon,
        lower,
        upper,
        window,
        full_sequence_available: log_sizes.iter().all(|v| v.is_finite()),
    })
}
