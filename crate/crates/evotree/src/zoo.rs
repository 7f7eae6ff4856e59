//! Library of named tree models with closed-form reference values.
//!
//! Each constructor builds a [`TreeModel`] for one of the standard
//! constructions (rays, the binary dyadic tree, the burst spine, locked
//! variants, tensor products), together with the closed-form quantities
//! the tests check against.

use std::sync::Arc;

use serde_json::Value;
use thiserror::Error;

use crate::tree::{Child, Labels, NodeRef, State, TreeModel};

#[derive(Debug, Error)]
pub enum ZooError {
    #[error("parameter {name} = {value} is out of range ({requirement})")]
    ParamRange {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },
    #[error("unknown model name {0:?}")]
    UnknownModel(String),
    #[error("unknown parameter {param:?} for model {model:?}")]
    UnknownParam { model: String, param: String },
    #[error("parameter {0:?} must be a number")]
    NotNumeric(String),
}

/// A named model plus its parameters and closed-form reference values.
#[derive(Clone)]
pub struct ZooModel {
    pub name: String,
    pub parameters: Vec<(String, f64)>,
    pub references: Vec<(String, f64)>,
    model: Arc<dyn TreeModel>,
    supremum: Option<f64>,
}

impl ZooModel {
    pub fn reference(&self, name: &str) -> Option<f64> {
        self.references
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    pub fn inner(&self) -> Arc<dyn TreeModel> {
        self.model.clone()
    }
}

impl TreeModel for ZooModel {
    fn root_state(&self) -> State {
        self.model.root_state()
    }
    fn fitness(&self, state: &State) -> f64 {
        self.model.fitness(state)
    }
    fn children(&self, state: &State) -> Vec<Child> {
        self.model.children(state)
    }
    fn labels(&self, state: &State) -> Labels {
        self.model.labels(state)
    }
    fn fitness_supremum(&self) -> Option<f64> {
        self.supremum.or_else(|| self.model.fitness_supremum())
    }
}

pub type FitnessSequence = Arc<dyn Fn(usize) -> f64 + Send + Sync>;

// ---------------------------------------------------------------------------
// single ray

struct SingleRay {
    fitness: FitnessSequence,
}

impl TreeModel for SingleRay {
    fn root_state(&self) -> State {
        Arc::new(0usize)
    }
    fn fitness(&self, state: &State) -> f64 {
        (self.fitness)(*state.downcast_ref::<usize>().unwrap())
    }
    fn children(&self, state: &State) -> Vec<Child> {
        let t = *state.downcast_ref::<usize>().unwrap();
        vec![Child {
            index: 0,
            probability: 1.0,
            state: Arc::new(t + 1),
        }]
    }
    fn labels(&self, _state: &State) -> Labels {
        Labels::tagged(&["ray"])
    }
}

/// A single deterministic chain; fitness at depth `t` is `sequence(t)`.
pub fn single_ray(sequence: FitnessSequence) -> ZooModel {
    ZooModel {
        name: "single_ray".into(),
        parameters: Vec::new(),
        references: Vec::new(),
        model: Arc::new(SingleRay { fitness: sequence }),
        supremum: None,
    }
}

/// Single ray of constant fitness `c`.
pub fn constant_ray(c: f64) -> ZooModel {
    let mut m = single_ray(Arc::new(move |_| c));
    m.name = "constant_ray".into();
    m.parameters = vec![("fitness".into(), c)];
    m.supremum = Some(c);
    m
}

/// Single ray with fitness `1/(t+1)`: the running geometric mean of the
/// population decreases to zero even though the lineage never dies.
pub fn decreasing_ray() -> ZooModel {
    let mut m = single_ray(Arc::new(|t| 1.0 / (t + 1) as f64));
    m.name = "decreasing_ray".into();
    m.supremum = Some(1.0);
    m
}

// ---------------------------------------------------------------------------
// two rays from a common root

enum TwoRayState {
    Root,
    A(usize),
    B(usize),
}

struct TwoRay {
    a: FitnessSequence,
    b: FitnessSequence,
}

impl TreeModel for TwoRay {
    fn root_state(&self) -> State {
        Arc::new(TwoRayState::Root)
    }
    fn fitness(&self, state: &State) -> f64 {
        match state.downcast_ref::<TwoRayState>().unwrap() {
            TwoRayState::Root => 1.0,
            TwoRayState::A(t) => (self.a)(*t),
            TwoRayState::B(t) => (self.b)(*t),
        }
    }
    fn children(&self, state: &State) -> Vec<Child> {
        match state.downcast_ref::<TwoRayState>().unwrap() {
            TwoRayState::Root => vec![
                Child {
                    index: 0,
                    probability: 0.5,
                    state: Arc::new(TwoRayState::A(1)),
                },
                Child {
                    index: 1,
                    probability: 0.5,
                    state: Arc::new(TwoRayState::B(1)),
                },
            ],
            TwoRayState::A(t) => vec![Child {
                index: 0,
                probability: 1.0,
                state: Arc::new(TwoRayState::A(t + 1)),
            }],
            TwoRayState::B(t) => vec![Child {
                index: 0,
                probability: 1.0,
                state: Arc::new(TwoRayState::B(t + 1)),
            }],
        }
    }
    fn labels(&self, state: &State) -> Labels {
        match state.downcast_ref::<TwoRayState>().unwrap() {
            TwoRayState::Root => Labels::default(),
            TwoRayState::A(_) => Labels::tagged(&["ray_a"]),
            TwoRayState::B(_) => Labels::tagged(&["ray_b"]),
        }
    }
}

/// Two deterministic rays leaving a fitness-1 root with probability 1/2
/// each; ray fitnesses at depth `t ≥ 1` are `a(t)` and `b(t)`.
pub fn two_ray(a: FitnessSequence, b: FitnessSequence) -> ZooModel {
    ZooModel {
        name: "two_ray".into(),
        parameters: Vec::new(),
        references: Vec::new(),
        model: Arc::new(TwoRay { a, b }),
        supremum: None,
    }
}

pub fn two_ray_constant(a: f64, b: f64) -> ZooModel {
    let mut m = two_ray(Arc::new(move |_| a), Arc::new(move |_| b));
    m.parameters = vec![("fitness_a".into(), a), ("fitness_b".into(), b)];
    m.supremum = Some(a.max(b).max(1.0));
    m
}

/// The tiebreaker pair: constant fitness 1 against `t/(t+1)`. Both rays
/// have lineage exponent 1, yet ray b's share is exactly `1/(t+1)`.
pub fn two_ray_tiebreaker() -> ZooModel {
    let mut m = two_ray(Arc::new(|_| 1.0), Arc::new(|t| t as f64 / (t + 1) as f64));
    m.name = "two_ray_tiebreaker".into();
    m.supremum = Some(1.0);
    m
}

// ---------------------------------------------------------------------------
// oscillating block ray

pub type BlockLengths = Arc<dyn Fn(usize) -> usize + Send + Sync>;

struct OscillatingBlockRay {
    low: f64,
    high: f64,
    lengths: BlockLengths,
}

#[derive(Clone, Copy)]
struct BlockPos {
    block: usize,
    offset: usize,
}

impl TreeModel for OscillatingBlockRay {
    fn root_state(&self) -> State {
        Arc::new(BlockPos {
            block: 0,
            offset: 0,
        })
    }
    fn fitness(&self, state: &State) -> f64 {
        let pos = state.downcast_ref::<BlockPos>().unwrap();
        if pos.block % 2 == 0 {
            self.low
        } else {
            self.high
        }
    }
    fn children(&self, state: &State) -> Vec<Child> {
        let pos = *state.downcast_ref::<BlockPos>().unwrap();
        let next = if pos.offset + 1 < (self.lengths)(pos.block) {
            BlockPos {
                block: pos.block,
                offset: pos.offset + 1,
            }
        } else {
            BlockPos {
                block: pos.block + 1,
                offset: 0,
            }
        };
        vec![Child {
            index: 0,
            probability: 1.0,
            state: Arc::new(next),
        }]
    }
    fn labels(&self, state: &State) -> Labels {
        let pos = state.downcast_ref::<BlockPos>().unwrap();
        if pos.block % 2 == 0 {
            Labels::tagged(&["low_block"])
        } else {
            Labels::tagged(&["high_block"])
        }
    }
}

/// Single ray whose fitness is `low` during even-indexed blocks and
/// `high` during odd-indexed blocks; block `k` lasts `lengths(k)`
/// steps. With fast-growing blocks the running geometric mean
/// oscillates forever instead of converging.
pub fn oscillating_block_ray(low: f64, high: f64, lengths: BlockLengths) -> Result<ZooModel, ZooError> {
    if !(low > 0.0) {
        return Err(ZooError::ParamRange {
            name: "low",
            value: low,
            requirement: "0 < low",
        });
    }
    if !(high >= low) {
        return Err(ZooError::ParamRange {
            name: "high",
            value: high,
            requirement: "high >= low",
        });
    }
    Ok(ZooModel {
        name: "oscillating_block_ray".into(),
        parameters: vec![("low".into(), low), ("high".into(), high)],
        references: Vec::new(),
        model: Arc::new(OscillatingBlockRay { low, high, lengths }),
        supremum: Some(high),
    })
}

/// Block lengths `ratio^k` (saturating).
pub fn geometric_block_lengths(ratio: usize) -> BlockLengths {
    Arc::new(move |k| ratio.saturating_pow(k.min(u32::MAX as usize) as u32))
}

/// Block lengths `2^(2^k)` (saturating); matches the doubly-exponential
/// schedule but exceeds desk horizons after a handful of blocks.
pub fn doubly_exponential_block_lengths() -> BlockLengths {
    Arc::new(|k| {
        if k >= 6 {
            usize::MAX
        } else {
            1usize << (1usize << k)
        }
    })
}

/// Geometric-block oscillating ray with limit references: boundary
/// geometric means approach `high^(ρ/(ρ+1))·low^(1/(ρ+1))` at odd-block
/// ends and `high^(1/(ρ+1))·low^(ρ/(ρ+1))` at even-block ends.
pub fn oscillating_geometric(low: f64, high: f64, ratio: usize) -> Result<ZooModel, ZooError> {
    let mut m = oscillating_block_ray(low, high, geometric_block_lengths(ratio))?;
    let rho = ratio as f64;
    let upper = (rho / (rho + 1.0) * high.ln() + 1.0 / (rho + 1.0) * low.ln()).exp();
    let lower = (1.0 / (rho + 1.0) * high.ln() + rho / (rho + 1.0) * low.ln()).exp();
    m.name = "oscillating_geometric".into();
    m.parameters.push(("ratio".into(), rho));
    m.references = vec![
        ("upper_boundary_limit".into(), upper),
        ("lower_boundary_limit".into(), lower),
    ];
    Ok(m)
}

/// Exact running geometric means at block boundaries: entry `K` is
/// `(t_K, gm)` where `t_K` is the total steps through block `K` and
/// `gm = exp(Σ_{s<t_K} ln f(s) / t_K)` with the block-count partial
/// sums evaluated in closed form.
pub fn oscillating_boundary_geometric_means(
    low: f64,
    high: f64,
    lengths: &BlockLengths,
    blocks: usize,
) -> Vec<(usize, f64)> {
    let mut out = Vec::with_capacity(blocks);
    let mut total = 0usize;
    let mut high_steps = 0usize;
    for k in 0..blocks {
        let len = lengths(k);
        total += len;
        if k % 2 == 1 {
            high_steps += len;
        }
        let low_steps = total - high_steps;
        let gm = ((high_steps as f64 * high.ln() + low_steps as f64 * low.ln()) / total as f64).exp();
        out.push((total, gm));
    }
    out
}

// ---------------------------------------------------------------------------
// binary dyadic tree

#[derive(Clone, Copy)]
struct DyadicState {
    depth: usize,
    fitness: f64,
}

struct BinaryDyadic;

impl TreeModel for BinaryDyadic {
    fn root_state(&self) -> State {
        Arc::new(DyadicState {
            depth: 0,
            fitness: 1.0,
        })
    }
    fn fitness(&self, state: &State) -> f64 {
        state.downcast_ref::<DyadicState>().unwrap().fitness
    }
    fn children(&self, state: &State) -> Vec<Child> {
        let s = *state.downcast_ref::<DyadicState>().unwrap();
        let step = 2.0f64.powi(-(s.depth as i32) - 1);
        [0usize, 1]
            .into_iter()
            .map(|bit| Child {
                index: bit,
                probability: 0.5,
                state: Arc::new(DyadicState {
                    depth: s.depth + 1,
                    fitness: s.fitness + if bit == 1 { step } else { -step },
                }),
            })
            .collect()
    }
    fn fitness_supremum(&self) -> Option<f64> {
        Some(2.0)
    }
}

/// Full binary tree where appending bit `b` at depth `j` shifts fitness
/// by `(2b−1)·2^{−j}`: every fitness lies in `(0, 2)` and the supremum
/// along a subtree is `f_n + 2^{−depth}`.
pub fn binary_dyadic() -> ZooModel {
    ZooModel {
        name: "binary_dyadic".into(),
        parameters: Vec::new(),
        references: vec![("root_exponent".into(), 2.0)],
        model: Arc::new(BinaryDyadic),
        supremum: Some(2.0),
    }
}

/// Closed-form lineage exponent of a binary-dyadic node:
/// `f_n + 2^{−depth}`, the supremum of its descendant fitnesses.
pub fn binary_closed_form_exponent(node: &NodeRef) -> f64 {
    binary_dyadic_fitness(node) + 2.0f64.powi(-(node.depth() as i32))
}

/// Fitness of a binary-dyadic node from its bit path.
pub fn binary_dyadic_fitness(node: &NodeRef) -> f64 {
    let mut f = 1.0;
    for (j, &bit) in node.path().iter().enumerate() {
        f += (2.0 * bit as f64 - 1.0) * 2.0f64.powi(-(j as i32) - 1);
    }
    f
}

// ---------------------------------------------------------------------------
// burst spine

enum BurstState {
    Spine(usize),
    Burst(f64),
    Dead,
}

struct BurstSpine {
    eta: f64,
    b: f64,
}

impl TreeModel for BurstSpine {
    fn root_state(&self) -> State {
        Arc::new(BurstState::Spine(0))
    }
    fn fitness(&self, state: &State) -> f64 {
        match state.downcast_ref::<BurstState>().unwrap() {
            BurstState::Spine(_) => 1.0,
            BurstState::Burst(q) => *q,
            BurstState::Dead => 0.0,
        }
    }
    fn children(&self, state: &State) -> Vec<Child> {
        match state.downcast_ref::<BurstState>().unwrap() {
            BurstState::Spine(t) => {
                let q = if t % 2 == 1 { self.b } else { 0.0 };
                vec![
                    Child {
                        index: 0,
                        probability: self.eta,
                        state: Arc::new(BurstState::Spine(t + 1)),
                    },
                    Child {
                        index: 1,
                        probability: 1.0 - self.eta,
                        state: Arc::new(BurstState::Burst(q)),
                    },
                ]
            }
            BurstState::Burst(q) if *q > 0.0 => vec![
                Child {
                    index: 0,
                    probability: self.eta,
                    state: state.clone(),
                },
                Child {
                    index: 1,
                    probability: 1.0 - self.eta,
                    state: Arc::new(BurstState::Dead),
                },
            ],
            // Zero-fitness burst heads and dead leaves reproduce no further.
            BurstState::Burst(_) | BurstState::Dead => Vec::new(),
        }
    }
    fn labels(&self, state: &State) -> Labels {
        match state.downcast_ref::<BurstState>().unwrap() {
            BurstState::Spine(_) => Labels::tagged(&["spine"]),
            BurstState::Burst(_) => Labels::tagged(&["burst"]),
            BurstState::Dead => Labels::tagged(&["dead"]),
        }
    }
    fn fitness_supremum(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// Persistent fitness-1 spine with alternating burst lineages: spine
/// node at depth `t` sends `η` ahead and `1−η` to a burst head of
/// fitness 0 (even `t`) or `b` (odd `t`); live burst nodes send `η` to
/// a same-fitness child and `1−η` to a dead leaf. Mean fitness
/// oscillates between two limits while its geometric mean converges to
/// `η·f* = η`.
pub fn burst_spine(eta: f64, b: f64) -> Result<ZooModel, ZooError> {
    for (name, value) in [("eta", eta), ("b", b)] {
        if !(value > 0.0 && value < 1.0) {
            return Err(ZooError::ParamRange {
                name,
                value,
                requirement: "0 < value < 1",
            });
        }
    }
    let r = (1.0 - eta) / ((1.0 - b * b) * eta);
    let mean_odd = (1.0 + b * b * r) / (1.0 + b * r + (1.0 - eta) * (1.0 + b * r) / eta);
    let mean_even = (1.0 + b * r) / (1.0 + r + (1.0 - eta) * b * b * r / eta);
    Ok(ZooModel {
        name: "burst_spine".into(),
        parameters: vec![("eta".into(), eta), ("b".into(), b)],
        references: vec![
            ("R".into(), r),
            ("r_odd_limit".into(), b * r),
            ("mean_fitness_odd_limit".into(), mean_odd),
            ("mean_fitness_even_limit".into(), mean_even),
            ("geometric_mean_floor".into(), eta),
        ],
        model: Arc::new(BurstSpine { eta, b }),
        supremum: Some(1.0),
    })
}

// ---------------------------------------------------------------------------
// locking transform

enum LockState {
    Inner(State),
    Locked(f64),
}

struct Lock {
    inner: Arc<dyn TreeModel>,
    eta: f64,
}

impl TreeModel for Lock {
    fn root_state(&self) -> State {
        Arc::new(LockState::Inner(self.inner.root_state()))
    }
    fn fitness(&self, state: &State) -> f64 {
        match state.downcast_ref::<LockState>().unwrap() {
            LockState::Inner(s) => self.inner.fitness(s),
            LockState::Locked(f) => *f,
        }
    }
    fn children(&self, state: &State) -> Vec<Child> {
        match state.downcast_ref::<LockState>().unwrap() {
            LockState::Inner(s) => {
                let fitness = self.inner.fitness(s);
                let inner_children = self.inner.children(s);
                if fitness <= 0.0 {
                    return inner_children
                        .into_iter()
                        .map(|c| Child {
                            index: c.index,
                            probability: c.probability,
                            state: Arc::new(LockState::Inner(c.state)),
                        })
                        .collect();
                }
                let mut out = Vec::with_capacity(inner_children.len() + 1);
                out.push(Child {
                    index: 0,
                    probability: self.eta,
                    state: Arc::new(LockState::Locked(fitness)),
                });
                out.extend(inner_children.into_iter().map(|c| Child {
                    index: c.index + 1,
                    probability: c.probability * (1.0 - self.eta),
                    state: Arc::new(LockState::Inner(c.state)),
                }));
                out
            }
            LockState::Locked(_) => vec![Child {
                index: 0,
                probability: 1.0,
                state: state.clone(),
            }],
        }
    }
    fn labels(&self, state: &State) -> Labels {
        match state.downcast_ref::<LockState>().unwrap() {
            LockState::Inner(s) => self.inner.labels(s),
            LockState::Locked(_) => Labels::tagged(&["locked"]),
        }
    }
    fn fitness_supremum(&self) -> Option<f64> {
        self.inner.fitness_supremum()
    }
}

/// η-locking transform: every fitness-positive node gains one extra
/// child with probability exactly `eta` — the head of a deterministic
/// ray frozen at the node's own fitness — and its original children are
/// rescaled by `1−eta`.
pub fn lock(inner: &ZooModel, eta: f64) -> Result<ZooModel, ZooError> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(ZooError::ParamRange {
            name: "eta",
            value: eta,
            requirement: "0 < eta < 1",
        });
    }
    let mut parameters = vec![("eta".into(), eta)];
    parameters.extend(inner.parameters.iter().cloned());
    Ok(ZooModel {
        name: format!("locked_{}", inner.name),
        parameters,
        references: inner.references.clone(),
        supremum: inner.fitness_supremum(),
        model: Arc::new(Lock {
            inner: inner.inner(),
            eta,
        }),
    })
}

// ---------------------------------------------------------------------------
// non-attained supremum spine

enum SpineState {
    Spine(u64),
    Locked(f64),
}

struct NonattainedSpine {
    eta: f64,
}

impl TreeModel for NonattainedSpine {
    fn root_state(&self) -> State {
        Arc::new(SpineState::Spine(1))
    }
    fn fitness(&self, state: &State) -> f64 {
        match state.downcast_ref::<SpineState>().unwrap() {
            SpineState::Spine(n) => *n as f64 / (*n as f64 + 1.0),
            SpineState::Locked(f) => *f,
        }
    }
    fn children(&self, state: &State) -> Vec<Child> {
        match state.downcast_ref::<SpineState>().unwrap() {
            SpineState::Spine(n) => {
                let f = *n as f64 / (*n as f64 + 1.0);
                vec![
                    Child {
                        index: 0,
                        probability: self.eta,
                        state: Arc::new(SpineState::Locked(f)),
                    },
                    Child {
                        index: 1,
                        probability: 1.0 - self.eta,
                        state: Arc::new(SpineState::Spine(n + 1)),
                    },
                ]
            }
            SpineState::Locked(_) => vec![Child {
                index: 0,
                probability: 1.0,
                state: state.clone(),
            }],
        }
    }
    fn labels(&self, state: &State) -> Labels {
        match state.downcast_ref::<SpineState>().unwrap() {
            SpineState::Spine(_) => Labels::tagged(&["spine"]),
            SpineState::Locked(_) => Labels::tagged(&["locked"]),
        }
    }
    fn fitness_supremum(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// η-locked spine with fitness `n/(n+1)` at the n-th spine node: the
/// supremum 1 is reachable in the limit but attained by no node, yet
/// mean fitness still converges to it.
pub fn nonattained_spine(eta: f64) -> Result<ZooModel, ZooError> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(ZooError::ParamRange {
            name: "eta",
            value: eta,
            requirement: "0 < eta < 1",
        });
    }
    Ok(ZooModel {
        name: "nonattained_spine".into(),
        parameters: vec![("eta".into(), eta)],
        references: vec![("fitness_supremum".into(), 1.0)],
        model: Arc::new(NonattainedSpine { eta }),
        supremum: Some(1.0),
    })
}

// ---------------------------------------------------------------------------
// unbounded-fitness spine

enum UnboundedState {
    Spine(usize),
    Locked(f64),
    Dead,
}

struct UnboundedSpine {
    eta: f64,
    epsilon: f64,
    growth: FitnessSequence,
}

impl TreeModel for UnboundedSpine {
    fn root_state(&self) -> State {
        Arc::new(UnboundedState::Spine(0))
    }
    fn fitness(&self, state: &State) -> f64 {
        match state.downcast_ref::<UnboundedState>().unwrap() {
            UnboundedState::Spine(t) => (self.growth)(*t),
            UnboundedState::Locked(f) => *f,
            UnboundedState::Dead => 0.0,
        }
    }
    fn children(&self, state: &State) -> Vec<Child> {
        match state.downcast_ref::<UnboundedState>().unwrap() {
            UnboundedState::Spine(t) => vec![
                Child {
                    index: 0,
                    probability: self.eta,
                    state: Arc::new(UnboundedState::Locked((self.growth)(*t))),
                },
                Child {
                    index: 1,
                    probability: self.epsilon,
                    state: Arc::new(UnboundedState::Spine(t + 1)),
                },
                Child {
                    index: 2,
                    probability: 1.0 - self.eta - self.epsilon,
                    state: Arc::new(UnboundedState::Dead),
                },
            ],
            UnboundedState::Locked(_) => vec![Child {
                index: 0,
                probability: 1.0,
                state: state.clone(),
            }],
            UnboundedState::Dead => Vec::new(),
        }
    }
    fn labels(&self, state: &State) -> Labels {
        match state.downcast_ref::<UnboundedState>().unwrap() {
            UnboundedState::Spine(_) => Labels::tagged(&["spine"]),
            UnboundedState::Locked(_) => Labels::tagged(&["locked"]),
            UnboundedState::Dead => Labels::tagged(&["dead"]),
        }
    }
    fn fitness_supremum(&self) -> Option<f64> {
        Some(f64::INFINITY)
    }
}

/// η-locked spine with rapidly growing fitness `growth(t)`: each spine
/// node sends `η` into a locked ray at its own fitness, `ε` to the next
/// spine node, and the rest to a zero-fitness leaf. With growth fast
/// enough that each new spine node outweighs all older locked mass, the
/// zero-fitness fraction keeps reappearing near `1−η−ε` while mean
/// fitness blows up along a subsequence.
pub fn unbounded_spine(
    eta: f64,
    epsilon: f64,
    growth: FitnessSequence,
) -> Result<ZooModel, ZooError> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(ZooError::ParamRange {
            name: "eta",
            value: eta,
            requirement: "0 < eta < 1",
        });
    }
    if !(epsilon > 0.0 && eta + epsilon < 1.0) {
        return Err(ZooError::ParamRange {
            name: "epsilon",
            value: epsilon,
            requirement: "0 < epsilon < 1 - eta",
        });
    }
    Ok(ZooModel {
        name: "unbounded_spine".into(),
        parameters: vec![("eta".into(), eta), ("epsilon".into(), epsilon)],
        references: Vec::new(),
        model: Arc::new(UnboundedSpine {
            eta,
            epsilon,
            growth,
        }),
        supremum: Some(f64::INFINITY),
    })
}

/// Default spine growth `ratio^t`. The ratio must comfortably exceed
/// `1/ε²` for the newest spine node to outweigh all older locked rays;
/// the default used by the verification suite is ratio 100 with ε=0.1.
/// Keep `ratio^horizon` below ~1e300.
pub fn power_growth(ratio: f64) -> FitnessSequence {
    Arc::new(move |t| ratio.powi(t as i32))
}

// ---------------------------------------------------------------------------
// tensor product

struct PairState {
    c: State,
    d: State,
}

struct TensorProduct {
    c: Arc<dyn TreeModel>,
    d: Arc<dyn TreeModel>,
}

impl TreeModel for TensorProduct {
    fn root_state(&self) -> State {
        Arc::new(PairState {
            c: self.c.root_state(),
            d: self.d.root_state(),
        })
    }
    fn fitness(&self, state: &State) -> f64 {
        let pair = state.downcast_ref::<PairState>().unwrap();
        self.c.fitness(&pair.c) + self.d.fitness(&pair.d)
    }
    fn children(&self, state: &State) -> Vec<Child> {
        let pair = state.downcast_ref::<PairState>().unwrap();
        let c_children = self.c.children(&pair.c);
        let d_children = self.d.children(&pair.d);
        let stride = d_children.len();
        let mut out = Vec::with_capacity(c_children.len() * stride);
        for (ci, cc) in c_children.iter().enumerate() {
            for (di, dc) in d_children.iter().enumerate() {
                out.push(Child {
                    index: ci * stride + di,
                    probability: cc.probability * dc.probability,
                    state: Arc::new(PairState {
                        c: cc.state.clone(),
                        d: dc.state.clone(),
                    }),
                });
            }
        }
        out
    }
    fn labels(&self, state: &State) -> Labels {
        let pair = state.downcast_ref::<PairState>().unwrap();
        let lc = self.c.labels(&pair.c);
        let ld = self.d.labels(&pair.d);
        let mut tags: Vec<String> = lc.tags.iter().map(|t| format!("c:{t}")).collect();
        tags.extend(ld.tags.iter().map(|t| format!("d:{t}")));
        Labels {
            tags,
            scalars: vec![
                ("f_C".into(), self.c.fitness(&pair.c)),
                ("f_D".into(), self.d.fitness(&pair.d)),
            ],
        }
    }
    fn fitness_supremum(&self) -> Option<f64> {
        match (self.c.fitness_supremum(), self.d.fitness_supremum()) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        }
    }
}

/// Tensor product of two models: nodes are coordinate pairs, the child
/// distribution is the product distribution (lexicographic in
/// (c-child, d-child)), and fitness is additive, `f = f_C + f_D`.
/// Labels carry the coordinate fitnesses as scalars `f_C` and `f_D`.
pub fn tensor_product(model_c: &ZooModel, model_d: &ZooModel) -> ZooModel {
    let supremum = match (model_c.fitness_supremum(), model_d.fitness_supremum()) {
        (Some(a), Some(b)) => Some(a + b),
        _ => None,
    };
    let mut parameters: Vec<(String, f64)> = model_c
        .parameters
        .iter()
        .map(|(k, v)| (format!("c.{k}"), *v))
        .collect();
    parameters.extend(model_d.parameters.iter().map(|(k, v)| (format!("d.{k}"), *v)));
    let mut references = Vec::new();
    if let Some(s) = supremum {
        references.push(("fitness_supremum".to_string(), s));
    }
    ZooModel {
        name: format!("tensor({},{})", model_c.name, model_d.name),
        parameters,
        references,
        model: Arc::new(TensorProduct {
            c: model_c.inner(),
            d: model_d.inner(),
        }),
        supremum,
    }
}

// ---------------------------------------------------------------------------
// name-based construction (CLI / config entry point)

fn param(
    params: &serde_json::Map<String, Value>,
    name: &str,
    default: f64,
) -> Result<f64, ZooError> {
    match params.get(name) {
        None => Ok(default),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| ZooError::NotNumeric(name.to_string())),
    }
}

fn check_known(
    model: &str,
    params: &serde_json::Map<String, Value>,
    known: &[&str],
) -> Result<(), ZooError> {
    for key in params.keys() {
        if !known.contains(&key.as_str()) {
            return Err(ZooError::UnknownParam {
                model: model.to_string(),
                param: key.clone(),
            });
        }
    }
    Ok(())
}

/// Construct a zoo model from a name and numeric parameter map, as used
/// by the experiment config format.
pub fn by_name(name: &str, params: &serde_json::Map<String, Value>) -> Result<ZooModel, ZooError> {
    match name {
        "constant_ray" | "single_ray" => {
            check_known(name, params, &["fitness"])?;
            Ok(constant_ray(param(params, "fitness", 1.0)?))
        }
        "decreasing_ray" => {
            check_known(name, params, &[])?;
            Ok(decreasing_ray())
        }
        "two_ray" => {
            check_known(name, params, &["fitness_a", "fitness_b"])?;
            Ok(two_ray_constant(
                param(params, "fitness_a", 1.0)?,
                param(params, "fitness_b", 1.0)?,
            ))
        }
        "two_ray_tiebreaker" => {
            check_known(name, params, &[])?;
            Ok(two_ray_tiebreaker())
        }
        "oscillating_block_ray" | "oscillating_geometric" => {
            check_known(name, params, &["low", "high", "ratio"])?;
            let ratio = param(params, "ratio", 4.0)?;
            if !(ratio >= 2.0 && ratio.fract() == 0.0) {
                return Err(ZooError::ParamRange {
                    name: "ratio",
                    value: ratio,
                    requirement: "integer >= 2",
                });
            }
            oscillating_geometric(
                param(params, "low", 1.0)?,
                param(params, "high", 2.0)?,
                ratio as usize,
            )
        }
        "binary_dyadic" => {
            check_known(name, params, &[])?;
            Ok(binary_dyadic())
        }
        "burst_spine" => {
            check_known(name, params, &["eta", "b"])?;
            burst_spine(param(params, "eta", 0.5)?, param(params, "b", 0.5)?)
        }
        "locked_binary_dyadic" => {
            check_known(name, params, &["eta"])?;
            lock(&binary_dyadic(), param(params, "eta", 0.5)?)
        }
        "locked_constant_ray" => {
            check_known(name, params, &["eta", "fitness"])?;
            lock(
                &constant_ray(param(params, "fitness", 1.0)?),
                param(params, "eta", 0.5)?,
            )
        }
        "nonattained_spine" => {
            check_known(name, params, &["eta"])?;
            nonattained_spine(param(params, "eta", 0.5)?)
        }
        "unbounded_spine" => {
            check_known(name, params, &["eta", "epsilon", "growth_ratio"])?;
            unbounded_spine(
                param(params, "eta", 0.5)?,
                param(params, "epsilon", 0.1)?,
                power_growth(param(params, "growth_ratio", 100.0)?),
            )
        }
        "tensor_constant_rays" => {
            check_known(name, params, &["fitness_c", "fitness_d"])?;
            Ok(tensor_product(
                &constant_ray(param(params, "fitness_c", 1.0)?),
                &constant_ray(param(params, "fitness_d", 2.0)?),
            ))
        }
        "tensor_binary_dyadic" => {
            check_known(name, params, &[])?;
            Ok(tensor_product(&binary_dyadic(), &binary_dyadic()))
        }
        "tensor_nonattained_spine" => {
            check_known(name, params, &["eta"])?;
            let eta = param(params, "eta", 0.5)?;
            Ok(tensor_product(
                &nonattained_spine(eta)?,
                &nonattained_spine(eta)?,
            ))
        }
        other => Err(ZooError::UnknownModel(other.to_string())),
    }
}

/// Names accepted by [`by_name`].
pub const MODEL_NAMES: &[&str] = &[
    "constant_ray",
    "decreasing_ray",
    "two_ray",
    "two_ray_tiebreaker",
    "oscillating_geometric",
    "binary_dyadic",
    "burst_spine",
    "locked_binary_dyadic",
    "locked_constant_ray",
    "nonattained_spine",
    "unbounded_spine",
    "tensor_constant_rays",
    "tensor_binary_dyadic",
    "tensor_nonattained_spine",
];

// ---------------------------------------------------------------------------
// generator contract checking

/// Breadth-first contract check over all nodes reachable with positive
/// probability: child probabilities sum to 1 when non-empty, entries
/// are non-negative, childless nodes have fitness 0, fitness is
/// non-negative, and repeated queries are identical. Stops after
/// `node_cap` nodes.
pub fn check_contract<M: TreeModel + ?Sized>(
    model: &M,
    depth_limit: usize,
    node_cap: usize,
) -> Result<usize, String> {
    let mut queue = vec![(model.root_state(), 0usize)];
    let mut visited = 0usize;
    while let Some((state, depth)) = queue.pop() {
        visited += 1;
        if visited > node_cap {
            break;
        }
        let fitness = model.fitness(&state);
        if !(fitness >= 0.0) {
            return Err(format!("negative or NaN fitness {fitness} at depth {depth}"));
        }
        let children = model.children(&state);
        let again = model.children(&state);
        if children.len() != again.len()
            || children
                .iter()
                .zip(again.iter())
                .any(|(a, b)| a.index != b.index || a.probability != b.probability)
        {
            return Err(format!("children query is not pure at depth {depth}"));
        }
        if fitness != model.fitness(&state) {
            return Err(format!("fitness query is not pure at depth {depth}"));
        }
        if children.is_empty() {
            if fitness != 0.0 {
                return Err(format!(
                    "childless node with fitness {fitness} at depth {depth}"
                ));
            }
            continue;
        }
        let mut sum = 0.0;
        for child in &children {
            if !(child.probability >= 0.0) {
                return Err(format!(
                    "negative child probability {} at depth {depth}",
                    child.probability
                ));
            }
            sum += child.probability;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(format!("child probabilities sum to {sum} at depth {depth}"));
        }
        if depth + 1 <= depth_limit {
            for child in children {
                if child.probability > 0.0 {
                    queue.push((child.state, depth + 1));
                }
            }
        }
    }
    Ok(visited)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{root_frontier, run_tree, trait_share, TraitPredicate};

    fn share_of(model: &ZooModel, steps: usize, tag: &str) -> f64 {
        let run = run_tree(model, steps, 0.0, &[]).unwrap();
        trait_share(&run.frontier, model, &TraitPredicate::tag(tag))
    }

    #[test]
    fn contract_holds_across_the_zoo() {
        let models: Vec<ZooModel> = vec![
            constant_ray(1.0),
            decreasing_ray(),
            two_ray_tiebreaker(),
            two_ray_constant(2.0, 1.0),
            oscillating_geometric(1.0, 2.0, 4).unwrap(),
            binary_dyadic(),
            burst_spine(0.5, 0.5).unwrap(),
            lock(&binary_dyadic(), 0.25).unwrap(),
            lock(&constant_ray(1.5), 0.5).unwrap(),
            nonattained_spine(0.5).unwrap(),
            unbounded_spine(0.5, 0.1, power_growth(100.0)).unwrap(),
            tensor_product(&constant_ray(1.0), &constant_ray(2.0)),
            tensor_product(&binary_dyadic(), &binary_dyadic()),
            tensor_product(
                &nonattained_spine(0.5).unwrap(),
                &nonattained_spine(0.5).unwrap(),
            ),
        ];
        for m in &models {
            check_contract(m, 25, 20_000).unwrap_or_else(|e| panic!("{}: {e}", m.name));
        }
    }

    #[test]
    fn constant_ray_mean_fitness() {
        let m = constant_ray(1.0);
        let run = run_tree(&m, 10, 0.0, &[]).unwrap();
        for r in &run.records {
            assert_eq!(r.mean_fitness, 1.0);
        }
    }

    #[test]
    fn decreasing_ray_geometric_mean_to_zero() {
        let run = run_tree(&decreasing_ray(), 100, 0.0, &[]).unwrap();
        assert!(run.records.last().unwrap().running_geometric_mean < 0.05);
    }

    #[test]
    fn tiebreaker_share_is_exactly_one_over_t_plus_one() {
        let m = two_ray_tiebreaker();
        let ray_b = TraitPredicate::tag("ray_b");
        let mut frontier = root_frontier(&m);
        for t in 1..=100 {
            frontier = crate::tree::advance(&m, &frontier, 0.0).unwrap().0;
            let share = trait_share(&frontier, &m, &ray_b);
            assert!(
                (share - 1.0 / (t + 1) as f64).abs() < 1e-12,
                "t={t}: {share}"
            );
        }
    }

    #[test]
    fn two_ray_takeover_and_symmetry() {
        let m = two_ray_constant(2.0, 1.0);
        assert!(share_of(&m, 40, "ray_b") < 1e-10);
        let sym = two_ray_constant(1.5, 1.5);
        assert!((share_of(&sym, 25, "ray_a") - 0.5).abs() < 1e-12);
        assert!((share_of(&sym, 25, "ray_b") - 0.5).abs() < 1e-12);
    }

    #[test]
    fn oscillating_boundaries_match_run() {
        let m = oscillating_geometric(1.0, 2.0, 4).unwrap();
        let lengths = geometric_block_lengths(4);
        let boundaries = oscillating_boundary_geometric_means(1.0, 2.0, &lengths, 5);
        let horizon = boundaries.last().unwrap().0;
        let run = run_tree(&m, horizon, 0.0, &[]).unwrap();
        for &(t, gm) in &boundaries {
            let measured = run.records[t - 1].running_geometric_mean;
            assert!((measured - gm).abs() < 1e-12, "t={t}: {measured} vs {gm}");
        }
        // Odd-block ends sit at exactly 2^(4/5); the limits bracket them.
        assert!((boundaries[1].1 - 2f64.powf(0.8)).abs() < 1e-12);
        assert!((boundaries[3].1 - 2f64.powf(0.8)).abs() < 1e-12);
        assert!(boundaries[2].1 < 1.2 && boundaries[4].1 < 1.2);
        let upper = m.reference("upper_boundary_limit").unwrap();
        assert!((upper - 2f64.powf(0.8)).abs() < 1e-14);
    }

    #[test]
    fn oscillating_constant_blocks_trivial() {
        let m = oscillating_block_ray(1.5, 1.5, geometric_block_lengths(2)).unwrap();
        let run = run_tree(&m, 30, 0.0, &[]).unwrap();
        for r in &run.records {
            assert!((r.running_geometric_mean - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn doubly_exponential_blocks_small_k() {
        let lengths = doubly_exponential_block_lengths();
        assert_eq!(lengths(0), 2);
        assert_eq!(lengths(1), 4);
        assert_eq!(lengths(2), 16);
        assert_eq!(lengths(3), 256);
        // gm heads back toward the low value after each long even block
        // and toward the high value after each odd block.
        let b = oscillating_boundary_geometric_means(1.0, 2.0, &lengths, 4);
        assert!(b[1].1 > b[0].1 && b[2].1 < b[1].1 && b[3].1 > b[2].1);
    }

    #[test]
    fn dyadic_fitness_values() {
        assert_eq!(binary_dyadic_fitness(&NodeRef::root()), 1.0);
        assert_eq!(binary_dyadic_fitness(&NodeRef::from_path(&[1])), 1.5);
        assert_eq!(binary_dyadic_fitness(&NodeRef::from_path(&[1, 0])), 1.25);
        assert_eq!(binary_closed_form_exponent(&NodeRef::root()), 2.0);
        assert_eq!(binary_closed_form_exponent(&NodeRef::from_path(&[0])), 1.0);
        assert_eq!(
            binary_closed_form_exponent(&NodeRef::from_path(&[1, 1])),
            2.0
        );
    }

    #[test]
    fn dyadic_fitness_stays_in_open_interval() {
        let m = binary_dyadic();
        let run = run_tree(&m, 12, 0.0, &[]).unwrap();
        for n in &run.frontier.nodes {
            assert!(n.fitness > 0.0 && n.fitness < 2.0);
            assert_eq!(n.fitness, binary_dyadic_fitness(&n.node));
        }
    }

    #[test]
    fn dyadic_first_step_shares() {
        let m = binary_dyadic();
        let f0 = root_frontier(&m);
        let (f1, r0) = crate::tree::advance(&m, &f0, 0.0).unwrap();
        assert_eq!(r0.mean_fitness, 1.0);
        assert_eq!(f1.nodes.len(), 2);
        for n in &f1.nodes {
            assert_eq!(n.share, 0.5);
        }
        let (_, r1) = crate::tree::advance(&m, &f1, 0.0).unwrap();
        assert_eq!(r1.mean_fitness, 1.0);
    }

    #[test]
    fn burst_spine_references_and_first_step() {
        let m = burst_spine(0.5, 0.5).unwrap();
        assert!((m.reference("R").unwrap() - 4.0 / 3.0).abs() < 1e-14);
        assert!((m.reference("mean_fitness_odd_limit").unwrap() - 0.4).abs() < 1e-14);
        assert!((m.reference("mean_fitness_even_limit").unwrap() - 0.625).abs() < 1e-14);

        let f0 = root_frontier(&m);
        let (f1, r0) = crate::tree::advance(&m, &f0, 0.0).unwrap();
        assert_eq!(r0.mean_fitness, 1.0);
        assert_eq!(f1.nodes.len(), 2);
        assert_eq!(f1.nodes[0].share, 0.5);
        assert_eq!(f1.nodes[1].share, 0.5);
        // First burst head comes from the even root step, so it is dead
        // on arrival.
        assert_eq!(f1.nodes[1].fitness, 0.0);
    }

    #[test]
    fn burst_spine_mean_fitness_approaches_limits() {
        let m = burst_spine(0.5, 0.5).unwrap();
        let run = run_tree(&m, 60, 0.0, &[]).unwrap();
        let odd = m.reference("mean_fitness_odd_limit").unwrap();
        let even = m.reference("mean_fitness_even_limit").unwrap();
        for r in run.records.iter().skip(40) {
            let limit = if r.time % 2 == 1 { odd } else { even };
            assert!((r.mean_fitness - limit).abs() < 1e-8, "t={}", r.time);
        }
    }

    #[test]
    fn lock_gives_exactly_eta_after_one_step() {
        for eta in [0.1, 0.25, 0.5] {
            let m = lock(&binary_dyadic(), eta).unwrap();
            let f0 = root_frontier(&m);
            let (f1, _) = crate::tree::advance(&m, &f0, 0.0).unwrap();
            let share = trait_share(&f1, &m, &TraitPredicate::tag("locked"));
            assert!((share - eta).abs() < 1e-15);
        }
    }

    #[test]
    fn locked_constant_ray_lineage_is_exact_power() {
        let m = lock(&constant_ray(1.5), 0.5).unwrap();
        // Path [0] is the locked head spawned by the root.
        let sizes = crate::tree::lineage_sizes(&m, &[0], 15, 0.0).unwrap();
        for (s, log_z) in sizes.iter().enumerate() {
            assert!((log_z - s as f64 * 1.5f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn lock_skips_zero_fitness_nodes() {
        let m = lock(&burst_spine(0.5, 0.5).unwrap(), 0.3).unwrap();
        // Walk to a zero-fitness burst head: root -> (shifted) burst child.
        // In the locked model the root's children are [locked, spine, burst].
        let f = crate::tree::node_frontier(&m, &[2]).unwrap();
        assert_eq!(f.nodes[0].fitness, 0.0);
        assert!(m.children(&f.nodes[0].state).is_empty());
    }

    #[test]
    fn nonattained_spine_basics() {
        let m = nonattained_spine(0.5).unwrap();
        let f0 = root_frontier(&m);
        assert_eq!(f0.nodes[0].fitness, 0.5);
        assert_eq!(m.fitness_supremum(), Some(1.0));
        let run = run_tree(&m, 300, 0.0, &[]).unwrap();
        let mean = run.records.last().unwrap().mean_fitness;
        assert!(mean > 0.9, "mean {mean}");
        // No node ever attains the supremum.
        for n in &run.frontier.nodes {
            assert!(n.fitness < 1.0);
        }
    }

    #[test]
    fn unbounded_spine_blows_up_with_persistent_zero_mass() {
        let m = unbounded_spine(0.5, 0.1, power_growth(100.0)).unwrap();
        let zero = TraitPredicate::zero_fitness();
        let locked = TraitPredicate::tag("locked");
        let run = run_tree(&m, 60, 0.0, &[zero.clone(), locked.clone()]).unwrap();
        let max_mean = run
            .records
            .iter()
            .map(|r| r.mean_fitness)
            .fold(0.0, f64::max);
        assert!(max_mean > 1e6);
        for r in run.records.iter().skip(1) {
            let z = r.trait_shares.iter().find(|(n, _)| n == "zero_fitness");
            assert!(z.unwrap().1 > 0.0, "t={}", r.time);
            let l = r.trait_shares.iter().find(|(n, _)| n == "locked");
            assert!(l.unwrap().1 >= 0.5 - 1e-12, "t={}", r.time);
        }
        // With ratio 100 ≫ 1/ε² the zero-fitness fraction hovers near
        // its structural value 1−η−ε = 0.4.
        let tail_zero = run
            .records
            .iter()
            .skip(20)
            .map(|r| r.trait_shares[0].1)
            .fold(f64::INFINITY, f64::min);
        assert!(tail_zero > 0.3, "tail zero share {tail_zero}");
    }

    #[test]
    fn tensor_constant_rays_additive() {
        let m = tensor_product(&constant_ray(1.0), &constant_ray(2.0));
        let run = run_tree(&m, 10, 0.0, &[]).unwrap();
        for r in &run.records {
            assert_eq!(r.mean_fitness, 3.0);
        }
        let n = &run.frontier.nodes[0];
        let labels = m.labels(&n.state);
        assert_eq!(labels.scalar("f_C"), Some(1.0));
        assert_eq!(labels.scalar("f_D"), Some(2.0));
        assert_eq!(m.fitness_supremum(), Some(3.0));
    }

    #[test]
    fn tensor_dyadic_root_children() {
        let m = tensor_product(&binary_dyadic(), &binary_dyadic());
        let root = m.root_state();
        assert_eq!(m.fitness(&root), 2.0);
        let children = m.children(&root);
        assert_eq!(children.len(), 4);
        for c in &children {
            assert_eq!(c.probability, 0.25);
        }
        let m2 = tensor_product(
            &nonattained_spine(0.5).unwrap(),
            &nonattained_spine(0.5).unwrap(),
        );
        assert_eq!(m2.fitness_supremum(), Some(2.0));
    }

    #[test]
    fn by_name_round_trip_and_validation() {
        let params: serde_json::Map<String, Value> =
            serde_json::from_str(r#"{"eta": 0.5, "b": 0.5}"#).unwrap();
        let m = by_name("burst_spine", &params).unwrap();
        assert_eq!(m.name, "burst_spine");

        let bad: serde_json::Map<String, Value> =
            serde_json::from_str(r#"{"eta": 0.5, "typo": 1}"#).unwrap();
        assert!(matches!(
            by_name("burst_spine", &bad),
            Err(ZooError::UnknownParam { .. })
        ));
        assert!(matches!(
            by_name("no_such_model", &params.clone()),
            Err(ZooError::UnknownModel(_))
        ));
        let out_of_range: serde_json::Map<String, Value> =
            serde_json::from_str(r#"{"eta": 1.5}"#).unwrap();
        assert!(matches!(
            by_name("nonattained_spine", &out_of_range),
            Err(ZooError::ParamRange { .. })
        ));
        for name in MODEL_NAMES {
            by_name(name, &serde_json::Map::new())
                .unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
}
