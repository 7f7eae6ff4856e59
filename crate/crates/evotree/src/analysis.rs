//! Analysis layer: preservation checking, takeover/extinction verdicts,
//! concentration, utility models, and the coordinate (capability ×
//! deception) decomposition.

use std::collections::VecDeque;
use std::sync::Arc;

use thiserror::Error;

use crate::tree::{ExponentEstimate, Frontier, NodeRef, StepRecord, TreeModel};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("frontier nodes carry no f_C/f_D coordinate labels")]
    MissingCoordinateLabels,
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("tail fraction must lie in (0, 1], got {0}")]
    BadTailFraction(f64),
}

const FITNESS_TOL: f64 = 1e-12;

/// Result of an η-preservation scan.
#[derive(Debug)]
pub struct PreservationReport {
    pub holds: bool,
    /// First node found whose same-or-better-fitness child mass is
    /// below η.
    pub witness: Option<NodeRef>,
    pub nodes_checked: usize,
    /// False if the scan stopped at the node cap before exhausting the
    /// depth limit.
    pub complete: bool,
}

/// Check η-preservation on every node reachable within `depth_limit`
/// with positive kernel mass: each reproducing node must give
/// probability at least `eta` to children whose fitness is at least its
/// own. Zero-fitness childless nodes are skipped. The scan stops after
/// `node_cap` nodes and reports itself incomplete.
pub fn eta_preservation_check<M: TreeModel + ?Sized>(
    model: &M,
    depth_limit: usize,
    eta: f64,
    node_cap: usize,
) -> PreservationReport {
    let mut queue = VecDeque::new();
    queue.push_back((NodeRef::root(), model.root_state(), 0usize));
    let mut nodes_checked = 0usize;
    let mut complete = true;
    while let Some((node, state, depth)) = queue.pop_front() {
        if nodes_checked >= node_cap {
            complete = false;
            break;
        }
        nodes_checked += 1;
        let fitness = model.fitness(&state);
        let children = model.children(&state);
        if !children.is_empty() {
            let mut preserved = 0.0;
            for child in &children {
                if model.fitness(&child.state) + FITNESS_TOL >= fitness {
                    preserved += child.probability;
                }
            }
            if preserved + FITNESS_TOL < eta {
                return PreservationReport {
                    holds: false,
                    witness: Some(node),
                    nodes_checked,
                    complete: true,
                };
            }
            if depth + 1 <= depth_limit {
                for child in children {
                    if child.probability > 0.0 {
                        queue.push_back((node.child(child.index), child.state, depth + 1));
                    }
                }
            }
        }
    }
    PreservationReport {
        holds: true,
        witness: None,
        nodes_checked,
        complete,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    TakesOver,
    DiesOut,
    Survives,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let text = match self {
            Verdict::TakesOver => "takes_over",
            Verdict::DiesOut => "dies_out",
            Verdict::Survives => "survives",
            Verdict::Inconclusive => "inconclusive",
        };
        write!(f, "{text}")
    }
}

/// Verdict for trait S against its complement T, plus the estimates it
/// was based on.
#[derive(Debug, Clone, Copy)]
pub struct Classification {
    pub verdict: Verdict,
    pub evidence: (ExponentEstimate, ExponentEstimate),
}

/// Compare finite-horizon exponent estimates of two complementary
/// traits. The margin guards against truncation noise: verdicts are
/// only issued when the estimates separate by more than it.
pub fn classify_partition(
    estimate_s: ExponentEstimate,
    estimate_t: ExponentEstimate,
    margin: f64,
) -> Classification {
    let verdict = if estimate_s.lower > estimate_t.upper + margin {
        Verdict::TakesOver
    } else if estimate_s.upper < estimate_t.lower - margin {
        Verdict::DiesOut
    } else if estimate_s.upper > estimate_t.upper + margin {
        Verdict::Survives
    } else {
        Verdict::Inconclusive
    };
    Classification {
        verdict,
        evidence: (estimate_s, estimate_t),
    }
}

/// Share of frontier mass within `epsilon` of `f_star`.
pub fn concentration_mass(frontier: &Frontier, f_star: f64, epsilon: f64) -> f64 {
    frontier
        .nodes
        .iter()
        .filter(|n| (n.fitness - f_star).abs() < epsilon)
        .map(|n| n.share)
        .sum()
}

/// Conditional mean utility given fitness, `μ(f)`, with declared
/// regularity flags. `μ` may return −∞ to model catastrophic outcomes.
#[derive(Clone)]
pub struct UtilityProfile {
    pub name: String,
    mu: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Declared bound on |μ| over the model's fitness range, if any.
    pub bounded: Option<f64>,
    /// Declared by the caller; spot-checked, not verified.
    pub continuous_on_reachable: bool,
}

impl UtilityProfile {
    pub fn new(
        name: impl Into<String>,
        mu: impl Fn(f64) -> f64 + Send + Sync + 'static,
        bounded: Option<f64>,
        continuous_on_reachable: bool,
    ) -> Self {
        Self {
            name: name.into(),
            mu: Arc::new(mu),
            bounded,
            continuous_on_reachable,
        }
    }

    /// μ(f) = f.
    pub fn identity() -> Self {
        Self::new("identity", |f| f, None, true)
    }

    /// μ(f) = f².
    pub fn squared() -> Self {
        Self::new("squared", |f| f * f, None, true)
    }

    /// μ(f) = log f: −∞ on zero-fitness programs.
    pub fn log_fitness() -> Self {
        Self::new(
            "log",
            |f| if f > 0.0 { f.ln() } else { f64::NEG_INFINITY },
            None,
            false,
        )
    }

    pub fn evaluate(&self, fitness: f64) -> f64 {
        (self.mu)(fitness)
    }
}

/// Share-weighted expected utility of a frontier. If any node with
/// positive share has μ = −∞ the value is −∞ and the offending share
/// mass is reported.
#[derive(Debug, Clone, Copy)]
pub struct UtilityValue {
    pub value: f64,
    /// Total share sitting on μ = −∞ nodes.
    pub neg_infinite_share: f64,
}

pub fn expected_utility(frontier: &Frontier, utility: &UtilityProfile) -> UtilityValue {
    let mut value = 0.0;
    let mut neg_infinite_share = 0.0;
    for n in &frontier.nodes {
        if n.share == 0.0 {
            continue;
        }
        let mu = utility.evaluate(n.fitness);
        if mu == f64::NEG_INFINITY {
            neg_infinite_share += n.share;
        } else {
            value += n.share * mu;
        }
    }
    if neg_infinite_share > 0.0 {
        value = f64::NEG_INFINITY;
    }
    UtilityValue {
        value,
        neg_infinite_share,
    }
}

/// Share-weighted means of the coordinate fitnesses `f_C` and `f_D` on
/// a tensor-product frontier. Their sum equals the frontier's mean
/// fitness because fitness is additive across coordinates.
pub fn coordinate_means<M: TreeModel + ?Sized>(
    frontier: &Frontier,
    model: &M,
) -> Result<(f64, f64), AnalysisError> {
    let mut mean_c = 0.0;
    let mut mean_d = 0.0;
    for n in &frontier.nodes {
        let labels = model.labels(&n.state);
        let (c, d) = match (labels.scalar("f_C"), labels.scalar("f_D")) {
            (Some(c), Some(d)) => (c, d),
            _ => return Err(AnalysisError::MissingCoordinateLabels),
        };
        mean_c += n.share * c;
        mean_d += n.share * d;
    }
    Ok((mean_c, mean_d))
}

/// Minimum of the running geometric mean over the trailing
/// `tail_fraction` of the trajectory, compared against the
/// η-preservation floor `eta·f_star`.
pub fn geometric_mean_floor_check(
    records: &[StepRecord],
    eta: f64,
    f_star: f64,
    tail_fraction: f64,
    tolerance: f64,
) -> Result<(f64, bool), AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::EmptyTrajectory);
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(AnalysisError::BadTailFraction(tail_fraction));
    }
    let tail = ((records.len() as f64 * tail_fraction).ceil() as usize).max(1);
    let floor = records[records.len() - tail..]
        .iter()
        .map(|r| r.running_geometric_mean)
        .fold(f64::INFINITY, f64::min);
    Ok((floor, floor >= eta * f_star - tolerance))
}

/// Trailing minimum of a recorded trait share — the "prospers"
/// diagnostic. No finite run can certify a liminf, so this is reported
/// as a statistic, never as a verdict.
pub fn trailing_min_share(
    records: &[StepRecord],
    trait_name: &str,
    tail_fraction: f64,
) -> Result<f64, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::EmptyTrajectory);
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(AnalysisError::BadTailFraction(tail_fraction));
    }
    let tail = ((records.len() as f64 * tail_fraction).ceil() as usize).max(1);
    let mut min = f64::INFINITY;
    for r in &records[records.len() - tail..] {
        if let Some((_, share)) = r.trait_shares.iter().find(|(n, _)| n == trait_name) {
            min = min.min(*share);
        }
    }
    Ok(min)
}
