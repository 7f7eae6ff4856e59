//! Trajectory and frontier serialization.
//!
//! CSV columns are fixed: `t, mean_fitness, log_total_mass,
//! running_geometric_mean, truncated_share_bound`, then one column per
//! trait. Numbers are written in Rust's shortest round-trip form, so a
//! rerun with identical inputs produces a byte-identical file.

use serde_json::{json, Value};

use crate::tree::{Frontier, StepRecord, TreeModel};

/// Render a trajectory as CSV. `trait_names` fixes the column order;
/// records missing a named trait get an empty cell (this does not
/// happen for engine-produced trajectories).
pub fn trajectory_csv(records: &[StepRecord], trait_names: &[String]) -> String {
    let mut out = String::new();
    out.push_str("t,mean_fitness,log_total_mass,running_geometric_mean,truncated_share_bound");
    for name in trait_names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}",
            r.time,
            r.mean_fitness,
            r.log_total_mass,
            r.running_geometric_mean,
            r.truncated_share_bound
        ));
        for name in trait_names {
            out.push(',');
            if let Some((_, share)) = r.trait_shares.iter().find(|(n, _)| n == name) {
                // `+ 0.0` normalizes the negative zero an empty sum produces.
                out.push_str(&(share + 0.0).to_string());
            }
        }
        out.push('\n');
    }
    out
}

/// Snapshot of a frontier as a JSON array of
/// `{path, share, fitness, labels}` objects, in frontier order.
pub fn frontier_json<M: TreeModel + ?Sized>(frontier: &Frontier, model: &M) -> Value {
    let nodes: Vec<Value> = frontier
        .nodes
        .iter()
        .map(|n| {
            let labels = model.labels(&n.state);
            let scalars: serde_json::Map<String, Value> = labels
                .scalars
                .iter()
                .map(|(k, v)| (k.clone(), json!(v)))
                .collect();
            json!({
                "path": n.node.path(),
                "share": n.share,
                "fitness": n.fitness,
                "labels": {
                    "tags": labels.tags,
                    "scalars": scalars,
                },
            })
        })
        .collect();
    json!({
        "depth": frontier.depth,
        "log_total_mass": if frontier.log_total_mass.is_finite() {
            json!(frontier.log_total_mass)
        } else {
            json!("-inf")
        },
        "truncated_share_bound": frontier.truncated_share_bound,
        "nodes": nodes,
    })
}

/// Post-hoc check of the mass-recursion identity on a rendered CSV:
/// every consecutive pair of rows must satisfy
/// `log_total_mass(t) − log_total_mass(t−1) = ln(mean_fitness(t))`
/// within the given tolerance. Returns the first violating row.
pub fn check_csv_mass_recursion(csv: &str, tolerance: f64) -> Result<(), usize> {
    let mut prev: Option<f64> = None;
    for (row, line) in csv.lines().skip(1).enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let mean: f64 = fields[1].parse().map_err(|_| row)?;
        let log_mass: f64 = fields[2].parse().map_err(|_| row)?;
        let base = prev.unwrap_or(0.0);
        if (log_mass - base - mean.ln()).abs() > tolerance {
            return Err(row);
        }
        prev = Some(log_mass);
    }
    Ok(())
}
