//! Independent Monte Carlo oracle for the tree engine.
//!
//! A cloud of equally weighted particles starts on the root. Each step
//! estimates mean fitness and trait shares from the current cloud, then
//! resamples particles proportionally to fitness (systematic
//! resampling, fully determined by the seed) and moves every survivor
//! to a child drawn from its child distribution. Estimates converge to
//! the deterministic engine's values at the usual `O(N^{-1/2})` rate,
//! which makes the two implementations useful cross-checks: they share
//! no propagation code.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::tree::{NodeRef, State, TraitPredicate, TreeModel};

#[derive(Debug, Error)]
pub enum ParticleError {
    #[error("all particle weights are zero at step {0} (population extinct)")]
    Extinct(usize),
    #[error("particle count must be at least 1")]
    NoParticles,
}

/// Per-step Monte Carlo estimates.
#[derive(Debug, Clone)]
pub struct ParticleRecord {
    pub time: usize,
    pub mean_fitness: f64,
    pub trait_shares: Vec<(String, f64)>,
}

struct Particle {
    node: NodeRef,
    state: State,
    fitness: f64,
}

/// Run the particle system for `steps` generations and return the
/// per-step estimates. Extinction mid-run truncates the sequence with
/// an error naming the step.
pub fn particle_oracle<M: TreeModel + ?Sized>(
    model: &M,
    particles: usize,
    steps: usize,
    seed: u64,
    traits: &[TraitPredicate],
) -> Result<Vec<ParticleRecord>, ParticleError> {
    if particles == 0 {
        return Err(ParticleError::NoParticles);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cloud: Vec<Particle> = (0..particles)
        .map(|_| {
            let state = model.root_state();
            let fitness = model.fitness(&state);
            Particle {
                node: NodeRef::root(),
                state,
                fitness,
            }
        })
        .collect();

    let mut records = Vec::with_capacity(steps);
    for time in 0..steps {
        let total: f64 = cloud.iter().map(|p| p.fitness).sum();
        let mean = total / particles as f64;
        let trait_shares: Vec<(String, f64)> = traits
            .iter()
            .map(|t| {
                let hits = cloud
                    .iter()
                    .filter(|p| t.matches(&p.node, p.fitness, &model.labels(&p.state)))
                    .count();
                (t.name.clone(), hits as f64 / particles as f64)
            })
            .collect();
        records.push(ParticleRecord {
            time,
            mean_fitness: mean,
            trait_shares,
        });
        if total <= 0.0 {
            return Err(ParticleError::Extinct(time));
        }

        // Systematic resampling proportional to fitness: one uniform
        // offset, then equally spaced points through the cumulative
        // weights.
        let stride = total / particles as f64;
        let offset: f64 = rng.gen::<f64>() * stride;
        let mut selected = Vec::with_capacity(particles);
        let mut cumulative = 0.0;
        let mut next_point = offset;
        for (i, p) in cloud.iter().enumerate() {
            cumulative += p.fitness;
            while next_point < cumulative && selected.len() < particles {
                selected.push(i);
                next_point += stride;
            }
        }
        // Float shortfall in the cumulative sum can leave a slot or two
        // unfilled; repeat the last selected (fitness-positive) index.
        while selected.len() < particles {
            let last = *selected.last().expect("positive total selects at least one");
            selected.push(last);
        }

        // Move each survivor to a child.
        let mut next_cloud = Vec::with_capacity(particles);
        for &i in &selected {
            let parent = &cloud[i];
            let children = model.children(&parent.state);
            debug_assert!(!children.is_empty(), "fitness-positive node with no children");
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = children.len() - 1;
            for (ci, c) in children.iter().enumerate() {
                acc += c.probability;
                if u < acc {
                    chosen = ci;
                    break;
                }
            }
            let child = &children[chosen];
            let fitness = model.fitness(&child.state);
            next_cloud.push(Particle {
                node: parent.node.child(child.index),
                state: child.state.clone(),
                fitness,
            });
        }
        cloud = next_cloud;
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::run_tree;
    use crate::zoo;

    #[test]
    fn deterministic_ray_agrees_exactly() {
        let m = zoo::decreasing_ray();
        let oracle = particle_oracle(&m, 7, 12, 42, &[]).unwrap();
        let engine = run_tree(&m, 12, 0.0, &[]).unwrap();
        for (o, e) in oracle.iter().zip(engine.records.iter()) {
            // Identical up to the summation order of equal weights.
            assert!((o.mean_fitness - e.mean_fitness).abs() < 1e-14);
        }
    }

    #[test]
    fn replay_is_bit_identical() {
        let m = zoo::binary_dyadic();
        let a = particle_oracle(&m, 500, 8, 7, &[]).unwrap();
        let b = particle_oracle(&m, 500, 8, 7, &[]).unwrap();
        for (ra, rb) in a.iter().zip(b.iter()) {
            assert_eq!(ra.mean_fitness.to_bits(), rb.mean_fitness.to_bits());
        }
    }

    #[test]
    fn binary_dyadic_tracks_engine() {
        let m = zoo::binary_dyadic();
        let particles = 20_000;
        let tolerance = 5.0 / (particles as f64).sqrt();
        let oracle = particle_oracle(&m, particles, 10, 1, &[]).unwrap();
        let engine = run_tree(&m, 10, 0.0, &[]).unwrap();
        for (o, e) in oracle.iter().zip(engine.records.iter()) {
            assert!(
                (o.mean_fitness - e.mean_fitness).abs() < tolerance,
                "t={}: {} vs {}",
                o.time,
                o.mean_fitness,
                e.mean_fitness
            );
        }
    }

    #[test]
    fn burst_spine_trait_shares_track_engine() {
        let m = zoo::burst_spine(0.5, 0.5).unwrap();
        let traits = [
            crate::tree::TraitPredicate::tag("spine"),
            crate::tree::TraitPredicate::tag("burst"),
        ];
        let particles = 20_000;
        let oracle = particle_oracle(&m, particles, 15, 3, &traits).unwrap();
        let engine = run_tree(&m, 15, 0.0, &traits).unwrap();
        let tolerance = 5.0 / (particles as f64).sqrt();
        for (o, e) in oracle.iter().zip(engine.records.iter()) {
            for ((name, os), (ename, es)) in o.trait_shares.iter().zip(e.trait_shares.iter()) {
                assert_eq!(name, ename);
                assert!((os - es).abs() < tolerance, "t={} {name}", o.time);
            }
        }
    }

    #[test]
    fn extinction_reported() {
        let m = zoo::single_ray(std::sync::Arc::new(
            |t| if t < 2 { 1.0 } else { 0.0 },
        ));
        let err = particle_oracle(&m, 50, 10, 9, &[]).unwrap_err();
        assert!(matches!(err, ParticleError::Extinct(2)));
    }
}
