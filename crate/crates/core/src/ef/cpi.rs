use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::EvolvingGraph;
use crate::ef::lifting::{lift, restrict, LiftedEnsemble};
use crate::ef::reference::ReferenceDataset;
use crate::error::{Error, Result};
use crate::graph::{degree_histogram, Graph};
use crate::rng::{stream, tags, Rng, StreamId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpiConfig {
    /// Burst length in timesteps.
    pub t_burst: u64,
    /// Projection length in timesteps.
    pub t_project: u64,
    /// Rule iterations per timestep.
    pub steps_per_timestep: u64,
    /// Replicas averaged per burst.
    pub k_runs: usize,
    /// Lifted ensemble size N.
    pub neighbors: usize,
    pub coarse_steps: usize,
    pub r_remove: f64,
    pub seed: u64,
}

impl Default for CpiConfig {
    fn default() -> Self {
        CpiConfig {
            t_burst: 10,
            t_project: 10,
            steps_per_timestep: 10,
            k_runs: 4,
            neighbors: 10,
            coarse_steps: 50,
            r_remove: 0.1,
            seed: 0,
        }
    }
}

impl CpiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_burst < 1 {
            return Err(Error::param("t_burst", "must be at least 1"));
        }
        if self.steps_per_timestep < 1 {
            return Err(Error::param("steps_per_timestep", "must be at least 1"));
        }
        if self.k_runs < 1 || self.k_runs >= 1 << 20 {
            return Err(Error::param("k_runs", "must be in 1..2^20"));
        }
        if self.neighbors <= 2 || self.neighbors > u16::MAX as usize {
            return Err(Error::param("neighbors", "need 2 < N <= 65535"));
        }
        if self.coarse_steps >= 1 << 20 {
            return Err(Error::param("coarse_steps", "must be below 2^20"));
        }
        if !(0.0..=1.0).contains(&self.r_remove) {
            return Err(Error::param("r_remove", "must be a probability"));
        }
        Ok(())
    }

    pub fn burst_iterations(&self) -> u64 {
        self.t_burst * self.steps_per_timestep
    }

    /// Timesteps covered by one coarse step.
    pub fn coarse_dt(&self) -> u64 {
        self.t_burst + self.t_project
    }
}

/// The three operators a coarse step is built from.
pub trait CoarseOperators: Sync {
    fn lift(&self, phi: [f64; 2]) -> Result<LiftedEnsemble>;
    fn simulate(&self, g: &Graph, iterations: u64, rng: &mut Rng) -> Graph;
    fn restrict(&self, weighted: &[(f64, &Graph)]) -> Result<[f64; 2]>;
}

/// Lifting/restriction against a reference dataset, simulation with the
/// edge add/remove rules.
pub struct ReferenceOperators<'a> {
    pub reference: &'a ReferenceDataset,
    pub neighbors: usize,
    pub r_remove: f64,
}

impl CoarseOperators for ReferenceOperators<'_> {
    fn lift(&self, phi: [f64; 2]) -> Result<LiftedEnsemble> {
        lift(phi, self.reference, self.neighbors)
    }

    fn simulate(&self, g: &Graph, iterations: u64, rng: &mut Rng) -> Graph {
        let mut state = EvolvingGraph::new(g.clone());
        state.run(iterations, self.r_remove, rng);
        state.into_graph()
    }

    fn restrict(&self, weighted: &[(f64, &Graph)]) -> Result<[f64; 2]> {
        restrict(weighted, self.reference)
    }
}

#[derive(Debug, Clone)]
pub struct BurstOutcome {
    pub ensemble: LiftedEnsemble,
    /// `R(L(φ))`.
    pub start: [f64; 2],
    /// `R(ψ_t(L(φ)))`, one per replica.
    pub ends: Vec<[f64; 2]>,
}

/// One application of the coarse time stepper `R ∘ ψ_t ∘ L` per replica.
/// Member `i` of replica `q` in coarse step `step` evolves on stream
/// `(CPI_BURST, step, q, i)` of `seed`.
pub fn coarse_burst(
    ops: &dyn CoarseOperators,
    phi: [f64; 2],
    iterations: u64,
    k_runs: usize,
    seed: u64,
    step: usize,
) -> Result<BurstOutcome> {
    let ensemble = ops.lift(phi)?;
    let start = ops.restrict(&ensemble.weighted())?;
    let mut ends = Vec::with_capacity(k_runs);
    for q in 0..k_runs {
        let evolved: Vec<Graph> = ensemble
            .members
            .par_iter()
            .enumerate()
            .map(|(i, m)| {
                let mut rng = stream(seed, StreamId::new(tags::CPI_BURST, step as u32, q as u32, i as u16));
                ops.simulate(&m.graph, iterations, &mut rng)
            })
            .collect();
        let weighted: Vec<(f64, &Graph)> = ensemble
            .members
            .iter()
            .zip(&evolved)
            .map(|(m, g)| (m.coef, g))
            .collect();
        ends.push(ops.restrict(&weighted)?);
    }
    Ok(BurstOutcome { ensemble, start, ends })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub ids: Vec<String>,
    pub coefs: Vec<f64>,
    pub coef_sum: f64,
    pub rank: usize,
    pub residual: f64,
}

impl From<&LiftedEnsemble> for EnsembleSummary {
    fn from(e: &LiftedEnsemble) -> Self {
        EnsembleSummary {
            ids: e.members.iter().map(|m| m.id.clone()).collect(),
            coefs: e.members.iter().map(|m| m.coef).collect(),
            coef_sum: e.coef_sum(),
            rank: e.rank,
            residual: e.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpiStep {
    pub coarse_step: usize,
    /// Timesteps since the start.
    pub time: u64,
    /// Rule iterations simulated along the coarse trajectory before this
    /// step (per ensemble member).
    pub fine_budget: u64,
    /// Restricted lift of the current coarse state.
    pub phi: [f64; 2],
    /// Replica-averaged restriction after the burst; absent on the last row.
    pub phi_burst_end: Option<[f64; 2]>,
    pub slope: Option<[f64; 2]>,
    pub ensemble: EnsembleSummary,
    /// Unweighted mean edge count of the lifted graphs.
    pub mean_edge_count: f64,
    /// Unweighted mean normalized degree histogram of the lifted graphs.
    pub degree_histogram: Vec<f64>,
    /// The lifting target lies outside the hull of the reference coordinates.
    pub outside_hull: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpiTrajectory {
    pub config: CpiConfig,
    pub steps: Vec<CpiStep>,
    /// Rule iterations over all members and replicas.
    pub total_iterations: u64,
}

impl CpiTrajectory {
    pub fn final_step(&self) -> &CpiStep {
        self.steps.last().expect("trajectory has an initial row")
    }

    /// Timesteps covered.
    pub fn horizon(&self) -> u64 {
        self.final_step().time
    }
}

fn ensemble_stats(e: &LiftedEnsemble, n: usize) -> (f64, Vec<f64>) {
    let mut hist = vec![0.0; n];
    let mut edges = 0.0;
    for m in &e.members {
        edges += m.graph.m() as f64;
        for (h, x) in hist.iter_mut().zip(degree_histogram(&m.graph).normalized()) {
            *h += x;
        }
    }
    let k = e.members.len() as f64;
    hist.iter_mut().for_each(|h| *h /= k);
    (edges / k, hist)
}

/// Coarse projective integration from `g0`.
///
/// Per coarse step: lift the current coordinates, run `k_runs` bursts of
/// `t_burst` timesteps, take the replica-mean chord slope and the mean
/// burst end, then project `φ ← φ(t_B) + t_P · slope`. Row `j` of the
/// result is the state at time `j (t_B + t_P)`; the final row has no burst.
pub fn cpi_run(g0: &Graph, cfg: &CpiConfig, reference: &ReferenceDataset) -> Result<CpiTrajectory> {
    cfg.validate()?;
    let ops = ReferenceOperators {
        reference,
        neighbors: cfg.neighbors,
        r_remove: cfg.r_remove,
    };
    let n = reference.n();
    let mut phi = reference.coarse_of(g0)?;
    let mut steps = Vec::with_capacity(cfg.coarse_steps + 1);
    let burst = cfg.burst_iterations();
    let mut total_iterations = 0u64;
    for j in 0..=cfg.coarse_steps {
        let outside_hull = !reference.hull().contains(phi, 0.0);
        if outside_hull {
            log::warn!("coarse step {j}: {phi:?} lies outside the reference hull");
        }
        let time = j as u64 * cfg.coarse_dt();
        let fine_budget = j as u64 * burst;
        if j == cfg.coarse_steps {
            let ensemble = ops.lift(phi)?;
            let start = ops.restrict(&ensemble.weighted())?;
            let (mean_edge_count, degree_histogram) = ensemble_stats(&ensemble, n);
            steps.push(CpiStep {
                coarse_step: j,
                time,
                fine_budget,
                phi: start,
                phi_burst_end: None,
                slope: None,
                ensemble: EnsembleSummary::from(&ensemble),
                mean_edge_count,
                degree_histogram,
                outside_hull,
            });
            break;
        }
        let out = coarse_burst(&ops, phi, burst, cfg.k_runs, cfg.seed, j)?;
        total_iterations += burst * (cfg.k_runs * out.ensemble.members.len()) as u64;
        let k = out.ends.len() as f64;
        let end = out
            .ends
            .iter()
            .fold([0.0, 0.0], |acc, e| [acc[0] + e[0] / k, acc[1] + e[1] / k]);
        let tb = cfg.t_burst as f64;
        let slope = [(end[0] - out.start[0]) / tb, (end[1] - out.start[1]) / tb];
        let tp = cfg.t_project as f64;
        let (mean_edge_count, degree_histogram) = ensemble_stats(&out.ensemble, n);
        steps.push(CpiStep {
            coarse_step: j,
            time,
            fine_budget,
            phi: out.start,
            phi_burst_end: Some(end),
            slope: Some(slope),
            ensemble: EnsembleSummary::from(&out.ensemble),
            mean_edge_count,
            degree_histogram,
            outside_hull,
        });
        phi = [end[0] + tp * slope[0], end[1] + tp * slope[1]];
    }
    Ok(CpiTrajectory {
        config: cfg.clone(),
        steps,
        total_iterations,
    })
}

/// Replica-averaged direct simulation sampled every `sample_every`
/// timesteps (including time 0), for comparison with CPI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineRun {
    pub times: Vec<u64>,
    pub phi: Vec<[f64; 2]>,
    pub mean_edge_count: Vec<f64>,
    pub degree_histograms: Vec<Vec<f64>>,
    pub total_iterations: u64,
}

/// Direct simulation of `replicas` copies of `g0` for `horizon` timesteps.
/// Replica `q` uses stream `(FINE_RUN, q, 0, 0)` of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn fine_run(
    g0: &Graph,
    horizon: u64,
    sample_every: u64,
    steps_per_timestep: u64,
    r_remove: f64,
    replicas: usize,
    seed: u64,
    reference: &ReferenceDataset,
) -> Result<FineRun> {
    if sample_every == 0 || replicas == 0 {
        return Err(Error::param("sample_every/replicas", "must be positive"));
    }
    let samples = (horizon / sample_every) as usize + 1;
    let per_replica: Vec<Vec<Graph>> = (0..replicas)
        .into_par_iter()
        .map(|q| {
            let mut rng = stream(seed, StreamId::new(tags::FINE_RUN, q as u32, 0, 0));
            let mut state = EvolvingGraph::new(g0.clone());
            let mut snaps = vec![state.graph().clone()];
            for _ in 1..samples {
                state.run(sample_every * steps_per_timestep, r_remove, &mut rng);
                snaps.push(state.graph().clone());
            }
            snaps
        })
        .collect();
    let n = g0.n();
    let r = replicas as f64;
    let mut out = FineRun {
        times: (0..samples as u64).map(|s| s * sample_every).collect(),
        phi: Vec::with_capacity(samples),
        mean_edge_count: Vec::with_capacity(samples),
        degree_histograms: Vec::with_capacity(samples),
        total_iterations: (samples as u64 - 1) * sample_every * steps_per_timestep * replicas as u64,
    };
    for s in 0..samples {
        let graphs: Vec<&Graph> = per_replica.iter().map(|snaps| &snaps[s]).collect();
        let coords: Vec<[f64; 2]> = graphs
            .par_iter()
            .map(|g| reference.coarse_of(g))
            .collect::<Result<_>>()?;
        out.phi.push(
            coords
                .iter()
                .fold([0.0, 0.0], |a, c| [a[0] + c[0] / r, a[1] + c[1] / r]),
        );
        out.mean_edge_count
            .push(graphs.iter().map(|g| g.m() as f64).sum::<f64>() / r);
        let mut hist = vec![0.0; n];
        for g in &graphs {
            for (h, x) in hist.iter_mut().zip(degree_histogram(g).normalized()) {
                *h += x / r;
            }
        }
        out.degree_histograms.push(hist);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Mutex;

    use super::*;
    use crate::dynamics::er_trajectory_ensemble;
    use crate::ef::lifting::LiftedMember;
    use crate::ef::reference::build_reference;
    use crate::generators::generate_er;
    use crate::metric::Metric;

    #[derive(Debug, Clone, Copy, PartialEq)]
    enum Call {
        Lift,
        Simulate,
        Restrict,
    }

    struct Recording {
        calls: Mutex<Vec<Call>>,
    }

    impl CoarseOperators for Recording {
        fn lift(&self, phi: [f64; 2]) -> Result<LiftedEnsemble> {
            self.calls.lock().unwrap().push(Call::Lift);
            let members = (0..3)
                .map(|i| LiftedMember {
                    index: i,
                    id: format!("g{i}"),
                    coef: 1.0 / 3.0,
                    graph: Graph::empty(5),
                })
                .collect();
            Ok(LiftedEnsemble {
                target: phi,
                members,
                rank: 2,
                residual: 0.0,
            })
        }

        fn simulate(&self, g: &Graph, iterations: u64, _rng: &mut Rng) -> Graph {
            self.calls.lock().unwrap().push(Call::Simulate);
            let mut out = g.clone();
            for k in 0..iterations as usize {
                out.insert(0, 1 + k % 4);
            }
            out
        }

        fn restrict(&self, weighted: &[(f64, &Graph)]) -> Result<[f64; 2]> {
            self.calls.lock().unwrap().push(Call::Restrict);
            let m: f64 = weighted.iter().map(|(c, g)| c * g.m() as f64).sum();
            Ok([m, -m])
        }
    }

    #[test]
    fn burst_composes_lift_simulate_restrict() {
        let ops = Recording {
            calls: Mutex::new(Vec::new()),
        };
        let out = coarse_burst(&ops, [0.5, 0.5], 2, 2, 0, 0).unwrap();
        let calls = ops.calls.into_inner().unwrap();
        let mut want = vec![Call::Lift, Call::Restrict];
        for _ in 0..2 {
            want.extend([Call::Simulate; 3]);
            want.push(Call::Restrict);
        }
        assert_eq!(calls, want);
        assert_eq!(out.start, [0.0, 0.0]);
        assert_eq!(out.ends, vec![[2.0, -2.0]; 2]);
    }

    fn small_reference() -> ReferenceDataset {
        let recs = er_trajectory_ensemble(12, (0.0, 1.0), 6, 60, 10, 0.1, 11).unwrap();
        build_reference(recs, &Metric::Subgraph, None, 5, (2, 3)).unwrap()
    }

    #[test]
    fn zero_projection_is_plain_simulate_and_restrict() {
        let reference = small_reference();
        let g0 = generate_er(12, 0.2, 3).unwrap();
        let cfg = CpiConfig {
            t_burst: 2,
            t_project: 0,
            steps_per_timestep: 3,
            k_runs: 1,
            neighbors: 5,
            coarse_steps: 3,
            r_remove: 0.1,
            seed: 9,
        };
        let traj = cpi_run(&g0, &cfg, &reference).unwrap();
        assert_eq!(traj.steps.len(), 4);

        let mut phi = reference.coarse_of(&g0).unwrap();
        for j in 0..3 {
            let ens = lift(phi, &reference, 5).unwrap();
            let evolved: Vec<Graph> = ens
                .members
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let mut rng = stream(9, StreamId::new(tags::CPI_BURST, j as u32, 0, i as u16));
                    let mut s = EvolvingGraph::new(m.graph.clone());
                    s.run(6, 0.1, &mut rng);
                    s.into_graph()
                })
                .collect();
            let weighted: Vec<(f64, &Graph)> = ens.members.iter().map(|m| m.coef).zip(&evolved).collect();
            phi = restrict(&weighted, &reference).unwrap();
            assert_eq!(traj.steps[j].phi_burst_end, Some(phi));
            assert_eq!(traj.steps[j].time, 2 * j as u64);
        }
        assert_eq!(traj.final_step().ensemble.ids, {
            let ens = lift(phi, &reference, 5).unwrap();
            ens.members.iter().map(|m| m.id.clone()).collect::<Vec<_>>()
        });
        assert_eq!(traj.total_iterations, 3 * 6 * 5);
    }

    #[test]
    fn first_row_is_restricted_initial_lift() {
        let reference = small_reference();
        let g0 = generate_er(12, 0.3, 4).unwrap();
        let cfg = CpiConfig {
            neighbors: 6,
            coarse_steps: 1,
            k_runs: 2,
            ..CpiConfig::default()
        };
        let traj = cpi_run(&g0, &cfg, &reference).unwrap();
        let phi0 = reference.coarse_of(&g0).unwrap();
        let ens = lift(phi0, &reference, 6).unwrap();
        let back = restrict(&ens.weighted(), &reference).unwrap();
        assert_eq!(traj.steps[0].phi, back);
        let range = reference.coord_range();
        for k in 0..2 {
            assert!((back[k] - phi0[k]).abs() <= 0.05 * range[k] + 1e-12);
        }
        // budget is half the covered horizon when t_B = t_P
        assert_eq!(traj.final_step().fine_budget * 2, traj.horizon() * cfg.steps_per_timestep);
    }

    #[test]
    fn config_validation() {
        assert!(CpiConfig::default().validate().is_ok());
        for bad in [
            CpiConfig { t_burst: 0, ..CpiConfig::default() },
            CpiConfig { k_runs: 0, ..CpiConfig::default() },
            CpiConfig { neighbors: 2, ..CpiConfig::default() },
            CpiConfig { r_remove: 1.5, ..CpiConfig::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
