//! The stochastic edge add/remove network evolution model.
//!
//! One rule iteration:
//! 1. draw an unordered pair of distinct nodes uniformly; connect it if it is
//!    not already an edge;
//! 2. with probability `r_remove`, delete one existing edge chosen uniformly
//!    (no-op on an edgeless graph). The edge added in step 1 is eligible.

use std::collections::BTreeMap;

use rand::Rng as _;

use crate::dataset::GraphRecord;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::generators::generate_er_with;
use crate::rng::{rng_from_seed, stream, tags, Rng, StreamId};

const NO_SLOT: u32 = u32::MAX;

/// Mutable state for running the evolution rules in O(1) per iteration:
/// the graph plus a dense edge list and each edge's position in it.
#[derive(Clone)]
pub struct EvolvingGraph {
    graph: Graph,
    edges: Vec<(u32, u32)>,
    slot: Vec<u32>,
}

impl EvolvingGraph {
    pub fn new(graph: Graph) -> Self {
        let n = graph.n();
        let mut slot = vec![NO_SLOT; n * n];
        let edges: Vec<(u32, u32)> = graph
            .edges()
            .into_iter()
            .map(|(u, v)| (u as u32, v as u32))
            .collect();
        for (k, &(u, v)) in edges.iter().enumerate() {
            slot[u as usize * n + v as usize] = k as u32;
        }
        EvolvingGraph { graph, edges, slot }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn into_graph(self) -> Graph {
        self.graph
    }

    fn add(&mut self, u: usize, v: usize) {
        let (u, v) = if u < v { (u, v) } else { (v, u) };
        let n = self.graph.n();
        self.slot[u * n + v] = self.edges.len() as u32;
        self.edges.push((u as u32, v as u32));
        self.graph.insert(u, v);
    }

    fn remove_at(&mut self, k: usize) {
        let n = self.graph.n();
        let (u, v) = self.edges.swap_remove(k);
        self.slot[u as usize * n + v as usize] = NO_SLOT;
        if let Some(&(a, b)) = self.edges.get(k) {
            self.slot[a as usize * n + b as usize] = k as u32;
        }
        self.graph.remove(u as usize, v as usize);
    }

    /// One rule iteration. Returns the change in edge count (-1, 0 or +1).
    pub fn step(&mut self, r_remove: f64, rng: &mut Rng) -> i32 {
        let n = self.graph.n() as u32;
        let mut delta = 0;
        if n >= 2 {
            let u = rng.random_range(0..n) as usize;
            let mut v = rng.random_range(0..n - 1) as usize;
            if v >= u {
                v += 1;
            }
            if !self.graph.has_edge(u, v) {
                self.add(u, v);
                delta += 1;
            }
        }
        if rng.random::<f64>() < r_remove && !self.edges.is_empty() {
            let k = rng.random_range(0..self.edges.len() as u32) as usize;
            self.remove_at(k);
            delta -= 1;
        }
        delta
    }

    pub fn run(&mut self, iterations: u64, r_remove: f64, rng: &mut Rng) {
        for _ in 0..iterations {
            self.step(r_remove, rng);
        }
    }
}

fn check_rate(r_remove: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r_remove) {
        Ok(())
    } else {
        Err(Error::param("r_remove", format!("{r_remove} is not a probability")))
    }
}

/// Applies one rule iteration to a copy of `g`.
pub fn evolve_step(g: &Graph, r_remove: f64, rng: &mut Rng) -> Result<Graph> {
    check_rate(r_remove)?;
    let mut state = EvolvingGraph::new(g.clone());
    state.step(r_remove, rng);
    Ok(state.into_graph())
}

/// Runs `steps` rule iterations from `g0` and snapshots every
/// `snapshot_every` iterations (including step 0). Record ids are
/// `s{step}`; params carry `step` and `r_remove`.
pub fn evolve_trajectory(
    g0: &Graph,
    steps: u64,
    snapshot_every: u64,
    r_remove: f64,
    seed: u64,
) -> Result<Vec<GraphRecord>> {
    evolve_trajectory_with(g0, steps, snapshot_every, r_remove, seed, &mut rng_from_seed(seed))
}

pub(crate) fn evolve_trajectory_with(
    g0: &Graph,
    steps: u64,
    snapshot_every: u64,
    r_remove: f64,
    seed: u64,
    rng: &mut Rng,
) -> Result<Vec<GraphRecord>> {
    check_rate(r_remove)?;
    if snapshot_every == 0 {
        return Err(Error::param("snapshot_every", "must be at least 1"));
    }
    let record = |g: &Graph, step: u64| GraphRecord {
        id: format!("s{step}"),
        graph: g.clone(),
        params: BTreeMap::from([("step".to_string(), step as f64), ("r_remove".to_string(), r_remove)]),
        seed,
    };
    let mut state = EvolvingGraph::new(g0.clone());
    let mut out = vec![record(state.graph(), 0)];
    let mut done = 0;
    while done + snapshot_every <= steps {
        state.run(snapshot_every, r_remove, rng);
        done += snapshot_every;
        out.push(record(state.graph(), done));
    }
    Ok(out)
}

/// Snapshots of `trajectories` independent runs, each started from an ER
/// graph with edge probability drawn uniformly from `p_range`. Trajectory `t`
/// draws from stream `(DATASET, t, 0, 0)` of `seed`. Ids are
/// `t{traj:03}-s{step:06}`; params add `p` and `trajectory`.
pub fn er_trajectory_ensemble(
    n: usize,
    p_range: (f64, f64),
    trajectories: usize,
    steps: u64,
    snapshot_every: u64,
    r_remove: f64,
    seed: u64,
) -> Result<Vec<GraphRecord>> {
    let (lo, hi) = p_range;
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(Error::param("p_range", format!("({lo}, {hi}) is not a sub-interval of [0, 1]")));
    }
    if trajectories >= 1 << 20 {
        return Err(Error::param("trajectories", "must be below 2^20"));
    }
    let mut out = Vec::new();
    for t in 0..trajectories {
        let mut rng = stream(seed, StreamId::new(tags::DATASET, t as u32, 0, 0));
        let p = lo + (hi - lo) * rng.random::<f64>();
        let g0 = generate_er_with(n, p, &mut rng)?;
        for mut rec in evolve_trajectory_with(&g0, steps, snapshot_every, r_remove, seed, &mut rng)? {
            let step = rec.params["step"] as u64;
            rec.id = format!("t{t:03}-s{step:06}");
            rec.params.insert("p".into(), p);
            rec.params.insert("trajectory".into(), t as f64);
            out.push(rec);
        }
    }
    Ok(out)
}
