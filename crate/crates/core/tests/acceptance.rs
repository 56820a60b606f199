//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::HashMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use netdmap::census::{census_counts, census_counts_fast};
use netdmap::dmap::{diagnostics, harmonic_r2, DmapDiagnostics};
use netdmap::ef::{cpi_run, fine_run, jacobian_field, lift, restrict, CpiConfig, ReferenceDataset};
use netdmap::stats::{polyfit_r2, spearman};
use netdmap::*;

struct Gate {
    failures: Vec<u32>,
}

impl Gate {
    fn report(&mut self, id: u32, pass: bool, what: &str, started: Instant) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id}: {what} [{:.1}s]", started.elapsed().as_secs_f64());
        if !pass {
            self.failures.push(id);
        }
    }
}

fn record(id: String, graph: Graph, params: &[(&str, f64)], seed: u64) -> GraphRecord {
    GraphRecord {
        id,
        graph,
        params: params.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
        seed,
    }
}

fn er_dataset() -> Vec<GraphRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..200)
        .map(|i| {
            let p: f64 = rng.random();
            let seed = 10_000 + i;
            record(format!("er{i:03}"), generate_er(100, p, seed).unwrap(), &[("p", p)], seed)
        })
        .collect()
}

fn chung_lu_dataset() -> Vec<GraphRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    (0..300)
        .map(|i| {
            let p = rng.random_range(0.5..1.0);
            let r = rng.random_range(0.0..0.5);
            let seed = 20_000 + i;
            record(
                format!("cl{i:03}"),
                generate_chung_lu(100, p, r, seed).unwrap(),
                &[("p", p), ("r", r)],
                seed,
            )
        })
        .collect()
}

fn params_in_model_order(model: &DiffusionMapModel, recs: &[GraphRecord], key: &str) -> Vec<f64> {
    let by_id: HashMap<&str, &GraphRecord> = recs.iter().map(|r| (r.id.as_str(), r)).collect();
    model.ids.iter().map(|id| by_id[id.as_str()].param(key).unwrap()).collect()
}

// ---- criterion 4 oracle: all-subsets enumeration with isomorphism classes
// decided by brute-force canonical labelling.

fn canonical(k: usize, adj: &[[bool; 4]; 4]) -> u32 {
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = u32::MAX;
    permute(&mut perm, 0, &mut |p| {
        let mut code = 0u32;
        for i in 0..k {
            for j in (i + 1)..k {
                code = code << 1 | adj[p[i]][p[j]] as u32;
            }
        }
        best = best.min(code);
    });
    best
}

fn permute(p: &mut Vec<usize>, at: usize, f: &mut impl FnMut(&[usize])) {
    if at == p.len() {
        f(p);
        return;
    }
    for i in at..p.len() {
        p.swap(at, i);
        permute(p, at + 1, f);
        p.swap(at, i);
    }
}

fn connected(k: usize, adj: &[[bool; 4]; 4]) -> bool {
    let mut seen = 1u32;
    let mut stack = vec![0];
    while let Some(u) = stack.pop() {
        for (v, &edge) in adj[u].iter().enumerate().take(k) {
            if edge && seen & (1 << v) == 0 {
                seen |= 1 << v;
                stack.push(v);
            }
        }
    }
    seen == (1 << k) - 1
}

fn template(m: MotifId) -> (usize, Vec<(usize, usize)>) {
    let e = match m {
        MotifId::Edge => vec![(0, 1)],
        MotifId::Path3 => vec![(0, 1), (1, 2)],
        MotifId::Triangle => vec![(0, 1), (1, 2), (0, 2)],
        MotifId::Path4 => vec![(0, 1), (1, 2), (2, 3)],
        MotifId::Star4 => vec![(0, 1), (0, 2), (0, 3)],
        MotifId::Cycle4 => vec![(0, 1), (1, 2), (2, 3), (3, 0)],
        MotifId::Paw => vec![(0, 1), (1, 2), (0, 2), (2, 3)],
        MotifId::Diamond => vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)],
        MotifId::K4 => vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
    };
    (m.k(), e)
}

fn brute_force_counts(g: &Graph) -> [u64; 9] {
    let mut classes: HashMap<(usize, u32), usize> = HashMap::new();
    for m in MotifId::ALL {
        let (k, edges) = template(m);
        let mut adj = [[false; 4]; 4];
        for (u, v) in edges {
            adj[u][v] = true;
            adj[v][u] = true;
        }
        classes.insert((k, canonical(k, &adj)), m.index());
    }
    let n = g.n();
    let mut counts = [0u64; 9];
    for mask in 0u32..(1 << n) {
        let k = mask.count_ones() as usize;
        if !(2..=4).contains(&k) {
            continue;
        }
        let nodes: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let mut adj = [[false; 4]; 4];
        for a in 0..k {
            for b in 0..k {
                adj[a][b] = a != b && g.has_edge(nodes[a], nodes[b]);
            }
        }
        if connected(k, &adj) {
            counts[classes[&(k, canonical(k, &adj))]] += 1;
        }
    }
    counts
}

fn diagnostics_ok(d: &DmapDiagnostics) -> bool {
    d.row_sum_error <= 1e-12
        && d.lambda1_error <= 1e-10
        && d.phi1_spread <= 1e-10
        && d.eigen_residual <= 1e-8
        && d.nystrom_error <= 1e-8
}

fn fmt_diag(name: &str, d: &DmapDiagnostics) -> String {
    format!(
        "{name}: rows {:.1e} λ1 {:.1e} φ1 {:.1e} eig {:.1e} nys {:.1e}",
        d.row_sum_error, d.lambda1_error, d.phi1_spread, d.eigen_residual, d.nystrom_error
    )
}

fn main() {
    let mut gate = Gate { failures: Vec::new() };
    let mut diags: Vec<(String, DmapDiagnostics)> = Vec::new();

    // 1 and 2: ER one-dimensionality and harmonics
    let started = Instant::now();
    let er = er_dataset();
    let spectral = Metric::Spectral {
        grid: LambdaGrid::default_for(100, 100).unwrap(),
    };
    let mut rho = Vec::new();
    let mut r2 = Vec::new();
    for metric in [Metric::Subgraph, spectral] {
        let model = fit_dataset(&er, &metric, None, 10).unwrap();
        let p = params_in_model_order(&model, &er, "p");
        rho.push((metric.tag(), spearman(&model.column(2), &p).abs()));
        r2.push((metric.tag(), polyfit_r2(&model.column(2), &model.column(3), 5)));
        diags.push((format!("er/{}", metric.tag()), diagnostics(&model).unwrap()));
    }
    gate.report(
        1,
        rho.iter().all(|&(_, r)| r >= 0.99),
        &format!("ER |spearman(φ2, p)| >= 0.99: {rho:.4?}"),
        started,
    );
    gate.report(
        2,
        r2.iter().all(|&(_, r)| r >= 0.90),
        &format!("ER degree-5 R²(φ3 ~ φ2) >= 0.90: {r2:.4?}"),
        started,
    );

    // 3: Chung–Lu Jacobian on the (φ2, φ3) pair
    let started = Instant::now();
    let cl = chung_lu_dataset();
    let model = fit_dataset(&cl, &Metric::Subgraph, None, 10).unwrap();
    let p = params_in_model_order(&model, &cl, "p");
    let r = params_in_model_order(&model, &cl, "r");
    let coords: Vec<[f64; 2]> = (0..model.m()).map(|i| [model.coord(i, 2), model.coord(i, 3)]).collect();
    let targets: Vec<[f64; 2]> = p.iter().zip(&r).map(|(&a, &b)| [a, b]).collect();
    let field = jacobian_field(&coords, &targets, 15).unwrap();
    let sign = field.sign_consistency().unwrap_or(0.0);
    let harmonics: Vec<String> = harmonic_r2(&model, 5)
        .iter()
        .take(3)
        .map(|(c, v)| format!("φ{c}:{v:.3}"))
        .collect();
    diags.push(("chung-lu/subgraph".into(), diagnostics(&model).unwrap()));
    gate.report(
        3,
        sign >= 0.95,
        &format!(
            "Chung–Lu det sign consistency {sign:.3} >= 0.95 ({} flagged of {}; harmonic R² {})",
            field.flagged_count(),
            model.m(),
            harmonics.join(" ")
        ),
        started,
    );

    // 4: census exactness
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut exact = true;
    let mut worst_fast: f64 = 0.0;
    for i in 0..100 {
        let n = rng.random_range(4..=12);
        let g = generate_er(n, rng.random(), 40_000 + i).unwrap();
        let esu = census_counts(&g).unwrap();
        exact &= esu.counts == brute_force_counts(&g);
        exact &= census_counts_fast(&g).unwrap().counts == esu.counts;
        let (a, b) = (census(&g).unwrap(), census_matrix_fast(&g).unwrap());
        for k in 0..9 {
            worst_fast = worst_fast.max((a.rho[k] - b.rho[k]).abs());
        }
    }
    gate.report(
        4,
        exact && worst_fast <= 1e-12,
        &format!("ESU == brute force on 100 graphs: {exact}; fast density gap {worst_fast:.1e}"),
        started,
    );

    // 5: spectral closed form, S(0), permutation invariance
    let started = Instant::now();
    let mut closed: f64 = 0.0;
    for n in [2usize, 10, 100] {
        let c = spectral_coarse(&Graph::complete(n)).unwrap();
        for &lam in LambdaGrid::default_for(n, 100).unwrap().values() {
            let want = (lam * (n - 1) as f64).exp() / n as f64;
            closed = closed.max((s_value(&c, lam).unwrap() - want).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut s0: f64 = 0.0;
    let mut perm_gap: f64 = 0.0;
    for i in 0..50 {
        let n = rng.random_range(5..=60);
        let g = generate_er(n, rng.random(), 50_000 + i).unwrap();
        s0 = s0.max((s_value(&spectral_coarse(&g).unwrap(), 0.0).unwrap() - 1.0 / n as f64).abs());
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let grid = LambdaGrid::default_for(n, 100).unwrap();
        let d = spectral_distance(
            &spectral_coarse(&g).unwrap(),
            &spectral_coarse(&g.permuted(&perm)).unwrap(),
            &grid,
        )
        .unwrap();
        perm_gap = perm_gap.max(d);
    }
    gate.report(
        5,
        closed <= 1e-10 && s0 <= 1e-12 && perm_gap <= 1e-10,
        &format!("K_n closed form {closed:.1e}, S(0) = 1/n {s0:.1e}, permutation {perm_gap:.1e}"),
        started,
    );

    // 6: diffusion-map contracts on the datasets of 1–3
    let started = Instant::now();
    let lines: Vec<String> = diags.iter().map(|(n, d)| fmt_diag(n, d)).collect();
    gate.report(
        6,
        diags.iter().all(|(_, d)| diagnostics_ok(d)),
        &format!("dmap contracts; {}", lines.join("; ")),
        started,
    );

    // 7: steady state of the add/remove rules
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut state = EvolvingGraph::new(Graph::empty(100));
    state.run(60_000, 0.1, &mut rng);
    let samples = 400_000u64;
    let mut total = 0u64;
    for _ in 0..samples {
        state.step(0.1, &mut rng);
        total += state.graph().m() as u64;
    }
    let mean = total as f64 / samples as f64;
    let rel = (mean - 4455.0).abs() / 4455.0;
    gate.report(
        7,
        rel <= 0.01,
        &format!("time-averaged edge count {mean:.1} vs 4455 (rel. error {rel:.4})"),
        started,
    );

    // 8: coarse projective integration against direct simulation
    let started = Instant::now();
    let snapshots = er_trajectory_ensemble(100, (0.0, 1.0), 24, 15_000, 750, 0.1, 8).unwrap();
    let model = fit_dataset(&snapshots, &Metric::Subgraph, Some(10.0), 10).unwrap();
    let reference = ReferenceDataset::from_parts(snapshots, model, (2, 3)).unwrap();
    let range = reference.coord_range();
    let base = CpiConfig {
        t_burst: 10,
        t_project: 10,
        steps_per_timestep: 10,
        k_runs: 4,
        neighbors: 10,
        coarse_steps: 50,
        r_remove: 0.1,
        seed: 0,
    };
    let mut budget: f64 = 0.0;
    let mut tvs = Vec::new();
    let mut phi_errs = Vec::new();
    let mut ensemble_ratio: f64 = 0.0;
    for seed in 0..5u64 {
        let g0 = generate_er(100, 0.05, 80_000 + seed).unwrap();
        let cfg = CpiConfig { seed, ..base.clone() };
        let traj = cpi_run(&g0, &cfg, &reference).unwrap();
        let horizon = traj.horizon();
        let fine = fine_run(&g0, horizon, cfg.coarse_dt(), cfg.steps_per_timestep, cfg.r_remove, 32, seed, &reference)
            .unwrap();
        budget = budget.max(traj.final_step().fine_budget as f64 / (horizon * cfg.steps_per_timestep) as f64);
        ensemble_ratio = ensemble_ratio.max(traj.total_iterations as f64 / fine.total_iterations as f64);
        tvs.push(total_variation(
            &traj.final_step().degree_histogram,
            fine.degree_histograms.last().unwrap(),
        ));
        let mut worst: f64 = 0.0;
        for (step, (t, phi)) in traj.steps.iter().zip(fine.times.iter().zip(&fine.phi)) {
            assert_eq!(step.time, *t);
            for k in 0..2 {
                worst = worst.max((step.phi[k] - phi[k]).abs() / range[k]);
            }
        }
        phi_errs.push(worst);
    }
    let mean_tv = tvs.iter().sum::<f64>() / tvs.len() as f64;
    let worst_phi = phi_errs.iter().fold(0.0f64, |a, &b| a.max(b));
    gate.report(
        8,
        budget <= 0.55 && mean_tv <= 0.10 && worst_phi <= 0.10,
        &format!(
            "CPI budget {budget:.2} <= 0.55; mean final TV {mean_tv:.3} <= 0.10; φ error {worst_phi:.3} <= 0.10 of range \
             (M = {}, ensemble iterations / 32-replica fine run = {ensemble_ratio:.2})",
            reference.m()
        ),
        started,
    );

    // 9: lifting/restriction round trip inside the reference hull
    let started = Instant::now();
    let pts = reference.all_coords();
    let lo = [0, 1].map(|k| pts.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut errs = Vec::new();
    let mut residual: f64 = 0.0;
    let mut rank_deficient = 0;
    while errs.len() < 100 {
        let phi0 = [0, 1].map(|k| lo[k] + range[k] * rng.random::<f64>());
        if !reference.hull().contains(phi0, 0.0) {
            continue;
        }
        let ens = lift(phi0, &reference, 10).unwrap();
        if ens.rank == 2 {
            residual = residual.max(ens.residual);
        } else {
            rank_deficient += 1;
        }
        let back = restrict(&ens.weighted(), &reference).unwrap();
        errs.push([0, 1].map(|k| (back[k] - phi0[k]).abs() / range[k]).into_iter().fold(0.0, f64::max));
    }
    errs.sort_by(f64::total_cmp);
    let p90 = errs[89];
    gate.report(
        9,
        p90 <= 0.05 && residual <= 1e-10,
        &format!(
            "round trip p90 {p90:.4} <= 0.05 of range; max lifting residual {residual:.1e} <= 1e-10 \
             ({rank_deficient} rank-deficient lifts)"
        ),
        started,
    );

    if gate.failures.is_empty() {
        println!("acceptance: all 9 criteria pass");
    } else {
        println!("acceptance: failed criteria {:?}", gate.failures);
        std::process::exit(1);
    }
}
