use std::collections::HashMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use netdmap::census::{census, census_matrix_fast, MotifId};
use netdmap::dataset::{common_n, write_dataset};
use netdmap::dmap::{
    diagnostics, fit_dmap, gaussian_kernel, harmonic_r2, median_epsilon, nystrom_features, DiffusionMapModel,
    DistanceMatrix, EpsilonRule,
};
use netdmap::ef::{cpi_run, fine_run, jacobian_field, CpiConfig, ReferenceDataset};
use netdmap::generators::{generate_chung_lu_with, generate_er_with};
use netdmap::rng::{stream, tags, StreamId};
use netdmap::spectral::{s_values, spectral_coarse};
use netdmap::{
    er_trajectory_ensemble, fit_pca, generate_er, project, total_variation, GraphRecord, HistogramMatrix, LambdaGrid,
    Metric,
};

use crate::args::*;
use crate::io::{num, read_table, GraphsInput, StageOutput, GRAPHS};
use crate::manifest::{self, refusal, Manifest};

const FEATURES: &str = "features.csv";
const KERNEL: &str = "kernel.json";
const MODEL: &str = "model.json";
const SCORES: &str = "scores.csv";

pub fn execute(cmd: &Command) -> Result<Manifest> {
    match cmd {
        Command::Generate(a) => generate(cmd, a),
        Command::Census(a) => census_stage(cmd, a),
        Command::Spectral(a) => spectral_stage(cmd, a),
        Command::Kernel(a) => kernel(cmd, a),
        Command::Dmap(a) => dmap(cmd, a),
        Command::Nystrom(a) => nystrom(cmd, a),
        Command::Pca(a) => pca(cmd, a),
        Command::Jacobian(a) => jacobian(cmd, a),
        Command::Cpi(a) => cpi(cmd, a),
        Command::Rerun(a) => rerun(a),
    }
}

fn lineage(stage: &str, metric: Option<&Metric>, dataset: Option<&str>) -> Value {
    json!({ "stage": stage, "metric": metric, "dataset": dataset })
}

fn lineage_of(m: &Manifest) -> Value {
    lineage(&m.stage, m.metric.as_ref(), m.dataset.as_deref())
}

fn check_metric(upstream: &Manifest, requested: Option<MetricArg>, stage: &str) -> Result<Metric> {
    let metric = upstream
        .metric
        .clone()
        .with_context(|| format!("the `{}` stage records no metric", upstream.stage))?;
    if let Some(want) = requested {
        if want.tag() != metric.tag() {
            return Err(refusal(
                &format!(
                    "refusing: input was built with the {} metric but --metric {} was requested",
                    metric.tag(),
                    want.tag()
                ),
                ("input manifest", &lineage_of(upstream)),
                (
                    "this stage",
                    &lineage(stage, Some(&json_metric(want)), upstream.dataset.as_deref()),
                ),
            ));
        }
    }
    Ok(metric)
}

// Only the tag matters in the refusal diff; the grid of a spectral request
// is unknown at this point.
fn json_metric(m: MetricArg) -> Metric {
    match m {
        MetricArg::Subgraph => Metric::Subgraph,
        MetricArg::Spectral => Metric::Spectral {
            grid: LambdaGrid::new(vec![0.0]).expect("single-point grid"),
        },
    }
}

fn check_dataset(model: &Manifest, graphs: &GraphsInput, what: &str) -> Result<()> {
    if model.dataset.as_deref() != Some(graphs.sha256()) {
        return Err(refusal(
            &format!("refusing: {what} is not the dataset the model was fitted to"),
            ("model manifest", &lineage_of(model)),
            (
                &graphs.digest.path.display().to_string(),
                &lineage("graphs", model.metric.as_ref(), Some(graphs.sha256())),
            ),
        ));
    }
    Ok(())
}

fn interval(name: &str, lo: f64, hi: f64, min: f64, max: f64) -> Result<()> {
    ensure!(
        min <= lo && lo <= hi && hi <= max,
        "{name} interval [{lo}, {hi}] must lie within [{min}, {max}] with min <= max"
    );
    Ok(())
}

fn record(id: String, graph: netdmap::Graph, params: Vec<(&str, f64)>, seed: u64) -> GraphRecord {
    GraphRecord {
        id,
        graph,
        params: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        seed,
    }
}

fn generate(cmd: &Command, a: &GenerateArgs) -> Result<Manifest> {
    ensure!(a.count >= 1 && a.count < 1 << 20, "--count must be in 1..2^20");
    ensure!(a.n >= 1, "--n must be positive");
    interval("p", a.p_min, a.p_max, 0.0, 1.0)?;
    let draw = |i: usize| stream(a.seed, StreamId::new(tags::DATASET, i as u32, 0, 0));
    let records: Vec<GraphRecord> = match a.kind {
        GraphKind::Er => (0..a.count)
            .into_par_iter()
            .map(|i| {
                let mut rng = draw(i);
                let p = a.p_min + (a.p_max - a.p_min) * rng.random::<f64>();
                let g = generate_er_with(a.n, p, &mut rng)?;
                Ok(record(format!("er{i:05}"), g, vec![("p", p)], a.seed))
            })
            .collect::<Result<_>>()?,
        GraphKind::ChungLu => {
            ensure!(a.p_min > 0.0, "Chung–Lu needs --p-min > 0");
            interval("r", a.r_min, a.r_max, 0.0, f64::MAX)?;
            (0..a.count)
                .into_par_iter()
                .map(|i| {
                    let mut rng = draw(i);
                    let p = a.p_min + (a.p_max - a.p_min) * rng.random::<f64>();
                    let r = a.r_min + (a.r_max - a.r_min) * rng.random::<f64>();
                    let g = generate_chung_lu_with(a.n, p, r, &mut rng)?;
                    Ok(record(format!("cl{i:05}"), g, vec![("p", p), ("r", r)], a.seed))
                })
                .collect::<Result<_>>()?
        }
        GraphKind::Evolve => {
            er_trajectory_ensemble(a.n, (a.p_min, a.p_max), a.count, a.steps, a.snapshot_every, a.r_remove, a.seed)?
        }
    };
    let mut out = StageOutput::create(&a.output)?;
    let path = out.path(GRAPHS);
    write_dataset(&records, &path)?;
    let sha = manifest::sha256_file(&path)?;
    out.finish(cmd, None, Some(sha), Vec::new())
}

fn features_csv(out: &mut StageOutput, header: Vec<String>, ids: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let header: Vec<String> = std::iter::once("id".to_string()).chain(header).collect();
    out.csv(
        FEATURES,
        &header,
        ids.iter()
            .zip(rows)
            .map(|(id, r)| std::iter::once(id.clone()).chain(r.iter().map(|&x| num(x))).collect()),
    )
}

fn census_stage(cmd: &Command, a: &CensusArgs) -> Result<Manifest> {
    let graphs = GraphsInput::open("graphs", &a.input)?;
    let rows: Vec<Vec<f64>> = graphs
        .records
        .par_iter()
        .map(|r| {
            let d = if a.exact { census(&r.graph) } else { census_matrix_fast(&r.graph) }
                .with_context(|| format!("census of {}", r.id))?;
            Ok(d.rho.to_vec())
        })
        .collect::<Result<_>>()?;
    let ids: Vec<String> = graphs.records.iter().map(|r| r.id.clone()).collect();
    let mut out = StageOutput::create(&a.output)?;
    features_csv(&mut out, MotifId::ALL.iter().map(|m| m.name().to_string()).collect(), &ids, &rows)?;
    let dataset = Some(graphs.sha256().to_string());
    out.finish(cmd, Some(Metric::Subgraph), dataset, vec![graphs.digest])
}

fn spectral_stage(cmd: &Command, a: &SpectralArgs) -> Result<Manifest> {
    let graphs = GraphsInput::open("graphs", &a.input)?;
    let n = common_n(&graphs.records.iter().map(|r| &r.graph).collect::<Vec<_>>())?;
    let grid = match (a.lambda_min, a.lambda_max) {
        (Some(lo), Some(hi)) => LambdaGrid::linspace(lo, hi, a.lambda_count)?,
        _ => LambdaGrid::default_for(n, a.lambda_count)?,
    };
    let rows: Vec<Vec<f64>> = graphs
        .records
        .par_iter()
        .map(|r| {
            let coarse = spectral_coarse(&r.graph)?;
            s_values(&coarse, &grid).with_context(|| format!("S(λ) of {}", r.id))
        })
        .collect::<Result<_>>()?;
    let ids: Vec<String> = graphs.records.iter().map(|r| r.id.clone()).collect();
    let mut out = StageOutput::create(&a.output)?;
    features_csv(&mut out, grid.values().iter().map(|l| format!("lambda={l}")).collect(), &ids, &rows)?;
    let dataset = Some(graphs.sha256().to_string());
    out.finish(cmd, Some(Metric::Spectral { grid }), dataset, vec![graphs.digest])
}

#[derive(Debug, Serialize, Deserialize)]
struct KernelFile {
    metric: Metric,
    epsilon: f64,
    epsilon_rule: EpsilonRule,
    ids: Vec<String>,
    features: Vec<Vec<f64>>,
}

fn matrix_csv(out: &mut StageOutput, name: &str, ids: &[String], m: &nalgebra::DMatrix<f64>) -> Result<()> {
    let header: Vec<String> = std::iter::once("id".to_string()).chain(ids.iter().cloned()).collect();
    out.csv(
        name,
        &header,
        ids.iter()
            .enumerate()
            .map(|(i, id)| std::iter::once(id.clone()).chain(m.row(i).iter().map(|&x| num(x))).collect()),
    )
}

fn kernel(cmd: &Command, a: &KernelArgs) -> Result<Manifest> {
    let up = Manifest::load_stage(&a.input, &["census", "spectral"])?;
    let metric = check_metric(&up, a.metric, "kernel")?;
    let path = a.input.join(FEATURES);
    let (_, ids, features) = read_table(&path)?;
    let dist = DistanceMatrix::from_features(ids.clone(), &features, metric.clone());
    let (epsilon, epsilon_rule) = match a.epsilon {
        Some(e) => (e, EpsilonRule::Fixed),
        None => (median_epsilon(&dist)?, EpsilonRule::Median),
    };
    let w = gaussian_kernel(&dist, epsilon)?;
    let mut out = StageOutput::create(&a.output)?;
    matrix_csv(&mut out, "distances.csv", &ids, &dist.values)?;
    matrix_csv(&mut out, "kernel.csv", &ids, &w)?;
    out.json(
        KERNEL,
        &KernelFile {
            metric: metric.clone(),
            epsilon,
            epsilon_rule,
            ids,
            features,
        },
    )?;
    let inputs = vec![manifest::input("features", &path)?];
    out.finish(cmd, Some(metric), up.dataset.clone(), inputs)
}

fn dmap(cmd: &Command, a: &DmapArgs) -> Result<Manifest> {
    let up = Manifest::load_stage(&a.input, &["kernel"])?;
    let metric = check_metric(&up, a.metric, "dmap")?;
    let path = a.input.join(KERNEL);
    let kf: KernelFile = serde_json::from_str(&fs::read_to_string(&path)?)?;
    let eps = match kf.epsilon_rule {
        EpsilonRule::Median => None,
        EpsilonRule::Fixed => Some(kf.epsilon),
    };
    let model = fit_dmap(kf.ids, kf.features, metric.clone(), eps, a.k_eigs)?;
    ensure!(model.epsilon == kf.epsilon, "kernel scale changed on refit");
    let diag = diagnostics(&model)?;

    let mut out = StageOutput::create(&a.output)?;
    out.csv(
        "eigenvalues.csv",
        &["component".into(), "eigenvalue".into()],
        model.eigenvalues.iter().enumerate().map(|(j, l)| vec![(j + 1).to_string(), num(*l)]),
    )?;
    let header: Vec<String> = std::iter::once("id".to_string())
        .chain((1..=model.k()).map(|c| format!("phi{c}")))
        .collect();
    out.csv(
        "coords.csv",
        &header,
        model
            .ids
            .iter()
            .zip(&model.coords)
            .map(|(id, row)| std::iter::once(id.clone()).chain(row.iter().map(|&x| num(x))).collect()),
    )?;
    out.csv(
        "harmonics.csv",
        &["component".into(), "r2_on_phi2".into()],
        harmonic_r2(&model, a.harmonic_degree)
            .into_iter()
            .map(|(c, r)| vec![c.to_string(), num(r)]),
    )?;
    out.json("diagnostics.json", &diag)?;
    out.json(MODEL, &model)?;
    let inputs = vec![manifest::input("kernel", &path)?];
    out.finish(cmd, Some(metric), up.dataset.clone(), inputs)
}

fn load_model(dir: &Path) -> Result<(Manifest, DiffusionMapModel)> {
    let m = Manifest::load_stage(dir, &["dmap"])?;
    let model = serde_json::from_str(&fs::read_to_string(dir.join(MODEL))?)
        .with_context(|| format!("parsing {}", dir.join(MODEL).display()))?;
    Ok((m, model))
}

fn nystrom(cmd: &Command, a: &NystromArgs) -> Result<Manifest> {
    let (mm, model) = load_model(&a.model)?;
    let metric = check_metric(&mm, a.metric, "nystrom")?;
    let components = if a.components.is_empty() {
        (2..=model.k()).collect()
    } else {
        a.components.clone()
    };
    ensure!(
        components.iter().all(|&c| (1..=model.k()).contains(&c)),
        "--components must lie in 1..={}",
        model.k()
    );
    let graphs = GraphsInput::open("graphs", &a.input)?;
    let rows: Vec<Vec<f64>> = graphs
        .records
        .par_iter()
        .map(|r| {
            let f = metric.features(&r.graph)?;
            nystrom_features(&model, &f, &components).with_context(|| format!("extending {}", r.id))
        })
        .collect::<Result<_>>()?;
    let mut out = StageOutput::create(&a.output)?;
    let header: Vec<String> = std::iter::once("id".to_string())
        .chain(components.iter().map(|c| format!("phi{c}")))
        .collect();
    out.csv(
        "coords.csv",
        &header,
        graphs
            .records
            .iter()
            .zip(&rows)
            .map(|(r, row)| std::iter::once(r.id.clone()).chain(row.iter().map(|&x| num(x))).collect()),
    )?;
    let inputs = vec![manifest::input("model", &a.model.join(MODEL))?, graphs.digest];
    out.finish(cmd, Some(metric), mm.dataset.clone(), inputs)
}

fn pca(cmd: &Command, a: &PcaArgs) -> Result<Manifest> {
    let graphs = GraphsInput::open("graphs", &a.input)?;
    common_n(&graphs.records.iter().map(|r| &r.graph).collect::<Vec<_>>())?;
    let h = HistogramMatrix::from_graphs(graphs.records.iter().map(|r| &r.graph))?;
    let model = fit_pca(&h, a.k, !a.uncentered)?;
    let mut out = StageOutput::create(&a.output)?;
    let header: Vec<String> = std::iter::once("id".to_string())
        .chain((1..=a.k).map(|c| format!("pc{c}")))
        .collect();
    let mut rows = Vec::with_capacity(h.s());
    for (i, r) in graphs.records.iter().enumerate() {
        let p = project(&model, &h.row(i))?;
        rows.push(std::iter::once(r.id.clone()).chain(p.iter().map(|&x| num(x))).collect());
    }
    out.csv(SCORES, &header, rows)?;
    let header: Vec<String> = std::iter::once("component".to_string())
        .chain((0..h.n()).map(|d| format!("degree{d}")))
        .collect();
    out.csv(
        "components.csv",
        &header,
        model
            .components
            .iter()
            .enumerate()
            .map(|(c, v)| std::iter::once((c + 1).to_string()).chain(v.iter().map(|&x| num(x))).collect()),
    )?;
    out.json("pca.json", &model)?;
    let dataset = Some(graphs.sha256().to_string());
    out.finish(cmd, None, dataset, vec![graphs.digest])
}

fn pair_of(pair: &[usize], model: &DiffusionMapModel) -> Result<(usize, usize)> {
    ensure!(pair.len() == 2, "--pair takes two eigenvector numbers");
    let (p, q) = (pair[0], pair[1]);
    ensure!(
        p != q && (2..=model.k()).contains(&p) && (2..=model.k()).contains(&q),
        "--pair must name two distinct eigenvectors in 2..={}",
        model.k()
    );
    Ok((p, q))
}

fn jacobian(cmd: &Command, a: &JacobianArgs) -> Result<Manifest> {
    let (mm, model) = load_model(&a.model)?;
    let (pa, pb) = pair_of(&a.pair, &model)?;
    let graphs = GraphsInput::open("graphs", &a.input)?;
    check_dataset(&mm, &graphs, "--in")?;
    let mut inputs = vec![manifest::input("model", &a.model.join(MODEL))?];
    let (names, by_id): (Vec<String>, HashMap<String, [f64; 2]>) = match &a.pca {
        Some(dir) => {
            let pm = Manifest::load_stage(dir, &["pca"])?;
            if pm.dataset != mm.dataset {
                return Err(refusal(
                    "refusing: the PCA was computed on a different dataset than the model",
                    ("model manifest", &lineage_of(&mm)),
                    ("pca manifest", &lineage_of(&pm)),
                ));
            }
            let (header, ids, rows) = read_table(&dir.join(SCORES))?;
            ensure!(header.len() >= 2, "PCA needs at least two components");
            inputs.push(manifest::input("pca", &dir.join(SCORES))?);
            let map = ids.into_iter().zip(rows).map(|(id, r)| (id, [r[0], r[1]])).collect();
            (header[..2].to_vec(), map)
        }
        None => {
            ensure!(a.params.len() == 2, "pass --params a,b or --pca DIR");
            let mut map = HashMap::new();
            for r in &graphs.records {
                let t = [0, 1].map(|k| r.param(&a.params[k]));
                match t {
                    [Some(x), Some(y)] => map.insert(r.id.clone(), [x, y]),
                    _ => bail!("graph {} lacks parameter {:?} or {:?}", r.id, a.params[0], a.params[1]),
                };
            }
            (a.params.clone(), map)
        }
    };
    inputs.push(graphs.digest.clone());
    let targets: Vec<[f64; 2]> = model
        .ids
        .iter()
        .map(|id| by_id.get(id).copied().with_context(|| format!("no target for {id}")))
        .collect::<Result<_>>()?;
    let coords: Vec<[f64; 2]> = (0..model.m()).map(|i| [model.coord(i, pa), model.coord(i, pb)]).collect();
    let field = jacobian_field(&coords, &targets, a.k_nn)?;

    let mut out = StageOutput::create(&a.output)?;
    let (ta, tb) = (&names[0], &names[1]);
    let header: Vec<String> = [
        "id".to_string(),
        format!("phi{pa}"),
        format!("phi{pb}"),
        ta.clone(),
        tb.clone(),
        format!("d_{ta}_d_phi{pa}"),
        format!("d_{ta}_d_phi{pb}"),
        format!("d_{tb}_d_phi{pa}"),
        format!("d_{tb}_d_phi{pb}"),
        "det".into(),
        "neighborhood".into(),
        "flagged".into(),
    ]
    .into();
    out.csv(
        "jacobian.csv",
        &header,
        field.estimates.iter().enumerate().map(|(i, e)| {
            vec![
                model.ids[i].clone(),
                num(coords[i][0]),
                num(coords[i][1]),
                num(targets[i][0]),
                num(targets[i][1]),
                num(e.slopes[0][0]),
                num(e.slopes[0][1]),
                num(e.slopes[1][0]),
                num(e.slopes[1][1]),
                num(e.det),
                e.neighborhood.to_string(),
                e.flagged.to_string(),
            ]
        }),
    )?;
    out.json(
        "summary.json",
        &json!({
            "pair": [pa, pb],
            "targets": names,
            "k_nn": a.k_nn,
            "points": field.estimates.len(),
            "flagged": field.flagged_count(),
            "sign_consistency": field.sign_consistency(),
        }),
    )?;
    out.finish(cmd, Some(model.metric.clone()), mm.dataset.clone(), inputs)
}

fn histogram_rows<'a>(rows: impl Iterator<Item = (String, &'a Vec<f64>)>) -> Vec<Vec<String>> {
    rows.map(|(k, h)| std::iter::once(k).chain(h.iter().map(|&x| num(x))).collect())
        .collect()
}

fn cpi(cmd: &Command, a: &CpiArgs) -> Result<Manifest> {
    let (mm, model) = load_model(&a.model)?;
    let pair = pair_of(&a.pair, &model)?;
    let graphs = GraphsInput::open("reference", &a.input)?;
    check_dataset(&mm, &graphs, "--in")?;
    let model_digest = manifest::input("model", &a.model.join(MODEL))?;
    let metric = model.metric.clone();
    let reference = ReferenceDataset::from_parts(graphs.records.clone(), model, pair)?;
    let n = reference.n();
    let g0 = generate_er(n, a.initial_p, a.initial_seed)?;
    let cfg = CpiConfig {
        t_burst: a.t_burst,
        t_project: a.t_project,
        steps_per_timestep: a.steps_per_timestep,
        k_runs: a.k_runs,
        neighbors: a.neighbors,
        coarse_steps: a.coarse_steps,
        r_remove: a.r_remove,
        seed: a.seed,
    };
    let traj = cpi_run(&g0, &cfg, &reference)?;

    let mut out = StageOutput::create(&a.output)?;
    let (pa, pb) = pair;
    let header: Vec<String> = [
        "coarse_step",
        "time",
        "fine_budget",
        &format!("phi{pa}"),
        &format!("phi{pb}"),
        &format!("phi{pa}_burst_end"),
        &format!("phi{pb}_burst_end"),
        &format!("slope{pa}"),
        &format!("slope{pb}"),
        "mean_edge_count",
        "coef_sum",
        "rank",
        "residual",
        "outside_hull",
        "histogram",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let opt = |v: Option<[f64; 2]>, k: usize| v.map_or(String::new(), |x| num(x[k]));
    out.csv(
        "trajectory.csv",
        &header,
        traj.steps.iter().map(|s| {
            vec![
                s.coarse_step.to_string(),
                s.time.to_string(),
                s.fine_budget.to_string(),
                num(s.phi[0]),
                num(s.phi[1]),
                opt(s.phi_burst_end, 0),
                opt(s.phi_burst_end, 1),
                opt(s.slope, 0),
                opt(s.slope, 1),
                num(s.mean_edge_count),
                num(s.ensemble.coef_sum),
                s.ensemble.rank.to_string(),
                num(s.ensemble.residual),
                s.outside_hull.to_string(),
                format!("histograms.csv#coarse_step={}", s.coarse_step),
            ]
        }),
    )?;
    let hist_header: Vec<String> = std::iter::once("coarse_step".to_string())
        .chain((0..n).map(|d| format!("degree{d}")))
        .collect();
    out.csv(
        "histograms.csv",
        &hist_header,
        histogram_rows(traj.steps.iter().map(|s| (s.coarse_step.to_string(), &s.degree_histogram))),
    )?;
    out.json("trajectory.json", &traj)?;

    if a.fine_replicas > 0 {
        let fine = fine_run(
            &g0,
            traj.horizon(),
            cfg.coarse_dt().max(1),
            cfg.steps_per_timestep,
            cfg.r_remove,
            a.fine_replicas,
            cfg.seed,
            &reference,
        )?;
        out.csv(
            "fine.csv",
            &[
                "time".to_string(),
                format!("phi{pa}"),
                format!("phi{pb}"),
                "mean_edge_count".into(),
            ],
            fine.times.iter().enumerate().map(|(j, t)| {
                vec![t.to_string(), num(fine.phi[j][0]), num(fine.phi[j][1]), num(fine.mean_edge_count[j])]
            }),
        )?;
        let mut fh = hist_header.clone();
        fh[0] = "time".into();
        out.csv(
            "fine_histograms.csv",
            &fh,
            histogram_rows(fine.times.iter().map(|t| t.to_string()).zip(&fine.degree_histograms)),
        )?;
        let range = reference.coord_range();
        let phi_error = traj
            .steps
            .iter()
            .zip(&fine.phi)
            .flat_map(|(s, f)| (0..2).map(move |k| (s.phi[k] - f[k]).abs() / range[k]))
            .fold(0.0, f64::max);
        out.json(
            "comparison.json",
            &json!({
                "budget_fraction": traj.final_step().fine_budget as f64
                    / (traj.horizon() * cfg.steps_per_timestep).max(1) as f64,
                "final_total_variation": total_variation(
                    &traj.final_step().degree_histogram,
                    fine.degree_histograms.last().expect("time 0 sample"),
                ),
                "max_phi_error_over_range": phi_error,
                "coarse_ensemble_iterations": traj.total_iterations,
                "fine_iterations": fine.total_iterations,
            }),
        )?;
    }
    let dataset = Some(graphs.sha256().to_string());
    out.finish(cmd, Some(metric), dataset, vec![model_digest, graphs.digest])
}

fn rerun(a: &RerunArgs) -> Result<Manifest> {
    let dir = if a.manifest.is_dir() {
        a.manifest.clone()
    } else {
        a.manifest.parent().map(Path::to_path_buf).unwrap_or_default()
    };
    let original = Manifest::read(&dir)?;
    let mut cmd: Command = serde_json::from_value(original.config.clone()).context("manifest config is not a command")?;
    ensure!(!matches!(cmd, Command::Rerun(_)), "cannot rerun a rerun");
    let mut now = Vec::new();
    for d in &original.inputs {
        now.push(manifest::input(&d.role, &d.path)?);
    }
    if now != original.inputs {
        return Err(refusal(
            "refusing: inputs changed since the manifest was written",
            ("recorded inputs", &serde_json::to_value(&original.inputs)?),
            ("current inputs", &serde_json::to_value(&now)?),
        ));
    }
    *cmd.output_mut() = a.output.clone();
    let fresh = execute(&cmd)?;
    if fresh.outputs != original.outputs {
        return Err(refusal(
            "rerun did not reproduce the recorded outputs",
            ("recorded outputs", &serde_json::to_value(&original.outputs)?),
            ("rerun outputs", &serde_json::to_value(&fresh.outputs)?),
        ));
    }
    Ok(fresh)
}
