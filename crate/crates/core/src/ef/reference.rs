use crate::dataset::GraphRecord;
use crate::dmap::{fit_dataset, nystrom_features, DiffusionMapModel};
use crate::ef::hull::ConvexHull;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::metric::Metric;

/// Reference graphs with their diffusion map; the substrate of lifting and
/// restriction. `records[i]` is the graph behind row `i` of the model.
#[derive(Debug, Clone)]
pub struct ReferenceDataset {
    pub records: Vec<GraphRecord>,
    pub model: DiffusionMapModel,
    /// 1-based eigenvector numbers of the two coarse coordinates.
    pub pair: (usize, usize),
    hull: ConvexHull,
}

/// Runs the diffusion-map pipeline over reference snapshots.
pub fn build_reference(
    snapshots: Vec<GraphRecord>,
    metric: &Metric,
    epsilon: Option<f64>,
    k: usize,
    pair: (usize, usize),
) -> Result<ReferenceDataset> {
    let model = fit_dataset(&snapshots, metric, epsilon, k)?;
    ReferenceDataset::from_parts(snapshots, model, pair)
}

impl ReferenceDataset {
    /// Pairs a dataset with a model fitted to it. Checks that ids match and
    /// that every stored feature vector is reproduced by the model's metric.
    pub fn from_parts(mut records: Vec<GraphRecord>, model: DiffusionMapModel, pair: (usize, usize)) -> Result<Self> {
        if records.len() != model.m() {
            return Err(Error::Dataset(format!(
                "{} records but the model has {} reference points",
                records.len(),
                model.m()
            )));
        }
        let (a, b) = pair;
        if a == b || a < 2 || b < 2 || a > model.k() || b > model.k() {
            return Err(Error::param(
                "pair",
                format!("({a}, {b}) must be two distinct non-trivial eigenvectors of 1..={}", model.k()),
            ));
        }
        records.sort_by(|x, y| x.id.cmp(&y.id));
        for (rec, id) in records.iter().zip(&model.ids) {
            if &rec.id != id {
                return Err(Error::Dataset(format!("record {:?} is not in the model", rec.id)));
            }
        }
        use rayon::prelude::*;
        records
            .par_iter()
            .zip(model.features.par_iter())
            .try_for_each(|(rec, stored)| {
                let f = model.metric.features(&rec.graph)?;
                let worst = f.iter().zip(stored).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                if f.len() != stored.len() || worst > 1e-12 {
                    return Err(Error::Dataset(format!(
                        "features of {:?} do not match the model's metric parameters",
                        rec.id
                    )));
                }
                Ok(())
            })?;
        let points: Vec<[f64; 2]> = (0..model.m())
            .map(|i| [model.coord(i, a), model.coord(i, b)])
            .collect();
        let hull = ConvexHull::new(&points);
        Ok(ReferenceDataset {
            records,
            model,
            pair,
            hull,
        })
    }

    pub fn m(&self) -> usize {
        self.records.len()
    }

    pub fn n(&self) -> usize {
        self.records[0].graph.n()
    }

    pub fn metric(&self) -> &Metric {
        &self.model.metric
    }

    /// Stored coarse coordinates of reference point `i`.
    pub fn coords(&self, i: usize) -> [f64; 2] {
        [self.model.coord(i, self.pair.0), self.model.coord(i, self.pair.1)]
    }

    pub fn all_coords(&self) -> Vec<[f64; 2]> {
        (0..self.m()).map(|i| self.coords(i)).collect()
    }

    /// Per-coordinate range (max - min) over the reference points.
    pub fn coord_range(&self) -> [f64; 2] {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for c in self.all_coords() {
            for k in 0..2 {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k]);
            }
        }
        [hi[0] - lo[0], hi[1] - lo[1]]
    }

    pub fn hull(&self) -> &ConvexHull {
        &self.hull
    }

    /// Nyström coarse coordinates of one graph.
    pub fn coarse_of(&self, g: &Graph) -> Result<[f64; 2]> {
        if g.n() != self.n() {
            return Err(Error::Dataset(format!(
                "graph has {} nodes, reference graphs have {}",
                g.n(),
                self.n()
            )));
        }
        let f = self.model.metric.features(g)?;
        let v = nystrom_features(&self.model, &f, &[self.pair.0, self.pair.1])?;
        Ok([v[0], v[1]])
    }
}
