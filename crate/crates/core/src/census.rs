//! Induced-subgraph census over the nine connected graphs on 2–4 nodes.
//!
//! Counting is per vertex subset: a k-subset contributes one count to the
//! motif its induced subgraph is isomorphic to, and densities divide by
//! `C(n, k)`. Two independent routes produce the counts: [`census`] walks
//! every connected subset with ESU, and [`census_matrix_fast`] uses
//! closed-form subgraph identities plus inclusion–exclusion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BitIter, Graph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MotifId {
    Edge,
    Path3,
    Triangle,
    Path4,
    Star4,
    Cycle4,
    Paw,
    Diamond,
    K4,
}

impl MotifId {
    pub const ALL: [MotifId; 9] = [
        MotifId::Edge,
        MotifId::Path3,
        MotifId::Triangle,
        MotifId::Path4,
        MotifId::Star4,
        MotifId::Cycle4,
        MotifId::Paw,
        MotifId::Diamond,
        MotifId::K4,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            MotifId::Edge => "edge",
            MotifId::Path3 => "path3",
            MotifId::Triangle => "triangle",
            MotifId::Path4 => "path4",
            MotifId::Star4 => "star4",
            MotifId::Cycle4 => "cycle4",
            MotifId::Paw => "paw",
            MotifId::Diamond => "diamond",
            MotifId::K4 => "k4",
        }
    }

    /// Node count.
    pub fn k(self) -> usize {
        match self {
            MotifId::Edge => 2,
            MotifId::Path3 | MotifId::Triangle => 3,
            _ => 4,
        }
    }

    /// Sorted degree sequence of the motif.
    pub fn degrees(self) -> &'static [u8] {
        match self {
            MotifId::Edge => &[1, 1],
            MotifId::Path3 => &[1, 1, 2],
            MotifId::Triangle => &[2, 2, 2],
            MotifId::Path4 => &[1, 1, 2, 2],
            MotifId::Star4 => &[1, 1, 1, 3],
            MotifId::Cycle4 => &[2, 2, 2, 2],
            MotifId::Paw => &[1, 2, 2, 3],
            MotifId::Diamond => &[2, 2, 3, 3],
            MotifId::K4 => &[3, 3, 3, 3],
        }
    }

    /// Classifies a connected graph on 2–4 nodes by its sorted degree
    /// sequence. Returns `None` for anything else.
    pub fn classify(sorted_degrees: &[u8]) -> Option<MotifId> {
        MotifId::ALL
            .into_iter()
            .find(|m| m.degrees() == sorted_degrees)
    }
}

/// Raw induced-subset counts, indexed by [`MotifId`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotifCounts {
    pub n: usize,
    pub counts: [u64; 9],
}

impl MotifCounts {
    pub fn get(&self, m: MotifId) -> u64 {
        self.counts[m.index()]
    }

    pub fn densities(&self) -> DensityVector {
        let mut rho = [0.0; 9];
        for m in MotifId::ALL {
            rho[m.index()] = self.get(m) as f64 / binomial(self.n as u64, m.k() as u64) as f64;
        }
        DensityVector { rho }
    }
}

/// Motif densities in `MotifId::ALL` order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityVector {
    pub rho: [f64; 9],
}

impl DensityVector {
    pub fn get(&self, m: MotifId) -> f64 {
        self.rho[m.index()]
    }
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

fn check_size(g: &Graph) -> Result<()> {
    if g.n() < 4 {
        return Err(Error::Size { n: g.n(), min: 4 });
    }
    Ok(())
}

/// Census densities by ESU enumeration.
pub fn census(g: &Graph) -> Result<DensityVector> {
    Ok(census_counts(g)?.densities())
}

/// Raw per-motif subset counts by ESU enumeration of every connected
/// subset of size 2, 3 and 4.
pub fn census_counts(g: &Graph) -> Result<MotifCounts> {
    check_size(g)?;
    let mut esu = Esu::new(g);
    for v in 0..g.n() {
        esu.root(v);
    }
    Ok(MotifCounts {
        n: g.n(),
        counts: esu.counts,
    })
}

struct Esu<'a> {
    g: &'a Graph,
    words: usize,
    counts: [u64; 9],
    sub: [usize; 4],
}

impl<'a> Esu<'a> {
    fn new(g: &'a Graph) -> Self {
        Esu {
            g,
            words: g.words(),
            counts: [0; 9],
            sub: [0; 4],
        }
    }

    fn root(&mut self, v: usize) {
        let w = self.words;
        // ext: neighbors of v greater than v; closed: v plus its neighborhood.
        let mut ext = vec![0u64; w];
        let mut closed = self.g.row(v).to_vec();
        closed[v / 64] |= 1 << (v % 64);
        for (e, &r) in ext.iter_mut().zip(self.g.row(v)) {
            *e = r;
        }
        mask_above(&mut ext, v);
        self.sub[0] = v;
        self.extend(1, ext, &closed, v);
    }

    /// ESU extension step. `ext` is the extension set, `closed` the union of
    /// the current subset and its neighborhood.
    fn extend(&mut self, size: usize, mut ext: Vec<u64>, closed: &[u64], v: usize) {
        if size >= 2 {
            self.record(size);
        }
        if size == 4 {
            return;
        }
        while let Some(wn) = pop_lowest(&mut ext) {
            let row = self.g.row(wn);
            let mut next_ext = ext.clone();
            let mut next_closed = closed.to_vec();
            for i in 0..self.words {
                // exclusive neighbors of wn: not in the subset or its neighborhood
                next_ext[i] |= row[i] & !closed[i];
                next_closed[i] |= row[i];
            }
            mask_above(&mut next_ext, v);
            self.sub[size] = wn;
            self.extend(size + 1, next_ext, &next_closed, v);
        }
    }

    fn record(&mut self, size: usize) {
        let nodes = &self.sub[..size];
        let mut deg = [0u8; 4];
        for i in 0..size {
            for j in (i + 1)..size {
                if self.g.has_edge(nodes[i], nodes[j]) {
                    deg[i] += 1;
                    deg[j] += 1;
                }
            }
        }
        let deg = &mut deg[..size];
        deg.sort_unstable();
        let motif = MotifId::classify(deg).expect("ESU only yields connected subsets");
        self.counts[motif.index()] += 1;
    }
}

/// Clears bits `0..=v`.
fn mask_above(bits: &mut [u64], v: usize) {
    let word = v / 64;
    for b in bits.iter_mut().take(word) {
        *b = 0;
    }
    let keep = if v % 64 == 63 { 0 } else { !0u64 << (v % 64 + 1) };
    bits[word] &= keep;
}

fn pop_lowest(bits: &mut [u64]) -> Option<usize> {
    for (i, b) in bits.iter_mut().enumerate() {
        if *b != 0 {
            let tz = b.trailing_zeros() as usize;
            *b &= *b - 1;
            return Some(i * 64 + tz);
        }
    }
    None
}

/// Census densities from closed-form counting identities.
pub fn census_matrix_fast(g: &Graph) -> Result<DensityVector> {
    Ok(census_counts_fast(g)?.densities())
}

/// Raw counts from closed-form identities. Non-induced copies of each
/// 4-node motif are counted from degrees, common-neighbor counts and a
/// 4-clique enumeration, then converted to induced counts with the
/// containment matrix of the six connected 4-node graphs.
pub fn census_counts_fast(g: &Graph) -> Result<MotifCounts> {
    check_size(g)?;
    let n = g.n();
    let words = g.words();
    let deg: Vec<i64> = g.degrees().into_iter().map(|d| d as i64).collect();
    let c2 = |x: i64| x * (x - 1) / 2;
    let c3 = |x: i64| x * (x - 1) * (x - 2) / 6;

    let mut edges = 0i64;
    let mut tri3 = 0i64; // 3 * triangles
    let mut tri_at = vec![0i64; n]; // 2 * triangles at each node
    let mut p4_raw = 0i64;
    let mut diamond_raw = 0i64;
    let mut c4_twice = 0i64;
    let mut k4 = 0i64;
    let mut common = vec![0u64; words];

    for u in 0..n {
        let ru = g.row(u);
        for v in (u + 1)..n {
            let rv = g.row(v);
            let mut c = 0i64;
            for i in 0..words {
                common[i] = ru[i] & rv[i];
                c += common[i].count_ones() as i64;
            }
            c4_twice += c2(c);
            if !g.has_edge(u, v) {
                continue;
            }
            edges += 1;
            tri3 += c;
            tri_at[u] += c;
            tri_at[v] += c;
            p4_raw += (deg[u] - 1) * (deg[v] - 1);
            diamond_raw += c2(c);
            // 4-cliques u < v < w < x
            for w in BitIter::new(&common).filter(|&w| w > v) {
                let rw = g.row(w);
                let mut above = vec![0u64; words];
                for i in 0..words {
                    above[i] = common[i] & rw[i];
                }
                mask_above(&mut above, w);
                k4 += above.iter().map(|b| b.count_ones() as i64).sum::<i64>();
            }
        }
    }

    let triangles = tri3 / 3;
    let path3 = deg.iter().map(|&d| c2(d)).sum::<i64>() - 3 * triangles;
    let star_raw: i64 = deg.iter().map(|&d| c3(d)).sum();
    let p4_raw = p4_raw - 3 * triangles;
    let c4_raw = c4_twice / 2;
    let paw_raw: i64 = (0..n).map(|x| tri_at[x] / 2 * (deg[x] - 2).max(0)).sum();

    let diamond = diamond_raw - 6 * k4;
    let paw = paw_raw - 4 * diamond - 12 * k4;
    let cycle4 = c4_raw - diamond - 3 * k4;
    let star4 = star_raw - paw - 2 * diamond - 4 * k4;
    let path4 = p4_raw - 4 * cycle4 - 2 * paw - 6 * diamond - 12 * k4;

    let signed = [edges, path3, triangles, path4, star4, cycle4, paw, diamond, k4];
    let mut counts = [0u64; 9];
    for (dst, &src) in counts.iter_mut().zip(&signed) {
        *dst = u64::try_from(src)
            .map_err(|_| Error::Numerical(format!("negative motif count {src}")))?;
    }
    Ok(MotifCounts { n, counts })
}

/// Unweighted L2 distance between density vectors.
pub fn subgraph_distance(a: &DensityVector, b: &DensityVector) -> f64 {
    a.rho
        .iter()
        .zip(&b.rho)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
