//! Reference clusterers with a fixed community count.

use kodama::{linkage, Method};
use ndarray::{Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::agreement::compact_labels;
use crate::error::{KsbmError, Result};
use crate::rng;

const KMEANS_RESTARTS: usize = 10;
const KMEANS_MAX_ITER: usize = 300;

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// One k-means++ seeded Lloyd run. `None` if a cluster empties or the
/// seeding runs out of distinct points.
fn lloyd<R: Rng>(x: &Array2<f64>, k: usize, rng: &mut R) -> Option<(Vec<usize>, f64)> {
    let n = x.nrows();
    let mut centers = Array2::zeros((k, x.ncols()));
    centers.row_mut(0).assign(&x.row(rng.random_range(0..n)));
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), centers.row(0))).collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, &w) in nearest.iter().enumerate() {
            if target < w {
                pick = i;
                break;
            }
            target -= w;
        }
        centers.row_mut(c).assign(&x.row(pick));
        for (i, slot) in nearest.iter_mut().enumerate() {
            *slot = slot.min(sq_dist(x.row(i), centers.row(c)));
        }
    }
    let mut labels = vec![0; n];
    for iter in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for (i, label) in labels.iter_mut().enumerate() {
            let mut best = 0;
            let mut best_d = sq_dist(x.row(i), centers.row(0));
            for c in 1..k {
                let d = sq_dist(x.row(i), centers.row(c));
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            if *label != best {
                *label = best;
                changed = true;
            }
        }
        if !changed && iter > 0 {
            break;
        }
        let mut counts = vec![0usize; k];
        centers.fill(0.0);
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            let mut row = centers.row_mut(l);
            row += &x.row(i);
        }
        if counts.contains(&0) {
            return None;
        }
        for (c, &count) in counts.iter().enumerate() {
            centers.row_mut(c).mapv_inplace(|v| v / count as f64);
        }
    }
    let inertia = labels.iter().enumerate().map(|(i, &l)| sq_dist(x.row(i), centers.row(l))).sum();
    Some((labels, inertia))
}

/// k-means on the rows of `vectors`: k-means++ seeding, Lloyd iterations,
/// best of several seeded restarts by inertia.
pub fn kmeans_cluster(vectors: &Array2<f64>, k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = vectors.nrows();
    if k < 1 || k > n {
        return Err(KsbmError::param(format!("k = {k} must lie in 1..={n}")));
    }
    let mut rng = rng::stream(seed, rng::STREAM_CLUSTERING);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..KMEANS_RESTARTS {
        if let Some((labels, inertia)) = lloyd(vectors, k, &mut rng) {
            if best.as_ref().is_none_or(|(_, b)| inertia < *b) {
                best = Some((labels, inertia));
            }
        }
    }
    let (labels, _) = best.ok_or_else(|| {
        KsbmError::Degenerate(format!("k-means left an empty cluster in all {KMEANS_RESTARTS} restarts"))
    })?;
    Ok(compact_labels(&labels).0)
}

/// Linkage criterion for agglomerative clustering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    Average,
    Complete,
}

impl std::str::FromStr for Linkage {
    type Err = KsbmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Linkage::Single),
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            other => Err(KsbmError::Config(format!("unknown linkage `{other}`"))),
        }
    }
}

/// Agglomerative clustering of a distance matrix, cut at `k` clusters.
pub fn hierarchical_cluster(d: &Array2<f64>, linkage_kind: Linkage, k: usize) -> Result<Vec<usize>> {
    let n = d.nrows();
    if d.ncols() != n {
        return Err(KsbmError::param("distance matrix must be square"));
    }
    if k < 1 || k > n {
        return Err(KsbmError::param(format!("k = {k} must lie in 1..={n}")));
    }
    if n == 1 {
        return Ok(vec![0]);
    }
    let mut condensed: Vec<f64> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| d[[i, j]]).collect();
    let method = match linkage_kind {
        Linkage::Single => Method::Single,
        Linkage::Average => Method::Average,
        Linkage::Complete => Method::Complete,
    };
    let dendrogram = linkage(&mut condensed, n, method);
    // union-find over observations; cluster n + s is the one formed at step s
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut representative: Vec<usize> = (0..n).collect();
    for step in dendrogram.steps().iter().take(n - k) {
        let a = find(&mut parent, representative[step.cluster1]);
        let b = find(&mut parent, representative[step.cluster2]);
        let (lo, hi) = (a.min(b), a.max(b));
        parent[hi] = lo;
        representative.push(lo);
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    Ok(compact_labels(&roots).0)
}
