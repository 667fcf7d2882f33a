//! Agglomerative Ward clustering with silhouette-based selection of the
//! cluster count.
//!
//! Merging is greedy on the Ward variance increase
//! `Δ(A,B) = w_A w_B / (w_A + w_B) · ‖c_A − c_B‖²`, maintained through the
//! centroid form of the Lance–Williams recurrence, with ties broken toward
//! the lowest `(i, j)` slot pair. Identical feature vectors are deduplicated
//! into weighted points first — the rule-based featurizer emits a small set
//! of distinct one-hot patterns, so both the dendrogram and the silhouette
//! are computed exactly on the weighted unique points. Assignments are
//! therefore invariant to input point order.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::featurize::FeaturizedCorpus;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("too few points: {0}")]
    TooFewPoints(String),
    #[error("silhouette requires at least two clusters")]
    SingleCluster,
}

/// Above this many distinct points the silhouette falls back to a seeded
/// subsample of raw points.
pub const SILHOUETTE_POINT_CAP: usize = 2000;

const SILHOUETTE_SUBSAMPLE_SEED: u64 = 0x5117;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Clustering {
    pub k: usize,
    /// Per-trace, per-step cluster index, aligned to the featurized corpus.
    pub assignments: Vec<Vec<usize>>,
    /// Exact means of member vectors.
    pub centroids: Vec<Vec<f64>>,
    /// `None` when undefined (`k < 2` or all-singleton clusterings).
    pub silhouette: Option<f64>,
    /// True when the silhouette came from a capped subsample.
    pub silhouette_capped: bool,
}

struct UniquePoints {
    vectors: Vec<Vec<f64>>,
    counts: Vec<usize>,
    /// per (trace, step) -> unique index
    raw: Vec<Vec<usize>>,
}

fn dedupe(features: &FeaturizedCorpus) -> UniquePoints {
    let mut index: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
    for v in features.step_vectors() {
        let key: Vec<u64> = v.iter().map(|x| x.to_bits()).collect();
        index.entry(key).or_insert(0);
    }
    // canonical order: lexicographic in the bit patterns
    for (i, slot) in index.values_mut().enumerate() {
        *slot = i;
    }
    let vectors: Vec<Vec<f64>> = index
        .keys()
        .map(|key| key.iter().map(|&b| f64::from_bits(b)).collect())
        .collect();
    let mut counts = vec![0usize; vectors.len()];
    let raw: Vec<Vec<usize>> = features
        .traces
        .iter()
        .map(|steps| {
            steps
                .iter()
                .map(|v| {
                    let key: Vec<u64> = v.iter().map(|x| x.to_bits()).collect();
                    let u = index[&key];
                    counts[u] += 1;
                    u
                })
                .collect()
        })
        .collect();
    UniquePoints { vectors, counts, raw }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Greedy Ward merge of the weighted unique points down to `k` clusters.
/// Returns member lists (unique indices) ordered by smallest member.
fn ward_merge(unique: &UniquePoints, k: usize) -> Vec<Vec<usize>> {
    let u = unique.vectors.len();
    let mut centroid: Vec<Vec<f64>> = unique.vectors.clone();
    let mut weight: Vec<f64> = unique.counts.iter().map(|&c| c as f64).collect();
    let mut members: Vec<Vec<usize>> = (0..u).map(|i| vec![i]).collect();
    let mut alive: Vec<bool> = vec![true; u];
    let cost = |ci: &[f64], cj: &[f64], wi: f64, wj: f64| wi * wj / (wi + wj) * dist2(ci, cj);

    let mut pair_cost = vec![f64::INFINITY; u * u];
    for i in 0..u {
        for j in (i + 1)..u {
            pair_cost[i * u + j] = cost(&centroid[i], &centroid[j], weight[i], weight[j]);
        }
    }
    let mut n_alive = u;
    while n_alive > k {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for i in 0..u {
            if !alive[i] {
                continue;
            }
            for j in (i + 1)..u {
                if !alive[j] {
                    continue;
                }
                let c = pair_cost[i * u + j];
                if c < best.2 {
                    best = (i, j, c);
                }
            }
        }
        let (i, j, _) = best;
        let (wi, wj) = (weight[i], weight[j]);
        let total = wi + wj;
        let merged: Vec<f64> = centroid[i]
            .iter()
            .zip(&centroid[j])
            .map(|(a, b)| (wi * a + wj * b) / total)
            .collect();
        centroid[i] = merged;
        weight[i] = total;
        let moved = std::mem::take(&mut members[j]);
        members[i].extend(moved);
        alive[j] = false;
        n_alive -= 1;
        for other in 0..u {
            if !alive[other] || other == i {
                continue;
            }
            let (a, b) = (other.min(i), other.max(i));
            pair_cost[a * u + b] = cost(&centroid[a], &centroid[b], weight[a], weight[b]);
        }
    }
    let mut out: Vec<Vec<usize>> = (0..u)
        .filter(|&i| alive[i])
        .map(|i| {
            let mut m = members[i].clone();
            m.sort_unstable();
            m
        })
        .collect();
    out.sort_by_key(|m| m[0]);
    out
}

/// Bottom-up Ward clustering stopped at `k` clusters.
pub fn ward_cluster(features: &FeaturizedCorpus, k: usize) -> Result<Clustering, ClusterError> {
    let n = features.n_steps();
    if k < 1 || k > n {
        return Err(ClusterError::TooFewPoints(format!(
            "need 1 <= k <= {n} points, got k = {k}"
        )));
    }
    let unique = dedupe(features);
    let u = unique.vectors.len();

    // cluster id per unique point; duplicates may be split when k exceeds
    // the number of distinct patterns
    let assignments: Vec<Vec<usize>>;
    if k <= u {
        let clusters = ward_merge(&unique, k);
        let mut unique_to_cluster = vec![0usize; u];
        for (cid, members) in clusters.iter().enumerate() {
            for &m in members {
                unique_to_cluster[m] = cid;
            }
        }
        assignments = unique
            .raw
            .iter()
            .map(|steps| steps.iter().map(|&uidx| unique_to_cluster[uidx]).collect())
            .collect();
    } else {
        // allocate k slots across duplicate groups, largest average first
        let mut alloc = vec![1usize; u];
        let mut remaining = k - u;
        while remaining > 0 {
            let (mut pick, mut pick_avg) = (usize::MAX, 0.0f64);
            for i in 0..u {
                if alloc[i] >= unique.counts[i] {
                    continue;
                }
                let avg = unique.counts[i] as f64 / alloc[i] as f64;
                if avg > pick_avg {
                    pick_avg = avg;
                    pick = i;
                }
            }
            alloc[pick] += 1;
            remaining -= 1;
        }
        let mut base = vec![0usize; u];
        let mut next = 0;
        for i in 0..u {
            base[i] = next;
            next += alloc[i];
        }
        let mut seen = vec![0usize; u];
        assignments = unique
            .raw
            .iter()
            .map(|steps| {
                steps
                    .iter()
                    .map(|&uidx| {
                        let cid = base[uidx] + seen[uidx] % alloc[uidx];
                        seen[uidx] += 1;
                        cid
                    })
                    .collect()
            })
            .collect();
    }

    let centroids = exact_centroids(features, &assignments, k);
    let (silhouette, silhouette_capped) = if k >= 2 && k < n {
        let (s, capped) = silhouette_inner(features, &unique, &assignments, k)?;
        (Some(s), capped)
    } else {
        (None, false)
    };
    Ok(Clustering { k, assignments, centroids, silhouette, silhouette_capped })
}

fn exact_centroids(
    features: &FeaturizedCorpus,
    assignments: &[Vec<usize>],
    k: usize,
) -> Vec<Vec<f64>> {
    let dim = features.space.dimension();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (steps, labels) in features.traces.iter().zip(assignments) {
        for (v, &c) in steps.iter().zip(labels) {
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(v) {
                *s += x;
            }
        }
    }
    for (sum, &count) in sums.iter_mut().zip(&counts) {
        if count > 0 {
            for s in sum.iter_mut() {
                *s /= count as f64;
            }
        }
    }
    sums
}

/// Mean silhouette over points: `(b - a) / max(a, b)` with the usual
/// conventions (singleton clusters and `a = b = 0` contribute 0).
pub fn silhouette_score(
    features: &FeaturizedCorpus,
    assignments: &[Vec<usize>],
) -> Result<f64, ClusterError> {
    let k = assignments
        .iter()
        .flatten()
        .copied()
        .max()
        .map_or(0, |m| m + 1);
    if k < 2 {
        return Err(ClusterError::SingleCluster);
    }
    let unique = dedupe(features);
    silhouette_inner(features, &unique, assignments, k).map(|(s, _)| s)
}

fn silhouette_inner(
    features: &FeaturizedCorpus,
    unique: &UniquePoints,
    assignments: &[Vec<usize>],
    k: usize,
) -> Result<(f64, bool), ClusterError> {
    if k < 2 {
        return Err(ClusterError::SingleCluster);
    }
    let u = unique.vectors.len();
    if u > SILHOUETTE_POINT_CAP {
        return Ok((silhouette_subsampled(features, assignments, k), true));
    }
    // multiplicity of each (unique point, cluster) pair
    let mut mult = vec![0usize; u * k];
    for (steps, labels) in unique.raw.iter().zip(assignments) {
        for (&uidx, &c) in steps.iter().zip(labels) {
            mult[uidx * k + c] += 1;
        }
    }
    let mut cluster_sizes = vec![0usize; k];
    for uidx in 0..u {
        for c in 0..k {
            cluster_sizes[c] += mult[uidx * k + c];
        }
    }
    debug_assert!(cluster_sizes.iter().all(|&s| s > 0), "empty cluster");
    // T[uidx][c] = total distance from the unique point to cluster c
    let mut totals = vec![0.0f64; u * k];
    for a in 0..u {
        for b in (a + 1)..u {
            let d = dist2(&unique.vectors[a], &unique.vectors[b]).sqrt();
            for c in 0..k {
                totals[a * k + c] += mult[b * k + c] as f64 * d;
                totals[b * k + c] += mult[a * k + c] as f64 * d;
            }
        }
    }
    let n: usize = cluster_sizes.iter().sum();
    let mut acc = 0.0;
    for uidx in 0..u {
        for c in 0..k {
            let m = mult[uidx * k + c];
            if m == 0 {
                continue;
            }
            let s = if cluster_sizes[c] == 1 {
                0.0
            } else {
                let a = totals[uidx * k + c] / (cluster_sizes[c] - 1) as f64;
                let mut b = f64::INFINITY;
                for other in 0..k {
                    if other == c || cluster_sizes[other] == 0 {
                        continue;
                    }
                    b = b.min(totals[uidx * k + other] / cluster_sizes[other] as f64);
                }
                let denom = a.max(b);
                if denom == 0.0 {
                    0.0
                } else {
                    (b - a) / denom
                }
            };
            acc += m as f64 * s;
        }
    }
    Ok((acc / n as f64, false))
}

fn silhouette_subsampled(
    features: &FeaturizedCorpus,
    assignments: &[Vec<usize>],
    k: usize,
) -> f64 {
    let points: Vec<(&Vec<f64>, usize)> = features
        .traces
        .iter()
        .zip(assignments)
        .flat_map(|(steps, labels)| steps.iter().zip(labels.iter().copied()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(SILHOUETTE_SUBSAMPLE_SEED);
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.shuffle(&mut rng);
    idx.truncate(SILHOUETTE_POINT_CAP);
    idx.sort_unstable();
    let sample: Vec<(&Vec<f64>, usize)> = idx.into_iter().map(|i| points[i]).collect();
    let n = sample.len();
    let mut cluster_sizes = vec![0usize; k];
    for &(_, c) in &sample {
        cluster_sizes[c] += 1;
    }
    let mut acc = 0.0;
    for (i, &(vi, ci)) in sample.iter().enumerate() {
        if cluster_sizes[ci] <= 1 {
            continue;
        }
        let mut totals = vec![0.0f64; k];
        for (j, &(vj, cj)) in sample.iter().enumerate() {
            if i != j {
                totals[cj] += dist2(vi, vj).sqrt();
            }
        }
        let a = totals[ci] / (cluster_sizes[ci] - 1) as f64;
        let mut b = f64::INFINITY;
        for c in 0..k {
            if c != ci && cluster_sizes[c] > 0 {
                b = b.min(totals[c] / cluster_sizes[c] as f64);
            }
        }
        let denom = a.max(b);
        if denom > 0.0 {
            acc += (b - a) / denom;
        }
    }
    acc / n as f64
}

/// Evaluate every `k` in `[k_min, k_max]` and return the clustering with
/// maximal silhouette, breaking ties toward smaller `k`.
pub fn select_m(
    features: &FeaturizedCorpus,
    k_min: usize,
    k_max: usize,
) -> Result<Clustering, ClusterError> {
    let n = features.n_steps();
    if k_min < 2 || k_min > k_max || k_max > n {
        return Err(ClusterError::TooFewPoints(format!(
            "need 2 <= k_min <= k_max <= {n}, got [{k_min}, {k_max}]"
        )));
    }
    let mut best: Option<Clustering> = None;
    for k in k_min..=k_max {
        let candidate = ward_cluster(features, k)?;
        let better = match (&best, candidate.silhouette) {
            (None, _) => true,
            (Some(b), Some(s)) => s > b.silhouette.unwrap_or(f64::NEG_INFINITY),
            (Some(_), None) => false,
        };
        if better {
            best = Some(candidate);
        }
    }
    Ok(best.expect("range is non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::FeatureSpace;

    /// Build a featurized corpus directly from raw vectors, one trace per
    /// group, bypassing the string featurizer.
    fn raw_features(groups: &[Vec<Vec<f64>>]) -> FeaturizedCorpus {
        let dim = groups[0][0].len();
        FeaturizedCorpus {
            space: FeatureSpace {
                // dimension bookkeeping only; names are irrelevant here
                tool_vocab: (0..dim.saturating_sub(1)).map(|i| format!("t{i}")).collect(),
                error_vocab: vec![],
            },
            traces: groups.to_vec(),
        }
    }

    fn one_d(points: &[f64]) -> FeaturizedCorpus {
        raw_features(&[points.iter().map(|&x| vec![x]).collect()])
    }

    #[test]
    fn separable_groups_recovered() {
        // two tight groups on distinct one-hot axes
        let fc = raw_features(&[vec![
            vec![1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ]]);
        let c = ward_cluster(&fc, 2).unwrap();
        let labels = &c.assignments[0];
        assert_eq!(labels[0], labels[1]);
        assert_eq!(labels[0], labels[2]);
        assert_eq!(labels[3], labels[4]);
        assert_ne!(labels[0], labels[3]);
        assert!(c.silhouette.unwrap() > 0.9);
    }

    #[test]
    fn collinear_merge_trace_matches_greedy_oracle() {
        // 4 equidistant collinear points; hand Lance-Williams trace merges
        // (0,1) first (tie broken to the lowest pair), then (2,3).
        let fc = one_d(&[0.0, 1.0, 2.0, 3.0]);
        let c3 = ward_cluster(&fc, 3).unwrap();
        let l = &c3.assignments[0];
        assert_eq!(l[0], l[1]);
        assert_ne!(l[2], l[3]);
        assert_ne!(l[0], l[2]);
        let c2 = ward_cluster(&fc, 2).unwrap();
        let l = &c2.assignments[0];
        assert_eq!(l[0], l[1]);
        assert_eq!(l[2], l[3]);
        assert_ne!(l[0], l[2]);
        // and the k=2 cut minimizes within-cluster variance over all
        // 2-partitions (brute force over assignments)
        let points = [0.0, 1.0, 2.0, 3.0];
        let wcv = |part: &[usize]| -> f64 {
            let mut best = 0.0;
            for c in 0..2 {
                let members: Vec<f64> = points
                    .iter()
                    .zip(part)
                    .filter(|(_, &p)| p == c)
                    .map(|(&x, _)| x)
                    .collect();
                if members.is_empty() {
                    continue;
                }
                let mean = members.iter().sum::<f64>() / members.len() as f64;
                best += members.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
            }
            best
        };
        let mut best_cost = f64::INFINITY;
        for mask in 1..(1 << 4) - 1 {
            let part: Vec<usize> = (0..4).map(|i| (mask >> i) & 1).collect();
            best_cost = best_cost.min(wcv(&part));
        }
        assert!((wcv(&c2.assignments[0]) - best_cost).abs() < 1e-12);
    }

    #[test]
    fn all_singletons_has_undefined_silhouette() {
        let fc = one_d(&[0.0, 1.0, 2.0]);
        let c = ward_cluster(&fc, 3).unwrap();
        assert_eq!(c.silhouette, None);
        let mut labels = c.assignments[0].clone();
        labels.sort_unstable();
        assert_eq!(labels, vec![0, 1, 2]);
    }

    #[test]
    fn duplicate_points_split_into_two_clusters_scores_zero() {
        let fc = one_d(&[1.0, 1.0, 1.0, 1.0]);
        let c = ward_cluster(&fc, 2).unwrap();
        assert_eq!(c.k, 2);
        let s = silhouette_score(&fc, &c.assignments).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn silhouette_matches_double_loop_oracle() {
        let groups = vec![vec![
            vec![0.0, 0.1],
            vec![0.2, 0.0],
            vec![0.1, 0.1],
            vec![2.0, 2.1],
            vec![2.2, 1.9],
            vec![4.0, 0.0],
        ]];
        let fc = raw_features(&groups);
        let assignments = vec![vec![0usize, 0, 0, 1, 1, 2]];
        let ours = silhouette_score(&fc, &assignments).unwrap();

        // O(n^2) reference: direct double loop over raw points
        let pts = &groups[0];
        let labels = &assignments[0];
        let k = 3;
        let mut sizes = vec![0usize; k];
        for &l in labels {
            sizes[l] += 1;
        }
        let mut acc = 0.0;
        for i in 0..pts.len() {
            if sizes[labels[i]] == 1 {
                continue;
            }
            let mut sums = vec![0.0; k];
            for j in 0..pts.len() {
                if i != j {
                    sums[labels[j]] += dist2(&pts[i], &pts[j]).sqrt();
                }
            }
            let a = sums[labels[i]] / (sizes[labels[i]] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != labels[i] && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            if a.max(b) > 0.0 {
                acc += (b - a) / a.max(b);
            }
        }
        let oracle = acc / pts.len() as f64;
        assert!((ours - oracle).abs() < 1e-12, "{ours} vs {oracle}");
    }

    #[test]
    fn select_m_recovers_three_patterns() {
        let mut steps = Vec::new();
        for _ in 0..10 {
            steps.push(vec![1.0, 0.0, 0.0]);
            steps.push(vec![0.0, 1.0, 0.0]);
            steps.push(vec![0.0, 0.0, 1.0]);
        }
        let fc = raw_features(&[steps]);
        let c = select_m(&fc, 2, 6).unwrap();
        assert_eq!(c.k, 3);
        assert!((c.silhouette.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn select_m_collapsed_range() {
        let fc = one_d(&[0.0, 0.0, 1.0, 1.0, 5.0]);
        let c = select_m(&fc, 4, 4).unwrap();
        assert_eq!(c.k, 4);
    }

    #[test]
    fn select_m_silhouette_dominates_all_other_k() {
        let fc = one_d(&[0.0, 0.1, 0.2, 3.0, 3.1, 3.2, 9.0, 9.1]);
        let best = select_m(&fc, 2, 6).unwrap();
        for k in 2..=6 {
            let c = ward_cluster(&fc, k).unwrap();
            if let (Some(s), Some(b)) = (c.silhouette, best.silhouette) {
                assert!(b >= s - 1e-12, "k={k} beats selected");
            }
        }
    }

    #[test]
    fn assignments_invariant_to_point_order() {
        let forward = one_d(&[0.0, 0.1, 3.0, 3.1, 9.0]);
        let backward = one_d(&[9.0, 3.1, 3.0, 0.1, 0.0]);
        let cf = ward_cluster(&forward, 2).unwrap();
        let cb = ward_cluster(&backward, 2).unwrap();
        // same partition content: compare label of each value
        let vf = &cf.assignments[0];
        let vb = &cb.assignments[0];
        assert_eq!(vf[0], vb[4]);
        assert_eq!(vf[1], vb[3]);
        assert_eq!(vf[2], vb[2]);
        assert_eq!(vf[3], vb[1]);
        assert_eq!(vf[4], vb[0]);
    }

    #[test]
    fn ward_objective_nondecreasing_across_merges() {
        let fc = one_d(&[0.0, 0.5, 1.1, 2.0, 3.2, 4.9, 5.0, 8.0]);
        let mut last = -1.0;
        for k in (1..=8).rev() {
            let c = ward_cluster(&fc, k).unwrap();
            let mut total = 0.0;
            for (steps, labels) in fc.traces.iter().zip(&c.assignments) {
                for (v, &l) in steps.iter().zip(labels) {
                    total += dist2(v, &c.centroids[l]);
                }
            }
            assert!(total >= last - 1e-12, "objective decreased at k={k}");
            last = total;
        }
    }

    #[test]
    fn too_few_points_rejected() {
        let fc = one_d(&[0.0, 1.0]);
        assert!(matches!(
            ward_cluster(&fc, 3),
            Err(ClusterError::TooFewPoints(_))
        ));
        assert!(matches!(
            select_m(&fc, 2, 5),
            Err(ClusterError::TooFewPoints(_))
        ));
    }
}
