//! k-medoids on sample embeddings: k-means++ seeding, then eager PAM swaps.

use rand::Rng;

use super::{check_budget, rng, AnchorSubset, EmbeddingKind, Embeddings, SelectionMethod};
use crate::error::Result;
use crate::par;

pub const MAX_SWAP_PASSES: usize = 100;
/// Independent seeding + swap runs; the lowest objective wins.
pub const RESTARTS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct KMedoidsResult {
    /// Medoid sample indices, ascending.
    pub medoids: Vec<usize>,
    /// Cluster sizes aligned with `medoids`.
    pub sizes: Vec<usize>,
    pub objective: f64,
    /// Objective after seeding, then after every swap pass.
    pub history: Vec<f64>,
    pub degenerate: bool,
}

struct Distances {
    n: usize,
    d: Vec<f64>,
}

impl Distances {
    fn new(e: &Embeddings) -> Self {
        let n = e.n;
        let rows = par::map_range(n, |i| {
            let a = e.row(i);
            (0..n)
                .map(|j| {
                    a.iter()
                        .zip(e.row(j))
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect::<Vec<f64>>()
        });
        Distances {
            n,
            d: rows.concat(),
        }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }
}

/// Nearest and second-nearest medoid slot per point; ties go to the lower slot.
struct Assignment {
    nearest: Vec<usize>,
    d_near: Vec<f64>,
    d_second: Vec<f64>,
}

fn assign(dist: &Distances, medoids: &[usize]) -> Assignment {
    let n = dist.n;
    let mut nearest = vec![0; n];
    let mut d_near = vec![f64::INFINITY; n];
    let mut d_second = vec![f64::INFINITY; n];
    for o in 0..n {
        for (slot, &m) in medoids.iter().enumerate() {
            let d = dist.get(o, m);
            if d < d_near[o] {
                d_second[o] = d_near[o];
                d_near[o] = d;
                nearest[o] = slot;
            } else if d < d_second[o] {
                d_second[o] = d;
            }
        }
    }
    Assignment {
        nearest,
        d_near,
        d_second,
    }
}

/// Draws one index with probability proportional to `nearest^2` over non-medoids.
fn draw_d2(r: &mut impl Rng, nearest: &[f64], is_medoid: &[bool]) -> usize {
    let n = nearest.len();
    let total: f64 = (0..n)
        .filter(|&i| !is_medoid[i])
        .map(|i| nearest[i] * nearest[i])
        .sum();
    if total <= 0.0 {
        return (0..n).find(|&i| !is_medoid[i]).expect("k <= n");
    }
    let target = r.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for i in (0..n).filter(|&i| !is_medoid[i]) {
        let w = nearest[i] * nearest[i];
        if w > 0.0 {
            last = Some(i);
            acc += w;
            if acc > target {
                return i;
            }
        }
    }
    last.expect("positive total has a positive weight")
}

/// Greedy k-means++: each step draws `2 + ln k` D^2-weighted candidates and
/// keeps the one that lowers the summed distance most (ties to the earlier draw).
fn seed_plus_plus(dist: &Distances, k: usize, seed: u64, restart: u64) -> Vec<usize> {
    let n = dist.n;
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut r = rng(seed);
    r.set_stream(restart);
    let first = r.random_range(0..n);
    let mut medoids = vec![first];
    let mut is_medoid = vec![false; n];
    is_medoid[first] = true;
    let mut nearest: Vec<f64> = (0..n).map(|i| dist.get(i, first)).collect();
    while medoids.len() < k {
        let mut best = (usize::MAX, f64::INFINITY);
        for _ in 0..trials {
            let c = draw_d2(&mut r, &nearest, &is_medoid);
            let cost: f64 = (0..n).map(|i| nearest[i].min(dist.get(i, c))).sum();
            if cost < best.1 {
                best = (c, cost);
            }
        }
        let next = best.0;
        is_medoid[next] = true;
        medoids.push(next);
        for (i, v) in nearest.iter_mut().enumerate() {
            *v = v.min(dist.get(i, next));
        }
    }
    medoids
}

fn objective(a: &Assignment) -> f64 {
    a.d_near.iter().sum()
}

/// Best swap partner slot for candidate `xc` and the objective change it brings.
fn best_swap(dist: &Distances, a: &Assignment, removal: &[f64], xc: usize) -> (usize, f64) {
    let k = removal.len();
    if k == 1 {
        let delta: f64 = (0..dist.n).map(|o| dist.get(o, xc) - a.d_near[o]).sum();
        return (0, delta);
    }
    let mut delta = removal.to_vec();
    let mut shared = 0.0;
    for o in 0..dist.n {
        let doj = dist.get(o, xc);
        let nn = a.nearest[o];
        if doj < a.d_near[o] {
            shared += doj - a.d_near[o];
            delta[nn] += a.d_near[o] - a.d_second[o];
        } else if doj < a.d_second[o] {
            delta[nn] += doj - a.d_second[o];
        }
    }
    let mut best = (0, f64::INFINITY);
    for (slot, d) in delta.into_iter().enumerate() {
        if d + shared < best.1 {
            best = (slot, d + shared);
        }
    }
    best
}

fn last(history: &[f64]) -> f64 {
    *history
        .last()
        .expect("history starts with the seeding objective")
}

/// Eager PAM swaps from `medoids` until no swap helps. Returns the medoids and
/// the objective after seeding and after every pass.
fn swap_phase(dist: &Distances, mut medoids: Vec<usize>) -> (Vec<usize>, Vec<f64>) {
    let (n, k) = (dist.n, medoids.len());
    let mut is_medoid = vec![false; n];
    medoids.iter().for_each(|&m| is_medoid[m] = true);
    let mut a = assign(dist, &medoids);
    let mut history = vec![objective(&a)];

    for _ in 0..MAX_SWAP_PASSES {
        let mut improved = false;
        for xc in 0..n {
            if is_medoid[xc] {
                continue;
            }
            let mut removal = vec![0.0; k];
            if k > 1 {
                for o in 0..n {
                    removal[a.nearest[o]] += a.d_second[o] - a.d_near[o];
                }
            }
            let (slot, delta) = best_swap(dist, &a, &removal, xc);
            let current = objective(&a);
            if delta < -1e-12 * current.max(1.0) {
                is_medoid[medoids[slot]] = false;
                is_medoid[xc] = true;
                medoids[slot] = xc;
                a = assign(dist, &medoids);
                improved = true;
            }
        }
        history.push(objective(&a));
        if !improved {
            break;
        }
    }

    (medoids, history)
}

/// Minimizes the summed Euclidean distance of every embedding to its nearest medoid.
pub fn kmedoids(emb: &Embeddings, k: usize, seed: u64) -> Result<KMedoidsResult> {
    let n = emb.n;
    check_budget(n, k)?;
    let all_same = (1..n).all(|i| emb.row(i) == emb.row(0));
    if all_same && k > 1 {
        log::warn!("k-medoids: all {n} embeddings identical; returning the first {k} samples");
        return Ok(KMedoidsResult {
            medoids: (0..k).collect(),
            sizes: vec![n / k; k],
            objective: 0.0,
            history: vec![0.0],
            degenerate: true,
        });
    }
    let dist = Distances::new(emb);
    let runs = if k == n {
        vec![swap_phase(&dist, (0..n).collect())]
    } else {
        par::map_range(RESTARTS, |r| {
            swap_phase(&dist, seed_plus_plus(&dist, k, seed, r as u64))
        })
    };
    // Ties keep the earliest restart, so the result does not depend on scheduling.
    let (mut medoids, history) = runs
        .into_iter()
        .reduce(|best, run| {
            if last(&run.1) < last(&best.1) {
                run
            } else {
                best
            }
        })
        .expect("at least one run");

    medoids.sort_unstable();
    let a = assign(&dist, &medoids);
    let mut sizes = vec![0; k];
    a.nearest.iter().for_each(|&s| sizes[s] += 1);
    Ok(KMedoidsResult {
        objective: objective(&a),
        medoids,
        sizes,
        history,
        degenerate: false,
    })
}

/// k-medoids anchor selection; weights are cluster sizes over N.
pub fn select_kmedoids(
    emb: &Embeddings,
    k: usize,
    seed: u64,
    kind: EmbeddingKind,
) -> Result<AnchorSubset> {
    let res = kmedoids(emb, k, seed)?;
    let weights = if res.degenerate {
        vec![1.0 / k as f64; k]
    } else {
        res.sizes.iter().map(|&s| s as f64 / emb.n as f64).collect()
    };
    let method = match kind {
        EmbeddingKind::Conf => SelectionMethod::KmedoidsConf,
        EmbeddingKind::Corr => SelectionMethod::KmedoidsCorr,
    };
    Ok(AnchorSubset::new(
        method,
        seed,
        res.medoids,
        Some(weights),
        None,
    ))
}
