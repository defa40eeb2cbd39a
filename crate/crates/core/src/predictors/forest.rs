//! Bagged CART regression trees with variance-reduction splits.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub trees: usize,
    /// Features tried per split; `None` means `max(1, d / 3)`.
    pub max_features: Option<usize>,
    pub min_leaf: usize,
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            trees: 200,
            max_features: None,
            min_leaf: 2,
            bootstrap: true,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes of one tree; index 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Every internal node has two in-range children and every node is reachable exactly once.
    pub fn check(&self) -> Result<()> {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if i >= n || seen[i] {
                return Err(Error::InvariantViolation(format!(
                    "tree node {i} is out of range or shared"
                )));
            }
            seen[i] = true;
            if let Node::Split { left, right, .. } = self.nodes[i] {
                stack.push(left);
                stack.push(right);
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvariantViolation(
                "tree has unreachable nodes".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub dim: usize,
    pub trees: Vec<Tree>,
}

impl Forest {
    pub fn fit(x: &[Vec<f64>], y: &[f64], config: &ForestConfig, seed: u64) -> Result<Self> {
        if config.trees == 0 || config.min_leaf == 0 {
            return Err(Error::InvalidConfig(
                "forest needs at least one tree and min_leaf >= 1".into(),
            ));
        }
        let dim = x.first().map_or(0, Vec::len);
        let mtry = config
            .max_features
            .unwrap_or((dim / 3).max(1))
            .clamp(1, dim.max(1));
        let trees = par::map_range(config.trees, |t| {
            // `seed ^ t` alone gives seeds 0 and 1 the same set of trees; the stream separates them.
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ t as u64);
            rng.set_stream(seed);
            let m = x.len();
            let sample: Vec<usize> = if config.bootstrap {
                (0..m).map(|_| rng.random_range(0..m)).collect()
            } else {
                (0..m).collect()
            };
            grow(x, y, sample, dim, mtry, config, &mut rng)
        });
        Ok(Forest { dim, trees })
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if self.trees.is_empty() {
            return Err(Error::EmptyModel);
        }
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64)
    }
}

struct Pending {
    node: usize,
    samples: Vec<usize>,
    depth: usize,
}

fn mean_of(y: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64
}

/// Best split of `idx` on `feature`: (score, threshold, left-count). Score is
/// `sumL^2/nL + sumR^2/nR`, larger is better.
fn best_split_on(
    x: &[Vec<f64>],
    y: &[f64],
    idx: &[usize],
    feature: usize,
    min_leaf: usize,
) -> Option<(f64, f64)> {
    let mut sorted: Vec<usize> = idx.to_vec();
    sorted.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]).then(a.cmp(&b)));
    let n = sorted.len();
    let total: f64 = sorted.iter().map(|&i| y[i]).sum();
    let mut left_sum = 0.0;
    let mut best: Option<(f64, f64)> = None;
    for p in 1..n {
        left_sum += y[sorted[p - 1]];
        if p < min_leaf || n - p < min_leaf {
            continue;
        }
        let lo = x[sorted[p - 1]][feature];
        let hi = x[sorted[p]][feature];
        if lo >= hi {
            continue;
        }
        let right_sum = total - left_sum;
        let score = left_sum * left_sum / p as f64 + right_sum * right_sum / (n - p) as f64;
        if best.is_none_or(|(s, _)| score > s) {
            let mid = lo + (hi - lo) / 2.0;
            let threshold = if mid < hi { mid } else { lo };
            best = Some((score, threshold));
        }
    }
    best
}

fn grow(
    x: &[Vec<f64>],
    y: &[f64],
    sample: Vec<usize>,
    dim: usize,
    mtry: usize,
    config: &ForestConfig,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut queue = vec![Pending {
        node: 0,
        samples: sample,
        depth: 0,
    }];
    let mut features: Vec<usize> = (0..dim).collect();
    while let Some(Pending {
        node,
        samples,
        depth,
    }) = queue.pop()
    {
        let mean = mean_of(y, &samples);
        nodes[node] = Node::Leaf { value: mean };
        let pure = samples.iter().all(|&i| y[i] == y[samples[0]]);
        let depth_capped = config.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || samples.len() < 2 * config.min_leaf {
            continue;
        }
        let parent = mean * mean * samples.len() as f64;
        features.shuffle(rng);
        let mut best: Option<(f64, usize, f64)> = None;
        for (tried, &f) in features.iter().enumerate() {
            // keep drawing past mtry only while no valid split exists
            if tried >= mtry && best.is_some() {
                break;
            }
            if let Some((score, thr)) = best_split_on(x, y, &samples, f, config.min_leaf) {
                if score > parent * (1.0 + 1e-12) && best.is_none_or(|(s, _, _)| score > s) {
                    best = Some((score, f, thr));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            continue;
        };
        let (l, r): (Vec<usize>, Vec<usize>) =
            samples.iter().partition(|&&i| x[i][feature] <= threshold);
        let left = nodes.len();
        let right = left + 1;
        nodes.push(Node::Leaf { value: 0.0 });
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[node] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        queue.push(Pending {
            node: right,
            samples: r,
            depth: depth + 1,
        });
        queue.push(Pending {
            node: left,
            samples: l,
            depth: depth + 1,
        });
    }
    Tree { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_full_tree_memorizes() {
        let x: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i * 7 % 20) as f64, (i % 3) as f64])
            .collect();
        let y: Vec<f64> = (0..20).map(|i| ((i * 13) % 17) as f64 / 17.0).collect();
        let cfg = ForestConfig {
            trees: 1,
            max_features: Some(2),
            min_leaf: 1,
            bootstrap: false,
            max_depth: None,
        };
        let f = Forest::fit(&x, &y, &cfg, 5).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(f.predict(xi).unwrap(), *yi);
        }
        f.trees[0].check().unwrap();
    }

    #[test]
    fn constant_target_is_one_leaf() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let f = Forest::fit(&x, &[0.4; 10], &ForestConfig::default(), 1).unwrap();
        assert!(f.trees.iter().all(|t| t.nodes.len() == 1));
        assert!((f.predict(&[3.0]).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn min_leaf_is_respected() {
        let x: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let cfg = ForestConfig {
            trees: 1,
            min_leaf: 3,
            bootstrap: false,
            ..ForestConfig::default()
        };
        let f = Forest::fit(&x, &y, &cfg, 0).unwrap();
        let tree = &f.trees[0];
        assert!(tree.nodes.len() > 1);
        let mut per_leaf = std::collections::BTreeMap::new();
        for xi in &x {
            let mut at = 0;
            while let Node::Split {
                feature,
                threshold,
                left,
                right,
            } = tree.nodes[at]
            {
                at = if xi[feature] <= threshold {
                    left
                } else {
                    right
                };
            }
            *per_leaf.entry(at).or_insert(0) += 1;
        }
        assert!(per_leaf.values().all(|&c| c >= 3), "{per_leaf:?}");
    }
}
