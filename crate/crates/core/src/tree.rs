//! Monte Carlo tree over the categorical variables.
//!
//! Level `i` of the tree branches over the categories of the `i`-th
//! categorical variable, so a root-to-leaf path is one category combination.
//! Every node keeps a visit count and an average reward; nodes with children
//! also keep a Dirichlet parameter vector over them. Nodes are allocated
//! lazily: an unallocated child has zero visits and the initial Dirichlet
//! vector.
//!
//! Leaf averages are running means of the rewards observed at that leaf.
//! An interior average is the unweighted mean of the averages of the
//! children visited so far.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, Gamma};
use thiserror::Error;

use crate::math;
use crate::rng::Rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("reward vector needs at least one child")]
    NoChildren,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("path of length {got} for a tree with {levels} levels")]
    PathLength { got: usize, levels: usize },
    #[error("child index {index} out of range at level {level} ({arity} children)")]
    ChildOutOfRange { level: usize, index: usize, arity: usize },
    #[error("Dirichlet parameters must be positive and finite")]
    InvalidAlpha,
}

/// Category-selection policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Strategy {
    /// Upper-confidence-bound tree search.
    #[default]
    Ucts,
    /// Dirichlet-Multinomial sampling with conjugate updates.
    Dirichlet,
}

/// How a node's children statistics are turned into a Dirichlet update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RewardVariant {
    /// `(1 + δ_k) / N_k`; unvisited children get 0.
    #[default]
    Scaled,
    /// `δ_k`: 1 for the best child, 0 elsewhere.
    ZeroOne,
}

/// One child index per level.
pub type Path = Vec<usize>;

#[derive(Debug, Clone, PartialEq)]
struct Node {
    visits: u64,
    mean_reward: f64,
    alpha: Vec<f64>,
    children: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryTree {
    arity: Vec<usize>,
    initial_alpha: f64,
    nodes: Vec<Node>,
    decisions: u64,
}

/// Snapshot of one allocated node.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NodeDump {
    pub path: Vec<usize>,
    pub visits: u64,
    pub mean_reward: f64,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Vec::is_empty", default))]
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TreeDump {
    pub arity: Vec<usize>,
    pub initial_alpha: f64,
    /// Allocated nodes in depth-first order, root first.
    pub nodes: Vec<NodeDump>,
}

impl CategoryTree {
    /// A tree whose level `i` has `arity[i]` children per node.
    ///
    /// Panics unless every arity is at least 1 and `initial_alpha` is positive.
    pub fn new(arity: Vec<usize>, initial_alpha: f64) -> Self {
        assert!(arity.iter().all(|&k| k >= 1), "every level needs at least one child");
        assert!(initial_alpha > 0.0 && initial_alpha.is_finite(), "initial alpha must be positive");
        let mut t = CategoryTree { arity, initial_alpha, nodes: Vec::new(), decisions: 0 };
        t.nodes.push(t.fresh_node(0));
        t
    }

    fn fresh_node(&self, depth: usize) -> Node {
        let k = self.arity.get(depth).copied().unwrap_or(0);
        Node { visits: 0, mean_reward: 0.0, alpha: vec![self.initial_alpha; k], children: vec![None; k] }
    }

    pub fn levels(&self) -> usize {
        self.arity.len()
    }

    pub fn arity(&self) -> &[usize] {
        &self.arity
    }

    /// C, the number of leaves (saturating).
    pub fn leaf_count(&self) -> u128 {
        self.arity.iter().fold(1u128, |acc, &k| acc.saturating_mul(k as u128))
    }

    /// Total node decisions taken by the selection policies so far.
    pub fn decisions(&self) -> u64 {
        self.decisions
    }

    fn node_at(&self, path: &[usize]) -> Option<usize> {
        let mut id = 0;
        for &c in path {
            id = self.nodes[id].children.get(c).copied().flatten()?;
        }
        Some(id)
    }

    /// Visit count of the node reached by `path` (any prefix length).
    pub fn visits(&self, path: &[usize]) -> u64 {
        self.node_at(path).map_or(0, |id| self.nodes[id].visits)
    }

    /// Average reward of the node reached by `path`, `None` if never visited.
    pub fn mean_reward(&self, path: &[usize]) -> Option<f64> {
        self.node_at(path).filter(|&id| self.nodes[id].visits > 0).map(|id| self.nodes[id].mean_reward)
    }

    /// Dirichlet vector over the children of the node reached by `path`.
    pub fn alpha(&self, path: &[usize]) -> Vec<f64> {
        match self.node_at(path) {
            Some(id) => self.nodes[id].alpha.clone(),
            None => vec![self.initial_alpha; self.arity.get(path.len()).copied().unwrap_or(0)],
        }
    }

    /// `(r̄_k, N_k)` for each child of the node with id `id`.
    fn child_stats(&self, id: usize) -> Vec<(f64, u64)> {
        self.nodes[id]
            .children
            .iter()
            .map(|c| match c {
                Some(cid) => (self.nodes[*cid].mean_reward, self.nodes[*cid].visits),
                None => (0.0, 0),
            })
            .collect()
    }

    fn check_path(&self, path: &[usize]) -> Result<(), TreeError> {
        if path.len() != self.levels() {
            return Err(TreeError::PathLength { got: path.len(), levels: self.levels() });
        }
        for (level, (&i, &k)) in path.iter().zip(&self.arity).enumerate() {
            if i >= k {
                return Err(TreeError::ChildOutOfRange { level, index: i, arity: k });
            }
        }
        Ok(())
    }

    /// UCB tree search. At each level, with probability `epsilon` a uniform
    /// child; otherwise an unvisited child if any (uniformly among them), else
    /// the child maximizing `r̄ + c_ucb·sqrt(ln n_parent / n_child)` with ties
    /// going to the lowest index.
    pub fn ucts_select(&mut self, c_ucb: f64, epsilon: f64, rng: &mut Rng) -> Path {
        let mut path = Vec::with_capacity(self.levels());
        let mut node = Some(0);
        for depth in 0..self.levels() {
            self.decisions += 1;
            let k = self.arity[depth];
            let stats = match node {
                Some(id) => self.child_stats(id),
                None => vec![(0.0, 0); k],
            };
            let child = if epsilon > 0.0 && rng.random::<f64>() < epsilon {
                rng.random_range(0..k)
            } else {
                ucb_choice(&stats, c_ucb, rng)
            };
            path.push(child);
            node = node.and_then(|id| self.nodes[id].children[child]);
        }
        path
    }

    /// Dirichlet-Multinomial selection: at each level draw `p ~ Dir(α)` and
    /// one child from `Multinomial(p)`.
    pub fn dirichlet_select(&mut self, rng: &mut Rng) -> Path {
        let mut path = Vec::with_capacity(self.levels());
        let mut node = Some(0);
        for depth in 0..self.levels() {
            self.decisions += 1;
            let alpha = match node {
                Some(id) => self.nodes[id].alpha.clone(),
                None => vec![self.initial_alpha; self.arity[depth]],
            };
            let p = sample_dirichlet(&alpha, rng);
            let child = sample_categorical(&p, rng);
            path.push(child);
            node = node.and_then(|id| self.nodes[id].children[child]);
        }
        path
    }

    pub fn select(&mut self, strategy: Strategy, c_ucb: f64, epsilon: f64, rng: &mut Rng) -> Path {
        match strategy {
            Strategy::Ucts => self.ucts_select(c_ucb, epsilon, rng),
            Strategy::Dirichlet => self.dirichlet_select(rng),
        }
    }

    /// Record `reward` at the leaf reached by `path` and update every node on
    /// the path. With [`Strategy::Dirichlet`] each on-path node with children
    /// also adds the reward vector of its children to its Dirichlet vector.
    pub fn backpropagate(
        &mut self,
        path: &[usize],
        reward: f64,
        strategy: Strategy,
        variant: RewardVariant,
    ) -> Result<(), TreeError> {
        self.check_path(path)?;
        let mut ids = Vec::with_capacity(path.len() + 1);
        ids.push(0usize);
        for (depth, &c) in path.iter().enumerate() {
            let parent = *ids.last().unwrap();
            let id = match self.nodes[parent].children[c] {
                Some(id) => id,
                None => {
                    let id = self.nodes.len();
                    let fresh = self.fresh_node(depth + 1);
                    self.nodes.push(fresh);
                    self.nodes[parent].children[c] = Some(id);
                    id
                }
            };
            ids.push(id);
        }
        let leaf = &mut self.nodes[*ids.last().unwrap()];
        leaf.visits += 1;
        leaf.mean_reward += (reward - leaf.mean_reward) / leaf.visits as f64;
        for &id in ids.iter().rev().skip(1) {
            let stats = self.child_stats(id);
            let visited: Vec<f64> = stats.iter().filter(|s| s.1 > 0).map(|s| s.0).collect();
            let node = &mut self.nodes[id];
            node.visits += 1;
            node.mean_reward = visited.iter().sum::<f64>() / visited.len() as f64;
            if strategy == Strategy::Dirichlet {
                let r = make_reward_vector(&stats, variant)?;
                node.alpha = posterior_update(&node.alpha, &r)?;
            }
        }
        Ok(())
    }

    /// Snapshot of all allocated nodes.
    pub fn dump(&self) -> TreeDump {
        let mut nodes = Vec::new();
        let mut stack = vec![(0usize, Vec::new())];
        while let Some((id, path)) = stack.pop() {
            let n = &self.nodes[id];
            for (c, child) in n.children.iter().enumerate().rev() {
                if let Some(cid) = child {
                    let mut p = path.clone();
                    p.push(c);
                    stack.push((*cid, p));
                }
            }
            nodes.push(NodeDump { path, visits: n.visits, mean_reward: n.mean_reward, alpha: n.alpha.clone() });
        }
        TreeDump { arity: self.arity.clone(), initial_alpha: self.initial_alpha, nodes }
    }

    /// Leaf with the most visits (lowest path on ties), if any was visited.
    pub fn most_visited_leaf(&self) -> Option<Path> {
        let dump = self.dump();
        let mut best: Option<(u64, Path)> = None;
        for n in dump.nodes.into_iter().filter(|n| n.path.len() == self.levels() && n.visits > 0) {
            if best.as_ref().is_none_or(|(v, p)| n.visits > *v || (n.visits == *v && n.path < *p)) {
                best = Some((n.visits, n.path));
            }
        }
        best.map(|(_, p)| p)
    }
}

fn ucb_choice(stats: &[(f64, u64)], c_ucb: f64, rng: &mut Rng) -> usize {
    let unvisited: Vec<usize> = (0..stats.len()).filter(|&i| stats[i].1 == 0).collect();
    if !unvisited.is_empty() {
        return unvisited[rng.random_range(0..unvisited.len())];
    }
    let parent: u64 = stats.iter().map(|s| s.1).sum();
    let log_parent = math::ln(parent as f64);
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, &(mean, n)) in stats.iter().enumerate() {
        let score = mean + c_ucb * math::sqrt(log_parent / n as f64);
        if score > best_score {
            best = i;
            best_score = score;
        }
    }
    best
}

/// Reward vector for a Dirichlet update from per-child `(r̄_k, N_k)`.
///
/// The winner is the visited child with the largest average (lowest index on
/// ties). Unvisited children take no part in the comparison and receive 0.
pub fn make_reward_vector(children: &[(f64, u64)], variant: RewardVariant) -> Result<Vec<f64>, TreeError> {
    if children.is_empty() {
        return Err(TreeError::NoChildren);
    }
    let mut winner: Option<usize> = None;
    for (i, &(mean, n)) in children.iter().enumerate() {
        if n > 0 && winner.is_none_or(|w| mean > children[w].0) {
            winner = Some(i);
        }
    }
    Ok(children
        .iter()
        .enumerate()
        .map(|(i, &(_, n))| {
            let delta = if winner == Some(i) { 1.0 } else { 0.0 };
            match variant {
                RewardVariant::ZeroOne => delta,
                RewardVariant::Scaled if n == 0 => 0.0,
                RewardVariant::Scaled => (1.0 + delta) / n as f64,
            }
        })
        .collect())
}

/// Conjugate update `α + r`.
pub fn posterior_update(alpha: &[f64], reward: &[f64]) -> Result<Vec<f64>, TreeError> {
    if alpha.len() != reward.len() {
        return Err(TreeError::DimensionMismatch(alpha.len(), reward.len()));
    }
    if alpha.iter().any(|a| !(*a > 0.0 && a.is_finite())) || reward.iter().any(|r| !(*r >= 0.0)) {
        return Err(TreeError::InvalidAlpha);
    }
    Ok(alpha.iter().zip(reward).map(|(a, r)| a + r).collect())
}

/// Draw from `Dir(α)`.
///
/// Gamma variates are taken in log space (`G(a) = G(a + 1)·U^{1/a}`) so very
/// small concentrations do not underflow to an all-zero vector.
pub fn sample_dirichlet(alpha: &[f64], rng: &mut Rng) -> Vec<f64> {
    let logs: Vec<f64> = alpha
        .iter()
        .map(|&a| {
            let g = Gamma::new(a + 1.0, 1.0).expect("positive shape").sample(rng);
            let u: f64 = 1.0 - rng.random::<f64>();
            math::ln(g) + math::ln(u) / a
        })
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|&l| math::exp(l - max)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

fn sample_categorical(p: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    // round-off: fall back to the last child with positive mass
    p.iter().rposition(|&x| x > 0.0).unwrap_or(p.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn reward_vector_examples() {
        let c = [(0.9, 1), (0.1, 2)];
        assert_eq!(make_reward_vector(&c, RewardVariant::Scaled).unwrap(), vec![2.0, 0.5]);
        assert_eq!(make_reward_vector(&c, RewardVariant::ZeroOne).unwrap(), vec![1.0, 0.0]);
        let tie = [(0.4, 1), (0.4, 1), (0.4, 1)];
        assert_eq!(make_reward_vector(&tie, RewardVariant::Scaled).unwrap(), vec![2.0, 1.0, 1.0]);
        assert_eq!(make_reward_vector(&[], RewardVariant::Scaled).unwrap_err(), TreeError::NoChildren);
        let partial = [(5.0, 0), (0.2, 4)];
        assert_eq!(make_reward_vector(&partial, RewardVariant::Scaled).unwrap(), vec![0.0, 0.5]);
    }

    #[test]
    fn posterior_update_examples() {
        assert_eq!(posterior_update(&[1.0, 1.0], &[2.0, 0.5]).unwrap(), vec![3.0, 1.5]);
        assert_eq!(posterior_update(&[0.3, 2.0], &[0.0, 0.0]).unwrap(), vec![0.3, 2.0]);
        assert_eq!(posterior_update(&[1.0], &[1.0, 2.0]).unwrap_err(), TreeError::DimensionMismatch(1, 2));
    }

    #[test]
    fn first_backprop() {
        let mut t = CategoryTree::new(vec![2, 3], 1.0);
        t.backpropagate(&[1, 2], 3.0, Strategy::Ucts, RewardVariant::Scaled).unwrap();
        assert_eq!(t.mean_reward(&[1, 2]), Some(3.0));
        assert_eq!(t.visits(&[]), 1);
        assert_eq!(t.mean_reward(&[]), Some(3.0));
        assert_eq!(t.mean_reward(&[0]), None);
    }

    #[test]
    fn leaf_running_mean() {
        let mut t = CategoryTree::new(vec![2], 1.0);
        t.backpropagate(&[0], 1.0, Strategy::Ucts, RewardVariant::Scaled).unwrap();
        t.backpropagate(&[0], 3.0, Strategy::Ucts, RewardVariant::Scaled).unwrap();
        assert_eq!(t.mean_reward(&[0]), Some(2.0));
        assert_eq!(t.visits(&[0]), 2);
    }

    #[test]
    fn interior_mean_is_unweighted_over_children() {
        let mut t = CategoryTree::new(vec![2], 1.0);
        for r in [1.0, 1.0, 1.0] {
            t.backpropagate(&[0], r, Strategy::Ucts, RewardVariant::Scaled).unwrap();
        }
        t.backpropagate(&[1], 5.0, Strategy::Ucts, RewardVariant::Scaled).unwrap();
        assert_eq!(t.mean_reward(&[]), Some(3.0));
        assert_eq!(t.visits(&[]), 4);
    }

    #[test]
    fn bad_paths_rejected() {
        let mut t = CategoryTree::new(vec![2, 3], 1.0);
        assert!(matches!(
            t.backpropagate(&[0], 1.0, Strategy::Ucts, RewardVariant::Scaled),
            Err(TreeError::PathLength { got: 1, levels: 2 })
        ));
        assert!(matches!(
            t.backpropagate(&[0, 3], 1.0, Strategy::Ucts, RewardVariant::Scaled),
            Err(TreeError::ChildOutOfRange { level: 1, .. })
        ));
    }

    #[test]
    fn ucb_hand_example() {
        // r̄ = (0.5, 0.5), visits (1, 3): 0.5 + sqrt(ln 4) beats 0.5 + sqrt(ln 4 / 3)
        let mut t = CategoryTree::new(vec![2], 1.0);
        t.backpropagate(&[0], 0.5, Strategy::Ucts, RewardVariant::Scaled).unwrap();
        for _ in 0..3 {
            t.backpropagate(&[1], 0.5, Strategy::Ucts, RewardVariant::Scaled).unwrap();
        }
        let mut r = rng::seeded(0);
        assert_eq!(t.ucts_select(1.0, 0.0, &mut r), vec![0]);
        let s0 = 0.5 + math::sqrt(math::ln(4.0));
        let s1 = 0.5 + math::sqrt(math::ln(4.0) / 3.0);
        assert!((s0 - 1.6774).abs() < 1e-4 && (s1 - 1.1797).abs() < 1e-4);
    }

    #[test]
    fn greedy_without_exploration_with_low_index_ties() {
        let mut t = CategoryTree::new(vec![3], 1.0);
        for (c, r) in [(0, 1.0), (1, 2.0), (2, 2.0)] {
            t.backpropagate(&[c], r, Strategy::Ucts, RewardVariant::Scaled).unwrap();
        }
        let mut r = rng::seeded(0);
        for _ in 0..20 {
            assert_eq!(t.ucts_select(0.0, 0.0, &mut r), vec![1]);
        }
    }

    #[test]
    fn unvisited_child_first() {
        let mut t = CategoryTree::new(vec![3], 1.0);
        t.backpropagate(&[0], 100.0, Strategy::Ucts, RewardVariant::Scaled).unwrap();
        t.backpropagate(&[2], 50.0, Strategy::Ucts, RewardVariant::Scaled).unwrap();
        let mut r = rng::seeded(1);
        assert_eq!(t.ucts_select(0.0, 0.0, &mut r), vec![1]);
    }

    #[test]
    fn selection_touches_one_node_per_level() {
        let mut t = CategoryTree::new(vec![3, 5, 2, 4], 1.0);
        let mut r = rng::seeded(5);
        let before = t.decisions();
        let p = t.ucts_select(1.4, 0.1, &mut r);
        assert_eq!(p.len(), 4);
        assert_eq!(t.decisions() - before, 4);
        t.dirichlet_select(&mut r);
        assert_eq!(t.decisions() - before, 8);
        assert_eq!(t.leaf_count(), 120);
    }

    #[test]
    fn dirichlet_concentrated_prior() {
        let mut r = rng::seeded(11);
        let mut hits = 0;
        for _ in 0..10_000 {
            let p = sample_dirichlet(&[1e6, 1e-6], &mut r);
            assert!(p.iter().all(|x| x.is_finite()));
            if sample_categorical(&p, &mut r) == 0 {
                hits += 1;
            }
        }
        assert!(hits > 9_990, "{hits}");
    }

    #[test]
    fn dirichlet_selection_is_seeded() {
        let mut t = CategoryTree::new(vec![4, 4, 4], 1.0);
        let a = t.dirichlet_select(&mut rng::seeded(3));
        let b = t.dirichlet_select(&mut rng::seeded(3));
        assert_eq!(a, b);
    }

    #[test]
    fn dirichlet_backprop_updates_every_on_path_node() {
        let mut t = CategoryTree::new(vec![2, 2], 1.0);
        t.backpropagate(&[1, 0], 2.0, Strategy::Dirichlet, RewardVariant::Scaled).unwrap();
        // Only child 1 visited at the root, child 0 at the level-1 node: each is
        // the winner with N = 1, so it receives (1 + 1) / 1.
        assert_eq!(t.alpha(&[]), vec![1.0, 3.0]);
        assert_eq!(t.alpha(&[1]), vec![3.0, 1.0]);
        assert_eq!(t.alpha(&[0]), vec![1.0, 1.0]);
    }

    #[test]
    fn dump_lists_allocated_nodes() {
        let mut t = CategoryTree::new(vec![2, 2], 1.0);
        t.backpropagate(&[1, 1], 1.0, Strategy::Ucts, RewardVariant::Scaled).unwrap();
        t.backpropagate(&[0, 1], 3.0, Strategy::Ucts, RewardVariant::Scaled).unwrap();
        let d = t.dump();
        let paths: Vec<Vec<usize>> = d.nodes.iter().map(|n| n.path.clone()).collect();
        assert_eq!(paths, vec![vec![], vec![0], vec![0, 1], vec![1], vec![1, 1]]);
        assert_eq!(t.most_visited_leaf(), Some(vec![0, 1]));
    }
}
