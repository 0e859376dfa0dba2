//! Binary Gini trees: exhaustive CART-style splits and randomized
//! (extremely randomized) splits share one growth loop.

use crate::records::Label;
use crate::rng::{bounded, StreamRng};
use rand::RngCore;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(Label),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub(crate) fn predict_row(&self, row: &[f64]) -> Label {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(label) => return label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

pub(crate) enum Splitter<'r> {
    /// Every midpoint of every feature; first-best by (feature, threshold).
    Best,
    /// One uniform threshold per sampled non-constant feature.
    Random {
        rng: &'r mut StreamRng,
        max_features: usize,
    },
}

fn gini(n0: usize, n1: usize) -> f64 {
    let n = (n0 + n1) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (p0, p1) = (n0 as f64 / n, n1 as f64 / n);
    1.0 - p0 * p0 - p1 * p1
}

fn weighted_gini(l0: usize, l1: usize, r0: usize, r1: usize) -> f64 {
    let (nl, nr) = ((l0 + l1) as f64, (r0 + r1) as f64);
    (nl * gini(l0, l1) + nr * gini(r0, r1)) / (nl + nr)
}

fn counts(y: &[Label], idx: &[usize]) -> (usize, usize) {
    let n1 = idx.iter().filter(|&&i| y[i] == Label::Graduated).count();
    (idx.len() - n1, n1)
}

fn majority(n0: usize, n1: usize) -> Label {
    if n1 > n0 {
        Label::Graduated
    } else {
        Label::Dropout
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

fn best_split(x: &[Vec<f64>], y: &[Label], idx: &[usize]) -> Option<(usize, f64)> {
    let n_features = x[idx[0]].len();
    let (t0, t1) = counts(y, idx);
    let mut order = idx.to_vec();
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..n_features {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        let (mut l0, mut l1) = (0, 0);
        for w in 0..order.len() - 1 {
            match y[order[w]] {
                Label::Dropout => l0 += 1,
                Label::Graduated => l1 += 1,
            }
            let (a, b) = (x[order[w]][f], x[order[w + 1]][f]);
            if a == b {
                continue;
            }
            let imp = weighted_gini(l0, l1, t0 - l0, t1 - l1);
            if best.map_or(true, |(bi, _, _)| imp < bi) {
                best = Some((imp, f, midpoint(a, b)));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

fn unit_f64(rng: &mut StreamRng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn random_split(
    x: &[Vec<f64>],
    y: &[Label],
    idx: &[usize],
    rng: &mut StreamRng,
    max_features: usize,
) -> Option<(usize, f64)> {
    let n_features = x[idx[0]].len();
    let mut features: Vec<usize> = (0..n_features).collect();
    let mut best: Option<(f64, usize, f64)> = None;
    let mut tried = 0;
    for i in 0..n_features {
        if tried == max_features {
            break;
        }
        let j = i + bounded(rng, (n_features - i) as u64) as usize;
        features.swap(i, j);
        let f = features[i];
        let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
            (lo.min(x[r][f]), hi.max(x[r][f]))
        });
        if hi <= lo {
            continue;
        }
        tried += 1;
        let mut threshold = lo + unit_f64(rng) * (hi - lo);
        if threshold >= hi {
            threshold = lo;
        }
        let (mut l0, mut l1, mut r0, mut r1) = (0, 0, 0, 0);
        for &r in idx {
            match (x[r][f] <= threshold, y[r]) {
                (true, Label::Dropout) => l0 += 1,
                (true, Label::Graduated) => l1 += 1,
                (false, Label::Dropout) => r0 += 1,
                (false, Label::Graduated) => r1 += 1,
            }
        }
        let imp = weighted_gini(l0, l1, r0, r1);
        if best.map_or(true, |(bi, _, _)| imp < bi) {
            best = Some((imp, f, threshold));
        }
    }
    best.map(|(_, f, t)| (f, t))
}

/// Grows a tree over all rows of `x`. Impure nodes split even at zero Gini
/// gain, which is what lets a depth-2 tree separate XOR.
pub(crate) fn grow(x: &[Vec<f64>], y: &[Label], params: TreeParams, mut splitter: Splitter<'_>) -> Tree {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    let mut nodes = vec![Node::Leaf(Label::Dropout)];
    // (node slot, start, end, depth)
    let mut stack = vec![(0usize, 0usize, idx.len(), 0usize)];
    while let Some((slot, start, end, depth)) = stack.pop() {
        let part = &mut idx[start..end];
        let (n0, n1) = counts(y, part);
        let leaf = Node::Leaf(majority(n0, n1));
        let stop = n0 == 0
            || n1 == 0
            || part.len() < params.min_samples_split.max(2)
            || params.max_depth.is_some_and(|d| depth >= d);
        if stop {
            nodes[slot] = leaf;
            continue;
        }
        let found = match &mut splitter {
            Splitter::Best => best_split(x, y, part),
            Splitter::Random { rng, max_features } => random_split(x, y, part, rng, *max_features),
        };
        let Some((feature, threshold)) = found else {
            nodes[slot] = leaf;
            continue;
        };
        // Stable partition keeps row order deterministic.
        let (mut left, mut right): (Vec<usize>, Vec<usize>) =
            part.iter().partition(|&&r| x[r][feature] <= threshold);
        let n_left = left.len();
        if n_left == 0 || n_left == part.len() {
            nodes[slot] = leaf;
            continue;
        }
        left.append(&mut right);
        part.copy_from_slice(&left);
        let (l, r) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::Leaf(Label::Dropout));
        nodes.push(Node::Leaf(Label::Dropout));
        nodes[slot] = Node::Split {
            feature,
            threshold,
            left: l,
            right: r,
        };
        stack.push((r, start + n_left, end, depth + 1));
        stack.push((l, start, start + n_left, depth + 1));
    }
    Tree { nodes }
}
