//! Axis-aligned binary trees grown on presorted columns.
//!
//! Each feature's sample order is sorted once per training matrix and shared
//! by every tree of an ensemble. While growing, the node's samples occupy the
//! same contiguous range in every feature's order, and splits partition those
//! ranges stably, so no node ever re-sorts.

use ndarray::{ArrayView1, ArrayView2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub(crate) struct SortedColumns {
    n: usize,
    p: usize,
    /// Column-major copy of the training values.
    values: Vec<f64>,
    /// Per feature, sample indices in ascending value order.
    order: Vec<u32>,
}

impl SortedColumns {
    pub(crate) fn new(x: ArrayView2<f64>) -> Self {
        let (n, p) = x.dim();
        let mut values = Vec::with_capacity(n * p);
        for f in 0..p {
            values.extend(x.column(f).iter().copied());
        }
        let mut order = Vec::with_capacity(n * p);
        for f in 0..p {
            let col = &values[f * n..(f + 1) * n];
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
            order.extend(idx);
        }
        Self { n, p, values, order }
    }

    pub(crate) fn n_features(&self) -> usize {
        self.p
    }

    #[inline]
    fn value(&self, f: usize, i: usize) -> f64 {
        self.values[f * self.n + i]
    }
}

/// Sufficient statistics of a node's samples for split scoring.
pub(crate) trait SplitStats: Clone {
    fn empty(&self) -> Self;
    /// Empties in place, keeping allocations.
    fn reset(&mut self);
    /// Copies `other` in place, keeping allocations.
    fn assign(&mut self, other: &Self);
    fn add(&mut self, sample: usize, weight: u32);
    fn remove(&mut self, sample: usize, weight: u32);
    /// Split quality contribution of this side; larger is better.
    fn score(&self) -> f64;
    fn is_pure(&self) -> bool;
}

/// Weighted class counts; the score `Σ n_c² / n` is the Gini criterion up to
/// terms shared by every split of a node.
#[derive(Clone)]
pub(crate) struct ClassCounts<'a> {
    labels: &'a [usize],
    pub(crate) counts: Vec<u64>,
    total: u64,
    sumsq: u64,
}

impl<'a> ClassCounts<'a> {
    pub(crate) fn new(labels: &'a [usize], n_classes: usize) -> Self {
        Self {
            labels,
            counts: vec![0; n_classes],
            total: 0,
            sumsq: 0,
        }
    }

    /// Majority class, smallest index on ties.
    pub(crate) fn majority(&self) -> usize {
        argmax_first(&self.counts)
    }
}

pub(crate) fn argmax_first<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl SplitStats for ClassCounts<'_> {
    fn empty(&self) -> Self {
        Self::new(self.labels, self.counts.len())
    }

    fn reset(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
        self.total = 0;
        self.sumsq = 0;
    }

    fn assign(&mut self, other: &Self) {
        self.counts.copy_from_slice(&other.counts);
        self.total = other.total;
        self.sumsq = other.sumsq;
    }

    #[inline]
    fn add(&mut self, sample: usize, weight: u32) {
        let w = weight as u64;
        let c = &mut self.counts[self.labels[sample]];
        self.sumsq += (2 * *c + w) * w;
        *c += w;
        self.total += w;
    }

    #[inline]
    fn remove(&mut self, sample: usize, weight: u32) {
        let w = weight as u64;
        let c = &mut self.counts[self.labels[sample]];
        *c -= w;
        self.sumsq -= (2 * *c + w) * w;
        self.total -= w;
    }

    #[inline]
    fn score(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.sumsq as f64 / self.total as f64
        }
    }

    fn is_pure(&self) -> bool {
        self.counts.iter().filter(|&&c| c > 0).count() <= 1
    }
}

/// Residual sums for least-squares regression trees, with the Hessian sum
/// kept for Newton leaf values.
#[derive(Clone)]
pub(crate) struct ResidualSums<'a> {
    residuals: &'a [f64],
    hessians: &'a [f64],
    pub(crate) sum: f64,
    pub(crate) hessian: f64,
    count: u64,
}

impl<'a> ResidualSums<'a> {
    pub(crate) fn new(residuals: &'a [f64], hessians: &'a [f64]) -> Self {
        Self {
            residuals,
            hessians,
            sum: 0.0,
            hessian: 0.0,
            count: 0,
        }
    }
}

impl SplitStats for ResidualSums<'_> {
    fn empty(&self) -> Self {
        Self::new(self.residuals, self.hessians)
    }

    fn reset(&mut self) {
        self.sum = 0.0;
        self.hessian = 0.0;
        self.count = 0;
    }

    fn assign(&mut self, other: &Self) {
        self.sum = other.sum;
        self.hessian = other.hessian;
        self.count = other.count;
    }

    #[inline]
    fn add(&mut self, sample: usize, weight: u32) {
        let w = weight as f64;
        self.sum += w * self.residuals[sample];
        self.hessian += w * self.hessians[sample];
        self.count += weight as u64;
    }

    #[inline]
    fn remove(&mut self, sample: usize, weight: u32) {
        let w = weight as f64;
        self.sum -= w * self.residuals[sample];
        self.hessian -= w * self.hessians[sample];
        self.count -= weight as u64;
    }

    #[inline]
    fn score(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum * self.sum / self.count as f64
        }
    }

    fn is_pure(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features examined per node before accepting the best valid split.
    pub max_features: usize,
}

#[derive(Debug, Clone)]
pub(crate) enum Node<L> {
    Leaf(L),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct Tree<L> {
    nodes: Vec<Node<L>>,
}

impl<L: Copy> Tree<L> {
    #[cfg(test)]
    pub(crate) fn from_nodes(nodes: Vec<Node<L>>) -> Self {
        Self { nodes }
    }

    pub(crate) fn predict_row(&self, row: ArrayView1<f64>) -> L {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn depth(&self) -> usize {
        fn walk<L>(nodes: &[Node<L>], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

struct Best {
    score: f64,
    feature: usize,
    /// Number of samples going left.
    n_left: usize,
    threshold: f64,
}

/// Grows one tree. `weights[i]` is the multiplicity of sample `i`
/// (bootstrap counts); zero-weight samples are left out.
pub(crate) fn grow<S, L, F>(
    columns: &SortedColumns,
    weights: &[u32],
    root: &S,
    params: GrowParams,
    rng: &mut ChaCha8Rng,
    leaf: F,
) -> Tree<L>
where
    S: SplitStats,
    F: Fn(&S) -> L,
{
    let (n, p) = (columns.n, columns.p);
    let m = weights.iter().filter(|&&w| w > 0).count();
    let mut order = Vec::with_capacity(m * p);
    for f in 0..p {
        order.extend(columns.order[f * n..(f + 1) * n].iter().filter(|&&i| weights[i as usize] > 0));
    }
    let mut goes_left = vec![false; n];
    let mut scratch: Vec<u32> = Vec::with_capacity(m);
    let mut buffers = SplitBuffers {
        features: (0..p).collect(),
        candidates: Vec::with_capacity(p),
        left: root.empty(),
        right: root.empty(),
    };
    let blank = root.empty();
    let mut stats = root.empty();
    let mut nodes: Vec<Node<L>> = Vec::new();
    // (node slot, start, end, depth)
    let mut stack = vec![(0usize, 0usize, m, 0usize)];
    nodes.push(Node::Leaf(leaf(&blank)));

    while let Some((slot, start, end, depth)) = stack.pop() {
        stats.reset();
        for &i in &order[start..end] {
            stats.add(i as usize, weights[i as usize]);
        }
        let stop = stats.is_pure()
            || end - start < params.min_samples_split.max(2)
            || params.max_depth.is_some_and(|d| depth >= d);
        let best = if stop {
            None
        } else {
            best_split(columns, &order, m, start, end, weights, &stats, params, rng, &mut buffers)
        };
        let Some(best) = best else {
            nodes[slot] = Node::Leaf(leaf(&stats));
            continue;
        };

        let seg = best.feature * m;
        for &i in &order[seg + start..seg + end] {
            goes_left[i as usize] = false;
        }
        for &i in &order[seg + start..seg + start + best.n_left] {
            goes_left[i as usize] = true;
        }
        for f in (0..p).filter(|&f| f != best.feature) {
            let range = f * m + start..f * m + end;
            scratch.clear();
            let mut write = range.start;
            for r in range.clone() {
                let i = order[r];
                if goes_left[i as usize] {
                    order[write] = i;
                    write += 1;
                } else {
                    scratch.push(i);
                }
            }
            order[write..range.end].copy_from_slice(&scratch);
        }

        let left = nodes.len();
        nodes.push(Node::Leaf(leaf(&blank)));
        let right = nodes.len();
        nodes.push(Node::Leaf(leaf(&blank)));
        nodes[slot] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        let mid = start + best.n_left;
        stack.push((right, mid, end, depth + 1));
        stack.push((left, start, mid, depth + 1));
    }
    Tree { nodes }
}

struct SplitBuffers<S> {
    features: Vec<usize>,
    candidates: Vec<usize>,
    left: S,
    right: S,
}

#[allow(clippy::too_many_arguments)]
fn best_split<S: SplitStats>(
    columns: &SortedColumns,
    order: &[u32],
    m: usize,
    start: usize,
    end: usize,
    weights: &[u32],
    stats: &S,
    params: GrowParams,
    rng: &mut ChaCha8Rng,
    buffers: &mut SplitBuffers<S>,
) -> Option<Best> {
    let p = columns.p;
    let k = params.max_features.clamp(1, p);
    let SplitBuffers {
        features,
        candidates,
        left,
        right,
    } = buffers;
    candidates.clear();
    if k >= p {
        candidates.extend(0..p);
    } else {
        features.iter_mut().enumerate().for_each(|(i, f)| *f = i);
        for i in 0..p - 1 {
            let j = rng.random_range(i..p);
            features.swap(i, j);
        }
        candidates.extend_from_slice(&features[..k]);
        candidates.sort_unstable();
        candidates.extend_from_slice(&features[k..]);
    }

    let mut best: Option<Best> = None;
    for (visited, &f) in candidates.iter().enumerate() {
        // Keep drawing features past the budget only while no valid split exists.
        if visited >= k && best.is_some() {
            break;
        }
        let seg = &order[f * m + start..f * m + end];
        left.reset();
        right.assign(stats);
        for pos in 0..seg.len() - 1 {
            let i = seg[pos] as usize;
            left.add(i, weights[i]);
            right.remove(i, weights[i]);
            let a = columns.value(f, i);
            let b = columns.value(f, seg[pos + 1] as usize);
            if a < b {
                let score = left.score() + right.score();
                if best.as_ref().is_none_or(|bs| score > bs.score) {
                    let mut threshold = a + (b - a) / 2.0;
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(Best {
                        score,
                        feature: f,
                        n_left: pos + 1,
                        threshold,
                    });
                }
            }
        }
    }
    best
}
