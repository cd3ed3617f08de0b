//! Exact maximum independent set on the conflict graph of an [`AngleGraph`].
//!
//! Two filters conflict at threshold θ when their angle is strictly below θ.
//! An independent set of the conflict graph is a clique of the complementary
//! compatibility graph, so the solver is a bitset branch-and-bound maximum
//! clique search bounded by greedy sequential coloring.

use super::angle::AngleGraph;
use super::SelectionVector;

type Words = Vec<u64>;

struct CompatGraph {
    n: usize,
    words: usize,
    adj: Vec<u64>,
}

impl CompatGraph {
    fn new(graph: &AngleGraph, theta: f64) -> Self {
        let n = graph.len();
        let words = n.div_ceil(64).max(1);
        let mut adj = vec![0u64; n * words];
        for i in 0..n {
            for j in 0..n {
                if i != j && !(graph.angle(i, j) < theta) {
                    adj[i * words + j / 64] |= 1 << (j % 64);
                }
            }
        }
        Self { n, words, adj }
    }

    #[inline]
    fn row(&self, v: usize) -> &[u64] {
        &self.adj[v * self.words..(v + 1) * self.words]
    }

    fn all(&self) -> Words {
        let mut w = vec![0u64; self.words];
        for v in 0..self.n {
            w[v / 64] |= 1 << (v % 64);
        }
        w
    }
}

#[inline]
fn first_bit(set: &[u64]) -> Option<usize> {
    set.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

#[inline]
fn clear(set: &mut [u64], v: usize) {
    set[v / 64] &= !(1 << (v % 64));
}

#[inline]
fn contains(set: &[u64], v: usize) -> bool {
    set[v / 64] & (1 << (v % 64)) != 0
}

fn is_empty(set: &[u64]) -> bool {
    set.iter().all(|w| *w == 0)
}

fn count(set: &[u64]) -> usize {
    set.iter().map(|w| w.count_ones() as usize).sum()
}

struct CliqueSearch<'a> {
    g: &'a CompatGraph,
    current: Vec<usize>,
    best: usize,
    best_set: Vec<usize>,
    /// Stop as soon as a clique of this size is found.
    target: Option<usize>,
    done: bool,
}

impl<'a> CliqueSearch<'a> {
    fn new(g: &'a CompatGraph, target: Option<usize>) -> Self {
        Self {
            g,
            current: Vec::new(),
            best: target.map_or(0, |t| t.saturating_sub(1)),
            best_set: Vec::new(),
            target,
            done: false,
        }
    }

    /// Greedy sequential coloring; vertices come out grouped by ascending
    /// color, so `colors[i]` bounds the clique size within `order[..=i]`.
    fn color(&self, p: &[u64]) -> (Vec<usize>, Vec<usize>) {
        let mut uncolored = p.to_vec();
        let mut order = Vec::with_capacity(count(p));
        let mut colors = Vec::with_capacity(order.capacity());
        let mut q = vec![0u64; p.len()];
        let mut color = 0;
        while !is_empty(&uncolored) {
            color += 1;
            q.copy_from_slice(&uncolored);
            while let Some(v) = first_bit(&q) {
                clear(&mut uncolored, v);
                clear(&mut q, v);
                for (qw, aw) in q.iter_mut().zip(self.g.row(v)) {
                    *qw &= !aw;
                }
                order.push(v);
                colors.push(color);
            }
        }
        (order, colors)
    }

    fn expand(&mut self, mut p: Words) {
        let (order, colors) = self.color(&p);
        for idx in (0..order.len()).rev() {
            if self.done || self.current.len() + colors[idx] <= self.best {
                return;
            }
            let v = order[idx];
            self.current.push(v);
            let next: Words = p.iter().zip(self.g.row(v)).map(|(a, b)| a & b).collect();
            if is_empty(&next) {
                if self.current.len() > self.best {
                    self.best = self.current.len();
                    self.best_set = self.current.clone();
                    if self.target.is_some_and(|t| self.best >= t) {
                        self.done = true;
                    }
                }
            } else {
                self.expand(next);
            }
            self.current.pop();
            clear(&mut p, v);
        }
    }
}

fn max_clique_size(g: &CompatGraph, p: Words) -> usize {
    if is_empty(&p) {
        return 0;
    }
    let mut s = CliqueSearch::new(g, None);
    s.expand(p);
    s.best
}

fn has_clique(g: &CompatGraph, p: Words, size: usize) -> bool {
    if size == 0 {
        return true;
    }
    if count(&p) < size {
        return false;
    }
    let mut s = CliqueSearch::new(g, Some(size));
    s.expand(p);
    s.done
}

/// Lexicographically smallest clique of size `size` within `p`.
fn lex_smallest_clique(g: &CompatGraph, mut p: Words, size: usize) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(size);
    for v in 0..g.n {
        if chosen.len() == size {
            break;
        }
        if !contains(&p, v) {
            continue;
        }
        let mut rest: Words = p.iter().zip(g.row(v)).map(|(a, b)| a & b).collect();
        for u in 0..=v {
            if contains(&rest, u) {
                clear(&mut rest, u);
            }
        }
        if has_clique(g, rest.clone(), size - chosen.len() - 1) {
            chosen.push(v);
            p = rest;
        }
    }
    chosen
}

/// Maximum-cardinality set with no pair at an angle strictly below `theta`;
/// the lexicographically smallest among all optima.
pub fn max_independent_set(graph: &AngleGraph, theta: f64) -> SelectionVector {
    let g = CompatGraph::new(graph, theta);
    if g.n == 0 {
        return SelectionVector::from_sorted(Vec::new(), 0);
    }
    let size = max_clique_size(&g, g.all());
    let ids = lex_smallest_clique(&g, g.all(), size);
    SelectionVector::from_sorted(ids, graph.len())
}

/// Whether an independent set of at least `n` filters exists at `theta`.
pub fn independent_set_at_least(graph: &AngleGraph, theta: f64, n: usize) -> bool {
    let g = CompatGraph::new(graph, theta);
    has_clique(&g, g.all(), n)
}
