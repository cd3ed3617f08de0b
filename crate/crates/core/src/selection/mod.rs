//! Filter subset selection on the spectral-angle graph: the binary-search
//! max-min selection, exhaustive search, and uniform spacing baselines.

mod angle;
mod mis;

use serde::{Deserialize, Serialize};

pub use angle::{build_adjacency, spectral_angle, AngleGraph};
pub use mis::{independent_set_at_least, max_independent_set};

use crate::error::{Error, Result};
use crate::spectral::FilterCatalog;

pub const DEFAULT_COMBINATION_CAP: u128 = 10_000_000;

/// Sorted set of selected filter ids out of `k` candidates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SelectionVector {
    ids: Vec<usize>,
    k: usize,
}

impl SelectionVector {
    pub fn new(mut ids: Vec<usize>, k: usize) -> Result<Self> {
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("duplicate filter id in selection".into()));
        }
        if let Some(&bad) = ids.iter().find(|&&i| i >= k) {
            return Err(Error::InvalidConfig(format!("filter id {bad} out of range for {k} filters")));
        }
        Ok(Self { ids, k })
    }

    pub(crate) fn from_sorted(ids: Vec<usize>, k: usize) -> Self {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        Self { ids, k }
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.ids.binary_search(&id).is_ok()
    }

    pub fn is_subset_of(&self, other: &SelectionVector) -> bool {
        self.ids.iter().all(|&i| other.contains(i))
    }

    /// Binary indicator vector of length `k`.
    pub fn to_binary(&self) -> Vec<bool> {
        let mut s = vec![false; self.k];
        self.ids.iter().for_each(|&i| s[i] = true);
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fbs,
    Full,
    Uniform,
    Cfbs,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Fbs => "fbs",
            Method::Full => "full",
            Method::Uniform => "uniform",
            Method::Cfbs => "cfbs",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub selection: SelectionVector,
    /// Smallest angle between selected filters; `None` for a single filter.
    pub min_pairwise_angle: Option<f64>,
    /// Threshold θ* found by the binary search (FBS only).
    pub threshold: Option<f64>,
    pub method: Method,
    pub iterations: usize,
}

/// Bisection bounds over indices into the sorted unique edge weights.
#[derive(Debug, Clone)]
pub struct BinarySearchState {
    weights: Vec<f64>,
    lower: usize,
    upper: usize,
}

impl BinarySearchState {
    pub fn new(weights: Vec<f64>) -> Self {
        let upper = weights.len().saturating_sub(1);
        Self {
            weights,
            lower: 0,
            upper,
        }
    }

    pub fn theta_min(&self) -> f64 {
        self.weights[self.lower]
    }

    pub fn theta_max(&self) -> f64 {
        self.weights[self.upper]
    }

    /// Upper midpoint.
    pub fn theta_curr(&self) -> f64 {
        self.weights[self.mid()]
    }

    fn mid(&self) -> usize {
        self.lower + (self.upper - self.lower).div_ceil(2)
    }

    pub fn converged(&self) -> bool {
        self.lower >= self.upper
    }

    /// Feasible: raise the lower bound to the tested angle. Infeasible:
    /// drop the upper bound below it.
    pub fn update(&mut self, feasible: bool) {
        let mid = self.mid();
        if feasible {
            self.lower = mid;
        } else {
            self.upper = mid - 1;
        }
    }
}

fn check_n(n: usize, k: usize) -> Result<()> {
    if n == 0 || n > k {
        return Err(Error::InvalidN { n, available: k });
    }
    Ok(())
}

/// Selects `n` filters maximizing the minimal pairwise spectral angle by
/// bisection over the edge weights with exact independent-set feasibility
/// checks.
pub fn fbs_select(graph: &AngleGraph, n: usize) -> Result<SelectionResult> {
    let k = graph.len();
    check_n(n, k)?;
    let weights = graph.weights();
    if n == 1 {
        // Any single filter is optimal.
        return Ok(SelectionResult {
            selection: SelectionVector::from_sorted(vec![0], k),
            min_pairwise_angle: None,
            threshold: weights.last().copied(),
            method: Method::Fbs,
            iterations: 0,
        });
    }
    // The smallest weight is always feasible: nothing conflicts below it.
    let mut state = BinarySearchState::new(weights);
    let mut iterations = 0;
    while !state.converged() {
        let feasible = independent_set_at_least(graph, state.theta_curr(), n);
        state.update(feasible);
        iterations += 1;
    }
    let theta = state.theta_min();
    let mis = max_independent_set(graph, theta);
    let selection = trim_to_n(&mis, graph, n)?;
    Ok(SelectionResult {
        min_pairwise_angle: graph.min_pairwise(selection.ids()),
        selection,
        threshold: Some(theta),
        method: Method::Fbs,
        iterations,
    })
}

/// Shrinks a selection to `n` members by repeatedly dropping the member
/// closest to the rest (larger id on ties).
pub fn trim_to_n(selection: &SelectionVector, graph: &AngleGraph, n: usize) -> Result<SelectionVector> {
    if n == 0 || n > selection.len() {
        return Err(Error::InvalidN {
            n,
            available: selection.len(),
        });
    }
    let mut ids = selection.ids().to_vec();
    while ids.len() > n {
        let mut victim = 0;
        let mut victim_dist = f64::INFINITY;
        for (pos, &i) in ids.iter().enumerate() {
            let d = ids
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| graph.angle(i, j))
                .fold(f64::INFINITY, f64::min);
            // Ascending ids: `<=` lets the larger id win ties.
            if d <= victim_dist {
                victim = pos;
                victim_dist = d;
            }
        }
        ids.remove(victim);
    }
    Ok(SelectionVector::from_sorted(ids, selection.k()))
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Exhaustive search over all `n`-subsets for the largest minimal pairwise
/// angle; ties resolve to the lexicographically smallest subset.
pub fn full_search_select(graph: &AngleGraph, n: usize, combination_cap: u128) -> Result<SelectionResult> {
    let k = graph.len();
    check_n(n, k)?;
    let combinations = binomial(k, n);
    if combinations > combination_cap {
        return Err(Error::TooManyCombinations {
            combinations,
            cap: combination_cap,
        });
    }
    let mut search = FullSearch {
        graph,
        n,
        current: Vec::with_capacity(n),
        best: None,
        visited: 0,
    };
    search.descend(0, f64::INFINITY);
    let (ids, _) = search.best.expect("at least one subset");
    Ok(SelectionResult {
        min_pairwise_angle: graph.min_pairwise(&ids),
        selection: SelectionVector::from_sorted(ids, k),
        threshold: None,
        method: Method::Full,
        iterations: search.visited,
    })
}

struct FullSearch<'a> {
    graph: &'a AngleGraph,
    n: usize,
    current: Vec<usize>,
    best: Option<(Vec<usize>, f64)>,
    visited: usize,
}

impl FullSearch<'_> {
    fn descend(&mut self, from: usize, running_min: f64) {
        if self.current.len() == self.n {
            self.visited += 1;
            if self.best.as_ref().is_none_or(|(_, b)| running_min > *b) {
                self.best = Some((self.current.clone(), running_min));
            }
            return;
        }
        let remaining = self.n - self.current.len();
        for v in from..=self.graph.len() - remaining {
            let m = self
                .current
                .iter()
                .map(|&u| self.graph.angle(u, v))
                .fold(running_min, f64::min);
            // Only a strictly better subset can replace the incumbent.
            if self.best.as_ref().is_some_and(|(_, b)| m <= *b) {
                continue;
            }
            self.current.push(v);
            self.descend(v + 1, m);
            self.current.pop();
        }
    }
}

/// Evenly spaced centers over the widest bandwidth family.
pub fn uniform_select(catalog: &FilterCatalog, n: usize, graph: &AngleGraph) -> Result<SelectionResult> {
    if catalog.is_empty() {
        return Err(Error::EmptyCatalog);
    }
    if graph.len() != catalog.len() {
        return Err(Error::LengthMismatch {
            expected: catalog.len(),
            actual: graph.len(),
        });
    }
    let widest = catalog
        .filters()
        .iter()
        .map(|f| f.bandwidth_nm)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut family: Vec<_> = catalog.filters().iter().filter(|f| f.bandwidth_nm == widest).collect();
    family.sort_by(|a, b| a.center_nm.total_cmp(&b.center_nm).then(a.id.cmp(&b.id)));
    check_n(n, family.len())?;
    let lo = family[0].center_nm;
    let hi = family[family.len() - 1].center_nm;
    let mut taken = vec![false; family.len()];
    let mut ids = Vec::with_capacity(n);
    for t in 0..n {
        let target = if n == 1 {
            (lo + hi) / 2.0
        } else {
            lo + (hi - lo) * t as f64 / (n - 1) as f64
        };
        // Family is sorted by center, so the first minimum is the lower center.
        let (pos, _) = family
            .iter()
            .enumerate()
            .filter(|(p, _)| !taken[*p])
            .map(|(p, f)| (p, (f.center_nm - target).abs()))
            .fold(None::<(usize, f64)>, |best, (p, d)| match best {
                Some((_, bd)) if bd <= d => best,
                _ => Some((p, d)),
            })
            .expect("n does not exceed family size");
        taken[pos] = true;
        ids.push(family[pos].id);
    }
    let selection = SelectionVector::new(ids, catalog.len())?;
    Ok(SelectionResult {
        min_pairwise_angle: graph.min_pairwise(selection.ids()),
        selection,
        threshold: None,
        method: Method::Uniform,
        iterations: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::WavelengthGrid;

    fn three_node() -> AngleGraph {
        AngleGraph::from_matrix(&[vec![0.0, 0.1, 0.2], vec![0.1, 0.0, 0.3], vec![0.2, 0.3, 0.0]]).unwrap()
    }

    #[test]
    fn fbs_three_nodes() {
        let g = three_node();
        // Full search over the three pairs: {1,2} has the largest angle.
        let best_pair = [(0, 1), (0, 2), (1, 2)]
            .into_iter()
            .max_by(|a, b| g.angle(a.0, a.1).total_cmp(&g.angle(b.0, b.1)))
            .unwrap();
        assert_eq!(best_pair, (1, 2));
        let r = fbs_select(&g, 2).unwrap();
        assert_eq!(r.selection.ids(), &[1, 2]);
        assert_eq!(r.threshold, Some(0.3));
        assert_eq!(r.min_pairwise_angle, Some(0.3));
    }

    #[test]
    fn fbs_all_and_single() {
        let g = three_node();
        let all = fbs_select(&g, 3).unwrap();
        assert_eq!(all.selection.ids(), &[0, 1, 2]);
        assert_eq!(all.threshold, Some(0.1));
        assert_eq!(all.min_pairwise_angle, Some(0.1));
        let one = fbs_select(&g, 1).unwrap();
        assert_eq!(one.selection.ids(), &[0]);
        assert_eq!(one.threshold, Some(0.3));
        assert!(matches!(fbs_select(&g, 0), Err(Error::InvalidN { .. })));
        assert!(matches!(fbs_select(&g, 4), Err(Error::InvalidN { .. })));
    }

    #[test]
    fn bisection_state_bounds() {
        let mut s = BinarySearchState::new(vec![0.1, 0.2, 0.3, 0.4]);
        assert_eq!((s.theta_min(), s.theta_max(), s.theta_curr()), (0.1, 0.4, 0.3));
        s.update(false);
        assert_eq!((s.theta_min(), s.theta_max()), (0.1, 0.2));
        s.update(true);
        assert!(s.converged());
        assert_eq!(s.theta_min(), 0.2);
    }

    #[test]
    fn trim_identity_and_closest_pair() {
        let g = three_node();
        let all = SelectionVector::new(vec![0, 1, 2], 3).unwrap();
        assert_eq!(trim_to_n(&all, &g, 3).unwrap(), all);
        // 0 and 1 are the closest pair (0.1); each member's min distance is
        // 0: 0.1, 1: 0.1, 2: 0.2, so the larger of {0, 1} goes first.
        assert_eq!(trim_to_n(&all, &g, 2).unwrap().ids(), &[0, 2]);
    }

    #[test]
    fn trim_to_one_keeps_the_most_isolated_survivor() {
        let g = three_node();
        let all = SelectionVector::new(vec![0, 1, 2], 3).unwrap();
        // Brute force the removal sequence: drop 1, then from {0, 2} the
        // tie at 0.2 removes 2.
        assert_eq!(trim_to_n(&all, &g, 1).unwrap().ids(), &[0]);
    }

    #[test]
    fn full_search_pairs_and_caps() {
        let g = three_node();
        assert_eq!(full_search_select(&g, 2, DEFAULT_COMBINATION_CAP).unwrap().selection.ids(), &[1, 2]);
        assert_eq!(full_search_select(&g, 3, DEFAULT_COMBINATION_CAP).unwrap().selection.ids(), &[0, 1, 2]);
        assert_eq!(binomial(150, 9), 82_947_113_349_100);
        let big = AngleGraph::from_matrix(&vec![vec![1.0; 150]; 150]).unwrap();
        match full_search_select(&big, 9, DEFAULT_COMBINATION_CAP) {
            Err(Error::TooManyCombinations { combinations, .. }) => assert_eq!(combinations, 82_947_113_349_100),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn full_search_five_two_is_max_pair() {
        let angles = [
            [0.0, 0.4, 0.9, 0.3, 0.5],
            [0.4, 0.0, 0.2, 1.1, 0.6],
            [0.9, 0.2, 0.0, 0.7, 1.1],
            [0.3, 1.1, 0.7, 0.0, 0.8],
            [0.5, 0.6, 1.1, 0.8, 0.0],
        ];
        let g = AngleGraph::from_matrix(&angles.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap();
        let mut best = (0, 0, f64::NEG_INFINITY);
        for i in 0..5 {
            for j in i + 1..5 {
                if angles[i][j] > best.2 {
                    best = (i, j, angles[i][j]);
                }
            }
        }
        let r = full_search_select(&g, 2, DEFAULT_COMBINATION_CAP).unwrap();
        assert_eq!(r.selection.ids(), &[best.0, best.1]);
        assert_eq!(r.min_pairwise_angle, Some(1.1));
    }

    fn uniform_catalog(step: f64) -> (FilterCatalog, AngleGraph) {
        let grid = WavelengthGrid::new(300.0, 1.0, 501).unwrap();
        let cat = crate::dataset::generate_catalog(&grid, &[10.0, 50.0], step).unwrap();
        let g = AngleGraph::from_matrix(&vec![vec![1.0; cat.len()]; cat.len()]).unwrap();
        (cat, g)
    }

    fn centers(cat: &FilterCatalog, r: &SelectionResult) -> Vec<f64> {
        r.selection.ids().iter().map(|&i| cat.get(i).unwrap().center_nm).collect()
    }

    #[test]
    fn uniform_endpoints_and_midpoint() {
        let (cat, g) = uniform_catalog(50.0);
        let r = uniform_select(&cat, 2, &g).unwrap();
        assert_eq!(centers(&cat, &r), vec![325.0, 775.0]);
        assert!(r.selection.ids().iter().all(|&i| cat.get(i).unwrap().bandwidth_nm == 50.0));
        let r = uniform_select(&cat, 1, &g).unwrap();
        // Midpoint 550 is equidistant from 525 and 575; the lower wins.
        assert_eq!(centers(&cat, &r), vec![525.0]);
    }

    #[test]
    fn uniform_three_matches_nearest_center_oracle() {
        for step in [25.0, 50.0] {
            let (cat, g) = uniform_catalog(step);
            let family: Vec<f64> = cat
                .filters()
                .iter()
                .filter(|f| f.bandwidth_nm == 50.0)
                .map(|f| f.center_nm)
                .collect();
            let expected: Vec<f64> = [325.0, 550.0, 775.0]
                .iter()
                .map(|t| {
                    *family
                        .iter()
                        .min_by(|a, b| (*a - t).abs().total_cmp(&(*b - t).abs()))
                        .unwrap()
                })
                .collect();
            let r = uniform_select(&cat, 3, &g).unwrap();
            assert_eq!(centers(&cat, &r), expected, "step {step}");
        }
        let (cat, g) = uniform_catalog(25.0);
        assert_eq!(centers(&cat, &uniform_select(&cat, 3, &g).unwrap()), vec![325.0, 550.0, 775.0]);
        let (cat, g) = uniform_catalog(50.0);
        assert_eq!(centers(&cat, &uniform_select(&cat, 3, &g).unwrap()), vec![325.0, 525.0, 775.0]);
        assert!(matches!(uniform_select(&cat, 11, &g), Err(Error::InvalidN { .. })));
    }
}
