//! Minimum dominating sets: exact branch and bound for small graphs, greedy
//! cover with a 2-packing lower bound for large ones.

use std::collections::BinaryHeap;

/// Undirected graph given by closed neighbourhoods (`v ∈ N[v]`).
pub trait Neighbourhoods {
    fn vertex_count(&self) -> usize;
    fn closed(&self, v: usize) -> &[usize];
}

/// Plain adjacency-list graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyGraph {
    closed: Vec<Vec<usize>>,
}

impl AdjacencyGraph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut closed: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
        for &(u, v) in edges {
            if u != v {
                closed[u].push(v);
                closed[v].push(u);
            }
        }
        for c in &mut closed {
            c.sort_unstable();
            c.dedup();
        }
        AdjacencyGraph { closed }
    }
}

impl Neighbourhoods for AdjacencyGraph {
    fn vertex_count(&self) -> usize {
        self.closed.len()
    }

    fn closed(&self, v: usize) -> &[usize] {
        &self.closed[v]
    }
}

pub fn is_dominating<G: Neighbourhoods>(g: &G, set: &[usize]) -> bool {
    let mut dominated = vec![false; g.vertex_count()];
    for &v in set {
        for &u in g.closed(v) {
            dominated[u] = true;
        }
    }
    dominated.into_iter().all(|x| x)
}

/// Greedy cover: repeatedly take the vertex dominating the most undominated
/// vertices (ties to the smallest index).
pub fn greedy<G: Neighbourhoods>(g: &G) -> Vec<usize> {
    let n = g.vertex_count();
    let mut dominated = vec![false; n];
    let mut remaining = n;
    let mut heap: BinaryHeap<(usize, std::cmp::Reverse<usize>)> = (0..n)
        .map(|v| (g.closed(v).len(), std::cmp::Reverse(v)))
        .collect();
    let mut chosen = Vec::new();
    while remaining > 0 {
        let (gain, std::cmp::Reverse(v)) = heap.pop().expect("undominated vertices remain");
        let fresh = g.closed(v).iter().filter(|&&u| !dominated[u]).count();
        if fresh == 0 {
            continue;
        }
        if fresh < gain {
            // stale key; gains only decrease
            heap.push((fresh, std::cmp::Reverse(v)));
            continue;
        }
        for &u in g.closed(v) {
            if !dominated[u] {
                dominated[u] = true;
                remaining -= 1;
            }
        }
        chosen.push(v);
    }
    chosen.sort_unstable();
    chosen
}

/// Size of a maximal set of vertices with pairwise disjoint closed
/// neighbourhoods. Each such neighbourhood needs its own dominator.
pub fn packing_lower_bound<G: Neighbourhoods>(g: &G) -> usize {
    let n = g.vertex_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (g.closed(v).len(), v));
    let mut blocked = vec![false; n];
    let mut count = 0;
    for v in order {
        if g.closed(v).iter().all(|&u| !blocked[u]) {
            for &u in g.closed(v) {
                blocked[u] = true;
            }
            count += 1;
        }
    }
    count
}

/// Exact minimum dominating set for graphs with at most 64 vertices.
pub fn exact<G: Neighbourhoods>(g: &G) -> Option<Vec<usize>> {
    let n = g.vertex_count();
    if n > 64 {
        return None;
    }
    if n == 0 {
        return Some(Vec::new());
    }
    let masks: Vec<u64> = (0..n)
        .map(|v| g.closed(v).iter().fold(0u64, |m, &u| m | (1 << u)))
        .collect();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut best = greedy(g);
    let mut current = Vec::new();
    search(&masks, full, 0, &mut current, &mut best);
    best.sort_unstable();
    Some(best)
}

fn search(
    masks: &[u64],
    full: u64,
    dominated: u64,
    current: &mut Vec<usize>,
    best: &mut Vec<usize>,
) {
    if dominated == full {
        if current.len() < best.len() {
            *best = current.clone();
        }
        return;
    }
    let open = full & !dominated;
    let max_gain = masks
        .iter()
        .map(|m| (m & open).count_ones())
        .max()
        .unwrap_or(0);
    if max_gain == 0 {
        return;
    }
    let needed = open.count_ones().div_ceil(max_gain) as usize;
    if current.len() + needed >= best.len() {
        return;
    }
    // branch on the undominated vertex with the fewest possible dominators
    let mut pivot = open.trailing_zeros() as usize;
    let mut fewest = u32::MAX;
    let mut bits = open;
    while bits != 0 {
        let u = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        let c = masks[u].count_ones();
        if c < fewest {
            fewest = c;
            pivot = u;
        }
    }
    let mut candidates: Vec<usize> = Vec::new();
    let mut bits = masks[pivot];
    while bits != 0 {
        candidates.push(bits.trailing_zeros() as usize);
        bits &= bits - 1;
    }
    candidates.sort_by_key(|&w| std::cmp::Reverse((masks[w] & open).count_ones()));
    for w in candidates {
        current.push(w);
        search(masks, full, dominated | masks[w], current, best);
        current.pop();
    }
}
