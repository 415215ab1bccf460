//! Ring perception over an adjacency list of `(neighbor, edge index)` pairs.
//!
//! Three views are provided: ring-bond flags (bridge detection), the smallest
//! set of smallest rings (Horton candidates reduced by GF(2) elimination), and
//! the set of all shortest cycles through each ring bond. The last one is a
//! purely structural definition, so it does not depend on atom order and is
//! what aromaticity perception runs over.

use std::collections::{BTreeSet, HashSet, VecDeque};

pub(crate) type Adjacency = [Vec<(usize, usize)>];

/// Upper bound on shortest cycles enumerated per ring bond.
const MAX_CYCLES_PER_EDGE: usize = 64;

/// Flags every edge that lies on at least one cycle (i.e. is not a bridge).
pub(crate) fn ring_bonds(adj: &Adjacency, n_edges: usize) -> Vec<bool> {
    let n = adj.len();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut is_bridge = vec![false; n_edges];
    let mut timer = 0usize;

    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (vertex, edge used to enter it, next adjacency slot)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (v, parent_edge, ref mut slot)) = stack.last_mut() {
            if *slot < adj[v].len() {
                let (w, e) = adj[v][*slot];
                *slot += 1;
                if e == parent_edge {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, e, 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[v]);
                    if low[v] > disc[p] {
                        is_bridge[parent_edge] = true;
                    }
                }
            }
        }
    }
    is_bridge.into_iter().map(|b| !b).collect()
}

fn edge_key(path: &[usize], adj: &Adjacency) -> Vec<usize> {
    let mut edges = Vec::with_capacity(path.len());
    for i in 0..path.len() {
        let a = path[i];
        let b = path[(i + 1) % path.len()];
        let e = adj[a].iter().find(|&&(w, _)| w == b).map(|&(_, e)| e).expect("cycle edge present");
        edges.push(e);
    }
    edges.sort_unstable();
    edges
}

fn bfs_tree(adj: &Adjacency, ring: &[bool], root: usize, skip_edge: Option<usize>) -> (Vec<usize>, Vec<usize>) {
    let n = adj.len();
    let mut dist = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    dist[root] = 0;
    queue.push_back(root);
    while let Some(v) = queue.pop_front() {
        for &(w, e) in &adj[v] {
            if !ring[e] || Some(e) == skip_edge || dist[w] != usize::MAX {
                continue;
            }
            dist[w] = dist[v] + 1;
            parent[w] = v;
            queue.push_back(w);
        }
    }
    (dist, parent)
}

/// Smallest set of smallest rings. Ring sizes are independent of atom order;
/// the particular choice among equal-size alternatives is not.
pub(crate) fn sssr(adj: &Adjacency, ring: &[bool]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let n_edges = ring.len();
    let ring_edges = ring.iter().filter(|&&r| r).count();
    if ring_edges == 0 {
        return Vec::new();
    }
    let ring_atoms: Vec<usize> = (0..n).filter(|&v| adj[v].iter().any(|&(_, e)| ring[e])).collect();
    let components = count_components(adj, ring, &ring_atoms);
    let target = ring_edges + components - ring_atoms.len();

    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut candidates: Vec<Vec<usize>> = Vec::new();
    for &v in &ring_atoms {
        let (dist, parent) = bfs_tree(adj, ring, v, None);
        for x in 0..n {
            for &(y, e) in &adj[x] {
                if !ring[e] || x > y || dist[x] == usize::MAX || dist[y] == usize::MAX {
                    continue;
                }
                if parent[x] == y || parent[y] == x {
                    continue;
                }
                let px = path_to_root(&parent, x);
                let py = path_to_root(&parent, y);
                let sx: HashSet<usize> = px.iter().copied().collect();
                // Paths may only share the root.
                if py[..py.len() - 1].iter().any(|a| sx.contains(a)) {
                    continue;
                }
                let mut cycle: Vec<usize> = px.iter().rev().copied().collect();
                cycle.extend(py.iter().take(py.len() - 1));
                let key = edge_key(&cycle, adj);
                if seen.insert(key) {
                    candidates.push(cycle);
                }
            }
        }
    }
    candidates.sort_by(|a, b| {
        a.len().cmp(&b.len()).then_with(|| {
            let mut sa = a.clone();
            let mut sb = b.clone();
            sa.sort_unstable();
            sb.sort_unstable();
            sa.cmp(&sb)
        })
    });

    let words = n_edges.div_ceil(64);
    let mut basis: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut rings = Vec::new();
    for cycle in candidates {
        if rings.len() == target {
            break;
        }
        let mut vec = vec![0u64; words];
        for e in edge_key(&cycle, adj) {
            vec[e / 64] |= 1 << (e % 64);
        }
        for (pivot, row) in &basis {
            if vec[pivot / 64] >> (pivot % 64) & 1 == 1 {
                for (a, b) in vec.iter_mut().zip(row) {
                    *a ^= b;
                }
            }
        }
        if let Some(pivot) = first_set(&vec) {
            // Keep rows reduced so later pivots are unique.
            for (_, row) in basis.iter_mut() {
                if row[pivot / 64] >> (pivot % 64) & 1 == 1 {
                    for (a, b) in row.iter_mut().zip(&vec) {
                        *a ^= b;
                    }
                }
            }
            basis.push((pivot, vec));
            rings.push(cycle);
        }
    }
    rings
}

fn first_set(v: &[u64]) -> Option<usize> {
    v.iter().enumerate().find(|(_, w)| **w != 0).map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

fn path_to_root(parent: &[usize], mut v: usize) -> Vec<usize> {
    let mut path = vec![v];
    while parent[v] != usize::MAX {
        v = parent[v];
        path.push(v);
    }
    path
}

fn count_components(adj: &Adjacency, ring: &[bool], atoms: &[usize]) -> usize {
    let mut seen = vec![false; adj.len()];
    let mut count = 0;
    for &start in atoms {
        if seen[start] {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for &(w, e) in &adj[v] {
                if ring[e] && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}

/// Every shortest cycle through every ring bond, deduplicated by edge set and
/// returned in a deterministic order (by size, then sorted atom set).
pub(crate) fn shortest_cycles_per_bond(adj: &Adjacency, ring: &[bool]) -> Vec<Vec<usize>> {
    let mut found: BTreeSet<(usize, Vec<usize>, Vec<usize>)> = BTreeSet::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    for u in 0..adj.len() {
        for &(v, e) in &adj[u] {
            if !ring[e] || u > v {
                continue;
            }
            let (dist, _) = bfs_tree(adj, ring, v, Some(e));
            if dist[u] == usize::MAX {
                continue;
            }
            // Walk from u back to v along strictly decreasing distance.
            let mut paths: Vec<Vec<usize>> = vec![vec![u]];
            for _ in 0..dist[u] {
                let mut next = Vec::new();
                for path in &paths {
                    let tail = *path.last().unwrap();
                    for &(w, e2) in &adj[tail] {
                        if e2 == e || !ring[e2] || dist[w] == usize::MAX {
                            continue;
                        }
                        if dist[w] + 1 == dist[tail] {
                            let mut p = path.clone();
                            p.push(w);
                            next.push(p);
                        }
                    }
                    if next.len() >= MAX_CYCLES_PER_EDGE {
                        break;
                    }
                }
                next.truncate(MAX_CYCLES_PER_EDGE);
                paths = next;
            }
            for cycle in paths {
                let key = edge_key(&cycle, adj);
                if seen.insert(key) {
                    let mut sorted = cycle.clone();
                    sorted.sort_unstable();
                    found.insert((cycle.len(), sorted, cycle));
                }
            }
        }
    }
    found.into_iter().map(|(_, _, c)| c).collect()
}
