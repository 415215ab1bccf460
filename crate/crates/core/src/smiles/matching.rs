//! Maximum cardinality matching on general graphs (Edmonds' blossom
//! algorithm). Used to place double bonds when kekulizing aromatic input.

const NONE: usize = usize::MAX;

pub(crate) fn max_matching(adj: &[Vec<usize>]) -> Vec<Option<usize>> {
    let n = adj.len();
    let mut state = Blossom {
        adj,
        mate: vec![NONE; n],
        parent: vec![NONE; n],
        base: (0..n).collect(),
        used: vec![false; n],
        blossom: vec![false; n],
    };

    // Greedy start, lowest-degree vertices first.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (adj[v].len(), v));
    for &v in &order {
        if state.mate[v] != NONE {
            continue;
        }
        if let Some(&w) = adj[v].iter().find(|&&w| state.mate[w] == NONE && w != v) {
            state.mate[v] = w;
            state.mate[w] = v;
        }
    }

    for (root, nbrs) in adj.iter().enumerate() {
        if state.mate[root] == NONE && !nbrs.is_empty() {
            if let Some(end) = state.find_path(root) {
                state.augment(end);
            }
        }
    }
    state.mate.into_iter().map(|m| (m != NONE).then_some(m)).collect()
}

struct Blossom<'a> {
    adj: &'a [Vec<usize>],
    mate: Vec<usize>,
    parent: Vec<usize>,
    base: Vec<usize>,
    used: Vec<bool>,
    blossom: Vec<bool>,
}

impl Blossom<'_> {
    fn lca(&self, mut a: usize, mut b: usize) -> usize {
        let mut seen = vec![false; self.adj.len()];
        loop {
            a = self.base[a];
            seen[a] = true;
            if self.mate[a] == NONE {
                break;
            }
            a = self.parent[self.mate[a]];
        }
        loop {
            b = self.base[b];
            if seen[b] {
                return b;
            }
            b = self.parent[self.mate[b]];
        }
    }

    fn mark_path(&mut self, mut v: usize, b: usize, mut child: usize) {
        while self.base[v] != b {
            self.blossom[self.base[v]] = true;
            self.blossom[self.base[self.mate[v]]] = true;
            self.parent[v] = child;
            child = self.mate[v];
            v = self.parent[self.mate[v]];
        }
    }

    fn find_path(&mut self, root: usize) -> Option<usize> {
        let n = self.adj.len();
        self.used.iter_mut().for_each(|u| *u = false);
        self.parent.iter_mut().for_each(|p| *p = NONE);
        for (i, b) in self.base.iter_mut().enumerate() {
            *b = i;
        }
        self.used[root] = true;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for idx in 0..self.adj[v].len() {
                let to = self.adj[v][idx];
                if self.base[v] == self.base[to] || self.mate[v] == to {
                    continue;
                }
                if to == root || (self.mate[to] != NONE && self.parent[self.mate[to]] != NONE) {
                    let cur = self.lca(v, to);
                    self.blossom.iter_mut().for_each(|b| *b = false);
                    self.mark_path(v, cur, to);
                    self.mark_path(to, cur, v);
                    for i in 0..n {
                        if self.blossom[self.base[i]] {
                            self.base[i] = cur;
                            if !self.used[i] {
                                self.used[i] = true;
                                queue.push_back(i);
                            }
                        }
                    }
                } else if self.parent[to] == NONE {
                    self.parent[to] = v;
                    if self.mate[to] == NONE {
                        return Some(to);
                    }
                    let m = self.mate[to];
                    self.used[m] = true;
                    queue.push_back(m);
                }
            }
        }
        None
    }

    fn augment(&mut self, mut v: usize) {
        while v != NONE {
            let pv = self.parent[v];
            let ppv = self.mate[pv];
            self.mate[v] = pv;
            self.mate[pv] = v;
            v = ppv;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> Vec<Vec<usize>> {
        (0..n).map(|i| vec![(i + n - 1) % n, (i + 1) % n]).collect()
    }

    #[test]
    fn even_cycle_is_perfect() {
        let m = max_matching(&cycle(6));
        assert!(m.iter().all(Option::is_some));
    }

    #[test]
    fn odd_cycle_leaves_one() {
        let m = max_matching(&cycle(5));
        assert_eq!(m.iter().filter(|x| x.is_none()).count(), 1);
    }

    #[test]
    fn blossom_needed_for_augmenting_path() {
        // Triangle 0-1-2 with tails 2-3 and 0-4, 3-5: perfect matching exists.
        let edges = [(0, 1), (1, 2), (2, 0), (2, 3), (0, 4), (3, 5)];
        let mut adj = vec![Vec::new(); 6];
        for &(a, b) in &edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let m = max_matching(&adj);
        assert!(m.iter().all(Option::is_some), "{m:?}");
        for (v, w) in m.iter().enumerate() {
            assert_eq!(m[w.unwrap()], Some(v));
        }
    }
}
