//! Reverse Cuthill-McKee ordering for bandwidth reduction.

use std::collections::VecDeque;

use super::sparse::CsrMatrix;

/// Symmetrized adjacency lists of the sparsity pattern, without self loops.
fn adjacency(m: &CsrMatrix) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); m.nrows];
    for i in 0..m.nrows {
        for (j, _) in m.row(i) {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

/// Breadth-first level structure from `root` restricted to unvisited nodes.
fn levels(adj: &[Vec<usize>], root: usize, visited: &[bool]) -> Vec<Vec<usize>> {
    let mut seen = visited.to_vec();
    seen[root] = true;
    let mut out = vec![vec![root]];
    loop {
        let mut next = Vec::new();
        for &u in out.last().unwrap() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            return out;
        }
        out.push(next);
    }
}

/// George-Liu pseudo-peripheral node search.
fn pseudo_peripheral(adj: &[Vec<usize>], start: usize, visited: &[bool]) -> usize {
    let mut root = start;
    let mut ls = levels(adj, root, visited);
    loop {
        let last = ls.last().unwrap();
        let candidate = *last.iter().min_by_key(|&&v| adj[v].len()).unwrap();
        let lc = levels(adj, candidate, visited);
        if lc.len() > ls.len() {
            root = candidate;
            ls = lc;
        } else {
            return root;
        }
    }
}

/// Returns the permutation (new index -> old index).
pub fn reverse_cuthill_mckee(m: &CsrMatrix) -> Vec<usize> {
    let n = m.nrows;
    let adj = adjacency(m);
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let start = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| adj[i].len()).unwrap();
        let root = pseudo_peripheral(&adj, start, &visited);
        let mut queue = VecDeque::from([root]);
        visited[root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            nbrs.sort_by_key(|&v| adj[v].len());
            for v in nbrs {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}
