//! Reverse Cuthill–McKee ordering for bandwidth reduction.

use std::collections::VecDeque;

use super::SparseMatrix;

/// Adjacency lists of the symmetrized off-diagonal pattern of a square matrix.
fn adjacency(m: &SparseMatrix) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut adj = vec![Vec::new(); n];
    for (i, j, v) in m.triplets() {
        if i != j && v != 0.0 {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// BFS level structure from `root`, restricted to unvisited nodes.
fn levels(adj: &[Vec<usize>], root: usize, blocked: &[bool]) -> Vec<Vec<usize>> {
    let mut seen = blocked.to_vec();
    seen[root] = true;
    let mut out = vec![vec![root]];
    loop {
        let mut next = Vec::new();
        for &v in out.last().unwrap() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return out;
        }
        out.push(next);
    }
}

fn pseudo_peripheral(adj: &[Vec<usize>], start: usize, blocked: &[bool]) -> usize {
    let mut root = start;
    let mut depth = levels(adj, root, blocked).len();
    for _ in 0..8 {
        let lv = levels(adj, root, blocked);
        let candidate = *lv
            .last()
            .unwrap()
            .iter()
            .min_by_key(|&&v| (adj[v].len(), v))
            .unwrap();
        let cand_depth = levels(adj, candidate, blocked).len();
        if cand_depth <= depth {
            break;
        }
        root = candidate;
        depth = cand_depth;
    }
    root
}

/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(m: &SparseMatrix) -> Vec<usize> {
    let n = m.nrows();
    let adj = adjacency(m);
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let start = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (adj[v].len(), v))
            .unwrap();
        let root = pseudo_peripheral(&adj, start, &visited);
        let mut queue = VecDeque::new();
        visited[root] = true;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            nbrs.sort_by_key(|&w| (adj[w].len(), w));
            for w in nbrs {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}
