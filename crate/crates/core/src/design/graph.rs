//! Strongly connected components and their condensation.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SccDecomposition {
    /// Components with sorted members, ordered by their smallest vertex.
    pub components: Vec<Vec<usize>>,
    /// Component index of each vertex.
    pub component_of: Vec<usize>,
    /// Edges of the condensation, deduplicated and sorted.
    pub dag_edges: Vec<(usize, usize)>,
    /// Components without outgoing condensation edges.
    pub bottom: Vec<bool>,
}

impl SccDecomposition {
    pub fn successors(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        self.dag_edges.iter().filter(move |e| e.0 == c).map(|e| e.1)
    }
}

/// Tarjan's algorithm on vertices `0..n` with edges `(from, to)`.
pub fn tarjan_scc(n: usize, edges: &[(usize, usize)]) -> Result<SccDecomposition> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a >= n || b >= n {
            return Err(Error::Model(format!("edge ({a}, {b}) leaves the vertex range")));
        }
        if a == b {
            return Err(Error::SelfLoop(a + 1));
        }
        adj[a].push(b);
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }

    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut found: Vec<Vec<usize>> = Vec::new();
    let mut next = 0;

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        // (vertex, position in its adjacency list)
        let mut call = vec![(root, 0)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&w) = adj[v].get(*pos) {
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                found.push(comp);
            }
        }
    }

    found.sort_by_key(|c| c[0]);
    let mut component_of = vec![0; n];
    for (k, comp) in found.iter().enumerate() {
        for &v in comp {
            component_of[v] = k;
        }
    }
    let mut dag_edges: Vec<(usize, usize)> =
        edges.iter().map(|&(a, b)| (component_of[a], component_of[b])).filter(|(a, b)| a != b).collect();
    dag_edges.sort_unstable();
    dag_edges.dedup();
    let bottom = (0..found.len()).map(|k| !dag_edges.iter().any(|e| e.0 == k)).collect();
    Ok(SccDecomposition { components: found, component_of, dag_edges, bottom })
}
