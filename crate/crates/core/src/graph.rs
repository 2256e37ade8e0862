//! Sparsity graphs of Hermitian matrices and QCQPs.

use serde::Serialize;

use crate::hermitian::HermitianMatrix;

/// Entries with modulus at or below this are structural zeros.
pub const TAU_ZERO: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProblemGraph {
    pub n: usize,
    /// Sorted, each `(i, j)` with `i < j`.
    pub edges: Vec<(usize, usize)>,
    #[serde(skip)]
    adjacency: Vec<Vec<usize>>,
}

impl ProblemGraph {
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut list: Vec<(usize, usize)> = edges
            .into_iter()
            .filter(|(i, j)| i != j)
            .map(|(i, j)| (i.min(j), i.max(j)))
            .collect();
        list.sort_unstable();
        list.dedup();
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in &list {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        Self { n, edges: list, adjacency }
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// Connected component label of every vertex.
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.n];
        let mut next = 0;
        for s in 0..self.n {
            if label[s] != usize::MAX {
                continue;
            }
            let mut stack = vec![s];
            label[s] = next;
            while let Some(v) = stack.pop() {
                for &w in &self.adjacency[v] {
                    if label[w] == usize::MAX {
                        label[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.components().iter().all(|&c| c == 0)
    }

    pub fn is_tree(&self) -> bool {
        self.n >= 1 && self.edges.len() == self.n - 1 && self.is_connected()
    }

    /// Breadth-first depth of every vertex from `root` (`usize::MAX` when unreachable).
    pub fn depths(&self, root: usize) -> Vec<usize> {
        let mut depth = vec![usize::MAX; self.n];
        depth[root] = 0;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[v] {
                if depth[w] == usize::MAX {
                    depth[w] = depth[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        depth
    }
}

/// Graph of the nonzero off-diagonal pattern of `h`.
pub fn matrix_graph(h: &HermitianMatrix, tau_zero: f64) -> ProblemGraph {
    ProblemGraph::from_edges(h.n(), h.off_diagonal_support(tau_zero))
}

pub fn is_tree(g: &ProblemGraph) -> bool {
    g.is_tree()
}
