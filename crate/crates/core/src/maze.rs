//! Perfect-maze generation on rectangular grids.
//!
//! A perfect maze is a spanning tree of the grid graph: every pair of cells
//! is joined by exactly one corridor path. Generation follows the iterative
//! depth-first backtracker: start at a random cell, repeatedly move to a
//! random unvisited neighbor, back up when stuck. The stack is explicit so
//! 30x30 grids (and beyond) cannot overflow recursion.

use crate::error::{Result, SimError};
use crate::rng::{self, RNG_ID};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
}

impl GridSpec {
    pub fn node_count(&self) -> usize {
        self.rows * self.cols
    }
}

/// A maze as an undirected graph with designated entrance and exit.
///
/// `grid` is present for generated mazes and `None` for hand-made graphs
/// loaded from files (the showcase instance, user substitutions).
#[derive(Debug, Clone)]
pub struct MazeGraph {
    pub node_count: usize,
    /// Normalized: each edge stored once as (low, high), sorted.
    pub edges: Vec<(usize, usize)>,
    pub in_node: usize,
    pub out_node: usize,
    pub grid: Option<GridSpec>,
    pub rng_id: Option<String>,
}

impl MazeGraph {
    /// Builds a maze graph from parts and validates it is a spanning tree.
    pub fn new(
        node_count: usize,
        mut edges: Vec<(usize, usize)>,
        in_node: usize,
        out_node: usize,
    ) -> Result<Self> {
        for e in edges.iter_mut() {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        edges.sort_unstable();
        let maze = MazeGraph { node_count, edges, in_node, out_node, grid: None, rng_id: None };
        maze.validate()?;
        Ok(maze)
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Spanning-tree validation: bounds, no self-loops or duplicates,
    /// |E| = |V| - 1, connected, and grid-adjacent when a grid is recorded.
    pub fn validate(&self) -> Result<()> {
        let n = self.node_count;
        for &node in [self.in_node, self.out_node].iter() {
            if node >= n {
                return Err(SimError::NodeOutOfRange { node, count: n });
            }
        }
        for (idx, &(a, b)) in self.edges.iter().enumerate() {
            if a >= n || b >= n {
                return Err(SimError::NodeOutOfRange { node: a.max(b), count: n });
            }
            if a == b {
                return Err(SimError::NotATree { reason: format!("self-loop at node {a}") });
            }
            if idx > 0 && self.edges[idx - 1] == (a, b) {
                return Err(SimError::NotATree { reason: format!("duplicate edge ({a}, {b})") });
            }
            if let Some(g) = self.grid {
                let (ra, ca) = (a / g.cols, a % g.cols);
                let (rb, cb) = (b / g.cols, b % g.cols);
                let dist = ra.abs_diff(rb) + ca.abs_diff(cb);
                if dist != 1 {
                    return Err(SimError::NotATree {
                        reason: format!("edge ({a}, {b}) is not grid-adjacent"),
                    });
                }
            }
        }
        if self.edges.len() != n - 1 {
            return Err(SimError::NotATree {
                reason: format!("{} edges for {} nodes", self.edges.len(), n),
            });
        }
        // Connectivity; together with |E| = |V| - 1 this implies acyclicity.
        let adj = self.adjacency();
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::from([self.in_node]);
        seen[self.in_node] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        if count != n {
            return Err(SimError::NotATree {
                reason: format!("only {count} of {n} nodes reachable"),
            });
        }
        Ok(())
    }
}

/// Generates a perfect maze with the seeded depth-first backtracker.
///
/// Cells are indexed row-major. The start cell and every neighbor choice are
/// drawn from one ChaCha8 stream, so equal specs give equal mazes. Terminals
/// default to the corner cells; see [`select_terminals`].
pub fn generate_maze(spec: GridSpec) -> Result<MazeGraph> {
    let n = spec.node_count();
    if n < 2 {
        return Err(SimError::GridTooSmall { rows: spec.rows, cols: spec.cols });
    }
    let mut rng = rng::seeded(spec.seed);
    let start = rng::below(&mut rng, n as u64) as usize;

    let mut visited = vec![false; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut stack = Vec::with_capacity(n);
    visited[start] = true;
    stack.push(start);

    let mut candidates = [0usize; 4];
    while let Some(&cur) = stack.last() {
        let r = cur / spec.cols;
        let c = cur % spec.cols;
        let mut k = 0;
        // Fixed probe order (up, down, left, right); the shuffle below owns
        // all the randomness of the visiting order.
        if r > 0 && !visited[cur - spec.cols] {
            candidates[k] = cur - spec.cols;
            k += 1;
        }
        if r + 1 < spec.rows && !visited[cur + spec.cols] {
            candidates[k] = cur + spec.cols;
            k += 1;
        }
        if c > 0 && !visited[cur - 1] {
            candidates[k] = cur - 1;
            k += 1;
        }
        if c + 1 < spec.cols && !visited[cur + 1] {
            candidates[k] = cur + 1;
            k += 1;
        }
        if k == 0 {
            stack.pop();
            continue;
        }
        rng::shuffle(&mut rng, &mut candidates[..k]);
        let next = candidates[0];
        visited[next] = true;
        edges.push(if cur < next { (cur, next) } else { (next, cur) });
        stack.push(next);
    }

    edges.sort_unstable();
    let (in_node, out_node) = select_terminals(spec);
    let maze = MazeGraph {
        node_count: n,
        edges,
        in_node,
        out_node,
        grid: Some(spec),
        rng_id: Some(RNG_ID.to_string()),
    };
    maze.validate()?;
    Ok(maze)
}

/// Default terminals: entrance at cell (0,0), exit at (rows-1, cols-1).
pub fn select_terminals(spec: GridSpec) -> (usize, usize) {
    (0, spec.node_count() - 1)
}

/// The unique tree path from the entrance to the exit, endpoints included.
///
/// Walks the tree iteratively from `in_node` with parent tracking; on a
/// spanning tree this is the solution corridor of the maze.
pub fn extract_solution_path(maze: &MazeGraph) -> Result<Vec<usize>> {
    let adj = maze.adjacency();
    let n = maze.node_count;
    let mut parent = vec![usize::MAX; n];
    let mut stack = vec![maze.in_node];
    parent[maze.in_node] = maze.in_node;
    while let Some(u) = stack.pop() {
        if u == maze.out_node {
            break;
        }
        for &v in &adj[u] {
            if parent[v] == usize::MAX {
                parent[v] = u;
                stack.push(v);
            }
        }
    }
    if parent[maze.out_node] == usize::MAX {
        return Err(SimError::Disconnected);
    }
    let mut path = vec![maze.out_node];
    let mut cur = maze.out_node;
    while cur != maze.in_node {
        cur = parent[cur];
        path.push(cur);
    }
    path.reverse();
    Ok(path)
}

#[derive(Serialize, Deserialize)]
struct MazeFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cols: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rng_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nodes: Option<usize>,
    edges: Vec<(usize, usize)>,
    #[serde(rename = "in")]
    in_node: usize,
    out: usize,
}

pub fn to_json(maze: &MazeGraph) -> Result<String> {
    let file = MazeFile {
        rows: maze.grid.map(|g| g.rows),
        cols: maze.grid.map(|g| g.cols),
        seed: maze.grid.map(|g| g.seed),
        rng_id: maze.rng_id.clone(),
        nodes: if maze.grid.is_none() { Some(maze.node_count) } else { None },
        edges: maze.edges.clone(),
        in_node: maze.in_node,
        out: maze.out_node,
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn from_json(text: &str) -> Result<MazeGraph> {
    let file: MazeFile = serde_json::from_str(text)?;
    let grid = match (file.rows, file.cols) {
        (Some(rows), Some(cols)) => Some(GridSpec { rows, cols, seed: file.seed.unwrap_or(0) }),
        (None, None) => None,
        _ => return Err(SimError::Parse("rows and cols must appear together".into())),
    };
    let node_count = match (grid, file.nodes) {
        (Some(g), _) => g.node_count(),
        (None, Some(n)) => n,
        (None, None) => return Err(SimError::Parse("need rows/cols or nodes".into())),
    };
    let mut maze = MazeGraph::new(node_count, file.edges, file.in_node, file.out)?;
    maze.grid = grid;
    maze.rng_id = file.rng_id;
    maze.validate()?;
    Ok(maze)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    /// Independent oracle: BFS shortest path on the same graph.
    fn bfs_path(maze: &MazeGraph) -> Option<Vec<usize>> {
        let adj = maze.adjacency();
        let mut prev = vec![usize::MAX; maze.node_count];
        let mut queue = VecDeque::from([maze.in_node]);
        prev[maze.in_node] = maze.in_node;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if prev[v] == usize::MAX {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[maze.out_node] == usize::MAX {
            return None;
        }
        let mut path = vec![maze.out_node];
        while *path.last().unwrap() != maze.in_node {
            path.push(prev[*path.last().unwrap()]);
        }
        path.reverse();
        Some(path)
    }

    #[test]
    fn rejects_single_cell() {
        assert!(matches!(
            generate_maze(GridSpec { rows: 1, cols: 1, seed: 0 }),
            Err(SimError::GridTooSmall { .. })
        ));
    }

    #[test]
    fn two_cells_single_edge() {
        let m = generate_maze(GridSpec { rows: 1, cols: 2, seed: 0 }).unwrap();
        assert_eq!(m.edges, vec![(0, 1)]);
        assert_eq!((m.in_node, m.out_node), (0, 1));
    }

    #[test]
    fn same_seed_same_maze_different_seed_differs() {
        let spec = GridSpec { rows: 6, cols: 6, seed: 9 };
        let a = generate_maze(spec).unwrap();
        let b = generate_maze(spec).unwrap();
        assert_eq!(a.edges, b.edges);
        let c = generate_maze(GridSpec { seed: 10, ..spec }).unwrap();
        assert_ne!(a.edges, c.edges);
    }

    #[test]
    fn solution_path_matches_bfs_oracle() {
        for seed in 0..20 {
            let m = generate_maze(GridSpec { rows: 7, cols: 5, seed }).unwrap();
            let path = extract_solution_path(&m).unwrap();
            assert_eq!(path, bfs_path(&m).unwrap(), "seed {seed}");
            assert_eq!(*path.first().unwrap(), m.in_node);
            assert_eq!(*path.last().unwrap(), m.out_node);
        }
    }

    #[test]
    fn thirty_by_thirty_generates_without_overflow() {
        let m = generate_maze(GridSpec { rows: 30, cols: 30, seed: 1 }).unwrap();
        assert_eq!(m.edges.len(), 899);
        m.validate().unwrap();
    }

    #[test]
    fn json_round_trip_preserves_graph() {
        let m = generate_maze(GridSpec { rows: 4, cols: 6, seed: 5 }).unwrap();
        let text = to_json(&m).unwrap();
        let back = from_json(&text).unwrap();
        assert_eq!(back.edges, m.edges);
        assert_eq!(back.grid, m.grid);
        assert_eq!(back.rng_id.as_deref(), Some("chacha8"));
        assert_eq!((back.in_node, back.out_node), (m.in_node, m.out_node));
    }

    #[test]
    fn hand_made_graph_without_grid_loads() {
        let text = r#"{"nodes": 3, "edges": [[0,1],[1,2]], "in": 0, "out": 2}"#;
        let m = from_json(text).unwrap();
        assert_eq!(m.node_count, 3);
        assert!(m.grid.is_none());
        assert_eq!(extract_solution_path(&m).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn cyclic_graph_rejected() {
        let text = r#"{"nodes": 3, "edges": [[0,1],[1,2],[0,2]], "in": 0, "out": 2}"#;
        assert!(matches!(from_json(text), Err(SimError::NotATree { .. })));
    }

    #[test]
    fn disconnected_graph_rejected() {
        let err = MazeGraph::new(4, vec![(0, 1), (2, 3), (0, 1)], 0, 3);
        assert!(err.is_err());
        let err = MazeGraph::new(5, vec![(0, 1), (1, 2), (3, 4)], 0, 4);
        assert!(matches!(err, Err(SimError::NotATree { .. })));
    }

    proptest::proptest! {
        // Any grid and seed give a validated spanning tree whose solution
        // path matches the independent BFS oracle and whose edges only join
        // grid neighbours.
        #[test]
        fn generated_mazes_are_perfect(
            rows in 1usize..8,
            cols in 2usize..8,
            seed in proptest::prelude::any::<u64>(),
        ) {
            let spec = GridSpec { rows, cols, seed };
            let maze = generate_maze(spec).unwrap();
            maze.validate().unwrap();
            proptest::prop_assert_eq!(maze.node_count, rows * cols);
            proptest::prop_assert_eq!(maze.edges.len(), rows * cols - 1);
            proptest::prop_assert_eq!(
                (maze.in_node, maze.out_node),
                select_terminals(spec)
            );
            for &(a, b) in &maze.edges {
                let (ra, ca) = (a / cols, a % cols);
                let (rb, cb) = (b / cols, b % cols);
                proptest::prop_assert_eq!(
                    ra.abs_diff(rb) + ca.abs_diff(cb),
                    1,
                    "edge ({}, {}) not a grid neighbour pair",
                    a,
                    b
                );
            }
            let path = extract_solution_path(&maze).unwrap();
            proptest::prop_assert_eq!(&path, &bfs_path(&maze).unwrap());
            proptest::prop_assert_eq!(path[0], maze.in_node);
            proptest::prop_assert_eq!(*path.last().unwrap(), maze.out_node);
        }
    }
}
