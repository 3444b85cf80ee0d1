//! Unfolding a maze tree onto a line with perpendicular tails.
//!
//! The solution path becomes the main chain at integer positions (k, 0).
//! Every subtree hanging off the chain must itself be a simple path; it is
//! laid out perpendicular to the chain at its anchor column, sides
//! alternating +y / -y with first-fit fallback when the preferred side is
//! blocked. The resulting geometry realizes the maze exactly: pairs at unit
//! distance are precisely the tree edges, and diagonal (sqrt(2)) pairs carry
//! the parasitic next-nearest-neighbor coupling of the physical array.

use crate::error::{Result, SimError};
use crate::maze::{extract_solution_path, MazeGraph};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tail {
    pub anchor: usize,
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Layout {
    /// Integer position of node i at index i.
    pub positions: Vec<(i64, i64)>,
    pub main_chain: Vec<usize>,
    pub tails: Vec<Tail>,
}

impl Layout {
    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    /// Entrance and exit are the chain endpoints.
    pub fn in_node(&self) -> usize {
        self.main_chain[0]
    }

    pub fn out_node(&self) -> usize {
        *self.main_chain.last().unwrap()
    }
}

/// Unfolds a maze whose hanging subtrees are simple paths.
///
/// Errors with [`SimError::UnfoldInfeasible`] naming the offending anchor
/// when a subtree branches or when neither side of the chain can host a
/// tail without touching previously placed nodes.
pub fn unfold(maze: &MazeGraph) -> Result<Layout> {
    let path = extract_solution_path(maze)?;
    let adj = maze.adjacency();
    let n = maze.node_count;

    let mut on_chain = vec![false; n];
    for &u in &path {
        on_chain[u] = true;
    }

    let mut positions: Vec<Option<(i64, i64)>> = vec![None; n];
    let mut occupied: HashMap<(i64, i64), usize> = HashMap::new();
    for (k, &u) in path.iter().enumerate() {
        positions[u] = Some((k as i64, 0));
        occupied.insert((k as i64, 0), u);
    }

    // Collect tails: for each chain node in order, hanging neighbors by id.
    let mut pending: Vec<(usize, i64, Vec<usize>)> = Vec::new(); // (anchor, x, tail nodes)
    for (k, &a) in path.iter().enumerate() {
        let mut hanging: Vec<usize> = adj[a].iter().copied().filter(|&v| !on_chain[v]).collect();
        hanging.sort_unstable();
        for root in hanging {
            let mut nodes = vec![root];
            let (mut prev, mut cur) = (a, root);
            loop {
                let next: Vec<usize> = adj[cur].iter().copied().filter(|&v| v != prev).collect();
                match next.len() {
                    0 => break,
                    1 => {
                        if on_chain[next[0]] {
                            // A second connection to the chain would be a cycle;
                            // the tree validation makes this unreachable.
                            return Err(SimError::UnfoldInfeasible {
                                anchor: a,
                                reason: format!("tail node {cur} reattaches to the chain"),
                            });
                        }
                        nodes.push(next[0]);
                        prev = cur;
                        cur = next[0];
                    }
                    _ => {
                        return Err(SimError::UnfoldInfeasible {
                            anchor: a,
                            reason: format!("subtree branches at node {cur}"),
                        });
                    }
                }
            }
            pending.push((a, k as i64, nodes));
        }
    }

    // Place tails, alternating preferred side, first-fit on collision.
    let mut tails = Vec::with_capacity(pending.len());
    let mut next_side: i64 = 1;
    for (anchor, x, nodes) in pending {
        let mut placed = None;
        for side in [next_side, -next_side] {
            if tail_fits(&occupied, x, side, nodes.len()) {
                placed = Some(side);
                break;
            }
        }
        let side = placed.ok_or_else(|| SimError::UnfoldInfeasible {
            anchor,
            reason: "neither side of the chain can host the tail".into(),
        })?;
        for (j, &u) in nodes.iter().enumerate() {
            let cell = (x, side * (j as i64 + 1));
            positions[u] = Some(cell);
            occupied.insert(cell, u);
        }
        next_side = -side;
        tails.push(Tail { anchor, nodes });
    }

    let positions: Vec<(i64, i64)> =
        positions.into_iter().map(|p| p.expect("spanning tree reaches every node")).collect();
    let layout = Layout { positions, main_chain: path, tails };
    verify(maze, &layout)?;
    Ok(layout)
}

/// A tail fits when its cells are free and each new cell touches (at unit
/// distance) nothing but its predecessor. Later placements re-check against
/// everything placed so far, so all pairs get examined exactly once.
fn tail_fits(occupied: &HashMap<(i64, i64), usize>, x: i64, side: i64, len: usize) -> bool {
    for j in 0..len {
        let y = side * (j as i64 + 1);
        if occupied.contains_key(&(x, y)) {
            return false;
        }
        let pred = (x, y - side);
        for nb in [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)] {
            if nb != pred && occupied.contains_key(&nb) {
                return false;
            }
        }
    }
    true
}

/// Full invariant check: positions distinct, unit-distance pairs are exactly
/// the tree edges.
fn verify(maze: &MazeGraph, layout: &Layout) -> Result<()> {
    let n = layout.positions.len();
    let mut unit_pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let (xi, yi) = layout.positions[i];
            let (xj, yj) = layout.positions[j];
            if (xi, yi) == (xj, yj) {
                return Err(SimError::UnfoldInfeasible {
                    anchor: i,
                    reason: format!("nodes {i} and {j} coincide"),
                });
            }
            if (xi - xj).pow(2) + (yi - yj).pow(2) == 1 {
                unit_pairs.push((i, j));
            }
        }
    }
    unit_pairs.sort_unstable();
    if unit_pairs != maze.edges {
        return Err(SimError::UnfoldInfeasible {
            anchor: 0,
            reason: "unit-distance pairs do not match the tree edges".into(),
        });
    }
    Ok(())
}

pub fn to_json(layout: &Layout) -> Result<String> {
    Ok(serde_json::to_string_pretty(layout)?)
}

pub fn from_json(text: &str) -> Result<Layout> {
    let layout: Layout = serde_json::from_str(text)?;
    if layout.positions.is_empty() || layout.main_chain.is_empty() {
        return Err(SimError::Parse("layout needs positions and a main chain".into()));
    }
    for &u in layout.main_chain.iter().chain(layout.tails.iter().flat_map(|t| t.nodes.iter())) {
        if u >= layout.positions.len() {
            return Err(SimError::NodeOutOfRange { node: u, count: layout.positions.len() });
        }
    }
    Ok(layout)
}
