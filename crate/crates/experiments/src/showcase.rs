//! The shipped 18-site instance: a 10-node main chain with five
//! perpendicular tails of lengths {2, 1, 1, 2, 2}, the canonical
//! chain-with-tails tree used by the showcase and loss recipes.
//!
//! The geometry is fixed by hand rather than produced by the unfolder so
//! that the instance (and everything derived from it: parasitic
//! next-nearest couplings, noise maps, sink placement) is stable against
//! layout-algorithm changes. Tails alternate sides starting above the
//! chain; entrance is node 0, exit node 9, and the sink chain continues
//! collinearly to the right of the exit.

use mazesim_core::couplings::{append_sink_chain, layout_to_couplings, CouplingMatrix};
use mazesim_core::layout::{Layout, Tail};
use mazesim_core::maze::MazeGraph;
use mazesim_core::Result;

/// Number of maze sites in the shipped instance.
pub const SHOWCASE_SITES: usize = 18;

/// The 18-site tree: chain 0-9, tails 10-11 at node 1, 12 at node 2,
/// 13 at node 4, 14-15 at node 5, 16-17 at node 8.
pub fn showcase_maze() -> MazeGraph {
    let mut edges: Vec<(usize, usize)> = (0..9).map(|i| (i, i + 1)).collect();
    edges.extend([(1, 10), (10, 11), (2, 12), (4, 13), (5, 14), (14, 15), (8, 16), (16, 17)]);
    MazeGraph::new(SHOWCASE_SITES, edges, 0, 9).expect("showcase tree is valid by construction")
}

/// Hand geometry for [`showcase_maze`]: chain along y = 0, tails vertical,
/// alternating +y / -y in anchor order.
pub fn showcase_layout() -> Layout {
    let mut positions: Vec<(i64, i64)> = (0..10).map(|i| (i as i64, 0)).collect();
    positions.extend([(1, 1), (1, 2), (2, -1), (4, 1), (5, -1), (5, -2), (8, 1), (8, 2)]);
    Layout {
        positions,
        main_chain: (0..10).collect(),
        tails: vec![
            Tail { anchor: 1, nodes: vec![10, 11] },
            Tail { anchor: 2, nodes: vec![12] },
            Tail { anchor: 4, nodes: vec![13] },
            Tail { anchor: 5, nodes: vec![14, 15] },
            Tail { anchor: 8, nodes: vec![16, 17] },
        ],
    }
}

/// Waveguide coupling matrix of the full showcase structure: the 18 maze
/// guides (with geometric parasitic couplings) plus a collinear sink chain.
/// Returns the matrix, the sink indices and the layout.
pub fn showcase_couplings(
    kappa: f64,
    nnn_ratio: f64,
    sink_len: usize,
) -> Result<(CouplingMatrix, Vec<usize>, Layout)> {
    let layout = showcase_layout();
    let base = layout_to_couplings(&layout, kappa, nnn_ratio)?;
    let (full, sink) = append_sink_chain(&base, &layout, sink_len, kappa)?;
    Ok((full, sink, layout))
}
