//! Coupling matrices: graph edges or unfolded geometry to hopping rates.
//!
//! Two constructions feed the engines. Raw maze trees get uniform hopping T
//! on their edges (the abstract model). Unfolded layouts get T on unit
//! distances and nnnRatio*T on sqrt(2) diagonals, including parasitic
//! diagonal pairs that are not maze edges (the photonic reality).

use crate::error::{Result, SimError};
use crate::layout::Layout;
use crate::maze::MazeGraph;
use nalgebra::DMatrix;

#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    pub entries: DMatrix<f64>,
    pub nn_value: f64,
    pub nnn_value: f64,
}

impl CouplingMatrix {
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    /// Symmetric, zero-diagonal, finite and nonnegative.
    pub fn validate(&self) -> Result<()> {
        let n = self.entries.nrows();
        if self.entries.ncols() != n || n == 0 {
            return Err(SimError::BadCouplings("matrix must be square and nonempty".into()));
        }
        for i in 0..n {
            if self.entries[(i, i)] != 0.0 {
                return Err(SimError::BadCouplings(format!("nonzero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                let a = self.entries[(i, j)];
                if !a.is_finite() || a < 0.0 {
                    return Err(SimError::BadCouplings(format!("bad value at ({i}, {j})")));
                }
                if a != self.entries[(j, i)] {
                    return Err(SimError::BadCouplings(format!("asymmetry at ({i}, {j})")));
                }
            }
        }
        Ok(())
    }
}

/// Uniform hopping T on the tree edges; no geometric parasitics.
pub fn maze_to_couplings(maze: &MazeGraph, t_rate: f64) -> Result<CouplingMatrix> {
    if t_rate <= 0.0 {
        return Err(SimError::BadParameter("t_rate must be positive".into()));
    }
    let n = maze.node_count;
    let mut m = DMatrix::zeros(n, n);
    for &(a, b) in &maze.edges {
        m[(a, b)] = t_rate;
        m[(b, a)] = t_rate;
    }
    Ok(CouplingMatrix { entries: m, nn_value: t_rate, nnn_value: 0.0 })
}

/// Geometry to couplings by exact integer squared distance: 1 -> T,
/// 2 -> nnnRatio*T, farther -> 0. Diagonal pairs count whether or not the
/// maze has an edge there; with nnnRatio = 0 the support reduces to the
/// tree edges exactly.
pub fn layout_to_couplings(layout: &Layout, t_rate: f64, nnn_ratio: f64) -> Result<CouplingMatrix> {
    if t_rate <= 0.0 || nnn_ratio < 0.0 {
        return Err(SimError::BadParameter("need t_rate > 0 and nnn_ratio >= 0".into()));
    }
    let n = layout.node_count();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let (xi, yi) = layout.positions[i];
            let (xj, yj) = layout.positions[j];
            let value = match (xi - xj).pow(2) + (yi - yj).pow(2) {
                1 => t_rate,
                2 => nnn_ratio * t_rate,
                _ => 0.0,
            };
            m[(i, j)] = value;
            m[(j, i)] = value;
        }
    }
    Ok(CouplingMatrix { entries: m, nn_value: t_rate, nnn_value: nnn_ratio * t_rate })
}

/// Appends a straight absorbing chain of `sink_len` waveguides after the
/// layout's exit, collinear with the main chain, coupled at `coupling`.
///
/// The maze block is copied unchanged. New couplings: exit to first sink
/// guide and consecutive sink guides at `coupling`; any maze node sitting at
/// a sqrt(2) diagonal from a sink cell picks up the layout's parasitic
/// value. Returns the extended matrix and the sink indices.
pub fn append_sink_chain(
    base: &CouplingMatrix,
    layout: &Layout,
    sink_len: usize,
    coupling: f64,
) -> Result<(CouplingMatrix, Vec<usize>)> {
    base.validate()?;
    let n = base.size();
    if n != layout.node_count() {
        return Err(SimError::BadCouplings(format!(
            "matrix size {n} does not match layout size {}",
            layout.node_count()
        )));
    }
    if sink_len == 0 {
        return Ok((base.clone(), Vec::new()));
    }
    if coupling <= 0.0 {
        return Err(SimError::BadParameter("sink coupling must be positive".into()));
    }
    let out = layout.out_node();
    let (x_out, y_out) = layout.positions[out];

    let total = n + sink_len;
    let mut m = DMatrix::zeros(total, total);
    m.view_mut((0, 0), (n, n)).copy_from(&base.entries);

    let sink_cell = |k: usize| (x_out + 1 + k as i64, y_out);
    for k in 0..sink_len {
        let cell = sink_cell(k);
        if layout.positions.contains(&cell) {
            return Err(SimError::UnfoldInfeasible {
                anchor: out,
                reason: format!("maze occupies sink cell ({}, {})", cell.0, cell.1),
            });
        }
    }

    for k in 0..sink_len {
        let idx = n + k;
        let (xs, ys) = sink_cell(k);
        let prev = if k == 0 { out } else { idx - 1 };
        m[(prev, idx)] = coupling;
        m[(idx, prev)] = coupling;
        // Parasitic diagonals between maze nodes and sink cells.
        for (i, &(xi, yi)) in layout.positions.iter().enumerate() {
            let d2 = (xi - xs).pow(2) + (yi - ys).pow(2);
            if d2 == 1 && i != prev {
                return Err(SimError::UnfoldInfeasible {
                    anchor: out,
                    reason: format!("maze node {i} touches sink guide {k}"),
                });
            }
            if d2 == 2 && base.nnn_value > 0.0 {
                m[(i, idx)] = base.nnn_value;
                m[(idx, i)] = base.nnn_value;
            }
        }
    }

    let ext = CouplingMatrix { entries: m, nn_value: base.nn_value, nnn_value: base.nnn_value };
    ext.validate()?;
    Ok((ext, (n..total).collect()))
}

/// Coordinate-list CSV: header `i,j,value`, upper triangle, nonzero only.
/// A `# nodes=N` comment pins the size for graphs whose last node is
/// isolated in the upper triangle.
pub fn to_csv(c: &CouplingMatrix) -> String {
    let n = c.size();
    let mut out = String::with_capacity(n * 12);
    out.push_str(&format!("# nodes={n}\n"));
    out.push_str("i,j,value\n");
    for i in 0..n {
        for j in (i + 1)..n {
            let v = c.entries[(i, j)];
            if v != 0.0 {
                out.push_str(&format!("{i},{j},{v}\n"));
            }
        }
    }
    out
}

pub fn from_csv(text: &str) -> Result<CouplingMatrix> {
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut declared: Option<usize> = None;
    let mut max_idx = 0usize;
    let mut header_seen = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(eq) = comment.trim().strip_prefix("nodes=") {
                declared = eq.trim().parse::<usize>().ok();
            }
            continue;
        }
        if !header_seen {
            if line != "i,j,value" {
                return Err(SimError::Parse(format!("expected header i,j,value, got {line:?}")));
            }
            header_seen = true;
            continue;
        }
        let mut parts = line.split(',').map(str::trim);
        let (Some(si), Some(sj), Some(sv)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(SimError::Parse(format!("short row at line {}", lineno + 1)));
        };
        let i: usize =
            si.parse().map_err(|_| SimError::Parse(format!("bad index at line {}", lineno + 1)))?;
        let j: usize =
            sj.parse().map_err(|_| SimError::Parse(format!("bad index at line {}", lineno + 1)))?;
        let v: f64 =
            sv.parse().map_err(|_| SimError::Parse(format!("bad value at line {}", lineno + 1)))?;
        max_idx = max_idx.max(i).max(j);
        entries.push((i, j, v));
    }
    if entries.is_empty() {
        return Err(SimError::EmptyInput("coupling CSV has no rows".into()));
    }
    let n = declared.unwrap_or(max_idx + 1);
    if n <= max_idx {
        return Err(SimError::Parse(format!("declared nodes={n} but found index {max_idx}")));
    }
    let mut m = DMatrix::zeros(n, n);
    let mut nn: f64 = 0.0;
    let mut nnn = f64::INFINITY;
    for (i, j, v) in entries {
        m[(i, j)] = v;
        m[(j, i)] = v;
        nn = nn.max(v);
        if v > 0.0 {
            nnn = nnn.min(v);
        }
    }
    let c =
        CouplingMatrix { entries: m, nn_value: nn, nnn_value: if nnn < nn { nnn } else { 0.0 } };
    c.validate()?;
    Ok(c)
}
