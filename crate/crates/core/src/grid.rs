//! Uniform grids on intervals and rectangles with a mirrored-ghost Neumann
//! Laplacian.
//!
//! The boundary closure reflects the first interior node (`2(u_1 - u_0)/h^2`
//! at the left end), which keeps the stencil exact on constants, conservative
//! under the trapezoidal weights, and self-adjoint in the weighted inner
//! product.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dimension")]
pub enum Grid {
    #[serde(rename = "1")]
    OneD { length: f64, nodes: usize },
    #[serde(rename = "2")]
    TwoD { length_x: f64, length_y: f64, nodes_x: usize, nodes_y: usize },
}

impl Grid {
    pub fn interval(length: f64, nodes: usize) -> Result<Self> {
        check_axis(length, nodes)?;
        Ok(Grid::OneD { length, nodes })
    }

    pub fn rectangle(length_x: f64, length_y: f64, nodes_x: usize, nodes_y: usize) -> Result<Self> {
        check_axis(length_x, nodes_x)?;
        check_axis(length_y, nodes_y)?;
        Ok(Grid::TwoD { length_x, length_y, nodes_x, nodes_y })
    }

    pub fn node_count(&self) -> usize {
        match self {
            Grid::OneD { nodes, .. } => *nodes,
            Grid::TwoD { nodes_x, nodes_y, .. } => nodes_x * nodes_y,
        }
    }

    /// Grid spacing along `axis` (0 = x, 1 = y).
    pub fn spacing(&self, axis: usize) -> f64 {
        match self {
            Grid::OneD { length, nodes } => length / (nodes - 1) as f64,
            Grid::TwoD { length_x, length_y, nodes_x, nodes_y } => {
                if axis == 0 {
                    length_x / (nodes_x - 1) as f64
                } else {
                    length_y / (nodes_y - 1) as f64
                }
            }
        }
    }

    /// Physical x-coordinate of node `j` (1-D) or of the x-index (2-D).
    pub fn x_coord(&self, ix: usize) -> f64 {
        ix as f64 * self.spacing(0)
    }

    pub fn y_coord(&self, iy: usize) -> f64 {
        iy as f64 * self.spacing(1)
    }

    /// Trapezoidal quadrature weights over the nodes (tensor product in 2-D).
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        match self {
            Grid::OneD { nodes, .. } => {
                let h = self.spacing(0);
                axis_weights(*nodes, h)
            }
            Grid::TwoD { nodes_x, nodes_y, .. } => {
                let wx = axis_weights(*nodes_x, self.spacing(0));
                let wy = axis_weights(*nodes_y, self.spacing(1));
                let mut out = Vec::with_capacity(nodes_x * nodes_y);
                for wy_v in &wy {
                    for wx_v in &wx {
                        out.push(wx_v * wy_v);
                    }
                }
                out
            }
        }
    }

    /// Applies the Neumann Laplacian to one species' nodal values:
    /// `out[j] = (Lap u)[j]`. In 2-D the stencil is the sum of the two 1-D
    /// axis stencils on the row-major `iy * nodes_x + ix` numbering.
    pub fn neumann_laplacian_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        let m = self.node_count();
        if u.len() != m || out.len() != m {
            return Err(CoreError::InvalidParameter {
                name: "u",
                detail: format!("expected {m} nodal values, got {}", u.len()),
            });
        }
        match self {
            Grid::OneD { .. } => {
                let inv_h2 = 1.0 / (self.spacing(0) * self.spacing(0));
                axis_laplacian_1d(u, inv_h2, out);
            }
            Grid::TwoD { nodes_x, nodes_y, .. } => {
                let nx = *nodes_x;
                let ny = *nodes_y;
                let inv_hx2 = 1.0 / (self.spacing(0) * self.spacing(0));
                let inv_hy2 = 1.0 / (self.spacing(1) * self.spacing(1));
                for (iy, chunk) in out.chunks_mut(nx).enumerate() {
                    let row = &u[iy * nx..(iy + 1) * nx];
                    axis_laplacian_1d(row, inv_hx2, chunk);
                }
                for ix in 0..nx {
                    for iy in 0..ny {
                        let c = u[iy * nx + ix];
                        let up = if iy == 0 { u[nx + ix] } else { u[(iy - 1) * nx + ix] };
                        let dn = if iy == ny - 1 { u[(ny - 2) * nx + ix] } else { u[(iy + 1) * nx + ix] };
                        out[iy * nx + ix] += (up - 2.0 * c + dn) * inv_hy2;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn neumann_laplacian(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.node_count()];
        self.neumann_laplacian_into(u, &mut out)?;
        Ok(out)
    }

    /// Stencil coefficients of row `node` as `(neighbor, weight)` pairs,
    /// used to assemble implicit matrices. Includes the diagonal.
    pub fn laplacian_row(&self, node: usize) -> Vec<(usize, f64)> {
        match self {
            Grid::OneD { nodes, .. } => {
                let inv_h2 = 1.0 / (self.spacing(0) * self.spacing(0));
                axis_row(node, *nodes, 1, inv_h2)
            }
            Grid::TwoD { nodes_x, nodes_y, .. } => {
                let nx = *nodes_x;
                let ix = node % nx;
                let iy = node / nx;
                let inv_hx2 = 1.0 / (self.spacing(0) * self.spacing(0));
                let inv_hy2 = 1.0 / (self.spacing(1) * self.spacing(1));
                let mut row = axis_row(ix, nx, 1, inv_hx2)
                    .into_iter()
                    .map(|(j, w)| (iy * nx + j, w))
                    .collect::<Vec<_>>();
                for (jy, w) in axis_row(iy, *nodes_y, 1, inv_hy2) {
                    merge_entry(&mut row, jy * nx + ix, w);
                }
                row
            }
        }
    }
}

fn check_axis(length: f64, nodes: usize) -> Result<()> {
    if nodes < 3 {
        return Err(CoreError::InvalidParameter {
            name: "nodes",
            detail: format!("need at least 3 nodes per axis, got {nodes}"),
        });
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(CoreError::InvalidParameter {
            name: "length",
            detail: format!("axis length must be positive and finite, got {length}"),
        });
    }
    Ok(())
}

fn axis_weights(nodes: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; nodes];
    w[0] = 0.5 * h;
    w[nodes - 1] = 0.5 * h;
    w
}

fn axis_laplacian_1d(u: &[f64], inv_h2: f64, out: &mut [f64]) {
    let m = u.len();
    out[0] = 2.0 * (u[1] - u[0]) * inv_h2;
    for j in 1..m - 1 {
        out[j] = (u[j - 1] - 2.0 * u[j] + u[j + 1]) * inv_h2;
    }
    out[m - 1] = 2.0 * (u[m - 2] - u[m - 1]) * inv_h2;
}

fn axis_row(i: usize, m: usize, stride: usize, inv_h2: f64) -> Vec<(usize, f64)> {
    let _ = stride;
    if i == 0 {
        vec![(0, -2.0 * inv_h2), (1, 2.0 * inv_h2)]
    } else if i == m - 1 {
        vec![(m - 2, 2.0 * inv_h2), (m - 1, -2.0 * inv_h2)]
    } else {
        vec![(i - 1, inv_h2), (i, -2.0 * inv_h2), (i + 1, inv_h2)]
    }
}

fn merge_entry(row: &mut Vec<(usize, f64)>, j: usize, w: f64) {
    for entry in row.iter_mut() {
        if entry.0 == j {
            entry.1 += w;
            return;
        }
    }
    row.push((j, w));
}
