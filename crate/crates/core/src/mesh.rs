//! Structured quadrilateral meshes of the unit square.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Uniform `N × N` decomposition of `(0,1)²` into axis-aligned squares.
///
/// Vertices are numbered lexicographically by `(y, x)`: vertex `(i, j)` with
/// `x = i/N`, `y = j/N` has index `j (N+1) + i`. Cell `(i, j)` has index
/// `j N + i` and lists its vertices counterclockwise starting at the lower
/// left corner.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    cells_per_side: usize,
    vertices: Vec<[f64; 2]>,
    cells: Vec<[usize; 4]>,
    h: f64,
    boundary_vertex_flags: Vec<bool>,
}

impl Mesh {
    pub fn cells_per_side(&self) -> usize {
        self.cells_per_side
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 4]] {
        &self.cells
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Cell diameter `sqrt(2)/N`.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Side length `1/N` of every cell.
    pub fn cell_size(&self) -> f64 {
        1.0 / self.cells_per_side as f64
    }

    pub fn boundary_vertex_flags(&self) -> &[bool] {
        &self.boundary_vertex_flags
    }

    /// Lower-left corner of a cell.
    pub fn cell_origin(&self, cell: usize) -> [f64; 2] {
        self.vertices[self.cells[cell][0]]
    }

    /// Maps a point of the reference cell `[0,1]²` into `cell`.
    pub fn map_to_cell(&self, cell: usize, ref_point: [f64; 2]) -> [f64; 2] {
        let o = self.cell_origin(cell);
        let s = self.cell_size();
        [o[0] + s * ref_point[0], o[1] + s * ref_point[1]]
    }

    /// Cell containing `x` together with the reference coordinates of `x`.
    /// Points on interior edges are assigned to the cell above/right.
    pub fn locate(&self, x: [f64; 2]) -> (usize, [f64; 2]) {
        let n = self.cells_per_side;
        let nf = n as f64;
        let ix = ((x[0] * nf).floor().max(0.0) as usize).min(n - 1);
        let iy = ((x[1] * nf).floor().max(0.0) as usize).min(n - 1);
        let cell = iy * n + ix;
        (cell, [x[0] * nf - ix as f64, x[1] * nf - iy as f64])
    }

    pub fn cell_area(&self, _cell: usize) -> f64 {
        self.cell_size() * self.cell_size()
    }

    /// Plain-text dump of vertices and cells for debugging.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# vertices {}", self.vertices.len());
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = writeln!(out, "{i} {} {} {}", v[0], v[1], u8::from(self.boundary_vertex_flags[i]));
        }
        let _ = writeln!(out, "# cells {}", self.cells.len());
        for (i, c) in self.cells.iter().enumerate() {
            let _ = writeln!(out, "{i} {} {} {} {}", c[0], c[1], c[2], c[3]);
        }
        out
    }
}

pub fn build_mesh(cells_per_side: usize) -> Result<Mesh> {
    if cells_per_side == 0 {
        return Err(Error::InvalidArgument("cells_per_side must be at least 1".into()));
    }
    let n = cells_per_side;
    let np = n + 1;
    let mut vertices = Vec::with_capacity(np * np);
    let mut boundary_vertex_flags = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
            boundary_vertex_flags.push(i == 0 || j == 0 || i == n || j == n);
        }
    }
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let v0 = j * np + i;
            cells.push([v0, v0 + 1, v0 + np + 1, v0 + np]);
        }
    }
    Ok(Mesh {
        cells_per_side: n,
        vertices,
        cells,
        h: std::f64::consts::SQRT_2 / n as f64,
        boundary_vertex_flags,
    })
}

/// Uniform refinement: every cell is split into four.
pub fn refine(mesh: &Mesh) -> Result<Mesh> {
    build_mesh(2 * mesh.cells_per_side)
}
