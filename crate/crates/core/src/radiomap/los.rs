//! Supercover walk of the direct TX-RX ray over the building grid.
//!
//! The walk joins cell centers and visits every cell whose closed square the
//! 2D segment touches, including both side cells when the segment passes
//! exactly through a grid corner. Crossing order is decided with integer
//! arithmetic, so corner passes are detected exactly.

use super::{BuildingGrid, TxConfig};

/// A cell touched by the segment, with the parametric interval `[t_in, t_out]`
/// (0 at the start center, 1 at the end center) spent inside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub x: usize,
    pub y: usize,
    pub t_in: f64,
    pub t_out: f64,
    /// Touched only at a grid corner (`t_in == t_out`).
    pub corner: bool,
}

/// Cells touched by the segment between the centers of `from` and `to`, in
/// walk order.
pub fn supercover(from: (usize, usize), to: (usize, usize)) -> Vec<Crossing> {
    let (x0, y0) = (from.0 as i64, from.1 as i64);
    let dx = to.0 as i64 - x0;
    let dy = to.1 as i64 - y0;
    let (nx, ny) = (dx.abs(), dy.abs());
    let (sx, sy) = (dx.signum(), dy.signum());

    let mut out = Vec::with_capacity((nx + ny + 1) as usize);
    let (mut x, mut y) = (x0, y0);
    let (mut ix, mut iy) = (0i64, 0i64);
    let mut t_in = 0.0;
    let cell = |x: i64, y: i64, t_in: f64, t_out: f64, corner: bool| Crossing {
        x: x as usize,
        y: y as usize,
        t_in,
        t_out,
        corner,
    };

    while ix < nx || iy < ny {
        // Next vertical-line crossing at (1 + 2ix) / (2nx), next horizontal at
        // (1 + 2iy) / (2ny); compare by cross-multiplication.
        let lhs = (1 + 2 * ix) * ny;
        let rhs = (1 + 2 * iy) * nx;
        if lhs == rhs {
            let t = (1 + 2 * ix) as f64 / (2 * nx) as f64;
            out.push(cell(x, y, t_in, t, false));
            out.push(cell(x + sx, y, t, t, true));
            out.push(cell(x, y + sy, t, t, true));
            x += sx;
            y += sy;
            ix += 1;
            iy += 1;
            t_in = t;
        } else if lhs < rhs {
            let t = (1 + 2 * ix) as f64 / (2 * nx) as f64;
            out.push(cell(x, y, t_in, t, false));
            x += sx;
            ix += 1;
            t_in = t;
        } else {
            let t = (1 + 2 * iy) as f64 / (2 * ny) as f64;
            out.push(cell(x, y, t_in, t, false));
            y += sy;
            iy += 1;
            t_in = t;
        }
    }
    out.push(cell(x, y, t_in, 1.0, false));
    out
}

/// Obstruction summary of one sight line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SightProfile {
    /// No building reaches the sight line.
    pub clear: bool,
    /// Maximal contiguous runs of obstructing cells along the line.
    pub wall_runs: u32,
}

/// Traces the 3D segment from `(a, h_a)` to `(b, h_b)`.
///
/// At each touched cell the sight-line height is taken at the midpoint of the
/// cell's parametric interval; the cell obstructs unless that height is
/// strictly above the building. The two side cells of a corner pass form one
/// unit when counting runs.
pub fn sight_profile(grid: &BuildingGrid, a: (usize, usize), h_a: f64, b: (usize, usize), h_b: f64) -> SightProfile {
    // Walk in a canonical direction so that swapping endpoints is bit-identical.
    let (a, h_a, b, h_b) = if (b.1, b.0) < (a.1, a.0) { (b, h_b, a, h_a) } else { (a, h_a, b, h_b) };

    let blocks = |c: &Crossing| {
        let t = 0.5 * (c.t_in + c.t_out);
        let sight = h_a + (h_b - h_a) * t;
        !(sight > grid.height_at(c.x, c.y))
    };

    let path = supercover(a, b);
    let mut runs = 0u32;
    let mut prev_blocked = false;
    let mut i = 0;
    while i < path.len() {
        let blocked = if path[i].corner {
            let pair = blocks(&path[i]) || blocks(&path[i + 1]);
            i += 2;
            pair
        } else {
            let b = blocks(&path[i]);
            i += 1;
            b
        };
        if blocked && !prev_blocked {
            runs += 1;
        }
        prev_blocked = blocked;
    }
    SightProfile { clear: runs == 0, wall_runs: runs }
}

/// Whether the direct ray from the TX antenna to an RX antenna at `rx` clears
/// every building it passes over.
pub fn line_of_sight(grid: &BuildingGrid, tx: &TxConfig, rx: (usize, usize)) -> bool {
    sight_profile(grid, (tx.x, tx.y), tx.h_tx, rx, tx.h_rx).clear
}
