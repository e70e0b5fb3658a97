//! Partial 2-colorings and assembly of CRT(q) / CRT+ solutions from toasts.

use crate::error::{Error, Result};
use crate::grid::{Coord, GridBox, Point, Rect};
use crate::lcl::MIN_Q;
use crate::toast::{label_from_toast, union_mask, Label, Labeling, Toast, BITS, RB01};
use std::collections::VecDeque;

/// A {0, 1, blank} labeling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialColoring {
    pub grid: GridBox,
    pub values: Vec<Label>,
}

impl PartialColoring {
    pub fn in_domain(&self, idx: usize) -> bool {
        self.values[idx] != Label::Blank
    }

    /// No two adjacent colored cells share a color.
    pub fn is_proper(&self) -> bool {
        (0..self.grid.len()).all(|i| {
            !self.in_domain(i)
                || (0..self.grid.n())
                    .filter_map(|a| self.grid.step(i, a, 1))
                    .all(|j| !self.in_domain(j) || self.values[j] != self.values[i])
        })
    }
}

/// Colors each component of `mask` by BFS distance parity from its lexicographically least cell.
pub fn partial_two_color(mask: &[bool], grid: &GridBox) -> Result<PartialColoring> {
    if mask.len() != grid.len() {
        return Err(Error::usage("mask size does not match the box"));
    }
    let mut values = vec![Label::Blank; grid.len()];
    let mut queue = VecDeque::new();
    // index order is lexicographic, so the first unvisited cell is its component's minimum
    for root in 0..grid.len() {
        if !mask[root] || values[root] != Label::Blank {
            continue;
        }
        values[root] = Label::ZERO;
        queue.push_back(root);
        while let Some(i) = queue.pop_front() {
            let next = if values[i] == Label::ZERO { Label::ONE } else { Label::ZERO };
            for j in grid.neighbors(i) {
                if mask[j] && values[j] == Label::Blank {
                    values[j] = next;
                    queue.push_back(j);
                }
            }
        }
    }
    Ok(PartialColoring { grid: grid.clone(), values })
}

/// Both cells are colored and lie in different components of the colored set.
pub fn c_separated(c: &PartialColoring, x: &[Coord], y: &[Coord]) -> bool {
    let (Some(xi), Some(yi)) = (c.grid.index(x), c.grid.index(y)) else {
        return false;
    };
    if !c.in_domain(xi) || !c.in_domain(yi) || xi == yi {
        return false;
    }
    let mut seen = vec![false; c.grid.len()];
    let mut queue = VecDeque::from([xi]);
    seen[xi] = true;
    while let Some(i) = queue.pop_front() {
        if i == yi {
            return false;
        }
        for j in c.grid.neighbors(i) {
            if c.in_domain(j) && !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    true
}

fn parity(p: &[Coord]) -> Label {
    Label::Digit(p.iter().sum::<Coord>().rem_euclid(2) as u8)
}

/// Refines the green cells of the toast labeling into a partial 2-coloring.
pub fn assemble_crt(t: &Toast, q: u32) -> Result<Labeling> {
    if q < MIN_Q {
        return Err(Error::precondition(format!("CRT assembly needs q >= {MIN_Q}")));
    }
    let grid = t.grid();
    if grid.is_torus() && (0..grid.n()).any(|a| grid.extent(a) % 2 != 0) {
        return Err(Error::precondition("CRT assembly on a torus needs even periods"));
    }
    let f = label_from_toast(t)?;
    let union = union_mask(t);
    let inside: Vec<bool> = (0..grid.len()).map(|i| union[i] && f.cells[i] == Label::Green).collect();
    let c = partial_two_color(&inside, grid)?;
    let cells = (0..grid.len())
        .map(|i| match f.cells[i] {
            Label::Green if inside[i] => c.values[i],
            Label::Green => parity(&grid.coords(i)),
            other => other,
        })
        .collect();
    Labeling::from_cells(grid.clone(), &RB01, cells)
}

/// The staircases beside the low-x and low-y faces of a planar rectangle.
pub fn d_regions(k: &Rect) -> Result<(Vec<Point>, Vec<Point>)> {
    if k.n() != 2 {
        return Err(Error::Unsupported(format!("staircase regions are planar, got n = {}", k.n())));
    }
    if k.any_clipped() {
        return Err(Error::precondition("staircase regions need an unclipped rectangle"));
    }
    let (x0, y0) = (k.lo[0], k.lo[1]);
    let (a, b) = (k.side(0), k.side(1));
    let mut d1 = Vec::new();
    for i in 0..=b {
        for t in 0..=(b - i) {
            d1.push(Point::from_slice(&[x0 - 1 - i, y0 + t]));
        }
    }
    let mut d2 = Vec::new();
    for i in 0..=a {
        for s in 0..=(a - i) {
            d2.push(Point::from_slice(&[x0 + s, y0 - 1 - i]));
        }
    }
    d1.sort();
    d2.sort();
    Ok((d1, d2))
}

/// `f = assemble_crt(t)` with `h_i` the indicator of the union of the i-th staircases.
pub fn assemble_crt_plus(t: &Toast, q: u32) -> Result<(Labeling, Labeling, Labeling)> {
    let grid = t.grid();
    if grid.n() != 2 {
        return Err(Error::Unsupported(format!("CRT+ is planar, got n = {}", grid.n())));
    }
    if !t.is_validated() || !t.big_gap_certified() {
        return Err(Error::precondition("CRT+ assembly needs a validated toast with big gaps"));
    }
    let f = assemble_crt(t, q)?;
    let mut h1 = Labeling::filled(grid.clone(), &BITS, Label::ZERO);
    let mut h2 = h1.clone();
    for k in t.pieces() {
        let (d1, d2) = d_regions(k)?;
        for p in &d1 {
            h1.set(p, Label::ONE);
        }
        for p in &d2 {
            h2.set(p, Label::ONE);
        }
    }
    Ok((f, h1, h2))
}

/// Whether the i-th staircases of distinct pieces never share a cell of the box, for i = 1, 2.
pub fn d_regions_disjoint(t: &Toast) -> Result<bool> {
    let grid = t.grid();
    for which in 0..2 {
        let mut owner = vec![usize::MAX; grid.len()];
        for (pi, k) in t.pieces().iter().enumerate() {
            let (d1, d2) = d_regions(k)?;
            for p in if which == 0 { &d1 } else { &d2 } {
                if let Some(i) = grid.index(p) {
                    if owner[i] != usize::MAX && owner[i] != pi {
                        return Ok(false);
                    }
                    owner[i] = pi;
                }
            }
        }
    }
    Ok(true)
}
