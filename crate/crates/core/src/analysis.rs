//! Structure recovery from R/B/G labelings and statistics over toasts.

use crate::error::{Error, Result};
use crate::grid::{GridBox, Point, Rect};
use crate::lcl::{verify_labeling, LclProblem};
use crate::toast::{containment_counts, label_from_toast, union_mask, Label, Labeling, Toast, RBG};
use std::collections::VecDeque;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShapeKind {
    /// A finite rectangle with all sides at least q.
    FiniteRect,
    /// A rectangle running into the edge of the box on some side.
    Extending,
}

impl ShapeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ShapeKind::FiniteRect => "finite",
            ShapeKind::Extending => "extending",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shape {
    pub component_id: usize,
    pub kind: ShapeKind,
    pub rect: Rect,
}

/// Checks RT(q) on every window, then recovers one rectangle per red component.
pub fn extract_red_structure(f: &Labeling, q: u32) -> Result<Vec<Shape>> {
    let bad = verify_labeling(&LclProblem::Rt(q), f)?;
    if let Some(v) = bad.first() {
        return Err(Error::usage(format!(
            "labeling has {} RT({q}) window violation(s), first at {:?}",
            bad.len(),
            v.anchor.as_slice()
        )));
    }
    extract_red_structure_unchecked(f, q)
}

/// Recovers rectangles without verifying windows first.
///
/// For each red component `R` with adjacent blue cells `B`, the region
/// reachable from `R` without crossing an `R`-`B` edge must be a product of
/// intervals.
pub fn extract_red_structure_unchecked(f: &Labeling, q: u32) -> Result<Vec<Shape>> {
    if let Some(l) = f.cells.iter().find(|l| !RBG.contains(l)) {
        return Err(Error::usage(format!("label `{l}` outside {{R,B,G}}")));
    }
    let grid = &f.grid;
    let len = grid.len();
    let mut comp = vec![u32::MAX; len];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for root in 0..len {
        if f.cells[root] != Label::Red || comp[root] != u32::MAX {
            continue;
        }
        let id = comps.len() as u32;
        let mut cells = vec![root];
        comp[root] = id;
        let mut k = 0;
        while k < cells.len() {
            let i = cells[k];
            k += 1;
            for j in grid.neighbors(i) {
                if f.cells[j] == Label::Red && comp[j] == u32::MAX {
                    comp[j] = id;
                    cells.push(j);
                }
            }
        }
        comps.push(cells);
    }
    let mut blue_mark = vec![u32::MAX; len];
    let mut seen = vec![u32::MAX; len];
    let mut shapes = Vec::with_capacity(comps.len());
    for (id, cells) in comps.iter().enumerate() {
        let id32 = id as u32;
        for &i in cells {
            for j in grid.neighbors(i) {
                if f.cells[j] == Label::Blue {
                    blue_mark[j] = id32;
                }
            }
        }
        let mut region = Vec::new();
        let mut queue: VecDeque<usize> = cells.iter().copied().collect();
        for &i in cells {
            seen[i] = id32;
        }
        while let Some(i) = queue.pop_front() {
            region.push(i);
            let from_red = comp[i] == id32;
            for j in grid.neighbors(i) {
                if seen[j] == id32 {
                    continue;
                }
                let bad = (from_red && blue_mark[j] == id32) || (blue_mark[i] == id32 && comp[j] == id32);
                if bad {
                    continue;
                }
                seen[j] = id32;
                queue.push_back(j);
            }
        }
        let rect = fit_product(grid, &region)
            .ok_or_else(|| Error::precondition(format!("red component {id} does not bound a product of intervals")))?;
        let kind = if rect.any_clipped() {
            ShapeKind::Extending
        } else if rect.min_side() >= q as i64 {
            ShapeKind::FiniteRect
        } else {
            return Err(Error::precondition(format!("red component {id} bounds a rectangle with a side below q")));
        };
        shapes.push(Shape { component_id: id, kind, rect });
    }
    Ok(shapes)
}

/// The smallest product of intervals holding `cells`, if it has no other cells.
fn fit_product(grid: &GridBox, cells: &[usize]) -> Option<Rect> {
    let n = grid.n();
    let mut lo = Point::new();
    let mut hi = Point::new();
    let mut clip = Vec::with_capacity(n);
    for a in 0..n {
        let ext = grid.extent(a) as usize;
        let mut occ = vec![false; ext];
        for &i in cells {
            occ[grid.axis_offset(i, a)] = true;
        }
        if grid.is_torus() {
            if occ.iter().all(|&b| b) {
                lo.push(grid.lo()[a]);
                hi.push(grid.hi()[a]);
                clip.push([true, true]);
                continue;
            }
            // the occupied arc is the complement of the longest free arc
            // scanning from just past an occupied cell keeps free arcs unsplit
            let start = occ.iter().position(|&b| b)? + 1;
            let (mut best_len, mut best_end) = (0usize, 0usize);
            let mut run = 0usize;
            for s in 0..ext {
                let k = (start + s) % ext;
                if !occ[k] {
                    run += 1;
                    if run > best_len {
                        best_len = run;
                        best_end = k;
                    }
                } else {
                    run = 0;
                }
            }
            let first = (best_end + 1) % ext;
            let l = grid.lo()[a] + first as i64;
            lo.push(l);
            hi.push(l + (ext - best_len) as i64 - 1);
            clip.push([false, false]);
        } else {
            let first = occ.iter().position(|&b| b)?;
            let last = occ.iter().rposition(|&b| b)?;
            lo.push(grid.lo()[a] + first as i64);
            hi.push(grid.lo()[a] + last as i64);
            clip.push([first == 0, last + 1 == ext]);
        }
    }
    let mut r = Rect::new(&lo, &hi).ok()?;
    if r.volume() != cells.len() as u128 {
        return None;
    }
    for (a, c) in clip.iter().enumerate() {
        r = r.with_clipped(a, false, c[0]).with_clipped(a, true, c[1]);
    }
    Some(r)
}

fn is_bad_edge(a: Label, b: Label) -> bool {
    matches!((a, b), (Label::Red, Label::Blue) | (Label::Blue, Label::Red))
}

/// A unit 4-cycle `x, x+e_i, x+e_i+e_j, x+e_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FourCycle {
    pub corner: Point,
    pub axes: (usize, usize),
    pub bad_edges: usize,
}

/// The first in-box unit 4-cycle with an odd number of red-blue edges, if any.
pub fn four_cycle_parity_check(f: &Labeling) -> Option<FourCycle> {
    let grid = &f.grid;
    for x in 0..grid.len() {
        for i in 0..grid.n() {
            for j in i + 1..grid.n() {
                let (Some(xi), Some(xj)) = (grid.step(x, i, 1), grid.step(x, j, 1)) else {
                    continue;
                };
                let Some(xij) = grid.step(xi, j, 1) else {
                    continue;
                };
                let c = |u: usize, v: usize| is_bad_edge(f.cells[u], f.cells[v]) as usize;
                let bad = c(x, xi) + c(xi, xij) + c(xij, xj) + c(xj, x);
                if bad % 2 == 1 {
                    return Some(FourCycle { corner: grid.coords(x), axes: (i, j), bad_edges: bad });
                }
            }
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HexReport {
    pub connected: bool,
    pub far_cells: usize,
    pub witness: Option<(Point, Point)>,
}

/// Whether green cells at distance at least 2 from the toast's union form one green component.
pub fn hex_connectivity_check(t: &Toast) -> Result<HexReport> {
    let grid = t.grid();
    if !grid.is_torus() {
        return Err(Error::Unsupported("hex connectivity is checked on tori only".into()));
    }
    let f = label_from_toast(t)?;
    let union = union_mask(t);
    let far: Vec<bool> = (0..grid.len())
        .map(|i| !union[i] && grid.neighbors(i).iter().all(|&j| !union[j]))
        .collect();
    let far_cells = far.iter().filter(|&&b| b).count();
    let Some(root) = far.iter().position(|&b| b) else {
        return Ok(HexReport { connected: true, far_cells, witness: None });
    };
    let mut seen = vec![false; grid.len()];
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(i) = queue.pop_front() {
        for j in grid.neighbors(i) {
            if !seen[j] && f.cells[j] == Label::Green {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    let other = (0..grid.len()).find(|&i| far[i] && !seen[i]);
    Ok(HexReport {
        connected: other.is_none(),
        far_cells,
        witness: other.map(|o| (grid.coords(root), grid.coords(o))),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContainmentBound {
    /// `(sum_{N=max(q,1)}^{N_max} N r^N)^n` with `r = (1 - eps)^(1/|D|^2)`.
    pub value: f64,
    /// Upper estimate of the omitted part of the infinite series, plus rounding slack.
    pub tail_estimate: f64,
}

/// Series bound on the expected number of pieces containing a point.
///
/// Side lengths below `q` cannot occur, so the sum starts at `max(q, 1)`.
pub fn containment_bound(n: usize, q: u32, epsilon: f64, d_size: u64, n_max: u64) -> Result<ContainmentBound> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::usage(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if d_size == 0 || n == 0 {
        return Err(Error::usage("dimension and |D| must be positive"));
    }
    let r = (1.0 - epsilon).powf(1.0 / (d_size as f64 * d_size as f64));
    let start = (q as u64).max(1);
    let mut s = 0.0f64;
    for k in start..=n_max.max(start - 1) {
        s += k as f64 * r.powf(k as f64);
    }
    let m = n_max.max(start - 1) as f64;
    let tail = r.powf(m + 1.0) * ((m + 1.0) - m * r) / ((1.0 - r) * (1.0 - r));
    let value = s.powi(n as i32);
    let analytic = n as f64 * tail * (s + tail).powi(n as i32 - 1);
    let rounding = 4.0 * (m + 1.0) * f64::EPSILON * (s + tail).powi(n as i32);
    Ok(ContainmentBound { value, tail_estimate: analytic + rounding })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContainmentStats {
    pub mean: f64,
    pub max: u32,
    /// `histogram[k]` cells are contained in exactly `k` pieces.
    pub histogram: Vec<u64>,
}

pub fn containment_stats(t: &Toast) -> Result<ContainmentStats> {
    let counts = containment_counts(t)?;
    let max = counts.iter().copied().max().unwrap_or(0);
    let mut histogram = vec![0u64; max as usize + 1];
    let mut total: u64 = 0;
    for &c in &counts {
        histogram[c as usize] += 1;
        total += c as u64;
    }
    let mean = if counts.is_empty() { 0.0 } else { total as f64 / counts.len() as f64 };
    Ok(ContainmentStats { mean, max, histogram })
}
