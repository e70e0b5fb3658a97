//! Finite boxes in Z^n, axis-aligned rectangles and L1 distances.
//!
//! Flat indices are row-major with the last axis varying fastest, so index
//! order coincides with lexicographic order of coordinates.

use crate::error::{Error, Result};
use smallvec::SmallVec;
use std::fmt;

pub type Coord = i64;
pub type Point = SmallVec<[Coord; 4]>;

pub fn point(c: &[Coord]) -> Point {
    Point::from_slice(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Topology {
    HardBoundary,
    Torus,
}

impl Topology {
    pub fn as_str(self) -> &'static str {
        match self {
            Topology::HardBoundary => "hard",
            Topology::Torus => "torus",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "hard" => Ok(Topology::HardBoundary),
            "torus" => Ok(Topology::Torus),
            other => Err(Error::usage(format!("unknown topology `{other}`"))),
        }
    }
}

/// A finite box `[lo, hi]` (inclusive on every axis) with a boundary mode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridBox {
    lo: Point,
    hi: Point,
    topology: Topology,
    strides: Vec<usize>,
    len: usize,
}

impl GridBox {
    pub fn new(lo: &[Coord], hi: &[Coord], topology: Topology) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.is_empty() {
            return Err(Error::config("box must have at least one axis"));
        }
        let n = lo.len();
        let mut strides = vec![0usize; n];
        let mut len: usize = 1;
        for a in (0..n).rev() {
            if hi[a] < lo[a] {
                return Err(Error::config(format!("empty extent on axis {a}")));
            }
            let ext = hi[a]
                .checked_sub(lo[a])
                .and_then(|d| d.checked_add(1))
                .ok_or_else(|| Error::overflow("box extent"))?;
            if topology == Topology::Torus && ext < 3 {
                return Err(Error::config(format!("torus extent on axis {a} must be at least 3")));
            }
            strides[a] = len;
            len = len
                .checked_mul(usize::try_from(ext).map_err(|_| Error::overflow("box extent"))?)
                .ok_or_else(|| Error::overflow("box volume"))?;
        }
        Ok(GridBox { lo: point(lo), hi: point(hi), topology, strides, len })
    }

    /// The square box `[0, side-1]^n`.
    pub fn cube(n: usize, side: Coord, topology: Topology) -> Result<Self> {
        GridBox::new(&vec![0; n], &vec![side - 1; n], topology)
    }

    pub fn n(&self) -> usize {
        self.lo.len()
    }
    pub fn lo(&self) -> &[Coord] {
        &self.lo
    }
    pub fn hi(&self) -> &[Coord] {
        &self.hi
    }
    pub fn topology(&self) -> Topology {
        self.topology
    }
    pub fn is_torus(&self) -> bool {
        self.topology == Topology::Torus
    }
    pub fn extent(&self, axis: usize) -> Coord {
        self.hi[axis] - self.lo[axis] + 1
    }
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Per-axis periods, present only on a torus.
    pub fn periods(&self) -> Option<Point> {
        match self.topology {
            Topology::Torus => Some((0..self.n()).map(|a| self.extent(a)).collect()),
            Topology::HardBoundary => None,
        }
    }

    fn check_dim(&self, p: &[Coord]) -> Result<()> {
        if p.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: p.len() });
        }
        Ok(())
    }

    /// True when `p` is a cell of the box (on a torus, after wrapping).
    pub fn contains(&self, p: &[Coord]) -> bool {
        p.len() == self.n()
            && (self.is_torus() || p.iter().enumerate().all(|(a, &c)| c >= self.lo[a] && c <= self.hi[a]))
    }

    /// Wraps coordinates into `[lo, hi]` on a torus; identity on a hard box.
    pub fn wrap(&self, p: &[Coord]) -> Point {
        match self.topology {
            Topology::HardBoundary => point(p),
            Topology::Torus => p
                .iter()
                .enumerate()
                .map(|(a, &c)| self.lo[a] + (c - self.lo[a]).rem_euclid(self.extent(a)))
                .collect(),
        }
    }

    pub fn index(&self, p: &[Coord]) -> Option<usize> {
        if p.len() != self.n() {
            return None;
        }
        let mut idx = 0usize;
        for (a, &c) in p.iter().enumerate() {
            let off = match self.topology {
                Topology::HardBoundary => {
                    if c < self.lo[a] || c > self.hi[a] {
                        return None;
                    }
                    c - self.lo[a]
                }
                Topology::Torus => (c - self.lo[a]).rem_euclid(self.extent(a)),
            };
            idx += off as usize * self.strides[a];
        }
        Some(idx)
    }

    pub fn coords(&self, idx: usize) -> Point {
        let mut rem = idx;
        self.strides
            .iter()
            .enumerate()
            .map(|(a, &s)| {
                let q = rem / s;
                rem %= s;
                self.lo[a] + q as Coord
            })
            .collect()
    }

    /// Offset of `idx` along `axis`, i.e. `coords(idx)[axis] - lo[axis]`.
    pub fn axis_offset(&self, idx: usize, axis: usize) -> usize {
        (idx / self.strides[axis]) % self.extent(axis) as usize
    }

    /// Index of the cell one step along `axis` in direction `dir` (+1/-1).
    pub fn step(&self, idx: usize, axis: usize, dir: i8) -> Option<usize> {
        let off = self.axis_offset(idx, axis);
        let ext = self.extent(axis) as usize;
        let s = self.strides[axis];
        if dir > 0 {
            if off + 1 < ext {
                Some(idx + s)
            } else if self.is_torus() {
                Some(idx + s - ext * s)
            } else {
                None
            }
        } else if off > 0 {
            Some(idx - s)
        } else if self.is_torus() {
            Some(idx + (ext - 1) * s)
        } else {
            None
        }
    }

    /// Indices of the 2n lattice neighbors present in the box.
    pub fn neighbors(&self, idx: usize) -> SmallVec<[usize; 8]> {
        let mut out = SmallVec::new();
        for a in 0..self.n() {
            for dir in [-1i8, 1] {
                if let Some(j) = self.step(idx, a, dir) {
                    out.push(j);
                }
            }
        }
        out
    }

    /// L1 distance; on a torus, the minimum over all wraps.
    pub fn l1_dist(&self, p: &[Coord], q: &[Coord]) -> Result<u64> {
        self.check_dim(p)?;
        self.check_dim(q)?;
        let mut d: u64 = 0;
        for a in 0..self.n() {
            let diff = p[a].checked_sub(q[a]).ok_or_else(|| Error::overflow("distance"))?;
            let g = match self.topology {
                Topology::HardBoundary => diff.unsigned_abs(),
                Topology::Torus => {
                    let per = self.extent(a);
                    let m = diff.rem_euclid(per);
                    m.min(per - m) as u64
                }
            };
            d = d.checked_add(g).ok_or_else(|| Error::overflow("distance"))?;
        }
        Ok(d)
    }

    pub fn period(&self, axis: usize) -> Option<Coord> {
        self.is_torus().then(|| self.extent(axis))
    }
}

impl fmt::Display for GridBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", join(&self.lo))?;
        write!(f, "..{} ({})", join(&self.hi), self.topology.as_str())
    }
}

pub(crate) fn join(p: &[Coord]) -> String {
    p.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

/// L1 distance in Z^n.
pub fn l1_dist(p: &[Coord], q: &[Coord]) -> Result<u64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), got: q.len() });
    }
    p.iter().zip(q).try_fold(0u64, |acc, (&a, &b)| {
        let d = a.checked_sub(b).ok_or_else(|| Error::overflow("distance"))?;
        acc.checked_add(d.unsigned_abs()).ok_or_else(|| Error::overflow("distance"))
    })
}

/// Calls `f` on every point of the product `[lo, hi]`, last axis fastest.
pub fn for_each_point(lo: &[Coord], hi: &[Coord], mut f: impl FnMut(&[Coord])) {
    let n = lo.len();
    if n == 0 || (0..n).any(|a| hi[a] < lo[a]) {
        return;
    }
    let mut p: Point = point(lo);
    loop {
        f(&p);
        let mut a = n;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            if p[a] < hi[a] {
                p[a] += 1;
                break;
            }
            p[a] = lo[a];
        }
    }
}

/// Gap between intervals `[alo, ahi]` and `[blo, bhi]`; cyclic when a period is given.
pub fn axis_gap(alo: Coord, ahi: Coord, blo: Coord, bhi: Coord, period: Option<Coord>) -> i64 {
    match period {
        None => 0.max(blo - ahi).max(alo - bhi),
        Some(p) => {
            let la = ahi - alo;
            let lb = bhi - blo;
            if la + 1 >= p || lb + 1 >= p {
                return 0;
            }
            let o = (blo - alo).rem_euclid(p);
            if o <= la || o + lb >= p {
                0
            } else {
                (o - la).min(p - (o + lb))
            }
        }
    }
}

/// L1 distance between two products of intervals.
pub fn block_dist(alo: &[Coord], ahi: &[Coord], blo: &[Coord], bhi: &[Coord], periods: Option<&[Coord]>) -> i64 {
    (0..alo.len()).map(|a| axis_gap(alo[a], ahi[a], blo[a], bhi[a], periods.map(|p| p[a]))).sum()
}

/// An axis-aligned rectangle `[lo, hi]` with optional clipped sides.
///
/// A clipped side stands for a face that lies beyond the ambient box and is
/// not part of the rectangle's boundary.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rect {
    pub lo: Point,
    pub hi: Point,
    clipped: u32,
}

impl Rect {
    pub fn new(lo: &[Coord], hi: &[Coord]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.len() > 16 {
            return Err(Error::Unsupported("more than 16 axes".into()));
        }
        if lo.iter().zip(hi).any(|(l, h)| h < l) {
            return Err(Error::config("rectangle with hi < lo"));
        }
        if lo.iter().zip(hi).any(|(l, h)| h.checked_sub(*l).is_none_or(|s| s == Coord::MAX)) {
            return Err(Error::overflow("rectangle side does not fit in a coordinate"));
        }
        Ok(Rect { lo: point(lo), hi: point(hi), clipped: 0 })
    }

    /// The cube `[c - r, c + r]^n`.
    pub fn cube(center: &[Coord], radius: Coord) -> Result<Self> {
        let lo: Point = center
            .iter()
            .map(|&c| c.checked_sub(radius))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::overflow("cube corner"))?;
        let hi: Point = center
            .iter()
            .map(|&c| c.checked_add(radius))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::overflow("cube corner"))?;
        Rect::new(&lo, &hi)
    }

    pub fn with_clipped(mut self, axis: usize, high: bool, clipped: bool) -> Self {
        let bit = 1u32 << (2 * axis + high as usize);
        if clipped {
            self.clipped |= bit;
        } else {
            self.clipped &= !bit;
        }
        self
    }

    pub fn n(&self) -> usize {
        self.lo.len()
    }
    pub fn is_clipped(&self, axis: usize, high: bool) -> bool {
        self.clipped & (1u32 << (2 * axis + high as usize)) != 0
    }
    pub fn any_clipped(&self) -> bool {
        self.clipped != 0
    }
    pub fn clipped_flags(&self) -> Vec<[bool; 2]> {
        (0..self.n()).map(|a| [self.is_clipped(a, false), self.is_clipped(a, true)]).collect()
    }

    /// Side length `hi - lo` along `axis`.
    pub fn side(&self, axis: usize) -> Coord {
        self.hi[axis] - self.lo[axis]
    }
    pub fn min_side(&self) -> Coord {
        (0..self.n()).map(|a| self.side(a)).min().unwrap_or(0)
    }
    pub fn max_side(&self) -> Coord {
        (0..self.n()).map(|a| self.side(a)).max().unwrap_or(0)
    }
    pub fn volume(&self) -> u128 {
        (0..self.n()).map(|a| (self.side(a) + 1) as u128).product()
    }

    pub fn contains_point(&self, p: &[Coord]) -> bool {
        p.len() == self.n() && (0..self.n()).all(|a| p[a] >= self.lo[a] && p[a] <= self.hi[a])
    }

    /// The faces of the rectangle that are not clipped, as products of intervals.
    pub fn faces(&self) -> SmallVec<[(Point, Point); 8]> {
        let mut out = SmallVec::new();
        for a in 0..self.n() {
            for high in [false, true] {
                if self.is_clipped(a, high) {
                    continue;
                }
                let c = if high { self.hi[a] } else { self.lo[a] };
                let mut lo = self.lo.clone();
                let mut hi = self.hi.clone();
                lo[a] = c;
                hi[a] = c;
                out.push((lo, hi));
                if self.lo[a] == self.hi[a] {
                    break;
                }
            }
        }
        out
    }

    /// The slabs just outside each unclipped face.
    pub fn outer_faces(&self) -> SmallVec<[(Point, Point); 8]> {
        let mut out = SmallVec::new();
        for a in 0..self.n() {
            for high in [false, true] {
                if self.is_clipped(a, high) {
                    continue;
                }
                let c = if high { self.hi[a] + 1 } else { self.lo[a] - 1 };
                let mut lo = self.lo.clone();
                let mut hi = self.hi.clone();
                lo[a] = c;
                hi[a] = c;
                out.push((lo, hi));
            }
        }
        out
    }

    /// Whether `self` contains `other`; cyclic on a torus.
    pub fn contains_rect(&self, other: &Rect, periods: Option<&[Coord]>) -> bool {
        (0..self.n()).all(|a| match periods {
            None => self.lo[a] <= other.lo[a] && other.hi[a] <= self.hi[a],
            Some(p) => {
                let p = p[a];
                if self.side(a) + 1 >= p {
                    return true;
                }
                (other.lo[a] - self.lo[a]).rem_euclid(p) + other.side(a) <= self.side(a)
            }
        })
    }

    /// Whether the rectangles share no cell; cyclic on a torus.
    pub fn disjoint(&self, other: &Rect, periods: Option<&[Coord]>) -> bool {
        (0..self.n()).any(|a| axis_gap(self.lo[a], self.hi[a], other.lo[a], other.hi[a], periods.map(|p| p[a])) > 0)
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]..[{}]", join(&self.lo), join(&self.hi))
    }
}

/// Cells of `r` with a lattice neighbor outside `r`, ignoring clipped faces. Sorted.
pub fn rect_boundary(r: &Rect) -> Vec<Point> {
    let mut out = Vec::new();
    for (lo, hi) in r.faces() {
        for_each_point(&lo, &hi, |p| out.push(point(p)));
    }
    out.sort();
    out.dedup();
    out
}

/// Cells outside `r` at L1 distance exactly one, ignoring clipped faces. Sorted.
pub fn rect_outer_boundary(r: &Rect) -> Vec<Point> {
    let mut out = Vec::new();
    for (lo, hi) in r.outer_faces() {
        for_each_point(&lo, &hi, |p| out.push(point(p)));
    }
    out.sort();
    out.dedup();
    out
}

/// Minimum pairwise L1 distance between two finite point sets; `None` if either is empty.
pub fn set_dist(a: &[Point], b: &[Point]) -> Result<Option<u64>> {
    let mut best: Option<u64> = None;
    for p in a {
        for q in b {
            let d = l1_dist(p, q)?;
            best = Some(best.map_or(d, |x| x.min(d)));
        }
    }
    Ok(best)
}

/// `dist(∂a, ∂b)` from the face decomposition; `None` when a boundary is empty.
pub fn rect_boundary_dist(a: &Rect, b: &Rect, periods: Option<&[Coord]>) -> Option<i64> {
    let fa = a.faces();
    let fb = b.faces();
    let mut best: Option<i64> = None;
    for (alo, ahi) in &fa {
        for (blo, bhi) in &fb {
            let d = block_dist(alo, ahi, blo, bhi, periods);
            best = Some(best.map_or(d, |x| x.min(d)));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(lo: &[Coord], hi: &[Coord]) -> Rect {
        Rect::new(lo, hi).unwrap()
    }

    #[test]
    fn clipped_boundary_keeps_corners() {
        let k = r(&[0, 0], &[4, 4]).with_clipped(0, false, true);
        assert_eq!(rect_boundary(&k).len(), 13);
        assert_eq!(rect_boundary(&r(&[0, 0], &[4, 4])).len(), 16);
    }

    #[test]
    fn outer_boundary_of_single_cell() {
        let o = rect_outer_boundary(&r(&[0, 0], &[0, 0]));
        let want: Vec<Point> = [[-1, 0], [0, -1], [0, 1], [1, 0]].iter().map(|p| point(p)).collect();
        assert_eq!(o, want);
    }

    #[test]
    fn boundary_distances() {
        let a = r(&[0, 0], &[9, 9]);
        let b = r(&[20, 20], &[29, 29]);
        assert_eq!(set_dist(&rect_boundary(&a), &rect_boundary(&b)).unwrap(), Some(22));
        assert_eq!(rect_boundary_dist(&a, &b, None), Some(22));
        let c = r(&[20, 0], &[29, 9]);
        assert_eq!(rect_boundary_dist(&a, &c, None), Some(11));
        let outer = r(&[0, 0], &[29, 29]);
        let inner = r(&[5, 5], &[14, 14]);
        assert_eq!(rect_boundary_dist(&outer, &inner, None), Some(5));
        assert_eq!(set_dist(&rect_boundary(&outer), &rect_boundary(&inner)).unwrap(), Some(5));
    }

    #[test]
    fn torus_distance_wraps() {
        let b = GridBox::cube(2, 10, Topology::Torus).unwrap();
        assert_eq!(b.l1_dist(&[0, 0], &[9, 9]).unwrap(), 2);
        assert_eq!(b.l1_dist(&[0, 0], &[5, 5]).unwrap(), 10);
        let h = GridBox::cube(2, 10, Topology::HardBoundary).unwrap();
        assert_eq!(h.l1_dist(&[0, 0], &[9, 9]).unwrap(), 18);
    }

    #[test]
    fn dimension_mismatch_is_error() {
        assert!(matches!(l1_dist(&[0, 0], &[0, 0, 0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn small_torus_rejected() {
        assert!(GridBox::new(&[0, 0], &[1, 5], Topology::Torus).is_err());
    }

    #[test]
    fn index_round_trip_and_order() {
        let b = GridBox::new(&[-2, 3], &[1, 7], Topology::HardBoundary).unwrap();
        let mut prev: Option<Point> = None;
        for i in 0..b.len() {
            let p = b.coords(i);
            assert_eq!(b.index(&p), Some(i));
            if let Some(q) = prev {
                assert!(q < p);
            }
            prev = Some(p);
        }
    }

    #[test]
    fn cyclic_gap() {
        assert_eq!(axis_gap(0, 2, 5, 6, Some(10)), 3);
        assert_eq!(axis_gap(0, 2, 8, 9, Some(10)), 1);
        assert_eq!(axis_gap(0, 2, 7, 8, Some(10)), 2);
        assert_eq!(axis_gap(0, 2, 8, 10, Some(10)), 0);
        assert_eq!(axis_gap(0, 2, 5, 6, None), 3);
    }

    #[test]
    fn cyclic_containment() {
        let p = [10i64, 10];
        let big = r(&[7, 0], &[13, 5]);
        let small = r(&[0, 1], &[2, 3]);
        assert!(big.contains_rect(&small, Some(&p)));
        assert!(!big.contains_rect(&small, None));
    }
}
