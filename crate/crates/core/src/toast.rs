//! Rectangular q-toasts, their validation, and the R/B/G labeling of a toast.

use crate::error::{Error, Result};
use crate::grid::{for_each_point, rect_boundary_dist, Coord, GridBox, Rect};
use rustc_hash::FxHashMap;
use std::fmt;
use std::sync::OnceLock;

/// A cell label. Digits double as the 0/1 layers and as colors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Red,
    Blue,
    Green,
    Blank,
    Digit(u8),
}

impl Label {
    pub const ZERO: Label = Label::Digit(0);
    pub const ONE: Label = Label::Digit(1);

    pub fn to_char(self) -> char {
        match self {
            Label::Red => 'R',
            Label::Blue => 'B',
            Label::Green => 'G',
            Label::Blank => '_',
            Label::Digit(d) => (b'0' + d) as char,
        }
    }

    pub fn from_char(c: char) -> Option<Label> {
        match c {
            'R' => Some(Label::Red),
            'B' => Some(Label::Blue),
            'G' => Some(Label::Green),
            '_' => Some(Label::Blank),
            '0'..='9' => Some(Label::Digit(c as u8 - b'0')),
            _ => None,
        }
    }

    pub fn byte(self) -> u8 {
        self.to_char() as u8
    }

    pub fn is_digit(self) -> bool {
        matches!(self, Label::Digit(_))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

pub const RBG: [Label; 3] = [Label::Red, Label::Blue, Label::Green];
pub const RB01: [Label; 4] = [Label::Red, Label::Blue, Label::ZERO, Label::ONE];
pub const BITS: [Label; 2] = [Label::ZERO, Label::ONE];

/// A dense labeling of a box.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Labeling {
    pub grid: GridBox,
    pub alphabet: Vec<Label>,
    pub cells: Vec<Label>,
}

impl Labeling {
    pub fn filled(grid: GridBox, alphabet: &[Label], fill: Label) -> Self {
        let cells = vec![fill; grid.len()];
        Labeling { grid, alphabet: alphabet.to_vec(), cells }
    }

    pub fn from_cells(grid: GridBox, alphabet: &[Label], cells: Vec<Label>) -> Result<Self> {
        if cells.len() != grid.len() {
            return Err(Error::usage(format!("expected {} cells, got {}", grid.len(), cells.len())));
        }
        if let Some(bad) = cells.iter().find(|l| !alphabet.contains(l)) {
            return Err(Error::usage(format!("label `{bad}` not in alphabet")));
        }
        Ok(Labeling { grid, alphabet: alphabet.to_vec(), cells })
    }

    pub fn get(&self, p: &[Coord]) -> Option<Label> {
        self.grid.index(p).map(|i| self.cells[i])
    }

    pub fn set(&mut self, p: &[Coord], l: Label) -> bool {
        match self.grid.index(p) {
            Some(i) => {
                self.cells[i] = l;
                true
            }
            None => false,
        }
    }

    pub fn count(&self, l: Label) -> usize {
        self.cells.iter().filter(|&&c| c == l).count()
    }

    /// Same box and cells with every label passed through `f`.
    pub fn map(&self, alphabet: &[Label], f: impl Fn(Label) -> Label) -> Labeling {
        Labeling { grid: self.grid.clone(), alphabet: alphabet.to_vec(), cells: self.cells.iter().map(|&l| f(l)).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ToastViolation {
    OutsideBox { piece: usize },
    Clipped { piece: usize },
    Wraps { piece: usize, axis: usize },
    SideLength { piece: usize, axis: usize, len: Coord },
    /// T1: the pieces overlap without nesting.
    Nesting { a: usize, b: usize },
    /// T2: boundary distance not above q.
    Spacing { a: usize, b: usize, dist: Coord },
}

impl fmt::Display for ToastViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ToastViolation::OutsideBox { piece } => write!(f, "piece {piece} leaves the box"),
            ToastViolation::Clipped { piece } => write!(f, "piece {piece} has a clipped side"),
            ToastViolation::Wraps { piece, axis } => write!(f, "piece {piece} wraps around axis {axis}"),
            ToastViolation::SideLength { piece, axis, len } => {
                write!(f, "piece {piece} has side {len} on axis {axis}")
            }
            ToastViolation::Nesting { a, b } => write!(f, "T1: pieces {a} and {b} overlap without nesting"),
            ToastViolation::Spacing { a, b, dist } => {
                write!(f, "T2: pieces {a} and {b} have boundary distance {dist}")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<ToastViolation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        write!(f, "{} violation(s)", self.violations.len())?;
        for v in self.violations.iter().take(5) {
            write!(f, "; {v}")?;
        }
        Ok(())
    }
}

fn check_piece(i: usize, r: &Rect, q: Coord, grid: &GridBox, out: &mut Vec<ToastViolation>) {
    if r.n() != grid.n() {
        out.push(ToastViolation::OutsideBox { piece: i });
        return;
    }
    if r.any_clipped() {
        out.push(ToastViolation::Clipped { piece: i });
    }
    if grid.is_torus() {
        for a in 0..r.n() {
            if r.side(a) + 1 >= grid.extent(a) {
                out.push(ToastViolation::Wraps { piece: i, axis: a });
            }
        }
    } else if !(grid.contains(&r.lo) && grid.contains(&r.hi)) {
        out.push(ToastViolation::OutsideBox { piece: i });
    }
    for a in 0..r.n() {
        if r.side(a) < q {
            out.push(ToastViolation::SideLength { piece: i, axis: a, len: r.side(a) });
        }
    }
}

/// Outcome of comparing two pieces.
enum PairKind {
    Disjoint,
    /// The first index contains the second.
    Contains(usize, usize),
}

fn check_pair(
    i: usize,
    j: usize,
    pieces: &[Rect],
    q: Coord,
    periods: Option<&[Coord]>,
    out: &mut Vec<ToastViolation>,
) -> Option<PairKind> {
    let (a, b) = (&pieces[i], &pieces[j]);
    let kind = if a.disjoint(b, periods) {
        Some(PairKind::Disjoint)
    } else if a.contains_rect(b, periods) {
        Some(PairKind::Contains(i, j))
    } else if b.contains_rect(a, periods) {
        Some(PairKind::Contains(j, i))
    } else {
        out.push(ToastViolation::Nesting { a: i, b: j });
        None
    };
    if let Some(d) = rect_boundary_dist(a, b, periods) {
        if d <= q {
            out.push(ToastViolation::Spacing { a: i, b: j, dist: d });
        }
    }
    kind
}

/// Checks T1, T2 and side lengths over all pairs.
pub fn validate_toast(pieces: &[Rect], q: u32, grid: &GridBox) -> ValidationReport {
    validate_with(pieces, q, grid, false).0
}

/// Same report as [`validate_toast`], restricting pair checks to pieces in nearby buckets.
pub fn validate_toast_fast(pieces: &[Rect], q: u32, grid: &GridBox) -> ValidationReport {
    validate_with(pieces, q, grid, true).0
}

fn validate_with(pieces: &[Rect], q: u32, grid: &GridBox, fast: bool) -> (ValidationReport, Vec<Option<usize>>) {
    let q = q as Coord;
    let periods = grid.periods();
    let periods = periods.as_deref();
    let mut out = Vec::new();
    for (i, r) in pieces.iter().enumerate() {
        check_piece(i, r, q, grid, &mut out);
    }
    if out.iter().any(|v| matches!(v, ToastViolation::OutsideBox { .. })) {
        out.sort();
        return (ValidationReport { violations: out }, vec![None; pieces.len()]);
    }
    let mut parent: Vec<Option<usize>> = vec![None; pieces.len()];
    let mut visit = |i: usize, j: usize, out: &mut Vec<ToastViolation>| {
        if let Some(PairKind::Contains(o, inner)) = check_pair(i, j, pieces, q, periods, out) {
            let better = match parent[inner] {
                None => true,
                Some(p) => (pieces[o].volume(), o) < (pieces[p].volume(), p),
            };
            if better {
                parent[inner] = Some(o);
            }
        }
    };
    if fast && pieces.len() > 32 {
        let mut buckets = Buckets::new(pieces, grid, q);
        let mut cand: Vec<usize> = Vec::new();
        for i in 0..pieces.len() {
            buckets.candidates(i, pieces, &mut cand);
            for &j in &cand {
                visit(i, j, &mut out);
            }
        }
    } else {
        for i in 0..pieces.len() {
            for j in i + 1..pieces.len() {
                visit(i, j, &mut out);
            }
        }
    }
    out.sort();
    (ValidationReport { violations: out }, parent)
}

/// Uniform bucketing of piece bounding boxes.
struct Buckets {
    size: Coord,
    lo: Vec<Coord>,
    periods: Option<Vec<Coord>>,
    counts: Vec<Coord>,
    map: FxHashMap<u64, Vec<u32>>,
    q: Coord,
}

impl Buckets {
    fn new(pieces: &[Rect], grid: &GridBox, q: Coord) -> Self {
        let mut sides: Vec<Coord> = pieces.iter().map(|r| r.max_side() + 1).collect();
        sides.sort_unstable();
        let median = sides[sides.len() / 2];
        let size = median.max(q + 1).max(4);
        let periods = grid.periods().map(|p| p.to_vec());
        let counts = (0..grid.n()).map(|a| (grid.extent(a) + size - 1) / size).collect();
        let mut b = Buckets { size, lo: grid.lo().to_vec(), periods, counts, map: FxHashMap::default(), q };
        for (i, r) in pieces.iter().enumerate() {
            let lo: Vec<Coord> = r.lo.to_vec();
            let hi: Vec<Coord> = r.hi.to_vec();
            for key in b.keys(&lo, &hi) {
                b.map.entry(key).or_default().push(i as u32);
            }
        }
        b
    }

    fn axis_span(&self, a: usize, lo: Coord, hi: Coord) -> Vec<Coord> {
        let s = self.size;
        match &self.periods {
            None => {
                let b0 = (lo - self.lo[a]).div_euclid(s);
                let b1 = (hi - self.lo[a]).div_euclid(s);
                (b0..=b1).collect()
            }
            Some(p) => {
                let p = p[a];
                let nb = self.counts[a];
                if hi - lo + 1 >= p {
                    return (0..nb).collect();
                }
                let b0 = (lo - self.lo[a]).rem_euclid(p) / s;
                let b1 = (hi - self.lo[a]).rem_euclid(p) / s;
                let mut v = Vec::new();
                let mut b = b0;
                loop {
                    v.push(b);
                    if b == b1 {
                        break;
                    }
                    b = (b + 1) % nb;
                }
                v
            }
        }
    }

    fn keys(&self, lo: &[Coord], hi: &[Coord]) -> Vec<u64> {
        let spans: Vec<Vec<Coord>> = (0..lo.len()).map(|a| self.axis_span(a, lo[a], hi[a])).collect();
        let mut keys = Vec::new();
        let mut idx = vec![0usize; spans.len()];
        loop {
            let mut h: u64 = 0xcbf2_9ce4_8422_2325;
            for (a, &k) in idx.iter().enumerate() {
                h = crate::rng::splitmix64(h ^ spans[a][k] as u64);
            }
            keys.push(h);
            let mut a = spans.len();
            loop {
                if a == 0 {
                    return keys;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < spans[a].len() {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    /// Pieces `j > i` whose bounding box comes within `q + 1` of piece `i`.
    fn candidates(&mut self, i: usize, pieces: &[Rect], out: &mut Vec<usize>) {
        out.clear();
        let r = &pieces[i];
        let lo: Vec<Coord> = r.lo.iter().map(|&c| c - self.q - 1).collect();
        let hi: Vec<Coord> = r.hi.iter().map(|&c| c + self.q + 1).collect();
        for key in self.keys(&lo, &hi) {
            if let Some(v) = self.map.get(&key) {
                out.extend(v.iter().map(|&j| j as usize).filter(|&j| j > i));
            }
        }
        out.sort_unstable();
        out.dedup();
    }
}

/// A rectangular toast in a box.
#[derive(Debug)]
pub struct Toast {
    q: u32,
    grid: GridBox,
    pieces: Vec<Rect>,
    parent: Vec<Option<usize>>,
    validated: bool,
    big_gaps: OnceLock<bool>,
}

impl Clone for Toast {
    fn clone(&self) -> Self {
        let big_gaps = OnceLock::new();
        if let Some(&b) = self.big_gaps.get() {
            let _ = big_gaps.set(b);
        }
        Toast {
            q: self.q,
            grid: self.grid.clone(),
            pieces: self.pieces.clone(),
            parent: self.parent.clone(),
            validated: self.validated,
            big_gaps,
        }
    }
}

impl Toast {
    /// Validates the pieces; fails with the report summary if they do not form a q-toast.
    pub fn new(grid: GridBox, q: u32, pieces: Vec<Rect>) -> Result<Self> {
        let (report, parent) = validate_with(&pieces, q, &grid, true);
        if !report.is_ok() {
            return Err(Error::InvalidToast(report.to_string()));
        }
        Ok(Toast { q, grid, pieces, parent, validated: true, big_gaps: OnceLock::new() })
    }

    /// Wraps pieces without checking them.
    pub fn unvalidated(grid: GridBox, q: u32, pieces: Vec<Rect>) -> Self {
        let parent = vec![None; pieces.len()];
        Toast { q, grid, pieces, parent, validated: false, big_gaps: OnceLock::new() }
    }

    pub fn empty(grid: GridBox, q: u32) -> Self {
        Toast { q, grid, pieces: Vec::new(), parent: Vec::new(), validated: true, big_gaps: OnceLock::new() }
    }

    pub fn q(&self) -> u32 {
        self.q
    }
    pub fn grid(&self) -> &GridBox {
        &self.grid
    }
    pub fn pieces(&self) -> &[Rect] {
        &self.pieces
    }
    pub fn len(&self) -> usize {
        self.pieces.len()
    }
    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }
    pub fn is_validated(&self) -> bool {
        self.validated
    }

    /// Smallest piece strictly containing piece `i`.
    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    /// Pieces not contained in any other piece.
    pub fn roots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.pieces.len()).filter(|&i| self.parent[i].is_none())
    }

    pub fn depth(&self, i: usize) -> usize {
        let mut d = 0;
        let mut cur = self.parent[i];
        while let Some(p) = cur {
            d += 1;
            cur = self.parent[p];
        }
        d
    }

    fn require_validated(&self) -> Result<()> {
        if self.validated {
            Ok(())
        } else {
            Err(Error::precondition("toast has not been validated"))
        }
    }

    /// For pieces `K' ⊄ K`, `dist(∂K, ∂K') > 2N` with `N` the largest side of `K`.
    pub fn big_gap_certified(&self) -> bool {
        *self.big_gaps.get_or_init(|| {
            let periods = self.grid.periods();
            let periods = periods.as_deref();
            let ps = &self.pieces;
            for i in 0..ps.len() {
                for j in 0..ps.len() {
                    if i == j || ps[i].contains_rect(&ps[j], periods) {
                        continue;
                    }
                    let d = rect_boundary_dist(&ps[i], &ps[j], periods).unwrap_or(Coord::MAX);
                    if d <= 2 * ps[i].max_side() {
                        return false;
                    }
                }
            }
            true
        })
    }
}

fn paint(grid: &GridBox, lo: &[Coord], hi: &[Coord], mut f: impl FnMut(usize)) {
    for_each_point(lo, hi, |p| {
        if let Some(i) = grid.index(p) {
            f(i);
        }
    });
}

/// Red on piece boundaries, blue on outer boundaries, green elsewhere.
pub fn label_from_toast(t: &Toast) -> Result<Labeling> {
    t.require_validated()?;
    if t.q == 0 {
        return Err(Error::precondition("labeling requires q >= 1"));
    }
    let mut f = Labeling::filled(t.grid.clone(), &RBG, Label::Green);
    for r in &t.pieces {
        for (lo, hi) in r.outer_faces() {
            paint(&t.grid, &lo, &hi, |i| f.cells[i] = Label::Blue);
        }
    }
    for r in &t.pieces {
        for (lo, hi) in r.faces() {
            paint(&t.grid, &lo, &hi, |i| f.cells[i] = Label::Red);
        }
    }
    Ok(f)
}

/// Cells covered by at least one piece.
pub fn union_mask(t: &Toast) -> Vec<bool> {
    let mut m = vec![false; t.grid.len()];
    for i in t.roots() {
        let r = &t.pieces[i];
        paint(&t.grid, &r.lo, &r.hi, |c| m[c] = true);
    }
    m
}

/// An exact fraction with its floating value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fraction {
    pub num: u128,
    pub den: u128,
}

impl Fraction {
    pub fn new(num: u128, den: u128) -> Self {
        fn gcd(a: u128, b: u128) -> u128 {
            if b == 0 {
                a
            } else {
                gcd(b, a % b)
            }
        }
        let g = gcd(num, den).max(1);
        Fraction { num: num / g, den: den / g }
    }
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// `|⋃ pieces| / |box|`, summing the areas of maximal pieces.
pub fn coverage(t: &Toast) -> Result<Fraction> {
    t.require_validated()?;
    let covered: u128 = t.roots().map(|i| t.pieces[i].volume()).sum();
    Ok(Fraction::new(covered, t.grid.len() as u128))
}

/// Number of pieces containing each cell.
pub fn containment_counts(t: &Toast) -> Result<Vec<u32>> {
    t.require_validated()?;
    let mut c = vec![0u32; t.grid.len()];
    for r in &t.pieces {
        paint(&t.grid, &r.lo, &r.hi, |i| c[i] += 1);
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{point, Topology};

    fn r(lo: &[Coord], hi: &[Coord]) -> Rect {
        Rect::new(lo, hi).unwrap()
    }

    fn bx(side: Coord) -> GridBox {
        GridBox::new(&[-20, -20], &[side, side], Topology::HardBoundary).unwrap()
    }

    #[test]
    fn spec_examples() {
        let g = bx(60);
        assert!(validate_toast(&[r(&[0, 0], &[9, 9]), r(&[20, 20], &[29, 29])], 4, &g).is_ok());
        let rep = validate_toast(&[r(&[0, 0], &[29, 29]), r(&[4, 4], &[13, 13])], 4, &g);
        assert_eq!(rep.violations, vec![ToastViolation::Spacing { a: 0, b: 1, dist: 4 }]);
        let rep = validate_toast(&[r(&[0, 0], &[2, 9])], 4, &g);
        assert_eq!(rep.violations, vec![ToastViolation::SideLength { piece: 0, axis: 0, len: 2 }]);
    }

    #[test]
    fn crossing_pieces_violate_both() {
        let g = bx(60);
        let rep = validate_toast(&[r(&[0, 0], &[9, 9]), r(&[5, 5], &[14, 14])], 4, &g);
        assert!(rep.violations.contains(&ToastViolation::Nesting { a: 0, b: 1 }));
        assert!(rep.violations.iter().any(|v| matches!(v, ToastViolation::Spacing { .. })));
    }

    #[test]
    fn labels_of_single_piece() {
        let t = Toast::new(bx(30), 4, vec![r(&[0, 0], &[9, 9])]).unwrap();
        let f = label_from_toast(&t).unwrap();
        assert_eq!(f.get(&[0, 5]), Some(Label::Red));
        assert_eq!(f.get(&[-1, 5]), Some(Label::Blue));
        assert_eq!(f.get(&[5, 5]), Some(Label::Green));
        assert_eq!(f.get(&[12, 12]), Some(Label::Green));
        assert_eq!(f.get(&[-1, -1]), Some(Label::Green));
    }

    #[test]
    fn coverage_and_counts() {
        let g = GridBox::new(&[0, 0], &[29, 29], Topology::HardBoundary).unwrap();
        let t = Toast::new(g.clone(), 4, vec![r(&[0, 0], &[9, 9]), r(&[20, 20], &[29, 29])]).unwrap();
        assert_eq!(coverage(&t).unwrap(), Fraction::new(200, 900));
        let nested = Toast::new(g.clone(), 4, vec![r(&[0, 0], &[29, 29]), r(&[5, 5], &[14, 14])]).unwrap();
        let c = containment_counts(&nested).unwrap();
        assert_eq!(c[g.index(&[10, 10]).unwrap()], 2);
        assert_eq!(nested.parent(1), Some(0));
        assert_eq!(coverage(&nested).unwrap(), Fraction::new(1, 1));
        assert_eq!(coverage(&Toast::empty(g, 4)).unwrap().num, 0);
    }

    #[test]
    fn q_zero_labeling_rejected() {
        let t = Toast::new(bx(30), 0, vec![r(&[0, 0], &[9, 9])]).unwrap();
        assert!(matches!(label_from_toast(&t), Err(Error::Precondition(_))));
    }

    #[test]
    fn torus_piece_across_seam() {
        let g = GridBox::cube(2, 20, Topology::Torus).unwrap();
        let t = Toast::new(g.clone(), 4, vec![r(&[15, 0], &[24, 9])]).unwrap();
        let f = label_from_toast(&t).unwrap();
        assert_eq!(f.get(&[4, 5]), Some(Label::Red));
        assert_eq!(f.get(&[5, 5]), Some(Label::Blue));
        assert_eq!(f.get(&[0, 5]), Some(Label::Green));
        let _ = point(&[0]);
    }

    #[test]
    fn big_gap_certification() {
        let g = bx(200);
        let near = Toast::new(g.clone(), 4, vec![r(&[0, 0], &[9, 9]), r(&[20, 0], &[29, 9])]).unwrap();
        assert!(!near.big_gap_certified());
        let far = Toast::new(g, 4, vec![r(&[0, 0], &[9, 9]), r(&[40, 0], &[49, 9])]).unwrap();
        assert!(far.big_gap_certified());
    }
}
