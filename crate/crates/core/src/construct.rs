//! Toast constructions: greedy enumeration, safe squares in random bit fields,
//! and multi-scale random-shift quasi-tilings.

use crate::error::{Error, Result};
use crate::grid::{for_each_point, point, rect_boundary_dist, Coord, GridBox, Point, Rect, Topology};
use crate::rng;
use crate::toast::{Fraction, Toast};
use rand::Rng;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Bits,
    Reals,
}

impl FieldKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldKind::Bits => "bits",
            FieldKind::Reals => "reals",
        }
    }
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bits" => Ok(FieldKind::Bits),
            "reals" => Ok(FieldKind::Reals),
            _ => Err(Error::usage(format!("unknown field kind `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FieldValues {
    Bits(Vec<bool>),
    /// Numerators of dyadic reals `m / 2^53`.
    Reals(Vec<u64>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomField {
    pub grid: GridBox,
    pub seed: u64,
    pub values: FieldValues,
}

impl RandomField {
    pub fn kind(&self) -> FieldKind {
        match self.values {
            FieldValues::Bits(_) => FieldKind::Bits,
            FieldValues::Reals(_) => FieldKind::Reals,
        }
    }

    pub fn from_bits(grid: GridBox, seed: u64, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != grid.len() {
            return Err(Error::usage("bit count does not match the box"));
        }
        Ok(RandomField { grid, seed, values: FieldValues::Bits(bits) })
    }

    pub fn bits(&self) -> Result<&[bool]> {
        match &self.values {
            FieldValues::Bits(b) => Ok(b),
            FieldValues::Reals(_) => Err(Error::usage("expected a bit field")),
        }
    }
}

/// Per-cell i.i.d. values keyed by `(seed, coordinates)`.
pub fn gen_field(grid: &GridBox, kind: FieldKind, seed: u64) -> RandomField {
    let values = match kind {
        FieldKind::Bits => {
            FieldValues::Bits((0..grid.len()).into_par_iter().map(|i| rng::cell_bit(seed, &grid.coords(i))).collect())
        }
        FieldKind::Reals => FieldValues::Reals(
            (0..grid.len()).into_par_iter().map(|i| rng::cell_dyadic(seed, &grid.coords(i))).collect(),
        ),
    };
    RandomField { grid: grid.clone(), seed, values }
}

/// The translation action of Z^n on itself with a fixed enumeration of Z^n.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComputableAction {
    n: usize,
}

impl ComputableAction {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("dimension must be positive"));
        }
        Ok(ComputableAction { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The `index`-th point: square spiral for n = 2, L∞ shells in lexicographic order otherwise.
    pub fn point(&self, index: u64) -> Result<Point> {
        if self.n == 2 {
            Ok(spiral_point(index))
        } else {
            shell_point(self.n, index)
        }
    }

    pub fn index_of(&self, p: &[Coord]) -> Result<u64> {
        if p.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: p.len() });
        }
        if self.n == 2 {
            spiral_index(p)
        } else {
            shell_index(p)
        }
    }
}

fn spiral_point(index: u64) -> Point {
    if index == 0 {
        return point(&[0, 0]);
    }
    // ring r holds indices [(2r-1)^2, (2r+1)^2)
    let mut r = (((index as f64).sqrt() + 1.0) / 2.0).floor() as u64;
    while (2 * r + 1) * (2 * r + 1) <= index {
        r += 1;
    }
    while r > 0 && (2 * r - 1) * (2 * r - 1) > index {
        r -= 1;
    }
    let k = (index - (2 * r - 1) * (2 * r - 1)) as i64;
    let r = r as i64;
    let side = 2 * r;
    match k / side {
        0 => point(&[r, -r + 1 + k]),
        1 => point(&[r - 1 - (k - side), r]),
        2 => point(&[-r, r - 1 - (k - 2 * side)]),
        _ => point(&[-r + 1 + (k - 3 * side), -r]),
    }
}

fn spiral_index(p: &[Coord]) -> Result<u64> {
    let (x, y) = (p[0], p[1]);
    let r = x.unsigned_abs().max(y.unsigned_abs()) as i64;
    if r == 0 {
        return Ok(0);
    }
    let side = 2 * r;
    let k = if x == r && y > -r {
        y + r - 1
    } else if y == r {
        side + (r - 1 - x)
    } else if x == -r {
        2 * side + (r - 1 - y)
    } else {
        3 * side + (x + r - 1)
    };
    let base = (2 * r - 1).checked_mul(2 * r - 1).ok_or_else(|| Error::overflow("spiral index"))?;
    Ok((base + k) as u64)
}

fn pow(b: u128, e: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..e {
        acc = acc.checked_mul(b)?;
    }
    Some(acc)
}

fn shell_completions(r: u128, m: usize, reached: bool) -> Option<u128> {
    let all = pow(2 * r + 1, m)?;
    if reached || r == 0 {
        if r == 0 {
            return Some(1);
        }
        Some(all)
    } else {
        Some(all - pow(2 * r - 1, m)?)
    }
}

fn shell_point(n: usize, index: u64) -> Result<Point> {
    if index == 0 {
        return Ok(Point::from_elem(0, n));
    }
    let idx = index as u128;
    let mut r: u128 = 1;
    while pow(2 * r + 1, n).ok_or_else(|| Error::overflow("shell index"))? <= idx {
        r += 1;
    }
    let mut k = idx - pow(2 * r - 1, n).unwrap();
    let mut p = Point::new();
    let mut reached = false;
    let ri = r as i64;
    for a in 0..n {
        let m = n - a - 1;
        for v in -ri..=ri {
            let now = reached || v.unsigned_abs() as u128 == r;
            let c = shell_completions(r, m, now).unwrap();
            if k < c {
                p.push(v);
                reached = now;
                break;
            }
            k -= c;
        }
    }
    Ok(p)
}

fn shell_index(p: &[Coord]) -> Result<u64> {
    let n = p.len();
    let r = p.iter().map(|c| c.unsigned_abs() as u128).max().unwrap_or(0);
    if r == 0 {
        return Ok(0);
    }
    let mut k = pow(2 * r - 1, n).ok_or_else(|| Error::overflow("shell index"))?;
    let mut reached = false;
    let ri = r as i64;
    for (a, &x) in p.iter().enumerate() {
        let m = n - a - 1;
        for v in -ri..x {
            let now = reached || v.unsigned_abs() as u128 == r;
            k += shell_completions(r, m, now).ok_or_else(|| Error::overflow("shell index"))?;
        }
        reached = reached || x.unsigned_abs() as u128 == r;
    }
    u64::try_from(k).map_err(|_| Error::overflow("shell index"))
}

/// Greedy squares `R_i = [-j, j]^n + point(i)` with the least admissible `j >= i + q`.
pub fn greedy_toast(action: &ComputableAction, q: u32, count: usize, big_gaps: bool) -> Result<Toast> {
    let squares = greedy_squares(action, q, count, big_gaps)?;
    let n = action.n();
    let pad = q as Coord + 2;
    let mut lo = vec![Coord::MAX; n];
    let mut hi = vec![Coord::MIN; n];
    for (r, _) in &squares {
        for a in 0..n {
            lo[a] = lo[a].min(r.lo[a]);
            hi[a] = hi[a].max(r.hi[a]);
        }
    }
    for a in 0..n {
        lo[a] = lo[a].checked_sub(pad).ok_or_else(|| Error::overflow("greedy box"))?;
        hi[a] = hi[a].checked_add(pad).ok_or_else(|| Error::overflow("greedy box"))?;
    }
    let grid = GridBox::new(&lo, &hi, Topology::HardBoundary)?;
    Toast::new(grid, q, squares.into_iter().map(|(r, _)| r).collect())
}

/// The greedy squares with their half-widths `j`.
pub fn greedy_squares(action: &ComputableAction, q: u32, count: usize, big_gaps: bool) -> Result<Vec<(Rect, Coord)>> {
    if q < 1 {
        return Err(Error::precondition("greedy construction requires q >= 1"));
    }
    if count < 1 {
        return Err(Error::precondition("count must be positive"));
    }
    let q = q as Coord;
    let mut out: Vec<(Rect, Coord)> = Vec::with_capacity(count);
    for i in 0..count {
        let p = action.point(i as u64)?;
        let mut j = (i as Coord).checked_add(q).ok_or_else(|| Error::overflow("greedy radius"))?;
        'search: loop {
            let cand = Rect::cube(&p, j).map_err(|_| Error::overflow(format!("square {i} at half-width {j}")))?;
            for (t, (rt, _)) in out.iter().enumerate() {
                let n_t = rt.side(0);
                if greedy_admissible(&cand, rt, q, n_t, j, big_gaps) {
                    continue;
                }
                let next = greedy_jump(&p, rt, q, n_t, big_gaps)
                    .ok_or_else(|| Error::overflow(format!("square {i} against square {t}")))?;
                j = next.max(j.checked_add(1).ok_or_else(|| Error::overflow("greedy radius"))?);
                continue 'search;
            }
            out.push((cand, j));
            break;
        }
    }
    Ok(out)
}

/// The admissibility rule for a candidate against one earlier square.
pub fn greedy_admissible(cand: &Rect, rt: &Rect, q: Coord, n_t: Coord, j: Coord, big_gaps: bool) -> bool {
    let nested_or_disjoint = cand.disjoint(rt, None) || cand.contains_rect(rt, None) || rt.contains_rect(cand, None);
    if !nested_or_disjoint {
        return false;
    }
    let d = match rect_boundary_dist(cand, rt, None) {
        Some(d) => d,
        None => return true,
    };
    if d <= q {
        return false;
    }
    if big_gaps {
        if d <= q.max(n_t.saturating_mul(2)) {
            return false;
        }
        if !cand.contains_rect(rt, None) && d <= j.saturating_mul(4) {
            return false;
        }
    }
    true
}

/// The least half-width at which the cube around `p` contains `rt` with enough room.
///
/// While the cube does not contain `rt`, the boundary distance is non-increasing
/// in `j` and the thresholds are non-decreasing, so a failing constraint keeps
/// failing until containment.
fn greedy_jump(p: &[Coord], rt: &Rect, q: Coord, n_t: Coord, big_gaps: bool) -> Option<Coord> {
    let mut rho: Coord = 0;
    for a in 0..p.len() {
        rho = rho.max(p[a].checked_sub(rt.lo[a])?).max(rt.hi[a].checked_sub(p[a])?);
    }
    let t = if big_gaps { q.max(n_t.checked_mul(2)?) } else { q };
    rho.checked_add(t)?.checked_add(1)
}

/// Required zero annulus around a safe square.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Annulus {
    WidthQ,
    Width2N,
}

impl Annulus {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "q" => Ok(Annulus::WidthQ),
            "2n" | "2N" => Ok(Annulus::Width2N),
            _ => Err(Error::usage(format!("unknown annulus `{s}` (expected q or 2n)"))),
        }
    }

    /// Outer reach of the annulus for a square of side `n_side`.
    pub fn reach(self, q: Coord, n_side: Coord) -> Coord {
        match self {
            Annulus::WidthQ => q,
            Annulus::Width2N => q.max(2 * n_side),
        }
    }
}

/// Whether the square `[a, a + side]^n` with its annulus is a candidate in this box.
pub fn safe_candidate_fits(grid: &GridBox, a: &[Coord], side: Coord, reach: Coord) -> bool {
    (0..grid.n()).all(|ax| match grid.topology() {
        Topology::HardBoundary => a[ax] - reach >= grid.lo()[ax] && a[ax] + side + reach <= grid.hi()[ax],
        Topology::Torus => side + 1 + 2 * reach <= grid.extent(ax),
    })
}

/// Summed-area table over the cells of a box; box queries wrap on a torus.
struct OnesTable {
    grid: GridBox,
    ext: Vec<usize>,
    strides: Vec<usize>,
    sums: Vec<u32>,
}

impl OnesTable {
    fn new(grid: &GridBox, bits: &[bool]) -> Self {
        let n = grid.n();
        let ext: Vec<usize> = (0..n).map(|a| grid.extent(a) as usize + 1).collect();
        let mut strides = vec![1usize; n];
        for a in (0..n.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * ext[a + 1];
        }
        let total: usize = ext.iter().product();
        let mut sums = vec![0u32; total];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                let mut idx = 0;
                for a in 0..n {
                    idx += (grid.axis_offset(i, a) + 1) * strides[a];
                }
                sums[idx] = 1;
            }
        }
        for a in 0..n {
            for idx in 0..total {
                if !(idx / strides[a]).is_multiple_of(ext[a]) {
                    sums[idx] += sums[idx - strides[a]];
                }
            }
        }
        OnesTable { grid: grid.clone(), ext, strides, sums }
    }

    /// Ones in the product of offset ranges `[lo, hi]` with `0 <= lo <= hi < extent`.
    fn raw(&self, lo: &[usize], hi: &[usize]) -> u64 {
        let n = lo.len();
        let mut total: i64 = 0;
        for mask in 0u32..(1 << n) {
            let mut idx = 0;
            let mut sign = 1i64;
            for a in 0..n {
                let c = if mask & (1 << a) != 0 {
                    sign = -sign;
                    lo[a]
                } else {
                    hi[a] + 1
                };
                idx += c * self.strides[a];
            }
            total += sign * self.sums[idx] as i64;
        }
        debug_assert!(self.ext.len() == n);
        total as u64
    }

    /// Ones in the integer box `[lo, hi]`; empty boxes count zero.
    fn count(&self, lo: &[Coord], hi: &[Coord]) -> u64 {
        let n = lo.len();
        let mut pieces: Vec<Vec<(usize, usize)>> = Vec::with_capacity(n);
        for a in 0..n {
            if hi[a] < lo[a] {
                return 0;
            }
            let base = self.grid.lo()[a];
            let ext = self.grid.extent(a);
            match self.grid.topology() {
                Topology::HardBoundary => {
                    let l = (lo[a] - base).max(0);
                    let h = (hi[a] - base).min(ext - 1);
                    if h < l {
                        return 0;
                    }
                    pieces.push(vec![(l as usize, h as usize)]);
                }
                Topology::Torus => {
                    if hi[a] - lo[a] + 1 >= ext {
                        pieces.push(vec![(0, ext as usize - 1)]);
                        continue;
                    }
                    let l = (lo[a] - base).rem_euclid(ext);
                    let h = (hi[a] - base).rem_euclid(ext);
                    if l <= h {
                        pieces.push(vec![(l as usize, h as usize)]);
                    } else {
                        pieces.push(vec![(l as usize, ext as usize - 1), (0, h as usize)]);
                    }
                }
            }
        }
        let mut total = 0;
        let mut idx = vec![0usize; n];
        let mut lo_u = vec![0usize; n];
        let mut hi_u = vec![0usize; n];
        loop {
            for a in 0..n {
                lo_u[a] = pieces[a][idx[a]].0;
                hi_u[a] = pieces[a][idx[a]].1;
            }
            total += self.raw(&lo_u, &hi_u);
            let mut a = n;
            loop {
                if a == 0 {
                    return total;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < pieces[a].len() {
                    break;
                }
                idx[a] = 0;
            }
        }
    }
}

/// Length of the run of ones starting at each cell in the positive direction of `axis`.
fn runs(grid: &GridBox, bits: &[bool], axis: usize) -> Vec<u32> {
    let mut run = vec![0u32; bits.len()];
    let ext = grid.extent(axis) as usize;
    let cap = ext as u32;
    // Two sweeps so runs continue across the seam on a torus.
    let sweeps = if grid.is_torus() { 2 } else { 1 };
    for _ in 0..sweeps {
        for i in (0..bits.len()).rev() {
            if !bits[i] {
                run[i] = 0;
                continue;
            }
            let next = grid.step(i, axis, 1).map_or(0, |j| run[j]);
            run[i] = (next + 1).min(cap);
        }
    }
    run
}

/// All safe squares of a bit field.
pub fn extract_safe_squares(field: &RandomField, q: u32, annulus: Annulus) -> Result<Toast> {
    if q == 0 {
        return Err(Error::precondition("safe squares require q >= 1"));
    }
    let grid = &field.grid;
    let bits = field.bits()?;
    let n = grid.n();
    let qc = q as Coord;
    let table = OnesTable::new(grid, bits);
    let run: Vec<Vec<u32>> = (0..n).map(|a| runs(grid, bits, a)).collect();
    let found: Vec<Vec<Rect>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            if !bits[i] {
                return out;
            }
            let max_side = (0..n).map(|a| run[a][i] as Coord).min().unwrap_or(0) - 1;
            let a = grid.coords(i);
            for side in qc..=max_side {
                let reach = annulus.reach(qc, side);
                if !safe_candidate_fits(grid, &a, side, reach) {
                    if grid.is_torus() {
                        break;
                    }
                    continue;
                }
                if is_safe(&table, &a, side, qc, reach) {
                    let hi: Point = a.iter().map(|&c| c + side).collect();
                    out.push(Rect::new(&a, &hi).expect("side is nonnegative"));
                }
            }
            out
        })
        .collect();
    let pieces: Vec<Rect> = found.into_iter().flatten().collect();
    Toast::new(grid.clone(), q, pieces)
}

fn is_safe(t: &OnesTable, a: &[Coord], side: Coord, q: Coord, reach: Coord) -> bool {
    let n = a.len();
    let hi: Point = a.iter().map(|&c| c + side).collect();
    // boundary all ones
    for ax in 0..n {
        for c in [a[ax], hi[ax]] {
            let mut flo: Point = point(a);
            let mut fhi = hi.clone();
            flo[ax] = c;
            fhi[ax] = c;
            let vol: u64 = (0..n).map(|b| (fhi[b] - flo[b] + 1) as u64).product();
            if t.count(&flo, &fhi) != vol {
                return false;
            }
        }
    }
    // inner band all zeros
    let ilo: Point = a.iter().map(|&c| c + 1).collect();
    let ihi: Point = hi.iter().map(|&c| c - 1).collect();
    let clo: Point = a.iter().map(|&c| c + q + 1).collect();
    let chi: Point = hi.iter().map(|&c| c - q - 1).collect();
    if t.count(&ilo, &ihi) != t.count(&clo, &chi) {
        return false;
    }
    outer_clear(t, a, &hi, reach)
}

/// No ones at cells outside `[lo, hi]` within L1 distance `reach`.
fn outer_clear(t: &OnesTable, lo: &[Coord], hi: &[Coord], reach: Coord) -> bool {
    let n = lo.len();
    // state per axis: 0 inside, 1 below, 2 above
    let mut state = vec![0u8; n];
    loop {
        let mut a = 0;
        while a < n && state[a] == 2 {
            state[a] = 0;
            a += 1;
        }
        if a == n {
            return true;
        }
        state[a] += 1;
        let outside: Vec<usize> = (0..n).filter(|&b| state[b] != 0).collect();
        if !region_clear(t, lo, hi, reach, &state, &outside) {
            return false;
        }
    }
}

fn region_clear(t: &OnesTable, lo: &[Coord], hi: &[Coord], reach: Coord, state: &[u8], outside: &[usize]) -> bool {
    let k = outside.len();
    if k as Coord > reach {
        return true;
    }
    // gaps for all but the last outside axis; the last takes the remaining budget as a range
    let mut gaps = vec![1 as Coord; k.saturating_sub(1)];
    loop {
        let used: Coord = gaps.iter().sum();
        if used < reach {
            let mut blo: Point = point(lo);
            let mut bhi: Point = point(hi);
            for (g_i, &ax) in outside.iter().enumerate() {
                let (g0, g1) = if g_i + 1 == k { (1, reach - used) } else { (gaps[g_i], gaps[g_i]) };
                if state[ax] == 1 {
                    blo[ax] = lo[ax] - g1;
                    bhi[ax] = lo[ax] - g0;
                } else {
                    blo[ax] = hi[ax] + g0;
                    bhi[ax] = hi[ax] + g1;
                }
            }
            if t.count(&blo, &bhi) != 0 {
                return false;
            }
        }
        // advance gaps odometer
        let mut i = 0;
        loop {
            if i == gaps.len() {
                return true;
            }
            gaps[i] += 1;
            if gaps.iter().sum::<Coord>() < reach {
                break;
            }
            gaps[i] = 1;
            i += 1;
        }
    }
}

/// Scale list for the quasi-tiling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scales {
    Explicit(Vec<Coord>),
    /// `N_i = (q + 1) * 4^i` for `i < k`.
    Auto(usize),
}

impl Scales {
    pub fn parse(s: &str) -> Result<Self> {
        if let Some(k) = s.strip_prefix("auto:") {
            let k = k.parse().map_err(|_| Error::usage(format!("bad scale count `{k}`")))?;
            return Ok(Scales::Auto(k));
        }
        if s.trim().is_empty() {
            return Ok(Scales::Explicit(Vec::new()));
        }
        let v = s
            .split(',')
            .map(|t| t.trim().parse::<Coord>().map_err(|_| Error::usage(format!("bad scale `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Scales::Explicit(v))
    }

    pub fn resolve(&self, q: u32) -> Result<Vec<Coord>> {
        match self {
            Scales::Explicit(v) => Ok(v.clone()),
            Scales::Auto(k) => (0..*k)
                .map(|i| {
                    4i64.checked_pow(i as u32)
                        .and_then(|p| p.checked_mul(q as Coord + 1))
                        .ok_or_else(|| Error::overflow("auto schedule"))
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleReport {
    pub scale: usize,
    pub side: Coord,
    pub shift: Point,
    pub squares: usize,
    /// Squares of this scale that survive in the final toast.
    pub retained: usize,
    /// Coverage of this scale's lattice alone.
    pub scale_coverage: Fraction,
    /// Coverage of the toast built from scales `0..=scale`.
    pub cumulative: Fraction,
}

#[derive(Debug)]
pub struct QuasiTiling {
    pub toast: Toast,
    pub report: Vec<ScaleReport>,
}

struct Lattice {
    side: Coord,
    period: Coord,
    base: Point,
    counts: Vec<Coord>,
}

impl Lattice {
    fn total(&self) -> usize {
        self.counts.iter().product::<Coord>() as usize
    }

    fn rect(&self, k: &[Coord]) -> Rect {
        let lo: Point = (0..k.len()).map(|a| self.base[a] + k[a] * self.period).collect();
        let hi: Point = lo.iter().map(|&c| c + self.side).collect();
        Rect::new(&lo, &hi).expect("lattice square")
    }

    fn flat(&self, k: &[Coord]) -> usize {
        let mut idx = 0usize;
        for a in 0..k.len() {
            idx = idx * self.counts[a] as usize + k[a].rem_euclid(self.counts[a]) as usize;
        }
        idx
    }

    fn unflat(&self, mut idx: usize) -> Point {
        let n = self.counts.len();
        let mut k = Point::from_elem(0, n);
        for a in (0..n).rev() {
            let c = self.counts[a] as usize;
            k[a] = (idx % c) as Coord;
            idx /= c;
        }
        k
    }

    /// Lattice indices (unreduced) of squares whose bounding box is within `slack` of `r`.
    fn near(&self, r: &Rect, slack: Coord, mut f: impl FnMut(&[Coord])) {
        let n = r.n();
        let mut lo = Point::new();
        let mut hi = Point::new();
        for a in 0..n {
            lo.push((r.lo[a] - slack - self.side - self.base[a]).div_euclid(self.period)
                + ((r.lo[a] - slack - self.side - self.base[a]).rem_euclid(self.period) != 0) as Coord);
            hi.push((r.hi[a] + slack - self.base[a]).div_euclid(self.period));
        }
        for_each_point(&lo, &hi, |k| f(k));
    }
}

/// Multi-scale quasi-tiling of a torus by squares on randomly shifted lattices.
pub fn quasi_tile(grid: &GridBox, q: u32, scales: &[Coord], seed: u64) -> Result<QuasiTiling> {
    if !grid.is_torus() {
        return Err(Error::config("quasi-tiling needs a torus"));
    }
    let n = grid.n();
    let qc = q as Coord;
    let total_cells = grid.len() as u128;
    for (i, &s) in scales.iter().enumerate() {
        if s < qc {
            return Err(Error::config(format!("scale {i} has side {s} < q")));
        }
        if i > 0 && s <= scales[i - 1] {
            return Err(Error::config("scales must be strictly increasing"));
        }
        let period = s + qc + 1;
        for a in 0..n {
            if grid.extent(a) % period != 0 {
                return Err(Error::config(format!(
                    "axis {a} period {} is not divisible by {period} (scale {i})",
                    grid.extent(a)
                )));
            }
            if s + 1 >= grid.extent(a) {
                return Err(Error::config(format!("scale {i} does not fit in the torus")));
            }
        }
    }
    let mut rng = rng::seeded(seed);
    let lattices: Vec<Lattice> = scales
        .iter()
        .map(|&side| {
            let period = side + qc + 1;
            let base: Point = (0..n).map(|a| grid.lo()[a] + rng.random_range(0..period)).collect();
            let counts = (0..n).map(|a| grid.extent(a) / period).collect();
            Lattice { side, period, base, counts }
        })
        .collect();
    let nl = lattices.len();

    // first later scale whose lattice removes each square (nl when never removed)
    let first_removal: Vec<Vec<usize>> = (0..nl)
        .map(|i| {
            (0..lattices[i].total())
                .into_par_iter()
                .map(|idx| {
                    let c = lattices[i].rect(&lattices[i].unflat(idx));
                    for (j, lat) in lattices.iter().enumerate().skip(i + 1) {
                        let mut hit = false;
                        lat.near(&c, qc, |k| {
                            if hit {
                                return;
                            }
                            let d = lat.rect(k);
                            let close = rect_boundary_dist(&c, &d, None).is_some_and(|x| x <= qc);
                            let crossing = !(c.disjoint(&d, None) || d.contains_rect(&c, None) || c.contains_rect(&d, None));
                            hit = close || crossing;
                        });
                        if hit {
                            return j;
                        }
                    }
                    nl
                })
                .collect()
        })
        .collect();

    let mut report = Vec::with_capacity(nl);
    for k in 1..=nl {
        // squares alive when only scales < k are placed, counted if maximal
        let mut covered: u128 = 0;
        for i in 0..k {
            let lat = &lattices[i];
            let area = (lat.side as u128 + 1).pow(n as u32);
            let maximal: usize = (0..lat.total())
                .into_par_iter()
                .filter(|&idx| {
                    if first_removal[i][idx] < k {
                        return false;
                    }
                    let c = lat.rect(&lat.unflat(idx));
                    for j in i + 1..k {
                        let outer = &lattices[j];
                        let mut contained = false;
                        outer.near(&c, 0, |kk| {
                            if !contained && first_removal[j][outer.flat(kk)] >= k && outer.rect(kk).contains_rect(&c, None) {
                                contained = true;
                            }
                        });
                        if contained {
                            return false;
                        }
                    }
                    true
                })
                .count();
            covered += maximal as u128 * area;
        }
        let lat = &lattices[k - 1];
        let squares = lat.total();
        let side_cells = (lat.side as u128 + 1).pow(n as u32);
        report.push(ScaleReport {
            scale: k - 1,
            side: lat.side,
            shift: (0..n).map(|a| lat.base[a] - grid.lo()[a]).collect(),
            squares,
            retained: first_removal[k - 1].iter().filter(|&&r| r == nl).count(),
            scale_coverage: Fraction::new(side_cells * squares as u128, total_cells),
            cumulative: Fraction::new(covered, total_cells),
        });
    }

    let mut pieces = Vec::new();
    for (i, lat) in lattices.iter().enumerate() {
        for idx in 0..lat.total() {
            if first_removal[i][idx] == nl {
                let r = lat.rect(&lat.unflat(idx));
                let lo = grid.wrap(&r.lo);
                let hi: Point = (0..n).map(|a| lo[a] + r.side(a)).collect();
                pieces.push(Rect::new(&lo, &hi)?);
            }
        }
    }
    let toast = Toast::new(grid.clone(), q, pieces)?;
    Ok(QuasiTiling { toast, report })
}

/// A random valid toast built by rejection sampling; used for test corpora.
///
/// Pieces keep `margin` cells from the edge of a hard box.
pub fn random_toast(grid: &GridBox, q: u32, attempts: usize, max_side: Coord, margin: Coord, seed: u64) -> Result<Toast> {
    let n = grid.n();
    let qc = q as Coord;
    let periods = grid.periods();
    let periods = periods.as_deref();
    let mut rng = rng::seeded(seed);
    let mut pieces: Vec<Rect> = Vec::new();
    for _ in 0..attempts {
        let mut lo = Point::new();
        let mut hi = Point::new();
        let mut ok = true;
        for a in 0..n {
            let room = if grid.is_torus() { grid.extent(a) - 2 } else { grid.extent(a) - 1 - 2 * margin };
            let cap = max_side.min(room);
            if cap < qc {
                ok = false;
                break;
            }
            let u: f64 = rng.random();
            let side = qc + ((u * u) * (cap - qc + 1) as f64) as Coord;
            let side = side.min(cap);
            let start = if grid.is_torus() {
                grid.lo()[a] + rng.random_range(0..grid.extent(a))
            } else {
                grid.lo()[a] + margin + rng.random_range(0..=(room - side))
            };
            lo.push(start);
            hi.push(start + side);
        }
        if !ok {
            return Err(Error::config("box too small for pieces of side q"));
        }
        let cand = Rect::new(&lo, &hi)?;
        let fits = pieces.iter().all(|p| {
            let nested = cand.disjoint(p, periods) || cand.contains_rect(p, periods) || p.contains_rect(&cand, periods);
            nested && rect_boundary_dist(&cand, p, periods).is_none_or(|d| d > qc)
        });
        if fits {
            pieces.push(cand);
        }
    }
    Toast::new(grid.clone(), q, pieces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn spiral_is_bijective_on_prefix() {
        let act = ComputableAction::new(2).unwrap();
        let mut seen = HashSet::new();
        for i in 0..(41 * 41) {
            let p = act.point(i).unwrap();
            assert!(p[0].abs() <= 20 && p[1].abs() <= 20);
            assert_eq!(act.index_of(&p).unwrap(), i);
            assert!(seen.insert(p));
        }
        assert_eq!(act.point(0).unwrap().as_slice(), &[0, 0]);
        assert_eq!(act.point(1).unwrap().as_slice(), &[1, 0]);
    }

    #[test]
    fn shells_are_bijective_on_prefix() {
        for n in [1usize, 3] {
            let act = ComputableAction::new(n).unwrap();
            let side: u64 = 9;
            let total = side.pow(n as u32);
            let mut seen = HashSet::new();
            for i in 0..total {
                let p = act.point(i).unwrap();
                assert!(p.iter().all(|c| c.abs() <= 4));
                assert_eq!(act.index_of(&p).unwrap(), i);
                assert!(seen.insert(p));
            }
        }
    }

    #[test]
    fn first_greedy_square() {
        let act = ComputableAction::new(2).unwrap();
        let sq = greedy_squares(&act, 4, 1, false).unwrap();
        assert_eq!(sq[0].0, Rect::new(&[-4, -4], &[4, 4]).unwrap());
    }

    /// Greedy by stepping j one at a time.
    fn greedy_stepwise(act: &ComputableAction, q: Coord, count: usize, big: bool) -> Vec<Coord> {
        let mut out: Vec<(Rect, Coord)> = Vec::new();
        for i in 0..count {
            let p = act.point(i as u64).unwrap();
            let mut j = i as Coord + q;
            loop {
                let c = Rect::cube(&p, j).unwrap();
                if out.iter().all(|(r, jt)| greedy_admissible(&c, r, q, 2 * jt, j, big)) {
                    out.push((c, j));
                    break;
                }
                j += 1;
            }
        }
        out.into_iter().map(|(_, j)| j).collect()
    }

    #[test]
    fn jump_matches_stepwise() {
        for n in [1usize, 2, 3] {
            let act = ComputableAction::new(n).unwrap();
            for q in [1u32, 4] {
                let fast: Vec<Coord> = greedy_squares(&act, q, 25, false).unwrap().into_iter().map(|x| x.1).collect();
                assert_eq!(fast, greedy_stepwise(&act, q as Coord, 25, false));
                let fast: Vec<Coord> = greedy_squares(&act, q, 4, true).unwrap().into_iter().map(|x| x.1).collect();
                assert_eq!(fast, greedy_stepwise(&act, q as Coord, 4, true));
            }
        }
    }

    #[test]
    fn planted_ring_is_only_safe_square() {
        let g = GridBox::cube(2, 7, Topology::HardBoundary).unwrap();
        let k = Rect::new(&[2, 2], &[4, 4]).unwrap();
        let ring = crate::grid::rect_boundary(&k);
        let bits = (0..g.len()).map(|i| ring.contains(&g.coords(i))).collect();
        let f = RandomField::from_bits(g, 0, bits).unwrap();
        let t = extract_safe_squares(&f, 1, Annulus::WidthQ).unwrap();
        assert_eq!(t.pieces(), &[k]);
    }

    #[test]
    fn zero_field_has_no_squares() {
        let g = GridBox::cube(2, 16, Topology::Torus).unwrap();
        let f = RandomField::from_bits(g.clone(), 0, vec![false; g.len()]).unwrap();
        assert!(extract_safe_squares(&f, 2, Annulus::WidthQ).unwrap().is_empty());
        assert!(matches!(extract_safe_squares(&f, 0, Annulus::WidthQ), Err(Error::Precondition(_))));
    }

    #[test]
    fn single_scale_density() {
        let g = GridBox::cube(2, 18, Topology::Torus).unwrap();
        let qt = quasi_tile(&g, 4, &[4], 1).unwrap();
        assert_eq!(qt.report[0].cumulative, Fraction::new(25, 81));
        assert_eq!(qt.toast.len(), 4);
        assert_eq!(crate::toast::coverage(&qt.toast).unwrap(), Fraction::new(25, 81));
    }

    #[test]
    fn quasi_tile_rejects_bad_period() {
        let g = GridBox::cube(2, 20, Topology::Torus).unwrap();
        assert!(matches!(quasi_tile(&g, 4, &[4], 1), Err(Error::Config(_))));
        let h = GridBox::cube(2, 18, Topology::HardBoundary).unwrap();
        assert!(matches!(quasi_tile(&h, 4, &[4], 1), Err(Error::Config(_))));
    }

    #[test]
    fn empty_schedule() {
        let g = GridBox::cube(2, 18, Topology::Torus).unwrap();
        let qt = quasi_tile(&g, 4, &[], 1).unwrap();
        assert!(qt.toast.is_empty() && qt.report.is_empty());
    }

    #[test]
    fn field_is_order_independent() {
        let g = GridBox::new(&[-3, 2], &[5, 9], Topology::HardBoundary).unwrap();
        let f = gen_field(&g, FieldKind::Bits, 99);
        let bits = f.bits().unwrap();
        for x in -3..=5 {
            for y in 2..=9 {
                assert_eq!(bits[g.index(&[x, y]).unwrap()], rng::cell_bit(99, &[x, y]));
            }
        }
    }
}
