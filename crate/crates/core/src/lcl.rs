//! Locally checkable labeling problems on boxes: generic window verification,
//! the rectangular toast problem RT(q), and its refinements CRT(q) and CRT+.

use crate::error::{Error, Result};
use crate::grid::{Coord, GridBox, Point};
use crate::toast::{Label, Labeling, BITS, RB01, RBG};
use dashmap::DashMap;
use rayon::prelude::*;
use rustc_hash::FxBuildHasher;
use smallvec::SmallVec;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::{Arc, OnceLock};

/// Smallest spacing accepted by the RT family.
pub const MIN_Q: u32 = 4;

/// Candidate coordinates for the exhaustive window search range over
/// `[-r, 2q + r]`; this is the default `r` as an offset from `q`.
pub const INFLATION_EXTRA: i64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LclProblem {
    Rt(u32),
    Crt(u32),
    CrtPlus(u32),
    Color(u8),
}

impl LclProblem {
    pub fn parse(token: &str) -> Result<Self> {
        let (kind, arg) = token
            .split_once(':')
            .ok_or_else(|| Error::usage(format!("problem token `{token}` must look like kind:<int>")))?;
        let v: u32 = arg.parse().map_err(|_| Error::usage(format!("bad parameter in `{token}`")))?;
        match kind {
            "rt" => Ok(LclProblem::Rt(v)),
            "crt" => Ok(LclProblem::Crt(v)),
            "crtplus" => Ok(LclProblem::CrtPlus(v)),
            "color" if (1..=10).contains(&v) => Ok(LclProblem::Color(v as u8)),
            "color" => Err(Error::usage("color:<k> needs 1 <= k <= 10")),
            _ => Err(Error::usage(format!("unknown problem `{kind}`"))),
        }
    }

    pub fn alphabet(&self) -> Vec<Label> {
        match self {
            LclProblem::Rt(_) => RBG.to_vec(),
            LclProblem::Crt(_) | LclProblem::CrtPlus(_) => RB01.to_vec(),
            LclProblem::Color(k) => (0..*k).map(Label::Digit).collect(),
        }
    }

    /// The window `W` anchored at the origin.
    pub fn window(&self, n: usize) -> Vec<Point> {
        match self {
            LclProblem::Rt(q) | LclProblem::Crt(q) | LclProblem::CrtPlus(q) => {
                let mut out = Vec::new();
                crate::grid::for_each_point(&vec![0; n], &vec![2 * *q as Coord; n], |p| out.push(Point::from_slice(p)));
                out
            }
            LclProblem::Color(_) => {
                let mut out = vec![Point::from_elem(0, n)];
                for a in 0..n {
                    let mut e = Point::from_elem(0, n);
                    e[a] = 1;
                    out.push(e);
                }
                out
            }
        }
    }
}

impl fmt::Display for LclProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LclProblem::Rt(q) => write!(f, "rt:{q}"),
            LclProblem::Crt(q) => write!(f, "crt:{q}"),
            LclProblem::CrtPlus(q) => write!(f, "crtplus:{q}"),
            LclProblem::Color(k) => write!(f, "color:{k}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Violation {
    pub anchor: Point,
    pub tag: String,
    pub reason: String,
}

/// Labels of the cube window `[0, 2q]^n`, last axis fastest.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WindowAssignment {
    pub n: usize,
    pub q: u32,
    pub values: Vec<Label>,
}

impl WindowAssignment {
    pub fn new(n: usize, q: u32, values: Vec<Label>) -> Result<Self> {
        let side = 2 * q as usize + 1;
        if values.len() != side.pow(n as u32) {
            return Err(Error::usage(format!("window needs {} labels, got {}", side.pow(n as u32), values.len())));
        }
        Ok(WindowAssignment { n, q, values })
    }

    pub fn side(&self) -> usize {
        2 * self.q as usize + 1
    }

    /// The window of `f` anchored at `anchor`; `None` if it leaves a hard box.
    pub fn cut(f: &Labeling, q: u32, anchor: &[Coord]) -> Option<Self> {
        let n = f.grid.n();
        let side = 2 * q as Coord + 1;
        let mut values = Vec::with_capacity((side as usize).pow(n as u32));
        let hi: Point = anchor.iter().map(|&c| c + side - 1).collect();
        let mut ok = true;
        crate::grid::for_each_point(anchor, &hi, |p| match f.get(p) {
            Some(l) => values.push(l),
            None => ok = false,
        });
        ok.then_some(WindowAssignment { n, q, values })
    }

    pub fn bytes(&self) -> Vec<u8> {
        self.values.iter().map(|l| l.byte()).collect()
    }

    pub fn from_bytes(n: usize, q: u32, bytes: &[u8]) -> Self {
        let values = bytes.iter().map(|&b| Label::from_char(b as char).expect("label byte")).collect();
        WindowAssignment { n, q, values }
    }

    pub fn is_all_green(&self) -> bool {
        self.values.iter().all(|&l| l == Label::Green)
    }
}

/// Elements of the hyperoctahedral group as (axis permutation, reflections).
fn group_elements(n: usize) -> Vec<(Vec<usize>, u32)> {
    fn perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(n - 1) {
            for pos in 0..=p.len() {
                let mut v = p.clone();
                v.insert(pos, n - 1);
                out.push(v);
            }
        }
        out
    }
    let mut out = Vec::new();
    let mut ps = perms(n);
    ps.sort();
    for p in ps {
        for signs in 0..(1u32 << n) {
            out.push((p.clone(), signs));
        }
    }
    out
}

/// Applies `(perm, signs)` to a window given as bytes: axis `a` of the source
/// becomes axis `perm[a]`, reflected when bit `a` of `signs` is set.
fn transform(bytes: &[u8], n: usize, side: usize, perm: &[usize], signs: u32) -> Vec<u8> {
    let mut strides = vec![1usize; n];
    for a in (0..n.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * side;
    }
    let mut out = vec![0u8; bytes.len()];
    let mut x = vec![0usize; n];
    for &b in bytes {
        let mut idx = 0;
        for a in 0..n {
            let c = if signs & (1 << a) != 0 { side - 1 - x[a] } else { x[a] };
            idx += c * strides[perm[a]];
        }
        out[idx] = b;
        let mut a = n;
        while a > 0 {
            a -= 1;
            x[a] += 1;
            if x[a] < side {
                break;
            }
            x[a] = 0;
        }
    }
    out
}

/// The orbit of `w` under permutations and reflections of the axes about the window center.
pub fn symmetry_orbit(w: &WindowAssignment) -> Vec<WindowAssignment> {
    let bytes = w.bytes();
    let set: BTreeSet<Vec<u8>> = group_elements(w.n)
        .iter()
        .map(|(p, s)| transform(&bytes, w.n, w.side(), p, *s))
        .collect();
    set.into_iter().map(|b| WindowAssignment::from_bytes(w.n, w.q, &b)).collect()
}

/// Lexicographically least byte encoding over the orbit.
pub fn canonical_bytes(bytes: &[u8], n: usize, side: usize) -> Vec<u8> {
    let mut best: Option<Vec<u8>> = None;
    for (p, s) in group_elements(n) {
        let t = transform(bytes, n, side, &p, s);
        if best.as_ref().is_none_or(|b| t < *b) {
            best = Some(t);
        }
    }
    best.unwrap_or_default()
}

/// One axis of a candidate rectangle; `None` is a clipped side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Span {
    lo: Option<i64>,
    hi: Option<i64>,
}

#[derive(Clone, Debug)]
struct Candidate {
    spans: SmallVec<[Span; 4]>,
    foot: SmallVec<[u64; 4]>,
}

/// Pairwise condition for two visible pieces with clipped sides at infinity.
fn compatible(a: &[Span], b: &[Span], q: i64) -> bool {
    let n = a.len();
    // disjoint: separated on some axis with finite coordinates
    let separated = (0..n).any(|i| {
        matches!((a[i].hi, b[i].lo), (Some(x), Some(y)) if x < y) || matches!((b[i].hi, a[i].lo), (Some(x), Some(y)) if x < y)
    });
    if separated {
        let mut d = 0;
        for i in 0..n {
            if let (Some(x), Some(y)) = (a[i].hi, b[i].lo) {
                d += (y - x).max(0);
            }
            if let (Some(x), Some(y)) = (b[i].hi, a[i].lo) {
                d += (y - x).max(0);
            }
        }
        return d > q;
    }
    let within = |inner: &[Span], outer: &[Span]| {
        (0..n).all(|i| {
            let lo_ok = match (outer[i].lo, inner[i].lo) {
                (None, _) => true,
                (Some(_), None) => false,
                (Some(o), Some(x)) => o <= x,
            };
            let hi_ok = match (outer[i].hi, inner[i].hi) {
                (None, _) => true,
                (Some(_), None) => false,
                (Some(o), Some(x)) => x <= o,
            };
            lo_ok && hi_ok
        })
    };
    let gap = |inner: &[Span], outer: &[Span]| {
        let mut d = i64::MAX;
        for i in 0..n {
            if let (Some(o), Some(x)) = (outer[i].lo, inner[i].lo) {
                d = d.min(x - o);
            }
            if let (Some(o), Some(x)) = (outer[i].hi, inner[i].hi) {
                d = d.min(o - x);
            }
        }
        d
    };
    if within(a, b) {
        gap(a, b) > q
    } else if within(b, a) {
        gap(b, a) > q
    } else {
        false
    }
}

/// Decides membership of `[0,2q]^n` windows in RT(q).
///
/// A window is accepted iff some family of rectangles, pairwise nested or
/// disjoint with boundaries more than `q` apart and finite sides at least `q`,
/// has boundary cells exactly the red cells and outer boundary cells exactly
/// the blue cells of the window. Rectangles are enumerated with finite
/// coordinates in `[-r, 2q + r]` and clipped sides standing for coordinates
/// beyond that range. In the default mode `r = 1`: a finite coordinate more
/// than one cell outside the window can be pushed to infinity without changing
/// the window or breaking any pairwise condition, so larger `r` only adds
/// redundant candidates. [`RtDecider::with_radius`] searches a wider range.
pub struct RtDecider {
    q: u32,
    radius: i64,
    canonical: bool,
    raw: DashMap<Vec<u8>, bool, FxBuildHasher>,
    canon: DashMap<Vec<u8>, bool, FxBuildHasher>,
}

impl fmt::Debug for RtDecider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RtDecider").field("q", &self.q).field("radius", &self.radius).finish()
    }
}

fn shared_deciders() -> &'static DashMap<u32, Arc<RtDecider>> {
    static S: OnceLock<DashMap<u32, Arc<RtDecider>>> = OnceLock::new();
    S.get_or_init(DashMap::new)
}

impl RtDecider {
    pub fn new(q: u32) -> Result<Self> {
        Self::with_radius(q, 1)
    }

    /// Searches candidate coordinates in `[-radius, 2q + radius]`.
    pub fn with_radius(q: u32, radius: i64) -> Result<Self> {
        if q < MIN_Q {
            return Err(Error::precondition(format!("RT(q) needs q >= {MIN_Q}, got {q}")));
        }
        if radius < 1 {
            return Err(Error::config("search radius must be at least 1"));
        }
        Ok(RtDecider { q, radius, canonical: true, raw: DashMap::default(), canon: DashMap::default() })
    }

    /// The inflation radius `q + 2`.
    pub fn inflated(q: u32) -> Result<Self> {
        Self::with_radius(q, q as i64 + INFLATION_EXTRA)
    }

    /// Memoizes raw windows only, without folding symmetric windows together.
    pub fn without_canonical_memo(mut self) -> Self {
        self.canonical = false;
        self
    }

    /// A process-wide memoizing decider for `q`.
    pub fn shared(q: u32) -> Result<Arc<RtDecider>> {
        if let Some(d) = shared_deciders().get(&q) {
            return Ok(d.clone());
        }
        let d = Arc::new(RtDecider::new(q)?);
        Ok(shared_deciders().entry(q).or_insert(d).clone())
    }

    pub fn q(&self) -> u32 {
        self.q
    }
    pub fn radius(&self) -> i64 {
        self.radius
    }
    pub fn memo_len(&self) -> usize {
        self.raw.len()
    }

    pub fn decide(&self, w: &WindowAssignment) -> Result<bool> {
        self.check(w)?;
        Ok(self.decide_bytes(w.n, &w.bytes()))
    }

    /// Decides without consulting or filling the memo tables.
    pub fn decide_uncached(&self, w: &WindowAssignment) -> Result<bool> {
        self.check(w)?;
        Ok(search(w.n, self.q, &w.bytes(), self.radius))
    }

    fn check(&self, w: &WindowAssignment) -> Result<()> {
        if w.q != self.q {
            return Err(Error::usage(format!("window built for q={} given to a q={} decider", w.q, self.q)));
        }
        if let Some(l) = w.values.iter().find(|l| !RBG.contains(l)) {
            return Err(Error::usage(format!("label `{l}` outside {{R,B,G}}")));
        }
        Ok(())
    }

    fn decide_bytes(&self, n: usize, bytes: &[u8]) -> bool {
        if bytes.iter().all(|&b| b == b'G') {
            return true;
        }
        if let Some(v) = self.raw.get(bytes) {
            return *v;
        }
        let side = 2 * self.q as usize + 1;
        let result = if self.canonical {
            let key = canonical_bytes(bytes, n, side);
            let v = match self.canon.get(&key) {
                Some(v) => *v,
                None => {
                    let v = search(n, self.q, &key, self.radius);
                    *self.canon.entry(key).or_insert(v)
                }
            };
            v
        } else {
            search(n, self.q, bytes, self.radius)
        };
        *self.raw.entry(bytes.to_vec()).or_insert(result)
    }
}

/// Whether `φ` is the restriction of the labeling of some rectangular q-toast.
pub fn rt_window_member(w: &WindowAssignment) -> Result<bool> {
    RtDecider::shared(w.q)?.decide(w)
}

fn search(n: usize, q: u32, bytes: &[u8], radius: i64) -> bool {
    let side = 2 * q as i64 + 1;
    let cells = bytes.len();
    let words = cells.div_ceil(64);
    let mut target: SmallVec<[u64; 4]> = SmallVec::from_elem(0, words);
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'R' || b == b'B' {
            target[i / 64] |= 1 << (i % 64);
        }
    }
    if target.iter().all(|&w| w == 0) {
        return true;
    }
    let spans = axis_spans(q as i64, side, radius);
    let mut strides = vec![1usize; n];
    for a in (0..n.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * side as usize;
    }
    let mut cands: Vec<Candidate> = Vec::new();
    let mut idx = vec![0usize; n];
    'outer: loop {
        let s: SmallVec<[Span; 4]> = idx.iter().map(|&i| spans[i]).collect();
        if let Some(foot) = footprint(&s, bytes, side, &strides, words) {
            cands.push(Candidate { spans: s, foot });
        }
        let mut a = n;
        loop {
            if a == 0 {
                break 'outer;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < spans.len() {
                break;
            }
            idx[a] = 0;
        }
    }
    let mut by_cell: Vec<Vec<u32>> = vec![Vec::new(); cells];
    for (ci, c) in cands.iter().enumerate() {
        for (w, &word) in c.foot.iter().enumerate() {
            let mut m = word;
            while m != 0 {
                let b = m.trailing_zeros() as usize;
                by_cell[w * 64 + b].push(ci as u32);
                m &= m - 1;
            }
        }
    }
    let mut chosen: Vec<u32> = Vec::new();
    let covered: SmallVec<[u64; 4]> = SmallVec::from_elem(0, words);
    exact_cover(&cands, &by_cell, &target, covered, &mut chosen, q as i64)
}

/// All per-axis spans visible from the window.
fn axis_spans(q: i64, side: i64, radius: i64) -> Vec<Span> {
    let fmin = -radius;
    let fmax = side - 1 + radius;
    let mut lows: Vec<Option<i64>> = vec![None];
    lows.extend((fmin..=fmax).map(Some));
    let mut out = Vec::new();
    for &lo in &lows {
        for &hi in &lows {
            if let (Some(l), Some(h)) = (lo, hi) {
                if h - l < q {
                    continue;
                }
            }
            // the span or its outer neighbours must meet [0, side-1]
            if lo.is_some_and(|l| l - 1 > side - 1) || hi.is_some_and(|h| h + 1 < 0) {
                continue;
            }
            out.push(Span { lo, hi });
        }
    }
    out
}

/// Boundary and outer-boundary cells of a rectangle inside the window, or
/// `None` if they disagree with the labels or are empty.
fn footprint(s: &[Span], bytes: &[u8], side: i64, strides: &[usize], words: usize) -> Option<SmallVec<[u64; 4]>> {
    let n = s.len();
    let mut foot: SmallVec<[u64; 4]> = SmallVec::from_elem(0, words);
    let mut any = false;
    // clamp of the span to the window on each axis
    let mut clo = [0i64; 16];
    let mut chi = [0i64; 16];
    for a in 0..n {
        clo[a] = s[a].lo.map_or(0, |l| l.max(0));
        chi[a] = s[a].hi.map_or(side - 1, |h| h.min(side - 1));
    }
    for a in 0..n {
        for (coord, want_outer) in [
            (s[a].lo, false),
            (s[a].hi, false),
            (s[a].lo.map(|l| l - 1), true),
            (s[a].hi.map(|h| h + 1), true),
        ] {
            let Some(c) = coord else { continue };
            if c < 0 || c >= side {
                continue;
            }
            if (0..n).any(|b| b != a && clo[b] > chi[b]) {
                continue;
            }
            let want = if want_outer { b'B' } else { b'R' };
            // iterate the face slab
            let mut x = [0i64; 16];
            for b in 0..n {
                x[b] = if b == a { c } else { clo[b] };
            }
            loop {
                let idx: usize = (0..n).map(|b| x[b] as usize * strides[b]).sum();
                if bytes[idx] != want {
                    return None;
                }
                foot[idx / 64] |= 1 << (idx % 64);
                any = true;
                let mut b = n;
                loop {
                    if b == 0 {
                        break;
                    }
                    b -= 1;
                    if b == a {
                        continue;
                    }
                    if x[b] < chi[b] {
                        x[b] += 1;
                        break;
                    }
                    x[b] = clo[b];
                }
                if (0..n).all(|b| b == a || x[b] == clo[b]) {
                    break;
                }
            }
        }
    }
    any.then_some(foot)
}

fn exact_cover(
    cands: &[Candidate],
    by_cell: &[Vec<u32>],
    target: &[u64],
    covered: SmallVec<[u64; 4]>,
    chosen: &mut Vec<u32>,
    q: i64,
) -> bool {
    // most constrained uncovered target cell
    let mut best: Option<(usize, Vec<u32>)> = None;
    for (w, (&t, &c)) in target.iter().zip(covered.iter()).enumerate() {
        let mut m = t & !c;
        while m != 0 {
            let b = m.trailing_zeros() as usize;
            m &= m - 1;
            let cell = w * 64 + b;
            let viable: Vec<u32> = by_cell[cell]
                .iter()
                .copied()
                .filter(|&ci| {
                    let cand = &cands[ci as usize];
                    cand.foot.iter().zip(covered.iter()).all(|(f, c)| f & c == 0)
                        && chosen.iter().all(|&o| compatible(&cand.spans, &cands[o as usize].spans, q))
                })
                .collect();
            if viable.is_empty() {
                return false;
            }
            if best.as_ref().is_none_or(|(_, v)| viable.len() < v.len()) {
                best = Some((cell, viable));
            }
        }
    }
    let Some((_, viable)) = best else {
        return true;
    };
    for ci in viable {
        let mut next = covered.clone();
        for (n, f) in next.iter_mut().zip(cands[ci as usize].foot.iter()) {
            *n |= f;
        }
        chosen.push(ci);
        if exact_cover(cands, by_cell, target, next, chosen, q) {
            return true;
        }
        chosen.pop();
    }
    false
}

fn check_alphabet(f: &Labeling, allowed: &[Label]) -> Result<()> {
    if let Some(l) = f.cells.iter().find(|l| !allowed.contains(l)) {
        return Err(Error::usage(format!("label `{l}` is not in the problem alphabet")));
    }
    Ok(())
}

/// Anchors whose `[0, 2q]^n` window fits in the box (every cell on a torus).
fn window_anchors(grid: &GridBox, q: u32) -> Vec<usize> {
    let w = 2 * q as Coord;
    (0..grid.len())
        .filter(|&i| grid.is_torus() || (0..grid.n()).all(|a| grid.axis_offset(i, a) as Coord + w < grid.extent(a)))
        .collect()
}

/// Whether each anchor's window contains a cell with `pred`.
fn window_any(grid: &GridBox, q: u32, mask: Vec<bool>) -> Vec<bool> {
    let mut cur = mask;
    for a in 0..grid.n() {
        let mut next = vec![false; cur.len()];
        for (i, slot) in next.iter_mut().enumerate() {
            let mut j = Some(i);
            for _ in 0..=2 * q {
                let Some(k) = j else { break };
                if cur[k] {
                    *slot = true;
                    break;
                }
                j = grid.step(k, a, 1);
            }
        }
        cur = next;
    }
    cur
}

fn window_bytes(f: &Labeling, q: u32, anchor: usize, proj: impl Fn(Label) -> Label) -> Vec<u8> {
    let grid = &f.grid;
    let n = grid.n();
    let side = 2 * q as usize + 1;
    let base: Vec<usize> = (0..n).map(|a| grid.axis_offset(anchor, a)).collect();
    let mut out = Vec::with_capacity(side.pow(n as u32));
    let mut x = vec![0usize; n];
    loop {
        let mut idx = 0;
        for a in 0..n {
            let ext = grid.extent(a) as usize;
            idx += ((base[a] + x[a]) % ext) * grid.strides()[a];
        }
        out.push(proj(f.cells[idx]).byte());
        let mut a = n;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            x[a] += 1;
            if x[a] < side {
                break;
            }
            x[a] = 0;
        }
    }
}

fn rt_violations_with(
    f: &Labeling,
    q: u32,
    decider: &RtDecider,
    tag: &str,
    proj: impl Fn(Label) -> Label + Sync,
) -> Vec<Violation> {
    let grid = &f.grid;
    let dirty = window_any(grid, q, f.cells.iter().map(|&l| proj(l) != Label::Green).collect());
    let anchors: Vec<usize> = window_anchors(grid, q).into_iter().filter(|&i| dirty[i]).collect();
    let mut out: Vec<Violation> = anchors
        .par_iter()
        .filter_map(|&i| {
            let bytes = window_bytes(f, q, i, &proj);
            (!decider.decide_bytes(grid.n(), &bytes)).then(|| Violation {
                anchor: grid.coords(i),
                tag: tag.to_string(),
                reason: "window is not the restriction of a rectangular toast labeling".to_string(),
            })
        })
        .collect();
    out.sort();
    out
}

/// All anchors whose window violates `p`, sorted by anchor.
pub fn verify_labeling(p: &LclProblem, f: &Labeling) -> Result<Vec<Violation>> {
    match *p {
        LclProblem::Rt(q) => {
            check_alphabet(f, &RBG)?;
            let d = RtDecider::shared(q)?;
            Ok(rt_violations_with(f, q, &d, "RT", |l| l))
        }
        LclProblem::Crt(q) => crt_verify(f, q),
        LclProblem::CrtPlus(_) => Err(Error::usage("crtplus needs the h layers; use crt_plus_verify")),
        LclProblem::Color(k) => {
            check_alphabet(f, &p.alphabet())?;
            let grid = &f.grid;
            let mut out = Vec::new();
            for i in 0..grid.len() {
                for a in 0..grid.n() {
                    if let Some(j) = grid.step(i, a, 1) {
                        if f.cells[i] == f.cells[j] {
                            out.push(Violation {
                                anchor: grid.coords(i),
                                tag: format!("color:{k}"),
                                reason: format!("equal colors {} along axis {a}", f.cells[i]),
                            });
                            break;
                        }
                    }
                }
            }
            out.sort();
            Ok(out)
        }
    }
}

fn require_q(q: u32) -> Result<()> {
    if q < MIN_Q {
        return Err(Error::precondition(format!("q must be at least {MIN_Q}, got {q}")));
    }
    Ok(())
}

/// C1: greens refined to 0/1 project to an RT(q) solution. C2: the 0/1 cells form a partial 2-coloring.
pub fn crt_verify(f: &Labeling, q: u32) -> Result<Vec<Violation>> {
    require_q(q)?;
    check_alphabet(f, &RB01)?;
    let d = RtDecider::shared(q)?;
    let mut out = rt_violations_with(f, q, &d, "C1", |l| if l.is_digit() { Label::Green } else { l });
    let grid = &f.grid;
    for i in 0..grid.len() {
        if !f.cells[i].is_digit() {
            continue;
        }
        for a in 0..grid.n() {
            if let Some(j) = grid.step(i, a, 1) {
                if f.cells[j] == f.cells[i] {
                    out.push(Violation {
                        anchor: grid.coords(i),
                        tag: "C2".into(),
                        reason: format!("adjacent cells along axis {a} both colored {}", f.cells[i]),
                    });
                }
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Conditions (+1) to (+4) for `(f, h1, h2)` on a planar box.
pub fn crt_plus_verify(f: &Labeling, h1: &Labeling, h2: &Labeling, q: u32) -> Result<Vec<Violation>> {
    if f.grid.n() != 2 {
        return Err(Error::Unsupported(format!("CRT+ is defined for n = 2, got n = {}", f.grid.n())));
    }
    require_q(q)?;
    if h1.grid != f.grid || h2.grid != f.grid {
        return Err(Error::usage("f, h1 and h2 must share a box"));
    }
    check_alphabet(h1, &BITS)?;
    check_alphabet(h2, &BITS)?;
    let mut out = crt_verify(f, q)?;
    let grid = &f.grid;
    let hs = [h1, h2];
    for i in 0..grid.len() {
        let x = || grid.coords(i);
        if f.cells[i] == Label::Red && (h1.cells[i] != Label::ZERO || h2.cells[i] != Label::ZERO) {
            out.push(Violation { anchor: x(), tag: "+2".into(), reason: "red cell with a nonzero h".into() });
        }
        for (a, h) in hs.iter().enumerate() {
            let ei = grid.step(i, a, 1);
            if f.cells[i] == Label::Blue {
                if let Some(j) = ei {
                    if f.cells[j] == Label::Red && h.cells[i] != Label::ONE {
                        out.push(Violation {
                            anchor: x(),
                            tag: "+3".into(),
                            reason: format!("blue cell left of red along axis {a} has h{}=0", a + 1),
                        });
                    }
                }
            }
            let diag = grid.step(i, 0, 1).and_then(|j| grid.step(j, 1, 1));
            if let (Some(j), Some(k)) = (ei, diag) {
                if h.cells[j] == Label::ONE && h.cells[k] == Label::ONE && h.cells[i] != Label::ONE {
                    out.push(Violation {
                        anchor: x(),
                        tag: "+4".into(),
                        reason: format!("h{} is 1 at x+e{} and x+e1+e2 but 0 at x", a + 1, a + 1),
                    });
                }
            }
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridBox, Rect, Topology};
    use crate::toast::{label_from_toast, Toast};

    fn window(q: u32, rows: &[&str]) -> WindowAssignment {
        let values = rows.iter().flat_map(|r| r.chars()).map(|c| Label::from_char(c).unwrap()).collect();
        WindowAssignment::new(2, q, values).unwrap()
    }

    fn green(q: u32) -> Vec<String> {
        let side = 2 * q as usize + 1;
        vec!["G".repeat(side); side]
    }

    fn with(q: u32, cells: &[(usize, usize, char)]) -> WindowAssignment {
        let mut rows: Vec<Vec<char>> = green(q).iter().map(|r| r.chars().collect()).collect();
        for &(x, y, c) in cells {
            rows[x][y] = c;
        }
        let rows: Vec<String> = rows.into_iter().map(|r| r.into_iter().collect()).collect();
        let refs: Vec<&str> = rows.iter().map(|s| s.as_str()).collect();
        window(q, &refs)
    }

    #[test]
    fn basic_windows() {
        let d = RtDecider::new(4).unwrap();
        assert!(d.decide(&with(4, &[])).unwrap());
        assert!(!d.decide(&with(4, &[(4, 4, 'R')])).unwrap());
        assert!(!d.decide(&with(4, &[(4, 4, 'B')])).unwrap());
        // a lone blue in a window corner is the outer boundary of a piece beyond the corner
        assert!(d.decide(&with(4, &[(0, 8, 'B')])).unwrap());
        assert!(!d.decide(&with(4, &[(0, 0, 'R')])).unwrap());
        assert!(matches!(RtDecider::new(3), Err(Error::Precondition(_))));
    }

    #[test]
    fn straight_wall() {
        let d = RtDecider::new(4).unwrap();
        let mut cells = Vec::new();
        for y in 0..9 {
            cells.push((4, y, 'R'));
            cells.push((3, y, 'B'));
        }
        assert!(d.decide(&with(4, &cells)).unwrap());
        cells.retain(|c| c.2 != 'B');
        assert!(!d.decide(&with(4, &cells)).unwrap());
    }

    #[test]
    fn toast_windows_accepted() {
        let g = GridBox::cube(2, 40, Topology::HardBoundary).unwrap();
        let t = Toast::new(
            g,
            4,
            vec![
                Rect::new(&[5, 5], &[30, 30]).unwrap(),
                Rect::new(&[10, 10], &[16, 20]).unwrap(),
                Rect::new(&[21, 10], &[25, 14]).unwrap(),
            ],
        )
        .unwrap();
        let f = label_from_toast(&t).unwrap();
        assert!(verify_labeling(&LclProblem::Rt(4), &f).unwrap().is_empty());
    }

    #[test]
    fn orbit_sizes() {
        let w = with(4, &[]);
        assert_eq!(symmetry_orbit(&w).len(), 1);
        let w = with(4, &[(0, 1, 'R'), (0, 3, 'B'), (2, 0, 'B')]);
        let orbit = symmetry_orbit(&w);
        assert_eq!(orbit.len(), 8);
        for o in &orbit {
            for (p, s) in group_elements(2) {
                let t = transform(&o.bytes(), 2, 9, &p, s);
                assert!(orbit.iter().any(|x| x.bytes() == t));
            }
        }
    }

    #[test]
    fn color_problem() {
        let g = GridBox::cube(2, 3, Topology::HardBoundary).unwrap();
        let parity: Vec<Label> = (0..g.len())
            .map(|i| {
                let p = g.coords(i);
                Label::Digit(((p[0] + p[1]) % 2) as u8)
            })
            .collect();
        let f = Labeling::from_cells(g.clone(), &BITS, parity).unwrap();
        assert!(verify_labeling(&LclProblem::Color(2), &f).unwrap().is_empty());
        let zero = Labeling::filled(g, &BITS, Label::ZERO);
        assert_eq!(verify_labeling(&LclProblem::Color(2), &zero).unwrap().len(), 8);
    }

    #[test]
    fn crt_adjacent_zeros() {
        let g = GridBox::cube(2, 12, Topology::HardBoundary).unwrap();
        let mut f = Labeling::from_cells(
            g.clone(),
            &RB01,
            (0..g.len()).map(|i| Label::Digit((g.coords(i).iter().sum::<i64>() % 2) as u8)).collect(),
        )
        .unwrap();
        assert!(crt_verify(&f, 4).unwrap().is_empty());
        f.set(&[5, 6], Label::ZERO);
        let v = crt_verify(&f, 4).unwrap();
        assert!(v.iter().all(|x| x.tag == "C2") && !v.is_empty());
        f.set(&[5, 6], Label::Red);
        assert!(crt_verify(&f, 4).unwrap().iter().any(|x| x.tag == "C1"));
    }

    #[test]
    fn problem_tokens() {
        assert_eq!(LclProblem::parse("rt:4").unwrap(), LclProblem::Rt(4));
        assert_eq!(LclProblem::parse("crtplus:5").unwrap(), LclProblem::CrtPlus(5));
        assert!(LclProblem::parse("rt").is_err());
        assert!(LclProblem::parse("foo:1").is_err());
    }
}
