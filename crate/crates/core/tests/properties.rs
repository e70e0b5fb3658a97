use proptest::prelude::*;
use std::collections::{BTreeSet, VecDeque};
use toastlab::analysis::{extract_red_structure, four_cycle_parity_check};
use toastlab::coloring::{assemble_crt, d_regions, partial_two_color};
use toastlab::construct::{
    extract_safe_squares, gen_field, greedy_squares, greedy_toast, quasi_tile, random_toast, Annulus, ComputableAction,
    FieldKind, RandomField,
};
use toastlab::grid::{rect_boundary, rect_boundary_dist, rect_outer_boundary, set_dist, Coord, GridBox, Point, Rect, Topology};
use toastlab::io;
use toastlab::lcl::{crt_verify, symmetry_orbit, RtDecider, WindowAssignment};
use toastlab::toast::{
    coverage, label_from_toast, union_mask, validate_toast, validate_toast_fast, Fraction, Label, Toast, RBG,
};

fn rect2() -> impl Strategy<Value = Rect> {
    (-6i64..6, -6i64..6, 0i64..7, 0i64..7).prop_map(|(x, y, a, b)| Rect::new(&[x, y], &[x + a, y + b]).unwrap())
}

fn brute_boundary(r: &Rect) -> BTreeSet<Point> {
    let mut out = BTreeSet::new();
    for x in r.lo[0]..=r.hi[0] {
        for y in r.lo[1]..=r.hi[1] {
            let p = Point::from_slice(&[x, y]);
            let nbrs = [[x + 1, y], [x - 1, y], [x, y + 1], [x, y - 1]];
            if nbrs.iter().any(|q| !r.contains_point(q)) {
                out.insert(p);
            }
        }
    }
    out
}

fn wrap_boundary(r: &Rect, g: &GridBox) -> Vec<Point> {
    let mut v: Vec<Point> = rect_boundary(r).iter().map(|p| g.wrap(p)).collect();
    v.sort();
    v.dedup();
    v
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn boundary_matches_adjacency(r in rect2()) {
        let got: BTreeSet<Point> = rect_boundary(&r).into_iter().collect();
        prop_assert_eq!(got, brute_boundary(&r));
        let outer = rect_outer_boundary(&r);
        prop_assert!(outer.iter().all(|p| !r.contains_point(p)));
        prop_assert_eq!(set_dist(&rect_boundary(&r), &outer).unwrap(), Some(1));
    }

    #[test]
    fn boundary_distance_closed_form(a in rect2(), b in rect2()) {
        let brute = set_dist(&rect_boundary(&a), &rect_boundary(&b)).unwrap().map(|d| d as i64);
        prop_assert_eq!(rect_boundary_dist(&a, &b, None), brute);
    }

    #[test]
    fn torus_boundary_distance(a in rect2(), b in rect2(), p in 16i64..22) {
        let g = GridBox::new(&[-8, -8], &[-8 + p - 1, -8 + p - 1], Topology::Torus).unwrap();
        let (ba, bb) = (wrap_boundary(&a, &g), wrap_boundary(&b, &g));
        let mut best = u64::MAX;
        for x in &ba {
            for y in &bb {
                best = best.min(g.l1_dist(x, y).unwrap());
            }
        }
        let periods = g.periods().unwrap();
        prop_assert_eq!(rect_boundary_dist(&a, &b, Some(&periods)), Some(best as i64));
    }

    #[test]
    fn l1_is_graph_distance(x0 in 0i64..9, y0 in 0i64..7, x1 in 0i64..9, y1 in 0i64..7, torus in any::<bool>()) {
        let topo = if torus { Topology::Torus } else { Topology::HardBoundary };
        let g = GridBox::new(&[0, 0], &[8, 6], topo).unwrap();
        let s = g.index(&[x0, y0]).unwrap();
        let mut dist = vec![u64::MAX; g.len()];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(i) = queue.pop_front() {
            for j in g.neighbors(i) {
                if dist[j] == u64::MAX {
                    dist[j] = dist[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        prop_assert_eq!(dist[g.index(&[x1, y1]).unwrap()], g.l1_dist(&[x0, y0], &[x1, y1]).unwrap());
    }

    #[test]
    fn fast_validation_is_identical(pieces in prop::collection::vec(rect2(), 0..7), q in 0u32..4, torus in any::<bool>()) {
        let topo = if torus { Topology::Torus } else { Topology::HardBoundary };
        let g = GridBox::new(&[-8, -8], &[12, 12], topo).unwrap();
        prop_assert_eq!(validate_toast(&pieces, q, &g), validate_toast_fast(&pieces, q, &g));
    }

    #[test]
    fn labeling_is_union_of_boundaries(seed in any::<u64>(), torus in any::<bool>()) {
        let topo = if torus { Topology::Torus } else { Topology::HardBoundary };
        let g = GridBox::cube(2, 60, topo).unwrap();
        let t = random_toast(&g, 4, 12, 30, 0, seed).unwrap();
        let f = label_from_toast(&t).unwrap();
        let mut red = vec![false; g.len()];
        let mut blue = vec![false; g.len()];
        for k in t.pieces() {
            for p in rect_boundary(k) {
                if let Some(i) = g.index(&g.wrap(&p)) { red[i] = true; }
            }
            for p in rect_outer_boundary(k) {
                if let Some(i) = g.index(&g.wrap(&p)) { blue[i] = true; }
            }
        }
        for i in 0..g.len() {
            prop_assert!(!(red[i] && blue[i]));
            let want = if red[i] { Label::Red } else if blue[i] { Label::Blue } else { Label::Green };
            prop_assert_eq!(f.cells[i], want);
        }
        let union = union_mask(&t).iter().filter(|&&b| b).count() as u128;
        prop_assert_eq!(coverage(&t).unwrap(), Fraction::new(union, g.len() as u128));
    }

    #[test]
    fn toast_windows_and_structure(seed in any::<u64>()) {
        let g = GridBox::cube(2, 48, Topology::HardBoundary).unwrap();
        let t = random_toast(&g, 4, 8, 24, 6, seed).unwrap();
        let f = label_from_toast(&t).unwrap();
        let d = RtDecider::shared(4).unwrap();
        let mut r = toastlab::rng::seeded(seed);
        for _ in 0..20 {
            use rand::Rng;
            let a = [r.random_range(0..40), r.random_range(0..40)];
            let w = WindowAssignment::cut(&f, 4, &a).unwrap();
            prop_assert!(d.decide(&w).unwrap());
        }
        prop_assert!(four_cycle_parity_check(&f).is_none());
        let mut got: Vec<Rect> = extract_red_structure(&f, 4).unwrap().into_iter().map(|s| s.rect).collect();
        let mut want = t.pieces().to_vec();
        got.sort();
        want.sort();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn crt_assembly_verifies(seed in any::<u64>()) {
        let g = GridBox::cube(2, 50, Topology::HardBoundary).unwrap();
        let t = random_toast(&g, 4, 10, 30, 0, seed).unwrap();
        let f = assemble_crt(&t, 4).unwrap();
        prop_assert!(crt_verify(&f, 4).unwrap().is_empty());
        // colored components inside the union stay within one piece
        let max_area = t.pieces().iter().map(|k| k.volume()).max().unwrap_or(0) as usize;
        let base = label_from_toast(&t).unwrap();
        let union = union_mask(&t);
        let inside: Vec<bool> = (0..g.len()).map(|i| union[i] && base.cells[i] == Label::Green).collect();
        let c = partial_two_color(&inside, &g).unwrap();
        prop_assert!(c.is_proper());
        let mut seen = vec![false; g.len()];
        for s in 0..g.len() {
            if !inside[s] || seen[s] { continue; }
            seen[s] = true;
            let mut size = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(i) = queue.pop_front() {
                size += 1;
                for j in g.neighbors(i) {
                    if inside[j] && !seen[j] { seen[j] = true; queue.push_back(j); }
                }
            }
            prop_assert!(size <= max_area);
        }
    }

    #[test]
    fn partial_coloring_is_proper(bits in prop::collection::vec(any::<bool>(), 120)) {
        let g = GridBox::new(&[0, 0], &[9, 11], Topology::HardBoundary).unwrap();
        let c = partial_two_color(&bits, &g).unwrap();
        prop_assert!(c.is_proper());
        for (i, &b) in bits.iter().enumerate() {
            prop_assert_eq!(c.in_domain(i), b);
        }
    }

    #[test]
    fn staircase_sizes(a in 0i64..100, b in 0i64..100) {
        let (d1, d2) = d_regions(&Rect::new(&[3, -2], &[3 + a, -2 + b]).unwrap()).unwrap();
        prop_assert_eq!(d1.len() as i64, (b + 1) * (b + 2) / 2);
        prop_assert_eq!(d2.len() as i64, (a + 1) * (a + 2) / 2);
        prop_assert!(d1.len() as i64 + d2.len() as i64 >= (a + 1) * (b + 1));
    }

    #[test]
    fn greedy_prefix_properties(n in 1usize..4, q in 1u32..6, count in 1usize..25) {
        let act = ComputableAction::new(n).unwrap();
        let sq = greedy_squares(&act, q, count, false).unwrap();
        let qc = q as Coord;
        for (i, (r, _)) in sq.iter().enumerate() {
            prop_assert!(r.contains_point(&act.point(i as u64).unwrap()));
            prop_assert!((0..n).all(|a| r.side(a) == r.side(0)));
            prop_assert!(r.side(0) >= 2 * (i as Coord + qc));
            for (s, _) in &sq[..i] {
                prop_assert!(rect_boundary_dist(r, s, None).is_none_or(|d| d > qc));
            }
        }
        prop_assert!(greedy_toast(&act, q, count, false).is_ok());
    }

    #[test]
    fn safe_squares_monotone_in_q(seed in any::<u64>(), q in 1u32..4) {
        let g = GridBox::cube(2, 40, Topology::Torus).unwrap();
        let field = gen_field(&g, FieldKind::Bits, seed);
        let lower: BTreeSet<Rect> = extract_safe_squares(&field, q, Annulus::WidthQ).unwrap()
            .pieces().iter().filter(|r| r.side(0) > q as Coord).cloned().collect();
        let upper: BTreeSet<Rect> = extract_safe_squares(&field, q + 1, Annulus::WidthQ).unwrap().pieces().iter().cloned().collect();
        prop_assert!(upper.is_subset(&lower));
    }

    #[test]
    fn single_scale_density(n in 1usize..4, side in 1i64..9, q in 0u32..5, k in 1i64..3, seed in any::<u64>()) {
        prop_assume!(side >= q as Coord && (q > 0 || k > 1));
        let period = k * (side + q as Coord + 1);
        prop_assume!(period >= 3 && (period as u64).pow(n as u32) <= 40_000);
        let g = GridBox::cube(n, period, Topology::Torus).unwrap();
        let qt = quasi_tile(&g, q, &[side], seed).unwrap();
        let base = (side + q as Coord + 1) as u128;
        prop_assert_eq!(coverage(&qt.toast).unwrap(), Fraction::new(((side + 1) as u128).pow(n as u32), base.pow(n as u32)));
    }

    #[test]
    fn orbit_is_invariant(values in prop::collection::vec(0usize..3, 81)) {
        let labels = values.iter().map(|&v| RBG[v]).collect();
        let w = WindowAssignment::new(2, 4, labels).unwrap();
        let orbit = symmetry_orbit(&w);
        // closed under a quarter turn and a mirror, which generate the group
        let rot = |v: &[Label]| -> Vec<Label> { (0..81).map(|i| { let (x, y) = (i / 9, i % 9); v[(8 - y) * 9 + x] }).collect() };
        let mirror = |v: &[Label]| -> Vec<Label> { (0..81).map(|i| { let (x, y) = (i / 9, i % 9); v[(8 - x) * 9 + y] }).collect() };
        for o in &orbit {
            for img in [rot(&o.values), mirror(&o.values)] {
                prop_assert!(orbit.iter().any(|p| p.values == img));
            }
        }
        prop_assert!(orbit.len() <= 8 && 8 % orbit.len() == 0);
        let d = RtDecider::new(4).unwrap();
        let base = d.decide_uncached(&w).unwrap();
        for o in &orbit {
            prop_assert_eq!(d.decide_uncached(o).unwrap(), base);
        }
    }

    #[test]
    fn io_roundtrips(seed in any::<u64>(), torus in any::<bool>()) {
        let topo = if torus { Topology::Torus } else { Topology::HardBoundary };
        let g = GridBox::new(&[-3, 5], &[30, 40], topo).unwrap();
        let t = random_toast(&g, 4, 6, 20, 0, seed).unwrap();
        let mut buf = Vec::new();
        io::write_toast(&mut buf, &t).unwrap();
        let back = io::read_toast(buf.as_slice()).unwrap();
        prop_assert_eq!(back.pieces(), t.pieces());
        let f = label_from_toast(&t).unwrap();
        let s = io::labeling_to_string(&f);
        prop_assert_eq!(io::read_labeling(s.as_bytes()).unwrap(), f);
        let field = gen_field(&g, FieldKind::Reals, seed);
        let mut fb = Vec::new();
        io::write_field(&mut fb, &field).unwrap();
        prop_assert_eq!(io::read_field(fb.as_slice()).unwrap(), field);
    }

    #[test]
    fn field_is_keyed_by_coordinates(seed in any::<u64>()) {
        let g = GridBox::new(&[0, 0], &[7, 9], Topology::HardBoundary).unwrap();
        let f = gen_field(&g, FieldKind::Bits, seed);
        let bits = f.bits().unwrap();
        // column-major spot check against the keyed stream
        for y in 0..10 {
            for x in 0..8 {
                prop_assert_eq!(bits[g.index(&[x, y]).unwrap()], toastlab::rng::cell_bit(seed, &[x, y]));
            }
        }
        let again: RandomField = gen_field(&g, FieldKind::Bits, seed);
        prop_assert_eq!(again, f);
    }
}

#[test]
fn boundary_count_formula() {
    for a in 1..=10 {
        for b in 1..=10 {
            let r = Rect::new(&[0, 0], &[a, b]).unwrap();
            assert_eq!(rect_boundary(&r).len() as i64, 2 * (a + 1) + 2 * (b + 1) - 4);
            assert_eq!(brute_boundary(&r).len(), rect_boundary(&r).len());
        }
    }
}

#[test]
fn large_sum_exhaustive() {
    for a in 0u64..=200 {
        for b in 0u64..=200 {
            assert!((a + 1) * (a + 2) / 2 + (b + 1) * (b + 2) / 2 >= (a + 1) * (b + 1));
        }
    }
}

#[test]
fn big_gap_greedy_prefixes() {
    let act = ComputableAction::new(2).unwrap();
    for count in 1..=8 {
        let sq = greedy_squares(&act, 4, count, true).unwrap();
        for i in 0..sq.len() {
            for s in 0..i {
                let (ri, rs) = (&sq[i].0, &sq[s].0);
                if !ri.contains_rect(rs, None) {
                    let d = rect_boundary_dist(ri, rs, None).unwrap();
                    assert!(d > 2 * ri.side(0).max(rs.side(0)));
                }
            }
        }
    }
    let t = greedy_toast(&act, 4, 6, true).unwrap();
    assert!(t.big_gap_certified());
    let _: &Toast = &t;
}

#[test]
fn default_radius_matches_inflated_search() {
    use rand::Rng;
    let narrow = RtDecider::new(4).unwrap();
    let wide = RtDecider::inflated(4).unwrap();
    let g = GridBox::cube(2, 40, Topology::HardBoundary).unwrap();
    let mut r = toastlab::rng::seeded(77);
    let mut accepted = 0;
    for seed in 0..6u64 {
        let f = label_from_toast(&random_toast(&g, 4, 8, 20, 4, seed).unwrap()).unwrap();
        for _ in 0..8 {
            let a = [r.random_range(0..32), r.random_range(0..32)];
            let mut w = WindowAssignment::cut(&f, 4, &a).unwrap();
            if r.random_bool(0.5) {
                let i = r.random_range(0..w.values.len());
                w.values[i] = RBG[r.random_range(0..3)];
            }
            let got = narrow.decide_uncached(&w).unwrap();
            assert_eq!(got, wide.decide_uncached(&w).unwrap(), "{w:?}");
            accepted += got as usize;
        }
    }
    assert!(accepted > 0 && accepted < 48);
}
