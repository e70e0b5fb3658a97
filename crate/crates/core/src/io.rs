//! Text and binary file formats. Every writer is deterministic and byte-exact.

use crate::analysis::Shape;
use crate::construct::{FieldKind, FieldValues, RandomField};
use crate::error::{Error, Result};
use crate::grid::{Coord, GridBox, Point, Rect, Topology};
use crate::lcl::Violation;
use crate::toast::{Label, Labeling, Toast};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Read, Write};

#[derive(Serialize, Deserialize)]
struct ToastHeader {
    n: usize,
    q: u32,
    box_lo: Vec<Coord>,
    box_hi: Vec<Coord>,
    topology: String,
}

#[derive(Serialize, Deserialize)]
struct PieceLine {
    lo: Vec<Coord>,
    hi: Vec<Coord>,
}

fn json_line<W: Write + ?Sized, T: Serialize>(w: &mut W, v: &T) -> Result<()> {
    serde_json::to_writer(&mut *w, v).map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn write_toast<W: Write + ?Sized>(w: &mut W, t: &Toast) -> Result<()> {
    let g = t.grid();
    let header = ToastHeader {
        n: g.n(),
        q: t.q(),
        box_lo: g.lo().to_vec(),
        box_hi: g.hi().to_vec(),
        topology: g.topology().as_str().to_string(),
    };
    json_line(w, &header)?;
    for p in t.pieces() {
        json_line(w, &PieceLine { lo: p.lo.to_vec(), hi: p.hi.to_vec() })?;
    }
    Ok(())
}

/// Reads a toast and validates it.
pub fn read_toast<R: BufRead>(r: R) -> Result<Toast> {
    let mut lines = r.lines().enumerate().filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty()));
    let (_, first) = lines.next().ok_or_else(|| Error::parse(1, "missing toast header"))?;
    let header: ToastHeader = serde_json::from_str(&first?).map_err(|e| Error::parse(1, e.to_string()))?;
    let topology = Topology::parse(&header.topology).map_err(|e| Error::parse(1, e.to_string()))?;
    if header.box_lo.len() != header.n || header.box_hi.len() != header.n {
        return Err(Error::parse(1, "box dimension differs from n"));
    }
    let grid = GridBox::new(&header.box_lo, &header.box_hi, topology)?;
    let mut pieces = Vec::new();
    for (i, line) in lines {
        let p: PieceLine = serde_json::from_str(&line?).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        if p.lo.len() != header.n || p.hi.len() != header.n {
            return Err(Error::parse(i + 1, "piece dimension differs from n"));
        }
        pieces.push(Rect::new(&p.lo, &p.hi).map_err(|e| Error::parse(i + 1, e.to_string()))?);
    }
    Toast::new(grid, header.q, pieces)
}

fn join_coords(p: &[Coord]) -> String {
    p.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_coords(s: &str, line: usize) -> Result<Vec<Coord>> {
    s.split(',')
        .map(|t| t.trim().parse::<Coord>().map_err(|e| Error::parse(line, format!("bad coordinate `{t}`: {e}"))))
        .collect()
}

pub fn write_labeling<W: Write + ?Sized>(w: &mut W, f: &Labeling) -> Result<()> {
    let g = &f.grid;
    let alphabet: Vec<String> = f.alphabet.iter().map(|l| l.to_char().to_string()).collect();
    writeln!(
        w,
        "n={} lo={} hi={} topology={} alphabet={}",
        g.n(),
        join_coords(g.lo()),
        join_coords(g.hi()),
        g.topology().as_str(),
        alphabet.join(",")
    )?;
    let row = g.extent(g.n() - 1) as usize;
    let mut buf = Vec::with_capacity(row + 1);
    for chunk in f.cells.chunks(row) {
        buf.clear();
        buf.extend(chunk.iter().map(|l| l.byte()));
        buf.push(b'\n');
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn labeling_to_string(f: &Labeling) -> String {
    let mut out = Vec::new();
    write_labeling(&mut out, f).expect("writing to memory");
    String::from_utf8(out).expect("label codes are ASCII")
}

fn parse_labeling_header(line: &str, lineno: usize) -> Result<(GridBox, Vec<Label>)> {
    let mut n = None;
    let (mut lo, mut hi, mut topo, mut alpha) = (None, None, None, None);
    for tok in line.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| Error::parse(lineno, format!("bad header field `{tok}`")))?;
        match k {
            "n" => n = Some(v.parse::<usize>().map_err(|e| Error::parse(lineno, e.to_string()))?),
            "lo" => lo = Some(parse_coords(v, lineno)?),
            "hi" => hi = Some(parse_coords(v, lineno)?),
            "topology" => topo = Some(Topology::parse(v).map_err(|e| Error::parse(lineno, e.to_string()))?),
            "alphabet" => {
                let mut a = Vec::new();
                for t in v.split(',') {
                    let mut cs = t.chars();
                    let l = match (cs.next(), cs.next()) {
                        (Some(c), None) => Label::from_char(c),
                        _ => None,
                    };
                    a.push(l.ok_or_else(|| Error::parse(lineno, format!("bad label `{t}`")))?);
                }
                alpha = Some(a);
            }
            _ => return Err(Error::parse(lineno, format!("unknown header field `{k}`"))),
        }
    }
    let missing = |name: &str| Error::parse(lineno, format!("header lacks `{name}`"));
    let n = n.ok_or_else(|| missing("n"))?;
    let lo = lo.ok_or_else(|| missing("lo"))?;
    let hi = hi.ok_or_else(|| missing("hi"))?;
    if lo.len() != n || hi.len() != n {
        return Err(Error::parse(lineno, "box dimension differs from n"));
    }
    let grid = GridBox::new(&lo, &hi, topo.ok_or_else(|| missing("topology"))?)?;
    Ok((grid, alpha.ok_or_else(|| missing("alphabet"))?))
}

/// Reads one labeling block. Stops at a `---` line or end of input; `line0` offsets error line numbers.
fn read_labeling_block<I: Iterator<Item = std::io::Result<String>>>(lines: &mut I, line0: &mut usize) -> Result<Option<Labeling>> {
    let header = loop {
        match lines.next() {
            None => return Ok(None),
            Some(l) => {
                *line0 += 1;
                let l = l?;
                if !l.trim().is_empty() {
                    break l;
                }
            }
        }
    };
    let (grid, alphabet) = parse_labeling_header(&header, *line0)?;
    let row = grid.extent(grid.n() - 1) as usize;
    let rows = grid.len() / row;
    let mut cells = Vec::with_capacity(grid.len());
    for _ in 0..rows {
        let l = lines.next().ok_or_else(|| Error::parse(*line0 + 1, "labeling ends early"))??;
        *line0 += 1;
        let l = l.trim_end_matches('\r');
        if l.len() != row {
            return Err(Error::parse(*line0, format!("row has {} labels, expected {row}", l.len())));
        }
        for c in l.chars() {
            let lab = Label::from_char(c)
                .filter(|x| alphabet.contains(x))
                .ok_or_else(|| Error::parse(*line0, format!("label `{c}` outside the alphabet")))?;
            cells.push(lab);
        }
    }
    Ok(Some(Labeling::from_cells(grid, &alphabet, cells)?))
}

pub fn read_labeling<R: BufRead>(r: R) -> Result<Labeling> {
    let mut lines = r.lines();
    let mut line0 = 0;
    let f = read_labeling_block(&mut lines, &mut line0)?.ok_or_else(|| Error::parse(1, "empty labeling file"))?;
    for l in lines {
        line0 += 1;
        if !l?.trim().is_empty() {
            return Err(Error::parse(line0, "trailing content after labeling"));
        }
    }
    Ok(f)
}

/// Writes `(f, h1, h2)` as three labeling blocks separated by `---` lines.
pub fn write_triple<W: Write + ?Sized>(w: &mut W, f: &Labeling, h1: &Labeling, h2: &Labeling) -> Result<()> {
    write_labeling(w, f)?;
    w.write_all(b"---\n")?;
    write_labeling(w, h1)?;
    w.write_all(b"---\n")?;
    write_labeling(w, h2)
}

pub fn read_triple<R: BufRead>(r: R) -> Result<(Labeling, Labeling, Labeling)> {
    let mut lines = r.lines();
    let mut line0 = 0;
    let mut blocks = Vec::with_capacity(3);
    for k in 0..3 {
        if k > 0 {
            let sep = lines.next().ok_or_else(|| Error::parse(line0 + 1, "expected `---`"))??;
            line0 += 1;
            if sep.trim() != "---" {
                return Err(Error::parse(line0, "expected `---`"));
            }
        }
        blocks.push(read_labeling_block(&mut lines, &mut line0)?.ok_or_else(|| Error::parse(line0 + 1, "missing labeling block"))?);
    }
    let h2 = blocks.pop().unwrap();
    let h1 = blocks.pop().unwrap();
    Ok((blocks.pop().unwrap(), h1, h2))
}

/// Text header line, then packed bits (MSB first) or little-endian `u64` numerators.
pub fn write_field<W: Write + ?Sized>(w: &mut W, field: &RandomField) -> Result<()> {
    let g = &field.grid;
    writeln!(
        w,
        "{} {} {} {} {} {}",
        g.n(),
        join_coords(g.lo()),
        join_coords(g.hi()),
        g.topology().as_str(),
        field.kind().as_str(),
        field.seed
    )?;
    match &field.values {
        FieldValues::Bits(bits) => {
            let bytes: Vec<u8> = bits
                .chunks(8)
                .map(|c| c.iter().enumerate().fold(0u8, |acc, (k, &b)| acc | ((b as u8) << (7 - k))))
                .collect();
            w.write_all(&bytes)?;
        }
        FieldValues::Reals(vals) => {
            for v in vals {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn read_field<R: BufRead>(mut r: R) -> Result<RandomField> {
    let mut header = Vec::new();
    r.read_until(b'\n', &mut header)?;
    let header = std::str::from_utf8(&header).map_err(|_| Error::parse(1, "header is not UTF-8"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 6 {
        return Err(Error::parse(1, "field header needs `n lo hi topology kind seed`"));
    }
    let n: usize = toks[0].parse().map_err(|_| Error::parse(1, "bad n"))?;
    let lo = parse_coords(toks[1], 1)?;
    let hi = parse_coords(toks[2], 1)?;
    if lo.len() != n || hi.len() != n {
        return Err(Error::parse(1, "box dimension differs from n"));
    }
    let topology = Topology::parse(toks[3]).map_err(|e| Error::parse(1, e.to_string()))?;
    let kind = FieldKind::parse(toks[4]).map_err(|e| Error::parse(1, e.to_string()))?;
    let seed: u64 = toks[5].parse().map_err(|_| Error::parse(1, "bad seed"))?;
    let grid = GridBox::new(&lo, &hi, topology)?;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    let values = match kind {
        FieldKind::Bits => {
            if body.len() != grid.len().div_ceil(8) {
                return Err(Error::parse(2, format!("expected {} bytes of bits, got {}", grid.len().div_ceil(8), body.len())));
            }
            FieldValues::Bits((0..grid.len()).map(|i| body[i / 8] >> (7 - i % 8) & 1 == 1).collect())
        }
        FieldKind::Reals => {
            if body.len() != grid.len() * 8 {
                return Err(Error::parse(2, format!("expected {} bytes of reals, got {}", grid.len() * 8, body.len())));
            }
            FieldValues::Reals(body.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect())
        }
    };
    Ok(RandomField { grid, seed, values })
}

/// CSV with columns `x0..x{n-1},condition,reason`.
pub fn write_violations<W: Write>(w: W, n: usize, violations: &[Violation]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (0..n).map(|a| format!("x{a}")).collect();
    header.push("condition".into());
    header.push("reason".into());
    wr.write_record(&header).map_err(csv_err)?;
    for v in violations {
        let mut rec: Vec<String> = v.anchor.iter().map(|c| c.to_string()).collect();
        rec.push(v.tag.clone());
        rec.push(v.reason.clone());
        wr.write_record(&rec).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_violations<R: Read>(r: R) -> Result<Vec<Violation>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let k = rec.len();
        if k < 2 {
            return Err(Error::parse(i + 2, "short violation row"));
        }
        let anchor: Point = (0..k - 2)
            .map(|a| rec[a].parse::<Coord>().map_err(|e| Error::parse(i + 2, e.to_string())))
            .collect::<Result<_>>()?;
        out.push(Violation { anchor, tag: rec[k - 2].to_string(), reason: rec[k - 1].to_string() });
    }
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::parse(0, format!("{other:?}")),
    }
}

#[derive(Serialize, Deserialize)]
struct ShapeLine {
    component_id: usize,
    kind: String,
    lo: Vec<Coord>,
    hi: Vec<Coord>,
    clipped: Vec<[bool; 2]>,
}

/// One JSON object per recovered shape.
pub fn write_shapes<W: Write + ?Sized>(w: &mut W, shapes: &[Shape]) -> Result<()> {
    for s in shapes {
        json_line(
            w,
            &ShapeLine {
                component_id: s.component_id,
                kind: s.kind.as_str().to_string(),
                lo: s.rect.lo.to_vec(),
                hi: s.rect.hi.to_vec(),
                clipped: s.rect.clipped_flags(),
            },
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::gen_field;

    #[test]
    fn labeling_golden() {
        let g = GridBox::new(&[0, 0], &[1, 2], Topology::HardBoundary).unwrap();
        let cells = vec![Label::Red, Label::Blue, Label::Green, Label::Green, Label::Green, Label::Red];
        let f = Labeling::from_cells(g, &crate::toast::RBG, cells).unwrap();
        let s = labeling_to_string(&f);
        assert_eq!(s, "n=2 lo=0,0 hi=1,2 topology=hard alphabet=R,B,G\nRBG\nGGR\n");
        assert_eq!(read_labeling(s.as_bytes()).unwrap(), f);
    }

    #[test]
    fn toast_golden() {
        let g = GridBox::cube(2, 20, Topology::Torus).unwrap();
        let t = Toast::new(g, 4, vec![Rect::new(&[1, 2], &[6, 7]).unwrap()]).unwrap();
        let mut out = Vec::new();
        write_toast(&mut out, &t).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert_eq!(
            s,
            "{\"n\":2,\"q\":4,\"box_lo\":[0,0],\"box_hi\":[19,19],\"topology\":\"torus\"}\n{\"lo\":[1,2],\"hi\":[6,7]}\n"
        );
        let back = read_toast(s.as_bytes()).unwrap();
        assert_eq!(back.pieces(), t.pieces());
    }

    #[test]
    fn invalid_toast_rejected_on_read() {
        let s = "{\"n\":1,\"q\":4,\"box_lo\":[0],\"box_hi\":[30],\"topology\":\"hard\"}\n{\"lo\":[0],\"hi\":[2]}\n";
        assert!(matches!(read_toast(s.as_bytes()), Err(Error::InvalidToast(_))));
    }

    #[test]
    fn field_roundtrip() {
        let g = GridBox::new(&[0, 0], &[4, 6], Topology::HardBoundary).unwrap();
        for kind in [FieldKind::Bits, FieldKind::Reals] {
            let f = gen_field(&g, kind, 17);
            let mut out = Vec::new();
            write_field(&mut out, &f).unwrap();
            let back = read_field(out.as_slice()).unwrap();
            assert_eq!(back, f);
        }
    }

    #[test]
    fn violations_csv() {
        let v = vec![Violation { anchor: Point::from_slice(&[3, -1]), tag: "C2".into(), reason: "adjacent equal, digits".into() }];
        let mut out = Vec::new();
        write_violations(&mut out, 2, &v).unwrap();
        let s = String::from_utf8(out.clone()).unwrap();
        assert_eq!(s, "x0,x1,condition,reason\n3,-1,C2,\"adjacent equal, digits\"\n");
        assert_eq!(read_violations(out.as_slice()).unwrap(), v);
    }
}
