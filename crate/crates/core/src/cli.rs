//! Command-line front end. `run` returns the process exit code.

use crate::analysis::{containment_stats, extract_red_structure, hex_connectivity_check};
use crate::coloring::{assemble_crt, assemble_crt_plus};
use crate::construct::{
    extract_safe_squares, gen_field, greedy_toast, quasi_tile, Annulus, ComputableAction, FieldKind, Scales,
};
use crate::error::{Error, Result};
use crate::grid::{Coord, GridBox, Topology};
use crate::io;
use crate::lcl::{crt_plus_verify, symmetry_orbit, verify_labeling, LclProblem, RtDecider, WindowAssignment};
use crate::toast::{coverage, label_from_toast, Labeling, Toast};
use clap::{Args, Parser, Subcommand};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "toastlab", version, about = "Toast constructions and LCL verification on Z^n grids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct BoxArgs {
    /// Box as `lo..hi[,lo..hi...]`, one range per axis.
    #[arg(long = "box", value_name = "RANGES")]
    pub bounds: Option<String>,
    #[arg(long, default_value = "hard")]
    pub topology: String,
    /// Dimension; checked against the box when both are given.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a seeded random field.
    GenField {
        #[command(flatten)]
        grid: BoxArgs,
        #[arg(long, default_value = "bits")]
        kind: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract safe squares from a bit field.
    SafeSquares {
        /// Read the field from a file instead of generating one.
        #[arg(long)]
        field: Option<PathBuf>,
        #[command(flatten)]
        grid: BoxArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        q: u32,
        #[arg(long, default_value = "q")]
        annulus: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Greedy toast over the computable action.
    Greedy {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        q: u32,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        big_gaps: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multi-scale quasi-tiling on a torus.
    QuasiTile {
        #[command(flatten)]
        grid: BoxArgs,
        #[arg(long)]
        q: u32,
        #[arg(long)]
        scales: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-scale coverage CSV.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Turn a toast into an RT, CRT or CRT+ labeling.
    Label {
        #[arg(long)]
        toast: PathBuf,
        /// One of `rt`, `crt`, `crtplus`, optionally with `:<q>`.
        #[arg(long, default_value = "crt")]
        problem: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a labeling against an LCL problem; violations go out as CSV.
    Verify {
        #[arg(long)]
        labeling: PathBuf,
        #[arg(long)]
        problem: String,
        #[arg(long, default_value_t = 1000)]
        max_violations: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover and classify the rectangles of an R/B/G labeling.
    Structure {
        #[arg(long)]
        labeling: PathBuf,
        #[arg(long)]
        q: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Statistics of a toast as CSV.
    Stats {
        #[arg(long)]
        toast: PathBuf,
        #[arg(long)]
        coverage: bool,
        #[arg(long)]
        containment: bool,
        #[arg(long)]
        hex: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the symmetry orbit of a window labeling.
    Orbit {
        #[arg(long)]
        window: PathBuf,
        #[arg(long)]
        q: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `lo..hi[,lo..hi...]`.
pub fn parse_box(s: &str, topology: Topology) -> Result<GridBox> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for part in s.split(',') {
        let (a, b) = part
            .split_once("..")
            .ok_or_else(|| Error::usage(format!("box range `{part}` is not `lo..hi`")))?;
        let p = |t: &str| t.trim().parse::<Coord>().map_err(|e| Error::usage(format!("bad box bound `{t}`: {e}")));
        lo.push(p(a)?);
        hi.push(p(b)?);
    }
    GridBox::new(&lo, &hi, topology)
}

impl BoxArgs {
    fn resolve(&self) -> Result<GridBox> {
        let topology = Topology::parse(&self.topology)?;
        let s = self.bounds.as_deref().ok_or_else(|| Error::usage("missing --box"))?;
        let g = parse_box(s, topology)?;
        if let Some(n) = self.n {
            if n != g.n() {
                return Err(Error::DimensionMismatch { expected: n, got: g.n() });
            }
        }
        Ok(g)
    }
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| Error::usage("missing --seed: randomized commands take an explicit seed"))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn with_output(out: &Option<PathBuf>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

/// Parses `rt`, `crt`, `crtplus` with an optional `:<q>` that must agree with the toast.
fn label_kind(token: &str, toast_q: u32) -> Result<(String, u32)> {
    let (name, q) = match token.split_once(':') {
        Some((a, b)) => (a, b.parse::<u32>().map_err(|e| Error::usage(format!("bad q in `{token}`: {e}")))?),
        None => (token, toast_q),
    };
    if !matches!(name, "rt" | "crt" | "crtplus") {
        return Err(Error::usage(format!("label kind must be rt, crt or crtplus, got `{name}`")));
    }
    Ok((name.to_string(), q))
}

pub fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::GenField { grid, kind, seed, out } => {
            let seed = require_seed(seed)?;
            let g = grid.resolve()?;
            let field = gen_field(&g, FieldKind::parse(&kind)?, seed);
            with_output(&out, |w| io::write_field(w, &field))?;
        }
        Command::SafeSquares { field, grid, seed, q, annulus, out } => {
            let annulus = Annulus::parse(&annulus)?;
            let field = match field {
                Some(p) => io::read_field(open(&p)?)?,
                None => {
                    let seed = require_seed(seed)?;
                    gen_field(&grid.resolve()?, FieldKind::Bits, seed)
                }
            };
            let t = extract_safe_squares(&field, q, annulus)?;
            with_output(&out, |w| io::write_toast(w, &t))?;
        }
        Command::Greedy { n, q, count, big_gaps, out } => {
            let t = greedy_toast(&ComputableAction::new(n)?, q, count, big_gaps)?;
            with_output(&out, |w| io::write_toast(w, &t))?;
        }
        Command::QuasiTile { grid, q, scales, seed, out, report } => {
            let seed = require_seed(seed)?;
            let g = grid.resolve()?;
            let sides = Scales::parse(&scales)?.resolve(q)?;
            let qt = quasi_tile(&g, q, &sides, seed)?;
            with_output(&out, |w| io::write_toast(w, &qt.toast))?;
            if let Some(path) = report {
                let mut wr = csv::Writer::from_path(path).map_err(|e| Error::config(e.to_string()))?;
                wr.write_record(["scale", "side", "squares", "retained", "scale_coverage", "cumulative", "cumulative_decimal"])
                    .map_err(|e| Error::config(e.to_string()))?;
                for r in &qt.report {
                    wr.write_record([
                        r.scale.to_string(),
                        r.side.to_string(),
                        r.squares.to_string(),
                        r.retained.to_string(),
                        r.scale_coverage.to_string(),
                        r.cumulative.to_string(),
                        format!("{:.6}", r.cumulative.value()),
                    ])
                    .map_err(|e| Error::config(e.to_string()))?;
                }
                wr.flush()?;
            }
        }
        Command::Label { toast, problem, out } => {
            let t = io::read_toast(open(&toast)?)?;
            let (kind, q) = label_kind(&problem, t.q())?;
            match kind.as_str() {
                "rt" => {
                    let f = label_from_toast(&t)?;
                    with_output(&out, |w| io::write_labeling(w, &f))?;
                }
                "crt" => {
                    let f = assemble_crt(&t, q)?;
                    with_output(&out, |w| io::write_labeling(w, &f))?;
                }
                _ => {
                    let (f, h1, h2) = assemble_crt_plus(&t, q)?;
                    with_output(&out, |w| io::write_triple(w, &f, &h1, &h2))?;
                }
            }
        }
        Command::Verify { labeling, problem, max_violations, out } => {
            let p = LclProblem::parse(&problem)?;
            let (n, mut v) = match p {
                LclProblem::CrtPlus(q) => {
                    let (f, h1, h2) = io::read_triple(open(&labeling)?)?;
                    (f.grid.n(), crt_plus_verify(&f, &h1, &h2, q)?)
                }
                _ => {
                    let f = io::read_labeling(open(&labeling)?)?;
                    (f.grid.n(), verify_labeling(&p, &f)?)
                }
            };
            let total = v.len();
            v.truncate(max_violations);
            with_output(&out, |w| io::write_violations(w, n, &v))?;
            if total > 0 {
                eprintln!("{total} violation(s); {} reported", v.len());
                return Ok(EXIT_VIOLATIONS);
            }
        }
        Command::Structure { labeling, q, out } => {
            let f = io::read_labeling(open(&labeling)?)?;
            let shapes = extract_red_structure(&f, q)?;
            with_output(&out, |w| io::write_shapes(w, &shapes))?;
        }
        Command::Stats { toast, coverage: cov, containment, hex, out } => {
            let t = io::read_toast(open(&toast)?)?;
            let rows = stats_rows(&t, cov || !(containment || hex), containment, hex)?;
            with_output(&out, |w| {
                let mut wr = csv::Writer::from_writer(w);
                let e = |e: csv::Error| Error::config(e.to_string());
                wr.write_record(["statistic", "value"]).map_err(e)?;
                for (k, v) in &rows {
                    wr.write_record([k, v]).map_err(e)?;
                }
                wr.flush()?;
                Ok(())
            })?;
        }
        Command::Orbit { window, q, out } => {
            let f = io::read_labeling(open(&window)?)?;
            let side = 2 * q as usize + 1;
            let n = f.grid.n();
            if (0..n).any(|a| f.grid.extent(a) as usize != side) {
                return Err(Error::usage(format!("window must have side 2q+1 = {side} on every axis")));
            }
            let w0 = WindowAssignment::new(n, q, f.cells.clone())?;
            let orbit = symmetry_orbit(&w0);
            let member = RtDecider::shared(q).and_then(|d| d.decide(&w0)).ok();
            let g = GridBox::cube(n, side as Coord, Topology::HardBoundary)?;
            with_output(&out, |w| {
                writeln!(w, "# orbit_size={} rt_member={}", orbit.len(), member.map_or("n/a".into(), |b| b.to_string()))?;
                for (k, o) in orbit.iter().enumerate() {
                    if k > 0 {
                        w.write_all(b"---\n")?;
                    }
                    io::write_labeling(w, &Labeling::from_cells(g.clone(), &f.alphabet, o.values.clone())?)?;
                }
                Ok(())
            })?;
        }
    }
    Ok(EXIT_OK)
}

fn stats_rows(t: &Toast, cov: bool, containment: bool, hex: bool) -> Result<Vec<(String, String)>> {
    let mut rows = vec![("pieces".to_string(), t.len().to_string())];
    if cov {
        let c = coverage(t)?;
        rows.push(("coverage".into(), c.to_string()));
        rows.push(("coverage_decimal".into(), format!("{:.6}", c.value())));
    }
    if containment {
        let s = containment_stats(t)?;
        rows.push(("containment_mean".into(), format!("{:.6}", s.mean)));
        rows.push(("containment_max".into(), s.max.to_string()));
        for (k, c) in s.histogram.iter().enumerate() {
            rows.push((format!("containment_{k}"), c.to_string()));
        }
    }
    if hex {
        let h = hex_connectivity_check(t)?;
        rows.push(("hex_far_cells".into(), h.far_cells.to_string()));
        rows.push(("hex_connected".into(), h.connected.to_string()));
    }
    Ok(rows)
}

/// Parses arguments and runs; errors print to stderr and map to exit code 2.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
