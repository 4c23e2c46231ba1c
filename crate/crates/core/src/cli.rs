//! The `cbir` command line: `index`, `query`, `features`, `oracle`, `gen`.
//!
//! Exit codes: 0 on success, 1 on an operational error, 2 on a usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::features::{self, EntropyScope, ORDERS};
use crate::index::{IndexDb, IndexRecord};
use crate::query;
use crate::raster::{decode_pgm, encode_pgm, GrayImage};
use crate::segment::{Connectivity, SegmentConfig};
use crate::synth::{self, ShapeKind, ShapeSpec};

#[derive(Debug, Parser)]
#[command(name = "cbir", version, about = "Shape retrieval by entropy and Hu moment invariants")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Feature database file.
    #[arg(long, global = true, default_value = "index.cbir")]
    db: PathBuf,
    /// Pixels at or above this intensity are foreground.
    #[arg(long, global = true, default_value_t = 1)]
    threshold: u8,
    #[arg(long, global = true, default_value_t = 8, value_parser = parse_connectivity)]
    connectivity: u32,
    /// Smallest region kept, in pixels.
    #[arg(long, global = true, default_value_t = 4)]
    min_area: usize,
    /// Entropy gate half-width in bits (`inf` disables the gate).
    #[arg(long, global = true, default_value_t = query::DEFAULT_TAU, value_parser = parse_tau)]
    tau: f64,
    /// Maximum number of matches printed.
    #[arg(long, global = true, default_value_t = query::DEFAULT_TOP, value_parser = parse_top)]
    top: usize,
    #[arg(long, global = true, value_enum, default_value_t = ScopeArg::Foreground)]
    entropy_scope: ScopeArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScopeArg {
    Foreground,
    Whole,
}

fn parse_tau(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 => Ok(v),
        _ => Err(format!("expected a non-negative number or inf, got {s:?}")),
    }
}

fn parse_connectivity(s: &str) -> Result<u32, String> {
    match s {
        "4" => Ok(4),
        "8" => Ok(8),
        _ => Err(format!("expected 4 or 8, got {s:?}")),
    }
}

fn parse_top(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(format!("expected a positive integer, got {s:?}")),
    }
}

/// Resolved settings shared by all commands.
#[derive(Clone, Debug, PartialEq)]
pub struct CliConfig {
    pub db_path: PathBuf,
    pub segment: SegmentConfig,
    pub tau: f64,
    pub k: usize,
    pub entropy_scope: EntropyScope,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            db_path: PathBuf::from("index.cbir"),
            segment: SegmentConfig::default(),
            tau: query::DEFAULT_TAU,
            k: query::DEFAULT_TOP,
            entropy_scope: EntropyScope::Foreground,
        }
    }
}

impl From<&ConfigArgs> for CliConfig {
    fn from(a: &ConfigArgs) -> Self {
        Self {
            db_path: a.db.clone(),
            segment: SegmentConfig {
                threshold: a.threshold,
                connectivity: Connectivity::try_from(a.connectivity).unwrap_or_default(),
                min_area: a.min_area,
            },
            tau: a.tau,
            k: a.top,
            entropy_scope: match a.entropy_scope {
                ScopeArg::Foreground => EntropyScope::Foreground,
                ScopeArg::Whole => EntropyScope::Whole,
            },
        }
    }
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Segment images and append one record per region to the database.
    Index {
        #[arg(required = true)]
        images: Vec<PathBuf>,
    },
    /// Rank indexed regions against the largest region of a template.
    Query { template: PathBuf },
    /// Print entropy, invariants and log-scaled invariants per region.
    Features { image: PathBuf },
    /// Compare trapezoidal and direct-summation raw moments of an image.
    Oracle { image: PathBuf },
    /// Render a synthetic shape (or load one) and apply transforms.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ShapeArg {
    Disk,
    Rect,
    Triangle,
    Annulus,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Shape to render.
    #[arg(long, required_unless_present = "input", conflicts_with = "input")]
    shape: Option<ShapeArg>,
    /// Transform an existing PGM instead of rendering.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 128)]
    width: usize,
    #[arg(long, default_value_t = 128)]
    height: usize,
    /// Shape center; defaults to the frame center.
    #[arg(long, allow_negative_numbers = true)]
    center_x: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    center_y: Option<f64>,
    /// Disk or outer annulus semi-axis along x.
    #[arg(long, default_value_t = 40.0)]
    rx: f64,
    /// Disk or outer annulus semi-axis along y (defaults to rx).
    #[arg(long)]
    ry: Option<f64>,
    /// Inner annulus semi-axes (default: half the outer ones).
    #[arg(long)]
    inner_rx: Option<f64>,
    #[arg(long)]
    inner_ry: Option<f64>,
    #[arg(long, default_value_t = 64.0)]
    rect_width: f64,
    #[arg(long, default_value_t = 40.0)]
    rect_height: f64,
    /// Triangle vertices relative to the center: x0,y0,x1,y1,x2,y2.
    #[arg(long, allow_hyphen_values = true, default_value = "-40,-30,45,-10,-5,35")]
    vertices: String,
    /// Foreground intensity.
    #[arg(long, default_value_t = 255, value_parser = clap::value_parser!(u8).range(1..))]
    fg: u8,
    /// Clockwise rotation in degrees; repeatable, applied first and in order.
    #[arg(long, allow_negative_numbers = true)]
    rotate: Vec<f64>,
    /// Bilinear rescale factor; repeatable, applied after rotations.
    #[arg(long)]
    scale: Vec<f64>,
    /// Integer shift dx,dy; repeatable, applied last.
    #[arg(long, allow_hyphen_values = true)]
    translate: Vec<String>,
    /// Write plain-text P2 instead of binary P5.
    #[arg(long)]
    ascii: bool,
    out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { out.write_all(rendered.as_bytes()) } else { err.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let cfg = CliConfig::from(&cli.config);
    let result = match &cli.command {
        Command::Index { images } => cmd_index(&cfg, images, out, err),
        Command::Query { template } => cmd_query(&cfg, template, out),
        Command::Features { image } => cmd_features(&cfg, image, out, err),
        Command::Oracle { image } => cmd_oracle(image, out),
        Command::Gen(args) => cmd_gen(args, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

fn read_image(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).with_context(|| format!("{}: cannot read", path.display()))?;
    decode_pgm(&bytes).with_context(|| format!("{}", path.display()))
}

fn load_db(path: &Path) -> Result<IndexDb> {
    let bytes = fs::read(path).with_context(|| format!("{}: cannot read database", path.display()))?;
    IndexDb::load(&bytes).with_context(|| format!("{}", path.display()))
}

/// Replaces `path` with `bytes` via a temporary file in the same directory.
fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("{}: cannot create temporary file", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| anyhow!("{}: {}", path.display(), e.error))?;
    Ok(())
}

fn fmt_reals(values: &[f64], sci: bool) -> String {
    values
        .iter()
        .map(|v| if sci { format!("{v:.6e}") } else { format!("{v:.6}") })
        .collect::<Vec<_>>()
        .join("\t")
}

pub fn cmd_index(cfg: &CliConfig, images: &[PathBuf], out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let mut db = if cfg.db_path.exists() { load_db(&cfg.db_path)? } else { IndexDb::new() };
    let mut summary = Vec::new();
    for path in images {
        let img = read_image(path)?;
        let regions = crate::region_features(&img, &cfg.segment, cfg.entropy_scope)
            .with_context(|| format!("{}", path.display()))?;
        if regions.is_empty() {
            writeln!(err, "warning: {}: no regions found", path.display())?;
        }
        let base = path
            .file_name()
            .ok_or_else(|| anyhow!("{}: not a file path", path.display()))?
            .to_string_lossy();
        for (i, (region, f)) in regions.iter().enumerate() {
            let rec = IndexRecord::new(format!("{base}#{i}"), path.display().to_string(), f);
            db.add(rec).with_context(|| format!("{}", path.display()))?;
            summary.push(format!(
                "added\t{base}#{i}\t{}\t{:.6}\t{}",
                region.area(),
                f.entropy,
                fmt_reals(&f.psi, false)
            ));
        }
    }
    write_atomically(&cfg.db_path, &db.save())?;
    for line in summary {
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn cmd_query(cfg: &CliConfig, template: &Path, out: &mut dyn Write) -> Result<()> {
    let db = load_db(&cfg.db_path)?;
    let img = read_image(template)?;
    let (_, features) = crate::largest_region_features(&img, &cfg.segment, cfg.entropy_scope)
        .with_context(|| format!("{}", template.display()))?
        .ok_or_else(|| anyhow!("{}: no region found in template", template.display()))?;
    for (rank, r) in query::query(&db, &features, cfg.tau, cfg.k).iter().enumerate() {
        writeln!(out, "{}\t{}\t{:.6}\t{:.6}\t{}", rank + 1, r.id, r.distance, r.entropy_gap, r.source)?;
    }
    Ok(())
}

pub fn cmd_features(cfg: &CliConfig, image: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let img = read_image(image)?;
    let regions = crate::region_features(&img, &cfg.segment, cfg.entropy_scope)
        .with_context(|| format!("{}", image.display()))?;
    if regions.is_empty() {
        writeln!(err, "warning: {}: no regions found", image.display())?;
        return Ok(());
    }
    let names = |p: &str| (1..=7).map(|i| format!("{p}{i}")).collect::<Vec<_>>().join("\t");
    writeln!(out, "# region\tarea\tentropy\t{}\t{}", names("phi"), names("psi"))?;
    for (r, f) in &regions {
        writeln!(
            out,
            "{}\t{}\t{:.6}\t{}\t{}",
            r.label(),
            r.area(),
            f.entropy,
            fmt_reals(&f.phi, true),
            fmt_reals(&f.psi, false)
        )?;
    }
    Ok(())
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn cmd_oracle(image: &Path, out: &mut dyn Write) -> Result<()> {
    let img = read_image(image)?;
    let trap = features::raw_moments_trap(&img).with_context(|| format!("{}", image.display()))?;
    let sum = features::raw_moments_sum(&img).with_context(|| format!("{}", image.display()))?;
    writeln!(out, "# moment\ttrapezoidal\tsummation\trel_gap")?;
    let mut worst = 0.0f64;
    for &(p, q) in &ORDERS {
        let (a, b) = (trap.m[(p, q)], sum.m[(p, q)]);
        let gap = relative_gap(a, b);
        worst = worst.max(gap);
        writeln!(out, "m{p}{q}\t{a:.6}\t{b:.6}\t{gap:.6e}")?;
    }
    writeln!(out, "max_rel_gap\t{worst:.6e}")?;
    Ok(())
}

fn parse_pair(s: &str) -> Result<(isize, isize)> {
    let (a, b) = s.split_once(',').ok_or_else(|| anyhow!("expected dx,dy, got {s:?}"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn build_image(args: &GenArgs) -> Result<GrayImage> {
    if let Some(path) = &args.input {
        return read_image(path);
    }
    let rx = args.rx;
    let ry = args.ry.unwrap_or(rx);
    let kind = match args.shape.expect("clap requires --shape without --input") {
        ShapeArg::Disk => ShapeKind::Disk { rx, ry },
        ShapeArg::Rect => ShapeKind::Rect {
            width: args.rect_width,
            height: args.rect_height,
        },
        ShapeArg::Annulus => ShapeKind::Annulus {
            outer: (rx, ry),
            inner: (args.inner_rx.unwrap_or(rx / 2.0), args.inner_ry.unwrap_or(ry / 2.0)),
        },
        ShapeArg::Triangle => {
            let v: Vec<f64> = args
                .vertices
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .with_context(|| format!("bad --vertices {:?}", args.vertices))?;
            if v.len() != 6 {
                bail!("--vertices needs 6 numbers, got {}", v.len());
            }
            ShapeKind::Triangle {
                vertices: [(v[0], v[1]), (v[2], v[3]), (v[4], v[5])],
            }
        }
    };
    let mut spec = ShapeSpec::centered(kind, (args.width, args.height), args.fg);
    if let Some(x) = args.center_x {
        spec.center.0 = x;
    }
    if let Some(y) = args.center_y {
        spec.center.1 = y;
    }
    Ok(synth::render(&spec)?)
}

fn cmd_gen(args: &GenArgs, out: &mut dyn Write) -> Result<()> {
    let mut img = build_image(args)?;
    for &deg in &args.rotate {
        img = synth::rotate(&img, deg);
    }
    for &s in &args.scale {
        img = synth::scale(&img, s)?;
    }
    for t in &args.translate {
        let (dx, dy) = parse_pair(t)?;
        img = synth::translate(&img, dx, dy)?;
    }
    fs::write(&args.out, encode_pgm(&img, !args.ascii)).with_context(|| format!("{}: cannot write", args.out.display()))?;
    writeln!(out, "wrote\t{}\t{}\t{}", args.out.display(), img.width(), img.height())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_values() {
        let cli = Cli::try_parse_from(["cbir", "oracle", "x.pgm"]).unwrap();
        assert_eq!(CliConfig::from(&cli.config), CliConfig::default());
        let cfg = CliConfig::default();
        assert_eq!(cfg.segment.threshold, 1);
        assert_eq!(cfg.segment.connectivity, Connectivity::Eight);
        assert_eq!(cfg.segment.min_area, 4);
        assert_eq!((cfg.tau, cfg.k), (0.5, 10));
    }

    #[test]
    fn flags_override_defaults() {
        let cli = Cli::try_parse_from([
            "cbir", "query", "t.pgm", "--db", "a.db", "--threshold", "9", "--connectivity", "4", "--min-area", "1",
            "--tau", "inf", "--top", "3", "--entropy-scope", "whole",
        ])
        .unwrap();
        let cfg = CliConfig::from(&cli.config);
        assert_eq!(cfg.db_path, PathBuf::from("a.db"));
        assert_eq!(cfg.segment, SegmentConfig { threshold: 9, connectivity: Connectivity::Four, min_area: 1 });
        assert!(cfg.tau.is_infinite());
        assert_eq!(cfg.k, 3);
        assert_eq!(cfg.entropy_scope, EntropyScope::Whole);
    }

    #[test]
    fn usage_errors_exit_2() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        for args in [
            &["cbir"][..],
            &["cbir", "query"],
            &["cbir", "--connectivity", "6", "oracle", "x"],
            &["cbir", "--tau", "-1", "oracle", "x"],
            &["cbir", "--top", "0", "oracle", "x"],
            &["cbir", "index"],
            &["cbir", "gen", "out.pgm"],
        ] {
            assert_eq!(run(args.iter().copied(), &mut o, &mut e), 2, "{args:?}");
        }
    }
}
