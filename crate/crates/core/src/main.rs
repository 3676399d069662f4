use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rotbox::boxcore::{quad_to_five, DEFAULT_RECT_TOLERANCE};
use rotbox::evalkit::{self, DEFAULT_MATCH_IOU};
use rotbox::fmt::sig6;
use rotbox::landscape::{run_sweep, SweepSpec};
use rotbox::losses::{grad_l1_5p, grad_l1_8p, DEFAULT_BETA};
use rotbox::{
    encode_five, encode_quad, grad_lmr_5p, grad_lmr_8p, l1_5p, l1_8p, lmr_5p, lmr_5p_unnormalized,
    lmr_8p, order_vertices, rotated_iou, rotated_nms, to_long_side_convention, Detection, Exec,
    FiveParamBox, PenaltyConfig, Point, RotatedBox,
};

#[derive(Parser)]
#[command(
    name = "rotbox",
    version,
    about = "Rotated bounding-box geometry, losses and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// IoU of two boxes ("cx cy w h theta" or eight corner coordinates)
    Iou {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
    },
    /// Evaluate a regression loss between a prediction and a target
    Loss {
        #[arg(long, value_enum)]
        kind: LossArg,
        #[arg(long, allow_hyphen_values = true)]
        pred: String,
        #[arg(long, allow_hyphen_values = true)]
        gt: String,
        /// Anchor box; required by every kind except lmr5p-raw
        #[arg(long, allow_hyphen_values = true)]
        anchor: Option<String>,
        #[arg(long, value_enum, default_value_t = PenaltyArg::Abs)]
        penalty: PenaltyArg,
        #[arg(long, default_value_t = DEFAULT_BETA)]
        beta: f64,
        /// Also print the gradient with respect to the prediction
        #[arg(long)]
        grad: bool,
    },
    /// Order four corners clockwise from the leftmost
    Order {
        #[arg(long, allow_hyphen_values = true)]
        points: String,
    },
    /// Convert between box parameterizations
    Convert {
        #[arg(long = "box", allow_hyphen_values = true)]
        input: String,
        #[arg(long, value_enum)]
        to: ConvertTarget,
        #[arg(long, default_value_t = DEFAULT_RECT_TOLERANCE)]
        tolerance: f64,
    },
    /// Rotated NMS over a detection file ("category score x1 y1 ... x4 y4")
    Nms {
        /// Detection file, or "-" for standard input
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.3)]
        threshold: f64,
    },
    /// Per-category AP and mAP of DOTA-format detections
    Eval {
        /// Directory of per-image ground-truth label files
        #[arg(long)]
        gt_dir: PathBuf,
        /// Directory of per-category detection files
        #[arg(long)]
        det_dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MATCH_IOU)]
        iou: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep described by a JSON manifest
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Evaluate samples on the calling thread only
        #[arg(long)]
        sequential: bool,
    },
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum LossArg {
    #[value(name = "l1-5p")]
    L15p,
    #[value(name = "lmr5p")]
    Lmr5p,
    #[value(name = "lmr5p-raw")]
    Lmr5pRaw,
    #[value(name = "l1-8p")]
    L18p,
    #[value(name = "lmr8p")]
    Lmr8p,
}

#[derive(Clone, Copy, ValueEnum)]
enum PenaltyArg {
    Abs,
    SmoothL1,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConvertTarget {
    Quad,
    Five,
    LongSide,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<rotbox::Error> for Failure {
    fn from(e: rotbox::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn io_err(path: &Path, e: io::Error) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(out) => {
            let mut stdout = io::stdout().lock();
            let _ = stdout.write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Result<String, Failure> {
    match cmd {
        Command::Iou { a, b } => {
            let (a, b): (RotatedBox, RotatedBox) = (a.parse()?, b.parse()?);
            Ok(format!("{}\n", sig6(rotated_iou(&a, &b)?)))
        }
        Command::Loss {
            kind,
            pred,
            gt,
            anchor,
            penalty,
            beta,
            grad,
        } => loss(kind, &pred, &gt, anchor.as_deref(), penalty, beta, grad),
        Command::Order { points } => {
            let v = parse_eight(&points)?;
            let q = order_vertices(v)?;
            Ok(format!("{}\n", join(&q.to_array())))
        }
        Command::Convert {
            input,
            to,
            tolerance,
        } => {
            let b: RotatedBox = input.parse()?;
            let five = match b {
                RotatedBox::Five(f) => f,
                RotatedBox::Quad(q) => quad_to_five(&q, tolerance)?,
            };
            Ok(match to {
                ConvertTarget::Quad => format!("{}\n", join(&b.to_quad()?.to_array())),
                ConvertTarget::Five => format!("{}\n", join(&five.to_array())),
                ConvertTarget::LongSide => {
                    let l = to_long_side_convention(&five);
                    format!("{}\n", join(&[l.cx, l.cy, l.long, l.short, l.theta_deg]))
                }
            })
        }
        Command::Nms { input, threshold } => {
            if !(0.0..=1.0).contains(&threshold) {
                return Err(Failure::Usage(format!(
                    "--threshold must be in [0, 1], got {threshold}"
                )));
            }
            let text = read_input(&input)?;
            let mut dets = Vec::new();
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let d: Detection = line
                    .parse()
                    .map_err(|e: rotbox::Error| Failure::Data(format!("line {}: {e}", i + 1)))?;
                dets.push(d);
            }
            let mut out = String::new();
            for d in rotated_nms(&dets, threshold)? {
                out.push_str(&d.to_line()?);
                out.push('\n');
            }
            Ok(out)
        }
        Command::Eval {
            gt_dir,
            det_dir,
            iou,
            out,
        } => {
            if !(0.0..=1.0).contains(&iou) {
                return Err(Failure::Usage(format!(
                    "--iou must be in [0, 1], got {iou}"
                )));
            }
            let mut gts = BTreeMap::new();
            for (stem, text) in read_txt_dir(&gt_dir)? {
                let recs = evalkit::parse_dota_annotations(&text)
                    .map_err(|e| Failure::Data(format!("{stem}: {e}")))?;
                gts.insert(stem, recs);
            }
            let mut dets = BTreeMap::new();
            for (stem, text) in read_txt_dir(&det_dir)? {
                let category = stem.strip_prefix("Task1_").unwrap_or(&stem).to_string();
                let d = evalkit::parse_category_detections(&text, &category)
                    .map_err(|e| Failure::Data(format!("{stem}: {e}")))?;
                dets.insert(category, d);
            }
            let report = evalkit::evaluate(&gts, &dets, iou, Exec::default())?;
            emit(report.to_csv(), out.as_deref())
        }
        Command::Sweep {
            spec,
            out,
            sequential,
        } => {
            let text = fs::read_to_string(&spec).map_err(|e| io_err(&spec, e))?;
            let spec = SweepSpec::from_json(&text)?;
            let exec = if sequential {
                Exec::Sequential
            } else {
                Exec::default()
            };
            emit(run_sweep(&spec, exec)?, out.as_deref())
        }
    }
}

fn loss(
    kind: LossArg,
    pred: &str,
    gt: &str,
    anchor: Option<&str>,
    penalty: PenaltyArg,
    beta: f64,
    grad: bool,
) -> Result<String, Failure> {
    let cfg = match penalty {
        PenaltyArg::Abs => PenaltyConfig::absolute(),
        PenaltyArg::SmoothL1 => {
            PenaltyConfig::smooth_l1(beta).map_err(|e| Failure::Usage(e.to_string()))?
        }
    };
    let pred: RotatedBox = pred.parse()?;
    let gt: RotatedBox = gt.parse()?;
    let as_five = |b: &RotatedBox| -> Result<FiveParamBox, Failure> {
        Ok(match b {
            RotatedBox::Five(f) => *f,
            RotatedBox::Quad(q) => quad_to_five(q, DEFAULT_RECT_TOLERANCE)?,
        })
    };

    if kind == LossArg::Lmr5pRaw {
        if grad {
            return Err(Failure::Usage(
                "--grad is not available for lmr5p-raw".into(),
            ));
        }
        let l = lmr_5p_unnormalized(&as_five(&pred)?, &as_five(&gt)?);
        return Ok(format!("{} {}\n", sig6(l.value), l.branch));
    }
    let anchor: FiveParamBox = anchor
        .ok_or_else(|| Failure::Usage("--anchor is required for this loss kind".to_string()))?
        .parse()?;

    let (line, gradient): (String, Vec<f64>) = match kind {
        LossArg::L15p | LossArg::Lmr5p => {
            let p = encode_five(&as_five(&pred)?, &anchor);
            let g = encode_five(&as_five(&gt)?, &anchor);
            if kind == LossArg::L15p {
                (sig6(l1_5p(&p, &g, cfg)?), grad_l1_5p(&p, &g, cfg)?.to_vec())
            } else {
                let l = lmr_5p(&p, &g, cfg)?;
                (
                    format!("{} {}", sig6(l.value), l.branch),
                    grad_lmr_5p(&p, &g, cfg)?.to_vec(),
                )
            }
        }
        LossArg::L18p | LossArg::Lmr8p => {
            let p = encode_quad(&pred.to_quad()?, &anchor)?;
            let g = encode_quad(&gt.to_quad()?, &anchor)?;
            if kind == LossArg::L18p {
                (sig6(l1_8p(&p, &g, cfg)?), grad_l1_8p(&p, &g, cfg)?.to_vec())
            } else {
                let l = lmr_8p(&p, &g, cfg)?;
                (
                    format!("{} {}", sig6(l.value), l.branch),
                    grad_lmr_8p(&p, &g, cfg)?.to_vec(),
                )
            }
        }
        LossArg::Lmr5pRaw => unreachable!(),
    };
    let mut out = format!("{line}\n");
    if grad {
        let g: Vec<String> = gradient.iter().map(|v| sig6(*v)).collect();
        out.push_str(&g.join(","));
        out.push('\n');
    }
    Ok(out)
}

fn parse_eight(s: &str) -> Result<[Point; 4], Failure> {
    let v = s
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::Data(format!("bad coordinate in {s:?}: {e}")))?;
    if v.len() != 8 {
        return Err(Failure::Data(format!(
            "expected 8 numbers, got {}",
            v.len()
        )));
    }
    Ok([
        Point::new(v[0], v[1]),
        Point::new(v[2], v[3]),
        Point::new(v[4], v[5]),
        Point::new(v[6], v[7]),
    ])
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| sig6(*x)).collect::<Vec<_>>().join(" ")
}

fn read_input(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| io_err(path, e))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| io_err(path, e))
    }
}

fn read_txt_dir(dir: &Path) -> Result<Vec<(String, String)>, Failure> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        out.push((
            stem,
            fs::read_to_string(&path).map_err(|e| io_err(&path, e))?,
        ));
    }
    out.sort();
    Ok(out)
}

fn emit(text: String, out: Option<&Path>) -> Result<String, Failure> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| io_err(path, e))?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}
