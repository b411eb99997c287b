use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use piv_core::synthgen::ImagePair;
use piv_core::{make_pair, rmse, BoundaryMode, GenParams};
use rand::RngCore;

use crate::args::{parse_list, BenchArgs, FlowKind, Method, MethodArgs, SynthArgs};
use crate::error::{usage, CliError};
use crate::estimate::Estimator;
use crate::files::{create_dir, load_flo, load_pgm};
use crate::report;
use crate::synth::{as_stored, pair_rng, random_uniform, synth_pair};
use crate::table::{num, write_csv};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub case: String,
    pub method: Method,
    pub pair: usize,
    pub rmse: f64,
    /// Wall-clock seconds of the estimator call alone.
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSummary {
    pub case: String,
    pub method: Method,
    pub pairs: usize,
    pub mean_rmse: f64,
    pub mean_time: f64,
}

/// One synthetic pair of the `uniform` or `random` case, in stored form.
/// Uniform displacements have magnitude drawn from `[0, max_disp]`.
pub fn synthetic_case(case: &str, synth: &SynthArgs, index: usize) -> Result<ImagePair, CliError> {
    let kind = match case {
        "uniform" => {
            let mut rng = pair_rng(synth.seed ^ 0x756e_6966, index);
            random_uniform(&mut rng, synth.max_disp)
        }
        "random" => FlowKind::Random,
        other => return usage(format!("unknown case `{other}`; expected uniform or random")),
    };
    Ok(as_stored(&synth_pair(kind, synth, index)?))
}

/// Estimate one stored pair with `tuning.boundary` applied to the images.
pub fn measure(pair: &ImagePair, estimator: &Estimator, boundary: BoundaryMode) -> Result<(f64, f64), CliError> {
    let (a, b) = (
        pair.image1.clone().with_boundary(boundary),
        pair.image2.clone().with_boundary(boundary),
    );
    let start = Instant::now();
    let pred = estimator.estimate(&a, &b)?;
    let time = start.elapsed().as_secs_f64();
    Ok((rmse(&pred, &pair.truth)?, time))
}

/// A suite entry: a stored triple, or a bare flow snapshot to be rendered.
enum SuiteItem {
    Triple(PathBuf),
    Flow(PathBuf),
}

/// `*_img1.pgm` files with their `_img2.pgm` and `_flow.flo` partners, plus
/// every other `.flo` file, sorted by case name.
fn suite_items(dir: &Path) -> Result<Vec<(String, SuiteItem)>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut names = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.is_file() {
            names.push(
                path.file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
            );
        }
    }
    names.sort();
    let mut items = Vec::new();
    for name in &names {
        if let Some(stem) = name.strip_suffix("_img1.pgm") {
            items.push((stem.to_string(), SuiteItem::Triple(dir.join(stem))));
        } else if let Some(stem) = name.strip_suffix(".flo") {
            let partner = stem.strip_suffix("_flow").map(|s| format!("{s}_img1.pgm"));
            if partner.is_none_or(|p| !names.contains(&p)) {
                items.push((stem.to_string(), SuiteItem::Flow(dir.join(name))));
            }
        }
    }
    if items.is_empty() {
        return usage(format!("{} holds no *_img1.pgm or .flo files", dir.display()));
    }
    items.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(items)
}

fn load_suite_item(item: &SuiteItem, seed: u64, index: usize) -> Result<ImagePair, CliError> {
    match item {
        SuiteItem::Triple(base) => {
            let with = |suffix: &str| PathBuf::from(format!("{}{suffix}", base.display()));
            Ok(ImagePair {
                image1: load_pgm(&with("_img1.pgm"))?,
                image2: load_pgm(&with("_img2.pgm"))?,
                truth: load_flo(&with("_flow.flo"))?,
            })
        }
        SuiteItem::Flow(path) => {
            let flow = load_flo(path)?;
            let particle_seed = pair_rng(seed, index).next_u64();
            let pair = make_pair(&GenParams::default().with_seed(particle_seed), &flow)
                .map_err(|e| CliError::file(path, e))?;
            Ok(as_stored(&pair))
        }
    }
}

pub fn summarize(rows: &[BenchRow]) -> Vec<BenchSummary> {
    let mut out: Vec<BenchSummary> = Vec::new();
    for r in rows {
        let i = match out.iter().position(|s| s.case == r.case && s.method == r.method) {
            Some(i) => i,
            None => {
                out.push(BenchSummary {
                    case: r.case.clone(),
                    method: r.method,
                    pairs: 0,
                    mean_rmse: 0.0,
                    mean_time: 0.0,
                });
                out.len() - 1
            }
        };
        let s = &mut out[i];
        s.pairs += 1;
        s.mean_rmse += r.rmse;
        s.mean_time += r.time;
    }
    for s in &mut out {
        s.mean_rmse /= s.pairs as f64;
        s.mean_time /= s.pairs as f64;
    }
    out
}

fn methods(list: &str, tuning: &MethodArgs) -> Result<Vec<(Method, Estimator)>, CliError> {
    list.split(',')
        .map(|m| {
            let method = match m.trim() {
                "cc" => Method::Cc,
                "hs" => Method::Hs,
                other => return usage(format!("unknown method `{other}`")),
            };
            Ok((method, Estimator::from_args(method, tuning)?))
        })
        .collect()
}

pub fn run(args: &BenchArgs, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let estimators = methods(&args.methods, &args.tuning)?;
    let boundary = args.tuning.boundary.into();
    let mut rows = Vec::new();
    let mut record = |case: &str, pair: usize, data: &ImagePair| -> Result<(), CliError> {
        for (method, est) in &estimators {
            let (rmse, time) = measure(data, est, boundary)?;
            rows.push(BenchRow {
                case: case.to_string(),
                method: *method,
                pair,
                rmse,
                time,
            });
        }
        Ok(())
    };
    match (&args.suite, args.synthetic) {
        (Some(dir), _) => {
            for (i, (name, item)) in suite_items(dir)?.iter().enumerate() {
                record(name, 0, &load_suite_item(item, args.synth.seed, i)?)?;
            }
        }
        (None, true) => {
            let cases: Vec<String> = parse_list(&args.cases).map_err(CliError::Usage)?;
            for case in &cases {
                for i in 0..args.n {
                    record(case, i, &synthetic_case(case, &args.synth, i)?)?;
                }
            }
        }
        (None, false) => return usage("give --synthetic or --suite DIR"),
    }
    let summary = summarize(&rows);
    for s in &summary {
        report(
            out,
            format_args!(
                "{} {} pairs={} rmse={:.4} time={:.3}s",
                s.case,
                s.method.name(),
                s.pairs,
                s.mean_rmse,
                s.mean_time
            ),
        )?;
    }
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_csv(
            &dir.join("bench_rows.csv"),
            &["case", "method", "pair", "rmse", "time"],
            rows.iter().map(|r| {
                vec![
                    r.case.clone(),
                    r.method.name().into(),
                    r.pair.to_string(),
                    num(r.rmse),
                    num(r.time),
                ]
            }),
        )?;
        write_csv(
            &dir.join("bench_summary.csv"),
            &["case", "method", "pairs", "mean_rmse", "mean_time"],
            summary.iter().map(|s| {
                vec![
                    s.case.clone(),
                    s.method.name().into(),
                    s.pairs.to_string(),
                    num(s.mean_rmse),
                    num(s.mean_time),
                ]
            }),
        )?;
    }
    Ok(())
}
