use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use piv_core::{
    estimate_hs, estimate_widim, rmse, HsConfig, MultipassConfig, ScalarField2D, VectorField2D, WindowSpec,
};

use crate::args::{parse_list, EstimateArgs, Method, MethodArgs};
use crate::error::{usage, CliError};
use crate::files::{load_flo, load_pgm, save_flo};
use crate::report;

/// A configured estimator.
#[derive(Debug, Clone, PartialEq)]
pub enum Estimator {
    Cc(MultipassConfig),
    Hs(HsConfig),
}

impl Estimator {
    pub fn from_args(method: Method, a: &MethodArgs) -> Result<Self, CliError> {
        Ok(match method {
            Method::Cc => Estimator::Cc(cc_config(a)?),
            Method::Hs => {
                let mut cfg = HsConfig::default();
                cfg.lambda = a.lambda.unwrap_or(cfg.lambda);
                cfg.levels = a.levels.unwrap_or(cfg.levels);
                cfg.iters_per_level = a.iters.unwrap_or(cfg.iters_per_level);
                cfg.warps_per_level = a.warps.unwrap_or(cfg.warps_per_level);
                if let Some(r) = a.regularizer {
                    cfg.regularizer = r.into();
                }
                cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
                Estimator::Hs(cfg)
            }
        })
    }

    pub fn estimate(&self, img1: &ScalarField2D, img2: &ScalarField2D) -> Result<VectorField2D, CliError> {
        Ok(match self {
            Estimator::Cc(cfg) => estimate_widim(img1, img2, cfg)?,
            Estimator::Hs(cfg) => estimate_hs(img1, img2, cfg)?,
        })
    }
}

fn list_flag(name: &str, value: &Option<String>) -> Result<Option<Vec<usize>>, CliError> {
    value
        .as_deref()
        .map(|s| parse_list(s).map_err(|e| CliError::Usage(format!("--{name}: {e}"))))
        .transpose()
}

fn cc_config(a: &MethodArgs) -> Result<MultipassConfig, CliError> {
    let mut cfg = MultipassConfig::default();
    let sizes = list_flag("windows", &a.windows)?;
    let strides = list_flag("strides", &a.strides)?;
    let search = list_flag("search", &a.search)?;
    let n = sizes.as_ref().map_or(cfg.passes.len(), Vec::len);
    for (name, list) in [("strides", &strides), ("search", &search)] {
        if let Some(l) = list {
            if l.len() != n {
                return usage(format!("--{name} lists {} passes, expected {n}", l.len()));
            }
        } else if n != cfg.passes.len() {
            return usage(format!("--windows changes the pass count; give --{name} too"));
        }
    }
    let mut passes = Vec::with_capacity(n);
    for i in 0..n {
        let base = cfg.passes.get(i).copied();
        let half = match &sizes {
            Some(s) if s[i] % 2 == 1 => s[i] / 2,
            Some(s) => return usage(format!("window size {} must be odd", s[i])),
            None => base.expect("default pass").half_size,
        };
        let stride = strides
            .as_ref()
            .map_or_else(|| base.expect("default pass").stride, |s| s[i]);
        let radius = search
            .as_ref()
            .map_or_else(|| base.expect("default pass").search_radius, |s| s[i]);
        passes.push(WindowSpec::new(half, stride, radius).map_err(|e| CliError::Usage(e.to_string()))?);
    }
    cfg.passes = passes;
    cfg.validate = !a.no_validate;
    cfg.subpixel = !a.no_subpixel;
    cfg.correction_smoothing = a.correction_smoothing.unwrap_or(cfg.correction_smoothing);
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

/// `dir/name_img1.pgm` becomes `dir/name_pred.flo`; other names get
/// `_pred.flo` appended to their stem.
pub fn default_output(img1: &Path) -> PathBuf {
    let stem = img1
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let base = stem.strip_suffix("_img1").unwrap_or(&stem);
    img1.with_file_name(format!("{base}_pred.flo"))
}

pub fn run(args: &EstimateArgs, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let estimator = Estimator::from_args(args.method, &args.tuning)?;
    let boundary = args.tuning.boundary.into();
    let img1 = load_pgm(&args.img1)?.with_boundary(boundary);
    let img2 = load_pgm(&args.img2)?.with_boundary(boundary);
    let truth = args.truth.as_deref().map(load_flo).transpose()?;
    let start = Instant::now();
    let pred = estimator.estimate(&img1, &img2)?;
    let elapsed = start.elapsed().as_secs_f64();
    let path = args.out.clone().unwrap_or_else(|| default_output(&args.img1));
    save_flo(&path, &pred)?;
    report(out, format_args!("wrote {}", path.display()))?;
    if let Some(truth) = truth {
        report(out, format_args!("rmse={}", rmse(&pred, &truth)?))?;
    }
    report(out, format_args!("time={elapsed:.3}s"))
}
