use std::io::Write;
use std::path::PathBuf;

use piv_core::turbdiag::{
    coarse_grained_invariants, density_flux, divergence_stats, energy_spectrum, gradient_magnitudes, scalar_increments,
    scalar_spectrum, structure_function, Histogram, Histogram2D, SpectrumResult, StructureFnResult,
};
use piv_core::{BoundaryMode, ScalarField2D, VectorField2D};

use crate::args::{parse_list, DiagnoseArgs};
use crate::error::{usage, CliError};
use crate::files::{create_dir, load_flo, load_pgm};
use crate::report;
use crate::table::{num as fmt, write_csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Test {
    Spectrum,
    Div,
    Sf,
    Qr,
    Density,
    Flux,
}

impl Test {
    pub const ALL: [Test; 6] = [Test::Spectrum, Test::Div, Test::Sf, Test::Qr, Test::Density, Test::Flux];

    pub fn name(self) -> &'static str {
        match self {
            Test::Spectrum => "spectrum",
            Test::Div => "div",
            Test::Sf => "sf",
            Test::Qr => "qr",
            Test::Density => "density",
            Test::Flux => "flux",
        }
    }

    fn needs_flow(self) -> bool {
        !matches!(self, Test::Density)
    }

    fn needs_density(self) -> bool {
        matches!(self, Test::Density | Test::Flux)
    }
}

fn select_tests(args: &DiagnoseArgs) -> Result<Vec<Test>, CliError> {
    let (flow, density) = (!args.flo.is_empty(), !args.pgm.is_empty());
    let Some(list) = &args.tests else {
        let tests: Vec<Test> = Test::ALL
            .into_iter()
            .filter(|t| (!t.needs_flow() || flow) && (!t.needs_density() || density))
            .collect();
        if tests.is_empty() {
            return usage("no inputs: give --flo and/or --pgm");
        }
        return Ok(tests);
    };
    let mut tests = Vec::new();
    for name in list.split(',').map(str::trim) {
        let Some(t) = Test::ALL.into_iter().find(|t| t.name() == name) else {
            return usage(format!("unknown test `{name}`"));
        };
        if t.needs_flow() && !flow {
            return usage(format!("test `{name}` needs --flo input"));
        }
        if t.needs_density() && !density {
            return usage(format!("test `{name}` needs --pgm input"));
        }
        if !tests.contains(&t) {
            tests.push(t);
        }
    }
    Ok(tests)
}

fn same_shape<'a>(mut specs: impl Iterator<Item = &'a piv_core::GridSpec>) -> Result<(), CliError> {
    if let Some(first) = specs.next() {
        if let Some(s) = specs.find(|s| !s.same_shape(first)) {
            return Err(piv_core::PivError::Input(format!(
                "snapshots differ in shape: {}x{} vs {}x{}",
                first.width(),
                first.height(),
                s.width(),
                s.height()
            ))
            .into());
        }
    }
    Ok(())
}

fn mean_spectrum(spectra: Vec<SpectrumResult>) -> SpectrumResult {
    let n = spectra.len() as f64;
    let mut it = spectra.into_iter();
    let mut acc = it.next().expect("at least one snapshot");
    for s in it {
        acc.e.iter_mut().zip(&s.e).for_each(|(a, b)| *a += b);
    }
    acc.e.iter_mut().for_each(|a| *a /= n);
    acc
}

fn mean_sf(results: Vec<StructureFnResult>) -> StructureFnResult {
    let n = results.len() as f64;
    let mut it = results.into_iter();
    let mut acc = it.next().expect("at least one snapshot");
    for r in it {
        for (row, other) in acc.s.iter_mut().zip(&r.s) {
            row.iter_mut().zip(other).for_each(|(a, b)| *a += b);
        }
    }
    acc.s.iter_mut().flatten().for_each(|a| *a /= n);
    acc
}

fn interior(f: &ScalarField2D) -> impl Iterator<Item = f64> + '_ {
    let (w, h) = (f.width(), f.height());
    (1..h - 1).flat_map(move |y| (1..w - 1).map(move |x| f.get(x, y)))
}

fn spectrum_rows(s: &SpectrumResult) -> Vec<Vec<String>> {
    s.k.iter()
        .zip(&s.e)
        .map(|(k, e)| vec![k.to_string(), fmt(*e)])
        .collect()
}

fn sf_rows(s: &StructureFnResult) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (oi, n) in s.orders.iter().enumerate() {
        for (ri, r) in s.radii.iter().enumerate() {
            rows.push(vec![n.to_string(), fmt(*r), fmt(s.s[oi][ri])]);
        }
    }
    rows
}

fn hist_rows(h: &Histogram) -> Vec<Vec<String>> {
    h.counts
        .iter()
        .enumerate()
        .map(|(i, c)| vec![fmt(h.edges[i]), fmt(h.edges[i + 1]), c.to_string()])
        .collect()
}

fn joint_rows(h: &Histogram2D) -> Vec<Vec<String>> {
    let nq = h.q_edges.len() - 1;
    h.counts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (pi, qi) = (i / nq, i % nq);
            vec![
                fmt(h.p_edges[pi]),
                fmt(h.p_edges[pi + 1]),
                fmt(h.q_edges[qi]),
                fmt(h.q_edges[qi + 1]),
                c.to_string(),
            ]
        })
        .collect()
}

struct Outputs<'a> {
    args: &'a DiagnoseArgs,
    out: &'a mut (dyn Write + Send),
}

impl Outputs<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.args.out.join(format!("{}{name}.csv", self.args.prefix))
    }

    fn table(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), CliError> {
        let path = self.path(name);
        write_csv(&path, header, rows)?;
        report(self.out, format_args!("wrote {}", path.display()))
    }
}

/// One CSV per table; spectra, structure functions and flux are averaged
/// over snapshots, histograms pool every snapshot's samples.
pub fn run(args: &DiagnoseArgs, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let tests = select_tests(args)?;
    let radii: Vec<f64> = parse_list(&args.radii).map_err(|e| CliError::Usage(format!("--radii: {e}")))?;
    let orders: Vec<u32> = parse_list(&args.orders).map_err(|e| CliError::Usage(format!("--orders: {e}")))?;
    if args.bins == 0 {
        return usage("--bins must be >= 1");
    }
    if tests.contains(&Test::Flux) && args.flo.len() != args.pgm.len() {
        return usage(format!(
            "flux pairs --pgm with --flo: got {} and {}",
            args.pgm.len(),
            args.flo.len()
        ));
    }
    let boundary: BoundaryMode = args.boundary.into();
    let flows: Vec<VectorField2D> = args
        .flo
        .iter()
        .map(|p| Ok(load_flo(p)?.with_boundary(boundary)))
        .collect::<Result<_, CliError>>()?;
    let rhos: Vec<ScalarField2D> = args
        .pgm
        .iter()
        .map(|p| Ok(load_pgm(p)?.with_boundary(boundary)))
        .collect::<Result<_, CliError>>()?;
    same_shape(flows.iter().map(|f| f.spec()).chain(rhos.iter().map(|r| r.spec())))?;
    create_dir(&args.out)?;
    let mut o = Outputs { args, out };

    for test in tests {
        match test {
            Test::Spectrum => {
                let s = mean_spectrum(flows.iter().map(energy_spectrum).collect::<Result<_, _>>()?);
                o.table("spectrum", &["k", "E"], spectrum_rows(&s))?;
            }
            Test::Div => {
                let stats = flows
                    .iter()
                    .map(|f| divergence_stats(f, args.bins))
                    .collect::<Result<Vec<_>, _>>()?;
                let rows = stats
                    .iter()
                    .enumerate()
                    .map(|(i, s)| vec![i.to_string(), fmt(s.rms_div), fmt(s.rms_grad), fmt(s.ratio())])
                    .collect();
                o.table("div", &["snapshot", "rms_div", "rms_grad", "ratio"], rows)?;
                let pooled: Vec<f64> = stats.iter().flat_map(|s| s.div.data().iter().copied()).collect();
                let hist = Histogram::linear(&pooled, args.bins)?;
                o.table("div_hist", &["bin_lo", "bin_hi", "count"], hist_rows(&hist))?;
            }
            Test::Sf => {
                let s = mean_sf(
                    flows
                        .iter()
                        .map(|f| structure_function(f, &orders, &radii, args.orientations))
                        .collect::<Result<_, _>>()?,
                );
                o.table("sf", &["n", "r", "S"], sf_rows(&s))?;
            }
            Test::Qr => {
                let (mut p, mut q) = (Vec::new(), Vec::new());
                for f in &flows {
                    let inv = coarse_grained_invariants(f, args.scale, args.bins)?;
                    p.extend(interior(&inv.p));
                    q.extend(interior(&inv.q));
                }
                let hist = Histogram2D::new(&p, &q, args.bins)?;
                o.table("qr", &["p_lo", "p_hi", "q_lo", "q_hi", "count"], joint_rows(&hist))?;
            }
            Test::Density => {
                let mut mags = Vec::new();
                for r in &rhos {
                    mags.extend(gradient_magnitudes(r)?);
                }
                let pdf = Histogram::log_spaced(&mags, args.bins)?;
                o.table("density_pdf", &["bin_lo", "bin_hi", "count"], hist_rows(&pdf))?;
                let s = mean_spectrum(rhos.iter().map(scalar_spectrum).collect::<Result<_, _>>()?);
                o.table("density_spectrum", &["k", "E"], spectrum_rows(&s))?;
                let sf = mean_sf(
                    rhos.iter()
                        .map(|r| scalar_increments(r, &orders, &radii, args.orientations))
                        .collect::<Result<_, _>>()?,
                );
                o.table("density_sf", &["n", "r", "S"], sf_rows(&sf))?;
            }
            Test::Flux => {
                let results = rhos
                    .iter()
                    .zip(&flows)
                    .map(|(r, f)| density_flux(r, f, &radii, args.orientations))
                    .collect::<Result<Vec<_>, _>>()?;
                let n = results.len() as f64;
                let rows = radii
                    .iter()
                    .enumerate()
                    .map(|(i, r)| vec![fmt(*r), fmt(results.iter().map(|x| x.flux[i]).sum::<f64>() / n)])
                    .collect();
                o.table("flux", &["r", "flux"], rows)?;
            }
        }
    }
    Ok(())
}
