use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use gerber_core::bounds::{mgl_scalar, sandwich_mgl, sandwich_new, scalar_mmse_gerber};
use gerber_core::hmm::{
    ow_entropy_rate_mc, theorem5_bound, theorem6_bound, Theorem6Variant, DEFAULT_BURNIN,
};
use gerber_core::scalar::{binary_convolve, binary_entropy};
use gerber_core::{MarkovHmmParams, Probability};
use rayon::prelude::*;

use crate::format::{derive_seeds, sig};
use crate::{CliError, CliResult};

pub const DEFAULT_POINTS: usize = 201;
pub const DEFAULT_ALPHA: f64 = 0.11;
const CSV_DIGITS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureId {
    /// MGL range and the MMSE bound against x = 4 MMSE/n.
    Fig1a,
    /// The same three curves against alpha at fixed x.
    Fig1b,
    /// Range of the MMSE bound and MGL against u = H(X)/n.
    Fig2a,
    /// The same three curves against alpha at fixed u.
    Fig2b,
    /// Hidden-Markov entropy-rate bounds and the Monte Carlo estimate against q.
    Fig3,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    #[arg(value_enum)]
    pub which: FigureId,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    pub points: usize,
    /// Channel crossover for fig1a, fig2a and fig3.
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Fixed x = 4 MMSE/n for fig1b.
    #[arg(long, default_value_t = 0.5)]
    pub x: f64,
    /// Fixed u = H(X)/n for fig2b.
    #[arg(long, default_value_t = 0.5)]
    pub entropy: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Monte Carlo samples per fig3 point.
    #[arg(long, default_value_t = 200_000)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_BURNIN)]
    pub burnin: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    MmseX,
    EntropyU,
    Alpha,
    Q,
}

impl SweepVariable {
    pub fn column(self) -> &'static str {
        match self {
            SweepVariable::MmseX => "x",
            SweepVariable::EntropyU => "u",
            SweepVariable::Alpha => "alpha",
            SweepVariable::Q => "q",
        }
    }
}

/// A uniform grid over one variable with the remaining parameters held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub range: (f64, f64),
    pub points: usize,
    pub fixed: Vec<(&'static str, f64)>,
}

impl SweepSpec {
    pub fn new(
        variable: SweepVariable,
        range: (f64, f64),
        points: usize,
        fixed: Vec<(&'static str, f64)>,
    ) -> CliResult<Self> {
        if !(range.0 < range.1) {
            return Err(CliError::Usage(format!(
                "sweep range needs lo < hi, got {range:?}"
            )));
        }
        if points < 2 {
            return Err(CliError::Usage(format!(
                "sweep needs at least 2 points, got {points}"
            )));
        }
        Ok(SweepSpec {
            variable,
            range,
            points,
            fixed,
        })
    }

    /// Grid values; the last equals `hi` exactly.
    pub fn grid(&self) -> Vec<f64> {
        let (lo, hi) = self.range;
        let last = self.points - 1;
        (0..self.points)
            .map(|i| {
                if i == last {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / last as f64
                }
            })
            .collect()
    }

    pub fn fixed(&self, key: &str) -> f64 {
        self.fixed
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .unwrap_or_else(|| panic!("sweep has no fixed {key}"))
    }
}

/// A header and rows in axis order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(|v| sig(*v, CSV_DIGITS)).collect();
            writeln!(out, "{}", fields.join(","))?;
        }
        out.flush()
    }
}

fn sweep_rows(
    spec: &SweepSpec,
    row: impl Fn(usize, f64) -> CliResult<Vec<f64>> + Sync,
) -> CliResult<Vec<Vec<f64>>> {
    spec.grid()
        .into_par_iter()
        .enumerate()
        .map(|(i, v)| {
            let mut r = vec![v];
            r.extend(row(i, v)?);
            Ok(r)
        })
        .collect()
}

/// MGL lower/upper over inputs with the given `x = 4 MMSE/n`, and the MMSE bound.
fn mgl_comparison(alpha: f64, x: f64) -> CliResult<Vec<f64>> {
    let a = Probability::noise(alpha)?;
    let (lower, upper) = sandwich_mgl(a, x)?;
    Ok(vec![lower, upper, scalar_mmse_gerber(a, x / 4.0)?])
}

/// MMSE-bound lower/upper over inputs with the given `u = H(X)/n`, and MGL.
fn new_comparison(alpha: f64, u: f64) -> CliResult<Vec<f64>> {
    let a = Probability::noise(alpha)?;
    let (lower, upper) = sandwich_new(a, u)?;
    Ok(vec![lower, upper, mgl_scalar(a, u)?])
}

pub fn figure_spec(args: &FigureArgs) -> CliResult<SweepSpec> {
    let (variable, range, fixed) = match args.which {
        FigureId::Fig1a => (
            SweepVariable::MmseX,
            (0.0, 1.0),
            vec![("alpha", args.alpha)],
        ),
        FigureId::Fig1b => (SweepVariable::Alpha, (0.0, 0.5), vec![("x", args.x)]),
        FigureId::Fig2a => (
            SweepVariable::EntropyU,
            (0.0, 1.0),
            vec![("alpha", args.alpha)],
        ),
        FigureId::Fig2b => (SweepVariable::Alpha, (0.0, 0.5), vec![("u", args.entropy)]),
        FigureId::Fig3 => (SweepVariable::Q, (0.0, 0.5), vec![("alpha", args.alpha)]),
    };
    SweepSpec::new(variable, range, args.points, fixed)
}

pub fn compute(args: &FigureArgs) -> CliResult<Table> {
    let spec = figure_spec(args)?;
    let axis = spec.variable.column();
    let (header, rows) = match args.which {
        FigureId::Fig1a | FigureId::Fig1b => {
            let rows = if args.which == FigureId::Fig1a {
                let a = spec.fixed("alpha");
                sweep_rows(&spec, |_, x| mgl_comparison(a, x))?
            } else {
                let x = spec.fixed("x");
                sweep_rows(&spec, |_, a| mgl_comparison(a, x))?
            };
            (vec![axis, "mgl_lower", "mgl_upper", "new"], rows)
        }
        FigureId::Fig2a | FigureId::Fig2b => {
            let rows = if args.which == FigureId::Fig2a {
                let a = spec.fixed("alpha");
                sweep_rows(&spec, |_, u| new_comparison(a, u))?
            } else {
                let u = spec.fixed("u");
                sweep_rows(&spec, |_, a| new_comparison(a, u))?
            };
            (vec![axis, "new_lower", "new_upper", "mgl"], rows)
        }
        FigureId::Fig3 => {
            let alpha = spec.fixed("alpha");
            let seeds = derive_seeds(args.seed, spec.points);
            let rows = sweep_rows(&spec, |i, q| {
                let p = MarkovHmmParams::new(q, alpha)?;
                let a = Probability::noise(alpha)?;
                let mgl = binary_entropy(binary_convolve(a, Probability::noise(q)?));
                let mc = ow_entropy_rate_mc(p, args.samples, args.burnin, seeds[i])?;
                Ok(vec![
                    mgl,
                    theorem5_bound(p).value,
                    theorem6_bound(p, Theorem6Variant::Factor4)?.value,
                    theorem6_bound(p, Theorem6Variant::AsPrinted)?.value,
                    mc.estimate,
                    mc.stderr,
                ])
            })?;
            (
                vec![
                    axis,
                    "mgl",
                    "theorem5",
                    "theorem6_factor4",
                    "theorem6_printed",
                    "mc_estimate",
                    "mc_stderr",
                ],
                rows,
            )
        }
    };
    Ok(Table { header, rows })
}

pub fn run(args: &FigureArgs) -> CliResult<()> {
    let table = compute(args)?;
    match &args.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::io(path, e))?;
            table
                .write_csv(BufWriter::new(file))
                .map_err(|e| CliError::io(path, e))
        }
        None => table
            .write_csv(io::stdout().lock())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}
