use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::Args;
use gerber_core::bounds::{mgl_vector, vector_mmse_gerber, vector_upper};
use gerber_core::dist::{greedy_permutation, mmse_along_permutation, worst_case_mmse};
use gerber_core::{ExplicitPmf, Probability};

use crate::format::sig;
use crate::{emit, CliError, CliResult};

#[derive(Debug, Args)]
pub struct PmfArgs {
    /// Text file: n on the first line, then the 2^n weights in index order
    /// (x_1 is the least significant bit).
    pub file: PathBuf,
    /// Also evaluate the bounds on H(Y)/n for this channel crossover.
    #[arg(long)]
    pub alpha: Option<f64>,
}

pub fn report(pmf: &ExplicitPmf, alpha: Option<f64>) -> CliResult<String> {
    let n = pmf.n();
    let mut out = String::new();
    let line = |out: &mut String, key: &str, value: String| {
        writeln!(out, "{key:<24} {value}").expect("write to string");
    };
    line(&mut out, "n", n.to_string());
    line(
        &mut out,
        "entropy_per_symbol",
        sig(pmf.entropy() / n as f64, 12),
    );
    let (worst, perm) = worst_case_mmse(pmf)?;
    line(
        &mut out,
        "worst_case_mmse",
        format!("{} at {perm}", sig(worst, 12)),
    );
    let greedy = greedy_permutation(pmf);
    let g = mmse_along_permutation(pmf, &greedy)?;
    line(
        &mut out,
        "greedy_mmse",
        format!("{} at {greedy}", sig(g, 12)),
    );
    if let Some(a) = alpha {
        let a = Probability::noise(a)?;
        line(&mut out, "alpha", sig(a.value(), 12));
        line(
            &mut out,
            "output_entropy_per_symbol",
            sig(pmf.apply_bsc(a).entropy() / n as f64, 12),
        );
        for r in [
            mgl_vector(pmf, a)?,
            vector_mmse_gerber(pmf, a)?,
            vector_upper(pmf, a)?,
        ] {
            let mut value = sig(r.value, 12);
            if let Some(p) = &r.permutation {
                value.push_str(&format!(" at {p}"));
            }
            line(&mut out, r.name, value);
        }
    }
    Ok(out)
}

pub fn run(args: &PmfArgs) -> CliResult<()> {
    let text = fs::read_to_string(&args.file).map_err(|e| CliError::io(&args.file, e))?;
    let pmf: ExplicitPmf = text.parse()?;
    emit(&report(&pmf, args.alpha)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counterexample_report() {
        let pmf = ExplicitPmf::counterexample(0.1).unwrap();
        let text = report(&pmf, Some(0.11)).unwrap();
        assert!(
            text.contains("worst_case_mmse          0.33 at (1, 2)"),
            "{text}"
        );
        assert!(
            text.contains("greedy_mmse              0.33 at (1, 2)"),
            "{text}"
        );
        for key in ["mgl", "mmse-gerber", "upper", "output_entropy_per_symbol"] {
            assert!(text.lines().any(|l| l.starts_with(key)), "{key} missing");
        }
    }

    #[test]
    fn bad_alpha_is_domain_error() {
        let pmf = ExplicitPmf::uniform(2).unwrap();
        assert_eq!(report(&pmf, Some(0.6)).unwrap_err().exit_code(), 2);
    }
}
