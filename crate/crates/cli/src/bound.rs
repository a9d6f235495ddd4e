use clap::{Args, ValueEnum};
use gerber_core::bounds::{mgl_scalar, scalar_memory_noise, scalar_mmse_gerber, scalar_upper};
use gerber_core::hmm::{
    cover_thomas_ceiling, now05_bound, theorem5_bound, theorem6_bound, Theorem6Variant,
};
use gerber_core::{BoundResult, MarkovHmmParams, Probability};

use crate::format::sig;
use crate::{emit, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundKind {
    /// Mrs. Gerber's Lemma from per-symbol entropy (--alpha, --entropy).
    Mgl,
    /// MMSE lower bound (--alpha, --mmse).
    MmseGerber,
    /// MMSE upper bound (--alpha, --mmse).
    Upper,
    /// Lower bound with noise of memory (--entropy is H(Z|W), --mmse).
    MemoryNoise,
    /// Hidden-Markov series bound (--alpha, --q).
    Theorem5,
    /// Hidden-Markov bound through the OW representation (--alpha, --q, --variant).
    Theorem6,
    /// Ceiling on order-n Cover-Thomas bounds (--alpha, --q, --n).
    CoverThomas,
    /// Small-q expansion bound (--alpha, --q).
    Now05,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum VariantArg {
    #[default]
    Factor4,
    Printed,
}

impl From<VariantArg> for Theorem6Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Factor4 => Theorem6Variant::Factor4,
            VariantArg::Printed => Theorem6Variant::AsPrinted,
        }
    }
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(value_enum)]
    pub kind: BoundKind,
    /// Crossover probability of the channel, in [0, 1/2].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Transition probability of the Markov source, in [0, 1/2].
    #[arg(long)]
    pub q: Option<f64>,
    /// Per-symbol entropy in bits, in [0, 1].
    #[arg(long)]
    pub entropy: Option<f64>,
    /// Per-symbol MMSE, in [0, 1/4].
    #[arg(long)]
    pub mmse: Option<f64>,
    /// Order of the Cover-Thomas bound.
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    #[arg(long, value_enum, default_value_t)]
    pub variant: VariantArg,
}

fn need(kind: BoundKind, flag: &str, value: Option<f64>) -> CliResult<f64> {
    value.ok_or_else(|| {
        let name = kind.to_possible_value().expect("no skipped variants");
        CliError::Usage(format!("bound {} requires --{flag}", name.get_name()))
    })
}

fn scalar(name: &'static str, value: f64, inputs: Vec<(&'static str, f64)>) -> BoundResult {
    BoundResult {
        name,
        value,
        n: 1,
        inputs,
        variant: None,
        permutation: None,
    }
}

pub fn evaluate(args: &BoundArgs) -> CliResult<BoundResult> {
    let kind = args.kind;
    let alpha =
        || -> CliResult<Probability> { Ok(Probability::noise(need(kind, "alpha", args.alpha)?)?) };
    let markov = || -> CliResult<MarkovHmmParams> {
        let q = need(kind, "q", args.q)?;
        let a = need(kind, "alpha", args.alpha)?;
        Ok(MarkovHmmParams::new(q, a)?)
    };
    let result = match kind {
        BoundKind::Mgl => {
            let (a, u) = (alpha()?, need(kind, "entropy", args.entropy)?);
            scalar(
                "mgl",
                mgl_scalar(a, u)?,
                vec![("alpha", a.value()), ("entropy", u)],
            )
        }
        BoundKind::MmseGerber => {
            let (a, m) = (alpha()?, need(kind, "mmse", args.mmse)?);
            scalar(
                "mmse-gerber",
                scalar_mmse_gerber(a, m)?,
                vec![("alpha", a.value()), ("mmse", m)],
            )
        }
        BoundKind::Upper => {
            let (a, m) = (alpha()?, need(kind, "mmse", args.mmse)?);
            scalar(
                "upper",
                scalar_upper(a, m)?,
                vec![("alpha", a.value()), ("mmse", m)],
            )
        }
        BoundKind::MemoryNoise => {
            let hz = need(kind, "entropy", args.entropy)?;
            let m = need(kind, "mmse", args.mmse)?;
            scalar(
                "memory-noise",
                scalar_memory_noise(hz, m)?,
                vec![("noise_entropy", hz), ("mmse", m)],
            )
        }
        BoundKind::Theorem5 => theorem5_bound(markov()?),
        BoundKind::Theorem6 => theorem6_bound(markov()?, args.variant.into())?,
        BoundKind::CoverThomas => {
            let p = markov()?;
            let inputs = vec![("q", p.q()), ("alpha", p.alpha()), ("n", args.n as f64)];
            scalar("cover-thomas", cover_thomas_ceiling(p, args.n)?, inputs)
        }
        BoundKind::Now05 => {
            let p = markov()?;
            scalar(
                "now05",
                now05_bound(p)?,
                vec![("q", p.q()), ("alpha", p.alpha())],
            )
        }
    };
    Ok(result)
}

/// The bound value on the first line, then one `key = value` input per line.
pub fn render(result: &BoundResult) -> String {
    let mut out = format!("{} = {}\n", result.name, sig(result.value, 12));
    if let Some(v) = result.variant {
        out.push_str(&format!("  variant = {v}\n"));
    }
    for (k, v) in &result.inputs {
        out.push_str(&format!("  {k} = {}\n", sig(*v, 12)));
    }
    out
}

pub fn run(args: &BoundArgs) -> CliResult<()> {
    emit(&render(&evaluate(args)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(kind: BoundKind) -> BoundArgs {
        BoundArgs {
            kind,
            alpha: None,
            q: None,
            entropy: None,
            mmse: None,
            n: 1,
            variant: VariantArg::Factor4,
        }
    }

    #[test]
    fn noiseless_mgl_passes_entropy_through() {
        let r = evaluate(&BoundArgs {
            alpha: Some(0.0),
            entropy: Some(0.37),
            ..args(BoundKind::Mgl)
        })
        .unwrap();
        assert!((r.value - 0.37).abs() < 1e-12);
        assert!(render(&r).starts_with("mgl = 0.37\n"));
    }

    #[test]
    fn theorem6_at_half_is_one() {
        let r = evaluate(&BoundArgs {
            alpha: Some(0.11),
            q: Some(0.5),
            ..args(BoundKind::Theorem6)
        })
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!(render(&r).contains("variant = factor4"));
    }

    #[test]
    fn missing_flag_names_it() {
        let err = evaluate(&BoundArgs {
            alpha: Some(0.11),
            ..args(BoundKind::Theorem5)
        })
        .unwrap_err();
        assert_eq!(err.to_string(), "bound theorem5 requires --q");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn out_of_range_alpha_is_a_domain_error() {
        let err = evaluate(&BoundArgs {
            alpha: Some(0.7),
            mmse: Some(0.1),
            ..args(BoundKind::Upper)
        })
        .unwrap_err();
        assert!(matches!(err, CliError::Core(_)));
        assert_eq!(err.exit_code(), 2);
    }
}
