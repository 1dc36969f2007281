//! Batch front door: parse analysis documents, run the library, emit
//! verdicts and plot data.
//!
//! Exit codes: 0 = analysis ran (including negative verdicts), 1 = a
//! certificate failed verification, 2 = input/schema error.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dchaos::chaos::{
    example_certificate, p_independence_report, verify_certificate, Backend, CertificateDoc,
    VerifyOptions,
};
use dchaos::density::{density_profile, IndexSet};
use dchaos::mobius::{
    arc_preimage, classify, ddc_verdict, AutomorphismClass, AutomorphismDoc, DdcEvidence,
};
use dchaos::numeric::{rational_to_decimal, rational_to_string, Rational};
use dchaos::shifts::{
    near_zero_profile, ratio_sequence_exact, ratio_sequence_f64, ShiftKind, ShiftOperator,
};
use dchaos::weights::{shift_bounded, WeightSpec};

#[derive(Parser)]
#[command(
    name = "dchaos",
    about = "Finite-horizon analysis of distributional chaos for weighted shifts and circle composition operators",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Backward,
    Forward,
}

impl From<KindArg> for ShiftKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Backward => ShiftKind::Backward,
            KindArg::Forward => ShiftKind::Forward,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Exact,
    Float,
    Auto,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Exact => Backend::Exact,
            BackendArg::Float => Backend::Float,
            BackendArg::Auto => Backend::Auto,
        }
    }
}

#[derive(Subcommand)]
enum Commands {
    /// Density profile of an interval-union index set at given horizons
    Density {
        /// JSON file: a list of [lo, hi] interval pairs ("-" for stdin)
        #[arg(long)]
        set: PathBuf,
        /// Strictly increasing horizons, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        horizons: Vec<u64>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Output path (stdout when omitted)
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Probe shift boundedness and the near-zero profile of a weight
    ShiftVerify {
        /// Weight spec JSON ("-" for stdin)
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, value_enum, default_value_t = KindArg::Backward)]
        kind: KindArg,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        probe_lo: i64,
        #[arg(long, default_value_t = 1024)]
        probe_hi: i64,
        /// Near-zero profile thresholds 1..=k_max (skipped when omitted)
        #[arg(long)]
        near_zero_kmax: Option<u32>,
        #[arg(long, default_value_t = 12_500)]
        near_zero_nmax: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Build and verify the harmonic-weight example certificate
    ShiftExample {
        #[arg(long, default_value_t = 2)]
        k_min: u32,
        #[arg(long, default_value_t = 3)]
        k_max: u32,
        #[arg(long, value_enum, default_value_t = BackendArg::Auto)]
        backend: BackendArg,
        /// Emit the first block's ratio sequence as CSV to this path
        #[arg(long)]
        emit_ratios: Option<PathBuf>,
        /// Also report verdicts for these p values (comma separated)
        #[arg(long, value_delimiter = ',')]
        ps: Vec<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Classify a disk automorphism; optionally report the chaos verdict
    Mobius {
        /// Automorphism spec JSON ("-" for stdin)
        #[arg(long)]
        spec: PathBuf,
        /// Attach the dense-chaos verdict and its evidence
        #[arg(long)]
        verdict: bool,
        /// Evidence horizon for the decay curves
        #[arg(long, default_value_t = 30)]
        horizon: u64,
        /// Emit the k=1 decay curve as CSV (n, measure) to this path
        #[arg(long)]
        evidence: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Verify a certificate document against a weight document
    Certificate {
        /// Weight spec JSON ("-" for stdin)
        #[arg(long)]
        weights: PathBuf,
        /// Certificate JSON
        #[arg(long)]
        cert: PathBuf,
        #[arg(long, value_enum, default_value_t = BackendArg::Auto)]
        backend: BackendArg,
        #[arg(long, default_value_t = 5000)]
        n_exact_max: u64,
        /// Kind of shift the certificate is for
        #[arg(long, value_enum, default_value_t = KindArg::Backward)]
        kind: KindArg,
        /// Verify blocks sequentially instead of in parallel
        #[arg(long)]
        sequential: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn read_input(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .context("reading stdin")?;
        Ok(buf)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn write_output(path: Option<&Path>, bytes: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{bytes}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// A curve value: exact rational or float.
enum CurveValue {
    Exact(Rational),
    Float(f64),
}

/// Emits `(n, value)` rows: CSV renders rationals as decimals to 12
/// significant digits, JSON keeps them exact as `"p/q"` strings.
fn emit_curve(series: &[(i64, CurveValue)], format: Format) -> Result<String> {
    if series.is_empty() {
        return Err(anyhow!("empty series"));
    }
    if series.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(anyhow!("series indices must be strictly increasing"));
    }
    match format {
        Format::Csv => {
            let mut out = String::from("n,value\n");
            for (n, v) in series {
                let rendered = match v {
                    CurveValue::Exact(r) => rational_to_decimal(r, 12),
                    CurveValue::Float(x) => format!("{x}"),
                };
                out.push_str(&format!("{n},{rendered}\n"));
            }
            Ok(out)
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = series
                .iter()
                .map(|(n, v)| {
                    let val = match v {
                        CurveValue::Exact(r) => serde_json::Value::String(rational_to_string(r)),
                        CurveValue::Float(x) => serde_json::json!(x),
                    };
                    serde_json::json!([n, val])
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&rows)?;
            s.push('\n');
            Ok(s)
        }
    }
}

#[derive(Serialize)]
struct DensityReport {
    horizons: Vec<u64>,
    counts: Vec<u64>,
    ratios: Vec<String>,
    upper_density_estimate: String,
    lower_density_estimate: String,
    note: &'static str,
}

fn run_density(set: &Path, horizons: &[u64], format: Format, output: Option<&Path>) -> Result<()> {
    let text = read_input(set)?;
    let intervals: Vec<(u64, u64)> =
        serde_json::from_str(&text).context("set file: expected a JSON list of [lo, hi] pairs")?;
    let set = IndexSet::intervals(intervals).map_err(|e| anyhow!("set file: {e}"))?;
    let profile = density_profile(&set, horizons).map_err(|e| anyhow!("horizons: {e}"))?;
    match format {
        Format::Json => {
            let report = DensityReport {
                horizons: profile.horizons.clone(),
                counts: profile.counts.clone(),
                ratios: profile.ratios.iter().map(rational_to_string).collect(),
                upper_density_estimate: rational_to_string(&profile.upper_estimate),
                lower_density_estimate: rational_to_string(&profile.lower_estimate),
                note: "finite-horizon estimates over the supplied horizons only",
            };
            write_output(output, &to_json(&report)?)
        }
        Format::Csv => {
            let series: Vec<(i64, CurveValue)> = profile
                .horizons
                .iter()
                .zip(&profile.ratios)
                .map(|(&n, r)| (n as i64, CurveValue::Exact(r.clone())))
                .collect();
            write_output(output, &emit_curve(&series, Format::Csv)?)
        }
    }
}

#[derive(Serialize)]
struct ShiftVerifyReport {
    bound_probe: BoundProbeDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    near_zero: Option<NearZeroDoc>,
}

#[derive(Serialize)]
struct BoundProbeDoc {
    max_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_ratio_exact: Option<String>,
    witness: i64,
    probe_lo: i64,
    probe_hi: i64,
    note: &'static str,
}

#[derive(Serialize)]
struct NearZeroDoc {
    n_max: u64,
    rows: Vec<NearZeroRowDoc>,
}

#[derive(Serialize)]
struct NearZeroRowDoc {
    k: u32,
    count_at_horizon: u64,
    achieved: bool,
    first_achieved: Option<u64>,
    last_achieved: Option<(u64, u64)>,
}

fn run_shift_verify(
    weights: &Path,
    kind: ShiftKind,
    probe: (i64, i64),
    near_zero: Option<(u32, u64)>,
    output: Option<&Path>,
) -> Result<()> {
    let spec: WeightSpec = serde_json::from_str(&read_input(weights)?)
        .context("weights file: does not match the weight spec schema")?;
    let weight = spec.to_weight().map_err(|e| anyhow!("weights file: {e}"))?;
    if probe.0 > probe.1 {
        return Err(anyhow!("probe range is empty"));
    }
    let bound = shift_bounded(&weight, kind, probe.0..=probe.1);
    let near_zero = near_zero.map(|(k_max, n_max)| {
        let profile = near_zero_profile(&weight, kind, k_max, n_max);
        NearZeroDoc {
            n_max: profile.n_max,
            rows: profile
                .rows
                .iter()
                .map(|r| NearZeroRowDoc {
                    k: r.k,
                    count_at_horizon: r.count_at_horizon,
                    achieved: r.achieved(),
                    first_achieved: r.first_achieved,
                    last_achieved: r.last_achieved,
                })
                .collect(),
        }
    });
    let report = ShiftVerifyReport {
        bound_probe: BoundProbeDoc {
            max_ratio: bound.max_ratio,
            max_ratio_exact: bound.max_exact.as_ref().map(rational_to_string),
            witness: bound.witness,
            probe_lo: probe.0,
            probe_hi: probe.1,
            note: "finite-range probe, not a proof of boundedness",
        },
        near_zero,
    };
    write_output(output, &to_json(&report)?)
}

#[derive(Serialize)]
struct ExampleReport {
    epsilon: String,
    verdict: dchaos::chaos::CertificateVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_independence: Option<dchaos::chaos::PIndependenceReport>,
}

fn run_shift_example(
    k_min: u32,
    k_max: u32,
    backend: Backend,
    emit_ratios: Option<&Path>,
    ps: &[f64],
    output: Option<&Path>,
) -> Result<bool> {
    let cert = example_certificate(k_min..=k_max).map_err(|e| anyhow!("{e}"))?;
    let weight = dchaos::weights::WeightSequence::harmonic();
    let opts = VerifyOptions {
        backend,
        ..Default::default()
    };
    let (p_independence, verdict) = if ps.is_empty() {
        (
            None,
            verify_certificate(&weight, ShiftKind::Backward, &cert, &opts)
                .map_err(|e| anyhow!("{e}"))?,
        )
    } else {
        let (report, verdict) =
            p_independence_report(&weight, ShiftKind::Backward, &cert, ps, &opts)
                .map_err(|e| anyhow!("{e}"))?;
        (Some(report), verdict)
    };
    if let Some(path) = emit_ratios {
        let block = &cert.blocks[0];
        let op = ShiftOperator::new(ShiftKind::Backward, weight.clone());
        let series: Vec<(i64, CurveValue)> = if weight.is_exact() && block.n_k <= opts.n_exact_max {
            ratio_sequence_exact(&op, &block.support, &block.coeffs, block.n_k)
                .map_err(|e| anyhow!("{e}"))?
                .into_iter()
                .enumerate()
                .map(|(i, r)| (i as i64 + 1, CurveValue::Exact(r)))
                .collect()
        } else {
            ratio_sequence_f64(&op, &block.support, &block.coeffs, block.n_k)
                .map_err(|e| anyhow!("{e}"))?
                .into_iter()
                .enumerate()
                .map(|(i, r)| (i as i64 + 1, CurveValue::Float(r)))
                .collect()
        };
        write_output(Some(path), &emit_curve(&series, Format::Csv)?)?;
    }
    let pass = verdict.pass;
    let report = ExampleReport {
        epsilon: rational_to_string(&cert.epsilon),
        verdict,
        p_independence,
    };
    write_output(output, &to_json(&report)?)?;
    Ok(pass)
}

#[derive(Serialize)]
struct ClassDoc {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    fixed_points: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    interior_fixed_point: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    multiplier: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    translation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rotation_angle: Option<f64>,
}

impl ClassDoc {
    fn from_class(class: &AutomorphismClass) -> Self {
        let mut doc = ClassDoc {
            kind: class.kind_name().to_string(),
            fixed_points: None,
            interior_fixed_point: None,
            multiplier: None,
            translation: None,
            rotation_angle: None,
        };
        match class {
            AutomorphismClass::Identity => {}
            AutomorphismClass::Elliptic {
                fixed_interior,
                rotation_angle,
            } => {
                doc.interior_fixed_point = Some((fixed_interior.re, fixed_interior.im));
                doc.rotation_angle = Some(*rotation_angle);
            }
            AutomorphismClass::Parabolic { alpha, b } => {
                doc.fixed_points = Some(vec![(alpha.re, alpha.im)]);
                doc.translation = Some(*b);
            }
            AutomorphismClass::Hyperbolic {
                alpha,
                beta,
                lambda,
            } => {
                doc.fixed_points = Some(vec![(alpha.re, alpha.im), (beta.re, beta.im)]);
                doc.multiplier = Some(*lambda);
            }
        }
        doc
    }
}

#[derive(Serialize)]
struct MobiusReport {
    class: ClassDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdict: Option<dchaos::mobius::DdcVerdict>,
}

fn run_mobius(
    spec: &Path,
    want_verdict: bool,
    horizon: u64,
    evidence: Option<&Path>,
    output: Option<&Path>,
) -> Result<()> {
    let doc: AutomorphismDoc = serde_json::from_str(&read_input(spec)?)
        .context("spec file: does not match the automorphism schema")?;
    let map = doc.to_map().map_err(|e| anyhow!("spec file: {e}"))?;
    let classified = classify(&map).map_err(|e| anyhow!("spec file: {e}"))?;
    let verdict = if want_verdict || evidence.is_some() {
        Some(ddc_verdict(&map, horizon).map_err(|e| anyhow!("{e}"))?)
    } else {
        None
    };
    if let Some(path) = evidence {
        let series: Vec<(i64, CurveValue)> = match verdict.as_ref().map(|v| &v.evidence) {
            Some(DdcEvidence::AttractorDecay { curves, .. }) => curves[0]
                .points
                .iter()
                .map(|&(n, m)| (n as i64, CurveValue::Float(m)))
                .collect(),
            Some(DdcEvidence::RotationInvariance { samples, .. }) => samples
                .iter()
                .map(|&(n, m)| (n as i64, CurveValue::Float(m)))
                .collect(),
            None => {
                let arc = dchaos::mobius::Arc::from_midpoint(0.0, 0.25);
                (0..=horizon)
                    .map(|n| {
                        (
                            n as i64,
                            CurveValue::Float(arc_preimage(&classified, n, &arc).0.measure()),
                        )
                    })
                    .collect()
            }
        };
        write_output(Some(path), &emit_curve(&series, Format::Csv)?)?;
    }
    let report = MobiusReport {
        class: ClassDoc::from_class(&classified.class),
        verdict,
    };
    write_output(output, &to_json(&report)?)
}

fn run_certificate(
    weights: &Path,
    cert: &Path,
    kind: ShiftKind,
    backend: Backend,
    n_exact_max: u64,
    sequential: bool,
    output: Option<&Path>,
) -> Result<bool> {
    let spec: WeightSpec = serde_json::from_str(&read_input(weights)?)
        .context("weights file: does not match the weight spec schema")?;
    let weight = spec.to_weight().map_err(|e| anyhow!("weights file: {e}"))?;
    let doc: CertificateDoc = serde_json::from_str(&read_input(cert)?)
        .context("cert file: does not match the certificate schema")?;
    let cert = doc
        .to_certificate()
        .map_err(|e| anyhow!("cert file: {e}"))?;
    let opts = VerifyOptions {
        backend,
        n_exact_max,
        parallel: !sequential,
        condition_horizon: None,
    };
    let verdict = verify_certificate(&weight, kind, &cert, &opts).map_err(|e| anyhow!("{e}"))?;
    let pass = verdict.pass;
    write_output(output, &to_json(&verdict)?)?;
    Ok(pass)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Commands::Density {
            set,
            horizons,
            format,
            output,
        } => {
            run_density(&set, &horizons, format, output.as_deref())?;
            Ok(true)
        }
        Commands::ShiftVerify {
            weights,
            kind,
            probe_lo,
            probe_hi,
            near_zero_kmax,
            near_zero_nmax,
            output,
        } => {
            run_shift_verify(
                &weights,
                kind.into(),
                (probe_lo, probe_hi),
                near_zero_kmax.map(|k| (k, near_zero_nmax)),
                output.as_deref(),
            )?;
            Ok(true)
        }
        Commands::ShiftExample {
            k_min,
            k_max,
            backend,
            emit_ratios,
            ps,
            output,
        } => run_shift_example(
            k_min,
            k_max,
            backend.into(),
            emit_ratios.as_deref(),
            &ps,
            output.as_deref(),
        ),
        Commands::Mobius {
            spec,
            verdict,
            horizon,
            evidence,
            output,
        } => {
            run_mobius(
                &spec,
                verdict,
                horizon,
                evidence.as_deref(),
                output.as_deref(),
            )?;
            Ok(true)
        }
        Commands::Certificate {
            weights,
            cert,
            backend,
            n_exact_max,
            kind,
            sequential,
            output,
        } => run_certificate(
            &weights,
            &cert,
            kind.into(),
            backend.into(),
            n_exact_max,
            sequential,
            output.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1), // analysis ran, certificate failed
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
