//! Command-line front end: spectrum scans, exceptional-level reports,
//! (g, delta)-plane zero curves, and Fock-oracle validation runs.
//!
//! Exit codes: 0 success, 1 bad arguments, 2 at least one record did not
//! converge, 3 I/O failure.

use clap::{Parser, Subcommand, ValueEnum};
use rabi_hill::atlas::{self, FieldKind, GridRegion};
use rabi_hill::oracle;
use rabi_hill::spectrum::{self, DEFAULT_TOL_JUDD, DEFAULT_TOL_TAIL};
use rabi_hill::{ModelParams, SolverOptions};
use serde_json::json;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

const ORACLE_MATCH_TOL: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "rabi-hill", version, about = "Quantum Rabi model spectrum via Hill's determinant method", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FieldArg {
    Judd,
    Tail,
    Both,
}

#[derive(Subcommand)]
enum Cmd {
    /// Scan the normalized Hill determinant for regular-spectrum roots.
    Spectrum {
        #[arg(long, allow_negative_numbers = true)]
        g: f64,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long, allow_negative_numbers = true)]
        xmin: f64,
        #[arg(long, allow_negative_numbers = true)]
        xmax: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        mmax: Option<usize>,
        /// Fill the oracle_gap column from a truncated-basis diagonalization.
        #[arg(long)]
        validate: bool,
        #[arg(long, default_value_t = 80)]
        ntrunc: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Classify the exceptional level x = n at one parameter point.
    Exceptional {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_negative_numbers = true)]
        g: f64,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        /// Emit eigenvector coefficients q_0..q_{LEN-1}.
        #[arg(long, value_name = "LEN")]
        vectors: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_TOL_JUDD)]
        tol_j: f64,
        #[arg(long, default_value_t = DEFAULT_TOL_TAIL)]
        tol_f: f64,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        mmax: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Extract zero curves of J_n and/or F_n over a (g, delta) region.
    Curves {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = FieldArg::Tail)]
        field: FieldArg,
        /// gmin gmax dmin dmax
        #[arg(long, num_args = 4, allow_negative_numbers = true, value_names = ["GMIN", "GMAX", "DMIN", "DMAX"])]
        region: Vec<f64>,
        /// NX NY node counts
        #[arg(long, num_args = 2, value_names = ["NX", "NY"])]
        grid: Vec<usize>,
        #[arg(long, default_value_t = 1e-6)]
        tol_j: f64,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        mmax: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Diagonalize the truncated Hamiltonian and report convergence over N.
    Oracle {
        #[arg(long, allow_negative_numbers = true)]
        g: f64,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long)]
        ntrunc: usize,
        #[arg(long, default_value_t = 8)]
        levels: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

enum CliError {
    Usage(String),
    Io(std::io::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own exit code conventions differ; the contract here is 1
            // for any argument problem, 0 for --help/--version.
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };

    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }

    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Io(e)) => {
            eprintln!("I/O error: {e}");
            ExitCode::from(3)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var("RABI_HILL_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| format!("RABI_HILL_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn solver_options(tol: Option<f64>, mmax: Option<usize>) -> Result<SolverOptions, CliError> {
    let mut opts = SolverOptions::default();
    if let Some(t) = tol {
        opts.tol = t;
    }
    if let Some(m) = mmax {
        opts.m_max = m;
    }
    opts.validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(opts)
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.cmd {
        Cmd::Spectrum { g, delta, xmin, xmax, step, tol, mmax, validate, ntrunc, out, format } => {
            cmd_spectrum(g, delta, xmin, xmax, step, tol, mmax, validate, ntrunc, out, format)
        }
        Cmd::Exceptional { n, g, delta, vectors, tol_j, tol_f, tol, mmax, out, format } => {
            cmd_exceptional(n, g, delta, vectors, tol_j, tol_f, tol, mmax, out, format)
        }
        Cmd::Curves { n, field, region, grid, tol_j, tol, mmax, out, format } => {
            cmd_curves(n, field, &region, &grid, tol_j, tol, mmax, out, format)
        }
        Cmd::Oracle { g, delta, ntrunc, levels, out, format } => {
            cmd_oracle(g, delta, ntrunc, levels, out, format)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_spectrum(
    g: f64,
    delta: f64,
    xmin: f64,
    xmax: f64,
    step: f64,
    tol: Option<f64>,
    mmax: Option<usize>,
    validate: bool,
    ntrunc: usize,
    out: Option<PathBuf>,
    format: Format,
) -> Result<u8, CliError> {
    if xmin >= xmax {
        return Err(CliError::Usage(format!(
            "--xmin must be below --xmax (got {xmin} >= {xmax})"
        )));
    }
    if step <= 0.0 {
        return Err(CliError::Usage("--step must be positive".into()));
    }
    let params =
        ModelParams::new(g, delta).map_err(|e| CliError::Usage(e.to_string()))?;
    let opts = solver_options(tol, mmax)?;
    let mut roots = spectrum::scan_regular(&params, xmin, xmax, step, &opts)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    if validate {
        for r in &mut roots {
            let mut n_use = ntrunc;
            let mut gap = oracle::oracle_gap(r.x, &params, n_use, 1e-12)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            // A comparison within 10x of its tolerance is re-run at doubled
            // truncation before being trusted.
            if gap > ORACLE_MATCH_TOL / 10.0 {
                n_use *= 2;
                gap = oracle::oracle_gap(r.x, &params, n_use, 1e-12)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
            }
            r.oracle_gap = Some(gap);
        }
    }

    let not_converged = roots
        .iter()
        .any(|r| r.flags.unvalidated && !r.flags.near_negative_integer_x);

    let body = match format {
        Format::Csv => {
            let mut s = String::from("g,delta,x,energy,residual,oracle_gap,flags\n");
            for r in &roots {
                let gap = r.oracle_gap.map(fmt_f64).unwrap_or_default();
                s.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    fmt_f64(g),
                    fmt_f64(delta),
                    fmt_f64(r.x),
                    fmt_f64(r.energy),
                    fmt_f64(r.residual),
                    gap,
                    flags_str(&r.flags),
                ));
            }
            s
        }
        Format::Json => {
            let records: Vec<_> = roots
                .iter()
                .map(|r| {
                    json!({
                        "g": g,
                        "delta": delta,
                        "x": r.x,
                        "energy": r.energy,
                        "bracket": [r.bracket.0, r.bracket.1],
                        "residual": r.residual,
                        "oracle_gap": r.oracle_gap,
                        "flags": flags_str(&r.flags),
                    })
                })
                .collect();
            serde_json::to_string_pretty(&records).expect("serializable") + "\n"
        }
    };
    emit(out, &body)?;
    Ok(if not_converged { 2 } else { 0 })
}

#[allow(clippy::too_many_arguments)]
fn cmd_exceptional(
    n: usize,
    g: f64,
    delta: f64,
    vectors: Option<usize>,
    tol_j: f64,
    tol_f: f64,
    tol: Option<f64>,
    mmax: Option<usize>,
    out: Option<PathBuf>,
    format: Format,
) -> Result<u8, CliError> {
    if tol_j <= 0.0 || tol_f <= 0.0 {
        return Err(CliError::Usage("--tol-j and --tol-f must be positive".into()));
    }
    let params = ModelParams::new(g, delta).map_err(|e| CliError::Usage(e.to_string()))?;
    let opts = solver_options(tol, mmax)?;
    let report = spectrum::classify_exceptional(n, &params, tol_j, tol_f, &opts)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let vecs = match vectors {
        Some(len) => {
            if len <= n + 2 {
                return Err(CliError::Usage(format!(
                    "--vectors must exceed n + 2 = {}",
                    n + 2
                )));
            }
            match spectrum::exceptional_eigenvectors(n, &params, &report, len, &opts) {
                Ok(v) => v,
                Err(spectrum::SpectrumError::NotAnEigenvectorCase(_)) => Vec::new(),
                Err(e) => return Err(CliError::Usage(e.to_string())),
            }
        }
        None => Vec::new(),
    };
    let vector_kind = |i: usize| {
        if report.case_label == spectrum::CaseLabel::JuddDegenerate && i == 0 {
            "judd"
        } else {
            "tail"
        }
    };

    let body = match format {
        Format::Csv => {
            let mut s = String::from("n,judd_value,tail_value,case_label,degenerate\n");
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                n,
                fmt_f64(report.judd_value),
                fmt_f64(report.tail_value),
                report.case_label.as_str(),
                report.degenerate,
            ));
            if !vecs.is_empty() {
                s.push_str("vector,index,value\n");
                for (vi, v) in vecs.iter().enumerate() {
                    for (k, q) in v.iter().enumerate() {
                        s.push_str(&format!("{},{},{}\n", vector_kind(vi), k, fmt_f64(*q)));
                    }
                }
            }
            s
        }
        Format::Json => {
            let vecs_json: Vec<_> = vecs
                .iter()
                .enumerate()
                .map(|(vi, v)| json!({"kind": vector_kind(vi), "coefficients": v}))
                .collect();
            serde_json::to_string_pretty(&json!({
                "report": report,
                "vectors": vecs_json,
            }))
            .expect("serializable")
                + "\n"
        }
    };
    emit(out, &body)?;
    Ok(if report.converged { 0 } else { 2 })
}

#[allow(clippy::too_many_arguments)]
fn cmd_curves(
    n: usize,
    field: FieldArg,
    region: &[f64],
    grid: &[usize],
    tol_j: f64,
    tol: Option<f64>,
    mmax: Option<usize>,
    out: Option<PathBuf>,
    format: Format,
) -> Result<u8, CliError> {
    if region.len() != 4 {
        return Err(CliError::Usage("--region requires GMIN GMAX DMIN DMAX".into()));
    }
    if grid.len() != 2 {
        return Err(CliError::Usage("--grid requires NX NY".into()));
    }
    let region = GridRegion::new(region[0], region[1], region[2], region[3], grid[0], grid[1])
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let opts = solver_options(tol, mmax)?;

    let kinds: &[FieldKind] = match field {
        FieldArg::Judd => &[FieldKind::Judd],
        FieldArg::Tail => &[FieldKind::Tail],
        FieldArg::Both => &[FieldKind::Judd, FieldKind::Tail],
    };
    let mut curves = Vec::new();
    for &k in kinds {
        let mut c = atlas::trace_curves(n, &region, k, tol_j, &opts)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        curves.append(&mut c);
    }

    let body = match format {
        Format::Csv => {
            let mut s = String::from("n,field,branch_id,closed,on_judd,g,delta\n");
            for c in &curves {
                for &(g, d) in &c.points {
                    s.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        c.n,
                        c.field_kind.as_str(),
                        c.branch_id,
                        c.closed,
                        c.on_judd,
                        fmt_f64(g),
                        fmt_f64(d),
                    ));
                }
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(&curves).expect("serializable") + "\n",
    };
    emit(out, &body)?;
    Ok(0)
}

fn cmd_oracle(
    g: f64,
    delta: f64,
    ntrunc: usize,
    levels: usize,
    out: Option<PathBuf>,
    format: Format,
) -> Result<u8, CliError> {
    if levels == 0 || levels > 2 * (ntrunc + 1) {
        return Err(CliError::Usage(format!(
            "--levels must be in 1..={}",
            2 * (ntrunc + 1)
        )));
    }
    let params = ModelParams::new(g, delta).map_err(|e| CliError::Usage(e.to_string()))?;
    let spec = oracle::eigenvalues(&oracle::build_matrix(&params, ntrunc), 1e-12)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let mut n_list: Vec<usize> = [ntrunc / 4, ntrunc / 2, ntrunc]
        .into_iter()
        .filter(|&n| 2 * (n + 1) >= levels)
        .collect();
    n_list.dedup();
    let table = oracle::convergence_study(&params, &n_list, levels, 1e-12)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let body = match format {
        Format::Csv => {
            let mut s = String::from("kind,n_trunc,index,value\n");
            for (i, e) in spec.eigenvalues.iter().take(levels).enumerate() {
                s.push_str(&format!("eigenvalue,{},{},{}\n", ntrunc, i, fmt_f64(*e)));
            }
            for (nt, row) in &table {
                for (i, e) in row.iter().enumerate() {
                    s.push_str(&format!("convergence,{},{},{}\n", nt, i, fmt_f64(*e)));
                }
            }
            s
        }
        Format::Json => {
            let conv: Vec<_> = table
                .iter()
                .map(|(nt, row)| json!({"n_trunc": nt, "levels": row}))
                .collect();
            serde_json::to_string_pretty(&json!({
                "n_trunc": ntrunc,
                "eigenvalues": spec.eigenvalues[..levels.min(spec.eigenvalues.len())],
                "offdiag_norm_final": spec.offdiag_norm_final,
                "convergence": conv,
            }))
            .expect("serializable")
                + "\n"
        }
    };
    emit(out, &body)?;
    Ok(0)
}

fn flags_str(f: &spectrum::RootFlags) -> String {
    let mut parts = Vec::new();
    if f.near_integer_x {
        parts.push("near_integer_x");
    }
    if f.near_negative_integer_x {
        parts.push("near_negative_integer_x");
    }
    if f.unvalidated {
        parts.push("unvalidated");
    }
    parts.join(";")
}

/// Shortest round-trip float formatting, capped at 15 significant digits for
/// reproducible diffs.
fn fmt_f64(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let shortest = format!("{v}");
    let mantissa = shortest.split(['e', 'E']).next().unwrap_or(&shortest);
    let sig_digits = mantissa
        .trim_start_matches('-')
        .trim_start_matches('0')
        .trim_start_matches('.')
        .trim_start_matches('0')
        .chars()
        .filter(|c| c.is_ascii_digit())
        .count();
    if sig_digits <= 15 {
        shortest
    } else {
        format!("{v:.14e}")
    }
}

/// Writes atomically when a path is given (temp file + rename), else stdout.
fn emit(out: Option<PathBuf>, body: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
            let mut tmp = match dir {
                Some(d) => tempfile::NamedTempFile::new_in(d)?,
                None => tempfile::NamedTempFile::new_in(".")?,
            };
            tmp.write_all(body.as_bytes())?;
            tmp.persist(&path).map_err(|e| CliError::Io(e.error))?;
            Ok(())
        }
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
            Ok(())
        }
    }
}
