use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use log::warn;
use mflab_core::bench::{fit_slope, run_sweep, verify_bounds, write_rates_csv, write_slopes_csv};
use mflab_core::expansion::{prop3_check, SeriesConfig};
use mflab_core::hartree::limit_rdm;
use mflab_core::linalg::CMatrix;
use mflab_core::quantum::{build_hamiltonian, evolve};
use mflab_core::random::{random_sector_hermitian, rng};
use mflab_core::selftest;
use mflab_core::symspace::{partial_trace, trace_distance};
use mflab_core::wickcalc::PolySymbol;
use mflab_core::Error;

use crate::config::{ConfigError, Resolved};

/// Failure of a subcommand, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Run the configured sweep, write both CSV files under `out`, print a summary.
pub fn cmd_sweep(cfg: &Resolved, rates: &Path, slopes: &Path, w: &mut impl Write) -> CliResult<()> {
    let outcome = run_sweep(&cfg.plan)?;
    for dir in [rates.parent(), slopes.parent()].into_iter().flatten() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        }
    }
    let mut f = create(rates)?;
    write_rates_csv(&outcome.records, &mut f)?;
    f.flush()?;

    let mut fits = Vec::new();
    for &p in &cfg.plan.ps {
        match fit_slope(&outcome.records, p) {
            Ok(fit) => {
                writeln!(
                    w,
                    "{} p={}: slope {:.4} intercept {:.4} rms residual {:.3e} ({} points)",
                    fit.family,
                    p,
                    fit.slope,
                    fit.intercept,
                    fit.residual,
                    fit.points.len()
                )?;
                fits.push(fit);
            }
            Err(e @ (Error::ExactFamily | Error::InsufficientData(_))) => {
                writeln!(w, "{} p={p}: no slope ({e})", cfg.family.family)?;
            }
            Err(e) => return Err(e.into()),
        }
    }
    let mut f = create(slopes)?;
    write_slopes_csv(&fits, &mut f)?;
    f.flush()?;

    let report = verify_bounds(&outcome.records, &cfg.family, cfg.series.c);
    let checked = report
        .cells
        .iter()
        .filter(|c| c.reference.is_some())
        .count();
    let broken = report.cells.iter().filter(|c| !c.holds).count();
    writeln!(
        w,
        "closed-form checks at t = 0: {checked} cells, {broken} violated; \
         empirical max distance·α(n)/C^p = {:.4e} (C = {})",
        report.envelope, cfg.series.c
    )?;
    writeln!(w, "wrote {} and {}", rates.display(), slopes.display())?;
    if !outcome.failures.is_empty() {
        for f in &outcome.failures {
            warn!("cell n = {} t = {:?}: {}", f.n, f.t, f.message);
        }
        return Err(CliError::Numeric(format!(
            "{} sweep cell(s) failed",
            outcome.failures.len()
        )));
    }
    if broken > 0 {
        return Err(CliError::Numeric(format!(
            "{broken} closed-form check(s) violated"
        )));
    }
    Ok(())
}

fn write_matrix(w: &mut impl Write, m: &CMatrix) -> io::Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| {
                let z = m[(i, j)];
                format!("{:+.12e}{:+.12e}i", z.re, z.im)
            })
            .collect();
        writeln!(w, "  {}", row.join("  "))?;
    }
    Ok(())
}

/// Print `ρ_n^{(p)}(t)`, its mean-field limit and their trace distance.
pub fn cmd_rdm(cfg: &Resolved, n: usize, p: usize, t: f64, w: &mut impl Write) -> CliResult<()> {
    if !t.is_finite() {
        return Err(CliError::Config(format!("time {t} is not finite")));
    }
    let gamma = cfg.family.family.gamma();
    if p == 0 || n < gamma * p {
        return Err(CliError::Config(format!(
            "{} states need 1 ≤ p and n ≥ {gamma}·p, got n = {n}, p = {p}",
            cfg.family.family
        )));
    }
    let state = cfg.family.prepare(n)?;
    let h = build_hamiltonian(&cfg.model, n)?;
    let reduced = partial_trace(&evolve(&state.rho, &h, t)?, p)?;
    let limit = limit_rdm(&state.measure, p, t, cfg.quadrature, &cfg.flow, &cfg.model)?;
    let distance = trace_distance(&reduced, &limit)?;
    writeln!(w, "family {} n = {n} p = {p} t = {t}", cfg.family.family)?;
    writeln!(w, "basis (occupation numbers):")?;
    for nu in reduced.basis().states() {
        writeln!(w, "  {nu:?}")?;
    }
    writeln!(w, "rho_n:")?;
    write_matrix(w, reduced.matrix())?;
    writeln!(w, "rho_limit:")?;
    write_matrix(w, limit.matrix())?;
    writeln!(w, "distance {distance:.16e}")?;
    Ok(())
}

/// Run every randomized suite; `Ok(false)` when any case fails.
pub fn cmd_selftest(seed: u64, w: &mut impl Write) -> CliResult<bool> {
    let reports = selftest::run_all(seed)?;
    for r in &reports {
        writeln!(w, "{r}")?;
    }
    let ok = reports.iter().all(|r| r.passed());
    writeln!(
        w,
        "selftest seed {seed}: {}",
        if ok { "PASS" } else { "FAIL" }
    )?;
    Ok(ok)
}

/// Truncated Dyson series against exact propagation for a random observable
/// on `∨^p` (seeded) and the configured state at `n` particles.
pub fn cmd_expansion(
    cfg: &Resolved,
    n: usize,
    p: usize,
    t: f64,
    kmax: Option<usize>,
    seed: u64,
    w: &mut impl Write,
) -> CliResult<bool> {
    let series = SeriesConfig {
        kmax: kmax.unwrap_or(cfg.series.kmax),
        ..cfg.series
    };
    if series.kmax > mflab_core::expansion::MAX_ORDER {
        return Err(CliError::Config(format!(
            "Kmax = {} exceeds the supported order {}",
            series.kmax,
            mflab_core::expansion::MAX_ORDER
        )));
    }
    if p == 0 || p > n {
        return Err(CliError::Config(format!(
            "need 1 ≤ p ≤ n, got n = {n}, p = {p}"
        )));
    }
    let state = cfg.family.prepare(n)?;
    let mut r = rng(seed);
    let a = PolySymbol::from_operator(&random_sector_hermitian(&mut r, p, cfg.model.d()));
    let report = prop3_check(&state.rho, &a, t, &cfg.model, &series)?;
    writeln!(
        w,
        "family {} n = {n} p = {p} t = {t} Kmax = {} |A| = {:.6e} |Q| = {:.6e}",
        cfg.family.family,
        series.kmax,
        a.kernel_norm(),
        cfg.model.qnorm()
    )?;
    writeln!(w, "k,term_re,term_im,|term|,envelope,partial_re,partial_im")?;
    for (k, ((term, env), sum)) in report
        .terms
        .iter()
        .zip(&report.term_envelopes)
        .zip(&report.partial_sums)
        .enumerate()
    {
        writeln!(
            w,
            "{k},{:.16e},{:.16e},{:.6e},{:.6e},{:.16e},{:.16e}",
            term.re,
            term.im,
            term.norm(),
            env,
            sum.re,
            sum.im
        )?;
    }
    writeln!(
        w,
        "exact {:.16e} {:+.16e}i",
        report.exact.re, report.exact.im
    )?;
    writeln!(w, "residual {:.6e}", report.residual)?;
    writeln!(
        w,
        "bound C0 C^p |A| / n {:.6e} (C0 = {:.6e})",
        report.bound, report.constant
    )?;
    writeln!(w, "truncation envelope {:.6e}", report.truncation)?;
    let ok = report.passed();
    writeln!(
        w,
        "residual within bound: {}; terms within envelopes: {}",
        report.residual_ok(),
        report.terms_ok()
    )?;
    Ok(ok)
}
