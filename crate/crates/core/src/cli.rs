//! Command-line front end.
//!
//! Exit codes: `0` success, `1` I/O or other runtime failure, `2` bad
//! configuration or arguments, `3` a protocol invariant (or the oracle
//! cross-check) failed, `4` the request was refused (chain too large for the
//! full-space engine, or a scenario the coherence observable does not cover).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::chain::{parse_chain_spec, ChainSpec};
use crate::error::{Error, Result};
use crate::evolution::{wrap_phase, ProtocolState};
use crate::oracle::{compare_with_record, effective_cap, EngineComparison, FullSpaceEngine};
use crate::protocol::{
    fit_scale, invert_record, scan_tau, with_coherence, Source, TransferProtocol, TransferRecord,
};
use crate::trace::{write_trace_csv, TraceRow};

/// Largest engine disagreement `crosscheck` accepts.
pub const CROSSCHECK_TOL: f64 = 1e-9;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;
pub const EXIT_REFUSED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "spinbus", version, about = "Iterative end-gate state transfer on dipolar spin chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Chain configuration (JSON)
    #[arg(long)]
    spec: PathBuf,
    /// Number of iterations
    #[arg(long = "n", default_value_t = 100)]
    n_iter: usize,
    /// CSV trace output
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summary output (the summary is always printed to stdout)
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Full JSON export of the transfer record
    #[arg(long)]
    json: Option<PathBuf>,
    /// Remove the known e^{i n theta} from reported vacuum amplitudes
    #[arg(long)]
    phase_correction: bool,
    /// Also run the full-space engine and fail if it disagrees
    #[arg(long)]
    oracle_crosscheck: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transfer the state of a site to the last spin
    Transfer {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        source: usize,
    },
    /// Deliver the last spin's state to a site (data bus / selective excitation)
    Inverse {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        target: usize,
    },
    /// Generate (|j> + |k>)/sqrt(2) from the last spin
    Entangle {
        #[command(flatten)]
        common: Common,
        /// Sites as "j,k"
        #[arg(long, value_parser = parse_pair)]
        pair: (usize, usize),
        /// Add the coherence observable C_n (4-spin, pair 1,4)
        #[arg(long)]
        compute_cn: bool,
    },
    /// Final transfer probability over a grid of evolution times
    ScanTau {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        source: usize,
        /// Evolution times in ms, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        taus_ms: Vec<f64>,
    },
    /// Fit measured data as a scaled copy of p_n (or C_n)
    FitScale {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "pair")]
        source: Option<usize>,
        #[arg(long, value_parser = parse_pair)]
        pair: Option<(usize, usize)>,
        /// CSV with columns n,value
        #[arg(long)]
        data: PathBuf,
        /// Fit against C_n instead of p_n
        #[arg(long)]
        compute_cn: bool,
    },
    /// Compare the subspace engine against the full-space engine
    Crosscheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "pair")]
        source: Option<usize>,
        #[arg(long, value_parser = parse_pair)]
        pair: Option<(usize, usize)>,
    },
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected \"j,k\"")?;
    let a = a.trim().parse().map_err(|_| format!("bad site \"{a}\""))?;
    let b = b.trim().parse().map_err(|_| format!("bad site \"{b}\""))?;
    Ok((a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Transfer,
    Inverse,
    Entangle,
    ScanTau,
    FitScale,
    Crosscheck,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Transfer => "transfer",
            Mode::Inverse => "inverse",
            Mode::Entangle => "entangle",
            Mode::ScanTau => "scan-tau",
            Mode::FitScale => "fit-scale",
            Mode::Crosscheck => "crosscheck",
        }
    }
}

/// Everything needed to run one scenario.
#[derive(Debug, Clone)]
pub struct ScenarioRequest {
    pub mode: Mode,
    pub spec_path: PathBuf,
    pub source: Option<Source>,
    pub n_iter: usize,
    pub taus_ms: Vec<f64>,
    pub data_path: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub phase_correction: bool,
    pub compute_cn: bool,
    pub oracle_crosscheck: bool,
}

impl ScenarioRequest {
    fn from_command(command: Command) -> Result<Self> {
        let (mode, common, source, taus_ms, data_path, compute_cn) = match command {
            Command::Transfer { common, source } => {
                (Mode::Transfer, common, Some(Source::Site(source)), vec![], None, false)
            }
            Command::Inverse { common, target } => {
                (Mode::Inverse, common, Some(Source::Site(target)), vec![], None, false)
            }
            Command::Entangle { common, pair, compute_cn } => (
                Mode::Entangle,
                common,
                Some(Source::Pair(pair.0, pair.1)),
                vec![],
                None,
                compute_cn,
            ),
            Command::ScanTau { common, source, taus_ms } => {
                (Mode::ScanTau, common, Some(Source::Site(source)), taus_ms, None, false)
            }
            Command::FitScale { common, source, pair, data, compute_cn } => (
                Mode::FitScale,
                common,
                either_source(source, pair)?,
                vec![],
                Some(data),
                compute_cn,
            ),
            Command::Crosscheck { common, source, pair } => {
                (Mode::Crosscheck, common, either_source(source, pair)?, vec![], None, false)
            }
        };
        Ok(Self {
            mode,
            spec_path: common.spec,
            source,
            n_iter: common.n_iter,
            taus_ms,
            data_path,
            out: common.out,
            summary: common.summary,
            json: common.json,
            phase_correction: common.phase_correction,
            compute_cn,
            oracle_crosscheck: common.oracle_crosscheck,
        })
    }

    /// Checks mode-specific fields against the loaded chain.
    pub fn validate(&self, spec: &ChainSpec) -> Result<()> {
        let n = spec.n_spins();
        let site_ok = |j: usize| (1..=n).contains(&j);
        match self.source {
            None => return Err(Error::Config(format!("{} needs --source or --pair", self.mode.name()))),
            Some(Source::Site(j)) if !site_ok(j) => {
                return Err(Error::InvalidSite(format!("site {j} outside 1..={n}")))
            }
            Some(Source::Site(j)) if j == n => {
                return Err(Error::InvalidSite(format!("site {j} is the chain end")))
            }
            Some(Source::Pair(j, k)) if !site_ok(j) || !site_ok(k) || j == k => {
                return Err(Error::InvalidSite(format!("pair ({j},{k}) invalid for 1..={n}")))
            }
            _ => {}
        }
        if self.n_iter == 0 && self.mode != Mode::FitScale {
            return Err(Error::Config("--n must be at least 1".into()));
        }
        if self.mode == Mode::ScanTau && (self.taus_ms.is_empty() || self.taus_ms.iter().any(|t| !t.is_finite() || *t <= 0.0)) {
            return Err(Error::Config("--taus-ms must be a nonempty list of positive times".into()));
        }
        Ok(())
    }
}

fn either_source(source: Option<usize>, pair: Option<(usize, usize)>) -> Result<Option<Source>> {
    Ok(match (source, pair) {
        (Some(j), None) => Some(Source::Site(j)),
        (None, Some((j, k))) => Some(Source::Pair(j, k)),
        _ => return Err(Error::Config("give exactly one of --source or --pair".into())),
    })
}

/// Maps an error onto the documented exit codes.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::Config(_) | Error::InvalidSite(_) | Error::Contract(_) => EXIT_CONFIG,
        Error::Invariant { .. } => EXIT_INVARIANT,
        Error::Size { .. } | Error::Unsupported(_) => EXIT_REFUSED,
        _ => EXIT_RUNTIME,
    }
}

/// Parses arguments, runs the scenario and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = ScenarioRequest::from_command(cli.command).and_then(|req| run_scenario(&req));
    match outcome {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            EXIT_OK
        }
        Err(e) => {
            match &e {
                Error::Size { .. } => eprintln!("spinbus: refusing: {e}"),
                _ => eprintln!("spinbus: {e}"),
            }
            exit_code(&e)
        }
    }
}

fn load_spec(path: &Path) -> Result<ChainSpec> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_chain_spec(&text)
}

/// Runs one scenario, writes the requested artifacts and returns the summary.
pub fn run_scenario(req: &ScenarioRequest) -> Result<Value> {
    let started = Instant::now();
    let spec = load_spec(&req.spec_path)?;
    req.validate(&spec)?;
    let source = req.source.expect("validated");

    let mut summary = Map::new();
    summary.insert("mode".into(), json!(req.mode.name()));
    summary.insert("n_spins".into(), json!(spec.n_spins()));
    summary.insert("tau_ms".into(), json!(spec.tau_ms()));

    let mut record_for_crosscheck = None;
    match req.mode {
        Mode::Transfer | Mode::Entangle => {
            let mut record = TransferProtocol::new(&spec)?.run(&spec, source, req.n_iter)?;
            if req.compute_cn {
                record = with_coherence(&record)?;
                summary.insert("final_coherence".into(), json!(record.trace.last().and_then(|p| p.coherence)));
            }
            write_rows(req, &record.trace_rows(), spec.n_spins())?;
            describe_record(&mut summary, &record);
            if let Source::Site(_) = source {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                let (vac, exc) =
                    record.output_qubit(Complex64::new(h, 0.0), Complex64::new(h, 0.0), req.phase_correction)?;
                summary.insert(
                    "output_qubit".into(),
                    json!({ "input": "(|0> + |1>)/sqrt(2)", "vacuum": [vac.re, vac.im],
                            "excited": [exc.re, exc.im], "phase_corrected": req.phase_correction }),
                );
            }
            export_json(req, &record)?;
            record_for_crosscheck = Some(record);
        }
        Mode::Inverse => {
            let record = TransferProtocol::new(&spec)?.run(&spec, source, req.n_iter)?;
            let inverse = invert_record(&record)?;
            let n = spec.n_spins();
            let target = record.initial_state()?;
            let end = ProtocolState::site(n, n)?;
            let mut rows = Vec::with_capacity(req.n_iter);
            for m in 1..=req.n_iter {
                let delivered = inverse.truncated(m).apply(&end)?;
                rows.push(TraceRow {
                    n: m,
                    p: target.overlap(&delivered).norm_sqr(),
                    theta: record.theta,
                    sites: delivered.amplitudes().iter().skip(1).copied().collect(),
                    coherence: None,
                });
            }
            write_rows(req, &rows, n)?;
            describe_record(&mut summary, &record);
            let fidelity = rows.last().map_or(0.0, |r| r.p);
            summary.insert("delivery_fidelity".into(), json!(fidelity));
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let alpha = if req.phase_correction {
                record.vacuum_phase().accumulated(req.n_iter) * h
            } else {
                Complex64::new(h, 0.0)
            };
            let out = inverse.apply(&ProtocolState::qubit_on_site(n, n, alpha, Complex64::new(h, 0.0))?)?;
            let Source::Site(j) = source else { unreachable!() };
            let (vac, exc) = (out.vacuum_amplitude(), out.site_amplitude(j));
            summary.insert(
                "delivered_qubit".into(),
                json!({ "input": "(|0> + |1>)/sqrt(2) on the last spin", "site": j,
                        "vacuum": [vac.re, vac.im], "excited": [exc.re, exc.im],
                        "phase_corrected": req.phase_correction }),
            );
            export_json(req, &record)?;
            record_for_crosscheck = Some(record);
        }
        Mode::ScanTau => {
            let Source::Site(j) = source else { unreachable!() };
            let grid: Vec<f64> = req.taus_ms.iter().map(|t| t / 1e3).collect();
            let scan = scan_tau(&spec, j, req.n_iter, &grid)?;
            if let Some(path) = &req.out {
                let mut w = csv::Writer::from_path(path)?;
                w.write_record(["tau_ms", "p_n"])?;
                for (tau, p) in &scan.rows {
                    w.write_record([format!("{:.16e}", tau * 1e3), format!("{p:.16e}")])?;
                }
                w.flush()?;
            }
            summary.insert("n_iter".into(), json!(req.n_iter));
            summary.insert("best_tau_ms".into(), json!(scan.best_tau * 1e3));
            summary.insert("final_p".into(), json!(scan.best_p));
            summary.insert(
                "table".into(),
                json!(scan.rows.iter().map(|(t, p)| json!({"tau_ms": t * 1e3, "p_n": p})).collect::<Vec<_>>()),
            );
        }
        Mode::FitScale => {
            let data = read_measurements(req.data_path.as_deref().expect("fit-scale has --data"))?;
            let max_n = data.iter().map(|(n, _)| *n).max().unwrap_or(0);
            let mut record = TransferProtocol::new(&spec)?.run(&spec, source, max_n.max(1))?;
            if req.compute_cn {
                record = with_coherence(&record)?;
            }
            let model = data
                .iter()
                .map(|&(n, _)| {
                    let pt = &record.trace[n - 1];
                    if req.compute_cn {
                        pt.coherence.unwrap_or(0.0)
                    } else {
                        pt.p
                    }
                })
                .collect::<Vec<_>>();
            let values: Vec<f64> = data.iter().map(|(_, v)| *v).collect();
            let scale = fit_scale(&model, &values)?;
            write_rows(req, &record.trace_rows(), spec.n_spins())?;
            describe_record(&mut summary, &record);
            summary.insert("observable".into(), json!(if req.compute_cn { "C_n" } else { "p_n" }));
            summary.insert("scale".into(), json!(scale));
        }
        Mode::Crosscheck => {
            let cmp = crosscheck(&spec, source, req.n_iter)?;
            insert_comparison(&mut summary, &cmp);
            check_comparison(&cmp)?;
        }
    }

    if req.oracle_crosscheck {
        if let Some(record) = &record_for_crosscheck {
            let engine = FullSpaceEngine::new(&spec)?;
            let cmp = compare_with_record(&engine, record)?;
            insert_comparison(&mut summary, &cmp);
            check_comparison(&cmp)?;
        }
    }

    summary.insert("wall_time_s".into(), json!(started.elapsed().as_secs_f64()));
    let summary = Value::Object(summary);
    if let Some(path) = &req.summary {
        fs::write(path, serde_json::to_string_pretty(&summary)?)?;
    }
    Ok(summary)
}

/// Runs both engines on the same scenario. Chains above the oracle cap are
/// refused with [`Error::Size`].
pub fn crosscheck(spec: &ChainSpec, source: Source, n_iter: usize) -> Result<EngineComparison> {
    let cap = effective_cap(spec);
    if spec.n_spins() > cap {
        return Err(Error::Size {
            what: "oracle cross-check",
            size: spec.n_spins(),
            cap,
        });
    }
    let record = TransferProtocol::new(spec)?.run(spec, source, n_iter)?;
    let engine = FullSpaceEngine::with_cap(spec, cap)?;
    compare_with_record(&engine, &record)
}

fn check_comparison(cmp: &EngineComparison) -> Result<()> {
    if cmp.max_deviation() > CROSSCHECK_TOL {
        return Err(Error::invariant(
            "oracle equivalence",
            format!("engines differ by {:e} (> {CROSSCHECK_TOL:e})", cmp.max_deviation()),
        ));
    }
    Ok(())
}

fn insert_comparison(summary: &mut Map<String, Value>, cmp: &EngineComparison) {
    summary.insert(
        "crosscheck".into(),
        json!({
            "iterations": cmp.iterations,
            "max_deviation": cmp.max_deviation(),
            "max_amplitude_deviation": cmp.max_amplitude_deviation,
            "max_gate_deviation": cmp.max_gate_deviation,
            "max_leakage": cmp.max_leakage,
        }),
    );
}

fn describe_record(summary: &mut Map<String, Value>, record: &TransferRecord) {
    let source = match record.source {
        Source::Site(j) => json!(j),
        Source::Pair(j, k) => json!([j, k]),
    };
    summary.insert("source".into(), source);
    summary.insert("n_iter".into(), json!(record.iterations()));
    summary.insert("final_p".into(), json!(record.final_p()));
    summary.insert("theta".into(), json!(record.theta));
    summary.insert(
        "accumulated_phase".into(),
        json!(wrap_phase(record.theta * record.iterations() as f64)),
    );
}

fn write_rows(req: &ScenarioRequest, rows: &[TraceRow], n_spins: usize) -> Result<()> {
    if let Some(path) = &req.out {
        write_trace_csv(rows, n_spins, fs::File::create(path)?)?;
    }
    Ok(())
}

fn export_json(req: &ScenarioRequest, record: &TransferRecord) -> Result<()> {
    if let Some(path) = &req.json {
        fs::write(path, record.to_json()?)?;
    }
    Ok(())
}

/// Reads `n,value` rows.
fn read_measurements(path: &Path) -> Result<Vec<(usize, f64)>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let key = format!("data row {}", i + 1);
        if rec.len() < 2 {
            return Err(Error::parse(key, "expected n,value"));
        }
        let n: usize = rec[0].trim().parse().map_err(|_| Error::parse(&key, "bad iteration index"))?;
        let v: f64 = rec[1].trim().parse().map_err(|_| Error::parse(&key, "bad value"))?;
        if n == 0 {
            return Err(Error::parse(key, "iterations start at 1"));
        }
        rows.push((n, v));
    }
    if rows.is_empty() {
        return Err(Error::parse("data", "no measurements"));
    }
    Ok(rows)
}
