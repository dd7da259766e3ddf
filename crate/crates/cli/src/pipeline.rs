//! End-to-end runs: model, guiding state, moments, optional extrapolation,
//! energy estimate. Each stage's outcome is recorded in `manifest.json`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use tn_gsee::chebyshev::{self, MomentSequence, RunOptions};
use tn_gsee::dmrg::{self, DmrgConfig};
use tn_gsee::gsee::{self, GseeOptions, GseeResult};
use tn_gsee::hamiltonian::NormalizedHamiltonian;
use tn_gsee::lp;
use tn_gsee::mps::{self, Mps};
use tn_gsee::oracle::{self, DenseSystem};
use tn_gsee::{container, Error, Result};

use crate::config::RunConfig;
use crate::io;

pub const MANIFEST: &str = "manifest.json";
pub const INIT_STATE: &str = "init.tnc";
pub const INIT_META: &str = "init.json";
pub const MOMENTS: &str = "moments.csv";
pub const EXTRAPOLATED: &str = "extrapolated.csv";
pub const GSEE: &str = "gsee.json";
pub const CUMULATIVE: &str = "cumulative.csv";
pub const DIAGNOSTICS: &str = "diagnostics.csv";
pub const CHECKPOINTS: &str = "checkpoints";

/// Stable short name of an error kind.
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Structural(_) => "structural",
        Error::Parameter(_) => "parameter",
        Error::Domain(_) => "domain",
        Error::Precondition(_) => "precondition",
        Error::Capacity(_) => "capacity",
        Error::Numerical(_) => "numerical",
        Error::OutsideWindow(_) => "outside_window",
        Error::Format { .. } => "format",
        Error::Io { .. } => "io",
        Error::Json(_) => "json",
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    /// `ok`, `error` or `skipped`.
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub stages: Vec<StageRecord>,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InitReport {
    pub config_hash: String,
    pub source: String,
    pub n_sites: usize,
    pub bond_dims: Vec<usize>,
    /// `⟨ψ|H|ψ⟩` in normalized units.
    pub energy: f64,
    pub energy_raw: f64,
    pub sweep_energies: Vec<f64>,
    pub converged: bool,
    /// Oracle overlap with the ground space, when the system is small enough.
    pub chi: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GseeReport {
    pub config_hash: String,
    pub interval: (f64, f64),
    pub interval_raw: (f64, f64),
    pub energy: f64,
    pub energy_raw: f64,
    pub chi: f64,
    /// Where `chi` came from: `config`, `oracle` or `dmrg_reference`.
    pub chi_source: String,
    pub eta: f64,
    pub delta: f64,
    pub degree: usize,
    pub scale: f64,
    /// Last directly computed moment index.
    pub split: usize,
    pub exact_energy: Option<f64>,
    pub contains_exact: Option<bool>,
}

impl GseeReport {
    pub fn new(res: &GseeResult, hash: &str, chi_source: &str, split: usize, exact: Option<f64>) -> Self {
        let s = res.scale_back;
        GseeReport {
            config_hash: hash.to_string(),
            interval: res.interval,
            interval_raw: (res.interval.0 * s, res.interval.1 * s),
            energy: res.energy(),
            energy_raw: res.energy_raw(),
            chi: res.chi_used,
            chi_source: chi_source.to_string(),
            eta: res.eta,
            delta: res.delta,
            degree: res.degree,
            scale: s,
            split,
            exact_energy: exact,
            contains_exact: exact.map(|e| res.contains(e)),
        }
    }
}

/// What [`run_pipeline`] produced.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub config_hash: String,
    pub moments: MomentSequence,
    pub gsee: Option<GseeReport>,
}

/// Last stage to execute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Until {
    Init,
    Moments,
    All,
}

struct Recorder {
    stages: Vec<StageRecord>,
    outputs: Vec<String>,
}

impl Recorder {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Vec<String>) -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        log::info!("stage {name}");
        let out = f(&mut self.outputs);
        let seconds = t0.elapsed().as_secs_f64();
        let (status, kind, msg) = match &out {
            Ok(_) => ("ok", None, None),
            Err(e) => ("error", Some(error_kind(e).to_string()), Some(e.to_string())),
        };
        self.stages.push(StageRecord {
            name: name.into(),
            status: status.into(),
            error_kind: kind,
            error: msg,
            seconds,
        });
        out
    }

    fn skip(&mut self, name: &str) {
        self.stages.push(StageRecord {
            name: name.into(),
            status: "skipped".into(),
            error_kind: None,
            error: None,
            seconds: 0.0,
        });
    }
}

/// Exact data for systems within the dense limit.
struct OracleData {
    lambda0: f64,
    moments: Vec<f64>,
}

fn oracle_data(h: &NormalizedHamiltonian, psi: &Mps, d: usize) -> Result<OracleData> {
    let sys = DenseSystem::new(h)?;
    let (lambda0, _) = oracle::dense_ground(&sys)?;
    let moments = oracle::dense_cheb_moments(&sys, &psi.to_dense()?, d)?;
    Ok(OracleData { lambda0, moments })
}

/// `|⟨ψ|φ⟩|` with `φ` a DMRG ground state at `bond`.
pub fn reference_overlap(h: &NormalizedHamiltonian, psi: &Mps, dmrg_cfg: &DmrgConfig, bond: usize) -> Result<f64> {
    let cfg = DmrgConfig {
        chi_init: bond,
        ..dmrg_cfg.clone()
    };
    let reference = dmrg::dmrg_ground(h, &cfg)?;
    Ok(mps::fidelity(psi, &reference.state)?.sqrt())
}

/// Runs the pipeline described by `cfg`. `base` resolves relative paths in
/// the model spec.
pub fn run_pipeline(cfg: &RunConfig, base: Option<&Path>) -> Result<RunSummary> {
    run_until(cfg, base, Until::All)
}

pub fn run_until(cfg: &RunConfig, base: Option<&Path>, until: Until) -> Result<RunSummary> {
    cfg.validate()?;
    let t0 = Instant::now();
    let hash = cfg.hash();
    let short = cfg.short_hash();
    let out_dir = cfg.out_dir.clone();
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let mut rec = Recorder {
        stages: Vec::new(),
        outputs: Vec::new(),
    };
    let result = stages(cfg, base, until, &hash, &short, &out_dir, &mut rec);
    let manifest = Manifest {
        tool: "tn-gsee".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: hash.clone(),
        config: serde_json::to_value(cfg)?,
        stages: rec.stages,
        outputs: rec.outputs,
        wall_time_s: t0.elapsed().as_secs_f64(),
    };
    io::write_json(&out_dir.join(MANIFEST), &manifest)?;
    let (moments, gsee) = result?;
    Ok(RunSummary {
        out_dir,
        config_hash: hash,
        moments,
        gsee,
    })
}

#[allow(clippy::too_many_arguments)]
fn stages(
    cfg: &RunConfig,
    base: Option<&Path>,
    until: Until,
    hash: &str,
    short: &str,
    out_dir: &Path,
    rec: &mut Recorder,
) -> Result<(MomentSequence, Option<GseeReport>)> {
    let h = rec.stage("model", |_| cfg.model.build(base))?;
    let n = h.n_sites();
    let use_oracle = cfg.oracle && n <= tn_gsee::dense_limit();

    let psi = rec.stage("init", |outputs| {
        let (state, source, sweeps, converged) = match &cfg.init_state {
            Some(path) => {
                let path = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                let s = dmrg::load_guiding_state(&path)?;
                if s.n_sites() != n {
                    return Err(Error::Structural(format!(
                        "guiding state has {} sites, the model {n}",
                        s.n_sites()
                    )));
                }
                (s, path.display().to_string(), Vec::new(), true)
            }
            None => {
                let res = dmrg::dmrg_ground(&h, &cfg.dmrg)?;
                (res.state, "dmrg".to_string(), res.sweep_energies, res.converged)
            }
        };
        let energy = h.mpo.expectation(&state)?.re;
        let chi = if use_oracle {
            let sys = DenseSystem::new(&h)?;
            Some(oracle::overlap_chi(&state, &sys)?)
        } else {
            None
        };
        container::save_mps(&state, out_dir.join(INIT_STATE))?;
        outputs.push(INIT_STATE.into());
        let report = InitReport {
            config_hash: hash.to_string(),
            source,
            n_sites: n,
            bond_dims: state.bond_dims(),
            energy,
            energy_raw: energy * h.scale,
            sweep_energies: sweeps,
            converged,
            chi,
        };
        io::write_json(&out_dir.join(INIT_META), &report)?;
        outputs.push(INIT_META.into());
        Ok((state, chi))
    })?;
    let (psi, chi_oracle) = psi;
    if until == Until::Init {
        return Ok((MomentSequence::from_moments(vec![1.0]), None));
    }

    let seq = rec.stage("moments", |outputs| {
        let opts = RunOptions {
            checkpoint_dir: (cfg.cheb.checkpoint_every > 0).then(|| out_dir.join(CHECKPOINTS)),
            resume: true,
            observer: None,
        };
        let seq = chebyshev::run_chebyshev_with(&h.mpo, &psi, &cfg.cheb, opts)?;
        io::write_file(&out_dir.join(MOMENTS), io::moments_csv(&seq, short).as_bytes())?;
        outputs.push(MOMENTS.into());
        Ok(seq)
    })?;

    let exact = if use_oracle {
        Some(rec.stage("oracle", |_| oracle_data(&h, &psi, seq.degree()))?)
    } else {
        rec.skip("oracle");
        None
    };

    rec.stage("diagnostics", |outputs| {
        let rows: Vec<Vec<String>> = (0..seq.cosine_errors.len())
            .map(|i| {
                let k = i + 1;
                let dm = |idx: usize| {
                    exact
                        .as_ref()
                        .and_then(|e| e.moments.get(idx).zip(seq.moments.get(idx)))
                        .map_or(String::new(), |(a, b)| io::num((a - b).abs()))
                };
                vec![
                    k.to_string(),
                    io::num(seq.trunc_errors.get(i).copied().unwrap_or(0.0)),
                    io::num(seq.cosine_errors[i]),
                    seq.max_bonds.get(i).map_or(String::new(), |b| b.to_string()),
                    dm(2 * k - 1),
                    dm(2 * k),
                ]
            })
            .collect();
        let text = io::table_csv(
            short,
            &["k", "trunc_err", "cos_err", "max_bond", "delta_m_odd", "delta_m_even"],
            &rows,
        );
        io::write_file(&out_dir.join(DIAGNOSTICS), text.as_bytes())?;
        outputs.push(DIAGNOSTICS.into());
        Ok(())
    })?;
    if until == Until::Moments {
        return Ok((seq, None));
    }

    let seq = match &cfg.lp {
        Some(settings) => rec.stage("extrapolate", |outputs| {
            let model = lp::fit_lp(&seq, settings.n_fit, settings.ridge)?;
            let model = lp::stabilize(&model)?;
            let ext = lp::extrapolate(&seq, &model, settings.d_target)?;
            io::write_file(&out_dir.join(EXTRAPOLATED), io::extrapolated_csv(&ext, short).as_bytes())?;
            outputs.push(EXTRAPOLATED.into());
            Ok(ext)
        })?,
        None => {
            rec.skip("extrapolate");
            seq
        }
    };

    let (chi, chi_source) = rec.stage("overlap", |_| match (cfg.gsee.chi, chi_oracle) {
        (Some(c), _) => Ok((c, "config")),
        (None, Some(c)) => Ok((c, "oracle")),
        (None, None) => Ok((
            reference_overlap(&h, &psi, &cfg.dmrg, cfg.gsee.reference_bond)?,
            "dmrg_reference",
        )),
    })?;

    let report = rec.stage("gsee", |outputs| {
        if !(chi > 0.0) {
            return Err(Error::Precondition(format!(
                "guiding state has overlap {chi} with the ground space"
            )));
        }
        let opts = GseeOptions {
            chi: chi.min(1.0),
            delta: cfg.gsee.delta,
            degree: cfg.gsee.degree.unwrap_or(seq.degree()),
            eta: cfg.gsee.eta,
            scale_back: h.scale,
        };
        let res = gsee::estimate_energy_with(&seq, &opts)?;
        io::write_file(&out_dir.join(CUMULATIVE), io::cumulative_csv(&res.c_trace, short).as_bytes())?;
        outputs.push(CUMULATIVE.into());
        let report = GseeReport::new(&res, hash, chi_source, seq.split_index(), exact.as_ref().map(|e| e.lambda0));
        io::write_json(&out_dir.join(GSEE), &report)?;
        outputs.push(GSEE.into());
        Ok(report)
    })?;
    Ok((seq, Some(report)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleReport {
    pub config_hash: String,
    pub n_sites: usize,
    pub scale: f64,
    pub lambda0: f64,
    pub lambda0_raw: f64,
    pub chi: Option<f64>,
    pub degree: Option<usize>,
}

/// Exact ground energy, and for a given state its overlap and moments.
/// Writes `oracle.json` and, with a state, `oracle_moments.csv`.
pub fn run_oracle(
    h: &NormalizedHamiltonian,
    psi: Option<&Mps>,
    degree: usize,
    hash: &str,
    out_dir: &Path,
) -> Result<OracleReport> {
    let sys = DenseSystem::new(h)?;
    let (lambda0, _) = oracle::dense_ground(&sys)?;
    let mut report = OracleReport {
        config_hash: hash.to_string(),
        n_sites: h.n_sites(),
        scale: h.scale,
        lambda0,
        lambda0_raw: lambda0 * h.scale,
        chi: None,
        degree: None,
    };
    if let Some(psi) = psi {
        let dense = psi.normalized().to_dense()?;
        report.chi = Some(oracle::overlap_chi_dense(&sys, &dense)?);
        report.degree = Some(degree);
        let seq = MomentSequence::from_moments(oracle::dense_cheb_moments(&sys, &dense, degree)?);
        let short = &hash[..hash.len().min(16)];
        io::write_file(&out_dir.join("oracle_moments.csv"), io::moments_csv(&seq, short).as_bytes())?;
    }
    io::write_json(&out_dir.join("oracle.json"), &report)?;
    Ok(report)
}
