//! Chebyshev vector recursion on MPS and moment extraction.
//!
//! `t_0 = ψ`, `t_1 = Hψ`, `t_k = 2H t_{k-1} − t_{k-2}`. Every new vector is
//! formed exactly (MPO application plus direct sum) and then truncated once.
//! From consecutive pairs the moments follow as
//!
//! ```text
//! μ_{2k}   = 2⟨t_k|t_k⟩     − μ_0
//! μ_{2k-1} = 2⟨t_k|t_{k-1}⟩ − μ_1
//! ```
//!
//! so `N` vectors give `2N + 1` moments. Only two vectors are held at a time.

use std::path::{Path, PathBuf};
use std::sync::mpsc::Sender;

use serde::{Deserialize, Serialize};

use crate::container;
use crate::error::{Error, Result};
use crate::hamiltonian::NormalizedHamiltonian;
use crate::linalg::C64;
use crate::mpo::Mpo;
use crate::mps::{add, inner, Mps};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChebRunConfig {
    /// Bond dimension cap for the Chebyshev vectors; `None` keeps every
    /// singular value above `svd_tol`.
    pub chi_mps: Option<usize>,
    /// Number of Chebyshev vectors `t_1..t_{n_max}`.
    pub n_max: usize,
    pub svd_tol: f64,
    /// Write a checkpoint every this many steps; 0 disables checkpoints.
    pub checkpoint_every: usize,
    /// Skip SVD truncation entirely so bond dimensions grow as predicted by
    /// [`bond_growth`].
    pub exact_growth: bool,
    /// Largest intermediate bond dimension allowed before truncation.
    pub max_bond_budget: usize,
    /// Per-step truncation error above which a warning is flagged, see
    /// [`delta_budget`].
    pub delta_budget: Option<f64>,
}

impl Default for ChebRunConfig {
    fn default() -> Self {
        ChebRunConfig {
            chi_mps: Some(16),
            n_max: 100,
            svd_tol: 1e-14,
            checkpoint_every: 0,
            exact_growth: false,
            max_bond_budget: 8192,
            delta_budget: None,
        }
    }
}

impl ChebRunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chi_mps == Some(0) {
            return Err(Error::Parameter("chi_mps must be at least 1".into()));
        }
        if self.n_max == 0 {
            return Err(Error::Parameter("n_max must be at least 1".into()));
        }
        if !(self.svd_tol >= 0.0) {
            return Err(Error::Parameter("svd_tol must be non-negative".into()));
        }
        if self.max_bond_budget == 0 {
            return Err(Error::Parameter("max_bond_budget must be positive".into()));
        }
        Ok(())
    }

    fn chi(&self) -> usize {
        self.chi_mps.unwrap_or(usize::MAX)
    }
}

/// Diagnostics for one recursion step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub k: usize,
    /// `Δ_t = ‖t' − t̃‖` for the untruncated `t'`.
    pub trunc_error: f64,
    /// `Δ_c = |1 − ⟨t̃|t'⟩ / (‖t̃‖‖t'‖)|`.
    pub cosine_error: f64,
    /// Largest bond of `t'` before truncation.
    pub bond_before: usize,
    /// Largest bond of `t̃`.
    pub bond_after: usize,
    pub norm: f64,
    pub exceeds_budget: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MomentSource {
    Computed,
    /// Entries with index `> split` came from extrapolation.
    Extrapolated { split: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSequence {
    pub moments: Vec<f64>,
    /// `Δ_c^(k)` for `k = 1..=n_max`, stored at index `k − 1`.
    pub cosine_errors: Vec<f64>,
    /// `Δ_t^(k)`, same indexing as `cosine_errors`.
    pub trunc_errors: Vec<f64>,
    pub max_bonds: Vec<usize>,
    pub source: MomentSource,
}

impl MomentSequence {
    /// A plain sequence without per-step diagnostics.
    pub fn from_moments(moments: Vec<f64>) -> Self {
        MomentSequence {
            moments,
            cosine_errors: Vec::new(),
            trunc_errors: Vec::new(),
            max_bonds: Vec::new(),
            source: MomentSource::Computed,
        }
    }

    /// Largest available moment index.
    pub fn degree(&self) -> usize {
        self.moments.len().saturating_sub(1)
    }

    /// Index of the last directly computed moment.
    pub fn split_index(&self) -> usize {
        match self.source {
            MomentSource::Computed => self.degree(),
            MomentSource::Extrapolated { split } => split,
        }
    }
}

/// `D^(0) = D`, `D^(1) = D_H·D`, `D^(k) = D_H·D^(k−1) + D^(k−2)`.
pub fn bond_growth(d_h: usize, d0: usize, k: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(d0);
    if k >= 1 {
        out.push(d_h.saturating_mul(d0));
    }
    for i in 2..=k {
        let next = d_h.saturating_mul(out[i - 1]).saturating_add(out[i - 2]);
        out.push(next);
    }
    out
}

/// Untruncated bond dimensions predicted for `h` starting from bond `d0`.
pub fn bond_growth_trace(h: &NormalizedHamiltonian, d0: usize, k: usize) -> Vec<usize> {
    bond_growth(h.growth_factor(), d0, k)
}

/// Per-step truncation error that keeps the energy estimate within its
/// guarantee for overlap `chi` and degree `d`: `3πχ²/(16 d³)`.
pub fn delta_budget(chi: f64, d: usize) -> f64 {
    3.0 * std::f64::consts::PI * chi * chi / (16.0 * (d as f64).powi(3))
}

/// `(μ_{2k}, μ_{2k+1})` from `t_k` and `t_{k+1}`.
pub fn moments_from_vectors(t_k: &Mps, t_k_plus_1: &Mps, mu0: f64, mu1: f64) -> Result<(f64, f64)> {
    let even = 2.0 * norm_sqr(t_k)? - mu0;
    let odd = 2.0 * inner(t_k_plus_1, t_k)?.re - mu1;
    Ok((even, odd))
}

/// `⟨t|t⟩`, read off the log-norm when the state is canonical.
fn norm_sqr(t: &Mps) -> Result<f64> {
    match t.ortho_center() {
        Some(_) => Ok((2.0 * t.log_norm()).exp()),
        None => Ok(inner(t, t)?.re),
    }
}

fn finish_step(
    k: usize,
    exact: Mps,
    cfg: &ChebRunConfig,
) -> Result<(Mps, StepReport)> {
    let bond_before = exact.max_bond();
    let (t, trunc_error, cosine_error) = if cfg.exact_growth {
        (exact, 0.0, 0.0)
    } else {
        let (t, rep) = exact.truncate(cfg.chi(), cfg.svd_tol)?;
        let norm_t = t.log_norm().exp();
        let cos = if rep.norm_before > 0.0 && norm_t > 0.0 {
            (C64::new(1.0, 0.0) - inner(&t, &exact)? / (norm_t * rep.norm_before)).norm()
        } else {
            0.0
        };
        (t, rep.trunc_error, cos)
    };
    let norm = norm_sqr(&t)?.max(0.0).sqrt();
    let exceeds_budget = cfg.delta_budget.is_some_and(|b| trunc_error > b);
    if exceeds_budget {
        log::warn!("step {k}: truncation error {trunc_error:.3e} exceeds the budget");
    }
    let report = StepReport {
        k,
        trunc_error,
        cosine_error,
        bond_before,
        bond_after: t.max_bond(),
        norm,
        exceeds_budget,
    };
    Ok((t, report))
}

fn check_capacity(predicted: usize, cfg: &ChebRunConfig) -> Result<()> {
    if predicted > cfg.max_bond_budget {
        return Err(Error::Capacity(format!(
            "intermediate bond dimension {predicted} exceeds the budget of {}",
            cfg.max_bond_budget
        )));
    }
    Ok(())
}

/// `t̃_k = truncate(2H t_prev − t_prev2)`.
pub fn cheb_step(h: &Mpo, t_prev: &Mps, t_prev2: &Mps, cfg: &ChebRunConfig) -> Result<(Mps, StepReport)> {
    check_capacity(h.growth_factor() * t_prev.max_bond() + t_prev2.max_bond(), cfg)?;
    let ht = h.apply(t_prev)?;
    let exact = add(&ht, t_prev2, C64::new(2.0, 0.0), C64::new(-1.0, 0.0))?;
    finish_step(0, exact, cfg)
}

/// `t̃_1 = truncate(Hψ)`.
pub fn first_step(h: &Mpo, psi: &Mps, cfg: &ChebRunConfig) -> Result<(Mps, StepReport)> {
    check_capacity(h.growth_factor() * psi.max_bond(), cfg)?;
    finish_step(1, h.apply(psi)?, cfg)
}

#[derive(Serialize, Deserialize)]
struct CheckpointState {
    k: usize,
    mu0: f64,
    mu1: f64,
    moments: Vec<f64>,
    cosine_errors: Vec<f64>,
    trunc_errors: Vec<f64>,
    max_bonds: Vec<usize>,
}

/// Stepwise driver holding the two most recent vectors.
pub struct ChebRecursion<'a> {
    h: &'a Mpo,
    cfg: ChebRunConfig,
    prev: Mps,
    curr: Mps,
    k: usize,
    mu0: f64,
    mu1: f64,
    seq: MomentSequence,
}

impl<'a> ChebRecursion<'a> {
    /// Starts the recursion from a normalized state; performs step 1.
    pub fn new(h: &'a Mpo, psi: &Mps, cfg: &ChebRunConfig) -> Result<(Self, StepReport)> {
        cfg.validate()?;
        if h.n_sites() != psi.n_sites() {
            return Err(Error::Structural(format!(
                "Hamiltonian has {} sites, state has {}",
                h.n_sites(),
                psi.n_sites()
            )));
        }
        let mu0 = inner(psi, psi)?.re;
        if (mu0 - 1.0).abs() > 1e-10 {
            return Err(Error::Precondition(format!(
                "initial state has squared norm {mu0}, expected 1"
            )));
        }
        let (t1, report) = first_step(h, psi, cfg)?;
        let mu1 = inner(psi, &t1)?.re;
        let mu2 = 2.0 * report.norm * report.norm - mu0;
        let seq = MomentSequence {
            moments: vec![mu0, mu1, mu2],
            cosine_errors: vec![report.cosine_error],
            trunc_errors: vec![report.trunc_error],
            max_bonds: vec![report.bond_after],
            source: MomentSource::Computed,
        };
        let rec = ChebRecursion {
            h,
            cfg: cfg.clone(),
            prev: psi.clone(),
            curr: t1,
            k: 1,
            mu0,
            mu1,
            seq,
        };
        Ok((rec, report))
    }

    /// Index of the most recent vector.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn current(&self) -> &Mps {
        &self.curr
    }

    pub fn previous(&self) -> &Mps {
        &self.prev
    }

    pub fn sequence(&self) -> &MomentSequence {
        &self.seq
    }

    pub fn into_sequence(self) -> MomentSequence {
        self.seq
    }

    /// Computes `t_{k+1}` and the moments `μ_{2k+1}`, `μ_{2k+2}`.
    pub fn step(&mut self) -> Result<StepReport> {
        let (next, mut report) = cheb_step(self.h, &self.curr, &self.prev, &self.cfg)?;
        self.k += 1;
        report.k = self.k;
        let odd = 2.0 * inner(&next, &self.curr)?.re - self.mu1;
        let even = 2.0 * report.norm * report.norm - self.mu0;
        self.seq.moments.push(odd);
        self.seq.moments.push(even);
        self.seq.cosine_errors.push(report.cosine_error);
        self.seq.trunc_errors.push(report.trunc_error);
        self.seq.max_bonds.push(report.bond_after);
        self.prev = std::mem::replace(&mut self.curr, next);
        Ok(report)
    }

    /// Replaces the current vector by `t_k + δ·v/‖v‖`. Used to study how a
    /// single local error propagates; the already recorded moments are
    /// left alone.
    pub fn perturb_current(&mut self, delta: f64, direction: &Mps) -> Result<()> {
        let nv = direction.norm();
        if nv == 0.0 {
            return Err(Error::Parameter("perturbation direction is zero".into()));
        }
        let sum = add(
            &self.curr,
            direction,
            C64::new(1.0, 0.0),
            C64::new(delta / nv, 0.0),
        )?;
        self.curr = if self.cfg.exact_growth {
            sum
        } else {
            sum.truncate(self.cfg.chi(), self.cfg.svd_tol)?.0
        };
        Ok(())
    }

    /// Writes `(t_{k-1}, t_k)` and the partial moments under `dir`.
    pub fn checkpoint(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        container::save_mps(&self.prev, dir.join("prev.tnc.tmp"))?;
        container::save_mps(&self.curr, dir.join("curr.tnc.tmp"))?;
        let state = CheckpointState {
            k: self.k,
            mu0: self.mu0,
            mu1: self.mu1,
            moments: self.seq.moments.clone(),
            cosine_errors: self.seq.cosine_errors.clone(),
            trunc_errors: self.seq.trunc_errors.clone(),
            max_bonds: self.seq.max_bonds.clone(),
        };
        let json = serde_json::to_vec_pretty(&state)?;
        let tmp = dir.join("state.json.tmp");
        std::fs::write(&tmp, json).map_err(|e| Error::io(&tmp, e))?;
        for name in ["prev.tnc", "curr.tnc", "state.json"] {
            let from = dir.join(format!("{name}.tmp"));
            std::fs::rename(&from, dir.join(name)).map_err(|e| Error::io(&from, e))?;
        }
        Ok(())
    }

    /// Restores a recursion written by [`ChebRecursion::checkpoint`].
    pub fn resume(h: &'a Mpo, cfg: &ChebRunConfig, dir: &Path) -> Result<Self> {
        cfg.validate()?;
        let path = dir.join("state.json");
        let text = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let state: CheckpointState = serde_json::from_slice(&text)?;
        let prev = container::load_mps(dir.join("prev.tnc"))?;
        let curr = container::load_mps(dir.join("curr.tnc"))?;
        if curr.n_sites() != h.n_sites() || state.moments.len() != 2 * state.k + 1 {
            return Err(Error::Structural("checkpoint does not match the run".into()));
        }
        Ok(ChebRecursion {
            h,
            cfg: cfg.clone(),
            prev,
            curr,
            k: state.k,
            mu0: state.mu0,
            mu1: state.mu1,
            seq: MomentSequence {
                moments: state.moments,
                cosine_errors: state.cosine_errors,
                trunc_errors: state.trunc_errors,
                max_bonds: state.max_bonds,
                source: MomentSource::Computed,
            },
        })
    }
}

/// Optional side channels of a run.
#[derive(Default)]
pub struct RunOptions<'a> {
    /// Directory for periodic checkpoints (see `checkpoint_every`).
    pub checkpoint_dir: Option<PathBuf>,
    /// Continue from the checkpoint in `checkpoint_dir` when one exists.
    pub resume: bool,
    /// Receives every step report as it is produced.
    pub observer: Option<&'a Sender<StepReport>>,
}

/// Computes `μ_0..μ_{2 n_max}` for a normalized `psi0`.
pub fn run_chebyshev(h: &NormalizedHamiltonian, psi0: &Mps, cfg: &ChebRunConfig) -> Result<MomentSequence> {
    run_chebyshev_with(&h.mpo, psi0, cfg, RunOptions::default())
}

pub fn run_chebyshev_with(
    h: &Mpo,
    psi0: &Mps,
    cfg: &ChebRunConfig,
    opts: RunOptions<'_>,
) -> Result<MomentSequence> {
    cfg.validate()?;
    let resumable = opts
        .checkpoint_dir
        .as_deref()
        .filter(|d| opts.resume && d.join("state.json").exists());
    let mut rec = match resumable {
        Some(dir) => {
            log::info!("resuming Chebyshev recursion from {}", dir.display());
            ChebRecursion::resume(h, cfg, dir)?
        }
        None => {
            let (rec, report) = ChebRecursion::new(h, psi0, cfg)?;
            if let Some(tx) = opts.observer {
                let _ = tx.send(report);
            }
            rec
        }
    };
    while rec.k() < cfg.n_max {
        let report = rec.step()?;
        log::debug!(
            "step {}: bond {} -> {}, trunc {:.3e}, cos {:.3e}",
            report.k,
            report.bond_before,
            report.bond_after,
            report.trunc_error,
            report.cosine_error
        );
        if let Some(tx) = opts.observer {
            let _ = tx.send(report);
        }
        if let Some(dir) = &opts.checkpoint_dir {
            if cfg.checkpoint_every > 0 && rec.k() % cfg.checkpoint_every == 0 {
                rec.checkpoint(dir)?;
            }
        }
    }
    let mut seq = rec.into_sequence();
    seq.moments.truncate(2 * cfg.n_max + 1);
    Ok(seq)
}
