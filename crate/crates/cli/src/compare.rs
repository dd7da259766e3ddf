//! Side-by-side comparison of two run directories.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tn_gsee::chebyshev::MomentSequence;
use tn_gsee::gsee::{self, GseeOptions};
use tn_gsee::{Error, Result};

use crate::io;
use crate::pipeline::{GseeReport, Manifest, CUMULATIVE, EXTRAPOLATED, GSEE, MANIFEST, MOMENTS};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergyRow {
    pub degree: usize,
    pub energy_a: Option<f64>,
    pub energy_b: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompareReport {
    pub run_a: PathBuf,
    pub run_b: PathBuf,
    pub config_hash_a: Option<String>,
    pub config_hash_b: Option<String>,
    /// Number of moments compared, `0..degree`.
    pub degree: usize,
    pub max_abs_diff: f64,
    pub median_abs_diff: f64,
    /// `|μ_a − μ_b|` per index.
    pub moment_diffs: Vec<f64>,
    /// `(x, C_a, C_b)` on the shared grid, when both runs have one.
    pub cumulative: Vec<(f64, f64, f64)>,
    pub energies: Vec<EnergyRow>,
}

/// Extended moments when present, otherwise the computed ones.
pub fn load_run_moments(dir: &Path) -> Result<MomentSequence> {
    let ext = dir.join(EXTRAPOLATED);
    if ext.exists() {
        io::read_moments(&ext)
    } else {
        io::read_moments(&dir.join(MOMENTS))
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Option<T>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(Some(serde_json::from_str(&text)?))
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn energy_at(seq: &MomentSequence, d: usize, g: &GseeReport) -> Option<f64> {
    let truncated = MomentSequence::from_moments(seq.moments[..=d].to_vec());
    let opts = GseeOptions {
        chi: g.chi,
        delta: g.delta,
        degree: d,
        eta: Some(g.eta),
        scale_back: g.scale,
    };
    gsee::estimate_energy_with(&truncated, &opts)
        .ok()
        .map(|r| r.energy_raw())
}

/// Compares moments on the common index range, `C(x)` on identical grids
/// and the energy estimate at `d/8, d/4, d/2, d`. Differing `C(x)` grids
/// or fewer than three common moments are parameter errors.
pub fn compare_runs(run_a: &Path, run_b: &Path) -> Result<CompareReport> {
    let a = load_run_moments(run_a)?;
    let b = load_run_moments(run_b)?;
    let degree = a.degree().min(b.degree());
    if degree < 2 {
        return Err(Error::Parameter(format!(
            "runs share only {} moments",
            degree + 1
        )));
    }
    let diffs: Vec<f64> = (0..=degree)
        .map(|k| (a.moments[k] - b.moments[k]).abs())
        .collect();
    let max_abs_diff = diffs.iter().copied().fold(0.0, f64::max);
    let median_abs_diff = median(&diffs);

    let ca = run_a.join(CUMULATIVE);
    let cb = run_b.join(CUMULATIVE);
    let cumulative = if ca.exists() && cb.exists() {
        let ta = io::read_cumulative(&ca)?;
        let tb = io::read_cumulative(&cb)?;
        let same = ta.len() == tb.len()
            && ta.iter().zip(&tb).all(|(p, q)| (p.0 - q.0).abs() <= 1e-12);
        if !same {
            return Err(Error::Parameter("cumulative functions use different grids".into()));
        }
        ta.iter().zip(&tb).map(|(p, q)| (p.0, p.1, q.1)).collect()
    } else {
        Vec::new()
    };

    let ga: Option<GseeReport> = read_json(&run_a.join(GSEE))?;
    let gb: Option<GseeReport> = read_json(&run_b.join(GSEE))?;
    let mut energies = Vec::new();
    if let Some(g) = ga.as_ref().or(gb.as_ref()) {
        let mut degrees: Vec<usize> = [8, 4, 2, 1].iter().map(|f| degree / f).filter(|&d| d >= 2).collect();
        degrees.dedup();
        for d in degrees {
            energies.push(EnergyRow {
                degree: d,
                energy_a: energy_at(&a, d, g),
                energy_b: energy_at(&b, d, g),
            });
        }
    }

    let ma: Option<Manifest> = read_json(&run_a.join(MANIFEST))?;
    let mb: Option<Manifest> = read_json(&run_b.join(MANIFEST))?;
    Ok(CompareReport {
        run_a: run_a.to_path_buf(),
        run_b: run_b.to_path_buf(),
        config_hash_a: ma.map(|m| m.config_hash),
        config_hash_b: mb.map(|m| m.config_hash),
        degree,
        max_abs_diff,
        median_abs_diff,
        moment_diffs: diffs,
        cumulative,
        energies,
    })
}

impl CompareReport {
    /// Hash naming this comparison: SHA-256 over both config hashes.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.config_hash_a.as_deref().unwrap_or("-"));
        h.update(b"|");
        h.update(self.config_hash_b.as_deref().unwrap_or("-"));
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Writes `compare.json`, `moment_diff.csv`, `cumulative_overlay.csv`
    /// and `energy_vs_degree.csv` into `out`.
    pub fn write(&self, out: &Path) -> Result<()> {
        let hash = self.hash();
        let short = &hash[..16];
        #[derive(Serialize)]
        struct Summary<'a> {
            compare_hash: &'a str,
            run_a: &'a Path,
            run_b: &'a Path,
            config_hash_a: &'a Option<String>,
            config_hash_b: &'a Option<String>,
            degree: usize,
            max_abs_diff: f64,
            median_abs_diff: f64,
            energies: &'a [EnergyRow],
        }
        io::write_json(
            &out.join("compare.json"),
            &Summary {
                compare_hash: &hash,
                run_a: &self.run_a,
                run_b: &self.run_b,
                config_hash_a: &self.config_hash_a,
                config_hash_b: &self.config_hash_b,
                degree: self.degree,
                max_abs_diff: self.max_abs_diff,
                median_abs_diff: self.median_abs_diff,
                energies: &self.energies,
            },
        )?;
        let rows: Vec<Vec<String>> = self
            .moment_diffs
            .iter()
            .enumerate()
            .map(|(k, d)| vec![k.to_string(), io::num(*d)])
            .collect();
        io::write_file(
            &out.join("moment_diff.csv"),
            io::table_csv(short, &["k", "abs_diff"], &rows).as_bytes(),
        )?;
        let rows: Vec<Vec<String>> = self
            .cumulative
            .iter()
            .map(|(x, a, b)| vec![io::num(*x), io::num(*a), io::num(*b)])
            .collect();
        io::write_file(
            &out.join("cumulative_overlay.csv"),
            io::table_csv(short, &["x", "C_a", "C_b"], &rows).as_bytes(),
        )?;
        let opt = |v: Option<f64>| v.map_or(String::new(), io::num);
        let rows: Vec<Vec<String>> = self
            .energies
            .iter()
            .map(|r| vec![r.degree.to_string(), opt(r.energy_a), opt(r.energy_b)])
            .collect();
        io::write_file(
            &out.join("energy_vs_degree.csv"),
            io::table_csv(short, &["degree", "energy_a", "energy_b"], &rows).as_bytes(),
        )
    }
}
