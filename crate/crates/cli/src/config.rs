//! Run configuration: a single JSON document describing one pipeline run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tn_gsee::chebyshev::ChebRunConfig;
use tn_gsee::dmrg::DmrgConfig;
use tn_gsee::hamiltonian::{self, NormalizedHamiltonian, PauliSum};
use tn_gsee::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// `tfim1d`, `tfim2d` or `pauli_file`.
    pub model: String,
    #[serde(rename = "L", default)]
    pub l: Option<usize>,
    #[serde(rename = "J", default = "one")]
    pub j: f64,
    #[serde(default = "one")]
    pub h: f64,
    /// Pauli-sum text file, for `pauli_file`.
    #[serde(default)]
    pub path: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

impl ModelSpec {
    pub fn tfim1d(l: usize, j: f64, h: f64) -> Self {
        ModelSpec {
            model: "tfim1d".into(),
            l: Some(l),
            j,
            h,
            path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.model.as_str() {
            "tfim1d" | "tfim2d" => {
                let l = self
                    .l
                    .ok_or_else(|| Error::Parameter(format!("model {} needs L", self.model)))?;
                if l < 2 {
                    return Err(Error::Parameter(format!("L = {l} is too small")));
                }
                if !self.j.is_finite() || !self.h.is_finite() {
                    return Err(Error::Parameter("J and h must be finite".into()));
                }
                if self.j == 0.0 && self.h == 0.0 {
                    return Err(Error::Parameter("J = h = 0 gives a zero Hamiltonian".into()));
                }
                Ok(())
            }
            "pauli_file" => match &self.path {
                Some(_) => Ok(()),
                None => Err(Error::Parameter("model pauli_file needs a path".into())),
            },
            other => Err(Error::Parameter(format!("unknown model {other:?}"))),
        }
    }

    /// Builds the normalized Hamiltonian. Relative Pauli-file paths are
    /// resolved against `base`.
    pub fn build(&self, base: Option<&Path>) -> Result<NormalizedHamiltonian> {
        self.validate()?;
        match self.model.as_str() {
            "tfim1d" => hamiltonian::tfim_1d(self.l.unwrap_or(0), self.j, self.h),
            "tfim2d" => hamiltonian::tfim_2d(self.l.unwrap_or(0), self.j, self.h),
            _ => {
                let path = self.path.as_ref().expect("validated");
                let path = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                let ps = PauliSum::from_file(&path)?;
                hamiltonian::from_pauli_sum(ps, "pauli_file")
            }
        }
    }

    /// Number of qubits, when known without reading files.
    pub fn n_sites(&self) -> Option<usize> {
        match self.model.as_str() {
            "tfim1d" => self.l,
            "tfim2d" => self.l.map(|l| l * l),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LpSettings {
    pub n_fit: usize,
    /// `null` selects the relative default.
    pub ridge: Option<f64>,
    pub d_target: usize,
}

impl Default for LpSettings {
    fn default() -> Self {
        LpSettings {
            n_fit: 40,
            ridge: None,
            d_target: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GseeSettings {
    /// Overlap with the ground state. `null` means: oracle overlap when the
    /// system is small enough, otherwise the overlap with a DMRG reference.
    pub chi: Option<f64>,
    pub delta: f64,
    /// `null` uses every available moment.
    pub degree: Option<usize>,
    pub eta: Option<f64>,
    /// Bond dimension of the DMRG reference used to estimate `chi`.
    pub reference_bond: usize,
}

impl Default for GseeSettings {
    fn default() -> Self {
        GseeSettings {
            chi: None,
            delta: 0.01,
            degree: None,
            eta: None,
            reference_bond: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub dmrg: DmrgConfig,
    #[serde(default)]
    pub cheb: ChebRunConfig,
    /// Linear-prediction stage; skipped when absent.
    #[serde(default)]
    pub lp: Option<LpSettings>,
    #[serde(default)]
    pub gsee: GseeSettings,
    pub out_dir: PathBuf,
    /// Guiding-state container; replaces the DMRG stage when set.
    #[serde(default)]
    pub init_state: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Compare against exact moments when the system fits the dense limit.
    #[serde(default = "yes")]
    pub oracle: bool,
}

fn yes() -> bool {
    true
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Checks every stage's parameters; nothing is computed.
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.dmrg.validate()?;
        self.cheb.validate()?;
        let available = 2 * self.cheb.n_max;
        if let Some(lp) = &self.lp {
            if lp.n_fit == 0 {
                return Err(Error::Parameter("lp.n_fit must be positive".into()));
            }
            if 2 * lp.n_fit > available {
                return Err(Error::Parameter(format!(
                    "lp.n_fit = {} needs at least {} moments, the run produces {}",
                    lp.n_fit,
                    2 * lp.n_fit + 1,
                    available + 1
                )));
            }
            if lp.d_target <= available {
                return Err(Error::Parameter(format!(
                    "lp.d_target = {} does not exceed the computed degree {available}",
                    lp.d_target
                )));
            }
            if let Some(r) = lp.ridge {
                if !(r >= 0.0 && r.is_finite()) {
                    return Err(Error::Parameter(format!("lp.ridge = {r} must be non-negative")));
                }
            }
        }
        let g = &self.gsee;
        if !(g.delta > 0.0 && g.delta < 1.0) {
            return Err(Error::Parameter(format!("gsee.delta = {} not in (0, 1)", g.delta)));
        }
        if let Some(chi) = g.chi {
            if !(chi > 0.0 && chi <= 1.0) {
                return Err(Error::Parameter(format!("gsee.chi = {chi} not in (0, 1]")));
            }
        }
        if let Some(eta) = g.eta {
            if !(eta > 0.0 && eta < 0.5) {
                return Err(Error::Parameter(format!("gsee.eta = {eta} not in (0, 1/2)")));
            }
        }
        let max_degree = self.lp.as_ref().map_or(available, |lp| lp.d_target);
        if let Some(d) = g.degree {
            if d < 2 || d > max_degree {
                return Err(Error::Parameter(format!(
                    "gsee.degree = {d} outside [2, {max_degree}]"
                )));
            }
        }
        if g.reference_bond == 0 {
            return Err(Error::Parameter("gsee.reference_bond must be positive".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Short prefix of [`RunConfig::hash`] used in file headers.
    pub fn short_hash(&self) -> String {
        self.hash()[..16].to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunConfig {
        RunConfig::from_json(r#"{"model": {"model": "tfim1d", "L": 6}, "out_dir": "out"}"#).unwrap()
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = sample();
        assert_eq!(cfg.model.j, 1.0);
        assert_eq!(cfg.cheb.n_max, 100);
        assert!(cfg.lp.is_none());
        cfg.validate().unwrap();
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = sample();
        assert_eq!(a.hash(), sample().hash());
        let mut b = sample();
        b.cheb.n_max = 50;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = sample();
        c.cheb.chi_mps = Some(0);
        assert!(matches!(c.validate(), Err(Error::Parameter(_))));
        let mut c = sample();
        c.model.model = "heisenberg".into();
        assert!(c.validate().is_err());
        let mut c = sample();
        c.lp = Some(LpSettings { d_target: 10, ..Default::default() });
        assert!(c.validate().is_err());
        let mut c = sample();
        c.gsee.chi = Some(1.5);
        assert!(c.validate().is_err());
    }
}
