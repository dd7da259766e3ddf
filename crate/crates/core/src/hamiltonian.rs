//! Pauli-sum Hamiltonians and their MPO forms.
//!
//! Two MPO constructions are provided. [`fsa_mpo`] builds a compact operator
//! from a prefix-tree automaton over the Pauli strings and is what the model
//! constructors use. [`paulisum_to_mpo`] stacks one bond-1 operator per term
//! as a direct sum and optionally compresses the result; it serves generic
//! input and doubles as an independent cross-check of the automaton.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use ndarray::{Array2, Array4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{C64, ONE, ZERO};
use crate::mpo::Mpo;
use crate::mps::PHYS_DIM;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> Array2<C64> {
        let i = C64::new(0.0, 1.0);
        let m = match self {
            Pauli::I => [[ONE, ZERO], [ZERO, ONE]],
            Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
            Pauli::Y => [[ZERO, -i], [i, ZERO]],
            Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
        };
        Array2::from_shape_fn((2, 2), |(r, c)| m[r][c])
    }

    pub fn from_char(ch: char) -> Option<Pauli> {
        match ch.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coeff: f64,
    pub ops: Vec<Pauli>,
}

impl PauliTerm {
    /// Sites carrying a non-identity factor.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.ops
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != Pauli::I)
            .map(|(i, _)| i)
    }

    /// Bit masks for a dense matvec with site 0 as the most significant bit:
    /// `(flip, phase, y_count)` where `flip` marks X/Y sites and `phase`
    /// marks Z/Y sites.
    pub fn masks(&self) -> (usize, usize, u32) {
        let n = self.ops.len();
        let mut flip = 0usize;
        let mut phase = 0usize;
        let mut ny = 0;
        for (i, p) in self.ops.iter().enumerate() {
            let bit = 1usize << (n - 1 - i);
            match p {
                Pauli::I => {}
                Pauli::X => flip |= bit,
                Pauli::Y => {
                    flip |= bit;
                    phase |= bit;
                    ny += 1;
                }
                Pauli::Z => phase |= bit,
            }
        }
        (flip, phase, ny)
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.coeff)?;
        for p in &self.ops {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

/// `H = Σ_j c_j P_j` over Pauli strings of a fixed length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliSum {
    n_sites: usize,
    terms: Vec<PauliTerm>,
}

impl PauliSum {
    pub fn new(n_sites: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::Parameter("Pauli sum needs at least one site".into()));
        }
        for (k, t) in terms.iter().enumerate() {
            if t.ops.len() != n_sites {
                return Err(Error::Structural(format!(
                    "term {k} has length {} instead of {n_sites}",
                    t.ops.len()
                )));
            }
            if !t.coeff.is_finite() || t.coeff == 0.0 {
                return Err(Error::Parameter(format!(
                    "term {k} has coefficient {}; coefficients must be finite and nonzero",
                    t.coeff
                )));
            }
        }
        Ok(PauliSum { n_sites, terms })
    }

    /// Parses one term per line, `coeff  IXZY...`. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut n_sites = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(c), Some(s), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parameter(format!(
                    "line {}: expected `coeff string`",
                    lineno + 1
                )));
            };
            let coeff: f64 = c.parse().map_err(|_| {
                Error::Parameter(format!("line {}: bad coefficient {c:?}", lineno + 1))
            })?;
            let ops = s
                .chars()
                .map(Pauli::from_char)
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| {
                    Error::Parameter(format!("line {}: bad Pauli string {s:?}", lineno + 1))
                })?;
            match n_sites {
                None => n_sites = Some(ops.len()),
                Some(n) if n != ops.len() => {
                    return Err(Error::Structural(format!(
                        "line {}: string length {} differs from {n}",
                        lineno + 1,
                        ops.len()
                    )))
                }
                _ => {}
            }
            terms.push(PauliTerm { coeff, ops });
        }
        let n = n_sites.ok_or_else(|| Error::Parameter("empty Pauli sum".into()))?;
        PauliSum::new(n, terms)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PauliSum::parse(&text)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    /// `Σ_j |c_j|`, an upper bound on the operator norm.
    pub fn norm_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub model: String,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "J")]
    pub j: f64,
    pub h: f64,
    pub ordering: String,
}

/// Hamiltonian divided by `scale` so that its spectrum lies in `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct NormalizedHamiltonian {
    pub mpo: Mpo,
    pub scale: f64,
    pub meta: ModelMeta,
    /// Unscaled terms; the normalized operator is `raw / scale`.
    pub raw: PauliSum,
}

impl NormalizedHamiltonian {
    pub fn from_pauli_sum(raw: PauliSum, meta: ModelMeta) -> Result<Self> {
        if raw.terms().is_empty() {
            return Err(Error::Parameter("Hamiltonian has no nonzero terms".into()));
        }
        let scale = raw.norm_bound();
        let mpo = fsa_mpo(&raw)?.scaled(1.0 / scale);
        Ok(NormalizedHamiltonian {
            mpo,
            scale,
            meta,
            raw,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.mpo.n_sites()
    }

    /// Largest MPO bond dimension.
    pub fn growth_factor(&self) -> usize {
        self.mpo.growth_factor()
    }
}

fn two_site(n: usize, i: usize, j: usize, p: Pauli, coeff: f64) -> PauliTerm {
    let mut ops = vec![Pauli::I; n];
    ops[i] = p;
    ops[j] = p;
    PauliTerm { coeff, ops }
}

fn one_site(n: usize, i: usize, p: Pauli, coeff: f64) -> PauliTerm {
    let mut ops = vec![Pauli::I; n];
    ops[i] = p;
    PauliTerm { coeff, ops }
}

/// Terms of `-J Σ_{⟨ij⟩} X_i X_j - h Σ_i Z_i` for the given edges.
/// Zero couplings are left out.
fn ising_terms(n: usize, edges: &[(usize, usize)], j: f64, h: f64) -> Vec<PauliTerm> {
    let mut terms = Vec::new();
    if j != 0.0 {
        terms.extend(edges.iter().map(|&(a, b)| two_site(n, a, b, Pauli::X, -j)));
    }
    if h != 0.0 {
        terms.extend((0..n).map(|i| one_site(n, i, Pauli::Z, -h)));
    }
    terms
}

fn check_couplings(j: f64, h: f64) -> Result<()> {
    if !j.is_finite() || !h.is_finite() {
        return Err(Error::Parameter("couplings must be finite".into()));
    }
    Ok(())
}

/// Open-chain transverse-field Ising model `-J Σ X_i X_{i+1} - h Σ Z_i`.
pub fn tfim_1d_terms(l: usize, j: f64, h: f64) -> Result<PauliSum> {
    if l < 2 {
        return Err(Error::Parameter(format!("chain length {l} < 2")));
    }
    check_couplings(j, h)?;
    let edges: Vec<_> = (0..l - 1).map(|i| (i, i + 1)).collect();
    PauliSum::new(l, ising_terms(l, &edges, j, h))
}

pub fn tfim_1d(l: usize, j: f64, h: f64) -> Result<NormalizedHamiltonian> {
    let raw = tfim_1d_terms(l, j, h)?;
    NormalizedHamiltonian::from_pauli_sum(
        raw,
        ModelMeta {
            model: "tfim1d".into(),
            l,
            j,
            h,
            ordering: "chain".into(),
        },
    )
}

/// Chain index of lattice site `(row, col)` in row-major snake order.
pub fn snake_index(l: usize, row: usize, col: usize) -> usize {
    if row % 2 == 0 {
        row * l + col
    } else {
        row * l + (l - 1 - col)
    }
}

/// Nearest-neighbour edges of an open `l × l` lattice as chain index pairs
/// `(a, b)` with `a < b`.
pub fn square_lattice_edges(l: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(2 * l * (l.saturating_sub(1)));
    for r in 0..l {
        for c in 0..l {
            let a = snake_index(l, r, c);
            if c + 1 < l {
                let b = snake_index(l, r, c + 1);
                edges.push((a.min(b), a.max(b)));
            }
            if r + 1 < l {
                let b = snake_index(l, r + 1, c);
                edges.push((a.min(b), a.max(b)));
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// Open `l × l` transverse-field Ising model, snake-ordered onto a chain.
pub fn tfim_2d_terms(l: usize, j: f64, h: f64) -> Result<PauliSum> {
    if l < 2 {
        return Err(Error::Parameter(format!("lattice side {l} < 2")));
    }
    check_couplings(j, h)?;
    let n = l * l;
    PauliSum::new(n, ising_terms(n, &square_lattice_edges(l), j, h))
}

pub fn tfim_2d(l: usize, j: f64, h: f64) -> Result<NormalizedHamiltonian> {
    let raw = tfim_2d_terms(l, j, h)?;
    NormalizedHamiltonian::from_pauli_sum(
        raw,
        ModelMeta {
            model: "tfim2d".into(),
            l,
            j,
            h,
            ordering: "snake".into(),
        },
    )
}

/// Wraps an arbitrary Pauli sum as a normalized Hamiltonian.
pub fn from_pauli_sum(raw: PauliSum, name: &str) -> Result<NormalizedHamiltonian> {
    let l = raw.n_sites();
    NormalizedHamiltonian::from_pauli_sum(
        raw,
        ModelMeta {
            model: name.into(),
            l,
            j: 0.0,
            h: 0.0,
            ordering: "chain".into(),
        },
    )
}

/// Automaton state on a bond.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum State {
    Start,
    Done,
    /// A term whose first non-identity site is `.0` and whose operators on
    /// the sites left of this bond are `.1`.
    Open(usize, Vec<Pauli>),
}

/// Span of a term: first and last non-identity site. A pure identity term
/// is placed on site 0.
fn span(t: &PauliTerm) -> (usize, usize) {
    let mut sup = t.support();
    match sup.next() {
        None => (0, 0),
        Some(f) => (f, sup.last().unwrap_or(f)),
    }
}

/// Prefix-tree MPO of a Pauli sum. Terms sharing a leading operator
/// pattern share automaton states, so a nearest-neighbour chain needs bond
/// dimension 3 and a snake-ordered square lattice at most `L + 2`.
pub fn fsa_mpo(ps: &PauliSum) -> Result<Mpo> {
    let n = ps.n_sites();
    if ps.terms().is_empty() {
        return Err(Error::Parameter("empty Pauli sum".into()));
    }
    let spans: Vec<_> = ps.terms().iter().map(span).collect();

    // State index maps for bonds 0..=n.
    let mut bonds: Vec<BTreeMap<State, usize>> = Vec::with_capacity(n + 1);
    for b in 0..=n {
        let mut states: Vec<State> = Vec::new();
        if b < n {
            states.push(State::Start);
        }
        if b > 0 {
            states.push(State::Done);
        }
        let mut open: Vec<State> = ps
            .terms()
            .iter()
            .zip(&spans)
            .filter(|(_, &(f, g))| f < b && b <= g)
            .map(|(t, &(f, _))| State::Open(f, t.ops[f..b].to_vec()))
            .collect();
        open.sort();
        open.dedup();
        states.extend(open);
        bonds.push(states.into_iter().enumerate().map(|(i, s)| (s, i)).collect());
    }

    let eye = Pauli::I.matrix();
    let mut tensors = Vec::with_capacity(n);
    for s in 0..n {
        let left = &bonds[s];
        let right = &bonds[s + 1];
        let mut w = Array4::<C64>::zeros((left.len(), PHYS_DIM, PHYS_DIM, right.len()));
        let mut set = |l: usize, r: usize, m: &Array2<C64>, coeff: f64, add: bool| {
            for o in 0..PHYS_DIM {
                for i in 0..PHYS_DIM {
                    let v = m[[o, i]] * coeff;
                    if add {
                        w[[l, o, i, r]] += v;
                    } else {
                        w[[l, o, i, r]] = v;
                    }
                }
            }
        };
        if let (Some(&l), Some(&r)) = (left.get(&State::Start), right.get(&State::Start)) {
            set(l, r, &eye, 1.0, false);
        }
        if let (Some(&l), Some(&r)) = (left.get(&State::Done), right.get(&State::Done)) {
            set(l, r, &eye, 1.0, false);
        }
        for (t, &(f, g)) in ps.terms().iter().zip(&spans) {
            if s < f || s > g {
                continue;
            }
            let m = t.ops[s].matrix();
            let l = if s == f {
                left[&State::Start]
            } else {
                left[&State::Open(f, t.ops[f..s].to_vec())]
            };
            if s == g {
                set(l, right[&State::Done], &m, t.coeff, true);
            } else {
                let r = right[&State::Open(f, t.ops[f..s + 1].to_vec())];
                set(l, r, &m, 1.0, false);
            }
        }
        tensors.push(w);
    }
    Mpo::from_tensors(tensors)
}

/// Direct-sum MPO: one bond-1 string per term, so the interior bond
/// dimension equals the term count before compression. With
/// `compress_tol > 0` the result is SVD-compressed at that relative
/// tolerance.
pub fn paulisum_to_mpo(ps: &PauliSum, compress_tol: f64) -> Result<Mpo> {
    let n = ps.n_sites();
    let m = ps.terms().len();
    if m == 0 {
        return Err(Error::Parameter("empty Pauli sum".into()));
    }
    let mut tensors = Vec::with_capacity(n);
    for s in 0..n {
        let (dl, dr) = match (s == 0, s == n - 1) {
            (true, true) => (1, 1),
            (true, false) => (1, m),
            (false, true) => (m, 1),
            (false, false) => (m, m),
        };
        let mut w = Array4::<C64>::zeros((dl, PHYS_DIM, PHYS_DIM, dr));
        for (k, t) in ps.terms().iter().enumerate() {
            let mat = t.ops[s].matrix();
            let coeff = if s == 0 { t.coeff } else { 1.0 };
            let l = if dl == 1 { 0 } else { k };
            let r = if dr == 1 { 0 } else { k };
            for o in 0..PHYS_DIM {
                for i in 0..PHYS_DIM {
                    w[[l, o, i, r]] += mat[[o, i]] * coeff;
                }
            }
        }
        tensors.push(w);
    }
    let mpo = Mpo::from_tensors(tensors)?;
    if compress_tol > 0.0 {
        mpo.compressed(compress_tol)
    } else {
        Ok(mpo)
    }
}
