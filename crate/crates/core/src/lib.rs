//! Ground-state energy estimation with matrix product states.
//!
//! The pipeline builds a normalized Hamiltonian as an MPO, prepares a guiding
//! state, runs the Chebyshev vector recursion `t_k = 2H t_{k-1} - t_{k-2}`
//! with bond truncation, turns consecutive vector pairs into Chebyshev moments
//! `μ_k = ⟨ψ|T_k(H)|ψ⟩`, optionally extends the moments by linear prediction
//! and finally scans a family of smoothed step filters to locate the ground
//! energy.
//!
//! A dense state-vector implementation in [`oracle`] provides exact
//! references for every approximated quantity at small qubit counts.
//!
//! ```
//! use tn_gsee::{chebyshev, hamiltonian, mps::Mps};
//!
//! let h = hamiltonian::tfim_1d(6, 1.0, 1.0).unwrap();
//! let psi = Mps::basis_state(&[0; 6]).unwrap();
//! let cfg = chebyshev::ChebRunConfig { n_max: 8, ..Default::default() };
//! let seq = chebyshev::run_chebyshev(&h, &psi, &cfg).unwrap();
//! assert_eq!(seq.moments.len(), 17);
//! assert!((seq.moments[0] - 1.0).abs() < 1e-12);
//! ```

pub mod chebyshev;
pub mod container;
pub mod dmrg;
pub mod error;
pub mod filter;
pub mod gsee;
pub mod hamiltonian;
pub mod lanczos;
pub mod linalg;
pub mod lp;
pub mod mpo;
pub mod mps;
pub mod oracle;

pub use error::{Error, Result};
pub use linalg::C64;

/// Environment variable overriding the dense-vector size limit.
pub const DENSE_LIMIT_ENV: &str = "TN_GSEE_DENSE_LIMIT";

/// Default largest qubit count for which full state vectors are formed.
pub const DEFAULT_DENSE_LIMIT: usize = 20;

/// Largest qubit count for which full state vectors are formed, read from
/// [`DENSE_LIMIT_ENV`] when set.
pub fn dense_limit() -> usize {
    std::env::var(DENSE_LIMIT_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_DENSE_LIMIT)
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/mps.md")]
    mod mps {}
    #[doc = include_str!("../../../book/src/hamiltonians.md")]
    mod hamiltonians {}
    #[doc = include_str!("../../../book/src/filters.md")]
    mod filters {}
    #[doc = include_str!("../../../book/src/chebyshev.md")]
    mod chebyshev {}
    #[doc = include_str!("../../../book/src/linear-prediction.md")]
    mod linear_prediction {}
    #[doc = include_str!("../../../book/src/gsee.md")]
    mod gsee {}
    #[doc = include_str!("../../../book/src/dmrg-oracle.md")]
    mod dmrg_oracle {}
}
