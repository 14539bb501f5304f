//! Symplectic spectrum of (partially transposed) two-mode covariance matrices
//! and the negativity measures built on it.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceMatrix;
use crate::error::{Error, Result};

/// Relative gap below which the two reduced products count as equal.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Which product realizes the smaller symplectic eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaBranch {
    /// eta_lt^2 = <chi_+^2><p_-^2>
    PlusChiMinusP,
    /// eta_lt^2 = <chi_-^2><p_+^2>
    MinusChiPlusP,
    Degenerate,
}

impl std::fmt::Display for EtaBranch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EtaBranch::PlusChiMinusP => "plus_chi_minus_p",
            EtaBranch::MinusChiPlusP => "minus_chi_plus_p",
            EtaBranch::Degenerate => "degenerate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    pub eta_lt: f64,
    pub eta_gt: f64,
    pub negativity: f64,
    pub log_negativity: f64,
    pub branch: EtaBranch,
    pub entangled: bool,
}

/// Flip the sign of p_2: negate every off-diagonal entry in its row and column.
pub fn partial_transpose(v: &CovarianceMatrix) -> CovarianceMatrix {
    let mut e = v.entries;
    for k in 0..4 {
        if k != 3 {
            e[3][k] = -e[3][k];
            e[k][3] = -e[k][3];
        }
    }
    CovarianceMatrix { entries: e, modes: None }
}

fn det2(m: [[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn to_matrix(v: &CovarianceMatrix) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| v.entries[i][j])
}

fn require_positive_definite(v: &CovarianceMatrix) -> Result<Matrix4<f64>> {
    let m = to_matrix(v);
    if m.cholesky().is_none() {
        return Err(Error::Domain("covariance matrix is not positive definite".into()));
    }
    Ok(m)
}

/// Symplectic eigenvalues (eta_gt, eta_lt) of V from its block invariants.
pub fn symplectic_eigenvalues(v: &CovarianceMatrix) -> Result<(f64, f64)> {
    let m = require_positive_definite(v)?;
    let (a, b, c) = (v.block(0, 0), v.block(1, 1), v.block(0, 1));
    let sigma = det2(a) + det2(b) + 2.0 * det2(c);
    let det_v = m.determinant();
    let disc = (sigma * sigma - 4.0 * det_v).max(0.0).sqrt();
    let gt_sq = 0.5 * (sigma + disc);
    // the smaller root via det V / gt_sq avoids cancellation
    let lt_sq = if gt_sq > 0.0 { det_v / gt_sq } else { 0.5 * (sigma - disc) };
    Ok((gt_sq.sqrt(), lt_sq.max(0.0).sqrt()))
}

/// Symplectic eigenvalues from an ordinary eigendecomposition: with V = L L^T, the eta^2 are the
/// (doubly degenerate) eigenvalues of L^T J^T V J L, which shares the spectrum of -(J V)^2 but is
/// symmetric. Only eigenvalues are taken; nalgebra's symmetric eigenvectors are unreliable for
/// block-decoupled inputs.
pub fn symplectic_eigenvalues_spectral(v: &CovarianceMatrix) -> Result<(f64, f64)> {
    let m = to_matrix(v);
    let chol = m.cholesky().ok_or_else(|| Error::Domain("covariance matrix is not positive definite".into()))?;
    let l = chol.l();
    let mut j = Matrix4::zeros();
    j[(0, 1)] = 1.0;
    j[(1, 0)] = -1.0;
    j[(2, 3)] = 1.0;
    j[(3, 2)] = -1.0;
    let s = l.transpose() * j.transpose() * m * j * l;
    let s = 0.5 * (s + s.transpose());
    let mut vals: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(((0.5 * (vals[2] + vals[3])).max(0.0).sqrt(), (0.5 * (vals[0] + vals[1])).max(0.0).sqrt()))
}

/// (eta_lt^2, eta_gt^2, branch) from the four mode moments.
pub fn eta_reduced(chi_p: f64, chi_m: f64, p_p: f64, p_m: f64) -> (f64, f64, EtaBranch) {
    let a = chi_p * p_m;
    let b = chi_m * p_p;
    let branch = if (a - b).abs() <= DEGENERACY_TOL * a.max(b) {
        EtaBranch::Degenerate
    } else if a < b {
        EtaBranch::PlusChiMinusP
    } else {
        EtaBranch::MinusChiPlusP
    };
    (a.min(b), a.max(b), branch)
}

/// (negativity, log negativity) for a smallest partially transposed symplectic eigenvalue.
pub fn negativity(eta_lt: f64) -> Result<(f64, f64)> {
    if !(eta_lt > 0.0 && eta_lt.is_finite()) {
        return Err(Error::InvalidParams(format!("eta_lt must be positive and finite (got {eta_lt})")));
    }
    Ok((((1.0 - 2.0 * eta_lt) / (2.0 * eta_lt)).max(0.0), (-(2.0 * eta_lt).ln()).max(0.0)))
}

/// Branch read off the entries: sign of V22 V13 - V11 V24 (one-based).
pub fn branch_from_entries(v: &CovarianceMatrix) -> EtaBranch {
    let e = &v.entries;
    // equals (<chi_+^2><p_-^2> - <chi_-^2><p_+^2>) / 2
    let d = e[1][1] * e[0][2] - e[0][0] * e[1][3];
    let (cp, cm, pp, pm) = v.mode_products();
    if d.abs() <= DEGENERACY_TOL * 0.5 * (cp * pm).max(cm * pp) {
        EtaBranch::Degenerate
    } else if d > 0.0 {
        EtaBranch::MinusChiPlusP
    } else {
        EtaBranch::PlusChiMinusP
    }
}

/// Full report for a late-time covariance matrix (not yet transposed).
pub fn entanglement_report(v: &CovarianceMatrix) -> Result<EntanglementReport> {
    let (eta_gt, eta_lt) = symplectic_eigenvalues(&partial_transpose(v))?;
    let (negativity, log_negativity) = negativity(eta_lt)?;
    Ok(EntanglementReport {
        eta_lt,
        eta_gt,
        negativity,
        log_negativity,
        branch: branch_from_entries(v),
        entangled: eta_lt < 0.5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vacuum(w: f64) -> CovarianceMatrix {
        let mut e = [[0.0; 4]; 4];
        e[0][0] = 0.5 / w;
        e[2][2] = 0.5 / w;
        e[1][1] = 0.5 * w;
        e[3][3] = 0.5 * w;
        CovarianceMatrix::from_entries(e).unwrap()
    }

    #[test]
    fn vacuum_is_pure() {
        let v = vacuum(1.7);
        let (gt, lt) = symplectic_eigenvalues(&v).unwrap();
        assert!((gt - 0.5).abs() < 1e-15 && (lt - 0.5).abs() < 1e-15);
        let (gt, lt) = symplectic_eigenvalues_spectral(&v).unwrap();
        assert!((gt - 0.5).abs() < 1e-14 && (lt - 0.5).abs() < 1e-14);
    }

    #[test]
    fn transpose_is_involution() {
        let mut e = vacuum(1.0).entries;
        e[1][3] = 0.1;
        e[3][1] = 0.1;
        e[0][2] = 0.2;
        e[2][0] = 0.2;
        let v = CovarianceMatrix::from_entries(e).unwrap();
        let t = partial_transpose(&v);
        assert_eq!(t.entries[1][3], -0.1);
        assert_eq!(t.entries[0][2], 0.2);
        assert_eq!(partial_transpose(&t).entries, v.entries);
    }

    #[test]
    fn negativity_values() {
        assert_eq!(negativity(0.5).unwrap(), (0.0, 0.0));
        let (n, e) = negativity(0.25).unwrap();
        assert!((n - 1.0).abs() < 1e-15 && (e - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(negativity(0.6).unwrap(), (0.0, 0.0));
        assert!(negativity(0.0).is_err());
    }

    #[test]
    fn reduced_branches() {
        assert_eq!(eta_reduced(1.0, 2.0, 3.0, 4.0).2, EtaBranch::PlusChiMinusP);
        assert_eq!(eta_reduced(1.0, 2.0, 1.0, 2.0).2, EtaBranch::Degenerate);
        let (lt, gt, b) = eta_reduced(3.0, 1.0, 1.0, 2.0);
        assert_eq!((lt, gt, b), (1.0, 6.0, EtaBranch::MinusChiPlusP));
    }

    #[test]
    fn rejects_indefinite() {
        let mut e = vacuum(1.0).entries;
        e[0][2] = 1.0;
        e[2][0] = 1.0;
        let v = CovarianceMatrix::from_entries(e).unwrap();
        assert!(symplectic_eigenvalues(&v).is_err());
    }
}
