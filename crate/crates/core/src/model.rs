//! System parameters, normal modes, stability and regime classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width of the crossover band around varsigma = 1.
pub const CROSSOVER_MARGIN: f64 = 0.1;

/// Physical configuration in natural units (hbar = c = 1).
///
/// `beta = None` means zero temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    #[serde(default = "default_mass")]
    pub m: f64,
    pub omega: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub ell: f64,
    pub lambda_cut: f64,
    #[serde(default)]
    pub beta: Option<f64>,
}

fn default_mass() -> f64 {
    1.0
}

impl SystemParams {
    /// Zero-temperature parameters with unit mass.
    pub fn new(omega: f64, gamma: f64, sigma: f64, ell: f64, lambda_cut: f64) -> Self {
        Self { m: 1.0, omega, gamma, sigma, ell, lambda_cut, beta: None }
    }

    pub fn with_ell(self, ell: f64) -> Self {
        Self { ell, ..self }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }

    pub fn with_sigma(self, sigma: f64) -> Self {
        Self { sigma, ..self }
    }

    pub fn with_beta(self, beta: Option<f64>) -> Self {
        Self { beta, ..self }
    }

    /// Structural checks shared by every computation.
    pub fn validate_basic(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        let all_finite =
            [self.m, self.omega, self.gamma, self.sigma, self.ell, self.lambda_cut].iter().all(|v| v.is_finite());
        if !all_finite {
            return bad("all parameters must be finite".into());
        }
        if self.m <= 0.0 {
            return bad(format!("m must be > 0 (got {})", self.m));
        }
        if self.omega <= 0.0 {
            return bad(format!("omega must be > 0 (got {})", self.omega));
        }
        if self.gamma < 0.0 {
            return bad(format!("gamma must be >= 0 (got {})", self.gamma));
        }
        if self.ell <= 0.0 {
            return bad(format!("ell must be > 0 (got {})", self.ell));
        }
        if self.lambda_cut <= self.omega {
            return bad(format!("lambda_cut must exceed omega (got {} <= {})", self.lambda_cut, self.omega));
        }
        if self.sigma.abs() >= self.omega * self.omega {
            return bad(format!("|sigma| must be < omega^2 (got {})", self.sigma));
        }
        if let Some(b) = self.beta {
            if !(b > 0.0) {
                return bad(format!("beta must be > 0 (got {b})"));
            }
        }
        Ok(())
    }

    /// Full invariant set, including the weak-coupling bound sigma < omega^2 - gamma^2.
    pub fn validate(&self) -> Result<()> {
        self.validate_basic()?;
        let w2 = self.omega * self.omega;
        if self.sigma >= w2 - self.gamma * self.gamma {
            return Err(Error::InvalidParams(format!(
                "sigma must be < omega^2 - gamma^2 (got sigma = {}, bound {})",
                self.sigma,
                w2 - self.gamma * self.gamma
            )));
        }
        Ok(())
    }

    pub fn zero_temperature(&self) -> bool {
        self.beta.is_none()
    }

    pub fn omega_sq(&self, branch: Branch) -> f64 {
        self.omega * self.omega + branch.sign() * self.sigma
    }
}

/// Normal mode: centre of mass (plus) or relative coordinate (minus).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Plus, Branch::Minus];

    /// +1 for plus, -1 for minus.
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    /// Weight relating the mode moments to the late-time integrals.
    pub fn weight(self) -> f64 {
        match self {
            Branch::Plus => 0.5,
            Branch::Minus => 2.0,
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        })
    }
}

/// Per-mode derived frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeView {
    pub branch: Branch,
    /// omega_pm = sqrt(omega^2 +- sigma)
    pub omega_mode: f64,
    /// Omega_pm = sqrt(omega_pm^2 - gamma^2); `None` when the mode is overdamped.
    pub resonance: Option<f64>,
    pub weight: f64,
}

impl ModeView {
    pub fn omega_sq(&self) -> f64 {
        self.omega_mode * self.omega_mode
    }

    /// Resonance frequency, or a domain error for an overdamped mode.
    pub fn resonance(&self) -> Result<f64> {
        self.resonance.ok_or_else(|| Error::Domain(format!("{} mode is overdamped (gamma >= omega_mode)", self.branch)))
    }
}

/// Mode frequencies for one branch. Errors only when omega_pm^2 <= 0.
pub fn mode_view(params: &SystemParams, branch: Branch) -> Result<ModeView> {
    let w2 = params.omega_sq(branch);
    if !(w2 > 0.0) {
        return Err(Error::Domain(format!("{branch} mode frequency squared is {w2} <= 0")));
    }
    let r2 = w2 - params.gamma * params.gamma;
    Ok(ModeView { branch, omega_mode: w2.sqrt(), resonance: (r2 > 0.0).then(|| r2.sqrt()), weight: branch.weight() })
}

/// Renormalized frequency squared from the bare one: omega_b^2 - 4 gamma Lambda / pi.
pub fn renormalized_frequency(omega_bare_sq: f64, gamma: f64, lambda_cut: f64) -> Result<f64> {
    let w2 = omega_bare_sq - 4.0 * gamma * lambda_cut / std::f64::consts::PI;
    if w2 > 0.0 {
        Ok(w2)
    } else {
        Err(Error::Domain(format!("renormalized frequency squared {w2} <= 0")))
    }
}

/// True when the branch is stable: 2 gamma < omega_pm^2 ell. The boundary counts as unstable.
pub fn branch_stable(params: &SystemParams, branch: Branch) -> bool {
    2.0 * params.gamma < params.omega_sq(branch) * params.ell
}

/// (stable_plus, stable_minus).
pub fn stability_check(params: &SystemParams) -> (bool, bool) {
    (branch_stable(params, Branch::Plus), branch_stable(params, Branch::Minus))
}

pub fn require_stable(params: &SystemParams) -> Result<()> {
    for b in Branch::BOTH {
        if !branch_stable(params, b) {
            return Err(Error::Unstable(format!(
                "{b} mode: 2 gamma = {} >= omega_{b}^2 ell = {}",
                2.0 * params.gamma,
                params.omega_sq(b) * params.ell
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    DirectDominated,
    Crossover,
    InducedDominated,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::DirectDominated => "direct_dominated",
            Regime::Crossover => "crossover",
            Regime::InducedDominated => "induced_dominated",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeReport {
    pub varsigma: f64,
    pub regime: Regime,
    pub stable_plus: bool,
    pub stable_minus: bool,
    /// Time scale 1/(gamma omega_-^2 ell^2) bounding the zero-separation picture.
    pub zero_sep_validity_time: f64,
}

/// varsigma = sigma ell / (2 gamma).
pub fn varsigma(params: &SystemParams) -> Result<f64> {
    if params.gamma <= 0.0 {
        return Err(Error::Domain("varsigma undefined for gamma = 0".into()));
    }
    Ok(params.sigma * params.ell / (2.0 * params.gamma))
}

pub fn regime_of(varsigma: f64) -> Regime {
    if varsigma > 1.0 + CROSSOVER_MARGIN {
        Regime::DirectDominated
    } else if varsigma < 1.0 - CROSSOVER_MARGIN {
        Regime::InducedDominated
    } else {
        Regime::Crossover
    }
}

pub fn classify_regime(params: &SystemParams) -> Result<RegimeReport> {
    let vs = varsigma(params)?;
    let (stable_plus, stable_minus) = stability_check(params);
    let wm2 = params.omega_sq(Branch::Minus);
    Ok(RegimeReport {
        varsigma: vs,
        regime: regime_of(vs),
        stable_plus,
        stable_minus,
        zero_sep_validity_time: 1.0 / (params.gamma * wm2 * params.ell * params.ell),
    })
}

/// Equations of motion of the coincident-oscillator picture, obtained by
/// choosing Lambda ell = pi/2 and dropping retardation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroSeparationModel {
    pub branch: Branch,
    /// Coefficient of the velocity term (4 gamma for plus, 0 for minus).
    pub damping_coeff: f64,
    /// Effective frequency squared.
    pub freq_sq: f64,
    /// Results are trustworthy only for t much shorter than this.
    pub validity_time: f64,
}

pub fn zero_separation_model(params: &SystemParams, branch: Branch) -> Result<ZeroSeparationModel> {
    params.validate_basic()?;
    // with Lambda ell = pi/2 the shift 4 gamma Lambda / pi equals 2 gamma / ell
    let shift = 2.0 * params.gamma / params.ell;
    let (damping_coeff, freq_sq) = match branch {
        Branch::Plus => (4.0 * params.gamma, params.omega_sq(branch) - shift),
        Branch::Minus => (0.0, params.omega_sq(branch) + shift),
    };
    let wm2 = params.omega_sq(Branch::Minus);
    Ok(ZeroSeparationModel {
        branch,
        damping_coeff,
        freq_sq,
        validity_time: 1.0 / (params.gamma * wm2 * params.ell * params.ell),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> SystemParams {
        SystemParams::new(1.0, 0.1, 0.5, 1.0, 100.0)
    }

    #[test]
    fn renormalization_examples() {
        let w2 = renormalized_frequency(25.0 + 4.0 * 0.1 * 100.0 / std::f64::consts::PI, 0.1, 100.0).unwrap();
        assert!((w2 - 25.0).abs() < 1e-12);
        assert_eq!(renormalized_frequency(2.0, 0.0, 10.0).unwrap(), 2.0);
        assert!(renormalized_frequency(1.0, 0.1, 10.0).is_err());
    }

    #[test]
    fn mode_view_examples() {
        let p = SystemParams::new(5.0, 0.1, 5.0, 1.0, 100.0);
        assert!((mode_view(&p, Branch::Plus).unwrap().omega_sq() - 30.0).abs() < 1e-12);
        assert!((mode_view(&p, Branch::Minus).unwrap().omega_sq() - 20.0).abs() < 1e-12);
        let m = mode_view(&base(), Branch::Minus).unwrap();
        assert!((m.resonance.unwrap().powi(2) - 0.49).abs() < 1e-12);
        assert_eq!(m.weight, 2.0);
    }

    #[test]
    fn stability_examples() {
        let p = SystemParams::new(1.0, 1.0, 0.0, 0.5, 100.0);
        assert_eq!(stability_check(&p), (false, false));
        assert_eq!(stability_check(&p.with_gamma(0.0)), (true, true));
        let p = SystemParams::new(1.0, 0.2, 0.5, 1.0, 100.0);
        assert_eq!(stability_check(&p), (true, true));
        // exactly on the boundary counts as unstable
        let p = SystemParams::new(1.0, 0.25, 0.5, 1.0, 100.0);
        assert_eq!(stability_check(&p), (true, false));
    }

    #[test]
    fn regime_examples() {
        let p = SystemParams::new(2.0, 0.1, 1.0, 2.0, 100.0);
        let r = classify_regime(&p).unwrap();
        assert!((r.varsigma - 10.0).abs() < 1e-12);
        assert_eq!(r.regime, Regime::DirectDominated);
        let p = SystemParams::new(2.0, 0.1, 0.01, 0.1, 100.0);
        let r = classify_regime(&p).unwrap();
        assert!((r.varsigma - 0.005).abs() < 1e-15);
        assert_eq!(r.regime, Regime::InducedDominated);
        let p = SystemParams::new(2.0, 0.1, 0.2, 1.0, 100.0);
        assert_eq!(classify_regime(&p).unwrap().regime, Regime::Crossover);
        assert!(classify_regime(&p.with_gamma(0.0)).is_err());
    }

    #[test]
    fn validation() {
        assert!(base().validate().is_ok());
        assert!(base().with_sigma(0.995).validate().is_err());
        assert!(SystemParams { lambda_cut: 0.5, ..base() }.validate().is_err());
        assert!(base().with_beta(Some(-1.0)).validate().is_err());
    }

    #[test]
    fn zero_separation_frequencies_match_smoothed_ones() {
        let p = base();
        let plus = zero_separation_model(&p, Branch::Plus).unwrap();
        let minus = zero_separation_model(&p, Branch::Minus).unwrap();
        assert!((plus.freq_sq + minus.freq_sq - 2.0).abs() < 1e-14);
        assert_eq!(plus.damping_coeff, 0.4);
        assert_eq!(minus.damping_coeff, 0.0);
    }
}
