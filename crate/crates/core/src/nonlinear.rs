//! Kerr parameters of the normal modes, the participation-formula alternative,
//! and closed-form loss rates.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::BareParameters;
use crate::modal::TransformMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KerrMethod {
    #[serde(rename = "IEPR")]
    Iepr,
    #[serde(rename = "EPR_formula")]
    EprFormula,
    #[serde(rename = "oracle")]
    Oracle,
}

/// Normal-mode nonlinear parameters, one entry per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearParameters {
    /// Element each mode is attributed to.
    pub labels: Vec<String>,
    /// Renormalized frequencies (MHz).
    pub omega_prime_nl: DVector<f64>,
    /// Self-Kerr (MHz).
    pub alpha_prime: DVector<f64>,
    /// Cross-Kerr (MHz), full matrix with χ_mm = 2α′_m.
    pub chi: DMatrix<f64>,
    pub method: KerrMethod,
}

impl NonlinearParameters {
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// (ω′nl, α′) of the mode attributed to `label`.
    pub fn mode(&self, label: &str) -> Option<(f64, f64)> {
        self.index_of(label).map(|i| (self.omega_prime_nl[i], self.alpha_prime[i]))
    }

    pub fn cross(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.chi[(self.index_of(a)?, self.index_of(b)?)])
    }
}

fn check_dims(u: &TransformMatrix, omega_prime: &DVector<f64>, omega_bare: &DVector<f64>, alpha: &DVector<f64>) -> Result<()> {
    let (modes, elements) = u.matrix().shape();
    if omega_prime.len() != modes || omega_bare.len() != elements || alpha.len() != elements {
        return Err(Error::Spec(format!(
            "dimension mismatch: U is {modes}x{elements}, {} normal and {} bare frequencies, {} anharmonicities",
            omega_prime.len(),
            omega_bare.len(),
            alpha.len()
        )));
    }
    Ok(())
}

/// χ_mn = 2 Σ_k u_mk² u_nk² (ω′_m ω′_n / ω_k²) α_k.
///
/// Only elements with α_k ≠ 0 contribute, so columns of linear elements may be
/// unknown (NaN).
pub fn cross_kerr(
    u: &TransformMatrix,
    omega_prime: &DVector<f64>,
    omega_bare: &DVector<f64>,
    alpha_bare: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    check_dims(u, omega_prime, omega_bare, alpha_bare)?;
    let u = u.matrix();
    let n = u.nrows();
    let junctions: Vec<usize> = (0..alpha_bare.len()).filter(|&k| alpha_bare[k] != 0.0).collect();
    Ok(DMatrix::from_fn(n, n, |m, j| {
        2.0 * junctions
            .iter()
            .map(|&k| {
                let (a, b) = (u[(m, k)], u[(j, k)]);
                a * a * b * b * omega_prime[m] * omega_prime[j] / (omega_bare[k] * omega_bare[k]) * alpha_bare[k]
            })
            .sum::<f64>()
    }))
}

/// α′_m = Σ_k u_mk⁴ (ω′_m² / ω_k²) α_k.
pub fn self_kerr(
    u: &TransformMatrix,
    omega_prime: &DVector<f64>,
    omega_bare: &DVector<f64>,
    alpha_bare: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_dims(u, omega_prime, omega_bare, alpha_bare)?;
    let u = u.matrix();
    Ok(DVector::from_fn(u.nrows(), |m, _| {
        (0..alpha_bare.len())
            .filter(|&k| alpha_bare[k] != 0.0)
            .map(|k| u[(m, k)].powi(4) * omega_prime[m].powi(2) / omega_bare[k].powi(2) * alpha_bare[k])
            .sum()
    }))
}

/// ω′nl_m = ω′_m + ½ Σ_k χ_mk, the sum including k = m.
pub fn renormalized_frequencies(omega_prime: &DVector<f64>, chi: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(omega_prime.len(), |m, _| omega_prime[m] + 0.5 * chi.row(m).sum())
}

/// Attribution of modes to elements by largest |u|, ignoring unknown columns.
fn mode_labels(u: &DMatrix<f64>, names: &[String]) -> Vec<String> {
    let mut labels: Vec<String> = u
        .row_iter()
        .map(|row| {
            let best = row
                .iter()
                .enumerate()
                .filter(|(_, v)| v.is_finite())
                .fold((0usize, -1.0f64), |acc, (j, v)| if v.abs() > acc.1 { (j, v.abs()) } else { acc });
            names[best.0].clone()
        })
        .collect();
    for m in 0..labels.len() {
        if labels.iter().filter(|l| **l == labels[m]).count() > 1 {
            labels[m] = format!("{}#{m}", labels[m]);
        }
    }
    labels
}

/// Kerr parameters from the transform and the bare junction anharmonicities.
pub fn iepr_kerr(
    u: &TransformMatrix,
    omega_prime: &DVector<f64>,
    bare: &BareParameters,
    names: &[String],
) -> Result<NonlinearParameters> {
    let chi = cross_kerr(u, omega_prime, &bare.omega, &bare.alpha)?;
    let alpha_prime = self_kerr(u, omega_prime, &bare.omega, &bare.alpha)?;
    let omega_prime_nl = renormalized_frequencies(omega_prime, &chi);
    Ok(NonlinearParameters {
        labels: mode_labels(u.matrix(), names),
        omega_prime_nl,
        alpha_prime,
        chi,
        method: KerrMethod::Iepr,
    })
}

/// Participation-ratio formulas with junction participations `p` (modes × junctions)
/// and Josephson energies in MHz:
/// α′_m = −Σ_j ω′_m² p_mj² / (8E_J,j), χ_mn = −Σ_j ω′_m ω′_n p_mj p_nj / (4E_J,j).
pub fn epr_formula_kerr(
    p: &DMatrix<f64>,
    omega_prime: &DVector<f64>,
    ej_mhz: &[f64],
    labels: Vec<String>,
) -> Result<NonlinearParameters> {
    if p.ncols() != ej_mhz.len() {
        return Err(Error::Spec(format!(
            "participation matrix has {} junction columns but {} Josephson energies were given",
            p.ncols(),
            ej_mhz.len()
        )));
    }
    if p.nrows() != omega_prime.len() || labels.len() != omega_prime.len() {
        return Err(Error::Spec("participation rows must match the number of modes".into()));
    }
    if let Some(e) = ej_mhz.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::Spec(format!("Josephson energy must be positive, got {e}")));
    }
    let n = p.nrows();
    let chi = DMatrix::from_fn(n, n, |m, k| {
        -(0..ej_mhz.len())
            .map(|j| omega_prime[m] * omega_prime[k] * p[(m, j)] * p[(k, j)] / (4.0 * ej_mhz[j]))
            .sum::<f64>()
    });
    let alpha_prime = DVector::from_fn(n, |m, _| chi[(m, m)] / 2.0);
    // ω′ + α′ + ½ Σ_{k≠m} χ_mk
    let omega_prime_nl = renormalized_frequencies(omega_prime, &chi);
    Ok(NonlinearParameters {
        labels,
        omega_prime_nl,
        alpha_prime,
        chi,
        method: KerrMethod::EprFormula,
    })
}

/// Readout loss inputs; all frequencies in MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    /// Transmission-line impedance (Ω), kept for reference.
    pub line_impedance: f64,
    pub omega_r: f64,
    pub g_rt: f64,
    pub g_qr: f64,
    pub delta_qr: f64,
}

/// κ_r = 4g_rt²/ω_r and the Purcell rate γ_q = (g_qr/Δ_qr)² κ_r, both in MHz.
pub fn loss_rates(spec: &LossSpec) -> Result<(f64, f64)> {
    if !(spec.omega_r > 0.0) {
        return Err(Error::Spec(format!("resonator frequency must be positive, got {}", spec.omega_r)));
    }
    if spec.delta_qr == 0.0 {
        return Err(Error::Spec("qubit-resonator detuning is zero; the Purcell rate diverges".into()));
    }
    let kappa = 4.0 * spec.g_rt * spec.g_rt / spec.omega_r;
    let gamma = (spec.g_qr / spec.delta_qr).powi(2) * kappa;
    Ok((kappa, gamma))
}
