//! Truncated Fock-space reference: builds the many-body bare Hamiltonian, labels
//! its eigenstates by bare occupation, and reads off Kerr parameters from energies.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::BareParameters;
use crate::nonlinear::{KerrMethod, NonlinearParameters};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockConfig {
    pub levels_per_mode: usize,
    pub convergence_levels: usize,
    pub max_modes: usize,
    pub max_dimension: usize,
}

impl Default for FockConfig {
    fn default() -> Self {
        FockConfig { levels_per_mode: 6, convergence_levels: 8, max_modes: 3, max_dimension: 4096 }
    }
}

impl FockConfig {
    pub fn with_levels(levels: usize) -> Self {
        let d = FockConfig::default();
        FockConfig { levels_per_mode: levels, convergence_levels: d.convergence_levels.max(levels + 2), ..d }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels_per_mode < 3 {
            return Err(Error::Spec(format!("at least 3 levels per mode are needed, got {}", self.levels_per_mode)));
        }
        if self.convergence_levels <= self.levels_per_mode {
            return Err(Error::Spec(format!(
                "convergence levels ({}) must exceed levels per mode ({})",
                self.convergence_levels, self.levels_per_mode
            )));
        }
        Ok(())
    }
}

/// Dominant-overlap threshold below which a label counts as hybridized.
const LABEL_MIN_OVERLAP: f64 = 0.9;
/// Minimum overlap gap between the best and second-best eigenstate.
const LABEL_MIN_GAP: f64 = 0.05;
/// Relative shift that flags a parameter in the convergence check.
const CONVERGENCE_SHIFT: f64 = 0.01;

fn dimension(n: usize, levels: usize, cfg: &FockConfig) -> Result<usize> {
    if n > cfg.max_modes {
        return Err(Error::Resource(format!(
            "the oracle handles at most {} modes, got {n}",
            cfg.max_modes
        )));
    }
    let dim = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(levels));
    match dim {
        Some(d) if d <= cfg.max_dimension => Ok(d),
        _ => Err(Error::Resource(format!(
            "Fock space of {n} modes x {levels} levels exceeds the {}-state cap",
            cfg.max_dimension
        ))),
    }
}

fn occupations(index: usize, n: usize, levels: usize) -> Vec<usize> {
    let mut occ = vec![0; n];
    let mut rest = index;
    for k in (0..n).rev() {
        occ[k] = rest % levels;
        rest /= levels;
    }
    occ
}

fn basis_index(occ: &[usize], levels: usize) -> usize {
    occ.iter().fold(0, |acc, &o| acc * levels + o)
}

/// Σ (ω_m+α_m) n_m + (α_m/2) n_m(n_m−1) − Σ_{m<n} g_mn (a†_m−a_m)(a†_n−a_n)
/// in the product number basis, mode 0 the most significant digit.
pub fn build_fock_hamiltonian(bare: &BareParameters, levels: usize, cfg: &FockConfig) -> Result<DMatrix<f64>> {
    bare.validate()?;
    if levels < 3 {
        return Err(Error::Spec(format!("at least 3 levels per mode are needed, got {levels}")));
    }
    let n = bare.len();
    let dim = dimension(n, levels, cfg)?;
    let wnl = bare.omega_nl();
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let occ = occupations(i, n, levels);
        h[(i, i)] = (0..n)
            .map(|k| {
                let o = occ[k] as f64;
                wnl[k] * o + 0.5 * bare.alpha[k] * o * (o - 1.0)
            })
            .sum();
        for a in 0..n {
            for b in (a + 1)..n {
                let g = bare.g[(a, b)];
                if g == 0.0 {
                    continue;
                }
                // −g(a†b† + ab − a†b − ab†) acting on |occ⟩
                for (da, db, sign) in [(1i64, 1i64, -1.0), (-1, -1, -1.0), (1, -1, 1.0), (-1, 1, 1.0)] {
                    let (na, nb) = (occ[a] as i64 + da, occ[b] as i64 + db);
                    if na < 0 || nb < 0 || na >= levels as i64 || nb >= levels as i64 {
                        continue;
                    }
                    let fa = (occ[a].max(na as usize) as f64).sqrt();
                    let fb = (occ[b].max(nb as usize) as f64).sqrt();
                    let mut to = occ.clone();
                    to[a] = na as usize;
                    to[b] = nb as usize;
                    h[(basis_index(&to, levels), i)] += sign * g * fa * fb;
                }
            }
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelWarning {
    pub label: Vec<usize>,
    /// (energy MHz, overlap probability) of the two best candidates.
    pub candidates: [(f64, f64); 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockSpectrum {
    pub labels: Vec<Vec<usize>>,
    /// Energies relative to the labeled ground state (MHz).
    pub energies: Vec<f64>,
    /// Squared overlap of each labeled eigenstate with its bare product state.
    pub overlaps: Vec<f64>,
    pub warnings: Vec<LabelWarning>,
}

impl FockSpectrum {
    pub fn energy(&self, label: &[usize]) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.energies[i])
    }

    pub fn overlap(&self, label: &[usize]) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.overlaps[i])
    }
}

/// Ground, single, double and pair excitations of `n` modes.
fn required_labels(n: usize) -> Vec<Vec<usize>> {
    let unit = |k: usize, c: usize| {
        let mut v = vec![0; n];
        v[k] += c;
        v
    };
    let mut out = vec![vec![0; n]];
    out.extend((0..n).map(|k| unit(k, 1)));
    out.extend((0..n).map(|k| unit(k, 2)));
    for a in 0..n {
        for b in (a + 1)..n {
            let mut v = unit(a, 1);
            v[b] = 1;
            out.push(v);
        }
    }
    out
}

/// Dense diagonalization and assignment of every needed state by maximal overlap.
pub fn labeled_spectrum(h: &DMatrix<f64>, n_modes: usize, levels: usize) -> Result<FockSpectrum> {
    let dim = h.nrows();
    if h.ncols() != dim || levels.checked_pow(n_modes as u32) != Some(dim) {
        return Err(Error::Oracle(format!("matrix of size {dim} does not match {n_modes} modes x {levels} levels")));
    }
    let asym = (h - h.transpose()).amax();
    if asym > 1e-12 * h.amax().max(1.0) {
        return Err(Error::Oracle(format!("Hamiltonian is not Hermitian (asymmetry {asym:e})")));
    }
    let eig = SymmetricEigen::new(h.clone());
    let mut labels = Vec::new();
    let mut raw = Vec::new();
    let mut overlaps = Vec::new();
    let mut warnings = Vec::new();
    for label in required_labels(n_modes) {
        if label.iter().any(|&o| o >= levels) {
            continue;
        }
        let idx = basis_index(&label, levels);
        let probs: DVector<f64> = DVector::from_fn(dim, |k, _| eig.eigenvectors[(idx, k)].powi(2));
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
        let (best, second) = (order[0], order[1]);
        if probs[best] < LABEL_MIN_OVERLAP || probs[best] - probs[second] < LABEL_MIN_GAP {
            warnings.push(LabelWarning {
                label: label.clone(),
                candidates: [
                    (eig.eigenvalues[best], probs[best]),
                    (eig.eigenvalues[second], probs[second]),
                ],
            });
        }
        labels.push(label);
        raw.push(eig.eigenvalues[best]);
        overlaps.push(probs[best]);
    }
    let e0 = raw[0];
    let energies = raw.iter().map(|e| e - e0).collect();
    Ok(FockSpectrum { labels, energies, overlaps, warnings })
}

/// ω′nl = E(e_m), α′ = E(2e_m) − 2E(e_m), χ_mn = E(e_m+e_n) − E(e_m) − E(e_n).
pub fn oracle_parameters(spec: &FockSpectrum, names: &[String]) -> Result<NonlinearParameters> {
    let n = names.len();
    let get = |label: Vec<usize>| {
        spec.energy(&label)
            .ok_or_else(|| Error::Oracle(format!("no eigenstate labeled {label:?}")))
    };
    let unit = |k: usize, c: usize| {
        let mut v = vec![0; n];
        v[k] += c;
        v
    };
    let single = (0..n).map(|k| get(unit(k, 1))).collect::<Result<Vec<_>>>()?;
    let mut chi = DMatrix::zeros(n, n);
    let mut alpha_prime = DVector::zeros(n);
    for a in 0..n {
        alpha_prime[a] = get(unit(a, 2))? - 2.0 * single[a];
        chi[(a, a)] = 2.0 * alpha_prime[a];
        for b in (a + 1)..n {
            let mut v = unit(a, 1);
            v[b] = 1;
            let x = get(v)? - single[a] - single[b];
            chi[(a, b)] = x;
            chi[(b, a)] = x;
        }
    }
    Ok(NonlinearParameters {
        labels: names.to_vec(),
        omega_prime_nl: DVector::from_vec(single),
        alpha_prime,
        chi,
        method: KerrMethod::Oracle,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterShift {
    pub parameter: String,
    pub base: f64,
    pub refined: f64,
}

impl ParameterShift {
    pub fn relative(&self) -> f64 {
        if self.refined == 0.0 && self.base == 0.0 {
            0.0
        } else {
            (self.refined - self.base).abs() / self.refined.abs().max(self.base.abs())
        }
    }

    fn flagged(&self) -> bool {
        self.relative() > CONVERGENCE_SHIFT && (self.refined - self.base).abs() > 1e-6
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub levels: usize,
    pub convergence_levels: usize,
    pub shifts: Vec<ParameterShift>,
    pub flagged: Vec<String>,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.flagged.is_empty()
    }
}

fn shifts(names: &[String], base: &NonlinearParameters, refined: &NonlinearParameters) -> Vec<ParameterShift> {
    let n = names.len();
    let mut out = Vec::new();
    for a in 0..n {
        out.push(ParameterShift {
            parameter: format!("omega_prime_nl[{}]", names[a]),
            base: base.omega_prime_nl[a],
            refined: refined.omega_prime_nl[a],
        });
        out.push(ParameterShift {
            parameter: format!("alpha_prime[{}]", names[a]),
            base: base.alpha_prime[a],
            refined: refined.alpha_prime[a],
        });
        for b in (a + 1)..n {
            out.push(ParameterShift {
                parameter: format!("chi[{},{}]", names[a], names[b]),
                base: base.chi[(a, b)],
                refined: refined.chi[(a, b)],
            });
        }
    }
    out
}

/// Oracle output at the configured truncation together with its certification.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub parameters: NonlinearParameters,
    pub spectrum: FockSpectrum,
    pub convergence: ConvergenceReport,
}

fn solve(bare: &BareParameters, levels: usize, cfg: &FockConfig) -> Result<(NonlinearParameters, FockSpectrum)> {
    let h = build_fock_hamiltonian(bare, levels, cfg)?;
    let spec = labeled_spectrum(&h, bare.len(), levels)?;
    let params = oracle_parameters(&spec, &bare.names)?;
    Ok((params, spec))
}

/// Reruns at `convergence_levels` and flags every parameter that moves by more than 1%.
pub fn convergence_check(bare: &BareParameters, cfg: &FockConfig) -> Result<ConvergenceReport> {
    Ok(run_oracle(bare, cfg)?.convergence)
}

pub fn run_oracle(bare: &BareParameters, cfg: &FockConfig) -> Result<OracleResult> {
    cfg.validate()?;
    let (parameters, spectrum) = solve(bare, cfg.levels_per_mode, cfg)?;
    let (refined, _) = solve(bare, cfg.convergence_levels, cfg)?;
    let shifts = shifts(&bare.names, &parameters, &refined);
    let flagged = shifts.iter().filter(|s| s.flagged()).map(|s| s.parameter.clone()).collect();
    Ok(OracleResult {
        parameters,
        spectrum,
        convergence: ConvergenceReport {
            levels: cfg.levels_per_mode,
            convergence_levels: cfg.convergence_levels,
            shifts,
            flagged,
        },
    })
}
