//! Lumped circuit descriptions and their linear bare-mode quantization.
//!
//! Frequencies are ordinary frequencies `f = ω/2π` in MHz throughout. Capacitances
//! are in fF and inductances in nH; anything involving the flux quantum is
//! evaluated in SI units and converted back.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA exact values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Elementary charge (C).
    pub e: f64,
    /// Planck constant (J s).
    pub h: f64,
}

impl PhysicalConstants {
    pub const CODATA: PhysicalConstants = PhysicalConstants {
        e: 1.602176634e-19,
        h: 6.62607015e-34,
    };

    /// Superconducting flux quantum h/(2e) in Wb.
    pub fn flux_quantum(&self) -> f64 {
        self.h / (2.0 * self.e)
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}

const FF: f64 = 1e-15;
const NH: f64 = 1e-9;
const MHZ: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Transmon,
    Coupler,
    Resonator,
    Cavity,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementSpec {
    pub name: String,
    pub kind: ElementKind,
    /// Self-capacitance (fF).
    pub capacitance: f64,
    /// Linear inductance (nH).
    pub inductance: Option<f64>,
    /// Josephson inductance (nH).
    pub josephson_inductance: Option<f64>,
    /// Whether the element has two well-defined potential nodes for a voltage path.
    pub has_nodes: bool,
}

impl ElementSpec {
    pub fn linear(name: &str, kind: ElementKind, capacitance: f64, inductance: f64) -> Self {
        ElementSpec {
            name: name.to_string(),
            kind,
            capacitance,
            inductance: Some(inductance),
            josephson_inductance: None,
            has_nodes: true,
        }
    }

    pub fn junction(name: &str, kind: ElementKind, capacitance: f64, lj: f64) -> Self {
        ElementSpec {
            name: name.to_string(),
            kind,
            capacitance,
            inductance: None,
            josephson_inductance: Some(lj),
            has_nodes: true,
        }
    }

    /// The inductance seen by the linear stage: L_J for junction elements.
    pub fn effective_inductance(&self) -> Result<f64> {
        match (self.inductance, self.josephson_inductance) {
            (Some(l), None) | (None, Some(l)) => {
                if l > 0.0 && l.is_finite() {
                    Ok(l)
                } else {
                    Err(Error::Spec(format!(
                        "element {}: inductance must be positive, got {l}",
                        self.name
                    )))
                }
            }
            (None, None) => Err(Error::Spec(format!(
                "element {}: missing inductance (need L or L_J)",
                self.name
            ))),
            (Some(_), Some(_)) => Err(Error::Spec(format!(
                "element {}: both L and L_J given, exactly one is allowed",
                self.name
            ))),
        }
    }

    /// Bare linear frequency 1/(2π√(LC)) in MHz.
    pub fn bare_frequency(&self) -> Result<f64> {
        let l = self.effective_inductance()?;
        if !(self.capacitance > 0.0 && self.capacitance.is_finite()) {
            return Err(Error::Spec(format!(
                "element {}: capacitance must be positive, got {}",
                self.name, self.capacitance
            )));
        }
        Ok(1.0 / (2.0 * PI * (l * NH * self.capacitance * FF).sqrt()) / MHZ)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingKind {
    Capacitive,
    Inductive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSpec {
    pub a: String,
    pub b: String,
    /// Mutual capacitance (fF).
    pub mutual_capacitance: Option<f64>,
    /// Mutual inductance (nH).
    pub mutual_inductance: Option<f64>,
}

impl CouplingSpec {
    pub fn capacitive(a: &str, b: &str, c: f64) -> Self {
        CouplingSpec {
            a: a.into(),
            b: b.into(),
            mutual_capacitance: Some(c),
            mutual_inductance: None,
        }
    }

    pub fn inductive(a: &str, b: &str, m: f64) -> Self {
        CouplingSpec {
            a: a.into(),
            b: b.into(),
            mutual_capacitance: None,
            mutual_inductance: Some(m),
        }
    }

    fn kind(&self) -> Result<CouplingKind> {
        match (self.mutual_capacitance, self.mutual_inductance) {
            (Some(_), None) => Ok(CouplingKind::Capacitive),
            (None, Some(_)) => Ok(CouplingKind::Inductive),
            _ => Err(Error::Spec(format!(
                "coupling {}-{}: exactly one of C_mutual or M_mutual is required",
                self.a, self.b
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec {
    pub elements: Vec<ElementSpec>,
    pub couplings: Vec<CouplingSpec>,
    pub coupling_kind: CouplingKind,
}

impl CircuitSpec {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.elements.iter().position(|e| e.name == name)
    }

    pub fn element_mut(&mut self, name: &str) -> Result<&mut ElementSpec> {
        self.elements
            .iter_mut()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::Spec(format!("unknown element {name}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.elements.is_empty() {
            return Err(Error::Spec("circuit has no elements".into()));
        }
        let mut names = HashSet::new();
        for e in &self.elements {
            if !names.insert(e.name.as_str()) {
                return Err(Error::Spec(format!("duplicate element name {}", e.name)));
            }
            e.bare_frequency()?;
        }
        let mut pairs = HashSet::new();
        for c in &self.couplings {
            let kind = c.kind()?;
            if kind != self.coupling_kind {
                return Err(Error::Spec(format!(
                    "coupling {}-{} is {:?} but the circuit is declared {:?}; mixed coupling kinds are not supported",
                    c.a, c.b, kind, self.coupling_kind
                )));
            }
            if c.a == c.b {
                return Err(Error::Spec(format!("coupling {}-{} couples an element to itself", c.a, c.b)));
            }
            for n in [&c.a, &c.b] {
                if !names.contains(n.as_str()) {
                    return Err(Error::Spec(format!(
                        "coupling {}-{} references unknown element {n}",
                        c.a, c.b
                    )));
                }
            }
            let key = if c.a < c.b {
                (c.a.as_str(), c.b.as_str())
            } else {
                (c.b.as_str(), c.a.as_str())
            };
            if !pairs.insert(key) {
                return Err(Error::Spec(format!("duplicate coupling between {} and {}", c.a, c.b)));
            }
            let value = c.mutual_capacitance.or(c.mutual_inductance).unwrap();
            if !value.is_finite() {
                return Err(Error::Spec(format!("coupling {}-{}: non-finite value", c.a, c.b)));
            }
        }
        Ok(())
    }
}

/// Bare-mode description of a chip: frequencies, couplings and junction data.
#[derive(Debug, Clone, PartialEq)]
pub struct BareParameters {
    pub names: Vec<String>,
    /// Bare linear frequencies (MHz).
    pub omega: DVector<f64>,
    /// Symmetric coupling matrix (MHz), zero diagonal.
    pub g: DMatrix<f64>,
    /// Anharmonicities (MHz); zero for linear elements.
    pub alpha: DVector<f64>,
    /// Junction inductances (nH), zero where absent.
    pub lj: DVector<f64>,
}

impl BareParameters {
    /// Linear-stage parameters without junction data.
    pub fn new(names: Vec<String>, omega: DVector<f64>, g: DMatrix<f64>) -> Result<Self> {
        let n = names.len();
        let p = BareParameters {
            names,
            omega,
            g,
            alpha: DVector::zeros(n),
            lj: DVector::zeros(n),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Nonlinearity-corrected frequencies ω + α.
    pub fn omega_nl(&self) -> DVector<f64> {
        &self.omega + &self.alpha
    }

    /// Sets the anharmonicity of one element explicitly.
    pub fn with_alpha(mut self, index: usize, alpha: f64) -> Self {
        self.alpha[index] = alpha;
        self
    }

    /// Records junction inductances and attaches α = −ω²L_J/(2(Φ0/π)²) to every junction element.
    pub fn with_junctions(mut self, lj: &[f64]) -> Result<Self> {
        if lj.len() != self.len() {
            return Err(Error::Spec(format!(
                "expected {} junction inductances, got {}",
                self.len(),
                lj.len()
            )));
        }
        for (i, &l) in lj.iter().enumerate() {
            if l < 0.0 || !l.is_finite() {
                return Err(Error::Spec(format!("{}: L_J must be >= 0, got {l}", self.names[i])));
            }
            self.lj[i] = l;
            self.alpha[i] = if l > 0.0 {
                anharmonicity_from_lj(self.omega[i], l)?
            } else {
                0.0
            };
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.names.len();
        if self.omega.len() != n || self.alpha.len() != n || self.lj.len() != n {
            return Err(Error::Spec("bare parameter vectors have inconsistent lengths".into()));
        }
        if self.g.nrows() != n || self.g.ncols() != n {
            return Err(Error::Spec(format!("coupling matrix must be {n}x{n}")));
        }
        for i in 0..n {
            if !(self.omega[i] > 0.0 && self.omega[i].is_finite()) {
                return Err(Error::Spec(format!(
                    "{}: bare frequency must be positive, got {}",
                    self.names[i], self.omega[i]
                )));
            }
            if self.g[(i, i)] != 0.0 {
                return Err(Error::Spec(format!("{}: coupling diagonal must be zero", self.names[i])));
            }
            if self.lj[i] > 0.0 && self.alpha[i] > 0.0 {
                return Err(Error::Spec(format!(
                    "{}: junction anharmonicity must be <= 0",
                    self.names[i]
                )));
            }
            for j in 0..i {
                let (a, b) = (self.g[(i, j)], self.g[(j, i)]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1e-300) {
                    return Err(Error::Spec(format!(
                        "coupling matrix not symmetric at ({}, {})",
                        self.names[i], self.names[j]
                    )));
                }
            }
        }
        Ok(())
    }
}

fn bare_common(circuit: &CircuitSpec, expected: CouplingKind) -> Result<(Vec<String>, DVector<f64>, Vec<f64>)> {
    circuit.validate()?;
    if circuit.coupling_kind != expected {
        return Err(Error::Spec(format!(
            "circuit declares {:?} coupling, expected {:?}",
            circuit.coupling_kind, expected
        )));
    }
    let names = circuit.elements.iter().map(|e| e.name.clone()).collect();
    let omega = circuit
        .elements
        .iter()
        .map(|e| e.bare_frequency())
        .collect::<Result<Vec<_>>>()?;
    let lj = circuit
        .elements
        .iter()
        .map(|e| e.josephson_inductance.unwrap_or(0.0))
        .collect();
    Ok((names, DVector::from_vec(omega), lj))
}

fn assemble_bare(
    circuit: &CircuitSpec,
    names: Vec<String>,
    omega: DVector<f64>,
    lj: Vec<f64>,
    coupling: impl Fn(&CouplingSpec, usize, usize) -> Result<f64>,
) -> Result<BareParameters> {
    let n = names.len();
    let mut g = DMatrix::zeros(n, n);
    for c in &circuit.couplings {
        let i = circuit.index_of(&c.a).unwrap();
        let j = circuit.index_of(&c.b).unwrap();
        let v = coupling(c, i, j)?;
        g[(i, j)] = v;
        g[(j, i)] = v;
    }
    let mut p = BareParameters::new(names, omega, g)?;
    p.lj = DVector::from_vec(lj);
    Ok(p)
}

/// Linear bare parameters of a capacitively coupled circuit.
///
/// `g_mn = C_mn √(ω_m ω_n) / (2 √(C_m C_n))`, junctions enter through L_J.
/// The anharmonicity stays zero; attach it with [`BareParameters::with_junctions`].
pub fn build_bare_linear(circuit: &CircuitSpec) -> Result<BareParameters> {
    let (names, omega, lj) = bare_common(circuit, CouplingKind::Capacitive)?;
    let caps: Vec<f64> = circuit.elements.iter().map(|e| e.capacitance).collect();
    let w = omega.clone();
    assemble_bare(circuit, names, omega, lj, |c, i, j| {
        let cm = c.mutual_capacitance.unwrap();
        Ok(cm * (w[i] * w[j]).sqrt() / (2.0 * (caps[i] * caps[j]).sqrt()))
    })
}

/// Linear bare parameters of an inductively coupled circuit:
/// `g_mn = M_mn √(ω_m ω_n) / (2 √(L_m L_n))`.
pub fn build_bare_inductive(circuit: &CircuitSpec) -> Result<BareParameters> {
    let (names, omega, lj) = bare_common(circuit, CouplingKind::Inductive)?;
    let inds = circuit
        .elements
        .iter()
        .map(|e| e.effective_inductance())
        .collect::<Result<Vec<_>>>()?;
    let w = omega.clone();
    assemble_bare(circuit, names, omega, lj, |c, i, j| {
        let m = c.mutual_inductance.unwrap();
        Ok(m * (w[i] * w[j]).sqrt() / (2.0 * (inds[i] * inds[j]).sqrt()))
    })
}

/// Dispatches on the circuit's coupling kind.
pub fn build_bare(circuit: &CircuitSpec) -> Result<BareParameters> {
    match circuit.coupling_kind {
        CouplingKind::Capacitive => build_bare_linear(circuit),
        CouplingKind::Inductive => build_bare_inductive(circuit),
    }
}

/// Transmon anharmonicity α = −(2π²e²L_J/h) f² in MHz, i.e. −E_C/h.
pub fn anharmonicity_from_lj(omega_bare: f64, lj: f64) -> Result<f64> {
    if !(omega_bare > 0.0) || !(lj > 0.0) {
        return Err(Error::Spec(format!(
            "anharmonicity needs positive frequency and L_J, got f={omega_bare} MHz, L_J={lj} nH"
        )));
    }
    let k = PhysicalConstants::CODATA;
    let f = omega_bare * MHZ;
    Ok(-(2.0 * PI * PI * k.e * k.e * lj * NH / k.h) * f * f / MHZ)
}

/// Josephson energy E_J/h = (Φ0/2π)²/(L_J h) in GHz.
pub fn josephson_energy(lj: f64) -> Result<f64> {
    if !(lj > 0.0) {
        return Err(Error::Spec(format!("L_J must be positive, got {lj}")));
    }
    let k = PhysicalConstants::CODATA;
    let phi = k.flux_quantum() / (2.0 * PI);
    Ok(phi * phi / (lj * NH) / k.h / 1e9)
}

/// Charging energy E_C/h in GHz for a capacitance in fF.
pub fn charging_energy(capacitance: f64) -> f64 {
    let k = PhysicalConstants::CODATA;
    k.e * k.e / (2.0 * capacitance * FF) / k.h / 1e9
}

/// E_C/E_J for a junction element of frequency `f` (MHz) and inductance `lj` (nH),
/// with `ratio < 1/50` the usual transmon-regime flag.
pub fn transmon_ratio(f: f64, lj: f64) -> Result<f64> {
    let ec = -anharmonicity_from_lj(f, lj)? / 1e3;
    Ok(ec / josephson_energy(lj)?)
}

/// Self capacitances and direct mutual capacitances from a Maxwell capacitance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectCapacitances {
    /// C_m (fF): row sums of the Maxwell matrix.
    pub self_capacitance: Vec<f64>,
    /// (m, n, C_mn) with m < n and nonzero C_mn (fF).
    pub mutual: Vec<(usize, usize, f64)>,
}

impl DirectCapacitances {
    pub fn couplings(&self, names: &[String]) -> Vec<CouplingSpec> {
        self.mutual
            .iter()
            .map(|&(i, j, c)| CouplingSpec::capacitive(&names[i], &names[j], c))
            .collect()
    }
}

/// Converts a Maxwell (SPICE-style negative off-diagonal) capacitance matrix to the
/// direct form used by the bare Hamiltonian. First order in the mutual capacitances:
/// no network inversion is performed.
pub fn maxwell_to_direct(maxwell: &DMatrix<f64>) -> Result<DirectCapacitances> {
    let n = maxwell.nrows();
    if maxwell.ncols() != n || n == 0 {
        return Err(Error::Format("Maxwell matrix must be square and nonempty".into()));
    }
    let mut self_capacitance = Vec::with_capacity(n);
    let mut mutual = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (maxwell[(i, j)], maxwell[(j, i)]);
            if (a - b).abs() > 1e-9 * a.abs().max(b.abs()) {
                return Err(Error::Format(format!("Maxwell matrix not symmetric at ({i}, {j})")));
            }
            if i != j && a > 0.0 {
                return Err(Error::Format(format!(
                    "Maxwell off-diagonal ({i}, {j}) = {a} must be <= 0"
                )));
            }
        }
        let row: f64 = maxwell.row(i).sum();
        if !(row > 0.0) {
            return Err(Error::Format(format!("row {i} is not diagonally dominant")));
        }
        self_capacitance.push(row);
        for j in (i + 1)..n {
            let c = -maxwell[(i, j)];
            if c != 0.0 {
                mutual.push((i, j, c));
            }
        }
    }
    Ok(DirectCapacitances { self_capacitance, mutual })
}

/// Builds a capacitive circuit whose bare parameters equal `target` exactly, by
/// choosing C_m from ω_m and the junction/linear inductances and inverting the
/// coupling formula for C_mn.
pub fn circuit_from_bare(
    target: &BareParameters,
    kinds: &[ElementKind],
    inductances: &[f64],
    junction: &[bool],
) -> Result<CircuitSpec> {
    let n = target.len();
    if kinds.len() != n || inductances.len() != n || junction.len() != n {
        return Err(Error::Spec("circuit_from_bare: argument lengths differ".into()));
    }
    let mut elements = Vec::with_capacity(n);
    let mut caps = Vec::with_capacity(n);
    for i in 0..n {
        let w = 2.0 * PI * target.omega[i] * MHZ;
        let c = 1.0 / (w * w * inductances[i] * NH) / FF;
        caps.push(c);
        elements.push(if junction[i] {
            ElementSpec::junction(&target.names[i], kinds[i], c, inductances[i])
        } else {
            ElementSpec::linear(&target.names[i], kinds[i], c, inductances[i])
        });
    }
    let mut couplings = Vec::new();
    let index: HashMap<usize, f64> = caps.iter().copied().enumerate().collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let g = target.g[(i, j)];
            if g != 0.0 {
                let cm = 2.0 * g * (index[&i] * index[&j]).sqrt() / (target.omega[i] * target.omega[j]).sqrt();
                couplings.push(CouplingSpec::capacitive(&target.names[i], &target.names[j], cm));
            }
        }
    }
    let spec = CircuitSpec {
        elements,
        couplings,
        coupling_kind: CouplingKind::Capacitive,
    };
    spec.validate()?;
    Ok(spec)
}
