//! JSON file formats and their conversion to the domain types.
//!
//! Every file may carry a `manifest` object; it is preserved on output and
//! ignored on input. Unknown keys are rejected. Matrix entries that are not
//! available (NaN internally) are written as `null`.

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analysis::{ReductionResult, SweepResult};
use crate::error::{Error, Result};
use crate::extract::ExtractionReport;
use crate::fieldproc::{ExportMode, FieldExport, FieldSample, PathSamples, PathSpec};
use crate::modal::{NormalModeSet, Participation, Provenance};
use crate::model::{BareParameters, CircuitSpec, CouplingKind, CouplingSpec, ElementKind, ElementSpec};
use crate::nonlinear::{KerrMethod, NonlinearParameters};
use crate::oracle::OracleResult;

/// Reproducibility header written into every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub seed: u64,
    pub version: String,
}

/// Parses `text` as `T`, reporting the failing field path and position.
pub fn parse_json<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let parsed: std::result::Result<T, _> = serde_path_to_error::deserialize(&mut de);
    let value = parsed.map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let at = if path.is_empty() || path == "." { String::new() } else { format!(" at field {path}") };
        Error::Format(format!("{what}: {inner}{at}"))
    })?;
    de.end().map_err(|e| Error::Format(format!("{what}: {e}")))?;
    Ok(value)
}

fn opt(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn vec_out(v: &DVector<f64>) -> Vec<Option<f64>> {
    v.iter().map(|&x| opt(x)).collect()
}

fn mat_out(m: &DMatrix<f64>) -> Vec<Vec<Option<f64>>> {
    m.row_iter().map(|r| r.iter().map(|&x| opt(x)).collect()).collect()
}

fn mat_in(rows: &[Vec<Option<f64>>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if let Some(i) = rows.iter().position(|r| r.len() != m) {
        return Err(Error::Format(format!("{what}: row {i} has {} entries, expected {m}", rows[i].len())));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j].unwrap_or(f64::NAN)))
}

fn vec_in(v: &[Option<f64>]) -> DVector<f64> {
    DVector::from_iterator(v.len(), v.iter().map(|x| x.unwrap_or(f64::NAN)))
}

// ---------------------------------------------------------------- circuit

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementFile {
    pub name: String,
    pub kind: ElementKind,
    #[serde(rename = "C")]
    pub capacitance: f64,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub inductance: Option<f64>,
    #[serde(rename = "L_J", default, skip_serializing_if = "Option::is_none")]
    pub josephson_inductance: Option<f64>,
    #[serde(default = "yes")]
    pub has_nodes: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingFile {
    pub a: String,
    pub b: String,
    #[serde(rename = "C_mutual", default, skip_serializing_if = "Option::is_none")]
    pub mutual_capacitance: Option<f64>,
    #[serde(rename = "M_mutual", default, skip_serializing_if = "Option::is_none")]
    pub mutual_inductance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
    pub elements: Vec<ElementFile>,
    #[serde(default)]
    pub couplings: Vec<CouplingFile>,
    #[serde(default = "capacitive")]
    pub coupling_kind: CouplingKind,
}

fn capacitive() -> CouplingKind {
    CouplingKind::Capacitive
}

impl CircuitFile {
    pub fn to_spec(&self) -> Result<CircuitSpec> {
        let spec = CircuitSpec {
            elements: self
                .elements
                .iter()
                .map(|e| ElementSpec {
                    name: e.name.clone(),
                    kind: e.kind,
                    capacitance: e.capacitance,
                    inductance: e.inductance,
                    josephson_inductance: e.josephson_inductance,
                    has_nodes: e.has_nodes,
                })
                .collect(),
            couplings: self
                .couplings
                .iter()
                .map(|c| CouplingSpec {
                    a: c.a.clone(),
                    b: c.b.clone(),
                    mutual_capacitance: c.mutual_capacitance,
                    mutual_inductance: c.mutual_inductance,
                })
                .collect(),
            coupling_kind: self.coupling_kind,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_spec(spec: &CircuitSpec) -> Self {
        CircuitFile {
            manifest: None,
            elements: spec
                .elements
                .iter()
                .map(|e| ElementFile {
                    name: e.name.clone(),
                    kind: e.kind,
                    capacitance: e.capacitance,
                    inductance: e.inductance,
                    josephson_inductance: e.josephson_inductance,
                    has_nodes: e.has_nodes,
                })
                .collect(),
            couplings: spec
                .couplings
                .iter()
                .map(|c| CouplingFile {
                    a: c.a.clone(),
                    b: c.b.clone(),
                    mutual_capacitance: c.mutual_capacitance,
                    mutual_inductance: c.mutual_inductance,
                })
                .collect(),
            coupling_kind: spec.coupling_kind,
        }
    }
}

// ---------------------------------------------------------------- modes

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeFreq {
    #[serde(rename = "freq_MHz")]
    pub freq_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "is_inductive")]
    pub participation: Participation,
    pub elements: Vec<String>,
    pub modes: Vec<ModeFreq>,
    pub iepr: Vec<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signs: Option<Vec<Vec<Option<f64>>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nodeless: Vec<String>,
    #[serde(rename = "LJ_nH", default, skip_serializing_if = "Option::is_none")]
    pub lj_nh: Option<Vec<f64>>,
}

fn is_inductive(p: &Participation) -> bool {
    *p == Participation::Inductive
}

impl ModesFile {
    pub fn to_modes(&self) -> Result<NormalModeSet> {
        let n = self.elements.len();
        let mut nodeless = Vec::new();
        for name in &self.nodeless {
            let i = self
                .elements
                .iter()
                .position(|e| e == name)
                .ok_or_else(|| Error::Format(format!("node-less element {name} is not in the element list")))?;
            nodeless.push(i);
        }
        let r = mat_in(&self.iepr, "iepr")?;
        if r.nrows() != n || r.ncols() != n {
            return Err(Error::Format(format!("iepr must be {n}x{n}, got {}x{}", r.nrows(), r.ncols())));
        }
        for m in 0..n {
            for j in 0..n {
                if !nodeless.contains(&j) && self.iepr[m][j].is_none() {
                    return Err(Error::Format(format!("iepr entry ({m},{j}) is missing")));
                }
            }
        }
        let s = self.signs.as_ref().map(|s| mat_in(s, "signs")).transpose()?;
        if let (Some(s), Some(raw)) = (&s, &self.signs) {
            for m in 0..s.nrows() {
                for j in 0..s.ncols() {
                    if !nodeless.contains(&j) && raw[m][j].is_none() {
                        return Err(Error::Format(format!("sign entry ({m},{j}) is missing")));
                    }
                }
            }
        }
        let modes = NormalModeSet {
            names: self.elements.clone(),
            omega_prime: DVector::from_iterator(self.modes.len(), self.modes.iter().map(|m| m.freq_mhz)),
            r,
            s,
            provenance: self.provenance,
            participation: self.participation,
            nodeless,
            lj: self.lj_nh.as_ref().map(|v| DVector::from_column_slice(v)),
        };
        modes.validate()?;
        Ok(modes)
    }

    pub fn from_modes(modes: &NormalModeSet) -> Self {
        ModesFile {
            manifest: None,
            provenance: modes.provenance,
            participation: modes.participation,
            elements: modes.names.clone(),
            modes: modes.omega_prime.iter().map(|&f| ModeFreq { freq_mhz: f }).collect(),
            iepr: mat_out(&modes.r),
            signs: modes.s.as_ref().map(|s| {
                let mut out = mat_out(s);
                for row in out.iter_mut() {
                    for &j in &modes.nodeless {
                        row[j] = None;
                    }
                }
                out
            }),
            nodeless: modes.nodeless.iter().map(|&j| modes.names[j].clone()).collect(),
            lj_nh: modes.lj.as_ref().map(|v| v.iter().copied().collect()),
        }
    }
}

// ---------------------------------------------------------------- fields

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldModeFile {
    #[serde(rename = "freq_MHz")]
    pub freq_mhz: f64,
    pub total_inductive_energy_J: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathFile {
    pub element: String,
    pub polyline_mm: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub orientation_note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointFile {
    pub s_mm: f64,
    #[serde(rename = "E_Vpm")]
    pub e_vpm: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleFile {
    pub mode: usize,
    pub element: String,
    pub points: Vec<PointFile>,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
    pub modes: Vec<FieldModeFile>,
    pub paths: Vec<PathFile>,
    pub samples: Vec<SampleFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nodeless_elements: Vec<String>,
}

impl FieldsFile {
    pub fn to_export(&self) -> FieldExport {
        FieldExport {
            modes: self
                .modes
                .iter()
                .map(|m| ExportMode { freq_mhz: m.freq_mhz, total_inductive_energy: m.total_inductive_energy_J })
                .collect(),
            paths: self
                .paths
                .iter()
                .map(|p| PathSpec {
                    element: p.element.clone(),
                    polyline: p.polyline_mm.clone(),
                    orientation_note: p.orientation_note.clone(),
                })
                .collect(),
            samples: self
                .samples
                .iter()
                .map(|s| PathSamples {
                    mode: s.mode,
                    element: s.element.clone(),
                    points: s.points.iter().map(|p| FieldSample { s_mm: p.s_mm, e: p.e_vpm }).collect(),
                })
                .collect(),
            nodeless_elements: self.nodeless_elements.clone(),
        }
    }

    pub fn from_export(export: &FieldExport) -> Self {
        FieldsFile {
            manifest: None,
            modes: export
                .modes
                .iter()
                .map(|m| FieldModeFile { freq_mhz: m.freq_mhz, total_inductive_energy_J: m.total_inductive_energy })
                .collect(),
            paths: export
                .paths
                .iter()
                .map(|p| PathFile {
                    element: p.element.clone(),
                    polyline_mm: p.polyline.clone(),
                    orientation_note: p.orientation_note.clone(),
                })
                .collect(),
            samples: export
                .samples
                .iter()
                .map(|s| SampleFile {
                    mode: s.mode,
                    element: s.element.clone(),
                    points: s.points.iter().map(|p| PointFile { s_mm: p.s_mm, e_vpm: p.e }).collect(),
                })
                .collect(),
            nodeless_elements: export.nodeless_elements.clone(),
        }
    }
}

// ---------------------------------------------------------------- parameters

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BareSection {
    pub names: Vec<String>,
    pub omega_MHz: Vec<Option<f64>>,
    pub g_MHz: Vec<Vec<Option<f64>>>,
    pub alpha_MHz: Vec<f64>,
    #[serde(default)]
    pub LJ_nH: Vec<f64>,
}

impl BareSection {
    pub fn from_bare(b: &BareParameters) -> Self {
        BareSection {
            names: b.names.clone(),
            omega_MHz: vec_out(&b.omega),
            g_MHz: mat_out(&b.g),
            alpha_MHz: b.alpha.iter().copied().collect(),
            LJ_nH: b.lj.iter().copied().collect(),
        }
    }

    /// Bare parameters; unavailable entries stay NaN, so only complete sections validate.
    pub fn to_bare(&self) -> Result<BareParameters> {
        let n = self.names.len();
        let lj = if self.LJ_nH.is_empty() { vec![0.0; n] } else { self.LJ_nH.clone() };
        if self.omega_MHz.len() != n || self.alpha_MHz.len() != n || lj.len() != n {
            return Err(Error::Format(format!("bare section vectors must all have {n} entries")));
        }
        let b = BareParameters {
            names: self.names.clone(),
            omega: vec_in(&self.omega_MHz),
            g: mat_in(&self.g_MHz, "g_MHz")?,
            alpha: DVector::from_vec(self.alpha_MHz.clone()),
            lj: DVector::from_vec(lj),
        };
        if b.g.nrows() != n || b.g.ncols() != n {
            return Err(Error::Format(format!("g_MHz must be {n}x{n}")));
        }
        Ok(b)
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    pub levels: usize,
    pub convergence_levels: usize,
    pub passed: bool,
    pub flagged: Vec<String>,
    pub max_relative_shift: f64,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearSection {
    pub method: KerrMethod,
    pub labels: Vec<String>,
    pub omega_prime_nl_MHz: Vec<Option<f64>>,
    pub alpha_prime_MHz: Vec<Option<f64>>,
    pub chi_MHz: Vec<Vec<Option<f64>>>,
    /// Labeled-state overlap probabilities (oracle only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlaps: Option<Vec<OverlapEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapEntry {
    pub label: Vec<usize>,
    pub overlap: f64,
}

impl NonlinearSection {
    pub fn from_params(p: &NonlinearParameters) -> Self {
        NonlinearSection {
            method: p.method,
            labels: p.labels.clone(),
            omega_prime_nl_MHz: vec_out(&p.omega_prime_nl),
            alpha_prime_MHz: vec_out(&p.alpha_prime),
            chi_MHz: mat_out(&p.chi),
            overlaps: None,
            convergence: None,
            warnings: Vec::new(),
        }
    }

    pub fn from_oracle(o: &OracleResult) -> Self {
        let mut s = Self::from_params(&o.parameters);
        s.overlaps = Some(
            o.spectrum
                .labels
                .iter()
                .zip(&o.spectrum.overlaps)
                .map(|(l, &p)| OverlapEntry { label: l.clone(), overlap: p })
                .collect(),
        );
        let c = &o.convergence;
        s.convergence = Some(ConvergenceSection {
            levels: c.levels,
            convergence_levels: c.convergence_levels,
            passed: c.passed(),
            flagged: c.flagged.clone(),
            max_relative_shift: c.shifts.iter().map(|s| s.relative()).fold(0.0, f64::max),
        });
        s.warnings = o
            .spectrum
            .warnings
            .iter()
            .map(|w| {
                format!(
                    "label {:?} is ambiguous: candidates at {:.3} MHz (overlap {:.3}) and {:.3} MHz (overlap {:.3})",
                    w.label, w.candidates[0].0, w.candidates[0].1, w.candidates[1].0, w.candidates[1].1
                )
            })
            .collect();
        if o.parameters.labels.len() > 2 {
            s.warnings.push("pairwise generalization beyond two modes".into());
        }
        s
    }

    pub fn to_params(&self) -> Result<NonlinearParameters> {
        let n = self.labels.len();
        let chi = mat_in(&self.chi_MHz, "chi_MHz")?;
        if self.omega_prime_nl_MHz.len() != n || self.alpha_prime_MHz.len() != n || chi.nrows() != n || chi.ncols() != n {
            return Err(Error::Format(format!("nonlinear section must describe {n} modes consistently")));
        }
        Ok(NonlinearParameters {
            labels: self.labels.clone(),
            omega_prime_nl: vec_in(&self.omega_prime_nl_MHz),
            alpha_prime: vec_in(&self.alpha_prime_MHz),
            chi,
            method: self.method,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EliminatedEntry {
    pub name: String,
    #[serde(rename = "omega_prime_MHz")]
    pub omega_prime_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedSection {
    pub kept: Vec<String>,
    pub eliminated: Vec<EliminatedEntry>,
    pub effective: BareSection,
    pub spectrum_residual: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ReducedSection {
    pub fn from_result(r: &ReductionResult) -> Self {
        ReducedSection {
            kept: r.kept.clone(),
            eliminated: r
                .eliminated
                .iter()
                .map(|e| EliminatedEntry { name: e.name.clone(), omega_prime_mhz: e.omega_prime })
                .collect(),
            effective: BareSection::from_bare(&r.effective),
            spectrum_residual: r.spectrum_residual,
            warnings: r.warnings.clone(),
        }
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametersFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
    pub bare: BareSection,
    pub omega_prime_MHz: Vec<f64>,
    #[serde(rename = "U")]
    pub u: Vec<Vec<Option<f64>>>,
    pub residual: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unavailable: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal: Option<NonlinearSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epr: Option<NonlinearSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<NonlinearSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced: Option<ReducedSection>,
}

impl ParametersFile {
    pub fn from_report(rep: &ExtractionReport) -> Self {
        ParametersFile {
            manifest: None,
            bare: BareSection::from_bare(&rep.bare),
            omega_prime_MHz: rep.omega_prime.iter().copied().collect(),
            u: mat_out(rep.transform.matrix()),
            residual: rep.orthonormality_residual,
            unavailable: rep.unavailable.iter().map(|&i| rep.bare.names[i].clone()).collect(),
            warnings: rep.warnings.clone(),
            normal: rep.normal.as_ref().map(NonlinearSection::from_params),
            epr: None,
            oracle: None,
            reduced: None,
        }
    }

    pub fn transform(&self) -> Result<DMatrix<f64>> {
        let u = mat_in(&self.u, "U")?;
        let n = self.bare.names.len();
        if u.nrows() != n || u.ncols() != n {
            return Err(Error::Format(format!("U must be {n}x{n}")));
        }
        Ok(u)
    }

    pub fn omega_prime(&self) -> DVector<f64> {
        DVector::from_vec(self.omega_prime_MHz.clone())
    }
}

// ---------------------------------------------------------------- sweep

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
    pub parameter: String,
    pub grid: Vec<f64>,
    pub g_eff_MHz: Vec<Option<f64>>,
    pub flags: Vec<Option<String>>,
    pub zero_crossings: Vec<f64>,
}

impl SweepFile {
    pub fn from_result(r: &SweepResult) -> Self {
        SweepFile {
            manifest: None,
            parameter: r.parameter.clone(),
            grid: r.grid(),
            g_eff_MHz: r.values().into_iter().map(opt).collect(),
            flags: r.points.iter().map(|p| p.flag.clone()).collect(),
            zero_crossings: r.zero_crossings.clone(),
        }
    }
}

/// Pretty JSON with shortest round-trip float formatting.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Format(format!("serialization failed: {e}")))
}
