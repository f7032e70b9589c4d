//! Postprocessing of eigenmode field exports: path voltages, signs,
//! phenomenological inductances and participation ratios.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{Error, Result};
use crate::modal::{NormalModeSet, Participation, Provenance, Synthesis};

/// Integration path of one element, points in mm.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    pub element: String,
    pub polyline: Vec<[f64; 3]>,
    pub orientation_note: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExportMode {
    pub freq_mhz: f64,
    /// Total inductive energy of the mode (J).
    pub total_inductive_energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    /// Arclength along the path (mm).
    pub s_mm: f64,
    /// Electric field (V/m).
    pub e: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSamples {
    pub mode: usize,
    pub element: String,
    pub points: Vec<FieldSample>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldExport {
    pub modes: Vec<ExportMode>,
    pub paths: Vec<PathSpec>,
    pub samples: Vec<PathSamples>,
    /// Elements without two potential nodes; they have no path and their
    /// columns are completed later by orthogonality.
    pub nodeless_elements: Vec<String>,
}

impl FieldExport {
    /// Element order of the resulting mode set: pathed elements, then node-less ones.
    pub fn element_names(&self) -> Vec<String> {
        self.paths
            .iter()
            .map(|p| p.element.clone())
            .chain(self.nodeless_elements.iter().cloned())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::Format("field export has no modes".into()));
        }
        for (m, mode) in self.modes.iter().enumerate() {
            if !(mode.freq_mhz > 0.0 && mode.freq_mhz.is_finite()) {
                return Err(Error::Format(format!("mode {m}: frequency must be positive, got {}", mode.freq_mhz)));
            }
            if !(mode.total_inductive_energy > 0.0 && mode.total_inductive_energy.is_finite()) {
                return Err(Error::Format(format!(
                    "mode {m}: total inductive energy must be positive, got {}",
                    mode.total_inductive_energy
                )));
            }
        }
        let names = self.element_names();
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::Format(format!("element {name} appears more than once among paths and node-less elements")));
            }
        }
        if names.len() != self.modes.len() {
            return Err(Error::Format(format!(
                "{} modes for {} elements; one mode per element is required",
                self.modes.len(),
                names.len()
            )));
        }
        for path in &self.paths {
            if path.polyline.len() < 2 {
                return Err(Error::Format(format!("path of {} needs at least 2 points", path.element)));
            }
            if polyline_length(&path.polyline) <= 0.0 {
                return Err(Error::Format(format!("path of {} has zero length", path.element)));
            }
        }
        for set in &self.samples {
            if set.mode >= self.modes.len() {
                return Err(Error::Format(format!("samples reference mode {} which does not exist", set.mode)));
            }
            if !self.paths.iter().any(|p| p.element == set.element) {
                return Err(Error::Format(format!("samples reference element {} which has no path", set.element)));
            }
            if set.points.len() < 2 {
                return Err(Error::Format(format!(
                    "mode {} element {}: at least 2 samples are required",
                    set.mode, set.element
                )));
            }
            if set.points.windows(2).any(|w| !(w[1].s_mm > w[0].s_mm)) {
                return Err(Error::Format(format!(
                    "mode {} element {}: arclengths must be strictly increasing",
                    set.mode, set.element
                )));
            }
        }
        Ok(())
    }

    fn path(&self, element: &str) -> Result<&PathSpec> {
        self.paths
            .iter()
            .find(|p| p.element == element)
            .ok_or_else(|| Error::Format(format!("no path declared for element {element}")))
    }
}

fn to_vec(p: &[f64; 3]) -> Vector3<f64> {
    Vector3::new(p[0], p[1], p[2])
}

fn polyline_length(points: &[[f64; 3]]) -> f64 {
    points.windows(2).map(|w| (to_vec(&w[1]) - to_vec(&w[0])).norm()).sum()
}

/// Index of the polyline segment containing arclength s.
fn segment_at(cumulative: &[f64], s: f64) -> usize {
    cumulative
        .windows(2)
        .position(|w| s <= w[1])
        .unwrap_or(cumulative.len() - 2)
}

/// Line integral ∫E·dl along the declared path (V), composite trapezoid over the
/// samples and the polyline vertices.
pub fn integrate_voltage(export: &FieldExport, mode: usize, element: &str) -> Result<f64> {
    let path = export.path(element)?;
    let set = export
        .samples
        .iter()
        .find(|s| s.mode == mode && s.element == element)
        .ok_or_else(|| Error::Format(format!("no samples for mode {mode} on element {element}")))?;
    line_integral(&path.polyline, &set.points)
        .map_err(|e| Error::Format(format!("mode {mode} element {element}: {e}")))
}

fn line_integral(polyline: &[[f64; 3]], points: &[FieldSample]) -> std::result::Result<f64, String> {
    let mut cumulative = vec![0.0];
    for w in polyline.windows(2) {
        let last = *cumulative.last().unwrap();
        cumulative.push(last + (to_vec(&w[1]) - to_vec(&w[0])).norm());
    }
    let total = *cumulative.last().unwrap();
    let tol = 1e-6 * total;
    let (first, last) = (points[0].s_mm, points[points.len() - 1].s_mm);
    if first.abs() > tol || (last - total).abs() > tol {
        return Err(format!("samples span [{first}, {last}] mm but the path is [0, {total}] mm long"));
    }

    let mut breaks: Vec<f64> = points.iter().map(|p| p.s_mm.clamp(0.0, total)).collect();
    breaks.extend(cumulative[1..cumulative.len() - 1].iter().copied());
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * total);

    let field_at = |s: f64| -> Vector3<f64> {
        let i = points.partition_point(|p| p.s_mm < s).clamp(1, points.len() - 1);
        let (p0, p1) = (&points[i - 1], &points[i]);
        let t = ((s - p0.s_mm) / (p1.s_mm - p0.s_mm)).clamp(0.0, 1.0);
        to_vec(&p0.e) * (1.0 - t) + to_vec(&p1.e) * t
    };

    let mut v = 0.0;
    for w in breaks.windows(2) {
        let (sa, sb) = (w[0], w[1]);
        let seg = segment_at(&cumulative, 0.5 * (sa + sb));
        let dir = to_vec(&polyline[seg + 1]) - to_vec(&polyline[seg]);
        let dl = dir.normalize() * (sb - sa) * 1e-3;
        v += 0.5 * (field_at(sa) + field_at(sb)).dot(&dl);
    }
    Ok(v)
}

fn angular(freq_mhz: f64) -> f64 {
    2.0 * PI * freq_mhz * 1e6
}

fn check_shapes(v: &DMatrix<f64>, omega_prime: &DVector<f64>, energy: &DVector<f64>) -> Result<()> {
    if v.nrows() != omega_prime.len() || v.nrows() != energy.len() {
        return Err(Error::Format(format!(
            "voltage matrix has {} modes but {} frequencies and {} energies were given",
            v.nrows(),
            omega_prime.len(),
            energy.len()
        )));
    }
    if let Some(m) = energy.iter().position(|e| !(*e > 0.0)) {
        return Err(Error::Format(format!("mode {m}: total inductive energy must be positive")));
    }
    Ok(())
}

/// Per-column weights V_mn² / (ω′_m² 𝓔_m) in SI units.
fn weights(v: &DMatrix<f64>, omega_prime: &DVector<f64>, energy: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(v.nrows(), v.ncols(), |m, n| {
        v[(m, n)].powi(2) / (angular(omega_prime[m]).powi(2) * energy[m])
    })
}

fn column_name(names: Option<&[String]>, n: usize) -> String {
    names.and_then(|ns| ns.get(n).cloned()).unwrap_or_else(|| format!("column {n}"))
}

/// L_n = Σ_m V_mn² / (4 ω′_m² 𝓔_m), in nH.
pub fn phenomenological_inductance(
    v: &DMatrix<f64>,
    omega_prime: &DVector<f64>,
    energy: &DVector<f64>,
    names: Option<&[String]>,
) -> Result<DVector<f64>> {
    check_shapes(v, omega_prime, energy)?;
    let w = weights(v, omega_prime, energy);
    let l = DVector::from_fn(v.ncols(), |n, _| w.column(n).sum() / 4.0 * 1e9);
    if let Some(n) = l.iter().position(|x| !(*x > 0.0)) {
        return Err(Error::Format(format!(
            "{}: all path voltages are zero, the inductance is undefined",
            column_name(names, n)
        )));
    }
    Ok(l)
}

/// 𝓔_mn = V² / (4 L ω′²) in J, with L in nH and ω′ in MHz.
pub fn element_inductive_energy(v: f64, l_nh: f64, freq_mhz: f64) -> f64 {
    v * v / (4.0 * l_nh * 1e-9 * angular(freq_mhz).powi(2))
}

/// Column-normalized participation matrix from path voltages.
pub fn iepr_from_voltages(
    v: &DMatrix<f64>,
    omega_prime: &DVector<f64>,
    energy: &DVector<f64>,
    names: Option<&[String]>,
) -> Result<DMatrix<f64>> {
    check_shapes(v, omega_prime, energy)?;
    let mut w = weights(v, omega_prime, energy);
    for n in 0..w.ncols() {
        let total = w.column(n).sum();
        if !(total > 0.0) {
            return Err(Error::Format(format!(
                "{}: all path voltages are zero, participation is undefined",
                column_name(names, n)
            )));
        }
        w.column_mut(n).unscale_mut(total);
    }
    Ok(w)
}

/// sign(V) with zeros mapped to +1, rows flipped so each mode's largest |V| is positive.
pub fn signs_from_voltages(v: &DMatrix<f64>) -> DMatrix<f64> {
    let mut s = v.map(|x| if x < 0.0 { -1.0 } else { 1.0 });
    for m in 0..v.nrows() {
        let lead = v.row(m).iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if lead < 0.0 {
            s.row_mut(m).neg_mut();
        }
    }
    s
}

/// Everything recovered from one field export.
#[derive(Debug, Clone)]
pub struct FieldResult {
    pub modes: NormalModeSet,
    /// Path voltages V_mn (V); one column per pathed element.
    pub voltages: DMatrix<f64>,
    /// Phenomenological inductance per pathed element (nH).
    pub inductance: DVector<f64>,
    /// Σ_m r_mn - 1 per mode row over the pathed columns, reported not enforced.
    pub row_sum_deviation: DVector<f64>,
}

/// Full pipeline from an export to a field-export mode set with signs.
pub fn process_export(export: &FieldExport) -> Result<FieldResult> {
    export.validate()?;
    let names = export.element_names();
    let n = names.len();
    let pathed = export.paths.len();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| export.modes[a].freq_mhz.total_cmp(&export.modes[b].freq_mhz));

    let omega_prime = DVector::from_fn(n, |i, _| export.modes[order[i]].freq_mhz);
    let energy = DVector::from_fn(n, |i, _| export.modes[order[i]].total_inductive_energy);
    let mut v = DMatrix::zeros(n, pathed);
    for (i, &m) in order.iter().enumerate() {
        for (j, path) in export.paths.iter().enumerate() {
            v[(i, j)] = integrate_voltage(export, m, &path.element)?;
        }
    }
    let inductance = phenomenological_inductance(&v, &omega_prime, &energy, Some(&names))?;
    let r_paths = iepr_from_voltages(&v, &omega_prime, &energy, Some(&names))?;
    let s_paths = signs_from_voltages(&v);

    let mut r = DMatrix::from_element(n, n, f64::NAN);
    let mut s = DMatrix::from_element(n, n, 1.0);
    r.columns_mut(0, pathed).copy_from(&r_paths);
    s.columns_mut(0, pathed).copy_from(&s_paths);
    let row_sum_deviation = DVector::from_fn(n, |m, _| r_paths.row(m).sum() - 1.0);

    let modes = NormalModeSet {
        names,
        omega_prime,
        r,
        s: Some(s),
        provenance: Provenance::FieldExport,
        participation: Participation::Inductive,
        nodeless: (pathed..n).collect(),
        lj: None,
    };
    Ok(FieldResult { modes, voltages: v, inductance, row_sum_deviation })
}

/// Shape of the synthetic tangential field along a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldProfile {
    Uniform,
    /// Half-sine bump, integrating to the same voltage.
    Sine,
}

/// Options for [`synthesize_export`].
#[derive(Debug, Clone)]
pub struct SynthesisOptions {
    /// Inductance per element (nH).
    pub inductance: DVector<f64>,
    /// Total inductive energy per mode (J).
    pub energy: DVector<f64>,
    pub samples_per_path: usize,
    pub profile: FieldProfile,
    /// Path length (mm).
    pub path_length: f64,
    /// Elements written as node-less (no path, no samples).
    pub nodeless: Vec<String>,
}

impl SynthesisOptions {
    pub fn new(n: usize) -> Self {
        SynthesisOptions {
            inductance: DVector::from_element(n, 10.0),
            energy: DVector::from_element(n, 1e-24),
            samples_per_path: 11,
            profile: FieldProfile::Uniform,
            path_length: 0.01,
            nodeless: Vec::new(),
        }
    }
}

/// Builds a path-sampled export whose voltages are V_mn = 2ω′_m u_mn √(𝓔_m L_n),
/// the field-solver view of a known lumped circuit. Paths are straight and point
/// in element-specific directions; every sample carries an extra field component
/// perpendicular to the path.
pub fn synthesize_export(syn: &Synthesis, opts: &SynthesisOptions) -> Result<FieldExport> {
    let modes = &syn.modes;
    let n = modes.len();
    if opts.inductance.len() != n || opts.energy.len() != n {
        return Err(Error::Spec(format!("need {n} inductances and {n} energies")));
    }
    if opts.samples_per_path < 2 {
        return Err(Error::Spec("at least 2 samples per path are required".into()));
    }
    for name in &opts.nodeless {
        if !modes.names.contains(name) {
            return Err(Error::Spec(format!("unknown element {name}")));
        }
    }
    let u = syn.transform.matrix();
    let len = opts.path_length;
    let mut export = FieldExport {
        modes: (0..n)
            .map(|m| ExportMode { freq_mhz: modes.omega_prime[m], total_inductive_energy: opts.energy[m] })
            .collect(),
        nodeless_elements: opts.nodeless.clone(),
        ..Default::default()
    };
    for (k, name) in modes.names.iter().enumerate() {
        if opts.nodeless.contains(name) {
            continue;
        }
        let angle = 0.7 * k as f64;
        let dir = Vector3::new(angle.cos(), angle.sin(), 0.0);
        let perp = Vector3::new(0.0, 0.0, 1.0);
        let origin = Vector3::new(k as f64, 0.0, 0.0);
        let end = origin + dir * len;
        export.paths.push(PathSpec {
            element: name.clone(),
            polyline: vec![[origin.x, origin.y, origin.z], [end.x, end.y, end.z]],
            orientation_note: "start to end".into(),
        });
        for m in 0..n {
            let volts = 2.0 * angular(modes.omega_prime[m]) * u[(m, k)] * (opts.energy[m] * opts.inductance[k] * 1e-9).sqrt();
            let e_mean = volts / (len * 1e-3);
            let points = (0..opts.samples_per_path)
                .map(|i| {
                    let s = len * i as f64 / (opts.samples_per_path - 1) as f64;
                    let tangential = match opts.profile {
                        FieldProfile::Uniform => e_mean,
                        FieldProfile::Sine => e_mean * 0.5 * PI * (PI * s / len).sin(),
                    };
                    let e = dir * tangential + perp * (3.0 * e_mean);
                    FieldSample { s_mm: s, e: [e.x, e.y, e.z] }
                })
                .collect();
            export.samples.push(PathSamples { mode: m, element: name.clone(), points });
        }
    }
    Ok(export)
}
