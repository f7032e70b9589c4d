//! Inverse pipeline: participation ratios and signs to the bare-mode Hamiltonian.
//!
//! The same algebra serves capacitive participation ratios of inductively
//! coupled circuits; [`Participation`] only records which energy was measured.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{anharmonicity_from_lj, BareParameters};
use crate::modal::{NormalModeSet, Participation, Provenance, TransformMatrix};
use crate::nonlinear::{iepr_kerr, NonlinearParameters};

/// Orthonormality tolerance for synthetic mode sets.
pub const SYNTHETIC_TOLERANCE: f64 = 1e-8;
/// Orthonormality tolerance for field-export mode sets.
pub const FIELD_EXPORT_TOLERANCE: f64 = 1e-3;

pub fn tolerance_for(provenance: Provenance) -> f64 {
    match provenance {
        Provenance::Synthetic => SYNTHETIC_TOLERANCE,
        Provenance::FieldExport => FIELD_EXPORT_TOLERANCE,
    }
}

/// Residuals of Σ_k s s √(r r) − δ in row form (mode pairs) and column form (element pairs).
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalityReport {
    pub rows: DMatrix<f64>,
    pub columns: DMatrix<f64>,
    pub max: f64,
}

fn signed_roots(r: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if r.shape() != s.shape() {
        return Err(Error::Format(format!(
            "r is {:?} but s is {:?}",
            r.shape(),
            s.shape()
        )));
    }
    Ok(r.zip_map(s, |r, s| s * r.sqrt()))
}

pub fn orthonormality_check(r: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<OrthonormalityReport> {
    let u = signed_roots(r, s)?;
    let (n, m) = u.shape();
    let rows = &u * u.transpose() - DMatrix::<f64>::identity(n, n);
    let columns = u.transpose() * &u - DMatrix::<f64>::identity(m, m);
    let max = rows.amax().max(columns.amax());
    Ok(OrthonormalityReport { rows, columns, max })
}

/// u_mn = s_mn √r_mn, rejected when the orthonormality residual exceeds `tolerance`.
pub fn reconstruct_u(r: &DMatrix<f64>, s: &DMatrix<f64>, tolerance: f64) -> Result<(TransformMatrix, f64)> {
    for i in 0..r.nrows() {
        for j in 0..r.ncols() {
            let v = r[(i, j)];
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Format(format!("r out of [0,1] at ({i},{j}): {v}")));
            }
        }
    }
    for &v in s.iter() {
        if v != 1.0 && v != -1.0 {
            return Err(Error::Format(format!("sign entries must be +1 or -1, got {v}")));
        }
    }
    let report = orthonormality_check(r, s)?;
    if report.max > tolerance {
        return Err(Error::Consistency(format!(
            "orthonormality residual {:.3e} exceeds {tolerance:.0e}; the data is not a valid participation set",
            report.max
        )));
    }
    Ok((TransformMatrix::from_matrix(signed_roots(r, s)?), report.max))
}

/// ω_n = √(Σ_k r_kn ω′_k²) for every element column.
pub fn bare_frequencies(r: &DMatrix<f64>, omega_prime: &DVector<f64>) -> DVector<f64> {
    let w2 = omega_prime.map(|w| w * w);
    DVector::from_iterator(r.ncols(), r.column_iter().map(|c| c.dot(&w2).sqrt()))
}

/// g_mn = Σ_k s_km s_kn √(r_km r_kn) ω′_k² / (2√(ω_m ω_n)), zero on the diagonal.
pub fn coupling_strengths(
    r: &DMatrix<f64>,
    s: &DMatrix<f64>,
    omega_prime: &DVector<f64>,
    omega_bare: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let u = signed_roots(r, s)?;
    Ok(couplings_from_u(&u, omega_prime, omega_bare))
}

fn couplings_from_u(u: &DMatrix<f64>, omega_prime: &DVector<f64>, omega_bare: &DVector<f64>) -> DMatrix<f64> {
    let n = u.ncols();
    let w2 = omega_prime.map(|w| w * w);
    DMatrix::from_fn(n, n, |m, j| {
        if m == j {
            return 0.0;
        }
        let sum: f64 = (0..u.nrows()).map(|k| u[(k, m)] * u[(k, j)] * w2[k]).sum();
        sum / (2.0 * (omega_bare[m] * omega_bare[j]).sqrt())
    })
}

/// Fills the single unknown column of an orthogonal matrix.
///
/// The result is the unit vector orthogonal to all known columns, with its
/// largest-magnitude entry positive.
pub fn complete_missing_column(partial: &DMatrix<f64>, missing: &[usize]) -> Result<TransformMatrix> {
    let n = partial.nrows();
    if partial.ncols() != n {
        return Err(Error::Format("transform must be square".into()));
    }
    match missing {
        [] => return Ok(TransformMatrix::from_matrix(partial.clone())),
        [_] => {}
        _ => {
            return Err(Error::Unsupported(format!(
                "{} columns lack participation data; orthogonal completion recovers at most one",
                missing.len()
            )))
        }
    }
    let col = missing[0];
    if col >= n {
        return Err(Error::Format(format!("column {col} out of range")));
    }
    let known: Vec<usize> = (0..n).filter(|&j| j != col).collect();
    for (a, &i) in known.iter().enumerate() {
        for &j in &known[a..] {
            let d = partial.column(i).dot(&partial.column(j));
            let target = if i == j { 1.0 } else { 0.0 };
            if (d - target).abs() > 1e-6 {
                return Err(Error::Consistency(format!(
                    "known columns {i} and {j} are not orthonormal (inner product {d:.3e})"
                )));
            }
        }
    }
    // project each basis vector off the known span and keep the largest remainder
    let mut best = DVector::<f64>::zeros(n);
    for e in 0..n {
        let mut v = DVector::<f64>::zeros(n);
        v[e] = 1.0;
        for &j in &known {
            let c = partial.column(j);
            let proj = c.dot(&v);
            v -= c * proj;
        }
        if v.norm() > best.norm() {
            best = v;
        }
    }
    let mut best = best.normalize();
    // second pass for orthogonality at machine precision
    for &j in &known {
        let c = partial.column(j);
        let proj = c.dot(&best);
        best -= c * proj;
    }
    best = best.normalize();
    let lead = best.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if lead < 0.0 {
        best.neg_mut();
    }
    let mut u = partial.clone();
    u.set_column(col, &best);
    Ok(TransformMatrix::from_matrix(u))
}

/// Everything recovered from one normal-mode set.
#[derive(Debug, Clone)]
pub struct ExtractionReport {
    /// Bare parameters; entries that cannot be determined are NaN.
    pub bare: BareParameters,
    pub omega_prime: DVector<f64>,
    pub transform: TransformMatrix,
    pub orthonormality_residual: f64,
    /// Columns whose bare data could not be recovered.
    pub unavailable: Vec<usize>,
    pub participation: Participation,
    pub normal: Option<NonlinearParameters>,
    pub warnings: Vec<String>,
}

impl ExtractionReport {
    pub fn frequency(&self, name: &str) -> Result<f64> {
        let i = self.index(name)?;
        if self.unavailable.contains(&i) {
            return Err(Error::Unsupported(format!("{name} has no potential nodes; its bare frequency is unavailable")));
        }
        Ok(self.bare.omega[i])
    }

    /// Coupling between two elements; unsupported when either lacks a column.
    pub fn coupling(&self, a: &str, b: &str) -> Result<f64> {
        let (i, j) = (self.index(a)?, self.index(b)?);
        let missing: Vec<&str> = [(i, a), (j, b)]
            .iter()
            .filter(|(k, _)| self.unavailable.contains(k))
            .map(|(_, n)| *n)
            .collect();
        if !missing.is_empty() {
            return Err(Error::Unsupported(format!(
                "coupling {a}-{b} needs participation data for {}; more than one element lacks potential nodes",
                missing.join(", ")
            )));
        }
        Ok(self.bare.g[(i, j)])
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.bare
            .index_of(name)
            .ok_or_else(|| Error::Spec(format!("unknown element {name}")))
    }
}

/// Full inverse pipeline. `lj` gives junction inductances per element (nH, 0 for
/// linear elements); when present the nonlinear stage runs as well.
pub fn extract_all(modes: &NormalModeSet, lj: Option<&DVector<f64>>) -> Result<ExtractionReport> {
    modes.validate()?;
    let n = modes.len();
    let s = modes.s.as_ref().ok_or_else(|| match modes.provenance {
        Provenance::FieldExport => Error::Format(
            "field-export mode set has no sign matrix; run the fields step to determine signs from the path voltages".into(),
        ),
        Provenance::Synthetic => Error::Format("mode set has no sign matrix".into()),
    })?;
    let tolerance = tolerance_for(modes.provenance);
    let mut warnings = Vec::new();

    let mut nodeless = modes.nodeless.clone();
    nodeless.sort_unstable();
    nodeless.dedup();
    let known: Vec<usize> = (0..n).filter(|j| !nodeless.contains(j)).collect();

    // signed roots on known columns, NaN elsewhere
    let mut u = DMatrix::from_element(n, n, f64::NAN);
    for &j in &known {
        for m in 0..n {
            let r = modes.r[(m, j)];
            u[(m, j)] = s[(m, j)] * r.sqrt();
        }
    }
    let mut residual = 0.0f64;
    for (a, &i) in known.iter().enumerate() {
        for &j in &known[a..] {
            let d: f64 = u.column(i).dot(&u.column(j));
            residual = residual.max((d - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    if nodeless.is_empty() {
        residual = residual.max(orthonormality_check(&modes.r, s)?.max);
    }
    if residual > tolerance {
        return Err(Error::Consistency(format!(
            "orthonormality residual {residual:.3e} exceeds {tolerance:.0e}; the data is not a valid participation set"
        )));
    }

    let unavailable = if nodeless.len() == 1 {
        let mut partial = u.clone();
        partial.column_mut(nodeless[0]).fill(0.0);
        let completed = complete_missing_column(&partial, &nodeless)?;
        u = completed.into_inner();
        warnings.push(format!(
            "column {} completed by orthogonality",
            modes.names[nodeless[0]]
        ));
        Vec::new()
    } else {
        if !nodeless.is_empty() {
            warnings.push(format!(
                "{} elements lack potential nodes; their bare frequencies and couplings are unavailable",
                nodeless.len()
            ));
        }
        nodeless.clone()
    };

    let r_full = u.map(|x| x * x);
    let omega = bare_frequencies(&r_full, &modes.omega_prime);
    let mut g = couplings_from_u(&u, &modes.omega_prime, &omega);
    for m in 0..n {
        // the diagonal of the same sum reproduces ω_m²
        if !unavailable.contains(&m) {
            let diag: f64 = (0..n).map(|k| u[(k, m)] * u[(k, m)] * modes.omega_prime[k].powi(2)).sum();
            debug_assert!((diag - omega[m] * omega[m]).abs() <= 1e-9 * diag);
        }
        for j in 0..n {
            if unavailable.contains(&m) || unavailable.contains(&j) {
                g[(m, j)] = if m == j { 0.0 } else { f64::NAN };
            }
        }
    }

    let lj = lj.or(modes.lj.as_ref());
    let mut alpha = DVector::zeros(n);
    let mut lj_vec = DVector::zeros(n);
    if let Some(lj) = lj {
        if lj.len() != n {
            return Err(Error::Spec(format!("expected {n} junction inductances, got {}", lj.len())));
        }
        for i in 0..n {
            if lj[i] > 0.0 {
                if unavailable.contains(&i) {
                    return Err(Error::Unsupported(format!(
                        "junction element {} has no participation data",
                        modes.names[i]
                    )));
                }
                alpha[i] = anharmonicity_from_lj(omega[i], lj[i])?;
                lj_vec[i] = lj[i];
            }
        }
    }
    let bare = BareParameters {
        names: modes.names.clone(),
        omega,
        g,
        alpha,
        lj: lj_vec,
    };
    let transform = TransformMatrix::from_matrix(u);
    let normal = if bare.alpha.iter().any(|a| *a != 0.0) {
        Some(iepr_kerr(&transform, &modes.omega_prime, &bare, &modes.names)?)
    } else {
        None
    };
    Ok(ExtractionReport {
        bare,
        omega_prime: modes.omega_prime.clone(),
        transform,
        orthonormality_residual: residual,
        unavailable,
        participation: modes.participation,
        normal,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modal::forward_synthesize;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn pm(v: &[f64]) -> DMatrix<f64> {
        let n = (v.len() as f64).sqrt() as usize;
        DMatrix::from_row_slice(n, n, v)
    }

    #[test]
    fn reconstruct_resonant_pair() {
        let r = DMatrix::from_element(2, 2, 0.5);
        let s = pm(&[1.0, -1.0, 1.0, 1.0]);
        let (u, res) = reconstruct_u(&r, &s, 1e-8).unwrap();
        let f = FRAC_1_SQRT_2;
        assert_relative_eq!(u.matrix(), &pm(&[f, -f, f, f]), max_relative = 1e-15);
        assert!(res < 1e-15);
        let (u, _) = reconstruct_u(&DMatrix::identity(2, 2), &DMatrix::from_element(2, 2, 1.0), 1e-8).unwrap();
        assert_eq!(u.matrix(), &DMatrix::identity(2, 2));
    }

    #[test]
    fn reconstruct_rejects_invalid_sets() {
        let r = pm(&[0.45, 0.45, 0.45, 0.45]);
        let s = pm(&[1.0, -1.0, 1.0, 1.0]);
        assert!(matches!(reconstruct_u(&r, &s, 1e-3), Err(Error::Consistency(_))));
        let r = pm(&[1.2, 0.0, 0.0, 1.0]);
        assert!(matches!(reconstruct_u(&r, &DMatrix::from_element(2, 2, 1.0), 1e-3), Err(Error::Format(m)) if m.contains("(0,0)")));
    }

    #[test]
    fn resonant_pair_frequencies_and_coupling() {
        let w = DVector::from_vec(vec![24e6f64.sqrt(), 26e6f64.sqrt()]);
        let r = DMatrix::from_element(2, 2, 0.5);
        let s = pm(&[1.0, -1.0, 1.0, 1.0]);
        let omega = bare_frequencies(&r, &w);
        assert_relative_eq!(omega[0], 5000.0, max_relative = 1e-15);
        assert_relative_eq!(omega[1], 5000.0, max_relative = 1e-15);
        let g = coupling_strengths(&r, &s, &w, &omega).unwrap();
        assert_relative_eq!(g[(0, 1)], (26e6 - 24e6) / (4.0 * 5000.0), max_relative = 1e-12);
        assert_eq!(g[(0, 0)], 0.0);
        let id = DMatrix::identity(2, 2);
        assert_eq!(bare_frequencies(&id, &w), w);
        assert_eq!(coupling_strengths(&id, &DMatrix::from_element(2, 2, 1.0), &w, &w).unwrap()[(0, 1)], 0.0);
    }

    #[test]
    fn orthonormality_perturbation_is_localized() {
        // squares of a rotation in the (0,1) plane plus an untouched third axis
        let (c, s) = (0.6f64, 0.8f64);
        let u = pm(&[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);
        let r = u.map(|x| x * x);
        let sg = u.map(|x| if x < 0.0 { -1.0 } else { 1.0 });
        assert!(orthonormality_check(&r, &sg).unwrap().max < 1e-12);
        let mut bumped = r.clone();
        bumped[(0, 1)] += 0.05;
        let rep = orthonormality_check(&bumped, &sg).unwrap();
        assert!(rep.max > 1e-3);
        // mode 0 and element 1 carry all of the row/column residual; mode 2 and element 2 stay clean
        assert!(rep.rows.row(2).amax() < 1e-12 && rep.rows.column(2).amax() < 1e-12);
        assert!(rep.columns.row(2).amax() < 1e-12);
        assert!(rep.rows[(0, 0)].abs() > 1e-3 && rep.columns[(1, 1)].abs() > 1e-3);
        assert!(rep.rows[(1, 1)].abs() < 1e-12 && rep.columns[(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn completes_two_dimensional_column() {
        let partial = pm(&[0.8, 0.0, 0.6, 0.0]);
        let u = complete_missing_column(&partial, &[1]).unwrap();
        assert_relative_eq!(u.matrix()[(0, 1)].abs(), 0.6, max_relative = 1e-14);
        assert_relative_eq!(u.matrix()[(1, 1)].abs(), 0.8, max_relative = 1e-14);
        assert!(u.matrix()[(1, 1)] > 0.0);
        assert!(u.orthogonality_residual() < 1e-15);
    }

    #[test]
    fn completes_three_dimensional_column_as_cross_product() {
        let a = nalgebra::Vector3::new(1.0, 2.0, 2.0) / 3.0;
        let b = nalgebra::Vector3::new(2.0, 1.0, -2.0) / 3.0;
        let cross = a.cross(&b);
        let mut partial = DMatrix::zeros(3, 3);
        partial.column_mut(0).copy_from(&a);
        partial.column_mut(2).copy_from(&b);
        let u = complete_missing_column(&partial, &[1]).unwrap();
        let got = u.matrix().column(1).into_owned();
        let sign = if (got[0] - cross[0]).abs() < 1e-12 { 1.0 } else { -1.0 };
        for i in 0..3 {
            assert_relative_eq!(got[i], sign * cross[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn completion_errors() {
        let partial = DMatrix::identity(3, 3);
        assert!(matches!(complete_missing_column(&partial, &[0, 1]), Err(Error::Unsupported(_))));
        let bad = pm(&[0.8, 0.0, 0.0, 0.7, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(complete_missing_column(&bad, &[1]), Err(Error::Consistency(_))));
    }

    #[test]
    fn extract_round_trips_resonant_pair() {
        let bare = BareParameters::new(
            vec!["A".into(), "B".into()],
            DVector::from_vec(vec![5000.0, 5000.0]),
            pm(&[0.0, 100.0, 100.0, 0.0]),
        )
        .unwrap();
        let syn = forward_synthesize(&bare).unwrap();
        let rep = extract_all(&syn.modes, None).unwrap();
        assert_relative_eq!(rep.bare.omega[0], 5000.0, max_relative = 1e-12);
        assert_relative_eq!(rep.bare.g[(0, 1)], 100.0, max_relative = 1e-10);
        assert!(rep.normal.is_none());
        assert!(rep.orthonormality_residual < 1e-12);
    }

    #[test]
    fn field_export_without_signs_is_rejected() {
        let bare = BareParameters::new(
            vec!["A".into(), "B".into()],
            DVector::from_vec(vec![5000.0, 5600.0]),
            pm(&[0.0, 50.0, 50.0, 0.0]),
        )
        .unwrap();
        let mut modes = forward_synthesize(&bare).unwrap().modes;
        modes.s = None;
        modes.provenance = Provenance::FieldExport;
        let err = extract_all(&modes, None).unwrap_err();
        assert!(matches!(err, Error::Format(m) if m.contains("fields step")));
    }
}
