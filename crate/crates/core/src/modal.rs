//! Quadratic-form matrix of the bare Hamiltonian, its eigendecomposition, and
//! synthesis of normal-mode data from bare parameters.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::BareParameters;

/// Dense real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::Format(format!("matrix is {}x{}, not square", n, m.ncols())));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Format(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(SymmetricMatrix(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// Orthogonal matrix 𝒰 with rows indexed by normal mode and columns by bare element.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformMatrix(DMatrix<f64>);

impl TransformMatrix {
    /// Wraps a matrix without checking orthogonality.
    pub fn from_matrix(u: DMatrix<f64>) -> Self {
        TransformMatrix(u)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// max |𝒰𝒰ᵀ − I|.
    pub fn orthogonality_residual(&self) -> f64 {
        let n = self.dim();
        (&self.0 * self.0.transpose() - DMatrix::<f64>::identity(n, n)).amax()
    }

    /// Flips rows so each row's largest-magnitude entry is positive.
    pub fn fix_row_gauge(&mut self) {
        for mut row in self.0.row_iter_mut() {
            let mut best = 0.0f64;
            for &v in row.iter() {
                if v.abs() > best.abs() {
                    best = v;
                }
            }
            if best < 0.0 {
                row.neg_mut();
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Synthetic,
    FieldExport,
}

/// Which energy the participation matrix was measured from. Inductive for
/// capacitively coupled chips, capacitive for the inductively coupled dual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Participation {
    #[default]
    Inductive,
    Capacitive,
}

/// Normal-mode data in the shape an eigenmode simulation provides.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalModeSet {
    pub names: Vec<String>,
    /// Normal-mode frequencies (MHz), ascending.
    pub omega_prime: DVector<f64>,
    /// Participation ratios r_mn (row = mode, column = element). Columns of
    /// node-less elements hold NaN.
    pub r: DMatrix<f64>,
    /// Sign matrix s_mn ∈ {±1}; `None` when signs were not determined.
    pub s: Option<DMatrix<f64>>,
    pub provenance: Provenance,
    pub participation: Participation,
    /// Element columns with no participation data (elements without potential nodes).
    pub nodeless: Vec<usize>,
    /// Junction inductances per element (nH, 0 for linear elements), when known.
    pub lj: Option<DVector<f64>>,
}

impl NormalModeSet {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// For every mode, the element with the largest known participation.
    pub fn assignment(&self) -> Vec<usize> {
        self.r
            .row_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| v.is_finite())
                    .fold((0usize, f64::NEG_INFINITY), |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc })
                    .0
            })
            .collect()
    }

    /// Structural and range checks; participation sums are checked by the extractor.
    pub fn validate(&self) -> Result<()> {
        let n = self.names.len();
        if n == 0 {
            return Err(Error::Format("mode set has no elements".into()));
        }
        if self.omega_prime.len() != n {
            return Err(Error::Format(format!(
                "{} modes for {} elements; the mode set must be square",
                self.omega_prime.len(),
                n
            )));
        }
        if self.r.nrows() != n || self.r.ncols() != n {
            return Err(Error::Format(format!("iepr matrix must be {n}x{n}")));
        }
        for (m, &w) in self.omega_prime.iter().enumerate() {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Format(format!("mode {m}: frequency must be positive, got {w}")));
            }
        }
        for &c in &self.nodeless {
            if c >= n {
                return Err(Error::Format(format!("node-less column {c} out of range")));
            }
        }
        for m in 0..n {
            for j in 0..n {
                if self.nodeless.contains(&j) {
                    continue;
                }
                let v = self.r[(m, j)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Format(format!("r out of [0,1] at ({m},{j}): {v}")));
                }
            }
        }
        if let Some(s) = &self.s {
            if s.nrows() != n || s.ncols() != n {
                return Err(Error::Format(format!("sign matrix must be {n}x{n}")));
            }
            for m in 0..n {
                for j in 0..n {
                    if self.nodeless.contains(&j) {
                        continue;
                    }
                    let v = s[(m, j)];
                    if v != 1.0 && v != -1.0 {
                        return Err(Error::Format(format!("sign at ({m},{j}) must be +1 or -1, got {v}")));
                    }
                }
            }
        }
        if let Some(lj) = &self.lj {
            if lj.len() != n {
                return Err(Error::Format(format!("expected {n} junction inductances")));
            }
        }
        Ok(())
    }
}

/// 𝓗 with ω_m² on the diagonal and 2 g_mn √(ω_m ω_n) off it (MHz²).
pub fn assemble_h_matrix(bare: &BareParameters) -> Result<SymmetricMatrix> {
    bare.validate()?;
    let n = bare.len();
    let w = &bare.omega;
    let h = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            w[i] * w[i]
        } else {
            2.0 * bare.g[(i, j)] * (w[i] * w[j]).sqrt()
        }
    });
    Ok(SymmetricMatrix(h))
}

/// Eigendecomposition result: ascending eigenvalues and the matrix whose rows
/// are the matching eigenvectors.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: DVector<f64>,
    pub vectors: TransformMatrix,
    pub sweeps: usize,
    pub warnings: Vec<String>,
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigendecomposition, 𝒰 H 𝒰ᵀ = diag(λ) with λ ascending and the
/// row gauge fixed.
pub fn sym_eig(h: &SymmetricMatrix) -> Result<Eigen> {
    let n = h.dim();
    let mut a = h.0.clone();
    // columns of v are eigenvectors while rotating
    let mut v = DMatrix::<f64>::identity(n, n);
    let norm = a.norm();
    let floor = f64::EPSILON * 1e-3 * norm;
    let mut sweeps = 0;
    loop {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= floor || n < 2 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::Numerics(format!(
                "Jacobi did not converge after {MAX_SWEEPS} sweeps (off-diagonal norm {off:e})"
            )));
        }
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= floor / (n as f64) {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                // skip when a_pq is below the precision of the diagonal
                if apq.abs() < f64::EPSILON * 1e-2 * app.abs().min(aqq.abs()) {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let u = DMatrix::from_fn(n, n, |m, k| v[(k, order[m])]);
    let mut vectors = TransformMatrix(u);
    vectors.fix_row_gauge();

    let mut warnings = Vec::new();
    for m in 1..n {
        let (lo, hi) = (values[m - 1], values[m]);
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        if (hi - lo) / scale < 1e-10 {
            warnings.push(format!(
                "near-degenerate eigenvalues {lo:e} and {hi:e} (modes {} and {m}); participation attribution depends on the chosen basis",
                m - 1
            ));
        }
    }
    Ok(Eigen { values, vectors, sweeps, warnings })
}

/// Normal-mode synthesis from a bare model.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub modes: NormalModeSet,
    pub transform: TransformMatrix,
    /// For every mode (ascending frequency) the element with the largest participation.
    pub assignment: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Forward model: normal frequencies ω′ = √λ, r = u², s = sign(u) with 0 ↦ +1.
pub fn forward_synthesize(bare: &BareParameters) -> Result<Synthesis> {
    let h = assemble_h_matrix(bare)?;
    let eig = sym_eig(&h)?;
    if let Some((m, &lambda)) = eig.values.iter().enumerate().find(|(_, &l)| l <= 0.0) {
        return Err(Error::Physics(format!(
            "eigenvalue {lambda:e} MHz^2 of mode {m} is not positive; the coupling is too strong for a stable circuit"
        )));
    }
    let u = eig.vectors.matrix();
    let r = u.map(|x| x * x);
    let s = u.map(|x| if x < 0.0 { -1.0 } else { 1.0 });
    let modes = NormalModeSet {
        names: bare.names.clone(),
        omega_prime: eig.values.map(f64::sqrt),
        r,
        s: Some(s),
        provenance: Provenance::Synthetic,
        participation: Participation::Inductive,
        nodeless: Vec::new(),
        lj: Some(bare.lj.clone()),
    };
    let assignment = modes.assignment();
    Ok(Synthesis {
        modes,
        transform: eig.vectors,
        assignment,
        warnings: eig.warnings,
    })
}
