//! Subsystem reduction, coupler sweeps and the avoided-crossing (NMS) coupling method.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::modal::{assemble_h_matrix, forward_synthesize, sym_eig, SymmetricMatrix};
use crate::model::{build_bare, BareParameters, CircuitSpec, ElementKind};

/// Ties in participation closer than this trigger the lower-frequency tie-break.
const TIE_TOLERANCE: f64 = 1e-6;
/// Maximum relative spectrum drift allowed per deflation step.
pub const SPECTRUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Eliminated {
    pub name: String,
    /// Normal frequency absorbed by the deflation (MHz).
    pub omega_prime: f64,
}

#[derive(Debug, Clone)]
pub struct ReductionResult {
    pub kept: Vec<String>,
    pub eliminated: Vec<Eliminated>,
    /// Effective frequencies and couplings of the residual block.
    pub effective: BareParameters,
    /// Residual 𝓗 block (MHz²).
    pub residual_h: DMatrix<f64>,
    /// Largest relative spectrum drift over all deflation steps.
    pub spectrum_residual: f64,
    pub warnings: Vec<String>,
}

fn sorted_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let eig = sym_eig(&SymmetricMatrix::new(m.clone())?)?;
    Ok(eig.values.iter().copied().collect())
}

fn spectrum_drift(before: &[f64], after: &[f64]) -> f64 {
    let scale = before.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    before
        .iter()
        .zip(after)
        .map(|(a, b)| (a - b).abs() / scale)
        .fold(0.0, f64::max)
}

/// Sequential Householder deflation of 𝓗: each eliminated element takes with it
/// the eigenvector that participates most on it, and the remaining block keeps
/// the labels of the surviving elements.
pub fn reduce_subsystem(h: &SymmetricMatrix, names: &[String], eliminate: &[String]) -> Result<ReductionResult> {
    let n = h.dim();
    if names.len() != n {
        return Err(Error::Spec(format!("{} names for a {n}x{n} matrix", names.len())));
    }
    for (i, e) in eliminate.iter().enumerate() {
        if !names.contains(e) {
            return Err(Error::Spec(format!("cannot eliminate unknown element {e}")));
        }
        if eliminate[..i].contains(e) {
            return Err(Error::Spec(format!("element {e} listed twice for elimination")));
        }
    }
    if eliminate.len() >= n {
        return Err(Error::Spec("at least one element must be kept".into()));
    }

    let mut a = h.matrix().clone();
    let mut labels: Vec<String> = names.to_vec();
    let mut eliminated = Vec::new();
    let mut warnings = Vec::new();
    let mut spectrum_residual = 0.0f64;

    for name in eliminate {
        let k = labels.iter().position(|l| l == name).unwrap();
        let eig = sym_eig(&SymmetricMatrix::new(a.clone())?)?;
        let u = eig.vectors.matrix();
        let dim = a.nrows();
        // modes are ascending, so the first maximum is the lower frequency
        let mut best = 0;
        for m in 1..dim {
            if u[(m, k)].powi(2) > u[(best, k)].powi(2) + TIE_TOLERANCE {
                best = m;
            }
        }
        let ties = (0..dim)
            .filter(|&m| m != best && (u[(m, k)].powi(2) - u[(best, k)].powi(2)).abs() <= TIE_TOLERANCE)
            .count();
        if ties > 0 {
            warnings.push(format!(
                "eliminating {name}: {} modes participate equally; deflating the lower-frequency one",
                ties + 1
            ));
        }
        let lambda = eig.values[best];
        if !(lambda > 0.0) {
            return Err(Error::Physics(format!("eliminating {name} absorbs a non-positive eigenvalue {lambda:e}")));
        }

        let v: DVector<f64> = u.row(best).transpose();
        let mut w = v.clone();
        w[k] += if v[k] < 0.0 { -1.0 } else { 1.0 };
        let p = DMatrix::identity(dim, dim) - &w * w.transpose() * (2.0 / w.norm_squared());
        let b = &p * &a * &p;

        let keep: Vec<usize> = (0..dim).filter(|&i| i != k).collect();
        let reduced = b.select_rows(&keep).select_columns(&keep);
        let reduced = (&reduced + reduced.transpose()) * 0.5;

        let before = eig.values.iter().copied().collect::<Vec<_>>();
        let mut after = sorted_eigenvalues(&reduced)?;
        after.push(lambda);
        after.sort_by(|x, y| x.total_cmp(y));
        let drift = spectrum_drift(&before, &after);
        spectrum_residual = spectrum_residual.max(drift);
        if drift > SPECTRUM_TOLERANCE {
            return Err(Error::Numerics(format!(
                "eliminating {name} changed the spectrum by {drift:.3e} (relative)"
            )));
        }

        eliminated.push(Eliminated { name: name.clone(), omega_prime: lambda.sqrt() });
        labels.remove(k);
        a = reduced;
    }

    let effective = effective_parameters(&a, &labels)?;
    Ok(ReductionResult {
        kept: labels,
        eliminated,
        effective,
        residual_h: a,
        spectrum_residual,
        warnings,
    })
}

/// ω = √diag, g = off-diagonal / (2√(ω_i ω_j)).
fn effective_parameters(h: &DMatrix<f64>, names: &[String]) -> Result<BareParameters> {
    let n = h.nrows();
    if let Some(i) = (0..n).find(|&i| !(h[(i, i)] > 0.0)) {
        return Err(Error::Physics(format!("residual diagonal of {} is not positive", names[i])));
    }
    let omega = DVector::from_fn(n, |i, _| h[(i, i)].sqrt());
    let g = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { h[(i, j)] / (2.0 * (omega[i] * omega[j]).sqrt()) });
    BareParameters::new(names.to_vec(), omega, g)
}

/// Reduction of a bare model; junction data of the kept elements is carried over.
pub fn reduce_bare(bare: &BareParameters, eliminate: &[String]) -> Result<ReductionResult> {
    let h = assemble_h_matrix(bare)?;
    let mut res = reduce_subsystem(&h, &bare.names, eliminate)?;
    for (i, name) in res.kept.iter().enumerate() {
        let j = bare.index_of(name).unwrap();
        res.effective.lj[i] = bare.lj[j];
        res.effective.alpha[i] = bare.alpha[j];
    }
    Ok(res)
}

/// One grid point of a sweep; flagged points carry NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub param: f64,
    pub g_eff: f64,
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub parameter: String,
    pub points: Vec<SweepPoint>,
    pub zero_crossings: Vec<f64>,
}

impl SweepResult {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.param).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.g_eff).collect()
    }

    /// Number of sign changes between consecutive unflagged points.
    pub fn sign_changes(&self) -> usize {
        let v: Vec<f64> = self.points.iter().filter(|p| p.flag.is_none()).map(|p| p.g_eff).collect();
        v.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count()
    }
}

/// Evenly spaced grid `start..=stop` with `steps` points.
pub fn linear_grid(start: f64, stop: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 || !(stop > start) {
        return Err(Error::Spec(format!("grid needs stop > start and at least 2 steps, got {start}:{stop}:{steps}")));
    }
    Ok((0..steps).map(|i| start + (stop - start) * i as f64 / (steps - 1) as f64).collect())
}

/// Effective coupling between `keep` after eliminating every other element.
pub fn effective_coupling(bare: &BareParameters, keep: [&str; 2]) -> Result<f64> {
    let (a, b) = (index(bare, keep[0])?, index(bare, keep[1])?);
    let eliminate: Vec<String> = bare.names.iter().filter(|n| *n != keep[0] && *n != keep[1]).cloned().collect();
    // the circuit must be physical before any deflation
    forward_synthesize(bare)?;
    let res = reduce_bare(bare, &eliminate)?;
    let (i, j) = (
        res.kept.iter().position(|n| *n == bare.names[a]).unwrap(),
        res.kept.iter().position(|n| *n == bare.names[b]).unwrap(),
    );
    Ok(res.effective.g[(i, j)])
}

fn index(bare: &BareParameters, name: &str) -> Result<usize> {
    bare.index_of(name).ok_or_else(|| Error::Spec(format!("unknown element {name}")))
}

/// Sweeps an arbitrary bare-model family. Points whose model is unphysical are
/// flagged and recorded as NaN; zero crossings are located by linear
/// interpolation followed by one bisection refinement.
pub fn sweep_bare<F>(parameter: &str, grid: &[f64], keep: [&str; 2], model: F) -> Result<SweepResult>
where
    F: Fn(f64) -> Result<BareParameters>,
{
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Spec("sweep grid must be strictly increasing with at least 2 points".into()));
    }
    let eval = |x: f64| -> Result<f64> { effective_coupling(&model(x)?, keep) };
    let mut points = Vec::with_capacity(grid.len());
    for &x in grid {
        points.push(match eval(x) {
            Ok(g) => SweepPoint { param: x, g_eff: g, flag: None },
            Err(e @ (Error::Physics(_) | Error::Numerics(_))) => SweepPoint {
                param: x,
                g_eff: f64::NAN,
                flag: Some(e.to_string()),
            },
            Err(e) => return Err(e),
        });
    }

    let mut zero_crossings = Vec::new();
    let valid: Vec<&SweepPoint> = points.iter().filter(|p| p.flag.is_none()).collect();
    for w in valid.windows(2) {
        let (p0, p1) = (w[0], w[1]);
        if p0.g_eff == 0.0 {
            zero_crossings.push(p0.param);
            continue;
        }
        if (p0.g_eff > 0.0) == (p1.g_eff > 0.0) || p1.g_eff == 0.0 {
            continue;
        }
        let interp = |a: f64, fa: f64, b: f64, fb: f64| a - fa * (b - a) / (fb - fa);
        let x = interp(p0.param, p0.g_eff, p1.param, p1.g_eff);
        let root = match eval(x) {
            Ok(fx) if fx == 0.0 => x,
            Ok(fx) if (fx > 0.0) == (p0.g_eff > 0.0) => interp(x, fx, p1.param, p1.g_eff),
            Ok(fx) => interp(p0.param, p0.g_eff, x, fx),
            Err(_) => x,
        };
        zero_crossings.push(root);
    }
    if let Some(last) = valid.last() {
        if last.g_eff == 0.0 {
            zero_crossings.push(last.param);
        }
    }
    Ok(SweepResult { parameter: parameter.into(), points, zero_crossings })
}

/// The two transmons other than the coupler, in circuit order.
pub fn qubit_pair(template: &CircuitSpec, coupler: &str) -> Result<[String; 2]> {
    let q: Vec<String> = template
        .elements
        .iter()
        .filter(|e| e.kind == ElementKind::Transmon && e.name != coupler)
        .map(|e| e.name.clone())
        .collect();
    match q.as_slice() {
        [a, b] => Ok([a.clone(), b.clone()]),
        _ => Err(Error::Spec(format!(
            "a coupler sweep needs exactly two transmons besides the coupler, found {}",
            q.len()
        ))),
    }
}

/// g_eff between the two transmons as the coupler's junction inductance runs over `grid` (nH).
pub fn effective_coupling_sweep(template: &CircuitSpec, coupler: &str, grid: &[f64]) -> Result<SweepResult> {
    template.validate()?;
    let el = template
        .elements
        .iter()
        .find(|e| e.name == coupler)
        .ok_or_else(|| Error::Spec(format!("unknown coupler {coupler}")))?;
    if el.josephson_inductance.is_none() {
        return Err(Error::Spec(format!("coupler {coupler} has no junction inductance to sweep")));
    }
    let [a, b] = qubit_pair(template, coupler)?;
    sweep_bare(&format!("L_J({coupler}) nH"), grid, [&a, &b], |l| {
        build_bare(&with_inductance(template, coupler, l)?)
    })
}

/// Copy of `template` with the tunable inductance of `element` set to `l` (nH):
/// the junction inductance when present, otherwise the linear one.
pub fn with_inductance(template: &CircuitSpec, element: &str, l: f64) -> Result<CircuitSpec> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::Spec(format!("inductance must be positive, got {l}")));
    }
    let mut c = template.clone();
    let e = c.element_mut(element)?;
    if e.josephson_inductance.is_some() {
        e.josephson_inductance = Some(l);
    } else if e.inductance.is_some() {
        e.inductance = Some(l);
    } else {
        return Err(Error::Spec(format!("{element} has no inductance to tune")));
    }
    Ok(c)
}

fn tunable_inductance(template: &CircuitSpec, element: &str) -> Result<f64> {
    let e = template
        .elements
        .iter()
        .find(|e| e.name == element)
        .ok_or_else(|| Error::Spec(format!("unknown element {element}")))?;
    e.josephson_inductance
        .or(e.inductance)
        .ok_or_else(|| Error::Spec(format!("{element} has no inductance to tune")))
}

/// Half the splitting of a resonant pair.
pub fn nms_resonant_g(omega_prime_1: f64, omega_prime_2: f64) -> f64 {
    (omega_prime_1 - omega_prime_2).abs() / 2.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmsResult {
    /// Coupling magnitude at the operating point (MHz); NMS cannot resolve the sign.
    pub g: f64,
    /// Coupling at resonance (MHz).
    pub g_resonance: f64,
    /// Tuned inductance at the gap minimum (nH).
    pub resonance_inductance: f64,
    /// √(ω₁ω₂) at the operating point over its value at resonance.
    pub rescale: f64,
}

/// Splitting between the two modes that participate most on `tuned` and `partner`.
fn pair_gap(template: &CircuitSpec, tuned: &str, partner: &str, l: f64) -> Result<(f64, BareParameters)> {
    let bare = build_bare(&with_inductance(template, tuned, l)?)?;
    let syn = forward_synthesize(&bare)?;
    let (t, p) = (index(&bare, tuned)?, index(&bare, partner)?);
    let r = &syn.modes.r;
    let mut order: Vec<usize> = (0..bare.len()).collect();
    order.sort_by(|&a, &b| (r[(b, t)] + r[(b, p)]).total_cmp(&(r[(a, t)] + r[(a, p)])));
    let w = &syn.modes.omega_prime;
    Ok((nms_resonant_g(w[order[0]], w[order[1]]), bare))
}

/// Coupling between `tuned` and `partner` from the minimum normal-mode gap found
/// by golden-section search of the tuned inductance over `interval` (nH), rescaled
/// to the template's operating point by g ∝ √(ω₁ω₂).
pub fn nms_extract(template: &CircuitSpec, tuned: &str, partner: &str, interval: (f64, f64)) -> Result<NmsResult> {
    template.validate()?;
    let (mut a, mut b) = interval;
    if !(a > 0.0 && b > a) {
        return Err(Error::Spec(format!("search interval must satisfy 0 < start < stop, got {a}..{b}")));
    }
    let operating = tunable_inductance(template, tuned)?;
    let gap = |l: f64| pair_gap(template, tuned, partner, l).map(|x| x.0);

    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (lo, hi) = (a, b);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (gap(c)?, gap(d)?);
    while (b - a) > 1e-12 * b {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = gap(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = gap(d)?;
        }
    }
    let l_res = 0.5 * (a + b);
    let edge = 1e-6 * (hi - lo);
    if l_res - lo < edge || hi - l_res < edge {
        return Err(Error::Search(format!(
            "gap between {tuned} and {partner} has no interior minimum in [{lo}, {hi}] nH"
        )));
    }
    let (g_res, bare_res) = pair_gap(template, tuned, partner, l_res)?;
    let bare_op = build_bare(template)?;
    let geo = |bp: &BareParameters| -> Result<f64> { Ok((bp.omega[index(bp, tuned)?] * bp.omega[index(bp, partner)?]).sqrt()) };
    let rescale = if (operating - l_res).abs() <= 1e-12 * operating { 1.0 } else { geo(&bare_op)? / geo(&bare_res)? };
    Ok(NmsResult { g: g_res * rescale, g_resonance: g_res, resonance_inductance: l_res, rescale })
}
