#![allow(dead_code)]

use iepr_core::model::{anharmonicity_from_lj, BareParameters};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn bare(names: &[&str], omega: &[f64], g: &[(usize, usize, f64)]) -> BareParameters {
    let n = names.len();
    let mut m = DMatrix::zeros(n, n);
    for &(i, j, v) in g {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    BareParameters::new(names.iter().map(|s| s.to_string()).collect(), DVector::from_row_slice(omega), m).unwrap()
}

/// Characteristic parameters of the five-element chip (MHz): Q1, Q2, C, R1, R2.
pub fn five_element_chip() -> BareParameters {
    bare(
        &["Q1", "Q2", "C", "R1", "R2"],
        &[6699.371, 6701.12, 8118.31, 5019.11, 5092.84],
        &[
            (0, 1, 8.76),
            (0, 2, 158.05),
            (0, 3, 40.08),
            (0, 4, 1.33),
            (1, 2, 159.92),
            (1, 3, 0.37),
            (1, 4, 40.56),
            (2, 3, 1.68),
            (2, 4, 14.00),
            (3, 4, 0.36),
        ],
    )
}

/// Junction inductances (nH) of the five-element chip; resonators are linear.
pub const CHIP_LJ: [f64; 5] = [6.691, 6.691, 5.408, 0.0, 0.0];

/// Random positive-definite bare model with 2..=6 elements and |g| ≤ 0.1·√(ω_iω_j).
pub fn random_bare<R: Rng>(rng: &mut R) -> BareParameters {
    loop {
        let n = rng.gen_range(2..=6);
        let names: Vec<String> = (0..n).map(|i| format!("E{i}")).collect();
        let omega = DVector::from_fn(n, |_, _| rng.gen_range(4000.0..9000.0));
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let scale = (omega[i] * omega[j] as f64).sqrt();
                let mag = rng.gen_range(0.005..0.1) * scale;
                let v = if rng.gen_bool(0.5) { mag } else { -mag };
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        let b = BareParameters::new(names, omega, g).unwrap();
        if iepr_core::modal::forward_synthesize(&b).is_ok() {
            return b;
        }
    }
}

/// Junction inductance (nH) giving anharmonicity `alpha` (MHz) at bare frequency `f`.
pub fn lj_for(f: f64, alpha: f64) -> f64 {
    alpha / anharmonicity_from_lj(f, 1.0).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
