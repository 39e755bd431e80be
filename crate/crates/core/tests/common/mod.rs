//! Oracles shared by the integration suites. Each one recomputes a quantity
//! from first principles instead of calling the closed forms under test.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use nugsdp::harmonics::{dft_cyclic, uniform_grid, RotationAngle};
use nugsdp::penalty::pairwise_penalty;
use nugsdp::sdp::{retained_weight, NugSdpVariables};
use nugsdp::signals::{Dataset, Signal};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_variables(n: usize, k: usize, rng: &mut ChaCha8Rng) -> NugSdpVariables {
    let c = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let r = (0..k)
        .map(|_| DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
        .collect();
    NugSdpVariables { c, r }
}

/// `f̂_ji(k)` from grid samples of `f_ji`, independent of the closed form.
pub fn numeric_coefficient(sj: &Signal, si: &Signal, k: i64) -> Complex64 {
    let len = 4 * si.bandwidth().0 + 4;
    let samples: Vec<Complex64> = uniform_grid(len)
        .into_iter()
        .map(|g| Complex64::new(pairwise_penalty(sj, si, RotationAngle::new(g)).unwrap(), 0.0))
        .collect();
    dft_cyclic(&samples).unwrap()[k.rem_euclid(len as i64) as usize]
}

/// `Σ_{k,m} tr(F̂^(k,m) X^(k,m))` with `F̂^(k,m) = F̂^(k)/M`, summed entrywise.
pub fn explicit_double_sum(d: &Dataset, vars: &NugSdpVariables) -> f64 {
    let n = d.len();
    let kmax = d.bandwidth().0 as i64;
    let m = d.num_classes;
    let mut total = Complex64::new(0.0, 0.0);
    for k in -kmax..=kmax {
        let f = DMatrix::from_fn(n, n, |i, j| numeric_coefficient(&d.signals[j], &d.signals[i], k));
        for class in 0..m {
            let x = vars.lifted(k, class);
            for i in 0..n {
                for j in 0..n {
                    total += f[(i, j)] * x[(j, i)] / m as f64;
                }
            }
        }
    }
    total.re
}

pub fn same_class_penalty(d: &Dataset) -> f64 {
    let n = d.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if d.true_labels[i] == d.true_labels[j] {
                let g = d.true_shifts[i].radians() - d.true_shifts[j].radians();
                total += pairwise_penalty(&d.signals[i], &d.signals[j], RotationAngle::new(g)).unwrap();
            }
        }
    }
    total
}

pub fn brute_force_retained(w: &DMatrix<f64>, m: usize) -> f64 {
    let n = w.nrows();
    let mut best = f64::INFINITY;
    let mut labels = vec![0usize; n];
    for code in 0..m.pow(n as u32) {
        let mut c = code;
        for l in labels.iter_mut() {
            *l = c % m;
            c /= m;
        }
        best = best.min(retained_weight(w, &labels));
    }
    best
}

