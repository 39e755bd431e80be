//! Shift-invariant signatures (power spectrum and bispectrum) and the
//! clustering baseline built on them.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kmeans::{kmeans, KMeansConfig};
use crate::signals::{Dataset, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignatureKind {
    Bispectrum,
    Autocorrelation,
}

impl fmt::Display for SignatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bispectrum => "bispectrum",
            Self::Autocorrelation => "autocorrelation",
        })
    }
}

impl FromStr for SignatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bispectrum" => Ok(Self::Bispectrum),
            "autocorrelation" => Ok(Self::Autocorrelation),
            _ => Err(Error::Domain(format!(
                "unknown signature `{s}` (expected bispectrum or autocorrelation)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SignatureValues {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub kind: SignatureKind,
    pub values: SignatureValues,
}

impl Signature {
    /// Real feature vector; complex values contribute real parts then imaginary parts.
    pub fn features(&self) -> Vec<f64> {
        match &self.values {
            SignatureValues::Real(v) => v.clone(),
            SignatureValues::Complex(v) => v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)).collect(),
        }
    }

    /// [`Self::features`] scaled to unit Euclidean norm; the zero vector is kept.
    pub fn normalized_features(&self) -> Vec<f64> {
        let mut f = self.features();
        let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            f.iter_mut().for_each(|x| *x /= norm);
        }
        f
    }
}

/// `|ŝ(k)|²` for `k = -K..=K`.
pub fn autocorrelation_signature(s: &Signal) -> Signature {
    Signature {
        kind: SignatureKind::Autocorrelation,
        values: SignatureValues::Real(s.coeffs().iter().map(|c| c.norm_sqr()).collect()),
    }
}

/// Index pairs `(k1, k2)` with `k1`, `k2` and `k1 + k2` all in `-K..=K`,
/// ordered by `k1` then `k2`.
pub fn bispectrum_indices(max_frequency: usize) -> Vec<(i64, i64)> {
    let k = max_frequency as i64;
    (-k..=k)
        .flat_map(|k1| (-k..=k).filter(move |k2| (k1 + k2).abs() <= k).map(move |k2| (k1, k2)))
        .collect()
}

/// `B(k1, k2) = ŝ(k1) ŝ(k2) conj(ŝ(k1 + k2))` over [`bispectrum_indices`].
pub fn bispectrum_signature(s: &Signal) -> Signature {
    let values = bispectrum_indices(s.bandwidth().0)
        .into_iter()
        .map(|(k1, k2)| s.coeff(k1) * s.coeff(k2) * s.coeff(k1 + k2).conj())
        .collect();
    Signature {
        kind: SignatureKind::Bispectrum,
        values: SignatureValues::Complex(values),
    }
}

pub fn signature(s: &Signal, kind: SignatureKind) -> Signature {
    match kind {
        SignatureKind::Bispectrum => bispectrum_signature(s),
        SignatureKind::Autocorrelation => autocorrelation_signature(s),
    }
}

/// Labels from k-means on unit-normalized signatures, with the same restart
/// policy as the SDP rounding.
pub fn baseline_cluster(d: &Dataset, kind: SignatureKind, num_classes: usize, seed: u64) -> Vec<usize> {
    let points: Vec<Vec<f64>> = d
        .signals
        .par_iter()
        .map(|s| signature(s, kind).normalized_features())
        .collect();
    let config = KMeansConfig {
        seed,
        ..KMeansConfig::default()
    };
    kmeans(&points, num_classes, &config).labels
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::{Bandwidth, RotationAngle};
    use crate::rounding::classification_error;
    use crate::signals::{generate_dataset, random_prototype};

    fn max_dev(a: &Signature, b: &Signature) -> f64 {
        a.features().iter().zip(b.features()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn signatures_are_shift_invariant() {
        for seed in 0..20 {
            let s = random_prototype(Bandwidth(6), seed);
            let g = RotationAngle::new(0.37 * seed as f64 + 0.1);
            let t = s.shift(g);
            assert!(max_dev(&autocorrelation_signature(&s), &autocorrelation_signature(&t)) < 1e-12);
            assert!(max_dev(&bispectrum_signature(&s), &bispectrum_signature(&t)) < 1e-12);
        }
    }

    #[test]
    fn single_coefficient_autocorrelation() {
        let s = Signal::single(Bandwidth(2), 1, Complex64::new(2.0, 0.0)).unwrap();
        assert_eq!(autocorrelation_signature(&s).features(), vec![0.0, 0.0, 0.0, 4.0, 0.0]);
    }

    #[test]
    fn dc_only_bispectrum() {
        let c = Complex64::new(0.5, -1.5);
        let s = Signal::single(Bandwidth(3), 0, c).unwrap();
        let idx = bispectrum_indices(3);
        let SignatureValues::Complex(v) = bispectrum_signature(&s).values else {
            panic!("bispectrum is complex");
        };
        for ((k1, k2), b) in idx.iter().zip(&v) {
            if (*k1, *k2) == (0, 0) {
                assert!((b - c * c * c.conj()).norm() < 1e-15);
            } else {
                assert_eq!(*b, Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn index_count() {
        // Pairs with |k1|, |k2|, |k1 + k2| <= K number 3K² + 3K + 1.
        for k in 0..6 {
            assert_eq!(bispectrum_indices(k).len(), 3 * k * k + 3 * k + 1);
        }
    }

    #[test]
    fn phase_blind_pair() {
        // Equal magnitude spectra; the relative phase of ŝ(1), ŝ(2), ŝ(3) differs.
        let bw = Bandwidth(3);
        let mut a = vec![Complex64::new(0.0, 0.0); 7];
        a[4] = Complex64::new(1.0, 0.0);
        a[5] = Complex64::new(1.0, 0.0);
        a[6] = Complex64::new(1.0, 0.0);
        let mut b = a.clone();
        b[6] = Complex64::from_polar(1.0, 1.0);
        let (a, b) = (Signal::new(a).unwrap(), Signal::new(b).unwrap());
        assert_eq!(a.bandwidth(), bw);
        assert!(max_dev(&autocorrelation_signature(&a), &autocorrelation_signature(&b)) < 1e-15);
        assert!(max_dev(&bispectrum_signature(&a), &bispectrum_signature(&b)) > 0.5);
    }

    #[test]
    fn noiseless_dataset_is_separable() {
        let d = generate_dataset(4, 5, Bandwidth(5), 0.0, 11).unwrap();
        for kind in [SignatureKind::Bispectrum, SignatureKind::Autocorrelation] {
            let labels = baseline_cluster(&d, kind, 4, 2);
            assert_eq!(classification_error(&labels, &d.true_labels, 4).unwrap(), 0.0, "{kind}");
        }
    }

    #[test]
    fn class_constant_signatures() {
        let d = generate_dataset(3, 4, Bandwidth(4), 0.0, 5).unwrap();
        for i in 0..d.len() {
            for j in 0..d.len() {
                if d.true_labels[i] == d.true_labels[j] {
                    let (si, sj) = (bispectrum_signature(&d.signals[i]), bispectrum_signature(&d.signals[j]));
                    assert!(max_dev(&si, &sj) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn kind_parsing() {
        for kind in [SignatureKind::Bispectrum, SignatureKind::Autocorrelation] {
            assert_eq!(kind.to_string().parse::<SignatureKind>().unwrap(), kind);
        }
        assert!("power".parse::<SignatureKind>().is_err());
    }
}
