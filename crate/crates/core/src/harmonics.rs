//! Scalar irreducible representations of `Z_M`, `SO(2)` and `SO(2) x Z_M`,
//! the Haar-normalized cyclic DFT, and Fejér kernel weights.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{domain, Result};

/// Default tolerance used when comparing angles.
pub const ANGLE_TOLERANCE: f64 = 1e-9;

/// An element `a` of the cyclic group `Z_M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CyclicElement {
    value: usize,
    modulus: usize,
}

impl CyclicElement {
    pub fn new(value: usize, modulus: usize) -> Result<Self> {
        if modulus < 2 {
            return domain(format!("cyclic modulus must be at least 2, got {modulus}"));
        }
        if value >= modulus {
            return domain(format!("cyclic element {value} out of range for Z_{modulus}"));
        }
        Ok(Self { value, modulus })
    }

    pub fn value(self) -> usize {
        self.value
    }

    pub fn modulus(self) -> usize {
        self.modulus
    }

    pub fn identity(modulus: usize) -> Result<Self> {
        Self::new(0, modulus)
    }

    /// Group product (addition mod `M`).
    pub fn compose(self, other: Self) -> Self {
        debug_assert_eq!(self.modulus, other.modulus);
        Self {
            value: (self.value + other.value) % self.modulus,
            modulus: self.modulus,
        }
    }

    pub fn inverse(self) -> Self {
        Self {
            value: (self.modulus - self.value) % self.modulus,
            modulus: self.modulus,
        }
    }
}

/// A rotation in `SO(2)`, stored as an angle reduced to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct RotationAngle(f64);

impl RotationAngle {
    pub fn new(radians: f64) -> Self {
        Self(wrap_angle(radians))
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn compose(self, other: Self) -> Self {
        Self::new(self.0 + other.0)
    }

    pub fn inverse(self) -> Self {
        Self::new(-self.0)
    }

    /// Equality on the circle up to `tol` radians.
    pub fn approx_eq(self, other: Self, tol: f64) -> bool {
        angular_distance(self.0, other.0) <= tol
    }
}

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_angle(radians: f64) -> f64 {
    let r = radians.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Reduces an angle to `(-π, π]`.
pub fn wrap_signed(radians: f64) -> f64 {
    let r = wrap_angle(radians);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Shortest arc length between two angles.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    wrap_signed(a - b).abs()
}

/// An element `(g, a)` of `SO(2) x Z_M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductElement {
    pub rotation: RotationAngle,
    pub class_shift: CyclicElement,
}

impl ProductElement {
    pub fn new(rotation: RotationAngle, class_shift: CyclicElement) -> Self {
        Self {
            rotation,
            class_shift,
        }
    }

    /// Componentwise product `(g_i g_j, a_i a_j)`.
    pub fn compose(self, other: Self) -> Self {
        Self {
            rotation: self.rotation.compose(other.rotation),
            class_shift: self.class_shift.compose(other.class_shift),
        }
    }

    pub fn inverse(self) -> Self {
        Self {
            rotation: self.rotation.inverse(),
            class_shift: self.class_shift.inverse(),
        }
    }
}

/// Truncation order `K`: frequencies `-K..=K` are retained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Bandwidth(pub usize);

impl Bandwidth {
    pub fn max_frequency(self) -> usize {
        self.0
    }

    /// Number of retained coefficients, `2K + 1`.
    pub fn len(self) -> usize {
        2 * self.0 + 1
    }

    /// Retained frequencies in ascending order.
    pub fn frequencies(self) -> impl DoubleEndedIterator<Item = i64> {
        let k = self.0 as i64;
        -k..=k
    }

    /// Position of frequency `k` in a `2K + 1` coefficient array.
    pub fn index(self, k: i64) -> Option<usize> {
        let kmax = self.0 as i64;
        (k.abs() <= kmax).then(|| (k + kmax) as usize)
    }
}

/// `η_m(a) = exp(i 2π a m / M)`.
pub fn irrep_cyclic(m: usize, a: CyclicElement) -> Result<Complex64> {
    if m >= a.modulus() {
        return domain(format!(
            "irrep index {m} out of range for Z_{}",
            a.modulus()
        ));
    }
    // Reduce the product first so the phase is computed from an exact rational.
    let num = (a.value() * m) % a.modulus();
    Ok(Complex64::from_polar(
        1.0,
        TAU * num as f64 / a.modulus() as f64,
    ))
}

/// `ρ_k(g) = exp(i k g)`.
pub fn irrep_so2(k: i64, g: RotationAngle) -> Complex64 {
    Complex64::from_polar(1.0, k as f64 * g.radians())
}

/// `ψ_{k,m}((g, a)) = ρ_k(g) η_m(a)`.
pub fn irrep_product(k: i64, m: usize, x: ProductElement) -> Result<Complex64> {
    Ok(irrep_so2(k, x.rotation) * irrep_cyclic(m, x.class_shift)?)
}

/// Fourier coefficients of a function on `Z_M` with Haar normalization:
/// `f̂(m) = (1/M) Σ_a f(a) exp(-i 2π a m / M)`.
pub fn dft_cyclic(values: &[Complex64]) -> Result<Vec<Complex64>> {
    let len = values.len();
    if len == 0 {
        return domain("cannot transform an empty sequence");
    }
    let scale = 1.0 / len as f64;
    Ok((0..len)
        .map(|m| {
            values
                .iter()
                .enumerate()
                .map(|(a, &f)| f * root_of_unity(len, (a * m) % len).conj())
                .sum::<Complex64>()
                * scale
        })
        .collect())
}

/// Synthesis `f(a) = Σ_m f̂(m) exp(i 2π a m / M)`, the inverse of [`dft_cyclic`].
pub fn idft_cyclic(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let len = coeffs.len();
    if len == 0 {
        return domain("cannot transform an empty sequence");
    }
    Ok((0..len)
        .map(|a| {
            coeffs
                .iter()
                .enumerate()
                .map(|(m, &c)| c * root_of_unity(len, (a * m) % len))
                .sum()
        })
        .collect())
}

fn root_of_unity(len: usize, power: usize) -> Complex64 {
    Complex64::from_polar(1.0, TAU * power as f64 / len as f64)
}

/// Fejér weights `w_k = 1 - |k| / (K + 1)` for `k = -K..=K`.
pub fn fejer_weights(bandwidth: Bandwidth) -> Vec<f64> {
    let denom = (bandwidth.max_frequency() + 1) as f64;
    bandwidth
        .frequencies()
        .map(|k| 1.0 - k.unsigned_abs() as f64 / denom)
        .collect()
}

/// Value of the weighted kernel `Σ_k w_k exp(i k g)` at angle `g`.
pub fn kernel_value(weights: &[f64], bandwidth: Bandwidth, g: f64) -> f64 {
    bandwidth
        .frequencies()
        .zip(weights)
        .map(|(k, w)| w * (k as f64 * g).cos())
        .sum()
}

/// `L` equispaced angles `2πt/L`.
pub fn uniform_grid(len: usize) -> Vec<f64> {
    (0..len).map(|t| TAU * t as f64 / len as f64).collect()
}
