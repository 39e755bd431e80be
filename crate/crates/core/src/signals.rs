//! Band-limited signals on `SO(2)` and synthetic heterogeneous datasets.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Error, Result};
use crate::harmonics::{Bandwidth, RotationAngle};
use crate::seed;

/// Tags separating the random streams drawn from one dataset seed.
const PROTOTYPE_STREAM: u64 = 1;
const SHIFT_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;

/// A complex function on `SO(2)` stored as its Fourier coefficients
/// `ŝ(-K), ..., ŝ(K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    coeffs: Vec<Complex64>,
    bandwidth: Bandwidth,
}

impl Signal {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return domain(format!(
                "a signal needs an odd number of coefficients, got {}",
                coeffs.len()
            ));
        }
        let bandwidth = Bandwidth(coeffs.len() / 2);
        Ok(Self { coeffs, bandwidth })
    }

    pub fn zeros(bandwidth: Bandwidth) -> Self {
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); bandwidth.len()],
            bandwidth,
        }
    }

    /// A signal with a single nonzero coefficient at frequency `k`.
    pub fn single(bandwidth: Bandwidth, k: i64, value: Complex64) -> Result<Self> {
        let mut s = Self::zeros(bandwidth);
        let idx = bandwidth
            .index(k)
            .ok_or_else(|| Error::Domain(format!("frequency {k} exceeds bandwidth {}", bandwidth.0)))?;
        s.coeffs[idx] = value;
        Ok(s)
    }

    pub fn bandwidth(&self) -> Bandwidth {
        self.bandwidth
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient at frequency `k`, zero outside the band.
    pub fn coeff(&self, k: i64) -> Complex64 {
        self.bandwidth
            .index(k)
            .map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Value `Σ_k ŝ(k) exp(i k θ)`.
    pub fn synthesize(&self, theta: f64) -> Complex64 {
        self.bandwidth
            .frequencies()
            .zip(&self.coeffs)
            .map(|(k, &c)| c * Complex64::from_polar(1.0, k as f64 * theta))
            .sum()
    }

    /// The rotated signal `(g ∘ s)(θ) = s(θ - g)`, i.e. `ŝ(k) exp(-i k g)`.
    pub fn shift(&self, g: RotationAngle) -> Self {
        let coeffs = self
            .bandwidth
            .frequencies()
            .zip(&self.coeffs)
            .map(|(k, &c)| c * Complex64::from_polar(1.0, -(k as f64) * g.radians()))
            .collect();
        Self {
            coeffs,
            bandwidth: self.bandwidth,
        }
    }

    /// Hermitian inner product `Σ_k a(k) conj(b(k))`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    /// Root-mean-square coefficient magnitude.
    pub fn coefficient_rms(&self) -> f64 {
        (self.norm_sqr() / self.coeffs.len() as f64).sqrt()
    }

    /// Adds i.i.d. complex Gaussian noise with standard deviation `sigma` per
    /// complex coefficient (`sigma / √2` per real component).
    pub fn add_noise(&self, sigma: f64, seed: u64) -> Result<Self> {
        let mut rng = seed::rng_from(seed, &[NOISE_STREAM]);
        self.add_noise_with(sigma, &mut rng)
    }

    fn add_noise_with<R: Rng>(&self, sigma: f64, rng: &mut R) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return domain(format!("noise level must be finite and nonnegative, got {sigma}"));
        }
        let mut out = self.clone();
        if sigma == 0.0 {
            return Ok(out);
        }
        let per_component = sigma / std::f64::consts::SQRT_2;
        for c in &mut out.coeffs {
            *c += complex_gaussian(rng) * per_component;
        }
        Ok(out)
    }
}

fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// A unit-norm prototype with i.i.d. complex Gaussian coefficients.
pub fn random_prototype(bandwidth: Bandwidth, seed: u64) -> Signal {
    let mut rng = seed::rng_from(seed, &[PROTOTYPE_STREAM]);
    prototype_with(bandwidth, &mut rng)
}

fn prototype_with<R: Rng>(bandwidth: Bandwidth, rng: &mut R) -> Signal {
    loop {
        let coeffs: Vec<Complex64> = (0..bandwidth.len()).map(|_| complex_gaussian(rng)).collect();
        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return Signal {
                coeffs: coeffs.into_iter().map(|c| c / norm).collect(),
                bandwidth,
            };
        }
    }
}

/// `n` noisy, randomly rotated copies of `M` prototypes, with the hidden
/// labels and rotations kept as ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub signals: Vec<Signal>,
    pub true_labels: Vec<usize>,
    pub true_shifts: Vec<RotationAngle>,
    pub num_classes: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    pub fn bandwidth(&self) -> Bandwidth {
        self.signals.first().map_or(Bandwidth(0), Signal::bandwidth)
    }

    /// Checks the structural invariants; used after parsing.
    pub fn validate(&self) -> Result<()> {
        let n = self.signals.len();
        if self.num_classes < 2 {
            return domain("a dataset needs at least two classes");
        }
        if n < self.num_classes {
            return domain(format!("{n} signals cannot populate {} classes", self.num_classes));
        }
        if self.true_labels.len() != n || self.true_shifts.len() != n {
            return domain("ground truth length does not match the number of signals");
        }
        let bw = self.bandwidth();
        if let Some(i) = self.signals.iter().position(|s| s.bandwidth() != bw) {
            return domain(format!("signal {i} has a different bandwidth"));
        }
        if let Some(i) = self.true_labels.iter().position(|&l| l >= self.num_classes) {
            return domain(format!("label of signal {i} is out of range"));
        }
        Ok(())
    }
}

/// Converts a relative noise level (noise std over prototype coefficient RMS)
/// to the absolute per-coefficient `sigma`. Prototypes have unit norm, so the
/// RMS is `1 / √(2K+1)`.
pub fn sigma_from_noise_level(level: f64, bandwidth: Bandwidth) -> f64 {
    level / (bandwidth.len() as f64).sqrt()
}

/// Generates a balanced dataset of `num_classes * copies_per_class` signals.
///
/// Signal `i` belongs to class `i / copies_per_class`. Prototype `m` is drawn
/// from the stream `(seed, PROTOTYPE, m)`; the shift and noise of signal `i`
/// from `(seed, SHIFT, i)` and `(seed, NOISE, i)`, so generation order does
/// not affect the output.
pub fn generate_dataset(
    num_classes: usize,
    copies_per_class: usize,
    bandwidth: Bandwidth,
    sigma: f64,
    seed: u64,
) -> Result<Dataset> {
    if num_classes < 2 {
        return domain(format!("need at least two classes, got {num_classes}"));
    }
    if copies_per_class < 1 {
        return domain("need at least one copy per class");
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return domain(format!("noise level must be finite and nonnegative, got {sigma}"));
    }
    let prototypes: Vec<Signal> = (0..num_classes as u64)
        .map(|m| {
            let mut rng = seed::rng_from(seed, &[PROTOTYPE_STREAM, m]);
            prototype_with(bandwidth, &mut rng)
        })
        .collect();

    let n = num_classes * copies_per_class;
    let mut signals = Vec::with_capacity(n);
    let mut true_labels = Vec::with_capacity(n);
    let mut true_shifts = Vec::with_capacity(n);
    for i in 0..n {
        let label = i / copies_per_class;
        let g = RotationAngle::new(
            seed::rng_from(seed, &[SHIFT_STREAM, i as u64]).random_range(0.0..TAU),
        );
        let mut noise_rng = seed::rng_from(seed, &[NOISE_STREAM, i as u64]);
        signals.push(prototypes[label].shift(g).add_noise_with(sigma, &mut noise_rng)?);
        true_labels.push(label);
        true_shifts.push(g);
    }
    Ok(Dataset {
        signals,
        true_labels,
        true_shifts,
        num_classes,
        noise_sigma: sigma,
        seed,
    })
}

/// Serializes a dataset to the line-oriented text format:
///
/// ```text
/// n M K sigma seed
/// label shift re(ŝ(-K)) im(ŝ(-K)) ... re(ŝ(K)) im(ŝ(K))
/// ...
/// ```
///
/// Floats are written in shortest round-trip form.
pub fn format_dataset(d: &Dataset) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {} {} {}",
        d.len(),
        d.num_classes,
        d.bandwidth().0,
        d.noise_sigma,
        d.seed
    );
    for ((s, label), shift) in d.signals.iter().zip(&d.true_labels).zip(&d.true_shifts) {
        let _ = write!(out, "{} {}", label, shift.radians());
        for c in s.coeffs() {
            let _ = write!(out, " {} {}", c.re, c.im);
        }
        out.push('\n');
    }
    out
}

pub fn write_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_dataset(d)).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text)
}

/// Parses the format written by [`format_dataset`]. Blank lines and lines
/// starting with `#` are ignored.
pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| Error::parse(0, "empty dataset file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 {
        return Err(Error::parse(
            hline,
            format!("header needs 5 fields `n M K sigma seed`, found {}", fields.len()),
        ));
    }
    let n: usize = parse_field(hline, fields[0], "n")?;
    let num_classes: usize = parse_field(hline, fields[1], "M")?;
    let kmax: usize = parse_field(hline, fields[2], "K")?;
    let noise_sigma: f64 = parse_field(hline, fields[3], "sigma")?;
    let seed: u64 = parse_field(hline, fields[4], "seed")?;
    let bandwidth = Bandwidth(kmax);
    let expected = 2 + 2 * bandwidth.len();

    let mut signals = Vec::with_capacity(n);
    let mut true_labels = Vec::with_capacity(n);
    let mut true_shifts = Vec::with_capacity(n);
    for record in 0..n {
        let (line, body) = lines.next().ok_or_else(|| {
            Error::parse(
                text.lines().count(),
                format!("file truncated: expected {n} records, found {record}"),
            )
        })?;
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != expected {
            return Err(Error::parse(
                line,
                format!(
                    "record {record} has {} fields, expected {expected} (label, shift and {} complex coefficients)",
                    fields.len(),
                    bandwidth.len()
                ),
            ));
        }
        let label: usize = parse_field(line, fields[0], "label")?;
        if label >= num_classes {
            return Err(Error::parse(
                line,
                format!("record {record} has label {label} outside 0..{num_classes}"),
            ));
        }
        let shift: f64 = parse_field(line, fields[1], "shift")?;
        let coeffs = fields[2..]
            .chunks(2)
            .map(|pair| {
                Ok(Complex64::new(
                    parse_field(line, pair[0], "coefficient")?,
                    parse_field(line, pair[1], "coefficient")?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        signals.push(Signal { coeffs, bandwidth });
        true_labels.push(label);
        true_shifts.push(RotationAngle::new(shift));
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::parse(line, format!("unexpected data after {n} records")));
    }
    let d = Dataset {
        signals,
        true_labels,
        true_shifts,
        num_classes,
        noise_sigma,
        seed,
    };
    d.validate().map_err(|e| Error::parse(hline, e.to_string()))?;
    Ok(d)
}

fn parse_field<T: std::str::FromStr>(line: usize, raw: &str, name: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::parse(line, format!("cannot parse {name} from `{raw}`")))
}
