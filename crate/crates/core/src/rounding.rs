//! Extraction of labels and rotations from a relaxed solution, and scoring
//! against ground truth.

use std::fmt::Write as _;

use itertools::Itertools;
use nalgebra::DMatrix;
use num_complex::Complex64;
use pathfinding::prelude::{kuhn_munkres, Matrix};

use crate::error::{domain, Result};
use crate::harmonics::{wrap_angle, wrap_signed, RotationAngle};
use crate::kmeans::{kmeans, KMeansConfig};

/// Largest class count for which label permutations are enumerated.
const MAX_ENUMERATED_CLASSES: usize = 8;

/// Labels by k-means over the columns of `C` with `M` centroids.
/// All-equal columns yield label 0 everywhere.
pub fn cluster_from_c(c: &DMatrix<f64>, num_classes: usize, seed: u64) -> Result<Vec<usize>> {
    if c.nrows() != c.ncols() {
        return domain("classification block must be square");
    }
    if num_classes == 0 {
        return domain("need at least one cluster");
    }
    let points: Vec<Vec<f64>> = c.column_iter().map(|col| col.iter().copied().collect()).collect();
    let config = KMeansConfig {
        seed,
        ..KMeansConfig::default()
    };
    Ok(kmeans(&points, num_classes, &config).labels)
}

/// Rotations from the principal eigenvector of each cluster's `R_1`
/// sub-block. `R_1(i,j) ≈ exp(i(g_i - g_j))` makes `v_i ∝ exp(i g_i)`, so the
/// shift is `arg(v_i)`, offset so that the first member of every cluster has
/// shift 0. Singletons get shift 0.
pub fn align_from_r(r1: &DMatrix<Complex64>, labels: &[usize]) -> Result<Vec<RotationAngle>> {
    let n = r1.nrows();
    if r1.ncols() != n || labels.len() != n {
        return domain(format!("R_1 is {}x{} but there are {} labels", n, r1.ncols(), labels.len()));
    }
    let mut shifts = vec![RotationAngle::new(0.0); n];
    let groups = labels.iter().enumerate().into_group_map_by(|&(_, &l)| l);
    for members in groups.values() {
        let idx: Vec<usize> = members.iter().map(|&(i, _)| i).collect();
        if idx.len() < 2 {
            continue;
        }
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |a, b| {
            // Hermitian part, guarding against solver asymmetry.
            (r1[(idx[a], idx[b])] + r1[(idx[b], idx[a])].conj()) * 0.5
        });
        let eig = sub.symmetric_eigen();
        let top = eig.eigenvalues.imax();
        let v = eig.eigenvectors.column(top);
        let reference = v[0].arg();
        for (a, &i) in idx.iter().enumerate() {
            shifts[i] = RotationAngle::new(if a == 0 { 0.0 } else { v[a].arg() - reference });
        }
    }
    Ok(shifts)
}

fn check_labels(labels: &[usize], truth: &[usize], num_classes: usize) -> Result<()> {
    if labels.len() != truth.len() {
        return domain(format!("{} labels against {} true labels", labels.len(), truth.len()));
    }
    if num_classes == 0 {
        return domain("need at least one class");
    }
    if let Some(&l) = labels.iter().chain(truth).find(|&&l| l >= num_classes) {
        return domain(format!("label {l} out of range for M = {num_classes}"));
    }
    Ok(())
}

/// The relabeling `π` (indexed by estimated label) that maximizes the number
/// of `i` with `π(labels_i) = truth_i`, and that number.
pub fn best_label_map(labels: &[usize], truth: &[usize], num_classes: usize) -> Result<(Vec<usize>, usize)> {
    check_labels(labels, truth, num_classes)?;
    let m = num_classes;
    let mut confusion = vec![vec![0i64; m]; m];
    for (&l, &t) in labels.iter().zip(truth) {
        confusion[l][t] += 1;
    }
    if m <= MAX_ENUMERATED_CLASSES {
        let mut best: Option<(Vec<usize>, i64)> = None;
        for perm in (0..m).permutations(m) {
            let hits: i64 = perm.iter().enumerate().map(|(l, &t)| confusion[l][t]).sum();
            if best.as_ref().map_or(true, |(_, b)| hits > *b) {
                best = Some((perm, hits));
            }
        }
        let (perm, hits) = best.expect("at least one permutation");
        return Ok((perm, hits as usize));
    }
    let weights = Matrix::from_rows(confusion).expect("square confusion matrix");
    let (hits, perm) = kuhn_munkres(&weights);
    Ok((perm, hits as usize))
}

/// `min_π (1/n) |{i : π(labels_i) != truth_i}|` over permutations of class names.
pub fn classification_error(labels: &[usize], truth: &[usize], num_classes: usize) -> Result<f64> {
    let (_, hits) = best_label_map(labels, truth, num_classes)?;
    if labels.is_empty() {
        return Ok(0.0);
    }
    Ok((labels.len() - hits) as f64 / labels.len() as f64)
}

/// Per true class, the RMS angular deviation of the correctly classified
/// members after removing their circular-mean offset. A class with no
/// correctly classified member is `None`.
pub fn alignment_error(
    shifts: &[RotationAngle],
    true_shifts: &[RotationAngle],
    labels: &[usize],
    truth: &[usize],
    num_classes: usize,
) -> Result<Vec<Option<f64>>> {
    if shifts.len() != labels.len() || true_shifts.len() != truth.len() {
        return domain("shift and label lengths differ");
    }
    let (perm, _) = best_label_map(labels, truth, num_classes)?;
    let mut diffs = vec![Vec::new(); num_classes];
    for i in 0..labels.len() {
        if perm[labels[i]] == truth[i] {
            diffs[truth[i]].push(shifts[i].radians() - true_shifts[i].radians());
        }
    }
    Ok(diffs
        .into_iter()
        .map(|d| {
            if d.is_empty() {
                return None;
            }
            let offset = d.iter().map(|&x| Complex64::from_polar(1.0, x)).sum::<Complex64>().arg();
            let ms = d.iter().map(|&x| wrap_signed(x - offset).powi(2)).sum::<f64>() / d.len() as f64;
            Some(ms.sqrt())
        })
        .collect())
}

/// Outcome of one solve-and-round run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub labels: Vec<usize>,
    pub shifts: Vec<RotationAngle>,
    pub classification_error: f64,
    /// Indexed by true class; `None` when no member was classified correctly.
    pub alignment_rms: Vec<Option<f64>>,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Columns of [`SolveReport::csv_row`]. `alignment_rms` holds the per-class
/// values separated by `;`, with `NA` for absent classes.
pub const REPORT_HEADER: &str = "n,objective,converged,iterations,classification_error,alignment_rms";

/// Columns of [`SolveReport::format_assignments`].
pub const ASSIGNMENT_HEADER: &str = "index,label,shift";

impl SolveReport {
    pub fn csv_row(&self) -> String {
        let rms = self
            .alignment_rms
            .iter()
            .map(|r| r.map_or_else(|| "NA".to_string(), |x| format!("{x:e}")))
            .join(";");
        format!(
            "{},{},{},{},{},{}",
            self.labels.len(),
            self.objective,
            self.converged,
            self.iterations,
            self.classification_error,
            rms
        )
    }

    pub fn format_csv(&self) -> String {
        format!("{REPORT_HEADER}\n{}\n", self.csv_row())
    }

    /// One `index,label,shift` row per signal, shifts in `[0, 2π)`.
    pub fn format_assignments(&self) -> String {
        let mut out = format!("{ASSIGNMENT_HEADER}\n");
        for (i, (l, s)) in self.labels.iter().zip(&self.shifts).enumerate() {
            let _ = writeln!(out, "{i},{l},{}", wrap_angle(s.radians()));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn physical_c(labels: &[usize], m: usize) -> DMatrix<f64> {
        let lo = -1.0 / (m as f64 - 1.0);
        DMatrix::from_fn(labels.len(), labels.len(), |i, j| if labels[i] == labels[j] { 1.0 } else { lo })
    }

    fn physical_r1(labels: &[usize], g: &[f64]) -> DMatrix<Complex64> {
        DMatrix::from_fn(labels.len(), labels.len(), |i, j| {
            if labels[i] == labels[j] {
                Complex64::from_polar(1.0, g[i] - g[j])
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn certificate_clusters_exactly() {
        let truth = [0, 1, 0, 1, 1, 0];
        let labels = cluster_from_c(&physical_c(&truth, 2), 2, 3).unwrap();
        assert_eq!(classification_error(&labels, &truth, 2).unwrap(), 0.0);
    }

    #[test]
    fn all_ones_c_is_degenerate() {
        let c = DMatrix::from_element(5, 5, 1.0);
        assert_eq!(cluster_from_c(&c, 2, 0).unwrap(), vec![0; 5]);
        let err = classification_error(&[0; 5], &[0, 0, 1, 1, 1], 2).unwrap();
        assert!((err - 0.4).abs() < 1e-15);
    }

    #[test]
    fn rank_one_blocks_give_exact_phases() {
        let labels = [0, 0, 1, 0, 1, 2];
        let g = [0.3, 2.0, 5.5, 4.1, 1.2, 0.7];
        let shifts = align_from_r(&physical_r1(&labels, &g), &labels).unwrap();
        for i in 0..labels.len() {
            let first = labels.iter().position(|&l| l == labels[i]).unwrap();
            let want = wrap_angle(g[i] - g[first]);
            assert!(crate::harmonics::angular_distance(shifts[i].radians(), want) < 1e-8, "{i}");
        }
        assert_eq!(shifts[5].radians(), 0.0);
    }

    #[test]
    fn classification_error_counts() {
        let truth: Vec<usize> = (0..60).map(|i| i / 15).collect();
        assert_eq!(classification_error(&truth, &truth, 4).unwrap(), 0.0);
        let permuted: Vec<usize> = truth.iter().map(|&t| [2, 0, 3, 1][t]).collect();
        assert_eq!(classification_error(&permuted, &truth, 4).unwrap(), 0.0);
        let mut flipped = truth.clone();
        flipped[7] = 3;
        assert_eq!(classification_error(&flipped, &truth, 4).unwrap(), 1.0 / 60.0);
        assert!(classification_error(&[0, 4], &[0, 1], 4).is_err());
        assert!(classification_error(&[0], &[0, 1], 4).is_err());
    }

    #[test]
    fn assignment_path_matches_enumeration() {
        // Ten classes exceed the enumeration limit; the cyclic relabeling is recovered.
        let truth: Vec<usize> = (0..40).map(|i| i % 10).collect();
        let mut labels: Vec<usize> = truth.iter().map(|&t| (t + 3) % 10).collect();
        labels[0] = 9;
        labels[1] = 9;
        assert_eq!(classification_error(&labels, &truth, 10).unwrap(), 2.0 / 40.0);
    }

    #[test]
    fn alignment_error_examples() {
        let truth = [0, 0, 0, 0, 1, 1, 1];
        let g: Vec<RotationAngle> = [0.1, 1.0, 2.0, 6.0, 3.0, 0.5, 4.4].map(RotationAngle::new).to_vec();
        let err = alignment_error(&g, &g, &truth, &truth, 3).unwrap();
        assert_eq!(err[0], Some(0.0));
        assert_eq!(err[1], Some(0.0));
        assert_eq!(err[2], None);

        let offset: Vec<RotationAngle> = g
            .iter()
            .zip(&truth)
            .map(|(s, &t)| RotationAngle::new(s.radians() + [1.3, -2.9][t]))
            .collect();
        let err = alignment_error(&offset, &g, &truth, &truth, 2).unwrap();
        assert!(err.iter().all(|e| e.unwrap() < 1e-12));

        // One member of a class of c perturbed by δ: RMS = δ sqrt(1/c - 1/c²).
        let delta = 1e-2;
        let mut perturbed = g.clone();
        perturbed[1] = RotationAngle::new(g[1].radians() + delta);
        let err = alignment_error(&perturbed, &g, &truth, &truth, 2).unwrap();
        let c: f64 = 4.0;
        let oracle = delta * (1.0 / c - 1.0 / (c * c)).sqrt();
        assert!((err[0].unwrap() - oracle).abs() < 1e-7, "{:?} vs {oracle}", err[0]);
    }

    #[test]
    fn misclassified_signals_are_excluded() {
        let truth = [0, 0, 0, 1, 1, 1];
        let labels = [1, 1, 0, 0, 0, 0];
        let g: Vec<RotationAngle> = (0..6).map(|i| RotationAngle::new(i as f64)).collect();
        let mut est = g.clone();
        est[2] = RotationAngle::new(PI);
        let err = alignment_error(&est, &g, &labels, &truth, 2).unwrap();
        assert_eq!(err, vec![Some(0.0), Some(0.0)]);
    }

    #[test]
    fn report_csv() {
        let r = SolveReport {
            labels: vec![0, 1],
            shifts: vec![RotationAngle::new(0.0), RotationAngle::new(1.0)],
            classification_error: 0.5,
            alignment_rms: vec![Some(0.0), None],
            objective: 1.5,
            converged: true,
            iterations: 12,
        };
        assert_eq!(r.format_csv(), format!("{REPORT_HEADER}\n2,1.5,true,12,0.5,0e0;NA\n"));
        assert_eq!(r.format_assignments(), "index,label,shift\n0,0,0\n1,1,1\n");
    }

    proptest! {
        #[test]
        fn permutation_invariance(
            labels in proptest::collection::vec(0usize..4, 1..40),
            seed in any::<u64>(),
        ) {
            let truth: Vec<usize> = labels.iter().enumerate().map(|(i, &l)| (l + i) % 4).collect();
            let mut sigma: Vec<usize> = (0..4).collect();
            let mut s = seed;
            for i in (1..4).rev() {
                s = crate::seed::mix(s);
                sigma.swap(i, (s % (i as u64 + 1)) as usize);
            }
            let relabeled: Vec<usize> = labels.iter().map(|&l| sigma[l]).collect();
            prop_assert_eq!(
                classification_error(&labels, &truth, 4).unwrap(),
                classification_error(&relabeled, &truth, 4).unwrap()
            );
        }

        #[test]
        fn certificate_round_trip(m in 2usize..=4, copies in 1usize..=10, seed in any::<u64>()) {
            let truth: Vec<usize> = (0..m * copies).map(|i| i % m).collect();
            let labels = cluster_from_c(&physical_c(&truth, m), m, seed).unwrap();
            prop_assert_eq!(classification_error(&labels, &truth, m).unwrap(), 0.0);
        }
    }
}
