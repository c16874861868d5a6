//! Spectral distances and the 2-D perceptual spaces built from them.

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::auditory::CochleaScaledSpectrum;
use crate::error::{Error, Result};

/// Euclidean distance over all channels of two normalized spectra.
pub fn euclidean_distance(p: &CochleaScaledSpectrum, q: &CochleaScaledSpectrum) -> Result<f64> {
    if !p.same_grid(q) {
        return Err(Error::GridMismatch);
    }
    if !(p.normalized && q.normalized) {
        return Err(Error::Unnormalized);
    }
    Ok(p.levels_db
        .iter()
        .zip(&q.levels_db)
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt())
}

/// Symmetric matrix of pairwise distances with item labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    /// row-major n x n
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Checks symmetry (1e-9), zero diagonal and non-negativity.
    pub fn new(labels: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if values.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "{n} labels need {} matrix entries, got {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::InvalidArgument(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "distance ({i}, {j}) = {v} is not a finite non-negative number"
                    )));
                }
                if (v - values[j * n + i]).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { labels, values })
    }

    /// Distance matrix of planar points, mostly useful for tests and oracles.
    pub fn from_points(labels: Vec<String>, points: &[[f64; 2]]) -> Result<Self> {
        let n = points.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let dx = points[i][0] - points[j][0];
                    let dy = points[i][1] - points[j][1];
                    values[i * n + j] = (dx * dx + dy * dy).sqrt();
                }
            }
        }
        Self::new(labels, values)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.len().max(1))
    }

    /// Entry-wise mean of matrices with identical labels.
    pub fn average(matrices: &[DistanceMatrix]) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::InvalidArgument("cannot average zero matrices".into()))?;
        if let Some(m) = matrices.iter().find(|m| m.labels != first.labels) {
            return Err(Error::LabelMismatch(format!(
                "{:?} vs {:?}",
                first.labels, m.labels
            )));
        }
        let k = matrices.len() as f64;
        let values = (0..first.values.len())
            .map(|i| matrices.iter().map(|m| m.values[i]).sum::<f64>() / k)
            .collect();
        Self::new(first.labels.clone(), values)
    }
}

/// All pairwise [`euclidean_distance`]s of labelled spectra.
pub fn pairwise_distances(
    labels: Vec<String>,
    spectra: &[&CochleaScaledSpectrum],
) -> Result<DistanceMatrix> {
    if spectra.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: spectra.len(),
        });
    }
    if labels.len() != spectra.len() {
        return Err(Error::LabelMismatch(format!(
            "{} labels for {} spectra",
            labels.len(),
            spectra.len()
        )));
    }
    let n = spectra.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = euclidean_distance(spectra[i], spectra[j])?;
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    DistanceMatrix::new(labels, values)
}

/// Point coordinates plus the spectrum of the centered Gram matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdsEmbedding {
    pub labels: Vec<String>,
    /// one row per item, one column per dimension
    pub coords: Vec<Vec<f64>>,
    /// all eigenvalues of the double-centered matrix, descending
    pub eigenvalues: Vec<f64>,
}

impl MdsEmbedding {
    pub fn dims(&self) -> usize {
        self.coords.first().map_or(0, Vec::len)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn point(&self, label: &str) -> Option<&[f64]> {
        self.index_of(label).map(|i| self.coords[i].as_slice())
    }

    /// Euclidean distance between items `i` and `j` in the embedding.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.coords[i]
            .iter()
            .zip(&self.coords[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Column range `max - min` of dimension `dim`.
    pub fn range(&self, dim: usize) -> f64 {
        let (lo, hi) = self
            .coords
            .iter()
            .map(|c| c[dim])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        hi - lo
    }

    /// Mirrors dimension `dim`.
    pub fn flip(&mut self, dim: usize) {
        for c in &mut self.coords {
            c[dim] = -c[dim];
        }
    }

    /// Exchanges two coordinate columns; eigenvalues keep their order.
    pub fn swap_dims(&mut self, a: usize, b: usize) {
        for c in &mut self.coords {
            c.swap(a, b);
        }
    }

    fn coord_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.labels.len(), self.dims(), |i, j| self.coords[i][j])
    }
}

/// Relative residual allowed for each eigenpair, `|Bv - lv| / |B|`.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-10;

/// Torgerson classical scaling.
///
/// `B = -1/2 J D^2 J` with `J = I - 11'/n` is eigendecomposed; coordinates
/// are the leading `dims` eigenvectors scaled by the square roots of their
/// eigenvalues (negative ones clamped to zero). Each eigenvector's sign is
/// fixed so its largest-magnitude component is positive.
pub fn classical_mds(d: &DistanceMatrix, dims: usize) -> Result<MdsEmbedding> {
    let n = d.len();
    if dims == 0 {
        return Err(Error::InvalidArgument(
            "MDS needs at least one dimension".into(),
        ));
    }
    if n < dims + 1 {
        return Err(Error::TooFewPoints {
            needed: dims + 1,
            got: n,
        });
    }
    let sq = DMatrix::from_fn(n, n, |i, j| d.get(i, j) * d.get(i, j));
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).mean()).collect();
    let grand = sq.mean();
    let b = DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand)
    });

    let norm_b = b.norm();
    if norm_b == 0.0 {
        return Ok(MdsEmbedding {
            labels: d.labels().to_vec(),
            coords: vec![vec![0.0; dims]; n],
            eigenvalues: vec![0.0; n],
        });
    }

    let eig = SymmetricEigen::new(b.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();

    for &k in &order {
        let v = eig.eigenvectors.column(k);
        let residual = (&b * v - v * eig.eigenvalues[k]).norm() / norm_b;
        if residual > EIGEN_RESIDUAL_TOL {
            return Err(Error::Numerical(format!(
                "eigenpair residual {residual:e} exceeds {EIGEN_RESIDUAL_TOL:e}"
            )));
        }
    }
    let lambda_max = eigenvalues[0].max(0.0);
    if let Some(&most_negative) = eigenvalues.last() {
        if most_negative < 0.0 && -most_negative > 1e-6 * lambda_max {
            warn!("distance matrix is not Euclidean: eigenvalue {most_negative:e} clamped to zero");
        }
    }

    let mut coords = vec![vec![0.0; dims]; n];
    for (dim, &k) in order.iter().take(dims).enumerate() {
        let scale = eig.eigenvalues[k].max(0.0).sqrt();
        let v = eig.eigenvectors.column(k);
        let pivot = (0..n)
            .max_by(|&a, &c| v[a].abs().total_cmp(&v[c].abs()))
            .unwrap();
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            coords[i][dim] = sign * scale * v[i];
        }
    }
    Ok(MdsEmbedding {
        labels: d.labels().to_vec(),
        coords,
        eigenvalues,
    })
}

/// Rotates/reflects `source` onto `target` (orthogonal Procrustes, no
/// scaling or translation).
pub fn procrustes_align(target: &MdsEmbedding, source: &MdsEmbedding) -> Result<MdsEmbedding> {
    if target.labels != source.labels {
        return Err(Error::LabelMismatch(format!(
            "{:?} vs {:?}",
            target.labels, source.labels
        )));
    }
    if target.dims() != source.dims() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: {} vs {}",
            target.dims(),
            source.dims()
        )));
    }
    let s = source.coord_matrix();
    let t = target.coord_matrix();
    let m = s.transpose() * &t;
    let rotation = match planar_polar_factor(&m) {
        Some(q) => q,
        None => {
            let svd = m.svd(true, true);
            match (svd.u, svd.v_t) {
                (Some(u), Some(v_t)) => u * v_t,
                _ => {
                    return Err(Error::Numerical(
                        "SVD failed in Procrustes alignment".into(),
                    ))
                }
            }
        }
    };
    let aligned = s * rotation;
    Ok(MdsEmbedding {
        labels: source.labels.clone(),
        coords: (0..aligned.nrows())
            .map(|i| aligned.row(i).iter().copied().collect())
            .collect(),
        eigenvalues: source.eigenvalues.clone(),
    })
}

/// Closed-form orthogonal polar factor of a 2×2 matrix, reflections allowed.
/// `None` for other sizes or when the factor is not unique.
fn planar_polar_factor(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if m.shape() != (2, 2) {
        return None;
    }
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let s = if a * d - b * c < 0.0 { -1.0 } else { 1.0 };
    let n = DMatrix::from_row_slice(2, 2, &[a + s * d, b - s * c, c - s * b, d + s * a]);
    let det = (n[(0, 0)] * n[(1, 1)] - n[(0, 1)] * n[(1, 0)]).abs();
    let scale = m.norm_squared();
    if !(det > 1e-20 * scale) {
        return None;
    }
    Some(n / det.sqrt())
}

/// Sum of squared coordinate differences between two embeddings.
pub fn alignment_residual(a: &MdsEmbedding, b: &MdsEmbedding) -> f64 {
    a.coords
        .iter()
        .zip(&b.coords)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)))
        .sum()
}

/// Height extent over frontness extent: range of dimension 2 divided by the
/// range of dimension 1.
pub fn axis_ratio(e: &MdsEmbedding) -> Result<f64> {
    if e.labels.len() < 2 || e.dims() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: e.labels.len(),
        });
    }
    let frontness = e.range(0);
    if !(frontness > 1e-12) {
        return Err(Error::Degenerate("zero range along dimension 1".into()));
    }
    Ok(e.range(1) / frontness)
}

/// Orients a reference embedding: dimension 1 is the axis that separates
/// `front` from `back` most, mirrored so `front` sits at the low end, and
/// dimension 2 is mirrored so `low` sits at the high end.
pub fn orient_reference(
    e: &MdsEmbedding,
    front: &str,
    back: &str,
    low: &str,
) -> Result<MdsEmbedding> {
    let missing = |l: &str| Error::LabelMismatch(format!("label '{l}' not in embedding"));
    let (fi, bi, li) = (
        e.index_of(front).ok_or_else(|| missing(front))?,
        e.index_of(back).ok_or_else(|| missing(back))?,
        e.index_of(low).ok_or_else(|| missing(low))?,
    );
    if e.dims() < 2 {
        return Err(Error::InvalidArgument(
            "orientation needs two dimensions".into(),
        ));
    }
    let mut out = e.clone();
    let sep = |dim: usize| (e.coords[fi][dim] - e.coords[bi][dim]).abs();
    if sep(1) > sep(0) {
        out.swap_dims(0, 1);
    }
    let mid = |coords: &[Vec<f64>], dim: usize| {
        let (lo, hi) = coords
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                (lo.min(c[dim]), hi.max(c[dim]))
            });
        0.5 * (lo + hi)
    };
    if out.coords[fi][0] > mid(&out.coords, 0) {
        out.flip(0);
    }
    if out.coords[li][1] < mid(&out.coords, 1) {
        out.flip(1);
    }
    Ok(out)
}

/// Indices of the convex-hull vertices of planar points, counter-clockwise,
/// with collinear boundary points excluded (Andrew's monotone chain).
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        points[a][0]
            .total_cmp(&points[b][0])
            .then(points[a][1].total_cmp(&points[b][1]))
    });
    if idx.len() < 3 {
        return idx;
    }
    let cross = |o: usize, a: usize, b: usize| {
        (points[a][0] - points[o][0]) * (points[b][1] - points[o][1])
            - (points[a][1] - points[o][1]) * (points[b][0] - points[o][0])
    };
    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(idx.iter())
        } else {
            Box::new(idx.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Whether `label` lies on the convex hull of the first two dimensions,
/// either as a vertex or within `tol` of a hull edge.
pub fn on_convex_hull(e: &MdsEmbedding, label: &str, tol: f64) -> Result<bool> {
    let target = e
        .index_of(label)
        .ok_or_else(|| Error::LabelMismatch(format!("label '{label}' not in embedding")))?;
    let points: Vec<[f64; 2]> = e.coords.iter().map(|c| [c[0], c[1]]).collect();
    let hull = convex_hull(&points);
    if hull.contains(&target) {
        return Ok(true);
    }
    let p = points[target];
    for k in 0..hull.len() {
        let a = points[hull[k]];
        let b = points[hull[(k + 1) % hull.len()]];
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len2 = dx * dx + dy * dy;
        if len2 == 0.0 {
            continue;
        }
        let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0);
        let (cx, cy) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
        if (cx * cx + cy * cy).sqrt() <= tol {
            return Ok(true);
        }
    }
    Ok(false)
}
