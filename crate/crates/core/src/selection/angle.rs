use crate::error::{Error, Result};
use crate::spectral::FilterMatrix;

/// Angle between two vectors in `[0, π]`.
///
/// Evaluated as `2·atan2(‖û − v̂‖, ‖û + v̂‖)`, which equals the arccosine of
/// the normalized dot product but stays accurate for nearly parallel and
/// nearly opposite vectors.
pub fn spectral_angle(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            expected: u.len(),
            actual: v.len(),
        });
    }
    let nu = norm(u);
    let nv = norm(v);
    if nu == 0.0 || nv == 0.0 || !nu.is_finite() || !nv.is_finite() {
        return Err(Error::ZeroVector);
    }
    let (mut diff, mut sum) = (0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        let (a, b) = (a / nu, b / nv);
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    Ok((2.0 * diff.sqrt().atan2(sum.sqrt())).clamp(0.0, std::f64::consts::PI))
}

fn norm(x: &[f64]) -> f64 {
    // Scaled by the largest magnitude before squaring.
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * x.iter().map(|v| (v / scale) * (v / scale)).sum::<f64>().sqrt()
}

/// Symmetric matrix of pairwise spectral angles between filter rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGraph {
    k: usize,
    angles: Vec<f64>,
}

impl AngleGraph {
    /// Builds a graph from a full K×K matrix; only the upper triangle is
    /// read, the diagonal is ignored.
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        let mut angles = vec![0.0; k * k];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::LengthMismatch {
                    expected: k,
                    actual: row.len(),
                });
            }
            for j in i + 1..k {
                let a = row[j];
                if !(0.0..=std::f64::consts::PI).contains(&a) {
                    return Err(Error::InvalidConfig(format!("angle {a} at ({i}, {j}) outside [0, π]")));
                }
                angles[i * k + j] = a;
                angles[j * k + i] = a;
            }
        }
        Ok(Self { k, angles })
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    #[inline]
    pub fn angle(&self, i: usize, j: usize) -> f64 {
        self.angles[i * self.k + j]
    }

    /// Sorted unique off-diagonal angle values.
    pub fn weights(&self) -> Vec<f64> {
        let mut w: Vec<f64> = (0..self.k)
            .flat_map(|i| (i + 1..self.k).map(move |j| (i, j)))
            .map(|(i, j)| self.angle(i, j))
            .collect();
        w.sort_by(f64::total_cmp);
        w.dedup();
        w
    }

    /// Minimum angle over all pairs of `ids`; `None` for fewer than two ids.
    pub fn min_pairwise(&self, ids: &[usize]) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (a, &i) in ids.iter().enumerate() {
            for &j in &ids[a + 1..] {
                let v = self.angle(i, j);
                best = Some(best.map_or(v, |b| b.min(v)));
            }
        }
        best
    }

    /// Restriction of the graph to `ids`, renumbered in the given order.
    pub fn subgraph(&self, ids: &[usize]) -> Self {
        let k = ids.len();
        let mut angles = vec![0.0; k * k];
        for (a, &i) in ids.iter().enumerate() {
            for (b, &j) in ids.iter().enumerate() {
                if a != b {
                    angles[a * k + b] = self.angle(i, j);
                }
            }
        }
        Self { k, angles }
    }
}

pub fn build_adjacency(matrix: &FilterMatrix) -> Result<AngleGraph> {
    let k = matrix.n_filters();
    let rows: Vec<Vec<f64>> = matrix.entries.rows().into_iter().map(|r| r.to_vec()).collect();
    let mut angles = vec![0.0; k * k];
    for i in 0..k {
        for j in i + 1..k {
            let a = spectral_angle(&rows[i], &rows[j])?;
            angles[i * k + j] = a;
            angles[j * k + i] = a;
        }
    }
    Ok(AngleGraph { k, angles })
}
