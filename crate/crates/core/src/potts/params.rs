use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::IsingError;
use crate::ising::{pair_index, pairs, IsingParams};

/// Potts parameters with category 0 of every market as reference.
///
/// Only the free coordinates are stored: `θ_i[k]` for `k ≥ 1`, then every
/// `W_ij[a, b]` with `a, b ≥ 1` for `i < j`, pair blocks in the same order
/// as the Ising couplings and row-major inside a block. With every
/// `K_i = 2` the layout coincides with [`IsingParams::to_flat`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPotts")]
pub struct PottsParams {
    pub k: Vec<usize>,
    pub values: Vec<f64>,
    #[serde(skip)]
    layout: Layout,
}

#[derive(Deserialize)]
struct RawPotts {
    k: Vec<usize>,
    values: Vec<f64>,
}

impl TryFrom<RawPotts> for PottsParams {
    type Error = IsingError;
    fn try_from(raw: RawPotts) -> Result<Self, IsingError> {
        Self::from_values(&raw.k, raw.values)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Layout {
    field_offset: Vec<usize>,
    pair_offset: Vec<usize>,
    dim: usize,
}

impl Layout {
    fn new(k: &[usize]) -> Self {
        let m = k.len();
        let mut field_offset = Vec::with_capacity(m);
        let mut at = 0;
        for &ki in k {
            field_offset.push(at);
            at += ki - 1;
        }
        let mut pair_offset = Vec::with_capacity(m * m.saturating_sub(1) / 2);
        for (i, j) in pairs(m) {
            pair_offset.push(at);
            at += (k[i] - 1) * (k[j] - 1);
        }
        Self {
            field_offset,
            pair_offset,
            dim: at,
        }
    }
}

/// Free-parameter count `Σ (K_i - 1) + Σ_{i<j} (K_i - 1)(K_j - 1)`.
pub fn potts_dim(k: &[usize]) -> usize {
    Layout::new(k).dim
}

impl PottsParams {
    pub fn zeros(k: &[usize]) -> Result<Self, IsingError> {
        if k.is_empty() || k.iter().any(|&ki| ki < 2) {
            return Err(IsingError::InvalidParams(format!("category counts must be >= 2, got {k:?}")));
        }
        let layout = Layout::new(k);
        Ok(Self {
            k: k.to_vec(),
            values: vec![0.0; layout.dim],
            layout,
        })
    }

    pub fn from_values(k: &[usize], values: Vec<f64>) -> Result<Self, IsingError> {
        let mut p = Self::zeros(k)?;
        if values.len() != p.dim() {
            return Err(IsingError::InvalidParams(format!(
                "expected {} free parameters, got {}",
                p.dim(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(IsingError::InvalidParams("non-finite parameter".into()));
        }
        p.values = values;
        Ok(p)
    }

    /// Binary embedding: `θ_i[1] = θ_i`, `W_ij[1, 1] = W_ij`.
    pub fn from_ising(params: &IsingParams) -> Self {
        Self::from_values(&vec![2; params.m], params.to_flat()).expect("binary layout matches")
    }

    pub fn to_ising(&self) -> Option<IsingParams> {
        if self.k.iter().all(|&k| k == 2) {
            IsingParams::from_flat(self.m(), &self.values).ok()
        } else {
            None
        }
    }

    pub fn m(&self) -> usize {
        self.k.len()
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn n_states(&self) -> u64 {
        self.k.iter().map(|&k| k as u64).product()
    }

    #[inline]
    pub fn field_index(&self, i: usize, c: usize) -> Option<usize> {
        (c > 0).then(|| self.layout.field_offset[i] + c - 1)
    }

    /// Coordinate of `W_ij[a, b]` for `i < j`.
    #[inline]
    pub fn pair_index(&self, i: usize, j: usize, a: usize, b: usize) -> Option<usize> {
        debug_assert!(i < j);
        if a == 0 || b == 0 {
            return None;
        }
        let block = self.layout.pair_offset[pair_index(self.m(), i, j)];
        Some(block + (a - 1) * (self.k[j] - 1) + (b - 1))
    }

    pub fn theta(&self, i: usize, c: usize) -> f64 {
        self.field_index(i, c).map_or(0.0, |k| self.values[k])
    }

    /// `W_ij[a, b]`, accepting either index order.
    pub fn w(&self, i: usize, j: usize, a: usize, b: usize) -> f64 {
        let idx = if i < j {
            self.pair_index(i, j, a, b)
        } else {
            self.pair_index(j, i, b, a)
        };
        idx.map_or(0.0, |k| self.values[k])
    }

    /// `θ_i` including the pinned zero.
    pub fn theta_vec(&self, i: usize) -> Vec<f64> {
        (0..self.k[i]).map(|c| self.theta(i, c)).collect()
    }

    /// `W_ij` for `i < j` as a `K_i × K_j` matrix including pinned zeros.
    pub fn w_matrix(&self, i: usize, j: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.k[i], self.k[j], |a, b| self.w(i, j, a, b))
    }

    /// True when the pair carries any nonzero interaction.
    pub fn coupled(&self, i: usize, j: usize) -> bool {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let start = self.layout.pair_offset[pair_index(self.m(), i, j)];
        let len = (self.k[i] - 1) * (self.k[j] - 1);
        self.values[start..start + len].iter().any(|&v| v != 0.0)
    }

    pub fn energy(&self, x: &[usize]) -> f64 {
        let m = self.m();
        let mut e: f64 = (0..m).map(|i| self.theta(i, x[i])).sum();
        for (i, j) in pairs(m) {
            e += self.w(i, j, x[i], x[j]);
        }
        e
    }

    /// Indices of the sufficient statistics equal to 1 at outcome `x`.
    pub fn active_stats(&self, x: &[usize], out: &mut Vec<usize>) {
        out.clear();
        let m = self.m();
        for i in 0..m {
            if let Some(k) = self.field_index(i, x[i]) {
                out.push(k);
            }
        }
        for (i, j) in pairs(m) {
            if let Some(k) = self.pair_index(i, j, x[i], x[j]) {
                out.push(k);
            }
        }
    }

    /// True when coordinate `idx` is a field rather than a coupling.
    pub fn is_field(&self, idx: usize) -> bool {
        Self::field_coord(&self.layout, idx)
    }

    fn field_coord(layout: &Layout, idx: usize) -> bool {
        layout.pair_offset.first().is_none_or(|&p| idx < p)
    }

    pub fn step(&mut self, grad: &[f64], eta_theta: f64, eta_w: f64) {
        for (idx, (v, g)) in self.values.iter_mut().zip(grad).enumerate() {
            let eta = if Self::field_coord(&self.layout, idx) {
                eta_theta
            } else {
                eta_w
            };
            *v -= eta * g;
        }
    }

    pub fn dist_sq(&self, other: &PottsParams) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).powi(2)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_count_is_pinned() {
        let k = [2, 3, 4, 4, 5];
        let p = PottsParams::zeros(&k).unwrap();
        let fields: usize = k.iter().map(|k| k - 1).sum();
        let mut couplings = 0;
        for (i, j) in pairs(5) {
            couplings += (k[i] - 1) * (k[j] - 1);
        }
        assert_eq!(p.dim(), fields + couplings);
        assert_eq!(p.dim(), 13 + 65);
        assert_eq!(p.n_states(), 480);
    }

    #[test]
    fn reference_entries_read_as_zero() {
        let k = [3, 2, 4];
        let mut p = PottsParams::zeros(&k).unwrap();
        p.values.iter_mut().for_each(|v| *v = 1.0);
        for i in 0..3 {
            assert_eq!(p.theta(i, 0), 0.0);
            for j in 0..3 {
                if i != j {
                    for c in 0..k[j] {
                        assert_eq!(p.w(i, j, 0, c), 0.0);
                        assert_eq!(p.w(j, i, c, 0), 0.0);
                    }
                }
            }
        }
        let w = p.w_matrix(0, 2);
        assert_eq!(w.shape(), (3, 4));
        assert_eq!(w[(0, 3)], 0.0);
        assert_eq!(w[(2, 3)], 1.0);
    }

    #[test]
    fn indices_are_a_bijection() {
        let k = [2, 3, 4];
        let p = PottsParams::zeros(&k).unwrap();
        let mut seen = vec![false; p.dim()];
        for i in 0..3 {
            for c in 1..k[i] {
                seen[p.field_index(i, c).unwrap()] = true;
            }
        }
        for (i, j) in pairs(3) {
            for a in 1..k[i] {
                for b in 1..k[j] {
                    let idx = p.pair_index(i, j, a, b).unwrap();
                    assert!(!seen[idx]);
                    seen[idx] = true;
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn binary_embedding_round_trips() {
        let ising = IsingParams::new(vec![0.3, -0.2, 0.1], vec![0.5, -0.4, 0.7]).unwrap();
        let p = PottsParams::from_ising(&ising);
        assert_eq!(p.theta(1, 1), -0.2);
        assert_eq!(p.w(0, 2, 1, 1), -0.4);
        assert_eq!(p.to_ising().unwrap(), ising);
        for x in 0..8u32 {
            let xs: Vec<usize> = (0..3).map(|i| ((x >> i) & 1) as usize).collect();
            assert!((p.energy(&xs) - ising.energy(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn json_keeps_only_free_coordinates() {
        let p = PottsParams::from_values(&[2, 3], vec![0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"k":[2,3],"values":[0.1,0.2,0.3,0.4,0.5]}"#);
        let back: PottsParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.w(0, 1, 1, 2), 0.5);
        assert!(serde_json::from_str::<PottsParams>(r#"{"k":[2,3],"values":[0.1]}"#).is_err());
    }

    #[test]
    fn rejects_single_category() {
        assert!(PottsParams::zeros(&[2, 1]).is_err());
        assert!(PottsParams::from_values(&[2, 2], vec![0.0; 2]).is_err());
    }
}
