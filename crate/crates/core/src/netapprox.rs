//! Linear-in-weight compensator τ_NN = Wᵀφ(q, q̇, s) with fixed Gaussian
//! radial features over the concatenated input x = [q; q̇; s] and an
//! online weight update Ẇ = γ s φ integrated at the control step, with
//! radial projection onto ‖W‖_F ≤ w_max.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

pub const INPUT_DIM: usize = 9;

/// Per-dimension bounds of the box the feature centers are placed in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputBounds {
    pub q: [f64; 2],
    pub qdot: [f64; 2],
    pub s: [f64; 2],
}

impl Default for InputBounds {
    fn default() -> Self {
        Self {
            q: [-4.0, 4.0],
            qdot: [-80.0, 80.0],
            s: [-100.0, 100.0],
        }
    }
}

impl InputBounds {
    fn lo_hi(&self, dim: usize) -> (f64, f64) {
        let b = match dim / 3 {
            0 => self.q,
            1 => self.qdot,
            _ => self.s,
        };
        (b[0], b[1])
    }

    fn diagonal(&self) -> f64 {
        let mut sum = 0.0;
        for d in 0..INPUT_DIM {
            let (lo, hi) = self.lo_hi(d);
            sum += (hi - lo) * (hi - lo);
        }
        sum.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetConfig {
    /// Total feature count when centers are auto-placed.
    #[serde(default = "default_n_centers")]
    pub n_centers: usize,
    /// Explicit centers (each a 9-vector); overrides auto placement.
    #[serde(default)]
    pub centers: Option<Vec<[f64; INPUT_DIM]>>,
    /// Per-center width σ; scalar applied to all auto centers when the
    /// explicit list is absent. `None` selects the default width rule.
    #[serde(default)]
    pub widths: Option<Vec<f64>>,
    /// Learning rate γ of the adaptation law.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Frobenius-norm bound for the weight projection.
    #[serde(default = "default_w_max")]
    pub w_max: f64,
    #[serde(default)]
    pub bounds: InputBounds,
    /// Governs center placement only.
    #[serde(default)]
    pub seed: u64,
}

fn default_n_centers() -> usize {
    64
}
fn default_gamma() -> f64 {
    0.0
}
fn default_w_max() -> f64 {
    100.0
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            n_centers: default_n_centers(),
            centers: None,
            widths: None,
            gamma: default_gamma(),
            w_max: default_w_max(),
            bounds: InputBounds::default(),
            seed: 0,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.gamma >= 0.0) {
            return Err("net.gamma: must be >= 0".into());
        }
        if !(self.w_max > 0.0) {
            return Err("net.w_max: must be > 0".into());
        }
        let n = self.centers.as_ref().map_or(self.n_centers, |c| c.len());
        if n == 0 {
            return Err("net.n_centers: need at least one center".into());
        }
        if let Some(w) = &self.widths {
            if w.len() != n {
                return Err("net.widths: length must match center count".into());
            }
            if w.iter().any(|&s| !(s > 0.0)) {
                return Err("net.widths: must be > 0".into());
            }
        }
        Ok(())
    }
}

/// Halton low-discrepancy point in [0,1)^9, bases = first nine primes.
fn halton_point(index: usize) -> [f64; INPUT_DIM] {
    const BASES: [usize; INPUT_DIM] = [2, 3, 5, 7, 11, 13, 17, 19, 23];
    let mut out = [0.0; INPUT_DIM];
    for (d, &base) in BASES.iter().enumerate() {
        let mut f = 1.0;
        let mut r = 0.0;
        let mut i = index;
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        out[d] = r;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetApproximator {
    pub config: NetConfig,
    centers: Vec<[f64; INPUT_DIM]>,
    widths: Vec<f64>,
    /// feature_count × 3 weight matrix.
    w: DMatrix<f64>,
}

impl NetApproximator {
    pub fn new(config: NetConfig) -> Self {
        let centers: Vec<[f64; INPUT_DIM]> = match &config.centers {
            Some(list) => list.clone(),
            None => {
                // seeded offset into the Halton sequence keeps placement
                // reproducible while letting the seed move the sample
                let offset = 1 + (config.seed as usize).wrapping_mul(config.n_centers);
                (0..config.n_centers)
                    .map(|j| {
                        let u = halton_point(offset + j);
                        let mut c = [0.0; INPUT_DIM];
                        for d in 0..INPUT_DIM {
                            let (lo, hi) = config.bounds.lo_hi(d);
                            c[d] = lo + (hi - lo) * u[d];
                        }
                        c
                    })
                    .collect()
            }
        };
        let n = centers.len();
        let widths = match &config.widths {
            Some(w) => w.clone(),
            None => {
                // half the bound-box diagonal shrunk by the per-dimension
                // center density
                let sigma =
                    0.5 * config.bounds.diagonal() / (n as f64).powf(1.0 / INPUT_DIM as f64);
                vec![sigma; n]
            }
        };
        let w = DMatrix::zeros(n, 3);
        Self {
            config,
            centers,
            widths,
            w,
        }
    }

    pub fn feature_count(&self) -> usize {
        self.centers.len()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn set_weights(&mut self, w: DMatrix<f64>) {
        assert_eq!(w.nrows(), self.feature_count());
        assert_eq!(w.ncols(), 3);
        self.w = w;
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.w.norm()
    }

    /// φ_j = exp(−‖x − c_j‖² / (2σ_j²)) over x = [q; q̇; s].
    pub fn features(&self, q: &Vector3<f64>, qdot: &Vector3<f64>, s: &Vector3<f64>) -> DVector<f64> {
        let x = [q[0], q[1], q[2], qdot[0], qdot[1], qdot[2], s[0], s[1], s[2]];
        DVector::from_iterator(
            self.centers.len(),
            self.centers.iter().zip(&self.widths).map(|(c, sigma)| {
                let d2: f64 = x.iter().zip(c).map(|(xi, ci)| (xi - ci) * (xi - ci)).sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }),
        )
    }

    /// τ_NN = Wᵀφ; linear in W at fixed input.
    pub fn output(&self, q: &Vector3<f64>, qdot: &Vector3<f64>, s: &Vector3<f64>) -> Vector3<f64> {
        let phi = self.features(q, qdot, s);
        let out = self.w.transpose() * phi;
        Vector3::new(out[0], out[1], out[2])
    }

    /// One Euler step of Ẇ = γ φ sᵀ followed by radial projection onto
    /// ‖W‖_F ≤ w_max.
    pub fn adapt(&mut self, q: &Vector3<f64>, qdot: &Vector3<f64>, s: &Vector3<f64>, dt: f64) {
        assert!(dt > 0.0);
        if s == &Vector3::zeros() {
            return; // exact weight freeze
        }
        let phi = self.features(q, qdot, s);
        let srow = nalgebra::RowVector3::new(s[0], s[1], s[2]);
        self.w += dt * self.config.gamma * phi * srow;
        let norm = self.w.norm();
        if norm > self.config.w_max {
            self.w *= self.config.w_max / norm;
        }
    }

    /// Zero the weights, keeping configuration and centers.
    pub fn reset(&mut self) {
        self.w.fill(0.0);
    }

    /// Weight matrix as CSV (feature_count rows × 3 columns).
    pub fn weights_to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.w.nrows() {
            out.push_str(&format!("{},{},{}\n", self.w[(i, 0)], self.w[(i, 1)], self.w[(i, 2)]));
        }
        out
    }

    pub fn weights_from_csv(&mut self, text: &str) -> Result<(), String> {
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 3 {
                return Err(format!("weights csv line {}: expected 3 columns", ln + 1));
            }
            let mut row = [0.0; 3];
            for (k, c) in cells.iter().enumerate() {
                row[k] = c
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| format!("weights csv line {}: {}", ln + 1, e))?;
            }
            rows.push(row);
        }
        if rows.len() != self.feature_count() {
            return Err(format!(
                "weights csv: expected {} rows, found {}",
                self.feature_count(),
                rows.len()
            ));
        }
        for (i, row) in rows.iter().enumerate() {
            for k in 0..3 {
                self.w[(i, k)] = row[k];
            }
        }
        Ok(())
    }
}
