//! Co-rotating frame of a frozen solution: center and axis of rotation, period,
//! and reconstruction of the lab-frame wave.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub x_star: Vec<f64>,
    /// Direction of the rotation axis (d = 3 only).
    pub axis: Option<[f64; 3]>,
    pub sigma1: f64,
    pub period: f64,
}

/// Skew generator given by its upper-triangular entries: `[S12]` for d = 2,
/// `[S12, S13, S23]` for d = 3. Solves `S x_star + tau = 0` (least squares for d = 3).
pub fn extract_frame(dim: usize, s_entries: &[f64], tau: &[f64]) -> Result<FrameRecord> {
    let sigma1 = s_entries.iter().map(|s| s * s).sum::<f64>().sqrt();
    if !(sigma1 > 0.0) {
        return Err(Error::InvalidArgument("rotation generator S vanishes; no center of rotation".into()));
    }
    let period = 2.0 * std::f64::consts::PI / sigma1;
    match (dim, s_entries, tau) {
        (2, &[s12], &[t1, t2]) => Ok(FrameRecord { x_star: vec![t2 / s12, -t1 / s12], axis: None, sigma1, period }),
        (3, &[s12, s13, s23], &[t1, t2, t3]) => {
            let n2 = sigma1 * sigma1;
            let x_star = vec![
                (s12 * t2 + s13 * t3) / n2,
                (-s12 * t1 + s23 * t3) / n2,
                (-s13 * t1 - s23 * t2) / n2,
            ];
            Ok(FrameRecord { x_star, axis: Some([s23, -s13, s12]), sigma1, period })
        }
        _ => Err(Error::InvalidArgument(format!(
            "frame needs dim 2 with 1 entry or dim 3 with 3 entries and a matching tau (got dim {dim}, {} entries, {} tau)",
            s_entries.len(),
            tau.len()
        ))),
    }
}

/// `E(z) = sum_{j >= 1} z^{j-1} / j!`, so that `E(z) z = e^z - 1`.
pub fn companion_e(z: Complex64) -> Complex64 {
    if z.norm() > 0.5 {
        return (z.exp() - 1.0) / z;
    }
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for j in 2..40 {
        term *= z / j as f64;
        sum += term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}

/// `u(x, t) = w(e^{-tS}(x - x_star) + x_star)` on the profile's grid (d = 2).
/// Preimages outside the grid take the far-field value.
pub fn reconstruct(profile: &Field, s12: f64, x_star: [f64; 2], t: f64, v_inf: &[f64]) -> Field {
    let g = *profile.grid();
    // e^{-tS} for S = [[0, s12], [-s12, 0]].
    let (c, s) = ((t * s12).cos(), (t * s12).sin());
    Field::from_fn(g, profile.ncomp(), |x, y| {
        let (dx, dy) = (x - x_star[0], y - x_star[1]);
        let px = c * dx - s * dy + x_star[0];
        let py = s * dx + c * dy + x_star[1];
        profile.interpolate(px, py).unwrap_or_else(|| v_inf.to_vec())
    })
}
