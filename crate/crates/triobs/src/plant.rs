//! Triangular plants and the worked 3-state example.
//!
//! A triangular system of dimension `m` is
//!
//! ```text
//! dz_i/dt = z_{i+1} + phi_i(u, z_1..z_i) + w_i   (i < m)
//! dz_m/dt = phi_m(u, z) + w_m,                    y = z_1 + v
//! ```
//!
//! where each `phi_i` depends only on the first `i` states. The module
//! carries a small catalog of such systems plus the concrete example used
//! by all benchmark presets: the oscillator
//!
//! ```text
//! dx1 = x2,  dx2 = -x1 + x3^5 x1,  dx3 = -x1 x2 + u,   y = x1,
//! ```
//!
//! which is not uniformly observable (the map `(x, u) -> derivatives of y`
//! degenerates where `x1 = x2 = 0`) but embeds into a 4-dimensional
//! triangular form through `h4`. Along that immersion only the third
//! nonlinearity has a closed form, `phi3`; the fourth is treated as an
//! unknown disturbance by every observer.
//!
//! Hölder analysis utilities live here too: `holder_estimate` lower-bounds
//! a Hölder constant by pair sampling, `holder_order_probe` measures the
//! worst per-coordinate Hölder order, and `young_decompose` splits a
//! Hölder bound `a |d|^alpha` into a linear gain plus constant offset.

use crate::numerics::signed_power;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use thiserror::Error;

/// Per-line nonlinearity `phi_i(u, z_1..z_i)`.
pub type PhiFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Error, PartialEq)]
pub enum PlantError {
    #[error("immersion inverse undefined: z1^2 + z2^2 = 0")]
    SingularInput,
    #[error("trajectory enters the near-singular set x1^2 + x2^2 < {min_radius} at sample {index}")]
    NearSingular { min_radius: f64, index: usize },
    #[error("invalid parameter: {0}")]
    BadParam(String),
    #[error("no sample pair with nonzero separation; widen the box")]
    DegenerateSamples,
}

/// One line of a triangular system.
#[derive(Clone)]
pub struct PhiLine {
    pub f: PhiFn,
    /// Whether an observer may use this line (false means the observer
    /// substitutes zero and treats the line as disturbance).
    pub known: bool,
    /// Optional saturation level for the observer-side copy.
    pub bound: Option<f64>,
}

impl PhiLine {
    pub fn zero() -> Self {
        PhiLine { f: Arc::new(|_, _| 0.0), known: true, bound: None }
    }
}

/// A triangular system of dimension `m`.
#[derive(Clone)]
pub struct TriangularSystem {
    pub m: usize,
    /// Exactly `m` lines; line `i` (0-based) reads `z[0..=i]`.
    pub phi: Vec<PhiLine>,
}

impl TriangularSystem {
    pub fn new(m: usize, phi: Vec<PhiLine>) -> Result<Self, PlantError> {
        if m < 1 {
            return Err(PlantError::BadParam("dimension must be >= 1".into()));
        }
        if phi.len() != m {
            return Err(PlantError::BadParam(format!(
                "expected {m} nonlinearity lines, got {}",
                phi.len()
            )));
        }
        Ok(TriangularSystem { m, phi })
    }

    /// Pure integrator chain: all `phi_i = 0`.
    pub fn chain(m: usize) -> Result<Self, PlantError> {
        Self::new(m, (0..m).map(|_| PhiLine::zero()).collect())
    }

    /// Lipschitz triangular system with `phi_i = c * (z_1 + ... + z_i)`.
    pub fn linear(m: usize, c: f64) -> Result<Self, PlantError> {
        let lines = (0..m)
            .map(|_| PhiLine {
                f: Arc::new(move |_, z: &[f64]| c * z.iter().sum::<f64>()),
                known: true,
                bound: None,
            })
            .collect();
        Self::new(m, lines)
    }

    /// Derivative of the state, `out[i] = z_{i+1} + phi_i + w_i` (last line
    /// has no chain term). `w` are the additive disturbances.
    pub fn rhs(&self, z: &[f64], u: f64, w: &[f64], out: &mut [f64]) {
        for i in 0..self.m {
            let chain = if i + 1 < self.m { z[i + 1] } else { 0.0 };
            out[i] = chain + (self.phi[i].f)(u, &z[..=i]) + w[i];
        }
    }
}

/// State of the worked example, kept in original coordinates; the
/// triangular coordinates are always recomputed through [`h4`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExampleState {
    pub x: [f64; 3],
}

impl ExampleState {
    pub fn z(&self) -> [f64; 4] {
        h4(self.x)
    }
}

/// Right-hand side of the example oscillator.
pub fn example_dynamics(x: [f64; 3], u: f64) -> [f64; 3] {
    let [x1, x2, x3] = x;
    [x2, -x1 + x3.powi(5) * x1, -x1 * x2 + u]
}

/// Order-4 immersion of the example: first four derivatives of the output
/// along the drift, `z = (y, y', y'', y''')` up to input terms.
pub fn h4(x: [f64; 3]) -> [f64; 4] {
    let [x1, x2, x3] = x;
    let x3p4 = x3.powi(4);
    let x3p5 = x3p4 * x3;
    [
        x1,
        x2,
        -x1 + x3p5 * x1,
        -x2 - 5.0 * x3p4 * x1 * x1 * x2 + x3p5 * x2,
    ]
}

/// Inverse of [`h4`] on `z1^2 + z2^2 > 0`: recovers `x3` by solving the
/// polynomial relations, then reads `x1 = z1`, `x2 = z2`.
pub fn h4_inverse(z: [f64; 4]) -> Result<[f64; 3], PlantError> {
    let [z1, z2, z3, z4] = z;
    let den = z1 * z1 + z2 * z2;
    if den == 0.0 {
        return Err(PlantError::SingularInput);
    }
    let num = (z3 + z1) * z1
        + ((z4 + z2) + 5.0 * (z3 + z1).abs().powf(0.8) * z1.abs().powf(1.2) * z2) * z2;
    let x3 = signed_power(num / den, 0.2);
    Ok([z1, z2, x3])
}

/// Input coefficient of the third immersed line: `phi3 = u * g3(z1, z3)`.
pub fn g3(z1: f64, z3: f64) -> f64 {
    5.0 * (z3 + z1).abs().powf(0.8) * signed_power(z1, 0.2)
}

/// Third nonlinearity of the immersed example. Hölder of order 1/5 in
/// `z1` and 4/5 in `z3`, not Lipschitz near `z1 = 0` and `z3 = -z1`.
pub fn phi3(u: f64, z1: f64, z3: f64) -> f64 {
    u * g3(z1, z3)
}

/// Check that a simulated example trajectory satisfies the triangular
/// relations of its immersion: central-difference derivatives of
/// `z = h4(x)` against `z_{i+1} + phi_i` for the three known lines.
/// Returns the max absolute residual per line.
pub fn triangular_residual(
    x_traj: &[[f64; 3]],
    u_traj: &[f64],
    dt: f64,
    min_radius: f64,
) -> Result<[f64; 3], PlantError> {
    if dt <= 0.0 {
        return Err(PlantError::BadParam(format!("dt must be positive, got {dt}")));
    }
    if x_traj.len() < 3 {
        return Err(PlantError::BadParam("need at least 3 trajectory samples".into()));
    }
    if u_traj.len() != x_traj.len() {
        return Err(PlantError::BadParam(format!(
            "input series length {} does not match trajectory length {}",
            u_traj.len(),
            x_traj.len()
        )));
    }
    for (index, x) in x_traj.iter().enumerate() {
        if x[0] * x[0] + x[1] * x[1] < min_radius {
            return Err(PlantError::NearSingular { min_radius, index });
        }
    }
    let z: Vec<[f64; 4]> = x_traj.iter().map(|&x| h4(x)).collect();
    let mut worst = [0.0f64; 3];
    for k in 1..z.len() - 1 {
        for i in 0..3 {
            let deriv = (z[k + 1][i] - z[k - 1][i]) / (2.0 * dt);
            let phi = if i == 2 { phi3(u_traj[k], z[k][0], z[k][2]) } else { 0.0 };
            let res = (deriv - (z[k][i + 1] + phi)).abs();
            if res > worst[i] {
                worst[i] = res;
            }
        }
    }
    Ok(worst)
}

/// Linear gain plus offset dominating a Hölder bound:
/// `a |d|^alpha <= a_lin |d| + b_off` for all `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YoungSplit {
    pub a_lin: f64,
    pub b_off: f64,
}

/// Split `a |d|^alpha` via the weighted Young inequality with trade-off
/// `sigma > 0`. Larger `sigma` moves weight from the offset to the gain.
pub fn young_decompose(a: f64, alpha: f64, sigma: f64) -> Result<YoungSplit, PlantError> {
    if a < 0.0 {
        return Err(PlantError::BadParam(format!("constant must be >= 0, got {a}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(PlantError::BadParam(format!("order must lie in [0, 1], got {alpha}")));
    }
    if sigma <= 0.0 {
        return Err(PlantError::BadParam(format!("trade-off must be > 0, got {sigma}")));
    }
    let split = if alpha == 0.0 {
        YoungSplit { a_lin: 0.0, b_off: a }
    } else if alpha == 1.0 {
        YoungSplit { a_lin: a, b_off: 0.0 }
    } else {
        YoungSplit {
            a_lin: a.powf(1.0 / alpha) * alpha * sigma.powf(1.0 / alpha),
            b_off: (1.0 - alpha) / sigma.powf(1.0 / (1.0 - alpha)),
        }
    };
    Ok(split)
}

/// Hölder description of one line: `|phi(u, za) - phi(u, zb)| <=
/// a * sum_j |za_j - zb_j|^{alpha_j}` over a box.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderSpec {
    /// Row `i` (0-based) has `i + 1` orders, one per coordinate.
    pub alpha: Vec<Vec<f64>>,
    pub a: f64,
}

impl HolderSpec {
    pub fn new(alpha: Vec<Vec<f64>>, a: f64) -> Result<Self, PlantError> {
        if a < 0.0 {
            return Err(PlantError::BadParam(format!("constant must be >= 0, got {a}")));
        }
        for (i, row) in alpha.iter().enumerate() {
            if row.len() != i + 1 {
                return Err(PlantError::BadParam(format!(
                    "order row {} must have {} entries, got {}",
                    i + 1,
                    i + 1,
                    row.len()
                )));
            }
            if row.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(PlantError::BadParam(format!("orders must lie in [0, 1]: row {:?}", row)));
            }
        }
        Ok(HolderSpec { alpha, a })
    }

    /// Per-row lower thresholds required by the high-gain family: line `i`
    /// needs every order strictly above `(m - i - 1) / (m - i)`; the last
    /// line only needs boundedness (threshold 0, non-strict).
    pub fn highgain_thresholds(m: usize) -> Vec<f64> {
        (1..=m)
            .map(|i| {
                if i == m {
                    0.0
                } else {
                    (m - i - 1) as f64 / (m - i) as f64
                }
            })
            .collect()
    }

    /// Exact orders required by the finite-time homogeneous family
    /// (degree -1): `alpha_ij = (m - i) / (m - j + 1)`.
    pub fn homogeneous_orders(m: usize) -> Vec<Vec<f64>> {
        (1..=m)
            .map(|i| {
                (1..=i)
                    .map(|j| (m - i) as f64 / (m - j + 1) as f64)
                    .collect()
            })
            .collect()
    }
}

fn sample_in(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    }
}

fn check_box(box_: &[(f64, f64)], arity: usize) -> Result<(), PlantError> {
    if box_.len() != arity {
        return Err(PlantError::BadParam(format!(
            "box has {} coordinate ranges, line reads {arity}",
            box_.len()
        )));
    }
    if box_.iter().any(|r| r.1 < r.0) {
        return Err(PlantError::BadParam("box range with hi < lo".into()));
    }
    Ok(())
}

/// Monte-Carlo lower bound on the Hölder constant of `phi` (arity
/// `alpha_row.len()`) for the given orders: max over sampled pairs of
/// `|phi(u, za) - phi(u, zb)| / sum_j |za_j - zb_j|^{alpha_j}`.
pub fn holder_estimate(
    phi: &PhiFn,
    alpha_row: &[f64],
    box_: &[(f64, f64)],
    u_range: (f64, f64),
    samples: usize,
    seed: u64,
) -> Result<f64, PlantError> {
    if alpha_row.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(PlantError::BadParam("orders must lie in [0, 1]".into()));
    }
    if samples == 0 {
        return Err(PlantError::BadParam("need at least one sample".into()));
    }
    check_box(box_, alpha_row.len())?;
    let n = alpha_row.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut za = vec![0.0; n];
    let mut zb = vec![0.0; n];
    let mut best: Option<f64> = None;
    for _ in 0..samples {
        let u = sample_in(&mut rng, u_range);
        for j in 0..n {
            za[j] = sample_in(&mut rng, box_[j]);
            zb[j] = sample_in(&mut rng, box_[j]);
        }
        let den: f64 = (0..n).map(|j| (za[j] - zb[j]).abs().powf(alpha_row[j])).sum();
        if den == 0.0 {
            continue;
        }
        let ratio = (phi(u, &za) - phi(u, &zb)).abs() / den;
        best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
    }
    best.ok_or(PlantError::DegenerateSamples)
}

/// Empirical Hölder order of `phi` in coordinate `j` (0-based): slope of
/// `log sup |phi(z + h e_j) - phi(z)|` against `log h` over shrinking
/// scales. Base points mix uniform draws with draws anchored on the common
/// singular sets `z_j = 0` and `z_j = +/- z_l`. Returns the fitted order
/// clamped to [0, 1]; lines with no dependence on `z_j` report 1.
pub fn holder_order_probe(
    phi: &PhiFn,
    j: usize,
    box_: &[(f64, f64)],
    u_range: (f64, f64),
    samples_per_scale: usize,
    seed: u64,
) -> Result<f64, PlantError> {
    let n = box_.len();
    if j >= n {
        return Err(PlantError::BadParam(format!("coordinate {j} out of range for arity {n}")));
    }
    if samples_per_scale == 0 {
        return Err(PlantError::BadParam("need at least one sample per scale".into()));
    }
    check_box(box_, n)?;
    let scales: Vec<f64> = (2..=6).map(|k| 10f64.powi(-k)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // One fixed configuration set evaluated at every scale: with common
    // base points the sup is a max of fixed-coefficient powers of h, so
    // the fitted slope is not polluted by per-scale sampling noise.
    let mut configs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(samples_per_scale);
    for s in 0..samples_per_scale {
        let u = sample_in(&mut rng, u_range);
        let mut z: Vec<f64> = (0..n).map(|l| sample_in(&mut rng, box_[l])).collect();
        // Rotate through anchor families so power-type singular sets
        // are hit regardless of the box.
        match s % (2 * n + 2) {
            0 => {}
            1 => z[j] = 0.0,
            k => {
                let l = (k - 2) / 2;
                if l != j {
                    z[j] = if k % 2 == 0 { -z[l] } else { z[l] };
                }
            }
        }
        configs.push((u, z));
    }
    let mut sups = Vec::with_capacity(scales.len());
    let mut zp = vec![0.0; n];
    for &h in &scales {
        let mut sup = 0.0f64;
        for (u, z) in &configs {
            zp.copy_from_slice(z);
            zp[j] = z[j] + h;
            let diff = (phi(*u, &zp) - phi(*u, z)).abs();
            if diff > sup {
                sup = diff;
            }
        }
        sups.push(sup);
    }
    if sups.iter().all(|&s| s == 0.0) {
        return Ok(1.0);
    }
    // Least-squares slope of log10(sup) against log10(h), ignoring
    // zero-sup scales.
    let pts: Vec<(f64, f64)> = scales
        .iter()
        .zip(&sups)
        .filter(|(_, &s)| s > 0.0)
        .map(|(&h, &s)| (h.log10(), s.log10()))
        .collect();
    if pts.len() < 2 {
        return Ok(1.0);
    }
    let n_pts = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n_pts;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n_pts;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok((sxy / sxx).clamp(0.0, 1.0))
}

/// Saturation level for an observer-side nonlinearity: sampled max of
/// `|phi|` over the box, inflated by 10%.
pub fn estimate_phi_bound(
    phi: &PhiFn,
    box_: &[(f64, f64)],
    u_range: (f64, f64),
    samples: usize,
    seed: u64,
) -> Result<f64, PlantError> {
    if samples == 0 {
        return Err(PlantError::BadParam("need at least one sample".into()));
    }
    check_box(box_, box_.len())?;
    let n = box_.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = vec![0.0; n];
    let mut max = 0.0f64;
    for _ in 0..samples {
        let u = sample_in(&mut rng, u_range);
        for l in 0..n {
            z[l] = sample_in(&mut rng, box_[l]);
        }
        max = max.max(phi(u, &z).abs());
    }
    Ok(max * 1.1)
}
