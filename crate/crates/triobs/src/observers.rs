//! Observer right-hand sides for triangular systems.
//!
//! All four variants share one configuration type and the same call shape
//! `rhs(state, y, u, w_hat, out)`:
//!
//! * high-gain: linear output injection `-L^i k_i (zhat_1 - y)` on line
//!   `i`, gains `k` from a Hurwitz design;
//! * homogeneous: injection `-L^i k_i spw(zhat_1 - y, r_{i+1}/r_1)` with
//!   weights of degree `d0`; at `d0 = -1` the last line carries a pure
//!   (set-valued) sign and the observer can converge in finite time, at
//!   `d0 = 0` the variant reduces exactly to high-gain;
//! * the two cascade variants: a chain of blocks of increasing dimension,
//!   each a small observer of the type above for the leading lines of the
//!   system. A block treats its own last line as disturbance (no
//!   nonlinearity estimate there) and feeds its nonlinearities with the
//!   states of the *previous* block, so each nonlinearity argument is an
//!   already-converged estimate rather than the block's own.
//!
//! The per-line nonlinearity estimates `phi_hat` are closures fixed at
//! configuration time (zero for unknown lines, possibly saturated copies
//! of the plant nonlinearities otherwise). The `w_hat` argument carries
//! per-line disturbance estimates, one value per flat state line, which
//! the simulator resolves each step (normally all zero).

use crate::numerics::{sign_select, signed_power, SignRule};
use crate::plant::PhiFn;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ObserverError {
    #[error("invalid observer configuration: {0}")]
    BadConfig(String),
}

/// Gains of one cascade block.
#[derive(Clone, Debug)]
pub struct BlockGains {
    pub dim: usize,
    pub gain: f64,
    pub k: Vec<f64>,
}

impl BlockGains {
    /// Block with the default high-gain coefficients for its dimension.
    pub fn default_highgain(dim: usize, gain: f64) -> Self {
        BlockGains { dim, gain, k: default_highgain_k(dim) }
    }
}

/// Observer family plus its gains.
#[derive(Clone, Debug)]
pub enum ObserverKind {
    HighGain { gain: f64, k: Vec<f64> },
    Homogeneous { gain: f64, k: Vec<f64>, d0: f64 },
    CascadeHighGain { blocks: Vec<BlockGains> },
    CascadeHomogeneous { blocks: Vec<BlockGains>, d0: f64 },
}

/// Per-line disturbance estimates.
#[derive(Clone, Debug, Default)]
pub enum WHatMode {
    /// No disturbance model (the default everywhere).
    #[default]
    Zero,
    /// Fixed per-flat-line constants.
    PerLine(Vec<f64>),
    /// Test hook: the simulator substitutes the exact residual of each
    /// line (true chain term plus true nonlinearity for block last
    /// lines), making the observer error identically zero from exact
    /// initialization.
    ExactResidual,
}

/// Full observer description for a system of dimension `m`.
#[derive(Clone)]
pub struct ObserverConfig {
    pub m: usize,
    pub kind: ObserverKind,
    pub sign_rule: SignRule,
    /// Line `i` (0-based) estimate of `phi_{i+1}(u, z_1..z_{i+1})`.
    pub phi_hat: Vec<PhiFn>,
    pub w_hat: WHatMode,
}

/// Zero estimates for all `m` lines.
pub fn zero_phi_hat(m: usize) -> Vec<PhiFn> {
    (0..m).map(|_| Arc::new(|_: f64, _: &[f64]| 0.0) as PhiFn).collect()
}

/// Coefficients `k_i = C(m, i)` placing all eigenvalues of the high-gain
/// companion matrix at -1.
pub fn default_highgain_k(m: usize) -> Vec<f64> {
    let mut k = Vec::with_capacity(m);
    let mut c = 1.0; // C(m, 0)
    for i in 1..=m {
        c *= (m - i + 1) as f64 / i as f64;
        k.push(c);
    }
    k
}

impl ObserverConfig {
    pub fn new(
        m: usize,
        kind: ObserverKind,
        sign_rule: SignRule,
        phi_hat: Vec<PhiFn>,
        w_hat: WHatMode,
    ) -> Result<Self, ObserverError> {
        let cfg = ObserverConfig { m, kind, sign_rule, phi_hat, w_hat };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ObserverError> {
        let bad = |msg: String| Err(ObserverError::BadConfig(msg));
        if self.m < 1 {
            return bad("system dimension must be >= 1".into());
        }
        if self.phi_hat.len() != self.m {
            return bad(format!(
                "expected {} nonlinearity estimates, got {}",
                self.m,
                self.phi_hat.len()
            ));
        }
        let check_gains = |gain: f64, k: &[f64], dim: usize| -> Result<(), ObserverError> {
            if !(gain >= 1.0) {
                return bad(format!("gain must be >= 1, got {gain}"));
            }
            if k.len() != dim {
                return bad(format!("expected {dim} coefficients, got {}", k.len()));
            }
            if k.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return bad(format!("coefficients must be positive and finite: {k:?}"));
            }
            Ok(())
        };
        let check_d0 = |d0: f64| -> Result<(), ObserverError> {
            if !(-1.0..=0.0).contains(&d0) {
                return bad(format!("homogeneity degree must lie in [-1, 0], got {d0}"));
            }
            Ok(())
        };
        match &self.kind {
            ObserverKind::HighGain { gain, k } => check_gains(*gain, k, self.m)?,
            ObserverKind::Homogeneous { gain, k, d0 } => {
                check_gains(*gain, k, self.m)?;
                check_d0(*d0)?;
            }
            ObserverKind::CascadeHighGain { blocks }
            | ObserverKind::CascadeHomogeneous { blocks, .. } => {
                if let ObserverKind::CascadeHomogeneous { d0, .. } = &self.kind {
                    check_d0(*d0)?;
                }
                if blocks.is_empty() {
                    return bad("cascade needs at least one block".into());
                }
                for b in blocks {
                    check_gains(b.gain, &b.k, b.dim)?;
                }
                for pair in blocks.windows(2) {
                    if pair[1].dim != pair[0].dim + 1 {
                        return bad(format!(
                            "each cascade block must extend the previous by one line \
                             (got dims {} then {})",
                            pair[0].dim, pair[1].dim
                        ));
                    }
                }
                let last = blocks.last().unwrap();
                if last.dim != self.m {
                    return bad(format!(
                        "last cascade block must have the system dimension {} (got {})",
                        self.m, last.dim
                    ));
                }
            }
        }
        Ok(())
    }

    /// Number of flat observer states.
    pub fn state_dim(&self) -> usize {
        match &self.kind {
            ObserverKind::HighGain { .. } | ObserverKind::Homogeneous { .. } => self.m,
            ObserverKind::CascadeHighGain { blocks }
            | ObserverKind::CascadeHomogeneous { blocks, .. } => {
                blocks.iter().map(|b| b.dim).sum()
            }
        }
    }

    /// Flat-state index of the reported estimate of each system
    /// component: for cascades, component `i` is read from the first
    /// block that estimates it.
    pub fn report_indices(&self) -> Vec<usize> {
        match &self.kind {
            ObserverKind::HighGain { .. } | ObserverKind::Homogeneous { .. } => (0..self.m).collect(),
            ObserverKind::CascadeHighGain { blocks }
            | ObserverKind::CascadeHomogeneous { blocks, .. } => {
                let mut out = Vec::with_capacity(self.m);
                for i in 0..self.m {
                    let mut offset = 0;
                    for b in blocks {
                        if b.dim >= i + 1 {
                            out.push(offset + i);
                            break;
                        }
                        offset += b.dim;
                    }
                }
                out
            }
        }
    }

    /// Labels of the flat states: `zhat_i` for single observers,
    /// `zhat_b_j` (block, line) for cascades.
    pub fn state_labels(&self) -> Vec<String> {
        match &self.kind {
            ObserverKind::HighGain { .. } | ObserverKind::Homogeneous { .. } => {
                (1..=self.m).map(|i| format!("zhat_{i}")).collect()
            }
            ObserverKind::CascadeHighGain { blocks }
            | ObserverKind::CascadeHomogeneous { blocks, .. } => {
                let mut out = Vec::new();
                for (b, blk) in blocks.iter().enumerate() {
                    for j in 1..=blk.dim {
                        out.push(format!("zhat_{}_{j}", b + 1));
                    }
                }
                out
            }
        }
    }

    /// Observer derivative; dispatches on the variant.
    pub fn rhs(&self, state: &[f64], y: f64, u: f64, w_hat: &[f64], out: &mut [f64]) {
        match &self.kind {
            ObserverKind::HighGain { .. } => highgain_rhs(self, state, y, u, w_hat, out),
            ObserverKind::Homogeneous { .. } => homogeneous_rhs(self, state, y, u, w_hat, out),
            ObserverKind::CascadeHighGain { .. } => {
                cascade_highgain_rhs(self, state, y, u, w_hat, out)
            }
            ObserverKind::CascadeHomogeneous { .. } => {
                cascade_homogeneous_rhs(self, state, y, u, w_hat, out)
            }
        }
    }
}

/// Injection exponent of line `j` (0-based) in a block of dimension
/// `dim` at degree `d0`: the weight ratio `r_{j+2} / r_1`.
#[inline]
fn line_exponent(dim: usize, j: usize, d0: f64) -> f64 {
    let r_top = 1.0 - d0 * (dim as f64 - 1.0);
    let r_line = 1.0 - d0 * (dim as f64 - (j + 2) as f64);
    r_line / r_top
}

#[inline]
fn injection(inn: f64, beta: f64, rule: SignRule) -> f64 {
    if beta > 0.0 {
        signed_power(inn, beta)
    } else {
        sign_select(inn, rule)
    }
}

fn single_rhs(
    cfg: &ObserverConfig,
    gain: f64,
    k: &[f64],
    d0: f64,
    state: &[f64],
    y: f64,
    u: f64,
    w_hat: &[f64],
    out: &mut [f64],
) {
    let m = cfg.m;
    assert_eq!(state.len(), m);
    assert_eq!(w_hat.len(), m);
    let inn = state[0] - y;
    let mut gain_pow = 1.0;
    for i in 0..m {
        gain_pow *= gain;
        let beta = line_exponent(m, i, d0);
        let chain = if i + 1 < m { state[i + 1] } else { 0.0 };
        out[i] = chain + (cfg.phi_hat[i])(u, &state[..=i]) + w_hat[i]
            - gain_pow * k[i] * injection(inn, beta, cfg.sign_rule);
    }
}

/// Linear high-gain observer.
pub fn highgain_rhs(
    cfg: &ObserverConfig,
    state: &[f64],
    y: f64,
    u: f64,
    w_hat: &[f64],
    out: &mut [f64],
) {
    let ObserverKind::HighGain { gain, k } = &cfg.kind else {
        panic!("configuration is not a high-gain observer");
    };
    single_rhs(cfg, *gain, k, 0.0, state, y, u, w_hat, out);
}

/// Homogeneous observer of degree `d0`.
pub fn homogeneous_rhs(
    cfg: &ObserverConfig,
    state: &[f64],
    y: f64,
    u: f64,
    w_hat: &[f64],
    out: &mut [f64],
) {
    let ObserverKind::Homogeneous { gain, k, d0 } = &cfg.kind else {
        panic!("configuration is not a homogeneous observer");
    };
    single_rhs(cfg, *gain, k, *d0, state, y, u, w_hat, out);
}

fn cascade_rhs(
    cfg: &ObserverConfig,
    blocks: &[BlockGains],
    d0: f64,
    state: &[f64],
    y: f64,
    u: f64,
    w_hat: &[f64],
    out: &mut [f64],
) {
    assert_eq!(state.len(), cfg.state_dim());
    assert_eq!(w_hat.len(), cfg.state_dim());
    let mut offset = 0;
    let mut prev: Option<(usize, usize)> = None;
    for blk in blocks {
        let q = blk.dim;
        let s = &state[offset..offset + q];
        let inn = s[0] - y;
        let mut gain_pow = 1.0;
        for j in 0..q {
            gain_pow *= blk.gain;
            let beta = line_exponent(q, j, d0);
            let (chain, phi) = if j + 1 < q {
                // Nonlinearity fed by the previous block's estimates
                // (the first block falls back to its own).
                let (ps, pd) = prev.unwrap_or((offset, q));
                let src = &state[ps..ps + pd];
                (s[j + 1], (cfg.phi_hat[j])(u, &src[..=j]))
            } else {
                (0.0, 0.0)
            };
            out[offset + j] = chain + phi + w_hat[offset + j]
                - gain_pow * blk.k[j] * injection(inn, beta, cfg.sign_rule);
        }
        prev = Some((offset, q));
        offset += q;
    }
}

/// Cascade of high-gain blocks of increasing dimension.
pub fn cascade_highgain_rhs(
    cfg: &ObserverConfig,
    state: &[f64],
    y: f64,
    u: f64,
    w_hat: &[f64],
    out: &mut [f64],
) {
    let ObserverKind::CascadeHighGain { blocks } = &cfg.kind else {
        panic!("configuration is not a cascade high-gain observer");
    };
    cascade_rhs(cfg, blocks, 0.0, state, y, u, w_hat, out);
}

/// Cascade of homogeneous blocks of increasing dimension.
pub fn cascade_homogeneous_rhs(
    cfg: &ObserverConfig,
    state: &[f64],
    y: f64,
    u: f64,
    w_hat: &[f64],
    out: &mut [f64],
) {
    let ObserverKind::CascadeHomogeneous { blocks, d0 } = &cfg.kind else {
        panic!("configuration is not a cascade homogeneous observer");
    };
    cascade_rhs(cfg, blocks, *d0, state, y, u, w_hat, out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hg(m: usize, gain: f64, k: Vec<f64>) -> ObserverConfig {
        ObserverConfig::new(
            m,
            ObserverKind::HighGain { gain, k },
            SignRule::ZeroAtZero,
            zero_phi_hat(m),
            WHatMode::Zero,
        )
        .unwrap()
    }

    fn hom(m: usize, gain: f64, k: Vec<f64>, d0: f64) -> ObserverConfig {
        ObserverConfig::new(
            m,
            ObserverKind::Homogeneous { gain, k, d0 },
            SignRule::ZeroAtZero,
            zero_phi_hat(m),
            WHatMode::Zero,
        )
        .unwrap()
    }

    #[test]
    fn default_k_is_binomial_row() {
        assert_eq!(default_highgain_k(2), vec![2.0, 1.0]);
        assert_eq!(default_highgain_k(4), vec![4.0, 6.0, 4.0, 1.0]);
        assert_eq!(default_highgain_k(1), vec![1.0]);
    }

    #[test]
    fn highgain_line_arithmetic() {
        // Unit innovation, zero state, benchmark gains at L = 2.
        let cfg = hg(4, 2.0, vec![14.0, 99.0, 408.0, 833.0]);
        let mut out = [0.0; 4];
        cfg.rhs(&[0.0; 4], -1.0, 0.0, &[0.0; 4], &mut out);
        assert_eq!(out, [-28.0, -396.0, -3264.0, -13328.0]);
    }

    #[test]
    fn highgain_uses_chain_and_phi() {
        let mut cfg = hg(2, 1.0, vec![1.0, 1.0]);
        cfg.phi_hat[0] = std::sync::Arc::new(|u, z: &[f64]| u * z[0]);
        let mut out = [0.0; 2];
        // No innovation: derivative is chain + phi + w.
        cfg.rhs(&[2.0, 3.0], 2.0, 10.0, &[0.5, -0.5], &mut out);
        assert_eq!(out, [3.0 + 20.0 + 0.5, -0.5]);
    }

    #[test]
    fn homogeneous_exponents() {
        // Dim 4 at degree -1: exponents 3/4, 1/2, 1/4, sign on the last line.
        let cfg = hom(4, 1.0, vec![1.0; 4], -1.0);
        let mut out = [0.0; 4];
        let inn = 0.3f64;
        cfg.rhs(&[0.0; 4], -inn, 0.0, &[0.0; 4], &mut out);
        assert_relative_eq!(out[0], -inn.powf(0.75), max_relative = 1e-14);
        assert_relative_eq!(out[1], -inn.powf(0.5), max_relative = 1e-14);
        assert_relative_eq!(out[2], -inn.powf(0.25), max_relative = 1e-14);
        assert_eq!(out[3], -1.0);
        // Set-valued last line at zero innovation: rule selects.
        let mut cfg = hom(4, 1.0, vec![1.0; 4], -1.0);
        cfg.sign_rule = SignRule::UpperSelect;
        cfg.rhs(&[0.0; 4], 0.0, 0.0, &[0.0; 4], &mut out);
        assert_eq!(out, [0.0, 0.0, 0.0, -1.0]);
        cfg.sign_rule = SignRule::ZeroAtZero;
        cfg.rhs(&[0.0; 4], 0.0, 0.0, &[0.0; 4], &mut out);
        assert_eq!(out, [0.0; 4]);
    }

    #[test]
    fn homogeneous_injection_scaling() {
        // Line i injection is homogeneous of degree r_{i+1} in the
        // dilated innovation: scaling inn by lam^{r_1} scales term i by
        // lam^{r_{i+1}}.
        let cfg = hom(3, 1.0, vec![1.0; 3], -1.0);
        let (lam, inn) = (1.9f64, 0.4f64);
        let r = [3.0, 2.0, 1.0, 0.0];
        let mut base = [0.0; 3];
        let mut scaled = [0.0; 3];
        cfg.rhs(&[0.0; 3], -inn, 0.0, &[0.0; 3], &mut base);
        cfg.rhs(&[0.0; 3], -(lam.powf(r[0]) * inn), 0.0, &[0.0; 3], &mut scaled);
        for i in 0..3 {
            assert_relative_eq!(scaled[i], lam.powf(r[i + 1]) * base[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn degree_zero_reduces_to_highgain() {
        let k = vec![3.0, 2.5, 1.5, 0.8];
        let cfg_hg = hg(4, 2.5, k.clone());
        let cfg_hom = hom(4, 2.5, k, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut a = [0.0; 4];
        let mut b = [0.0; 4];
        for _ in 0..10_000 {
            let state: Vec<f64> = (0..4).map(|_| rng.random_range(-5.0..5.0)).collect();
            let y = rng.random_range(-5.0..5.0);
            let u = rng.random_range(-5.0..5.0);
            cfg_hg.rhs(&state, y, u, &[0.0; 4], &mut a);
            cfg_hom.rhs(&state, y, u, &[0.0; 4], &mut b);
            for i in 0..4 {
                assert!(
                    (a[i] - b[i]).abs() <= 1e-12 * a[i].abs().max(1.0),
                    "line {i}: {} vs {}",
                    a[i],
                    b[i]
                );
            }
        }
    }

    fn cascade(d0: f64) -> ObserverConfig {
        let blocks = vec![
            BlockGains { dim: 3, gain: 2.5, k: vec![3.0, 2.6, 1.1] },
            BlockGains { dim: 4, gain: 3.0, k: vec![5.0, 8.77, 4.44, 1.1] },
        ];
        let kind = if d0 == 0.0 {
            ObserverKind::CascadeHighGain { blocks }
        } else {
            ObserverKind::CascadeHomogeneous { blocks, d0 }
        };
        ObserverConfig::new(4, kind, SignRule::ZeroAtZero, zero_phi_hat(4), WHatMode::Zero).unwrap()
    }

    #[test]
    fn cascade_shape_and_reporting() {
        let cfg = cascade(-1.0);
        assert_eq!(cfg.state_dim(), 7);
        assert_eq!(cfg.report_indices(), vec![0, 1, 2, 6]);
        assert_eq!(
            cfg.state_labels(),
            ["zhat_1_1", "zhat_1_2", "zhat_1_3", "zhat_2_1", "zhat_2_2", "zhat_2_3", "zhat_2_4"]
        );
    }

    #[test]
    fn cascade_first_block_is_self_contained() {
        // Block 1 lines depend only on block-1 states and y.
        let cfg = cascade(-1.0);
        let mut s1 = vec![0.2, -0.4, 0.6, 1.0, 2.0, 3.0, 4.0];
        let mut out_a = vec![0.0; 7];
        let mut out_b = vec![0.0; 7];
        cfg.rhs(&s1, 0.5, 1.0, &vec![0.0; 7], &mut out_a);
        for v in &mut s1[3..] {
            *v += 10.0;
        }
        cfg.rhs(&s1, 0.5, 1.0, &vec![0.0; 7], &mut out_b);
        assert_eq!(&out_a[..3], &out_b[..3]);
    }

    #[test]
    fn cascade_block_exponents_scale_with_dimension() {
        // Block of dimension q at degree -1 uses exponents (q-j)/q.
        let cfg = cascade(-1.0);
        let inn = 0.2f64;
        // States zero except y produces the innovation on both blocks.
        let mut out = vec![0.0; 7];
        cfg.rhs(&vec![0.0; 7], -inn, 0.0, &vec![0.0; 7], &mut out);
        // Block 1 (dim 3): exponents 2/3, 1/3, sign.
        assert_relative_eq!(out[0], -2.5 * 3.0 * inn.powf(2.0 / 3.0), max_relative = 1e-13);
        assert_relative_eq!(out[1], -2.5f64.powi(2) * 2.6 * inn.powf(1.0 / 3.0), max_relative = 1e-13);
        assert_relative_eq!(out[2], -2.5f64.powi(3) * 1.1, max_relative = 1e-13);
        // Block 2 (dim 4): exponents 3/4, 1/2, 1/4, sign.
        assert_relative_eq!(out[3], -3.0 * 5.0 * inn.powf(0.75), max_relative = 1e-13);
        assert_relative_eq!(out[6], -3.0f64.powi(4) * 1.1, max_relative = 1e-13);
    }

    #[test]
    fn cascade_feeds_previous_block_states() {
        // phi on line 1 of block 2 must read block-1 states, not its own.
        let mut cfg = cascade(-1.0);
        cfg.phi_hat[0] = std::sync::Arc::new(|_, z: &[f64]| 100.0 * z[0]);
        let state = vec![0.25, 0.0, 0.0, 9.0, 0.0, 0.0, 0.0];
        let mut out = vec![0.0; 7];
        cfg.rhs(&state, 0.25, 0.0, &vec![0.0; 7], &mut out);
        // Block 2 line 1: chain (s[4]=0) + phi(block1 z1=0.25)*100 - inj(inn2).
        let inn2 = 9.0 - 0.25f64;
        assert_relative_eq!(
            out[3],
            25.0 - 3.0 * 5.0 * inn2.powf(0.75),
            max_relative = 1e-13
        );
        // Block 1 line 1 uses its own state for phi; innovation is zero.
        assert_relative_eq!(out[0], 25.0, max_relative = 1e-13);
    }

    #[test]
    fn config_shape_rejection() {
        // Wrong k length.
        assert!(ObserverConfig::new(
            3,
            ObserverKind::HighGain { gain: 2.0, k: vec![1.0, 1.0] },
            SignRule::ZeroAtZero,
            zero_phi_hat(3),
            WHatMode::Zero,
        )
        .is_err());
        // Gain below 1.
        assert!(ObserverConfig::new(
            2,
            ObserverKind::HighGain { gain: 0.5, k: vec![2.0, 1.0] },
            SignRule::ZeroAtZero,
            zero_phi_hat(2),
            WHatMode::Zero,
        )
        .is_err());
        // Cascade dims must step by one.
        let blocks = vec![
            BlockGains::default_highgain(1, 2.0),
            BlockGains::default_highgain(3, 2.0),
        ];
        assert!(ObserverConfig::new(
            3,
            ObserverKind::CascadeHighGain { blocks },
            SignRule::ZeroAtZero,
            zero_phi_hat(3),
            WHatMode::Zero,
        )
        .is_err());
        // Last block must cover the full system.
        let blocks = vec![BlockGains::default_highgain(2, 2.0)];
        assert!(ObserverConfig::new(
            3,
            ObserverKind::CascadeHighGain { blocks },
            SignRule::ZeroAtZero,
            zero_phi_hat(3),
            WHatMode::Zero,
        )
        .is_err());
        // Negative block coefficient.
        let blocks = vec![BlockGains { dim: 1, gain: 2.0, k: vec![-1.0] }];
        assert!(ObserverConfig::new(
            1,
            ObserverKind::CascadeHighGain { blocks },
            SignRule::ZeroAtZero,
            zero_phi_hat(1),
            WHatMode::Zero,
        )
        .is_err());
    }

    #[test]
    fn gain_scaling_strengthens_injection() {
        let cfg1 = hg(3, 2.0, vec![3.0, 3.0, 1.0]);
        let cfg2 = hg(3, 4.0, vec![3.0, 3.0, 1.0]);
        let mut a = [0.0; 3];
        let mut b = [0.0; 3];
        cfg1.rhs(&[0.0; 3], -1.0, 0.0, &[0.0; 3], &mut a);
        cfg2.rhs(&[0.0; 3], -1.0, 0.0, &[0.0; 3], &mut b);
        for i in 0..3 {
            assert_relative_eq!(b[i], 2f64.powi(i as i32 + 1) * a[i], max_relative = 1e-14);
        }
    }
}
