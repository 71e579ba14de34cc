//! Independent oracles shared by the integration tests: a quadrature
//! reconstruction of the Lyapunov value from its integral definition,
//! finite-difference gradients, and seeded point samplers. Nothing here
//! calls back into the closed forms it is used to check.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Local signed power `sign(a) |a|^b`, via `powf` so the oracle does not
/// share an implementation path with the library's exp/ln version.
pub fn spow(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    a.signum() * a.abs().powf(b)
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn adaptive_rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    let delta = left + right - whole;
    // Once delta sits at roundoff scale relative to the segment values,
    // further refinement is noise; without this floor a tolerance far
    // below the integral's own magnitude recurses to the depth cap on
    // every segment.
    let floor = 1e-15 * (left.abs() + right.abs());
    if depth == 0 || delta.abs() <= (15.0 * tol).max(floor) {
        return left + right + delta / 15.0;
    }
    adaptive_rec(f, a, m, left, 0.5 * tol, depth - 1)
        + adaptive_rec(f, m, b, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` (either orientation).
pub fn adaptive_quad(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    adaptive_rec(f, a, b, simpson(f, a, b), tol, 48)
}

/// Quadrature over `[a, b]` split at zero where the integrand's higher
/// derivatives blow up.
fn quad_split_zero(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if (a < 0.0 && b > 0.0) || (b < 0.0 && a > 0.0) {
        adaptive_quad(f, a, 0.0, 0.5 * tol) + adaptive_quad(f, 0.0, b, 0.5 * tol)
    } else {
        adaptive_quad(f, a, b, tol)
    }
}

/// Homogeneity weights `r_i = 1 - d0 (m - i)`, recomputed locally.
pub fn weights(m: usize, d0: f64) -> Vec<f64> {
    (0..m).map(|j| 1.0 - d0 * (m - 1 - j) as f64).collect()
}

/// Lyapunov value rebuilt from its integral definition: the last
/// coordinate contributes `|e_m|^{dV}/dV`, and each coupling term is the
/// integral of `s -> sign(s)|s|^{dV/r_i - 1} - sign(p)|p|^{(dV-r_i)/r_{i+1}}`
/// from `sign(p)|p|^{r_i/r_{i+1}}` to `l_i e_i`, with `p = e_{i+1}`.
/// `tol` is relative to each coupling term's magnitude.
pub fn quad_v(e: &[f64], ell: &[f64], d0: f64, d_v: f64, tol: f64) -> f64 {
    let m = e.len();
    let r = weights(m, d0);
    let mut v = e[m - 1].abs().powf(d_v) / d_v;
    for i in 0..m - 1 {
        let nu = ell[i] * e[i];
        let p = e[i + 1];
        let lower = spow(p, r[i] / r[i + 1]);
        let slope = d_v / r[i] - 1.0;
        let offset = spow(p, (d_v - r[i]) / r[i + 1]);
        let f = move |s: f64| spow(s, slope) - offset;
        // Tolerance proportional to the term's own rough magnitude, so
        // huge and tiny coupling terms resolve to the same relative
        // accuracy.
        let rough = simpson(&f, lower, nu).abs() + 1e-6;
        v += quad_split_zero(&f, lower, nu, tol * rough);
    }
    v
}

/// Central finite-difference gradient with per-coordinate steps
/// `h_rel * max(1, |e_i|)`.
pub fn central_grad(f: &dyn Fn(&[f64]) -> f64, e: &[f64], h_rel: f64) -> Vec<f64> {
    let mut g = vec![0.0; e.len()];
    let mut work = e.to_vec();
    for i in 0..e.len() {
        let h = h_rel * e[i].abs().max(1.0);
        work[i] = e[i] + h;
        let hi = f(&work);
        work[i] = e[i] - h;
        let lo = f(&work);
        work[i] = e[i];
        g[i] = (hi - lo) / (2.0 * h);
    }
    g
}

/// Seeded standard-normal vectors; magnitudes floored at `min_mag`
/// (preserving sign) when a floor is requested.
pub struct PointSampler {
    rng: ChaCha8Rng,
    normal: Normal<f64>,
}

impl PointSampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), normal: Normal::new(0.0, 1.0).unwrap() }
    }

    pub fn vector(&mut self, n: usize, min_mag: f64) -> Vec<f64> {
        (0..n)
            .map(|_| {
                let x: f64 = self.normal.sample(&mut self.rng);
                if x == 0.0 {
                    min_mag.max(1e-6)
                } else if x.abs() < min_mag {
                    x.signum() * min_mag
                } else {
                    x
                }
            })
            .collect()
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }
}
