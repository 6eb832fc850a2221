//! Thermal velocity averaging via Gauss–Hermite quadrature, plus the
//! deterministic summation primitives used for every reduction in the crate.
//!
//! A moving atom sees the one-photon detuning shifted by u = k·v. For a
//! Maxwell velocity distribution the shift is Gaussian with standard
//! deviation σ_u, related to the full width at half maximum by
//! σ_u = FWHM / (2√(2 ln 2)). Thermal averages are then integrals against
//! exp(−u²/2σ_u²), which Gauss–Hermite quadrature integrates exactly for
//! polynomial integrands of degree ≤ 2n−1:
//!
//! ```text
//!   ⟨f⟩ = (1/√π) Σᵢ wᵢ f(√2 σ_u xᵢ)
//! ```
//!
//! with (xᵢ, wᵢ) the physicists' Gauss–Hermite nodes and weights for the
//! weight function e^{−x²}. Nodes are found by Newton iteration on the
//! orthonormal Hermite recurrence — numerically stable to high order because
//! orthonormal-polynomial values stay O(1) near their roots.
//!
//! Determinism contract: reductions over velocity nodes use compensated
//! (Kahan) summation in fixed node order; long time-grid reductions use
//! pairwise summation with a fixed split. Results are therefore identical
//! regardless of thread count.

use crate::C64;

/// σ of a Gaussian from its full width at half maximum.
pub fn sigma_from_fwhm(fwhm: f64) -> f64 {
    fwhm / (8.0 * std::f64::consts::LN_2).sqrt()
}

/// Physicists' Gauss–Hermite rule of order `n` for the weight e^{−x²}.
///
/// Returns `(nodes, weights)` with nodes in ascending order and
/// Σ weights = √π. Panics if `n == 0`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Hermite order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let n_f = n as f64;
    // Upper half of the roots, largest first; the lower half is the mirror
    // image. Initial guesses follow the classical asymptotic estimates, each
    // polished by Newton iteration.
    let m = n.div_ceil(2);
    let mut z = 0.0_f64;
    for i in 0..m {
        z = match i {
            0 => {
                let a = 2.0 * n_f + 1.0;
                a.sqrt() - 1.85575 * a.powf(-1.0 / 6.0)
            }
            1 => z - 1.14 * n_f.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[n - 1],
            3 => 1.91 * z - 0.91 * nodes[n - 2],
            _ => 2.0 * z - nodes[n - i + 1],
        };
        for _ in 0..200 {
            let (p, d) = orthonormal_hermite(n, z);
            let step = p / d;
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        // Derivative at the converged root gives the weight: w = 2 / h̃_n'(x)².
        let (_, dp) = orthonormal_hermite(n, z);
        nodes[n - 1 - i] = z;
        nodes[i] = -z;
        let w = 2.0 / (dp * dp);
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0; // exact by symmetry
    }
    (nodes, weights)
}

/// Value and derivative of the orthonormal Hermite polynomial h̃_n at x.
///
/// Recurrence: h̃₀ = π^{−1/4}, h̃_{k+1} = x√(2/(k+1)) h̃_k − √(k/(k+1)) h̃_{k−1},
/// and h̃_n'(x) = √(2n) h̃_{n−1}(x).
fn orthonormal_hermite(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 0.0_f64;
    let mut p = std::f64::consts::PI.powf(-0.25);
    for k in 0..n {
        let k_f = k as f64;
        let p_next = x * (2.0 / (k_f + 1.0)).sqrt() * p - (k_f / (k_f + 1.0)).sqrt() * p_prev;
        p_prev = p;
        p = p_next;
    }
    let deriv = (2.0 * n as f64).sqrt() * p_prev;
    (p, deriv)
}

/// Discrete velocity distribution: one-photon detuning shifts and
/// probability weights (Σ = 1), in ascending shift order.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    /// Doppler shifts u in rad/s added to the one-photon detuning.
    pub shifts: Vec<f64>,
    /// Probability weights, summing to 1.
    pub weights: Vec<f64>,
}

impl VelocityGrid {
    /// Build the quadrature grid for a Doppler FWHM (rad/s) and node count.
    ///
    /// `nodes == 0` or `fwhm == 0` disables averaging: a single node at the
    /// central velocity with unit weight.
    pub fn new(fwhm: f64, nodes: usize) -> Self {
        if nodes <= 1 || fwhm == 0.0 {
            return VelocityGrid {
                shifts: vec![0.0],
                weights: vec![1.0],
            };
        }
        let sigma = sigma_from_fwhm(fwhm);
        let (x, w) = gauss_hermite(nodes);
        let norm = std::f64::consts::PI.sqrt();
        let shifts = x.iter().map(|&xi| std::f64::consts::SQRT_2 * sigma * xi).collect();
        let weights = w.iter().map(|&wi| wi / norm).collect();
        VelocityGrid { shifts, weights }
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }
}

/// Streaming Kahan (compensated) accumulator for complex values.
///
/// Used for every velocity-node reduction: fixed summation order, one
/// compensation term per component, no allocation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanC64 {
    sum_re: f64,
    sum_im: f64,
    c_re: f64,
    c_im: f64,
}

impl KahanC64 {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: C64) {
        let y = v.re - self.c_re;
        let t = self.sum_re + y;
        self.c_re = (t - self.sum_re) - y;
        self.sum_re = t;
        let y = v.im - self.c_im;
        let t = self.sum_im + y;
        self.c_im = (t - self.sum_im) - y;
        self.sum_im = t;
    }

    #[inline]
    pub fn value(&self) -> C64 {
        C64::new(self.sum_re, self.sum_im)
    }
}

/// Pairwise sum of a real slice with a fixed recursive split.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        s
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Pairwise sum of a complex slice with a fixed recursive split.
pub fn pairwise_sum_c64(xs: &[C64]) -> C64 {
    if xs.len() <= 8 {
        let mut s = C64::new(0.0, 0.0);
        for &x in xs {
            s += x;
        }
        s
    } else {
        let mid = xs.len() / 2;
        pairwise_sum_c64(&xs[..mid]) + pairwise_sum_c64(&xs[mid..])
    }
}
