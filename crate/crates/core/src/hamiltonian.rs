//! Coherent-state average `H(z̄, z) = ⟨z|Ĥ|z⟩` and its exact mixed partials.
//!
//! For the Gaussian barrier,
//!
//! ```text
//! H = p²/2m + ħω/4 + α V0 exp(-α² k x²),      α = (1 + 2kσx²)^{-1/2},
//! ```
//!
//! which is the Gaussian smoothing of `V0 exp(-k x²)` by the coherent-state
//! position density (variance `σx²`). Since `x = σx (z + z̄)` and
//! `p = -iσp (z - z̄)`, a potential term depending on `x` alone has
//! `∂^{a+b}/∂z̄^a∂z^b = σx^{a+b} d^{a+b}/dx^{a+b}`; its x-derivatives come from the
//! Hermite recurrence. The kinetic term is quadratic in `z, z̄`, so it only
//! contributes to orders `a + b ≤ 2`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::phase_space::{PhaseSpaceConfig, Potential};
use crate::real::{lit, Real};

/// Averaged Hamiltonian for one configuration.
#[derive(Clone, Debug)]
pub struct AveragedHamiltonian<T> {
    potential: Potential,
    hbar: T,
    mass: T,
    omega: T,
    sigma_x: T,
    sigma_p: T,
    v0: T,
    alpha: T,
    rate: T,
    max_order: usize,
    factorials: Vec<T>,
}

/// `σx^j d^j U/dx^j` for `j = 0..=max_order` at one coordinate, where `U` is
/// the averaged potential. One table serves every node of a window column.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialTable<T> {
    pub x: T,
    scaled: Vec<T>,
}

impl<T: Real> PartialTable<T> {
    pub fn scaled_derivative(&self, j: usize) -> T {
        self.scaled.get(j).copied().unwrap_or_else(T::zero)
    }
}

/// One `(l, k)` term of the resummed current: `(-1)^k/(k+l)! ∂^{2k+l}H/∂z̄^{k+l}∂z^k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpansionTerm<T> {
    pub l: usize,
    pub k: usize,
    pub coefficient: Complex<T>,
}

impl<T: Real> AveragedHamiltonian<T> {
    /// Supports partials up to the total order `2(N + 1)` requested by a
    /// current truncated at order `N = cfg.trunc_order()`.
    pub fn new(cfg: &PhaseSpaceConfig<T>) -> Self {
        Self::with_max_order(cfg, 2 * (cfg.trunc_order() + 1))
    }

    pub fn with_max_order(cfg: &PhaseSpaceConfig<T>, max_order: usize) -> Self {
        let two = lit::<T>(2.0);
        let alpha = (T::one() + two * cfg.k() * cfg.sigma_x() * cfg.sigma_x()).sqrt().recip();
        let mut factorials = vec![T::one(); max_order + 2];
        for n in 1..factorials.len() {
            factorials[n] = factorials[n - 1] * T::from_usize_lossy(n);
        }
        Self {
            potential: cfg.potential(),
            hbar: cfg.hbar(),
            mass: cfg.mass(),
            omega: cfg.omega(),
            sigma_x: cfg.sigma_x(),
            sigma_p: cfg.sigma_p(),
            v0: cfg.v0(),
            alpha,
            rate: alpha * alpha * cfg.k(),
            max_order,
            factorials,
        }
    }

    /// Smoothing factor `α = (1 + 2kσx²)^{-1/2}`.
    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn hbar(&self) -> T {
        self.hbar
    }

    pub fn potential(&self) -> Potential {
        self.potential
    }

    fn xp(&self, z: Complex<T>) -> (T, T) {
        let two = lit::<T>(2.0);
        (two * self.sigma_x * z.re, two * self.sigma_p * z.im)
    }

    fn zero_point(&self) -> T {
        self.hbar * self.omega * lit(0.25)
    }

    /// `H(z̄, z)`; real for every `z`.
    pub fn value(&self, z: Complex<T>) -> T {
        let (x, p) = self.xp(z);
        let kinetic = p * p / (lit::<T>(2.0) * self.mass) + self.zero_point();
        match self.potential {
            Potential::Free => kinetic,
            Potential::GaussianBarrier => {
                kinetic + self.alpha * self.v0 * (-self.rate * x * x).exp()
            }
            Potential::Harmonic => self.hbar * self.omega * (z.norm_sqr() + lit(0.5)),
        }
    }

    /// Derivative table of the averaged potential at coordinate `x`.
    pub fn table(&self, x: T) -> PartialTable<T> {
        let n = self.max_order;
        let scaled = match self.potential {
            Potential::GaussianBarrier => {
                // h_j = (-s)^j H_j(u) with s = σx√rate, u = √rate x, so that
                // σx^j d^j/dx^j e^{-rate x²} = h_j e^{-rate x²}.
                let s = self.sigma_x * self.rate.sqrt();
                let su = self.sigma_x * self.rate * x;
                let two = lit::<T>(2.0);
                let envelope = self.alpha * self.v0 * (-self.rate * x * x).exp();
                let mut h = Vec::with_capacity(n + 1);
                h.push(T::one());
                if n >= 1 {
                    h.push(-two * su);
                }
                for j in 1..n {
                    let next = -two * su * h[j] - two * T::from_usize_lossy(j) * s * s * h[j - 1];
                    h.push(next);
                }
                h.into_iter().map(|v| v * envelope).collect()
            }
            Potential::Free | Potential::Harmonic => Vec::new(),
        };
        PartialTable { x, scaled }
    }

    /// `∂^{a+b} H / ∂z̄^a ∂z^b` at `z`.
    pub fn mixed_partial(&self, z: Complex<T>, a: usize, b: usize) -> Result<Complex<T>> {
        let (x, _) = self.xp(z);
        self.partial_with(&self.table(x), z, a, b)
    }

    /// Same as [`Self::mixed_partial`] with a precomputed table for `z`'s coordinate.
    pub fn partial_with(
        &self,
        table: &PartialTable<T>,
        z: Complex<T>,
        a: usize,
        b: usize,
    ) -> Result<Complex<T>> {
        if a + b > self.max_order {
            return Err(Error::UnsupportedOrder { a, b, max: self.max_order });
        }
        Ok(self.partial_unchecked(table, z, a, b))
    }

    fn partial_unchecked(
        &self,
        table: &PartialTable<T>,
        z: Complex<T>,
        a: usize,
        b: usize,
    ) -> Complex<T> {
        let zero = Complex::new(T::zero(), T::zero());
        if self.potential == Potential::Harmonic {
            let hw = self.hbar * self.omega;
            return match (a, b) {
                (0, 0) => Complex::new(self.value(z), T::zero()),
                (1, 0) => z * hw,
                (0, 1) => z.conj() * hw,
                (1, 1) => Complex::new(hw, T::zero()),
                _ => zero,
            };
        }
        let c = self.sigma_p * self.sigma_p / self.mass;
        let dz = z - z.conj();
        let kinetic = match (a, b) {
            (0, 0) => {
                let (_, p) = self.xp(z);
                Complex::new(p * p / (lit::<T>(2.0) * self.mass) + self.zero_point(), T::zero())
            }
            (1, 0) => dz * c,
            (0, 1) => -dz * c,
            (2, 0) | (0, 2) => Complex::new(-c, T::zero()),
            (1, 1) => Complex::new(c, T::zero()),
            _ => zero,
        };
        kinetic + Complex::new(table.scaled_derivative(a + b), T::zero())
    }

    /// Coefficients of the current expansion for all `(l, k)` with `l ≥ 1`,
    /// `k ≥ 0`, `l + k ≤ n + 1`, ordered by `ħ` order `l + k - 1` then `l`.
    pub fn expansion_terms(
        &self,
        table: &PartialTable<T>,
        z: Complex<T>,
        n: usize,
    ) -> Result<Vec<ExpansionTerm<T>>> {
        let need = 2 * (n + 1) - 1;
        if need > self.max_order {
            return Err(Error::UnsupportedOrder { a: n + 1, b: n, max: self.max_order });
        }
        let mut out = Vec::with_capacity((n + 1) * (n + 2) / 2);
        for order in 0..=n {
            for l in 1..=order + 1 {
                let k = order + 1 - l;
                let sign = if k % 2 == 0 { T::one() } else { -T::one() };
                let d = self.partial_unchecked(table, z, k + l, k);
                out.push(ExpansionTerm { l, k, coefficient: d * (sign / self.factorials[k + l]) });
            }
        }
        Ok(out)
    }
}
