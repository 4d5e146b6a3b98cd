//! Phase-space probability current of the Husimi density.
//!
//! The quantum current is the resummed expansion
//!
//! ```text
//! J = (1/iħ) Σ_{l≥1} ∂^{l-1}Q/∂z^{l-1} Σ_{k≥0} (-1)^k/(k+l)! ∂^{2k+l}H/∂z̄^{k+l}∂z^k
//! ```
//!
//! truncated to the terms with `l + k ≤ N + 1`; the terms with `l + k = n + 1`
//! form the `ħ^n` component. With `∂^{l-1}Q/∂z^{l-1} = amplitude · B_{l-1}` the
//! current factorizes as `J = amplitude · F / iħ`, where
//! `F = Σ_l B_{l-1} c_l` vanishes exactly at the non-trivial stagnation points.
//! `J` and `J̄` act as `(Jx, Jp) = (2σx Re J, 2σp Im J)` in the `(x, p)` plane.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::{AveragedHamiltonian, PartialTable};
use crate::husimi::{HusimiField, HusimiSampler, PhaseSpaceWindow};
use crate::phase_space::PhaseSpaceConfig;
use crate::real::{lit, Real};

#[derive(Clone, Debug)]
pub struct CurrentField<T> {
    pub window: PhaseSpaceWindow<T>,
    pub current: Vec<Complex<T>>,
    /// `F = iħ J / ⟨z|ψ⟩`; zero at non-trivial stagnation points.
    pub reduced: Vec<Complex<T>>,
    pub trunc_order: usize,
    /// `components[n][node]` is the `ħ^n` part of the current, when retained.
    pub components: Option<Vec<Vec<Complex<T>>>>,
    pub time: T,
}

impl<T: Real> CurrentField<T> {
    pub fn max_norm(&self) -> T {
        self.current.iter().map(|j| j.norm()).fold(T::zero(), T::max)
    }

    /// RMS over the window of each retained order component.
    pub fn component_norms(&self) -> Option<Vec<T>> {
        let n = T::from_usize_lossy(self.current.len());
        self.components.as_ref().map(|comps| {
            comps
                .iter()
                .map(|c| (c.iter().map(|v| v.norm_sqr()).sum::<T>() / n).sqrt())
                .collect()
        })
    }
}

/// Evaluates the truncated current at one node; returns `(J, F)` and fills
/// `orders[n]` with the `ħ^n` part when given.
fn node_current<T: Real>(
    ham: &AveragedHamiltonian<T>,
    table: &PartialTable<T>,
    z: Complex<T>,
    amplitude: Complex<T>,
    stack: impl Fn(usize) -> Complex<T>,
    n: usize,
    mut orders: Option<&mut [Complex<T>]>,
) -> Result<(Complex<T>, Complex<T>)> {
    let inv_i_hbar = Complex::new(T::zero(), -ham.hbar().recip());
    let zero = Complex::new(T::zero(), T::zero());
    let terms = ham.expansion_terms(table, z, n)?;
    let mut reduced = zero;
    let mut current = zero;
    let mut t = 0;
    for order in 0..=n {
        let mut part = zero;
        for _ in 0..=order {
            let term = &terms[t];
            part = part + stack(term.l - 1) * term.coefficient;
            t += 1;
        }
        reduced = reduced + part;
        let j = amplitude * part * inv_i_hbar;
        current = current + j;
        if let Some(o) = orders.as_deref_mut() {
            o[order] = j;
        }
    }
    Ok((current, reduced))
}

/// `J_cl = Q ∂H/∂z̄ / iħ`, the `l = 1, k = 0` term alone.
pub fn classical_current<T: Real>(
    field: &HusimiField<T>,
    ham: &AveragedHamiltonian<T>,
    cfg: &PhaseSpaceConfig<T>,
) -> CurrentField<T> {
    quantum_current(field, ham, cfg, 0, false).expect("order 0 is always available")
}

/// Quantum current truncated at `ħ^n`.
pub fn quantum_current<T: Real>(
    field: &HusimiField<T>,
    ham: &AveragedHamiltonian<T>,
    cfg: &PhaseSpaceConfig<T>,
    n: usize,
    keep_components: bool,
) -> Result<CurrentField<T>> {
    if field.depth() < n {
        return Err(Error::InsufficientDepth { have: field.depth(), need: n });
    }
    if 2 * n + 1 > ham.max_order() {
        return Err(Error::UnsupportedOrder { a: n + 1, b: n, max: ham.max_order() });
    }
    let w = field.window;
    let tables: Vec<_> = (0..w.nx).map(|i| ham.table(w.x(i))).collect();
    let rows: Vec<Result<Vec<(Complex<T>, Complex<T>, Vec<Complex<T>>)>>> = (0..w.np)
        .into_par_iter()
        .map(|j| {
            let mut row = Vec::with_capacity(w.nx);
            let mut orders = vec![Complex::new(T::zero(), T::zero()); n + 1];
            for (i, table) in tables.iter().enumerate() {
                let idx = w.index(i, j);
                let z = cfg.z_from_xp(w.x(i), w.p(j));
                let (current, reduced) = node_current(
                    ham,
                    table,
                    z,
                    field.amplitude[idx],
                    |m| field.deriv_stack[m][idx],
                    n,
                    keep_components.then_some(&mut orders[..]),
                )?;
                row.push((current, reduced, if keep_components { orders.clone() } else { Vec::new() }));
            }
            Ok(row)
        })
        .collect();

    let mut current = Vec::with_capacity(w.len());
    let mut reduced = Vec::with_capacity(w.len());
    let mut components = keep_components.then(|| vec![Vec::with_capacity(w.len()); n + 1]);
    for row in rows {
        for (j, f, orders) in row? {
            current.push(j);
            reduced.push(f);
            if let Some(c) = components.as_mut() {
                for (dst, v) in c.iter_mut().zip(orders) {
                    dst.push(v);
                }
            }
        }
    }
    Ok(CurrentField { window: w, current, reduced, trunc_order: n, components, time: field.time })
}

/// Pointwise current: re-evaluates the Husimi stack by quadrature at any `z`.
#[derive(Clone, Copy)]
pub struct CurrentSampler<'a, T: Real> {
    husimi: HusimiSampler<'a, T>,
    ham: &'a AveragedHamiltonian<T>,
    order: usize,
}

impl<'a, T: Real> CurrentSampler<'a, T> {
    pub fn new(husimi: HusimiSampler<'a, T>, ham: &'a AveragedHamiltonian<T>, order: usize) -> Self {
        Self { husimi, ham, order }
    }

    pub fn husimi(&self) -> &HusimiSampler<'a, T> {
        &self.husimi
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `(⟨z|ψ⟩, F, J)` at `z`.
    pub fn evaluate(&self, z: Complex<T>) -> (Complex<T>, Complex<T>, Complex<T>) {
        let cfg = self.husimi.config();
        let stack = self.husimi.stack(z, self.order);
        let amplitude = stack[0].conj();
        let (x, _) = cfg.xp_from_z(z);
        let table = self.ham.table(x);
        let (j, f) = node_current(self.ham, &table, z, amplitude, |m| stack[m], self.order, None)
            .expect("sampler order validated against the Hamiltonian");
        (amplitude, f, j)
    }

    pub fn current(&self, z: Complex<T>) -> Complex<T> {
        self.evaluate(z).2
    }

    pub fn reduced(&self, z: Complex<T>) -> Complex<T> {
        self.evaluate(z).1
    }
}

/// Continuity-equation diagnostic `r = ∂Q/∂t + ∂J/∂z + ∂J̄/∂z̄` on a window.
#[derive(Clone, Debug)]
pub struct ContinuityResidual<T> {
    pub window: PhaseSpaceWindow<T>,
    /// Signed residual per node; zero on the stencil margin.
    pub residual: Vec<T>,
    pub dq_dt: Vec<T>,
    pub divergence: Vec<T>,
    /// RMS over interior nodes.
    pub norm: T,
    pub dq_dt_norm: T,
    pub divergence_norm: T,
}

impl<T: Real> ContinuityResidual<T> {
    /// `norm / dq_dt_norm`.
    pub fn relative(&self) -> T {
        self.norm / self.dq_dt_norm
    }

    pub fn abs_field(&self) -> Vec<T> {
        self.residual.iter().map(|r| r.abs()).collect()
    }
}

/// Eighth-order central first-derivative weights for offsets 1..=4.
const STENCIL8: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
const MARGIN: usize = 4;

/// Residual of the continuity equation at the time of `current`, with
/// `∂Q/∂t` by central difference of `prev`/`next` taken `time_step` apart
/// from the central field and the divergence by an 8th-order stencil.
pub fn continuity_residual<T: Real>(
    prev: &HusimiField<T>,
    next: &HusimiField<T>,
    current: &CurrentField<T>,
    cfg: &PhaseSpaceConfig<T>,
    time_step: T,
) -> Result<ContinuityResidual<T>> {
    let w = current.window;
    if prev.window != w || next.window != w {
        return Err(Error::WindowMismatch);
    }
    if w.nx <= 2 * MARGIN || w.np <= 2 * MARGIN {
        return Err(Error::InvalidConfig("window too small for the divergence stencil".into()));
    }
    let two = lit::<T>(2.0);
    let cx = two * cfg.sigma_x() / w.cell_x();
    let cp = two * cfg.sigma_p() / w.cell_p();
    let weights: Vec<T> = STENCIL8.iter().map(|&c| lit(c)).collect();

    let mut residual = vec![T::zero(); w.len()];
    let mut dq_dt = vec![T::zero(); w.len()];
    let mut divergence = vec![T::zero(); w.len()];
    let (mut rr, mut qq, mut dd) = (T::zero(), T::zero(), T::zero());
    let mut count = 0usize;
    for j in MARGIN..w.np - MARGIN {
        for i in MARGIN..w.nx - MARGIN {
            let idx = w.index(i, j);
            let mut dx_re = T::zero();
            let mut dp_im = T::zero();
            for (o, &c) in weights.iter().enumerate() {
                let s = o + 1;
                dx_re = dx_re
                    + c * (current.current[w.index(i + s, j)].re - current.current[w.index(i - s, j)].re);
                dp_im = dp_im
                    + c * (current.current[w.index(i, j + s)].im - current.current[w.index(i, j - s)].im);
            }
            let div = cx * dx_re + cp * dp_im;
            let dq = (next.density[idx] - prev.density[idx]) / (two * time_step);
            let r = dq + div;
            residual[idx] = r;
            dq_dt[idx] = dq;
            divergence[idx] = div;
            rr = rr + r * r;
            qq = qq + dq * dq;
            dd = dd + div * div;
            count += 1;
        }
    }
    let n = T::from_usize_lossy(count);
    Ok(ContinuityResidual {
        window: w,
        residual,
        dq_dt,
        divergence,
        norm: (rr / n).sqrt(),
        dq_dt_norm: (qq / n).sqrt(),
        divergence_norm: (dd / n).sqrt(),
    })
}
