//! Husimi amplitude, density and z-derivative stacks from a sampled wavefunction.
//!
//! The amplitude is the quadrature `⟨z|ψ⟩ = ∫ conj(⟨x|z⟩) ψ(x) dx`. Writing the
//! pure-state density as `Q = e^{-z̄z} θ(z̄) θ̄(z)`, the current needs the
//! z-derivatives `D_m = ∂^m/∂z^m [e^{-z̄z} θ̄(z)]`. The z-dependence of the
//! kernel is an explicit Gaussian, and differentiating under the integral gives
//!
//! ```text
//! D_m = e^{-|z|²/2} ∫ ⟨x|z⟩ conj(ψ(x)) He_m((x - xc)/σx) dx
//! ```
//!
//! with `He_m` the probabilists' Hermite polynomials. The stack stores the
//! integral without the `e^{-|z|²/2}` prefactor (it underflows far from the
//! origin), so `θ(z̄) D_m = amplitude · stack[m]` and `∂^m Q/∂z^m` is exactly
//! that product.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::phase_space::PhaseSpaceConfig;
use crate::propagator::WavefunctionGrid;
use crate::real::{lit, Real};

/// Rectangular grid of phase-space nodes, `nx` along `x` and `np` along `p`,
/// both ends included.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSpaceWindow<T> {
    pub x_lo: T,
    pub x_hi: T,
    pub p_lo: T,
    pub p_hi: T,
    pub nx: usize,
    pub np: usize,
}

impl<T: Real> PhaseSpaceWindow<T> {
    pub fn new(x_lo: T, x_hi: T, p_lo: T, p_hi: T, nx: usize, np: usize) -> Result<Self> {
        if nx < 2 || np < 2 {
            return Err(Error::InvalidConfig("window needs at least 2 nodes per axis".into()));
        }
        if !(x_lo < x_hi && p_lo < p_hi) {
            return Err(Error::InvalidConfig("window bounds must be increasing".into()));
        }
        Ok(Self { x_lo, x_hi, p_lo, p_hi, nx, np })
    }

    pub fn len(&self) -> usize {
        self.nx * self.np
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_x(&self) -> T {
        (self.x_hi - self.x_lo) / T::from_usize_lossy(self.nx - 1)
    }

    pub fn cell_p(&self) -> T {
        (self.p_hi - self.p_lo) / T::from_usize_lossy(self.np - 1)
    }

    #[inline]
    pub fn x(&self, i: usize) -> T {
        self.x_lo + self.cell_x() * T::from_usize_lossy(i)
    }

    #[inline]
    pub fn p(&self, j: usize) -> T {
        self.p_lo + self.cell_p() * T::from_usize_lossy(j)
    }

    /// Flat index, `x` fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn contains(&self, x: T, p: T) -> bool {
        x >= self.x_lo && x <= self.x_hi && p >= self.p_lo && p <= self.p_hi
    }

    /// The same grid shifted by fractions of a cell.
    pub fn jittered(&self, frac_x: T, frac_p: T) -> Self {
        let sx = self.cell_x() * frac_x;
        let sp = self.cell_p() * frac_p;
        Self {
            x_lo: self.x_lo + sx,
            x_hi: self.x_hi + sx,
            p_lo: self.p_lo + sp,
            p_hi: self.p_hi + sp,
            ..*self
        }
    }

    /// Node spacing expressed as `|Δz|` along each axis.
    pub fn cell_z(&self, cfg: &PhaseSpaceConfig<T>) -> (T, T) {
        let half = lit::<T>(0.5);
        (half * self.cell_x() / cfg.sigma_x(), half * self.cell_p() / cfg.sigma_p())
    }
}

/// Half-width, in units of `σx`, beyond which `e^{-u²/4} |He_m(u)|` is negligible
/// for every `m ≤ depth`.
fn kernel_half_width(depth: usize) -> f64 {
    let d = depth as f64;
    2.0 * (40.0 + d * (4.0 + d).ln()).sqrt()
}

/// Pointwise evaluation of the amplitude and derivative stack.
#[derive(Clone, Copy)]
pub struct HusimiSampler<'a, T: Real> {
    psi: &'a WavefunctionGrid<T>,
    cfg: &'a PhaseSpaceConfig<T>,
}

impl<'a, T: Real> HusimiSampler<'a, T> {
    pub fn new(psi: &'a WavefunctionGrid<T>, cfg: &'a PhaseSpaceConfig<T>) -> Self {
        Self { psi, cfg }
    }

    pub fn config(&self) -> &'a PhaseSpaceConfig<T> {
        self.cfg
    }

    pub fn wavefunction(&self) -> &'a WavefunctionGrid<T> {
        self.psi
    }

    /// Normalized stack `B_m = e^{|z|²/2} D_m` for `m = 0..=max_order`.
    /// `conj(B_0)` is the amplitude `⟨z|ψ⟩`.
    pub fn stack(&self, z: Complex<T>, max_order: usize) -> Vec<Complex<T>> {
        let cfg = self.cfg;
        let (xc, pc) = cfg.xp_from_z(z);
        let sx = cfg.sigma_x();
        let w = lit::<T>(kernel_half_width(max_order)) * sx;
        let (lo, hi) = support(self.psi, xc - w, xc + w);
        let quarter = lit::<T>(0.25);
        let norm = cfg.kernel_norm() * self.psi.dx;
        let mut acc = vec![Complex::new(T::zero(), T::zero()); max_order + 1];
        let mut he = vec![T::zero(); max_order + 1];
        for n in lo..hi {
            let x = self.psi.x(n);
            let d = (x - xc) / sx;
            let g = norm * (-quarter * d * d).exp();
            let phase = pc * (x - xc * lit(0.5)) / cfg.hbar();
            let term = self.psi.samples[n].conj() * Complex::from_polar(g, phase);
            hermite_prob(d, &mut he);
            for (a, h) in acc.iter_mut().zip(&he) {
                *a = *a + term * *h;
            }
        }
        acc
    }

    /// `⟨z|ψ⟩`.
    pub fn amplitude(&self, z: Complex<T>) -> Complex<T> {
        self.stack(z, 0)[0].conj()
    }
}

/// Grid indices whose coordinate lies in `[a, b]`, clipped to the grid.
fn support<T: Real>(psi: &WavefunctionGrid<T>, a: T, b: T) -> (usize, usize) {
    let n = psi.len() as isize;
    let lo = ((a - psi.x_min) / psi.dx).ceil().to_isize().unwrap_or(0).clamp(0, n);
    let hi = ((b - psi.x_min) / psi.dx).floor().to_isize().unwrap_or(n).clamp(-1, n - 1) + 1;
    (lo as usize, (hi.max(lo)) as usize)
}

/// Fills `out[m] = He_m(u)`.
#[inline]
fn hermite_prob<T: Real>(u: T, out: &mut [T]) {
    if out.is_empty() {
        return;
    }
    out[0] = T::one();
    if out.len() > 1 {
        out[1] = u;
    }
    for m in 1..out.len().saturating_sub(1) {
        out[m + 1] = u * out[m] - T::from_usize_lossy(m) * out[m - 1];
    }
}

/// `⟨z|ψ⟩` by quadrature of the coherent kernel against `ψ`.
pub fn husimi_amplitude<T: Real>(
    psi: &WavefunctionGrid<T>,
    z: Complex<T>,
    cfg: &PhaseSpaceConfig<T>,
) -> Complex<T> {
    HusimiSampler::new(psi, cfg).amplitude(z)
}

/// Normalized derivative stack `B_0..=B_max_order` at a single point; see the module docs.
pub fn amplitude_z_derivatives<T: Real>(
    psi: &WavefunctionGrid<T>,
    z: Complex<T>,
    max_order: usize,
    cfg: &PhaseSpaceConfig<T>,
) -> Vec<Complex<T>> {
    HusimiSampler::new(psi, cfg).stack(z, max_order)
}

/// Husimi amplitude, density and derivative stack on a window.
#[derive(Clone, Debug)]
pub struct HusimiField<T> {
    pub window: PhaseSpaceWindow<T>,
    /// `⟨z|ψ⟩` per node.
    pub amplitude: Vec<Complex<T>>,
    /// `Q = |⟨z|ψ⟩|²`.
    pub density: Vec<T>,
    /// `deriv_stack[m][node] = e^{|z|²/2} D_m`, `m = 0..=depth`.
    pub deriv_stack: Vec<Vec<Complex<T>>>,
    pub time: T,
    /// Largest fraction of kernel weight that fell outside the coordinate grid.
    pub clipped_mass: T,
}

impl<T: Real> HusimiField<T> {
    pub fn depth(&self) -> usize {
        self.deriv_stack.len().saturating_sub(1)
    }

    pub fn max_density(&self) -> T {
        self.density.iter().copied().fold(T::zero(), T::max)
    }

    /// `Σ Q dx dp / 2πħ` over the window.
    pub fn normalization(&self, hbar: T) -> T {
        let area = self.window.cell_x() * self.window.cell_p();
        self.density.iter().copied().sum::<T>() * area / (T::TAU() * hbar)
    }

    /// Fraction of the window's density at `x > x_cut`.
    pub fn mass_fraction_beyond(&self, x_cut: T) -> T {
        let (mut right, mut total) = (T::zero(), T::zero());
        for (idx, &q) in self.density.iter().enumerate() {
            let (i, _) = self.window.coords(idx);
            total = total + q;
            if self.window.x(i) > x_cut {
                right = right + q;
            }
        }
        right / total
    }

    /// `log10 Q` with the floor `max(Q)·1e-16`.
    pub fn log_density(&self) -> Vec<T> {
        let floor = self.max_density() * lit(1e-16);
        self.density.iter().map(|&q| q.max(floor).log10()).collect()
    }

    /// Node with the largest density.
    pub fn argmax(&self) -> usize {
        self.density
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |best, (i, &q)| if q > best.1 { (i, q) } else { best })
            .0
    }
}

/// Computes the Husimi field of `psi` on `window` with a derivative stack of
/// depth `cfg.trunc_order()`. Rows of constant `p` are evaluated in parallel.
pub fn husimi_field<T: Real>(
    psi: &WavefunctionGrid<T>,
    window: &PhaseSpaceWindow<T>,
    cfg: &PhaseSpaceConfig<T>,
) -> Result<HusimiField<T>> {
    husimi_field_with_depth(psi, window, cfg, cfg.trunc_order())
}

pub fn husimi_field_with_depth<T: Real>(
    psi: &WavefunctionGrid<T>,
    window: &PhaseSpaceWindow<T>,
    cfg: &PhaseSpaceConfig<T>,
    depth: usize,
) -> Result<HusimiField<T>> {
    if psi.len() != cfg.grid_len() {
        return Err(Error::InvalidConfig("wavefunction does not match the configured grid".into()));
    }
    let sx = cfg.sigma_x();
    let hbar = cfg.hbar();
    let width = lit::<T>(kernel_half_width(depth)) * sx;
    let stride = depth + 1;
    let quarter = lit::<T>(0.25);
    let norm = cfg.kernel_norm() * psi.dx;

    struct Column<T> {
        lo: usize,
        weights: Vec<T>,
    }
    let mut clipped = T::zero();
    let columns: Vec<Column<T>> = (0..window.nx)
        .map(|i| {
            let xc = window.x(i);
            let (lo, hi) = support(psi, xc - width, xc + width);
            let mut weights = Vec::with_capacity((hi - lo) * stride);
            let mut he = vec![T::zero(); stride];
            for n in lo..hi {
                let d = (psi.x(n) - xc) / sx;
                let g = norm * (-quarter * d * d).exp();
                hermite_prob(d, &mut he);
                weights.extend(he.iter().map(|&h| h * g));
            }
            // |⟨x|z⟩|² is a Gaussian of width σx; bound the weight lost past the grid ends.
            let inside = (xc - psi.x_min).min(psi.x(psi.len() - 1) - xc);
            let lost = if inside > width {
                T::zero()
            } else {
                let u = inside / sx;
                (-lit::<T>(0.5) * u * u).exp()
            };
            clipped = clipped.max(lost);
            Column { lo, weights }
        })
        .collect();
    if clipped > lit(1e-10) {
        log::warn!("Husimi kernel clipped by the grid edge: lost weight up to {clipped:e}");
    }

    let lo_all = columns.iter().map(|c| c.lo).min().unwrap_or(0);
    let hi_all = columns.iter().map(|c| c.lo + c.weights.len() / stride).max().unwrap_or(0);

    let rows: Vec<Vec<Complex<T>>> = (0..window.np)
        .into_par_iter()
        .map(|j| {
            let p = window.p(j);
            let rotated: Vec<Complex<T>> = (lo_all..hi_all)
                .map(|n| psi.samples[n].conj() * Complex::from_polar(T::one(), p * psi.x(n) / hbar))
                .collect();
            let mut out = vec![Complex::new(T::zero(), T::zero()); window.nx * stride];
            for (i, col) in columns.iter().enumerate() {
                let acc = &mut out[i * stride..(i + 1) * stride];
                let count = col.weights.len() / stride;
                let base = col.lo - lo_all;
                for (u, w) in rotated[base..base + count].iter().zip(col.weights.chunks_exact(stride)) {
                    for (a, &wm) in acc.iter_mut().zip(w) {
                        a.re = a.re + u.re * wm;
                        a.im = a.im + u.im * wm;
                    }
                }
                let shift = Complex::from_polar(T::one(), -p * window.x(i) * lit(0.5) / hbar);
                for a in acc.iter_mut() {
                    *a = *a * shift;
                }
            }
            out
        })
        .collect();

    let n = window.len();
    let mut deriv_stack = vec![Vec::with_capacity(n); stride];
    for row in &rows {
        for node in row.chunks_exact(stride) {
            for (m, v) in node.iter().enumerate() {
                deriv_stack[m].push(*v);
            }
        }
    }
    let amplitude: Vec<_> = deriv_stack[0].iter().map(|b| b.conj()).collect();
    let density = amplitude.iter().map(|a| a.norm_sqr()).collect();
    Ok(HusimiField {
        window: *window,
        amplitude,
        density,
        deriv_stack,
        time: psi.time,
        clipped_mass: clipped,
    })
}

/// Reproducibility of a zero under grid refinement and window jitter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stability {
    Unchecked,
    Stable,
    Unstable,
}

/// A refined zero of the analytic factor `θ̄(z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HusimiZero<T> {
    pub z: Complex<T>,
    pub x: T,
    pub p: T,
    /// `|⟨z|ψ⟩| / max_window |⟨z|ψ⟩|` at the refined point.
    pub residual: T,
    pub iterations: usize,
    pub stability: Stability,
}

/// A seed that did not converge within the iteration budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroCandidate<T> {
    pub seed: Complex<T>,
    pub last: Complex<T>,
    pub residual: T,
}

#[derive(Clone, Debug, Default)]
pub struct ZeroSearch<T> {
    pub zeros: Vec<HusimiZero<T>>,
    pub unconverged: Vec<ZeroCandidate<T>>,
}

#[derive(Clone, Copy, Debug)]
pub struct ZeroOptions<T> {
    /// Converged when `|θ̄| < tol · max_window |θ̄|` (measured on the normalized amplitude).
    pub tol: T,
    pub max_iter: usize,
    /// Seeds are only taken where the local density maximum exceeds `mask · max(Q)`.
    pub mask: T,
}

impl<T: Real> Default for ZeroOptions<T> {
    fn default() -> Self {
        Self { tol: lit(1e-10), max_iter: 50, mask: lit(1e-12) }
    }
}

/// Locates the zeros of `θ̄(z)` inside the field's window.
///
/// Seeds are strict local minima over the 8-neighbourhood of `Q` and, when the
/// field carries a first-order stack, of `|B_0 / B_1| = Q / |∂Q/∂z|` (kept only
/// below two cells), which behaves like `|z - z_k|` next to a simple zero and
/// has no interior minimum for a Gaussian. The second set catches
/// zeros on steep density flanks, where the envelope hides the dip in `Q`. Each is
/// refined by Newton steps `z ← z − B_0/B_1`, i.e. Newton on `e^{-ζ z̄} θ̄(ζ)`
/// re-centred at every iterate. It has the zeros of `θ̄` but not its large
/// exponential factor, which otherwise fixes the step near `1/|z̄_0|` in one
/// direction. The first step uses the field's stored stack, later steps the
/// pointwise sampler.
/// Duplicates closer than half a cell keep the smaller residual.
pub fn find_zeros<T: Real>(
    field: &HusimiField<T>,
    sampler: &HusimiSampler<'_, T>,
    opts: &ZeroOptions<T>,
) -> ZeroSearch<T> {
    let w = &field.window;
    let cfg = sampler.config();
    let max_q = field.max_density();
    let max_amp = max_q.sqrt();
    if max_q <= T::zero() {
        return ZeroSearch::default();
    }
    let (czx, czp) = w.cell_z(cfg);
    let max_step = lit::<T>(2.0) * czx.max(czp);
    let step_len: Option<Vec<T>> = (field.depth() >= 1).then(|| {
        (0..w.len())
            .map(|idx| {
                let d = field.deriv_stack[1][idx].norm();
                if d > T::zero() { field.deriv_stack[0][idx].norm() / d } else { T::infinity() }
            })
            .collect()
    });
    let newton_min = |i: usize, j: usize| {
        step_len.as_ref().is_some_and(|d| {
            let v = d[w.index(i, j)];
            v < max_step
                && (-1i64..=1).all(|dj| {
                    (-1i64..=1).all(|di| {
                        (di, dj) == (0, 0) || d[w.index((i as i64 + di) as usize, (j as i64 + dj) as usize)] > v
                    })
                })
        })
    };

    let mut seeds = Vec::new();
    for j in 1..w.np - 1 {
        for i in 1..w.nx - 1 {
            let q = field.density[w.index(i, j)];
            let mut is_min = true;
            let mut local_max = q;
            for dj in -2i64..=2 {
                for di in -2i64..=2 {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii < 0 || jj < 0 || ii >= w.nx as i64 || jj >= w.np as i64 {
                        continue;
                    }
                    let qn = field.density[w.index(ii as usize, jj as usize)];
                    local_max = local_max.max(qn);
                    if di.abs() <= 1 && dj.abs() <= 1 && (di, dj) != (0, 0) && qn <= q {
                        is_min = false;
                    }
                }
            }
            if (is_min || newton_min(i, j)) && local_max >= opts.mask * max_q {
                seeds.push(w.index(i, j));
            }
        }
    }

    let results: Vec<std::result::Result<HusimiZero<T>, ZeroCandidate<T>>> = seeds
        .par_iter()
        .map(|&idx| {
            let (i, j) = w.coords(idx);
            let seed = cfg.z_from_xp(w.x(i), w.p(j));
            let mut z = seed;
            let (mut b0, mut b1) = (field.deriv_stack[0][idx], field.deriv_stack[1.min(field.depth())][idx]);
            if field.depth() == 0 {
                let s = sampler.stack(z, 1);
                b1 = s[1];
            }
            let mut residual = b0.norm() / max_amp;
            for it in 0..opts.max_iter {
                if residual < opts.tol {
                    let (x, p) = cfg.xp_from_z(z);
                    return Ok(HusimiZero { z, x, p, residual, iterations: it, stability: Stability::Unchecked });
                }
                if b1.norm() == T::zero() {
                    break;
                }
                let mut step = b0 / b1;
                let len = step.norm();
                if len > max_step {
                    step = step * (max_step / len);
                }
                z = z - step;
                let s = sampler.stack(z, 1);
                b0 = s[0];
                b1 = s[1];
                residual = b0.norm() / max_amp;
            }
            if residual < opts.tol {
                let (x, p) = cfg.xp_from_z(z);
                return Ok(HusimiZero { z, x, p, residual, iterations: opts.max_iter, stability: Stability::Unchecked });
            }
            Err(ZeroCandidate { seed, last: z, residual })
        })
        .collect();

    let mut found = Vec::new();
    let mut unconverged = Vec::new();
    for r in results {
        match r {
            Ok(zero) if w.contains(zero.x, zero.p) => found.push(zero),
            Ok(_) => {}
            Err(c) => unconverged.push(c),
        }
    }
    found.sort_by(|a, b| a.residual.total_cmp(&b.residual));
    let half = lit::<T>(0.5);
    let mut zeros: Vec<HusimiZero<T>> = Vec::new();
    for cand in found {
        let dup = zeros.iter().any(|z| {
            (z.x - cand.x).abs() < half * w.cell_x() && (z.p - cand.p).abs() < half * w.cell_p()
        });
        if !dup {
            zeros.push(cand);
        }
    }
    zeros.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.p.total_cmp(&b.p)));
    ZeroSearch { zeros, unconverged }
}

/// Marks each zero stable when every reference set holds a zero within
/// `(tol_x, tol_p)` of it, unstable otherwise.
pub fn mark_stability<T: Real>(
    zeros: &mut [HusimiZero<T>],
    references: &[&[HusimiZero<T>]],
    tol_x: T,
    tol_p: T,
) {
    for z in zeros.iter_mut() {
        let ok = references.iter().all(|set| {
            set.iter().any(|r| (r.x - z.x).abs() <= tol_x && (r.p - z.p).abs() <= tol_p)
        });
        z.stability = if ok { Stability::Stable } else { Stability::Unstable };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::{GridSpec, Physics, Potential};
    use crate::propagator::initial_coherent_state;

    fn cfg() -> PhaseSpaceConfig<f64> {
        PhaseSpaceConfig::new(
            Physics { hbar: 0.01, mass: 1.0, omega: 1.0, v0: 2.0, k: 3.0, potential: Potential::Free },
            GridSpec { x_min: -3.0, x_max: 3.0, dx: 0.005, dt: 0.01 },
            4,
        )
        .unwrap()
    }

    #[test]
    fn hermite_values() {
        let mut h = [0.0; 5];
        hermite_prob(2.0, &mut h);
        assert_eq!(h, [1.0, 2.0, 3.0, 2.0, -5.0]);
    }

    #[test]
    fn window_geometry() {
        let w = PhaseSpaceWindow::new(-1.0, 1.0, 0.0, 2.0, 5, 3).unwrap();
        assert_eq!(w.cell_x(), 0.5);
        assert_eq!(w.cell_p(), 1.0);
        assert_eq!(w.coords(w.index(3, 2)), (3, 2));
        assert!(PhaseSpaceWindow::new(-1.0, 1.0, 0.0, 2.0, 1, 3).is_err());
        let j = w.jittered(0.5, 0.0);
        assert_eq!(j.x_lo, -0.75);
    }

    #[test]
    fn field_matches_pointwise_sampler() {
        let c = cfg();
        let psi = initial_coherent_state(0.1, 0.3, &c).unwrap();
        let w = PhaseSpaceWindow::new(-0.2, 0.4, 0.0, 0.6, 7, 5).unwrap();
        let field = husimi_field(&psi, &w, &c).unwrap();
        let s = HusimiSampler::new(&psi, &c);
        for idx in [0, 9, 17, 34] {
            let (i, j) = w.coords(idx);
            let stack = s.stack(c.z_from_xp(w.x(i), w.p(j)), 4);
            for m in 0..=4 {
                let diff = (stack[m] - field.deriv_stack[m][idx]).norm();
                assert!(diff < 1e-12 * (1.0 + stack[m].norm()), "m={m} diff={diff}");
            }
        }
    }

    #[test]
    fn density_is_non_negative_and_peaks_at_centre() {
        let c = cfg();
        let psi = initial_coherent_state(0.1, 0.3, &c).unwrap();
        let w = PhaseSpaceWindow::new(-0.5, 0.7, -0.3, 0.9, 25, 25).unwrap();
        let field = husimi_field(&psi, &w, &c).unwrap();
        assert!(field.density.iter().all(|&q| q >= 0.0));
        let (i, j) = w.coords(field.argmax());
        assert!((w.x(i) - 0.1).abs() <= w.cell_x() / 2.0 + 1e-12);
        assert!((w.p(j) - 0.3).abs() <= w.cell_p() / 2.0 + 1e-12);
    }

    #[test]
    fn stability_marks() {
        let z = |x: f64, p: f64| HusimiZero {
            z: Complex::new(x, p),
            x,
            p,
            residual: 0.0,
            iterations: 0,
            stability: Stability::Unchecked,
        };
        let mut zs = vec![z(0.0, 0.0), z(1.0, 1.0)];
        let refs = vec![z(0.01, -0.01)];
        mark_stability(&mut zs, &[&refs], 0.02, 0.02);
        assert_eq!(zs[0].stability, Stability::Stable);
        assert_eq!(zs[1].stability, Stability::Unstable);
    }
}
