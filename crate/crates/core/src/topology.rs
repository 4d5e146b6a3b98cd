//! Stagnation points of a phase-space current: linearization, classification,
//! winding index and dipole pairing.
//!
//! Currents are complex fields `J(z)` with `z = a + ib`; the real flow is
//! `(Re J, Im J)` over `(a, b)`, which is `(Jx, Jp)` up to positive axis
//! scalings, so indices and eigenvalue signs carry over to the `(x, p)` plane.
//! The gradient matrix
//!
//! ```text
//! G = [[∂J/∂z, ∂J/∂z̄], [∂J̄/∂z, ∂J̄/∂z̄]]
//! ```
//!
//! is similar to the real Jacobian, so with `P = ∂J/∂z`, `R = ∂J/∂z̄` its
//! eigenvalues are `Re P ± sqrt(|R|² - (Im P)²)`.
//!
//! The winding index counts turns of `J` along a small loop. Going around
//! clockwise, one counterclockwise turn of `J` adds -1; this equals the usual
//! counterclockwise Poincaré index, so saddles carry -1 and nodes, spirals and
//! vortices +1.

use num_complex::Complex;
use rayon::prelude::*;

use crate::current::{CurrentField, CurrentSampler};
use crate::error::{Error, Result};
use crate::husimi::{HusimiField, HusimiZero, Stability};
use crate::real::{lit, Real};

/// A complex vector field on the `z` plane.
pub trait VectorField<T> {
    fn eval(&self, z: Complex<T>) -> Complex<T>;
}

impl<T, F> VectorField<T> for F
where
    F: Fn(Complex<T>) -> Complex<T>,
{
    fn eval(&self, z: Complex<T>) -> Complex<T> {
        self(z)
    }
}

impl<T: Real> VectorField<T> for CurrentSampler<'_, T> {
    fn eval(&self, z: Complex<T>) -> Complex<T> {
        self.current(z)
    }
}

/// Wirtinger gradient of a current at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientMatrix<T> {
    /// `∂J/∂z`
    pub dj_dz: Complex<T>,
    /// `∂J/∂z̄`
    pub dj_dzbar: Complex<T>,
}

impl<T: Real> GradientMatrix<T> {
    /// `[[∂J/∂z, ∂J/∂z̄], [∂J̄/∂z, ∂J̄/∂z̄]]`.
    pub fn matrix(&self) -> [[Complex<T>; 2]; 2] {
        [[self.dj_dz, self.dj_dzbar], [self.dj_dzbar.conj(), self.dj_dz.conj()]]
    }

    pub fn trace(&self) -> T {
        lit::<T>(2.0) * self.dj_dz.re
    }

    pub fn det(&self) -> T {
        self.dj_dz.norm_sqr() - self.dj_dzbar.norm_sqr()
    }

    /// Frobenius norm of `G`.
    pub fn norm(&self) -> T {
        (lit::<T>(2.0) * (self.dj_dz.norm_sqr() + self.dj_dzbar.norm_sqr())).sqrt()
    }

    /// `sqrt(|R|² - (Im P)²)` written as a complex number.
    fn half_gap(&self) -> Complex<T> {
        let disc = self.dj_dzbar.norm_sqr() - self.dj_dz.im * self.dj_dz.im;
        if disc >= T::zero() {
            Complex::new(disc.sqrt(), T::zero())
        } else {
            Complex::new(T::zero(), (-disc).sqrt())
        }
    }

    /// `[λ+, λ-]`.
    pub fn eigenvalues(&self) -> [Complex<T>; 2] {
        let centre = Complex::new(self.dj_dz.re, T::zero());
        let g = self.half_gap();
        [centre + g, centre - g]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientOptions<T> {
    /// Initial finite-difference step in `z` units.
    pub step: T,
    pub rel_tol: T,
    pub max_halvings: usize,
}

impl<T: Real> Default for GradientOptions<T> {
    fn default() -> Self {
        Self { step: lit(1e-3), rel_tol: lit(1e-6), max_halvings: 8 }
    }
}

/// Richardson-extrapolated central differences of `field` at `z0`.
pub fn gradient_matrix<T: Real, F: VectorField<T> + ?Sized>(
    field: &F,
    z0: Complex<T>,
    opts: &GradientOptions<T>,
) -> Result<GradientMatrix<T>> {
    match adapt_gradient(field, z0, opts) {
        (g, true) => Ok(g),
        (_, false) => Err(Error::StepAdaptation { re: z0.re.as_f64(), im: z0.im.as_f64() }),
    }
}

/// Step-halving loop behind [`gradient_matrix`]: the finest estimate and
/// whether two successive steps agreed to `rel_tol`.
fn adapt_gradient<T: Real, F: VectorField<T> + ?Sized>(
    field: &F,
    z0: Complex<T>,
    opts: &GradientOptions<T>,
) -> (GradientMatrix<T>, bool) {
    let two = lit::<T>(2.0);
    let central = |h: T| {
        let da = (field.eval(z0 + Complex::new(h, T::zero())) - field.eval(z0 - Complex::new(h, T::zero())))
            / (two * h);
        let db = (field.eval(z0 + Complex::new(T::zero(), h)) - field.eval(z0 - Complex::new(T::zero(), h)))
            / (two * h);
        (da, db)
    };
    let richardson = |h: T| {
        let (a1, b1) = central(h);
        let (a2, b2) = central(h / two);
        let four = lit::<T>(4.0);
        let three = lit::<T>(3.0);
        ((a2 * four - a1) / three, (b2 * four - b1) / three)
    };
    let wirtinger = |(da, db): (Complex<T>, Complex<T>)| {
        let i = Complex::new(T::zero(), T::one());
        let half = lit::<T>(0.5);
        GradientMatrix { dj_dz: (da - i * db) * half, dj_dzbar: (da + i * db) * half }
    };
    let mut h = opts.step;
    let mut coarse = richardson(h);
    for _ in 0..opts.max_halvings {
        let fine = richardson(h / two);
        let scale = fine.0.norm().max(fine.1.norm());
        let diff = (fine.0 - coarse.0).norm().max((fine.1 - coarse.1).norm());
        if diff <= opts.rel_tol * scale || scale == T::zero() {
            return (wirtinger(fine), true);
        }
        coarse = fine;
        h = h / two;
    }
    (wirtinger(coarse), false)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Classification {
    Saddle,
    AttractiveNode,
    RepulsiveNode,
    AttractiveSpiral,
    RepulsiveSpiral,
    Vortex,
}

impl Classification {
    /// Index implied by the eigenvalue structure.
    pub fn expected_index(self) -> i32 {
        match self {
            Classification::Saddle => -1,
            _ => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Classification::Saddle => "saddle",
            Classification::AttractiveNode => "attractive-node",
            Classification::RepulsiveNode => "repulsive-node",
            Classification::AttractiveSpiral => "attractive-spiral",
            Classification::RepulsiveSpiral => "repulsive-spiral",
            Classification::Vortex => "vortex",
        }
    }
}

/// Eigenvalues with the classification, `None` when degenerate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Linearization<T> {
    pub eigenvalues: [Complex<T>; 2],
    pub classification: Option<Classification>,
}

/// Classifies a gradient matrix. Real/imaginary discrimination and the
/// degeneracy test use `rel_threshold · ‖G‖`.
pub fn classify<T: Real>(g: &GradientMatrix<T>, rel_threshold: T) -> Linearization<T> {
    let eigenvalues = g.eigenvalues();
    let eps = rel_threshold * g.norm();
    let gap = g.half_gap();
    let centre = g.dj_dz.re;
    let degenerate = Linearization { eigenvalues, classification: None };
    if lit::<T>(2.0) * gap.norm() < eps || g.norm() == T::zero() {
        return degenerate;
    }
    let classification = if gap.im == T::zero() {
        let (l1, l2) = (eigenvalues[0].re, eigenvalues[1].re);
        if l1.abs() < eps || l2.abs() < eps {
            return degenerate;
        }
        if (l1 > T::zero()) != (l2 > T::zero()) {
            Classification::Saddle
        } else if l1 < T::zero() {
            Classification::AttractiveNode
        } else {
            Classification::RepulsiveNode
        }
    } else if centre.abs() < eps {
        Classification::Vortex
    } else if centre < T::zero() {
        Classification::AttractiveSpiral
    } else {
        Classification::RepulsiveSpiral
    };
    Linearization { eigenvalues, classification: Some(classification) }
}

/// Accumulated turning of `field` along the closed polygon `vertices`
/// (counterclockwise), in turns. Steps are refined until each angle change is
/// below a quarter turn. Fails if `|J| ≤ floor` anywhere sampled.
pub fn winding_along<T: Real, F: VectorField<T> + ?Sized>(
    field: &F,
    vertices: &[Complex<T>],
    samples_per_edge: usize,
    floor: T,
) -> Result<T> {
    let mut total = T::zero();
    let n = vertices.len();
    let samples = samples_per_edge.max(1);
    let bad = |z: Complex<T>| Error::WindingFloor { re: z.re.as_f64(), im: z.im.as_f64() };
    let start = vertices[0];
    let mut prev_z = start;
    let mut prev_v = field.eval(start);
    if prev_v.norm() <= floor {
        return Err(bad(start));
    }
    for e in 0..n {
        let a = vertices[e];
        let b = vertices[(e + 1) % n];
        for s in 1..=samples {
            let t = T::from_usize_lossy(s) / T::from_usize_lossy(samples);
            let z = a + (b - a) * t;
            let v = field.eval(z);
            if v.norm() <= floor {
                return Err(bad(z));
            }
            total = total + refine_turn(field, prev_z, prev_v, z, v, floor, 0)?;
            prev_z = z;
            prev_v = v;
        }
    }
    Ok(total / T::TAU())
}

fn refine_turn<T: Real, F: VectorField<T> + ?Sized>(
    field: &F,
    za: Complex<T>,
    va: Complex<T>,
    zb: Complex<T>,
    vb: Complex<T>,
    floor: T,
    depth: usize,
) -> Result<T> {
    let d = (vb / va).arg();
    if d.abs() < T::FRAC_PI_2() || depth >= 24 {
        return Ok(d);
    }
    let zm = (za + zb) * lit::<T>(0.5);
    let vm = field.eval(zm);
    if vm.norm() <= floor {
        return Err(Error::WindingFloor { re: zm.re.as_f64(), im: zm.im.as_f64() });
    }
    Ok(refine_turn(field, za, va, zm, vm, floor, depth + 1)?
        + refine_turn(field, zm, vm, zb, vb, floor, depth + 1)?)
}

/// Winding index of `field` around `z0` on a circle of `radius` (z units).
/// When `|J|` drops to `rel_floor` times its largest value on the loop (the
/// loop runs into another stagnation point) the radius is halved, up to
/// `retries` times. The floor is local because the current spans many decades
/// across a window.
pub fn winding_index<T: Real, F: VectorField<T> + ?Sized>(
    field: &F,
    z0: Complex<T>,
    radius: T,
    n_samples: usize,
    rel_floor: T,
    retries: usize,
) -> Result<i32> {
    let mut r = radius;
    let mut last = None;
    for _ in 0..=retries {
        let loop_pts: Vec<_> = (0..n_samples.max(3))
            .map(|s| {
                let phi = T::TAU() * T::from_usize_lossy(s) / T::from_usize_lossy(n_samples.max(3));
                z0 + Complex::from_polar(r, phi)
            })
            .collect();
        let peak = loop_pts.iter().map(|&z| field.eval(z).norm()).fold(T::zero(), T::max);
        match winding_along(field, &loop_pts, 1, rel_floor * peak) {
            Ok(w) => return Ok(w.round().to_i32().unwrap_or(0)),
            Err(e) => last = Some(e),
        }
        r = r * lit(0.5);
    }
    Err(last.unwrap_or(Error::WindingFloor { re: z0.re.as_f64(), im: z0.im.as_f64() }))
}

/// Which factor of `J = θ f` vanishes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointKind {
    /// Husimi zero, `θ = 0`.
    Trivial,
    /// `f = 0`.
    NonTrivial,
}

impl PointKind {
    pub fn label(self) -> &'static str {
        match self {
            PointKind::Trivial => "trivial",
            PointKind::NonTrivial => "nontrivial",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StagnationPoint<T> {
    pub id: usize,
    pub z: Complex<T>,
    pub x: T,
    pub p: T,
    pub kind: PointKind,
    pub gradient: GradientMatrix<T>,
    pub eigenvalues: [Complex<T>; 2],
    pub classification: Option<Classification>,
    /// Winding index; 0 when the loop could not be evaluated (see the anomalies).
    pub index: i32,
    /// `|J| / max_window |J|` at the point.
    pub residual: T,
    pub stability: Stability,
}

/// Disagreement between the linearization and the measured winding, or a
/// Husimi zero that did not linearize to a saddle.
#[derive(Clone, Debug, PartialEq)]
pub struct Anomaly<T> {
    pub z: Complex<T>,
    pub kind: PointKind,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct StagnationReport<T> {
    pub points: Vec<StagnationPoint<T>>,
    pub anomalies: Vec<Anomaly<T>>,
    /// Non-trivial seeds whose Newton iteration did not converge.
    pub unconverged: Vec<Complex<T>>,
}

#[derive(Clone, Copy, Debug)]
pub struct StagnationOptions<T> {
    /// Regions with `Q < mask · max(Q)` are ignored.
    pub mask: T,
    pub degeneracy: T,
    /// Winding loop radius in grid cells.
    pub winding_cells: T,
    pub winding_samples: usize,
    pub winding_retries: usize,
    /// Radius halvings allowed while looking for two consecutive loops with
    /// the same winding.
    pub radius_halvings: usize,
    /// `|J|` floor on winding loops, relative to the largest `|J|` on the same loop.
    pub j_floor: T,
    /// Newton convergence on `|F|` relative to its window maximum.
    pub newton_tol: T,
    pub max_iter: usize,
    pub gradient: GradientOptions<T>,
    /// Skip Husimi zeros flagged unstable.
    pub stable_zeros_only: bool,
    /// Distance (z units) around each Husimi zero searched for non-trivial
    /// points even below the mask.
    pub partner_reach: T,
}

impl<T: Real> Default for StagnationOptions<T> {
    fn default() -> Self {
        Self {
            mask: lit(1e-12),
            degeneracy: lit(1e-8),
            winding_cells: lit(2.0),
            winding_samples: 64,
            winding_retries: 2,
            radius_halvings: 4,
            j_floor: lit(1e-14),
            newton_tol: lit(1e-11),
            max_iter: 50,
            gradient: GradientOptions::default(),
            stable_zeros_only: false,
            partner_reach: T::one(),
        }
    }
}

/// Finds, linearizes and indexes every stagnation point in the window.
///
/// Trivial points are the supplied Husimi zeros. Non-trivial points are seeded
/// at strict local minima of `|F|/(|B_0|+|B_1|)` and refined by Newton's method
/// on `(Re F, Im F)` with a finite-difference Jacobian. Seeds are taken on
/// unmasked nodes and, below the mask, within `partner_reach` of a Husimi zero:
/// a zero at the edge of the density can have its dipole partner on the masked
/// side.
pub fn find_stagnation_points<T: Real>(
    current: &CurrentField<T>,
    husimi: &HusimiField<T>,
    zeros: &[HusimiZero<T>],
    sampler: &CurrentSampler<'_, T>,
    opts: &StagnationOptions<T>,
) -> Result<StagnationReport<T>> {
    let w = current.window;
    if husimi.window != w {
        return Err(Error::WindowMismatch);
    }
    let cfg = sampler.husimi().config();
    let max_q = husimi.max_density();
    let max_j = current.max_norm();
    let (czx, czp) = w.cell_z(cfg);
    let cell = czx.min(czp);
    let unmasked = |idx: usize| husimi.density[idx] >= opts.mask * max_q;
    let anchors: Vec<Complex<T>> = zeros
        .iter()
        .filter(|z| !opts.stable_zeros_only || z.stability != Stability::Unstable)
        .map(|z| z.z)
        .collect();
    let searchable = |idx: usize| {
        unmasked(idx) || {
            let (i, j) = w.coords(idx);
            let z = cfg.z_from_xp(w.x(i), w.p(j));
            anchors.iter().any(|a| (a - z).norm() <= opts.partner_reach)
        }
    };

    // |F| inherits the exponential envelope of the Husimi stack; dividing by
    // the local stack size leaves a flow-speed-like quantity whose grid
    // minima sit next to the roots of F.
    let depth1 = 1.min(husimi.depth());
    let speed: Vec<T> = (0..w.len())
        .map(|idx| {
            let s = husimi.deriv_stack[0][idx].norm() + husimi.deriv_stack[depth1][idx].norm();
            if s > T::zero() {
                current.reduced[idx].norm() / s
            } else {
                T::infinity()
            }
        })
        .collect();
    let speed_scale = speed
        .iter()
        .enumerate()
        .filter(|(i, v)| unmasked(*i) && v.is_finite())
        .map(|(_, v)| *v)
        .fold(T::zero(), T::max);

    let mut seeds = Vec::new();
    for j in 1..w.np - 1 {
        for i in 1..w.nx - 1 {
            let idx = w.index(i, j);
            if !searchable(idx) {
                continue;
            }
            let f = speed[idx];
            let is_min = (-1i64..=1).all(|dj| {
                (-1i64..=1).all(|di| {
                    (di, dj) == (0, 0) || speed[w.index((i as i64 + di) as usize, (j as i64 + dj) as usize)] > f
                })
            });
            if is_min {
                seeds.push(cfg.z_from_xp(w.x(i), w.p(j)));
            }
        }
    }
    let converged = |z: Complex<T>, f: Complex<T>| {
        let s = sampler.husimi().stack(z, 1);
        f.norm() <= opts.newton_tol * speed_scale * (s[0].norm() + s[1].norm())
    };

    let max_step = lit::<T>(2.0) * czx.max(czp);
    let fd = lit::<T>(1e-6) * (T::one() + cell);
    let refined: Vec<std::result::Result<Complex<T>, Complex<T>>> = seeds
        .par_iter()
        .map(|&seed| {
            let mut z = seed;
            for _ in 0..opts.max_iter {
                let f = sampler.reduced(z);
                if converged(z, f) {
                    return Ok(z);
                }
                let two = lit::<T>(2.0);
                let fa = (sampler.reduced(z + Complex::new(fd, T::zero()))
                    - sampler.reduced(z - Complex::new(fd, T::zero())))
                    / (two * fd);
                let fb = (sampler.reduced(z + Complex::new(T::zero(), fd))
                    - sampler.reduced(z - Complex::new(T::zero(), fd)))
                    / (two * fd);
                let det = fa.re * fb.im - fb.re * fa.im;
                if det == T::zero() || !det.is_finite() {
                    return Err(z);
                }
                let da = (fb.im * f.re - fb.re * f.im) / det;
                let db = (-fa.im * f.re + fa.re * f.im) / det;
                let mut step = Complex::new(da, db);
                let len = step.norm();
                if len > max_step {
                    step = step * (max_step / len);
                }
                z = z - step;
            }
            if converged(z, sampler.reduced(z)) {
                Ok(z)
            } else {
                Err(seed)
            }
        })
        .collect();

    struct Located<T> {
        z: Complex<T>,
        kind: PointKind,
        stability: Stability,
    }
    let mut located: Vec<Located<T>> = zeros
        .iter()
        .filter(|z| !opts.stable_zeros_only || z.stability != Stability::Unstable)
        .map(|z| Located { z: z.z, kind: PointKind::Trivial, stability: z.stability })
        .collect();
    let mut unconverged = Vec::new();
    let half = lit::<T>(0.5);
    for r in refined {
        match r {
            Ok(z) => {
                let (x, p) = cfg.xp_from_z(z);
                if !w.contains(x, p) {
                    continue;
                }
                let idx = nearest_node(&w, x, p);
                if !searchable(idx) {
                    continue;
                }
                let dup = located.iter().any(|l| {
                    (l.z.re - z.re).abs() < half * czx && (l.z.im - z.im).abs() < half * czp
                });
                if !dup {
                    located.push(Located { z, kind: PointKind::NonTrivial, stability: Stability::Unchecked });
                }
            }
            Err(seed) => unconverged.push(seed),
        }
    }

    let positions: Vec<Complex<T>> = located.iter().map(|l| l.z).collect();
    let analysed: Vec<Result<(StagnationPoint<T>, Vec<Anomaly<T>>)>> = located
        .par_iter()
        .map(|l| {
            let nearest = positions
                .iter()
                .filter(|&&q| q != l.z)
                .map(|q| (q - l.z).norm())
                .fold(T::infinity(), T::min);
            let radius = (opts.winding_cells * cell).min(lit::<T>(0.45) * nearest);
            let (gradient, settled_gradient) = adapt_gradient(sampler, l.z, &opts.gradient);
            let lin = classify(&gradient, opts.degeneracy);
            let (x, p) = cfg.xp_from_z(l.z);
            let residual = sampler.current(l.z).norm() / max_j;
            let mut anomalies = Vec::new();
            if !settled_gradient {
                // Typically a point deep in the tail, where |∇J| sits at the noise level.
                anomalies.push(Anomaly { z: l.z, kind: l.kind, reason: "gradient step adaptation did not settle".into() });
            }
            // The index is local: halve the loop until two radii agree, so a
            // partner hidden below the mask inside the loop cannot cancel it.
            let wind = |r: T| winding_index(sampler, l.z, r, opts.winding_samples, opts.j_floor, opts.winding_retries);
            let settled = (|| {
                let mut r = radius;
                let mut outer = wind(r)?;
                for _ in 0..opts.radius_halvings {
                    r = r * half;
                    let inner = wind(r)?;
                    if inner == outer {
                        return Ok(Some(inner));
                    }
                    outer = inner;
                }
                Ok::<_, Error>(None)
            })();
            let index = match settled {
                Ok(Some(i)) => Some(i),
                Ok(None) => {
                    anomalies.push(Anomaly { z: l.z, kind: l.kind, reason: "winding index changes with loop radius".into() });
                    None
                }
                Err(e) => {
                    anomalies.push(Anomaly { z: l.z, kind: l.kind, reason: format!("winding undetermined: {e}") });
                    None
                }
            };
            match lin.classification {
                Some(c) if index.is_some_and(|i| i != c.expected_index()) => anomalies.push(Anomaly {
                    z: l.z,
                    kind: l.kind,
                    reason: format!("{} but winding index {}", c.label(), index.unwrap_or(0)),
                }),
                None => anomalies.push(Anomaly {
                    z: l.z,
                    kind: l.kind,
                    reason: "degenerate linearization".into(),
                }),
                _ => {}
            }
            if l.kind == PointKind::Trivial && lin.classification != Some(Classification::Saddle) {
                anomalies.push(Anomaly {
                    z: l.z,
                    kind: l.kind,
                    reason: "Husimi zero is not a saddle".into(),
                });
            }
            Ok((
                StagnationPoint {
                    id: 0,
                    z: l.z,
                    x,
                    p,
                    kind: l.kind,
                    gradient,
                    eigenvalues: lin.eigenvalues,
                    classification: lin.classification,
                    index: index.unwrap_or(0),
                    residual,
                    stability: l.stability,
                },
                anomalies,
            ))
        })
        .collect();

    let mut points = Vec::with_capacity(analysed.len());
    let mut anomalies = Vec::new();
    for a in analysed {
        let (p, an) = a?;
        points.push(p);
        anomalies.extend(an);
    }
    points.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.p.total_cmp(&b.p)));
    for (i, p) in points.iter_mut().enumerate() {
        p.id = i;
    }
    anomalies.sort_by(|a, b| a.z.re.total_cmp(&b.z.re).then(a.z.im.total_cmp(&b.z.im)));
    Ok(StagnationReport { points, anomalies, unconverged })
}

fn nearest_node<T: Real>(w: &crate::husimi::PhaseSpaceWindow<T>, x: T, p: T) -> usize {
    let i = ((x - w.x_lo) / w.cell_x()).round().to_usize().unwrap_or(0).min(w.nx - 1);
    let j = ((p - w.p_lo) / w.cell_p()).round().to_usize().unwrap_or(0).min(w.np - 1);
    w.index(i, j)
}

/// A saddle with its `+1` companion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dipole<T> {
    pub saddle: StagnationPoint<T>,
    pub partner: StagnationPoint<T>,
    /// `|Δz|`.
    pub separation: T,
}

#[derive(Clone, Debug, Default)]
pub struct DipolePairing<T> {
    pub dipoles: Vec<Dipole<T>>,
    pub unpaired: Vec<StagnationPoint<T>>,
}

impl<T: Real> DipolePairing<T> {
    pub fn total_index(&self) -> i32 {
        self.dipoles.iter().map(|d| d.saddle.index + d.partner.index).sum::<i32>()
            + self.unpaired.iter().map(|p| p.index).sum::<i32>()
    }

    /// Partner id of each point id, if paired.
    pub fn partner_of(&self, id: usize) -> Option<usize> {
        self.dipoles.iter().find_map(|d| {
            if d.saddle.id == id {
                Some(d.partner.id)
            } else if d.partner.id == id {
                Some(d.saddle.id)
            } else {
                None
            }
        })
    }
}

/// Greedy nearest-neighbour matching of `-1` points to `+1` points within
/// `max_sep` (in `z` units), closest pairs first.
pub fn pair_dipoles<T: Real>(points: &[StagnationPoint<T>], max_sep: T) -> DipolePairing<T> {
    let mut candidates = Vec::new();
    for (a, s) in points.iter().enumerate() {
        if s.index != -1 {
            continue;
        }
        for (b, q) in points.iter().enumerate() {
            if q.index != 1 {
                continue;
            }
            let d = (s.z - q.z).norm();
            if d <= max_sep {
                candidates.push((d, a, b));
            }
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used = vec![false; points.len()];
    let mut dipoles = Vec::new();
    for (d, a, b) in candidates {
        if used[a] || used[b] {
            continue;
        }
        used[a] = true;
        used[b] = true;
        dipoles.push(Dipole { saddle: points[a], partner: points[b], separation: d });
    }
    let unpaired = points.iter().zip(&used).filter(|(_, &u)| !u).map(|(p, _)| *p).collect();
    DipolePairing { dipoles, unpaired }
}

/// Axis-aligned rectangle in the `z` plane as a counterclockwise polygon.
pub fn rectangle_loop<T: Real>(lo: Complex<T>, hi: Complex<T>) -> Vec<Complex<T>> {
    vec![lo, Complex::new(hi.re, lo.im), hi, Complex::new(lo.re, hi.im)]
}

/// Winding of `field` around a rectangle compared with the index sum of the
/// enclosed points: `(winding, enclosed_sum)`.
pub fn poincare_hopf_check<T: Real, F: VectorField<T> + ?Sized>(
    field: &F,
    points: &[StagnationPoint<T>],
    lo: Complex<T>,
    hi: Complex<T>,
    samples_per_edge: usize,
    floor: T,
) -> Result<(i32, i32)> {
    let w = winding_along(field, &rectangle_loop(lo, hi), samples_per_edge, floor)?;
    let enclosed = points
        .iter()
        .filter(|p| p.z.re > lo.re && p.z.re < hi.re && p.z.im > lo.im && p.z.im < hi.im)
        .map(|p| p.index)
        .sum();
    Ok((w.round().to_i32().unwrap_or(0), enclosed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn linear_saddle_field() {
        let f = |z: Complex<f64>| z.conj();
        let g = gradient_matrix(&f, c(0.3, -0.2), &GradientOptions::default()).unwrap();
        let m = g.matrix();
        assert!((m[0][0] - c(0.0, 0.0)).norm() < 1e-10);
        assert!((m[0][1] - c(1.0, 0.0)).norm() < 1e-10);
        assert!((m[1][0] - c(1.0, 0.0)).norm() < 1e-10);
        let ev = g.eigenvalues();
        assert_relative_eq!(ev[0].re, 1.0, epsilon = 1e-10);
        assert_relative_eq!(ev[1].re, -1.0, epsilon = 1e-10);
        assert_eq!(winding_index(&f, c(0.0, 0.0), 0.1, 64, 0.0, 0).unwrap(), -1);
    }

    #[test]
    fn rotation_field_is_vortex() {
        let f = |z: Complex<f64>| -Complex::<f64>::i() * z;
        let g = gradient_matrix(&f, c(0.0, 0.0), &GradientOptions::default()).unwrap();
        let ev = g.eigenvalues();
        assert!(ev[0].re.abs() < 1e-10 && ev[1].re.abs() < 1e-10);
        assert_relative_eq!(ev[0].im.abs(), 1.0, epsilon = 1e-10);
        assert_relative_eq!(ev[0].im, -ev[1].im, epsilon = 1e-10);
        assert_eq!(classify(&g, 1e-8).classification, Some(Classification::Vortex));
        assert_eq!(winding_index(&f, c(0.0, 0.0), 0.1, 64, 0.0, 0).unwrap(), 1);
    }

    fn from_real_jacobian(a: [[f64; 2]; 2]) -> GradientMatrix<f64> {
        // J = (a00 u + a01 v) + i (a10 u + a11 v) with z = u + iv.
        let da = c(a[0][0], a[1][0]);
        let db = c(a[0][1], a[1][1]);
        GradientMatrix { dj_dz: (da - Complex::<f64>::i() * db) * 0.5, dj_dzbar: (da + Complex::<f64>::i() * db) * 0.5 }
    }

    #[test]
    fn classification_table() {
        let cases = [
            ([[1.0, 0.0], [0.0, -1.0]], Some(Classification::Saddle)),
            ([[-1.0, 2.0], [-2.0, -1.0]], Some(Classification::AttractiveSpiral)),
            ([[1.0, 2.0], [-2.0, 1.0]], Some(Classification::RepulsiveSpiral)),
            ([[-1.0, 0.0], [0.0, -3.0]], Some(Classification::AttractiveNode)),
            ([[2.0, 0.5], [0.0, 3.0]], Some(Classification::RepulsiveNode)),
            ([[0.0, 1.0], [-1.0, 0.0]], Some(Classification::Vortex)),
            ([[1.0, 0.0], [0.0, 1.0]], None),
            ([[1.0, 0.0], [0.0, 0.0]], None),
        ];
        for (a, expect) in cases {
            let lin = classify(&from_real_jacobian(a), 1e-8);
            assert_eq!(lin.classification, expect, "{a:?}");
        }
        let lin = classify(&from_real_jacobian([[-1.0, 2.0], [-2.0, -1.0]]), 1e-8);
        assert_relative_eq!(lin.eigenvalues[0].re, -1.0, epsilon = 1e-12);
        assert_relative_eq!(lin.eigenvalues[0].im.abs(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn winding_shrinks_around_nearby_zero() {
        // Zeros at 0 and 0.1: the radius-0.1 loop runs through the second one
        // and must shrink before it can be evaluated.
        let f = |z: Complex<f64>| z.conj() * (z - c(0.1, 0.0));
        assert!(winding_index(&f, c(0.0, 0.0), 0.1, 64, 1e-3, 0).is_err());
        assert_eq!(winding_index(&f, c(0.0, 0.0), 0.1, 64, 1e-3, 2).unwrap(), -1);
    }

    #[test]
    fn dipole_pairing() {
        let mk = |id: usize, re: f64, index: i32| StagnationPoint {
            id,
            z: c(re, 0.0),
            x: re,
            p: 0.0,
            kind: PointKind::Trivial,
            gradient: GradientMatrix { dj_dz: c(0.0, 0.0), dj_dzbar: c(0.0, 0.0) },
            eigenvalues: [c(0.0, 0.0); 2],
            classification: None,
            index,
            residual: 0.0,
            stability: Stability::Unchecked,
        };
        let pts = vec![mk(0, 0.0, -1), mk(1, 0.1, 1)];
        let pairing = pair_dipoles(&pts, 0.5);
        assert_eq!(pairing.dipoles.len(), 1);
        assert_eq!(pairing.total_index(), 0);
        assert_eq!(pairing.partner_of(1), Some(0));
        assert!(pair_dipoles::<f64>(&[], 1.0).dipoles.is_empty());

        let pts = vec![mk(0, 0.0, -1), mk(1, 0.1, 1), mk(2, 0.15, -1), mk(3, 5.0, 1)];
        let pairing = pair_dipoles(&pts, 0.5);
        assert_eq!(pairing.dipoles.len(), 1);
        assert_eq!(pairing.dipoles[0].saddle.id, 2);
        assert_eq!(pairing.unpaired.len(), 2);
        assert_eq!(pairing.total_index(), 0);
    }

    #[test]
    fn poincare_hopf_on_synthetic_field() {
        // Zeros of z̄ - conj(a) (saddle) and of a rotation about b (vortex) combined.
        let f = |z: Complex<f64>| (z.conj() - c(0.0, 0.0)) * (-Complex::<f64>::i() * (z - c(1.0, 0.0)));
        let w = winding_along(&f, &rectangle_loop(c(-0.5, -0.5), c(1.5, 0.5)), 32, 0.0).unwrap();
        assert_relative_eq!(w, 0.0, epsilon = 1e-9);
        let w = winding_along(&f, &rectangle_loop(c(0.5, -0.5), c(1.5, 0.5)), 32, 0.0).unwrap();
        assert_relative_eq!(w, 1.0, epsilon = 1e-9);
    }
}
