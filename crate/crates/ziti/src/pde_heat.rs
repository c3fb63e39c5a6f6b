//! Explicit Euler time stepping of the heat equation on the disk meshes.

use std::time::Instant;

use crate::pde_poisson::{DiskMesh, GridOperator, GridSize, PoissonOptions, RowKind, ScalarField2D, SolveReport};
use crate::{Error, Real, Result};

/// Sign of the diffusion term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeatSign {
    /// `u_t - D Lap u = f`.
    #[default]
    Diffusive,
    /// `u_t + D Lap u = f`: backward diffusion, ill posed; kept to show that it blows up.
    AntiDiffusive,
}

/// Right-hand side `f(x, y, t)`.
pub enum Source<'a, T> {
    Zero,
    /// `space(x, y) * time(t)`, evaluated once in space.
    Separable {
        space: &'a dyn Fn(T, T) -> T,
        time: &'a dyn Fn(T) -> T,
    },
    General(&'a dyn Fn(T, T, T) -> T),
}

/// Interior rows of the operator in fixed-width (padded) form plus the boundary closures.
pub struct HeatStepper<T> {
    interior: Vec<usize>,
    width: usize,
    cols: Vec<u32>,
    vals: Vec<T>,
    closures: Vec<(usize, Option<usize>)>,
    points: Vec<(T, T)>,
    /// Gershgorin bound on the spectral radius of `-Lap`.
    pub rate: T,
}

/// Values above this magnitude count as a blow-up.
pub const BLOWUP_LIMIT: f64 = 1e30;
const CHECK_EVERY: usize = 16;

impl<T: Real> HeatStepper<T> {
    pub fn new(op: &GridOperator<T>) -> Self {
        let mut interior = Vec::new();
        let mut direct = Vec::new();
        let mut chained = Vec::new();
        for (k, kind) in op.kinds.iter().enumerate() {
            match *kind {
                RowKind::Interior => interior.push(k),
                RowKind::Dirichlet => direct.push((k, None)),
                RowKind::Copy(src) => {
                    // Copies of copies must run after their source is set.
                    if op.kinds[src] == RowKind::Interior {
                        direct.push((k, Some(src)));
                    } else {
                        chained.push((k, Some(src)));
                    }
                }
            }
        }
        direct.extend(chained);
        let width = interior.iter().map(|&k| op.coeffs[k].len()).max().unwrap_or(0);
        let mut cols = Vec::with_capacity(width * interior.len());
        let mut vals = Vec::with_capacity(width * interior.len());
        let mut rate = T::zero();
        for &k in &interior {
            let row = &op.coeffs[k];
            let mut s = T::zero();
            for &(c, v) in row {
                cols.push(c as u32);
                vals.push(v);
                s = s + v.abs();
            }
            for _ in row.len()..width {
                cols.push(k as u32);
                vals.push(T::zero());
            }
            rate = rate.max(s);
        }
        Self {
            interior,
            width,
            cols,
            vals,
            closures: direct,
            points: op.points.clone(),
            rate,
        }
    }

    /// Largest time step for safety factor `mu`: `2 mu / (D rate)`.
    ///
    /// On a uniform five-point grid this is `mu h^2 / (4 D)`.
    pub fn max_dt(&self, mu: T, d: T) -> T {
        T::lit(2.0) * mu / (d * self.rate)
    }

    /// Length `l` with `max_dt = mu l^2 / (4 D)`.
    pub fn stability_length(&self) -> T {
        (T::lit(8.0) / self.rate).sqrt()
    }

    /// `out_k = u_k + dt (s (-Lap u)_k + scale * f_k)` on interior rows, then closures.
    fn kernel(&self, u: &[T], out: &mut [T], s: T, dt: T, f: &[T], scale: T) {
        // Fixed widths unroll; 5 is the polar stencil, 9 the chord mesh one.
        match self.width {
            5 => self.rows::<5>(u, out, s, dt, f, scale),
            9 => self.rows::<9>(u, out, s, dt, f, scale),
            _ => self.rows_dyn(u, out, s, dt, f, scale),
        }
        for &(k, src) in &self.closures {
            out[k] = match src {
                Some(s) => out[s],
                None => T::zero(),
            };
        }
    }

    fn rows<const W: usize>(&self, u: &[T], out: &mut [T], s: T, dt: T, f: &[T], scale: T) {
        for ((&k, cols), vals) in self
            .interior
            .iter()
            .zip(self.cols.chunks_exact(W))
            .zip(self.vals.chunks_exact(W))
        {
            let mut lap = T::zero();
            for i in 0..W {
                lap = lap + vals[i] * u[cols[i] as usize];
            }
            let src = if f.is_empty() { T::zero() } else { f[k] };
            out[k] = u[k] + dt * (s * lap + scale * src);
        }
    }

    fn rows_dyn(&self, u: &[T], out: &mut [T], s: T, dt: T, f: &[T], scale: T) {
        let w = self.width.max(1);
        for ((&k, cols), vals) in self
            .interior
            .iter()
            .zip(self.cols.chunks_exact(w))
            .zip(self.vals.chunks_exact(w))
        {
            let mut lap = T::zero();
            for (&c, &v) in cols.iter().zip(vals) {
                lap = lap + v * u[c as usize];
            }
            let src = if f.is_empty() { T::zero() } else { f[k] };
            out[k] = u[k] + dt * (s * lap + scale * src);
        }
    }

    fn sign_factor(d: T, sign: HeatSign) -> T {
        match sign {
            HeatSign::Diffusive => -d,
            HeatSign::AntiDiffusive => d,
        }
    }

    /// One explicit step from `u` into `out` with source values `f`, closures applied afterwards.
    pub fn step_into(&self, u: &[T], out: &mut [T], d: T, dt: T, f: &[T], sign: HeatSign) {
        self.kernel(u, out, Self::sign_factor(d, sign), dt, f, T::one());
    }

    fn step_source(
        &self,
        src: &Source<'_, T>,
        space: &[T],
        scratch: &mut [T],
        t: T,
        u: &[T],
        out: &mut [T],
        d: T,
        dt: T,
        sign: HeatSign,
    ) {
        let s = Self::sign_factor(d, sign);
        match src {
            Source::Zero => self.kernel(u, out, s, dt, &[], T::one()),
            Source::Separable { time, .. } => self.kernel(u, out, s, dt, space, time(t)),
            Source::General(g) => {
                for &k in &self.interior {
                    let (x, y) = self.points[k];
                    scratch[k] = g(x, y, t);
                }
                self.kernel(u, out, s, dt, scratch, T::one());
            }
        }
    }
}

/// One step of the scheme: `u^{n+1} = u^n + dt (sign D Lap u^n + f^n)` on interior
/// unknowns, followed by the boundary closures.
pub fn heat_step<T: Real>(
    op: &GridOperator<T>,
    u: &[T],
    d: T,
    dt: T,
    f: &[T],
    sign: HeatSign,
) -> Result<Vec<T>> {
    if u.len() != op.len() || f.len() != op.len() {
        return Err(Error::Structure("field length does not match the mesh".into()));
    }
    let stepper = HeatStepper::new(op);
    let mut out = vec![T::zero(); u.len()];
    stepper.step_into(u, &mut out, d, dt, f, sign);
    if let Some(k) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("unknown {k} after one step")));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatOptions<T> {
    pub d: T,
    pub mu: T,
    pub t_final: T,
    pub sign: HeatSign,
    pub poisson: PoissonOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatRun<T> {
    pub d: T,
    pub dt: T,
    pub mu: T,
    pub t_final: T,
    pub steps: usize,
    pub stability_length: T,
    pub field: ScalarField2D<T>,
    pub report: SolveReport<T>,
    /// `er_max / max |u_exact(t_final)|`.
    pub relative_er_max: Option<T>,
}

/// Steps from `t = 0` to `t_final` with `dt = t_final / ceil(t_final / max_dt)`.
///
/// `observe` is called after every step with the step index, the time and the field.
pub fn run_heat<T: Real, E>(
    size: GridSize,
    opts: &HeatOptions<T>,
    u0: &dyn Fn(T, T) -> T,
    source: Source<'_, T>,
    exact: Option<E>,
    mut observe: impl FnMut(usize, T, &[T]),
) -> Result<HeatRun<T>>
where
    E: Fn(T, T, T) -> T,
{
    if !(opts.mu > T::zero()) || !(opts.d > T::zero()) || !(opts.t_final > T::zero()) {
        return Err(Error::Domain("mu, D and t_final must be positive".into()));
    }
    let start = Instant::now();
    let mesh = DiskMesh::build(size)?;
    let op = mesh.operator(&opts.poisson)?;
    let stepper = HeatStepper::new(&op);
    let max_dt = stepper.max_dt(opts.mu, opts.d);
    let steps = (opts.t_final / max_dt).ceil().to_usize().unwrap_or(usize::MAX).max(1);
    let dt = opts.t_final / T::from_usize_lossy(steps);

    let mut u: Vec<T> = op.points.iter().map(|&(x, y)| u0(x, y)).collect();
    let mut next = u.clone();
    // Make the initial datum respect the closures.
    stepper.step_into(&u.clone(), &mut u, T::zero(), T::zero(), &vec![T::zero(); op.len()], opts.sign);
    let space: Vec<T> = match &source {
        Source::Separable { space, .. } => op.points.iter().map(|&(x, y)| space(x, y)).collect(),
        _ => Vec::new(),
    };
    let mut scratch = vec![T::zero(); op.len()];
    let limit = T::lit(BLOWUP_LIMIT);
    for n in 0..steps {
        let t = T::from_usize_lossy(n) * dt;
        stepper.step_source(&source, &space, &mut scratch, t, &u, &mut next, opts.d, dt, opts.sign);
        std::mem::swap(&mut u, &mut next);
        if (n + 1) % CHECK_EVERY == 0 || n + 1 == steps {
            if u.iter().any(|v| !(v.abs() <= limit)) {
                return Err(Error::BlowUp {
                    step: n + 1,
                    time: (t + dt).as_f64(),
                });
            }
        }
        observe(n + 1, t + dt, &u);
    }

    let field = ScalarField2D::new(&op, u, Some(opts.t_final));
    let (mut er_max, mut er_mean, mut rel) = (None, None, None);
    if let Some(e) = exact {
        let tf = opts.t_final;
        let (a, b) = field.errors(|x, y| e(x, y, tf));
        let peak = op
            .points
            .iter()
            .fold(T::zero(), |m, &(x, y)| m.max(e(x, y, tf).abs()));
        er_max = Some(a);
        er_mean = Some(b);
        rel = Some(if peak > T::zero() { a / peak } else { a });
    }
    let report = SolveReport {
        size,
        steps: mesh.steps(),
        er_max,
        er_mean,
        residual: None,
        wall_time: start.elapsed(),
    };
    Ok(HeatRun {
        d: opts.d,
        dt,
        mu: opts.mu,
        t_final: opts.t_final,
        steps,
        stability_length: stepper.stability_length(),
        field,
        report,
        relative_er_max: rel,
    })
}

/// Manufactured solution `(1 - x^2 - y^2) e^t`.
pub fn heat_exact<T: Real>(x: T, y: T, t: T) -> T {
    (T::one() - x * x - y * y) * t.exp()
}

/// Spatial factor of the source matching [`heat_exact`] for diffusion `d`.
///
/// `(1 + 4d - x^2 - y^2)` when diffusive, `(1 - 4d - x^2 - y^2)` otherwise.
pub fn heat_source_space<T: Real>(sign: HeatSign, d: T, x: T, y: T) -> T {
    let four_d = T::lit(4.0) * d;
    match sign {
        HeatSign::Diffusive => T::one() + four_d - x * x - y * y,
        HeatSign::AntiDiffusive => T::one() - four_d - x * x - y * y,
    }
}
