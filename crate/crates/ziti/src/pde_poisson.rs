//! Discrete Laplacians on the disk meshes and the Poisson problem
//! `-Lap u = f` with `u = 0` on the circle.
//!
//! Unknowns are grouped in blocks (mesh rows for the chord mesh, rings for
//! the polar mesh) so the assembled matrix is block tridiagonal.

use std::time::{Duration, Instant};

use crate::disk_mesh::{build_cartesian_disk, build_polar, CartesianDiskMesh, PolarMesh};
use crate::linalg::{BlockTridiagonalSystem, SparseBlock};
use crate::{Error, Real, Result};

/// Three-point second difference on a nonuniform stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    /// `2/(dm (dm+dp))`, `-2/(dm dp)`, `2/(dp (dm+dp))`; exact for quadratics.
    /// In polar form the radial first derivative is centered.
    #[default]
    SecondOrder,
    /// `(u_- - 2u + u_+)/(dm dp)`; in polar form with a forward radial derivative.
    Compact,
}

/// Coefficients `(cm, c0, cp)` with `-u'' ~ c0 u - cm u_- - cp u_+`.
fn second_difference<T: Real>(dm: T, dp: T, stencil: Stencil) -> Result<(T, T, T)> {
    if !(dm > T::zero() && dp > T::zero()) {
        return Err(Error::DegenerateSpacing(format!(
            "gaps {} and {}",
            dm.as_f64(),
            dp.as_f64()
        )));
    }
    let two = T::lit(2.0);
    Ok(match stencil {
        Stencil::SecondOrder => (
            two / (dm * (dm + dp)),
            two / (dm * dp),
            two / (dp * (dm + dp)),
        ),
        Stencil::Compact => {
            let c = T::one() / (dm * dp);
            (c, two * c, c)
        }
    })
}

/// What the equation of an unknown says.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// Discrete `-Lap u = f`.
    Interior,
    /// `u = 0`.
    Dirichlet,
    /// `u = u[source]`.
    Copy(usize),
}

/// Discrete `-Lap` on the unknowns of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOperator<T> {
    pub block_size: usize,
    pub n_blocks: usize,
    pub kinds: Vec<RowKind>,
    /// `(column, coefficient)` of `-Lap` for interior rows, empty otherwise.
    pub coeffs: Vec<Vec<(usize, T)>>,
    /// Cartesian position of every unknown.
    pub points: Vec<(T, T)>,
    /// 1-based `(i, j)` mesh labels.
    pub labels: Vec<(usize, usize)>,
}

impl<T: Real> GridOperator<T> {
    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    /// `(-Lap u)_k` for interior `k`.
    pub fn apply_row(&self, k: usize, u: &[T]) -> T {
        self.coeffs[k]
            .iter()
            .fold(T::zero(), |s, &(c, v)| s + v * u[c])
    }

    /// Block-tridiagonal system for `-Lap u = f`, interior rows scaled to a unit diagonal.
    pub fn system<F: Fn(T, T) -> T>(&self, f: F) -> Result<BlockTridiagonalSystem<T>> {
        let n = self.block_size;
        let nb = self.n_blocks;
        let mut lower = vec![SparseBlock::zeros(n); nb];
        let mut diag = vec![SparseBlock::zeros(n); nb];
        let mut upper = vec![SparseBlock::zeros(n); nb];
        let mut rhs = vec![T::zero(); n * nb];
        let mut put = |k: usize, c: usize, v: T| -> Result<()> {
            let (bk, bc) = (k / n, c / n);
            let block = if bc == bk {
                &mut diag[bk]
            } else if bc + 1 == bk {
                &mut lower[bk]
            } else if bc == bk + 1 {
                &mut upper[bk]
            } else {
                return Err(Error::Structure(format!(
                    "entry ({k}, {c}) outside the block tridiagonal band"
                )));
            };
            block.add(k % n, c % n, v);
            Ok(())
        };
        for k in 0..self.len() {
            match self.kinds[k] {
                RowKind::Interior => {
                    // Rows are scaled to a unit diagonal; entries reach 1e6 near the polar centre.
                    let d = self.coeffs[k]
                        .iter()
                        .filter(|e| e.0 == k)
                        .fold(T::zero(), |s, e| s + e.1);
                    if !(d > T::zero()) {
                        return Err(Error::Structure(format!("row {k} has no positive diagonal")));
                    }
                    for &(c, v) in &self.coeffs[k] {
                        put(k, c, v / d)?;
                    }
                    let (x, y) = self.points[k];
                    rhs[k] = f(x, y) / d;
                }
                RowKind::Dirichlet => put(k, k, T::one())?,
                RowKind::Copy(s) => {
                    put(k, k, T::one())?;
                    put(k, s, -T::one())?;
                }
            }
        }
        Ok(BlockTridiagonalSystem {
            block_size: n,
            lower,
            diag,
            upper,
            rhs,
        })
    }
}

/// Operator on the row collocation points of the chord mesh.
///
/// Along a row the neighbours are the adjacent roots, with the chord ends as
/// zero boundary values. Across rows the neighbour value at the same abscissa
/// is interpolated quadratically from the adjacent row; when that row does not
/// reach the abscissa, the circle itself is the neighbour, at its true distance.
pub fn cartesian_operator<T: Real>(
    mesh: &CartesianDiskMesh<T>,
    stencil: Stencil,
) -> Result<GridOperator<T>> {
    let n = mesh.row_unknowns();
    let nb = mesh.rows.len();
    let mut position = vec![None; mesh.n + 1];
    for (p, row) in mesh.rows.iter().enumerate() {
        position[row.index] = Some(p);
    }
    // Abscissae including both chord ends.
    let extended: Vec<Vec<T>> = mesh
        .rows
        .iter()
        .map(|r| {
            let mut v = Vec::with_capacity(n + 2);
            v.push(-r.half_len);
            v.extend_from_slice(r.interior_roots());
            v.push(r.half_len);
            v
        })
        .collect();

    let mut coeffs = Vec::with_capacity(n * nb);
    let mut points = Vec::with_capacity(n * nb);
    let mut labels = Vec::with_capacity(n * nb);
    for (p, row) in mesh.rows.iter().enumerate() {
        let xs = &extended[p];
        let y = row.offset;
        for i in 0..n {
            let k = p * n + i;
            let x = xs[i + 1];
            let mut entries: Vec<(usize, T)> = Vec::with_capacity(9);
            let (cm, c0, cp) = second_difference(xs[i + 1] - xs[i], xs[i + 2] - xs[i + 1], stencil)?;
            entries.push((k, c0));
            if i > 0 {
                entries.push((k - 1, -cm));
            }
            if i + 1 < n {
                entries.push((k + 1, -cp));
            }

            let y_circle = (T::one() - x * x).max(T::zero()).sqrt();
            let mut gaps = [T::zero(); 2];
            let mut sources: [Option<usize>; 2] = [None, None];
            for (s, dir) in [(0usize, -1isize), (1, 1)] {
                let nj = row.index as isize + dir;
                let neighbour = if nj >= 1 && (nj as usize) < mesh.n {
                    position[nj as usize].filter(|&q| x.abs() < mesh.rows[q].half_len)
                } else {
                    None
                };
                match neighbour {
                    Some(q) => {
                        gaps[s] = mesh.h;
                        sources[s] = Some(q);
                    }
                    None => {
                        let sign = if dir > 0 { T::one() } else { -T::one() };
                        gaps[s] = y_circle - sign * y;
                    }
                }
            }
            let (am, a0, ap) = second_difference(gaps[0], gaps[1], stencil)?;
            entries[0].1 = entries[0].1 + a0;
            for (s, coef) in [(0usize, am), (1, ap)] {
                if let Some(q) = sources[s] {
                    for (node, l) in quadratic_weights(&extended[q], x) {
                        // Chord ends carry the zero boundary value.
                        if node >= 1 && node <= n {
                            entries.push((q * n + node - 1, -coef * l));
                        }
                    }
                }
            }
            coeffs.push(entries);
            points.push((x, y));
            labels.push((i + 1, row.index));
        }
    }
    Ok(GridOperator {
        block_size: n,
        n_blocks: nb,
        kinds: vec![RowKind::Interior; n * nb],
        coeffs,
        points,
        labels,
    })
}

/// Lagrange weights of the three nodes of `xs` nearest to `x`.
fn quadratic_weights<T: Real>(xs: &[T], x: T) -> [(usize, T); 3] {
    let len = xs.len();
    let q = xs.partition_point(|&v| v < x).clamp(1, len - 1);
    let lo = if x - xs[q - 1] < xs[q] - x { q.saturating_sub(2) } else { q - 1 };
    let lo = lo.min(len - 3);
    let idx = [lo, lo + 1, lo + 2];
    let mut out = [(0, T::zero()); 3];
    for (s, &a) in idx.iter().enumerate() {
        let mut l = T::one();
        for &b in &idx {
            if b != a {
                l = l * (x - xs[b]) / (xs[a] - xs[b]);
            }
        }
        out[s] = (a, l);
    }
    out
}

/// Operator on the polar tensor grid.
///
/// The innermost ring copies the second (`u_1 = u_2`), the rim is Dirichlet,
/// and the first and last angles copy their neighbours unless `periodic`.
pub fn polar_operator<T: Real>(
    mesh: &PolarMesh<T>,
    stencil: Stencil,
    periodic: bool,
) -> Result<GridOperator<T>> {
    let r = mesh.radii();
    let t = mesh.angles();
    let (m, k) = (r.len(), t.len());
    let tau = T::TAU();
    let idx = |i: usize, j: usize| i * k + j;
    let mut kinds = Vec::with_capacity(m * k);
    let mut coeffs = Vec::with_capacity(m * k);
    let mut points = Vec::with_capacity(m * k);
    let mut labels = Vec::with_capacity(m * k);
    for i in 0..m {
        if r[i] <= T::zero() {
            return Err(Error::DegenerateSpacing(format!("radius {} at ring {}", r[i].as_f64(), i + 1)));
        }
        for j in 0..k {
            points.push((r[i] * t[j].cos(), r[i] * t[j].sin()));
            labels.push((i + 1, j + 1));
            let kind = if i == m - 1 {
                RowKind::Dirichlet
            } else if i == 0 {
                RowKind::Copy(idx(1, j))
            } else if !periodic && j == 0 {
                RowKind::Copy(idx(i, 1))
            } else if !periodic && j == k - 1 {
                RowKind::Copy(idx(i, k - 2))
            } else {
                RowKind::Interior
            };
            kinds.push(kind);
            if kind != RowKind::Interior {
                coeffs.push(Vec::new());
                continue;
            }
            let mut e: Vec<(usize, T)> = Vec::with_capacity(7);
            let (dm, dp) = (r[i] - r[i - 1], r[i + 1] - r[i]);
            let (cm, c0, cp) = second_difference(dm, dp, stencil)?;
            let mut diag = c0;
            let (mut lm, mut lp) = (-cm, -cp);
            // - (1/r) u_r
            match stencil {
                Stencil::SecondOrder => {
                    lm = lm + dp / (dm * (dm + dp)) / r[i];
                    lp = lp - dm / (dp * (dm + dp)) / r[i];
                    diag = diag - (dp - dm) / (dm * dp) / r[i];
                }
                Stencil::Compact => {
                    lp = lp - T::one() / (dp * r[i]);
                    diag = diag + T::one() / (dp * r[i]);
                }
            }
            let (jm, jp) = if periodic {
                ((j + k - 1) % k, (j + 1) % k)
            } else {
                (j - 1, j + 1)
            };
            let wrap = |d: T| if d <= T::zero() { d + tau } else { d };
            let (em, ep) = (wrap(t[j] - t[jm]), wrap(t[jp] - t[j]));
            let (am, a0, ap) = second_difference(em, ep, stencil)?;
            let r2 = r[i] * r[i];
            diag = diag + a0 / r2;
            e.push((idx(i, j), diag));
            e.push((idx(i - 1, j), lm));
            e.push((idx(i + 1, j), lp));
            e.push((idx(i, jm), -am / r2));
            e.push((idx(i, jp), -ap / r2));
            coeffs.push(e);
        }
    }
    Ok(GridOperator {
        block_size: k,
        n_blocks: m,
        kinds,
        coeffs,
        points,
        labels,
    })
}

/// Values on the unknowns of a [`GridOperator`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D<T> {
    pub values: Vec<T>,
    pub points: Vec<(T, T)>,
    pub labels: Vec<(usize, usize)>,
    pub time: Option<T>,
}

impl<T: Real> ScalarField2D<T> {
    pub fn new(op: &GridOperator<T>, values: Vec<T>, time: Option<T>) -> Self {
        Self {
            values,
            points: op.points.clone(),
            labels: op.labels.clone(),
            time,
        }
    }

    /// Largest and mean absolute nodal error.
    pub fn errors<E: Fn(T, T) -> T>(&self, exact: E) -> (T, T) {
        let mut max = T::zero();
        let mut sum = T::zero();
        for (&v, &(x, y)) in self.values.iter().zip(&self.points) {
            let e = (v - exact(x, y)).abs();
            max = max.max(e);
            sum = sum + e;
        }
        (max, sum / T::from_usize_lossy(self.values.len().max(1)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    Cartesian,
    Polar,
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cartesian" => Ok(Self::Cartesian),
            "polar" => Ok(Self::Polar),
            _ => Err(Error::Domain(format!("unknown strategy '{s}'"))),
        }
    }
}

/// Grid sizes: `N` for the chord mesh, `(N_r, N_theta)` for the polar mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSize {
    Cartesian(usize),
    Polar(usize, usize),
}

impl GridSize {
    /// `N` or `N_r`.
    pub fn n(&self) -> usize {
        match *self {
            GridSize::Cartesian(n) | GridSize::Polar(n, _) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<T> {
    pub size: GridSize,
    /// `h_min`, `h_max` of the chord mesh or `h_r`, `h_theta`.
    pub steps: (T, T),
    pub er_max: Option<T>,
    pub er_mean: Option<T>,
    /// Relative residual of the linear solve, when there was one.
    pub residual: Option<T>,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PoissonOptions {
    pub stencil: Stencil,
    pub periodic_theta: bool,
}

/// Largest accepted relative residual of a linear solve in `f64`.
pub const RESIDUAL_LIMIT: f64 = 1e-10;

/// [`RESIDUAL_LIMIT`], widened to `1e3 eps` for scalars coarser than `f64`.
pub fn residual_limit<T: Real>() -> T {
    T::lit(RESIDUAL_LIMIT).max(T::lit(1e3) * T::epsilon())
}

/// Mesh-independent description of the discrete problem.
pub enum DiskMesh<T> {
    Cartesian(CartesianDiskMesh<T>),
    Polar(PolarMesh<T>),
}

impl<T: Real> DiskMesh<T> {
    pub fn build(size: GridSize) -> Result<Self> {
        Ok(match size {
            GridSize::Cartesian(n) => DiskMesh::Cartesian(build_cartesian_disk(n)?),
            GridSize::Polar(nr, nt) => DiskMesh::Polar(build_polar(nr, nt)?),
        })
    }

    pub fn size(&self) -> GridSize {
        match self {
            DiskMesh::Cartesian(m) => GridSize::Cartesian(m.n),
            DiskMesh::Polar(m) => GridSize::Polar(m.nr, m.ntheta),
        }
    }

    pub fn steps(&self) -> (T, T) {
        match self {
            DiskMesh::Cartesian(m) => (m.h_min(), m.h_max()),
            DiskMesh::Polar(m) => (m.h_r(), m.h_theta()),
        }
    }

    pub fn operator(&self, opts: &PoissonOptions) -> Result<GridOperator<T>> {
        match self {
            DiskMesh::Cartesian(m) => cartesian_operator(m, opts.stencil),
            DiskMesh::Polar(m) => polar_operator(m, opts.stencil, opts.periodic_theta),
        }
    }
}

pub fn assemble_cartesian<T: Real, F: Fn(T, T) -> T>(
    mesh: &CartesianDiskMesh<T>,
    f: F,
    stencil: Stencil,
) -> Result<BlockTridiagonalSystem<T>> {
    cartesian_operator(mesh, stencil)?.system(f)
}

pub fn assemble_polar<T: Real, F: Fn(T, T) -> T>(
    mesh: &PolarMesh<T>,
    f: F,
    stencil: Stencil,
    periodic: bool,
) -> Result<BlockTridiagonalSystem<T>> {
    polar_operator(mesh, stencil, periodic)?.system(f)
}

/// Solves a block system and checks the residual.
pub fn solve_block_tridiagonal<T: Real>(sys: &BlockTridiagonalSystem<T>) -> Result<(Vec<T>, T)> {
    let x = sys.solve()?;
    let res = sys.relative_residual(&x);
    let limit = residual_limit::<T>();
    if !(res <= limit) {
        return Err(Error::NonFinite(format!(
            "block solve residual {} above {}",
            res.as_f64(),
            limit.as_f64()
        )));
    }
    Ok((x, res))
}

/// Builds the mesh, assembles, solves, and measures errors against `exact` when given.
pub fn solve_poisson<T: Real, F, E>(
    size: GridSize,
    f: F,
    exact: Option<E>,
    opts: &PoissonOptions,
) -> Result<(ScalarField2D<T>, SolveReport<T>)>
where
    F: Fn(T, T) -> T,
    E: Fn(T, T) -> T,
{
    let start = Instant::now();
    let mesh = DiskMesh::build(size)?;
    let op = mesh.operator(opts)?;
    let sys = op.system(f)?;
    let (x, res) = solve_block_tridiagonal(&sys)?;
    let field = ScalarField2D::new(&op, x, None);
    let (er_max, er_mean) = match exact {
        Some(e) => {
            let (a, b) = field.errors(e);
            (Some(a), Some(b))
        }
        None => (None, None),
    };
    let report = SolveReport {
        size,
        steps: mesh.steps(),
        er_max,
        er_mean,
        residual: Some(res),
        wall_time: start.elapsed(),
    };
    Ok((field, report))
}

pub fn solve_poisson_cartesian<T: Real, F, E>(
    n: usize,
    f: F,
    exact: Option<E>,
    opts: &PoissonOptions,
) -> Result<(ScalarField2D<T>, SolveReport<T>)>
where
    F: Fn(T, T) -> T,
    E: Fn(T, T) -> T,
{
    solve_poisson(GridSize::Cartesian(n), f, exact, opts)
}

pub fn solve_poisson_polar<T: Real, F, E>(
    nr: usize,
    ntheta: usize,
    f: F,
    exact: Option<E>,
    opts: &PoissonOptions,
) -> Result<(ScalarField2D<T>, SolveReport<T>)>
where
    F: Fn(T, T) -> T,
    E: Fn(T, T) -> T,
{
    solve_poisson(GridSize::Polar(nr, ntheta), f, exact, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_weights_reproduce_quadratics() {
        let xs = [-1.0, -0.6, -0.1, 0.3, 0.9, 1.0];
        for &x in &[-0.95, -0.3, 0.0, 0.5, 0.95] {
            let w = quadratic_weights(&xs, x);
            let v: f64 = w.iter().map(|&(i, l)| l * xs[i] * xs[i]).sum();
            assert!((v - x * x).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_gap_rejected() {
        assert!(second_difference(0.0f64, 1.0, Stencil::SecondOrder).is_err());
    }

    #[test]
    fn strategy_parse() {
        assert_eq!("polar".parse::<Strategy>().unwrap(), Strategy::Polar);
        assert!("spherical".parse::<Strategy>().is_err());
    }
}
