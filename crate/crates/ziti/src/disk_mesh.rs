//! Chord-sweep and polar discretizations of the unit disk.

use crate::bump_basis::{Basis1D, BasisOptions, BumpProfile, WeightRule};
use crate::{Error, Real, Result};

/// One horizontal (or vertical) chord of the disk with its own basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Chord<T> {
    /// Position `j` of the chord in `1 .. N-1`.
    pub index: usize,
    /// Ordinate `y_j` of a row (abscissa `x_i` of a column).
    pub offset: T,
    /// Half length `sqrt(1 - offset^2)`; the chord spans `[-half_len, half_len]`.
    pub half_len: T,
    pub basis: Basis1D<T>,
}

impl<T: Real> Chord<T> {
    pub fn step(&self) -> T {
        self.basis.h
    }

    /// Interior collocation abscissae `r_1 .. r_{N-1}`.
    pub fn interior_roots(&self) -> &[T] {
        &self.basis.roots[..self.basis.n - 1]
    }
}

/// Disk covered by `N - 1` horizontal and `N - 1` vertical chords at spacing `h = 2/N`.
///
/// Every chord carries a basis with `N` cells, so the cell size shrinks
/// towards the caps. Collocation points of the Poisson and heat solvers are
/// the interior roots of the rows, `(r_i^j, y_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianDiskMesh<T> {
    pub n: usize,
    pub h: T,
    pub rows: Vec<Chord<T>>,
    pub cols: Vec<Chord<T>>,
    /// Chord indices skipped because the chord was too short.
    pub dropped: Vec<usize>,
}

/// Chords shorter than this multiple of `h` are skipped.
const CAP_THRESHOLD: f64 = 4e-3;

pub fn build_cartesian_disk<T: Real>(n: usize) -> Result<CartesianDiskMesh<T>> {
    build_cartesian_disk_with(n, WeightRule::default())
}

pub fn build_cartesian_disk_with<T: Real>(
    n: usize,
    rule: WeightRule,
) -> Result<CartesianDiskMesh<T>> {
    if n < 8 {
        return Err(Error::Domain(format!("cartesian mesh needs N >= 8, got {n}")));
    }
    let profile = BumpProfile::new()?;
    let opts = BasisOptions {
        rule,
        ..Default::default()
    };
    let h = T::lit(2.0) / T::from_usize_lossy(n);
    let mut chords = Vec::with_capacity(n - 1);
    let mut dropped = Vec::new();
    for j in 1..n {
        let offset = -T::one() + T::from_usize_lossy(j) * h;
        let half_len = (T::one() - offset * offset).max(T::zero()).sqrt();
        if T::lit(2.0) * half_len < T::lit(CAP_THRESHOLD) * h {
            dropped.push(j);
            continue;
        }
        let basis = Basis1D::with_profile(&profile, -half_len, half_len, n, &opts)?;
        chords.push(Chord {
            index: j,
            offset,
            half_len,
            basis,
        });
    }
    // The mesh is symmetric under x <-> y.
    Ok(CartesianDiskMesh {
        n,
        h,
        cols: chords.clone(),
        rows: chords,
        dropped,
    })
}

impl<T: Real> CartesianDiskMesh<T> {
    /// Smallest row step (the rows next to the caps).
    pub fn h_min(&self) -> T {
        self.rows.iter().map(|c| c.step()).fold(T::infinity(), T::min)
    }

    /// Largest row step (the diameter when `N` is even).
    pub fn h_max(&self) -> T {
        self.rows.iter().map(|c| c.step()).fold(T::zero(), T::max)
    }

    /// Number of interior collocation points per row.
    pub fn row_unknowns(&self) -> usize {
        self.n - 1
    }

    /// Row collocation points in row-major order: `(i, j, x, y)` with 1-based `i`, `j`.
    pub fn collocation_points(&self) -> Vec<(usize, usize, T, T)> {
        let mut out = Vec::with_capacity(self.rows.len() * (self.n - 1));
        for row in &self.rows {
            for (k, &x) in row.interior_roots().iter().enumerate() {
                out.push((k + 1, row.index, x, row.offset));
            }
        }
        out
    }
}

/// Tensor grid over `[0, 1] x [0, 2 pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarMesh<T> {
    pub nr: usize,
    pub ntheta: usize,
    /// Basis on `[0, 1]` with `N_r - 1` cells.
    pub radial: Basis1D<T>,
    /// Basis on `[0, 2 pi]` with `N_theta - 1` cells.
    pub angular: Basis1D<T>,
}

pub fn build_polar<T: Real>(nr: usize, ntheta: usize) -> Result<PolarMesh<T>> {
    build_polar_with(nr, ntheta, WeightRule::default())
}

pub fn build_polar_with<T: Real>(nr: usize, ntheta: usize, rule: WeightRule) -> Result<PolarMesh<T>> {
    // Each direction needs a basis with at least four cells.
    if nr < 5 || ntheta < 5 {
        return Err(Error::Domain(format!(
            "polar mesh needs N_r, N_theta >= 5, got {nr} x {ntheta}"
        )));
    }
    let profile = BumpProfile::new()?;
    let opts = BasisOptions {
        rule,
        ..Default::default()
    };
    let radial = Basis1D::with_profile(&profile, T::zero(), T::one(), nr - 1, &opts)?;
    let angular = Basis1D::with_profile(&profile, T::zero(), T::TAU(), ntheta - 1, &opts)?;
    Ok(PolarMesh {
        nr,
        ntheta,
        radial,
        angular,
    })
}

impl<T: Real> PolarMesh<T> {
    pub fn h_r(&self) -> T {
        self.radial.h
    }

    pub fn h_theta(&self) -> T {
        self.angular.h
    }

    /// Radii `r_1 .. r_M`, the last one on the rim.
    pub fn radii(&self) -> &[T] {
        &self.radial.roots
    }

    /// Angles `theta_1 .. theta_K`, the last one equal to `2 pi`.
    pub fn angles(&self) -> &[T] {
        &self.angular.roots
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_n_rejected() {
        assert!(build_cartesian_disk::<f64>(7).is_err());
        assert!(build_polar::<f64>(4, 10).is_err());
    }

    #[test]
    fn steps_at_n100() {
        let m = build_cartesian_disk::<f64>(100).unwrap();
        assert!((m.h_max() - 0.02).abs() < 1e-15);
        assert!(m.dropped.is_empty());
        assert_eq!(m.rows.len(), 99);
    }
}
