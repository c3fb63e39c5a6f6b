//! One-dimensional mollifier basis on a uniform mesh of `[a, b]`.
//!
//! The scaled bumps `phi_i(x) = (c/h) Phi((x - x_i)/h)` are orthogonalized by
//! the three-term recurrence `PsiT_{i+1} = phi_{i+1} + lambda_i PsiT_i`, which only
//! needs the two overlap integrals `alpha = (phi_1, phi_2)` and `beta = (phi_1, phi_1)`.
//! The end functions `phi_1` and `phi_{N+1}` are half bumps restricted to `[a, b]`.
//!
//! Indices in the public API are 1-based, as in the usual statement of the
//! method; storage is 0-based (`nodes[k]` holds `x_{k+1}`).

use crate::adaptive;
use crate::{Error, Real, Result};

/// `Phi(t) = exp(1/(t^2 - 1))` for `|t| < 1`, zero elsewhere.
#[inline]
pub fn bump<T: Real>(t: T) -> T {
    let t2 = t * t;
    if t2 >= T::one() {
        return T::zero();
    }
    let e = T::one() / (t2 - T::one());
    if e < T::lit(-700.0) {
        return T::zero();
    }
    e.exp()
}

/// Integrals of the unit bump that every basis is built from.
///
/// All are taken on the reference cell (`h = 1`); the integrals of the scaled
/// bumps follow by the factor `c^2 / h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpProfile<T> {
    /// Support radius, always 1.
    pub radius: T,
    /// `c = 1 / int_{-1}^{1} Phi`.
    pub c: T,
    /// `int_{-1}^{1} Phi`.
    pub mass: T,
    /// `int_0^1 Phi^2`, the squared norm of a half bump.
    pub half_sq: T,
    /// `int_0^1 Phi(t) Phi(t - 1)`, the overlap of two neighbours.
    pub overlap: T,
}

impl<T: Real> BumpProfile<T> {
    pub fn new() -> Result<Self> {
        let mass = adaptive::integrate(bump, -T::one(), T::one())?;
        let half_sq = adaptive::integrate(|t: T| bump(t) * bump(t), T::zero(), T::one())?;
        let overlap =
            adaptive::integrate(|t: T| bump(t) * bump(t - T::one()), T::zero(), T::one())?;
        Ok(Self {
            radius: T::one(),
            c: T::one() / mass,
            mass,
            half_sq,
            overlap,
        })
    }

    /// `lambda_1 = -alpha / beta`, independent of the mesh.
    pub fn lambda1(&self) -> T {
        -self.overlap / self.half_sq
    }
}

/// `c = 1 / int_{-1}^{1} Phi`.
pub fn normalization_constant<T: Real>() -> Result<T> {
    Ok(T::one() / adaptive::integrate(bump, -T::one(), T::one())?)
}

/// `(alpha, beta)` for a uniform mesh of `[a, b]` with `n` cells.
pub fn alpha_beta<T: Real>(a: T, b: T, n: usize) -> Result<(T, T)> {
    check_interval(a, b, n, 2)?;
    let p = BumpProfile::<T>::new()?;
    let h = (b - a) / T::from_usize_lossy(n);
    let s = p.c * p.c / h;
    Ok((s * p.overlap, s * p.half_sq))
}

fn check_lambda<T: Real>(l: T) -> Result<()> {
    if l > -T::one() && l < T::zero() {
        Ok(())
    } else {
        Err(Error::Domain(format!("lambda = {} not in (-1, 0)", l.as_f64())))
    }
}

fn check_interval<T: Real>(a: T, b: T, n: usize, min_n: usize) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::Domain(format!(
            "interval [{}, {}] is empty or not finite",
            a.as_f64(),
            b.as_f64()
        )));
    }
    if n < min_n {
        return Err(Error::Domain(format!("need at least {min_n} cells, got {n}")));
    }
    Ok(())
}

/// `g(X) = lambda_1 / (2 - lambda_1 X)`.
#[inline]
pub fn lambda_map<T: Real>(l1: T, x: T) -> T {
    l1 / (T::lit(2.0) - l1 * x)
}

/// `lambda_1, ..., lambda_count`.
pub fn lambda_sequence<T: Real>(l1: T, count: usize) -> Result<Vec<T>> {
    check_lambda(l1)?;
    let mut out = Vec::with_capacity(count);
    let mut l = l1;
    for _ in 0..count {
        out.push(l);
        l = lambda_map(l1, l);
    }
    Ok(out)
}

/// Fixed point of `g`: `(1 - sqrt(1 - lambda_1^2)) / lambda_1`.
pub fn lambda_fixed_point<T: Real>(l1: T) -> Result<T> {
    check_lambda(l1)?;
    Ok((T::one() - (T::one() - l1 * l1).sqrt()) / l1)
}

/// Rank after which consecutive lambdas differ by less than `eps`.
pub fn stationary_rank<T: Real>(eps: T, l1: T) -> Result<usize> {
    check_lambda(l1)?;
    if !(eps > T::zero() && eps < T::one()) {
        return Err(Error::Domain(format!("eps = {} not in (0, 1)", eps.as_f64())));
    }
    let two = T::lit(2.0);
    let num = (eps * (two - l1 * l1) / (l1 * l1 * l1 - l1)).ln();
    let q = l1 / (two + l1);
    let den = (q * q).ln();
    let v = (num / den).floor();
    if v < T::zero() {
        return Ok(1);
    }
    Ok(v.to_usize().unwrap_or(usize::MAX - 1) + 1)
}

/// Quartic whose root in `(0, 1)` locates the zero of `PsiT_{i+1}` in cell `i`.
#[inline]
pub fn root_quartic<T: Real>(big_l: T, y: T) -> T {
    let two = T::lit(2.0);
    (((big_l * y - two * big_l) * y - big_l) * y + two * (big_l - T::one())) * y + T::one()
}

/// Offset `y*` in `(0, 1)` with `Phi(y* - 1) / Phi(y*) = -lambda`.
///
/// Bisection on the quartic, run until the bracket can no longer shrink.
pub fn root_in_cell<T: Real>(lambda: T) -> Result<T> {
    check_lambda(lambda)?;
    let big_l = (-lambda).ln();
    let (mut lo, mut hi) = (T::zero(), T::one());
    let two = T::lit(2.0);
    for _ in 0..200 {
        let m = (lo + hi) / two;
        if m <= lo || m >= hi {
            break;
        }
        let p = root_quartic(big_l, m);
        if p == T::zero() {
            return Ok(m);
        }
        if p > T::zero() {
            lo = m;
        } else {
            hi = m;
        }
    }
    // Return the endpoint with the smaller residual.
    if root_quartic(big_l, lo).abs() <= root_quartic(big_l, hi).abs() {
        Ok(lo)
    } else {
        Ok(hi)
    }
}

/// How quadrature weights are derived from the basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightRule {
    /// `w_i = 1 / Psi_i(r_i)^2`.
    Collocation,
    /// `w_i = int Psi_i / Psi_i(r_i)`.
    Interpolatory,
    /// The collocation profile rescaled to unit interior density, with the two
    /// outermost weights at each end refitted so cubics integrate exactly.
    #[default]
    Calibrated,
}

impl std::str::FromStr for WeightRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "collocation" => Ok(Self::Collocation),
            "interpolatory" => Ok(Self::Interpolatory),
            "calibrated" => Ok(Self::Calibrated),
            _ => Err(Error::Domain(format!("unknown weight rule '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisOptions<T> {
    /// Lambdas are frozen after the stationary rank for this tolerance.
    pub eps: T,
    pub rule: WeightRule,
}

impl<T: Real> Default for BasisOptions<T> {
    fn default() -> Self {
        Self {
            eps: T::lit(1e-12),
            rule: WeightRule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Basis1D<T> {
    pub a: T,
    pub b: T,
    pub n: usize,
    pub h: T,
    pub profile: BumpProfile<T>,
    /// `x_1 .. x_{N+1}`.
    pub nodes: Vec<T>,
    /// `lambda_1 .. lambda_N`, frozen after `stationary_rank`.
    pub lambdas: Vec<T>,
    pub stationary_rank: usize,
    /// Root offsets `y*_i` within cells `1 .. N-1`.
    pub offsets: Vec<T>,
    /// `r_1 .. r_N` with `r_N = b`.
    pub roots: Vec<T>,
    /// `||PsiT_1||^2 .. ||PsiT_{N+1}||^2`.
    pub tilde_norm_sq: Vec<T>,
    /// Normalized basis value at each quadrature node: `Psi_i(r_i)` for `i < N`
    /// and `Psi_{N+1}(b)` for the last node, the only function not vanishing at `b`.
    pub psi_at_root: Vec<T>,
    /// Quadrature weights for the nodes `roots`, following `rule`.
    pub weights: Vec<T>,
    pub rule: WeightRule,
    pub alpha: T,
    pub beta: T,
}

/// Builds a basis with default options.
pub fn build_basis<T: Real>(a: T, b: T, n: usize, eps: T) -> Result<Basis1D<T>> {
    let profile = BumpProfile::new()?;
    Basis1D::with_profile(
        &profile,
        a,
        b,
        n,
        &BasisOptions {
            eps,
            ..Default::default()
        },
    )
}

impl<T: Real> Basis1D<T> {
    pub fn new(a: T, b: T, n: usize) -> Result<Self> {
        build_basis(a, b, n, T::lit(1e-12))
    }

    /// Builds from precomputed profile constants; use this when many bases are needed.
    pub fn with_profile(
        profile: &BumpProfile<T>,
        a: T,
        b: T,
        n: usize,
        opts: &BasisOptions<T>,
    ) -> Result<Self> {
        check_interval(a, b, n, 4)?;
        let nf = T::from_usize_lossy(n);
        let h = (b - a) / nf;
        let nodes: Vec<T> = (0..=n)
            .map(|k| if k == n { b } else { a + T::from_usize_lossy(k) * h })
            .collect();

        let l1 = profile.lambda1();
        let rank = stationary_rank(opts.eps, l1)?;
        let frozen = lambda_sequence(l1, rank.max(1))?;
        let lam_stat = *frozen.last().expect("rank >= 1");
        let lambdas: Vec<T> = (0..n)
            .map(|k| if k < frozen.len() { frozen[k] } else { lam_stat })
            .collect();

        // Cells past the stationary rank share one offset.
        let y_stat = root_in_cell(lam_stat)?;
        let mut offsets = Vec::with_capacity(n - 1);
        for k in 0..n - 1 {
            offsets.push(if k < frozen.len() - 1 {
                root_in_cell(lambdas[k])?
            } else {
                y_stat
            });
        }
        let mut roots: Vec<T> = offsets
            .iter()
            .enumerate()
            .map(|(k, &y)| nodes[k] + y * h)
            .collect();
        roots.push(b);

        let (bu, au) = (profile.half_sq, profile.overlap);
        let scale = profile.c * profile.c / h;
        let two = T::lit(2.0);
        // Unit-scaled squared norms of PsiT_1 .. PsiT_{N+1}.
        let mut unit_norm = Vec::with_capacity(n + 1);
        unit_norm.push(bu);
        for k in 1..n {
            unit_norm.push(two * bu + lambdas[k - 1] * au);
        }
        unit_norm.push(bu + lambdas[n - 1] * au);
        if unit_norm.iter().any(|&v| !(v > T::zero())) {
            return Err(Error::Domain("non-positive basis norm".into()));
        }
        let tilde_norm_sq: Vec<T> = unit_norm.iter().map(|&v| v * scale).collect();

        // Phi values at the nodes on the reference cell.
        let mut node_bump: Vec<T> = offsets.iter().map(|&y| bump(y)).collect();
        node_bump.push(bump(T::zero()));
        let mut node_norm: Vec<T> = unit_norm[..n - 1].to_vec();
        node_norm.push(unit_norm[n]);

        let psi_at_root: Vec<T> = node_bump
            .iter()
            .zip(&node_norm)
            .map(|(&p, &nn)| (profile.c / h) * p / (scale * nn).sqrt())
            .collect();

        let collocation: Vec<T> = node_bump
            .iter()
            .zip(&node_norm)
            .map(|(&p, &nn)| h * nn / (p * p))
            .collect();

        let weights = match opts.rule {
            WeightRule::Collocation => collocation,
            WeightRule::Interpolatory => {
                // J_i = int PsiT_i in units of h; phi_i has unit mass, half bumps 1/2.
                let half = T::lit(0.5);
                let mut j = Vec::with_capacity(n + 1);
                j.push(half);
                for k in 1..=n {
                    let own = if k < n { T::one() } else { half };
                    j.push(own + lambdas[k - 1] * j[k - 1]);
                }
                let mut w: Vec<T> = (0..n - 1)
                    .map(|k| h * j[k] / (profile.c * node_bump[k]))
                    .collect();
                w.push(h * j[n] / (profile.c * node_bump[n - 1]));
                w
            }
            WeightRule::Calibrated => {
                let w_stat = (two * bu + lam_stat * au) / (bump(y_stat) * bump(y_stat));
                let mut w: Vec<T> = collocation.iter().map(|&v| v / w_stat).collect();
                end_correct(a, b, &roots, &mut w)?;
                w
            }
        };

        Ok(Self {
            a,
            b,
            n,
            h,
            profile: *profile,
            nodes,
            lambdas,
            stationary_rank: rank,
            offsets,
            roots,
            tilde_norm_sq,
            psi_at_root,
            weights,
            rule: opts.rule,
            alpha: scale * au,
            beta: scale * bu,
        })
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= 1 && i <= self.n + 1 {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                max: self.n + 1,
            })
        }
    }

    /// `phi_i(x)`, zero outside `[a, b]`.
    pub fn phi(&self, i: usize, x: T) -> Result<T> {
        self.check_index(i)?;
        Ok(self.phi_unchecked(i, x))
    }

    #[inline]
    fn phi_unchecked(&self, i: usize, x: T) -> T {
        if x < self.a || x > self.b {
            return T::zero();
        }
        self.profile.c / self.h * bump((x - self.nodes[i - 1]) / self.h)
    }

    /// 1-based index `m` of the cell `[x_m, x_{m+1}]` containing `x`.
    fn cell_of(&self, x: T) -> usize {
        let k = ((x - self.a) / self.h).floor().to_usize().unwrap_or(0);
        k.min(self.n - 1) + 1
    }

    /// Unnormalized orthogonal function `PsiT_i(x)`.
    ///
    /// Only the two bumps whose support contains `x` contribute.
    pub fn eval_tilde_psi(&self, i: usize, x: T) -> Result<T> {
        self.check_index(i)?;
        if x < self.a || x > self.b {
            return Ok(T::zero());
        }
        let m = self.cell_of(x);
        let mut sum = T::zero();
        for k in [m, m + 1] {
            if k > i {
                continue;
            }
            // Coefficient of phi_k in PsiT_i is lambda_k * ... * lambda_{i-1}.
            let mut coef = T::one();
            for q in k..i {
                coef = coef * self.lambdas[q - 1];
                if coef == T::zero() {
                    break;
                }
            }
            sum = sum + coef * self.phi_unchecked(k, x);
        }
        Ok(sum)
    }

    /// Normalized `Psi_i(x)`.
    pub fn eval_psi(&self, i: usize, x: T) -> Result<T> {
        Ok(self.eval_tilde_psi(i, x)? / self.tilde_norm_sq[i - 1].sqrt())
    }

    /// `1 / Psi_i(r_i)^2` for every node, whatever the active rule.
    pub fn collocation_weights(&self) -> Vec<T> {
        self.psi_at_root.iter().map(|&p| T::one() / (p * p)).collect()
    }

    /// Gram matrix of `Psi_1 .. Psi_{N+1}` by adaptive integration cell by cell.
    pub fn gram_matrix(&self, tol: T) -> Result<Vec<Vec<T>>> {
        let m = self.n + 1;
        let mut g = vec![vec![T::zero(); m]; m];
        let cell_tol = tol / T::from_usize_lossy(self.n);
        for i in 1..=m {
            for j in i..=m {
                // PsiT_i vanishes beyond x_{i+1}.
                let last_cell = i.min(self.n);
                let mut s = T::zero();
                for c in 1..=last_cell {
                    s = s + adaptive::adaptive_simpson(
                        |x| {
                            self.eval_psi(i, x).unwrap_or(T::nan())
                                * self.eval_psi(j, x).unwrap_or(T::nan())
                        },
                        self.nodes[c - 1],
                        self.nodes[c],
                        cell_tol,
                        adaptive::MAX_DEPTH,
                    )?;
                }
                g[i - 1][j - 1] = s;
                g[j - 1][i - 1] = s;
            }
        }
        Ok(g)
    }
}

/// Refits the two outer weights at each end so Legendre moments up to degree 3 are exact.
fn end_correct<T: Real>(a: T, b: T, x: &[T], w: &mut [T]) -> Result<()> {
    let len = x.len();
    let idx = [0, 1, len - 2, len - 1];
    let two = T::lit(2.0);
    let legendre = |v: T| -> [T; 4] {
        let t = two * (v - a) / (b - a) - T::one();
        let t2 = t * t;
        [
            T::one(),
            t,
            (T::lit(3.0) * t2 - T::one()) / two,
            (T::lit(5.0) * t2 - T::lit(3.0)) * t / two,
        ]
    };
    let mut rhs = [b - a, T::zero(), T::zero(), T::zero()];
    for k in 2..len - 2 {
        let p = legendre(x[k]);
        for d in 0..4 {
            rhs[d] = rhs[d] - p[d] * w[k];
        }
    }
    let mut mat = vec![T::zero(); 16];
    for (col, &k) in idx.iter().enumerate() {
        let p = legendre(x[k]);
        for d in 0..4 {
            mat[d * 4 + col] = p[d];
        }
    }
    let lu = crate::linalg::DenseLu::factor(mat, 4)
        .ok_or_else(|| Error::Domain("end correction system is singular".into()))?;
    let mut sol = rhs.to_vec();
    lu.solve_in_place(&mut sol);
    for (col, &k) in idx.iter().enumerate() {
        w[k] = sol[col];
    }
    Ok(())
}
