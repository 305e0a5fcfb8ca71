//! Finite-difference Dirac-type operators.

use num_complex::Complex64;

use super::{HypothesisTag, ModelInstance};
use crate::coupling::EffectiveOperator;
use crate::error::{Error, Result};
use crate::operator::{DenseOperator, Matrix};

const MIN_CENTRAL_SITES: usize = 8;
const MIN_FORWARD_SITES: usize = 4;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Periodic central difference `(ψ_{j+1} − ψ_{j−1}) / 2h` on `n` sites.
pub fn central_difference(n: usize, h: f64) -> Matrix {
    let mut d = Matrix::zeros(n, n);
    for j in 0..n {
        d[(j, (j + 1) % n)] += Complex64::new(0.5 / h, 0.0);
        d[(j, (j + n - 1) % n)] -= Complex64::new(0.5 / h, 0.0);
    }
    d
}

fn check_grid(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::BadGrid { n, min });
    }
    Ok(())
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} = {x} must be positive")));
    }
    Ok(())
}

/// Component-major layout of the chiral doublet `(ψ_L¹, ψ_L², ψ_R¹, ψ_R²)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpinorLayout {
    pub n_sites: usize,
}

impl SpinorLayout {
    pub const COMPONENTS: [&'static str; 4] = ["L1", "L2", "R1", "R2"];

    pub fn dim(&self) -> usize {
        4 * self.n_sites
    }

    pub fn index(&self, component: usize, site: usize) -> usize {
        debug_assert!(component < 4 && site < self.n_sites);
        component * self.n_sites + site
    }

    pub fn is_left_handed(&self, index: usize) -> bool {
        index < 2 * self.n_sites
    }
}

/// Limit for a diagonal-in-coordinates kernel: `P` projects onto the listed
/// coordinates and the compression is the corresponding submatrix of `A`.
fn coordinate_limit(a: &DenseOperator, kept: &[usize]) -> Result<EffectiveOperator> {
    let n = a.dim();
    let r = kept.len();
    let mut basis = Matrix::zeros(n, r);
    for (k, &i) in kept.iter().enumerate() {
        basis[(i, k)] = ONE;
    }
    let coords = basis.adjoint();
    let compressed = Matrix::from_fn(r, r, |i, j| a.get(kept[i], kept[j]));
    EffectiveOperator::from_parts(basis, coords, compressed)
}

/// Chiral Dirac doublet on a periodic grid of `n` sites with only the
/// left-handed components coupled to `B`.
///
/// Index `c·n + s` for component `c ∈ (L1, L2, R1, R2)` and site `s`.
/// `A = [[−iD⊗I₂, m I₂], [m I₂, iD⊗I₂]]` with `D` the central difference and
/// `B = (w/2)·diag(τ₃ on L, 0 on R)`.
pub fn dirac_weak_1d(n: usize, length: f64, mass: f64, w03: &[f64]) -> Result<ModelInstance> {
    check_grid(n, MIN_CENTRAL_SITES)?;
    check_positive("length", length)?;
    check_positive("mass", mass)?;
    if w03.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: w03.len(),
        });
    }
    if w03.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidParameter("w03 must be finite".into()));
    }
    let h = length / n as f64;
    let d = central_difference(n, h);
    let layout = SpinorLayout { n_sites: n };
    let dim = layout.dim();
    let m = Complex64::new(mass, 0.0);
    let mut a = Matrix::zeros(dim, dim);
    for c in 0..2 {
        for s in 0..n {
            for t in 0..n {
                a[(layout.index(c, s), layout.index(c, t))] = -I * d[(s, t)];
                a[(layout.index(c + 2, s), layout.index(c + 2, t))] = I * d[(s, t)];
            }
            a[(layout.index(c, s), layout.index(c + 2, s))] = m;
            a[(layout.index(c + 2, s), layout.index(c, s))] = m;
        }
    }
    let mut diag = vec![0.0; dim];
    for s in 0..n {
        diag[layout.index(0, s)] = 0.5 * w03[s];
        diag[layout.index(1, s)] = -0.5 * w03[s];
    }
    let a = DenseOperator::new(a)?;
    let b = DenseOperator::from_real_diagonal(&diag)?;

    let coupled = w03.iter().any(|&w| w != 0.0);
    let mut tags = vec![HypothesisTag::SelfAdjoint, HypothesisTag::RelBounded];
    if coupled {
        tags.extend([HypothesisTag::OrthogonalP, HypothesisTag::QuasinilpotentZero]);
    }
    let kept: Vec<usize> = (0..dim).filter(|&i| diag[i] == 0.0).collect();
    let limit = coupling_limit_if(coupled, &a, &kept)?;
    let mut inst = ModelInstance::new(
        "dirac_weak_1d",
        "1+1-d Dirac doublet, left components coupled through w03·τ3/2",
        a,
        b,
        &tags,
    )?
    .with_param("n", n)
    .with_param("length", length)
    .with_param("mass", mass);
    if let Some(limit) = limit {
        inst = inst.with_expected_limit(limit)?;
    }
    Ok(inst)
}

fn coupling_limit_if(coupled: bool, a: &DenseOperator, kept: &[usize]) -> Result<Option<EffectiveOperator>> {
    if coupled {
        coordinate_limit(a, kept).map(Some)
    } else {
        Ok(None)
    }
}

/// Forward-difference lattice Dirac operator `(H₀ψ)_j = −iσ_x(ψ_{j+1} − ψ_j)`
/// on a periodic chain, with `B = diag(v)⊗I₂`.
///
/// Index `2·site + spin`. `H₀` is normal with spectrum `{±i(e^{ik} − 1)}`
/// but not self-adjoint.
pub fn lattice_dirac_forward(n: usize, v: &[f64]) -> Result<ModelInstance> {
    check_grid(n, MIN_FORWARD_SITES)?;
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("potential must be finite".into()));
    }
    if v.iter().all(|&x| x != 0.0) {
        return Err(Error::EmptyKernel);
    }
    let dim = 2 * n;
    let sigma_x = [[ZERO, ONE], [ONE, ZERO]];
    let mut a = Matrix::zeros(dim, dim);
    for j in 0..n {
        let next = (j + 1) % n;
        for s in 0..2 {
            for t in 0..2 {
                let e = -I * sigma_x[s][t];
                a[(2 * j + s, 2 * next + t)] += e;
                a[(2 * j + s, 2 * j + t)] -= e;
            }
        }
    }
    let diag: Vec<f64> = v.iter().flat_map(|&x| [x, x]).collect();
    let a = DenseOperator::new(a)?;
    let b = DenseOperator::from_real_diagonal(&diag)?;

    let coupled = v.iter().any(|&x| x != 0.0);
    let mut tags = vec![HypothesisTag::RelBounded];
    if coupled {
        tags.extend([HypothesisTag::OrthogonalP, HypothesisTag::QuasinilpotentZero]);
    }
    let kept: Vec<usize> = (0..dim).filter(|&i| diag[i] == 0.0).collect();
    let limit = coupling_limit_if(coupled, &a, &kept)?;
    let mut inst = ModelInstance::new(
        "lattice_dirac_forward",
        "forward-difference lattice Dirac operator with potential v",
        a,
        b,
        &tags,
    )?
    .with_param("n", n);
    if let Some(limit) = limit {
        inst = inst.with_expected_limit(limit)?;
    }
    Ok(inst)
}

/// Two Dirac fermions at fixed transverse momentum; `B = I⊗σ_y` acts on the
/// first only, so the second survives in the limit.
///
/// Index `f·2n + 2·site + spin`. Each fermion has `A_f = −iD⊗σ_x + m I⊗σ_z`.
/// The anticommutator `A*B + B*A` vanishes identically.
pub fn doublet_momentum_model(n: usize, length: f64, mass: f64, k: f64) -> Result<ModelInstance> {
    check_grid(n, MIN_CENTRAL_SITES)?;
    check_positive("length", length)?;
    check_positive("mass", mass)?;
    if !k.is_finite() {
        return Err(Error::InvalidParameter("k must be finite".into()));
    }
    let h = length / n as f64;
    let d = central_difference(n, h);
    let half = 2 * n;
    let dim = 2 * half;
    let sigma_x = [[ZERO, ONE], [ONE, ZERO]];
    let sigma_y = [[ZERO, -I], [I, ZERO]];
    let sigma_z = [[ONE, ZERO], [ZERO, -ONE]];
    let mut a = Matrix::zeros(dim, dim);
    let mut b = Matrix::zeros(dim, dim);
    for f in 0..2 {
        let off = f * half;
        for s in 0..n {
            for t in 0..n {
                if d[(s, t)] == ZERO {
                    continue;
                }
                for p in 0..2 {
                    for q in 0..2 {
                        a[(off + 2 * s + p, off + 2 * t + q)] += -I * d[(s, t)] * sigma_x[p][q];
                    }
                }
            }
            for p in 0..2 {
                for q in 0..2 {
                    a[(off + 2 * s + p, off + 2 * s + q)] += mass * sigma_z[p][q];
                    if f == 0 {
                        b[(2 * s + p, 2 * s + q)] = sigma_y[p][q];
                    }
                }
            }
        }
    }
    let a = DenseOperator::new(a)?;
    let b = DenseOperator::new(b)?;
    let kept: Vec<usize> = (half..dim).collect();
    let limit = coordinate_limit(&a, &kept)?;
    ModelInstance::new(
        "doublet_momentum_model",
        "two Dirac fermions at fixed momentum, sigma_y coupling on the first",
        a,
        b,
        &[
            HypothesisTag::SelfAdjoint,
            HypothesisTag::OrthogonalP,
            HypothesisTag::QuasinilpotentZero,
            HypothesisTag::RelBounded,
        ],
    )?
    .with_param("n", n)
    .with_param("length", length)
    .with_param("mass", mass)
    .with_param("k", k)
    .with_expected_limit(limit)
}
