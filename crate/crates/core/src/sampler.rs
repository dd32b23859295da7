//! Sampling `θ = μ + Az` with `K = AAᵀ`, realized without ever forming `K`:
//! the precision is factorized as `K⁻¹ = LLᵀ` (block-banded, linear in N),
//! so `A = L⁻ᵀ` and a sample costs one banded back-substitution.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gp_prior::GpPrior;
use crate::trajectory::Trajectory;

/// Lower-triangular block-bidiagonal Cholesky factor of the precision.
#[derive(Debug, Clone)]
pub struct PrecisionFactor {
    /// Lower-triangular diagonal blocks `L_ii`.
    diag: Vec<DMatrix<f64>>,
    /// Blocks `L_{i+1,i}`.
    sub: Vec<DMatrix<f64>>,
    block: usize,
}

pub fn factorize(prior: &GpPrior) -> Result<PrecisionFactor> {
    factorize_blocks(&prior.precision_diag, &prior.precision_offdiag)
}

/// Factorizes a symmetric block-tridiagonal matrix given its diagonal blocks
/// and the blocks directly below the diagonal.
pub fn factorize_blocks(diag: &[DMatrix<f64>], offdiag: &[DMatrix<f64>]) -> Result<PrecisionFactor> {
    let Some(first) = diag.first() else {
        return Err(Error::invalid("empty precision"));
    };
    let block = first.nrows();
    if offdiag.len() + 1 != diag.len() {
        return Err(Error::invalid(format!(
            "{} diagonal blocks need {} off-diagonal blocks, got {}",
            diag.len(),
            diag.len() - 1,
            offdiag.len()
        )));
    }
    if diag
        .iter()
        .chain(offdiag)
        .any(|b| b.nrows() != block || b.ncols() != block)
    {
        return Err(Error::invalid("precision blocks must share one square size"));
    }

    let mut l_diag: Vec<DMatrix<f64>> = Vec::with_capacity(diag.len());
    let mut l_sub: Vec<DMatrix<f64>> = Vec::with_capacity(offdiag.len());
    for (i, d) in diag.iter().enumerate() {
        let schur = match l_sub.last() {
            Some(prev) => d - prev * prev.transpose(),
            None => d.clone(),
        };
        let l = dense_cholesky(&schur).ok_or(Error::NotPositiveDefinite { block: i })?;
        if let Some(b) = offdiag.get(i) {
            // L_{i+1,i} = B L_iiᵀ⁻¹, i.e. solve L_ii X = Bᵀ and transpose.
            let x = l
                .solve_lower_triangular(&b.transpose())
                .ok_or(Error::NotPositiveDefinite { block: i })?;
            l_sub.push(x.transpose());
        }
        l_diag.push(l);
    }
    Ok(PrecisionFactor {
        diag: l_diag,
        sub: l_sub,
        block,
    })
}

fn dense_cholesky(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

impl PrecisionFactor {
    /// Entries of one random draw: `2D(N+1)`.
    pub fn len(&self) -> usize {
        self.block * self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    pub fn diag_blocks(&self) -> &[DMatrix<f64>] {
        &self.diag
    }

    pub fn sub_blocks(&self) -> &[DMatrix<f64>] {
        &self.sub
    }

    /// Dense `L`, for validation.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.block;
        let total = self.len();
        let mut l = DMatrix::zeros(total, total);
        for (i, b) in self.diag.iter().enumerate() {
            l.view_mut((i * n, i * n), (n, n)).copy_from(b);
        }
        for (i, b) in self.sub.iter().enumerate() {
            l.view_mut(((i + 1) * n, i * n), (n, n)).copy_from(b);
        }
        l
    }

    /// Solves `Lᵀ x = z` in place, last block first.
    pub fn solve_transpose_in_place(&self, x: &mut [f64]) {
        let n = self.block;
        let blocks = self.diag.len();
        for i in (0..blocks).rev() {
            let (head, tail) = x.split_at_mut((i + 1) * n);
            let xi = &mut head[i * n..];
            if let Some(sub) = self.sub.get(i) {
                // xi -= L_{i+1,i}ᵀ x_{i+1}
                let next = &tail[..n];
                for r in 0..n {
                    let mut acc = 0.0;
                    for c in 0..n {
                        acc += sub[(c, r)] * next[c];
                    }
                    xi[r] -= acc;
                }
            }
            // L_iiᵀ is upper triangular.
            let l = &self.diag[i];
            for r in (0..n).rev() {
                let mut acc = xi[r];
                for c in r + 1..n {
                    acc -= l[(c, r)] * xi[c];
                }
                xi[r] = acc / l[(r, r)];
            }
        }
    }
}

/// `μ + L⁻ᵀ z`.
pub fn sample(factor: &PrecisionFactor, mean: &Trajectory, z: &[f64]) -> Result<Trajectory> {
    if z.len() != factor.len() || mean.values().len() != factor.len() {
        return Err(Error::invalid(format!(
            "sample needs {} normals and a matching mean (got {} and {})",
            factor.len(),
            z.len(),
            mean.values().len()
        )));
    }
    let mut x = z.to_vec();
    factor.solve_transpose_in_place(&mut x);
    for (xi, mi) in x.iter_mut().zip(mean.values()) {
        *xi += mi;
    }
    Trajectory::from_flat(mean.dim(), *mean.grid(), x)
}

/// Independent random stream for sample `index` of the batch seeded by `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn standard_normals(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// Draws sample `index` of the batch identified by `seed`.
pub fn sample_indexed(factor: &PrecisionFactor, mean: &Trajectory, seed: u64, index: u64) -> Result<Trajectory> {
    let z = standard_normals(&mut substream(seed, index), factor.len());
    sample(factor, mean, &z)
}

/// `count` samples; sample `k` depends only on `(seed, k)`, so the batch is
/// the same whatever rayon pool it runs in.
pub fn sample_batch(factor: &PrecisionFactor, mean: &Trajectory, count: usize, seed: u64) -> Result<Vec<Trajectory>> {
    if count == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    (0..count as u64)
        .into_par_iter()
        .map(|k| sample_indexed(factor, mean, seed, k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp_prior::{build_prior, Anchors, NoiseProfile, TimeGrid};

    fn small_prior() -> GpPrior {
        let grid = TimeGrid::new(20.0, 3).unwrap();
        build_prior(
            &[0.0],
            &[4.0],
            grid,
            NoiseProfile::Constant { q_c: 1.0 },
            Anchors::default(),
        )
        .unwrap()
    }

    #[test]
    fn reconstructs_precision() {
        let prior = small_prior();
        let l = factorize(&prior).unwrap().to_dense();
        let p = prior.dense_precision();
        let oracle = p.clone().cholesky().unwrap().l();
        assert!((&l * l.transpose() - &p).norm() < 1e-9 * p.norm().max(1.0));
        assert!((l - oracle).abs().max() < 1e-6);
    }

    #[test]
    fn identity_precision_gives_identity_factor() {
        let diag = vec![DMatrix::identity(2, 2); 4];
        let off = vec![DMatrix::zeros(2, 2); 3];
        let f = factorize_blocks(&diag, &off).unwrap();
        assert_eq!(f.to_dense(), DMatrix::identity(8, 8));
    }

    #[test]
    fn indefinite_block_reports_index() {
        let mut diag = vec![DMatrix::identity(2, 2); 3];
        diag[2][(1, 1)] = -1.0;
        let off = vec![DMatrix::zeros(2, 2); 2];
        assert!(matches!(
            factorize_blocks(&diag, &off),
            Err(Error::NotPositiveDefinite { block: 2 })
        ));
    }

    #[test]
    fn zero_draw_returns_mean() {
        let prior = small_prior();
        let f = factorize(&prior).unwrap();
        let mean = prior.mean.support();
        let s = sample(&f, mean, &vec![0.0; f.len()]).unwrap();
        assert_eq!(&s, mean);
    }

    #[test]
    fn rejects_wrong_draw_length() {
        let prior = small_prior();
        let f = factorize(&prior).unwrap();
        assert!(sample(&f, prior.mean.support(), &[0.0; 3]).is_err());
        assert!(sample_batch(&f, prior.mean.support(), 0, 1).is_err());
    }

    #[test]
    fn batch_is_independent_of_pool_size() {
        let prior = small_prior();
        let f = factorize(&prior).unwrap();
        let mean = prior.mean.support();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sample_batch(&f, mean, 64, 99).unwrap())
        };
        assert_eq!(run(1), run(4));
        assert_eq!(run(1)[0], sample_indexed(&f, mean, 99, 0).unwrap());
    }
}
