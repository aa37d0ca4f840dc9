//! The matrix symbol A(t, xi) of a first-order system: assembly from the
//! coefficient matrices, verification of hyperbolicity with constant
//! multiplicities, a t-continuous eigenstructure, and its mollification.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};
use crate::spectral::{MatrixFunction, SampledFunction};
use crate::zygmund::{mollify, MollifierKernel, RegularityClass};

const MAX_COND: f64 = 1e8;
const CONTINUITY_ANGLE: f64 = 0.2;

/// The time-dependent coefficients A_j(t) of `d_t + sum_j A_j(t) d_j`.
#[derive(Debug, Clone)]
pub struct CoefficientMatrices {
    a_js: Vec<MatrixFunction>,
    m: usize,
    regularity: RegularityClass,
    /// Measured sup_t of the largest entry magnitude over all A_j.
    pub k0: f64,
}

impl CoefficientMatrices {
    pub fn new(a_js: Vec<MatrixFunction>, regularity: RegularityClass) -> Result<Self> {
        if a_js.is_empty() {
            return Err(CoreError::InvalidParameter("need at least one coefficient matrix".into()));
        }
        let m = a_js[0].dim();
        let mut k0 = 0.0f64;
        for a in &a_js {
            if a.dim() != m || a.len() != a_js[0].len() {
                return Err(CoreError::InvalidParameter("coefficient matrices on mismatched grids".into()));
            }
            if a.max_imag() > 1e-12 * (1.0 + a.sup_abs()) {
                return Err(CoreError::InvalidParameter("coefficient entries must be real".into()));
            }
            k0 = k0.max(a.sup_abs());
        }
        Ok(Self { a_js, m, regularity, k0 })
    }

    pub fn space_dim(&self) -> usize {
        self.a_js.len()
    }

    pub fn system_dim(&self) -> usize {
        self.m
    }

    pub fn regularity(&self) -> RegularityClass {
        self.regularity
    }

    pub fn coefficient(&self, j: usize) -> &MatrixFunction {
        &self.a_js[j]
    }
}

/// Assemble A(t, xi) = sum_j xi_j A_j(t); exactly homogeneous of degree 1.
pub fn assemble_symbol(coeffs: &CoefficientMatrices, xi: &[f64]) -> Result<MatrixFunction> {
    if xi.len() != coeffs.space_dim() {
        return Err(CoreError::InvalidParameter(format!(
            "xi has {} components, system has n = {}",
            xi.len(),
            coeffs.space_dim()
        )));
    }
    if xi.iter().all(|&c| c == 0.0) {
        return Err(CoreError::InvalidParameter("xi must be nonzero".into()));
    }
    let mut acc = coeffs.a_js[0].scale(C64::new(xi[0], 0.0));
    for (j, a) in coeffs.a_js.iter().enumerate().skip(1) {
        acc = acc.add(&a.scale(C64::new(xi[j], 0.0)));
    }
    Ok(acc)
}

/// Eigenvalues (decreasing), right/left eigenvector matrices and the
/// constant multiplicity pattern of a symbol at a frozen xi.
#[derive(Debug, Clone)]
pub struct EigenStructure {
    /// lambda_1 >= ... >= lambda_m as functions of t.
    pub lambdas: Vec<SampledFunction>,
    /// Right eigenvectors as columns, unit norm, continuous in t.
    pub p: MatrixFunction,
    /// Q = P^-1; rows are left eigenvectors.
    pub q: MatrixFunction,
    /// Sizes (m_h) of the constant-multiplicity blocks, in eigenvalue order.
    pub multiplicities: Vec<usize>,
    /// First eigenvalue index j_h of each block.
    pub block_starts: Vec<usize>,
    pub xi: Vec<f64>,
    /// Largest condition number of P over the grid.
    pub max_cond: f64,
}

fn xi_norm(xi: &[f64]) -> f64 {
    xi.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Cluster sorted-descending eigenvalues into constant-multiplicity blocks.
fn cluster(lams: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let spread = lams[0] - lams[lams.len() - 1];
    let scale = lams.iter().map(|l| l.abs()).fold(0.0f64, f64::max);
    let tol = 1e-6 * spread.max(scale).max(1e-300);
    let mut sizes = Vec::new();
    let mut means = Vec::new();
    let mut start = 0;
    for i in 1..=lams.len() {
        if i == lams.len() || (lams[i - 1] - lams[i]) > tol {
            let block = &lams[start..i];
            sizes.push(block.len());
            means.push(block.iter().sum::<f64>() / block.len() as f64);
            start = i;
        }
    }
    (sizes, means)
}

/// Spectral projector onto the eigenspace of `means[h]`:
/// prod_{h' != h} (A - means[h'] I) / (means[h] - means[h']).
fn projector(a: &DMatrix<f64>, means: &[f64], h: usize) -> DMatrix<f64> {
    let m = a.nrows();
    let mut p = DMatrix::<f64>::identity(m, m);
    for (hp, &mu) in means.iter().enumerate() {
        if hp == h {
            continue;
        }
        let factor = (a - DMatrix::<f64>::identity(m, m) * mu) / (means[h] - mu);
        p = factor * p;
    }
    p
}

/// Orthonormal basis of the null space of `mat`, expected dimension `d`.
fn null_basis(mat: &DMatrix<f64>, d: usize, scale: f64) -> Result<DMatrix<f64>> {
    let m = mat.nrows();
    let svd = mat.clone().svd(false, true);
    let sv = &svd.singular_values;
    let tol = 1e-7 * scale.max(sv[0]).max(1e-300);
    let small = sv.iter().filter(|&&s| s < tol).count();
    if small < d {
        return Err(CoreError::NotHyperbolic {
            im_max: sv[m - d],
            tol,
            t_index: 0,
        });
    }
    let vt = svd.v_t.expect("requested V^T");
    let mut basis = DMatrix::<f64>::zeros(m, d);
    for (col, row) in (m - d..m).enumerate() {
        for r in 0..m {
            basis[(r, col)] = vt[(row, r)];
        }
    }
    Ok(basis)
}

/// Orthonormalize columns (thin QR) and rotate to best-match `target`.
fn orthonormal_aligned(cand: DMatrix<f64>, target: &DMatrix<f64>) -> DMatrix<f64> {
    let d = cand.ncols();
    let qr = cand.qr();
    let q = qr.q();
    if d == 1 {
        let dot = q.column(0).dot(&target.column(0));
        return if dot < 0.0 { -q } else { q };
    }
    let overlap = q.transpose() * target;
    let svd = overlap.svd(true, true);
    let rot = svd.u.unwrap() * svd.v_t.unwrap();
    q * rot
}

fn sign_normalize(basis: &mut DMatrix<f64>) {
    for mut col in basis.column_iter_mut() {
        let (mut best, mut best_abs) = (0.0, 0.0);
        for v in col.iter() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = *v;
            }
        }
        if best < 0.0 {
            col.neg_mut();
        }
    }
}

/// Diagonalize the symbol at every sample and align the eigenbases in t.
///
/// Eigenvectors are obtained by pushing the t = 0 eigenbasis through the
/// spectral projectors at t and re-orthonormalizing inside each
/// constant-multiplicity block, which keeps the columns of P continuous.
pub fn eigendecompose(symbol: &MatrixFunction, xi: &[f64]) -> Result<EigenStructure> {
    let m = symbol.dim();
    let n = symbol.len();
    let xi_mag = xi_norm(xi);
    let a_scale = symbol.sup_abs();
    let im_tol = 1e-8 * (1.0 + xi_mag) * a_scale.max(1e-300);

    // pass 1: eigenvalues, reality, clustering
    let mut samples: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    let mut lam_sorted: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut pattern: Option<Vec<usize>> = None;
    let mut means_all: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let ac = symbol.at_sample(i);
        let a = DMatrix::<f64>::from_fn(m, m, |r, c| ac[(r, c)].re);
        let eig = a.complex_eigenvalues();
        let im_max = eig.iter().map(|z| z.im.abs()).fold(0.0f64, f64::max);
        if im_max > im_tol {
            return Err(CoreError::NotHyperbolic { im_max, tol: im_tol, t_index: i });
        }
        let mut lams: Vec<f64> = eig.iter().map(|z| z.re).collect();
        lams.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let (sizes, means) = cluster(&lams);
        match &pattern {
            None => pattern = Some(sizes),
            Some(p0) => {
                if *p0 != sizes {
                    return Err(CoreError::NotConstantMultiplicity {
                        at_start: p0.clone(),
                        found: sizes,
                        t_index: i,
                    });
                }
            }
        }
        samples.push(a);
        lam_sorted.push(lams);
        means_all.push(means);
    }
    let multiplicities = pattern.expect("n >= 8");
    let nblocks = multiplicities.len();
    let block_starts: Vec<usize> = multiplicities
        .iter()
        .scan(0usize, |acc, &s| {
            let start = *acc;
            *acc += s;
            Some(start)
        })
        .collect();

    // initial eigenbasis at t = 0 from null spaces
    let mut basis0: Vec<DMatrix<f64>> = Vec::with_capacity(nblocks);
    for h in 0..nblocks {
        let shifted = &samples[0] - DMatrix::<f64>::identity(m, m) * means_all[0][h];
        let mut b = null_basis(&shifted, multiplicities[h], a_scale)?;
        sign_normalize(&mut b);
        basis0.push(b);
    }

    // pass 2: projector transport with per-block alignment
    let mut p_samples: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    let mut q_samples: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    let mut prev_blocks = basis0.clone();
    let mut max_cond = 0.0f64;
    for i in 0..n {
        let mut p = DMatrix::<f64>::zeros(m, m);
        for h in 0..nblocks {
            let proj = projector(&samples[i], &means_all[i], h);
            let pushed = &proj * &basis0[h];
            // degenerate projection means the t=0 basis rotated away
            let min_col = pushed.column_iter().map(|c| c.norm()).fold(f64::INFINITY, f64::min);
            if min_col < 1e-8 {
                return Err(CoreError::IllConditioned { cond: f64::INFINITY, max_cond: MAX_COND, t_index: i });
            }
            let aligned = orthonormal_aligned(pushed, &prev_blocks[h]);
            for (col, j) in (block_starts[h]..block_starts[h] + multiplicities[h]).enumerate() {
                p.set_column(j, &aligned.column(col));
            }
            prev_blocks[h] = aligned;
        }
        let svd = p.clone().svd(false, false);
        let cond = svd.singular_values.max() / svd.singular_values.min();
        if !cond.is_finite() || cond > MAX_COND {
            return Err(CoreError::IllConditioned { cond, max_cond: MAX_COND, t_index: i });
        }
        max_cond = max_cond.max(cond);
        let q = p.clone().try_inverse().expect("condition number checked");
        p_samples.push(p);
        q_samples.push(q);
    }

    let period = symbol.period();
    let to_c = |mats: &[DMatrix<f64>]| {
        MatrixFunction::from_samples(m, n, period, |i| mats[i].map(|v| C64::new(v, 0.0)))
    };
    let p = to_c(&p_samples)?;
    let q = to_c(&q_samples)?;
    let lambdas = (0..m)
        .map(|j| {
            SampledFunction::from_real((0..n).map(|i| lam_sorted[i][j]).collect(), period)
        })
        .collect::<Result<Vec<_>>>()?;

    let es = EigenStructure { lambdas, p, q, multiplicities, block_starts, xi: xi.to_vec(), max_cond };
    es.check_continuity()?;
    Ok(es)
}

impl EigenStructure {
    pub fn dim(&self) -> usize {
        self.p.dim()
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn xi_mag(&self) -> f64 {
        xi_norm(&self.xi)
    }

    /// diag(lambda_1 ... lambda_m) as a matrix function.
    pub fn lambda_matrix(&self) -> MatrixFunction {
        let m = self.dim();
        let mut out = MatrixFunction::zeros(m, self.len(), self.p.period()).expect("grid ok");
        for (j, l) in self.lambdas.iter().enumerate() {
            out.set(j, j, l.clone());
        }
        out
    }

    /// P Lambda Q, which must reproduce the symbol.
    pub fn reconstruct(&self) -> MatrixFunction {
        self.p.matmul(&self.lambda_matrix()).matmul(&self.q)
    }

    pub fn reconstruction_defect(&self, symbol: &MatrixFunction) -> f64 {
        self.reconstruct().sub(symbol).sup_abs()
    }

    /// Largest deviation of Q P from the identity.
    pub fn biorthogonality_defect(&self) -> f64 {
        let id = MatrixFunction::identity(self.dim(), self.len(), self.p.period()).expect("grid ok");
        self.q.matmul(&self.p).sub(&id).sup_abs()
    }

    /// Largest angle between successive samples of any eigenvector column.
    pub fn max_column_angle(&self) -> f64 {
        let m = self.dim();
        let n = self.len();
        let mut worst = 0.0f64;
        for j in 0..m {
            for i in 0..n {
                let i2 = (i + 1) % n;
                let mut dot = 0.0;
                let mut n1 = 0.0;
                let mut n2 = 0.0;
                for r in 0..m {
                    let a = self.p.entry(r, j).value(i).re;
                    let b = self.p.entry(r, j).value(i2).re;
                    dot += a * b;
                    n1 += a * a;
                    n2 += b * b;
                }
                let c = (dot / (n1.sqrt() * n2.sqrt())).clamp(-1.0, 1.0);
                worst = worst.max(c.acos());
            }
        }
        worst
    }

    fn check_continuity(&self) -> Result<()> {
        let angle = self.max_column_angle();
        if angle > CONTINUITY_ANGLE {
            return Err(CoreError::IllConditioned {
                cond: angle,
                max_cond: CONTINUITY_ANGLE,
                t_index: 0,
            });
        }
        Ok(())
    }

    /// Exploit degree-1 homogeneity: the eigenstructure at gamma xi has
    /// eigenvalues gamma lambda_j and the same eigenvectors.
    pub fn rescale(&self, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "homogeneity rescale needs gamma > 0, got {gamma}"
            )));
        }
        Ok(Self {
            lambdas: self.lambdas.iter().map(|l| l.scale_re(gamma)).collect(),
            p: self.p.clone(),
            q: self.q.clone(),
            multiplicities: self.multiplicities.clone(),
            block_starts: self.block_starts.clone(),
            xi: self.xi.iter().map(|c| c * gamma).collect(),
            max_cond: self.max_cond,
        })
    }

    /// Smallest separation between distinct eigenvalue blocks over the grid.
    pub fn min_block_gap(&self) -> f64 {
        let nb = self.multiplicities.len();
        if nb < 2 {
            return f64::INFINITY;
        }
        let mut gap = f64::INFINITY;
        for h in 0..nb - 1 {
            let hi = &self.lambdas[self.block_starts[h]];
            let lo = &self.lambdas[self.block_starts[h + 1]];
            for i in 0..self.len() {
                gap = gap.min(hi.value(i).re - lo.value(i).re);
            }
        }
        gap
    }
}

/// Mollify Lambda and P entrywise and rebuild A_eps = P_eps Lambda_eps Q_eps,
/// which stays hyperbolic with the same multiplicity pattern by construction.
pub fn mollify_eigenstructure(
    es: &EigenStructure,
    eps: f64,
    kernel: &MollifierKernel,
) -> Result<(EigenStructure, MatrixFunction)> {
    let lambdas = es
        .lambdas
        .iter()
        .map(|l| mollify(l, eps, kernel))
        .collect::<Result<Vec<_>>>()?;
    let p = es.p.try_map_entries(|e| mollify(e, eps, kernel))?;

    // eps must keep P_eps invertible
    let mut max_cond = 0.0f64;
    for i in 0..p.len() {
        let pm = p.at_sample(i).map(|v| v.re);
        let svd = pm.svd(false, false);
        let cond = svd.singular_values.max() / svd.singular_values.min();
        if !cond.is_finite() || cond > MAX_COND {
            return Err(CoreError::EpsTooLarge { eps, t_index: i });
        }
        max_cond = max_cond.max(cond);
    }
    let q = p.inverse(eps)?;

    // ordering survives convolution with a nonnegative kernel
    for j in 0..es.dim() - 1 {
        for i in 0..lambdas[j].len() {
            let hi = lambdas[j].value(i).re;
            let lo = lambdas[j + 1].value(i).re;
            if hi < lo - 1e-10 * (1.0 + hi.abs()) {
                return Err(CoreError::EpsTooLarge { eps, t_index: i });
            }
        }
    }

    let es_eps = EigenStructure {
        lambdas,
        p,
        q,
        multiplicities: es.multiplicities.clone(),
        block_starts: es.block_starts.clone(),
        xi: es.xi.clone(),
        max_cond,
    };
    let a_eps = es_eps.reconstruct();
    Ok((es_eps, a_eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zygmund::{generate_rough, RoughKind, RoughParams};
    use approx::assert_relative_eq;
    use nalgebra::DVector;
    use std::f64::consts::PI;

    const N: usize = 1024;
    const TP: f64 = 2.0 * PI;

    fn wave_coeffs(a: &SampledFunction) -> CoefficientMatrices {
        let alpha = a.mul(a);
        let n = a.len();
        let mut mat = MatrixFunction::zeros(2, n, a.period()).unwrap();
        mat.set(0, 1, SampledFunction::constant(1.0, n, a.period()).unwrap());
        mat.set(1, 0, alpha);
        CoefficientMatrices::new(vec![mat], RegularityClass::zygmund(f64::INFINITY).unwrap())
            .unwrap()
    }

    #[test]
    fn wave_symbol_assembles_per_formula() {
        let a = SampledFunction::from_periodic_fn(|t| 2.0 + 0.5 * t.sin(), N, TP).unwrap();
        let coeffs = wave_coeffs(&a);
        let sym = assemble_symbol(&coeffs, &[1.0]).unwrap();
        assert_eq!(sym.entry(0, 0).max_abs(), 0.0);
        assert_relative_eq!(sym.entry(0, 1).value(17).re, 1.0);
        let t = a.sample_time(17);
        assert_relative_eq!(sym.entry(1, 0).value(17).re, (2.0 + 0.5 * t.sin()).powi(2));
    }

    #[test]
    fn zero_xi_is_rejected_and_homogeneity_is_exact() {
        let a = SampledFunction::from_periodic_fn(|t| 2.0 + 0.5 * t.sin(), N, TP).unwrap();
        let coeffs = wave_coeffs(&a);
        assert!(assemble_symbol(&coeffs, &[0.0]).is_err());
        let s1 = assemble_symbol(&coeffs, &[1.0]).unwrap();
        let s2 = assemble_symbol(&coeffs, &[2.0]).unwrap();
        assert_eq!(s2.sub(&s1.scale(C64::new(2.0, 0.0))).sup_abs(), 0.0);
    }

    #[test]
    fn wave_eigenstructure_matches_closed_forms() {
        let a = SampledFunction::from_periodic_fn(|t| 2.0 + 0.5 * t.sin(), N, TP).unwrap();
        let coeffs = wave_coeffs(&a);
        let sym = assemble_symbol(&coeffs, &[1.0]).unwrap();
        let es = eigendecompose(&sym, &[1.0]).unwrap();
        assert_eq!(es.multiplicities, vec![1, 1]);
        for i in (0..N).step_by(37) {
            let at = a.value(i).re;
            assert_relative_eq!(es.lambdas[0].value(i).re, at, max_relative = 1e-9);
            assert_relative_eq!(es.lambdas[1].value(i).re, -at, max_relative = 1e-9);
            // r_+- = (1, +-a)/sqrt(1+a^2), up to overall sign
            let nrm = (1.0 + at * at).sqrt();
            let (r00, r10) = (es.p.entry(0, 0).value(i).re, es.p.entry(1, 0).value(i).re);
            let sgn = r00.signum();
            assert_relative_eq!(sgn * r00, 1.0 / nrm, max_relative = 1e-8);
            assert_relative_eq!(sgn * r10, at / nrm, max_relative = 1e-8);
            // left rows match (sqrt(1+a^2)/2)(1, +-1/a) up to the same sign
            let l00 = es.q.entry(0, 0).value(i).re;
            let l01 = es.q.entry(0, 1).value(i).re;
            assert_relative_eq!(sgn * l00, nrm / 2.0, max_relative = 1e-8);
            assert_relative_eq!(sgn * l01, nrm / (2.0 * at), max_relative = 1e-8);
        }
        assert!(es.reconstruction_defect(&sym) < 1e-9);
        assert!(es.biorthogonality_defect() < 1e-9);
    }

    #[test]
    fn constant_diagonal_matrix_is_its_own_eigensystem() {
        let n = 64;
        let mut mat = MatrixFunction::zeros(2, n, TP).unwrap();
        mat.set(0, 0, SampledFunction::constant(2.0, n, TP).unwrap());
        mat.set(1, 1, SampledFunction::constant(1.0, n, TP).unwrap());
        let coeffs =
            CoefficientMatrices::new(vec![mat], RegularityClass::zygmund(f64::INFINITY).unwrap())
                .unwrap();
        let sym = assemble_symbol(&coeffs, &[1.0]).unwrap();
        let es = eigendecompose(&sym, &[1.0]).unwrap();
        assert_eq!(es.multiplicities, vec![1, 1]);
        let id = MatrixFunction::identity(2, n, TP).unwrap();
        assert!(es.p.sub(&id).sup_abs() < 1e-12);
    }

    #[test]
    fn jordan_block_is_rejected() {
        let n = 64;
        let mut mat = MatrixFunction::zeros(2, n, TP).unwrap();
        mat.set(0, 1, SampledFunction::constant(1.0, n, TP).unwrap());
        let coeffs =
            CoefficientMatrices::new(vec![mat], RegularityClass::zygmund(f64::INFINITY).unwrap())
                .unwrap();
        let sym = assemble_symbol(&coeffs, &[1.0]).unwrap();
        assert!(matches!(eigendecompose(&sym, &[1.0]), Err(CoreError::NotHyperbolic { .. })));
    }

    #[test]
    fn rotation_symbol_is_rejected_as_non_hyperbolic() {
        let n = 64;
        let mut mat = MatrixFunction::zeros(2, n, TP).unwrap();
        mat.set(0, 1, SampledFunction::constant(1.0, n, TP).unwrap());
        mat.set(1, 0, SampledFunction::constant(-1.0, n, TP).unwrap());
        let coeffs =
            CoefficientMatrices::new(vec![mat], RegularityClass::zygmund(f64::INFINITY).unwrap())
                .unwrap();
        let sym = assemble_symbol(&coeffs, &[1.0]).unwrap();
        assert!(matches!(eigendecompose(&sym, &[1.0]), Err(CoreError::NotHyperbolic { .. })));
    }

    #[test]
    fn eigenvalues_inherit_homogeneity() {
        let a = SampledFunction::from_periodic_fn(|t| 1.5 + 0.3 * t.cos(), N, TP).unwrap();
        let coeffs = wave_coeffs(&a);
        let s1 = assemble_symbol(&coeffs, &[1.0]).unwrap();
        let s4 = assemble_symbol(&coeffs, &[4.0]).unwrap();
        let e1 = eigendecompose(&s1, &[1.0]).unwrap();
        let e4 = eigendecompose(&s4, &[4.0]).unwrap();
        for j in 0..2 {
            let scaled = e1.lambdas[j].scale_re(4.0);
            assert!(scaled.sub(&e4.lambdas[j]).max_abs() < 1e-8 * 4.0);
        }
        assert!(e1.p.sub(&e4.p).sup_abs() < 1e-9, "eigenvectors are homogeneous of degree 0");
    }

    #[test]
    fn block_system_keeps_its_multiplicity_pattern() {
        // s(t) V diag(2,1,1) V^-1 with an oblique, t-dependent V
        let n = 512;
        let w1 = generate_rough(RoughKind::Smooth, &RoughParams::new(0.25, 0, 0.0), n).unwrap();
        let s = generate_rough(RoughKind::Smooth, &RoughParams::new(0.2, 0, 1.5), n).unwrap();
        let sym = MatrixFunction::from_samples(3, n, TP, |i| {
            let g = w1.value(i).re;
            let v = DMatrix::from_row_slice(3, 3, &[1.0, g, 0.0, 0.2 * g, 1.0, g, 0.0, 0.3 * g, 1.0]);
            let d = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 1.0]));
            let vi = v.clone().try_inverse().unwrap();
            ((v * d * vi) * s.value(i).re).map(|x| C64::new(x, 0.0))
        })
        .unwrap();
        let es = eigendecompose(&sym, &[1.0]).unwrap();
        assert_eq!(es.multiplicities, vec![1, 2]);
        assert_eq!(es.block_starts, vec![0, 1]);
        assert!(es.reconstruction_defect(&sym) < 1e-8);
        assert!(es.max_column_angle() < 0.05);
    }

    #[test]
    fn mollified_constant_system_is_unchanged() {
        let n = 256;
        let mut mat = MatrixFunction::zeros(2, n, TP).unwrap();
        mat.set(0, 1, SampledFunction::constant(1.0, n, TP).unwrap());
        mat.set(1, 0, SampledFunction::constant(4.0, n, TP).unwrap());
        let coeffs =
            CoefficientMatrices::new(vec![mat], RegularityClass::zygmund(f64::INFINITY).unwrap())
                .unwrap();
        let sym = assemble_symbol(&coeffs, &[1.0]).unwrap();
        let es = eigendecompose(&sym, &[1.0]).unwrap();
        let (_, a_eps) = mollify_eigenstructure(&es, 0.1, &MollifierKernel::default()).unwrap();
        assert!(a_eps.sub(&sym).sup_abs() < 1e-10);
    }

    #[test]
    fn mollified_wave_converges_at_the_class_rate() {
        let n = 1 << 14;
        let a = generate_rough(RoughKind::Weierstrass, &RoughParams::new(0.3, 12, 1.0), n).unwrap();
        let coeffs = wave_coeffs(&a);
        let sym = assemble_symbol(&coeffs, &[1.0]).unwrap();
        let es = eigendecompose(&sym, &[1.0]).unwrap();
        let kernel = MollifierKernel::default();
        let mut worst = 0.0f64;
        for k in 3..=8 {
            let eps = (2.0f64).powi(-k);
            let (es_eps, a_eps) = mollify_eigenstructure(&es, eps, &kernel).unwrap();
            let dev = a_eps.sub(&sym);
            let linf = (0..2)
                .flat_map(|r| (0..2).map(move |c| (r, c)))
                .map(|(r, c)| dev.entry(r, c).lp_window(f64::INFINITY))
                .fold(0.0f64, f64::max);
            // Zygmund rate: ||A_eps - A|| <= C eps log(1+1/eps) pointwise
            worst = worst.max(linf / (eps * (1.0 + 1.0 / eps).ln()));

            // left eigen-relation l_j A_eps = lambda_j l_j
            let defect = es_eps.q.matmul(&a_eps).sub(&es_eps.lambda_matrix().matmul(&es_eps.q));
            assert!(defect.sup_abs() < 1e-9, "left eigenvector defect {}", defect.sup_abs());
        }
        assert!(worst.is_finite() && worst < 64.0, "rate constant {worst}");
    }
}
