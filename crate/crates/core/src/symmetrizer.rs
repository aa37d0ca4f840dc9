//! The two-level microlocal symmetrizer S_eps = S^0 + |xi|^-1 S^1 for a
//! mollified hyperbolic symbol, built in the eigenbasis frame:
//! S^i = Q* Sigma^i Q. Sigma^0 cancels the diagonal (blocks) of the drift
//! matrix G, Sigma^1 cancels the rest; what survives is the bounded
//! remainder R_eps.

use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};
use crate::littlewood_paley::{approximate_primitive, besov_norm, BesovSpec, DyadicFilterBank};
use crate::spectral::{MatrixFunction, SampledFunction};
use crate::symbol::{mollify_eigenstructure, EigenStructure};
use crate::zygmund::MollifierKernel;

/// Theta = d_t Q . P, the connection matrix of the moving eigenframe.
#[derive(Debug, Clone)]
pub struct ThetaMatrix(pub MatrixFunction);

pub fn compute_theta(es_eps: &EigenStructure) -> ThetaMatrix {
    ThetaMatrix(es_eps.q.derivative().matmul(&es_eps.p))
}

/// Max deviation of the off-diagonal-block entries of Theta from the
/// eigenvalue-difference formula theta_jk = (lambda_j - lambda_k)^-1
/// l_j . d_tA . r_k, relative to sup |Theta|.
pub fn theta_cross_defect(
    theta: &ThetaMatrix,
    es_eps: &EigenStructure,
    da_eps: &MatrixFunction,
) -> f64 {
    let e = es_eps.q.matmul(da_eps).matmul(&es_eps.p);
    let scale = theta.0.sup_abs().max(1e-300);
    let m = es_eps.dim();
    let mut worst = 0.0f64;
    for j in 0..m {
        for k in 0..m {
            if block_of(es_eps, j) == block_of(es_eps, k) {
                continue;
            }
            let lj = &es_eps.lambdas[j];
            let lk = &es_eps.lambdas[k];
            for i in 0..es_eps.len() {
                let denom = lj.value(i).re - lk.value(i).re;
                let predicted = e.entry(j, k).value(i) / denom;
                let actual = theta.0.entry(j, k).value(i);
                worst = worst.max((predicted - actual).norm() / scale);
            }
        }
    }
    worst
}

fn block_of(es: &EigenStructure, j: usize) -> usize {
    es.block_starts
        .iter()
        .rposition(|&s| s <= j)
        .expect("block starts begin at 0")
}

/// Strict-case Sigma^0: omega_j is the approximate primitive of -2 theta_jj
/// shifted to omega_j(0) = 0, sigma_j = exp(omega_j), and rho_j is the
/// low-frequency residual d_t omega_j + 2 theta_jj.
pub fn sigma0_strict(
    theta: &ThetaMatrix,
    mu: u32,
) -> Result<(MatrixFunction, Vec<SampledFunction>, MatrixFunction)> {
    let m = theta.0.dim();
    let n = theta.0.len();
    let period = theta.0.period();
    let mut sigma0 = MatrixFunction::zeros(m, n, period)?;
    let mut rho = MatrixFunction::zeros(m, n, period)?;
    let mut omegas = Vec::with_capacity(m);
    for j in 0..m {
        let g = theta.0.entry(j, j).scale_re(-2.0);
        let (omega_raw, rho_j) = approximate_primitive(&g, mu)?;
        let shift = omega_raw.value(0);
        let omega = omega_raw.map(|v| v - shift);
        let sigma = omega.map(|v| C64::new(v.re.exp(), 0.0));
        sigma0.set(j, j, sigma);
        rho.set(j, j, rho_j);
        omegas.push(omega);
    }
    Ok((sigma0, omegas, rho))
}

/// Convergence record of the block Picard iteration.
#[derive(Debug, Clone, Copy)]
pub struct PicardStats {
    pub mu: u32,
    pub iterations: usize,
    pub last_update: f64,
    pub max_ratio: f64,
}

fn block_view(mat: &MatrixFunction, start: usize, size: usize) -> Vec<Vec<C64>> {
    let n = mat.len();
    let mut out = vec![vec![C64::new(0.0, 0.0); n]; size * size];
    for r in 0..size {
        for c in 0..size {
            out[r * size + c].copy_from_slice(mat.entry(start + r, start + c).values());
        }
    }
    out
}

/// One application of the block drift: Y = -(X Theta_B + Theta_B^T X),
/// entries as raw value vectors.
fn block_drift(x: &[Vec<C64>], th: &[Vec<C64>], size: usize, n: usize) -> Vec<Vec<C64>> {
    let mut y = vec![vec![C64::new(0.0, 0.0); n]; size * size];
    for r in 0..size {
        for c in 0..size {
            let dst = &mut y[r * size + c];
            for l in 0..size {
                let xrl = &x[r * size + l];
                let tlc = &th[l * size + c];
                let tlr = &th[l * size + r];
                let xlc = &x[l * size + c];
                for i in 0..n {
                    dst[i] -= xrl[i] * tlc[i] + tlr[i] * xlc[i];
                }
            }
        }
    }
    y
}

fn block_besov_diff(
    a: &[Vec<C64>],
    b: &[Vec<C64>],
    period: f64,
    spec: &BesovSpec,
    bank: &DyadicFilterBank,
) -> f64 {
    let mut worst = 0.0f64;
    for (va, vb) in a.iter().zip(b) {
        let d: Vec<C64> = va.iter().zip(vb).map(|(&x, &y)| x - y).collect();
        let f = SampledFunction::from_complex(d, period).expect("grid ok");
        worst = worst.max(besov_norm(&f, spec, bank).expect("norm").value);
    }
    worst
}

fn min_symmetric_eig(x: &[Vec<C64>], size: usize, n: usize) -> f64 {
    let mut min = f64::INFINITY;
    for i in 0..n {
        let m = nalgebra::DMatrix::<f64>::from_fn(size, size, |r, c| x[r * size + c][i].re);
        let sym = (&m + m.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        min = min.min(eig.eigenvalues.min());
    }
    min
}

/// Constant-multiplicity Sigma^0: per diagonal block solve X' = M X with
/// X(0) = Id by Picard iteration X <- J_mu(M X) + Id, raising mu until the
/// iteration contracts and the block stays >= Id/2.
pub fn sigma0_blocks(
    theta: &ThetaMatrix,
    multiplicities: &[usize],
    block_starts: &[usize],
    mu0: u32,
    p: f64,
    tol: f64,
) -> Result<(MatrixFunction, MatrixFunction, PicardStats)> {
    let m = theta.0.dim();
    let n = theta.0.len();
    let period = theta.0.period();
    let s_contract = 0.5 * (1.0 + 1.0 / p.min(1e300));
    let s_contract = if p.is_infinite() { 0.5 } else { s_contract };
    let spec = BesovSpec::new(s_contract, 0.0, p, f64::INFINITY)?;
    let bank = DyadicFilterBank::for_grid(n, period);
    let mu_max = 14u32;

    let mut mu = mu0;
    'mu_loop: loop {
        let mut sigma0 = MatrixFunction::zeros(m, n, period)?;
        let mut rho = MatrixFunction::zeros(m, n, period)?;
        let mut stats = PicardStats { mu, iterations: 0, last_update: 0.0, max_ratio: 0.0 };
        let mut ok = true;

        for (h, (&start, &size)) in block_starts.iter().zip(multiplicities).enumerate() {
            let th = block_view(&theta.0, start, size);
            // X^0 = Id
            let mut x: Vec<Vec<C64>> = (0..size * size)
                .map(|e| {
                    let v = if e / size == e % size { 1.0 } else { 0.0 };
                    vec![C64::new(v, 0.0); n]
                })
                .collect();
            let mut prev_update = f64::INFINITY;
            let mut iterations = 0usize;
            loop {
                let drift = block_drift(&x, &th, size, n);
                let mut next: Vec<Vec<C64>> = Vec::with_capacity(size * size);
                for (e, d) in drift.iter().enumerate() {
                    let f = SampledFunction::from_complex(d.clone(), period)?;
                    let (j_of, _) = approximate_primitive(&f, mu)?;
                    let idv = if e / size == e % size { 1.0 } else { 0.0 };
                    next.push(j_of.values().iter().map(|&v| v + idv).collect());
                }
                let update = block_besov_diff(&next, &x, period, &spec, &bank);
                iterations += 1;
                if prev_update.is_finite() && prev_update > 0.0 {
                    stats.max_ratio = stats.max_ratio.max(update / prev_update);
                }
                x = next;
                stats.iterations = stats.iterations.max(iterations);
                stats.last_update = update;
                if update < tol {
                    break;
                }
                if iterations > 80 || (prev_update.is_finite() && update > prev_update && iterations > 4) {
                    ok = false;
                    break;
                }
                prev_update = update;
            }
            if !ok {
                break;
            }
            // positivity of the block
            if min_symmetric_eig(&x, size, n) < 0.5 {
                ok = false;
                break;
            }
            // rho = d_t X + X Theta_B + Theta_B^T X, confined below 2^mu
            let drift = block_drift(&x, &th, size, n);
            for r in 0..size {
                for c in 0..size {
                    let xf = SampledFunction::from_complex(x[r * size + c].clone(), period)?;
                    let df = SampledFunction::from_complex(drift[r * size + c].clone(), period)?;
                    let res = xf.derivative().sub(&df);
                    sigma0.set(start + r, start + c, xf);
                    rho.set(start + r, start + c, res);
                }
            }
            let _ = h;
        }

        if ok {
            let mut out_stats = stats;
            out_stats.mu = mu;
            return Ok((sigma0, rho, out_stats));
        }
        if mu >= mu_max {
            break 'mu_loop Err(CoreError::PicardDiverged { mu_max, last_update: stats.last_update });
        }
        mu = (mu * 2).min(mu_max);
    }
}

/// Sigma^1 from the eigenvalue-difference formula: for j, k in distinct
/// blocks h, h' the entry is
/// i |xi| (lambda_h - lambda_h')^-2 [ sum_{l in h} sigma0_jl (l_l dA r_k)
///                                  - sum_{l in h'} sigma0_lk (l_l dA r_j) ],
/// Hermitian with vanishing diagonal blocks, homogeneous of degree 0.
pub fn sigma1(
    sigma0: &MatrixFunction,
    es_eps: &EigenStructure,
    da_eps: &MatrixFunction,
) -> Result<MatrixFunction> {
    let m = es_eps.dim();
    let n = es_eps.len();
    let period = es_eps.p.period();
    let xi_mag = es_eps.xi_mag();

    let spread = {
        let hi = &es_eps.lambdas[0];
        let lo = &es_eps.lambdas[m - 1];
        (0..n).map(|i| hi.value(i).re - lo.value(i).re).fold(0.0f64, f64::max)
    };
    let gap_min = 1e-3 * spread;
    let gap = es_eps.min_block_gap();
    if gap < gap_min {
        return Err(CoreError::NearDegenerate { gap, gap_min });
    }

    let e = es_eps.q.matmul(da_eps).matmul(&es_eps.p);
    let mut out = MatrixFunction::zeros(m, n, period)?;
    for j in 0..m {
        let bj = block_of(es_eps, j);
        for k in (j + 1)..m {
            let bk = block_of(es_eps, k);
            if bj == bk {
                continue;
            }
            let (sj, mj) = (es_eps.block_starts[bj], es_eps.multiplicities[bj]);
            let (sk, mk) = (es_eps.block_starts[bk], es_eps.multiplicities[bk]);
            let mut vals = vec![C64::new(0.0, 0.0); n];
            for l in sj..sj + mj {
                let s0 = sigma0.entry(j, l).values();
                let elk = e.entry(l, k).values();
                for i in 0..n {
                    vals[i] += s0[i] * elk[i];
                }
            }
            for l in sk..sk + mk {
                let s0 = sigma0.entry(l, k).values();
                let elj = e.entry(l, j).values();
                for i in 0..n {
                    vals[i] -= s0[i] * elj[i];
                }
            }
            let lj = es_eps.lambdas[j].values();
            let lk = es_eps.lambdas[k].values();
            for i in 0..n {
                let d = lj[i].re - lk[i].re;
                vals[i] *= C64::new(0.0, xi_mag / (d * d));
            }
            let upper = SampledFunction::from_complex(vals, period)?;
            out.set(k, j, upper.map(|v| v.conj()));
            out.set(j, k, upper);
        }
    }
    Ok(out)
}

/// G = d_t Sigma^0 + Sigma^0 Theta + Theta* Sigma^0 + i |xi|^-1 [Lambda, Sigma^1]
/// and its push-forward R_eps = Q* G Q.
pub fn g_residual(
    sigma0: &MatrixFunction,
    sigma1: &MatrixFunction,
    theta: &ThetaMatrix,
    es_eps: &EigenStructure,
) -> (MatrixFunction, MatrixFunction) {
    let lambda = es_eps.lambda_matrix();
    let comm = lambda.matmul(sigma1).sub(&sigma1.matmul(&lambda));
    let g = sigma0
        .derivative()
        .add(&sigma0.matmul(&theta.0))
        .add(&theta.0.adjoint().matmul(sigma0))
        .add(&comm.scale(C64::new(0.0, 1.0 / es_eps.xi_mag())));
    let r = es_eps.q.adjoint().matmul(&g).matmul(&es_eps.q);
    (g, r)
}

/// Eigenvalue range of a Hermitian matrix function over the grid.
pub fn hermitian_eig_range(mat: &MatrixFunction) -> (f64, f64) {
    let m = mat.dim();
    let n = mat.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    if m == 2 {
        let a = mat.entry(0, 0).values();
        let d = mat.entry(1, 1).values();
        let b = mat.entry(0, 1).values();
        let c = mat.entry(1, 0).values();
        for i in 0..n {
            let mean = 0.5 * (a[i].re + d[i].re);
            let off = 0.5 * (b[i] + c[i].conj());
            let rad = (0.25 * (a[i].re - d[i].re).powi(2) + off.norm_sqr()).sqrt();
            lo = lo.min(mean - rad);
            hi = hi.max(mean + rad);
        }
    } else {
        for i in 0..n {
            let a = mat.at_sample(i);
            let sym = (a.clone() + a.adjoint()) * C64::new(0.5, 0.0);
            let eig = sym.symmetric_eigen();
            for v in eig.eigenvalues.iter() {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
        }
    }
    (lo, hi)
}

/// Largest per-sample spectral norm over the grid.
pub fn sup_opnorm(mat: &MatrixFunction) -> f64 {
    let n = mat.len();
    let m = mat.dim();
    let mut worst = 0.0f64;
    if m == 2 {
        // spectral norm of a 2x2 via its Gram eigenvalues, avoiding per-sample SVD
        for i in 0..n {
            let a = mat.at_sample(i);
            let g = a.adjoint() * &a;
            let tr = g[(0, 0)].re + g[(1, 1)].re;
            let det = (g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)]).re;
            let rad = (0.25 * tr * tr - det).max(0.0).sqrt();
            worst = worst.max((0.5 * tr + rad).max(0.0).sqrt());
        }
    } else {
        for i in 0..n {
            worst = worst.max(mat.opnorm_at(i));
        }
    }
    worst
}

/// The assembled two-level symmetrizer at one (xi, eps) with its
/// validation measurements.
#[derive(Debug, Clone)]
pub struct Symmetrizer {
    pub s0: MatrixFunction,
    pub s1: MatrixFunction,
    pub sigma0: MatrixFunction,
    pub sigma1: MatrixFunction,
    /// Drift residual in the eigenbasis frame.
    pub g_matrix: MatrixFunction,
    /// R_eps = Q* G Q of the symmetrizer identity.
    pub r_eps: MatrixFunction,
    /// omega_j of the strict construction, when it was used.
    pub omega: Option<Vec<SampledFunction>>,
    /// Low-frequency residuals rho (diagonal or block layout).
    pub rho: MatrixFunction,
    pub eps: f64,
    pub xi: Vec<f64>,
    pub mu: u32,
    /// The mollified symbol the symmetrizer was built for.
    pub a_eps: MatrixFunction,
    pub report: ValidationReport,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub xi_mag: f64,
    pub eps: f64,
    pub mu: u32,
    /// Eigenvalue range [K1, K2] of S over the grid.
    pub k1: f64,
    pub k2: f64,
    pub s_self_adjoint_defect: f64,
    /// Self-adjointness defect of S^0 A_eps (compare against 1e-8 |xi|).
    pub s0a_self_adjoint_defect: f64,
    pub sup_r_eps: f64,
    pub min_sigma0_eig: f64,
    pub theta_cross_defect: f64,
    pub picard: Option<PicardStats>,
}

#[derive(Debug, Clone)]
pub struct SymmetrizerOptions {
    /// Starting low-frequency cutoff level of J_mu.
    pub mu0: u32,
    /// Integrability exponent of the coefficient hypothesis (sets the
    /// contraction norm index s = (1 + 1/p)/2).
    pub p: f64,
    /// Build scale; defaults to 1/|xi|.
    pub eps_override: Option<f64>,
    pub picard_tol: f64,
}

impl Default for SymmetrizerOptions {
    fn default() -> Self {
        Self { mu0: 5, p: f64::INFINITY, eps_override: None, picard_tol: 1e-10 }
    }
}

impl Symmetrizer {
    /// S = S^0 + |xi|^-1 S^1.
    pub fn full(&self) -> MatrixFunction {
        let xi_mag: f64 = self.xi.iter().map(|c| c * c).sum::<f64>().sqrt();
        self.s0.add(&self.s1.scale(C64::new(1.0 / xi_mag, 0.0)))
    }
}

/// Build the symmetrizer for the (raw) eigenstructure `es` at scale
/// eps = 1/|xi| unless overridden: mollify, form Theta, solve for Sigma^0
/// (strict or block Picard), fill in Sigma^1, assemble and validate.
pub fn build_symmetrizer(
    es: &EigenStructure,
    kernel: &MollifierKernel,
    opts: &SymmetrizerOptions,
) -> Result<Symmetrizer> {
    let xi_mag = es.xi_mag();
    let eps = opts.eps_override.unwrap_or(1.0 / xi_mag);
    let (es_eps, a_eps) = mollify_eigenstructure(es, eps, kernel)?;
    let theta = compute_theta(&es_eps);
    let da_eps = a_eps.derivative();

    let strict = es.multiplicities.iter().all(|&m| m == 1);
    let (sigma0, omega, rho, picard) = if strict {
        let (s0, om, rho) = sigma0_strict(&theta, opts.mu0)?;
        (s0, Some(om), rho, None)
    } else {
        let (s0, rho, stats) = sigma0_blocks(
            &theta,
            &es.multiplicities,
            &es.block_starts,
            opts.mu0,
            opts.p,
            opts.picard_tol,
        )?;
        (s0, None, rho, Some(stats))
    };
    let mu = picard.map(|s| s.mu).unwrap_or(opts.mu0);

    let sig1 = sigma1(&sigma0, &es_eps, &da_eps)?;
    let (g_matrix, r_eps) = g_residual(&sigma0, &sig1, &theta, &es_eps);

    let qa = es_eps.q.adjoint();
    let s0_mat = qa.matmul(&sigma0).matmul(&es_eps.q);
    let s1_mat = qa.matmul(&sig1).matmul(&es_eps.q);
    let s_full = s0_mat.add(&s1_mat.scale(C64::new(1.0 / xi_mag, 0.0)));

    let (k1, k2) = hermitian_eig_range(&s_full);
    if k1 <= 0.0 {
        return Err(CoreError::BelowR0 { xi_mag, k1 });
    }
    let (min_sig0, _) = hermitian_eig_range(&sigma0);
    let report = ValidationReport {
        xi_mag,
        eps,
        mu,
        k1,
        k2,
        s_self_adjoint_defect: s_full.self_adjoint_defect(),
        s0a_self_adjoint_defect: s0_mat.matmul(&a_eps).self_adjoint_defect(),
        sup_r_eps: sup_opnorm(&r_eps),
        min_sigma0_eig: min_sig0,
        theta_cross_defect: theta_cross_defect(&theta, &es_eps, &da_eps),
        picard,
    };

    Ok(Symmetrizer {
        s0: s0_mat,
        s1: s1_mat,
        sigma0,
        sigma1: sig1,
        g_matrix,
        r_eps,
        omega,
        rho,
        eps,
        xi: es.xi.clone(),
        mu,
        a_eps,
        report,
    })
}
