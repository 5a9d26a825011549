//! Matrix exponentials for the 16-dimensional pair space.
//!
//! Hermitian generators go through an eigendecomposition, which also feeds
//! the exact exponential derivative used by the gradient. Non-Hermitian
//! generators (decay) use Padé scaling-and-squaring.

use nalgebra::{DMatrix, SMatrix, SymmetricEigen};

use crate::hilbert::{Operator, C64, DIM};

const I: C64 = C64::new(0.0, 1.0);

/// Eigendecomposition `H = V diag(λ) V†` of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    pub values: [f64; DIM],
    pub vectors: Operator,
}

impl HermitianEig {
    /// Diagonalises `h`, splitting it first into the blocks of its sparsity
    /// pattern (exactly zero couplings), which are diagonalised separately.
    pub fn new(h: &Operator) -> Self {
        let blocks = coupled_blocks(h);
        if blocks.len() == 1 {
            let eig = SymmetricEigen::new(*h);
            let mut values = [0.0; DIM];
            values.copy_from_slice(eig.eigenvalues.as_slice());
            return HermitianEig { values, vectors: eig.eigenvectors };
        }
        let mut values = [0.0; DIM];
        let mut vectors = Operator::zeros();
        let mut col = 0;
        for block in blocks {
            if block.len() == 1 {
                let i = block[0];
                values[col] = h[(i, i)].re;
                vectors[(i, col)] = C64::new(1.0, 0.0);
                col += 1;
                continue;
            }
            let m = block.len();
            let sub = DMatrix::from_fn(m, m, |a, b| h[(block[a], block[b])]);
            let eig = SymmetricEigen::new(sub);
            for k in 0..m {
                values[col] = eig.eigenvalues[k];
                for (a, &row) in block.iter().enumerate() {
                    vectors[(row, col)] = eig.eigenvectors[(a, k)];
                }
                col += 1;
            }
        }
        HermitianEig { values, vectors }
    }

    /// `exp(−i H dt)`.
    pub fn propagator(&self, dt: f64) -> Operator {
        let mut scaled = self.vectors;
        for (j, lambda) in self.values.iter().enumerate() {
            let phase = C64::from_polar(1.0, -lambda * dt);
            for i in 0..DIM {
                scaled[(i, j)] *= phase;
            }
        }
        mul(&scaled, &self.vectors.adjoint())
    }

    /// `e^{−iλ_j dt}` for every eigenvalue.
    pub fn phases(&self, dt: f64) -> [C64; DIM] {
        self.values.map(|l| C64::from_polar(1.0, -l * dt))
    }

    /// Divided-difference matrix `Φ_ij = (e^{−iλ_i dt} − e^{−iλ_j dt}) / (λ_i − λ_j)`,
    /// with the confluent limit `−i dt e^{−iλ_i dt}` on (near-)degenerate pairs.
    ///
    /// In the eigenbasis, `d exp(−iH dt)[E] = V (Φ ∘ (V† E V)) V†`.
    pub fn divided_differences(&self, dt: f64) -> Operator {
        self.divided_differences_from(&self.phases(dt), dt)
    }

    /// As [`HermitianEig::divided_differences`], reusing precomputed [`HermitianEig::phases`].
    pub fn divided_differences_from(&self, phases: &[C64; DIM], dt: f64) -> Operator {
        // Written as −i dt e^{−i λ̄ dt} sinc(x/2), x = (λ_i − λ_j) dt, which is
        // cancellation-free and covers the degenerate limit. The midpoint phase
        // is the product of half-step phases.
        let half: [C64; DIM] = self.values.map(|l| C64::from_polar(1.0, -0.5 * l * dt));
        let mut out = Operator::zeros();
        for i in 0..DIM {
            out[(i, i)] = -I * dt * phases[i];
            for j in i + 1..DIM {
                let x = 0.5 * (self.values[i] - self.values[j]) * dt;
                let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
                let z = -I * dt * half[i] * half[j] * sinc;
                out[(i, j)] = z;
                out[(j, i)] = z;
            }
        }
        out
    }
}

/// Planar (split real/imaginary) copy of a 16-row matrix, column-major.
struct Planar<const C: usize> {
    re: [[f64; DIM]; C],
    im: [[f64; DIM]; C],
}

impl<const C: usize> Planar<C> {
    fn new(m: &SMatrix<C64, DIM, C>) -> Self {
        let mut re = [[0.0; DIM]; C];
        let mut im = [[0.0; DIM]; C];
        for j in 0..C {
            for i in 0..DIM {
                let z = m[(i, j)];
                re[j][i] = z.re;
                im[j][i] = z.im;
            }
        }
        Planar { re, im }
    }
}

/// `a · b` for a 16×16 `a`; the split-complex inner loop vectorises well,
/// which matters because these products dominate propagation and gradients.
pub fn mul<const C: usize>(a: &Operator, b: &SMatrix<C64, DIM, C>) -> SMatrix<C64, DIM, C> {
    let pa = Planar::<DIM>::new(a);
    let mut cr = [[0.0; DIM]; C];
    let mut ci = [[0.0; DIM]; C];
    for j in 0..C {
        let (ccr, cci) = (&mut cr[j], &mut ci[j]);
        for k in 0..DIM {
            let z = b[(k, j)];
            let (ar, ai) = (&pa.re[k], &pa.im[k]);
            for i in 0..DIM {
                ccr[i] += ar[i] * z.re - ai[i] * z.im;
                cci[i] += ar[i] * z.im + ai[i] * z.re;
            }
        }
    }
    SMatrix::from_fn(|i, j| C64::new(cr[j][i], ci[j][i]))
}

/// `a† · b` for a 16×16 `a`.
pub fn adjoint_mul<const C: usize>(a: &Operator, b: &SMatrix<C64, DIM, C>) -> SMatrix<C64, DIM, C> {
    // (a† b)_{ij} = Σ_k conj(a_{ki}) b_{kj}: a dot product over contiguous columns.
    let pa = Planar::<DIM>::new(a);
    let pb = Planar::<C>::new(b);
    SMatrix::from_fn(|i, j| {
        let (ar, ai, br, bi) = (&pa.re[i], &pa.im[i], &pb.re[j], &pb.im[j]);
        let mut re = 0.0;
        let mut im = 0.0;
        for k in 0..DIM {
            re += ar[k] * br[k] + ai[k] * bi[k];
            im += ar[k] * bi[k] - ai[k] * br[k];
        }
        C64::new(re, im)
    })
}

/// `a · b†` for 16×C factors, giving a 16×16 result.
pub fn mul_adjoint<const C: usize>(a: &SMatrix<C64, DIM, C>, b: &SMatrix<C64, DIM, C>) -> Operator {
    let pa = Planar::<C>::new(a);
    let mut cr = [[0.0; DIM]; DIM];
    let mut ci = [[0.0; DIM]; DIM];
    for j in 0..DIM {
        for k in 0..C {
            let z = b[(j, k)].conj();
            let (ar, ai) = (&pa.re[k], &pa.im[k]);
            for i in 0..DIM {
                cr[j][i] += ar[i] * z.re - ai[i] * z.im;
                ci[j][i] += ar[i] * z.im + ai[i] * z.re;
            }
        }
    }
    Operator::from_fn(|i, j| C64::new(cr[j][i], ci[j][i]))
}

/// Index sets of the connected components of the nonzero pattern of `h`.
fn coupled_blocks(h: &Operator) -> Vec<Vec<usize>> {
    let mut parent: [usize; DIM] = std::array::from_fn(|i| i);
    fn root(parent: &mut [usize; DIM], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..DIM {
        for j in i + 1..DIM {
            if h[(i, j)] != C64::new(0.0, 0.0) || h[(j, i)] != C64::new(0.0, 0.0) {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = [usize::MAX; DIM];
    for i in 0..DIM {
        let r = root(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    blocks
}

pub fn is_hermitian(h: &Operator, tol: f64) -> bool {
    (0..DIM).all(|i| (i..DIM).all(|j| (h[(i, j)] - h[(j, i)].conj()).norm() <= tol))
}

/// `exp(−i H dt)`, choosing the method by Hermiticity of `H`.
pub fn propagator(h: &Operator, dt: f64) -> Operator {
    if is_hermitian(h, 0.0) {
        HermitianEig::new(h).propagator(dt)
    } else {
        expm(&(h * (-I * dt)))
    }
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const PADE_LOW: [(f64, &[f64]); 4] = [
    (1.495585217958292e-2, &[120.0, 60.0, 12.0, 1.0]),
    (2.539398330063230e-1, &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0]),
    (9.504178996162932e-1, &[17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0]),
    (
        2.097847961257068,
        &[
            17643225600.0,
            8821612800.0,
            2075673600.0,
            302702400.0,
            30270240.0,
            2162160.0,
            110880.0,
            3960.0,
            90.0,
            1.0,
        ],
    ),
];

const THETA13: f64 = 5.371920351148152;

fn one_norm(a: &Operator) -> f64 {
    (0..DIM).map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// General matrix exponential by scaling-and-squaring with a Padé
/// approximant of degree 3–13 selected from the 1-norm.
pub fn expm(a: &Operator) -> Operator {
    let norm = one_norm(a);
    let id = Operator::identity();
    let a2 = a * a;

    for &(theta, coeffs) in &PADE_LOW {
        if norm <= theta {
            let mut u = id * C64::from(coeffs[1]);
            let mut v = id * C64::from(coeffs[0]);
            let mut power = id;
            for k in 1..coeffs.len() / 2 {
                power *= a2;
                u += power * C64::from(coeffs[2 * k + 1]);
                v += power * C64::from(coeffs[2 * k]);
            }
            let u = a * u;
            return pade_solve(&u, &v);
        }
    }

    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let scale = 0.5_f64.powi(s);
    let a = a * C64::from(scale);
    let a2 = a2 * C64::from(scale * scale);
    let a4 = a2 * a2;
    let a6 = a4 * a2;
    let b = &PADE13;
    let c = |x: f64| C64::from(x);
    let u_inner = a6 * c(b[13]) + a4 * c(b[11]) + a2 * c(b[9]);
    let u = a * (a6 * u_inner + a6 * c(b[7]) + a4 * c(b[5]) + a2 * c(b[3]) + id * c(b[1]));
    let v_inner = a6 * c(b[12]) + a4 * c(b[10]) + a2 * c(b[8]);
    let v = a6 * v_inner + a6 * c(b[6]) + a4 * c(b[4]) + a2 * c(b[2]) + id * c(b[0]);
    let mut r = pade_solve(&u, &v);
    for _ in 0..s {
        r = r * r;
    }
    r
}

fn pade_solve(u: &Operator, v: &Operator) -> Operator {
    let p = v + u;
    let q = v - u;
    q.lu().solve(&p).expect("Padé denominator is nonsingular within its norm bound")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, scale: f64) -> Operator {
        let m = Operator::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        (m + m.adjoint()) * C64::from(0.5 * scale)
    }

    fn taylor_exp(a: &Operator) -> Operator {
        // Plain Taylor series with repeated halving, used as an independent reference.
        let s = 8;
        let a = a * C64::from(0.5_f64.powi(s));
        let mut term = Operator::identity();
        let mut sum = Operator::identity();
        for k in 1..30 {
            term = term * a / C64::from(k as f64);
            sum += term;
        }
        for _ in 0..s {
            sum = sum * sum;
        }
        sum
    }

    #[test]
    fn eig_and_pade_agree_on_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for scale in [0.01, 0.3, 2.0, 10.0] {
            let h = random_hermitian(&mut rng, scale);
            let dt = 0.7;
            let e1 = HermitianEig::new(&h).propagator(dt);
            let e2 = expm(&(h * (-I * dt)));
            assert!((e1 - e2).norm() < 1e-12, "scale {scale}: {}", (e1 - e2).norm());
            assert!((e1.adjoint() * e1 - Operator::identity()).norm() < 1e-13);
        }
    }

    #[test]
    fn pade_matches_taylor_on_non_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for scale in [0.005, 0.1, 0.8, 1.8, 4.0, 30.0] {
            let h = random_hermitian(&mut rng, 1.0);
            let mut a = h * (-I);
            for i in 0..DIM {
                a[(i, i)] -= C64::from(rng.random_range(0.0..0.5));
            }
            let a = a * C64::from(scale);
            let reference = taylor_exp(&a);
            let got = expm(&a);
            let rel = (got - reference).norm() / reference.norm();
            assert!(rel < 1e-12, "scale {scale}: {rel}");
        }
    }

    #[test]
    fn divided_differences_give_frechet_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(&mut rng, 1.5);
        let e = random_hermitian(&mut rng, 1.0);
        let dt = 0.9;
        let eig = HermitianEig::new(&h);
        let phi = eig.divided_differences(dt);
        let v = eig.vectors;
        let inner = v.adjoint() * e * v;
        let analytic = v * phi.component_mul(&inner) * v.adjoint();
        let step = 1e-6;
        let fd = (HermitianEig::new(&(h + e * C64::from(step))).propagator(dt)
            - HermitianEig::new(&(h - e * C64::from(step))).propagator(dt))
            / C64::from(2.0 * step);
        assert!((analytic - fd).norm() < 1e-8, "{}", (analytic - fd).norm());
    }

    #[test]
    fn block_diagonalisation_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let full = random_hermitian(&mut rng, 1.0);
        let mut h = Operator::zeros();
        let groups: [&[usize]; 4] = [&[0, 3, 7], &[1, 2, 9, 12, 15], &[4], &[5, 6, 8, 10, 11, 13, 14]];
        for g in groups {
            for &i in g {
                for &j in g {
                    h[(i, j)] = full[(i, j)];
                }
            }
        }
        assert_eq!(coupled_blocks(&h).len(), 4);
        let eig = HermitianEig::new(&h);
        let rebuilt = eig.vectors * Operator::from_diagonal(&eig.values.map(C64::from).into()) * eig.vectors.adjoint();
        assert!((rebuilt - h).norm() < 1e-13);
        let dense = SymmetricEigen::new(h);
        let e_dense = dense.eigenvectors
            * Operator::from_diagonal(&dense.eigenvalues.map(|l| C64::from_polar(1.0, -0.8 * l)))
            * dense.eigenvectors.adjoint();
        assert!((eig.propagator(0.8) - e_dense).norm() < 1e-13);
    }

    #[test]
    fn planar_products_match_nalgebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_hermitian(&mut rng, 1.0) + Operator::from_fn(|_, _| C64::new(rng.random(), rng.random()));
        let b = random_hermitian(&mut rng, 1.0) * C64::new(0.3, -1.1);
        let x = SMatrix::<C64, DIM, 4>::from_fn(|_, _| C64::new(rng.random(), rng.random()));
        let y = SMatrix::<C64, DIM, 4>::from_fn(|_, _| C64::new(rng.random(), rng.random()));
        assert!((mul(&a, &b) - a * b).norm() < 1e-13);
        assert!((mul(&a, &x) - a * x).norm() < 1e-13);
        assert!((adjoint_mul(&a, &x) - a.adjoint() * x).norm() < 1e-13);
        assert!((mul_adjoint(&x, &y) - x * y.adjoint()).norm() < 1e-13);
    }

    #[test]
    fn degenerate_spectrum_derivative() {
        // Zero generator: every eigenvalue coincides, derivative is −i dt E.
        let eig = HermitianEig::new(&Operator::zeros());
        let phi = eig.divided_differences(0.5);
        for z in phi.iter() {
            assert!((z - C64::new(0.0, -0.5)).norm() < 1e-15);
        }
    }
}
