//! Reference oracles and automata with known closed forms.

use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracle::{ElmanOracle, FnOracle};
use crate::wfa::Wfa;

/// `f(k) = (1 - a) a^k`, a probability distribution for `0 ≤ a < 1`.
pub fn geometric(a: f64) -> FnOracle {
    FnOracle::new(move |k| (1.0 - a) * a.powi(k as i32))
        .probabilistic()
        .with_tail_bound(move |n| a.powi(n as i32 + 1))
}

/// `f(k) = (1 - r²) r^k` for even `k` and `0` for odd `k`.
///
/// With `r = 1/3` this is `f(2m) = (8/9) 9^{-m}`, whose Hankel matrix splits
/// into two interleaved rank-one blocks with singular values `0.9` and `0.1`.
pub fn even_geometric(r: f64) -> FnOracle {
    let r2 = r * r;
    FnOracle::new(move |k| {
        if k % 2 == 0 {
            (1.0 - r2) * r.powi(k as i32)
        } else {
            0.0
        }
    })
    .probabilistic()
    .with_tail_bound(move |n| {
        // first even index strictly after n
        let next = if n % 2 == 0 { n + 2 } else { n + 1 };
        r.powi(next as i32)
    })
}

/// The identically zero sequence.
pub fn zero() -> FnOracle {
    FnOracle::new(|_| 0.0).with_tail_bound(|_| 0.0)
}

/// A two-unit Elman network with fixed weights.
pub fn small_elman() -> ElmanOracle {
    ElmanOracle::new(
        DMatrix::from_row_slice(2, 2, &[0.5, -0.3, 0.2, 0.4]),
        DVector::from_vec(vec![0.1, -0.2]),
        DVector::from_vec(vec![0.05, 0.0]),
        DVector::from_vec(vec![0.0, 0.0]),
        DMatrix::from_row_slice(2, 2, &[1.0, -0.5, -0.2, 0.7]),
    )
    .expect("fixed shapes are consistent")
}

/// Uniform draw in `[-1, 1)` from the top 53 bits of a 64-bit word.
pub(crate) fn symmetric_unit(rng: &mut ChaCha8Rng) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    2.0 * u - 1.0
}

/// A random `states`-state WFA with entries uniform in `[-1, 1)` and the
/// transition matrix rescaled to spectral radius `radius`.
pub fn random_stable_wfa(states: usize, radius: f64, seed: u64) -> Wfa {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |len: usize| (0..len).map(|_| symmetric_unit(&mut rng)).collect::<Vec<_>>();
    let alpha = draw(states);
    let beta = draw(states);
    let mut a = DMatrix::from_vec(states, states, draw(states * states));
    let rho = a
        .complex_eigenvalues()
        .iter()
        .fold(0.0_f64, |m, z| m.max(z.norm()));
    if rho > 0.0 {
        a *= radius / rho;
    }
    Wfa::new(alpha, a, beta).expect("shapes agree by construction")
}
