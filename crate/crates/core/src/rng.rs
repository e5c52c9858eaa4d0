//! Seeded named random streams.
//!
//! Every consumer draws from its own stream derived from `(seed, name)`, so
//! adding a consumer never perturbs another one's draws.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::fibers::DirectIntegralDecomposition;
use crate::linalg::{orthonormalize, Matrix};
use crate::scalar::{Real, C};
use crate::space::{DiscreteMeasureSpace, VertexFunction};

/// FNV-1a over the little-endian seed followed by the stream name.
fn stream_key(seed: u64, name: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    seed.to_le_bytes()
        .iter()
        .chain(name.as_bytes())
        .fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// Independent generator for the named stream.
pub fn stream(seed: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_key(seed, name))
}

pub fn complex_gaussian<R: Real, G: Rng + ?Sized>(rng: &mut G) -> C<R> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C::new(R::lit(re), R::lit(im))
}

/// Function with independent standard complex Gaussian values.
pub fn random_function<R: Real, G: Rng + ?Sized>(space: &Arc<DiscreteMeasureSpace<R>>, rng: &mut G) -> VertexFunction<R> {
    let values = (0..space.len()).map(|_| complex_gaussian(rng)).collect();
    VertexFunction::new(space.clone(), values).expect("length matches")
}

/// Function with independent real values uniform in `[-1, 1]`.
pub fn random_real_function<R: Real, G: Rng + ?Sized>(space: &Arc<DiscreteMeasureSpace<R>>, rng: &mut G) -> VertexFunction<R> {
    let values: Vec<R> = (0..space.len()).map(|_| R::lit(rng.random_range(-1.0..=1.0))).collect();
    VertexFunction::from_real(space.clone(), &values).expect("length matches")
}

/// Haar-distributed `d × d` unitary: Gram–Schmidt of a complex Gaussian matrix.
pub fn haar_unitary<R: Real, G: Rng + ?Sized>(d: usize, rng: &mut G) -> Matrix<R> {
    let ones = vec![R::one(); d];
    loop {
        let columns: Vec<Vec<C<R>>> = (0..d).map(|_| (0..d).map(|_| complex_gaussian(rng)).collect()).collect();
        let q = orthonormalize(&columns, &ones, R::lit(1e-6));
        if q.len() == d {
            return Matrix::from_columns(d, &q).expect("square");
        }
    }
}

/// One Haar unitary per fiber, sized to the fiber dimension.
pub fn fiber_rotations<R: Real, G: Rng + ?Sized>(dec: &DirectIntegralDecomposition<R>, rng: &mut G) -> Vec<Matrix<R>> {
    dec.fibers().iter().map(|f| haar_unitary(f.dim(), rng)).collect()
}
