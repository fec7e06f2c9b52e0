//! Seeded random sampling shared by the property checks and the Monte
//! Carlo operators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, UnitSphere};

use crate::momentum::Vec3;

pub type SampleRng = ChaCha8Rng;

/// Independent stream for chunk `chunk` of a computation seeded with `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> SampleRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

pub fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Vec3 {
    let x: f64 = StandardNormal.sample(rng);
    let y: f64 = StandardNormal.sample(rng);
    let z: f64 = StandardNormal.sample(rng);
    Vec3::new(scale * x, scale * y, scale * z)
}

pub fn unit_vec<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    let [x, y, z]: [f64; 3] = UnitSphere.sample(rng);
    Vec3::new(x, y, z)
}

/// Isotropic vector with a Cauchy-distributed length scale, capped at
/// `cap`, for probing the large-momentum regime.
pub fn heavy_tail_vec<R: Rng + ?Sized>(rng: &mut R, cap: f64) -> Vec3 {
    let c: f64 = rand_distr::Cauchy::new(0.0, 1.0).unwrap().sample(rng);
    let scale = c.abs().clamp(1e-3, cap);
    scale * unit_vec(rng)
}

/// Splits `n` items into fixed chunks of size `chunk`; the partition
/// depends only on `n`, never on the number of workers.
pub fn chunks(n: usize, chunk: usize) -> impl Iterator<Item = (u64, std::ops::Range<usize>)> {
    let chunk = chunk.max(1);
    (0..n.div_ceil(chunk)).map(move |c| (c as u64, c * chunk..((c + 1) * chunk).min(n)))
}
