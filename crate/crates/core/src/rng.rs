use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream domains. Each consumer of randomness gets its own key so that, for
/// example, placebo replicate 3 and subsample draw 3 never share a stream.
pub(crate) const PLACEBO: u64 = 0x706c_6163_6562_6f00;
pub(crate) const SUBSAMPLE: u64 = 0x7375_6273_616d_7000;
pub(crate) const SYNTH: u64 = 0x7379_6e74_6800_0000;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for task `index` under `(seed, domain)`.
///
/// The result depends only on its arguments, so tasks can run in any order or
/// on any thread.
pub(crate) fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(domain)));
    rng.set_stream(index);
    rng
}
