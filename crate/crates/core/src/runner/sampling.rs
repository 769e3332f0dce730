use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rug::Integer;

use crate::bestapprox::{Provenance, TargetMatrix};
use crate::error::{invalid, Result};

/// Offset (in 32-bit words) of the auxiliary draws within a sample's stream,
/// far past anything the θ entries use.
pub(crate) const AUX_WORD_POS: u128 = 1 << 48;

/// Generator for sample `index`: ChaCha20 keyed by `seed`, stream `index`.
pub(crate) fn sample_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Generator for non-θ draws tied to `(seed, index)`, e.g. synthetic noise or
/// perturbation matrices.
pub(crate) fn aux_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = sample_rng(seed, index);
    rng.set_word_pos(AUX_WORD_POS);
    rng
}

/// The `index`-th random target: an `m × n` matrix with entries `k / 2^bits`,
/// `k` uniform on `[0, 2^bits)`.
///
/// Entry `e` (row-major) reads its words from a fixed position of stream
/// `index`, so a draw depends only on `(seed, index, e)`.
pub fn sample_theta(seed: u64, index: u64, m: usize, n: usize, bits: u32) -> Result<TargetMatrix> {
    if bits < 16 {
        return Err(invalid("dyadic_bits must be at least 16"));
    }
    let words = bits.div_ceil(64) as usize;
    let mut rng = sample_rng(seed, index);
    let mut ks = Vec::with_capacity(m * n);
    for e in 0..m * n {
        rng.set_word_pos((e * 2 * words) as u128);
        let mut k = Integer::new();
        for _ in 0..words {
            k <<= 64;
            k += rng.next_u64();
        }
        k.keep_bits_mut(bits);
        ks.push(k);
    }
    TargetMatrix::dyadic(m, n, ks, bits, Provenance::DyadicSample { seed, index, bits })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_keyed_by_index() {
        let a = sample_theta(7, 3, 2, 2, 64).unwrap();
        let b = sample_theta(7, 3, 2, 2, 64).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.entries(), sample_theta(7, 4, 2, 2, 64).unwrap().entries());
        assert_ne!(a.entries(), sample_theta(8, 3, 2, 2, 64).unwrap().entries());
    }

    #[test]
    fn entry_does_not_depend_on_shape() {
        // Entry 0 reads the same words whatever the matrix size.
        let a = sample_theta(1, 9, 1, 1, 100).unwrap();
        let b = sample_theta(1, 9, 2, 3, 100).unwrap();
        assert_eq!(a.entries()[0], b.entries()[0]);
    }

    #[test]
    fn entries_in_unit_interval_with_dyadic_denominator() {
        for i in 0..50 {
            let t = sample_theta(0, i, 1, 2, 20).unwrap();
            for x in t.entries() {
                assert!(*x >= 0 && *x < 1);
                assert!(Integer::from(1u32 << 20).is_divisible(x.denom()));
            }
        }
    }

    #[test]
    fn rejects_short_denominators() {
        assert!(sample_theta(0, 0, 1, 1, 15).is_err());
    }
}
