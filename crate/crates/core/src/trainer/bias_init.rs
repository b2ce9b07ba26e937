use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Scale inside the logarithmic modes.
const LOG_SCALE: f64 = 96.0;

/// Initial bias vector for one of the eight modes. `i` below is the 1-based
/// class index.
///
/// * 0: uniform noise in `[-0.01, 0.01]`
/// * 1: `i`
/// * 2: `64 i / N`; 3: `64 (N - i) / N`
/// * 4: `ln(96 i)`; 5: `ln(96 (N + 1 - i))`
/// * 6: `ln(96 N)` for `1 ≤ i ≤ ⌊N/4⌋` or `⌊N/2⌋ ≤ i ≤ ⌊3N/4⌋`, else 0
/// * 7: the complement of mode 6
pub fn init_bias(mode: u8, num_classes: usize, seed: u64) -> Result<Vec<f64>> {
    if num_classes < 2 {
        return Err(Error::TooFewClasses(num_classes));
    }
    let n = num_classes as f64;
    let in_block = |i: usize| {
        (1..=num_classes / 4).contains(&i) || (num_classes / 2..=3 * num_classes / 4).contains(&i)
    };
    let classes = 1..=num_classes;
    let bias = match mode {
        0 => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            classes.map(|_| rng.random_range(-0.01..=0.01)).collect()
        }
        1 => classes.map(|i| i as f64).collect(),
        2 => classes.map(|i| 64.0 * i as f64 / n).collect(),
        3 => classes.map(|i| 64.0 * (n - i as f64) / n).collect(),
        4 => classes.map(|i| (LOG_SCALE * i as f64).ln()).collect(),
        5 => classes
            .map(|i| (LOG_SCALE * (n + 1.0 - i as f64)).ln())
            .collect(),
        6 | 7 => {
            let high = (LOG_SCALE * n).ln();
            classes
                .map(|i| {
                    if in_block(i) == (mode == 6) {
                        high
                    } else {
                        0.0
                    }
                })
                .collect()
        }
        other => return Err(Error::UnknownBiasInit(other)),
    };
    Ok(bias)
}
