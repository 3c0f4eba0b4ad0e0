use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

/// Number of items assigned to train: `floor(n * fraction)`.
pub fn train_len(n: usize, fraction: f64) -> usize {
    (n as f64 * fraction).floor() as usize
}

/// Seeded uniform shuffle; the first `floor(n * fraction)` items become train.
pub fn split_dataset<T>(items: Vec<T>, train_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    if items.len() < 2 {
        return Err(Error::InvalidInput(format!("cannot split {} item(s)", items.len())));
    }
    let mut items = items;
    items.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = items.split_off(train_len(items.len(), train_fraction));
    Ok((items, test))
}
