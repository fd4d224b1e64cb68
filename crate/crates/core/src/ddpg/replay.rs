use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::types::Experience;
use crate::error::{Error, Result};

pub const DEFAULT_CAPACITY: usize = 100_000;

/// Fixed-capacity FIFO of transitions with uniform, with-replacement sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    storage: Vec<Experience>,
    // Slot the next push overwrites once the buffer is full.
    head: usize,
    rng: ChaCha8Rng,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, rng: ChaCha8Rng) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("replay buffer capacity must be positive"));
        }
        Ok(Self {
            capacity,
            storage: Vec::with_capacity(capacity.min(1 << 16)),
            head: 0,
            rng,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn push(&mut self, exp: Experience) {
        if self.storage.len() < self.capacity {
            self.storage.push(exp);
        } else {
            self.storage[self.head] = exp;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    /// Draws `batch_size` transitions uniformly with replacement.
    ///
    /// Indices are logical (0 = oldest), so a buffer restored from its
    /// contents draws the same transitions as the original.
    pub fn sample(&mut self, batch_size: usize) -> Result<Vec<Experience>> {
        if batch_size == 0 || self.storage.len() < batch_size {
            return Err(Error::usage(format!(
                "cannot sample {batch_size} transitions from a buffer holding {}",
                self.storage.len()
            )));
        }
        let n = self.storage.len();
        Ok((0..batch_size)
            .map(|_| self.storage[(self.head + self.rng.random_range(0..n)) % n])
            .collect())
    }

    /// Contents from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        let (newer, older) = self.storage.split_at(self.head);
        older.iter().chain(newer.iter())
    }

    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    /// Rebuilds a buffer from its oldest-to-newest contents.
    pub fn restore(
        capacity: usize,
        contents: Vec<Experience>,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        let mut buf = Self::new(capacity, rng)?;
        if contents.len() > capacity {
            return Err(Error::format(
                "replay.count",
                format!("{} transitions exceed capacity {capacity}", contents.len()),
            ));
        }
        buf.storage = contents;
        Ok(buf)
    }
}

impl PartialEq for ReplayBuffer {
    /// Equal when capacity, logical contents and sampler state agree.
    fn eq(&self, other: &Self) -> bool {
        self.capacity == other.capacity
            && self.rng == other.rng
            && self.len() == other.len()
            && self.iter().eq(other.iter())
    }
}
