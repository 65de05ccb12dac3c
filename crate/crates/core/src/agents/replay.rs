use rand::seq::index;
use rand::Rng;

use crate::{Error, Result};

/// Fixed-capacity FIFO ring; once full, each push evicts the oldest entry.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    items: Vec<T>,
    capacity: usize,
    next: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument("replay capacity must be positive".into()));
        }
        Ok(Self { items: Vec::with_capacity(capacity.min(1 << 16)), capacity, next: 0 })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.next] = item;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        let split = if self.items.len() < self.capacity { 0 } else { self.next };
        self.items[split..].iter().chain(self.items[..split].iter())
    }

    /// `batch` distinct entries chosen uniformly.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&T>> {
        if batch > self.items.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot sample {batch} from {} stored transitions",
                self.items.len()
            )));
        }
        Ok(index::sample(rng, self.items.len(), batch)
            .into_iter()
            .map(|i| &self.items[i])
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_capacity_is_rejected() {
        assert!(ReplayBuffer::<u8>::new(0).is_err());
    }

    #[test]
    fn sample_is_distinct_and_bounded() {
        let mut b = ReplayBuffer::new(10).unwrap();
        for i in 0..10 {
            b.push(i);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s: Vec<i32> = b.sample(10, &mut rng).unwrap().into_iter().copied().collect();
        s.sort();
        assert_eq!(s, (0..10).collect::<Vec<_>>());
        assert!(b.sample(11, &mut rng).is_err());
    }

    proptest! {
        #[test]
        fn keeps_the_newest_capacity_items(cap in 1usize..20, pushes in 0usize..60) {
            let mut b = ReplayBuffer::new(cap).unwrap();
            for i in 0..pushes {
                b.push(i);
            }
            prop_assert_eq!(b.len(), pushes.min(cap));
            let kept: Vec<usize> = b.iter().copied().collect();
            let expected: Vec<usize> = (pushes.saturating_sub(cap)..pushes).collect();
            prop_assert_eq!(kept, expected);
        }
    }
}
