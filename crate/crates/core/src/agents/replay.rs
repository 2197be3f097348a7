use rand::Rng;

use crate::wrapper::ActionMask;

/// One stored experience. `next_valid_mask` is the valid-action set of the
/// successor state, used by masked bootstrap targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
    pub next_valid_mask: ActionMask,
    pub violated: bool,
}

/// Fixed-capacity ring buffer with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
            inserted: 0,
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
        self.inserted += 1;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.items[i]
    }

    /// `n` indices drawn uniformly with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<usize> {
        assert!(!self.is_empty(), "sampling an empty buffer");
        (0..n).map(|_| rng.gen_range(0..self.items.len())).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<&Transition> {
        self.sample_indices(rng, n)
            .into_iter()
            .map(|i| &self.items[i])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(action: usize) -> Transition {
        Transition {
            state: vec![action as f64],
            action,
            reward: 0.0,
            next_state: vec![0.0],
            done: false,
            next_valid_mask: [true; 9],
            violated: false,
        }
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut b = ReplayBuffer::new(3);
        for a in 0..5 {
            b.push(t(a));
        }
        assert_eq!(b.len(), 3);
        assert_eq!(b.inserted(), 5);
        let mut stored: Vec<usize> = (0..3).map(|i| b.get(i).action).collect();
        stored.sort();
        assert_eq!(stored, vec![2, 3, 4]);
    }

    #[test]
    fn sampling_is_uniform_within_three_sigma() {
        let k = 10;
        let mut b = ReplayBuffer::new(k);
        for a in 0..k {
            b.push(t(a));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 200_000;
        let mut counts = vec![0u32; k];
        for i in b.sample_indices(&mut rng, n) {
            counts[i] += 1;
        }
        let p = 1.0 / k as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() < 3.0 * sigma + 1.0, "{c}");
        }
    }

    #[test]
    fn sampling_is_deterministic_given_rng() {
        let mut b = ReplayBuffer::new(10);
        (0..10).for_each(|a| b.push(t(a)));
        let draw = |seed| b.sample_indices(&mut ChaCha8Rng::seed_from_u64(seed), 32);
        assert_eq!(draw(1), draw(1));
    }
}
