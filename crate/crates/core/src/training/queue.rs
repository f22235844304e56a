use crate::search_space::{EdgeId, Trajectory};

#[derive(Clone, Debug, PartialEq)]
pub struct QueueEntry {
    pub trajectory: Trajectory,
    pub reward: f64,
    actions: Vec<EdgeId>,
}

/// Best `capacity` distinct action sequences seen so far, highest reward
/// first. Ties keep the earlier arrival ahead.
#[derive(Clone, Debug, PartialEq)]
pub struct TopKQueue {
    capacity: usize,
    entries: Vec<QueueEntry>,
}

impl TopKQueue {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, entries: Vec::with_capacity(capacity + 1) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[QueueEntry] {
        &self.entries
    }

    pub fn contains(&self, trajectory: &Trajectory) -> bool {
        let actions = trajectory.actions();
        self.entries.iter().any(|e| e.actions == actions)
    }

    /// Offers one observation; returns whether it is in the queue afterwards
    /// as a new entry.
    pub fn offer(&mut self, trajectory: &Trajectory, reward: f64) -> bool {
        let actions = trajectory.actions();
        if self.entries.iter().any(|e| e.actions == actions) {
            return false;
        }
        let pos = self.entries.iter().position(|e| e.reward < reward).unwrap_or(self.entries.len());
        if pos >= self.capacity {
            return false;
        }
        self.entries.insert(pos, QueueEntry { trajectory: trajectory.clone(), reward, actions });
        self.entries.truncate(self.capacity);
        true
    }
}
