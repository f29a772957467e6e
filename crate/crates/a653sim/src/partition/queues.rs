//! The time counter queue: pending alarms for delayed starts, timed
//! waits, and suspensions with a timeout.
//!
//! Entries are kept sorted by the absolute value of their alarm, which is
//! nanoseconds on the partition's window-relative time axis. A negative
//! alarm marks a counter whose owner has been suspended on top of its
//! wait; the magnitude still orders it. At most one entry exists per
//! process.

use crate::types::{ProcessId, Time};

/// One pending alarm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimeCounter {
    pub process: ProcessId,
    pub alarm: Time,
}

#[derive(Clone, Debug, Default)]
pub struct TimeCounterQueue {
    entries: Vec<TimeCounter>,
}

impl TimeCounterQueue {
    pub fn new() -> Self {
        TimeCounterQueue::default()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[TimeCounter] {
        &self.entries
    }

    pub fn head(&self) -> Option<TimeCounter> {
        self.entries.first().copied()
    }

    pub fn contains(&self, process: ProcessId) -> bool {
        self.entries.iter().any(|tc| tc.process == process)
    }

    /// The raw (signed) alarm of a process's counter.
    pub fn alarm_of(&self, process: ProcessId) -> Option<Time> {
        self.entries
            .iter()
            .find(|tc| tc.process == process)
            .map(|tc| tc.alarm)
    }

    /// Process ids with a pending counter, in ascending id order.
    pub fn timing_ids(&self) -> Vec<ProcessId> {
        let mut ids: Vec<ProcessId> = self.entries.iter().map(|tc| tc.process).collect();
        ids.sort_unstable();
        ids
    }

    /// Insert keeping ascending |alarm| order; a new entry goes after all
    /// entries of equal magnitude.
    pub fn enqueue(&mut self, counter: TimeCounter) {
        debug_assert!(!self.contains(counter.process), "one counter per process");
        let magnitude = counter.alarm.unsigned_abs();
        let at = self
            .entries
            .iter()
            .position(|tc| tc.alarm.unsigned_abs() > magnitude)
            .unwrap_or(self.entries.len());
        self.entries.insert(at, counter);
    }

    /// Remove a process's counter, returning it.
    pub fn dequeue(&mut self, process: ProcessId) -> Option<TimeCounter> {
        let at = self.entries.iter().position(|tc| tc.process == process)?;
        Some(self.entries.remove(at))
    }

    /// Negate a counter's alarm in place. The magnitude is unchanged, so
    /// the ordering is untouched.
    pub fn turn_over(&mut self, process: ProcessId) {
        if let Some(tc) = self.entries.iter_mut().find(|tc| tc.process == process) {
            tc.alarm = -tc.alarm;
        }
    }

    /// Cut off every counter whose magnitude has been reached by `hpt`
    /// and return the owners of those that were armed (positive alarm),
    /// in queue order. Suspended (negative) counters in the cut are
    /// dropped without a release.
    pub fn cut_released(&mut self, hpt: Time) -> Vec<ProcessId> {
        let cut = self
            .entries
            .iter()
            .take_while(|tc| (tc.alarm.unsigned_abs() as i128) <= (hpt as i128))
            .count();
        self.entries
            .drain(..cut)
            .filter(|tc| tc.alarm > 0)
            .map(|tc| tc.process)
            .collect()
    }

    /// Shift every alarm one partition period into the past, then restore
    /// the magnitude ordering. The sort is stable so equal magnitudes
    /// keep their relative order.
    pub fn align(&mut self, period: Time) {
        for tc in &mut self.entries {
            tc.alarm -= period;
        }
        self.entries.sort_by_key(|tc| tc.alarm.unsigned_abs());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tc(process: ProcessId, alarm: Time) -> TimeCounter {
        TimeCounter { process, alarm }
    }

    fn alarms(q: &TimeCounterQueue) -> Vec<Time> {
        q.entries().iter().map(|t| t.alarm).collect()
    }

    #[test]
    fn enqueue_orders_by_magnitude_after_equals() {
        let mut q = TimeCounterQueue::new();
        q.enqueue(tc(1, 500));
        q.enqueue(tc(2, 200));
        q.enqueue(tc(3, -500));
        q.enqueue(tc(4, 500));
        let order: Vec<ProcessId> = q.entries().iter().map(|t| t.process).collect();
        assert_eq!(order, vec![2, 1, 3, 4]);
        assert_eq!(q.head().unwrap().process, 2);
    }

    #[test]
    fn dequeue_removes_only_the_named_process() {
        let mut q = TimeCounterQueue::new();
        q.enqueue(tc(1, 100));
        q.enqueue(tc(2, 200));
        let removed = q.dequeue(1).unwrap();
        assert_eq!(removed.alarm, 100);
        assert!(q.dequeue(1).is_none());
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn turn_over_flips_sign_in_place() {
        let mut q = TimeCounterQueue::new();
        q.enqueue(tc(1, 100));
        q.enqueue(tc(2, 300));
        q.turn_over(2);
        assert_eq!(q.alarm_of(2), Some(-300));
        q.turn_over(2);
        assert_eq!(q.alarm_of(2), Some(300));
        assert_eq!(alarms(&q), vec![100, 300]);
    }

    #[test]
    fn cut_releases_armed_counters_and_drops_suspended_ones() {
        let mut q = TimeCounterQueue::new();
        q.enqueue(tc(1, 100));
        q.enqueue(tc(2, -200));
        q.enqueue(tc(3, 300));
        q.enqueue(tc(4, 400));
        let released = q.cut_released(300);
        assert_eq!(released, vec![1, 3]);
        assert_eq!(q.len(), 1);
        assert_eq!(q.head().unwrap().process, 4);
    }

    #[test]
    fn cut_below_everything_releases_nothing() {
        let mut q = TimeCounterQueue::new();
        q.enqueue(tc(1, 100));
        assert!(q.cut_released(99).is_empty());
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn align_shifts_and_restores_magnitude_order() {
        let mut q = TimeCounterQueue::new();
        q.enqueue(tc(1, 300));
        q.enqueue(tc(2, 600));
        q.align(1000);
        assert_eq!(q.alarm_of(1), Some(-700));
        assert_eq!(q.alarm_of(2), Some(-400));
        let order: Vec<ProcessId> = q.entries().iter().map(|t| t.process).collect();
        assert_eq!(order, vec![2, 1]);
    }

    #[test]
    fn timing_ids_are_ascending() {
        let mut q = TimeCounterQueue::new();
        q.enqueue(tc(9, 100));
        q.enqueue(tc(2, 200));
        q.enqueue(tc(5, 50));
        assert_eq!(q.timing_ids(), vec![2, 5, 9]);
    }

}
