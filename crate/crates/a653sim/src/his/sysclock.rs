//! The kernel's view of time.
//!
//! System time advances only at periodic clock ticks and starts two
//! intervals in the negative so that it crosses zero after the second
//! tick. The interrupt time records the high-precision counter value at
//! the moment the last clock-tick interrupt was serviced.

use crate::types::Time;

#[derive(Clone, Debug)]
pub struct SystemClock {
    base_time: Time,
    tick_interval: Time,
    tick_counter: u64,
    time: Time,
    interrupt_time: Time,
}

impl SystemClock {
    pub fn new(base_time: Time, tick_interval: Time) -> Self {
        SystemClock {
            base_time,
            tick_interval,
            tick_counter: 0,
            time: -2 * tick_interval,
            interrupt_time: Time::MAX,
        }
    }

    pub fn base_time(&self) -> Time {
        self.base_time
    }

    pub fn tick_interval(&self) -> Time {
        self.tick_interval
    }

    pub fn tick_counter(&self) -> u64 {
        self.tick_counter
    }

    /// Current system time. Lags wall time by two intervals and moves in
    /// whole-interval steps.
    pub fn time(&self) -> Time {
        self.time
    }

    /// High-precision counter value latched at the last serviced
    /// clock-tick interrupt.
    pub fn interrupt_time(&self) -> Time {
        self.interrupt_time
    }

    /// Advance one periodic tick.
    pub fn update(&mut self) {
        self.tick_counter += 1;
        self.time += self.tick_interval;
    }

    /// Latch the interrupt time.
    pub fn latch_interrupt_time(&mut self, hpt: Time) {
        self.interrupt_time = hpt;
    }
}
