//! The three hardware clocks: real-time clock, periodic timer, and
//! high-precision alarm timer.
//!
//! All three advance in lockstep, one nanosecond at a time in the model.
//! The simulator advances them in jumps; [`ClockBank::next_event_delta`]
//! bounds how far a jump may go without stepping over a firing.

/// Alarm value meaning "no alarm armed".
pub const ALARM_DISABLED: u64 = u64::MAX;

/// Which timers fired during an `advance` call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClockEvents {
    /// The periodic timer completed an interval.
    pub periodic: bool,
    /// The high-precision timer reached its alarm value.
    pub hp_alarm: bool,
}

impl ClockEvents {
    pub fn any(&self) -> bool {
        self.periodic || self.hp_alarm
    }
}

/// The clock hardware as one unit.
///
/// The real-time counter starts at a configurable base and free-runs. The
/// periodic timer counts up to its period, fires, and restarts from zero.
/// The high-precision timer counts up from its last reset and fires when
/// its value becomes exactly equal to the armed alarm; an alarm at or
/// below the current value never fires.
#[derive(Clone, Debug)]
pub struct ClockBank {
    rt_value: u64,
    tick_period: u64,
    tick_value: u64,
    hp_value: u64,
    hp_alarm: u64,
}

impl ClockBank {
    pub fn new(base_time: u64, tick_period: u64) -> Self {
        assert!(tick_period > 0, "tick period must be positive");
        ClockBank {
            rt_value: base_time,
            tick_period,
            tick_value: 0,
            hp_value: 0,
            hp_alarm: ALARM_DISABLED,
        }
    }

    /// Real-time counter value, nanoseconds since power-on plus base.
    pub fn rt_value(&self) -> u64 {
        self.rt_value
    }

    pub fn tick_period(&self) -> u64 {
        self.tick_period
    }

    /// Phase within the current periodic interval, in `[0, period)`.
    pub fn tick_value(&self) -> u64 {
        self.tick_value
    }

    /// High-precision counter value, nanoseconds since its last reset.
    pub fn hp_value(&self) -> u64 {
        self.hp_value
    }

    pub fn hp_alarm(&self) -> u64 {
        self.hp_alarm
    }

    pub fn hp_alarm_armed(&self) -> bool {
        self.hp_alarm != ALARM_DISABLED
    }

    /// Arm the high-precision alarm. A value at or below the current
    /// counter will never fire.
    pub fn set_hp_alarm(&mut self, alarm: u64) {
        self.hp_alarm = alarm;
    }

    /// Restart the high-precision counter from zero with no alarm armed.
    pub fn reset_hp(&mut self) {
        self.hp_value = 0;
        self.hp_alarm = ALARM_DISABLED;
    }

    /// Disarm the alarm, leaving the counter running.
    pub fn end_hp_alarm(&mut self) {
        self.hp_alarm = ALARM_DISABLED;
    }

    /// Nanoseconds until the next timer firing. Always positive and at
    /// most one periodic interval.
    pub fn next_event_delta(&self) -> u64 {
        let mut delta = self.tick_period - self.tick_value;
        if self.hp_alarm != ALARM_DISABLED && self.hp_alarm > self.hp_value {
            delta = delta.min(self.hp_alarm - self.hp_value);
        }
        delta
    }

    /// Advance all clocks by `dt` nanoseconds. `dt` must not step past a
    /// firing, so it must be at most [`Self::next_event_delta`].
    pub fn advance(&mut self, dt: u64) -> ClockEvents {
        assert!(
            dt <= self.next_event_delta(),
            "advance of {dt} ns would step over a timer firing"
        );
        self.rt_value += dt;
        self.tick_value += dt;
        self.hp_value += dt;

        let mut events = ClockEvents::default();
        if self.tick_value == self.tick_period {
            self.tick_value = 0;
            events.periodic = true;
        }
        if self.hp_value == self.hp_alarm {
            events.hp_alarm = true;
        }
        events
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_timer_fires_every_interval() {
        let mut clocks = ClockBank::new(0, 100);
        assert_eq!(clocks.next_event_delta(), 100);
        let events = clocks.advance(100);
        assert!(events.periodic);
        assert!(!events.hp_alarm);
        assert_eq!(clocks.tick_value(), 0);
        assert_eq!(clocks.rt_value(), 100);
    }

    #[test]
    fn alarm_fires_only_on_exact_match_after_advancing() {
        let mut clocks = ClockBank::new(0, 1000);
        clocks.set_hp_alarm(40);
        assert_eq!(clocks.next_event_delta(), 40);
        assert!(!clocks.advance(10).hp_alarm);
        assert!(clocks.advance(30).hp_alarm);
        assert!(!clocks.advance(clocks.next_event_delta()).hp_alarm);
    }

    #[test]
    fn alarm_at_or_below_current_value_never_bounds_the_jump() {
        let mut clocks = ClockBank::new(0, 1000);
        clocks.advance(50);
        clocks.set_hp_alarm(50);
        assert_eq!(clocks.next_event_delta(), 950);
        clocks.set_hp_alarm(20);
        assert_eq!(clocks.next_event_delta(), 950);
    }

    #[test]
    fn coincident_firings_are_reported_together() {
        let mut clocks = ClockBank::new(0, 100);
        clocks.set_hp_alarm(100);
        let events = clocks.advance(100);
        assert!(events.periodic && events.hp_alarm);
    }

    #[test]
    fn reset_restarts_the_counter_and_disarms() {
        let mut clocks = ClockBank::new(7, 100);
        clocks.set_hp_alarm(90);
        clocks.advance(60);
        clocks.reset_hp();
        assert_eq!(clocks.hp_value(), 0);
        assert!(!clocks.hp_alarm_armed());
        assert_eq!(clocks.rt_value(), 67);
        assert_eq!(clocks.tick_value(), 60);
    }
}
