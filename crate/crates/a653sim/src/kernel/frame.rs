//! The major time frame: the cyclic partition schedule derived from the
//! configured window list.
//!
//! Window offsets are not configured directly. The first window starts at
//! offset zero; a partition's first window is packed immediately after the
//! window before it; every later window of the same partition sits exactly
//! one partition period after its previous one. The frame length is the
//! largest partition period, and the whole pattern repeats with it.

use crate::types::*;

use super::config::{ConfigError, ModuleConfig};

/// One scheduling window inside the frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameWindow {
    pub partition: PartitionId,
    /// Start of the window relative to the frame origin.
    pub offset: Time,
    /// How long the window runs; always the owning partition's duration.
    pub duration: Time,
    /// The owning partition's period.
    pub period: Time,
    /// Whether periodic processes of the partition are released here.
    pub periodic_start: bool,
}

/// The cyclic schedule.
#[derive(Clone, Debug)]
pub struct MajorFrame {
    /// Frame length: the largest partition period.
    pub length: Time,
    pub windows: Vec<FrameWindow>,
}

impl MajorFrame {
    /// Derives window offsets from the configured window order and checks
    /// that the result is a legal schedule: every window fits inside the
    /// frame, no two windows overlap, and every partition appears.
    pub fn build(config: &ModuleConfig) -> Result<Self, ConfigError> {
        if config.windows.is_empty() {
            return Err(ConfigError::NoWindows);
        }
        let length = config.partitions.iter().map(|p| p.period).max().unwrap_or(0);

        let mut windows: Vec<FrameWindow> = Vec::with_capacity(config.windows.len());
        for (i, w) in config.windows.iter().enumerate() {
            let slot = config
                .partitions
                .iter()
                .position(|p| p.name == w.partition)
                .ok_or_else(|| ConfigError::UnknownWindowPartition {
                    index: i,
                    name: w.partition.clone(),
                })?;
            let part = &config.partitions[slot];
            let partition = (slot + 1) as PartitionId;
            let offset = if i == 0 {
                0
            } else if let Some(prev) = windows.iter().rfind(|fw| fw.partition == partition) {
                prev.offset + prev.period
            } else {
                let before = &windows[i - 1];
                before.offset + before.duration
            };
            windows.push(FrameWindow {
                partition,
                offset,
                duration: part.duration,
                period: part.period,
                periodic_start: w.periodic_start,
            });
        }

        for p in &config.partitions {
            let id = (config.partitions.iter().position(|q| q.name == p.name).unwrap() + 1)
                as PartitionId;
            if !windows.iter().any(|w| w.partition == id) {
                return Err(ConfigError::PartitionNotScheduled(p.name.clone()));
            }
        }

        for (i, w) in windows.iter().enumerate() {
            if w.offset + w.duration > length {
                return Err(ConfigError::WindowPastFrameEnd {
                    index: i,
                    offset: w.offset,
                    duration: w.duration,
                    length,
                });
            }
        }
        let mut order: Vec<usize> = (0..windows.len()).collect();
        order.sort_by_key(|&i| windows[i].offset);
        for pair in order.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if windows[a].offset + windows[a].duration > windows[b].offset {
                return Err(ConfigError::WindowOverlap { first: a, second: b });
            }
        }

        Ok(MajorFrame { length, windows })
    }

    /// Partition scheduled at absolute time `t`, or the null partition when
    /// `t` falls in an idle gap.
    pub fn partition_at(&self, t: Time) -> PartitionId {
        let w = t.rem_euclid(self.length);
        self.windows
            .iter()
            .find(|fw| fw.offset <= w && w < fw.offset + fw.duration)
            .map(|fw| fw.partition)
            .unwrap_or(NULL_PARTITION_ID)
    }

    /// Earliest periodic release point of `partition` at or after `at`.
    /// Returns `Time::MAX` when the partition has no periodic-start window.
    pub fn next_periodic_start(&self, partition: PartitionId, at: Time) -> Time {
        let mut best: Option<Time> = None;
        for w in &self.windows {
            if w.partition != partition || !w.periodic_start {
                continue;
            }
            let d = (at as i128) - (w.offset as i128);
            let n = if d <= 0 { 0 } else { (d + self.length as i128 - 1) / self.length as i128 };
            let candidate = w.offset as i128 + self.length as i128 * n;
            let candidate = if candidate > Time::MAX as i128 { Time::MAX } else { candidate as Time };
            best = Some(match best {
                Some(b) => b.min(candidate),
                None => candidate,
            });
        }
        best.unwrap_or(Time::MAX)
    }

    /// Earliest periodic release point at or after `at + delay`.
    pub fn delayed_periodic_start(&self, partition: PartitionId, at: Time, delay: Time) -> Time {
        self.next_periodic_start(partition, at.saturating_add(delay))
    }
}

#[cfg(test)]
mod tests {
    use super::super::config::{PartitionConfig, WindowConfig};
    use super::*;

    const MS: Time = 1_000_000;

    fn config(windows: Vec<(&str, bool)>) -> ModuleConfig {
        ModuleConfig {
            module_id: 1,
            module_name: "m".to_string(),
            constants: Constants::default(),
            physical_memory: MemoryBlock::new(0, 1 << 24),
            kernel_memory: MemoryBlock::new(0, 1 << 22),
            kernel_image: MemoryBlock::new(0, 1 << 20),
            partitions: vec![
                PartitionConfig {
                    name: "alpha".to_string(),
                    memory: MemoryBlock::new(1 << 22, 1 << 23),
                    period: 4 * MS,
                    duration: MS,
                    total_process: 8,
                },
                PartitionConfig {
                    name: "beta".to_string(),
                    memory: MemoryBlock::new((1 << 22) + (1 << 23), (1 << 24) - (1 << 22) - (1 << 23)),
                    period: 2 * MS,
                    duration: MS,
                    total_process: 8,
                },
            ],
            windows: windows
                .into_iter()
                .map(|(name, flag)| WindowConfig { partition: name.to_string(), periodic_start: flag })
                .collect(),
        }
    }

    #[test]
    fn offsets_follow_pack_then_period_rule() {
        let frame = MajorFrame::build(&config(vec![
            ("beta", true),
            ("alpha", true),
            ("beta", false),
        ]))
        .unwrap();
        assert_eq!(frame.length, 4 * MS);
        let offsets: Vec<Time> = frame.windows.iter().map(|w| w.offset).collect();
        assert_eq!(offsets, vec![0, MS, 2 * MS]);
        assert_eq!(frame.windows[2].partition, frame.windows[0].partition);
    }

    #[test]
    fn repeated_windows_sit_one_period_apart() {
        let frame = MajorFrame::build(&config(vec![
            ("alpha", true),
            ("beta", true),
            ("beta", false),
        ]))
        .unwrap();
        assert_eq!(
            frame.windows[2].offset,
            frame.windows[1].offset + frame.windows[1].period
        );
    }

    #[test]
    fn partition_lookup_covers_windows_gaps_and_wrap() {
        let frame = MajorFrame::build(&config(vec![
            ("beta", true),
            ("alpha", true),
            ("beta", false),
        ]))
        .unwrap();
        let beta = frame.windows[0].partition;
        let alpha = frame.windows[1].partition;
        assert_eq!(frame.partition_at(0), beta);
        assert_eq!(frame.partition_at(MS + MS / 2), alpha);
        assert_eq!(frame.partition_at(3 * MS), NULL_PARTITION_ID);
        assert_eq!(frame.partition_at(4 * MS), beta);
        assert_eq!(frame.partition_at(9 * MS / 2), beta);
        assert_eq!(frame.partition_at(-1), NULL_PARTITION_ID);
        assert_eq!(frame.partition_at(-4 * MS), beta);
    }

    #[test]
    fn next_periodic_start_enumerates_frame_repeats() {
        let frame = MajorFrame::build(&config(vec![
            ("beta", true),
            ("alpha", true),
            ("beta", true),
        ]))
        .unwrap();
        let beta = frame.windows[0].partition;
        let alpha = frame.windows[1].partition;
        assert_eq!(frame.next_periodic_start(alpha, 0), MS);
        assert_eq!(frame.next_periodic_start(alpha, MS), MS);
        assert_eq!(frame.next_periodic_start(alpha, MS + 1), 5 * MS);
        assert_eq!(frame.next_periodic_start(beta, 1), 2 * MS);
        assert_eq!(frame.next_periodic_start(beta, 2 * MS + 1), 4 * MS);
        assert_eq!(frame.next_periodic_start(beta, -3 * MS), 0);
    }

    #[test]
    fn no_periodic_start_window_means_never() {
        let frame = MajorFrame::build(&config(vec![
            ("beta", false),
            ("alpha", true),
            ("beta", false),
        ]))
        .unwrap();
        let beta = frame.windows[0].partition;
        assert_eq!(frame.next_periodic_start(beta, 0), Time::MAX);
    }

    #[test]
    fn delayed_start_shifts_the_query_point() {
        let frame = MajorFrame::build(&config(vec![
            ("beta", true),
            ("alpha", true),
            ("beta", false),
        ]))
        .unwrap();
        let alpha = frame.windows[1].partition;
        assert_eq!(frame.delayed_periodic_start(alpha, MS, 1), 5 * MS);
        assert_eq!(frame.delayed_periodic_start(alpha, 0, MS), MS);
    }

    #[test]
    fn rejects_overlap_between_repeat_and_packed_window() {
        // alpha's repeat lands at its period boundary, colliding with the
        // window packed after beta when durations are too long.
        let mut cfg = config(vec![("beta", true), ("beta", false), ("alpha", true)]);
        cfg.partitions[0].period = 2 * MS;
        cfg.partitions[0].duration = 2 * MS;
        cfg.partitions[1].period = 4 * MS;
        // beta at 0, repeat at offset 0 + 2ms? beta period is 4ms so repeat
        // lands at 4ms and overruns the frame end once alpha packs at 2ms.
        let err = MajorFrame::build(&cfg).unwrap_err();
        assert!(matches!(
            err,
            ConfigError::WindowOverlap { .. } | ConfigError::WindowPastFrameEnd { .. }
        ));
    }
}
