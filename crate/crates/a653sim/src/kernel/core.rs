//! Core kernel state: the partition table, the major frame, and the
//! module-level services (operating modes, preemption lock levels, and
//! release point queries).

use std::collections::BTreeMap;

use crate::hw::{Context, CpuRegisters, PageTableRef};
use crate::types::*;

use super::config::{ConfigError, ModuleConfig};
use super::frame::MajorFrame;

/// Per-partition control data owned by the core kernel.
#[derive(Clone, Debug)]
pub struct PartitionControlBlock {
    pub name: String,
    pub memory: MemoryBlock,
    pub period: Time,
    pub duration: Time,
    pub lock_level: LockLevel,
    pub operating_mode: OperatingMode,
    pub start_condition: StartCondition,
}

/// Snapshot returned by the partition status service.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartitionStatus {
    pub partition_id: PartitionId,
    pub period: Time,
    pub duration: Time,
    pub lock_level: LockLevel,
    pub operating_mode: OperatingMode,
    pub start_condition: StartCondition,
}

/// The core kernel. It owns the partition table and the schedule, tracks
/// which partition window is active, and keeps the saved context of its own
/// idle process (the one the CPU runs in schedule gaps).
pub struct CoreKernel {
    pub partition_table: BTreeMap<PartitionId, PartitionControlBlock>,
    pub frame: MajorFrame,
    /// Partition whose window is active; null while the core idles.
    pub current_partition: PartitionId,
    /// Core-level current process: the null id before boot, the idle id
    /// afterwards.
    pub current_process: ProcessId,
    /// Saved contexts of the core idle process, newest first.
    pub idle_contexts: Vec<Context>,
    pub idle_state: ProcessState,
    max_lock_level: LockLevel,
}

impl CoreKernel {
    /// Builds the boot-time core kernel state. Every partition starts idle
    /// with the lock level at its minimum; the core idle process holds one
    /// saved context that resumes the kernel idle loop.
    pub fn new(config: &ModuleConfig) -> Result<Self, ConfigError> {
        let frame = MajorFrame::build(config)?;
        let mut partition_table = BTreeMap::new();
        for (i, p) in config.partitions.iter().enumerate() {
            partition_table.insert(
                (i + 1) as PartitionId,
                PartitionControlBlock {
                    name: p.name.clone(),
                    memory: p.memory,
                    period: p.period,
                    duration: p.duration,
                    lock_level: MIN_LOCK_LEVEL,
                    operating_mode: OperatingMode::Idle,
                    start_condition: StartCondition::NormalStart,
                },
            );
        }
        Ok(CoreKernel {
            partition_table,
            frame,
            current_partition: NULL_PARTITION_ID,
            current_process: NULL_PROCESS_ID,
            idle_contexts: vec![Context {
                regs: CpuRegisters::zeroed(),
                page_table: PageTableRef::Kernel,
            }],
            idle_state: ProcessState::Ready,
            max_lock_level: config.constants.max_lock_level,
        })
    }

    /// Moves every partition into cold start with preemption fully locked,
    /// ready for its first window.
    pub fn start_partitions(&mut self) {
        for pcb in self.partition_table.values_mut() {
            pcb.operating_mode = OperatingMode::ColdStart;
            pcb.lock_level = self.max_lock_level;
        }
    }

    /// Boots the core idle process and returns the context the CPU should
    /// resume.
    pub fn start(&mut self) -> Context {
        self.current_process = IDLE_PROCESS_ID;
        let ctx = self.idle_contexts.remove(0);
        self.idle_state = ProcessState::Running;
        ctx
    }

    pub fn partition(&self, partid: PartitionId) -> &PartitionControlBlock {
        &self.partition_table[&partid]
    }

    pub fn operating_mode(&self, partid: PartitionId) -> OperatingMode {
        self.partition_table[&partid].operating_mode
    }

    pub fn partition_status(&self, partid: PartitionId) -> PartitionStatus {
        let pcb = &self.partition_table[&partid];
        PartitionStatus {
            partition_id: partid,
            period: pcb.period,
            duration: pcb.duration,
            lock_level: pcb.lock_level,
            operating_mode: pcb.operating_mode,
            start_condition: pcb.start_condition,
        }
    }

    /// Sets the operating mode, then forces the lock level the mode
    /// implies: minimum for idle and normal, maximum for the start modes.
    pub fn set_operating_mode(&mut self, partid: PartitionId, mode: OperatingMode) {
        let max = self.max_lock_level;
        let pcb = self.partition_table.get_mut(&partid).expect("known partition");
        pcb.operating_mode = mode;
        pcb.lock_level = match mode {
            OperatingMode::Idle | OperatingMode::Normal => MIN_LOCK_LEVEL,
            OperatingMode::ColdStart | OperatingMode::WarmStart => max,
        };
    }

    pub fn lock_level(&self, partid: PartitionId) -> LockLevel {
        self.partition_table[&partid].lock_level
    }

    pub fn reset_lock_level(&mut self, partid: PartitionId) {
        self.partition_table.get_mut(&partid).expect("known partition").lock_level =
            MIN_LOCK_LEVEL;
    }

    /// Raises the lock level by one. Saturates at the maximum; the `bool`
    /// reports whether saturation happened so the caller can log it.
    pub fn increase_lock_level(&mut self, partid: PartitionId) -> (LockLevel, bool) {
        let max = self.max_lock_level;
        let pcb = self.partition_table.get_mut(&partid).expect("known partition");
        if pcb.lock_level >= max {
            (pcb.lock_level, true)
        } else {
            pcb.lock_level += 1;
            (pcb.lock_level, false)
        }
    }

    /// Lowers the lock level by one, saturating at the minimum.
    pub fn decrease_lock_level(&mut self, partid: PartitionId) -> (LockLevel, bool) {
        let pcb = self.partition_table.get_mut(&partid).expect("known partition");
        if pcb.lock_level <= MIN_LOCK_LEVEL {
            (pcb.lock_level, true)
        } else {
            pcb.lock_level -= 1;
            (pcb.lock_level, false)
        }
    }

    pub fn max_lock_level(&self) -> LockLevel {
        self.max_lock_level
    }

    /// Partition owning the window at absolute time `t`.
    pub fn next_partition(&self, t: Time) -> PartitionId {
        self.frame.partition_at(t)
    }

    pub fn next_periodic_start(&self, partid: PartitionId, at: Time) -> Time {
        self.frame.next_periodic_start(partid, at)
    }

    pub fn delayed_periodic_start(&self, partid: PartitionId, at: Time, delay: Time) -> Time {
        self.frame.delayed_periodic_start(partid, at, delay)
    }

    /// Parks the core idle process when a partition window opens over a
    /// schedule gap.
    pub fn suspend_idle(&mut self, ctx: Context) {
        self.idle_contexts.insert(0, ctx);
        self.idle_state = ProcessState::Ready;
    }

    /// Resumes the core idle process for a schedule gap, returning the
    /// context to restore.
    pub fn resume_idle(&mut self) -> Context {
        let ctx = self.idle_contexts.remove(0);
        self.idle_state = ProcessState::Running;
        ctx
    }
}

#[cfg(test)]
mod tests {
    use super::super::config::{PartitionConfig, WindowConfig};
    use super::*;

    fn config() -> ModuleConfig {
        ModuleConfig {
            module_id: 7,
            module_name: "mod".to_string(),
            constants: Constants::default(),
            physical_memory: MemoryBlock::new(0, 1 << 24),
            kernel_memory: MemoryBlock::new(0, 1 << 22),
            kernel_image: MemoryBlock::new(0, 1 << 20),
            partitions: vec![PartitionConfig {
                name: "solo".to_string(),
                memory: MemoryBlock::new(1 << 22, (1 << 24) - (1 << 22)),
                period: 2_000_000,
                duration: 1_000_000,
                total_process: 4,
            }],
            windows: vec![WindowConfig { partition: "solo".to_string(), periodic_start: true }],
        }
    }

    #[test]
    fn boot_sequence_reaches_running_idle() {
        let mut core = CoreKernel::new(&config()).unwrap();
        assert_eq!(core.current_process, NULL_PROCESS_ID);
        assert_eq!(core.operating_mode(1), OperatingMode::Idle);

        core.start_partitions();
        assert_eq!(core.operating_mode(1), OperatingMode::ColdStart);
        assert_eq!(core.lock_level(1), core.max_lock_level());

        let ctx = core.start();
        assert_eq!(core.current_process, IDLE_PROCESS_ID);
        assert_eq!(core.idle_state, ProcessState::Running);
        assert!(core.idle_contexts.is_empty());
        assert_eq!(ctx.page_table, PageTableRef::Kernel);
    }

    #[test]
    fn mode_changes_force_the_matching_lock_level() {
        let mut core = CoreKernel::new(&config()).unwrap();
        core.start_partitions();
        core.set_operating_mode(1, OperatingMode::Normal);
        assert_eq!(core.lock_level(1), MIN_LOCK_LEVEL);
        core.set_operating_mode(1, OperatingMode::WarmStart);
        assert_eq!(core.lock_level(1), core.max_lock_level());
        core.set_operating_mode(1, OperatingMode::Idle);
        assert_eq!(core.lock_level(1), MIN_LOCK_LEVEL);
    }

    #[test]
    fn lock_level_saturates_at_both_ends() {
        let mut core = CoreKernel::new(&config()).unwrap();
        let (ll, clamped) = core.decrease_lock_level(1);
        assert_eq!((ll, clamped), (MIN_LOCK_LEVEL, true));
        for i in 1..=core.max_lock_level() {
            let (ll, clamped) = core.increase_lock_level(1);
            assert_eq!((ll, clamped), (i, false));
        }
        let (ll, clamped) = core.increase_lock_level(1);
        assert_eq!((ll, clamped), (core.max_lock_level(), true));
        let (ll, clamped) = core.decrease_lock_level(1);
        assert_eq!((ll, clamped), (core.max_lock_level() - 1, false));
    }

    #[test]
    fn partition_status_reflects_the_table() {
        let mut core = CoreKernel::new(&config()).unwrap();
        core.start_partitions();
        let status = core.partition_status(1);
        assert_eq!(status.partition_id, 1);
        assert_eq!(status.period, 2_000_000);
        assert_eq!(status.duration, 1_000_000);
        assert_eq!(status.operating_mode, OperatingMode::ColdStart);
        assert_eq!(status.start_condition, StartCondition::NormalStart);
    }
}
