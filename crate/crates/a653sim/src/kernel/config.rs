//! Validated module configuration: the physical memory layout, the
//! partition set, and the schedule window list.

use thiserror::Error;

use crate::types::*;

/// Static description of one partition.
#[derive(Clone, Debug)]
pub struct PartitionConfig {
    pub name: String,
    /// Physical memory assigned to the partition.
    pub memory: MemoryBlock,
    /// Scheduling period in nanoseconds.
    pub period: Time,
    /// Window duration in nanoseconds. Every window of the partition runs
    /// for this long.
    pub duration: Time,
    /// Highest process id the partition may use. Ordinary processes take
    /// ids `1..total_process`, the error handler takes `total_process`
    /// itself, and id zero is the partition idle process.
    pub total_process: u32,
}

/// One schedule window. Windows appear in frame order; offsets are derived,
/// not configured. `periodic_start` marks the window as a release point for
/// periodic processes.
#[derive(Clone, Debug)]
pub struct WindowConfig {
    /// Name of the partition that owns the window.
    pub partition: String,
    pub periodic_start: bool,
}

/// Whole-module configuration. Build one, then call
/// [`ModuleConfig::validate`] before handing it to the machine.
#[derive(Clone, Debug)]
pub struct ModuleConfig {
    pub module_id: u64,
    pub module_name: String,
    pub constants: Constants,
    /// All installed physical memory. Must start at address zero.
    pub physical_memory: MemoryBlock,
    /// Physical memory reserved for the kernel. Must start at address zero.
    pub kernel_memory: MemoryBlock,
    /// Portion of kernel memory occupied by the kernel image at boot.
    pub kernel_image: MemoryBlock,
    pub partitions: Vec<PartitionConfig>,
    pub windows: Vec<WindowConfig>,
}

/// A reason the configuration cannot describe a bootable module.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("constant {0} must be positive")]
    NonPositiveConstant(&'static str),
    #[error("priority range is empty: min {min} exceeds max {max}")]
    EmptyPriorityRange { min: Priority, max: Priority },
    #[error("{what} is not page aligned (start {start:#x}, size {size:#x})")]
    Misaligned { what: String, start: Address, size: u64 },
    #[error("physical memory must start at address zero")]
    PhysicalStartNonZero,
    #[error("physical memory is empty")]
    PhysicalEmpty,
    #[error("physical memory ({size} bytes) exceeds the kernel virtual space ({space} bytes)")]
    PhysicalExceedsKernelSpace { size: u64, space: u64 },
    #[error("kernel memory must start at address zero")]
    KernelStartNonZero,
    #[error("kernel memory must be smaller than physical memory")]
    KernelTooLarge,
    #[error("kernel image does not fit inside kernel memory")]
    ImageOutsideKernel,
    #[error("kernel image is empty")]
    ImageEmpty,
    #[error("kernel memory cannot fit the interrupt stack beside the kernel image")]
    InterruptStackUnfit,
    #[error("module has {count} partitions but the limit is {limit}")]
    TooManyPartitions { count: usize, limit: u32 },
    #[error("module has no partitions")]
    NoPartitions,
    #[error("duplicate partition name {0:?}")]
    DuplicatePartitionName(String),
    #[error("partition {0:?} has no memory")]
    PartitionEmpty(String),
    #[error("partition {partition:?} allows {requested} process ids but the limit is {limit}")]
    TooManyProcesses { partition: String, requested: u32, limit: u32 },
    #[error("partition {partition:?} has an invalid schedule: {reason}")]
    BadPeriodicity { partition: String, reason: String },
    #[error("partition periods {a} and {b} are not harmonic")]
    NotHarmonic { a: Time, b: Time },
    #[error("kernel and partition memory do not tile physical memory: {reason}")]
    MemoryNotTiled { reason: String },
    #[error("module has no schedule windows")]
    NoWindows,
    #[error("window {index} references unknown partition {name:?}")]
    UnknownWindowPartition { index: usize, name: String },
    #[error("partition {0:?} never appears in the schedule")]
    PartitionNotScheduled(String),
    #[error("window {index} (offset {offset}, duration {duration}) runs past the frame length {length}")]
    WindowPastFrameEnd { index: usize, offset: Time, duration: Time, length: Time },
    #[error("windows {first} and {second} overlap in the frame")]
    WindowOverlap { first: usize, second: usize },
}

impl ModuleConfig {
    /// Checks every static property the machine relies on. Returns the
    /// first violation found.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.check_constants()?;
        self.check_memory_layout()?;
        self.check_partitions()?;
        super::frame::MajorFrame::build(self)?;
        Ok(())
    }

    fn check_constants(&self) -> Result<(), ConfigError> {
        let c = &self.constants;
        for (value, name) in [
            (c.page_size, "page_size"),
            (c.interrupt_stack_pages, "interrupt_stack_pages"),
            (c.kernel_stack_pages, "kernel_stack_pages"),
            (c.partition_number_limit as u64, "partition_number_limit"),
            (c.process_number_limit as u64, "process_number_limit"),
            (c.max_stack_size, "max_stack_size"),
            (c.kernel_virtual_base, "kernel_virtual_base"),
            (c.kernel_virtual_size, "kernel_virtual_size"),
            (c.process_virtual_base, "process_virtual_base"),
        ] {
            if value == 0 {
                return Err(ConfigError::NonPositiveConstant(name));
            }
        }
        if c.clock_tick_interval <= 0 {
            return Err(ConfigError::NonPositiveConstant("clock_tick_interval"));
        }
        if c.min_priority <= 0 {
            return Err(ConfigError::NonPositiveConstant("min_priority"));
        }
        if c.max_lock_level <= MIN_LOCK_LEVEL {
            return Err(ConfigError::NonPositiveConstant("max_lock_level"));
        }
        if c.min_priority > c.max_priority {
            return Err(ConfigError::EmptyPriorityRange { min: c.min_priority, max: c.max_priority });
        }
        Ok(())
    }

    fn check_aligned(&self, what: &str, block: &MemoryBlock) -> Result<(), ConfigError> {
        let ps = self.constants.page_size;
        if block.start % ps != 0 || block.size % ps != 0 {
            return Err(ConfigError::Misaligned {
                what: what.to_string(),
                start: block.start,
                size: block.size,
            });
        }
        Ok(())
    }

    fn check_memory_layout(&self) -> Result<(), ConfigError> {
        if self.physical_memory.start != 0 {
            return Err(ConfigError::PhysicalStartNonZero);
        }
        if self.physical_memory.is_null() {
            return Err(ConfigError::PhysicalEmpty);
        }
        self.check_aligned("physical memory", &self.physical_memory)?;
        if self.physical_memory.size > self.constants.kernel_virtual_size {
            return Err(ConfigError::PhysicalExceedsKernelSpace {
                size: self.physical_memory.size,
                space: self.constants.kernel_virtual_size,
            });
        }
        if self.kernel_memory.start != 0 {
            return Err(ConfigError::KernelStartNonZero);
        }
        self.check_aligned("kernel memory", &self.kernel_memory)?;
        if self.kernel_memory.size >= self.physical_memory.size {
            return Err(ConfigError::KernelTooLarge);
        }
        if self.kernel_image.is_null() {
            return Err(ConfigError::ImageEmpty);
        }
        self.check_aligned("kernel image", &self.kernel_image)?;
        if !self.kernel_memory.contains_block(&self.kernel_image) {
            return Err(ConfigError::ImageOutsideKernel);
        }

        // Kernel memory plus the partition memories must tile physical
        // memory exactly: no gaps, no overlaps, nothing outside.
        let mut blocks: Vec<(MemoryBlock, String)> =
            vec![(self.kernel_memory, "kernel memory".to_string())];
        for p in &self.partitions {
            self.check_aligned(&format!("partition {:?} memory", p.name), &p.memory)?;
            blocks.push((p.memory, format!("partition {:?}", p.name)));
        }
        blocks.sort_by_key(|(b, _)| b.start);
        let mut cursor = 0u64;
        for (block, who) in &blocks {
            if block.start < cursor {
                return Err(ConfigError::MemoryNotTiled {
                    reason: format!("{who} overlaps the region before it"),
                });
            }
            if block.start > cursor {
                return Err(ConfigError::MemoryNotTiled {
                    reason: format!("gap before {who} at address {:#x}", cursor),
                });
            }
            cursor = block.end();
        }
        if cursor != self.physical_memory.end() {
            return Err(ConfigError::MemoryNotTiled {
                reason: format!(
                    "assigned memory ends at {:#x} but physical memory ends at {:#x}",
                    cursor,
                    self.physical_memory.end()
                ),
            });
        }
        Ok(())
    }

    fn check_partitions(&self) -> Result<(), ConfigError> {
        if self.partitions.is_empty() {
            return Err(ConfigError::NoPartitions);
        }
        if self.partitions.len() > self.constants.partition_number_limit as usize {
            return Err(ConfigError::TooManyPartitions {
                count: self.partitions.len(),
                limit: self.constants.partition_number_limit,
            });
        }
        let tick = self.constants.clock_tick_interval;
        for (i, p) in self.partitions.iter().enumerate() {
            if self.partitions[..i].iter().any(|q| q.name == p.name) {
                return Err(ConfigError::DuplicatePartitionName(p.name.clone()));
            }
            if p.memory.is_null() {
                return Err(ConfigError::PartitionEmpty(p.name.clone()));
            }
            if p.total_process + 1 > self.constants.process_number_limit {
                return Err(ConfigError::TooManyProcesses {
                    partition: p.name.clone(),
                    requested: p.total_process + 1,
                    limit: self.constants.process_number_limit,
                });
            }
            let bad = |reason: String| ConfigError::BadPeriodicity {
                partition: p.name.clone(),
                reason,
            };
            if p.duration <= 0 {
                return Err(bad(format!("duration {} is not positive", p.duration)));
            }
            if p.period < p.duration {
                return Err(bad(format!("period {} is shorter than duration {}", p.period, p.duration)));
            }
            if p.period % tick != 0 {
                return Err(bad(format!("period {} is not a multiple of the tick interval {tick}", p.period)));
            }
            if p.duration % tick != 0 {
                return Err(bad(format!("duration {} is not a multiple of the tick interval {tick}", p.duration)));
            }
        }
        for (i, p) in self.partitions.iter().enumerate() {
            for q in &self.partitions[..i] {
                if p.period % q.period != 0 && q.period % p.period != 0 {
                    return Err(ConfigError::NotHarmonic { a: q.period, b: p.period });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_partition_config() -> ModuleConfig {
        let mb = |start: u64, size: u64| MemoryBlock::new(start, size);
        ModuleConfig {
            module_id: 1,
            module_name: "m".to_string(),
            constants: Constants::default(),
            physical_memory: mb(0, 1 << 24),
            kernel_memory: mb(0, 1 << 22),
            kernel_image: mb(0, 1 << 20),
            partitions: vec![
                PartitionConfig {
                    name: "alpha".to_string(),
                    memory: mb(1 << 22, 1 << 23),
                    period: 4_000_000,
                    duration: 1_000_000,
                    total_process: 8,
                },
                PartitionConfig {
                    name: "beta".to_string(),
                    memory: mb((1 << 22) + (1 << 23), (1 << 24) - (1 << 22) - (1 << 23)),
                    period: 2_000_000,
                    duration: 1_000_000,
                    total_process: 8,
                },
            ],
            windows: vec![
                WindowConfig { partition: "beta".to_string(), periodic_start: true },
                WindowConfig { partition: "alpha".to_string(), periodic_start: true },
                WindowConfig { partition: "beta".to_string(), periodic_start: false },
            ],
        }
    }

    #[test]
    fn reference_config_is_valid() {
        two_partition_config().validate().unwrap();
    }

    #[test]
    fn rejects_memory_gap() {
        let mut cfg = two_partition_config();
        cfg.partitions[0].memory.start += cfg.constants.page_size;
        cfg.partitions[0].memory.size -= cfg.constants.page_size;
        assert!(matches!(cfg.validate(), Err(ConfigError::MemoryNotTiled { .. })));
    }

    #[test]
    fn rejects_overlapping_partitions() {
        let mut cfg = two_partition_config();
        cfg.partitions[1].memory.start -= cfg.constants.page_size;
        assert!(matches!(cfg.validate(), Err(ConfigError::MemoryNotTiled { .. })));
    }

    #[test]
    fn rejects_unaligned_partition_memory() {
        let mut cfg = two_partition_config();
        cfg.partitions[0].memory.size -= 1;
        assert!(matches!(cfg.validate(), Err(ConfigError::Misaligned { .. })));
    }

    #[test]
    fn rejects_non_harmonic_periods() {
        let mut cfg = two_partition_config();
        cfg.partitions[1].period = 3_000_000;
        assert!(matches!(cfg.validate(), Err(ConfigError::NotHarmonic { .. })));
    }

    #[test]
    fn rejects_duration_longer_than_period() {
        let mut cfg = two_partition_config();
        cfg.partitions[0].duration = cfg.partitions[0].period + 1_000_000;
        assert!(matches!(cfg.validate(), Err(ConfigError::BadPeriodicity { .. })));
    }

    #[test]
    fn rejects_off_tick_duration() {
        let mut cfg = two_partition_config();
        cfg.partitions[0].duration = 999_999;
        assert!(matches!(cfg.validate(), Err(ConfigError::BadPeriodicity { .. })));
    }

    #[test]
    fn rejects_duplicate_names() {
        let mut cfg = two_partition_config();
        cfg.partitions[1].name = cfg.partitions[0].name.clone();
        assert!(matches!(cfg.validate(), Err(ConfigError::DuplicatePartitionName(_))));
    }

    #[test]
    fn rejects_kernel_as_large_as_physical() {
        let mut cfg = two_partition_config();
        cfg.kernel_memory.size = cfg.physical_memory.size;
        assert!(matches!(cfg.validate(), Err(ConfigError::KernelTooLarge)));
    }

    #[test]
    fn rejects_unscheduled_partition() {
        let mut cfg = two_partition_config();
        cfg.windows.retain(|w| w.partition != "alpha");
        assert!(matches!(cfg.validate(), Err(ConfigError::PartitionNotScheduled(_))));
    }

    #[test]
    fn rejects_unknown_window_partition() {
        let mut cfg = two_partition_config();
        cfg.windows[0].partition = "gamma".to_string();
        assert!(matches!(cfg.validate(), Err(ConfigError::UnknownWindowPartition { .. })));
    }
}
