//! Shared scalar types, limits, and the tunable constants block.

/// Machine word. Unsigned quantities (addresses, sizes, raw timer values)
/// live in this type.
pub type Word = u64;

/// Byte address, physical or virtual.
pub type Address = u64;

/// A page, identified by its page-aligned start address.
pub type PageId = u64;

/// Signed time in nanoseconds. The system time starts negative at boot and
/// reaches zero after two clock ticks.
pub type Time = i64;

/// Partition identifier. Zero is the null partition; real partitions are
/// numbered from one in configuration order.
pub type PartitionId = u32;

/// Process identifier within a partition. Zero is the idle process; the
/// error handler, when created, is the partition's `total_process` id.
pub type ProcessId = u32;

/// Process priority. The sign carries scheduling state: positive means the
/// process holds its turn, negative means it yielded or was demoted and the
/// magnitude is restored when it is next dispatched.
pub type Priority = i64;

/// Partition preemption lock level.
pub type LockLevel = i64;

/// Interrupt line number. Lower numbers have higher priority.
pub type IrqLine = u8;

pub const NULL_PARTITION_ID: PartitionId = 0;
pub const IDLE_PROCESS_ID: ProcessId = 0;
pub const NULL_PROCESS_ID: ProcessId = u32::MAX;

/// Placeholder for times that have not been assigned yet.
pub const DEFAULT_TIME: Time = -1;

/// Largest raw timer value; used as the "alarm disabled" sentinel.
pub const TIME_LIMIT: Word = u64::MAX;

/// Default priority of a process that has been created but never started.
pub const DEFAULT_PRIORITY: Priority = 0;

pub const MIN_LOCK_LEVEL: LockLevel = 0;

/// Number of general-purpose registers.
pub const GP_REGISTER_COUNT: usize = 16;

/// Number of interrupt lines on the controller.
pub const IRQ_LINE_COUNT: usize = 8;

/// Number of CPU exception lines (modeled for completeness; no exception
/// is ever raised by the simulator itself).
pub const EXCEPTION_LINE_COUNT: usize = 2;

/// The clock tick interrupt line.
pub const CLOCK_TICK_LINE: IrqLine = 0;

/// A contiguous memory region. Starts are page-aligned and sizes are page
/// multiples everywhere blocks are built.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MemoryBlock {
    pub start: Address,
    pub size: u64,
}

/// The empty block.
pub const NULL_BLOCK: MemoryBlock = MemoryBlock { start: 0, size: 0 };

impl MemoryBlock {
    pub fn new(start: Address, size: u64) -> Self {
        MemoryBlock { start, size }
    }

    /// One past the last address of the block.
    pub fn end(&self) -> Address {
        self.start + self.size
    }

    pub fn is_null(&self) -> bool {
        self.size == 0
    }

    pub fn contains_addr(&self, addr: Address) -> bool {
        addr >= self.start && addr < self.end()
    }

    /// Whether `other` lies entirely within this block.
    pub fn contains_block(&self, other: &MemoryBlock) -> bool {
        other.start >= self.start && other.end() <= self.end()
    }

    /// Whether the two blocks share any address. Empty blocks overlap
    /// nothing.
    pub fn overlaps(&self, other: &MemoryBlock) -> bool {
        !self.is_null() && !other.is_null() && self.start < other.end() && other.start < self.end()
    }
}

/// Process scheduling states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProcessState {
    Dormant,
    Ready,
    Running,
    Waiting,
}

impl ProcessState {
    pub fn name(self) -> &'static str {
        match self {
            ProcessState::Dormant => "DORMANT",
            ProcessState::Ready => "READY",
            ProcessState::Running => "RUNNING",
            ProcessState::Waiting => "WAITING",
        }
    }
}

/// Process kinds. The error handler is a special aperiodic process with a
/// reserved id.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProcessKind {
    Aperiodic,
    Periodic,
    ErrorHandler,
}

impl ProcessKind {
    pub fn name(self) -> &'static str {
        match self {
            ProcessKind::Aperiodic => "APERIODIC",
            ProcessKind::Periodic => "PERIODIC",
            ProcessKind::ErrorHandler => "ERROR_HANDLER",
        }
    }
}

/// Deadline interpretation attribute. Carried on the process control block;
/// it does not influence scheduling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeadlineKind {
    Soft,
    Hard,
}

impl DeadlineKind {
    pub fn name(self) -> &'static str {
        match self {
            DeadlineKind::Soft => "SOFT",
            DeadlineKind::Hard => "HARD",
        }
    }
}

/// Partition operating modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatingMode {
    Idle,
    ColdStart,
    WarmStart,
    Normal,
}

impl OperatingMode {
    pub fn name(self) -> &'static str {
        match self {
            OperatingMode::Idle => "IDLE",
            OperatingMode::ColdStart => "COLD_START",
            OperatingMode::WarmStart => "WARM_START",
            OperatingMode::Normal => "NORMAL",
        }
    }
}

/// A program image as the loader sees it: how many bytes of initialized
/// data and of code it carries. Images are supplied by scenarios; there is
/// no file system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExecutableImage {
    pub data_size: u64,
    pub code_size: u64,
}

/// Why a partition was (re)started. Reported through the partition status
/// service. Nothing in the kernel reassigns it after boot, so it always
/// reads `NormalStart`; the remaining values exist for status fidelity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StartCondition {
    NormalStart,
    PartitionRestart,
    HmModuleRestart,
    HmPartitionRestart,
}

impl StartCondition {
    pub fn name(self) -> &'static str {
        match self {
            StartCondition::NormalStart => "NORMAL_START",
            StartCondition::PartitionRestart => "PARTITION_RESTART",
            StartCondition::HmModuleRestart => "HM_MODULE_RESTART",
            StartCondition::HmPartitionRestart => "HM_PARTITION_RESTART",
        }
    }
}

/// Return codes of the application-facing services.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReturnCode {
    NoError,
    NoAction,
    NotAvailable,
    InvalidParam,
    InvalidConfig,
    InvalidMode,
    TimedOut,
}

impl ReturnCode {
    pub fn name(self) -> &'static str {
        match self {
            ReturnCode::NoError => "NO_ERROR",
            ReturnCode::NoAction => "NO_ACTION",
            ReturnCode::NotAvailable => "NOT_AVAILABLE",
            ReturnCode::InvalidParam => "INVALID_PARAM",
            ReturnCode::InvalidConfig => "INVALID_CONFIG",
            ReturnCode::InvalidMode => "INVALID_MODE",
            ReturnCode::TimedOut => "TIMED_OUT",
        }
    }
}

/// Tunable constants of the machine. Defaults follow the reference
/// configuration; scenario configs may override them.
#[derive(Clone, Debug)]
pub struct Constants {
    /// Page size in bytes.
    pub page_size: u64,
    /// Interval between periodic clock ticks, in nanoseconds.
    pub clock_tick_interval: Time,
    /// Size of the shared interrupt stack, in pages.
    pub interrupt_stack_pages: u64,
    /// Size of each process kernel stack, in pages.
    pub kernel_stack_pages: u64,
    /// Maximum number of partitions a module may configure.
    pub partition_number_limit: u32,
    /// Upper bound on per-partition process ids (error handler included).
    pub process_number_limit: u32,
    /// Smallest permitted base priority. Always positive; priority zero is
    /// reserved for the idle process and freshly created processes.
    pub min_priority: Priority,
    /// Largest permitted base priority.
    pub max_priority: Priority,
    /// Largest permitted preemption lock level.
    pub max_lock_level: LockLevel,
    /// Largest permitted process stack size in bytes.
    pub max_stack_size: u64,
    /// Base of the kernel virtual address space. All physical memory is
    /// mapped here one-to-one for the kernel.
    pub kernel_virtual_base: Address,
    /// Size of the kernel virtual address space in bytes.
    pub kernel_virtual_size: u64,
    /// Base of each process virtual address space.
    pub process_virtual_base: Address,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            page_size: 4096,
            clock_tick_interval: 1_000_000,
            interrupt_stack_pages: 4,
            kernel_stack_pages: 2,
            partition_number_limit: 32,
            process_number_limit: 128,
            min_priority: 1,
            max_priority: 63,
            max_lock_level: 16,
            max_stack_size: 1 << 20,
            kernel_virtual_base: 1 << 40,
            kernel_virtual_size: 1 << 32,
            process_virtual_base: 0x1_0000,
        }
    }
}

impl Constants {
    /// Kernel stack size in bytes.
    pub fn kernel_stack_size(&self) -> u64 {
        self.kernel_stack_pages * self.page_size
    }

    /// Interrupt stack size in bytes.
    pub fn interrupt_stack_size(&self) -> u64 {
        self.interrupt_stack_pages * self.page_size
    }

    /// The clock tick interval as an unsigned raw timer value.
    pub fn tick_interval_raw(&self) -> Word {
        self.clock_tick_interval as Word
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_ids_are_outside_valid_ranges() {
        let c = Constants::default();
        assert!(NULL_PROCESS_ID > c.process_number_limit);
        assert_eq!(NULL_PARTITION_ID, 0);
        assert_eq!(IDLE_PROCESS_ID, 0);
    }

    #[test]
    fn default_constants_are_consistent() {
        let c = Constants::default();
        assert_eq!(c.kernel_stack_size(), 2 * 4096);
        assert_eq!(c.interrupt_stack_size(), 4 * 4096);
        assert!(c.min_priority > 0);
        assert!(c.max_priority >= c.min_priority);
        assert_eq!(c.clock_tick_interval, 1_000_000);
    }
}
