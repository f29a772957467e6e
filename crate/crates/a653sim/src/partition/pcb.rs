//! Process control blocks and the derived status records.

use crate::his::ProcessVirtualMemory;
use crate::hw::{Context, CpuRegisters, PageTableRef};
use crate::types::{
    Address, DeadlineKind, MemoryBlock, PartitionId, Priority, ProcessId, ProcessKind,
    ProcessState, Time, DEFAULT_PRIORITY, DEFAULT_TIME, NULL_BLOCK,
};

/// Everything the kernel tracks per process.
#[derive(Clone, Debug)]
pub struct ProcessControlBlock {
    pub name: String,
    pub kind: ProcessKind,
    pub exe_path: String,
    pub swap_path: String,
    pub entry_point: Address,
    /// Kernel-virtual block used as the process's kernel stack.
    pub kernel_stack: MemoryBlock,
    pub virtual_memory: ProcessVirtualMemory,
    pub period: Time,
    pub time_capacity: Time,
    pub deadline: DeadlineKind,
    pub base_priority: Priority,
    pub current_priority: Priority,
    pub release_point: Time,
    pub deadline_time: Time,
    pub state: ProcessState,
    /// Saved user-side contexts, most recent first.
    pub user_contexts: Vec<Context>,
    /// Saved kernel-side contexts, most recent first. The head is what a
    /// dispatch restores.
    pub kernel_contexts: Vec<Context>,
}

impl ProcessControlBlock {
    /// A freshly created process: dormant, default priority, no timing
    /// state, empty context stacks.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: String,
        kind: ProcessKind,
        exe_path: String,
        swap_path: String,
        entry_point: Address,
        kernel_stack: MemoryBlock,
        virtual_memory: ProcessVirtualMemory,
        period: Time,
        time_capacity: Time,
        deadline: DeadlineKind,
        base_priority: Priority,
    ) -> Self {
        ProcessControlBlock {
            name,
            kind,
            exe_path,
            swap_path,
            entry_point,
            kernel_stack,
            virtual_memory,
            period,
            time_capacity,
            deadline,
            base_priority,
            current_priority: DEFAULT_PRIORITY,
            release_point: DEFAULT_TIME,
            deadline_time: DEFAULT_TIME,
            state: ProcessState::Dormant,
            user_contexts: Vec::new(),
            kernel_contexts: Vec::new(),
        }
    }

    /// The built-in idle process: no memory of its own, aperiodic, priority
    /// zero, ready from the start, one initial context running under the
    /// kernel page table.
    pub fn idle() -> Self {
        let mut pcb = ProcessControlBlock::new(
            "IdleProcess".to_string(),
            ProcessKind::Aperiodic,
            String::new(),
            String::new(),
            0,
            NULL_BLOCK,
            ProcessVirtualMemory::empty(),
            -1,
            -1,
            DeadlineKind::Soft,
            0,
        );
        pcb.state = ProcessState::Ready;
        pcb.kernel_contexts
            .push(Context::new(CpuRegisters::zeroed(), PageTableRef::Kernel));
        pcb
    }

    /// The initial register state for a process (re)start: segments cover
    /// the stack, data, and code regions, the instruction pointer sits at
    /// the entry point, and interrupts are enabled. Stack and index
    /// pointers start at zero.
    pub fn initial_registers(&self) -> CpuRegisters {
        let mut regs = CpuRegisters::zeroed();
        regs.ss = self.virtual_memory.stack.start;
        regs.sl = self.virtual_memory.stack.size;
        regs.ds = self.virtual_memory.data.start;
        regs.dl = self.virtual_memory.data.size;
        regs.cs = self.virtual_memory.code.start;
        regs.cl = self.virtual_memory.code.size;
        regs.ip = self.entry_point;
        regs.flags.interrupt_enable = true;
        regs
    }

    /// The fresh start context: initial registers under the process's own
    /// page table.
    pub fn start_context(&self, partition: PartitionId, process: ProcessId) -> Context {
        Context::new(
            self.initial_registers(),
            PageTableRef::Process(partition, process),
        )
    }

    pub fn attribute(&self) -> ProcessAttribute {
        ProcessAttribute {
            name: self.name.clone(),
            kind: self.kind,
            entry_point: self.entry_point,
            stack_size: self.virtual_memory.stack.size,
            base_priority: self.base_priority,
            period: self.period,
            time_capacity: self.time_capacity,
            deadline: self.deadline,
        }
    }

    pub fn status(&self) -> ProcessStatus {
        ProcessStatus {
            attribute: self.attribute(),
            current_priority: self.current_priority,
            deadline_time: self.deadline_time,
            state: self.state,
        }
    }
}

/// The fixed attributes a process is created with.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessAttribute {
    pub name: String,
    pub kind: ProcessKind,
    pub entry_point: Address,
    pub stack_size: u64,
    pub base_priority: Priority,
    pub period: Time,
    pub time_capacity: Time,
    pub deadline: DeadlineKind,
}

/// A point-in-time view of a process: its attributes plus the variable
/// priority, deadline, and state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessStatus {
    pub attribute: ProcessAttribute,
    pub current_priority: Priority,
    pub deadline_time: Time,
    pub state: ProcessState,
}

impl ProcessStatus {
    /// The status returned for a process that does not exist.
    pub fn null() -> Self {
        ProcessStatus {
            attribute: ProcessAttribute {
                name: String::new(),
                kind: ProcessKind::Aperiodic,
                entry_point: 0,
                stack_size: 0,
                base_priority: 0,
                period: DEFAULT_TIME,
                time_capacity: DEFAULT_TIME,
                deadline: DeadlineKind::Soft,
            },
            current_priority: 0,
            deadline_time: DEFAULT_TIME,
            state: ProcessState::Dormant,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn idle_is_ready_with_one_kernel_context() {
        let idle = ProcessControlBlock::idle();
        assert_eq!(idle.state, ProcessState::Ready);
        assert_eq!(idle.kernel_contexts.len(), 1);
        assert_eq!(idle.kernel_contexts[0].page_table, PageTableRef::Kernel);
        assert!(!idle.kernel_contexts[0].regs.flags.interrupt_enable);
        assert_eq!(idle.period, -1);
        assert_eq!(idle.time_capacity, -1);
        assert_eq!(idle.base_priority, 0);
    }

    #[test]
    fn initial_registers_cover_the_three_regions() {
        let base: BTreeSet<u64> = [0x40000, 0x41000, 0x42000, 0x43000].into_iter().collect();
        let vm = ProcessVirtualMemory::new(0x10000, base, 2 * 4096, 4096, 4096, 4096);
        let mut pcb = ProcessControlBlock::new(
            "worker".into(),
            ProcessKind::Periodic,
            "worker.bin".into(),
            "worker.swp".into(),
            0x13000 + 16,
            MemoryBlock::new(0x9000, 0x2000),
            vm,
            1_000_000,
            500_000,
            DeadlineKind::Hard,
            10,
        );
        pcb.current_priority = 10;
        let regs = pcb.initial_registers();
        assert_eq!(regs.ss, 0x10000);
        assert_eq!(regs.sl, 0x2000);
        assert_eq!(regs.sp, 0);
        assert_eq!(regs.bp, 0);
        assert_eq!(regs.ds, 0x12000);
        assert_eq!(regs.dl, 0x1000);
        assert_eq!(regs.cs, 0x13000);
        assert_eq!(regs.cl, 0x1000);
        assert_eq!(regs.ip, 0x13010);
        assert!(regs.flags.interrupt_enable);
        assert!(!regs.flags.zero);
        assert_eq!(regs.gpr, [0; 16]);
    }

    #[test]
    fn new_processes_are_dormant_with_default_timing() {
        let pcb = ProcessControlBlock::new(
            "p".into(),
            ProcessKind::Aperiodic,
            "p.bin".into(),
            String::new(),
            0,
            NULL_BLOCK,
            ProcessVirtualMemory::empty(),
            -1,
            250_000,
            DeadlineKind::Soft,
            5,
        );
        assert_eq!(pcb.state, ProcessState::Dormant);
        assert_eq!(pcb.current_priority, DEFAULT_PRIORITY);
        assert_eq!(pcb.release_point, DEFAULT_TIME);
        assert_eq!(pcb.deadline_time, DEFAULT_TIME);
        assert!(pcb.kernel_contexts.is_empty());
        assert!(pcb.user_contexts.is_empty());
    }
}
