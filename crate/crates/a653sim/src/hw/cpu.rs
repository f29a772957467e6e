//! CPU register file and saved execution contexts.

use crate::types::{Address, PartitionId, ProcessId, Word, GP_REGISTER_COUNT};

/// Program status word. Only the interrupt-enable flag has behavioral
/// effect in the simulator; the arithmetic flags are carried so that saved
/// and restored contexts round-trip exactly.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StatusFlags {
    pub carry: bool,
    pub parity: bool,
    pub adjust: bool,
    pub zero: bool,
    pub sign: bool,
    pub overflow: bool,
    pub trap: bool,
    pub direction: bool,
    pub interrupt_enable: bool,
}

/// The full register file: sixteen general-purpose registers plus the
/// stack, data, and code segment groups and the status word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CpuRegisters {
    pub gpr: [Word; GP_REGISTER_COUNT],
    /// Stack segment: base, limit, base pointer, stack pointer.
    pub ss: Address,
    pub sl: Word,
    pub bp: Word,
    pub sp: Word,
    /// Data segment: base, limit, source and destination index.
    pub ds: Address,
    pub dl: Word,
    pub si: Word,
    pub di: Word,
    /// Code segment: base, limit, instruction pointer.
    pub cs: Address,
    pub cl: Word,
    pub ip: Word,
    pub flags: StatusFlags,
}

impl Default for CpuRegisters {
    fn default() -> Self {
        CpuRegisters {
            gpr: [0; GP_REGISTER_COUNT],
            ss: 0,
            sl: 0,
            bp: 0,
            sp: 0,
            ds: 0,
            dl: 0,
            si: 0,
            di: 0,
            cs: 0,
            cl: 0,
            ip: 0,
            flags: StatusFlags::default(),
        }
    }
}

impl CpuRegisters {
    /// All registers and flags zeroed, interrupts disabled.
    pub fn zeroed() -> Self {
        Self::default()
    }

    /// A full copy of the register file.
    pub fn save_all(&self) -> CpuRegisters {
        *self
    }

    /// A partial save: segment registers and flags are copied, the
    /// general-purpose registers are zeroed in the saved image.
    pub fn save_part(&self) -> CpuRegisters {
        let mut saved = *self;
        saved.gpr = [0; GP_REGISTER_COUNT];
        saved
    }
}

/// Which page table a context runs under. Tables are owned by the kernel
/// and by process control blocks; contexts refer to them rather than
/// copying, since tables never change after the owning entity is built.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PageTableRef {
    Kernel,
    Process(PartitionId, ProcessId),
}

/// A saved execution context: a register image and the page table it runs
/// under.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Context {
    pub regs: CpuRegisters,
    pub page_table: PageTableRef,
}

impl Context {
    pub fn new(regs: CpuRegisters, page_table: PageTableRef) -> Self {
        Context { regs, page_table }
    }
}

/// The live processor: the register file plus the page table currently
/// installed. Context switches save and restore both together.
#[derive(Clone, Copy, Debug)]
pub struct MachineCpu {
    pub regs: CpuRegisters,
    pub page_table: PageTableRef,
}

impl MachineCpu {
    /// Power-on state: everything zeroed, interrupts disabled, kernel
    /// page table installed.
    pub fn new() -> Self {
        MachineCpu {
            regs: CpuRegisters::zeroed(),
            page_table: PageTableRef::Kernel,
        }
    }

    pub fn interrupts_enabled(&self) -> bool {
        self.regs.flags.interrupt_enable
    }

    pub fn enable_interrupts(&mut self) {
        self.regs.flags.interrupt_enable = true;
    }

    pub fn disable_interrupts(&mut self) {
        self.regs.flags.interrupt_enable = false;
    }

    /// Full register snapshot paired with the installed page table.
    pub fn save_all_context(&self) -> Context {
        Context::new(self.regs.save_all(), self.page_table)
    }

    /// Snapshot with the general-purpose registers zeroed in the copy.
    pub fn save_part_context(&self) -> Context {
        Context::new(self.regs.save_part(), self.page_table)
    }

    /// Install a saved context.
    pub fn restore(&mut self, ctx: Context) {
        self.regs = ctx.regs;
        self.page_table = ctx.page_table;
    }
}

impl Default for MachineCpu {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_save_zeroes_general_registers_only() {
        let mut regs = CpuRegisters::zeroed();
        regs.gpr[3] = 77;
        regs.ss = 0x1000;
        regs.ip = 42;
        regs.flags.interrupt_enable = true;

        let part = regs.save_part();
        assert_eq!(part.gpr, [0; GP_REGISTER_COUNT]);
        assert_eq!(part.ss, 0x1000);
        assert_eq!(part.ip, 42);
        assert!(part.flags.interrupt_enable);

        let all = regs.save_all();
        assert_eq!(all.gpr[3], 77);
    }
}
