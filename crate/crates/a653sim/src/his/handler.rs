//! Interrupt handler state: the dedicated interrupt stack and the stack
//! of contexts saved on handler entry.

use crate::hw::{Context, CpuRegisters};
use crate::types::MemoryBlock;

#[derive(Clone, Debug)]
pub struct InterruptHandler {
    /// Kernel-virtual block holding the interrupt stack.
    stack: MemoryBlock,
    /// Saved contexts, most recent first.
    contexts: Vec<Context>,
}

impl InterruptHandler {
    pub fn new(stack: MemoryBlock) -> Self {
        InterruptHandler {
            stack,
            contexts: Vec::new(),
        }
    }

    pub fn stack(&self) -> MemoryBlock {
        self.stack
    }

    /// How many interrupted contexts are parked: zero outside handling,
    /// one in a handler, more when handlers nest.
    pub fn depth(&self) -> usize {
        self.contexts.len()
    }

    pub fn push_context(&mut self, ctx: Context) {
        self.contexts.insert(0, ctx);
    }

    pub fn pop_context(&mut self) -> Context {
        self.contexts.remove(0)
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    /// The stack segment for handler entry. A first-level entry starts at
    /// the bottom of the interrupt stack; a nested entry continues just
    /// above the interrupted handler frame.
    pub fn entry_stack_segment(&self, interrupted: &CpuRegisters) -> (u64, u64, u64, u64) {
        if interrupted.ss != self.stack.start {
            (self.stack.start, self.stack.size, 0, 0)
        } else {
            let sp = interrupted.sp + 1;
            (self.stack.start, self.stack.size, sp, sp)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hw::PageTableRef;

    #[test]
    fn nested_entry_continues_above_the_interrupted_frame() {
        let handler = InterruptHandler::new(MemoryBlock::new(0x8000, 0x4000));
        let mut user = CpuRegisters::zeroed();
        user.ss = 0x1000;
        user.sp = 99;
        assert_eq!(handler.entry_stack_segment(&user), (0x8000, 0x4000, 0, 0));

        let mut inner = CpuRegisters::zeroed();
        inner.ss = 0x8000;
        inner.sp = 240;
        assert_eq!(
            handler.entry_stack_segment(&inner),
            (0x8000, 0x4000, 241, 241)
        );
    }

    #[test]
    fn contexts_form_a_front_pushed_stack() {
        let mut handler = InterruptHandler::new(MemoryBlock::new(0x8000, 0x4000));
        let a = Context::new(CpuRegisters::zeroed(), PageTableRef::Kernel);
        let mut regs = CpuRegisters::zeroed();
        regs.ip = 7;
        let b = Context::new(regs, PageTableRef::Kernel);
        handler.push_context(a);
        handler.push_context(b);
        assert_eq!(handler.depth(), 2);
        assert_eq!(handler.pop_context().regs.ip, 7);
        assert_eq!(handler.pop_context().regs.ip, 0);
    }
}
