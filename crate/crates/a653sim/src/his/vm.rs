//! Process virtual memory: the stack/data/code layout and the fully
//! loaded page table.

use std::collections::BTreeSet;

use crate::hw::PageTable;
use crate::types::{Address, MemoryBlock, PageId, NULL_BLOCK};

use super::paging;

/// A virtual region together with the physical pages backing it and the
/// mapping between the two.
#[derive(Clone, Debug)]
pub struct VirtualMemoryBlock {
    /// The virtual address range.
    pub memory: MemoryBlock,
    /// The physical pages backing it.
    pub base: BTreeSet<PageId>,
    /// Virtual page to physical page mapping; empty until the image is
    /// loaded.
    pub page_table: PageTable,
}

/// A process address space: one virtual block split into stack, data, and
/// code regions, in that order from the bottom.
#[derive(Clone, Debug)]
pub struct ProcessVirtualMemory {
    pub vm_block: VirtualMemoryBlock,
    pub stack: MemoryBlock,
    pub data: MemoryBlock,
    pub code: MemoryBlock,
}

impl ProcessVirtualMemory {
    /// No address space at all: null blocks, no backing pages. Used by the
    /// idle process, which runs entirely in the kernel.
    pub fn empty() -> Self {
        ProcessVirtualMemory {
            vm_block: VirtualMemoryBlock {
                memory: NULL_BLOCK,
                base: BTreeSet::new(),
                page_table: PageTable::new(1),
            },
            stack: NULL_BLOCK,
            data: NULL_BLOCK,
            code: NULL_BLOCK,
        }
    }

    /// Lay out a process address space at `virtual_start` over the given
    /// physical `base` pages. All three sizes must be page multiples; a
    /// zero data size yields a null data block with code following the
    /// stack directly.
    pub fn new(
        virtual_start: Address,
        base: BTreeSet<PageId>,
        stack_size: u64,
        data_size: u64,
        code_size: u64,
        page_size: u64,
    ) -> Self {
        debug_assert!(stack_size % page_size == 0);
        debug_assert!(data_size % page_size == 0);
        debug_assert!(code_size % page_size == 0);
        let memory = MemoryBlock::new(virtual_start, stack_size + data_size + code_size);
        let stack = MemoryBlock::new(virtual_start, stack_size);
        let (data, code) = if data_size == 0 {
            (NULL_BLOCK, MemoryBlock::new(stack.end(), code_size))
        } else {
            let data = MemoryBlock::new(stack.end(), data_size);
            (data, MemoryBlock::new(data.end(), code_size))
        };
        ProcessVirtualMemory {
            vm_block: VirtualMemoryBlock {
                memory,
                base,
                page_table: PageTable::new(page_size),
            },
            stack,
            data,
            code,
        }
    }

    /// Build the full page table: every virtual page of the block mapped
    /// onto the base pages, both taken in ascending order. The entry
    /// point must land on a mapped page.
    pub fn full_load_page_table(&self, entry_point: Address, page_size: u64) -> PageTable {
        let virtual_pages = paging::pages_of_block(&self.vm_block.memory, page_size);
        assert_eq!(
            virtual_pages.len(),
            self.vm_block.base.len(),
            "base pages must cover the virtual block exactly"
        );
        let mut table = PageTable::new(page_size);
        for (vpage, ppage) in virtual_pages.iter().zip(self.vm_block.base.iter()) {
            table.map(*vpage, *ppage);
        }
        assert!(
            table.contains(paging::page_of(entry_point, page_size)),
            "entry point must be inside the mapped block"
        );
        table
    }

    /// The image load plan: for each non-stack virtual page in ascending
    /// order, the physical page it maps to and the 1-based piece of the
    /// image (data pieces first, then code) that belongs there.
    pub fn load_plan(&self, table: &PageTable, page_size: u64) -> Vec<(PageId, u64)> {
        let stack_pages = paging::page_count(self.stack.size, page_size);
        paging::pages_of_block(&self.vm_block.memory, page_size)
            .into_iter()
            .filter(|vpage| !self.stack.contains_addr(*vpage))
            .map(|vpage| {
                let index = 1 + (vpage - self.vm_block.memory.start) / page_size;
                (table.lookup(vpage).expect("page mapped"), index - stack_pages)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(pages: &[PageId]) -> BTreeSet<PageId> {
        pages.iter().copied().collect()
    }

    #[test]
    fn regions_stack_data_code_are_adjacent() {
        let vm = ProcessVirtualMemory::new(
            0x10000,
            base(&[0x40000, 0x42000, 0x41000, 0x43000]),
            2 * 4096,
            4096,
            4096,
            4096,
        );
        assert_eq!(vm.stack, MemoryBlock::new(0x10000, 8192));
        assert_eq!(vm.data, MemoryBlock::new(0x12000, 4096));
        assert_eq!(vm.code, MemoryBlock::new(0x13000, 4096));
        assert_eq!(vm.vm_block.memory.size, 4 * 4096);
    }

    #[test]
    fn zero_data_size_gives_a_null_data_block() {
        let vm = ProcessVirtualMemory::new(0x10000, base(&[0x40000, 0x41000]), 4096, 0, 4096, 4096);
        assert!(vm.data.is_null());
        assert_eq!(vm.code.start, 0x11000);
    }

    #[test]
    fn full_load_maps_ascending_virtual_onto_ascending_base() {
        let vm = ProcessVirtualMemory::new(
            0x10000,
            base(&[0x43000, 0x41000, 0x42000]),
            4096,
            4096,
            4096,
            4096,
        );
        let entry = 0x12000 + 8;
        let table = vm.full_load_page_table(entry, 4096);
        assert_eq!(table.lookup(0x10000), Some(0x41000));
        assert_eq!(table.lookup(0x11000), Some(0x42000));
        assert_eq!(table.lookup(0x12000), Some(0x43000));
    }

    #[test]
    fn load_plan_skips_the_stack_and_numbers_pieces_from_one() {
        let vm = ProcessVirtualMemory::new(
            0x10000,
            base(&[0x41000, 0x42000, 0x43000, 0x44000]),
            2 * 4096,
            4096,
            4096,
            4096,
        );
        let table = vm.full_load_page_table(0x13000, 4096);
        let plan = vm.load_plan(&table, 4096);
        assert_eq!(plan, vec![(0x43000, 1), (0x44000, 2)]);
    }
}
