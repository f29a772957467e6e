//! Page-granular allocator for one memory area.
//!
//! Every partition area and the kernel area get their own allocator. The
//! model only requires that allocated pages come from the free set; this
//! implementation always picks the lowest-addressed candidates so runs
//! are reproducible.

use std::collections::BTreeSet;

use crate::types::{MemoryBlock, PageId};

use super::paging;

#[derive(Clone, Debug)]
pub struct AreaAllocator {
    area: MemoryBlock,
    page_size: u64,
    free: BTreeSet<PageId>,
    allocated: BTreeSet<PageId>,
}

impl AreaAllocator {
    /// An allocator over `area` with every page free.
    pub fn new(area: MemoryBlock, page_size: u64) -> Self {
        AreaAllocator {
            area,
            page_size,
            free: paging::pages_of_block(&area, page_size).into_iter().collect(),
            allocated: BTreeSet::new(),
        }
    }

    /// An allocator over `area` with the pages of `reserved` already
    /// allocated (the kernel area, where the kernel image sits).
    pub fn with_reserved(area: MemoryBlock, reserved: &MemoryBlock, page_size: u64) -> Self {
        let mut alloc = Self::new(area, page_size);
        for page in paging::pages_of_block(reserved, page_size) {
            alloc.free.remove(&page);
            alloc.allocated.insert(page);
        }
        alloc
    }

    pub fn area(&self) -> MemoryBlock {
        self.area
    }

    pub fn page_size(&self) -> u64 {
        self.page_size
    }

    pub fn free_page_count(&self) -> u64 {
        self.free.len() as u64
    }

    pub fn free_pages(&self) -> impl Iterator<Item = PageId> + '_ {
        self.free.iter().copied()
    }

    pub fn allocated_pages(&self) -> impl Iterator<Item = PageId> + '_ {
        self.allocated.iter().copied()
    }

    pub fn is_free(&self, page: PageId) -> bool {
        self.free.contains(&page)
    }

    pub fn is_allocated(&self, page: PageId) -> bool {
        self.allocated.contains(&page)
    }

    /// Size in bytes of the largest contiguous run of free pages.
    pub fn max_free_block_size(&self) -> u64 {
        let mut best: u64 = 0;
        let mut run: u64 = 0;
        let mut prev: Option<PageId> = None;
        for &page in &self.free {
            run = match prev {
                Some(p) if page == p + self.page_size => run + 1,
                _ => 1,
            };
            best = best.max(run);
            prev = Some(page);
        }
        best * self.page_size
    }

    /// Allocate `n` pages, lowest addresses first. Returns `None` without
    /// changing anything if fewer than `n` pages are free.
    pub fn alloc_pages(&mut self, n: u64) -> Option<Vec<PageId>> {
        if (self.free.len() as u64) < n {
            return None;
        }
        let pages: Vec<PageId> = self.free.iter().copied().take(n as usize).collect();
        for page in &pages {
            self.free.remove(page);
            self.allocated.insert(*page);
        }
        Some(pages)
    }

    /// Allocate a contiguous block of `size` bytes (a page multiple) at
    /// the lowest-addressed free run that fits.
    pub fn alloc_block(&mut self, size: u64) -> Option<MemoryBlock> {
        debug_assert!(size % self.page_size == 0);
        if size == 0 {
            return Some(MemoryBlock::new(self.area.start, 0));
        }
        let need = size / self.page_size;
        let mut run_start: Option<PageId> = None;
        let mut run_len: u64 = 0;
        let mut prev: Option<PageId> = None;
        for &page in &self.free {
            match prev {
                Some(p) if page == p + self.page_size => run_len += 1,
                _ => {
                    run_start = Some(page);
                    run_len = 1;
                }
            }
            prev = Some(page);
            if run_len == need {
                let block = MemoryBlock::new(run_start.unwrap(), size);
                for p in paging::pages_of_block(&block, self.page_size) {
                    self.free.remove(&p);
                    self.allocated.insert(p);
                }
                return Some(block);
            }
        }
        None
    }

    /// Return pages to the free set.
    pub fn dealloc_pages<I: IntoIterator<Item = PageId>>(&mut self, pages: I) {
        for page in pages {
            self.allocated.remove(&page);
            self.free.insert(page);
        }
    }

    /// Return a block's pages to the free set.
    pub fn dealloc_block(&mut self, block: &MemoryBlock) {
        self.dealloc_pages(paging::pages_of_block(block, self.page_size));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn allocator() -> AreaAllocator {
        AreaAllocator::new(MemoryBlock::new(0x10000, 8 * 4096), 4096)
    }

    #[test]
    fn pages_come_lowest_first_and_round_trip() {
        let mut a = allocator();
        assert_eq!(a.free_page_count(), 8);
        let pages = a.alloc_pages(3).unwrap();
        assert_eq!(pages, vec![0x10000, 0x11000, 0x12000]);
        assert_eq!(a.free_page_count(), 5);
        a.dealloc_pages(pages);
        assert_eq!(a.free_page_count(), 8);
        assert!(a.alloc_pages(9).is_none());
    }

    #[test]
    fn blocks_take_the_lowest_fitting_run() {
        let mut a = allocator();
        let low = a.alloc_pages(1).unwrap();
        assert_eq!(low, vec![0x10000]);
        let hole = a.alloc_pages(2).unwrap();
        a.dealloc_pages([hole[0]]);
        let block = a.alloc_block(2 * 4096).unwrap();
        assert_eq!(block.start, 0x13000);
        assert!(a.is_allocated(0x13000) && a.is_allocated(0x14000));
    }

    #[test]
    fn max_free_block_tracks_fragmentation() {
        let mut a = allocator();
        assert_eq!(a.max_free_block_size(), 8 * 4096);
        let pages = a.alloc_pages(8).unwrap();
        assert_eq!(a.max_free_block_size(), 0);
        a.dealloc_pages([pages[1], pages[2], pages[5]]);
        assert_eq!(a.max_free_block_size(), 2 * 4096);
    }

    #[test]
    fn reserved_pages_start_allocated() {
        let area = MemoryBlock::new(0, 8 * 4096);
        let image = MemoryBlock::new(4096, 2 * 4096);
        let a = AreaAllocator::with_reserved(area, &image, 4096);
        assert_eq!(a.free_page_count(), 6);
        assert!(a.is_allocated(4096) && a.is_allocated(8192));
        assert!(a.is_free(0) && a.is_free(3 * 4096));
    }
}
