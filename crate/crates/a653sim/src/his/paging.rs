//! Page arithmetic shared by the allocators and virtual memory builders.

use crate::types::{Address, MemoryBlock, PageId};

/// The page containing an address: the address rounded down to a page
/// boundary.
pub fn page_of(addr: Address, page_size: u64) -> PageId {
    addr - addr % page_size
}

/// The in-page offset of an address.
pub fn offset_of(addr: Address, page_size: u64) -> u64 {
    addr % page_size
}

/// The start of the page following the one containing `addr`.
pub fn next_page(addr: Address, page_size: u64) -> PageId {
    page_of(addr, page_size) + page_size
}

/// Number of pages needed to hold `bytes` bytes.
pub fn page_count(bytes: u64, page_size: u64) -> u64 {
    (bytes + page_size - 1) / page_size
}

/// `bytes` rounded up to a whole number of pages.
pub fn size_count(bytes: u64, page_size: u64) -> u64 {
    page_count(bytes, page_size) * page_size
}

/// The pages whose start addresses fall inside a block, in ascending
/// order.
pub fn pages_of_block(block: &MemoryBlock, page_size: u64) -> Vec<PageId> {
    if block.is_null() {
        return Vec::new();
    }
    let first = if block.start % page_size == 0 {
        block.start
    } else {
        next_page(block.start, page_size)
    };
    (0..)
        .map(|i| first + i * page_size)
        .take_while(|p| *p < block.end())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_helpers_agree() {
        assert_eq!(page_of(8191, 4096), 4096);
        assert_eq!(offset_of(8191, 4096), 4095);
        assert_eq!(next_page(8191, 4096), 8192);
        assert_eq!(page_count(1, 4096), 1);
        assert_eq!(page_count(4096, 4096), 1);
        assert_eq!(page_count(4097, 4096), 2);
        assert_eq!(size_count(0, 4096), 0);
        assert_eq!(size_count(5000, 4096), 8192);
    }

    #[test]
    fn block_pages_cover_exactly_the_contained_page_starts() {
        let block = MemoryBlock::new(8192, 3 * 4096);
        assert_eq!(pages_of_block(&block, 4096), vec![8192, 12288, 16384]);
        assert!(pages_of_block(&crate::types::NULL_BLOCK, 4096).is_empty());
    }
}
