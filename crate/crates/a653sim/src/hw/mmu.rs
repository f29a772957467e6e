//! Page tables and address translation.
//!
//! A page is identified by its start address, so a table maps
//! page-aligned virtual addresses to page-aligned physical addresses and
//! translation carries the in-page offset through unchanged.

use std::collections::BTreeMap;

use crate::types::{Address, PageId};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PageTable {
    entries: BTreeMap<PageId, PageId>,
    page_size: u64,
}

impl PageTable {
    pub fn new(page_size: u64) -> Self {
        assert!(page_size > 0);
        PageTable {
            entries: BTreeMap::new(),
            page_size,
        }
    }

    pub fn page_size(&self) -> u64 {
        self.page_size
    }

    /// Install a mapping from a virtual page to a physical page. Both
    /// must be page-aligned addresses.
    pub fn map(&mut self, virtual_page: PageId, physical_page: PageId) {
        debug_assert!(virtual_page % self.page_size == 0);
        debug_assert!(physical_page % self.page_size == 0);
        self.entries.insert(virtual_page, physical_page);
    }

    pub fn unmap(&mut self, virtual_page: PageId) {
        self.entries.remove(&virtual_page);
    }

    pub fn lookup(&self, virtual_page: PageId) -> Option<PageId> {
        self.entries.get(&virtual_page).copied()
    }

    pub fn contains(&self, virtual_page: PageId) -> bool {
        self.entries.contains_key(&virtual_page)
    }

    /// Translate a virtual byte address to a physical byte address.
    pub fn translate(&self, vaddr: Address) -> Option<Address> {
        let offset = vaddr % self.page_size;
        self.lookup(vaddr - offset).map(|ppage| ppage + offset)
    }

    /// Find the virtual page mapped to a given physical page, if any.
    pub fn inverse(&self, physical_page: PageId) -> Option<PageId> {
        self.entries
            .iter()
            .find(|(_, p)| **p == physical_page)
            .map(|(v, _)| *v)
    }

    /// Iterate over (virtual page, physical page) pairs in ascending
    /// virtual-page order.
    pub fn iter(&self) -> impl Iterator<Item = (PageId, PageId)> + '_ {
        self.entries.iter().map(|(v, p)| (*v, *p))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn translation_carries_the_offset() {
        let mut table = PageTable::new(4096);
        table.map(5 * 4096, 12 * 4096);
        assert_eq!(table.translate(5 * 4096 + 17), Some(12 * 4096 + 17));
        assert_eq!(table.translate(6 * 4096), None);
    }

    #[test]
    fn inverse_finds_the_mapping_virtual_page() {
        let mut table = PageTable::new(4096);
        table.map(3 * 4096, 9 * 4096);
        table.map(4 * 4096, 2 * 4096);
        assert_eq!(table.inverse(2 * 4096), Some(4 * 4096));
        assert_eq!(table.inverse(9 * 4096), Some(3 * 4096));
        assert_eq!(table.inverse(11 * 4096), None);
    }
}
