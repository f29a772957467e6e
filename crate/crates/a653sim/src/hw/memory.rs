//! Physical memory modeled as per-page ownership tags.
//!
//! The simulator never interprets instruction bytes, so a page carries a
//! content tag rather than data: which executable image it holds a piece
//! of and the piece index. That is enough to prove loads landed where
//! allocation put them and that nothing overlaps.

use std::collections::BTreeMap;

use crate::types::PageId;

/// What a physical page currently holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PageContent {
    /// Untouched since power-on.
    Blank,
    /// Piece `piece` (1-based) of the executable image named `source`.
    Image { source: String, piece: u64 },
}

/// Main memory: a span of physical pages keyed by page start address,
/// each with a content tag.
#[derive(Clone, Debug)]
pub struct MainMemory {
    size: u64,
    page_size: u64,
    pages: BTreeMap<PageId, PageContent>,
}

impl MainMemory {
    pub fn new(size: u64, page_size: u64) -> Self {
        assert!(page_size > 0 && size % page_size == 0);
        MainMemory {
            size,
            page_size,
            pages: BTreeMap::new(),
        }
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    /// Store an image piece into the physical page starting at `page`.
    pub fn load_page(&mut self, page: PageId, source: &str, piece: u64) {
        debug_assert!(page < self.size && page % self.page_size == 0);
        self.pages.insert(
            page,
            PageContent::Image {
                source: source.to_string(),
                piece,
            },
        );
    }

    /// Clear a page back to blank.
    pub fn clear_page(&mut self, page: PageId) {
        self.pages.remove(&page);
    }

    pub fn page(&self, page: PageId) -> PageContent {
        self.pages.get(&page).cloned().unwrap_or(PageContent::Blank)
    }

    /// Iterate over non-blank pages in ascending address order.
    pub fn loaded_pages(&self) -> impl Iterator<Item = (PageId, &PageContent)> + '_ {
        self.pages.iter().map(|(p, c)| (*p, c))
    }
}
