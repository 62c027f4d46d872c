//! 4KB-paged file reader with a bounded frame pool, CLOCK (second-chance)
//! eviction, and pin/miss accounting.
//!
//! Readers pin the frame(s) covering a byte range and may run arbitrary
//! code against the frame bytes with no copy; `read_into` is the copying
//! convenience path. A frame being loaded is published only once fully
//! read: latecomers block on the frame lock until the loader downgrades it.
//! Pins are counted per page touched, so a range that straddles a page
//! boundary costs one pin per page.

use std::collections::HashMap;
use std::fs::File;
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use parking_lot::{Mutex, RwLock, RwLockReadGuard, RwLockWriteGuard};

use crate::error::{Error, Result};

pub const PAGE_SIZE: usize = 4096;

/// Cumulative access counters of one paged file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StoreCounters {
    /// Pin operations (page touches), hits and misses alike.
    pub pins: u64,
    /// Pins that had to read the page from disk.
    pub misses: u64,
}

struct FrameInfo {
    page: Option<u64>,
    pins: u32,
    referenced: bool,
}

struct PoolInner {
    map: HashMap<u64, usize>,
    info: Vec<FrameInfo>,
    hand: usize,
}

/// Frame payload; carries the page it holds so a reader that waited out a
/// concurrent load can verify it got the page it pinned (a loader that
/// fails its disk read publishes `page = None`).
struct Frame {
    page: Option<u64>,
    bytes: Box<[u8]>,
}

pub struct PagedFile {
    path: PathBuf,
    file: File,
    len: u64,
    frames: Vec<RwLock<Frame>>,
    inner: Mutex<PoolInner>,
    pins: AtomicU64,
    misses: AtomicU64,
}

pub struct PinGuard<'a> {
    pool: &'a PagedFile,
    idx: usize,
    guard: Option<RwLockReadGuard<'a, Frame>>,
}

impl PinGuard<'_> {
    pub fn bytes(&self) -> &[u8] {
        &self.guard.as_ref().expect("pinned").bytes
    }
}

impl Drop for PinGuard<'_> {
    fn drop(&mut self) {
        // Release the frame lock before clearing the pin so an evictor that
        // sees pins == 0 can always take the write lock immediately.
        drop(self.guard.take());
        let mut inner = self.pool.inner.lock();
        inner.info[self.idx].pins -= 1;
    }
}

impl PagedFile {
    /// Opens `path` with a frame pool of `budget_bytes / PAGE_SIZE` frames
    /// (at least one).
    pub fn open(path: impl AsRef<Path>, budget_bytes: u64) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let len = file.metadata().map_err(|e| Error::io(&path, e))?.len();
        let frame_count = ((budget_bytes as usize) / PAGE_SIZE).max(1);
        let frames = (0..frame_count)
            .map(|_| {
                RwLock::new(Frame {
                    page: None,
                    bytes: vec![0u8; PAGE_SIZE].into_boxed_slice(),
                })
            })
            .collect();
        let info = (0..frame_count)
            .map(|_| FrameInfo {
                page: None,
                pins: 0,
                referenced: false,
            })
            .collect();
        Ok(PagedFile {
            path,
            file,
            len,
            frames,
            inner: Mutex::new(PoolInner {
                map: HashMap::new(),
                info,
                hand: 0,
            }),
            pins: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        })
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn counters(&self) -> StoreCounters {
        StoreCounters {
            pins: self.pins.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
        }
    }

    /// Drops every cached page (the cold-run lever). Fails if a page is
    /// currently pinned.
    pub fn flush_cache(&self) -> Result<()> {
        let mut inner = self.inner.lock();
        if inner.info.iter().any(|f| f.pins > 0) {
            return Err(Error::usage("cannot flush cache while pages are pinned"));
        }
        inner.map.clear();
        for f in &mut inner.info {
            f.page = None;
            f.referenced = false;
        }
        Ok(())
    }

    fn clock_victim(inner: &mut PoolInner) -> Result<usize> {
        let n = inner.info.len();
        // Two sweeps clear every reference bit; a third pass can only fail
        // if every frame is pinned.
        for _ in 0..=3 * n {
            let i = inner.hand;
            inner.hand = (inner.hand + 1) % n;
            let f = &mut inner.info[i];
            if f.pins > 0 {
                continue;
            }
            if f.referenced {
                f.referenced = false;
                continue;
            }
            return Ok(i);
        }
        Err(Error::usage(
            "page cache exhausted: every frame is pinned (increase the page budget)",
        ))
    }

    /// Pins the frame holding `page`, loading it from disk on a miss.
    pub fn pin(&self, page: u64) -> Result<PinGuard<'_>> {
        if page as usize * PAGE_SIZE >= self.len as usize {
            return Err(Error::format(format!(
                "{}: page {page} beyond end of file",
                self.path.display()
            )));
        }
        self.pins.fetch_add(1, Ordering::Relaxed);
        loop {
            let mut inner = self.inner.lock();
            if let Some(&idx) = inner.map.get(&page) {
                inner.info[idx].pins += 1;
                inner.info[idx].referenced = true;
                drop(inner);
                // Blocks until a concurrent loader of this page downgrades.
                let guard = self.frames[idx].read();
                if guard.page == Some(page) {
                    return Ok(PinGuard {
                        pool: self,
                        idx,
                        guard: Some(guard),
                    });
                }
                // The loader we waited on failed its read; unpin and retry.
                drop(guard);
                self.inner.lock().info[idx].pins -= 1;
                continue;
            }
            let idx = Self::clock_victim(&mut inner)?;
            let write: RwLockWriteGuard<'_, Frame> = self.frames[idx]
                .try_write()
                .expect("victim frame with zero pins cannot be locked");
            if let Some(old) = inner.info[idx].page {
                inner.map.remove(&old);
            }
            inner.map.insert(page, idx);
            inner.info[idx] = FrameInfo {
                page: Some(page),
                pins: 1,
                referenced: true,
            };
            self.misses.fetch_add(1, Ordering::Relaxed);
            drop(inner);

            let mut write = write;
            write.page = None;
            let offset = page * PAGE_SIZE as u64;
            let take = (self.len - offset).min(PAGE_SIZE as u64) as usize;
            let res = self.file.read_exact_at(&mut write.bytes[..take], offset);
            if let Err(e) = res {
                // Un-publish the mapping; waiters see `page = None`, unpin
                // themselves, and retry (propagating their own errors).
                let mut inner = self.inner.lock();
                inner.map.remove(&page);
                inner.info[idx].page = None;
                inner.info[idx].pins -= 1;
                inner.info[idx].referenced = false;
                return Err(Error::io(&self.path, e));
            }
            write.bytes[take..].fill(0);
            write.page = Some(page);
            let guard = RwLockWriteGuard::downgrade(write);
            return Ok(PinGuard {
                pool: self,
                idx,
                guard: Some(guard),
            });
        }
    }

    /// Pins every page covering `offset..offset+len` and runs `f` over the
    /// in-frame byte segments, zero-copy. Needs as many free frames as the
    /// range spans.
    pub fn with_range<R>(&self, offset: u64, len: usize, f: impl FnOnce(&[&[u8]]) -> R) -> Result<R> {
        if len == 0 {
            return Ok(f(&[]));
        }
        if offset + len as u64 > self.len {
            return Err(Error::format(format!(
                "{}: range {offset}+{len} past end ({})",
                self.path.display(),
                self.len
            )));
        }
        let first = offset / PAGE_SIZE as u64;
        let last = (offset + len as u64 - 1) / PAGE_SIZE as u64;
        let mut guards = Vec::with_capacity((last - first + 1) as usize);
        for p in first..=last {
            guards.push(self.pin(p)?);
        }
        let mut segments: Vec<&[u8]> = Vec::with_capacity(guards.len());
        for (i, g) in guards.iter().enumerate() {
            let page_start = (first + i as u64) * PAGE_SIZE as u64;
            let lo = offset.saturating_sub(page_start) as usize;
            let hi = ((offset + len as u64 - page_start) as usize).min(PAGE_SIZE);
            segments.push(&g.bytes()[lo..hi]);
        }
        Ok(f(&segments))
    }

    /// Copies `buf.len()` bytes starting at `offset`, pinning one page at a
    /// time (works with a single-frame pool).
    pub fn read_into(&self, offset: u64, buf: &mut [u8]) -> Result<()> {
        if buf.is_empty() {
            return Ok(());
        }
        if offset + buf.len() as u64 > self.len {
            return Err(Error::format(format!(
                "{}: range {offset}+{} past end ({})",
                self.path.display(),
                buf.len(),
                self.len
            )));
        }
        let mut written = 0usize;
        while written < buf.len() {
            let pos = offset + written as u64;
            let page = pos / PAGE_SIZE as u64;
            let in_page = (pos % PAGE_SIZE as u64) as usize;
            let take = (PAGE_SIZE - in_page).min(buf.len() - written);
            let g = self.pin(page)?;
            buf[written..written + take].copy_from_slice(&g.bytes()[in_page..in_page + take]);
            written += take;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp_file(bytes: &[u8]) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("data.bin");
        let mut f = File::create(&p).unwrap();
        f.write_all(bytes).unwrap();
        (dir, p)
    }

    fn pattern(len: usize) -> Vec<u8> {
        (0..len).map(|i| (i % 251) as u8).collect()
    }

    #[test]
    fn pin_counts_and_warm_hits() {
        let data = pattern(3 * PAGE_SIZE);
        let (_d, p) = temp_file(&data);
        let store = PagedFile::open(&p, (4 * PAGE_SIZE) as u64).unwrap();
        for _ in 0..1000 {
            let g = store.pin(1).unwrap();
            assert_eq!(g.bytes()[0], data[PAGE_SIZE]);
        }
        let c = store.counters();
        assert_eq!(c.pins, 1000);
        assert_eq!(c.misses, 1);
    }

    #[test]
    fn single_frame_pool_misses_every_distinct_page() {
        let data = pattern(4 * PAGE_SIZE);
        let (_d, p) = temp_file(&data);
        let store = PagedFile::open(&p, 1).unwrap(); // clamps to one frame
        assert_eq!(store.frame_count(), 1);
        for round in 0..3u64 {
            for page in 0..4u64 {
                let g = store.pin(page).unwrap();
                assert_eq!(g.bytes()[5], data[page as usize * PAGE_SIZE + 5]);
                drop(g);
                let _ = round;
            }
        }
        let c = store.counters();
        assert_eq!(c.pins, 12);
        assert_eq!(c.misses, 12); // alternating pages never hit
    }

    #[test]
    fn flush_forces_cold_reads() {
        let data = pattern(2 * PAGE_SIZE);
        let (_d, p) = temp_file(&data);
        let store = PagedFile::open(&p, (8 * PAGE_SIZE) as u64).unwrap();
        store.pin(0).unwrap();
        store.pin(0).unwrap();
        assert_eq!(store.counters().misses, 1);
        store.flush_cache().unwrap();
        store.pin(0).unwrap();
        assert_eq!(store.counters().misses, 2);
    }

    #[test]
    fn with_range_spans_pages() {
        let data = pattern(3 * PAGE_SIZE);
        let (_d, p) = temp_file(&data);
        let store = PagedFile::open(&p, (4 * PAGE_SIZE) as u64).unwrap();
        let offset = PAGE_SIZE as u64 - 3;
        let got = store
            .with_range(offset, 10, |segs| {
                assert_eq!(segs.len(), 2);
                assert_eq!(segs[0].len(), 3);
                assert_eq!(segs[1].len(), 7);
                segs.concat()
            })
            .unwrap();
        assert_eq!(got, data[PAGE_SIZE - 3..PAGE_SIZE + 7]);
        // Two pages touched means two pins.
        assert_eq!(store.counters().pins, 2);
    }

    #[test]
    fn read_into_matches_file() {
        let data = pattern(2 * PAGE_SIZE + 100);
        let (_d, p) = temp_file(&data);
        let store = PagedFile::open(&p, (2 * PAGE_SIZE) as u64).unwrap();
        let mut buf = vec![0u8; 5000];
        store.read_into(100, &mut buf).unwrap();
        assert_eq!(buf, data[100..5100]);
    }

    #[test]
    fn reads_past_end_are_format_errors() {
        let data = pattern(PAGE_SIZE);
        let (_d, p) = temp_file(&data);
        let store = PagedFile::open(&p, (2 * PAGE_SIZE) as u64).unwrap();
        assert!(store.pin(1).is_err());
        assert!(store.with_range(4090, 10, |_| ()).is_err());
    }

    #[test]
    fn concurrent_pins_on_same_page_see_identical_bytes() {
        let data = pattern(8 * PAGE_SIZE);
        let (_d, p) = temp_file(&data);
        let store = PagedFile::open(&p, (2 * PAGE_SIZE) as u64).unwrap();
        std::thread::scope(|s| {
            for t in 0..8u64 {
                let store = &store;
                let data = &data;
                s.spawn(move || {
                    for i in 0..300u64 {
                        let page = (t + i) % 8;
                        let g = store.pin(page).unwrap();
                        let want = &data[page as usize * PAGE_SIZE..][..PAGE_SIZE];
                        assert_eq!(g.bytes(), want, "torn read on page {page}");
                    }
                });
            }
        });
        let c = store.counters();
        assert_eq!(c.pins, 8 * 300);
        assert!(c.misses >= 8);
    }
}
