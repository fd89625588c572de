//! Peak heap use of the hashing stage, measured with a counting allocator.

mod common;

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicUsize, Ordering::Relaxed};

use snore::{hash_all, WalkConfig};

struct Counting;

static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc(layout);
        if !p.is_null() {
            let now = LIVE.fetch_add(layout.size(), Relaxed) + layout.size();
            PEAK.fetch_max(now, Relaxed);
        }
        p
    }

    unsafe fn dealloc(&self, p: *mut u8, layout: Layout) {
        System.dealloc(p, layout);
        LIVE.fetch_sub(layout.size(), Relaxed);
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

#[test]
fn hash_all_peak_is_linear_in_nodes_over_epsilon() {
    let n = 10_000;
    let mut r = common::rng(12);
    let g = common::random_graph(&mut r, n, 5 * n);
    for (epsilon, workers) in [(0.005, 1), (0.005, 4), (0.05, 4)] {
        let cfg = WalkConfig { epsilon, ..Default::default() };
        let (extra, hashes) = common::with_threads(workers, || {
            let base = LIVE.load(Relaxed);
            PEAK.store(base, Relaxed);
            let hashes = hash_all(&g, &cfg).unwrap();
            (PEAK.load(Relaxed) - base, hashes)
        });
        // Output: 12 bytes per kept entry plus a 48-byte header per node.
        // Each worker holds a dense counter (4 bytes per node) and a list of
        // the distinct nodes its walks touched.
        let stored: usize = hashes.iter().map(|h| 12 * h.nnz()).sum();
        let per_node_cap = 12.0 * (1.0 / epsilon).floor();
        let visits = cfg.num_walks * (cfg.lengths.max_len() + 1);
        let per_worker = 4 * n + 24 * visits;
        let bound = (per_node_cap as usize + 64) * n + workers * per_worker + (1 << 20);
        assert!(stored <= per_node_cap as usize * n);
        assert!(extra <= bound, "peak {extra} bytes exceeds {bound} (eps {epsilon}, {workers} workers)");
        // The bound is not vacuous: the output alone is a sizeable part of it.
        assert!(extra >= stored);
    }
}
