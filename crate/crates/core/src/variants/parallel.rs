use std::ops::Range;

use crate::kernel::GlobalRhs;
use crate::Vec3;

/// Splits `0..n` into `parts` contiguous ranges of near-equal length.
pub(crate) fn partition(n: usize, parts: usize) -> Vec<Range<usize>> {
    let parts = parts.max(1);
    (0..parts).map(|t| (t * n / parts)..((t + 1) * n / parts)).collect()
}

/// Runs `work` over a static partition of the elements, each worker owning a
/// zeroed accumulator and a workspace from `make_ws`. Accumulators are summed
/// in worker order, so a fixed thread count gives bitwise-stable results.
pub(crate) fn accumulate<W, M, F>(
    n_nodes: usize,
    n_elems: usize,
    n_threads: usize,
    make_ws: M,
    work: F,
) -> GlobalRhs
where
    M: Fn() -> W + Sync,
    F: Fn(&mut W, Range<usize>, &mut GlobalRhs) + Sync,
{
    if n_threads <= 1 {
        let mut rhs = GlobalRhs::zeros(n_nodes);
        work(&mut make_ws(), 0..n_elems, &mut rhs);
        return rhs;
    }
    let ranges = partition(n_elems, n_threads);
    let partials: Vec<GlobalRhs> = std::thread::scope(|s| {
        let handles: Vec<_> = ranges
            .into_iter()
            .map(|range| {
                let (make_ws, work) = (&make_ws, &work);
                s.spawn(move || {
                    let mut acc = GlobalRhs::zeros(n_nodes);
                    work(&mut make_ws(), range, &mut acc);
                    acc
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("assembly worker panicked"))
            .collect()
    });
    let mut parts = partials.into_iter();
    let mut total = parts.next().unwrap_or_else(|| GlobalRhs::zeros(n_nodes));
    for p in parts {
        for (dst, src) in total.0.iter_mut().zip(&p.0) {
            dst[0] += src[0];
            dst[1] += src[1];
            dst[2] += src[2];
        }
    }
    total
}

/// Shared view of the result vector for colored scatter.
#[derive(Clone, Copy)]
pub(crate) struct SharedRhs {
    ptr: *mut Vec3,
    len: usize,
}

// SAFETY: writers only touch nodes of elements inside one color class, and
// elements of one class share no node, so no two threads write the same slot.
unsafe impl Send for SharedRhs {}
unsafe impl Sync for SharedRhs {}

impl SharedRhs {
    pub(crate) fn new(rhs: &mut GlobalRhs) -> Self {
        Self {
            ptr: rhs.0.as_mut_ptr(),
            len: rhs.0.len(),
        }
    }

    /// # Safety
    /// No other thread may access `node` concurrently.
    #[inline]
    pub(crate) unsafe fn add(&self, node: usize, v: Vec3) {
        assert!(node < self.len);
        let dst = &mut *self.ptr.add(node);
        dst[0] += v[0];
        dst[1] += v[1];
        dst[2] += v[2];
    }
}
