//! Per-bin ordering of fragments by content, and the lcp array.

use std::cmp::Ordering;

use crate::ingest::{FragmentRef, SequenceStore};

const INSERTION_CUTOFF: usize = 12;

/// Letter at `depth`, or -1 past the end of the fragment.
#[inline]
fn key(store: &SequenceStore, f: FragmentRef, m: usize, depth: usize) -> i16 {
    let w = store.window(f, m);
    w.get(depth).map_or(-1, |&c| c as i16)
}

fn compare_from(store: &SequenceStore, a: FragmentRef, b: FragmentRef, m: usize, depth: usize) -> Ordering {
    let wa = store.window(a, m);
    let wb = store.window(b, m);
    let da = depth.min(wa.len());
    let db = depth.min(wb.len());
    wa[da..].cmp(&wb[db..]).then(a.cmp(&b))
}

/// Sorts `items` by the content of their first `m` clean letters, a proper
/// prefix first. Equal contents are ordered by reference.
///
/// Multikey quicksort with three-way partitioning; short ranges fall back
/// to insertion sort.
pub(crate) fn sort_fragments(store: &SequenceStore, items: &mut [FragmentRef], m: usize) {
    let mut stack = vec![(0usize, items.len(), 0usize)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let part = &mut items[lo..hi];
        if part.len() <= 1 {
            continue;
        }
        if part.len() <= INSERTION_CUTOFF {
            for i in 1..part.len() {
                let mut j = i;
                while j > 0 && compare_from(store, part[j - 1], part[j], m, depth) == Ordering::Greater {
                    part.swap(j - 1, j);
                    j -= 1;
                }
            }
            continue;
        }
        if depth >= m {
            part.sort_unstable();
            continue;
        }
        let k = |f: FragmentRef| key(store, f, m, depth);
        let n = part.len();
        let (a, b, c) = (k(part[0]), k(part[n / 2]), k(part[n - 1]));
        let pivot = a.max(b).min(a.min(b).max(c));

        // Dijkstra partition: [0,lt) < pivot, [lt,i) == pivot, (gt,n) > pivot
        let mut lt = 0;
        let mut i = 0;
        let mut gt = n;
        while i < gt {
            match k(part[i]).cmp(&pivot) {
                Ordering::Less => {
                    part.swap(lt, i);
                    lt += 1;
                    i += 1;
                }
                Ordering::Greater => {
                    gt -= 1;
                    part.swap(i, gt);
                }
                Ordering::Equal => i += 1,
            }
        }
        stack.push((lo, lo + lt, depth));
        stack.push((lo + gt, hi, depth));
        if pivot < 0 {
            // all ended here: identical contents
            items[lo + lt..lo + gt].sort_unstable();
        } else {
            stack.push((lo + lt, lo + gt, depth + 1));
        }
    }
}

/// Length of the common prefix of two fragments, both truncated to `m`.
#[inline]
pub(crate) fn common_prefix(store: &SequenceStore, a: FragmentRef, b: FragmentRef, m: usize) -> usize {
    let wa = store.window(a, m);
    let wb = store.window(b, m);
    wa.iter().zip(wb).take_while(|(x, y)| x == y).count()
}
