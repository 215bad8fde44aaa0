//! Indexed binary min-heap over node indices with decrease-key.

const ABSENT: u32 = u32::MAX;

/// Min-heap of `(key, node)` pairs ordered by key, then by node index.
#[derive(Debug, Clone)]
pub struct IndexedMinHeap {
    heap: Vec<(f64, u32)>,
    pos: Vec<u32>,
    peak: usize,
}

#[inline]
fn less(a: (f64, u32), b: (f64, u32)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

impl IndexedMinHeap {
    /// Heap able to hold nodes `0..capacity`.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity < ABSENT as usize, "too many nodes for a u32 index");
        Self {
            heap: Vec::new(),
            pos: vec![ABSENT; capacity],
            peak: 0,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.heap.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Largest size reached so far.
    pub fn peak(&self) -> usize {
        self.peak
    }

    #[inline]
    pub fn contains(&self, node: usize) -> bool {
        self.pos[node] != ABSENT
    }

    pub fn key(&self, node: usize) -> Option<f64> {
        let p = self.pos[node];
        (p != ABSENT).then(|| self.heap[p as usize].0)
    }

    pub fn peek(&self) -> Option<(f64, usize)> {
        self.heap.first().map(|&(k, n)| (k, n as usize))
    }

    /// Inserts `node` or lowers its key; a larger key is ignored. Returns whether the
    /// heap changed.
    pub fn push_or_decrease(&mut self, node: usize, key: f64) -> bool {
        let p = self.pos[node];
        if p == ABSENT {
            let at = self.heap.len();
            self.heap.push((key, node as u32));
            self.pos[node] = at as u32;
            self.sift_up(at);
            self.peak = self.peak.max(self.heap.len());
            true
        } else if key < self.heap[p as usize].0 {
            self.heap[p as usize].0 = key;
            self.sift_up(p as usize);
            true
        } else {
            false
        }
    }

    pub fn pop(&mut self) -> Option<(f64, usize)> {
        let last = self.heap.len().checked_sub(1)?;
        self.heap.swap(0, last);
        let (key, node) = self.heap.pop().expect("non-empty");
        self.pos[node as usize] = ABSENT;
        if !self.heap.is_empty() {
            self.pos[self.heap[0].1 as usize] = 0;
            self.sift_down(0);
        }
        Some((key, node as usize))
    }

    fn sift_up(&mut self, mut i: usize) {
        let item = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let p = self.heap[parent];
            if !less(item, p) {
                break;
            }
            self.heap[i] = p;
            self.pos[p.1 as usize] = i as u32;
            i = parent;
        }
        self.heap[i] = item;
        self.pos[item.1 as usize] = i as u32;
    }

    fn sift_down(&mut self, mut i: usize) {
        let n = self.heap.len();
        let item = self.heap[i];
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let c = if r < n && less(self.heap[r], self.heap[l]) {
                r
            } else {
                l
            };
            if !less(self.heap[c], item) {
                break;
            }
            self.heap[i] = self.heap[c];
            self.pos[self.heap[i].1 as usize] = i as u32;
            i = c;
        }
        self.heap[i] = item;
        self.pos[item.1 as usize] = i as u32;
    }
}
