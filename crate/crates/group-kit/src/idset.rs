use std::fmt;

use radio_core::wire::{Reader, Truncated, Writer};

/// Set of device IDs backed by a bitmap window `[64*base, 64*(base+words.len()))`.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct IdSet {
    base: u32,
    words: Vec<u64>,
}

impl fmt::Debug for IdSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl IdSet {
    pub fn new() -> Self {
        IdSet::default()
    }

    pub fn singleton(id: u32) -> Self {
        let mut s = IdSet::new();
        s.insert(id);
        s
    }

    /// All IDs in `lo..hi`.
    pub fn range(lo: u32, hi: u32) -> Self {
        let mut s = IdSet::new();
        if lo >= hi {
            return s;
        }
        s.base = lo / 64;
        let top = (hi - 1) / 64;
        s.words = vec![u64::MAX; (top - s.base + 1) as usize];
        s.words[0] &= u64::MAX << (lo % 64);
        let last = s.words.len() - 1;
        s.words[last] &= u64::MAX >> (63 - (hi - 1) % 64);
        s
    }

    fn grow_to(&mut self, lo_word: u32, hi_word: u32) {
        if self.words.is_empty() {
            self.base = lo_word;
            self.words = vec![0; (hi_word - lo_word + 1) as usize];
            return;
        }
        if lo_word < self.base {
            let extra = (self.base - lo_word) as usize;
            let mut w = vec![0u64; extra + self.words.len()];
            w[extra..].copy_from_slice(&self.words);
            self.words = w;
            self.base = lo_word;
        }
        let need = (hi_word - self.base + 1) as usize;
        if need > self.words.len() {
            self.words.resize(need, 0);
        }
    }

    pub fn insert(&mut self, id: u32) {
        let w = id / 64;
        self.grow_to(w, w);
        self.words[(w - self.base) as usize] |= 1 << (id % 64);
    }

    pub fn contains(&self, id: u32) -> bool {
        let w = id / 64;
        if w < self.base {
            return false;
        }
        match self.words.get((w - self.base) as usize) {
            Some(x) => x >> (id % 64) & 1 == 1,
            None => false,
        }
    }

    pub fn union_with(&mut self, other: &IdSet) {
        let Some((lo, hi)) = other.word_span() else {
            return;
        };
        self.grow_to(lo, hi);
        let off = (other.base - self.base) as usize;
        for (i, w) in other.words.iter().enumerate() {
            self.words[off + i] |= w;
        }
    }

    fn word_span(&self) -> Option<(u32, u32)> {
        let first = self.words.iter().position(|&w| w != 0)?;
        let last = self.words.iter().rposition(|&w| w != 0)?;
        Some((self.base + first as u32, self.base + last as u32))
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(move |(i, &w)| {
            let base = (self.base + i as u32) * 64;
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros();
                w &= w - 1;
                Some(base + b)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.iter().collect()
    }

    /// Position of `id` in ascending order, if present.
    pub fn rank(&self, id: u32) -> Option<u32> {
        if !self.contains(id) {
            return None;
        }
        let w = (id / 64 - self.base) as usize;
        let below: u32 = self.words[..w].iter().map(|x| x.count_ones()).sum();
        let mask = (1u64 << (id % 64)) - 1;
        Some(below + (self.words[w] & mask).count_ones())
    }

    /// `(rank(id), len())` in one pass.
    pub fn rank_and_len(&self, id: u32) -> (Option<u32>, usize) {
        if !self.contains(id) {
            return (None, self.len());
        }
        let w = (id / 64 - self.base) as usize;
        let below: u32 = self.words[..w].iter().map(|x| x.count_ones()).sum();
        let above: usize = self.words[w + 1..]
            .iter()
            .map(|x| x.count_ones() as usize)
            .sum();
        let word = self.words[w];
        let mask = (1u64 << (id % 64)) - 1;
        (
            Some(below + (word & mask).count_ones()),
            below as usize + word.count_ones() as usize + above,
        )
    }

    /// Members whose rank lies in `lo..hi`.
    pub fn slice_ranks(&self, lo: usize, hi: usize) -> IdSet {
        self.iter().skip(lo).take(hi.saturating_sub(lo)).collect()
    }

    /// Adds all IDs in `lo..hi`.
    pub fn insert_range(&mut self, lo: u32, hi: u32) {
        if lo >= hi {
            return;
        }
        let (a, b) = (lo / 64, (hi - 1) / 64);
        self.grow_to(a, b);
        for w in a..=b {
            let mut m = u64::MAX;
            if w == a {
                m &= u64::MAX << (lo % 64);
            }
            if w == b {
                m &= u64::MAX >> (63 - (hi - 1) % 64);
            }
            self.words[(w - self.base) as usize] |= m;
        }
    }

    fn run_count(&self) -> usize {
        let mut carry = 0;
        let mut n = 0;
        for &w in &self.words {
            n += (w & !(w << 1 | carry)).count_ones() as usize;
            carry = w >> 63;
        }
        n
    }

    /// Maximal runs of consecutive IDs as `(start, len)`.
    fn runs(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        let mut open: Option<u32> = None;
        for (i, &w) in self.words.iter().enumerate() {
            let at = (self.base + i as u32) * 64;
            let mut bit = 0u32;
            while bit < 64 {
                let x = w >> bit;
                match open {
                    Some(start) => {
                        bit += x.trailing_ones();
                        if bit < 64 {
                            out.push((start, at + bit - start));
                            open = None;
                        }
                    }
                    None => {
                        bit += x.trailing_zeros().min(64 - bit);
                        if bit < 64 {
                            open = Some(at + bit);
                        }
                    }
                }
            }
        }
        if let Some(start) = open {
            out.push((start, (self.base + self.words.len() as u32) * 64 - start));
        }
        out
    }

    pub fn encode(&self, w: Writer) -> Writer {
        let Some((lo, hi)) = self.word_span() else {
            return w.u8(0).var(0);
        };
        let nwords = (hi - lo + 1) as usize;
        // varints are at most 5 bytes for u32 values; estimate runs cheaply
        let run_bytes = self.run_count() * 4;
        if run_bytes <= nwords * 8 {
            let runs = self.runs();
            let mut w = w.u8(0).var(runs.len() as u64);
            let mut prev = 0u32;
            for (s, l) in runs {
                w = w.var((s - prev) as u64).var(l as u64);
                prev = s + l;
            }
            w
        } else {
            let mut w = w.u8(1).var(lo as u64).var(nwords as u64);
            let off = (lo - self.base) as usize;
            for x in &self.words[off..off + nwords] {
                w = w.u64(*x);
            }
            w
        }
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<IdSet, Truncated> {
        match r.u8()? {
            0 => {
                let n = r.var()?;
                let mut s = IdSet::new();
                let mut prev = 0u64;
                for _ in 0..n {
                    let start = prev + r.var()?;
                    let len = r.var()?;
                    let end = start + len;
                    if end > u32::MAX as u64 + 1 {
                        return Err(Truncated);
                    }
                    s.insert_range(start as u32, end as u32);
                    prev = end;
                }
                Ok(s)
            }
            1 => {
                let base = r.var()? as u32;
                let n = r.var()? as usize;
                let raw = r.raw(n.checked_mul(8).ok_or(Truncated)?)?;
                let words = raw
                    .chunks_exact(8)
                    .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
                    .collect();
                Ok(IdSet { base, words })
            }
            _ => Err(Truncated),
        }
    }
}

impl FromIterator<u32> for IdSet {
    fn from_iter<T: IntoIterator<Item = u32>>(iter: T) -> Self {
        let mut v: Vec<u32> = iter.into_iter().collect();
        let mut s = IdSet::new();
        if v.is_empty() {
            return s;
        }
        v.sort_unstable();
        s.grow_to(v[0] / 64, v[v.len() - 1] / 64);
        for id in v {
            s.words[(id / 64 - s.base) as usize] |= 1 << (id % 64);
        }
        s
    }
}
