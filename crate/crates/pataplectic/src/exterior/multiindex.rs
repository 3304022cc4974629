use crate::error::{Error, Result};
use std::fmt;

/// Strictly increasing tuple of coordinate indices (0-based internally).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MultiIndex(Vec<u16>);

impl MultiIndex {
    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    /// Caller guarantees the slice is strictly increasing.
    pub fn from_sorted(v: &[usize]) -> Self {
        debug_assert!(v.windows(2).all(|w| w[0] < w[1]));
        MultiIndex(v.iter().map(|&i| i as u16).collect())
    }

    pub fn single(i: usize) -> Self {
        MultiIndex(vec![i as u16])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&i| i as usize)
    }

    pub fn get(&self, k: usize) -> usize {
        self.0[k] as usize
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&(i as u16)).is_ok()
    }

    pub fn position(&self, i: usize) -> Option<usize> {
        self.0.binary_search(&(i as u16)).ok()
    }

    pub fn without(&self, k: usize) -> MultiIndex {
        let mut v = self.0.clone();
        v.remove(k);
        MultiIndex(v)
    }

    /// Insert `i` at the front and move it into place: returns the sign
    /// of `dq^i ∧ dq^I` relative to the sorted result, or `None` on repeat.
    pub fn insert_front(&self, i: usize) -> Option<(MultiIndex, i32)> {
        match self.0.binary_search(&(i as u16)) {
            Ok(_) => None,
            Err(pos) => {
                let mut v = self.0.clone();
                v.insert(pos, i as u16);
                Some((MultiIndex(v), if pos % 2 == 0 { 1 } else { -1 }))
            }
        }
    }

    /// `dq^self ∧ dq^other = sign · dq^merged`, or `None` if they share an index.
    pub fn merge(&self, other: &MultiIndex) -> Option<(MultiIndex, i32)> {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        let mut swaps = 0usize;
        while i < self.0.len() && j < other.0.len() {
            if self.0[i] == other.0[j] {
                return None;
            }
            if self.0[i] < other.0[j] {
                out.push(self.0[i]);
                i += 1;
            } else {
                // other[j] jumps over the remaining self entries
                swaps += self.0.len() - i;
                out.push(other.0[j]);
                j += 1;
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Some((MultiIndex(out), if swaps % 2 == 0 { 1 } else { -1 }))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.iter().map(|i| i + 1).collect::<Vec<_>>())
    }
}

/// Sort a tuple and return the permutation parity; 0 on a repeated index.
pub fn canonicalize_raw(idx: &[usize]) -> (Vec<usize>, i32) {
    let mut v = idx.to_vec();
    let mut sign = 1;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        sign = 0;
    }
    (v, sign)
}

/// Canonicalize a 1-based index tuple over coordinates `1..=dim`.
pub fn canonicalize(indices: &[usize], dim: usize) -> Result<(MultiIndex, i32)> {
    for &i in indices {
        if i == 0 || i > dim {
            return Err(Error::IndexOutOfRange { index: i, dim });
        }
    }
    let zero_based: Vec<usize> = indices.iter().map(|i| i - 1).collect();
    let (v, s) = canonicalize_raw(&zero_based);
    let mut w = v.clone();
    w.dedup();
    Ok((MultiIndex::from_sorted(&w), s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalize_examples() {
        let (m, s) = canonicalize(&[2, 1], 3).unwrap();
        assert_eq!((m.to_vec(), s), (vec![0, 1], -1));
        let (_, s) = canonicalize(&[1, 1], 3).unwrap();
        assert_eq!(s, 0);
        let (m, s) = canonicalize(&[3, 1, 2], 3).unwrap();
        assert_eq!((m.to_vec(), s), (vec![0, 1, 2], 1));
        assert!(canonicalize(&[4], 3).is_err());
        assert!(canonicalize(&[0], 3).is_err());
    }

    #[test]
    fn merge_sign_matches_sorting() {
        let a = MultiIndex::from_sorted(&[1, 4]);
        let b = MultiIndex::from_sorted(&[0, 3]);
        let (m, s) = a.merge(&b).unwrap();
        let (v, s2) = canonicalize_raw(&[1, 4, 0, 3]);
        assert_eq!(m.to_vec(), v);
        assert_eq!(s, s2);
        assert!(a.merge(&MultiIndex::single(4)).is_none());
    }
}
