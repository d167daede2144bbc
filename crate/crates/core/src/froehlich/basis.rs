//! Occupation-number basis `{n ∈ ℕ^{2M} : Σ n ≤ N}`.

use std::collections::HashMap;

/// Occupation vectors in lexicographic order with ladder tables.
#[derive(Debug, Clone)]
pub struct Basis {
    slots: usize,
    cap: usize,
    states: Vec<Vec<u8>>,
    /// `raise[b][m]`: index of `b + e_m`, if inside the cap.
    raise: Vec<Vec<Option<usize>>>,
    /// `lower[b][m]`: index of `b − e_m`, if `n_m > 0`.
    lower: Vec<Vec<Option<usize>>>,
}

impl Basis {
    /// All occupations of `slots` modes with total at most `cap`.
    pub fn new(slots: usize, cap: usize) -> Self {
        assert!(cap < u8::MAX as usize, "phonon cap too large");
        let mut states = Vec::new();
        let mut current = vec![0u8; slots];
        enumerate(&mut current, 0, cap, &mut states);
        let index: HashMap<&[u8], usize> = states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
        let mut raise = vec![vec![None; slots]; states.len()];
        let mut lower = vec![vec![None; slots]; states.len()];
        let mut scratch = vec![0u8; slots];
        for (b, s) in states.iter().enumerate() {
            for m in 0..slots {
                scratch.copy_from_slice(s);
                scratch[m] += 1;
                raise[b][m] = index.get(scratch.as_slice()).copied();
                if s[m] > 0 {
                    scratch[m] -= 2;
                    lower[b][m] = index.get(scratch.as_slice()).copied();
                }
            }
        }
        Basis {
            slots,
            cap,
            states,
            raise,
            lower,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn occupation(&self, b: usize) -> &[u8] {
        &self.states[b]
    }

    pub fn total(&self, b: usize) -> usize {
        self.states[b].iter().map(|&n| n as usize).sum()
    }

    pub fn raise(&self, b: usize, m: usize) -> Option<usize> {
        self.raise[b][m]
    }

    pub fn lower(&self, b: usize, m: usize) -> Option<usize> {
        self.lower[b][m]
    }

    /// Index of the occupation with slots permuted by `perm` (`n'_{perm(m)} = n_m`).
    pub fn permuted(&self, b: usize, perm: impl Fn(usize) -> usize) -> usize {
        let mut n = vec![0u8; self.slots];
        for (m, &v) in self.states[b].iter().enumerate() {
            n[perm(m)] = v;
        }
        self.states.binary_search(&n).expect("permutation preserves the total")
    }
}

fn enumerate(current: &mut Vec<u8>, slot: usize, left: usize, out: &mut Vec<Vec<u8>>) {
    if slot == current.len() {
        out.push(current.clone());
        return;
    }
    for n in 0..=left {
        current[slot] = n as u8;
        enumerate(current, slot + 1, left - n, out);
    }
    current[slot] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_stars_and_bars() {
        assert_eq!(Basis::new(6, 3).len(), 84);
        assert_eq!(Basis::new(0, 3).len(), 1);
        assert_eq!(Basis::new(4, 0).len(), 1);
        assert_eq!(Basis::new(2, 2).len(), 6);
    }

    #[test]
    fn sorted_and_ladders_consistent() {
        let b = Basis::new(4, 3);
        assert!(b.states.windows(2).all(|w| w[0] < w[1]));
        for i in 0..b.len() {
            for m in 0..4 {
                if let Some(j) = b.raise(i, m) {
                    assert_eq!(b.lower(j, m), Some(i));
                    assert_eq!(b.total(j), b.total(i) + 1);
                } else {
                    assert_eq!(b.total(i), 3);
                }
            }
        }
    }
}
