//! Packed bit vectors and square bit matrices over GF(2).
//!
//! Everything in this crate encodes a sign s ∈ {−1,+1} as the bit b with
//! s = (−1)^b, so termwise sign products become XOR and all probability
//! kernels reduce to rank/parity computations on these buffers. Bit i of a
//! buffer lives at word i/64, position i%64 (little-endian in the index).

/// Packed bit buffer of fixed length.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitBuf {
    len: usize,
    words: Vec<u64>,
}

#[inline]
pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(64).max(1)
}

impl BitBuf {
    pub fn zeros(len: usize) -> Self {
        BitBuf {
            len,
            words: vec![0; words_for(len)],
        }
    }

    /// Buffer with exactly the given bits set.
    pub fn from_indices(len: usize, indices: &[usize]) -> Self {
        let mut b = BitBuf::zeros(len);
        for &i in indices {
            b.set(i, true);
        }
        b
    }

    /// Low `len` bits of a word, for small buffers.
    pub fn from_word(len: usize, word: u64) -> Self {
        debug_assert!(len <= 64);
        let mask = if len == 64 { !0 } else { (1u64 << len) - 1 };
        BitBuf {
            len,
            words: vec![word & mask],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        debug_assert!(i < self.len);
        let w = &mut self.words[i >> 6];
        if v {
            *w |= 1 << (i & 63);
        } else {
            *w &= !(1 << (i & 63));
        }
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    pub fn xor_with(&mut self, other: &BitBuf) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor_words(&mut self, other: &[u64]) {
        for (a, b) in self.words.iter_mut().zip(other) {
            *a ^= b;
        }
    }

    pub fn any(&self) -> bool {
        self.words.iter().any(|&w| w != 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Indices of set bits, ascending.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let bit = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some((wi << 6) | bit)
                }
            })
        })
    }

    /// Grow to `len` bits, new bits zero.
    pub fn widened(&self, len: usize) -> BitBuf {
        debug_assert!(len >= self.len);
        let mut words = self.words.clone();
        words.resize(words_for(len), 0);
        BitBuf { len, words }
    }
}

impl std::fmt::Debug for BitBuf {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitBuf[{}]{{", self.len)?;
        for (k, i) in self.iter_ones().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Apply the half-block map (u1,u2) <- (u2, u1^u2) to the first 2^n bits of
/// a row, leaving higher bits untouched. This is right-multiplication of a
/// row vector by the scale-n block transform (the matrix is symmetric, so
/// the same kernel also serves as the column action).
pub fn row_half_swap_xor(row: &mut [u64], n: u32) {
    let half = 1usize << (n - 1);
    if half < 64 {
        let w = &mut row[0];
        let mask = (1u64 << half) - 1;
        let lo = *w & mask;
        let hi = (*w >> half) & mask;
        let rest = *w & !((mask << half) | mask);
        *w = rest | hi | ((lo ^ hi) << half);
    } else {
        let hw = half >> 6;
        let (lo, rest) = row.split_at_mut(hw);
        let hi = &mut rest[..hw];
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let old_lo = *a;
            *a = *b;
            *b = old_lo ^ *b;
        }
    }
}

/// Apply (u1,u2) <- (u1^u2, u1) to the first 2^n bits of a row: the square
/// of the scale-n block transform, i.e. its inverse (the transform has
/// order three).
pub fn row_half_sq(row: &mut [u64], n: u32) {
    let half = 1usize << (n - 1);
    if half < 64 {
        let w = &mut row[0];
        let mask = (1u64 << half) - 1;
        let lo = *w & mask;
        let hi = (*w >> half) & mask;
        let rest = *w & !((mask << half) | mask);
        *w = rest | (lo ^ hi) | (lo << half);
    } else {
        let hw = half >> 6;
        let (lo, rest) = row.split_at_mut(hw);
        let hi = &mut rest[..hw];
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let old_lo = *a;
            *a ^= *b;
            *b = old_lo;
        }
    }
}

/// Square bit matrix with 2^m rows of 2^m bits, row-major.
///
/// Rows are contiguous word slices; all evolution kernels in this crate are
/// row operations so the layout stays cache-friendly.
#[derive(Clone, PartialEq, Eq)]
pub struct BitSquare {
    dim: usize,
    words_per_row: usize,
    data: Vec<u64>,
}

impl BitSquare {
    pub fn identity(dim: usize) -> Self {
        let words_per_row = words_for(dim);
        let mut data = vec![0u64; dim * words_per_row];
        for i in 0..dim {
            data[i * words_per_row + (i >> 6)] |= 1 << (i & 63);
        }
        BitSquare {
            dim,
            words_per_row,
            data,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    pub fn row_bitbuf(&self, i: usize) -> BitBuf {
        BitBuf {
            len: self.dim,
            words: self.row(i).to_vec(),
        }
    }

    /// Left-multiply by the scale-n block transform: rows (i, i+h) become
    /// (row_{i+h}, row_i ^ row_{i+h}) for i < h = 2^{n-1}. Costs h row ops.
    pub fn rows_apply_scale(&mut self, n: u32) {
        let h = 1usize << (n - 1);
        debug_assert!(2 * h <= self.dim);
        let wpr = self.words_per_row;
        let (lo, hi) = self.data.split_at_mut(h * wpr);
        for i in 0..h {
            let a = &mut lo[i * wpr..(i + 1) * wpr];
            let b = &mut hi[i * wpr..(i + 1) * wpr];
            for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                let old_lo = *x;
                *x = *y;
                *y = old_lo ^ *y;
            }
        }
    }

    /// Right-multiply every row by the inverse of the ascending composite
    /// of block transforms up to scale n (each transform is its own square
    /// root of the identity of order three, so the inverse composite is the
    /// ascending product of squares).
    pub fn rows_mul_inverse_composite(&mut self, n: u32) {
        let wpr = self.words_per_row;
        for r in self.data.chunks_mut(wpr) {
            for j in 1..=n {
                row_half_sq(r, j);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_roundtrip() {
        let mut b = BitBuf::zeros(130);
        b.set(0, true);
        b.set(64, true);
        b.set(129, true);
        assert!(b.get(0) && b.get(64) && b.get(129));
        assert!(!b.get(1) && !b.get(128));
        assert_eq!(b.iter_ones().collect::<Vec<_>>(), vec![0, 64, 129]);
        b.set(64, false);
        assert_eq!(b.count_ones(), 2);
    }

    #[test]
    fn half_swap_xor_small_and_large_agree() {
        // Check the in-word fast path against a bit-by-bit reference at the
        // 64-bit boundary scales.
        for n in 1..=8u32 {
            let len = 1usize << n.max(7);
            let mut b = BitBuf::zeros(len);
            for i in 0..len {
                b.set(i, (i * 2654435761) % 3 == 0);
            }
            let mut fast = b.clone();
            row_half_swap_xor(fast.words_mut(), n);
            let half = 1usize << (n - 1);
            let mut slow = b.clone();
            for i in 0..half {
                slow.set(i, b.get(i + half));
                slow.set(i + half, b.get(i) ^ b.get(i + half));
            }
            assert_eq!(fast, slow, "scale {n}");
        }
    }

    #[test]
    fn half_sq_is_square_of_half_swap_xor() {
        for n in 1..=8u32 {
            let len = 1usize << n.max(7);
            let mut b = BitBuf::zeros(len);
            for i in 0..len {
                b.set(i, (i * 976369) % 5 < 2);
            }
            let mut twice = b.clone();
            row_half_swap_xor(twice.words_mut(), n);
            row_half_swap_xor(twice.words_mut(), n);
            let mut sq = b.clone();
            row_half_sq(sq.words_mut(), n);
            assert_eq!(twice, sq, "scale {n}");
            // order three
            let mut thrice = twice.clone();
            row_half_swap_xor(thrice.words_mut(), n);
            assert_eq!(thrice, b);
        }
    }

    #[test]
    fn bitsquare_identity_rows() {
        let m = BitSquare::identity(130);
        for i in 0..130 {
            let r = m.row_bitbuf(i);
            assert_eq!(r.iter_ones().collect::<Vec<_>>(), vec![i]);
        }
    }

    #[test]
    fn bitsquare_scale_has_order_three() {
        let mut m = BitSquare::identity(256);
        for n in [1u32, 3, 7, 8] {
            m.rows_apply_scale(n);
            m.rows_apply_scale(n);
            m.rows_apply_scale(n);
        }
        assert!(m == BitSquare::identity(256));
    }

    #[test]
    fn inverse_composite_inverts_rows() {
        // Applying the composite on the left of the identity and then the
        // inverse composite on the right must return the identity.
        let mut m = BitSquare::identity(128);
        for j in 1..=5 {
            m.rows_apply_scale(j);
        }
        m.rows_mul_inverse_composite(5);
        assert!(m == BitSquare::identity(128));
    }
}
