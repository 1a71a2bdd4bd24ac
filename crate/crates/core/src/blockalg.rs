//! Algebra of ±1 words: dyadic blocks, their concatenation and termwise
//! product, the order-three transforms `tau`, and the coding maps `gamma`.
//!
//! An n-block is a word of length 2^n over {−1,+1}. Signs are stored
//! bit-packed with s = (−1)^b, so the termwise product of two blocks is the
//! XOR of their packed words. `tau(n, ·)` rewrites the first n-block
//! (w1, w2) of a prefix as (w2, w1 .× w2) and fixes everything above it;
//! `gamma(n, ·)` codes an n-block to a word of length 3^n by the recursion
//! with base case a b ↦ a b (a×b).

use crate::bits::{row_half_swap_xor, BitBuf};
use crate::error::{Error, Result};

fn parse_sign_literal(text: &str) -> Result<BitBuf> {
    let mut bits = BitBuf::zeros(text.len());
    for (i, c) in text.chars().enumerate() {
        match c {
            '+' => {}
            '-' => bits.set(i, true),
            found => return Err(Error::BadSignLiteral { found }),
        }
    }
    Ok(bits)
}

fn render_signs(bits: &BitBuf) -> String {
    (0..bits.len())
        .map(|i| if bits.get(i) { '-' } else { '+' })
        .collect()
}

/// A ±1 word of length 2^order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SignBlock {
    order: u32,
    bits: BitBuf,
}

impl SignBlock {
    /// All-plus block of the given order.
    pub fn all_plus(order: u32) -> Self {
        SignBlock {
            order,
            bits: BitBuf::zeros(1 << order),
        }
    }

    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        let len = signs.len();
        if !len.is_power_of_two() {
            return Err(Error::LiteralLengthNotPowerOfTwo { len });
        }
        let order = len.trailing_zeros();
        let mut bits = BitBuf::zeros(len);
        for (i, &s) in signs.iter().enumerate() {
            debug_assert!(s == 1 || s == -1);
            bits.set(i, s == -1);
        }
        Ok(SignBlock { order, bits })
    }

    /// Parse a literal over {+,-}; leftmost character is coordinate 0.
    pub fn parse(text: &str) -> Result<Self> {
        let len = text.len();
        if !len.is_power_of_two() {
            return Err(Error::LiteralLengthNotPowerOfTwo { len });
        }
        Ok(SignBlock {
            order: len.trailing_zeros(),
            bits: parse_sign_literal(text)?,
        })
    }

    /// The block of order n whose letters are the bits of `index`
    /// (coordinate i = bit i). Enumerating index over 0..2^(2^n) is the
    /// exhaustive scan of all n-blocks.
    pub fn from_index(order: u32, index: u64) -> Self {
        let len = 1usize << order;
        debug_assert!(len <= 64);
        SignBlock {
            order,
            bits: BitBuf::from_word(len, index),
        }
    }

    #[inline]
    pub fn order(&self) -> u32 {
        self.order
    }

    #[inline]
    pub fn len(&self) -> usize {
        1 << self.order
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn sign(&self, i: usize) -> i8 {
        if self.bits.get(i) {
            -1
        } else {
            1
        }
    }

    #[inline]
    pub fn bits(&self) -> &BitBuf {
        &self.bits
    }

    pub(crate) fn from_bits(order: u32, bits: BitBuf) -> Self {
        debug_assert_eq!(bits.len(), 1 << order);
        SignBlock { order, bits }
    }
}

impl std::fmt::Display for SignBlock {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&render_signs(&self.bits))
    }
}

impl std::fmt::Debug for SignBlock {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SignBlock({self})")
    }
}

/// A ±1 word of length 3^order, the image of an n-block under `gamma`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ColourWord {
    order: u32,
    bits: BitBuf,
}

impl ColourWord {
    pub(crate) fn from_bits(order: u32, bits: BitBuf) -> Self {
        ColourWord { order, bits }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let len = text.len();
        let mut order = 0u32;
        let mut p = 1usize;
        while p < len {
            p *= 3;
            order += 1;
        }
        if p != len || order == 0 {
            return Err(Error::InvalidArgument(format!(
                "colour word length {len} is not 3^n for n >= 1"
            )));
        }
        Ok(ColourWord {
            order,
            bits: parse_sign_literal(text)?,
        })
    }

    #[inline]
    pub fn order(&self) -> u32 {
        self.order
    }

    #[inline]
    pub fn len(&self) -> usize {
        3usize.pow(self.order)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn sign(&self, i: usize) -> i8 {
        if self.bits.get(i) {
            -1
        } else {
            1
        }
    }

    /// Termwise product; orders must match.
    pub fn termwise(&self, other: &ColourWord) -> Result<ColourWord> {
        if self.order != other.order {
            return Err(Error::OrderMismatch {
                left: self.order,
                right: other.order,
            });
        }
        let mut bits = self.bits.clone();
        bits.xor_with(&other.bits);
        Ok(ColourWord {
            order: self.order,
            bits,
        })
    }

    #[inline]
    pub fn bits(&self) -> &BitBuf {
        &self.bits
    }
}

impl std::fmt::Display for ColourWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&render_signs(&self.bits))
    }
}

impl std::fmt::Debug for ColourWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ColourWord({self})")
    }
}

/// Finite truncation of an infinite ±1 sequence: 2^horizon coordinates.
/// Applying `tau(n, ·)` requires n <= horizon.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct YPrefix {
    horizon: u32,
    bits: BitBuf,
}

impl YPrefix {
    pub fn all_plus(horizon: u32) -> Self {
        YPrefix {
            horizon,
            bits: BitBuf::zeros(1 << horizon),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let len = text.len();
        if !len.is_power_of_two() {
            return Err(Error::LiteralLengthNotPowerOfTwo { len });
        }
        Ok(YPrefix {
            horizon: len.trailing_zeros(),
            bits: parse_sign_literal(text)?,
        })
    }

    /// Uniform random prefix.
    pub fn random(horizon: u32, rng: &mut crate::rng::SplitMix64) -> Self {
        let mut bits = BitBuf::zeros(1 << horizon);
        let len = bits.len();
        rng.fill_bits(bits.words_mut(), len);
        YPrefix { horizon, bits }
    }

    /// Embed a block as the first coordinates, all-plus above, at the given
    /// horizon (>= block order).
    pub fn from_block(block: &SignBlock, horizon: u32) -> Result<Self> {
        if horizon < block.order {
            return Err(Error::HorizonTooSmall {
                need: block.order,
                have: horizon,
            });
        }
        let bits = block.bits.widened(1 << horizon);
        Ok(YPrefix { horizon, bits })
    }

    #[inline]
    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    #[inline]
    pub fn len(&self) -> usize {
        1 << self.horizon
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn sign(&self, i: usize) -> i8 {
        if self.bits.get(i) {
            -1
        } else {
            1
        }
    }

    /// First n-block.
    pub fn first_block(&self, n: u32) -> Result<SignBlock> {
        if n > self.horizon {
            return Err(Error::HorizonTooSmall {
                need: n,
                have: self.horizon,
            });
        }
        let len = 1usize << n;
        let mut bits = BitBuf::zeros(len);
        for i in 0..len {
            bits.set(i, self.bits.get(i));
        }
        Ok(SignBlock { order: n, bits })
    }

    /// Termwise product of two prefixes of equal horizon.
    pub fn termwise(&self, other: &YPrefix) -> Result<YPrefix> {
        if self.horizon != other.horizon {
            return Err(Error::OrderMismatch {
                left: self.horizon,
                right: other.horizon,
            });
        }
        let mut bits = self.bits.clone();
        bits.xor_with(&other.bits);
        Ok(YPrefix {
            horizon: self.horizon,
            bits,
        })
    }

    #[inline]
    pub fn bits(&self) -> &BitBuf {
        &self.bits
    }

    pub(crate) fn bits_mut(&mut self) -> &mut BitBuf {
        &mut self.bits
    }
}

impl std::fmt::Display for YPrefix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&render_signs(&self.bits))
    }
}

impl std::fmt::Debug for YPrefix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "YPrefix({self})")
    }
}

/// Concatenation of two blocks of equal order n into an (n+1)-block.
pub fn concat(b1: &SignBlock, b2: &SignBlock) -> Result<SignBlock> {
    if b1.order != b2.order {
        return Err(Error::OrderMismatch {
            left: b1.order,
            right: b2.order,
        });
    }
    let half = 1usize << b1.order;
    let mut bits = BitBuf::zeros(2 * half);
    for i in 0..half {
        bits.set(i, b1.bits.get(i));
        bits.set(i + half, b2.bits.get(i));
    }
    Ok(SignBlock {
        order: b1.order + 1,
        bits,
    })
}

/// Termwise product of two blocks of equal order (XOR in bit encoding).
pub fn termwise_product(b1: &SignBlock, b2: &SignBlock) -> Result<SignBlock> {
    if b1.order != b2.order {
        return Err(Error::OrderMismatch {
            left: b1.order,
            right: b2.order,
        });
    }
    let mut bits = b1.bits.clone();
    bits.xor_with(&b2.bits);
    Ok(SignBlock {
        order: b1.order,
        bits,
    })
}

/// Split an n-block (n >= 1) into its two halves; inverse of `concat`.
pub fn split(b: &SignBlock) -> Result<(SignBlock, SignBlock)> {
    if b.order == 0 {
        return Err(Error::SplitOrderZero);
    }
    let half = 1usize << (b.order - 1);
    let mut lo = BitBuf::zeros(half);
    let mut hi = BitBuf::zeros(half);
    for i in 0..half {
        lo.set(i, b.bits.get(i));
        hi.set(i, b.bits.get(i + half));
    }
    Ok((
        SignBlock {
            order: b.order - 1,
            bits: lo,
        },
        SignBlock {
            order: b.order - 1,
            bits: hi,
        },
    ))
}

/// The scale-n transform: the first n-block (w1, w2) becomes
/// (w2, w1 .× w2); coordinates with index >= 2^n are unchanged. Requires
/// n >= 1 and n <= horizon. Has order three and is GF(2)-linear in bit
/// encoding.
pub fn tau(n: u32, y: &YPrefix) -> Result<YPrefix> {
    if n == 0 {
        return Err(Error::InvalidArgument("tau requires n >= 1".into()));
    }
    if n > y.horizon {
        return Err(Error::HorizonTooSmall {
            need: n,
            have: y.horizon,
        });
    }
    let mut out = y.clone();
    row_half_swap_xor(out.bits.words_mut(), n);
    Ok(out)
}

pub(crate) fn tau_in_place(n: u32, y: &mut YPrefix) -> Result<()> {
    if n == 0 || n > y.horizon {
        return Err(Error::HorizonTooSmall {
            need: n,
            have: y.horizon,
        });
    }
    row_half_swap_xor(y.bits.words_mut(), n);
    Ok(())
}

/// The coding map of order n >= 1, by the recursion
/// gamma_{n+1}(w1 w2) = gamma_n(w1) gamma_n(w2) gamma_n(w1 .× w2)
/// with base case gamma_1(a b) = a b (a×b). Iterative (explicit work
/// stack), so deep orders do not recurse on the call stack.
pub fn gamma(n: u32, b: &SignBlock) -> Result<ColourWord> {
    if n == 0 {
        return Err(Error::InvalidArgument("gamma requires n >= 1".into()));
    }
    if b.order != n {
        return Err(Error::OrderMismatch {
            left: n,
            right: b.order,
        });
    }
    let out_len = 3usize
        .checked_pow(n)
        .ok_or(Error::InvalidArgument(format!("3^{n} overflows")))?;
    let mut out = BitBuf::zeros(out_len);
    // Frames carry (output offset, block); an order-k block expands into
    // three order-(k-1) children covering consecutive 3^{k-1} letter spans.
    let mut stack: Vec<(usize, SignBlock)> = vec![(0, b.clone())];
    while let Some((offset, block)) = stack.pop() {
        if block.order == 1 {
            let a = block.bits.get(0);
            let c = block.bits.get(1);
            out.set(offset, a);
            out.set(offset + 1, c);
            out.set(offset + 2, a ^ c);
        } else {
            let (w1, w2) = split(&block)?;
            let prod = termwise_product(&w1, &w2)?;
            let span = 3usize.pow(block.order - 1);
            stack.push((offset + 2 * span, prod));
            stack.push((offset + span, w2));
            stack.push((offset, w1));
        }
    }
    Ok(ColourWord::from_bits(n, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn sb(text: &str) -> SignBlock {
        SignBlock::parse(text).unwrap()
    }

    #[test]
    fn concat_examples() {
        assert_eq!(concat(&sb("+"), &sb("-")).unwrap().to_string(), "+-");
        assert_eq!(concat(&sb("+-"), &sb("--")).unwrap().to_string(), "+---");
        assert_eq!(concat(&sb("-"), &sb("-")).unwrap().to_string(), "--");
        assert!(matches!(
            concat(&sb("+"), &sb("+-")),
            Err(Error::OrderMismatch { .. })
        ));
    }

    #[test]
    fn termwise_examples() {
        assert_eq!(termwise_product(&sb("+-"), &sb("+-")).unwrap().to_string(), "++");
        assert_eq!(termwise_product(&sb("++"), &sb("-+")).unwrap().to_string(), "-+");
        assert_eq!(termwise_product(&sb("--"), &sb("+-")).unwrap().to_string(), "-+");
    }

    #[test]
    fn split_examples() {
        let (a, b) = split(&sb("+-")).unwrap();
        assert_eq!((a.to_string().as_str(), b.to_string().as_str()), ("+", "-"));
        let (a, b) = split(&sb("+---")).unwrap();
        assert_eq!((a.to_string().as_str(), b.to_string().as_str()), ("+-", "--"));
        assert!(matches!(split(&sb("+")), Err(Error::SplitOrderZero)));
    }

    #[test]
    fn tau_examples() {
        // first 1-block (-1,+1) -> (+1,-1)
        let y = YPrefix::parse("-+").unwrap();
        assert_eq!(tau(1, &y).unwrap().to_string(), "+-");
        // all-plus block is a fixed point
        let y = YPrefix::parse("++").unwrap();
        assert_eq!(tau(1, &y).unwrap().to_string(), "++");
        // n=2: (+1,-1,-1,+1, rest) -> (-1,+1,-1,-1, rest unchanged)
        let y = YPrefix::parse("+--+++--").unwrap();
        assert_eq!(tau(2, &y).unwrap().to_string(), "-+--++--");
        // horizon too small
        let y = YPrefix::parse("+-").unwrap();
        assert!(matches!(
            tau(2, &y),
            Err(Error::HorizonTooSmall { need: 2, have: 1 })
        ));
    }

    #[test]
    fn gamma_base_case_table() {
        // a b -> a b (a*b), all four 1-blocks
        assert_eq!(gamma(1, &sb("++")).unwrap().to_string(), "+++");
        assert_eq!(gamma(1, &sb("+-")).unwrap().to_string(), "+--");
        assert_eq!(gamma(1, &sb("-+")).unwrap().to_string(), "-+-");
        assert_eq!(gamma(1, &sb("--")).unwrap().to_string(), "--+");
    }

    #[test]
    fn gamma_order_two_example() {
        assert_eq!(gamma(2, &sb("+++-")).unwrap().to_string(), "++++--+--");
    }

    #[test]
    fn gamma_recursion_matches_definition() {
        let mut rng = SplitMix64::new(0xC0FFEE);
        for n in 1..=7u32 {
            for _ in 0..40 {
                let w1 = random_block(n, &mut rng);
                let w2 = random_block(n, &mut rng);
                let w = concat(&w1, &w2).unwrap();
                let got = gamma(n + 1, &w).unwrap();
                let g1 = gamma(n, &w1).unwrap();
                let g2 = gamma(n, &w2).unwrap();
                let g3 = gamma(n, &termwise_product(&w1, &w2).unwrap()).unwrap();
                let span = 3usize.pow(n);
                for i in 0..span {
                    assert_eq!(got.sign(i), g1.sign(i));
                    assert_eq!(got.sign(i + span), g2.sign(i));
                    assert_eq!(got.sign(i + 2 * span), g3.sign(i));
                }
            }
        }
    }

    fn random_block(order: u32, rng: &mut SplitMix64) -> SignBlock {
        let mut bits = BitBuf::zeros(1 << order);
        let len = bits.len();
        rng.fill_bits(bits.words_mut(), len);
        SignBlock::from_bits(order, bits)
    }

    #[test]
    fn tau_order_three_exhaustive_small() {
        for n in 1..=4u32 {
            let len = 1usize << n;
            for idx in 0..(1u64 << len) {
                let block = SignBlock::from_index(n, idx);
                let y = YPrefix::from_block(&block, n).unwrap();
                let once = tau(n, &y).unwrap();
                let thrice = tau(n, &tau(n, &once).unwrap()).unwrap();
                assert_eq!(thrice, y);
            }
        }
    }

    #[test]
    fn tau_is_bijection_on_first_block() {
        for n in 1..=4u32 {
            let len = 1usize << n;
            let mut seen = vec![false; 1 << len];
            for idx in 0..(1u64 << len) {
                let y = YPrefix::from_block(&SignBlock::from_index(n, idx), n).unwrap();
                let image = tau(n, &y).unwrap();
                let key = image.bits().words()[0] as usize;
                assert!(!seen[key]);
                seen[key] = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(matches!(
            SignBlock::parse("+x"),
            Err(Error::BadSignLiteral { found: 'x' })
        ));
        assert!(matches!(
            SignBlock::parse("+-+"),
            Err(Error::LiteralLengthNotPowerOfTwo { len: 3 })
        ));
    }

    proptest! {
        #[test]
        fn split_concat_roundtrip(idx1 in 0u64..256, idx2 in 0u64..256) {
            let b1 = SignBlock::from_index(3, idx1);
            let b2 = SignBlock::from_index(3, idx2);
            let joined = concat(&b1, &b2).unwrap();
            let (l, r) = split(&joined).unwrap();
            prop_assert_eq!(l, b1);
            prop_assert_eq!(r, b2);
        }

        #[test]
        fn tau_cubed_random(seed in any::<u64>(), n in 1u32..=10) {
            let mut rng = SplitMix64::new(seed);
            let y = YPrefix::random(10, &mut rng);
            let t1 = tau(n, &y).unwrap();
            let t3 = tau(n, &tau(n, &t1).unwrap()).unwrap();
            prop_assert_eq!(t3, y);
        }

        #[test]
        fn tau_gf2_linear(seed in any::<u64>(), n in 1u32..=8) {
            let mut rng = SplitMix64::new(seed);
            let y = YPrefix::random(8, &mut rng);
            let z = YPrefix::random(8, &mut rng);
            let lhs = tau(n, &y.termwise(&z).unwrap()).unwrap();
            let rhs = tau(n, &y).unwrap().termwise(&tau(n, &z).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn gamma_respects_products(seed in any::<u64>(), n in 1u32..=6) {
            let mut rng = SplitMix64::new(seed);
            let w1 = random_block(n, &mut rng);
            let w2 = random_block(n, &mut rng);
            let lhs = gamma(n, &termwise_product(&w1, &w2).unwrap()).unwrap();
            let rhs = gamma(n, &w1).unwrap().termwise(&gamma(n, &w2).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
