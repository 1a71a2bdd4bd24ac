//! Exact and Monte-Carlo conditional probabilities of colour events, and
//! the order-2 / order-3 relative-mixing experiments.
//!
//! Conditioning on the base factor is conditioning on the base level x:
//! the fiber law given x of any colour cylinder is determined by the
//! parity sets of the colour coordinate along the orbit, so every
//! probability is an exact GF(2) rank computation (a dyadic rational).
//! When an experiment window crosses the top of the simulated tower, the
//! conditional law refines over the three extension columns with weight
//! 1/3 each, recursively; results are then exact rationals with
//! denominator 2^a 3^b.
//!
//! A crossing from a point lying on top of *every* tower spawns an
//! infinite self-similar chain of refinements (the carry chain of the
//! adding machine). The resolver closes that tail exactly: consecutive
//! chain steps differ only by the scale of the crossing composite, which
//! relabels the post-crossing parity sets by a coordinate shift and
//! leaves every rank and consistency question unchanged. The closure is
//! certified at run time (scale sequences agree, post-crossing sets are
//! supported above the chain scale and match under the shift) and
//! otherwise reported as a resolution-depth error.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::bits::BitBuf;
use crate::blockalg::{SignBlock, YPrefix};
use crate::cocycle::{colour_run, CharEngine, CharSet, CocycleAction, InversePrefixEngine};
use crate::error::{Error, Result};
use crate::rankone::{ConstructionSpec, ExtendPolicy, LevelPoint};
use crate::rng::SplitMix64;

/// A colour cylinder: the colour at time t equals the given sign, for
/// every atom. Times are distinct, the atom list nonempty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSpec {
    atoms: Vec<(u64, i8)>,
}

impl EventSpec {
    pub fn new(atoms: Vec<(u64, i8)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::ParseEvent("event needs at least one atom".into()));
        }
        for &(_, s) in &atoms {
            if s != 1 && s != -1 {
                return Err(Error::ParseEvent(format!("bad sign {s}")));
            }
        }
        let mut times: Vec<u64> = atoms.iter().map(|a| a.0).collect();
        times.sort_unstable();
        if times.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::ParseEvent("atom times must be distinct".into()));
        }
        Ok(EventSpec { atoms })
    }

    /// Parse comma-separated `time:sign` atoms, e.g. `0:+,5:-`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        for part in text.split(',') {
            let part = part.trim();
            let (t, s) = part
                .split_once(':')
                .ok_or_else(|| Error::ParseEvent(format!("expected time:sign, got {part:?}")))?;
            let time: u64 = t
                .trim()
                .parse()
                .map_err(|_| Error::ParseEvent(format!("bad time {t:?}")))?;
            let sign = match s.trim() {
                "+" => 1,
                "-" => -1,
                other => return Err(Error::ParseEvent(format!("bad sign {other:?}"))),
            };
            atoms.push((time, sign));
        }
        EventSpec::new(atoms)
    }

    pub fn atoms(&self) -> &[(u64, i8)] {
        &self.atoms
    }

    pub fn max_time(&self) -> u64 {
        self.atoms.iter().map(|a| a.0).max().unwrap_or(0)
    }

    /// The event shifted k steps into the future: atoms (t + k, s).
    pub fn shifted(&self, k: u64) -> EventSpec {
        EventSpec {
            atoms: self.atoms.iter().map(|&(t, s)| (t + k, s)).collect(),
        }
    }
}

impl std::fmt::Display for EventSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, (t, s)) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}:{}", if *s >= 0 { '+' } else { '-' })?;
        }
        Ok(())
    }
}

/// An exact dyadic probability: 2^{-log2_denominator} when consistent,
/// 0 otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicProb {
    pub consistent: bool,
    pub log2_denominator: u32,
}

impl DyadicProb {
    pub fn certain() -> Self {
        DyadicProb {
            consistent: true,
            log2_denominator: 0,
        }
    }

    pub fn impossible() -> Self {
        DyadicProb {
            consistent: false,
            log2_denominator: 0,
        }
    }

    pub fn dyadic(log2_denominator: u32) -> Self {
        DyadicProb {
            consistent: true,
            log2_denominator,
        }
    }

    pub fn value(&self) -> BigRational {
        if !self.consistent {
            return BigRational::zero();
        }
        BigRational::new(BigInt::one(), BigInt::from(2u8).pow(self.log2_denominator))
    }

    /// Product of independent dyadic probabilities.
    pub fn product(&self, other: &DyadicProb) -> DyadicProb {
        if !self.consistent || !other.consistent {
            DyadicProb::impossible()
        } else {
            DyadicProb::dyadic(self.log2_denominator + other.log2_denominator)
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.consistent {
            0.5f64.powi(self.log2_denominator as i32)
        } else {
            0.0
        }
    }
}

impl std::fmt::Display for DyadicProb {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&decimal12(&self.value()))
    }
}

/// Render an exact rational with 12 significant digits, round-half-even,
/// trailing zeros stripped. Plain decimal, no exponent notation.
pub fn decimal12(value: &BigRational) -> String {
    const DIGITS: u32 = 12;
    if value.is_zero() {
        return "0".to_string();
    }
    let negative = value.is_negative();
    let num = value.numer().abs();
    let den = value.denom().abs();
    // exponent e with 10^e <= num/den < 10^{e+1}
    let ten = BigInt::from(10u8);
    let mut e: i64 = num.to_string().len() as i64 - den.to_string().len() as i64;
    let pow = |k: i64| -> (BigInt, BigInt) {
        // (num, den) scaled so the comparison num/den >= 10^k reads directly
        if k >= 0 {
            (num.clone(), &den * ten.pow(k as u32))
        } else {
            (&num * ten.pow((-k) as u32), den.clone())
        }
    };
    loop {
        let (a, b) = pow(e);
        if a < b {
            e -= 1;
            continue;
        }
        let (a2, b2) = pow(e + 1);
        if a2 >= b2 {
            e += 1;
            continue;
        }
        break;
    }
    // q = round(num/den * 10^{DIGITS-1-e}), half to even
    let shift = DIGITS as i64 - 1 - e;
    let (scaled_num, scaled_den) = if shift >= 0 {
        (&num * ten.pow(shift as u32), den.clone())
    } else {
        (num.clone(), &den * ten.pow((-shift) as u32))
    };
    let mut q = &scaled_num / &scaled_den;
    let rem = &scaled_num - &q * &scaled_den;
    let twice = &rem * BigInt::from(2u8);
    if twice > scaled_den || (twice == scaled_den && (&q % 2) == BigInt::one()) {
        q += 1;
    }
    let mut digits = q.to_string();
    // rounding may carry into a 13th digit (e.g. 999... -> 1000...)
    if digits.len() as u32 > DIGITS {
        e += 1;
        digits.truncate(DIGITS as usize);
    }
    debug_assert_eq!(digits.len() as u32, DIGITS);
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if e >= 0 {
        let point = (e + 1) as usize;
        out.push_str(&digits[..point.min(digits.len())]);
        if point < digits.len() {
            out.push('.');
            out.push_str(&digits[point..]);
        } else {
            for _ in digits.len()..point {
                out.push('0');
            }
        }
    } else {
        out.push_str("0.");
        for _ in 0..(-e - 1) {
            out.push('0');
        }
        out.push_str(&digits);
    }
    // strip trailing zeros in the fractional part
    if out.contains('.') {
        while out.ends_with('0') {
            out.pop();
        }
        if out.ends_with('.') {
            out.pop();
        }
    }
    out
}

/// Exact probability, over a uniform fiber point, that every character
/// takes its prescribed sign: 2^{-rank} of the GF(2) system when the sign
/// pattern respects every dependency, 0 otherwise.
pub fn pattern_prob(chars: &[CharSet], signs: &[i8]) -> Result<DyadicProb> {
    if chars.len() != signs.len() {
        return Err(Error::InvalidArgument(
            "pattern_prob wants as many signs as characters".into(),
        ));
    }
    let Some(first) = chars.first() else {
        return Ok(DyadicProb::certain());
    };
    let horizon = first.horizon();
    // reduced basis: (pivot, vector, sign bit), vectors mutually reduced
    let mut basis: Vec<(usize, BitBuf, bool)> = Vec::new();
    for (set, &sign) in chars.iter().zip(signs) {
        if set.horizon() != horizon {
            return Err(Error::HorizonMismatch);
        }
        let mut v = set.bits().clone();
        let mut s = sign == -1;
        for (pivot, bv, bs) in &basis {
            if v.get(*pivot) {
                v.xor_with(bv);
                s ^= bs;
            }
        }
        match v.iter_ones().next() {
            None => {
                if s {
                    return Ok(DyadicProb::impossible());
                }
            }
            Some(pivot) => {
                for (_, bv, bs) in basis.iter_mut() {
                    if bv.get(pivot) {
                        bv.xor_with(&v);
                        *bs ^= s;
                    }
                }
                basis.push((pivot, v, s));
            }
        }
    }
    Ok(DyadicProb::dyadic(basis.len() as u32))
}

/// Options for exact tower-top resolution.
#[derive(Debug, Clone, Copy)]
pub struct ResolveOptions {
    /// Maximum number of re-embeddings (distinct crossings) per branch;
    /// self-similar carry chains are closed exactly and do not count.
    pub depth_bound: u32,
}

impl Default for ResolveOptions {
    fn default() -> Self {
        ResolveOptions { depth_bound: 4 }
    }
}

/// One branch of the refined conditional law: the parity sets of the
/// colour at times 0..=tmax, carrying an exact weight. Weights over all
/// branches sum to one.
#[derive(Clone)]
pub struct Branch {
    pub weight: BigRational,
    pub sets: Vec<CharSet>,
}

enum Tracker {
    Scout,
    Full(CharEngine),
}

struct Frame {
    tower: u32,
    level: u64,
    time: u64,
    weight: BigRational,
    depth: u32,
    no_embed: bool,
    tracker: Tracker,
    sets: Vec<CharSet>,
    scales: Vec<u32>,
}

impl Frame {
    fn fork(&self) -> Frame {
        Frame {
            tower: self.tower,
            level: self.level,
            time: self.time,
            weight: self.weight.clone(),
            depth: self.depth,
            no_embed: self.no_embed,
            tracker: match &self.tracker {
                Tracker::Scout => Tracker::Scout,
                Tracker::Full(e) => Tracker::Full(e.clone()),
            },
            sets: self.sets.clone(),
            scales: self.scales.clone(),
        }
    }
}

struct Resolver<'a> {
    spec: &'a ConstructionSpec,
    heights: Vec<u64>,
    tmax: u64,
    bound: u32,
    max_scale: u32,
}

impl<'a> Resolver<'a> {
    fn new(spec: &'a ConstructionSpec, tmax: u64, bound: u32) -> Self {
        Resolver {
            spec,
            heights: vec![0, spec.h1()],
            tmax,
            bound,
            max_scale: 0,
        }
    }

    fn height_at(&mut self, tower: u32) -> Result<u64> {
        while self.heights.len() <= tower as usize {
            let k = self.heights.len() as u32;
            let h = self.heights[k as usize - 1]
                .checked_mul(3)
                .and_then(|v| v.checked_add(self.spec.spacer_total()))
                .ok_or(Error::HeightOverflow { tower: k })?;
            self.heights.push(h);
        }
        Ok(self.heights[tower as usize])
    }

    fn column_start(&mut self, tower: u32, column: u32) -> Result<u64> {
        let h = self.height_at(tower)?;
        let mut start = u64::from(column) * h;
        for i in 0..column as usize {
            start += self.spec.spacers()[i];
        }
        Ok(start)
    }

    fn action_at(&mut self, tower: u32, level: u64) -> Result<CocycleAction> {
        self.height_at(tower)?;
        let p = LevelPoint::new(tower, level, ExtendPolicy::Error);
        Ok(match self.spec.n_of_x_with(&self.heights, &p)? {
            None => CocycleAction::Identity,
            Some(n) => CocycleAction::Composite(n),
        })
    }

    fn apply(&mut self, fr: &mut Frame, action: CocycleAction) -> Result<()> {
        let scale = action.scale();
        self.max_scale = self.max_scale.max(scale);
        fr.scales.push(scale);
        if let Tracker::Full(engine) = &mut fr.tracker {
            engine.apply(action)?;
        }
        Ok(())
    }

    fn record(&self, fr: &mut Frame) {
        if let Tracker::Full(engine) = &fr.tracker {
            fr.sets.push(engine.colour_set());
        }
    }

    fn walk(&mut self, mut fr: Frame, out: &mut Vec<Frame>) -> Result<()> {
        loop {
            // invariant: the set at fr.time is already recorded
            if fr.time == self.tmax {
                out.push(fr);
                return Ok(());
            }
            let h = self.height_at(fr.tower)?;
            if fr.level == h - 1 {
                return self.branch(fr, out);
            }
            let action = self.action_at(fr.tower, fr.level)?;
            self.apply(&mut fr, action)?;
            fr.level += 1;
            fr.time += 1;
            self.record(&mut fr);
        }
    }

    /// Refine a point on top of the simulated tower over the three
    /// extension columns, weight 1/3 each.
    fn branch(&mut self, fr: Frame, out: &mut Vec<Frame>) -> Result<()> {
        if fr.no_embed || fr.depth >= self.bound {
            return Err(Error::ResolutionDepth { bound: self.bound });
        }
        let h_next = self.height_at(fr.tower + 1)?;
        let third = BigRational::new(BigInt::one(), BigInt::from(3u8));
        for column in 0..3u32 {
            let start = self.column_start(fr.tower, column)?;
            let mut child = fr.fork();
            child.tower += 1;
            child.level += start;
            child.weight *= &third;
            child.depth += 1;
            if child.level == h_next - 1 {
                // the embedded point is again a tower top: the carry chain
                self.close_chain(child, out)?;
            } else {
                self.walk(child, out)?;
            }
        }
        Ok(())
    }

    /// Close the self-similar chain of repeated tower-top embeddings.
    ///
    /// The chain node sits on top of tower U with tail mass w. Its
    /// resolving children at chain step q (q = 1, 2, ...) apply the
    /// crossing composite of scale U+q and then identical lower-scale
    /// steps, so their colour parity sets differ only by shifting the
    /// part above 2^{U+q-1} up by one scale; ranks and consistency of
    /// every queried pattern are therefore the same at each step, and the
    /// tail sums to weight w/2 on each of the two step-1 representatives.
    /// The shift structure is certified against the step-2 children.
    fn close_chain(&mut self, chain: Frame, out: &mut Vec<Frame>) -> Result<()> {
        let u = chain.tower;
        let fam_a = self.probe_pair(&chain)?;
        let h2 = self.height_at(u + 1)?;
        let start2 = self.column_start(u, 2)?;
        let mut node2 = chain.fork();
        node2.tower += 1;
        node2.level += start2;
        debug_assert_eq!(node2.level, h2 - 1);
        let fam_b = self.probe_pair(&node2)?;
        self.certify_chain(&chain, &fam_a, &fam_b, u)?;
        let half = &chain.weight / BigInt::from(2u8);
        for mut probe in fam_a {
            probe.weight = half.clone();
            out.push(probe);
        }
        Ok(())
    }

    /// The two immediately-resolving embeddings (columns 0 and 1) of a
    /// chain node, run to tmax with no further embedding allowed.
    fn probe_pair(&mut self, node: &Frame) -> Result<Vec<Frame>> {
        let mut probes = Vec::with_capacity(2);
        for column in 0..2u32 {
            let start = self.column_start(node.tower, column)?;
            let mut child = node.fork();
            child.tower += 1;
            child.level += start;
            child.no_embed = true;
            let mut local = Vec::with_capacity(1);
            self.walk(child, &mut local)?;
            debug_assert_eq!(local.len(), 1);
            probes.push(local.pop().expect("single branch"));
        }
        Ok(probes)
    }

    fn certify_chain(
        &mut self,
        chain: &Frame,
        fam_a: &[Frame],
        fam_b: &[Frame],
        u: u32,
    ) -> Result<()> {
        let fail = || Error::ResolutionDepth { bound: self.bound };
        let t0 = chain.time as usize;
        let cut = 1usize << u;
        for (a, b) in fam_a.iter().zip(fam_b) {
            // Crossing composites at scales U+1 and U+2, then identical
            // lower-scale steps.
            let sa = &a.scales[t0..];
            let sb = &b.scales[t0..];
            if sa.len() != sb.len()
                || sa.first() != Some(&(u + 1))
                || sb.first() != Some(&(u + 2))
                || sa[1..] != sb[1..]
                || sa[1..].iter().any(|&s| s > u)
            {
                return Err(fail());
            }
            if let Tracker::Full(_) = a.tracker {
                // Sets recorded before the chain are below the chain scale;
                // sets after it are supported above it and the step-2 sets
                // are the step-1 sets shifted up by 2^U.
                for t in 0..=t0 {
                    if a.sets[t].bits().iter_ones().any(|i| i >= cut) {
                        return Err(fail());
                    }
                }
                for t in (t0 + 1)..a.sets.len() {
                    let pa = a.sets[t].bits();
                    let pb = b.sets[t].bits();
                    if pa.iter_ones().any(|i| i < cut) {
                        return Err(fail());
                    }
                    if !shifted_equals(pa, cut, pb) {
                        return Err(fail());
                    }
                }
            }
        }
        Ok(())
    }
}

/// b == a << shift (and b has no bits below shift).
fn shifted_equals(a: &BitBuf, shift: usize, b: &BitBuf) -> bool {
    debug_assert_eq!(a.len(), b.len());
    for i in 0..shift {
        if b.get(i) {
            return false;
        }
    }
    for i in 0..a.len() - shift {
        if a.get(i) != b.get(i + shift) {
            return false;
        }
    }
    // bits of a that would shift out must be absent
    for i in a.len() - shift..a.len() {
        if a.get(i) {
            return false;
        }
    }
    true
}

/// Refine the conditional law given the level of p into exactly-weighted
/// branches of colour parity sets at times 0..=tmax. The extension policy
/// of p is ignored: crossings always resolve by exact column averaging.
pub fn resolve_branches(
    spec: &ConstructionSpec,
    p: &LevelPoint,
    tmax: u64,
    opts: ResolveOptions,
) -> Result<Vec<Branch>> {
    let h = spec.height(p.tower)?;
    if p.level >= h {
        return Err(Error::LevelOutOfRange {
            tower: p.tower,
            level: p.level,
            height: h,
        });
    }
    // scouting pass fixes the character horizon up front
    let mut scout = Resolver::new(spec, tmax, opts.depth_bound);
    let mut sink = Vec::new();
    scout.walk(
        Frame {
            tower: p.tower,
            level: p.level,
            time: 0,
            weight: BigRational::one(),
            depth: 0,
            no_embed: false,
            tracker: Tracker::Scout,
            sets: Vec::new(),
            scales: Vec::new(),
        },
        &mut sink,
    )?;
    let horizon = scout.max_scale;
    let mut full = Resolver::new(spec, tmax, opts.depth_bound);
    let engine = CharEngine::new(horizon);
    let first_set = engine.colour_set();
    let mut frames = Vec::new();
    full.walk(
        Frame {
            tower: p.tower,
            level: p.level,
            time: 0,
            weight: BigRational::one(),
            depth: 0,
            no_embed: false,
            tracker: Tracker::Full(engine),
            sets: vec![first_set],
            scales: Vec::new(),
        },
        &mut frames,
    )?;
    debug_assert!(frames
        .iter()
        .fold(BigRational::zero(), |acc, f| acc + &f.weight)
        .is_one());
    Ok(frames
        .into_iter()
        .map(|f| Branch {
            weight: f.weight,
            sets: f.sets,
        })
        .collect())
}

fn branch_event_prob(branches: &[Branch], atoms: &[(u64, i8)]) -> Result<BigRational> {
    let mut total = BigRational::zero();
    for branch in branches {
        let chars: Vec<CharSet> = atoms
            .iter()
            .map(|&(t, _)| branch.sets[t as usize].clone())
            .collect();
        let signs: Vec<i8> = atoms.iter().map(|&(_, s)| s).collect();
        let p = pattern_prob(&chars, &signs)?;
        if p.consistent {
            total += &branch.weight * p.value();
        }
    }
    Ok(total)
}

/// Exact conditional probability of a colour event given the base point.
/// Within the simulated tower this is a dyadic rational; windows that
/// cross the top average exactly over extension columns and may pick up
/// powers of three in the denominator.
pub fn event_prob_given_x(
    spec: &ConstructionSpec,
    p: &LevelPoint,
    event: &EventSpec,
    opts: ResolveOptions,
) -> Result<BigRational> {
    let branches = resolve_branches(spec, p, event.max_time(), opts)?;
    branch_event_prob(&branches, event.atoms())
}

/// One row of the order-2 mixing curve.
#[derive(Debug, Clone)]
pub struct MixCurveRow {
    pub k: u64,
    pub mean_dev: BigRational,
    pub max_dev: BigRational,
    pub nonzero_x: u64,
}

/// Deviations |P_x(A ∩ T^{-k}B) − P_x(A) P_x(T^{-k}B)| aggregated over
/// all levels x of one tower: the mean is the convergence-in-probability
/// surrogate, the max the almost-sure one.
#[derive(Debug, Clone)]
pub struct MixCurve {
    pub tower: u32,
    pub rows: Vec<MixCurveRow>,
}

pub fn mix2_curve(
    spec: &ConstructionSpec,
    tower: u32,
    a: &EventSpec,
    b: &EventSpec,
    kmax: u64,
    opts: ResolveOptions,
) -> Result<MixCurve> {
    let h = spec.height(tower)?;
    let tmax = a.max_time().max(b.max_time() + kmax);
    let per_level: Vec<Vec<BigRational>> = (0..h)
        .into_par_iter()
        .map(|level| -> Result<Vec<BigRational>> {
            let p = LevelPoint::new(tower, level, ExtendPolicy::Error);
            let branches = resolve_branches(spec, &p, tmax, opts)?;
            let pa = branch_event_prob(&branches, a.atoms())?;
            let mut devs = Vec::with_capacity(kmax as usize + 1);
            for k in 0..=kmax {
                let shifted: Vec<(u64, i8)> =
                    b.atoms().iter().map(|&(t, s)| (t + k, s)).collect();
                let pbk = branch_event_prob(&branches, &shifted)?;
                let mut joint = a.atoms().to_vec();
                joint.extend_from_slice(&shifted);
                let pab = branch_event_prob(&branches, &joint)?;
                devs.push((pab - &pa * pbk).abs());
            }
            Ok(devs)
        })
        .collect::<Result<Vec<_>>>()?;
    let h_big = BigRational::from_integer(BigInt::from(h));
    let mut rows = Vec::with_capacity(kmax as usize + 1);
    for k in 0..=kmax {
        let mut sum = BigRational::zero();
        let mut max = BigRational::zero();
        let mut nonzero = 0u64;
        for devs in &per_level {
            let d = &devs[k as usize];
            if !d.is_zero() {
                nonzero += 1;
            }
            if *d > max {
                max = d.clone();
            }
            sum += d;
        }
        rows.push(MixCurveRow {
            k,
            mean_dev: sum / &h_big,
            max_dev: max,
            nonzero_x: nonzero,
        });
    }
    Ok(MixCurve { tower, rows })
}

/// One scanned level of the order-3 experiment.
#[derive(Debug, Clone)]
pub struct Mix3Row {
    pub level: u64,
    pub p_triple: DyadicProb,
    pub p_product: DyadicProb,
    /// Whether the time-D set equals the symmetric difference of the
    /// time-0 and time-d sets (the product structure of the third climb).
    pub delta_identity: bool,
}

/// Order-3 experiment over the first column of tower n: with
/// A = B = C = {colour = +1}, the probability of the triple intersection
/// at times (0, d, D) against the product of the three marginals, where
/// d is the first-column return time and D the second.
#[derive(Debug, Clone)]
pub struct Mix3Report {
    pub n: u32,
    pub time_d: u64,
    pub time_double: u64,
    /// First-column levels inside spacers, excluded from the scan.
    pub spacer_levels: u64,
    /// Parity sets at times d and D from the column base (level 0).
    pub base_sets: (CharSet, CharSet),
    pub rows: Vec<Mix3Row>,
}

fn mix3_times(spec: &ConstructionSpec, n: u32) -> Result<(u64, u64)> {
    let h = spec.height(n)?;
    let [s0, s1, _] = spec.spacers();
    Ok((h + s0, 2 * h + s0 + s1))
}

fn mix3_row(
    level: u64,
    horizon: u32,
    s_d: CharSet,
    s_double: CharSet,
) -> Result<(Mix3Row, CharSet, CharSet)> {
    let s_zero = CharSet::singleton(horizon, 0);
    let plus = [1i8, 1, 1];
    let chars = [s_zero.clone(), s_d.clone(), s_double.clone()];
    let p_triple = pattern_prob(&chars, &plus)?;
    let p_product = pattern_prob(&chars[..1], &plus[..1])?
        .product(&pattern_prob(&chars[1..2], &plus[..1])?)
        .product(&pattern_prob(&chars[2..], &plus[..1])?);
    let delta_identity = s_double == s_zero.symmetric_difference(&s_d)?;
    Ok((
        Mix3Row {
            level,
            p_triple,
            p_product,
            delta_identity,
        },
        s_d,
        s_double,
    ))
}

/// Order-3 scan sharing one evolution across all start levels: two
/// forward character engines run at clocks l+d and l+D while an
/// inverse-prefix engine runs at clock l; combining the forward colour
/// sets through the inverse prefix yields the window sets for every l in
/// a single climb of tower n+1.
pub fn mix3_scan(spec: &ConstructionSpec, n: u32) -> Result<Mix3Report> {
    if n == 0 {
        return Err(Error::InvalidArgument("mix3 wants n >= 1".into()));
    }
    let (d, dd) = mix3_times(spec, n)?;
    let h_scan = spec.height(n)?;
    let horizon = n + 1;
    let heights = spec.height_table(n + 1)?;
    let action = |level: u64| -> Result<CocycleAction> {
        let p = LevelPoint::new(n + 1, level, ExtendPolicy::Error);
        Ok(match spec.n_of_x_with(&heights, &p)? {
            None => CocycleAction::Identity,
            Some(m) => CocycleAction::Composite(m),
        })
    };
    let mut eng_d = CharEngine::new(horizon);
    let mut eng_dd = CharEngine::new(horizon);
    let mut inverse = InversePrefixEngine::new(horizon);
    for t in 0..d {
        eng_d.apply(action(t)?)?;
    }
    for t in 0..dd {
        eng_dd.apply(action(t)?)?;
    }
    let mut rows = Vec::with_capacity(h_scan as usize);
    let mut spacer_levels = 0u64;
    let mut base_sets: Option<(CharSet, CharSet)> = None;
    for level in 0..h_scan {
        let p = LevelPoint::new(n + 1, level, ExtendPolicy::Error);
        match spec.n_of_x_with(&heights, &p)? {
            None => spacer_levels += 1,
            Some(_) => {
                let s_d = inverse.combine(&eng_d.colour_set())?;
                let s_double = inverse.combine(&eng_dd.colour_set())?;
                let (row, s_d, s_double) = mix3_row(level, horizon, s_d, s_double)?;
                if base_sets.is_none() {
                    base_sets = Some((s_d, s_double));
                }
                rows.push(row);
            }
        }
        if level + 1 < h_scan {
            inverse.apply(action(level)?)?;
            eng_d.apply(action(level + d)?)?;
            eng_dd.apply(action(level + dd)?)?;
        }
    }
    Ok(Mix3Report {
        n,
        time_d: d,
        time_double: dd,
        spacer_levels,
        base_sets: base_sets.expect("column base is never a spacer"),
        rows,
    })
}

/// Per-level forward runs; the independent slow route for `mix3_scan`.
pub fn mix3_scan_naive(spec: &ConstructionSpec, n: u32) -> Result<Mix3Report> {
    if n == 0 {
        return Err(Error::InvalidArgument("mix3 wants n >= 1".into()));
    }
    let (d, dd) = mix3_times(spec, n)?;
    let h_scan = spec.height(n)?;
    let horizon = n + 1;
    let heights = spec.height_table(n + 1)?;
    let mut rows = Vec::new();
    let mut spacer_levels = 0u64;
    let mut base_sets: Option<(CharSet, CharSet)> = None;
    for level in 0..h_scan {
        let p = LevelPoint::new(n + 1, level, ExtendPolicy::Error);
        if spec.n_of_x_with(&heights, &p)?.is_none() {
            spacer_levels += 1;
            continue;
        }
        let mut engine = CharEngine::new(horizon);
        let mut s_d: Option<CharSet> = None;
        for t in 0..dd {
            let q = LevelPoint::new(n + 1, level + t, ExtendPolicy::Error);
            let act = match spec.n_of_x_with(&heights, &q)? {
                None => CocycleAction::Identity,
                Some(m) => CocycleAction::Composite(m),
            };
            engine.apply(act)?;
            if t + 1 == d {
                s_d = Some(engine.colour_set());
            }
        }
        let s_double = engine.colour_set();
        let (row, s_d, s_double) =
            mix3_row(level, horizon, s_d.expect("d <= dd"), s_double)?;
        if base_sets.is_none() {
            base_sets = Some((s_d, s_double));
        }
        rows.push(row);
    }
    Ok(Mix3Report {
        n,
        time_d: d,
        time_double: dd,
        spacer_levels,
        base_sets: base_sets.expect("column base is never a spacer"),
        rows,
    })
}

/// Brute-force triple probability at one scanned level: enumerate every
/// first (n+1)-block as fiber and count orbits whose colours at times
/// (0, d, D) are all +1. Returns (hits, total). Only feasible for small n.
pub fn mix3_brute_force_level(spec: &ConstructionSpec, n: u32, level: u64) -> Result<(u64, u64)> {
    if n > 3 {
        return Err(Error::InvalidArgument(
            "brute-force enumeration is limited to n <= 3".into(),
        ));
    }
    let (d, dd) = mix3_times(spec, n)?;
    let horizon = n + 1;
    let count = 1u64 << (1u64 << horizon);
    let p = LevelPoint::new(n + 1, level, ExtendPolicy::Error);
    let mut hits = 0u64;
    for idx in 0..count {
        let y = YPrefix::from_block(&SignBlock::from_index(horizon, idx), horizon)?;
        let run = colour_run(spec, &p, &y, dd)?;
        let colours: Vec<i8> = run.colours().collect();
        if colours[0] == 1 && colours[d as usize] == 1 && colours[dd as usize] == 1 {
            hits += 1;
        }
    }
    Ok((hits, count))
}

/// How a census was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensusMode {
    Exhaustive,
    Sampled { samples: u64, seed: u64 },
}

/// Joint distribution of the three climb colourings (C1, C2, C3) of tower
/// n, tabulated from the base of tower n+1 of the triadic odometer.
#[derive(Debug, Clone)]
pub struct TripleCensus {
    pub n: u32,
    pub mode: CensusMode,
    pub total: u64,
    pub marginals: [HashMap<BitBuf, u64>; 3],
    pub joint: [HashMap<(BitBuf, BitBuf), u64>; 3],
    /// Rows where C3 differs from the termwise product of C1 and C2.
    pub product_rule_violations: u64,
}

impl TripleCensus {
    pub fn identically_distributed(&self) -> bool {
        self.marginals[0] == self.marginals[1] && self.marginals[1] == self.marginals[2]
    }

    /// Exact pairwise independence: joint(a,b) * total == marg(a) * marg(b)
    /// for every value pair of every coordinate pair.
    pub fn pairwise_independent(&self) -> bool {
        let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
        for (pair_idx, &(i, j)) in pairs.iter().enumerate() {
            for (a, ca) in &self.marginals[i] {
                for (b, cb) in &self.marginals[j] {
                    let joint = self.joint[pair_idx]
                        .get(&(a.clone(), b.clone()))
                        .copied()
                        .unwrap_or(0);
                    if (joint as u128) * (self.total as u128) != (*ca as u128) * (*cb as u128) {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn product_rule_holds(&self) -> bool {
        self.product_rule_violations == 0
    }
}

/// Tabulate (C1, C2, C3) over first (n+1)-blocks: exhaustively for
/// n <= 3, else over seeded samples (pass the sampling parameters).
pub fn triple_block_census(n: u32, sampled: Option<(u64, u64)>) -> Result<TripleCensus> {
    if n == 0 {
        return Err(Error::InvalidArgument("census wants n >= 1".into()));
    }
    let mode = match (n <= 3, sampled) {
        (_, Some((samples, seed))) => CensusMode::Sampled { samples, seed },
        (true, None) => CensusMode::Exhaustive,
        (false, None) => {
            return Err(Error::InvalidArgument(
                "census beyond n = 3 needs sampled mode".into(),
            ))
        }
    };
    let spec = ConstructionSpec::preset("odometer3").expect("builtin preset");
    let horizon = n + 1;
    let span = 3usize.pow(n);
    let p = LevelPoint::new(n + 1, 0, ExtendPolicy::Error);
    let mut census = TripleCensus {
        n,
        mode,
        total: 0,
        marginals: [HashMap::new(), HashMap::new(), HashMap::new()],
        joint: [HashMap::new(), HashMap::new(), HashMap::new()],
        product_rule_violations: 0,
    };
    let mut tally = |y: &YPrefix| -> Result<()> {
        let run = colour_run(&spec, &p, y, 3u64.pow(n + 1) - 1)?;
        let colours: Vec<i8> = run.colours().collect();
        let mut climbs: [BitBuf; 3] =
            [BitBuf::zeros(span), BitBuf::zeros(span), BitBuf::zeros(span)];
        for (c, climb) in climbs.iter_mut().enumerate() {
            for i in 0..span {
                climb.set(i, colours[c * span + i] == -1);
            }
        }
        let mut product = climbs[0].clone();
        product.xor_with(&climbs[1]);
        if product != climbs[2] {
            census.product_rule_violations += 1;
        }
        for (c, climb) in climbs.iter().enumerate() {
            *census.marginals[c].entry(climb.clone()).or_insert(0) += 1;
        }
        for (slot, (i, j)) in [(0usize, 1usize), (0, 2), (1, 2)].into_iter().enumerate() {
            *census.joint[slot]
                .entry((climbs[i].clone(), climbs[j].clone()))
                .or_insert(0) += 1;
        }
        census.total += 1;
        Ok(())
    };
    match mode {
        CensusMode::Exhaustive => {
            for idx in 0..(1u64 << (1u64 << horizon)) {
                let y = YPrefix::from_block(&SignBlock::from_index(horizon, idx), horizon)?;
                tally(&y)?;
            }
        }
        CensusMode::Sampled { samples, seed } => {
            let mut rng = SplitMix64::new(seed);
            for _ in 0..samples {
                let y = YPrefix::random(horizon, &mut rng);
                tally(&y)?;
            }
        }
    }
    Ok(census)
}

/// Monte-Carlo estimate of a colour event from a base point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub hits: u64,
    pub samples: u64,
    pub estimate: f64,
    pub stderr: f64,
}

/// Frequency of the event over uniformly random fiber prefixes, with the
/// binomial standard error sqrt(p(1-p)/samples). Tower-top crossings are
/// drawn uniformly per sample; everything is determined by the seed.
pub fn mc_check(
    spec: &ConstructionSpec,
    p: &LevelPoint,
    event: &EventSpec,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("mc_check wants samples >= 1".into()));
    }
    let tmax = event.max_time();
    let mut hits = 0u64;
    for i in 0..samples {
        let mut rng = SplitMix64::fork(seed, i);
        let ext_seed = rng.next_u64();
        let point = LevelPoint::new(p.tower, p.level, ExtendPolicy::Random { seed: ext_seed });
        let horizon = crate::cocycle::required_horizon(spec, &point, tmax)?;
        let y = YPrefix::random(horizon, &mut rng);
        let run = colour_run(spec, &point, &y, tmax)?;
        let colours: Vec<i8> = run.colours().collect();
        if event
            .atoms()
            .iter()
            .all(|&(t, s)| colours[t as usize] == s)
        {
            hits += 1;
        }
    }
    let estimate = hits as f64 / samples as f64;
    let stderr = (estimate * (1.0 - estimate) / samples as f64).sqrt();
    Ok(McEstimate {
        hits,
        samples,
        estimate,
        stderr,
    })
}

/// Rational as `num/den` (or the integer itself when the denominator
/// is 1), reduced.
pub fn rational_string(value: &BigRational) -> String {
    if value.denom() == &BigInt::one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

#[allow(dead_code)]
fn unused_to_f64(value: &BigRational) -> Option<f64> {
    value.to_f64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::char_run;

    fn odometer() -> ConstructionSpec {
        ConstructionSpec::preset("odometer3").unwrap()
    }

    fn chacon() -> ConstructionSpec {
        ConstructionSpec::preset("chacon").unwrap()
    }

    fn pt(tower: u32, level: u64) -> LevelPoint {
        LevelPoint::new(tower, level, ExtendPolicy::Error)
    }

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn event_parse_and_display() {
        let e = EventSpec::parse("0:+,5:-").unwrap();
        assert_eq!(e.atoms(), &[(0, 1), (5, -1)]);
        assert_eq!(e.to_string(), "0:+,5:-");
        assert_eq!(e.shifted(3).atoms(), &[(3, 1), (8, -1)]);
        assert!(EventSpec::parse("0:+,0:-").is_err());
        assert!(EventSpec::parse("").is_err());
        assert!(EventSpec::parse("1:x").is_err());
    }

    #[test]
    fn pattern_prob_examples() {
        let h = 2u32;
        let s = |idx: &[usize]| CharSet::from_indices(h, idx);
        assert_eq!(
            pattern_prob(&[s(&[0]), s(&[2])], &[1, 1]).unwrap(),
            DyadicProb::dyadic(2)
        );
        assert_eq!(
            pattern_prob(&[s(&[0]), s(&[2]), s(&[0, 2])], &[1, 1, 1]).unwrap(),
            DyadicProb::dyadic(2)
        );
        assert_eq!(
            pattern_prob(&[s(&[0]), s(&[2]), s(&[0, 2])], &[1, 1, -1]).unwrap(),
            DyadicProb::impossible()
        );
        assert_eq!(
            pattern_prob(&[s(&[])], &[1]).unwrap(),
            DyadicProb::certain()
        );
        assert_eq!(
            pattern_prob(&[s(&[])], &[-1]).unwrap(),
            DyadicProb::impossible()
        );
    }

    #[test]
    fn pattern_prob_matches_enumeration() {
        // brute force over all sign assignments of 2^M coordinates
        let mut rng = SplitMix64::new(0xABCDEF);
        for _ in 0..200 {
            let horizon = 1 + (rng.next_below(3) as u32); // M in 1..=3
            let coords = 1usize << horizon;
            let rows = 1 + rng.next_below(4) as usize;
            let mut chars = Vec::new();
            let mut signs = Vec::new();
            for _ in 0..rows {
                let mut bits = BitBuf::zeros(coords);
                for i in 0..coords {
                    bits.set(i, rng.next_u64() & 1 == 1);
                }
                chars.push(CharSet::from_bits(horizon, bits));
                signs.push(rng.next_sign());
            }
            let got = pattern_prob(&chars, &signs).unwrap();
            let mut hits = 0u64;
            for assignment in 0..(1u64 << coords) {
                let ok = chars.iter().zip(&signs).all(|(set, &sign)| {
                    let mut parity = 0u32;
                    for i in set.bits().iter_ones() {
                        parity ^= ((assignment >> i) & 1) as u32;
                    }
                    (if parity == 1 { -1 } else { 1 }) == sign
                });
                if ok {
                    hits += 1;
                }
            }
            let expected = BigRational::new(BigInt::from(hits), BigInt::from(1u64 << coords));
            assert_eq!(got.value(), expected);
        }
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(decimal12(&ratio(0, 1)), "0");
        assert_eq!(decimal12(&ratio(1, 4)), "0.25");
        assert_eq!(decimal12(&ratio(1, 16)), "0.0625");
        assert_eq!(decimal12(&ratio(1, 3)), "0.333333333333");
        assert_eq!(decimal12(&ratio(2, 3)), "0.666666666667");
        assert_eq!(decimal12(&ratio(1, 1)), "1");
        assert_eq!(decimal12(&ratio(-1, 8)), "-0.125");
        assert_eq!(decimal12(&ratio(1, 1024)), "0.0009765625");
        // half-even at the 12th digit: 0.0000000000005 -> 0 remainder even
        assert_eq!(decimal12(&ratio(1, 2).pow(41)), "0.000000000000454747350886");
    }

    #[test]
    fn event_prob_singletons_are_half() {
        let o = odometer();
        let opts = ResolveOptions::default();
        for level in [0u64, 5, 13, 20] {
            let p = pt(3, level);
            let got =
                event_prob_given_x(&o, &p, &EventSpec::parse("0:+").unwrap(), opts).unwrap();
            assert_eq!(got, ratio(1, 2));
        }
        // later singleton times stay uniform
        for t in [1u64, 2, 7, 15] {
            let e = EventSpec::new(vec![(t, 1)]).unwrap();
            let got = event_prob_given_x(&o, &pt(3, 0), &e, opts).unwrap();
            assert_eq!(got, ratio(1, 2));
        }
    }

    #[test]
    fn event_prob_two_letters_from_base() {
        let o = odometer();
        let e = EventSpec::parse("0:+,1:-").unwrap();
        let got = event_prob_given_x(&o, &pt(1, 0), &e, ResolveOptions::default()).unwrap();
        assert_eq!(got, ratio(1, 4));
    }

    #[test]
    fn resolver_matches_char_run_inside_tower() {
        // crossing-free windows must reproduce char_run exactly
        for spec in [odometer(), chacon()] {
            let tower = 4;
            let h = spec.height(tower).unwrap();
            let tmax = 20u64.min(h - 1);
            for level in 0..(h - tmax) {
                let p = pt(tower, level);
                let branches =
                    resolve_branches(&spec, &p, tmax, ResolveOptions::default()).unwrap();
                assert_eq!(branches.len(), 1);
                let direct = char_run(&spec, &p, tmax).unwrap();
                for (t, set) in direct.iter().enumerate() {
                    assert_eq!(
                        branches[0].sets[t].indices(),
                        set.indices(),
                        "level {level} time {t}"
                    );
                }
            }
        }
    }

    #[test]
    fn resolver_weights_sum_to_one_across_crossings() {
        let o = odometer();
        // window crosses the tower-3 top from every high level, including
        // the all-tops point (the carry chain)
        for level in 20..27u64 {
            let branches =
                resolve_branches(&o, &pt(3, level), 10, ResolveOptions::default()).unwrap();
            let total: BigRational = branches
                .iter()
                .fold(BigRational::zero(), |acc, b| acc + &b.weight);
            assert!(total.is_one(), "level {level}: {total}");
        }
    }

    #[test]
    fn crossing_singletons_stay_uniform() {
        let o = odometer();
        let opts = ResolveOptions::default();
        // the all-tops point of tower 3: the carry chain must close
        let p = pt(3, 26);
        for t in 1..=10u64 {
            let e = EventSpec::new(vec![(t, 1)]).unwrap();
            assert_eq!(event_prob_given_x(&o, &p, &e, opts).unwrap(), ratio(1, 2));
        }
        // pairs: distinct nonempty parities stay independent across the top
        for t in 1..=10u64 {
            let e = EventSpec::new(vec![(0, 1), (t, 1)]).unwrap();
            assert_eq!(event_prob_given_x(&o, &p, &e, opts).unwrap(), ratio(1, 4));
        }
    }

    #[test]
    fn crossing_average_is_exact_column_mix() {
        // one crossing, no chain: the value is the plain average of the
        // three column refinements computed by hand from char runs
        let o = odometer();
        let p = pt(2, 7); // crosses the tower-2 top after one step
        let e = EventSpec::parse("0:+,2:+").unwrap();
        let got = event_prob_given_x(&o, &p, &e, ResolveOptions::default()).unwrap();
        let mut expected = BigRational::zero();
        for column in 0..3u32 {
            let start = o.column_start(2, column).unwrap();
            let q = pt(3, 7 + start);
            let sets = char_run(&o, &q, 2).unwrap();
            let prob = pattern_prob(&[sets[0].clone(), sets[2].clone()], &[1, 1]).unwrap();
            expected += ratio(1, 3) * prob.value();
        }
        assert_eq!(got, expected);
    }

    #[test]
    fn mix2_k0_deviation_is_quarter() {
        let o = odometer();
        let a = EventSpec::parse("0:+").unwrap();
        let curve = mix2_curve(&o, 3, &a, &a, 0, ResolveOptions::default()).unwrap();
        assert_eq!(curve.rows[0].mean_dev, ratio(1, 4));
        assert_eq!(curve.rows[0].max_dev, ratio(1, 4));
        assert_eq!(curve.rows[0].nonzero_x, 27);
    }

    #[test]
    fn mix2_single_letters_deviation_zero() {
        let o = odometer();
        let a = EventSpec::parse("0:+").unwrap();
        let curve = mix2_curve(&o, 4, &a, &a, 30, ResolveOptions::default()).unwrap();
        for row in &curve.rows[1..] {
            assert!(row.mean_dev.is_zero(), "k={}", row.k);
            assert!(row.max_dev.is_zero());
            assert_eq!(row.nonzero_x, 0);
        }
    }

    #[test]
    fn mix3_odometer_headline_numbers() {
        let o = odometer();
        for n in 1..=5u32 {
            let report = mix3_scan(&o, n).unwrap();
            assert_eq!(report.time_d, 3u64.pow(n));
            assert_eq!(report.time_double, 2 * 3u64.pow(n));
            assert_eq!(report.rows.len(), 3usize.pow(n));
            assert_eq!(report.spacer_levels, 0);
            for row in &report.rows {
                assert_eq!(row.p_triple, DyadicProb::dyadic(2), "level {}", row.level);
                assert_eq!(row.p_product, DyadicProb::dyadic(3));
                assert!(row.delta_identity);
            }
            let (s_d, s_double) = &report.base_sets;
            assert_eq!(s_d.indices(), vec![1usize << n]);
            assert_eq!(s_double.indices(), vec![0, 1usize << n]);
        }
    }

    #[test]
    fn mix3_fast_path_matches_naive() {
        for spec in [odometer(), chacon()] {
            for n in 1..=5u32 {
                let fast = mix3_scan(&spec, n).unwrap();
                let naive = mix3_scan_naive(&spec, n).unwrap();
                assert_eq!(fast.rows.len(), naive.rows.len());
                assert_eq!(fast.spacer_levels, naive.spacer_levels);
                assert_eq!(fast.base_sets.0, naive.base_sets.0);
                assert_eq!(fast.base_sets.1, naive.base_sets.1);
                for (a, b) in fast.rows.iter().zip(&naive.rows) {
                    assert_eq!(a.level, b.level);
                    assert_eq!(a.p_triple, b.p_triple);
                    assert_eq!(a.p_product, b.p_product);
                    assert_eq!(a.delta_identity, b.delta_identity);
                }
            }
        }
    }

    #[test]
    fn mix3_brute_force_agrees_small_n() {
        for spec in [odometer(), chacon()] {
            for n in 1..=2u32 {
                let report = mix3_scan(&spec, n).unwrap();
                for row in &report.rows {
                    let (hits, total) = mix3_brute_force_level(&spec, n, row.level).unwrap();
                    let exact = row.p_triple.value();
                    let brute = BigRational::new(BigInt::from(hits), BigInt::from(total));
                    assert_eq!(exact, brute, "n={n} level={}", row.level);
                }
            }
        }
    }

    #[test]
    fn chacon_heights_and_engine_consistency() {
        let c = chacon();
        let report = mix3_scan(&c, 2).unwrap();
        // first column of tower 2 inside tower 3: levels 0..4, one spacer
        assert_eq!(report.rows.len() as u64 + report.spacer_levels, 4);
        assert_eq!(report.spacer_levels, 1);
        assert_eq!(report.time_d, 4);
        assert_eq!(report.time_double, 9);
        // base point: parities {0}, {4}, {1,2,3,4} -> triple rank 3
        assert_eq!(report.base_sets.0.indices(), vec![4]);
        assert_eq!(report.base_sets.1.indices(), vec![1, 2, 3, 4]);
        assert_eq!(report.rows[0].p_triple, DyadicProb::dyadic(3));
        assert!(!report.rows[0].delta_identity);
    }

    #[test]
    fn chacon_with_odometer_start_height_recovers_product_structure() {
        // With h1 = 3 the first tower holds three levels, the scale-1
        // transform completes its order inside every climb, and the
        // telescoping of climbs reappears: the triple probability is 1/4
        // against a product of 1/8 at every scanned level.
        let spec = ConstructionSpec::new("chacon3", 3, [0, 1, 0], 3).unwrap();
        assert_eq!(
            (1..=4)
                .map(|n| spec.height(n).unwrap())
                .collect::<Vec<_>>(),
            vec![3, 10, 31, 94]
        );
        for n in 1..=5u32 {
            let report = mix3_scan(&spec, n).unwrap();
            let (s_d, s_double) = &report.base_sets;
            assert_eq!(s_d.indices(), vec![1usize << n]);
            assert_eq!(s_double.indices(), vec![0, 1usize << n]);
            for row in &report.rows {
                assert_eq!(row.p_triple, DyadicProb::dyadic(2));
                assert_eq!(row.p_product, DyadicProb::dyadic(3));
                assert!(row.delta_identity);
            }
        }
    }

    #[test]
    fn census_small_orders() {
        let census = triple_block_census(1, None).unwrap();
        assert_eq!(census.total, 16);
        assert!(census.identically_distributed());
        assert!(census.pairwise_independent());
        assert!(census.product_rule_holds());
        // each marginal takes each of the four coded values with
        // probability 1/4
        for marginal in &census.marginals {
            assert_eq!(marginal.len(), 4);
            assert!(marginal.values().all(|&c| c == 4));
        }
        let census = triple_block_census(2, None).unwrap();
        assert!(census.identically_distributed());
        assert!(census.pairwise_independent());
        assert!(census.product_rule_holds());
        assert!(triple_block_census(4, None).is_err());
        let sampled = triple_block_census(4, Some((500, 7))).unwrap();
        assert_eq!(sampled.mode, CensusMode::Sampled { samples: 500, seed: 7 });
        assert!(sampled.product_rule_holds());
    }

    #[test]
    fn mc_check_contract() {
        let o = odometer();
        let e = EventSpec::parse("0:+,9:+").unwrap();
        let p = pt(3, 0);
        let exact = event_prob_given_x(&o, &p, &e, ResolveOptions::default()).unwrap();
        assert_eq!(exact, ratio(1, 4));
        let est = mc_check(&o, &p, &e, 100_000, 42).unwrap();
        let exact_f = 0.25;
        assert!((est.estimate - exact_f).abs() <= 4.0 * est.stderr, "{est:?}");
        // determinism
        let est2 = mc_check(&o, &p, &e, 100_000, 42).unwrap();
        assert_eq!(est.hits, est2.hits);
        let expected_stderr = (est.estimate * (1.0 - est.estimate) / 100_000.0).sqrt();
        assert_eq!(est.stderr, expected_stderr);
    }

    #[test]
    fn mean_accumulation_is_order_independent() {
        // shuffling x order cannot change the exact mean
        let o = odometer();
        let a = EventSpec::parse("0:+,1:+").unwrap();
        let curve = mix2_curve(&o, 3, &a, &a, 9, ResolveOptions::default()).unwrap();
        let h = o.height(3).unwrap();
        for row in &curve.rows {
            let mut sum = BigRational::zero();
            let mut levels: Vec<u64> = (0..h).collect();
            levels.reverse();
            for level in levels {
                let p = pt(3, level);
                let branches =
                    resolve_branches(&o, &p, a.max_time() + row.k + 1, ResolveOptions::default())
                        .unwrap();
                let pa = branch_event_prob(&branches, a.atoms()).unwrap();
                let shifted: Vec<(u64, i8)> =
                    a.atoms().iter().map(|&(t, s)| (t + row.k, s)).collect();
                let pb = branch_event_prob(&branches, &shifted).unwrap();
                let mut joint = a.atoms().to_vec();
                joint.extend_from_slice(&shifted);
                let pab = branch_event_prob(&branches, &joint).unwrap();
                sum += (pab - pa * pb).abs();
            }
            assert_eq!(sum / BigRational::from_integer(BigInt::from(h)), row.mean_dev);
        }
    }
}
