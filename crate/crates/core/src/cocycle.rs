//! The skew product T(x,y) = (T_H x, S_x y): concrete orbit evolution,
//! colour extraction, a direct-orbit oracle for the coding maps, and exact
//! GF(2) character engines.
//!
//! The fiber action at a base point x is the ascending composite
//! S_x = tau_{n(x)} ∘ ... ∘ tau_1 (the identity inside spacers). Every
//! tau is GF(2)-linear in bit encoding, so each coordinate of the evolved
//! fiber point is an exact parity of the initial coordinates; the character
//! engines track those parities as bit vectors and turn probability
//! questions into rank computations.

use crate::bits::{BitBuf, BitSquare};
use crate::blockalg::{tau_in_place, ColourWord, SignBlock, YPrefix};
use crate::error::{Error, Result};
use crate::rankone::{ConstructionSpec, ExtendPolicy, LevelPoint};

/// The fiber automorphism applied at one base point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CocycleAction {
    /// Inside a spacer: y is unchanged.
    Identity,
    /// The ascending composite of the transforms of scales 1..=n.
    Composite(u32),
}

impl CocycleAction {
    /// Largest transform scale the action touches (0 for the identity).
    pub fn scale(&self) -> u32 {
        match self {
            CocycleAction::Identity => 0,
            CocycleAction::Composite(n) => *n,
        }
    }
}

/// The action S_x at p: the identity in spacers, otherwise the composite
/// of order n(x).
pub fn cocycle_at(spec: &ConstructionSpec, p: &LevelPoint) -> Result<CocycleAction> {
    Ok(match spec.n_of_x(p)? {
        None => CocycleAction::Identity,
        Some(n) => CocycleAction::Composite(n),
    })
}

/// Apply an action to a fiber point, scale 1 first.
pub fn apply_action(action: CocycleAction, y: &mut YPrefix) -> Result<()> {
    match action {
        CocycleAction::Identity => Ok(()),
        CocycleAction::Composite(n) => {
            if n > y.horizon() {
                return Err(Error::HorizonTooSmall {
                    need: n,
                    have: y.horizon(),
                });
            }
            for j in 1..=n {
                tau_in_place(j, y)?;
            }
            Ok(())
        }
    }
}

/// One step of the skew product: transform y by the action at p, then step
/// the base point.
pub fn skew_step(
    spec: &ConstructionSpec,
    p: &LevelPoint,
    y: &YPrefix,
) -> Result<(LevelPoint, YPrefix)> {
    let action = cocycle_at(spec, p)?;
    let mut y = y.clone();
    apply_action(action, &mut y)?;
    Ok((spec.step(p)?, y))
}

/// Largest n(x) met along a K-step orbit from p (spacers count 0). A fiber
/// prefix with this horizon never raises horizon-too-small on that orbit.
pub fn required_horizon(spec: &ConstructionSpec, p: &LevelPoint, steps: u64) -> Result<u32> {
    let mut point = *p;
    let mut max_scale = 0u32;
    for _ in 0..steps {
        max_scale = max_scale.max(cocycle_at(spec, &point)?.scale());
        point = spec.step(&point)?;
    }
    Ok(max_scale)
}

/// Label for the action taken at one orbit row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionLabel {
    /// Spacer level, identity action.
    Spacer,
    /// Composite of the given order.
    Composite(u32),
    /// Final row of a run whose action cannot be resolved without
    /// extending the simulated tower.
    Unresolved,
}

/// One row of a colour run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColourStep {
    pub tower: u32,
    pub level: u64,
    pub action: ActionLabel,
    pub colour: i8,
}

/// The colouring y_0^(0) .. y_0^(K) of a K-step orbit, with the base path.
#[derive(Debug, Clone)]
pub struct ColourRun {
    pub start: LevelPoint,
    pub horizon_used: u32,
    pub rows: Vec<ColourStep>,
}

impl ColourRun {
    pub fn colours(&self) -> impl Iterator<Item = i8> + '_ {
        self.rows.iter().map(|r| r.colour)
    }
}

/// Run the skew product K steps from (p, y), recording coordinate zero of
/// the fiber at every time.
pub fn colour_run(
    spec: &ConstructionSpec,
    p: &LevelPoint,
    y: &YPrefix,
    steps: u64,
) -> Result<ColourRun> {
    let mut point = *p;
    let mut fiber = y.clone();
    let mut rows = Vec::with_capacity(steps as usize + 1);
    for k in 0..=steps {
        let action = match cocycle_at(spec, &point) {
            Ok(CocycleAction::Identity) => ActionLabel::Spacer,
            Ok(CocycleAction::Composite(n)) => ActionLabel::Composite(n),
            // Only the final row may leave its action unresolved.
            Err(Error::TopOfTower { .. }) if k == steps => ActionLabel::Unresolved,
            Err(e) => return Err(e),
        };
        rows.push(ColourStep {
            tower: point.tower,
            level: point.level,
            action,
            colour: fiber.sign(0),
        });
        if k < steps {
            match action {
                ActionLabel::Spacer => {}
                ActionLabel::Composite(n) => {
                    apply_action(CocycleAction::Composite(n), &mut fiber)?
                }
                ActionLabel::Unresolved => unreachable!(),
            }
            point = spec.step(&point)?;
        }
    }
    Ok(ColourRun {
        start: *p,
        horizon_used: y.horizon(),
        rows,
    })
}

/// Direct-orbit oracle for the coding map: climb tower n of the triadic
/// odometer from its base with the block as fiber prefix and read the
/// 3^n colours. Independent of the recursive `blockalg::gamma` and must
/// agree with it on every input.
pub fn gamma_direct(n: u32, block: &SignBlock) -> Result<ColourWord> {
    if n == 0 || block.order() != n {
        return Err(Error::OrderMismatch {
            left: n,
            right: block.order(),
        });
    }
    let spec = ConstructionSpec::preset("odometer3").expect("builtin preset");
    // A climb never leaves its own tower, so the error policy is a tripwire.
    let start = LevelPoint::new(n, 0, ExtendPolicy::Error);
    let y = YPrefix::from_block(block, n)?;
    let steps = 3u64.pow(n) - 1;
    let run = colour_run(&spec, &start, &y, steps)?;
    let mut bits = BitBuf::zeros(3usize.pow(n));
    for (i, colour) in run.colours().enumerate() {
        bits.set(i, colour == -1);
    }
    Ok(ColourWord::from_bits(n, bits))
}

/// A ±1-valued character: the product of the fiber coordinates indexed by
/// a subset of 0..2^horizon. The empty set is the constant +1.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CharSet {
    horizon: u32,
    bits: BitBuf,
}

impl CharSet {
    pub fn empty(horizon: u32) -> Self {
        CharSet {
            horizon,
            bits: BitBuf::zeros(1 << horizon),
        }
    }

    pub fn singleton(horizon: u32, index: usize) -> Self {
        let mut s = CharSet::empty(horizon);
        s.bits.set(index, true);
        s
    }

    pub fn from_indices(horizon: u32, indices: &[usize]) -> Self {
        CharSet {
            horizon,
            bits: BitBuf::from_indices(1 << horizon, indices),
        }
    }

    pub(crate) fn from_bits(horizon: u32, bits: BitBuf) -> Self {
        debug_assert_eq!(bits.len(), 1 << horizon);
        CharSet { horizon, bits }
    }

    #[inline]
    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    #[inline]
    pub fn bits(&self) -> &BitBuf {
        &self.bits
    }

    pub fn is_constant_plus(&self) -> bool {
        !self.bits.any()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.bits.iter_ones().collect()
    }

    /// Symmetric difference (product of the two characters).
    pub fn symmetric_difference(&self, other: &CharSet) -> Result<CharSet> {
        if self.horizon != other.horizon {
            return Err(Error::HorizonMismatch);
        }
        let mut bits = self.bits.clone();
        bits.xor_with(&other.bits);
        Ok(CharSet {
            horizon: self.horizon,
            bits,
        })
    }

    /// Evaluate the character on a concrete fiber prefix.
    pub fn evaluate(&self, y: &YPrefix) -> Result<i8> {
        if y.horizon() < self.horizon {
            return Err(Error::HorizonTooSmall {
                need: self.horizon,
                have: y.horizon(),
            });
        }
        let mut parity = 0u32;
        for (a, b) in self.bits.words().iter().zip(y.bits().words()) {
            parity ^= (a & b).count_ones() & 1;
        }
        Ok(if parity & 1 == 1 { -1 } else { 1 })
    }
}

impl std::fmt::Display for CharSet {
    /// Sorted, comma-separated indices inside braces, e.g. `{0,4}`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.bits.iter_ones().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

impl std::fmt::Debug for CharSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CharSet({self})")
    }
}

/// Forward character engine: the 2^M x 2^M bit matrix whose row i is the
/// parity set of the current coordinate i over the initial coordinates.
/// Applying the scale-n transform costs 2^{n-1} row swap/XOR pairs.
#[derive(Clone)]
pub struct CharEngine {
    horizon: u32,
    matrix: BitSquare,
}

impl CharEngine {
    pub fn new(horizon: u32) -> Self {
        CharEngine {
            horizon,
            matrix: BitSquare::identity(1 << horizon),
        }
    }

    #[inline]
    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn apply(&mut self, action: CocycleAction) -> Result<()> {
        let n = action.scale();
        if n > self.horizon {
            return Err(Error::HorizonTooSmall {
                need: n,
                have: self.horizon,
            });
        }
        for j in 1..=n {
            self.matrix.rows_apply_scale(j);
        }
        Ok(())
    }

    /// Parity set of the current coordinate `i`.
    pub fn coordinate_set(&self, i: usize) -> CharSet {
        CharSet {
            horizon: self.horizon,
            bits: self.matrix.row_bitbuf(i),
        }
    }

    /// Parity set of the colour coordinate.
    pub fn colour_set(&self) -> CharSet {
        self.coordinate_set(0)
    }
}

/// Inverse-prefix engine: the rows of P^{-1}, where P is the running
/// product of the step actions applied so far. Combining a colour set of a
/// later time with this matrix yields the colour set relative to the
/// current time, which is how scans share one evolution across all start
/// levels. Each step updates every row on its first 2^{n} bits only.
#[derive(Clone)]
pub struct InversePrefixEngine {
    horizon: u32,
    matrix: BitSquare,
}

impl InversePrefixEngine {
    pub fn new(horizon: u32) -> Self {
        InversePrefixEngine {
            horizon,
            matrix: BitSquare::identity(1 << horizon),
        }
    }

    pub fn apply(&mut self, action: CocycleAction) -> Result<()> {
        let n = action.scale();
        if n > self.horizon {
            return Err(Error::HorizonTooSmall {
                need: n,
                have: self.horizon,
            });
        }
        self.matrix.rows_mul_inverse_composite(n);
        Ok(())
    }

    /// XOR of the rows selected by `set`: (indicator of set) * P^{-1}.
    pub fn combine(&self, set: &CharSet) -> Result<CharSet> {
        if set.horizon != self.horizon {
            return Err(Error::HorizonMismatch);
        }
        let mut bits = BitBuf::zeros(1 << self.horizon);
        for r in set.bits.iter_ones() {
            bits.xor_words(self.matrix.row(r));
        }
        Ok(CharSet {
            horizon: self.horizon,
            bits,
        })
    }
}

/// Run the character engine K steps from p: entry k is the parity set of
/// the colour at time k. Evaluating entry k on any concrete prefix equals
/// the colour `colour_run` reports at time k for that prefix.
pub fn char_run(spec: &ConstructionSpec, p: &LevelPoint, steps: u64) -> Result<Vec<CharSet>> {
    let horizon = required_horizon(spec, p, steps)?;
    let mut engine = CharEngine::new(horizon);
    let mut point = *p;
    let mut sets = Vec::with_capacity(steps as usize + 1);
    for k in 0..=steps {
        sets.push(engine.colour_set());
        if k < steps {
            engine.apply(cocycle_at(spec, &point)?)?;
            point = spec.step(&point)?;
        }
    }
    Ok(sets)
}
