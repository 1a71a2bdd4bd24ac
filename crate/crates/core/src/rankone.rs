//! Combinatorial model of a rank-one cutting-and-stacking transformation
//! with three cuts: tower heights, level arithmetic, column/spacer
//! structure, the top-of-tower predicate and the composite order n(x).
//!
//! Points are levels of a finite tower, not real numbers: tower n is the
//! list of levels 0..h_n, the transformation steps a point to the level
//! above, and every measure statement becomes uniform counting over levels.
//! Tower n+1 is assembled from three copies of tower n (columns 0, 1, 2)
//! with `spacers[i]` fresh levels inserted after the copy of column i, so
//! h_{n+1} = 3 h_n + spacers[0] + spacers[1] + spacers[2].
//!
//! Two presets are built in: `odometer3` (no spacers, h_1 = 3, the triadic
//! adding machine) and `chacon` (one spacer between the second and third
//! column, h_1 = 1, heights 1, 4, 13, 40, ...).

use crate::error::{Error, Result};
use crate::rng::{hash_column, SplitMix64};

/// Cuts-and-spacers recipe for the base transformation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructionSpec {
    name: String,
    spacers: [u64; 3],
    h1: u64,
}

/// What to do when an orbit steps off the top of the simulated tower.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtendPolicy {
    /// Fail with a top-of-tower error.
    Error,
    /// Re-embed as column 0 of the next tower.
    Base,
    /// Re-embed in a column drawn uniformly, keyed by (seed, tower, level).
    Random { seed: u64 },
}

/// A point of the base: level `level` of tower `tower`, with the policy
/// used when its forward orbit leaves the simulated tower.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelPoint {
    pub tower: u32,
    pub level: u64,
    pub ext: ExtendPolicy,
}

impl LevelPoint {
    pub fn new(tower: u32, level: u64, ext: ExtendPolicy) -> Self {
        LevelPoint { tower, level, ext }
    }
}

/// Position of a point relative to the copies of a lower tower.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClimbPosition {
    /// Inside the copy of tower `tower` stacked as column `column` of
    /// tower `tower + 1`, at the given offset within that copy.
    Column { tower: u32, column: u32, offset: u64 },
    /// Inside a spacer level inserted at construction step `step`.
    Spacer { step: u32 },
}

/// One segment of a tower's internal layout.
enum Segment {
    Column { column: u32, offset: u64 },
    Spacer,
}

impl ConstructionSpec {
    pub fn new(name: impl Into<String>, cuts: u32, spacers: [i64; 3], h1: u64) -> Result<Self> {
        if cuts != 3 {
            return Err(Error::UnsupportedConstruction(format!(
                "cuts={cuts}: only three-column constructions are supported"
            )));
        }
        if spacers.iter().any(|&s| s < 0) {
            return Err(Error::ParseConstruction("negative spacer count".into()));
        }
        if h1 == 0 {
            return Err(Error::ParseConstruction("h1 must be >= 1".into()));
        }
        Ok(ConstructionSpec {
            name: name.into(),
            spacers: [spacers[0] as u64, spacers[1] as u64, spacers[2] as u64],
            h1,
        })
    }

    /// Built-in presets addressable by name.
    pub fn preset(name: &str) -> Option<ConstructionSpec> {
        match name {
            "odometer3" => Some(ConstructionSpec {
                name: "odometer3".into(),
                spacers: [0, 0, 0],
                h1: 3,
            }),
            "chacon" => Some(ConstructionSpec {
                name: "chacon".into(),
                spacers: [0, 1, 0],
                h1: 1,
            }),
            _ => None,
        }
    }

    /// Parse the line-oriented `key=value` construction grammar. `#` starts
    /// a comment, keys may appear in any order, `h1` may be omitted for the
    /// preset names (odometer3: 3, chacon: 1).
    pub fn parse(text: &str) -> Result<ConstructionSpec> {
        let mut name: Option<String> = None;
        let mut cuts: Option<i64> = None;
        let mut spacers: Option<[i64; 3]> = None;
        let mut h1: Option<i64> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::ParseConstruction(format!("line {}: expected key=value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let parse_int = |v: &str| {
                v.parse::<i64>().map_err(|_| {
                    Error::ParseConstruction(format!("line {}: bad integer {v:?}", lineno + 1))
                })
            };
            match key {
                "name" => name = Some(value.to_string()),
                "cuts" => cuts = Some(parse_int(value)?),
                "h1" => h1 = Some(parse_int(value)?),
                "spacers" => {
                    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                    if parts.len() != 3 {
                        return Err(Error::ParseConstruction(format!(
                            "line {}: spacers wants exactly three integers",
                            lineno + 1
                        )));
                    }
                    let mut s = [0i64; 3];
                    for (slot, part) in s.iter_mut().zip(&parts) {
                        *slot = parse_int(part)?;
                        if *slot < 0 {
                            return Err(Error::ParseConstruction(format!(
                                "line {}: negative spacer",
                                lineno + 1
                            )));
                        }
                    }
                    spacers = Some(s);
                }
                other => {
                    return Err(Error::ParseConstruction(format!(
                        "line {}: unknown key {other:?}",
                        lineno + 1
                    )))
                }
            }
        }
        let name = name.ok_or_else(|| Error::ParseConstruction("missing key: name".into()))?;
        let cuts = cuts.ok_or_else(|| Error::ParseConstruction("missing key: cuts".into()))?;
        if cuts != 3 {
            return Err(Error::UnsupportedConstruction(format!(
                "cuts={cuts}: only three-column constructions are supported"
            )));
        }
        let spacers =
            spacers.ok_or_else(|| Error::ParseConstruction("missing key: spacers".into()))?;
        let h1 = match h1 {
            Some(v) if v >= 1 => v as u64,
            Some(v) => {
                return Err(Error::ParseConstruction(format!("h1={v} must be >= 1")));
            }
            None => match ConstructionSpec::preset(&name) {
                Some(p) => p.h1,
                None => return Err(Error::ParseConstruction("missing key: h1".into())),
            },
        };
        ConstructionSpec::new(name, 3, spacers, h1)
    }

    #[inline]
    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn spacers(&self) -> [u64; 3] {
        self.spacers
    }

    #[inline]
    pub fn h1(&self) -> u64 {
        self.h1
    }

    #[inline]
    pub fn spacer_total(&self) -> u64 {
        self.spacers[0] + self.spacers[1] + self.spacers[2]
    }

    /// Height of tower n (n >= 1): h_1 = h1 and
    /// h_{n+1} = 3 h_n + spacers[0] + spacers[1] + spacers[2].
    pub fn height(&self, n: u32) -> Result<u64> {
        if n == 0 {
            return Err(Error::InvalidArgument("towers are numbered from 1".into()));
        }
        let mut h = self.h1;
        for k in 2..=n {
            h = h
                .checked_mul(3)
                .and_then(|v| v.checked_add(self.spacer_total()))
                .ok_or(Error::HeightOverflow { tower: k })?;
        }
        Ok(h)
    }

    /// Heights h_1..h_n as a table (index k holds h_k; index 0 unused).
    pub fn height_table(&self, n: u32) -> Result<Vec<u64>> {
        let mut t = vec![0u64; n as usize + 1];
        for k in 1..=n {
            t[k as usize] = self.height(k)?;
        }
        Ok(t)
    }

    /// First level of column c's copy of tower n inside tower n+1.
    pub fn column_start(&self, n: u32, column: u32) -> Result<u64> {
        debug_assert!(column < 3);
        let h = self.height(n)?;
        let mut start = u64::from(column) * h;
        for i in 0..column as usize {
            start += self.spacers[i];
        }
        Ok(start)
    }

    /// Locate `level` of tower `k` (k >= 2) within the tower's layout.
    fn segment(&self, h_lower: u64, level: u64) -> Segment {
        let mut pos = level;
        for (c, &sp) in self.spacers.iter().enumerate() {
            if pos < h_lower {
                return Segment::Column {
                    column: c as u32,
                    offset: pos,
                };
            }
            pos -= h_lower;
            if pos < sp {
                return Segment::Spacer;
            }
            pos -= sp;
        }
        unreachable!("level beyond tower height");
    }

    fn check_point(&self, p: &LevelPoint) -> Result<u64> {
        let h = self.height(p.tower)?;
        if p.level >= h {
            return Err(Error::LevelOutOfRange {
                tower: p.tower,
                level: p.level,
                height: h,
            });
        }
        Ok(h)
    }

    /// Decompose p down to the copies of tower m (1 <= m < p.tower):
    /// the column of the copy of tower m containing p and p's offset in it,
    /// or the spacer insertion step if the descent lands in a spacer.
    pub fn locate(&self, p: &LevelPoint, m: u32) -> Result<ClimbPosition> {
        if m == 0 || m >= p.tower {
            return Err(Error::InvalidArgument(format!(
                "locate wants 1 <= m < tower, got m={m}, tower={}",
                p.tower
            )));
        }
        self.check_point(p)?;
        let mut level = p.level;
        let mut column = 0u32;
        for k in (m + 1..=p.tower).rev() {
            let h_lower = self.height(k - 1)?;
            match self.segment(h_lower, level) {
                Segment::Spacer => return Ok(ClimbPosition::Spacer { step: k }),
                Segment::Column { column: c, offset } => {
                    column = c;
                    level = offset;
                }
            }
        }
        Ok(ClimbPosition::Column {
            tower: m,
            column,
            offset: level,
        })
    }

    /// Whether p sits on the top level of its copy of tower n (n <= tower).
    /// A point inside a spacer inserted above step n is in no copy of tower
    /// n at all and yields a not-in-tower error.
    pub fn is_top(&self, p: &LevelPoint, n: u32) -> Result<bool> {
        if n == 0 || n > p.tower {
            return Err(Error::InvalidArgument(format!(
                "is_top wants 1 <= n <= tower, got n={n}, tower={}",
                p.tower
            )));
        }
        let h_tower = self.check_point(p)?;
        if n == p.tower {
            return Ok(p.level == h_tower - 1);
        }
        match self.locate(p, n)? {
            ClimbPosition::Spacer { .. } => Err(Error::NotInTower { tower: n }),
            ClimbPosition::Column { offset, .. } => Ok(offset == self.height(n)? - 1),
        }
    }

    /// n(x): the smallest n >= 1 such that p is not on the top of tower n,
    /// or None when p lies inside a spacer (the fiber action is then the
    /// identity). A point on the top of every simulated tower resolves
    /// through the extension policy.
    pub fn n_of_x(&self, p: &LevelPoint) -> Result<Option<u32>> {
        let table = self.height_table(p.tower)?;
        self.n_of_x_with(&table, p)
    }

    /// `n_of_x` against a precomputed height table (hot loops, no
    /// allocation).
    ///
    /// For a point that is not a spacer, "top of tower m" is downward
    /// closed in m: the top level of a copy of tower m is the top of its
    /// third column's copy of tower m-1, recursively (a top shadowed by
    /// trailing spacers is itself a spacer and is reported as such). So the
    /// first top met while descending gives n(x) directly.
    pub(crate) fn n_of_x_with(&self, heights: &[u64], p: &LevelPoint) -> Result<Option<u32>> {
        if p.level >= heights[p.tower as usize] {
            return Err(Error::LevelOutOfRange {
                tower: p.tower,
                level: p.level,
                height: heights[p.tower as usize],
            });
        }
        let top_is_level = p.tower == 1 || self.spacers[2] == 0;
        if p.level == heights[p.tower as usize] - 1 && top_is_level {
            // Top of every simulated tower: resolve via the extension policy.
            return match p.ext {
                ExtendPolicy::Error => Err(Error::TopOfTower { tower: p.tower }),
                ExtendPolicy::Base => Ok(Some(p.tower + 1)),
                ExtendPolicy::Random { seed } => {
                    let mut tower = p.tower;
                    let mut level = p.level;
                    loop {
                        let column = hash_column(seed, tower, level);
                        level += self.column_start(tower, column)?;
                        tower += 1;
                        // The embedded point is the top of the larger tower
                        // only when it lands at the very end of the layout.
                        if level != self.height(tower)? - 1 {
                            return Ok(Some(tower));
                        }
                    }
                }
            };
        }
        let shortcut_on_top = self.spacers[2] == 0;
        let mut level = p.level;
        for k in (2..=p.tower).rev() {
            let h_lower = heights[k as usize - 1];
            match self.segment(h_lower, level) {
                Segment::Spacer => return Ok(None),
                Segment::Column { offset, .. } => {
                    if shortcut_on_top && offset == h_lower - 1 {
                        return Ok(Some(k));
                    }
                    level = offset;
                }
            }
        }
        if level == heights[1] - 1 {
            Ok(Some(2))
        } else {
            Ok(Some(1))
        }
    }

    /// One step of the base transformation: the level above, re-embedding
    /// into the next tower per the extension policy when p is on top of the
    /// simulated tower.
    pub fn step(&self, p: &LevelPoint) -> Result<LevelPoint> {
        let h = self.check_point(p)?;
        if p.level + 1 < h {
            return Ok(LevelPoint {
                level: p.level + 1,
                ..*p
            });
        }
        match p.ext {
            ExtendPolicy::Error => Err(Error::TopOfTower { tower: p.tower }),
            ExtendPolicy::Base => self.step(&LevelPoint {
                tower: p.tower + 1,
                level: p.level,
                ext: p.ext,
            }),
            ExtendPolicy::Random { seed } => {
                let column = hash_column(seed, p.tower, p.level);
                let start = self.column_start(p.tower, column)?;
                self.step(&LevelPoint {
                    tower: p.tower + 1,
                    level: p.level + start,
                    ext: p.ext,
                })
            }
        }
    }

    /// Uniform random level of tower n. Deterministic in the generator
    /// state; the caller owns one generator per worker.
    pub fn sample_point(&self, n: u32, rng: &mut SplitMix64, ext: ExtendPolicy) -> Result<LevelPoint> {
        let h = self.height(n)?;
        Ok(LevelPoint {
            tower: n,
            level: rng.next_below(h),
            ext,
        })
    }
}
