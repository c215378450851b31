//! Node addressing on the 2^d-ary dyadic tree of [0,1]^d.
//!
//! A node at level k is the dyadic cube of side 2^-k reached by k digit
//! choices; each digit is a bit mask over the d axes, bit j (with axis 0 in
//! the least significant position) picking the upper half along axis j.
//! `NodePath` is the digit string, `DyadicCube` the geometric address, and
//! the two are in bijection via `path_to_cube` / `cube_to_path`.

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported ambient dimension; a digit must fit a byte (2^8 = 256).
pub const MAX_AMBIENT_DIM: u8 = 8;

/// Cube coordinates are u64, so levels are capped well below 64 bits.
pub const MAX_LEVEL: u32 = 60;

fn check_dim(dim: u8) -> Result<()> {
    if dim == 0 || dim > MAX_AMBIENT_DIM {
        return Err(Error::DimensionOutOfRange(dim));
    }
    Ok(())
}

/// Digit string addressing one node of the 2^d-ary tree.
///
/// The derived ordering (digits compared lexicographically) is exactly
/// depth-first preorder within one tree: a node sorts before its descendants
/// and siblings sort by digit. Witness tie-breaking relies on this.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodePath {
    dim: u8,
    digits: Vec<u8>,
}

impl NodePath {
    /// The root (empty digit string) of the dimension-`dim` tree.
    pub fn root(dim: u8) -> Result<Self> {
        check_dim(dim)?;
        Ok(NodePath { dim, digits: Vec::new() })
    }

    pub fn from_digits(dim: u8, digits: &[u8]) -> Result<Self> {
        check_dim(dim)?;
        if digits.len() as u64 > MAX_LEVEL as u64 {
            return Err(Error::LevelOverflow { level: digits.len() as u64, max: MAX_LEVEL });
        }
        let fanout = 1usize << dim;
        for &d in digits {
            if d as usize >= fanout {
                return Err(Error::DigitOutOfRange { digit: d, fanout });
            }
        }
        Ok(NodePath { dim, digits: digits.to_vec() })
    }

    pub fn ambient_dim(&self) -> u8 {
        self.dim
    }

    /// Number of children of every node: 2^d.
    pub fn fanout(&self) -> usize {
        1usize << self.dim
    }

    pub fn level(&self) -> u32 {
        self.digits.len() as u32
    }

    pub fn is_root(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn child(&self, digit: u8) -> Result<Self> {
        if digit as usize >= self.fanout() {
            return Err(Error::DigitOutOfRange { digit, fanout: self.fanout() });
        }
        if self.level() >= MAX_LEVEL {
            return Err(Error::LevelOverflow { level: self.level() as u64 + 1, max: MAX_LEVEL });
        }
        let mut digits = Vec::with_capacity(self.digits.len() + 1);
        digits.extend_from_slice(&self.digits);
        digits.push(digit);
        Ok(NodePath { dim: self.dim, digits })
    }

    pub fn parent(&self) -> Option<Self> {
        if self.is_root() {
            return None;
        }
        let mut digits = self.digits.clone();
        digits.pop();
        Some(NodePath { dim: self.dim, digits })
    }

    // In-place navigation for hot traversal loops; validity is the caller's
    // invariant, checked only in debug builds.
    // Scan cursors may push transiently past MAX_LEVEL while walking tails;
    // such paths never escape the crate, so only the digit range is checked.
    // Every public constructor still enforces the level cap.
    pub(crate) fn push(&mut self, digit: u8) {
        debug_assert!((digit as usize) < self.fanout());
        self.digits.push(digit);
    }

    pub(crate) fn pop(&mut self) {
        debug_assert!(!self.digits.is_empty());
        self.digits.pop();
    }

    pub(crate) fn truncate(&mut self, level: u32) {
        debug_assert!(level <= self.level());
        self.digits.truncate(level as usize);
    }

    /// The level-`level` node whose digit string is `index` written in base
    /// 2^d, most significant digit first. Index order equals preorder among
    /// the nodes of one level.
    pub fn from_level_index(dim: u8, level: u32, index: u64) -> Result<Self> {
        check_dim(dim)?;
        if level > MAX_LEVEL {
            return Err(Error::LevelOverflow { level: level as u64, max: MAX_LEVEL });
        }
        let total_bits = dim as u32 * level;
        if total_bits < 64 && index >> total_bits != 0 {
            return Err(Error::domain(format!(
                "level index {index} out of range for level {level}"
            )));
        }
        let mask = (1u64 << dim) - 1;
        let mut digits = vec![0u8; level as usize];
        let mut rest = index;
        for slot in digits.iter_mut().rev() {
            *slot = (rest & mask) as u8;
            rest >>= dim;
        }
        Ok(NodePath { dim, digits })
    }

    /// Parses the textual form produced by `Display`.
    ///
    /// Dimensions 1..=5 use one alphanumeric character per digit
    /// (0-9 then a-v, base 2^d); dimensions 6..=8 use dot-separated decimal
    /// digits because a single character can no longer hold a digit.
    pub fn parse(dim: u8, s: &str) -> Result<Self> {
        check_dim(dim)?;
        let mut digits = Vec::new();
        if dim <= 5 {
            for ch in s.chars() {
                let v = match ch {
                    '0'..='9' => ch as u8 - b'0',
                    'a'..='v' => ch as u8 - b'a' + 10,
                    _ => return Err(Error::Parse(format!("invalid path character `{ch}`"))),
                };
                digits.push(v);
            }
        } else if !s.is_empty() {
            for part in s.split('.') {
                let v: u8 = part
                    .parse()
                    .map_err(|_| Error::Parse(format!("invalid path digit `{part}`")))?;
                digits.push(v);
            }
        }
        Self::from_digits(dim, &digits)
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dim <= 5 {
            for &d in &self.digits {
                let ch = if d < 10 { (b'0' + d) as char } else { (b'a' + d - 10) as char };
                write!(f, "{ch}")?;
            }
        } else {
            let mut first = true;
            for &d in &self.digits {
                if !first {
                    write!(f, ".")?;
                }
                write!(f, "{d}")?;
                first = false;
            }
        }
        Ok(())
    }
}

/// A dyadic cube: at `level` k, axis coordinates in [0, 2^k) addressing
/// the half-open cube `prod_j [coords[j] 2^-k, (coords[j]+1) 2^-k)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DyadicCube {
    level: u32,
    coords: Vec<u64>,
}

impl DyadicCube {
    pub fn new(level: u32, coords: Vec<u64>) -> Result<Self> {
        check_dim(coords.len().try_into().unwrap_or(0))?;
        if level > MAX_LEVEL {
            return Err(Error::LevelOverflow { level: level as u64, max: MAX_LEVEL });
        }
        let side_count = 1u64 << level;
        for (axis, &c) in coords.iter().enumerate() {
            if c >= side_count {
                return Err(Error::CubeCoordOutOfRange { axis, coord: c, level });
            }
        }
        Ok(DyadicCube { level, coords })
    }

    pub fn ambient_dim(&self) -> u8 {
        self.coords.len() as u8
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    /// Side length 2^-level.
    pub fn side(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn min_corner(&self) -> Vec<f64> {
        let s = self.side();
        self.coords.iter().map(|&c| c as f64 * s).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        let s = self.side();
        self.coords.iter().map(|&c| (c as f64 + 0.5) * s).collect()
    }

    /// Half-open membership test.
    pub fn contains(&self, point: &[f64]) -> bool {
        if point.len() != self.coords.len() {
            return false;
        }
        let s = self.side();
        self.coords.iter().zip(point).all(|(&c, &x)| {
            let lo = c as f64 * s;
            x >= lo && x < lo + s
        })
    }
}

/// Digit string -> cube. Bit j of each digit selects the upper half along
/// axis j; axis 0 is the least significant bit.
pub fn path_to_cube(path: &NodePath) -> DyadicCube {
    let d = path.ambient_dim() as usize;
    let mut coords = vec![0u64; d];
    for &digit in path.digits() {
        for (j, coord) in coords.iter_mut().enumerate() {
            *coord = (*coord << 1) | ((digit >> j) & 1) as u64;
        }
    }
    DyadicCube { level: path.level(), coords }
}

/// Cube -> digit string; exact inverse of `path_to_cube`.
pub fn cube_to_path(cube: &DyadicCube) -> NodePath {
    let dim = cube.ambient_dim();
    let level = cube.level;
    let mut digits = Vec::with_capacity(level as usize);
    for step in 0..level {
        let shift = level - 1 - step;
        let mut digit = 0u8;
        for (j, &c) in cube.coords.iter().enumerate() {
            digit |= (((c >> shift) & 1) as u8) << j;
        }
        digits.push(digit);
    }
    NodePath { dim, digits }
}

/// The 2^d descendants of `path` at depth `m` below it that touch the center
/// of `path`'s cube: first digit c, then m-1 copies of the bitwise complement
/// of c. For m = 1 these are simply the 2^d children. Ordered by first digit.
///
/// For m >= 2 the level(path)+1 ancestors of the returned nodes are the 2^d
/// distinct children of `path`, so the tails hang from pairwise distinct
/// subtrees.
pub fn central_children(path: &NodePath, m: u32) -> Result<Vec<NodePath>> {
    if m == 0 {
        return Err(Error::domain("central children need tail length m >= 1"));
    }
    let new_level = path.level() as u64 + m as u64;
    if new_level > MAX_LEVEL as u64 {
        return Err(Error::LevelOverflow { level: new_level, max: MAX_LEVEL });
    }
    let fanout = path.fanout();
    let complement_mask = (fanout - 1) as u8;
    let mut out = Vec::with_capacity(fanout);
    for c in 0..fanout as u8 {
        let mut digits = Vec::with_capacity(path.digits().len() + m as usize);
        digits.extend_from_slice(path.digits());
        digits.push(c);
        let comp = complement_mask ^ c;
        for _ in 1..m {
            digits.push(comp);
        }
        out.push(NodePath { dim: path.ambient_dim(), digits });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(dim: u8, digits: &[u8]) -> NodePath {
        NodePath::from_digits(dim, digits).unwrap()
    }

    #[test]
    fn digit_three_in_the_plane_is_the_upper_right_quadrant() {
        let cube = path_to_cube(&p(2, &[3]));
        assert_eq!(cube.level(), 1);
        assert_eq!(cube.coords(), &[1, 1]);
        assert!(cube.contains(&[0.75, 0.75]));
        assert!(!cube.contains(&[0.1, 0.5]));
        assert!(!cube.contains(&[1.0, 1.0])); // half-open on the top faces
    }

    #[test]
    fn axis_zero_is_the_least_significant_bit() {
        // Digit 1 = bit 0 set: upper half along axis 0 only.
        let cube = path_to_cube(&p(2, &[1]));
        assert_eq!(cube.coords(), &[1, 0]);
    }

    #[test]
    fn root_cube_is_the_whole_box() {
        let cube = path_to_cube(&NodePath::root(3).unwrap());
        assert_eq!(cube.level(), 0);
        assert_eq!(cube.coords(), &[0, 0, 0]);
        assert!(cube.contains(&[0.0, 0.999, 0.5]));
    }

    #[test]
    fn cube_path_round_trip() {
        for (dim, digits) in [
            (1u8, vec![0u8, 1, 1, 0]),
            (2, vec![3, 0, 2, 1]),
            (3, vec![7, 5, 0]),
            (5, vec![31, 16, 9]),
        ] {
            let path = p(dim, &digits);
            assert_eq!(cube_to_path(&path_to_cube(&path)), path);
        }
    }

    #[test]
    fn central_children_line_d1() {
        let kids = central_children(&p(1, &[0]), 2).unwrap();
        let shown: Vec<String> = kids.iter().map(|k| k.to_string()).collect();
        assert_eq!(shown, vec!["001", "010"]);
    }

    #[test]
    fn central_children_plane_root() {
        let kids = central_children(&NodePath::root(2).unwrap(), 2).unwrap();
        let digits: Vec<&[u8]> = kids.iter().map(|k| k.digits()).collect();
        assert_eq!(digits, vec![&[0u8, 3][..], &[1, 2], &[2, 1], &[3, 0]]);
    }

    #[test]
    fn central_children_with_m1_are_all_children() {
        let kids = central_children(&p(2, &[2]), 1).unwrap();
        assert_eq!(kids.len(), 4);
        for (c, kid) in kids.iter().enumerate() {
            assert_eq!(kid.digits(), &[2, c as u8]);
        }
    }

    #[test]
    fn central_children_touch_the_parent_center() {
        // Every central child's cube must have the parent's center as one of
        // its corners: per axis the center coordinate equals the child's min
        // or max corner.
        for (dim, digits, m) in [
            (1u8, vec![0u8, 1], 1u32),
            (1, vec![1], 3),
            (2, vec![2, 3], 2),
            (3, vec![], 2),
            (3, vec![4], 3),
        ] {
            let parent = p(dim, &digits);
            let center = path_to_cube(&parent).center();
            for kid in central_children(&parent, m).unwrap() {
                let cube = path_to_cube(&kid);
                let lo = cube.min_corner();
                let side = cube.side();
                for j in 0..dim as usize {
                    let hi = lo[j] + side;
                    let touches = (center[j] - lo[j]).abs() < 1e-12
                        || (center[j] - hi).abs() < 1e-12;
                    assert!(
                        touches,
                        "dim {dim} path {parent} m {m} axis {j}: child {kid} misses center"
                    );
                }
            }
        }
    }

    #[test]
    fn central_children_have_distinct_first_step_ancestors() {
        for m in 2..=4 {
            let parent = p(2, &[1]);
            let kids = central_children(&parent, m).unwrap();
            let mut firsts: Vec<u8> = kids.iter().map(|k| k.digits()[parent.level() as usize]).collect();
            firsts.sort_unstable();
            firsts.dedup();
            assert_eq!(firsts.len(), parent.fanout());
        }
    }

    #[test]
    fn level_index_enumeration_matches_preorder() {
        let n0 = NodePath::from_level_index(2, 3, 0).unwrap();
        assert_eq!(n0.digits(), &[0, 0, 0]);
        let n5 = NodePath::from_level_index(2, 3, 5).unwrap();
        assert_eq!(n5.digits(), &[0, 1, 1]);
        let last = NodePath::from_level_index(2, 3, 63).unwrap();
        assert_eq!(last.digits(), &[3, 3, 3]);
        assert!(NodePath::from_level_index(2, 3, 64).is_err());
    }

    #[test]
    fn display_parse_round_trip() {
        for (dim, digits) in [
            (1u8, vec![0u8, 1, 0]),
            (4, vec![15, 0, 9]),
            (5, vec![31, 10]),
            (8, vec![255, 0, 17]),
        ] {
            let path = p(dim, &digits);
            let text = path.to_string();
            assert_eq!(NodePath::parse(dim, &text).unwrap(), path);
        }
        assert_eq!(NodePath::parse(3, "").unwrap(), NodePath::root(3).unwrap());
        assert!(NodePath::parse(1, "02").is_err()); // digit 2 needs dim >= 2
        assert!(NodePath::parse(2, "x").is_err());
    }

    #[test]
    fn rejects_bad_dimensions_and_digits() {
        assert!(NodePath::root(0).is_err());
        assert!(NodePath::root(9).is_err());
        assert!(NodePath::from_digits(2, &[4]).is_err());
        assert!(p(2, &[3]).child(4).is_err());
        assert!(DyadicCube::new(1, vec![2]).is_err());
        assert!(DyadicCube::new(61, vec![0]).is_err());
    }

    #[test]
    fn derived_order_is_preorder() {
        let root = NodePath::root(2).unwrap();
        let a = p(2, &[0]);
        let ab = p(2, &[0, 2]);
        let b = p(2, &[1]);
        assert!(root < a && a < ab && ab < b);
    }
}
