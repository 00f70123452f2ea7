//! Exact arithmetic shared by every module: arbitrary-precision rationals,
//! path lengths mixing rational units with exact multiples of pi/2, and a
//! small bitset for subset work on point indices.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exact rational number used for all distances and matrix entries.
pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Formats a rational as `num` or `num/den`.
pub fn rat_to_string(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `num` or `num/den`.
pub fn rat_from_str(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    match s.split_once('/') {
        None => BigInt::from_str(s)
            .map(Rat::from_integer)
            .map_err(|e| format!("bad integer {s:?}: {e}")),
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|e| format!("bad numerator {n:?}: {e}"))?;
            let d =
                BigInt::from_str(d.trim()).map_err(|e| format!("bad denominator {d:?}: {e}"))?;
            if d.is_zero() {
                return Err(format!("zero denominator in {s:?}"));
            }
            Ok(Rat::new(n, d))
        }
    }
}

/// Serde adapter serializing a `Rat` as a `"num/den"` string.
pub mod rat_serde {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rat, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&rat_to_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Rat, D::Error> {
        let repr = RatRepr::deserialize(de)?;
        repr.into_rat().map_err(D::Error::custom)
    }
}

/// Accepts integers or `"num/den"` strings on input.
#[derive(Deserialize)]
#[serde(untagged)]
pub enum RatRepr {
    Int(i64),
    Str(String),
}

impl RatRepr {
    pub fn into_rat(self) -> Result<Rat, String> {
        match self {
            RatRepr::Int(n) => Ok(rat_int(n)),
            RatRepr::Str(s) => rat_from_str(&s),
        }
    }
}

/// pi/2 as an exact rational approximation, accurate to below 1e-19.
/// Mixed comparisons between plain lengths and pi/2 multiples substitute
/// this value; all other arithmetic stays symbolic.
pub fn pi_over_two() -> &'static Rat {
    static PI2: OnceLock<Rat> = OnceLock::new();
    PI2.get_or_init(|| {
        Rat::new(
            BigInt::from_str("15707963267948966192").unwrap(),
            BigInt::from_str("10000000000000000000").unwrap(),
        )
    })
}

/// A path length of the form `units + quarters * (pi/2)` with both parts
/// exact rationals. Lengths coming from spherical 1-skeletons live purely in
/// the `quarters` part; vertical edges of coarsening graphs live in `units`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Length {
    units: Rat,
    quarters: Rat,
}

impl Length {
    pub fn zero() -> Self {
        Length { units: Rat::zero(), quarters: Rat::zero() }
    }

    pub fn units(u: Rat) -> Self {
        Length { units: u, quarters: Rat::zero() }
    }

    pub fn quarters(q: Rat) -> Self {
        Length { units: Rat::zero(), quarters: q }
    }

    pub fn new(units: Rat, quarters: Rat) -> Self {
        Length { units, quarters }
    }

    pub fn unit_part(&self) -> &Rat {
        &self.units
    }

    pub fn quarter_part(&self) -> &Rat {
        &self.quarters
    }

    pub fn is_zero(&self) -> bool {
        self.units.is_zero() && self.quarters.is_zero()
    }

    /// Collapses to a single rational by substituting the fixed rational
    /// approximation for pi/2.
    pub fn to_rat(&self) -> Rat {
        &self.units + &self.quarters * pi_over_two()
    }

    pub fn to_f64(&self) -> f64 {
        rat_to_f64(&self.units) + rat_to_f64(&self.quarters) * std::f64::consts::FRAC_PI_2
    }
}

impl std::ops::Add for Length {
    type Output = Length;
    fn add(self, rhs: Length) -> Length {
        Length { units: self.units + rhs.units, quarters: self.quarters + rhs.quarters }
    }
}

impl std::ops::Add<&Length> for &Length {
    type Output = Length;
    fn add(self, rhs: &Length) -> Length {
        Length { units: &self.units + &rhs.units, quarters: &self.quarters + &rhs.quarters }
    }
}

impl PartialOrd for Length {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Length {
    /// Orders by substituted real value; structurally distinct lengths that
    /// collide under the substitution are separated lexicographically so the
    /// order stays total and consistent with `Eq`.
    fn cmp(&self, other: &Self) -> Ordering {
        self.to_rat()
            .cmp(&other.to_rat())
            .then_with(|| self.units.cmp(&other.units))
            .then_with(|| self.quarters.cmp(&other.quarters))
    }
}

impl fmt::Debug for Length {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Length {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.quarters.is_zero() {
            write!(f, "{}", rat_to_string(&self.units))
        } else if self.units.is_zero() {
            write!(f, "{}*pi/2", rat_to_string(&self.quarters))
        } else {
            write!(f, "{} + {}*pi/2", rat_to_string(&self.units), rat_to_string(&self.quarters))
        }
    }
}

impl Serialize for Length {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        if self.quarters.is_zero() {
            ser.serialize_str(&rat_to_string(&self.units))
        } else if self.units.is_zero() {
            let mut m = ser.serialize_map(Some(1))?;
            m.serialize_entry("quarter_turns", &rat_to_string(&self.quarters))?;
            m.end()
        } else {
            let mut m = ser.serialize_map(Some(2))?;
            m.serialize_entry("units", &rat_to_string(&self.units))?;
            m.serialize_entry("quarter_turns", &rat_to_string(&self.quarters))?;
            m.end()
        }
    }
}

impl<'de> Deserialize<'de> for Length {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Plain(RatRepr),
            Parts {
                #[serde(default)]
                units: Option<RatRepr>,
                #[serde(default)]
                quarter_turns: Option<RatRepr>,
            },
        }
        match Repr::deserialize(de)? {
            Repr::Plain(r) => Ok(Length::units(r.into_rat().map_err(D::Error::custom)?)),
            Repr::Parts { units, quarter_turns } => {
                let u = match units {
                    Some(r) => r.into_rat().map_err(D::Error::custom)?,
                    None => Rat::zero(),
                };
                let q = match quarter_turns {
                    Some(r) => r.into_rat().map_err(D::Error::custom)?,
                    None => Rat::zero(),
                };
                Ok(Length::new(u, q))
            }
        }
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    let n = r.numer();
    let d = r.denom();
    // Good enough for diagnostics and the swindle level computation; exact
    // comparisons never go through here.
    let nf = bigint_to_f64(n);
    let df = bigint_to_f64(d);
    nf / df
}

fn bigint_to_f64(n: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    n.to_f64().unwrap_or(if n.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}

/// Fixed-width bitset over point indices.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BitSet {
    words: Vec<u64>,
    len: usize,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(len: usize, it: I) -> Self {
        let mut b = BitSet::new(len);
        for i in it {
            b.insert(i);
        }
        b
    }

    pub fn insert(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn is_subset(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn union_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn intersects(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.len
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.contains(i))
    }
}
