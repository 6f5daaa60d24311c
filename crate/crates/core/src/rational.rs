//! Exact rational lengths.
//!
//! Every length, stretch factor and fold amount in the crate is a
//! [`Q`]. Serialized form is the string `"p/q"` (or `"p"` when the
//! denominator is one), which round-trips exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::Error;

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(n: i64) -> Q {
    BigRational::from_integer(BigInt::from(n))
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

pub fn is_positive(x: &Q) -> bool {
    x.is_positive()
}

pub fn format_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse_q(s: &str) -> Result<Q, Error> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad rational {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// `#[serde(with = "crate::rational::serde_q")]`
pub mod serde_q {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_q(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_q(&s).map_err(serde::de::Error::custom)
    }
}

pub mod serde_q_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(xs: &[Q], s: S) -> Result<S::Ok, S::Error> {
        xs.iter().map(format_q).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse_q(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_and_parse() {
        assert_eq!(format_q(&q(2, 4)), "1/2");
        assert_eq!(format_q(&qi(3)), "3");
        assert_eq!(parse_q("6/4").unwrap(), q(3, 2));
        assert_eq!(parse_q("-5").unwrap(), qi(-5));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("x").is_err());
    }
}
