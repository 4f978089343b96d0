//! Complete enumeration of finite-support response types: pairs of a
//! treatment response `z -> x` and an outcome response `x -> y`.

use crate::error::{Error, Result};

pub const RESPONSE_TYPE_LIMIT: u128 = 1_000_000;

/// All joint response types for given cardinalities, in a fixed
/// lexicographic order.
#[derive(Debug, Clone)]
pub struct ResponseTypeSet {
    pub card_y: usize,
    pub card_x: usize,
    pub card_z: usize,
    /// `x_responses[a][z]` is the treatment taken at instrument level `z`.
    pub x_responses: Vec<Vec<usize>>,
    /// `y_responses[b][x]` is the outcome realized at treatment level `x`.
    pub y_responses: Vec<Vec<usize>>,
}

impl ResponseTypeSet {
    /// Number of joint types (`card_x^card_z * card_y^card_x`).
    pub fn len(&self) -> usize {
        self.x_responses.len() * self.y_responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Splits a joint index `t = a * |y_responses| + b`.
    pub fn split(&self, t: usize) -> (&[usize], &[usize]) {
        let ny = self.y_responses.len();
        (&self.x_responses[t / ny], &self.y_responses[t % ny])
    }
}

/// Enumerates every response type; deterministic lexicographic order with
/// the tuple `(f(0), f(1), ...)` increasing as the index grows.
pub fn enumerate_response_types(
    card_y: usize,
    card_x: usize,
    card_z: usize,
) -> Result<ResponseTypeSet> {
    if card_y < 2 || card_x < 2 {
        return Err(Error::InvalidParameter {
            name: "cardinalities",
            reason: format!("card_Y and card_X must be >= 2 (got {card_y}, {card_x})"),
        });
    }
    if card_z < 1 {
        return Err(Error::InvalidParameter {
            name: "card_z",
            reason: "instrument needs at least one level".into(),
        });
    }
    let n_x = checked_pow(card_x, card_z)?;
    let n_y = checked_pow(card_y, card_x)?;
    let total = n_x as u128 * n_y as u128;
    if total > RESPONSE_TYPE_LIMIT {
        return Err(Error::SizeGuard {
            context: "response-type enumeration",
            size: total,
            limit: RESPONSE_TYPE_LIMIT,
        });
    }

    Ok(ResponseTypeSet {
        card_y,
        card_x,
        card_z,
        x_responses: enumerate_functions(card_z, card_x, n_x),
        y_responses: enumerate_functions(card_x, card_y, n_y),
    })
}

/// All functions from a domain of size `dom` into `0..range`, lexicographic
/// in the value tuple.
fn enumerate_functions(dom: usize, range: usize, count: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(count);
    for idx in 0..count {
        let mut f = vec![0usize; dom];
        let mut rem = idx;
        for slot in (0..dom).rev() {
            f[slot] = rem % range;
            rem /= range;
        }
        out.push(f);
    }
    out
}

fn checked_pow(base: usize, exp: usize) -> Result<usize> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
        if acc > RESPONSE_TYPE_LIMIT {
            return Err(Error::SizeGuard {
                context: "response-type enumeration",
                size: acc,
                limit: RESPONSE_TYPE_LIMIT,
            });
        }
    }
    Ok(acc as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_setting_has_sixteen_types() {
        let set = enumerate_response_types(2, 2, 2).unwrap();
        assert_eq!(set.x_responses.len(), 4);
        assert_eq!(set.y_responses.len(), 4);
        assert_eq!(set.len(), 16);
    }

    #[test]
    fn counting_examples() {
        assert_eq!(enumerate_response_types(2, 2, 1).unwrap().len(), 8);
        assert_eq!(enumerate_response_types(3, 2, 2).unwrap().len(), 36);
    }

    #[test]
    fn enumeration_is_lexicographic_and_complete() {
        let set = enumerate_response_types(2, 2, 2).unwrap();
        assert_eq!(set.x_responses[0], vec![0, 0]);
        assert_eq!(set.x_responses[1], vec![0, 1]);
        assert_eq!(set.x_responses[2], vec![1, 0]);
        assert_eq!(set.x_responses[3], vec![1, 1]);
        let mut seen = std::collections::HashSet::new();
        for t in 0..set.len() {
            let (fx, fy) = set.split(t);
            seen.insert((fx.to_vec(), fy.to_vec()));
        }
        assert_eq!(seen.len(), 16);
    }

    #[test]
    fn guard_rejects_huge_instances() {
        assert!(matches!(
            enumerate_response_types(10, 10, 12),
            Err(Error::SizeGuard { .. })
        ));
        assert!(enumerate_response_types(1, 2, 2).is_err());
    }
}
