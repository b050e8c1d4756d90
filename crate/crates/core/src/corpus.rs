//! The default test-function corpus.
//!
//! Supports are given as fractions of `ρ`. They stay at least `0.1ρ` away
//! from `x = ρ`, where the interior log weights may be singular and the
//! normalized logarithms approach 1.

use crate::testfunctions::{bump, Descriptor, JetFunction, TestFunctionError};
use crate::verifier::Side;

const INTERIOR_BUMPS: [(f64, f64); 6] =
    [(0.1, 0.9), (0.02, 0.2), (0.3, 0.6), (0.5, 0.9), (0.6, 0.85), (0.05, 0.5)];
const INTERIOR_PRODUCT: [(f64, f64); 2] = [(0.1, 0.7), (0.3, 0.9)];

const EXTERIOR_BUMPS: [(f64, f64); 6] = [(1.1, 3.0), (1.2, 1.6), (1.5, 4.0), (2.0, 10.0), (1.1, 20.0), (5.0, 8.0)];
const EXTERIOR_PRODUCT: [(f64, f64); 2] = [(1.2, 4.0), (2.0, 6.0)];

/// Six bumps and one product of bumps on the given side of `ρ`.
pub fn default_corpus(side: Side, rho: f64, max_order: usize) -> Result<Vec<JetFunction>, TestFunctionError> {
    let (bumps, product) = match side {
        Side::Interior => (&INTERIOR_BUMPS, &INTERIOR_PRODUCT),
        Side::Exterior => (&EXTERIOR_BUMPS, &EXTERIOR_PRODUCT),
    };
    let mut out = bumps
        .iter()
        .map(|&(a, b)| bump(a * rho, b * rho, max_order))
        .collect::<Result<Vec<_>, _>>()?;
    let factors = product.iter().map(|&(a, b)| Descriptor::Bump { a: a * rho, b: b * rho }).collect();
    out.push(JetFunction::new(Descriptor::Product { factors }, max_order)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_shape() {
        for side in [Side::Interior, Side::Exterior] {
            let c = default_corpus(side, 2.0, 3).unwrap();
            assert_eq!(c.len(), 7);
            for f in &c {
                let (a, b) = f.support();
                match side {
                    Side::Interior => assert!(a > 0.0 && b <= 1.8),
                    Side::Exterior => assert!(a >= 2.2 && b.is_finite()),
                }
            }
        }
    }
}
