use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::rat;
use crate::jet::{transform_operator, ConcreteOperator, FiberTransformation, JetError, Poly, Problem, RationalFunction1D};

/// Draws `x~ = a x + b`, `u~ = phi(x) u` with `phi = c0 + c2 (x - s)^2`
/// (`c0 > 0`, `c2 >= 0`, hence positive everywhere) from a ChaCha stream
/// keyed by `seed`, and returns the transformed operator with the map.
/// Seed `0` is reserved for the identity.
pub fn generate_equivalent_pair(
    op: &ConcreteOperator,
    mode: Problem,
    seed: u64,
) -> Result<(ConcreteOperator, FiberTransformation), JetError> {
    let t = if seed == 0 {
        FiberTransformation::identity()
    } else {
        random_transformation(&mut ChaCha8Rng::seed_from_u64(seed))?
    };
    Ok((transform_operator(op, &t, mode)?, t))
}

fn random_transformation(rng: &mut ChaCha8Rng) -> Result<FiberTransformation, JetError> {
    let mut frac = |lo: i64, hi: i64, den_max: i64| rat(rng.random_range(lo..=hi), rng.random_range(1..=den_max));
    let sign = if frac(0, 1, 1) == rat(0, 1) { -1 } else { 1 };
    let a = frac(1, 12, 12) * rat(sign, 1);
    let b = frac(-24, 24, 12);
    let c0 = frac(1, 12, 12);
    let c2 = frac(0, 12, 12);
    let s = frac(-12, 12, 12);
    // c0 + c2 (x - s)^2 = (c0 + c2 s^2) - 2 c2 s x + c2 x^2
    let phi = Poly::from_coeffs(vec![&c0 + &c2 * &s * &s, rat(-2, 1) * &c2 * &s, c2]);
    FiberTransformation::affine(a, b, RationalFunction1D::poly(phi))
}
