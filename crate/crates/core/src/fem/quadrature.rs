//! Symmetric quadrature rules on the reference triangle `{ξ, η ≥ 0, ξ + η ≤ 1}`.

/// Points `(ξ, η)` and weights summing to the reference area 1/2.
#[derive(Debug, Clone)]
pub struct Rule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

/// Exact for polynomials of degree 2.
pub fn three_point() -> Rule {
    Rule {
        points: vec![[1.0 / 6.0, 1.0 / 6.0], [2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0]],
        weights: vec![1.0 / 6.0; 3],
    }
}

/// Exact for polynomials of degree 4.
pub fn six_point() -> Rule {
    let a = 0.445_948_490_915_965;
    let wa = 0.223_381_589_678_011_5;
    let b = 0.091_576_213_509_770_74;
    let wb = 0.109_951_743_655_321_87;
    let pts = [
        [a, a],
        [1.0 - 2.0 * a, a],
        [a, 1.0 - 2.0 * a],
        [b, b],
        [1.0 - 2.0 * b, b],
        [b, 1.0 - 2.0 * b],
    ];
    let w = [wa, wa, wa, wb, wb, wb];
    Rule {
        points: pts.to_vec(),
        weights: w.iter().map(|v| 0.5 * v).collect(),
    }
}
