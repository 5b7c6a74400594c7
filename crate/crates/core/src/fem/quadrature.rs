//! Triangle quadrature in barycentric coordinates. Weights sum to one and
//! are multiplied by the triangle area by the caller.

use crate::mesh::Point;

pub struct Rule {
    pub points: &'static [[f64; 3]],
    pub weights: &'static [f64],
}

/// Edge midpoints; exact for quadratics.
pub const EDGE_MIDPOINT: Rule =
    Rule { points: &[[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]], weights: &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0] };

const A1: f64 = 0.445_948_490_915_964_9;
const B1: f64 = 1.0 - 2.0 * A1;
const W1: f64 = 0.223_381_589_678_011_5;
const A2: f64 = 0.091_576_213_509_770_74;
const B2: f64 = 1.0 - 2.0 * A2;
const W2: f64 = 0.109_951_743_655_321_9;

/// Six-point rule, exact for degree 4.
pub const DEGREE4: Rule = Rule {
    points: &[[A1, A1, B1], [A1, B1, A1], [B1, A1, A1], [A2, A2, B2], [A2, B2, A2], [B2, A2, A2]],
    weights: &[W1, W1, W1, W2, W2, W2],
};

pub fn map(p: &[Point; 3], l: &[f64; 3]) -> Point {
    [l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0], l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1]]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(rule: &Rule, f: impl Fn(Point) -> f64) -> f64 {
        // Reference triangle (0,0), (1,0), (0,1), area 1/2.
        let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        0.5 * rule.points.iter().zip(rule.weights).map(|(l, w)| w * f(map(&tri, l))).sum::<f64>()
    }

    #[test]
    fn weights_sum_to_one() {
        assert!((DEGREE4.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((EDGE_MIDPOINT.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exactness() {
        // ∫ x^a y^b over the reference triangle = a! b! / (a + b + 2)!
        let fact = |n: u32| (1..=n).product::<u32>() as f64;
        for a in 0..=4u32 {
            for b in 0..=(4 - a) {
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                let q = integrate(&DEGREE4, |p| p[0].powi(a as i32) * p[1].powi(b as i32));
                assert!((q - exact).abs() < 1e-15, "x^{a} y^{b}");
                if a + b <= 2 {
                    let q = integrate(&EDGE_MIDPOINT, |p| p[0].powi(a as i32) * p[1].powi(b as i32));
                    assert!((q - exact).abs() < 1e-15);
                }
            }
        }
    }
}
