//! Deterministic point sets: direction fans and low-discrepancy sequences.

use std::f64::consts::PI;

use crate::vector::Vector;

/// `n` unit vectors evenly spaced on the circle, starting at +x.
pub fn circle_directions(n: usize) -> Vec<Vector> {
    (0..n)
        .map(|k| Vector::polar(2.0 * PI * k as f64 / n as f64))
        .collect()
}

/// `n` evenly spaced unit vectors rotated by `offset` grid spacings.
pub fn circle_directions_offset(n: usize, offset: f64) -> Vec<Vector> {
    (0..n)
        .map(|k| Vector::polar(2.0 * PI * (k as f64 + offset) / n as f64))
        .collect()
}

/// `n` quasi-uniform unit vectors on the sphere (Fibonacci lattice).
pub fn sphere_directions(n: usize) -> Vec<Vector> {
    let golden_angle = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden_angle * k as f64;
            Vector::new3(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Evenly spaced unit directions in R^2 or R^3.
pub fn directions(dim: usize, n: usize) -> Vec<Vector> {
    match dim {
        2 => circle_directions(n),
        3 => sphere_directions(n),
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// `n >= 2` evenly spaced values covering `[-bound, bound]` inclusive.
pub fn symmetric_grid(n: usize, bound: f64) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|k| -bound + 2.0 * bound * k as f64 / (n - 1) as f64)
        .collect()
}

/// Additive-recurrence (Kronecker) sequence in the unit cube.
///
/// Uses the generalised golden ratio for the requested dimension, which
/// gives low discrepancy in every dimension without per-axis primes.
#[derive(Debug, Clone)]
pub struct KroneckerSequence {
    alpha: Vec<f64>,
}

impl KroneckerSequence {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1);
        // Unique positive root of x^(d+1) = x + 1, by fixed-point iteration.
        let mut phi = 2.0f64;
        for _ in 0..64 {
            phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
        }
        let alpha = (1..=dim).map(|j| (1.0 / phi.powi(j as i32)).fract()).collect();
        Self { alpha }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// The `index`-th point, coordinates in `[0, 1)`.
    pub fn point(&self, index: usize) -> Vec<f64> {
        self.alpha
            .iter()
            .map(|a| (0.5 + a * (index as f64 + 1.0)).fract())
            .collect()
    }
}

/// Maps unit-cube coordinates to a point in the closed unit ball of `dim`
/// dimensions (area/volume preserving). Consumes `dim` coordinates.
pub fn cube_to_ball(dim: usize, coords: &[f64]) -> Vector {
    match dim {
        2 => {
            let r = coords[0].sqrt();
            Vector::polar(2.0 * PI * coords[1]) * r
        }
        3 => {
            let r = coords[0].cbrt();
            let z = 1.0 - 2.0 * coords[1];
            let s = (1.0 - z * z).max(0.0).sqrt();
            let phi = 2.0 * PI * coords[2];
            Vector::new3(s * phi.cos(), s * phi.sin(), z) * r
        }
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// SplitMix64 finaliser, used to derive independent child seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_directions_are_unit_and_balanced() {
        let dirs = sphere_directions(266);
        let mut sum = Vector::zeros(3);
        for d in &dirs {
            assert!((d.norm() - 1.0).abs() < 1e-12);
            sum += *d;
        }
        assert!(sum.norm() / 266.0 < 0.02);
    }

    #[test]
    fn kronecker_points_fill_the_square() {
        let seq = KroneckerSequence::new(2);
        let mut cells = [[0usize; 10]; 10];
        for i in 0..1000 {
            let p = seq.point(i);
            cells[(p[0] * 10.0) as usize][(p[1] * 10.0) as usize] += 1;
        }
        for row in cells {
            for c in row {
                assert!((5..=15).contains(&c), "cell count {c}");
            }
        }
    }

    #[test]
    fn grid_hits_both_ends_and_zero() {
        let g = symmetric_grid(5, 2.0);
        assert_eq!(g, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn seeds_are_distinct_per_stream() {
        let a = mix_seed(7, 0);
        let b = mix_seed(7, 1);
        assert_ne!(a, b);
        assert_eq!(a, mix_seed(7, 0));
    }
}
