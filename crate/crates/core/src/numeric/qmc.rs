//! Randomly shifted rank-1 lattice points from the additive recurrence
//! `x_n = frac(s + n α)` with `α_j = φ_d^{-(j+1)}`, `φ_d` the positive root of
//! `x^{d+1} = x + 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Rd {
    alpha: Vec<f64>,
    shift: Vec<f64>,
}

fn generalized_golden(d: usize) -> f64 {
    let mut x: f64 = 2.0;
    for _ in 0..64 {
        x = (1.0 + x).powf(1.0 / (d as f64 + 1.0));
    }
    x
}

impl Rd {
    pub fn new(dim: usize, shift: Vec<f64>) -> Self {
        assert_eq!(shift.len(), dim);
        let phi = generalized_golden(dim);
        let alpha = (0..dim).map(|j| (1.0 / phi.powi(j as i32 + 1)).fract()).collect();
        Self { alpha, shift }
    }

    /// `count` independent Cranley–Patterson shifts drawn from `seed`.
    pub fn shifted_family(dim: usize, seed: u64, count: usize) -> Vec<Rd> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let s = (0..dim).map(|_| rng.random::<f64>()).collect();
                Rd::new(dim, s)
            })
            .collect()
    }

    pub fn point(&self, n: u64, out: &mut [f64]) {
        for ((o, a), s) in out.iter_mut().zip(&self.alpha).zip(&self.shift) {
            *o = (s + a * n as f64).fract();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_ratio_for_one_dimension() {
        assert!((generalized_golden(1) - 1.618033988749895).abs() < 1e-14);
    }

    #[test]
    fn smooth_integrand_converges() {
        let fam = Rd::shifted_family(3, 7, 2);
        let n = 1 << 14;
        let mut p = [0.0; 3];
        for rd in &fam {
            let mut s = 0.0;
            for i in 0..n {
                rd.point(i, &mut p);
                s += p.iter().map(|x| (std::f64::consts::PI * x).sin()).product::<f64>();
            }
            let exact = (2.0 / std::f64::consts::PI).powi(3);
            assert!((s / n as f64 - exact).abs() < 1e-4);
        }
    }
}
