//! Seeded sampling from the Haar probability measure on the space of
//! unimodular lattices in the plane.
//!
//! The sampler draws a base point of the classical fundamental domain
//! `{|x| <= 1/2, x^2 + y^2 >= 1}` of the hyperbolic upper half plane with
//! density proportional to `1/y^2`, plus an independent uniform rotation.
//! The hyperbolic coordinate is drawn by an exact inverse transform on `y`
//! followed by rejection on `x^2 + y^2 >= 1`; the rotation accounts for the
//! compact factor.  Correctness of the resulting lattice distribution is
//! enforced empirically by the mean-value acceptance tests rather than
//! assumed.

use crate::error::Result;
use crate::geom::Vec2;
use crate::lattice::LatticeBasis;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const Y_MIN: f64 = 0.8660254037844386; // sqrt(3)/2

/// Deterministic, splittable sampler of Haar-distributed lattices.
#[derive(Clone, Debug)]
pub struct HaarSampler {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
    draws: u64,
    rejections: u64,
}

impl HaarSampler {
    pub fn new(seed: u64) -> HaarSampler {
        HaarSampler::with_stream(seed, 0)
    }

    /// Worker substream `idx` of the same seed.  Streams are statistically
    /// independent and fully determined by `(seed, idx)`, which makes
    /// parallel Monte Carlo results independent of the worker count.
    pub fn with_stream(seed: u64, idx: u64) -> HaarSampler {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(idx);
        HaarSampler {
            seed,
            stream: idx,
            rng,
            draws: 0,
            rejections: 0,
        }
    }

    pub fn substream(&self, idx: u64) -> HaarSampler {
        HaarSampler::with_stream(self.seed, idx)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// `(accepted draws, rejected draws)` of the fundamental-domain step.
    pub fn stats(&self) -> (u64, u64) {
        (self.draws, self.rejections)
    }

    /// One base point `(x, y, phi)`: `x` uniform on `(-1/2, 1/2]`, `y` with
    /// density proportional to `y^{-2}` on `[sqrt(3)/2, inf)` conditioned on
    /// `x^2 + y^2 >= 1`, and `phi` uniform on `[0, 2*pi)`.
    pub fn sample_base_point(&mut self) -> (f64, f64, f64) {
        let (x, y) = loop {
            self.draws += 1;
            let x = 0.5 - self.rng.gen::<f64>();
            // Inverse transform for the y^{-2} density: y = y_min / u with
            // u uniform on (0, 1].
            let y = Y_MIN / (1.0 - self.rng.gen::<f64>());
            if x * x + y * y >= 1.0 {
                break (x, y);
            }
            self.rejections += 1;
        };
        let phi = std::f64::consts::TAU * self.rng.gen::<f64>();
        (x, y, phi)
    }

    /// One Haar-distributed lattice: `rotation(phi) * (1/sqrt(y)) * [[1, x], [0, y]]`
    /// by columns.
    pub fn sample_lattice(&mut self) -> LatticeBasis {
        let (x, y, phi) = self.sample_base_point();
        let u = y.sqrt().recip();
        let b1 = Vec2::new(u, 0.0).rotated(phi);
        let b2 = Vec2::new(u * x, u * y).rotated(phi);
        LatticeBasis::from_columns_renormalized(b1, b2)
            .expect("hyperbolic coordinates always give a valid basis")
    }

    /// One horocycle translate: `x` uniform on `[0, 1)` with its shear basis.
    pub fn sample_translate_lattice(&mut self) -> Result<(f64, LatticeBasis)> {
        let x = self.rng.gen::<f64>();
        Ok((x, LatticeBasis::shear(x)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fixed_seed_reproduces_stream() {
        let mut a = HaarSampler::new(42);
        let mut b = HaarSampler::new(42);
        for _ in 0..100 {
            let pa = a.sample_base_point();
            let pb = b.sample_base_point();
            assert_eq!(pa, pb);
        }
        let la = a.sample_lattice();
        let lb = b.sample_lattice();
        assert_eq!(la.columns(), lb.columns());
    }

    #[test]
    fn seed_42_first_draw_is_pinned() {
        // Golden triple guarding the generator and draw order across
        // refactors; byte-exact.
        let (x, y, phi) = HaarSampler::new(42).sample_base_point();
        assert_eq!(x.to_bits(), (-0.18189619230667142f64).to_bits());
        assert_eq!(y.to_bits(), 17.416440502523887f64.to_bits());
        assert_eq!(phi.to_bits(), 2.6861647810063536f64.to_bits());
    }

    #[test]
    fn opposite_angles_give_the_same_lattice() {
        // phi and phi + pi produce negated bases, hence identical lattices;
        // the statistics we track cannot see the difference.
        let mut s = HaarSampler::new(6);
        let disc = crate::regions::ConvexRegion::disc(1.5).unwrap();
        for _ in 0..200 {
            let (x, y, phi) = s.sample_base_point();
            let build = |phi: f64| {
                let u = y.sqrt().recip();
                let b1 = Vec2::new(u, 0.0).rotated(phi);
                let b2 = Vec2::new(u * x, u * y).rotated(phi);
                LatticeBasis::from_columns_renormalized(b1, b2).unwrap()
            };
            let a = build(phi);
            let b = build(phi + std::f64::consts::PI);
            assert!((a.delta().unwrap() - b.delta().unwrap()).abs() <= 1e-12);
            assert_eq!(
                a.primitive_points_in(&disc).unwrap().len(),
                b.primitive_points_in(&disc).unwrap().len()
            );
        }
    }

    #[test]
    fn substreams_differ_but_are_reproducible() {
        let base = HaarSampler::new(7);
        let mut s1 = base.substream(1);
        let mut s2 = base.substream(2);
        let mut s1_again = base.substream(1);
        let p1 = s1.sample_base_point();
        assert_ne!(p1, s2.sample_base_point());
        assert_eq!(p1, s1_again.sample_base_point());
    }

    #[test]
    fn rejection_rate_in_sanity_band() {
        let mut s = HaarSampler::new(1);
        for _ in 0..10_000 {
            s.sample_base_point();
        }
        let (draws, rejections) = s.stats();
        let rate = rejections as f64 / draws as f64;
        assert!((0.05..=0.5).contains(&rate), "rejection rate {rate}");
    }

    #[test]
    fn base_point_marginals() {
        let mut s = HaarSampler::new(2);
        let n = 100_000;
        let mut sum_x = 0.0;
        let mut count_y_gt_2 = 0u64;
        for _ in 0..n {
            let (x, y, _) = s.sample_base_point();
            assert!((-0.5..=0.5).contains(&x));
            assert!(y >= Y_MIN);
            assert!(x * x + y * y >= 1.0);
            sum_x += x;
            if y > 2.0 {
                count_y_gt_2 += 1;
            }
        }
        // Mean of x within 4 sigma of 0 (sd of x is ~0.29/sqrt(n)).
        let mean_x = sum_x / n as f64;
        let sd = 0.29 / (n as f64).sqrt();
        assert!(mean_x.abs() < 4.0 * sd, "mean x = {mean_x}");

        // P(y > 2): mass of y^{-2} over {|x|<=1/2, y>2} is 1/2 (the disc
        // constraint is inactive there); the domain mass is the hyperbolic
        // area pi/3.  A crude numeric integral of the same quantity guards
        // against constant slips.
        let mut integral = 0.0;
        let steps = 2_000;
        for i in 0..steps {
            let x = -0.5 + (i as f64 + 0.5) / steps as f64;
            let y0 = (1.0 - x * x).sqrt().max(Y_MIN).max(2.0);
            integral += (1.0 / y0) * (1.0 / steps as f64);
        }
        let expect = integral / (std::f64::consts::PI / 3.0);
        assert_abs_diff_eq!(expect, 0.5 / (std::f64::consts::PI / 3.0), epsilon = 1e-9);
        let p = count_y_gt_2 as f64 / n as f64;
        let se = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!((p - expect).abs() < 4.0 * se, "P(y>2) = {p}, expected {expect}");
    }

    #[test]
    fn sampled_bases_are_valid() {
        let mut s = HaarSampler::new(3);
        for _ in 0..1_000 {
            let basis = s.sample_lattice();
            assert_abs_diff_eq!(basis.det(), 1.0, epsilon = 1e-12);
            let (b1, b2) = basis.columns();
            assert!(b1.is_finite() && b2.is_finite());
        }
    }

    #[test]
    fn translates_lie_on_the_zero_level() {
        let mut s = HaarSampler::new(4);
        for _ in 0..200 {
            let (x, basis) = s.sample_translate_lattice().unwrap();
            assert!((0.0..1.0).contains(&x));
            assert_abs_diff_eq!(basis.delta().unwrap(), 0.0, epsilon = 1e-12);
            // Flowing keeps delta below s by the Lipschitz bound.
            let flowed = basis.apply_flow(0.8).unwrap();
            assert!(flowed.delta().unwrap() <= 0.8 + 1e-9);
        }
    }
}
