use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expr::{Expr, Params, Point};
use crate::{Error, Result};

/// Axis-aligned sampling region with a singularity exclusion tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub lower: Point,
    pub upper: Point,
    /// Points closer than this to a singularity of any checked expression are
    /// rejected.
    pub sing_tol: f64,
    pub samples: usize,
    pub seed: u64,
}

pub const DEFAULT_SING_TOL: f64 = 1e-3;
pub const DEFAULT_SAMPLES: usize = 500;
pub const DEFAULT_SEED: u64 = 20_240_917;

/// Attempts allowed per requested sample before giving up (rejection > 99%).
const RETRY_FACTOR: usize = 100;

impl SampleBox {
    pub fn new(lower: Point, upper: Point) -> Result<SampleBox> {
        let b = SampleBox {
            lower,
            upper,
            sing_tol: DEFAULT_SING_TOL,
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn cube(lo: f64, hi: f64) -> Result<SampleBox> {
        SampleBox::new([lo; 3], [hi; 3])
    }

    pub fn with_samples(mut self, samples: usize) -> SampleBox {
        self.samples = samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> SampleBox {
        self.seed = seed;
        self
    }

    pub fn with_sing_tol(mut self, sing_tol: f64) -> SampleBox {
        self.sing_tol = sing_tol;
        self
    }

    // negated comparisons also reject NaN bounds
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        for k in 0..3 {
            if !(self.lower[k] < self.upper[k]) {
                return Err(Error::precondition(format!(
                    "sample box axis {} has lower {} >= upper {}",
                    k + 1,
                    self.lower[k],
                    self.upper[k]
                )));
            }
        }
        if !(self.sing_tol > 0.0) {
            return Err(Error::precondition("singular tolerance must be positive"));
        }
        if self.samples == 0 {
            return Err(Error::precondition("sample count must be positive"));
        }
        Ok(())
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..3).all(|k| p[k] >= self.lower[k] && p[k] <= self.upper[k])
    }

    /// The box grown by `factor` times its width on every side.
    pub fn inflated(&self, factor: f64) -> SampleBox {
        let mut out = self.clone();
        for k in 0..3 {
            let w = self.upper[k] - self.lower[k];
            out.lower[k] -= factor * w;
            out.upper[k] += factor * w;
        }
        out
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn uniform(&self, rng: &mut ChaCha8Rng) -> Point {
        std::array::from_fn(|k| rng.gen_range(self.lower[k]..self.upper[k]))
    }

    /// `count` uniform points accepted by `accept`, in a fixed order
    /// determined by the seed.
    pub fn sample_where<F>(&self, count: usize, mut accept: F) -> Result<Vec<Point>>
    where
        F: FnMut(&Point) -> bool,
    {
        self.validate()?;
        let mut rng = self.rng();
        let mut out = Vec::with_capacity(count);
        let budget = count.saturating_mul(RETRY_FACTOR).max(RETRY_FACTOR);
        let mut attempts = 0;
        while out.len() < count {
            if attempts == budget {
                return Err(Error::Sampling(format!(
                    "only {} of {} points accepted after {} attempts (over 99% rejected as singular)",
                    out.len(),
                    count,
                    attempts
                )));
            }
            attempts += 1;
            let p = self.uniform(&mut rng);
            if accept(&p) {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Latin-hypercube points (one per stratum on each axis) accepted by
    /// `accept`. Rejected strata are redrawn with jitter inside the same
    /// stratum before moving on.
    #[allow(clippy::needless_range_loop)]
    pub fn latin_hypercube_where<F>(&self, count: usize, mut accept: F) -> Result<Vec<Point>>
    where
        F: FnMut(&Point) -> bool,
    {
        self.validate()?;
        let mut rng = self.rng();
        let mut strata: [Vec<usize>; 3] = std::array::from_fn(|_| (0..count).collect());
        for s in &mut strata {
            for i in (1..s.len()).rev() {
                let j = rng.gen_range(0..=i);
                s.swap(i, j);
            }
        }
        let mut out = Vec::with_capacity(count);
        let mut rejected = 0usize;
        for i in 0..count {
            let mut placed = false;
            for _ in 0..RETRY_FACTOR {
                let p: Point = std::array::from_fn(|k| {
                    let cell = (strata[k][i] as f64 + rng.gen::<f64>()) / count as f64;
                    self.lower[k] + cell * (self.upper[k] - self.lower[k])
                });
                if accept(&p) {
                    out.push(p);
                    placed = true;
                    break;
                }
            }
            if !placed {
                rejected += 1;
            }
        }
        if out.len() * 100 < count || out.is_empty() {
            return Err(Error::Sampling(format!(
                "{rejected} of {count} latin-hypercube strata rejected as singular"
            )));
        }
        // Fill strata lost to singular sets with uniform draws.
        let fill = count - out.len();
        if fill > 0 {
            let extra = self.with_seed_offset(1).sample_where(fill, accept)?;
            out.extend(extra);
        }
        Ok(out)
    }

    fn with_seed_offset(&self, offset: u64) -> SampleBox {
        let mut b = self.clone();
        b.seed = self.seed.wrapping_add(offset);
        b
    }
}

/// Whether every expression evaluates at `p` with singularity margin above `sing_tol`.
pub fn regular_at(exprs: &[Expr], p: &Point, params: &Params, sing_tol: f64) -> bool {
    exprs.iter().all(|e| match e.eval_with_margin(p, params) {
        Ok((_, margin)) => margin > sing_tol,
        Err(_) => false,
    })
}

/// Deterministic uniform samples with every guard satisfying `|g(x)| > sing_tol`
/// (and every guard's own singularities avoided).
pub fn sample_points(b: &SampleBox, guards: &[Expr], params: &Params) -> Result<Vec<Point>> {
    b.sample_where(b.samples, |p| {
        guards.iter().all(|g| match g.eval_with_margin(p, params) {
            Ok((v, margin)) => v.abs() > b.sing_tol && margin > b.sing_tol,
            Err(_) => false,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn guard_keeps_away_from_plane() {
        let b = SampleBox::cube(0.1, 2.0).unwrap().with_samples(300);
        let pts = sample_points(&b, &[parse("x3").unwrap()], &Params::new()).unwrap();
        assert_eq!(pts.len(), 300);
        assert!(pts.iter().all(|p| p[2].abs() > 1e-3 && b.contains(p)));
    }

    #[test]
    fn same_seed_same_sequence() {
        let b = SampleBox::cube(-1.0, 1.0).unwrap().with_samples(50);
        let a = sample_points(&b, &[], &Params::new()).unwrap();
        let c = sample_points(&b, &[], &Params::new()).unwrap();
        assert_eq!(a, c);
        let d = sample_points(&b.clone().with_seed(7), &[], &Params::new()).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn cosine_guard_avoids_pole() {
        let b = SampleBox::new([1.4, 0.0, 0.0], [1.75, 1.0, 1.0])
            .unwrap()
            .with_samples(2000)
            .with_sing_tol(1e-2);
        let pts = sample_points(&b, &[parse("cos(x1)").unwrap()], &Params::new()).unwrap();
        let half_pi = std::f64::consts::FRAC_PI_2;
        assert!(pts.iter().all(|p| p[0].cos().abs() > 1e-2));
        assert!(pts.iter().all(|p| (p[0] - half_pi).abs() > 9e-3));
    }

    #[test]
    fn hopeless_guard_is_diagnosed() {
        let b = SampleBox::cube(0.0, 1.0).unwrap().with_samples(10).with_sing_tol(10.0);
        let err = sample_points(&b, &[parse("x1").unwrap()], &Params::new()).unwrap_err();
        assert!(matches!(err, Error::Sampling(_)));
    }

    #[test]
    fn invalid_boxes_are_rejected() {
        assert!(SampleBox::new([1.0, 0.0, 0.0], [0.0, 1.0, 1.0]).is_err());
        assert!(SampleBox::cube(0.0, 1.0).unwrap().with_sing_tol(0.0).validate().is_err());
    }

    #[test]
    fn latin_hypercube_fills_every_stratum() {
        let b = SampleBox::cube(0.0, 1.0).unwrap();
        let pts = b.latin_hypercube_where(40, |_| true).unwrap();
        for k in 0..3 {
            let mut cells: Vec<usize> = pts.iter().map(|p| (p[k] * 40.0) as usize).collect();
            cells.sort_unstable();
            assert_eq!(cells, (0..40).collect::<Vec<_>>());
        }
    }
}
