use ndarray::Array2;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Draws t from the even mixture of Uniform(0, 1) and the density 2t on [0, 1].
///
/// The second component is sampled as the square root of a uniform draw; the mixture mean is 7/12.
pub fn sample_timestep(rng: &mut Rng) -> f64 {
    let u: f64 = rng.random();
    if rng.random_bool(0.5) {
        u
    } else {
        u.sqrt()
    }
}

/// One interpolated training point between a clean latent `x0` and its degraded `x1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowBatch {
    pub x_t: Array2<f64>,
    pub t: f64,
    /// Target velocity `x0 - x1`, pointing from degraded to clean.
    pub v_t: Array2<f64>,
}

pub fn make_training_example_at(x0: &Array2<f64>, x1: &Array2<f64>, t: f64) -> Result<FlowBatch> {
    if x0.dim() != x1.dim() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", x0.dim(), x1.dim())));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Config(format!("timestep {t} outside [0, 1]")));
    }
    let x_t = if t == 0.0 {
        x0.clone()
    } else if t == 1.0 {
        x1.clone()
    } else {
        x1 * t + x0 * (1.0 - t)
    };
    Ok(FlowBatch {
        x_t,
        t,
        v_t: x0 - x1,
    })
}

pub fn make_training_example(x0: &Array2<f64>, x1: &Array2<f64>, rng: &mut Rng) -> Result<FlowBatch> {
    make_training_example_at(x0, x1, sample_timestep(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn endpoints_and_degenerate_pair() {
        let x0 = Array2::from_shape_fn((3, 4), |(i, j)| (i + j) as f64 * 0.1);
        let x1 = Array2::from_shape_fn((3, 4), |(i, j)| (i * j) as f64 - 0.3);
        assert_eq!(make_training_example_at(&x0, &x1, 0.0).unwrap().x_t, x0);
        assert_eq!(make_training_example_at(&x0, &x1, 1.0).unwrap().x_t, x1);
        let b = make_training_example_at(&x0, &x0, 0.37).unwrap();
        assert!(b.v_t.iter().all(|v| *v == 0.0));
        assert!(make_training_example_at(&x0, &Array2::zeros((2, 4)), 0.5).is_err());
    }

    #[test]
    fn timestep_histogram_increases() {
        let mut rng = rng_from_seed(4);
        let mut bins = [0usize; 4];
        for _ in 0..200_000 {
            let t = sample_timestep(&mut rng);
            assert!((0.0..=1.0).contains(&t));
            bins[((t * 4.0) as usize).min(3)] += 1;
        }
        assert!(bins.windows(2).all(|w| w[0] < w[1]), "{bins:?}");
    }
}
