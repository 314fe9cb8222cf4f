use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};

/// Haar-random unitary of dimension 2 or 4: QR of a complex Ginibre matrix
/// with the phases of diag(R) moved into Q.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<CMatrix> {
    if dim != 2 && dim != 4 {
        return Err(Error::UnsupportedDimension(dim));
    }
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let z = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * scale, im * scale)
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { c(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_abs_diff};
    use crate::stats::Accumulator;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitary_to_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for dim in [2, 4] {
            for _ in 0..50 {
                let u = haar_unitary(dim, &mut rng).unwrap();
                assert!(max_abs_diff(&(u.adjoint() * &u), &identity(dim)) < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_other_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(haar_unitary(3, &mut rng), Err(Error::UnsupportedDimension(3))));
        assert!(haar_unitary(8, &mut rng).is_err());
    }

    #[test]
    fn first_and_second_entry_moments() {
        // E|U00|^2 = 1/d, E|U00|^4 = 2/(d(d+1)).
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in [2usize, 4] {
            let mut m2 = Accumulator::new();
            let mut m4 = Accumulator::new();
            for _ in 0..20_000 {
                let u = haar_unitary(dim, &mut rng).unwrap();
                let p = u[(0, 0)].norm_sqr();
                m2.push(p);
                m4.push(p * p);
            }
            let d = dim as f64;
            assert!(m2.estimate().agrees_with(1.0 / d, 3.0));
            assert!(m4.estimate().agrees_with(2.0 / (d * (d + 1.0)), 3.0));
        }
    }
}
