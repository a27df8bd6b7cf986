//! Seeded samplers for property tests and Monte Carlo sweeps.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::ComplexMatrix;
use crate::quantum::{Channel, Effect, Filter, QState};
use crate::scalar::Real;
use crate::tol::Tolerances;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix<T> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(T::lit(re * s), T::lit(im * s))
    })
}

pub fn random_hermitian<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix<T> {
    ginibre::<T, R>(d, d, rng).hermitian_part()
}

/// Ginibre-distributed mixed state `G G† / tr(G G†)`.
pub fn random_state<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> QState<T> {
    let g = ginibre::<T, R>(d, d, rng);
    let m = &g * &g.dagger();
    let tr = m.trace().re;
    QState::from_matrix_unchecked(m.scale(T::one() / tr).hermitian_part())
}

pub fn random_pure<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> QState<T> {
    let g = ginibre::<T, R>(d, 1, rng);
    let v: Vec<Complex<T>> = (0..d).map(|i| g.get(i, 0)).collect();
    QState::pure(&v).expect("gaussian vector is non-zero")
}

/// Random effect with spectrum inside `[0, 1]`.
pub fn random_effect<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> Effect<T> {
    let g = ginibre::<T, R>(d, d, rng);
    let m = (&g * &g.dagger()).hermitian_part();
    let top = m.max_eigenvalue_h();
    let shrink: f64 = rng.gen_range(0.3..1.0);
    Effect::from_matrix_unchecked(m.scale(T::lit(shrink) / top))
}

/// Gaussian Kraus list made complete by `K_i ↦ K_i S^{-1/2}`.
pub fn random_channel<T: Real, R: Rng + ?Sized>(d_in: usize, d_out: usize, n_kraus: usize, rng: &mut R) -> Channel<T> {
    let kraus: Vec<ComplexMatrix<T>> = (0..n_kraus.max(1)).map(|_| ginibre(d_out, d_in, rng)).collect();
    Channel::from_kraus_normalized(kraus, &Tolerances::default()).expect("normalized Gaussian Kraus set")
}

/// General filter with `‖Σ K†K‖∞` drawn from `[0.2, 1]`.
pub fn random_filter<T: Real, R: Rng + ?Sized>(d: usize, n_kraus: usize, rng: &mut R) -> Filter<T> {
    let kraus: Vec<ComplexMatrix<T>> = (0..n_kraus.max(1)).map(|_| ginibre(d, d, rng)).collect();
    let f = Filter::from_kraus_unchecked(d, kraus.clone());
    let top = f.effect_operator().max_eigenvalue_h();
    let target: f64 = rng.gen_range(0.2..1.0);
    let s = (T::lit(target) / top).sqrt();
    Filter::from_kraus_unchecked(d, kraus.iter().map(|k| k.scale(s)).collect())
}

/// Random F₁ filter `√K (·) √K`.
pub fn random_f1_filter<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> Filter<T> {
    let k = random_effect::<T, R>(d, rng);
    Filter::f1(k.matrix().sqrt_psd(), &Tolerances::default()).expect("sqrt of an effect is an F1 operator")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samplers_are_seed_deterministic() {
        let a: Channel<f64> = random_channel(2, 2, 3, &mut seeded(7));
        let b: Channel<f64> = random_channel(2, 2, 3, &mut seeded(7));
        assert_eq!(a, b);
        let c: Channel<f64> = random_channel(2, 2, 3, &mut seeded(8));
        assert_ne!(a, c);
    }

    #[test]
    fn random_objects_satisfy_invariants() {
        let tol = Tolerances::default();
        let mut rng = seeded(11);
        for _ in 0..10 {
            let ch: Channel<f64> = random_channel(3, 2, 3, &mut rng);
            assert!(ch.marginal_deviation() < 1e-12);
            let f: Filter<f64> = random_filter(4, 3, &mut rng);
            assert!(f.effect_operator().max_eigenvalue_h() <= 1.0 + 1e-12);
            let e: Effect<f64> = random_effect(3, &mut rng);
            assert!(Effect::new(e.matrix().clone(), &tol).is_ok());
            let s: QState<f64> = random_state(3, &mut rng);
            assert!(QState::new(s.matrix().clone(), &tol).is_ok());
        }
    }
}
