//! Stokes operators of a single photon in the circular basis, the entangled
//! pair state and the Bell correlation operator.
//!
//! Basis order is `(R, L)` for one photon. For a pair, photon `a` is the slow
//! tensor index, so the pair basis is `RR, RL, LR, LL`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::fmt;

use num_complex::Complex64;

use crate::linalg::{tensor, ComplexMatrix, ComplexVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StokesAxis {
    S1,
    S2,
    S3,
}

impl StokesAxis {
    pub const ALL: [StokesAxis; 3] = [StokesAxis::S1, StokesAxis::S2, StokesAxis::S3];

    pub fn index(self) -> u8 {
        match self {
            StokesAxis::S1 => 1,
            StokesAxis::S2 => 2,
            StokesAxis::S3 => 3,
        }
    }

    pub fn from_index(index: u8) -> Option<Self> {
        match index {
            1 => Some(StokesAxis::S1),
            2 => Some(StokesAxis::S2),
            3 => Some(StokesAxis::S3),
            _ => None,
        }
    }
}

/// Which arm of the pair source a photon travels in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Photon {
    A,
    B,
}

/// Outcome of a projective Stokes measurement: an eigenvalue ±1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Minus, Sign::Plus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Minus => -1.0,
            Sign::Plus => 1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Minus => -1,
            Sign::Plus => 1,
        }
    }

    pub fn from_i8(v: i8) -> Option<Self> {
        match v {
            -1 => Some(Sign::Minus),
            1 => Some(Sign::Plus),
            _ => None,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Minus => Sign::Plus,
            Sign::Plus => Sign::Minus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Minus => "-1",
            Sign::Plus => "+1",
        })
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// One-photon Stokes operator restricted to the `(R, L)` subspace.
pub fn stokes_operator(axis: StokesAxis) -> ComplexMatrix {
    let entries = match axis {
        StokesAxis::S1 => [c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        StokesAxis::S2 => [c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
        StokesAxis::S3 => [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
    };
    ComplexMatrix::from_row_slice(2, 2, &entries)
}

/// Normalized eigenvector of `stokes_operator(axis)` with eigenvalue `value`.
/// The first nonzero component is real and positive.
pub fn stokes_eigenstate(axis: StokesAxis, value: Sign) -> ComplexVector {
    let h = FRAC_1_SQRT_2;
    let s = value.value();
    let entries = match axis {
        StokesAxis::S1 => [c(h, 0.0), c(s * h, 0.0)],
        StokesAxis::S2 => [c(h, 0.0), c(0.0, s * h)],
        StokesAxis::S3 => match value {
            Sign::Plus => [c(1.0, 0.0), c(0.0, 0.0)],
            Sign::Minus => [c(0.0, 0.0), c(1.0, 0.0)],
        },
    };
    ComplexVector::from_slice(&entries)
}

/// Stokes operator of one photon embedded in the pair space.
pub fn two_photon_stokes(axis: StokesAxis, photon: Photon) -> ComplexMatrix {
    let s = stokes_operator(axis);
    let id = ComplexMatrix::identity(2);
    match photon {
        Photon::A => tensor(&s, &id),
        Photon::B => tensor(&id, &s),
    }
}

/// Relative phase between the `|R_a L_b>` and `|L_a R_b>` components.
///
/// With `s2 = [[0, -i], [i, 0]]` this sign makes the state the `+2√2`
/// eigenvector of the Bell operator.
pub const BELL_PHASE: f64 = FRAC_PI_4;

/// `(|R_a L_b> + e^{iπ/4} |L_a R_b>) / √2`.
pub fn bell_state() -> ComplexVector {
    let h = FRAC_1_SQRT_2;
    let phase = Complex64::from_polar(h, BELL_PHASE);
    ComplexVector::from_slice(&[c(0.0, 0.0), c(h, 0.0), phase, c(0.0, 0.0)])
}

/// `s1(a)s1(b) + s2(a)s1(b) − s1(a)s2(b) + s2(a)s2(b)`.
pub fn bell_operator() -> ComplexMatrix {
    use Photon::{A, B};
    use StokesAxis::{S1, S2};
    let term = |i, j| &two_photon_stokes(i, A) * &two_photon_stokes(j, B);
    let sum = &term(S1, S1) + &term(S2, S1);
    let sum = &sum - &term(S1, S2);
    &sum + &term(S2, S2)
}

/// The Bell combination evaluated on numbers instead of operators.
pub fn bell_combination(s1a: f64, s2a: f64, s1b: f64, s2b: f64) -> f64 {
    s1a * s1b + s2a * s1b - s1a * s2b + s2a * s2b
}

/// Largest value of the Bell combination when every Stokes component is
/// assigned a definite eigenvalue ±1, by enumeration of all 16 assignments.
pub fn classical_chsh_bound() -> f64 {
    classical_assignments()
        .map(|[s1a, s2a, s1b, s2b]| bell_combination(s1a, s2a, s1b, s2b))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// All 16 assignments `(s1(a), s2(a), s1(b), s2(b)) ∈ {−1, +1}⁴`.
pub fn classical_assignments() -> impl Iterator<Item = [f64; 4]> {
    (0..16u32).map(|bits| {
        let pick = |k: u32| if bits >> k & 1 == 1 { 1.0 } else { -1.0 };
        [pick(3), pick(2), pick(1), pick(0)]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expectation, hermitian_eigen};
    use approx::assert_abs_diff_eq;

    #[test]
    fn stokes_matrices() {
        assert_eq!(
            stokes_operator(StokesAxis::S3).max_abs_diff(&ComplexMatrix::diag(&[1.0, -1.0])),
            0.0
        );
        for axis in StokesAxis::ALL {
            let d = hermitian_eigen(&stokes_operator(axis)).unwrap();
            assert_abs_diff_eq!(d.eigenvalues[0], -1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(d.eigenvalues[1], 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn su2_commutators_and_squares() {
        let s = |a| stokes_operator(a);
        let i2 = c(0.0, 2.0);
        for (i, j, k) in [
            (StokesAxis::S1, StokesAxis::S2, StokesAxis::S3),
            (StokesAxis::S2, StokesAxis::S3, StokesAxis::S1),
            (StokesAxis::S3, StokesAxis::S1, StokesAxis::S2),
        ] {
            assert!(s(i).commutator(&s(j)).max_abs_diff(&s(k).scale(i2)) < 1e-15);
            assert!(s(j).commutator(&s(i)).max_abs_diff(&s(k).scale(-i2)) < 1e-15);
        }
        for a in StokesAxis::ALL {
            assert!((&s(a) * &s(a)).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
            assert!(
                s(a).commutator(&s(a))
                    .max_abs_diff(&ComplexMatrix::zeros(2, 2))
                    < 1e-15
            );
        }
    }

    #[test]
    fn eigenstates_match_operators() {
        let h = FRAC_1_SQRT_2;
        assert_eq!(
            stokes_eigenstate(StokesAxis::S3, Sign::Plus).max_abs_diff(&ComplexVector::basis(2, 0)),
            0.0
        );
        let y = ComplexVector::from_slice(&[c(h, 0.0), c(0.0, h)]);
        assert!(stokes_eigenstate(StokesAxis::S2, Sign::Plus).max_abs_diff(&y) < 1e-16);
        let xm = ComplexVector::from_slice(&[c(h, 0.0), c(-h, 0.0)]);
        assert!(stokes_eigenstate(StokesAxis::S1, Sign::Minus).max_abs_diff(&xm) < 1e-16);

        for axis in StokesAxis::ALL {
            for sign in Sign::BOTH {
                let v = stokes_eigenstate(axis, sign);
                let sv = stokes_operator(axis).apply(&v).unwrap();
                assert!(sv.max_abs_diff(&v.scale(c(sign.value(), 0.0))) < 1e-15);
                assert_abs_diff_eq!(v.norm_sqr(), 1.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn pair_operators() {
        assert_eq!(
            two_photon_stokes(StokesAxis::S3, Photon::A)
                .max_abs_diff(&ComplexMatrix::diag(&[1.0, 1.0, -1.0, -1.0])),
            0.0
        );
        for i in StokesAxis::ALL {
            for j in StokesAxis::ALL {
                let comm =
                    two_photon_stokes(i, Photon::A).commutator(&two_photon_stokes(j, Photon::B));
                assert_eq!(comm.max_abs_diff(&ComplexMatrix::zeros(4, 4)), 0.0);
            }
            let d = hermitian_eigen(&two_photon_stokes(i, Photon::B)).unwrap();
            for (got, want) in d.eigenvalues.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
                assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn bell_state_structure() {
        let psi = bell_state();
        assert_abs_diff_eq!(psi.norm_sqr(), 1.0, epsilon = 1e-15);
        assert_eq!(psi.get(0).norm(), 0.0);
        assert_eq!(psi.get(3).norm(), 0.0);
        let s3a = two_photon_stokes(StokesAxis::S3, Photon::A);
        assert_abs_diff_eq!(expectation(&psi, &s3a).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn bell_operator_eigen() {
        let k = bell_operator();
        assert!(k.hermitian_deviation() <= 1e-15);
        let psi = bell_state();
        let q = 2.0 * std::f64::consts::SQRT_2;
        assert_abs_diff_eq!(expectation(&psi, &k).unwrap(), q, epsilon = 1e-12);
        let kpsi = k.apply(&psi).unwrap();
        assert!(kpsi.max_abs_diff(&psi.scale(c(q, 0.0))) < 1e-12);
        let d = hermitian_eigen(&k).unwrap();
        assert_abs_diff_eq!(*d.eigenvalues.last().unwrap(), q, epsilon = 1e-12);
    }

    #[test]
    fn verbatim_conjugate_phase_gives_zero() {
        // the other sign of the relative phase is orthogonal to the +2√2 eigenvector
        let h = FRAC_1_SQRT_2;
        let psi = ComplexVector::from_slice(&[
            c(0.0, 0.0),
            c(h, 0.0),
            Complex64::from_polar(h, -FRAC_PI_4),
            c(0.0, 0.0),
        ]);
        assert_abs_diff_eq!(
            expectation(&psi, &bell_operator()).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn classical_bound_by_enumeration() {
        assert_eq!(classical_chsh_bound(), 2.0);
        let min = classical_assignments()
            .map(|[a, b, c, d]| bell_combination(a, b, c, d))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(min, -2.0);
        assert_eq!(bell_combination(1.0, 1.0, 1.0, -1.0), 2.0);
        assert_eq!(classical_assignments().count(), 16);
        assert!(2.0 * std::f64::consts::SQRT_2 > classical_chsh_bound());
    }
}
