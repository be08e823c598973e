//! Signed joint quasi-probabilities for `s1` and `s2`.
//!
//! Expanding the measurement operator in the eigenprojectors of `s1` writes
//! every outcome density as a sum of Gaussians of variance `δs²`: one
//! centered on each eigenvalue, plus interference terms centered on the
//! midpoint `s1 = 0`. The interference terms are damped by
//! `exp(−1/(2δs²))` and can be negative. Collecting the coefficients gives a
//! table of joint weights over `(s1, s2)` with `s1 ∈ {−1, 0, +1}`.
//!
//! Two routes are provided. [`quasiprob_table_single`] and
//! [`quasiprob_table_pair`] build the tables from projector amplitudes;
//! [`deconvolve`] recovers them from a sampled density by least squares.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, tensor, ComplexMatrix, ComplexVector};
use crate::measurement::{
    gaussian_density, DensitySheet, FinalOutcome, OutcomeDensity, PointerAxis, PointerGrid,
    Resolution,
};
use crate::polarization::{bell_combination, stokes_eigenstate, stokes_operator, Sign, StokesAxis};

/// Largest tolerated condition number of the deconvolution normal matrix.
pub const MAX_CONDITION: f64 = 1e10;

/// Center of a Gaussian contribution on the `s1` axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum S1Value {
    Minus,
    Zero,
    Plus,
}

impl S1Value {
    pub const ALL: [S1Value; 3] = [S1Value::Minus, S1Value::Zero, S1Value::Plus];

    pub fn value(self) -> f64 {
        self.as_i8() as f64
    }

    pub fn as_i8(self) -> i8 {
        match self {
            S1Value::Minus => -1,
            S1Value::Zero => 0,
            S1Value::Plus => 1,
        }
    }

    pub fn from_i8(v: i8) -> Option<Self> {
        match v {
            -1 => Some(S1Value::Minus),
            0 => Some(S1Value::Zero),
            1 => Some(S1Value::Plus),
            _ => None,
        }
    }

    /// Midpoint of two eigenvalues ±1.
    fn midpoint(e: Sign, f: Sign) -> Self {
        match (e, f) {
            (Sign::Plus, Sign::Plus) => S1Value::Plus,
            (Sign::Minus, Sign::Minus) => S1Value::Minus,
            _ => S1Value::Zero,
        }
    }
}

/// Joint label `(s1, s2)` for one photon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct JointLabel {
    pub s1: S1Value,
    pub s2: Sign,
}

impl JointLabel {
    pub const fn new(s1: S1Value, s2: Sign) -> Self {
        JointLabel { s1, s2 }
    }

    /// Builds a label from integers, rejecting values outside
    /// `s1 ∈ {−1, 0, 1}`, `s2 ∈ {−1, 1}`.
    pub fn try_from_ints(s1: i8, s2: i8) -> Result<Self> {
        match (S1Value::from_i8(s1), Sign::from_i8(s2)) {
            (Some(s1), Some(s2)) => Ok(JointLabel { s1, s2 }),
            _ => Err(Error::InvalidLabel(format!("({s1},{s2})"))),
        }
    }

    /// Column order of the published tables for photon `a`:
    /// `(−1,−1), (0,−1), (1,−1), (−1,1), (0,1), (1,1)`.
    pub const COLUMN_ORDER: [JointLabel; 6] = [
        JointLabel::new(S1Value::Minus, Sign::Minus),
        JointLabel::new(S1Value::Zero, Sign::Minus),
        JointLabel::new(S1Value::Plus, Sign::Minus),
        JointLabel::new(S1Value::Minus, Sign::Plus),
        JointLabel::new(S1Value::Zero, Sign::Plus),
        JointLabel::new(S1Value::Plus, Sign::Plus),
    ];

    /// Row order of the published tables for photon `b` (the column order
    /// reversed).
    pub const ROW_ORDER: [JointLabel; 6] = [
        JointLabel::new(S1Value::Plus, Sign::Plus),
        JointLabel::new(S1Value::Zero, Sign::Plus),
        JointLabel::new(S1Value::Minus, Sign::Plus),
        JointLabel::new(S1Value::Plus, Sign::Minus),
        JointLabel::new(S1Value::Zero, Sign::Minus),
        JointLabel::new(S1Value::Minus, Sign::Minus),
    ];
}

impl fmt::Display for JointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.s1.as_i8(), self.s2.as_i8())
    }
}

impl Serialize for JointLabel {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        [self.s1.as_i8(), self.s2.as_i8()].serialize(serializer)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum System {
    Single,
    Pair,
}

impl System {
    pub fn name(self) -> &'static str {
        match self {
            System::Single => "single",
            System::Pair => "pair",
        }
    }
}

/// One weight. `labels` holds one label per photon, photon `a` first.
#[derive(Clone, Debug, PartialEq)]
pub struct TableEntry {
    pub labels: Vec<JointLabel>,
    pub weight: f64,
}

/// Signed joint weights over `(s1, s2)` labels.
///
/// Entries are stored in publication order: for one photon the
/// [`JointLabel::COLUMN_ORDER`]; for a pair, rows of photon `b` in
/// [`JointLabel::ROW_ORDER`] and within each row photon `a` in column order.
/// Finite-resolution tables keep the damped interference weights as they are.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiProbTable {
    pub system: System,
    pub resolution: Resolution,
    pub entries: Vec<TableEntry>,
}

impl QuasiProbTable {
    fn layout(system: System) -> Vec<Vec<JointLabel>> {
        match system {
            System::Single => JointLabel::COLUMN_ORDER.iter().map(|&l| vec![l]).collect(),
            System::Pair => JointLabel::ROW_ORDER
                .iter()
                .flat_map(|&b| JointLabel::COLUMN_ORDER.iter().map(move |&a| vec![a, b]))
                .collect(),
        }
    }

    fn from_fn<F: Fn(&[JointLabel]) -> f64>(system: System, resolution: Resolution, f: F) -> Self {
        let entries = Self::layout(system)
            .into_iter()
            .map(|labels| {
                let weight = f(&labels);
                TableEntry { labels, weight }
            })
            .collect();
        QuasiProbTable {
            system,
            resolution,
            entries,
        }
    }

    /// Weight for labels `[a]` or `[a, b]`.
    pub fn get(&self, labels: &[JointLabel]) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.labels == labels)
            .map(|e| e.weight)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }

    /// `1 − Σ weights`.
    pub fn normalization_deficit(&self) -> f64 {
        1.0 - self.total()
    }

    /// Total weight with `s1 = 0` on the given photon (0 for `a`, 1 for `b`).
    pub fn zero_marginal(&self, photon: usize) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.labels[photon].s1 == S1Value::Zero)
            .map(|e| e.weight)
            .sum()
    }

    /// `Σ weight · f(labels)`.
    pub fn moment<F: Fn(&[JointLabel]) -> f64>(&self, f: F) -> f64 {
        self.entries.iter().map(|e| e.weight * f(&e.labels)).sum()
    }

    pub fn min_weight(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.weight)
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest weight difference between two tables with the same layout.
    pub fn max_abs_diff(&self, other: &QuasiProbTable) -> f64 {
        assert_eq!(
            self.system, other.system,
            "tables describe different systems"
        );
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(x, y)| (x.weight - y.weight).abs())
            .fold(0.0, f64::max)
    }

    /// Remixes the table into a density: every weight contributes a Gaussian
    /// of variance `δs²` centered on its `s1` label(s), routed to the sheet of
    /// its `s2` label(s).
    pub fn reconstruct(
        &self,
        grid_a: PointerGrid,
        grid_b: Option<PointerGrid>,
    ) -> Result<OutcomeDensity> {
        let ds = self.resolution.delta_s()?;
        match (self.system, grid_b) {
            (System::Single, None) => {
                let sheets = FinalOutcome::SINGLE
                    .iter()
                    .map(|&outcome| {
                        let FinalOutcome::Single(s2) = outcome else {
                            unreachable!()
                        };
                        let values = grid_a
                            .points()
                            .map(|m| {
                                self.entries
                                    .iter()
                                    .filter(|e| e.labels[0].s2 == s2)
                                    .map(|e| {
                                        e.weight * gaussian_density(ds, m - e.labels[0].s1.value())
                                    })
                                    .sum()
                            })
                            .collect();
                        DensitySheet { outcome, values }
                    })
                    .collect();
                Ok(OutcomeDensity {
                    axes: vec![PointerAxis {
                        grid: grid_a,
                        delta_s: ds,
                    }],
                    sheets,
                })
            }
            (System::Pair, Some(grid_b)) => {
                let profile = |grid: PointerGrid| -> Vec<[f64; 3]> {
                    grid.points()
                        .map(|m| S1Value::ALL.map(|c| gaussian_density(ds, m - c.value())))
                        .collect()
                };
                let ga = profile(grid_a);
                let gb = profile(grid_b);
                let slot = |c: S1Value| (c.as_i8() + 1) as usize;
                let sheets = FinalOutcome::PAIR
                    .iter()
                    .map(|&outcome| {
                        let FinalOutcome::Pair(sa, sb) = outcome else {
                            unreachable!()
                        };
                        let terms: Vec<(usize, usize, f64)> = self
                            .entries
                            .iter()
                            .filter(|e| e.labels[0].s2 == sa && e.labels[1].s2 == sb)
                            .map(|e| (slot(e.labels[0].s1), slot(e.labels[1].s1), e.weight))
                            .collect();
                        let mut values = Vec::with_capacity(ga.len() * gb.len());
                        for pa in &ga {
                            for pb in &gb {
                                values.push(terms.iter().map(|&(i, j, w)| w * pa[i] * pb[j]).sum());
                            }
                        }
                        DensitySheet { outcome, values }
                    })
                    .collect();
                Ok(OutcomeDensity {
                    axes: vec![
                        PointerAxis {
                            grid: grid_a,
                            delta_s: ds,
                        },
                        PointerAxis {
                            grid: grid_b,
                            delta_s: ds,
                        },
                    ],
                    sheets,
                })
            }
            (System::Single, Some(_)) => Err(Error::WrongSystem {
                expected: "pair",
                actual: "single",
            }),
            (System::Pair, None) => Err(Error::WrongSystem {
                expected: "single",
                actual: "pair",
            }),
        }
    }
}

/// The `s1` eigenprojectors, indexed by `Sign` slot (minus first).
fn s1_projectors() -> [ComplexMatrix; 2] {
    let spectrum = hermitian_eigen(&stokes_operator(StokesAxis::S1)).expect("s1 is Hermitian");
    debug_assert!(spectrum.projectors[0].eigenvalue < 0.0);
    [
        spectrum.projectors[0].matrix.clone(),
        spectrum.projectors[1].matrix.clone(),
    ]
}

fn slot(s: Sign) -> usize {
    match s {
        Sign::Minus => 0,
        Sign::Plus => 1,
    }
}

fn check_state(state: &ComplexVector, dim: usize) -> Result<()> {
    if state.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: state.dim(),
        });
    }
    state.check_normalized()
}

/// One-photon table. With `A_e(s2) = <s2|Π_e|state>`, the weight at
/// `(s1 = e, s2)` is `|A_e(s2)|²` and the weight at `(0, s2)` is
/// `2 Re[A₊(s2) A₋(s2)*] · exp(−1/(2δs²))`.
pub fn quasiprob_table_single(state: &ComplexVector, res: Resolution) -> Result<QuasiProbTable> {
    check_state(state, 2)?;
    if let Resolution::Finite(ds) = res {
        Resolution::finite(ds)?;
    }
    let projectors = s1_projectors();
    let projected = projectors.map(|p| p.apply(state).expect("dimension checked"));
    let amplitude = |e: Sign, s2: Sign| -> Complex64 {
        stokes_eigenstate(StokesAxis::S2, s2)
            .inner(&projected[slot(e)])
            .expect("dimension checked")
    };

    Ok(QuasiProbTable::from_fn(System::Single, res, |labels| {
        let JointLabel { s1, s2 } = labels[0];
        let mut w = 0.0;
        for e in Sign::BOTH {
            for f in Sign::BOTH {
                if S1Value::midpoint(e, f) != s1 {
                    continue;
                }
                let d = res.damping(e.value() - f.value());
                w += (amplitude(e, s2) * amplitude(f, s2).conj()).re * d;
            }
        }
        w
    }))
}

/// Two-photon table from the amplitudes
/// `A(e_a, e_b) = <s2(a), s2(b)| Π_{e_a} ⊗ Π_{e_b} |state>`. Every ordered
/// pair of amplitudes contributes `Re[A A'*]` times one damping factor per
/// photon at the midpoint centers.
pub fn quasiprob_table_pair(state: &ComplexVector, res: Resolution) -> Result<QuasiProbTable> {
    check_state(state, 4)?;
    if let Resolution::Finite(ds) = res {
        Resolution::finite(ds)?;
    }
    let projectors = s1_projectors();
    // amplitudes[ea][eb][sa][sb]
    let mut amplitudes = [[[[Complex64::new(0.0, 0.0); 2]; 2]; 2]; 2];
    for ea in Sign::BOTH {
        for eb in Sign::BOTH {
            let proj = tensor(&projectors[slot(ea)], &projectors[slot(eb)]);
            let projected = proj.apply(state).expect("dimension checked");
            for sa in Sign::BOTH {
                for sb in Sign::BOTH {
                    let bra = tensor(
                        &stokes_eigenstate(StokesAxis::S2, sa),
                        &stokes_eigenstate(StokesAxis::S2, sb),
                    );
                    amplitudes[slot(ea)][slot(eb)][slot(sa)][slot(sb)] =
                        bra.inner(&projected).expect("dimension checked");
                }
            }
        }
    }

    Ok(QuasiProbTable::from_fn(System::Pair, res, |labels| {
        let (a, b) = (labels[0], labels[1]);
        let (sa, sb) = (slot(a.s2), slot(b.s2));
        let mut w = 0.0;
        for ea in Sign::BOTH {
            for fa in Sign::BOTH {
                if S1Value::midpoint(ea, fa) != a.s1 {
                    continue;
                }
                let da = res.damping(ea.value() - fa.value());
                for eb in Sign::BOTH {
                    for fb in Sign::BOTH {
                        if S1Value::midpoint(eb, fb) != b.s1 {
                            continue;
                        }
                        let db = res.damping(eb.value() - fb.value());
                        let x = amplitudes[slot(ea)][slot(eb)][sa][sb];
                        let y = amplitudes[slot(fa)][slot(fb)][sa][sb];
                        w += (x * y.conj()).re * da * db;
                    }
                }
            }
        }
        w
    }))
}

/// Least-squares weights of the Gaussians centered at `{−1, 0, +1}` (one
/// photon) or at the nine center pairs (two photons) that best reproduce
/// each sheet of `density`. Solved through the normal equations; fails when
/// their condition number exceeds [`MAX_CONDITION`], which happens when
/// `δs` is so large that the Gaussians are nearly collinear.
pub fn deconvolve(density: &OutcomeDensity, res: Resolution) -> Result<QuasiProbTable> {
    let ds = res.delta_s()?;
    let profiles: Vec<Vec<[f64; 3]>> = density
        .axes
        .iter()
        .map(|axis| {
            axis.grid
                .points()
                .map(|m| S1Value::ALL.map(|c| gaussian_density(ds, m - c.value())))
                .collect()
        })
        .collect();

    // basis functions: one per center, or one per (center_a, center_b)
    let centers: Vec<Vec<usize>> = match profiles.len() {
        1 => (0..3).map(|i| vec![i]).collect(),
        2 => (0..3)
            .flat_map(|i| (0..3).map(move |j| vec![i, j]))
            .collect(),
        _ => unreachable!("densities have one or two pointer axes"),
    };
    let nb = centers.len();
    let npts = density.points();
    let basis_at = |k: usize, c: &[usize]| -> f64 {
        match profiles.as_slice() {
            [pa] => pa[k][c[0]],
            [pa, pb] => {
                let n = pb.len();
                pa[k / n][c[0]] * pb[k % n][c[1]]
            }
            _ => unreachable!(),
        }
    };

    let mut design = DMatrix::<f64>::zeros(npts, nb);
    for k in 0..npts {
        for (col, c) in centers.iter().enumerate() {
            design[(k, col)] = basis_at(k, c);
        }
    }
    let gram = design.transpose() * &design;
    let spectrum = SymmetricEigen::new(gram.clone()).eigenvalues;
    let (lo, hi) = spectrum
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
            (lo.min(v), hi.max(v.abs()))
        });
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        return Err(Error::IllConditioned {
            delta_s: ds,
            condition,
        });
    }
    let chol = gram.cholesky().ok_or(Error::IllConditioned {
        delta_s: ds,
        condition,
    })?;

    let mut fitted: Vec<(FinalOutcome, Vec<f64>)> = Vec::new();
    for sheet in &density.sheets {
        let y = DVector::from_column_slice(&sheet.values);
        let rhs = design.transpose() * y;
        let w = chol.solve(&rhs);
        fitted.push((sheet.outcome, w.iter().copied().collect()));
    }

    let slot3 = |c: S1Value| (c.as_i8() + 1) as usize;
    let system = if density.is_pair() {
        System::Pair
    } else {
        System::Single
    };
    Ok(QuasiProbTable::from_fn(
        system,
        Resolution::Finite(ds),
        |labels| {
            let outcome = match labels {
                [a] => FinalOutcome::Single(a.s2),
                [a, b] => FinalOutcome::Pair(a.s2, b.s2),
                _ => unreachable!(),
            };
            let col = match labels {
                [a] => slot3(a.s1),
                [a, b] => 3 * slot3(a.s1) + slot3(b.s1),
                _ => unreachable!(),
            };
            fitted
                .iter()
                .find(|(o, _)| *o == outcome)
                .map(|(_, w)| w[col])
                .unwrap_or(0.0)
        },
    ))
}

/// Value of the Bell combination for one joint label per photon.
pub fn k_value(a: JointLabel, b: JointLabel) -> f64 {
    bell_combination(a.s1.value(), a.s2.value(), b.s1.value(), b.s2.value())
}

/// Signed weights of the Bell combination values `K ∈ {−2, …, 2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct KDistribution {
    weights: [f64; 5],
}

impl KDistribution {
    /// Values in display order.
    pub const VALUES: [i8; 5] = [2, -2, 1, -1, 0];

    pub fn get(&self, k: i8) -> f64 {
        assert!((-2..=2).contains(&k), "K must lie in -2..=2, got {k}");
        self.weights[(k + 2) as usize]
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ K · weight`.
    pub fn mean(&self) -> f64 {
        (-2i8..=2).map(|k| k as f64 * self.get(k)).sum()
    }

    /// Percentage rounded half away from zero to one decimal.
    pub fn rounded_percent(&self, k: i8) -> f64 {
        // adding 0.0 turns a rounded -0.0 into 0.0
        (self.get(k) * 1000.0).round() / 10.0 + 0.0
    }
}

/// Aggregates a pair table by the K value of each entry.
pub fn k_distribution(table: &QuasiProbTable) -> Result<KDistribution> {
    if table.system != System::Pair {
        return Err(Error::WrongSystem {
            expected: "pair",
            actual: table.system.name(),
        });
    }
    let mut weights = [0.0; 5];
    for e in &table.entries {
        let k = k_value(e.labels[0], e.labels[1]);
        weights[(k as i8 + 2) as usize] += e.weight;
    }
    Ok(KDistribution { weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expectation;
    use crate::measurement::{coincidence_density, single_outcome_density};
    use crate::polarization::{bell_state, two_photon_stokes, Photon};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn label(s1: i8, s2: i8) -> JointLabel {
        JointLabel::try_from_ints(s1, s2).unwrap()
    }

    fn y_plus() -> ComplexVector {
        stokes_eigenstate(StokesAxis::S2, Sign::Plus)
    }

    #[test]
    fn single_table_in_limit() {
        let t = quasiprob_table_single(&y_plus(), Resolution::Limit).unwrap();
        let want = [
            ((-1, 1), 0.25),
            ((0, 1), 0.5),
            ((1, 1), 0.25),
            ((-1, -1), 0.25),
            ((0, -1), -0.5),
            ((1, -1), 0.25),
        ];
        for ((s1, s2), w) in want {
            assert_abs_diff_eq!(t.get(&[label(s1, s2)]).unwrap(), w, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(t.total(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn single_table_at_finite_resolution_damps_middle_column() {
        for ds in [0.5, 1.0, 2.5] {
            let t = quasiprob_table_single(&y_plus(), Resolution::Finite(ds)).unwrap();
            let d = (-1.0 / (2.0 * ds * ds)).exp();
            assert_abs_diff_eq!(t.get(&[label(0, 1)]).unwrap(), 0.5 * d, epsilon = 1e-12);
            assert_abs_diff_eq!(t.get(&[label(0, -1)]).unwrap(), -0.5 * d, epsilon = 1e-12);
            for s in [-1, 1] {
                for e in [-1, 1] {
                    assert_abs_diff_eq!(t.get(&[label(e, s)]).unwrap(), 0.25, epsilon = 1e-12);
                }
            }
            // interference weights cancel over s2, so nothing is lost
            assert_abs_diff_eq!(t.normalization_deficit(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn s1_eigenstate_table() {
        let t = quasiprob_table_single(
            &stokes_eigenstate(StokesAxis::S1, Sign::Plus),
            Resolution::Limit,
        )
        .unwrap();
        for e in &t.entries {
            let want = if e.labels[0].s1 == S1Value::Plus {
                0.5
            } else {
                0.0
            };
            assert_abs_diff_eq!(e.weight, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn pair_table_spot_values() {
        let t = quasiprob_table_pair(&bell_state(), Resolution::Limit).unwrap();
        let r2 = std::f64::consts::SQRT_2;
        assert_abs_diff_eq!(
            t.get(&[label(1, 1), label(1, 1)]).unwrap(),
            (2.0 + r2) / 32.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            t.get(&[label(0, 1), label(0, 1)]).unwrap(),
            1.0 / (4.0 * r2),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            t.get(&[label(0, -1), label(0, 1)]).unwrap(),
            -1.0 / (4.0 * r2),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(t.total(), 1.0, epsilon = 1e-12);
        assert_eq!(t.entries.len(), 36);
    }

    #[test]
    fn k_values_from_labels() {
        assert_eq!(k_value(label(-1, -1), label(1, 1)), -2.0);
        assert_eq!(k_value(label(0, -1), label(0, 1)), -1.0);
        assert_eq!(k_value(label(0, 1), label(0, 1)), 1.0);
    }

    #[test]
    fn invalid_labels_rejected() {
        assert!(JointLabel::try_from_ints(2, 1).is_err());
        assert!(JointLabel::try_from_ints(0, 0).is_err());
    }

    #[test]
    fn k_distribution_of_bell_table() {
        let t = quasiprob_table_pair(&bell_state(), Resolution::Limit).unwrap();
        let k = k_distribution(&t).unwrap();
        assert_abs_diff_eq!(k.total(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k.mean(), 2.0 * std::f64::consts::SQRT_2, epsilon = 1e-12);
        // forced by Σw = 1, P(±1) = ±1/(2√2) and ΣK·w = 2√2
        let r2 = std::f64::consts::SQRT_2;
        assert_abs_diff_eq!(k.get(2), 0.5 + 3.0 / (4.0 * r2), epsilon = 1e-12);
        assert_abs_diff_eq!(k.get(-2), 0.5 - 3.0 / (4.0 * r2), epsilon = 1e-12);
        assert_abs_diff_eq!(k.get(1), 1.0 / (2.0 * r2), epsilon = 1e-12);
        assert_eq!(k.rounded_percent(2), 103.0);
        assert_eq!(k.rounded_percent(-2), -3.0);
        assert_eq!(k.rounded_percent(1), 35.4);
        assert_eq!(k.rounded_percent(-1), -35.4);
        assert_eq!(k.rounded_percent(0), 0.0);
        assert!(
            k_distribution(&quasiprob_table_single(&y_plus(), Resolution::Limit).unwrap()).is_err()
        );
    }

    #[test]
    fn deconvolve_exact_basis_member() {
        let grid = PointerGrid::new(-8.0, 8.0, 0.01).unwrap();
        let values: Vec<f64> = grid
            .points()
            .map(|m| gaussian_density(1.0, m - 1.0))
            .collect();
        let density = OutcomeDensity {
            axes: vec![PointerAxis { grid, delta_s: 1.0 }],
            sheets: vec![
                DensitySheet {
                    outcome: FinalOutcome::Single(Sign::Plus),
                    values,
                },
                DensitySheet {
                    outcome: FinalOutcome::Single(Sign::Minus),
                    values: vec![0.0; grid.len()],
                },
            ],
        };
        let t = deconvolve(&density, Resolution::Finite(1.0)).unwrap();
        for e in &t.entries {
            let want = if e.labels[0] == label(1, 1) { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(e.weight, want, epsilon = 1e-10);
        }
    }

    #[test]
    fn deconvolve_single_matches_analytic() {
        let res = Resolution::Finite(1.0);
        let grid = PointerGrid::new(-8.0, 8.0, 0.01).unwrap();
        let density = single_outcome_density(&y_plus(), res, grid).unwrap();
        let fitted = deconvolve(&density, res).unwrap();
        let analytic = quasiprob_table_single(&y_plus(), res).unwrap();
        assert!(fitted.max_abs_diff(&analytic) < 1e-8);
    }

    #[test]
    fn deconvolve_guard_trips_for_very_coarse_resolution() {
        let res = Resolution::Finite(200.0);
        let grid = PointerGrid::new(-1300.0, 1300.0, 2.0).unwrap();
        let density = single_outcome_density(&y_plus(), res, grid).unwrap();
        let err = deconvolve(&density, res).unwrap_err();
        assert!(matches!(err, Error::IllConditioned { delta_s, .. } if delta_s == 200.0));

        // the pair design squares the one-photon condition number
        let res = Resolution::Finite(20.0);
        let grid = PointerGrid::new(-130.0, 130.0, 2.0).unwrap();
        let density = coincidence_density(&bell_state(), res, grid, grid).unwrap();
        assert!(matches!(
            deconvolve(&density, res),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn deconvolve_works_at_documented_upper_resolution() {
        let res = Resolution::Finite(3.0);
        let grid = PointerGrid::new(-20.0, 20.0, 0.01).unwrap();
        let density = single_outcome_density(&y_plus(), res, grid).unwrap();
        let fitted = deconvolve(&density, res).unwrap();
        let analytic = quasiprob_table_single(&y_plus(), res).unwrap();
        assert!(fitted.max_abs_diff(&analytic) < 1e-6);
    }

    #[test]
    fn reconstruction_matches_pair_density() {
        let res = Resolution::Finite(1.5);
        let grid = PointerGrid::new(-6.0, 6.0, 0.25).unwrap();
        let direct = coincidence_density(&bell_state(), res, grid, grid).unwrap();
        let table = quasiprob_table_pair(&bell_state(), res).unwrap();
        let remixed = table.reconstruct(grid, Some(grid)).unwrap();
        for (x, y) in direct.sheets.iter().zip(&remixed.sheets) {
            assert_eq!(x.outcome, y.outcome);
            for (a, b) in x.values.iter().zip(&y.values) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
        assert!(table.reconstruct(grid, None).is_err());
        assert!(quasiprob_table_pair(&bell_state(), Resolution::Limit)
            .unwrap()
            .reconstruct(grid, Some(grid))
            .is_err());
    }

    fn random_state(dim: usize) -> impl Strategy<Value = ComplexVector> {
        proptest::collection::vec(-1.0f64..1.0, 2 * dim)
            .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
            .prop_map(|raw| {
                let entries: Vec<Complex64> =
                    raw.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
                ComplexVector::from_slice(&entries).normalized()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn single_moments_and_zero_marginal(psi in random_state(2)) {
            let t = quasiprob_table_single(&psi, Resolution::Limit).unwrap();
            let s1 = stokes_operator(StokesAxis::S1);
            let s2 = stokes_operator(StokesAxis::S2);
            let sym = (&(&s1 * &s2) + &(&s2 * &s1)).scale_real(0.5);
            prop_assert!((t.moment(|l| l[0].s1.value()) - expectation(&psi, &s1).unwrap()).abs() < 1e-12);
            prop_assert!((t.moment(|l| l[0].s2.value()) - expectation(&psi, &s2).unwrap()).abs() < 1e-12);
            prop_assert!((t.moment(|l| l[0].s1.value() * l[0].s2.value()) - expectation(&psi, &sym).unwrap()).abs() < 1e-12);
            prop_assert!(t.zero_marginal(0).abs() < 1e-12);
            prop_assert!((t.total() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn pair_moments_and_zero_marginals(psi in random_state(4), ds in 0.3f64..3.0) {
            let t = quasiprob_table_pair(&psi, Resolution::Limit).unwrap();
            for i in [StokesAxis::S1, StokesAxis::S2] {
                for j in [StokesAxis::S1, StokesAxis::S2] {
                    let op = &two_photon_stokes(i, Photon::A) * &two_photon_stokes(j, Photon::B);
                    let pick = |axis: StokesAxis, l: &JointLabel| match axis {
                        StokesAxis::S1 => l.s1.value(),
                        _ => l.s2.value(),
                    };
                    let m = t.moment(|l| pick(i, &l[0]) * pick(j, &l[1]));
                    prop_assert!((m - expectation(&psi, &op).unwrap()).abs() < 1e-12);
                }
            }
            let finite = quasiprob_table_pair(&psi, Resolution::Finite(ds)).unwrap();
            for table in [&t, &finite] {
                prop_assert!(table.zero_marginal(0).abs() < 1e-12);
                prop_assert!(table.zero_marginal(1).abs() < 1e-12);
                prop_assert!((table.total() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn single_reconstruction(psi in random_state(2), ds in 0.3f64..3.0) {
            let res = Resolution::Finite(ds);
            let grid = PointerGrid::new(-5.0, 5.0, 0.05).unwrap();
            let direct = single_outcome_density(&psi, res, grid).unwrap();
            let remixed = quasiprob_table_single(&psi, res).unwrap().reconstruct(grid, None).unwrap();
            for (x, y) in direct.sheets.iter().zip(&remixed.sheets) {
                for (a, b) in x.values.iter().zip(&y.values) {
                    prop_assert!((a - b).abs() < 1e-10);
                }
            }
        }
    }
}
