//! Finite-resolution measurement of `s1` followed by a projective `s2`
//! measurement, for one photon or for both photons of a pair.
//!
//! The measurement operator for pointer reading `m` is the operator-valued
//! Gaussian `(2π δs²)^{-1/4} exp(−(ŝ − m)² / (4 δs²))`. Its square integrates
//! to the identity over `m`, so the outcome densities below are properly
//! normalized probability densities in the pointer reading.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, ComplexMatrix, ComplexVector, SpectralDecomposition};
use crate::polarization::{stokes_eigenstate, stokes_operator, Sign, StokesAxis};

/// Measurement resolution `δs`, or the `δs → ∞` limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Resolution {
    Finite(f64),
    Limit,
}

impl Resolution {
    pub fn finite(delta_s: f64) -> Result<Self> {
        if delta_s.is_finite() && delta_s > 0.0 {
            Ok(Resolution::Finite(delta_s))
        } else {
            Err(Error::InvalidResolution(delta_s))
        }
    }

    /// The finite `δs`; the limit is rejected.
    pub fn delta_s(self) -> Result<f64> {
        match self {
            Resolution::Finite(ds) if ds.is_finite() && ds > 0.0 => Ok(ds),
            Resolution::Finite(ds) => Err(Error::InvalidResolution(ds)),
            Resolution::Limit => Err(Error::LimitResolution),
        }
    }

    /// Overlap factor `exp(−gap² / (8 δs²))` of two Gaussian amplitudes
    /// whose centers differ by `gap`. Equal to one in the limit.
    pub fn damping(self, gap: f64) -> f64 {
        match self {
            Resolution::Finite(ds) => (-(gap * gap) / (8.0 * ds * ds)).exp(),
            Resolution::Limit => 1.0,
        }
    }

    pub fn is_limit(self) -> bool {
        matches!(self, Resolution::Limit)
    }
}

/// Uniform grid of pointer readings `lo, lo + step, …` not exceeding `hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointerGrid {
    lo: f64,
    hi: f64,
    step: f64,
}

impl PointerGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        let ok = lo.is_finite() && hi.is_finite() && step.is_finite() && lo < hi && step > 0.0;
        if !ok {
            return Err(Error::InvalidGrid { lo, hi, step });
        }
        Ok(PointerGrid { lo, hi, step })
    }

    /// Symmetric grid `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, step: f64) -> Result<Self> {
        Self::new(-half_width, half_width, step)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        // the small slack keeps hi on the grid when (hi − lo)/step is integral
        ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, index: usize) -> f64 {
        self.lo + index as f64 * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Index of the grid point closest to `m` (clamped to the grid).
    pub fn nearest_index(&self, m: f64) -> usize {
        let raw = ((m - self.lo) / self.step).round();
        raw.clamp(0.0, (self.len() - 1) as f64) as usize
    }
}

/// Outcome of the final projective `s2` measurement(s).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FinalOutcome {
    Single(Sign),
    Pair(Sign, Sign),
}

impl FinalOutcome {
    /// Column order used everywhere: `+1` before `−1`.
    pub const SINGLE: [FinalOutcome; 2] = [
        FinalOutcome::Single(Sign::Plus),
        FinalOutcome::Single(Sign::Minus),
    ];
    pub const PAIR: [FinalOutcome; 4] = [
        FinalOutcome::Pair(Sign::Plus, Sign::Plus),
        FinalOutcome::Pair(Sign::Plus, Sign::Minus),
        FinalOutcome::Pair(Sign::Minus, Sign::Plus),
        FinalOutcome::Pair(Sign::Minus, Sign::Minus),
    ];

    /// Column name for serialized output, e.g. `p_s2_plus` or `p_a_plus_b_minus`.
    pub fn column_name(self) -> String {
        let word = |s: Sign| match s {
            Sign::Plus => "plus",
            Sign::Minus => "minus",
        };
        match self {
            FinalOutcome::Single(s) => format!("p_s2_{}", word(s)),
            FinalOutcome::Pair(a, b) => format!("p_a_{}_b_{}", word(a), word(b)),
        }
    }
}

/// Pointer axis of one photon: its grid and the resolution it was measured at.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointerAxis {
    pub grid: PointerGrid,
    pub delta_s: f64,
}

/// Density sheet for one final outcome. For two photons the values are
/// row-major with the photon `a` reading as the slow index.
#[derive(Clone, Debug, PartialEq)]
pub struct DensitySheet {
    pub outcome: FinalOutcome,
    pub values: Vec<f64>,
}

/// Sampled joint density of pointer reading(s) and final `s2` outcome(s).
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDensity {
    pub axes: Vec<PointerAxis>,
    pub sheets: Vec<DensitySheet>,
}

impl OutcomeDensity {
    pub fn is_pair(&self) -> bool {
        self.axes.len() == 2
    }

    /// Number of sample points in each sheet.
    pub fn points(&self) -> usize {
        self.axes.iter().map(|a| a.grid.len()).product()
    }

    /// Pointer coordinates of flat sample index `k`.
    pub fn coordinates(&self, k: usize) -> Vec<f64> {
        match self.axes.as_slice() {
            [a] => vec![a.grid.point(k)],
            [a, b] => {
                let nb = b.grid.len();
                vec![a.grid.point(k / nb), b.grid.point(k % nb)]
            }
            _ => unreachable!("densities have one or two pointer axes"),
        }
    }

    pub fn sheet(&self, outcome: FinalOutcome) -> Option<&DensitySheet> {
        self.sheets.iter().find(|s| s.outcome == outcome)
    }

    /// Area (or length) element of the grid.
    pub fn cell(&self) -> f64 {
        self.axes.iter().map(|a| a.grid.step).product()
    }

    /// Riemann sum of one sheet over the grid.
    pub fn sheet_probability(&self, outcome: FinalOutcome) -> Option<f64> {
        let cell = self.cell();
        self.sheet(outcome)
            .map(|s| s.values.iter().sum::<f64>() * cell)
    }

    /// Riemann sum over the grid, summed over final outcomes. Summation order
    /// is fixed (sheet by sheet, points in storage order).
    pub fn total_probability(&self) -> f64 {
        let cell = self.cell();
        self.sheets
            .iter()
            .map(|s| s.values.iter().sum::<f64>() * cell)
            .sum()
    }

    pub fn min_value(&self) -> f64 {
        self.sheets
            .iter()
            .flat_map(|s| s.values.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    /// Location and value of the maximum of one sheet. Ties resolve to the
    /// first point in storage order.
    pub fn argmax(&self, outcome: FinalOutcome) -> Option<(Vec<f64>, f64)> {
        let sheet = self.sheet(outcome)?;
        let (k, v) =
            sheet
                .values
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (k, &v)| {
                    if v > best.1 {
                        (k, v)
                    } else {
                        best
                    }
                });
        Some((self.coordinates(k), v))
    }
}

/// The Gaussian measurement operator family for one observable and one `δs`.
/// The spectral decomposition is computed once and reused for every pointer
/// reading.
#[derive(Clone, Debug)]
pub struct MeasurementKernel {
    spectrum: SpectralDecomposition,
    delta_s: f64,
}

impl MeasurementKernel {
    pub fn new(target: &ComplexMatrix, res: Resolution) -> Result<Self> {
        let delta_s = res.delta_s()?;
        Ok(MeasurementKernel {
            spectrum: hermitian_eigen(target)?,
            delta_s,
        })
    }

    pub fn delta_s(&self) -> f64 {
        self.delta_s
    }

    /// Scalar amplitude `(2π δs²)^{-1/4} exp(−(x − m)² / (4 δs²))`.
    pub fn amplitude(&self, x: f64, m: f64) -> f64 {
        gaussian_amplitude(self.delta_s, x - m)
    }

    /// The measurement operator at pointer reading `m`.
    pub fn operator(&self, m: f64) -> ComplexMatrix {
        self.spectrum.map(|x| self.amplitude(x, m))
    }
}

fn gaussian_amplitude(delta_s: f64, offset: f64) -> f64 {
    let var = delta_s * delta_s;
    (2.0 * PI * var).powf(-0.25) * (-(offset * offset) / (4.0 * var)).exp()
}

/// Normalized Gaussian density with standard deviation `delta_s`.
pub fn gaussian_density(delta_s: f64, offset: f64) -> f64 {
    let var = delta_s * delta_s;
    (2.0 * PI * var).powf(-0.5) * (-(offset * offset) / (2.0 * var)).exp()
}

/// Measurement operator for `target` at resolution `res` and reading `m`.
pub fn measurement_kernel(
    target: &ComplexMatrix,
    res: Resolution,
    m: f64,
) -> Result<ComplexMatrix> {
    Ok(MeasurementKernel::new(target, res)?.operator(m))
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

/// `P(m; s2) = |<s2| P̂(m) |state>|²` for the kernel on `s1` and a final
/// projection onto the `s2` eigenstates.
pub fn single_outcome_density(
    state: &ComplexVector,
    res: Resolution,
    grid: PointerGrid,
) -> Result<OutcomeDensity> {
    check_state(state, 2)?;
    let kernel = MeasurementKernel::new(&stokes_operator(StokesAxis::S1), res)?;
    let sheets = FinalOutcome::SINGLE
        .iter()
        .map(|&outcome| {
            let FinalOutcome::Single(s2) = outcome else {
                unreachable!()
            };
            let bra = stokes_eigenstate(StokesAxis::S2, s2);
            let values = grid
                .points()
                .map(|m| {
                    let after = kernel.operator(m).apply(state).expect("dimension checked");
                    bra.inner(&after).expect("dimension checked").norm_sqr()
                })
                .collect();
            DensitySheet { outcome, values }
        })
        .collect();
    Ok(OutcomeDensity {
        axes: vec![PointerAxis {
            grid,
            delta_s: kernel.delta_s(),
        }],
        sheets,
    })
}

/// Closed-form densities for the `s2 = +1` input state:
/// `(2π δs²)^{-1/2} exp(−(m² + 1)/(2 δs²))` times `cosh²(m/(2δs²))` for the
/// `+1` outcome and `sinh²(m/(2δs²))` for the `−1` outcome.
pub fn eigenstate_density_closed_form(res: Resolution, m: f64) -> Result<(f64, f64)> {
    let ds = res.delta_s()?;
    let var = ds * ds;
    let envelope = (2.0 * PI * var).powf(-0.5) * (-(m * m + 1.0) / (2.0 * var)).exp();
    let arg = m / (2.0 * var);
    Ok((envelope * arg.cosh().powi(2), envelope * arg.sinh().powi(2)))
}

/// Rows `<s2| P̂(m)` of the one-photon kernel for every grid point, indexed
/// `[point][sign]` with `Sign::Minus` at 0.
fn projected_rows(kernel: &MeasurementKernel, grid: PointerGrid) -> Vec<[[Complex64; 2]; 2]> {
    let bras = [
        stokes_eigenstate(StokesAxis::S2, Sign::Minus),
        stokes_eigenstate(StokesAxis::S2, Sign::Plus),
    ];
    grid.points()
        .map(|m| {
            let k = kernel.operator(m);
            let row = |bra: &ComplexVector| {
                let mut r = [Complex64::new(0.0, 0.0); 2];
                for (col, slot) in r.iter_mut().enumerate() {
                    *slot = (0..2).map(|i| bra.get(i).conj() * k.get(i, col)).sum();
                }
                r
            };
            [row(&bras[0]), row(&bras[1])]
        })
        .collect()
}

fn sign_slot(s: Sign) -> usize {
    match s {
        Sign::Minus => 0,
        Sign::Plus => 1,
    }
}

/// Coincidence density with the same `δs` on both arms.
pub fn coincidence_density(
    state: &ComplexVector,
    res: Resolution,
    grid_a: PointerGrid,
    grid_b: PointerGrid,
) -> Result<OutcomeDensity> {
    coincidence_density_with(state, res, res, grid_a, grid_b)
}

/// `|<s2(a), s2(b)| P̂_a(m_a) P̂_b(m_b) |state>|²` on the product grid.
pub fn coincidence_density_with(
    state: &ComplexVector,
    res_a: Resolution,
    res_b: Resolution,
    grid_a: PointerGrid,
    grid_b: PointerGrid,
) -> Result<OutcomeDensity> {
    check_state(state, 4)?;
    let s1 = stokes_operator(StokesAxis::S1);
    let kernel_a = MeasurementKernel::new(&s1, res_a)?;
    let kernel_b = MeasurementKernel::new(&s1, res_b)?;
    let rows_a = projected_rows(&kernel_a, grid_a);
    let rows_b = projected_rows(&kernel_b, grid_b);
    let psi = state.entries();

    let sheets = FinalOutcome::PAIR
        .iter()
        .map(|&outcome| {
            let FinalOutcome::Pair(sa, sb) = outcome else {
                unreachable!()
            };
            let mut values = Vec::with_capacity(rows_a.len() * rows_b.len());
            for ra in &rows_a {
                let ra = ra[sign_slot(sa)];
                // contract photon a first: v_j = Σ_i ra_i ψ_{2i+j}
                let v = [
                    ra[0] * psi[0] + ra[1] * psi[2],
                    ra[0] * psi[1] + ra[1] * psi[3],
                ];
                for rb in &rows_b {
                    let rb = rb[sign_slot(sb)];
                    values.push((rb[0] * v[0] + rb[1] * v[1]).norm_sqr());
                }
            }
            DensitySheet { outcome, values }
        })
        .collect();

    Ok(OutcomeDensity {
        axes: vec![
            PointerAxis {
                grid: grid_a,
                delta_s: kernel_a.delta_s(),
            },
            PointerAxis {
                grid: grid_b,
                delta_s: kernel_b.delta_s(),
            },
        ],
        sheets,
    })
}

/// Max-norm distance between `Σ_m P̂†(m) P̂(m) · step` and the identity.
pub fn completeness_defect(
    target: &ComplexMatrix,
    res: Resolution,
    grid: PointerGrid,
) -> Result<f64> {
    let kernel = MeasurementKernel::new(target, res)?;
    let n = target.rows();
    let mut acc = ComplexMatrix::zeros(n, n);
    for m in grid.points() {
        let p = kernel.operator(m);
        acc = &acc + &(&p.adjoint() * &p);
    }
    let acc = acc.scale_real(grid.step());
    Ok(acc.max_abs_diff(&ComplexMatrix::identity(n)))
}
