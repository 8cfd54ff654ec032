use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::qcore::{displacement, CMatrix, DensityMatrix, HilbertSpace, Operator, Subsystem};

#[derive(Debug, Clone, PartialEq)]
pub struct WignerMap {
    pub points: Vec<C64>,
    /// `W(α) = (2/π) Tr[D(α) Π D(−α) ρ]`.
    pub values: Vec<f64>,
    /// Cavity truncation used for the displacements.
    pub dim: usize,
}

/// `n × n` grid over `[−extent, extent]²`, row-major in Im α.
pub fn square_grid(extent: f64, n: usize) -> Vec<C64> {
    let step = if n > 1 { 2.0 * extent / (n - 1) as f64 } else { 0.0 };
    let mut pts = Vec::with_capacity(n * n);
    for i in 0..n {
        for r in 0..n {
            pts.push(C64::new(-extent + r as f64 * step, -extent + i as f64 * step));
        }
    }
    pts
}

/// Displaced-parity Wigner function of a cavity state.
///
/// The state is zero-padded to `max(cavity_dim, 2·max|α|² + 10)` levels so
/// the displacements stay accurate on the grid.
pub fn wigner(rho: &DensityMatrix, grid: &[C64]) -> WignerMap {
    assert_eq!(rho.subsystem(), Subsystem::Cavity, "wigner needs a cavity state");
    let max_a2 = grid.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
    let d0 = rho.dim();
    let dim = d0.max((2.0 * max_a2).ceil() as usize + 10);
    if (d0 as f64) < 2.0 * max_a2 {
        log::debug!("padding cavity from {d0} to {dim} levels for the Wigner grid");
    }
    let space = HilbertSpace::new(dim).expect("dimension at least 2");
    let mut padded = CMatrix::zeros(dim, dim);
    padded.view_mut((0, 0), (d0, d0)).copy_from(rho.matrix());
    let parity = Operator::cavity_parity(space);
    let values = grid
        .par_iter()
        .map(|&alpha| {
            // Tr[Π D(−α) ρ D(α)]
            let d = displacement(space, -alpha);
            let shifted = d.matrix() * &padded * d.matrix().adjoint();
            let mut acc = 0.0;
            for n in 0..dim {
                acc += parity.matrix()[(n, n)].re * shifted[(n, n)].re;
            }
            acc * 2.0 / std::f64::consts::PI
        })
        .collect();
    WignerMap { points: grid.to_vec(), values, dim }
}

#[derive(Debug, Clone)]
pub struct ParitySplit {
    pub even: Option<DensityMatrix>,
    pub p_even: f64,
    pub odd: Option<DensityMatrix>,
    pub p_odd: f64,
}

/// Projects a cavity state onto the even and odd photon-number sectors.
pub fn parity_postselect(rho: &DensityMatrix) -> ParitySplit {
    assert_eq!(rho.subsystem(), Subsystem::Cavity, "parity split needs a cavity state");
    let d = rho.dim();
    let sector = |parity: usize| {
        CMatrix::from_fn(d, d, |i, j| {
            if i % 2 == parity && j % 2 == parity {
                rho.matrix()[(i, j)]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    };
    let (even, odd) = (sector(0), sector(1));
    let (pe, po) = (even.trace().re, odd.trace().re);
    let total = pe + po;
    ParitySplit {
        p_even: pe / total,
        p_odd: po / total,
        even: DensityMatrix::from_unnormalized(rho.space(), Subsystem::Cavity, even),
        odd: DensityMatrix::from_unnormalized(rho.space(), Subsystem::Cavity, odd),
    }
}
