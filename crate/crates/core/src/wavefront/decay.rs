//! Decay of transform coefficients across scales, per position and direction bin.
//!
//! A slice with element `h` looks in direction `h^{-T} e_1 ∝ (1, s)`, `s` the dual shear.
//! For each position and bin the largest coefficient magnitude per scale is regressed
//! against `ln a`; a small slope means slow decay as `a → 0`, i.e. a singular point.

use rayon::prelude::*;

use super::{dual_shear, fit_line, DirectionWindow, WavefrontError};
use crate::grid::{Grid, GridFunction};
use crate::group::ShearletGroup;
use crate::transform::{analyze, CoefficientField, GroupSampling};
use crate::window::FrequencyWindow;

/// Direction bins covering `{|v|_∞ ≤ v_max}` in the chart `ξ ∝ (1, v)`.
///
/// Bin `k` holds `v` with `|v - c_k| ≤ eps`; in one dimension the bins tile the
/// interval, in higher dimensions they overlap so that the box is covered.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionBins {
    pub windows: Vec<DirectionWindow>,
}

impl DirectionBins {
    pub fn uniform(dim: usize, per_axis: usize, v_max: f64) -> Result<Self, WavefrontError> {
        if dim < 2 || per_axis == 0 || !(v_max > 0.0) {
            return Err(WavefrontError::InvalidParameters(format!("bins dim={dim} per_axis={per_axis} v_max={v_max}")));
        }
        let m = dim - 1;
        let width = 2.0 * v_max / per_axis as f64;
        let eps = 0.5 * width * (m as f64).sqrt();
        let side: Vec<f64> = (0..per_axis).map(|k| -v_max + (k as f64 + 0.5) * width).collect();
        let mut centers = vec![Vec::new()];
        for _ in 0..m {
            centers = centers
                .into_iter()
                .flat_map(|c| {
                    side.iter().map(move |&x| {
                        let mut c = c.clone();
                        c.push(x);
                        c
                    })
                })
                .collect();
        }
        let windows = centers.into_iter().map(|c| DirectionWindow::new(c, eps, 0.0)).collect::<Result<_, _>>()?;
        Ok(Self { windows })
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// Bin whose center is closest to `v`.
    pub fn nearest(&self, v: &[f64]) -> usize {
        let d = |w: &DirectionWindow| w.center.iter().zip(v).map(|(c, x)| (c - x) * (c - x)).sum::<f64>();
        (0..self.len()).min_by(|&a, &b| d(&self.windows[a]).total_cmp(&d(&self.windows[b]))).unwrap_or(0)
    }
}

fn in_bin(w: &DirectionWindow, s: &[f64]) -> bool {
    w.center.iter().zip(s).map(|(c, x)| (c - x) * (c - x)).sum::<f64>().sqrt() <= w.eps
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayThresholds {
    /// Singular iff the fitted slope is below this.
    pub slope: f64,
    /// Magnitudes below `noise_floor · max |W|` count as zero.
    pub noise_floor: f64,
}

impl DecayThresholds {
    /// Slope `d/2 + 1`, noise floor `1e-6`.
    pub fn for_dim(dim: usize) -> Self {
        Self { slope: dim as f64 / 2.0 + 1.0, noise_floor: 1e-6 }
    }
}

/// Regression of `ln max |W|` on `ln a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    /// `+∞` when the finest scale is below the noise floor.
    pub slope: f64,
    pub residual: f64,
    pub points: usize,
}

/// Scale index, sign and dual shear of every slice.
fn slice_directions(coeffs: &CoefficientField, g: &ShearletGroup) -> Result<Vec<(usize, i8, Vec<f64>)>, WavefrontError> {
    let n_shear = coeffs.sampling.shear_offsets.len();
    let n_scale = coeffs.sampling.scales.len();
    coeffs
        .elements
        .iter()
        .enumerate()
        .map(|(i, e)| Ok(((i / n_shear) % n_scale, e.sign, dual_shear(g, &e.t)?)))
        .collect()
}

/// Slice indices per scale that look into `bin` (positive sign only).
fn bin_members(dirs: &[(usize, i8, Vec<f64>)], n_scale: usize, bin: &DirectionWindow) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); n_scale];
    for (i, (scale, sign, s)) in dirs.iter().enumerate() {
        if *sign > 0 && in_bin(bin, s) {
            out[*scale].push(i);
        }
    }
    out
}

fn profile_from(coeffs: &CoefficientField, position: usize, members: &[Vec<usize>], floor: f64) -> Profile {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut finest_zero = true;
    let last = members.len().saturating_sub(1);
    for (m, slices) in members.iter().enumerate() {
        let peak = slices.iter().map(|&i| coeffs.slices[i][position].norm()).fold(0.0, f64::max);
        if peak > floor {
            x.push(coeffs.sampling.scales[m].ln());
            y.push(peak.ln());
            if m == last {
                finest_zero = false;
            }
        }
    }
    if finest_zero {
        return Profile { slope: f64::INFINITY, residual: 0.0, points: x.len() };
    }
    match fit_line(&x, &y) {
        Some((slope, _, rms)) => Profile { slope, residual: rms, points: x.len() },
        None => Profile { slope: f64::INFINITY, residual: 0.0, points: x.len() },
    }
}

/// Decay slope of `|W_ψ u(y, ·)|` inside one direction bin; scales must be
/// ordered from coarse to fine. `floor` is an absolute magnitude.
pub fn decay_profile(
    coeffs: &CoefficientField,
    g: &ShearletGroup,
    position: usize,
    bin: &DirectionWindow,
    floor: f64,
) -> Result<Profile, WavefrontError> {
    let dirs = slice_directions(coeffs, g)?;
    let members = bin_members(&dirs, coeffs.sampling.scales.len(), bin);
    Ok(profile_from(coeffs, position, &members, floor))
}

/// Sampling for decay analysis: positive sign, scales `a0 · ratio^m`, and an
/// adapted shear lattice wide enough that dual shears cover `|s| ≤ v_max` at every scale.
pub fn decay_sampling(
    g: &ShearletGroup,
    a0: f64,
    ratio: f64,
    count: usize,
    shear_step: f64,
    v_max: f64,
) -> Result<GroupSampling, WavefrontError> {
    let a_min = a0 * ratio.powi(count as i32 - 1);
    let narrowest = g.lambda()[1..].iter().map(|l| a_min.powf(1.0 - l)).fold(f64::INFINITY, f64::min);
    let radius = (1.1 * v_max / (shear_step * narrowest)).ceil() as usize;
    Ok(GroupSampling::geometric(g.dim(), a0, ratio, count, shear_step, radius, true, vec![1])?)
}

#[derive(Debug, Clone)]
pub struct DecayReport {
    pub grid: Grid,
    pub bins: DirectionBins,
    pub scales: Vec<f64>,
    /// Flat grid indices that were analyzed.
    pub positions: Vec<usize>,
    /// `profiles[p * bins + b]` for `positions[p]`.
    pub profiles: Vec<Profile>,
    pub singular: Vec<bool>,
    pub thresholds: DecayThresholds,
    /// Exponents outside `(0, 1)`: results are reported but carry no guarantee.
    pub incompatible_scaling: bool,
}

impl DecayReport {
    /// `(grid index, bin)` of every singular cell.
    pub fn flagged(&self) -> Vec<(usize, usize)> {
        let nb = self.bins.len();
        self.singular.iter().enumerate().filter(|(_, s)| **s).map(|(k, _)| (self.positions[k / nb], k % nb)).collect()
    }

    /// Number of singular bins at each grid node.
    pub fn count_map(&self) -> Vec<u32> {
        let nb = self.bins.len();
        let mut out = vec![0u32; self.grid.len()];
        for (k, s) in self.singular.iter().enumerate() {
            if *s {
                out[self.positions[k / nb]] += 1;
            }
        }
        out
    }
}

/// Positions at least `border` nodes away from every face of the grid.
pub fn interior_positions(grid: &Grid, border: usize) -> Vec<usize> {
    (0..grid.len())
        .filter(|&i| grid.unravel(i).iter().zip(&grid.shape).all(|(&k, &n)| k >= border && k + border < n))
        .collect()
}

pub fn wavefront_map(
    u: &GridFunction,
    g: &ShearletGroup,
    psi: &dyn FrequencyWindow,
    samp: &GroupSampling,
    bins: &DirectionBins,
    thresholds: &DecayThresholds,
    border: usize,
) -> Result<DecayReport, WavefrontError> {
    if samp.scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(WavefrontError::InvalidParameters("scales must decrease".into()));
    }
    let coeffs = analyze(u, psi, g, samp)?;
    let floor = thresholds.noise_floor * coeffs.max_abs();
    let dirs = slice_directions(&coeffs, g)?;
    let members: Vec<Vec<Vec<usize>>> =
        bins.windows.iter().map(|b| bin_members(&dirs, samp.scales.len(), b)).collect();
    let positions = interior_positions(&u.grid, border);
    let profiles: Vec<Profile> = positions
        .par_iter()
        .flat_map_iter(|&p| members.iter().map(|m| profile_from(&coeffs, p, m, floor)).collect::<Vec<_>>())
        .collect();
    let singular = profiles.iter().map(|p| p.slope < thresholds.slope).collect();
    Ok(DecayReport {
        grid: u.grid.clone(),
        bins: bins.clone(),
        scales: samp.scales.clone(),
        positions,
        profiles,
        singular,
        thresholds: thresholds.clone(),
        incompatible_scaling: !g.exponents().in_wavefront_range(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{canonical_basis, families};
    use crate::rational::{q, qi};
    use crate::scaling::ExponentVector;
    use crate::window::BumpWindow;

    fn original() -> ShearletGroup {
        let s = canonical_basis(&families::build("class2", 2, None).unwrap());
        ShearletGroup::new(s, ExponentVector::new(vec![qi(1), q(1, 2)])).unwrap()
    }

    fn setup(g: &ShearletGroup) -> (GroupSampling, DirectionBins) {
        // 64 nodes on [-1, 1): Nyquist 16, so the finest window reaches ξ_1 = 2/a ≤ 16.
        let samp = decay_sampling(g, 0.5, 0.5f64.cbrt(), 7, 0.25, 1.0).unwrap();
        (samp, DirectionBins::uniform(2, 5, 1.0).unwrap())
    }

    #[test]
    fn bins_tile_the_interval() {
        let b = DirectionBins::uniform(2, 5, 1.0).unwrap();
        assert_eq!(b.len(), 5);
        assert!((b.windows[2].center[0]).abs() < 1e-15 && (b.windows[2].eps - 0.2).abs() < 1e-15);
        assert_eq!(b.nearest(&[0.05]), 2);
        assert_eq!(b.nearest(&[-0.9]), 0);
        assert_eq!(DirectionBins::uniform(3, 3, 1.0).unwrap().len(), 9);
    }

    #[test]
    fn smooth_signal_has_no_singular_cells() {
        let g = original();
        let (samp, bins) = setup(&g);
        let u = GridFunction::from_real_fn(Grid::centered(2, 64, 1.0), |x| (-(x[0] * x[0] + x[1] * x[1]) / 0.08).exp());
        let rep = wavefront_map(&u, &g, &BumpWindow::default_for(2), &samp, &bins, &DecayThresholds::for_dim(2), 8)
            .unwrap();
        assert!(rep.flagged().is_empty(), "{} flags", rep.flagged().len());
        assert!(!rep.incompatible_scaling);
    }

    #[test]
    fn spike_grows_at_its_position_and_decays_away_from_it() {
        let g = original();
        let (samp, bins) = setup(&g);
        let grid = Grid::centered(2, 64, 1.0);
        let center = grid.ravel(&[32, 32]);
        let mut u = GridFunction::zeros(grid.clone());
        u.values[center] = rustfft::num_complex::Complex64::new(1.0, 0.0);
        let rep = wavefront_map(&u, &g, &BumpWindow::default_for(2), &samp, &bins, &DecayThresholds::for_dim(2), 8)
            .unwrap();
        let nb = bins.len();
        let at = rep.positions.iter().position(|&p| p == center).unwrap();
        // A point mass has |W(y0, h)| ∝ |det h|^{-1/2} = a^{-3/4}.
        for b in 0..nb {
            let p = rep.profiles[at * nb + b];
            assert!(rep.singular[at * nb + b]);
            assert!((p.slope + 0.75).abs() < 0.25, "bin {b}: {p:?}");
        }
        // Twenty nodes away, off every atom's long axis (-s, 1) with |s| ≤ 1.
        let far = rep.positions.iter().position(|&p| p == grid.ravel(&[12, 36])).unwrap();
        for b in 0..nb {
            assert!(rep.profiles[far * nb + b].slope > rep.profiles[at * nb + b].slope + 1.5);
        }
    }

    #[test]
    fn slope_is_invariant_under_rescaling() {
        let g = original();
        let (samp, bins) = setup(&g);
        let grid = Grid::centered(2, 64, 1.0);
        let u = GridFunction::from_real_fn(grid.clone(), |x| if x[0] > 0.0 { 1.0 } else { 0.0 });
        let psi = BumpWindow::default_for(2);
        let c1 = analyze(&u, &psi, &g, &samp).unwrap();
        let c2 = analyze(&u.scaled(7.5), &psi, &g, &samp).unwrap();
        let y = grid.ravel(&[32, 32]);
        let p1 = decay_profile(&c1, &g, y, &bins.windows[2], 1e-6 * c1.max_abs()).unwrap();
        let p2 = decay_profile(&c2, &g, y, &bins.windows[2], 1e-6 * c2.max_abs()).unwrap();
        assert!((p1.slope - p2.slope).abs() < 1e-9 && p1.slope.is_finite());
    }
}
