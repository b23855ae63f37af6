//! Integer-pixel phase-correlation registration, chained registration of
//! SOA bands, offset perturbation and the registration studies.

mod study;

pub use study::{
    accumulative_demo, accumulative_demo_on, angle_downsampling_study, angle_study_on,
    budget_study, budget_study_on, AccumulativeConfig, AccumulativeReport, BudgetStudyConfig,
    LtaPairGeometry, RoiReport, StudyRow,
};

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::fft2;
use crate::phantom::ImageGrid;

/// Integer translation, in pixels (column, row).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct OffsetVector {
    pub dx: i64,
    pub dy: i64,
}

impl OffsetVector {
    pub fn new(dx: i64, dy: i64) -> Self {
        OffsetVector { dx, dy }
    }

    pub fn as_f64(self) -> (f64, f64) {
        (self.dx as f64, self.dy as f64)
    }

    pub fn distance(self, other: OffsetVector) -> f64 {
        ((self.dx - other.dx) as f64).hypot((self.dy - other.dy) as f64)
    }
}

/// Smallest side accepted by [`phase_correlate`].
pub const MIN_SIDE: usize = 8;

/// Translation `t` such that `b(x) ≈ a(x − t)`, from the peak of the
/// inverse transform of the normalized cross-power spectrum.
///
/// Indices past the half-size map to negative shifts. Among equal peaks the
/// smallest `|dx| + |dy|` wins, then row-major order.
pub fn phase_correlate(a: &ImageGrid, b: &ImageGrid) -> Result<OffsetVector> {
    let (h, w) = a.values().dim();
    if b.values().dim() != (h, w) {
        return Err(Error::param(format!(
            "images differ in shape: {:?} vs {:?}",
            (h, w),
            b.values().dim()
        )));
    }
    if h < MIN_SIDE || w < MIN_SIDE {
        return Err(Error::param(format!(
            "images must be at least {MIN_SIDE}x{MIN_SIDE}, got {w}x{h}"
        )));
    }
    for (name, img) in [("first", a), ("second", b)] {
        if img.max() - img.min() == 0.0 {
            return Err(Error::Degenerate(format!("{name} image is constant")));
        }
    }
    let to_complex = |g: &ImageGrid| g.values().mapv(|v| Complex64::new(v, 0.0));
    let mut fa = to_complex(a);
    let mut fb = to_complex(b);
    fft2(&mut fa, false);
    fft2(&mut fb, false);
    let peak_scale = fa
        .iter()
        .chain(fb.iter())
        .map(|c| c.norm())
        .fold(0.0f64, f64::max);
    let mut cross: Array2<Complex64> = Array2::zeros((h, w));
    for ((c, x), y) in cross.iter_mut().zip(fa.iter()).zip(fb.iter()) {
        let p = y * x.conj();
        let m = p.norm();
        *c = if m > 1e-12 * peak_scale * peak_scale {
            p / m
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    fft2(&mut cross, true);
    let max = cross.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * max.abs().max(1e-300);
    let signed = |k: usize, n: usize| {
        if k <= n / 2 {
            k as i64
        } else {
            k as i64 - n as i64
        }
    };
    let mut best: Option<(i64, OffsetVector)> = None;
    for ((r, c), v) in cross.indexed_iter() {
        if v.re < max - tol {
            continue;
        }
        let off = OffsetVector::new(signed(c, w), signed(r, h));
        let l1 = off.dx.abs() + off.dy.abs();
        if best.is_none_or(|(b, _)| l1 < b) {
            best = Some((l1, off));
        }
    }
    Ok(best.expect("non-empty correlation surface").1)
}

/// Subtracts the mean and applies a separable raised-cosine edge taper over
/// `fraction` of each side (Tukey window).
pub fn taper(image: &ImageGrid, fraction: f64) -> ImageGrid {
    let (h, w) = image.values().dim();
    let mean = image.sum() / (h * w) as f64;
    let wx = tukey(w, fraction);
    let wy = tukey(h, fraction);
    let mut out = image.values().mapv(|v| v - mean);
    for ((r, c), v) in out.indexed_iter_mut() {
        *v *= wx[c] * wy[r];
    }
    ImageGrid::from_signed(out)
}

fn tukey(n: usize, fraction: f64) -> Vec<f64> {
    let edge = (fraction.clamp(0.0, 1.0) * n as f64 / 2.0).max(1e-9);
    (0..n)
        .map(|i| {
            let d = (i as f64 + 0.5).min(n as f64 - i as f64 - 0.5);
            if d >= edge {
                1.0
            } else {
                0.5 - 0.5 * (std::f64::consts::PI * d / edge).cos()
            }
        })
        .collect()
}

/// Taper applied to overlap strips before correlation.
pub const STRIP_TAPER: f64 = 0.25;

/// Outcome of registering a row of overlapping bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainResult {
    /// Column placement of each band relative to band 0.
    pub cumulative: Vec<i64>,
    /// Estimated `offset_{i+1} − offset_i − stride`, per pair.
    pub pairwise: Vec<OffsetVector>,
    /// Pairs that fell back to the nominal stride.
    pub fallback: Vec<bool>,
    /// Cumulative deviation from nominal placement per band.
    pub drift: Vec<i64>,
}

/// Registers consecutive bands (rows × columns images) nominally `stride`
/// columns apart, correlating the strip band `i` shares with band `i + 1`.
///
/// Cumulative offsets are partial sums of the pairwise estimates, so one bad
/// pair displaces every band after it. A pair whose strips are degenerate
/// keeps the nominal stride and is flagged.
pub fn chain_register(bands: &[ImageGrid], stride: usize) -> Result<ChainResult> {
    if bands.len() < 2 {
        return Err(Error::param("chain registration needs at least two bands"));
    }
    let mut pairwise = Vec::with_capacity(bands.len() - 1);
    let mut fallback = Vec::with_capacity(bands.len() - 1);
    for pair in bands.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if stride >= a.width() || a.width() - stride > b.width() || a.height() != b.height() {
            return Err(Error::param(format!(
                "bands of width {} and {} do not overlap at stride {stride}",
                a.width(),
                b.width()
            )));
        }
        let overlap = a.width() - stride;
        let sa = strip(a, stride, overlap);
        let sb = strip(b, 0, overlap);
        match phase_correlate(&taper(&sa, STRIP_TAPER), &taper(&sb, STRIP_TAPER)) {
            Ok(t) => {
                pairwise.push(OffsetVector::new(-t.dx, -t.dy));
                fallback.push(false);
            }
            Err(Error::Degenerate(_)) => {
                pairwise.push(OffsetVector::default());
                fallback.push(true);
            }
            Err(e) => return Err(e),
        }
    }
    let mut cumulative = vec![0i64];
    let mut drift = vec![0i64];
    for p in &pairwise {
        cumulative.push(cumulative.last().unwrap() + stride as i64 + p.dx);
        drift.push(drift.last().unwrap() + p.dx);
    }
    Ok(ChainResult {
        cumulative,
        pairwise,
        fallback,
        drift,
    })
}

fn strip(band: &ImageGrid, start: usize, width: usize) -> ImageGrid {
    ImageGrid::from_signed(
        band.values()
            .slice(ndarray::s![.., start..start + width])
            .to_owned(),
    )
}

/// Places bands from pairwise errors accumulated outward from `anchor`,
/// which keeps its nominal start. `errors[i]` is the error of pair
/// `(i, i + 1)`.
pub fn accumulate_from_anchor(nominal: &[i64], errors: &[i64], anchor: usize) -> Result<Vec<i64>> {
    if errors.len() + 1 != nominal.len() || anchor >= nominal.len() {
        return Err(Error::param(
            "pair errors must number one less than bands, anchor in range",
        ));
    }
    let mut out = nominal.to_vec();
    let mut acc = 0;
    for i in anchor + 1..nominal.len() {
        acc += errors[i - 1];
        out[i] += acc;
    }
    acc = 0;
    for i in (0..anchor).rev() {
        acc -= errors[i];
        out[i] += acc;
    }
    Ok(out)
}

/// Adds seeded i.i.d. `N(0, σ²)` noise, rounded to whole pixels.
pub fn perturb_offsets(offsets: &[i64], sigma: f64, seed: u64) -> Result<Vec<i64>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!("sigma {sigma} must be >= 0")));
    }
    if sigma == 0.0 {
        return Ok(offsets.to_vec());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(offsets
        .iter()
        .map(|o| o + normal.sample(&mut rng).round() as i64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn noise_image(h: usize, w: usize, seed: u64) -> ImageGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageGrid::from_signed(Array2::from_shape_fn((h, w), |_| rng.random::<f64>()))
    }

    fn roll(img: &ImageGrid, dx: i64, dy: i64) -> ImageGrid {
        let (h, w) = img.values().dim();
        ImageGrid::from_signed(Array2::from_shape_fn((h, w), |(r, c)| {
            let sr = (r as i64 - dy).rem_euclid(h as i64) as usize;
            let sc = (c as i64 - dx).rem_euclid(w as i64) as usize;
            img.values()[[sr, sc]]
        }))
    }

    #[test]
    fn identity_and_planted_shift() {
        let a = noise_image(32, 40, 1);
        assert_eq!(phase_correlate(&a, &a).unwrap(), OffsetVector::new(0, 0));
        let b = roll(&a, 7, -3);
        assert_eq!(phase_correlate(&a, &b).unwrap(), OffsetVector::new(7, -3));
    }

    #[test]
    fn rejects_bad_inputs() {
        let a = noise_image(8, 8, 1);
        assert!(phase_correlate(&a, &noise_image(8, 9, 1)).is_err());
        assert!(phase_correlate(&noise_image(4, 8, 1), &noise_image(4, 8, 2)).is_err());
        let flat = ImageGrid::from_signed(Array2::from_elem((8, 8), 3.0));
        assert!(matches!(
            phase_correlate(&a, &flat),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn ties_prefer_small_shifts() {
        // a period-2 pattern correlates equally at several shifts
        let a =
            ImageGrid::from_signed(Array2::from_shape_fn((8, 8), |(r, c)| ((r + c) % 2) as f64));
        assert_eq!(phase_correlate(&a, &a).unwrap(), OffsetVector::new(0, 0));
        let b = roll(&a, 1, 0);
        assert_eq!(phase_correlate(&a, &b).unwrap(), OffsetVector::new(1, 0));
    }

    #[test]
    fn taper_zero_mean_and_edges() {
        let t = taper(&noise_image(16, 16, 3), 0.5);
        assert!(t.values()[[0, 0]].abs() < 0.05);
        let flat = taper(
            &ImageGrid::from_signed(Array2::from_elem((8, 8), 2.0)),
            0.25,
        );
        assert!(flat.values().iter().all(|v| v.abs() < 1e-15));
        assert_eq!(tukey(10, 0.0), vec![1.0; 10]);
    }

    fn bands_from(panorama: &ImageGrid, starts: &[usize], width: usize) -> Vec<ImageGrid> {
        starts.iter().map(|&s| strip(panorama, s, width)).collect()
    }

    #[test]
    fn exact_chain_has_no_drift() {
        let pano = noise_image(40, 200, 5);
        let bands = bands_from(&pano, &[0, 30, 60, 90], 48);
        let r = chain_register(&bands, 30).unwrap();
        assert_eq!(r.cumulative, vec![0, 30, 60, 90]);
        assert_eq!(r.drift, vec![0; 4]);
        assert!(r.fallback.iter().all(|f| !f));
    }

    #[test]
    fn chain_recovers_jitter_and_accumulates() {
        let pano = noise_image(40, 200, 6);
        let starts = [2usize, 35, 61, 93];
        let bands = bands_from(&pano, &starts, 48);
        let r = chain_register(&bands, 30).unwrap();
        let rel: Vec<i64> = starts.iter().map(|s| *s as i64 - 2).collect();
        assert_eq!(r.cumulative, rel);
        assert_eq!(
            r.pairwise.iter().map(|p| p.dx).collect::<Vec<_>>(),
            vec![3, -4, 2]
        );
        for k in 1..4 {
            assert_eq!(
                r.drift[k],
                r.pairwise[..k].iter().map(|p| p.dx).sum::<i64>()
            );
        }
    }

    #[test]
    fn degenerate_pair_falls_back() {
        let mut pano = noise_image(20, 120, 7);
        pano.values_mut()
            .slice_mut(ndarray::s![.., 20..60])
            .fill(1.0);
        let bands = bands_from(&pano, &[0, 30], 40);
        let r = chain_register(&bands, 30).unwrap();
        assert_eq!(r.fallback, vec![true]);
        assert_eq!(r.cumulative, vec![0, 30]);
    }

    #[test]
    fn corrupted_pair_shifts_downstream() {
        let placed = accumulate_from_anchor(&[0, 10, 20, 30, 40], &[0, 5, 0, 0], 0).unwrap();
        assert_eq!(placed, vec![0, 10, 25, 35, 45]);
        let placed = accumulate_from_anchor(&[0, 10, 20, 30, 40], &[1, 2, 3, 4], 2).unwrap();
        assert_eq!(placed, vec![-3, 8, 20, 33, 47]);
    }

    #[test]
    fn perturb_identity_and_spread() {
        let base: Vec<i64> = (0..10_000).map(|i| i * 3).collect();
        assert_eq!(perturb_offsets(&base, 0.0, 1).unwrap(), base);
        let p = perturb_offsets(&base, 4.0, 11).unwrap();
        let d: Vec<f64> = p.iter().zip(&base).map(|(a, b)| (a - b) as f64).collect();
        let m = d.iter().sum::<f64>() / d.len() as f64;
        let sd = (d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / d.len() as f64).sqrt();
        // rounding adds 1/12 px² of variance
        assert!((sd - 4.0).abs() < 0.03 * 4.0, "{sd}");
        assert_eq!(p, perturb_offsets(&base, 4.0, 11).unwrap());
        assert!(perturb_offsets(&base, -1.0, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn circular_shift_equivariance(seed in 0u64..1000, dx in -15i64..=15, dy in -11i64..=11) {
            let a = noise_image(24, 32, seed);
            let b = roll(&a, dx, dy);
            prop_assert_eq!(phase_correlate(&a, &b).unwrap(), OffsetVector::new(dx, dy));
        }
    }
}
