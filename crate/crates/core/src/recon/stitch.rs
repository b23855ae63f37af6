use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projector::{linear, Sinogram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Blend {
    /// Linear cross-fade across overlaps.
    #[default]
    Feather,
    /// Later bands overwrite earlier ones.
    None,
}

impl std::str::FromStr for Blend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "feather" => Ok(Blend::Feather),
            "none" => Ok(Blend::None),
            other => Err(Error::param(format!("unknown blend mode {other:?}"))),
        }
    }
}

/// Replicates the first and last value of every row `round(factor · width)`
/// times on each side. The rotation axis moves with the data.
pub fn pad_edges(sino: &Sinogram, pad_factor: f64) -> Result<Sinogram> {
    if !(pad_factor >= 0.0 && pad_factor.is_finite()) {
        return Err(Error::param(format!(
            "pad factor {pad_factor} must be >= 0"
        )));
    }
    let w = sino.width();
    let pad = (pad_factor * w as f64).round() as usize;
    if pad == 0 {
        return Ok(sino.clone());
    }
    let mut values = Array2::zeros((sino.n_angles(), w + 2 * pad));
    for (r, row) in sino.values().rows().into_iter().enumerate() {
        let (first, last) = (row[0], row[w - 1]);
        let mut out = values.row_mut(r);
        for k in 0..pad {
            out[k] = first;
            out[pad + w + k] = last;
        }
        for k in 0..w {
            out[pad + k] = row[k];
        }
    }
    Sinogram::new(sino.angles().to_vec(), values, sino.center() + pad as f64)
}

/// Extends a 180° sinogram to 360°; the row at `θ + π` is the row at `θ`
/// mirrored about the rotation axis.
pub fn synthesize_360(sino180: &Sinogram) -> Result<Sinogram> {
    if !sino180.spans_180() {
        return Err(Error::param(format!(
            "expected a sinogram over [0, 180°), got span {:.4} rad",
            sino180.span()
        )));
    }
    let n = sino180.n_angles();
    let w = sino180.width();
    let c0 = sino180.center();
    let mut values = Array2::zeros((2 * n, w));
    values
        .slice_mut(ndarray::s![..n, ..])
        .assign(sino180.values());
    for r in 0..n {
        let row = sino180.values().row(r).to_vec();
        for k in 0..w {
            values[[n + r, k]] = linear(&row, 2.0 * c0 - k as f64 - 1.0);
        }
    }
    let mut angles = sino180.angles().to_vec();
    angles.extend(sino180.angles().iter().map(|a| a + std::f64::consts::PI));
    Sinogram::new(angles, values, c0)
}

/// Assembles bands into one `width`-column sinogram with rotation axis at
/// `center`. `offsets[i]` is the output column of band `i`'s first column.
///
/// Feather mode weights band `i` at column `k` by its distance to the nearer
/// band edge, `min(k - o + 1, o + w - k)`, and normalizes; identical data in
/// the overlaps is reproduced exactly. Columns outside every band are zero;
/// a gap between bands is an error.
pub fn stitch_sinograms(
    bands: &[Sinogram],
    offsets: &[i64],
    width: usize,
    center: f64,
    blend: Blend,
) -> Result<Sinogram> {
    if bands.is_empty() {
        return Err(Error::param("no bands to stitch"));
    }
    if bands.len() != offsets.len() {
        return Err(Error::param(format!(
            "{} bands but {} offsets",
            bands.len(),
            offsets.len()
        )));
    }
    if offsets.windows(2).any(|p| p[1] < p[0]) {
        return Err(Error::param("band offsets must be sorted"));
    }
    let angles = bands[0].angles();
    if bands.iter().any(|b| b.n_angles() != angles.len()) {
        return Err(Error::param("bands have different angle counts"));
    }
    let mut covered = vec![false; width];
    for (band, &o) in bands.iter().zip(offsets) {
        for k in o.max(0)..(o + band.width() as i64).min(width as i64) {
            covered[k as usize] = true;
        }
    }
    let lo = offsets[0].max(0);
    let hi = offsets
        .iter()
        .zip(bands)
        .map(|(o, b)| o + b.width() as i64)
        .max()
        .unwrap_or(0)
        .min(width as i64);
    if let Some(start) = (lo..hi).find(|&k| !covered[k as usize]) {
        let end = (start..hi).find(|&k| covered[k as usize]).unwrap_or(hi);
        return Err(Error::Coverage { start, end });
    }

    let n = angles.len();
    let mut acc = Array2::<f64>::zeros((n, width));
    let mut wsum = vec![0.0f64; width];
    for (band, &o) in bands.iter().zip(offsets) {
        let bw = band.width() as i64;
        let k_lo = o.max(0);
        let k_hi = (o + bw).min(width as i64);
        for k in k_lo..k_hi {
            let src = (k - o) as usize;
            let col = k as usize;
            match blend {
                Blend::Feather => {
                    let wt = ((k - k_lo + 1).min(k_hi - k)) as f64;
                    wsum[col] += wt;
                    for r in 0..n {
                        acc[[r, col]] += wt * band.values()[[r, src]];
                    }
                }
                Blend::None => {
                    wsum[col] = 1.0;
                    for r in 0..n {
                        acc[[r, col]] = band.values()[[r, src]];
                    }
                }
            }
        }
    }
    for (col, w) in wsum.iter().enumerate() {
        if *w > 0.0 && *w != 1.0 {
            let inv = 1.0 / w;
            acc.column_mut(col).mapv_inplace(|v| v * inv);
        }
    }
    Sinogram::new(angles.to_vec(), acc, center)
}

/// Full-detector offset of a band cut from a sinogram with axis `full_center`.
pub fn band_offset(full_center: f64, band: &Sinogram) -> i64 {
    (full_center - band.center()).round() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{disk_mask_at, ImageGrid, Point};
    use crate::projector::{angles_180, angles_360, extract_band, radon};
    use crate::recon::fbp::{fbp, Filter};

    fn ramp_sino(n: usize, w: usize) -> Sinogram {
        let mut v = Array2::zeros((n, w));
        for ((r, c), x) in v.indexed_iter_mut() {
            *x = ((r * 31 + c * 17) % 23) as f64 / 7.0 + 0.1;
        }
        Sinogram::new(angles_180(n), v, w as f64 / 2.0).unwrap()
    }

    #[test]
    fn pad_zero_identity_and_width() {
        let s = ramp_sino(4, 10);
        assert_eq!(pad_edges(&s, 0.0).unwrap(), s);
        let p = pad_edges(&s, 2.0).unwrap();
        assert_eq!(p.width(), 50);
        assert_eq!(p.center(), s.center() + 20.0);
        assert_eq!(p.values()[[2, 0]], s.values()[[2, 0]]);
        assert_eq!(p.values()[[2, 49]], s.values()[[2, 9]]);
        assert_eq!(p.values()[[3, 25]], s.values()[[3, 5]]);
        assert!(pad_edges(&s, -1.0).is_err());
    }

    #[test]
    fn synthesize_requires_half_turn() {
        let v = Array2::zeros((8, 6));
        let s = Sinogram::new(angles_360(8), v, 3.0).unwrap();
        assert!(synthesize_360(&s).is_err());
    }

    #[test]
    fn synthesized_matches_direct_projection() {
        let l = 64;
        let mut img = disk_mask_at(l, l, Point::new(9.0, -5.0), 14.0);
        let other = disk_mask_at(l, l, Point::new(-12.0, 3.0), 8.0);
        *img.values_mut() += &(other.values() * 0.5);
        let n = 90;
        let s180 = radon(&img, &angles_180(n), Point::ORIGIN).unwrap();
        let s360 = radon(&img, &angles_360(2 * n), Point::ORIGIN).unwrap();
        let syn = synthesize_360(&s180).unwrap();
        assert_eq!(syn.n_angles(), 2 * n);
        let peak = s360.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = (syn.values() - s360.values())
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(diff < 0.05 * peak, "{diff} vs {peak}");
        for (a, b) in syn.angles().iter().zip(s360.angles()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mirror_twice_is_identity() {
        let s = ramp_sino(6, 12);
        let syn = synthesize_360(&s).unwrap();
        for r in 0..6 {
            for k in 0..12 {
                // mirror of the mirrored row
                let back = syn.values()[[6 + r, 11 - k]];
                assert_eq!(back, s.values()[[r, k]]);
            }
        }
    }

    #[test]
    fn feather_is_left_inverse_of_extraction() {
        let full = ramp_sino(9, 100);
        let starts = [-5i64, 20, 45, 70, 95];
        let bands: Vec<Sinogram> = starts
            .iter()
            .map(|&s| extract_band(&full, s, 30).unwrap())
            .collect();
        let offsets: Vec<i64> = bands
            .iter()
            .map(|b| band_offset(full.center(), b))
            .collect();
        assert_eq!(offsets, vec![0, 20, 45, 70, 95]);
        for blend in [Blend::Feather, Blend::None] {
            let st = stitch_sinograms(&bands, &offsets, 100, full.center(), blend).unwrap();
            let err = (st.values() - full.values())
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(err <= 1e-10, "{err}");
        }
    }

    #[test]
    fn gap_reported() {
        let full = ramp_sino(3, 60);
        let a = extract_band(&full, 0, 20).unwrap();
        let b = extract_band(&full, 25, 20).unwrap();
        match stitch_sinograms(&[a, b], &[0, 25], 60, 30.0, Blend::Feather) {
            Err(Error::Coverage { start, end }) => assert_eq!((start, end), (20, 25)),
            other => panic!("expected coverage error, got {other:?}"),
        }
    }

    #[test]
    fn feather_cross_fades_mismatched_bands() {
        let a = Sinogram::new(angles_180(1), Array2::from_elem((1, 10), 1.0), 0.0).unwrap();
        let b = Sinogram::new(angles_180(1), Array2::from_elem((1, 10), 2.0), 0.0).unwrap();
        let st =
            stitch_sinograms(&[a.clone(), b.clone()], &[0, 6], 16, 8.0, Blend::Feather).unwrap();
        let row: Vec<f64> = st.values().row(0).to_vec();
        assert_eq!(row[5], 1.0);
        assert_eq!(row[10], 2.0);
        for k in 6..10 {
            assert!(row[k] > 1.0 && row[k] < 2.0);
            assert!(row[k] >= row[k - 1]);
        }
        let hard = stitch_sinograms(&[a, b], &[0, 6], 16, 8.0, Blend::None).unwrap();
        assert_eq!(hard.values()[[0, 6]], 2.0);
    }

    #[test]
    fn mismatched_bands_ring_without_blending() {
        let l = 64;
        let img = ImageGrid::from_signed(disk_mask_at(l, l, Point::ORIGIN, 60.0).values() * 0.02);
        let full = radon(&img, &angles_180(101), Point::ORIGIN).unwrap();
        let mut a = extract_band(&full, 0, 50).unwrap();
        let b = extract_band(&full, 40, 51).unwrap();
        a.values_mut().mapv_inplace(|v| v * 1.05);
        let hard = stitch_sinograms(
            &[a.clone(), b.clone()],
            &[0, 40],
            full.width(),
            full.center(),
            Blend::None,
        )
        .unwrap();
        let soft = stitch_sinograms(
            &[a, b],
            &[0, 40],
            full.width(),
            full.center(),
            Blend::Feather,
        )
        .unwrap();
        let reference = fbp(&full, l, Filter::RamLak).unwrap();
        // sharp residual structure: mean |Laplacian| of the error image
        let ring = |s: &Sinogram| {
            let e = fbp(s, l, Filter::RamLak).unwrap().values() - reference.values();
            let mut acc = 0.0;
            for j in 1..l - 1 {
                for i in 1..l - 1 {
                    let lap = e[[j - 1, i]] + e[[j + 1, i]] + e[[j, i - 1]] + e[[j, i + 1]]
                        - 4.0 * e[[j, i]];
                    acc += lap.abs();
                }
            }
            acc
        };
        assert!(
            ring(&hard) > 1.5 * ring(&soft),
            "{} vs {}",
            ring(&hard),
            ring(&soft)
        );
    }
}
