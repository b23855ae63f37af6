//! Raster files, JSON sidecars, CSV tables and PGM previews.
//!
//! Raster layout: `MTRASTER`, then version, rows and cols as little-endian
//! `u32`, then `rows·cols` little-endian `f32` values in row-major order.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phantom::ImageGrid;
use crate::projector::Sinogram;

pub const MAGIC: &[u8; 8] = b"MTRASTER";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RasterHeader {
    pub version: u32,
    pub rows: u32,
    pub cols: u32,
}

impl RasterHeader {
    pub fn payload_len(&self) -> u64 {
        self.rows as u64 * self.cols as u64 * 4
    }

    pub fn file_len(&self) -> u64 {
        HEADER_LEN as u64 + self.payload_len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub header: RasterHeader,
    pub data: Array2<f32>,
}

impl Raster {
    pub fn to_f64(&self) -> Array2<f64> {
        self.data.mapv(f64::from)
    }
}

/// Sidecar stored next to a sinogram raster (same stem, `.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinogramMeta {
    pub angles: Vec<f64>,
    pub center: f64,
    /// Photons per pixel and angle, when the data are noisy.
    pub n_ph: Option<f64>,
}

pub fn encode_raster(values: &Array2<f64>) -> Result<Vec<u8>> {
    let (rows, cols) = values.dim();
    let (r, c) = match (u32::try_from(rows), u32::try_from(cols)) {
        (Ok(r), Ok(c)) => (r, c),
        _ => return Err(Error::param("raster dimensions exceed u32")),
    };
    let mut out = Vec::with_capacity(HEADER_LEN + rows * cols * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&r.to_le_bytes());
    out.extend_from_slice(&c.to_le_bytes());
    for v in values.iter() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    Ok(out)
}

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

pub fn decode_raster(bytes: &[u8]) -> Result<Raster> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        let at = bytes.iter().zip(MAGIC).take_while(|(a, b)| a == b).count();
        return Err(format_err(at, "bad magic, expected MTRASTER"));
    }
    if bytes.len() < HEADER_LEN {
        return Err(format_err(bytes.len(), "truncated header"));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let header = RasterHeader {
        version: word(8),
        rows: word(12),
        cols: word(16),
    };
    if header.version != VERSION {
        return Err(format_err(
            8,
            format!("unsupported version {}", header.version),
        ));
    }
    let expected = header.file_len();
    if (bytes.len() as u64) < expected {
        return Err(format_err(
            bytes.len(),
            format!("truncated payload, expected {expected} bytes"),
        ));
    }
    if (bytes.len() as u64) > expected {
        return Err(format_err(
            expected as usize,
            "trailing bytes after payload",
        ));
    }
    let data: Vec<f32> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let data = Array2::from_shape_vec((header.rows as usize, header.cols as usize), data)
        .map_err(|e| format_err(HEADER_LEN, e.to_string()))?;
    Ok(Raster { header, data })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_raster(path: impl AsRef<Path>, values: &Array2<f64>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_raster(values)?)
}

pub fn read_raster(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    decode_raster(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_image(path: impl AsRef<Path>, image: &ImageGrid) -> Result<()> {
    write_raster(path, image.values())
}

pub fn read_image(path: impl AsRef<Path>) -> Result<ImageGrid> {
    Ok(ImageGrid::from_signed(read_raster(path)?.to_f64()))
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes the raster and its `.json` sidecar.
pub fn write_sinogram(path: impl AsRef<Path>, sino: &Sinogram, n_ph: Option<f64>) -> Result<()> {
    let path = path.as_ref();
    write_raster(path, sino.values())?;
    let meta = SinogramMeta {
        angles: sino.angles().to_vec(),
        center: sino.center(),
        n_ph,
    };
    write_json(sidecar_path(path), &meta)
}

pub fn read_sinogram(path: impl AsRef<Path>) -> Result<(Sinogram, SinogramMeta)> {
    let path = path.as_ref();
    let raster = read_raster(path)?;
    let meta: SinogramMeta = read_json(sidecar_path(path))?;
    let sino = Sinogram::new(meta.angles.clone(), raster.to_f64(), meta.center)?;
    Ok((sino, meta))
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(path.as_ref(), text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// CSV with a header row taken from the record's field names.
pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::param(e.to_string()))?;
    write_bytes(path.as_ref(), &bytes)
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// 16-bit binary PGM bytes; `min` maps to 0 and `max` to 65535, values
/// outside clamp.
pub fn encode_pgm(image: &ImageGrid, min: f64, max: f64) -> Result<Vec<u8>> {
    if !(max > min) || !min.is_finite() || !max.is_finite() {
        return Err(Error::param(format!("PGM range [{min}, {max}] is empty")));
    }
    let mut out = format!("P5\n{} {}\n65535\n", image.width(), image.height()).into_bytes();
    let scale = 65535.0 / (max - min);
    for v in image.values().iter() {
        let q = ((v - min) * scale).round().clamp(0.0, 65535.0) as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    Ok(out)
}

pub fn export_pgm(image: &ImageGrid, path: impl AsRef<Path>, min: f64, max: f64) -> Result<()> {
    write_bytes(path.as_ref(), &encode_pgm(image, min, max)?)
}

/// PGM scaled to the image's own range (a flat image maps to black).
pub fn export_pgm_auto(image: &ImageGrid, path: impl AsRef<Path>) -> Result<()> {
    let (lo, hi) = (image.min(), image.max());
    let hi = if hi > lo { hi } else { lo + 1.0 };
    export_pgm(image, path, lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projector::angles_180;

    fn ramp(rows: usize, cols: usize) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |(r, c)| (r * cols + c) as f64 * 0.25 - 3.0)
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.mtr");
        let v = ramp(5, 7).mapv(|x| x.sin());
        write_raster(&p, &v).unwrap();
        let first = fs::read(&p).unwrap();
        let back = read_raster(&p).unwrap();
        write_raster(&p, &back.to_f64()).unwrap();
        assert_eq!(fs::read(&p).unwrap(), first);
        assert_eq!(back.data, v.mapv(|x| x as f32));
    }

    #[test]
    fn file_size_from_header() {
        let bytes = encode_raster(&Array2::zeros((512, 512))).unwrap();
        assert_eq!(bytes.len(), 20 + 512 * 512 * 4);
    }

    #[test]
    fn little_endian_layout() {
        let bytes = encode_raster(&Array2::from_elem((1, 2), 1.0)).unwrap();
        assert_eq!(&bytes[..8], b"MTRASTER");
        assert_eq!(&bytes[8..20], &[1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(&bytes[20..24], &[0, 0, 0x80, 0x3f]);
    }

    #[test]
    fn format_errors_carry_offsets() {
        let good = encode_raster(&ramp(3, 3)).unwrap();
        let cut = &good[..good.len() - 3];
        match decode_raster(cut) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, cut.len() as u64),
            other => panic!("{other:?}"),
        }
        let mut bad = good.clone();
        bad[3] = b'x';
        assert!(matches!(
            decode_raster(&bad),
            Err(Error::Format { offset: 3, .. })
        ));
        let mut v2 = good.clone();
        v2[8] = 2;
        assert!(matches!(
            decode_raster(&v2),
            Err(Error::Format { offset: 8, .. })
        ));
        assert!(matches!(
            decode_raster(&good[..15]),
            Err(Error::Format { offset: 15, .. })
        ));
        let mut long = good;
        long.push(0);
        assert!(matches!(
            decode_raster(&long),
            Err(Error::Format { offset: 56, .. })
        ));
    }

    #[test]
    fn sinogram_sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested/s.mtr");
        let s = Sinogram::new(angles_180(6), ramp(6, 4), 2.25).unwrap();
        write_sinogram(&p, &s, Some(100.0)).unwrap();
        let (back, meta) = read_sinogram(&p).unwrap();
        assert_eq!(back.angles(), s.angles());
        assert_eq!(back.center(), 2.25);
        assert_eq!(meta.n_ph, Some(100.0));
        assert_eq!(back.values(), s.values());
    }

    #[test]
    fn pgm_scaling_and_clamping() {
        let flat = ImageGrid::from_signed(Array2::from_elem((2, 3), 0.5));
        let bytes = encode_pgm(&flat, 0.0, 1.0).unwrap();
        let header = b"P5\n3 2\n65535\n";
        assert_eq!(&bytes[..header.len()], header);
        let px: Vec<u16> = bytes[header.len()..]
            .chunks(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]))
            .collect();
        assert_eq!(px, vec![32768; 6]);

        let img =
            ImageGrid::from_signed(Array2::from_shape_vec((1, 3), vec![-1.0, 1.0, 2.0]).unwrap());
        let eps = 1e-9;
        let bytes = encode_pgm(&img, 1.0 - eps, 1.0).unwrap();
        let px: Vec<u16> = bytes[13..]
            .chunks(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]))
            .collect();
        assert_eq!(px, vec![0, 65535, 65535]);
        assert!(encode_pgm(&img, 1.0, 1.0).is_err());
    }

    #[test]
    fn csv_has_header_and_quotes() {
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct Row {
            name: String,
            v: f64,
        }
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let rows = vec![
            Row {
                name: "a,b".into(),
                v: 0.5,
            },
            Row {
                name: "q\"".into(),
                v: 2.0,
            },
        ];
        write_csv(&p, &rows).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("name,v\n\"a,b\",0.5\n"));
        assert_eq!(read_csv::<Row>(&p).unwrap(), rows);
    }
}
