//! Frame loading, differencing, patch sampling and feature assembly.
//!
//! Frames are stored as `height x width` matrices of intensities in `[0, 1]`,
//! indexed `(row, col)`. Frame coordinates used by the warp are `(x, y)` with
//! `x` the column and `y` the row; integer coordinates hit pixel values exactly.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{canonical_coord, AffineState};

pub const MIN_FRAME_SIDE: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub pixels: DMatrix<f64>,
    pub index: usize,
}

impl Frame {
    pub fn new(pixels: DMatrix<f64>, index: usize) -> Result<Self> {
        let (h, w) = pixels.shape();
        if h < MIN_FRAME_SIDE || w < MIN_FRAME_SIDE {
            return Err(Error::BadShape(format!(
                "frame {h}x{w} is smaller than {MIN_FRAME_SIDE}x{MIN_FRAME_SIDE}"
            )));
        }
        if !pixels.iter().all(|p| (0.0..=1.0).contains(p)) {
            return Err(Error::NonFiniteInput);
        }
        Ok(Self { pixels, index })
    }

    pub fn zeros(height: usize, width: usize, index: usize) -> Self {
        Self {
            pixels: DMatrix::zeros(height, width),
            index,
        }
    }

    pub fn height(&self) -> usize {
        self.pixels.nrows()
    }

    pub fn width(&self) -> usize {
        self.pixels.ncols()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.pixels.shape()
    }

    /// Mean intensity over the axis-aligned window with top-left `(row, col)`.
    pub fn window_mean(&self, row: usize, col: usize, h: usize, w: usize) -> f64 {
        let view = self.pixels.view((row, col), (h, w));
        view.sum() / (h * w) as f64
    }

    /// Bilinear sample at frame coordinates `(x, y)`; neighbours outside the frame read as 0.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let (h, w) = (self.height() as i64, self.width() as i64);
        let px = |r: i64, c: i64| -> f64 {
            if r < 0 || c < 0 || r >= h || c >= w {
                0.0
            } else {
                self.pixels[(r as usize, c as usize)]
            }
        };
        let (r0, c0) = (y0 as i64, x0 as i64);
        let mut v = (1.0 - fy) * (1.0 - fx) * px(r0, c0);
        if fx != 0.0 {
            v += (1.0 - fy) * fx * px(r0, c0 + 1);
        }
        if fy != 0.0 {
            v += fy * (1.0 - fx) * px(r0 + 1, c0);
            if fx != 0.0 {
                v += fy * fx * px(r0 + 1, c0 + 1);
            }
        }
        v
    }
}

#[derive(Debug, Clone)]
pub struct FrameSequence {
    pub frames: Vec<Frame>,
    pub name: String,
}

impl FrameSequence {
    pub fn new(name: impl Into<String>, frames: Vec<Frame>) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::TooFewFrames(frames.len()));
        }
        let dims = frames[0].dims();
        for (i, f) in frames.iter().enumerate() {
            if f.dims() != dims {
                return Err(Error::InconsistentDimensions {
                    path: PathBuf::from(format!("frame {i}")),
                    expected: dims,
                    got: f.dims(),
                });
            }
            if f.index != i {
                return Err(Error::BadShape(format!(
                    "frame at position {i} carries index {}",
                    f.index
                )));
            }
        }
        Ok(Self {
            frames,
            name: name.into(),
        })
    }

    /// Builds a sequence from raw matrices, numbering frames from 0.
    pub fn from_pixels(name: impl Into<String>, pixels: Vec<DMatrix<f64>>) -> Result<Self> {
        let frames = pixels
            .into_iter()
            .enumerate()
            .map(|(i, p)| Frame::new(p, i))
            .collect::<Result<Vec<_>>>()?;
        Self::new(name, frames)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    /// Difference frame for index `t >= 1`.
    pub fn difference(&self, t: usize) -> Result<Frame> {
        frame_difference(&self.frames[t - 1], &self.frames[t])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub pixels: DMatrix<f64>,
}

impl Patch {
    pub fn new(pixels: DMatrix<f64>) -> Self {
        Self { pixels }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.pixels.shape()
    }

    /// Row-major flattening.
    pub fn to_vec(&self) -> Vec<f64> {
        let (h, w) = self.dims();
        let mut v = Vec::with_capacity(h * w);
        for r in 0..h {
            for c in 0..w {
                v.push(self.pixels[(r, c)]);
            }
        }
        v
    }

    /// Row-major flattening scaled to unit ℓ2 norm; zero patches stay zero.
    pub fn normalized_vec(&self) -> Vec<f64> {
        let mut v = self.to_vec();
        normalize_in_place(&mut v);
        v
    }
}

pub(crate) fn normalize_in_place(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub stride: usize,
    pub patch_size: usize,
}

#[derive(Debug, Clone)]
pub struct ProposalSet {
    pub patches: Vec<Patch>,
    /// Patch centres `(row, col)` in source-frame pixels.
    pub coords: Vec<(usize, usize)>,
    pub grid: GridSpec,
}

impl ProposalSet {
    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    /// Top-left corner of proposal `j`.
    pub fn origin(&self, j: usize) -> (usize, usize) {
        let half = self.grid.patch_size / 2;
        let (r, c) = self.coords[j];
        (r - half, c - half)
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            patches: perm.iter().map(|&i| self.patches[i].clone()).collect(),
            coords: perm.iter().map(|&i| self.coords[i]).collect(),
            grid: self.grid,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    /// `d x n`; column `j` is proposal `j`.
    pub data: DMatrix<f64>,
    pub coords: Vec<(usize, usize)>,
}

impl FeatureMatrix {
    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }
}

pub fn frame_difference(prev: &Frame, cur: &Frame) -> Result<Frame> {
    if prev.dims() != cur.dims() {
        return Err(Error::DimensionMismatch(prev.dims(), cur.dims()));
    }
    let pixels = cur.pixels.zip_map(&prev.pixels, |a, b| (a - b).abs());
    Ok(Frame {
        pixels,
        index: cur.index,
    })
}

/// Samples an `out_h x out_w` patch from the affine image of the canonical grid.
pub fn warp_patch(frame: &Frame, state: &AffineState, out_h: usize, out_w: usize) -> Result<Patch> {
    state.validate()?;
    if out_h == 0 || out_w == 0 {
        return Err(Error::BadShape(format!("output patch {out_h}x{out_w}")));
    }
    let m = state.linear();
    let mut pixels = DMatrix::zeros(out_h, out_w);
    for u in 0..out_h {
        let cy = canonical_coord(u, out_h);
        for v in 0..out_w {
            let cx = canonical_coord(v, out_w);
            let x = state.lx + m[0][0] * cx + m[0][1] * cy;
            let y = state.ly + m[1][0] * cx + m[1][1] * cy;
            pixels[(u, v)] = frame.sample(x, y);
        }
    }
    Ok(Patch { pixels })
}

pub fn extract_proposals(frame: &Frame, patch_size: usize, stride: usize) -> Result<ProposalSet> {
    let (h, w) = frame.dims();
    if patch_size == 0 || patch_size > h.min(w) {
        return Err(Error::PatchTooLarge {
            patch: patch_size,
            height: h,
            width: w,
        });
    }
    if stride == 0 {
        return Err(Error::BadShape("stride must be at least 1".into()));
    }
    let rows = (h - patch_size) / stride + 1;
    let cols = (w - patch_size) / stride + 1;
    let half = patch_size / 2;
    let mut patches = Vec::with_capacity(rows * cols);
    let mut coords = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let (r, c) = (i * stride, j * stride);
            patches.push(Patch {
                pixels: frame.pixels.view((r, c), (patch_size, patch_size)).into_owned(),
            });
            coords.push((r + half, c + half));
        }
    }
    Ok(ProposalSet {
        patches,
        coords,
        grid: GridSpec {
            rows,
            cols,
            stride,
            patch_size,
        },
    })
}

pub fn feature_matrix(proposals: &ProposalSet) -> Result<FeatureMatrix> {
    let first = proposals.patches.first().ok_or(Error::EmptyProposals)?;
    let (ph, pw) = first.dims();
    let d = ph * pw;
    let n = proposals.len();
    let mut data = DMatrix::zeros(d, n);
    for (j, patch) in proposals.patches.iter().enumerate() {
        if patch.dims() != (ph, pw) {
            return Err(Error::ShapeMismatch(format!(
                "proposal {j} is {:?}, expected {:?}",
                patch.dims(),
                (ph, pw)
            )));
        }
        let v = patch.normalized_vec();
        data.column_mut(j).copy_from_slice(&v);
    }
    Ok(FeatureMatrix {
        data,
        coords: proposals.coords.clone(),
    })
}

pub fn read_pgm(path: &Path) -> Result<DMatrix<f64>> {
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingSource(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    parse_pgm(&bytes).map_err(|reason| Error::MalformedPgm {
        path: path.to_path_buf(),
        reason,
    })
}

/// Parses a binary 8-bit PGM (`P5`, maxval 255); `#` comment lines may follow the magic.
pub fn parse_pgm(bytes: &[u8]) -> std::result::Result<DMatrix<f64>, String> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err("magic is not P5".into());
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err("missing header field".into());
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or("header field out of range")?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(format!("bad dimensions {width}x{height}"));
    }
    if maxval != 255 {
        return Err(format!("maxval {maxval} unsupported"));
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err("missing whitespace before raster".into());
    }
    pos += 1;
    let payload = &bytes[pos..];
    if payload.len() < width * height {
        return Err(format!(
            "truncated raster: {} of {} bytes",
            payload.len(),
            width * height
        ));
    }
    Ok(DMatrix::from_fn(height, width, |r, c| {
        payload[r * width + c] as f64 / 255.0
    }))
}

pub fn write_pgm(path: &Path, pixels: &DMatrix<f64>) -> Result<()> {
    let (h, w) = pixels.shape();
    let mut out = Vec::with_capacity(h * w + 20);
    write!(out, "P5\n{w} {h}\n255\n")?;
    for r in 0..h {
        for c in 0..w {
            out.push((pixels[(r, c)].clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Loads a sequence from a directory of `.pgm` files (lexicographic order) or a manifest
/// listing one frame path per line relative to the manifest.
pub fn load_frame_sequence(source: &Path) -> Result<FrameSequence> {
    if !source.exists() {
        return Err(Error::MissingSource(source.to_path_buf()));
    }
    let paths: Vec<PathBuf> = if source.is_dir() {
        let mut paths = fs::read_dir(source)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && p.extension()
                        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
            })
            .collect::<Vec<_>>();
        paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
        paths
    } else {
        let base = source.parent().unwrap_or(Path::new("."));
        fs::read_to_string(source)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| base.join(l))
            .collect()
    };
    if paths.len() < 2 {
        return Err(Error::TooFewFrames(paths.len()));
    }
    let mut frames = Vec::with_capacity(paths.len());
    let mut dims = None;
    for (i, p) in paths.iter().enumerate() {
        let pixels = read_pgm(p)?;
        match dims {
            None => dims = Some(pixels.shape()),
            Some(d) if d != pixels.shape() => {
                return Err(Error::InconsistentDimensions {
                    path: p.clone(),
                    expected: d,
                    got: pixels.shape(),
                })
            }
            _ => {}
        }
        let (h, w) = pixels.shape();
        if h < MIN_FRAME_SIDE || w < MIN_FRAME_SIDE {
            return Err(Error::MalformedPgm {
                path: p.clone(),
                reason: format!("{h}x{w} is below the {MIN_FRAME_SIDE}x{MIN_FRAME_SIDE} minimum"),
            });
        }
        frames.push(Frame { pixels, index: i });
    }
    let name = source
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    FrameSequence::new(name, frames)
}

/// Writes every frame as `frame_NNNN.pgm` into `dir`.
pub fn write_frame_sequence(dir: &Path, seq: &FrameSequence) -> Result<()> {
    fs::create_dir_all(dir)?;
    for f in &seq.frames {
        write_pgm(&dir.join(format!("frame_{:04}.pgm", f.index)), &f.pixels)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn padded(values: &[[f64; 2]; 2]) -> Frame {
        let mut m = DMatrix::zeros(8, 8);
        for r in 0..2 {
            for c in 0..2 {
                m[(r, c)] = values[r][c];
            }
        }
        Frame::new(m, 1).unwrap()
    }

    fn ramp(h: usize, w: usize) -> Frame {
        Frame::new(
            DMatrix::from_fn(h, w, |r, c| ((r * w + c) % 251) as f64 / 250.0),
            0,
        )
        .unwrap()
    }

    #[test]
    fn difference_matches_elementwise_definition() {
        let prev = padded(&[[0.0, 0.5], [1.0, 0.0]]);
        let cur = padded(&[[0.25, 0.5], [0.0, 1.0]]);
        let d = frame_difference(&prev, &cur).unwrap();
        assert_eq!(d.pixels[(0, 0)], 0.25);
        assert_eq!(d.pixels[(0, 1)], 0.0);
        assert_eq!(d.pixels[(1, 0)], 1.0);
        assert_eq!(d.pixels[(1, 1)], 1.0);
        assert_eq!(d.index, 1);
        let back = frame_difference(&cur, &prev).unwrap();
        assert_eq!(back.pixels, d.pixels);
        let same = frame_difference(&cur, &cur).unwrap();
        assert!(same.pixels.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn difference_rejects_mismatched_frames() {
        let a = Frame::zeros(8, 8, 0);
        let b = Frame::zeros(8, 9, 1);
        assert!(matches!(
            frame_difference(&a, &b),
            Err(Error::DimensionMismatch(..))
        ));
    }

    #[test]
    fn frame_rejects_out_of_range_and_tiny() {
        assert!(Frame::new(DMatrix::from_element(8, 8, 1.5), 0).is_err());
        assert!(Frame::new(DMatrix::zeros(4, 8), 0).is_err());
    }

    #[test]
    fn identity_warp_reproduces_region() {
        let f = ramp(64, 80);
        let p = warp_patch(&f, &AffineState::centered(16.0 + 20.0, 16.0 + 10.0, 1.0), 32, 32).unwrap();
        assert_eq!(p.pixels, f.pixels.view((10, 20), (32, 32)).into_owned());
        // half-size output with matching scale
        let p = warp_patch(&f, &AffineState::centered(8.0 + 3.0, 8.0 + 5.0, 0.5), 16, 16).unwrap();
        assert_eq!(p.pixels, f.pixels.view((5, 3), (16, 16)).into_owned());
    }

    #[test]
    fn warp_outside_frame_is_zero() {
        let f = ramp(32, 32);
        let p = warp_patch(&f, &AffineState::centered(500.0, -300.0, 1.0), 32, 32).unwrap();
        assert!(p.pixels.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn warp_rejects_non_positive_scale() {
        let f = ramp(32, 32);
        let mut st = AffineState::centered(16.0, 16.0, 0.0);
        assert!(matches!(
            warp_patch(&f, &st, 8, 8),
            Err(Error::NonPositiveScale { .. })
        ));
        st.s = 1.0;
        st.alpha = -1.0;
        assert!(warp_patch(&f, &st, 8, 8).is_err());
    }

    #[test]
    fn quarter_turn_on_symmetric_pattern_matches_enumeration() {
        // pattern symmetric under 90 degree rotations about (32, 32)
        let f = Frame::new(
            DMatrix::from_fn(64, 64, |r, c| {
                let dr = r as f64 - 32.0;
                let dc = c as f64 - 32.0;
                ((dr * dr + dc * dc).sqrt() / 10.0).sin().abs() * 0.5 + 0.25 * ((dr * dc).abs() / 900.0).min(1.0)
            }),
            0,
        )
        .unwrap();
        let upright = warp_patch(&f, &AffineState::centered(32.0, 32.0, 1.0), 32, 32).unwrap();
        let mut turned = AffineState::centered(32.0, 32.0, 1.0);
        turned.theta = FRAC_PI_2;
        let rotated = warp_patch(&f, &turned, 32, 32).unwrap();
        for u in 0..32 {
            for v in 0..32 {
                // oracle: a quarter turn maps canonical (cx, cy) to (-cy, cx)
                let cx = v as f64 - 16.0;
                let cy = u as f64 - 16.0;
                let (x, y) = (32.0 - cy, 32.0 + cx);
                let expected = f.pixels[(y as usize, x as usize)];
                assert!((rotated.pixels[(u, v)] - expected).abs() < 1e-9);
                assert!((upright.pixels[(u, v)] - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn proposal_grid_arithmetic() {
        let p = extract_proposals(&Frame::zeros(64, 64, 0), 32, 32).unwrap();
        assert_eq!(p.coords, vec![(16, 16), (16, 48), (48, 16), (48, 48)]);
        let p = extract_proposals(&Frame::zeros(32, 32, 0), 32, 8).unwrap();
        assert_eq!(p.len(), 1);
        let p = extract_proposals(&Frame::zeros(64, 48, 0), 16, 16).unwrap();
        assert_eq!(p.len(), 12);
        assert_eq!((p.grid.rows, p.grid.cols), (4, 3));
        assert!(matches!(
            extract_proposals(&Frame::zeros(16, 64, 0), 32, 8),
            Err(Error::PatchTooLarge { .. })
        ));
    }

    #[test]
    fn proposals_cover_reachable_pixels() {
        let f = ramp(40, 50);
        let p = extract_proposals(&f, 12, 5).unwrap();
        let mut covered = DMatrix::from_element(40, 50, false);
        for j in 0..p.len() {
            let (r, c) = p.origin(j);
            assert!(r + 12 <= 40 && c + 12 <= 50);
            assert_eq!(p.patches[j].pixels, f.pixels.view((r, c), (12, 12)).into_owned());
            for dr in 0..12 {
                for dc in 0..12 {
                    covered[(r + dr, c + dc)] = true;
                }
            }
        }
        let max_r = (p.grid.rows - 1) * 5 + 12;
        let max_c = (p.grid.cols - 1) * 5 + 12;
        for r in 0..max_r {
            for c in 0..max_c {
                assert!(covered[(r, c)]);
            }
        }
    }

    #[test]
    fn feature_columns_are_normalized() {
        let mut f = Frame::zeros(8, 8, 0);
        f.pixels.view_mut((0, 0), (2, 2)).fill(0.3);
        let p = extract_proposals(&f, 2, 2).unwrap();
        let fm = feature_matrix(&p).unwrap();
        assert_eq!(fm.data.column(0).as_slice(), &[0.5, 0.5, 0.5, 0.5]);
        assert!(fm.data.column(1).iter().all(|&v| v == 0.0));
        assert_eq!(fm.ncols(), 16);

        let f = ramp(30, 30);
        let fm = feature_matrix(&extract_proposals(&f, 5, 3).unwrap()).unwrap();
        for col in fm.data.column_iter() {
            let n = col.norm();
            assert!(n == 0.0 || (n - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn feature_matrix_needs_proposals() {
        let empty = ProposalSet {
            patches: vec![],
            coords: vec![],
            grid: GridSpec {
                rows: 0,
                cols: 0,
                stride: 1,
                patch_size: 1,
            },
        };
        assert!(matches!(feature_matrix(&empty), Err(Error::EmptyProposals)));
    }

    #[test]
    fn pgm_header_rules() {
        assert!(parse_pgm(b"P6\n2 2\n255\n\0\0\0\0").is_err());
        assert!(parse_pgm(b"P5\n2 2\n255\n\0\0\0").is_err());
        assert!(parse_pgm(b"P5\n0 2\n255\n").is_err());
        let m = parse_pgm(b"P5\n# made by hand\n2 1\n255\n\xff\x00").unwrap();
        assert_eq!(m[(0, 0)], 1.0);
        assert_eq!(m[(0, 1)], 0.0);
    }
}
