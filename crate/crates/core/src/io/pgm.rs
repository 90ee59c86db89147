//! Binary PGM (`P5`) images and image stacks.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Result, TubalError};
use crate::tensor::Tensor3;

/// A grayscale image with pixels scaled to `[0, 1]`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl GrayImage {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }
}

/// How a stack of `h x w` images is arranged in a tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Layout {
    /// Image `j` is lateral slice `j`: the tensor is `h x count x w`.
    #[default]
    Lateral,
    /// Image `k` is frontal slice `k`: the tensor is `h x w x count`.
    Frontal,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&c) = self.bytes.get(self.pos) {
            if c == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> std::result::Result<usize, String> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(format!("expected {what} at byte {start}"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| format!("{what} out of range at byte {start}"))
    }
}

/// Parses a `P5` image. Errors are plain messages; callers attach the file name.
pub fn parse_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err("not a binary PGM (missing P5 magic)".into());
    }
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} outside 1..=65535"));
    }
    match bytes.get(cur.pos) {
        Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(format!("expected a single whitespace byte after maxval at byte {}", cur.pos)),
    }
    let depth = if maxval < 256 { 1 } else { 2 };
    let count = width
        .checked_mul(height)
        .ok_or_else(|| format!("image size {width}x{height} overflows"))?;
    let raster = &bytes[cur.pos..];
    if raster.len() < count * depth {
        return Err(format!("raster truncated: expected {} bytes, found {}", count * depth, raster.len()));
    }
    let scale = 1.0 / maxval as f64;
    let pixels = if depth == 1 {
        raster[..count].iter().map(|&v| v as f64 * scale).collect()
    } else {
        raster[..2 * count]
            .chunks_exact(2)
            .map(|p| u16::from_be_bytes([p[0], p[1]]) as f64 * scale)
            .collect()
    };
    Ok(GrayImage { width, height, pixels })
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| ingest(path, e.to_string()))?;
    parse_pgm(&bytes).map_err(|msg| ingest(path, msg))
}

/// Encodes `img` as `P5` with `maxval` 255 (pixels are clamped to `[0, 1]` and rounded).
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.pixels.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

fn ingest(path: &Path, msg: impl Into<String>) -> TubalError {
    TubalError::Ingest { path: path.to_path_buf(), msg: msg.into() }
}

fn is_pgm(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
}

/// Expands directories into their `.pgm` files and sorts everything by file name.
pub fn collect_pgm_files<P: AsRef<Path>>(inputs: &[P]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        let input = input.as_ref();
        if input.is_dir() {
            let before = files.len();
            for entry in fs::read_dir(input).map_err(|e| ingest(input, e.to_string()))? {
                let path = entry.map_err(|e| ingest(input, e.to_string()))?.path();
                if path.is_file() && is_pgm(&path) {
                    files.push(path);
                }
            }
            if files.len() == before {
                return Err(ingest(input, "directory contains no .pgm files"));
            }
        } else {
            files.push(input.to_path_buf());
        }
    }
    if files.is_empty() {
        return Err(ingest(Path::new(""), "no input images"));
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()).then_with(|| a.cmp(b)));
    Ok(files)
}

fn read_uniform(files: &[PathBuf]) -> Result<Vec<GrayImage>> {
    let mut images: Vec<GrayImage> = Vec::with_capacity(files.len());
    for path in files {
        let img = read_pgm(path)?;
        if let Some(first) = images.first() {
            if (img.height, img.width) != (first.height, first.width) {
                return Err(ingest(
                    path,
                    format!("image is {}x{} but {} is {}x{}", img.height, img.width, files[0].display(), first.height, first.width),
                ));
            }
        }
        images.push(img);
    }
    Ok(images)
}

/// Stacks images into a tensor according to `layout`.
pub fn stack_images(images: &[GrayImage], layout: Layout) -> Result<Tensor3> {
    let Some(first) = images.first() else {
        return Err(TubalError::Shape("no images to stack".into()));
    };
    let (h, w) = (first.height, first.width);
    if images.iter().any(|img| (img.height, img.width) != (h, w)) {
        return Err(TubalError::Shape("images have different sizes".into()));
    }
    Ok(match layout {
        Layout::Lateral => Tensor3::from_fn(h, images.len(), w, |i, j, k| images[j].get(i, k)),
        Layout::Frontal => Tensor3::from_fn(h, w, images.len(), |i, j, k| images[k].get(i, j)),
    })
}

/// Reads PGM files (directories are expanded) in file name order and stacks them.
pub fn read_pgm_stack<P: AsRef<Path>>(inputs: &[P], layout: Layout) -> Result<Tensor3> {
    let files = collect_pgm_files(inputs)?;
    stack_images(&read_uniform(&files)?, layout)
}

/// Builds the `(h w) x frames x channels` video tensor. `channels[c][f]` is frame `f`
/// of channel `c`; each frame is vectorized column by column.
pub fn video_tensor(channels: &[Vec<GrayImage>]) -> Result<Tensor3> {
    let Some(first) = channels.first().and_then(|c| c.first()) else {
        return Err(TubalError::Shape("no frames".into()));
    };
    let (h, w) = (first.height, first.width);
    let frames = channels[0].len();
    for ch in channels {
        if ch.len() != frames || ch.iter().any(|img| (img.height, img.width) != (h, w)) {
            return Err(TubalError::Shape("channels differ in frame count or frame size".into()));
        }
    }
    Ok(Tensor3::from_fn(h * w, frames, channels.len(), |p, f, c| channels[c][f].get(p % h, p / h)))
}

/// Reads one stack per channel (each a directory or file) into a video tensor.
pub fn read_video_channels<P: AsRef<Path>>(channels: &[P]) -> Result<Tensor3> {
    let stacks = channels
        .iter()
        .map(|c| read_uniform(&collect_pgm_files(std::slice::from_ref(c))?))
        .collect::<Result<Vec<_>>>()?;
    video_tensor(&stacks)
}

/// Inverse of the column-major vectorization in [`video_tensor`]: frame `f` of channel `c`.
pub fn video_frame(t: &Tensor3, h: usize, f: usize, c: usize) -> Result<GrayImage> {
    let (hw, frames, chans) = t.dims();
    if h == 0 || hw % h != 0 || f >= frames || c >= chans {
        return Err(TubalError::Shape(format!("cannot take frame {f}, channel {c} with height {h} from {hw}x{frames}x{chans}")));
    }
    let w = hw / h;
    let mut pixels = vec![0.0; hw];
    for p in 0..hw {
        pixels[(p % h) * w + p / h] = t[(p, f, c)];
    }
    Ok(GrayImage { width: w, height: h, pixels })
}
