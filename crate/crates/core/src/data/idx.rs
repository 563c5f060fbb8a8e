//! IDX container reader and writer (big-endian magic, dimension sizes, raw bytes).

use std::path::Path;

use crate::data::Dataset;
use crate::error::{MgdError, Result};
use crate::network::Shape;

/// Unsigned-byte payload with three dimensions.
pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
/// Unsigned-byte payload with one dimension.
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, offset: usize, message: impl Into<String>) -> MgdError {
        MgdError::Parse {
            path: self.path.to_path_buf(),
            offset: offset as u64,
            message: message.into(),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let end = self.pos + 4;
        let b = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| self.err(self.pos, format!("truncated while reading {what}")))?;
        self.pos = end;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos + len;
        let b = self.bytes.get(self.pos..end).ok_or_else(|| {
            self.err(
                self.bytes.len(),
                format!(
                    "truncated {what}: need {len} bytes from offset {}, file has {}",
                    self.pos,
                    self.bytes.len()
                ),
            )
        })?;
        self.pos = end;
        Ok(b)
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let m = self.u32("magic")?;
        if m != expected {
            return Err(self.err(0, format!("bad magic {m:#010x}, expected {expected:#010x}")));
        }
        Ok(())
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| MgdError::io(path, e))
}

fn parse_images(path: &Path, bytes: &[u8]) -> Result<(usize, usize, usize, Vec<f64>)> {
    let mut cur = Cursor {
        path,
        bytes,
        pos: 0,
    };
    cur.magic(IDX_IMAGES_MAGIC)?;
    let n = cur.u32("image count")? as usize;
    let rows = cur.u32("row count")? as usize;
    let cols = cur.u32("column count")? as usize;
    let raw = cur.take(n * rows * cols, "pixel data")?;
    Ok((n, rows, cols, raw.iter().map(|&b| b as f64 / 255.0).collect()))
}

fn parse_labels(path: &Path, bytes: &[u8]) -> Result<Vec<usize>> {
    let mut cur = Cursor {
        path,
        bytes,
        pos: 0,
    };
    cur.magic(IDX_LABELS_MAGIC)?;
    let n = cur.u32("label count")? as usize;
    Ok(cur.take(n, "label data")?.iter().map(|&b| b as usize).collect())
}

/// Loads an image/label IDX pair; the class count is `max label + 1`.
pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<Dataset> {
    load_idx_with_classes(images, labels, None)
}

pub fn load_idx_with_classes(
    images: impl AsRef<Path>,
    labels: impl AsRef<Path>,
    classes: Option<usize>,
) -> Result<Dataset> {
    let (ipath, lpath) = (images.as_ref(), labels.as_ref());
    let (n, rows, cols, pixels) = parse_images(ipath, &read_file(ipath)?)?;
    let labels = parse_labels(lpath, &read_file(lpath)?)?;
    if labels.len() != n {
        return Err(MgdError::Parse {
            path: lpath.to_path_buf(),
            offset: 4,
            message: format!("{} labels for {n} images", labels.len()),
        });
    }
    if n == 0 {
        return Err(MgdError::Parse {
            path: ipath.to_path_buf(),
            offset: 4,
            message: "no images".into(),
        });
    }
    let classes = classes.unwrap_or_else(|| labels.iter().max().map_or(1, |m| m + 1));
    let name = ipath
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "idx".into());
    Dataset::from_labels(name, Shape::image(1, rows, cols), pixels, &labels, classes)
}

/// Writes a single-channel image dataset as an IDX pair. Pixel values are
/// stored as `round(v * 255)`.
pub fn write_idx(data: &Dataset, images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<()> {
    let shape = data.input_shape();
    if shape.channels != 1 {
        return Err(MgdError::Shape(format!(
            "IDX images need a single channel, got {shape:?}"
        )));
    }
    if data.output_len() > 256 {
        return Err(MgdError::config("IDX labels are single bytes"));
    }
    let mut img = Vec::with_capacity(16 + data.len() * shape.len());
    img.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    for d in [data.len(), shape.height, shape.width] {
        img.extend_from_slice(&(d as u32).to_be_bytes());
    }
    let mut lab = Vec::with_capacity(8 + data.len());
    lab.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    lab.extend_from_slice(&(data.len() as u32).to_be_bytes());
    for i in 0..data.len() {
        img.extend(
            data.input(i)
                .iter()
                .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
        );
        lab.push(data.label(i) as u8);
    }
    let (ip, lp) = (images.as_ref(), labels.as_ref());
    std::fs::write(ip, img).map_err(|e| MgdError::io(ip, e))?;
    std::fs::write(lp, lab).map_err(|e| MgdError::io(lp, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
        let mut img = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0, 3];
        img.extend(0u8..18);
        let lab = vec![0, 0, 8, 1, 0, 0, 0, 2, 1, 0];
        let (ip, lp) = (dir.join("img.idx"), dir.join("lab.idx"));
        std::fs::write(&ip, img).unwrap();
        std::fs::write(&lp, lab).unwrap();
        (ip, lp)
    }

    #[test]
    fn parses_hand_built_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = fixture(dir.path());
        let d = load_idx(&ip, &lp).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.input_shape(), Shape::image(1, 3, 3));
        assert_eq!(d.input(1)[0], 9.0 / 255.0);
        assert_eq!(d.input(0)[8], 8.0 / 255.0);
        assert_eq!(d.target(0), &[0.0, 1.0]);
        assert_eq!(d.target(1), &[1.0, 0.0]);
    }

    #[test]
    fn labels_with_image_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, _) = fixture(dir.path());
        let err = load_idx(&ip, &ip).unwrap_err();
        assert!(matches!(err, MgdError::Parse { offset: 0, .. }), "{err}");
    }

    #[test]
    fn count_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = fixture(dir.path());
        std::fs::write(&lp, [0, 0, 8, 1, 0, 0, 0, 3, 1, 0, 1]).unwrap();
        assert!(matches!(load_idx(&ip, &lp), Err(MgdError::Parse { .. })));
    }

    #[test]
    fn truncation_names_offset() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = fixture(dir.path());
        let mut bytes = std::fs::read(&ip).unwrap();
        bytes.truncate(20);
        std::fs::write(&ip, bytes).unwrap();
        match load_idx(&ip, &lp).unwrap_err() {
            MgdError::Parse { offset, message, .. } => {
                assert_eq!(offset, 20);
                assert!(message.contains("truncated"), "{message}");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = fixture(dir.path());
        let d = load_idx(&ip, &lp).unwrap();
        let (ip2, lp2) = (dir.path().join("a"), dir.path().join("b"));
        write_idx(&d, &ip2, &lp2).unwrap();
        assert_eq!(std::fs::read(&ip).unwrap(), std::fs::read(&ip2).unwrap());
        let e = load_idx(&ip2, &lp2).unwrap();
        assert_eq!(d.input(1), e.input(1));
        assert_eq!(d.target(0), e.target(0));
    }
}
