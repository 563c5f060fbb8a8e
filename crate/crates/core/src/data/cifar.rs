use std::path::Path;

use crate::data::Dataset;
use crate::error::{MgdError, Result};
use crate::network::Shape;

/// One label byte followed by 3 planes of 32x32 pixel bytes (R, G, B).
pub const CIFAR_RECORD_LEN: usize = 1 + 3 * 32 * 32;

/// Loads one or more CIFAR-10 binary batch files into a channels-first dataset.
pub fn load_cifar10<P: AsRef<Path>>(paths: &[P]) -> Result<Dataset> {
    let mut inputs = Vec::new();
    let mut labels = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| MgdError::io(path, e))?;
        if bytes.is_empty() || bytes.len() % CIFAR_RECORD_LEN != 0 {
            return Err(MgdError::Parse {
                path: path.to_path_buf(),
                offset: (bytes.len() - bytes.len() % CIFAR_RECORD_LEN) as u64,
                message: format!(
                    "{} bytes is not a whole number of {CIFAR_RECORD_LEN}-byte records",
                    bytes.len()
                ),
            });
        }
        for (r, rec) in bytes.chunks_exact(CIFAR_RECORD_LEN).enumerate() {
            if rec[0] > 9 {
                return Err(MgdError::Parse {
                    path: path.to_path_buf(),
                    offset: (r * CIFAR_RECORD_LEN) as u64,
                    message: format!("label {} out of range", rec[0]),
                });
            }
            labels.push(rec[0] as usize);
            inputs.extend(rec[1..].iter().map(|&b| b as f64 / 255.0));
        }
    }
    Dataset::from_labels("cifar10", Shape::image(3, 32, 32), inputs, &labels, 10)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_records() {
        let dir = tempfile::tempdir().unwrap();
        let mut bytes = vec![0u8; 2 * CIFAR_RECORD_LEN];
        bytes[0] = 3;
        bytes[1] = 255;
        bytes[CIFAR_RECORD_LEN] = 9;
        let p = dir.path().join("batch.bin");
        std::fs::write(&p, &bytes).unwrap();
        let d = load_cifar10(&[&p]).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.label(0), 3);
        assert_eq!(d.label(1), 9);
        assert_eq!(d.input(0)[0], 1.0);

        std::fs::write(&p, &bytes[..100]).unwrap();
        assert!(load_cifar10(&[&p]).is_err());
    }
}
