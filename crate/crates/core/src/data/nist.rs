//! Synthetic 7x7 letter classification (N, I, S, T) with pixel-flip and
//! translation distortions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{MgdError, Result};
use crate::network::Shape;

pub const GLYPH_NAMES: [char; 4] = ['N', 'I', 'S', 'T'];

/// Base glyphs, one row per string, `#` = lit pixel.
pub const GLYPHS: [[&str; 7]; 4] = [
    [
        "#.....#", "##....#", "#.#...#", "#..#..#", "#...#.#", "#....##", "#.....#",
    ],
    [
        ".#####.", "...#...", "...#...", "...#...", "...#...", "...#...", ".#####.",
    ],
    [
        ".######", "#......", "#......", ".#####.", "......#", "......#", "######.",
    ],
    [
        "#######", "...#...", "...#...", "...#...", "...#...", "...#...", "...#...",
    ],
];

const SIDE: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Nist7x7Config {
    pub samples_per_class: usize,
    #[serde(default)]
    pub pixel_flip_prob: f64,
    /// Maximum absolute integer translation along each axis.
    #[serde(default)]
    pub shift_range: usize,
    #[serde(default)]
    pub seed: u64,
}

fn glyph_bits(class: usize) -> [[bool; SIDE]; SIDE] {
    let mut g = [[false; SIDE]; SIDE];
    for (r, row) in GLYPHS[class].iter().enumerate() {
        for (c, ch) in row.bytes().enumerate() {
            g[r][c] = ch == b'#';
        }
    }
    g
}

/// Smallest translation along either axis that moves some glyph entirely off the grid.
fn off_grid_shift() -> usize {
    let mut limit = SIDE;
    for class in 0..GLYPHS.len() {
        let g = glyph_bits(class);
        let lit_rows: Vec<usize> = (0..SIDE).filter(|&r| g[r].iter().any(|&b| b)).collect();
        let lit_cols: Vec<usize> = (0..SIDE).filter(|&c| (0..SIDE).any(|r| g[r][c])).collect();
        for span in [lit_rows, lit_cols] {
            let (lo, hi) = (span[0], span[span.len() - 1]);
            limit = limit.min(SIDE - lo).min(hi + 1);
        }
    }
    limit
}

/// Generates `4 * samples_per_class` samples with classes interleaved
/// (sample `k` has class `k % 4`).
pub fn nist7x7_dataset(cfg: &Nist7x7Config) -> Result<Dataset> {
    if cfg.samples_per_class == 0 {
        return Err(MgdError::config("samples_per_class must be at least 1"));
    }
    if !(0.0..=1.0).contains(&cfg.pixel_flip_prob) {
        return Err(MgdError::config(format!(
            "pixel_flip_prob {} outside [0, 1]",
            cfg.pixel_flip_prob
        )));
    }
    let limit = off_grid_shift();
    if cfg.shift_range >= limit {
        return Err(MgdError::config(format!(
            "shift_range {} can move a glyph fully off the grid (limit {})",
            cfg.shift_range,
            limit - 1
        )));
    }
    let glyphs: Vec<_> = (0..4).map(glyph_bits).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = 4 * cfg.samples_per_class;
    let mut inputs = Vec::with_capacity(n * SIDE * SIDE);
    let mut labels = Vec::with_capacity(n);
    let r = cfg.shift_range as i64;
    for k in 0..n {
        let class = k % 4;
        let (dx, dy) = if r > 0 {
            (rng.random_range(-r..=r), rng.random_range(-r..=r))
        } else {
            (0, 0)
        };
        for y in 0..SIDE as i64 {
            for x in 0..SIDE as i64 {
                let (sy, sx) = (y - dy, x - dx);
                let mut lit = (0..SIDE as i64).contains(&sy)
                    && (0..SIDE as i64).contains(&sx)
                    && glyphs[class][sy as usize][sx as usize];
                if cfg.pixel_flip_prob > 0.0 && rng.random_bool(cfg.pixel_flip_prob) {
                    lit = !lit;
                }
                inputs.push(if lit { 1.0 } else { 0.0 });
            }
        }
        labels.push(class);
    }
    Dataset::from_labels("nist7x7", Shape::flat(SIDE * SIDE), inputs, &labels, 4)
}
