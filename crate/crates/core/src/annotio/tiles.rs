//! 2x2 tiling of a full camera frame.
//!
//! Full frames are cut into four equal tiles in row-major order:
//!
//! ```text
//! +---+---+
//! | 0 | 1 |
//! +---+---+
//! | 2 | 3 |
//! +---+---+
//! ```
//!
//! Boxes are assigned to the tile containing their center and clipped to it.
//! A center lying exactly on a tile boundary goes to the lower-index tile.

use serde::{Deserialize, Serialize};

use super::FormatError;
use crate::geom::BBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileMap {
    pub full_width: u32,
    pub full_height: u32,
}

/// Tile rectangle in full-frame pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelRect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl Default for TileMap {
    fn default() -> Self {
        Self {
            full_width: 3280,
            full_height: 2464,
        }
    }
}

impl TileMap {
    pub fn new(full_width: u32, full_height: u32) -> Result<Self, FormatError> {
        if full_width == 0 || full_height == 0 || !full_width.is_multiple_of(2) || !full_height.is_multiple_of(2) {
            return Err(FormatError::TileMap(format!(
                "frame {full_width}x{full_height} must have positive even dimensions"
            )));
        }
        Ok(Self {
            full_width,
            full_height,
        })
    }

    pub fn tile_width(&self) -> u32 {
        self.full_width / 2
    }

    pub fn tile_height(&self) -> u32 {
        self.full_height / 2
    }

    pub fn tiles(&self) -> [PixelRect; 4] {
        let (w, h) = (self.tile_width(), self.tile_height());
        std::array::from_fn(|i| PixelRect {
            x: (i as u32 % 2) * w,
            y: (i as u32 / 2) * h,
            width: w,
            height: h,
        })
    }

    /// Converts a normalized full-frame box to pixel coordinates.
    pub fn to_pixels(&self, b: &BBox) -> BBox {
        let (fw, fh) = (self.full_width as f64, self.full_height as f64);
        BBox {
            x_min: b.x_min * fw,
            y_min: b.y_min * fh,
            x_max: b.x_max * fw,
            y_max: b.y_max * fh,
        }
    }
}

fn tile_origin(index: usize) -> (f64, f64) {
    ((index % 2) as f64 * 0.5, (index / 2) as f64 * 0.5)
}

/// Assigns a normalized full-frame box to a tile and returns it in tile-local
/// normalized coordinates.
pub fn tile_split(b: &BBox, _map: &TileMap) -> (usize, BBox) {
    let (cx, cy) = b.center();
    let col = usize::from(cx > 0.5);
    let row = usize::from(cy > 0.5);
    let index = row * 2 + col;
    let (ox, oy) = tile_origin(index);
    let clip = |v: f64, o: f64| (v.clamp(o, o + 0.5) - o) * 2.0;
    let local = BBox {
        x_min: clip(b.x_min, ox),
        y_min: clip(b.y_min, oy),
        x_max: clip(b.x_max, ox),
        y_max: clip(b.y_max, oy),
    };
    (index, local)
}

/// Inverse of [`tile_split`]: maps a tile-local box back to full-frame
/// normalized coordinates.
pub fn tile_join(index: usize, local: &BBox, _map: &TileMap) -> BBox {
    assert!(index < 4, "tile index {index} out of range");
    let (ox, oy) = tile_origin(index);
    BBox {
        x_min: local.x_min / 2.0 + ox,
        y_min: local.y_min / 2.0 + oy,
        x_max: local.x_max / 2.0 + ox,
        y_max: local.y_max / 2.0 + oy,
    }
}
