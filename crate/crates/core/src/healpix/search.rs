use super::{vec_to_xyf, xyf_to_nest, PixelId, Resolution, Scheme};
use crate::sphere::UnitVector;

/// Result of a hierarchical pixel search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NestSearch {
    pub pixel: PixelId,
    /// Number of candidate pixels examined, `12 + 4·log2(nside)`.
    pub visited: u64,
}

/// Descends the nested hierarchy from the 12 base pixels, examining only the
/// 4 children of the current pixel at each finer level and keeping the one
/// that contains the target.
///
/// The target lies inside the returned pixel, so its centre is within one
/// pixel radius of the target and within one pixel diameter of the nearest
/// centre. Points on a shared edge follow the half-open convention of
/// [`super::locate`].
pub fn nest_search(target: &UnitVector, res: Resolution) -> NestSearch {
    let order = res.order();
    // target cell at the finest requested level, in face coordinates
    let (face, x, y) = vec_to_xyf(target, res.nside());

    let mut visited = 0u64;
    let mut best_face = 0usize;
    for candidate in 0..12usize {
        visited += 1;
        if candidate == face {
            best_face = candidate;
        }
    }
    // (px, py): face coordinates of the current pixel at the current level
    let (mut px, mut py) = (0u64, 0u64);
    for level in 1..=order {
        let shift = order - level;
        let (tx, ty) = (x >> shift, y >> shift);
        let (mut nx, mut ny) = (px << 1, py << 1);
        for child in 0..4u64 {
            visited += 1;
            let (cx, cy) = ((px << 1) | (child & 1), (py << 1) | (child >> 1));
            if (cx, cy) == (tx, ty) {
                (nx, ny) = (cx, cy);
            }
        }
        (px, py) = (nx, ny);
    }
    let index = xyf_to_nest(best_face, px, py, order);
    NestSearch {
        pixel: PixelId::new(index + 1, Scheme::Nested, res).expect("descent stays in range"),
        visited,
    }
}
