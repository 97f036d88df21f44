use super::{nest_to_xyf, xyf_to_nest, Resolution};

// Direction order: SW, W, NW, N, NE, E, SE, S in face (x, y) terms.
const X_OFFSET: [i64; 8] = [-1, -1, 0, 1, 1, 1, 0, -1];
const Y_OFFSET: [i64; 8] = [0, 1, 1, 1, 0, -1, -1, -1];

// Face reached when leaving `face` towards a neighbouring face block. Rows
// are indexed by `4 + 3·dy + dx` with dx, dy ∈ {-1, 0, 1}; -1 means no face.
const FACE_TABLE: [[i8; 12]; 9] = [
    [8, 9, 10, 11, -1, -1, -1, -1, 10, 11, 8, 9],
    [5, 6, 7, 4, 8, 9, 10, 11, 9, 10, 11, 8],
    [-1, -1, -1, -1, 5, 6, 7, 4, -1, -1, -1, -1],
    [4, 5, 6, 7, 11, 8, 9, 10, 11, 8, 9, 10],
    [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11],
    [1, 2, 3, 0, 0, 1, 2, 3, 5, 6, 7, 4],
    [-1, -1, -1, -1, 7, 4, 5, 6, -1, -1, -1, -1],
    [3, 0, 1, 2, 3, 0, 1, 2, 4, 5, 6, 7],
    [2, 3, 0, 1, -1, -1, -1, -1, 0, 1, 2, 3],
];

// Coordinate flips applied after crossing: bit 0 mirrors x, bit 1 mirrors y,
// bit 2 swaps x and y. Indexed by block row and face row (north/equator/south).
const SWAP_TABLE: [[u8; 3]; 9] = [
    [0, 0, 3],
    [0, 0, 6],
    [0, 0, 0],
    [0, 0, 5],
    [0, 0, 0],
    [5, 0, 0],
    [0, 0, 0],
    [6, 0, 0],
    [3, 0, 0],
];

/// 0-based nested indices of the neighbours of `p0`. Seven are returned for
/// the pixels touching a face corner where only three faces meet.
pub(super) fn neighbours_nested(p0: u64, res: Resolution) -> Vec<u64> {
    let order = res.order();
    let ns = res.nside() as i64;
    let (face, x, y) = nest_to_xyf(p0, order);
    let (x, y) = (x as i64, y as i64);
    let mut out = Vec::with_capacity(8);
    for m in 0..8 {
        let mut nx = x + X_OFFSET[m];
        let mut ny = y + Y_OFFSET[m];
        if (0..ns).contains(&nx) && (0..ns).contains(&ny) {
            out.push(xyf_to_nest(face, nx as u64, ny as u64, order));
            continue;
        }
        let mut block = 4i64;
        if nx < 0 {
            nx += ns;
            block -= 1;
        } else if nx >= ns {
            nx -= ns;
            block += 1;
        }
        if ny < 0 {
            ny += ns;
            block -= 3;
        } else if ny >= ns {
            ny -= ns;
            block += 3;
        }
        let f = FACE_TABLE[block as usize][face];
        if f < 0 {
            continue;
        }
        let bits = SWAP_TABLE[block as usize][face >> 2];
        if bits & 1 != 0 {
            nx = ns - nx - 1;
        }
        if bits & 2 != 0 {
            ny = ns - ny - 1;
        }
        if bits & 4 != 0 {
            std::mem::swap(&mut nx, &mut ny);
        }
        let n = xyf_to_nest(f as usize, nx as u64, ny as u64, order);
        // At nside = 1 different directions can land on the same face.
        if !out.contains(&n) && n != p0 {
            out.push(n);
        }
    }
    out
}
