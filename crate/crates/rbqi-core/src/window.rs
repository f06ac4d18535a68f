//! Replicate-padded planes and sliding uniform-window sums.
//!
//! The structure index needs windowed moments of one plane and windowed sums
//! of products of two displaced planes. Both are built from the same two-pass
//! sliding sum so that, on identical inputs, the cross term and the variance
//! term come out bit-identical; the exact-zero identity law depends on that.

/// Plane extended by `pad` pixels of edge replication on every side.
/// Coordinates passed to [`Padded::at`] and [`Padded::row`] are in the
/// original image frame and may range over `[-pad, dim + pad)`.
pub(crate) struct Padded {
    pub w: usize,
    pub h: usize,
    pub pad: usize,
    stride: usize,
    data: Vec<f64>,
}

impl Padded {
    pub fn new(plane: &[f64], w: usize, h: usize, pad: usize) -> Self {
        assert_eq!(plane.len(), w * h);
        let stride = w + 2 * pad;
        let mut data = Vec::with_capacity(stride * (h + 2 * pad));
        for py in 0..h + 2 * pad {
            let sy = (py as isize - pad as isize).clamp(0, h as isize - 1) as usize;
            let src = &plane[sy * w..(sy + 1) * w];
            for px in 0..stride {
                let sx = (px as isize - pad as isize).clamp(0, w as isize - 1) as usize;
                data.push(src[sx]);
            }
        }
        Padded {
            w,
            h,
            pad,
            stride,
            data,
        }
    }

    #[cfg(test)]
    pub fn at(&self, x: isize, y: isize) -> f64 {
        let px = (x + self.pad as isize) as usize;
        let py = (y + self.pad as isize) as usize;
        self.data[py * self.stride + px]
    }

    /// Padded row `y` as a slice starting at image x = `-pad`.
    #[inline]
    pub fn row(&self, y: isize) -> &[f64] {
        let py = (y + self.pad as isize) as usize;
        &self.data[py * self.stride..(py + 1) * self.stride]
    }
}

/// Center rectangle `[x0, x1) x [y0, y1)` in image coordinates.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Rect {
    pub x0: usize,
    pub x1: usize,
    pub y0: usize,
    pub y1: usize,
}

impl Rect {
    pub fn full(w: usize, h: usize) -> Self {
        Rect {
            x0: 0,
            x1: w,
            y0: 0,
            y1: h,
        }
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }
}

/// out[i] = sum of vals[i .. i + 2*half + 1], computed with one fresh sum and
/// then a slide. `vals.len()` must equal `out.len() + 2 * half`.
fn sliding_sums(vals: &[f64], half: usize, out: &mut [f64]) {
    let win = 2 * half + 1;
    debug_assert_eq!(vals.len(), out.len() + 2 * half);
    let mut acc = 0.0;
    for v in &vals[..win] {
        acc += v;
    }
    out[0] = acc;
    for i in 1..out.len() {
        acc = (acc + vals[i + win - 1]) - vals[i - 1];
        out[i] = acc;
    }
}

/// Window sums over every center in `rect`. `fill_row(y, buf)` must write the
/// source samples for padded row `y`, x in `[rect.x0 - half, rect.x1 + half)`.
fn window_sums_impl(
    half: usize,
    rect: Rect,
    mut fill_row: impl FnMut(isize, &mut [f64]),
) -> Vec<f64> {
    let w = rect.width();
    let h = rect.height();
    let win = 2 * half + 1;
    let rows = h + 2 * half;

    // Horizontal pass: per-row window sums for every row the vertical window
    // can touch.
    let mut hsums = vec![0.0; rows * w];
    let mut rowbuf = vec![0.0; w + 2 * half];
    for r in 0..rows {
        let y = rect.y0 as isize + r as isize - half as isize;
        fill_row(y, &mut rowbuf);
        sliding_sums(&rowbuf, half, &mut hsums[r * w..(r + 1) * w]);
    }

    // Vertical pass: slide a row-vector accumulator down the horizontal sums.
    let mut out = vec![0.0; w * h];
    let mut acc = vec![0.0; w];
    for r in 0..win {
        let src = &hsums[r * w..(r + 1) * w];
        for (a, s) in acc.iter_mut().zip(src) {
            *a += s;
        }
    }
    out[..w].copy_from_slice(&acc);
    for cy in 1..h {
        let add = &hsums[(cy + win - 1) * w..(cy + win) * w];
        let sub = &hsums[(cy - 1) * w..cy * w];
        for x in 0..w {
            acc[x] = (acc[x] + add[x]) - sub[x];
        }
        out[cy * w..(cy + 1) * w].copy_from_slice(&acc);
    }
    out
}

/// Window sums of a single plane over the centers in `rect`.
/// Requires `p.pad >= half`.
pub(crate) fn window_sums_plane(p: &Padded, half: usize, rect: Rect) -> Vec<f64> {
    let x0 = rect.x0 as isize - half as isize;
    window_sums_impl(half, rect, |y, buf| {
        let row = p.row(y);
        let start = (x0 + p.pad as isize) as usize;
        buf.copy_from_slice(&row[start..start + buf.len()]);
    })
}

/// Window sums of the product plane `a(x, y) * b(x + dx, y + dy)` over the
/// centers in `rect`. Callers must keep `x + dx` within `[-pad, w + pad)` for
/// every sample the window touches (same for y); the structure-index search
/// guarantees that by restricting `rect` to unclamped centers.
pub(crate) fn window_sums_product(
    a: &Padded,
    b: &Padded,
    dx: isize,
    dy: isize,
    half: usize,
    rect: Rect,
) -> Vec<f64> {
    let x0 = rect.x0 as isize - half as isize;
    window_sums_impl(half, rect, |y, buf| {
        let arow = a.row(y);
        let brow = b.row(y + dy);
        let astart = (x0 + a.pad as isize) as usize;
        let bstart = (x0 + dx + b.pad as isize) as usize;
        for (k, v) in buf.iter_mut().enumerate() {
            *v = arow[astart + k] * brow[bstart + k];
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_window_sum(plane: &[f64], w: usize, h: usize, half: usize, cx: usize, cy: usize) -> f64 {
        let mut acc = 0.0;
        for v in -(half as isize)..=half as isize {
            for u in -(half as isize)..=half as isize {
                let x = (cx as isize + u).clamp(0, w as isize - 1) as usize;
                let y = (cy as isize + v).clamp(0, h as isize - 1) as usize;
                acc += plane[y * w + x];
            }
        }
        acc
    }

    #[test]
    fn padding_replicates_edges() {
        let p = Padded::new(&[1.0, 2.0, 3.0, 4.0], 2, 2, 2);
        assert_eq!(p.at(-2, -2), 1.0);
        assert_eq!(p.at(3, -1), 2.0);
        assert_eq!(p.at(-1, 3), 3.0);
        assert_eq!(p.at(3, 3), 4.0);
        assert_eq!(p.at(0, 1), 3.0);
    }

    #[test]
    fn window_sums_match_naive_clamped_sums() {
        // Deterministic pseudo-random plane.
        let (w, h) = (9, 7);
        let mut state = 0x1234_5678_u64;
        let plane: Vec<f64> = (0..w * h)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 40) as f64 / 256.0
            })
            .collect();
        let half = 2;
        let p = Padded::new(&plane, w, h, half);
        let sums = window_sums_plane(&p, half, Rect::full(w, h));
        for cy in 0..h {
            for cx in 0..w {
                let want = naive_window_sum(&plane, w, h, half, cx, cy);
                let got = sums[cy * w + cx];
                assert!(
                    (want - got).abs() <= 1e-9 * want.abs().max(1.0),
                    "({cx},{cy}): {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn product_sums_with_zero_offset_square_the_plane() {
        let (w, h) = (5, 5);
        let plane: Vec<f64> = (0..w * h).map(|i| i as f64).collect();
        let p = Padded::new(&plane, w, h, 1);
        let sq = window_sums_product(&p, &p, 0, 0, 1, Rect::full(w, h));
        let direct: f64 = [6.0, 7.0, 8.0, 11.0, 12.0, 13.0, 16.0, 17.0, 18.0]
            .iter()
            .map(|v| v * v)
            .sum();
        assert!((sq[2 * w + 2] - direct).abs() < 1e-9);
    }
}
