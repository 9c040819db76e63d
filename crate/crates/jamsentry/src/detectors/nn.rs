//! Minimal dense/conv primitives for the two detector heads. Everything is
//! f64, single-threaded, and iterates in a fixed order so training is
//! bit-reproducible for a given seed.

/// Dot product with four independent accumulators (fixed summation order).
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n4 = a.len() / 4 * 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    let mut i = 0;
    while i < n4 {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
        i += 4;
    }
    let mut rest = 0.0;
    for k in n4..a.len() {
        rest += a[k] * b[k];
    }
    (s0 + s1) + (s2 + s3) + rest
}

/// y += a * x
pub fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Logistic sigmoid.
pub fn logsig(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// 3x3 convolution with zero padding 1 ("same"), NCHW layout.
/// `weights` is [oc][ic][3][3] flattened; `out` is [oc][h][w], overwritten.
pub fn conv3x3_same(
    input: &[f64],
    in_ch: usize,
    h: usize,
    w: usize,
    weights: &[f64],
    bias: &[f64],
    out_ch: usize,
    out: &mut [f64],
) {
    debug_assert_eq!(input.len(), in_ch * h * w);
    debug_assert_eq!(weights.len(), out_ch * in_ch * 9);
    debug_assert_eq!(out.len(), out_ch * h * w);
    for oc in 0..out_ch {
        let plane = &mut out[oc * h * w..(oc + 1) * h * w];
        plane.fill(bias[oc]);
        for ic in 0..in_ch {
            let src = &input[ic * h * w..(ic + 1) * h * w];
            let wbase = (oc * in_ch + ic) * 9;
            for ky in 0..3usize {
                for kx in 0..3usize {
                    let wv = weights[wbase + ky * 3 + kx];
                    if wv == 0.0 {
                        continue;
                    }
                    shifted_axpy(plane, src, h, w, ky as isize - 1, kx as isize - 1, wv);
                }
            }
        }
    }
}

/// plane[y][x] += wv * src[y+dy][x+dx] over the in-bounds region.
fn shifted_axpy(plane: &mut [f64], src: &[f64], h: usize, w: usize, dy: isize, dx: isize, wv: f64) {
    let y0 = (-dy).max(0) as usize;
    let y1 = (h as isize - dy).min(h as isize) as usize;
    let x0 = (-dx).max(0) as usize;
    let x1 = (w as isize - dx).min(w as isize) as usize;
    for y in y0..y1 {
        let sy = (y as isize + dy) as usize;
        let drow = &mut plane[y * w + x0..y * w + x1];
        let srow = &src[sy * w + (x0 as isize + dx) as usize..sy * w + (x1 as isize + dx) as usize];
        axpy(drow, wv, srow);
    }
}

/// Gradient pieces of `conv3x3_same`.
///
/// d_input (same shape as input) is overwritten; d_weights/d_bias are
/// accumulated into.
#[allow(clippy::too_many_arguments)]
pub fn conv3x3_same_backward(
    input: &[f64],
    in_ch: usize,
    h: usize,
    w: usize,
    weights: &[f64],
    out_ch: usize,
    d_out: &[f64],
    d_input: &mut [f64],
    d_weights: &mut [f64],
    d_bias: &mut [f64],
) {
    d_input.fill(0.0);
    for oc in 0..out_ch {
        let dplane = &d_out[oc * h * w..(oc + 1) * h * w];
        d_bias[oc] += dplane.iter().sum::<f64>();
        for ic in 0..in_ch {
            let src = &input[ic * h * w..(ic + 1) * h * w];
            let din = &mut d_input[ic * h * w..(ic + 1) * h * w];
            let wbase = (oc * in_ch + ic) * 9;
            for ky in 0..3usize {
                for kx in 0..3usize {
                    let dy = ky as isize - 1;
                    let dx = kx as isize - 1;
                    // weight gradient: correlate d_out with the shifted input
                    let y0 = (-dy).max(0) as usize;
                    let y1 = (h as isize - dy).min(h as isize) as usize;
                    let x0 = (-dx).max(0) as usize;
                    let x1 = (w as isize - dx).min(w as isize) as usize;
                    let mut acc = 0.0;
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let drow = &dplane[y * w + x0..y * w + x1];
                        let srow = &src[sy * w + (x0 as isize + dx) as usize
                            ..sy * w + (x1 as isize + dx) as usize];
                        acc += dot(drow, srow);
                    }
                    d_weights[wbase + ky * 3 + kx] += acc;
                    // input gradient: transpose pass with the mirrored shift
                    let wv = weights[wbase + ky * 3 + kx];
                    if wv != 0.0 {
                        shifted_axpy(din, dplane, h, w, -dy, -dx, wv);
                    }
                }
            }
        }
    }
}

/// 2x2 max pool with stride 2 (floor semantics: odd trailing rows/columns
/// are dropped). Records the argmax flat index per output cell for the
/// backward pass.
pub fn maxpool2(
    input: &[f64],
    ch: usize,
    h: usize,
    w: usize,
    out: &mut [f64],
    argmax: &mut [usize],
) -> (usize, usize) {
    let oh = h / 2;
    let ow = w / 2;
    debug_assert!(out.len() >= ch * oh * ow);
    for c in 0..ch {
        let plane = &input[c * h * w..(c + 1) * h * w];
        for y in 0..oh {
            for x in 0..ow {
                let mut best_idx = (2 * y) * w + 2 * x;
                let mut best = plane[best_idx];
                for (dy, dx) in [(0usize, 1usize), (1, 0), (1, 1)] {
                    let idx = (2 * y + dy) * w + 2 * x + dx;
                    if plane[idx] > best {
                        best = plane[idx];
                        best_idx = idx;
                    }
                }
                out[c * oh * ow + y * ow + x] = best;
                argmax[c * oh * ow + y * ow + x] = c * h * w + best_idx;
            }
        }
    }
    (oh, ow)
}

pub fn maxpool2_backward(d_out: &[f64], argmax: &[usize], d_input: &mut [f64]) {
    d_input.fill(0.0);
    for (g, &idx) in d_out.iter().zip(argmax) {
        d_input[idx] += g;
    }
}

pub fn relu_inplace(v: &mut [f64]) {
    for x in v.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// d_pre = d_post where activation was positive, else 0.
pub fn relu_backward_inplace(d: &mut [f64], activated: &[f64]) {
    for (g, &a) in d.iter_mut().zip(activated) {
        if a <= 0.0 {
            *g = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..103).map(|k| k as f64 * 0.25 - 3.0).collect();
        let b: Vec<f64> = (0..103).map(|k| (k as f64).sin()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-9);
    }

    #[test]
    fn conv_identity_kernel_passes_through() {
        let (h, w) = (5, 4);
        let input: Vec<f64> = (0..h * w).map(|k| k as f64).collect();
        let mut weights = vec![0.0; 9];
        weights[4] = 1.0; // center tap
        let mut out = vec![0.0; h * w];
        conv3x3_same(&input, 1, h, w, &weights, &[0.0], 1, &mut out);
        assert_eq!(out, input);
    }

    #[test]
    fn conv_counts_neighbors_with_zero_padding() {
        let (h, w) = (3, 3);
        let input = vec![1.0; 9];
        let weights = vec![1.0; 9];
        let mut out = vec![0.0; 9];
        conv3x3_same(&input, 1, h, w, &weights, &[0.0], 1, &mut out);
        // corner sees 4 ones, edge 6, center 9
        assert_eq!(out[0], 4.0);
        assert_eq!(out[1], 6.0);
        assert_eq!(out[4], 9.0);
    }

    #[test]
    fn maxpool_picks_max_and_routes_gradient() {
        let input = vec![1.0, 5.0, 2.0, 0.0, 3.0, -1.0, 4.0, 2.0, 9.0, 9.0, 9.0, 9.0];
        // 1 channel, 3x4 -> output 1x2 (last row dropped)
        let mut out = vec![0.0; 2];
        let mut arg = vec![0usize; 2];
        let (oh, ow) = maxpool2(&input, 1, 3, 4, &mut out, &mut arg);
        assert_eq!((oh, ow), (1, 2));
        assert_eq!(out, vec![5.0, 4.0]);
        let mut din = vec![0.0; 12];
        maxpool2_backward(&[1.0, 2.0], &arg, &mut din);
        assert_eq!(din[1], 1.0);
        assert_eq!(din[6], 2.0);
        assert_eq!(din.iter().sum::<f64>(), 3.0);
    }

    #[test]
    fn softmax_sums_to_one_and_shifts() {
        let p = softmax(&[0.0, 0.0]);
        assert_eq!(p, vec![0.5, 0.5]);
        let a = softmax(&[1.0, 3.0]);
        let b = softmax(&[101.0, 103.0]);
        assert!((a[0] - b[0]).abs() < 1e-12);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
