//! Bilinear resampling of binary layers into real-valued layers.

use super::{BinaryLayer, RealLayer, SemanticsError};

/// Resizes a binary layer to `out_w` x `out_h` with bilinear filtering.
///
/// Sample positions use the half-pixel-center convention: output pixel j
/// reads source coordinate (j + 0.5) * in/out - 0.5, clamped to the valid
/// range, so a same-size resize reproduces the input exactly and edges
/// clamp instead of wrapping. Output values stay in [0, 1].
pub fn bilinear_resize(
    layer: &BinaryLayer,
    out_w: usize,
    out_h: usize,
) -> Result<RealLayer, SemanticsError> {
    if out_w == 0 || out_h == 0 {
        return Err(SemanticsError::EmptyMap {
            width: out_w,
            height: out_h,
        });
    }
    let (in_w, in_h) = (layer.width(), layer.height());
    let sample = |row: usize, col: usize| -> f64 {
        if layer.get(row, col) {
            1.0
        } else {
            0.0
        }
    };
    let mut values = Vec::with_capacity(out_w * out_h);
    for i in 0..out_h {
        let y = ((i as f64 + 0.5) * in_h as f64 / out_h as f64 - 0.5)
            .clamp(0.0, (in_h - 1) as f64);
        let y0 = y.floor() as usize;
        let y1 = (y0 + 1).min(in_h - 1);
        let fy = y - y0 as f64;
        for j in 0..out_w {
            let x = ((j as f64 + 0.5) * in_w as f64 / out_w as f64 - 0.5)
                .clamp(0.0, (in_w - 1) as f64);
            let x0 = x.floor() as usize;
            let x1 = (x0 + 1).min(in_w - 1);
            let fx = x - x0 as f64;
            let top = sample(y0, x0) * (1.0 - fx) + sample(y0, x1) * fx;
            let bottom = sample(y1, x0) * (1.0 - fx) + sample(y1, x1) * fx;
            values.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    RealLayer::new(out_w, out_h, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::ClassId;
    use proptest::prelude::*;

    fn layer(w: usize, h: usize, mask: Vec<bool>) -> BinaryLayer {
        BinaryLayer::new(w, h, ClassId::PEDESTRIAN, mask).unwrap()
    }

    #[test]
    fn checkerboard_2x2_to_4x4_matches_hand_interpolation() {
        // Input [[0,1],[1,0]]. Half-pixel sample coordinates for a 2->4
        // upscale are [0, 0.25, 0.75, 1] after edge clamping, and the
        // bilinear surface through the four corners is x + y - 2xy.
        // Evaluating by hand gives the table below.
        let l = layer(2, 2, vec![false, true, true, false]);
        let out = bilinear_resize(&l, 4, 4).unwrap();
        let want = [
            [0.0, 0.25, 0.75, 1.0],
            [0.25, 0.375, 0.625, 0.75],
            [0.75, 0.625, 0.375, 0.25],
            [1.0, 0.75, 0.25, 0.0],
        ];
        for (i, row) in want.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert!(
                    (out.get(i, j) - v).abs() < 1e-12,
                    "({i},{j}): got {}, want {v}",
                    out.get(i, j)
                );
            }
        }
    }

    #[test]
    fn same_size_resize_is_identity() {
        let mask = vec![true, false, false, true, true, false];
        let l = layer(3, 2, mask.clone());
        let out = bilinear_resize(&l, 3, 2).unwrap();
        for (i, &m) in mask.iter().enumerate() {
            let v = out.values()[i];
            assert_eq!(v, if m { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn constant_input_stays_constant_when_downscaled() {
        let l = layer(4, 4, vec![true; 16]);
        let out = bilinear_resize(&l, 2, 2).unwrap();
        assert!(out.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn zero_output_dims_rejected() {
        let l = layer(2, 2, vec![false; 4]);
        assert!(bilinear_resize(&l, 0, 2).is_err());
        assert!(bilinear_resize(&l, 2, 0).is_err());
    }

    proptest! {
        #[test]
        fn output_bounded_by_input_range(
            w in 1usize..8,
            h in 1usize..8,
            ow in 1usize..16,
            oh in 1usize..16,
            bits in proptest::collection::vec(any::<bool>(), 64),
        ) {
            let mask: Vec<bool> = bits.iter().copied().take(w * h).collect();
            let l = layer(w, h, mask.clone());
            let out = bilinear_resize(&l, ow, oh).unwrap();
            let lo = if mask.iter().all(|&b| b) { 1.0 } else { 0.0 };
            let hi = if mask.iter().any(|&b| b) { 1.0 } else { 0.0 };
            for &v in out.values() {
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }
}
