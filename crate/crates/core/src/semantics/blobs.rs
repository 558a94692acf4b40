//! Connected-component extraction over binary layers and the surface
//! probe used to split pedestrians between road and sidewalk.

use super::{BinaryLayer, ClassId, SemanticMap};

/// One 4-connected component of set pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelBlob {
    pub class: ClassId,
    /// Member pixels as (row, col), in row-major scan order.
    pub pixels: Vec<(usize, usize)>,
    /// Tight bounds: (top, left, bottom, right), all inclusive.
    pub bbox: (usize, usize, usize, usize),
}

impl PixelBlob {
    pub fn area(&self) -> usize {
        self.pixels.len()
    }

    /// Inclusive bbox height in pixels.
    pub fn bbox_height(&self) -> usize {
        self.bbox.2 - self.bbox.0 + 1
    }

    pub fn bbox_width(&self) -> usize {
        self.bbox.3 - self.bbox.1 + 1
    }
}

/// Finds 4-connected components of the set pixels, drops those smaller
/// than `min_blob_area`, and returns the rest ordered by bounding-box
/// top-left corner (top first, then left).
pub fn connected_components(layer: &BinaryLayer, min_blob_area: usize) -> Vec<PixelBlob> {
    let (w, h) = (layer.width(), layer.height());
    let mask = layer.mask();
    let mut visited = vec![false; mask.len()];
    let mut blobs = Vec::new();
    let mut queue: Vec<usize> = Vec::new();

    for start in 0..mask.len() {
        if !mask[start] || visited[start] {
            continue;
        }
        visited[start] = true;
        queue.clear();
        queue.push(start);
        let mut pixels = Vec::new();
        let (mut top, mut left, mut bottom, mut right) = (h, w, 0usize, 0usize);
        while let Some(idx) = queue.pop() {
            let (row, col) = (idx / w, idx % w);
            pixels.push((row, col));
            top = top.min(row);
            bottom = bottom.max(row);
            left = left.min(col);
            right = right.max(col);
            // 4-neighborhood, clipped at the borders.
            if row > 0 && mask[idx - w] && !visited[idx - w] {
                visited[idx - w] = true;
                queue.push(idx - w);
            }
            if row + 1 < h && mask[idx + w] && !visited[idx + w] {
                visited[idx + w] = true;
                queue.push(idx + w);
            }
            if col > 0 && mask[idx - 1] && !visited[idx - 1] {
                visited[idx - 1] = true;
                queue.push(idx - 1);
            }
            if col + 1 < w && mask[idx + 1] && !visited[idx + 1] {
                visited[idx + 1] = true;
                queue.push(idx + 1);
            }
        }
        if pixels.len() >= min_blob_area {
            pixels.sort_unstable();
            blobs.push(PixelBlob {
                class: layer.class(),
                pixels,
                bbox: (top, left, bottom, right),
            });
        }
    }
    blobs.sort_by_key(|b| (b.bbox.0, b.bbox.1));
    blobs
}

/// Samples the classes of up to `n` pixels in the row immediately below the
/// blob, centered under its horizontal extent and clipped to the image.
/// Returns an empty list for blobs touching the bottom border.
pub fn bottom_border_neighbors(blob: &PixelBlob, map: &SemanticMap, n: usize) -> Vec<ClassId> {
    let (_, left, bottom, right) = blob.bbox;
    let row = bottom + 1;
    if row >= map.height() || n == 0 {
        return Vec::new();
    }
    let width = right - left + 1;
    let take = n.min(width);
    let start = left + (width - take) / 2;
    (start..start + take).map(|col| map.get(row, col)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::{extract_layer, SemanticMap};
    use proptest::prelude::*;

    fn layer_from_str(rows: &[&str]) -> BinaryLayer {
        let h = rows.len();
        let w = rows[0].len();
        let mask = rows
            .iter()
            .flat_map(|r| r.chars().map(|c| c == '#'))
            .collect();
        BinaryLayer::new(w, h, ClassId::PEDESTRIAN, mask).unwrap()
    }

    #[test]
    fn plus_shape_is_one_blob_with_tight_bbox() {
        // 5-pixel plus: area 5, bbox rows 0..=2, cols 0..=2.
        let layer = layer_from_str(&[".#.", "###", ".#."]);
        let blobs = connected_components(&layer, 1);
        assert_eq!(blobs.len(), 1);
        assert_eq!(blobs[0].area(), 5);
        assert_eq!(blobs[0].bbox, (0, 0, 2, 2));
    }

    #[test]
    fn diagonal_pixels_are_not_connected() {
        // Two diagonal pixels share only a corner; 4-connectivity keeps
        // them separate, and min area 2 then drops both.
        let layer = layer_from_str(&["#.", ".#"]);
        assert_eq!(connected_components(&layer, 1).len(), 2);
        assert_eq!(connected_components(&layer, 2).len(), 0);
    }

    #[test]
    fn donut_interior_hole_is_not_a_member() {
        let layer = layer_from_str(&["###", "#.#", "###"]);
        let blobs = connected_components(&layer, 1);
        assert_eq!(blobs.len(), 1);
        assert_eq!(blobs[0].area(), 8);
        assert!(!blobs[0].pixels.contains(&(1, 1)));
    }

    #[test]
    fn blobs_ordered_by_bbox_top_left() {
        let layer = layer_from_str(&["..#", "...", "#..", "#.."]);
        let blobs = connected_components(&layer, 1);
        assert_eq!(blobs.len(), 2);
        assert_eq!(blobs[0].bbox.0, 0); // top-most first
        assert_eq!(blobs[1].bbox, (2, 0, 3, 0));
    }

    #[test]
    fn min_area_filter_applies() {
        let layer = layer_from_str(&["##..", "....", "...#"]);
        let blobs = connected_components(&layer, 2);
        assert_eq!(blobs.len(), 1);
        assert_eq!(blobs[0].area(), 2);
    }

    #[test]
    fn border_sample_caps_at_blob_width() {
        // 4 px wide blob one row above road: all 4 below-classes returned
        // even though n = 10.
        let mut map = SemanticMap::filled(6, 3, ClassId::ROAD);
        for col in 1..5 {
            map.set(0, col, ClassId::PEDESTRIAN);
        }
        let layer = extract_layer(&map, ClassId::PEDESTRIAN);
        let blobs = connected_components(&layer, 1);
        let classes = bottom_border_neighbors(&blobs[0], &map, 10);
        assert_eq!(classes.len(), 4);
        assert!(classes.iter().all(|&c| c == ClassId::ROAD));
    }

    #[test]
    fn border_sample_is_centered_when_blob_is_wider_than_n() {
        // Blob spans cols 0..=5; sampling n=2 must read the centered
        // columns 2 and 3 of the row below.
        let mut map = SemanticMap::filled(6, 2, ClassId::SIDEWALK);
        for col in 0..6 {
            map.set(0, col, ClassId::PEDESTRIAN);
        }
        map.set(1, 2, ClassId::ROAD);
        map.set(1, 3, ClassId::ZEBRA_CROSSING);
        let layer = extract_layer(&map, ClassId::PEDESTRIAN);
        let blobs = connected_components(&layer, 1);
        let classes = bottom_border_neighbors(&blobs[0], &map, 2);
        assert_eq!(classes, vec![ClassId::ROAD, ClassId::ZEBRA_CROSSING]);
    }

    #[test]
    fn bottom_edge_blob_samples_nothing() {
        let mut map = SemanticMap::filled(4, 2, ClassId::ROAD);
        map.set(1, 1, ClassId::PEDESTRIAN);
        let layer = extract_layer(&map, ClassId::PEDESTRIAN);
        let blobs = connected_components(&layer, 1);
        assert!(bottom_border_neighbors(&blobs[0], &map, 10).is_empty());
    }

    /// Reference component labeling: repeated full-grid label propagation
    /// until fixpoint. Slow but independent of the BFS implementation.
    fn oracle_components(mask: &[bool], w: usize, h: usize) -> Vec<Vec<(usize, usize)>> {
        let mut labels: Vec<usize> = (0..mask.len()).collect();
        let mut changed = true;
        while changed {
            changed = false;
            for row in 0..h {
                for col in 0..w {
                    let idx = row * w + col;
                    if !mask[idx] {
                        continue;
                    }
                    let mut best = labels[idx];
                    if row > 0 && mask[idx - w] {
                        best = best.min(labels[idx - w]);
                    }
                    if row + 1 < h && mask[idx + w] {
                        best = best.min(labels[idx + w]);
                    }
                    if col > 0 && mask[idx - 1] {
                        best = best.min(labels[idx - 1]);
                    }
                    if col + 1 < w && mask[idx + 1] {
                        best = best.min(labels[idx + 1]);
                    }
                    if best < labels[idx] {
                        labels[idx] = best;
                        changed = true;
                    }
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<(usize, usize)>> =
            std::collections::BTreeMap::new();
        for idx in 0..mask.len() {
            if mask[idx] {
                groups
                    .entry(labels[idx])
                    .or_default()
                    .push((idx / w, idx % w));
            }
        }
        groups.into_values().collect()
    }

    proptest! {
        #[test]
        fn components_match_label_propagation_oracle(
            w in 1usize..12,
            h in 1usize..12,
            bits in proptest::collection::vec(any::<bool>(), 0..144),
        ) {
            let mut mask = vec![false; w * h];
            for (i, m) in mask.iter_mut().enumerate() {
                *m = *bits.get(i).unwrap_or(&false);
            }
            let layer = BinaryLayer::new(w, h, ClassId::PEDESTRIAN, mask.clone()).unwrap();
            let got = connected_components(&layer, 1);
            let mut got_sets: Vec<Vec<(usize, usize)>> =
                got.iter().map(|b| b.pixels.clone()).collect();
            got_sets.sort();
            let mut want = oracle_components(&mask, w, h);
            for g in want.iter_mut() {
                g.sort_unstable();
            }
            want.sort();
            prop_assert_eq!(got_sets, want);

            // Union of blobs equals the set pixels; blobs are disjoint.
            let mut seen = vec![false; w * h];
            for b in &got {
                for &(r, c) in &b.pixels {
                    prop_assert!(!seen[r * w + c], "pixel in two blobs");
                    seen[r * w + c] = true;
                    prop_assert!(mask[r * w + c]);
                }
                // Tight bbox: every edge row/col actually contains a pixel.
                let (top, left, bottom, right) = b.bbox;
                prop_assert!(b.pixels.iter().any(|&(r, _)| r == top));
                prop_assert!(b.pixels.iter().any(|&(r, _)| r == bottom));
                prop_assert!(b.pixels.iter().any(|&(_, c)| c == left));
                prop_assert!(b.pixels.iter().any(|&(_, c)| c == right));
            }
            prop_assert_eq!(
                seen.iter().filter(|&&s| s).count(),
                mask.iter().filter(|&&s| s).count()
            );
        }
    }
}
