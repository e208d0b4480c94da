//! Slow, obviously-correct reference computations.
//!
//! Nothing here depends on `tactile-core`: inputs are plain numbers so the
//! checks stay independent of the code under test.

use rand::Rng;

/// Axis-aligned box `[x, y, w, h]` in normalized coordinates.
pub type PlainBox = [f64; 4];

/// Pixel grid resolution used by [`raster_cell_overlaps`].
pub const RASTER: usize = 1000;

/// Rasterizes `b` on a `RASTER x RASTER` pixel grid (a pixel is inside when
/// its center is) and returns, per cell of a `rows x cols` grid in row-major
/// order, `pixels(b ∩ cell) / min(pixels(b), pixels(cell))`.
pub fn raster_cell_overlaps(b: PlainBox, rows: usize, cols: usize) -> Vec<f64> {
    let inside = |lo: f64, hi: f64, p: usize| {
        let c = (p as f64 + 0.5) / RASTER as f64;
        c >= lo && c < hi
    };
    let mut per_cell = vec![0u64; rows * cols];
    let mut box_pixels = 0u64;
    for py in 0..RASTER {
        if !inside(b[1], b[1] + b[3], py) {
            continue;
        }
        let row = py * rows / RASTER;
        for px in 0..RASTER {
            if inside(b[0], b[0] + b[2], px) {
                box_pixels += 1;
                per_cell[row * cols + px * cols / RASTER] += 1;
            }
        }
    }
    let cell_pixels = |i: usize| {
        let (r, c) = (i / cols, i % cols);
        let ys = (0..RASTER).filter(|&p| p * rows / RASTER == r).count() as u64;
        let xs = (0..RASTER).filter(|&p| p * cols / RASTER == c).count() as u64;
        ys * xs
    };
    per_cell
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let denom = box_pixels.min(cell_pixels(i));
            if denom == 0 {
                0.0
            } else {
                n as f64 / denom as f64
            }
        })
        .collect()
}

/// Random box whose edges lie on the `RASTER` lattice, so pixel counting is
/// exact.
pub fn lattice_box<R: Rng>(rng: &mut R) -> PlainBox {
    let n = RASTER as u32;
    let x0 = rng.gen_range(0..n);
    let x1 = rng.gen_range(x0 + 1..=n);
    let y0 = rng.gen_range(0..n);
    let y1 = rng.gen_range(y0 + 1..=n);
    let s = RASTER as f64;
    [
        x0 as f64 / s,
        y0 as f64 / s,
        (x1 - x0) as f64 / s,
        (y1 - y0) as f64 / s,
    ]
}

/// Random box anywhere in the unit square, occasionally degenerate-thin.
pub fn any_box<R: Rng>(rng: &mut R) -> PlainBox {
    let tiny = rng.gen_bool(0.05);
    let extent = |rng: &mut R| {
        if tiny {
            rng.gen_range(1e-9..1e-4)
        } else {
            rng.gen_range(1e-3..1.0)
        }
    };
    let w: f64 = extent(rng);
    let h: f64 = extent(rng);
    let x = rng.gen_range(0.0..=(1.0 - w));
    let y = rng.gen_range(0.0..=(1.0 - h));
    [x, y, w, h]
}

/// Cells a box geometrically intersects with positive area.
pub fn intersecting_cells(b: PlainBox, rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let (cx0, cx1) = (c as f64 / cols as f64, (c + 1) as f64 / cols as f64);
            let (cy0, cy1) = (r as f64 / rows as f64, (r + 1) as f64 / rows as f64);
            let iw = (b[0] + b[2]).min(cx1) - b[0].max(cx0);
            let ih = (b[1] + b[3]).min(cy1) - b[1].max(cy0);
            if iw > 0.0 && ih > 0.0 {
                out.push((r, c));
            }
        }
    }
    out
}

/// Exhaustive kNN: repeatedly extracts the closest remaining exemplar
/// (ties to the smaller label), then majority vote; vote ties go to the
/// label with the closest member, then to the smaller label.
pub fn exhaustive_knn(query: &[f64], exemplars: &[(Vec<f64>, String)], k: usize) -> String {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dist = |a: &[f64], b: &[f64]| {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        1.0 - dot / (norm(a) * norm(b))
    };
    let mut remaining: Vec<(f64, &str)> = exemplars
        .iter()
        .map(|(v, l)| (dist(query, v), l.as_str()))
        .collect();
    let mut chosen: Vec<(f64, &str)> = Vec::new();
    for _ in 0..k {
        let mut best = 0;
        for i in 1..remaining.len() {
            let (d, l) = remaining[i];
            let (bd, bl) = remaining[best];
            if d < bd || (d == bd && l < bl) {
                best = i;
            }
        }
        chosen.push(remaining.remove(best));
    }
    let mut labels: Vec<&str> = chosen.iter().map(|(_, l)| *l).collect();
    labels.sort();
    labels.dedup();
    let score = |l: &str| {
        let votes = chosen.iter().filter(|(_, m)| *m == l).count();
        let nearest = chosen
            .iter()
            .filter(|(_, m)| *m == l)
            .map(|(d, _)| *d)
            .fold(f64::INFINITY, f64::min);
        (votes, nearest)
    };
    let mut winner = labels[0];
    for &l in &labels[1..] {
        let (v, d) = score(l);
        let (wv, wd) = score(winner);
        if v > wv || (v == wv && d < wd) {
            winner = l;
        }
    }
    winner.to_string()
}

/// One annotated object of an evaluation micro-dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Obj {
    pub image: u64,
    pub class: usize,
    pub conf: f64,
    pub bbox: PlainBox,
}

pub fn plain_iou(a: PlainBox, b: PlainBox) -> f64 {
    let ix = ((a[0] + a[2]).min(b[0] + b[2]) - a[0].max(b[0])).max(0.0);
    let iy = ((a[1] + a[3]).min(b[1] + b[3]) - a[1].max(b[1])).max(0.0);
    let inter = ix * iy;
    if inter == 0.0 {
        0.0
    } else {
        inter / (a[2] * a[3] + b[2] * b[3] - inter)
    }
}

/// Reference mAP. Predictions are listed image by image in input order.
/// Matching is greedy by confidence per image and class; each class's PR
/// curve is built by evaluating every rank prefix from scratch, and AP sums
/// recall increments times the best precision at any deeper prefix.
pub fn brute_force_map(gts: &[Obj], preds: &[Obj], iou_thr: f64) -> Option<f64> {
    let mut classes: Vec<usize> = gts.iter().chain(preds).map(|o| o.class).collect();
    classes.sort();
    classes.dedup();

    let mut aps = Vec::new();
    for &class in &classes {
        let n_gt = gts.iter().filter(|g| g.class == class).count();

        // TP flag per prediction (by position in `preds`)
        let mut tp = vec![false; preds.len()];
        let mut images: Vec<u64> = preds.iter().map(|p| p.image).collect();
        images.dedup();
        for image in images {
            let mut cand: Vec<usize> = (0..preds.len())
                .filter(|&i| preds[i].image == image && preds[i].class == class)
                .collect();
            // stable: equal confidences keep input order
            cand.sort_by(|&a, &b| preds[b].conf.partial_cmp(&preds[a].conf).unwrap());
            let targets: Vec<&Obj> = gts
                .iter()
                .filter(|g| g.image == image && g.class == class)
                .collect();
            let mut taken = vec![false; targets.len()];
            for i in cand {
                let mut best: Option<(usize, f64)> = None;
                for (j, g) in targets.iter().enumerate() {
                    let v = plain_iou(preds[i].bbox, g.bbox);
                    if !taken[j] && v >= iou_thr && best.is_none_or(|(_, bv)| v > bv) {
                        best = Some((j, v));
                    }
                }
                if let Some((j, _)) = best {
                    taken[j] = true;
                    tp[i] = true;
                }
            }
        }

        let mut ranked: Vec<usize> = (0..preds.len())
            .filter(|&i| preds[i].class == class)
            .collect();
        ranked.sort_by(|&a, &b| preds[b].conf.partial_cmp(&preds[a].conf).unwrap());
        if n_gt == 0 {
            if !ranked.is_empty() {
                aps.push(0.0);
            }
            continue;
        }

        let mut points = vec![(0.0f64, 1.0f64)];
        for n in 1..=ranked.len() {
            let hits = ranked[..n].iter().filter(|&&i| tp[i]).count();
            points.push((hits as f64 / n_gt as f64, hits as f64 / n as f64));
        }
        let mut ap = 0.0;
        for n in 1..points.len() {
            let dr = points[n].0 - points[n - 1].0;
            if dr > 0.0 {
                let best = points[n..].iter().map(|p| p.1).fold(0.0, f64::max);
                ap += dr * best;
            }
        }
        aps.push(ap);
    }
    if aps.is_empty() {
        None
    } else {
        Some(aps.iter().sum::<f64>() / aps.len() as f64)
    }
}

/// Random evaluation micro-dataset: up to `max_classes` classes, up to
/// `max_images` images with up to `max_boxes` ground-truth boxes each.
/// Predictions are jittered copies of some ground truth plus strays, with
/// confidences on a coarse grid so ties occur.
pub fn micro_dataset<R: Rng>(
    rng: &mut R,
    max_classes: usize,
    max_images: usize,
    max_boxes: usize,
) -> (Vec<Obj>, Vec<Obj>, u64) {
    let n_classes = rng.gen_range(1..=max_classes);
    let n_images = rng.gen_range(1..=max_images) as u64;
    let mut gts = Vec::new();
    let mut preds = Vec::new();
    for image in 1..=n_images {
        let n = rng.gen_range(0..=max_boxes);
        let mut image_gts = Vec::new();
        for _ in 0..n {
            let w = rng.gen_range(0.05..0.5);
            let h = rng.gen_range(0.05..0.5);
            image_gts.push(Obj {
                image,
                class: rng.gen_range(0..n_classes),
                conf: 1.0,
                bbox: [
                    rng.gen_range(0.0..1.0 - w),
                    rng.gen_range(0.0..1.0 - h),
                    w,
                    h,
                ],
            });
        }
        let mut image_preds = Vec::new();
        for g in &image_gts {
            for _ in 0..rng.gen_range(0..=2) {
                let j = |rng: &mut R, v: f64| v + rng.gen_range(-0.05..0.05);
                let w = j(rng, g.bbox[2]).clamp(0.01, 0.6);
                let h = j(rng, g.bbox[3]).clamp(0.01, 0.6);
                let x = j(rng, g.bbox[0]).clamp(0.0, 1.0 - w);
                let y = j(rng, g.bbox[1]).clamp(0.0, 1.0 - h);
                let class = if rng.gen_bool(0.85) {
                    g.class
                } else {
                    rng.gen_range(0..n_classes)
                };
                image_preds.push(Obj {
                    image,
                    class,
                    conf: rng.gen_range(1..=10) as f64 / 10.0,
                    bbox: [x, y, w, h],
                });
            }
        }
        for _ in 0..rng.gen_range(0..=2) {
            let w = rng.gen_range(0.05..0.4);
            let h = rng.gen_range(0.05..0.4);
            image_preds.push(Obj {
                image,
                class: rng.gen_range(0..n_classes),
                conf: rng.gen_range(1..=10) as f64 / 10.0,
                bbox: [
                    rng.gen_range(0.0..1.0 - w),
                    rng.gen_range(0.0..1.0 - h),
                    w,
                    h,
                ],
            });
        }
        image_preds.truncate(max_boxes);
        gts.extend(image_gts);
        preds.extend(image_preds);
    }
    (gts, preds, n_images)
}
