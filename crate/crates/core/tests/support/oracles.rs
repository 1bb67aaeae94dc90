//! Brute-force reference implementations used only by tests. They are written
//! against the stated rules, not against the library code paths.

#![allow(dead_code)]

use roifuse_core::{ClassId, Detection, GroundTruthBox};

/// Overlap computed from scratch (no `BBox` helpers).
pub fn iou_oracle(a: &Detection, b: &Detection) -> f64 {
    let (a, b) = (&a.bbox, &b.bbox);
    let w = (a.x1.min(b.x1) - a.x0.max(b.x0)).max(0.0);
    let h = (a.y1.min(b.y1) - a.y0.max(b.y0)).max(0.0);
    let inter = w * h;
    if inter == 0.0 {
        return 0.0;
    }
    let area = |x: &roifuse_core::BBox| (x.x1 - x.x0) * (x.y1 - x.y0);
    inter / (area(a) + area(b) - inter)
}

/// Rank key: score desc, area desc, x0 asc, then remaining coordinates and class.
fn outranks(a: &Detection, b: &Detection) -> bool {
    let key = |d: &Detection| {
        (
            -d.score,
            -((d.bbox.x1 - d.bbox.x0) * (d.bbox.y1 - d.bbox.y0)),
            d.bbox.x0,
            d.bbox.y0,
            d.bbox.x1,
            d.bbox.y1,
            d.class_id as u8,
        )
    };
    key(a).partial_cmp(&key(b)) == Some(std::cmp::Ordering::Less)
}

/// O(n²) greedy NMS: a box survives iff no surviving box that outranks it
/// (same class unless `agnostic`) overlaps it at or above `t`.
pub fn nms_oracle(dets: &[Detection], t: f64, agnostic: bool) -> Vec<Detection> {
    let n = dets.len();
    let mut iou = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            iou[i][j] = iou_oracle(&dets[i], &dets[j]);
        }
    }
    // rank by counting how many boxes outrank each one (selection order)
    let mut rank: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if outranks(&dets[rank[j]], &dets[rank[i]]) {
                rank.swap(i, j);
            }
        }
    }
    let mut alive = vec![false; n];
    for (pos, &i) in rank.iter().enumerate() {
        let mut survives = true;
        for &j in &rank[..pos] {
            if alive[j] && (agnostic || dets[j].class_id == dets[i].class_id) && iou[j][i] >= t {
                survives = false;
            }
        }
        alive[i] = survives;
    }
    rank.iter()
        .filter(|&&i| alive[i])
        .map(|&i| dets[i])
        .collect()
}

/// Step-by-step greedy matching. Each step picks the highest-scoring
/// unprocessed detection (lowest index on ties), lists all admissible
/// ground truths with their IoU, and takes the best (lowest index on ties).
pub fn match_oracle(
    dets: &[Detection],
    gts: &[GroundTruthBox],
    t: f64,
) -> Vec<(usize, Option<usize>)> {
    let mut processed = vec![false; dets.len()];
    let mut gt_used = vec![false; gts.len()];
    let mut out = vec![None; dets.len()];
    for _ in 0..dets.len() {
        let mut pick: Option<usize> = None;
        for i in 0..dets.len() {
            if processed[i] {
                continue;
            }
            pick = match pick {
                Some(p) if dets[p].score >= dets[i].score => Some(p),
                _ => Some(i),
            };
        }
        let di = pick.unwrap();
        processed[di] = true;
        let mut candidates: Vec<(usize, f64)> = gts
            .iter()
            .enumerate()
            .filter(|(gi, g)| !gt_used[*gi] && !g.occluded && g.class_id == dets[di].class_id)
            .map(|(gi, g)| {
                let as_det = Detection::new(g.bbox, g.class_id, 0.0);
                (gi, iou_oracle(&dets[di], &as_det))
            })
            .filter(|(_, v)| *v >= t)
            .collect();
        candidates.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        if let Some(&(gi, _)) = candidates.first() {
            gt_used[gi] = true;
            out[di] = Some(gi);
        }
    }
    out.into_iter().enumerate().collect()
}

/// (TP, FP, FN) from an assignment.
pub fn recount(assign: &[(usize, Option<usize>)], gts: &[GroundTruthBox]) -> (u64, u64, u64) {
    let tp = assign.iter().filter(|(_, g)| g.is_some()).count() as u64;
    let fp = assign.len() as u64 - tp;
    let evaluable = gts.iter().filter(|g| !g.occluded).count() as u64;
    (tp, fp, evaluable - tp)
}

pub fn class_from(i: u32) -> ClassId {
    ClassId::ALL[(i as usize) % ClassId::ALL.len()]
}
