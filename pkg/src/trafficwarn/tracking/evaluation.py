"""CLEAR-MOT style evaluation of tracker output against labeled trajectories."""

from __future__ import annotations

from collections import defaultdict
from typing import Mapping, Sequence

import numpy as np

from ..errors import UndefinedMetricError
from ..geometry import BoundingBox, iou
from .assignment import hungarian_assign

# frame -> list of (identity, box)
Trajectories = Mapping[int, Sequence[tuple[int, BoundingBox]]]


def evaluate_tracking(
    ground_truth: Trajectories,
    hypotheses: Trajectories,
    iou_threshold: float = 0.5,
    mostly_tracked_fraction: float = 0.8,
) -> dict:
    """MOTA, identity switches and fragmentations.

    Per frame, correspondences from the previous frame are kept while their
    IoU stays above ``iou_threshold``; remaining objects are matched by
    minimum-cost assignment on 1 - IoU. An identity switch is counted whenever
    a ground-truth object is matched to a hypothesis id different from the
    one it was last matched to.

    ``mostly_tracked`` is the fraction of ground-truth objects matched in at
    least ``mostly_tracked_fraction`` of the frames they appear in.
    """
    n_gt = sum(len(v) for v in ground_truth.values())
    if n_gt == 0:
        raise UndefinedMetricError("MOTA is undefined without ground-truth objects")

    fn = fp = idsw = frag = matches = 0
    last_match: dict[int, int] = {}  # gt id -> hyp id of most recent match
    prev_frame_match: dict[int, int] = {}
    tracked_prev: dict[int, bool] = {}
    ever_tracked: set[int] = set()
    gt_frames = defaultdict(int)
    gt_matched = defaultdict(int)
    iou_sum = 0.0

    for frame in sorted(set(ground_truth) | set(hypotheses)):
        gts = list(ground_truth.get(frame, ()))
        hyps = list(hypotheses.get(frame, ()))
        pairs: list[tuple[int, int]] = []
        gt_free = set(range(len(gts)))
        hyp_free = set(range(len(hyps)))

        hyp_index = {h_id: k for k, (h_id, _) in enumerate(hyps)}
        for gi, (g_id, g_box) in enumerate(gts):
            h_id = prev_frame_match.get(g_id)
            if h_id is None or h_id not in hyp_index:
                continue
            hk = hyp_index[h_id]
            if hk in hyp_free and iou(g_box, hyps[hk][1]) >= iou_threshold:
                pairs.append((gi, hk))
                gt_free.discard(gi)
                hyp_free.discard(hk)

        gl, hl = sorted(gt_free), sorted(hyp_free)
        if gl and hl:
            cost = np.array([[1.0 - iou(gts[g][1], hyps[h][1]) for h in hl] for g in gl])
            for r, c in hungarian_assign(cost, gate=1.0 - iou_threshold):
                pairs.append((gl[r], hl[c]))

        current: dict[int, int] = {}
        for gi, hk in pairs:
            g_id, g_box = gts[gi]
            h_id, h_box = hyps[hk]
            if g_id in last_match and last_match[g_id] != h_id:
                idsw += 1
            last_match[g_id] = h_id
            current[g_id] = h_id
            iou_sum += iou(g_box, h_box)
        matches += len(pairs)
        fn += len(gts) - len(pairs)
        fp += len(hyps) - len(pairs)

        for g_id, _ in gts:
            gt_frames[g_id] += 1
            is_tracked = g_id in current
            if is_tracked:
                gt_matched[g_id] += 1
                if g_id in ever_tracked and not tracked_prev[g_id]:
                    frag += 1
                ever_tracked.add(g_id)
            tracked_prev[g_id] = is_tracked
        prev_frame_match = current

    mostly = sum(1 for g in gt_frames if gt_matched[g] >= mostly_tracked_fraction * gt_frames[g])
    return {
        "mota": 1.0 - (fn + fp + idsw) / n_gt,
        "id_switches": idsw,
        "fragmentations": frag,
        "false_negatives": fn,
        "false_positives": fp,
        "matches": matches,
        "ground_truth": n_gt,
        "motp_iou": iou_sum / matches if matches else 0.0,
        # reconstruction of "tracking stability": share of mostly-tracked objects
        "mostly_tracked": mostly / len(gt_frames),
    }


def records_to_trajectories(records) -> dict[int, list[tuple[int, BoundingBox]]]:
    """Group tracker records (frame, track_id, cx, cy, w, h, ...) by frame."""
    out: dict[int, list[tuple[int, BoundingBox]]] = defaultdict(list)
    for r in records:
        out[r.frame].append((r.track_id, BoundingBox(r.cx, r.cy, r.w, r.h)))
    return dict(out)
