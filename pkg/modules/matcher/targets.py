"""Classification and topology targets aligned to matched prediction slots."""

from typing import Tuple

import numpy as np

from modules.matcher.hungarian import Assignment
from modules.scenegen.types import Scene


def te_class_targets(assignment: Assignment, gt_classes: np.ndarray, n_pred: int, c_te: int) -> np.ndarray:
    """One-hot ``[n_pred, c_te + 1]``; unmatched slots target the no-object column."""
    t = np.zeros((n_pred, c_te + 1))
    t[:, c_te] = 1.0
    for p, g in assignment.pairs:
        t[p, c_te] = 0.0
        t[p, int(gt_classes[g])] = 1.0
    return t


def fg_targets(assignment: Assignment, n_pred: int) -> np.ndarray:
    t = np.zeros(n_pred)
    for p, _ in assignment.pairs:
        t[p] = 1.0
    return t


def align_topology_targets(
    assignment_te: Assignment, assignment_cl: Assignment, scene: Scene, n_te: int, n_cl: int
) -> Tuple[np.ndarray, np.ndarray]:
    """``tgt_tecl [n_te, n_cl]`` and ``tgt_clcl [n_cl, n_cl]``.

    ``tgt[i, j]`` copies the GT relation between the instances matched to
    slots ``i`` and ``j``; rows and columns of unmatched slots stay zero.
    """
    tgt_tecl = np.zeros((n_te, n_cl))
    tgt_clcl = np.zeros((n_cl, n_cl))
    for pc, gc in assignment_cl.pairs:
        for pt, gt in assignment_te.pairs:
            tgt_tecl[pt, pc] = scene.a_lt[gc, gt]
        for pj, gj in assignment_cl.pairs:
            tgt_clcl[pc, pj] = scene.a_ll[gc, gj]
    return tgt_tecl, tgt_clcl
