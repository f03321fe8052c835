"""Deviation-matrix baseline (Pinna et al.) for single knock-out designs.

Row ``i`` compares the wild-type mean of every gene with its expression under
the knock-out of gene ``i``. Samples with more than one clamped gene are
ignored; multiple wild-type replicates are averaged.
"""
from typing import NamedTuple

import numpy as np

#: added to |simple| for z-scores whose wild-type SD is zero, keeps them ranked first
INFINITE_SCORE = 1e12


class DeviationMatrices(NamedTuple):
    simple: np.ndarray     # wild-type mean minus knock-out mean; NaN rows where missing
    zscore: np.ndarray     # simple / wild-type SD
    missing: np.ndarray    # bool per knocked-out gene: no single knock-out available
    infinite: np.ndarray   # bool mask of z-scores that divided by a zero SD


class DesignReport(NamedTuple):
    complete: bool
    missing: tuple         # 0-based genes without a single knock-out


def _single_ko_rows(data):
    n_targets = data.intervened.sum(axis=1)
    singles = {}
    for k in np.flatnonzero(n_targets == 1):
        singles.setdefault(int(np.flatnonzero(data.intervened[k])[0]), []).append(k)
    return singles


def pinna_requires_full_design(data):
    """Whether every gene has at least one single knock-out sample."""
    singles = _single_ko_rows(data) if data.n else {}
    missing = tuple(j for j in range(data.p) if j not in singles)
    return DesignReport(not missing, missing)


def pinna_scores(data):
    wild = ~data.intervened.any(axis=1)
    if not wild.any():
        raise ValueError("the deviation baseline needs at least one wild-type sample")
    p = data.p
    wt = data.values[wild]
    wt_mean = wt.mean(axis=0)
    wt_sd = wt.std(axis=0)
    simple = np.full((p, p), np.nan)
    singles = _single_ko_rows(data)
    for i, rows in singles.items():
        simple[i] = wt_mean - data.values[rows].mean(axis=0)
    missing = np.array([i not in singles for i in range(p)])
    np.fill_diagonal(simple, np.where(missing, np.nan, 0.0))

    zero_sd = wt_sd == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        zscore = simple / wt_sd
    infinite = zero_sd[None, :] & ~missing[:, None] & (simple != 0.0)
    zscore[infinite] = np.sign(simple[infinite]) * (INFINITE_SCORE + np.abs(simple[infinite]))
    flat = zero_sd[None, :] & ~missing[:, None] & (simple == 0.0)
    zscore[flat] = 0.0
    return DeviationMatrices(simple, zscore, missing, infinite)


def score_matrix(dev, kind="zscore"):
    """Effect-score matrix for evaluation; missing rows score 0."""
    if kind not in ("zscore", "simple"):
        raise ValueError(f"unknown deviation matrix {kind!r}")
    M = getattr(dev, kind)
    return np.nan_to_num(M, nan=0.0)
