"""Independent oracle implementations shared by unit and acceptance tests.

Each function restates the expected behavior from first principles (direct
loops, exhaustive search, closed-form statistics) without touching the
package's implementation paths.
"""

from itertools import permutations

import numpy as np


def bilinear_oracle(image, rect, out_h, out_w):
    """Scalar center-space bilinear resampling with zero padding."""
    img = np.asarray(image, dtype=np.float64)
    H, W = img.shape[:2]
    out = np.zeros((out_h, out_w, img.shape[2]))

    def pixel(y, x):
        if 0 <= y < H and 0 <= x < W:
            return img[y, x]
        return np.zeros(img.shape[2])

    for i in range(out_h):
        for j in range(out_w):
            sx = rect.x0 + (j + 0.5) * (rect.x1 - rect.x0) / out_w - 0.5
            sy = rect.y0 + (i + 0.5) * (rect.y1 - rect.y0) / out_h - 0.5
            x0, y0 = int(np.floor(sx)), int(np.floor(sy))
            fx, fy = sx - x0, sy - y0
            out[i, j] = (
                (1 - fy) * (1 - fx) * pixel(y0, x0)
                + (1 - fy) * fx * pixel(y0, x0 + 1)
                + fy * (1 - fx) * pixel(y0 + 1, x0)
                + fy * fx * pixel(y0 + 1, x0 + 1)
            )
    return out


def naive_conv2d(x, weight, bias, stride, pad):
    """Direct six-loop convolution."""
    B, C, H, W = x.shape
    out_ch, _, k, _ = weight.shape
    xp = np.zeros((B, C, H + 2 * pad, W + 2 * pad))
    xp[:, :, pad:pad + H, pad:pad + W] = x
    Ho = (H + 2 * pad - k) // stride + 1
    Wo = (W + 2 * pad - k) // stride + 1
    out = np.zeros((B, out_ch, Ho, Wo))
    for b in range(B):
        for o in range(out_ch):
            for i in range(Ho):
                for j in range(Wo):
                    acc = bias[o]
                    for c in range(C):
                        for di in range(k):
                            for dj in range(k):
                                acc += (
                                    weight[o, c, di, dj]
                                    * xp[b, c, i * stride + di, j * stride + dj]
                                )
                    out[b, o, i, j] = acc
    return out


def greedy_nms_oracle(candidates, threshold):
    """Score-descending greedy suppression, re-stated from the rule."""
    remaining = sorted(candidates, key=lambda c: (-c.score, c.cell))
    kept = []
    for cand in remaining:
        ok = True
        for other in kept:
            worst = 0.0
            for ra, rb in zip(cand.rects, other.rects):
                if ra is None or rb is None:
                    continue
                ta = ra if isinstance(ra, tuple) else (ra.x0, ra.y0, ra.x1, ra.y1)
                tb = rb if isinstance(rb, tuple) else (rb.x0, rb.y0, rb.x1, rb.y1)
                ix = min(ta[2], tb[2]) - max(ta[0], tb[0])
                iy = min(ta[3], tb[3]) - max(ta[1], tb[1])
                inter = max(ix, 0.0) * max(iy, 0.0)
                union = (
                    (ta[2] - ta[0]) * (ta[3] - ta[1])
                    + (tb[2] - tb[0]) * (tb[3] - tb[1])
                    - inter
                )
                if union > 0:
                    worst = max(worst, inter / union)
            if worst > threshold:
                ok = False
                break
        if ok:
            kept.append(cand)
    return kept


def brute_force_match(det_cells, gt_cells, grid, radius):
    """(best_tp, best_cost): maximize matches within radius, minimize distance."""
    dpos = [grid.cell_center(c)[:2] for c in det_cells]
    gpos = [grid.cell_center(c)[:2] for c in gt_cells]
    n, m = len(dpos), len(gpos)
    best_tp, best_cost = 0, 0.0

    def consider(pairs):
        nonlocal best_tp, best_cost
        tp, cost = 0, 0.0
        for i, j in pairs:
            d = float(np.linalg.norm(np.subtract(dpos[i], gpos[j])))
            if d <= radius:
                tp += 1
                cost += d
        if tp > best_tp or (tp == best_tp and tp > 0 and cost < best_cost):
            best_tp, best_cost = tp, cost

    if n <= m:
        for perm in permutations(range(m), n):
            consider(zip(range(n), perm))
    else:
        for perm in permutations(range(n), m):
            consider((i, j) for j, i in enumerate(perm))
    return best_tp, best_cost


def mann_whitney_auc(scores):
    """Pairwise positive-beats-negative rate with half-credit ties."""
    pos = [s for s, label in scores if label == 1]
    neg = [s for s, label in scores if label == 0]
    total = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                total += 1.0
            elif sp == sn:
                total += 0.5
    return total / (len(pos) * len(neg))


def exhaustive_best_split(X, y, min_leaf):
    """Best Gini split by scanning every feature and midpoint threshold."""

    def gini(counts):
        n = sum(counts)
        if n == 0:
            return 0.0
        return 1.0 - sum((c / n) ** 2 for c in counts)

    n, d = X.shape
    best = None
    for f in range(d):
        values = np.unique(X[:, f])
        for lo, hi in zip(values[:-1], values[1:]):
            thr = 0.5 * (lo + hi)
            left = X[:, f] <= thr
            nl, nr = int(left.sum()), int(n - left.sum())
            if nl < min_leaf or nr < min_leaf:
                continue
            gl = gini([(y[left] == 0).sum(), (y[left] == 1).sum()])
            gr = gini([(y[~left] == 0).sum(), (y[~left] == 1).sum()])
            weighted = (nl * gl + nr * gr) / n
            if best is None or weighted < best[0] - 1e-12:
                best = (weighted, f, thr)
    return best
