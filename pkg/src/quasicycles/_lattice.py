"""Complete enumeration of integer points m with lo <= B m <= hi."""
import itertools

import numpy as np

from .errors import ResourceError

_SLACK = 1e-9


def lattice_points_in_box(basis, lo, hi, cap=10**7):
    """All integer vectors m with lo <= basis @ m <= hi (componentwise).

    Coordinate bounds come from mapping the box corners through the inverse
    basis and rounding outward.  The coordinate with the widest range is then
    solved exactly from the box inequalities for every combination of the
    others, so the outer loop never visits the full bounding box.
    A slack of 1e-9 is added on every face; callers apply exact filters.
    """
    basis = np.asarray(basis, dtype=float)
    lo = np.asarray(lo, dtype=float) - _SLACK
    hi = np.asarray(hi, dtype=float) + _SLACK
    n = basis.shape[0]
    inv = np.linalg.inv(basis)
    corners = np.array(list(itertools.product(*zip(lo, hi))))
    mc = corners @ inv.T
    mlo = np.floor(mc.min(axis=0)).astype(np.int64)
    mhi = np.ceil(mc.max(axis=0)).astype(np.int64)
    span = mhi - mlo + 1
    solve = int(np.argmax(span))
    outer = [i for i in range(n) if i != solve]
    n_outer = int(np.prod(span[outer])) if outer else 1
    if n_outer > cap:
        raise ResourceError(f"lattice enumeration needs {n_outer} outer steps (cap {cap})")
    col = basis[:, solve]
    sub = basis[:, outer]
    out = []
    total = 0
    ranges = [np.arange(mlo[i], mhi[i] + 1) for i in outer]
    for chunk in _product_chunks(ranges, 1 << 16):
        part = chunk @ sub.T if outer else np.zeros((1, n))
        low = np.full(len(part), float(mlo[solve]))
        high = np.full(len(part), float(mhi[solve]))
        for r in range(n):
            a = col[r]
            if abs(a) < 1e-15:
                bad = (part[:, r] < lo[r]) | (part[:, r] > hi[r])
                high[bad] = low[bad] - 1
                continue
            b1 = (lo[r] - part[:, r]) / a
            b2 = (hi[r] - part[:, r]) / a
            low = np.maximum(low, np.minimum(b1, b2))
            high = np.minimum(high, np.maximum(b1, b2))
        first = np.ceil(low).astype(np.int64)
        last = np.floor(high).astype(np.int64)
        counts = np.maximum(last - first + 1, 0)
        total += int(counts.sum())
        if total > cap:
            raise ResourceError(f"more than {cap} lattice points in box")
        keep = counts > 0
        if not np.any(keep):
            continue
        rows = np.repeat(chunk[keep] if outer else np.zeros((1, 0), np.int64), counts[keep], axis=0)
        starts = np.repeat(first[keep], counts[keep])
        offs = np.arange(counts[keep].sum()) - np.repeat(np.cumsum(counts[keep]) - counts[keep], counts[keep])
        m = np.empty((len(rows), n), dtype=np.int64)
        m[:, outer] = rows
        m[:, solve] = starts + offs
        out.append(m)
    if not out:
        return np.zeros((0, n), dtype=np.int64)
    return np.concatenate(out)


def _product_chunks(ranges, size):
    if not ranges:
        yield np.zeros((1, 0), dtype=np.int64)
        return
    lead, rest = ranges[0], ranges[1:]
    rest_grid = (np.stack(np.meshgrid(*rest, indexing="ij"), axis=-1).reshape(-1, len(rest))
                 if rest else np.zeros((1, 0), dtype=np.int64))
    per = max(1, size // max(1, len(rest_grid)))
    for s in range(0, len(lead), per):
        block = lead[s:s + per]
        a = np.repeat(block, len(rest_grid))[:, None]
        b = np.tile(rest_grid, (len(block), 1))
        yield np.hstack([a, b]).astype(np.int64)
