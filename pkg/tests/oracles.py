"""Naive reference implementations used as independent test oracles.

Everything here is written as directly as possible (per-pixel loops,
direct summation, no integral images, no FFT) so that the fast package
implementations can be checked against an independent computation path.
"""

import numpy as np

EPS_HOG = 1e-6


def naive_gradients(a):
    h, w = a.shape
    gx = np.zeros((h, w))
    gy = np.zeros((h, w))
    for r in range(h):
        for c in range(w):
            if 0 < c < w - 1:
                gx[r, c] = (a[r, c + 1] - a[r, c - 1]) / 2.0
            elif c == 0:
                gx[r, c] = a[r, 1] - a[r, 0]
            else:
                gx[r, c] = a[r, w - 1] - a[r, w - 2]
            if 0 < r < h - 1:
                gy[r, c] = (a[r + 1, c] - a[r - 1, c]) / 2.0
            elif r == 0:
                gy[r, c] = a[1, c] - a[0, c]
            else:
                gy[r, c] = a[h - 1, c] - a[h - 2, c]
    mag = np.sqrt(gx**2 + gy**2)
    ori = np.mod(np.arctan2(gy, gx), np.pi)
    ori[ori >= np.pi] = 0.0
    return gx, gy, mag, ori


def naive_box_sum(a, top, left, height, width):
    total = 0.0
    for r in range(top, top + height):
        for c in range(left, left + width):
            total += a[r, c]
    return total


def naive_convolve(a, k):
    """Correlation with reflect-101 borders, by direct loops."""
    kh, kw = k.shape
    ph, pw = kh // 2, kw // 2
    padded = np.pad(a, ((ph, ph), (pw, pw)), mode="reflect")
    h, w = a.shape
    out = np.zeros((h, w))
    for r in range(h):
        for c in range(w):
            s = 0.0
            for i in range(kh):
                for j in range(kw):
                    s += padded[r + i, c + j] * k[i, j]
            out[r, c] = s
    return out


def naive_hog(a):
    _, _, mag, ori = naive_gradients(a)
    hist = np.zeros((8, 8, 9))
    binw = np.pi / 9
    for r in range(64):
        for c in range(64):
            t = ori[r, c] / binw
            f = np.floor(t)
            b0 = int(f) % 9
            w1 = t - f
            hist[r // 8, c // 8, b0] += mag[r, c] * (1.0 - w1)
            hist[r // 8, c // 8, (b0 + 1) % 9] += mag[r, c] * w1
    out = []
    for by in range(7):
        for bx in range(7):
            v = []
            for cy in range(2):
                for cx in range(2):
                    v.extend(hist[by + cy, bx + cx])
            v = np.array(v)
            v = v / np.sqrt((v**2).sum() + EPS_HOG**2)
            v = np.minimum(v, 0.2)
            v = v / np.sqrt((v**2).sum() + EPS_HOG**2)
            out.extend(v)
    return np.array(out)


def naive_sift(a):
    _, _, mag, ori = naive_gradients(a)
    hist = np.zeros((4, 4, 8))
    binw = np.pi / 8
    center = 31.5
    for r in range(64):
        for c in range(64):
            w = np.exp(-((c - center) ** 2 + (r - center) ** 2) / (2 * 32.0**2))
            contrib = mag[r, c] * w
            b = int(np.floor(ori[r, c] / binw)) % 8
            u = (c + 0.5) / 16.0 - 0.5
            v = (r + 0.5) / 16.0 - 0.5
            u0, v0 = int(np.floor(u)), int(np.floor(v))
            fu, fv = u - u0, v - v0
            for cv, wv in ((v0, 1 - fv), (v0 + 1, fv)):
                for cu, wu in ((u0, 1 - fu), (u0 + 1, fu)):
                    if 0 <= cv < 4 and 0 <= cu < 4:
                        hist[cv, cu, b] += contrib * wv * wu
    vec = hist.reshape(-1)
    n = np.linalg.norm(vec)
    if n < 1e-12:
        return np.zeros(128)
    vec = np.minimum(vec / n, 0.2)
    return vec / np.linalg.norm(vec)


def naive_surf(a):
    h, w = a.shape
    dx = np.zeros((h, w))
    dy = np.zeros((h, w))
    for r in range(4, h - 3):
        for c in range(4, w - 3):
            right = a[r - 4:r + 4, c:c + 4].sum()
            left = a[r - 4:r + 4, c - 4:c].sum()
            bottom = a[r:r + 4, c - 4:c + 4].sum()
            top = a[r - 4:r, c - 4:c + 4].sum()
            dx[r, c] = (right - left) / 64.0
            dy[r, c] = (bottom - top) / 64.0
    feats = []
    for cy in range(4):
        for cx in range(4):
            sl = np.s_[cy * 16:(cy + 1) * 16, cx * 16:(cx + 1) * 16]
            feats.extend([dx[sl].sum(), np.abs(dx[sl]).sum(),
                          dy[sl].sum(), np.abs(dy[sl]).sum()])
    v = np.array(feats)
    n = np.linalg.norm(v)
    return v / n if n >= 1e-12 else np.zeros_like(v)


def _transitions(bits):
    return sum(bits[i] != bits[(i + 1) % 8] for i in range(8))


def naive_lbp(a):
    h, w = a.shape
    ring = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))
    uniform_codes = []
    for code in range(256):
        bits = [(code >> (7 - i)) & 1 for i in range(8)]
        if _transitions(bits) <= 2:
            uniform_codes.append(code)
    bin_of = {code: i for i, code in enumerate(uniform_codes)}
    hist = np.zeros(59)
    count = 0
    for r in range(1, h - 1):
        for c in range(1, w - 1):
            code = 0
            for i, (dr, dc) in enumerate(ring):
                if a[r + dr, c + dc] >= a[r, c]:
                    code |= 1 << (7 - i)
            hist[bin_of.get(code, 58)] += 1
            count += 1
    return hist / count


def naive_gist(a, kernels):
    """Direct spatial correlation (reflect-101) per kernel, then cell means.

    Correlates in the spatial domain (explicit padding, windowed dot
    products), independent of any Fourier-domain evaluation.  Kernels of
    one size share a single window matrix.
    """
    feats = np.zeros((len(kernels), 16))
    by_shape = {}
    for i, k in enumerate(kernels):
        by_shape.setdefault(k.shape, []).append(i)
    for shape, idx in by_shape.items():
        ph, pw = shape[0] // 2, shape[1] // 2
        padded = np.pad(a, ((ph, ph), (pw, pw)), mode="reflect")
        windows = np.lib.stride_tricks.sliding_window_view(padded, shape)
        flat = windows.reshape(64 * 64, -1)
        stack = np.stack([kernels[i].reshape(-1) for i in idx], axis=1)
        resp = flat @ stack
        for col, i in enumerate(idx):
            mag = np.abs(resp[:, col].reshape(64, 64))
            for cy in range(4):
                for cx in range(4):
                    feats[i, cy * 4 + cx] = mag[cy * 16:(cy + 1) * 16,
                                                cx * 16:(cx + 1) * 16].mean()
    v = feats.reshape(-1)
    n = np.linalg.norm(v)
    return v / n if n >= 1e-12 else np.zeros_like(v)


def naive_harris_response(a, k=0.04, sigma=1.5):
    gx, gy, _, _ = naive_gradients(a)
    size = int(round(4 * sigma + 1))
    if size % 2 == 0:
        size += 1
    half = size // 2
    y, x = np.mgrid[-half:half + 1, -half:half + 1].astype(float)
    kern = np.exp(-(x**2 + y**2) / (2 * sigma**2))
    kern /= kern.sum()
    A = naive_convolve(gx * gx, kern)
    B = naive_convolve(gy * gy, kern)
    C = naive_convolve(gx * gy, kern)
    return (A * B - C * C) - k * (A + B) ** 2


def flood_fill_count(mask):
    """8-connected component count by explicit stack-based flood fill."""
    h, w = mask.shape
    seen = np.zeros((h, w), dtype=bool)
    count = 0
    sizes = []
    for r0 in range(h):
        for c0 in range(w):
            if not mask[r0, c0] or seen[r0, c0]:
                continue
            count += 1
            size = 0
            stack = [(r0, c0)]
            seen[r0, c0] = True
            while stack:
                r, c = stack.pop()
                size += 1
                for dr in (-1, 0, 1):
                    for dc in (-1, 0, 1):
                        rr, cc = r + dr, c + dc
                        if 0 <= rr < h and 0 <= cc < w and mask[rr, cc] \
                                and not seen[rr, cc]:
                            seen[rr, cc] = True
                            stack.append((rr, cc))
            sizes.append(size)
    return count, sizes


def project_box_hyperplane(z, y, C):
    """Project z onto {0 <= a <= C, y.a = 0} by bisection on the multiplier."""
    lo = -(C + np.abs(z).max() + 1.0)
    hi = (C + np.abs(z).max() + 1.0)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        g = float((np.clip(z - mid * y, 0.0, C) * y).sum())
        if g > 0:
            lo = mid
        else:
            hi = mid
    return np.clip(z - 0.5 * (lo + hi) * y, 0.0, C)


def pg_dual_solve(K, y, C, iters=20000):
    """Projected-gradient ascent on the SVM dual; independent of SMO."""
    n = y.size
    alpha = np.zeros(n)
    step = 1.0 / max(float(np.linalg.eigvalsh(K).max()), 1e-9)
    for _ in range(iters):
        grad = 1.0 - y * (K @ (alpha * y))
        alpha = project_box_hyperplane(alpha + step * grad, y, C)
    return alpha


def dual_objective(alpha, y, K):
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)
