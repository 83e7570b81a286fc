"""Slow, literal reference implementations used as test oracles.

Nothing here imports the package's numeric code.
"""

import math


def hamming(a, b):
    count = 0
    for x, y in zip(a, b):
        if x != y:
            count += 1
    return count


def k_epoch_learning_loop(window, mask):
    count = 0
    for i in range(len(mask)):
        if not mask[i]:
            continue
        ok = True
        for row in window:
            if row[i] != 1:
                ok = False
                break
        if ok:
            count += 1
    return count


def trailing_means(values, k):
    out = []
    for t in range(len(values)):
        lo = max(0, t - k + 1)
        window = [float(v) for v in values[lo : t + 1]]
        out.append(math.fsum(window) / len(window))
    return out


def _sign(x):
    return (x > 0) - (x < 0)


def kendall_tau_b_pairs(a, b):
    n = len(a)
    s = 0
    ties_a = ties_b = 0
    for i in range(n):
        for j in range(i + 1, n):
            da = _sign(a[i] - a[j])
            db = _sign(b[i] - b[j])
            s += da * db
            if da == 0:
                ties_a += 1
            if db == 0:
                ties_b += 1
    n0 = n * (n - 1) // 2
    return s / math.sqrt((n0 - ties_a) * (n0 - ties_b))


def pearson_two_pass(a, b):
    n = len(a)
    ma = math.fsum(a) / n
    mb = math.fsum(b) / n
    cov = math.fsum((x - ma) * (y - mb) for x, y in zip(a, b))
    va = math.fsum((x - ma) ** 2 for x in a)
    vb = math.fsum((y - mb) ** 2 for y in b)
    return cov / math.sqrt(va * vb)


def label_wave_literal(pcs, k, p, epochs=None):
    """Line-by-line transcription of the Label Wave loop.

    Returns (t_star, v, halt_epoch); halt_epoch is None if the series ends
    before the patience is used up.
    """
    if epochs is None:
        epochs = list(range(1, len(pcs) + 1))
    i = 0
    v = math.inf
    t_star = None
    seen = []
    step = 0
    while i < p:
        if step == len(pcs):
            return t_star, v, None
        t = epochs[step]
        pc_t = pcs[step]
        seen.append(pc_t)
        recent = seen[-k:]
        pc_smooth = sum(recent) / len(recent)
        if pc_smooth < v:
            v = pc_smooth
            i = 0
            t_star = t
        else:
            i = i + 1
        step += 1
    return t_star, v, epochs[step - 1]


def linear_argmin(values):
    best = None
    for i, v in enumerate(values):
        if best is None or v < values[best]:
            best = i
    return best


def central_difference(f, theta, h=1e-5):
    """Central finite-difference gradient of scalar ``f`` at flat vector ``theta``."""
    out = []
    for j in range(len(theta)):
        plus = list(theta)
        minus = list(theta)
        plus[j] += h
        minus[j] -= h
        out.append((f(plus) - f(minus)) / (2 * h))
    return out


def relative_errors(a, b, floor=1e-6):
    return [abs(x - y) / max(abs(x), abs(y), floor) for x, y in zip(a, b)]


def forward_decimal(layers, x, digits=40):
    """Class probabilities of a ReLU network, evaluated in decimal arithmetic.

    ``layers`` is a list of (W, b) as nested lists, W indexed [fan_in][fan_out];
    ReLU is applied between layers but not after the last one.
    """
    from decimal import Decimal, localcontext

    with localcontext() as ctx:
        ctx.prec = digits
        h = [Decimal(float(v)) for v in x]
        for depth, (w, b) in enumerate(layers):
            out = []
            for j in range(len(b)):
                acc = Decimal(float(b[j]))
                for i in range(len(h)):
                    acc += h[i] * Decimal(float(w[i][j]))
                out.append(acc)
            if depth < len(layers) - 1:
                out = [v if v > 0 else Decimal(0) for v in out]
            h = out
        top = max(h)
        ex = [(v - top).exp() for v in h]
        total = sum(ex)
        return [float(e / total) for e in ex]
