"""Pure numpy path kernels, used when the compiled extension is unavailable.

All paths of a chunk advance in lockstep; finished paths drop out of the
active set.  Random streams, step rules and stopping rules are identical to
the compiled kernel, so lattice and uniform walks agree bit for bit.
Gaussian steps agree up to the last-ulp behaviour of the platform's
``log``/``cos``/``sin``.
"""

from __future__ import annotations

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(k) for k in (30, 27, 31, 11))
TWO_PI = 6.283185307179586
INV53 = 1.1102230246251565e-16
CHUNK = 1 << 16


def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _keys(seed, idx):
    idx = np.asarray(idx, dtype=np.uint64)
    return _mix(np.uint64(seed) ^ _mix((idx + np.uint64(1)) * GAMMA))


def path_key(seed: int, index: int) -> int:
    return int(_keys(seed, np.array([index]))[0])


def uniforms(seed: int, index: int, count: int) -> np.ndarray:
    state = _keys(seed, np.array([index]))[0] + GAMMA * np.arange(1, count + 1, dtype=np.uint64)
    return (_mix(state) >> _S11).astype(np.float64) * INV53


class _Lanes:
    """Per-path streams for the active lanes."""

    def __init__(self, keys):
        self.state = keys.copy()
        self.spare = np.zeros(len(keys))
        self.t = 0  # steps taken so far, equal across live lanes

    def uniform(self):
        self.state += GAMMA
        return (_mix(self.state) >> _S11).astype(np.float64) * INV53

    def normal(self):
        # every live lane has drawn the same number of normals, so the spare
        # value is valid exactly on odd steps
        if self.t % 2 == 1:
            return self.spare
        u1 = self.uniform()
        u2 = self.uniform()
        r = np.sqrt(-2.0 * np.log(1.0 - u1))
        self.spare = r * np.sin(TWO_PI * u2)
        return r * np.cos(TWO_PI * u2)

    def keep(self, mask):
        self.state = self.state[mask]
        self.spare = self.spare[mask]


def _stepper(kind, values, cum, mean, scale):
    if kind == 0:
        edges = np.asarray(cum[:-1])
        vals = np.asarray(values)

        def step(lanes):
            u = lanes.uniform()
            return vals[np.searchsorted(edges, u, side="right")]
    elif kind == 1:

        def step(lanes):
            return mean + scale * lanes.normal()
    else:

        def step(lanes):
            return mean + scale * (2.0 * lanes.uniform() - 1.0)

    return step


def run_paths(kind, values, cum, mean, scale, functional, level, bound, horizon, cap,
              seed, start, stop):
    n = stop - start
    out0 = np.zeros(n)
    out1 = np.zeros(n)
    capped = np.zeros(n, dtype=np.uint8)
    step = _stepper(kind, values, cum, mean, scale)
    for lo in range(0, n, CHUNK):
        hi = min(n, lo + CHUNK)
        _run_chunk(step, functional, level, bound, horizon, cap, seed, start + lo, start + hi,
                   out0[lo:hi], out1[lo:hi], capped[lo:hi])
    return out0, out1, capped


def _run_chunk(step, functional, level, bound, horizon, cap, seed, a, b, out0, out1, capped):
    idx = np.arange(b - a)
    lanes = _Lanes(_keys(seed, np.arange(a, b)))
    x = np.zeros(b - a)
    count = np.zeros(b - a)
    last = np.zeros(b - a)
    m = np.zeros(b - a)

    def retire(done, was_capped=None):
        nonlocal idx, x, count, last, m
        if functional == 1:
            out0[idx[done]] = m[done]
        elif functional == 3:
            out0[idx[done]] = count[done]
            out1[idx[done]] = last[done]
        else:
            out0[idx[done]] = (count if functional == 0 else last)[done]
        if was_capped is not None:
            capped[idx[was_capped]] = 1
        live = ~done
        idx, x, count, last, m = idx[live], x[live], count[live], last[live], m[live]
        lanes.keep(live)

    while len(idx):
        t = lanes.t
        if functional == 0:
            stop_ = x - level > bound
        elif functional == 1:
            stop_ = x - m > bound
        elif functional == 2:
            stop_ = np.full(len(idx), t >= horizon)
        elif horizon > 0:
            stop_ = np.full(len(idx), t >= horizon)
        else:
            stop_ = x > bound
        if functional != 2:
            hit_cap = ~stop_ & (t >= cap)
            done = stop_ | hit_cap
        else:
            hit_cap, done = None, stop_
        if done.any():
            retire(done, hit_cap if hit_cap is not None and hit_cap.any() else None)
            if not len(idx):
                break
        x = x + step(lanes)
        lanes.t += 1
        t = lanes.t
        if functional == 0:
            count += x < level
        elif functional == 1:
            np.minimum(m, x, out=m)
        elif functional == 2:
            last[x == 0.0] = t
        else:
            z = x == 0.0
            count += z
            last[z] = t
