"""Decoders used to evaluate designs: factor-graph BP, SC and a brute-force ML oracle.

The BP and SC kernels are compiled with numba and decode whole batches of
frames; ``bp_decode`` / ``sc_decode`` are single-frame conveniences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .polar import CodeDesign, encode, polar_transform


@dataclass(frozen=True)
class BpConfig:
    max_iters: int = 20
    llr_clip: float = 40.0
    early_stop: bool = True
    exact: bool = False  # exact boxplus instead of min-sum

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.llr_clip > 0:
            raise ValueError("llr_clip must be positive")

    @property
    def tag(self) -> str:
        rule = "exact" if self.exact else "minsum"
        return f"bp(iters={self.max_iters},clip={self.llr_clip:g},{rule},early_stop={int(self.early_stop)})"


@dataclass(frozen=True)
class ScConfig:
    exact: bool = False

    @property
    def tag(self) -> str:
        return f"sc({'exact' if self.exact else 'minsum'})"


DecoderConfig = BpConfig | ScConfig


@dataclass
class DecodeResult:
    u_hat: np.ndarray
    x_hat: np.ndarray
    iterations_used: int
    converged: bool
    u_llr: np.ndarray | None = None


@dataclass
class BatchDecodeResult:
    u_hat: np.ndarray  # (B, N) uint8
    x_hat: np.ndarray  # (B, N) uint8
    iterations_used: np.ndarray  # (B,)
    converged: np.ndarray  # (B,) bool
    u_llr: np.ndarray | None = None

    def __getitem__(self, b: int) -> DecodeResult:
        return DecodeResult(
            self.u_hat[b],
            self.x_hat[b],
            int(self.iterations_used[b]),
            bool(self.converged[b]),
            None if self.u_llr is None else self.u_llr[b],
        )


# --------------------------------------------------------------------------- kernels

@njit(cache=True, nogil=True, inline="always")
def _check(a, b, exact):
    sa = 1.0 if a >= 0 else -1.0
    sb = 1.0 if b >= 0 else -1.0
    aa = abs(a)
    ab = abs(b)
    m = aa if aa < ab else ab
    if not exact:
        return sa * sb * m
    # correction log(1 + e^-|a+b|) - log(1 + e^-|a-b|); below 1e-16 once both exceed 37
    x = abs(a + b)
    y = abs(a - b)
    if x > 37.0 and y > 37.0:
        return sa * sb * m
    cx = np.exp(-x) if x <= 37.0 else 0.0
    cy = np.exp(-y) if y <= 37.0 else 0.0
    return sa * sb * m + np.log1p((cx - cy) / (1.0 + cy))


@njit(cache=True, nogil=True, inline="always")
def _sat(v, clip):
    if v > clip:
        return clip
    if v < -clip:
        return -clip
    return v


@njit(cache=True, nogil=True)
def _encode_into(u, out, n):
    N = u.shape[0]
    for i in range(N):
        out[i] = u[i]
    d = 1
    for _ in range(n):
        for blk in range(0, N, 2 * d):
            for t in range(blk, blk + d):
                out[t] ^= out[t + d]
        d *= 2


@njit(cache=True, nogil=True)
def _bp_kernel(llrs, frozen, n, max_iters, clip, early_stop, exact, u_hat, x_hat, u_llr, iters, conv):
    B, N = llrs.shape
    L = np.zeros((n + 1, N))
    R = np.zeros((n + 1, N))
    uh = np.zeros(N, np.uint8)
    xh = np.zeros(N, np.uint8)
    enc = np.zeros(N, np.uint8)
    for b in range(B):
        L[:, :] = 0.0
        R[:, :] = 0.0
        for i in range(N):
            L[n, i] = _sat(llrs[b, i], clip)
            if frozen[i]:
                R[0, i] = clip
        used = max_iters
        ok = False
        for it in range(max_iters):
            # right-to-left sweep: channel side towards u
            for s in range(n - 1, -1, -1):
                d = 1 << s
                for blk in range(0, N, 2 * d):
                    for t in range(blk, blk + d):
                        j = t + d
                        lc = L[s + 1, t]
                        ld = L[s + 1, j]
                        L[s, t] = _sat(_check(lc, ld + R[s, j], exact), clip)
                        L[s, j] = _sat(_check(lc, R[s, t], exact) + ld, clip)
            # left-to-right sweep: u priors towards the channel
            for s in range(n):
                d = 1 << s
                for blk in range(0, N, 2 * d):
                    for t in range(blk, blk + d):
                        j = t + d
                        ra = R[s, t]
                        rb = R[s, j]
                        R[s + 1, t] = _sat(_check(ra, L[s + 1, j] + rb, exact), clip)
                        R[s + 1, j] = _sat(_check(ra, L[s + 1, t], exact) + rb, clip)
            for i in range(N):
                if frozen[i]:
                    uh[i] = 0
                else:
                    uh[i] = 1 if L[0, i] + R[0, i] < 0 else 0
                xh[i] = 1 if L[n, i] + R[n, i] < 0 else 0
            if early_stop or it == max_iters - 1:
                _encode_into(uh, enc, n)
                ok = True
                for i in range(N):
                    if enc[i] != xh[i]:
                        ok = False
                        break
                if early_stop and ok:
                    used = it + 1
                    break
        for i in range(N):
            u_hat[b, i] = uh[i]
            x_hat[b, i] = xh[i]
            u_llr[b, i] = L[0, i] + R[0, i]
        iters[b] = used
        conv[b] = ok


@njit(cache=True, nogil=True)
def _sc_kernel(llrs, frozen, n, exact, u_hat, x_hat):
    B, N = llrs.shape
    off = np.zeros(n + 2, np.int64)
    for d in range(1, n + 2):
        off[d] = off[d - 1] + (N >> (d - 1))
    alpha = np.zeros(2 * N)
    left = np.zeros(2 * N, np.uint8)
    cw = np.zeros(2 * N, np.uint8)
    for b in range(B):
        for q in range(N):
            alpha[q] = llrs[b, q]
        for i in range(N):
            start = 1
            if i > 0:
                t = 0
                while (i >> t) & 1 == 0:
                    t += 1
                parent = n - 1 - t
                h = N >> (parent + 1)
                for q in range(h):
                    a = alpha[off[parent] + q]
                    c = alpha[off[parent] + h + q]
                    if left[off[parent + 1] + q]:
                        alpha[off[parent + 1] + q] = c - a
                    else:
                        alpha[off[parent + 1] + q] = c + a
                start = parent + 2
            for d in range(start, n + 1):
                h = N >> d
                for q in range(h):
                    alpha[off[d] + q] = _check(alpha[off[d - 1] + q], alpha[off[d - 1] + h + q], exact)
            if frozen[i]:
                bit = 0
            else:
                bit = 1 if alpha[off[n]] < 0 else 0
            u_hat[b, i] = bit
            cw[off[n]] = bit
            d = n
            m = i
            while d > 0 and m & 1 == 1:
                h = N >> d
                for q in range(h):
                    r = cw[off[d] + q]
                    cw[off[d - 1] + q] = left[off[d] + q] ^ r
                    cw[off[d - 1] + h + q] = r
                d -= 1
                m >>= 1
            if d > 0:
                h = N >> d
                for q in range(h):
                    left[off[d] + q] = cw[off[d] + q]
        for q in range(N):
            x_hat[b, q] = cw[q]


# --------------------------------------------------------------------------- API

def _as_batch(design: CodeDesign, channel_llrs) -> np.ndarray:
    llrs = np.ascontiguousarray(np.atleast_2d(np.asarray(channel_llrs, dtype=np.float64)))
    if llrs.shape[-1] != design.N:
        raise ValueError(f"expected {design.N} LLRs per frame, got {llrs.shape[-1]}")
    return llrs


def bp_decode_batch(design: CodeDesign, channel_llrs, cfg: BpConfig = BpConfig()) -> BatchDecodeResult:
    llrs = _as_batch(design, channel_llrs)
    B, N = llrs.shape
    frozen = np.ascontiguousarray(~design.info_mask)
    u_hat = np.zeros((B, N), np.uint8)
    x_hat = np.zeros((B, N), np.uint8)
    u_llr = np.zeros((B, N))
    iters = np.zeros(B, np.int64)
    conv = np.zeros(B, np.bool_)
    _bp_kernel(llrs, frozen, design.n, cfg.max_iters, float(cfg.llr_clip), cfg.early_stop, cfg.exact,
               u_hat, x_hat, u_llr, iters, conv)
    return BatchDecodeResult(u_hat, x_hat, iters, conv, u_llr)


def bp_decode(design: CodeDesign, channel_llrs, cfg: BpConfig = BpConfig()) -> DecodeResult:
    """Iterative BP on the n-stage factor graph; one iteration is a full round trip."""
    return bp_decode_batch(design, channel_llrs, cfg)[0]


def sc_decode_batch(design: CodeDesign, channel_llrs, cfg: ScConfig = ScConfig()) -> BatchDecodeResult:
    llrs = _as_batch(design, channel_llrs)
    B, N = llrs.shape
    frozen = np.ascontiguousarray(~design.info_mask)
    u_hat = np.zeros((B, N), np.uint8)
    x_hat = np.zeros((B, N), np.uint8)
    _sc_kernel(llrs, frozen, design.n, cfg.exact, u_hat, x_hat)
    return BatchDecodeResult(u_hat, x_hat, np.ones(B, np.int64), np.ones(B, np.bool_))


def sc_decode(design: CodeDesign, channel_llrs, cfg: ScConfig = ScConfig()) -> DecodeResult:
    return sc_decode_batch(design, channel_llrs, cfg)[0]


def decode_batch(design: CodeDesign, channel_llrs, cfg: DecoderConfig) -> BatchDecodeResult:
    if isinstance(cfg, BpConfig):
        return bp_decode_batch(design, channel_llrs, cfg)
    if isinstance(cfg, ScConfig):
        return sc_decode_batch(design, channel_llrs, cfg)
    raise TypeError(f"unknown decoder configuration {cfg!r}")


ML_MAX_K = 20


def ml_decode_bruteforce(design: CodeDesign, channel_llrs, chunk: int = 1 << 14) -> np.ndarray:
    """Maximum-correlation codeword by enumerating all ``2^k`` codewords.

    Ties go to the lexicographically smallest codeword.
    """
    k = design.k
    if k > ML_MAX_K:
        raise ValueError(f"k={k} too large for brute-force ML (max {ML_MAX_K})")
    llrs = np.asarray(channel_llrs, dtype=np.float64)
    if llrs.shape != (design.N,):
        raise ValueError(f"expected {design.N} LLRs")
    best_metric, best_word = -np.inf, None
    shifts = np.arange(k)
    for start in range(0, 1 << k, chunk):
        words = np.arange(start, min(start + chunk, 1 << k))
        info = ((words[:, None] >> shifts) & 1).astype(np.uint8)
        cws = encode(design, info)
        metric = (1.0 - 2.0 * cws) @ llrs
        top = metric.max()
        if top < best_metric:
            continue
        tied = cws[metric == top]
        cand = tied[np.lexsort(tied.T[::-1])[0]]
        if top > best_metric or tuple(cand) < tuple(best_word):
            best_metric, best_word = top, cand
    return best_word.copy()


def is_frame_error(design: CodeDesign, u_true, result: DecodeResult) -> bool:
    """True iff any information bit of ``u_hat`` differs from ``u_true``.

    ``u_true`` is either the full length-N u-vector or just the k information bits.
    """
    u_true = np.asarray(u_true, dtype=np.uint8)
    u_hat = np.asarray(result.u_hat, dtype=np.uint8)
    if u_hat.shape != (design.N,):
        raise ValueError("decoded u-vector has the wrong length")
    info = design.info_mask
    if u_true.shape == (design.N,):
        return bool(np.any(u_hat[info] != u_true[info]))
    if u_true.shape == (design.k,):
        return bool(np.any(u_hat[info] != u_true))
    raise ValueError("u_true length matches neither N nor k")


def reencodes(result: DecodeResult) -> bool:
    return bool(np.array_equal(polar_transform(result.u_hat), result.x_hat))
