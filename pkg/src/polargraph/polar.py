"""Polar code designs, encoding, the design graph and baseline reliability sequences.

Index convention: bit ``i`` of a design is synthetic channel ``i`` of
``x = u G_N`` with ``G_N = [[1, 0], [1, 1]]^{(x) n}`` in natural order. The
A-vector string of a design reads index ``0 .. N-1`` left to right, so the
design with information set ``{3, 4, 6, 7}`` at ``N = 8`` prints as
``00011011``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MAX_STAGES = 20


def _stages_for(N: int) -> int:
    if N < 2 or N & (N - 1):
        raise ValueError(f"blocklength must be a power of two >= 2, got {N}")
    n = N.bit_length() - 1
    if n > MAX_STAGES:
        raise ValueError(f"blocklength 2^{n} exceeds the supported maximum 2^{MAX_STAGES}")
    return n


@dataclass(frozen=True)
class CodeDesign:
    """A polar code design: the set of unfrozen synthetic channels.

    ``mask`` is a Python integer whose bit ``i`` is set when index ``i``
    carries information. Designs compare and hash by value.
    """

    n: int
    mask: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_STAGES:
            raise ValueError(f"number of stages must be in [1, {MAX_STAGES}], got {self.n}")
        if self.mask < 0 or self.mask >> (1 << self.n):
            raise ValueError("mask has bits outside the blocklength")

    @classmethod
    def from_indices(cls, N: int, indices: Iterable[int]) -> "CodeDesign":
        n = _stages_for(N)
        mask = 0
        for i in indices:
            i = int(i)
            if not 0 <= i < N:
                raise ValueError(f"index {i} outside [0, {N})")
            if mask >> i & 1:
                raise ValueError(f"duplicate index {i}")
            mask |= 1 << i
        return cls(n, mask)

    @classmethod
    def from_bits(cls, bits: str | Sequence[int]) -> "CodeDesign":
        """Build from an A-vector, e.g. ``"00011011"`` or ``[0, 0, 0, 1, ...]``."""
        values = [int(b) for b in bits]
        if any(v not in (0, 1) for v in values):
            raise ValueError("A-vector entries must be 0 or 1")
        return cls.from_indices(len(values), [i for i, v in enumerate(values) if v])

    @classmethod
    def from_mask_hex(cls, N: int, mask_hex: str) -> "CodeDesign":
        return cls(_stages_for(N), int(mask_hex, 16))

    @classmethod
    def all_frozen(cls, N: int) -> "CodeDesign":
        return cls(_stages_for(N), 0)

    @classmethod
    def all_information(cls, N: int) -> "CodeDesign":
        return cls(_stages_for(N), (1 << N) - 1)

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def k(self) -> int:
        return self.mask.bit_count()

    @property
    def rate(self) -> float:
        return self.k / self.N

    @cached_property
    def info_indices(self) -> tuple[int, ...]:
        m, out, i = self.mask, [], 0
        while m:
            if m & 1:
                out.append(i)
            m >>= 1
            i += 1
        return tuple(out)

    @property
    def info_set(self) -> frozenset[int]:
        return frozenset(self.info_indices)

    @cached_property
    def info_mask(self) -> np.ndarray:
        arr = np.zeros(self.N, dtype=bool)
        arr[list(self.info_indices)] = True
        arr.setflags(write=False)
        return arr

    @property
    def bits(self) -> str:
        return "".join("1" if self.mask >> i & 1 else "0" for i in range(self.N))

    @property
    def mask_hex(self) -> str:
        return format(self.mask, "x").zfill(max(1, self.N // 4))

    @cached_property
    def stable_hash(self) -> int:
        """64-bit hash that is identical across processes and platforms."""
        payload = self.n.to_bytes(1, "little") + self.mask.to_bytes(self.N // 8 + 1, "little")
        return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")

    def has(self, index: int) -> bool:
        return bool(self.mask >> index & 1)

    def with_bit(self, index: int, value: bool) -> "CodeDesign":
        if value:
            return CodeDesign(self.n, self.mask | (1 << index))
        return CodeDesign(self.n, self.mask & ~(1 << index))

    def __repr__(self) -> str:
        if self.N <= 64:
            return f"CodeDesign({self.bits})"
        return f"CodeDesign(N={self.N}, k={self.k}, mask=0x{self.mask_hex})"


def sort_key(design: CodeDesign) -> str:
    """Lexicographic order of A-vector strings, the deterministic tie-break."""
    return design.bits


@dataclass(frozen=True)
class GraphEdge:
    """Edge of the design graph: ``to = from | {label}``."""

    source: CodeDesign
    target: CodeDesign
    label: int

    def __post_init__(self):
        if self.source.n != self.target.n:
            raise ValueError("edge endpoints differ in blocklength")
        if self.source.has(self.label) or self.target.mask != self.source.mask | (1 << self.label):
            raise ValueError("edge endpoints must differ exactly in the labelled bit")


@dataclass(frozen=True)
class ReliabilitySequence:
    """Indices in descending reliability; the first ``k`` form the rate-k/N code."""

    order: tuple[int, ...]
    N: int = field(init=False)

    def __post_init__(self):
        order = tuple(int(i) for i in self.order)
        N = len(order)
        _stages_for(N)
        if sorted(order) != list(range(N)):
            raise ValueError("reliability sequence must be a permutation of 0..N-1")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "N", N)


# --------------------------------------------------------------------------- encoding

def polar_transform(u: np.ndarray) -> np.ndarray:
    """``u G_N`` over GF(2) along the last axis (works on batches)."""
    x = np.array(u, dtype=np.uint8, copy=True)
    N = x.shape[-1]
    _stages_for(N)
    lead = x.shape[:-1]
    d = 1
    while d < N:
        v = x.reshape(*lead, N // (2 * d), 2, d)
        v[..., 0, :] ^= v[..., 1, :]
        d *= 2
    return x


def encode(design: CodeDesign, info_bits) -> np.ndarray:
    """Place ``info_bits`` on the information set (ascending index) and apply ``G_N``.

    Accepts a single word of length ``k`` or a batch of shape ``(B, k)``.
    """
    info = np.asarray(info_bits, dtype=np.uint8)
    if info.shape[-1:] != (design.k,):
        raise ValueError(f"expected {design.k} information bits, got shape {info.shape}")
    u = np.zeros(info.shape[:-1] + (design.N,), dtype=np.uint8)
    u[..., design.info_mask] = info & 1
    return polar_transform(u)


# --------------------------------------------------------------------------- sequences

def design_from_sequence(seq: ReliabilitySequence, k: int) -> CodeDesign:
    if not 0 <= k <= seq.N:
        raise ValueError(f"k={k} outside [0, {seq.N}]")
    return CodeDesign.from_indices(seq.N, seq.order[:k])


def path_from_sequence(seq: ReliabilitySequence) -> list[GraphEdge]:
    """The chain of edges from the all-frozen to the all-information design."""
    edges, cur = [], CodeDesign.all_frozen(seq.N)
    for j in seq.order:
        nxt = cur.with_bit(j, True)
        edges.append(GraphEdge(cur, nxt, j))
        cur = nxt
    return edges


def sequence_from_path(path: Sequence[GraphEdge]) -> ReliabilitySequence:
    """Read a reliability sequence off the edge labels of a spanning path."""
    if not path:
        raise ValueError("empty path")
    N = path[0].source.N
    if path[0].source.k != 0:
        raise ValueError("path must start at the all-frozen design")
    labels, seen = [], set()
    for pos, edge in enumerate(path):
        if pos and edge.source != path[pos - 1].target:
            raise ValueError(f"path is not connected at step {pos}")
        if edge.label in seen:
            raise ValueError(f"duplicate edge label {edge.label}")
        seen.add(edge.label)
        labels.append(edge.label)
    if len(labels) != N or path[-1].target.k != N:
        raise ValueError("path does not span k = 0 .. N")
    return ReliabilitySequence(tuple(labels))


# --------------------------------------------------------------------------- graph

def left_neighbors(design: CodeDesign) -> list[GraphEdge]:
    """Edges into designs with one more frozen bit (dimension k-1)."""
    return [GraphEdge(design.with_bit(j, False), design, j) for j in design.info_indices]


def right_neighbors(design: CodeDesign) -> list[GraphEdge]:
    """Edges into designs with one more information bit (dimension k+1)."""
    return [
        GraphEdge(design, design.with_bit(j, True), j)
        for j in range(design.N)
        if not design.has(j)
    ]


def precedes(a: CodeDesign, b: CodeDesign) -> bool:
    """Strict inclusion order of information sets."""
    if a.n != b.n:
        raise ValueError("designs have different blocklengths")
    return a.mask != b.mask and a.mask & b.mask == a.mask


# --------------------------------------------------------------------------- baselines

def _rank(keys: np.ndarray) -> ReliabilitySequence:
    # ascending key, ties to the higher index
    N = len(keys)
    idx = np.arange(N)
    order = np.lexsort((-idx, keys))
    return ReliabilitySequence(tuple(int(i) for i in order))


def bhattacharyya_sequence(N: int, design_erasure_prob: float) -> ReliabilitySequence:
    """Rank channels by the Bhattacharyya parameter under the BEC recursion.

    Tracks ``log Z`` and ``log(1 - Z)`` so the ranking survives underflow at
    large ``N``; the sort key ``logit(Z)`` is monotone in ``Z``. At ``Z0`` of
    exactly 0 or 1 every channel is identical and the tie-break decides.
    """
    n = _stages_for(N)
    z0 = float(design_erasure_prob)
    if not 0.0 <= z0 <= 1.0:
        raise ValueError("design erasure probability must be in [0, 1]")
    if z0 in (0.0, 1.0):
        return _rank(np.zeros(N))
    log_z = np.array([math.log(z0)])
    log_1mz = np.array([math.log1p(-z0)])
    for _ in range(n):
        # bad child 2Z - Z^2 at even, good child Z^2 at odd positions
        bad_z = log_z + np.log1p(np.exp(log_1mz))
        bad_1mz = 2.0 * log_1mz
        good_z = 2.0 * log_z
        good_1mz = log_1mz + np.log1p(np.exp(log_z))
        log_z = np.stack([bad_z, good_z], axis=1).ravel()
        log_1mz = np.stack([bad_1mz, good_1mz], axis=1).ravel()
    return _rank(log_z - log_1mz)


def bhattacharyya_parameters(N: int, design_erasure_prob: float) -> np.ndarray:
    """Plain-domain Z values (may underflow for large N; ranking uses the log form)."""
    n = _stages_for(N)
    z = np.array([float(design_erasure_prob)])
    for _ in range(n):
        z = np.stack([2 * z - z * z, z * z], axis=1).ravel()
    return z


def beta_expansion_weights(N: int, beta: float) -> np.ndarray:
    n = _stages_for(N)
    powers = float(beta) ** np.arange(n)
    idx = np.arange(N)
    bits = (idx[:, None] >> np.arange(n)) & 1
    return bits @ powers


def beta_expansion_sequence(N: int, beta: float) -> ReliabilitySequence:
    if not beta > 1.0:
        raise ValueError("beta must exceed 1")
    return _rank(-beta_expansion_weights(N, beta))


# --------------------------------------------------------------------------- files

def design_to_dict(design: CodeDesign) -> dict:
    # "n" is the blocklength in files, matching the (n, k) code notation of the CLI
    return {"n": design.N, "k": design.k, "info_indices": list(design.info_indices)}


def design_from_dict(data: dict) -> CodeDesign:
    try:
        N, k, indices = int(data["n"]), int(data["k"]), data["info_indices"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed design record: {exc}") from exc
    if list(indices) != sorted(indices):
        raise ValueError("info_indices must be sorted")
    design = CodeDesign.from_indices(N, indices)
    if design.k != k:
        raise ValueError(f"design record states k={k} but lists {design.k} indices")
    return design


def write_design(path: str | Path, design: CodeDesign) -> None:
    Path(path).write_text(json.dumps(design_to_dict(design)) + "\n")


def read_design(path: str | Path) -> CodeDesign:
    return design_from_dict(json.loads(Path(path).read_text()))


def format_sequence(seq: ReliabilitySequence, comments: Sequence[str] = ()) -> str:
    lines = [f"# {c}" for c in comments]
    lines += [str(i) for i in seq.order]
    return "\n".join(lines) + "\n"


def parse_sequence(text: str) -> ReliabilitySequence:
    order = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        order.append(int(line))
    return ReliabilitySequence(tuple(order))


def write_sequence(path: str | Path, seq: ReliabilitySequence, comments: Sequence[str] = ()) -> None:
    Path(path).write_text(format_sequence(seq, comments))


def read_sequence(path: str | Path) -> ReliabilitySequence:
    return parse_sequence(Path(path).read_text())
