"""Alignment-free sequence transcription math.

A per-timestep output matrix assigns each step a probability distribution over
an alphabet plus a reserved blank. A path (one symbol per step) maps to a
label sequence by collapsing adjacent repeats and then dropping blanks; the
probability of a label sequence is the total mass of every path that collapses
to it, computed here with the standard forward dynamic program over the
blank-interleaved state sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import UsdeidError

# Above this many timesteps the forward pass runs in log space; products of
# per-step probabilities underflow float64 long before T reaches 1000.
LOG_SPACE_T = 100

ROW_SUM_TOL = 1e-9


class ZeroProbabilityError(UsdeidError):
    """A training sample whose target sequence has probability zero."""

    def __init__(self, index: int):
        super().__init__(f"sample {index} has zero probability (infinite loss)")
        self.index = index


@dataclass(frozen=True)
class Alphabet:
    """Ordered label symbols plus a reserved blank symbol.

    In probability matrices the columns follow `labels` order and the blank
    occupies the final column.
    """

    labels: tuple[str, ...]
    blank: str = "-"

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate labels")
        if self.blank in self.labels:
            raise ValueError("blank must not be a label")
        if not self.labels:
            raise ValueError("alphabet needs at least one label")

    @property
    def size(self) -> int:
        """Number of matrix columns: labels plus blank."""
        return len(self.labels) + 1

    @property
    def blank_index(self) -> int:
        return len(self.labels)

    def index(self, symbol: str) -> int:
        return self.blank_index if symbol == self.blank else self.labels.index(symbol)

    def encode(self, seq: Sequence[str]) -> list[int]:
        return [self.index(s) for s in seq]

    def decode(self, indices: Sequence[int]) -> str:
        return "".join(self.labels[i] for i in indices)


def validate_prob_matrix(probs: np.ndarray, alphabet: Alphabet | None = None) -> np.ndarray:
    """Check shape, non-negativity and row normalization; returns float64 copy."""
    mat = np.asarray(probs, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] < 1 or mat.shape[1] < 2:
        raise ValueError(f"probability matrix must be T x K with K >= 2, got {mat.shape}")
    if alphabet is not None and mat.shape[1] != alphabet.size:
        raise ValueError(f"matrix has {mat.shape[1]} columns, alphabet wants {alphabet.size}")
    if np.any(mat < 0):
        raise ValueError("negative probabilities")
    sums = mat.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
        bad = int(np.argmax(np.abs(sums - 1.0)))
        raise ValueError(f"row {bad} sums to {sums[bad]!r}, expected 1")
    return mat


def read_prob_matrix(text: str) -> np.ndarray:
    """Parse the fixture format: first line `T K`, then T lines of K reals.

    The blank is column K-1 by convention.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty probability matrix text")
    t, k = (int(tok) for tok in lines[0].split())
    if len(lines) - 1 != t:
        raise ValueError(f"expected {t} rows, found {len(lines) - 1}")
    mat = np.array([[float(tok) for tok in ln.split()] for ln in lines[1:]], dtype=np.float64)
    if mat.shape != (t, k):
        raise ValueError(f"expected {t}x{k} matrix, got {mat.shape}")
    return validate_prob_matrix(mat)


def collapse(path: Sequence[str], blank: str = "-"):
    """Collapse adjacent duplicates, then delete blanks.

    Returns a string for string input, otherwise a list.
    """
    out = []
    prev = None
    for sym in path:
        if sym != prev and sym != blank:
            out.append(sym)
        prev = sym
    return "".join(out) if isinstance(path, str) else out


def _extended_states(label_idx: Sequence[int], blank: int) -> list[int]:
    """Blank-interleaved state sequence: blank, l1, blank, l2, ..., blank."""
    states = [blank]
    for idx in label_idx:
        states.append(idx)
        states.append(blank)
    return states


def _forward_linear(mat: np.ndarray, states: list[int]) -> float:
    T = mat.shape[0]
    S = len(states)
    alpha = np.zeros(S)
    alpha[0] = mat[0, states[0]]
    if S > 1:
        alpha[1] = mat[0, states[1]]
    for t in range(1, T):
        prev = alpha
        alpha = np.zeros(S)
        for s in range(S):
            total = prev[s]
            if s >= 1:
                total += prev[s - 1]
            if s >= 2 and states[s] != states[s - 2]:
                total += prev[s - 2]
            alpha[s] = total * mat[t, states[s]]
    tail = alpha[S - 1]
    if S > 1:
        tail += alpha[S - 2]
    return float(tail)


def _forward_log(mat: np.ndarray, states: list[int]) -> float:
    """Log-space forward pass; returns log probability (may be -inf)."""
    with np.errstate(divide="ignore"):
        logm = np.log(mat)
    T = mat.shape[0]
    S = len(states)
    alpha = np.full(S, -np.inf)
    alpha[0] = logm[0, states[0]]
    if S > 1:
        alpha[1] = logm[0, states[1]]
    for t in range(1, T):
        prev = alpha
        alpha = np.full(S, -np.inf)
        for s in range(S):
            acc = prev[s]
            if s >= 1:
                acc = np.logaddexp(acc, prev[s - 1])
            if s >= 2 and states[s] != states[s - 2]:
                acc = np.logaddexp(acc, prev[s - 2])
            alpha[s] = acc + logm[t, states[s]]
    tail = alpha[S - 1]
    if S > 1:
        tail = np.logaddexp(tail, alpha[S - 2])
    return float(tail)


def _log_seq_probability(probs: np.ndarray, label: Sequence[str], alphabet: Alphabet) -> float:
    mat = validate_prob_matrix(probs, alphabet)
    idx = alphabet.encode(label)
    if alphabet.blank_index in idx:
        raise ValueError("label sequences must not contain the blank")
    # Feasibility: each label needs a step, plus a separating blank between
    # adjacent duplicates.
    dups = sum(1 for a, b in zip(idx, idx[1:]) if a == b)
    if len(idx) + dups > mat.shape[0]:
        return -math.inf
    states = _extended_states(idx, alphabet.blank_index)
    if mat.shape[0] > LOG_SPACE_T:
        return _forward_log(mat, states)
    p = _forward_linear(mat, states)
    return math.log(p) if p > 0.0 else -math.inf


def seq_probability(probs: np.ndarray, label: Sequence[str], alphabet: Alphabet) -> float:
    """Total probability of every path that collapses to `label`."""
    mat = validate_prob_matrix(probs, alphabet)
    idx = alphabet.encode(label)
    if alphabet.blank_index in idx:
        raise ValueError("label sequences must not contain the blank")
    dups = sum(1 for a, b in zip(idx, idx[1:]) if a == b)
    if len(idx) + dups > mat.shape[0]:
        return 0.0
    states = _extended_states(idx, alphabet.blank_index)
    if mat.shape[0] > LOG_SPACE_T:
        return math.exp(_forward_log(mat, states))
    return _forward_linear(mat, states)


def nll_loss(samples: Sequence[tuple[np.ndarray, Sequence[str]]], alphabet: Alphabet) -> float:
    """Summed negative log-likelihood (natural log) over (matrix, label) pairs."""
    total = 0.0
    for i, (probs, label) in enumerate(samples):
        logp = _log_seq_probability(probs, label, alphabet)
        if logp == -math.inf:
            raise ZeroProbabilityError(i)
        total -= logp
    return total


def best_path_decode(probs: np.ndarray, alphabet: Alphabet) -> tuple[str, float]:
    """Greedy decode: per-step argmax, then collapse.

    Ties break toward the lowest label index; the blank, sitting in the last
    column, loses every tie. The score is the product of the chosen maxima.
    """
    mat = validate_prob_matrix(probs, alphabet)
    picks = np.argmax(mat, axis=1)
    score = float(np.prod(mat[np.arange(mat.shape[0]), picks]))
    symbols = [alphabet.blank if p == alphabet.blank_index else alphabet.labels[p]
               for p in picks]
    decoded = collapse(symbols, alphabet.blank)
    return "".join(decoded), score
