"""Truncated iterated integrals of the path t -> (t, F(t)) over grid cells.

A word of length j is an integer in [0, 2**j); its binary digits, most
significant first, are the letters from the innermost integration outwards.
Letter 0 integrates against dt, letter 1 against dmu = dF.

A signature is a list ``levels`` with ``levels[j]`` of shape (n, 2**j);
``levels[0]`` is all ones.
"""

from __future__ import annotations

from functools import lru_cache
from math import factorial

import numpy as np

DX, DMU = 0, 1


@lru_cache(maxsize=None)
def letter_counts(j: int) -> tuple[np.ndarray, np.ndarray]:
    """Number of dx letters and dmu letters in every word of length ``j``."""
    idx = np.arange(2**j)
    n_mu = np.zeros(2**j, dtype=int)
    for bit in range(j):
        n_mu += (idx >> bit) & 1
    return j - n_mu, n_mu


def alternating_word(j: int, last: int) -> int:
    """Index of the alternating word of length ``j`` whose outermost letter is ``last``."""
    word = 0
    letter = last if j % 2 == 1 else 1 - last
    for _ in range(j):
        word = (word << 1) | letter
        letter = 1 - letter
    return word


def word(*letters: int) -> tuple[int, int]:
    """(length, index) of an explicit word given innermost letter first."""
    idx = 0
    for letter in letters:
        idx = (idx << 1) | letter
    return len(letters), idx


def identity(n: int, depth: int) -> list[np.ndarray]:
    levels = [np.ones((n, 1))]
    for j in range(1, depth + 1):
        levels.append(np.zeros((n, 2**j)))
    return levels


def linear(dx, dmu, depth: int) -> list[np.ndarray]:
    """Signature of straight segments with increments (dx, dmu): tensor exponential."""
    dx = np.atleast_1d(np.asarray(dx, dtype=float))
    dmu = np.atleast_1d(np.asarray(dmu, dtype=float))
    levels = [np.ones((dx.size, 1))]
    for j in range(1, depth + 1):
        n_dx, n_mu = letter_counts(j)
        levels.append(dx[:, None] ** n_dx * dmu[:, None] ** n_mu / factorial(j))
    return levels


def scale(levels: list[np.ndarray], sx, smu) -> list[np.ndarray]:
    """Signature of the path rescaled by sx along t and smu along F."""
    sx = np.atleast_1d(np.asarray(sx, dtype=float))
    smu = np.atleast_1d(np.asarray(smu, dtype=float))
    out = [np.ones((max(levels[0].shape[0], sx.size), 1))]
    for j in range(1, len(levels)):
        n_dx, n_mu = letter_counts(j)
        out.append(levels[j] * (sx[:, None] ** n_dx * smu[:, None] ** n_mu))
    return out


def chen(s: list[np.ndarray], t: list[np.ndarray]) -> list[np.ndarray]:
    """Signature of the concatenation of two paths (row-wise)."""
    depth = min(len(s), len(t)) - 1
    n = max(s[0].shape[0], t[0].shape[0])
    out = [np.ones((n, 1))]
    for j in range(1, depth + 1):
        acc = np.zeros((n, 2**j))
        for i in range(j + 1):
            a, b = s[i], t[j - i]
            acc += (a[:, :, None] * b[:, None, :]).reshape(-1, 2**j)
        out.append(acc)
    return out


def transform(levels: list[np.ndarray], matrix: np.ndarray) -> list[np.ndarray]:
    """Signature of the linearly transformed path ``matrix @ (t, F)``."""
    out = [levels[0]]
    for j in range(1, len(levels)):
        n = levels[j].shape[0]
        arr = levels[j].reshape((n,) + (2,) * j)
        for axis in range(1, j + 1):
            arr = np.moveaxis(np.tensordot(arr, matrix, axes=([axis], [1])), -1, axis)
        out.append(arr.reshape(n, 2**j))
    return out


@lru_cache(maxsize=None)
def _reversal(j: int) -> np.ndarray:
    idx = np.arange(2**j)
    rev = np.zeros_like(idx)
    for bit in range(j):
        rev |= ((idx >> bit) & 1) << (j - 1 - bit)
    return rev


def inverse(levels: list[np.ndarray]) -> list[np.ndarray]:
    """Signature of the reversed path: sign (-1)**j on reversed words."""
    return [levels[0]] + [(-1) ** j * levels[j][:, _reversal(j)] for j in range(1, len(levels))]


def take(levels: list[np.ndarray], rows) -> list[np.ndarray]:
    return [lev[rows] for lev in levels]


def concat(parts: list[list[np.ndarray]]) -> list[np.ndarray]:
    return [np.concatenate([p[j] for p in parts], axis=0) for j in range(len(parts[0]))]


@lru_cache(maxsize=64)
def cantor_signature(w1: float, depth: int) -> tuple[np.ndarray, ...]:
    """Signature over [0, 1] of the self-similar Cantor measure with weights (w1, 1 - w1).

    Solves S = D1(S) * exp(gap) * D2(S) level by level, where Dk rescales by
    (1/3, wk). Level one is (1, 1); higher levels have a contracting diagonal.
    """
    w2 = 1.0 - w1
    third = 1.0 / 3.0
    sig = identity(1, depth)
    sig[1] = np.array([[1.0, 1.0]])
    gap = linear([third], [0.0], depth)
    for j in range(2, depth + 1):
        sig[j] = np.zeros((1, 2**j))
        trial = chen(chen(scale(sig, third, w1), gap), scale(sig, third, w2))
        n_dx, n_mu = letter_counts(j)
        diag = third**n_dx * (w1**n_mu + w2**n_mu)
        sig[j] = trial[j] / (1.0 - diag)
    return tuple(sig)
