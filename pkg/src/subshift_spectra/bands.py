"""Exact spectra of periodic approximants via boundary-condition eigenvalues.

The spectrum of the period-q operator with potential v(w_0..w_{q-1}) is
{E : |tr cocycle(w, E)| <= 2}.  Band edges are computed as the eigenvalues
of the two real symmetric q x q wrapped Jacobi matrices (wrap coupling +1
and -1); sorted and paired consecutively they bound the q closed bands,
which is numerically robust out to periods of a few thousand.
"""

from __future__ import annotations

import numpy as np

from .intervals import MERGE_TOL, IntervalSet
from .sl2 import cocycle_product, cocycle_stack
from .words import Potential, SubshiftSpec, Word, factor_set


class BandComputationError(RuntimeError):
    """Eigenvalue solve or band self-check failed for a specific word."""


def discriminant(word: Word, pot: Potential, energy: float) -> float:
    """Trace of the period cocycle at this energy."""
    if not word:
        raise ValueError("discriminant needs a nonempty word")
    return cocycle_product(word, energy, pot).trace


def discriminant_curve(word: Word, pot: Potential, energies: np.ndarray) -> np.ndarray:
    """Vectorized discriminant over an energy grid."""
    if not word:
        raise ValueError("discriminant needs a nonempty word")
    m = cocycle_stack(word, np.asarray(energies, dtype=float), pot)
    return m[:, 0, 0] + m[:, 1, 1]


def _wrapped_jacobi(diag: np.ndarray, wrap: float) -> np.ndarray:
    q = diag.size
    h = np.diag(diag.astype(float))
    if q == 1:
        # both neighbors of the single site wrap around
        h[0, 0] += 2.0 * wrap
        return h
    if q == 2:
        h[0, 1] = h[1, 0] = 1.0 + wrap
        return h
    idx = np.arange(q - 1)
    h[idx, idx + 1] = 1.0
    h[idx + 1, idx] = 1.0
    h[0, q - 1] = wrap
    h[q - 1, 0] = wrap
    return h


def _band_noise_log(word: Word, pot: Potential, probes: np.ndarray) -> float:
    """log10 bound on float noise of the discriminant at the probe energies.

    The trace is exact up to ~1e-16 times the largest intermediate product
    norm; a loose per-letter norm bound is enough to budget it.
    """
    log_growth = np.zeros_like(probes, dtype=float)
    for ch in word:
        log_growth += np.log10(np.abs(probes - pot.value(ch)) + 2.0)
    return -15.0 + float(log_growth.max(initial=0.0))


def periodic_bands(
    word: Word,
    pot: Potential,
    merge_tol: float = MERGE_TOL,
    verify: bool = True,
) -> IntervalSet:
    """Band spectrum {E : |discriminant| <= 2} of the ``word``-periodic operator.

    The 2q eigenvalues of the wrap-coupling +1/-1 matrices are sorted and
    paired into q closed bands; touching bands merge, so a constant
    potential reports the single interval [v-2, v+2] with measure exactly 4.

    When ``verify`` is set, the discriminant is re-checked at band midpoints
    (<= 2 + tol) and edges (>= 2 - tol) with tol = 1e-7 plus a float-noise
    allowance; the check is skipped when the word's matrix growth makes a
    float trace meaningless (noise above 1e-3).
    """
    q = len(word)
    if q < 1:
        raise ValueError("periodic word must be nonempty")
    diag = np.array([pot.value(ch) for ch in word])
    try:
        eigs_per = np.linalg.eigvalsh(_wrapped_jacobi(diag, +1.0))
        eigs_anti = np.linalg.eigvalsh(_wrapped_jacobi(diag, -1.0))
    except np.linalg.LinAlgError as exc:
        raise BandComputationError(f"eigenvalue solve failed for word {word!r}") from exc
    edges = np.sort(np.concatenate([eigs_per, eigs_anti]))
    if edges.size != 2 * q:
        raise BandComputationError(f"expected {2 * q} edges for word {word!r}")
    raw = [(float(edges[2 * i]), float(edges[2 * i + 1])) for i in range(q)]
    for (_, hi), (lo, _) in zip(raw, raw[1:]):
        if lo < hi - 1e-12 * max(1.0, abs(hi)):
            raise BandComputationError(f"overlapping raw bands for word {word!r}")

    if verify:
        mids = np.array([0.5 * (lo + hi) for lo, hi in raw])
        flat = np.concatenate([mids, edges])
        noise_log = _band_noise_log(word, pot, flat)
        if noise_log <= -3.0:
            tol = 1e-7 + 1e2 * 10.0**noise_log
            disc = discriminant_curve(word, pot, flat)
            if np.any(np.abs(disc[: len(mids)]) > 2.0 + tol):
                raise BandComputationError(
                    f"discriminant exceeds 2 inside a band of word {word!r}"
                )
            if np.any(np.abs(disc[len(mids) :]) < 2.0 - tol):
                raise BandComputationError(
                    f"discriminant below 2 at a band edge of word {word!r}"
                )
    return IntervalSet.from_pairs(raw, merge_tol=merge_tol)


def spectrum_approximant(
    spec: SubshiftSpec, pot: Potential, n: int, sample_len: int
) -> IntervalSet:
    """Union of band spectra over every distinct length-``n`` sample factor.

    A periodic-approximation proxy for the subshift spectrum: exact band
    unions for the observed factor language, with no convergence claim for
    arbitrary systems.
    """
    if n < 1:
        raise ValueError("factor length must be >= 1")
    pairs: list[tuple[float, float]] = []
    for w in factor_set(spec, n, sample_len):
        pairs.extend(periodic_bands(w, pot).intervals)
    return IntervalSet.from_pairs(pairs)


def apriori_envelope(pot: Potential, h: float) -> IntervalSet:
    """Union of [v - H, v + H] over the potential values.

    Outside this envelope every letter's transfer matrix shares an invariant
    cone (see ``sl2.cone_certificate``), so the spectrum cannot reach there.
    """
    if h <= 0:
        raise ValueError("H must be > 0")
    return IntervalSet.from_pairs(
        [(v - h, v + h) for v in pot.values.values()]
    )
