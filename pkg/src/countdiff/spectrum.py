"""Patterson intensities, comb transforms, and a heuristic Bragg scan.

Intensities follow the counting normalization: for a sample F with weights w,
``I(y) = |sum w(x) e^{2 pi i x y}|^2 / sum |w|``, so ``I(0) = card F`` for
unweighted sets. Integer-supported sets are 1-periodic in y and are sampled on
the torus grid ``y_j = j/M``.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .autocorr import DiracComb, count_shift
from .errors import BudgetExceeded, SpecError
from .pointsets import INTEGER, REAL, PointSet, Source, format_float, sample
from .windows import WindowFamily, as_fraction

log = logging.getLogger(__name__)

EPS_PD = 1e-9
DIRECT_CARD_BUDGET = 100_000
DIRECT_WORK_BUDGET = 10**9
CHUNK = 1 << 22
LIMB = 20


@dataclass
class SpectrumGrid:
    y: np.ndarray
    intensity: np.ndarray
    card: float
    domain: str = "torus"
    min_raw: float = 0.0
    clamped: int = 0

    @property
    def per_point(self) -> np.ndarray:
        return self.intensity / self.card if self.card else np.zeros_like(self.intensity)

    def write_csv(self, stream) -> None:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(["y", "intensity", "intensity_per_point"])
        for y, i, p in zip(self.y.tolist(), self.intensity.tolist(), self.per_point.tolist()):
            w.writerow([format_float(y), format_float(i), format_float(p)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()

    def to_svg(self, width: int = 640, height: int = 320) -> str:
        """Static polyline plot of intensity against y."""
        pad = 20
        y = self.y
        v = self.intensity
        x0, x1 = (float(y.min()), float(y.max())) if y.size else (0.0, 1.0)
        top = float(v.max()) if v.size and v.max() > 0 else 1.0
        sx = (width - 2 * pad) / ((x1 - x0) or 1.0)
        sy = (height - 2 * pad) / top
        pts = " ".join(
            f"{pad + (a - x0) * sx:.3f},{height - pad - b * sy:.3f}" for a, b in zip(y.tolist(), v.tolist())
        )
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">\n'
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>\n'
            f'<polyline fill="none" stroke="black" stroke-width="1" points="{pts}"/>\n'
            "</svg>\n"
        )


def torus_grid(M: int) -> np.ndarray:
    _check_pow2(M)
    return np.arange(M, dtype=np.float64) / M


def _check_pow2(M: int):
    if M < 1 or M & (M - 1):
        raise SpecError(f"grid size must be a power of two, got {M}")


def _clamp(raw: np.ndarray, what: str) -> tuple[np.ndarray, float, int]:
    lo = float(raw.min()) if raw.size else 0.0
    neg = raw < 0
    if lo < 0:
        scale = float(np.max(np.abs(raw))) or 1.0
        if -lo > EPS_PD * scale:
            log.warning("%s: negative intensity %.3e (relative %.3e) clamped to 0", what, lo, -lo / scale)
    return np.where(neg, 0.0, raw), lo, int(np.count_nonzero(neg))


def _phases(values: np.ndarray, scale: int, y: np.ndarray) -> np.ndarray:
    """``(x * y) mod 1`` for exact coordinates ``x = values / scale``.

    Integers are split into 20-bit limbs so each float product stays well
    inside double precision, whatever the magnitude of x.
    """
    ys = np.asarray(y, dtype=np.float64) / scale
    v = values.astype(np.int64)
    sign = np.sign(v)
    mag = np.abs(v)
    acc = np.zeros((v.size, ys.size))
    shift = 0
    while True:
        limb = (mag & ((1 << LIMB) - 1)).astype(np.float64)
        if limb.any():
            c = np.mod(ys * float(2**shift), 1.0)
            acc = np.mod(acc + np.outer(limb * sign, c), 1.0)
        mag = mag >> LIMB
        shift += LIMB
        if not mag.any():
            return acc


def _trig_sum(values: np.ndarray, scale: int, mode: str, weights: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``sum_k weights[k] e^{2 pi i x_k y}`` for each y, chunked over frequencies."""
    out = np.zeros(y.size, dtype=np.complex128)
    step = max(1, CHUNK // max(values.size, 1))
    for s in range(0, y.size, step):
        ys = y[s : s + step]
        if mode == REAL:
            ph = np.mod(np.outer(values, ys), 1.0)
        else:
            ph = _phases(values, scale, ys)
        out[s : s + step] = weights @ np.exp(2j * np.pi * ph)
    return out


def _weights(F: PointSet) -> np.ndarray:
    return F.weights if F.is_weighted else np.ones(len(F))


def patterson_direct(F: PointSet, frequencies) -> SpectrumGrid:
    """Patterson intensity by direct summation at arbitrary frequencies."""
    y = np.asarray([float(v) for v in frequencies], dtype=np.float64)
    card = len(F)
    if card > DIRECT_CARD_BUDGET:
        raise BudgetExceeded("direct Patterson sample size (use the FFT path)", card, DIRECT_CARD_BUDGET)
    if card * y.size > DIRECT_WORK_BUDGET:
        raise BudgetExceeded("direct Patterson work card*M (use the FFT path)", card * y.size, DIRECT_WORK_BUDGET)
    w = _weights(F)
    mass = float(np.sum(np.abs(w))) if card else 0.0
    if card == 0:
        return SpectrumGrid(y, np.zeros(y.size), 0.0, "real")
    s = _trig_sum(F.values, F.scale, F.mode, w, y)
    raw = np.abs(s) ** 2 / mass
    inten, lo, n = _clamp(raw, "patterson_direct")
    return SpectrumGrid(y, inten, float(card), "real", lo, n)


def patterson_fft(F: PointSet, M: int) -> SpectrumGrid:
    """Patterson intensity on ``y_j = j/M`` for an integer-supported sample.

    Coordinates are folded modulo M, which is exact on the grid since
    ``e^{2 pi i x j/M}`` depends only on ``x mod M``.
    """
    _check_pow2(M)
    if F.mode != INTEGER:
        raise SpecError("the FFT path needs integer support; use patterson_direct")
    y = torus_grid(M)
    card = len(F)
    if card == 0:
        return SpectrumGrid(y, np.zeros(M), 0.0)
    w = _weights(F)
    v = np.bincount(np.mod(F.values, M), weights=w, minlength=M)
    raw = np.abs(np.fft.fft(v)) ** 2 / float(np.sum(np.abs(w)))
    inten, lo, n = _clamp(raw, "patterson_fft")
    return SpectrumGrid(y, inten, float(card), "torus", lo, n)


def comb_fourier(comb: DiracComb, frequencies, fejer: Optional[float] = None) -> SpectrumGrid:
    """``sum_t w(t) e^{-2 pi i t y}``, optionally with Fejér weights ``max(0, 1 - |t|/T)``."""
    if not comb.is_symmetric():
        raise SpecError("comb is not reflection symmetric; its transform would not be real")
    y = np.asarray([float(v) for v in frequencies], dtype=np.float64)
    t, w = comb.float_arrays()
    if fejer is not None:
        if fejer <= 0:
            raise SpecError(f"Fejér length must be positive, got {fejer}")
        w = w * np.clip(1.0 - np.abs(t) / float(fejer), 0.0, None)
    card = float(comb.count(0)) if len(comb) else 0.0
    if len(comb) == 0:
        return SpectrumGrid(y, np.zeros(y.size), 0.0, "real")
    # symmetric, so the sum is real: use the cosine part only
    s = _trig_sum(comb.keys, comb.scale, comb.mode, w, y).real
    inten, lo, n = _clamp(s, "comb_fourier")
    return SpectrumGrid(y, inten, card or 1.0, "real", lo, n)


# -- Bragg scan ---------------------------------------------------------------

BRAGG_THETA = 0.01
BRAGG_BAND = 0.05
BRAGG_T = 64


@dataclass(frozen=True)
class BraggRow:
    n: int
    y: str
    card: int
    per_point: float  # I_F(y) / card F
    estimate: Optional[float]  # Fejér-averaged Bragg weight, integer sets only


@dataclass
class BraggReport:
    rows: list
    verdicts: dict  # y -> "Bragg-like" | "not Bragg-like"
    theta: float = BRAGG_THETA
    band: float = BRAGG_BAND
    T: int = BRAGG_T
    heuristic: bool = True
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "heuristic": self.heuristic,
            "theta": self.theta,
            "band": self.band,
            "fejer_T": self.T,
            "verdicts": self.verdicts,
            "rows": [r.__dict__ for r in self.rows],
            "notes": self.notes,
        }


def _exact_sum(F: PointSet, y: Fraction) -> complex:
    """``sum_x e^{2 pi i x y}`` for integer x and rational y, via residues mod the denominator."""
    q = y.denominator
    counts = np.bincount(np.mod(F.values, q), minlength=q)
    r = np.arange(q)
    return complex(np.sum(counts * np.exp(2j * np.pi * ((r * y.numerator) % q) / q)))


def per_point_intensity(F: PointSet, y) -> float:
    """``I_F(y) / card F`` (0 for an empty sample)."""
    card = len(F)
    if card == 0:
        return 0.0
    if F.mode == INTEGER and not F.is_weighted and isinstance(y, Fraction):
        return abs(_exact_sum(F, y)) ** 2 / card / card
    return float(patterson_direct(F, [y]).per_point[0])


def bragg_estimate(F: PointSet, y, T: int = BRAGG_T) -> float:
    """Fejér average ``sum_{|t|<=T} (1 - |t|/(T+1)) eta(t) cos(2 pi t y) / (T+1)``.

    For a sample of a set with a Bragg peak of weight c at y this tends to c
    as n and T grow; for an absolutely continuous spectrum it decays like
    the spectral density times 1/(T+1).
    """
    card = len(F)
    if card == 0:
        return 0.0
    yf = float(y)
    total = 0.0
    for t in range(-T, T + 1):
        c = count_shift(F, t)
        if c:
            total += (1 - abs(t) / (T + 1)) * c / card * math.cos(2 * math.pi * t * yf)
    return total / (T + 1)


def bragg_scan(
    source: Source,
    family: WindowFamily,
    n_list: Sequence[int],
    frequencies: Sequence,
    T: int = BRAGG_T,
    theta: float = BRAGG_THETA,
    band: float = BRAGG_BAND,
) -> BraggReport:
    """Per-n intensities and a heuristic Bragg verdict for each candidate frequency.

    A frequency is Bragg-like when, over the last half of ``n_list``, the
    tracked series never drops by more than ``band`` relative to the previous
    n and stays at or above ``theta``. Integer samples track the Fejér
    estimate; other samples track ``I/card``.
    """
    freqs = [as_fraction(v) if not isinstance(v, float) else as_fraction(v) for v in frequencies]
    rows = []
    series: dict[str, list] = {str(y): [] for y in freqs}
    notes = ["heuristic verdict: thresholds are not calibrated by any limit theorem"]
    for n in n_list:
        F = sample(source, family(n))
        for y in freqs:
            pp = per_point_intensity(F, y)
            est = bragg_estimate(F, y, T) if F.mode == INTEGER and not F.is_weighted else None
            rows.append(BraggRow(n, str(y), len(F), pp, est))
            series[str(y)].append(pp if est is None else est)
    verdicts = {}
    for key, vals in series.items():
        tail = vals[len(vals) // 2 :]
        steady = all(b >= (1 - band) * a for a, b in zip(tail, tail[1:]))
        verdicts[key] = "Bragg-like" if tail and steady and min(tail) >= theta else "not Bragg-like"
    return BraggReport(rows, verdicts, theta, band, T, True, notes)
