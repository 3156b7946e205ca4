"""Signal-processing primitives used by the sensing pipeline.

Decibel metering, Butterworth low-pass design as cascaded biquads,
nearest-neighbour resampling onto a uniform grid, and fixed-hop framing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal

DB_FLOOR = -120.0
REFERENCE_AMPLITUDE = 1.0
# Two timestamps closer than this are treated as equidistant from a query.
TIE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class FilterCoeffs:
    """Digital IIR filter stored as second-order sections.

    Each section is ``(b0, b1, b2, a1, a2)`` with an implicit ``a0 = 1``.
    """

    sections: tuple[tuple[float, float, float, float, float], ...]
    order: int
    cutoff: float
    sample_rate: float

    def __post_init__(self):
        if self.order != 2 * len(self.sections):
            raise ValueError("order must equal twice the section count")

    def sos(self) -> np.ndarray:
        """Return an ``(n, 6)`` array in ``[b0, b1, b2, 1, a1, a2]`` layout."""
        rows = [(b0, b1, b2, 1.0, a1, a2) for b0, b1, b2, a1, a2 in self.sections]
        return np.array(rows, dtype=float)

    def poles(self) -> np.ndarray:
        return np.concatenate([np.roots([1.0, a1, a2]) for *_, a1, a2 in self.sections])

    def response(self, freqs) -> np.ndarray:
        """Complex frequency response at ``freqs`` (Hz)."""
        z = np.exp(-1j * 2 * np.pi * np.asarray(freqs, dtype=float) / self.sample_rate)
        h = np.ones_like(z)
        for b0, b1, b2, a1, a2 in self.sections:
            h = h * (b0 + b1 * z + b2 * z * z) / (1.0 + a1 * z + a2 * z * z)
        return h

    def magnitude_db(self, freqs) -> np.ndarray:
        return 20.0 * np.log10(np.abs(self.response(freqs)))


def noise_db(frame) -> float:
    """Level of ``frame`` in dB relative to a reference amplitude of 1.

    The frame amplitude is its RMS; silent frames clamp to ``DB_FLOOR``.
    """
    x = np.asarray(frame, dtype=float)
    if x.size == 0:
        raise ValueError("empty frame")
    power = float(np.mean(x * x))
    if power <= 0.0:
        return DB_FLOOR
    level = 10.0 * math.log10(power / REFERENCE_AMPLITUDE**2)
    return max(level, DB_FLOOR)


def _analog_poles(order: int, wc: float) -> np.ndarray:
    """Left-half-plane Butterworth poles on a circle of radius ``wc``."""
    k = np.arange(order)
    return wc * np.exp(1j * np.pi * (2 * k + 1 + order) / (2 * order))


def _dc_gain(sections) -> float:
    g = 1.0
    for b0, b1, b2, a1, a2 in sections:
        g *= (b0 + b1 + b2) / (1.0 + a1 + a2)
    return g


def _bilinear_sections(order: int, cutoff: float, sample_rate: float):
    k = 2.0 * sample_rate
    wc = k * math.tan(math.pi * cutoff / sample_rate)
    sections = []
    for i in range(order // 2):
        # Upper-half-plane prototype pole; its conjugate completes the pair.
        theta = math.pi * (2 * i + 1 + order) / (2 * order)
        re = math.cos(theta)
        a0 = k * k - 2.0 * re * wc * k + wc * wc
        a1 = (2.0 * wc * wc - 2.0 * k * k) / a0
        a2 = (k * k + 2.0 * re * wc * k + wc * wc) / a0
        g = wc * wc / a0
        sections.append((g, 2.0 * g, g, a1, a2))
    return sections


def _impulse_sections(order: int, cutoff: float, sample_rate: float):
    T = 1.0 / sample_rate
    wc = 2.0 * math.pi * cutoff
    poles = _analog_poles(order, wc)
    residues = np.array([wc**order / np.prod(poles[i] - np.delete(poles, i))
                         for i in range(order)])
    upper = [i for i in range(order) if poles[i].imag > 0]

    # Parallel form: one conjugate pair per first-order-numerator section.
    dens, nums = [], []
    for i in upper:
        q = np.exp(poles[i] * T)
        r = residues[i]
        dens.append(np.array([1.0, -2.0 * q.real, abs(q) ** 2]))
        nums.append(T * np.array([2.0 * r.real, -2.0 * (r * np.conj(q)).real]))
    # Coefficient arrays index powers of z^-1; convolve keeps leading zeros.
    num = None
    for i, n in enumerate(nums):
        term = n
        for j, d in enumerate(dens):
            if j != i:
                term = np.convolve(term, d)
        num = term if num is None else num + term
    # Residues of a strictly proper H(s) with relative degree >= 2 sum to 0,
    # so the z^0 numerator term vanishes: h[0] = T * h_a(0) = 0.
    q_poly = num[1:]
    zeros = np.roots(q_poly) if q_poly.size > 1 else np.array([])
    tol = 1e-9
    real = sorted(float(z.real) for z in zeros if abs(z.imag) <= tol * max(1.0, abs(z)))
    cplx = [z for z in zeros if z.imag > tol * max(1.0, abs(z))]
    quads = [(1.0, -2.0 * z.real, abs(z) ** 2) for z in cplx]
    quads += [(1.0, -(a + b), a * b) for a, b in zip(real[0::2], real[1::2])]
    quads.append((0.0, 1.0, 0.0))  # the one-sample delay
    sections = [(*b, d[1], d[2]) for b, d in zip(quads, dens)]
    # Fold the leading coefficient, then normalise to unity DC gain.
    g = 1.0 / _dc_gain(sections)
    b0, b1, b2, a1, a2 = sections[0]
    sections[0] = (b0 * g, b1 * g, b2 * g, a1, a2)
    return sections


def butterworth_lowpass(order: int, cutoff: float, sample_rate: float,
                        method: str = "impulse") -> FilterCoeffs:
    """Design a Butterworth low-pass filter as cascaded biquads.

    ``method="impulse"`` (default) samples the analog prototype's impulse
    response and normalises DC gain to 1, so the magnitude tracks the analog
    curve below Nyquist: -3.01 dB at the cutoff, about -24.1 dB an octave up
    at order 4. ``method="bilinear"`` uses the pre-warped bilinear transform,
    which pins the cutoff exactly but compresses the stopband towards Nyquist.
    """
    if order not in (2, 4, 6, 8):
        raise ValueError(f"order must be one of 2, 4, 6, 8 (got {order})")
    if sample_rate <= 0:
        raise ValueError("sample_rate must be positive")
    if not 0 < cutoff < sample_rate / 2:
        raise ValueError(f"cutoff {cutoff} Hz must lie in (0, Nyquist={sample_rate / 2} Hz)")
    if method == "impulse":
        sections = _impulse_sections(order, cutoff, sample_rate)
    elif method == "bilinear":
        sections = _bilinear_sections(order, cutoff, sample_rate)
    else:
        raise ValueError(f"unknown design method {method!r}")
    sections = tuple(tuple(float(v) for v in sec) for sec in sections)
    return FilterCoeffs(sections, order, float(cutoff), float(sample_rate))


def filter_apply(coeffs: FilterCoeffs, x) -> np.ndarray:
    """Causal forward filtering with zero initial conditions."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return x.copy()
    return signal.sosfilt(coeffs.sos(), x, axis=0)


def resample_nn(times, values, target_rate: float, span: tuple[float, float]) -> np.ndarray:
    """Nearest-neighbour resampling onto ``span[0] + k / target_rate``.

    ``values`` may be 1-D or have one row per timestamp. Equidistant
    neighbours resolve to the earlier sample; queries outside the input
    clamp to the first or last sample.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values)
    if t.size == 0:
        raise ValueError("no samples to resample")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("timestamps must be strictly increasing")
    t0, t1 = span
    n = int(round((t1 - t0) * target_rate))
    if n <= 0:
        return v[:0].copy()
    q = t0 + np.arange(n) / target_rate
    right = np.clip(np.searchsorted(t, q, side="left"), 0, t.size - 1)
    left = np.clip(right - 1, 0, t.size - 1)
    d_left = np.abs(q - t[left])
    d_right = np.abs(t[right] - q)
    pick = np.where(d_right < d_left - TIE_TOLERANCE, right, left)
    # Before the first sample both neighbours collapse to index 0.
    pick = np.where(q <= t[0], 0, pick)
    return v[pick]


def segment(x, window: float, hop: float, rate: float) -> np.ndarray:
    """Cut ``x`` into frames of ``window`` seconds every ``hop`` seconds.

    An incomplete trailing frame is dropped; a signal shorter than one
    window yields no frames.
    """
    if window <= 0 or hop <= 0:
        raise ValueError("window and hop must be positive")
    x = np.asarray(x)
    n_win = int(round(window * rate))
    n_hop = int(round(hop * rate))
    if n_win <= 0 or n_hop <= 0:
        raise ValueError("window and hop must span at least one sample")
    if x.shape[0] < n_win:
        return np.empty((0, n_win) + x.shape[1:], dtype=x.dtype)
    count = (x.shape[0] - n_win) // n_hop + 1
    return np.stack([x[i * n_hop:i * n_hop + n_win] for i in range(count)])


def median_smooth(x, width: int) -> np.ndarray:
    """Running median with edge replication; used on slow envelope channels."""
    x = np.asarray(x, dtype=float)
    if width <= 1 or x.size == 0:
        return x.copy()
    return ndimage.median_filter(x, size=width, mode="nearest")
