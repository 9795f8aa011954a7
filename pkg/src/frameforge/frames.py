"""Undecimated tight wavelet frame transforms generated by 1D filter banks.

A bank is a list of finitely supported filters ``(origin, taps)`` with
``taps[j]`` sitting at index ``origin + j``. The 2D transform is the tensor
product of the 1D bank with periodic boundary handling, so a bank passing
the tight-frame filter condition (:func:`verify_uep`) yields an exactly
tight transform: ``synthesize(analyze(u)) == u`` and ``||Wu|| == ||u||`` to
rounding. Multi-level decompositions recurse on the low-pass channel with
zero-upsampled filters, which preserves tightness level by level.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

UEP_TOL = 1e-12


class FilterBank:
    """Finitely supported 1D real filters generating an undecimated frame."""

    def __init__(self, filters, name="bank"):
        if not filters:
            raise ValueError("filter bank must contain at least one filter")
        self.filters = []
        for origin, taps in filters:
            taps = np.asarray(taps, dtype=np.float64)
            if taps.ndim != 1 or taps.size == 0:
                raise ValueError("each filter needs a nonempty 1D tap array")
            self.filters.append((int(origin), taps))
        self.name = name

    def __len__(self):
        return len(self.filters)

    def upsampled(self, dilation):
        """A-trous upsampling: insert ``dilation - 1`` zeros between taps."""
        if dilation == 1:
            return self
        out = []
        for origin, taps in self.filters:
            up = np.zeros((taps.size - 1) * dilation + 1)
            up[::dilation] = taps
            out.append((origin * dilation, up))
        return FilterBank(out, name=f"{self.name}@{dilation}")

    def to_text(self):
        """One line per filter: "origin: tap tap ...", round-trip exact."""
        lines = []
        for origin, taps in self.filters:
            lines.append(f"{origin}: " + " ".join(repr(float(t)) for t in taps))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text, name="bank"):
        filters = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            head, _, rest = line.partition(":")
            filters.append((int(head), [float(tok) for tok in rest.split()]))
        return cls(filters, name=name)


def verify_uep(bank, tol=UEP_TOL):
    """Check the tight-frame filter condition.

    Returns ``(ok, max_deviation)`` where the deviation is the largest
    error of sum_l sum_k q_l[n+k] q_l[k] against the unit impulse over all
    shifts n within the combined support.
    """
    if len(bank) == 0:
        raise ValueError("empty filter bank")
    max_len = max(taps.size for _, taps in bank.filters)
    acc = np.zeros(2 * max_len - 1)
    center = max_len - 1
    for _, taps in bank.filters:
        # autocorrelation is shift-invariant, so origins do not matter here
        auto = np.correlate(taps, taps, mode="full")
        half = taps.size - 1
        acc[center - half : center + half + 1] += auto
    acc[center] -= 1.0
    max_dev = float(np.max(np.abs(acc)))
    return max_dev <= tol, max_dev


def cubic_bspline_bank():
    """Piecewise cubic B-spline framelets (low pass + four high pass)."""
    s6 = math.sqrt(6.0)
    taps = [
        np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0,
        np.array([-1.0, -2.0, 0.0, 2.0, 1.0]) / 8.0,
        np.array([1.0, 0.0, -2.0, 0.0, 1.0]) * (s6 / 16.0),
        np.array([-1.0, 2.0, 0.0, -2.0, 1.0]) / 8.0,
        np.array([1.0, -4.0, 6.0, -4.0, 1.0]) / 16.0,
    ]
    bank = FilterBank([(-2, t) for t in taps], name="cubic-bspline")
    ok, dev = verify_uep(bank)
    if not ok:
        raise AssertionError(f"cubic B-spline bank failed the UEP check ({dev:.3e})")
    return bank


def dct_matrix_1d(r):
    """Orthonormal DCT-II matrix, rows indexed by frequency."""
    j = np.arange(r)
    C = np.cos(np.pi * (2.0 * j[None, :] + 1.0) * j[:, None] / (2.0 * r))
    C *= np.sqrt(2.0 / r)
    C[0] *= 1.0 / np.sqrt(2.0)
    return C


def dct_bank(r):
    """DCT-II filters of length r, scaled so the undecimated system is tight.

    The tensor-product transform of this bank has r^2 channels; for r = 8
    these are the 8x8 undecimated DCT filters.
    """
    if r < 2:
        raise ValueError(f"dct_bank needs r >= 2, got {r}")
    C = dct_matrix_1d(r) / math.sqrt(r)
    bank = FilterBank([(0, C[k]) for k in range(r)], name=f"dct{r}")
    ok, dev = verify_uep(bank)
    if not ok:
        raise AssertionError(f"dct bank r={r} failed the UEP check ({dev:.3e})")
    return bank


@dataclass(frozen=True)
class CoefficientStack:
    """Frame coefficients: one image-shaped channel per (level, l1, l2)."""

    data: np.ndarray  # (channels, rows, cols)
    lowpass_index: int
    labels: tuple

    @property
    def channel_count(self):
        return self.data.shape[0]


class FrameTransform:
    """Analysis/synthesis pair of an undecimated tensor-product frame."""

    def __init__(self, bank, shape, levels=1):
        if levels < 1:
            raise ValueError(f"levels must be >= 1, got {levels}")
        rows, cols = int(shape[0]), int(shape[1])
        if rows < 1 or cols < 1:
            raise ValueError(f"invalid image shape {shape}")
        self.bank = bank
        self.shape = (rows, cols)
        self.levels = levels
        self._level_banks = []
        for lev in range(levels):
            lb = bank.upsampled(2**lev)
            ok, dev = verify_uep(lb)
            if not ok:
                raise ValueError(f"bank is not tight at level {lev + 1} (deviation {dev:.3e})")
            self._level_banks.append(lb.filters)
        m = len(bank)
        labels = []
        for lev in range(1, levels + 1):
            for l1 in range(m):
                for l2 in range(m):
                    if (l1, l2) == (0, 0) and lev < levels:
                        continue  # recursed into the next level
                    labels.append((lev, l1, l2))
        self.labels = tuple(labels)
        self.lowpass_index = self.labels.index((levels, 0, 0))

    @property
    def channel_count(self):
        return len(self.labels)

    @property
    def coeff_len(self):
        return self.channel_count * self.shape[0] * self.shape[1]

    def exempt_mask(self):
        """Flat boolean mask marking the low-pass channel positions."""
        n = self.shape[0] * self.shape[1]
        mask = np.zeros(self.coeff_len, dtype=bool)
        start = self.lowpass_index * n
        mask[start : start + n] = True
        return mask

    def analyze(self, u):
        """W u: circular correlation with every tensor-product filter."""
        u = np.asarray(u, dtype=np.float64)
        if u.shape != self.shape:
            raise ValueError(f"image shape {u.shape} does not match transform {self.shape}")
        chans = []
        cur = u
        for lev in range(1, self.levels + 1):
            filters = self._level_banks[lev - 1]
            rowpass = [
                _kernels.correlate1d(cur, taps, origin, axis=0) for origin, taps in filters
            ]
            nxt = None
            for l1, rp in enumerate(rowpass):
                for l2, (origin, taps) in enumerate(filters):
                    ch = _kernels.correlate1d(rp, taps, origin, axis=1)
                    if (l1, l2) == (0, 0) and lev < self.levels:
                        nxt = ch
                    else:
                        chans.append(ch)
            cur = nxt
        return CoefficientStack(np.stack(chans), self.lowpass_index, self.labels)

    def synthesize(self, coeffs):
        """W^T v; the exact adjoint of :meth:`analyze`."""
        data = coeffs.data if isinstance(coeffs, CoefficientStack) else np.asarray(coeffs)
        if data.shape != (self.channel_count, *self.shape):
            raise ValueError(
                f"coefficient shape {data.shape} does not match "
                f"({self.channel_count}, {self.shape[0]}, {self.shape[1]})"
            )
        m = len(self.bank)
        pos = len(self.labels)
        carried = None
        for lev in range(self.levels, 0, -1):
            filters = self._level_banks[lev - 1]
            n_here = m * m if lev == self.levels else m * m - 1
            pos -= n_here
            block = {}
            i = pos
            for l1 in range(m):
                for l2 in range(m):
                    if (l1, l2) == (0, 0) and lev < self.levels:
                        block[(0, 0)] = carried
                        continue
                    block[(l1, l2)] = data[i]
                    i += 1
            acc = np.zeros(self.shape)
            for l1 in range(m):
                o1, t1 = filters[l1]
                row_acc = np.zeros(self.shape)
                for l2 in range(m):
                    o2, t2 = filters[l2]
                    row_acc += _kernels.correlate1d_adjoint(block[(l1, l2)], t2, o2, axis=1)
                acc += _kernels.correlate1d_adjoint(row_acc, t1, o1, axis=0)
            carried = acc
        return carried

    # flat views used by the solvers (thresholding works on positions)
    def analyze_vec(self, u):
        return self.analyze(u).data.ravel()

    def synthesize_vec(self, v):
        return self.synthesize(np.asarray(v).reshape(self.channel_count, *self.shape))
