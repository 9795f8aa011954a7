"""Forward models: parallel-beam PET with Poisson fidelity, masked unitary DFT
with Gaussian fidelity, and their gradients/adjoints.

The PET matrix is a strip-integral discretization: entry (i, j) is the
overlap area of detector strip i with pixel j divided by the strip width,
so projections of a unit image are (strip-averaged) chord lengths. Pixel
size is 1; angles are equispaced over [0, pi).
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class GeometryError(ValueError):
    """PET geometry violates the positivity assumptions (A1)."""


def _footprint_cdf(tau, c, s):
    """Area of a unit pixel with projection onto (c, s) below ``tau``.

    The cross-section profile is a trapezoid with half-base h1 = (c+s)/2,
    half-plateau h0 = |c-s|/2 and peak 1/max(c, s); its integral is the
    piecewise-quadratic CDF evaluated here. Axis-aligned directions
    degenerate to a box profile.
    """
    h1 = 0.5 * (c + s)
    h0 = 0.5 * abs(c - s)
    peak = 1.0 / max(c, s)
    tau = np.asarray(tau, dtype=np.float64)
    if h1 - h0 < 1e-12:
        return np.clip(peak * (tau + h1), 0.0, 1.0)
    ramp = h1 - h0
    out = np.empty_like(tau)
    t = np.clip(tau, -h1, h1)
    rising = t <= -h0
    falling = t >= h0
    middle = ~(rising | falling)
    out[rising] = peak * (t[rising] + h1) ** 2 / (2.0 * ramp)
    out[middle] = peak * (0.5 * ramp + (t[middle] + h0))
    out[falling] = 1.0 - peak * (h1 - t[falling]) ** 2 / (2.0 * ramp)
    return out


@dataclass
class PetOperator:
    """Sparse nonnegative system matrix with constant background counts."""

    matrix: sp.csr_matrix
    background: float
    image_shape: tuple
    n_angles: int = 0
    n_bins: int = 0
    bin_width: float = 1.0
    _adj_ones: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.background <= 0:
            raise ValueError(f"background counts c must be positive, got {self.background}")
        if self.matrix.nnz and self.matrix.data.min() < 0:
            raise GeometryError("system matrix has negative entries")
        rowsum = np.asarray(self.matrix.sum(axis=1)).ravel()
        if rowsum.min() <= 0:
            i = int(np.argmin(rowsum))
            raise GeometryError(f"detector row {i} misses the image (row sum 0)")
        colsum = np.asarray(self.matrix.sum(axis=0)).ravel()
        if colsum.min() <= 0:
            j = int(np.argmin(colsum))
            raise GeometryError(f"pixel {j} is missed by every ray (column sum 0)")
        self._adj_ones = np.asarray(self.matrix.sum(axis=0)).ravel()

    @property
    def M(self):
        return self.matrix.shape[0]

    @property
    def N(self):
        return self.matrix.shape[1]

    @property
    def adjoint_of_ones(self):
        """A^T 1, cached (the EM sensitivity image)."""
        return self._adj_ones

    def forward(self, u):
        return self.matrix @ np.asarray(u, dtype=np.float64).ravel()

    def adjoint(self, y):
        return (self.matrix.T @ np.asarray(y, dtype=np.float64)).reshape(self.image_shape)


def build_pet_operator(n_pixels_side, n_angles=90, n_bins=None, attenuation=None, bin_width=None):
    """Parallel-beam strip-integral PET operator on a square image.

    Defaults: 90 angles over [0, pi), ceil(1.5 * side) detector bins whose
    strips tile exactly the image width (so no strip misses the image and
    every pixel is traversed, keeping row and column sums positive). An
    optional attenuation map scales each ray by exp(-line integral).
    """
    n = int(n_pixels_side)
    if n < 1 or n_angles < 1:
        raise ValueError("image side and angle count must be >= 1")
    if n_bins is None:
        n_bins = int(math.ceil(1.5 * n))
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    if bin_width is None:
        bin_width = n / n_bins
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    A = _strip_matrix(n, int(n_angles), int(n_bins), float(bin_width))
    if attenuation is not None:
        att = np.asarray(getattr(attenuation, "data", attenuation), dtype=np.float64)
        if att.shape != (n, n):
            raise ValueError(f"attenuation shape {att.shape} does not match image ({n}, {n})")
        ray_integrals = A @ att.ravel()
        A = (sp.diags(np.exp(-ray_integrals)) @ A).tocsr()
    return PetOperator(
        A, background=1.0, image_shape=(n, n), n_angles=n_angles, n_bins=n_bins,
        bin_width=bin_width,
    )


_geometry_cache = {}


def _strip_matrix(n, n_angles, n_bins, bin_width):
    key = (n, n_angles, n_bins, bin_width)
    if key in _geometry_cache:
        return _geometry_cache[key]
    centers = np.arange(n) - (n - 1) / 2.0
    px, py = np.meshgrid(centers, centers, indexing="xy")
    px = px.ravel()
    py = py.ravel()
    offsets = (np.arange(n_bins) - (n_bins - 1) / 2.0) * bin_width

    rows, cols, vals = [], [], []
    for a in range(n_angles):
        theta = a * math.pi / n_angles
        c, s = abs(math.cos(theta)), abs(math.sin(theta))
        proj = px * math.cos(theta) + py * math.sin(theta)
        tau = offsets[:, None] - proj[None, :]
        area = _footprint_cdf(tau + bin_width / 2.0, c, s) - _footprint_cdf(
            tau - bin_width / 2.0, c, s
        )
        bi, pj = np.nonzero(area > 1e-12)
        rows.append(bi + a * n_bins)
        cols.append(pj)
        vals.append(area[bi, pj] / bin_width)

    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_angles * n_bins, n * n),
    )
    _geometry_cache[key] = A
    return A


def pet_fidelity(op, u, f):
    """Poisson negative log likelihood <1, Au+c> - <f, ln(Au+c)>."""
    lam = op.forward(u) + op.background
    if lam.min() <= 0:
        raise ValueError("Au + c must stay positive (is u nonnegative?)")
    return float(lam.sum() - np.dot(np.asarray(f, dtype=np.float64), np.log(lam)))


def pet_gradient(op, u, f):
    """Gradient A^T (1 - f / (Au + c)), image shaped."""
    lam = op.forward(u) + op.background
    return op.adjoint(1.0 - np.asarray(f, dtype=np.float64) / lam)


def save_pet_operator(path, op):
    """Text format: header "M N c", then one "i j value" triple per line."""
    coo = op.matrix.tocoo()
    with open(path, "w") as fh:
        fh.write(f"{op.M} {op.N} {op.background!r}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {v!r}\n")


def load_pet_operator(path, image_shape=None):
    with open(path) as fh:
        header = fh.readline().split()
        M, N, c = int(header[0]), int(header[1]), float(header[2])
        rows, cols, vals = [], [], []
        for line in fh:
            if not line.strip():
                continue
            i, j, v = line.split()
            rows.append(int(i))
            cols.append(int(j))
            vals.append(float(v))
    if image_shape is None:
        side = math.isqrt(N)
        if side * side != N:
            raise ValueError(f"cannot infer image shape from N={N}; pass image_shape")
        image_shape = (side, side)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(M, N))
    return PetOperator(A, background=c, image_shape=tuple(image_shape))


# ---------------------------------------------------------------------------
# sampling masks and the masked unitary DFT


@dataclass(frozen=True)
class SamplingMask:
    """Boolean keep-grid in DFT index order; DC is always kept."""

    kind: str
    keep: np.ndarray
    seed: int
    params: tuple = ()

    def __post_init__(self):
        if not self.keep[0, 0]:
            raise ValueError("mask must keep the DC index")
        if not self.keep.any():
            raise ValueError("mask keeps no indices")

    @property
    def shape(self):
        return self.keep.shape

    @property
    def count(self):
        return int(np.count_nonzero(self.keep))

    @property
    def indices(self):
        return np.flatnonzero(self.keep.ravel())


def _bresenham(x0, y0, x1, y1):
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        yield x0, y0
        if x0 == x1 and y0 == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def make_mask(kind, shape, lines=None, fraction=None, seed=0):
    """Radial-line or uniform-random k-space sampling mask.

    Radial: ``lines`` equispaced angles k*pi/lines rasterized with Bresenham
    on the centered grid, then shifted to DFT index order. Random: a seeded
    uniform sample without replacement of round(fraction * N) indices. DC is
    always included; fixed seeds give identical masks.
    """
    rows, cols = int(shape[0]), int(shape[1])
    if kind == "radial":
        if lines is None or lines < 1:
            raise ValueError(f"radial mask needs lines >= 1, got {lines}")
        centered = np.zeros((rows, cols), dtype=bool)
        cy, cx = rows // 2, cols // 2
        reach = rows + cols
        for k in range(lines):
            theta = k * math.pi / lines
            ex = int(round(reach * math.cos(theta)))
            ey = int(round(reach * math.sin(theta)))
            for tx, ty in (_bresenham(cx, cy, cx + ex, cy + ey)):
                if 0 <= tx < cols and 0 <= ty < rows:
                    centered[ty, tx] = True
            for tx, ty in (_bresenham(cx, cy, cx - ex, cy - ey)):
                if 0 <= tx < cols and 0 <= ty < rows:
                    centered[ty, tx] = True
        centered[cy, cx] = True
        keep = np.fft.ifftshift(centered)
        return SamplingMask("radial", keep, seed=seed, params=(("lines", lines),))
    if kind == "random":
        if fraction is None or not 0 < fraction <= 1:
            raise ValueError(f"random mask needs 0 < fraction <= 1, got {fraction}")
        n = rows * cols
        if fraction * n < 1:
            raise ValueError(f"fraction {fraction} keeps less than one index of {n}")
        want = int(math.floor(fraction * n + 0.5))
        rng = np.random.Generator(np.random.Philox(key=seed % 2**64))
        keep = np.zeros(n, dtype=bool)
        keep[0] = True  # DC
        if want > 1:
            keep[1 + rng.choice(n - 1, size=want - 1, replace=False)] = True
        return SamplingMask("random", keep.reshape(rows, cols), seed=seed,
                            params=(("fraction", fraction),))
    raise ValueError(f"unknown mask kind {kind!r}")


class MriOperator:
    """Unitary 2D DFT restricted to the sampled frequencies."""

    def __init__(self, mask):
        self.mask = mask
        self.shape = mask.shape
        self.indices = mask.indices

    @property
    def data_len(self):
        return self.indices.size

    def forward(self, u):
        u = np.asarray(u, dtype=np.float64)
        if u.shape != self.shape:
            raise ValueError(f"image shape {u.shape} does not match operator {self.shape}")
        return np.fft.fft2(u, norm="ortho").ravel()[self.indices]

    def adjoint(self, g):
        g = np.asarray(g, dtype=np.complex128)
        if g.shape != (self.data_len,):
            raise ValueError(f"data length {g.shape} does not match mask ({self.data_len},)")
        full = np.zeros(self.shape[0] * self.shape[1], dtype=np.complex128)
        full[self.indices] = g
        return np.fft.ifft2(full.reshape(self.shape), norm="ortho")


def mri_forward(op, u):
    return op.forward(u)


def mri_adjoint(op, g):
    return op.adjoint(g)


def mri_fidelity(op, u, g, kappa=1.0):
    """(kappa/2) ||F_p u - g||^2."""
    resid = op.forward(u) - np.asarray(g, dtype=np.complex128)
    return float(0.5 * kappa * np.vdot(resid, resid).real)


def mri_gradient(op, u, g, kappa=1.0):
    """kappa Re(F_p^* (F_p u - g)); real because u is real-constrained."""
    resid = op.forward(u) - np.asarray(g, dtype=np.complex128)
    return kappa * op.adjoint(resid).real
