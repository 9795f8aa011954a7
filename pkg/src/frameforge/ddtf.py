"""Data-driven tight frames on image patches.

Learns an orthogonal r^2 x r^2 patch dictionary D (columns are vectorized
filters) by alternating hard thresholding of the coefficients with an SVD
(polar) update of D. With stride-1 periodic patches and the 1/r scaling
applied by :class:`PatchFrame`, an orthogonal D induces an exactly tight
undecimated frame.
"""

import math
from pathlib import Path

import numpy as np

from . import _kernels

ORTHO_TOL = 1e-12


def im2patch(u, r):
    """All r x r patches of ``u``, stride 1, periodic wrap; shape (r^2, N)."""
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 2:
        raise ValueError("im2patch expects a 2D image")
    if r < 1 or r > min(u.shape):
        raise ValueError(f"patch side {r} exceeds image shape {u.shape}")
    return _kernels.im2patch(u, r)


def patch2im(patches, shape):
    """Adjoint of :func:`im2patch`; patch2im(im2patch(u)) == r^2 u."""
    patches = np.asarray(patches, dtype=np.float64)
    rows, cols = int(shape[0]), int(shape[1])
    r = int(round(math.sqrt(patches.shape[0])))
    if r * r != patches.shape[0] or patches.shape[1] != rows * cols:
        raise ValueError(f"patch matrix shape {patches.shape} does not match image {shape}")
    return _kernels.patch2im(patches, r, rows, cols)


def dct_dictionary(r):
    """Separable 2D DCT-II dictionary: orthogonal, column 0 is the DC patch."""
    from .frames import dct_matrix_1d

    if r < 2:
        raise ValueError(f"patch side must be >= 2, got {r}")
    C = dct_matrix_1d(r)
    # column k1*r+k2 is the vectorized outer product of DCT rows k1 and k2
    return np.kron(C.T, C.T)


def dictionary_update(G, V, D_prev, mu, beta=0.0):
    """Closed-form orthogonal dictionary update.

    Returns the minimizer of (mu/2)||D^T G - V||_F^2 + (beta/2)||D - D_prev||_F^2
    over D D^T = I, i.e. the polar factor X Y^T of G V^T + (beta/mu) D_prev.
    The SVD sign is fixed deterministically (largest-magnitude entry of each
    left singular vector made positive) so degenerate inputs still give a
    reproducible orthogonal matrix.
    """
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    B = G @ V.T + (beta / mu) * D_prev
    X, _, Yt = np.linalg.svd(B)
    picks = np.argmax(np.abs(X), axis=0)
    signs = np.sign(X[picks, np.arange(X.shape[1])])
    signs[signs == 0] = 1.0
    return (X * signs) @ (signs[:, None] * Yt)


def joint_hard_threshold(channels, weights, lam, exempt=None):
    """Row-wise keep-or-kill across channels.

    Row j survives (in every channel simultaneously) iff
    sum_i weights[i] * ||channels[i][j]||^2 >= lam; surviving rows are copied
    unchanged. ``exempt`` is an optional boolean mask of rows that are always
    kept (the low-pass convention). Channels must share their shape; rows of
    1D inputs are scalars.
    """
    if len(channels) == 0:
        raise ValueError("need at least one channel")
    if len(weights) != len(channels):
        raise ValueError("one weight per channel required")
    if lam < 0:
        raise ValueError(f"threshold must be nonnegative, got {lam}")
    arrs = [np.asarray(ch, dtype=np.float64) for ch in channels]
    shape = arrs[0].shape
    for a in arrs[1:]:
        if a.shape != shape:
            raise ValueError(f"channel shapes differ: {a.shape} vs {shape}")
    energy = np.zeros(shape[0])
    for w, a in zip(weights, arrs):
        if w <= 0:
            raise ValueError(f"weights must be positive, got {w}")
        sq = a * a
        energy += w * (sq if sq.ndim == 1 else sq.reshape(shape[0], -1).sum(axis=1))
    keep = energy >= lam
    if exempt is not None:
        keep = keep | np.asarray(exempt, dtype=bool)
    out = []
    for a in arrs:
        mask = keep if a.ndim == 1 else keep.reshape((-1,) + (1,) * (a.ndim - 1))
        out.append(np.where(mask, a, 0.0))
    return out


def learn_ddtf_single(u, r, lam, iters):
    """Single-image dictionary learning on raw patches.

    Alternates V <- hard-threshold(D^T G, lam) (entrywise, keep |b| >= lam)
    with the polar dictionary update; the objective
    ||V - D^T G||_F^2 + lam^2 ||V||_0 is nonincreasing. Returns
    (D, V, objective trace).
    """
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    G = im2patch(u, r)
    D = dct_dictionary(r)
    objectives = []
    V = None
    for _ in range(iters):
        B = D.T @ G
        V = np.where(np.abs(B) >= lam, B, 0.0)
        objectives.append(float(np.sum((V - B) ** 2) + lam**2 * np.count_nonzero(V)))
        D = dictionary_update(G, V, D, mu=1.0)
    return D, V, objectives


def _ddtf_init(patch_mats, mus, lam, iters, exempt_rows=True):
    """Shared alternating init for 1 or 2 channels (joint row threshold + polar updates).

    Minimizes sum_i mus[i] ||D_i^T G_i - V_i||_F^2 + lam ||V||_{2,0} over
    orthogonal D_i, with the DC row exempt from the count when
    ``exempt_rows``. Returns (dicts, coeff mats, objective trace).
    """
    r2, p = patch_mats[0].shape
    r = int(round(math.sqrt(r2)))
    dicts = [dct_dictionary(r) for _ in patch_mats]
    exempt = None
    if exempt_rows:
        exempt = np.zeros(r2 * p, dtype=bool)
        exempt[:p] = True  # row 0 of the r^2 x p matrix: the DC filter
    objectives = []
    Vs = None
    for _ in range(iters):
        Bs = [D.T @ G for D, G in zip(dicts, patch_mats)]
        flat = joint_hard_threshold(
            [B.ravel() for B in Bs], [2.0 * m for m in mus], 2.0 * lam, exempt=exempt
        )
        Vs = [f.reshape(r2, p) for f in flat]
        fit = sum(m * np.sum((B - V) ** 2) for m, B, V in zip(mus, Bs, Vs))
        joint = np.zeros(r2 * p, dtype=bool)
        for V in Vs:
            joint |= V.ravel() != 0
        if exempt is not None:
            joint &= ~exempt
        objectives.append(float(fit) + lam * int(np.count_nonzero(joint)))
        dicts = [
            dictionary_update(G, V, D, mu=1.0) for G, V, D in zip(patch_mats, Vs, dicts)
        ]
    return dicts, Vs, objectives


def init_multichannel(u1, u2, r, mu1, mu2, lam, iters):
    """Joint dictionary/coefficient initialization for the coupled models.

    Works on 1/r-normalized patch matrices so the induced frames are tight;
    returns (D1, D2, (V1, V2), objective trace) with a nonincreasing trace.
    """
    u1 = np.asarray(u1, dtype=np.float64)
    u2 = np.asarray(u2, dtype=np.float64)
    if u1.shape != u2.shape:
        raise ValueError(f"channel shapes differ: {u1.shape} vs {u2.shape}")
    G1 = im2patch(u1, r) / r
    G2 = im2patch(u2, r) / r
    dicts, Vs, objectives = _ddtf_init([G1, G2], [mu1, mu2], lam, iters)
    return dicts[0], dicts[1], (Vs[0], Vs[1]), objectives


class PatchFrame:
    """Tight undecimated frame induced by an orthogonal patch dictionary.

    analyze(u) = (1/r) D^T im2patch(u) and synthesize(V) = (1/r) patch2im(D V),
    which satisfy synthesize(analyze(u)) == u and ||analyze(u)||_F == ||u||_2.
    """

    def __init__(self, D, r, shape, lowpass_row=0):
        D = np.asarray(D, dtype=np.float64)
        if D.shape != (r * r, r * r):
            raise ValueError(f"dictionary shape {D.shape} does not match r={r}")
        err = np.max(np.abs(D @ D.T - np.eye(r * r)))
        if err > 1e-10:
            raise ValueError(f"dictionary is not orthogonal (||DD^T - I||_max = {err:.3e})")
        self.D = D
        self.r = r
        self.shape = (int(shape[0]), int(shape[1]))
        self.lowpass_row = lowpass_row

    @property
    def coeff_len(self):
        return self.r * self.r * self.shape[0] * self.shape[1]

    def exempt_mask(self):
        n = self.shape[0] * self.shape[1]
        mask = np.zeros(self.coeff_len, dtype=bool)
        mask[self.lowpass_row * n : (self.lowpass_row + 1) * n] = True
        return mask

    def analyze(self, u):
        u = np.asarray(u, dtype=np.float64)
        if u.shape != self.shape:
            raise ValueError(f"image shape {u.shape} does not match frame {self.shape}")
        return self.D.T @ (im2patch(u, self.r) / self.r)

    def synthesize(self, V):
        V = np.asarray(V, dtype=np.float64)
        n = self.shape[0] * self.shape[1]
        if V.shape != (self.r * self.r, n):
            raise ValueError(f"coefficient shape {V.shape} does not match frame")
        return patch2im(self.D @ V, self.shape) / self.r

    def analyze_vec(self, u):
        return self.analyze(u).ravel()

    def synthesize_vec(self, v):
        n = self.shape[0] * self.shape[1]
        return self.synthesize(np.asarray(v).reshape(self.r * self.r, n))


def save_dictionary(path, D, r, lowpass_row=0):
    """FMAT matrix plus a one-line sidecar with r and the low-pass row."""
    from . import imagecore

    path = Path(path)
    imagecore.write_matrix(path, np.asarray(D, dtype=np.float64))
    path.with_suffix(path.suffix + ".meta").write_text(f"r={r} lowpass={lowpass_row}\n")


def load_dictionary(path):
    from . import imagecore

    path = Path(path)
    D = imagecore.read_matrix(path)
    meta = path.with_suffix(path.suffix + ".meta").read_text().split()
    fields = dict(tok.split("=") for tok in meta)
    return D, int(fields["r"]), int(fields["lowpass"])
