"""Phantom pairs and noisy data synthesis.

All randomness is drawn from counter-based Philox streams keyed by
(seed, domain, element), so outputs are reproducible bit-for-bit and every
data element could be generated in parallel. Poisson variates use inversion
below mean 30 and PTRS transformed rejection above; both sample the exact
distribution.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .imagecore import Image

_DOMAIN_PHANTOM = 0
_DOMAIN_PET = 1
_DOMAIN_MRI = 2

_MAX_MEAN = float(2**63)


@dataclass(frozen=True)
class NoiseSpec:
    """Counts-per-intensity-unit Poisson scale, k-space noise std, seed."""

    poisson_scale: float = 5000.0
    gaussian_sigma: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.poisson_scale <= 0:
            raise ValueError(f"poisson_scale must be positive, got {self.poisson_scale}")
        if self.gaussian_sigma < 0:
            raise ValueError(f"gaussian_sigma must be nonnegative, got {self.gaussian_sigma}")


def _stream(seed, domain, index):
    key = ((int(seed) % 2**64) << 64) | (domain << 48) | index
    return np.random.Generator(np.random.Philox(key=key))


def _poisson_one(lam, rng):
    if lam <= 0:
        return 0
    if lam < 30.0:
        # inversion: sequential CDF search
        x = 0
        p = math.exp(-lam)
        s = p
        u = rng.random()
        while u > s:
            x += 1
            p *= lam / x
            s += p
        return x
    # PTRS transformed rejection (Hormann)
    b = 0.931 + 2.53 * math.sqrt(lam)
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2.0)
    log_lam = math.log(lam)
    while True:
        u = rng.random() - 0.5
        v = rng.random()
        us = 0.5 - abs(u)
        k = math.floor((2.0 * a / us + b) * u + lam + 0.43)
        if us >= 0.07 and v <= v_r:
            return int(k)
        if k < 0 or (us < 0.013 and v > us):
            continue
        if math.log(v * inv_alpha / (a / (us * us) + b)) <= k * log_lam - lam - math.lgamma(
            k + 1.0
        ):
            return int(k)


def synth_pet(op, u, spec):
    """Noisy PET counts: f[j] = Poisson(s * (Au + c)[j]) / s."""
    s = spec.poisson_scale
    mean = s * (op.forward(np.asarray(getattr(u, "data", u), dtype=np.float64)) + op.background)
    if mean.max() > _MAX_MEAN:
        raise ValueError(
            f"poisson_scale {s} overflows the counts range (max mean {mean.max():.3e})"
        )
    f = np.empty(mean.size)
    for j in range(mean.size):
        f[j] = _poisson_one(mean[j], _stream(spec.seed, _DOMAIN_PET, j))
    return f / s


def synth_mri(op, u, spec):
    """Noisy k-space: g = F_p u + eta, eta ~ N(0, sigma^2) per real/imag part."""
    g = op.forward(np.asarray(getattr(u, "data", u), dtype=np.float64)).astype(np.complex128)
    sigma = spec.gaussian_sigma
    if sigma > 0:
        for j in range(g.size):
            re, im = _stream(spec.seed, _DOMAIN_MRI, j).normal(0.0, sigma, size=2)
            g[j] += re + 1j * im
    return g


# ---------------------------------------------------------------------------
# phantoms


@dataclass(frozen=True)
class PhantomPair:
    """Coupled truths: shared region boundaries, one PET-only lesion."""

    pet_truth: Image
    mri_truth: Image
    region_map: np.ndarray
    description: str


# MRI gray levels per region (background, rim, brain, left lobe, right lobe,
# ventricle); the variant only permutes contrasts, never geometry.
_MRI_CONTRAST = {
    "pd": (0.0, 0.85, 0.55, 0.7, 0.75, 0.3),
    "t1": (0.0, 0.9, 0.5, 0.32, 0.38, 0.15),
    "t2": (0.0, 0.35, 0.55, 0.75, 0.7, 0.98),
}
_PET_UPTAKE = (0.0, 0.3, 0.5, 0.9, 0.8, 0.08)


def _inside(X, Y, cx, cy, ax, ay, ang):
    ca, sa = math.cos(ang), math.sin(ang)
    xr = (X - cx) * ca + (Y - cy) * sa
    yr = -(X - cx) * sa + (Y - cy) * ca
    return (xr / ax) ** 2 + (yr / ay) ** 2 <= 1.0


def make_phantom_pair(shape, variant="pd", seed=0):
    """Nested-ellipse phantom pair on [0, 1].

    The MRI truth is piecewise constant over the region map; the PET truth is
    a lightly smoothed uptake mixture over the same regions plus one small
    PET-only lesion, so the strong-edge sets overlap by construction while
    the smooth-region profiles differ.
    """
    rows, cols = int(shape[0]), int(shape[1])
    if rows < 32 or cols < 32:
        raise ValueError(f"phantom shape must be at least 32x32, got {shape}")
    if variant not in _MRI_CONTRAST:
        raise ValueError(f"unknown variant {variant!r}; expected pd|t1|t2")
    rng = _stream(seed, _DOMAIN_PHANTOM, 0)
    jit = lambda scale: float(rng.uniform(-scale, scale))

    ys, xs = np.mgrid[0:rows, 0:cols]
    X = (xs - (cols - 1) / 2.0) / (cols / 2.0)
    Y = (ys - (rows - 1) / 2.0) / (rows / 2.0)

    head = _inside(X, Y, jit(0.02), 0.02 + jit(0.02), 0.88 + jit(0.03), 0.75 + jit(0.03), jit(0.05))
    brain = _inside(X, Y, jit(0.02), 0.04 + jit(0.02), 0.72 + jit(0.03), 0.58 + jit(0.03), jit(0.05))
    lobe_l = _inside(X, Y, -0.3 + jit(0.03), 0.12 + jit(0.03), 0.25 + jit(0.02), 0.36 + jit(0.02),
                     0.3 + jit(0.1))
    lobe_r = _inside(X, Y, 0.3 + jit(0.03), 0.1 + jit(0.03), 0.23 + jit(0.02), 0.34 + jit(0.02),
                     -0.25 + jit(0.1))
    vent = _inside(X, Y, jit(0.02), -0.28 + jit(0.02), 0.3 + jit(0.02), 0.14 + jit(0.02), jit(0.05))
    brain &= head
    lobe_l &= brain
    lobe_r &= brain
    vent &= brain

    region = np.zeros((rows, cols), dtype=np.int8)
    region[head] = 1
    region[brain] = 2
    region[lobe_l] = 3
    region[lobe_r] = 4
    region[vent & ~lobe_l & ~lobe_r] = 5

    mri = np.asarray(_MRI_CONTRAST[variant], dtype=np.float64)[region]
    pet = np.asarray(_PET_UPTAKE, dtype=np.float64)[region]

    # PET-only lesion in a region that is smooth in the MRI truth
    lesion = _inside(X, Y, -0.05 + jit(0.02), -0.55 + jit(0.02), 0.09, 0.09, 0.0)
    pet = np.where(lesion & (region == 2), np.minimum(pet + 0.45, 1.0), pet)

    pet = gaussian_filter(pet, sigma=0.6, mode="nearest")
    pet = np.clip(pet, 0.0, 1.0)
    return PhantomPair(
        pet_truth=Image(pet, bound=1.0),
        mri_truth=Image(mri, bound=1.0),
        region_map=region,
        description=f"nested-ellipse pair variant={variant} seed={seed} shape={rows}x{cols}",
    )


# ---------------------------------------------------------------------------
# data bundles

BUNDLE_FILES = ("pet_counts.fmat", "kspace.fmat", "mask.fmat", "truth_pet.fmat",
                "truth_mri.fmat", "manifest.txt")


def write_manifest(path, entries):
    lines = [f"{k}={entries[k]}" for k in sorted(entries)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_manifest(path):
    entries = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            entries[key.strip()] = value.strip()
    return entries


def write_bundle(outdir, f, g, mask, pet_truth, mri_truth, manifest):
    from pathlib import Path

    from . import imagecore

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    imagecore.write_matrix(outdir / "pet_counts.fmat", np.asarray(f))
    imagecore.write_matrix(outdir / "kspace.fmat", np.asarray(g, dtype=np.complex128))
    imagecore.write_matrix(outdir / "mask.fmat", mask.keep.astype(np.float64))
    imagecore.write_matrix(outdir / "truth_pet.fmat", np.asarray(getattr(pet_truth, "data", pet_truth)))
    imagecore.write_matrix(outdir / "truth_mri.fmat", np.asarray(getattr(mri_truth, "data", mri_truth)))
    write_manifest(outdir / "manifest.txt", manifest)


def read_bundle(indir):
    from pathlib import Path

    from . import imagecore

    indir = Path(indir)
    out = {
        "f": imagecore.read_matrix(indir / "pet_counts.fmat").ravel(),
        "g": imagecore.read_matrix(indir / "kspace.fmat").ravel(),
        "mask": imagecore.read_matrix(indir / "mask.fmat") != 0.0,
        "truth_pet": imagecore.read_matrix(indir / "truth_pet.fmat"),
        "truth_mri": imagecore.read_matrix(indir / "truth_mri.fmat"),
        "manifest": read_manifest(indir / "manifest.txt"),
    }
    return out
