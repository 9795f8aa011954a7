"""Quality indices: relative error, PSNR, and correlation."""

import math

import numpy as np


def _pair(truth, recon):
    t = np.asarray(getattr(truth, "data", truth), dtype=np.float64)
    r = np.asarray(getattr(recon, "data", recon), dtype=np.float64)
    if t.shape != r.shape:
        raise ValueError(f"shape mismatch: {t.shape} vs {r.shape}")
    return t, r


def rel_err(truth, recon):
    """||truth - recon|| / ||truth||."""
    t, r = _pair(truth, recon)
    denom = np.linalg.norm(t)
    if denom == 0:
        raise ValueError("relative error undefined for an identically zero truth")
    return float(np.linalg.norm(t - r) / denom)


def psnr(truth, recon):
    """-10 log10(||truth - recon||^2 / N); +inf when the images coincide."""
    t, r = _pair(truth, recon)
    mse = float(np.sum((t - r) ** 2)) / t.size
    if mse == 0:
        return math.inf
    return -10.0 * math.log10(mse)


def corr(truth, recon):
    """Centered correlation coefficient."""
    t, r = _pair(truth, recon)
    t = t - t.mean()
    r = r - r.mean()
    nt, nr = np.linalg.norm(t), np.linalg.norm(r)
    if nt == 0 or nr == 0:
        raise ValueError("correlation undefined for a constant image")
    return float(np.dot(t.ravel(), r.ravel()) / (nt * nr))


def format_value(x):
    """CSV rendering; infinite PSNR becomes the textual sentinel "inf"."""
    if math.isinf(x):
        return "inf"
    return f"{x:.6f}"


def report_rows(model, truths, recons):
    """Rows (model, modality, RelErr, PSNR, Corr) for the comparison table."""
    rows = []
    for modality, truth, recon in zip(("PET", "MRI"), truths, recons):
        if recon is None:
            continue
        rows.append(
            (
                model,
                modality,
                format_value(rel_err(truth, recon)),
                format_value(psnr(truth, recon)),
                format_value(corr(truth, recon)),
            )
        )
    return rows
