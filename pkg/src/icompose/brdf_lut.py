"""Environment-BRDF lookup table for the split-sum specular integral.

The directional specular integral factors into a linear function of the
normal-incidence reflectance: M = A*F0 + B, where A and B depend only on
roughness and the view cosine. Both are tabulated once by Monte Carlo
over a uniform (roughness, cos_v) grid of cell centers and fetched with
bilinear interpolation at compose time.

The estimator importance-samples GGX half vectors h with density
D(h)(n.h) over the hemisphere, reflects the view ray to get the light
direction, and weights each accepted sample by

    G(o, i) * (o.h) / ((o.n)(n.h)),

split between A and B by the Schlick grazing factor Fc = (1 - o.h)^5.
That weight is exactly the integrand of the A/B integrals divided by the
sampling density p(i) = D(h)(n.h)/(4 (o.h)); samples whose reflected ray
leaves the upper hemisphere contribute zero but still count toward N, so
the sum stays an expectation under p. The bake is bit-reproducible: cell
(i, j) draws from a Philox stream keyed by SeedSequence([seed, i, j]),
so the table is identical for any worker count.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ImageIOError, ValidationError

MAGIC = b"EPBRLUT1"


@dataclass(frozen=True)
class BrdfLut:
    """(n_rough, n_cos, 2) float32 table of (A, B) at cell centers."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.ascontiguousarray(self.entries, dtype=np.float32)
        if e.ndim != 3 or e.shape[2] != 2 or e.shape[0] < 1 or e.shape[1] < 1:
            raise ValidationError(f"bad LUT shape {self.entries.shape}")
        if np.any(e < 0.0) or np.any(e > 1.05):
            raise ValidationError("LUT entries outside [0, 1.05]")
        if np.any(e.sum(axis=2) > 1.05):
            raise ValidationError("LUT has A + B > 1.05")
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    @property
    def n_rough(self) -> int:
        return self.entries.shape[0]

    @property
    def n_cos(self) -> int:
        return self.entries.shape[1]

    def lookup(self, roughness, cos_v):
        """Bilinear (A, B) at arbitrary (roughness, cos_v), border-clamped.

        The grid stores cell centers (i + 0.5)/n, so queries beyond the
        first/last center clamp to the border cell.
        """
        r = np.asarray(roughness, np.float64)
        c = np.asarray(cos_v, np.float64)
        fi = np.clip(r * self.n_rough - 0.5, 0.0, self.n_rough - 1.0)
        fj = np.clip(c * self.n_cos - 0.5, 0.0, self.n_cos - 1.0)
        i0 = np.floor(fi).astype(np.int64)
        j0 = np.floor(fj).astype(np.int64)
        i1 = np.minimum(i0 + 1, self.n_rough - 1)
        j1 = np.minimum(j0 + 1, self.n_cos - 1)
        wi = (fi - i0)[..., None]
        wj = (fj - j0)[..., None]
        e = self.entries.astype(np.float64)
        top = e[i0, j0] * (1 - wj) + e[i0, j1] * wj
        bot = e[i1, j0] * (1 - wj) + e[i1, j1] * wj
        out = top * (1 - wi) + bot * wi
        return out[..., 0], out[..., 1]


def integrate_cell(roughness, cos_v, n_samples, seed_seq) -> tuple[float, float]:
    """Monte Carlo (A, B) for one (roughness, cos_v) pair.

    float32 vector math with float64 accumulation; the azimuth sine never
    enters the weight, so only cos(phi) is generated.
    """
    rng = np.random.Generator(np.random.Philox(seed_seq))
    one = np.float32(1)
    u1 = rng.random(n_samples, dtype=np.float32)
    u2 = rng.random(n_samples, dtype=np.float32)
    a2 = np.float32(roughness**4)
    if roughness > 0.0:
        cos_h = np.sqrt((one - u1) / (one + (a2 - one) * u1))
    else:
        cos_h = np.ones(n_samples, np.float32)
    sin_h = np.sqrt(np.maximum(np.float32(0), one - cos_h * cos_h))
    cos_phi = np.cos(np.float32(2 * np.pi) * u2)
    cv = np.float32(cos_v)
    sv = np.float32(np.sqrt(max(0.0, 1.0 - cos_v * cos_v)))
    o_dot_h = sin_h * cos_phi * sv
    o_dot_h += cos_h * cv
    n_dot_i = 2 * o_dot_h * cos_h - cv
    ok = (n_dot_i > 0) & (o_dot_h > 0)
    k = np.float32(0.5 * roughness**2)
    g1_view = np.float32(cos_v / (cos_v * (1.0 - float(k)) + float(k)))
    ni = np.maximum(n_dot_i, np.float32(1e-9))
    w = g1_view * ni / (ni * (one - k) + k)
    w *= o_dot_h
    w /= np.maximum(cv * cos_h, np.float32(1e-12))
    w *= ok
    fc = one - np.minimum(o_dot_h, one)
    fc *= fc * fc * fc * fc  # (1-x)^5
    total = float(np.sum(w, dtype=np.float64))
    b_sum = float(np.sum(fc * w, dtype=np.float64))
    return (total - b_sum) / n_samples, b_sum / n_samples


def bake_lut(n_rough=32, n_cos=32, samples_per_cell=1 << 18, seed=0, workers=1) -> BrdfLut:
    """Tabulate (A, B) over uniform cell centers (i+0.5)/n.

    Cells are independent and carry their own derived seeds, so the
    result is identical for any worker count.
    """
    if samples_per_cell < 1:
        raise ValidationError("samples_per_cell must be >= 1")
    entries = np.zeros((n_rough, n_cos, 2), np.float32)

    def run_cell(idx):
        i, j = divmod(idx, n_cos)
        r = (i + 0.5) / n_rough
        cv = (j + 0.5) / n_cos
        a, b = integrate_cell(r, cv, samples_per_cell, np.random.SeedSequence([seed, i, j]))
        return i, j, a, b

    indices = range(n_rough * n_cos)
    if workers <= 1:
        results = map(run_cell, indices)
        for i, j, a, b in results:
            entries[i, j] = (a, b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for i, j, a, b in pool.map(run_cell, indices):
                entries[i, j] = (a, b)
    return BrdfLut(np.clip(entries, 0.0, 1.05))


def save_lut(lut: BrdfLut, path) -> None:
    try:
        with open(path, "wb") as f:
            f.write(MAGIC)
            f.write(struct.pack("<II", lut.n_rough, lut.n_cos))
            f.write(lut.entries.astype("<f4").tobytes())
    except OSError as e:
        raise ImageIOError(f"cannot write {path}: {e}") from e


def load_lut(path) -> BrdfLut:
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except OSError as e:
        raise ImageIOError(f"cannot read {path}: {e}") from e
    if len(blob) < len(MAGIC) + 8 or blob[: len(MAGIC)] != MAGIC:
        raise ImageIOError(f"{path}: not a BRDF LUT file")
    n_rough, n_cos = struct.unpack_from("<II", blob, len(MAGIC))
    payload = blob[len(MAGIC) + 8 :]
    expect = n_rough * n_cos * 2 * 4
    if len(payload) != expect:
        raise ImageIOError(f"{path}: truncated LUT payload")
    entries = np.frombuffer(payload, "<f4").reshape(n_rough, n_cos, 2)
    return BrdfLut(entries.copy())
