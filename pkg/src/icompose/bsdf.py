"""Scattering model for extended PBR materials.

A material is five scalars: albedo (RGB), roughness, metallic,
transparency and IOR. The surface response combines a Lambertian diffuse
lobe, a GGX microfacet reflection lobe (Schlick Fresnel, Smith-Schlick
shadowing with k = r^2/2) and, for thin transparent surfaces, a
transmission lobe that mirrors the reflection lobe through the surface
plane. Transparent materials force metallic to zero.

All functions broadcast over numpy arrays; direction vectors are unit
length, stored in the trailing axis of shape (..., 3). Roughness zero is
a perfect mirror: the distribution becomes a delta, so samplers treat it
as an explicit special case rather than evaluating the density.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

DEFAULT_IOR = 1.5  # gives F0 = 0.04, the usual dielectric reflectance


def normalize(v):
    v = np.asarray(v, np.float64)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.maximum(n, 1e-300)


def dot(a, b):
    return np.sum(np.asarray(a, np.float64) * np.asarray(b, np.float64), axis=-1)


def reflect(v, n):
    """Mirror v about the axis n (both unit)."""
    v = np.asarray(v, np.float64)
    n = np.asarray(n, np.float64)
    return 2.0 * dot(v, n)[..., None] * n - v


def mirror_through_plane(v, n):
    """Flip the component of v along the plane normal n."""
    v = np.asarray(v, np.float64)
    n = np.asarray(n, np.float64)
    return v - 2.0 * dot(v, n)[..., None] * n


@dataclass(frozen=True)
class MaterialSample:
    """Per-shading-point material scalars, range-checked on construction.

    Transparency > 0 forces metallic to 0 (a transparent metal is not a
    physical material), so `metallic` always stores the effective value.
    """

    albedo: np.ndarray = field(default_factory=lambda: np.ones(3))
    roughness: float = 0.5
    metallic: float = 0.0
    transparency: float = 0.0
    ior: float = DEFAULT_IOR

    def __post_init__(self):
        a = np.asarray(self.albedo, np.float64).reshape(3)
        if np.any(a < 0) or np.any(a > 1):
            raise ValidationError(f"albedo out of [0,1]: {a}")
        for name in ("roughness", "metallic", "transparency"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} out of [0,1]: {v}")
        if self.ior < 1.0:
            raise ValidationError(f"ior must be >= 1, got {self.ior}")
        a.flags.writeable = False
        object.__setattr__(self, "albedo", a)
        if self.transparency > 0.0:
            object.__setattr__(self, "metallic", 0.0)

    @property
    def diffuse_weight(self) -> float:
        return (1.0 - self.transparency) * (1.0 - self.metallic)


def lobe_weights(mat: MaterialSample) -> tuple[float, float, float]:
    """(diffuse, reflection, transmission) mixing weights:
    ((1-t)(1-m), 1, t)."""
    return mat.diffuse_weight, 1.0, mat.transparency


def ggx_d(n_dot_h, r):
    """GGX normal distribution; alpha = r^2, so the density uses r^4.

    At r=0 this is a delta lobe: returns +inf at n_dot_h=1 and 0
    elsewhere. Samplers must special-case the mirror instead of calling
    this.
    """
    c = np.asarray(n_dot_h, np.float64)
    a2 = np.float64(r) ** 4
    denom = np.pi * (c * c * (a2 - 1.0) + 1.0) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(denom > 0.0, a2 / np.where(denom > 0, denom, 1.0), np.inf)
    return out


def fresnel_coefficient(o_dot_h):
    """The Schlick grazing term (1 - o.h)^5."""
    x = 1.0 - np.clip(np.asarray(o_dot_h, np.float64), 0.0, 1.0)
    return x ** 5


def fresnel_schlick(o_dot_h, f0):
    """Schlick Fresnel: F0 + (1 - F0) (1 - o.h)^5.

    An F0 with trailing dimension 3 is treated as RGB and broadcast per
    channel against any batch shape of o_dot_h.
    """
    f0 = np.asarray(f0, np.float64)
    fc = fresnel_coefficient(o_dot_h)
    if f0.shape[-1:] == (3,):
        fc = np.asarray(fc)[..., None]
    return f0 + (1.0 - f0) * fc


def f0_from_ior(eta) -> float:
    """Normal-incidence reflectance of a dielectric: (1-eta)^2/(1+eta)^2."""
    eta = float(eta)
    if eta < 1.0:
        raise ValidationError(f"ior must be >= 1, got {eta}")
    return (1.0 - eta) ** 2 / (1.0 + eta) ** 2


def f0_effective(mat: MaterialSample) -> np.ndarray:
    """F0 blended toward the albedo for metals."""
    base = np.full(3, f0_from_ior(mat.ior))
    return base * (1.0 - mat.metallic) + mat.albedo * mat.metallic


def smith_g(n_dot_o, n_dot_i, r):
    """Smith shadowing-masking with the Schlick form, k = r^2/2."""
    no = np.asarray(n_dot_o, np.float64)
    ni = np.asarray(n_dot_i, np.float64)
    if np.any(no <= 0) or np.any(ni <= 0):
        raise ValidationError("smith_g needs strictly positive cosines")
    k = 0.5 * np.float64(r) ** 2
    return (no / (no * (1.0 - k) + k)) * (ni / (ni * (1.0 - k) + k))


def _half_vector(w_o, w_i):
    return normalize(np.asarray(w_o, np.float64) + np.asarray(w_i, np.float64))


def eval_diffuse(mat: MaterialSample) -> np.ndarray:
    """Lambertian lobe: albedo / pi."""
    return mat.albedo / np.pi


def eval_specular(w_o, w_i, n, mat: MaterialSample):
    """Microfacet reflection: D F G / (4 (o.n)(i.n)).

    Zero outside the upper hemisphere and for degenerate w_o = -w_i.
    """
    w_o = np.asarray(w_o, np.float64)
    w_i = np.asarray(w_i, np.float64)
    n = np.asarray(n, np.float64)
    n_dot_o = dot(w_o, n)
    n_dot_i = dot(w_i, n)
    valid = (n_dot_o > 0) & (n_dot_i > 0) & (dot(w_o, w_i) > -1.0 + 1e-12)
    h = _half_vector(w_o, w_i)
    n_dot_h = np.clip(dot(n, h), 0.0, 1.0)
    o_dot_h = np.clip(dot(w_o, h), 0.0, 1.0)
    d = ggx_d(n_dot_h, mat.roughness)
    f = fresnel_schlick(o_dot_h, f0_effective(mat))
    safe_no = np.where(valid, n_dot_o, 1.0)
    safe_ni = np.where(valid, n_dot_i, 1.0)
    k = 0.5 * mat.roughness ** 2
    g = (safe_no / (safe_no * (1.0 - k) + k)) * (safe_ni / (safe_ni * (1.0 - k) + k))
    scalar = np.where(valid, d * g / (4.0 * safe_no * safe_ni), 0.0)
    return np.asarray(scalar)[..., None] * f


def transmission_half_vector(w_o, w_i, eta=DEFAULT_IOR):
    """Half vector of the refraction pair: -(w_o + eta*w_i) normalized."""
    return -normalize(np.asarray(w_o, np.float64) + eta * np.asarray(w_i, np.float64))


def eval_transmission(w_o, w_i, n, mat: MaterialSample):
    """Thin-surface transmission lobe for w_i below the surface.

    The lobe equals the reflection lobe mirrored through the surface
    plane: with zero thickness the entry and exit refractions cancel, so
    light continues straight and the microfacet spread is the same as in
    reflection, just on the other side. Evaluated by reflecting w_i back
    into the upper hemisphere and reusing the specular machinery.
    """
    w_i = np.asarray(w_i, np.float64)
    n = np.asarray(n, np.float64)
    if np.any(dot(w_i, n) >= 0):
        raise ValidationError("transmission direction must be below the surface")
    return eval_specular(w_o, mirror_through_plane(w_i, n), n, mat)


def eval_bsdf(w_o, w_i, n, mat: MaterialSample):
    """Full surface response, routed by the hemisphere of w_i.

    Upper hemisphere: (1-t)(1-m) f_diffuse + f_specular.
    Lower hemisphere: t * f_transmission.
    """
    w_o = np.asarray(w_o, np.float64)
    w_i = np.asarray(w_i, np.float64)
    n = np.asarray(n, np.float64)
    n_dot_i = dot(w_i, n)
    up = n_dot_i > 0
    kd = mat.diffuse_weight
    out = np.zeros(np.broadcast_shapes(w_o.shape, w_i.shape), np.float64)
    if np.any(up):
        refl = kd * eval_diffuse(mat) + eval_specular(w_o, w_i, n, mat)
        out = np.where(up[..., None], refl, out)
    if np.any(~up) and mat.transparency > 0:
        w_i_mirror = mirror_through_plane(w_i, n)
        tran = mat.transparency * eval_specular(w_o, w_i_mirror, n, mat)
        out = np.where(up[..., None], out, tran)
    return out


def sample_ggx_h(u1, u2, r, n=None):
    """Half vectors distributed proportionally to D(h)(n.h).

    Standard GGX inversion with alpha = r^2; u1=u2=0 gives h aligned
    with the normal, and r=0 always returns the normal (mirror case).
    When n is omitted the samples are in the local frame with n = +z.
    """
    u1 = np.asarray(u1, np.float64)
    u2 = np.asarray(u2, np.float64)
    if r <= 0.0:
        local = np.zeros(u1.shape + (3,))
        local[..., 2] = 1.0
    else:
        a2 = np.float64(r) ** 4
        cos_t = np.sqrt((1.0 - u1) / (1.0 + (a2 - 1.0) * u1))
        sin_t = np.sqrt(np.maximum(0.0, 1.0 - cos_t ** 2))
        phi = 2.0 * np.pi * u2
        local = np.stack(
            [sin_t * np.cos(phi), sin_t * np.sin(phi), cos_t], axis=-1
        )
    if n is None:
        return local
    return rotate_frame(local, n)


def rotate_frame(local, z_axis):
    """Rotate +z-frame vectors so the frame's z maps onto z_axis."""
    z = normalize(z_axis)
    up = np.where(np.abs(z[..., 2:3]) < 0.999, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0])
    x = normalize(np.cross(up, z))
    y = np.cross(z, x)
    local = np.asarray(local, np.float64)
    return (
        local[..., 0:1] * x + local[..., 1:2] * y + local[..., 2:3] * z
    )


def ggx_h_pdf(n_dot_h, r):
    """Density of sample_ggx_h over the hemisphere: D(h)(n.h)."""
    return ggx_d(n_dot_h, r) * np.clip(n_dot_h, 0.0, 1.0)
