import math

import numpy as np
import pytest
from scipy.stats import chi2

from icompose.bsdf import (
    MaterialSample,
    eval_bsdf,
    eval_diffuse,
    eval_specular,
    eval_transmission,
    f0_effective,
    f0_from_ior,
    fresnel_schlick,
    ggx_d,
    lobe_weights,
    mirror_through_plane,
    normalize,
    sample_ggx_h,
    smith_g,
    transmission_half_vector,
)
from icompose.errors import ValidationError

from oracles import ndf_normalization_stratified, ndf_normalization_uniform_mc

Z = np.array([0.0, 0.0, 1.0])


def specular_oracle(w_o, w_i, n, f0, roughness):
    """Scalar re-derivation of the microfacet lobe, independent of the
    library's vectorized path."""
    hx, hy, hz = (a + b for a, b in zip(w_o, w_i))
    norm = math.sqrt(hx * hx + hy * hy + hz * hz)
    h = (hx / norm, hy / norm, hz / norm)
    ndh = sum(a * b for a, b in zip(n, h))
    odh = sum(a * b for a, b in zip(w_o, h))
    ndo = sum(a * b for a, b in zip(n, w_o))
    ndi = sum(a * b for a, b in zip(n, w_i))
    a2 = roughness**4
    d = a2 / (math.pi * (ndh * ndh * (a2 - 1.0) + 1.0) ** 2)
    k = roughness**2 / 2.0
    g = (ndo / (ndo * (1 - k) + k)) * (ndi / (ndi * (1 - k) + k))
    f = f0 + (1 - f0) * (1 - odh) ** 5
    return d * f * g / (4.0 * ndo * ndi)


def random_upper_dir(rng):
    v = rng.standard_normal(3)
    v /= np.linalg.norm(v)
    v[2] = abs(v[2]) + 1e-3
    return v / np.linalg.norm(v)


# --- normal distribution -------------------------------------------------

def test_ggx_rough_one_is_uniform():
    for c in (0.0, 0.3, 0.99, 1.0):
        assert ggx_d(c, 1.0) == pytest.approx(1.0 / math.pi, abs=1e-12)


def test_ggx_peak_at_half_roughness():
    assert ggx_d(1.0, 0.5) == pytest.approx(16.0 / math.pi, rel=1e-12)


def test_ggx_mirror_is_a_delta():
    # r=0 collapses to a delta: infinite at the normal, zero elsewhere;
    # samplers special-case this instead of evaluating the density
    assert np.isinf(ggx_d(1.0, 0.0))
    assert ggx_d(0.999, 0.0) == 0.0
    assert ggx_d(0.2, 0.0) == 0.0


def test_ggx_normalization_uniform_mc():
    val = ndf_normalization_uniform_mc(0.6, 1 << 22, seed=11)
    assert val == pytest.approx(1.0, abs=0.01)


@pytest.mark.parametrize("r", [0.2, 0.5, 1.0])
def test_ggx_normalization_stratified(r):
    val = ndf_normalization_stratified(r, 1 << 20, seed=5)
    assert val == pytest.approx(1.0, abs=0.01)


# --- fresnel --------------------------------------------------------------

def test_fresnel_normal_incidence():
    assert fresnel_schlick(1.0, 0.04) == pytest.approx(0.04, abs=1e-12)


def test_fresnel_grazing():
    assert fresnel_schlick(0.0, 0.04) == pytest.approx(1.0, abs=1e-12)


def test_fresnel_half_angle():
    assert fresnel_schlick(0.5, 0.04) == pytest.approx(0.07, abs=1e-12)


def test_fresnel_rgb_broadcast():
    out = fresnel_schlick(np.array([1.0, 0.0]), np.array([0.1, 0.2, 0.3]))
    assert out.shape == (2, 3)
    assert np.allclose(out[0], [0.1, 0.2, 0.3])
    assert np.allclose(out[1], 1.0)


def test_f0_values():
    assert f0_from_ior(1.5) == pytest.approx(0.04, abs=1e-12)
    assert f0_from_ior(1.0) == 0.0
    assert f0_from_ior(2.0) == pytest.approx(1.0 / 9.0, rel=1e-12)


def test_f0_effective_dielectric():
    mat = MaterialSample(albedo=[1, 0, 0], metallic=0.0, ior=1.5)
    assert np.allclose(f0_effective(mat), [0.04, 0.04, 0.04])


def test_f0_effective_metal_uses_albedo():
    mat = MaterialSample(albedo=[1, 0, 0], metallic=1.0)
    assert np.allclose(f0_effective(mat), [1, 0, 0])


def test_f0_effective_half_metal():
    mat = MaterialSample(albedo=[1, 0, 0], metallic=0.5, ior=1.5)
    assert np.allclose(f0_effective(mat), [0.52, 0.02, 0.02])


# --- shadowing ------------------------------------------------------------

def test_smith_unit_cosines():
    for r in (0.1, 0.5, 1.0):
        assert smith_g(1.0, 1.0, r) == pytest.approx(1.0, abs=1e-12)


def test_smith_zero_roughness():
    assert smith_g(0.3, 0.7, 0.0) == 1.0


def test_smith_half_cosines():
    # k = r^2/2 = 0.25 at r^2 = 0.5
    assert smith_g(0.5, 0.5, math.sqrt(0.5)) == pytest.approx(0.64, abs=1e-12)


def test_smith_rejects_nonpositive():
    with pytest.raises(ValidationError):
        smith_g(0.0, 0.5, 0.3)


# --- lobes ---------------------------------------------------------------

def test_diffuse_values():
    assert np.allclose(eval_diffuse(MaterialSample(albedo=[1, 1, 1])), 1 / math.pi)
    assert np.allclose(eval_diffuse(MaterialSample(albedo=[0, 0, 0])), 0.0)
    out = eval_diffuse(MaterialSample(albedo=[0.5, 0.25, 0.0]))
    assert np.allclose(out, [0.15915, 0.07958, 0.0], atol=1e-5)


def test_specular_normal_incidence_rough_one():
    mat = MaterialSample(albedo=[1, 1, 1], roughness=1.0, metallic=0.0, ior=1.5)
    out = eval_specular(Z, Z, Z, mat)
    assert np.allclose(out, (1 / math.pi) * 0.04 / 4.0, rtol=1e-9)


def test_specular_below_hemisphere_is_zero():
    mat = MaterialSample(roughness=0.4)
    w_i = normalize([0.1, 0.0, -0.9])
    assert np.allclose(eval_specular(Z, w_i, Z, mat), 0.0)


def test_specular_matches_scalar_oracle():
    rng = np.random.default_rng(42)
    for _ in range(200):
        w_o = random_upper_dir(rng)
        w_i = random_upper_dir(rng)
        r = rng.uniform(0.05, 1.0)
        mat = MaterialSample(albedo=[0.5, 0.5, 0.5], roughness=r, metallic=0.0, ior=1.5)
        got = eval_specular(w_o, w_i, Z, mat)[0]
        want = specular_oracle(w_o, w_i, Z, 0.04, r)
        assert got == pytest.approx(want, rel=1e-6, abs=1e-9)


def test_specular_reciprocity():
    rng = np.random.default_rng(1234)
    for _ in range(1000):
        w_o = random_upper_dir(rng)
        w_i = random_upper_dir(rng)
        mat = MaterialSample(albedo=[0.8, 0.6, 0.2], roughness=rng.uniform(0.05, 1.0),
                             metallic=rng.uniform(0, 1))
        ab = eval_specular(w_o, w_i, Z, mat)
        ba = eval_specular(w_i, w_o, Z, mat)
        assert np.all(np.abs(ab - ba) <= 1e-6 + 1e-6 * np.abs(ab))


def test_transmission_peak_is_mirrored_specular_peak():
    mat = MaterialSample(albedo=[1, 1, 1], roughness=0.05, transparency=1.0)
    w_o = normalize([0.3, 0.0, 0.95])
    w_i_spec = np.array([-w_o[0], -w_o[1], w_o[2]])  # mirror direction
    w_i_tran = mirror_through_plane(w_i_spec, Z)
    spec = eval_specular(w_o, w_i_spec, Z, mat)
    tran = eval_transmission(w_o, w_i_tran, Z, mat)
    assert np.allclose(spec, tran, rtol=1e-12)
    # straight-through really is the lobe peak
    off = eval_transmission(w_o, normalize([0.5, 0.1, -0.8]), Z, mat)
    assert np.all(off < tran)


def test_transmission_vanishes_at_grazing():
    mat = MaterialSample(roughness=0.3, transparency=1.0)
    w_o = normalize([0.2, 0.0, 0.98])
    vals = []
    for eps in (0.1, 0.01, 0.001):
        w_i = normalize([0.7, 0.0, -eps])
        vals.append(eval_transmission(w_o, w_i, Z, mat)[0] * eps)
    # f_t itself diverges like 1/cos; the product with the geometry
    # cosine (the quantity entering the transport integral) goes to 0
    assert vals[1] < vals[0]
    assert vals[2] < vals[1]


def test_transmission_rejects_upper_hemisphere():
    mat = MaterialSample(transparency=1.0)
    with pytest.raises(ValidationError):
        eval_transmission(Z, normalize([0.1, 0.0, 0.5]), Z, mat)


def test_transmission_integral_equals_specular_integral():
    # jittered-stratified MC over both hemispheres; the mirrored-lobe
    # construction makes the integrals equal
    r = 0.3
    mat = MaterialSample(albedo=[1, 1, 1], roughness=r, transparency=1.0)
    w_o = normalize([0.5, 0.0, math.sqrt(1 - 0.25)])
    n_ct, n_phi = 512, 512
    rng = np.random.default_rng(77)
    ct = (np.arange(n_ct)[:, None] + rng.random((n_ct, n_phi))) / n_ct
    phi = (np.arange(n_phi)[None, :] + rng.random((n_ct, n_phi))) / n_phi * 2 * np.pi
    st = np.sqrt(1 - ct**2)
    w_up = np.stack([st * np.cos(phi), st * np.sin(phi), ct], axis=-1).reshape(-1, 3)
    spec = eval_specular(w_o, w_up, Z, mat)[:, 0] * w_up[:, 2]
    int_spec = spec.mean() * 2 * np.pi

    rng = np.random.default_rng(78)
    ct = (np.arange(n_ct)[:, None] + rng.random((n_ct, n_phi))) / n_ct
    phi = (np.arange(n_phi)[None, :] + rng.random((n_ct, n_phi))) / n_phi * 2 * np.pi
    st = np.sqrt(1 - ct**2)
    w_dn = np.stack([st * np.cos(phi), st * np.sin(phi), -ct], axis=-1).reshape(-1, 3)
    tran = eval_transmission(w_o, w_dn, Z, mat)[:, 0] * ct.reshape(-1)
    int_tran = tran.mean() * 2 * np.pi
    assert int_tran == pytest.approx(int_spec, rel=0.01)


# --- combined material ---------------------------------------------------

def test_bsdf_metal_is_specular_only():
    mat = MaterialSample(albedo=[0.9, 0.5, 0.3], roughness=0.4, metallic=1.0)
    w_o = normalize([0.2, 0.1, 0.95])
    w_i = normalize([-0.3, 0.2, 0.9])
    full = eval_bsdf(w_o, w_i, Z, mat)
    assert np.allclose(full, eval_specular(w_o, w_i, Z, mat))


def test_bsdf_glass_routes_by_hemisphere():
    mat = MaterialSample(albedo=[1, 1, 1], roughness=0.3, transparency=1.0)
    w_o = normalize([0.2, 0.0, 0.95])
    up = normalize([-0.1, 0.2, 0.9])
    down = normalize([-0.1, 0.2, -0.9])
    assert np.allclose(eval_bsdf(w_o, up, Z, mat), eval_specular(w_o, up, Z, mat))
    assert np.allclose(eval_bsdf(w_o, down, Z, mat),
                       eval_transmission(w_o, down, Z, mat))
    assert f0_effective(mat) == pytest.approx(0.04)


def test_bsdf_dielectric_sums_diffuse_and_specular():
    mat = MaterialSample(albedo=[0.6, 0.6, 0.6], roughness=0.5)
    w_o = normalize([0.0, 0.1, 0.99])
    w_i = normalize([0.3, -0.2, 0.93])
    want = eval_diffuse(mat) + eval_specular(w_o, w_i, Z, mat)
    assert np.allclose(eval_bsdf(w_o, w_i, Z, mat), want)


def test_lobe_weights_triple():
    mat = MaterialSample(roughness=0.5, metallic=0.25, transparency=0.0)
    assert lobe_weights(mat) == (0.75, 1.0, 0.0)
    glass = MaterialSample(transparency=0.6)
    assert lobe_weights(glass) == pytest.approx((0.4, 1.0, 0.6))


def test_transmission_half_vector_straight_through_points_up():
    h = transmission_half_vector([0.0, 0.0, 1.0], [0.0, 0.0, -1.0], eta=1.5)
    assert np.allclose(h, [0.0, 0.0, 1.0])


def test_material_forces_metal_off_when_transparent():
    mat = MaterialSample(metallic=1.0, transparency=0.5)
    assert mat.metallic == 0.0
    assert MaterialSample(metallic=1.0, transparency=0.0).metallic == 1.0


def test_material_range_validation():
    with pytest.raises(ValidationError):
        MaterialSample(roughness=1.5)
    with pytest.raises(ValidationError):
        MaterialSample(albedo=[2, 0, 0])
    with pytest.raises(ValidationError):
        MaterialSample(ior=0.9)


# --- sampling -------------------------------------------------------------

def test_sampler_origin_maps_to_normal():
    h = sample_ggx_h(0.0, 0.0, 0.5)
    assert np.allclose(h, Z)


def test_sampler_mirror_limit():
    h = sample_ggx_h(np.linspace(0, 0.99, 16), np.linspace(0, 0.99, 16), 0.0)
    assert np.allclose(h, Z)


def test_sampler_chi_square_against_density():
    r = 0.5
    n = 1_000_000
    rng = np.random.default_rng(2024)
    h = sample_ggx_h(rng.random(n), rng.random(n), r)
    cos_t = h[:, 2]
    a2 = r**4

    def tail(c):  # P(cos >= c) under D(h)(n.h)
        return (1 - c * c) / (1 + c * c * (a2 - 1))

    edges = np.linspace(0.0, 1.0, 65)
    counts, _ = np.histogram(cos_t, bins=edges)
    probs = tail(edges[:-1]) - tail(edges[1:])
    expected = probs * n
    stat = np.sum((counts - expected) ** 2 / expected)
    assert stat < chi2.ppf(0.99, len(edges) - 2)

    phi = np.arctan2(h[:, 1], h[:, 0])
    counts, _ = np.histogram(phi, bins=np.linspace(-np.pi, np.pi, 33))
    expected = n / 32
    stat = np.sum((counts - expected) ** 2 / expected)
    assert stat < chi2.ppf(0.99, 31)


def test_sampler_rotated_frame():
    axis = normalize([0.3, -0.5, 0.8])
    h = sample_ggx_h(np.zeros(4), np.zeros(4), 0.3, n=axis)
    assert np.allclose(h, axis)
