import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmhybrid import (ArrayGeometry, DimensionMismatch, FixtureMissing, PathAngles,
                      build_statistical_csi, effective_channel, fixture_angles, make_rng,
                      sample_channel, sample_path_angles, steering_vector)
from mmhybrid.channel import assemble_channel, channel_batch, load_angles, sample_gains

from conftest import random_csi


def test_steering_broadside():
    np.testing.assert_allclose(steering_vector(ArrayGeometry(4), 0.0), np.full(4, 0.5))


def test_steering_endfire():
    np.testing.assert_allclose(steering_vector(2, np.pi / 2), np.array([1, -1]) / np.sqrt(2),
                               atol=1e-15)


def test_steering_inner_product_against_direct_sum():
    a = steering_vector(64, np.pi / 4)
    b = steering_vector(64, np.pi / 4 + 0.3)
    assert np.linalg.norm(a) == pytest.approx(1.0, abs=1e-12)
    psi = np.pi * (np.sin(np.pi / 4 + 0.3) - np.sin(np.pi / 4))
    direct = sum(np.exp(-1j * n * psi) for n in range(64)) / 64
    assert abs(np.vdot(a, b)) == pytest.approx(abs(direct), abs=1e-12)


def test_geometry_validation():
    with pytest.raises(ValueError):
        ArrayGeometry(0)
    with pytest.raises(ValueError):
        ArrayGeometry(4, 0.25)


def test_laplacian_variance_and_mean():
    rng = make_rng(1)
    spread = np.pi / 18
    draws = np.concatenate([sample_path_angles(rng, 1000, 0.3, np.pi / 4, spread).aod
                            for _ in range(100)])
    assert draws.var() == pytest.approx(spread ** 2, rel=0.02)
    se = draws.std() / np.sqrt(draws.size)
    assert abs(draws.mean() - np.pi / 4) < 3 * se


def test_uniform_mean_shared_by_paths():
    ang = sample_path_angles(make_rng(2), 6, "uniform", np.pi / 4, spread=1e-6)
    assert np.ptp(ang.aoa) < 1e-4
    assert 0 <= ang.aoa.mean() <= 2 * np.pi


def test_sampling_reproducible():
    a = sample_path_angles(make_rng(3), 6, "uniform", 0.5)
    b = sample_path_angles(make_rng(3), 6, "uniform", 0.5)
    np.testing.assert_array_equal(a.aoa, b.aoa)
    np.testing.assert_array_equal(a.aod, b.aod)


def test_sampling_rejects_bad_args():
    with pytest.raises(ValueError):
        sample_path_angles(make_rng(0), 3, 0.0, 0.0, spread=0)
    with pytest.raises(ValueError):
        sample_path_angles(make_rng(0), 3, "normal", 0.0)


def test_example1_fixture_verbatim():
    ang = fixture_angles("example1")
    np.testing.assert_allclose(ang.aod, [0.7468, 0.8778, 0.8219, 0.8823, 1.0332, 1.1444])
    csi = build_statistical_csi(ang, 32, 64)
    assert csi.A_r.shape == (32, 6) and csi.A_t.shape == (64, 6)
    np.testing.assert_allclose(np.linalg.norm(csi.A_r, axis=0), 1, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(csi.A_t, axis=0), 1, atol=1e-12)


@pytest.mark.parametrize("name,L", [("example1", 6), ("example2", 6), ("example3", 8),
                                    ("example4", 5)])
def test_all_fixtures_load(name, L):
    assert fixture_angles(name).L == L


def test_missing_fixture():
    with pytest.raises(FixtureMissing):
        fixture_angles("example9")
    with pytest.raises(FixtureMissing):
        load_angles("/nonexistent/a.txt", "/nonexistent/b.txt")


def test_angle_length_mismatch():
    with pytest.raises(DimensionMismatch):
        PathAngles([0.1, 0.2], [0.3])


def test_single_path_csi():
    csi = build_statistical_csi(PathAngles([0.4], [1.1]), 8, 16)
    assert csi.A_t.shape == (16, 1)
    assert np.linalg.norm(csi.A_t) == pytest.approx(1.0)


def test_dft_aligned_receive_gram_is_identity():
    Nr = 16
    aoa = np.arcsin(2 * np.arange(4) / Nr)
    csi = build_statistical_csi(PathAngles(aoa, np.zeros(4)), Nr, 8)
    np.testing.assert_allclose(csi.receive_gram(), np.eye(4), atol=1e-12)


def test_columns_match_steering_vectors():
    csi = random_csi(4, 8, 12, 3)
    ang = sample_path_angles(make_rng(4, 99), 3, "uniform", np.pi / 4)
    for l in range(3):
        np.testing.assert_allclose(csi.A_r[:, l], steering_vector(8, ang.aoa[l]))
        np.testing.assert_allclose(csi.A_t[:, l], steering_vector(12, ang.aod[l]))


def test_mean_channel_energy():
    csi = random_csi(5, 8, 16, 4)
    rng = make_rng(5)
    e = np.array([np.linalg.norm(sample_channel(rng, csi).H) ** 2 for _ in range(10000)])
    se = e.std() / np.sqrt(e.size)
    assert abs(e.mean() - 8 * 16) < 3 * se


def test_zero_gain_channel():
    csi = random_csi(6, 4, 8, 3)
    assert np.all(assemble_channel(csi, np.zeros(3)).H == 0)


def test_single_path_rank_one():
    csi = build_statistical_csi(PathAngles([0.2], [0.9]), 6, 10)
    H = assemble_channel(csi, [1.0]).H
    np.testing.assert_allclose(H, np.sqrt(60) * np.outer(csi.A_r[:, 0], csi.A_t[:, 0].conj()))
    assert np.linalg.matrix_rank(H) == 1


def test_reconstruction_identity():
    csi = random_csi(7, 6, 10, 3)
    real = sample_channel(make_rng(7), csi)
    rebuilt = real.scale * csi.A_r @ np.diag(real.gains) @ csi.A_t.conj().T
    np.testing.assert_allclose(real.H, rebuilt, atol=1e-12)


def test_channel_batch_matches_single():
    csi = random_csi(8, 4, 6, 2)
    g = sample_gains(make_rng(8), csi, 5)
    batch = channel_batch(csi, g)
    for i in range(5):
        np.testing.assert_allclose(batch[i], assemble_channel(csi, g[i]).H, atol=1e-12)


def test_effective_channel():
    rng = make_rng(9)
    H = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    np.testing.assert_array_equal(effective_channel(H, np.eye(4)), H)
    assert np.all(effective_channel(H, np.zeros((4, 2))) == 0)
    F = rng.standard_normal((4, 2)) + 0j
    naive = np.array([[sum(H[i, t] * F[t, j] for t in range(4)) for j in range(2)]
                      for i in range(4)])
    np.testing.assert_allclose(effective_channel(H, F), naive, atol=1e-12)
    with pytest.raises(DimensionMismatch):
        effective_channel(H, np.zeros((3, 2)))


def test_gram_convergence_with_array_size():
    means = []
    for Nr in (8, 32, 128):
        errs = []
        for d in range(200):
            ang = sample_path_angles(make_rng(10, d), 4, "uniform", np.pi / 4)
            csi = build_statistical_csi(ang, Nr, 4)
            errs.append(np.linalg.norm(csi.receive_gram() - np.eye(4)))
        means.append(np.mean(errs))
    assert means[0] > means[1] > means[2]


def test_csv_dump(tmp_path):
    csi = random_csi(11, 3, 4, 2)
    csi.to_csv(tmp_path / "csi.csv")
    lines = (tmp_path / "csi.csv").read_text().splitlines()
    assert len(lines) == 3 + 4
    first = [float(v) for v in lines[0].split(",")[2:]]
    np.testing.assert_allclose(first[0::2] + 1j * np.array(first[1::2]), csi.A_r[0])


@settings(max_examples=30, deadline=None)
@given(N=st.integers(1, 200), theta=st.floats(-10, 10))
def test_steering_unit_norm(N, theta):
    assert np.linalg.norm(steering_vector(N, theta)) == pytest.approx(1.0, abs=1e-12)
