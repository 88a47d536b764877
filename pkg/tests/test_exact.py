"""
test_exact.py
"""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from needles.errors import OutOfRangeError, UnsupportedNeedleCountError
from needles.example_special_cases import special_case_coefficients
from needles.exact import (
    conjectured_direction,
    expectation,
    f_coeff,
    g,
    h,
    joint_matrix,
    joint_matrix_at,
    p_at_least_one,
    p_exact,
    perturbed_coefficient,
    pm_n3_candidates,
    probe_monotonicity,
    reduce_alpha,
)
from needles.geometry import StarSpec, ThrowConfig
from tests.testing_parameters import EXACT_MATRIX_DF, FULL_RANGE_MATRIX_DF, SPECIAL_CASES_N5
from tests.utils import config_from_row


def test_g_h_values():
    assert g(0.0, 0.2) == 0.2
    assert h(0.0, 0.2) == -0.2
    assert math.isclose(g(math.pi / 2, 0.3), 1.0, rel_tol=1e-15)


def test_f0_golden_value():
    mpmath.mp.dps = 30
    x = mpmath.pi / 5
    expected = 2 * (x + mpmath.sin(x)) * mpmath.cos(x / 2) ** 2
    assert math.isclose(f_coeff(0, 0.0, StarSpec(5)), float(expected), rel_tol=1e-14)


@pytest.mark.parametrize("n", [3, 5, 7, 9])
def test_f3_at_symmetry_point(n):
    beta = math.pi / (2 * n)
    assert math.isclose(f_coeff(3, beta, StarSpec(n)), beta * math.sin(math.pi / n), rel_tol=1e-12)


@pytest.mark.parametrize("n", [3, 5, 9])
def test_f0_is_flat_at_symmetry_point(n):
    star = StarSpec(n)
    beta = math.pi / (2 * n)
    step = 1e-4
    # one-sided second order difference
    f = [f_coeff(0, beta - j * step, star) for j in range(3)]
    slope = (3 * f[0] - 4 * f[1] + f[2]) / (2 * step)
    assert abs(slope) < 1e-6


def test_f_coeff_rejects_bad_input():
    with pytest.raises(OutOfRangeError):
        f_coeff(10, 0.0, StarSpec(5))
    with pytest.raises(OutOfRangeError):
        f_coeff(0, 0.5, StarSpec(5))
    with pytest.raises(UnsupportedNeedleCountError):
        f_coeff(0, 0.0, StarSpec(4))


@pytest.mark.parametrize(
    "alpha, alpha_eff, delta, mirrored",
    [
        (math.pi / 5, 0.0, math.pi / 5, False),
        (math.pi / 2, math.pi / 10, 2 * math.pi / 5, False),
        (3 * math.pi / 20, math.pi / 20, 0.0, True),
    ],
)
def test_reduce_alpha(alpha, alpha_eff, delta, mirrored):
    reduced = reduce_alpha(StarSpec(5), alpha)
    assert math.isclose(reduced.alpha_eff, alpha_eff, abs_tol=1e-15)
    assert math.isclose(reduced.delta, delta, abs_tol=1e-15)
    assert reduced.mirrored is mirrored


@pytest.mark.parametrize("alpha", SPECIAL_CASES_N5)
def test_special_case_coefficients_n5(alpha):
    table = special_case_coefficients(alpha, 1 / 3, 1 / 4)
    expected = SPECIAL_CASES_N5[alpha]
    assert np.allclose(table.c, expected["c"], rtol=2e-5, atol=0)
    assert np.allclose(table.linear, expected["linear"], rtol=2e-5, atol=1e-12)


def test_special_case_alpha_pi_over_5_reduces_to_zero():
    config = ThrowConfig.from_ratios(5, 1 / 3, 1 / 4)
    assert np.allclose(p_exact(config, math.pi / 5).p, p_exact(config, 0.0).p, rtol=0, atol=1e-12)


@pytest.mark.parametrize("row", [row for _, row in EXACT_MATRIX_DF.iterrows()])
def test_normalisation_and_expectation(row):
    config = config_from_row(row)
    p = p_exact(config)
    assert len(p) == 2 * config.star.max_intersections + 1
    assert abs(p.total() - 1.0) <= 1e-12
    assert abs(p.mean() - expectation(config)) <= 1e-10
    assert np.all(p.p >= -1e-12)


@pytest.mark.parametrize("row", [row for _, row in FULL_RANGE_MATRIX_DF.iterrows()])
def test_normalisation_and_symmetry_over_full_alpha_range(row):
    config = config_from_row(row, row.alpha)
    n, alpha = config.star.n, config.lattice.alpha
    p = p_exact(config)
    assert abs(p.total() - 1.0) <= 1e-12
    assert abs(p.mean() - 2 * n * (config.lam + config.mu) / math.pi) <= 1e-10
    assert np.allclose(p_exact(config, alpha + math.pi / n).p, p.p, rtol=0, atol=1e-12)
    assert np.allclose(p_exact(config, math.pi / n - alpha).p, p.p, rtol=0, atol=1e-12)


@pytest.mark.parametrize("row", [row for _, row in EXACT_MATRIX_DF.iterrows()])
def test_diagonal_sums_of_joint_matrix(row):
    config = config_from_row(row)
    alpha_eff = reduce_alpha(config.star, config.lattice.alpha).alpha_eff
    joint = joint_matrix(config, alpha_eff)
    assert abs(joint.total() - 1.0) <= 1e-12
    assert np.allclose(joint.diagonal_sums().p, p_exact(config).p, rtol=0, atol=1e-12)


@pytest.mark.parametrize("row", [row for _, row in EXACT_MATRIX_DF.iterrows()])
def test_family_swap_transposes_joint_matrix(row):
    config = config_from_row(row)
    lam, mu = row.lam_mu
    swapped = ThrowConfig.from_ratios(config.star.n, mu, lam, config.lattice.alpha)
    alpha_eff = reduce_alpha(config.star, config.lattice.alpha).alpha_eff
    original = joint_matrix(config, alpha_eff).entries
    assert np.allclose(joint_matrix(swapped, alpha_eff).entries, original.T, rtol=0, atol=1e-12)


@pytest.mark.parametrize("n", [3, 5, 7])
def test_mirror_transposes_joint_matrix_of_swapped_families(n):
    config = ThrowConfig.from_ratios(n, 0.3, 0.2)
    swapped = ThrowConfig.from_ratios(n, 0.2, 0.3)
    for alpha in np.linspace(0.01, math.pi / n - 0.01, 9):
        mirrored = joint_matrix_at(config, math.pi / n - alpha).entries
        assert np.allclose(mirrored, joint_matrix_at(swapped, alpha).entries.T, rtol=0, atol=1e-12)
        assert np.allclose(mirrored, joint_matrix_at(config, alpha).entries, rtol=0, atol=1e-12)


def test_sum_of_joint_matrix_n7():
    config = ThrowConfig.from_ratios(7, 0.2, 0.15, math.pi / 30)
    assert abs(joint_matrix_at(config).total() - 1.0) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(
    n=st.sampled_from([3, 5, 7, 9]),
    alpha=st.floats(min_value=1e-3, max_value=math.pi / 2 - 1e-3),
)
def test_periodicity_and_mirror_symmetry(n, alpha):
    config = ThrowConfig.from_ratios(n, 0.3, 0.2)
    p = p_exact(config, alpha).p
    assert np.allclose(p_exact(config, alpha + math.pi / n).p, p, rtol=0, atol=1e-12)
    assert np.allclose(p_exact(config, math.pi / n - alpha).p, p, rtol=0, atol=1e-12)


@pytest.mark.parametrize("n", [3, 5, 9])
def test_at_least_one_is_complement_of_p0(n):
    for alpha in np.linspace(0.0, math.pi / (2 * n), 7):
        config = ThrowConfig.from_ratios(n, 0.3, 0.2)
        assert abs(p_at_least_one(config, alpha) - (1.0 - p_exact(config, alpha)[0])) <= 1e-12


def test_at_least_one_single_lattice():
    config = ThrowConfig.from_ratios(7, 0.3, 0.0)
    expected = 2 * 7 * 0.3 / math.pi * math.sin(math.pi / 7)
    assert math.isclose(p_at_least_one(config, 0.1), expected, rel_tol=1e-12)


@pytest.mark.parametrize("n", [3, 5, 9])
def test_at_least_one_increases_towards_symmetry_point(n):
    config = ThrowConfig.from_ratios(n, 0.3, 0.2)
    alphas = np.linspace(1e-4, math.pi / (2 * n) - 1e-4, 40)
    values = [p_at_least_one(config, alpha) for alpha in alphas]
    assert np.all(np.diff(values) > 0)


def test_expectation_value():
    config = ThrowConfig.from_ratios(5, 1 / 3, 1 / 4)
    assert math.isclose(expectation(config), 10 * (7 / 12) / math.pi, rel_tol=1e-15)
    assert math.isclose(expectation(config), 1.856, abs_tol=1e-3)


def test_even_n_points_to_simulator():
    with pytest.raises(UnsupportedNeedleCountError, match="simulate"):
        p_exact(ThrowConfig.from_ratios(4, 0.2, 0.2))


def test_pm_n3_candidates_differ():
    config = ThrowConfig.from_ratios(3, 0.2, 0.2)
    candidates = pm_n3_candidates(config, 0.1)
    assert candidates["theorem"] == p_exact(config, 0.1)[2]
    assert abs(candidates["theorem"] - candidates["proof"]) > 1e-6
    with pytest.raises(OutOfRangeError):
        pm_n3_candidates(ThrowConfig.from_ratios(5, 0.2, 0.2))


def test_perturbed_coefficient_is_restored():
    config = ThrowConfig.from_ratios(5, 0.2, 0.2)
    before = p_exact(config, 0.1).p
    with perturbed_coefficient(4, 1e-3):
        assert not np.allclose(p_exact(config, 0.1).p, before, rtol=0, atol=1e-12)
    assert np.array_equal(p_exact(config, 0.1).p, before)


def test_conjectured_directions():
    assert conjectured_direction(0, 3) == "decreasing"
    assert conjectured_direction(1, 3) == "increasing"
    assert conjectured_direction(5, 3) == "increasing"
    assert conjectured_direction(6, 3) == "decreasing"


@pytest.mark.parametrize("n", [3, 5, 9])
def test_probe_confirms_proved_direction_of_p0(n):
    probe = probe_monotonicity(ThrowConfig.from_ratios(n, 0.3, 0.2))
    assert list(probe.columns) == ["i", "conjectured", "observed", "holds", "proved"]
    first = probe.iloc[0]
    assert first.proved and first.observed == "decreasing" and first.holds
    assert probe.proved.sum() == 1
