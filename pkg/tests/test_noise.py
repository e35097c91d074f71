import numpy as np
import pytest

from tamedsde.core import DomainError
from tamedsde.noise import (
    IncrementArray,
    NoisePlan,
    aggregate_increments,
    generate_increments,
)


def _plan(path_id=0, seed=42, m=1, fine_n=8, horizon=1.0):
    return NoisePlan(seed, path_id, m, fine_n, horizon)


def test_identical_plans_give_bit_identical_arrays():
    a = generate_increments(_plan())
    b = generate_increments(_plan())
    assert np.array_equal(a.increments, b.increments)
    assert np.array_equal(a.step_sizes, b.step_sizes)


def test_streams_differ_across_paths_and_seeds():
    base = generate_increments(_plan(path_id=0)).increments
    assert not np.array_equal(base, generate_increments(_plan(path_id=1)).increments)
    assert not np.array_equal(base, generate_increments(_plan(seed=43)).increments)


def test_path_generation_is_order_independent():
    # Generating path 5 alone matches generating it after other paths.
    for _ in range(3):
        generate_increments(_plan(path_id=9))
    alone = generate_increments(_plan(path_id=5)).increments
    again = generate_increments(_plan(path_id=5)).increments
    assert np.array_equal(alone, again)


def test_invalid_plans_rejected():
    with pytest.raises(DomainError):
        NoisePlan(1, 0, 0, 8, 1.0)
    with pytest.raises(DomainError):
        NoisePlan(1, 0, 1, 0, 1.0)
    with pytest.raises(DomainError):
        NoisePlan(1, 0, 1, 8, 0.0)
    with pytest.raises(DomainError):
        NoisePlan(-1, 0, 1, 8, 1.0)


def test_increment_shapes_and_short_final_step():
    arr = generate_increments(_plan(fine_n=4, horizon=0.7))
    assert arr.increments.shape == (3, 1)
    assert np.allclose(arr.step_sizes, [0.25, 0.25, 0.2])
    assert not arr.increments.flags.writeable


def test_sample_moments_match_gaussian_law():
    # CLT bound: each increment's sample mean over M paths lies in
    # +-4 sqrt(h/M); chi-square concentration puts the sample variance in
    # h (1 +- 5 sqrt(2/M)).
    M = 100_000
    fine_n, m, h = 4, 2, 0.25
    total = np.zeros((4, m))
    total_sq = np.zeros((4, m))
    for pid in range(M):
        inc = generate_increments(_plan(path_id=pid, seed=2024, m=m, fine_n=fine_n)).increments
        total += inc
        total_sq += inc**2
    mean = total / M
    var = total_sq / M - mean**2
    assert np.all(np.abs(mean) <= 4.0 * np.sqrt(h / M))
    assert np.all(np.abs(var - h) <= h * 5.0 * np.sqrt(2.0 / M))


# --- aggregation -------------------------------------------------------------


def test_aggregate_pairs():
    fine = IncrementArray(
        increments=np.array([[1.0], [2.0], [4.0], [8.0]]),
        step_sizes=np.full(4, 0.25),
        n=4,
        horizon=1.0,
    )
    coarse = aggregate_increments(fine, 2)
    assert np.array_equal(coarse.increments, [[3.0], [12.0]])
    assert np.array_equal(coarse.step_sizes, [0.5, 0.5])


def test_aggregate_identity_at_same_resolution():
    fine = generate_increments(_plan(fine_n=8))
    same = aggregate_increments(fine, 8)
    assert np.array_equal(same.increments, fine.increments)


def test_aggregate_rejects_non_divisible():
    fine = generate_increments(_plan(fine_n=8))
    with pytest.raises(DomainError):
        aggregate_increments(fine, 3)
    with pytest.raises(DomainError):
        aggregate_increments(fine, 0)


def test_nested_aggregation_is_exact():
    # Aggregating 8 -> 2 -> 1 must be bit-identical to 8 -> 1.
    fine = generate_increments(_plan(seed=7, m=3, fine_n=8))
    via_two = aggregate_increments(aggregate_increments(fine, 2), 1)
    direct = aggregate_increments(fine, 1)
    assert np.array_equal(via_two.increments, direct.increments)
    # Brute-force summation agrees up to roundoff.
    assert np.allclose(direct.increments[0], fine.increments.sum(axis=0), rtol=1e-12)


def test_nested_aggregation_exact_with_clamped_horizon():
    fine = generate_increments(_plan(seed=5, m=2, fine_n=8, horizon=1.3))
    for mid in (4, 2):
        nested = aggregate_increments(aggregate_increments(fine, mid), 1)
        direct = aggregate_increments(fine, 1)
        assert np.array_equal(nested.increments, direct.increments)
        assert np.array_equal(nested.step_sizes, direct.step_sizes)


def test_aggregate_conserves_total():
    fine = generate_increments(_plan(seed=9, m=2, fine_n=64, horizon=2.5))
    for coarse_n in (32, 8, 1):
        coarse = aggregate_increments(fine, coarse_n)
        assert np.allclose(
            coarse.increments.sum(axis=0), fine.increments.sum(axis=0), rtol=1e-12
        )
        assert coarse.step_sizes.sum() == pytest.approx(2.5, rel=1e-12)


def test_aggregate_clamped_grid_groups_tail_correctly():
    fine = IncrementArray(
        increments=np.arange(1.0, 7.0)[:, None],  # T=1.5 at fine_n=4: 6 steps
        step_sizes=np.full(6, 0.25),
        n=4,
        horizon=1.5,
    )
    coarse = aggregate_increments(fine, 2)
    # Intervals [0,.5],[ .5,1],[1,1.5] -> sums (1+2),(3+4),(5+6)
    assert np.array_equal(coarse.increments, [[3.0], [7.0], [11.0]])
