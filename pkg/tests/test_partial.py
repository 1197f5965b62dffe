import math

import numpy as np
import pytest

from polarcomp.blocks import OpCounter, PartitionedMatrix
from polarcomp.coding import encode
from polarcomp.construction import build_construction
from polarcomp.errors import FetchError, UndecodablePatternError, ValidationError
from polarcomp.partial import (
    PartialPlan,
    encode_decode_partial,
    in_memory_encode_task,
    plan_partial,
    simulate_partial_decodability_time,
)
from polarcomp.runtime import default_model


def test_plan_single_subcode_degenerate():
    plan = plan_partial(100, 1, 8, 0.25)
    assert plan.p == 1
    assert plan.row_ranges == ((0, 100),)
    assert plan.sub_constructions[0].n_workers == 8


def test_plan_twenty_workers_as_sixteen_plus_four():
    plan = plan_partial(100, 2, [16, 4], 0.25)
    assert [c.n_workers for c in plan.sub_constructions] == [16, 4]
    assert [c.n_data for c in plan.sub_constructions] == [12, 3]
    assert [len(c.frozen_set) for c in plan.sub_constructions] == [4, 1]
    assert plan.row_ranges == ((0, 80), (80, 100))  # 4/5 and 1/5 of the rows


def test_plan_equal_split():
    plan = plan_partial(1000, 4, 8, 0.25)
    assert plan.row_ranges == ((0, 250), (250, 500), (500, 750), (750, 1000))
    # identical sub-constructions when sizes match
    assert len(set(plan.sub_constructions)) == 1


def test_plan_validation():
    with pytest.raises(ValidationError):
        plan_partial(100, 0, 8, 0.25)
    with pytest.raises(ValidationError):
        plan_partial(2, 4, 8, 0.25)
    with pytest.raises(ValidationError):
        plan_partial(100, 2, [16], 0.25)
    with pytest.raises(ValidationError):
        PartialPlan(
            sub_constructions=(build_construction(4, 0.25),),
            row_ranges=((5, 10),),  # does not start at row 0
        )


def test_partial_round_trip_full_outputs():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((40, 6))
    x = rng.standard_normal((6, 3))
    plan = plan_partial(40, 2, 8, 0.25)
    y = encode_decode_partial(a, x, plan)
    assert np.allclose(y, a @ x, rtol=1e-10)


def test_partial_with_missing_decodable_output():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((30, 4))
    x = rng.standard_normal((4, 2))
    plan = plan_partial(30, 2, 4, 0.5)
    available = [[0, 2, 3], None]  # drop worker 1 of sub-code 0
    y = encode_decode_partial(a, x, plan, available=available)
    assert np.allclose(y, a @ x, rtol=1e-10)


def test_partial_names_failing_subcode():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((30, 4))
    x = rng.standard_normal((4, 2))
    plan = plan_partial(30, 2, 4, 0.5)
    with pytest.raises(UndecodablePatternError, match="sub-code 1"):
        encode_decode_partial(a, x, plan, available=[None, [1, 3]])


def test_partial_decode_work_matches_formula():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((64, 4))
    x = rng.standard_normal((4, 2))
    n_total = 32
    for p in (1, 2, 4):
        n_per = n_total // p
        plan = plan_partial(64, p, n_per, 0.25)
        counters = [OpCounter() for _ in range(p)]
        y = encode_decode_partial(a, x, plan, counters=counters)
        assert np.allclose(y, a @ x, rtol=1e-10)
        per_code = n_per * int(math.log2(n_per))
        assert [c.block_ops for c in counters] == [per_code] * p
        assert sum(c.block_ops for c in counters) == n_total * int(math.log2(n_per))


def test_in_memory_encode_matches_master_side():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((24, 5))
    x_cols = 5
    plan = plan_partial(24, 2, 8, 0.25)
    store = {}
    key = 0
    master_blocks = []
    for s, c in enumerate(plan.sub_constructions):
        start, stop = plan.row_ranges[s]
        part = PartitionedMatrix.partition(a[start:stop], c.n_data)
        for blk in part.blocks:
            store[key] = blk
            key += 1
        master_blocks.extend(encode(c, part))
    for worker in range(plan.total_workers):
        got = in_memory_encode_task(worker, plan, store)
        assert np.allclose(got, master_blocks[worker], atol=1e-12)


def test_in_memory_encode_n2_fetches_only_the_data_block():
    plan = plan_partial(4, 1, 2, 0.5)  # frozen {0}, data {1}
    fetched = []

    def fetch(key):
        fetched.append(key)
        return np.full((4, 2), 7.0)

    got = in_memory_encode_task(0, plan, fetch)
    assert fetched == [0]
    assert np.allclose(got, np.full((4, 2), 7.0))


def test_in_memory_encode_frozen_only_row_is_zero():
    # freeze channel 1 of an N=2 code: worker 1's generator row has no data deps
    from polarcomp.construction import select_frozen_set

    flipped = select_frozen_set([0.25, 0.75], 1)
    assert flipped.frozen_set == (1,)
    plan = PartialPlan(sub_constructions=(flipped,), row_ranges=((0, 4),))
    got = in_memory_encode_task(1, plan, {}, block_shape=(4, 2))
    assert got.shape == (4, 2) and not got.any()
    with pytest.raises(ValidationError):
        in_memory_encode_task(1, plan, {})  # needs block_shape


def test_in_memory_encode_missing_block_raises_fetch_error():
    plan = plan_partial(8, 1, 4, 0.5)
    with pytest.raises(FetchError):
        in_memory_encode_task(0, plan, {})


def test_straggler_resilience_monotone_in_p():
    model = default_model()
    means = []
    for p in (1, 2, 4, 8):
        plan = plan_partial(256, p, 64 // p, 0.25)
        times = simulate_partial_decodability_time(plan, model, trials=400, seed=9)
        means.append(times.mean())
    assert all(means[i] <= means[i + 1] + 1e-12 for i in range(len(means) - 1))
