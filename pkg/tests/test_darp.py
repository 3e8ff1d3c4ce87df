import numpy as np
import pytest

from mcpp.darp import (
    DarpParams,
    bfs_distance,
    default_tolerance,
    divide,
    division_cost,
    owner_raster,
    region_connected,
    validate_shares,
    write_trace_csv,
)
from mcpp.errors import FleetConfigurationError, InfeasiblePartitionError, InputDomainError
from mcpp.grid import NodeGrid


def _check_partition(grid, res):
    free = grid.free_mask
    assert np.array_equal(res.owner >= 0, free)
    assert sum(res.counts) == free.sum()
    for i, s in enumerate(res.starts):
        assert res.owner[s] == i
        assert region_connected(res, i)


def test_equal_split_of_open_square():
    grid = NodeGrid.from_mask(np.ones((20, 20), bool), starts=[(0, 0), (19, 0), (0, 19), (19, 19)])
    res = divide(grid)
    assert res.converged
    assert all(abs(k - 100) <= 1 for k in res.counts)
    _check_partition(grid, res)


def test_single_uav_takes_everything():
    free = np.ones((6, 5), bool)
    free[2, 2] = False
    grid = NodeGrid.from_mask(free, starts=[(0, 0)])
    res = divide(grid)
    assert res.counts == (29,)
    assert res.converged and res.iterations == 0


def test_uav_count_equal_to_free_nodes():
    free = np.ones((2, 2), bool)
    grid = NodeGrid.from_mask(free, starts=[(0, 0), (1, 0), (0, 1), (1, 1)])
    res = divide(grid)
    assert res.counts == (1, 1, 1, 1)


def test_proportional_shares_with_obstacles():
    rng = np.random.default_rng(3)
    shares = (0.15, 0.40, 0.45)
    hits = 0
    for seed in range(20):
        free = rng.random((30, 30)) > 0.1
        free &= _largest(free)
        cells = np.argwhere(free)
        starts = [tuple(c) for c in cells[rng.choice(len(cells), 3, replace=False)]]
        grid = NodeGrid.from_mask(free, starts=starts)
        res = divide(grid, shares, seed=seed)
        _check_partition(grid, res)
        tol = max(1, 0.005 * res.total)
        hits += bool(np.all(np.abs(res.errors()) <= tol))
    assert hits >= 19


def _largest(mask):
    from mcpp.grid import largest_component

    return largest_component(mask)


def test_start_walled_in_by_other_starts_stays_unbalanced():
    # UAV 0 in a corner whose only neighbours are other UAVs' start nodes
    grid = NodeGrid.from_mask(np.ones((20, 20), bool), starts=[(0, 0), (1, 0), (0, 1), (1, 1)])
    res = divide(grid)
    assert res.counts[0] == 1
    assert not res.converged
    _check_partition(grid, res)


def test_cost_decreases_monotonically():
    grid = NodeGrid.from_mask(np.ones((15, 15), bool), starts=[(0, 0), (14, 14), (7, 0)])
    res = divide(grid, (0.2, 0.3, 0.5))
    costs = [row.cost for row in res.trace]
    assert all(b < a for a, b in zip(costs, costs[1:]))
    assert res.cost == pytest.approx(division_cost(res.counts, res.shares, res.total))


def test_deterministic_per_seed():
    rng = np.random.default_rng(0)
    free = rng.random((25, 25)) > 0.15
    free &= _largest(free)
    cells = np.argwhere(free)
    starts = [tuple(c) for c in cells[[0, len(cells) // 2, -1]]]
    grid = NodeGrid.from_mask(free, starts=starts)
    a = divide(grid, (0.2, 0.3, 0.5), seed=5)
    b = divide(grid, (0.2, 0.3, 0.5), seed=5)
    assert np.array_equal(a.owner, b.owner)


def test_disconnected_start_is_infeasible():
    free = np.ones((6, 6), bool)
    free[3, :] = False
    grid = NodeGrid.from_mask(free, starts=[(0, 0), (5, 5)])
    with pytest.raises(InfeasiblePartitionError):
        divide(grid)


def test_unreachable_free_nodes_are_infeasible():
    free = np.ones((6, 6), bool)
    free[3, :] = False
    grid = NodeGrid.from_mask(free, starts=[(0, 0), (1, 1)])
    with pytest.raises(InfeasiblePartitionError):
        divide(grid)


def test_share_validation():
    with pytest.raises(FleetConfigurationError):
        validate_shares([0.5, 0.6])
    with pytest.raises(FleetConfigurationError):
        validate_shares([1.2, -0.2])
    grid = NodeGrid.from_mask(np.ones((4, 4), bool), starts=[(0, 0), (3, 3)])
    with pytest.raises(FleetConfigurationError):
        divide(grid, (0.2, 0.3, 0.5))


def test_region_of_unknown_uav():
    grid = NodeGrid.from_mask(np.ones((4, 4), bool), starts=[(0, 0)])
    res = divide(grid)
    with pytest.raises(InputDomainError):
        res.region(3)


def test_tolerance_scales_with_size():
    assert default_tolerance(100) == 1
    assert default_tolerance(1000) == 5
    assert DarpParams().tolerance is None


def test_bfs_distance_goes_around_walls():
    free = np.ones((5, 5), bool)
    free[1, 0:4] = False
    src = np.zeros_like(free)
    src[0, 0] = True
    d = bfs_distance(free, src)
    assert d[2, 0] == 10
    assert np.isinf(d[1, 0])


def test_trace_and_raster_outputs(tmp_path):
    grid = NodeGrid.from_mask(np.ones((8, 8), bool), starts=[(0, 0), (7, 7)])
    res = divide(grid, (0.25, 0.75))
    path = tmp_path / "darp.csv"
    write_trace_csv(path, res.trace)
    assert path.read_text().splitlines()[0] == "cycle,cost,max_error,disconnected"
    img = owner_raster(res)
    assert img.shape == (8, 8)
    assert len(np.unique(img)) == 2
