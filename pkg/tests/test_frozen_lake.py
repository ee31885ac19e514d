import numpy as np
import pytest

from robustmdp.bisim import bisim_fixed_point, bisim_via_rpi
from robustmdp.errors import InvalidLayout
from robustmdp.frozen_lake import (
    STANDARD_4X4,
    _has_path,
    frozen_lake_mdp,
    layout_rows,
    random_layout,
    resolve_layout,
)


def test_standard_map():
    mdp = frozen_lake_mdp()
    assert mdp.n_states == 16 and mdp.actions == ("left", "down", "right", "up")
    assert mdp.states[5] == "r1c1"
    for s in (5, 7, 11, 12, 15):
        assert np.allclose(mdp.transition[s, :, s], 1.0)
        assert np.all(mdp.reward[s] == 0.0)


def test_slip_probabilities():
    mdp = frozen_lake_mdp(slip=0.3)
    # "down" from r0c1 goes to r1c1 (hole) with 0.7, slips to r0c0 / r0c2 with 0.15 each
    P = mdp.transition[1, 1]
    assert P[5] == pytest.approx(0.7) and P[0] == pytest.approx(0.15)
    assert P[2] == pytest.approx(0.15)
    assert mdp.reward[1, 1] == pytest.approx(0.7 * -10 + 0.3 * -1)


def test_off_grid_moves_stay():
    mdp = frozen_lake_mdp(slip=1 / 3)
    # "left" from r0c0: the intended move and the "up" slip leave the grid
    assert mdp.transition[0, 0, 0] == pytest.approx(2 / 3 + 1 / 6)
    assert mdp.transition[0, 0, 4] == pytest.approx(1 / 6)


def test_deterministic_without_slip():
    mdp = frozen_lake_mdp(slip=0.0)
    assert set(np.unique(mdp.transition)) <= {0.0, 1.0}
    assert mdp.reward[14, 2] == 100.0


def test_two_by_two_without_holes():
    mdp = frozen_lake_mdp(2, 0.0, layout=None)
    assert mdp.n_states == 4
    assert mdp.transition[0, 2, 1] == 1.0 and mdp.reward[1, 1] == 100.0


@pytest.mark.parametrize("rows", [
    ("SF", "FF", "FG"),
    ("SX", "FG"),
    ("FS", "FG"),
    ("SG", "FG"),
])
def test_bad_layouts(rows):
    with pytest.raises(InvalidLayout):
        frozen_lake_mdp(len(rows), layout=rows)


def test_layout_size_mismatch():
    with pytest.raises(InvalidLayout):
        resolve_layout(5, STANDARD_4X4)
    with pytest.raises(InvalidLayout):
        frozen_lake_mdp(1)


@pytest.mark.parametrize("seed", range(10))
def test_seeded_layouts_are_solvable_and_reproducible(seed):
    holes = random_layout(6, seed)
    assert _has_path(holes)
    assert not holes[0, 0] and not holes[-1, -1]
    assert np.array_equal(holes, random_layout(6, seed))


def test_layout_rows_roundtrip():
    assert layout_rows(resolve_layout(4, STANDARD_4X4)) == STANDARD_4X4


def test_absorbing_cells_are_bisimilar():
    mdp = frozen_lake_mdp(3, layout=("SFF", "FHF", "FFG"))
    # the goal and a hole both loop with reward 0
    assert bisim_via_rpi(mdp, "r1c1", "r2c2") == pytest.approx(0.0, abs=1e-9)
    assert bisim_fixed_point(mdp)[4, 8] == pytest.approx(0.0, abs=1e-9)
    assert bisim_via_rpi(mdp, "r0c0", "r2c2") > 0.0
