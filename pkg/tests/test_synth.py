import math

import numpy as np
import pytest

from lanetrack.probmap_io import load_map
from lanetrack.synth import (
    Scenario, ScriptedLane, jittered_scenario, lane_change_scenario, lane_through, load_scenario,
    render,
    save_scenario, scenario_from_dict, scenario_to_dict, straight_scenario, write_sequence,
)
from lanetrack.evaluator import read_lanes


def one_lane(**kw):
    lane = ScriptedLane(path=((0, 0.0, 400.0),), sigma=3.0, peak=0.9)
    return Scenario(frames=3, lanes=(lane,), **kw)


def test_profile_matches_gaussian_model():
    pm, gts = render(one_lane(), 0)
    row = pm.values[0, 250].astype(np.float64)
    assert row.max() == pytest.approx(0.9, abs=1e-7)
    assert row.argmax() == 400
    assert row[397] == pytest.approx(0.9 * math.exp(-0.5), abs=1e-7)
    assert row[403] == pytest.approx(0.9 * math.exp(-0.5), abs=1e-7)
    assert not pm.values[0, :100].any()


def test_ground_truth_centreline():
    _, gts = render(one_lane(), 1)
    assert len(gts) == 1
    np.testing.assert_allclose(gts[0][:, 0], 400.0)
    assert gts[0][0, 1] == math.ceil(0.35 * 288) and gts[0][-1, 1] == 287


def test_deterministic_with_noise_and_dropout():
    sc = one_lane(noise=0.2, dropout=0.3, seed=42)
    a, _ = render(sc, 2)
    b, _ = render(sc, 2)
    assert a.values.tobytes() == b.values.tobytes()
    c, _ = render(one_lane(noise=0.2, dropout=0.3, seed=43), 2)
    assert c.values.tobytes() != a.values.tobytes()
    assert 0.0 <= a.values.min() and a.values.max() <= 1.0


def test_dropout_removes_rows():
    pm, _ = render(one_lane(dropout=0.5, seed=1), 0)
    lit = pm.values[0, 101:].max(axis=1) > 0
    assert 0.3 < lit.mean() < 0.7


def test_overlap_is_max():
    lanes = (ScriptedLane(path=((0, 0.0, 400.0),), peak=0.5),
             ScriptedLane(path=((0, 0.0, 402.0),), peak=0.9))
    pm, _ = render(Scenario(1, lanes=lanes), 0)
    assert pm.values.max() == pytest.approx(0.9, abs=1e-7)


def test_lane_change_jump():
    sc = lane_change_scenario()
    _, g14 = render(sc, 14)
    _, g15 = render(sc, 15)
    assert len(g14) == len(g15) == 2
    np.testing.assert_allclose(g15[0][-1, 0] - g14[0][-1, 0], 150.0)
    np.testing.assert_allclose(g15[1][-1, 0] - g14[1][-1, 0], 150.0)
    pm, _ = render(sc, 15)
    assert pm.channels == 3 and pm.values[2].max() == pytest.approx(0.5, abs=1e-6)


def test_visibility_window():
    lane = ScriptedLane(path=((0, 0.0, 300.0),), appear=2, disappear=4)
    sc = Scenario(6, lanes=(lane,))
    vis = [bool(render(sc, f)[0].values.any()) for f in range(6)]
    assert vis == [False, False, True, True, False, False]


def test_lane_through_vanishing_point():
    m, b = lane_through(100.0)
    assert m * 90 + b == pytest.approx(400.0)
    assert m * 287 + b == pytest.approx(100.0)


def test_scenario_file_round_trip(tmp_path):
    sc = lane_change_scenario(noise=0.1, seed=5)
    save_scenario(sc, tmp_path / "s.yaml")
    assert load_scenario(tmp_path / "s.yaml") == sc
    assert scenario_to_dict(scenario_from_dict(scenario_to_dict(sc))) == scenario_to_dict(sc)


def test_scenario_rejects_unknown_keys():
    with pytest.raises(ValueError):
        scenario_from_dict({"frames": 2, "colour": "red"})
    with pytest.raises(ValueError):
        scenario_from_dict({"frames": 2, "lanes": [{"path": [[0, 0, 1]], "width": 3}]})


def test_write_sequence(tmp_path):
    sc = straight_scenario(frames=3)
    write_sequence(sc, tmp_path)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["00000.lines.txt", "00000.lpm", "00001.lines.txt", "00001.lpm",
                     "00002.lines.txt", "00002.lpm"]
    pm, gts = render(sc, 1)
    assert load_map(tmp_path / "00001.lpm") == pm
    assert len(read_lanes(tmp_path / "00001.lines.txt")) == 2


@pytest.mark.parametrize("kw", [dict(sigma=0), dict(peak=0), dict(peak=1.2), dict(path=())])
def test_lane_validation(kw):
    args = dict(path=((0, 0.0, 1.0),))
    args.update(kw)
    with pytest.raises(ValueError):
        ScriptedLane(**args)


def test_unrendered_lane_is_ground_truth_only():
    truth = ScriptedLane(path=((0, 0.0, 300.0),), rendered=False)
    drawn = ScriptedLane(path=((0, 0.0, 500.0),), ground_truth=False)
    pm, gts = render(Scenario(frames=1, lanes=(truth, drawn)), 0)
    assert len(gts) == 1 and np.all(gts[0][:, 0] == 300.0)
    row = pm.values[0, 200]
    assert row[300] == 0.0 and row[500] == pytest.approx(0.9)


def test_jittered_scenario_wobbles_around_truth():
    sc = jittered_scenario(frames=30, jitter=5.0, slope_jitter=0.0, noise=0.0, dropout=0.0)
    truth = [ln for ln in sc.lanes if ln.ground_truth]
    drawn = [ln for ln in sc.lanes if ln.rendered]
    assert len(truth) == len(drawn) == 2
    offs = np.array([drawn[0].line(f)[1] - truth[0].line(f)[1] for f in range(30)])
    assert 2.5 < offs.std() < 8.0
    assert scenario_from_dict(scenario_to_dict(sc)) == sc
    assert jittered_scenario(seed=3) == jittered_scenario(seed=3)
