import math
import struct

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmlab.agents import ActionGrid
from mmlab.env import EnvState, ModelParams, Observation
from mmlab.errors import ConfigError, FormatError, NumericError, VersionError
from mmlab.tabular import (
    QTable,
    StateKey,
    TabularAgent,
    discretize,
    export_table_text,
    load_table,
    lookup,
    round_half_away,
    save_table,
    state_count_bound,
    table_stats,
    td_update,
)

K = StateKey(0, 0, 5)
K_NEXT = StateKey(1, 0, 4)


class TestDiscretize:
    def test_initial(self, params):
        assert discretize(Observation(100.0, 0, 1.0), params) == (0, 0, 200)

    def test_price_steps(self, params):
        assert params.price_step == pytest.approx(0.141421, abs=1e-6)
        assert discretize(Observation(100.2828, 0, 0.5), params).price_steps == 2
        assert discretize(Observation(100.0 - 0.2828, 0, 0.5), params).price_steps == -2

    def test_terminal_and_inventory(self, params):
        assert discretize(Observation(100.0, -7, 0.0), params) == (0, -7, 0)

    def test_zero_volatility(self):
        p = ModelParams(sigma=0.0)
        assert discretize(Observation(100.0, 0, 1.0), p).price_steps == 0

    def test_round_half_away(self):
        assert [round_half_away(x) for x in (0.5, 1.5, -0.5, -1.5, 0.49, -2.51)] == [1, 2, -1, -2, 0, -3]

    def test_steps_remaining_matches_index(self, params):
        for i in range(params.n_steps + 1):
            key = discretize(Observation(100.0, 0, EnvState(i, 100.0, 0, 0, False).time_left(params)), params)
            assert key.steps_remaining == params.n_steps - i


class TestTable:
    def test_fresh_lookup(self):
        t = QTable()
        assert lookup(t, K, 3) == 0.0
        assert table_stats(t)["nonzero_entries"] == 0

    def test_store_roundtrip(self):
        t = QTable()
        t.store(K, 4, 3.2)
        assert lookup(t, K, 4) == 3.2
        assert lookup(t, K_NEXT, 4) == 0.0
        assert lookup(t, K, 5) == 0.0

    def test_td_update_examples(self):
        t = QTable()
        assert td_update(t, K, 0, 1.0, K_NEXT, 0.6, 1.0) == pytest.approx(0.6)
        assert table_stats(t)["nonzero_entries"] == 1

        t = QTable()
        t.store(K, 0, 2.0)
        t.store(K_NEXT, 7, 3.0)
        assert td_update(t, K, 0, 1.0, K_NEXT, 0.6, 1.0) == pytest.approx(3.2)

    def test_fixed_point(self):
        t = QTable()
        t.store(K, 2, 4.0)
        t.store(K_NEXT, 0, 3.0)
        assert td_update(t, K, 2, 1.0, K_NEXT, 0.37, 1.0) == 4.0

    def test_terminal_bootstrap_is_zero(self):
        t = QTable()
        terminal = StateKey(0, 0, 0)
        t.store(terminal, 0, 100.0)
        assert td_update(t, K, 0, 1.0, terminal, 1.0, 1.0) == 1.0
        assert td_update(t, StateKey(0, 0, 1), 0, 2.0, None, 1.0, 1.0) == 2.0

    def test_non_finite_reward(self):
        with pytest.raises(NumericError):
            td_update(QTable(), K, 0, float("nan"), K_NEXT, 0.5, 1.0)

    @given(
        old=st.floats(-100, 100),
        r=st.floats(-100, 100),
        nxt=st.floats(-100, 100),
        alpha=st.floats(0.01, 1.0),
        gamma=st.floats(0, 1),
    )
    def test_contraction(self, old, r, nxt, alpha, gamma):
        t = QTable()
        t.store(K, 0, old)
        t.store(K_NEXT, 0, nxt)
        target = r + gamma * max(nxt, 0.0)
        new = td_update(t, K, 0, r, K_NEXT, alpha, gamma)
        assert abs(new - target) == pytest.approx((1 - alpha) * abs(old - target), abs=1e-9)

    def test_two_step_chain_converges_to_backward_induction(self):
        # chain s0 -(a)-> s1 -(b)-> terminal with fixed rewards per action
        rewards0 = [1.0, -0.5, 2.0]
        rewards1 = [0.3, 1.7, -1.0]
        s0, s1, end = StateKey(0, 0, 2), StateKey(0, 0, 1), StateKey(0, 0, 0)
        t = QTable(n_actions=3)
        for _ in range(200):
            for a in range(3):
                td_update(t, s1, a, rewards1[a], end, 0.6, 1.0)
            for a in range(3):
                td_update(t, s0, a, rewards0[a], s1, 0.6, 1.0)
        v1 = max(rewards1)
        for a in range(3):
            assert t.lookup(s1, a) == pytest.approx(rewards1[a], abs=1e-6)
            assert t.lookup(s0, a) == pytest.approx(rewards0[a] + v1, abs=1e-6)

    def test_stats(self):
        t = QTable()
        t.store(K, 0, -2.0)
        t.store(K, 3, 5.0)
        t.store(K_NEXT, 1, 0.0)
        assert table_stats(t) == {"states": 2, "nonzero_entries": 2, "min_value": -2.0, "max_value": 5.0}


def test_state_count_bound():
    # 401**2 * 200 * 21 is the figure quoted for N=200, 21 actions
    assert state_count_bound(200, 21, include_terminal=False) == 675_364_200
    assert state_count_bound(200, 21) == 401**2 * 201 * 21


class TestCheckpoint:
    def make(self):
        t = QTable(21, 200, ModelParams().params_hash())
        t.store(StateKey(-3, 2, 150), 4, 1.0 / 3.0)
        t.store(StateKey(-3, 2, 150), 20, -7.25e-300)
        t.store(StateKey(12, -9, 1), 0, math.pi)
        return t

    def test_roundtrip_bit_exact(self, tmp_path):
        t = self.make()
        save_table(t, tmp_path / "q.bin")
        back = load_table(tmp_path / "q.bin")
        assert back == t
        assert back.n_steps == 200 and back.params_hash == t.params_hash
        for key, a, v in t.items():
            assert struct.pack("<d", back.lookup(key, a)) == struct.pack("<d", v)

    def test_empty_table_roundtrip(self, tmp_path):
        save_table(QTable(), tmp_path / "q.bin")
        assert load_table(tmp_path / "q.bin") == QTable()

    def test_empty_file(self, tmp_path):
        (tmp_path / "q.bin").write_bytes(b"")
        with pytest.raises(FormatError):
            load_table(tmp_path / "q.bin")

    def test_truncated(self, tmp_path):
        save_table(self.make(), tmp_path / "q.bin")
        data = (tmp_path / "q.bin").read_bytes()
        (tmp_path / "q.bin").write_bytes(data[:-5])
        with pytest.raises(FormatError):
            load_table(tmp_path / "q.bin")

    def test_newer_version(self, tmp_path):
        save_table(self.make(), tmp_path / "q.bin")
        data = bytearray((tmp_path / "q.bin").read_bytes())
        data[8:12] = struct.pack("<I", 2)
        (tmp_path / "q.bin").write_bytes(bytes(data))
        with pytest.raises(VersionError):
            load_table(tmp_path / "q.bin")

    def test_wrong_magic(self, tmp_path):
        (tmp_path / "q.bin").write_bytes(b"x" * 100)
        with pytest.raises(FormatError):
            load_table(tmp_path / "q.bin")

    def test_text_export_parses_back(self, tmp_path):
        t = self.make()
        export_table_text(t, tmp_path / "q.csv")
        lines = (tmp_path / "q.csv").read_text().splitlines()
        assert lines[0].startswith("# mmlab-qtable version=1")
        assert lines[1] == "price_steps,inventory,steps_remaining,action,value"
        back = QTable(21)
        for line in lines[2:]:
            ps, inv, sr, a, v = line.split(",")
            back.store(StateKey(int(ps), int(inv), int(sr)), int(a), float(v))
        assert back == t


class TestTabularAgent:
    def test_greedy_and_unseen(self, params, grid):
        t = QTable.for_params(params, grid)
        t.store(StateKey(0, 0, 200), 3, 1.0)
        t.store(StateKey(0, 0, 200), 17, 1.0)
        agent = TabularAgent(t, grid)
        assert agent.action(EnvState(0, 100.0, 0.0, 0, False), params) == 3
        assert agent.action(EnvState(5, 100.0, 0.0, 0, False), params) == grid.middle

    def test_shape_mismatch(self, params):
        t = QTable(21, 200)
        with pytest.raises(ConfigError):
            TabularAgent(t, ActionGrid(11)).check_compatible(params)
        with pytest.raises(ConfigError):
            TabularAgent(t, ActionGrid()).check_compatible(ModelParams(dt=0.05))
