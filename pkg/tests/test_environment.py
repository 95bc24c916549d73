import numpy as np
import pytest

from swarmcomm.environment import (
    CommGrid,
    EnvConfig,
    FeatureGrid,
    GridGenerationError,
    feature_at,
    generate_comm_grid,
    generate_feature_grid,
    quality_at,
)


def rng(seed=0):
    return np.random.default_rng(seed)


class TestEnvConfig:
    def test_defaults_valid(self):
        EnvConfig()

    @pytest.mark.parametrize("kwargs", [
        {"size": 1},
        {"feature_ratio": 0.0},
        {"feature_ratio": 1.0},
        {"feature_ratio": 1.5},
        {"denial_ratio": -0.1},
        {"denial_ratio": 1.0},
        {"env_kind": "nope"},
        {"gradient_width": -1.0},
        {"feature_count": 3},
    ])
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            EnvConfig(**kwargs)


class TestFeatureGrid:
    # round(r_f * size^2): 0.65*4096 = 2662.4 -> 2662; 0.53*4096 = 2170.88 -> 2171
    @pytest.mark.parametrize("size,rf,expected", [
        (64, 0.65, 2662),
        (64, 0.53, 2171),
        (2, 0.5, 2),
    ])
    def test_exact_one_count(self, size, rf, expected):
        cfg = EnvConfig(size=size, feature_ratio=rf)
        grid = generate_feature_grid(cfg, rng(7))
        assert int(grid.cells.sum()) == expected

    def test_count_exact_for_many_seeds(self):
        cfg = EnvConfig(size=32, feature_ratio=0.65)
        want = int(np.floor(0.65 * 32 * 32 + 0.5))
        for seed in range(25):
            grid = generate_feature_grid(cfg, rng(seed))
            assert int(grid.cells.sum()) == want

    def test_deterministic_for_seed(self):
        cfg = EnvConfig(size=48, feature_ratio=0.53)
        a = generate_feature_grid(cfg, rng(123))
        b = generate_feature_grid(cfg, rng(123))
        assert np.array_equal(a.cells, b.cells)

    def test_values_binary(self):
        grid = generate_feature_grid(EnvConfig(size=16), rng(1))
        assert set(np.unique(grid.cells)) <= {0, 1}


class TestCommGridUniform:
    def test_all_ones(self):
        cfg = EnvConfig(size=32, env_kind="uniform", denial_ratio=0.0)
        grid = generate_comm_grid(cfg, rng(0))
        assert np.all(grid.cells == 1.0)

    def test_rc_zero_any_kind_is_clear(self):
        for kind in ("continuous", "distributed"):
            cfg = EnvConfig(size=32, env_kind=kind, denial_ratio=0.0)
            grid = generate_comm_grid(cfg, rng(0))
            assert np.all(grid.cells == 1.0)


class TestCommGridContinuous:
    def test_denied_count_within_tolerance(self):
        cfg = EnvConfig(size=64, env_kind="continuous", denial_ratio=0.5)
        grid = generate_comm_grid(cfg, rng(3))
        denied = np.count_nonzero(grid.cells == 0.0)
        assert abs(denied - 2048) <= 82  # 0.02 * 64^2 = 81.92 -> 82

    def test_denied_region_connected(self):
        # single disk: denied cells form one 4-connected component
        cfg = EnvConfig(size=48, env_kind="continuous", denial_ratio=0.3)
        grid = generate_comm_grid(cfg, rng(11))
        mask = grid.cells == 0.0
        seen = np.zeros_like(mask)
        seeds = np.argwhere(mask)
        stack = [tuple(seeds[0])]
        seen[tuple(seeds[0])] = True
        while stack:
            x, y = stack.pop()
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                nx, ny = x + dx, y + dy
                if 0 <= nx < 48 and 0 <= ny < 48 and mask[nx, ny] and not seen[nx, ny]:
                    seen[nx, ny] = True
                    stack.append((nx, ny))
        assert np.array_equal(seen, mask)


class TestCommGridDistributed:
    def test_denied_count_within_tolerance(self):
        cfg = EnvConfig(size=64, env_kind="distributed", denial_ratio=0.5,
                        patch_count=64, patch_radius=4)
        grid = generate_comm_grid(cfg, rng(5))
        denied = np.count_nonzero(grid.cells == 0.0)
        assert abs(denied - 2048) <= 82

    def test_unreachable_ratio_raises(self):
        # 2 disks of radius 2 cannot deny half of a 64x64 arena
        cfg = EnvConfig(size=64, env_kind="distributed", denial_ratio=0.5,
                        patch_count=2, patch_radius=2)
        with pytest.raises(GridGenerationError):
            generate_comm_grid(cfg, rng(0))


class TestDeniedFractionSweep:
    # spec invariant: +-0.02 of r_c across 100 seeds of both kinds
    @pytest.mark.parametrize("kind", ["continuous", "distributed"])
    def test_hundred_seeds(self, kind):
        cfg = EnvConfig(size=64, env_kind=kind, denial_ratio=0.5,
                        patch_count=64, patch_radius=4)
        for seed in range(100):
            grid = generate_comm_grid(cfg, rng(seed))
            assert abs(grid.denied_fraction() - 0.5) <= 0.02 + 1e-12


class TestGradient:
    def test_linear_ramp_value(self):
        # clamp(dist/width): distance 2 with width 4 -> 0.5
        cfg = EnvConfig(size=64, env_kind="continuous", denial_ratio=0.3,
                        gradient_width=4.0)
        grid = generate_comm_grid(cfg, rng(2))
        vals = grid.cells[(grid.cells > 0) & (grid.cells < 1)]
        assert vals.size > 0  # a ramp exists around the region

    def test_adjacent_cells_continuity(self):
        # distance field is 1-Lipschitz, so |dq| <= 1/width between neighbors
        cfg = EnvConfig(size=64, env_kind="distributed", denial_ratio=0.4,
                        gradient_width=4.0, patch_count=64, patch_radius=4)
        grid = generate_comm_grid(cfg, rng(9))
        q = grid.cells
        outside = q > 0
        bound = 1.0 / 4.0 + 1e-9
        dx = np.abs(np.diff(q, axis=0))
        ok_x = outside[:-1, :] & outside[1:, :]
        assert np.all(dx[ok_x] <= bound)
        dy = np.abs(np.diff(q, axis=1))
        ok_y = outside[:, :-1] & outside[:, 1:]
        assert np.all(dy[ok_y] <= bound)

    def test_zero_width_is_hard_cutoff(self):
        cfg = EnvConfig(size=32, env_kind="continuous", denial_ratio=0.3,
                        gradient_width=0.0)
        grid = generate_comm_grid(cfg, rng(4))
        assert set(np.unique(grid.cells)) <= {0.0, 1.0}


class TestPointQueries:
    def test_feature_at_reads_containing_cell(self):
        cells = np.zeros((4, 4), dtype=np.int8)
        cells[0, 0] = 1
        grid = FeatureGrid(cells=cells)
        assert feature_at(grid, (0.5, 0.5)) == 1
        assert feature_at(grid, (3.9, 3.9)) == 0

    def test_feature_at_corner_cell(self):
        cells = np.zeros((64, 64), dtype=np.int8)
        cells[63, 63] = 1
        grid = FeatureGrid(cells=cells)
        assert feature_at(grid, (63.9, 63.9)) == 1

    def test_out_of_bounds_rejected(self):
        grid = FeatureGrid(cells=np.zeros((64, 64), dtype=np.int8))
        with pytest.raises(ValueError):
            feature_at(grid, (64.0, 0.0))
        with pytest.raises(ValueError):
            feature_at(grid, (-0.1, 1.0))

    def test_quality_at(self):
        cells = np.ones((4, 4))
        cells[2, 1] = 0.0
        cells[3, 3] = 0.5
        grid = CommGrid(cells=cells)
        assert quality_at(grid, (2.5, 1.5)) == 0.0
        assert quality_at(grid, (3.5, 3.5)) == 0.5
        assert quality_at(grid, (0.0, 0.0)) == 1.0
        with pytest.raises(ValueError):
            quality_at(grid, (1.0, 4.0))


class TestSerialization:
    def test_feature_roundtrip(self, tmp_path):
        cfg = EnvConfig(size=16, feature_ratio=0.53)
        grid = generate_feature_grid(cfg, rng(42), seed=42)
        path = tmp_path / "feat.csv"
        grid.save(path)
        loaded = FeatureGrid.load(path)
        assert np.array_equal(loaded.cells, grid.cells)
        assert loaded.seed == 42
        assert loaded.config.feature_ratio == 0.53

    def test_comm_roundtrip_exact(self, tmp_path):
        cfg = EnvConfig(size=16, env_kind="distributed", denial_ratio=0.3,
                        patch_count=16, patch_radius=3)
        grid = generate_comm_grid(cfg, rng(8), seed=8)
        path = tmp_path / "comm.csv"
        grid.save(path)
        loaded = CommGrid.load(path)
        assert np.array_equal(loaded.cells, grid.cells)
        assert loaded.config.env_kind == "distributed"
