import numpy as np
import pytest

from advface.attacks import FAILURE, SUCCESS, AttackTrace
from advface.metrics import (
    SsimConfig,
    SummaryRow,
    aggregate_summary,
    annotate_trace,
    dssim,
    magnitude,
    pearson,
    read_summary_csv,
    ssim,
    summary_to_csv,
)


def brute_force_ssim(a, b, cfg=SsimConfig()):
    """Per-window loop over every valid center, recomputed from the formula."""
    k = cfg.window_size
    w = cfg.window()
    vals = []
    for ch in range(a.shape[2]):
        for i in range(a.shape[0] - k + 1):
            for j in range(a.shape[1] - k + 1):
                x = a[i:i + k, j:j + k, ch]
                y = b[i:i + k, j:j + k, ch]
                mx = (w * x).sum()
                my = (w * y).sum()
                vx = (w * x * x).sum() - mx**2
                vy = (w * y * y).sum() - my**2
                cov = (w * x * y).sum() - mx * my
                vals.append(((2 * mx * my + cfg.c1) * (2 * cov + cfg.c2))
                            / ((mx**2 + my**2 + cfg.c1) * (vx + vy + cfg.c2)))
    return float(np.mean(vals))


def make_trace(outcome=SUCCESS, attack="nes", eps=20.0, mag=None, dss=None,
               queries=100, image=None):
    trace = AttackTrace(attack, eps, 0, steps=[(1, 0.1)], outcome=outcome,
                        queries_used=queries)
    trace.magnitude = mag
    trace.dssim = dss
    trace.final_image = image
    return trace


class TestMagnitude:
    def test_identical(self):
        a = np.full((3, 3, 1), 0.5)
        assert magnitude(a, a) == 0.0

    def test_uniform_shift(self):
        orig = np.full((4, 4, 3), 0.5)
        adv = orig + 0.05
        assert magnitude(adv, orig) == pytest.approx(0.05 * np.sqrt(48))

    def test_matches_flat_loop(self):
        rng = np.random.default_rng(0)
        orig = rng.uniform(0, 1, (5, 5, 3))
        adv = np.clip(orig + rng.normal(0, 0.02, orig.shape), 0, 1)
        acc = 0.0
        for x, y in zip(adv.ravel(), orig.ravel()):
            acc += (x - y) ** 2
        assert magnitude(adv, orig) == pytest.approx(np.sqrt(acc), abs=1e-9)


class TestSsim:
    def test_identity_is_one(self):
        rng = np.random.default_rng(1)
        a = rng.uniform(0, 1, (12, 12, 3))
        assert ssim(a, a) == 1.0

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        a = rng.uniform(0, 1, (12, 12, 1))
        b = rng.uniform(0, 1, (12, 12, 1))
        assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)

    @pytest.mark.parametrize("seed", range(20))
    def test_brute_force_equivalence(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.uniform(0, 1, (16, 16, 3))
        b = np.clip(a + rng.normal(0, 0.05, a.shape), 0, 1)
        assert ssim(a, b) == pytest.approx(brute_force_ssim(a, b), abs=1e-6)

    def test_window_sums_to_one(self):
        assert SsimConfig().window().sum() == pytest.approx(1.0)

    def test_too_small_image(self):
        with pytest.raises(ValueError):
            ssim(np.zeros((8, 8, 1)), np.zeros((8, 8, 1)))

    def test_range(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a = rng.uniform(0, 1, (11, 11, 1))
            b = rng.uniform(0, 1, (11, 11, 1))
            assert -1.0 <= ssim(a, b) <= 1.0


class TestDssim:
    def test_identity_zero(self):
        a = np.random.default_rng(4).uniform(0, 1, (12, 12, 3))
        assert dssim(a, a) == 0.0

    def test_arithmetic(self):
        # dssim = (1 - ssim)/2, checked at a known ssim value
        a = np.full((11, 11, 1), 0.5)
        b = np.full((11, 11, 1), 0.6)
        s = ssim(a, b)
        assert dssim(a, b) == pytest.approx((1 - s) / 2)

    def test_bounds_random(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            a = rng.uniform(0, 1, (11, 11, 1))
            b = rng.uniform(0, 1, (11, 11, 1))
            assert 0.0 <= dssim(a, b) <= 1.0


class TestAnnotateTrace:
    def test_fills_magnitude_and_dssim(self):
        rng = np.random.default_rng(6)
        orig = rng.uniform(0, 1, (12, 12, 3))
        adv = np.clip(orig + 0.02, 0, 1)
        trace = make_trace(image=adv)
        annotate_trace(trace, orig)
        assert trace.magnitude == pytest.approx(magnitude(adv, orig))
        assert trace.dssim == pytest.approx(dssim(adv, orig))

    def test_small_image_skips_dssim(self):
        orig = np.full((8, 8, 3), 0.5)
        trace = make_trace(image=orig.copy())
        annotate_trace(trace, orig)
        assert trace.magnitude == 0.0
        assert trace.dssim is None


class TestAggregateSummary:
    def test_half_success(self):
        traces = [make_trace(SUCCESS, mag=0.5, queries=10),
                  make_trace(FAILURE, queries=20)]
        row = aggregate_summary(traces)
        assert row.success_rate == 0.5
        assert row.avg_magnitude == 0.5
        assert row.avg_queries == 15.0

    def test_all_failures_absent_averages(self):
        row = aggregate_summary([make_trace(FAILURE), make_trace(FAILURE)])
        assert row.success_rate == 0.0
        assert row.avg_magnitude is None
        assert row.avg_dssim is None

    def test_matches_hand_rolled_batch(self):
        rng = np.random.default_rng(7)
        traces = []
        for i in range(20):
            success = rng.random() < 0.6
            traces.append(make_trace(
                SUCCESS if success else FAILURE,
                mag=float(rng.uniform(1, 3)) if success else None,
                dss=float(rng.uniform(0, 0.1)) if success else None,
                queries=int(rng.integers(10, 500))))
        row = aggregate_summary(traces)
        wins = [t for t in traces if t.outcome == SUCCESS]
        assert row.success_rate == pytest.approx(len(wins) / 20)
        assert row.avg_magnitude == pytest.approx(
            sum(t.magnitude for t in wins) / len(wins))
        assert row.avg_dssim == pytest.approx(
            sum(t.dssim for t in wins) / len(wins))
        assert row.avg_queries == pytest.approx(
            sum(t.queries_used for t in traces) / 20)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(8)
        traces = [make_trace(SUCCESS, mag=float(rng.uniform(1, 2)),
                             queries=int(rng.integers(1, 100)))
                  for _ in range(10)]
        forward = aggregate_summary(traces)
        backward = aggregate_summary(traces[::-1])
        assert forward == backward

    def test_empty_and_mixed_errors(self):
        with pytest.raises(ValueError):
            aggregate_summary([])
        with pytest.raises(ValueError):
            aggregate_summary([make_trace(attack="nes"),
                               make_trace(attack="square")])

    def test_human_accuracy_passthrough(self):
        row = aggregate_summary([make_trace(SUCCESS, mag=1.0)], votes=0.54)
        assert row.human_accuracy == 0.54


class TestPearson:
    def test_perfect_positive(self):
        xs = [1.0, 2.0, 3.0, 4.0]
        assert pearson(xs, [2 * x + 1 for x in xs]) == pytest.approx(1.0)

    def test_perfect_negative(self):
        xs = [1.0, 2.0, 3.0]
        assert pearson(xs, [-x for x in xs]) == pytest.approx(-1.0)

    def test_matches_textbook_formula(self):
        rng = np.random.default_rng(9)
        xs = rng.uniform(0, 10, 10)
        ys = rng.uniform(0, 10, 10)
        n = len(xs)
        num = n * np.sum(xs * ys) - np.sum(xs) * np.sum(ys)
        den = np.sqrt(n * np.sum(xs**2) - np.sum(xs) ** 2) * \
            np.sqrt(n * np.sum(ys**2) - np.sum(ys) ** 2)
        assert pearson(xs, ys) == pytest.approx(num / den, abs=1e-12)

    def test_degenerate(self):
        with pytest.raises(ValueError):
            pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            pearson([1.0, 2.0], [1.0, 2.0])


class TestSummaryCsv:
    def test_round_trip_and_column_order(self, tmp_path):
        rows = [SummaryRow("nes", 20.0, 0.998, 5.92, 0.025, 2302.18, 0.6),
                SummaryRow("simba", 12.0, 0.406, None, None, 2977.72, None)]
        path = tmp_path / "summary.csv"
        summary_to_csv(rows, path)
        header = path.read_text().splitlines()[0]
        assert header == ("attack,epsilon,success_rate,human_accuracy,"
                          "avg_magnitude,avg_dssim,avg_queries")
        assert read_summary_csv(path) == rows
