import numpy as np
import pytest

from gols.analysis import (ScanResult, detect_local_min, detect_snngpp,
                           estimate_pdf, scan_line, write_pdf_csv)
from gols.core import SeededRng
from gols.data import BatchSampler, split_2_1_1, standardize
from gols.linesearch import DeterministicLineFunction, LineFunction, MbssEvaluator
from gols.model import MlpSpec, param_count


def scan_from_arrays(f, fp):
    grid = np.arange(len(f), dtype=np.float64)
    return ScanResult(alphas=grid, f_values=np.asarray(f, dtype=np.float64),
                      fp_values=np.asarray(fp, dtype=np.float64),
                      snngpp_events=np.empty(0, dtype=np.intp),
                      local_min_events=np.empty(0, dtype=np.intp))


class TestDetectSignChange:
    def test_single_event(self):
        scan = scan_from_arrays([0, 0, 0], [-1.0, -0.5, 0.2])
        assert detect_snngpp(scan).tolist() == [2]

    def test_only_negative_to_positive_counts(self):
        scan = scan_from_arrays([0, 0, 0], [1.0, -0.5, 0.3])
        assert detect_snngpp(scan).tolist() == [2]

    def test_no_events_when_always_negative(self):
        scan = scan_from_arrays([0, 0, 0], [-1.0, -2.0, -0.1])
        assert detect_snngpp(scan).tolist() == []

    def test_exact_zero_is_nonnegative_side(self):
        scan = scan_from_arrays([0, 0], [-1.0, 0.0])
        assert detect_snngpp(scan).tolist() == [1]


class TestDetectLocalMin:
    def test_single_minimum(self):
        scan = scan_from_arrays([3.0, 1.0, 2.0], [0, 0, 0])
        assert detect_local_min(scan).tolist() == [1]

    def test_monotone_decreasing_has_none(self):
        scan = scan_from_arrays([3.0, 2.0, 1.0, 0.5], [0, 0, 0, 0])
        assert detect_local_min(scan).tolist() == []

    def test_plateau_excluded(self):
        scan = scan_from_arrays([2.0, 1.0, 1.0, 2.0], [0, 0, 0, 0])
        assert detect_local_min(scan).tolist() == []

    def test_short_grid_rejected(self):
        scan = scan_from_arrays([2.0, 1.0], [0, 0])
        with pytest.raises(ValueError):
            detect_local_min(scan)


class TestScanLine:
    def make_problem(self, iris_dataset, mode, batch_size, seed=0):
        split = split_2_1_1(iris_dataset, SeededRng(0, 1))
        ds = standardize(iris_dataset, split.train)
        spec = MlpSpec((4, 5, 3), "sigmoid", "mse")
        x = SeededRng(3).uniform(-0.1, 0.1, param_count(spec))
        sampler = BatchSampler(mode, split.train, batch_size, SeededRng(seed, 2))
        evaluator = MbssEvaluator(spec, ds, sampler)
        feats, targets = ds.batch(split.train)
        from gols.model import backprop_gradient
        g = backprop_gradient(spec, x, feats, targets).gradient
        return LineFunction(x, -g, evaluator)

    def test_grid_size(self, iris_dataset):
        lf = self.make_problem(iris_dataset, "full", 76)
        grid = 0.002 * np.arange(101)
        scan = scan_line(lf, grid)
        assert scan.alphas.size == 101
        assert scan.f_values.size == 101

    def test_full_batch_scans_repeat_exactly(self, iris_dataset):
        grid = 0.002 * np.arange(26)
        a = scan_line(self.make_problem(iris_dataset, "full", 76), grid)
        b = scan_line(self.make_problem(iris_dataset, "full", 76), grid)
        assert np.array_equal(a.f_values, b.f_values)
        assert np.array_equal(a.fp_values, b.fp_values)

    def test_static_blocks_repeat_with_period_four(self, iris_dataset):
        lf = self.make_problem(iris_dataset, "static", 19)
        values = [lf.value_and_derivative(0.05) for _ in range(8)]
        for i in range(4):
            assert values[i] == values[i + 4]
        assert len({v[0] for v in values[:4]}) > 1  # blocks genuinely differ

    def test_grid_validation(self):
        lf = DeterministicLineFunction(lambda a: -1.0)
        with pytest.raises(ValueError):
            scan_line(lf, [])
        with pytest.raises(ValueError):
            scan_line(lf, [0.0, 0.0, 0.1])

    def test_monotone_derivative_single_event(self):
        lf = DeterministicLineFunction(lambda a: a - 0.35,
                                       f=lambda a: 0.5 * (a - 0.35) ** 2)
        grid = 0.1 * np.arange(11)
        scan = scan_line(lf, grid)
        assert scan.snngpp_events.size == 1
        assert scan.b_eps_support[0] == scan.b_eps_support[1]

    def test_smooth_events_coincide(self):
        # smooth deterministic scan: the derivative sign change and the
        # function-value minimum sit within one bin of each other
        lf = DeterministicLineFunction(lambda a: 2.0 * (a - 0.5),
                                       f=lambda a: (a - 0.5) ** 2)
        grid = 0.05 * np.arange(21)
        scan = scan_line(lf, grid)
        assert scan.snngpp_events.size == 1
        assert scan.local_min_events.size == 1
        assert abs(int(scan.snngpp_events[0]) - int(scan.local_min_events[0])) <= 1


class TestEstimatePdf:
    def test_deterministic_runs_concentrate(self):
        grid = np.arange(10, dtype=np.float64)
        events = [np.array([4]) for _ in range(100)]
        pdf = estimate_pdf(events, grid)
        assert pdf.probabilities[4] == 1.0
        assert pdf.probabilities.sum() == pytest.approx(1.0, abs=1e-12)
        assert pdf.n_runs == 100

    def test_no_events_gives_empty_estimate(self):
        grid = np.arange(5, dtype=np.float64)
        pdf = estimate_pdf([np.array([], dtype=np.intp)] * 3, grid)
        assert pdf.probabilities.sum() == 0.0
        assert pdf.support is None
        assert pdf.support_width == 0.0

    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(0)
        grid = np.arange(20, dtype=np.float64)
        events = [rng.integers(0, 20, size=rng.integers(0, 4)) for _ in range(50)]
        pdf = estimate_pdf(events, grid)
        assert pdf.probabilities.sum() == pytest.approx(1.0, abs=1e-12)

    def test_support_and_occupancy(self):
        grid = np.linspace(0.0, 1.0, 11)
        pdf = estimate_pdf([np.array([2, 5]), np.array([5, 7])], grid)
        assert pdf.support == (grid[2], grid[7])
        assert pdf.occupied_fraction == pytest.approx(3 / 11)

    def test_out_of_grid_event_rejected(self):
        with pytest.raises(ValueError):
            estimate_pdf([np.array([9])], np.arange(5, dtype=np.float64))

    def test_csv_output(self, tmp_path):
        grid = np.linspace(0.0, 0.2, 6)
        pdf_a = estimate_pdf([np.array([1])], grid)
        pdf_b = estimate_pdf([np.array([3, 4])], grid)
        path = tmp_path / "pdf.csv"
        write_pdf_csv(path, grid, pdf_a, pdf_b)
        lines = path.read_text().splitlines()
        assert lines[0] == "alpha_bin,pdf_snngpp,pdf_localmin"
        assert len(lines) == 7
