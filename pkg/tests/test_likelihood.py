import math
import unittest

import numpy as np
from scipy import integrate

from hawkes_agg.errors import InvalidParameterError, NonFiniteLogLik
from hawkes_agg.kernels import kernel_eval
from hawkes_agg.likelihood import (
    ExcitationState,
    LogLik,
    binned_intensities,
    binned_loglik,
    conditional_cdf,
    conditional_pdf_log,
    loglik_continuous,
    loglik_direct,
    loglik_exponential_batch,
    loglik_exponential_recursive,
)
from hawkes_agg.models import (
    BinnedCounts,
    BinSpec,
    EventSequence,
    HawkesParams,
    PowerLawKernel,
    RectangularKernel,
)
from hawkes_agg.process import aggregate
from hawkes_agg.simulate import SimConfig, simulate


FIG1 = HawkesParams.exponential(0.5, 0.9, 2.0)


class LogLikValueTests(unittest.TestCase):
    def test_non_finite_values_are_flagged(self):
        self.assertFalse(LogLik.from_value(float("nan")).finite)
        self.assertEqual(LogLik.from_value(-3.5), LogLik(-3.5))
        with self.assertRaises(NonFiniteLogLik):
            LogLik.from_value(-math.inf).require()
        with self.assertRaises(ValueError):
            LogLik(math.inf)

    def test_excitation_state_recursion(self):
        state = ExcitationState().advance(2.0, 1.0).advance(2.0, 1.5)

        self.assertAlmostEqual(state.A, 1.0 + math.exp(-1.0))
        self.assertAlmostEqual(state.decayed(2.0, 2.0), state.A * math.exp(-1.0))
        with self.assertRaises(ValueError):
            ExcitationState(-1.0)


class ContinuousLogLikTests(unittest.TestCase):
    def test_no_events(self):
        value = loglik_continuous(FIG1, EventSequence.empty(10.0))

        self.assertAlmostEqual(value.require(), -5.0)

    def test_vanishing_excitation_is_poisson(self):
        params = HawkesParams.exponential(2.0, 1e-300, 1.0)
        events = EventSequence((1.0, 2.0, 3.0), 4.0)

        self.assertAlmostEqual(
            loglik_continuous(params, events).require(),
            3.0 * math.log(2.0) - 8.0,
            places=9,
        )

    def test_single_event_expansion(self):
        events = EventSequence((1.5,), 4.0)
        expected = (
            math.log(0.5) - 0.5 * 4.0 - 0.45 * (1.0 - math.exp(-2.0 * 2.5))
        )

        self.assertAlmostEqual(
            loglik_exponential_recursive(FIG1, events).require(), expected, places=12
        )

    def test_direct_and_recursive_agree(self):
        events = simulate(SimConfig(FIG1, 220.0, 7))
        self.assertGreater(len(events), 100)

        direct = loglik_direct(FIG1, events).require()
        recursive = loglik_exponential_recursive(FIG1, events).require()

        self.assertAlmostEqual(direct, recursive, delta=1e-9)

    def test_direct_and_recursive_agree_on_random_instances(self):
        rng = np.random.default_rng(31)
        for instance in range(100):
            params = HawkesParams.exponential(
                rng.uniform(0.05, 2.0), rng.uniform(0.05, 1.5), rng.uniform(0.2, 5.0)
            )
            window_end = rng.uniform(1.0, 50.0)
            size = int(rng.integers(0, 60))
            events = EventSequence(
                tuple(np.sort(rng.uniform(0.0, window_end, size))), window_end
            )
            with self.subTest(instance=instance):
                direct = loglik_direct(params, events).require()
                recursive = loglik_exponential_recursive(params, events).require()
                self.assertAlmostEqual(
                    direct, recursive, delta=1e-9 * max(1.0, abs(direct))
                )

    def test_recursive_rejects_other_kernels(self):
        params = HawkesParams(0.2, PowerLawKernel(0.3, 2.0, 0.6))

        with self.assertRaises(InvalidParameterError):
            loglik_exponential_recursive(params, EventSequence.empty(1.0))

    def test_tiny_intensity_stays_finite(self):
        params = HawkesParams(1e-300, RectangularKernel(0.5, 0.1, 0.6))
        events = EventSequence((1.0, 1.05), 2.0)

        result = loglik_direct(params, events)

        self.assertTrue(result.finite)
        self.assertLess(result.value, -600)

    def test_batch_matches_single_sequences(self):
        rng = np.random.default_rng(4)
        times = np.sort(rng.uniform(0.0, 20.0, size=(6, 15)), axis=1)

        batch = loglik_exponential_batch(FIG1, times, 20.0)

        for row, value in zip(times, batch):
            single = loglik_exponential_recursive(FIG1, EventSequence(tuple(row), 20.0))
            self.assertAlmostEqual(value, single.require(), places=9)


class ConditionalTests(unittest.TestCase):
    def test_empty_history_unit_rate(self):
        params = HawkesParams.exponential(1.0, 1e-300, 1.0)
        empty = EventSequence.empty(10.0)

        self.assertAlmostEqual(conditional_pdf_log(params, empty, 0.0, 2.0), -2.0)
        self.assertAlmostEqual(
            conditional_cdf(params, empty, 0.0, math.log(2.0)), 0.5, places=12
        )
        self.assertEqual(conditional_cdf(params, empty, 1.0, 1.0), 0.0)

    def test_closed_form_with_one_event(self):
        history = EventSequence((0.5,), 10.0)
        expected = math.log(0.5 + 0.9 * math.exp(-2.0)) - (
            0.5 + 0.45 * (1.0 - math.exp(-2.0))
        )

        self.assertAlmostEqual(
            conditional_pdf_log(FIG1, history, 0.5, 1.5), expected, places=12
        )

    def test_density_integrates_to_one(self):
        history = EventSequence((0.3, 0.8), 100.0)

        mass, _ = integrate.quad(
            lambda t: math.exp(conditional_pdf_log(FIG1, history, 0.8, t)),
            0.8,
            np.inf,
            limit=200,
        )

        self.assertAlmostEqual(mass, 1.0, places=6)

    def test_rejects_inconsistent_times(self):
        history = EventSequence((1.0,), 10.0)

        with self.assertRaises(InvalidParameterError):
            conditional_pdf_log(FIG1, history, 1.0, 1.0)
        with self.assertRaises(InvalidParameterError):
            conditional_cdf(FIG1, history, 0.5, 2.0)


class BinnedLogLikTests(unittest.TestCase):
    def test_single_bin_background_only(self):
        counts = BinnedCounts(BinSpec.uniform(1.0, 1), (2,))

        self.assertAlmostEqual(
            binned_loglik(FIG1, counts).require(), 2.0 * math.log(0.5) - 0.5, places=12
        )

    def test_all_zero_counts(self):
        counts = BinnedCounts(BinSpec.uniform(0.5, 8), (0,) * 8)

        self.assertAlmostEqual(binned_loglik(FIG1, counts).require(), -0.5 * 4.0)

    def test_two_bins_right_edge_placement(self):
        params = HawkesParams.exponential(0.2, 0.4, 0.9)
        counts = BinnedCounts(BinSpec.uniform(1.0, 2), (1, 2))
        first = 0.2
        second = 0.2 + 0.4 * math.exp(-0.9)
        expected = math.log(first) - first + 2.0 * math.log(second) - second

        self.assertAlmostEqual(binned_loglik(params, counts).require(), expected, places=12)

    def test_intensity_paths_agree_with_direct_sum(self):
        spec = BinSpec((0.0, 0.5, 1.25, 1.5, 2.5, 3.0))
        values = np.array([2.0, 0.0, 1.0, 3.0, 1.0])
        counts = BinnedCounts(spec, tuple(int(value) for value in values))
        upper = spec.upper
        for params in (
            FIG1,
            HawkesParams(0.2, PowerLawKernel(0.3, 2.0, 0.6)),
            HawkesParams(0.2, RectangularKernel(0.5, 0.0, 1.0)),
        ):
            with self.subTest(params=params):
                expected = [
                    params.nu
                    + sum(
                        values[i] * kernel_eval(params.kernel, upper[j] - upper[i])
                        for i in range(j)
                    )
                    for j in range(len(values))
                ]
                np.testing.assert_allclose(
                    binned_intensities(params, counts), expected, rtol=1e-12
                )

    def test_uniform_paths_agree_with_direct_sum(self):
        counts = BinnedCounts(BinSpec.uniform(0.5, 6), (1, 0, 2, 1, 0, 3))
        upper = counts.spec.upper
        values = counts.array
        for params in (FIG1, HawkesParams(0.2, RectangularKernel(0.5, 0.0, 1.0))):
            with self.subTest(params=params):
                expected = [
                    params.nu
                    + sum(
                        values[i] * kernel_eval(params.kernel, upper[j] - upper[i])
                        for i in range(j)
                    )
                    for j in range(len(values))
                ]
                np.testing.assert_allclose(
                    binned_intensities(params, counts), expected, rtol=1e-12
                )

    def test_fine_bins_approach_continuous_loglik(self):
        events = simulate(SimConfig(FIG1, 100.0, 21))
        continuous = loglik_continuous(FIG1, events).require()
        gaps = []
        for width in (0.5, 0.0625):
            spec = BinSpec.covering(100.0, width)
            binned = binned_loglik(FIG1, aggregate(events, spec)).require()
            gaps.append(abs(binned - len(events) * math.log(width) - continuous))

        self.assertLess(gaps[1], gaps[0])


if __name__ == "__main__":
    unittest.main()
