import numpy as np
import pytest

from vegrqa.embedding import EmbeddingConfig
from vegrqa.errors import ConfigurationError, DimensionError, SplitIndexError
from vegrqa.provenance import body
from vegrqa.recurrence import ThresholdConfig
from vegrqa.rqa import RqaMeasures, series_measures
from vegrqa.scenario import FireScenario, fire_scenario
from vegrqa.signal import PixelStack, SplitSpec, TimeSeries, generate, split_series
from vegrqa.study import (
    PixelError,
    StudyParams,
    compare,
    group_summary,
    per_pixel_measures,
    run_pipeline,
    write_report,
)

RATE10 = ThresholdConfig.rate(0.10)
RATE30 = ThresholdConfig.rate(0.30)
PARAMS = StudyParams(threshold=RATE30)
SCENARIO = FireScenario()
PAIRS = [("burned_forest", "burned_grassland"), ("unburned_forest", "unburned_grassland")]


def row(**kw):
    base = dict(rr=0.3, det=0.5, lam=0.5, div=0.1, lmax=10)
    base.update(kw)
    return RqaMeasures(**base)


def noise_stack(k, n=120, seed0=0, group="noise"):
    return PixelStack({f"p{i}": generate("white_noise", n, seed=seed0 + i) for i in range(k)}, group)


@pytest.fixture(scope="module")
def fire_report():
    return run_pipeline(fire_scenario(SCENARIO), SCENARIO.split, PARAMS, PAIRS)


class TestGroupSummary:
    def test_two_points(self):
        s = group_summary([("a", row(det=0.2)), ("b", row(det=0.4))])
        assert s["det"].mean == pytest.approx(0.3)
        assert s["det"].sd == pytest.approx(0.1414213562, abs=1e-9)
        assert s.count == 2

    def test_single_row(self):
        s = group_summary([("a", row(det=0.7))])
        assert s["det"].mean == 0.7 and s["det"].sd is None

    def test_identical_rows(self):
        s = group_summary([(str(i), row()) for i in range(5)])
        assert all(s[name].sd == 0.0 for name in ("rr", "det", "lam", "div"))

    def test_undefined_excluded(self):
        s = group_summary([("a", row(div=None, det=None)), ("b", row(div=0.5)), ("c", row(div=0.25, det=None))])
        assert (s["div"].n, s["div"].excluded, s["div"].mean) == (2, 1, 0.375)
        assert (s["det"].n, s["det"].excluded) == (1, 2)

    def test_all_undefined(self):
        s = group_summary([("a", row(div=None)), ("b", row(div=None))])
        assert s["div"].mean is None and s["div"].sd is None and s["div"].n == 0

    def test_permutation_invariant(self, rng):
        table = [(str(i), row(det=float(v))) for i, v in enumerate(rng.random(30))]
        a = group_summary(table)["det"]
        b = group_summary([table[i] for i in rng.permutation(30)])["det"]
        assert a.mean == b.mean and a.sd == b.sd


class TestPerPixel:
    def test_identical_series(self):
        s = generate("sine", 100, period=23)
        table = per_pixel_measures(PixelStack({str(i): s for i in range(4)}), thr=RATE30)
        assert len({m for _, m in table}) == 1

    def test_single_pixel(self):
        s = generate("white_noise", 100, seed=4)
        [(pid, m)] = per_pixel_measures(PixelStack({"x": s}), EmbeddingConfig(3, 1), RATE30)
        assert pid == "x" and m == series_measures(s, EmbeddingConfig(3, 1), RATE30)

    def test_sine_beats_noise(self):
        sine = PixelStack({f"s{i}": generate("sine", 200, period=24, phase=0.3 * i) for i in range(20)})
        cfg = EmbeddingConfig(2, 6)
        det_sine = [m.det for _, m in per_pixel_measures(sine, cfg, RATE10)]
        det_noise = [m.det for _, m in per_pixel_measures(noise_stack(20, 200), cfg, RATE10)]
        assert min(det_sine) > max(det_noise)

    def test_workers_agree(self):
        st = noise_stack(12)
        assert per_pixel_measures(st, thr=RATE30, workers=3) == per_pixel_measures(st, thr=RATE30)

    def test_failing_pixel_named(self):
        # 4 samples cannot hold an (m=3, tau=2) embedding; the first pixel reports
        st = PixelStack({"p7": generate("white_noise", 4, seed=1), "p8": TimeSeries([1.0, 2.0, 3.0, 4.0])})
        with pytest.raises(PixelError) as info:
            per_pixel_measures(st, EmbeddingConfig(3, 2), RATE30)
        assert info.value.pixel == "p7"
        assert "p7" in str(info.value)

    def test_shared_epsilon(self):
        st = noise_stack(5)
        table = per_pixel_measures(st, thr=RATE30, shared_epsilon=True)
        rates = [m.rr for _, m in table]
        assert len(set(rates)) > 1


class TestCompare:
    def test_too_few_values_gives_no_test(self):
        rows = compare([("a", row(div=None)), ("b", row())], [("c", row()), ("d", row())], "x", "y")
        by = {r.measure: r for r in rows}
        assert by["div"].result is None
        assert by["rr"].result is not None


class TestPipeline:
    def test_identical_stacks(self):
        st = noise_stack(6, 100)
        report = run_pipeline({"a": st, "b": st.relabel("b")}, SplitSpec(49, 50), PARAMS)
        assert all(r.result.p == 1.0 for r in report.step1_tests)

    def test_composition_consistency(self):
        st = noise_stack(4, 100)
        split = SplitSpec(44, 55)
        report = run_pipeline({"g": st}, split, PARAMS)
        for (pid, m), (_, ts) in zip(report.step2_pixels["g/post"], st.series.items()):
            _, post = split_series(ts, split)
            assert m == series_measures(post, EmbeddingConfig(1, 1), RATE30)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            run_pipeline({"a": noise_stack(3, 100), "b": noise_stack(3, 90)}, SplitSpec(40, 50), PARAMS)

    def test_unknown_pair(self):
        with pytest.raises(ConfigurationError):
            run_pipeline({"a": noise_stack(3, 100)}, SplitSpec(40, 50), PARAMS, [("a", "z")])

    def test_bad_split(self):
        with pytest.raises(SplitIndexError):
            run_pipeline({"a": noise_stack(3, 100)}, SplitSpec(40, 100), PARAMS)


class TestFireScenario:
    def _p(self, report, measure, a, b):
        [r] = [t for t in report.step2_tests if (t.measure, t.group_a, t.group_b) == (measure, a, b)]
        return r.result.p

    def test_shapes(self):
        stacks = fire_scenario(SCENARIO)
        assert sorted(stacks) == sorted(["burned_forest", "burned_grassland", "unburned_forest", "unburned_grassland"])
        assert all(len(s) == 20 and s.length == 323 for s in stacks.values())

    def test_seeded(self):
        a, b = fire_scenario(SCENARIO), fire_scenario(SCENARIO)
        for lab in a:
            for pid in a[lab].pixel_ids:
                assert a[lab].series[pid].values.tobytes() == b[lab].series[pid].values.tobytes()

    @pytest.mark.parametrize("cover", ["forest", "grassland"])
    def test_burned_det_shifts(self, fire_report, cover):
        lab = f"burned_{cover}"
        assert self._p(fire_report, "det", f"{lab}/pre", f"{lab}/post") < 0.05

    @pytest.mark.parametrize("cover", ["forest", "grassland"])
    def test_unburned_det_stable(self, fire_report, cover):
        lab = f"unburned_{cover}"
        assert self._p(fire_report, "det", f"{lab}/pre", f"{lab}/post") > 0.05

    def test_joint_white_band(self, fire_report):
        burned, unburned = fire_report.joint
        lo = SCENARIO.split.pre_end - PARAMS.band
        hi = SCENARIO.split.post_start + PARAMS.band
        assert lo <= int(np.argmin(burned.profile)) <= hi
        assert np.ptp(unburned.profile) < 2 * np.ptp(burned.profile)

    def test_windowed_lengths(self, fire_report):
        for j in fire_report.joint:
            assert sorted(j.windowed) == [46, 69]
            assert len(j.windowed[46].entries) == 323 - 46 + 1

    def test_report_files(self, fire_report, tmp_path):
        paths = write_report(fire_report, tmp_path, {"seed": SCENARIO.seed})
        names = {p.name for p in paths}
        assert "step2_ttests.csv" in names and "rp_burned_forest.pgm" in names
        assert "step3_jra_burned_forest__burned_grassland_w69.csv" in names
        text = (tmp_path / "step1_summary.csv").read_text()
        assert "# seed=2007" in text and "# target_rr=0.3" in text
        assert body(text).splitlines()[0] == "group,measure,mean,sd,n,excluded"
        assert body((tmp_path / "step1_ttests.csv").read_text()).splitlines()[0] == "measure,group_a,group_b,t,df,p"
