"""Verification suites: each check passes under its canonical configuration."""

import numpy as np
import pytest

from fracvar import (
    KernelSpec,
    NormalizationFunction,
    OrderFunction,
    SUITE_NAMES,
    SuiteConfig,
    default_suite_run,
    identity_warp,
    standard_corpus,
)
from fracvar.analysis import (
    check_axiom_limits,
    check_boundedness,
    check_comparison_suite,
    check_limit_interchange,
    check_lipschitz,
    check_max_point,
    check_vanish_at_a,
)
from fracvar.errors import InvalidParam


def spec_for(alpha, gamma=1.0, beta=1.0):
    return KernelSpec(gamma=gamma, beta=beta,
                      order=OrderFunction.constant(alpha),
                      warp=identity_warp(),
                      norm=NormalizationFunction.one(),
                      interval=(0.0, 1.0))


def test_suite_names_fixed():
    assert SUITE_NAMES == ("boundedness", "lipschitz", "limit_interchange",
                           "axiom_limits", "max_point", "vanish_at_a",
                           "comparison")


def test_corpus_is_deterministic_per_seed():
    a = standard_corpus(seed=5, random_count=3)
    b = standard_corpus(seed=5, random_count=3)
    c = standard_corpus(seed=6, random_count=3)
    probe = 0.37
    assert [f.fn(probe) for f in a] == [f.fn(probe) for f in b]
    assert a[-1].fn(probe) != c[-1].fn(probe)
    # six fixed functions lead every corpus
    assert [f.label for f in a[:6]] == ["one", "t", "t^2", "sin_pi_t",
                                        "cos_t", "exp_t"]


def test_corpus_derivatives_are_consistent():
    for tf in standard_corpus(seed=2, random_count=2):
        g = tf.on(0.0, 1.0, 128)   # GridFunction validates supplied derivs
        assert g.n == 128


def test_config_validation():
    spec = spec_for(0.5)
    with pytest.raises(InvalidParam):
        SuiteConfig(spec=spec, test_functions=standard_corpus(), seq_len=4)
    with pytest.raises(InvalidParam):
        SuiteConfig(spec=spec, test_functions=standard_corpus(),
                    tol_map={"boundedness": 0.0})


class TestIndividualChecks:
    def test_boundedness_canonical(self):
        cfg = SuiteConfig(spec=spec_for(0.9),
                          test_functions=standard_corpus(seed=1, random_count=6),
                          n=256)
        report = check_boundedness(cfg)
        assert report.passed
        assert report.cases_run == 24  # 12 functions x 2 operators
        assert any("bound factor" in note for note in report.notes)

    def test_lipschitz_stability(self):
        cfg = SuiteConfig(spec=spec_for(0.5),
                          test_functions=standard_corpus(seed=4, random_count=2),
                          n=256)
        report = check_lipschitz(cfg)
        assert report.passed
        assert any("theta" in note for note in report.notes)

    def test_limit_interchange_identity_warp(self):
        # seq_len stays at the default 16: the final-gap tolerance expects
        # the Taylor tail to be down at roundoff, which 8 terms are not
        cfg = SuiteConfig(spec=spec_for(0.5),
                          test_functions=standard_corpus(seed=0, random_count=0),
                          n=256)
        report = check_limit_interchange(cfg)
        assert report.passed

    def test_axiom_limits(self):
        cfg = SuiteConfig(spec=spec_for(0.5, gamma=0.5, beta=0.5),
                          test_functions=standard_corpus(seed=0, random_count=1),
                          n=256)
        report = check_axiom_limits(cfg)
        assert report.passed
        assert any("kernel |H-1|" in note for note in report.notes)

    def test_max_point(self):
        cfg = SuiteConfig(spec=spec_for(0.5),
                          test_functions=standard_corpus(seed=3, random_count=4),
                          n=512)
        report = check_max_point(cfg)
        assert report.passed

    def test_vanish_at_a(self):
        cfg = SuiteConfig(spec=spec_for(0.5),
                          test_functions=standard_corpus(seed=0, random_count=2),
                          n=256)
        report = check_vanish_at_a(cfg)
        assert report.passed

    def test_comparison_suite(self):
        report = check_comparison_suite(spec_for(0.5), n=128, count=10, seed=0)
        assert report.passed
        assert report.cases_run == 10


def test_default_run_unknown_suite():
    with pytest.raises(InvalidParam):
        default_suite_run("spectral_gap")


def test_default_boundedness_marks_warped_runs_informational():
    reports = default_suite_run("boundedness", seed=0)
    names = [r.suite_name for r in reports]
    assert names == ["boundedness", "boundedness[log]", "boundedness[sin]"]
    assert not reports[0].informational
    assert reports[1].informational and reports[2].informational
    assert all(r.passed for r in reports)


def test_default_vanish_run_passes():
    reports = default_suite_run("vanish_at_a", seed=0)
    assert len(reports) == 1
    assert reports[0].passed
    assert reports[0].cases_run > 0
