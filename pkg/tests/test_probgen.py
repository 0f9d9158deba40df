import numpy as np
import pytest

from tlsgn.errors import DimensionError
from tlsgn.probgen import SpectrumSpec, gapped_spectrum, generate, parse_gen
from tlsgn.reference import Verdict, analyze


def test_spectrum_round_trip():
    bundle, _ = analyze(generate(SpectrumSpec(3, 1, (2.0, 1.0), seed=0)))
    assert np.allclose(bundle.sigma, [2.0, 1.0], atol=1e-12)


def test_generic_verdict_over_seeds():
    sig = gapped_spectrum(4, 3.0)
    for seed in range(100):
        _, wp = analyze(generate(SpectrumSpec(12, 4, sig, seed)))
        assert wp.verdict is Verdict.UNIQUE


def test_deterministic():
    spec = SpectrumSpec(20, 3, (4.0, 3.0, 2.0, 1.0), seed=7)
    p1, p2 = generate(spec), generate(spec)
    assert np.array_equal(p1.a, p2.a) and np.array_equal(p1.b, p2.b)


def test_gamma_margin():
    spec = SpectrumSpec(20, 5, gapped_spectrum(5, 2.0), seed=1)
    bundle, _ = analyze(generate(spec))
    assert abs(bundle.gamma) >= 0.1 / np.sqrt(6) - 1e-12


def test_gapped_spectrum():
    sig = gapped_spectrum(10, 4.0)
    assert len(sig) == 11 and sig[-2] == 1.0 and sig[-1] == 0.25 and sig[0] == 10.0
    assert np.all(np.diff(sig) < 0)
    sig = gapped_spectrum(10, 4.0, rng=np.random.default_rng(0), sub_gap=3.0)
    assert min(sig[:-2]) >= 3.0 and np.all(np.diff(sig) < 0)
    assert gapped_spectrum(1, 2.0) == (1.0, 0.5)


@pytest.mark.parametrize("kwargs", [dict(m=3, n=3, sigmas=(2, 1, 0.5, 0.1)),
                                    dict(m=5, n=2, sigmas=(2, 1))])
def test_dimension_errors(kwargs):
    with pytest.raises(DimensionError):
        SpectrumSpec(**kwargs)


@pytest.mark.parametrize("sigmas", [(1.0, 2.0), (1.0, 1.0), (1.0, -1.0)])
def test_bad_sigmas(sigmas):
    with pytest.raises(ValueError):
        SpectrumSpec(4, 1, sigmas)


def test_tie_allowed_when_not_generic():
    SpectrumSpec(4, 1, (1.0, 1.0), ensure_generic=False)


def test_parse_gen():
    spec = parse_gen("m=100,n=10,gap=4,seed=2")
    assert (spec.m, spec.n, spec.seed) == (100, 10, 2)
    assert spec.sigmas[-1] == 0.25
    for bad in ("m=10", "m=10,n=2,foo=1", "m=10,n=2,gap"):
        with pytest.raises(ValueError):
            parse_gen(bad)
