import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import jordan_qubit_channel
from disentangle import ChannelAnalyzer, SeparabilityCertifier, DesignError, DimensionMismatchError
from disentangle.channels import LocalProductChannel, depolarizing, random_channel
from disentangle.designs import mub_design
from disentangle.entangle import bell_pair, ghz
from disentangle.linalg import maximally_mixed, operator_norm
from disentangle.validation import check_channels, check_design, check_density_matrix


def test_get_params_round_trip():
    est = SeparabilityCertifier(designs="auto", cap=500)
    params = est.get_params()
    assert params["cap"] == 500 and params["designs"] == "auto"
    twin = clone(est)
    assert twin.get_params() == params
    assert twin.set_params(cap=20).cap == 20


def test_unfitted_raises():
    with pytest.raises(NotFittedError):
        SeparabilityCertifier().transform(bell_pair())
    with pytest.raises(NotFittedError):
        ChannelAnalyzer().transform(np.eye(2) / 2)


def test_analyzer_auto_mode():
    rigorous = ChannelAnalyzer().fit(depolarizing(2, 0.5))
    assert rigorous.envelope_mode_ == "spectral-rigorous"
    assert rigorous.form_ is not None
    defective = ChannelAnalyzer().fit(jordan_qubit_channel())
    assert defective.envelope_mode_ == "empirical"
    assert defective.form_ is None


def test_analyzer_accepts_raw_kraus():
    ops = depolarizing(2, 0.5).kraus_ops
    an = ChannelAnalyzer().fit(ops)
    assert an.profile_.gap_mu == pytest.approx(0.5)


def test_analyzer_transform_evolves_stack():
    an = ChannelAnalyzer().fit(depolarizing(2, 0.5))
    stack = np.array([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    out = an.transform(stack, t=2)
    np.testing.assert_allclose(out[0], np.diag([0.625, 0.375]))


def test_certifier_pipeline():
    chs = [depolarizing(2, 0.5)] * 3
    est = SeparabilityCertifier().fit(chs)
    assert est.certified_time_ == 2
    assert est.threshold_report_.ceil_t_c >= est.certified_time_
    dec = est.transform(ghz(3))
    dec.check(est.evolve(ghz(3), 2))


def test_certifier_accepts_product_channel_and_mub_name():
    prod = LocalProductChannel([depolarizing(3, 0.5), depolarizing(3, 0.6)])
    est = SeparabilityCertifier(designs="mub").fit(prod)
    assert est.dims_ == (3, 3)
    dec = est.transform(maximally_mixed((3, 3)))
    assert operator_norm(dec.resynthesize() - np.eye(9) / 9) <= 1e-12


def test_certifier_explicit_time():
    est = SeparabilityCertifier().fit([random_channel(2, 4, 3)] * 2)
    dec = est.transform(bell_pair(), t=est.certified_time_ + 2)
    assert dec.t == est.certified_time_ + 2


def test_validation_helpers():
    assert check_density_matrix(np.eye(4) / 4, (2, 2)).dims == (2, 2)
    assert len(check_channels(depolarizing(2, 0.3))) == 1
    with pytest.raises(DimensionMismatchError):
        check_channels([depolarizing(2, 0.3)], n_parties=2)
    with pytest.raises(DimensionMismatchError):
        check_design(mub_design(3), 2)
    with pytest.raises(DesignError, match="unknown design"):
        check_design("sic", 2)
    with pytest.raises(DesignError, match="prime"):
        check_design("mub", 4)
