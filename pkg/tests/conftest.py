import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from isacopt.model import CommChannel, SystemParams, dbm_to_w  # noqa: E402

# Sensing noise at which the CRB range of the simulation figures actually binds.
CALIBRATED_SENSE_DBM = 43.0


def diag_params(m, gains=None, **kw):
    """Params with unit comm noise so channel gains read directly as lambda^2 / sigma_c^2."""
    base = dict(m_tx=m, n_rx_sense=max(m, 2), n_rx_comm=m, noise_comm_w=1.0, noise_sense_w=1.0, bandwidth_hz=1.0,
                pa_efficiency=0.5, p_nontrans_w=1.0, t_min_s=150.0, t_max_s=256.0)
    base.update(kw)
    return SystemParams(**base)


def diag_channel(gains, m=None):
    s = np.sqrt(np.asarray(gains, float))
    m = m or len(s)
    h = np.zeros((len(s), m), complex)
    h[np.arange(len(s)), np.arange(len(s))] = s
    return CommChannel.from_matrix(h)


@pytest.fixture
def defaults():
    return SystemParams.defaults()


@pytest.fixture
def calibrated():
    return SystemParams.defaults(noise_sense_w=dbm_to_w(CALIBRATED_SENSE_DBM))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
