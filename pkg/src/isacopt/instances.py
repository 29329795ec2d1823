"""Random problem instances for property tests and stress runs."""

from __future__ import annotations

import numpy as np

from .closed_form import se_com_powers
from .model import QosTargets, SystemParams, dbm_to_w, generate_channel


def random_instance(rng: np.random.Generator, m_choices=(1, 2, 3, 4, 5, 6), nc_choices=None, sense_noise_dbm=None,
                    p_nontrans=None):
    """(params, channel, targets) with targets placed near the interesting crossover.

    Gamma is drawn relative to the CRB reached by the rate-only energy so that
    all regimes occur.  ``sense_noise_dbm=None`` mixes the literal -103 dBm
    with a range of normalised levels.
    """
    m = int(rng.choice(m_choices))
    nc = int(rng.choice(nc_choices)) if nc_choices is not None else int(rng.integers(1, m + 2))
    if sense_noise_dbm is None:
        sense_noise_dbm = -103.0 if rng.random() < 0.4 else float(rng.uniform(0.0, 50.0))
    pc = float(rng.choice([45.0, 45.0, 10.0, 100.0])) if p_nontrans is None else p_nontrans
    params = SystemParams.defaults(m_tx=m, n_rx_comm=nc, noise_sense_w=dbm_to_w(sense_noise_dbm),
                                         p_nontrans_w=pc)
    channel = generate_channel(params, float(np.exp(rng.uniform(np.log(30), np.log(300)))), 1.0,
                               int(rng.integers(2**31)))
    rate = float(rng.uniform(0.5, 8.0 * min(m, nc)))
    p_ref, _ = se_com_powers(params, channel, rate)
    e_ref = max(float(np.sum(p_ref)) * params.t_max_s, 1e-30)
    gamma = params.crb_coeff * m * m / (e_ref * 10 ** rng.uniform(-2.0, 1.5))
    return params, channel, QosTargets(rate, gamma)
