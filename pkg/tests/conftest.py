import textwrap

import pytest

from rtdcorr import experiments, netsim


@pytest.fixture(scope="session")
def cn_config():
    return netsim.resolve_config("cn-like")


@pytest.fixture(scope="session")
def cn_campaign(cn_config):
    """Default-seed campaign on the bundled config; shared across tests."""
    return experiments.prepare_campaign(cn_config, seed=42)


MINI_YAML = textwrap.dedent(
    """
    scatter_km: 5.0
    path_model:
      v_km_s: 200000.0
      intra_r: {mu: -0.7, sigma: 0.3}
      inter_r: {mu: 0.7, sigma: 1.0}
      jitter: 0.2
      samples_per_pair: 3
    cities:
      - {id: a, lat: 30.0, lon: 100.0, region: r0, is_center: true}
      - {id: b, lat: 32.0, lon: 104.0, region: r1, is_center: true}
      - {id: b2, lat: 33.5, lon: 105.0, region: r1, is_center: false}
    isps:
      - {id: x, ixps: [a]}
      - {id: y, ixps: [a]}
    hosts:
      - {id: p1, role: probe, city: a, isp: x}
      - {id: p2, role: probe, city: b, isp: y}
      - {id: l1, role: landmark, city: a, isp: x}
      - {id: l2, role: landmark, city: b, isp: x}
      - {id: l3, role: landmark, city: b2, isp: y}
    """
)


@pytest.fixture(scope="session")
def mini_config_path(tmp_path_factory):
    p = tmp_path_factory.mktemp("cfg") / "mini.yaml"
    p.write_text(MINI_YAML)
    return p
