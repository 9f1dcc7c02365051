import pytest

from sos_ggm.models.boundary_law import ModelParams, solve_zero_field
from sos_ggm.models.external_field import enumerate_measure_candidates
from sos_ggm.models.ggm_core import boundary_law_from_pair


@pytest.fixture(scope="session")
def verified_laws():
    """Periodic laws of every solution at a few zero-field and field points"""
    laws = []
    for k, tau in ((2, 5.0), (2, 7.0), (3, 3.5), (3, 5.0)):
        laws.extend(boundary_law_from_pair(p) for p in solve_zero_field(ModelParams(k, tau)))
    laws.extend(boundary_law_from_pair(s) for s in enumerate_measure_candidates(7.0, 1.2))
    return laws


@pytest.fixture
def data_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("SOS_GGM_DATA_DIR", str(tmp_path))
    return tmp_path
