import csv
import inspect

import pytest

from mcmc_testkit.consistency import check_all
from mcmc_testkit.geweke import GewekeConfig
from mcmc_testkit.model import MixtureModel, ModelSpec
from mcmc_testkit.mutants import REGISTRY, apply_mutant, detected_by, kill_matrix, write_kill_matrix_csv
from mcmc_testkit.rng import RngStream

EXPECTED_BLOCKS = {
    "none": [],
    "M1": ["sigma_sq_n"],
    "M2": ["mu"],
    "M3": ["pi"],
    "M4": ["z"],
    "M5": ["mu", "sigma_sq_mu"],
}


@pytest.mark.parametrize("mid", [m for m in REGISTRY if m != "none"])
def test_each_mutant_overrides_one_method(mid):
    cls = REGISTRY[mid].model_class
    own = [k for k, v in vars(cls).items() if inspect.isfunction(v)]
    assert issubclass(cls, MixtureModel) and len(own) == 1


@pytest.mark.parametrize("mid", list(EXPECTED_BLOCKS))
def test_consistency_localizes_each_mutant(mid):
    report = check_all(apply_mutant(None, mid), trials=50, rng=RngStream(11))
    assert report.failing_blocks == EXPECTED_BLOCKS[mid], report.summary()


def test_registry_detectors_name_the_failing_blocks():
    for mid, blocks in EXPECTED_BLOCKS.items():
        listed = [d.split(":")[1] for d in REGISTRY[mid].expected_detectors if d.startswith("consistency:")]
        assert listed == blocks


def test_apply_mutant():
    spec = ModelSpec(K=4)
    model = apply_mutant(spec, "M2")
    assert model.spec is spec and model.name == "M2"
    assert type(apply_mutant(spec, "none")) is MixtureModel
    with pytest.raises(KeyError):
        apply_mutant(spec, "M9")


def test_kill_matrix(tmp_path):
    config = GewekeConfig(num_samples=100)
    rows = kill_matrix(None, ["none", "M1", "M4"], RngStream(12), trials=20, geweke_config=config)
    found = detected_by(rows)
    assert found["none"] == []
    assert "consistency:sigma_sq_n" in found["M1"]
    assert "consistency:z" in found["M4"]
    per_mutant = {r.detector for r in rows if r.mutant == "M1"}
    assert "geweke:chain" in per_mutant and "consistency:pi" in per_mutant

    path = tmp_path / "kill.csv"
    write_kill_matrix_csv(rows, path)
    table = list(csv.DictReader(open(path)))
    assert len(table) == len(rows)
    assert set(table[0]) == {"mutant", "detector", "detected", "evidence"}
    assert {r["detected"] for r in table} == {"0", "1"}


def test_kill_matrix_rejects_unknown_ids():
    with pytest.raises(KeyError):
        kill_matrix(None, ["M7"], trials=1, geweke_config=GewekeConfig(num_samples=100))
