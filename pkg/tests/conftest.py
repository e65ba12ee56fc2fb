from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# criterion number -> (outcome, detail)
_CRITERIA: dict[int, tuple[str, str]] = {}
CRITERION_NAMES = {
    1: "SELFIES round trip over bundled corpus",
    2: "SELFIES decode robustness (10^4 random sequences)",
    3: "transformer gradient check",
    4: "pretraining sanity (loss ratio, masked accuracy)",
    5: "featurizer algebra",
    6: "GBT split oracle + serialization",
    7: "end-to-end synthetic recovery",
    8: "end-to-end determinism",
    9: "split arithmetic",
}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_logreport(report):
    number = dict(report.user_properties).get("criterion")
    if number is None:
        return
    detail = dict(report.user_properties).get("detail", "")
    if report.when == "call" or (report.when == "setup" and report.failed):
        outcome = "PASS" if report.passed else "FAIL"
        prev = _CRITERIA.get(number)
        if prev is None or prev[0] == "PASS":
            _CRITERIA[number] = (outcome, detail)


@pytest.fixture(autouse=True)
def _criterion_tag(request):
    marker = request.node.get_closest_marker("criterion")
    if marker is not None:
        request.node.user_properties.append(("criterion", marker.args[0]))


@pytest.fixture
def detail(request):
    """Attach a one-line measurement to the acceptance summary."""
    def record(text: str) -> None:
        request.node.user_properties.append(("detail", text))
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERION_NAMES):
        outcome, text = _CRITERIA.get(n, ("NOT RUN", ""))
        line = f"criterion {n} {outcome}: {CRITERION_NAMES[n]}"
        terminalreporter.write_line(line + (f" -- {text}" if text else ""))


TINY_MODEL = {"d_model": 16, "n_heads": 2, "n_layers_enc": 1, "n_layers_dec": 1,
              "d_ff": 32, "max_len": 128}


@pytest.fixture(scope="session")
def tiny_bundle(tmp_path_factory):
    """Small model pretrained briefly on part of the bundled corpus."""
    from electrolyte_sa.pipeline import data_path, load_corpus, run_pretrain
    from electrolyte_sa.transformer import TrainConfig

    root = tmp_path_factory.mktemp("tiny")
    corpus = root / "corpus.smi"
    corpus.write_text("\n".join(load_corpus(data_path("electrolytes.smi"))[::10]) + "\n")
    return run_pretrain(corpus, TINY_MODEL, TrainConfig(epochs=1, batch_size=16, seed=0),
                        root / "bundle")
