from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np
import pytest

from bistatic_isac.channel import synthesize_capture
from bistatic_isac.config import load_config
from bistatic_isac.evaluate import evaluate
from bistatic_isac.fileio import TrackRecord
from bistatic_isac.pipeline import sense
from bistatic_isac.scene import RadioConfig

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, title: str, ok: bool, detail: str = "") -> None:
    verdict = "PASS" if ok else "FAIL"
    ACCEPTANCE_LINES[number] = f"criterion {number} [{verdict}] {title}" + (f": {detail}" if detail else "")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])


@dataclasses.dataclass
class EndToEnd:
    config: object
    capture: object
    result: object
    report: object


def run_scenario(name: str) -> EndToEnd:
    cfg = load_config(CONFIGS / name, need_scene=True, need_sense=True)
    sim = cfg.simulation
    cap = synthesize_capture(cfg.scene, cfg.radio, sim.num_packets, sim.seed,
                             sim.timing_offset_max, sim.phase_offset_max)
    result = sense(cap.packets, cfg.sense)
    # round-trip through JSON so the evaluation sees exactly what the CLI writes
    records = [TrackRecord.from_json(r.to_json()) for r in result.records]
    report = evaluate(records, cap.truth, swap_radius=cfg.sense.tracker.gate)
    return EndToEnd(cfg, cap, result, report)


@pytest.fixture(scope="session")
def single_target_run() -> EndToEnd:
    return run_scenario("single_target.toml")


@pytest.fixture(scope="session")
def multi_target_run() -> EndToEnd:
    return run_scenario("multi_target.toml")


@pytest.fixture(scope="session")
def desk() -> RadioConfig:
    return RadioConfig.desk_scale()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)
