import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from prbslice.presets import preset_config, preset_scenario_spec


@pytest.fixture(scope="session")
def small_run():
    """One (3,2,4) oracle run shared across read-only tests."""
    from prbslice.oracle import simulate

    config = preset_config("3-2-4")
    scenario = preset_scenario_spec("3-2-4").generate(config, 1)
    return config, scenario, simulate(config, scenario)
