from pathlib import Path

REPO_ROOT = Path(__file__).parent.parent
TESTS_PATH = REPO_ROOT / "tests"
CONFIGS_PATH = REPO_ROOT / "configs"
