import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from featureclock import load_dataset
from featureclock.cli import demo_paths


@pytest.fixture(scope="session")
def iris_dataset():
    x_path, y_path, labels_path = demo_paths()
    return load_dataset(x_path, y_path, labels_path)
