"""Reference tables shipped as CSV.

``case_test_slices.csv``          standardized test-group sample data (11 slices x 10 indicators)
``case_degrees.csv``  the 36 case-study degrees of association (label,degree)
``case_reference.csv``   the case-study reference sequence as a one-row matrix
"""

from importlib import resources
from pathlib import Path

NAMES = ("case_test_slices.csv", "case_degrees.csv", "case_reference.csv")


def path(name):
    if name not in NAMES:
        raise FileNotFoundError(f"unknown fixture {name!r}; available: {', '.join(NAMES)}")
    return Path(str(resources.files(__name__).joinpath(name)))
