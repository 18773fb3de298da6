"""The three 3-agent trust matrices used to illustrate when Eigentrust works.

``disconnected``: two components; eigenvalue 1 is double, so there is no
dominant eigenvector. ``triangular``: upper triangular with eigenvalues
1, 0.8, 0.1; everything drains into agent 2. ``positive``: positive and
row-stochastic, the textbook Perron-Frobenius case.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from maxtrust import maxplus as mp

FILES = {
    "disconnected": "example1_disconnected.txt",
    "triangular": "example2_triangular.txt",
    "positive": "example3_positive.txt",
}


def path(name: str) -> str:
    return str(resources.files("maxtrust") / "data" / FILES[name])


def load(name: str) -> np.ndarray:
    return np.array(mp.load(path(name)))


DISCONNECTED = load("disconnected")
TRIANGULAR = load("triangular")
POSITIVE = load("positive")
