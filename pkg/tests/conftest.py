from pathlib import Path

import pytest

from pctsim.dsl import parse_model

MODELS = Path(__file__).resolve().parent.parent / "models"


def load(name):
    return parse_model((MODELS / name).read_text())


@pytest.fixture(scope="session")
def renewal():
    """Constant-return renewal chain, only the reference symbol regular."""
    return load("renewal.model")


@pytest.fixture(scope="session")
def fig_model():
    """Two-symbol identity-reach model with five explicit context rules."""
    return load("worked_example.model")


@pytest.fixture(scope="session")
def sweep_template():
    """Identity-reach template with p(ref|anything) = epsilon."""
    return load("lookback_doubling.model")


@pytest.fixture(scope="session")
def alternating():
    """Renewal chain with parity-alternating return probabilities."""
    return load("alternating.model")


@pytest.fixture(scope="session")
def w3_model():
    """Three-letter reference word with a tabulated reach."""
    return load("three_letter_ref.model")


def sweep_at(eps):
    """Sweep-template instance with every return probability equal to eps."""
    from fractions import Fraction

    from pctsim.model import ContextTreeModel, TransitionRules

    base = load("lookback_doubling.model")
    eps = Fraction(eps)
    return ContextTreeModel(
        base.alphabet, base.ref, base.reach,
        TransitionRules(eps, (), (), (eps, 1 - eps)),
    )
