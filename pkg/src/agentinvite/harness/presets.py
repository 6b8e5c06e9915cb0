"""Experiment presets.

Examples 1-4 use the reference parameter sets (arrival rate 2000 =
``lambda * r`` with ``r = 1000``); their source is ``"reference"``.  The
two Example 5 sets are ``"artifact-chosen"``: picked for this package so
that gain condition (i) holds and the bounded trajectory hits the boundary.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..core import ModelParams, SimState, validate

R = 1000


def _params(**kw) -> ModelParams:
    kw.setdefault("lam", 2.0)
    kw.setdefault("r", R)
    return validate(ModelParams(**kw))


EXAMPLE1 = _params(alpha=0.5, beta=3.0, mu=2.0, gamma=1.0, epsilon=1.5, delta=1.0, theta=0.1)
EXAMPLE2 = _params(alpha=0.9, beta=0.05, mu=0.5, gamma=1.0, epsilon=1.0, delta=0.01, theta=0.01)
EXAMPLE4 = _params(alpha=0.7, beta=0.5, mu=3.0, gamma=10.0, epsilon=1.0, delta=1.0, theta=2.0)

EX5_SET1 = _params(alpha=0.5, beta=1.0, mu=1.0, gamma=2.0, epsilon=1.0, delta=0.5, theta=0.2)
EX5_SET2 = _params(alpha=0.8, beta=0.2, mu=1.0, gamma=5.0, epsilon=0.5, delta=0.1, theta=0.05)


@dataclass(frozen=True)
class ExperimentPreset:
    id: str
    params: ModelParams
    initial: SimState
    scheme: str
    horizon: float
    source: str = "reference"
    compare_unbounded: bool = False
    description: str = ""


def _build() -> dict[str, ExperimentPreset]:
    presets = []
    ex1_initials = {
        "a": (0, 0, 0),
        "b": (0, 2000, 0),
        "c": (2000, -2000, 1000),
        "d": (2000, 4000, 1000),
    }
    for tag, xyz in ex1_initials.items():
        presets.append(
            ExperimentPreset(f"ex1{tag}", EXAMPLE1, SimState(*xyz), "stylized", 100.0,
                             description=f"Example 1, stylized scheme, initial {xyz}")
        )
    for g in (1, 5, 10, 20):
        presets.append(
            ExperimentPreset(f"ex2g{g}", EXAMPLE2.with_(gamma=float(g)), SimState(1000, 6000, 2000), "stylized", 200.0,
                             description=f"Example 2, stylized scheme, gamma={g}")
        )
    presets.append(ExperimentPreset("ex3a", EXAMPLE1, SimState(0, 0, 0, 0.0), "actual", 50.0,
                                    description="Example 3, actual scheme, X_target(0)=0"))
    presets.append(ExperimentPreset("ex3b", EXAMPLE1, SimState(0, 0, 0, 1000.0), "actual", 50.0,
                                    description="Example 3, actual scheme, X_target(0)=1000"))
    for g, tag in ((10.0, "10"), (20.0, "20"), (2.3, "2.3")):
        presets.append(
            ExperimentPreset(f"ex4g{tag}", EXAMPLE4.with_(gamma=g), SimState(0, 0, 0, 1000.0), "actual", 50.0,
                             description=f"Example 4, actual scheme, gamma={tag}")
        )
    presets.append(ExperimentPreset("ex5-set1", EX5_SET1, SimState(0, 8000, 3000), "stylized", 100.0,
                                    source="artifact-chosen", compare_unbounded=True,
                                    description="bounded vs boundary-free fluid, set 1"))
    presets.append(ExperimentPreset("ex5-set2", EX5_SET2, SimState(0, 8000, 3000), "stylized", 200.0,
                                    source="artifact-chosen", compare_unbounded=True,
                                    description="bounded vs boundary-free fluid, set 2"))
    return {p.id: p for p in presets}


PRESETS = _build()


def get_preset(preset_id: str) -> ExperimentPreset:
    try:
        return PRESETS[preset_id]
    except KeyError:
        raise KeyError(f"unknown example id {preset_id!r}; known: {', '.join(PRESETS)}") from None


def default_battery(params: ModelParams) -> list[SimState]:
    """Initial states scaled by the arrival rate; the Example 1 initial states for rate 2000 are members."""
    lam = params.arrival_rate
    pts = [(0, 0, 0), (0, lam, 0), (lam, -lam, lam / 2), (lam, 2 * lam, lam / 2), (lam / 2, 3 * lam, lam)]
    return [SimState(*(int(round(c)) for c in pt)) for pt in pts]
