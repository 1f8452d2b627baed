"""Mamdani fuzzy inference engine and the stator-flux-reference optimizer.

The optimizer takes the instantaneous torque error and the present flux
reference, both normalized, and produces an increment to the flux
reference.  Inference is classic Mamdani: min for rule strength, consequent
clipping, pointwise-max aggregation on a sampled output grid, centroid
defuzzification.

Membership functions and the rule table are loadable from a plain-text
definition (see ``parse_definition``); the embedded default below ships the
standard 18-rule table.  Universes are fixed and normalized: torque error
``te`` on [-1, 1], flux level ``flux`` on [0, 1], output increment ``d`` on
[-1, 1].  Physical scaling lives in ``OptimizerConfig``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TE_UNIVERSE = (-1.0, 1.0)
FLUX_UNIVERSE = (0.0, 1.0)
OUTPUT_UNIVERSE = (-1.0, 1.0)

DEFAULT_GRID_POINTS = 201

DEFAULT_DEFINITION = """\
# Default stator-flux optimizer definition.
# Universes are normalized: te on [-1,1], flux on [0,1], d on [-1,1].

[te]
NB trapezoid -1 -1 -0.66 -0.33
NM triangle -0.66 -0.33 -0.05
NS triangle -0.33 -0.05 0.05
PS triangle -0.05 0.05 0.33
PM triangle 0.05 0.33 0.66
PB trapezoid 0.33 0.66 1 1

[flux]
S trapezoid 0 0 0.25 0.5
M triangle 0.25 0.5 0.75
B trapezoid 0.5 0.75 1 1

[d]
NB trapezoid -1 -1 -0.8 -0.5
NM triangle -0.8 -0.5 -0.2
NS triangle -0.5 -0.2 0
Z triangle -0.2 0 0.2
PS triangle 0 0.2 0.5
PM triangle 0.2 0.5 0.8
PB trapezoid 0.5 0.8 1 1

[rules]
IF te=NB AND flux=S THEN d=Z
IF te=NM AND flux=S THEN d=PS
IF te=NS AND flux=S THEN d=PB
IF te=PS AND flux=S THEN d=Z
IF te=PM AND flux=S THEN d=PS
IF te=PB AND flux=S THEN d=PB
IF te=NB AND flux=M THEN d=NS
IF te=NM AND flux=M THEN d=Z
IF te=NS AND flux=M THEN d=PM
IF te=PS AND flux=M THEN d=NS
IF te=PM AND flux=M THEN d=Z
IF te=PB AND flux=M THEN d=PM
IF te=NB AND flux=B THEN d=NB
IF te=NM AND flux=B THEN d=NM
IF te=NS AND flux=B THEN d=Z
IF te=PS AND flux=B THEN d=NB
IF te=PM AND flux=B THEN d=NM
IF te=PB AND flux=B THEN d=Z
"""


class FuzzyDefinitionError(ValueError):
    """A definition file failed to parse or validate."""


@dataclass(frozen=True)
class MembershipFunction:
    """Piecewise-linear membership function, triangle or trapezoid."""

    label: str
    shape: str
    points: tuple[float, ...]

    def __post_init__(self) -> None:
        expected = {"triangle": 3, "trapezoid": 4}.get(self.shape)
        if expected is None:
            raise FuzzyDefinitionError(
                f"unknown membership shape {self.shape!r} for {self.label!r}")
        if len(self.points) != expected:
            raise FuzzyDefinitionError(
                f"{self.shape} {self.label!r} needs {expected} breakpoints, "
                f"got {len(self.points)}")
        if any(b < a for a, b in zip(self.points, self.points[1:])):
            raise FuzzyDefinitionError(
                f"breakpoints of {self.label!r} must be nondecreasing: {self.points}")

    def __call__(self, x: float) -> float:
        return membership(self, x)


def membership(mf: MembershipFunction, x: float) -> float:
    """Evaluate a membership function; 0 outside support, 1 on the peak."""
    pts = mf.points
    if mf.shape == "triangle":
        a, b, c = pts
        lo, peak_lo, peak_hi, hi = a, b, b, c
    else:
        lo, peak_lo, peak_hi, hi = pts
    if x < lo or x > hi:
        return 0.0
    if peak_lo <= x <= peak_hi:
        return 1.0
    if x < peak_lo:
        return (x - lo) / (peak_lo - lo)
    return (hi - x) / (hi - peak_hi)


@dataclass(frozen=True)
class LinguisticVariable:
    """Named collection of membership sets covering a closed universe."""

    name: str
    universe: tuple[float, float]
    sets: tuple[MembershipFunction, ...]

    def __post_init__(self) -> None:
        lo, hi = self.universe
        if not lo < hi:
            raise FuzzyDefinitionError(f"bad universe for {self.name!r}: {self.universe}")
        labels = [mf.label for mf in self.sets]
        if len(set(labels)) != len(labels):
            raise FuzzyDefinitionError(f"duplicate set labels in {self.name!r}: {labels}")
        for x in np.linspace(lo, hi, 1001):
            if not any(membership(mf, float(x)) > 0.0 for mf in self.sets):
                raise FuzzyDefinitionError(
                    f"sets of {self.name!r} do not cover the universe at x={float(x):g}")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(mf.label for mf in self.sets)

    def get(self, label: str) -> MembershipFunction:
        for mf in self.sets:
            if mf.label == label:
                return mf
        raise KeyError(label)


@dataclass(frozen=True)
class RuleBase:
    """Total mapping (torque-error label, flux-level label) -> output label."""

    rules: tuple[tuple[str, str, str], ...]
    consequent: dict[tuple[str, str], str] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        table: dict[tuple[str, str], str] = {}
        for te_label, flux_label, out_label in self.rules:
            key = (te_label, flux_label)
            if key in table:
                raise FuzzyDefinitionError(f"duplicate rule for {key}")
            table[key] = out_label
        object.__setattr__(self, "consequent", table)

    def check_total(self, te_labels: tuple[str, ...],
                    flux_labels: tuple[str, ...]) -> None:
        want = {(t, f) for t in te_labels for f in flux_labels}
        have = set(self.consequent)
        if have != want:
            missing = sorted(want - have)
            extra = sorted(have - want)
            raise FuzzyDefinitionError(
                f"rule base is not total: missing {missing}, unknown {extra}")


class FuzzyInference:
    """Mamdani engine over fixed torque-error / flux-level / output variables."""

    def __init__(self, torque_error: LinguisticVariable,
                 flux_level: LinguisticVariable,
                 output: LinguisticVariable,
                 rules: RuleBase,
                 grid_points: int = DEFAULT_GRID_POINTS):
        rules.check_total(torque_error.labels, flux_level.labels)
        for _, _, out_label in rules.rules:
            output.get(out_label)
        self.torque_error = torque_error
        self.flux_level = flux_level
        self.output = output
        self.rules = rules
        self.grid = np.linspace(output.universe[0], output.universe[1], grid_points)
        self._consequents = {
            mf.label: np.array([membership(mf, float(x)) for x in self.grid])
            for mf in output.sets
        }
        # Rules grouped as (te set, flux set, consequent samples) for the hot path.
        self._compiled = [
            (torque_error.get(t), flux_level.get(f), self._consequents[d])
            for t, f, d in rules.rules
        ]

    def infer(self, te_norm: float, flux_norm: float) -> np.ndarray:
        """Aggregate all fired rules into a sampled output fuzzy set.

        Inputs are clamped to their universes.
        """
        te = _clamp(te_norm, *self.torque_error.universe)
        fl = _clamp(flux_norm, *self.flux_level.universe)
        agg = np.zeros_like(self.grid)
        mu_te: dict[int, float] = {}
        mu_fl: dict[int, float] = {}
        for te_mf, fl_mf, consequent in self._compiled:
            s_te = mu_te.get(id(te_mf))
            if s_te is None:
                s_te = mu_te[id(te_mf)] = membership(te_mf, te)
            if s_te == 0.0:
                continue
            s_fl = mu_fl.get(id(fl_mf))
            if s_fl is None:
                s_fl = mu_fl[id(fl_mf)] = membership(fl_mf, fl)
            strength = min(s_te, s_fl)
            if strength > 0.0:
                np.maximum(agg, np.minimum(consequent, strength), out=agg)
        return agg

    def defuzzify(self, aggregate: np.ndarray) -> float:
        """Centroid of the aggregated set; 0 when nothing fired."""
        total = float(aggregate.sum())
        if total == 0.0:
            return 0.0
        return float((self.grid * aggregate).sum() / total)


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


@dataclass(frozen=True)
class OptimizerConfig:
    """Physical scaling of the normalized fuzzy optimizer.

    torque_error_scale   torque error mapping to te = +/-1 [N m]
    delta_max            flux-reference change for d = +/-1, per update [Wb]
    flux_min, flux_max   clamp range of the flux reference [Wb]
    update_period        time between optimizer updates [s]
    """

    torque_error_scale: float
    delta_max: float
    flux_min: float
    flux_max: float
    update_period: float

    def __post_init__(self) -> None:
        for name in ("torque_error_scale", "delta_max", "flux_min", "flux_max",
                     "update_period"):
            if getattr(self, name) <= 0:
                raise ValueError(f"optimizer parameter {name} must be > 0")
        if not self.flux_min < self.flux_max:
            raise ValueError(
                f"flux_min must be < flux_max, got [{self.flux_min}, {self.flux_max}]")


def default_optimizer_config(rated_flux: float, rated_torque: float) -> OptimizerConfig:
    """Defaults derived from the motor ratings.

    The torque-error scale is a tenth of rated torque so that the optimizer
    resolves the switching-ripple-sized errors that carry the load
    information; normalizing by full rated torque would compress every
    steady-state error into the innermost sets.
    """
    return OptimizerConfig(
        torque_error_scale=0.1 * rated_torque,
        delta_max=0.005 * rated_flux,
        flux_min=0.25 * rated_flux,
        flux_max=1.05 * rated_flux,
        update_period=5e-4,
    )


class StatorFluxOptimizer:
    """Adapts the flux reference from the torque error, one update at a time."""

    def __init__(self, config: OptimizerConfig, inference: FuzzyInference | None = None):
        self.config = config
        self.inference = inference if inference is not None else default_inference()

    def step(self, torque_error: float, flux_ref_current: float) -> float:
        """Return the new flux reference, clamped to [flux_min, flux_max]."""
        cfg = self.config
        te_norm = torque_error / cfg.torque_error_scale
        flux_norm = (flux_ref_current - cfg.flux_min) / (cfg.flux_max - cfg.flux_min)
        delta = self.inference.defuzzify(self.inference.infer(te_norm, flux_norm))
        return _clamp(flux_ref_current + delta * cfg.delta_max,
                      cfg.flux_min, cfg.flux_max)


def optimizer_step(config: OptimizerConfig, torque_error: float,
                   flux_ref_current: float,
                   inference: FuzzyInference | None = None) -> float:
    """One-shot form of StatorFluxOptimizer.step."""
    return StatorFluxOptimizer(config, inference).step(torque_error, flux_ref_current)


def parse_definition(text: str, grid_points: int = DEFAULT_GRID_POINTS) -> FuzzyInference:
    """Parse a plain-text fuzzy definition into an inference engine.

    Format: ``[te]``, ``[flux]``, ``[d]`` sections with one membership set
    per line (``label shape b1 b2 b3 [b4]``), then a ``[rules]`` section with
    one rule per line (``IF te=<label> AND flux=<label> THEN d=<label>``).
    ``#`` starts a comment.
    """
    sections: dict[str, list[tuple[int, str]]] = {"te": [], "flux": [], "d": [], "rules": []}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in sections:
                raise FuzzyDefinitionError(f"line {lineno}: unknown section [{name}]")
            current = name
            continue
        if current is None:
            raise FuzzyDefinitionError(f"line {lineno}: content before any section")
        sections[current].append((lineno, line))

    universes = {"te": TE_UNIVERSE, "flux": FLUX_UNIVERSE, "d": OUTPUT_UNIVERSE}
    variables: dict[str, LinguisticVariable] = {}
    for name in ("te", "flux", "d"):
        sets = []
        for lineno, line in sections[name]:
            parts = line.split()
            if len(parts) < 5:
                raise FuzzyDefinitionError(
                    f"line {lineno}: expected 'label shape b1 b2 b3 [b4]', got {line!r}")
            label, shape = parts[0], parts[1]
            try:
                points = tuple(float(p) for p in parts[2:])
            except ValueError as exc:
                raise FuzzyDefinitionError(f"line {lineno}: bad breakpoint: {exc}") from None
            try:
                sets.append(MembershipFunction(label, shape, points))
            except FuzzyDefinitionError as exc:
                raise FuzzyDefinitionError(f"line {lineno}: {exc}") from None
        if not sets:
            raise FuzzyDefinitionError(f"section [{name}] is empty")
        try:
            variables[name] = LinguisticVariable(name, universes[name], tuple(sets))
        except FuzzyDefinitionError as exc:
            raise FuzzyDefinitionError(f"section [{name}]: {exc}") from None

    rules = []
    for lineno, line in sections["rules"]:
        parts = line.split()
        ok = (len(parts) == 6 and parts[0].upper() == "IF" and parts[2].upper() == "AND"
              and parts[4].upper() == "THEN"
              and parts[1].startswith("te=") and parts[3].startswith("flux=")
              and parts[5].startswith("d="))
        if not ok:
            raise FuzzyDefinitionError(
                f"line {lineno}: expected 'IF te=<label> AND flux=<label> THEN d=<label>', "
                f"got {line!r}")
        rules.append((parts[1][3:], parts[3][5:], parts[5][2:]))
    if not rules:
        raise FuzzyDefinitionError("section [rules] is empty")

    rule_base = RuleBase(tuple(rules))
    try:
        return FuzzyInference(variables["te"], variables["flux"], variables["d"],
                              rule_base, grid_points=grid_points)
    except FuzzyDefinitionError as exc:
        raise FuzzyDefinitionError(str(exc)) from None


_default_inference: FuzzyInference | None = None


def default_inference() -> FuzzyInference:
    """The embedded default definition, parsed once and reused."""
    global _default_inference
    if _default_inference is None:
        _default_inference = parse_definition(DEFAULT_DEFINITION)
    return _default_inference
