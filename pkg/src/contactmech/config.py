"""JSON system configurations: loading, validation and construction.

Configs are validated against the shipped ``schema.json`` first, then
semantically: coordinate arities, expression syntax, unbound symbols and
the length of the initial state.  Every problem is a ``ConfigError``
carrying a JSON pointer to the offending entry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import jsonschema

from .exterior import VectorField
from .expr import ParseError, as_expr, free_vars, parse
from .hamiltonian import ContactHamiltonianSystem
from .integrate import IntegratorConfig
from .lagrangian import ContactLagrangianSystem, HolonomicDissipationLagrangian
from .symmetry import Quantity, SymmetryCandidate, dissipated_from_symmetry, lift_for, quotient_quantity

__all__ = ["ConfigError", "SystemConfig", "load_config", "parse_config", "catalog_names", "resolve_config_path",
           "SCHEMA"]


class ConfigError(ValueError):
    def __init__(self, message: str, pointer: str = ""):
        self.pointer = pointer
        super().__init__(f"{pointer}: {message}" if pointer else message)


def _load_schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("schema.json").read_text())


SCHEMA = _load_schema()
_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def _pointer(path) -> str:
    return "/" + "/".join(str(p).replace("~", "~0").replace("/", "~1") for p in path) if path else "/"


def catalog_names() -> list[str]:
    root = resources.files(__package__).joinpath("catalog")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_config_path(spec: str) -> Path:
    """A path on disk, or the name of a shipped catalog system."""
    p = Path(spec)
    if p.exists():
        return p
    if spec in catalog_names():
        return Path(str(resources.files(__package__).joinpath("catalog", f"{spec}.json")))
    raise ConfigError(f"no such config file or catalog system: {spec!r} (catalog: {', '.join(catalog_names())})")


@dataclass
class SystemConfig:
    name: str
    formalism: str
    n: int
    q: tuple[str, ...]
    fiber: tuple[str, ...]
    s: str
    expression: str
    params: dict[str, float]
    symmetries: dict[str, Any] = field(default_factory=dict)
    quantities: dict[str, Any] = field(default_factory=dict)
    integration: dict[str, Any] = field(default_factory=dict)
    initial_state: tuple[float, ...] | None = None
    check: dict[str, Any] = field(default_factory=dict)
    hamiltonian: dict[str, Any] | None = None
    holonomic: dict[str, Any] | None = None
    description: str = ""
    source: str = ""

    @property
    def coords(self) -> tuple[str, ...]:
        return self.q + self.fiber + (self.s,)

    @cached_property
    def system(self):
        if self.formalism == "lagrangian":
            return ContactLagrangianSystem(self.expression, self.q, self.fiber, self.s, self.params, self.name)
        return ContactHamiltonianSystem(self.expression, self.q, self.fiber, self.s, self.params, self.name)

    @cached_property
    def companion(self) -> ContactHamiltonianSystem | None:
        if self.hamiltonian is None:
            return None
        p = tuple(self.hamiltonian.get("p") or _default_fiber(self.q, "p"))
        return ContactHamiltonianSystem(self.hamiltonian["expression"], self.q, p, self.s, self.params,
                                        self.name + " (companion)")

    @cached_property
    def holonomic_system(self) -> HolonomicDissipationLagrangian | None:
        if self.holonomic is None:
            return None
        return HolonomicDissipationLagrangian(self.holonomic["base"], self.holonomic["phi"], self.q, self.fiber,
                                              self.s, self.params)

    def integrator(self, **overrides) -> IntegratorConfig:
        return IntegratorConfig(**{**self.integration, **overrides})

    def symmetry_candidates(self) -> dict[str, tuple[SymmetryCandidate, bool]]:
        """name -> (candidate, declared contact symmetry)."""
        sys = self.system
        out = {}
        for name, spec in self.symmetries.items():
            contact = False
            if isinstance(spec, dict):
                contact = bool(spec.get("contact", False))
                spec = {"lift": spec["lift"]} if "lift" in spec else spec["components"]
            if spec == "dynamics":
                Y = sys.dynamics
            elif isinstance(spec, dict):
                Y = lift_for(sys, spec["lift"])
            else:
                Y = VectorField(tuple(as_expr(c) for c in spec), sys.coords, sys.params)
            out[name] = (SymmetryCandidate(Y, name), contact)
        return out

    def quantity_objects(self) -> dict[str, Quantity]:
        sys = self.system
        cands = self.symmetry_candidates()
        out: dict[str, Quantity] = {}
        for name, spec in self.quantities.items():
            if isinstance(spec, str):
                spec = {"expr": spec}
            if "expr" in spec:
                out[name] = Quantity(spec["expr"], spec.get("kind", "unknown"), name)
            elif "from_symmetry" in spec:
                out[name] = dissipated_from_symmetry(cands[spec["from_symmetry"]][0].Y, sys.eta, name)
            else:
                a, b = spec["quotient"]
                out[name] = quotient_quantity(out[a], out[b], name)
        return out


def _default_fiber(q, prefix):
    if tuple(q) == ("q",):
        return (prefix,)
    return tuple(f"{prefix}{qi}" for qi in q)


def _check_expr(text: str, pointer: str, known: set[str]):
    try:
        e = parse(text)
    except ParseError as exc:
        raise ConfigError(f"cannot parse {text!r} at offset {exc.offset}: {exc}", pointer) from None
    missing = free_vars(e) - known
    if missing:
        raise ConfigError(f"unbound symbol(s) {', '.join(sorted(missing))} in {text!r}", pointer)
    return e


def parse_config(doc: Mapping[str, Any], source: str = "") -> SystemConfig:
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(f"schema violation: {err.message}", _pointer(err.absolute_path))

    n = doc["n"]
    coords_doc = doc["coordinates"]
    fiber_key = "v" if doc["formalism"] == "lagrangian" else "p"
    other_key = "p" if fiber_key == "v" else "v"
    if other_key in coords_doc:
        raise ConfigError(f"{doc['formalism']} systems take '{fiber_key}', not '{other_key}'",
                          f"/coordinates/{other_key}")
    q = tuple(coords_doc["q"])
    fiber = tuple(coords_doc.get(fiber_key) or _default_fiber(q, fiber_key))
    s = coords_doc.get("s", "s")
    for key, names in (("q", q), (fiber_key, fiber)):
        if len(names) != n:
            raise ConfigError(f"n = {n} but {len(names)} name(s) given", f"/coordinates/{key}")
    coords = q + fiber + (s,)
    if len(set(coords)) != len(coords):
        raise ConfigError(f"coordinate names must be distinct: {coords}", "/coordinates")
    params = {k: float(v) for k, v in doc.get("params", {}).items()}
    clash = set(params) & set(coords)
    if clash:
        raise ConfigError(f"names used as both coordinates and parameters: {sorted(clash)}", "/params")
    known = set(coords) | set(params)
    _check_expr(doc["expression"], "/expression", known)

    known_q = set(q) | set(params)
    for name, spec in doc.get("symmetries", {}).items():
        base = f"/symmetries/{name}"
        if isinstance(spec, dict):
            if "lift" in spec:
                if len(spec["lift"]) != n:
                    raise ConfigError(f"a lift needs n = {n} components, got {len(spec['lift'])}", base + "/lift")
                for i, c in enumerate(spec["lift"]):
                    _check_expr(c, f"{base}/lift/{i}", known_q)
                continue
            spec = spec["components"]
            base += "/components"
        if spec == "dynamics":
            continue
        if len(spec) != len(coords):
            raise ConfigError(f"expected {len(coords)} components, got {len(spec)}", base)
        for i, c in enumerate(spec):
            _check_expr(c, f"{base}/{i}", known)

    qnames = doc.get("quantities", {})
    seen: dict[str, str] = {}
    for name, spec in qnames.items():
        base = f"/quantities/{name}"
        if isinstance(spec, str):
            _check_expr(spec, base, known)
            seen[name] = "unknown"
        elif "expr" in spec:
            _check_expr(spec["expr"], base + "/expr", known)
            seen[name] = spec.get("kind", "unknown")
        elif "from_symmetry" in spec:
            if spec["from_symmetry"] not in doc.get("symmetries", {}):
                raise ConfigError(f"unknown symmetry {spec['from_symmetry']!r}", base + "/from_symmetry")
            seen[name] = "dissipated"
        else:
            for i, ref in enumerate(spec["quotient"]):
                if ref not in seen:
                    raise ConfigError(f"{ref!r} must be a quantity defined earlier", f"{base}/quotient/{i}")
                if seen[ref] != "dissipated":
                    raise ConfigError(f"{ref!r} is not a dissipated quantity", f"{base}/quotient/{i}")
            seen[name] = "conserved"

    x0 = doc.get("initial_state")
    if x0 is not None and len(x0) != 2 * n + 1:
        raise ConfigError(f"initial state needs 2n+1 = {2 * n + 1} entries, got {len(x0)}", "/initial_state")

    ham = doc.get("hamiltonian")
    if ham is not None:
        if doc["formalism"] != "lagrangian":
            raise ConfigError("a companion Hamiltonian only makes sense for a Lagrangian system", "/hamiltonian")
        p = tuple(ham.get("p") or _default_fiber(q, "p"))
        if len(p) != n:
            raise ConfigError(f"n = {n} but {len(p)} momentum name(s) given", "/hamiltonian/p")
        _check_expr(ham["expression"], "/hamiltonian/expression", set(q) | set(p) | {s} | set(params))
    hol = doc.get("holonomic")
    if hol is not None:
        if doc["formalism"] != "lagrangian":
            raise ConfigError("the holonomic block needs a Lagrangian system", "/holonomic")
        _check_expr(hol["base"], "/holonomic/base", known)
        _check_expr(hol["phi"], "/holonomic/phi", known)

    try:
        IntegratorConfig(**doc.get("integration", {}))
    except ValueError as exc:
        raise ConfigError(str(exc), "/integration") from None

    cfg = SystemConfig(
        name=doc["name"], formalism=doc["formalism"], n=n, q=q, fiber=fiber, s=s,
        expression=doc["expression"], params=params, symmetries=dict(doc.get("symmetries", {})),
        quantities=dict(qnames), integration=dict(doc.get("integration", {})),
        initial_state=None if x0 is None else tuple(float(v) for v in x0), check=dict(doc.get("check", {})),
        hamiltonian=ham, holonomic=hol, description=doc.get("description", ""), source=source,
    )
    try:
        cfg.system
        cfg.companion
        cfg.holonomic_system
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path: str | Path) -> SystemConfig:
    path = resolve_config_path(str(path))
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(doc, str(path))
