"""Network model: buses, branches, and the complex bus admittance matrix.

All electrical quantities are converted to per-unit on (s_base, base_kv)
at load time; downstream modules never see ohms or MW.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

BUS_KINDS = ("slack", "load", "zero_injection")


class NetworkParseError(ValueError):
    """Raised when a network file cannot be parsed against the schema."""


class NetworkValidationError(ValueError):
    """Raised when a parsed network violates a structural invariant."""


@dataclass(frozen=True)
class Bus:
    id: int
    kind: str
    base_kv: float
    p_load_mw: float = 0.0
    q_load_mvar: float = 0.0
    v_setpoint: float | None = None


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    r_ohm: float
    x_ohm: float
    b_us: float = 0.0
    in_service: bool = True


@dataclass(frozen=True)
class Network:
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    s_base_mva: float = 1.0

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def slack_index(self) -> int:
        return next(i for i, b in enumerate(self.buses) if b.kind == "slack")

    @property
    def non_slack(self) -> np.ndarray:
        s = self.slack_index
        return np.array([i for i in range(self.n_bus) if i != s], dtype=np.int64)

    @property
    def n_state(self) -> int:
        return 2 * (self.n_bus - 1)

    def load_pu(self) -> tuple[np.ndarray, np.ndarray]:
        """Nominal (P, Q) demand per bus in per-unit on s_base."""
        p = np.array([b.p_load_mw for b in self.buses]) / self.s_base_mva
        q = np.array([b.q_load_mvar for b in self.buses]) / self.s_base_mva
        return p, q

    def in_service_branches(self) -> list[tuple[int, Branch]]:
        return [(i, br) for i, br in enumerate(self.branches) if br.in_service]


@dataclass(frozen=True)
class AdmittanceMatrix:
    """Dense complex Ybus in per-unit siemens."""

    y: np.ndarray

    @property
    def g(self) -> np.ndarray:
        return np.ascontiguousarray(self.y.real)

    @property
    def b(self) -> np.ndarray:
        return np.ascontiguousarray(self.y.imag)


def _validate(net: Network) -> Network:
    ids = [b.id for b in net.buses]
    if len(set(ids)) != len(ids):
        raise NetworkValidationError("duplicate bus id")
    if ids != list(range(len(ids))):
        raise NetworkValidationError("bus ids must be 0..n_b-1 in order")
    slack = [b for b in net.buses if b.kind == "slack"]
    if len(slack) != 1:
        raise NetworkValidationError(f"expected exactly one slack bus, got {len(slack)}")
    if slack[0].v_setpoint is None or slack[0].v_setpoint <= 0:
        raise NetworkValidationError("slack bus needs a positive v_setpoint")
    for b in net.buses:
        if b.kind not in BUS_KINDS:
            raise NetworkValidationError(f"bus {b.id}: unknown kind {b.kind!r}")
        if b.base_kv <= 0:
            raise NetworkValidationError(f"bus {b.id}: base_kv must be > 0")
        if b.kind == "zero_injection" and (b.p_load_mw != 0 or b.q_load_mvar != 0):
            raise NetworkValidationError(f"bus {b.id}: zero-injection bus carries load")
    n = net.n_bus
    for k, br in enumerate(net.branches):
        if br.from_bus == br.to_bus:
            raise NetworkValidationError(f"branch {k}: from == to")
        if not (0 <= br.from_bus < n and 0 <= br.to_bus < n):
            raise NetworkValidationError(f"branch {k}: endpoint references missing bus")
        if br.r_ohm == 0 and br.x_ohm == 0:
            raise NetworkValidationError(f"branch {k}: zero series impedance")
    # connectivity of the in-service graph
    adj: dict[int, set[int]] = {i: set() for i in range(n)}
    n_in_service = 0
    for _, br in net.in_service_branches():
        adj[br.from_bus].add(br.to_bus)
        adj[br.to_bus].add(br.from_bus)
        n_in_service += 1
    seen = {0}
    stack = [0]
    while stack:
        for j in adj[stack.pop()]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    if len(seen) != n:
        missing = sorted(set(range(n)) - seen)
        raise NetworkValidationError(f"in-service graph disconnected; unreachable buses {missing}")
    return net


def network_from_dict(data: dict) -> Network:
    try:
        buses = tuple(
            Bus(
                id=int(b["id"]),
                kind=str(b["kind"]),
                base_kv=float(b["base_kv"]),
                p_load_mw=float(b.get("p_load_mw", 0.0)),
                q_load_mvar=float(b.get("q_load_mvar", 0.0)),
                v_setpoint=float(b["v_setpoint"]) if "v_setpoint" in b else None,
            )
            for b in data["buses"]
        )
        branches = tuple(
            Branch(
                from_bus=int(br["from"]),
                to_bus=int(br["to"]),
                r_ohm=float(br["r_ohm"]),
                x_ohm=float(br["x_ohm"]),
                b_us=float(br.get("b_us", 0.0)),
                in_service=bool(br.get("in_service", True)),
            )
            for br in data["branches"]
        )
        net = Network(buses=buses, branches=branches, s_base_mva=float(data["s_base_mva"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise NetworkParseError(f"malformed network data: {exc}") from exc
    return _validate(net)


def load_network(path) -> Network:
    """Load and validate a network from a JSON file."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise NetworkParseError(f"cannot read network file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise NetworkParseError(f"network file {path} must hold a JSON object")
    return network_from_dict(data)


def bundled_network() -> Network:
    """The 15-bus MV benchmark fixture shipped with the package."""
    text = resources.files("crbsense.data").joinpath("cigre_mv.json").read_text()
    return network_from_dict(json.loads(text))


def branch_admittance_pu(net: Network, br: Branch) -> tuple[complex, float]:
    """Series admittance and total shunt susceptance of a branch, per-unit."""
    base_kv = net.buses[br.from_bus].base_kv
    z_base = base_kv**2 / net.s_base_mva
    y_series = 1.0 / complex(br.r_ohm / z_base, br.x_ohm / z_base)
    b_shunt = br.b_us * 1e-6 * z_base
    return y_series, b_shunt


def build_ybus(net: Network) -> AdmittanceMatrix:
    """Assemble the dense per-unit bus admittance matrix.

    Out-of-service branches contribute nothing.  Off-diagonals hold the
    negated series admittance, diagonals accumulate series plus half the
    line-charging susceptance of each incident branch.
    """
    n = net.n_bus
    y = np.zeros((n, n), dtype=np.complex128)
    for _, br in net.in_service_branches():
        ys, bsh = branch_admittance_pu(net, br)
        i, j = br.from_bus, br.to_bus
        y[i, j] -= ys
        y[j, i] -= ys
        y[i, i] += ys + 0.5j * bsh
        y[j, j] += ys + 0.5j * bsh
    return AdmittanceMatrix(y=y)
