"""Network data model: ingestion, validation and pipe discretization.

Electric quantities are kept in MW throughout.  Gas pressures are stored in
pascal internally and converted from/to bar only at the file boundary, so the
pipe coefficients c1..c3 are plain SI values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

PA_PER_BAR = 1.0e5

EXPECTED_UNITS = {
    "pressure": "bar",
    "power": "MW",
    "gas_flow": "kg/s",
    "length": "km",
}


class NetworkError(ValueError):
    """Raised for schema violations, dangling references or bad invariants."""


def _fail(entity: str, fieldname: str, msg: str):
    raise NetworkError(f"{entity}.{fieldname}: {msg}")


@dataclass(frozen=True)
class TimeGrid:
    horizon_hours: float = 24.0
    dt_minutes: float = 5.0

    def __post_init__(self):
        if self.dt_minutes <= 0:
            _fail("time_grid", "dt_minutes", "must be positive")
        ratio = self.horizon_hours * 60.0 / self.dt_minutes
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            _fail("time_grid", "horizon_hours",
                  f"horizon {self.horizon_hours} h not divisible by dt {self.dt_minutes} min")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon_hours * 60.0 / self.dt_minutes))

    @property
    def dt_hours(self) -> float:
        return self.dt_minutes / 60.0

    @property
    def dt_seconds(self) -> float:
        return self.dt_minutes * 60.0


@dataclass(frozen=True)
class Bus:
    id: str
    demand_series: tuple  # MW per step


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: str
    to_bus: str
    reactance: float  # p.u.
    flow_limit: float  # MW


@dataclass(frozen=True)
class Generator:
    id: str
    bus: str
    is_gas_fired: bool
    cost_quad: tuple  # (a, b, c) in $/MW^2 h, $/MWh, $
    p_min: float
    p_max: float
    ramp_per_step: float  # MW per dt
    frp_up_max: float
    frp_dn_max: float


@dataclass(frozen=True)
class RenewableUnit:
    id: str
    bus: str
    kind: str  # "wind" | "solar"
    forecast_series: tuple  # MW per step


@dataclass(frozen=True)
class Junction:
    id: str
    pr_min: float  # Pa
    pr_max: float  # Pa


@dataclass(frozen=True)
class Pipe:
    id: str
    from_junction: str
    to_junction: str
    length: float  # m
    diameter: float  # m
    friction: float
    n_segments: int = 0  # derived
    dx: float = 0.0  # m, derived
    c1: float = 0.0
    c2: float = 0.0
    c3: float = 0.0

    @property
    def n_nodes(self) -> int:
        return self.n_segments + 1


@dataclass(frozen=True)
class Compressor:
    junction_id: str
    boost: float  # > 1


@dataclass(frozen=True)
class Supplier:
    id: str
    junction: str
    q_min: float  # kg/s
    q_max: float
    price: float  # $/kg


@dataclass(frozen=True)
class HeatLoad:
    id: str
    junction: str
    demand_series: tuple  # kg/s per step


@dataclass(frozen=True)
class CouplingEntry:
    junction: str
    heat_rate: float  # kg/s per MW


@dataclass(frozen=True)
class PenaltyConfig:
    kappa_E: float  # $/MWh unserved electricity
    kappa_S: float  # $ per kg/s of fuel shortfall per step

    def __post_init__(self):
        if self.kappa_E <= 0:
            _fail("penalties", "kappa_E", "must be positive")
        if self.kappa_S <= 0:
            _fail("penalties", "kappa_S", "must be positive")


@dataclass(frozen=True)
class ElectricNetwork:
    buses: tuple
    lines: tuple
    generators: tuple
    renewables: tuple
    time_grid: TimeGrid

    def bus_index(self) -> dict:
        return {b.id: i for i, b in enumerate(self.buses)}

    def gas_fired(self) -> list:
        return [g for g in self.generators if g.is_gas_fired]

    @property
    def peak_demand(self) -> float:
        n = self.time_grid.n_steps
        return max(sum(b.demand_series[t] for b in self.buses) for t in range(n))


@dataclass(frozen=True)
class GasNetwork:
    junctions: tuple
    pipes: tuple
    compressors: tuple
    suppliers: tuple
    heat_loads: tuple
    time_grid: TimeGrid
    sound_speed: float = 350.0
    dx_target: float = 10_000.0  # m

    def junction_index(self) -> dict:
        return {j.id: i for i, j in enumerate(self.junctions)}

    def compressor_junctions(self) -> set:
        return {c.junction_id for c in self.compressors}


# CouplingMap: generator id -> CouplingEntry
CouplingMap = dict


@dataclass(frozen=True)
class Fixture:
    elec: ElectricNetwork
    gas: GasNetwork
    coupling: CouplingMap
    penalties: PenaltyConfig

    @property
    def time_grid(self) -> TimeGrid:
        return self.elec.time_grid


def compute_pipe_coefficients(diameter: float, friction: float,
                              sound_speed: float) -> tuple:
    """Coefficients (c1, c2, c3) of the discretized pipe equations, SI units."""
    if diameter <= 0:
        raise NetworkError(f"pipe diameter {diameter} must be positive")
    if friction <= 0:
        raise NetworkError(f"pipe friction {friction} must be positive")
    if sound_speed <= 0:
        raise NetworkError(f"sound speed {sound_speed} must be positive")
    area = math.pi * diameter ** 2 / 4.0
    c1 = area / sound_speed ** 2
    c2 = area
    c3 = 2.0 * diameter * area ** 2 / (friction * sound_speed ** 2)
    return c1, c2, c3


def discretize_pipe(length: float, dx_target: float) -> tuple:
    """Segment count and actual spatial step for a pipe of given length (m)."""
    if dx_target <= 0:
        raise NetworkError(f"dx_target {dx_target} must be positive")
    n_segments = max(1, math.ceil(length / dx_target - 1e-12))
    return n_segments, length / n_segments


def finalize_pipe(pipe: Pipe, sound_speed: float, dx_target: float) -> Pipe:
    c1, c2, c3 = compute_pipe_coefficients(pipe.diameter, pipe.friction, sound_speed)
    n_segments, dx = discretize_pipe(pipe.length, dx_target)
    return replace(pipe, n_segments=n_segments, dx=dx, c1=c1, c2=c2, c3=c3)


def _require(d: dict, key: str, entity: str):
    if key not in d:
        _fail(entity, key, "missing required field")
    return d[key]


def _series(raw, n_steps: int, entity: str, fieldname: str) -> tuple:
    vals = tuple(float(v) for v in raw)
    if len(vals) != n_steps:
        _fail(entity, fieldname, f"series length {len(vals)} != n_steps {n_steps}")
    return vals


def _check_units(doc: dict, path):
    units = doc.get("units", {})
    for key, expected in units.items():
        if key in EXPECTED_UNITS and expected != EXPECTED_UNITS[key]:
            raise NetworkError(
                f"{path}: units.{key} is '{expected}', expected '{EXPECTED_UNITS[key]}'")


def _load_doc(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise NetworkError(f"file not found: {p}")
    with open(p) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise NetworkError(f"{p}: invalid JSON ({exc})") from exc
    _check_units(doc, p)
    return doc


def _parse_time_grid(doc: dict) -> TimeGrid | None:
    tg = doc.get("time_grid")
    if tg is None:
        return None
    return TimeGrid(horizon_hours=float(tg.get("horizon_hours", 24.0)),
                    dt_minutes=float(tg.get("dt_minutes", 5.0)))


def _parse_elec(doc: dict, grid: TimeGrid) -> ElectricNetwork:
    n = grid.n_steps
    buses = []
    for raw in _require(doc, "buses", "elec"):
        bid = str(_require(raw, "id", "bus"))
        buses.append(Bus(id=bid,
                         demand_series=_series(_require(raw, "demand_series", f"bus {bid}"),
                                               n, f"bus {bid}", "demand_series")))
    bus_ids = {b.id for b in buses}
    if len(bus_ids) != len(buses):
        _fail("buses", "id", "duplicate bus ids")

    lines = []
    for raw in doc.get("lines", []):
        lid = str(_require(raw, "id", "line"))
        line = Line(id=lid, from_bus=str(raw["from_bus"]), to_bus=str(raw["to_bus"]),
                    reactance=float(raw["reactance"]), flow_limit=float(raw["flow_limit"]))
        for end in (line.from_bus, line.to_bus):
            if end not in bus_ids:
                _fail(f"line {lid}", "from_bus/to_bus", f"unknown bus '{end}'")
        if line.reactance <= 0:
            _fail(f"line {lid}", "reactance", "must be positive")
        if line.flow_limit <= 0:
            _fail(f"line {lid}", "flow_limit", "must be positive")
        lines.append(line)

    gens = []
    for raw in _require(doc, "generators", "elec"):
        gid = str(_require(raw, "id", "generator"))
        cq = raw.get("cost_quad", (0.0, 0.0, 0.0))
        g = Generator(id=gid, bus=str(raw["bus"]),
                      is_gas_fired=bool(raw.get("is_gas_fired", False)),
                      cost_quad=(float(cq[0]), float(cq[1]), float(cq[2])),
                      p_min=float(raw["p_min"]), p_max=float(raw["p_max"]),
                      ramp_per_step=float(raw["ramp_per_step"]),
                      frp_up_max=float(raw.get("frp_up_max", raw["ramp_per_step"])),
                      frp_dn_max=float(raw.get("frp_dn_max", raw["ramp_per_step"])))
        if g.bus not in bus_ids:
            _fail(f"generator {gid}", "bus", f"unknown bus '{g.bus}'")
        if g.p_min > g.p_max:
            _fail(f"generator {gid}", "p_min", f"p_min {g.p_min} > p_max {g.p_max}")
        if g.cost_quad[0] < 0:
            _fail(f"generator {gid}", "cost_quad", "quadratic coefficient must be >= 0")
        if g.ramp_per_step <= 0:
            _fail(f"generator {gid}", "ramp_per_step", "must be positive")
        if g.frp_up_max > g.ramp_per_step + 1e-12 or g.frp_dn_max > g.ramp_per_step + 1e-12:
            _fail(f"generator {gid}", "frp_up_max", "FRP maxima cannot exceed ramp_per_step")
        if g.frp_up_max < 0 or g.frp_dn_max < 0:
            _fail(f"generator {gid}", "frp_up_max", "must be >= 0")
        gens.append(g)
    if not gens:
        raise NetworkError("no generators")
    if len({g.id for g in gens}) != len(gens):
        _fail("generators", "id", "duplicate generator ids")

    renewables = []
    for raw in doc.get("renewables", []):
        rid = str(_require(raw, "id", "renewable"))
        r = RenewableUnit(id=rid, bus=str(raw["bus"]), kind=str(raw["kind"]),
                          forecast_series=_series(raw["forecast_series"], n,
                                                  f"renewable {rid}", "forecast_series"))
        if r.bus not in bus_ids:
            _fail(f"renewable {rid}", "bus", f"unknown bus '{r.bus}'")
        if r.kind not in ("wind", "solar"):
            _fail(f"renewable {rid}", "kind", f"unknown kind '{r.kind}'")
        if min(r.forecast_series) < 0:
            _fail(f"renewable {rid}", "forecast_series", "forecast must be >= 0")
        renewables.append(r)

    for b in buses:
        if min(b.demand_series) < 0:
            _fail(f"bus {b.id}", "demand_series", "demand must be >= 0")

    return ElectricNetwork(buses=tuple(buses), lines=tuple(lines),
                           generators=tuple(gens), renewables=tuple(renewables),
                           time_grid=grid)


def _parse_gas(doc: dict, grid: TimeGrid) -> GasNetwork:
    n = grid.n_steps
    opts = doc.get("gas_options", {})
    sound_speed = float(opts.get("sound_speed", 350.0))
    dx_target = float(opts.get("dx_target_km", 10.0)) * 1000.0

    junctions = []
    for raw in _require(doc, "junctions", "gas"):
        jid = str(_require(raw, "id", "junction"))
        j = Junction(id=jid, pr_min=float(raw["pr_min"]) * PA_PER_BAR,
                     pr_max=float(raw["pr_max"]) * PA_PER_BAR)
        if j.pr_min >= j.pr_max:
            _fail(f"junction {jid}", "pr_min", "pr_min must be < pr_max")
        junctions.append(j)
    jids = {j.id for j in junctions}
    if len(jids) != len(junctions):
        _fail("junctions", "id", "duplicate junction ids")

    pipes = []
    for raw in doc.get("pipes", []):
        pid = str(_require(raw, "id", "pipe"))
        p = Pipe(id=pid, from_junction=str(raw["from_junction"]),
                 to_junction=str(raw["to_junction"]),
                 length=float(raw["length"]) * 1000.0,
                 diameter=float(raw["diameter"]), friction=float(raw["friction"]))
        for end in (p.from_junction, p.to_junction):
            if end not in jids:
                _fail(f"pipe {pid}", "from_junction/to_junction", f"unknown junction '{end}'")
        if p.length <= 0:
            _fail(f"pipe {pid}", "length", "must be positive")
        pipes.append(finalize_pipe(p, sound_speed, dx_target))

    compressors = []
    for raw in doc.get("compressors", []):
        c = Compressor(junction_id=str(raw["junction_id"]), boost=float(raw["boost"]))
        if c.junction_id not in jids:
            _fail("compressor", "junction_id", f"unknown junction '{c.junction_id}'")
        if c.boost <= 1.0:
            _fail(f"compressor at {c.junction_id}", "boost", "must be > 1")
        compressors.append(c)

    suppliers = []
    for raw in _require(doc, "suppliers", "gas"):
        sid = str(_require(raw, "id", "supplier"))
        s = Supplier(id=sid, junction=str(raw["junction"]),
                     q_min=float(raw["q_min"]), q_max=float(raw["q_max"]),
                     price=float(raw["price"]))
        if s.junction not in jids:
            _fail(f"supplier {sid}", "junction", f"unknown junction '{s.junction}'")
        if s.q_min > s.q_max:
            _fail(f"supplier {sid}", "q_min", "q_min must be <= q_max")
        suppliers.append(s)

    heat_loads = []
    for raw in doc.get("heat_loads", []):
        hid = str(_require(raw, "id", "heat_load"))
        h = HeatLoad(id=hid, junction=str(raw["junction"]),
                     demand_series=_series(raw["demand_series"], n,
                                           f"heat_load {hid}", "demand_series"))
        if h.junction not in jids:
            _fail(f"heat_load {hid}", "junction", f"unknown junction '{h.junction}'")
        if min(h.demand_series) < 0:
            _fail(f"heat_load {hid}", "demand_series", "demand must be >= 0")
        heat_loads.append(h)

    return GasNetwork(junctions=tuple(junctions), pipes=tuple(pipes),
                      compressors=tuple(compressors), suppliers=tuple(suppliers),
                      heat_loads=tuple(heat_loads), time_grid=grid,
                      sound_speed=sound_speed, dx_target=dx_target)


def _parse_coupling(doc: dict, elec: ElectricNetwork, gas: GasNetwork) -> CouplingMap:
    raw = _require(doc, "coupling", "coupling")
    jids = {j.id for j in gas.junctions}
    coupling = {}
    for gen_id, entry in raw.items():
        junction = str(entry["junction"])
        if junction not in jids:
            _fail(f"coupling {gen_id}", "junction", f"unknown junction '{junction}'")
        hr = float(entry["heat_rate"])
        if hr <= 0:
            _fail(f"coupling {gen_id}", "heat_rate", "must be positive")
        coupling[str(gen_id)] = CouplingEntry(junction=junction, heat_rate=hr)

    gen_ids = {g.id for g in elec.generators}
    for gen_id in coupling:
        if gen_id not in gen_ids:
            _fail(f"coupling {gen_id}", "generator", "references unknown generator")
    for g in elec.generators:
        if g.is_gas_fired and g.id not in coupling:
            _fail(f"generator {g.id}", "coupling", "gas-fired generator has no coupling entry")
        if not g.is_gas_fired and g.id in coupling:
            _fail(f"generator {g.id}", "coupling", "non-gas-fired generator must not be coupled")
    return coupling


def load_networks(elec_file, gas_file, coupling_file):
    """Load and validate (ElectricNetwork, GasNetwork, CouplingMap).

    The three paths may point at the same JSON document; time grids declared
    in multiple files must agree.
    """
    elec_doc = _load_doc(elec_file)
    gas_doc = _load_doc(gas_file) if Path(gas_file) != Path(elec_file) else elec_doc
    coup_doc = (_load_doc(coupling_file)
                if Path(coupling_file) not in (Path(elec_file), Path(gas_file))
                else (elec_doc if Path(coupling_file) == Path(elec_file) else gas_doc))

    grids = [g for g in (_parse_time_grid(elec_doc), _parse_time_grid(gas_doc)) if g]
    if not grids:
        grids = [TimeGrid()]
    if any(g != grids[0] for g in grids):
        raise NetworkError("time_grid differs between electricity and gas files")
    grid = grids[0]

    elec = _parse_elec(elec_doc, grid)
    gas = _parse_gas(gas_doc, grid)
    coupling = _parse_coupling(coup_doc, elec, gas)
    return elec, gas, coupling


def _parse_penalties(doc: dict) -> PenaltyConfig:
    raw = _require(doc, "penalties", "fixture")
    return PenaltyConfig(kappa_E=float(raw["kappa_E"]), kappa_S=float(raw["kappa_S"]))


def load_fixture(path) -> Fixture:
    """Load a single-file fixture holding all network, coupling and penalty data."""
    elec, gas, coupling = load_networks(path, path, path)
    penalties = _parse_penalties(_load_doc(path))
    return Fixture(elec=elec, gas=gas, coupling=coupling, penalties=penalties)


def fixture_to_dict(fix: Fixture) -> dict:
    """Serialize a fixture back to the file schema (bar/km at the boundary)."""
    elec, gas = fix.elec, fix.gas
    return {
        "units": dict(EXPECTED_UNITS),
        "time_grid": {"horizon_hours": elec.time_grid.horizon_hours,
                      "dt_minutes": elec.time_grid.dt_minutes},
        "penalties": {"kappa_E": fix.penalties.kappa_E, "kappa_S": fix.penalties.kappa_S},
        "gas_options": {"sound_speed": gas.sound_speed,
                        "dx_target_km": gas.dx_target / 1000.0},
        "buses": [{"id": b.id, "demand_series": list(b.demand_series)} for b in elec.buses],
        "lines": [{"id": l.id, "from_bus": l.from_bus, "to_bus": l.to_bus,
                   "reactance": l.reactance, "flow_limit": l.flow_limit}
                  for l in elec.lines],
        "generators": [{"id": g.id, "bus": g.bus, "is_gas_fired": g.is_gas_fired,
                        "cost_quad": list(g.cost_quad), "p_min": g.p_min, "p_max": g.p_max,
                        "ramp_per_step": g.ramp_per_step, "frp_up_max": g.frp_up_max,
                        "frp_dn_max": g.frp_dn_max} for g in elec.generators],
        "renewables": [{"id": r.id, "bus": r.bus, "kind": r.kind,
                        "forecast_series": list(r.forecast_series)}
                       for r in elec.renewables],
        "junctions": [{"id": j.id, "pr_min": j.pr_min / PA_PER_BAR,
                       "pr_max": j.pr_max / PA_PER_BAR} for j in gas.junctions],
        "pipes": [{"id": p.id, "from_junction": p.from_junction,
                   "to_junction": p.to_junction, "length": p.length / 1000.0,
                   "diameter": p.diameter, "friction": p.friction} for p in gas.pipes],
        "compressors": [{"junction_id": c.junction_id, "boost": c.boost}
                        for c in gas.compressors],
        "suppliers": [{"id": s.id, "junction": s.junction, "q_min": s.q_min,
                       "q_max": s.q_max, "price": s.price} for s in gas.suppliers],
        "heat_loads": [{"id": h.id, "junction": h.junction,
                        "demand_series": list(h.demand_series)} for h in gas.heat_loads],
        "coupling": {gid: {"junction": e.junction, "heat_rate": e.heat_rate}
                     for gid, e in fix.coupling.items()},
    }


def save_fixture(fix: Fixture, path):
    with open(path, "w") as fh:
        json.dump(fixture_to_dict(fix), fh, indent=1)


def scale_pipe_diameters(gas: GasNetwork, scale: float) -> GasNetwork:
    """Return a copy of the gas network with all pipe diameters scaled."""
    if scale <= 0:
        raise NetworkError(f"diameter scale {scale} must be positive")
    pipes = tuple(
        finalize_pipe(replace(p, diameter=p.diameter * scale, n_segments=0, dx=0.0,
                              c1=0.0, c2=0.0, c3=0.0),
                      gas.sound_speed, gas.dx_target)
        for p in gas.pipes)
    return replace(gas, pipes=pipes)
