"""Scenario description, workload generation and the text file format.

A scenario file is INI-style key-value text::

    [scenario]
    name = leader-crash
    seed = 7
    f = 1                       # n = 3f + 1
    scheme = ped                # ped | kzg
    delta = 10                  # synchronous delivery bound in ticks
    async = 2000:4000:300       # start:end:max_delay, comma separated
    window = 16
    checkpoint_period = 8
    vc_timeout = 3000
    max_time = 400000
    sharing = true
    costs = true

    [workload]                  # optional generated ops
    clients = c1, c2
    keys_per_client = 2
    ops_per_client = 20
    start = 0
    spacing = 20

    [op.1]                      # explicit ops, any number
    time = 100
    client = c1
    op = put                    # put | get | acl
    key = c1/k1
    value = 42
    readers = c2, c3            # acl only

    [fault.1]
    time = 500
    kind = crash                # see FAULT_KINDS
    target = r1                 # replica rI or client cI
    until = 3000                # optional end of the fault
    victims = 2, 3              # replica indices, dealer faults
    mode = withhold             # drop-share: withhold | corrupt;
                                # equivocate-leader: split | omit
    groups = r1 | r2, r3, r4    # partition only
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from random import Random

from ..vss import Scheme

FAULT_KINDS = ("crash", "byzantine-dealer", "drop-share", "equivocate-leader", "garbage-reply", "partition")
REPLICA_FAULTS = ("crash", "equivocate-leader", "garbage-reply")
CLIENT_FAULTS = ("byzantine-dealer", "drop-share")


@dataclass(frozen=True)
class Fault:
    time: int
    kind: str
    target: str = ""
    until: int | None = None
    victims: tuple[int, ...] = ()
    mode: str = ""
    groups: tuple[tuple[str, ...], ...] = ()


@dataclass(frozen=True)
class OpSpec:
    time: int
    client: str
    op: str
    key: str
    value: int | None = None
    readers: tuple[str, ...] = ()


@dataclass(frozen=True)
class Workload:
    clients: tuple[str, ...]
    keys_per_client: int = 2
    ops_per_client: int = 20
    start: int = 0
    spacing: int = 20


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int = 0
    f: int = 1
    scheme: str = "ped"
    delta: int = 10
    async_phases: tuple[tuple[int, int, int], ...] = ()
    window: int = 128
    checkpoint_period: int = 64
    vc_timeout: int = 3000
    max_time: int = 2_000_000
    sharing: bool = True
    costs: bool = True
    workload: Workload | None = None
    ops: tuple[OpSpec, ...] = ()
    faults: tuple[Fault, ...] = field(default_factory=tuple)

    @property
    def n(self) -> int:
        return 3 * self.f + 1

    @property
    def k(self) -> int:
        return self.f + 1

    def faulty_replicas(self) -> list[int]:
        return sorted({int(x.target[1:]) for x in self.faults if x.kind in REPLICA_FAULTS})

    def all_ops(self) -> list[OpSpec]:
        ops = list(self.ops)
        if self.workload is not None:
            ops += generate_workload(self.workload, self.seed)
        return sorted(ops, key=lambda o: (o.time, o.client))

    def clients(self) -> list[str]:
        names = {o.client for o in self.all_ops()}
        names |= {x.target for x in self.faults if x.kind in CLIENT_FAULTS}
        return sorted(names, key=lambda c: (len(c), c))

    def validate(self) -> None:
        if self.f < 1:
            raise ValueError("f must be at least 1")
        Scheme.parse(self.scheme)
        if len(self.faulty_replicas()) > self.f:
            raise ValueError(f"{len(self.faulty_replicas())} faulty replicas exceed f={self.f}")
        for x in self.faults:
            if x.kind not in FAULT_KINDS:
                raise ValueError(f"unknown fault kind {x.kind!r}")
            if x.kind in REPLICA_FAULTS:
                if not (x.target.startswith("r") and 1 <= int(x.target[1:]) <= self.n):
                    raise ValueError(f"fault {x.kind} needs a replica target, got {x.target!r}")
            elif x.kind in CLIENT_FAULTS:
                if not x.target.startswith("c"):
                    raise ValueError(f"fault {x.kind} needs a client target, got {x.target!r}")
                if len(x.victims) > self.f:
                    raise ValueError("a faulty dealer may starve at most f replicas")
            elif len(x.groups) < 2:
                raise ValueError("partition needs at least two groups")
            if x.until is not None and x.until <= x.time:
                raise ValueError("fault must end after it starts")
        for o in self.all_ops():
            if o.op not in ("put", "get", "acl"):
                raise ValueError(f"unknown op {o.op!r}")
            if o.op == "put" and o.value is None:
                raise ValueError("put needs a value")
        for start, end, bound in self.async_phases:
            if not (start < end and bound >= self.delta):
                raise ValueError("async phase must be start < end with max_delay >= delta")
        if not 0 < self.checkpoint_period <= self.window:
            raise ValueError("checkpoint period must be in 1..window")


def generate_workload(w: Workload, seed: int) -> list[OpSpec]:
    """Per client: create its keys, open them to every client, then a mix of
    own writes and reads of anybody's keys."""
    rng = Random(f"workload/{seed}")
    all_keys = [f"{c}/k{j}" for c in w.clients for j in range(1, w.keys_per_client + 1)]
    ops: list[OpSpec] = []
    for c in w.clients:
        own = [f"{c}/k{j}" for j in range(1, w.keys_per_client + 1)]
        seq: list[tuple[str, str, int | None, tuple[str, ...]]] = []
        for key in own:
            seq.append(("put", key, rng.randrange(1, 10**6), ()))
            seq.append(("acl", key, None, tuple(w.clients)))
        while len(seq) < w.ops_per_client:
            if rng.random() < 0.5:
                seq.append(("put", rng.choice(own), rng.randrange(1, 10**6), ()))
            else:
                seq.append(("get", rng.choice(all_keys), None, ()))
        for i, (op, key, value, readers) in enumerate(seq[: w.ops_per_client]):
            ops.append(OpSpec(w.start + i * w.spacing, c, op, key, value, readers))
    return ops


# ------------------------------------------------------------------ text format


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(" ", "").split(",") if x)


def _names(text: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def parse_scenario(text: str) -> Scenario:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.read_string(text)
    if not cp.has_section("scenario"):
        raise ValueError("missing [scenario] section")
    s = cp["scenario"]
    phases = []
    for part in _names(s.get("async", "")):
        a, b, c = (int(x) for x in part.split(":"))
        phases.append((a, b, c))
    workload = None
    if cp.has_section("workload"):
        w = cp["workload"]
        workload = Workload(
            _names(w["clients"]),
            w.getint("keys_per_client", 2),
            w.getint("ops_per_client", 20),
            w.getint("start", 0),
            w.getint("spacing", 20),
        )
    ops, faults = [], []
    for name in cp.sections():
        sec = cp[name]
        if name.startswith("op."):
            value = sec.get("value")
            ops.append(
                OpSpec(
                    sec.getint("time"),
                    sec["client"],
                    sec["op"],
                    sec["key"],
                    int(value) if value else None,
                    _names(sec.get("readers", "")),
                )
            )
        elif name.startswith("fault."):
            until = sec.get("until")
            groups = tuple(_names(g) for g in sec.get("groups", "").split("|") if g.strip())
            faults.append(
                Fault(
                    sec.getint("time"),
                    sec["kind"],
                    sec.get("target", ""),
                    int(until) if until else None,
                    _ints(sec.get("victims", "")),
                    sec.get("mode", ""),
                    groups,
                )
            )
    scenario = Scenario(
        name=s.get("name", "unnamed"),
        seed=s.getint("seed", 0),
        f=s.getint("f", 1),
        scheme=s.get("scheme", "ped"),
        delta=s.getint("delta", 10),
        async_phases=tuple(phases),
        window=s.getint("window", 128),
        checkpoint_period=s.getint("checkpoint_period", 64),
        vc_timeout=s.getint("vc_timeout", 3000),
        max_time=s.getint("max_time", 2_000_000),
        sharing=s.getboolean("sharing", True),
        costs=s.getboolean("costs", True),
        workload=workload,
        ops=tuple(ops),
        faults=tuple(faults),
    )
    scenario.validate()
    return scenario


def dump_scenario(sc: Scenario) -> str:
    lines = [
        "[scenario]",
        f"name = {sc.name}",
        f"seed = {sc.seed}",
        f"f = {sc.f}",
        f"scheme = {sc.scheme}",
        f"delta = {sc.delta}",
    ]
    if sc.async_phases:
        lines.append("async = " + ", ".join(f"{a}:{b}:{c}" for a, b, c in sc.async_phases))
    lines += [
        f"window = {sc.window}",
        f"checkpoint_period = {sc.checkpoint_period}",
        f"vc_timeout = {sc.vc_timeout}",
        f"max_time = {sc.max_time}",
        f"sharing = {str(sc.sharing).lower()}",
        f"costs = {str(sc.costs).lower()}",
    ]
    if sc.workload is not None:
        w = sc.workload
        lines += [
            "",
            "[workload]",
            f"clients = {', '.join(w.clients)}",
            f"keys_per_client = {w.keys_per_client}",
            f"ops_per_client = {w.ops_per_client}",
            f"start = {w.start}",
            f"spacing = {w.spacing}",
        ]
    for i, o in enumerate(sc.ops, start=1):
        lines += ["", f"[op.{i}]", f"time = {o.time}", f"client = {o.client}", f"op = {o.op}", f"key = {o.key}"]
        if o.value is not None:
            lines.append(f"value = {o.value}")
        if o.readers:
            lines.append(f"readers = {', '.join(o.readers)}")
    for i, x in enumerate(sc.faults, start=1):
        lines += ["", f"[fault.{i}]", f"time = {x.time}", f"kind = {x.kind}"]
        if x.target:
            lines.append(f"target = {x.target}")
        if x.until is not None:
            lines.append(f"until = {x.until}")
        if x.victims:
            lines.append(f"victims = {', '.join(map(str, x.victims))}")
        if x.mode:
            lines.append(f"mode = {x.mode}")
        if x.groups:
            lines.append("groups = " + " | ".join(", ".join(g) for g in x.groups))
    return "\n".join(lines) + "\n"


def with_seed(sc: Scenario, seed: int) -> Scenario:
    return replace(sc, seed=seed)
