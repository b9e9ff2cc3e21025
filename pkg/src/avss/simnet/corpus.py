"""Reference scenario corpus: honest runs plus one scenario per fault class."""
from __future__ import annotations

from .scenario import Fault, Scenario, Workload

SMALL = dict(window=16, checkpoint_period=8)


def _w(ops: int = 16, spacing: int = 20, clients: tuple[str, ...] = ("c1", "c2")) -> Workload:
    return Workload(clients, 2, ops, 0, spacing)


def corpus() -> list[Scenario]:
    return [
        Scenario("honest-n4", seed=1, f=1, workload=_w(20), **SMALL),
        Scenario("honest-n7-kzg", seed=2, f=2, scheme="kzg", workload=_w(14), **SMALL),
        Scenario("crash-f-n4", seed=3, f=1, workload=_w(), faults=(Fault(0, "crash", "r4"),), **SMALL),
        Scenario(
            "crash-f-n7",
            seed=4,
            f=2,
            workload=_w(),
            faults=(Fault(300, "crash", "r6"), Fault(600, "crash", "r7")),
            **SMALL,
        ),
        Scenario("leader-crash-n4", seed=5, f=1, workload=_w(), faults=(Fault(1000, "crash", "r1"),), **SMALL),
        Scenario(
            "byzantine-dealer-n4",
            seed=6,
            f=1,
            workload=_w(),
            faults=(Fault(0, "byzantine-dealer", "c1", victims=(3,)),),
            **SMALL,
        ),
        Scenario(
            "byzantine-dealer-n7-kzg",
            seed=7,
            f=2,
            scheme="kzg",
            workload=_w(12),
            faults=(Fault(0, "byzantine-dealer", "c2", victims=(5, 6)),),
            **SMALL,
        ),
        Scenario(
            "equivocating-leader-n4",
            seed=8,
            f=1,
            workload=_w(),
            faults=(Fault(0, "equivocate-leader", "r1", mode="split"),),
            **SMALL,
        ),
        Scenario(
            "three-view-changes-n7",
            seed=9,
            f=2,
            workload=_w(36, spacing=1000),
            faults=(
                Fault(500, "partition", until=15000, groups=(("r1",), ("r2", "r3", "r4", "r5", "r6", "r7", "c1", "c2"))),
                Fault(9000, "partition", until=25000, groups=(("r2",), ("r1", "r3", "r4", "r5", "r6", "r7", "c1", "c2"))),
                Fault(19000, "partition", until=35000, groups=(("r3",), ("r1", "r2", "r4", "r5", "r6", "r7", "c1", "c2"))),
            ),
            **SMALL,
        ),
        Scenario(
            "tampered-newview-n7",
            seed=10,
            f=2,
            workload=_w(),
            faults=(Fault(0, "equivocate-leader", "r2", mode="omit"), Fault(700, "crash", "r1")),
            **SMALL,
        ),
        Scenario(
            "dealer-walks-away-n4",
            seed=11,
            f=1,
            workload=_w(),
            faults=(Fault(0, "drop-share", "c1", victims=(4,), mode="withhold"),),
            **SMALL,
        ),
        Scenario(
            "dealer-walks-away-n7",
            seed=12,
            f=2,
            workload=_w(12),
            faults=(Fault(0, "drop-share", "c2", victims=(6, 7), mode="withhold"),),
            **SMALL,
        ),
        Scenario(
            "corrupt-share-n4",
            seed=13,
            f=1,
            workload=_w(),
            faults=(Fault(0, "drop-share", "c2", victims=(2,), mode="corrupt"),),
            **SMALL,
        ),
        Scenario(
            "lagging-replica-n4",
            seed=14,
            f=1,
            workload=_w(40),
            faults=(Fault(1000, "crash", "r3", until=7000),),
            **SMALL,
        ),
        Scenario(
            "lagging-replica-n7-kzg",
            seed=15,
            f=2,
            scheme="kzg",
            workload=_w(30),
            faults=(Fault(800, "crash", "r5", until=6000),),
            **SMALL,
        ),
        Scenario(
            "garbage-replies-n4",
            seed=16,
            f=1,
            workload=_w(),
            faults=(Fault(0, "garbage-reply", "r2"), Fault(0, "drop-share", "c1", victims=(1,))),
            **SMALL,
        ),
        Scenario(
            "garbage-recovery-n7",
            seed=17,
            f=2,
            workload=_w(12),
            faults=(
                Fault(0, "garbage-reply", "r6"),
                Fault(0, "garbage-reply", "r7"),
                Fault(0, "drop-share", "c1", victims=(1, 2)),
            ),
            **SMALL,
        ),
        Scenario(
            "recovery-heavy-n4",
            seed=18,
            f=1,
            workload=_w(24, spacing=200),
            faults=tuple(
                Fault(1200 * (i - 1), "drop-share", c, until=1200 * i, victims=(i,))
                for i in range(1, 5)
                for c in ("c1", "c2")
            ),
            **SMALL,
        ),
        Scenario(
            "asynchronous-n4",
            seed=19,
            f=1,
            async_phases=((500, 5000, 400),),
            workload=_w(),
            faults=(Fault(0, "drop-share", "c2", victims=(3,)),),
            **SMALL,
        ),
    ]


def by_name(name: str) -> Scenario:
    for sc in corpus():
        if sc.name == name:
            return sc
    raise KeyError(name)

