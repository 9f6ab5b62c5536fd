"""Runtime protocol checkers evaluated online during simulation.

Checkers observe net values sampled at clock posedges, after state update
for that tick, and latch their first failure.  Sampling is suspended (and
history restarted) while the clock domain's declared reset is asserted,
mirroring `disable iff` in the generated assertion templates; the generated
SystemVerilog counterparts in `codegen` express the same conditions over
the same samples, which the template interpreter cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

from .netlist import Const, Dff, Gate
from .rules import Analysis

Getter = Callable[[int], int]


@dataclass
class Verdict:
    checker: str
    kind: str
    passed: bool
    tick: int | None = None
    message: str = ""

    def to_dict(self) -> dict:
        return {"checker": self.checker, "kind": self.kind,
                "verdict": "PASS" if self.passed else "FAIL",
                "tick": self.tick, "message": self.message}


class Checker:
    kind = "checker"

    def __init__(self, cid: str, clocks: tuple[str, ...]):
        self.id = cid
        self.clocks = clocks
        self.failure: tuple[int, str] | None = None

    def fail(self, tick: int, message: str):
        if self.failure is None:
            self.failure = (tick, message)

    def sample(self, clock: str, tick: int, get: Getter, in_reset: bool):
        raise NotImplementedError

    def clone(self) -> "Checker":
        raise NotImplementedError

    def _base_clone(self, other: "Checker"):
        other.failure = self.failure

    def verdict(self) -> Verdict:
        if self.failure is None:
            return Verdict(self.id, self.kind, True)
        return Verdict(self.id, self.kind, False, self.failure[0], self.failure[1])


class StabilityChecker(Checker):
    """Sampled source value must persist for >= hold_samples consecutive
    destination edges whenever it changes."""
    kind = "stability"

    def __init__(self, cid: str, clock: str, net: int, hold_samples: int,
                 label: str):
        super().__init__(cid, (clock,))
        self.net = net
        self.k = hold_samples
        self.label = label
        self.hist: list[int] = []

    def sample(self, clock: str, tick: int, get: Getter, in_reset: bool):
        if in_reset:
            self.hist = []
            return
        self.hist.append(get(self.net))
        if len(self.hist) > self.k + 1:
            self.hist.pop(0)
        h = self.hist
        if len(h) >= self.k + 1 and h[-1] != h[-2]:
            if any(h[-2] != h[-2 - i] for i in range(1, self.k)):
                self.fail(tick, f"{self.label} changed before being stable for "
                                f"{self.k} destination samples")

    def clone(self):
        c = StabilityChecker(self.id, self.clocks[0], self.net, self.k, self.label)
        c.hist = list(self.hist)
        self._base_clone(c)
        return c


class PulseWidthChecker(Checker):
    """Pulse input high for exactly one source cycle."""
    kind = "pulse_width"

    def __init__(self, cid: str, clock: str, net: int, label: str):
        super().__init__(cid, (clock,))
        self.net = net
        self.label = label
        self.prev: int | None = None

    def sample(self, clock: str, tick: int, get: Getter, in_reset: bool):
        if in_reset:
            self.prev = None
            return
        v = get(self.net) & 1
        if self.prev == 1 and v == 1:
            self.fail(tick, f"{self.label} pulse wider than one source cycle")
        self.prev = v

    def clone(self):
        c = PulseWidthChecker(self.id, self.clocks[0], self.net, self.label)
        c.prev = self.prev
        self._base_clone(c)
        return c


class GrayCodeChecker(Checker):
    """Consecutive source-domain samples differ in at most one bit."""
    kind = "gray_code"

    def __init__(self, cid: str, clock: str, net: int, label: str):
        super().__init__(cid, (clock,))
        self.net = net
        self.label = label
        self.prev: int | None = None

    def sample(self, clock: str, tick: int, get: Getter, in_reset: bool):
        if in_reset:
            self.prev = None
            return
        v = get(self.net)
        if self.prev is not None and (v ^ self.prev).bit_count() > 1:
            self.fail(tick, f"{self.label} moved by more than one bit "
                            f"({self.prev:#x} -> {v:#x})")
        self.prev = v

    def clone(self):
        c = GrayCodeChecker(self.id, self.clocks[0], self.net, self.label)
        c.prev = self.prev
        self._base_clone(c)
        return c


class StaticChecker(Checker):
    """Declared-static net never changes outside reset."""
    kind = "static"

    def __init__(self, cid: str, clock: str, net: int, label: str):
        super().__init__(cid, (clock,))
        self.net = net
        self.label = label
        self.prev: int | None = None

    def sample(self, clock: str, tick: int, get: Getter, in_reset: bool):
        if in_reset:
            self.prev = None
            return
        v = get(self.net)
        if self.prev is not None and v != self.prev:
            self.fail(tick, f"declared-static {self.label} changed "
                            f"({self.prev:#x} -> {v:#x})")
        self.prev = v

    def clone(self):
        c = StaticChecker(self.id, self.clocks[0], self.net, self.label)
        c.prev = self.prev
        self._base_clone(c)
        return c


class MuxEnableChecker(Checker):
    """Data bus stable at every destination edge where the synchronized
    select captures."""
    kind = "mux_enable"

    def __init__(self, cid: str, clock: str, enable_net: int, data_net: int,
                 label: str):
        super().__init__(cid, (clock,))
        self.enable_net = enable_net
        self.data_net = data_net
        self.label = label
        self.prev_data: int | None = None

    def sample(self, clock: str, tick: int, get: Getter, in_reset: bool):
        if in_reset:
            self.prev_data = None
            return
        en = get(self.enable_net) & 1
        data = get(self.data_net)
        if en and self.prev_data is not None and data != self.prev_data:
            self.fail(tick, f"{self.label} data changed while the synchronized "
                            f"select was capturing")
        self.prev_data = data

    def clone(self):
        c = MuxEnableChecker(self.id, self.clocks[0], self.enable_net,
                             self.data_net, self.label)
        c.prev_data = self.prev_data
        self._base_clone(c)
        return c


def _gray_to_bin(v: int, width: int) -> int:
    b = 0
    for i in range(width - 1, -1, -1):
        b = (b << 1) | (((b & 1) if i < width - 1 else 0) ^ ((v >> i) & 1))
    return b


class FifoChecker(Checker):
    """Async FIFO pointer protocol: gray-coded pointers, no write when the
    write-side view is full, no read when the read-side view is empty."""
    kind = "fifo"

    def __init__(self, cid: str, wclock: str, rclock: str, wgray: int,
                 rgray: int, rsync_w: int, wsync_r: int, width: int,
                 label: str):
        super().__init__(cid, (wclock, rclock))
        self.wclock = wclock
        self.rclock = rclock
        self.wgray = wgray
        self.rgray = rgray
        self.rsync_w = rsync_w      # synced read ptr seen on the write side
        self.wsync_r = wsync_r      # synced write ptr seen on the read side
        self.width = width
        self.label = label
        self.prev_w: tuple[int, int] | None = None  # (wgray, rsync)
        self.prev_r: tuple[int, int] | None = None

    def _twist(self, v: int) -> int:
        return v ^ (0b11 << (self.width - 2))

    def sample(self, clock: str, tick: int, get: Getter, in_reset: bool):
        if clock == self.wclock:
            if in_reset:
                self.prev_w = None
            else:
                wg, rs = get(self.wgray), get(self.rsync_w)
                if self.prev_w is not None:
                    pwg, prs = self.prev_w
                    if (wg ^ pwg).bit_count() > 1:
                        self.fail(tick, f"{self.label} write pointer moved by "
                                        f"more than one bit")
                    if wg != pwg and pwg == self._twist(prs):
                        self.fail(tick, f"{self.label} wrote while full")
                self.prev_w = (wg, rs)
        if clock == self.rclock:
            if in_reset:
                self.prev_r = None
            else:
                rg, ws = get(self.rgray), get(self.wsync_r)
                if self.prev_r is not None:
                    prg, pws = self.prev_r
                    if (rg ^ prg).bit_count() > 1:
                        self.fail(tick, f"{self.label} read pointer moved by "
                                        f"more than one bit")
                    if rg != prg and prg == pws:
                        self.fail(tick, f"{self.label} read while empty")
                self.prev_r = (rg, ws)

    def clone(self):
        c = FifoChecker(self.id, self.wclock, self.rclock, self.wgray,
                        self.rgray, self.rsync_w, self.wsync_r, self.width,
                        self.label)
        c.prev_w = self.prev_w
        c.prev_r = self.prev_r
        self._base_clone(c)
        return c


class ClockGateChecker(Checker):
    """Gating enable holds each value for at least two root-clock edges."""
    kind = "clock_gate"

    def __init__(self, cid: str, clock: str, net: int, label: str):
        super().__init__(cid, (clock,))
        self.net = net
        self.label = label
        self.hist: list[int] = []

    def sample(self, clock: str, tick: int, get: Getter, in_reset: bool):
        if in_reset:
            self.hist = []
            return
        self.hist.append(get(self.net) & 1)
        if len(self.hist) > 3:
            self.hist.pop(0)
        h = self.hist
        if len(h) == 3 and h[2] != h[1] and h[1] != h[0]:
            self.fail(tick, f"clock-gate enable {self.label} toggles on "
                            f"consecutive edges")

    def clone(self):
        c = ClockGateChecker(self.id, self.clocks[0], self.net, self.label)
        c.hist = list(self.hist)
        self._base_clone(c)
        return c


@dataclass
class _Track:
    expected: int
    count: int


class LatencyChecker(Checker):
    """Destination reflects each source change within [min, max] destination
    edges, counting the edge that observes the change as edge one."""
    kind = "latency"

    def __init__(self, cid: str, clock: str, src_net: int, observe_net: int,
                 lo: int, hi: int, label: str):
        super().__init__(cid, (clock,))
        self.src_net = src_net
        self.observe_net = observe_net
        self.lo = lo
        self.hi = hi
        self.label = label
        self.prev_src: int | None = None
        self.tracks: list[_Track] = []

    def sample(self, clock: str, tick: int, get: Getter, in_reset: bool):
        if in_reset:
            self.prev_src = None
            self.tracks = []
            return
        src = get(self.src_net)
        obs = get(self.observe_net)
        if self.prev_src is not None and src != self.prev_src:
            self.tracks.append(_Track(src, 0))
        self.prev_src = src
        for t in self.tracks:
            t.count += 1
        if self.tracks:
            head = self.tracks[0]
            if obs == head.expected:
                if head.count < self.lo:
                    self.fail(tick, f"{self.label} reflected after "
                                    f"{head.count} edges (< {self.lo})")
                self.tracks.pop(0)
            elif head.count >= self.hi:
                self.fail(tick, f"{self.label} not reflected within "
                                f"{self.hi} edges")
                self.tracks.pop(0)

    def clone(self):
        c = LatencyChecker(self.id, self.clocks[0], self.src_net,
                           self.observe_net, self.lo, self.hi, self.label)
        c.prev_src = self.prev_src
        c.tracks = [replace(t) for t in self.tracks]
        self._base_clone(c)
        return c


def build_checkers(analysis: Analysis,
                   latency: list[tuple[str, int, int]] | None = None,
                   select: list[str] | None = None) -> list[Checker]:
    """Default checker suite derived from recognition plus constraints.

    `latency` entries are (pair id or "*", min, max).  `select`, when given,
    keeps only checkers whose id starts with one of the entries.
    """
    a = analysis
    nl = a.netlist
    cs = a.constraints
    k_stab = cs.options["stability_cycles"]
    root_clock_name = {}
    for flop_idx, port_idx in a.domains.clock_root.items():
        root_clock_name[flop_idx] = nl.nets[nl.ports[port_idx].net].name

    checkers: list[Checker] = []
    by_id = {p.id: p for p in a.pairs}
    for inst in a.syncs:
        if inst.role != "cdc":
            continue
        if inst.kind == "ndff":
            for pid in inst.protected:
                p = by_id[pid]
                if p.suppressed or a.status[pid].state != "synchronized":
                    continue
                clock = root_clock_name[p.dst]
                if p.width == 1:
                    checkers.append(StabilityChecker(
                        f"stability:{pid}", clock, p.src_net, k_stab, p.src_name))
                else:
                    src_clock = root_clock_name.get(p.src[1]) if p.src[0] == "cell" \
                        else clock
                    checkers.append(GrayCodeChecker(
                        f"gray_code:{pid}", src_clock or clock, p.src_net, p.src_name))
        elif inst.kind == "pulse":
            toggle_idx = next(m for m in inst.members
                              if nl.cells[m].name == inst.extra["toggle"])
            clock = root_clock_name[toggle_idx]
            checkers.append(PulseWidthChecker(
                f"pulse_width:{inst.id}", clock, inst.extra["pulse_in"],
                nl.nets[inst.extra["pulse_in"]].name))
        elif inst.kind == "mux":
            cap = inst.extra["capture"]
            cap_idx = next(m for m in inst.members if nl.cells[m].name == cap)
            clock = root_clock_name[cap_idx]
            checkers.append(MuxEnableChecker(
                f"mux_enable:{inst.id}", clock, inst.extra["enable_net"],
                inst.extra["data_net"], cap))
        elif inst.kind == "fifo":
            wptr = nl.cells[inst.extra["wptr"]]
            rptr = nl.cells[inst.extra["rptr"]]
            checkers.append(FifoChecker(
                f"fifo:{inst.id}",
                root_clock_name[wptr.index], root_clock_name[rptr.index],
                wptr.out, rptr.out,
                nl.cells[inst.extra["rsync_tail_w"]].out,
                nl.cells[inst.extra["wsync_tail_r"]].out,
                inst.extra["ptr_width"], inst.id))
        elif inst.kind == "user":
            for pid in inst.protected:
                p = by_id[pid]
                if p.suppressed:
                    continue
                clock = root_clock_name[p.dst]
                checkers.append(StabilityChecker(
                    f"stability:{pid}", clock, p.src_net, k_stab, p.src_name))

    if cs.static_signals and cs.clocks:
        clock = cs.clocks[0].name
        for net_name in cs.static_signals:
            net = nl.find_net(net_name)
            if net is not None:
                checkers.append(StaticChecker(
                    f"static:{net_name}", clock, net.index, net_name))

    static_decls = set(cs.static_signals)
    seen_gates = set()
    for note in a.domains.gate_notes:
        gcell = next((c for c in nl.cells if c.name == note.gate), None)
        if gcell is None or gcell.index in seen_gates:
            continue
        seen_gates.add(gcell.index)
        if isinstance(gcell, Gate) and gcell.op == "AND" and len(gcell.inputs) == 2:
            root_net = nl.net_index.get(note.root)
            others = [n for n in gcell.inputs if n != root_net]
            if len(others) != 1:
                continue
            drv = nl.nets[others[0]].driver
            registered = drv is not None and drv[0] == "cell" and \
                isinstance(nl.cells[drv[1]], (Dff, Const))
            if registered or nl.nets[others[0]].name in static_decls:
                checkers.append(ClockGateChecker(
                    f"clock_gate:{note.flop}", note.root, others[0],
                    nl.nets[others[0]].name))

    for spec in latency or ():
        pid, lo, hi = spec
        targets = [p for p in a.pairs if (pid == "*" or p.id == pid)
                   and not p.suppressed]
        for p in targets:
            st = a.status[p.id]
            observe = nl.cells[p.dst].out
            if st.state == "synchronized" and st.sync_id:
                inst = next(s for s in a.syncs if s.id == st.sync_id)
                if inst.tail is not None:
                    observe = nl.cells[inst.tail].out
            clock = root_clock_name[p.dst]
            checkers.append(LatencyChecker(
                f"latency:{p.id}", clock, p.src_net, observe, lo, hi,
                f"{p.src_name} -> {p.dst_name}"))

    checkers.sort(key=lambda c: c.id)
    if select is not None:
        checkers = [c for c in checkers
                    if any(c.id == s or c.id.startswith(s) for s in select)]
    return checkers
