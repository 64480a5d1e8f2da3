"""The self-delimiting virtual machine: bit-demand execution and loop certificates.

Machine state is one unbounded register r (initially 0), an output string, an
instruction pointer in bit units, and a tape holding every bit consumed so
far.  Opcodes are 3 bits; LDI/BRZ/BRNZ take an Elias-gamma operand:

    000 HALT            100 OUT0  (append 0 to output)
    001 INC  r += 1     101 OUT1  (append 1 to output)
    010 DEC  r = max(r-1, 0)
    011 LDI g(n)   r = n
    110 BRZ g(n)   if r == 0: ip = n - 1   (absolute bit index)
    111 BRNZ g(n)  if r != 0: ip = n - 1

Bits are consumed strictly on demand, so a program is exactly the bits read
before HALT executes and no valid program extends another.  A fetch (or a
taken branch landing past the tape) demands the missing bits one at a time;
every demanded bit becomes part of the tape.

Divergence certificates are sound by construction:

* ExactLoop: the full configuration (ip, r, |tape|) recurred with no bits
  read in between; deterministic replay loops forever.
* MonotoneLoop: ip recurred at unchanged |tape| with the register >= 1 at
  every step boundary of the cycle and non-negative net register change;
  re-running the cycle keeps the register pointwise >= the previous pass
  (DEC never saturates, LDI pins the trajectory), so every branch repeats
  its decision and the cycle runs forever.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .codec import ensure_bits
from .errors import DemandMoreBits, DomainError

ISA_VERSION = "sdvm-g1"

HALT, INC, DEC, LDI, OUT0, OUT1, BRZ, BRNZ = range(8)

OPCODE_BITS = 3


@dataclass(frozen=True, slots=True)
class ExactLoop:
    ip: int
    r: int
    tape_len: int
    period: int


@dataclass(frozen=True, slots=True)
class MonotoneLoop:
    ip: int
    tape_len: int
    r_min: int
    delta_r: int


Certificate = ExactLoop | MonotoneLoop


@dataclass(frozen=True, slots=True)
class Halted:
    program: str
    output: str
    steps: int


@dataclass(frozen=True, slots=True)
class Diverges:
    certificate: Certificate


@dataclass(frozen=True, slots=True)
class Unknown:
    budget: int


@dataclass(frozen=True, slots=True)
class ExcessBits:
    """The machine halted having consumed fewer bits than were supplied."""

    consumed: int


class TraceEntry(NamedTuple):
    step: int
    ip: int
    r: int
    tape_len: int
    out_len: int


# run_session result kinds
S_HALT, S_DEMAND, S_DIVERGE, S_BUDGET = range(4)


def run_session(t, L, ip, r, out, steps, budget, trace=None):
    """Advance the machine on a fixed tape until it halts, demands bit L,
    certifies divergence, or exhausts the step budget.

    The tape is the integer t holding L bits (first-read bit most significant).
    Returns one of
        (S_HALT,    output, steps)
        (S_DEMAND,  ip, r, output, steps)   -- state unchanged mid-instruction
        (S_DIVERGE, certificate, steps)
        (S_BUDGET,  ip, r, output, steps)

    A demand return is resumable: extend the tape by one bit and call again;
    the interrupted instruction re-fetches and applies identically.  Loop
    detection is scoped to one call, i.e. to one stretch of unchanged tape.
    """
    exact = None
    first = (ip, r)
    nb = 0
    while True:
        if trace is not None:
            trace.append(TraceEntry(steps, ip, r, L, len(out)))
        if nb:
            if exact is None:
                exact = {first: 0}
                hist = [first]
                mono = {first[0]: (first[1], 0)} if first[1] else {}
            key = (ip, r)
            prev = exact.get(key)
            if prev is not None:
                return S_DIVERGE, ExactLoop(ip, r, L, nb - prev), steps
            exact[key] = nb
            if r == 0:
                mono.clear()
            else:
                m = mono.get(ip)
                if m is not None and m[0] <= r:
                    r_min = r
                    for _, rv in hist[m[1]:]:
                        if rv < r_min:
                            r_min = rv
                    return S_DIVERGE, MonotoneLoop(ip, L, r_min, r - m[0]), steps
                if m is None or r < m[0]:
                    mono[ip] = (r, nb)
            hist.append(key)
        # fetch the whole instruction before any state change; a missing bit
        # (opcode, operand, or taken-branch landing past the tape) is a demand
        # and outranks budget exhaustion -- a blocked machine is not running
        sh = L - ip - 3
        if sh < 0:
            return S_DEMAND, ip, r, out, steps
        op = (t >> sh) & 7
        if op < 3 or op == 4 or op == 5:
            if steps >= budget:
                return S_BUDGET, ip, r, out, steps
            if op == 0:
                return S_HALT, out, steps + 1
            if op == 1:
                r += 1
            elif op == 2:
                if r:
                    r -= 1
            elif op == 4:
                out += "0"
            else:
                out += "1"
            ip += 3
        else:
            # gamma operand: z zeros, then z+1 value bits
            pos = ip + 3
            while True:
                if pos >= L:
                    return S_DEMAND, ip, r, out, steps
                if (t >> (L - pos - 1)) & 1:
                    break
                pos += 1
            z = pos - ip - 3
            end = pos + 1 + z
            if end > L:
                return S_DEMAND, ip, r, out, steps
            n = (t >> (L - end)) & ((1 << (z + 1)) - 1)
            if op == 3:
                if steps >= budget:
                    return S_BUDGET, ip, r, out, steps
                r = n
                ip = end
            elif (op == 6) == (r == 0):  # BRZ with r=0, or BRNZ with r!=0
                if n - 1 > L:
                    return S_DEMAND, ip, r, out, steps
                if steps >= budget:
                    return S_BUDGET, ip, r, out, steps
                ip = n - 1
            else:
                if steps >= budget:
                    return S_BUDGET, ip, r, out, steps
                ip = end
        steps += 1
        nb += 1


def run(program: str, max_steps: int, trace: list | None = None):
    """Run a candidate program under a step budget and classify it.

    Returns Halted only when the machine halts having consumed exactly the
    supplied bits; ExcessBits when it halts early (the input extends a valid
    program); a DemandMoreBits instance when the machine asks for a bit past
    the end (the input is a proper prefix); otherwise Diverges with a sound
    certificate, or Unknown.

    When `trace` is a list, one TraceEntry is appended per step boundary,
    including the repeated boundary after each mid-instruction bit demand.
    """
    if max_steps < 1:
        raise DomainError(f"max_steps must be >= 1, got {max_steps}")
    ensure_bits(program)
    total = len(program)
    t = 0
    L = 0
    ip = r = steps = 0
    out = ""
    while True:
        res = run_session(t, L, ip, r, out, steps, max_steps, trace)
        kind = res[0]
        if kind == S_HALT:
            if L < total:
                return ExcessBits(consumed=L)
            return Halted(program=program, output=res[1], steps=res[2])
        if kind == S_DIVERGE:
            return Diverges(certificate=res[1])
        if kind == S_BUDGET:
            return Unknown(budget=max_steps)
        _, ip, r, out, steps = res
        if L == total:
            return DemandMoreBits(consumed=L)
        t = (t << 1) | (program[L] == "1")
        L += 1


def certify_divergence(trace) -> Certificate | None:
    """Scan a boundary trace for a divergence certificate.

    Accepts the entries produced by run(..., trace=...); applies the same
    detection rules as the runner itself (sessions are the maximal stretches
    of unchanged tape length), so it reproduces the runner's verdicts.
    """
    exact: dict = {}
    mono: dict = {}
    hist: list = []
    cur_len = None
    for entry in trace:
        ip, r, tape_len = entry[1], entry[2], entry[3]
        if tape_len != cur_len:
            exact.clear()
            mono.clear()
            hist.clear()
            cur_len = tape_len
        key = (ip, r)
        prev = exact.get(key)
        if prev is not None:
            return ExactLoop(ip, r, tape_len, len(hist) - prev)
        exact[key] = len(hist)
        if r == 0:
            mono.clear()
        else:
            m = mono.get(ip)
            if m is not None and m[0] <= r:
                r_min = min(min(rv for _, rv in hist[m[1]:]), r)
                return MonotoneLoop(ip, tape_len, r_min, r - m[0])
            if m is None or r < m[0]:
                mono[ip] = (r, len(hist))
        hist.append(key)
    return None


def trace_lines(trace) -> list[str]:
    """Render trace entries in the dump format: "step ip r |tape| |out|"."""
    return [f"{e[0]} {e[1]} {e[2]} {e[3]} {e[4]}" for e in trace]


def certificate_doc(cert: Certificate) -> dict:
    """Plain-dict form of a certificate, for reports and snapshots."""
    if isinstance(cert, ExactLoop):
        return {"kind": "exact-loop", "ip": cert.ip, "r": cert.r,
                "tape_len": cert.tape_len, "period": cert.period}
    return {"kind": "monotone-loop", "ip": cert.ip, "tape_len": cert.tape_len,
            "r_min": cert.r_min, "delta_r": cert.delta_r}


def certificate_from_doc(doc: dict) -> Certificate:
    if doc.get("kind") == "exact-loop":
        return ExactLoop(ip=doc["ip"], r=doc["r"], tape_len=doc["tape_len"],
                         period=doc["period"])
    if doc.get("kind") == "monotone-loop":
        return MonotoneLoop(ip=doc["ip"], tape_len=doc["tape_len"],
                            r_min=doc["r_min"], delta_r=doc["delta_r"])
    raise DomainError(f"unknown certificate kind: {doc.get('kind')!r}")
