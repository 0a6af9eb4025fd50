"""Trajectory simulation for both net kinds.

Deterministic nets advance all places synchronously: each step adds
dt * (inflow - outflow) per place, computed from the arc weights at the
current marking, and clips at zero (a clipped place scales its outflows just
enough to stop at zero; the clip is counted on the trajectory). This is
forward Euler whenever nothing clips.

Stochastic nets fire one transition at a time: each enabled transition's rate
is its propensity, waiting times are exponential, and the next event is
chosen proportionally to propensity. Markings stay integers throughout.

Both steppers are compiled to Python source once per (model, parameters)
pair, with parameter values folded in as literals; the expression trees are
transcribed factor by factor, so a compiled step reproduces a hand-written
evaluation of the same weights bit for bit.
"""
from __future__ import annotations

import keyword
import math
import weakref
from dataclasses import dataclass, field

import numpy as np

from .expr import Constant, substitute, to_python
from .petri import PetriModel, RESERVED_TOTAL, ModelError


class SimError(Exception):
    pass


@dataclass(frozen=True, eq=False)
class Trajectory:
    places: tuple          # place names, column order of markings
    times: tuple
    markings: tuple        # tuple of marking tuples, aligned with times
    clipping_events: int = 0   # vapn: number of clipped place-steps
    rng_seed: int | None = None
    metadata: dict = field(default_factory=dict)

    def column(self, place: str):
        if place not in self.places:
            raise SimError(f"no place named {place!r} in this trajectory")
        j = self.places.index(place)
        return [m[j] for m in self.markings]

    def final(self):
        return self.markings[-1]

    def write_csv(self, fh):
        fh.write("t," + ",".join(self.places) + "\n")
        for t, m in zip(self.times, self.markings):
            fh.write(f"{t:.12g}," + ",".join(f"{v:.12g}" for v in m) + "\n")


def _merged(m: PetriModel, params) -> dict:
    merged = dict(m.params)
    if params:
        for k, v in params.items():
            if k not in merged:
                raise SimError(f"unknown parameter: {k}")
            merged[k] = float(v)
    return merged


def _pyname(name: str, taken: set) -> str:
    out = name
    while keyword.iskeyword(out) or out in taken:
        out += "_"
    return out


_compiled: "weakref.WeakKeyDictionary[PetriModel, dict]" = weakref.WeakKeyDictionary()


def _compile(m: PetriModel, params: dict, builder):
    per_model = _compiled.get(m)
    if per_model is None:
        per_model = {}
        _compiled[m] = per_model
    key = (builder.__name__, tuple(sorted(params.items())))
    fns = per_model.get(key)
    if fns is None:
        fns = builder(m, params)
        per_model[key] = fns
    return fns


def _symbol_table(m: PetriModel, params: dict):
    """Renames for code generation plus the substitution map folding params."""
    taken: set = set()
    names = {}
    for p in m.places:
        names[p.name] = _pyname(p.name, taken)
        taken.add(names[p.name])
    total = _pyname(RESERVED_TOTAL, taken)
    taken.add(total)
    submap = {k: Constant(v) for k, v in params.items()}
    from .expr import Symbol
    for p in m.places:
        if names[p.name] != p.name:
            submap[p.name] = Symbol(names[p.name])
    if total != RESERVED_TOTAL:
        submap[RESERVED_TOTAL] = Symbol(total)
    return names, total, submap


# ----------------------------------------------------------- deterministic

def _build_vapn(m: PetriModel, params: dict):
    if m.kind != "vapn":
        raise SimError(f"model {m.name} is not a vapn")
    names, total, submap = _symbol_table(m, params)
    place_vars = [names[p.name] for p in m.places]
    unpack = ", ".join(place_vars) if len(place_vars) > 1 else place_vars[0] + ","

    weight_lines = []
    inflow = {p.name: [] for p in m.places}
    outflow = {p.name: [] for p in m.places}
    for k, arc in enumerate(m.arcs):
        w = to_python(substitute(arc.weight, submap))
        weight_lines.append(f"_w{k} = {w}")
        if arc.target in inflow:
            inflow[arc.target].append(f"_w{k}")
        else:
            outflow[arc.source].append(f"_w{k}")

    def step_exprs():
        out = []
        for i, p in enumerate(m.places):
            ins = " + ".join(inflow[p.name]) or "0.0"
            outs = " + ".join(outflow[p.name]) or "0.0"
            out.append(f"_n{i} = {place_vars[i]} + _dt*(({ins}) - ({outs}))")
            out.append(f"if _n{i} < 0.0:")
            out.append(f"    _n{i} = 0.0; _clips += 1")
        return out

    body = "\n        ".join(weight_lines)
    steps = "\n        ".join(step_exprs())
    news = ", ".join(f"_n{i}" for i in range(len(m.places)))
    src = f"""
def _step(_mk, _dt):
    ({unpack}) = _mk
    _clips = 0
    if True:
        {total} = {" + ".join(place_vars)}
        {body}
        {steps}
    return ({news}), _clips

def _run(_mk, _nsteps, _dt, _every, _tapp, _mapp, _t0):
    ({unpack}) = _mk
    _clips = 0
    for _k in range(1, _nsteps + 1):
        {total} = {" + ".join(place_vars)}
        {body}
        {steps}
        ({unpack}) = ({news})
        if _k % _every == 0:
            _tapp(_t0 + _k*_dt)
            _mapp(({news}))
    return ({", ".join(place_vars)}), _clips
"""
    ns: dict = {}
    exec(compile(src, f"<vapn stepper {m.name}>", "exec"), ns)
    return ns["_step"], ns["_run"]


def step_vapn(m: PetriModel, marking, dt: float, params=None):
    """One synchronous update of all places; returns the new marking."""
    if dt <= 0:
        raise SimError("dt must be positive")
    stepper, _ = _compile(m, _merged(m, params), _build_vapn)
    new, _clips = stepper(tuple(marking), dt)
    return new


def run_vapn(m: PetriModel, t_end: float, dt: float = 0.1, params=None,
             marking0=None, t0: float = 0.0, sample_every: int = 1) -> Trajectory:
    """Repeated step_vapn from the initial (or given) marking.

    Records every sample_every-th step plus the final state. A trailing
    partial step covers t_end when it is not a multiple of dt.
    """
    if dt <= 0:
        raise SimError("dt must be positive")
    if sample_every < 1:
        raise SimError("sample_every must be >= 1")
    stepper, runner = _compile(m, _merged(m, params), _build_vapn)
    marking = tuple(marking0) if marking0 is not None else m.initial_marking()
    if len(marking) != len(m.places):
        raise SimError("marking length does not match the model")

    span = t_end - t0
    if span < 0:
        raise SimError("t_end is before t0")
    nsteps = int(math.floor(span / dt + 1e-9))
    remainder = span - nsteps * dt

    times = [t0]
    markings = [marking]
    final, clips = runner(marking, nsteps, dt, sample_every,
                          times.append, markings.append, t0)
    t = t0 + nsteps * dt
    if remainder > 1e-9 * dt:
        final, c2 = stepper(final, remainder)
        clips += c2
        t = t_end
    if times[-1] != t:
        times.append(t)
        markings.append(final)
    return Trajectory(m.place_names(), tuple(times), tuple(markings),
                      clipping_events=clips,
                      metadata={"kind": "vapn", "dt": dt})


# -------------------------------------------------------------- stochastic

def _build_spn(m: PetriModel, params: dict):
    if m.kind != "spn":
        raise SimError(f"model {m.name} is not an spn")
    names, total, submap = _symbol_table(m, params)
    place_vars = [names[p.name] for p in m.places]
    unpack = ", ".join(place_vars) if len(place_vars) > 1 else place_vars[0] + ","
    idx = {p.name: i for i, p in enumerate(m.places)}

    rate_lines = []
    deltas = []
    for t in m.transitions:
        expr = substitute(t.rate, submap)
        guards = []
        change: dict = {}
        for a in m.inputs_of(t.name):
            guards.append(f"{names[a.source]} >= {a.mult}")
            change[idx[a.source]] = change.get(idx[a.source], 0) - a.mult
        for a in m.outputs_of(t.name):
            change[idx[a.target]] = change.get(idx[a.target], 0) + a.mult
        code = to_python(expr)
        if guards:
            rate_lines.append(f"({code}) if ({' and '.join(guards)}) else 0.0")
        else:
            rate_lines.append(f"({code})")
        deltas.append(tuple((i, dv) for i, dv in sorted(change.items()) if dv))

    total_line = f"{total} = {' + '.join(place_vars)}"
    rates = ",\n            ".join(rate_lines)
    src = f"""
def _rates(_mk):
    ({unpack}) = _mk
    {total_line}
    return ({rates},)
"""
    ns: dict = {}
    exec(compile(src, f"<spn rates {m.name}>", "exec"), ns)
    return ns["_rates"], tuple(deltas), tuple(t.name for t in m.transitions)


def run_spn(m: PetriModel, t_end: float, seed: int | None = None, params=None,
            sample_dt: float = 1.0, marking0=None) -> Trajectory:
    """Event-by-event stochastic run to t_end.

    States are recorded on the sample_dt grid plus the final time; between
    events the marking is constant. A zero total propensity ends the run
    early (the state is absorbing). The generator is seeded explicitly so a
    (model, seed, t_end) triple is reproducible bit for bit.
    """
    if t_end < 0:
        raise SimError("t_end must be non-negative")
    if sample_dt <= 0:
        raise SimError("sample_dt must be positive")
    ratefn, deltas, tnames = _compile(m, _merged(m, params), _build_spn)

    if seed is None:
        seed = int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0])
    rng = np.random.default_rng(seed)
    rand = rng.random

    marking = list(map(int, marking0 if marking0 is not None else m.initial_marking()))
    if any(v < 0 for v in marking):
        raise SimError("negative initial marking")

    times = [0.0]
    markings = [tuple(marking)]
    next_sample = sample_dt
    t = 0.0
    log = math.log
    while True:
        rates = ratefn(marking)
        a0 = 0.0
        for j, r in enumerate(rates):
            if r < 0.0:
                raise SimError(
                    f"negative propensity for transition {tnames[j]!r} at t={t:.6g}")
            a0 += r
        if a0 == 0.0:
            break
        t_next = t - log(1.0 - rand()) / a0
        if t_next >= t_end:
            break
        while next_sample <= t_next and next_sample < t_end:
            times.append(next_sample)
            markings.append(tuple(marking))
            next_sample += sample_dt
        pick = rand() * a0
        acc = 0.0
        chosen = len(rates) - 1
        for j, r in enumerate(rates):
            acc += r
            if pick < acc:
                chosen = j
                break
        for place_i, dv in deltas[chosen]:
            marking[place_i] += dv
        t = t_next
    while next_sample < t_end:
        times.append(next_sample)
        markings.append(tuple(marking))
        next_sample += sample_dt
    if times[-1] != t_end:
        times.append(t_end)
        markings.append(tuple(marking))
    return Trajectory(m.place_names(), tuple(times), tuple(markings),
                      rng_seed=seed,
                      metadata={"kind": "spn", "prng": "PCG64",
                                "numpy": np.__version__})


def run_spn_replicates(m: PetriModel, t_end: float, seed: int | None = None,
                       replicates: int = 1, params=None, sample_dt: float = 1.0):
    """Independent replicate runs with generators spawned from one seed."""
    if replicates < 1:
        raise SimError("replicates must be >= 1")
    if seed is None:
        seed = int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0])
    out = []
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(replicates)):
        child_seed = int(child.generate_state(1, dtype=np.uint64)[0])
        traj = run_spn(m, t_end, seed=child_seed, params=params, sample_dt=sample_dt)
        traj.metadata["parent_seed"] = seed
        traj.metadata["replicate"] = i
        out.append(traj)
    return out
