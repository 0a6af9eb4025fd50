"""Basic reproduction number of a Petri net model via the next-generation
matrix.

The pipeline is: find the disease-free equilibrium (DFE), split the flows
touching infected places into new-infection terms (script F) and transfer
terms (script V), differentiate both with respect to the infected places at
the DFE, and take the spectral radius of F V^-1.

Script F and script V are kept symbolic so they can be printed and inspected;
the Jacobians are exact derivatives of those expressions, not finite
differences.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass

from . import linalg
from .expr import (Expr, Symbol, Constant, Add, Neg, add_, simplify, substitute,
                   diff, eval_expr, to_text)
from .petri import (PetriModel, FlowTable, Finding, RESERVED_TOTAL,
                    net_flow, classify_transitions, validate_assumptions,
                    ModelError)


class NgmError(Exception):
    pass


class DfeError(NgmError):
    pass


@dataclass(frozen=True)
class DfeResult:
    marking: tuple   # aligned with model places; infected entries are 0.0
    method: str      # annotated | newton | conservation-augmented
    residual: float  # largest remaining net flow relative to the flow scale
    notes: tuple = ()


@dataclass(frozen=True, eq=False)
class NgmResult:
    dfe: DfeResult
    script_f: tuple    # symbolic new-infection inflow per infected place
    script_v: tuple    # symbolic transfer matrix (rows x cols of Expr)
    F: tuple           # numeric Jacobians at the DFE
    V: tuple
    Vinv: tuple
    K: tuple           # F V^-1
    r0: float
    diagnostics: dict
    findings: tuple

    def as_dict(self) -> dict:
        return {
            "dfe": {
                "marking": dict(zip(self.diagnostics["places"], self.dfe.marking)),
                "method": self.dfe.method,
                "residual": self.dfe.residual,
            },
            "F": [list(r) for r in self.F],
            "V": [list(r) for r in self.V],
            "Vinv": [list(r) for r in self.Vinv],
            "K": [list(r) for r in self.K],
            "r0": self.r0,
            "diagnostics": {k: v for k, v in self.diagnostics.items() if k != "places"},
            "findings": [f.as_dict() for f in self.findings],
        }


_cache: "weakref.WeakKeyDictionary[PetriModel, dict]" = weakref.WeakKeyDictionary()


def _model_cache(m: PetriModel) -> dict:
    c = _cache.get(m)
    if c is None:
        c = {}
        _cache[m] = c
    return c


def _expand_total(m: PetriModel, e: Expr) -> Expr:
    """Replace the reserved total-population symbol by the sum of places."""
    total = Add(tuple(Symbol(p.name) for p in m.places))
    return substitute(e, {RESERVED_TOTAL: total})


def _merged_params(m: PetriModel, params) -> dict:
    merged = dict(m.params)
    if params:
        place_names = set(m.place_names())
        for k, v in params.items():
            if k not in merged:
                if k in place_names:
                    raise NgmError(f"{k!r} is a place, not a parameter")
                raise NgmError(f"unknown parameter: {k}")
            merged[k] = float(v)
    return merged


# --------------------------------------------------------------------- DFE

def compute_dfe(m: PetriModel, constraints=None, params=None,
                tol: float = 1e-10, max_iter: int = 100) -> DfeResult:
    """Disease-free equilibrium: infected places at zero, remaining places at
    a stationary point of their net flows.

    The flow system is solved by damped Newton iteration. If its Jacobian at
    the initial marking is rank deficient, a token-conservation row (sum of
    places equals sum of initial markings) is appended; free places keep the
    basic solution favouring earlier declarations. Annotated values given in
    ``constraints`` (a mapping or pair list, values numeric or expression
    text) are substituted first. Fails loudly when the residual will not
    converge or a component turns negative.
    """
    bound = _merged_params(m, params)
    infected = set(m.infected_places())
    notes = []

    pinned: dict = {}
    if constraints:
        items = constraints.items() if hasattr(constraints, "items") else constraints
        for place, value in items:
            if not m.is_place(place):
                raise DfeError(f"constraint names unknown place {place!r}")
            if place in infected:
                raise DfeError(f"cannot constrain infected place {place!r}")
            if isinstance(value, str):
                from .expr import parse_expr
                value = eval_expr(parse_expr(value), bound)
            pinned[place] = float(value)

    submap = {name: Constant(0.0) for name in infected}
    submap.update({name: Constant(v) for name, v in pinned.items()})

    noninfected = [p for p in m.places if p.name not in infected]
    equations = []
    for p in noninfected:
        e = _expand_total(m, net_flow(m, p.name))
        equations.append(simplify(substitute(e, submap)))
    unknowns = [p.name for p in noninfected if p.name not in pinned]
    idx = {name: j for j, name in enumerate(unknowns)}

    jac = [[diff(eq, u) for u in unknowns] for eq in equations]

    def flow_values(u):
        b = dict(bound)
        for name, j in idx.items():
            b[name] = u[j]
        return [eval_expr(eq, b) for eq in equations], b

    def flow_scale(b):
        s = 1.0
        for eq in equations:
            terms = eq.terms if isinstance(eq, Add) else (eq,)
            for t in terms:
                s = max(s, abs(eval_expr(t, b)))
        return s

    u = [p.init for p in noninfected if p.name not in pinned]

    if not unknowns:
        f, b = flow_values(u)
        residual = max(map(abs, f), default=0.0) / flow_scale(b)
        if residual > tol:
            raise DfeError(f"annotated point is not an equilibrium (residual {residual:.3g})")
        return _assemble_dfe(m, infected, pinned, idx, u,
                             "annotated", residual, notes)

    f0, b0 = flow_values(u)
    j0 = [[eval_expr(jac[i][j], b0) for j in range(len(unknowns))]
          for i in range(len(equations))]
    _, rank, _ = linalg.basic_solution(j0, [0.0] * len(equations))

    augmented = rank < len(unknowns)
    target = sum(p.init for p in m.places) - sum(pinned.values())
    method = ("annotated" if pinned else
              "conservation-augmented" if augmented else "newton")
    if augmented:
        notes.append("flow Jacobian is rank deficient; added token conservation")

    def system(u):
        f, b = flow_values(u)
        if augmented:
            f = f + [sum(u) - target]
        return f, b

    f, b = system(u)
    res = max(map(abs, f), default=0.0)
    for _ in range(max_iter):
        scale = flow_scale(b)
        if res <= tol * scale:
            break
        jm = [[eval_expr(jac[i][j], b) for j in range(len(unknowns))]
              for i in range(len(equations))]
        if augmented:
            jm.append([1.0] * len(unknowns))
        step, _, _ = linalg.basic_solution(jm, [-v for v in f])
        alpha = 1.0
        while alpha > 2.0 ** -30:
            u_try = [ui + alpha * si for ui, si in zip(u, step)]
            f_try, b_try = system(u_try)
            res_try = max(map(abs, f_try), default=0.0)
            if res_try < res or res_try <= tol * scale:
                u, f, b, res = u_try, f_try, b_try, res_try
                break
            alpha /= 2.0
        else:
            raise DfeError(f"Newton stalled at residual {res:.3g}")
    else:
        raise DfeError(f"did not converge within {max_iter} iterations "
                       f"(residual {res:.3g})")

    value_scale = max([abs(v) for v in u] + [abs(v) for v in pinned.values()] + [1.0])
    for j, v in enumerate(u):
        if v < -1e-9 * value_scale:
            raise DfeError(f"negative equilibrium value for {unknowns[j]}: {v:.6g}")
        if v < 0.0:
            notes.append(f"snapped tiny negative {unknowns[j]} to zero")
            u[j] = 0.0

    fl, bf = flow_values(u)
    residual = max(map(abs, fl), default=0.0) / flow_scale(bf)
    if residual > tol:
        raise DfeError(f"equilibrium residual {residual:.3g} exceeds tolerance")
    return _assemble_dfe(m, infected, pinned, idx, u, method, residual, notes)


def _assemble_dfe(m, infected, pinned, idx, u, method, residual, notes):
    marking = []
    for p in m.places:
        if p.name in infected:
            marking.append(0.0)
        elif p.name in pinned:
            marking.append(pinned[p.name])
        else:
            marking.append(u[idx[p.name]])
    return DfeResult(tuple(marking), method, residual, tuple(notes))


# --------------------------------------------------- script F and script V

def build_script_F(m: PetriModel, flows: FlowTable):
    """New-infection inflow expression per infected place: the signed net
    contribution of every infection-classified transition."""
    out = []
    for place in m.infected_places():
        terms = [e.expr for e in flows.entries[place] if e.tag == "infection"]
        out.append(add_(terms))
    return tuple(out)


def build_script_V(m: PetriModel, flows: FlowTable):
    """Transfer matrix of expressions over infected places.

    Row i collects flows of infected place i: its outflows through transfer
    transitions on the diagonal, minus inflows from source transitions and
    self-loops; inflows received from another infected place j (the first
    infected input of the carrying transition) appear negated at column j.
    Transfer inflows with no infected input fall outside the split and are
    ignored here.
    """
    from .petri import _arc_term
    infected = list(m.infected_places())
    pos = {name: i for i, name in enumerate(infected)}
    cells = [[[] for _ in infected] for _ in infected]

    for t in m.transitions:
        cls = flows.classification[t.name]
        if cls == "infection":
            continue
        outs = m.outputs_of(t.name)
        if cls == "source":
            for a in outs:
                if a.target in pos:
                    j = pos[a.target]
                    cells[j][j].append(Neg(_arc_term(m, a)))
            continue
        ins = m.inputs_of(t.name)
        carriers = []
        for a in ins:
            if a.source in pos and a.source not in carriers:
                carriers.append(a.source)
        for a in ins:
            if a.source in pos:
                i = pos[a.source]
                cells[i][i].append(_arc_term(m, a))
        if carriers:
            col = pos[carriers[0]]
            for a in outs:
                if a.target in pos:
                    cells[pos[a.target]][col].append(Neg(_arc_term(m, a)))
    return tuple(tuple(add_(cell) for cell in row) for row in cells)


def _symbolic_jacobians(m: PetriModel):
    cache = _model_cache(m)
    if "jac" in cache:
        return cache["jac"]
    flows = cache.get("flows")
    if flows is None:
        flows = cache["flows"] = classify_transitions(m)
    script_f = cache.get("script_f")
    if script_f is None:
        script_f = cache["script_f"] = build_script_F(m, flows)
        cache["script_v"] = build_script_V(m, flows)
    script_v = cache["script_v"]

    infected = m.infected_places()
    f_rows = [_expand_total(m, e) for e in script_f]
    v_rows = [_expand_total(m, add_(list(row))) for row in script_v]
    jf = [[diff(row, x) for x in infected] for row in f_rows]
    jv = [[diff(row, x) for x in infected] for row in v_rows]
    cache["jac"] = (jf, jv)
    return jf, jv


def jacobians_at_dfe(m: PetriModel, script_f, script_v, dfe: DfeResult, params=None):
    """Numeric F and V: derivatives of script F entries and script V row sums
    with respect to each infected place, at the DFE."""
    bound = _merged_params(m, params)
    infected = m.infected_places()
    f_rows = [_expand_total(m, e) for e in script_f]
    v_rows = [_expand_total(m, add_(list(row))) for row in script_v]
    b = m.bindings_at(dfe.marking, bound)
    F = [[eval_expr(diff(row, x), b) for x in infected] for row in f_rows]
    V = [[eval_expr(diff(row, x), b) for x in infected] for row in v_rows]
    return F, V


def spectral_radius(k_matrix):
    """Spectral radius of a numeric matrix with diagnostics about the
    dominant eigenvalue (its real and imaginary parts and near-ties)."""
    radius, dominant, eigs, tie = linalg.spectral_radius_of([list(r) for r in k_matrix])
    diagnostics = {
        "dominant_real": dominant.real,
        "dominant_imag": dominant.imag,
        "eigenvalues": [[ev.real, ev.imag] for ev in eigs],
        "modulus_tie": tie,
    }
    return radius, diagnostics


# ----------------------------------------------------------------- driver

def ngm_r0(m: PetriModel, params=None, constraints=None) -> NgmResult:
    """Full next-generation-matrix computation for a model.

    Returns the DFE, symbolic and numeric matrices, the spectral radius and
    the assumption findings (with the transfer-stability check resolved
    numerically).
    """
    if not m.infected_places():
        raise NgmError("model declares no infected places")
    bound = _merged_params(m, params)

    findings = [f for f in validate_assumptions(m) if f.code != "A5"]
    dfe = compute_dfe(m, constraints=constraints, params=bound)

    cache = _model_cache(m)
    if "flows" not in cache:
        cache["flows"] = classify_transitions(m)
    flows = cache["flows"]
    if "script_f" not in cache:
        cache["script_f"] = build_script_F(m, flows)
        cache["script_v"] = build_script_V(m, flows)
    script_f, script_v = cache["script_f"], cache["script_v"]

    jf, jv = _symbolic_jacobians(m)
    b = m.bindings_at(dfe.marking, bound)
    F = [[eval_expr(c, b) for c in row] for row in jf]
    V = [[eval_expr(c, b) for c in row] for row in jv]

    try:
        Vinv, cond = linalg.invert([row[:] for row in V])
    except linalg.SingularMatrixError as ex:
        raise NgmError(f"transfer matrix is singular: {ex}") from None
    if cond > 1e14:
        raise NgmError(f"transfer matrix is ill-conditioned (condition {cond:.3g})")

    K = linalg.mat_mul(F, Vinv)
    r0, diagnostics = spectral_radius(K)
    diagnostics["condition_V"] = cond
    diagnostics["places"] = m.place_names()

    neg_v = linalg.eigenvalues([[-v for v in row] for row in V])
    stable = all(ev.real < 0.0 for ev in neg_v)
    findings.append(Finding(
        "A5", "satisfied" if stable else "violated",
        "transfer flows decay at the DFE" if stable else
        "the negated transfer matrix has an eigenvalue with non-negative "
        "real part: " + ", ".join(f"{ev.real:.6g}{ev.imag:+.6g}j" for ev in neg_v)))

    fmax = max((abs(v) for row in F for v in row), default=0.0)
    neg_entries = [(i, j) for i, row in enumerate(F) for j, v in enumerate(row)
                   if v < -1e-12 * (1.0 + fmax)]
    if neg_entries:
        diagnostics["negative_F_entries"] = neg_entries

    return NgmResult(dfe, script_f, script_v,
                     tuple(map(tuple, F)), tuple(map(tuple, V)),
                     tuple(map(tuple, Vinv)), tuple(map(tuple, K)),
                     r0, diagnostics, tuple(findings))
