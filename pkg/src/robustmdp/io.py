"""JSON model and policy files (``"format_version": "1"``).

Every model file shares the header fields ``format_version``, ``kind``,
``states``, ``actions``, ``initial``, ``discount`` and ``rewards``
(``{state: {action: r}}``). An optional ``enabled`` (``{state: [actions]}``)
restricts the actions per state; without it every action is enabled
everywhere. The kind-specific body is:

``mdp``            ``transitions: {state: {action: {succ: prob}}}``
``imdp``           ``intervals: {state: {action: {succ: [lower, upper]}}}``
``l1`` / ``linf``  ``transitions`` as for ``mdp`` plus ``radius``, either one
                   number or ``{state: {action: eps}}``
``rmdp-polytope``  ``polytopes: {state: {action: {rows, rhs, eq_rows, eq_rhs}}}``
                   with optional ``support`` (state names of the real columns)
                   and ``n_aux`` (trailing auxiliary columns)
``game``           ``successors: {state: {action: [succ, ...]}}``

Numbers may be written as JSON numbers or decimal strings. Omitted
successors have probability (or bounds) zero.
"""

import json
import math

import numpy as np

from robustmdp.errors import FormatError
from robustmdp.model import DiscountedGame, Mdp, Policy, Polytope, Rmdp, Skeleton
from robustmdp.uncertainty import BallModel, BallSpec, ImdpModel, ImdpSpec

FORMAT_VERSION = "1"
KINDS = ("mdp", "rmdp-polytope", "imdp", "l1", "linf", "game")


def _number(x, what="value"):
    if isinstance(x, bool):
        raise FormatError(f"{what} must be a number, got {x!r}")
    if isinstance(x, (int, float)):
        val = float(x)
    elif isinstance(x, str):
        try:
            val = float(x.strip())
        except ValueError:
            raise FormatError(f"{what} {x!r} is not a decimal number") from None
    else:
        raise FormatError(f"{what} must be a number, got {type(x).__name__}")
    if not math.isfinite(val):
        raise FormatError(f"{what} must be finite")
    return val


def _matrix(x, what):
    if not isinstance(x, list) or not all(isinstance(r, list) for r in x):
        raise FormatError(f"{what} must be a list of rows")
    return [[_number(v, what) for v in r] for r in x]


def _vector(x, what):
    if not isinstance(x, list):
        raise FormatError(f"{what} must be a list")
    return [_number(v, what) for v in x]


def _field(doc, key, where="model"):
    try:
        return doc[key]
    except (KeyError, TypeError):
        raise FormatError(f"{where} is missing {key!r}") from None


def _names(doc, key):
    names = _field(doc, key)
    if not isinstance(names, list) or not names or not all(isinstance(n, str) for n in names):
        raise FormatError(f"{key!r} must be a nonempty list of names")
    if len(set(names)) != len(names):
        raise FormatError(f"{key!r} contains duplicates")
    return names


def _lookup(names, name, what):
    try:
        return names.index(name)
    except ValueError:
        raise FormatError(f"unknown {what} {name!r}") from None


def _header(doc):
    if not isinstance(doc, dict):
        raise FormatError("model file must hold a JSON object")
    version = _field(doc, "format_version")
    if str(version) != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {version!r}")
    kind = _field(doc, "kind")
    if kind not in KINDS:
        raise FormatError(f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    states = _names(doc, "states")
    actions = _names(doc, "actions")
    initial = _lookup(states, _field(doc, "initial"), "initial state")
    discount = _number(_field(doc, "discount"), "discount")
    if "enabled" in doc:
        en = doc["enabled"]
        if not isinstance(en, dict) or set(en) != set(states):
            raise FormatError("'enabled' must list the actions of every state")
        enabled = [[_lookup(actions, a, "action") for a in en[s]] for s in states]
    else:
        enabled = [list(range(len(actions)))] * len(states)
    rewards = np.zeros((len(states), len(actions)))
    table = _field(doc, "rewards")
    for s, acts in enumerate(enabled):
        row = _field(table, states[s], "rewards")
        for a in acts:
            rewards[s, a] = _number(_field(row, actions[a], f"rewards[{states[s]}]"), "reward")
    return kind, states, actions, initial, discount, enabled, rewards


def _per_pair(doc, key, states, actions, enabled):
    table = _field(doc, key)
    for s, acts in enumerate(enabled):
        row = _field(table, states[s], key)
        for a in acts:
            yield s, a, _field(row, actions[a], f"{key}[{states[s]}]")


def _distribution_of(entry, states, what):
    if not isinstance(entry, dict):
        raise FormatError(f"{what} must map successor names to values")
    p = np.zeros(len(states))
    for succ, val in entry.items():
        p[_lookup(states, succ, "successor")] = _number(val, what)
    return p


def parse_model(doc):
    """Build a model object from a decoded JSON document.

    Returns an :class:`Mdp`, :class:`Rmdp`, :class:`ImdpModel`,
    :class:`BallModel` or :class:`DiscountedGame` depending on ``kind``.
    """
    kind, states, actions, initial, discount, enabled, rewards = _header(doc)
    S, A = len(states), len(actions)
    if kind == "mdp":
        P = np.zeros((S, A, S))
        for s, a, entry in _per_pair(doc, "transitions", states, actions, enabled):
            P[s, a] = _distribution_of(entry, states, "probability")
        return Mdp(states, actions, P, rewards, initial, discount, enabled)
    if kind == "game":
        succ = {}
        for s, a, entry in _per_pair(doc, "successors", states, actions, enabled):
            if not isinstance(entry, list):
                raise FormatError("successors must be lists of state names")
            succ[(s, a)] = [_lookup(states, t, "successor") for t in entry]
        return DiscountedGame(states, actions, succ, rewards, initial, discount, enabled)
    skel = Skeleton(states, actions, rewards, initial, discount, enabled)
    if kind == "imdp":
        specs = {}
        for s, a, entry in _per_pair(doc, "intervals", states, actions, enabled):
            if not isinstance(entry, dict):
                raise FormatError("intervals must map successor names to [lower, upper]")
            lo, hi = np.zeros(S), np.zeros(S)
            for t, pair in entry.items():
                bounds = _vector(pair, "interval")
                if len(bounds) != 2:
                    raise FormatError("an interval is a [lower, upper] pair")
                j = _lookup(states, t, "successor")
                lo[j], hi[j] = bounds
            specs[(s, a)] = ImdpSpec(lo, hi)
        return ImdpModel(skel, specs)
    if kind in ("l1", "linf"):
        radius = _field(doc, "radius")
        specs = {}
        for s, a, entry in _per_pair(doc, "transitions", states, actions, enabled):
            if isinstance(radius, dict):
                eps = _number(_field(_field(radius, states[s], "radius"), actions[a],
                                     "radius"), "radius")
            else:
                eps = _number(radius, "radius")
            specs[(s, a)] = BallSpec(_distribution_of(entry, states, "probability"), eps, kind)
        return BallModel(skel, specs)
    unc = {}
    for s, a, entry in _per_pair(doc, "polytopes", states, actions, enabled):
        if not isinstance(entry, dict):
            raise FormatError("each polytope must be a JSON object")
        support = entry.get("support")
        if support is not None:
            support = sorted(_lookup(states, t, "support state") for t in support)
        unc[(s, a)] = Polytope(
            S,
            _matrix(entry.get("rows", []), "rows"),
            _vector(entry.get("rhs", []), "rhs"),
            _matrix(entry.get("eq_rows", []), "eq_rows"),
            _vector(entry.get("eq_rhs", []), "eq_rhs"),
            n_aux=int(entry.get("n_aux", 0)),
            support=support,
        )
    return Rmdp(skel, unc)


def _render_header(kind, model):
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "states": list(model.states),
        "actions": list(model.actions),
        "initial": model.states[model.initial_state],
        "discount": model.discount,
    }
    full = tuple(range(model.n_actions))
    if any(acts != full for acts in model.enabled):
        doc["enabled"] = {model.states[s]: [model.actions[a] for a in acts]
                          for s, acts in enumerate(model.enabled)}
    doc["rewards"] = _pair_table(model, lambda s, a: float(model.reward[s, a]))
    return doc


def _pair_table(model, fn):
    return {model.states[s]: {model.actions[a]: fn(s, a) for a in acts}
            for s, acts in enumerate(model.enabled)}


def _sparse(model, vec):
    return {model.states[t]: float(vec[t]) for t in np.flatnonzero(vec)}


def render_model(model):
    """Inverse of :func:`parse_model`: a JSON-serializable document."""
    if isinstance(model, Mdp):
        doc = _render_header("mdp", model)
        doc["transitions"] = _pair_table(model, lambda s, a: _sparse(model, model.transition[s, a]))
        return doc
    if isinstance(model, DiscountedGame):
        doc = _render_header("game", model)
        doc["successors"] = _pair_table(
            model, lambda s, a: [model.states[t] for t in model.successors[(s, a)]])
        return doc
    if isinstance(model, ImdpModel):
        sk = model.skeleton
        doc = _render_header("imdp", sk)

        def intervals(s, a):
            spec = model.specs[(s, a)]
            nz = np.flatnonzero((spec.lower != 0) | (spec.upper != 0))
            return {sk.states[t]: [float(spec.lower[t]), float(spec.upper[t])] for t in nz}

        doc["intervals"] = _pair_table(sk, intervals)
        return doc
    if isinstance(model, BallModel):
        sk = model.skeleton
        norms = {v.norm for v in model.specs.values()}
        if len(norms) != 1:
            raise FormatError("a ball model file needs one norm for every pair")
        doc = _render_header(norms.pop(), sk)
        doc["transitions"] = _pair_table(sk, lambda s, a: _sparse(sk, model.specs[(s, a)].center))
        radii = {float(v.radius) for v in model.specs.values()}
        if len(radii) == 1:
            doc["radius"] = radii.pop()
        else:
            doc["radius"] = _pair_table(sk, lambda s, a: float(model.specs[(s, a)].radius))
        return doc
    if isinstance(model, Rmdp):
        doc = _render_header("rmdp-polytope", model)

        def poly(s, a):
            p = model.uncertainty[(s, a)]
            out = {"rows": p.rows.tolist(), "rhs": p.rhs.tolist(),
                   "eq_rows": p.eq_rows.tolist(), "eq_rhs": p.eq_rhs.tolist()}
            if p.support is not None:
                out["support"] = [model.states[t] for t in p.support]
            if p.n_aux:
                out["n_aux"] = p.n_aux
            return out

        doc["polytopes"] = _pair_table(model, poly)
        return doc
    raise TypeError(f"cannot render {type(model).__name__}")


def to_rmdp(model):
    """The RMDP view of any model kind (games use successor simplices)."""
    from robustmdp.games import game_to_rmdp
    from robustmdp.model import mdp_as_degenerate_rmdp

    if isinstance(model, Rmdp):
        return model
    if isinstance(model, Mdp):
        return mdp_as_degenerate_rmdp(model)
    if isinstance(model, DiscountedGame):
        return game_to_rmdp(model)
    return model.to_rmdp()


def parse_policy(doc, model):
    """Policy from ``{"format_version": "1", "kind": "policy", "policy": {state: action}}``."""
    if not isinstance(doc, dict) or doc.get("kind") != "policy":
        raise FormatError("policy file must be an object with kind 'policy'")
    if str(doc.get("format_version")) != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {doc.get('format_version')!r}")
    table = _field(doc, "policy", "policy file")
    if not isinstance(table, dict) or set(table) != set(model.states):
        raise FormatError("policy must name an action for every state")
    choice = [_lookup(list(model.actions), table[s], "action") for s in model.states]
    return Policy(choice).check(model)


def render_policy(policy, model):
    return {"format_version": FORMAT_VERSION, "kind": "policy", "policy": policy.named(model)}


def dumps(doc):
    return json.dumps(doc, indent=2) + "\n"


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None


def load_model(path):
    return parse_model(load_json(path))
