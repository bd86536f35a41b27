"""Case-file loading and writing.

Cases live in a strict TOML document: top-level scalars, then [[node]],
[[line]], [[generator]], [[storage]], and [[demand]] tables. Unknown keys
are rejected with their path; missing demand rows mean zero demand at that
node. Loading always ends with full structural validation, so a returned
NetworkCase is ready for the pipeline.
"""

from __future__ import annotations

import math
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from .netmodel import (
    DemandProfile,
    Generator,
    Line,
    NetworkCase,
    Node,
    StorageUnit,
    validate_case,
)

SCHEMA_TAG = "feeder-case-v1"


class CaseFormatError(ValueError):
    """The document is not parseable TOML; carries parser position info."""


class CaseSchemaError(ValueError):
    """The document parses but violates the case schema."""


_TOP_KEYS = {
    "schema", "name", "base_mva", "base_kv", "horizon_hours",
    "node", "line", "generator", "storage", "demand",
}
_NODE_KEYS = {"id", "v_min", "v_max"}
_LINE_KEYS = {"id", "from", "to", "r", "x", "pf_min", "pf_max", "qf_min", "qf_max"}
_GEN_KEYS = {"node", "kind", "cost", "p_min", "p_max", "q_min", "q_max",
             "attackable", "p_max_profile"}
_STO_KEYS = {"node", "e_max", "eta_ch", "eta_dis", "p_ch_min", "p_ch_max",
             "p_dis_min", "p_dis_max", "soc_min", "soc_max", "soc_init", "cost"}
_DEM_KEYS = {"node", "p", "q"}


def _reject_unknown(table, allowed, where):
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise CaseSchemaError("%s: unknown key(s) %s" % (where, ", ".join(unknown)))


def _number(table, key, where, default=None):
    if key not in table:
        if default is not None:
            return default
        raise CaseSchemaError("%s: missing required key %r" % (where, key))
    val = table[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise CaseSchemaError("%s.%s: expected a number, got %r" % (where, key, val))
    if not math.isfinite(val):
        raise CaseSchemaError("%s.%s: must be finite" % (where, key))
    return float(val)


def _integer(table, key, where):
    val = table.get(key)
    if isinstance(val, bool) or not isinstance(val, int):
        raise CaseSchemaError("%s.%s: expected an integer, got %r" % (where, key, val))
    return val


def _numlist(val, where, length=None):
    if not isinstance(val, list) or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in val
    ):
        raise CaseSchemaError("%s: expected a list of numbers" % where)
    if length is not None and len(val) != length:
        raise CaseSchemaError("%s: expected %d entries, got %d" % (where, length, len(val)))
    return [float(x) for x in val]


def parse_case(text: str, source="<string>") -> NetworkCase:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise CaseFormatError("%s: %s" % (source, err)) from err

    _reject_unknown(doc, _TOP_KEYS, "top level")
    if doc.get("schema", SCHEMA_TAG) != SCHEMA_TAG:
        raise CaseSchemaError("unsupported schema tag %r" % doc.get("schema"))
    horizon = doc.get("horizon_hours")
    if isinstance(horizon, bool) or not isinstance(horizon, int):
        raise CaseSchemaError("horizon_hours: expected an integer")

    nodes = []
    for i, tab in enumerate(doc.get("node", [])):
        where = "node[%d]" % i
        _reject_unknown(tab, _NODE_KEYS, where)
        nodes.append(Node(
            id=_integer(tab, "id", where),
            v_min=_number(tab, "v_min", where),
            v_max=_number(tab, "v_max", where),
        ))

    lines = []
    for i, tab in enumerate(doc.get("line", [])):
        where = "line[%d]" % i
        _reject_unknown(tab, _LINE_KEYS, where)
        lines.append(Line(
            id=_integer(tab, "id", where),
            from_node=_integer(tab, "from", where),
            to_node=_integer(tab, "to", where),
            r=_number(tab, "r", where),
            x=_number(tab, "x", where),
            pf_min=_number(tab, "pf_min", where),
            pf_max=_number(tab, "pf_max", where),
            qf_min=_number(tab, "qf_min", where),
            qf_max=_number(tab, "qf_max", where),
        ))

    generators = []
    for i, tab in enumerate(doc.get("generator", [])):
        where = "generator[%d]" % i
        _reject_unknown(tab, _GEN_KEYS, where)
        kind = tab.get("kind")
        if not isinstance(kind, str):
            raise CaseSchemaError("%s.kind: expected a string" % where)
        attackable = tab.get("attackable", False)
        if not isinstance(attackable, bool):
            raise CaseSchemaError("%s.attackable: expected a boolean" % where)
        profile = tab.get("p_max_profile")
        if profile is not None:
            profile = tuple(_numlist(profile, where + ".p_max_profile", horizon))
        generators.append(Generator(
            node=_integer(tab, "node", where),
            kind=kind,
            cost=_number(tab, "cost", where),
            p_min=_number(tab, "p_min", where),
            p_max=_number(tab, "p_max", where),
            q_min=_number(tab, "q_min", where),
            q_max=_number(tab, "q_max", where),
            attackable=attackable,
            p_max_profile=profile,
        ))

    storage = []
    for i, tab in enumerate(doc.get("storage", [])):
        where = "storage[%d]" % i
        _reject_unknown(tab, _STO_KEYS, where)
        storage.append(StorageUnit(
            node=_integer(tab, "node", where),
            e_max=_number(tab, "e_max", where),
            eta_ch=_number(tab, "eta_ch", where),
            eta_dis=_number(tab, "eta_dis", where),
            p_ch_min=_number(tab, "p_ch_min", where),
            p_ch_max=_number(tab, "p_ch_max", where),
            p_dis_min=_number(tab, "p_dis_min", where),
            p_dis_max=_number(tab, "p_dis_max", where),
            soc_min=_number(tab, "soc_min", where),
            soc_max=_number(tab, "soc_max", where),
            soc_init=_number(tab, "soc_init", where),
            cost=_number(tab, "cost", where),
        ))

    node_pos = {n.id: k for k, n in enumerate(nodes)}
    p_d = np.zeros((len(nodes), max(horizon, 0)))
    q_d = np.zeros_like(p_d)
    seen = set()
    for i, tab in enumerate(doc.get("demand", [])):
        where = "demand[%d]" % i
        _reject_unknown(tab, _DEM_KEYS, where)
        nid = _integer(tab, "node", where)
        if nid not in node_pos:
            raise CaseSchemaError("%s: unknown node %d" % (where, nid))
        if nid in seen:
            raise CaseSchemaError("%s: duplicate demand row for node %d" % (where, nid))
        seen.add(nid)
        p_d[node_pos[nid]] = _numlist(tab.get("p", []), where + ".p", horizon)
        q_d[node_pos[nid]] = _numlist(tab.get("q", []), where + ".q", horizon)

    case = NetworkCase(
        nodes=tuple(nodes),
        lines=tuple(lines),
        generators=tuple(generators),
        storage=tuple(storage),
        horizon_hours=horizon,
        demand=DemandProfile(p_d=p_d, q_d=q_d),
        name=str(doc.get("name", "case")),
        base_mva=_number(doc, "base_mva", "top level", default=1.0),
        base_kv=_number(doc, "base_kv", "top level", default=1.0),
    )
    return validate_case(case)


def load_case(path) -> NetworkCase:
    """Parse and validate a case file; diagnostics carry the file path."""
    path = Path(path)
    return parse_case(path.read_text(encoding="utf-8"), source=str(path))


def _f(x: float) -> str:
    # repr round-trips float64 exactly through the TOML parser
    if x == math.inf:
        return "inf"
    if x == -math.inf:
        return "-inf"
    return repr(float(x))


def write_case(case: NetworkCase, path):
    """Emit a case document that parses back to an identical NetworkCase."""
    out = []
    out.append('schema = "%s"' % SCHEMA_TAG)
    out.append('name = "%s"' % case.name)
    out.append("base_mva = %s" % _f(case.base_mva))
    out.append("base_kv = %s" % _f(case.base_kv))
    out.append("horizon_hours = %d" % case.horizon_hours)
    for n in case.nodes:
        out += ["", "[[node]]", "id = %d" % n.id,
                "v_min = %s" % _f(n.v_min), "v_max = %s" % _f(n.v_max)]
    for l in case.lines:
        out += ["", "[[line]]", "id = %d" % l.id,
                "from = %d" % l.from_node, "to = %d" % l.to_node,
                "r = %s" % _f(l.r), "x = %s" % _f(l.x),
                "pf_min = %s" % _f(l.pf_min), "pf_max = %s" % _f(l.pf_max),
                "qf_min = %s" % _f(l.qf_min), "qf_max = %s" % _f(l.qf_max)]
    for g in case.generators:
        out += ["", "[[generator]]", "node = %d" % g.node,
                'kind = "%s"' % g.kind, "cost = %s" % _f(g.cost),
                "p_min = %s" % _f(g.p_min), "p_max = %s" % _f(g.p_max),
                "q_min = %s" % _f(g.q_min), "q_max = %s" % _f(g.q_max),
                "attackable = %s" % ("true" if g.attackable else "false")]
        if g.p_max_profile is not None:
            out.append("p_max_profile = [%s]" % ", ".join(_f(v) for v in g.p_max_profile))
    for s in case.storage:
        out += ["", "[[storage]]", "node = %d" % s.node,
                "e_max = %s" % _f(s.e_max),
                "eta_ch = %s" % _f(s.eta_ch), "eta_dis = %s" % _f(s.eta_dis),
                "p_ch_min = %s" % _f(s.p_ch_min), "p_ch_max = %s" % _f(s.p_ch_max),
                "p_dis_min = %s" % _f(s.p_dis_min), "p_dis_max = %s" % _f(s.p_dis_max),
                "soc_min = %s" % _f(s.soc_min), "soc_max = %s" % _f(s.soc_max),
                "soc_init = %s" % _f(s.soc_init), "cost = %s" % _f(s.cost)]
    pos = case.node_index()
    for n in case.nodes:
        p = case.demand.p_d[pos[n.id]]
        q = case.demand.q_d[pos[n.id]]
        if not p.any() and not q.any():
            continue
        out += ["", "[[demand]]", "node = %d" % n.id,
                "p = [%s]" % ", ".join(_f(v) for v in p),
                "q = [%s]" % ", ".join(_f(v) for v in q)]
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
