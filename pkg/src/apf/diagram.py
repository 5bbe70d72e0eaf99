"""Problem-frame diagrams of an AJD, emitted as DOT text.

Notation: machines carry a doubled border, biddable domains a dashed border,
causal domains a solid one, lexical domains a note shape. Solid edges are
direct interactions, dotted edges callbacks, dashed edges context injection.
"""

from __future__ import annotations

from .ajd import AjdSpec, DomainKind


def _esc(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def _q(s: str) -> str:
    return '"' + _esc(s) + '"'


def _label(name: str, kind: str) -> str:
    return '"' + _esc(name) + "\\n(" + _esc(kind) + ')"'


_NODE_STYLE = {
    DomainKind.CAUSAL: 'shape=box, style=solid',
    DomainKind.BIDDABLE: 'shape=box, style=dashed',
    DomainKind.LEXICAL: 'shape=note, style=solid',
}


def export_apf_diagram(spec: AjdSpec) -> str:
    machine = spec.scope.machine_id
    machines = {machine: spec.scope.identity}
    for sub in spec.scope.sub_performers:
        machines[sub.id] = sub.identity

    nodes: dict[str, str] = {}
    for mid in machines:
        nodes[mid] = f"label={_label(mid, 'machine')}, shape=box, peripheries=2"
    for d in spec.workplace:
        if d.id in machines:
            continue
        nodes[d.id] = f"label={_label(d.id, d.kind.value)}, {_NODE_STYLE[d.kind]}"

    edges: set[tuple[str, str, str]] = set()
    for cap in spec.operational_context.capabilities:
        edges.add((machine, cap.domain, "solid"))
    for cf in spec.evaluation.confirms:
        edges.add((machine, cf.approver, "solid"))
    for sub in spec.scope.sub_performers:
        edges.add((machine, sub.id, "solid"))
        for a in sub.authorities:
            edges.add((sub.id, a.domain, "solid"))
    for cb in spec.evaluation.callbacks:
        edges.add((cb.channel, machine, "dotted"))
    kinds = {d.id: d for d in spec.workplace}
    sources = {c.domain for c in spec.operational_context.contexts}
    sources |= {d.id for d in spec.workplace if d.kind is DomainKind.LEXICAL or "context_source" in d.roles}
    for src in sources:
        if src in kinds and src not in machines:
            edges.add((src, machine, "dashed"))

    lines = [f"digraph {_q(spec.meta.name)} {{", "  rankdir=LR;", '  node [fontname="Helvetica"];']
    for nid in sorted(nodes):
        lines.append(f"  {_q(nid)} [{nodes[nid]}];")
    for src, dst, style in sorted(edges):
        lines.append(f"  {_q(src)} -> {_q(dst)} [style={style}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
