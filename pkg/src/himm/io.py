"""JSON documents for hierarchies, modification scripts and exit tables."""

from __future__ import annotations

import json
from pathlib import Path as FsPath
from typing import Any, Optional, Union

import jsonschema

from .exits import INF, ExitCostTable
from .hierarchy import SHARED, TREE, Himm
from .machines import Alphabet, MealyMachine
from .modifications import AddState, ArcModification, Composition, Modification, SubtractState

SCHEMA_VERSION = 1

_TRANSITION = {
    "type": "object",
    "required": ["from", "input", "to", "cost"],
    "properties": {
        "from": {"type": "integer"},
        "input": {"type": "string"},
        "to": {"type": "integer"},
        "cost": {"type": "number", "minimum": 0},
    },
    "additionalProperties": False,
}

_MACHINE = {
    "type": "object",
    "required": ["name", "states", "start", "transitions"],
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "states": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id"],
                "properties": {"id": {"type": "integer"}, "name": {"type": "string"}},
                "additionalProperties": False,
            },
        },
        "start": {"type": "integer"},
        "transitions": {"type": "array", "items": _TRANSITION},
    },
    "additionalProperties": False,
}

HIMM_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "HimmDocument",
    "type": "object",
    "required": ["schema", "alphabet", "machines", "nesting", "root", "mode"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "mode": {"enum": [TREE, SHARED]},
        "alphabet": {"type": "array", "items": {"type": "string"}, "minItems": 1, "uniqueItems": True},
        "machines": {"type": "array", "items": _MACHINE, "minItems": 1},
        "nesting": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["machine", "state", "child"],
                "properties": {
                    "machine": {"type": "string"},
                    "state": {"type": "integer"},
                    "child": {"type": "string"},
                },
                "additionalProperties": False,
            },
        },
        "root": {"type": "string"},
    },
    "additionalProperties": False,
}

_TARGET = {
    "oneOf": [
        {"type": "string"},
        {"type": "object", "required": ["path"], "properties": {"path": {"type": "array", "items": {"type": "integer"}}}, "additionalProperties": False},
    ]
}

SCRIPT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "ModificationScript",
    "type": "array",
    "items": {
        "type": "object",
        "required": ["op"],
        "oneOf": [
            {
                "properties": {
                    "op": {"const": "add_state"},
                    "target": _TARGET,
                    "state": {"type": "integer"},
                    "name": {"type": "string"},
                    "child": {"type": "string"},
                    "attach": {"type": "object"},
                },
                "required": ["target"],
                "additionalProperties": False,
            },
            {
                "properties": {"op": {"const": "subtract_state"}, "target": _TARGET, "state": {"type": "integer"}},
                "required": ["target", "state"],
                "additionalProperties": False,
            },
            {
                "properties": {
                    "op": {"const": "arc_modification"},
                    "target": _TARGET,
                    "transitions": {"type": "array", "items": _TRANSITION},
                    "start": {"type": "integer"},
                },
                "required": ["target", "transitions"],
                "additionalProperties": False,
            },
            {
                "properties": {
                    "op": {"const": "composition"},
                    "machine": _MACHINE,
                    "parts": {"type": "array", "items": {"oneOf": [{"const": "self"}, {"type": "object"}]}},
                },
                "required": ["machine", "parts"],
                "additionalProperties": False,
            },
        ],
    },
}


class DocumentError(ValueError):
    """A document that fails schema or structural checks; ``problems`` lists each one."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


def _check(instance: Any, schema: dict) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(instance), key=lambda e: list(e.absolute_path))
    if errors:
        raise DocumentError([f"/{'/'.join(map(str, e.absolute_path))}: {e.message}" for e in errors])


def machine_labels(z: Himm) -> dict[int, str]:
    """Unique, stable display names for every reachable machine."""
    mids = z.reachable_machines()
    counts: dict[str, int] = {}
    for mid in mids:
        counts[z.names[mid]] = counts.get(z.names[mid], 0) + 1
    labels = {}
    used: set[str] = set()
    for mid in sorted(mids):
        name = z.names[mid]
        label = name if counts[name] == 1 else f"{name}#{mid}"
        while label in used:
            label += "'"
        used.add(label)
        labels[mid] = label
    return labels


def _machine_to_json(machine: MealyMachine, name: str) -> dict:
    sigma = machine.alphabet.names
    return {
        "name": name,
        "states": [
            {"id": q, "name": machine.state_names[q]} if q in machine.state_names else {"id": q}
            for q in machine.states
        ],
        "start": machine.start,
        "transitions": [
            {"from": q, "input": sigma[a], "to": t, "cost": c} for q, a, t, c in machine.transitions()
        ],
    }


def save(z: Himm) -> dict:
    """Canonical document: machines in id order, nesting sorted by (machine, state)."""
    labels = machine_labels(z)
    order = sorted(labels)
    return {
        "schema": SCHEMA_VERSION,
        "mode": z.mode,
        "alphabet": list(z.alphabet.names),
        "root": labels[z.root],
        "machines": [_machine_to_json(z.machines[mid], labels[mid]) for mid in order],
        "nesting": [
            {"machine": labels[mid], "state": q, "child": labels[kid]}
            for mid in order
            for q, kid in sorted(z.children[mid].items())
        ],
    }


def _machine_from_json(doc: dict, sigma: Alphabet, where: str, problems: list[str]) -> Optional[MealyMachine]:
    ids = [s["id"] for s in doc["states"]]
    if len(set(ids)) != len(ids):
        problems.append(f"{where}/states: duplicate state ids")
        return None
    arcs: dict[int, dict[int, tuple[int, float]]] = {}
    ok = True
    for i, tr in enumerate(doc["transitions"]):
        if tr["input"] not in sigma.names:
            problems.append(f"{where}/transitions/{i}/input: unknown input {tr['input']!r}")
            ok = False
            continue
        a = sigma.index(tr["input"])
        row = arcs.setdefault(tr["from"], {})
        if a in row:
            problems.append(f"{where}/transitions/{i}: second transition on input {tr['input']!r} from state {tr['from']}")
            ok = False
        row[a] = (tr["to"], tr["cost"])
    if not ok:
        return None
    names = {s["id"]: s["name"] for s in doc["states"] if "name" in s}
    try:
        return MealyMachine(tuple(ids), sigma, arcs, doc["start"], names)
    except (ValueError, LookupError) as err:
        problems.append(f"{where}: {err}")
        return None


def load(doc: Union[dict, str]) -> Himm:
    """Build a hierarchy from a document (or its JSON text), rejecting invalid ones."""
    from .hierarchy import validate

    if isinstance(doc, str):
        doc = json.loads(doc)
    _check(doc, HIMM_SCHEMA)
    problems: list[str] = []
    sigma = Alphabet(tuple(doc["alphabet"]))
    z = Himm(sigma, doc["mode"])
    by_name: dict[str, int] = {}
    for i, entry in enumerate(doc["machines"]):
        if entry["name"] in by_name:
            problems.append(f"/machines/{i}/name: duplicate machine name {entry['name']!r}")
            continue
        machine = _machine_from_json(entry, sigma, f"/machines/{i}", problems)
        if machine is not None:
            by_name[entry["name"]] = z.add_machine(machine, entry["name"])
    if doc["root"] not in by_name:
        problems.append(f"/root: unknown machine {doc['root']!r}")
    for i, arc in enumerate(doc["nesting"]):
        parent, child = by_name.get(arc["machine"]), by_name.get(arc["child"])
        label = f"/nesting/{i}: arc {arc['machine']}.{arc['state']} -> {arc['child']}"
        if parent is None or child is None:
            missing = arc["machine"] if parent is None else arc["child"]
            problems.append(f"{label} refers to unknown machine {missing!r} (dangling child)")
            continue
        if arc["state"] not in z.machines[parent]:
            problems.append(f"{label} nests at a state that {arc['machine']!r} does not have")
            continue
        if arc["state"] in z.children[parent]:
            problems.append(f"{label} nests a second machine at the same state")
            continue
        z.set_child(parent, arc["state"], child)
    if problems:
        raise DocumentError(problems)
    z.root = by_name[doc["root"]]
    violations = validate(z, reachability=False)
    if violations:
        raise DocumentError([f"{v.kind}: {v.detail}" for v in violations])
    return z


def read_document(path: Union[str, FsPath]) -> Himm:
    with open(path) as fh:
        return load(json.load(fh))


def write_json(data: Any, path: Union[str, FsPath, None]) -> None:
    text = json.dumps(data, indent=2)
    if path is None or str(path) == "-":
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


# modification scripts --------------------------------------------------------


def _resolve_name(z: Himm, name: str) -> int:
    labels = machine_labels(z)
    hits = [mid for mid, label in labels.items() if label == name]
    if not hits:
        raise DocumentError([f"unknown machine {name!r}"])
    return hits[0]


def _target(z: Himm, spec: Union[str, dict]):
    if isinstance(spec, str):
        return _resolve_name(z, spec)
    return tuple(spec["path"])


def parse_script(z: Himm, script: Union[list, str]) -> list[Modification]:
    """Turn a script into modifications; names are resolved against ``z`` as it is now.

    Each entry is resolved before any modification is applied, so a script
    that renames or removes machines should address later steps by path.
    """
    if isinstance(script, str):
        script = json.loads(script)
    _check(script, SCRIPT_SCHEMA)
    return [parse_modification(z, entry) for entry in script]


def parse_modification(z: Himm, entry: dict) -> Modification:
    op = entry["op"]
    sigma = z.alphabet
    if op == "add_state":
        child = _resolve_name(z, entry["child"]) if "child" in entry else None
        attach = load(entry["attach"]) if "attach" in entry else None
        return AddState(_target(z, entry["target"]), entry.get("state"), child, attach, entry.get("name"))
    if op == "subtract_state":
        return SubtractState(_target(z, entry["target"]), entry["state"])
    if op == "arc_modification":
        arcs: dict[int, dict[int, tuple[int, float]]] = {}
        for tr in entry["transitions"]:
            if tr["input"] not in sigma.names:
                raise DocumentError([f"unknown input {tr['input']!r}"])
            arcs.setdefault(tr["from"], {})[sigma.index(tr["input"])] = (tr["to"], tr["cost"])
        return ArcModification(_target(z, entry["target"]), arcs, entry.get("start"))
    if op == "composition":
        problems: list[str] = []
        machine = _machine_from_json(entry["machine"], sigma, "/machine", problems)
        if machine is None:
            raise DocumentError(problems)
        parts = [z if part == "self" else load(part) for part in entry["parts"]]
        return Composition(machine, parts, entry["machine"]["name"])
    raise DocumentError([f"unknown op {op!r}"])


# exit tables -------------------------------------------------------------------


def exits_to_json(z: Himm, table: ExitCostTable) -> dict:
    """Per machine and input: the exit cost (null when no exit) and its witness."""
    names = z.alphabet.names
    labels = machine_labels(z)
    out = {}
    for mid in sorted(labels):
        machine = z.machines[mid]
        entry = {}
        for a, name in enumerate(names):
            cost = table.cost[mid][a]
            witness = table.witness[mid][a]
            entry[name] = {
                "cost": None if cost == INF else cost,
                "witness": None if witness is None else [[q, names[b]] for q, b in witness],
            }
        out[labels[mid]] = {"states": {q: machine.name_of(q) for q in machine.states}, "exits": entry}
    return out
