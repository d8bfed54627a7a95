"""Shared test utilities: corpus loading, random graphs and a brute-force
MATCH oracle that shares no code with the executor.

The oracle reads the graph's raw node and relationship tables, enumerates
every assignment of relationship ids to relationship slots and node ids to
free node slots, and keeps the assignments that satisfy the pattern and the
WHERE clause under its own three-valued evaluator.
"""

from __future__ import annotations

import itertools
import json
import random
from collections import Counter
from pathlib import Path

from podkeeper.cypher import ast, parse
from podkeeper.graphstore import Graph
from podkeeper.graphstore.executor import value_to_json

DATA = Path(__file__).parent / "data"
CORPUS = DATA / "corpus.cypher"

LABELS = ["Person", "Service", "Repo"]
REL_TYPES = ["KNOWS", "USES", "OWNS"]
NAMES = ["alice", "bob", "carol", "dave", "m", "o'brien", "Case", ""]


def load_corpus() -> list[str]:
    lines = CORPUS.read_text(encoding="utf-8").splitlines()
    return [s.strip() for s in lines if s.strip() and not s.strip().startswith("//")]


def match_corpus() -> list[str]:
    return [s for s in load_corpus() if s.upper().startswith("MATCH") and " RETURN " in s.upper()]


# random graphs


def _random_props(rng: random.Random, node: bool) -> dict:
    props = {}
    if node:
        if rng.random() < 0.8:
            props["name"] = rng.choice(NAMES)
        roll = rng.random()
        if roll < 0.6:
            props["age"] = rng.randint(-5, 99)
        elif roll < 0.7:
            props["age"] = rng.choice([30.0, 40.5, 0.5])
        elif roll < 0.75:
            props["age"] = "thirty"
        if rng.random() < 0.6:
            props["active"] = rng.random() < 0.5
    else:
        if rng.random() < 0.6:
            props["since"] = rng.randint(2005, 2025)
        if rng.random() < 0.4:
            props["primary"] = rng.random() < 0.5
    return props


def random_graph(rng: random.Random, max_nodes: int = 50, max_rels: int = 100) -> Graph:
    g = Graph()
    for _ in range(rng.randint(0, max_nodes)):
        labels = rng.sample(LABELS, rng.choice([0, 1, 1, 1, 2]))
        g.add_node(labels, _random_props(rng, node=True))
    ids = list(g.nodes)
    if ids:
        for _ in range(rng.randint(0, max_rels)):
            g.add_rel(rng.choice(REL_TYPES), rng.choice(ids), rng.choice(ids), _random_props(rng, node=False))
    return g


# oracle value semantics


def _kind(v):
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, (int, float)):
        return "number"
    if isinstance(v, str):
        return "string"
    return v[0]  # ("node", id) or ("rel", id)


def _eq(a, b):
    if a is None or b is None:
        return None
    if _kind(a) != _kind(b):
        return False
    return a == b


def _cmp(op, a, b):
    if op == "=":
        return _eq(a, b)
    if op == "<>":
        r = _eq(a, b)
        return None if r is None else not r
    if _kind(a) != _kind(b) or _kind(a) not in ("bool", "number", "string"):
        return None
    return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]


def _and(a, b):
    if a is False or b is False:
        return False
    if a is None or b is None:
        return None
    return True


def _or(a, b):
    if a is True or b is True:
        return True
    if a is None or b is None:
        return None
    return False


class Oracle:
    def __init__(self, graph: Graph):
        self.nodes = {i: (frozenset(n.labels), dict(n.properties)) for i, n in graph.nodes.items()}
        self.rels = {i: (r.type, r.start, r.end, dict(r.properties)) for i, r in graph.rels.items()}

    # pattern checks

    def _props_ok(self, actual: dict, wanted) -> bool:
        return all(_eq(actual.get(k), lit.value) is True for k, lit in wanted)

    def _node_ok(self, node_id, pat: ast.NodePattern) -> bool:
        labels, props = self.nodes[node_id]
        return set(pat.labels) <= labels and self._props_ok(props, pat.properties)

    def _rel_ok(self, rel_id, pat: ast.RelPattern) -> bool:
        rtype, _, _, props = self.rels[rel_id]
        return (pat.rel_type is None or pat.rel_type == rtype) and self._props_ok(props, pat.properties)

    def bindings(self, patterns):
        """Yield (slot_ids, env) for every satisfying assignment, sorted by slot ids."""
        slots = []  # ("node", pattern) / ("rel", pattern, left_slot, right_slot)
        for path in patterns:
            base = len(slots)
            for i, node in enumerate(path.nodes):
                slots.append(("node", node))
                if i < len(path.rels):
                    slots.append(("rel", path.rels[i], base + 2 * i, base + 2 * i + 2))
        rel_slots = [i for i, s in enumerate(slots) if s[0] == "rel"]
        bound_by_rel = {s[2] for s in slots if s[0] == "rel"} | {s[3] for s in slots if s[0] == "rel"}
        free_nodes = [i for i, s in enumerate(slots) if s[0] == "node" and i not in bound_by_rel]
        rel_cands = [[r for r in self.rels if self._rel_ok(r, slots[i][1])] for i in rel_slots]
        node_cands = [[n for n in self.nodes if self._node_ok(n, slots[i][1])] for i in free_nodes]
        found = []
        for rel_choice in itertools.product(*rel_cands):
            if len(set(rel_choice)) != len(rel_choice):
                continue
            ids: list = [None] * len(slots)
            ok = True
            for slot, rel_id in zip(rel_slots, rel_choice):
                _, pat, left, right = slots[slot]
                _, start, end, _ = self.rels[rel_id]
                src, dst = (start, end) if pat.direction == "->" else (end, start)
                ids[slot] = rel_id
                for pos, node_id in ((left, src), (right, dst)):
                    if ids[pos] is not None and ids[pos] != node_id:
                        ok = False
                    ids[pos] = node_id
            if not ok or not all(self._node_ok(ids[i], slots[i][1]) for i in bound_by_rel):
                continue
            for node_choice in itertools.product(*node_cands):
                full = list(ids)
                for slot, node_id in zip(free_nodes, node_choice):
                    full[slot] = node_id
                env = {}
                for slot, node_id in enumerate(full):
                    var = slots[slot][1].variable
                    if var is None:
                        continue
                    entry = (slots[slot][0], node_id)
                    if env.setdefault(var, entry) != entry:
                        break
                else:
                    found.append((tuple(full), env))
        found.sort(key=lambda item: item[0])
        return found

    # expressions

    def value(self, expr, env):
        if isinstance(expr, ast.Literal):
            return expr.value
        if isinstance(expr, ast.Var):
            return env[expr.name]
        if isinstance(expr, ast.PropertyRef):
            kind, ident = env[expr.variable]
            props = self.nodes[ident][1] if kind == "node" else self.rels[ident][3]
            return props.get(expr.key)
        if isinstance(expr, ast.Comparison):
            return _cmp(expr.op, self.value(expr.left, env), self.value(expr.right, env))
        if isinstance(expr, ast.Not):
            v = self.value(expr.operand, env)
            return None if v is None else not v
        if isinstance(expr, ast.And):
            return _and(self.value(expr.left, env), self.value(expr.right, env))
        if isinstance(expr, ast.Or):
            return _or(self.value(expr.left, env), self.value(expr.right, env))
        raise TypeError(expr)

    def to_json(self, v):
        if isinstance(v, tuple):
            kind, ident = v
            if kind == "node":
                labels, props = self.nodes[ident]
                return {"id": ident, "labels": sorted(labels), "properties": props}
            rtype, start, end, props = self.rels[ident]
            return {"id": ident, "type": rtype, "start": start, "end": end, "properties": props}
        return v

    def run(self, stmt: ast.MatchStmt) -> list:
        envs = [env for _, env in self.bindings(stmt.match.patterns)]
        if stmt.match.where is not None:
            envs = [env for env in envs if self.value(stmt.match.where, env) is True]
        aggregate = [isinstance(item, ast.Count) for item in stmt.returns]
        if not any(aggregate):
            rows = [[self.to_json(self.value(item, env)) for item in stmt.returns] for env in envs]
        else:
            order, counts = [], {}
            for env in envs:
                raw = [self.value(item, env) for item, agg in zip(stmt.returns, aggregate) if not agg]
                key = tuple((_kind(v), v) for v in raw)
                if key not in counts:
                    order.append((key, raw))
                    counts[key] = [0] * len(stmt.returns)
                for i, item in enumerate(stmt.returns):
                    if aggregate[i] and (item.argument is None or self.value(item.argument, env) is not None):
                        counts[key][i] += 1
            if not order and all(aggregate):
                order, counts = [((), [])], {(): [0] * len(stmt.returns)}
            rows = []
            for key, raw in order:
                values = iter(raw)
                rows.append([counts[key][i] if aggregate[i] else self.to_json(next(values)) for i in range(len(aggregate))])
        if stmt.limit is not None:
            rows = rows[: stmt.limit]
        return rows


def brute_force(graph: Graph, statement: str) -> list:
    return Oracle(graph).run(parse(statement))


# row comparison


def _canonical(value):
    if isinstance(value, dict) and "labels" in value:
        value = dict(value, labels=sorted(value["labels"]))
    return json.dumps(value, sort_keys=True)


def canonical_rows(rows) -> list[tuple]:
    return [tuple(_canonical(value_to_json(v)) for v in row) for row in rows]


def row_multiset(rows) -> Counter:
    return Counter(canonical_rows(rows))


# pod lifecycle reference model

from podkeeper import errors as E  # noqa: E402
from podkeeper.podman import TRANSITIONS, PermissionLevel, PodRegistry, PodState  # noqa: E402

USERS = ["ann", "ben", "cat"]
POD_IDS = ["p1", "p2", "p3"]
ALLOWED = {"create", "delete", "stop", "start", "grant", "creds", "get", "list"}


class FlakyProvisioner:
    def __init__(self, rng):
        self.rng = rng

    def provision(self, pod):
        if self.rng.random() < 0.15:
            raise RuntimeError("provisioning failed")

    def detach(self, pod):
        pass


class PodModel:
    """Minimal independent model: pod -> [state, owner, {user: level}]."""

    def __init__(self):
        self.pods = {}

    def level(self, pod_id, user):
        return self.pods[pod_id][2].get(user, 0)

    def expect(self, cmd, user, pod_id, arg=None):
        """Return the expected exception class (or None) and apply the effect."""
        if cmd == "create":
            if pod_id in self.pods:
                return E.DuplicatePodId
            return "create"
        if cmd == "list":
            return None
        if pod_id not in self.pods:
            return E.PodNotFound
        state, owner, perms = self.pods[pod_id]
        need = {"get": 1, "creds": 2, "delete": 3, "stop": 3, "start": 3, "grant": 3}[cmd]
        if self.level(pod_id, user) < need:
            return E.Forbidden
        if cmd == "get":
            return None
        if cmd == "creds":
            return None if state == "AVAILABLE" else E.PodNotReady
        if cmd == "delete":
            if state == "DELETED":
                return E.PodDeleted
            self.pods[pod_id][0] = "DELETED"
            return None
        if cmd == "stop":
            if state != "AVAILABLE":
                return E.IllegalTransition
            self.pods[pod_id][0] = "STOPPED"
            return None
        if cmd == "start":
            if state != "STOPPED":
                return E.IllegalTransition
            self.pods[pod_id][0] = "AVAILABLE"
            return None
        grantee, lvl = arg
        if grantee == owner and lvl != 3:
            return E.CannotDowngradeOwner
        perms[grantee] = lvl
        return None


def run_lifecycle_sequence(rng, length: int) -> list[str]:
    """Drive a registry and the model with the same random commands; return violations."""
    registry = PodRegistry(provisioner=FlakyProvisioner(rng))
    model = PodModel()
    problems = []
    for _ in range(length):
        cmd = rng.choice(sorted(ALLOWED))
        user, pod_id = rng.choice(USERS), rng.choice(POD_IDS)
        arg = (rng.choice(USERS), rng.randint(1, 3)) if cmd == "grant" else None
        expected = model.expect(cmd, user, pod_id, arg)
        try:
            if cmd == "create":
                pod = registry.create_pod(user, pod_id, "neo4j", "")
            elif cmd == "list":
                got = [p.pod_id for p in registry.list_pods(user)]
                want = sorted(p for p, (_, _, perms) in model.pods.items() if user in perms)
                if got != want:
                    problems.append(f"list_pods({user}) = {got}, expected {want}")
            elif cmd == "get":
                registry.get_pod(user, pod_id)
            elif cmd == "creds":
                registry.get_pod_credentials(user, pod_id)
            elif cmd == "delete":
                registry.delete_pod(user, pod_id)
            elif cmd == "stop":
                registry.stop_pod(user, pod_id)
            elif cmd == "start":
                registry.start_pod(user, pod_id)
            else:
                registry.set_permission(user, pod_id, arg[0], PermissionLevel(arg[1]))
            outcome = None
        except E.PodkeeperError as exc:
            outcome = type(exc)
        if expected == "create":
            if outcome is not None:
                problems.append(f"create {pod_id} raised {outcome.__name__}")
            else:
                model.pods[pod_id] = [pod.state.value, user, {user: 3}]
                if pod.state not in (PodState.AVAILABLE, PodState.ERROR):
                    problems.append(f"create left {pod_id} in {pod.state.value}")
        elif outcome is not expected:
            name = expected.__name__ if expected else "success"
            got = outcome.__name__ if outcome else "success"
            problems.append(f"{cmd} {user} {pod_id} {arg}: expected {name}, got {got}")
        for pod in registry.all_pods():
            for step in pod.history:
                if step not in TRANSITIONS:
                    problems.append(f"undeclared transition {step} on {pod.pod_id}")
            if pod.permissions.get(pod.owner) is not PermissionLevel.ADMIN:
                problems.append(f"owner of {pod.pod_id} lost ADMIN")
            if pod.state.value != model.pods[pod.pod_id][0]:
                problems.append(f"{pod.pod_id} state {pod.state.value} != model {model.pods[pod.pod_id][0]}")
        if problems:
            break
    return problems


# parser fuzzing

from podkeeper.cypher import CypherError, render  # noqa: E402

FUZZ_VOCAB = [
    "MATCH", "match", "CREATE", "MERGE", "DELETE", "DETACH", "SET", "RETURN", "WHERE", "LIMIT",
    "LOAD", "CSV", "WITH", "HEADERS", "FROM", "AS", "AND", "OR", "NOT", "count", "true", "null",
    "(", ")", "[", "]", "{", "}", ":", ",", ".", "-", "->", "<-", "=", "<>", "<", "<=", ">", ">=",
    ";", "*", "n", "m", "row", "Person", "KNOWS", "name", "'x'", "'it\\'s'", "42", "-7", "3.5",
    "1e3", "99999999999999999999", "'unterminated", "\n", " ", "//c\n", "@", "$p", "`q`", "é",
]


def position_ok(text: str, err: CypherError) -> bool:
    if not text:
        return err.offset == 0 and err.line == 1 and err.column == 1
    if not 0 <= err.offset < len(text):
        return False
    line = text.count("\n", 0, err.offset) + 1
    column = err.offset - (text.rfind("\n", 0, err.offset) + 1) + 1
    return (err.line, err.column) == (line, column)


def fuzz_input(rng: random.Random, corpus: list[str]) -> str:
    roll = rng.random()
    if roll < 0.3:
        raw = bytes(rng.randrange(256) for _ in range(rng.randint(0, 60)))
        return raw.decode("utf-8", errors="replace")
    if roll < 0.65:
        return " ".join(rng.choice(FUZZ_VOCAB) for _ in range(rng.randint(0, 25)))
    text = list(rng.choice(corpus))
    for _ in range(rng.randint(1, 4)):
        op = rng.random()
        pos = rng.randrange(len(text) + 1)
        if op < 0.4 and text:
            del text[min(pos, len(text) - 1)]
        elif op < 0.8:
            text.insert(pos, rng.choice("()[]{}:,.-<>='\\ \nabcMATCH0123;*"))
        elif text:
            j = rng.randrange(len(text))
            text[min(pos, len(text) - 1)], text[j] = text[j], text[min(pos, len(text) - 1)]
    return "".join(text)


def check_fuzz_case(text: str) -> str | None:
    """Return a description of the failure, or None when behaviour is acceptable."""
    try:
        stmt = parse(text)
    except CypherError as err:
        if not position_ok(text, err):
            return f"bad position {err.to_dict()} for {text!r}"
        return None
    except Exception as exc:  # anything else is a crash
        return f"{type(exc).__name__}: {exc} for {text!r}"
    try:
        if parse(render(stmt)) != stmt:
            return f"round-trip mismatch for {text!r}"
    except Exception as exc:
        return f"render/reparse failed ({type(exc).__name__}: {exc}) for {text!r}"
    return None
