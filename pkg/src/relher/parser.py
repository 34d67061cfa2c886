"""Parser and printer for the S-expression planning file format.

Grammar (see docs/FORMAT.md for the full description)::

    (domain NAME
      (predicates (NAME ?VAR ...) ...)
      (action :name NAME :parameters (?VAR ...)
              :precondition (ATOM ...) :add (ATOM ...) :delete (ATOM ...))
      ...)

    (problem NAME
      (objects NAME ...)
      (init ATOM ...)
      (goal ATOM ...))

The subset is untyped STRIPS: no conditional effects, no negative
preconditions, no axioms. ``parse -> print -> parse`` round-trips to
identical structures.
"""

from __future__ import annotations

from .errors import ParseError, ValidationError
from .planning import ActionSchema, Domain, Predicate, Problem
from .sexpr import SList, Symbol, read_one


def _expect_symbol(node, what):
    if not isinstance(node, Symbol):
        raise ParseError(f"expected {what}", node.line, node.col)
    return node.text


def _expect_list(node, what):
    if not isinstance(node, SList):
        raise ParseError(f"expected {what}", node.line, node.col)
    return node


def _is_variable(text):
    return text.startswith("?") and len(text) > 1


def parse_domain(text):
    root = _expect_list(read_one(text), "a (domain ...) form")
    if not root.items or _expect_symbol(root[0], "'domain'") != "domain":
        raise ParseError("file must start with (domain NAME ...)",
                         root.line, root.col)
    if len(root) < 2:
        raise ParseError("domain needs a name", root.line, root.col)
    name = _expect_symbol(root[1], "domain name")

    predicates = []
    pred_ids = {}
    schema_nodes = []
    for node in root.items[2:]:
        node = _expect_list(node, "(predicates ...) or (action ...)")
        head = _expect_symbol(node[0], "section keyword") if node.items else ""
        if head == "predicates":
            for decl in node.items[1:]:
                decl = _expect_list(decl, "a predicate declaration")
                if not decl.items:
                    raise ParseError("empty predicate declaration",
                                     decl.line, decl.col)
                pname = _expect_symbol(decl[0], "predicate name")
                if pname in pred_ids:
                    raise ParseError(f"duplicate predicate {pname!r}",
                                     decl.line, decl.col)
                params = [_expect_symbol(p, "a ?variable") for p in decl.items[1:]]
                for p, raw in zip(params, decl.items[1:]):
                    if not _is_variable(p):
                        raise ParseError(f"predicate parameter {p!r} must start "
                                         "with '?'", raw.line, raw.col)
                pred_ids[pname] = len(predicates)
                predicates.append(Predicate(len(predicates), pname, len(params)))
        elif head == "action":
            schema_nodes.append(node)
        else:
            raise ParseError(f"unknown domain section {head!r}",
                             node.line, node.col)

    schemas = []
    seen = set()
    for node in schema_nodes:
        schema = _parse_schema(node, len(schemas), predicates, pred_ids)
        if schema.name in seen:
            raise ParseError(f"duplicate action {schema.name!r}",
                             node.line, node.col)
        seen.add(schema.name)
        schemas.append(schema)
    return Domain(name, tuple(predicates), tuple(schemas))


def _parse_schema(node, schema_id, predicates, pred_ids):
    fields = {}
    items = node.items[1:]
    if len(items) % 2:
        raise ParseError("action sections must be :keyword value pairs",
                         node.line, node.col)
    for key_node, value in zip(items[::2], items[1::2]):
        key = _expect_symbol(key_node, "an action keyword")
        if not key.startswith(":"):
            raise ParseError(f"expected :keyword, found {key!r}",
                             key_node.line, key_node.col)
        fields[key[1:]] = value
    missing = {"name", "parameters", "precondition", "add", "delete"} - fields.keys()
    if missing:
        raise ParseError(f"action is missing {sorted(missing)}",
                         node.line, node.col)

    name = _expect_symbol(fields["name"], "action name")
    params_node = _expect_list(fields["parameters"], "a parameter list")
    params = []
    for p in params_node.items:
        t = _expect_symbol(p, "a ?variable")
        if not _is_variable(t):
            raise ParseError(f"parameter {t!r} must start with '?'", p.line, p.col)
        if t in params:
            raise ParseError(f"duplicate parameter {t!r}", p.line, p.col)
        params.append(t)
    index = {p: i for i, p in enumerate(params)}

    def body(key):
        atoms = []
        for raw in _expect_list(fields[key], f"a {key} atom list").items:
            raw = _expect_list(raw, "an atom")
            if not raw.items:
                raise ParseError("empty atom", raw.line, raw.col)
            pname = _expect_symbol(raw[0], "predicate name")
            if pname not in pred_ids:
                raise ValidationError(
                    f"{raw.line}:{raw.col}: undeclared predicate {pname!r} "
                    f"in action {name!r}")
            pred = predicates[pred_ids[pname]]
            args = []
            for arg in raw.items[1:]:
                t = _expect_symbol(arg, "a ?variable")
                if t not in index:
                    raise ValidationError(
                        f"{arg.line}:{arg.col}: variable {t!r} in action "
                        f"{name!r} is not a parameter")
                args.append(index[t])
            if len(args) != pred.arity:
                raise ValidationError(
                    f"{raw.line}:{raw.col}: {pname!r} expects {pred.arity} "
                    f"arguments, found {len(args)}")
            atoms.append((pred.id, *args))
        return tuple(atoms)

    pre, add, dele = body("precondition"), body("add"), body("delete")
    if set(add) & set(dele):
        raise ValidationError(f"action {name!r}: add and delete lists overlap")
    return ActionSchema(schema_id, name, tuple(params), pre, add, dele)


def parse_problem(text, domain):
    root = _expect_list(read_one(text), "a (problem ...) form")
    if not root.items or _expect_symbol(root[0], "'problem'") != "problem":
        raise ParseError("file must start with (problem NAME ...)",
                         root.line, root.col)
    if len(root) < 2:
        raise ParseError("problem needs a name", root.line, root.col)
    name = _expect_symbol(root[1], "problem name")

    sections = {}
    for node in root.items[2:]:
        node = _expect_list(node, "(objects|init|goal ...)")
        head = _expect_symbol(node[0], "section keyword") if node.items else ""
        if head not in ("objects", "init", "goal"):
            raise ParseError(f"unknown problem section {head!r}",
                             node.line, node.col)
        if head in sections:
            raise ParseError(f"duplicate section {head!r}", node.line, node.col)
        sections[head] = node
    missing = {"objects", "init", "goal"} - sections.keys()
    if missing:
        raise ParseError(f"problem is missing {sorted(missing)}",
                         root.line, root.col)

    objects = []
    for node in sections["objects"].items[1:]:
        t = _expect_symbol(node, "an object name")
        if _is_variable(t):
            raise ParseError("objects must not start with '?'", node.line, node.col)
        if t in objects:
            raise ParseError(f"duplicate object {t!r}", node.line, node.col)
        objects.append(t)
    obj_id = {o: i for i, o in enumerate(objects)}
    pred_by_name = domain.pred_by_name

    def atoms(section):
        out = []
        for raw in sections[section].items[1:]:
            raw = _expect_list(raw, "a ground atom")
            if not raw.items:
                raise ParseError("empty atom", raw.line, raw.col)
            pname = _expect_symbol(raw[0], "predicate name")
            pred = pred_by_name.get(pname)
            if pred is None:
                raise ValidationError(
                    f"{raw.line}:{raw.col}: undeclared predicate {pname!r} "
                    f"in {section}")
            args = []
            for arg in raw.items[1:]:
                t = _expect_symbol(arg, "an object name")
                if t not in obj_id:
                    raise ValidationError(
                        f"{arg.line}:{arg.col}: undeclared object {t!r} "
                        f"in {section}")
                args.append(obj_id[t])
            if len(args) != pred.arity:
                raise ValidationError(
                    f"{raw.line}:{raw.col}: {pname!r} expects {pred.arity} "
                    f"arguments, found {len(args)}")
            out.append((pred.id, *args))
        return frozenset(out)

    return Problem(name, domain, tuple(objects), atoms("init"), atoms("goal"))


# -- printing ----------------------------------------------------------


def _print_schema_atom(domain, schema, atom):
    pred = domain.predicates[atom[0]]
    parts = [pred.name] + [schema.params[i] for i in atom[1:]]
    return f"({' '.join(parts)})"


def print_domain(domain):
    lines = [f"(domain {domain.name}"]
    decls = " ".join(
        f"({p.name}{''.join(f' ?x{i}' for i in range(p.arity))})"
        for p in domain.predicates)
    lines.append(f"  (predicates {decls})")
    for schema in domain.schemas:
        body = {
            "precondition": schema.precondition,
            "add": schema.add,
            "delete": schema.delete,
        }
        lines.append(f"  (action :name {schema.name} "
                     f":parameters ({' '.join(schema.params)})")
        for key, atoms in body.items():
            rendered = " ".join(_print_schema_atom(domain, schema, a)
                                for a in atoms)
            lines.append(f"    :{key} ({rendered})")
        lines[-1] += ")"
    lines[-1] += ")"
    return "\n".join(lines) + "\n"


def print_problem(problem):
    def atom_text(atom):
        pred = problem.domain.predicates[atom[0]]
        parts = [pred.name] + [problem.objects[i] for i in atom[1:]]
        return f"({' '.join(parts)})"

    lines = [f"(problem {problem.name}"]
    lines.append(f"  (objects {' '.join(problem.objects)})")
    lines.append(f"  (init {' '.join(atom_text(a) for a in sorted(problem.init))})")
    lines.append(f"  (goal {' '.join(atom_text(a) for a in sorted(problem.goal))}))")
    return "\n".join(lines) + "\n"


def load_domain(path):
    with open(path, encoding="utf-8") as fh:
        return parse_domain(fh.read())


def load_problem(path, domain):
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read(), domain)
