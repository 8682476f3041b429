"""Recursive-descent-free parser for the supported PDDL subset.

Three stages: tokenize, read one s-expression tree with an explicit
stack (no recursion, so adversarial nesting cannot overflow), then walk
the tree into :mod:`harrow.pddl.model` ASTs. Identifiers are
case-insensitive and normalized to lower case. All failures raise
:class:`~harrow.pddl.errors.PddlError` subclasses carrying positions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    ArityError,
    DomainMismatch,
    LexError,
    ParseError,
    SourcePos,
    UnknownFluent,
    UnknownPredicate,
    UnknownType,
    UnsupportedRequirement,
)
from .model import (
    ROOT_TYPE,
    SUPPORTED_REQUIREMENTS,
    ActionSchema,
    Atom,
    CostExpr,
    CostFluentRef,
    CostValue,
    DomainAst,
    Literal,
    Parameter,
    ProblemAst,
)

_IDENT = re.compile(r"[a-z][a-z0-9_-]*\Z")
_NUMBER = re.compile(r"[+-]?(\d+)(\.\d+)?([eE][+-]?\d+)?\Z")
_EXPONENT = re.compile(r"[eE]([+-]?\d+)")
_WORD_BREAK = frozenset("()\t\r\n ;")

_RESERVED_TYPES = (ROOT_TYPE, "number")

MAX_INPUT_BYTES = 1 << 20


@dataclass(frozen=True)
class _Tok:
    kind: str  # "(" ")" "sym" "var" "kw" "num"
    text: str
    pos: SourcePos
    value: Fraction | None = None


@dataclass(frozen=True)
class _Node:
    """Either a leaf token or a parenthesized list of nodes."""

    tok: _Tok | None
    items: tuple["_Node", ...] | None
    pos: SourcePos

    @property
    def is_list(self) -> bool:
        return self.items is not None


def _decode(text: str | bytes) -> str:
    if isinstance(text, bytes):
        if len(text) > MAX_INPUT_BYTES:
            raise LexError(f"input larger than {MAX_INPUT_BYTES} bytes")
        try:
            return text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise LexError(f"invalid UTF-8 at byte {exc.start}") from None
    if len(text) > MAX_INPUT_BYTES:
        raise LexError(f"input larger than {MAX_INPUT_BYTES} characters")
    return text


def _classify(word: str, pos: SourcePos) -> _Tok:
    lowered = word.lower()
    if lowered.startswith("?"):
        if _IDENT.match(lowered[1:]):
            return _Tok("var", lowered, pos)
        raise LexError(f"bad variable name {word!r}", pos)
    if lowered.startswith(":"):
        if _IDENT.match(lowered[1:]):
            return _Tok("kw", lowered, pos)
        raise LexError(f"bad keyword {word!r}", pos)
    if _NUMBER.match(word):
        exp = _EXPONENT.search(word)
        if exp and abs(int(exp.group(1))) > 1000:
            raise LexError(f"number exponent out of range in {word!r}", pos)
        return _Tok("num", lowered, pos, value=Fraction(word))
    if lowered in ("=", "-") or _IDENT.match(lowered):
        return _Tok("sym", lowered, pos)
    bad = next((ch for ch in word if not (ch.isalnum() or ch in "_-?:.=+")), word[0])
    raise LexError(f"unexpected character {bad!r} in {word!r}", pos)


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        pos = SourcePos(line, col)
        if ch == "(" or ch == ")":
            toks.append(_Tok(ch, ch, pos))
            i += 1
            col += 1
            continue
        j = i
        while j < n and text[j] not in _WORD_BREAK:
            j += 1
        toks.append(_classify(text[i:j], pos))
        col += j - i
        i = j
    return toks


def _read_tree(toks: list[_Tok]) -> _Node:
    """Read exactly one s-expression; anything before/after is an error."""
    if not toks:
        raise ParseError("empty input", expected=("(",))
    stack: list[tuple[SourcePos, list[_Node]]] = []
    root: _Node | None = None
    for tok in toks:
        if root is not None:
            raise ParseError("trailing content after top-level form", tok.pos)
        if tok.kind == "(":
            stack.append((tok.pos, []))
        elif tok.kind == ")":
            if not stack:
                raise ParseError("unbalanced ')'", tok.pos)
            pos, items = stack.pop()
            node = _Node(None, tuple(items), pos)
            if stack:
                stack[-1][1].append(node)
            else:
                root = node
        else:
            if not stack:
                raise ParseError(f"top-level form must be a list, got {tok.text!r}", tok.pos)
            stack[-1][1].append(_Node(tok, None, tok.pos))
    if stack:
        raise ParseError("unbalanced '(': form never closed", stack[-1][0])
    assert root is not None
    return root


def _head(node: _Node) -> str | None:
    if node.is_list and node.items and not node.items[0].is_list:
        tok = node.items[0].tok
        if tok is not None and tok.kind == "sym":
            return tok.text
    return None


def _sym(node: _Node, what: str) -> str:
    if not node.is_list and node.tok is not None and node.tok.kind == "sym":
        return node.tok.text
    raise ParseError(f"expected {what}", node.pos, expected=("name",))


def _want_list(node: _Node, what: str) -> tuple[_Node, ...]:
    if node.is_list:
        assert node.items is not None
        return node.items
    raise ParseError(f"expected {what}", node.pos, expected=("(",))


def _typed_list(items: tuple[_Node, ...], kind: str) -> list[tuple[str, str, SourcePos]]:
    """Parse ``a b - t c - u`` into [(name, type, pos)]; untyped means object."""
    out: list[tuple[str, str, SourcePos]] = []
    pending: list[tuple[str, SourcePos]] = []
    i = 0
    while i < len(items):
        node = items[i]
        if not node.is_list and node.tok is not None and node.tok.kind == "sym" and node.tok.text == "-":
            if not pending:
                raise ParseError("dangling '-' in typed list", node.pos)
            if i + 1 >= len(items):
                raise ParseError("missing type after '-'", node.pos, expected=("type name",))
            tname = _sym(items[i + 1], "type name")
            out.extend((name, tname, pos) for name, pos in pending)
            pending = []
            i += 2
            continue
        if kind == "var":
            if node.is_list or node.tok is None or node.tok.kind != "var":
                raise ParseError("expected ?variable", node.pos, expected=("?name",))
            pending.append((node.tok.text, node.pos))
        else:
            pending.append((_sym(node, "name"), node.pos))
        i += 1
    out.extend((name, ROOT_TYPE, pos) for name, pos in pending)
    return out


class _DomainBuilder:
    def __init__(self) -> None:
        self.requirements: list[str] = []
        self.types: dict[str, str] = {}
        self.predicates: dict[str, tuple[Parameter, ...]] = {}
        self.functions: dict[str, tuple[Parameter, ...]] = {}
        self.actions: list[ActionSchema] = []
        self.seen: set[str] = set()

    def known_type(self, t: str, pos: SourcePos) -> str:
        if t != ROOT_TYPE and t not in self.types:
            raise UnknownType(f"undeclared type {t!r}", pos)
        return t

    def section(self, node: _Node) -> None:
        items = _want_list(node, "domain section")
        if not items or items[0].is_list or items[0].tok is None or items[0].tok.kind != "kw":
            raise ParseError(
                "expected domain section",
                node.pos,
                expected=(":requirements", ":types", ":predicates", ":functions", ":action"),
            )
        kw = items[0].tok.text
        if kw != ":action":
            if kw in self.seen:
                raise ParseError(f"duplicate section {kw}", node.pos)
            self.seen.add(kw)
        if kw == ":requirements":
            self._requirements(items[1:])
        elif kw == ":types":
            self._types(items[1:])
        elif kw == ":predicates":
            self._signatures(items[1:], self.predicates, "predicate")
        elif kw == ":functions":
            self._functions(items[1:])
        elif kw == ":action":
            self._action(items[1:], node.pos)
        else:
            raise ParseError(
                f"unsupported domain section {kw}",
                node.pos,
                expected=(":requirements", ":types", ":predicates", ":functions", ":action"),
            )

    def _requirements(self, items: tuple[_Node, ...]) -> None:
        for node in items:
            if node.is_list or node.tok is None or node.tok.kind != "kw":
                raise ParseError("expected :requirement keyword", node.pos)
            req = node.tok.text
            if req not in SUPPORTED_REQUIREMENTS:
                raise UnsupportedRequirement(f"requirement {req} is not supported", node.pos)
            if req not in self.requirements:
                self.requirements.append(req)

    def _types(self, items: tuple[_Node, ...]) -> None:
        decls = _typed_list(items, "sym")
        for name, sup, pos in decls:
            if name in _RESERVED_TYPES:
                raise ParseError(f"cannot redeclare built-in type {name!r}", pos)
            if name in self.types and self.types[name] != sup:
                raise ParseError(f"type {name!r} declared twice with different supertypes", pos)
            self.types[name] = sup
        for _, sup, pos in decls:
            if sup == "number":
                raise ParseError("'number' cannot be a supertype", pos)
            # a name used only as a supertype is implicitly a direct subtype of object
            if sup != ROOT_TYPE and sup not in self.types:
                self.types[sup] = ROOT_TYPE
        # reject supertype cycles
        for name in self.types:
            seen = {name}
            cur = name
            while cur != ROOT_TYPE:
                cur = self.types.get(cur, ROOT_TYPE)
                if cur in seen:
                    raise ParseError(f"type cycle through {name!r}")
                seen.add(cur)

    def _signature(self, node: _Node, what: str) -> tuple[str, tuple[Parameter, ...]]:
        items = _want_list(node, f"{what} declaration")
        if not items:
            raise ParseError(f"empty {what} declaration", node.pos)
        name = _sym(items[0], f"{what} name")
        decls = _typed_list(items[1:], "var")
        params = []
        names = set()
        for vname, vtype, pos in decls:
            if vname in names:
                raise ParseError(f"duplicate parameter {vname}", pos)
            names.add(vname)
            params.append(Parameter(vname, self.known_type(vtype, pos)))
        return name, tuple(params)

    def _signatures(
        self, items: tuple[_Node, ...], into: dict[str, tuple[Parameter, ...]], what: str
    ) -> None:
        for node in items:
            name, params = self._signature(node, what)
            if name in into:
                raise ParseError(f"duplicate {what} {name!r}", node.pos)
            into[name] = params

    def _functions(self, items: tuple[_Node, ...]) -> None:
        # tolerate the conventional trailing "- number" return annotation
        filtered: list[_Node] = []
        i = 0
        while i < len(items):
            node = items[i]
            if (
                not node.is_list
                and node.tok is not None
                and node.tok.kind == "sym"
                and node.tok.text == "-"
            ):
                if i + 1 < len(items) and _sym(items[i + 1], "type") == "number":
                    i += 2
                    continue
                raise ParseError("only '- number' is allowed after a function", node.pos)
            filtered.append(node)
            i += 1
        self._signatures(tuple(filtered), self.functions, "function")

    def _atom(self, node: _Node, bound: set[str], require_pred: bool = True) -> Atom:
        items = _want_list(node, "atom")
        if not items:
            raise ParseError("empty atom", node.pos)
        name = _sym(items[0], "predicate name")
        args = []
        for arg in items[1:]:
            if arg.is_list or arg.tok is None or arg.tok.kind not in ("sym", "var"):
                raise ParseError("atom arguments must be names or ?variables", arg.pos)
            if arg.tok.kind == "var" and arg.tok.text not in bound:
                raise ParseError(f"variable {arg.tok.text} not in parameter list", arg.pos)
            args.append(arg.tok.text)
        if require_pred:
            if name not in self.predicates:
                raise UnknownPredicate(f"undeclared predicate {name!r}", node.pos)
            if len(args) != len(self.predicates[name]):
                raise ArityError(
                    f"predicate {name!r} takes {len(self.predicates[name])} args, got {len(args)}",
                    node.pos,
                )
        return Atom(name, tuple(args), pos=node.pos)

    def _literals(self, node: _Node, bound: set[str], what: str) -> list[Literal]:
        """A goal-description: single literal or (and literal*)."""
        items = _want_list(node, what)
        if _head(node) == "and":
            parts = items[1:]
        else:
            parts = (node,)
        out = []
        for part in parts:
            if _head(part) == "not":
                sub = _want_list(part, "negated literal")
                if len(sub) != 2:
                    raise ParseError("(not ...) takes exactly one atom", part.pos)
                out.append(Literal(self._atom(sub[1], bound), positive=False))
            else:
                out.append(Literal(self._atom(part, bound), positive=True))
        return out

    def _cost_expr(self, node: _Node, pos: SourcePos) -> CostExpr:
        if not node.is_list and node.tok is not None and node.tok.kind == "num":
            assert node.tok.value is not None
            if node.tok.value < 0:
                raise ParseError("action costs must be nonnegative", node.pos)
            return CostValue(node.tok.value)
        if node.is_list:
            items = _want_list(node, "cost fluent reference")
            if not items:
                raise ParseError("empty cost fluent reference", node.pos)
            name = _sym(items[0], "fluent name")
            if name not in self.functions:
                raise UnknownFluent(f"undeclared function {name!r}", node.pos)
            args = []
            for arg in items[1:]:
                if arg.is_list or arg.tok is None or arg.tok.kind != "sym":
                    raise ParseError("cost fluent reference must be ground", arg.pos)
                args.append(arg.tok.text)
            if len(args) != len(self.functions[name]):
                raise ArityError(f"function {name!r} arity mismatch", node.pos)
            return CostFluentRef(Atom(name, tuple(args), pos=node.pos))
        raise ParseError("cost must be a number or ground fluent reference", pos)

    def _action(self, items: tuple[_Node, ...], pos: SourcePos) -> None:
        if not items:
            raise ParseError("action needs a name", pos)
        name = _sym(items[0], "action name")
        if any(a.name == name for a in self.actions):
            raise ParseError(f"duplicate action {name!r}", pos)
        sections: dict[str, _Node] = {}
        rest = items[1:]
        if len(rest) % 2 != 0:
            raise ParseError("action body must be keyword/value pairs", pos)
        for k in range(0, len(rest), 2):
            kwnode = rest[k]
            if kwnode.is_list or kwnode.tok is None or kwnode.tok.kind != "kw":
                raise ParseError(
                    "expected action keyword",
                    kwnode.pos,
                    expected=(":parameters", ":precondition", ":effect"),
                )
            kw = kwnode.tok.text
            if kw not in (":parameters", ":precondition", ":effect"):
                raise ParseError(f"unsupported action section {kw}", kwnode.pos)
            if kw in sections:
                raise ParseError(f"duplicate action section {kw}", kwnode.pos)
            sections[kw] = rest[k + 1]
        if ":parameters" not in sections:
            raise ParseError(f"action {name!r} is missing :parameters", pos)

        decls = _typed_list(_want_list(sections[":parameters"], "parameter list"), "var")
        params = []
        bound: set[str] = set()
        for vname, vtype, vpos in decls:
            if vname in bound:
                raise ParseError(f"duplicate parameter {vname}", vpos)
            bound.add(vname)
            params.append(Parameter(vname, self.known_type(vtype, vpos)))

        precondition: tuple[Literal, ...] = ()
        if ":precondition" in sections:
            precondition = tuple(self._literals(sections[":precondition"], bound, "precondition"))

        add: list[Atom] = []
        delete: list[Atom] = []
        cost: CostExpr = CostValue(Fraction(0))
        if ":effect" in sections:
            node = sections[":effect"]
            parts = _want_list(node, "effect")[1:] if _head(node) == "and" else (node,)
            cost_seen = False
            for part in parts:
                h = _head(part)
                if h == "not":
                    sub = _want_list(part, "delete effect")
                    if len(sub) != 2:
                        raise ParseError("(not ...) takes exactly one atom", part.pos)
                    delete.append(self._atom(sub[1], bound))
                elif h == "increase":
                    sub = _want_list(part, "increase effect")
                    if len(sub) != 3:
                        raise ParseError("(increase (total-cost) expr) expected", part.pos)
                    target = sub[1]
                    if _head(target) != "total-cost" or len(_want_list(target, "cost target")) != 1:
                        raise ParseError("only (total-cost) may be increased", target.pos)
                    if "total-cost" not in self.functions:
                        raise UnknownFluent("(total-cost) used but not declared", target.pos)
                    if cost_seen:
                        raise ParseError("multiple (increase ...) effects", part.pos)
                    cost_seen = True
                    cost = self._cost_expr(sub[2], part.pos)
                else:
                    add.append(self._atom(part, bound))
        self.actions.append(
            ActionSchema(name, tuple(params), precondition, tuple(add), tuple(delete), cost, pos=pos)
        )


def _define_body(tree: _Node, which: str) -> tuple[str, tuple[_Node, ...]]:
    items = _want_list(tree, f"(define ({which} ...) ...)")
    if not items or _head(tree) != "define":
        raise ParseError(f"top-level form must be (define ({which} ...) ...)", tree.pos)
    if len(items) < 2:
        raise ParseError(f"missing ({which} name)", tree.pos)
    head = items[1]
    sub = _want_list(head, f"({which} name)")
    if len(sub) != 2 or _head(head) != which:
        raise ParseError(f"expected ({which} name)", head.pos)
    return _sym(sub[1], f"{which} name"), items[2:]


def parse_domain(text: str | bytes) -> DomainAst:
    """Parse PDDL domain text into a :class:`DomainAst`."""
    tree = _read_tree(_tokenize(_decode(text)))
    name, sections = _define_body(tree, "domain")
    builder = _DomainBuilder()
    for node in sections:
        builder.section(node)
    return DomainAst(
        name=name,
        requirements=tuple(builder.requirements),
        types=builder.types,
        predicates=builder.predicates,
        functions=builder.functions,
        actions=tuple(builder.actions),
    )


def parse_problem(text: str | bytes, domain: DomainAst) -> ProblemAst:
    """Parse PDDL problem text against ``domain`` into a :class:`ProblemAst`."""
    tree = _read_tree(_tokenize(_decode(text)))
    name, sections = _define_body(tree, "problem")

    builder = _DomainBuilder()
    builder.types = dict(domain.types)
    builder.predicates = dict(domain.predicates)
    builder.functions = dict(domain.functions)

    domain_name: str | None = None
    objects: dict[str, str] = {}
    init: list[Atom] = []
    seen_init: set[Atom] = set()
    fluent_init: dict[Atom, Fraction] = {}
    goal: list[Atom] | None = None
    metric = False
    seen_sections: set[str] = set()

    for node in sections:
        items = _want_list(node, "problem section")
        if not items or items[0].is_list or items[0].tok is None or items[0].tok.kind != "kw":
            raise ParseError(
                "expected problem section",
                node.pos,
                expected=(":domain", ":objects", ":init", ":goal", ":metric"),
            )
        kw = items[0].tok.text
        if kw in seen_sections:
            raise ParseError(f"duplicate section {kw}", node.pos)
        seen_sections.add(kw)
        body = items[1:]
        if kw == ":domain":
            if len(body) != 1:
                raise ParseError("(:domain name) expected", node.pos)
            domain_name = _sym(body[0], "domain name")
            if domain_name != domain.name:
                raise DomainMismatch(
                    f"problem requires domain {domain_name!r}, parsing against {domain.name!r}",
                    node.pos,
                )
        elif kw == ":objects":
            for oname, otype, opos in _typed_list(body, "sym"):
                builder.known_type(otype, opos)
                if oname in objects and objects[oname] != otype:
                    raise ParseError(f"object {oname!r} declared twice", opos)
                objects[oname] = otype
        elif kw == ":init":
            for entry in body:
                if _head(entry) == "=":
                    sub = _want_list(entry, "fluent assignment")
                    if len(sub) != 3:
                        raise ParseError("(= (fluent ...) number) expected", entry.pos)
                    ref_items = _want_list(sub[1], "fluent reference")
                    if not ref_items:
                        raise ParseError("empty fluent reference", sub[1].pos)
                    fname = _sym(ref_items[0], "fluent name")
                    if fname not in builder.functions:
                        raise UnknownFluent(f"undeclared function {fname!r}", sub[1].pos)
                    args = tuple(_sym(a, "object name") for a in ref_items[1:])
                    if len(args) != len(builder.functions[fname]):
                        raise ArityError(f"function {fname!r} arity mismatch", sub[1].pos)
                    vnode = sub[2]
                    if vnode.is_list or vnode.tok is None or vnode.tok.kind != "num":
                        raise ParseError("fluent value must be a number", vnode.pos)
                    assert vnode.tok.value is not None
                    if vnode.tok.value < 0:
                        raise ParseError("cost fluent values must be nonnegative", vnode.pos)
                    ref = Atom(fname, args, pos=sub[1].pos)
                    if ref in fluent_init and fluent_init[ref] != vnode.tok.value:
                        raise ParseError(f"fluent {ref} assigned twice", entry.pos)
                    fluent_init[ref] = vnode.tok.value
                else:
                    atom = builder._atom(entry, set())
                    if not atom.is_ground:
                        raise ParseError("init atoms must be ground", entry.pos)
                    if atom not in seen_init:
                        seen_init.add(atom)
                        init.append(atom)
        elif kw == ":goal":
            if len(body) != 1:
                raise ParseError("(:goal gd) expected", node.pos)
            lits = builder._literals(body[0], set(), "goal")
            goal = []
            for lit in lits:
                if not lit.positive:
                    raise ParseError("goals must be positive literals", body[0].pos)
                if not lit.atom.is_ground:
                    raise ParseError("goal atoms must be ground", body[0].pos)
                goal.append(lit.atom)
        elif kw == ":metric":
            if (
                len(body) != 2
                or body[0].is_list
                or body[0].tok is None
                or body[0].tok.text != "minimize"
                or _head(body[1]) != "total-cost"
            ):
                raise ParseError("only (:metric minimize (total-cost)) is supported", node.pos)
            metric = True
        else:
            raise ParseError(
                f"unsupported problem section {kw}",
                node.pos,
                expected=(":domain", ":objects", ":init", ":goal", ":metric"),
            )

    if domain_name is None:
        raise ParseError("problem is missing (:domain ...)")
    if goal is None:
        raise ParseError("problem is missing (:goal ...)")
    return ProblemAst(
        name=name,
        domain_name=domain_name,
        objects=objects,
        init=tuple(init),
        fluent_init=fluent_init,
        goal=tuple(goal),
        metric_min_total_cost=metric,
    )
