"""Rule-based enumeration of logic corruptions over a SemanticParse.

Covers three corruption families: logic shifts (aggregator/operator/
conjunction swaps, negation toggles), phrase and number changes, and entity
edits (insert/delete/swap).  Every emitted perturbation re-parses and
differs structurally from its seed; candidates that would leave the grammar
are silently dropped during enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import ParseError
from .lexicon import Lexicon, canon
from .parse_core import (
    AstNode,
    COMPARISONS,
    Dialect,
    NodeKind,
    Path,
    SemanticParse,
    apply,
    identifier,
    node_at,
    parse,
    replace_at,
    serialize,
    string,
    walk,
)


class PerturbationKind(Enum):
    AGGREGATOR_SWAP = "aggregator_swap"
    OPERATOR_SWAP = "operator_swap"
    NEGATION_TOGGLE = "negation_toggle"
    CONJUNCTION_SWAP = "conjunction_swap"
    NUMBER_CHANGE = "number_change"
    PHRASE_CHANGE = "phrase_change"
    ENTITY_INSERT = "entity_insert"
    ENTITY_DELETE = "entity_delete"
    ENTITY_SWAP = "entity_swap"


_KIND_ORDER = {kind: i for i, kind in enumerate(PerturbationKind)}
_AGGREGATOR_LABELS = frozenset({"count", "max", "min", "avg", "sum"})
_CONJUNCTION_LABELS = frozenset({"and", "or"})
_LOGIC_COMPARISON_LABELS = frozenset(
    {"eq", "not_eq", "str_eq", "not_str_eq", "round_eq", "greater", "less", "diff"}
)


@dataclass(frozen=True)
class PerturbConfig:
    max_per_seed: int = 8
    entity_pool: tuple[str, ...] = ()
    phrase_pool: tuple[str, ...] = ()


@dataclass(frozen=True)
class Perturbation:
    seed_id: str
    kind: PerturbationKind
    node_path: Path
    before: str
    after: str
    result: SemanticParse
    seed_parse: SemanticParse = field(repr=False, compare=False, default=None)


def _swap_kind(label: str) -> PerturbationKind:
    if label in _AGGREGATOR_LABELS:
        return PerturbationKind.AGGREGATOR_SWAP
    if label in _CONJUNCTION_LABELS:
        return PerturbationKind.CONJUNCTION_SWAP
    return PerturbationKind.OPERATOR_SWAP


def _number_variants(label: str) -> list[str]:
    # Fixed deterministic offsets keep augmentation reproducible.
    if "." not in label:
        v = int(label)
        candidates = [v + 1, v - 1, v * 10]
        return [str(c) for c in candidates if str(c) != label]
    v = float(label)
    candidates = [v + 1, v - 1, round(v * 10, 10)]
    return [repr(float(c)) for c in candidates if repr(float(c)) != label]


def _parent_label(root: AstNode, path: Path) -> str | None:
    if not path:
        return None
    return node_at(root, path[:-1]).label


def _relabel(root: AstNode, path: Path, new_label: str) -> AstNode:
    node = node_at(root, path)
    return replace_at(root, path, AstNode(node.kind, new_label, node.children))


def _without_child(root: AstNode, parent_path: Path, child_index: int) -> AstNode:
    parent = node_at(root, parent_path)
    children = parent.children[:child_index] + parent.children[child_index + 1 :]
    return replace_at(root, parent_path, AstNode(parent.kind, parent.label, children))


def _delete_sql_predicate(root: AstNode, pred_path: Path) -> tuple[Path, AstNode] | None:
    """Delete a WHERE predicate; drop the clause wholesale if it empties."""
    path = pred_path
    while path and node_at(root, path[:-1]).label == "not":
        path = path[:-1]
    if not path:
        return None
    parent_path = path[:-1]
    parent = node_at(root, parent_path)
    if parent.label == "where":
        # Deleting the only predicate: remove the clause from the query.
        return parent_path[:-1], _without_child(root, parent_path[:-1], parent_path[-1])
    if parent.label in ("and", "or"):
        sibling = parent.children[1 - path[-1]]
        return parent_path, replace_at(root, parent_path, sibling)
    return None


def _delete_logic_entity(root: AstNode, literal_path: Path) -> tuple[Path, AstNode] | None:
    if not literal_path:
        return None
    parent_path = literal_path[:-1]
    parent = node_at(root, parent_path)
    if parent.label.startswith("filter_"):
        return parent_path, replace_at(root, parent_path, parent.children[0])
    if parent.label in _LOGIC_COMPARISON_LABELS:
        if not parent_path:
            return None
        gp_path = parent_path[:-1]
        grandparent = node_at(root, gp_path)
        if grandparent.label in ("and", "or"):
            if len(grandparent.children) > 2:
                return gp_path, _without_child(root, gp_path, parent_path[-1])
            sibling = grandparent.children[1 - parent_path[-1]]
            return gp_path, replace_at(root, gp_path, sibling)
    return None


def _first_column(root: AstNode) -> str | None:
    for _, node in walk(root):
        if node.kind is NodeKind.IDENTIFIER:
            return node.label
    return None


def _sql_insert_sites(root: AstNode) -> tuple[Path, str] | None:
    """The WHERE expression path and a column to predicate on, if any."""
    for i, clause in enumerate(root.children):
        if clause.label == "where":
            for path, node in walk(clause.children[0], (i, 0)):
                if (
                    node.kind is NodeKind.APPLY
                    and node.label in COMPARISONS
                    and node.children[0].kind is NodeKind.IDENTIFIER
                ):
                    return (i, 0), node.children[0].label
    return None


def enumerate_perturbations(
    seed: SemanticParse,
    lexicon: Lexicon,
    config: PerturbConfig | None = None,
    seed_id: str = "seed",
) -> list[Perturbation]:
    """Deterministic, duplicate-free perturbation list for one parse.

    Candidates are ordered by (kind, node path), re-validated against the
    parser, deduplicated on their serialized form and truncated to
    config.max_per_seed.
    """
    config = config or PerturbConfig()
    root = seed.root
    raw: list[tuple[PerturbationKind, Path, str, str, AstNode]] = []

    literal_paths: list[tuple[Path, str]] = []
    for path, node in walk(root):
        label = node.label
        if node.kind is NodeKind.APPLY:
            parent = _parent_label(root, path)
            for partner in lexicon.swap_partners(label):
                raw.append(
                    (_swap_kind(label), path, label, canon(partner),
                     _relabel(root, path, canon(partner)))
                )
            negated = lexicon.negation_partner(label)
            if negated is not None and parent != "join":
                raw.append(
                    (PerturbationKind.NEGATION_TOGGLE, path, label, canon(negated),
                     _relabel(root, path, canon(negated)))
                )
            if seed.dialect is Dialect.SQL:
                if label in COMPARISONS and parent in ("where", "and", "or"):
                    raw.append(
                        (PerturbationKind.NEGATION_TOGGLE, path, label, "not",
                         replace_at(root, path, apply("not", node)))
                    )
                elif label == "not":
                    raw.append(
                        (PerturbationKind.NEGATION_TOGGLE, path, "not",
                         node.children[0].label,
                         replace_at(root, path, node.children[0]))
                    )
        elif node.kind is NodeKind.NUMBER:
            for variant in _number_variants(label):
                raw.append(
                    (PerturbationKind.NUMBER_CHANGE, path, label, variant,
                     _relabel(root, path, variant))
                )
        elif node.kind is NodeKind.STRING:
            literal_paths.append((path, label))
            for phrase in config.phrase_pool:
                phrase = phrase.lower()
                if phrase != label:
                    raw.append(
                        (PerturbationKind.PHRASE_CHANGE, path, label, phrase,
                         _relabel(root, path, phrase))
                    )

    for entity in config.entity_pool:
        entity = entity.lower()
        if seed.dialect is Dialect.SQL:
            site = _sql_insert_sites(root)
            if site is None:
                continue
            where_path, column = site
            old_expr = node_at(root, where_path)
            new_expr = apply("and", old_expr, apply("=", identifier(column), string(entity)))
            raw.append(
                (PerturbationKind.ENTITY_INSERT, where_path, "", entity,
                 replace_at(root, where_path, new_expr))
            )
        else:
            column = _first_column(root)
            if column is None:
                continue
            clause = apply("str_eq", apply("hop", AstNode(NodeKind.KEYWORD, "all_rows"),
                                           identifier(column)), string(entity))
            raw.append(
                (PerturbationKind.ENTITY_INSERT, (), "", entity,
                 apply("and", root, clause))
            )

    for path, label in literal_paths:
        deleted = (
            _delete_sql_predicate(root, path[:-1])
            if seed.dialect is Dialect.SQL
            else _delete_logic_entity(root, path)
        )
        if deleted is not None:
            edit_path, new_root = deleted
            raw.append((PerturbationKind.ENTITY_DELETE, edit_path, label, "", new_root))

    for i, (path_a, label_a) in enumerate(literal_paths):
        for path_b, label_b in literal_paths[i + 1 :]:
            if label_a == label_b:
                continue
            swapped = _relabel(_relabel(root, path_a, label_b), path_b, label_a)
            raw.append(
                (PerturbationKind.ENTITY_SWAP, path_a, label_a, label_b, swapped)
            )

    ordered = sorted(
        enumerate(raw), key=lambda item: (_KIND_ORDER[item[1][0]], item[1][1], item[0])
    )
    out: list[Perturbation] = []
    seen: set[str] = set()
    for _, (kind, path, before, after, new_root) in ordered:
        if new_root == root:
            continue
        serialized = serialize(SemanticParse(seed.dialect, new_root, ""))
        if serialized in seen:
            continue
        try:
            reparsed = parse(serialized, seed.dialect)
        except ParseError:
            continue
        if reparsed.root != new_root or reparsed.root == root:
            continue
        seen.add(serialized)
        out.append(
            Perturbation(
                seed_id=seed_id,
                kind=kind,
                node_path=path,
                before=before,
                after=after,
                result=SemanticParse(seed.dialect, reparsed.root, serialized),
                seed_parse=seed,
            )
        )
        if len(out) >= config.max_per_seed:
            break
    return out


def validate_perturbation(p: Perturbation) -> bool:
    """True iff the result re-parses and differs structurally from the seed."""
    try:
        reparsed = parse(p.result.source_text, p.result.dialect)
    except ParseError:
        return False
    if reparsed.root != p.result.root:
        return False
    return p.seed_parse is None or reparsed.root != p.seed_parse.root
