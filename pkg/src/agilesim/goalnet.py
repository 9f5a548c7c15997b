"""Hierarchical goal model built from user stories.

The builder lifts a story corpus into a four-level goal graph: a single
root, user-supplied high-level goals, the goals of top-level stories,
and the goals of their sub-stories. Hierarchy is containment (composite
states contain children); transitions order sibling goals. By default,
middle-level siblings are chained with sequence transitions, while leaf
sibling groups fan out through a concurrency transition and join back
through a synchronization; explicit transitions, when supplied, replace
the inferred ones entirely.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

SEQUENCE = "sequence"
CONCURRENCY = "concurrency"
SYNCHRONIZATION = "synchronization"

ATOMIC = "atomic"
COMPOSITE = "composite"


class StoryParseError(ValueError):
    """Story text does not match the template; carries the position."""

    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"{message} (at position {position})")


class GoalNetError(ValueError):
    """Structural problem while building or importing a goal net."""


@dataclass(frozen=True)
class UserStory:
    """A story in the canonical "As a <role>, I want to <goal>
    [so that <benefit>]" form, with optional hierarchy and task data."""

    id: str
    role: str
    goal: str
    benefit: str | None = None
    parent: str | None = None
    tasks: tuple[str, ...] = ()
    environment: tuple[tuple[str, str], ...] = ()
    cut_across: bool = False


@dataclass(frozen=True)
class GoalNode:
    id: str
    label: str
    kind: str  # ATOMIC | COMPOSITE
    level: int
    cut_across: bool = False


@dataclass(frozen=True)
class Transition:
    id: str
    kind: str  # SEQUENCE | CONCURRENCY | SYNCHRONIZATION
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    tasks: tuple[str, ...] = ()


@dataclass(frozen=True)
class GetCard:
    """Goal / environment-variables / tasks index card for one goal."""

    goal_id: str
    environment_variables: tuple[tuple[str, str], ...]
    tasks: tuple[str, ...]


@dataclass(frozen=True)
class GoalNet:
    root_id: str
    nodes: dict[str, GoalNode]
    children: dict[str, tuple[str, ...]]
    transitions: tuple[Transition, ...]
    cards: tuple[GetCard, ...] = ()

    def levels(self) -> int:
        """Number of distinct levels (a four-level net reports 4)."""
        return len({node.level for node in self.nodes.values()})


_STORY_TEMPLATE = re.compile(
    r"^as\s+an?\s+(?P<role>[^,]+?)\s*,\s*i\s+want\s+to\s+(?P<goal>.+?)"
    r"(?:\s+so\s+that\s+(?P<benefit>.+?))?\s*\.?$",
    re.IGNORECASE,
)


def parse_story(
    text: str,
    story_id: str = "1",
    parent: str | None = None,
    tasks: Sequence[str] = (),
    environment: Sequence[tuple[str, str]] = (),
    cut_across: bool = False,
) -> UserStory:
    """Parse one story sentence into its role / goal / benefit parts.

    Template keywords are matched case-insensitively and surrounding
    whitespace is normalized. A text that does not match reports where
    matching failed.
    """
    normalized = " ".join(text.split())
    match = _STORY_TEMPLATE.match(normalized)
    if match is None:
        if not re.match(r"as\s+an?\s+", normalized, re.IGNORECASE):
            raise StoryParseError("expected role clause 'As a <role>,'", 0)
        comma = normalized.find(",")
        if comma < 0:
            raise StoryParseError("expected ',' after the role", len(normalized))
        rest = normalized[comma + 1 :]
        if not re.match(r"\s*i\s+want\s+to\s+", rest, re.IGNORECASE):
            raise StoryParseError(
                "expected 'I want to <goal>' after the role", comma + 1
            )
        raise StoryParseError("text does not match the story template", 0)
    role = match.group("role").strip()
    goal = match.group("goal").strip()
    benefit = match.group("benefit")
    if not role:
        raise StoryParseError("role must be non-empty", 0)
    if not goal:
        raise StoryParseError("goal must be non-empty", 0)
    return UserStory(
        id=story_id,
        role=role,
        goal=goal,
        benefit=benefit.strip() if benefit else None,
        parent=parent,
        tasks=tuple(tasks),
        environment=tuple((str(n), str(v)) for n, v in environment),
        cut_across=cut_across,
    )


def render_story(story: UserStory) -> str:
    """Render the canonical template form (inverse of parse_story)."""
    article = "an" if story.role[:1].lower() in "aeiou" else "a"
    text = f"As {article} {story.role}, I want to {story.goal}"
    if story.benefit:
        text += f" so that {story.benefit}"
    return text


def _story_level(story_id: str) -> int:
    # Top stories sit one level under the high-level goals.
    return story_id.count(".") + 2


def _story_order(story_id: str) -> tuple:
    # Dotted ids sort numerically segment by segment ("2" before "10"),
    # falling back to text for non-numeric segments.
    key = []
    for part in story_id.split("."):
        key.append((0, int(part), "") if part.isdigit() else (1, 0, part))
    return tuple(key)


def _check_parents(stories: Sequence[UserStory]) -> None:
    by_id = {story.id: story for story in stories}
    for story in stories:
        if story.parent is None:
            continue
        if story.parent not in by_id:
            raise GoalNetError(
                f"story {story.id!r} references unknown parent {story.parent!r}"
            )
        if not story.id.startswith(story.parent + "."):
            raise GoalNetError(
                f"story {story.id!r}: parent {story.parent!r} is not a proper "
                "prefix of the id"
            )
        seen = {story.id}
        cursor = story.parent
        while cursor is not None:
            if cursor in seen:
                raise GoalNetError(f"cyclic parent references at story {cursor!r}")
            seen.add(cursor)
            cursor = by_id[cursor].parent


def build_goal_net(
    stories: Sequence[UserStory],
    high_level_goals: Sequence[str],
    assignment: Mapping[str, str],
    root_label: str = "Top goal",
    explicit_transitions: Sequence[Transition] | None = None,
) -> GoalNet:
    """Assemble the goal net from stories and their goal clustering.

    ``assignment`` maps each top-level story id to one of the
    high-level goal labels (sub-stories follow their parents). When
    ``explicit_transitions`` is given it replaces the inferred sibling
    transitions entirely.
    """
    _check_parents(stories)
    label_set = set(high_level_goals)
    for story_id, label in assignment.items():
        if label not in label_set:
            raise GoalNetError(
                f"assignment for story {story_id!r} uses unknown goal {label!r}"
            )

    nodes: dict[str, GoalNode] = {}
    children: dict[str, list[str]] = {"root": []}
    nodes["root"] = GoalNode(id="root", label=root_label, kind=ATOMIC, level=0)

    goal_node_ids: dict[str, str] = {}
    for index, label in enumerate(high_level_goals, start=1):
        node_id = f"hl-{index}"
        goal_node_ids[label] = node_id
        nodes[node_id] = GoalNode(id=node_id, label=label, kind=ATOMIC, level=1)
        children["root"].append(node_id)
        children[node_id] = []

    story_index = {story.id: story for story in stories}
    for story in sorted(stories, key=lambda s: _story_order(s.id)):
        node_id = f"story-{story.id}"
        nodes[node_id] = GoalNode(
            id=node_id,
            label=story.goal,
            kind=ATOMIC,
            level=_story_level(story.id),
            cut_across=story.cut_across,
        )
        children[node_id] = []
        if story.parent is not None:
            children[f"story-{story.parent}"].append(node_id)
            continue
        if story.id not in assignment:
            raise GoalNetError(f"unassigned story: {story.id!r}")
        children[goal_node_ids[assignment[story.id]]].append(node_id)

    for node_id, kids in children.items():
        if kids:
            nodes[node_id] = replace(nodes[node_id], kind=COMPOSITE)

    if explicit_transitions is not None:
        transitions = tuple(explicit_transitions)
    else:
        transitions = _infer_transitions(nodes, children, story_index)

    cards = tuple(
        GetCard(
            goal_id=f"story-{story.id}",
            environment_variables=story.environment,
            tasks=story.tasks,
        )
        for story in sorted(stories, key=lambda s: _story_order(s.id))
        if story.tasks
    )
    return GoalNet(
        root_id="root",
        nodes=nodes,
        children={nid: tuple(kids) for nid, kids in children.items()},
        transitions=transitions,
        cards=cards,
    )


def _infer_transitions(
    nodes: Mapping[str, GoalNode],
    children: Mapping[str, Sequence[str]],
    story_index: Mapping[str, UserStory],
) -> tuple[Transition, ...]:
    transitions: list[Transition] = []
    counter = 0

    def next_id() -> str:
        nonlocal counter
        counter += 1
        return f"tr-{counter:03d}"

    def story_for(node_id: str) -> UserStory | None:
        if node_id.startswith("story-"):
            return story_index.get(node_id[len("story-") :])
        return None

    # Breadth-first over composites keeps transition ids deterministic.
    queue = ["root"]
    while queue:
        parent_id = queue.pop(0)
        kids = [k for k in children.get(parent_id, ()) if not nodes[k].cut_across]
        queue.extend(children.get(parent_id, ()))
        if not kids:
            continue
        parent_is_story = parent_id.startswith("story-")
        if parent_is_story:
            # Leaf group: concurrent sub-goals joined back to the parent.
            if len(kids) == 1:
                child_story = story_for(kids[0])
                transitions.append(
                    Transition(
                        id=next_id(),
                        kind=SEQUENCE,
                        inputs=(kids[0],),
                        outputs=(parent_id,),
                        tasks=child_story.tasks if child_story else (),
                    )
                )
            else:
                transitions.append(
                    Transition(
                        id=next_id(),
                        kind=CONCURRENCY,
                        inputs=(parent_id,),
                        outputs=tuple(kids),
                    )
                )
                joined_tasks: list[str] = []
                for kid in kids:
                    child_story = story_for(kid)
                    if child_story:
                        joined_tasks.extend(child_story.tasks)
                transitions.append(
                    Transition(
                        id=next_id(),
                        kind=SYNCHRONIZATION,
                        inputs=tuple(kids),
                        outputs=(parent_id,),
                        tasks=tuple(joined_tasks),
                    )
                )
        else:
            # Root or high-level goal: chain the siblings in order.
            for left, right in zip(kids, kids[1:]):
                transitions.append(
                    Transition(
                        id=next_id(),
                        kind=SEQUENCE,
                        inputs=(left,),
                        outputs=(right,),
                    )
                )
            # A single childless story under a goal still needs its
            # implementing step back to the goal.
            if parent_id != "root" and len(kids) == 1:
                only = kids[0]
                if not children.get(only):
                    only_story = story_for(only)
                    transitions.append(
                        Transition(
                            id=next_id(),
                            kind=SEQUENCE,
                            inputs=(only,),
                            outputs=(parent_id,),
                            tasks=only_story.tasks if only_story else (),
                        )
                    )
    return tuple(transitions)


def validate_net(net: GoalNet) -> list[str]:
    """Check structural rules; an empty list means the net is valid."""
    violations: list[str] = []
    if net.root_id not in net.nodes:
        return [f"root node {net.root_id!r} missing"]
    if net.nodes[net.root_id].level != 0:
        violations.append(f"node {net.root_id}: root must be level 0")

    for parent_id, kids in net.children.items():
        if parent_id not in net.nodes:
            violations.append(f"hierarchy entry {parent_id}: unknown node")
            continue
        parent = net.nodes[parent_id]
        for kid_id in kids:
            if kid_id not in net.nodes:
                violations.append(
                    f"node {parent_id}: unknown child {kid_id!r}"
                )
                continue
            kid = net.nodes[kid_id]
            if kid.cut_across:
                if kid.level <= parent.level:
                    violations.append(
                        f"node {kid_id}: cut-across level {kid.level} must be "
                        f"below ancestor level {parent.level}"
                    )
            elif kid.level != parent.level + 1:
                violations.append(
                    f"node {kid_id}: level {kid.level} skips from parent "
                    f"level {parent.level}"
                )

    for node in net.nodes.values():
        kids = net.children.get(node.id, ())
        if node.kind == COMPOSITE and not kids:
            violations.append(f"node {node.id}: composite node without children")
        if node.kind == ATOMIC and kids:
            violations.append(f"node {node.id}: atomic node with children")
        if node.kind not in (ATOMIC, COMPOSITE):
            violations.append(f"node {node.id}: unknown kind {node.kind!r}")

    for transition in net.transitions:
        for endpoint in (*transition.inputs, *transition.outputs):
            if endpoint not in net.nodes:
                violations.append(
                    f"transition {transition.id}: unknown node {endpoint!r}"
                )
        if transition.kind == SEQUENCE:
            if len(transition.inputs) != 1 or len(transition.outputs) != 1:
                violations.append(
                    f"transition {transition.id}: sequence must have exactly "
                    "1 input and 1 output"
                )
        elif transition.kind == SYNCHRONIZATION:
            if len(transition.inputs) < 2:
                violations.append(
                    f"transition {transition.id}: synchronization needs >= 2 inputs"
                )
            if not transition.outputs:
                violations.append(
                    f"transition {transition.id}: synchronization needs an output"
                )
        elif transition.kind == CONCURRENCY:
            if len(transition.outputs) < 2:
                violations.append(
                    f"transition {transition.id}: concurrency needs >= 2 outputs"
                )
            if not transition.inputs:
                violations.append(
                    f"transition {transition.id}: concurrency needs an input"
                )
        else:
            violations.append(
                f"transition {transition.id}: unknown kind {transition.kind!r}"
            )

    reachable = {net.root_id}
    frontier = [net.root_id]
    while frontier:
        current = frontier.pop()
        for kid in net.children.get(current, ()):
            if kid in net.nodes and kid not in reachable:
                reachable.add(kid)
                frontier.append(kid)
        for transition in net.transitions:
            if current in transition.inputs:
                for out in transition.outputs:
                    if out in net.nodes and out not in reachable:
                        reachable.add(out)
                        frontier.append(out)
    for node_id in net.nodes:
        if node_id not in reachable:
            violations.append(f"node {node_id}: unreachable from root")

    for card in net.cards:
        if card.goal_id not in net.nodes:
            violations.append(f"card for {card.goal_id!r}: goal not in the net")
        if not card.tasks:
            violations.append(f"card for {card.goal_id!r}: tasks must be non-empty")
    return violations


# --- documents and graph export ---------------------------------------------

STRUCTURED_DATA = "structured-data"
GRAPH_DESCRIPTION = "graph-description"


def export(net: GoalNet, format: str):
    """Render the net: ``structured-data`` gives the round-trippable
    document (see :func:`from_document`); ``graph-description`` gives
    DOT text."""
    if format == STRUCTURED_DATA:
        return to_document(net)
    if format == GRAPH_DESCRIPTION:
        return export_dot(net)
    raise GoalNetError(
        f"unknown export format {format!r} "
        f"(expected {STRUCTURED_DATA!r} or {GRAPH_DESCRIPTION!r})"
    )


def to_document(net: GoalNet) -> dict:
    return {
        "root": net.root_id,
        "nodes": [
            {
                "id": node.id,
                "label": node.label,
                "kind": node.kind,
                "level": node.level,
                "cut_across": node.cut_across,
            }
            for node in net.nodes.values()
        ],
        "hierarchy": {parent: list(kids) for parent, kids in net.children.items()},
        "transitions": [
            {
                "id": t.id,
                "kind": t.kind,
                "inputs": list(t.inputs),
                "outputs": list(t.outputs),
                "tasks": list(t.tasks),
            }
            for t in net.transitions
        ],
        "cards": [
            {
                "goal_id": card.goal_id,
                "environment_variables": [list(pair) for pair in card.environment_variables],
                "tasks": list(card.tasks),
            }
            for card in net.cards
        ],
    }


def from_document(doc: dict) -> GoalNet:
    for key in ("root", "nodes", "hierarchy", "transitions"):
        if key not in doc:
            raise GoalNetError(f"net document missing key {key!r}")
    nodes: dict[str, GoalNode] = {}
    for entry in doc["nodes"]:
        node = GoalNode(
            id=str(entry["id"]),
            label=str(entry["label"]),
            kind=str(entry["kind"]),
            level=int(entry["level"]),
            cut_across=bool(entry.get("cut_across", False)),
        )
        nodes[node.id] = node
    children: dict[str, tuple[str, ...]] = {}
    for parent, kids in doc["hierarchy"].items():
        if parent not in nodes:
            raise GoalNetError(f"hierarchy references unknown node {parent!r}")
        for kid in kids:
            if kid not in nodes:
                raise GoalNetError(f"hierarchy references unknown node {kid!r}")
        children[parent] = tuple(str(k) for k in kids)
    transitions = []
    for entry in doc["transitions"]:
        transition = Transition(
            id=str(entry["id"]),
            kind=str(entry["kind"]),
            inputs=tuple(str(i) for i in entry["inputs"]),
            outputs=tuple(str(o) for o in entry["outputs"]),
            tasks=tuple(str(t) for t in entry.get("tasks", ())),
        )
        for endpoint in (*transition.inputs, *transition.outputs):
            if endpoint not in nodes:
                raise GoalNetError(
                    f"transition {transition.id} references unknown node {endpoint!r}"
                )
        transitions.append(transition)
    cards = tuple(
        GetCard(
            goal_id=str(entry["goal_id"]),
            environment_variables=tuple(
                (str(n), str(v)) for n, v in entry.get("environment_variables", ())
            ),
            tasks=tuple(str(t) for t in entry.get("tasks", ())),
        )
        for entry in doc.get("cards", ())
    )
    for card in cards:
        if card.goal_id not in nodes:
            raise GoalNetError(f"card references unknown node {card.goal_id!r}")
    root_id = str(doc["root"])
    if root_id not in nodes:
        raise GoalNetError(f"root {root_id!r} not among the nodes")
    return GoalNet(
        root_id=root_id,
        nodes=nodes,
        children=children,
        transitions=tuple(transitions),
        cards=cards,
    )


def save_net(net: GoalNet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(to_document(net), handle, indent=2)
        handle.write("\n")


def load_net(path: str | Path) -> GoalNet:
    with open(path, encoding="utf-8") as handle:
        return from_document(json.load(handle))


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


_TRANSITION_STYLE = {
    SEQUENCE: "shape=rect, width=0.15, height=0.15, style=filled, fillcolor=gray80",
    CONCURRENCY: "shape=rect, width=0.15, height=0.15, style=filled, fillcolor=lightblue",
    SYNCHRONIZATION: "shape=rect, width=0.15, height=0.15, style=filled, fillcolor=lightsalmon",
}


def export_dot(net: GoalNet) -> str:
    """Render the net as a DOT digraph.

    Composite goals draw as boxes, atomic goals as ellipses, cut-across
    goals dashed; transitions are small squares colored by kind, linked
    from their inputs and to their outputs.
    """
    lines = ["digraph goalnet {", "  rankdir=TB;"]
    for node in net.nodes.values():
        shape = "box" if node.kind == COMPOSITE else "ellipse"
        style = ', style="dashed"' if node.cut_across else ""
        lines.append(
            f'  "{_dot_escape(node.id)}" [label="{_dot_escape(node.label)}", '
            f"shape={shape}{style}];"
        )
    for parent, kids in net.children.items():
        for kid in kids:
            lines.append(
                f'  "{_dot_escape(parent)}" -> "{_dot_escape(kid)}" '
                "[style=dotted, arrowhead=empty];"
            )
    for transition in net.transitions:
        style = _TRANSITION_STYLE.get(transition.kind, _TRANSITION_STYLE[SEQUENCE])
        lines.append(
            f'  "{_dot_escape(transition.id)}" '
            f'[label="{_dot_escape(transition.kind)}", {style}];'
        )
        for origin in transition.inputs:
            lines.append(
                f'  "{_dot_escape(origin)}" -> "{_dot_escape(transition.id)}";'
            )
        for target in transition.outputs:
            lines.append(
                f'  "{_dot_escape(transition.id)}" -> "{_dot_escape(target)}";'
            )
    lines.append("}")
    return "\n".join(lines) + "\n"


# --- story corpus files ------------------------------------------------------


def _story_from_entry(entry: dict) -> UserStory:
    story_id = str(entry["id"])
    parent = entry.get("parent")
    if parent is None and "." in story_id:
        parent = story_id.rsplit(".", 1)[0]
    return parse_story(
        str(entry["text"]),
        story_id=story_id,
        parent=str(parent) if parent is not None else None,
        tasks=tuple(str(t) for t in entry.get("tasks", ())),
        environment=tuple(
            (str(n), str(v)) for n, v in entry.get("environment", ())
        ),
        cut_across=bool(entry.get("cut_across", False)),
    )


def load_stories(path: str | Path) -> list[UserStory]:
    """Load a story corpus.

    JSON documents carry {"stories": [{id, text, tasks?, parent?,
    environment?, cut_across?}]}. Plain-text files carry one story per
    line, optionally prefixed with a dotted id and a colon
    ("1.2: As a ..."); unprefixed lines are numbered consecutively.
    """
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(text)
        stories = [_story_from_entry(entry) for entry in doc.get("stories", ())]
    else:
        stories = []
        used: set[str] = set()
        auto_id = 0
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            match = re.match(r"^(?P<id>\d+(?:\.\d+)*)\s*:\s*(?P<text>.+)$", line)
            if match:
                story_id = match.group("id")
                body = match.group("text")
            else:
                auto_id += 1
                while str(auto_id) in used:
                    auto_id += 1
                story_id = str(auto_id)
                body = line
            used.add(story_id)
            parent = story_id.rsplit(".", 1)[0] if "." in story_id else None
            stories.append(parse_story(body, story_id=story_id, parent=parent))
    _check_parents(stories)
    return stories


def load_goals(path: str | Path) -> tuple[list[str], dict[str, str], str]:
    """Load the goal clustering document: high-level goal labels, the
    story-to-goal assignment, and the root label."""
    with open(path, encoding="utf-8") as handle:
        doc = json.load(handle)
    if "goals" not in doc or "assignment" not in doc:
        raise GoalNetError("goals document needs 'goals' and 'assignment' keys")
    goals = [str(g) for g in doc["goals"]]
    assignment = {str(k): str(v) for k, v in doc["assignment"].items()}
    return goals, assignment, str(doc.get("root", "Top goal"))
