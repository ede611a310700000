"""Directed comment network of a video.

The video description is the source node; every top-level comment points to
it and every reply points to its top-level comment, unless the reply opens
with a "+name" or "@name" mention, in which case it is redirected to the
mentioned user's latest earlier comment in the same thread.
"""

from dataclasses import dataclass

from .corpus import Video
from .errors import InternalError
from .sentiment import PolarityLexicon, endorsement, polarity

SOURCE_ID = "__source__"


@dataclass(frozen=True)
class NodeAttributes:
    author: str
    sentiment: float
    endorsement: int


@dataclass
class CommentGraph:
    """One node per comment plus the source; one outgoing edge per comment.

    `nodes` holds the comment nodes only (the source carries no attributes);
    `edges[c]` is the id of the node comment `c` replies to.
    """

    source_id: str
    nodes: dict[str, NodeAttributes]
    edges: dict[str, str]

    @property
    def node_count(self) -> int:
        return len(self.nodes) + 1


@dataclass(frozen=True)
class GraphStats:
    node_count: int
    max_in_degree: int
    mean_thread_depth: float
    hub_count: int


def _leading_mention(text: str) -> str | None:
    """The text after a leading '+'/'@' (whitespace-trimmed), else None."""
    stripped = text.lstrip()
    if len(stripped) >= 2 and stripped[0] in "+@" and not stripped[1].isspace():
        return stripped[1:]
    return None


def build_graph(video: Video, lexicon: PolarityLexicon) -> CommentGraph:
    source_id = SOURCE_ID
    comment_ids = {c.id for c in video.all_comments()}
    while source_id in comment_ids:
        source_id += "#"

    nodes: dict[str, NodeAttributes] = {}
    edges: dict[str, str] = {}
    for thread in video.threads:
        # thread members in chronological order; the top is always first
        members = [thread.top, *thread.replies]
        for c in members:
            nodes[c.id] = NodeAttributes(
                author=c.author,
                sentiment=polarity(c.text, lexicon),
                endorsement=endorsement(c),
            )
        edges[thread.top.id] = source_id
        for reply in thread.replies:
            target = thread.top.id
            span = _leading_mention(reply.text)
            if span is not None:
                author = _match_author(span, members)
                if author is not None:
                    latest = _latest_earlier_comment(author, reply, members)
                    if latest is not None:
                        target = latest.id
            edges[reply.id] = target
    return CommentGraph(source_id=source_id, nodes=nodes, edges=edges)


def _match_author(span: str, members) -> str | None:
    """Longest thread-author display name that prefixes the mention span."""
    span_lower = span.lower()
    best: str | None = None
    for c in members:
        name = c.author
        if name and span_lower.startswith(name.lower()):
            if best is None or len(name) > len(best):
                best = name
    return best


def _latest_earlier_comment(author: str, reply, members):
    """The author's latest comment strictly before `reply` in this thread."""
    author_lower = author.lower()
    latest = None
    for c in members:
        if c is reply:
            continue
        if c.author.lower() != author_lower:
            continue
        if c.published_at >= reply.published_at:
            continue
        if latest is None or c.published_at > latest.published_at:
            latest = c
    return latest


def _depths(graph: CommentGraph) -> dict[str, int]:
    """Outgoing-path length to the source for every comment node."""
    depths: dict[str, int] = {graph.source_id: 0}
    limit = graph.node_count
    for node in graph.nodes:
        chain = []
        current = node
        steps = 0
        while current not in depths:
            chain.append(current)
            current = graph.edges[current]
            steps += 1
            if steps > limit:
                raise InternalError(f"cycle detected while walking from node {node!r}")
        base = depths[current]
        for offset, nid in enumerate(reversed(chain), start=1):
            depths[nid] = base + offset
    del depths[graph.source_id]
    return depths


def graph_stats(graph: CommentGraph, hub_threshold: int = 10) -> GraphStats:
    """Summary statistics over the comment nodes (the source is excluded)."""
    in_degree: dict[str, int] = {nid: 0 for nid in graph.nodes}
    for target in graph.edges.values():
        if target in in_degree:
            in_degree[target] += 1

    depths = _depths(graph)
    # a thread is rooted at each node whose edge goes straight to the source
    thread_max: dict[str, int] = {}
    for node, depth in depths.items():
        root = node
        while graph.edges[root] != graph.source_id:
            root = graph.edges[root]
        thread_max[root] = max(thread_max.get(root, 0), depth)

    max_in = max(in_degree.values(), default=0)
    mean_depth = (sum(thread_max.values()) / len(thread_max)) if thread_max else 0.0
    hubs = sum(1 for d in in_degree.values() if d >= hub_threshold)
    return GraphStats(
        node_count=graph.node_count,
        max_in_degree=max_in,
        mean_thread_depth=mean_depth,
        hub_count=hubs,
    )


def dump_graph(graph: CommentGraph) -> str:
    """Edge list as text: header naming the source, then one line per node."""
    lines = [f"source\t{graph.source_id}"]
    for node, target in graph.edges.items():
        attrs = graph.nodes[node]
        lines.append(f"{node}\t{target}\t{attrs.sentiment:.6f}\t{attrs.endorsement}")
    return "\n".join(lines) + "\n"
