"""Categorial network: weighted undirected links between construction slot
categories and their observed filler categories."""

from __future__ import annotations

__all__ = ["CategorialNetwork"]


def _pair(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


class CategorialNetwork:
    """Mutated only between game interactions by its owning agent;
    read-only during a search."""

    def __init__(self):
        self.nodes: set[str] = set()
        self._links: dict[tuple[str, str], float] = {}

    def add_link(self, a: str, b: str, weight: float = 0.5) -> None:
        """Register both categories and link them.  Self-links are rejected
        silently; an existing link keeps the larger weight."""
        if a == b:
            return
        weight = min(max(weight, 0.0), 1.0)
        self.nodes.add(a)
        self.nodes.add(b)
        key = _pair(a, b)
        self._links[key] = max(self._links.get(key, 0.0), weight)

    def has_link(self, a: str, b: str) -> bool:
        return _pair(a, b) in self._links

    def weight(self, a: str, b: str) -> float:
        return self._links.get(_pair(a, b), 0.0)

    def set_weight(self, a: str, b: str, weight: float) -> None:
        key = _pair(a, b)
        if key in self._links:
            self._links[key] = min(max(weight, 0.0), 1.0)

    def adjust_weight(self, a: str, b: str, delta: float) -> None:
        key = _pair(a, b)
        if key in self._links:
            self._links[key] = min(max(self._links[key] + delta, 0.0), 1.0)

    def compatible(self, filler: str, slot: str) -> bool:
        """Direct link with positive weight; no transitive closure."""
        return self.weight(filler, slot) > 0.0

    def neighbors(self, category: str) -> set[str]:
        out = set()
        for (a, b), w in self._links.items():
            if w <= 0.0:
                continue
            if a == category:
                out.add(b)
            elif b == category:
                out.add(a)
        return out

    def slot_similarity(self, a: str, b: str) -> float:
        """Jaccard overlap of linked-neighbor sets; 0.0 when both empty."""
        na, nb = self.neighbors(a), self.neighbors(b)
        if not na and not nb:
            return 0.0
        return len(na & nb) / len(na | nb)

    def links(self) -> list[tuple[str, str, float]]:
        return [(a, b, w) for (a, b), w in sorted(self._links.items())]

    def __len__(self):
        return len(self._links)

    def copy(self) -> "CategorialNetwork":
        out = CategorialNetwork()
        out.nodes = set(self.nodes)
        out._links = dict(self._links)
        return out

    # -- serialization --------------------------------------------------

    def to_json(self) -> dict:
        return {
            "links": [
                {"a": a, "b": b, "weight": w} for a, b, w in self.links()
            ]
        }

    @staticmethod
    def from_json(data: dict) -> "CategorialNetwork":
        net = CategorialNetwork()
        for link in data.get("links", []):
            a, b = link["a"], link["b"]
            if a == b:
                continue
            net.nodes.add(a)
            net.nodes.add(b)
            net._links[_pair(a, b)] = min(max(float(link["weight"]), 0.0), 1.0)
        return net

    def to_dot(self) -> str:
        lines = ["graph categorial {"]
        for node in sorted(self.nodes):
            lines.append(f'  "{node}";')
        for a, b, w in self.links():
            lines.append(f'  "{a}" -- "{b}" [label="{w:.2f}"];')
        lines.append("}")
        return "\n".join(lines)
