"""Binary trie over IP prefixes with longest-prefix-match lookups.

IPv4 and IPv6 prefixes live under separate roots. Lookups walk at most one
node per address bit, so a query costs O(32) or O(128) regardless of table
size.
"""

from __future__ import annotations

import ipaddress
from typing import Any, Generic, Iterator, TypeVar

V = TypeVar("V")

IPNetwork = ipaddress.IPv4Network | ipaddress.IPv6Network
IPAddress = ipaddress.IPv4Address | ipaddress.IPv6Address

_MISSING = object()


class _Node:
    __slots__ = ("children", "value")

    def __init__(self) -> None:
        self.children: list[_Node | None] = [None, None]
        self.value: Any = _MISSING


def as_network(prefix: str | IPNetwork) -> IPNetwork:
    if isinstance(prefix, (ipaddress.IPv4Network, ipaddress.IPv6Network)):
        return prefix
    return ipaddress.ip_network(prefix, strict=True)


def as_address(address: str | int | IPAddress) -> IPAddress:
    if isinstance(address, (ipaddress.IPv4Address, ipaddress.IPv6Address)):
        return address
    return ipaddress.ip_address(address)


def _bit(value: int, width: int, depth: int) -> int:
    return (value >> (width - 1 - depth)) & 1


class PrefixTrie(Generic[V]):
    """Mapping from IP prefix to value with longest-prefix-match queries."""

    def __init__(self) -> None:
        self._roots = {4: _Node(), 6: _Node()}
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def _descend(self, net: IPNetwork, create: bool) -> _Node | None:
        node = self._roots[net.version]
        width = net.max_prefixlen
        value = int(net.network_address)
        for depth in range(net.prefixlen):
            b = _bit(value, width, depth)
            child = node.children[b]
            if child is None:
                if not create:
                    return None
                child = node.children[b] = _Node()
            node = child
        return node

    def insert(self, prefix: str | IPNetwork, value: V) -> None:
        node = self._descend(as_network(prefix), create=True)
        if node.value is _MISSING:
            self._size += 1
        node.value = value

    def get(self, prefix: str | IPNetwork, default: Any = None) -> V | Any:
        node = self._descend(as_network(prefix), create=False)
        if node is None or node.value is _MISSING:
            return default
        return node.value

    def __contains__(self, prefix: object) -> bool:
        node = self._descend(as_network(prefix), create=False)  # type: ignore[arg-type]
        return node is not None and node.value is not _MISSING

    def lookup(self, address: str | int | IPAddress) -> tuple[IPNetwork, V] | None:
        """Longest stored prefix containing ``address``, or None."""
        addr = as_address(address)
        width = addr.max_prefixlen
        value = int(addr)
        node = self._roots[addr.version]
        best_depth = -1
        best = None
        depth = 0
        while node is not None:
            if node.value is not _MISSING:
                best_depth, best = depth, node.value
            if depth == width:
                break
            node = node.children[_bit(value, width, depth)]
            depth += 1
        if best_depth < 0:
            return None
        return _make_network(addr.version, value, width, best_depth), best

    def covering(self, prefix: str | IPNetwork) -> list[tuple[IPNetwork, V]]:
        """All stored prefixes that contain ``prefix`` (itself included), shortest first."""
        net = as_network(prefix)
        width = net.max_prefixlen
        value = int(net.network_address)
        node = self._roots[net.version]
        found = []
        for depth in range(net.prefixlen + 1):
            if node.value is not _MISSING:
                found.append((_make_network(net.version, value, width, depth), node.value))
            if depth == net.prefixlen:
                break
            node = node.children[_bit(value, width, depth)]
            if node is None:
                break
        return found

    def partition(self, prefix: str | IPNetwork) -> list[tuple[V, int]]:
        """Split the addresses of ``prefix`` by their longest-prefix-match value.

        Returns (value, address count) pairs in address order, one per
        contiguous piece under a single matching entry. Addresses matching no
        entry are left out, so the counts can sum to less than the prefix size.
        """
        net = as_network(prefix)
        width = net.max_prefixlen
        value = int(net.network_address)
        inherited: Any = _MISSING
        node: _Node | None = self._roots[net.version]
        for depth in range(net.prefixlen):
            if node.value is not _MISSING:
                inherited = node.value
            node = node.children[_bit(value, width, depth)]
            if node is None:
                break
        out: list[tuple[V, int]] = []
        stack: list[tuple[_Node | None, int, Any]] = [(node, net.prefixlen, inherited)]
        while stack:
            cur, depth, inh = stack.pop()
            if cur is None:
                # no more specific entries below: the whole range keeps the inherited value
                if inh is not _MISSING:
                    out.append((inh, 1 << (width - depth)))
                continue
            if cur.value is not _MISSING:
                inh = cur.value
            if depth == width:
                if inh is not _MISSING:
                    out.append((inh, 1))
                continue
            stack.append((cur.children[1], depth + 1, inh))
            stack.append((cur.children[0], depth + 1, inh))
        return out

    def items(self) -> Iterator[tuple[IPNetwork, V]]:
        """Stored (prefix, value) pairs, IPv4 first, each family in pre-order."""
        for version, width in ((4, 32), (6, 128)):
            stack = [(self._roots[version], 0, 0)]
            while stack:
                node, depth, value = stack.pop()
                if node.value is not _MISSING:
                    yield _make_network(version, value, width, depth), node.value
                for b in (1, 0):
                    child = node.children[b]
                    if child is not None:
                        stack.append((child, depth + 1, value | (b << (width - 1 - depth))))


def _make_network(version: int, value: int, width: int, depth: int) -> IPNetwork:
    base = (value >> (width - depth)) << (width - depth) if depth else 0
    if version == 4:
        return ipaddress.IPv4Network((base, depth))
    return ipaddress.IPv6Network((base, depth))
